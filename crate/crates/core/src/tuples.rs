//! Mixed-radix enumeration of index tuples `(j_1, .., j_k)` in lexicographic
//! order (last index fastest).

/// Number of tuples for the given shape, or `None` on overflow.
pub fn tuple_count(shape: &[usize]) -> Option<u128> {
    shape
        .iter()
        .try_fold(1u128, |acc, &s| acc.checked_mul(s as u128))
}

/// Decodes the `index`-th tuple of `shape` in lexicographic order.
pub fn decode(mut index: usize, shape: &[usize], out: &mut [usize]) {
    for (slot, &s) in out.iter_mut().zip(shape).rev() {
        *slot = index % s;
        index /= s;
    }
}

/// Lexicographic rank of `tuple` within `shape`.
pub fn encode(tuple: &[usize], shape: &[usize]) -> usize {
    tuple
        .iter()
        .zip(shape)
        .fold(0usize, |acc, (&j, &s)| acc * s + j)
}

/// Advances `tuple` to its lexicographic successor. Returns `false` after the
/// last tuple (leaving `tuple` reset to all zeros).
pub fn advance(tuple: &mut [usize], shape: &[usize]) -> bool {
    for (slot, &s) in tuple.iter_mut().zip(shape).rev() {
        *slot += 1;
        if *slot < s {
            return true;
        }
        *slot = 0;
    }
    false
}

/// Iterator over all tuples of a shape.
#[derive(Debug, Clone)]
pub struct Tuples {
    shape: Vec<usize>,
    current: Option<Vec<usize>>,
}

impl Tuples {
    pub fn new(shape: &[usize]) -> Self {
        let current = if shape.contains(&0) {
            None
        } else {
            Some(vec![0; shape.len()])
        };
        Self {
            shape: shape.to_vec(),
            current,
        }
    }
}

impl Iterator for Tuples {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let cur = self.current.take()?;
        let mut next = cur.clone();
        if advance(&mut next, &self.shape) {
            self.current = Some(next);
        }
        Some(cur)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumerates_in_lexicographic_order() {
        let all: Vec<_> = Tuples::new(&[2, 3]).collect();
        assert_eq!(all.len(), 6);
        assert_eq!(all[0], vec![0, 0]);
        assert_eq!(all[1], vec![0, 1]);
        assert_eq!(all[5], vec![1, 2]);
        for (i, t) in all.iter().enumerate() {
            assert_eq!(encode(t, &[2, 3]), i);
            let mut out = vec![0; 2];
            decode(i, &[2, 3], &mut out);
            assert_eq!(&out, t);
        }
    }

    #[test]
    fn empty_shape_yields_one_tuple() {
        assert_eq!(Tuples::new(&[]).count(), 1);
        assert_eq!(Tuples::new(&[3, 0]).count(), 0);
        assert_eq!(tuple_count(&[10, 10, 10]), Some(1000));
    }
}
