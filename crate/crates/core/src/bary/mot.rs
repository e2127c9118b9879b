//! Multi-marginal transport over an explicit cost table by delayed column
//! generation: the restricted master LP holds only generated tuples, and
//! pricing scans the whole table with the master's row duals.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lp::{Scalar, SparseLp};
use crate::tuples::decode;

/// Marginal constraints of the transport polytope.
pub(crate) enum Marginals<'a, T> {
    /// `m_i(P) = mu_i`.
    Fixed(&'a [Vec<T>]),
    /// Marginals are free probability vectors; the optimum is the least entry.
    Free,
}

pub(crate) struct MotOutcome<T> {
    pub value: T,
    /// `(lexicographic tuple index, mass)`, masses positive.
    pub plan: Vec<(usize, T)>,
}

const MAX_ROUNDS: usize = 10_000;

/// Cost of a tuple given its lexicographic index and decoded form.
pub(crate) type CostFn<'a, T> = &'a (dyn Fn(usize, &[usize]) -> T + Sync);

pub(crate) fn solve<T: Scalar>(shape: &[usize], costs: &[T], marginals: Marginals<'_, T>) -> Result<MotOutcome<T>> {
    solve_with(shape, costs.len(), &|idx, _| costs[idx].clone(), marginals)
}

/// Column generation over `total` tuples whose costs come from `cost`.
pub(crate) fn solve_with<T: Scalar>(shape: &[usize], total: usize, cost: CostFn<'_, T>, marginals: Marginals<'_, T>) -> Result<MotOutcome<T>> {
    let k = shape.len();
    let offsets: Vec<usize> = shape
        .iter()
        .scan(0, |acc, &s| {
            let o = *acc;
            *acc += s;
            Some(o)
        })
        .collect();
    let marg_rows: usize = shape.iter().sum();
    let free = matches!(marginals, Marginals::Free);
    let rows = marg_rows + usize::from(free);
    let row_of = |i: usize, j: usize| offsets[i] + j;

    let scale = (0..total)
        .into_par_iter()
        .map_init(|| vec![0; k], |t, idx| {
            decode(idx, shape, t);
            cost(idx, t).abs().to_f64_lossy()
        })
        .reduce(|| 0.0, f64::max);
    let price_tol = T::from_f64_lossy(1e-11 * (1.0 + scale)) * if T::feas_tol().is_zero() { T::zero() } else { T::one() };

    let mut columns: Vec<usize> = initial_columns(shape, total, cost, &marginals)?;
    let mut in_master = std::collections::HashSet::new();
    columns.retain(|c| in_master.insert(*c));
    let batch = (2 * rows).max(16);
    let mut rounds = 0;
    loop {
        rounds += 1;
        let mut lp = SparseLp::<T>::new(rows);
        match &marginals {
            Marginals::Fixed(mu) => {
                for (i, m) in mu.iter().enumerate() {
                    for (j, v) in m.iter().enumerate() {
                        lp.rhs[row_of(i, j)] = v.clone();
                    }
                }
            }
            Marginals::Free => {
                lp.rhs[marg_rows] = T::one();
            }
        }
        let mut t = vec![0; k];
        for &c in &columns {
            decode(c, shape, &mut t);
            lp.add_column(cost(c, &t), (0..k).map(|i| (row_of(i, t[i]), T::one())).collect());
        }
        if free {
            // mu_ij enters its marginal row; mu_0 is normalized, the rest follow.
            for i in 0..k {
                for j in 0..shape[i] {
                    let mut entries = vec![(row_of(i, j), -T::one())];
                    if i == 0 {
                        entries.push((marg_rows, T::one()));
                    }
                    lp.add_column(T::zero(), entries);
                }
            }
        }
        let sol = lp.solve()?;
        let y = &sol.duals;
        let reduced = |idx: usize, t: &mut [usize]| -> T {
            decode(idx, shape, t);
            let mut r = cost(idx, t);
            for i in 0..k {
                r = r - y[row_of(i, t[i])].clone();
            }
            r
        };
        // Each worker keeps at most a few batches of the most negative entries.
        let mut candidates: Vec<(T, usize)> = (0..total)
            .into_par_iter()
            .fold(
                || (vec![0; k], Vec::new()),
                |(mut t, mut acc): (Vec<usize>, Vec<(T, usize)>), idx| {
                    let r = reduced(idx, &mut t);
                    if r < -price_tol.clone() && !in_master.contains(&idx) {
                        acc.push((r, idx));
                        if acc.len() >= 4 * batch {
                            keep_best(&mut acc, batch);
                        }
                    }
                    (t, acc)
                },
            )
            .map(|(_, acc)| acc)
            .reduce(Vec::new, |mut a, b| {
                a.extend(b);
                if a.len() >= 4 * batch {
                    keep_best(&mut a, batch);
                }
                a
            });
        if candidates.is_empty() || rounds >= MAX_ROUNDS {
            if !candidates.is_empty() {
                return Err(Error::Lp("column generation did not converge".into()));
            }
            let plan = columns
                .iter()
                .zip(&sol.x)
                .filter(|(_, x)| x.is_positive())
                .map(|(&c, x)| (c, x.clone()))
                .collect();
            return Ok(MotOutcome {
                value: sol.objective,
                plan,
            });
        }
        keep_best(&mut candidates, batch);
        for (_, idx) in candidates {
            in_master.insert(idx);
            columns.push(idx);
        }
    }
}

/// Sorts by reduced cost, then index, and keeps the first `count`.
fn keep_best<T: Scalar>(v: &mut Vec<(T, usize)>, count: usize) {
    v.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal).then(a.1.cmp(&b.1)));
    v.truncate(count);
}

/// A feasible starting support: the north-west corner rule for fixed
/// marginals, the cheapest tuple for free ones.
fn initial_columns<T: Scalar>(shape: &[usize], total: usize, cost: CostFn<'_, T>, marginals: &Marginals<'_, T>) -> Result<Vec<usize>> {
    let k = shape.len();
    match marginals {
        Marginals::Free => {
            let best = (0..total)
                .into_par_iter()
                .map_init(|| vec![0; k], |t, idx| {
                    decode(idx, shape, t);
                    (cost(idx, t), idx)
                })
                .reduce_with(|a, b| match a.0.partial_cmp(&b.0) {
                    Some(std::cmp::Ordering::Greater) => b,
                    Some(std::cmp::Ordering::Less) => a,
                    _ => if a.1 <= b.1 { a } else { b },
                })
                .ok_or_else(|| Error::Input("empty tuple space".into()))?;
            Ok(vec![best.1])
        }
        Marginals::Fixed(mu) => {
            let mut left: Vec<Vec<T>> = mu.to_vec();
            let mut ptr = vec![0usize; k];
            let mut cols = Vec::new();
            let eps = T::from_f64_lossy(1e-14) * if T::feas_tol().is_zero() { T::zero() } else { T::one() };
            loop {
                // Skip exhausted atoms.
                for i in 0..k {
                    while ptr[i] < shape[i] && left[i][ptr[i]] <= eps {
                        ptr[i] += 1;
                    }
                }
                if ptr.iter().zip(shape).any(|(p, s)| p >= s) {
                    break;
                }
                let amount = (0..k)
                    .map(|i| left[i][ptr[i]].clone())
                    .fold(None, |m: Option<T>, v| Some(match m {
                        Some(m) if m < v => m,
                        _ => v,
                    }))
                    .expect("k >= 1");
                cols.push(ptr.iter().zip(shape).fold(0usize, |acc, (&j, &s)| acc * s + j));
                for i in 0..k {
                    left[i][ptr[i]] = left[i][ptr[i]].clone() - amount.clone();
                }
            }
            // Cover every atom at least once so phase one always has a start.
            let mut t = vec![0; k];
            for i in 0..k {
                for j in 0..shape[i] {
                    t.iter_mut().for_each(|v| *v = 0);
                    t[i] = j;
                    cols.push(t.iter().zip(shape).fold(0usize, |acc, (&j, &s)| acc * s + j));
                }
            }
            Ok(cols)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::ratio;
    use num_rational::BigRational;

    #[test]
    fn free_marginals_give_least_entry() {
        let costs = vec![3.0, 1.0, 2.0, 5.0];
        let out = solve(&[2, 2], &costs, Marginals::Free).unwrap();
        assert!((out.value - 1.0).abs() < 1e-12);
        assert_eq!(out.plan.len(), 1);
        assert_eq!(out.plan[0].0, 1);
    }

    #[test]
    fn fixed_marginals_match_assignment() {
        // Two-marginal uniform problem is an assignment problem.
        let costs = vec![4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0];
        let mu = vec![vec![1.0 / 3.0; 3], vec![1.0 / 3.0; 3]];
        let out = solve(&[3, 3], &costs, Marginals::Fixed(&mu)).unwrap();
        // Best permutation: (0,1),(1,0),(2,2) = 1 + 2 + 2 = 5.
        assert!((out.value - 5.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn exact_three_marginals() {
        let shape = [2, 2, 2];
        let costs: Vec<BigRational> = (0..8).map(|i| ratio(((i * 5) % 7) as i64, 3)).collect();
        let mu = vec![vec![ratio(1, 2), ratio(1, 2)]; 3];
        let out = solve(&shape, &costs, Marginals::Fixed(&mu)).unwrap();
        let f: Vec<f64> = costs.iter().map(|c| c.to_f64_lossy()).collect();
        let muf = vec![vec![0.5, 0.5]; 3];
        let outf = solve(&shape, &f, Marginals::Fixed(&muf)).unwrap();
        assert!((out.value.to_f64_lossy() - outf.value).abs() < 1e-12);
    }
}
