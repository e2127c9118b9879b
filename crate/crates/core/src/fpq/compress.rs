//! Lossless reduction of an `F_{p,q}` instance.
//!
//! Constant coordinates are fixed at their common value, identical
//! coordinates are merged into one with a multiplicity (the norm becomes
//! `(sum_c m_c |z_c|^q)^{1/q}`), and identical points are merged by adding
//! their weights. Some minimizer of the original problem is constant on each
//! merged coordinate class, so the reduced optimum equals the original one.

use std::collections::{BTreeMap, HashMap};

use crate::embed::SparseVector;

/// Reduced instance in canonical column order.
#[derive(Debug, Clone)]
pub(crate) struct Reduced {
    pub pts: Vec<Vec<f64>>,
    pub w: Vec<f64>,
    pub mult: Vec<f64>,
    pub p: f64,
    pub q: f64,
}

/// How to rebuild a full-dimensional minimizer from a reduced one.
#[derive(Debug, Clone)]
pub(crate) enum ColumnSource {
    Constant(f64),
    Reduced(usize),
}

#[derive(Debug, Clone)]
pub(crate) struct Compression {
    pub reduced: Reduced,
    pub d: usize,
    /// Coordinates not listed are constant zero.
    pub columns: Vec<(usize, ColumnSource)>,
}

impl Compression {
    pub fn expand(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.d];
        for (c, src) in &self.columns {
            out[*c] = match *src {
                ColumnSource::Constant(v) => v,
                ColumnSource::Reduced(j) => y[j],
            };
        }
        out
    }

    /// Hashable identity of the reduced problem (bit patterns).
    pub fn key(&self, tol: f64) -> Vec<u64> {
        let r = &self.reduced;
        let mut key = vec![r.p.to_bits(), r.q.to_bits(), tol.to_bits(), r.pts.len() as u64];
        key.extend(r.w.iter().map(|w| w.to_bits()));
        for (c, m) in r.mult.iter().enumerate() {
            key.push(m.to_bits());
            key.extend(r.pts.iter().map(|x| x[c].to_bits()));
        }
        key
    }
}

fn canonical(v: f64) -> u64 {
    // Treat -0.0 and 0.0 alike.
    (v + 0.0).to_bits()
}

/// Reduces dense points; `points[i]` all have the same length.
pub(crate) fn compress_dense(points: &[Vec<f64>], weights: &[f64], p: f64, q: f64) -> Compression {
    let d = points.first().map_or(0, Vec::len);
    let columns: Vec<(usize, Vec<u64>)> = (0..d)
        .map(|c| (c, points.iter().map(|x| canonical(x[c])).collect()))
        .collect();
    build(points.len(), d, columns, weights, p, q)
}

/// Reduces sparse `{-1,0,1}` points of dimension `d`.
pub(crate) fn compress_sparse(points: &[&SparseVector], d: usize, weights: &[f64], p: f64, q: f64) -> Compression {
    let k = points.len();
    let zero = canonical(0.0);
    let mut triples: Vec<(usize, usize, i8)> = points
        .iter()
        .enumerate()
        .flat_map(|(i, x)| x.entries().iter().map(move |&(c, v)| (c, i, v)))
        .collect();
    triples.sort_unstable();
    let mut columns: Vec<(usize, Vec<u64>)> = Vec::new();
    for (c, i, v) in triples {
        if columns.last().is_none_or(|(last, _)| *last != c) {
            columns.push((c, vec![zero; k]));
        }
        columns.last_mut().expect("just pushed").1[i] = canonical(f64::from(v));
    }
    build(k, d, columns, weights, p, q)
}

fn build(k: usize, d: usize, columns: Vec<(usize, Vec<u64>)>, weights: &[f64], p: f64, q: f64) -> Compression {
    // Group non-constant columns by pattern, in sorted pattern order.
    let mut classes: BTreeMap<&[u64], usize> = BTreeMap::new();
    for (_, col) in &columns {
        if col.iter().any(|&v| v != col[0]) {
            *classes.entry(col.as_slice()).or_insert(0) += 1;
        }
    }
    let patterns: Vec<(&[u64], usize)> = classes.into_iter().collect();
    let index: HashMap<&[u64], usize> = patterns.iter().enumerate().map(|(j, (pat, _))| (*pat, j)).collect();

    // Merge identical rows on the reduced columns.
    let mut rows: Vec<(Vec<u64>, f64)> = Vec::new();
    let mut row_index: HashMap<Vec<u64>, usize> = HashMap::new();
    for i in 0..k {
        let row: Vec<u64> = patterns.iter().map(|(pat, _)| pat[i]).collect();
        match row_index.get(&row) {
            Some(&r) => rows[r].1 += weights[i],
            None => {
                row_index.insert(row.clone(), rows.len());
                rows.push((row, weights[i]));
            }
        }
    }
    rows.retain(|(_, w)| *w > 0.0);
    rows.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let reduced = Reduced {
        pts: rows
            .iter()
            .map(|(row, _)| row.iter().map(|&b| f64::from_bits(b)).collect())
            .collect(),
        w: rows.iter().map(|(_, w)| *w).collect(),
        mult: patterns.iter().map(|(_, m)| *m as f64).collect(),
        p,
        q,
    };
    let sources = columns
        .iter()
        .map(|(c, col)| {
            let src = match index.get(col.as_slice()) {
                Some(&j) => ColumnSource::Reduced(j),
                None => ColumnSource::Constant(f64::from_bits(col[0])),
            };
            (*c, src)
        })
        .collect();
    Compression {
        reduced,
        d,
        columns: sources,
    }
}
