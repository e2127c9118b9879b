//! Brute-force CHUB: minimize `F_{p,q}(x_{1,j_1}, ..., x_{k,j_k})` over all
//! `n^k` index tuples.
//!
//! Tuples are evaluated in parallel; the reduction keeps the minimum and the
//! lexicographically least tuple within tolerance of it, so results do not
//! depend on the partitioning.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::PointConfig;
use crate::error::{check_cap, input, Error, Result};
use crate::fpq::{fpq_closed_form_22_exact, fpq_value_sparse, rational_to_f64, FpqCache};
use crate::graph::{Graph, DEFAULT_ENUM_CAP};
use crate::tuples::{decode, tuple_count};

/// How tuple values were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChubMethod {
    /// `p = q = 2`: exact Gram-matrix formula per tuple.
    #[serde(rename = "closed-form-22")]
    ClosedForm22,
    /// One certified inner solve per distinct reduced problem.
    Enumeration,
    /// One certified inner solve per induced edge pattern of the source graph.
    EdgePattern,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChubResult {
    /// Upper bound on `F*`, attained at `argmin` up to the inner tolerance.
    pub value: f64,
    /// Certified lower bound on `F*`.
    pub lower_bound: f64,
    pub argmin: Vec<usize>,
    pub tolerance: f64,
    pub method: ChubMethod,
    pub tuples: u128,
    /// Inner solves actually performed.
    pub distinct_solves: usize,
    /// Per-tuple values in lexicographic order, when requested.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub table: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct ChubOptions {
    pub cap: u128,
    pub keep_table: bool,
    /// Source graph; when given (and matching the configuration) tuples are
    /// grouped by their induced edge pattern, on which the gadget values depend.
    pub graph: Option<Graph>,
    /// With `graph`: also identify patterns that differ by relabeling positions.
    pub symmetric: bool,
}

impl Default for ChubOptions {
    fn default() -> Self {
        ChubOptions {
            cap: DEFAULT_ENUM_CAP,
            keep_table: false,
            graph: None,
            symmetric: false,
        }
    }
}

pub fn solve_chub(config: &PointConfig, tol: f64) -> Result<ChubResult> {
    solve_chub_with(config, tol, &ChubOptions::default())
}

pub fn solve_chub_with(config: &PointConfig, tol: f64, opts: &ChubOptions) -> Result<ChubResult> {
    config.validate()?;
    if !(tol > 0.0 && tol.is_finite()) {
        return input(format!("tolerance must be positive, got {tol}"));
    }
    let shape = vec![config.n; config.k];
    let total = tuple_count(&shape).unwrap_or(u128::MAX);
    check_cap("tuple enumeration", total, opts.cap)?;
    let count = total as usize;

    if config.p == 2.0 && config.q == 2.0 {
        let values: Vec<(f64, f64)> = (0..count)
            .into_par_iter()
            .map_init(
                || vec![0; config.k],
                |t, idx| {
                    decode(idx, &shape, t);
                    let v = rational_to_f64(&fpq_closed_form_22_exact(&config.select(t).expect("tuple in range")));
                    (v, v)
                },
            )
            .collect();
        return Ok(reduce(values, &shape, tol, ChubMethod::ClosedForm22, count, opts.keep_table));
    }

    let inner = 0.5 * tol;
    let weights = vec![1.0; config.k];
    let evaluate = |t: &[usize], cache: Option<&FpqCache>| -> Result<(f64, f64)> {
        let pts = config.select(t)?;
        fpq_value_sparse(&pts, config.d, &weights, config.p, config.q, inner, cache).map_err(|e| with_tuple(e, t))
    };

    if let Some(g) = opts.graph.as_ref() {
        let oracle = PatternOracle::build(config, g, tol, opts.symmetric, opts.cap)?;
        let (value, lower, best) = oracle.minimum(tol);
        let mut argmin = vec![0; config.k];
        decode(best, &shape, &mut argmin);
        let table = opts.keep_table.then(|| {
            (0..count)
                .into_par_iter()
                .map_init(
                    || vec![0; config.k],
                    |t, idx| {
                        decode(idx, &shape, t);
                        oracle.value(t).0
                    },
                )
                .collect()
        });
        return Ok(ChubResult {
            value,
            lower_bound: lower,
            argmin,
            tolerance: tol,
            method: ChubMethod::EdgePattern,
            tuples: total,
            distinct_solves: oracle.distinct_solves(),
            table,
        });
    }

    let cache = FpqCache::new();
    let values: Vec<(f64, f64)> = (0..count)
        .into_par_iter()
        .map_init(
            || vec![0; config.k],
            |t, idx| {
                decode(idx, &shape, t);
                evaluate(t, Some(&cache))
            },
        )
        .collect::<Result<_>>()?;
    Ok(reduce(values, &shape, tol, ChubMethod::Enumeration, cache.len(), opts.keep_table))
}

/// Tuple values of a gadget configuration looked up by induced edge pattern.
///
/// Valid because every embedding assigns a regular graph's tuples values that
/// depend only on which position pairs are adjacent. With `symmetric`, patterns
/// are further identified up to relabeling of positions, which the embeddings
/// also respect (their groups are interchangeable by a coordinate permutation).
#[derive(Debug, Clone)]
pub struct PatternOracle {
    graph: Graph,
    k: usize,
    /// Raw pattern key to `(value, lower bound, least tuple index)`.
    values: HashMap<u64, (f64, f64, usize)>,
    solves: usize,
}

impl PatternOracle {
    pub fn build(config: &PointConfig, g: &Graph, tol: f64, symmetric: bool, cap: u128) -> Result<Self> {
        config.validate()?;
        if !(tol > 0.0 && tol.is_finite()) {
            return input(format!("tolerance must be positive, got {tol}"));
        }
        match &config.source {
            Some(src) if src.graph_hash == g.content_hash() => {}
            Some(_) => return input("the supplied graph does not match the configuration source"),
            None => return input("edge-pattern grouping needs a configuration built from a graph"),
        }
        if g.n() != config.n {
            return input("graph size does not match the configuration");
        }
        if config.k > 11 {
            return input("edge-pattern keys support at most 11 positions");
        }
        let shape = vec![config.n; config.k];
        let total = tuple_count(&shape).unwrap_or(u128::MAX);
        check_cap("tuple enumeration", total, cap)?;
        // Least tuple index of every raw pattern.
        let firsts: HashMap<u64, usize> = (0..total as usize)
            .into_par_iter()
            .fold(
                || (vec![0; config.k], HashMap::new()),
                |(mut t, mut map): (Vec<usize>, HashMap<u64, usize>), idx| {
                    decode(idx, &shape, &mut t);
                    map.entry(pattern_key(g, &t)).or_insert(idx);
                    (t, map)
                },
            )
            .map(|(_, m)| m)
            .reduce(HashMap::new, |mut a, b| {
                for (key, idx) in b {
                    let e = a.entry(key).or_insert(idx);
                    *e = (*e).min(idx);
                }
                a
            });
        let perms = if symmetric { pair_permutations(config.k) } else { Vec::new() };
        let class_of = |key: u64| if symmetric { canonical_key(key, &perms) } else { key };
        let mut reps: HashMap<u64, usize> = HashMap::new();
        for (&key, &idx) in &firsts {
            let e = reps.entry(class_of(key)).or_insert(idx);
            *e = (*e).min(idx);
        }
        let mut reps: Vec<(u64, usize)> = reps.into_iter().collect();
        reps.sort_by_key(|r| r.1);
        let inner = 0.5 * tol;
        let weights = vec![1.0; config.k];
        let solved: HashMap<u64, (f64, f64)> = reps
            .par_iter()
            .map(|&(class, idx)| {
                let mut t = vec![0; config.k];
                decode(idx, &shape, &mut t);
                let pts = config.select(&t)?;
                fpq_value_sparse(&pts, config.d, &weights, config.p, config.q, inner, None)
                    .map(|v| (class, v))
                    .map_err(|e| with_tuple(e, &t))
            })
            .collect::<Result<_>>()?;
        let values = firsts
            .into_iter()
            .map(|(key, idx)| {
                let (v, l) = solved[&class_of(key)];
                (key, (v, l, idx))
            })
            .collect();
        Ok(PatternOracle {
            graph: g.clone(),
            k: config.k,
            values,
            solves: solved.len(),
        })
    }

    /// `(value, lower bound)` of a tuple.
    pub fn value(&self, tuple: &[usize]) -> (f64, f64) {
        debug_assert_eq!(tuple.len(), self.k);
        let v = self.values[&pattern_key(&self.graph, tuple)];
        (v.0, v.1)
    }

    /// Least value, least lower bound, and the least tuple index whose value
    /// is within `tol / 2` of the least value.
    pub fn minimum(&self, tol: f64) -> (f64, f64, usize) {
        let value = self.values.values().map(|v| v.0).fold(f64::INFINITY, f64::min);
        let lower = self.values.values().map(|v| v.1).fold(f64::INFINITY, f64::min);
        let best = self
            .values
            .values()
            .filter(|v| v.0 <= value + 0.5 * tol)
            .map(|v| v.2)
            .min()
            .expect("nonempty tuple space");
        (value, lower, best)
    }

    /// Largest `value - lower bound` over all patterns.
    pub fn max_slack(&self) -> f64 {
        self.values.values().map(|v| v.0 - v.1).fold(0.0, f64::max)
    }

    pub fn distinct_patterns(&self) -> usize {
        self.values.len()
    }

    pub fn distinct_solves(&self) -> usize {
        self.solves
    }
}

/// Bit `r` is set when the `r`-th position pair (lexicographic) is adjacent.
pub fn pattern_key(g: &Graph, tuple: &[usize]) -> u64 {
    let mut key = 0u64;
    let mut bit = 0;
    for (a, &u) in tuple.iter().enumerate() {
        for &v in &tuple[a + 1..] {
            if g.has_edge(u, v) {
                key |= 1 << bit;
            }
            bit += 1;
        }
    }
    key
}

/// For every permutation of `k` positions, the image of each pair index.
fn pair_permutations(k: usize) -> Vec<Vec<usize>> {
    let index = |a: usize, b: usize| {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        a * (2 * k - a - 1) / 2 + (b - a - 1)
    };
    let mut perm: Vec<usize> = (0..k).collect();
    let mut out = Vec::new();
    loop {
        let mut map = Vec::with_capacity(k * k.saturating_sub(1) / 2);
        for a in 0..k {
            for b in a + 1..k {
                map.push(index(perm[a], perm[b]));
            }
        }
        out.push(map);
        // Next permutation in lexicographic order.
        let Some(i) = (1..k).rev().find(|&i| perm[i - 1] < perm[i]) else {
            break;
        };
        let j = (i..k).rev().find(|&j| perm[j] > perm[i - 1]).expect("successor exists");
        perm.swap(i - 1, j);
        perm[i..].reverse();
    }
    out
}

fn canonical_key(key: u64, perms: &[Vec<usize>]) -> u64 {
    perms
        .iter()
        .map(|map| {
            map.iter()
                .enumerate()
                .filter(|&(r, _)| key >> r & 1 == 1)
                .fold(0u64, |acc, (_, &img)| acc | 1 << img)
        })
        .min()
        .unwrap_or(key)
}

/// Adjacency of every position pair `a < b`, in lexicographic pair order.
pub fn edge_pattern(g: &Graph, tuple: &[usize]) -> Vec<bool> {
    let mut key = Vec::with_capacity(tuple.len() * tuple.len().saturating_sub(1) / 2);
    for (a, &u) in tuple.iter().enumerate() {
        for &v in &tuple[a + 1..] {
            key.push(g.has_edge(u, v));
        }
    }
    key
}

fn with_tuple(e: Error, t: &[usize]) -> Error {
    match e {
        Error::Solver { lower, upper, context } => Error::Solver {
            lower,
            upper,
            context: format!("{context}; tuple {t:?}"),
        },
        other => other,
    }
}

fn reduce(values: Vec<(f64, f64)>, shape: &[usize], tol: f64, method: ChubMethod, distinct: usize, keep: bool) -> ChubResult {
    let value = values.iter().map(|v| v.0).fold(f64::INFINITY, f64::min);
    let lower = values.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
    let best = values.iter().position(|v| v.0 <= value + 0.5 * tol).expect("nonempty tuple space");
    let mut argmin = vec![0; shape.len()];
    decode(best, shape, &mut argmin);
    ChubResult {
        value,
        lower_bound: lower,
        argmin,
        tolerance: tol,
        method,
        tuples: values.len() as u128,
        distinct_solves: distinct,
        table: keep.then(|| values.iter().map(|v| v.0).collect()),
    }
}

/// Exact `p = q = 2` optimum over all tuples and its least argmin.
pub fn solve_chub_exact_22(config: &PointConfig, cap: u128) -> Result<(BigRational, Vec<usize>)> {
    config.validate()?;
    let shape = vec![config.n; config.k];
    let total = tuple_count(&shape).unwrap_or(u128::MAX);
    check_cap("tuple enumeration", total, cap)?;
    (0..total as usize)
        .into_par_iter()
        .map_init(
            || vec![0; config.k],
            |t, idx| {
                decode(idx, &shape, t);
                (fpq_closed_form_22_exact(&config.select(t).expect("tuple in range")), idx)
            },
        )
        .reduce_with(|a, b| if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a })
        .map(|(v, idx)| {
            let mut t = vec![0; config.k];
            decode(idx, &shape, &mut t);
            (v, t)
        })
        .ok_or_else(|| Error::Input("empty tuple space".into()))
}

/// `D(k-1)^2 - (2/k) max_S |E(S)|` for the edge-indicator embedding of a
/// `D`-regular graph.
pub fn chub_closed_form_22(g: &Graph, k: usize, cap: u128) -> Result<BigRational> {
    let degree = g.require_regular()?;
    let max_edges = g.max_multiset_edges(k, cap)?;
    let k = k as i64;
    let m = degree as i64 * (k - 1) * (k - 1);
    Ok(BigRational::new(BigInt::from(m * k - 2 * max_edges as i64), BigInt::from(k)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::{embed_phi, embed_psi, embed_xi};
    use crate::graph::{complete, cycle, random_regular};
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn spec_examples_22() {
        let cfg = embed_phi(&complete(4), 3, 2.0, 2.0).unwrap();
        let res = solve_chub(&cfg, 1e-9).unwrap();
        assert!((res.value - 10.0).abs() < 1e-12);
        assert!(cfg.select(&res.argmin).is_ok());
        assert_eq!(solve_chub_exact_22(&cfg, DEFAULT_ENUM_CAP).unwrap().0, r(10, 1));

        let c5 = cycle(5).unwrap();
        let cfg = embed_phi(&c5, 3, 2.0, 2.0).unwrap();
        assert_eq!(solve_chub_exact_22(&cfg, DEFAULT_ENUM_CAP).unwrap().0, r(20, 3));
        assert!((solve_chub(&cfg, 1e-9).unwrap().value - 20.0 / 3.0).abs() < 1e-12);

        let empty = Graph::empty(4);
        let cfg = embed_phi(&empty, 3, 2.0, 2.0).unwrap();
        assert_eq!(solve_chub(&cfg, 1e-9).unwrap().value, 0.0);
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(chub_closed_form_22(&complete(4), 3, DEFAULT_ENUM_CAP).unwrap(), r(10, 1));
        assert_eq!(chub_closed_form_22(&cycle(4).unwrap(), 3, DEFAULT_ENUM_CAP).unwrap(), r(20, 3));
        assert_eq!(chub_closed_form_22(&complete(4), 4, DEFAULT_ENUM_CAP).unwrap(), r(24, 1));
        let bad = Graph::new(3, [(0, 1)]).unwrap();
        assert!(chub_closed_form_22(&bad, 3, DEFAULT_ENUM_CAP).is_err());
    }

    #[test]
    fn brute_force_matches_closed_form_on_random_regular() {
        for seed in 0..4 {
            let g = random_regular(8, 3, seed).unwrap();
            for k in [2, 3] {
                let cfg = embed_phi(&g, k, 2.0, 2.0).unwrap();
                let want = rational_to_f64(&chub_closed_form_22(&g, k, DEFAULT_ENUM_CAP).unwrap());
                let got = solve_chub(&cfg, 1e-9).unwrap().value;
                assert!((got - want).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn edge_pattern_mode_matches_enumeration() {
        let g = cycle(5).unwrap();
        let cases = [
            embed_phi(&g, 3, 1.5, 3.0).unwrap(),
            embed_xi(&g, 3, 2.0, f64::INFINITY).unwrap(),
            embed_psi(&complete(3), 2, 2.0, 1.0).unwrap(),
        ];
        for cfg in cases {
            let graph = if cfg.n == 5 { g.clone() } else { complete(3) };
            let opts = ChubOptions {
                keep_table: true,
                graph: Some(graph),
                ..Default::default()
            };
            let a = solve_chub_with(&cfg, 1e-7, &opts).unwrap();
            let b = solve_chub_with(&cfg, 1e-7, &ChubOptions { keep_table: true, ..Default::default() }).unwrap();
            assert_eq!(a.method, ChubMethod::EdgePattern);
            for (x, y) in a.table.unwrap().iter().zip(b.table.unwrap()) {
                assert!((x - y).abs() <= 1e-7, "{x} vs {y}");
            }
            assert!((a.value - b.value).abs() <= 1e-7);
        }
    }

    #[test]
    fn symmetric_patterns_match_raw_patterns() {
        let g = cycle(5).unwrap();
        let (h, k2) = complete(3).even_k_doubling(2).unwrap();
        let cases = [
            (embed_phi(&g, 4, 1.5, 3.0).unwrap(), g.clone(), 1e-6),
            (embed_xi(&g, 4, 2.0, f64::INFINITY).unwrap(), g.clone(), 1e-6),
            (embed_psi(&h, k2, 2.0, 1.0).unwrap(), h.clone(), 1e-2),
        ];
        for (cfg, graph, tol) in cases {
            let raw = ChubOptions {
                keep_table: true,
                graph: Some(graph.clone()),
                ..Default::default()
            };
            let sym = ChubOptions { symmetric: true, ..raw.clone() };
            let a = solve_chub_with(&cfg, tol, &raw).unwrap();
            let b = solve_chub_with(&cfg, tol, &sym).unwrap();
            assert!(b.distinct_solves < a.distinct_solves);
            for (x, y) in a.table.unwrap().iter().zip(b.table.unwrap()) {
                assert!((x - y).abs() <= tol, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn pair_permutations_are_bijections() {
        for k in 2..6 {
            let perms = pair_permutations(k);
            assert_eq!(perms.len(), (1..=k).product::<usize>());
            for map in &perms {
                let mut seen = map.clone();
                seen.sort_unstable();
                assert_eq!(seen, (0..k * (k - 1) / 2).collect::<Vec<_>>());
            }
            // A single edge has one class whatever its position.
            let classes: std::collections::HashSet<u64> = (0..k * (k - 1) / 2).map(|r| canonical_key(1 << r, &perms)).collect();
            assert_eq!(classes.len(), 1);
        }
    }

    #[test]
    fn permutation_invariance() {
        let g = cycle(5).unwrap();
        let cfg = embed_phi(&g, 3, 1.0, 3.0).unwrap();
        let base = solve_chub(&cfg, 1e-7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut shuffled = cfg.clone();
        let mut perms = Vec::new();
        for group in shuffled.points.iter_mut() {
            let mut perm: Vec<usize> = (0..group.len()).collect();
            perm.shuffle(&mut rng);
            *group = perm.iter().map(|&j| group[j].clone()).collect();
            perms.push(perm);
        }
        let res = solve_chub(&shuffled, 1e-7).unwrap();
        assert!((res.value - base.value).abs() <= 1e-7);
        // The new argmin maps back to an optimal original tuple.
        let original: Vec<usize> = res.argmin.iter().zip(&perms).map(|(&j, p)| p[j]).collect();
        let pts = cfg.select(&original).unwrap();
        let v = crate::fpq::fpq_value_sparse(&pts, cfg.d, &[1.0; 3], 1.0, 3.0, 1e-8, None).unwrap().0;
        assert!((v - base.value).abs() <= 1e-7);
    }

    #[test]
    fn cap_is_enforced() {
        let cfg = embed_phi(&complete(4), 3, 2.0, 2.0).unwrap();
        let opts = ChubOptions {
            cap: 10,
            ..Default::default()
        };
        assert!(matches!(solve_chub_with(&cfg, 1e-9, &opts), Err(Error::Resource { .. })));
    }
}
