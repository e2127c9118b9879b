//! Graph-to-point embeddings (`phi`, `psi`, `xi`) producing `{-1,0,1}`-valued
//! gadget points, and `(k,s,t)`-collections of binary vectors.
//!
//! Group indices `i, l, l'` are 0-based in the API. Coordinates are laid out
//! as `(l, u, l', u')` in lexicographic order with `l < l'`; `psi` appends the
//! sign `s` (`+1` before `-1`) as the fastest-varying component.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{input, Result};
use crate::graph::{binomial, Graph};

/// Which `(p, q)` family a configuration targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    #[serde(rename = "Q22")]
    Q22,
    /// `q` strictly between 1 and infinity.
    #[serde(rename = "QIN")]
    Qin,
    #[serde(rename = "Q1")]
    Q1,
    #[serde(rename = "QINF")]
    Qinf,
}

impl Regime {
    pub fn classify(p: f64, q: f64) -> Regime {
        if q.is_infinite() {
            Regime::Qinf
        } else if q == 1.0 {
            Regime::Q1
        } else if p == 2.0 && q == 2.0 {
            Regime::Q22
        } else {
            Regime::Qin
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Embedding {
    Phi,
    Psi,
    Xi,
}

impl Embedding {
    /// Embedding used for a given `q`: `psi` for `q = 1`, `xi` for `q = inf`,
    /// `phi` otherwise.
    pub fn for_q(q: f64) -> Embedding {
        if q.is_infinite() {
            Embedding::Xi
        } else if q == 1.0 {
            Embedding::Psi
        } else {
            Embedding::Phi
        }
    }
}

/// Sparse `{-1,0,1}` vector: sorted `(coordinate, value)` pairs with nonzero values.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SparseVector {
    entries: Vec<(usize, i8)>,
}

impl SparseVector {
    /// Builds from arbitrary pairs; zeros are dropped, duplicates rejected.
    pub fn from_pairs(mut pairs: Vec<(usize, i8)>) -> Result<Self> {
        pairs.retain(|&(_, v)| v != 0);
        pairs.sort_unstable_by_key(|&(c, _)| c);
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
            return input("duplicate coordinate in sparse vector");
        }
        Ok(Self { entries: pairs })
    }

    pub fn from_dense(values: &[i8]) -> Self {
        Self {
            entries: values
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0)
                .map(|(c, &v)| (c, v))
                .collect(),
        }
    }

    pub fn entries(&self) -> &[(usize, i8)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, coord: usize) -> i8 {
        self.entries
            .binary_search_by_key(&coord, |&(c, _)| c)
            .map_or(0, |pos| self.entries[pos].1)
    }

    pub fn to_dense(&self, d: usize) -> Vec<f64> {
        let mut out = vec![0.0; d];
        for &(c, v) in &self.entries {
            out[c] = f64::from(v);
        }
        out
    }

    pub fn dot(&self, other: &SparseVector) -> i64 {
        let (mut a, mut b, mut acc) = (0, 0, 0i64);
        while a < self.entries.len() && b < other.entries.len() {
            let (ca, va) = self.entries[a];
            let (cb, vb) = other.entries[b];
            match ca.cmp(&cb) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    acc += i64::from(va) * i64::from(vb);
                    a += 1;
                    b += 1;
                }
            }
        }
        acc
    }

    pub fn norm_sq(&self) -> i64 {
        self.entries.iter().map(|&(_, v)| i64::from(v) * i64::from(v)).sum()
    }

    pub fn norm_l1(&self) -> i64 {
        self.entries.iter().map(|&(_, v)| i64::from(v.abs())).sum()
    }

    pub fn max_coord(&self) -> Option<usize> {
        self.entries.last().map(|&(c, _)| c)
    }
}

/// Where a point configuration came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Source {
    pub graph_hash: String,
    pub embedding: Embedding,
}

/// `k` groups of `n` points in `{-1,0,1}^d` together with the target `(p, q)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointConfig {
    pub p: f64,
    #[serde(with = "crate::qexp")]
    pub q: f64,
    pub k: usize,
    pub n: usize,
    pub d: usize,
    pub regime: Regime,
    /// `points[i][j]` is `x_{i,j}`.
    pub points: Vec<Vec<SparseVector>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<Source>,
}

impl PointConfig {
    pub fn new(p: f64, q: f64, d: usize, points: Vec<Vec<SparseVector>>) -> Result<Self> {
        check_exponents(p, q)?;
        let k = points.len();
        let n = points.first().map_or(0, Vec::len);
        let cfg = Self {
            p,
            q,
            k,
            n,
            d,
            regime: Regime::classify(p, q),
            points,
            source: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        check_exponents(self.p, self.q)?;
        if self.points.len() != self.k {
            return input(format!("expected {} groups, found {}", self.k, self.points.len()));
        }
        for (i, group) in self.points.iter().enumerate() {
            if group.len() != self.n {
                return input(format!("group {i} has {} points, expected {}", group.len(), self.n));
            }
            for point in group {
                if point.entries.iter().any(|&(_, v)| !(-1..=1).contains(&v)) {
                    return input("point entries must lie in {-1,0,1}");
                }
                if point.max_coord().is_some_and(|c| c >= self.d) {
                    return input("point coordinate exceeds dimension");
                }
                if point.entries.windows(2).any(|w| w[0].0 >= w[1].0) {
                    return input("sparse point entries must be strictly increasing");
                }
            }
        }
        if self.regime != Regime::classify(self.p, self.q) {
            return input("regime does not match (p, q)");
        }
        Ok(())
    }

    pub fn point(&self, group: usize, index: usize) -> &SparseVector {
        &self.points[group][index]
    }

    /// The points `(x_{1,j_1}, .., x_{k,j_k})` selected by an index tuple.
    pub fn select(&self, tuple: &[usize]) -> Result<Vec<&SparseVector>> {
        if tuple.len() != self.k {
            return input(format!("tuple has length {}, expected {}", tuple.len(), self.k));
        }
        tuple
            .iter()
            .enumerate()
            .map(|(i, &j)| {
                self.points[i]
                    .get(j)
                    .ok_or_else(|| crate::Error::Input(format!("index {j} out of range in group {i}")))
            })
            .collect()
    }

    pub fn with_exponents(mut self, p: f64, q: f64) -> Result<Self> {
        check_exponents(p, q)?;
        self.p = p;
        self.q = q;
        self.regime = Regime::classify(p, q);
        Ok(self)
    }

    /// `p`-th power of the `l_q` diameter of all points.
    pub fn diameter_pq(&self) -> f64 {
        let all: Vec<&SparseVector> = self.points.iter().flatten().collect();
        let mut best = 0.0f64;
        for (a, x) in all.iter().enumerate() {
            for y in &all[a + 1..] {
                let diff = sparse_diff(x, y);
                best = best.max(crate::fpq::norm_q(&diff, self.q));
            }
        }
        best.powf(self.p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("point config serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn sparse_diff(x: &SparseVector, y: &SparseVector) -> Vec<f64> {
    let mut map: BTreeMap<usize, f64> = BTreeMap::new();
    for &(c, v) in x.entries() {
        *map.entry(c).or_default() += f64::from(v);
    }
    for &(c, v) in y.entries() {
        *map.entry(c).or_default() -= f64::from(v);
    }
    map.into_values().collect()
}

pub(crate) fn check_exponents(p: f64, q: f64) -> Result<()> {
    if !(p.is_finite() && p >= 1.0) {
        return input(format!("p must be a finite real >= 1, got {p}"));
    }
    if q.is_nan() || q < 1.0 {
        return input(format!("q must lie in [1, inf], got {q}"));
    }
    Ok(())
}

/// Coordinate layout for tuples `(l, u, l', u')`, `l < l'`, in lexicographic order.
#[derive(Debug, Clone)]
pub struct PairLayout {
    k: usize,
    n: usize,
    offsets: Vec<usize>,
}

impl PairLayout {
    pub fn new(k: usize, n: usize) -> Self {
        let mut offsets = Vec::with_capacity(k + 1);
        let mut acc = 0;
        for l in 0..k {
            offsets.push(acc);
            acc += n * (k - 1 - l) * n;
        }
        offsets.push(acc);
        Self { k, n, offsets }
    }

    pub fn dim(&self) -> usize {
        self.offsets[self.k]
    }

    #[inline]
    pub fn index(&self, l: usize, u: usize, lp: usize, up: usize) -> usize {
        debug_assert!(l < lp && lp < self.k && u < self.n && up < self.n);
        self.offsets[l] + u * (self.k - 1 - l) * self.n + (lp - l - 1) * self.n + up
    }

    pub fn decode(&self, index: usize) -> (usize, usize, usize, usize) {
        let l = self.offsets.partition_point(|&o| o <= index) - 1;
        let rest = index - self.offsets[l];
        let width = (self.k - 1 - l) * self.n;
        let u = rest / width;
        let rest = rest % width;
        (l, u, l + 1 + rest / self.n, rest % self.n)
    }
}

/// Sign `(-1)^{|{1..i} \ {l, l'}|}` with all three arguments 1-based.
pub fn tau(l: usize, lp: usize, i: usize) -> i8 {
    let removed = usize::from(l <= i) + usize::from(lp <= i);
    if (i - removed).is_multiple_of(2) {
        1
    } else {
        -1
    }
}

fn embedding_config(
    g: &Graph,
    k: usize,
    p: f64,
    q: f64,
    d: usize,
    points: Vec<Vec<SparseVector>>,
    embedding: Embedding,
) -> Result<PointConfig> {
    let mut cfg = PointConfig::new(p, q, d, points)?;
    cfg.k = k;
    cfg.n = g.n();
    cfg.source = Some(Source {
        graph_hash: g.content_hash(),
        embedding,
    });
    Ok(cfg)
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return input("k must be at least 1");
    }
    Ok(())
}

/// Edge-indicator embedding: `<phi(i,v), phi(i',v')> = 1[(v,v') in E]` for
/// `i != i'` and `|phi(i,v)|^2 = D(k-1)`.
pub fn embed_phi(g: &Graph, k: usize, p: f64, q: f64) -> Result<PointConfig> {
    check_k(k)?;
    g.require_regular()?;
    let n = g.n();
    let layout = PairLayout::new(k, n);
    let points = (0..k)
        .map(|i| {
            (0..n)
                .map(|v| {
                    let mut entries = Vec::new();
                    for l in 0..i {
                        for &u in g.neighbors(v) {
                            entries.push((layout.index(l, u, i, v), 1));
                        }
                    }
                    for lp in i + 1..k {
                        for &up in g.neighbors(v) {
                            entries.push((layout.index(i, v, lp, up), 1));
                        }
                    }
                    entries.sort_unstable();
                    SparseVector { entries }
                })
                .collect()
        })
        .collect();
    embedding_config(g, k, p, q, layout.dim(), points, Embedding::Phi)
}

/// Signed embedding for `q = 1`; requires even `k`.
pub fn embed_psi(g: &Graph, k: usize, p: f64, q: f64) -> Result<PointConfig> {
    check_k(k)?;
    if k % 2 == 1 {
        return input(format!("psi embedding needs even k, got {k}"));
    }
    g.require_regular()?;
    let n = g.n();
    let layout = PairLayout::new(k, n);
    let points = (0..k)
        .map(|i| {
            (0..n)
                .map(|v| {
                    let mut entries = Vec::new();
                    for l in 0..k {
                        for lp in l + 1..k {
                            for u in 0..n {
                                for up in 0..n {
                                    let base = 2 * layout.index(l, u, lp, up);
                                    let unsigned = if i != l && i != lp {
                                        tau(l + 1, lp + 1, i + 1)
                                    } else if i == l && v == u {
                                        1
                                    } else if i == lp && v == up {
                                        if g.has_edge(u, up) {
                                            1
                                        } else {
                                            -1
                                        }
                                    } else {
                                        0
                                    };
                                    if unsigned != 0 {
                                        // The tau entries do not depend on s; the
                                        // group-membership entries flip with s.
                                        let flips = i == l || i == lp;
                                        entries.push((base, unsigned));
                                        entries.push((base + 1, if flips { -unsigned } else { unsigned }));
                                    }
                                }
                            }
                        }
                    }
                    entries.sort_unstable();
                    SparseVector { entries }
                })
                .collect()
        })
        .collect();
    embedding_config(g, k, p, q, 2 * layout.dim(), points, Embedding::Psi)
}

/// Signed embedding for `q = inf`; requires `n >= 3`.
pub fn embed_xi(g: &Graph, k: usize, p: f64, q: f64) -> Result<PointConfig> {
    check_k(k)?;
    let n = g.n();
    if n < 3 {
        return input(format!("xi embedding needs n >= 3, got {n}"));
    }
    let layout = PairLayout::new(k, n);
    let points = (0..k)
        .map(|i| {
            (0..n)
                .map(|v| {
                    let mut entries = Vec::new();
                    for l in 0..i {
                        for u in 0..n {
                            entries.push((layout.index(l, u, i, v), 1));
                        }
                    }
                    for lp in i + 1..k {
                        for up in 0..n {
                            let sign = if g.has_edge(v, up) { 1 } else { -1 };
                            entries.push((layout.index(i, v, lp, up), sign));
                        }
                    }
                    entries.sort_unstable();
                    SparseVector { entries }
                })
                .collect()
        })
        .collect();
    embedding_config(g, k, p, q, layout.dim(), points, Embedding::Xi)
}

/// Embedding selected by `q` (see [`Embedding::for_q`]).
pub fn embed(g: &Graph, k: usize, p: f64, q: f64) -> Result<PointConfig> {
    match Embedding::for_q(q) {
        Embedding::Phi => embed_phi(g, k, p, q),
        Embedding::Psi => embed_psi(g, k, p, q),
        Embedding::Xi => embed_xi(g, k, p, q),
    }
}

/// `k` binary vectors in `{0,1}^d`, stored as sorted supports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Collection {
    pub d: usize,
    pub supports: Vec<Vec<usize>>,
}

/// Outcome of checking the four `(k,s,t)`-collection conditions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollectionCheck {
    pub ok: bool,
    pub s: usize,
    pub t: usize,
    pub violations: Vec<String>,
}

/// Checks: equal support sizes `s`; pairwise inner products in `{0,1}` with
/// `t` ones; every coordinate nonzero in at most two vectors.
pub fn verify_collection(d: usize, vectors: &[SparseVector]) -> Result<CollectionCheck> {
    let c = Collection::from_sparse(d, vectors)?;
    Ok(c.check())
}

impl Collection {
    pub fn from_sparse(d: usize, vectors: &[SparseVector]) -> Result<Self> {
        let mut supports = Vec::with_capacity(vectors.len());
        for v in vectors {
            if v.entries.iter().any(|&(_, x)| x != 1) {
                return input("collection vectors must be binary");
            }
            if v.max_coord().is_some_and(|c| c >= d) {
                return input("coordinate exceeds dimension");
            }
            supports.push(v.entries.iter().map(|&(c, _)| c).collect());
        }
        Ok(Self { d, supports })
    }

    pub fn k(&self) -> usize {
        self.supports.len()
    }

    pub fn to_sparse(&self) -> Vec<SparseVector> {
        self.supports
            .iter()
            .map(|s| SparseVector {
                entries: s.iter().map(|&c| (c, 1)).collect(),
            })
            .collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        self.to_sparse().iter().map(|v| v.to_dense(self.d)).collect()
    }

    fn overlap(&self, a: usize, b: usize) -> usize {
        let sb: BTreeSet<_> = self.supports[b].iter().collect();
        self.supports[a].iter().filter(|c| sb.contains(c)).count()
    }

    fn owners(&self) -> BTreeMap<usize, Vec<usize>> {
        let mut owners: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, s) in self.supports.iter().enumerate() {
            for &c in s {
                owners.entry(c).or_default().push(i);
            }
        }
        owners
    }

    pub fn check(&self) -> CollectionCheck {
        let mut violations = Vec::new();
        let s = self.supports.first().map_or(0, Vec::len);
        for (i, sup) in self.supports.iter().enumerate() {
            if sup.len() != s {
                violations.push(format!("vector {i} has support {} != {s}", sup.len()));
            }
        }
        let mut t = 0;
        for a in 0..self.k() {
            for b in a + 1..self.k() {
                match self.overlap(a, b) {
                    0 => {}
                    1 => t += 1,
                    m => violations.push(format!("vectors {a},{b} share {m} coordinates")),
                }
            }
        }
        for (c, owners) in self.owners() {
            if owners.len() > 2 {
                violations.push(format!("coordinate {c} is nonzero in {} vectors", owners.len()));
            }
        }
        CollectionCheck {
            ok: violations.is_empty(),
            s,
            t,
            violations,
        }
    }

    /// The `k` points of a `phi` configuration at an index tuple.
    pub fn from_config_tuple(cfg: &PointConfig, tuple: &[usize]) -> Result<Self> {
        let pts: Vec<SparseVector> = cfg.select(tuple)?.into_iter().cloned().collect();
        Self::from_sparse(cfg.d, &pts)
    }

    /// Builds a collection whose overlapping pairs are exactly `pattern`:
    /// one shared coordinate per listed pair, then private coordinates to
    /// bring every support up to `s`.
    pub fn from_pattern(k: usize, s: usize, pattern: &[(usize, usize)]) -> Result<Self> {
        let mut supports = vec![Vec::new(); k];
        let mut next = 0;
        let mut seen = BTreeSet::new();
        for &(a, b) in pattern {
            let (a, b) = (a.min(b), a.max(b));
            if a == b || b >= k || !seen.insert((a, b)) {
                return input(format!("invalid pair ({a},{b}) in pattern"));
            }
            supports[a].push(next);
            supports[b].push(next);
            next += 1;
        }
        for (i, sup) in supports.iter_mut().enumerate() {
            if sup.len() > s {
                return input(format!("vector {i} needs {} shared coordinates but s={s}", sup.len()));
            }
            while sup.len() < s {
                sup.push(next);
                next += 1;
            }
        }
        Ok(Self { d: next, supports })
    }

    /// Relabels coordinates by `perm` (a permutation of `0..new_d` restricted
    /// to the used coordinates) into dimension `new_d >= d`.
    pub fn relabeled(&self, new_d: usize, perm: &[usize]) -> Result<Self> {
        if new_d < self.d || perm.len() < self.d {
            return input("relabeling must cover every coordinate");
        }
        let supports = self
            .supports
            .iter()
            .map(|s| {
                let mut out: Vec<usize> = s.iter().map(|&c| perm[c]).collect();
                out.sort_unstable();
                out
            })
            .collect();
        Ok(Self { d: new_d, supports })
    }

    pub fn reordered(&self, order: &[usize]) -> Self {
        Self {
            d: self.d,
            supports: order.iter().map(|&i| self.supports[i].clone()).collect(),
        }
    }
}

/// A `(k, D(k-1), C(k,2))`-collection: one shared coordinate per pair, padded
/// with `(D-1)(k-1)` private ones per vector.
pub fn canonical_clique_collection(k: usize, degree: usize) -> Result<Collection> {
    if k < 2 || degree < 1 {
        return input(format!("need k >= 2 and D >= 1, got k={k}, D={degree}"));
    }
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|a| (a + 1..k).map(move |b| (a, b))).collect();
    let c = Collection::from_pattern(k, degree * (k - 1), &pairs)?;
    debug_assert_eq!(c.d as u128, binomial(k as u128, 2) + (k * (degree - 1) * (k - 1)) as u128);
    Ok(c)
}

/// Makes one more pair overlap: the first disjoint pair `(a, b)` gets a shared
/// coordinate by moving one private coordinate of `a` onto a private
/// coordinate of `b`. Support sizes are unchanged.
pub fn add_edge_move(c: &Collection) -> Result<Collection> {
    let check = c.check();
    if !check.ok {
        return input(format!("not a collection: {}", check.violations.join("; ")));
    }
    let k = c.k();
    if check.t as u128 >= binomial(k as u128, 2) {
        return input("collection already has every pair overlapping");
    }
    if check.s + 1 < k {
        return input(format!("need s >= k-1, got s={} k={k}", check.s));
    }
    let owners = c.owners();
    let private = |i: usize| {
        c.supports[i]
            .iter()
            .copied()
            .find(|coord| owners[coord].len() == 1)
    };
    let (a, b) = (0..k)
        .flat_map(|a| (a + 1..k).map(move |b| (a, b)))
        .find(|&(a, b)| c.overlap(a, b) == 0)
        .expect("t < C(k,2) leaves a disjoint pair");
    let (from, to) = match (private(a), private(b)) {
        (Some(x), Some(y)) => (x, y),
        _ => return input("no private coordinate available"),
    };
    let mut out = c.clone();
    let sup = &mut out.supports[a];
    sup.retain(|&x| x != from);
    sup.push(to);
    sup.sort_unstable();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{complete, cycle, DEFAULT_ENUM_CAP};

    #[test]
    fn layout_round_trips() {
        let layout = PairLayout::new(4, 3);
        assert_eq!(layout.dim(), 6 * 9);
        let mut seen = 0;
        for l in 0..4 {
            for u in 0..3 {
                for lp in l + 1..4 {
                    for up in 0..3 {
                        let idx = layout.index(l, u, lp, up);
                        assert_eq!(idx, seen, "layout must be lexicographic");
                        assert_eq!(layout.decode(idx), (l, u, lp, up));
                        seen += 1;
                    }
                }
            }
        }
    }

    #[test]
    fn phi_examples() {
        let k4 = complete(4);
        let cfg = embed_phi(&k4, 3, 2.0, 2.0).unwrap();
        assert_eq!(cfg.d, 48);
        for i in 0..3 {
            for v in 0..4 {
                assert_eq!(cfg.point(i, v).norm_sq(), 6);
                for ip in 0..3 {
                    for vp in 0..4 {
                        if i != ip && v != vp {
                            assert_eq!(cfg.point(i, v).dot(cfg.point(ip, vp)), 1);
                        }
                    }
                }
            }
        }

        let c5 = cycle(5).unwrap();
        let cfg = embed_phi(&c5, 2, 2.0, 2.0).unwrap();
        assert_eq!(cfg.d, 25);
        assert_eq!(cfg.point(0, 0).dot(cfg.point(1, 1)), 1);
        assert_eq!(cfg.point(0, 0).dot(cfg.point(1, 2)), 0);

        let empty = Graph::empty(3);
        let cfg = embed_phi(&empty, 2, 2.0, 2.0).unwrap();
        assert!(cfg.points.iter().flatten().all(|p| p.nnz() == 0));

        let path = Graph::new(3, [(0, 1), (1, 2)]).unwrap();
        assert!(embed_phi(&path, 2, 2.0, 2.0).is_err());
    }

    #[test]
    fn tau_examples() {
        assert_eq!(tau(1, 2, 3), -1);
        for k in [2usize, 4, 6, 8] {
            for l in 1..=k {
                for lp in l + 1..=k {
                    let sum: i32 = (1..=k)
                        .filter(|&i| i != l && i != lp)
                        .map(|i| i32::from(tau(l, lp, i)))
                        .sum();
                    assert_eq!(sum, 0, "k={k} l={l} l'={lp}");
                }
            }
        }
        // Odd k breaks the cancellation.
        let sum: i32 = [3].iter().map(|&i| i32::from(tau(1, 2, i))).sum();
        assert_ne!(sum, 0);
    }

    #[test]
    fn psi_examples() {
        let k4 = complete(4);
        let cfg = embed_psi(&k4, 4, 1.0, 1.0).unwrap();
        assert_eq!(cfg.d, 192);
        for i in 0..4 {
            for v in 0..4 {
                assert_eq!(cfg.point(i, v).norm_l1(), 120);
            }
        }
        assert!(embed_psi(&k4, 3, 1.0, 1.0).is_err());
    }

    #[test]
    fn xi_examples() {
        let c5 = cycle(5).unwrap();
        let cfg = embed_xi(&c5, 3, 1.0, f64::INFINITY).unwrap();
        let layout = PairLayout::new(3, 5);
        let coord = layout.index(0, 0, 1, 2);
        assert_eq!(cfg.point(0, 0).get(coord), -1);
        assert_eq!(cfg.point(1, 2).get(coord), 1);

        let cfg2 = embed_xi(&c5, 2, 1.0, f64::INFINITY).unwrap();
        for v in 0..5 {
            for vp in 0..5 {
                let a = cfg2.point(0, v).to_dense(cfg2.d);
                let b = cfg2.point(1, vp).to_dense(cfg2.d);
                let dist = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                assert!(dist >= 1.0);
            }
        }
        assert!(embed_xi(&complete(2), 2, 1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn collections_from_phi() {
        let c5 = cycle(5).unwrap();
        let cfg = embed_phi(&c5, 3, 2.0, 2.0).unwrap();
        let c = Collection::from_config_tuple(&cfg, &[0, 1, 2]).unwrap();
        let check = c.check();
        assert!(check.ok);
        assert_eq!((check.s, check.t), (4, 2));
        let moved = add_edge_move(&c).unwrap();
        let check = moved.check();
        assert!(check.ok, "{:?}", check.violations);
        assert_eq!((check.s, check.t), (4, 3));
        assert!(add_edge_move(&moved).is_err());
        let _ = DEFAULT_ENUM_CAP;
    }

    #[test]
    fn canonical_collections() {
        let c = canonical_clique_collection(2, 1).unwrap();
        assert_eq!(c.d, 1);
        assert_eq!(c.supports, vec![vec![0], vec![0]]);
        for (k, deg, d, s, t) in [(3, 2, 9, 4, 3), (4, 3, 30, 9, 6)] {
            let c = canonical_clique_collection(k, deg).unwrap();
            assert_eq!(c.d, d);
            let check = c.check();
            assert!(check.ok);
            assert_eq!((check.s, check.t), (s, t));
        }
    }

    #[test]
    fn identical_vectors_are_not_a_collection() {
        let v = SparseVector::from_dense(&[1, 1, 0]);
        let check = verify_collection(3, &[v.clone(), v.clone(), v]).unwrap();
        assert!(!check.ok);
        let bad = SparseVector::from_dense(&[1, -1]);
        assert!(verify_collection(2, &[bad]).is_err());
    }

    #[test]
    fn edge_move_from_near_clique() {
        let full = canonical_clique_collection(4, 3).unwrap();
        // Drop the shared coordinate of the last pair by giving vector 3 a
        // fresh private coordinate instead.
        let shared = full.supports[2]
            .iter()
            .copied()
            .find(|c| full.supports[3].contains(c))
            .unwrap();
        let mut c = full.clone();
        c.d += 1;
        c.supports[3].retain(|&x| x != shared);
        c.supports[3].push(full.d);
        assert_eq!(c.check().t, 5);
        let moved = add_edge_move(&c).unwrap();
        let check = moved.check();
        assert!(check.ok);
        assert_eq!(check.t, 6);
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = embed_xi(&cycle(5).unwrap(), 2, 1.0, f64::INFINITY).unwrap();
        let text = cfg.to_json();
        assert!(text.contains("\"q\":\"inf\""));
        assert!(text.contains("\"regime\":\"QINF\""));
        assert_eq!(PointConfig::from_json(&text).unwrap(), cfg);
    }
}
