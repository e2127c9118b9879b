//! The inner hub problem `F_{p,q}(z_1, ..., z_k) = min_y sum_i w_i ||z_i - y||_q^p`.
//!
//! Every solve returns a certified pair `lower_bound <= value` with
//! `value - lower_bound <= tolerance`. Instances are first reduced losslessly
//! (see [`compress`]); closed forms are used where they exist.

mod compress;
mod polyhedral;
mod smooth;

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::embed::{PairLayout, PointConfig, SparseVector};
use crate::error::{input, Result};

use compress::{compress_dense, compress_sparse, Compression, Reduced};

/// Which algorithm produced a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Trivial,
    Pair,
    #[serde(rename = "closed-form-22")]
    ClosedForm22,
    Weiszfeld,
    Lbfgs,
    #[serde(rename = "coordinate-q1")]
    CoordinateQ1,
    LpQinf,
    #[serde(rename = "cutting-plane-q1")]
    CuttingPlaneQ1,
    CuttingPlaneQinf,
}

/// `||z||_q`.
pub fn norm_q(x: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        x.iter().fold(0.0, |m, v| m.max(v.abs()))
    } else if q == 1.0 {
        x.iter().map(|v| v.abs()).sum()
    } else if q == 2.0 {
        x.iter().map(|v| v * v).sum::<f64>().sqrt()
    } else {
        x.iter().map(|v| v.abs().powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

/// `(sum_c m_c |z_c|^q)^{1/q}`; multiplicities do not affect `q = inf`.
pub(crate) fn wnorm(z: &[f64], mult: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        z.iter().fold(0.0, |m, v| m.max(v.abs()))
    } else if q == 1.0 {
        z.iter().zip(mult).map(|(v, m)| m * v.abs()).sum()
    } else if q == 2.0 {
        z.iter().zip(mult).map(|(v, m)| m * v * v).sum::<f64>().sqrt()
    } else {
        z.iter()
            .zip(mult)
            .map(|(v, m)| m * v.abs().powf(q))
            .sum::<f64>()
            .powf(1.0 / q)
    }
}

/// Solution of a reduced instance.
#[derive(Debug, Clone)]
pub(crate) struct Core {
    pub value: f64,
    pub lower: f64,
    pub y: Vec<f64>,
    pub method: Method,
    pub iterations: usize,
}

/// `k` points in `R^d` with nonnegative weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FpqProblem {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub p: f64,
    #[serde(with = "crate::qexp")]
    pub q: f64,
}

impl FpqProblem {
    /// Unit weights.
    pub fn new(points: Vec<Vec<f64>>, p: f64, q: f64) -> Self {
        let weights = vec![1.0; points.len()];
        FpqProblem { points, weights, p, q }
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Self {
        self.weights = weights;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_exponents(self.p, self.q)?;
        if self.points.is_empty() {
            return input("F_pq needs at least one point");
        }
        let d = self.points[0].len();
        if self.points.iter().any(|x| x.len() != d) {
            return input("points have different dimensions");
        }
        if self.points.iter().flatten().any(|v| !v.is_finite()) {
            return input("points must be finite");
        }
        if self.weights.len() != self.points.len() {
            return input("one weight per point is required");
        }
        if self.weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return input("weights must be finite and nonnegative");
        }
        Ok(())
    }
}

fn check_exponents(p: f64, q: f64) -> Result<()> {
    if !(p.is_finite() && p >= 1.0) {
        return input(format!("p must be a finite real >= 1, got {p}"));
    }
    if !(q >= 1.0) {
        return input(format!("q must lie in [1, inf], got {q}"));
    }
    Ok(())
}

/// Certified solution: `lower_bound <= F <= value <= lower_bound + tolerance`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FpqSolution {
    pub value: f64,
    pub lower_bound: f64,
    pub minimizer: Vec<f64>,
    pub tolerance: f64,
    pub method: Method,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct FpqOptions {
    pub max_iterations: usize,
    /// Skip the pair and `p = q = 2` closed forms.
    pub force_iterative: bool,
}

impl Default for FpqOptions {
    fn default() -> Self {
        FpqOptions {
            max_iterations: 100_000,
            force_iterative: false,
        }
    }
}

/// Memo of reduced solves, safe to share between threads.
#[derive(Debug, Default)]
pub struct FpqCache {
    map: Mutex<HashMap<Vec<u64>, Arc<Core>>>,
    hits: AtomicUsize,
}

impl FpqCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }
}

pub fn solve_fpq(prob: &FpqProblem, tol: f64) -> Result<FpqSolution> {
    solve_fpq_with(prob, tol, FpqOptions::default())
}

pub fn solve_fpq_with(prob: &FpqProblem, tol: f64, opts: FpqOptions) -> Result<FpqSolution> {
    prob.validate()?;
    check_tol(tol)?;
    let comp = compress_dense(&prob.points, &prob.weights, prob.p, prob.q);
    let core = solve_core(&comp.reduced, tol, opts)?;
    Ok(finish(&comp, &core, tol))
}

/// Solves on sparse `{-1,0,1}` points, optionally through a shared memo.
pub fn solve_fpq_sparse(
    points: &[&SparseVector],
    d: usize,
    weights: &[f64],
    p: f64,
    q: f64,
    tol: f64,
    cache: Option<&FpqCache>,
) -> Result<FpqSolution> {
    let (comp, core) = solve_sparse_core(points, d, weights, p, q, tol, cache)?;
    Ok(finish(&comp, &core, tol))
}

/// Value-only variant of [`solve_fpq_sparse`]: returns `(value, lower_bound)`
/// without materializing the `d`-dimensional minimizer.
pub fn fpq_value_sparse(
    points: &[&SparseVector],
    d: usize,
    weights: &[f64],
    p: f64,
    q: f64,
    tol: f64,
    cache: Option<&FpqCache>,
) -> Result<(f64, f64)> {
    let (_, core) = solve_sparse_core(points, d, weights, p, q, tol, cache)?;
    Ok((core.value, core.lower))
}

fn solve_sparse_core(
    points: &[&SparseVector],
    d: usize,
    weights: &[f64],
    p: f64,
    q: f64,
    tol: f64,
    cache: Option<&FpqCache>,
) -> Result<(Compression, Arc<Core>)> {
    check_exponents(p, q)?;
    check_tol(tol)?;
    if points.is_empty() || weights.len() != points.len() {
        return input("need one weight per point and at least one point");
    }
    if let Some(c) = points.iter().filter_map(|x| x.max_coord()).max() {
        if c >= d {
            return input(format!("coordinate {c} out of range for dimension {d}"));
        }
    }
    let comp = compress_sparse(points, d, weights, p, q);
    let opts = FpqOptions::default();
    let core = match cache {
        None => Arc::new(solve_core(&comp.reduced, tol, opts)?),
        Some(cache) => {
            let key = comp.key(tol);
            let hit = cache.map.lock().expect("cache lock").get(&key).cloned();
            match hit {
                Some(core) => {
                    cache.hits.fetch_add(1, Ordering::Relaxed);
                    core
                }
                None => {
                    let core = Arc::new(solve_core(&comp.reduced, tol, opts)?);
                    cache.map.lock().expect("cache lock").insert(key, core.clone());
                    core
                }
            }
        }
    };
    Ok((comp, core))
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol.is_finite()) {
        return input(format!("tolerance must be positive, got {tol}"));
    }
    Ok(())
}

fn finish(comp: &Compression, core: &Core, tol: f64) -> FpqSolution {
    FpqSolution {
        value: core.value,
        lower_bound: core.lower,
        minimizer: comp.expand(&core.y),
        tolerance: tol,
        method: core.method,
        iterations: core.iterations,
    }
}

fn solve_core(r: &Reduced, tol: f64, opts: FpqOptions) -> Result<Core> {
    let k = r.pts.len();
    let dim = r.mult.len();
    let mut core = if k <= 1 || dim == 0 {
        Core {
            value: 0.0,
            lower: 0.0,
            y: r.pts.first().cloned().unwrap_or_default(),
            method: Method::Trivial,
            iterations: 0,
        }
    } else if k == 2 && !opts.force_iterative {
        pair(r)
    } else if r.p == 2.0 && r.q == 2.0 && !opts.force_iterative {
        let y = smooth::weighted_mean(r);
        let value = smooth::obj_grad(r, &y, None);
        Core {
            value,
            lower: value,
            y,
            method: Method::ClosedForm22,
            iterations: 0,
        }
    } else if r.q.is_infinite() || r.q == 1.0 {
        if r.p == 1.0 {
            polyhedral::exact_p1(r)?
        } else {
            polyhedral::cutting_plane(r, tol, opts.max_iterations.min(2_000))?
        }
    } else if r.p == 1.0 {
        match smooth::optimal_data_point(r) {
            Some(j) => {
                let y = r.pts[j].clone();
                let value = smooth::obj_grad(r, &y, None);
                Core {
                    value,
                    lower: value,
                    y,
                    method: if r.q == 2.0 { Method::Weiszfeld } else { Method::Lbfgs },
                    iterations: 0,
                }
            }
            None if r.q == 2.0 => smooth::weiszfeld(r, tol, opts.max_iterations)?,
            None => smooth::lbfgs(r, smooth::weighted_mean(r), tol, opts.max_iterations)?,
        }
    } else {
        smooth::lbfgs(r, smooth::weighted_mean(r), tol, opts.max_iterations)?
    };
    clip_to_box(r, &mut core);
    Ok(core)
}

/// Position of the two-point optimum on the segment from `a` (weight `w1`)
/// to `b` (weight `w2`), as a fraction of the way.
fn pair_fraction(w1: f64, w2: f64, p: f64) -> f64 {
    if p == 1.0 {
        if w1 >= w2 {
            0.0
        } else {
            1.0
        }
    } else {
        let ratio = (w2 / w1).powf(1.0 / (p - 1.0));
        if ratio.is_infinite() {
            1.0
        } else {
            ratio / (1.0 + ratio)
        }
    }
}

/// `F` of two points equals `pair_factor(w1, w2, p) * ||a - b||^p`.
pub fn pair_factor(w1: f64, w2: f64, p: f64) -> f64 {
    let t = pair_fraction(w1, w2, p);
    w1 * t.powf(p) + w2 * (1.0 - t).powf(p)
}

/// The optimum of two points lies on their segment.
fn pair(r: &Reduced) -> Core {
    let (a, b) = (&r.pts[0], &r.pts[1]);
    let (w1, w2) = (r.w[0], r.w[1]);
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let len = wnorm(&diff, &r.mult, r.q);
    let t = pair_fraction(w1, w2, r.p);
    let y: Vec<f64> = a.iter().zip(b).map(|(x, z)| x + t * (z - x)).collect();
    let value = len.powf(r.p) * pair_factor(w1, w2, r.p);
    Core {
        value,
        lower: value,
        y,
        method: Method::Pair,
        iterations: 0,
    }
}

/// Projection onto the bounding box does not increase any `||x_i - y||_q`.
fn clip_to_box(r: &Reduced, core: &mut Core) {
    let mut moved = false;
    for (c, yc) in core.y.iter_mut().enumerate() {
        let lo = r.pts.iter().map(|x| x[c]).fold(f64::INFINITY, f64::min);
        let hi = r.pts.iter().map(|x| x[c]).fold(f64::NEG_INFINITY, f64::max);
        let clipped = yc.clamp(lo, hi);
        if clipped != *yc {
            *yc = clipped;
            moved = true;
        }
    }
    if moved {
        let value = objective_reduced(r, &core.y);
        if value < core.value {
            core.value = value;
        }
    }
}

fn objective_reduced(r: &Reduced, y: &[f64]) -> f64 {
    polyhedral::distances(r, y)
        .iter()
        .zip(&r.w)
        .map(|(a, w)| w * a.powf(r.p))
        .sum()
}

/// `sum_i w_i ||x_i - y||_q^p`.
pub fn objective(prob: &FpqProblem, y: &[f64]) -> f64 {
    prob.points
        .iter()
        .zip(&prob.weights)
        .map(|(x, w)| {
            let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
            w * norm_q(&diff, prob.q).powf(prob.p)
        })
        .sum()
}

/// Gradient of [`objective`] in `y`, for `1 < q < inf` (zero terms at data points).
pub fn gradient(prob: &FpqProblem, y: &[f64]) -> Result<Vec<f64>> {
    if !(prob.q > 1.0 && prob.q.is_finite()) {
        return input("the gradient is defined for 1 < q < inf only");
    }
    let d = y.len();
    let r = Reduced {
        pts: prob.points.clone(),
        w: prob.weights.clone(),
        mult: vec![1.0; d],
        p: prob.p,
        q: prob.q,
    };
    let mut g = vec![0.0; d];
    smooth::obj_grad(&r, y, Some(&mut g));
    Ok(g)
}

/// `p = q = 2` with unit weights: `y` is the mean and the value is
/// `((k-1) sum ||x_i||^2 - 2 sum_{i<i'} <x_i, x_i'>) / k`.
pub fn fpq_closed_form_22(points: &[Vec<f64>]) -> Result<FpqSolution> {
    if points.is_empty() {
        return input("F_pq needs at least one point");
    }
    let k = points.len() as f64;
    let d = points[0].len();
    if points.iter().any(|x| x.len() != d) {
        return input("points have different dimensions");
    }
    let mut mean = vec![0.0; d];
    for x in points {
        for (m, v) in mean.iter_mut().zip(x) {
            *m += v / k;
        }
    }
    let value: f64 = points
        .iter()
        .map(|x| x.iter().zip(&mean).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
        .sum();
    Ok(FpqSolution {
        value,
        lower_bound: value,
        minimizer: mean,
        tolerance: 0.0,
        method: Method::ClosedForm22,
        iterations: 0,
    })
}

/// Exact rational `F_{2,2}` of integer points.
pub fn fpq_closed_form_22_exact(points: &[&SparseVector]) -> BigRational {
    let k = points.len() as i64;
    if k == 0 {
        return BigRational::zero();
    }
    let norms: i64 = points.iter().map(|x| x.norm_sq()).sum();
    let mut cross: i64 = 0;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            cross += points[i].dot(points[j]);
        }
    }
    BigRational::new(BigInt::from((k - 1) * norms - 2 * cross), BigInt::from(k))
}

/// `k^{1-p} (n k (k-1)(n k - 2n + 2) - 4t)^p`, the `q = 1` value at a tuple
/// with `t` induced edges. The degree does not enter the formula.
pub fn q1_value_formula(n: usize, k: usize, _degree: usize, t: usize, p: f64) -> Result<f64> {
    if k < 2 || !k.is_multiple_of(2) {
        return input(format!("the q = 1 value formula needs even k >= 2, got {k}"));
    }
    let (n, k, t) = (n as i128, k as i128, t as i128);
    let base = n * k * (k - 1) * (n * k - 2 * n + 2) - 4 * t;
    if base < 0 {
        return input("negative base in the q = 1 value formula");
    }
    Ok((k as f64).powf(1.0 - p) * (base as f64).powf(p))
}

fn check_tuple(cfg: &PointConfig, tuple: &[usize]) -> Result<()> {
    if tuple.len() != cfg.k || tuple.iter().any(|&v| v >= cfg.n) {
        return input("tuple does not match the configuration");
    }
    Ok(())
}

/// `y*_sigma = s` on the coordinates `(l, v_l, l', v_l', s)` of the tuple, zero elsewhere.
/// Integer valued; for a clique every `||psi(i, v_i) - y*||_1` equals
/// `n(k-1)(nk - 2n + 2) - 2(k-1)`.
pub fn q1_clique_witness(cfg: &PointConfig, tuple: &[usize]) -> Result<SparseVector> {
    check_tuple(cfg, tuple)?;
    let layout = PairLayout::new(cfg.k, cfg.n);
    if cfg.d != 2 * layout.dim() {
        return input("configuration is not a q = 1 embedding");
    }
    let mut entries = Vec::new();
    for l in 0..cfg.k {
        for lp in l + 1..cfg.k {
            let base = 2 * layout.index(l, tuple[l], lp, tuple[lp]);
            entries.push((base, 1i8));
            entries.push((base + 1, -1i8));
        }
    }
    SparseVector::from_pairs(entries)
}

/// `y* = -1/2` on coordinates where some selected point is `-1`, else `+1/2`.
/// For a clique every `||xi(i, v_i) - y*||_inf <= 1/2`.
pub fn qinf_clique_witness(cfg: &PointConfig, tuple: &[usize]) -> Result<Vec<f64>> {
    check_tuple(cfg, tuple)?;
    let mut y = vec![0.5; cfg.d];
    for x in cfg.select(tuple)? {
        for &(c, v) in x.entries() {
            if v < 0 {
                y[c] = -0.5;
            }
        }
    }
    Ok(y)
}

/// Exact `l_1` distance between an integer point and an integer witness.
pub fn l1_distance_exact(x: &SparseVector, y: &SparseVector) -> i64 {
    let (a, b) = (x.entries(), y.entries());
    let (mut i, mut j, mut total) = (0, 0, 0i64);
    while i < a.len() || j < b.len() {
        let ca = a.get(i).map_or(usize::MAX, |e| e.0);
        let cb = b.get(j).map_or(usize::MAX, |e| e.0);
        let diff = if ca == cb {
            let v = i64::from(a[i].1) - i64::from(b[j].1);
            i += 1;
            j += 1;
            v
        } else if ca < cb {
            i += 1;
            i64::from(a[i - 1].1)
        } else {
            j += 1;
            i64::from(b[j - 1].1)
        };
        total += diff.abs();
    }
    total
}

/// Value of a rational as `f64`.
pub fn rational_to_f64(x: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    let v = x.to_f64().unwrap_or(f64::NAN);
    if v.is_nan() && x.is_positive() {
        f64::INFINITY
    } else {
        v
    }
}
