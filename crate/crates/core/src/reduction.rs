//! Clique to barycenter pipeline: gadget instances, gap certificates
//! `(gamma, delta)` per regime, and clique decisions from computed values.
//!
//! Scales: on the CHUB scale clique tuples score at most `gamma` and all other
//! tuples at least `gamma + delta`; the barycenter scale divides by `k`
//! because the measures carry weights `1/k`. Decisions threshold at the
//! midpoint `gamma + delta / 2`.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bary::{solve_costs, DiscreteMeasure, Marginals, MotResult};
use crate::chub::{solve_chub_with, ChubOptions, PatternOracle};
use crate::embed::{canonical_clique_collection, embed, Collection, PointConfig, Regime};
use crate::error::{check_cap, input, Result};
use crate::fpq::{solve_fpq, FpqProblem};
use crate::graph::Graph;
use crate::tuples::tuple_count;

/// Tuple cap for reductions; doubled gadgets reach `20^6` tuples.
pub const DEFAULT_REDUCTION_CAP: u128 = 100_000_000;

/// Inner tolerance used to compute solver-based certificates by default.
pub const DEFAULT_CALIBRATION_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    ClosedForm,
    SolverComputed,
}

/// Clique and non-clique values of the collection sweep behind a
/// solver-computed certificate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Calibration {
    /// `F` on the complete-pattern collection (upper bound).
    pub clique_value: f64,
    /// Least certified lower bound of `F` over the non-complete patterns swept.
    pub min_nonclique_value: f64,
    pub patterns: usize,
    /// `min_nonclique_value - clique_value`; `delta` is half of it.
    pub separation: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapCertificate {
    pub regime: Regime,
    /// Clique tuples have value at most `gamma` (CHUB scale).
    pub gamma: f64,
    /// Non-clique tuples have value at least `gamma + delta`; `delta > 0`.
    pub delta: f64,
    pub provenance: Provenance,
    pub n: usize,
    pub k: usize,
    pub degree: usize,
    pub p: f64,
    #[serde(with = "crate::qexp")]
    pub q: f64,
    /// Solver tolerance behind `gamma`, with `10 tol < delta`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub calibration: Option<Calibration>,
}

impl GapCertificate {
    /// Decision threshold on the CHUB scale.
    pub fn threshold(&self) -> f64 {
        self.gamma + 0.5 * self.delta
    }

    /// Decision threshold on the barycenter scale.
    pub fn threshold_bary(&self) -> f64 {
        self.threshold() / self.k as f64
    }
}

/// Certificate with the default calibration tolerance.
pub fn gap_certificate(n: usize, k: usize, degree: usize, p: f64, q: f64) -> Result<GapCertificate> {
    gap_certificate_with_tol(n, k, degree, p, q, DEFAULT_CALIBRATION_TOL)
}

/// Gap certificate for `n`-vertex `degree`-regular graphs and `k`-cliques.
/// `tol` only matters for `q` strictly between 1 and infinity, where the
/// certificate is computed by sweeping edge patterns of gadget collections.
pub fn gap_certificate_with_tol(n: usize, k: usize, degree: usize, p: f64, q: f64, tol: f64) -> Result<GapCertificate> {
    if !(p >= 1.0 && p.is_finite()) || !(q >= 1.0) {
        return input(format!("need p in [1, inf) and q in [1, inf], got p={p}, q={q}"));
    }
    if k < 2 {
        return input(format!("need k >= 2, got {k}"));
    }
    if degree == 0 || degree >= n {
        return input(format!("need a degree in 1..n, got D={degree} with n={n}"));
    }
    let regime = Regime::classify(p, q);
    let kf = k as f64;
    let base = GapCertificate {
        regime,
        gamma: 0.0,
        delta: 0.0,
        provenance: Provenance::ClosedForm,
        n,
        k,
        degree,
        p,
        q,
        tolerance: None,
        calibration: None,
    };
    let cert = match regime {
        Regime::Q22 => {
            let m = (degree * (k - 1) * (k - 1)) as f64;
            GapCertificate {
                gamma: m - kf + 1.0,
                delta: 2.0 / kf,
                ..base
            }
        }
        Regime::Q1 => {
            if k % 2 == 1 {
                return input(format!("the q = 1 certificate needs even k, got {k}"));
            }
            let (nn, kk) = (n as i128, k as i128);
            let b = (nn * kk * (kk - 1) * (nn * kk - 2 * nn + 2) - 2 * kk * (kk - 1)) as f64;
            let scale = kf.powf(1.0 - p);
            GapCertificate {
                gamma: scale * b.powf(p),
                delta: scale * ((b + 4.0).powf(p) - b.powf(p)),
                ..base
            }
        }
        Regime::Qinf => {
            if n < 3 {
                return input(format!("the q = inf certificate needs n >= 3, got {n}"));
            }
            let two_p = 2f64.powf(p);
            // For k = 3 the non-clique bound drops the (k-2)/2^p term: a
            // path v_1 - v_3 - v_2 in a triangle-free graph attains exactly 2.
            let extra = if k == 3 { 0.0 } else { (kf - 2.0) / two_p };
            GapCertificate {
                gamma: kf / two_p,
                delta: 2.0 + extra - kf / two_p,
                ..base
            }
        }
        Regime::Qin => qin_certificate(base, tol)?,
    };
    if !(cert.delta > 0.0) {
        return input(format!("no positive gap for n={n}, k={k}, D={degree}, p={p}, q={q}"));
    }
    Ok(cert)
}

/// `gamma` from the complete-pattern collection; `delta` half the least
/// separation to a non-complete pattern. All patterns are swept for
/// `C(k,2) <= 10`; beyond that only complete-minus-one-edge, which is least
/// among non-complete patterns because adding an overlap lowers the value.
fn qin_certificate(base: GapCertificate, tol: f64) -> Result<GapCertificate> {
    if !(tol > 0.0 && tol.is_finite()) {
        return input(format!("tolerance must be positive, got {tol}"));
    }
    let (k, degree, p, q) = (base.k, base.degree, base.p, base.q);
    let s = degree * (k - 1);
    let clique = canonical_clique_collection(k, degree)?;
    let solve = |c: &Collection| {
        let prob = FpqProblem::new(c.to_dense(), p, q);
        solve_fpq(&prob, tol)
    };
    let gamma = solve(&clique)?.value;
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|a| (a + 1..k).map(move |b| (a, b))).collect();
    let m = pairs.len();
    let masks: Vec<u64> = if m <= 10 {
        (0..(1u64 << m) - 1).collect()
    } else {
        vec![((1u64 << m) - 1) & !1]
    };
    let mut min_non = f64::INFINITY;
    for &mask in &masks {
        let pattern: Vec<(usize, usize)> = (0..m).filter(|r| mask >> r & 1 == 1).map(|r| pairs[r]).collect();
        let c = Collection::from_pattern(k, s, &pattern)?;
        min_non = min_non.min(solve(&c)?.lower_bound);
    }
    let separation = min_non - gamma;
    let delta = 0.5 * separation;
    if !(10.0 * tol < delta) {
        return input(format!(
            "calibrated gap {delta:e} does not exceed ten times the tolerance {tol:e}"
        ));
    }
    Ok(GapCertificate {
        gamma,
        delta,
        provenance: Provenance::SolverComputed,
        tolerance: Some(tol),
        calibration: Some(Calibration {
            clique_value: gamma,
            min_nonclique_value: min_non,
            patterns: masks.len(),
            separation,
        }),
        ..base
    })
}

/// A gadget instance for deciding whether `original` has a `k_original`-clique.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReductionInstance {
    /// Graph actually embedded (the doubled graph when `doubled`).
    pub graph: Graph,
    pub k: usize,
    pub original: Graph,
    pub k_original: usize,
    /// `q = 1` with odd `k`: the graph was doubled and `k` multiplied by 2.
    pub doubled: bool,
    pub points: PointConfig,
    /// One uniform measure per group, atoms the embedded points.
    pub measures: Vec<DiscreteMeasure>,
    pub certificate: GapCertificate,
}

/// Builds the gadget instance for `(G, k, p, q)`.
pub fn build_instance(g: &Graph, k: usize, p: f64, q: f64) -> Result<ReductionInstance> {
    build_instance_with_tol(g, k, p, q, DEFAULT_CALIBRATION_TOL)
}

pub fn build_instance_with_tol(g: &Graph, k: usize, p: f64, q: f64, calibration_tol: f64) -> Result<ReductionInstance> {
    g.require_regular()?;
    if k < 2 {
        return input(format!("need k >= 2, got {k}"));
    }
    let (graph, k_embed, doubled) = if q == 1.0 && k % 2 == 1 {
        let (h, k2) = g.even_k_doubling(k)?;
        (h, k2, true)
    } else {
        (g.clone(), k, false)
    };
    let degree = graph.require_regular()?;
    let certificate = gap_certificate_with_tol(graph.n(), k_embed, degree, p, q, calibration_tol)?;
    let points = embed(&graph, k_embed, p, q)?;
    let measures = points
        .points
        .iter()
        .map(|group| DiscreteMeasure::uniform(group.iter().map(|x| x.to_dense(points.d)).collect()))
        .collect::<Result<Vec<_>>>()?;
    Ok(ReductionInstance {
        graph,
        k: k_embed,
        original: g.clone(),
        k_original: k,
        doubled,
        points,
        measures,
        certificate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Solver {
    /// Least tuple value by exhaustive CHUB enumeration (CHUB scale).
    ChubBruteforce,
    /// Multi-marginal LP over the tuple cost tensor with free marginals,
    /// whose optimum is the least tuple cost (barycenter scale).
    BaryMot,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Decision {
    pub has_clique: bool,
    /// Computed value on the solver's scale.
    pub value: f64,
    pub lower_bound: f64,
    pub threshold: f64,
    /// Distance from `value` to `threshold`.
    pub margin: f64,
    pub solver: Solver,
    pub argmin: Vec<usize>,
    pub distinct_solves: usize,
}

/// Compares the computed optimum with the certificate threshold. Needs
/// `tol <= delta / 10` on the CHUB scale.
pub fn decide_clique(inst: &ReductionInstance, solver: Solver, tol: f64) -> Result<Decision> {
    decide_clique_with_cap(inst, solver, tol, DEFAULT_REDUCTION_CAP)
}

pub fn decide_clique_with_cap(inst: &ReductionInstance, solver: Solver, tol: f64, cap: u128) -> Result<Decision> {
    let cert = &inst.certificate;
    if !(tol > 0.0 && tol.is_finite()) {
        return input(format!("tolerance must be positive, got {tol}"));
    }
    if tol > cert.delta / 10.0 {
        return input(format!("tolerance {tol:e} exceeds delta / 10 = {:e}", cert.delta / 10.0));
    }
    let kf = inst.k as f64;
    let (value, lower_bound, threshold, argmin, distinct) = match solver {
        Solver::ChubBruteforce => {
            let opts = ChubOptions {
                cap,
                keep_table: false,
                graph: Some(inst.graph.clone()),
                symmetric: true,
            };
            let res = solve_chub_with(&inst.points, tol, &opts)?;
            (res.value, res.lower_bound, cert.threshold(), res.argmin, res.distinct_solves)
        }
        Solver::BaryMot => {
            let res = mot_min_entry(inst, tol, cap)?;
            let mut argmin = Vec::new();
            if let Some((t, _)) = res.0.plan.entries.iter().max_by(|a, b| a.1.total_cmp(&b.1)) {
                argmin = t.clone();
            }
            (res.0.value, res.0.lower_bound, cert.threshold() / kf, argmin, res.1)
        }
    };
    Ok(Decision {
        has_clique: value < threshold,
        value,
        lower_bound,
        threshold,
        margin: (value - threshold).abs(),
        solver,
        argmin,
        distinct_solves: distinct,
    })
}

/// Free-marginal MOT over the tensor `C_j = F(x_{1,j_1}, ..., x_{k,j_k}) / k`,
/// with tuple costs streamed from the edge-pattern oracle.
fn mot_min_entry(inst: &ReductionInstance, tol: f64, cap: u128) -> Result<(MotResult, usize)> {
    let shape = vec![inst.points.n; inst.k];
    let total = tuple_count(&shape).unwrap_or(u128::MAX);
    check_cap("multi-marginal cost tensor", total, cap)?;
    let oracle = PatternOracle::build(&inst.points, &inst.graph, tol, true, cap)?;
    let kf = inst.k as f64;
    let cost = |_: usize, t: &[usize]| oracle.value(t).0 / kf;
    let res = solve_costs(&shape, total as usize, &cost, oracle.max_slack() / kf, Marginals::Free)?;
    Ok((res, oracle.distinct_solves()))
}

/// End-to-end run with timings and the brute-force clique oracle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReductionReport {
    pub n: usize,
    pub k: usize,
    pub p: f64,
    #[serde(with = "crate::qexp")]
    pub q: f64,
    pub doubled: bool,
    pub embedded_n: usize,
    pub embedded_k: usize,
    pub dimension: usize,
    pub certificate: GapCertificate,
    pub decision: Decision,
    pub oracle_has_clique: bool,
    pub agrees: bool,
    /// `(stage, seconds)`.
    pub timings: Vec<(String, f64)>,
}

pub fn run_reduction(g: &Graph, k: usize, p: f64, q: f64, solver: Solver, tol: Option<f64>, cap: u128) -> Result<ReductionReport> {
    let mut timings = Vec::new();
    let clock = Instant::now();
    let inst = build_instance(g, k, p, q)?;
    timings.push(("build".to_string(), clock.elapsed().as_secs_f64()));
    let tol = tol.unwrap_or(inst.certificate.delta / 20.0);
    let clock = Instant::now();
    let decision = decide_clique_with_cap(&inst, solver, tol, cap)?;
    timings.push(("decide".to_string(), clock.elapsed().as_secs_f64()));
    let clock = Instant::now();
    let oracle_has_clique = g.has_k_clique(k, cap)?;
    timings.push(("oracle".to_string(), clock.elapsed().as_secs_f64()));
    Ok(ReductionReport {
        n: g.n(),
        k,
        p,
        q,
        doubled: inst.doubled,
        embedded_n: inst.graph.n(),
        embedded_k: inst.k,
        dimension: inst.points.d,
        agrees: decision.has_clique == oracle_has_clique,
        certificate: inst.certificate,
        decision,
        oracle_has_clique,
        timings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{complete, cycle};

    #[test]
    fn certificate_examples() {
        let c = gap_certificate(4, 3, 3, 2.0, 2.0).unwrap();
        assert_eq!((c.gamma, c.delta), (10.0, 2.0 / 3.0));
        let c = gap_certificate(4, 4, 3, 1.0, 1.0).unwrap();
        assert_eq!(c.gamma, 456.0);
        assert!(c.delta >= 0.25);
        let c = gap_certificate(5, 3, 2, 1.0, f64::INFINITY).unwrap();
        assert_eq!(c.gamma, 1.5);
        assert_eq!(c.delta, 0.5);
        let c = gap_certificate(5, 4, 2, 1.0, f64::INFINITY).unwrap();
        assert_eq!(c.delta, 1.0);
        assert!(gap_certificate(5, 3, 2, 1.0, 1.0).is_err());
        assert!(gap_certificate(2, 2, 1, 1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn qin_certificate_is_calibrated() {
        let c = gap_certificate(5, 3, 2, 2.0, 1.5).unwrap();
        assert_eq!(c.provenance, Provenance::SolverComputed);
        let cal = c.calibration.clone().unwrap();
        assert_eq!(cal.patterns, 7);
        assert!(10.0 * c.tolerance.unwrap() < c.delta);
        assert!((c.delta - 0.5 * cal.separation).abs() < 1e-15);
    }

    #[test]
    fn instance_shapes() {
        let inst = build_instance(&complete(4), 3, 2.0, 2.0).unwrap();
        assert_eq!((inst.points.d, inst.measures.len(), inst.measures[0].len()), (48, 3, 4));
        let inst = build_instance(&cycle(5).unwrap(), 4, 1.0, 1.0).unwrap();
        assert_eq!(inst.points.d, 300);
        let inst = build_instance(&complete(4), 3, 1.0, f64::INFINITY).unwrap();
        assert_eq!(inst.points.d, 48);
        let inst = build_instance(&complete(4), 3, 1.0, 1.0).unwrap();
        assert!(inst.doubled);
        assert_eq!((inst.graph.n(), inst.k), (8, 6));
        for m in &inst.measures {
            assert!(m.is_uniform());
        }
    }

    #[test]
    fn decision_examples() {
        let k4 = complete(4);
        let c5 = cycle(5).unwrap();
        let inst = build_instance(&k4, 3, 2.0, 2.0).unwrap();
        let d = decide_clique(&inst, Solver::ChubBruteforce, 1e-3).unwrap();
        assert!(d.has_clique);
        assert_eq!(d.value, 10.0);
        let inst = build_instance(&c5, 3, 2.0, 2.0).unwrap();
        let d = decide_clique(&inst, Solver::ChubBruteforce, 1e-3).unwrap();
        assert!(!d.has_clique);
        assert!((d.value - 20.0 / 3.0).abs() < 1e-12);
        let m = decide_clique(&inst, Solver::BaryMot, 1e-3).unwrap();
        assert!((m.value - d.value / 3.0).abs() < 1e-9);
        let inst = build_instance(&c5, 3, 1.0, f64::INFINITY).unwrap();
        let d = decide_clique(&inst, Solver::ChubBruteforce, 1e-3).unwrap();
        assert!(!d.has_clique);
        assert!(d.lower_bound >= 2.0 - 1e-6);
    }

    #[test]
    fn rejects_loose_tolerance() {
        let inst = build_instance(&complete(4), 3, 2.0, 2.0).unwrap();
        assert!(decide_clique(&inst, Solver::ChubBruteforce, 0.1).is_err());
    }
}
