//! Acceptance suite: one pass/fail line per criterion, nonzero exit if any fails.

use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use barygap_core::bary::{barycenter_objective, bary_value_mot, borgwardt_2approx, extract_barycenter, BaryInstance, DiscreteMeasure, DEFAULT_LP_CAP};
use barygap_core::chub::solve_chub_exact_22;
use barygap_core::embed::embed_phi;
use barygap_core::fpq::{fpq_closed_form_22, gradient, objective, solve_fpq_with, FpqOptions, FpqProblem};
use barygap_core::graph::{complete, cycle, petersen, random_regular, Graph};
use barygap_core::reduction::{build_instance, decide_clique, Solver};
use barygap_core::verify::{verify_lemma, RunReport};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn corpus() -> Vec<(String, Graph)> {
    let mut graphs = vec![
        ("K4".to_string(), complete(4)),
        ("K5".to_string(), complete(5)),
        ("C4".to_string(), cycle(4).unwrap()),
        ("C5".to_string(), cycle(5).unwrap()),
        ("C6".to_string(), cycle(6).unwrap()),
        ("Petersen".to_string(), petersen()),
    ];
    for (seed, (n, d)) in [(6, 3), (7, 4), (8, 3), (8, 4), (8, 5)].into_iter().enumerate() {
        graphs.push((format!("random({n},{d})"), random_regular(n, d, seed as u64).unwrap()));
    }
    graphs
}

/// Finds a property by name in a verification report.
fn property(report: &RunReport, name: &str) -> (bool, String) {
    let r = report.results.iter().find(|r| r.property == name).unwrap_or_else(|| panic!("property {name} missing"));
    let shown = r.counterexample.as_ref().unwrap_or(&r.observed);
    (r.passed, format!("{name}: {shown}"))
}

fn closed_form_gap() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut cases = 0;
    for (name, g) in corpus() {
        let deg = g.regular_degree().unwrap();
        for k in 2..=4 {
            let cfg = embed_phi(&g, k, 2.0, 2.0).unwrap();
            let (value, _) = solve_chub_exact_22(&cfg, u128::MAX).unwrap();
            let m = g.max_multiset_edges(k, u128::MAX).unwrap();
            let int = |x: usize| BigInt::from(x);
            let want = BigRational::from_integer(int(deg * (k - 1) * (k - 1))) - BigRational::new(int(2 * m), int(k));
            let clique = g.has_k_clique(k, u128::MAX).unwrap();
            let clique_ok = !clique || value == BigRational::from_integer(int(deg * (k - 1) * (k - 1) - (k - 1)));
            if value != want || !clique_ok {
                failures.push(format!("{name} k={k}: {value} vs {want}"));
            }
            cases += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = failures.is_empty() && secs < 60.0;
    outcome(ok, format!("{cases} cases exact, {} mismatches {:?}, {secs:.1}s (limit 60s)", failures.len(), failures))
}

fn decision_soundness() -> Outcome {
    let start = Instant::now();
    let regimes = [(2.0, 2.0), (1.0, 2.0), (2.0, 1.5), (1.0, 1.0), (2.0, 1.0), (1.0, f64::INFINITY), (2.0, f64::INFINITY)];
    let graphs = corpus();
    let mut cases = 0;
    let mut failures = Vec::new();
    for &(p, q) in &regimes {
        for (name, g) in &graphs {
            for k in 2..=4 {
                let inst = build_instance(g, k, p, q).unwrap();
                let tol = inst.certificate.delta / 20.0;
                let truth = g.has_k_clique(k, u128::MAX).unwrap();
                for solver in [Solver::ChubBruteforce, Solver::BaryMot] {
                    cases += 1;
                    match decide_clique(&inst, solver, tol) {
                        Ok(d) if d.has_clique == truth => {}
                        Ok(d) => failures.push(format!("{name} k={k} p={p} q={q} {solver:?}: decided {} (value {})", d.has_clique, d.value)),
                        Err(e) => failures.push(format!("{name} k={k} p={p} q={q} {solver:?}: {e}")),
                    }
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = failures.is_empty() && secs < 1800.0;
    outcome(ok, format!("{cases} decisions, {} disagreements {:?}, {secs:.1}s (limit 1800s)", failures.len(), failures))
}

fn from_reports(parts: &[(&str, &str)]) -> Outcome {
    let mut ok = true;
    let mut details = Vec::new();
    for &(id, name) in parts {
        let report = verify_lemma(id, 0, 20).unwrap();
        let (passed, detail) = property(&report, name);
        ok &= passed;
        details.push(format!("{}{}", if passed { "" } else { "FAILED " }, detail));
    }
    outcome(ok, details.join("; "))
}

fn monotonicity() -> Outcome {
    let report = verify_lemma("mono", 0, 50).unwrap();
    let (a, da) = property(&report, "strict-decrease");
    let (b, db) = property(&report, "clique-endpoints-equal");
    outcome(a && b, format!("{da}; {db}"))
}

fn random_measure(rng: &mut ChaCha8Rng, n: usize, d: usize) -> DiscreteMeasure {
    let atoms = (0..n).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut masses: Vec<f64> = raw.iter().map(|m| m / total).collect();
    let rest: f64 = masses[1..].iter().sum();
    masses[0] = 1.0 - rest;
    DiscreteMeasure::new(atoms, masses).unwrap()
}

/// Criterion 7 also returns the largest marginal violation of its plans.
fn mot_consistency() -> (Outcome, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let regimes = [(2.0, 2.0), (1.0, 2.0), (2.0, 1.0), (1.0, f64::INFINITY)];
    let tol = 1e-7;
    let mut failures = Vec::new();
    let mut worst_violation = 0.0f64;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for case in 0..20 {
        let (p, q) = regimes[case % regimes.len()];
        let inst = BaryInstance::new((0..3).map(|_| random_measure(&mut rng, 3, 2)).collect(), p, q).unwrap();
        let res = bary_value_mot(&inst, tol).unwrap();
        worst_violation = worst_violation.max(res.plan.marginal_violation(&inst));
        let nu = extract_barycenter(&res.plan, &inst, tol).unwrap();
        let obj = barycenter_objective(&inst, &nu).unwrap();
        let b = borgwardt_2approx(&inst, DEFAULT_LP_CAP).unwrap();
        let ratio = b.value / res.value;
        lo = lo.min(ratio);
        hi = hi.max(ratio);
        if res.value > obj + 3.0 * tol || !(1.0 - 1e-9..=2.0 + 1e-9).contains(&ratio) {
            failures.push(format!("case {case} p={p} q={q}: mot {} extracted {obj} ratio {ratio}", res.value));
        }
    }
    let tight = BaryInstance::new(vec![DiscreteMeasure::dirac(vec![0.0]), DiscreteMeasure::dirac(vec![2.0])], 2.0, 2.0).unwrap();
    let tight_ratio = borgwardt_2approx(&tight, DEFAULT_LP_CAP).unwrap().value / bary_value_mot(&tight, tol).unwrap().value;
    let ok = failures.is_empty() && tight_ratio == 2.0;
    (
        outcome(ok, format!("20 instances, ratio range [{lo:.4}, {hi:.4}], tight ratio {tight_ratio}, failures {failures:?}")),
        worst_violation,
    )
}

fn uniformization() -> Outcome {
    let report = verify_lemma("unif", 0, 10).unwrap();
    let (ok, detail) = property(&report, "uniformization");
    outcome(ok, detail)
}

fn numerical_hygiene(plan_violation: f64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst_fd = 0.0f64;
    for _ in 0..100 {
        let k = rng.random_range(2..5);
        let d = rng.random_range(1..5);
        let p = rng.random_range(1.2..3.0);
        let q = rng.random_range(1.3..4.0);
        let pts: Vec<Vec<f64>> = (0..k).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let prob = FpqProblem::new(pts, p, q);
        let y: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g = gradient(&prob, &y).unwrap();
        let h = 1e-6;
        for c in 0..d {
            let (mut a, mut b) = (y.clone(), y.clone());
            a[c] += h;
            b[c] -= h;
            let fd = (objective(&prob, &a) - objective(&prob, &b)) / (2.0 * h);
            worst_fd = worst_fd.max((fd - g[c]).abs() / (1.0 + g[c].abs()));
        }
    }
    let mut worst_cf = 0.0f64;
    let opts = FpqOptions {
        force_iterative: true,
        ..Default::default()
    };
    for _ in 0..100 {
        let k = rng.random_range(2..6);
        let d = rng.random_range(1..5);
        let pts: Vec<Vec<f64>> = (0..k).map(|_| (0..d).map(|_| f64::from(rng.random_range(-5i32..=5))).collect()).collect();
        let exact = fpq_closed_form_22(&pts).unwrap().value;
        let solved = solve_fpq_with(&FpqProblem::new(pts, 2.0, 2.0), 1e-10, opts).unwrap().value;
        worst_cf = worst_cf.max((solved - exact).abs());
    }
    let ok = worst_fd <= 1e-5 && worst_cf <= 1e-8 && plan_violation <= 1e-9;
    outcome(ok, format!("gradient rel err {worst_fd:.2e} (limit 1e-5), closed form gap {worst_cf:.2e} (limit 1e-8), marginal violation {plan_violation:.2e} (limit 1e-9)"))
}

fn main() {
    let mut lines = Vec::new();
    let mut record = |n: usize, title: &str, o: Outcome| {
        let line = format!("criterion {n} [{}] {title}: {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
        println!("{line}");
        lines.push(o.passed);
    };
    record(1, "p=q=2 closed-form gap", closed_form_gap());
    record(2, "clique decision soundness", decision_soundness());
    record(3, "q=1 value formula and witness", from_reports(&[("q1-value", "clique-value"), ("q1-witness", "witness-distance")]));
    record(4, "q=inf clique and non-clique bounds", from_reports(&[("qinf-clique", "clique-upper-bound"), ("qinf-nonclique", "nonclique-lower-bound")]));
    record(5, "failure-mode regressions", from_reports(&[("q1-failure", "phi-q1-constant"), ("qinf-failure", "phi-qinf-constant")]));
    record(6, "monotonicity and clique equality", monotonicity());
    let (mot, violation) = mot_consistency();
    record(7, "MOT consistency", mot);
    record(8, "uniformization", uniformization());
    record(9, "numerical hygiene", numerical_hygiene(violation));
    let passed = lines.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", lines.len());
    if passed != lines.len() {
        std::process::exit(1);
    }
}
