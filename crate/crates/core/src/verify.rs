//! Property suites behind `barygap verify`: each lemma id runs randomized or
//! fixed-instance checks and reports pass/fail with counterexamples.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::bary::{bary_value_mot, uniformize, BaryInstance, DiscreteMeasure};
use crate::chub::{solve_chub_with, ChubOptions};
use crate::embed::{add_edge_move, embed_phi, embed_psi, embed_xi, verify_collection, Collection, SparseVector};
use crate::error::{Error, Result};
use crate::fpq::{l1_distance_exact, norm_q, objective, q1_clique_witness, q1_value_formula, qinf_clique_witness, solve_fpq, solve_fpq_sparse, FpqProblem};
use crate::graph::{complete, cycle, random_regular, Graph, DEFAULT_ENUM_CAP};

/// Accepted lemma ids, in reporting order.
pub const LEMMA_IDS: [&str; 13] = [
    "3.2",
    "4.4-lb",
    "4.5",
    "helper",
    "mono",
    "cliques-equal",
    "q1-value",
    "q1-witness",
    "qinf-clique",
    "qinf-nonclique",
    "q1-failure",
    "qinf-failure",
    "unif",
];

/// Random cases per property when no budget is given.
pub const DEFAULT_BUDGET: usize = 20;

/// Outcome of one property.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PropertyResult {
    pub property: String,
    pub passed: bool,
    pub cases: usize,
    /// Observed quantities, for the report.
    pub observed: Value,
    /// First failing case, when any.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub counterexample: Option<Value>,
}

/// Reproducible record of one verification run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub id: String,
    pub seed: u64,
    pub budget: usize,
    /// Hex SHA-256 of the canonical `(id, seed, budget, version)` encoding.
    pub config_hash: String,
    /// Seconds per property.
    pub timings: BTreeMap<String, f64>,
    pub results: Vec<PropertyResult>,
    pub passed: bool,
    pub version: String,
}

/// Maps spellings such as `q1_value`, `Lemma-3.2` or `collectionmonotonicity`
/// onto a canonical id.
pub fn canonical_lemma_id(id: &str) -> Option<&'static str> {
    let norm = id.trim().to_ascii_lowercase().replace('_', "-");
    let norm = norm.strip_prefix("lemma-").unwrap_or(&norm);
    let alias = match norm {
        "collectionmonotonicity" | "monotonicity" => "mono",
        "cliquesequal" => "cliques-equal",
        "q1failure" => "q1-failure",
        "qinffailure" => "qinf-failure",
        "pq-helper" => "helper",
        "uniform" | "uniformize" => "unif",
        other => other,
    };
    LEMMA_IDS.iter().copied().find(|&c| c == alias)
}

/// Runs the property suite for `id`. `budget` is the number of random cases
/// per randomized property; fixed-instance checks ignore it.
pub fn verify_lemma(id: &str, seed: u64, budget: usize) -> Result<RunReport> {
    let Some(id) = canonical_lemma_id(id) else {
        return Err(Error::Input(format!("unknown lemma id {id:?}; expected one of {}", LEMMA_IDS.join(", "))));
    };
    let budget = budget.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut timings = BTreeMap::new();
    let mut results = Vec::new();
    let mut run = |name: &str, f: &mut dyn FnMut(&mut ChaCha8Rng) -> Result<PropertyResult>| -> Result<()> {
        let start = Instant::now();
        let r = f(&mut rng)?;
        timings.insert(name.to_string(), start.elapsed().as_secs_f64());
        results.push(r);
        Ok(())
    };
    match id {
        "3.2" => run("phi-gram", &mut |r| phi_gram(r, budget))?,
        "4.4-lb" => run("coordinate-positivity", &mut |r| coordinate_positivity(r, budget))?,
        "4.5" => run("phi-collections", &mut |r| phi_collections(r, budget))?,
        "helper" => {
            run("power-gap-convex", &mut |r| power_gap(r, 50 * budget, true))?;
            run("power-gap-concave", &mut |r| power_gap(r, 50 * budget, false))?;
        }
        "mono" => {
            let mut endpoints = Vec::new();
            run("strict-decrease", &mut |r| monotone_chains(r, budget, &mut endpoints))?;
            run("clique-endpoints-equal", &mut |_| Ok(endpoints_agree(&endpoints)))?;
        }
        "cliques-equal" => run("cliques-equal", &mut |r| cliques_equal(r, budget))?,
        "q1-value" => {
            run("clique-value", &mut |_| q1_clique_value())?;
            run("value-formula", &mut |r| q1_random_tuples(r, budget))?;
        }
        "q1-witness" => run("witness-distance", &mut |_| q1_witness())?,
        "qinf-clique" => run("clique-upper-bound", &mut |_| qinf_clique())?,
        "qinf-nonclique" => {
            let mut lows = Vec::new();
            run("nonclique-lower-bound", &mut |_| qinf_nonclique(&mut lows, false))?;
            run("separated-from-clique", &mut |_| qinf_nonclique(&mut lows, true))?;
        }
        "q1-failure" => run("phi-q1-constant", &mut |r| q1_failure(r, budget))?,
        "qinf-failure" => run("phi-qinf-constant", &mut |r| qinf_failure(r, budget))?,
        "unif" => run("uniformization", &mut |r| unif(r, budget))?,
        _ => unreachable!("ids are canonical"),
    }
    let version = env!("CARGO_PKG_VERSION").to_string();
    let config = json!({ "id": id, "seed": seed, "budget": budget, "version": version });
    let config_hash = hex::encode(Sha256::digest(serde_json::to_vec(&config)?));
    Ok(RunReport {
        command: format!("barygap verify --lemma {id} --seed {seed} --budget {budget}"),
        id: id.to_string(),
        seed,
        budget,
        config_hash,
        passed: results.iter().all(|r| r.passed),
        timings,
        results,
        version,
    })
}

/// Accumulates cases and keeps the first counterexample.
struct Tally {
    property: &'static str,
    cases: usize,
    counterexample: Option<Value>,
}

impl Tally {
    fn new(property: &'static str) -> Self {
        Tally {
            property,
            cases: 0,
            counterexample: None,
        }
    }

    fn check(&mut self, ok: bool, case: impl FnOnce() -> Value) {
        self.cases += 1;
        if !ok && self.counterexample.is_none() {
            self.counterexample = Some(case());
        }
    }

    fn finish(self, observed: Value) -> PropertyResult {
        PropertyResult {
            property: self.property.to_string(),
            passed: self.counterexample.is_none(),
            cases: self.cases,
            observed,
            counterexample: self.counterexample,
        }
    }
}

/// A random connected-or-not `D`-regular graph on 4 to 8 vertices.
fn random_graph(rng: &mut ChaCha8Rng) -> Result<(Graph, usize, u64)> {
    loop {
        let n = rng.random_range(4..=8usize);
        let d = rng.random_range(1..n);
        if n * d % 2 != 0 {
            continue;
        }
        let seed = rng.random::<u64>();
        if let Ok(g) = random_regular(n, d, seed) {
            return Ok((g, d, seed));
        }
    }
}

fn random_tuple(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    (0..k).map(|_| rng.random_range(0..n)).collect()
}

fn phi_gram(rng: &mut ChaCha8Rng, graphs: usize) -> Result<PropertyResult> {
    let mut tally = Tally::new("phi-gram");
    for _ in 0..graphs {
        let (g, deg, gseed) = random_graph(rng)?;
        let k = rng.random_range(2..=4);
        let cfg = embed_phi(&g, k, 2.0, 2.0)?;
        let n = g.n();
        for i in 0..k {
            for v in 0..n {
                let x = cfg.point(i, v);
                let want = (deg * (k - 1)) as i64;
                let got = x.norm_sq();
                tally.check(got == want, || json!({"graph_seed": gseed, "n": n, "degree": deg, "k": k, "i": i, "v": v, "norm_sq": got, "expected": want}));
                for ip in i + 1..k {
                    for vp in 0..n {
                        let got = x.dot(cfg.point(ip, vp));
                        let want = i64::from(g.has_edge(v, vp));
                        tally.check(got == want, || json!({"graph_seed": gseed, "n": n, "degree": deg, "k": k, "i": i, "v": v, "i2": ip, "v2": vp, "dot": got, "expected": want}));
                    }
                }
            }
        }
    }
    Ok(tally.finish(json!({ "graphs": graphs })))
}

fn phi_collections(rng: &mut ChaCha8Rng, graphs: usize) -> Result<PropertyResult> {
    let mut tally = Tally::new("phi-collections");
    for _ in 0..graphs {
        let (g, deg, gseed) = random_graph(rng)?;
        for _ in 0..5 {
            let k = rng.random_range(2..=4);
            let cfg = embed_phi(&g, k, 2.0, 2.0)?;
            let tuple = random_tuple(rng, g.n(), k);
            let pts: Vec<SparseVector> = cfg.select(&tuple)?.into_iter().cloned().collect();
            let check = verify_collection(cfg.d, &pts)?;
            let edges = g.induced_edge_count(&tuple)?;
            let ok = check.ok && pts.len() == k && check.s == deg * (k - 1) && check.t == edges;
            tally.check(ok, || json!({"graph_seed": gseed, "degree": deg, "tuple": tuple, "check": check, "induced_edges": edges}));
        }
    }
    Ok(tally.finish(json!({ "graphs": graphs, "tuples_per_graph": 5 })))
}

/// A random `(k, s, t)`-collection with `t < C(k,2)` and `s >= k - 1`.
fn random_collection(rng: &mut ChaCha8Rng) -> Result<Collection> {
    let k = rng.random_range(3..=4);
    let s = rng.random_range(k - 1..=k + 1);
    let mut pairs: Vec<(usize, usize)> = (0..k).flat_map(|a| (a + 1..k).map(move |b| (a, b))).collect();
    pairs.shuffle(rng);
    let t = rng.random_range(0..pairs.len());
    pairs.truncate(t);
    Collection::from_pattern(k, s, &pairs)
}

fn coordinate_positivity(rng: &mut ChaCha8Rng, cases: usize) -> Result<PropertyResult> {
    let tol = 1e-9;
    let mut tally = Tally::new("coordinate-positivity");
    let mut least = f64::INFINITY;
    for _ in 0..cases {
        let c = random_collection(rng)?;
        let p = rng.random_range(1.0..3.0);
        let q = rng.random_range(1.2..4.0);
        let prob = FpqProblem::new(c.to_dense(), p, q);
        let sol = solve_fpq(&prob, tol)?;
        let support: Vec<usize> = c.supports.iter().flatten().copied().collect();
        let min_y = support.iter().map(|&j| sol.minimizer[j]).fold(f64::INFINITY, f64::min);
        least = least.min(min_y);
        tally.check(min_y > 10.0 * tol, || json!({"collection": c, "p": p, "q": q, "min_support_coordinate": min_y}));
    }
    Ok(tally.finish(json!({ "tolerance": tol, "least_support_coordinate": least })))
}

fn power_gap(rng: &mut ChaCha8Rng, samples: usize, convex: bool) -> Result<PropertyResult> {
    let mut tally = Tally::new(if convex { "power-gap-convex" } else { "power-gap-concave" });
    for _ in 0..samples {
        let big_t: f64 = rng.random_range(1.0..20.0);
        let t: f64 = rng.random_range(0.0..=big_t);
        let tp: f64 = rng.random_range(0.0..=t);
        let gamma: f64 = if convex { rng.random_range(1.0..5.0) } else { rng.random_range(0.01..1.0) };
        let lhs = t.powf(gamma) - tp.powf(gamma);
        let rhs = if convex { (t - tp).powf(gamma) } else { gamma / big_t * (t - tp) };
        let slack = 1e-12 * (1.0 + t.powf(gamma));
        tally.check(lhs >= rhs - slack, || json!({"t": t, "t_prime": tp, "T": big_t, "gamma": gamma, "lhs": lhs, "rhs": rhs}));
    }
    Ok(tally.finish(json!({ "samples": samples })))
}

/// Exponent grid of the monotonicity and clique-equality checks.
const MONO_Q: [f64; 3] = [1.5, 2.0, 3.0];
const MONO_P: [f64; 2] = [1.0, 2.0];
const MONO_TOL: f64 = 1e-8;

/// Chain endpoint: `(k, s, p, q, value)`.
type Endpoint = (usize, usize, f64, f64, f64);

fn monotone_chains(rng: &mut ChaCha8Rng, chains: usize, endpoints: &mut Vec<Endpoint>) -> Result<PropertyResult> {
    let mut tally = Tally::new("strict-decrease");
    let mut least_drop = f64::INFINITY;
    for chain in 0..chains {
        // Chains cycle through the exponent grid so every pair is covered.
        let q = MONO_Q[chain % MONO_Q.len()];
        let p = MONO_P[(chain / MONO_Q.len()) % MONO_P.len()];
        let mut c = random_collection(rng)?;
        let k = c.k();
        let full = k * (k - 1) / 2;
        let s = c.check().s;
        let mut value = solve_fpq(&FpqProblem::new(c.to_dense(), p, q), MONO_TOL)?.value;
        while c.check().t < full {
            let next = add_edge_move(&c)?;
            let v = solve_fpq(&FpqProblem::new(next.to_dense(), p, q), MONO_TOL)?.value;
            least_drop = least_drop.min(value - v);
            tally.check(v < value - 10.0 * MONO_TOL, || json!({"collection": c, "p": p, "q": q, "before": value, "after": v}));
            c = next;
            value = v;
        }
        endpoints.push((k, s, p, q, value));
    }
    Ok(tally.finish(json!({ "chains": chains, "tolerance": MONO_TOL, "least_decrease": least_drop })))
}

fn endpoints_agree(endpoints: &[Endpoint]) -> PropertyResult {
    let mut tally = Tally::new("clique-endpoints-equal");
    let mut groups: BTreeMap<(usize, usize, u64, u64), Vec<f64>> = BTreeMap::new();
    for &(k, s, p, q, v) in endpoints {
        groups.entry((k, s, p.to_bits(), q.to_bits())).or_default().push(v);
    }
    let mut widest = 0.0f64;
    for ((k, s, p, q), vals) in &groups {
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        widest = widest.max(hi - lo);
        tally.check(hi - lo <= 2.0 * MONO_TOL, || json!({"k": k, "s": s, "p": f64::from_bits(*p), "q": f64::from_bits(*q), "values": vals}));
    }
    tally.finish(json!({ "groups": groups.len(), "widest_spread": widest }))
}

fn cliques_equal(rng: &mut ChaCha8Rng, cases: usize) -> Result<PropertyResult> {
    let mut tally = Tally::new("cliques-equal");
    let mut widest = 0.0f64;
    for _ in 0..cases {
        let k = rng.random_range(3..=4);
        let s = rng.random_range(k - 1..=k + 1);
        let p = MONO_P[rng.random_range(0..MONO_P.len())];
        let q = MONO_Q[rng.random_range(0..MONO_Q.len())];
        let pairs: Vec<(usize, usize)> = (0..k).flat_map(|a| (a + 1..k).map(move |b| (a, b))).collect();
        let base = Collection::from_pattern(k, s, &pairs)?;
        // A second clique collection: shuffled pair order, relabeled coordinates, extra dimensions, reordered vectors.
        let mut shuffled = pairs.clone();
        shuffled.shuffle(rng);
        let other = Collection::from_pattern(k, s, &shuffled)?;
        let new_d = other.d + rng.random_range(0..4);
        let mut perm: Vec<usize> = (0..new_d).collect();
        perm.shuffle(rng);
        let mut order: Vec<usize> = (0..k).collect();
        order.shuffle(rng);
        let other = other.relabeled(new_d, &perm)?.reordered(&order);
        let a = solve_fpq(&FpqProblem::new(base.to_dense(), p, q), MONO_TOL)?.value;
        let b = solve_fpq(&FpqProblem::new(other.to_dense(), p, q), MONO_TOL)?.value;
        widest = widest.max((a - b).abs());
        tally.check((a - b).abs() <= 2.0 * MONO_TOL, || json!({"first": base, "second": other, "p": p, "q": q, "values": [a, b]}));
    }
    Ok(tally.finish(json!({ "tolerance": MONO_TOL, "widest_spread": widest })))
}

fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn q1_clique_value() -> Result<PropertyResult> {
    let mut tally = Tally::new("clique-value");
    let g = complete(4);
    let tuple = [0, 1, 2, 3];
    let mut observed = Vec::new();
    for p in [1.0, 2.0] {
        let cfg = embed_psi(&g, 4, p, 1.0)?;
        let want = q1_value_formula(4, 4, 3, 6, p)?;
        let sol = solve_fpq_sparse(&cfg.select(&tuple)?, cfg.d, &[1.0; 4], p, 1.0, 1e-7 * want, None)?;
        let gap = relative_gap(sol.value, want);
        observed.push(json!({"p": p, "value": sol.value, "lower_bound": sol.lower_bound, "formula": want}));
        tally.check(gap <= 1e-4, || json!({"p": p, "value": sol.value, "formula": want}));
    }
    Ok(tally.finish(Value::Array(observed)))
}

fn q1_random_tuples(rng: &mut ChaCha8Rng, cases: usize) -> Result<PropertyResult> {
    let mut tally = Tally::new("value-formula");
    let graphs = [complete(4), cycle(4)?, cycle(5)?];
    let configs: Vec<_> = graphs.iter().map(|g| embed_psi(g, 4, 1.0, 1.0)).collect::<Result<_>>()?;
    for _ in 0..cases {
        let gi = rng.random_range(0..graphs.len());
        let (g, cfg) = (&graphs[gi], &configs[gi]);
        let tuple = random_tuple(rng, g.n(), 4);
        let t = g.induced_edge_count(&tuple)?;
        let want = q1_value_formula(g.n(), 4, 0, t, 1.0)?;
        let sol = solve_fpq_sparse(&cfg.select(&tuple)?, cfg.d, &[1.0; 4], 1.0, 1.0, 1e-7 * want, None)?;
        tally.check(relative_gap(sol.value, want) <= 1e-4, || json!({"n": g.n(), "edges": g.edges(), "tuple": tuple, "value": sol.value, "formula": want}));
    }
    Ok(tally.finish(json!({ "graphs": ["K4", "C4", "C5"], "k": 4, "p": 1.0 })))
}

fn q1_witness() -> Result<PropertyResult> {
    let mut tally = Tally::new("witness-distance");
    let cfg = embed_psi(&complete(4), 4, 1.0, 1.0)?;
    let tuple = [0, 1, 2, 3];
    let y = q1_clique_witness(&cfg, &tuple)?;
    let distances: Vec<i64> = cfg.select(&tuple)?.iter().map(|x| l1_distance_exact(x, &y)).collect();
    for (i, &dist) in distances.iter().enumerate() {
        tally.check(dist == 114, || json!({"vector": i, "distance": dist, "expected": 114}));
    }
    Ok(tally.finish(json!({ "distances": distances })))
}

fn qinf_clique() -> Result<PropertyResult> {
    let mut tally = Tally::new("clique-upper-bound");
    let mut observed = Vec::new();
    let tuple = [0, 1, 2];
    for p in [1.0, 2.0] {
        let cfg = embed_xi(&complete(4), 3, p, f64::INFINITY)?;
        let y = qinf_clique_witness(&cfg, &tuple)?;
        let pts: Vec<Vec<f64>> = cfg.select(&tuple)?.iter().map(|x| x.to_dense(cfg.d)).collect();
        let radius = pts.iter().map(|x| norm_q(&x.iter().zip(&y).map(|(a, b)| a - b).collect::<Vec<_>>(), f64::INFINITY)).fold(0.0, f64::max);
        let prob = FpqProblem::new(pts, p, f64::INFINITY);
        let at_witness = objective(&prob, &y);
        let bound = 3.0 / 2f64.powf(p);
        let solved = solve_fpq(&prob, 1e-9)?.value;
        observed.push(json!({"p": p, "witness_value": at_witness, "solver_value": solved, "bound": bound, "witness_radius": radius}));
        tally.check(radius <= 0.5 && at_witness <= bound + 1e-6 && solved <= bound + 1e-6, || json!({"p": p, "witness_value": at_witness, "solver_value": solved, "bound": bound}));
    }
    Ok(tally.finish(Value::Array(observed)))
}

/// With `separated`, checks the minimum non-clique value against the
/// distance-2 bound `2`; otherwise against `2 + (k-2)/2^p`.
fn qinf_nonclique(lows: &mut Vec<(f64, f64)>, separated: bool) -> Result<PropertyResult> {
    let k = 3;
    if lows.is_empty() {
        let g = cycle(5)?;
        let opts = ChubOptions {
            graph: Some(g.clone()),
            symmetric: true,
            cap: DEFAULT_ENUM_CAP,
            ..Default::default()
        };
        for p in [1.0, 2.0] {
            let cfg = embed_xi(&g, k, p, f64::INFINITY)?;
            let res = solve_chub_with(&cfg, 1e-7, &opts)?;
            lows.push((p, res.lower_bound));
        }
    }
    let mut tally = Tally::new(if separated { "separated-from-clique" } else { "nonclique-lower-bound" });
    let mut observed = Vec::new();
    for &(p, lower) in lows.iter() {
        let bound = if separated { 2.0 } else { 2.0 + (k - 2) as f64 / 2f64.powf(p) };
        observed.push(json!({"p": p, "lower_bound": lower, "bound": bound, "clique_value": k as f64 / 2f64.powf(p)}));
        tally.check(lower >= bound - 1e-4, || json!({"graph": "C5", "k": k, "p": p, "lower_bound": lower, "bound": bound}));
    }
    Ok(tally.finish(Value::Array(observed)))
}

fn q1_failure(rng: &mut ChaCha8Rng, cases: usize) -> Result<PropertyResult> {
    let mut tally = Tally::new("phi-q1-constant");
    let k = 6;
    let g = complete(4);
    let deg = 3.0;
    for _ in 0..cases {
        let p = MONO_P[rng.random_range(0..MONO_P.len())];
        let cfg = embed_phi(&g, k, p, 1.0)?;
        let tuple = random_tuple(rng, g.n(), k);
        let want = k as f64 * (deg * (k - 1) as f64).powf(p);
        let sol = solve_fpq_sparse(&cfg.select(&tuple)?, cfg.d, &[1.0; 6], p, 1.0, 1e-7 * want, None)?;
        tally.check(relative_gap(sol.value, want) <= 1e-4, || json!({"tuple": tuple, "p": p, "value": sol.value, "expected": want}));
    }
    Ok(tally.finish(json!({ "graph": "K4", "k": k })))
}

fn qinf_failure(rng: &mut ChaCha8Rng, cases: usize) -> Result<PropertyResult> {
    let mut tally = Tally::new("phi-qinf-constant");
    let graphs = [("K4", complete(4)), ("C5", cycle(5)?)];
    let mut observed = BTreeMap::new();
    for _ in 0..cases {
        let (name, g) = &graphs[rng.random_range(0..graphs.len())];
        let k = rng.random_range(3..=4);
        let p = MONO_P[rng.random_range(0..MONO_P.len())];
        let cfg = embed_phi(g, k, p, f64::INFINITY)?;
        let tuple = random_tuple(rng, g.n(), k);
        let want = k as f64 / 2f64.powf(p);
        let sol = solve_fpq_sparse(&cfg.select(&tuple)?, cfg.d, &vec![1.0; k], p, f64::INFINITY, 1e-7, None)?;
        observed.insert(format!("k={k},p={p}"), sol.value);
        tally.check((sol.value - want).abs() <= 1e-4, || json!({"graph": name, "tuple": tuple, "k": k, "p": p, "value": sol.value, "expected": want}));
    }
    Ok(tally.finish(json!({ "last_value_per_setting": observed })))
}

/// Random measure with `n` atoms strictly inside the unit Euclidean ball.
fn random_ball_measure(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Result<DiscreteMeasure> {
    let atoms: Vec<Vec<f64>> = (0..n)
        .map(|_| loop {
            let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            if norm_q(&v, 2.0) <= 0.95 {
                break v;
            }
        })
        .collect();
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut masses: Vec<f64> = raw.iter().map(|m| m / total).collect();
    let rest: f64 = masses[1..].iter().sum();
    masses[0] = 1.0 - rest;
    DiscreteMeasure::new(atoms, masses)
}

fn unif(rng: &mut ChaCha8Rng, cases: usize) -> Result<PropertyResult> {
    let mut tally = Tally::new("uniformization");
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let measures = (0..2).map(|_| random_ball_measure(rng, 2, 2)).collect::<Result<Vec<_>>>()?;
        let inst = BaryInstance::new(measures, 2.0, 2.0)?;
        let before = bary_value_mot(&inst, 1e-9)?.value;
        for eps in [0.05, 0.1] {
            let out = uniformize(&inst, eps)?;
            let uniform = out.measures.iter().all(DiscreteMeasure::is_uniform);
            let in_ball = out.measures.iter().all(|m| m.atoms.iter().all(|a| norm_q(a, 2.0) <= 1.0 + 1e-12));
            let after = bary_value_mot(&out, 1e-9)?.value;
            worst = worst.max((before - after).abs() / eps);
            tally.check(uniform && in_ball && (before - after).abs() <= eps, || {
                json!({"instance": inst, "eps": eps, "value": before, "uniformized_value": after, "uniform": uniform, "in_ball": in_ball})
            });
        }
    }
    Ok(tally.finish(json!({ "measures": 2, "atoms": 2, "p": 2.0, "q": 2.0, "worst_change_over_eps": worst })))
}
