//! Discrete measures, `W_{p,q}` distances, exact barycenter values through
//! multi-marginal transport, barycenter extraction, the union-support
//! 2-approximation and uniformization.

mod mot;
mod uniform;

use std::collections::HashMap;
use std::sync::Mutex;

use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_cap, input, Error, Result};
use crate::fpq::{norm_q, pair_factor, solve_fpq, FpqProblem};
use crate::lp::{solve_transport, SparseLp};
use crate::tuples::{decode, encode, tuple_count};

pub(crate) use mot::{CostFn, Marginals};
pub use uniform::{rounding_coupling, uniform_atom_count, uniformize, uniformize_with_n, RoundingCoupling};

/// Default cap on the number of tuples (`prod n_i`) of the MOT cost table.
pub const DEFAULT_LP_CAP: u128 = 100_000;
/// Default cap on `n_1 n_2` for the two-measure network simplex path.
pub const DEFAULT_NETWORK_CAP: u128 = 20_000_000;

/// Probability measure with finitely many distinct atoms in `R^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    pub d: usize,
    pub atoms: Vec<Vec<f64>>,
    pub masses: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(atoms: Vec<Vec<f64>>, masses: Vec<f64>) -> Result<Self> {
        let d = atoms.first().map_or(0, Vec::len);
        let m = DiscreteMeasure { d, atoms, masses };
        m.validate()?;
        Ok(m)
    }

    pub fn uniform(atoms: Vec<Vec<f64>>) -> Result<Self> {
        let n = atoms.len();
        Self::new(atoms, vec![1.0 / n as f64; n])
    }

    pub fn dirac(x: Vec<f64>) -> Self {
        DiscreteMeasure {
            d: x.len(),
            atoms: vec![x],
            masses: vec![1.0],
        }
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// All masses equal.
    pub fn is_uniform(&self) -> bool {
        self.masses.iter().all(|&m| m == self.masses[0])
    }

    pub fn validate(&self) -> Result<()> {
        if self.atoms.is_empty() {
            return input("a measure needs at least one atom");
        }
        if self.atoms.len() != self.masses.len() {
            return input("one mass per atom is required");
        }
        if self.atoms.iter().any(|a| a.len() != self.d) {
            return input("atoms have inconsistent dimension");
        }
        if self.atoms.iter().flatten().any(|v| !v.is_finite()) {
            return input("atoms must be finite");
        }
        if self.masses.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return input("masses must be finite and nonnegative");
        }
        let total: f64 = self.masses.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return input(format!("masses sum to {total}, not 1"));
        }
        let mut keys: Vec<Vec<u64>> = self
            .atoms
            .iter()
            .map(|a| a.iter().map(|v| (v + 0.0).to_bits()).collect())
            .collect();
        keys.sort_unstable();
        if keys.windows(2).any(|w| w[0] == w[1]) {
            return input("atoms must be pairwise distinct");
        }
        Ok(())
    }
}

/// `k` measures with barycenter weights `lambda` and exponents `(p, q)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaryInstance {
    pub measures: Vec<DiscreteMeasure>,
    pub weights: Vec<f64>,
    pub p: f64,
    #[serde(with = "crate::qexp")]
    pub q: f64,
}

impl BaryInstance {
    /// Uniform weights `1/k`.
    pub fn new(measures: Vec<DiscreteMeasure>, p: f64, q: f64) -> Result<Self> {
        let k = measures.len();
        let inst = BaryInstance {
            measures,
            weights: vec![1.0 / k.max(1) as f64; k],
            p,
            q,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn k(&self) -> usize {
        self.measures.len()
    }

    pub fn d(&self) -> usize {
        self.measures.first().map_or(0, |m| m.d)
    }

    pub fn shape(&self) -> Vec<usize> {
        self.measures.iter().map(DiscreteMeasure::len).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.measures.is_empty() {
            return input("an instance needs at least one measure");
        }
        if !(self.p.is_finite() && self.p >= 1.0) || !(self.q >= 1.0) {
            return input("exponents must satisfy p >= 1 finite and q in [1, inf]");
        }
        for m in &self.measures {
            m.validate()?;
            if m.d != self.d() {
                return input("measures live in different dimensions");
            }
        }
        if self.weights.len() != self.k() || self.weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return input("one nonnegative weight per measure is required");
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return input(format!("weights sum to {total}, not 1"));
        }
        Ok(())
    }

    /// `max_i` of the `l_q` diameter of the union support, to the power `p`.
    pub fn support_diameter_pow(&self) -> f64 {
        let atoms: Vec<&Vec<f64>> = self.measures.iter().flat_map(|m| &m.atoms).collect();
        let mut best = 0.0f64;
        for (a, x) in atoms.iter().enumerate() {
            for y in &atoms[a + 1..] {
                best = best.max(dist(x, y, self.q));
            }
        }
        best.powf(self.p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let inst: BaryInstance = serde_json::from_str(text)?;
        inst.validate()?;
        Ok(inst)
    }
}

fn dist(x: &[f64], y: &[f64], q: f64) -> f64 {
    let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    norm_q(&diff, q)
}

/// Sparse `k`-way coupling; entries are `(tuple, mass)` with positive mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportTensor {
    pub shape: Vec<usize>,
    pub entries: Vec<(Vec<usize>, f64)>,
}

impl TransportTensor {
    /// `[m_i(P)]_j = sum of entries whose i-th index is j`.
    pub fn marginal(&self, i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.shape[i]];
        for (t, m) in &self.entries {
            out[t[i]] += m;
        }
        out
    }

    /// Largest deviation of any marginal entry from the instance masses.
    pub fn marginal_violation(&self, inst: &BaryInstance) -> f64 {
        let mut worst = 0.0f64;
        for (i, mu) in inst.measures.iter().enumerate() {
            for (a, b) in self.marginal(i).iter().zip(&mu.masses) {
                worst = worst.max((a - b).abs());
            }
        }
        if self.entries.iter().any(|(_, m)| *m < 0.0) {
            worst = f64::INFINITY;
        }
        worst
    }

    /// `<C, P>` with the given cost table in lexicographic tuple order.
    pub fn cost(&self, table: &[f64]) -> f64 {
        self.entries.iter().map(|(t, m)| m * table[encode(t, &self.shape)]).sum()
    }
}

/// Tuple costs `C_j = min_y sum_i lambda_i ||x_{i,j_i} - y||_q^p`, each
/// certified to `tol` and memoized.
pub struct CostOracle<'a> {
    inst: &'a BaryInstance,
    tol: f64,
    cache: Mutex<HashMap<Vec<usize>, (f64, f64)>>,
}

impl<'a> CostOracle<'a> {
    pub fn new(inst: &'a BaryInstance, tol: f64) -> Result<Self> {
        inst.validate()?;
        if !(tol > 0.0 && tol.is_finite()) {
            return input(format!("tolerance must be positive, got {tol}"));
        }
        Ok(CostOracle {
            inst,
            tol,
            cache: Mutex::new(HashMap::new()),
        })
    }

    /// `(upper, lower)` bounds on `C_j`, with `upper - lower <= tol`.
    pub fn cost(&self, tuple: &[usize]) -> Result<(f64, f64)> {
        if let Some(v) = self.cache.lock().expect("cache lock").get(tuple) {
            return Ok(*v);
        }
        let inst = self.inst;
        let points = tuple.iter().zip(&inst.measures).map(|(&j, m)| m.atoms[j].clone()).collect();
        let prob = FpqProblem::new(points, inst.p, inst.q).with_weights(inst.weights.clone());
        let sol = solve_fpq(&prob, self.tol)?;
        let v = (sol.value, sol.lower_bound);
        self.cache.lock().expect("cache lock").insert(tuple.to_vec(), v);
        Ok(v)
    }

    /// Every cost in lexicographic tuple order.
    pub fn table(&self, cap: u128) -> Result<Vec<(f64, f64)>> {
        let shape = self.inst.shape();
        let total = tuple_count(&shape).unwrap_or(u128::MAX);
        check_cap("multi-marginal cost table", total, cap)?;
        (0..total as usize)
            .into_par_iter()
            .map_init(
                || vec![0; shape.len()],
                |t, idx| {
                    decode(idx, &shape, t);
                    self.cost(t)
                },
            )
            .collect()
    }

    /// Largest cost modulus over all tuples.
    pub fn c_max(&self, cap: u128) -> Result<f64> {
        Ok(self.table(cap)?.iter().map(|c| c.0.abs()).fold(0.0, f64::max))
    }
}

/// `W_{p,q}(mu, nu)`: the `p`-th root of the optimal transport cost.
pub fn wasserstein_pq(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64, q: f64) -> Result<f64> {
    Ok(transport_cost_pq(mu, nu, p, q)?.powf(1.0 / p))
}

/// `W_{p,q}^p(mu, nu)` by the transportation LP.
pub fn transport_cost_pq(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64, q: f64) -> Result<f64> {
    mu.validate()?;
    nu.validate()?;
    if mu.d != nu.d {
        return input("measures live in different dimensions");
    }
    let (n, m) = (mu.len(), nu.len());
    let mut lp = SparseLp::<f64>::new(n + m);
    lp.rhs[..n].copy_from_slice(&mu.masses);
    lp.rhs[n..].copy_from_slice(&nu.masses);
    for (a, x) in mu.atoms.iter().enumerate() {
        for (b, y) in nu.atoms.iter().enumerate() {
            lp.add_column(dist(x, y, q).powf(p), vec![(a, 1.0), (n + b, 1.0)]);
        }
    }
    Ok(lp.solve()?.objective.max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MotMethod {
    /// Revised simplex with delayed column generation over the cost table.
    ColumnGeneration,
    /// Two uniform measures: integer network simplex.
    NetworkSimplex,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MotResult {
    /// Transport cost of `plan` under the certified cost upper bounds.
    pub value: f64,
    pub lower_bound: f64,
    pub plan: TransportTensor,
    pub method: MotMethod,
}

#[derive(Debug, Clone, Copy)]
pub struct BaryOptions {
    pub lp_cap: u128,
    pub network_cap: u128,
}

impl Default for BaryOptions {
    fn default() -> Self {
        BaryOptions {
            lp_cap: DEFAULT_LP_CAP,
            network_cap: DEFAULT_NETWORK_CAP,
        }
    }
}

/// Barycenter value `min_P <C, P>` over couplings of the instance measures.
pub fn bary_value_mot(inst: &BaryInstance, tol: f64) -> Result<MotResult> {
    bary_value_mot_with(inst, tol, BaryOptions::default())
}

pub fn bary_value_mot_with(inst: &BaryInstance, tol: f64, opts: BaryOptions) -> Result<MotResult> {
    inst.validate()?;
    if !(tol > 0.0 && tol.is_finite()) {
        return input(format!("tolerance must be positive, got {tol}"));
    }
    if inst.k() == 2 && inst.measures.iter().all(DiscreteMeasure::is_uniform) {
        return two_uniform(inst, opts.network_cap);
    }
    let oracle = CostOracle::new(inst, 0.5 * tol)?;
    let table = oracle.table(opts.lp_cap)?;
    let masses: Vec<Vec<f64>> = inst.measures.iter().map(|m| m.masses.clone()).collect();
    solve_table(&inst.shape(), &table, Marginals::Fixed(&masses))
}

/// MOT over a precomputed `(upper, lower)` cost table.
pub(crate) fn solve_table(shape: &[usize], table: &[(f64, f64)], marginals: Marginals<'_, f64>) -> Result<MotResult> {
    let slack = table.iter().map(|c| c.0 - c.1).fold(0.0, f64::max);
    solve_costs(shape, table.len(), &|idx, _| table[idx].0, slack, marginals)
}

/// MOT over streamed cost upper bounds, each at most `slack` above the true cost.
pub(crate) fn solve_costs(shape: &[usize], total: usize, upper: CostFn<'_, f64>, slack: f64, marginals: Marginals<'_, f64>) -> Result<MotResult> {
    let out = mot::solve_with(shape, total, upper, marginals)?;
    let entries = out
        .plan
        .into_iter()
        .map(|(idx, m)| {
            let mut t = vec![0; shape.len()];
            decode(idx, shape, &mut t);
            (t, m)
        })
        .collect();
    // Lowering every cost by at most `slack` lowers the optimum by at most `slack`.
    Ok(MotResult {
        value: out.value,
        lower_bound: out.value - slack,
        plan: TransportTensor {
            shape: shape.to_vec(),
            entries,
        },
        method: MotMethod::ColumnGeneration,
    })
}

fn two_uniform(inst: &BaryInstance, cap: u128) -> Result<MotResult> {
    let (a, b) = (&inst.measures[0], &inst.measures[1]);
    let (n1, n2) = (a.len(), b.len());
    check_cap("two-measure transport arcs", (n1 * n2) as u128, cap)?;
    let lcm = n1.lcm(&n2);
    let supply = vec![(lcm / n1) as i64; n1];
    let demand = vec![(lcm / n2) as i64; n2];
    let factor = pair_factor(inst.weights[0], inst.weights[1], inst.p);
    let cost: Vec<f64> = (0..n1 * n2)
        .into_par_iter()
        .map(|idx| factor * dist(&a.atoms[idx / n2], &b.atoms[idx % n2], inst.q).powf(inst.p))
        .collect();
    let sol = solve_transport(&supply, &demand, &cost)?;
    let scale = 1.0 / lcm as f64;
    let entries = sol
        .flows
        .iter()
        .filter(|f| f.2 > 0)
        .map(|&(i, j, f)| (vec![i, j], f as f64 * scale))
        .collect();
    let value = sol.cost * scale;
    Ok(MotResult {
        value,
        lower_bound: value,
        plan: TransportTensor {
            shape: vec![n1, n2],
            entries,
        },
        method: MotMethod::NetworkSimplex,
    })
}

/// Exact rational MOT value for `p = q = 2`, with atoms and weights read as
/// exact binary rationals.
pub fn bary_value_mot_exact_22(inst: &BaryInstance, cap: u128) -> Result<(BigRational, TransportTensor)> {
    inst.validate()?;
    if inst.p != 2.0 || inst.q != 2.0 {
        return input("the exact barycenter solver needs p = q = 2");
    }
    let shape = inst.shape();
    let total = tuple_count(&shape).unwrap_or(u128::MAX);
    check_cap("multi-marginal cost table", total, cap)?;
    let exact = |x: f64| BigRational::from_f64(x).expect("finite");
    let weights: Vec<BigRational> = inst.weights.iter().map(|&w| exact(w)).collect();
    let wsum = weights.iter().fold(BigRational::zero(), |a, b| a + b);
    let atoms: Vec<Vec<Vec<BigRational>>> = inst
        .measures
        .iter()
        .map(|m| m.atoms.iter().map(|a| a.iter().map(|&v| exact(v)).collect()).collect())
        .collect();
    let d = inst.d();
    let costs: Vec<BigRational> = (0..total as usize)
        .into_par_iter()
        .map_init(
            || vec![0; shape.len()],
            |t, idx| {
                decode(idx, &shape, t);
                let mut mean = vec![BigRational::zero(); d];
                for (i, &j) in t.iter().enumerate() {
                    for c in 0..d {
                        mean[c] += &weights[i] * &atoms[i][j][c];
                    }
                }
                for m in mean.iter_mut() {
                    *m /= &wsum;
                }
                let mut cost = BigRational::zero();
                for (i, &j) in t.iter().enumerate() {
                    for c in 0..d {
                        let diff = &atoms[i][j][c] - &mean[c];
                        cost += &weights[i] * &diff * &diff;
                    }
                }
                cost
            },
        )
        .collect();
    let masses: Vec<Vec<BigRational>> = inst
        .measures
        .iter()
        .map(|m| m.masses.iter().map(|&v| exact(v)).collect())
        .collect();
    // Exact masses must sum to exactly one for the rational LP.
    for m in &masses {
        if m.iter().fold(BigRational::zero(), |a, b| a + b) != BigRational::one() {
            return input("masses are not exactly representable as a probability vector; use uniform masses with power-of-two or matching denominators");
        }
    }
    let out = mot::solve(&shape, &costs, Marginals::Fixed(&masses))?;
    let entries = out
        .plan
        .iter()
        .map(|(idx, m)| {
            let mut t = vec![0; shape.len()];
            decode(*idx, &shape, &mut t);
            (t, crate::fpq::rational_to_f64(m))
        })
        .collect();
    Ok((out.value, TransportTensor { shape, entries }))
}

/// Push-forward of the plan under the tuple-wise optimal hub.
pub fn extract_barycenter(plan: &TransportTensor, inst: &BaryInstance, tol: f64) -> Result<DiscreteMeasure> {
    inst.validate()?;
    let mut atoms: Vec<Vec<f64>> = Vec::new();
    let mut masses: Vec<f64> = Vec::new();
    let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
    for (t, m) in &plan.entries {
        if *m <= 0.0 {
            continue;
        }
        let points = t.iter().zip(&inst.measures).map(|(&j, mu)| mu.atoms[j].clone()).collect();
        let prob = FpqProblem::new(points, inst.p, inst.q).with_weights(inst.weights.clone());
        let y = solve_fpq(&prob, tol)?.minimizer;
        let key: Vec<u64> = y.iter().map(|v| (v + 0.0).to_bits()).collect();
        match index.get(&key) {
            Some(&a) => masses[a] += m,
            None => {
                index.insert(key, atoms.len());
                atoms.push(y);
                masses.push(*m);
            }
        }
    }
    let total: f64 = masses.iter().sum();
    if total <= 0.0 {
        return Err(Error::Input("plan carries no mass".into()));
    }
    masses.iter_mut().for_each(|m| *m /= total);
    DiscreteMeasure::new(atoms, masses)
}

/// `sum_i lambda_i W_{p,q}^p(mu_i, nu)`.
pub fn barycenter_objective(inst: &BaryInstance, nu: &DiscreteMeasure) -> Result<f64> {
    inst.measures
        .iter()
        .zip(&inst.weights)
        .map(|(mu, w)| Ok(w * transport_cost_pq(mu, nu, inst.p, inst.q)?))
        .sum()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BorgwardtResult {
    pub value: f64,
    pub nu: DiscreteMeasure,
}

/// Best barycenter supported on the union of the input supports: one LP over
/// the support weights and all `k` transport plans.
pub fn borgwardt_2approx(inst: &BaryInstance, cap: u128) -> Result<BorgwardtResult> {
    inst.validate()?;
    let mut support: Vec<Vec<f64>> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for m in &inst.measures {
        for a in &m.atoms {
            if seen.insert(a.iter().map(|v| (v + 0.0).to_bits()).collect::<Vec<u64>>()) {
                support.push(a.clone());
            }
        }
    }
    let s = support.len();
    let sizes = inst.shape();
    let plan_cols: usize = sizes.iter().map(|n| n * s).sum();
    check_cap("union-support LP variables", (plan_cols + s) as u128, cap)?;
    // Rows: (i, j) source masses, then (i, s) support balance, then sum w = 1.
    let src_off: Vec<usize> = sizes.iter().scan(0, |a, &n| { let o = *a; *a += n; Some(o) }).collect();
    let n_src: usize = sizes.iter().sum();
    let bal = |i: usize, z: usize| n_src + i * s + z;
    let rows = n_src + inst.k() * s + 1;
    let mut lp = SparseLp::<f64>::new(rows);
    for (i, m) in inst.measures.iter().enumerate() {
        for (j, &mass) in m.masses.iter().enumerate() {
            lp.rhs[src_off[i] + j] = mass;
        }
    }
    lp.rhs[rows - 1] = 1.0;
    for (i, m) in inst.measures.iter().enumerate() {
        for (j, x) in m.atoms.iter().enumerate() {
            for (z, y) in support.iter().enumerate() {
                let c = inst.weights[i] * dist(x, y, inst.q).powf(inst.p);
                lp.add_column(c, vec![(src_off[i] + j, 1.0), (bal(i, z), 1.0)]);
            }
        }
    }
    let w_first = lp.cols.len();
    for z in 0..s {
        let mut entries: Vec<(usize, f64)> = (0..inst.k()).map(|i| (bal(i, z), -1.0)).collect();
        entries.push((rows - 1, 1.0));
        lp.add_column(0.0, entries);
    }
    let sol = lp.solve()?;
    let mut atoms = Vec::new();
    let mut masses = Vec::new();
    for (z, y) in support.into_iter().enumerate() {
        let w = sol.x[w_first + z];
        if w > 1e-15 {
            atoms.push(y);
            masses.push(w);
        }
    }
    let total: f64 = masses.iter().sum();
    masses.iter_mut().for_each(|m| *m /= total);
    Ok(BorgwardtResult {
        value: sol.objective,
        nu: DiscreteMeasure::new(atoms, masses)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_measure(rng: &mut ChaCha8Rng, n: usize, d: usize) -> DiscreteMeasure {
        let atoms = (0..n).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
        let s: f64 = raw.iter().sum();
        let mut masses: Vec<f64> = raw.iter().map(|m| m / s).collect();
        let rest: f64 = masses[1..].iter().sum();
        masses[0] = 1.0 - rest;
        DiscreteMeasure::new(atoms, masses).unwrap()
    }

    #[test]
    fn wasserstein_examples() {
        let x = DiscreteMeasure::dirac(vec![0.0, 0.0]);
        let y = DiscreteMeasure::dirac(vec![3.0, 4.0]);
        assert!((wasserstein_pq(&x, &y, 2.0, 2.0).unwrap() - 5.0).abs() < 1e-12);
        assert!(wasserstein_pq(&x, &x, 1.0, 1.0).unwrap().abs() < 1e-12);
        let mu = DiscreteMeasure::uniform(vec![vec![0.0], vec![2.0]]).unwrap();
        let nu = DiscreteMeasure::dirac(vec![1.0]);
        assert!((wasserstein_pq(&mu, &nu, 2.0, 2.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn metric_sanity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for &(p, q) in &[(1.0, 1.0), (1.0, 2.0), (2.0, 2.0), (2.0, f64::INFINITY), (1.0, f64::INFINITY), (2.0, 1.0)] {
            for _ in 0..5 {
                let a = random_measure(&mut rng, 3, 2);
                let b = random_measure(&mut rng, 4, 2);
                let c = random_measure(&mut rng, 2, 2);
                let ab = wasserstein_pq(&a, &b, p, q).unwrap();
                let ba = wasserstein_pq(&b, &a, p, q).unwrap();
                assert!((ab - ba).abs() < 1e-8);
                let ac = wasserstein_pq(&a, &c, p, q).unwrap();
                let cb = wasserstein_pq(&c, &b, p, q).unwrap();
                assert!(ab <= ac + cb + 1e-8);
            }
        }
    }

    #[test]
    fn mot_examples() {
        let x = vec![vec![0.0, 1.0], vec![2.0, -1.0], vec![1.0, 1.0]];
        let inst = BaryInstance::new(x.iter().map(|a| DiscreteMeasure::dirac(a.clone())).collect(), 1.5, 3.0).unwrap();
        let res = bary_value_mot(&inst, 1e-9).unwrap();
        let f = solve_fpq(&FpqProblem::new(x, 1.5, 3.0), 1e-10).unwrap().value;
        assert!((res.value - f / 3.0).abs() < 1e-8);
        let nu = extract_barycenter(&res.plan, &inst, 1e-9).unwrap();
        assert_eq!(nu.len(), 1);

        let inst = BaryInstance::new(vec![DiscreteMeasure::dirac(vec![0.0]), DiscreteMeasure::dirac(vec![2.0])], 2.0, 2.0).unwrap();
        let res = bary_value_mot(&inst, 1e-9).unwrap();
        assert!((res.value - 1.0).abs() < 1e-12);
        let nu = extract_barycenter(&res.plan, &inst, 1e-9).unwrap();
        assert_eq!(nu.atoms, vec![vec![1.0]]);
        let b = borgwardt_2approx(&inst, DEFAULT_LP_CAP).unwrap();
        assert!((b.value - 2.0).abs() < 1e-12);
        assert!((b.value / res.value - 2.0).abs() < 1e-12);

        let mu = DiscreteMeasure::new(vec![vec![0.0, 0.0], vec![1.0, 0.5]], vec![0.25, 0.75]).unwrap();
        let inst = BaryInstance::new(vec![mu.clone(), mu.clone(), mu.clone()], 2.0, 2.0).unwrap();
        let res = bary_value_mot(&inst, 1e-9).unwrap();
        assert!(res.value.abs() < 1e-12);
        let nu = extract_barycenter(&res.plan, &inst, 1e-9).unwrap();
        assert!(barycenter_objective(&inst, &nu).unwrap() < 1e-12);
        assert!(borgwardt_2approx(&inst, DEFAULT_LP_CAP).unwrap().value.abs() < 1e-12);
    }

    #[test]
    fn plans_are_feasible_and_extraction_attains_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for &(p, q) in &[(2.0, 2.0), (1.0, 2.0), (2.0, 1.0), (1.0, f64::INFINITY)] {
            for _ in 0..3 {
                let ms = (0..3).map(|_| random_measure(&mut rng, 3, 2)).collect();
                let inst = BaryInstance::new(ms, p, q).unwrap();
                let tol = 1e-7;
                let res = bary_value_mot(&inst, tol).unwrap();
                assert!(res.plan.marginal_violation(&inst) <= 1e-9);
                let nu = extract_barycenter(&res.plan, &inst, tol).unwrap();
                let obj = barycenter_objective(&inst, &nu).unwrap();
                assert!(obj <= res.value + 3.0 * tol, "{obj} vs {}", res.value);
                let b = borgwardt_2approx(&inst, DEFAULT_LP_CAP).unwrap();
                assert!(b.value >= res.lower_bound - 1e-9 && b.value <= 2.0 * res.value + 1e-9);
            }
        }
    }

    #[test]
    fn grid_search_never_beats_mot() {
        // Fixed-support barycenters on a grid are feasible barycenters.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..3 {
            let ms: Vec<DiscreteMeasure> = (0..3).map(|_| random_measure(&mut rng, 2, 2)).collect();
            let inst = BaryInstance::new(ms.clone(), 2.0, 2.0).unwrap();
            let res = bary_value_mot(&inst, 1e-9).unwrap();
            let h = 0.2;
            let grid: Vec<Vec<f64>> = (0..=10)
                .flat_map(|a| (0..=10).map(move |b| vec![-1.0 + h * a as f64, -1.0 + h * b as f64]))
                .collect();
            // Union-support LP with the grid as the candidate support.
            let mut with_grid = ms.clone();
            with_grid.push(DiscreteMeasure::uniform(grid).unwrap());
            let mut padded = BaryInstance::new(with_grid, 2.0, 2.0).unwrap();
            padded.weights = vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0];
            let grid_value = borgwardt_2approx(&padded, 1_000_000).unwrap().value;
            // Snapping each optimal hub to the grid moves it by at most h/sqrt(2).
            let r = h / 2f64.sqrt();
            assert!(grid_value >= res.value - 1e-8);
            assert!(grid_value <= res.value + 2.0 * 2.0 * 2f64.sqrt() * r + r * r + 1e-8);
        }
    }

    #[test]
    fn exact_mode_matches_float() {
        let mu = DiscreteMeasure::uniform(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let nu = DiscreteMeasure::uniform(vec![vec![2.0, 2.0], vec![0.0, 0.0]]).unwrap();
        let xi = DiscreteMeasure::uniform(vec![vec![1.0, 1.0], vec![-1.0, 0.0]]).unwrap();
        let inst = BaryInstance::new(vec![mu, nu, xi], 2.0, 2.0).unwrap();
        let (exact, plan) = bary_value_mot_exact_22(&inst, DEFAULT_LP_CAP).unwrap();
        let approx = bary_value_mot(&inst, 1e-10).unwrap();
        assert!((crate::fpq::rational_to_f64(&exact) - approx.value).abs() < 1e-9);
        assert!(plan.marginal_violation(&inst) < 1e-12);
    }

    #[test]
    fn two_uniform_uses_network_simplex() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = DiscreteMeasure::uniform((0..4).map(|_| vec![rng.random_range(-1.0..1.0)]).collect()).unwrap();
        let b = DiscreteMeasure::uniform((0..6).map(|_| vec![rng.random_range(-1.0..1.0)]).collect()).unwrap();
        let inst = BaryInstance::new(vec![a, b], 2.0, 2.0).unwrap();
        let fast = bary_value_mot(&inst, 1e-9).unwrap();
        assert_eq!(fast.method, MotMethod::NetworkSimplex);
        let oracle = CostOracle::new(&inst, 1e-10).unwrap();
        let table = oracle.table(DEFAULT_LP_CAP).unwrap();
        let masses: Vec<Vec<f64>> = inst.measures.iter().map(|m| m.masses.clone()).collect();
        let slow = solve_table(&inst.shape(), &table, Marginals::Fixed(&masses)).unwrap();
        assert!((fast.value - slow.value).abs() < 1e-9);
        assert!(fast.plan.marginal_violation(&inst) < 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let inst = BaryInstance::new(vec![DiscreteMeasure::dirac(vec![1.0]), DiscreteMeasure::dirac(vec![2.0])], 1.0, f64::INFINITY).unwrap();
        let back = BaryInstance::from_json(&inst.to_json()).unwrap();
        assert_eq!(back, inst);
        assert!(inst.to_json().contains("\"inf\""));
    }
}
