//! Uniformization: round masses to multiples of `1/N` by largest remainders,
//! then split every atom of mass `m/N` into `m` distinct nearby copies of
//! mass `1/N` inside the unit ball.

use serde::{Deserialize, Serialize};

use super::{dist, BaryInstance, DiscreteMeasure};
use crate::error::{input, Result};
use crate::fpq::norm_q;

/// `N = ceil(4 n p 2^p / eps)`, so that `p 2^p n / N <= eps / 4`.
pub fn uniform_atom_count(n: usize, p: f64, eps: f64) -> usize {
    (4.0 * n as f64 * p * 2f64.powf(p) / eps).ceil() as usize
}

/// Replaces every measure by a uniform measure on `N` atoms, with `N` from
/// [`uniform_atom_count`] for the largest support size.
pub fn uniformize(inst: &BaryInstance, eps: f64) -> Result<BaryInstance> {
    let n = inst.measures.iter().map(DiscreteMeasure::len).max().unwrap_or(1);
    uniformize_with_n(inst, eps, uniform_atom_count(n, inst.p, eps))
}

/// Uniformization with an explicit atom count `big_n`; copies move by at most
/// `eps / (p 2^p)` in `l_q`.
pub fn uniformize_with_n(inst: &BaryInstance, eps: f64, big_n: usize) -> Result<BaryInstance> {
    inst.validate()?;
    if !(eps > 0.0 && eps.is_finite()) {
        return input(format!("eps must be positive, got {eps}"));
    }
    if big_n == 0 {
        return input("the atom count must be positive");
    }
    for m in &inst.measures {
        if let Some(a) = m.atoms.iter().find(|a| norm_q(a, inst.q) > 1.0 + 1e-12) {
            return input(format!("atom {a:?} lies outside the unit l_q ball; rescale first"));
        }
    }
    let radius = eps / (inst.p * 2f64.powf(inst.p));
    let measures = inst
        .measures
        .iter()
        .map(|m| split(m, &apportion(&m.masses, big_n), radius, inst.q, big_n))
        .collect::<Result<Vec<_>>>()?;
    let out = BaryInstance {
        measures,
        weights: inst.weights.clone(),
        p: inst.p,
        q: inst.q,
    };
    out.validate()?;
    Ok(out)
}

/// Largest-remainder apportionment of `big_n` units; ties go to the lower index.
pub(crate) fn apportion(masses: &[f64], big_n: usize) -> Vec<usize> {
    let scaled: Vec<f64> = masses.iter().map(|m| m * big_n as f64).collect();
    let mut counts: Vec<usize> = scaled.iter().map(|s| s.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..masses.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = scaled[a] - scaled[a].floor();
        let rb = scaled[b] - scaled[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut left = big_n.saturating_sub(assigned);
    for &j in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[j] += 1;
        left -= 1;
    }
    // Floating error can overshoot by a unit; take it from the smallest remainder.
    let mut excess = counts.iter().sum::<usize>().saturating_sub(big_n);
    for &j in order.iter().rev() {
        if excess == 0 {
            break;
        }
        if counts[j] > 0 {
            counts[j] -= 1;
            excess -= 1;
        }
    }
    counts
}

fn split(m: &DiscreteMeasure, counts: &[usize], radius: f64, q: f64, big_n: usize) -> Result<DiscreteMeasure> {
    let d = m.d.max(1);
    let mut atoms = Vec::with_capacity(big_n);
    for (x, &c) in m.atoms.iter().zip(counts) {
        if c > 1 && 0.5 * radius / c as f64 <= 1e-12 * (1.0 + norm_q(x, q)) {
            return input(format!(
                "eps too small: splitting an atom into {c} copies needs offsets of {:e}, below double precision",
                0.5 * radius / c as f64
            ));
        }
        for l in 0..c {
            let mut y = x.clone();
            if l > 0 && m.d > 0 {
                // Stepping toward zero keeps boundary atoms inside without a radial projection.
                let j = (l - 1) % d;
                let step = 0.5 * radius * l as f64 / c as f64;
                y[j] += if y[j] > 0.0 { -step } else { step };
                let nrm = norm_q(&y, q);
                if nrm > 1.0 {
                    y.iter_mut().for_each(|v| *v /= nrm);
                }
            }
            atoms.push(y);
        }
    }
    let mut keys: Vec<Vec<u64>> = atoms.iter().map(|a: &Vec<f64>| a.iter().map(|v| (v + 0.0).to_bits()).collect()).collect();
    keys.sort_unstable();
    if keys.windows(2).any(|w| w[0] == w[1]) {
        return input("split atoms collide; choose a different eps or atom count");
    }
    Ok(DiscreteMeasure {
        d: m.d,
        masses: vec![1.0 / big_n as f64; atoms.len()],
        atoms,
    })
}

/// Coupling between a measure and its rounded masses on the same atoms.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundingCoupling {
    pub rounded: Vec<f64>,
    /// `(from, to, mass)`; mass stays in place except at most `1/N` per atom.
    pub moves: Vec<(usize, usize, f64)>,
    /// `sum mass * ||x_from - x_to||_q^p`, an upper bound on `W_{p,q}^p`.
    pub cost: f64,
    pub moved_mass: f64,
}

/// Explicit coupling from `mu` to its largest-remainder rounding with `big_n`
/// units: every atom keeps `min(mu_j, rounded_j)`, surpluses feed deficits.
pub fn rounding_coupling(mu: &DiscreteMeasure, big_n: usize, p: f64, q: f64) -> RoundingCoupling {
    let counts = apportion(&mu.masses, big_n);
    let rounded: Vec<f64> = counts.iter().map(|&c| c as f64 / big_n as f64).collect();
    let mut moves = Vec::new();
    let mut surplus: Vec<(usize, f64)> = Vec::new();
    let mut deficit: Vec<(usize, f64)> = Vec::new();
    for (j, (&a, &b)) in mu.masses.iter().zip(&rounded).enumerate() {
        moves.push((j, j, a.min(b)));
        if a > b {
            surplus.push((j, a - b));
        } else if b > a {
            deficit.push((j, b - a));
        }
    }
    let (mut s, mut t) = (0, 0);
    let mut cost = 0.0;
    let mut moved = 0.0;
    while s < surplus.len() && t < deficit.len() {
        let amount = surplus[s].1.min(deficit[t].1);
        if amount > 0.0 {
            let (from, to) = (surplus[s].0, deficit[t].0);
            moves.push((from, to, amount));
            cost += amount * dist(&mu.atoms[from], &mu.atoms[to], q).powf(p);
            moved += amount;
        }
        surplus[s].1 -= amount;
        deficit[t].1 -= amount;
        if surplus[s].1 <= 0.0 {
            s += 1;
        }
        if deficit[t].1 <= 0.0 {
            t += 1;
        }
    }
    RoundingCoupling {
        rounded,
        moves,
        cost,
        moved_mass: moved,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn split_counts_follow_masses() {
        let mu = DiscreteMeasure::new(vec![vec![0.1, 0.0], vec![-0.2, 0.3]], vec![0.3, 0.7]).unwrap();
        let inst = BaryInstance::new(vec![mu], 2.0, 2.0).unwrap();
        let out = uniformize_with_n(&inst, 0.1, 10).unwrap();
        let m = &out.measures[0];
        assert_eq!(m.len(), 10);
        assert!(m.is_uniform());
        let near_first = m.atoms.iter().filter(|a| dist(a, &[0.1, 0.0], 2.0) <= 0.1 / 8.0).count();
        assert_eq!(near_first, 3);
    }

    #[test]
    fn uniform_input_is_preserved() {
        let atoms = vec![vec![0.5], vec![-0.5], vec![0.0], vec![0.25]];
        let mu = DiscreteMeasure::uniform(atoms.clone()).unwrap();
        let inst = BaryInstance::new(vec![mu], 1.0, 2.0).unwrap();
        let out = uniformize_with_n(&inst, 0.1, 4).unwrap();
        assert_eq!(out.measures[0].atoms, atoms);
    }

    #[test]
    fn copies_stay_close_and_inside_ball() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for &q in &[1.0, 2.0, f64::INFINITY] {
            let atoms: Vec<Vec<f64>> = (0..3)
                .map(|_| {
                    let v: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
                    let n = norm_q(&v, q);
                    v.iter().map(|x| x / n.max(1.0)).collect()
                })
                .collect();
            let mu = DiscreteMeasure::new(atoms.clone(), vec![0.2, 0.5, 0.3]).unwrap();
            let inst = BaryInstance::new(vec![mu], 2.0, q).unwrap();
            let eps = 0.1;
            let out = uniformize(&inst, eps).unwrap();
            let r = eps / (2.0 * 4.0);
            for a in &out.measures[0].atoms {
                assert!(norm_q(a, q) <= 1.0 + 1e-12);
                assert!(atoms.iter().any(|x| dist(a, x, q) <= r + 1e-12));
            }
        }
    }

    #[test]
    fn rounding_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for &p in &[1.0, 2.0] {
            for _ in 0..20 {
                let n = rng.random_range(2..6);
                let atoms: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random_range(-0.7..0.7), rng.random_range(-0.7..0.7)]).collect();
                let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
                let s: f64 = raw.iter().sum();
                let mut masses: Vec<f64> = raw.iter().map(|m| m / s).collect();
                let rest: f64 = masses[1..].iter().sum();
                masses[0] = 1.0 - rest;
                let mu = DiscreteMeasure::new(atoms, masses).unwrap();
                let big_n = rng.random_range(5..200);
                let c = rounding_coupling(&mu, big_n, p, 2.0);
                assert!((c.rounded.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!(c.moved_mass <= n as f64 / big_n as f64 + 1e-12);
                // Diameter of the unit ball is 2.
                assert!(c.cost <= 2f64.powf(p) * n as f64 / big_n as f64 + 1e-12);
                if p == 1.0 {
                    assert!(c.cost <= 2.0 * n as f64 / big_n as f64 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn boundary_atoms_split_without_collisions() {
        let a = DiscreteMeasure::new(vec![vec![0.0], vec![0.5]], vec![0.5, 0.5]).unwrap();
        let b = DiscreteMeasure::dirac(vec![1.0]);
        let inst = BaryInstance::new(vec![a, b], 2.0, 2.0).unwrap();
        let out = uniformize(&inst, 0.5).unwrap();
        let r = 0.5 / 8.0;
        for a in &out.measures[1].atoms {
            assert!(a[0] <= 1.0 && a[0] >= 1.0 - r);
        }
    }

    #[test]
    fn rejects_atoms_outside_ball() {
        let mu = DiscreteMeasure::dirac(vec![2.0]);
        let inst = BaryInstance::new(vec![mu], 1.0, 2.0).unwrap();
        assert!(uniformize(&inst, 0.1).is_err());
    }
}
