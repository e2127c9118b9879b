//! Solvers for `1 < q < inf`: quasi-Newton descent with Fenchel-dual lower
//! bounds, Weiszfeld iterations for `p = 1, q = 2`, and the data-point
//! optimality test for `p = 1`.

use std::collections::VecDeque;

use super::compress::Reduced;
use super::{wnorm, Core, Method};
use crate::error::{Error, Result};

/// `sum_i w_i ||x_i - y||^p`, optionally accumulating the gradient in `y`.
pub(crate) fn obj_grad(r: &Reduced, y: &[f64], mut grad: Option<&mut [f64]>) -> f64 {
    if let Some(g) = grad.as_deref_mut() {
        g.fill(0.0);
    }
    let mut diff = vec![0.0; y.len()];
    let mut total = 0.0;
    for (x, &w) in r.pts.iter().zip(&r.w) {
        for ((d, a), b) in diff.iter_mut().zip(x).zip(y) {
            *d = a - b;
        }
        let nrm = wnorm(&diff, &r.mult, r.q);
        total += w * nrm.powf(r.p);
        if let Some(g) = grad.as_deref_mut() {
            if nrm > 0.0 {
                let coef = w * r.p * nrm.powf(r.p - r.q);
                for ((gc, d), m) in g.iter_mut().zip(&diff).zip(&r.mult) {
                    *gc -= coef * m * d.abs().powf(r.q - 1.0) * d.signum();
                }
            }
        }
    }
    total
}

/// Gradient of `||z||` (weighted) at `z != 0`; its dual norm is 1.
fn norm_gradient(z: &[f64], mult: &[f64], q: f64, out: &mut [f64]) -> f64 {
    let nrm = wnorm(z, mult, q);
    if nrm > 0.0 {
        let scale = nrm.powf(1.0 - q);
        for ((o, zc), m) in out.iter_mut().zip(z).zip(mult) {
            *o = scale * m * zc.abs().powf(q - 1.0) * zc.signum();
        }
    } else {
        out.fill(0.0);
    }
    nrm
}

/// Dual norm of the weighted `l_q` norm.
pub(crate) fn dual_norm(u: &[f64], mult: &[f64], q: f64) -> f64 {
    let qs = q / (q - 1.0);
    u.iter()
        .zip(mult)
        .map(|(uc, m)| m.powf(1.0 - qs) * uc.abs().powf(qs))
        .sum::<f64>()
        .powf(1.0 / qs)
}

/// Conjugate of `r -> r^p` on `r >= 0`, for `p > 1`.
pub(crate) fn power_conjugate(s: f64, p: f64) -> f64 {
    (p - 1.0) * (s / p).powf(p / (p - 1.0))
}

/// Lower bound on the optimum from multipliers built at `y`.
pub(crate) fn dual_bound(r: &Reduced, y: &[f64]) -> f64 {
    let k = r.pts.len();
    let dim = y.len();
    let mut diffs = vec![vec![0.0; dim]; k];
    let mut us = vec![vec![0.0; dim]; k];
    for i in 0..k {
        for c in 0..dim {
            diffs[i][c] = r.pts[i][c] - y[c];
        }
        let nrm = norm_gradient(&diffs[i], &r.mult, r.q, &mut us[i]);
        let scale = r.w[i] * r.p * nrm.powf(r.p - 1.0);
        us[i].iter_mut().for_each(|v| *v *= scale);
    }
    let wsum: f64 = r.w.iter().sum();
    let mut total = vec![0.0; dim];
    for u in &us {
        for (t, v) in total.iter_mut().zip(u) {
            *t += v;
        }
    }
    for (u, w) in us.iter_mut().zip(&r.w) {
        for (v, t) in u.iter_mut().zip(&total) {
            *v -= w / wsum * t;
        }
    }
    let inner: f64 = us
        .iter()
        .zip(&diffs)
        .map(|(u, d)| u.iter().zip(d).map(|(a, b)| a * b).sum::<f64>())
        .sum();
    if r.p == 1.0 {
        let theta = us
            .iter()
            .zip(&r.w)
            .map(|(u, w)| {
                let dn = dual_norm(u, &r.mult, r.q);
                if dn > *w {
                    w / dn
                } else {
                    1.0
                }
            })
            .fold(1.0f64, f64::min);
        theta * inner
    } else {
        let penalty: f64 = us
            .iter()
            .zip(&r.w)
            .map(|(u, w)| w * power_conjugate(dual_norm(u, &r.mult, r.q) / w, r.p))
            .sum();
        inner - penalty
    }
}

/// For `p = 1`: returns an optimal data point if one exists.
pub(crate) fn optimal_data_point(r: &Reduced) -> Option<usize> {
    let k = r.pts.len();
    let dim = r.mult.len();
    let mut g = vec![0.0; dim];
    let mut total = vec![0.0; dim];
    let mut diff = vec![0.0; dim];
    (0..k).find(|&j| {
        total.fill(0.0);
        for i in (0..k).filter(|&i| i != j) {
            for c in 0..dim {
                diff[c] = r.pts[i][c] - r.pts[j][c];
            }
            norm_gradient(&diff, &r.mult, r.q, &mut g);
            for (t, v) in total.iter_mut().zip(&g) {
                *t += r.w[i] * v;
            }
        }
        dual_norm(&total, &r.mult, r.q) <= r.w[j] * (1.0 + 1e-12)
    })
}

pub(crate) fn weighted_mean(r: &Reduced) -> Vec<f64> {
    let wsum: f64 = r.w.iter().sum();
    let mut y = vec![0.0; r.mult.len()];
    for (x, w) in r.pts.iter().zip(&r.w) {
        for (yc, xc) in y.iter_mut().zip(x) {
            *yc += w / wsum * xc;
        }
    }
    y
}

struct Bounds {
    best_y: Vec<f64>,
    upper: f64,
    lower: f64,
}

impl Bounds {
    fn offer(&mut self, y: &[f64], f: f64, r: &Reduced) {
        if f < self.upper {
            self.upper = f;
            self.best_y.copy_from_slice(y);
        }
        self.lower = self.lower.max(dual_bound(r, y));
    }

    fn gap(&self) -> f64 {
        self.upper - self.lower
    }
}

/// L-BFGS with Armijo backtracking, stopping on a certified gap.
pub(crate) fn lbfgs(r: &Reduced, start: Vec<f64>, tol: f64, max_iter: usize) -> Result<Core> {
    const MEMORY: usize = 12;
    let dim = start.len();
    let mut y = start;
    let mut g = vec![0.0; dim];
    let mut f = obj_grad(r, &y, Some(&mut g));
    let mut bounds = Bounds {
        best_y: y.clone(),
        upper: f64::INFINITY,
        lower: f64::NEG_INFINITY,
    };
    bounds.offer(&y, f, r);
    let mut mem: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut trial = vec![0.0; dim];
    let mut g_new = vec![0.0; dim];
    let mut iterations = 0;
    while bounds.gap() > tol && iterations < max_iter {
        iterations += 1;
        let mut dir: Vec<f64> = g.iter().map(|v| -v).collect();
        let mut alphas = Vec::with_capacity(mem.len());
        for (s, yv, rho) in mem.iter().rev() {
            let a = rho * dot(s, &dir);
            axpy(-a, yv, &mut dir);
            alphas.push(a);
        }
        if let Some((s, yv, _)) = mem.back() {
            let gamma = dot(s, yv) / dot(yv, yv);
            dir.iter_mut().for_each(|v| *v *= gamma);
        } else {
            let gn = dot(&g, &g).sqrt();
            if gn > 0.0 {
                let scale = (1.0 / gn).min(1.0);
                dir.iter_mut().for_each(|v| *v *= scale);
            }
        }
        for ((s, yv, rho), a) in mem.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(yv, &dir);
            axpy(a - b, s, &mut dir);
        }
        let mut slope = dot(&g, &dir);
        if !(slope < 0.0) {
            mem.clear();
            dir = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
            if !(slope < 0.0) {
                break;
            }
        }
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..80 {
            for c in 0..dim {
                trial[c] = y[c] + step * dir[c];
            }
            let ft = obj_grad(r, &trial, Some(&mut g_new));
            if ft <= f + 1e-4 * step * slope {
                let s: Vec<f64> = (0..dim).map(|c| trial[c] - y[c]).collect();
                let yv: Vec<f64> = (0..dim).map(|c| g_new[c] - g[c]).collect();
                let sy = dot(&s, &yv);
                if sy > 1e-16 * dot(&s, &s).sqrt() * dot(&yv, &yv).sqrt() && sy > 0.0 {
                    if mem.len() == MEMORY {
                        mem.pop_front();
                    }
                    mem.push_back((s, yv, 1.0 / sy));
                }
                y.copy_from_slice(&trial);
                g.copy_from_slice(&g_new);
                f = ft;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        bounds.offer(&y, f, r);
        if !accepted {
            if mem.is_empty() {
                break;
            }
            mem.clear();
        }
    }
    if bounds.gap() <= tol {
        Ok(Core {
            value: bounds.upper,
            lower: bounds.lower.min(bounds.upper),
            y: bounds.best_y,
            method: Method::Lbfgs,
            iterations,
        })
    } else {
        Err(Error::Solver {
            lower: bounds.lower,
            upper: bounds.upper,
            context: format!("L-BFGS stopped after {iterations} iterations"),
        })
    }
}

/// Weiszfeld iterations for `p = 1, q = 2`; hands over to L-BFGS if slow.
pub(crate) fn weiszfeld(r: &Reduced, tol: f64, max_iter: usize) -> Result<Core> {
    let dim = r.mult.len();
    let mut y = weighted_mean(r);
    let mut bounds = Bounds {
        best_y: y.clone(),
        upper: f64::INFINITY,
        lower: f64::NEG_INFINITY,
    };
    let f = obj_grad(r, &y, None);
    bounds.offer(&y, f, r);
    let budget = max_iter.min(20_000);
    let mut iterations = 0;
    let mut next = vec![0.0; dim];
    let mut diff = vec![0.0; dim];
    while bounds.gap() > tol && iterations < budget {
        iterations += 1;
        next.fill(0.0);
        let mut denom = 0.0;
        let mut at_point = None;
        for (i, (x, w)) in r.pts.iter().zip(&r.w).enumerate() {
            for c in 0..dim {
                diff[c] = x[c] - y[c];
            }
            let dist = wnorm(&diff, &r.mult, 2.0);
            if dist <= 1e-14 * (1.0 + wnorm(x, &r.mult, 2.0)) {
                at_point = Some(i);
                continue;
            }
            denom += w / dist;
            for (nc, xc) in next.iter_mut().zip(x) {
                *nc += w / dist * xc;
            }
        }
        if let Some(j) = at_point {
            // Not optimal (checked beforehand): step off the data point
            // along the descent direction.
            let mut resultant = vec![0.0; dim];
            for (i, (x, w)) in r.pts.iter().zip(&r.w).enumerate() {
                if i == j {
                    continue;
                }
                let dist = {
                    for c in 0..dim {
                        diff[c] = x[c] - y[c];
                    }
                    wnorm(&diff, &r.mult, 2.0)
                };
                for c in 0..dim {
                    resultant[c] += w * diff[c] / dist;
                }
            }
            let rn = dot(&resultant, &resultant).sqrt();
            let step = 1e-6 * (1.0 + wnorm(&r.pts[j], &r.mult, 2.0));
            for c in 0..dim {
                y[c] = r.pts[j][c] + step * resultant[c] / rn;
            }
        } else {
            for c in 0..dim {
                y[c] = next[c] / denom;
            }
        }
        if iterations % 8 == 0 || bounds.gap() < 10.0 * tol {
            let f = obj_grad(r, &y, None);
            bounds.offer(&y, f, r);
        }
    }
    if bounds.gap() <= tol {
        return Ok(Core {
            value: bounds.upper,
            lower: bounds.lower.min(bounds.upper),
            y: bounds.best_y,
            method: Method::Weiszfeld,
            iterations,
        });
    }
    let mut core = lbfgs(r, bounds.best_y, tol, max_iter)?;
    core.iterations += iterations;
    core.method = Method::Weiszfeld;
    Ok(core)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}
