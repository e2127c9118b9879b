//! Solvers for `q = 1` and `q = inf`, where `y -> ||x - y||_q` is polyhedral.
//!
//! For `p = 1` both are exact: a weighted median per coordinate (`q = 1`) or
//! one LP over the distances (`q = inf`). For `p > 1`, cutting planes on the
//! power function turn the problem into a growing LP with certified bounds.

use super::compress::Reduced;
use super::{wnorm, Core, Method};
use crate::error::{Error, Result};
use crate::lp::SparseLp;

/// Minimizer and value of `sum_i w_i ||x_i - y||_q` for `q` in `{1, inf}`.
pub(crate) fn weighted_l1_solve(r: &Reduced, w: &[f64]) -> Result<(Vec<f64>, f64)> {
    if r.q.is_infinite() {
        qinf_solve(r, w)
    } else {
        Ok(median_solve(r, w))
    }
}

fn median_solve(r: &Reduced, w: &[f64]) -> (Vec<f64>, f64) {
    let k = r.pts.len();
    let total: f64 = w.iter().sum();
    let mut order: Vec<usize> = (0..k).collect();
    let mut y = Vec::with_capacity(r.mult.len());
    let mut value = 0.0;
    for (c, m) in r.mult.iter().enumerate() {
        order.sort_by(|&a, &b| r.pts[a][c].total_cmp(&r.pts[b][c]));
        let mut acc = 0.0;
        let mut med = r.pts[order[k - 1]][c];
        for &i in &order {
            acc += w[i];
            if acc >= 0.5 * total {
                med = r.pts[i][c];
                break;
            }
        }
        value += m * (0..k).map(|i| w[i] * (r.pts[i][c] - med).abs()).sum::<f64>();
        y.push(med);
    }
    (y, value)
}

/// `q = inf`: minimize `sum w_i t_i` subject to `t_i + t_j >= ||x_i - x_j||_inf`.
/// Feasible `t` admit a common `y` coordinate-wise (pairwise-intersecting
/// intervals on a line share a point).
fn qinf_solve(r: &Reduced, w: &[f64]) -> Result<(Vec<f64>, f64)> {
    let k = r.pts.len();
    let mut pairs = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            let dist = r.pts[i]
                .iter()
                .zip(&r.pts[j])
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            if dist > 0.0 {
                pairs.push((i, j, dist));
            }
        }
    }
    let mut lp = SparseLp::<f64>::new(pairs.len());
    lp.rhs = pairs.iter().map(|p| p.2).collect();
    for i in 0..k {
        let entries = pairs
            .iter()
            .enumerate()
            .filter(|(_, p)| p.0 == i || p.1 == i)
            .map(|(row, _)| (row, 1.0))
            .collect();
        lp.add_column(w[i], entries);
    }
    for row in 0..pairs.len() {
        lp.add_column(0.0, vec![(row, -1.0)]);
    }
    let sol = lp.solve()?;
    let t = &sol.x[..k];
    let y = (0..r.mult.len())
        .map(|c| {
            let lo = (0..k).map(|i| r.pts[i][c] - t[i]).fold(f64::NEG_INFINITY, f64::max);
            let hi = (0..k).map(|i| r.pts[i][c] + t[i]).fold(f64::INFINITY, f64::min);
            0.5 * (lo + hi)
        })
        .collect::<Vec<_>>();
    let value = distances(r, &y).iter().zip(w).map(|(a, wi)| wi * a).sum();
    Ok((y, value))
}

pub(crate) fn distances(r: &Reduced, y: &[f64]) -> Vec<f64> {
    let mut diff = vec![0.0; y.len()];
    r.pts
        .iter()
        .map(|x| {
            for ((d, a), b) in diff.iter_mut().zip(x).zip(y) {
                *d = a - b;
            }
            wnorm(&diff, &r.mult, r.q)
        })
        .collect()
}

/// Exact solve for `p = 1`.
pub(crate) fn exact_p1(r: &Reduced) -> Result<Core> {
    let (y, value) = weighted_l1_solve(r, &r.w)?;
    let method = if r.q.is_infinite() { Method::LpQinf } else { Method::CoordinateQ1 };
    Ok(Core {
        value,
        lower: value,
        y,
        method,
        iterations: 1,
    })
}

fn objective(r: &Reduced, a: &[f64]) -> f64 {
    a.iter().zip(&r.w).map(|(ai, w)| w * ai.powf(r.p)).sum()
}

/// Column generation in distance space for `p > 1`. Generated centers `y_j`
/// give distance vectors `A_j`; the master minimizes `sum_i w_i s_i` over
/// convex combinations `a = sum_j l_j A_j` with tangent cuts
/// `s_i >= g(a0) + g'(a0) (a_i - a0)`, `g(t) = t^p`. The norm is convex, so
/// the combined center `sum_j l_j y_j` is no worse than `a`.
///
/// Lower bound: cut multipliers `pi >= 0` with `sum_{c of i} pi_c <= w_i`
/// give `F >= sum_c pi_c (g(a0_c) - g'(a0_c) a0_c) + min_y sum_i u_i ||x_i - y||`
/// with `u_i = sum_{c of i} pi_c g'(a0_c)`, the last term solved exactly by
/// the `p = 1` solver, whose minimizer is also the next column.
pub(crate) fn cutting_plane(r: &Reduced, tol: f64, max_rounds: usize) -> Result<Core> {
    // Work in units of the largest pairwise distance so cut slopes are O(p).
    let scale = (0..r.pts.len())
        .flat_map(|i| distances(r, &r.pts[i]))
        .fold(0.0f64, f64::max);
    if scale == 0.0 {
        return cutting_plane_scaled(r, tol, max_rounds);
    }
    let scaled = Reduced {
        pts: r.pts.iter().map(|x| x.iter().map(|v| v / scale).collect()).collect(),
        w: r.w.clone(),
        mult: r.mult.clone(),
        p: r.p,
        q: r.q,
    };
    let unit = scale.powf(r.p);
    let mut core = cutting_plane_scaled(&scaled, tol / unit, max_rounds).map_err(|e| match e {
        Error::Solver { lower, upper, context } => Error::Solver {
            lower: lower * unit,
            upper: upper * unit,
            context,
        },
        other => other,
    })?;
    core.y.iter_mut().for_each(|v| *v *= scale);
    // Recompute in original units; the certified gap is unchanged up to rounding.
    core.value = objective(r, &distances(r, &core.y)).min(core.value * unit);
    core.lower = (core.lower * unit).min(core.value);
    Ok(core)
}

fn cutting_plane_scaled(r: &Reduced, tol: f64, max_rounds: usize) -> Result<Core> {
    let method = if r.q.is_infinite() {
        Method::CuttingPlaneQinf
    } else {
        Method::CuttingPlaneQ1
    };
    let k = r.pts.len();
    let mut centers: Vec<Vec<f64>> = Vec::new();
    let mut dists: Vec<Vec<f64>> = Vec::new();
    let mut cuts: Vec<Vec<f64>> = vec![Vec::new(); k];
    let mut best_y = Vec::new();
    let mut upper = f64::INFINITY;
    let mut lower = 0.0f64;

    let add_center = |y: Vec<f64>, centers: &mut Vec<Vec<f64>>, dists: &mut Vec<Vec<f64>>, upper: &mut f64, best_y: &mut Vec<f64>| {
        let a = distances(r, &y);
        let f = objective(r, &a);
        if f < *upper {
            *upper = f;
            *best_y = y.clone();
        }
        let fresh = !dists
            .iter()
            .any(|b| b.iter().zip(&a).all(|(u, v)| (u - v).abs() <= 1e-12 * (1.0 + v.abs())));
        if fresh {
            centers.push(y);
            dists.push(a.clone());
        }
        a
    };
    let add_cuts = |a: &[f64], cuts: &mut Vec<Vec<f64>>| {
        for (i, &ai) in a.iter().enumerate() {
            if !cuts[i].iter().any(|&c| (c - ai).abs() <= 1e-12 * (1.0 + ai)) {
                cuts[i].push(ai);
            }
        }
    };

    let (y0, _) = weighted_l1_solve(r, &r.w)?;
    let a0 = add_center(y0, &mut centers, &mut dists, &mut upper, &mut best_y);
    add_cuts(&a0, &mut cuts);
    for x in &r.pts {
        let a = add_center(x.clone(), &mut centers, &mut dists, &mut upper, &mut best_y);
        add_cuts(&a, &mut cuts);
    }
    let mut rounds = 0;
    while upper - lower > tol && rounds < max_rounds {
        rounds += 1;
        let m = master(r, &dists, &cuts)?;
        let (y_new, l_u) = weighted_l1_solve(r, &m.u)?;
        lower = lower.max(m.constant + l_u);
        let mut a_bar = vec![0.0; k];
        let mut y_bar = vec![0.0; r.mult.len()];
        for ((l, a), y) in m.lambda.iter().zip(&dists).zip(&centers) {
            if *l > 0.0 {
                a_bar.iter_mut().zip(a).for_each(|(s, v)| *s += l * v);
                y_bar.iter_mut().zip(y).for_each(|(s, v)| *s += l * v);
            }
        }
        add_cuts(&a_bar, &mut cuts);
        let a_mix = add_center(y_bar, &mut centers, &mut dists, &mut upper, &mut best_y);
        add_cuts(&a_mix, &mut cuts);
        let a_new = add_center(y_new, &mut centers, &mut dists, &mut upper, &mut best_y);
        add_cuts(&a_new, &mut cuts);
    }
    if upper - lower <= tol {
        Ok(Core {
            value: upper,
            lower: lower.min(upper),
            y: best_y,
            method,
            iterations: rounds,
        })
    } else {
        Err(Error::Solver {
            lower,
            upper,
            context: format!("cutting planes stopped after {rounds} rounds"),
        })
    }
}

struct Master {
    lambda: Vec<f64>,
    /// `sum_c pi_c (g(a0_c) - g'(a0_c) a0_c)`.
    constant: f64,
    /// Aggregated slopes `u_i`.
    u: Vec<f64>,
}

/// Master LP over convex combinations of `dists`, with its cut multipliers
/// repaired to satisfy `pi >= 0`, `sum_{c of i} pi_c <= w_i`.
fn master(r: &Reduced, dists: &[Vec<f64>], cuts: &[Vec<f64>]) -> Result<Master> {
    let k = r.pts.len();
    let p = r.p;
    let cut_rows: usize = cuts.iter().map(Vec::len).sum();
    let mut lp = SparseLp::<f64>::new(1 + cut_rows);
    lp.rhs[0] = 1.0;
    let mut owner = Vec::with_capacity(cut_rows);
    for (i, list) in cuts.iter().enumerate() {
        for &a0 in list {
            // s_i - slope a_i - slack = (1 - p) a0^p.
            lp.rhs[1 + owner.len()] = (1.0 - p) * a0.powf(p);
            owner.push((i, p * a0.powf(p - 1.0)));
        }
    }
    for a in dists {
        let mut entries = vec![(0, 1.0)];
        entries.extend(owner.iter().enumerate().map(|(rw, &(i, slope))| (1 + rw, -slope * a[i])));
        lp.add_column(0.0, entries);
    }
    for i in 0..k {
        let entries = owner
            .iter()
            .enumerate()
            .filter(|(_, o)| o.0 == i)
            .map(|(rw, _)| (1 + rw, 1.0))
            .collect();
        lp.add_column(r.w[i], entries);
    }
    for rw in 0..cut_rows {
        lp.add_column(0.0, vec![(1 + rw, -1.0)]);
    }
    let sol = lp.solve()?;
    let mut pi: Vec<f64> = sol.duals[1..].iter().map(|v| v.max(0.0)).collect();
    for i in 0..k {
        let total: f64 = owner.iter().zip(&pi).filter(|(o, _)| o.0 == i).map(|(_, v)| v).sum();
        if total > r.w[i] {
            let scale = r.w[i] / total;
            owner.iter().zip(pi.iter_mut()).filter(|(o, _)| o.0 == i).for_each(|(_, v)| *v *= scale);
        }
    }
    let mut u = vec![0.0; k];
    let mut constant = 0.0;
    for ((&(i, slope), v), rw) in owner.iter().zip(&pi).zip(1..) {
        u[i] += v * slope;
        constant += v * lp.rhs[rw];
    }
    Ok(Master {
        lambda: sol.x[..dists.len()].to_vec(),
        constant,
        u,
    })
}
