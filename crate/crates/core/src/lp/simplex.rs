//! Two-phase revised simplex for `min c^T x  s.t.  A x = b, x >= 0`.
//!
//! The basis inverse is dense (`m x m`), columns of `A` are sparse. Pricing is
//! Dantzig's most-negative reduced cost; after a run of degenerate pivots the
//! solver switches to Bland's rule until the objective moves again, which
//! rules out cycling.

use crate::error::{Error, Result};

use super::scalar::Scalar;

/// Equality-form LP with sparse columns.
#[derive(Debug, Clone)]
pub struct SparseLp<T> {
    pub rows: usize,
    pub cols: Vec<Vec<(usize, T)>>,
    pub cost: Vec<T>,
    pub rhs: Vec<T>,
}

#[derive(Debug, Clone)]
pub struct LpSolution<T> {
    pub objective: T,
    pub x: Vec<T>,
    /// Row multipliers `y` with `c_j - y^T A_j >= 0` at optimality.
    pub duals: Vec<T>,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    pub max_iterations: usize,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub degenerate_streak: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_iterations: 1_000_000,
            degenerate_streak: 50,
        }
    }
}

impl<T: Scalar> SparseLp<T> {
    pub fn new(rows: usize) -> Self {
        Self {
            rows,
            cols: Vec::new(),
            cost: Vec::new(),
            rhs: vec![T::zero(); rows],
        }
    }

    pub fn add_column(&mut self, cost: T, entries: Vec<(usize, T)>) -> usize {
        self.cols.push(entries);
        self.cost.push(cost);
        self.cols.len() - 1
    }

    fn validate(&self) -> Result<()> {
        if self.rhs.len() != self.rows || self.cost.len() != self.cols.len() {
            return Err(Error::Lp("inconsistent LP dimensions".into()));
        }
        if self.cols.iter().flatten().any(|&(r, _)| r >= self.rows) {
            return Err(Error::Lp("column entry outside row range".into()));
        }
        Ok(())
    }

    pub fn solve(&self) -> Result<LpSolution<T>> {
        self.solve_with(SimplexOptions::default())
    }

    pub fn solve_with(&self, opts: SimplexOptions) -> Result<LpSolution<T>> {
        self.validate()?;
        let mut state = Tableau::new(self, opts);
        state.phase_one()?;
        state.phase_two()?;
        Ok(state.solution())
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

struct Tableau<'a, T> {
    lp: &'a SparseLp<T>,
    opts: SimplexOptions,
    m: usize,
    n: usize,
    /// Row sign making the right-hand side nonnegative.
    sign: Vec<T>,
    b: Vec<T>,
    /// `basis[r]`: column basic in row `r`; indices `>= n` are artificials.
    basis: Vec<usize>,
    position: Vec<Option<usize>>,
    binv: Vec<T>,
    xb: Vec<T>,
    iterations: usize,
    since_refactor: usize,
    degenerate_run: usize,
    bland: bool,
}

impl<'a, T: Scalar> Tableau<'a, T> {
    fn new(lp: &'a SparseLp<T>, opts: SimplexOptions) -> Self {
        let m = lp.rows;
        let n = lp.cols.len();
        let sign: Vec<T> = lp
            .rhs
            .iter()
            .map(|b| if b.is_negative() { -T::one() } else { T::one() })
            .collect();
        let b: Vec<T> = lp.rhs.iter().zip(&sign).map(|(b, s)| b.clone() * s.clone()).collect();
        let mut binv = vec![T::zero(); m * m];
        for r in 0..m {
            binv[r * m + r] = T::one();
        }
        let mut position = vec![None; n + m];
        for r in 0..m {
            position[n + r] = Some(r);
        }
        Self {
            lp,
            opts,
            m,
            n,
            sign,
            xb: b.clone(),
            b,
            basis: (n..n + m).collect(),
            position,
            binv,
            iterations: 0,
            since_refactor: 0,
            degenerate_run: 0,
            bland: false,
        }
    }

    fn cost(&self, j: usize, phase: Phase) -> T {
        match (phase, j >= self.n) {
            (Phase::One, true) => T::one(),
            (Phase::One, false) | (Phase::Two, true) => T::zero(),
            (Phase::Two, false) => self.lp.cost[j].clone(),
        }
    }

    /// Column `j` with row signs applied, as `(row, value)` pairs.
    fn column(&self, j: usize) -> Vec<(usize, T)> {
        if j >= self.n {
            vec![(j - self.n, T::one())]
        } else {
            self.lp.cols[j]
                .iter()
                .map(|(r, a)| (*r, a.clone() * self.sign[*r].clone()))
                .collect()
        }
    }

    fn duals(&self, phase: Phase) -> Vec<T> {
        let m = self.m;
        let mut y = vec![T::zero(); m];
        for r in 0..m {
            let c = self.cost(self.basis[r], phase);
            if c.is_zero() {
                continue;
            }
            let row = &self.binv[r * m..(r + 1) * m];
            for (yi, bi) in y.iter_mut().zip(row) {
                if !bi.is_zero() {
                    *yi = yi.clone() + c.clone() * bi.clone();
                }
            }
        }
        y
    }

    /// Reduced cost of column `j` and the magnitude of the terms summed,
    /// which scales the rounding error of the difference.
    fn reduced_cost(&self, j: usize, y: &[T], phase: Phase) -> (T, T) {
        let c = self.cost(j, phase);
        let mut mag = T::one() + c.abs();
        let mut d = c;
        for (r, a) in &self.lp.cols[j] {
            let term = y[*r].clone() * a.clone() * self.sign[*r].clone();
            mag = mag + term.abs();
            d = d - term;
        }
        (d, mag)
    }

    fn ftran(&self, col: &[(usize, T)]) -> Vec<T> {
        let m = self.m;
        let mut u = vec![T::zero(); m];
        for (i, a) in col {
            for (r, ur) in u.iter_mut().enumerate() {
                let bi = &self.binv[r * m + i];
                if !bi.is_zero() {
                    *ur = ur.clone() + bi.clone() * a.clone();
                }
            }
        }
        u
    }

    fn price(&self, phase: Phase) -> Option<usize> {
        let y = self.duals(phase);
        let tol = T::feas_tol();
        let mut best: Option<(usize, T)> = None;
        for j in 0..self.n {
            if self.position[j].is_some() {
                continue;
            }
            let (d, scale) = self.reduced_cost(j, &y, phase);
            if d >= -(tol.clone() * scale) {
                continue;
            }
            if self.bland {
                return Some(j);
            }
            if best.as_ref().is_none_or(|(_, bd)| d < *bd) {
                best = Some((j, d));
            }
        }
        best.map(|(j, _)| j)
    }

    fn ratio_test(&self, u: &[T]) -> Option<usize> {
        let piv = T::pivot_tol();
        let mut best: Option<(usize, T)> = None;
        for r in 0..self.m {
            if u[r] <= piv {
                continue;
            }
            let theta = self.xb[r].clone() / u[r].clone();
            best = match best {
                None => Some((r, theta)),
                Some((br, bt)) => {
                    let better = if theta < bt {
                        true
                    } else if theta > bt {
                        false
                    } else if self.bland {
                        self.basis[r] < self.basis[br]
                    } else {
                        u[r] > u[br]
                    };
                    if better {
                        Some((r, theta))
                    } else {
                        Some((br, bt))
                    }
                }
            };
        }
        best.map(|(r, _)| r)
    }

    fn pivot(&mut self, leave: usize, enter: usize, u: &[T]) {
        let m = self.m;
        let pivot = u[leave].clone();
        let theta = self.xb[leave].clone() / pivot.clone();
        for r in 0..m {
            if r != leave && !u[r].is_zero() {
                let v = self.xb[r].clone() - theta.clone() * u[r].clone();
                self.xb[r] = if v.is_negative() && v > -T::feas_tol() { T::zero() } else { v };
            }
        }
        self.xb[leave] = theta;
        let (before, rest) = self.binv.split_at_mut(leave * m);
        let (pivot_row, after) = rest.split_at_mut(m);
        for v in pivot_row.iter_mut() {
            if !v.is_zero() {
                *v = v.clone() / pivot.clone();
            }
        }
        for (r, row) in before.chunks_mut(m).chain(after.chunks_mut(m)).enumerate() {
            let r = if r < leave { r } else { r + 1 };
            let f = &u[r];
            if f.is_zero() {
                continue;
            }
            for (v, p) in row.iter_mut().zip(pivot_row.iter()) {
                if !p.is_zero() {
                    *v = v.clone() - f.clone() * p.clone();
                }
            }
        }
        self.position[self.basis[leave]] = None;
        self.basis[leave] = enter;
        self.position[enter] = Some(leave);
        self.iterations += 1;
        self.since_refactor += 1;
        if let Some(every) = T::refactor_every() {
            if self.since_refactor >= every {
                self.refactor();
            }
        }
    }

    /// Recomputes the basis inverse and basic values from scratch.
    fn refactor(&mut self) {
        let m = self.m;
        let mut a = vec![T::zero(); m * m];
        for (r, &j) in self.basis.iter().enumerate() {
            for (i, v) in self.column(j) {
                a[i * m + r] = v;
            }
        }
        let mut inv = vec![T::zero(); m * m];
        for r in 0..m {
            inv[r * m + r] = T::one();
        }
        for c in 0..m {
            let p = (c..m)
                .max_by(|&x, &y| {
                    a[x * m + c]
                        .abs()
                        .partial_cmp(&a[y * m + c].abs())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .expect("nonempty range");
            if a[p * m + c].is_zero() {
                // Singular from round-off; keep the updated inverse.
                return;
            }
            if p != c {
                for k in 0..m {
                    a.swap(p * m + k, c * m + k);
                    inv.swap(p * m + k, c * m + k);
                }
            }
            let d = a[c * m + c].clone();
            for k in 0..m {
                a[c * m + k] = a[c * m + k].clone() / d.clone();
                inv[c * m + k] = inv[c * m + k].clone() / d.clone();
            }
            for r in 0..m {
                if r == c || a[r * m + c].is_zero() {
                    continue;
                }
                let f = a[r * m + c].clone();
                for k in 0..m {
                    if !a[c * m + k].is_zero() {
                        a[r * m + k] = a[r * m + k].clone() - f.clone() * a[c * m + k].clone();
                    }
                    if !inv[c * m + k].is_zero() {
                        inv[r * m + k] = inv[r * m + k].clone() - f.clone() * inv[c * m + k].clone();
                    }
                }
            }
        }
        self.binv = inv;
        let col: Vec<(usize, T)> = self.b.iter().cloned().enumerate().collect();
        self.xb = self
            .ftran(&col)
            .into_iter()
            .map(|v| if v.is_negative() && v > -T::pivot_tol() { T::zero() } else { v })
            .collect();
        self.since_refactor = 0;
    }

    fn run(&mut self, phase: Phase) -> Result<()> {
        loop {
            if self.iterations >= self.opts.max_iterations {
                return Err(Error::Lp(format!(
                    "iteration limit {} reached",
                    self.opts.max_iterations
                )));
            }
            let Some(enter) = self.price(phase) else {
                if self.bland {
                    self.bland = false;
                }
                return Ok(());
            };
            let u = self.ftran(&self.column(enter));
            let Some(leave) = self.ratio_test(&u) else {
                // A drifted basis inverse can fake a ray; confirm on a fresh one.
                if self.since_refactor > 0 {
                    self.refactor();
                    continue;
                }
                return Err(Error::Lp("LP is unbounded".into()));
            };
            let degenerate = self.xb[leave] <= T::feas_tol();
            self.pivot(leave, enter, &u);
            if degenerate {
                self.degenerate_run += 1;
                if self.degenerate_run >= self.opts.degenerate_streak {
                    self.bland = true;
                }
            } else {
                self.degenerate_run = 0;
                self.bland = false;
            }
        }
    }

    fn phase_one(&mut self) -> Result<()> {
        self.run(Phase::One)?;
        let infeasibility = self
            .basis
            .iter()
            .zip(&self.xb)
            .filter(|(&j, _)| j >= self.n)
            .fold(T::zero(), |acc, (_, x)| acc + x.clone());
        let scale = self.b.iter().fold(T::one(), |acc, v| acc + v.clone());
        if infeasibility > T::feas_tol() * scale * T::from_f64_lossy(10.0) {
            return Err(Error::Lp(format!(
                "LP is infeasible (phase-one residual {:e})",
                infeasibility.to_f64_lossy()
            )));
        }
        self.drive_out_artificials();
        Ok(())
    }

    /// Pivots basic artificials out where some structural column has a
    /// nonzero entry in their row; the rest sit on redundant rows at zero.
    fn drive_out_artificials(&mut self) {
        let m = self.m;
        for r in 0..m {
            if self.basis[r] < self.n {
                continue;
            }
            let row: Vec<T> = self.binv[r * m..(r + 1) * m].to_vec();
            let mut best: Option<(usize, T)> = None;
            for j in 0..self.n {
                if self.position[j].is_some() {
                    continue;
                }
                let alpha = self
                    .column(j)
                    .into_iter()
                    .fold(T::zero(), |acc, (i, a)| acc + row[i].clone() * a);
                if alpha.abs() > T::pivot_tol() && best.as_ref().is_none_or(|(_, b)| alpha.abs() > b.abs()) {
                    best = Some((j, alpha));
                }
            }
            if let Some((j, _)) = best {
                let u = self.ftran(&self.column(j));
                self.xb[r] = T::zero();
                self.pivot(r, j, &u);
            }
        }
    }

    fn phase_two(&mut self) -> Result<()> {
        self.degenerate_run = 0;
        self.bland = false;
        self.run(Phase::Two)
    }

    fn solution(&self) -> LpSolution<T> {
        let mut x = vec![T::zero(); self.n];
        for (r, &j) in self.basis.iter().enumerate() {
            if j < self.n {
                x[j] = if self.xb[r].is_negative() { T::zero() } else { self.xb[r].clone() };
            }
        }
        let objective = x
            .iter()
            .zip(&self.lp.cost)
            .fold(T::zero(), |acc, (x, c)| acc + x.clone() * c.clone());
        let y = self.duals(Phase::Two);
        let duals = y.into_iter().zip(&self.sign).map(|(v, s)| v * s.clone()).collect();
        LpSolution {
            objective,
            x,
            duals,
            iterations: self.iterations,
        }
    }
}
