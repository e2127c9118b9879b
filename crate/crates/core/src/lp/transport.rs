//! Primal network simplex for balanced transportation problems with integer
//! supplies: `min sum c_ij f_ij` with row sums `supply` and column sums
//! `demand`. Uses a strongly feasible spanning tree stored as parent/thread
//! lists and block-search pricing.

use crate::error::{Error, Result};

const DIR_UP: i64 = 1;
const DIR_DOWN: i64 = -1;
const STATE_TREE: i8 = 0;
const STATE_LOWER: i8 = 1;

#[derive(Debug, Clone)]
pub struct TransportSolution {
    pub cost: f64,
    /// Nonzero flows `(row, column, amount)`.
    pub flows: Vec<(usize, usize, i64)>,
    /// Node potentials: rows first, then columns.
    pub potentials: Vec<f64>,
    pub iterations: usize,
}

/// Solves the transportation problem with `cost[i * demand.len() + j]`.
pub fn solve_transport(supply: &[i64], demand: &[i64], cost: &[f64]) -> Result<TransportSolution> {
    let (n1, n2) = (supply.len(), demand.len());
    if cost.len() != n1 * n2 {
        return Err(Error::Lp("cost matrix has wrong size".into()));
    }
    if supply.iter().chain(demand).any(|&s| s < 0) {
        return Err(Error::Lp("supplies must be nonnegative".into()));
    }
    if supply.iter().sum::<i64>() != demand.iter().sum::<i64>() {
        return Err(Error::Lp("transport problem is unbalanced".into()));
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(Error::Lp("costs must be finite".into()));
    }
    let mut ns = NetworkSimplex::new(supply, demand, cost);
    ns.run()?;
    Ok(ns.solution())
}

struct NetworkSimplex<'a> {
    n1: usize,
    n2: usize,
    cost: &'a [f64],
    node_num: usize,
    arc_num: usize,
    root: usize,
    art_cost: f64,
    // Artificial arc endpoints, indexed by node.
    art_source: Vec<usize>,
    art_target: Vec<usize>,
    flow: Vec<i64>,
    state: Vec<i8>,
    parent: Vec<usize>,
    pred: Vec<usize>,
    thread: Vec<usize>,
    rev_thread: Vec<usize>,
    succ_num: Vec<usize>,
    last_succ: Vec<usize>,
    pred_dir: Vec<i64>,
    pi: Vec<f64>,
    dirty_revs: Vec<usize>,
    block_size: usize,
    next_arc: usize,
    tol: f64,
    iterations: usize,
    // Current pivot.
    in_arc: usize,
    join: usize,
    u_in: usize,
    v_in: usize,
    u_out: usize,
    delta: i64,
}

const NONE: usize = usize::MAX;

impl<'a> NetworkSimplex<'a> {
    fn new(supply: &[i64], demand: &[i64], cost: &'a [f64]) -> Self {
        let (n1, n2) = (supply.len(), demand.len());
        let node_num = n1 + n2;
        let arc_num = n1 * n2;
        let root = node_num;
        let max_cost = cost.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let art_cost = (max_cost + 1.0) * (node_num as f64 + 1.0);
        let all = arc_num + node_num;
        let mut s = Self {
            n1,
            n2,
            cost,
            node_num,
            arc_num,
            root,
            art_cost,
            art_source: vec![0; node_num],
            art_target: vec![0; node_num],
            flow: vec![0; all],
            state: vec![STATE_LOWER; all],
            parent: vec![NONE; node_num + 1],
            pred: vec![NONE; node_num + 1],
            thread: vec![0; node_num + 1],
            rev_thread: vec![0; node_num + 1],
            succ_num: vec![1; node_num + 1],
            last_succ: vec![0; node_num + 1],
            pred_dir: vec![0; node_num + 1],
            pi: vec![0.0; node_num + 1],
            dirty_revs: Vec::new(),
            block_size: ((arc_num as f64).sqrt() as usize).max(10),
            next_arc: 0,
            tol: 1e-12 * art_cost,
            iterations: 0,
            in_arc: 0,
            join: 0,
            u_in: 0,
            v_in: 0,
            u_out: 0,
            delta: 0,
        };
        s.thread[root] = 0;
        s.rev_thread[0] = root;
        s.succ_num[root] = node_num + 1;
        s.last_succ[root] = if node_num == 0 { root } else { root - 1 };
        for u in 0..node_num {
            let e = arc_num + u;
            s.parent[u] = root;
            s.pred[u] = e;
            s.thread[u] = u + 1;
            s.rev_thread[u + 1] = u;
            s.last_succ[u] = u;
            s.state[e] = STATE_TREE;
            let sup = if u < n1 { supply[u] } else { -demand[u - n1] };
            if sup >= 0 {
                s.pred_dir[u] = DIR_UP;
                s.pi[u] = 0.0;
                s.art_source[u] = u;
                s.art_target[u] = root;
                s.flow[e] = sup;
            } else {
                s.pred_dir[u] = DIR_DOWN;
                s.pi[u] = art_cost;
                s.art_source[u] = root;
                s.art_target[u] = u;
                s.flow[e] = -sup;
            }
        }
        s
    }

    #[inline]
    fn source(&self, e: usize) -> usize {
        if e < self.arc_num {
            e / self.n2
        } else {
            self.art_source[e - self.arc_num]
        }
    }

    #[inline]
    fn target(&self, e: usize) -> usize {
        if e < self.arc_num {
            self.n1 + e % self.n2
        } else {
            self.art_target[e - self.arc_num]
        }
    }

    #[inline]
    fn arc_cost(&self, e: usize) -> f64 {
        if e < self.arc_num {
            self.cost[e]
        } else if self.art_source[e - self.arc_num] == self.root {
            self.art_cost
        } else {
            0.0
        }
    }

    fn find_entering_arc(&mut self) -> bool {
        if self.arc_num == 0 {
            return false;
        }
        let mut min = -self.tol;
        let mut found = false;
        let mut cnt = self.block_size;
        let n2 = self.n2;
        let n1 = self.n1;
        let start = self.next_arc;
        let mut e = start;
        loop {
            let c = f64::from(self.state[e])
                * (self.cost[e] + self.pi[e / n2] - self.pi[n1 + e % n2]);
            if c < min {
                min = c;
                self.in_arc = e;
                found = true;
            }
            e += 1;
            if e == self.arc_num {
                e = 0;
            }
            cnt -= 1;
            if cnt == 0 {
                if found {
                    self.next_arc = e;
                    return true;
                }
                cnt = self.block_size;
            }
            if e == start {
                break;
            }
        }
        if found {
            self.next_arc = e;
        }
        found
    }

    fn find_join_node(&mut self) {
        let mut u = self.source(self.in_arc);
        let mut v = self.target(self.in_arc);
        while u != v {
            if self.succ_num[u] < self.succ_num[v] {
                u = self.parent[u];
            } else {
                v = self.parent[v];
            }
        }
        self.join = u;
    }

    fn find_leaving_arc(&mut self) -> bool {
        let (first, second) = if self.state[self.in_arc] == STATE_LOWER {
            (self.source(self.in_arc), self.target(self.in_arc))
        } else {
            (self.target(self.in_arc), self.source(self.in_arc))
        };
        let mut delta = i64::MAX;
        let mut result = 0;
        let mut u = first;
        while u != self.join {
            if self.pred_dir[u] == DIR_UP {
                let d = self.flow[self.pred[u]];
                if d < delta {
                    delta = d;
                    self.u_out = u;
                    result = 1;
                }
            }
            u = self.parent[u];
        }
        let mut u = second;
        while u != self.join {
            if self.pred_dir[u] == DIR_DOWN {
                let d = self.flow[self.pred[u]];
                if d <= delta {
                    delta = d;
                    self.u_out = u;
                    result = 2;
                }
            }
            u = self.parent[u];
        }
        if result == 1 {
            self.u_in = first;
            self.v_in = second;
        } else {
            self.u_in = second;
            self.v_in = first;
        }
        self.delta = delta;
        result != 0
    }

    fn change_flow(&mut self) {
        if self.delta > 0 {
            let val = i64::from(self.state[self.in_arc]) * self.delta;
            self.flow[self.in_arc] += val;
            let mut u = self.source(self.in_arc);
            while u != self.join {
                self.flow[self.pred[u]] -= self.pred_dir[u] * val;
                u = self.parent[u];
            }
            let mut u = self.target(self.in_arc);
            while u != self.join {
                self.flow[self.pred[u]] += self.pred_dir[u] * val;
                u = self.parent[u];
            }
        }
        self.state[self.in_arc] = STATE_TREE;
        self.state[self.pred[self.u_out]] = STATE_LOWER;
    }

    fn update_tree_structure(&mut self) {
        let u_in = self.u_in;
        let v_in = self.v_in;
        let u_out = self.u_out;
        let join = self.join;
        let old_rev_thread = self.rev_thread[u_out];
        let old_succ_num = self.succ_num[u_out];
        let old_last_succ = self.last_succ[u_out];
        let v_out = self.parent[u_out];
        let in_dir = if u_in == self.source(self.in_arc) { DIR_UP } else { DIR_DOWN };

        if u_in == u_out {
            self.parent[u_in] = v_in;
            self.pred[u_in] = self.in_arc;
            self.pred_dir[u_in] = in_dir;
            if self.thread[v_in] != u_out {
                let mut after = self.thread[old_last_succ];
                self.thread[old_rev_thread] = after;
                self.rev_thread[after] = old_rev_thread;
                after = self.thread[v_in];
                self.thread[v_in] = u_out;
                self.rev_thread[u_out] = v_in;
                self.thread[old_last_succ] = after;
                self.rev_thread[after] = old_last_succ;
            }
        } else {
            let thread_continue = if old_rev_thread == v_in {
                self.thread[old_last_succ]
            } else {
                self.thread[v_in]
            };
            let mut stem = u_in;
            let mut par_stem = v_in;
            let mut last = self.last_succ[u_in];
            let mut after = self.thread[last];
            self.thread[v_in] = u_in;
            self.dirty_revs.clear();
            self.dirty_revs.push(v_in);
            while stem != u_out {
                let next_stem = self.parent[stem];
                self.thread[last] = next_stem;
                self.dirty_revs.push(last);
                let before = self.rev_thread[stem];
                self.thread[before] = after;
                self.rev_thread[after] = before;
                self.parent[stem] = par_stem;
                par_stem = stem;
                stem = next_stem;
                last = if self.last_succ[stem] == self.last_succ[par_stem] {
                    self.rev_thread[par_stem]
                } else {
                    self.last_succ[stem]
                };
                after = self.thread[last];
            }
            self.parent[u_out] = par_stem;
            self.thread[last] = thread_continue;
            self.rev_thread[thread_continue] = last;
            self.last_succ[u_out] = last;
            if old_rev_thread != v_in {
                self.thread[old_rev_thread] = after;
                self.rev_thread[after] = old_rev_thread;
            }
            for i in 0..self.dirty_revs.len() {
                let u = self.dirty_revs[i];
                let t = self.thread[u];
                self.rev_thread[t] = u;
            }
            let mut tmp_sc = 0usize;
            let tmp_ls = self.last_succ[u_out];
            let mut u = u_out;
            while u != u_in {
                let p = self.parent[u];
                self.pred[u] = self.pred[p];
                self.pred_dir[u] = -self.pred_dir[p];
                tmp_sc = tmp_sc + self.succ_num[u] - self.succ_num[p];
                self.succ_num[u] = tmp_sc;
                self.last_succ[p] = tmp_ls;
                u = p;
            }
            self.pred[u_in] = self.in_arc;
            self.pred_dir[u_in] = in_dir;
            self.succ_num[u_in] = old_succ_num;
        }

        let up_limit_out = if self.last_succ[join] == v_in { join } else { NONE };
        let last_succ_out = self.last_succ[u_out];
        let mut u = v_in;
        while u != NONE && self.last_succ[u] == v_in {
            self.last_succ[u] = last_succ_out;
            u = self.parent[u];
        }
        if join != old_rev_thread && v_in != old_rev_thread {
            let mut u = v_out;
            while u != up_limit_out && self.last_succ[u] == old_last_succ {
                self.last_succ[u] = old_rev_thread;
                u = self.parent[u];
            }
        } else if last_succ_out != old_last_succ {
            let mut u = v_out;
            while u != up_limit_out && self.last_succ[u] == old_last_succ {
                self.last_succ[u] = last_succ_out;
                u = self.parent[u];
            }
        }
        let mut u = v_in;
        while u != join {
            self.succ_num[u] += old_succ_num;
            u = self.parent[u];
        }
        let mut u = v_out;
        while u != join {
            self.succ_num[u] -= old_succ_num;
            u = self.parent[u];
        }
    }

    fn update_potential(&mut self) {
        let u_in = self.u_in;
        let sigma = self.pi[self.v_in] - self.pi[u_in] - self.pred_dir[u_in] as f64 * self.arc_cost(self.in_arc);
        let end = self.thread[self.last_succ[u_in]];
        let mut u = u_in;
        while u != end {
            self.pi[u] += sigma;
            u = self.thread[u];
        }
    }

    fn run(&mut self) -> Result<()> {
        while self.find_entering_arc() {
            self.find_join_node();
            if !self.find_leaving_arc() {
                return Err(Error::Lp("transport problem is unbounded".into()));
            }
            self.change_flow();
            self.update_tree_structure();
            self.update_potential();
            self.iterations += 1;
        }
        if (self.arc_num..self.arc_num + self.node_num).any(|e| self.flow[e] != 0) {
            return Err(Error::Lp("transport problem is infeasible".into()));
        }
        Ok(())
    }

    fn solution(&self) -> TransportSolution {
        let mut cost = 0.0;
        let mut flows = Vec::new();
        for e in 0..self.arc_num {
            if self.flow[e] != 0 {
                cost += self.flow[e] as f64 * self.cost[e];
                flows.push((e / self.n2, e % self.n2, self.flow[e]));
            }
        }
        TransportSolution {
            cost,
            flows,
            potentials: self.pi[..self.node_num].to_vec(),
            iterations: self.iterations,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::SparseLp;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lp_reference(supply: &[i64], demand: &[i64], cost: &[f64]) -> f64 {
        let (n1, n2) = (supply.len(), demand.len());
        let mut lp = SparseLp::<f64>::new(n1 + n2);
        lp.rhs = supply.iter().chain(demand).map(|&v| v as f64).collect();
        for i in 0..n1 {
            for j in 0..n2 {
                lp.add_column(cost[i * n2 + j], vec![(i, 1.0), (n1 + j, 1.0)]);
            }
        }
        lp.solve().unwrap().objective
    }

    #[test]
    fn matches_generic_simplex() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..40 {
            let n1 = rng.random_range(1..7);
            let n2 = rng.random_range(1..7);
            let mut supply: Vec<i64> = (0..n1).map(|_| rng.random_range(0..6)).collect();
            let mut demand: Vec<i64> = (0..n2).map(|_| rng.random_range(0..6)).collect();
            let (s, d): (i64, i64) = (supply.iter().sum(), demand.iter().sum());
            if s > d {
                demand[0] += s - d;
            } else {
                supply[0] += d - s;
            }
            let cost: Vec<f64> = (0..n1 * n2).map(|_| rng.random_range(0.0..10.0)).collect();
            let sol = solve_transport(&supply, &demand, &cost).unwrap();
            let reference = lp_reference(&supply, &demand, &cost);
            assert!((sol.cost - reference).abs() < 1e-9, "{} vs {}", sol.cost, reference);
            let mut rows = vec![0; n1];
            let mut cols = vec![0; n2];
            for &(i, j, f) in &sol.flows {
                assert!(f > 0);
                rows[i] += f;
                cols[j] += f;
            }
            assert_eq!(rows, supply);
            assert_eq!(cols, demand);
        }
    }

    #[test]
    fn assignment_on_a_line() {
        let n = 200;
        let xs: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
        let ys: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let cost: Vec<f64> = xs
            .iter()
            .flat_map(|x| ys.iter().map(move |y| (x - y) * (x - y)))
            .collect();
        let sol = solve_transport(&vec![1; n], &vec![1; n], &cost).unwrap();
        // Monotone matching is optimal in one dimension.
        let expected = n as f64 * (0.5 / n as f64).powi(2);
        assert!((sol.cost - expected).abs() < 1e-12);
    }

    #[test]
    fn rejects_unbalanced() {
        assert!(solve_transport(&[1], &[2], &[0.0]).is_err());
    }
}
