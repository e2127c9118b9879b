//! Simple undirected graphs, the generators used to build clique instances,
//! brute-force clique oracles and the regular/even-`k` preprocessing.

use std::collections::BTreeSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{check_cap, input, Error, Result};
use crate::tuples;

/// Default cap on the number of tuples or subsets a brute-force routine may visit.
pub const DEFAULT_ENUM_CAP: u128 = 10_000_000;

/// Simple undirected graph on vertices `0..n`; serializes as [`GraphFile`].
#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "GraphFile", try_from = "GraphFile")]
pub struct Graph {
    n: usize,
    adjacency: Vec<bool>,
    neighbors: Vec<Vec<usize>>,
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Graph")
            .field("n", &self.n)
            .field("edges", &self.edges())
            .finish()
    }
}

/// On-disk graph format: `{"n": 4, "edges": [[0, 1], ...]}` with `u < v`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphFile {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
}

impl From<Graph> for GraphFile {
    fn from(g: Graph) -> Self {
        g.to_file()
    }
}

impl TryFrom<GraphFile> for Graph {
    type Error = crate::error::Error;

    fn try_from(file: GraphFile) -> Result<Self> {
        Graph::from_file(&file)
    }
}

impl Graph {
    /// Builds a graph, rejecting self-loops, duplicates and out-of-range endpoints.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut adjacency = vec![false; n * n];
        let mut neighbors = vec![Vec::new(); n];
        for (u, v) in edges {
            if u >= n || v >= n {
                return input(format!("edge ({u},{v}) out of range for n={n}"));
            }
            if u == v {
                return input(format!("self-loop at vertex {u}"));
            }
            if adjacency[u * n + v] {
                return input(format!("duplicate edge ({u},{v})"));
            }
            adjacency[u * n + v] = true;
            adjacency[v * n + u] = true;
            neighbors[u].push(v);
            neighbors[v].push(u);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        Ok(Self {
            n,
            adjacency,
            neighbors,
        })
    }

    pub fn empty(n: usize) -> Self {
        Self::new(n, []).expect("edgeless graph is valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u * self.n + v]
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.neighbors[v].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.neighbors.iter().map(Vec::len).collect()
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Sorted edge list with `u < v`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for u in 0..self.n {
            for &v in &self.neighbors[u] {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    pub fn is_regular(&self) -> bool {
        self.regular_degree().is_some()
    }

    /// Common degree `D` when the graph is regular. The graph on zero vertices
    /// counts as 0-regular.
    pub fn regular_degree(&self) -> Option<usize> {
        let first = self.neighbors.first().map_or(0, Vec::len);
        self.neighbors
            .iter()
            .all(|l| l.len() == first)
            .then_some(first)
    }

    pub(crate) fn require_regular(&self) -> Result<usize> {
        self.regular_degree()
            .ok_or_else(|| Error::Input(format!("graph is not regular (degrees {:?})", self.degrees())))
    }

    fn check_tuple(&self, tuple: &[usize]) -> Result<()> {
        if let Some(&bad) = tuple.iter().find(|&&v| v >= self.n) {
            return input(format!("vertex {bad} out of range for n={}", self.n));
        }
        Ok(())
    }

    /// Number of adjacent pairs `i < i'` in a vertex tuple, counting repeated
    /// vertices with multiplicity (a repeated vertex never pairs with itself).
    pub fn induced_edge_count(&self, tuple: &[usize]) -> Result<usize> {
        self.check_tuple(tuple)?;
        Ok(self.induced_edge_count_unchecked(tuple))
    }

    pub(crate) fn induced_edge_count_unchecked(&self, tuple: &[usize]) -> usize {
        let mut count = 0;
        for (a, &u) in tuple.iter().enumerate() {
            for &v in &tuple[a + 1..] {
                count += usize::from(self.has_edge(u, v));
            }
        }
        count
    }

    /// Maximum of [`Self::induced_edge_count`] over all `n^k` tuples.
    pub fn max_multiset_edges(&self, k: usize, cap: u128) -> Result<usize> {
        if k == 0 {
            return input("k must be at least 1");
        }
        let shape = vec![self.n; k];
        let total = tuples::tuple_count(&shape).unwrap_or(u128::MAX);
        check_cap("tuple enumeration", total, cap)?;
        Ok(tuples::Tuples::new(&shape)
            .map(|t| self.induced_edge_count_unchecked(&t))
            .max()
            .unwrap_or(0))
    }

    /// Lexicographically least `k`-clique, if any, by enumerating `C(n,k)` subsets.
    pub fn find_k_clique(&self, k: usize, cap: u128) -> Result<Option<Vec<usize>>> {
        if k == 0 {
            return Ok(Some(Vec::new()));
        }
        if k > self.n {
            return Ok(None);
        }
        check_cap("subset enumeration", binomial(self.n as u128, k as u128), cap)?;
        let mut chosen = Vec::with_capacity(k);
        Ok(self.extend_clique(&mut chosen, 0, k).then_some(chosen))
    }

    fn extend_clique(&self, chosen: &mut Vec<usize>, start: usize, k: usize) -> bool {
        if chosen.len() == k {
            return true;
        }
        for v in start..self.n {
            if self.n - v < k - chosen.len() {
                break;
            }
            if chosen.iter().all(|&u| self.has_edge(u, v)) {
                chosen.push(v);
                if self.extend_clique(chosen, v + 1, k) {
                    return true;
                }
                chosen.pop();
            }
        }
        false
    }

    pub fn has_k_clique(&self, k: usize, cap: u128) -> Result<bool> {
        Ok(self.find_k_clique(k, cap)?.is_some())
    }

    /// Two copies of a regular graph joined by a complete bipartite graph
    /// between the copies. `G` has a `k`-clique iff the result has a `2k`-clique.
    pub fn even_k_doubling(&self, k: usize) -> Result<(Graph, usize)> {
        self.require_regular()?;
        let n = self.n;
        let mut edges = Vec::with_capacity(2 * self.edge_count() + n * n);
        for (u, v) in self.edges() {
            edges.push((u, v));
            edges.push((u + n, v + n));
        }
        for u in 0..n {
            for v in 0..n {
                edges.push((u, v + n));
            }
        }
        Ok((Graph::new(2 * n, edges)?, 2 * k))
    }

    pub fn complement(&self) -> Graph {
        let mut edges = Vec::new();
        for u in 0..self.n {
            for v in u + 1..self.n {
                if !self.has_edge(u, v) {
                    edges.push((u, v));
                }
            }
        }
        Graph::new(self.n, edges).expect("complement is simple")
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn content_hash(&self) -> String {
        let json = serde_json::to_vec(&self.to_file()).expect("graph serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn to_file(&self) -> GraphFile {
        GraphFile {
            n: self.n,
            edges: self.edges().into_iter().map(|(u, v)| [u, v]).collect(),
        }
    }

    pub fn from_file(file: &GraphFile) -> Result<Self> {
        Self::new(file.n, file.edges.iter().map(|e| (e[0], e[1])))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("graph serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file(&serde_json::from_str(text)?)
    }
}

pub(crate) fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

// Generators

pub fn complete(n: usize) -> Graph {
    let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
    Graph::new(n, edges).expect("complete graph is simple")
}

pub fn cycle(n: usize) -> Result<Graph> {
    if n < 3 {
        return input("a cycle needs at least 3 vertices");
    }
    Graph::new(n, (0..n).map(|u| (u, (u + 1) % n)))
}

/// Circulant graph joining `u` and `u ± s (mod n)` for every offset `s`.
pub fn circulant(n: usize, offsets: &[usize]) -> Result<Graph> {
    let mut edges = BTreeSet::new();
    for &s in offsets {
        if s == 0 || s >= n {
            return input(format!("offset {s} invalid for n={n}"));
        }
        for u in 0..n {
            let v = (u + s) % n;
            edges.insert((u.min(v), u.max(v)));
        }
    }
    Graph::new(n, edges)
}

/// Circulant graph of the requested degree: offsets `1..=degree/2`, plus `n/2`
/// when the degree is odd (which needs `n` even).
pub fn circulant_with_degree(n: usize, degree: usize) -> Result<Graph> {
    if degree >= n {
        return input(format!("degree {degree} must be below n={n}"));
    }
    let mut offsets: Vec<usize> = (1..=degree / 2).collect();
    if degree % 2 == 1 {
        if n % 2 == 1 {
            return input("odd degree needs an even vertex count");
        }
        offsets.push(n / 2);
    }
    let g = circulant(n, &offsets)?;
    debug_assert_eq!(g.regular_degree(), Some(degree));
    Ok(g)
}

pub fn petersen() -> Graph {
    let mut edges = Vec::with_capacity(15);
    for i in 0..5 {
        edges.push((i, (i + 1) % 5));
        edges.push((i, i + 5));
        edges.push((5 + i, 5 + (i + 2) % 5));
    }
    Graph::new(10, edges).expect("Petersen graph is simple")
}

/// Uniformly paired configuration model, retried until the pairing is simple.
pub fn random_regular(n: usize, degree: usize, seed: u64) -> Result<Graph> {
    const MAX_ATTEMPTS: usize = 100_000;
    if n > 0 && degree >= n {
        return input(format!("degree {degree} must be below n={n}"));
    }
    if (n * degree) % 2 == 1 {
        return input("n * degree must be even");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, degree)).collect();
    'attempt: for _ in 0..MAX_ATTEMPTS {
        stubs.shuffle(&mut rng);
        let mut seen = BTreeSet::new();
        for pair in stubs.chunks_exact(2) {
            let (u, v) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if u == v || !seen.insert((u, v)) {
                continue 'attempt;
            }
        }
        return Graph::new(n, seen);
    }
    input(format!("no simple {degree}-regular pairing on {n} vertices found"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k2() -> Graph {
        complete(2)
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(Graph::new(3, [(0, 0)]).is_err());
        assert!(Graph::new(3, [(0, 1), (1, 0)]).is_err());
        assert!(Graph::new(3, [(0, 3)]).is_err());
    }

    #[test]
    fn induced_edge_counts() {
        let k4 = complete(4);
        assert_eq!(k4.induced_edge_count(&[0, 1, 2, 3]).unwrap(), 6);
        assert_eq!(k4.induced_edge_count(&[0, 0, 1]).unwrap(), 2);
        let c5 = cycle(5).unwrap();
        assert_eq!(c5.induced_edge_count(&[0, 1, 2]).unwrap(), 2);
        assert!(c5.induced_edge_count(&[0, 7]).is_err());
    }

    #[test]
    fn max_multiset_edges_examples() {
        assert_eq!(complete(4).max_multiset_edges(3, DEFAULT_ENUM_CAP).unwrap(), 3);
        assert_eq!(cycle(5).unwrap().max_multiset_edges(3, DEFAULT_ENUM_CAP).unwrap(), 2);
        assert_eq!(cycle(4).unwrap().max_multiset_edges(3, DEFAULT_ENUM_CAP).unwrap(), 2);
        let err = cycle(5).unwrap().max_multiset_edges(3, 100).unwrap_err();
        assert!(matches!(err, Error::Resource { needed: 125, .. }));
    }

    #[test]
    fn clique_oracle_examples() {
        assert!(complete(4).has_k_clique(4, DEFAULT_ENUM_CAP).unwrap());
        assert!(!cycle(5).unwrap().has_k_clique(3, DEFAULT_ENUM_CAP).unwrap());
        assert!(!petersen().has_k_clique(3, DEFAULT_ENUM_CAP).unwrap());
        assert!(petersen().has_k_clique(2, DEFAULT_ENUM_CAP).unwrap());
        assert_eq!(
            complete(5).find_k_clique(3, DEFAULT_ENUM_CAP).unwrap(),
            Some(vec![0, 1, 2])
        );
    }

    #[test]
    fn petersen_is_cubic() {
        let g = petersen();
        assert_eq!(g.regular_degree(), Some(3));
        assert_eq!(g.edge_count(), 15);
    }

    #[test]
    fn doubling_examples() {
        let (g, k) = complete(4).even_k_doubling(3).unwrap();
        assert_eq!((g.n(), k, g.regular_degree()), (8, 6, Some(7)));
        assert!(g.has_k_clique(6, DEFAULT_ENUM_CAP).unwrap());

        let (g, k) = cycle(5).unwrap().even_k_doubling(3).unwrap();
        assert_eq!((g.n(), k, g.regular_degree()), (10, 6, Some(7)));
        assert!(!g.has_k_clique(6, DEFAULT_ENUM_CAP).unwrap());

        let (g, k) = k2().even_k_doubling(1).unwrap();
        assert_eq!((g.n(), k, g.regular_degree()), (4, 2, Some(3)));
        assert!(g.has_k_clique(2, DEFAULT_ENUM_CAP).unwrap());

        let path = Graph::new(3, [(0, 1), (1, 2)]).unwrap();
        assert!(path.even_k_doubling(2).is_err());
    }

    #[test]
    fn generators_are_regular() {
        assert_eq!(circulant_with_degree(8, 3).unwrap().regular_degree(), Some(3));
        assert_eq!(circulant_with_degree(7, 4).unwrap().regular_degree(), Some(4));
        for seed in 0..10 {
            let g = random_regular(8, 3, seed).unwrap();
            assert_eq!(g.regular_degree(), Some(3));
        }
        assert!(random_regular(7, 3, 0).is_err());
    }

    #[test]
    fn json_round_trip() {
        let g = petersen();
        let back = Graph::from_json(&g.to_json()).unwrap();
        assert_eq!(g, back);
        assert_eq!(g.content_hash(), back.content_hash());
    }
}
