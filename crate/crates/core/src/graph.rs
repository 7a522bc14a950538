//! Weighted digraphs and their Laplacians.
//!
//! An edge `(tail, head, w)` means that node `tail` influences node `head`
//! with weight `w`, i.e. `W[head][tail] = w`. The in-degree of node `i` is the
//! sum of weights on edges pointing into `i`, and the Laplacian is `L = D - W`,
//! so every row of `L` sums to zero.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Default tolerance for [`WeightedDigraph::is_balanced`].
pub const BALANCE_TOL: f64 = 1e-12;

/// Default residual tolerance for the Perron solve.
pub const PERRON_TOL: f64 = 1e-12;

const PERRON_MAX_ITER: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub tail: usize,
    pub head: usize,
    pub weight: f64,
}

/// A weighted directed graph without self-loops or parallel edges.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedDigraph {
    n: usize,
    edges: Vec<Edge>,
    // in_adj[i] = [(j, w_ij)] for every edge j -> i
    in_adj: Vec<Vec<(usize, f64)>>,
    // out_adj[i] = [(j, w_ji)] for every edge i -> j
    out_adj: Vec<Vec<(usize, f64)>>,
}

impl WeightedDigraph {
    /// Validates and builds a graph from `(tail, head, weight)` triples.
    pub fn new<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        if n == 0 {
            return Err(Error::InvalidGraph("graph needs at least one node".into()));
        }
        let mut seen = HashSet::new();
        let mut list = Vec::new();
        let mut in_adj = vec![Vec::new(); n];
        let mut out_adj = vec![Vec::new(); n];
        for (tail, head, weight) in edges {
            if tail >= n || head >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge {tail} -> {head} references a node outside 0..{n}"
                )));
            }
            if tail == head {
                return Err(Error::InvalidGraph(format!("self-loop at node {tail}")));
            }
            if !(weight > 0.0) || !weight.is_finite() {
                return Err(Error::NonPositiveWeight { tail, head, weight });
            }
            if !seen.insert((tail, head)) {
                return Err(Error::DuplicateEdge { tail, head });
            }
            list.push(Edge { tail, head, weight });
            in_adj[head].push((tail, weight));
            out_adj[tail].push((head, weight));
        }
        Ok(Self { n, edges: list, in_adj, out_adj })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// In-neighbours of `i` with the weights `w_ij` of edges `j -> i`.
    pub fn in_neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.in_adj[i]
    }

    /// Out-neighbours of `i` with the weights `w_ji` of edges `i -> j`.
    pub fn out_neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.out_adj[i]
    }

    pub fn in_degree(&self, i: usize) -> f64 {
        self.in_adj[i].iter().map(|&(_, w)| w).sum()
    }

    pub fn out_degree(&self, i: usize) -> f64 {
        self.out_adj[i].iter().map(|&(_, w)| w).sum()
    }

    pub fn in_degrees(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.in_degree(i)).collect()
    }

    pub fn laplacian(&self) -> Matrix {
        let mut l = Matrix::zeros(self.n);
        for (i, nbrs) in self.in_adj.iter().enumerate() {
            let mut d = 0.0;
            for &(j, w) in nbrs {
                l[(i, j)] = -w;
                d += w;
            }
            l[(i, i)] = d;
        }
        l
    }

    /// `I - D⁻¹ W`; every node needs a positive in-degree.
    pub fn normalized_laplacian(&self) -> Result<Matrix> {
        let mut l = Matrix::identity(self.n);
        for (i, nbrs) in self.in_adj.iter().enumerate() {
            let d = self.in_degree(i);
            if !(d > 0.0) {
                return Err(Error::ZeroInDegree(i));
            }
            for &(j, w) in nbrs {
                l[(i, j)] = -w / d;
            }
        }
        Ok(l)
    }

    pub fn is_balanced(&self, tol: f64) -> bool {
        (0..self.n).all(|i| (self.in_degree(i) - self.out_degree(i)).abs() <= tol)
    }

    pub fn is_symmetric(&self) -> bool {
        self.edges.iter().all(|e| {
            self.in_adj[e.tail]
                .iter()
                .any(|&(j, w)| j == e.head && w == e.weight)
        })
    }

    /// Strongly connected components (Tarjan), each listed in discovery order.
    pub fn strongly_connected_components(&self) -> Vec<Vec<usize>> {
        tarjan_scc(self.n, |v| self.out_adj[v].iter().map(|&(u, _)| u))
    }

    pub fn is_strongly_connected(&self) -> bool {
        self.strongly_connected_components().len() == 1
    }

    /// Connectivity of the underlying undirected graph.
    pub fn is_weakly_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            let nbrs = self.out_adj[v].iter().chain(&self.in_adj[v]);
            for &(u, _) in nbrs {
                if !seen[u] {
                    seen[u] = true;
                    count += 1;
                    stack.push(u);
                }
            }
        }
        count == self.n
    }

    /// Normalised positive left null vector of the Laplacian.
    ///
    /// Runs left power iteration on the row-stochastic `P = I - L / (2 max_i d_i)`
    /// with ℓ1 renormalisation until `‖q̂ᵀL‖∞ <= tol`.
    pub fn perron_left_vector(&self, tol: f64) -> Result<PerronVector> {
        if !self.is_strongly_connected() {
            return Err(Error::NotStronglyConnected);
        }
        let n = self.n;
        if n == 1 {
            return Ok(PerronVector(vec![1.0]));
        }
        let l = self.laplacian();
        let scale = 2.0 * self.in_degrees().into_iter().fold(0.0, f64::max);
        let mut q = vec![1.0 / n as f64; n];
        for _ in 0..PERRON_MAX_ITER {
            let ql = l.vec_mul(&q);
            let residual = ql.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            if residual <= tol {
                return Ok(PerronVector(q));
            }
            // q ← q P = q - (qL)/scale
            for (qi, r) in q.iter_mut().zip(&ql) {
                *qi -= r / scale;
            }
            let mass: f64 = q.iter().sum();
            q.iter_mut().for_each(|v| *v /= mass);
        }
        Err(Error::NoConvergence(PERRON_MAX_ITER))
    }

    /// All-to-all graph; weights are `1/(n-1)` when `normalized`.
    pub fn complete(n: usize, normalized: bool) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGraph("complete graph needs n >= 2".into()));
        }
        let w = if normalized { 1.0 / (n - 1) as f64 } else { 1.0 };
        let edges = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j, w)));
        Self::new(n, edges)
    }

    /// Circulant `d`-regular digraph (node `i` feeds `i+1, …, i+d mod n`)
    /// with node labels permuted by `seed`. Weights are `1/d` when `normalized`.
    pub fn regular(n: usize, d: usize, normalized: bool, seed: u64) -> Result<Self> {
        if d < 2 || d >= n {
            return Err(Error::InvalidDegree { n, d });
        }
        let w = if normalized { 1.0 / d as f64 } else { 1.0 };
        let mut label: Vec<usize> = (0..n).collect();
        label.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let edges = (0..n).flat_map(|i| (1..=d).map(move |k| (i, (i + k) % n)));
        Self::new(n, edges.map(|(i, j)| (label[i], label[j], w)))
    }

    /// Parses the edge-list text format: a node count line followed by
    /// `tail head weight` lines. Lines starting with `#` are comments.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (first, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            reason: "missing node count".into(),
        })?;
        let n: usize = header.parse().map_err(|_| Error::Parse {
            line: first,
            reason: format!("bad node count `{header}`"),
        })?;
        let mut edges = Vec::new();
        for (line, content) in lines {
            let parse_err = |reason: String| Error::Parse { line, reason };
            let fields: Vec<&str> = content.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(parse_err(format!("expected `tail head weight`, got `{content}`")));
            }
            let tail: usize = fields[0]
                .parse()
                .map_err(|_| parse_err(format!("bad tail `{}`", fields[0])))?;
            let head: usize = fields[1]
                .parse()
                .map_err(|_| parse_err(format!("bad head `{}`", fields[1])))?;
            let weight: f64 = fields[2]
                .parse()
                .map_err(|_| parse_err(format!("bad weight `{}`", fields[2])))?;
            if tail == head {
                return Err(parse_err(format!("self-loop at node {tail}")));
            }
            if tail >= n || head >= n {
                return Err(parse_err(format!("node id out of range 0..{n}")));
            }
            edges.push((tail, head, weight));
        }
        Self::new(n, edges)
    }

    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for e in &self.edges {
            out.push_str(&format!("{} {} {}\n", e.tail, e.head, e.weight));
        }
        out
    }
}

impl FromStr for WeightedDigraph {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::parse_edge_list(s)
    }
}

impl fmt::Display for WeightedDigraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_edge_list())
    }
}

/// Positive left null vector of a Laplacian with unit 1-norm.
#[derive(Debug, Clone, PartialEq)]
pub struct PerronVector(Vec<f64>);

impl PerronVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.0.iter().zip(x).map(|(q, v)| q * v).sum()
    }
}

impl std::ops::Deref for PerronVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

fn tarjan_scc<F, I>(n: usize, successors: F) -> Vec<Vec<usize>>
where
    F: Fn(usize) -> I,
    I: Iterator<Item = usize>,
{
    const UNVISITED: usize = usize::MAX;
    let mut index = vec![UNVISITED; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut components = Vec::new();
    let mut next = 0;

    for root in 0..n {
        if index[root] != UNVISITED {
            continue;
        }
        // explicit call stack of (node, successor iterator)
        let mut calls = vec![(root, successors(root))];
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some((v, iter)) = calls.last_mut() {
            let v = *v;
            if let Some(w) = iter.next() {
                if index[w] == UNVISITED {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    calls.push((w, successors(w)));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            calls.pop();
            if let Some((parent, _)) = calls.last() {
                low[*parent] = low[*parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comp.reverse();
                components.push(comp);
            }
        }
    }
    components
}

/// Random strongly connected digraph: a random Hamiltonian cycle plus each
/// remaining ordered pair with probability `extra_p`; weights uniform in `weights`.
pub fn random_strongly_connected<R: Rng>(
    n: usize,
    extra_p: f64,
    weights: (f64, f64),
    rng: &mut R,
) -> WeightedDigraph {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut pairs: HashSet<(usize, usize)> = HashSet::new();
    let mut edges = Vec::new();
    if n > 1 {
        for k in 0..n {
            let (a, b) = (order[k], order[(k + 1) % n]);
            if pairs.insert((a, b)) {
                edges.push((a, b, rng.gen_range(weights.0..weights.1)));
            }
        }
    }
    for a in 0..n {
        for b in 0..n {
            if a != b && !pairs.contains(&(a, b)) && rng.gen_bool(extra_p) {
                pairs.insert((a, b));
                edges.push((a, b, rng.gen_range(weights.0..weights.1)));
            }
        }
    }
    WeightedDigraph::new(n, edges).expect("generated graph is valid")
}

/// Random balanced strongly connected digraph built as a weighted sum of
/// directed cycles: one Hamiltonian cycle plus `extra_cycles` random cycles.
pub fn random_balanced<R: Rng>(
    n: usize,
    extra_cycles: usize,
    weights: (f64, f64),
    rng: &mut R,
) -> WeightedDigraph {
    use std::collections::BTreeMap;
    let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut add_cycle = |cycle: &[usize], w: f64| {
        for k in 0..cycle.len() {
            *acc.entry((cycle[k], cycle[(k + 1) % cycle.len()])).or_insert(0.0) += w;
        }
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    if n > 1 {
        add_cycle(&order, rng.gen_range(weights.0..weights.1));
        for _ in 0..extra_cycles {
            order.shuffle(rng);
            let len = rng.gen_range(2..=n);
            add_cycle(&order[..len], rng.gen_range(weights.0..weights.1));
        }
    }
    WeightedDigraph::new(n, acc.into_iter().map(|((a, b), w)| (a, b, w)))
        .expect("generated graph is valid")
}

/// Random symmetric connected graph: a random spanning tree plus each
/// remaining unordered pair with probability `extra_p`.
pub fn random_symmetric_connected<R: Rng>(
    n: usize,
    extra_p: f64,
    weights: (f64, f64),
    rng: &mut R,
) -> WeightedDigraph {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut pairs = HashSet::new();
    let mut edges = Vec::new();
    for k in 1..n {
        let parent = order[rng.gen_range(0..k)];
        let child = order[k];
        let w = rng.gen_range(weights.0..weights.1);
        pairs.insert((parent.min(child), parent.max(child)));
        edges.push((parent, child, w));
        edges.push((child, parent, w));
    }
    for a in 0..n {
        for b in a + 1..n {
            if !pairs.contains(&(a, b)) && rng.gen_bool(extra_p) {
                let w = rng.gen_range(weights.0..weights.1);
                edges.push((a, b, w));
                edges.push((b, a, w));
            }
        }
    }
    WeightedDigraph::new(n, edges).expect("generated graph is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    use crate::testutil::UNBALANCED5;

    fn pair(w: f64) -> WeightedDigraph {
        WeightedDigraph::new(2, [(0, 1, w), (1, 0, w)]).unwrap()
    }

    #[test]
    fn laplacian_of_symmetric_pair() {
        let l = pair(1.0).laplacian();
        assert_eq!(l, Matrix::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]));
    }

    #[test]
    fn laplacian_of_unbalanced_five_node_graph() {
        let g: WeightedDigraph = UNBALANCED5.parse().unwrap();
        let l = g.laplacian();
        assert_eq!(l.diag(), vec![2.0, 7.0, 2.0, 11.0, 2.0]);
        assert!(l.row_sums().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn edgeless_laplacian_is_zero() {
        let g = WeightedDigraph::new(3, []).unwrap();
        assert_eq!(g.laplacian(), Matrix::zeros(3));
    }

    #[test]
    fn normalized_laplacian_cases() {
        let l = pair(5.0).normalized_laplacian().unwrap();
        assert_eq!(l, Matrix::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]));

        let g: WeightedDigraph = UNBALANCED5.parse().unwrap();
        let l = g.normalized_laplacian().unwrap();
        // node 3 (0-based) has in-edges from 0 (1), 1 (5), 2 (2), 4 (3); d = 11
        let expected = [-1.0 / 11.0, -5.0 / 11.0, -2.0 / 11.0, 1.0, -3.0 / 11.0];
        for (a, b) in l.row(3).iter().zip(expected) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
        assert!(l.diag().iter().all(|&d| d == 1.0));

        let g = WeightedDigraph::new(2, [(0, 1, 1.0)]).unwrap();
        assert_eq!(g.normalized_laplacian(), Err(Error::ZeroInDegree(0)));
    }

    #[test]
    fn balance_predicate() {
        assert!(pair(2.0).is_balanced(0.0));
        let g: WeightedDigraph = UNBALANCED5.parse().unwrap();
        assert!(!g.is_balanced(BALANCE_TOL));
        assert!(WeightedDigraph::complete(6, true).unwrap().is_balanced(BALANCE_TOL));
    }

    #[test]
    fn strong_connectivity() {
        let cycle = WeightedDigraph::new(3, [(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)]).unwrap();
        assert!(cycle.is_strongly_connected());
        let path = WeightedDigraph::new(3, [(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        assert!(!path.is_strongly_connected());
        assert_eq!(path.strongly_connected_components().len(), 3);
        let g: WeightedDigraph = UNBALANCED5.parse().unwrap();
        assert!(g.is_strongly_connected());
    }

    #[test]
    fn perron_vector_of_unbalanced_graph() {
        let g: WeightedDigraph = UNBALANCED5.parse().unwrap();
        let q = g.perron_left_vector(PERRON_TOL).unwrap();
        let exact = [2.75, 1.5, 4.0, 1.0, 1.5].map(|v| v / 10.75);
        for (a, b) in q.iter().zip(exact) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-10);
        }
        let rounded: Vec<f64> = q.iter().map(|v| (v * 100.0).round() / 100.0).collect();
        assert_eq!(rounded, vec![0.26, 0.14, 0.37, 0.09, 0.14]);
    }

    #[test]
    fn perron_vector_of_balanced_graph_is_uniform() {
        let g = WeightedDigraph::regular(7, 3, false, 9).unwrap();
        let q = g.perron_left_vector(PERRON_TOL).unwrap();
        assert!(q.iter().all(|&v| (v - 1.0 / 7.0).abs() < 1e-12));
    }

    #[test]
    fn perron_requires_strong_connectivity() {
        let path = WeightedDigraph::new(2, [(0, 1, 1.0)]).unwrap();
        assert_eq!(path.perron_left_vector(1e-9), Err(Error::NotStronglyConnected));
    }

    #[test]
    fn complete_graph_generator() {
        let g = WeightedDigraph::complete(2, true).unwrap();
        assert_eq!(g.edge_count(), 2);
        assert!(g.edges().iter().all(|e| e.weight == 1.0));
        let g = WeightedDigraph::complete(5, true).unwrap();
        assert_eq!(g.edge_count(), 20);
        assert!(g.edges().iter().all(|e| e.weight == 0.25));
        let g = WeightedDigraph::complete(3, false).unwrap();
        assert_eq!(g.edge_count(), 6);
        assert!(g.edges().iter().all(|e| e.weight == 1.0));
    }

    #[test]
    fn regular_graph_generator() {
        let g = WeightedDigraph::regular(5, 4, false, 3).unwrap();
        assert_eq!(g.edge_count(), 20);
        let h = WeightedDigraph::regular(4, 2, false, 0).unwrap();
        assert_eq!(h.edge_count(), 8);
        let g = WeightedDigraph::regular(30, 2, true, 11).unwrap();
        assert_eq!(g.edge_count(), 60);
        assert!(g.is_balanced(BALANCE_TOL));
        assert_eq!(
            WeightedDigraph::regular(4, 4, true, 0),
            Err(Error::InvalidDegree { n: 4, d: 4 })
        );
        assert_eq!(WeightedDigraph::regular(5, 2, true, 7), WeightedDigraph::regular(5, 2, true, 7));
    }

    #[test]
    fn circulant_structure_without_permutation() {
        // every node i must feed exactly d distinct successors and receive d edges
        let g = WeightedDigraph::regular(4, 2, false, 0).unwrap();
        for i in 0..4 {
            assert_eq!(g.in_neighbors(i).len(), 2);
            assert_eq!(g.out_neighbors(i).len(), 2);
        }
    }

    #[test]
    fn parse_errors() {
        let g = WeightedDigraph::parse_edge_list("3\n0 1 2.0\n1 2 1.0\n2 0 1.0").unwrap();
        assert!(g.is_strongly_connected());
        assert_eq!(g.edge_count(), 3);
        assert!(matches!(
            WeightedDigraph::parse_edge_list("2\n0 0 1.0"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            WeightedDigraph::parse_edge_list("2\n0 1 1\n0 1 2"),
            Err(Error::DuplicateEdge { tail: 0, head: 1 })
        ));
        assert!(matches!(
            WeightedDigraph::parse_edge_list("2\n0 1 -1"),
            Err(Error::NonPositiveWeight { .. })
        ));
        assert!(matches!(
            WeightedDigraph::parse_edge_list("two\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            WeightedDigraph::parse_edge_list("# only a comment\n"),
            Err(Error::Parse { .. })
        ));
    }

    fn arb_graph() -> impl Strategy<Value = WeightedDigraph> {
        (1usize..8)
            .prop_flat_map(|n| {
                let pairs = proptest::collection::vec((0..n, 0..n, 0.01f64..100.0), 0..30);
                (Just(n), pairs)
            })
            .prop_map(|(n, raw)| {
                let mut seen = HashSet::new();
                let edges: Vec<_> = raw
                    .into_iter()
                    .filter(|&(a, b, _)| a != b && seen.insert((a, b)))
                    .collect();
                WeightedDigraph::new(n, edges).unwrap()
            })
    }

    proptest! {
        #[test]
        fn edge_list_round_trip(g in arb_graph()) {
            let text = g.to_edge_list();
            let back = WeightedDigraph::parse_edge_list(&text).unwrap();
            prop_assert_eq!(&back, &g);
            prop_assert_eq!(back.to_edge_list(), text);
        }

        #[test]
        fn laplacian_rows_sum_to_zero_exactly(g in arb_graph()) {
            let l = g.laplacian();
            for i in 0..g.n() {
                // assembled: diagonal is the sum of the negated off-diagonals
                let off: f64 = g.in_neighbors(i).iter().map(|&(_, w)| w).sum();
                prop_assert_eq!(l[(i, i)], off);
                for j in 0..g.n() {
                    if i != j { prop_assert!(l[(i, j)] <= 0.0); }
                }
            }
        }

        #[test]
        fn balanced_graphs_have_zero_column_sums(seed in any::<u64>(), n in 2usize..10) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_balanced(n, 3, (0.1, 2.0), &mut rng);
            prop_assert!(g.is_balanced(1e-12));
            let cols = g.laplacian().col_sums();
            prop_assert!(cols.iter().all(|c| c.abs() <= 1e-12));
        }

        #[test]
        fn regular_graphs_are_balanced(n in 3usize..20, seed in any::<u64>(), norm in any::<bool>()) {
            for d in 2..n {
                let g = WeightedDigraph::regular(n, d, norm, seed).unwrap();
                prop_assert!(g.is_balanced(BALANCE_TOL));
                for i in 0..n {
                    prop_assert_eq!(g.in_neighbors(i).len(), d);
                }
            }
        }
    }

    #[test]
    fn perron_residual_on_random_graphs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..100 {
            let n = rng.gen_range(1..=12);
            let p = rng.gen_range(0.0..0.6);
            let g = random_strongly_connected(n, p, (0.1, 5.0), &mut rng);
            let q = g.perron_left_vector(1e-12).unwrap();
            let res = g.laplacian().vec_mul(&q);
            assert!(res.iter().all(|r| r.abs() <= 1e-12));
            assert!(q.iter().all(|&v| v > 0.0));
            assert_abs_diff_eq!(q.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn random_generators_meet_their_contracts() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 2..10 {
            assert!(random_strongly_connected(n, 0.2, (0.5, 2.0), &mut rng).is_strongly_connected());
            let b = random_balanced(n, 2, (0.5, 2.0), &mut rng);
            assert!(b.is_strongly_connected() && b.is_balanced(1e-12));
            let s = random_symmetric_connected(n, 0.3, (0.5, 2.0), &mut rng);
            assert!(s.is_symmetric() && s.is_strongly_connected());
        }
    }
}
