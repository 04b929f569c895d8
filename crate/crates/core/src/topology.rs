//! Directed sensor network with a row-stochastic adjacency matrix.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::linalg::Mat;

const ROW_SUM_TOL: f64 = 1e-12;

/// A directed edge: `receiver` hears `sender`. Zero-based node indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub receiver: usize,
    pub sender: usize,
}

impl Edge {
    /// Information flows `from → to`, so `to` is the receiver.
    pub fn flow(from: usize, to: usize) -> Self {
        Self { receiver: to, sender: from }
    }
}

/// Fixed network `(V, E, 𝒜)`. `neighbors[i]` is `𝒩_i` in ascending order and
/// always contains `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkTopology {
    adjacency: Mat,
    neighbors: Vec<Vec<usize>>,
}

impl NetworkTopology {
    /// Validates an explicit adjacency matrix: nonnegative, positive diagonal,
    /// unit row sums.
    pub fn from_adjacency(adjacency: Mat) -> Result<Self> {
        let n = adjacency.nrows();
        if n == 0 {
            return Err(Error::Topology("network has no nodes".into()));
        }
        if adjacency.ncols() != n {
            return Err(Error::Topology(format!("adjacency is {}x{}", n, adjacency.ncols())));
        }
        let mut neighbors = Vec::with_capacity(n);
        for i in 0..n {
            let row = adjacency.row(i);
            if row.iter().any(|v| *v < 0.0 || !v.is_finite()) {
                return Err(Error::Topology(format!("row {i} has a negative or non-finite weight")));
            }
            if adjacency[(i, i)] <= 0.0 {
                return Err(Error::Topology(format!("diagonal entry {i} is not positive")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::Topology(format!("row {i} sums to {sum}")));
            }
            neighbors.push((0..n).filter(|&j| adjacency[(i, j)] > 0.0).collect());
        }
        Ok(Self { adjacency, neighbors })
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn adjacency(&self) -> &Mat {
        &self.adjacency
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.adjacency[(i, j)]
    }

    /// `a_{i,j}` for `j ∈ 𝒩_i`, in neighbor order.
    pub fn neighbor_weights(&self, i: usize) -> Vec<f64> {
        self.neighbors[i].iter().map(|&j| self.adjacency[(i, j)]).collect()
    }

    /// Directed edges excluding self-loops.
    pub fn edges(&self) -> Vec<Edge> {
        let mut out = Vec::new();
        for (i, nb) in self.neighbors.iter().enumerate() {
            out.extend(nb.iter().filter(|&&j| j != i).map(|&j| Edge { receiver: i, sender: j }));
        }
        out
    }
}

/// `a_{i,j} = 1/|𝒩_i|` on `𝒩_i = {j : (i, j) ∈ E} ∪ {i}`.
pub fn uniform_weights(edges: &[Edge], n: usize) -> Result<NetworkTopology> {
    if n == 0 {
        return Err(Error::Topology("network has no nodes".into()));
    }
    let mut member = vec![vec![false; n]; n];
    for (i, row) in member.iter_mut().enumerate() {
        row[i] = true;
    }
    for e in edges {
        if e.receiver >= n || e.sender >= n {
            return Err(Error::Topology(format!("edge {} <- {} references a node outside 0..{n}", e.receiver, e.sender)));
        }
        member[e.receiver][e.sender] = true;
    }
    let mut adjacency = Mat::zeros(n, n);
    for (i, row) in member.iter().enumerate() {
        let degree = row.iter().filter(|b| **b).count() as f64;
        for (j, _) in row.iter().enumerate().filter(|(_, b)| **b) {
            adjacency[(i, j)] = 1.0 / degree;
        }
    }
    NetworkTopology::from_adjacency(adjacency)
}

fn reaches_all(n: usize, start: usize, next: impl Fn(usize) -> Vec<usize>) -> bool {
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    let mut count = 1;
    while let Some(u) = queue.pop_front() {
        for v in next(u) {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                queue.push_back(v);
            }
        }
    }
    count == n
}

/// Every node reaches every other along directed edges.
pub fn is_strongly_connected(topology: &NetworkTopology) -> bool {
    let n = topology.len();
    if n == 0 {
        return false;
    }
    // Information flows sender -> receiver; check node 0 reaches all and is reached by all.
    let forward = |u: usize| (0..n).filter(|&v| v != u && topology.adjacency[(v, u)] > 0.0).collect();
    let backward = |u: usize| topology.neighbors[u].iter().copied().filter(|&v| v != u).collect();
    reaches_all(n, 0, forward) && reaches_all(n, 0, backward)
}

/// `𝒜^s` by repeated multiplication.
pub fn adjacency_power(topology: &NetworkTopology, s: usize) -> Mat {
    let n = topology.len();
    let mut out = Mat::identity(n, n);
    for _ in 0..s {
        out = &out * &topology.adjacency;
    }
    out
}

/// True iff every entry of `𝒜^s` is strictly positive.
pub fn check_primitivity(topology: &NetworkTopology, s: usize) -> bool {
    s >= 1 && adjacency_power(topology, s).iter().all(|v| *v > 0.0)
}

/// The four-sensor directed ring `1 → 2 → 3 → 4 → 1`.
pub fn fig2_ring() -> NetworkTopology {
    let edges: Vec<Edge> = (0..4).map(|i| Edge::flow(i, (i + 1) % 4)).collect();
    uniform_weights(&edges, 4).expect("static topology")
}

/// Undirected links of the 20-sensor network, one-based.
///
/// Not a transcription: the published figure is only a drawing. This is a
/// connected planar-looking mesh of comparable density (ring plus chords).
pub const TWENTY_NODE_LINKS: [(usize, usize); 30] = [
    (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (7, 8), (8, 9), (9, 10), (10, 11),
    (11, 12), (12, 13), (13, 14), (14, 15), (15, 16), (16, 17), (17, 18), (18, 19), (19, 20), (20, 1),
    (1, 6), (3, 9), (5, 12), (8, 14), (10, 17), (13, 19), (15, 20), (2, 18), (4, 11), (7, 16),
];

/// 20-sensor undirected network with uniform weights.
pub fn fig7_twenty_node() -> NetworkTopology {
    let mut edges = Vec::with_capacity(2 * TWENTY_NODE_LINKS.len());
    for &(a, b) in &TWENTY_NODE_LINKS {
        edges.push(Edge::flow(a - 1, b - 1));
        edges.push(Edge::flow(b - 1, a - 1));
    }
    uniform_weights(&edges, 20).expect("static topology")
}

/// Looks up a named topology preset.
pub fn preset(name: &str) -> Option<NetworkTopology> {
    match name {
        "fig2_4cycle" => Some(fig2_ring()),
        "fig7_20node" => Some(fig7_twenty_node()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ring_rows_have_two_halves() {
        let t = fig2_ring();
        for i in 0..4 {
            let nb = t.neighbor_weights(i);
            assert_eq!(nb, vec![0.5, 0.5]);
        }
        // Sensor 2 hears sensor 1.
        assert_eq!(t.neighbors(1), &[0, 1]);
        assert_eq!(t.neighbors(0), &[0, 3]);
    }

    #[test]
    fn single_node_is_identity() {
        let t = uniform_weights(&[], 1).unwrap();
        assert_eq!(t.adjacency()[(0, 0)], 1.0);
        assert!(is_strongly_connected(&t));
    }

    #[test]
    fn complete_graph_is_uniform() {
        let mut edges = Vec::new();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    edges.push(Edge { receiver: i, sender: j });
                }
            }
        }
        let t = uniform_weights(&edges, 3).unwrap();
        assert!(t.adjacency().iter().all(|v| (*v - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn empty_network_rejected() {
        assert!(uniform_weights(&[], 0).is_err());
        assert!(uniform_weights(&[Edge { receiver: 0, sender: 5 }], 2).is_err());
    }

    #[test]
    fn explicit_adjacency_validation() {
        let bad_sum = Mat::from_row_slice(2, 2, &[0.5, 0.4, 0.5, 0.5]);
        assert!(NetworkTopology::from_adjacency(bad_sum).is_err());
        let zero_diag = Mat::from_row_slice(2, 2, &[0.0, 1.0, 0.5, 0.5]);
        assert!(NetworkTopology::from_adjacency(zero_diag).is_err());
    }

    #[test]
    fn connectivity_cases() {
        assert!(is_strongly_connected(&fig2_ring()));
        assert!(is_strongly_connected(&fig7_twenty_node()));
        assert!(!is_strongly_connected(&uniform_weights(&[], 2).unwrap()));
        // Star where the hub only receives.
        let star: Vec<Edge> = (1..5).map(|j| Edge { receiver: 0, sender: j }).collect();
        assert!(!is_strongly_connected(&uniform_weights(&star, 5).unwrap()));
    }

    #[test]
    fn ring_primitivity() {
        let t = fig2_ring();
        assert!(check_primitivity(&t, 3));
        assert!(!check_primitivity(&t, 1));
        assert!(!check_primitivity(&t, 2));
    }

    #[test]
    fn twenty_node_links_are_distinct() {
        let mut seen = std::collections::HashSet::new();
        for &(a, b) in &TWENTY_NODE_LINKS {
            assert!(a != b);
            assert!(seen.insert((a.min(b), a.max(b))));
        }
    }

    fn arb_topology() -> impl Strategy<Value = NetworkTopology> {
        (2usize..=12).prop_flat_map(|n| {
            let pairs = proptest::collection::vec((0..n, 0..n), 0..3 * n);
            let perm = Just((0..n).collect::<Vec<_>>()).prop_shuffle();
            (Just(n), pairs, perm).prop_map(|(n, pairs, perm)| {
                // A Hamiltonian cycle in random order guarantees strong connectivity.
                let mut edges: Vec<Edge> = (0..n).map(|i| Edge::flow(perm[i], perm[(i + 1) % n])).collect();
                edges.extend(pairs.into_iter().map(|(a, b)| Edge::flow(a, b)));
                uniform_weights(&edges, n).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn strongly_connected_graphs_are_primitive(t in arb_topology()) {
            prop_assert!(is_strongly_connected(&t));
            prop_assert!(check_primitivity(&t, t.len() - 1));
        }

        #[test]
        fn powers_stay_row_stochastic(t in arb_topology(), s in 1usize..8) {
            let p = adjacency_power(&t, s);
            for i in 0..t.len() {
                prop_assert!((p.row(i).sum() - 1.0).abs() < 1e-10);
            }
        }
    }
}
