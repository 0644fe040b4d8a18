//! Directed leader-follower graphs and their positivity certificate.
//!
//! Followers are numbered `1..=n` in the public API; node `0` is the leader.
//! Internally rows/columns are zero-based, so `adjacency[(i, j)]` holds the
//! weight with which follower `i + 1` listens to follower `j + 1`.

use std::collections::{HashSet, VecDeque};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("graph needs at least one follower")]
    Empty,
    #[error("node index {index} outside 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("weight {weight} on edge {from}->{to} must be positive and finite")]
    BadWeight { from: usize, to: usize, weight: f64 },
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("duplicate edge {from}->{to}")]
    DuplicateEdge { from: usize, to: usize },
    #[error("no spanning tree rooted at the leader; unreachable followers: {0:?}")]
    NoSpanningTree(Vec<usize>),
    #[error("information matrix is singular")]
    Singular,
    #[error("certificate check failed: {0}")]
    Internal(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectedLeaderGraph {
    adjacency: DMatrix<f64>,
    leader: DVector<f64>,
}

impl DirectedLeaderGraph {
    pub fn n_followers(&self) -> usize {
        self.leader.len()
    }

    /// a_ij with zero-based follower indices.
    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.adjacency[(i, j)]
    }

    /// a_i0 with a zero-based follower index.
    #[inline]
    pub fn leader_weight(&self, i: usize) -> f64 {
        self.leader[i]
    }

    pub fn adjacency(&self) -> &DMatrix<f64> {
        &self.adjacency
    }

    pub fn leader_weights(&self) -> &DVector<f64> {
        &self.leader
    }

    /// Zero-based in-neighbours of follower `i` with their weights.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.n_followers()).filter_map(move |j| {
            let w = self.adjacency[(i, j)];
            (w != 0.0).then_some((j, w))
        })
    }

    /// Edge list as `(from, to, weight)` with the leader as node 0.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let n = self.n_followers();
        let mut out = Vec::new();
        for i in 0..n {
            if self.leader[i] != 0.0 {
                out.push((0, i + 1, self.leader[i]));
            }
        }
        for i in 0..n {
            for j in 0..n {
                if self.adjacency[(i, j)] != 0.0 {
                    out.push((j + 1, i + 1, self.adjacency[(i, j)]));
                }
            }
        }
        out
    }

    /// H = L + B.
    pub fn information_matrix(&self) -> DMatrix<f64> {
        let n = self.n_followers();
        let mut h = -self.adjacency.clone();
        for i in 0..n {
            let degree: f64 = self.adjacency.row(i).iter().sum();
            h[(i, i)] = degree + self.leader[i];
        }
        h
    }
}

/// Build a graph from 1-based `(from, to, weight)` edges and `(follower, weight)` leader links.
pub fn build_graph(
    edges: &[(usize, usize, f64)],
    leader_links: &[(usize, f64)],
    n: usize,
) -> Result<DirectedLeaderGraph, GraphError> {
    if n == 0 {
        return Err(GraphError::Empty);
    }
    let check_index = |index: usize| {
        if index == 0 || index > n {
            Err(GraphError::IndexOutOfRange { index, n })
        } else {
            Ok(())
        }
    };
    let mut adjacency = DMatrix::zeros(n, n);
    let mut leader = DVector::zeros(n);
    let mut seen = HashSet::new();
    for &(from, to, weight) in edges {
        check_index(from)?;
        check_index(to)?;
        if from == to {
            return Err(GraphError::SelfLoop(from));
        }
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(GraphError::BadWeight { from, to, weight });
        }
        if !seen.insert((from, to)) {
            return Err(GraphError::DuplicateEdge { from, to });
        }
        adjacency[(to - 1, from - 1)] = weight;
    }
    for &(to, weight) in leader_links {
        check_index(to)?;
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(GraphError::BadWeight { from: 0, to, weight });
        }
        if !seen.insert((0, to)) {
            return Err(GraphError::DuplicateEdge { from: 0, to });
        }
        leader[to - 1] = weight;
    }
    Ok(DirectedLeaderGraph { adjacency, leader })
}

/// Followers (1-based) not reachable from the leader.
pub fn unreachable_followers(g: &DirectedLeaderGraph) -> Vec<usize> {
    let n = g.n_followers();
    let mut visited = vec![false; n];
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| g.leader_weight(i) > 0.0).collect();
    for &i in &queue {
        visited[i] = true;
    }
    while let Some(j) = queue.pop_front() {
        // j -> i whenever a_ij > 0
        for i in 0..n {
            if !visited[i] && g.weight(i, j) > 0.0 {
                visited[i] = true;
                queue.push_back(i);
            }
        }
    }
    (0..n).filter(|&i| !visited[i]).map(|i| i + 1).collect()
}

pub fn has_leader_spanning_tree(g: &DirectedLeaderGraph) -> bool {
    unreachable_followers(g).is_empty()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphCertificate {
    pub h: DMatrix<f64>,
    pub pi: DVector<f64>,
    pub xi: DMatrix<f64>,
    pub lambda_min_xi: f64,
}

pub const CERTIFICATE_RESIDUAL_TOL: f64 = 1e-10;
pub const SYMMETRY_TOL: f64 = 1e-9;

/// Solve H^T pi = 1, form Xi = (Pi H + H^T Pi) / 2 and its smallest eigenvalue.
pub fn certificate(g: &DirectedLeaderGraph) -> Result<GraphCertificate, GraphError> {
    let unreachable = unreachable_followers(g);
    if !unreachable.is_empty() {
        return Err(GraphError::NoSpanningTree(unreachable));
    }
    let n = g.n_followers();
    let h = g.information_matrix();
    let ones = DVector::from_element(n, 1.0);
    let pi = h.transpose().lu().solve(&ones).ok_or(GraphError::Singular)?;

    let residual = (h.transpose() * &pi - &ones).amax();
    let scale = (h.amax() * pi.amax()).max(1.0);
    if !(residual <= CERTIFICATE_RESIDUAL_TOL * scale) {
        return Err(GraphError::Internal(format!("H^T pi residual {residual:e}")));
    }
    if let Some(i) = pi.iter().position(|&p| !(p > 0.0)) {
        return Err(GraphError::Internal(format!("pi_{} = {} is not positive", i + 1, pi[i])));
    }

    let pi_h = DMatrix::from_diagonal(&pi) * &h;
    let raw = (&pi_h + pi_h.transpose()) * 0.5;
    let asym = (&raw - raw.transpose()).amax();
    if asym > SYMMETRY_TOL {
        return Err(GraphError::Internal(format!("Xi asymmetry {asym:e}")));
    }
    let xi = (&raw + raw.transpose()) * 0.5;
    let lambda_min_xi = xi.clone().symmetric_eigen().eigenvalues.min();
    if !(lambda_min_xi > 0.0) {
        return Err(GraphError::Internal(format!("lambda_min(Xi) = {lambda_min_xi} is not positive")));
    }
    Ok(GraphCertificate { h, pi, xi, lambda_min_xi })
}

/// Parse the edge-list format: one `from to weight` triple per line, node 0 is
/// the leader. `#` starts a comment. The follower count is the largest index seen.
pub fn parse_edge_list(text: &str) -> Result<DirectedLeaderGraph, GraphError> {
    let mut edges = Vec::new();
    let mut links = Vec::new();
    let mut n = 0;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |msg: String| GraphError::Parse { line: lineno + 1, msg };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(parse_err(format!("expected `from to weight`, got {} fields", fields.len())));
        }
        let from: usize = fields[0].parse().map_err(|e| parse_err(format!("from: {e}")))?;
        let to: usize = fields[1].parse().map_err(|e| parse_err(format!("to: {e}")))?;
        let w: f64 = fields[2].parse().map_err(|e| parse_err(format!("weight: {e}")))?;
        if to == 0 {
            return Err(parse_err("the leader (node 0) cannot receive edges".into()));
        }
        n = n.max(from).max(to);
        if from == 0 {
            links.push((to, w));
        } else {
            edges.push((from, to, w));
        }
    }
    build_graph(&edges, &links, n)
}

pub fn load_edge_list(path: &Path) -> Result<DirectedLeaderGraph, GraphError> {
    let text = std::fs::read_to_string(path).map_err(|e| GraphError::Io(format!("{}: {e}", path.display())))?;
    parse_edge_list(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> DirectedLeaderGraph {
        build_graph(&[(1, 2, 1.0)], &[(1, 1.0)], 2).unwrap()
    }

    #[test]
    fn construction() {
        let g = chain();
        assert_eq!(g.weight(1, 0), 1.0);
        assert_eq!(g.weight(0, 1), 0.0);
        assert_eq!(g.leader_weight(0), 1.0);
        assert_eq!(g.leader_weight(1), 0.0);

        let single = build_graph(&[], &[(1, 1.0)], 1).unwrap();
        assert_eq!(single.n_followers(), 1);

        assert_eq!(build_graph(&[(1, 1, 1.0)], &[], 1), Err(GraphError::SelfLoop(1)));
        assert!(matches!(build_graph(&[(1, 3, 1.0)], &[], 2), Err(GraphError::IndexOutOfRange { .. })));
        assert!(matches!(build_graph(&[(1, 2, -1.0)], &[], 2), Err(GraphError::BadWeight { .. })));
        assert!(matches!(
            build_graph(&[(1, 2, 1.0), (1, 2, 2.0)], &[], 2),
            Err(GraphError::DuplicateEdge { .. })
        ));
        assert!(matches!(build_graph(&[], &[(1, 1.0), (1, 1.0)], 1), Err(GraphError::DuplicateEdge { .. })));
    }

    #[test]
    fn spanning_tree_examples() {
        assert!(has_leader_spanning_tree(&chain()));
        let split = build_graph(&[], &[(1, 1.0)], 2).unwrap();
        assert!(!has_leader_spanning_tree(&split));
        let ring = build_graph(&[(1, 2, 1.0), (2, 3, 1.0), (3, 1, 1.0)], &[(1, 1.0)], 3).unwrap();
        assert!(has_leader_spanning_tree(&ring));
    }

    #[test]
    fn chain_certificate() {
        let c = certificate(&chain()).unwrap();
        assert_eq!(c.h, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, -1.0, 1.0]));
        assert!((c.pi[0] - 2.0).abs() < 1e-12 && (c.pi[1] - 1.0).abs() < 1e-12);
        let xi = DMatrix::from_row_slice(2, 2, &[2.0, -0.5, -0.5, 1.0]);
        assert!((&c.xi - xi).amax() < 1e-12);
        let expect = (3.0 - 2f64.sqrt()) / 2.0;
        assert!((c.lambda_min_xi - expect).abs() < 1e-12);
        assert!((c.lambda_min_xi - 0.7929).abs() < 1e-4);
    }

    #[test]
    fn pinned_certificate() {
        let c = certificate(&build_graph(&[], &[(1, 1.0)], 1).unwrap()).unwrap();
        assert_eq!(c.h[(0, 0)], 1.0);
        assert_eq!(c.pi[0], 1.0);
        assert_eq!(c.lambda_min_xi, 1.0);
    }

    #[test]
    fn certificate_refused_without_tree() {
        let split = build_graph(&[], &[(1, 1.0)], 2).unwrap();
        assert_eq!(certificate(&split), Err(GraphError::NoSpanningTree(vec![2])));
    }

    #[test]
    fn edge_list_round_trip() {
        let g = parse_edge_list("# chain\n0 1 1.0\n1 2 1.0\n").unwrap();
        assert_eq!(g, chain());
        assert_eq!(parse_edge_list(&g.edges().iter().map(|(a, b, w)| format!("{a} {b} {w}\n")).collect::<String>()).unwrap(), g);
        assert!(matches!(parse_edge_list("0 1\n"), Err(GraphError::Parse { line: 1, .. })));
        assert!(matches!(parse_edge_list("1 0 1\n"), Err(GraphError::Parse { .. })));
    }
}
