use serde::{Deserialize, Serialize};

use crate::model::{EdgeRule, GroupLabel, TrustMatrix};

/// Undirected, simple trust graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrustGraph {
    pub labels: Vec<GroupLabel>,
    /// `(i, j)` with `i < j`.
    pub edges: Vec<(usize, usize)>,
}

impl TrustGraph {
    pub fn n_nodes(&self) -> usize {
        self.labels.len()
    }

    pub fn is_complete(&self) -> bool {
        let n = self.n_nodes();
        self.edges.len() == n * (n - 1) / 2
    }
}

pub fn build_trust_graph(
    trust: &TrustMatrix,
    labels: &[GroupLabel],
    edge_threshold: f64,
    rule: EdgeRule,
) -> TrustGraph {
    let n = trust.n();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (trust.get(i, j), trust.get(j, i));
            let linked = match rule {
                EdgeRule::MutualMean => (a + b) / 2.0 >= edge_threshold,
                EdgeRule::BothDirections => a >= edge_threshold && b >= edge_threshold,
            };
            if linked {
                edges.push((i, j));
            }
        }
    }
    TrustGraph {
        labels: labels.to_vec(),
        edges,
    }
}

/// Newman attribute assortativity over the two-group mixing matrix.
/// `None` when there are no edges or every edge end is in one group.
pub fn assortativity(graph: &TrustGraph) -> Option<f64> {
    if graph.edges.is_empty() {
        return None;
    }
    let idx = |g: GroupLabel| match g {
        GroupLabel::Kappa => 0,
        GroupLabel::Tilon => 1,
    };
    let mut e = [[0.0f64; 2]; 2];
    let w = 1.0 / (2 * graph.edges.len()) as f64;
    for &(i, j) in &graph.edges {
        let (gi, gj) = (idx(graph.labels[i]), idx(graph.labels[j]));
        e[gi][gj] += w;
        e[gj][gi] += w;
    }
    let a = [e[0][0] + e[0][1], e[1][0] + e[1][1]];
    let b = [e[0][0] + e[1][0], e[0][1] + e[1][1]];
    let ab = a[0] * b[0] + a[1] * b[1];
    let denom = 1.0 - ab;
    if denom.abs() < 1e-15 {
        return None;
    }
    Some((e[0][0] + e[1][1] - ab) / denom)
}
