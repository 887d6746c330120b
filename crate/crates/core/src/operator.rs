//! Symmetric local operators on a base graph and the families that
//! produce them from a spectral parameter.

use crate::error::OperatorError;
use crate::graph::{EdgeId, Graph, VertexId};
use num_complex::Complex64;
use std::sync::Arc;

/// A symmetric local operator: a diagonal entry per vertex and one
/// coefficient per directed edge with `m_e == m_{e^-1}` exactly.
/// Off-diagonal entries are never zero; callers must delete zero-weight
/// edges from the graph instead.
#[derive(Debug, Clone)]
pub struct LocalOperator {
    graph: Arc<Graph>,
    diag: Vec<Complex64>,
    off: Vec<Complex64>,
}

impl LocalOperator {
    pub fn new(
        graph: Arc<Graph>,
        diag: Vec<Complex64>,
        off: Vec<Complex64>,
    ) -> Result<Self, OperatorError> {
        if diag.len() != graph.n_vertices() {
            return Err(OperatorError::BadLength { got: diag.len(), want: graph.n_vertices() });
        }
        if off.len() != graph.n_directed() {
            return Err(OperatorError::BadLength { got: off.len(), want: graph.n_directed() });
        }
        for e in 0..off.len() {
            if off[e] != off[e ^ 1] {
                return Err(OperatorError::NotSymmetric { e, inv: e ^ 1 });
            }
            if off[e] == Complex64::ZERO {
                return Err(OperatorError::ZeroOffDiagonal(e));
            }
        }
        Ok(LocalOperator { graph, diag, off })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn graph_arc(&self) -> Arc<Graph> {
        Arc::clone(&self.graph)
    }

    /// m_vv
    pub fn diag(&self, v: VertexId) -> Complex64 {
        self.diag[v]
    }

    /// m_e (equal for both directions of an undirected edge)
    pub fn off(&self, e: EdgeId) -> Complex64 {
        self.off[e]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    /// m_vv = d_v - 1 + lambda^2, m_e = -lambda. Its non-invertibility on
    /// the universal cover characterizes the tree's non-backtracking
    /// spectrum away from the forced points +-1.
    QLambda,
    /// A - lambda I with the graph's edge weights.
    AdjacencyShift,
    /// W - lambda I for an explicit nonzero weight per undirected edge.
    WeightedAdjacency,
}

/// A lambda-parameterized family of local operators over a fixed graph.
#[derive(Debug, Clone)]
pub struct OperatorFamily {
    graph: Arc<Graph>,
    kind: FamilyKind,
    weights: Option<Vec<f64>>,
}

impl OperatorFamily {
    pub fn q_lambda(graph: Arc<Graph>) -> Self {
        OperatorFamily { graph, kind: FamilyKind::QLambda, weights: None }
    }

    pub fn adjacency_shift(graph: Arc<Graph>) -> Self {
        OperatorFamily { graph, kind: FamilyKind::AdjacencyShift, weights: None }
    }

    /// `weights[k]` applies to undirected edge k.
    pub fn weighted_adjacency(
        graph: Arc<Graph>,
        weights: Vec<f64>,
    ) -> Result<Self, OperatorError> {
        if weights.len() != graph.n_undirected() {
            return Err(OperatorError::BadLength {
                got: weights.len(),
                want: graph.n_undirected(),
            });
        }
        if let Some(k) = weights.iter().position(|&w| w == 0.0) {
            return Err(OperatorError::ZeroEdgeWeight(k));
        }
        Ok(OperatorFamily { graph, kind: FamilyKind::WeightedAdjacency, weights: Some(weights) })
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn graph_arc(&self) -> Arc<Graph> {
        Arc::clone(&self.graph)
    }

    pub fn evaluate(&self, lambda: Complex64) -> Result<LocalOperator, OperatorError> {
        let g = &self.graph;
        let (diag, off): (Vec<Complex64>, Vec<Complex64>) = match self.kind {
            FamilyKind::QLambda => {
                // Degenerates at lambda = 0 (all off-diagonals vanish);
                // membership handles that point symbolically.
                let diag = (0..g.n_vertices())
                    .map(|v| Complex64::new(g.degree(v) as f64 - 1.0, 0.0) + lambda * lambda)
                    .collect();
                let off = vec![-lambda; g.n_directed()];
                (diag, off)
            }
            FamilyKind::AdjacencyShift => {
                let diag = vec![-lambda; g.n_vertices()];
                let off = (0..g.n_directed())
                    .map(|e| Complex64::new(g.weight(e), 0.0))
                    .collect();
                (diag, off)
            }
            FamilyKind::WeightedAdjacency => {
                let w = self.weights.as_ref().expect("weights set at construction");
                let diag = vec![-lambda; g.n_vertices()];
                let off = (0..g.n_directed())
                    .map(|e| Complex64::new(w[e / 2], 0.0))
                    .collect();
                (diag, off)
            }
        };
        LocalOperator::new(Arc::clone(&self.graph), diag, off)
    }
}
