//! Finite simple graphs with a fixed directed-edge indexing.
//!
//! Undirected edge `k` owns the directed pair `2k` (u -> v) and `2k + 1`
//! (v -> u), so edge reversal is `e ^ 1`. All non-backtracking machinery
//! is built on `follow`: `e -> e'` iff `tail(e') == head(e)` and
//! `e' != inverse(e)`.

use crate::error::GraphError;
use sha2::{Digest, Sha256};

pub type VertexId = usize;
/// Directed edge id in `0..2m`.
pub type EdgeId = usize;

#[derive(Debug, Clone)]
pub struct Graph {
    undirected: Vec<(VertexId, VertexId, f64)>,
    out_edges: Vec<Vec<EdgeId>>,
    degrees: Vec<usize>,
    connected: bool,
}

impl Graph {
    /// Builds a graph from unit-weight undirected edges. Rejects self-loops
    /// and duplicate edges; disconnected graphs are allowed and flagged.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let weighted: Vec<(usize, usize, f64)> =
            edges.iter().map(|&(u, v)| (u, v, 1.0)).collect();
        Self::from_weighted_edges(n, &weighted)
    }

    pub fn from_weighted_edges(
        n: usize,
        edges: &[(usize, usize, f64)],
    ) -> Result<Self, GraphError> {
        let mut seen = std::collections::HashSet::new();
        for &(u, v, _) in edges {
            if u >= n {
                return Err(GraphError::VertexOutOfRange { id: u, n });
            }
            if v >= n {
                return Err(GraphError::VertexOutOfRange { id: v, n });
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(GraphError::DuplicateEdge(u, v));
            }
        }
        let mut out_edges = vec![Vec::new(); n];
        for (k, &(u, v, _)) in edges.iter().enumerate() {
            out_edges[u].push(2 * k);
            out_edges[v].push(2 * k + 1);
        }
        let degrees: Vec<usize> = out_edges.iter().map(Vec::len).collect();
        let mut g = Graph {
            undirected: edges.to_vec(),
            out_edges,
            degrees,
            connected: false,
        };
        g.connected = g.compute_connected();
        Ok(g)
    }

    fn compute_connected(&self) -> bool {
        let n = self.n_vertices();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &e in &self.out_edges[v] {
                let w = self.head(e);
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == n
    }

    /// Parses the `nbgraph v1` text format; rejects disconnected graphs.
    pub fn parse(text: &str) -> Result<Self, GraphError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let (line, header) = lines
            .next()
            .ok_or_else(|| GraphError::Parse { line: 1, msg: "empty file".into() })?;
        if header != "nbgraph v1" {
            return Err(GraphError::Parse {
                line,
                msg: format!("expected `nbgraph v1`, got `{header}`"),
            });
        }
        let (line, vline) = lines
            .next()
            .ok_or(GraphError::Parse { line: 2, msg: "missing `vertices N`".into() })?;
        let n: usize = match vline.strip_prefix("vertices") {
            Some(rest) => rest.trim().parse().map_err(|_| GraphError::Parse {
                line,
                msg: format!("bad vertex count in `{vline}`"),
            })?,
            None => {
                return Err(GraphError::Parse {
                    line,
                    msg: format!("expected `vertices N`, got `{vline}`"),
                })
            }
        };
        let mut edges = Vec::new();
        for (line, l) in lines {
            let rest = l.strip_prefix("edge").ok_or_else(|| GraphError::Parse {
                line,
                msg: format!("expected `edge U V [WEIGHT]`, got `{l}`"),
            })?;
            let fields: Vec<&str> = rest.split_whitespace().collect();
            if fields.len() < 2 || fields.len() > 3 {
                return Err(GraphError::Parse {
                    line,
                    msg: format!("expected 2 or 3 fields after `edge`, got {}", fields.len()),
                });
            }
            let parse_id = |s: &str| -> Result<usize, GraphError> {
                s.parse().map_err(|_| GraphError::Parse {
                    line,
                    msg: format!("bad vertex id `{s}`"),
                })
            };
            let u = parse_id(fields[0])?;
            let v = parse_id(fields[1])?;
            let w = if fields.len() == 3 {
                fields[2].parse().map_err(|_| GraphError::Parse {
                    line,
                    msg: format!("bad weight `{}`", fields[2]),
                })?
            } else {
                1.0
            };
            edges.push((u, v, w));
        }
        let g = Self::from_weighted_edges(n, &edges)?;
        if !g.connected {
            return Err(GraphError::Disconnected);
        }
        Ok(g)
    }

    pub fn n_vertices(&self) -> usize {
        self.out_edges.len()
    }

    /// Number of undirected edges, m.
    pub fn n_undirected(&self) -> usize {
        self.undirected.len()
    }

    /// Number of directed edges, 2m.
    pub fn n_directed(&self) -> usize {
        2 * self.undirected.len()
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.degrees[v]
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn d_min(&self) -> usize {
        self.degrees.iter().copied().min().unwrap_or(0)
    }

    pub fn d_max(&self) -> usize {
        self.degrees.iter().copied().max().unwrap_or(0)
    }

    pub fn is_connected(&self) -> bool {
        self.connected
    }

    pub fn tail(&self, e: EdgeId) -> VertexId {
        let (u, v, _) = self.undirected[e / 2];
        if e % 2 == 0 { u } else { v }
    }

    pub fn head(&self, e: EdgeId) -> VertexId {
        let (u, v, _) = self.undirected[e / 2];
        if e % 2 == 0 { v } else { u }
    }

    pub fn inverse(&self, e: EdgeId) -> EdgeId {
        e ^ 1
    }

    /// Weight of the undirected edge carrying `e`.
    pub fn weight(&self, e: EdgeId) -> f64 {
        self.undirected[e / 2].2
    }

    pub fn undirected_edges(&self) -> &[(VertexId, VertexId, f64)] {
        &self.undirected
    }

    pub fn out_edges(&self, v: VertexId) -> &[EdgeId] {
        &self.out_edges[v]
    }

    /// All e' with `tail(e') = head(e)` and `e' != inverse(e)`;
    /// always `degree(head(e)) - 1` edges.
    pub fn follow(&self, e: EdgeId) -> impl Iterator<Item = EdgeId> + '_ {
        let inv = self.inverse(e);
        self.out_edges[self.head(e)]
            .iter()
            .copied()
            .filter(move |&f| f != inv)
    }

    /// Stable hex digest of the vertex count and canonical edge list.
    pub fn canonical_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(format!("n={};", self.n_vertices()));
        for &(u, v, w) in &self.undirected {
            h.update(format!("e={u},{v},{w:.17e};"));
        }
        let digest = h.finalize();
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// Standard construction helpers used throughout the tests and CLI examples.
pub mod graphs {
    use super::Graph;

    pub fn triangle() -> Graph {
        cycle(3)
    }

    pub fn cycle(n: usize) -> Graph {
        let edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Graph::from_edges(n, &edges).expect("cycle is simple")
    }

    pub fn complete(n: usize) -> Graph {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                edges.push((u, v));
            }
        }
        Graph::from_edges(n, &edges).expect("complete graph is simple")
    }

    /// Three internally disjoint paths of lengths 1, 2, 2 between two hub
    /// vertices; equivalently K4 minus an edge. Vertices: hubs 0, 1 and
    /// midpoints 2, 3; degrees (3, 3, 2, 2).
    pub fn theta_122() -> Graph {
        Graph::from_edges(4, &[(0, 1), (0, 2), (2, 1), (0, 3), (3, 1)]).expect("simple")
    }

    pub fn petersen() -> Graph {
        let mut edges = Vec::new();
        for i in 0..5 {
            edges.push((i, (i + 1) % 5));
            edges.push((5 + i, 5 + (i + 2) % 5));
            edges.push((i, 5 + i));
        }
        Graph::from_edges(10, &edges).expect("simple")
    }

    pub fn complete_bipartite(a: usize, b: usize) -> Graph {
        let mut edges = Vec::new();
        for u in 0..a {
            for v in 0..b {
                edges.push((u, a + v));
            }
        }
        Graph::from_edges(a + b, &edges).expect("simple")
    }

    /// K4 with its three perfect matchings weighted p1, p2, p3
    /// (matching i pairs {0,i} with the remaining two vertices).
    pub fn matched_k4(p: [f64; 3]) -> Graph {
        Graph::from_weighted_edges(
            4,
            &[
                (0, 1, p[0]),
                (2, 3, p[0]),
                (0, 2, p[1]),
                (1, 3, p[1]),
                (0, 3, p[2]),
                (1, 2, p[2]),
            ],
        )
        .expect("simple")
    }
}
