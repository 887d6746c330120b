//! Finite balls of the universal cover.
//!
//! Vertices of the cover correspond to non-backtracking walks from a base
//! vertex; a ball enumerates them breadth-first out to a fixed radius.
//! Each tree vertex remembers its base type and the base directed-edge
//! type it was entered through, which is all the local machinery needs.

use crate::error::GraphError;
use crate::graph::{EdgeId, Graph, VertexId};
use crate::operator::LocalOperator;
use num_complex::Complex64;

pub const DEFAULT_BALL_CAP: usize = 2_000_000;

#[derive(Debug, Clone)]
pub struct TreeVertex {
    pub base: VertexId,
    pub parent: Option<usize>,
    /// Base type of the directed edge parent -> this vertex.
    pub entering: Option<EdgeId>,
    pub depth: usize,
}

#[derive(Debug, Clone)]
pub struct TreeBall {
    radius: usize,
    verts: Vec<TreeVertex>,
    children: Vec<Vec<usize>>,
    level_offsets: Vec<usize>,
}

pub fn tree_ball(
    g: &Graph,
    root_type: VertexId,
    radius: usize,
    cap: usize,
) -> Result<TreeBall, GraphError> {
    let mut verts = vec![TreeVertex { base: root_type, parent: None, entering: None, depth: 0 }];
    let mut children: Vec<Vec<usize>> = vec![Vec::new()];
    let mut level_offsets = vec![0, 1];
    let mut level_start = 0;
    for depth in 1..=radius {
        let level_end = verts.len();
        for x in level_start..level_end {
            let expand: Vec<EdgeId> = match verts[x].entering {
                None => g.out_edges(verts[x].base).to_vec(),
                Some(e) => g.follow(e).collect(),
            };
            for e in expand {
                if verts.len() >= cap {
                    return Err(GraphError::BallTooLarge { cap });
                }
                let idx = verts.len();
                verts.push(TreeVertex {
                    base: g.head(e),
                    parent: Some(x),
                    entering: Some(e),
                    depth,
                });
                children.push(Vec::new());
                children[x].push(idx);
            }
        }
        level_start = level_end;
        level_offsets.push(verts.len());
    }
    Ok(TreeBall { radius, verts, children, level_offsets })
}

impl TreeBall {
    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.verts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.verts.is_empty()
    }

    pub fn vertex(&self, x: usize) -> &TreeVertex {
        &self.verts[x]
    }

    pub fn children(&self, x: usize) -> &[usize] {
        &self.children[x]
    }

    pub fn level_sizes(&self) -> Vec<usize> {
        self.level_offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Vertices at exact depth `k`, as a contiguous index range.
    pub fn level(&self, k: usize) -> std::ops::Range<usize> {
        self.level_offsets[k]..self.level_offsets[k + 1]
    }

    /// Interior vertices have all tree neighbours inside the ball.
    pub fn is_interior(&self, x: usize) -> bool {
        self.verts[x].depth < self.radius
    }

    /// Neighbours of `x` with the base type of the edge x -> neighbour.
    pub fn neighbors<'a>(
        &'a self,
        g: &'a Graph,
        x: usize,
    ) -> impl Iterator<Item = (usize, EdgeId)> + 'a {
        let parent = self.verts[x]
            .parent
            .map(|p| (p, g.inverse(self.verts[x].entering.expect("non-root has entering"))));
        parent.into_iter().chain(
            self.children[x]
                .iter()
                .map(|&c| (c, self.verts[c].entering.expect("child has entering"))),
        )
    }

    /// (Mf)(x) for every ball vertex; only interior rows see all their
    /// neighbours, so boundary rows are partial sums.
    pub fn apply_operator(&self, m: &LocalOperator, f: &[Complex64]) -> Vec<Complex64> {
        let g = m.graph();
        let mut out = vec![Complex64::ZERO; self.len()];
        for x in 0..self.len() {
            let mut acc = m.diag(self.verts[x].base) * f[x];
            for (y, e) in self.neighbors(g, x) {
                acc += m.off(e) * f[y];
            }
            out[x] = acc;
        }
        out
    }

    /// Base directed-edge types along the tree path from `from` to `to`.
    pub fn path_types(&self, g: &Graph, from: usize, to: usize) -> Vec<EdgeId> {
        if from == to {
            return Vec::new();
        }
        let mut up_a = vec![from];
        let mut up_b = vec![to];
        // climb to equal depth, then in lockstep to the common ancestor
        let (mut a, mut b) = (from, to);
        while self.verts[a].depth > self.verts[b].depth {
            a = self.verts[a].parent.unwrap();
            up_a.push(a);
        }
        while self.verts[b].depth > self.verts[a].depth {
            b = self.verts[b].parent.unwrap();
            up_b.push(b);
        }
        while a != b {
            a = self.verts[a].parent.unwrap();
            b = self.verts[b].parent.unwrap();
            up_a.push(a);
            up_b.push(b);
        }
        let mut types = Vec::new();
        // ascend from `from`: each step x -> parent has type inverse(entering(x))
        for &x in &up_a[..up_a.len() - 1] {
            types.push(g.inverse(self.verts[x].entering.unwrap()));
        }
        // descend to `to`: entering types, in root-to-leaf order
        for &x in up_b[..up_b.len() - 1].iter().rev() {
            types.push(self.verts[x].entering.unwrap());
        }
        types
    }

    /// Marks the component of `w` in the ball with the edge {u, w} removed
    /// (plus `w` itself); `w` must be a tree neighbour of `u`.
    pub fn subtree_marks(&self, u: usize, w: usize) -> Vec<bool> {
        let mut marks = vec![false; self.len()];
        let mut stack = vec![w];
        marks[w] = true;
        while let Some(x) = stack.pop() {
            let push = |y: usize, marks: &mut Vec<bool>, stack: &mut Vec<usize>| {
                if y != u && !marks[y] {
                    marks[y] = true;
                    stack.push(y);
                }
            };
            if let Some(p) = self.verts[x].parent {
                push(p, &mut marks, &mut stack);
            }
            for &c in &self.children[x] {
                push(c, &mut marks, &mut stack);
            }
        }
        marks
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::graphs;

    #[test]
    fn k4_levels() {
        let g = graphs::complete(4);
        let ball = tree_ball(&g, 0, 2, DEFAULT_BALL_CAP).unwrap();
        assert_eq!(ball.level_sizes(), vec![1, 3, 6]);
        assert_eq!(ball.len(), 10);
    }

    #[test]
    fn radius_zero() {
        let g = graphs::petersen();
        let ball = tree_ball(&g, 3, 0, DEFAULT_BALL_CAP).unwrap();
        assert_eq!(ball.len(), 1);
        assert!(ball.vertex(0).parent.is_none());
    }

    #[test]
    fn theta_hub_ball() {
        // hub vertices have degree 3
        let g = graphs::theta_122();
        let ball = tree_ball(&g, 0, 1, DEFAULT_BALL_CAP).unwrap();
        assert_eq!(ball.len(), 4);
    }

    #[test]
    fn cap_enforced() {
        let g = graphs::complete(4);
        assert!(matches!(
            tree_ball(&g, 0, 10, 100),
            Err(GraphError::BallTooLarge { cap: 100 })
        ));
    }

    #[test]
    fn children_enumerate_follow_sets() {
        let g = graphs::theta_122();
        let ball = tree_ball(&g, 2, 4, DEFAULT_BALL_CAP).unwrap();
        for x in 0..ball.len() {
            let v = ball.vertex(x);
            if !ball.is_interior(x) {
                continue;
            }
            match v.entering {
                None => assert_eq!(ball.children(x).len(), g.degree(v.base)),
                Some(e) => assert_eq!(ball.children(x).len(), g.degree(g.head(e)) - 1),
            }
        }
    }

    #[test]
    fn path_types_compose() {
        let g = graphs::petersen();
        let ball = tree_ball(&g, 0, 4, DEFAULT_BALL_CAP).unwrap();
        // path from a leaf-ish vertex to another must follow consecutively
        // and project to the right endpoints
        for &(from, to) in &[(3usize, 9usize), (9, 3), (0, 7), (5, 5)] {
            let path = ball.path_types(&g, from, to);
            if from == to {
                assert!(path.is_empty());
                continue;
            }
            assert_eq!(g.tail(path[0]), ball.vertex(from).base);
            assert_eq!(g.head(*path.last().unwrap()), ball.vertex(to).base);
            for w in path.windows(2) {
                assert_eq!(g.head(w[0]), g.tail(w[1]));
                assert_ne!(w[1], g.inverse(w[0]));
            }
        }
    }

    #[test]
    fn subtree_partition() {
        let g = graphs::complete(4);
        let ball = tree_ball(&g, 0, 3, DEFAULT_BALL_CAP).unwrap();
        let kids = ball.children(0).to_vec();
        let marks: Vec<Vec<bool>> = kids.iter().map(|&w| ball.subtree_marks(0, w)).collect();
        for x in 1..ball.len() {
            let count = marks.iter().filter(|m| m[x]).count();
            assert_eq!(count, 1, "vertex {x} in exactly one root subtree");
        }
        assert!(marks.iter().all(|m| !m[0]));
    }
}
