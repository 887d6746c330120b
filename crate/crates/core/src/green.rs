//! Green-function columns built from a ratio assignment on a cover ball,
//! and the oracles that check them: interior residuals, level sums
//! against decay-matrix powers, and the boundary witness.

use crate::error::{GreenError, RatioError};
use crate::graph::EdgeId;
use crate::operator::LocalOperator;
use crate::ratio::{decay_matrix, path_ratio, PathProduct, PathValue, RatioAssignment};
use crate::tree::TreeBall;
use num_complex::Complex64;

/// Candidate Green column f_u on a ball: (M f_u)(x) = 0 away from u and
/// (M f_u)(u) equals the anchor. When the source type has an infinite
/// out-ratio, the column is supported on the subtree across that edge.
#[derive(Debug, Clone)]
pub struct GreenColumn {
    pub values: Vec<Complex64>,
    /// Claimed anchor: m_{uu*} for sources with an infinite out-edge,
    /// m_uu + Z(u) otherwise.
    pub anchor: Complex64,
    pub source: usize,
}

pub fn green_column(
    r: &RatioAssignment,
    m: &LocalOperator,
    ball: &TreeBall,
    u: usize,
    tol: f64,
) -> Result<GreenColumn, GreenError> {
    let g = m.graph();
    if !ball.is_interior(u) {
        return Err(GreenError::NotInterior(u));
    }
    let base = ball.vertex(u).base;
    let anchor = r.anchor(m, base)?;
    if anchor.norm() <= tol {
        return Err(GreenError::AnchorZero { modulus: anchor.norm() });
    }
    let mut values = vec![Complex64::ZERO; ball.len()];
    match r.infinite_out_edge(g, base)? {
        Some(e_inf) => {
            let (w, _) = ball
                .neighbors(g, u)
                .find(|&(_, et)| et == e_inf)
                .expect("interior vertex has the infinite-type neighbour");
            let marks = ball.subtree_marks(u, w);
            for x in 0..ball.len() {
                if marks[x] {
                    let path = ball.path_types(g, w, x);
                    values[x] = match path_ratio(r, m, &path)? {
                        PathValue::Finite(v) => v,
                        PathValue::Infinite => {
                            return Err(GreenError::Ratio(RatioError::UndefinedProduct {
                                e: path[0],
                                f: path[0],
                            }))
                        }
                    };
                }
            }
        }
        None => {
            if u == 0 {
                // fast path: accumulate products down the tree
                let mut states = vec![PathProduct::new(); ball.len()];
                values[0] = Complex64::new(1.0, 0.0);
                for x in 0..ball.len() {
                    for &c in ball.children(x) {
                        let mut s = states[x];
                        s.consume(r, m, ball.vertex(c).entering.unwrap())?;
                        values[c] = match s.value() {
                            PathValue::Finite(v) => v,
                            PathValue::Infinite => {
                                return Err(GreenError::Ratio(RatioError::UndefinedProduct {
                                    e: 0,
                                    f: 0,
                                }))
                            }
                        };
                        states[c] = s;
                    }
                }
            } else {
                for x in 0..ball.len() {
                    let path = ball.path_types(g, u, x);
                    values[x] = match path_ratio(r, m, &path)? {
                        PathValue::Finite(v) => v,
                        PathValue::Infinite => {
                            return Err(GreenError::Ratio(RatioError::UndefinedProduct {
                                e: path[0],
                                f: path[0],
                            }))
                        }
                    };
                }
            }
        }
    }
    Ok(GreenColumn { values, anchor, source: u })
}

#[derive(Debug, Clone)]
pub struct GreenReport {
    /// max |(M f_u)(x)| over interior x != u.
    pub max_interior_residual: f64,
    pub anchor_claim: Complex64,
    pub anchor_actual: Complex64,
    pub ok: bool,
}

/// Checks that the column annihilates M on the interior and that the
/// computed (M f_u)(u) matches the claimed anchor.
pub fn verify_green_column(
    r: &RatioAssignment,
    m: &LocalOperator,
    ball: &TreeBall,
    u: usize,
    tol: f64,
) -> Result<GreenReport, GreenError> {
    let col = green_column(r, m, ball, u, tol)?;
    let mf = ball.apply_operator(m, &col.values);
    let mut worst = 0.0_f64;
    for x in 0..ball.len() {
        if x != u && ball.is_interior(x) {
            worst = worst.max(mf[x].norm());
        }
    }
    let anchor_actual = mf[u];
    let ok = worst <= tol && (anchor_actual - col.anchor).norm() <= tol.max(1e-12);
    Ok(GreenReport { max_interior_residual: worst, anchor_claim: col.anchor, anchor_actual, ok })
}

#[derive(Debug, Clone)]
pub struct LevelSums {
    /// S_n from enumerating cover paths and their ratio products
    /// (an infinite edge advances the product without advancing the level).
    pub tree: Vec<f64>,
    /// Row sums of the n-th decay-matrix power at the row of `e`.
    pub matrix: Vec<f64>,
}

/// Level sums of squared path ratios out of edge `e`, computed two ways
/// that must agree.
pub fn level_sums(
    r: &RatioAssignment,
    m: &LocalOperator,
    e: EdgeId,
    n_max: usize,
) -> Result<LevelSums, RatioError> {
    let g = m.graph();
    if r.class(e).is_zero() {
        return Err(RatioError::ZeroClassEdge(e));
    }
    let d = decay_matrix(r, m)?;
    let row = d.index.iter().position(|&x| x == e).expect("non-zero edge is indexed");
    let k = d.index.len();
    let mut matrix = Vec::with_capacity(n_max + 1);
    let mut v = vec![1.0_f64; k];
    matrix.push(1.0);
    for _ in 1..=n_max {
        let mut next = vec![0.0; k];
        for i in 0..k {
            let mut acc = 0.0;
            for j in 0..k {
                acc += d.matrix[(i, j)] * v[j];
            }
            next[i] = acc;
        }
        matrix.push(next[row]);
        v = next;
    }

    let mut tree = vec![0.0_f64; n_max + 1];
    tree[0] = 1.0;
    // depth-first over non-backtracking continuations of e
    let mut stack: Vec<(EdgeId, PathProduct, usize)> = Vec::new();
    for f in g.follow(e) {
        let mut p = PathProduct::new();
        p.consume(r, m, f)?;
        stack.push((f, p, 1));
    }
    while let Some((last, p, level)) = stack.pop() {
        if let PathValue::Finite(v) = p.value() {
            tree[level] += v.norm_sqr();
        }
        if p.is_dead() {
            continue;
        }
        for f in g.follow(last) {
            let advances = !(p.pending().is_some() && r.class(f).is_infinite());
            let next_level = level + usize::from(advances);
            if next_level > n_max {
                continue;
            }
            let mut q = p;
            q.consume(r, m, f)?;
            stack.push((f, q, next_level));
        }
    }
    Ok(LevelSums { tree, matrix })
}

/// Rayleigh-type witness ||M F_n|| / ||F_n|| for a system with decay rate
/// near 1: F_n stacks the first n ratio-product layers of a subtree, so
/// the ratio must sink as n grows when the operator is not invertible.
pub fn boundary_witness(
    r: &RatioAssignment,
    m: &LocalOperator,
    ball: &TreeBall,
    n: usize,
) -> Result<f64, GreenError> {
    const WINDOW: f64 = 0.05;
    let g = m.graph();
    let d = decay_matrix(r, m)?;
    if (d.decay_rate - 1.0).abs() > WINDOW {
        return Err(GreenError::NotNearBoundary { alpha: d.decay_rate, window: WINDOW });
    }
    if ball.radius() < n + 1 {
        return Err(GreenError::BallTooSmall { radius: ball.radius(), level: n });
    }
    // pick the root out-edge with the largest Perron weight in the decay
    // matrix so the stacked layers do not die out
    let weights = perron_weights(&d.matrix);
    let root_base = ball.vertex(0).base;
    let mut best: Option<(f64, EdgeId)> = None;
    for &e in g.out_edges(root_base) {
        if let Some(i) = d.index.iter().position(|&x| x == e) {
            if best.map_or(true, |(w, _)| weights[i] > w) {
                best = Some((weights[i], e));
            }
        }
    }
    let (_, e_star) = best.ok_or(GreenError::Ratio(RatioError::ZeroClassEdge(
        g.out_edges(root_base)[0],
    )))?;
    let (w, _) = ball
        .neighbors(g, 0)
        .find(|&(_, et)| et == e_star)
        .expect("root has the chosen child");

    // ratio products over the subtree through e_star, truncated at depth n
    let mut values = vec![Complex64::ZERO; ball.len()];
    values[0] = Complex64::new(1.0, 0.0);
    let mut states: Vec<Option<PathProduct>> = vec![None; ball.len()];
    let mut p0 = PathProduct::new();
    p0.consume(r, m, e_star)?;
    if ball.vertex(w).depth <= n {
        if let PathValue::Finite(v) = p0.value() {
            values[w] = v;
        }
        states[w] = Some(p0);
    }
    let mut stack = vec![w];
    while let Some(x) = stack.pop() {
        let Some(p) = states[x] else { continue };
        for &c in ball.children(x) {
            if ball.vertex(c).depth > n {
                continue;
            }
            let mut q = p;
            q.consume(r, m, ball.vertex(c).entering.unwrap())?;
            if let PathValue::Finite(v) = q.value() {
                values[c] = v;
            }
            states[c] = Some(q);
            stack.push(c);
        }
    }

    let mf = ball.apply_operator(m, &values);
    let norm_f: f64 = values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let norm_mf: f64 = mf.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    Ok(norm_mf / norm_f)
}

/// Approximate right Perron vector, used only to pick a well-supported
/// starting edge.
fn perron_weights(mat: &faer::Mat<f64>) -> Vec<f64> {
    let k = mat.nrows();
    let mut v = vec![1.0_f64; k];
    for _ in 0..200 {
        let mut next = vec![0.0; k];
        for i in 0..k {
            let mut acc = v[i];
            for j in 0..k {
                acc += mat[(i, j)] * v[j];
            }
            next[i] = acc;
        }
        let norm = next.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return v;
        }
        for x in next.iter_mut() {
            *x /= norm;
        }
        v = next;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::graphs;
    use crate::operator::OperatorFamily;
    use crate::ratio::RatioClass;
    use crate::tree::{tree_ball, DEFAULT_BALL_CAP};
    use std::sync::Arc;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn k4_trivial(lambda: f64) -> (Arc<crate::graph::Graph>, LocalOperator, RatioAssignment) {
        let g = Arc::new(graphs::complete(4));
        let m = OperatorFamily::q_lambda(Arc::clone(&g)).evaluate(c(lambda)).unwrap();
        let r = RatioAssignment::finite(vec![c(1.0 / lambda); 12]);
        (g, m, r)
    }

    fn steger() -> (Arc<crate::graph::Graph>, LocalOperator, RatioAssignment) {
        let g = Arc::new(graphs::matched_k4([1.0, 0.6, 0.6]));
        let w: Vec<f64> = g.undirected_edges().iter().map(|&(_, _, w)| w).collect();
        let m = OperatorFamily::weighted_adjacency(Arc::clone(&g), w)
            .unwrap()
            .evaluate(c(0.0))
            .unwrap();
        let mut classes = vec![RatioClass::Zero; 12];
        for e in 0..4 {
            classes[e] = RatioClass::Infinite;
        }
        (g, m, RatioAssignment::from_classes(classes))
    }

    #[test]
    fn k4_green_column_is_geometric() {
        let (g, m, r) = k4_trivial(2.0);
        let ball = tree_ball(&g, 0, 6, DEFAULT_BALL_CAP).unwrap();
        let col = green_column(&r, &m, &ball, 0, 1e-9).unwrap();
        for x in 0..ball.len() {
            let expect = 0.5_f64.powi(ball.vertex(x).depth as i32);
            assert!((col.values[x] - c(expect)).norm() < 1e-12);
        }
        // anchor: m_uu + Z(u) = 6 + 3*(-2)*(1/2) = 3 (= lambda^2 - 1)
        assert!((col.anchor - c(3.0)).norm() < 1e-12);
        let report = verify_green_column(&r, &m, &ball, 0, 1e-10).unwrap();
        assert!(report.ok, "{report:?}");
        assert!((report.anchor_actual - c(3.0)).norm() < 1e-12);
    }

    #[test]
    fn k4_green_level_sums_closed_form() {
        let (g, m, r) = k4_trivial(2.0);
        let ball = tree_ball(&g, 0, 8, DEFAULT_BALL_CAP).unwrap();
        let col = green_column(&r, &m, &ball, 0, 1e-9).unwrap();
        for n in 1..=8usize {
            let s: f64 = ball.level(n).map(|x| col.values[x].norm_sqr()).sum();
            let expect = 3.0 * 2f64.powi(n as i32 - 1) * 0.25f64.powi(n as i32);
            assert!((s - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn level_sums_agree_trivial() {
        let (_, m, r) = k4_trivial(2.0);
        let sums = level_sums(&r, &m, 0, 10).unwrap();
        for n in 0..=10 {
            assert!(
                (sums.tree[n] - sums.matrix[n]).abs() < 1e-10,
                "n={n}: {} vs {}",
                sums.tree[n],
                sums.matrix[n]
            );
            assert!((sums.matrix[n] - 0.5f64.powi(n as i32)).abs() < 1e-12);
        }
    }

    #[test]
    fn steger_green_column_and_level_sums() {
        let (g, m, r) = steger();
        let ball = tree_ball(&g, 0, 8, DEFAULT_BALL_CAP).unwrap();
        let col = green_column(&r, &m, &ball, 0, 1e-9).unwrap();
        assert_eq!(col.values[0], Complex64::ZERO);
        assert!((col.anchor - c(1.0)).norm() < 1e-15);
        // the infinite-type child carries value 1
        let star = ball
            .children(0)
            .iter()
            .copied()
            .find(|&x| r.class(ball.vertex(x).entering.unwrap()).is_infinite())
            .unwrap();
        assert_eq!(col.values[star], c(1.0));
        let report = verify_green_column(&r, &m, &ball, 0, 1e-10).unwrap();
        assert!(report.ok, "{report:?}");

        let sums = level_sums(&r, &m, 0, 8).unwrap();
        for n in 0..=8 {
            assert!((sums.tree[n] - sums.matrix[n]).abs() < 1e-10);
            assert!((sums.matrix[n] - 0.72f64.powi(n as i32)).abs() < 1e-12);
        }
    }

    #[test]
    fn witness_decreases_at_boundary() {
        let lambda = 2.0_f64.sqrt();
        let (g, m, r) = k4_trivial(lambda);
        let ball = tree_ball(&g, 0, 9, DEFAULT_BALL_CAP).unwrap();
        let w4 = boundary_witness(&r, &m, &ball, 4).unwrap();
        let w8 = boundary_witness(&r, &m, &ball, 8).unwrap();
        assert!(w8 < w4, "{w8} !< {w4}");
    }

    #[test]
    fn witness_guard_rejects_interior_alpha() {
        let (g, m, r) = k4_trivial(2.0); // alpha = 0.5
        let ball = tree_ball(&g, 0, 5, DEFAULT_BALL_CAP).unwrap();
        assert!(matches!(
            boundary_witness(&r, &m, &ball, 4),
            Err(GreenError::NotNearBoundary { .. })
        ));
    }

    #[test]
    fn anchor_zero_detected() {
        // all-zero ratios make m_uu + Z(u) = m_uu = 0 for the adjacency
        // operator at lambda = 0; no infinite edges to rescue the anchor
        let g = Arc::new(graphs::complete(4));
        let m = OperatorFamily::adjacency_shift(Arc::clone(&g)).evaluate(c(0.0)).unwrap();
        let r = RatioAssignment::finite(vec![Complex64::ZERO; 12]);
        let ball = tree_ball(&g, 0, 3, DEFAULT_BALL_CAP).unwrap();
        assert!(matches!(
            green_column(&r, &m, &ball, 0, 1e-9),
            Err(GreenError::AnchorZero { .. })
        ));
    }
}
