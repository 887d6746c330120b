//! Edge-ratio systems and their decay rate.
//!
//! A ratio assignment gives every directed edge of the base graph a value
//! in C union {0, infinity}, encoding Green-function decay ratios on the
//! universal cover. Validity means: (a) the local recursion
//! 0 = m_vv + m_{e^-1}/r_e + sum_{e -> e'} m_{e'} r_{e'} holds on every
//! non-zero edge (with c/inf = 0), (b) every zero edge has an infinite
//! follower, and (c) infinite edges are preceded only by zero edges and
//! have non-zero reversals.
//!
//! Products along paths resolve a zero edge followed by an infinite edge
//! to the factor -m_{e0}/m_{e1} (coefficient of the zero edge over the
//! coefficient of the infinite edge). The worked weighted-matching
//! example pins this orientation: the two-step ratio across matchings
//! k -> 1 is -p_k/p_1, and the decay rate is (p2/p1)^2 + (p3/p1)^2.
//! The corresponding infinite-column entries of the decay matrix are
//! |m_{e'}/m_f|^2 summed over two-step paths e -> e' -> f.

use crate::error::RatioError;
use crate::graph::{EdgeId, Graph, VertexId};
use crate::numerics;
use crate::operator::LocalOperator;
use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Classification of one directed edge's ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RatioClass {
    Finite(Complex64),
    Zero,
    Infinite,
}

impl RatioClass {
    pub fn is_zero(&self) -> bool {
        matches!(self, RatioClass::Zero)
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, RatioClass::Infinite)
    }
}

/// Default threshold for numeric classification: |r| <= eta is zero,
/// |r| >= 1/eta is infinite. Exact-class constructors bypass it.
pub const CLASS_ETA: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct RatioAssignment {
    classes: Vec<RatioClass>,
}

impl RatioAssignment {
    /// Exact classes, as produced by the solver's chart bookkeeping.
    pub fn from_classes(classes: Vec<RatioClass>) -> Self {
        RatioAssignment { classes }
    }

    /// All-finite assignment (no thresholding).
    pub fn finite(values: Vec<Complex64>) -> Self {
        RatioAssignment { classes: values.into_iter().map(RatioClass::Finite).collect() }
    }

    /// Numeric classification at threshold `eta`.
    pub fn classify(values: Vec<Complex64>, eta: f64) -> Self {
        let classes = values
            .into_iter()
            .map(|v| {
                let n = v.norm();
                if n <= eta {
                    RatioClass::Zero
                } else if n >= 1.0 / eta {
                    RatioClass::Infinite
                } else {
                    RatioClass::Finite(v)
                }
            })
            .collect();
        RatioAssignment { classes }
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn class(&self, e: EdgeId) -> RatioClass {
        self.classes[e]
    }

    pub fn classes(&self) -> &[RatioClass] {
        &self.classes
    }

    pub fn conjugated(&self) -> Self {
        let classes = self
            .classes
            .iter()
            .map(|c| match c {
                RatioClass::Finite(v) => RatioClass::Finite(v.conj()),
                other => *other,
            })
            .collect();
        RatioAssignment { classes }
    }

    pub fn negated(&self) -> Self {
        let classes = self
            .classes
            .iter()
            .map(|c| match c {
                RatioClass::Finite(v) => RatioClass::Finite(-v),
                other => *other,
            })
            .collect();
        RatioAssignment { classes }
    }

    /// The unique infinite out-edge of `u`, if any; errors when several
    /// leave the same vertex (which no valid system allows).
    pub fn infinite_out_edge(&self, g: &Graph, u: VertexId) -> Result<Option<EdgeId>, RatioError> {
        let mut found = None;
        for &e in g.out_edges(u) {
            if self.classes[e].is_infinite() {
                if found.is_some() {
                    return Err(RatioError::MultipleInfinite(u));
                }
                found = Some(e);
            }
        }
        Ok(found)
    }

    /// Vertices with an infinite outgoing ratio.
    pub fn v_infinity(&self, g: &Graph) -> Vec<bool> {
        let mut mask = vec![false; g.n_vertices()];
        for (e, c) in self.classes.iter().enumerate() {
            if c.is_infinite() {
                mask[g.tail(e)] = true;
            }
        }
        mask
    }

    /// Z(u) = sum of m_e r_e over non-infinite edges leaving u.
    pub fn z_sum(&self, m: &LocalOperator, u: VertexId) -> Complex64 {
        let g = m.graph();
        let mut z = Complex64::ZERO;
        for &e in g.out_edges(u) {
            if let RatioClass::Finite(r) = self.classes[e] {
                z += m.off(e) * r;
            }
        }
        z
    }

    /// Green-column anchor at u: m_{uu*} when u has an infinite out-edge,
    /// otherwise m_uu + Z(u).
    pub fn anchor(&self, m: &LocalOperator, u: VertexId) -> Result<Complex64, RatioError> {
        match self.infinite_out_edge(m.graph(), u)? {
            Some(e) => Ok(m.off(e)),
            None => Ok(m.diag(u) + self.z_sum(m, u)),
        }
    }

    /// Vertices where the finite-case anchor m_uu + Z(u) vanishes at tol.
    pub fn v_zero(&self, m: &LocalOperator, tol: f64) -> Vec<bool> {
        (0..m.graph().n_vertices())
            .map(|u| (m.diag(u) + self.z_sum(m, u)).norm() <= tol)
            .collect()
    }
}

/// One entry of the JSON wire format.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatioEntry {
    pub edge: usize,
    pub class: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub re: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub im: Option<f64>,
}

impl Serialize for RatioAssignment {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let entries: Vec<RatioEntry> = self
            .classes
            .iter()
            .enumerate()
            .map(|(edge, c)| match c {
                RatioClass::Finite(v) => RatioEntry {
                    edge,
                    class: "finite".into(),
                    re: Some(v.re),
                    im: Some(v.im),
                },
                RatioClass::Zero => RatioEntry { edge, class: "zero".into(), re: None, im: None },
                RatioClass::Infinite => {
                    RatioEntry { edge, class: "inf".into(), re: None, im: None }
                }
            })
            .collect();
        entries.serialize(s)
    }
}

impl<'de> Deserialize<'de> for RatioAssignment {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let entries = Vec::<RatioEntry>::deserialize(d)?;
        let mut classes = vec![RatioClass::Zero; entries.len()];
        for entry in &entries {
            if entry.edge >= classes.len() {
                return Err(serde::de::Error::custom(format!(
                    "edge id {} out of range",
                    entry.edge
                )));
            }
            classes[entry.edge] = match entry.class.as_str() {
                "finite" => RatioClass::Finite(Complex64::new(
                    entry.re.unwrap_or(0.0),
                    entry.im.unwrap_or(0.0),
                )),
                "zero" => RatioClass::Zero,
                "inf" => RatioClass::Infinite,
                other => {
                    return Err(serde::de::Error::custom(format!("unknown class `{other}`")))
                }
            };
        }
        Ok(RatioAssignment { classes })
    }
}

/// Condition (a) residual at a non-zero edge e = (u, v):
/// m_vv + m_{e^-1}/r_e + sum_{e -> e'} m_{e'} r_{e'}, with 1/inf = 0.
pub fn condition_residual(
    r: &RatioAssignment,
    m: &LocalOperator,
    e: EdgeId,
) -> Result<Complex64, RatioError> {
    let g = m.graph();
    let head = g.head(e);
    let mut acc = m.diag(head);
    match r.class(e) {
        RatioClass::Zero => return Err(RatioError::ZeroClassEdge(e)),
        RatioClass::Finite(v) => acc += m.off(g.inverse(e)) / v,
        RatioClass::Infinite => {} // c/inf = 0
    }
    for f in g.follow(e) {
        match r.class(f) {
            RatioClass::Finite(v) => acc += m.off(f) * v,
            RatioClass::Zero => {}
            RatioClass::Infinite => return Err(RatioError::InfiniteSuccessor { e, f }),
        }
    }
    Ok(acc)
}

/// Which definitional clause a violation belongs to.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// (a): residual above tolerance at a non-zero edge.
    ResidualTooLarge { e: EdgeId, magnitude: f64 },
    /// (b): zero edge without an infinite follower.
    ZeroWithoutInfiniteFollower { e: EdgeId },
    /// (c): a non-zero edge precedes an infinite edge.
    InfiniteAfterNonZero { e: EdgeId, f: EdgeId },
    /// (c): the reversal of an infinite edge is zero.
    InfiniteReversalZero { f: EdgeId },
    /// (c) consequence: several infinite edges leave one vertex.
    MultipleInfiniteAtVertex { u: VertexId },
}

#[derive(Debug, Clone)]
pub struct ValidityReport {
    /// Condition (a) residual per edge; None for zero-class edges and for
    /// edges whose residual is structurally undefined.
    pub residuals: Vec<Option<Complex64>>,
    pub max_residual: f64,
    pub cond_a_ok: bool,
    pub cond_b_ok: bool,
    pub cond_c_ok: bool,
    pub violations: Vec<Violation>,
    pub tol: f64,
    pub valid: bool,
}

pub fn validate(r: &RatioAssignment, m: &LocalOperator, tol: f64) -> ValidityReport {
    let g = m.graph();
    let n_edges = g.n_directed();
    let mut violations = Vec::new();

    // (c) and its consequences, checked structurally first.
    for u in 0..g.n_vertices() {
        if r.infinite_out_edge(g, u).is_err() {
            violations.push(Violation::MultipleInfiniteAtVertex { u });
        }
    }
    for f in 0..n_edges {
        if r.class(f).is_infinite() {
            if r.class(g.inverse(f)).is_zero() {
                violations.push(Violation::InfiniteReversalZero { f });
            }
            for e in 0..n_edges {
                if g.head(e) == g.tail(f) && e != g.inverse(f) && !r.class(e).is_zero() {
                    violations.push(Violation::InfiniteAfterNonZero { e, f });
                }
            }
        }
    }
    let cond_c_ok = violations.is_empty();

    // (b)
    for e in 0..n_edges {
        if r.class(e).is_zero() && !g.follow(e).any(|f| r.class(f).is_infinite()) {
            violations.push(Violation::ZeroWithoutInfiniteFollower { e });
        }
    }
    let cond_b_ok = !violations
        .iter()
        .any(|v| matches!(v, Violation::ZeroWithoutInfiniteFollower { .. }));

    // (a)
    let mut residuals = vec![None; n_edges];
    let mut max_residual = 0.0_f64;
    let mut cond_a_ok = true;
    for e in 0..n_edges {
        if r.class(e).is_zero() {
            continue;
        }
        match condition_residual(r, m, e) {
            Ok(res) => {
                let mag = res.norm();
                residuals[e] = Some(res);
                max_residual = max_residual.max(mag);
                if mag > tol {
                    cond_a_ok = false;
                    violations.push(Violation::ResidualTooLarge { e, magnitude: mag });
                }
            }
            Err(_) => {
                // structurally undefined; already reported under (c)
            }
        }
    }

    let valid = cond_a_ok && cond_b_ok && cond_c_ok;
    ValidityReport {
        residuals,
        max_residual,
        cond_a_ok,
        cond_b_ok,
        cond_c_ok,
        violations,
        tol,
        valid,
    }
}

/// Nonnegative decay matrix over the non-zero edges, plus its Perron
/// eigenvalue (the decay rate).
#[derive(Debug, Clone)]
pub struct DecayMatrix {
    /// Directed edges indexing the rows/columns (classes Finite or
    /// Infinite).
    pub index: Vec<EdgeId>,
    pub matrix: Mat<f64>,
    pub decay_rate: f64,
}

fn structural_check(r: &RatioAssignment, g: &Graph) -> Result<(), RatioError> {
    for u in 0..g.n_vertices() {
        r.infinite_out_edge(g, u)?;
    }
    for f in 0..g.n_directed() {
        if r.class(f).is_infinite() && r.class(g.inverse(f)).is_zero() {
            return Err(RatioError::InfiniteSuccessor { e: g.inverse(f), f });
        }
        if r.class(f).is_zero() && !g.follow(f).any(|x| r.class(x).is_infinite()) {
            return Err(RatioError::ZeroWithoutInfinite(f));
        }
    }
    for e in 0..g.n_directed() {
        if !r.class(e).is_zero() {
            for f in g.follow(e) {
                if r.class(f).is_infinite() {
                    return Err(RatioError::InfiniteSuccessor { e, f });
                }
            }
        }
    }
    Ok(())
}

pub fn decay_matrix(r: &RatioAssignment, m: &LocalOperator) -> Result<DecayMatrix, RatioError> {
    let g = m.graph();
    if r.len() != g.n_directed() {
        return Err(RatioError::BadLength { got: r.len(), want: g.n_directed() });
    }
    structural_check(r, g)?;
    let index: Vec<EdgeId> = (0..g.n_directed()).filter(|&e| !r.class(e).is_zero()).collect();
    let pos: Vec<Option<usize>> = {
        let mut p = vec![None; g.n_directed()];
        for (i, &e) in index.iter().enumerate() {
            p[e] = Some(i);
        }
        p
    };
    let k = index.len();
    let mut mat = Mat::<f64>::zeros(k, k);
    for (row, &e) in index.iter().enumerate() {
        for e1 in g.follow(e) {
            match r.class(e1) {
                RatioClass::Finite(v) => {
                    let col = pos[e1].expect("finite edge is indexed");
                    mat[(row, col)] += v.norm_sqr();
                }
                RatioClass::Zero => {
                    // contributes through the two-step rule below
                    for f in g.follow(e1) {
                        if r.class(f).is_infinite() {
                            let col = pos[f].expect("infinite edge is indexed");
                            let ratio = m.off(e1) / m.off(f);
                            mat[(row, col)] += ratio.norm_sqr();
                        }
                    }
                }
                RatioClass::Infinite => {
                    // forbidden by the structural pre-check
                    unreachable!("infinite successor of a non-zero edge");
                }
            }
        }
    }
    let decay_rate = numerics::spectral_radius_nonneg(&mat)?;
    Ok(DecayMatrix { index, matrix: mat, decay_rate })
}

/// Perron eigenvalue of the decay matrix.
pub fn decay_rate(r: &RatioAssignment, m: &LocalOperator) -> Result<f64, RatioError> {
    Ok(decay_matrix(r, m)?.decay_rate)
}

/// Value of a ratio product along a path: finite or infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathValue {
    Finite(Complex64),
    Infinite,
}

impl PathValue {
    pub fn finite(self) -> Option<Complex64> {
        match self {
            PathValue::Finite(v) => Some(v),
            PathValue::Infinite => None,
        }
    }
}

/// Running product of ratios along consecutive edges, resolving each
/// zero edge followed by an infinite edge to -m_{e0}/m_{e1}.
#[derive(Debug, Clone, Copy)]
pub struct PathProduct {
    acc: Complex64,
    pending_zero: Option<EdgeId>,
    infinite: bool,
    consumed: bool,
    last: Option<EdgeId>,
}

impl PathProduct {
    pub fn new() -> Self {
        PathProduct {
            acc: Complex64::new(1.0, 0.0),
            pending_zero: None,
            infinite: false,
            consumed: false,
            last: None,
        }
    }

    pub fn consume(
        &mut self,
        r: &RatioAssignment,
        m: &LocalOperator,
        e: EdgeId,
    ) -> Result<(), RatioError> {
        if let Some(prev) = self.last {
            let g = m.graph();
            if g.head(prev) != g.tail(e) || e == g.inverse(prev) {
                return Err(RatioError::MalformedPath { prev, next: e });
            }
        }
        if self.infinite {
            self.last = Some(e);
            self.consumed = true;
            return Ok(());
        }
        match (self.pending_zero, r.class(e)) {
            (Some(e0), RatioClass::Infinite) => {
                self.acc *= -(m.off(e0) / m.off(e));
                self.pending_zero = None;
            }
            (Some(_), RatioClass::Finite(v)) => {
                self.acc = Complex64::ZERO * v;
                self.pending_zero = None;
            }
            (Some(_), RatioClass::Zero) => {
                self.acc = Complex64::ZERO;
                self.pending_zero = Some(e);
            }
            (None, RatioClass::Finite(v)) => self.acc *= v,
            (None, RatioClass::Zero) => self.pending_zero = Some(e),
            (None, RatioClass::Infinite) => {
                if self.consumed {
                    return Err(RatioError::UndefinedProduct {
                        e: self.last.expect("consumed implies last"),
                        f: e,
                    });
                }
                self.infinite = true;
            }
        }
        self.last = Some(e);
        self.consumed = true;
        Ok(())
    }

    pub fn value(&self) -> PathValue {
        if self.infinite {
            PathValue::Infinite
        } else if self.pending_zero.is_some() {
            PathValue::Finite(Complex64::ZERO)
        } else {
            PathValue::Finite(self.acc)
        }
    }

    /// True once the product can no longer leave zero.
    pub fn is_dead(&self) -> bool {
        !self.infinite && self.pending_zero.is_none() && self.acc == Complex64::ZERO
    }

    /// Number of decay-matrix steps this product advanced: edges consumed
    /// minus resolved infinite edges (an unresolved trailing zero still
    /// counts as a step).
    pub fn pending(&self) -> Option<EdgeId> {
        self.pending_zero
    }
}

impl Default for PathProduct {
    fn default() -> Self {
        Self::new()
    }
}

/// Ratio product over an explicit path of consecutive directed edges.
/// The empty path gives 1.
pub fn path_ratio(
    r: &RatioAssignment,
    m: &LocalOperator,
    path: &[EdgeId],
) -> Result<PathValue, RatioError> {
    let mut p = PathProduct::new();
    for &e in path {
        p.consume(r, m, e)?;
    }
    Ok(p.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::graphs;
    use crate::operator::OperatorFamily;
    use std::sync::Arc;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    /// Matched K4 with the adjacency operator and the zero/infinite
    /// assignment: infinite on matching 1, zero on matchings 2 and 3.
    fn steger(p: [f64; 3]) -> (Arc<crate::graph::Graph>, LocalOperator, RatioAssignment) {
        let g = Arc::new(graphs::matched_k4(p));
        let w: Vec<f64> = g.undirected_edges().iter().map(|&(_, _, w)| w).collect();
        let m = OperatorFamily::weighted_adjacency(Arc::clone(&g), w)
            .unwrap()
            .evaluate(c(0.0))
            .unwrap();
        let mut classes = vec![RatioClass::Zero; 12];
        for e in 0..4 {
            classes[e] = RatioClass::Infinite; // undirected edges 0, 1 form matching 1
        }
        (g, m, RatioAssignment::from_classes(classes))
    }

    fn trivial_q_lambda(g: Arc<crate::graph::Graph>, lambda: Complex64) -> (LocalOperator, RatioAssignment) {
        let m = OperatorFamily::q_lambda(Arc::clone(&g)).evaluate(lambda).unwrap();
        let r = RatioAssignment::finite(vec![lambda.inv(); g.n_directed()]);
        (m, r)
    }

    #[test]
    fn trivial_system_zero_residuals() {
        let g = Arc::new(graphs::complete(4));
        let (m, r) = trivial_q_lambda(g, c(2.0));
        for e in 0..12 {
            assert!(condition_residual(&r, &m, e).unwrap().norm() < 1e-12);
        }
        let report = validate(&r, &m, 1e-12);
        assert!(report.valid);
        assert!(report.max_residual <= 1e-12);
    }

    #[test]
    fn constant_system_closed_form_on_regular() {
        // adjacency shift on a 3-regular graph, constant ratio c0:
        // residual = -lambda + 1/c0 + 2 c0; zero at c0 = 1, lambda = 3
        let g = Arc::new(graphs::complete(4));
        let m = OperatorFamily::adjacency_shift(Arc::clone(&g)).evaluate(c(3.0)).unwrap();
        let r = RatioAssignment::finite(vec![c(1.0); 12]);
        for e in 0..12 {
            assert!(condition_residual(&r, &m, e).unwrap().norm() < 1e-12);
        }
    }

    #[test]
    fn steger_residuals_and_validity() {
        let (_, m, r) = steger([1.0, 0.6, 0.6]);
        // condition (a) on infinite edges: 1/r drops, zero followers drop
        for e in 0..4 {
            assert_eq!(condition_residual(&r, &m, e).unwrap(), Complex64::ZERO);
        }
        let report = validate(&r, &m, 1e-12);
        assert!(report.valid, "violations: {:?}", report.violations);
        // V_inf covers every vertex, anchors are the matching-1 weights
        let g = m.graph();
        assert!(r.v_infinity(g).iter().all(|&b| b));
        for u in 0..4 {
            assert_eq!(r.anchor(&m, u).unwrap(), c(1.0));
        }
    }

    #[test]
    fn steger_decay_rates() {
        let (_, m, r) = steger([1.0, 0.6, 0.6]);
        let d = decay_matrix(&r, &m).unwrap();
        assert_eq!(d.index.len(), 4);
        assert!((d.decay_rate - 0.72).abs() < 1e-10);

        let (_, m, r) = steger([1.0, 0.8, 0.8]);
        assert!((decay_rate(&r, &m).unwrap() - 1.28).abs() < 1e-10);
        assert!(validate(&r, &m, 1e-12).valid);
    }

    #[test]
    fn biregular_assignment_fails_exactly_c() {
        // degree-3 -> degree-2 edges infinite, reversals zero
        let g = Arc::new(graphs::complete_bipartite(2, 3));
        let m = OperatorFamily::adjacency_shift(Arc::clone(&g)).evaluate(c(0.0)).unwrap();
        let classes: Vec<RatioClass> = (0..g.n_directed())
            .map(|e| {
                if g.degree(g.tail(e)) == 3 {
                    RatioClass::Infinite
                } else {
                    RatioClass::Zero
                }
            })
            .collect();
        let r = RatioAssignment::from_classes(classes);
        let report = validate(&r, &m, 1e-9);
        assert!(!report.valid);
        assert!(report.cond_a_ok);
        assert!(report.cond_b_ok);
        assert!(!report.cond_c_ok);
    }

    #[test]
    fn trivial_alpha_is_growth_over_modulus_squared() {
        use crate::finite_spectrum::growth_rate;
        for g in [graphs::complete(4), graphs::theta_122(), graphs::petersen()] {
            let g = Arc::new(g);
            let gr = growth_rate(&g).unwrap();
            for lam in [c(1.5), c(2.0), c(3.0)] {
                let (m, r) = trivial_q_lambda(Arc::clone(&g), lam);
                let alpha = decay_rate(&r, &m).unwrap();
                assert!((alpha - gr / lam.norm_sqr()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn degenerate_cycle_alpha() {
        let g = Arc::new(graphs::triangle());
        let m = OperatorFamily::adjacency_shift(Arc::clone(&g)).evaluate(c(1.0)).unwrap();
        let r = RatioAssignment::finite(vec![c(0.5); 6]);
        let d = decay_matrix(&r, &m).unwrap();
        for row in 0..6 {
            let entries: Vec<f64> = (0..6).map(|col| d.matrix[(row, col)]).collect();
            assert_eq!(entries.iter().filter(|&&x| x != 0.0).count(), 1);
            assert!((entries.iter().sum::<f64>() - 0.25).abs() < 1e-15);
        }
        assert!((d.decay_rate - 0.25).abs() < 1e-12);
    }

    #[test]
    fn path_ratios() {
        let (_, m, r) = steger([1.0, 0.6, 0.6]);
        let g = m.graph();
        // empty path
        assert_eq!(path_ratio(&r, &m, &[]).unwrap(), PathValue::Finite(c(1.0)));
        // a matching-2 edge followed by a matching-1 edge: -p2/p1
        let e2 = 4; // directed edge on undirected edge 2 = {0,2}, weight p2
        let f = g
            .follow(e2)
            .find(|&f| r.class(f).is_infinite())
            .expect("matching-1 follower");
        let v = path_ratio(&r, &m, &[e2, f]).unwrap().finite().unwrap();
        assert!((v - c(-0.6)).norm() < 1e-12);

        // trivial system: product of three finite ratios
        let g4 = Arc::new(graphs::complete(4));
        let (m4, r4) = trivial_q_lambda(Arc::clone(&g4), c(2.0));
        let e0 = 0;
        let e1 = g4.follow(e0).next().unwrap();
        let e2b = g4.follow(e1).next().unwrap();
        let v = path_ratio(&r4, &m4, &[e0, e1, e2b]).unwrap().finite().unwrap();
        assert!((v - c(0.125)).norm() < 1e-12);
    }

    #[test]
    fn path_ratio_edge_cases() {
        let (_, m, r) = steger([1.0, 0.6, 0.6]);
        let g = m.graph();
        // two zero edges in a row -> 0
        let e2 = 4;
        let z = g
            .follow(e2)
            .find(|&f| r.class(f).is_zero())
            .expect("zero follower");
        assert_eq!(path_ratio(&r, &m, &[e2, z]).unwrap(), PathValue::Finite(c(0.0)));
        // leading infinite edge -> infinite
        assert_eq!(path_ratio(&r, &m, &[0]).unwrap(), PathValue::Infinite);
        // non-consecutive edges are malformed
        let bad = (0..g.n_directed())
            .find(|&f| g.tail(f) != g.head(0) && f != g.inverse(0))
            .unwrap();
        assert!(matches!(
            path_ratio(&r, &m, &[0, bad]),
            Err(RatioError::MalformedPath { .. })
        ));
    }

    #[test]
    fn alpha_monotone_in_entry_growth() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let g = Arc::new(graphs::theta_122());
        let m = OperatorFamily::adjacency_shift(Arc::clone(&g)).evaluate(c(0.7)).unwrap();
        for _ in 0..20 {
            let vals: Vec<Complex64> = (0..10)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let r = RatioAssignment::finite(vals.clone());
            let a0 = decay_rate(&r, &m).unwrap();
            let k = rng.gen_range(0..10);
            let mut scaled = vals;
            scaled[k] *= 1.0 + rng.gen_range(0.1..2.0);
            let a1 = decay_rate(&RatioAssignment::finite(scaled), &m).unwrap();
            assert!(a1 >= a0 - 1e-12, "{a1} < {a0}");
        }
    }

    #[test]
    fn json_round_trip() {
        let (_, _, r) = steger([1.0, 0.6, 0.6]);
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"class\":\"inf\""));
        let back: RatioAssignment = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }
}
