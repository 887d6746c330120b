//! Numerical search for ratio systems and the membership verdict.
//!
//! Three solvers feed one decision procedure. The damped fixed point
//! iterates r_e <- -m_{e^-1} / (m_vv + sum_{e -> e'} m_{e'} r_{e'});
//! continuation warm-starts that iteration from a large imaginary shift
//! where it contracts; Newton runs on the cleared quadratic system
//! F_e = m_{e^-1} + r_e (m_vv + sum m_{e'} r_{e'}) from random starts,
//! re-parameterizing any variable that blows past the chart bound in the
//! reciprocal chart s = 1/r, which is how zero/infinite classes are
//! captured exactly.
//!
//! A search can certify OUT (validated system with decay rate <= 1 - eps)
//! or BOUNDARY (decay rate pinned at 1, which certifies non-invertibility),
//! but absence of a found system is evidence, not proof: IN verdicts
//! without a boundary certificate are flagged heuristic.

use crate::error::SolverError;
use crate::finite_spectrum::growth_rate;
use crate::graph::EdgeId;
use crate::operator::{FamilyKind, LocalOperator, OperatorFamily};
use crate::ratio::{decay_rate, validate, RatioAssignment, RatioClass, CLASS_ETA};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Knobs for the whole solve pipeline, all seeded and deterministic.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveBudget {
    pub damping: f64,
    pub fp_max_iter: usize,
    pub fp_tol: f64,
    /// None: use 4 + 2 sqrt(gr) of the family's graph.
    pub continuation_t0: Option<f64>,
    pub continuation_steps: usize,
    pub newton_starts: usize,
    pub newton_max_iter: usize,
    pub newton_tol: f64,
    pub start_radius: f64,
    /// Residual tolerance when validating candidate systems.
    pub residual_tol: f64,
    /// Width of the BOUNDARY band around decay rate 1.
    pub eps_alpha: f64,
    pub seed: u64,
}

impl Default for SolveBudget {
    fn default() -> Self {
        SolveBudget {
            damping: 0.5,
            fp_max_iter: 2000,
            fp_tol: 1e-10,
            continuation_t0: None,
            continuation_steps: 20,
            newton_starts: 32,
            newton_max_iter: 80,
            newton_tol: 1e-12,
            start_radius: 2.0,
            residual_tol: 1e-9,
            eps_alpha: 0.02,
            seed: 0,
        }
    }
}

impl SolveBudget {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn scaled(mut self, factor: usize) -> Self {
        self.fp_max_iter *= factor;
        self.newton_starts *= factor;
        self
    }
}

const EXPLODE: f64 = 1e8;
const POLE: f64 = 1e-14;
/// A Newton variable whose modulus crosses this re-parameterizes in the
/// reciprocal chart, so every variable stays in the chart where it is
/// bounded and roots at zero or infinity are regular.
const CHART_BOUND: f64 = 2.5;

/// Damped Jacobi-style fixed point on the finite-ratio recursion.
pub fn fixed_point_solve(
    m: &LocalOperator,
    init: Option<&RatioAssignment>,
    damping: f64,
    max_iter: usize,
    tol: f64,
) -> Result<RatioAssignment, SolverError> {
    let g = m.graph();
    let n = g.n_directed();
    let mut r: Vec<Complex64> = match init {
        None => vec![Complex64::ZERO; n],
        Some(init) => {
            let mut v = Vec::with_capacity(n);
            for e in 0..n {
                match init.class(e) {
                    RatioClass::Finite(x) => v.push(x),
                    RatioClass::Zero => v.push(Complex64::ZERO),
                    RatioClass::Infinite => return Err(SolverError::InvalidInit(e)),
                }
            }
            v
        }
    };
    let mut last_step = f64::INFINITY;
    for it in 0..max_iter {
        let mut step = 0.0_f64;
        let mut next = vec![Complex64::ZERO; n];
        for e in 0..n {
            let mut denom = m.diag(g.head(e));
            for f in g.follow(e) {
                denom += m.off(f) * r[f];
            }
            if denom.norm() < POLE {
                return Err(SolverError::PoleHit { edge: e });
            }
            let update = -m.off(g.inverse(e)) / denom;
            next[e] = (1.0 - damping) * r[e] + damping * update;
            step = step.max((next[e] - r[e]).norm());
        }
        r = next;
        last_step = step;
        if r.iter().any(|v| v.norm() > EXPLODE) {
            return Err(SolverError::Divergence { iterations: it + 1, last_step });
        }
        if step <= tol {
            // converged in step size; accept only once the recursion
            // residual is tight too, otherwise keep contracting
            let assignment = RatioAssignment::finite(r.clone());
            let worst = max_condition_residual(&assignment, m);
            if worst <= 10.0 * tol.max(1e-14) {
                return Ok(assignment);
            }
        }
    }
    Err(SolverError::Divergence { iterations: max_iter, last_step })
}

fn max_condition_residual(r: &RatioAssignment, m: &LocalOperator) -> f64 {
    let g = m.graph();
    let mut worst = 0.0_f64;
    for e in 0..g.n_directed() {
        if let Ok(res) = crate::ratio::condition_residual(r, m, e) {
            worst = worst.max(res.norm());
        }
    }
    worst
}

/// Homotopy in the spectral parameter: solve far up the imaginary axis,
/// then ride a geometric shift schedule down to the target, warm-starting
/// each stage. t0 <= 0 or steps <= 1 degenerates to a direct fixed point.
pub fn continuation_solve(
    family: &OperatorFamily,
    target: Complex64,
    t0: f64,
    steps: usize,
    budget: &SolveBudget,
) -> Result<RatioAssignment, SolverError> {
    let solve_at = |lambda: Complex64, warm: Option<&RatioAssignment>| {
        let m = family.evaluate(lambda)?;
        fixed_point_solve(&m, warm, budget.damping, budget.fp_max_iter, budget.fp_tol)
    };
    if t0 <= 0.0 || steps <= 1 {
        return solve_at(target, None);
    }
    let t_min = 0.02_f64;
    let gamma = (t_min / t0).powf(1.0 / (steps - 1) as f64);
    let mut warm: Option<RatioAssignment> = None;
    let mut shift = t0;
    for _ in 0..steps {
        if let Ok(r) = solve_at(target + Complex64::new(0.0, shift), warm.as_ref()) {
            warm = Some(r);
        }
        shift *= gamma;
    }
    solve_at(target, warm.as_ref())
}

/// Newton state for one edge variable: the value lives either directly
/// (w = r) or in the reciprocal chart (w = 1/r).
#[derive(Clone)]
struct Charted {
    w: Vec<Complex64>,
    recip: Vec<bool>,
}

impl Charted {
    fn ratio_class(&self, e: usize, eta: f64) -> RatioClass {
        if self.recip[e] {
            if self.w[e].norm() <= eta {
                RatioClass::Infinite
            } else {
                RatioClass::Finite(self.w[e].inv())
            }
        } else if self.w[e].norm() <= eta {
            RatioClass::Zero
        } else {
            RatioClass::Finite(self.w[e])
        }
    }

    /// Extended-complex value for the chart-aware metric.
    fn sphere_point(&self, e: usize) -> Option<Complex64> {
        if self.recip[e] {
            if self.w[e].norm() == 0.0 {
                None // infinity
            } else {
                Some(self.w[e].inv())
            }
        } else {
            Some(self.w[e])
        }
    }
}

fn chordal(a: Option<Complex64>, b: Option<Complex64>) -> f64 {
    match (a, b) {
        (Some(x), Some(y)) => {
            (x - y).norm() / ((1.0 + x.norm_sqr()) * (1.0 + y.norm_sqr())).sqrt()
        }
        (Some(x), None) | (None, Some(x)) => 1.0 / (1.0 + x.norm_sqr()).sqrt(),
        (None, None) => 0.0,
    }
}

/// Cleared residuals and Jacobian of the ratio equations in mixed charts.
/// Each equation is multiplied by the product of the reciprocal-chart
/// successor variables, which keeps it polynomial and lets zero/infinite
/// configurations appear as honest roots.
fn newton_system(
    m: &LocalOperator,
    state: &Charted,
    f_out: &mut [Complex64],
    jac: &mut [Complex64],
) {
    let g = m.graph();
    let n = g.n_directed();
    for x in jac.iter_mut() {
        *x = Complex64::ZERO;
    }
    for e in 0..n {
        let head = g.head(e);
        let succ: Vec<EdgeId> = g.follow(e).collect();
        let recip_succ: Vec<EdgeId> =
            succ.iter().copied().filter(|&s| state.recip[s]).collect();
        let p: Complex64 = recip_succ.iter().map(|&s| state.w[s]).product();
        let p_minus = |skip: EdgeId| -> Complex64 {
            recip_succ.iter().filter(|&&s| s != skip).map(|&s| state.w[s]).product()
        };
        let p_minus2 = |skip1: EdgeId, skip2: EdgeId| -> Complex64 {
            recip_succ
                .iter()
                .filter(|&&s| s != skip1 && s != skip2)
                .map(|&s| state.w[s])
                .product()
        };
        let s_direct: Complex64 = succ
            .iter()
            .filter(|&&s| !state.recip[s])
            .map(|&s| m.off(s) * state.w[s])
            .sum();
        let base = p * (m.diag(head) + s_direct)
            + recip_succ.iter().map(|&s| m.off(s) * p_minus(s)).sum::<Complex64>();
        let d_base = |x: EdgeId| -> Complex64 {
            if state.recip[x] {
                p_minus(x) * (m.diag(head) + s_direct)
                    + recip_succ
                        .iter()
                        .filter(|&&h| h != x)
                        .map(|&h| m.off(h) * p_minus2(h, x))
                        .sum::<Complex64>()
            } else {
                p * m.off(x)
            }
        };
        let me = m.off(g.inverse(e));
        if state.recip[e] {
            f_out[e] = me * state.w[e] * p + base;
            jac[e * n + e] += me * p;
            for &x in &succ {
                jac[e * n + x] += d_base(x);
                if state.recip[x] {
                    jac[e * n + x] += me * state.w[e] * p_minus(x);
                }
            }
        } else {
            f_out[e] = me * p + state.w[e] * base;
            jac[e * n + e] += base;
            for &x in &succ {
                jac[e * n + x] += state.w[e] * d_base(x);
                if state.recip[x] {
                    jac[e * n + x] += me * p_minus(x);
                }
            }
        }
    }
}

/// In-place complex Gaussian elimination with partial pivoting;
/// returns false on a numerically singular system.
fn solve_linear(a: &mut [Complex64], b: &mut [Complex64], n: usize) -> bool {
    for col in 0..n {
        let mut pivot = col;
        let mut best = a[col * n + col].norm();
        for row in (col + 1)..n {
            let v = a[row * n + col].norm();
            if v > best {
                best = v;
                pivot = row;
            }
        }
        if best < 1e-300 {
            return false;
        }
        if pivot != col {
            for j in 0..n {
                a.swap(pivot * n + j, col * n + j);
            }
            b.swap(pivot, col);
        }
        let d = a[col * n + col];
        for row in (col + 1)..n {
            let factor = a[row * n + col] / d;
            if factor == Complex64::ZERO {
                continue;
            }
            for j in col..n {
                let v = a[col * n + j];
                a[row * n + j] -= factor * v;
            }
            let bv = b[col];
            b[row] -= factor * bv;
        }
    }
    for col in (0..n).rev() {
        let mut acc = b[col];
        for j in (col + 1)..n {
            acc -= a[col * n + j] * b[j];
        }
        b[col] = acc / a[col * n + col];
    }
    true
}

/// Distinct ratio systems found by seeded Newton starts with reciprocal
/// chart switching. Solutions are deduplicated in the chart-aware sphere
/// metric at radius 1e-6; the list may be empty.
pub fn newton_multistart(
    m: &LocalOperator,
    n_starts: usize,
    seed: u64,
    tol: f64,
) -> Vec<RatioAssignment> {
    newton_multistart_with(m, n_starts, seed, tol, 2.0)
}

pub fn newton_multistart_with(
    m: &LocalOperator,
    n_starts: usize,
    seed: u64,
    tol: f64,
    start_radius: f64,
) -> Vec<RatioAssignment> {
    let g = m.graph();
    let n = g.n_directed();
    let scale = (0..n)
        .map(|e| m.off(e).norm())
        .chain((0..g.n_vertices()).map(|v| m.diag(v).norm()))
        .fold(1.0_f64, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut found: Vec<(Charted, RatioAssignment)> = Vec::new();
    let mut f = vec![Complex64::ZERO; n];
    let mut jac = vec![Complex64::ZERO; n * n];

    'starts: for _ in 0..n_starts {
        let mut state = Charted {
            w: (0..n)
                .map(|_| {
                    Complex64::new(
                        start_radius * gaussian(&mut rng),
                        start_radius * gaussian(&mut rng),
                    )
                })
                .collect(),
            recip: vec![false; n],
        };
        let mut converged = false;
        for _ in 0..80 {
            newton_system(m, &state, &mut f, &mut jac);
            let fnorm = f.iter().map(|z| z.norm()).fold(0.0, f64::max);
            if fnorm <= scale * tol {
                converged = true;
                break;
            }
            let mut rhs: Vec<Complex64> = f.iter().map(|z| -z).collect();
            let mut a = jac.clone();
            if !solve_linear(&mut a, &mut rhs, n) {
                continue 'starts;
            }
            // backtracking line search on the cleared residual
            let mut t = 1.0_f64;
            let mut accepted = false;
            for _ in 0..7 {
                let mut trial = state.clone();
                for e in 0..n {
                    trial.w[e] += t * rhs[e];
                }
                let mut ftrial = vec![Complex64::ZERO; n];
                let mut jtrial = vec![Complex64::ZERO; n * n];
                newton_system(m, &trial, &mut ftrial, &mut jtrial);
                let new_norm = ftrial.iter().map(|z| z.norm()).fold(0.0, f64::max);
                if new_norm < fnorm || new_norm <= scale * tol {
                    state = trial;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                continue 'starts;
            }
            if state.w.iter().any(|w| !w.re.is_finite() || !w.im.is_finite()) {
                continue 'starts;
            }
            // chart switches keep every variable in a bounded window
            for e in 0..n {
                if state.w[e].norm() > CHART_BOUND {
                    state.w[e] = state.w[e].inv();
                    state.recip[e] = !state.recip[e];
                }
            }
        }
        if !converged {
            continue;
        }
        let assignment = RatioAssignment::from_classes(
            (0..n).map(|e| state.ratio_class(e, CLASS_ETA)).collect(),
        );
        let duplicate = found.iter().any(|(other, _)| {
            (0..n)
                .map(|e| chordal(state.sphere_point(e), other.sphere_point(e)))
                .fold(0.0, f64::max)
                <= 1e-6
        });
        if !duplicate {
            found.push((state, assignment));
        }
    }
    found.into_iter().map(|(_, a)| a).collect()
}

fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Out,
    In,
    Boundary,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ForcedPoint,
    FixedPoint,
    Continuation,
    NewtonMultistart,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub systems_found: usize,
    pub valid_systems: usize,
    pub min_alpha: Option<f64>,
    /// True when an IN decision rests on failing to find a certificate.
    pub heuristic: bool,
    pub pole_hits: usize,
    pub divergences: usize,
    /// Valid systems whose decay rate fell in the boundary band while the
    /// verdict was decided by another system.
    pub near_boundary_systems: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct MembershipVerdict {
    pub lambda: Complex64,
    pub decision: Decision,
    pub method: Option<Method>,
    /// Validated certificate: the ratio system and its decay rate.
    pub evidence: Option<(RatioAssignment, f64)>,
    /// Name of the closed-form rule when no search ran.
    pub forced_rule: Option<&'static str>,
    pub diagnostics: Diagnostics,
}

impl MembershipVerdict {
    fn forced(lambda: Complex64, decision: Decision, rule: &'static str) -> Self {
        MembershipVerdict {
            lambda,
            decision,
            method: Some(Method::ForcedPoint),
            evidence: None,
            forced_rule: Some(rule),
            diagnostics: Diagnostics::default(),
        }
    }

    /// JSON per the verdict wire format.
    pub fn to_json(&self) -> serde_json::Value {
        let decision = match self.decision {
            Decision::Out => "out",
            Decision::In => "in",
            Decision::Boundary => "boundary",
            Decision::Unknown => "unknown",
        };
        let method = self.method.map(|m| match m {
            Method::ForcedPoint => "forced_point",
            Method::FixedPoint => "fixed_point",
            Method::Continuation => "continuation",
            Method::NewtonMultistart => "newton_multistart",
        });
        serde_json::json!({
            "lambda": [self.lambda.re, self.lambda.im],
            "decision": decision,
            "alpha": self.evidence.as_ref().map(|(_, a)| a),
            "method": method,
            "forced_rule": self.forced_rule,
            "ratios": self.evidence.as_ref().map(|(r, _)| r),
            "diagnostics": serde_json::to_value(&self.diagnostics).unwrap(),
        })
    }
}

/// Decides whether lambda lies in the spectrum of the family's operator
/// on the universal cover. Forced points first, then continuation, the
/// direct fixed point, and Newton multistart; the best validated system
/// decides.
pub fn membership(
    family: &OperatorFamily,
    lambda: Complex64,
    budget: &SolveBudget,
) -> MembershipVerdict {
    let g = family.graph();
    if family.kind() == FamilyKind::QLambda {
        if (lambda - 1.0).norm() <= 1e-12 || (lambda + 1.0).norm() <= 1e-12 {
            return MembershipVerdict::forced(lambda, Decision::In, "pm1_in_spectrum");
        }
        if lambda.norm() <= 1e-12 && g.d_min() >= 2 {
            return MembershipVerdict::forced(lambda, Decision::Out, "q0_diagonal_invertible");
        }
    }
    let mut diag = Diagnostics::default();
    let m = match family.evaluate(lambda) {
        Ok(m) => m,
        Err(_) => {
            return MembershipVerdict {
                lambda,
                decision: Decision::Unknown,
                method: None,
                evidence: None,
                forced_rule: None,
                diagnostics: diag,
            }
        }
    };

    let t0 = budget.continuation_t0.unwrap_or_else(|| {
        4.0 + 2.0 * growth_rate(g).map(f64::sqrt).unwrap_or(1.0)
    });

    let mut best: Option<(RatioAssignment, f64)> = None;
    let mut best_method = None;

    let consider = |r: RatioAssignment,
                        method: Method,
                        diag: &mut Diagnostics,
                        best: &mut Option<(RatioAssignment, f64)>,
                        best_method: &mut Option<Method>| {
        diag.systems_found += 1;
        let report = validate(&r, &m, budget.residual_tol);
        if !report.valid {
            return;
        }
        let Ok(alpha) = decay_rate(&r, &m) else { return };
        diag.valid_systems += 1;
        if (alpha - 1.0).abs() <= budget.eps_alpha {
            diag.near_boundary_systems += 1;
        }
        if best.as_ref().map_or(true, |(_, a)| alpha < *a) {
            *best = Some((r, alpha));
            *best_method = Some(method);
        }
        diag.min_alpha = Some(diag.min_alpha.map_or(alpha, |a: f64| a.min(alpha)));
    };

    match continuation_solve(family, lambda, t0, budget.continuation_steps, budget) {
        Ok(r) => consider(r, Method::Continuation, &mut diag, &mut best, &mut best_method),
        Err(SolverError::PoleHit { .. }) => diag.pole_hits += 1,
        Err(_) => diag.divergences += 1,
    }
    let certified_out =
        |best: &Option<(RatioAssignment, f64)>| matches!(best, Some((_, a)) if *a <= 1.0 - budget.eps_alpha);

    if !certified_out(&best) {
        match fixed_point_solve(&m, None, budget.damping, budget.fp_max_iter, budget.fp_tol) {
            Ok(r) => consider(r, Method::FixedPoint, &mut diag, &mut best, &mut best_method),
            Err(SolverError::PoleHit { .. }) => diag.pole_hits += 1,
            Err(_) => diag.divergences += 1,
        }
    }
    if !certified_out(&best) {
        for r in newton_multistart_with(
            &m,
            budget.newton_starts,
            budget.seed,
            budget.newton_tol,
            budget.start_radius,
        ) {
            consider(r, Method::NewtonMultistart, &mut diag, &mut best, &mut best_method);
        }
    }

    match best {
        Some((r, alpha)) if alpha <= 1.0 - budget.eps_alpha => MembershipVerdict {
            lambda,
            decision: Decision::Out,
            method: best_method,
            evidence: Some((r, alpha)),
            forced_rule: None,
            diagnostics: diag,
        },
        Some((r, alpha)) if (alpha - 1.0).abs() <= budget.eps_alpha => MembershipVerdict {
            lambda,
            decision: Decision::Boundary,
            method: best_method,
            evidence: Some((r, alpha)),
            forced_rule: None,
            diagnostics: diag,
        },
        Some((r, alpha)) => {
            // only certificates with decay rate above the band: heuristic IN
            diag.heuristic = true;
            MembershipVerdict {
                lambda,
                decision: Decision::In,
                method: best_method,
                evidence: Some((r, alpha)),
                forced_rule: None,
                diagnostics: diag,
            }
        }
        None => {
            if diag.systems_found > 0 {
                // solvers converged but nothing validated: numerically murky
                MembershipVerdict {
                    lambda,
                    decision: Decision::Unknown,
                    method: None,
                    evidence: None,
                    forced_rule: None,
                    diagnostics: diag,
                }
            } else {
                diag.heuristic = true;
                MembershipVerdict {
                    lambda,
                    decision: Decision::In,
                    method: None,
                    evidence: None,
                    forced_rule: None,
                    diagnostics: diag,
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::graphs;
    use std::sync::Arc;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn k4_q() -> OperatorFamily {
        OperatorFamily::q_lambda(Arc::new(graphs::complete(4)))
    }

    #[test]
    fn fixed_point_finds_trivial_k4() {
        let m = k4_q().evaluate(c(3.0)).unwrap();
        let r = fixed_point_solve(&m, None, 0.5, 200, 1e-12).unwrap();
        for e in 0..12 {
            let RatioClass::Finite(v) = r.class(e) else { panic!("finite") };
            assert!((v - c(1.0 / 3.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn fixed_point_alpha_half_at_two() {
        let m = k4_q().evaluate(c(2.0)).unwrap();
        let r = fixed_point_solve(&m, None, 0.5, 2000, 1e-10).unwrap();
        let alpha = decay_rate(&r, &m).unwrap();
        assert!((alpha - 0.5).abs() < 1e-8);
    }

    #[test]
    fn fixed_point_inside_disk_certifies_out() {
        // real 1.1 inside the annulus but off-spectrum:
        // mu = lambda + 2/lambda is real outside [-2 sqrt 2, 2 sqrt 2]
        let m = k4_q().evaluate(c(1.1)).unwrap();
        let r = fixed_point_solve(&m, None, 0.5, 2000, 1e-10).unwrap();
        let alpha = decay_rate(&r, &m).unwrap();
        assert!((alpha - 1.1f64.powi(2) / 2.0).abs() < 1e-8);
        assert!(alpha < 1.0);
    }

    #[test]
    fn continuation_agrees_with_direct() {
        let fam = k4_q();
        let budget = SolveBudget::default();
        let r1 = continuation_solve(&fam, c(3.0), 8.0, 24, &budget).unwrap();
        let r2 = continuation_solve(&fam, c(3.0), 0.0, 1, &budget).unwrap();
        for e in 0..12 {
            let (RatioClass::Finite(a), RatioClass::Finite(b)) = (r1.class(e), r2.class(e))
            else {
                panic!("finite")
            };
            assert!((a - b).norm() < 1e-9);
            assert!((a - c(1.0 / 3.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn continuation_converges_complex_theta() {
        let fam = OperatorFamily::q_lambda(Arc::new(graphs::theta_122()));
        let budget = SolveBudget::default();
        let lam = Complex64::new(1.2, 0.8);
        let r = continuation_solve(&fam, lam, 8.0, 24, &budget).unwrap();
        let m = fam.evaluate(lam).unwrap();
        assert!(validate(&r, &m, 1e-8).valid);
    }

    #[test]
    fn newton_finds_trivial_on_k4() {
        let m = k4_q().evaluate(Complex64::new(1.7, 0.4)).unwrap();
        let sols = newton_multistart(&m, 24, 7, 1e-12);
        assert!(!sols.is_empty());
        let target = Complex64::new(1.7, 0.4).inv();
        let hit = sols.iter().any(|r| {
            (0..12).all(|e| match r.class(e) {
                RatioClass::Finite(v) => (v - target).norm() < 1e-8,
                _ => false,
            })
        });
        assert!(hit, "trivial system among {} solutions", sols.len());
    }

    #[test]
    fn newton_recovers_infinite_matching_system() {
        // weighted matched K4 at lambda = 0: the infinite/zero system
        // must come out of the reciprocal chart
        let g = Arc::new(graphs::matched_k4([1.0, 0.6, 0.6]));
        let w: Vec<f64> = g.undirected_edges().iter().map(|&(_, _, w)| w).collect();
        let fam = OperatorFamily::weighted_adjacency(Arc::clone(&g), w).unwrap();
        let m = fam.evaluate(c(0.0)).unwrap();
        let sols = newton_multistart(&m, 64, 17, 1e-12);
        let hit = sols.iter().any(|r| {
            (0..4).all(|e| r.class(e).is_infinite())
                && (4..12).all(|e| r.class(e).is_zero())
        });
        assert!(
            hit,
            "matching system among {} solutions: {:?}",
            sols.len(),
            sols.iter().map(|r| r.classes().to_vec()).collect::<Vec<_>>()
        );
        // and it validates with decay rate 0.72
        let found = sols
            .iter()
            .find(|r| (0..4).all(|e| r.class(e).is_infinite()))
            .unwrap();
        assert!(validate(found, &m, 1e-9).valid);
        assert!((decay_rate(found, &m).unwrap() - 0.72).abs() < 1e-9);
    }

    #[test]
    fn membership_forced_points() {
        let fam = k4_q();
        let budget = SolveBudget::default();
        for lam in [c(1.0), c(-1.0)] {
            let v = membership(&fam, lam, &budget);
            assert_eq!(v.decision, Decision::In);
            assert_eq!(v.method, Some(Method::ForcedPoint));
        }
        let v = membership(&fam, c(0.0), &budget);
        assert_eq!(v.decision, Decision::Out);
        assert_eq!(v.forced_rule, Some("q0_diagonal_invertible"));
    }

    #[test]
    fn membership_out_with_alpha() {
        let fam = k4_q();
        let budget = SolveBudget::default();
        // |lambda|^2 = 2.5 > gr = 2: out with alpha = 0.8
        let v = membership(&fam, Complex64::new(1.5, 0.5), &budget);
        assert_eq!(v.decision, Decision::Out);
        let (_, alpha) = v.evidence.expect("certificate");
        assert!((alpha - 0.8).abs() < 1e-6);
        // real 1.2: mu-correspondence says out
        let v = membership(&fam, c(1.2), &budget);
        assert_eq!(v.decision, Decision::Out);
    }

    #[test]
    fn membership_on_circle_is_in_or_boundary() {
        let fam = k4_q();
        let budget = SolveBudget::default();
        let lam = Complex64::from_polar(2.0_f64.sqrt(), 0.9);
        let v = membership(&fam, lam, &budget);
        assert!(
            matches!(v.decision, Decision::In | Decision::Boundary),
            "{:?}",
            v.decision
        );
    }

    #[test]
    fn verdict_json_shape() {
        let fam = k4_q();
        let v = membership(&fam, c(2.0), &SolveBudget::default());
        let json = v.to_json();
        assert_eq!(json["decision"], "out");
        assert_eq!(json["lambda"][0], 2.0);
        assert!(json["alpha"].as_f64().unwrap() < 1.0);
        assert!(json["ratios"].is_array());
    }
}
