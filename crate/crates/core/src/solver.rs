//! Entropic mirror descent for the capacity objective.
//!
//! One iteration from the current iterate `p` with gradient `v`:
//!
//! ```text
//! p~_x  =  p_x exp(-eta v_x) / sum_y p_y exp(-eta v_y)     (mirror step)
//! p'    =  (1 - n delta) p~ + delta 1                      (safeguard)
//! ```
//!
//! The safeguard runs every iteration, so all iterates after the first live
//! in the shrunken simplex `Delta_delta = {p : p_x >= delta}` where the
//! curvature constants of [`crate::objective`] apply. The loop stops when
//! the duality gap certificate drops to `tol` (which bounds the remaining
//! suboptimality of `S`, whatever path the iterates took) or after
//! `max_iters` steps.
//!
//! Stepsizes: `eta = 1/L` is the analysis-backed constant choice; the
//! default adaptive mode searches a doubling/halving ladder around the
//! previous accepted stepsize and accepts only steps that satisfy the
//! relative-smoothness descent inequality, falling back to `1/L` (which the
//! theory accepts unconditionally) when the whole ladder fails.

use serde::{Deserialize, Serialize};

use crate::channel::PreparedChannel;
use crate::consts::ADAPTIVE_K;
use crate::diagnostics::{gap_from_grad, kl_divergence};
use crate::error::{Error, Result};
use crate::objective::{
    curvature_constants, objective_and_gradient, objective_s, smoothness_l, validate_delta,
    CurvatureConstants, ProbVector,
};
use crate::scalar::{real, RealScalar};

/// Why the solve loop returned.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Duality gap reached `tol`; the capacity estimate is certified.
    Tolerance,
    /// Iteration budget exhausted before certification.
    MaxIters,
}

/// Stepsize policy for the iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepsizeMode {
    /// `eta_t = eta_base` every iteration.
    Constant,
    /// Doubling/halving ladder around the previous accepted stepsize,
    /// gated by the relative-smoothness descent check.
    Adaptive,
}

/// Baseline stepsize rule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EtaRule<T: RealScalar> {
    /// `eta = 1 / L` from the smoothness constant at the solve floor.
    Auto,
    /// A user-chosen positive stepsize.
    Fixed(T),
}

/// Initial point of the iteration.
#[derive(Clone, Debug)]
pub enum Init<T: RealScalar> {
    Uniform,
    /// A strictly positive starting distribution.
    Custom(ProbVector<T>),
}

/// Full configuration of one solve.
///
/// `delta_floor` is the safeguard level of the iteration itself (default
/// `1e-11`, small enough not to bias the answer). `analysis_delta` is the
/// floor at which the reported curvature constants are evaluated (default
/// `1e-3`): constants at the iteration floor are uninformatively extreme
/// for `beta != 2`, so reporting uses a moderate floor instead. Both appear
/// in the result.
#[derive(Clone, Debug)]
pub struct SolverConfig<T: RealScalar> {
    /// Renyi order; must equal the order the channel was prepared at.
    pub alpha: T,
    pub eta: EtaRule<T>,
    pub stepsize_mode: StepsizeMode,
    /// Safeguard floor, in `[0, 1/n]`. Zero disables the safeguard.
    pub delta_floor: T,
    /// Reporting floor for the curvature constants, in `(0, 1/n]`.
    pub analysis_delta: T,
    /// Duality-gap stopping threshold, strictly positive.
    pub tol: T,
    pub max_iters: usize,
    /// Record every k-th iteration in the trace (plus the first and last);
    /// zero disables tracing.
    pub trace_every: usize,
    /// Reserved for randomized initialization options; the current init
    /// rules are deterministic and ignore it.
    pub seed: u64,
    pub init: Init<T>,
}

impl<T: RealScalar> SolverConfig<T> {
    /// Defaults: tolerance `1e-8`, at most `30000` iterations, floor
    /// `1e-11`, automatic baseline stepsize with the adaptive ladder,
    /// uniform start, full trace.
    pub fn new(alpha: T) -> Self {
        Self {
            alpha,
            eta: EtaRule::Auto,
            stepsize_mode: StepsizeMode::Adaptive,
            delta_floor: real(1e-11),
            analysis_delta: real(1e-3),
            tol: real(1e-8),
            max_iters: 30_000,
            trace_every: 1,
            seed: 0,
            init: Init::Uniform,
        }
    }
}

/// One recorded iteration.
///
/// `s` and `gap` describe the post-safeguard iterate `p^t`. The remaining
/// fields describe the step that produced it and are absent at `t = 0`:
/// the stepsize `eta`, the pre-safeguard objective `s_pre = S(p~^t)` (the
/// quantity the descent lemma bounds), and `kl_prev = KL(p^t || p^(t-1))`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceRecord<T: RealScalar> {
    pub t: usize,
    pub s: T,
    pub gap: T,
    pub eta: Option<T>,
    pub s_pre: Option<T>,
    pub kl_prev: Option<T>,
}

/// Iteration history; `t` is strictly increasing across records.
pub type SolveTrace<T> = Vec<TraceRecord<T>>;

/// Outcome of a solve.
#[derive(Clone, Debug)]
pub struct SolveResult<T: RealScalar> {
    pub p_final: ProbVector<T>,
    pub s_final: T,
    /// `capacity_from_s(alpha, s_final)`, in nats.
    pub capacity: T,
    /// Number of mirror-descent steps taken.
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub gap_final: T,
    /// Safeguard floor the iteration ran with.
    pub delta_floor: T,
    /// Baseline stepsize (`1/L` under `EtaRule::Auto`).
    pub eta_base: T,
    /// Curvature constants evaluated at `analysis_delta`.
    pub constants: CurvatureConstants<T>,
    pub trace: SolveTrace<T>,
}

/// One exponentiated-gradient step with the gradient computed at `p`.
///
/// `p` must be strictly positive; `eta = 0` degenerates to the identity and
/// is allowed, negative stepsizes are rejected.
pub fn md_step<T: RealScalar>(
    ch: &PreparedChannel<T>,
    p: &ProbVector<T>,
    eta: T,
) -> Result<ProbVector<T>> {
    if !(eta.finite() && eta >= T::zero()) {
        return Err(Error::InvalidConfig {
            reason: format!("stepsize eta = {} must be finite and nonnegative", eta.to_f64().unwrap_or(f64::NAN)),
        });
    }
    if p.min_value() <= T::zero() {
        return Err(Error::InvalidProbability {
            reason: "mirror step requires a strictly positive iterate".into(),
        });
    }
    let (_, grad) = objective_and_gradient(ch, p)?;
    Ok(md_step_with_grad(p, &grad, eta))
}

/// The mirror step for an already-computed gradient:
/// `p~_x \propto p_x exp(-eta v_x)`.
///
/// Computed with max-subtraction in the exponent,
/// `p~_x \propto exp(ln p_x - eta v_x - max_y(ln p_y - eta v_y))`,
/// so the normalizer always contains a term equal to one and neither
/// overflow nor a zero normalizer can occur. Shifting every gradient
/// component by a constant leaves the result unchanged.
pub fn md_step_with_grad<T: RealScalar>(p: &ProbVector<T>, grad: &[T], eta: T) -> ProbVector<T> {
    debug_assert_eq!(p.len(), grad.len());
    if eta == T::zero() {
        return p.clone();
    }
    let mut scores = Vec::with_capacity(p.len());
    let mut max_score = -T::pos_infinity();
    for (&px, &vx) in p.values().iter().zip(grad) {
        let s = px.ln() - eta * vx;
        if s > max_score {
            max_score = s;
        }
        scores.push(s);
    }
    let weights: Vec<T> = scores.into_iter().map(|s| (s - max_score).exp()).collect();
    ProbVector::normalized(weights).expect("shifted exponentials are finite with positive sum")
}

/// The safeguard `p = (1 - n delta) p~ + delta 1`, mapping the simplex onto
/// `Delta_delta`. Requires `delta` in `[0, 1/n]`; `delta = 0` is the
/// identity and the uniform distribution is a fixed point for every level.
pub fn safeguard<T: RealScalar>(p_tilde: &ProbVector<T>, delta: T) -> ProbVector<T> {
    let n = p_tilde.len();
    assert!(
        delta >= T::zero() && delta <= T::one() / real(n as f64),
        "safeguard level must lie in [0, 1/n]"
    );
    if delta == T::zero() {
        return p_tilde.clone();
    }
    let shrink = T::one() - real::<T>(n as f64) * delta;
    let values: Vec<T> = p_tilde.values().iter().map(|&v| shrink * v + delta).collect();
    ProbVector::new(values).expect("safeguarded vector stays on the simplex")
}

/// A stepsize accepted by the descent check, with the mirror iterate and
/// pre-safeguard objective that came out of the accepted evaluation.
#[derive(Clone, Debug)]
pub struct AcceptedStep<T: RealScalar> {
    pub eta: T,
    pub p_tilde: ProbVector<T>,
    pub s_tilde: T,
}

/// Relative-smoothness descent condition at stepsize `eta`:
///
/// ```text
/// S(p~) <= S(p) + <grad, p~ - p> + KL(p~ || p) / eta.
/// ```
///
/// Steps with `eta <= 1/L` satisfy it by the smoothness bound, so accepted
/// steps never leave the regime the convergence analysis covers.
fn descent_check<T: RealScalar>(
    ch: &PreparedChannel<T>,
    p: &ProbVector<T>,
    grad: &[T],
    s: T,
    eta: T,
) -> Result<Option<(ProbVector<T>, T)>> {
    let p_tilde = md_step_with_grad(p, grad, eta);
    let s_tilde = objective_s(ch, &p_tilde)?;
    let mut linear = T::zero();
    for (&g, (&new, &old)) in grad.iter().zip(p_tilde.values().iter().zip(p.values())) {
        linear += g * (new - old);
    }
    let bregman = kl_divergence(&p_tilde, p)?;
    if s_tilde <= s + linear + bregman / eta {
        Ok(Some((p_tilde, s_tilde)))
    } else {
        Ok(None)
    }
}

/// Doubling/halving stepsize search around `eta_base`.
///
/// If the base passes the descent check, the stepsize doubles greedily
/// until the first failure (at most [`ADAPTIVE_K`] doublings) and the last
/// passing rung wins. Otherwise it halves until a rung passes (at most
/// [`ADAPTIVE_K`] halvings) and, should the whole ladder fail, falls back
/// to `eta_fallback = 1/L`, which is accepted without a check.
pub fn adaptive_stepsize<T: RealScalar>(
    ch: &PreparedChannel<T>,
    p: &ProbVector<T>,
    grad: &[T],
    s: T,
    eta_base: T,
    eta_fallback: T,
) -> Result<AcceptedStep<T>> {
    if let Some((p_tilde, s_tilde)) = descent_check(ch, p, grad, s, eta_base)? {
        let mut best = AcceptedStep {
            eta: eta_base,
            p_tilde,
            s_tilde,
        };
        for _ in 0..ADAPTIVE_K {
            let trial = best.eta * real(2.0);
            match descent_check(ch, p, grad, s, trial)? {
                Some((p_tilde, s_tilde)) => {
                    best = AcceptedStep {
                        eta: trial,
                        p_tilde,
                        s_tilde,
                    };
                }
                None => break,
            }
        }
        return Ok(best);
    }
    let mut eta = eta_base;
    for _ in 0..ADAPTIVE_K {
        eta /= real(2.0);
        if let Some((p_tilde, s_tilde)) = descent_check(ch, p, grad, s, eta)? {
            return Ok(AcceptedStep {
                eta,
                p_tilde,
                s_tilde,
            });
        }
    }
    let p_tilde = md_step_with_grad(p, grad, eta_fallback);
    let s_tilde = objective_s(ch, &p_tilde)?;
    Ok(AcceptedStep {
        eta: eta_fallback,
        p_tilde,
        s_tilde,
    })
}

/// Runs mirror descent on the prepared channel under `cfg`.
///
/// Stops as soon as the duality gap certifies `tol`-optimality (possibly at
/// `t = 0` when the start is already optimal, as for symmetric channels
/// started at uniform) or when `max_iters` steps have been taken. Errors
/// raised while stepping carry the iteration index.
pub fn solve<T: RealScalar>(
    ch: &PreparedChannel<T>,
    cfg: &SolverConfig<T>,
) -> Result<SolveResult<T>> {
    let n = ch.alphabet_size();
    let (eta_base, eta_fallback, p0) = validate_config(ch, cfg)?;
    let constants = curvature_constants(ch, cfg.analysis_delta)?;

    if n == 1 {
        // A single input admits a single distribution; S = Tr[A^beta] = 1
        // and the capacity vanishes. The gradient (which a singular state
        // cannot even provide for beta < 2) is never needed.
        let s = objective_s(ch, &p0)?;
        let mut trace = Vec::new();
        if cfg.trace_every > 0 {
            trace.push(TraceRecord {
                t: 0,
                s,
                gap: T::zero(),
                eta: None,
                s_pre: None,
                kl_prev: None,
            });
        }
        return Ok(SolveResult {
            p_final: p0,
            s_final: s,
            capacity: crate::objective::capacity_from_s(cfg.alpha, s)?,
            iterations: 0,
            stop_reason: StopReason::Tolerance,
            gap_final: T::zero(),
            delta_floor: cfg.delta_floor,
            eta_base,
            constants,
            trace,
        });
    }

    let mut p = p0;
    let (mut s, mut grad) =
        objective_and_gradient(ch, &p).map_err(|e| at_iteration(0, e))?;
    let mut gap = gap_from_grad(&p, &grad).gap;

    let mut trace: SolveTrace<T> = Vec::new();
    let mut last_record = TraceRecord {
        t: 0,
        s,
        gap,
        eta: None,
        s_pre: None,
        kl_prev: None,
    };
    let mut last_pushed_t: Option<usize> = None;
    if cfg.trace_every > 0 {
        trace.push(last_record.clone());
        last_pushed_t = Some(0);
    }

    let mut t = 0usize;
    let mut eta_warm = eta_base;
    let stop_reason = loop {
        if gap <= cfg.tol {
            break StopReason::Tolerance;
        }
        if t >= cfg.max_iters {
            break StopReason::MaxIters;
        }
        let step = match cfg.stepsize_mode {
            StepsizeMode::Constant => {
                let p_tilde = md_step_with_grad(&p, &grad, eta_base);
                let s_tilde =
                    objective_s(ch, &p_tilde).map_err(|e| at_iteration(t + 1, e))?;
                AcceptedStep {
                    eta: eta_base,
                    p_tilde,
                    s_tilde,
                }
            }
            StepsizeMode::Adaptive => {
                adaptive_stepsize(ch, &p, &grad, s, eta_warm, eta_fallback)
                    .map_err(|e| at_iteration(t + 1, e))?
            }
        };
        let p_next = safeguard(&step.p_tilde, cfg.delta_floor);
        let kl_prev = kl_divergence(&p_next, &p).map_err(|e| at_iteration(t + 1, e))?;
        let (s_next, grad_next) =
            objective_and_gradient(ch, &p_next).map_err(|e| at_iteration(t + 1, e))?;
        t += 1;
        p = p_next;
        s = s_next;
        grad = grad_next;
        gap = gap_from_grad(&p, &grad).gap;
        eta_warm = step.eta;
        last_record = TraceRecord {
            t,
            s,
            gap,
            eta: Some(step.eta),
            s_pre: Some(step.s_tilde),
            kl_prev: Some(kl_prev),
        };
        if cfg.trace_every > 0 && t % cfg.trace_every == 0 {
            trace.push(last_record.clone());
            last_pushed_t = Some(t);
        }
    };
    if cfg.trace_every > 0 && last_pushed_t != Some(t) {
        trace.push(last_record);
    }

    Ok(SolveResult {
        p_final: p,
        s_final: s,
        capacity: crate::objective::capacity_from_s(cfg.alpha, s)?,
        iterations: t,
        stop_reason,
        gap_final: gap,
        delta_floor: cfg.delta_floor,
        eta_base,
        constants,
        trace,
    })
}

fn at_iteration(iteration: usize, source: Error) -> Error {
    Error::Solve {
        iteration,
        source: Box::new(source),
    }
}

/// Checks the whole configuration against the channel and resolves the
/// baseline stepsize, the adaptive fallback (`1/L` whenever the smoothness
/// constant is available), and the starting point.
fn validate_config<T: RealScalar>(
    ch: &PreparedChannel<T>,
    cfg: &SolverConfig<T>,
) -> Result<(T, T, ProbVector<T>)> {
    let n = ch.alphabet_size();
    if cfg.alpha != ch.alpha() {
        return Err(Error::InvalidConfig {
            reason: format!(
                "config alpha = {} but the channel was prepared at alpha = {}",
                cfg.alpha.to_f64().unwrap_or(f64::NAN),
                ch.alpha().to_f64().unwrap_or(f64::NAN)
            ),
        });
    }
    if !(cfg.tol.finite() && cfg.tol > T::zero()) {
        return Err(Error::InvalidConfig {
            reason: "tol must be finite and positive".into(),
        });
    }
    if cfg.max_iters == 0 {
        return Err(Error::InvalidConfig {
            reason: "max_iters must be at least 1".into(),
        });
    }
    let d = cfg.delta_floor.to_f64().unwrap_or(f64::NAN);
    if !(d >= 0.0 && d <= 1.0 / n as f64) {
        return Err(Error::DeltaOutOfRange {
            delta: d,
            n,
            range: "[0, 1/n]",
        });
    }
    validate_delta(n, cfg.analysis_delta)?;

    let beta = ch.beta();
    let needs_l = matches!(cfg.eta, EtaRule::Auto)
        || matches!(cfg.stepsize_mode, StepsizeMode::Adaptive);
    let (eta_base, eta_fallback) = if needs_l {
        let l = if beta >= real(2.0) {
            // The constant is floor-independent for beta >= 2; any valid
            // floor argument yields the same value.
            smoothness_l(ch, T::one() / real(n as f64))?
        } else {
            if cfg.delta_floor <= T::zero() {
                return Err(Error::InvalidConfig {
                    reason: "beta < 2 with an automatic or adaptive stepsize requires \
                             delta_floor > 0 (the smoothness constant is floor-dependent)"
                        .into(),
                });
            }
            smoothness_l(ch, cfg.delta_floor)?
        };
        let fallback = T::one() / l;
        let base = match cfg.eta {
            EtaRule::Auto => fallback,
            EtaRule::Fixed(e) => {
                validate_fixed_eta(e)?;
                // A fixed baseline seeds the adaptive ladder, but failed
                // ladders still fall back to 1/L.
                e
            }
        };
        (base, fallback)
    } else {
        match cfg.eta {
            EtaRule::Fixed(e) => {
                validate_fixed_eta(e)?;
                (e, e)
            }
            EtaRule::Auto => unreachable!("Auto implies needs_l"),
        }
    };

    let p0 = match &cfg.init {
        Init::Uniform => ProbVector::uniform(n),
        Init::Custom(p) => {
            if p.len() != n {
                return Err(Error::DimMismatch {
                    expected: n,
                    got: p.len(),
                });
            }
            if p.min_value() <= T::zero() {
                return Err(Error::InvalidConfig {
                    reason: "custom init must be strictly positive".into(),
                });
            }
            p.clone()
        }
    };
    Ok((eta_base, eta_fallback, p0))
}

fn validate_fixed_eta<T: RealScalar>(e: T) -> Result<()> {
    if !(e.finite() && e > T::zero()) {
        return Err(Error::InvalidConfig {
            reason: format!(
                "fixed stepsize eta = {} must be finite and positive",
                e.to_f64().unwrap_or(f64::NAN)
            ),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{gen_noiseless_channel, gen_random_channel, PreparedChannel};
    use crate::objective::strong_convexity_mu;

    const TOL: f64 = 1e-12;

    fn noiseless(n: usize, alpha: f64) -> PreparedChannel<f64> {
        PreparedChannel::prepare(gen_noiseless_channel(n).unwrap(), alpha).unwrap()
    }

    fn random(n: usize, d: usize, alpha: f64, seed: u64) -> PreparedChannel<f64> {
        PreparedChannel::prepare(gen_random_channel(n, d, 1e-2, seed).unwrap(), alpha).unwrap()
    }

    #[test]
    fn md_step_hand_example() {
        // Noiseless n = 2, alpha = 0.5, p = (0.6, 0.4), eta = 1/2:
        // v = (1.2, 0.8), so p~ \propto (0.6 e^{-0.6}, 0.4 e^{-0.4}).
        let ch = noiseless(2, 0.5);
        let p = ProbVector::new(vec![0.6, 0.4]).unwrap();
        let stepped = md_step(&ch, &p, 0.5).unwrap();
        let w0 = 0.6 * (-0.6f64).exp();
        let w1 = 0.4 * (-0.4f64).exp();
        assert!((stepped.get(0) - w0 / (w0 + w1)).abs() <= 1e-14);
        assert!((stepped.get(1) - w1 / (w0 + w1)).abs() <= 1e-14);
        // The step moves toward uniform.
        assert!(stepped.get(0) < 0.6);
    }

    #[test]
    fn md_step_degenerate_cases() {
        let ch = noiseless(2, 0.5);
        let p = ProbVector::new(vec![0.6, 0.4]).unwrap();
        // eta = 0 is the identity, exactly.
        let same = md_step(&ch, &p, 0.0).unwrap();
        assert_eq!(same.values(), p.values());
        // Equal gradient components leave p unchanged.
        let same = md_step_with_grad(&p, &[3.0, 3.0], 0.7);
        assert!((same.get(0) - 0.6).abs() <= 1e-15);
        // Negative stepsize and zero entries are rejected.
        assert!(md_step(&ch, &p, -0.1).is_err());
        let vertex = ProbVector::new(vec![1.0, 0.0]).unwrap();
        assert!(md_step(&ch, &vertex, 0.5).is_err());
    }

    #[test]
    fn md_step_is_shift_invariant() {
        let p = ProbVector::normalized(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let v = [0.3, -1.2, 0.9, 2.0];
        let shifted: Vec<f64> = v.iter().map(|x| x + 7.3).collect();
        let a = md_step_with_grad(&p, &v, 0.8);
        let b = md_step_with_grad(&p, &shifted, 0.8);
        for x in 0..4 {
            assert!((a.get(x) - b.get(x)).abs() <= 1e-14);
        }
    }

    #[test]
    fn safeguard_hand_values() {
        let vertex = ProbVector::<f64>::new(vec![1.0, 0.0]).unwrap();
        let fixed = safeguard(&vertex, 0.1);
        assert!((fixed.get(0) - 0.9).abs() <= TOL);
        assert!((fixed.get(1) - 0.1).abs() <= TOL);
        // delta = 0 is the identity; uniform is a fixed point.
        assert_eq!(safeguard(&vertex, 0.0).values(), vertex.values());
        let u = ProbVector::<f64>::uniform(4);
        let su = safeguard(&u, 0.05);
        for x in 0..4 {
            assert!((su.get(x) - 0.25).abs() <= TOL);
        }
    }

    #[test]
    fn solve_stops_immediately_at_symmetric_optimum() {
        // Uniform input is exactly optimal for the noiseless channel, so the
        // gap certificate fires before any step is taken.
        let ch = noiseless(2, 0.5);
        let r = solve(&ch, &SolverConfig::new(0.5)).unwrap();
        assert_eq!(r.iterations, 0);
        assert_eq!(r.stop_reason, StopReason::Tolerance);
        assert!(r.gap_final.abs() <= TOL);
        assert!((r.capacity - 2.0f64.ln()).abs() <= TOL, "{}", r.capacity);
        assert_eq!(r.trace.len(), 1);
        assert_eq!(r.trace[0].t, 0);
    }

    #[test]
    fn solve_converges_from_lopsided_start() {
        let ch = noiseless(3, 0.5);
        let mut cfg = SolverConfig::new(0.5);
        cfg.init = Init::Custom(ProbVector::new(vec![0.5, 0.3, 0.2]).unwrap());
        cfg.tol = 1e-10;
        let r = solve(&ch, &cfg).unwrap();
        assert_eq!(r.stop_reason, StopReason::Tolerance);
        assert!((r.capacity - 3.0f64.ln()).abs() <= 1e-8, "{}", r.capacity);
        assert!(r.iterations > 0);
        // Iterate feasibility at the end; trace t strictly increasing.
        assert!(r.p_final.min_value() >= r.delta_floor - 1e-15);
        for w in r.trace.windows(2) {
            assert!(w[1].t > w[0].t);
        }
    }

    #[test]
    fn constant_mode_descends_before_safeguard() {
        let ch = random(4, 3, 0.4, 9);
        let mut cfg = SolverConfig::new(0.4);
        cfg.stepsize_mode = StepsizeMode::Constant;
        cfg.max_iters = 200;
        cfg.tol = 1e-13;
        let r = solve(&ch, &cfg).unwrap();
        for w in r.trace.windows(2) {
            let s_prev = w[0].s;
            let s_pre = w[1].s_pre.unwrap();
            assert!(
                s_pre - s_prev <= 1e-12,
                "ascent at t = {}: {} -> {}",
                w[1].t,
                s_prev,
                s_pre
            );
        }
    }

    #[test]
    fn adaptive_and_constant_agree() {
        // beta = 2.5 keeps the global smoothness constant in play, so the
        // constant-stepsize run converges in a reasonable budget too.
        let ch = random(5, 4, 0.4, 21);
        let mut c1 = SolverConfig::new(0.4);
        c1.stepsize_mode = StepsizeMode::Constant;
        c1.tol = 1e-9;
        let mut c2 = SolverConfig::new(0.4);
        c2.stepsize_mode = StepsizeMode::Adaptive;
        c2.tol = 1e-9;
        let r1 = solve(&ch, &c1).unwrap();
        let r2 = solve(&ch, &c2).unwrap();
        assert_eq!(r1.stop_reason, StopReason::Tolerance);
        assert_eq!(r2.stop_reason, StopReason::Tolerance);
        assert!((r1.capacity - r2.capacity).abs() <= 1e-7);
    }

    #[test]
    fn adaptive_stepsize_accepts_at_least_baseline() {
        let ch = noiseless(2, 0.5);
        let p = ProbVector::new(vec![0.6, 0.4]).unwrap();
        let (s, grad) = objective_and_gradient(&ch, &p).unwrap();
        // L = 2 here; the ladder starting at 1/L must keep a stepsize at
        // least as large.
        let step = adaptive_stepsize(&ch, &p, &grad, s, 0.5, 0.5).unwrap();
        assert!(step.eta >= 0.5);
        // An absurd base gets cut down (or falls back) to a valid step.
        let step = adaptive_stepsize(&ch, &p, &grad, s, 1e6, 0.5).unwrap();
        let ok = descent_check(&ch, &p, &grad, s, step.eta).unwrap().is_some()
            || step.eta == 0.5;
        assert!(ok, "eta = {}", step.eta);
    }

    #[test]
    fn single_input_channel_is_immediate() {
        let ch = random(1, 3, 0.6, 4);
        let r = solve(&ch, &SolverConfig::new(0.6)).unwrap();
        assert_eq!(r.iterations, 0);
        assert!(r.capacity.abs() <= 1e-7, "{}", r.capacity);
        assert_eq!(r.gap_final, 0.0);
    }

    #[test]
    fn max_iters_stop_is_reported() {
        let ch = random(4, 3, 0.4, 2);
        let mut cfg = SolverConfig::new(0.4);
        cfg.tol = 1e-18;
        cfg.max_iters = 5;
        let r = solve(&ch, &cfg).unwrap();
        assert_eq!(r.stop_reason, StopReason::MaxIters);
        assert_eq!(r.iterations, 5);
        assert!(r.gap_final >= -1e-12);
    }

    #[test]
    fn trace_every_subsamples_and_keeps_final() {
        let ch = random(4, 3, 0.4, 2);
        let mut cfg = SolverConfig::new(0.4);
        cfg.tol = 1e-18;
        cfg.max_iters = 25;
        cfg.trace_every = 10;
        let r = solve(&ch, &cfg).unwrap();
        let ts: Vec<usize> = r.trace.iter().map(|rec| rec.t).collect();
        assert_eq!(ts, vec![0, 10, 20, 25]);
        cfg.trace_every = 0;
        let r = solve(&ch, &cfg).unwrap();
        assert!(r.trace.is_empty());
    }

    #[test]
    fn config_validation_rejects_bad_inputs() {
        let ch = noiseless(2, 0.5);
        let mut cfg = SolverConfig::new(0.5);
        cfg.tol = 0.0;
        assert!(solve(&ch, &cfg).is_err());
        let mut cfg = SolverConfig::new(0.5);
        cfg.max_iters = 0;
        assert!(solve(&ch, &cfg).is_err());
        let cfg = SolverConfig::new(0.4);
        assert!(matches!(
            solve(&ch, &cfg).unwrap_err(),
            Error::InvalidConfig { .. }
        ));
        let mut cfg = SolverConfig::new(0.5);
        cfg.delta_floor = 0.6;
        assert!(solve(&ch, &cfg).is_err());
        let mut cfg = SolverConfig::new(0.5);
        cfg.eta = EtaRule::Fixed(-1.0);
        assert!(solve(&ch, &cfg).is_err());
        let mut cfg = SolverConfig::new(0.5);
        cfg.init = Init::Custom(ProbVector::uniform(3));
        assert!(solve(&ch, &cfg).is_err());
        let mut cfg = SolverConfig::new(0.5);
        cfg.init = Init::Custom(ProbVector::new(vec![1.0, 0.0]).unwrap());
        assert!(solve(&ch, &cfg).is_err());
        // beta < 2 with automatic stepsize needs a positive floor.
        let ch = noiseless(2, 0.8);
        let mut cfg = SolverConfig::new(0.8);
        cfg.delta_floor = 0.0;
        assert!(matches!(
            solve(&ch, &cfg).unwrap_err(),
            Error::InvalidConfig { .. }
        ));
    }

    #[test]
    fn kl_contraction_on_symmetric_instance() {
        // Theorem-rate smoke check; the acceptance suite runs the full
        // version. Noiseless n = 2, alpha = 0.5, delta = 1e-3, constant
        // eta = 1/L: KL(p* || p^t) contracts by at least 1 - mu/L per step.
        let ch = noiseless(2, 0.5);
        let delta = 1e-3;
        let l = smoothness_l(&ch, delta).unwrap();
        let mu = strong_convexity_mu(&ch, delta).unwrap();
        let p_star = ProbVector::<f64>::uniform(2);
        let mut cfg = SolverConfig::new(0.5);
        cfg.stepsize_mode = StepsizeMode::Constant;
        cfg.eta = EtaRule::Fixed(1.0 / l);
        cfg.delta_floor = delta;
        cfg.init = Init::Custom(ProbVector::new(vec![0.7, 0.3]).unwrap());
        cfg.tol = 1e-15;
        cfg.max_iters = 60;
        let r = solve(&ch, &cfg).unwrap();
        let mut prev_p = ProbVector::new(vec![0.7, 0.3]).unwrap();
        let mut checked = 0;
        for rec in &r.trace[1..] {
            // Reconstruct iterates from the trace is not possible; instead
            // re-run the recursion manually to compare KL values.
            let (_, grad) = objective_and_gradient(&ch, &prev_p).unwrap();
            let next = safeguard(&md_step_with_grad(&prev_p, &grad, 1.0 / l), delta);
            let kl_prev = kl_divergence(&p_star, &prev_p).unwrap();
            let kl_next = kl_divergence(&p_star, &next).unwrap();
            if kl_prev > 1e-14 {
                assert!(
                    kl_next / kl_prev <= 1.0 - mu / l + 1e-6,
                    "t = {}: ratio {}",
                    rec.t,
                    kl_next / kl_prev
                );
                checked += 1;
            }
            prev_p = next;
        }
        assert!(checked > 5);
    }
}
