//! Optimality diagnostics: the duality-gap certificate and the
//! Kullback-Leibler divergence.
//!
//! For convex `S` on the simplex, every feasible `q` satisfies
//! `<grad S(p), q> >= min_x [grad S(p)]_x`, so
//!
//! ```text
//! S(p) - S(p*) <= <grad S(p), p> - min_x [grad S(p)]_x =: gap(p)
//! ```
//!
//! is a computable upper bound on the suboptimality of `p` that needs no
//! knowledge of the optimum. It vanishes exactly at minimizers, which makes
//! it the solver's stopping certificate: whatever path the iterates took,
//! `gap(p) <= tol` proves `S(p)` is within `tol` of the true minimum.

use crate::channel::PreparedChannel;
use crate::error::{Error, Result};
use crate::objective::{objective_and_gradient, ProbVector};
use crate::scalar::RealScalar;

/// One duality-gap evaluation.
#[derive(Clone, Debug)]
pub struct GapReport<T: RealScalar> {
    /// `<grad S(p), p> - min_x [grad S(p)]_x`, nonnegative up to round-off.
    pub gap: T,
    /// `<grad S(p), p>`; equals `beta S(p)` by homogeneity.
    pub inner_product: T,
    /// Smallest gradient component.
    pub min_grad: T,
    /// Index attaining the smallest component (first on ties).
    pub argmin_x: usize,
}

/// Evaluates the duality gap at `p`, including the gradient computation.
pub fn duality_gap<T: RealScalar>(
    ch: &PreparedChannel<T>,
    p: &ProbVector<T>,
) -> Result<GapReport<T>> {
    let (_, grad) = objective_and_gradient(ch, p)?;
    Ok(gap_from_grad(p, &grad))
}

/// Gap from an already-computed gradient; shared with the solver loop so the
/// certificate costs nothing extra per iteration.
pub(crate) fn gap_from_grad<T: RealScalar>(p: &ProbVector<T>, grad: &[T]) -> GapReport<T> {
    debug_assert_eq!(p.len(), grad.len());
    let mut inner = T::zero();
    let mut min_grad = grad[0];
    let mut argmin_x = 0usize;
    for (x, (&g, &px)) in grad.iter().zip(p.values()).enumerate() {
        inner += g * px;
        if g < min_grad {
            min_grad = g;
            argmin_x = x;
        }
    }
    GapReport {
        gap: inner - min_grad,
        inner_product: inner,
        min_grad,
        argmin_x,
    }
}

/// `KL(p || q) = sum_x p_x ln(p_x / q_x)` with the conventions `0 ln 0 = 0`
/// and `KL = +inf` when `p` puts mass where `q` has none. Callers detect the
/// support violation through `is_infinite` on the result; safeguarded solver
/// iterates always stay strictly positive, so the sentinel never appears on
/// the solve path.
pub fn kl_divergence<T: RealScalar>(p: &ProbVector<T>, q: &ProbVector<T>) -> Result<T> {
    if p.len() != q.len() {
        return Err(Error::DimMismatch {
            expected: p.len(),
            got: q.len(),
        });
    }
    let mut acc = T::zero();
    for (&px, &qx) in p.values().iter().zip(q.values()) {
        if px > T::zero() {
            if qx <= T::zero() {
                return Ok(T::pos_infinity());
            }
            acc += px * (px / qx).ln();
        }
    }
    // Round-off can push a mathematically nonnegative sum slightly below
    // zero when p and q are very close; clamp so Pinsker-style consumers
    // never see a negative divergence.
    Ok(acc.max(T::zero()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{gen_noiseless_channel, gen_random_channel, PreparedChannel};

    const TOL: f64 = 1e-12;

    fn prepared(n: usize, d: usize, alpha: f64, seed: u64) -> PreparedChannel<f64> {
        PreparedChannel::prepare(gen_random_channel(n, d, 1e-2, seed).unwrap(), alpha).unwrap()
    }

    #[test]
    fn gap_hand_values_noiseless() {
        // n = 2, alpha = 0.5: at the vertex grad = (2, 0), so the gap is 2;
        // at uniform grad = (1, 1) and the gap vanishes.
        let ch =
            PreparedChannel::prepare(gen_noiseless_channel::<f64>(2).unwrap(), 0.5).unwrap();
        let vertex = ProbVector::new(vec![1.0, 0.0]).unwrap();
        let r = duality_gap(&ch, &vertex).unwrap();
        assert!((r.gap - 2.0).abs() <= TOL, "{}", r.gap);
        assert!((r.inner_product - 2.0).abs() <= TOL);
        assert!(r.min_grad.abs() <= TOL);
        assert_eq!(r.argmin_x, 1);

        let r = duality_gap(&ch, &ProbVector::uniform(2)).unwrap();
        assert!(r.gap.abs() <= TOL, "{}", r.gap);
    }

    #[test]
    fn gap_is_nonnegative_and_bounds_suboptimality() {
        // The gap at p must dominate S(p) - S(q) for any feasible q.
        let ch = prepared(5, 3, 0.4, 7);
        let p = ProbVector::normalized(vec![5.0, 1.0, 2.0, 1.0, 1.0]).unwrap();
        let r = duality_gap(&ch, &p).unwrap();
        assert!(r.gap >= -1e-12);
        let s_p = crate::objective::objective_s(&ch, &p).unwrap();
        for q in [
            ProbVector::uniform(5),
            ProbVector::normalized(vec![1.0, 3.0, 1.0, 4.0, 1.0]).unwrap(),
        ] {
            let s_q = crate::objective::objective_s(&ch, &q).unwrap();
            assert!(s_p - s_q <= r.gap + 1e-12);
        }
    }

    #[test]
    fn gap_ties_pick_first_index() {
        let p = ProbVector::uniform(3);
        let r = gap_from_grad(&p, &[2.0, 1.0, 1.0]);
        assert_eq!(r.argmin_x, 1);
    }

    #[test]
    fn kl_hand_values() {
        let p = ProbVector::uniform(2);
        let q = ProbVector::new(vec![0.25, 0.75]).unwrap();
        let kl = kl_divergence(&p, &q).unwrap();
        let want = 0.5 * (4.0f64 / 3.0).ln();
        assert!((kl - want).abs() <= TOL, "{kl} vs {want}");
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn kl_support_violation_is_infinite() {
        let p = ProbVector::<f64>::new(vec![0.5, 0.5]).unwrap();
        let q = ProbVector::new(vec![1.0, 0.0]).unwrap();
        assert!(kl_divergence(&p, &q).unwrap().is_infinite());
        // Reverse direction is finite: q is absolutely continuous w.r.t. p.
        assert!((kl_divergence(&q, &p).unwrap() - 2.0f64.ln()).abs() <= TOL);
    }

    #[test]
    fn kl_respects_pinsker() {
        for seed in 0..20u64 {
            let a = seed as f64 + 1.0;
            let p = ProbVector::normalized(vec![a, 2.0, 3.0]).unwrap();
            let q = ProbVector::normalized(vec![1.0, a, 2.0]).unwrap();
            let kl: f64 = kl_divergence(&p, &q).unwrap();
            let l1: f64 = p
                .values()
                .iter()
                .zip(q.values())
                .map(|(x, y)| (x - y).abs())
                .sum();
            assert!(kl >= 0.5 * l1 * l1 - 1e-12, "seed {seed}");
        }
    }

    #[test]
    fn kl_dim_mismatch_errors() {
        let p = ProbVector::<f64>::uniform(2);
        let q = ProbVector::<f64>::uniform(3);
        assert!(kl_divergence(&p, &q).is_err());
    }
}
