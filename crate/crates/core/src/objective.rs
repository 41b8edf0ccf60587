//! The trace-power objective `S(p) = Tr[M(p)^beta]` and its calculus.
//!
//! With `A_x = W_x^alpha`, `M(p) = sum_x p_x A_x`, and `beta = 1/alpha > 1`:
//!
//! * `S` is convex on the simplex, takes values in (0, 1], and the capacity
//!   is `(alpha/(alpha-1)) ln(min_p S(p))`.
//! * The gradient is `[grad S(p)]_x = beta Tr[M(p)^(beta-1) A_x]`, which
//!   satisfies the homogeneity identity `<p, grad S(p)> = beta S(p)`.
//! * The exact second directional derivative follows the Daleckii-Krein
//!   formula: in the eigenbasis of `M(p)` with eigenvalues `lam_i`,
//!
//!   ```text
//!   D^2 S[p](h, h) = beta * sum_ij g(lam_i, lam_j) |H~_ij|^2,
//!   H~ = U* (sum_x h_x A_x) U,
//!   g(a, b) = (a^(beta-1) - b^(beta-1)) / (a - b),  g(a, a) = (beta-1) a^(beta-2),
//!   ```
//!
//!   the first divided difference of `t -> t^(beta-1)`.
//!
//! The curvature constants exported here bound that form from both sides in
//! the local norm `sum_x h_x^2 / p_x`: smoothness `L` (global for
//! `beta >= 2`, floor-dependent `L_delta` otherwise) and strong convexity
//! `mu` on the shrunken simplex `Delta_delta = {p : p_x >= delta}`. They
//! drive the solver's stepsize and its linear-rate certificate.

use crate::consts::{DD_SWITCH, EIG_FLOOR, PROB_TOL};
use crate::channel::PreparedChannel;
use crate::error::{Error, Result};
use crate::scalar::{real, RealScalar};
use crate::spectral::{scalar_power, trace_product, HermitianOperator};

/// Probability vector on the input alphabet: nonnegative entries summing to
/// one within [`PROB_TOL`], renormalized exactly on construction.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbVector<T: RealScalar> {
    values: Vec<T>,
}

impl<T: RealScalar> ProbVector<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidProbability {
                reason: "probability vector must be nonempty".into(),
            });
        }
        let mut sum = T::zero();
        for (x, &v) in values.iter().enumerate() {
            if v < T::zero() || !v.finite() {
                return Err(Error::InvalidProbability {
                    reason: format!("entry {x} is {}", v.to_f64().unwrap_or(f64::NAN)),
                });
            }
            sum += v;
        }
        if (sum - T::one()).abs() > real(PROB_TOL) {
            return Err(Error::InvalidProbability {
                reason: format!(
                    "entries sum to {}, expected 1 within {PROB_TOL:.0e}",
                    sum.to_f64().unwrap_or(f64::NAN)
                ),
            });
        }
        Ok(Self::renormalize(values, sum))
    }

    /// Relaxed constructor: any nonnegative vector with positive sum,
    /// rescaled to the simplex. Convenient for sampled interior points.
    pub fn normalized(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidProbability {
                reason: "probability vector must be nonempty".into(),
            });
        }
        let mut sum = T::zero();
        for (x, &v) in values.iter().enumerate() {
            if v < T::zero() || !v.finite() {
                return Err(Error::InvalidProbability {
                    reason: format!("entry {x} is {}", v.to_f64().unwrap_or(f64::NAN)),
                });
            }
            sum += v;
        }
        if sum <= T::zero() {
            return Err(Error::InvalidProbability {
                reason: "entries sum to zero".into(),
            });
        }
        Ok(Self::renormalize(values, sum))
    }

    fn renormalize(mut values: Vec<T>, sum: T) -> Self {
        for v in values.iter_mut() {
            *v /= sum;
        }
        Self { values }
    }

    pub fn uniform(n: usize) -> Self {
        let v = T::one() / real(n as f64);
        Self {
            values: vec![v; n],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn get(&self, x: usize) -> T {
        self.values[x]
    }

    pub fn min_value(&self) -> T {
        self.values
            .iter()
            .copied()
            .fold(T::one(), |acc, v| acc.min(v))
    }
}

/// Tangent direction to the simplex: components summing to zero within
/// [`PROB_TOL`].
#[derive(Clone, Debug)]
pub struct TangentVector<T: RealScalar> {
    values: Vec<T>,
}

impl<T: RealScalar> TangentVector<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        let mut sum = T::zero();
        for &v in &values {
            sum += v;
        }
        if sum.abs() > real(PROB_TOL) {
            return Err(Error::NotTangent {
                sum: sum.to_f64().unwrap_or(f64::NAN),
                tol: PROB_TOL,
            });
        }
        Ok(Self { values })
    }

    /// Projects an arbitrary vector onto the tangent space by subtracting
    /// its mean.
    pub fn projected(values: Vec<T>) -> Self {
        let n = values.len();
        let mut mean = T::zero();
        for &v in &values {
            mean += v;
        }
        mean /= real(n as f64);
        Self {
            values: values.into_iter().map(|v| v - mean).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }
}

/// `M(p) = sum_x p_x A_x`, positive semidefinite on the simplex and bounded
/// below by `delta * sum_x A_x` on `Delta_delta`.
pub fn mix<T: RealScalar>(
    ch: &PreparedChannel<T>,
    p: &ProbVector<T>,
) -> Result<HermitianOperator<T>> {
    mix_weights(ch, p.values())
}

/// Mixture for arbitrary nonnegative weights: the degree-one extension of
/// `mix` off the simplex, shared by the finite-difference oracles.
pub(crate) fn mix_weights<T: RealScalar>(
    ch: &PreparedChannel<T>,
    weights: &[T],
) -> Result<HermitianOperator<T>> {
    if weights.len() != ch.alphabet_size() {
        return Err(Error::DimMismatch {
            expected: ch.alphabet_size(),
            got: weights.len(),
        });
    }
    HermitianOperator::weighted_sum(ch.powered_states(), weights)
}

/// `S(p) = Tr[M(p)^beta]`, evaluated from the eigenvalues of the mixture.
/// Round-off eigenvalues below the floor are treated as zero.
pub fn objective_s<T: RealScalar>(ch: &PreparedChannel<T>, p: &ProbVector<T>) -> Result<T> {
    objective_s_weights(ch, p.values())
}

/// Degree-beta homogeneous extension of `S` to the nonnegative cone.
pub(crate) fn objective_s_weights<T: RealScalar>(
    ch: &PreparedChannel<T>,
    weights: &[T],
) -> Result<T> {
    let m = mix_weights(ch, weights)?;
    let eigs = m.eigenvalues()?;
    let beta = ch.beta();
    let mut s = T::zero();
    for lam in eigs {
        s += scalar_power(lam, beta)?;
    }
    Ok(s)
}

/// Capacity from the minimal trace power:
/// `C = (alpha / (alpha - 1)) ln(s_min)`, nonnegative on (0, 1].
pub fn capacity_from_s<T: RealScalar>(alpha: T, s_min: T) -> Result<T> {
    let a = alpha.to_f64().unwrap_or(f64::NAN);
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::AlphaOutOfRange { alpha: a });
    }
    let s = s_min.to_f64().unwrap_or(f64::NAN);
    if !(s > 0.0 && s <= 1.0 + 1e-9) {
        return Err(Error::InvalidConfig {
            reason: format!("s_min = {s} must lie in (0, 1]"),
        });
    }
    Ok(alpha / (alpha - T::one()) * s_min.ln())
}

/// `S(p)` and its gradient `[grad S]_x = beta Tr[M^(beta-1) A_x]` from one
/// shared eigendecomposition.
///
/// For `beta < 2` the power `beta - 1` is fractional in (0, 1) and the
/// mixture must be positive definite above the eigenvalue floor; for
/// `beta >= 2` round-off negatives are clamped to zero and singular
/// mixtures (vertices of noiseless channels) stay in-domain.
pub fn objective_and_gradient<T: RealScalar>(
    ch: &PreparedChannel<T>,
    p: &ProbVector<T>,
) -> Result<(T, Vec<T>)> {
    let beta = ch.beta();
    let m = mix(ch, p)?;
    let dec = m.eigh()?;
    if beta < real(2.0) {
        let min_eig = dec.min_eigenvalue();
        if min_eig <= real(EIG_FLOOR) {
            return Err(Error::NotPositiveDefinite {
                min_eig: min_eig.to_f64().unwrap_or(f64::NAN),
                floor: EIG_FLOOR,
            });
        }
    }
    let mut s = T::zero();
    for &lam in dec.eigenvalues() {
        s += scalar_power(lam.max(T::zero()), beta)?;
    }
    let bm1 = beta - T::one();
    let power = dec.try_apply(|lam| scalar_power(lam.max(T::zero()), bm1))?;
    let mut grad = Vec::with_capacity(ch.alphabet_size());
    for x in 0..ch.alphabet_size() {
        grad.push(beta * trace_product(&power, ch.powered(x))?);
    }
    Ok((s, grad))
}

/// Gradient of `S` at `p`; see [`objective_and_gradient`].
pub fn gradient<T: RealScalar>(ch: &PreparedChannel<T>, p: &ProbVector<T>) -> Result<Vec<T>> {
    Ok(objective_and_gradient(ch, p)?.1)
}

/// First divided difference of `t -> t^(beta-1)` on positive eigenvalues:
///
/// ```text
/// g(a, b) = (a^(beta-1) - b^(beta-1)) / (a - b)        a != b,
/// g(a, a) = (beta-1) a^(beta-2).
/// ```
///
/// Pairs closer than [`DD_SWITCH`] relative to the larger value use the
/// midpoint derivative `(beta-1) ((a+b)/2)^(beta-2)`. Wider pairs use the
/// cancellation-free product form `max^(beta-2) * expm1((beta-1) log1p(u))/u`
/// with `u = min/max - 1`, which keeps the kernel accurate to a few ulps
/// even just above the switch, where the naive ratio loses nine digits.
pub fn divided_difference_g<T: RealScalar>(lam_i: T, lam_j: T, beta: T) -> Result<T> {
    let beta64 = beta.to_f64().unwrap_or(f64::NAN);
    if !(beta64 > 1.0) {
        return Err(Error::BetaOutOfRange { beta: beta64 });
    }
    let a = lam_i.to_f64().unwrap_or(f64::NAN);
    let b = lam_j.to_f64().unwrap_or(f64::NAN);
    if !(a > 0.0) || !(b > 0.0) {
        return Err(Error::PowerDomain {
            eigenvalue: a.min(b),
            exponent: beta64 - 1.0,
            floor: 0.0,
        });
    }
    let hi = a.max(b);
    let lo = a.min(b);
    let value = if hi - lo <= DD_SWITCH * hi {
        (beta64 - 1.0) * ((a + b) / 2.0).powf(beta64 - 2.0)
    } else {
        let u = lo / hi - 1.0;
        hi.powf(beta64 - 2.0) * ((beta64 - 1.0) * u.ln_1p()).exp_m1() / u
    };
    Ok(real(value))
}

/// Exact second directional derivative `D^2 S[p](h, h)` via the
/// Daleckii-Krein form in the eigenbasis of `M(p)`. Requires the mixture
/// positive definite above the floor for every `beta` (the kernel touches
/// exponent `beta - 2`).
pub fn hessian_quadratic_form<T: RealScalar>(
    ch: &PreparedChannel<T>,
    p: &ProbVector<T>,
    h: &TangentVector<T>,
) -> Result<T> {
    if h.len() != ch.alphabet_size() {
        return Err(Error::DimMismatch {
            expected: ch.alphabet_size(),
            got: h.len(),
        });
    }
    let m = mix(ch, p)?;
    let dec = m.eigh()?;
    let min_eig = dec.min_eigenvalue();
    if min_eig <= real(EIG_FLOOR) {
        return Err(Error::NotPositiveDefinite {
            min_eig: min_eig.to_f64().unwrap_or(f64::NAN),
            floor: EIG_FLOOR,
        });
    }
    let direction = HermitianOperator::weighted_sum(ch.powered_states(), h.values())?;
    let in_basis = dec.into_basis(&direction)?;
    let lams = dec.eigenvalues();
    let beta = ch.beta();
    let d = lams.len();
    let mut acc = T::zero();
    for i in 0..d {
        for j in 0..d {
            let g = divided_difference_g(lams[i], lams[j], beta)?;
            acc += g * in_basis[(i, j)].norm_sqr();
        }
    }
    Ok(beta * acc)
}

/// Kernel constant of the smoothness bound:
/// `1/2` on `(1, 2] U [3, inf)`, `2^(2-beta)` on `(2, 3)`.
pub fn c_beta<T: RealScalar>(beta: T) -> Result<T> {
    let b = beta.to_f64().unwrap_or(f64::NAN);
    if !(b > 1.0) {
        return Err(Error::BetaOutOfRange { beta: b });
    }
    if b <= 2.0 || b >= 3.0 {
        Ok(real(0.5))
    } else {
        Ok(real((2.0f64).powf(2.0 - b)))
    }
}

/// Relative-smoothness constant of `S` with respect to negative entropy:
///
/// * `beta >= 2`: `L = 2 c_beta beta (beta - 1)`, valid on the whole simplex;
/// * `1 < beta < 2`: `L_delta = 2 c_beta beta (beta-1) m_delta^(beta-2)` with
///   `m_delta = delta * lambda_min(sum_x A_x)`, valid on `Delta_delta`.
pub fn smoothness_l<T: RealScalar>(ch: &PreparedChannel<T>, delta: T) -> Result<T> {
    validate_delta(ch.alphabet_size(), delta)?;
    let beta = ch.beta();
    let c = c_beta(beta)?;
    let base = real::<T>(2.0) * c * beta * (beta - T::one());
    if beta >= real(2.0) {
        Ok(base)
    } else {
        let m_delta = delta * ch.a_sum_min_eig();
        Ok(base * m_delta.powf(beta - real(2.0)))
    }
}

/// Smallest eigenvalue of the Gram matrix `G_xy = Tr[A_x A_y]` restricted to
/// the tangent space `{h : sum h = 0}` (Helmert orthonormal basis).
///
/// Nonnegative up to eigensolver round-off; strictly positive exactly when
/// `x -> A_x` is injective on tangent directions. For `n = 1` the tangent
/// space is trivial and the value is 0 by convention.
pub fn gram_gamma<T: RealScalar>(ch: &PreparedChannel<T>) -> Result<T> {
    let n = ch.alphabet_size();
    if n == 1 {
        return Ok(T::zero());
    }
    let mut gram = vec![vec![T::zero(); n]; n];
    for x in 0..n {
        for y in x..n {
            let v = trace_product(ch.powered(x), ch.powered(y))?;
            gram[x][y] = v;
            gram[y][x] = v;
        }
    }
    // Helmert columns b_k, k = 1..n-1: k leading entries 1/sqrt(k(k+1)),
    // then -k/sqrt(k(k+1)), then zeros; orthonormal and spanning the
    // tangent space.
    let mut basis = vec![vec![T::zero(); n - 1]; n];
    for k in 1..n {
        let denom = real::<T>((k as f64) * (k as f64 + 1.0)).sqrt();
        for x in 0..k {
            basis[x][k - 1] = T::one() / denom;
        }
        basis[k][k - 1] = -real::<T>(k as f64) / denom;
    }
    // G_T = B^T G B, symmetric (n-1) x (n-1).
    let mut gb = vec![vec![T::zero(); n - 1]; n];
    for x in 0..n {
        for l in 0..n - 1 {
            let mut acc = T::zero();
            for y in 0..n {
                acc += gram[x][y] * basis[y][l];
            }
            gb[x][l] = acc;
        }
    }
    let mut restricted = vec![T::zero(); (n - 1) * (n - 1)];
    for k in 0..n - 1 {
        for l in 0..n - 1 {
            let mut acc = T::zero();
            for x in 0..n {
                acc += basis[x][k] * gb[x][l];
            }
            restricted[k * (n - 1) + l] = acc;
        }
    }
    let mat = nalgebra::DMatrix::from_fn(n - 1, n - 1, |i, j| {
        nalgebra::Complex::new(restricted[i * (n - 1) + j], T::zero())
    });
    let op = HermitianOperator::new(mat)?;
    Ok(op.eigenvalues()?[0])
}

/// Relative strong-convexity constant of `S` on `Delta_delta`:
///
/// * `1 < beta <= 2`: `mu = beta (beta-1) gamma delta`;
/// * `beta > 2`: `mu = beta (beta-1) m_delta^(beta-2) gamma delta`.
///
/// `gamma` is clamped at zero (tiny negatives are round-off), so channels
/// with duplicated states report `mu = 0` and no linear rate is claimed.
pub fn strong_convexity_mu<T: RealScalar>(ch: &PreparedChannel<T>, delta: T) -> Result<T> {
    validate_delta(ch.alphabet_size(), delta)?;
    let beta = ch.beta();
    let gamma = gram_gamma(ch)?.max(T::zero());
    let base = beta * (beta - T::one()) * gamma * delta;
    if beta <= real(2.0) {
        Ok(base)
    } else {
        let m_delta = delta * ch.a_sum_min_eig();
        Ok(base * m_delta.powf(beta - real(2.0)))
    }
}

/// The constants of one analysis: everything the stepsize and the rate
/// certificates need, computed at a single floor `delta`.
#[derive(Clone, Debug)]
pub struct CurvatureConstants<T: RealScalar> {
    pub alpha: T,
    pub beta: T,
    pub delta: T,
    pub c_beta: T,
    /// `m_delta = delta * lambda_min(sum_x A_x)`.
    pub m_delta: T,
    /// Smoothness constant (`L` for `beta >= 2`, `L_delta` otherwise).
    pub smoothness_l: T,
    /// Tangent-restricted Gram floor, clamped at zero.
    pub gamma: T,
    /// Strong-convexity constant on `Delta_delta`; `mu <= smoothness_l`.
    pub mu: T,
}

/// Computes all curvature constants at `delta`, checking `mu <= L`.
pub fn curvature_constants<T: RealScalar>(
    ch: &PreparedChannel<T>,
    delta: T,
) -> Result<CurvatureConstants<T>> {
    validate_delta(ch.alphabet_size(), delta)?;
    let beta = ch.beta();
    let l = smoothness_l(ch, delta)?;
    let gamma = gram_gamma(ch)?.max(T::zero());
    let mu = strong_convexity_mu(ch, delta)?;
    if mu > l * (T::one() + real(1e-12)) + real(1e-12) {
        return Err(Error::InvalidConfig {
            reason: format!(
                "strong convexity mu = {} exceeds smoothness L = {}",
                mu.to_f64().unwrap_or(f64::NAN),
                l.to_f64().unwrap_or(f64::NAN)
            ),
        });
    }
    Ok(CurvatureConstants {
        alpha: ch.alpha(),
        beta,
        delta,
        c_beta: c_beta(beta)?,
        m_delta: delta * ch.a_sum_min_eig(),
        smoothness_l: l,
        gamma,
        mu,
    })
}

pub(crate) fn validate_delta<T: RealScalar>(n: usize, delta: T) -> Result<()> {
    let d = delta.to_f64().unwrap_or(f64::NAN);
    let cap = 1.0 / n as f64;
    if !(d > 0.0 && d <= cap) {
        return Err(Error::DeltaOutOfRange {
            delta: d,
            n,
            range: "(0, 1/n]",
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{gen_noiseless_channel, gen_random_channel, PreparedChannel};

    const TOL: f64 = 1e-12;

    fn noiseless(n: usize, alpha: f64) -> PreparedChannel<f64> {
        PreparedChannel::prepare(gen_noiseless_channel(n).unwrap(), alpha).unwrap()
    }

    fn random(n: usize, d: usize, alpha: f64, seed: u64) -> PreparedChannel<f64> {
        PreparedChannel::prepare(gen_random_channel(n, d, 1e-2, seed).unwrap(), alpha).unwrap()
    }

    #[test]
    fn uniform_noiseless_objective_is_closed_form() {
        // S(uniform) = n^(1-beta); alpha = 0.5, n = 2 gives exactly 1/2.
        let ch = noiseless(2, 0.5);
        let p = ProbVector::uniform(2);
        let s = objective_s(&ch, &p).unwrap();
        assert!((s - 0.5).abs() <= TOL, "{s}");
        for (n, alpha) in [(3usize, 0.3f64), (4, 0.7), (5, 0.25)] {
            let ch = noiseless(n, alpha);
            let s = objective_s(&ch, &ProbVector::uniform(n)).unwrap();
            let want = (n as f64).powf(1.0 - 1.0 / alpha);
            assert!((s - want).abs() <= 1e-10, "n={n} alpha={alpha}: {s} vs {want}");
        }
    }

    #[test]
    fn vertex_objective_is_one() {
        let ch = random(4, 3, 0.4, 11);
        let p = ProbVector::new(vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        let s = objective_s(&ch, &p).unwrap();
        assert!((s - 1.0).abs() <= 1e-10, "{s}");
    }

    #[test]
    fn gradient_hand_values_noiseless() {
        // alpha = 0.5 (beta = 2): grad_x = 2 Tr[M A_x]; at uniform M = I/2,
        // so grad = (1, 1); at the vertex e_1, grad = (2, 0).
        let ch = noiseless(2, 0.5);
        let (s, g) = objective_and_gradient(&ch, &ProbVector::uniform(2)).unwrap();
        assert!((s - 0.5).abs() <= TOL);
        assert!((g[0] - 1.0).abs() <= TOL && (g[1] - 1.0).abs() <= TOL, "{g:?}");
        let vertex = ProbVector::new(vec![1.0, 0.0]).unwrap();
        let (s, g) = objective_and_gradient(&ch, &vertex).unwrap();
        assert!((s - 1.0).abs() <= TOL);
        assert!((g[0] - 2.0).abs() <= TOL && g[1].abs() <= TOL, "{g:?}");
    }

    #[test]
    fn gradient_needs_positive_mixture_below_beta_two() {
        // beta = 1.25: M^(beta-1) has a fractional exponent in (0,1) and the
        // contract demands a positive definite mixture.
        let ch = noiseless(2, 0.8);
        let vertex = ProbVector::new(vec![1.0, 0.0]).unwrap();
        let err = objective_and_gradient(&ch, &vertex).unwrap_err();
        assert!(matches!(err, Error::NotPositiveDefinite { .. }), "{err}");
    }

    #[test]
    fn euler_identity_holds() {
        for seed in 0..5u64 {
            for alpha in [0.25, 0.5, 0.8] {
                let ch = random(5, 4, alpha, seed);
                let p = ProbVector::normalized(vec![1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
                let (s, g) = objective_and_gradient(&ch, &p).unwrap();
                let inner: f64 = g.iter().zip(p.values()).map(|(a, b)| a * b).sum();
                assert!(
                    (inner - s / alpha).abs() <= 1e-10,
                    "alpha={alpha} seed={seed}: {inner} vs {}",
                    s / alpha
                );
            }
        }
    }

    #[test]
    fn hessian_hand_value_noiseless() {
        // n = 2, alpha = 0.5, uniform p, h = (1, -1): the form equals 4.
        let ch = noiseless(2, 0.5);
        let h = TangentVector::new(vec![1.0, -1.0]).unwrap();
        let v = hessian_quadratic_form(&ch, &ProbVector::uniform(2), &h).unwrap();
        assert!((v - 4.0).abs() <= 1e-10, "{v}");
    }

    #[test]
    fn divided_difference_values() {
        // Equal arguments: derivative (beta-1) a^(beta-2).
        for beta in [1.5f64, 2.0, 2.5, 4.0] {
            let g: f64 = divided_difference_g(1.0, 1.0, beta).unwrap();
            assert!((g - (beta - 1.0)).abs() <= TOL, "beta={beta}: {g}");
        }
        // beta = 2: the kernel is identically 1.
        let g: f64 = divided_difference_g(0.3, 0.9, 2.0).unwrap();
        assert!((g - 1.0).abs() <= TOL);
        // beta = 3: g(a, b) = a + b.
        let g: f64 = divided_difference_g(4.0, 1.0, 3.0).unwrap();
        assert!((g - 5.0).abs() <= TOL);
        // Near-equal pair lands on the midpoint branch.
        let g: f64 = divided_difference_g(1.0, 1.0 + 1e-9, 2.5).unwrap();
        assert!((g - 1.5).abs() <= 1e-8, "{g}");
        // Domain errors.
        assert!(divided_difference_g(0.0, 1.0, 2.0).is_err());
        assert!(divided_difference_g(1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn divided_difference_is_stable_near_switch() {
        // Just above the switch the naive ratio loses ~9 digits; the product
        // form must stay at ulp-level agreement with the exact kernel.
        for beta in [2.0f64, 3.0] {
            for gap in [2e-7f64, 1e-6, 1e-4] {
                let a = 0.8;
                let b = a * (1.0 + gap);
                let g = divided_difference_g(a, b, beta).unwrap();
                let want = if beta == 2.0 { 1.0 } else { a + b };
                assert!(
                    (g - want).abs() <= 1e-13 * want.max(1.0),
                    "beta={beta} gap={gap}: {g} vs {want}"
                );
            }
        }
    }

    #[test]
    fn c_beta_branches() {
        assert_eq!(c_beta(1.25f64).unwrap(), 0.5);
        assert_eq!(c_beta(2.0f64).unwrap(), 0.5);
        assert_eq!(c_beta(3.0f64).unwrap(), 0.5);
        assert_eq!(c_beta(4.0f64).unwrap(), 0.5);
        let mid = c_beta(2.5f64).unwrap();
        assert!((mid - 2.0f64.powf(-0.5)).abs() <= TOL);
        assert!(mid > 0.5 && mid < 1.0);
        assert!(c_beta(1.0f64).is_err());
    }

    #[test]
    fn smoothness_values() {
        // beta >= 2: global constant 2 c_beta beta (beta-1).
        let ch = noiseless(2, 0.5);
        assert!((smoothness_l(&ch, 1e-3).unwrap() - 2.0).abs() <= TOL);
        let ch = noiseless(2, 0.25);
        assert!((smoothness_l(&ch, 1e-3).unwrap() - 12.0).abs() <= TOL);
        // beta = 1.25, delta = 0.1, noiseless: m_delta = 0.1 and
        // L = 0.3125 * 0.1^(-0.75).
        let ch = noiseless(2, 0.8);
        let l = smoothness_l(&ch, 0.1).unwrap();
        let want = 0.3125 * 0.1f64.powf(-0.75);
        assert!((l - want).abs() <= 1e-12, "{l} vs {want}");
        // delta range enforced.
        assert!(smoothness_l(&ch, 0.0).is_err());
        assert!(smoothness_l(&ch, 0.6).is_err());
    }

    #[test]
    fn gram_gamma_noiseless_is_one() {
        for n in [2usize, 3, 5] {
            let ch = noiseless(n, 0.5);
            let g = gram_gamma(&ch).unwrap();
            assert!((g - 1.0).abs() <= 1e-10, "n={n}: {g}");
        }
    }

    #[test]
    fn gram_gamma_vanishes_on_duplicated_states() {
        let base = gen_random_channel::<f64>(1, 3, 1e-2, 5).unwrap();
        let dup = crate::channel::CqChannel::new(vec![
            base.state(0).clone(),
            base.state(0).clone(),
        ])
        .unwrap();
        let ch = PreparedChannel::prepare(dup, 0.5).unwrap();
        let g = gram_gamma(&ch).unwrap();
        assert!(g.abs() <= 1e-10, "{g}");
        assert!(g >= -1e-12);
        let mu = strong_convexity_mu(&ch, 1e-2).unwrap();
        assert_eq!(mu, 0.0);
    }

    #[test]
    fn strong_convexity_hand_value() {
        // n = 2 noiseless, alpha = 0.25 (beta = 4), delta = 0.1:
        // mu = 4 * 3 * 0.1^2 * 1 * 0.1 = 0.012.
        let ch = noiseless(2, 0.25);
        let mu = strong_convexity_mu(&ch, 0.1).unwrap();
        assert!((mu - 0.012).abs() <= 1e-12, "{mu}");
    }

    #[test]
    fn constants_are_consistent() {
        for seed in 0..5u64 {
            for alpha in [0.25, 0.4, 0.5, 0.8] {
                let ch = random(6, 4, alpha, seed);
                let c = curvature_constants(&ch, 1e-3).unwrap();
                assert!(c.mu <= c.smoothness_l * (1.0 + 1e-12) + 1e-12);
                assert!(c.gamma >= 0.0);
                assert!(c.m_delta > 0.0);
                assert!(c.c_beta >= 0.5 && c.c_beta < 1.0);
            }
        }
    }

    #[test]
    fn capacity_identities() {
        assert!((capacity_from_s(0.5, 0.5).unwrap() - std::f64::consts::LN_2).abs() <= TOL);
        assert_eq!(capacity_from_s(0.5, 1.0).unwrap(), 0.0);
        let ch = noiseless(4, 0.3);
        let s = objective_s(&ch, &ProbVector::uniform(4)).unwrap();
        let c = capacity_from_s(0.3, s).unwrap();
        assert!((c - 4.0f64.ln()).abs() <= 1e-10, "{c}");
        assert!(capacity_from_s(0.5, 0.0).is_err());
        assert!(capacity_from_s(0.5, 1.5).is_err());
        assert!(capacity_from_s(1.0, 0.5).is_err());
    }

    #[test]
    fn convexity_midpoint_spot_check() {
        let ch = random(4, 3, 0.4, 3);
        let p = ProbVector::normalized(vec![1.0, 4.0, 2.0, 3.0]).unwrap();
        let q = ProbVector::normalized(vec![5.0, 1.0, 1.0, 3.0]).unwrap();
        let mid = ProbVector::normalized(
            p.values()
                .iter()
                .zip(q.values())
                .map(|(a, b)| (a + b) / 2.0)
                .collect(),
        )
        .unwrap();
        let s_mid = objective_s(&ch, &mid).unwrap();
        let avg = (objective_s(&ch, &p).unwrap() + objective_s(&ch, &q).unwrap()) / 2.0;
        assert!(s_mid <= avg + 1e-12);
    }

    #[test]
    fn prob_and_tangent_validation() {
        assert!(ProbVector::<f64>::new(vec![]).is_err());
        assert!(ProbVector::new(vec![0.5, 0.6]).is_err());
        assert!(ProbVector::new(vec![-0.1, 1.1]).is_err());
        assert!(ProbVector::normalized(vec![2.0, 2.0]).is_ok());
        assert!(ProbVector::normalized(vec![0.0, 0.0]).is_err());
        assert!(TangentVector::new(vec![0.5, -0.5]).is_ok());
        assert!(TangentVector::new(vec![0.5, 0.5]).is_err());
        let t = TangentVector::projected(vec![1.0, 2.0, 3.0]);
        let sum: f64 = t.values().iter().sum();
        assert!(sum.abs() <= 1e-12);
    }
}
