//! Independent reference computations that cross-check the main build.
//!
//! Nothing here shares code with the paths it validates: gradients and
//! Hessian forms are re-derived by central finite differences of the
//! objective alone, the global minimum is re-found by exhaustive simplex
//! grids, commuting channels are solved through the classical diagonal
//! formula, and the capacity expression itself is re-derived from the
//! Petz-Renyi divergence through the Sibson-identity structure
//!
//! ```text
//! I_alpha(p; W) = inf_sigma (1/(alpha-1)) ln sum_x p_x e^{(alpha-1) D_alpha(W_x || sigma)},
//! ```
//!
//! whose minimizer is `sigma* = M(p)^beta / Tr[M(p)^beta]` and whose value
//! at the minimizer equals `(alpha/(alpha-1)) ln S(p)`.

use nalgebra::{Complex, DMatrix};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::channel::{DensityOperator, PreparedChannel, StochasticMatrix};
use crate::consts::{EIG_FLOOR, GRID_MAX_ALPHABET, GRID_MAX_POINTS};
use crate::error::{Error, Result};
use crate::objective::{capacity_from_s, mix, objective_s, objective_s_weights, ProbVector, TangentVector};
use crate::scalar::{real, RealScalar};
use crate::spectral::{trace_product, HermitianOperator};

/// Default central-difference step for gradient checks.
pub const FD_GRADIENT_STEP: f64 = 1e-5;
/// Default central-difference step for Hessian checks.
pub const FD_HESSIAN_STEP: f64 = 1e-4;

// ---------------------------------------------------------------------------
// Finite differences
// ---------------------------------------------------------------------------

/// Central-difference gradient of `S` at an interior point.
///
/// Coordinate steps are tangent-projected (`u_x = e_x - 1/n`), which keeps
/// every probe on the simplex and yields the tangent component of the
/// gradient; the mean component is recovered exactly from the homogeneity
/// identity `<p, grad S> = beta S(p)`, so the result is comparable to the
/// analytic gradient componentwise.
pub fn fd_gradient<T: RealScalar>(
    ch: &PreparedChannel<T>,
    p: &ProbVector<T>,
    step: T,
) -> Result<Vec<T>> {
    let n = ch.alphabet_size();
    if p.len() != n {
        return Err(Error::DimMismatch {
            expected: n,
            got: p.len(),
        });
    }
    let two = real::<T>(2.0);
    if !(step > T::zero()) || p.min_value() <= two * step {
        return Err(Error::InvalidConfig {
            reason: "finite-difference step must satisfy 0 < 2 step < min_x p_x".into(),
        });
    }
    let inv_n = T::one() / real(n as f64);
    let mut tangent = Vec::with_capacity(n);
    let mut plus: Vec<T> = p.values().to_vec();
    let mut minus: Vec<T> = p.values().to_vec();
    for x in 0..n {
        for y in 0..n {
            let delta = if y == x { step - step * inv_n } else { -step * inv_n };
            plus[y] = p.get(y) + delta;
            minus[y] = p.get(y) - delta;
        }
        let s_plus = objective_s_weights(ch, &plus)?;
        let s_minus = objective_s_weights(ch, &minus)?;
        tangent.push((s_plus - s_minus) / (two * step));
    }
    let s = objective_s(ch, p)?;
    let mut inner = T::zero();
    for (&t, &px) in tangent.iter().zip(p.values()) {
        inner += t * px;
    }
    let mean = ch.beta() * s - inner;
    Ok(tangent.into_iter().map(|t| t + mean).collect())
}

/// Second central difference of `S` along the tangent direction `h`:
/// `(S(p + step h) - 2 S(p) + S(p - step h)) / step^2`.
pub fn fd_hessian_form<T: RealScalar>(
    ch: &PreparedChannel<T>,
    p: &ProbVector<T>,
    h: &TangentVector<T>,
    step: T,
) -> Result<T> {
    let n = ch.alphabet_size();
    if p.len() != n || h.len() != n {
        return Err(Error::DimMismatch {
            expected: n,
            got: p.len().max(h.len()),
        });
    }
    if !(step > T::zero()) {
        return Err(Error::InvalidConfig {
            reason: "finite-difference step must be positive".into(),
        });
    }
    let mut plus = Vec::with_capacity(n);
    let mut minus = Vec::with_capacity(n);
    for (&px, &hx) in p.values().iter().zip(h.values()) {
        if px - step * hx.abs() <= T::zero() {
            return Err(Error::InvalidConfig {
                reason: "finite-difference probe leaves the simplex; \
                         reduce the step or move p inward"
                    .into(),
            });
        }
        plus.push(px + step * hx);
        minus.push(px - step * hx);
    }
    let s_plus = objective_s_weights(ch, &plus)?;
    let s_minus = objective_s_weights(ch, &minus)?;
    let s = objective_s(ch, p)?;
    Ok((s_plus - real::<T>(2.0) * s + s_minus) / (step * step))
}

// ---------------------------------------------------------------------------
// Simplex grids
// ---------------------------------------------------------------------------

/// An exhaustive lattice `{k / resolution : sum k = resolution}` over the
/// simplex. Guarded to small alphabets and at most [`GRID_MAX_POINTS`]
/// points so grid searches stay a desk-scale operation.
#[derive(Clone, Copy, Debug)]
pub struct GridSpec {
    resolution: usize,
    alphabet_size: usize,
}

impl GridSpec {
    pub fn new(resolution: usize, alphabet_size: usize) -> Result<Self> {
        if resolution == 0 || alphabet_size == 0 {
            return Err(Error::InvalidConfig {
                reason: "grid resolution and alphabet size must be positive".into(),
            });
        }
        if alphabet_size > GRID_MAX_ALPHABET {
            return Err(Error::GridAlphabetTooLarge {
                n: alphabet_size,
                cap: GRID_MAX_ALPHABET,
            });
        }
        let spec = Self {
            resolution,
            alphabet_size,
        };
        let points = spec.points();
        if points > GRID_MAX_POINTS {
            return Err(Error::GridTooLarge {
                points,
                cap: GRID_MAX_POINTS,
            });
        }
        Ok(spec)
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    /// Number of lattice points, `C(resolution + n - 1, n - 1)`.
    pub fn points(&self) -> u128 {
        let n = self.alphabet_size as u128;
        let r = self.resolution as u128;
        binomial(r + n - 1, n - 1)
    }
}

fn binomial(a: u128, mut b: u128) -> u128 {
    if b > a - b {
        b = a - b;
    }
    let mut value = 1u128;
    for i in 0..b {
        // Exact at every step: the running product of (b choose i) terms
        // is always divisible by i + 1.
        value = value * (a - i) / (i + 1);
    }
    value
}

/// Best composition seen in one lattice slice, with its objective value.
type SliceBest<T> = Option<(Vec<usize>, T)>;

/// Exhaustively minimizes `eval` over the lattice, in parallel over the
/// first coordinate. Ties break toward the lexicographically smallest
/// composition, so the result is independent of thread scheduling.
fn grid_minimize<T, F>(spec: &GridSpec, eval: F) -> Result<(Vec<usize>, T)>
where
    T: RealScalar,
    F: Fn(&[T]) -> Result<T> + Sync,
{
    let n = spec.alphabet_size;
    let res = spec.resolution;
    let inv = T::one() / real(res as f64);
    let slices: Vec<Result<SliceBest<T>>> = (0..=res)
        .into_par_iter()
        .map(|k0| {
            let mut best: SliceBest<T> = None;
            let mut comp = Vec::with_capacity(n);
            comp.push(k0);
            let mut weights = vec![T::zero(); n];
            enumerate_rest(&mut comp, n - 1, res - k0, &mut |comp: &[usize]| {
                for (w, &k) in weights.iter_mut().zip(comp) {
                    *w = real::<T>(k as f64) * inv;
                }
                let s = eval(&weights)?;
                let better = match &best {
                    None => true,
                    Some((_, s_best)) => s < *s_best,
                };
                if better {
                    best = Some((comp.to_vec(), s));
                }
                Ok(())
            })?;
            Ok(best)
        })
        .collect();
    let mut best: Option<(Vec<usize>, T)> = None;
    for slice in slices {
        if let Some((comp, s)) = slice? {
            let better = match &best {
                None => true,
                // Strict: within a slice the first (lexicographically
                // smallest) composition won, and slices arrive in k0 order.
                Some((_, s_best)) => s < *s_best,
            };
            if better {
                best = Some((comp, s));
            }
        }
    }
    let (comp, s) = best.expect("grid contains at least one point");
    Ok((comp, s))
}

fn enumerate_rest(
    comp: &mut Vec<usize>,
    slots_left: usize,
    budget: usize,
    visit: &mut dyn FnMut(&[usize]) -> Result<()>,
) -> Result<()> {
    if slots_left == 0 {
        // Reachable only for single-letter alphabets, where every slice of
        // the outer parallel loop except k0 = resolution is infeasible.
        if budget == 0 {
            return visit(comp);
        }
        return Ok(());
    }
    if slots_left == 1 {
        comp.push(budget);
        visit(comp)?;
        comp.pop();
        return Ok(());
    }
    for k in 0..=budget {
        comp.push(k);
        enumerate_rest(comp, slots_left - 1, budget - k, visit)?;
        comp.pop();
    }
    Ok(())
}

/// Exhaustive minimization of `S` over the simplex lattice. Returns the
/// minimizing lattice distribution and its objective value, which bounds
/// the true minimum from above.
pub fn grid_search_min<T: RealScalar>(
    ch: &PreparedChannel<T>,
    spec: &GridSpec,
) -> Result<(ProbVector<T>, T)> {
    if spec.alphabet_size != ch.alphabet_size() {
        return Err(Error::DimMismatch {
            expected: ch.alphabet_size(),
            got: spec.alphabet_size,
        });
    }
    let (comp, s) = grid_minimize(spec, |w| objective_s_weights(ch, w))?;
    let values: Vec<T> = comp
        .iter()
        .map(|&k| real::<T>(k as f64) / real(spec.resolution as f64))
        .collect();
    Ok((ProbVector::new(values)?, s))
}

/// Capacity of a classical (commuting) channel by grid search over the
/// diagonal objective `S(p) = sum_j (sum_x p_x P[x,j]^alpha)^beta`.
///
/// Because the grid minimum can only overestimate the true `s_min`, the
/// returned capacity is a lower bound that converges as the resolution
/// grows; it is the ground truth the quantum solver is compared against on
/// embedded commuting instances.
pub fn classical_renyi_capacity<T: RealScalar>(
    p_mat: &StochasticMatrix<T>,
    alpha: T,
    spec: &GridSpec,
) -> Result<T> {
    let a = alpha.to_f64().unwrap_or(f64::NAN);
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::AlphaOutOfRange { alpha: a });
    }
    if spec.alphabet_size != p_mat.n_inputs() {
        return Err(Error::DimMismatch {
            expected: p_mat.n_inputs(),
            got: spec.alphabet_size,
        });
    }
    let n = p_mat.n_inputs();
    let k = p_mat.n_outputs();
    let beta = T::one() / alpha;
    // Precompute P[x,j]^alpha.
    let mut powered = vec![vec![T::zero(); k]; n];
    for x in 0..n {
        for (j, &v) in p_mat.row(x).iter().enumerate() {
            powered[x][j] = v.powf(alpha);
        }
    }
    let (_, s_min) = grid_minimize(spec, |w: &[T]| {
        let mut s = T::zero();
        for j in 0..k {
            let mut inner = T::zero();
            for x in 0..n {
                inner += w[x] * powered[x][j];
            }
            s += inner.powf(beta);
        }
        Ok(s)
    })?;
    capacity_from_s(alpha, s_min)
}

// ---------------------------------------------------------------------------
// Petz-Renyi divergence and the Sibson identity
// ---------------------------------------------------------------------------

/// `D_alpha(rho || sigma) = (1/(alpha-1)) ln Tr[rho^alpha sigma^(1-alpha)]`
/// for `alpha` in (0, 1).
///
/// `rho` may be rank deficient (zero eigenvalues contribute zero to
/// `rho^alpha`); `sigma` must be positive definite above the eigenvalue
/// floor.
pub fn petz_renyi_divergence<T: RealScalar>(
    rho: &DensityOperator<T>,
    sigma: &DensityOperator<T>,
    alpha: T,
) -> Result<T> {
    let a = alpha.to_f64().unwrap_or(f64::NAN);
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::AlphaOutOfRange { alpha: a });
    }
    if rho.dim() != sigma.dim() {
        return Err(Error::DimMismatch {
            expected: rho.dim(),
            got: sigma.dim(),
        });
    }
    let sigma_eigs = sigma.operator().eigenvalues()?;
    if sigma_eigs[0] <= real(EIG_FLOOR) {
        return Err(Error::NotPositiveDefinite {
            min_eig: sigma_eigs[0].to_f64().unwrap_or(f64::NAN),
            floor: EIG_FLOOR,
        });
    }
    let rho_pow = rho.operator().matrix_power(alpha)?;
    let sigma_pow = sigma.operator().matrix_power(T::one() - alpha)?;
    let overlap = trace_product(&rho_pow, &sigma_pow)?;
    Ok(overlap.ln() / (alpha - T::one()))
}

/// Result of one Sibson-identity evaluation.
#[derive(Clone, Debug)]
pub struct SibsonReport<T: RealScalar> {
    /// `(alpha/(alpha-1)) ln S(p)`: the closed-form mutual information.
    pub reference: T,
    /// The divergence expression at `sigma* = M(p)^beta / Tr[M(p)^beta]`;
    /// equals `reference` up to round-off.
    pub at_optimal: T,
    /// The expression at sampled full-rank states; each is at least
    /// `at_optimal` up to round-off, by the infimum property.
    pub at_random: Vec<T>,
}

/// Evaluates `F(sigma) = (1/(alpha-1)) ln sum_x p_x e^{(alpha-1)
/// D_alpha(W_x || sigma)}` at the closed-form minimizer and at `randoms`
/// sampled full-rank states (Ginibre mixed with a trace of the maximally
/// mixed state, drawn from a seeded portable generator).
pub fn sibson_check<T: RealScalar>(
    ch: &PreparedChannel<T>,
    p: &ProbVector<T>,
    randoms: usize,
    seed: u64,
) -> Result<SibsonReport<T>> {
    let alpha = ch.alpha();
    let s = objective_s(ch, p)?;
    let reference = alpha / (alpha - T::one()) * s.ln();

    let m = mix(ch, p)?;
    let m_pow = m.matrix_power(ch.beta())?;
    let trace = m_pow.trace();
    let sigma_star =
        DensityOperator::new(HermitianOperator::weighted_sum(&[m_pow], &[T::one() / trace])?)?;
    let at_optimal = sigma_expression(ch, p, &sigma_star)?;

    let d = ch.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut at_random = Vec::with_capacity(randoms);
    for _ in 0..randoms {
        let sigma = random_full_rank_density(d, &mut rng)?;
        at_random.push(sigma_expression(ch, p, &sigma)?);
    }
    Ok(SibsonReport {
        reference,
        at_optimal,
        at_random,
    })
}

fn sigma_expression<T: RealScalar>(
    ch: &PreparedChannel<T>,
    p: &ProbVector<T>,
    sigma: &DensityOperator<T>,
) -> Result<T> {
    let alpha = ch.alpha();
    let a1 = alpha - T::one();
    let mut acc = T::zero();
    for x in 0..ch.alphabet_size() {
        let div = petz_renyi_divergence(ch.base().state(x), sigma, alpha)?;
        acc += p.get(x) * (a1 * div).exp();
    }
    Ok(acc.ln() / a1)
}

/// A full-rank random density operator: normalized Ginibre `G G*` mixed
/// with the maximally mixed state at weight `1e-3`. Draw order matches the
/// channel generator convention (row-major, real part before imaginary).
fn random_full_rank_density<T: RealScalar>(
    d: usize,
    rng: &mut ChaCha8Rng,
) -> Result<DensityOperator<T>> {
    let g = DMatrix::from_fn(d, d, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex::new(real::<T>(re), real::<T>(im))
    });
    let mut w = &g * g.adjoint();
    let mut trace = T::zero();
    for i in 0..d {
        trace += w[(i, i)].re;
    }
    let lam = real::<T>(1e-3);
    let scale = (T::one() - lam) / trace;
    let diag_add = lam / real(d as f64);
    w *= Complex::new(scale, T::zero());
    for i in 0..d {
        w[(i, i)] += Complex::new(diag_add, T::zero());
    }
    DensityOperator::new(HermitianOperator::new(w)?)
}
