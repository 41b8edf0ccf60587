//! Classical-quantum channels: density operators, constructors, generators,
//! and the on-disk JSON format.
//!
//! A channel is a finite family `W_1..W_n` of density operators on a common
//! d-dimensional space with `sum_x W_x` positive definite (the standing
//! non-singularity assumption, checked at construction and load). Solving
//! happens on the prepared form, which caches the alpha-th powers
//! `A_x = W_x^alpha` together with the spectral data the curvature constants
//! need.
//!
//! # File format
//!
//! Channels serialize to JSON as
//!
//! ```text
//! { "alphabet_size": n, "dim": d, "states": [ S_1, ..., S_n ] }
//! ```
//!
//! where each `S_x` is a row-major `d x d` array of `[re, im]` pairs:
//! `states[x][i][j] == [re(W_x[i,j]), im(W_x[i,j])]`. Floats are written
//! with 17 significant digits, so save/load round-trips are exact at binary
//! precision. All invariants are revalidated on load.
//!
//! # Reproducibility
//!
//! Every random generator in this crate draws from ChaCha8 seeded with the
//! user-supplied 64-bit seed. For [`gen_random_channel`] the draw order is:
//! states in index order; per state the Ginibre matrix G row-major; per
//! entry the real part then the imaginary part, each standard normal. The
//! same seed therefore yields bit-identical channels on every platform.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{Complex, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::consts::{NONSING_TOL, PROB_TOL, PSD_TOL, TRACE_TOL};
use crate::error::{Error, Result};
use crate::scalar::{real, RealScalar};
use crate::spectral::HermitianOperator;

/// Hermitian, positive semidefinite (eigenvalues >= -[`PSD_TOL`]), unit
/// trace (within [`TRACE_TOL`]). Checked on construction.
#[derive(Clone, Debug)]
pub struct DensityOperator<T: RealScalar> {
    op: HermitianOperator<T>,
}

impl<T: RealScalar> DensityOperator<T> {
    pub fn new(op: HermitianOperator<T>) -> Result<Self> {
        let trace = op.trace();
        if (trace - T::one()).abs() > real(TRACE_TOL) {
            return Err(Error::InvalidTrace {
                trace: trace.to_f64().unwrap_or(f64::NAN),
                tol: TRACE_TOL,
            });
        }
        let eigs = op.eigenvalues()?;
        let min_eig = eigs[0];
        if min_eig < -real::<T>(PSD_TOL) {
            return Err(Error::NotPsd {
                min_eig: min_eig.to_f64().unwrap_or(f64::NAN),
                tol: PSD_TOL,
            });
        }
        Ok(Self { op })
    }

    /// `I/d`, the maximally mixed state.
    pub fn maximally_mixed(d: usize) -> Self {
        let diag = vec![T::one() / real(d as f64); d];
        Self {
            op: HermitianOperator::from_real_diagonal(&diag),
        }
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn operator(&self) -> &HermitianOperator<T> {
        &self.op
    }
}

/// Finite-alphabet classical-quantum channel `x -> W_x`.
#[derive(Clone, Debug)]
pub struct CqChannel<T: RealScalar> {
    states: Vec<DensityOperator<T>>,
    dim: usize,
}

impl<T: RealScalar> CqChannel<T> {
    /// Validates a common dimension and the non-singularity of `sum_x W_x`.
    pub fn new(states: Vec<DensityOperator<T>>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidChannelFile {
                reason: "channel needs at least one state".into(),
            });
        }
        let dim = states[0].dim();
        for (x, s) in states.iter().enumerate() {
            if s.dim() != dim {
                return Err(Error::InvalidState {
                    index: x,
                    reason: format!("dimension {} differs from {}", s.dim(), dim),
                });
            }
        }
        let ops: Vec<HermitianOperator<T>> =
            states.iter().map(|s| s.operator().clone()).collect();
        let sum = HermitianOperator::weighted_sum(&ops, &vec![T::one(); ops.len()])?;
        let min_eig = sum.eigenvalues()?[0];
        if min_eig <= real(NONSING_TOL) {
            return Err(Error::SingularChannel {
                min_eig: min_eig.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self { states, dim })
    }

    pub fn alphabet_size(&self) -> usize {
        self.states.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn states(&self) -> &[DensityOperator<T>] {
        &self.states
    }

    pub fn state(&self, x: usize) -> &DensityOperator<T> {
        &self.states[x]
    }

    /// Serializes to the JSON channel format with full binary precision.
    pub fn save_to(&self, writer: impl Write) -> Result<()> {
        let file = ChannelFile::from_channel(self);
        let mut ser = serde_json::Serializer::with_formatter(writer, FullPrecision);
        file.serialize(&mut ser)?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut writer = BufWriter::new(File::create(path)?);
        self.save_to(&mut writer)?;
        writer.write_all(b"\n")?;
        writer.flush()?;
        Ok(())
    }

    /// Parses and revalidates a channel from the JSON format.
    pub fn load_from(reader: impl Read) -> Result<Self> {
        let file: ChannelFile = serde_json::from_reader(reader)?;
        file.into_channel()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::load_from(BufReader::new(File::open(path)?))
    }
}

/// Channel with `A_x = W_x^alpha` and the spectral scalars used by the
/// curvature constants cached for one Renyi order.
#[derive(Clone, Debug)]
pub struct PreparedChannel<T: RealScalar> {
    base: CqChannel<T>,
    alpha: T,
    beta: T,
    powered: Vec<HermitianOperator<T>>,
    a_traces: Vec<T>,
    a_sum_min_eig: T,
}

impl<T: RealScalar> PreparedChannel<T> {
    /// Computes the powered family for `alpha` strictly inside (0, 1).
    ///
    /// Revalidates `Tr[A_x^beta] = 1` (within 1e-8) from a fresh
    /// eigendecomposition of each computed power, and the positivity of
    /// `sum_x A_x` that the smoothing constants rely on.
    pub fn prepare(base: CqChannel<T>, alpha: T) -> Result<Self> {
        let alpha64 = alpha.to_f64().unwrap_or(f64::NAN);
        if !(alpha64 > 0.0 && alpha64 < 1.0) {
            return Err(Error::AlphaOutOfRange { alpha: alpha64 });
        }
        let beta = T::one() / alpha;
        let mut powered = Vec::with_capacity(base.alphabet_size());
        let mut a_traces = Vec::with_capacity(base.alphabet_size());
        for (x, state) in base.states().iter().enumerate() {
            let a = state
                .operator()
                .matrix_power(alpha)
                .map_err(|e| Error::InvalidState {
                    index: x,
                    reason: e.to_string(),
                })?;
            let eigs = a.eigenvalues()?;
            let mut norm = T::zero();
            for &lam in &eigs {
                norm += crate::spectral::scalar_power(lam.max(T::zero()), beta)?;
            }
            if (norm - T::one()).abs() > real(1e-8) {
                return Err(Error::InvalidState {
                    index: x,
                    reason: format!(
                        "Tr[A^beta] = {} deviates from 1",
                        norm.to_f64().unwrap_or(f64::NAN)
                    ),
                });
            }
            a_traces.push(a.trace());
            powered.push(a);
        }
        let sum = HermitianOperator::weighted_sum(&powered, &vec![T::one(); powered.len()])?;
        let a_sum_min_eig = sum.eigenvalues()?[0];
        if a_sum_min_eig <= T::zero() {
            return Err(Error::SingularChannel {
                min_eig: a_sum_min_eig.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self {
            base,
            alpha,
            beta,
            powered,
            a_traces,
            a_sum_min_eig,
        })
    }

    pub fn base(&self) -> &CqChannel<T> {
        &self.base
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    /// `beta = 1/alpha`, the trace-power exponent; always > 1.
    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn alphabet_size(&self) -> usize {
        self.base.alphabet_size()
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    /// `A_x = W_x^alpha`.
    pub fn powered(&self, x: usize) -> &HermitianOperator<T> {
        &self.powered[x]
    }

    pub fn powered_states(&self) -> &[HermitianOperator<T>] {
        &self.powered
    }

    /// `Tr[A_x]`, used by Lipschitz-style bounds.
    pub fn a_trace(&self, x: usize) -> T {
        self.a_traces[x]
    }

    /// Smallest eigenvalue of `sum_x A_x`; strictly positive.
    pub fn a_sum_min_eig(&self) -> T {
        self.a_sum_min_eig
    }
}

/// Row-stochastic matrix: `n` rows of nonnegative entries summing to one
/// (renormalized on construction within [`PROB_TOL`]).
#[derive(Clone, Debug)]
pub struct StochasticMatrix<T: RealScalar> {
    rows: Vec<Vec<T>>,
    n_outputs: usize,
}

impl<T: RealScalar> StochasticMatrix<T> {
    pub fn new(rows: Vec<Vec<T>>) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::InvalidStochastic {
                reason: "matrix must have at least one row and one column".into(),
            });
        }
        let n_outputs = rows[0].len();
        let mut rows = rows;
        for (x, row) in rows.iter_mut().enumerate() {
            if row.len() != n_outputs {
                return Err(Error::InvalidStochastic {
                    reason: format!("row {x} has length {}, expected {n_outputs}", row.len()),
                });
            }
            let mut sum = T::zero();
            for &v in row.iter() {
                if v < T::zero() {
                    return Err(Error::InvalidStochastic {
                        reason: format!(
                            "row {x} has negative entry {}",
                            v.to_f64().unwrap_or(f64::NAN)
                        ),
                    });
                }
                sum += v;
            }
            if (sum - T::one()).abs() > real(PROB_TOL) {
                return Err(Error::InvalidStochastic {
                    reason: format!(
                        "row {x} sums to {}, expected 1",
                        sum.to_f64().unwrap_or(f64::NAN)
                    ),
                });
            }
            for v in row.iter_mut() {
                *v /= sum;
            }
        }
        Ok(Self { rows, n_outputs })
    }

    /// Seeded uniform-Dirichlet rows (exponential draws, normalized).
    pub fn random(n: usize, k: usize, seed: u64) -> Result<Self> {
        if n == 0 || k == 0 {
            return Err(Error::InvalidStochastic {
                reason: "matrix must have at least one row and one column".into(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::with_capacity(n);
        for _ in 0..n {
            let mut row = Vec::with_capacity(k);
            let mut sum = 0.0f64;
            for _ in 0..k {
                let u: f64 = rng.gen();
                let e = -(1.0 - u).ln();
                sum += e;
                row.push(e);
            }
            rows.push(row.into_iter().map(|e| real(e / sum)).collect());
        }
        Self::new(rows)
    }

    /// Rows mixed with the uniform output distribution:
    /// `(1 - epsilon) P + epsilon / k`.
    pub fn smoothed(&self, epsilon: T) -> Result<Self> {
        let eps64 = epsilon.to_f64().unwrap_or(f64::NAN);
        if !(0.0..=1.0).contains(&eps64) {
            return Err(Error::InvalidStochastic {
                reason: format!("epsilon = {eps64} must lie in [0, 1]"),
            });
        }
        let k_inv = T::one() / real(self.n_outputs as f64);
        let rows = self
            .rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&v| (T::one() - epsilon) * v + epsilon * k_inv)
                    .collect()
            })
            .collect();
        Self::new(rows)
    }

    pub fn n_inputs(&self) -> usize {
        self.rows.len()
    }

    pub fn n_outputs(&self) -> usize {
        self.n_outputs
    }

    pub fn row(&self, x: usize) -> &[T] {
        &self.rows[x]
    }
}

/// Seeded random channel: per state a complex Ginibre matrix `G`, the state
/// `G G* / Tr[G G*]`, then the noise floor `(1-epsilon) rho + epsilon I/d`,
/// which guarantees `lambda_min(W_x) >= epsilon/d`.
pub fn gen_random_channel<T: RealScalar>(
    n: usize,
    d: usize,
    epsilon: T,
    seed: u64,
) -> Result<CqChannel<T>> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidChannelFile {
            reason: format!("alphabet size {n} and dimension {d} must both be positive"),
        });
    }
    let eps64 = epsilon.to_f64().unwrap_or(f64::NAN);
    if !(0.0..=1.0).contains(&eps64) {
        return Err(Error::InvalidChannelFile {
            reason: format!("epsilon = {eps64} must lie in [0, 1]"),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut states = Vec::with_capacity(n);
    let d_inv = T::one() / real(d as f64);
    for x in 0..n {
        let g: DMatrix<Complex<T>> = DMatrix::from_fn(d, d, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex::new(real(re), real(im))
        });
        let gg = &g * g.adjoint();
        let mut trace = T::zero();
        for i in 0..d {
            trace += gg[(i, i)].re;
        }
        let scale = Complex::new(T::one() / trace, T::zero());
        let one_minus = Complex::new(T::one() - epsilon, T::zero());
        let mut w = gg.map(|z| z * scale * one_minus);
        for i in 0..d {
            w[(i, i)] += Complex::new(epsilon * d_inv, T::zero());
        }
        let op = HermitianOperator::new(w)?;
        states.push(DensityOperator::new(op).map_err(|e| Error::InvalidState {
            index: x,
            reason: e.to_string(),
        })?);
    }
    CqChannel::new(states)
}

/// Orthogonal pure states `W_x = |x><x|` on an n-dimensional space.
pub fn gen_noiseless_channel<T: RealScalar>(n: usize) -> Result<CqChannel<T>> {
    if n == 0 {
        return Err(Error::InvalidChannelFile {
            reason: "alphabet size must be positive".into(),
        });
    }
    let mut states = Vec::with_capacity(n);
    for x in 0..n {
        let mut diag = vec![T::zero(); n];
        diag[x] = T::one();
        states.push(DensityOperator::new(HermitianOperator::from_real_diagonal(
            &diag,
        ))?);
    }
    CqChannel::new(states)
}

/// Diagonal embedding of a classical channel: `W_x = diag(P[x, :])`.
/// Rejected when some output column is all zero (the sum would be singular).
pub fn gen_commuting_channel<T: RealScalar>(p: &StochasticMatrix<T>) -> Result<CqChannel<T>> {
    for j in 0..p.n_outputs() {
        let mut col = T::zero();
        for x in 0..p.n_inputs() {
            col += p.row(x)[j];
        }
        if col <= real(NONSING_TOL) {
            return Err(Error::InvalidStochastic {
                reason: format!("output column {j} is all zero; channel would be singular"),
            });
        }
    }
    let states = (0..p.n_inputs())
        .map(|x| DensityOperator::new(HermitianOperator::from_real_diagonal(p.row(x))))
        .collect::<Result<Vec<_>>>()?;
    CqChannel::new(states)
}

/// On-disk JSON layout. Floats are `f64` regardless of the working scalar.
#[derive(Serialize, Deserialize)]
struct ChannelFile {
    alphabet_size: usize,
    dim: usize,
    states: Vec<Vec<Vec<[f64; 2]>>>,
}

impl ChannelFile {
    fn from_channel<T: RealScalar>(ch: &CqChannel<T>) -> Self {
        let d = ch.dim();
        let states = ch
            .states()
            .iter()
            .map(|s| {
                (0..d)
                    .map(|i| {
                        (0..d)
                            .map(|j| {
                                let z = s.operator().matrix()[(i, j)];
                                [
                                    z.re.to_f64().unwrap_or(f64::NAN),
                                    z.im.to_f64().unwrap_or(f64::NAN),
                                ]
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Self {
            alphabet_size: ch.alphabet_size(),
            dim: d,
            states,
        }
    }

    fn into_channel<T: RealScalar>(self) -> Result<CqChannel<T>> {
        if self.alphabet_size == 0 || self.dim == 0 {
            return Err(Error::InvalidChannelFile {
                reason: format!(
                    "alphabet_size {} and dim {} must both be positive",
                    self.alphabet_size, self.dim
                ),
            });
        }
        if self.states.len() != self.alphabet_size {
            return Err(Error::InvalidChannelFile {
                reason: format!(
                    "alphabet_size {} does not match {} states",
                    self.alphabet_size,
                    self.states.len()
                ),
            });
        }
        let d = self.dim;
        let mut states = Vec::with_capacity(self.alphabet_size);
        for (x, rows) in self.states.iter().enumerate() {
            if rows.len() != d || rows.iter().any(|r| r.len() != d) {
                return Err(Error::InvalidState {
                    index: x,
                    reason: format!("state must be a {d}x{d} matrix"),
                });
            }
            let mat = DMatrix::from_fn(d, d, |i, j| {
                Complex::new(real::<T>(rows[i][j][0]), real::<T>(rows[i][j][1]))
            });
            let op = HermitianOperator::new(mat).map_err(|e| Error::InvalidState {
                index: x,
                reason: e.to_string(),
            })?;
            states.push(DensityOperator::new(op).map_err(|e| Error::InvalidState {
                index: x,
                reason: e.to_string(),
            })?);
        }
        CqChannel::new(states)
    }
}

/// serde_json formatter writing every float with 17 significant digits.
struct FullPrecision;

impl serde_json::ser::Formatter for FullPrecision {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-10;

    #[test]
    fn random_channel_respects_noise_floor() {
        for seed in 0..20u64 {
            let ch = gen_random_channel::<f64>(4, 3, 1e-2, seed).unwrap();
            assert_eq!(ch.alphabet_size(), 4);
            assert_eq!(ch.dim(), 3);
            for s in ch.states() {
                let eigs = s.operator().eigenvalues().unwrap();
                assert!(eigs[0] >= 1e-2 / 3.0 - 1e-12, "seed {seed}: {}", eigs[0]);
                assert!((s.operator().trace() - 1.0).abs() <= TOL);
            }
        }
    }

    #[test]
    fn random_channel_is_seed_deterministic() {
        let a = gen_random_channel::<f64>(3, 4, 1e-2, 42).unwrap();
        let b = gen_random_channel::<f64>(3, 4, 1e-2, 42).unwrap();
        let c = gen_random_channel::<f64>(3, 4, 1e-2, 43).unwrap();
        for x in 0..3 {
            assert_eq!(a.state(x).operator().matrix(), b.state(x).operator().matrix());
        }
        assert_ne!(a.state(0).operator().matrix(), c.state(0).operator().matrix());
    }

    #[test]
    fn epsilon_one_gives_maximally_mixed_states() {
        let ch = gen_random_channel::<f64>(2, 5, 1.0, 7).unwrap();
        for s in ch.states() {
            for i in 0..5 {
                for j in 0..5 {
                    let want = if i == j { 0.2 } else { 0.0 };
                    assert_eq!(s.operator().matrix()[(i, j)], Complex::new(want, 0.0));
                }
            }
        }
    }

    #[test]
    fn noiseless_channel_is_orthonormal_projectors() {
        let ch = gen_noiseless_channel::<f64>(3).unwrap();
        for (x, s) in ch.states().iter().enumerate() {
            for i in 0..3 {
                let want = if i == x { 1.0 } else { 0.0 };
                assert_eq!(s.operator().matrix()[(i, i)].re, want);
            }
        }
    }

    #[test]
    fn prepare_noiseless_is_identity_on_states() {
        let ch = gen_noiseless_channel::<f64>(3).unwrap();
        let prep = PreparedChannel::prepare(ch.clone(), 0.5).unwrap();
        for x in 0..3 {
            let a = prep.powered(x).matrix();
            let w = ch.state(x).operator().matrix();
            for (u, v) in a.iter().zip(w.iter()) {
                assert!((u - v).norm_sqr().sqrt() <= TOL);
            }
        }
        assert!((prep.a_sum_min_eig() - 1.0).abs() <= TOL);
    }

    #[test]
    fn prepare_validates_alpha() {
        let ch = gen_noiseless_channel::<f64>(2).unwrap();
        for bad in [0.0, 1.0, -0.25, 1.5] {
            let err = PreparedChannel::prepare(ch.clone(), bad).unwrap_err();
            assert!(matches!(err, Error::AlphaOutOfRange { .. }), "{bad}: {err}");
        }
    }

    #[test]
    fn prepare_unit_normalization_holds_on_random_channels() {
        for seed in 0..10u64 {
            let ch = gen_random_channel::<f64>(5, 4, 1e-2, seed).unwrap();
            for alpha in [0.25, 0.5, 0.8] {
                let prep = PreparedChannel::prepare(ch.clone(), alpha).unwrap();
                assert!(prep.a_sum_min_eig() > 0.0);
                for x in 0..5 {
                    assert!(prep.a_trace(x) >= 1.0 - 1e-12, "Tr[W^alpha] >= Tr[W]");
                }
            }
        }
    }

    #[test]
    fn commuting_channel_embeds_rows_diagonally() {
        let p = StochasticMatrix::new(vec![vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        let ch = gen_commuting_channel(&p).unwrap();
        assert_eq!(ch.dim(), 2);
        assert_eq!(ch.state(0).operator().matrix()[(0, 0)].re, 0.9);
        assert_eq!(ch.state(1).operator().matrix()[(1, 1)].re, 0.8);
        assert_eq!(ch.state(0).operator().matrix()[(0, 1)], Complex::new(0.0, 0.0));
    }

    #[test]
    fn zero_output_column_is_rejected() {
        let p = StochasticMatrix::new(vec![vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let err = gen_commuting_channel(&p).unwrap_err();
        assert!(matches!(err, Error::InvalidStochastic { .. }), "{err}");
    }

    #[test]
    fn stochastic_matrix_validation() {
        assert!(StochasticMatrix::<f64>::new(vec![vec![0.5, 0.6]]).is_err());
        assert!(StochasticMatrix::<f64>::new(vec![vec![-0.1, 1.1]]).is_err());
        assert!(StochasticMatrix::<f64>::new(vec![vec![0.3, 0.7], vec![0.5]]).is_err());
        let m = StochasticMatrix::<f64>::random(4, 3, 9).unwrap();
        assert_eq!(m.n_inputs(), 4);
        assert_eq!(m.n_outputs(), 3);
        for x in 0..4 {
            let s: f64 = m.row(x).iter().sum();
            assert!((s - 1.0).abs() <= 1e-12);
        }
        let sm = m.smoothed(0.3).unwrap();
        for x in 0..4 {
            for j in 0..3 {
                assert!(sm.row(x)[j] >= 0.1 - 1e-12);
            }
        }
    }

    #[test]
    fn json_roundtrip_is_bit_exact() {
        let ch = gen_random_channel::<f64>(3, 4, 1e-2, 123).unwrap();
        let mut buf = Vec::new();
        ch.save_to(&mut buf).unwrap();
        let back = CqChannel::<f64>::load_from(buf.as_slice()).unwrap();
        assert_eq!(back.alphabet_size(), 3);
        assert_eq!(back.dim(), 4);
        for x in 0..3 {
            let a = ch.state(x).operator().matrix();
            let b = back.state(x).operator().matrix();
            for (u, v) in a.iter().zip(b.iter()) {
                assert_eq!(u.re.to_bits(), v.re.to_bits());
                assert_eq!(u.im.to_bits(), v.im.to_bits());
            }
        }
    }

    #[test]
    fn load_rejects_bad_trace_naming_state() {
        let json = r#"{
            "alphabet_size": 2, "dim": 1,
            "states": [ [[[0.9, 0.0]]], [[[1.0, 0.0]]] ]
        }"#;
        let err = CqChannel::<f64>::load_from(json.as_bytes()).unwrap_err();
        match err {
            Error::InvalidState { index, .. } => assert_eq!(index, 0),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn load_rejects_structural_problems() {
        let truncated = r#"{"alphabet_size": 2, "dim": 1, "states": [[[[1.0,"#;
        assert!(matches!(
            CqChannel::<f64>::load_from(truncated.as_bytes()).unwrap_err(),
            Error::Json(_)
        ));
        let mismatch = r#"{"alphabet_size": 3, "dim": 1, "states": [[[[1.0, 0.0]]]]}"#;
        assert!(matches!(
            CqChannel::<f64>::load_from(mismatch.as_bytes()).unwrap_err(),
            Error::InvalidChannelFile { .. }
        ));
        let empty = r#"{"alphabet_size": 0, "dim": 1, "states": []}"#;
        assert!(matches!(
            CqChannel::<f64>::load_from(empty.as_bytes()).unwrap_err(),
            Error::InvalidChannelFile { .. }
        ));
    }

    #[test]
    fn save_writes_seventeen_significant_digits() {
        let ch = gen_noiseless_channel::<f64>(2).unwrap();
        let mut buf = Vec::new();
        ch.save_to(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("1.0000000000000000e0"), "{text}");
    }

    #[test]
    fn maximally_mixed_is_valid() {
        let rho = DensityOperator::<f64>::maximally_mixed(4);
        assert!((rho.operator().trace() - 1.0).abs() <= TOL);
    }
}
