//! Hermitian operators and spectral calculus.
//!
//! Every quantity in this crate reduces to eigendecompositions of small
//! Hermitian matrices: objective values are symmetric functions of the
//! eigenvalues, matrix powers are `U f(Lambda) U*`, and the exact Hessian
//! form is evaluated in the eigenbasis of the mixture operator. The backing
//! dense solver is nalgebra's self-adjoint eigensolver; this module fixes the
//! conventions on top of it (ascending eigenvalue order, symmetrization on
//! construction, the eigenvalue floor for fractional powers).

use nalgebra::{Complex, DMatrix};

use crate::consts::{EIG_FLOOR, HERM_TOL, PSD_TOL};
use crate::error::{Error, Result};
use crate::scalar::{real, RealScalar};

/// Iteration cap handed to the eigensolver; hitting it surfaces as
/// [`Error::EigNonConvergence`] instead of a hang.
const EIG_MAX_SWEEPS: usize = 10_000;

/// Dense Hermitian operator. The stored matrix is exactly self-adjoint:
/// construction symmetrizes `(A + A*)/2` after checking the input deviates
/// from symmetry by at most [`HERM_TOL`] entrywise.
#[derive(Clone, Debug)]
pub struct HermitianOperator<T: RealScalar> {
    mat: DMatrix<Complex<T>>,
}

impl<T: RealScalar> HermitianOperator<T> {
    /// Wraps a square matrix after validating Hermitian symmetry.
    pub fn new(mat: DMatrix<Complex<T>>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::NotSquare {
                rows: mat.nrows(),
                cols: mat.ncols(),
            });
        }
        if mat.nrows() == 0 {
            return Err(Error::DimMismatch { expected: 1, got: 0 });
        }
        let mut residual = T::zero();
        for i in 0..mat.nrows() {
            for j in i..mat.ncols() {
                let dev = (mat[(i, j)] - mat[(j, i)].conj()).norm_sqr();
                residual = residual.max(dev);
            }
        }
        let residual = residual.sqrt();
        if residual > real(HERM_TOL) {
            return Err(Error::NotHermitian {
                residual: residual.to_f64().unwrap_or(f64::NAN),
                tol: HERM_TOL,
            });
        }
        Ok(Self::symmetrize(mat))
    }

    /// Wraps a matrix that is Hermitian by construction up to round-off
    /// (outputs of `U f(Lambda) U*`, convex mixtures of Hermitian terms).
    pub(crate) fn from_roundoff_hermitian(mat: DMatrix<Complex<T>>) -> Self {
        Self::symmetrize(mat)
    }

    fn symmetrize(mut mat: DMatrix<Complex<T>>) -> Self {
        let half = Complex::new(real(0.5), T::zero());
        for i in 0..mat.nrows() {
            for j in i..mat.ncols() {
                if i == j {
                    mat[(i, i)] = Complex::new(mat[(i, i)].re, T::zero());
                } else {
                    let avg = (mat[(i, j)] + mat[(j, i)].conj()) * half;
                    mat[(i, j)] = avg;
                    mat[(j, i)] = avg.conj();
                }
            }
        }
        Self { mat }
    }

    /// Identity operator on a `d`-dimensional space.
    pub fn identity(d: usize) -> Self {
        Self {
            mat: DMatrix::identity(d, d),
        }
    }

    /// Diagonal operator with the given real diagonal.
    pub fn from_real_diagonal(diag: &[T]) -> Self {
        let d = diag.len();
        Self {
            mat: DMatrix::from_fn(d, d, |i, j| {
                if i == j {
                    Complex::new(diag[i], T::zero())
                } else {
                    Complex::new(T::zero(), T::zero())
                }
            }),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex<T>> {
        &self.mat
    }

    /// Trace; real because the diagonal of a Hermitian matrix is real.
    pub fn trace(&self) -> T {
        let mut acc = T::zero();
        for i in 0..self.dim() {
            acc += self.mat[(i, i)].re;
        }
        acc
    }

    /// Entrywise weighted sum `sum_x w_x O_x` of operators on one space.
    pub fn weighted_sum(ops: &[Self], weights: &[T]) -> Result<Self> {
        if ops.is_empty() || ops.len() != weights.len() {
            return Err(Error::DimMismatch {
                expected: ops.len().max(1),
                got: weights.len(),
            });
        }
        let d = ops[0].dim();
        let mut acc: DMatrix<Complex<T>> = DMatrix::zeros(d, d);
        for (op, &w) in ops.iter().zip(weights.iter()) {
            if op.dim() != d {
                return Err(Error::DimMismatch {
                    expected: d,
                    got: op.dim(),
                });
            }
            let c = Complex::new(w, T::zero());
            acc.zip_apply(&op.mat, |a, b| *a += b * c);
        }
        Ok(Self::from_roundoff_hermitian(acc))
    }

    /// Full eigendecomposition, eigenvalues ascending.
    pub fn eigh(&self) -> Result<SpectralDecomposition<T>> {
        let dim = self.dim();
        let se = nalgebra::SymmetricEigen::try_new(
            self.mat.clone(),
            T::default_epsilon(),
            EIG_MAX_SWEEPS,
        )
        .ok_or_else(|| Error::EigNonConvergence {
            dim,
            cond_estimate: self.gershgorin_cond_estimate(),
        })?;

        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| {
            se.eigenvalues[a]
                .partial_cmp(&se.eigenvalues[b])
                .expect("eigenvalues of a Hermitian matrix are not NaN")
        });
        let eigenvalues: Vec<T> = order.iter().map(|&i| se.eigenvalues[i]).collect();
        let mut eigenvectors = DMatrix::zeros(dim, dim);
        for (dst, &src) in order.iter().enumerate() {
            eigenvectors.column_mut(dst).copy_from(&se.eigenvectors.column(src));
        }
        Ok(SpectralDecomposition {
            eigenvalues,
            eigenvectors,
        })
    }

    /// Eigenvalues only (ascending); cheaper than [`Self::eigh`] when the
    /// basis is not needed, e.g. plain objective evaluations.
    pub fn eigenvalues(&self) -> Result<Vec<T>> {
        let vals = self.mat.clone().symmetric_eigenvalues();
        let mut out: Vec<T> = vals.iter().copied().collect();
        out.sort_by(|a, b| {
            a.partial_cmp(b)
                .expect("eigenvalues of a Hermitian matrix are not NaN")
        });
        Ok(out)
    }

    /// `A^t` through the spectral decomposition.
    ///
    /// Domain policy per eigenvalue `lam`, with the zero band
    /// `lam <=` [`EIG_FLOOR`]:
    /// * integer `t >= 0`: defined for every `lam`;
    /// * integer `t < 0`: `|lam|` in the zero band is a domain error;
    /// * fractional `t > 0`: a floored `lam` (down to `-`[`PSD_TOL`]) maps to
    ///   exactly 0, so PSD operators with null directions stay powerable;
    ///   `lam < -`[`PSD_TOL`] is a domain error;
    /// * fractional `t < 0`: any `lam` in the zero band is a domain error.
    pub fn matrix_power(&self, t: T) -> Result<Self> {
        let dec = self.eigh()?;
        dec.try_apply(|lam| scalar_power(lam, t))
    }

    /// Gershgorin-disc condition estimate used in diagnostics; cheap and
    /// deliberately crude.
    fn gershgorin_cond_estimate(&self) -> f64 {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.dim() {
            let center = self.mat[(i, i)].re.to_f64().unwrap_or(f64::NAN);
            let mut radius = 0.0;
            for j in 0..self.dim() {
                if j != i {
                    let m: T = self.mat[(i, j)].norm_sqr();
                    radius += m.to_f64().unwrap_or(f64::NAN).sqrt();
                }
            }
            lo = lo.min(center - radius);
            hi = hi.max(center + radius);
        }
        let spread = hi.abs().max(lo.abs());
        let closest_to_zero = if lo <= 0.0 && hi >= 0.0 {
            0.0
        } else {
            lo.abs().min(hi.abs())
        };
        spread / closest_to_zero.max(EIG_FLOOR)
    }
}

/// Scalar power with the eigenvalue-floor domain policy of
/// [`HermitianOperator::matrix_power`].
pub(crate) fn scalar_power<T: RealScalar>(lam: T, t: T) -> Result<T> {
    let t64 = t.to_f64().unwrap_or(f64::NAN);
    let floor = real(EIG_FLOOR);
    let is_integer = t64.fract() == 0.0 && t64.abs() <= i32::MAX as f64;
    if is_integer {
        let k = t64 as i32;
        if k >= 0 {
            return Ok(lam.powi(k));
        }
        if lam.abs() <= floor {
            return Err(power_domain_error(lam, t));
        }
        return Ok(lam.powi(k));
    }
    if lam > floor {
        if t64.is_finite() {
            Ok(lam.powf(t))
        } else {
            Err(power_domain_error(lam, t))
        }
    } else if t64 > 0.0 && lam >= -real::<T>(PSD_TOL) {
        Ok(T::zero())
    } else {
        Err(power_domain_error(lam, t))
    }
}

fn power_domain_error<T: RealScalar>(lam: T, t: T) -> Error {
    Error::PowerDomain {
        eigenvalue: lam.to_f64().unwrap_or(f64::NAN),
        exponent: t.to_f64().unwrap_or(f64::NAN),
        floor: EIG_FLOOR,
    }
}

/// Eigendecomposition of a Hermitian operator: ascending eigenvalues and a
/// unitary whose columns are the matching eigenvectors.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition<T: RealScalar> {
    eigenvalues: Vec<T>,
    eigenvectors: DMatrix<Complex<T>>,
}

impl<T: RealScalar> SpectralDecomposition<T> {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> &[T] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<Complex<T>> {
        &self.eigenvectors
    }

    pub fn min_eigenvalue(&self) -> T {
        self.eigenvalues[0]
    }

    pub fn max_eigenvalue(&self) -> T {
        self.eigenvalues[self.eigenvalues.len() - 1]
    }

    /// `U f(Lambda) U*` for a total function of the eigenvalues.
    pub fn apply(&self, f: impl Fn(T) -> T) -> HermitianOperator<T> {
        self.try_apply(|lam| Ok(f(lam)))
            .expect("total eigenvalue function cannot fail")
    }

    /// `U f(Lambda) U*` where `f` may reject an eigenvalue.
    pub fn try_apply(&self, f: impl Fn(T) -> Result<T>) -> Result<HermitianOperator<T>> {
        let mut scaled = self.eigenvectors.clone();
        for (i, &lam) in self.eigenvalues.iter().enumerate() {
            let fi = f(lam)?;
            let c = Complex::new(fi, T::zero());
            for v in scaled.column_mut(i).iter_mut() {
                *v *= c;
            }
        }
        let mat = &scaled * self.eigenvectors.adjoint();
        Ok(HermitianOperator::from_roundoff_hermitian(mat))
    }

    /// Conjugates `h` into this eigenbasis: `U* H U`.
    pub fn into_basis(&self, h: &HermitianOperator<T>) -> Result<DMatrix<Complex<T>>> {
        if h.dim() != self.dim() {
            return Err(Error::DimMismatch {
                expected: self.dim(),
                got: h.dim(),
            });
        }
        Ok(self.eigenvectors.adjoint() * h.matrix() * &self.eigenvectors)
    }

    /// Frobenius norm of `U Lambda U* - A`.
    pub fn reconstruction_residual(&self, original: &HermitianOperator<T>) -> T {
        let rebuilt = self.apply(|lam| lam);
        let mut acc = T::zero();
        for (a, b) in rebuilt.mat.iter().zip(original.mat.iter()) {
            acc += (*a - *b).norm_sqr();
        }
        acc.sqrt()
    }

    /// Frobenius norm of `U* U - I`.
    pub fn unitarity_residual(&self) -> T {
        let gram = self.eigenvectors.adjoint() * &self.eigenvectors;
        let mut acc = T::zero();
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                let target = if i == j {
                    Complex::new(T::one(), T::zero())
                } else {
                    Complex::new(T::zero(), T::zero())
                };
                acc += (gram[(i, j)] - target).norm_sqr();
            }
        }
        acc.sqrt()
    }
}

/// `Re Tr[A B]`, exact for Hermitian pairs where the trace is real; the
/// imaginary part is asserted small in debug builds.
pub fn trace_product<T: RealScalar>(
    a: &HermitianOperator<T>,
    b: &HermitianOperator<T>,
) -> Result<T> {
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let mut re = T::zero();
    let mut im = T::zero();
    for i in 0..a.dim() {
        for j in 0..a.dim() {
            let prod = a.mat[(i, j)] * b.mat[(j, i)];
            re += prod.re;
            im += prod.im;
        }
    }
    debug_assert!(
        im.abs() <= real(1e-10),
        "trace of a product of Hermitian operators must be real",
    );
    Ok(re)
}

/// Squared Frobenius norm `sum_ij |A_ij|^2 = Tr[A^2]` for Hermitian `A`.
pub fn frobenius_norm_sq<T: RealScalar>(a: &HermitianOperator<T>) -> T {
    let mut acc = T::zero();
    for v in a.mat.iter() {
        acc += v.norm_sqr();
    }
    acc
}

/// Seeded random Hermitian draw used by the self-verification suites and
/// the in-crate tests: the Hermitian part of a complex Ginibre matrix, with
/// entries drawn row-major (real part before imaginary part).
pub(crate) fn random_hermitian<T: RealScalar>(d: usize, seed: u64) -> HermitianOperator<T> {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::from_fn(d, d, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex::new(crate::scalar::real::<T>(re), crate::scalar::real::<T>(im))
    });
    let h = (&g + g.adjoint()) * Complex::new(crate::scalar::real::<T>(0.5), T::zero());
    HermitianOperator::new(h).expect("hermitian by construction")
}
