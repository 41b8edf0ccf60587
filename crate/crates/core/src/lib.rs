//! Petz-Renyi capacity of finite classical-quantum channels.
//!
//! A channel W assigns a d-dimensional density operator W_x to each of n
//! input symbols. For a Renyi order alpha in (0,1) the capacity is
//!
//! ```text
//! C_alpha(W) = (alpha / (alpha - 1)) * ln( min_p Tr[ M(p)^(1/alpha) ] ),
//! M(p) = sum_x p_x W_x^alpha,
//! ```
//!
//! the minimum taken over probability vectors p. The trace-power objective
//! S(p) = Tr[M(p)^beta] with beta = 1/alpha > 1 is convex, smooth relative to
//! the negative entropy, and is minimized here by entropic mirror descent
//! with explicit smoothness and strong-convexity constants, a simplex-floor
//! safeguard, and a duality-gap stopping certificate.
//!
//! Module map:
//! * [`spectral`]: Hermitian operators, eigendecomposition, matrix powers.
//! * [`channel`]: density operators, channel construction, generators, JSON I/O.
//! * [`objective`]: S(p), its gradient and exact Hessian form, curvature constants.
//! * [`solver`]: the mirror-descent loop with safeguard, stepsize control, trace.
//! * [`diagnostics`]: duality gap and Kullback-Leibler divergence.
//! * [`oracle`]: finite-difference and grid-search cross-checks, Petz-Renyi
//!   divergence, classical baseline.
//! * [`verify`]: runnable invariant suites over all modules.
//!
//! All numerics are generic over the real scalar through [`RealScalar`]
//! (`f32` or `f64`); the `*64` aliases below fix the default precision used
//! by the command-line tool. Logarithms are natural throughout the library;
//! conversion to bits is a presentation concern.

// Guards are written in the negated form `!(x > 0)` on purpose: it rejects
// NaN along with the out-of-range values, which `x <= 0` would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Indexed loops walk several arrays in lockstep in the numerical kernels.
#![allow(clippy::needless_range_loop)]

pub mod channel;
pub mod consts;
pub mod diagnostics;
pub mod error;
pub mod objective;
pub mod oracle;
pub mod scalar;
pub mod solver;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::RealScalar;

/// Default precision for CLI and most call sites.
pub type Real = f64;

pub type HermitianOperator64 = spectral::HermitianOperator<f64>;
pub type DensityOperator64 = channel::DensityOperator<f64>;
pub type CqChannel64 = channel::CqChannel<f64>;
pub type PreparedChannel64 = channel::PreparedChannel<f64>;
pub type ProbVector64 = objective::ProbVector<f64>;
pub type TangentVector64 = objective::TangentVector<f64>;
pub type CurvatureConstants64 = objective::CurvatureConstants<f64>;
pub type SolverConfig64 = solver::SolverConfig<f64>;
pub type SolveResult64 = solver::SolveResult<f64>;
pub type TraceRecord64 = solver::TraceRecord<f64>;
pub type GapReport64 = diagnostics::GapReport<f64>;
pub type SibsonReport64 = oracle::SibsonReport<f64>;
pub type VerifyConfig64 = verify::VerifyConfig<f64>;
