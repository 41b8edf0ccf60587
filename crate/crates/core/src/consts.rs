//! Numerical policy constants shared across modules.
//!
//! These are deliberate design values, not tunables: changing them changes
//! the documented behavior of validation and of the divided-difference
//! kernel, so they live in one place.

/// Eigenvalues at or below this are treated as exactly zero. Fractional
/// powers of zero are fine for positive exponents (0^t = 0); negative
/// exponents on a floored eigenvalue are a domain error.
pub const EIG_FLOOR: f64 = 1e-14;

/// Relative eigenvalue-gap threshold below which the first divided
/// difference of t -> t^(beta-1) switches to its midpoint derivative form.
pub const DD_SWITCH: f64 = 1e-7;

/// Max absolute deviation from Hermitian symmetry accepted on construction;
/// inputs within it are symmetrized, anything worse is rejected.
pub const HERM_TOL: f64 = 1e-12;

/// Eigenvalues of a density operator may undershoot zero by at most this.
pub const PSD_TOL: f64 = 1e-10;

/// Max deviation of a density-operator trace from one.
pub const TRACE_TOL: f64 = 1e-10;

/// Max deviation from normalization accepted for probability vectors and
/// row-stochastic rows before renormalization; also the tangent-sum budget.
pub const PROB_TOL: f64 = 1e-12;

/// Strict lower bound on the smallest eigenvalue of sum_x W_x demanded at
/// channel construction and load (standing non-singularity assumption).
pub const NONSING_TOL: f64 = 1e-12;

/// Doubling/halving range of the adaptive stepsize search: eta ranges over
/// eta_base * 2^k with |k| <= K.
pub const ADAPTIVE_K: i32 = 30;

/// Hard cap on grid-search lattice size.
pub const GRID_MAX_POINTS: u128 = 10_000_000;

/// Grid search is restricted to alphabets of at most this size.
pub const GRID_MAX_ALPHABET: usize = 4;
