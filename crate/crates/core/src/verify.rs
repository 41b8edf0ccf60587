//! Runnable invariant suites over every module.
//!
//! Each check re-validates one documented invariant on freshly sampled
//! instances and reports a [`CheckOutcome`] instead of panicking, so the
//! whole battery always runs to completion and the command-line `verify`
//! subcommand can print a full report. The acceptance tests assert the same
//! inequalities at their contractual sample counts; this module is the
//! interactive/operational entry point.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::channel::{
    gen_commuting_channel, gen_noiseless_channel, gen_random_channel, CqChannel, PreparedChannel,
    StochasticMatrix,
};
use crate::diagnostics::{duality_gap, kl_divergence};
use crate::error::Result;
use crate::objective::{
    c_beta, divided_difference_g, gradient, gram_gamma, hessian_quadratic_form, mix, objective_s,
    smoothness_l, strong_convexity_mu, ProbVector, TangentVector,
};
use crate::oracle::{
    fd_gradient, fd_hessian_form, grid_search_min, sibson_check, GridSpec, FD_GRADIENT_STEP,
    FD_HESSIAN_STEP,
};
use crate::scalar::{real, RealScalar};
use crate::solver::{
    md_step_with_grad, safeguard, solve, EtaRule, Init, SolverConfig, StepsizeMode,
};
use crate::spectral::trace_product;

/// Result of one named invariant check.
#[derive(Clone, Debug)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed slack or the failure description.
    pub details: String,
}

/// What to run the suites over.
#[derive(Clone, Debug)]
pub struct VerifyConfig<T: RealScalar> {
    /// Number of seeded instances for the oracle-agreement and sampling
    /// suites; checks with their own fixed budgets (kernel pairs, generator
    /// seeds) do not scale with this.
    pub seeds: u64,
    /// `(n, d)` shapes for the channel-generator suite.
    pub sizes: Vec<(usize, usize)>,
    /// Optional user channel to put through the objective and solver spot
    /// checks alongside the generated instances.
    pub channel: Option<CqChannel<T>>,
}

impl<T: RealScalar> Default for VerifyConfig<T> {
    fn default() -> Self {
        Self {
            seeds: 20,
            sizes: vec![(10, 6), (4, 3)],
            channel: None,
        }
    }
}

/// Runs every suite and returns one outcome per named check.
pub fn run_all<T: RealScalar>(cfg: &VerifyConfig<T>) -> Vec<CheckOutcome> {
    let mut out = Vec::new();
    let mut push = |name: &'static str, r: std::result::Result<String, String>| {
        out.push(match r {
            Ok(details) => CheckOutcome {
                name,
                passed: true,
                details,
            },
            Err(details) => CheckOutcome {
                name,
                passed: false,
                details,
            },
        });
    };

    push("spectral_reconstruction", check_spectral_reconstruction::<T>());
    push("spectral_power_laws", check_spectral_power_laws::<T>());
    push("channel_generators", check_channel_generators::<T>(&cfg.sizes));
    push("channel_commuting_diagonal", check_commuting_diagonal::<T>());
    push("kernel_upper_bound", check_kernel_upper_bound::<T>());
    push("kernel_lower_bound", check_kernel_lower_bound::<T>());
    push("hessian_smoothness_sandwich", check_hessian_upper::<T>(cfg.seeds));
    push("hessian_strong_convexity", check_hessian_lower::<T>(cfg.seeds));
    push("bregman_smoothness", check_bregman::<T>(cfg.seeds));
    push("convexity_midpoint", check_convexity::<T>(cfg.seeds));
    push("euler_identity", check_euler::<T>(cfg.seeds));
    push("solver_feasibility", check_solver_feasibility::<T>());
    push("solver_descent", check_solver_descent::<T>());
    push("solver_sublinear_rate", check_solver_sublinear::<T>());
    push("solver_kl_contraction", check_solver_contraction::<T>());
    push("solver_shift_invariance", check_shift_invariance::<T>());
    push("gap_nonnegativity", check_gap_nonneg::<T>());
    push("gap_bounds_suboptimality", check_gap_suboptimality::<T>());
    push("gap_certificate", check_gap_certificate::<T>());
    push("kl_joint_convexity", check_kl_joint_convexity::<T>());
    push("oracle_fd_gradient", check_fd_gradient::<T>(cfg.seeds));
    push("oracle_fd_hessian", check_fd_hessian::<T>(cfg.seeds));
    push("oracle_grid_consistency", check_grid_consistency::<T>(cfg.seeds.min(8)));
    push("oracle_sibson", check_sibson::<T>(cfg.seeds.min(10)));
    push("duplicated_state_gamma", check_duplicated_state::<T>());
    if let Some(ch) = &cfg.channel {
        push("user_channel", check_user_channel(ch));
    }
    out
}

// ---------------------------------------------------------------------------
// Sampling helpers (deterministic per check)
// ---------------------------------------------------------------------------

fn sample_simplex<T: RealScalar>(n: usize, rng: &mut ChaCha8Rng) -> ProbVector<T> {
    // Dirichlet(1) via exponentials of uniforms.
    let values: Vec<T> = (0..n)
        .map(|_| {
            let u: f64 = rng.gen::<f64>();
            real(-(1.0 - u).ln())
        })
        .collect();
    ProbVector::normalized(values).expect("exponential draws are positive")
}

fn sample_tangent<T: RealScalar>(n: usize, rng: &mut ChaCha8Rng) -> TangentVector<T> {
    let values: Vec<T> = (0..n)
        .map(|_| {
            let g: f64 = StandardNormal.sample(rng);
            real(g)
        })
        .collect();
    TangentVector::projected(values)
}

fn local_norm_sq<T: RealScalar>(h: &TangentVector<T>, p: &ProbVector<T>) -> T {
    let mut acc = T::zero();
    for (&hx, &px) in h.values().iter().zip(p.values()) {
        acc += hx * hx / px;
    }
    acc
}

fn alphas() -> [f64; 5] {
    [0.25, 0.4, 0.5, 0.6, 0.8]
}

fn fmt(v: f64) -> String {
    format!("{v:.3e}")
}

fn err_str(e: crate::error::Error) -> String {
    format!("library error: {e}")
}

type Check = std::result::Result<String, String>;

// ---------------------------------------------------------------------------
// Spectral
// ---------------------------------------------------------------------------

fn check_spectral_reconstruction<T: RealScalar>() -> Check {
    let mut worst = 0.0f64;
    for seed in 0..50u64 {
        let d = 2 + (seed % 7) as usize;
        let op = crate::spectral::random_hermitian::<T>(d, seed);
        let dec = op.eigh().map_err(err_str)?;
        let rec = dec.reconstruction_residual(&op);
        let uni = dec.unitarity_residual();
        worst = worst
            .max(rec.to_f64().unwrap_or(f64::NAN))
            .max(uni.to_f64().unwrap_or(f64::NAN));
    }
    if worst <= 1e-10 {
        Ok(format!("worst residual {}", fmt(worst)))
    } else {
        Err(format!("residual {} exceeds 1e-10", fmt(worst)))
    }
}

fn check_spectral_power_laws<T: RealScalar>() -> Check {
    let mut worst = 0.0f64;
    for seed in 100..110u64 {
        let d = 2 + (seed % 4) as usize;
        let g = crate::spectral::random_hermitian::<T>(d, seed);
        // Square to a PSD operator so fractional powers are in-domain.
        let a = g.matrix_power(real(2.0)).map_err(err_str)?;
        let identity_err = residual(&a.matrix_power(T::one()).map_err(err_str)?, &a);
        if identity_err > 1e-12 {
            return Err(format!("matrix_power(A,1) residual {}", fmt(identity_err)));
        }
        let s = real::<T>(0.7);
        let t = real::<T>(0.9);
        let joint = a.matrix_power(s + t).map_err(err_str)?;
        let split_s = a.matrix_power(s).map_err(err_str)?;
        let split_t = a.matrix_power(t).map_err(err_str)?;
        let mut product = split_s.matrix().clone() * split_t.matrix();
        // Symmetrize the product of commuting Hermitian factors.
        let adj = product.adjoint();
        product += adj;
        product *= nalgebra::Complex::new(real::<T>(0.5), T::zero());
        let composed = crate::spectral::HermitianOperator::new(product).map_err(err_str)?;
        worst = worst.max(residual(&joint, &composed));
        // trace_product symmetry and bilinearity.
        let b = crate::spectral::random_hermitian::<T>(d, seed + 1000);
        let c = crate::spectral::random_hermitian::<T>(d, seed + 2000);
        let ab = trace_product(&a, &b).map_err(err_str)?;
        let ba = trace_product(&b, &a).map_err(err_str)?;
        let sum = crate::spectral::HermitianOperator::weighted_sum(
            &[b.clone(), c.clone()],
            &[real(2.0), real(-1.0)],
        )
        .map_err(err_str)?;
        let lin = trace_product(&a, &sum).map_err(err_str)?;
        let expect = real::<T>(2.0) * ab - trace_product(&a, &c).map_err(err_str)?;
        let sym_err = (ab - ba).abs().to_f64().unwrap_or(f64::NAN);
        let lin_err = (lin - expect).abs().to_f64().unwrap_or(f64::NAN);
        worst = worst.max(sym_err).max(lin_err);
    }
    if worst <= 1e-9 {
        Ok(format!("worst deviation {}", fmt(worst)))
    } else {
        Err(format!("deviation {} exceeds 1e-9", fmt(worst)))
    }
}

fn residual<T: RealScalar>(
    a: &crate::spectral::HermitianOperator<T>,
    b: &crate::spectral::HermitianOperator<T>,
) -> f64 {
    let mut diff = a.matrix().clone();
    diff -= b.matrix();
    diff.norm().to_f64().unwrap_or(f64::NAN)
}

// ---------------------------------------------------------------------------
// Channel
// ---------------------------------------------------------------------------

fn check_channel_generators<T: RealScalar>(sizes: &[(usize, usize)]) -> Check {
    let mut worst_trace = 0.0f64;
    let mut worst_min_eig = f64::INFINITY;
    for &(n, d) in sizes {
        for seed in 0..100u64 {
            let ch = gen_random_channel::<T>(n, d, real(1e-2), seed).map_err(err_str)?;
            for x in 0..n {
                let op = ch.state(x).operator();
                let tr = op.trace().to_f64().unwrap_or(f64::NAN);
                worst_trace = worst_trace.max((tr - 1.0).abs());
                let min_eig = op.eigenvalues().map_err(err_str)?[0]
                    .to_f64()
                    .unwrap_or(f64::NAN);
                worst_min_eig = worst_min_eig.min(min_eig);
            }
        }
    }
    // PSD holds with margin: the generator mixes in eps/d of the identity.
    if worst_trace <= 1e-10 && worst_min_eig >= -1e-12 {
        Ok(format!(
            "worst trace error {}, smallest eigenvalue {}",
            fmt(worst_trace),
            fmt(worst_min_eig)
        ))
    } else {
        Err(format!(
            "trace error {} or eigenvalue {} out of range",
            fmt(worst_trace),
            fmt(worst_min_eig)
        ))
    }
}

fn check_commuting_diagonal<T: RealScalar>() -> Check {
    let rows = vec![vec![0.6, 0.3, 0.1], vec![0.2, 0.5, 0.3]];
    let p = StochasticMatrix::<T>::new(
        rows.into_iter()
            .map(|r| r.into_iter().map(real).collect())
            .collect(),
    )
    .map_err(err_str)?;
    let ch = gen_commuting_channel(&p).map_err(err_str)?;
    let prep = PreparedChannel::prepare(ch, real(0.5)).map_err(err_str)?;
    let mut worst = 0.0f64;
    for x in 0..prep.alphabet_size() {
        let m = prep.powered(x).matrix();
        for i in 0..prep.dim() {
            for j in 0..prep.dim() {
                if i != j {
                    let mag = m[(i, j)].norm_sqr().to_f64().unwrap_or(f64::NAN).sqrt();
                    worst = worst.max(mag);
                }
            }
        }
    }
    if worst <= 1e-14 {
        Ok(format!("largest off-diagonal magnitude {}", fmt(worst)))
    } else {
        Err(format!("off-diagonal magnitude {} exceeds 1e-14", fmt(worst)))
    }
}

// ---------------------------------------------------------------------------
// Objective: kernel and curvature inequalities
// ---------------------------------------------------------------------------

const KERNEL_BETAS: [f64; 6] = [1.25, 1.5, 2.0, 2.5, 3.0, 4.0];

fn kernel_samples(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let a = (1.0 - rng.gen::<f64>()).max(1e-12);
    let b = (1.0 - rng.gen::<f64>()).max(1e-12);
    (a, b)
}

fn check_kernel_upper_bound<T: RealScalar>() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..10_000 {
        let (a, b) = kernel_samples(&mut rng);
        for beta in KERNEL_BETAS {
            let g: T = divided_difference_g(real(a), real(b), real(beta)).map_err(err_str)?;
            let c: T = c_beta(real::<T>(beta)).map_err(err_str)?;
            let bound = real::<T>(beta - 1.0)
                * c
                * (real::<T>(a.powf(beta - 2.0)) + real::<T>(b.powf(beta - 2.0)));
            let slack = (g - bound).to_f64().unwrap_or(f64::NAN);
            worst = worst.max(slack);
        }
    }
    if worst <= 1e-12 {
        Ok(format!("worst slack {}", fmt(worst)))
    } else {
        Err(format!("upper bound violated by {}", fmt(worst)))
    }
}

fn check_kernel_lower_bound<T: RealScalar>() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..10_000 {
        let (a, b) = kernel_samples(&mut rng);
        for beta in KERNEL_BETAS {
            let g: T = divided_difference_g(real(a), real(b), real(beta)).map_err(err_str)?;
            let base = if beta >= 2.0 { a.min(b) } else { a.max(b) };
            let bound = real::<T>((beta - 1.0) * base.powf(beta - 2.0));
            let slack = (bound - g).to_f64().unwrap_or(f64::NAN);
            worst = worst.max(slack);
        }
    }
    if worst <= 1e-12 {
        Ok(format!("worst slack {}", fmt(worst)))
    } else {
        Err(format!("lower bound violated by {}", fmt(worst)))
    }
}

fn objective_instances<T: RealScalar>(
    seeds: u64,
) -> Result<Vec<(PreparedChannel<T>, u64)>> {
    let mut out = Vec::new();
    for seed in 0..seeds {
        let alpha = alphas()[(seed % 5) as usize];
        let n = 3 + (seed % 3) as usize;
        let d = 2 + (seed % 3) as usize;
        let ch = gen_random_channel::<T>(n, d, real(1e-2), seed)?;
        out.push((PreparedChannel::prepare(ch, real(alpha))?, seed));
    }
    Ok(out)
}

fn check_hessian_upper<T: RealScalar>(seeds: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut worst = f64::NEG_INFINITY;
    for (ch, _) in objective_instances::<T>(seeds).map_err(err_str)? {
        let n = ch.alphabet_size();
        for _ in 0..4 {
            let p = safeguard(&sample_simplex(n, &mut rng), real(1e-3));
            let h = sample_tangent(n, &mut rng);
            let form = hessian_quadratic_form(&ch, &p, &h).map_err(err_str)?;
            let l = if ch.beta() >= real(2.0) {
                smoothness_l(&ch, T::one() / real(n as f64)).map_err(err_str)?
            } else {
                smoothness_l(&ch, p.min_value()).map_err(err_str)?
            };
            let slack = (form - l * local_norm_sq(&h, &p))
                .to_f64()
                .unwrap_or(f64::NAN);
            worst = worst.max(slack);
        }
    }
    if worst <= 1e-10 {
        Ok(format!("worst slack {}", fmt(worst)))
    } else {
        Err(format!("smoothness bound violated by {}", fmt(worst)))
    }
}

fn check_hessian_lower<T: RealScalar>(seeds: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let delta = real::<T>(1e-3);
    let mut worst = f64::NEG_INFINITY;
    for (ch, _) in objective_instances::<T>(seeds).map_err(err_str)? {
        let n = ch.alphabet_size();
        let mu = strong_convexity_mu(&ch, delta).map_err(err_str)?;
        for _ in 0..4 {
            let p = safeguard(&sample_simplex(n, &mut rng), delta);
            let h = sample_tangent(n, &mut rng);
            let form = hessian_quadratic_form(&ch, &p, &h).map_err(err_str)?;
            let slack = (mu * local_norm_sq(&h, &p) - form)
                .to_f64()
                .unwrap_or(f64::NAN);
            worst = worst.max(slack);
        }
    }
    if worst <= 1e-10 {
        Ok(format!("worst slack {}", fmt(worst)))
    } else {
        Err(format!("strong convexity bound violated by {}", fmt(worst)))
    }
}

fn check_bregman<T: RealScalar>(seeds: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let delta = real::<T>(1e-3);
    let mut worst = f64::NEG_INFINITY;
    for (ch, _) in objective_instances::<T>(seeds).map_err(err_str)? {
        let n = ch.alphabet_size();
        let l = if ch.beta() >= real(2.0) {
            smoothness_l(&ch, T::one() / real(n as f64)).map_err(err_str)?
        } else {
            smoothness_l(&ch, delta).map_err(err_str)?
        };
        for _ in 0..4 {
            let p = safeguard(&sample_simplex(n, &mut rng), delta);
            let q = safeguard(&sample_simplex(n, &mut rng), delta);
            let s_p = objective_s(&ch, &p).map_err(err_str)?;
            let s_q = objective_s(&ch, &q).map_err(err_str)?;
            let grad = gradient(&ch, &p).map_err(err_str)?;
            let mut linear = T::zero();
            for (g, (&qx, &px)) in grad.iter().zip(q.values().iter().zip(p.values())) {
                linear += *g * (qx - px);
            }
            let kl = kl_divergence(&q, &p).map_err(err_str)?;
            let slack = (s_q - (s_p + linear + l * kl)).to_f64().unwrap_or(f64::NAN);
            worst = worst.max(slack);
        }
    }
    if worst <= 1e-10 {
        Ok(format!("worst slack {}", fmt(worst)))
    } else {
        Err(format!("Bregman smoothness violated by {}", fmt(worst)))
    }
}

fn check_convexity<T: RealScalar>(seeds: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(45);
    let mut worst = f64::NEG_INFINITY;
    for (ch, _) in objective_instances::<T>(seeds).map_err(err_str)? {
        let n = ch.alphabet_size();
        for _ in 0..4 {
            let p = sample_simplex(n, &mut rng);
            let q = sample_simplex(n, &mut rng);
            let mid = ProbVector::normalized(
                p.values()
                    .iter()
                    .zip(q.values())
                    .map(|(&a, &b)| (a + b) / real(2.0))
                    .collect(),
            )
            .map_err(err_str)?;
            let s_mid = objective_s(&ch, &mid).map_err(err_str)?;
            let avg = (objective_s(&ch, &p).map_err(err_str)?
                + objective_s(&ch, &q).map_err(err_str)?)
                / real(2.0);
            worst = worst.max((s_mid - avg).to_f64().unwrap_or(f64::NAN));
        }
    }
    if worst <= 1e-12 {
        Ok(format!("worst midpoint slack {}", fmt(worst)))
    } else {
        Err(format!("convexity violated by {}", fmt(worst)))
    }
}

fn check_euler<T: RealScalar>(seeds: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(46);
    let mut worst = 0.0f64;
    for (ch, _) in objective_instances::<T>(seeds).map_err(err_str)? {
        let n = ch.alphabet_size();
        let p = safeguard(&sample_simplex(n, &mut rng), real(1e-6));
        let s = objective_s(&ch, &p).map_err(err_str)?;
        let grad = gradient(&ch, &p).map_err(err_str)?;
        let mut inner = T::zero();
        for (&g, &px) in grad.iter().zip(p.values()) {
            inner += g * px;
        }
        let dev = (inner - ch.beta() * s).abs().to_f64().unwrap_or(f64::NAN);
        worst = worst.max(dev);
    }
    if worst <= 1e-10 {
        Ok(format!("worst deviation {}", fmt(worst)))
    } else {
        Err(format!("Euler identity off by {}", fmt(worst)))
    }
}

// ---------------------------------------------------------------------------
// Solver
// ---------------------------------------------------------------------------

fn check_solver_feasibility<T: RealScalar>() -> Check {
    let delta = real::<T>(1e-3);
    let ch = PreparedChannel::prepare(
        gen_random_channel::<T>(5, 3, real(1e-2), 3).map_err(err_str)?,
        real(0.4),
    )
    .map_err(err_str)?;
    let eta = T::one() / smoothness_l(&ch, delta).map_err(err_str)?;
    let mut p = ProbVector::normalized(vec![real(5.0), T::one(), T::one(), T::one(), T::one()])
        .map_err(err_str)?;
    let mut worst_min = f64::INFINITY;
    let mut worst_sum = 0.0f64;
    for _ in 0..50 {
        let grad = gradient(&ch, &p).map_err(err_str)?;
        p = safeguard(&md_step_with_grad(&p, &grad, eta), delta);
        worst_min = worst_min.min(p.min_value().to_f64().unwrap_or(f64::NAN));
        let sum: f64 = p
            .values()
            .iter()
            .map(|v| v.to_f64().unwrap_or(f64::NAN))
            .sum();
        worst_sum = worst_sum.max((sum - 1.0).abs());
    }
    let floor = delta.to_f64().unwrap_or(f64::NAN) - 1e-15;
    if worst_min >= floor && worst_sum <= 1e-12 {
        Ok(format!(
            "smallest iterate entry {}, worst sum error {}",
            fmt(worst_min),
            fmt(worst_sum)
        ))
    } else {
        Err(format!(
            "iterate left the safeguarded simplex: min {}, sum error {}",
            fmt(worst_min),
            fmt(worst_sum)
        ))
    }
}

fn check_solver_descent<T: RealScalar>() -> Check {
    let ch = PreparedChannel::prepare(
        gen_random_channel::<T>(4, 3, real(1e-2), 9).map_err(err_str)?,
        real(0.4),
    )
    .map_err(err_str)?;
    let mut cfg = SolverConfig::new(real(0.4));
    cfg.stepsize_mode = StepsizeMode::Constant;
    cfg.max_iters = 300;
    cfg.tol = real(1e-13);
    let r = solve(&ch, &cfg).map_err(err_str)?;
    let mut worst = f64::NEG_INFINITY;
    for w in r.trace.windows(2) {
        let s_prev = w[0].s.to_f64().unwrap_or(f64::NAN);
        let s_pre = w[1].s_pre.map(|v| v.to_f64().unwrap_or(f64::NAN)).unwrap_or(f64::NAN);
        worst = worst.max(s_pre - s_prev);
    }
    if worst <= 1e-12 {
        Ok(format!("worst pre-safeguard ascent {}", fmt(worst)))
    } else {
        Err(format!("pre-safeguard ascent {}", fmt(worst)))
    }
}

fn sublinear_instances<T: RealScalar>() -> Result<Vec<(PreparedChannel<T>, T)>> {
    // Instances whose optimum is provably uniform by symmetry, with
    // closed-form S(p*): the noiseless channel and an embedded binary
    // symmetric channel.
    let mut out = Vec::new();
    for n in [2usize, 3] {
        let ch = PreparedChannel::prepare(gen_noiseless_channel::<T>(n)?, real(0.5))?;
        let s_star = real::<T>((n as f64).powf(-1.0));
        out.push((ch, s_star));
    }
    let bsc = StochasticMatrix::<T>::new(vec![
        vec![real(0.9), real(0.1)],
        vec![real(0.1), real(0.9)],
    ])?;
    let ch = PreparedChannel::prepare(gen_commuting_channel(&bsc)?, real(0.5))?;
    // S* = 2 ((0.9^0.5 + 0.1^0.5) / 2)^2 = 0.8 exactly at alpha = 1/2.
    out.push((ch, real(0.8)));
    Ok(out)
}

fn check_solver_sublinear<T: RealScalar>() -> Check {
    let mut worst = f64::NEG_INFINITY;
    for (ch, s_star) in sublinear_instances::<T>().map_err(err_str)? {
        let n = ch.alphabet_size();
        let l = smoothness_l(&ch, T::one() / real(n as f64)).map_err(err_str)?;
        let mut init = vec![T::one(); n];
        init[0] = real(3.0);
        let p0 = ProbVector::normalized(init).map_err(err_str)?;
        let kl0 = kl_divergence(&ProbVector::uniform(n), &p0).map_err(err_str)?;
        let mut cfg = SolverConfig::new(real(0.5));
        cfg.stepsize_mode = StepsizeMode::Constant;
        cfg.eta = EtaRule::Fixed(T::one() / l);
        cfg.init = Init::Custom(p0);
        cfg.tol = real(1e-16);
        cfg.max_iters = 1000;
        let r = solve(&ch, &cfg).map_err(err_str)?;
        for t_budget in [10usize, 100, 1000] {
            let mut best = f64::INFINITY;
            for rec in r.trace.iter().skip(1).take(t_budget) {
                best = best.min((rec.s - s_star).to_f64().unwrap_or(f64::NAN));
            }
            let bound = (l * kl0).to_f64().unwrap_or(f64::NAN) / t_budget as f64 + 1e-10;
            worst = worst.max(best - bound);
        }
    }
    if worst <= 0.0 {
        Ok(format!("worst margin to the rate bound {}", fmt(worst)))
    } else {
        Err(format!("sublinear bound violated by {}", fmt(worst)))
    }
}

fn check_solver_contraction<T: RealScalar>() -> Check {
    let delta = real::<T>(1e-3);
    let mut worst = f64::NEG_INFINITY;
    for n in [2usize, 3] {
        let ch = PreparedChannel::prepare(gen_noiseless_channel::<T>(n).map_err(err_str)?, real(0.5))
            .map_err(err_str)?;
        let l = smoothness_l(&ch, delta).map_err(err_str)?;
        let mu = strong_convexity_mu(&ch, delta).map_err(err_str)?;
        let rate = (T::one() - mu / l).to_f64().unwrap_or(f64::NAN) + 1e-6;
        let p_star = ProbVector::<T>::uniform(n);
        let mut init = vec![T::one(); n];
        init[0] = real(7.0 / 3.0);
        let mut p = ProbVector::normalized(init).map_err(err_str)?;
        for _ in 0..200 {
            let kl_prev = kl_divergence(&p_star, &p).map_err(err_str)?;
            if kl_prev.to_f64().unwrap_or(0.0) <= 1e-14 {
                break;
            }
            let grad = gradient(&ch, &p).map_err(err_str)?;
            let next = safeguard(&md_step_with_grad(&p, &grad, T::one() / l), delta);
            let kl_next = kl_divergence(&p_star, &next).map_err(err_str)?;
            let ratio = (kl_next / kl_prev).to_f64().unwrap_or(f64::NAN);
            worst = worst.max(ratio - rate);
            p = next;
        }
    }
    if worst <= 0.0 {
        Ok(format!("worst contraction margin {}", fmt(worst)))
    } else {
        Err(format!("KL contraction rate violated by {}", fmt(worst)))
    }
}

fn check_shift_invariance<T: RealScalar>() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(47);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let n = 2 + (rng.gen::<u64>() % 5) as usize;
        let p = sample_simplex::<T>(n, &mut rng);
        let v: Vec<T> = (0..n)
            .map(|_| real(<StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)))
            .collect();
        let shift = real::<T>(rng.gen::<f64>() * 10.0 - 5.0);
        let shifted: Vec<T> = v.iter().map(|&x| x + shift).collect();
        let eta = real::<T>(rng.gen::<f64>() + 0.1);
        let a = md_step_with_grad(&p, &v, eta);
        let b = md_step_with_grad(&p, &shifted, eta);
        for x in 0..n {
            worst = worst.max((a.get(x) - b.get(x)).abs().to_f64().unwrap_or(f64::NAN));
        }
    }
    if worst <= 1e-14 {
        Ok(format!("worst component deviation {}", fmt(worst)))
    } else {
        Err(format!("shift invariance off by {}", fmt(worst)))
    }
}

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

fn check_gap_nonneg<T: RealScalar>() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(48);
    let mut worst = f64::INFINITY;
    for seed in 0..250u64 {
        let alpha = alphas()[(seed % 5) as usize];
        let ch = PreparedChannel::prepare(
            gen_random_channel::<T>(4, 3, real(1e-2), seed).map_err(err_str)?,
            real(alpha),
        )
        .map_err(err_str)?;
        for _ in 0..4 {
            let p = safeguard(&sample_simplex(4, &mut rng), real(1e-6));
            let gap = duality_gap(&ch, &p).map_err(err_str)?.gap;
            worst = worst.min(gap.to_f64().unwrap_or(f64::NAN));
        }
    }
    if worst >= -1e-12 {
        Ok(format!("smallest gap {}", fmt(worst)))
    } else {
        Err(format!("negative gap {}", fmt(worst)))
    }
}

fn check_gap_suboptimality<T: RealScalar>() -> Check {
    // Noiseless channels have the oracle optimum p* = uniform.
    let mut rng = ChaCha8Rng::seed_from_u64(49);
    let mut worst = f64::NEG_INFINITY;
    for n in [2usize, 3, 4] {
        for alpha in [0.3, 0.5, 0.7] {
            let ch = PreparedChannel::prepare(
                gen_noiseless_channel::<T>(n).map_err(err_str)?,
                real(alpha),
            )
            .map_err(err_str)?;
            let s_star = objective_s(&ch, &ProbVector::uniform(n)).map_err(err_str)?;
            for _ in 0..10 {
                let p = safeguard(&sample_simplex(n, &mut rng), real(1e-6));
                let s = objective_s(&ch, &p).map_err(err_str)?;
                let gap = duality_gap(&ch, &p).map_err(err_str)?.gap;
                worst = worst.max((s - s_star - gap).to_f64().unwrap_or(f64::NAN));
            }
        }
    }
    if worst <= 1e-10 {
        Ok(format!("worst sandwich slack {}", fmt(worst)))
    } else {
        Err(format!("suboptimality exceeded the gap by {}", fmt(worst)))
    }
}

fn check_gap_certificate<T: RealScalar>() -> Check {
    // Solve to a tiny certified gap, then the solution must be no worse
    // than any sampled competitor.
    let ch = PreparedChannel::prepare(
        gen_random_channel::<T>(4, 3, real(1e-2), 31).map_err(err_str)?,
        real(0.5),
    )
    .map_err(err_str)?;
    let mut cfg = SolverConfig::new(real(0.5));
    cfg.tol = real(1e-12);
    // The optimum of this instance is interior; certifying 1e-12 takes
    // about fifty thousand iterations.
    cfg.max_iters = 100_000;
    cfg.trace_every = 100_000;
    let r = solve(&ch, &cfg).map_err(err_str)?;
    if r.gap_final.to_f64().unwrap_or(f64::NAN) > 1e-12 {
        return Err(format!(
            "solver did not certify 1e-12 (gap {})",
            fmt(r.gap_final.to_f64().unwrap_or(f64::NAN))
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..100 {
        let q = sample_simplex::<T>(4, &mut rng);
        let s_q = objective_s(&ch, &q).map_err(err_str)?;
        worst = worst.max((r.s_final - s_q).to_f64().unwrap_or(f64::NAN));
    }
    if worst <= 1e-9 {
        Ok(format!("worst competitor margin {}", fmt(worst)))
    } else {
        Err(format!("a sampled point beat the certified solution by {}", fmt(worst)))
    }
}

fn check_kl_joint_convexity<T: RealScalar>() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..200 {
        let n = 2 + (rng.gen::<u64>() % 4) as usize;
        let p1 = sample_simplex::<T>(n, &mut rng);
        let p2 = sample_simplex::<T>(n, &mut rng);
        let q1 = sample_simplex::<T>(n, &mut rng);
        let q2 = sample_simplex::<T>(n, &mut rng);
        let mix =
            |a: &ProbVector<T>, b: &ProbVector<T>| -> std::result::Result<ProbVector<T>, String> {
                ProbVector::normalized(
                    a.values()
                        .iter()
                        .zip(b.values())
                        .map(|(&x, &y)| (x + y) / real(2.0))
                        .collect(),
                )
                .map_err(err_str)
            };
        let p_mid = mix(&p1, &p2)?;
        let q_mid = mix(&q1, &q2)?;
        let lhs = kl_divergence(&p_mid, &q_mid).map_err(err_str)?;
        let rhs = (kl_divergence(&p1, &q1).map_err(err_str)?
            + kl_divergence(&p2, &q2).map_err(err_str)?)
            / real(2.0);
        worst = worst.max((lhs - rhs).to_f64().unwrap_or(f64::NAN));
    }
    if worst <= 1e-12 {
        Ok(format!("worst midpoint slack {}", fmt(worst)))
    } else {
        Err(format!("joint convexity violated by {}", fmt(worst)))
    }
}

// ---------------------------------------------------------------------------
// Oracles
// ---------------------------------------------------------------------------

fn check_fd_gradient<T: RealScalar>(seeds: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(52);
    let mut worst = 0.0f64;
    for seed in 0..seeds {
        let alpha = alphas()[(seed % 5) as usize];
        let ch = PreparedChannel::prepare(
            gen_random_channel::<T>(10, 6, real(1e-2), seed).map_err(err_str)?,
            real(alpha),
        )
        .map_err(err_str)?;
        let p = safeguard(&sample_simplex(10, &mut rng), real(1e-3));
        let fd = fd_gradient(&ch, &p, real(FD_GRADIENT_STEP)).map_err(err_str)?;
        let an = gradient(&ch, &p).map_err(err_str)?;
        for x in 0..10 {
            let rel = ((fd[x] - an[x]).abs() / an[x].abs().max(real(1e-30)))
                .to_f64()
                .unwrap_or(f64::NAN);
            worst = worst.max(rel);
        }
    }
    if worst <= 1e-6 {
        Ok(format!("worst relative error {}", fmt(worst)))
    } else {
        Err(format!("gradient disagrees with finite differences by {}", fmt(worst)))
    }
}

fn check_fd_hessian<T: RealScalar>(seeds: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(53);
    let mut worst = 0.0f64;
    for seed in 0..seeds {
        let alpha = alphas()[(seed % 5) as usize];
        let ch = PreparedChannel::prepare(
            gen_random_channel::<T>(10, 6, real(1e-2), seed).map_err(err_str)?,
            real(alpha),
        )
        .map_err(err_str)?;
        let p = safeguard(&sample_simplex(10, &mut rng), real(1e-2));
        let h = sample_tangent(10, &mut rng);
        let fd = fd_hessian_form(&ch, &p, &h, real(FD_HESSIAN_STEP)).map_err(err_str)?;
        let an = hessian_quadratic_form(&ch, &p, &h).map_err(err_str)?;
        let rel = ((fd - an).abs() / an.abs().max(real(1e-30)))
            .to_f64()
            .unwrap_or(f64::NAN);
        worst = worst.max(rel);
    }
    if worst <= 1e-4 {
        Ok(format!("worst relative error {}", fmt(worst)))
    } else {
        Err(format!("Hessian disagrees with finite differences by {}", fmt(worst)))
    }
}

fn check_grid_consistency<T: RealScalar>(seeds: u64) -> Check {
    let mut worst = f64::NEG_INFINITY;
    for seed in 0..seeds {
        let alpha = alphas()[(seed % 5) as usize];
        let n = 2 + (seed % 3) as usize;
        let d = 2 + (seed % 3) as usize;
        let ch = PreparedChannel::prepare(
            gen_random_channel::<T>(n, d, real(1e-2), seed + 300).map_err(err_str)?,
            real(alpha),
        )
        .map_err(err_str)?;
        let resolution = 150usize;
        let spec = GridSpec::new(resolution, n).map_err(err_str)?;
        let (_, s_grid) = grid_search_min(&ch, &spec).map_err(err_str)?;
        let mut cfg = SolverConfig::new(real(alpha));
        cfg.tol = real(1e-10);
        let r = solve(&ch, &cfg).map_err(err_str)?;
        // Gradient sup-norm bound: |grad_x| = beta Tr[M^(beta-1) A_x]
        // <= beta Tr[A_x] since the spectrum of M lies in [0, 1].
        let mut lip = T::zero();
        for x in 0..n {
            lip = lip.max(ch.beta() * ch.a_trace(x));
        }
        let mesh = (lip.to_f64().unwrap_or(f64::NAN)) * n as f64 / resolution as f64;
        let s_grid_f = s_grid.to_f64().unwrap_or(f64::NAN);
        let s_solve_f = r.s_final.to_f64().unwrap_or(f64::NAN);
        if s_grid_f < s_solve_f - 1e-9 {
            return Err(format!(
                "grid found a point below the certified minimum: {} vs {}",
                fmt(s_grid_f),
                fmt(s_solve_f)
            ));
        }
        worst = worst.max(s_grid_f - s_solve_f - mesh);
    }
    if worst <= 0.0 {
        Ok(format!("worst mesh-bound margin {}", fmt(worst)))
    } else {
        Err(format!("grid minimum further than the mesh bound: {}", fmt(worst)))
    }
}

fn check_sibson<T: RealScalar>(seeds: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(54);
    let mut worst_eq = 0.0f64;
    let mut worst_inf = f64::NEG_INFINITY;
    for seed in 0..seeds {
        let alpha = [0.3, 0.5, 0.7][(seed % 3) as usize];
        let ch = PreparedChannel::prepare(
            gen_random_channel::<T>(4, 3, real(5e-2), seed + 600).map_err(err_str)?,
            real(alpha),
        )
        .map_err(err_str)?;
        let p = safeguard(&sample_simplex(4, &mut rng), real(1e-3));
        let rep = sibson_check(&ch, &p, 10, seed).map_err(err_str)?;
        worst_eq = worst_eq.max(
            (rep.at_optimal - rep.reference)
                .abs()
                .to_f64()
                .unwrap_or(f64::NAN),
        );
        for v in &rep.at_random {
            worst_inf = worst_inf.max((rep.at_optimal - *v).to_f64().unwrap_or(f64::NAN));
        }
    }
    if worst_eq <= 1e-9 && worst_inf <= 1e-9 {
        Ok(format!(
            "worst equality error {}, worst infimum violation {}",
            fmt(worst_eq),
            fmt(worst_inf)
        ))
    } else {
        Err(format!(
            "Sibson identity: equality error {}, infimum violation {}",
            fmt(worst_eq),
            fmt(worst_inf)
        ))
    }
}

fn check_duplicated_state<T: RealScalar>() -> Check {
    let base = gen_random_channel::<T>(1, 3, real(1e-2), 77).map_err(err_str)?;
    let dup = CqChannel::new(vec![base.state(0).clone(), base.state(0).clone()])
        .map_err(err_str)?;
    let ch = PreparedChannel::prepare(dup, real(0.5)).map_err(err_str)?;
    let gamma = gram_gamma(&ch).map_err(err_str)?.to_f64().unwrap_or(f64::NAN);
    let mu = strong_convexity_mu(&ch, real(1e-3))
        .map_err(err_str)?
        .to_f64()
        .unwrap_or(f64::NAN);
    if gamma.abs() > 1e-10 {
        return Err(format!("duplicated states should zero gamma, got {}", fmt(gamma)));
    }
    if mu != 0.0 {
        return Err(format!("mu should be exactly 0 on the clamped path, got {}", fmt(mu)));
    }
    // The solve still runs (no linear rate is claimed, but the sublinear
    // machinery and the certificate are intact) and the capacity is 0.
    let mut cfg = SolverConfig::new(real(0.5));
    cfg.tol = real(1e-10);
    let r = solve(&ch, &cfg).map_err(err_str)?;
    let cap = r.capacity.to_f64().unwrap_or(f64::NAN);
    if cap.abs() <= 1e-7 {
        Ok(format!("gamma {}, capacity {}", fmt(gamma), fmt(cap)))
    } else {
        Err(format!("duplicated-state capacity should vanish, got {}", fmt(cap)))
    }
}

fn check_user_channel<T: RealScalar>(ch: &CqChannel<T>) -> Check {
    let alpha = real::<T>(0.5);
    let prep = PreparedChannel::prepare(ch.clone(), alpha).map_err(err_str)?;
    let n = prep.alphabet_size();
    // Euler identity and gap nonnegativity at a safeguarded sample.
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let floor = real::<T>(1e-6).min(T::one() / real(n as f64));
    let p = safeguard(&sample_simplex(n, &mut rng), floor);
    let s = objective_s(&prep, &p).map_err(err_str)?;
    let grad = gradient(&prep, &p).map_err(err_str)?;
    let mut inner = T::zero();
    for (&g, &px) in grad.iter().zip(p.values()) {
        inner += g * px;
    }
    let euler = (inner - prep.beta() * s).abs().to_f64().unwrap_or(f64::NAN);
    if euler > 1e-9 {
        return Err(format!("Euler identity off by {}", fmt(euler)));
    }
    let gap = duality_gap(&prep, &p).map_err(err_str)?.gap.to_f64().unwrap_or(f64::NAN);
    if gap < -1e-12 {
        return Err(format!("negative duality gap {}", fmt(gap)));
    }
    let mut cfg = SolverConfig::new(alpha);
    cfg.max_iters = 2000;
    let r = solve(&prep, &cfg).map_err(err_str)?;
    let m = mix(&prep, &r.p_final).map_err(err_str)?;
    let min_eig = m.eigenvalues().map_err(err_str)?[0].to_f64().unwrap_or(f64::NAN);
    Ok(format!(
        "capacity {} after {} iterations (gap {}, mixture min eigenvalue {})",
        fmt(r.capacity.to_f64().unwrap_or(f64::NAN)),
        r.iterations,
        fmt(r.gap_final.to_f64().unwrap_or(f64::NAN)),
        fmt(min_eig)
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduced_battery_passes() {
        // The full default battery runs in the acceptance suite and through
        // the command-line tool; a reduced configuration keeps this unit
        // test quick while still executing every check body.
        let cfg = VerifyConfig::<f64> {
            seeds: 4,
            sizes: vec![(4, 3)],
            channel: None,
        };
        let outcomes = run_all(&cfg);
        assert_eq!(outcomes.len(), 25);
        for o in &outcomes {
            assert!(o.passed, "{} failed: {}", o.name, o.details);
        }
    }

    #[test]
    fn user_channel_check_runs() {
        let ch = gen_random_channel::<f64>(3, 2, 1e-2, 5).unwrap();
        let cfg = VerifyConfig {
            seeds: 2,
            sizes: vec![(3, 2)],
            channel: Some(ch),
        };
        let outcomes = run_all(&cfg);
        assert_eq!(outcomes.len(), 26);
        let user = outcomes.last().unwrap();
        assert_eq!(user.name, "user_channel");
        assert!(user.passed, "{}", user.details);
    }
}
