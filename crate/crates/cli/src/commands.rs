//! Implementations of the six subcommands. Each returns the process exit
//! code on success; `Err` means invalid input and maps to exit code 1.

use std::io::Write;
use std::time::Instant;

use anyhow::{ensure, Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use cqcap::channel::{
    gen_commuting_channel, gen_noiseless_channel, gen_random_channel, CqChannel, PreparedChannel,
    StochasticMatrix,
};
use cqcap::solver::{solve, EtaRule, SolveResult, SolverConfig, StepsizeMode, StopReason};
use cqcap::verify::{run_all, CheckOutcome, VerifyConfig};

use crate::grid::{parse_alpha_grid, parse_size_pairs, parse_stochastic_rows, parse_usize_list};
use crate::output::{csv_real, open_sink, stop_reason_label, SolveOutput};
use crate::{
    ChannelKind, GenArgs, ScaleArgs, SolveArgs, SolverFlags, StepsizeFlag, SweepArgs, TraceArgs,
    VerifyArgs, EXIT_MAX_ITERS, EXIT_OK, EXIT_VERIFY,
};

// ---------------------------------------------------------------------------
// gen
// ---------------------------------------------------------------------------

pub fn cmd_gen(args: GenArgs) -> Result<i32> {
    let channel: CqChannel<f64> = match args.kind {
        ChannelKind::Noiseless => {
            let n = args.n.context("--n is required for noiseless channels")?;
            gen_noiseless_channel(n)?
        }
        ChannelKind::Random => {
            let n = args.n.context("--n is required for random channels")?;
            let d = args.d.context("--d is required for random channels")?;
            gen_random_channel(n, d, args.epsilon, args.seed)?
        }
        ChannelKind::Commuting => {
            let rows = args
                .rows
                .as_deref()
                .context("--rows is required for commuting channels")?;
            let matrix = StochasticMatrix::new(parse_stochastic_rows(rows)?)?;
            gen_commuting_channel(&matrix)?
        }
    };
    match &args.out {
        Some(path) => channel
            .save(path)
            .with_context(|| format!("cannot write {}", path.display()))?,
        None => channel.save_to(std::io::stdout().lock())?,
    }
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

fn build_config(alpha: f64, flags: &SolverFlags) -> SolverConfig<f64> {
    let mut cfg = SolverConfig::new(alpha);
    cfg.tol = flags.tol;
    cfg.max_iters = flags.max_iters;
    cfg.delta_floor = flags.delta;
    cfg.analysis_delta = flags.analysis_delta;
    cfg.stepsize_mode = match flags.stepsize {
        StepsizeFlag::Constant => StepsizeMode::Constant,
        StepsizeFlag::Adaptive => StepsizeMode::Adaptive,
    };
    cfg.eta = match flags.eta.0 {
        Some(v) => EtaRule::Fixed(v),
        None => EtaRule::Auto,
    };
    cfg
}

fn exit_for(reason: StopReason) -> i32 {
    match reason {
        StopReason::Tolerance => EXIT_OK,
        StopReason::MaxIters => EXIT_MAX_ITERS,
    }
}

pub fn cmd_solve(args: SolveArgs) -> Result<i32> {
    let channel = CqChannel::<f64>::load(&args.channel)
        .with_context(|| format!("cannot load channel {}", args.channel.display()))?;
    let prepared = PreparedChannel::prepare(channel, args.alpha)?;
    let mut cfg = build_config(args.alpha, &args.solver);
    // The solve command reports only the endpoint; skip intermediate records.
    cfg.trace_every = cfg.max_iters.max(1);
    let result = solve(&prepared, &cfg)?;
    let output = SolveOutput::from_result(&result, args.log_base);
    let mut stdout = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut stdout, &output)?;
    writeln!(stdout)?;
    Ok(exit_for(result.stop_reason))
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct SweepRow {
    alpha: f64,
    outcome: std::result::Result<(SolveResult<f64>, f64), String>,
}

fn sweep_one(channel: &CqChannel<f64>, alpha: f64, flags: &SolverFlags) -> SweepRow {
    let started = Instant::now();
    let outcome = PreparedChannel::prepare(channel.clone(), alpha)
        .and_then(|prepared| {
            let mut cfg = build_config(alpha, flags);
            cfg.trace_every = cfg.max_iters.max(1);
            solve(&prepared, &cfg)
        })
        .map(|result| (result, started.elapsed().as_secs_f64()))
        .map_err(|e| e.to_string());
    SweepRow { alpha, outcome }
}

pub fn cmd_sweep(args: SweepArgs) -> Result<i32> {
    let channel = CqChannel::<f64>::load(&args.channel)
        .with_context(|| format!("cannot load channel {}", args.channel.display()))?;
    let alphas = parse_alpha_grid(&args.alphas)?;

    let rows: Vec<SweepRow> = if args.parallel || args.jobs.is_some() {
        let solve_all = || {
            alphas
                .par_iter()
                .map(|&alpha| sweep_one(&channel, alpha, &args.solver))
                .collect()
        };
        match args.jobs {
            Some(jobs) => {
                ensure!(jobs >= 1, "--jobs must be at least 1");
                rayon::ThreadPoolBuilder::new()
                    .num_threads(jobs)
                    .build()
                    .context("cannot build worker pool")?
                    .install(solve_all)
            }
            None => solve_all(),
        }
    } else {
        alphas
            .iter()
            .map(|&alpha| sweep_one(&channel, alpha, &args.solver))
            .collect()
    };

    let mut sink = open_sink(args.out.as_deref())?;
    writeln!(sink, "alpha,capacity,iterations,runtime_s,gap_final,stop_reason")?;
    let mut any_error = false;
    let mut any_max_iters = false;
    for row in &rows {
        match &row.outcome {
            Ok((result, runtime)) => {
                any_max_iters |= result.stop_reason == StopReason::MaxIters;
                writeln!(
                    sink,
                    "{},{},{},{},{},{}",
                    csv_real(row.alpha),
                    csv_real(args.log_base.convert(result.capacity)),
                    result.iterations,
                    csv_real(*runtime),
                    csv_real(result.gap_final),
                    stop_reason_label(result.stop_reason),
                )?;
            }
            Err(message) => {
                any_error = true;
                eprintln!("sweep: alpha = {} failed: {message}", row.alpha);
                writeln!(
                    sink,
                    "{},nan,0,nan,nan,error",
                    csv_real(row.alpha),
                )?;
            }
        }
    }
    sink.flush()?;
    Ok(if any_error {
        crate::EXIT_INPUT
    } else if any_max_iters {
        EXIT_MAX_ITERS
    } else {
        EXIT_OK
    })
}

// ---------------------------------------------------------------------------
// trace
// ---------------------------------------------------------------------------

pub fn cmd_trace(args: TraceArgs) -> Result<i32> {
    let channel = CqChannel::<f64>::load(&args.channel)
        .with_context(|| format!("cannot load channel {}", args.channel.display()))?;
    let prepared = PreparedChannel::prepare(channel, args.alpha)?;
    let mut cfg = build_config(args.alpha, &args.solver);
    ensure!(args.trace_every >= 1, "--trace-every must be at least 1");
    cfg.trace_every = args.trace_every;
    let result = solve(&prepared, &cfg)?;

    let mut sink = open_sink(args.out.as_deref())?;
    writeln!(sink, "t,s,gap,eta,s_pre,kl_prev")?;
    let opt = |v: Option<f64>| v.map(csv_real).unwrap_or_default();
    for rec in &result.trace {
        writeln!(
            sink,
            "{},{},{},{},{},{}",
            rec.t,
            csv_real(rec.s),
            csv_real(rec.gap),
            opt(rec.eta),
            opt(rec.s_pre),
            opt(rec.kl_prev),
        )?;
    }
    sink.flush()?;
    Ok(exit_for(result.stop_reason))
}

// ---------------------------------------------------------------------------
// scale
// ---------------------------------------------------------------------------

fn median(samples: &mut [f64]) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).expect("runtimes are finite"));
    let mid = samples.len() / 2;
    if samples.len() % 2 == 1 {
        samples[mid]
    } else {
        0.5 * (samples[mid - 1] + samples[mid])
    }
}

pub fn cmd_scale(args: ScaleArgs) -> Result<i32> {
    let n_list = parse_usize_list(&args.n_list).context("--n-list")?;
    let d_list = parse_usize_list(&args.d_list).context("--d-list")?;
    ensure!(args.repeats >= 1, "--repeats must be at least 1");

    let mut cells: Vec<(&'static str, usize, usize)> = Vec::new();
    for &n in &n_list {
        cells.push(("alphabet", n, args.fixed_d));
    }
    for &d in &d_list {
        cells.push(("dimension", args.fixed_n, d));
    }

    let mut sink = open_sink(args.out.as_deref())?;
    writeln!(sink, "varied,n,d,repeats,runtime_median_s")?;
    let mut alphabet_medians: Vec<(usize, f64)> = Vec::new();
    for (varied, n, d) in cells {
        let mut runtimes = Vec::with_capacity(args.repeats);
        for rep in 0..args.repeats {
            let channel = gen_random_channel::<f64>(n, d, args.epsilon, args.seed + rep as u64)?;
            let prepared = PreparedChannel::prepare(channel, args.alpha)?;
            let mut cfg = build_config(args.alpha, &args.solver);
            cfg.trace_every = cfg.max_iters.max(1);
            let started = Instant::now();
            let _ = solve(&prepared, &cfg)?;
            runtimes.push(started.elapsed().as_secs_f64());
        }
        let med = median(&mut runtimes);
        if varied == "alphabet" {
            alphabet_medians.push((n, med));
        }
        writeln!(
            sink,
            "{varied},{n},{d},{},{}",
            args.repeats,
            csv_real(med),
        )?;
    }
    sink.flush()?;

    // Runtimes normally grow with the alphabet; flag inversions without
    // failing, since wall-clock noise on small instances is expected.
    for pair in alphabet_medians.windows(2) {
        if pair[1].1 < pair[0].1 {
            eprintln!(
                "warning: median runtime decreased from n = {} ({:.3e}s) to n = {} ({:.3e}s)",
                pair[0].0, pair[0].1, pair[1].0, pair[1].1
            );
        }
    }
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct VerifyReport<'a> {
    passed: usize,
    failed: usize,
    checks: Vec<VerifyCheck<'a>>,
}

#[derive(Serialize)]
struct VerifyCheck<'a> {
    name: &'a str,
    passed: bool,
    details: &'a str,
}

pub fn cmd_verify(args: VerifyArgs) -> Result<i32> {
    let mut cfg = VerifyConfig::<f64>::default();
    if let Some(seeds) = args.seeds {
        ensure!(seeds >= 1, "--seeds must be at least 1");
        cfg.seeds = seeds;
    }
    if let Some(sizes) = &args.sizes {
        cfg.sizes = parse_size_pairs(sizes)?;
    }
    // A channel file that fails to load or validate is itself a finding:
    // report it as a failed check rather than an input error.
    let mut outcomes: Vec<CheckOutcome> = Vec::new();
    if let Some(path) = &args.channel {
        match CqChannel::<f64>::load(path) {
            Ok(channel) => cfg.channel = Some(channel),
            Err(e) => outcomes.push(CheckOutcome {
                name: "user_channel",
                passed: false,
                details: format!("{}: {e}", path.display()),
            }),
        }
    }
    outcomes.extend(run_all(&cfg));

    let mut stdout = std::io::stdout().lock();
    for outcome in &outcomes {
        writeln!(
            stdout,
            "{} {:<28} {}",
            if outcome.passed { "PASS" } else { "FAIL" },
            outcome.name,
            outcome.details,
        )?;
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    let report = VerifyReport {
        passed: outcomes.len() - failed,
        failed,
        checks: outcomes
            .iter()
            .map(|o| VerifyCheck {
                name: o.name,
                passed: o.passed,
                details: &o.details,
            })
            .collect(),
    };
    serde_json::to_writer(&mut stdout, &report)?;
    writeln!(stdout)?;
    Ok(if failed == 0 { EXIT_OK } else { EXIT_VERIFY })
}
