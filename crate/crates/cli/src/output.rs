//! Output formatting shared by the subcommands: deterministic CSV cells,
//! the solve JSON schema, and log-base conversion.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use cqcap::solver::{SolveResult, StopReason};

/// Logarithm base for reported capacities. The library works in nats; this
/// is a presentation-only rescaling.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, clap::ValueEnum)]
pub enum LogBase {
    #[default]
    #[value(name = "e")]
    Natural,
    #[value(name = "2")]
    Two,
}

impl LogBase {
    pub fn convert(self, nats: f64) -> f64 {
        match self {
            LogBase::Natural => nats,
            LogBase::Two => nats / std::f64::consts::LN_2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            LogBase::Natural => "e",
            LogBase::Two => "2",
        }
    }
}

/// Formats a real for CSV: 17 significant digits in scientific notation,
/// which round-trips f64 exactly and keeps outputs byte-stable across runs.
pub fn csv_real(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:.16e}")
    }
}

pub fn stop_reason_label(reason: StopReason) -> &'static str {
    match reason {
        StopReason::Tolerance => "tolerance",
        StopReason::MaxIters => "max_iters",
    }
}

/// Opens the `--out` target, falling back to stdout when absent.
pub fn open_sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            let f = File::create(p)
                .with_context(|| format!("cannot create output file {}", p.display()))?;
            Box::new(BufWriter::new(f))
        }
        None => Box::new(io::stdout().lock()),
    })
}

// ---------------------------------------------------------------------------
// Solve JSON schema
// ---------------------------------------------------------------------------

/// Serialized form of one solve, written to stdout by the `solve` command.
/// The capacity is in the units selected by `--log-base`; everything else is
/// in natural units.
#[derive(Debug, Serialize, Deserialize)]
pub struct SolveOutput {
    pub alpha: f64,
    pub beta: f64,
    pub log_base: String,
    pub capacity: f64,
    pub s_final: f64,
    pub gap_final: f64,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub p_final: Vec<f64>,
    pub eta_base: f64,
    pub delta_floor: f64,
    pub constants: ConstantsOutput,
}

/// Curvature constants evaluated at the analysis floor.
#[derive(Debug, Serialize, Deserialize)]
pub struct ConstantsOutput {
    pub analysis_delta: f64,
    pub c_beta: f64,
    pub m_delta: f64,
    pub smoothness_l: f64,
    pub gamma: f64,
    pub mu: f64,
}

impl SolveOutput {
    pub fn from_result(r: &SolveResult<f64>, base: LogBase) -> Self {
        Self {
            alpha: r.constants.alpha,
            beta: r.constants.beta,
            log_base: base.label().to_string(),
            capacity: base.convert(r.capacity),
            s_final: r.s_final,
            gap_final: r.gap_final,
            iterations: r.iterations,
            stop_reason: r.stop_reason,
            p_final: r.p_final.values().to_vec(),
            eta_base: r.eta_base,
            delta_floor: r.delta_floor,
            constants: ConstantsOutput {
                analysis_delta: r.constants.delta,
                c_beta: r.constants.c_beta,
                m_delta: r.constants.m_delta,
                smoothness_l: r.constants.smoothness_l,
                gamma: r.constants.gamma,
                mu: r.constants.mu,
            },
        }
    }
}
