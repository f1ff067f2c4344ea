//! Experiment drivers for the synthetic studies.
//!
//! Every experiment is a deterministic function of its parameters and seed. Trial
//! `t` draws its data from stream index `t`, trials run in parallel on the
//! ambient rayon pool, and results are aggregated in trial order, so the
//! emitted CSV does not depend on the thread count.

mod phase;
mod studies;
mod toy;

use crate::error::{invalid, Result};
use crate::solvers::RpcaConfig;
use crate::synth::{Corruption, PrngStream, SyntheticInstance};

pub use phase::{
    run_phase_diagram, run_rank_deficiency_map, CellResult, ExperimentResult, MethodStats,
    PhaseDiagramSpec, SweepAxis,
};
pub use studies::{
    run_convergence_trace, run_init_sensitivity, run_lambda_sweep, ConvergenceRow, ConvergenceSpec,
    ConvergenceSummary, ConvergenceTrace, InitMode, InitSensitivity, LambdaRow, LambdaSweep,
};
pub use toy::{run_toy_fig2, ToyArgmin, ToyFig2, ToyRow};

/// Solver variant compared by the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Partial sum of singular values with `N` = the true rank.
    Pssv,
    /// Nuclear norm, i.e. `N = 0`.
    Nuclear,
}

impl Method {
    pub const ALL: [Method; 2] = [Method::Pssv, Method::Nuclear];

    pub fn name(self) -> &'static str {
        match self {
            Method::Pssv => "pssv",
            Method::Nuclear => "nuclear",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "pssv" => Ok(Method::Pssv),
            "nuclear" => Ok(Method::Nuclear),
            other => invalid(format!(
                "unknown method `{other}` (expected pssv or nuclear)"
            )),
        }
    }

    pub fn config(self, rank: usize) -> RpcaConfig {
        match self {
            Method::Pssv => RpcaConfig::pssv(rank),
            Method::Nuclear => RpcaConfig::nuclear(),
        }
    }
}

/// A single planted-instance family: size, rank, corruption and seed.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceSpec {
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
    pub corruption_ratio: f64,
    pub corruption: Corruption,
    pub master_seed: u64,
}

impl InstanceSpec {
    pub fn new(
        rows: usize,
        cols: usize,
        rank: usize,
        corruption_ratio: f64,
        master_seed: u64,
    ) -> Self {
        Self {
            rows,
            cols,
            rank,
            corruption_ratio,
            corruption: Corruption::Replace,
            master_seed,
        }
    }

    /// Instance for trial `t`, drawn from stream index `t`.
    pub fn generate(&self, trial: u64) -> Result<SyntheticInstance> {
        let mut stream = PrngStream::new(self.master_seed, trial);
        SyntheticInstance::generate(
            self.rows,
            self.cols,
            self.rank,
            self.corruption_ratio,
            self.corruption,
            &mut stream,
        )
    }
}

/// Shortest round-trip formatting; identical values always print identically.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Mean in input order, so aggregation is independent of scheduling.
pub(crate) fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, count) = values
        .into_iter()
        .fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        f64::NAN
    } else {
        sum / count as f64
    }
}
