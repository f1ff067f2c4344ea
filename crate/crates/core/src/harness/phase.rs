use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::metrics::{nrmse, rank_deficiency_ratio, TrialOutcome, SUCCESS_THRESHOLD};
use crate::solvers::solve_rpca;
use crate::synth::Corruption;

use super::{fmt_f64, mean, InstanceSpec, Method};

/// Which matrix dimension the phase diagram sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Vary the number of columns `n` (observations) with `m` fixed.
    Columns,
    /// Vary the number of rows `m` (dimension) with `n` fixed.
    Rows,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Columns => "columns",
            SweepAxis::Rows => "rows",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "columns" => Ok(SweepAxis::Columns),
            "rows" => Ok(SweepAxis::Rows),
            other => invalid(format!("unknown axis `{other}` (expected columns or rows)")),
        }
    }
}

/// Grid over (swept dimension × corruption ratio), `trials` instances per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDiagramSpec {
    pub axis: SweepAxis,
    pub fixed_dim: usize,
    pub sweep_values: Vec<usize>,
    pub corruption_grid: Vec<f64>,
    pub true_rank: usize,
    /// Rank handed to the PSSV solver; defaults to `true_rank`.
    pub target_rank: Option<usize>,
    pub methods: Vec<Method>,
    pub trials: usize,
    pub master_seed: u64,
    pub corruption: Corruption,
    pub success_threshold: f64,
}

impl Default for PhaseDiagramSpec {
    /// Desk-scale column sweep: `m = 1000`, rank 3, 20 trials per cell.
    fn default() -> Self {
        Self {
            axis: SweepAxis::Columns,
            fixed_dim: 1000,
            sweep_values: vec![6, 10, 16, 25, 40],
            corruption_grid: vec![0.0, 0.05, 0.1, 0.15, 0.2, 0.3, 0.4],
            true_rank: 3,
            target_rank: None,
            methods: Method::ALL.to_vec(),
            trials: 20,
            master_seed: 0,
            corruption: Corruption::Replace,
            success_threshold: SUCCESS_THRESHOLD,
        }
    }
}

impl PhaseDiagramSpec {
    pub fn validate(&self) -> Result<()> {
        if self.sweep_values.is_empty() {
            return invalid("sweep values must be non-empty");
        }
        if self.sweep_values.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("sweep values must be strictly increasing");
        }
        if self.corruption_grid.is_empty() {
            return invalid("corruption grid must be non-empty");
        }
        if self
            .corruption_grid
            .iter()
            .any(|r| !(0.0..=0.4).contains(r))
        {
            return invalid("corruption ratios must lie in [0, 0.4]");
        }
        if self.methods.is_empty() {
            return invalid("at least one method is required");
        }
        if self.trials == 0 {
            return invalid("trials must be positive");
        }
        if self.fixed_dim == 0 {
            return invalid("fixed dimension must be positive");
        }
        let smallest = self.fixed_dim.min(self.sweep_values[0]);
        if self.true_rank == 0 || self.true_rank > smallest {
            return invalid(format!("true rank must lie in 1..={smallest}"));
        }
        if self.pssv_rank() > smallest {
            return invalid(format!("target rank must not exceed {smallest}"));
        }
        Ok(())
    }

    pub fn pssv_rank(&self) -> usize {
        self.target_rank.unwrap_or(self.true_rank)
    }

    fn shape(&self, param: usize) -> (usize, usize) {
        match self.axis {
            SweepAxis::Columns => (self.fixed_dim, param),
            SweepAxis::Rows => (param, self.fixed_dim),
        }
    }

    fn instance(&self, param: usize, corruption_ratio: f64) -> InstanceSpec {
        let (rows, cols) = self.shape(param);
        InstanceSpec {
            rows,
            cols,
            rank: self.true_rank,
            corruption_ratio,
            corruption: self.corruption,
            master_seed: self.master_seed,
        }
    }
}

/// Aggregate of one method over the trials of one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodStats {
    pub method: Method,
    pub trials: usize,
    pub successes: usize,
    pub success_ratio: f64,
    pub mean_nrmse: f64,
    pub mean_deficiency_ratio: f64,
    /// Trials whose recovered `σ_N / σ_1` fell below 0.01.
    pub deficient_trials: usize,
    pub deficiency_fraction: f64,
    pub mean_iterations: f64,
    /// Seconds; never serialized.
    pub mean_wall_time: f64,
}

impl MethodStats {
    fn aggregate(method: Method, outcomes: &[TrialOutcome]) -> Self {
        let trials = outcomes.len();
        let successes = outcomes.iter().filter(|o| o.success).count();
        let deficient_trials = outcomes.iter().filter(|o| o.is_deficient()).count();
        Self {
            method,
            trials,
            successes,
            success_ratio: successes as f64 / trials as f64,
            mean_nrmse: mean(outcomes.iter().map(|o| o.nrmse)),
            mean_deficiency_ratio: mean(outcomes.iter().map(|o| o.deficiency_ratio)),
            deficient_trials,
            deficiency_fraction: deficient_trials as f64 / trials as f64,
            mean_iterations: mean(outcomes.iter().map(|o| o.iterations as f64)),
            mean_wall_time: mean(outcomes.iter().map(|o| o.wall_time)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub param: usize,
    pub corruption_ratio: f64,
    pub methods: Vec<MethodStats>,
}

impl CellResult {
    pub fn stats(&self, method: Method) -> Option<&MethodStats> {
        self.methods.iter().find(|s| s.method == method)
    }
}

/// Cells in sweep-major, corruption-minor order.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub axis: SweepAxis,
    pub cells: Vec<CellResult>,
}

impl ExperimentResult {
    pub fn cell(&self, param: usize, corruption_ratio: f64) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| c.param == param && c.corruption_ratio == corruption_ratio)
    }

    /// Columns: `axis,param,corruption,method,trials,success_ratio,mean_nrmse,
    /// mean_deficiency_ratio,deficiency_fraction,mean_iterations`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "axis,param,corruption,method,trials,success_ratio,mean_nrmse,mean_deficiency_ratio,deficiency_fraction,mean_iterations\n",
        );
        for cell in &self.cells {
            for s in &cell.methods {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{}",
                    self.axis.name(),
                    cell.param,
                    fmt_f64(cell.corruption_ratio),
                    s.method.name(),
                    s.trials,
                    fmt_f64(s.success_ratio),
                    fmt_f64(s.mean_nrmse),
                    fmt_f64(s.mean_deficiency_ratio),
                    fmt_f64(s.deficiency_fraction),
                    fmt_f64(s.mean_iterations),
                );
            }
        }
        out
    }
}

fn run_trial(spec: &PhaseDiagramSpec, instance: &InstanceSpec, trial: u64) -> Vec<TrialOutcome> {
    let Ok(inst) = instance.generate(trial) else {
        return vec![TrialOutcome::failed(); spec.methods.len()];
    };
    spec.methods
        .iter()
        .map(|&method| {
            let cfg = match method {
                Method::Pssv => method.config(spec.pssv_rank()),
                Method::Nuclear => method.config(0),
            };
            let start = Instant::now();
            let Ok(sol) = solve_rpca(&inst.observed, &cfg) else {
                return TrialOutcome::failed();
            };
            let wall_time = start.elapsed().as_secs_f64();
            let (Ok(error), Ok(ratio)) = (
                nrmse(&inst.low_rank, &sol.low_rank),
                rank_deficiency_ratio(&sol.low_rank, spec.true_rank),
            ) else {
                return TrialOutcome::failed();
            };
            TrialOutcome::with_threshold(
                error,
                ratio,
                sol.iterations,
                sol.converged,
                wall_time,
                spec.success_threshold,
            )
        })
        .collect()
}

/// Success ratio of each method over the (swept dimension × corruption) grid.
///
/// A solve that errors counts as a failure rather than aborting the sweep.
pub fn run_phase_diagram(spec: &PhaseDiagramSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let cells: Vec<(usize, f64)> = spec
        .sweep_values
        .iter()
        .flat_map(|&p| spec.corruption_grid.iter().map(move |&r| (p, r)))
        .collect();
    let jobs: Vec<(usize, u64)> = (0..cells.len())
        .flat_map(|c| (0..spec.trials as u64).map(move |t| (c, t)))
        .collect();
    let outcomes: Vec<Vec<TrialOutcome>> = jobs
        .par_iter()
        .map(|&(c, t)| {
            let (param, ratio) = cells[c];
            run_trial(spec, &spec.instance(param, ratio), t)
        })
        .collect();

    let results = cells
        .iter()
        .enumerate()
        .map(|(c, &(param, corruption_ratio))| {
            let block = &outcomes[c * spec.trials..(c + 1) * spec.trials];
            let methods = spec
                .methods
                .iter()
                .enumerate()
                .map(|(k, &method)| {
                    let per_method: Vec<TrialOutcome> = block.iter().map(|o| o[k]).collect();
                    MethodStats::aggregate(method, &per_method)
                })
                .collect();
            CellResult {
                param,
                corruption_ratio,
                methods,
            }
        })
        .collect();
    Ok(ExperimentResult {
        axis: spec.axis,
        cells: results,
    })
}

/// The phase-diagram sweep read through its rank-deficiency columns: each
/// cell's `deficiency_fraction` is the share of trials whose recovered
/// `σ_N / σ_1` fell below 0.01, with `N` the true rank.
pub fn run_rank_deficiency_map(spec: &PhaseDiagramSpec) -> Result<ExperimentResult> {
    run_phase_diagram(spec)
}
