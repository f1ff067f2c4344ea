use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::matcore::{linf_norm, DenseMatrix};
use crate::metrics::{nrmse, SUCCESS_THRESHOLD};
use crate::solvers::{
    solve_rpca, solve_rpca_from, solve_rpca_observed, RpcaConfig, RpcaStart, RpcaState,
};
use crate::synth::PrngStream;

use super::{fmt_f64, mean, InstanceSpec, Method};

/// Starting points used by [`run_init_sensitivity`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitMode {
    /// The solver's default start for every run.
    Zero,
    /// `A₀`, `E₀`, `Z₀` with entries drawn from U[−1, 1] and scaled by `max|O_ij|`.
    Random,
    /// Default start plus U[−1, 1] noise scaled by `epsilon · max|O_ij|`.
    Perturbed { epsilon: f64 },
}

/// NRMSE of PSSV solves of one instance from many starting points.
#[derive(Debug, Clone, PartialEq)]
pub struct InitSensitivity {
    pub nrmse: Vec<f64>,
    pub iterations: Vec<usize>,
    pub converged: Vec<bool>,
    pub success_fraction: f64,
}

impl InitSensitivity {
    /// Decade bin edges for the NRMSE histogram.
    pub const BIN_EDGES: [f64; 8] = [0.0, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0];

    /// Counts per `[edge_k, edge_{k+1})`, with a final bin for NRMSE ≥ 1.
    pub fn histogram(&self) -> Vec<(f64, f64, usize)> {
        let edges = Self::BIN_EDGES;
        let mut bins: Vec<(f64, f64, usize)> = edges
            .windows(2)
            .map(|w| (w[0], w[1], 0))
            .chain(std::iter::once((1.0, f64::INFINITY, 0)))
            .collect();
        for &e in &self.nrmse {
            if let Some(bin) = bins.iter_mut().find(|(lo, hi, _)| e >= *lo && e < *hi) {
                bin.2 += 1;
            } else if let Some(last) = bins.last_mut() {
                last.2 += 1;
            }
        }
        bins
    }

    /// `init,nrmse,iterations,converged`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("init,nrmse,iterations,converged\n");
        for (k, e) in self.nrmse.iter().enumerate() {
            let _ = writeln!(
                out,
                "{k},{},{},{}",
                fmt_f64(*e),
                self.iterations[k],
                self.converged[k]
            );
        }
        out
    }

    /// `lower,upper,count`
    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("lower,upper,count\n");
        for (lo, hi, count) in self.histogram() {
            let _ = writeln!(out, "{},{},{count}", fmt_f64(lo), fmt_f64(hi));
        }
        out
    }
}

fn uniform_sym(stream: &mut PrngStream, rows: usize, cols: usize, scale: f64) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = scale * stream.uniform_in(-1.0, 1.0);
        }
    }
    m
}

/// Solves trial 0 of `instance` with PSSV (`N` = true rank) from `n_inits`
/// starting points. The instance uses stream 0 of the master seed and start
/// `k` draws from stream `k + 1`.
pub fn run_init_sensitivity(
    instance: &InstanceSpec,
    n_inits: usize,
    mode: InitMode,
) -> Result<InitSensitivity> {
    if n_inits == 0 {
        return invalid("n_inits must be positive");
    }
    let inst = instance.generate(0)?;
    let observed = &inst.observed;
    let cfg = RpcaConfig::pssv(instance.rank);
    let (rows, cols) = observed.shape();
    let scale = linf_norm(observed);
    let default_multiplier = RpcaState::new(observed, &cfg)?.multiplier().clone();

    let runs: Vec<Result<(f64, usize, bool)>> = (0..n_inits as u64)
        .into_par_iter()
        .map(|k| {
            let mut stream = PrngStream::new(instance.master_seed, k + 1);
            let start = match mode {
                InitMode::Zero => RpcaStart::Default,
                InitMode::Random => RpcaStart::Given {
                    low_rank: uniform_sym(&mut stream, rows, cols, scale),
                    sparse: uniform_sym(&mut stream, rows, cols, scale),
                    multiplier: uniform_sym(&mut stream, rows, cols, scale),
                },
                InitMode::Perturbed { epsilon } => {
                    let s = epsilon * scale;
                    RpcaStart::Given {
                        low_rank: uniform_sym(&mut stream, rows, cols, s),
                        sparse: uniform_sym(&mut stream, rows, cols, s),
                        multiplier: &default_multiplier + uniform_sym(&mut stream, rows, cols, s),
                    }
                }
            };
            let sol = solve_rpca_from(observed, &cfg, start)?;
            Ok((
                nrmse(&inst.low_rank, &sol.low_rank)?,
                sol.iterations,
                sol.converged,
            ))
        })
        .collect();

    let mut out = InitSensitivity {
        nrmse: Vec::with_capacity(n_inits),
        iterations: Vec::with_capacity(n_inits),
        converged: Vec::with_capacity(n_inits),
        success_fraction: 0.0,
    };
    for run in runs {
        let (e, it, conv) = run?;
        out.nrmse.push(e);
        out.iterations.push(it);
        out.converged.push(conv);
    }
    out.success_fraction =
        out.nrmse.iter().filter(|e| **e < SUCCESS_THRESHOLD).count() as f64 / n_inits as f64;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaRow {
    pub l: f64,
    pub lambda: f64,
    pub method: Method,
    pub mean_nrmse: f64,
    pub success_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaSweep {
    pub rows: Vec<LambdaRow>,
}

impl LambdaSweep {
    pub fn row(&self, l: f64, method: Method) -> Option<&LambdaRow> {
        self.rows.iter().find(|r| r.l == l && r.method == method)
    }

    /// `l,lambda,method,mean_nrmse,success_ratio`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("l,lambda,method,mean_nrmse,success_ratio\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                fmt_f64(r.l),
                fmt_f64(r.lambda),
                r.method.name(),
                fmt_f64(r.mean_nrmse),
                fmt_f64(r.success_ratio)
            );
        }
        out
    }
}

/// Mean NRMSE over `trials` instances for `λ = L / sqrt(max(m, n))`.
pub fn run_lambda_sweep(
    instance: &InstanceSpec,
    l_values: &[f64],
    trials: usize,
    methods: &[Method],
) -> Result<LambdaSweep> {
    if l_values.is_empty() || l_values.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
        return invalid("L values must be positive and non-empty");
    }
    if trials == 0 || methods.is_empty() {
        return invalid("need at least one trial and one method");
    }
    let base = RpcaConfig::default_lambda(instance.rows, instance.cols);
    let errors: Vec<Result<Vec<f64>>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let inst = instance.generate(t)?;
            let mut errs = Vec::with_capacity(l_values.len() * methods.len());
            for &l in l_values {
                for &method in methods {
                    let cfg = method.config(instance.rank).with_lambda(l * base);
                    let sol = solve_rpca(&inst.observed, &cfg)?;
                    errs.push(nrmse(&inst.low_rank, &sol.low_rank)?);
                }
            }
            Ok(errs)
        })
        .collect();
    let errors: Vec<Vec<f64>> = errors.into_iter().collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for (i, &l) in l_values.iter().enumerate() {
        for (j, &method) in methods.iter().enumerate() {
            let k = i * methods.len() + j;
            let per_trial: Vec<f64> = errors.iter().map(|e| e[k]).collect();
            rows.push(LambdaRow {
                l,
                lambda: l * base,
                method,
                mean_nrmse: mean(per_trial.iter().copied()),
                success_ratio: per_trial.iter().filter(|e| **e < SUCCESS_THRESHOLD).count() as f64
                    / trials as f64,
            });
        }
    }
    Ok(LambdaSweep { rows })
}

/// Instance family for the convergence traces.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceSpec {
    pub rows: usize,
    pub cols: usize,
    pub ranks: Vec<usize>,
    pub corruption_ratio: f64,
    pub trials: usize,
    pub master_seed: u64,
    pub methods: Vec<Method>,
}

impl Default for ConvergenceSpec {
    fn default() -> Self {
        Self {
            rows: 1000,
            cols: 40,
            ranks: vec![2, 3, 4],
            corruption_ratio: 0.05,
            trials: 5,
            master_seed: 0,
            methods: Method::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub rank: usize,
    pub method: Method,
    /// 1-based.
    pub iteration: usize,
    /// `‖A_GT − Â‖_F/‖A_GT‖_F + ‖E_GT − Ê‖_F/‖E_GT‖_F`, trial mean.
    pub combined_error: f64,
    /// `‖O − A − E‖_F/‖O‖_F`, trial mean.
    pub feasibility: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceSummary {
    pub rank: usize,
    pub method: Method,
    pub mean_iterations: f64,
    pub final_combined_error: f64,
    /// Largest final feasibility over the trials.
    pub worst_final_feasibility: f64,
    pub all_converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTrace {
    pub rows: Vec<ConvergenceRow>,
    pub summary: Vec<ConvergenceSummary>,
}

impl ConvergenceTrace {
    pub fn summary_for(&self, rank: usize, method: Method) -> Option<&ConvergenceSummary> {
        self.summary
            .iter()
            .find(|s| s.rank == rank && s.method == method)
    }

    /// `rank,method,iteration,combined_error,feasibility`. Trials that stop
    /// early contribute their final values to later iterations.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rank,method,iteration,combined_error,feasibility\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.rank,
                r.method.name(),
                r.iteration,
                fmt_f64(r.combined_error),
                fmt_f64(r.feasibility)
            );
        }
        out
    }

    /// `rank,method,mean_iterations,final_combined_error,worst_final_feasibility,all_converged`
    pub fn summary_csv(&self) -> String {
        let mut out =
            String::from("rank,method,mean_iterations,final_combined_error,worst_final_feasibility,all_converged\n");
        for s in &self.summary {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                s.rank,
                s.method.name(),
                fmt_f64(s.mean_iterations),
                fmt_f64(s.final_combined_error),
                fmt_f64(s.worst_final_feasibility),
                s.all_converged
            );
        }
        out
    }
}

struct TrialTrace {
    combined: Vec<f64>,
    feasibility: Vec<f64>,
    converged: bool,
}

fn relative_or_absolute(truth: &DenseMatrix, estimate: &DenseMatrix) -> f64 {
    let scale = truth.norm();
    let diff = (truth - estimate).norm();
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Per-iteration combined recovery error and feasibility residual, averaged
/// over trials, for each rank and method.
pub fn run_convergence_trace(spec: &ConvergenceSpec) -> Result<ConvergenceTrace> {
    if spec.ranks.is_empty() || spec.trials == 0 || spec.methods.is_empty() {
        return invalid("need at least one rank, trial and method");
    }
    let jobs: Vec<(usize, usize, u64)> = spec
        .ranks
        .iter()
        .flat_map(|&rank| {
            spec.methods
                .iter()
                .enumerate()
                .flat_map(move |(m, _)| (0..spec.trials as u64).map(move |t| (rank, m, t)))
        })
        .collect();

    let traces: Vec<Result<TrialTrace>> = jobs
        .par_iter()
        .map(|&(rank, m, t)| {
            let instance = InstanceSpec::new(
                spec.rows,
                spec.cols,
                rank,
                spec.corruption_ratio,
                spec.master_seed,
            );
            let inst = instance.generate(t)?;
            let cfg = spec.methods[m].config(rank);
            let mut combined = Vec::new();
            let mut feasibility = Vec::new();
            let sol = solve_rpca_observed(&inst.observed, &cfg, RpcaStart::Default, |state| {
                combined.push(
                    relative_or_absolute(&inst.low_rank, state.low_rank())
                        + relative_or_absolute(&inst.sparse, state.sparse()),
                );
                feasibility.push(state.feasibility());
            })?;
            Ok(TrialTrace {
                combined,
                feasibility,
                converged: sol.converged,
            })
        })
        .collect();
    let traces: Vec<TrialTrace> = traces.into_iter().collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for (g, group) in traces.chunks(spec.trials).enumerate() {
        let rank = spec.ranks[g / spec.methods.len()];
        let method = spec.methods[g % spec.methods.len()];
        let longest = group.iter().map(|t| t.combined.len()).max().unwrap_or(0);
        let at = |v: &Vec<f64>, k: usize| v.get(k).or(v.last()).copied().unwrap_or(f64::NAN);
        for k in 0..longest {
            rows.push(ConvergenceRow {
                rank,
                method,
                iteration: k + 1,
                combined_error: mean(group.iter().map(|t| at(&t.combined, k))),
                feasibility: mean(group.iter().map(|t| at(&t.feasibility, k))),
            });
        }
        summary.push(ConvergenceSummary {
            rank,
            method,
            mean_iterations: mean(group.iter().map(|t| t.combined.len() as f64)),
            final_combined_error: mean(group.iter().map(|t| at(&t.combined, usize::MAX))),
            worst_final_feasibility: group
                .iter()
                .map(|t| at(&t.feasibility, usize::MAX))
                .fold(0.0, f64::max),
            all_converged: group.iter().all(|t| t.converged),
        });
    }
    Ok(ConvergenceTrace { rows, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> InstanceSpec {
        InstanceSpec::new(200, 20, 2, 0.05, 11)
    }

    #[test]
    fn zero_init_reproduces_default_solve() {
        let spec = small();
        let sens = run_init_sensitivity(&spec, 1, InitMode::Zero).unwrap();
        let inst = spec.generate(0).unwrap();
        let sol = solve_rpca(&inst.observed, &RpcaConfig::pssv(2)).unwrap();
        assert_eq!(sens.nrmse[0], nrmse(&inst.low_rank, &sol.low_rank).unwrap());
        assert_eq!(sens.iterations[0], sol.iterations);
    }

    #[test]
    fn histogram_counts_every_run() {
        let sens =
            run_init_sensitivity(&small(), 4, InitMode::Perturbed { epsilon: 1e-3 }).unwrap();
        assert_eq!(sens.histogram().iter().map(|b| b.2).sum::<usize>(), 4);
        assert_eq!(sens.to_csv().lines().count(), 5);
    }

    #[test]
    fn unit_l_matches_default_lambda() {
        let spec = small();
        let sweep = run_lambda_sweep(&spec, &[1.0], 1, &[Method::Pssv]).unwrap();
        let inst = spec.generate(0).unwrap();
        let sol = solve_rpca(&inst.observed, &RpcaConfig::pssv(2)).unwrap();
        assert_eq!(
            sweep.rows[0].mean_nrmse,
            nrmse(&inst.low_rank, &sol.low_rank).unwrap()
        );
    }

    #[test]
    fn convergence_trace_shapes() {
        let spec = ConvergenceSpec {
            rows: 150,
            cols: 20,
            ranks: vec![2],
            trials: 2,
            ..ConvergenceSpec::default()
        };
        let trace = run_convergence_trace(&spec).unwrap();
        assert_eq!(trace.summary.len(), 2);
        for s in &trace.summary {
            assert!(s.all_converged);
            assert!(s.worst_final_feasibility < 1e-7);
        }
        let first = trace.rows.iter().filter(|r| r.iteration == 1).count();
        assert_eq!(first, 2);
    }
}
