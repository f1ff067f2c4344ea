use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Subcommand};

use pssv::harness::{
    run_convergence_trace, run_init_sensitivity, run_lambda_sweep, run_phase_diagram,
    run_rank_deficiency_map, run_toy_fig2, ConvergenceSpec, InitMode, InstanceSpec, Method,
    PhaseDiagramSpec, SweepAxis,
};
use pssv::synth::Corruption;

use super::CmdResult;

#[derive(Args)]
pub struct ExperimentArgs {
    #[command(subcommand)]
    study: Study,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Master seed; trial t uses stream t of this seed.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Trials per cell (or per L, or per rank).
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Study {
    /// Success ratio over a size sweep and corruption grid.
    /// Writes phase_diagram.csv.
    PhaseDiagram(GridArgs),
    /// Fraction of rank-deficient solutions over the same sweep.
    /// Writes deficiency_map.csv.
    DeficiencyMap(GridArgs),
    /// Nuclear vs. partial-sum norm on two 2x2 families.
    /// Writes toy_fig2.csv and toy_fig2_argmin.csv.
    ToyFig2,
    /// NRMSE of one instance solved from many starting points.
    /// Writes init_sensitivity.csv and init_histogram.csv.
    InitSensitivity(InitArgs),
    /// Mean NRMSE for lambda = L / sqrt(max(m, n)).
    /// Writes lambda_sweep.csv.
    LambdaSweep(LambdaArgs),
    /// Per-iteration recovery error and feasibility.
    /// Writes convergence_trace.csv and convergence_summary.csv.
    ConvergenceTrace(TraceArgs),
}

#[derive(Args)]
struct GridArgs {
    /// Which dimension is swept.
    #[arg(long, default_value = "columns", value_parser = parse_axis)]
    axis: SweepAxis,
    /// Size of the dimension that is not swept.
    #[arg(long, default_value_t = 1000)]
    fixed_dim: usize,
    /// Comma-separated, strictly increasing sizes.
    #[arg(long, value_delimiter = ',', default_value = "6,10,16,25,40")]
    sweep: Vec<usize>,
    /// Comma-separated corruption ratios in [0, 0.4].
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0,0.05,0.1,0.15,0.2,0.3,0.4"
    )]
    corruption: Vec<f64>,
    /// Rank of the planted matrix.
    #[arg(long, default_value_t = 3)]
    rank: usize,
    /// Rank handed to the PSSV solver; defaults to --rank.
    #[arg(long)]
    target_rank: Option<usize>,
    #[arg(long, value_delimiter = ',', default_value = "pssv,nuclear", value_parser = parse_method)]
    methods: Vec<Method>,
    /// Add U[0,1] noise to the selected entries instead of replacing them.
    #[arg(long)]
    additive: bool,
}

#[derive(Args)]
struct InstanceArgs {
    #[arg(long, default_value_t = 1000)]
    rows: usize,
    #[arg(long)]
    cols: Option<usize>,
    #[arg(long, default_value_t = 3)]
    rank: usize,
    #[arg(long, default_value_t = 0.05)]
    corruption: f64,
}

impl InstanceArgs {
    fn spec(&self, default_cols: usize, seed: u64) -> InstanceSpec {
        InstanceSpec::new(
            self.rows,
            self.cols.unwrap_or(default_cols),
            self.rank,
            self.corruption,
            seed,
        )
    }
}

#[derive(Args)]
struct InitArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Number of starting points.
    #[arg(long, default_value_t = 100)]
    inits: usize,
    /// zero, random, or perturbed
    #[arg(long, default_value = "random")]
    init: String,
    /// Noise scale for --init perturbed.
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
}

#[derive(Args)]
struct LambdaArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Comma-separated multipliers L.
    #[arg(
        long = "l-values",
        value_delimiter = ',',
        default_value = "0.25,0.5,1,2,4"
    )]
    l_values: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "pssv,nuclear", value_parser = parse_method)]
    methods: Vec<Method>,
}

#[derive(Args)]
struct TraceArgs {
    #[arg(long, default_value_t = 1000)]
    rows: usize,
    #[arg(long, default_value_t = 40)]
    cols: usize,
    #[arg(long, value_delimiter = ',', default_value = "2,3,4")]
    ranks: Vec<usize>,
    #[arg(long, default_value_t = 0.05)]
    corruption: f64,
    #[arg(long, value_delimiter = ',', default_value = "pssv,nuclear", value_parser = parse_method)]
    methods: Vec<Method>,
}

fn parse_axis(s: &str) -> Result<SweepAxis, String> {
    SweepAxis::parse(s).map_err(|e| e.to_string())
}

fn parse_method(s: &str) -> Result<Method, String> {
    Method::parse(s).map_err(|e| e.to_string())
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), String> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| format!("{}: {e}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn run(args: ExperimentArgs) -> CmdResult {
    let common = args.common;
    fs::create_dir_all(&common.out).map_err(|e| format!("{}: {e}", common.out.display()))?;
    let study = args.study;
    match common.threads {
        Some(0) => Err("--threads must be positive".into()),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| e.to_string())?
            .install(|| run_study(study, &common)),
        None => run_study(study, &common),
    }
}

fn run_study(study: Study, common: &Common) -> CmdResult {
    let out = common.out.as_path();
    let seed = common.seed;
    match study {
        Study::PhaseDiagram(grid) => {
            let spec = grid_spec(grid, common);
            let result = run_phase_diagram(&spec).map_err(|e| e.to_string())?;
            write(out, "phase_diagram.csv", &result.to_csv())?;
        }
        Study::DeficiencyMap(grid) => {
            let spec = grid_spec(grid, common);
            let result = run_rank_deficiency_map(&spec).map_err(|e| e.to_string())?;
            write(out, "deficiency_map.csv", &result.to_csv())?;
        }
        Study::ToyFig2 => {
            let toy = run_toy_fig2().map_err(|e| e.to_string())?;
            write(out, "toy_fig2.csv", &toy.to_csv())?;
            write(out, "toy_fig2_argmin.csv", &toy.argmin_csv())?;
            for a in &toy.argmins {
                println!("argmin {} {}: x = {}", a.family, a.norm, a.x);
            }
        }
        Study::InitSensitivity(init) => {
            let mode = match init.init.as_str() {
                "zero" => InitMode::Zero,
                "random" => InitMode::Random,
                "perturbed" => InitMode::Perturbed {
                    epsilon: init.epsilon,
                },
                other => {
                    return Err(format!(
                        "unknown --init `{other}` (expected zero, random or perturbed)"
                    ))
                }
            };
            let spec = init.instance.spec(50, seed);
            let result =
                run_init_sensitivity(&spec, init.inits, mode).map_err(|e| e.to_string())?;
            write(out, "init_sensitivity.csv", &result.to_csv())?;
            write(out, "init_histogram.csv", &result.histogram_csv())?;
            println!("success fraction: {}", result.success_fraction);
        }
        Study::LambdaSweep(sweep) => {
            let spec = sweep.instance.spec(40, seed);
            let trials = common.trials.unwrap_or(10);
            let result = run_lambda_sweep(&spec, &sweep.l_values, trials, &sweep.methods)
                .map_err(|e| e.to_string())?;
            write(out, "lambda_sweep.csv", &result.to_csv())?;
        }
        Study::ConvergenceTrace(trace) => {
            let spec = ConvergenceSpec {
                rows: trace.rows,
                cols: trace.cols,
                ranks: trace.ranks,
                corruption_ratio: trace.corruption,
                trials: common.trials.unwrap_or(5),
                master_seed: seed,
                methods: trace.methods,
            };
            let result = run_convergence_trace(&spec).map_err(|e| e.to_string())?;
            write(out, "convergence_trace.csv", &result.to_csv())?;
            write(out, "convergence_summary.csv", &result.summary_csv())?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn grid_spec(grid: GridArgs, common: &Common) -> PhaseDiagramSpec {
    PhaseDiagramSpec {
        axis: grid.axis,
        fixed_dim: grid.fixed_dim,
        sweep_values: grid.sweep,
        corruption_grid: grid.corruption,
        true_rank: grid.rank,
        target_rank: grid.target_rank,
        methods: grid.methods,
        trials: common.trials.unwrap_or(20),
        master_seed: common.seed,
        corruption: if grid.additive {
            Corruption::Additive
        } else {
            Corruption::Replace
        },
        ..PhaseDiagramSpec::default()
    }
}
