//! `pssv`: robust PCA, matrix completion and the synthetic studies from the
//! command line.
//!
//! Exit status: 0 on success or convergence, 2 when a solver stops at its
//! iteration limit, 1 on usage or I/O errors.

mod experiment;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pssv::io::{read_mask_csv, read_matrix, write_matrix, MatrixFormat};
use pssv::matcore::pssv_norm;
use pssv::metrics::{nrmse, psnr};
use pssv::solvers::{solve_completion, solve_rpca, CompletionConfig, Mu0, RpcaConfig};
use pssv::synth::{gen_mask, PrngStream};

#[derive(Parser)]
#[command(
    name = "pssv",
    version,
    about = "Partial-sum-of-singular-values robust PCA and matrix completion"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split a matrix into low-rank and sparse parts.
    Solve(SolveArgs),
    /// Fill in the unobserved entries of a low-rank matrix or image.
    Complete(CompleteArgs),
    /// Run one of the synthetic studies and write CSV results.
    Experiment(experiment::ExperimentArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Pssv,
    Nuclear,
}

#[derive(Args)]
struct SolveArgs {
    /// Input matrix (.csv, or .pgm for a grayscale image).
    input: PathBuf,
    #[arg(long, value_enum, default_value = "pssv")]
    method: MethodArg,
    /// Target rank N; required for `--method pssv`.
    #[arg(long)]
    rank: Option<usize>,
    /// Sparsity weight; defaults to 1/sqrt(max(m, n)).
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, default_value_t = 1.5)]
    rho: f64,
    /// Initial penalty; defaults to 1.25 / sigma_1(O).
    #[arg(long)]
    mu0: Option<f64>,
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    /// Accepted for uniformity; the solver is deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "out-A", visible_alias = "out-a")]
    out_a: Option<PathBuf>,
    #[arg(long = "out-E", visible_alias = "out-e")]
    out_e: Option<PathBuf>,
    /// Per-iteration CSV: iteration,feasibility,objective,lagrangian,mu
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("observed").required(true).args(["mask", "observe_fraction"]))]
struct CompleteArgs {
    /// Input matrix (.csv or .pgm); unobserved entries are ignored.
    input: PathBuf,
    /// CSV of 0/1 entries, 1 = observed.
    #[arg(long)]
    mask: Option<PathBuf>,
    /// Observe a uniformly random fraction of the entries instead.
    #[arg(long)]
    observe_fraction: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Target rank p.
    #[arg(long)]
    rank: usize,
    #[arg(long)]
    out: PathBuf,
    /// Ground truth to score against; prints PSNR and NRMSE.
    #[arg(long = "ref")]
    reference: Option<PathBuf>,
    /// Peak value for PSNR; defaults to 255 for images and max|ref| otherwise.
    #[arg(long)]
    peak: Option<f64>,
    #[arg(long, default_value_t = 1.05)]
    rho: f64,
    #[arg(long, default_value_t = 1e-3)]
    mu0: f64,
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    #[arg(long, default_value_t = 2000)]
    max_iter: usize,
}

type CmdResult = Result<ExitCode, String>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Complete(args) => cmd_complete(args),
        Command::Experiment(args) => experiment::run(args),
    };
    match result {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

fn converged_code(converged: bool) -> ExitCode {
    if converged {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn write_out(path: &Path, m: &pssv::DenseMatrix) -> Result<(), String> {
    write_matrix(path, m).map_err(|e| format!("{}: {e}", path.display()))
}

fn cmd_solve(args: SolveArgs) -> CmdResult {
    let target_rank = match (args.method, args.rank) {
        (MethodArg::Pssv, Some(n)) => n,
        (MethodArg::Pssv, None) => return Err("--method pssv requires --rank N".into()),
        (MethodArg::Nuclear, None | Some(0)) => 0,
        (MethodArg::Nuclear, Some(_)) => {
            return Err("--method nuclear does not take a nonzero --rank".into())
        }
    };
    let observed = read_matrix(&args.input).map_err(|e| e.to_string())?;
    let cfg = RpcaConfig {
        target_rank,
        lambda: args.lambda,
        rho: args.rho,
        mu0: args.mu0.map_or(Mu0::Auto, Mu0::Fixed),
        tol: args.tol,
        max_iter: args.max_iter,
        ..RpcaConfig::default()
    };
    let sol = solve_rpca(&observed, &cfg).map_err(|e| e.to_string())?;
    let objective = pssv_norm(&sol.low_rank, target_rank).map_err(|e| e.to_string())?
        + sol.lambda * sol.sparse.iter().map(|v| v.abs()).sum::<f64>();

    println!("rows: {}", observed.nrows());
    println!("cols: {}", observed.ncols());
    println!("target_rank: {target_rank}");
    println!("lambda: {:e}", sol.lambda);
    println!("iterations: {}", sol.iterations);
    println!("converged: {}", sol.converged);
    println!("residual: {:e}", sol.final_feasibility());
    println!("objective: {objective:e}");

    if let Some(path) = &args.out_a {
        write_out(path, &sol.low_rank)?;
    }
    if let Some(path) = &args.out_e {
        write_out(path, &sol.sparse)?;
    }
    if let Some(path) = &args.trace {
        std::fs::write(path, sol.trace.to_csv()).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    if !sol.converged {
        eprintln!(
            "warning: stopped at --max-iter {} before reaching --tol",
            args.max_iter
        );
    }
    Ok(converged_code(sol.converged))
}

fn cmd_complete(args: CompleteArgs) -> CmdResult {
    let observed = read_matrix(&args.input).map_err(|e| e.to_string())?;
    let (rows, cols) = observed.shape();
    let mask = match (&args.mask, args.observe_fraction) {
        (Some(path), _) => read_mask_csv(path).map_err(|e| e.to_string())?,
        (None, Some(fraction)) => {
            gen_mask(rows, cols, fraction, &mut PrngStream::new(args.seed, 0))
                .map_err(|e| e.to_string())?
        }
        (None, None) => unreachable!("clap enforces the argument group"),
    };
    if mask.shape() != (rows, cols) {
        return Err(format!(
            "mask is {}x{} but the input is {rows}x{cols}",
            mask.rows(),
            mask.cols()
        ));
    }
    let cfg = CompletionConfig {
        target_rank: args.rank,
        rho: args.rho,
        mu0: args.mu0,
        tol: args.tol,
        max_iter: args.max_iter,
    };
    let sol = solve_completion(&observed, &mask, &cfg).map_err(|e| e.to_string())?;

    println!("rows: {rows}");
    println!("cols: {cols}");
    println!("observed: {}", mask.count());
    println!("target_rank: {}", args.rank);
    println!("iterations: {}", sol.iterations);
    println!("converged: {}", sol.converged);
    write_out(&args.out, &sol.low_rank)?;

    if let Some(path) = &args.reference {
        let reference = read_matrix(path).map_err(|e| e.to_string())?;
        let image = MatrixFormat::from_path(&args.out) == MatrixFormat::Pgm;
        // score what was written: images are rounded to gray levels
        let written = if image {
            sol.low_rank.map(|v| pssv::io::to_gray(v) as f64)
        } else {
            sol.low_rank.clone()
        };
        let peak = args.peak.unwrap_or_else(|| {
            if image {
                255.0
            } else {
                reference.iter().fold(0.0f64, |m, v| m.max(v.abs()))
            }
        });
        let score = psnr(&reference, &written, peak).map_err(|e| e.to_string())?;
        let err = nrmse(&reference, &written).map_err(|e| e.to_string())?;
        println!("psnr: {score:.4}");
        println!("nrmse: {err:e}");
    }
    if !sol.converged {
        eprintln!(
            "warning: stopped at --max-iter {} before reaching --tol",
            args.max_iter
        );
    }
    Ok(converged_code(sol.converged))
}
