//! Evaluation measures shared by the experiments.

use crate::error::{invalid, Result};
use crate::matcore::{ensure_same_shape, singular_values, validate, DenseMatrix};

/// NRMSE below this value counts as a successful recovery.
pub const SUCCESS_THRESHOLD: f64 = 0.01;

/// `σ_N / σ_1` below this value marks a recovered matrix as rank deficient.
pub const DEFICIENCY_THRESHOLD: f64 = 0.01;

/// `‖A_GT − Â‖_F / ‖A_GT‖_F`.
pub fn nrmse(truth: &DenseMatrix, estimate: &DenseMatrix) -> Result<f64> {
    validate(truth)?;
    validate(estimate)?;
    ensure_same_shape("estimate", estimate, truth)?;
    let scale = truth.norm();
    if scale == 0.0 {
        return invalid("NRMSE is undefined for an all-zero reference");
    }
    Ok((truth - estimate).norm() / scale)
}

/// `σ_N(A) / σ_1(A)`; compare against [`DEFICIENCY_THRESHOLD`].
pub fn rank_deficiency_ratio(a: &DenseMatrix, rank: usize) -> Result<f64> {
    validate(a)?;
    let l = a.nrows().min(a.ncols());
    if rank == 0 || rank > l {
        return invalid(format!("rank must lie in 1..={l}, got {rank}"));
    }
    let sigma = singular_values(a)?;
    if sigma[0] == 0.0 {
        return invalid("rank deficiency ratio is undefined for the zero matrix");
    }
    Ok(sigma[rank - 1] / sigma[0])
}

/// Peak signal-to-noise ratio in dB, `10 log₁₀(peak² / MSE)`.
///
/// Identical inputs give `f64::INFINITY`.
pub fn psnr(reference: &DenseMatrix, recovered: &DenseMatrix, peak: f64) -> Result<f64> {
    validate(reference)?;
    validate(recovered)?;
    ensure_same_shape("recovered", recovered, reference)?;
    if !(peak > 0.0) || !peak.is_finite() {
        return invalid(format!("peak must be positive, got {peak}"));
    }
    let mse = (reference - recovered).norm_squared() / reference.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

/// Result of one solve against a planted ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub nrmse: f64,
    pub success: bool,
    pub deficiency_ratio: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Seconds; informational only.
    pub wall_time: f64,
}

impl TrialOutcome {
    pub fn new(
        nrmse: f64,
        deficiency_ratio: f64,
        iterations: usize,
        converged: bool,
        wall_time: f64,
    ) -> Self {
        Self::with_threshold(
            nrmse,
            deficiency_ratio,
            iterations,
            converged,
            wall_time,
            SUCCESS_THRESHOLD,
        )
    }

    pub fn with_threshold(
        nrmse: f64,
        deficiency_ratio: f64,
        iterations: usize,
        converged: bool,
        wall_time: f64,
        threshold: f64,
    ) -> Self {
        Self {
            nrmse,
            success: nrmse < threshold,
            deficiency_ratio,
            iterations,
            converged,
            wall_time,
        }
    }

    /// Outcome recorded when a solve errors out: counts as a failure.
    pub fn failed() -> Self {
        Self {
            nrmse: f64::INFINITY,
            success: false,
            deficiency_ratio: 0.0,
            iterations: 0,
            converged: false,
            wall_time: 0.0,
        }
    }

    pub fn is_deficient(&self) -> bool {
        self.deficiency_ratio < DEFICIENCY_THRESHOLD
    }
}
