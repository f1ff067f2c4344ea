use crate::error::{invalid, Result};
use crate::matcore::{
    ensure_same_shape, l1_norm, linf_norm, pssv_norm, psvt_with_tail, shrink, singular_values,
    validate, DenseMatrix,
};

use super::{IterationRecord, IterationTrace};

/// Initial penalty parameter.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Mu0 {
    /// `1.25 / σ₁(O)`.
    #[default]
    Auto,
    Fixed(f64),
}

/// Parameters of the inexact ALM for `min ‖A‖_{p=N} + λ‖E‖₁ s.t. O = A + E`.
#[derive(Debug, Clone, PartialEq)]
pub struct RpcaConfig {
    /// Number of leading singular values left unpenalized; `0` gives the
    /// nuclear-norm baseline.
    pub target_rank: usize,
    /// Sparsity weight; `None` means `1 / sqrt(max(m, n))`.
    pub lambda: Option<f64>,
    pub rho: f64,
    pub mu0: Mu0,
    /// Stop once `‖O − A − E‖_F / ‖O‖_F < tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// Primal sweeps per outer iteration; 1 is the inexact ALM.
    pub inner_iters: usize,
}

impl Default for RpcaConfig {
    fn default() -> Self {
        Self {
            target_rank: 0,
            lambda: None,
            rho: 1.5,
            mu0: Mu0::Auto,
            tol: 1e-7,
            max_iter: 1000,
            inner_iters: 1,
        }
    }
}

impl RpcaConfig {
    pub fn pssv(target_rank: usize) -> Self {
        Self {
            target_rank,
            ..Self::default()
        }
    }

    pub fn nuclear() -> Self {
        Self::default()
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = Some(lambda);
        self
    }

    pub fn default_lambda(rows: usize, cols: usize) -> f64 {
        1.0 / (rows.max(cols) as f64).sqrt()
    }

    fn check(&self, rows: usize, cols: usize) -> Result<()> {
        if !(self.rho > 1.0) || !self.rho.is_finite() {
            return invalid(format!("rho must exceed 1, got {}", self.rho));
        }
        if !(self.tol > 0.0) {
            return invalid(format!("tol must be positive, got {}", self.tol));
        }
        if self.max_iter == 0 || self.inner_iters == 0 {
            return invalid("max_iter and inner_iters must be positive");
        }
        if let Some(lambda) = self.lambda {
            if !(lambda > 0.0) || !lambda.is_finite() {
                return invalid(format!("lambda must be positive, got {lambda}"));
            }
        }
        if let Mu0::Fixed(mu) = self.mu0 {
            if !(mu > 0.0) || !mu.is_finite() {
                return invalid(format!("mu0 must be positive, got {mu}"));
            }
        }
        let l = rows.min(cols);
        if self.target_rank > l {
            return invalid(format!(
                "target rank {} exceeds min(m, n) = {l}",
                self.target_rank
            ));
        }
        Ok(())
    }
}

/// Starting point of the iteration.
#[derive(Debug, Clone, Default)]
pub enum RpcaStart {
    /// `A₀ = E₀ = 0` and `Z₀ = O / max(σ₁(O), ‖O‖_∞ / λ)`.
    #[default]
    Default,
    Given {
        low_rank: DenseMatrix,
        sparse: DenseMatrix,
        multiplier: DenseMatrix,
    },
}

/// Output of [`solve_rpca`].
#[derive(Debug, Clone)]
pub struct RpcaSolution {
    pub low_rank: DenseMatrix,
    pub sparse: DenseMatrix,
    /// Final Lagrange multiplier `Z`.
    pub multiplier: DenseMatrix,
    pub lambda: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: IterationTrace,
}

impl RpcaSolution {
    pub fn final_feasibility(&self) -> f64 {
        self.trace.last().map_or(f64::INFINITY, |r| r.feasibility)
    }
}

/// Iterate of the ADMM, exposed so callers can drive individual block
/// updates and inspect `(A, E, Z, μ)` between them.
#[derive(Debug, Clone)]
pub struct RpcaState<'a> {
    observed: &'a DenseMatrix,
    observed_norm: f64,
    target_rank: usize,
    lambda: f64,
    rho: f64,
    low_rank: DenseMatrix,
    sparse: DenseMatrix,
    multiplier: DenseMatrix,
    mu: f64,
    // ‖A‖_{p=N} of the current low-rank iterate
    low_rank_tail: f64,
}

impl<'a> RpcaState<'a> {
    pub fn new(observed: &'a DenseMatrix, cfg: &RpcaConfig) -> Result<Self> {
        Self::with_start(observed, cfg, RpcaStart::Default)
    }

    pub fn with_start(
        observed: &'a DenseMatrix,
        cfg: &RpcaConfig,
        start: RpcaStart,
    ) -> Result<Self> {
        validate(observed)?;
        let (rows, cols) = observed.shape();
        cfg.check(rows, cols)?;
        let observed_norm = observed.norm();
        if observed_norm == 0.0 {
            return invalid("observation matrix is all zeros");
        }
        let lambda = cfg
            .lambda
            .unwrap_or_else(|| RpcaConfig::default_lambda(rows, cols));
        let spectral = singular_values(observed)?[0];
        let mu = match cfg.mu0 {
            Mu0::Auto => 1.25 / spectral,
            Mu0::Fixed(mu) => mu,
        };
        let (low_rank, sparse, multiplier, low_rank_tail) = match start {
            RpcaStart::Default => {
                let dual_norm = spectral.max(linf_norm(observed) / lambda);
                (
                    DenseMatrix::zeros(rows, cols),
                    DenseMatrix::zeros(rows, cols),
                    observed / dual_norm,
                    0.0,
                )
            }
            RpcaStart::Given {
                low_rank,
                sparse,
                multiplier,
            } => {
                for (name, m) in [("A0", &low_rank), ("E0", &sparse), ("Z0", &multiplier)] {
                    ensure_same_shape(name, m, observed)?;
                    validate(m)?;
                }
                let tail = pssv_norm(&low_rank, cfg.target_rank)?;
                (low_rank, sparse, multiplier, tail)
            }
        };
        Ok(Self {
            observed,
            observed_norm,
            target_rank: cfg.target_rank,
            lambda,
            rho: cfg.rho,
            low_rank,
            sparse,
            multiplier,
            mu,
            low_rank_tail,
        })
    }

    pub fn low_rank(&self) -> &DenseMatrix {
        &self.low_rank
    }

    pub fn sparse(&self) -> &DenseMatrix {
        &self.sparse
    }

    pub fn multiplier(&self) -> &DenseMatrix {
        &self.multiplier
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn target_rank(&self) -> usize {
        self.target_rank
    }

    /// `A ← PSVT_{N, 1/μ}(O − E + Z/μ)`.
    pub fn update_low_rank(&mut self) -> Result<()> {
        let inv_mu = 1.0 / self.mu;
        let target = self.observed - &self.sparse + &self.multiplier * inv_mu;
        let (low_rank, tail) = psvt_with_tail(&target, self.target_rank, inv_mu)?;
        self.low_rank = low_rank;
        self.low_rank_tail = tail;
        Ok(())
    }

    /// `E ← S_{λ/μ}(O − A + Z/μ)`.
    pub fn update_sparse(&mut self) {
        let inv_mu = 1.0 / self.mu;
        let tau = self.lambda * inv_mu;
        let mut sparse = self.observed - &self.low_rank;
        sparse.zip_apply(&self.multiplier, |s, z| *s = shrink(*s + z * inv_mu, tau));
        self.sparse = sparse;
    }

    /// `Z ← Z + μ(O − A − E)` followed by `μ ← ρμ`.
    pub fn update_multiplier(&mut self) {
        let residual = self.residual();
        self.multiplier += residual * self.mu;
        self.mu *= self.rho;
    }

    fn residual(&self) -> DenseMatrix {
        self.observed - &self.low_rank - &self.sparse
    }

    /// `‖O − A − E‖_F / ‖O‖_F`.
    pub fn feasibility(&self) -> f64 {
        self.residual().norm() / self.observed_norm
    }

    /// `‖A‖_{p=N} + λ‖E‖₁`.
    pub fn objective(&self) -> f64 {
        self.low_rank_tail + self.lambda * l1_norm(&self.sparse)
    }

    /// Augmented Lagrangian at the current `(A, E, Z, μ)`.
    pub fn lagrangian(&self) -> f64 {
        let residual = self.residual();
        self.objective() + self.multiplier.dot(&residual) + 0.5 * self.mu * residual.norm_squared()
    }

    fn into_solution(
        self,
        iterations: usize,
        converged: bool,
        trace: IterationTrace,
    ) -> RpcaSolution {
        RpcaSolution {
            low_rank: self.low_rank,
            sparse: self.sparse,
            multiplier: self.multiplier,
            lambda: self.lambda,
            iterations,
            converged,
            trace,
        }
    }
}

/// Decomposes `O` into low-rank `A` plus sparse `E` by minimizing
/// `‖A‖_{p=N} + λ‖E‖₁` subject to `O = A + E`.
///
/// Each outer iteration performs `inner_iters` sweeps of the closed-form
/// `A` (partial singular value thresholding) and `E` (soft-thresholding)
/// updates, then the dual ascent step on `Z` and the geometric increase of
/// `μ`. Hitting `max_iter` is reported through `converged = false`.
pub fn solve_rpca(observed: &DenseMatrix, cfg: &RpcaConfig) -> Result<RpcaSolution> {
    solve_rpca_from(observed, cfg, RpcaStart::Default)
}

/// [`solve_rpca`] from an explicit starting point.
pub fn solve_rpca_from(
    observed: &DenseMatrix,
    cfg: &RpcaConfig,
    start: RpcaStart,
) -> Result<RpcaSolution> {
    solve_rpca_observed(observed, cfg, start, |_| {})
}

/// [`solve_rpca_from`] that hands the iterate to `observer` after the primal
/// updates of every outer iteration, before the multiplier step.
pub fn solve_rpca_observed(
    observed: &DenseMatrix,
    cfg: &RpcaConfig,
    start: RpcaStart,
    mut observer: impl FnMut(&RpcaState<'_>),
) -> Result<RpcaSolution> {
    let mut state = RpcaState::with_start(observed, cfg, start)?;
    let mut trace = IterationTrace::default();
    for k in 0..cfg.max_iter {
        let mu = state.mu();
        for _ in 0..cfg.inner_iters {
            state.update_low_rank()?;
            state.update_sparse();
        }
        observer(&state);
        let feasibility = state.feasibility();
        trace.records.push(IterationRecord {
            feasibility,
            objective: state.objective(),
            lagrangian: state.lagrangian(),
            mu,
        });
        state.update_multiplier();
        if feasibility < cfg.tol {
            return Ok(state.into_solution(k + 1, true, trace));
        }
    }
    let iterations = cfg.max_iter;
    Ok(state.into_solution(iterations, false, trace))
}
