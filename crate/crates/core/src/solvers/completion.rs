use crate::error::{invalid, Result};
use crate::matcore::{ensure_same_shape, psvt_with_tail, validate, DenseMatrix};

use super::{IterationRecord, IterationTrace, ObservationMask};

/// Parameters of partial-sum matrix completion.
#[derive(Debug, Clone, PartialEq)]
pub struct CompletionConfig {
    pub target_rank: usize,
    pub rho: f64,
    pub mu0: f64,
    /// Stop once `‖A − B‖_F / ‖P_Ω(O)‖_F < tol`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for CompletionConfig {
    fn default() -> Self {
        Self {
            target_rank: 0,
            rho: 1.05,
            mu0: 1e-3,
            tol: 1e-7,
            max_iter: 2000,
        }
    }
}

impl CompletionConfig {
    pub fn with_rank(target_rank: usize) -> Self {
        Self {
            target_rank,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct CompletionSolution {
    /// Recovered low-rank matrix.
    pub low_rank: DenseMatrix,
    /// Auxiliary copy that agrees with the observations on `Ω`.
    pub auxiliary: DenseMatrix,
    pub iterations: usize,
    pub converged: bool,
    pub trace: IterationTrace,
}

/// Fills in the unobserved entries of `O` by minimizing `‖A‖_{p=N}` subject
/// to `A = B` and `P_Ω(B) = P_Ω(O)`.
///
/// Starts from `A₀ = 0`, `B₀ = P_Ω(O)`, `Z₀ = 0`. Each iteration applies
/// `A ← PSVT_{N, 1/μ}(B − Z/μ)`, sets `B ← A + Z/μ` and then pins `B` to the
/// observations on `Ω` (the exact minimizer of the constrained `B` step),
/// ascends `Z ← Z + μ(A − B)` and grows `μ ← ρμ`. Values of `O` off `Ω` are
/// never read.
pub fn solve_completion(
    observed: &DenseMatrix,
    mask: &ObservationMask,
    cfg: &CompletionConfig,
) -> Result<CompletionSolution> {
    let (rows, cols) = mask.shape();
    if observed.shape() != (rows, cols) {
        return invalid(format!(
            "mask is {rows}x{cols} but the matrix is {}x{}",
            observed.nrows(),
            observed.ncols()
        ));
    }
    if mask.is_empty() {
        return invalid("observation mask is empty");
    }
    if !(cfg.rho > 1.0) || !(cfg.mu0 > 0.0) || !(cfg.tol > 0.0) || cfg.max_iter == 0 {
        return invalid("completion requires rho > 1, mu0 > 0, tol > 0 and max_iter > 0");
    }
    if cfg.target_rank > rows.min(cols) {
        return invalid(format!(
            "target rank {} exceeds min(m, n) = {}",
            cfg.target_rank,
            rows.min(cols)
        ));
    }
    let pinned = mask.project(observed);
    validate(&pinned)?;
    ensure_same_shape("observations", &pinned, observed)?;
    let scale = pinned.norm();
    if scale == 0.0 {
        return invalid("observed entries are all zero");
    }

    let mut auxiliary = pinned.clone();
    let mut multiplier = DenseMatrix::zeros(rows, cols);
    let mut low_rank = DenseMatrix::zeros(rows, cols);
    let mut mu = cfg.mu0;
    let mut trace = IterationTrace::default();

    for k in 0..cfg.max_iter {
        let inv_mu = 1.0 / mu;
        let (next, tail) = psvt_with_tail(
            &(&auxiliary - &multiplier * inv_mu),
            cfg.target_rank,
            inv_mu,
        )?;
        low_rank = next;

        auxiliary = &low_rank + &multiplier * inv_mu;
        for (i, j) in mask.indices() {
            auxiliary[(i, j)] = pinned[(i, j)];
        }

        let gap = &low_rank - &auxiliary;
        let feasibility = gap.norm() / scale;
        trace.records.push(IterationRecord {
            feasibility,
            objective: tail,
            lagrangian: tail + multiplier.dot(&gap) + 0.5 * mu * gap.norm_squared(),
            mu,
        });
        multiplier += &gap * mu;
        mu *= cfg.rho;

        if feasibility < cfg.tol {
            return Ok(CompletionSolution {
                low_rank,
                auxiliary,
                iterations: k + 1,
                converged: true,
                trace,
            });
        }
    }
    Ok(CompletionSolution {
        low_rank,
        auxiliary,
        iterations: cfg.max_iter,
        converged: false,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{gen_low_rank, PrngStream};

    #[test]
    fn full_mask_returns_input() {
        let o = gen_low_rank(40, 30, 3, &mut PrngStream::new(1, 0)).unwrap();
        let mask = ObservationMask::full(40, 30).unwrap();
        let sol = solve_completion(&o, &mask, &CompletionConfig::with_rank(3)).unwrap();
        assert!(sol.converged);
        assert!((&sol.low_rank - &o).norm() / o.norm() < 1e-6);
    }

    #[test]
    fn ignores_unobserved_values() {
        let o = gen_low_rank(30, 20, 2, &mut PrngStream::new(2, 0)).unwrap();
        let mask = crate::synth::gen_mask(30, 20, 0.6, &mut PrngStream::new(2, 1)).unwrap();
        let mut scrambled = o.clone();
        for i in 0..30 {
            for j in 0..20 {
                if !mask.contains(i, j) {
                    scrambled[(i, j)] = 1e6;
                }
            }
        }
        let cfg = CompletionConfig::with_rank(2);
        let a = solve_completion(&o, &mask, &cfg).unwrap();
        let b = solve_completion(&scrambled, &mask, &cfg).unwrap();
        assert_eq!(a.low_rank, b.low_rank);
    }

    #[test]
    fn rejects_empty_or_mismatched_mask() {
        let o = DenseMatrix::from_element(3, 3, 1.0);
        let empty = ObservationMask::from_indices(3, 3, []).unwrap();
        assert!(solve_completion(&o, &empty, &CompletionConfig::with_rank(1)).is_err());
        let wrong = ObservationMask::full(3, 4).unwrap();
        assert!(solve_completion(&o, &wrong, &CompletionConfig::with_rank(1)).is_err());
    }
}
