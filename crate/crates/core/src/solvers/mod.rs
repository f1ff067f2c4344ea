//! ADMM solvers: partial-sum robust PCA (with the nuclear-norm baseline as
//! its `N = 0` case), partial-sum matrix completion, and KKT diagnostics.

mod completion;
mod kkt;
mod rpca;

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{invalid, Result};
use crate::matcore::DenseMatrix;

pub use completion::{solve_completion, CompletionConfig, CompletionSolution};
pub use kkt::{kkt_residuals, KktResiduals};
pub use rpca::{
    solve_rpca, solve_rpca_from, solve_rpca_observed, Mu0, RpcaConfig, RpcaSolution, RpcaStart,
    RpcaState,
};

/// One outer ADMM iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    /// Relative constraint violation after the primal updates.
    pub feasibility: f64,
    /// Objective of the primal iterate, e.g. `‖A‖_{p=N} + λ‖E‖₁`.
    pub objective: f64,
    /// Augmented Lagrangian after the primal updates, at this iteration's `Z` and `μ`.
    pub lagrangian: f64,
    /// Penalty parameter used by this iteration.
    pub mu: f64,
}

/// Per-iteration history of a solve; one record per outer iteration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
}

impl IterationTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    /// CSV with header `iteration,feasibility,objective,lagrangian,mu`;
    /// iterations count from 1.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,feasibility,objective,lagrangian,mu\n");
        for (k, r) in self.records.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{:e},{:e},{:e},{:e}",
                k + 1,
                r.feasibility,
                r.objective,
                r.lagrangian,
                r.mu
            );
        }
        out
    }
}

/// Index set `Ω` of observed entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservationMask {
    observed: DMatrix<bool>,
}

impl ObservationMask {
    pub fn from_dense(observed: DMatrix<bool>) -> Result<Self> {
        if observed.nrows() == 0 || observed.ncols() == 0 {
            return invalid("mask dimensions must be positive");
        }
        Ok(Self { observed })
    }

    /// Builds a mask from `(row, col)` pairs; duplicates and out-of-range
    /// indices are rejected.
    pub fn from_indices(
        rows: usize,
        cols: usize,
        indices: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut mask = Self::from_dense(DMatrix::from_element(rows, cols, false))?;
        for (i, j) in indices {
            if i >= rows || j >= cols {
                return invalid(format!("mask index ({i}, {j}) outside {rows}x{cols}"));
            }
            if mask.observed[(i, j)] {
                return invalid(format!("duplicate mask index ({i}, {j})"));
            }
            mask.observed[(i, j)] = true;
        }
        Ok(mask)
    }

    pub fn full(rows: usize, cols: usize) -> Result<Self> {
        Self::from_dense(DMatrix::from_element(rows, cols, true))
    }

    pub fn rows(&self) -> usize {
        self.observed.nrows()
    }

    pub fn cols(&self) -> usize {
        self.observed.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.observed.shape()
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        self.observed[(row, col)]
    }

    pub fn count(&self) -> usize {
        self.observed.iter().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    /// Observed positions in row-major order.
    pub fn indices(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let (rows, cols) = self.shape();
        (0..rows)
            .flat_map(move |i| (0..cols).map(move |j| (i, j)))
            .filter(|&(i, j)| self.observed[(i, j)])
    }

    /// `P_Ω(X)`: keeps observed entries and zeroes the rest.
    pub fn project(&self, x: &DenseMatrix) -> DenseMatrix {
        assert_eq!(x.shape(), self.shape(), "mask shape mismatch");
        x.zip_map(&self.observed, |v, keep| if keep { v } else { 0.0 })
    }

    pub fn as_matrix(&self) -> &DMatrix<bool> {
        &self.observed
    }
}
