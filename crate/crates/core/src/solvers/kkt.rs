use crate::error::{invalid, Result};
use crate::matcore::{ensure_same_shape, validate, DenseMatrix};

/// Runtime optimality diagnostics for a robust PCA iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResiduals {
    /// `‖O − A − E‖_F / ‖O‖_F`: violation of the constraint `O = A + E`.
    pub feasibility: f64,
    /// Largest violation of `Z ∈ ∂‖λE‖₁`, entry by entry.
    pub e_stationarity: f64,
}

/// Measures primal feasibility and dual feasibility of `Z` with respect to
/// the `ℓ₁` term.
///
/// Where `E_ij = 0` the multiplier must lie in `[−λ, λ]`, so the violation is
/// `max(|Z_ij| − λ, 0)`; elsewhere it must equal `λ sign(E_ij)`.
pub fn kkt_residuals(
    observed: &DenseMatrix,
    low_rank: &DenseMatrix,
    sparse: &DenseMatrix,
    multiplier: &DenseMatrix,
    lambda: f64,
) -> Result<KktResiduals> {
    validate(observed)?;
    for (name, m) in [("A", low_rank), ("E", sparse), ("Z", multiplier)] {
        ensure_same_shape(name, m, observed)?;
        validate(m)?;
    }
    if !(lambda > 0.0) {
        return invalid(format!("lambda must be positive, got {lambda}"));
    }
    let scale = observed.norm();
    if scale == 0.0 {
        return invalid("observation matrix is all zeros");
    }
    let feasibility = (observed - low_rank - sparse).norm() / scale;
    let e_stationarity = sparse
        .iter()
        .zip(multiplier.iter())
        .map(|(&e, &z)| {
            if e == 0.0 {
                (z.abs() - lambda).max(0.0)
            } else {
                (z - lambda * e.signum()).abs()
            }
        })
        .fold(0.0, f64::max);
    Ok(KktResiduals {
        feasibility,
        e_stationarity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn exact_decomposition_with_bounded_multiplier() {
        let o = dmatrix![1.0, 2.0; 3.0, 4.0];
        let zero = DenseMatrix::zeros(2, 2);
        let z = dmatrix![0.1, -0.2; 0.3, -0.3];
        let r = kkt_residuals(&o, &o, &zero, &z, 0.3).unwrap();
        assert_eq!((r.feasibility, r.e_stationarity), (0.0, 0.0));
    }

    #[test]
    fn detects_violations() {
        let o = dmatrix![1.0, 2.0; 3.0, 4.0];
        let e = dmatrix![0.0, 0.5; 0.0, 0.0];
        let a = &o - &e;
        let z = dmatrix![0.5, 0.1; 0.0, 0.0];
        let r = kkt_residuals(&o, &a, &e, &z, 0.3).unwrap();
        assert_eq!(r.feasibility, 0.0);
        // entry (0,0): |0.5| - 0.3; entry (0,1): |0.1 - 0.3|
        assert!((r.e_stationarity - 0.2).abs() < 1e-15);
        let half = &a * 0.5;
        assert!(kkt_residuals(&o, &half, &e, &z, 0.3).unwrap().feasibility > 0.0);
        assert!(kkt_residuals(&o, &a, &e, &DenseMatrix::zeros(3, 2), 0.3).is_err());
    }
}
