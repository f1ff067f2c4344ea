//! Dense-matrix primitives: the SVD contract, matrix norms, and the
//! proximal operators every solver is built from.
//!
//! Matrices are plain [`nalgebra::DMatrix<f64>`] values. Every public
//! operation rejects empty or non-finite input before doing any work.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};

/// Real `m × n` matrix used for observations, components and multipliers alike.
pub type DenseMatrix = DMatrix<f64>;

/// Checks the carrier invariants: at least one row and column, all entries finite.
pub fn validate(x: &DenseMatrix) -> Result<()> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return invalid(format!(
            "matrix must be non-empty, got {}x{}",
            x.nrows(),
            x.ncols()
        ));
    }
    // column-major storage: linear index k maps to (k % rows, k / rows)
    if let Some(k) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            row: k % x.nrows(),
            col: k / x.nrows(),
        });
    }
    Ok(())
}

pub(crate) fn ensure_same_shape(
    name: &str,
    x: &DenseMatrix,
    reference: &DenseMatrix,
) -> Result<()> {
    if x.shape() != reference.shape() {
        return invalid(format!(
            "{name} is {}x{} but {}x{} was expected",
            x.nrows(),
            x.ncols(),
            reference.nrows(),
            reference.ncols()
        ));
    }
    Ok(())
}

/// Thin singular value decomposition `X = U diag(sigma) Vᵀ`.
///
/// `sigma` has `l = min(m, n)` entries sorted non-increasingly; `u` is `m × l`
/// and `v` is `n × l`, both with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactors {
    pub u: DMatrix<f64>,
    pub sigma: DVector<f64>,
    pub v: DMatrix<f64>,
}

impl SvdFactors {
    /// Number of singular triplets, `min(m, n)`.
    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        self.reconstruct_with(&self.sigma)
    }

    /// Rebuilds `U diag(values) Vᵀ` with the stored singular vectors.
    ///
    /// Trailing zeros in `values` are skipped, so rank-deficient spectra cost
    /// proportionally less.
    pub fn reconstruct_with(&self, values: &DVector<f64>) -> DenseMatrix {
        assert_eq!(values.len(), self.len(), "spectrum length mismatch");
        let k = values
            .iter()
            .rposition(|&s| s != 0.0)
            .map_or(0, |last| last + 1);
        let mut scaled = self.u.columns(0, k).into_owned();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= values[j];
        }
        scaled * self.v.columns(0, k).transpose()
    }

    /// Negates the `i`-th left and right singular vectors together, producing
    /// another valid decomposition of the same matrix.
    pub fn flip_pair(&mut self, i: usize) {
        self.u.column_mut(i).neg_mut();
        self.v.column_mut(i).neg_mut();
    }

    /// Partial singular value thresholding using these factors.
    pub fn psvt(&self, target_rank: usize, tau: f64) -> Result<DenseMatrix> {
        check_rank_index("target rank", target_rank, self.len())?;
        check_threshold(tau)?;
        Ok(self.reconstruct_with(&psvt_spectrum(&self.sigma, target_rank, tau)))
    }

    /// Best rank-`r` approximation from the leading `r` triplets.
    pub fn truncate(&self, r: usize) -> DenseMatrix {
        let r = r.min(self.len());
        let mut values = self.sigma.clone();
        values.rows_mut(r, self.len() - r).fill(0.0);
        self.reconstruct_with(&values)
    }
}

fn svd_iteration_budget(l: usize) -> usize {
    1000 * l.max(1)
}

/// Thin SVD with singular values sorted non-increasingly.
pub fn svd(x: &DenseMatrix) -> Result<SvdFactors> {
    validate(x)?;
    let l = x.nrows().min(x.ncols());
    let decomposition =
        nalgebra::SVD::try_new(x.clone(), true, true, f64::EPSILON, svd_iteration_budget(l))
            .ok_or_else(|| {
                Error::Numerical(format!(
                    "SVD of a {}x{} matrix did not converge",
                    x.nrows(),
                    x.ncols()
                ))
            })?;
    let u = decomposition.u.expect("left singular vectors requested");
    let v_t = decomposition.v_t.expect("right singular vectors requested");
    Ok(SvdFactors {
        u,
        sigma: decomposition.singular_values,
        v: v_t.transpose(),
    })
}

/// Singular values only, sorted non-increasingly.
pub fn singular_values(x: &DenseMatrix) -> Result<DVector<f64>> {
    validate(x)?;
    let l = x.nrows().min(x.ncols());
    nalgebra::SVD::try_new(
        x.clone(),
        false,
        false,
        f64::EPSILON,
        svd_iteration_budget(l),
    )
    .map(|d| d.singular_values)
    .ok_or_else(|| {
        Error::Numerical(format!(
            "SVD of a {}x{} matrix did not converge",
            x.nrows(),
            x.ncols()
        ))
    })
}

fn check_rank_index(what: &str, index: usize, limit: usize) -> Result<()> {
    if index > limit {
        return invalid(format!("{what} {index} exceeds min(m, n) = {limit}"));
    }
    Ok(())
}

fn check_threshold(tau: f64) -> Result<()> {
    if !(tau >= 0.0) || tau.is_infinite() {
        return invalid(format!(
            "threshold must be finite and non-negative, got {tau}"
        ));
    }
    Ok(())
}

/// Partial sum of singular values `Σ_{i>p} σ_i(X)`.
///
/// `p = 0` gives the nuclear norm and `p = min(m, n)` gives zero.
pub fn pssv_norm(x: &DenseMatrix, p: usize) -> Result<f64> {
    validate(x)?;
    check_rank_index("rank index", p, x.nrows().min(x.ncols()))?;
    let sigma = singular_values(x)?;
    Ok(tail_sum(&sigma, p))
}

pub(crate) fn tail_sum(sigma: &DVector<f64>, p: usize) -> f64 {
    sigma.iter().skip(p).sum()
}

/// Matrix norms used by the objective and the convergence tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub nuclear: f64,
    pub l1: f64,
    pub fro: f64,
    pub linf: f64,
}

pub fn norms(x: &DenseMatrix) -> Result<Norms> {
    validate(x)?;
    let sigma = singular_values(x)?;
    Ok(Norms {
        nuclear: sigma.sum(),
        l1: l1_norm(x),
        fro: x.norm(),
        linf: linf_norm(x),
    })
}

pub(crate) fn l1_norm(x: &DenseMatrix) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

pub(crate) fn linf_norm(x: &DenseMatrix) -> f64 {
    x.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Scalar shrinkage `sign(x) max(|x| - tau, 0)`.
#[inline]
pub fn shrink(x: f64, tau: f64) -> f64 {
    if x > tau {
        x - tau
    } else if x < -tau {
        x + tau
    } else {
        0.0
    }
}

/// Element-wise soft-thresholding, the proximal map of `tau ‖·‖₁`.
pub fn soft_threshold(x: &DenseMatrix, tau: f64) -> Result<DenseMatrix> {
    validate(x)?;
    check_threshold(tau)?;
    Ok(x.map(|v| shrink(v, tau)))
}

/// Thresholded spectrum: the leading `target_rank` values are kept, the rest
/// are shrunk by `tau` and clamped at zero.
pub fn psvt_spectrum(sigma: &DVector<f64>, target_rank: usize, tau: f64) -> DVector<f64> {
    DVector::from_iterator(
        sigma.len(),
        sigma.iter().enumerate().map(|(i, &s)| {
            if i < target_rank {
                s
            } else {
                (s - tau).max(0.0)
            }
        }),
    )
}

/// Partial singular value thresholding.
///
/// Returns the global minimizer of `½‖X − Y‖_F² + tau ‖X‖_{p=N}`: the singular
/// vectors of `Y` are reused, its top `target_rank` singular values are kept
/// and the remaining ones are soft-thresholded. `target_rank = 0` is ordinary
/// singular value thresholding; a very large `tau` projects onto rank `N`.
pub fn psvt(y: &DenseMatrix, target_rank: usize, tau: f64) -> Result<DenseMatrix> {
    psvt_with_tail(y, target_rank, tau).map(|(x, _)| x)
}

/// [`psvt`] that also reports `‖X‖_{p=N}` of the result, which falls out of
/// the thresholded spectrum without another decomposition.
pub(crate) fn psvt_with_tail(
    y: &DenseMatrix,
    target_rank: usize,
    tau: f64,
) -> Result<(DenseMatrix, f64)> {
    validate(y)?;
    check_rank_index("target rank", target_rank, y.nrows().min(y.ncols()))?;
    check_threshold(tau)?;
    let factors = svd(y)?;
    let values = psvt_spectrum(&factors.sigma, target_rank, tau);
    let tail = tail_sum(&values, target_rank);
    Ok((factors.reconstruct_with(&values), tail))
}

/// Best rank-`r` approximation `U_{1:r} diag(σ_{1:r}) V_{1:r}ᵀ`, an `m × n` matrix.
pub fn project_rank(x: &DenseMatrix, r: usize) -> Result<DenseMatrix> {
    validate(x)?;
    let l = x.nrows().min(x.ncols());
    if r == 0 || r > l {
        return invalid(format!("projection rank must lie in 1..={l}, got {r}"));
    }
    Ok(svd(x)?.truncate(r))
}

/// Frobenius inner product `⟨X, Y⟩ = tr(XᵀY)`.
pub fn inner(x: &DenseMatrix, y: &DenseMatrix) -> f64 {
    x.dot(y)
}

/// Augmented Lagrangian of the partial-sum robust PCA problem,
/// `‖A‖_{p=N} + λ‖E‖₁ + ⟨Z, O − A − E⟩ + (μ/2)‖O − A − E‖_F²`.
pub fn lagrangian_value(
    a: &DenseMatrix,
    e: &DenseMatrix,
    z: &DenseMatrix,
    o: &DenseMatrix,
    target_rank: usize,
    lambda: f64,
    mu: f64,
) -> Result<f64> {
    validate(o)?;
    for (name, m) in [("A", a), ("E", e), ("Z", z)] {
        ensure_same_shape(name, m, o)?;
        validate(m)?;
    }
    if !(mu > 0.0) {
        return invalid(format!("mu must be positive, got {mu}"));
    }
    let residual = o - a - e;
    Ok(pssv_norm(a, target_rank)?
        + lambda * l1_norm(e)
        + inner(z, &residual)
        + 0.5 * mu * residual.norm_squared())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::dmatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize) -> DenseMatrix {
        DenseMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0))
    }

    fn diag(values: &[f64]) -> DenseMatrix {
        DenseMatrix::from_diagonal(&DVector::from_column_slice(values))
    }

    /// Objective minimized by PSVT: ½‖X − Y‖² + τ‖X‖_{p=N}.
    fn psvt_objective(x: &DenseMatrix, y: &DenseMatrix, n: usize, tau: f64) -> f64 {
        0.5 * (x - y).norm_squared() + tau * pssv_norm(x, n).unwrap()
    }

    #[test]
    fn svd_of_diagonal() {
        let f = svd(&diag(&[3.0, 1.0])).unwrap();
        assert_abs_diff_eq!(f.sigma[0], 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(f.sigma[1], 1.0, epsilon = 1e-14);
        for i in 0..2 {
            assert_abs_diff_eq!(f.u[(i, i)].abs(), 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(f.v[(i, i)].abs(), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn svd_of_toy_matrix() {
        let f = svd(&dmatrix![1.0, 1.0; 3.0, 1.0]).unwrap();
        assert_abs_diff_eq!(f.sigma[0], 3.4142, epsilon = 1e-4);
        assert_abs_diff_eq!(f.sigma[1], 0.5858, epsilon = 1e-4);
    }

    #[test]
    fn svd_reconstructs_and_is_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (m, n) in [(7, 4), (4, 7), (5, 5), (1, 3)] {
            let x = random_matrix(&mut rng, m, n);
            let f = svd(&x).unwrap();
            assert_eq!((f.u.shape(), f.v.shape()), ((m, m.min(n)), (n, m.min(n))));
            assert!((f.reconstruct() - &x).norm() <= 1e-10 * x.norm().max(1.0));
            let l = m.min(n);
            assert!((f.u.transpose() * &f.u - DenseMatrix::identity(l, l)).amax() <= 1e-10);
            assert!((f.v.transpose() * &f.v - DenseMatrix::identity(l, l)).amax() <= 1e-10);
            assert!(f
                .sigma
                .iter()
                .zip(f.sigma.iter().skip(1))
                .all(|(a, b)| a >= b));
            assert!(f.sigma.iter().all(|&s| s >= 0.0));
        }
    }

    #[test]
    fn rejects_non_finite_and_empty() {
        let mut x = DenseMatrix::zeros(2, 3);
        x[(1, 2)] = f64::NAN;
        assert!(matches!(svd(&x), Err(Error::NonFinite { row: 1, col: 2 })));
        assert!(matches!(
            norms(&DenseMatrix::zeros(0, 3)),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn pssv_norm_examples() {
        assert_abs_diff_eq!(
            pssv_norm(&dmatrix![1.0, 1.0; 3.0, 3.0], 1).unwrap(),
            0.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            pssv_norm(&dmatrix![1.0, 1.0; 3.0, 1.0], 1).unwrap(),
            0.5858,
            epsilon = 1e-4
        );
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = random_matrix(&mut rng, 6, 4);
        assert_eq!(pssv_norm(&x, 4).unwrap(), 0.0);
        assert_abs_diff_eq!(
            pssv_norm(&x, 0).unwrap(),
            norms(&x).unwrap().nuclear,
            epsilon = 1e-12
        );
        assert!(pssv_norm(&x, 5).is_err());
    }

    #[test]
    fn norms_examples() {
        assert_abs_diff_eq!(
            norms(&dmatrix![1.0, 1.0; 3.0, 1.0]).unwrap().nuclear,
            4.0,
            epsilon = 1e-12
        );
        let zero = norms(&DenseMatrix::zeros(3, 2)).unwrap();
        assert_eq!(
            (zero.nuclear, zero.l1, zero.fro, zero.linf),
            (0.0, 0.0, 0.0, 0.0)
        );
        let id = norms(&DenseMatrix::identity(2, 2)).unwrap();
        assert_abs_diff_eq!(id.nuclear, 2.0, epsilon = 1e-14);
        assert_eq!(id.l1, 2.0);
        assert_abs_diff_eq!(id.fro, 2f64.sqrt(), epsilon = 1e-15);
        assert_eq!(id.linf, 1.0);
    }

    #[test]
    fn soft_threshold_examples() {
        let x = dmatrix![5.0, -1.0];
        assert_eq!(soft_threshold(&x, 2.0).unwrap(), dmatrix![3.0, 0.0]);
        assert_eq!(soft_threshold(&x, 0.0).unwrap(), x);
        assert!(soft_threshold(&x, -0.1).is_err());
    }

    #[test]
    fn soft_threshold_matches_scalar_grid_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_matrix(&mut rng, 5, 4) * 2.0;
        let tau = 0.3;
        let out = soft_threshold(&x, tau).unwrap();
        for (xi, oi) in x.iter().zip(out.iter()) {
            // brute-force 1-D minimization of ½(t - x)² + τ|t| on a 1e-5 grid
            let best = (-300_000..=300_000)
                .map(|k| k as f64 * 1e-5)
                .min_by(|a, b| {
                    let fa = 0.5 * (a - xi).powi(2) + tau * a.abs();
                    let fb = 0.5 * (b - xi).powi(2) + tau * b.abs();
                    fa.partial_cmp(&fb).unwrap()
                })
                .unwrap();
            assert_abs_diff_eq!(*oi, best, epsilon = 1e-5);
        }
    }

    #[test]
    fn psvt_on_diagonal() {
        let y = diag(&[5.0, 3.0, 1.0]);
        assert!((psvt(&y, 1, 2.0).unwrap() - diag(&[5.0, 1.0, 0.0])).amax() < 1e-12);
        assert!((psvt(&y, 0, 2.0).unwrap() - diag(&[3.0, 1.0, 0.0])).amax() < 1e-12);
        assert!((psvt(&y, 2, 10.0).unwrap() - diag(&[5.0, 3.0, 0.0])).amax() < 1e-12);
        assert!(psvt(&y, 4, 1.0).is_err());
        assert!(psvt(&y, 1, -1.0).is_err());
    }

    #[test]
    fn psvt_is_locally_optimal_under_perturbation() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let y = random_matrix(&mut rng, 6, 5);
        let (n, tau) = (2, 0.7);
        let x = psvt(&y, n, tau).unwrap();
        let best = psvt_objective(&x, &y, n, tau);
        for _ in 0..1000 {
            let mut delta = random_matrix(&mut rng, 6, 5);
            let radius = rng.random_range(0.0..1.0);
            delta *= radius / delta.norm();
            assert!(best <= psvt_objective(&(&x + delta), &y, n, tau) + 1e-12);
        }
    }

    #[test]
    fn psvt_is_invariant_to_singular_vector_signs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let y = random_matrix(&mut rng, 8, 5);
        let f = svd(&y).unwrap();
        let mut flipped = f.clone();
        flipped.flip_pair(0);
        flipped.flip_pair(3);
        let a = f.psvt(2, 0.4).unwrap();
        let b = flipped.psvt(2, 0.4).unwrap();
        assert!((a - b).amax() <= 1e-10);
    }

    #[test]
    fn project_rank_examples() {
        let rank_one = dmatrix![1.0; 2.0; 3.0] * dmatrix![1.0, -1.0, 0.5];
        assert!((project_rank(&rank_one, 1).unwrap() - &rank_one).amax() < 1e-12);
        assert!(
            (project_rank(&diag(&[5.0, 3.0, 1.0]), 2).unwrap() - diag(&[5.0, 3.0, 0.0])).amax()
                < 1e-12
        );
        assert!(project_rank(&rank_one, 0).is_err());
        assert!(project_rank(&rank_one, 4).is_err());
    }

    #[test]
    fn project_rank_error_matches_spectral_tail() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = random_matrix(&mut rng, 9, 6);
        let sigma = singular_values(&x).unwrap();
        let tail = sigma.iter().skip(2).map(|s| s * s).sum::<f64>().sqrt();
        assert_abs_diff_eq!(
            (&x - project_rank(&x, 2).unwrap()).norm(),
            tail,
            epsilon = 1e-10
        );
    }

    #[test]
    fn lagrangian_examples() {
        let o = dmatrix![1.0; 2.0] * dmatrix![1.0, 3.0];
        let zero = DenseMatrix::zeros(2, 2);
        assert_abs_diff_eq!(
            lagrangian_value(&o, &zero, &zero, &o, 1, 0.5, 2.0).unwrap(),
            0.0,
            epsilon = 1e-12
        );
        let value = lagrangian_value(&zero, &zero, &zero, &o, 1, 0.5, 3.0).unwrap();
        assert_abs_diff_eq!(value, 1.5 * o.norm_squared(), epsilon = 1e-12);
        assert!(
            lagrangian_value(&zero, &DenseMatrix::zeros(2, 3), &zero, &o, 1, 0.5, 1.0).is_err()
        );
        assert!(lagrangian_value(&zero, &zero, &zero, &o, 1, 0.5, 0.0).is_err());
    }

    #[test]
    fn lagrangian_matches_term_by_term() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let [a, e, z, o] = std::array::from_fn(|_| random_matrix(&mut rng, 6, 4));
        let (n, lambda, mu) = (1, 0.3, 2.5);
        let sigma = singular_values(&a).unwrap();
        let r = &o - &a - &e;
        let mut cross = 0.0;
        for i in 0..6 {
            for j in 0..4 {
                cross += z[(i, j)] * r[(i, j)];
            }
        }
        let expected = (norms(&a).unwrap().nuclear - sigma[0])
            + lambda * norms(&e).unwrap().l1
            + cross
            + 0.5 * mu * norms(&r).unwrap().fro.powi(2);
        assert_abs_diff_eq!(
            lagrangian_value(&a, &e, &z, &o, n, lambda, mu).unwrap(),
            expected,
            epsilon = 1e-10
        );
    }
}
