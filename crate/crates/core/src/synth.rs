//! Seeded generators for planted low-rank + sparse instances and
//! observation masks.
//!
//! All randomness comes from [`PrngStream`], a ChaCha20 generator addressed by
//! `(master_seed, stream_index)`. The ChaCha block function is specified
//! bit-for-bit, so a stream yields the same sequence on every platform.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{invalid, Result};
use crate::matcore::{validate, DenseMatrix};
use crate::solvers::ObservationMask;

/// Portable random stream. Experiments give trial `t` the stream index `t`, so
/// adding trials never changes the data of earlier ones.
#[derive(Debug, Clone)]
pub struct PrngStream {
    master_seed: u64,
    stream_index: u64,
    rng: ChaCha20Rng,
}

impl PrngStream {
    pub const ALGORITHM: &'static str = "chacha20";

    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(master_seed);
        rng.set_stream(stream_index);
        Self {
            master_seed,
            stream_index,
            rng,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    /// Uniform draw from `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform draw from `[low, high)`.
    pub fn uniform_in(&mut self, low: f64, high: f64) -> f64 {
        low + (high - low) * self.uniform()
    }

    /// Uniform integer in `low..high`.
    pub fn index_in(&mut self, low: usize, high: usize) -> usize {
        // u64 keeps the draw identical on 32- and 64-bit targets
        self.rng.random_range(low as u64..high as u64) as usize
    }

    pub fn uniform_matrix(&mut self, rows: usize, cols: usize) -> DenseMatrix {
        // fill row by row so the draw order matches the row-major convention
        let mut out = DenseMatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                out[(i, j)] = self.uniform();
            }
        }
        out
    }

    /// `count` distinct indices from `0..total`, in draw order, via a partial
    /// Fisher–Yates shuffle.
    pub fn sample_without_replacement(&mut self, total: usize, count: usize) -> Vec<usize> {
        assert!(count <= total, "cannot draw {count} of {total}");
        let mut pool: Vec<usize> = (0..total).collect();
        for i in 0..count {
            let j = self.index_in(i, total);
            pool.swap(i, j);
        }
        pool.truncate(count);
        pool
    }
}

fn orthonormal_columns(rows: usize, cols: usize, stream: &mut PrngStream) -> DenseMatrix {
    let draws = stream.uniform_matrix(rows, cols);
    draws.qr().q().columns(0, cols).into_owned()
}

/// Gram-Schmidt on U[0, 1] draws, keeping the length of each orthogonalized
/// vector, so basis entries stay on the same scale as the draws.
fn orthogonal_columns(rows: usize, cols: usize, stream: &mut PrngStream) -> DenseMatrix {
    let qr = stream.uniform_matrix(rows, cols).qr();
    let r = qr.r();
    let mut basis = qr.q().columns(0, cols).into_owned();
    for k in 0..cols {
        basis.column_mut(k).scale_mut(r[(k, k)]);
    }
    basis
}

/// Rank-`rank` matrix whose columns are combinations of `rank` mutually
/// orthogonal basis vectors with weights drawn from U[0, 1].
///
/// The basis is not normalized. With unit-length vectors the planted entries
/// would be about `1/sqrt(rows)` in size, far below the U[0, 1] outliers.
pub fn gen_low_rank(
    rows: usize,
    cols: usize,
    rank: usize,
    stream: &mut PrngStream,
) -> Result<DenseMatrix> {
    if rows == 0 || cols == 0 {
        return invalid("matrix dimensions must be positive");
    }
    if rank == 0 || rank > rows.min(cols) {
        return invalid(format!(
            "rank must lie in 1..={}, got {rank}",
            rows.min(cols)
        ));
    }
    let basis = orthogonal_columns(rows, rank, stream);
    let weights = stream.uniform_matrix(rank, cols);
    Ok(basis * weights)
}

/// How a selected entry is corrupted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Corruption {
    /// The observed entry becomes a U[0, 1] draw.
    #[default]
    Replace,
    /// A U[0, 1] draw is added to the clean entry.
    Additive,
}

/// Selects `round(m n r)` distinct entries and corrupts them with U[0, 1]
/// noise. Returns `(E, O)` with `O = A + E` exactly.
pub fn corrupt_sparse(
    clean: &DenseMatrix,
    ratio: f64,
    mode: Corruption,
    stream: &mut PrngStream,
) -> Result<(DenseMatrix, DenseMatrix)> {
    validate(clean)?;
    if !(0.0..=1.0).contains(&ratio) {
        return invalid(format!("corruption ratio must lie in [0, 1], got {ratio}"));
    }
    let (rows, cols) = clean.shape();
    let total = rows * cols;
    let count = ((total as f64) * ratio).round() as usize;
    let positions = stream.sample_without_replacement(total, count);
    let mut sparse = DenseMatrix::zeros(rows, cols);
    for linear in positions {
        let (i, j) = (linear / cols, linear % cols);
        let noise = stream.uniform();
        sparse[(i, j)] = match mode {
            Corruption::Replace => noise - clean[(i, j)],
            Corruption::Additive => noise,
        };
    }
    // under replacement noise - a + a can differ from noise in the last bit,
    // so O is defined from the sum to keep O = A + E exact
    let observed = clean + &sparse;
    Ok((sparse, observed))
}

/// `U diag(sigmas) Vᵀ` with random orthonormal `U` and `V`: a matrix with a
/// prescribed, possibly very unbalanced, spectrum.
pub fn gen_unbalanced(
    rows: usize,
    cols: usize,
    sigmas: &[f64],
    stream: &mut PrngStream,
) -> Result<DenseMatrix> {
    let k = sigmas.len();
    if rows == 0 || cols == 0 {
        return invalid("matrix dimensions must be positive");
    }
    if k == 0 || k > rows.min(cols) {
        return invalid(format!(
            "need 1..={} scale factors, got {k}",
            rows.min(cols)
        ));
    }
    if sigmas.iter().any(|s| !s.is_finite() || *s < 0.0) {
        return invalid("scale factors must be finite and non-negative");
    }
    let mut left = orthonormal_columns(rows, k, stream);
    let right = orthonormal_columns(cols, k, stream);
    for (j, mut col) in left.column_iter_mut().enumerate() {
        col *= sigmas[j];
    }
    Ok(left * right.transpose())
}

/// Uniformly samples `round(m n fraction)` observed positions.
pub fn gen_mask(
    rows: usize,
    cols: usize,
    fraction: f64,
    stream: &mut PrngStream,
) -> Result<ObservationMask> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return invalid(format!(
            "observed fraction must lie in (0, 1], got {fraction}"
        ));
    }
    if rows == 0 || cols == 0 {
        return invalid("mask dimensions must be positive");
    }
    let total = rows * cols;
    let count = ((total as f64) * fraction).round() as usize;
    let mut observed = DMatrix::from_element(rows, cols, false);
    for linear in stream.sample_without_replacement(total, count) {
        observed[(linear / cols, linear % cols)] = true;
    }
    ObservationMask::from_dense(observed)
}

/// Planted robust PCA instance `O = A_GT + E_GT`.
#[derive(Debug, Clone)]
pub struct SyntheticInstance {
    pub low_rank: DenseMatrix,
    pub sparse: DenseMatrix,
    pub observed: DenseMatrix,
    pub true_rank: usize,
    pub corruption_ratio: f64,
    pub master_seed: u64,
    pub stream_index: u64,
}

impl SyntheticInstance {
    /// Draws the low-rank part and then the corruption from one stream.
    pub fn generate(
        rows: usize,
        cols: usize,
        rank: usize,
        corruption_ratio: f64,
        mode: Corruption,
        stream: &mut PrngStream,
    ) -> Result<Self> {
        let low_rank = gen_low_rank(rows, cols, rank, stream)?;
        let (sparse, observed) = corrupt_sparse(&low_rank, corruption_ratio, mode, stream)?;
        Ok(Self {
            low_rank,
            sparse,
            observed,
            true_rank: rank,
            corruption_ratio,
            master_seed: stream.master_seed(),
            stream_index: stream.stream_index(),
        })
    }

    pub fn corrupted_count(&self) -> usize {
        self.sparse.iter().filter(|v| **v != 0.0).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::singular_values;
    use approx::assert_abs_diff_eq;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<f64> = (0..5)
            .map({
                let mut s = PrngStream::new(42, 3);
                move |_| s.uniform()
            })
            .collect();
        let b: Vec<f64> = (0..5)
            .map({
                let mut s = PrngStream::new(42, 3);
                move |_| s.uniform()
            })
            .collect();
        let c: Vec<f64> = (0..5)
            .map({
                let mut s = PrngStream::new(42, 4);
                move |_| s.uniform()
            })
            .collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn rank_one_columns_are_parallel() {
        let a = gen_low_rank(50, 10, 1, &mut PrngStream::new(1, 0)).unwrap();
        let s = singular_values(&a).unwrap();
        assert!(s[1] / s[0] < 1e-10);
    }

    #[test]
    fn low_rank_has_exact_numerical_rank() {
        let a = gen_low_rank(100, 20, 3, &mut PrngStream::new(2, 0)).unwrap();
        let s = singular_values(&a).unwrap();
        assert!(s[2] / s[0] > 1e-8);
        assert!(s[3] / s[0] < 1e-12);
    }

    #[test]
    fn low_rank_is_deterministic() {
        let a = gen_low_rank(30, 8, 2, &mut PrngStream::new(9, 1)).unwrap();
        let b = gen_low_rank(30, 8, 2, &mut PrngStream::new(9, 1)).unwrap();
        assert_eq!(a, b);
        assert!(gen_low_rank(5, 3, 4, &mut PrngStream::new(9, 1)).is_err());
    }

    #[test]
    fn corruption_counts_and_ranges() {
        let a = gen_low_rank(20, 10, 2, &mut PrngStream::new(3, 0)).unwrap();
        let mut s = PrngStream::new(3, 1);
        let (e, o) = corrupt_sparse(&a, 0.0, Corruption::Replace, &mut s).unwrap();
        assert_eq!(e, DenseMatrix::zeros(20, 10));
        assert_eq!(o, a);

        let (e, o) =
            corrupt_sparse(&a, 0.1, Corruption::Replace, &mut PrngStream::new(3, 1)).unwrap();
        assert_eq!(e.iter().filter(|v| **v != 0.0).count(), 20);
        assert_eq!(o, &a + &e);

        let (_, o) =
            corrupt_sparse(&a, 1.0, Corruption::Replace, &mut PrngStream::new(3, 1)).unwrap();
        assert!(o.iter().all(|v| (-1e-15..=1.0 + 1e-15).contains(v)));

        assert!(corrupt_sparse(&a, 1.5, Corruption::Replace, &mut s).is_err());
        assert!(corrupt_sparse(&a, -0.1, Corruption::Replace, &mut s).is_err());
    }

    #[test]
    fn corruption_ignores_matrix_content() {
        let zeros = DenseMatrix::zeros(12, 6);
        let ones = DenseMatrix::from_element(12, 6, 1.0);
        let (e0, _) = corrupt_sparse(
            &zeros,
            0.25,
            Corruption::Additive,
            &mut PrngStream::new(5, 2),
        )
        .unwrap();
        let (e1, _) = corrupt_sparse(
            &ones,
            0.25,
            Corruption::Additive,
            &mut PrngStream::new(5, 2),
        )
        .unwrap();
        assert_eq!(e0, e1);
    }

    #[test]
    fn unbalanced_spectrum_is_exact() {
        let a = gen_unbalanced(40, 12, &[100.0, 10.0, 0.1], &mut PrngStream::new(4, 0)).unwrap();
        let s = singular_values(&a).unwrap();
        for (got, want) in s.iter().zip([100.0, 10.0, 0.1]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-8);
        }
        let b = gen_unbalanced(10, 5, &[1.0], &mut PrngStream::new(4, 1)).unwrap();
        assert_abs_diff_eq!(b.norm(), 1.0, epsilon = 1e-12);
        assert!(singular_values(&b).unwrap()[1] < 1e-12);
    }

    #[test]
    fn unbalanced_preserves_ratios() {
        let sigmas = [7.0, 3.5, 0.7, 0.07];
        let a = gen_unbalanced(25, 9, &sigmas, &mut PrngStream::new(4, 2)).unwrap();
        let s = singular_values(&a).unwrap();
        for i in 1..sigmas.len() {
            assert_abs_diff_eq!(s[i] / s[0], sigmas[i] / sigmas[0], epsilon = 1e-10);
        }
    }

    #[test]
    fn mask_counts() {
        assert_eq!(
            gen_mask(6, 7, 1.0, &mut PrngStream::new(1, 0))
                .unwrap()
                .count(),
            42
        );
        let m = gen_mask(10, 10, 0.5, &mut PrngStream::new(1, 0)).unwrap();
        assert_eq!(m.count(), 50);
        assert_eq!(
            m,
            gen_mask(10, 10, 0.5, &mut PrngStream::new(1, 0)).unwrap()
        );
        assert!(gen_mask(10, 10, 0.0, &mut PrngStream::new(1, 0)).is_err());
        assert!(gen_mask(10, 10, 1.2, &mut PrngStream::new(1, 0)).is_err());
    }

    #[test]
    fn instance_invariants() {
        let inst = SyntheticInstance::generate(
            40,
            15,
            3,
            0.1,
            Corruption::Replace,
            &mut PrngStream::new(8, 2),
        )
        .unwrap();
        assert_eq!(inst.corrupted_count(), 60);
        assert_eq!(inst.observed, &inst.low_rank + &inst.sparse);
        assert_eq!((inst.master_seed, inst.stream_index), (8, 2));
        let s = singular_values(&inst.low_rank).unwrap();
        assert!(s[2] / s[0] > 1e-8);
    }
}
