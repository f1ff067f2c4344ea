//! Robust PCA and matrix completion with a partial-sum-of-singular-values
//! penalty, which leaves the top `N` singular values unpenalized.
//!
//! ```
//! use pssv::solvers::{solve_rpca, RpcaConfig};
//! use pssv::synth::{Corruption, PrngStream, SyntheticInstance};
//!
//! let inst = SyntheticInstance::generate(300, 30, 3, 0.05, Corruption::Replace, &mut PrngStream::new(1, 0))?;
//! let sol = solve_rpca(&inst.observed, &RpcaConfig::pssv(3))?;
//! assert!(pssv::metrics::nrmse(&inst.low_rank, &sol.low_rank)? < 0.01);
//! # Ok::<(), pssv::Error>(())
//! ```
//!
//! The `pssv` binary wraps the solvers and the experiment drivers; see the
//! guide in `book/` for both.

pub mod error;
pub mod harness;
pub mod io;
pub mod matcore;
pub mod metrics;
pub mod solvers;
pub mod synth;

pub use error::{Error, Result};
pub use matcore::DenseMatrix;

// Compile and run the guide's snippets as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/pssv-norm.md")]
    mod pssv_norm {}
    #[doc = include_str!("../../../book/src/psvt.md")]
    mod psvt {}
    #[doc = include_str!("../../../book/src/admm.md")]
    mod admm {}
    #[doc = include_str!("../../../book/src/completion.md")]
    mod completion {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../README.md")]
    mod readme {}
}
