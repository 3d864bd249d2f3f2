//! Complex approximate message passing (AMP) with group-sparse denoising.
//!
//! The crate solves the complex linear inverse problem `y = A x0 + w`, where
//! `A` has i.i.d. circular Gaussian entries and `x0` is sparse both at the
//! group level and within active groups. Recovery runs complex AMP with a
//! sparse group LASSO proximal denoiser (plus LASSO / group LASSO / real
//! decoupled baselines and an ISTA baseline), and a scalar state-evolution
//! recursion predicts the per-iteration error of the AMP variants.
//!
//! Beyond recovery, the crate carries a verification engine for the
//! real-augmented view of the same dynamics: every complex iteration can be
//! lifted to a real matrix iteration whose blocks collapse back onto the
//! complex orbit. [`lift`] and [`matrix_lift`] run both forms side by side
//! and certify that the collapse identities hold numerically.
//!
//! Modules:
//! - [`mat`]: dense complex/real matrix primitives tuned for the matvec-heavy
//!   recovery loop.
//! - [`problem`]: problem configuration, seeded instance generation, error
//!   metrics.
//! - [`denoise`]: proximal denoisers, their Onsager (Wirtinger-derivative)
//!   averages, and a finite-difference oracle.
//! - [`amp`]: the AMP and ISTA iterations plus the centered two-function
//!   recursion.
//! - [`lift`]: real-augmented system, collapse identities, equivalence checks.
//! - [`matrix_lift`]: the p-feature matrix form of the same machinery.
//! - [`state_evolution`]: Monte-Carlo state evolution and properness
//!   diagnostics.
//! - [`experiment`]: multi-trial experiment drivers and `.dat` emission.
//! - [`cli`]: command-line front end.

pub mod amp;
pub mod cli;
pub mod denoise;
pub mod error;
pub mod experiment;
pub mod lift;
pub mod mat;
pub mod matrix_lift;
pub mod problem;
pub mod state_evolution;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
