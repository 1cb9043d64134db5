//! Numerical laboratory for the two-parameter trace functions
//! `Tr (B^{q/2} K* A^p K B^{q/2})^s` and the quantum divergences built on
//! them.
//!
//! The crate splits into:
//! - [`matrix`]: dense complex linear algebra (Jacobi eigensolver, Schatten
//!   norms, polar decomposition, fractional powers, random ensembles);
//! - [`trace_fn`]: the trace functions, their symmetries, and relatives;
//! - [`entropy`]: classical and quantum divergences, including the alpha-z
//!   family and its exact data-processing region;
//! - [`variational`]: min/max trace identities with explicit optimizers and
//!   the reduction decompositions;
//! - [`channel`]: quantum channels, twirling, and DPI experiments;
//! - [`probe`]: randomized convexity/concavity probing, region scans, and
//!   counterexample search.
//!
//! All randomness flows through seeded, streamed [`Rng`] instances, so every
//! computation is reproducible.

pub mod channel;
pub mod entropy;
pub mod error;
pub mod matrix;
pub mod probe;
pub mod rng;
pub mod trace_fn;
pub mod variational;

pub use error::{Error, Result};
pub use matrix::ComplexMatrix;
pub use rng::Rng;
pub use trace_fn::PsiParams;
