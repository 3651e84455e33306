//! Bayesian data-augmentation MCMC for discretely observed, correlated
//! multivariate diffusions.
//!
//! The diffusion matrix is parameterised through a lower-triangular factor
//! `C` (`A = F V F`, `V = C C'`), and imputed paths live in unit-volatility
//! coordinates centered on linear interpolants, so that their dominating
//! measure does not depend on the parameters.

pub mod cholesky;
pub mod error;
pub mod io;
pub mod likelihood;
pub mod mcmc;
pub mod model;
pub mod reparam;

pub use cholesky::{chol_to_corr, corr_to_chol, corr_to_chol_masked, CholeskyFactor, CorrScaleSpec, SparsityMask};
pub use error::{Error, Result};
pub use io::RunConfig;
pub use likelihood::{AugmentedPath, Engine, Regime};
pub use mcmc::{run_chain, ChainConfig, ChainOutput, Initial, Method, PriorSpec, SampleRecord};
pub use model::{Diffusion, Model, ObservationSet, PathLattice};
pub use reparam::TransformContext;
