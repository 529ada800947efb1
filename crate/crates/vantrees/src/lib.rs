//! Information lower bounds from quadratic-mean differentiability.
//!
//! This crate computes and numerically verifies three families of lower
//! bounds on estimation risk, assuming nothing about densities beyond
//! differentiability in quadratic mean (L2 smoothness of `sqrt(f_theta)`):
//!
//! * the Cramer-Rao bound at a point,
//! * Bayesian van Trees bounds (scalar and matrix form) against a
//!   well-behaved prior,
//! * local asymptotic minimax bounds over shrinking neighborhoods,
//!   with their Gaussian limit experiment.
//!
//! | module   | contents |
//! |----------|----------|
//! | numerics | grids, quadrature, symmetric eigensolves, rate fits, seeded RNG |
//! | model    | dominated families, L2 derivatives, Fisher information, DQM certification |
//! | prior    | prior densities, prior information, boundary checks, posterior means |
//! | bounds   | Cramer-Rao, van Trees (1d/corollary/matrix), identity residuals |
//! | joint    | the location-family embedding that turns van Trees into Cramer-Rao |
//! | lam      | local asymptotic minimax machinery and Monte Carlo risk |
//! | cli      | config parsing, task runner, reports |
//!
//! Everything numerical is deterministic: integrals are fixed weighted sums
//! and random draws come from explicitly seeded ChaCha streams.

pub mod bounds;
pub mod cli;
pub mod error;
pub mod joint;
pub mod lam;
pub mod model;
pub mod numerics;
pub mod prior;

pub use error::{Error, Result};
