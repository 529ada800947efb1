//! Quadrature grids, small symmetric matrix algebra, convergence-rate
//! fitting, and seeded RNG. Everything downstream is built from these four
//! pieces.

pub mod grid;
pub mod matrix;
pub mod rate;
pub mod rng;

pub use grid::{Grid1D, GridKind, GridP};
pub use matrix::{dvec, mat_t_mat_mat, Eigen, PsdReport, PseudoInverse, SymmetricMatrix};
pub use rate::{fit_rate, geometric_steps, RateFit};
pub use rng::{derive_seed, rng_from_seed, Rng};
