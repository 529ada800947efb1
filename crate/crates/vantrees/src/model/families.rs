//! Built-in model families.
//!
//! Each constructor fixes a sample grid wide enough for the parameter range
//! it documents; truncation points are chosen so the discarded tail mass is
//! below 1e-14 of the density peak. The `_fine` variants take the parameter
//! envelope and node count explicitly for callers (the config assembler,
//! mostly) that probe wider ranges.

use std::sync::Arc;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::model::{DensityFn, LogGradFn, Model, ParamDomain, SamplerFn};
use crate::numerics::{Grid1D, GridP};

const SQRT_2PI: f64 = 2.5066282746310002;

/// Tail half-width, in units of sigma, after which a Gaussian density is
/// below 1e-14 of its peak (sqrt(2 * 14 * ln 10) ~ 8.03, rounded up).
const GAUSS_TAIL_SIGMAS: f64 = 10.0;

fn normal_pdf(u: f64, sigma: f64) -> f64 {
    (-0.5 * (u / sigma) * (u / sigma)).exp() / (sigma * SQRT_2PI)
}

/// N(theta, sigma^2) location family on a grid sized for theta in [-2, 2].
///
/// Fisher information is 1/sigma^2 at every theta.
pub fn gaussian_location(sigma: f64) -> Result<Model> {
    gaussian_location_fine(sigma, -2.0, 2.0, 2001)
}

/// Gaussian location family whose grid covers `theta in [lo, hi]`.
pub fn gaussian_location_fine(sigma: f64, lo: f64, hi: f64, nodes: usize) -> Result<Model> {
    let grid = Grid1D::uniform_trapezoid(
        lo - GAUSS_TAIL_SIGMAS * sigma,
        hi + GAUSS_TAIL_SIGMAS * sigma,
        nodes,
    )?;
    let density: DensityFn = Arc::new(move |theta, x| normal_pdf(x[0] - theta[0], sigma));
    let log_grad: LogGradFn = Arc::new(move |theta, x, out| {
        out[0] = (x[0] - theta[0]) / (sigma * sigma);
    });
    let sampler: SamplerFn = Arc::new(move |theta, rng, out| {
        let z: f64 = StandardNormal.sample(rng);
        out[0] = theta[0] + sigma * z;
    });
    Ok(Model::new(
        format!("gaussian-location(sigma={sigma})"),
        ParamDomain::real_line(1),
        GridP::from_axis(grid),
        density,
    )
    .with_log_grad(log_grad)
    .with_sampler(sampler))
}

/// Bivariate Gaussian location with identity covariance, grid sized for
/// theta in [-2, 2]^2. Fisher information is the 2x2 identity.
pub fn gaussian_location_2d() -> Result<Model> {
    gaussian_location_2d_fine(-2.0, 2.0, 401)
}

pub fn gaussian_location_2d_fine(lo: f64, hi: f64, nodes_per_axis: usize) -> Result<Model> {
    let ax = Grid1D::uniform_trapezoid(
        lo - GAUSS_TAIL_SIGMAS,
        hi + GAUSS_TAIL_SIGMAS,
        nodes_per_axis,
    )?;
    let grid = GridP::new(vec![ax.clone(), ax])?;
    let density: DensityFn = Arc::new(move |theta, x| {
        normal_pdf(x[0] - theta[0], 1.0) * normal_pdf(x[1] - theta[1], 1.0)
    });
    let log_grad: LogGradFn = Arc::new(move |theta, x, out| {
        out[0] = x[0] - theta[0];
        out[1] = x[1] - theta[1];
    });
    let sampler: SamplerFn = Arc::new(move |theta, rng, out| {
        let z0: f64 = StandardNormal.sample(rng);
        let z1: f64 = StandardNormal.sample(rng);
        out[0] = theta[0] + z0;
        out[1] = theta[1] + z1;
    });
    Ok(Model::new(
        "gaussian-location-2d",
        ParamDomain::real_line(2),
        grid,
        density,
    )
    .with_log_grad(log_grad)
    .with_sampler(sampler))
}

/// N(mu, e^{2 eta}) with theta = (mu, eta); two parameters, scalar samples.
///
/// At eta = 0 the Fisher information is diag(1, 2). Grid sized for
/// mu in [-2, 2], eta in [-0.7, 0.7].
pub fn gaussian_mean_log_sigma() -> Result<Model> {
    let sigma_max = (0.7f64).exp();
    let half = 2.0 + GAUSS_TAIL_SIGMAS * sigma_max;
    let grid = Grid1D::uniform_trapezoid(-half, half, 2001)?;
    let density: DensityFn = Arc::new(move |theta, x| {
        let sigma = theta[1].exp();
        normal_pdf(x[0] - theta[0], sigma)
    });
    let log_grad: LogGradFn = Arc::new(move |theta, x, out| {
        let sigma = theta[1].exp();
        let z = (x[0] - theta[0]) / sigma;
        out[0] = z / sigma;
        out[1] = z * z - 1.0;
    });
    let sampler: SamplerFn = Arc::new(move |theta, rng, out| {
        let z: f64 = StandardNormal.sample(rng);
        out[0] = theta[0] + theta[1].exp() * z;
    });
    Ok(Model::new(
        "gaussian-mean-log-sigma",
        ParamDomain::real_line(2),
        GridP::from_axis(grid),
        density,
    )
    .with_log_grad(log_grad)
    .with_sampler(sampler))
}

/// Exponential family with rate theta on (0, 40], Gauss-Legendre nodes.
///
/// Fisher information is 1/theta^2. The truncation keeps normalization
/// error below 1e-10 for rates >= 0.9; use [`exponential_fine`] for smaller
/// rates.
pub fn exponential() -> Result<Model> {
    exponential_fine(40.0, 256)
}

pub fn exponential_fine(x_max: f64, nodes: usize) -> Result<Model> {
    let grid = Grid1D::gauss_legendre(0.0, x_max, nodes)?;
    let density: DensityFn = Arc::new(|theta, x| theta[0] * (-theta[0] * x[0]).exp());
    let log_grad: LogGradFn = Arc::new(|theta, x, out| {
        out[0] = 1.0 / theta[0] - x[0];
    });
    let sampler: SamplerFn = Arc::new(|theta, rng, out| {
        let u: f64 = rng.random();
        out[0] = -(1.0 - u).ln() / theta[0];
    });
    Ok(Model::new(
        "exponential-rate",
        ParamDomain::new_box(vec![0.0], vec![f64::INFINITY])?,
        GridP::from_axis(grid),
        density,
    )
    .with_log_grad(log_grad)
    .with_sampler(sampler))
}

/// Bernoulli(theta) on the two atoms {0, 1}; Fisher information
/// 1/(theta (1 - theta)).
pub fn bernoulli() -> Result<Model> {
    let grid = Grid1D::discrete_atoms(&[0.0, 1.0])?;
    let density: DensityFn =
        Arc::new(|theta, x| if x[0] > 0.5 { theta[0] } else { 1.0 - theta[0] });
    let log_grad: LogGradFn = Arc::new(|theta, x, out| {
        out[0] = if x[0] > 0.5 {
            1.0 / theta[0]
        } else {
            -1.0 / (1.0 - theta[0])
        };
    });
    let sampler: SamplerFn = Arc::new(|theta, rng, out| {
        let u: f64 = rng.random();
        out[0] = if u < theta[0] { 1.0 } else { 0.0 };
    });
    Ok(Model::new(
        "bernoulli",
        ParamDomain::new_box(vec![0.0], vec![1.0])?,
        GridP::from_axis(grid),
        density,
    )
    .with_log_grad(log_grad)
    .with_sampler(sampler))
}

/// Location family whose root density is a triangle:
/// `f_theta(x) = (3/2) (1 - |x - theta|)^2` on `[theta - 1, theta + 1]`.
///
/// The density has a kink at its center, so `theta -> f_theta(x)` is not
/// differentiable pointwise; the family is still differentiable in
/// quadratic mean with remainder of order h^{3/2}. Fisher information is
/// exactly 12. Grid sized for theta in [-1, 1].
pub fn triangular_location() -> Result<Model> {
    let m = triangular_location_fd()?;
    let log_grad: LogGradFn = Arc::new(|theta, x, out| {
        let u = x[0] - theta[0];
        // d/dtheta log f = 2 sign(u) / (1 - |u|) on the open support.
        out[0] = if u.abs() < 1.0 {
            2.0 * u.signum() / (1.0 - u.abs())
        } else {
            0.0
        };
    });
    Ok(m.with_log_grad(log_grad))
}

/// The same triangular family without its analytic score, so derivatives
/// fall back to central differences. Mostly useful for exercising the
/// moving-support diagnostics.
pub fn triangular_location_fd() -> Result<Model> {
    // The density kink at x = theta rarely falls on a node, which costs the
    // trapezoid rule O(h^2) per unit of derivative jump; h ~ 4e-5 keeps the
    // normalization error near 1e-9 for every theta.
    let grid = Grid1D::uniform_trapezoid(-2.3, 2.3, 120_001)?;
    let density: DensityFn = Arc::new(|theta, x| {
        let u = (x[0] - theta[0]).abs();
        if u < 1.0 {
            1.5 * (1.0 - u) * (1.0 - u)
        } else {
            0.0
        }
    });
    let sampler: SamplerFn = Arc::new(|theta, rng, out| {
        // Inverse CDF: F(u) = (1 + u)^3 / 2 on [-1, 0], symmetric above.
        let v: f64 = rng.random();
        let u = if v < 0.5 {
            (2.0 * v).cbrt() - 1.0
        } else {
            1.0 - (2.0 * (1.0 - v)).cbrt()
        };
        out[0] = theta[0] + u;
    });
    Ok(Model::new(
        "triangular-location",
        ParamDomain::real_line(1),
        GridP::from_axis(grid),
        density,
    )
    .with_sampler(sampler))
}

/// Two-parameter model that only depends on theta_1: scalar observations
/// from N(theta_1, 1), with theta_2 carrying no information at all.
///
/// Its Fisher information is diag(1, 0) everywhere, which makes it the
/// canonical probe for bounds along a direction the data cannot see.
pub fn degenerate_location_2d() -> Result<Model> {
    let grid = Grid1D::uniform_trapezoid(-12.0, 12.0, 2001)?;
    let density: DensityFn = Arc::new(|theta, x| normal_pdf(x[0] - theta[0], 1.0));
    let log_grad: LogGradFn = Arc::new(|theta, x, out| {
        out[0] = x[0] - theta[0];
        out[1] = 0.0;
    });
    let sampler: SamplerFn = Arc::new(|theta, rng, out| {
        let z: f64 = StandardNormal.sample(rng);
        out[0] = theta[0] + z;
    });
    Ok(Model::new(
        "gaussian-location-first-coordinate",
        ParamDomain::real_line(2),
        GridP::from_axis(grid),
        density,
    )
    .with_log_grad(log_grad)
    .with_sampler(sampler))
}
