//! Built-in prior families.
//!
//! The compactly supported families (raised cosine, quartic bump) use
//! Gauss-Legendre grids, where their polynomial or trigonometric
//! information integrands are exact to machine precision; the Gaussian
//! prior uses a trapezoid grid truncated where its density falls below
//! 1e-14 of the peak.

use std::sync::Arc;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::numerics::{Grid1D, GridP};
use crate::prior::{Prior, PriorDensityFn, PriorGradFn, PriorSamplerFn};

const GL_NODES_1D: usize = 64;
const GL_NODES_2D: usize = 24;
const GL_NODES_HIGH: usize = 12;

fn gl_nodes_for_dim(p: usize) -> usize {
    match p {
        1 => GL_NODES_1D,
        2 => GL_NODES_2D,
        _ => GL_NODES_HIGH,
    }
}

/// Raised-cosine bump `q(t) = cos^2(pi u / 2) / r`, `u = (t - c)/r`, on
/// `(c - r, c + r)`. Prior information `pi^2 / r^2`.
pub fn raised_cosine(center: f64, radius: f64) -> Result<Prior> {
    check_radius(radius)?;
    let grid = Grid1D::gauss_legendre(center - radius, center + radius, 96)?;
    let density: PriorDensityFn = Arc::new(move |t: &[f64]| {
        let u = (t[0] - center) / radius;
        if u.abs() < 1.0 {
            let c = (0.5 * std::f64::consts::PI * u).cos();
            c * c / radius
        } else {
            0.0
        }
    });
    let gradient: PriorGradFn = Arc::new(move |t: &[f64], out: &mut [f64]| {
        let u = (t[0] - center) / radius;
        out[0] = if u.abs() < 1.0 {
            -(0.5 * std::f64::consts::PI) * (std::f64::consts::PI * u).sin() / (radius * radius)
        } else {
            0.0
        };
    });
    let sampler = rejection_sampler_1d(center, radius, 1.0 / radius, move |t| {
        let u = (t - center) / radius;
        let c = (0.5 * std::f64::consts::PI * u).cos();
        c * c / radius
    });
    Ok(Prior::new(
        format!("raised-cosine({center},{radius})"),
        vec![center - radius],
        vec![center + radius],
        GridP::from_axis(grid),
        density,
    )?
    .with_gradient(gradient)
    .with_sampler(sampler))
}

/// Quartic bump `q(t) = (15/16)(1 - u^2)^2 / r` on `(c - r, c + r)`.
/// Prior information `10 / r^2`.
pub fn quartic_bump(center: f64, radius: f64) -> Result<Prior> {
    quartic_bump_with_nodes(center, radius, GL_NODES_1D)
}

pub fn quartic_bump_with_nodes(center: f64, radius: f64, nodes: usize) -> Result<Prior> {
    check_radius(radius)?;
    let grid = Grid1D::gauss_legendre(center - radius, center + radius, nodes)?;
    let density: PriorDensityFn = Arc::new(move |t: &[f64]| bump_density(t[0], center, radius));
    let gradient: PriorGradFn = Arc::new(move |t: &[f64], out: &mut [f64]| {
        out[0] = bump_gradient(t[0], center, radius);
    });
    let sampler = rejection_sampler_1d(center, radius, (15.0 / 16.0) / radius, move |t| {
        bump_density(t, center, radius)
    });
    Ok(Prior::new(
        format!("quartic-bump({center},{radius})"),
        vec![center - radius],
        vec![center + radius],
        GridP::from_axis(grid),
        density,
    )?
    .with_gradient(gradient)
    .with_sampler(sampler))
}

fn bump_density(t: f64, center: f64, radius: f64) -> f64 {
    let u = (t - center) / radius;
    if u.abs() < 1.0 {
        let s = 1.0 - u * u;
        (15.0 / 16.0) * s * s / radius
    } else {
        0.0
    }
}

fn bump_gradient(t: f64, center: f64, radius: f64) -> f64 {
    let u = (t - center) / radius;
    if u.abs() < 1.0 {
        -(15.0 / 4.0) * u * (1.0 - u * u) / (radius * radius)
    } else {
        0.0
    }
}

/// Product of independent quartic bumps, one per axis, each of the given
/// radius and centered at zero. Prior information `(10 / r^2) I_p`.
pub fn product_quartic_bump(p: usize, radius: f64) -> Result<Prior> {
    product_quartic_bump_at(&vec![0.0; p], radius)
}

pub fn product_quartic_bump_at(center: &[f64], radius: f64) -> Result<Prior> {
    let nodes = gl_nodes_for_dim(center.len().max(1));
    product_quartic_bump_with_nodes(center, radius, nodes)
}

/// As `product_quartic_bump_at` but with an explicit per-axis node count, for
/// callers that trade grid resolution against the cost of their integrand.
pub fn product_quartic_bump_with_nodes(center: &[f64], radius: f64, nodes: usize) -> Result<Prior> {
    check_radius(radius)?;
    let p = center.len();
    if p == 0 {
        return Err(Error::invalid("product bump needs at least one axis"));
    }
    let axes = center
        .iter()
        .map(|&c| Grid1D::gauss_legendre(c - radius, c + radius, nodes))
        .collect::<Result<Vec<_>>>()?;
    let c0 = center.to_vec();
    let density: PriorDensityFn = Arc::new(move |t: &[f64]| {
        t.iter()
            .zip(&c0)
            .map(|(&ti, &ci)| bump_density(ti, ci, radius))
            .product()
    });
    let c1 = center.to_vec();
    let gradient: PriorGradFn = Arc::new(move |t: &[f64], out: &mut [f64]| {
        // grad_i = g'(t_i) * prod_{j != i} g(t_j)
        let vals: Vec<f64> = t
            .iter()
            .zip(&c1)
            .map(|(&ti, &ci)| bump_density(ti, ci, radius))
            .collect();
        for i in 0..t.len() {
            let mut prod = bump_gradient(t[i], c1[i], radius);
            for (j, &v) in vals.iter().enumerate() {
                if j != i {
                    prod *= v;
                }
            }
            out[i] = prod;
        }
    });
    let c2 = center.to_vec();
    let sampler: PriorSamplerFn = Arc::new(move |rng, out| {
        for (o, &ci) in out.iter_mut().zip(&c2) {
            *o = sample_bump_1d(rng, ci, radius);
        }
    });
    Ok(Prior::new(
        format!("product-quartic-bump(p={p},r={radius})"),
        center.iter().map(|&c| c - radius).collect(),
        center.iter().map(|&c| c + radius).collect(),
        GridP::new(axes)?,
        density,
    )?
    .with_gradient(gradient)
    .with_sampler(sampler))
}

fn sample_bump_1d(rng: &mut crate::numerics::Rng, center: f64, radius: f64) -> f64 {
    let peak = (15.0 / 16.0) / radius;
    loop {
        let t = center + radius * (2.0 * rng.random::<f64>() - 1.0);
        let u = rng.random::<f64>() * peak;
        if u <= bump_density(t, center, radius) {
            return t;
        }
    }
}

/// Gaussian prior N(mean, tau^2) on a trapezoid grid truncated at 8.5 tau.
/// Prior information `1 / tau^2`.
pub fn gaussian(mean: f64, tau: f64) -> Result<Prior> {
    check_radius(tau)?;
    let half = 8.5 * tau;
    let grid = Grid1D::uniform_trapezoid(mean - half, mean + half, 2001)?;
    let norm = tau * (2.0 * std::f64::consts::PI).sqrt();
    let density: PriorDensityFn = Arc::new(move |t: &[f64]| {
        let z = (t[0] - mean) / tau;
        (-0.5 * z * z).exp() / norm
    });
    let gradient: PriorGradFn = Arc::new(move |t: &[f64], out: &mut [f64]| {
        let z = (t[0] - mean) / tau;
        out[0] = -(z / tau) * (-0.5 * z * z).exp() / norm;
    });
    let sampler: PriorSamplerFn = Arc::new(move |rng, out| {
        let z: f64 = StandardNormal.sample(rng);
        out[0] = mean + tau * z;
    });
    Ok(Prior::new(
        format!("gaussian({mean},{tau})"),
        vec![mean - half],
        vec![mean + half],
        GridP::from_axis(grid),
        density,
    )?
    .with_gradient(gradient)
    .with_sampler(sampler))
}

/// Uniform density on `(c - r, c + r)`.
///
/// Deliberately not well-behaved: it does not vanish at the ends of its
/// support, so pairing it with an ambient box that touches the support
/// makes [`Prior::boundary_vanish_check`] fail. Useful as a negative test.
pub fn uniform_interval(center: f64, radius: f64) -> Result<Prior> {
    check_radius(radius)?;
    let grid = Grid1D::uniform_trapezoid(center - radius, center + radius, 1001)?;
    let density: PriorDensityFn = Arc::new(move |t: &[f64]| {
        if (t[0] - center).abs() < radius {
            0.5 / radius
        } else {
            0.0
        }
    });
    let gradient: PriorGradFn = Arc::new(|_, out| out[0] = 0.0);
    let sampler: PriorSamplerFn = Arc::new(move |rng, out| {
        out[0] = center + radius * (2.0 * rng.random::<f64>() - 1.0);
    });
    Ok(Prior::new(
        format!("uniform({center},{radius})"),
        vec![center - radius],
        vec![center + radius],
        GridP::from_axis(grid),
        density,
    )?
    .with_gradient(gradient)
    .with_sampler(sampler))
}

fn check_radius(r: f64) -> Result<()> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::invalid("radius/scale must be positive and finite"));
    }
    Ok(())
}

fn rejection_sampler_1d(
    center: f64,
    radius: f64,
    peak: f64,
    density: impl Fn(f64) -> f64 + Send + Sync + 'static,
) -> PriorSamplerFn {
    Arc::new(move |rng, out| loop {
        let t = center + radius * (2.0 * rng.random::<f64>() - 1.0);
        let u = rng.random::<f64>() * peak;
        if u <= density(t) {
            out[0] = t;
            return;
        }
    })
}
