//! Discretization residuals of the two integral identities behind the
//! bounds, measured on deliberately grid-limited inputs.
//!
//! With analytic scores both identities hold exactly on the lattice, so to
//! see convergence one needs a configuration whose error is genuinely
//! quadrature-bound: a clamped target with kinks for the pairing identity,
//! and an inline model on a coarse sample grid for the norm identity. Both
//! residuals then shrink as the grids refine, which is the certificate that
//! they measure discretization and not a broken identity.

use std::sync::Arc;

use vantrees::bounds::{
    delta_norm_identity_residual, ibp_zero_residual, key_equality_residual, ScalarField,
    TargetFunction,
};
use vantrees::error::Result;
use vantrees::model::{families as mf, Model, ParamDomain, Statistic};
use vantrees::numerics::{Grid1D, GridP};
use vantrees::prior::{families as pf, Prior};

/// Quartic bump prior on an explicit uniform trapezoid grid.
fn bump_prior(nodes: usize) -> Result<Prior> {
    let grid = Grid1D::uniform_trapezoid(-1.0, 1.0, nodes)?;
    Ok(Prior::new(
        "bump-uniform-grid",
        vec![-1.0],
        vec![1.0],
        GridP::from_axis(grid),
        Arc::new(|t: &[f64]| {
            let u = 1.0 - t[0] * t[0];
            if u > 0.0 {
                0.9375 * u * u
            } else {
                0.0
            }
        }),
    )?
    .with_gradient(Arc::new(|t: &[f64], out: &mut [f64]| {
        let u = t[0];
        out[0] = if u.abs() < 1.0 {
            -3.75 * u * (1.0 - u * u)
        } else {
            0.0
        };
    })))
}

/// Exponential model with analytic score on a deliberately coarse uniform
/// sample grid.
fn coarse_exponential(nodes: usize) -> Result<Model> {
    let grid = GridP::from_axis(Grid1D::uniform_trapezoid(0.0, 40.0, nodes)?);
    let m = Model::new(
        "exponential-coarse",
        ParamDomain::new_box(vec![0.05], vec![25.0])?,
        grid,
        Arc::new(|t: &[f64], x: &[f64]| t[0] * (-t[0] * x[0]).exp()),
    );
    Ok(
        m.with_log_grad(Arc::new(|t: &[f64], x: &[f64], out: &mut [f64]| {
            out[0] = 1.0 / t[0] - x[0];
        })),
    )
}

fn main() -> Result<()> {
    // Pairing identity: 2 iint Delta sqrt(q) xi (S - psi) = int psi' dQ.
    let model = mf::gaussian_location(1.0)?;
    let psi = TargetFunction::clamped_identity(1, 0.5);
    let stat = Statistic::indicator_above(0, 0.0);
    println!("pairing identity residual (theta-grid limited):");
    println!("{:>8} {:>14}", "nodes", "residual");
    let mut last = f64::INFINITY;
    for nodes in [101usize, 201, 401, 801] {
        let check = key_equality_residual(&model, &bump_prior(nodes)?, &psi, &stat)?;
        println!("{nodes:>8} {:>14.6e}", check.residual);
        assert!(
            check.residual < last,
            "residual must shrink as the grid refines"
        );
        last = check.residual;
    }

    // Norm identity: 4 iint Delta^2 = I_Q + int I_P dQ.
    let prior =
        pf::quartic_bump(2.0, 0.5)?.with_ambient(ParamDomain::new_box(vec![0.05], vec![25.0])?)?;
    println!("\nnorm identity residual (sample-grid limited):");
    println!("{:>8} {:>14} {:>14}", "nodes", "residual", "cross term");
    last = f64::INFINITY;
    for nodes in [501usize, 1001, 2001, 4001] {
        let check = delta_norm_identity_residual(&coarse_exponential(nodes)?, &prior)?;
        println!(
            "{nodes:>8} {:>14.6e} {:>14.6e}",
            check.residual, check.cross_term
        );
        assert!(check.residual < last);
        last = check.residual;
    }

    // Integration by parts against a vanishing prior leaves no boundary
    // term: int (phi q)' dtheta = 0 for smooth phi.
    let q = pf::quartic_bump(0.0, 1.0)?;
    let phi =
        ScalarField::from_fn("sine-field", 1, |t| (1.5 * t[0]).sin()).with_partials(|t, out| {
            out[0] = 1.5 * (1.5 * t[0]).cos();
        });
    let r = ibp_zero_residual(&phi, &q, 0)?;
    println!("\nintegration-by-parts residual: {r:.3e}");
    assert!(r.abs() <= 1e-6);
    Ok(())
}
