//! The scalar averaged information bound, and the conjugate pair where it
//! is attained exactly.
//!
//! For a Gaussian location model under a Gaussian prior the posterior mean
//! achieves Bayes risk `1 / (I_Q + int I_P dQ)`, so the bound is tight and
//! the report can be checked line by line.

use vantrees::bounds::{bayes_risk, van_trees_1d, RiskMode, TargetFunction};
use vantrees::error::Result;
use vantrees::model::families as mf;
use vantrees::prior::{families as pf, posterior_mean};

fn main() -> Result<()> {
    let model = mf::gaussian_location(1.0)?;
    let prior = pf::gaussian(0.0, 1.0)?;
    let psi = TargetFunction::identity(1);

    let report = van_trees_1d(&model, &prior, &psi)?;
    let bound = report.bound.as_scalar().expect("scalar bound");

    let scalar = |q: &vantrees::bounds::Quantity| q.as_scalar().unwrap_or(f64::NAN);
    println!("bound              = {bound:.12}");
    println!(
        "int psi' dQ        = {:.12}",
        scalar(&report.int_psi_prime_dq)
    );
    println!("I_Q                = {:.12}", scalar(&report.i_q));
    println!("int I_P dQ         = {:.12}", scalar(&report.int_ip_dq));
    println!("key-eq residual    = {:.3e}", report.residual_key_eq);
    println!("grids              = {}", report.grid_meta);

    // Unit variance each: the bound collapses to 1/(1+1) = 1/2.
    assert!((bound - 0.5).abs() <= 1e-8);

    // The posterior mean attains it.
    let pm = posterior_mean(&model, &prior)?;
    let risk = bayes_risk(&model, &prior, &psi, &pm, RiskMode::Quadrature)?.scalar();
    println!("posterior-mean risk = {risk:.12}");
    assert!((risk - bound).abs() <= 1e-6 * risk);

    // A wider prior pushes the bound toward the pointwise optimum 1/I_P:
    // prior knowledge stops helping as tau grows. (The sweep stays in the
    // range where the prior mass lives well inside the model's sample
    // grid; far wider priors would need a wider tabulation.)
    println!("\n{:>6} {:>14}", "tau", "bound");
    for tau in [0.25, 0.5, 1.0, 2.0] {
        let q = pf::gaussian(0.0, tau)?;
        let b = van_trees_1d(&model, &q, &psi)?.bound.as_scalar().unwrap();
        println!("{tau:>6.2} {b:>14.10}");
        let expect = 1.0 / (1.0 + 1.0 / (tau * tau));
        assert!((b - expect).abs() <= 1e-6);
    }
    Ok(())
}
