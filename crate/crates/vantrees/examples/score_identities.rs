//! First-order score identities that every certified model must satisfy.
//!
//! The L2 score `xi_dot` is orthogonal to `xi` (differentiating unit mass),
//! and the derivative of `theta -> E_theta[T]` equals `2 mu[xi_dot xi T]`
//! for bounded statistics. Both are checked numerically per model.

use vantrees::error::Result;
use vantrees::model::{families as mf, Statistic};

fn main() -> Result<()> {
    let cases = [
        (mf::gaussian_location(1.0)?, vec![0.3]),
        (mf::bernoulli()?, vec![0.5]),
        (mf::exponential()?, vec![2.0]),
    ];

    println!("{:<28} {:>14}", "model", "mu[xi_dot xi]");
    for (model, theta0) in &cases {
        for v in model.score_orthogonality(theta0)? {
            println!("{:<28} {:>14.3e}", model.name(), v);
            assert!(v.abs() <= 1e-9);
        }
    }

    // Mean derivative through the pairing: for the Gaussian location family
    // and a clipped coordinate, d/dtheta E_theta[T] via the score matches a
    // centered finite difference of the expectation itself.
    let model = mf::gaussian_location(1.0)?;
    let stat = Statistic::from_fn("clipped-coordinate", 1, |x, out| {
        out[0] = x[0].clamp(-2.0, 2.0);
    })
    .with_bound(2.0);
    let theta0 = [0.25];
    let paired = model.gamma_derivative(&theta0, &stat, 0)?[0];

    let mean_at = |t: f64| -> Result<f64> {
        let grid = model.grid()?;
        let mut out = [0.0];
        let mut acc = 0.0;
        grid.for_each_node(|_, x, w| {
            stat.eval_into(x, &mut out);
            acc += w * model.density_at(&[t], x) * out[0];
        });
        Ok(acc)
    };
    let h = 1e-5;
    let fd = (mean_at(theta0[0] + h)? - mean_at(theta0[0] - h)?) / (2.0 * h);
    println!("\nmean derivative:  pairing = {paired:.10}   central difference = {fd:.10}");
    assert!((paired - fd).abs() <= 1e-6);
    Ok(())
}
