//! Minimax bounds when Fisher information is singular: along a direction
//! the data cannot see, no estimator localizes, the classical limit is
//! infinite, and the finite-c bound grows like c^2.

use vantrees::bounds::TargetFunction;
use vantrees::error::Result;
use vantrees::lam::{lam_instance, limit_bound, singular_probe, QuadraticForm};
use vantrees::model::families as mf;

fn main() -> Result<()> {
    // Two parameters, but the observation only depends on the first.
    let model = mf::degenerate_location_2d()?;
    let info = model.fisher_information(&[0.0, 0.0])?;
    println!("fisher information:");
    for i in 0..2 {
        println!("  [{:>10.6}  {:>10.6}]", info.get(i, 0), info.get(i, 1));
    }
    assert!(info.get(0, 0) > 0.9 && info.get(1, 1).abs() <= 1e-8);

    let instance = lam_instance(
        &model,
        &[0.0, 0.0],
        TargetFunction::identity(2),
        QuadraticForm::squared_norm(2)?,
        vec![5.0, 10.0],
        vec![100_000],
        None,
    )?;

    // The classical pointwise limit blows up because the inverse
    // information does not exist in the blind direction.
    let limit = limit_bound(&instance)?;
    println!("\nfisher singular: {}", limit.fisher_singular);
    println!("limit bound:     {}", limit.value);
    assert!(limit.fisher_singular && limit.value.is_infinite());

    // Probing the blind direction with a rank-one loss: the finite bound is
    // c^2 / I_H, so doubling c quadruples it. The probe enforces strict
    // growth in c and a floor on the final bound.
    let probe = singular_probe(&instance, &[0.0, 1.0], 4.0)?;
    println!("\n{:>6} {:>14}", "c", "bound along u");
    for (c, b) in &probe.rows {
        println!("{c:>6.1} {b:>14.6}");
    }
    let ratio = probe.rows[1].1 / probe.rows[0].1;
    println!("growth ratio bound(2c)/bound(c) = {ratio:.4}");
    assert!((3.6..=4.4).contains(&ratio));
    Ok(())
}
