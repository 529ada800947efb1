//! Local asymptotic minimax bounds for the Gaussian location family, with
//! a Monte Carlo cross-check that the sample mean's shrinking-neighborhood
//! risk actually sits above the finite-c bounds.

use vantrees::bounds::TargetFunction;
use vantrees::error::Result;
use vantrees::lam::{
    lam_bound, lam_instance, limit_bound, minimax_table, sample_mean, McConfig, QuadraticForm,
};
use vantrees::model::families as mf;

fn main() -> Result<()> {
    let model = mf::gaussian_location(1.0)?;
    let loss = QuadraticForm::squared_norm(1)?;
    let make = |c_grid: Vec<f64>, n_grid: Vec<u64>| {
        lam_instance(
            &model,
            &[0.0],
            TargetFunction::identity(1),
            loss.clone(),
            c_grid,
            n_grid,
            None,
        )
    };

    // Across the table the bound depends only on c, following
    // 1 / (1 + I_H / c^2) with I_H = 10 for the unit quartic bump.
    let wide = make(vec![1.0, 2.0, 5.0, 10.0], vec![10_000])?;
    let i_h = wide.base_prior_information().get(0, 0);
    println!("prior information of the unit bump: {i_h:.10}");
    assert!((i_h - 10.0).abs() <= 1e-8);

    let table = lam_bound(&wide)?;
    println!(
        "\n{:>6} {:>10} {:>14} {:>14}",
        "c", "n", "finite bound", "law"
    );
    for row in &table.rows {
        let (c, n) = (row.record.c, row.record.n);
        let law = 1.0 / (1.0 + i_h / (c * c));
        println!("{c:>6.1} {n:>10} {:>14.10} {law:>14.10}", row.bound);
        assert!((row.bound - law).abs() <= 1e-8);
    }

    // As c grows the bound climbs to the classical pointwise limit, here 1.
    let limit = limit_bound(&wide)?;
    println!("\nlimit bound (c -> infinity): {:.10}", limit.value);
    assert!((limit.value - 1.0).abs() <= 1e-8);

    // Monte Carlo: the sample mean's worst risk over the shrinking
    // neighborhood is ~1 at every (c, n), which dominates every finite
    // bound. Common random numbers keep the table deterministic per seed.
    let narrow = make(vec![1.0, 2.0], vec![400, 1600])?;
    let mc = McConfig {
        seed: 42,
        draws: 4000,
        grid_per_axis: 5,
    };
    let rows = minimax_table(&narrow, |n| Ok(sample_mean(n, 1)), &mc)?;
    println!(
        "\n{:>6} {:>10} {:>10} {:>10} {:>12}",
        "c", "n", "risk", "3 se", "bound"
    );
    for row in &rows {
        println!(
            "{:>6.1} {:>10} {:>10.4} {:>10.4} {:>12.6}",
            row.c,
            row.n,
            row.risk,
            3.0 * row.se,
            row.bound_finite
        );
        assert!(row.risk + 3.0 * row.se >= row.bound_finite);
    }
    Ok(())
}
