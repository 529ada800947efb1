//! Loading a model from a tabulated density file and running the same
//! machinery on it: Fisher information, quadratic-mean certification, and
//! the scalar bound, all without an analytic density.
//!
//! The table is written on the fly: a Gaussian location family sampled on
//! a theta-lattice whose spacing matches the library's finite-difference
//! step, so row snapping is exact.

use std::io::Write;
use std::sync::Arc;

use vantrees::bounds::{van_trees_1d, TargetFunction};
use vantrees::error::Result;
use vantrees::model::tabulated::load_model_info;
use vantrees::model::FD_STEP_REL;
use vantrees::numerics::{Grid1D, GridP};
use vantrees::prior::Prior;

fn write_table(path: &std::path::Path, rows: usize, spacing: f64) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    let n = 1201;
    let (a, b) = (-9.0f64, 9.0f64);
    let h = (b - a) / (n - 1) as f64;
    let xs: Vec<f64> = (0..n).map(|i| a + h * i as f64).collect();
    write!(f, "theta")?;
    for x in &xs {
        write!(f, ",{x:.17e}")?;
    }
    writeln!(f)?;
    let norm = (2.0 * std::f64::consts::PI).sqrt();
    for r in 0..rows {
        let theta = (r as f64 - (rows as f64 - 1.0) / 2.0) * spacing;
        write!(f, "{theta:.17e}")?;
        for x in &xs {
            let d = x - theta;
            write!(f, ",{:.17e}", (-0.5 * d * d).exp() / norm)?;
        }
        writeln!(f)?;
    }
    f.flush()
}

fn main() -> Result<()> {
    let dir = std::env::temp_dir();
    let path = dir.join("vantrees_example_gaussian_table.csv");
    // 161 rows at the finite-difference step: the lattice spans +/- 8e-3.
    write_table(&path, 161, FD_STEP_REL)?;

    let (model, info) = load_model_info(&path)?;
    println!(
        "loaded {} rows, {} sample nodes",
        info.theta_rows.len(),
        info.x_nodes
    );
    println!("theta spacing: {:.1e}", info.theta_spacing);
    assert!(!model.has_analytic_score());

    // Fisher information by finite differences on the lattice.
    let fisher = model.fisher_information(&[0.0])?.get(0, 0);
    println!("fisher at 0:   {fisher:.8} (closed form 1)");
    assert!((fisher - 1.0).abs() <= 1e-4);

    // Quadratic-mean certification with lattice-aligned steps.
    let steps: Vec<f64> = [64.0, 32.0, 16.0, 8.0, 4.0]
        .iter()
        .map(|k| k * info.theta_spacing)
        .collect();
    let dqm = model.dqm_certify(&[0.0], &steps)?;
    println!(
        "dqm min slope: {:.4} (certified: {})",
        dqm.min_slope, dqm.certified
    );
    assert!(dqm.certified);

    // The averaged bound needs a prior whose quadrature nodes sit on the
    // tabulated lattice; a quartic bump on an explicit uniform grid does.
    let r = 64.0 * info.theta_spacing;
    let grid = Grid1D::uniform_trapezoid(-r, r, 129)?;
    let prior = Prior::new(
        "bump-on-lattice",
        vec![-r],
        vec![r],
        GridP::from_axis(grid),
        Arc::new(move |t: &[f64]| {
            let w: f64 = 1.0 - (t[0] / r) * (t[0] / r);
            if w <= 0.0 {
                0.0
            } else {
                0.9375 * w * w / r
            }
        }),
    )?
    .with_gradient(Arc::new(move |t: &[f64], out: &mut [f64]| {
        let u = t[0] / r;
        let w: f64 = 1.0 - u * u;
        out[0] = if w <= 0.0 {
            0.0
        } else {
            -3.75 * u * w / (r * r)
        };
    }));
    let report = van_trees_1d(&model, &prior, &TargetFunction::identity(1))?;
    let bound = report.bound.as_scalar().unwrap();
    let i_q = report.i_q.as_scalar().unwrap();
    println!(
        "prior information on the lattice: {i_q:.4e} (closed form {:.4e})",
        10.0 / (r * r)
    );
    println!("averaged bound over the lattice prior: {bound:.6e}");
    // The prior grid cannot be finer than the tabulation lattice, so a few
    // percent of quadrature error in I_Q is the honest resolution here.
    assert!((i_q - 10.0 / (r * r)).abs() <= 0.05 * i_q);
    assert!(bound > 0.0);

    std::fs::remove_file(&path).ok();
    Ok(())
}
