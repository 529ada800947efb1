//! The matrix form of the averaged information bound: a PSD block
//! arrangement and a Schur complement that lower-bounds the full risk
//! matrix of any estimator.

use vantrees::bounds::{van_trees_1d, van_trees_matrix, TargetFunction};
use vantrees::error::Result;
use vantrees::model::{families as mf, Statistic};
use vantrees::prior::families as pf;

fn print_matrix(label: &str, m: &vantrees::numerics::SymmetricMatrix) {
    println!("{label}");
    for i in 0..m.dim() {
        print!(" ");
        for j in 0..m.dim() {
            print!(" {:>12.8}", m.get(i, j));
        }
        println!();
    }
}

fn main() -> Result<()> {
    // Two independent Gaussian coordinates under a product bump prior with
    // per-axis information 10: the Schur complement is (1/11) I.
    let model = mf::gaussian_location_2d_fine(-1.2, 1.2, 201)?;
    let prior = pf::product_quartic_bump_with_nodes(&[0.0, 0.0], 1.0, 12)?;
    let psi = TargetFunction::identity(2);
    let stat = Statistic::identity(2);

    let vtm = van_trees_matrix(&model, &prior, &psi, &stat)?;
    print_matrix("risk matrix:", &vtm.risk.matrix);
    print_matrix("schur lower bound:", &vtm.schur);
    println!("block min eigenvalue: {:.3e}", vtm.block_psd.min_eigenvalue);
    println!("gap   min eigenvalue: {:.3e}", vtm.gap_psd.min_eigenvalue);

    assert!(vtm.block_psd.passes && vtm.gap_psd.passes);
    for i in 0..2 {
        for j in 0..2 {
            let expect = if i == j { 1.0 / 11.0 } else { 0.0 };
            assert!((vtm.schur.get(i, j) - expect).abs() <= 1e-6);
        }
    }

    // In one dimension the Schur complement collapses to the scalar bound.
    let m1 = mf::gaussian_location(1.0)?;
    let q1 = pf::quartic_bump(0.0, 1.0)?;
    let psi1 = TargetFunction::identity(1);
    let vtm1 = van_trees_matrix(&m1, &q1, &psi1, &Statistic::coordinate(0))?;
    let v1 = van_trees_1d(&m1, &q1, &psi1)?.bound.as_scalar().unwrap();
    println!(
        "\n1x1 schur = {:.15}   scalar bound = {v1:.15}",
        vtm1.schur.get(0, 0)
    );
    assert!((vtm1.schur.get(0, 0) - v1).abs() <= 1e-12);
    Ok(())
}
