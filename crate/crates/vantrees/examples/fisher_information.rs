//! Fisher information through the square-root density route, checked
//! against closed forms.
//!
//! Every matrix here comes from `4 mu[xi_dot xi_dot']` with `xi = sqrt(f)`,
//! so nothing below assumes a differentiable log-density.

use vantrees::error::Result;
use vantrees::model::families as mf;

fn main() -> Result<()> {
    let cases = [
        (mf::gaussian_location(1.0)?, vec![0.3], 1.0),
        (mf::bernoulli()?, vec![0.5], 4.0),
        (mf::exponential()?, vec![2.0], 0.25),
    ];
    println!(
        "{:<28} {:>22} {:>12} {:>10}",
        "model", "I(theta0)", "closed form", "rel err"
    );
    for (model, theta0, oracle) in &cases {
        let info = model.fisher_information(theta0)?.get(0, 0);
        println!(
            "{:<28} {:>22.15} {:>12.4} {:>10.2e}",
            model.name(),
            info,
            oracle,
            (info - oracle).abs() / oracle
        );
        assert!((info - oracle).abs() <= 1e-6 * oracle);
    }

    // The planar location family factorizes, so its information is the
    // identity matrix at every parameter.
    let plane = mf::gaussian_location_2d()?;
    let info = plane.fisher_information(&[0.1, -0.2])?;
    println!("\n{} at (0.1, -0.2):", plane.name());
    for i in 0..2 {
        println!("  [{:>18.15}  {:>18.15}]", info.get(i, 0), info.get(i, 1));
        for j in 0..2 {
            let expect = if i == j { 1.0 } else { 0.0 };
            assert!((info.get(i, j) - expect).abs() <= 1e-8);
        }
    }

    // IID products add information: n Bernoulli tosses carry n times the
    // information of one.
    let single = mf::bernoulli()?;
    let triple = single.product_model(3)?;
    let (one, three) = (
        single.fisher_information(&[0.3])?.get(0, 0),
        triple.fisher_information(&[0.3])?.get(0, 0),
    );
    println!(
        "\nbernoulli:  I_1 = {one:.12}  I_3 = {three:.12}  ratio = {:.12}",
        three / one
    );
    assert!((three / one - 3.0).abs() <= 1e-8);
    Ok(())
}
