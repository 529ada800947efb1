//! The joint location model: absorbing the prior into a single location
//! family on (theta, x) pairs, where the averaged bound reappears as a
//! plain pointwise information bound at alpha = 0.

use vantrees::bounds::TargetFunction;
use vantrees::error::Result;
use vantrees::joint::{build_joint, van_trees_as_cramer_rao};
use vantrees::model::families as mf;
use vantrees::prior::{families as pf, posterior_mean};

fn main() -> Result<()> {
    let model = mf::gaussian_location(1.0)?;
    let prior = pf::gaussian(0.0, 1.0)?;
    let joint = build_joint(&model, &prior, None)?;

    // The shifted joint density stays a probability density across the
    // whole shift window.
    println!("shift window delta = {:.4}", joint.delta());
    for alpha in [-0.5 * joint.delta(), 0.0, 0.5 * joint.delta()] {
        let mass = joint.normalization(alpha)?;
        println!("  mass at alpha = {alpha:>8.4}: {mass:.12}");
        assert!((mass - 1.0).abs() <= 1e-8);
    }

    let stat = posterior_mean(&model, &prior)?;
    let psi = TargetFunction::identity(1);
    let cmp = van_trees_as_cramer_rao(&joint, &stat, &psi)?;

    // Fisher information of the joint family at alpha = 0 equals the prior
    // information plus the averaged model information.
    println!("\nfisher of the joint family  = {:.10}", cmp.fisher_joint);
    println!("I_Q + int I_P dQ            = {:.10}", cmp.fisher_split);
    assert!((cmp.fisher_joint - cmp.fisher_split).abs() <= 1e-5 * cmp.fisher_split);

    // The alpha-derivative of the estimator's mean reproduces the averaged
    // target derivative, which makes the pointwise information bound of the
    // joint family literally the averaged bound of the pair.
    println!("d/dalpha mean at 0          = {:.10}", cmp.gamma_slope);
    println!("int psi' dQ                 = {:.10}", cmp.int_psi_prime_dq);
    assert!((cmp.gamma_slope - cmp.int_psi_prime_dq).abs() <= 1e-5);

    println!("pointwise bound of joint    = {:.10}", cmp.cr_bound);
    println!("averaged bound of the pair  = {:.10}", cmp.corollary_bound);
    assert!((cmp.cr_bound - cmp.corollary_bound).abs() <= 1e-5 * cmp.corollary_bound);

    // And the mean-square J-risk it bounds is the Bayes risk shifted into
    // the joint coordinates.
    println!("mean-square risk in J       = {:.10}", cmp.mean_square_j);
    assert!(cmp.mean_square_j >= cmp.cr_bound - 1e-8);
    Ok(())
}
