//! Lower bounds on estimation risk.
//!
//! The score-based bound at a fixed parameter, its prior-averaged
//! strengthenings in one and several dimensions, the Bayes risk they bound,
//! and numerical checks of the identities the proofs rest on. All averaged
//! quantities integrate against the prior with its support mask; double
//! integrals cache the statistic on the sample grid so the inner sweeps stay
//! linear in grid size.

pub mod report;
pub mod residuals;
pub mod target;

use nalgebra::DMatrix;

pub use report::{fmt_float, BoundReport, Quantity, BOUND_REPORT_FIELDS};
pub use residuals::{
    delta_function, delta_norm_identity_residual, ibp_zero_residual, key_equality_residual,
    DeltaField, DeltaNormCheck, KeyEqualityCheck, ScalarField,
};
pub use target::TargetFunction;

use crate::error::{Error, Result};
use crate::model::{Model, Statistic};
use crate::numerics::{mat_t_mat_mat, GridP, PsdReport, SymmetricMatrix};
use crate::prior::Prior;

/// Relative eigenvalue cutoff when inverting information matrices.
pub const PINV_CUTOFF: f64 = 1e-12;

/// Tolerance of the positive-semidefiniteness checks on block matrices.
pub const PSD_TOL: f64 = 1e-7;

/// Slack allowed in the variance-dominance contract, relative to the bound.
pub const DOMINANCE_SLACK: f64 = 1e-8;

/// Fewest Monte Carlo draws accepted; below this the estimate says nothing.
pub const MC_MIN_DRAWS: usize = 100;

pub(crate) fn check_pairing(model: &Model, prior: &Prior) -> Result<()> {
    let p = model.param_dim();
    if prior.dim() != p {
        return Err(Error::misuse(format!(
            "prior '{}' has dimension {}, model '{}' has {}",
            prior.name(),
            prior.dim(),
            model.name(),
            p
        )));
    }
    let (lo, hi) = prior.support();
    let dlo = model.domain().lo();
    let dhi = model.domain().hi();
    for i in 0..p {
        if lo[i] < dlo[i] || hi[i] > dhi[i] {
            return Err(Error::misuse(format!(
                "support of prior '{}' leaves the parameter domain along axis {i}",
                prior.name()
            )));
        }
    }
    Ok(())
}

/// Statistic tabulated on the sample grid, one vector per component.
pub(crate) fn stat_values_on(model: &Model, stat: &Statistic) -> Result<Vec<Vec<f64>>> {
    let grid = model.grid()?;
    let s = stat.out_dim();
    let mut vals = vec![vec![0.0; grid.len()]; s];
    let mut buf = vec![0.0; s];
    grid.for_each_node(|flat, x, _| {
        stat.eval_into(x, &mut buf);
        for (v, &b) in vals.iter_mut().zip(&buf) {
            v[flat] = b;
        }
    });
    Ok(vals)
}

pub(crate) fn grid_weights(grid: &GridP) -> Vec<f64> {
    let mut w = vec![0.0; grid.len()];
    grid.for_each_node(|flat, _, wi| w[flat] = wi);
    w
}

/// `int I_P(theta) dQ(theta)`.
pub fn fisher_average(model: &Model, prior: &Prior) -> Result<SymmetricMatrix> {
    check_pairing(model, prior)?;
    let p = model.param_dim();
    let flat = prior.integrate_dq(p * p, |t, _q, out| {
        let f = model.fisher_information(t)?;
        out.copy_from_slice(f.as_slice());
        Ok(())
    })?;
    SymmetricMatrix::from_fn(p, |i, j| flat[i * p + j])
}

/// `int (E_theta[S] - psi(theta)) dQ(theta)`, one entry per component.
pub fn bias_vector(
    model: &Model,
    prior: &Prior,
    psi: &TargetFunction,
    stat: &Statistic,
) -> Result<Vec<f64>> {
    check_pairing(model, prior)?;
    let s = stat.out_dim();
    let grid = model.grid()?;
    let wx = grid_weights(grid);
    let svals = stat_values_on(model, stat)?;
    let mut psi_val = vec![0.0; s];
    prior.integrate_dq(s, |t, _q, out| {
        let f = model.density_values(t)?;
        psi.eval_into(t, &mut psi_val);
        for j in 0..s {
            let mut mean = 0.0;
            for (flat, &fx) in f.iter().enumerate() {
                mean += wx[flat] * fx * svals[j][flat];
            }
            out[j] = mean - psi_val[j];
        }
        Ok(())
    })
}

fn grid_meta(model: &Model, prior: &Prior) -> Result<String> {
    Ok(format!(
        "x:{} theta:{}",
        model.grid()?.describe(),
        prior.grid().describe()
    ))
}

/// Score-based lower bound on the variance of a statistic at one parameter.
#[derive(Debug, Clone, Copy)]
pub struct CramerRaoReport {
    pub bound: f64,
    /// `d/dtheta E_theta[T]` through the score representation.
    pub gamma_prime: f64,
    pub fisher: f64,
    /// `Var_theta(T)` by quadrature; always at least `bound` up to slack.
    pub variance: f64,
}

/// `(gamma'_T)^2 / I_P` at `theta0`, for a one-parameter model and a scalar
/// statistic that is square-integrable on the grid. The variance-dominance
/// contract is verified before returning.
pub fn cramer_rao(model: &Model, theta0: &[f64], stat: &Statistic) -> Result<CramerRaoReport> {
    if model.param_dim() != 1 || stat.out_dim() != 1 {
        return Err(Error::misuse(
            "the pointwise bound is for one-parameter models and scalar statistics",
        ));
    }
    if !model.domain().contains(theta0) {
        return Err(Error::misuse(format!(
            "theta0 {theta0:?} lies outside the parameter domain"
        )));
    }
    let grid = model.grid()?;
    let fisher = model.fisher_information(theta0)?.get(0, 0);
    if !(fisher > 0.0) {
        return Err(Error::Numerical(format!(
            "Fisher information at {theta0:?} is {fisher}; the bound needs it positive"
        )));
    }
    let wx = grid_weights(grid);
    let xi = model.root_density(theta0)?;
    let scores = model.score_vector(theta0)?;
    let svals = stat_values_on(model, stat)?;
    let mut gamma_prime = 0.0;
    let mut mean = 0.0;
    let mut second = 0.0;
    for (flat, &x) in xi.iter().enumerate() {
        let w = wx[flat];
        let t = svals[0][flat];
        gamma_prime += w * 2.0 * scores.values(0)[flat] * x * t;
        mean += w * x * x * t;
        second += w * x * x * t * t;
    }
    if !second.is_finite() || !gamma_prime.is_finite() {
        return Err(Error::Numerical(format!(
            "statistic '{}' is not square-integrable on the grid",
            stat.name()
        )));
    }
    let variance = second - mean * mean;
    let bound = gamma_prime * gamma_prime / fisher;
    if variance < bound - DOMINANCE_SLACK * bound.abs().max(1.0) {
        return Err(Error::ContractViolation(format!(
            "variance {variance:.6e} fell below its lower bound {bound:.6e}"
        )));
    }
    Ok(CramerRaoReport {
        bound,
        gamma_prime,
        fisher,
        variance,
    })
}

/// Prior-averaged lower bound `(int psi' dQ)^2 / (I_Q + int I_P dQ)` for a
/// scalar parameter and target, with the residuals of the identities behind
/// it embedded as diagnostics.
pub fn van_trees_1d(model: &Model, prior: &Prior, psi: &TargetFunction) -> Result<BoundReport> {
    check_pairing(model, prior)?;
    if model.param_dim() != 1 || psi.in_dim() != 1 || psi.out_dim() != 1 {
        return Err(Error::misuse(
            "the one-dimensional bound needs p = s = 1; use the matrix form otherwise",
        ));
    }
    psi.validate_gradient_on(prior, 8)?;
    let i_q = prior.information()?.matrix.get(0, 0);
    let int_ip = fisher_average(model, prior)?.get(0, 0);
    let denom = i_q + int_ip;
    if !denom.is_finite() || !(denom > 0.0) {
        return Err(Error::Numerical(format!(
            "information denominator {denom} is unusable; the averaged Fisher information must be finite and positive"
        )));
    }
    let mut grad = [0.0];
    let g = prior.integrate_dq(1, |t, _q, out| {
        psi.gradient_into(t, &mut grad);
        out[0] = grad[0];
        Ok(())
    })?[0];
    let bound = g * g / denom;

    let zero = Statistic::constant(vec![0.0]);
    let key = residuals::key_equality_core(model, prior, psi, &zero)?;
    let dn = delta_norm_identity_residual(model, prior)?;
    Ok(BoundReport {
        bound: Quantity::Scalar(bound),
        bias_term: Quantity::Scalar(0.0),
        int_psi_prime_dq: Quantity::Scalar(g),
        i_q: Quantity::Scalar(i_q),
        int_ip_dq: Quantity::Scalar(int_ip),
        residual_key_eq: key.residual,
        residual_delta_norm: dn.residual,
        grid_meta: grid_meta(model, prior)?,
    })
}

/// How to average the squared estimation error over the prior.
#[derive(Debug, Clone, Copy)]
pub enum RiskMode {
    Quadrature,
    MonteCarlo { seed: u64, draws: usize },
}

/// Prior-averaged second moment of `S - psi`, as an `s x s` matrix.
#[derive(Debug, Clone)]
pub struct BayesRisk {
    pub matrix: SymmetricMatrix,
    /// Entrywise standard errors, Monte Carlo mode only.
    pub se_matrix: Option<SymmetricMatrix>,
    /// Standard error of the trace, Monte Carlo mode only.
    pub se_scalar: Option<f64>,
    pub draws: Option<usize>,
}

impl BayesRisk {
    /// The scalar risk: trace of the matrix, the value itself when s = 1.
    pub fn scalar(&self) -> f64 {
        self.matrix.trace()
    }
}

pub fn bayes_risk(
    model: &Model,
    prior: &Prior,
    psi: &TargetFunction,
    stat: &Statistic,
    mode: RiskMode,
) -> Result<BayesRisk> {
    check_pairing(model, prior)?;
    let s = stat.out_dim();
    if psi.in_dim() != model.param_dim() || psi.out_dim() != s {
        return Err(Error::misuse(format!(
            "target '{}' and statistic '{}' disagree on dimensions",
            psi.name(),
            stat.name()
        )));
    }
    match mode {
        RiskMode::Quadrature => {
            let grid = model.grid()?;
            let wx = grid_weights(grid);
            let svals = stat_values_on(model, stat)?;
            let mut psi_val = vec![0.0; s];
            let flat = prior.integrate_dq(s * s, |t, _q, out| {
                let f = model.density_values(t)?;
                psi.eval_into(t, &mut psi_val);
                for (flat_x, &fx) in f.iter().enumerate() {
                    let wf = wx[flat_x] * fx;
                    for j in 0..s {
                        let dj = svals[j][flat_x] - psi_val[j];
                        for k in j..s {
                            let dk = svals[k][flat_x] - psi_val[k];
                            out[j * s + k] += wf * dj * dk;
                        }
                    }
                }
                Ok(())
            })?;
            let matrix = SymmetricMatrix::from_fn(s, |i, j| {
                let (a, b) = if i <= j { (i, j) } else { (j, i) };
                flat[a * s + b]
            })?;
            Ok(BayesRisk {
                matrix,
                se_matrix: None,
                se_scalar: None,
                draws: None,
            })
        }
        RiskMode::MonteCarlo { seed, draws } => {
            if draws < MC_MIN_DRAWS {
                return Err(Error::misuse(format!(
                    "{draws} Monte Carlo draws is below the minimum of {MC_MIN_DRAWS}; the estimate would be uninformative"
                )));
            }
            if !prior.can_sample() {
                return Err(Error::Capability(format!(
                    "prior '{}' has no sampler",
                    prior.name()
                )));
            }
            if !model.can_sample() {
                return Err(Error::Capability(format!(
                    "model '{}' has no sampler",
                    model.name()
                )));
            }
            let mut rng = crate::numerics::rng_from_seed(seed);
            let mut theta = vec![0.0; prior.dim()];
            let mut x = vec![0.0; model.sample_dim()];
            let mut sv = vec![0.0; s];
            let mut psi_val = vec![0.0; s];
            let mut sum = vec![0.0; s * s];
            let mut sumsq = vec![0.0; s * s];
            let mut tr_sum = 0.0;
            let mut tr_sumsq = 0.0;
            for _ in 0..draws {
                prior.sample_into(&mut rng, &mut theta)?;
                model.sample_into(&theta, &mut rng, &mut x)?;
                stat.eval_into(&x, &mut sv);
                psi.eval_into(&theta, &mut psi_val);
                let mut tr = 0.0;
                for j in 0..s {
                    let dj = sv[j] - psi_val[j];
                    tr += dj * dj;
                    for k in 0..s {
                        let m = dj * (sv[k] - psi_val[k]);
                        sum[j * s + k] += m;
                        sumsq[j * s + k] += m * m;
                    }
                }
                tr_sum += tr;
                tr_sumsq += tr * tr;
            }
            let n = draws as f64;
            let matrix = SymmetricMatrix::from_fn(s, |i, j| sum[i * s + j] / n)?;
            let se_matrix = SymmetricMatrix::from_fn(s, |i, j| {
                let mean = sum[i * s + j] / n;
                let var = (sumsq[i * s + j] / n - mean * mean).max(0.0);
                (var / n).sqrt()
            })?;
            let tr_mean = tr_sum / n;
            let tr_var = (tr_sumsq / n - tr_mean * tr_mean).max(0.0);
            Ok(BayesRisk {
                matrix,
                se_matrix: Some(se_matrix),
                se_scalar: Some((tr_var / n).sqrt()),
                draws: Some(draws),
            })
        }
    }
}

/// The one-dimensional bound strengthened by the squared averaged bias of a
/// concrete estimator.
pub fn van_trees_corollary(
    model: &Model,
    prior: &Prior,
    psi: &TargetFunction,
    stat: &Statistic,
) -> Result<BoundReport> {
    if stat.out_dim() != 1 {
        return Err(Error::misuse(
            "the strengthened scalar bound needs a scalar statistic",
        ));
    }
    let base = van_trees_1d(model, prior, psi)?;
    let bias = bias_vector(model, prior, psi, stat)?[0];
    let key = residuals::key_equality_core(model, prior, psi, stat)?;
    let base_bound = base.bound.as_scalar().expect("scalar by construction");
    Ok(BoundReport {
        bound: Quantity::Scalar(bias * bias + base_bound),
        bias_term: Quantity::Scalar(bias),
        residual_key_eq: key.residual,
        ..base
    })
}

/// Matrix bound: block arrangement, Schur-complement bound, and the PSD
/// checks tying them together.
#[derive(Debug, Clone)]
pub struct VanTreesMatrix {
    /// `(s+p) x (s+p)` arrangement `[[risk, G'], [G, I_Q + int I_P dQ]]`.
    pub block: SymmetricMatrix,
    /// `G' (I_Q + int I_P dQ)^+ G`, the `s x s` lower bound on the risk.
    pub schur: SymmetricMatrix,
    pub block_psd: PsdReport,
    /// PSD report of `risk - schur`.
    pub gap_psd: PsdReport,
    pub risk: BayesRisk,
    /// Eigenvalues dropped when inverting the information block; nonzero
    /// means the pseudo-inverse path was taken on a singular block.
    pub pseudo_inverse_dropped: usize,
    /// Bound recomputed with ridge `1e-10 * trace` added to the information
    /// block, reported alongside whenever the pseudo-inverse dropped terms.
    pub schur_ridge: Option<SymmetricMatrix>,
    pub report: BoundReport,
}

pub fn van_trees_matrix(
    model: &Model,
    prior: &Prior,
    psi: &TargetFunction,
    stat: &Statistic,
) -> Result<VanTreesMatrix> {
    check_pairing(model, prior)?;
    let p = model.param_dim();
    let s = stat.out_dim();
    if psi.in_dim() != p || psi.out_dim() != s {
        return Err(Error::misuse(format!(
            "target '{}' maps {} -> {}, expected {} -> {}",
            psi.name(),
            psi.in_dim(),
            psi.out_dim(),
            p,
            s
        )));
    }
    psi.validate_gradient_on(prior, 8)?;
    let i_q = prior.information()?.matrix;
    let int_ip = fisher_average(model, prior)?;
    let info = i_q.add(&int_ip)?;
    let mut grad = vec![0.0; p * s];
    let g_flat = prior.integrate_dq(p * s, |t, _q, out| {
        psi.gradient_into(t, &mut grad);
        out.copy_from_slice(&grad);
        Ok(())
    })?;
    let risk = bayes_risk(model, prior, psi, stat, RiskMode::Quadrature)?;

    let block = SymmetricMatrix::from_fn(s + p, |i, j| {
        // i <= j here; mirror handled by the constructor.
        if j < s {
            risk.matrix.get(i, j)
        } else if i < s {
            g_flat[(j - s) * s + i]
        } else {
            info.get(i - s, j - s)
        }
    })?;
    let block_psd = block.psd_check(PSD_TOL);

    let pinv = info.pseudo_inverse(PINV_CUTOFF);
    let g = DMatrix::from_row_slice(p, s, &g_flat);
    let schur_dm = mat_t_mat_mat(&g, &pinv.matrix, &g);
    let schur = SymmetricMatrix::from_fn(s, |i, j| 0.5 * (schur_dm[(i, j)] + schur_dm[(j, i)]))?;
    let gap_psd = risk.matrix.sub(&schur)?.psd_check(PSD_TOL);

    let schur_ridge = if pinv.dropped > 0 {
        let ridge = 1e-10 * info.trace();
        let regular =
            SymmetricMatrix::from_fn(p, |i, j| info.get(i, j) + if i == j { ridge } else { 0.0 })?;
        let rinv = regular.pseudo_inverse(PINV_CUTOFF);
        let dm = mat_t_mat_mat(&g, &rinv.matrix, &g);
        Some(SymmetricMatrix::from_fn(s, |i, j| {
            0.5 * (dm[(i, j)] + dm[(j, i)])
        })?)
    } else {
        None
    };

    let key = residuals::key_equality_core(model, prior, psi, stat)?;
    let dn = delta_norm_identity_residual(model, prior)?;
    let bias = bias_vector(model, prior, psi, stat)?;
    let report = BoundReport {
        bound: Quantity::from_symmetric(&schur),
        bias_term: Quantity::Vector(bias),
        int_psi_prime_dq: Quantity::Matrix {
            rows: p,
            cols: s,
            data: g_flat,
        },
        i_q: Quantity::from_symmetric(&i_q),
        int_ip_dq: Quantity::from_symmetric(&int_ip),
        residual_key_eq: key.residual,
        residual_delta_norm: dn.residual,
        grid_meta: grid_meta(model, prior)?,
    };
    Ok(VanTreesMatrix {
        block,
        schur,
        block_psd,
        gap_psd,
        risk,
        pseudo_inverse_dropped: pinv.dropped,
        schur_ridge,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::families as mf;
    use crate::model::{Model, ParamDomain, Statistic};
    use crate::numerics::Grid1D;
    use crate::prior::families as pf;
    use crate::prior::posterior_mean;
    use approx::assert_abs_diff_eq;
    use std::sync::Arc;

    #[test]
    fn pointwise_bound_is_tight_for_the_identity_statistic() {
        let m = mf::gaussian_location(1.0).unwrap();
        let rep = cramer_rao(&m, &[0.3], &Statistic::coordinate(0)).unwrap();
        assert_abs_diff_eq!(rep.bound, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(rep.variance, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(rep.gamma_prime, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn pointwise_bound_for_the_half_space_indicator() {
        let m = mf::gaussian_location(1.0).unwrap();
        let rep = cramer_rao(&m, &[0.0], &Statistic::indicator_above(0, 0.0)).unwrap();
        let phi0sq = 1.0 / (2.0 * std::f64::consts::PI);
        assert_abs_diff_eq!(rep.bound, phi0sq, epsilon = 1e-5);
        // The indicator mean is off by half a cell of density, ~ h/2 * f(0);
        // the variance m - m^2 is flat at m = 1/2 so only ~ 6e-6 survives.
        assert_abs_diff_eq!(rep.variance, 0.25, epsilon = 1e-5);
        assert!(rep.variance >= rep.bound);
    }

    #[test]
    fn pointwise_bound_of_a_constant_is_zero() {
        let m = mf::gaussian_location(1.0).unwrap();
        let rep = cramer_rao(&m, &[0.0], &Statistic::constant(vec![2.0])).unwrap();
        assert_abs_diff_eq!(rep.bound, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn pointwise_bound_rejects_vanishing_information() {
        // Density that ignores theta entirely.
        let grid = Grid1D::uniform_trapezoid(-10.0, 10.0, 801).unwrap();
        let m = Model::new(
            "theta-blind",
            ParamDomain::real_line(1),
            crate::numerics::GridP::from_axis(grid),
            Arc::new(|_t: &[f64], x: &[f64]| {
                (-0.5 * x[0] * x[0]).exp() / (2.0 * std::f64::consts::PI).sqrt()
            }),
        )
        .with_log_grad(Arc::new(|_t, _x, out: &mut [f64]| out[0] = 0.0));
        let err = cramer_rao(&m, &[0.0], &Statistic::coordinate(0)).unwrap_err();
        assert!(matches!(err, Error::Numerical(_)));
    }

    #[test]
    fn averaged_bound_matches_the_conjugate_value() {
        let m = mf::gaussian_location(1.0).unwrap();
        let q = pf::gaussian(0.0, 1.0).unwrap();
        let rep = van_trees_1d(&m, &q, &TargetFunction::identity(1)).unwrap();
        assert_abs_diff_eq!(rep.bound.as_scalar().unwrap(), 0.5, epsilon = 1e-8);
        assert_abs_diff_eq!(rep.i_q.as_scalar().unwrap(), 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(rep.int_ip_dq.as_scalar().unwrap(), 1.0, epsilon = 1e-8);
        assert!(
            rep.residual_key_eq <= 1e-9,
            "key residual {}",
            rep.residual_key_eq
        );
        assert!(
            rep.residual_delta_norm <= 1e-7,
            "squared-norm residual {}",
            rep.residual_delta_norm
        );
    }

    #[test]
    fn averaged_bound_with_the_polynomial_bump_prior() {
        let m = mf::gaussian_location(1.0).unwrap();
        let q = pf::quartic_bump(0.0, 1.0).unwrap();
        let rep = van_trees_1d(&m, &q, &TargetFunction::identity(1)).unwrap();
        assert_abs_diff_eq!(rep.bound.as_scalar().unwrap(), 1.0 / 11.0, epsilon = 1e-8);
    }

    #[test]
    fn averaged_bound_of_a_constant_target_is_zero() {
        let m = mf::gaussian_location(1.0).unwrap();
        let q = pf::quartic_bump(0.0, 1.0).unwrap();
        let psi = TargetFunction::constant(1, vec![3.0]);
        let rep = van_trees_1d(&m, &q, &psi).unwrap();
        assert_abs_diff_eq!(rep.bound.as_scalar().unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn averaged_bound_scales_quadratically_with_the_target() {
        let m = mf::gaussian_location(1.0).unwrap();
        let q = pf::quartic_bump(0.0, 1.0).unwrap();
        let base = van_trees_1d(&m, &q, &TargetFunction::identity(1)).unwrap();
        let a = 3.0;
        let scaled =
            TargetFunction::from_fn("scaled-identity", 1, 1, move |t, out| out[0] = a * t[0])
                .with_gradient(move |_, g| g[0] = a);
        let rep = van_trees_1d(&m, &q, &scaled).unwrap();
        let expect = a * a * base.bound.as_scalar().unwrap();
        let got = rep.bound.as_scalar().unwrap();
        assert!((got - expect).abs() <= 1e-10 * expect);
    }

    #[test]
    fn risk_oracles_by_quadrature() {
        let m = mf::gaussian_location(1.0).unwrap();
        let psi = TargetFunction::identity(1);

        // Posterior mean under the conjugate prior: risk tau^2/(1+tau^2).
        let q = pf::gaussian(0.0, 1.0).unwrap();
        let s = posterior_mean(&m, &q).unwrap();
        let risk = bayes_risk(&m, &q, &psi, &s, RiskMode::Quadrature).unwrap();
        assert_abs_diff_eq!(risk.scalar(), 0.5, epsilon = 1e-8);

        // Zero estimator against a shifted prior: E[theta^2] = 1 + 1.
        let q1 = pf::gaussian(1.0, 1.0).unwrap();
        let zero = Statistic::constant(vec![0.0]);
        let risk = bayes_risk(&m, &q1, &psi, &zero, RiskMode::Quadrature).unwrap();
        assert_abs_diff_eq!(risk.scalar(), 2.0, epsilon = 1e-8);

        // The raw observation: E[(x - theta)^2] = 1 under every theta.
        let ident = Statistic::coordinate(0);
        let risk = bayes_risk(&m, &q1, &psi, &ident, RiskMode::Quadrature).unwrap();
        assert_abs_diff_eq!(risk.scalar(), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn monte_carlo_risk_agrees_and_is_deterministic() {
        let m = mf::gaussian_location(1.0).unwrap();
        let q = pf::gaussian(0.0, 1.0).unwrap();
        let psi = TargetFunction::identity(1);
        let s = posterior_mean(&m, &q).unwrap();
        let mode = RiskMode::MonteCarlo {
            seed: 11,
            draws: 20_000,
        };
        let a = bayes_risk(&m, &q, &psi, &s, mode).unwrap();
        let b = bayes_risk(&m, &q, &psi, &s, mode).unwrap();
        assert_eq!(a.matrix.as_slice(), b.matrix.as_slice());
        let se = a.se_scalar.unwrap();
        assert!(se > 0.0 && se < 0.02);
        assert!(
            (a.scalar() - 0.5).abs() <= 4.0 * se,
            "risk {} se {}",
            a.scalar(),
            se
        );
    }

    #[test]
    fn monte_carlo_refuses_tiny_sample_sizes() {
        let m = mf::gaussian_location(1.0).unwrap();
        let q = pf::gaussian(0.0, 1.0).unwrap();
        let psi = TargetFunction::identity(1);
        let s = Statistic::coordinate(0);
        let err = bayes_risk(
            &m,
            &q,
            &psi,
            &s,
            RiskMode::MonteCarlo { seed: 1, draws: 50 },
        )
        .unwrap_err();
        assert!(matches!(err, Error::Misuse(_)));
    }

    #[test]
    fn strengthened_bound_adds_the_squared_bias() {
        let m = mf::gaussian_location(1.0).unwrap();
        let q = pf::gaussian(1.0, 1.0).unwrap();
        let psi = TargetFunction::identity(1);
        let zero = Statistic::constant(vec![0.0]);
        let rep = van_trees_corollary(&m, &q, &psi, &zero).unwrap();
        assert_abs_diff_eq!(rep.bias_term.as_scalar().unwrap(), -1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(rep.bound.as_scalar().unwrap(), 1.5, epsilon = 1e-8);
        let risk = bayes_risk(&m, &q, &psi, &zero, RiskMode::Quadrature).unwrap();
        assert!(risk.scalar() >= rep.bound.as_scalar().unwrap() - 1e-6);
    }

    #[test]
    fn strengthened_bound_is_attained_by_the_posterior_mean() {
        let m = mf::gaussian_location(1.0).unwrap();
        let q = pf::gaussian(0.0, 1.0).unwrap();
        let psi = TargetFunction::identity(1);
        let s = posterior_mean(&m, &q).unwrap();
        let rep = van_trees_corollary(&m, &q, &psi, &s).unwrap();
        assert!(rep.bias_term.as_scalar().unwrap().abs() <= 1e-10);
        let bound = rep.bound.as_scalar().unwrap();
        let risk = bayes_risk(&m, &q, &psi, &s, RiskMode::Quadrature)
            .unwrap()
            .scalar();
        assert!(
            (risk - bound).abs() <= 1e-6 * risk,
            "risk {risk} bound {bound}"
        );
        assert!(risk >= bound - 1e-6);
    }

    #[test]
    fn matrix_bound_on_the_plane_gaussian() {
        let m = mf::gaussian_location_2d_fine(-1.2, 1.2, 201).unwrap();
        let q = pf::product_quartic_bump_with_nodes(&[0.0, 0.0], 1.0, 12).unwrap();
        let psi = TargetFunction::identity(2);
        let s = Statistic::identity(2);
        let vtm = van_trees_matrix(&m, &q, &psi, &s).unwrap();

        assert_eq!(vtm.block.dim(), 4);
        assert!(
            vtm.block_psd.passes,
            "block min eig {}",
            vtm.block_psd.min_eigenvalue
        );
        assert!(
            vtm.gap_psd.passes,
            "gap min eig {}",
            vtm.gap_psd.min_eigenvalue
        );
        assert_eq!(vtm.pseudo_inverse_dropped, 0);
        assert!(vtm.schur_ridge.is_none());
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { 1.0 / 11.0 } else { 0.0 };
                assert_abs_diff_eq!(vtm.schur.get(i, j), expect, epsilon = 1e-6);
                let risk_expect = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(vtm.risk.matrix.get(i, j), risk_expect, epsilon = 1e-8);
            }
        }
        assert!(vtm.report.residual_key_eq <= 1e-8);
        assert!(vtm.report.residual_delta_norm <= 1e-6);
    }

    #[test]
    fn one_by_one_matrix_bound_collapses_to_the_scalar_bound() {
        let m = mf::gaussian_location(1.0).unwrap();
        let q = pf::quartic_bump(0.0, 1.0).unwrap();
        let psi = TargetFunction::identity(1);
        let s = Statistic::coordinate(0);
        let vtm = van_trees_matrix(&m, &q, &psi, &s).unwrap();
        let v1 = van_trees_1d(&m, &q, &psi).unwrap();
        let gap = (vtm.schur.get(0, 0) - v1.bound.as_scalar().unwrap()).abs();
        assert!(gap <= 1e-12, "schur vs scalar gap {gap}");
    }

    #[test]
    fn matrix_bound_of_a_constant_target_is_the_zero_matrix() {
        let m = mf::gaussian_location_2d_fine(-1.2, 1.2, 201).unwrap();
        let q = pf::product_quartic_bump_with_nodes(&[0.0, 0.0], 1.0, 12).unwrap();
        let psi = TargetFunction::constant(2, vec![0.3, -0.2]);
        let s = Statistic::constant(vec![0.3, -0.2]);
        let vtm = van_trees_matrix(&m, &q, &psi, &s).unwrap();
        assert!(vtm.schur.max_abs() <= 1e-15);
        assert!(vtm.block_psd.passes);
    }

    #[test]
    fn matrix_report_reproduces_its_bound_from_intermediates() {
        let m = mf::gaussian_location_2d_fine(-1.2, 1.2, 201).unwrap();
        let q = pf::product_quartic_bump_with_nodes(&[0.0, 0.0], 1.0, 12).unwrap();
        let vtm = van_trees_matrix(
            &m,
            &q,
            &TargetFunction::identity(2),
            &Statistic::identity(2),
        )
        .unwrap();
        let back = vtm.report.recompute_bound().unwrap();
        for (a, b) in back.entries().iter().zip(vtm.schur.as_slice()) {
            assert!((a - b).abs() <= 1e-12);
        }

        let m1 = mf::gaussian_location(1.0).unwrap();
        let q1 = pf::gaussian(1.0, 1.0).unwrap();
        let rep = van_trees_corollary(
            &m1,
            &q1,
            &TargetFunction::identity(1),
            &Statistic::constant(vec![0.0]),
        )
        .unwrap();
        let back = rep.recompute_bound().unwrap().as_scalar().unwrap();
        assert!((back - rep.bound.as_scalar().unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn delta_field_vanishes_off_support_and_matches_the_symmetric_case() {
        let m = mf::gaussian_location(1.0).unwrap();
        let q = pf::quartic_bump(0.0, 1.0).unwrap();
        let field = delta_function(&m, &q, &[1.5]).unwrap();
        assert!(field.components[0].iter().all(|&v| v == 0.0));

        // Symmetric prior at its center: grad q = 0, so Delta = sqrt(q) xidot.
        let qg = pf::gaussian(0.0, 1.0).unwrap();
        let field = delta_function(&m, &qg, &[0.0]).unwrap();
        let sq = qg.density_at(&[0.0]).sqrt();
        let scores = m.score_vector(&[0.0]).unwrap();
        for (d, &sc) in field.components[0].iter().zip(scores.values(0)) {
            assert_abs_diff_eq!(*d, sq * sc, epsilon = 1e-12);
        }
    }

    #[test]
    fn information_equality_holds_for_bounded_pairs() {
        let m = mf::gaussian_location(1.0).unwrap();
        let q = pf::quartic_bump(0.0, 1.0).unwrap();
        let psi = TargetFunction::clamped_identity(1, 2.0);
        let s = Statistic::indicator_above(0, 0.0);
        let check = key_equality_residual(&m, &q, &psi, &s).unwrap();
        // With an analytic score the identity holds exactly for the
        // discretized model; only the prior quadrature contributes, and the
        // polynomial node rule integrates this pair to the float floor.
        assert!(check.residual <= 1e-9, "residual {}", check.residual);
    }

    #[test]
    fn information_equality_residual_shrinks_with_prior_resolution() {
        // A clamp inside the support puts kinks in the integrand, so a
        // uniform prior grid carries an O(h^2) defect the node-doubling
        // must shrink: this is the convergence check, not a tolerance one.
        let m = mf::gaussian_location(1.0).unwrap();
        let psi = TargetFunction::clamped_identity(1, 0.5);
        let s = Statistic::indicator_above(0, 0.0);
        let make_prior = |nodes: usize| {
            let grid = Grid1D::uniform_trapezoid(-1.0, 1.0, nodes).unwrap();
            Prior::new(
                "bump-uniform-grid",
                vec![-1.0],
                vec![1.0],
                crate::numerics::GridP::from_axis(grid),
                Arc::new(|t: &[f64]| {
                    let w: f64 = 1.0 - t[0] * t[0];
                    if w <= 0.0 {
                        0.0
                    } else {
                        0.9375 * w * w
                    }
                }),
            )
            .unwrap()
            .with_gradient(Arc::new(|t: &[f64], out: &mut [f64]| {
                let u = t[0];
                let w: f64 = 1.0 - u * u;
                out[0] = if w <= 0.0 { 0.0 } else { -3.75 * u * w };
            }))
        };
        let coarse = key_equality_residual(&m, &make_prior(401), &psi, &s).unwrap();
        let fine = key_equality_residual(&m, &make_prior(801), &psi, &s).unwrap();
        assert!(
            coarse.residual > 1e-9,
            "coarse residual {} already at the floor",
            coarse.residual
        );
        assert!(
            fine.residual < coarse.residual,
            "fine {} coarse {}",
            fine.residual,
            coarse.residual
        );
    }

    #[test]
    fn information_equality_rejects_undeclared_bounds() {
        let m = mf::gaussian_location(1.0).unwrap();
        let q = pf::quartic_bump(0.0, 1.0).unwrap();
        let unbounded_stat = Statistic::coordinate(0);
        let bounded_psi = TargetFunction::clamped_identity(1, 2.0);
        let err = key_equality_residual(&m, &q, &bounded_psi, &unbounded_stat).unwrap_err();
        assert!(matches!(err, Error::ContractViolation(_)));

        let bounded_stat = Statistic::indicator_above(0, 0.0);
        let unbounded_psi = TargetFunction::identity(1);
        let err = key_equality_residual(&m, &q, &unbounded_psi, &bounded_stat).unwrap_err();
        assert!(matches!(err, Error::ContractViolation(_)));
    }

    #[test]
    fn squared_norm_identity_on_the_conjugate_and_discrete_pairs() {
        let m = mf::gaussian_location(1.0).unwrap();
        let q = pf::gaussian(0.0, 1.0).unwrap();
        let check = delta_norm_identity_residual(&m, &q).unwrap();
        assert!(check.residual <= 1e-7, "residual {}", check.residual);
        assert!(check.cross_term <= 1e-6, "cross term {}", check.cross_term);
        let total = check.prior_information.get(0, 0) + check.fisher_average.get(0, 0);
        assert_abs_diff_eq!(total, 2.0, epsilon = 1e-8);
        assert_abs_diff_eq!(check.lhs.get(0, 0), 2.0, epsilon = 1e-7);

        let mb = mf::bernoulli().unwrap();
        let qb = pf::quartic_bump(0.5, 0.3)
            .unwrap()
            .with_ambient(ParamDomain::new_box(vec![0.0], vec![1.0]).unwrap())
            .unwrap();
        let check = delta_norm_identity_residual(&mb, &qb).unwrap();
        assert!(check.residual <= 1e-6, "residual {}", check.residual);
        assert!(check.cross_term <= 1e-6);
    }

    #[test]
    fn squared_norm_residual_shrinks_with_sample_resolution() {
        // Exponential-type model on a deliberately coarse uniform grid, so
        // the defect is quadrature-limited rather than at the float floor.
        let make = |nodes: usize| {
            let grid = Grid1D::uniform_trapezoid(0.0, 40.0, nodes).unwrap();
            Model::new(
                "exponential-uniform-grid",
                ParamDomain::new_box(vec![0.05], vec![25.0]).unwrap(),
                crate::numerics::GridP::from_axis(grid),
                Arc::new(|t: &[f64], x: &[f64]| t[0] * (-t[0] * x[0]).exp()),
            )
            .with_log_grad(Arc::new(|t: &[f64], x: &[f64], out: &mut [f64]| {
                out[0] = 1.0 / t[0] - x[0]
            }))
        };
        let q = pf::quartic_bump(2.0, 0.5)
            .unwrap()
            .with_ambient(ParamDomain::new_box(vec![0.05], vec![25.0]).unwrap())
            .unwrap();
        let coarse = delta_norm_identity_residual(&make(2001), &q).unwrap();
        let fine = delta_norm_identity_residual(&make(4001), &q).unwrap();
        assert!(
            coarse.residual > 1e-9,
            "coarse residual {} too small to compare",
            coarse.residual
        );
        assert!(
            fine.residual < coarse.residual,
            "fine {} coarse {}",
            fine.residual,
            coarse.residual
        );
    }

    #[test]
    fn boundary_residual_vanishes_for_smooth_fields() {
        let q = pf::product_quartic_bump_with_nodes(&[0.0, 0.0], 1.0, 12).unwrap();
        let psi = TargetFunction::clamped_identity(2, 1.0);
        for axis in 0..2 {
            let f = ScalarField::from_target(&psi, 0);
            let r = ibp_zero_residual(&f, &q, axis).unwrap();
            assert!(r <= 1e-7, "axis {axis} residual {r}");
        }

        // Constant field: the residual is the integral of an odd function.
        let one = ScalarField::constant(2, 1.0);
        let r = ibp_zero_residual(&one, &q, 0).unwrap();
        assert!(r <= 1e-14, "residual {r}");
    }

    #[test]
    fn boundary_residual_for_an_expectation_field() {
        let m = mf::gaussian_location_2d_fine(-1.2, 1.2, 201).unwrap();
        let q = pf::product_quartic_bump_with_nodes(&[0.0, 0.0], 1.0, 12).unwrap();
        let s = Statistic::indicator_above(0, 0.0);
        let f = ScalarField::from_gamma(&m, &s, 0).unwrap();
        let r = ibp_zero_residual(&f, &q, 0).unwrap();
        assert!(r <= 1e-5, "residual {r}");
    }

    #[test]
    fn mismatched_dimensions_are_misuse() {
        let m = mf::gaussian_location(1.0).unwrap();
        let q2 = pf::product_quartic_bump(2, 1.0).unwrap();
        assert!(matches!(
            van_trees_1d(&m, &q2, &TargetFunction::identity(1)),
            Err(Error::Misuse(_))
        ));

        // Prior support escaping the parameter domain is misuse too.
        let mb = mf::bernoulli().unwrap();
        let wide = pf::quartic_bump(0.5, 0.8).unwrap();
        assert!(matches!(
            van_trees_1d(&mb, &wide, &TargetFunction::identity(1)),
            Err(Error::Misuse(_))
        ));
    }
}
