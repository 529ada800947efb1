//! The location family on parameter-times-sample space that turns the
//! prior-averaged bound into a pointwise one.
//!
//! Shifting both the prior and the model by a common scalar `alpha` gives a
//! one-parameter family of joint distributions with density
//! `(x, theta) -> q(theta + alpha) f_{theta + alpha}(x)`. Its L2 derivative
//! at `alpha = 0` is the Delta field, its Fisher information at zero is
//! `I_Q + int I_P dQ`, and the pointwise bound for the error statistic
//! `J = S(x) - psi(theta)` in this family is exactly the strengthened
//! averaged bound. Everything here verifies those three statements on grids.

use crate::bounds::residuals::{delta_function, delta_norm_identity_residual};
use crate::bounds::{bayes_risk, grid_weights, van_trees_corollary, RiskMode, TargetFunction};
use crate::error::{Error, Result};
use crate::model::{Model, Statistic};
use crate::numerics::{fit_rate, Grid1D, RateFit};
use crate::prior::Prior;

/// Each admissible shift must leave a probability measure within this.
pub const JOINT_NORM_TOL: f64 = 1e-8;

/// Agreement required between the tensor quadrature of `E[J]` and its
/// two-term closed form.
pub const CROSS_CHECK_TOL: f64 = 1e-8;

/// Agreement required between the pointwise bound in the location family
/// and the strengthened averaged bound, relative to the larger of the two.
pub const IDENTIFICATION_TOL: f64 = 1e-5;

/// Nodes of the uniform shift-direction grid over the padded support.
const THETA_NODES: usize = 4001;

/// Fallback margin when the parameter domain is unbounded on both sides of
/// the support, where any margin is safe.
const UNBOUNDED_MARGIN: f64 = 1.0;

/// One-parameter location family `alpha -> q(theta + alpha) f_{theta +
/// alpha}(x) d theta d mu(x)`, for a scalar-parameter base model.
#[derive(Clone)]
pub struct JointLocationModel {
    base: Model,
    prior: Prior,
    delta: f64,
    /// Uniform grid over the support padded by `delta` on both sides; the
    /// shifted prior never carries mass outside it.
    theta_grid: Grid1D,
    q_floor: f64,
}

impl std::fmt::Debug for JointLocationModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("JointLocationModel")
            .field("base", &self.base.name())
            .field("prior", &self.prior.name())
            .field("delta", &self.delta)
            .field("theta_grid", &self.theta_grid.describe())
            .finish()
    }
}

/// Largest margin that keeps every shifted support point inside the domain:
/// half the grid-computed distance from the support to the nearest finite
/// face, or a fixed default when no face is finite.
pub fn default_margin(model: &Model, prior: &Prior) -> Result<f64> {
    let (lo, hi) = prior.support();
    let dlo = model.domain().lo()[0];
    let dhi = model.domain().hi()[0];
    let mut gap = f64::INFINITY;
    if dlo.is_finite() {
        gap = gap.min(lo[0] - dlo);
    }
    if dhi.is_finite() {
        gap = gap.min(dhi - hi[0]);
    }
    if !gap.is_finite() {
        return Ok(UNBOUNDED_MARGIN);
    }
    if gap <= 0.0 {
        return Err(Error::misuse(format!(
            "support of prior '{}' touches the domain boundary; no positive margin exists",
            prior.name()
        )));
    }
    Ok(0.5 * gap)
}

/// Build the joint family, checking the margin on the prior grid and the
/// normalization at shifts `{-delta/2, 0, delta/2}`.
pub fn build_joint(model: &Model, prior: &Prior, delta: Option<f64>) -> Result<JointLocationModel> {
    crate::bounds::check_pairing(model, prior)?;
    if model.param_dim() != 1 {
        return Err(Error::misuse(
            "the joint location construction is implemented for scalar parameters only",
        ));
    }
    let delta = match delta {
        Some(d) if d > 0.0 && d.is_finite() => d,
        Some(d) => {
            return Err(Error::misuse(format!(
                "margin must be positive and finite, got {d}"
            )))
        }
        None => default_margin(model, prior)?,
    };

    // Margin condition: every node carrying prior mass must stay inside the
    // domain under every admissible shift.
    let q_floor = prior.support_floor()?;
    let dlo = model.domain().lo()[0];
    let dhi = model.domain().hi()[0];
    let mut offenders: Vec<f64> = Vec::new();
    prior.grid().for_each_node(|_, t, _| {
        if prior.density_at(t) > q_floor && (t[0] - delta < dlo || t[0] + delta > dhi) {
            offenders.push(t[0]);
        }
    });
    if !offenders.is_empty() {
        let shown: Vec<String> = offenders
            .iter()
            .take(5)
            .map(|t| format!("{t:.6}"))
            .collect();
        return Err(Error::misuse(format!(
            "margin {delta} pushes {} prior node(s) out of the parameter domain, starting at theta = [{}]",
            offenders.len(),
            shown.join(", ")
        )));
    }

    let (lo, hi) = prior.support();
    let theta_grid = Grid1D::uniform_trapezoid(lo[0] - delta, hi[0] + delta, THETA_NODES)?;
    let joint = JointLocationModel {
        base: model.clone(),
        prior: prior.clone(),
        delta,
        theta_grid,
        q_floor,
    };

    for alpha in [-0.5 * delta, 0.0, 0.5 * delta] {
        let mass = joint.normalization(alpha)?;
        if (mass - 1.0).abs() > JOINT_NORM_TOL {
            return Err(Error::ContractViolation(format!(
                "joint family of '{}' and '{}' has mass {mass:.12} at shift {alpha}; expected 1 within {JOINT_NORM_TOL:.0e}",
                model.name(),
                prior.name()
            )));
        }
    }
    Ok(joint)
}

impl JointLocationModel {
    pub fn base(&self) -> &Model {
        &self.base
    }

    pub fn prior(&self) -> &Prior {
        &self.prior
    }

    /// Open shift domain is `(-delta, delta)`.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn theta_grid(&self) -> &Grid1D {
        &self.theta_grid
    }

    fn check_alpha(&self, alpha: f64) -> Result<()> {
        if !(alpha.abs() < self.delta) {
            return Err(Error::misuse(format!(
                "shift {alpha} lies outside the open domain (-{0}, {0})",
                self.delta
            )));
        }
        Ok(())
    }

    /// Joint density `q(theta + alpha) f_{theta + alpha}(x)`.
    pub fn density(&self, alpha: f64, theta: f64, x: &[f64]) -> Result<f64> {
        self.check_alpha(alpha)?;
        let u = [theta + alpha];
        let q = self.prior.density_at(&u);
        if q <= self.q_floor {
            return Ok(0.0);
        }
        Ok(q * self.base.density_at(&u, x))
    }

    /// Total mass at shift `alpha` over the tensor grid.
    pub fn normalization(&self, alpha: f64) -> Result<f64> {
        self.check_alpha(alpha)?;
        let mut mass = 0.0;
        for (&t, &w) in self
            .theta_grid
            .nodes()
            .iter()
            .zip(self.theta_grid.weights())
        {
            let u = [t + alpha];
            let q = self.prior.density_at(&u);
            if q <= self.q_floor {
                continue;
            }
            mass += w * q * self.base.normalization(&u)?;
        }
        if !mass.is_finite() {
            return Err(Error::Numerical(format!(
                "joint mass at shift {alpha} is not finite"
            )));
        }
        Ok(mass)
    }

    /// Square root of the joint density tabulated over the sample grid at a
    /// fixed direction node, or None where the shifted prior has no mass.
    fn root_slice(&self, theta: f64, shift: f64) -> Result<Option<Vec<f64>>> {
        let u = [theta + shift];
        let q = self.prior.density_at(&u);
        if q <= self.q_floor {
            return Ok(None);
        }
        let sq = q.sqrt();
        let mut xi = self.base.root_density(&u)?;
        for v in xi.iter_mut() {
            *v *= sq;
        }
        Ok(Some(xi))
    }
}

/// Residuals `|| sqrt(dM_h) - sqrt(dM_0) - h Delta ||` over the tensor grid
/// for each step, fitted in log-log coordinates. The derivative claim is
/// certified when the slope clears `1 + DQM_SLOPE_MARGIN`, the same margin
/// the base-model check uses.
pub fn verify_delta_is_joint_derivative(
    joint: &JointLocationModel,
    steps: &[f64],
) -> Result<RateFit> {
    if steps.len() < 3 {
        return Err(Error::invalid(
            "need at least 3 shift steps to fit a convergence rate",
        ));
    }
    if let Some(&h) = steps.iter().find(|&&h| !(h > 0.0) || h >= joint.delta) {
        return Err(Error::misuse(format!(
            "step {h} is not inside the open shift domain (0, {})",
            joint.delta
        )));
    }

    let nodes = joint.theta_grid.nodes();
    let wt = joint.theta_grid.weights();
    let grid = joint.base.grid()?;
    let wx = grid_weights(grid);

    // Root and Delta at shift zero, cached per direction node; None marks
    // nodes outside the support where both vanish.
    let mut at_zero: Vec<Option<(Vec<f64>, Vec<f64>)>> = Vec::with_capacity(nodes.len());
    for &t in nodes {
        match joint.root_slice(t, 0.0)? {
            None => at_zero.push(None),
            Some(root0) => {
                let field = delta_function(&joint.base, &joint.prior, &[t])?;
                at_zero.push(Some((root0, field.components.into_iter().next().unwrap())));
            }
        }
    }

    let mut residuals = Vec::with_capacity(steps.len());
    for &h in steps {
        let mut sq_norm = 0.0;
        for (i, &t) in nodes.iter().enumerate() {
            let root_h = joint.root_slice(t, h)?;
            let zero = at_zero[i].as_ref();
            if root_h.is_none() && zero.is_none() {
                continue;
            }
            let mut cell = 0.0;
            for flat in 0..wx.len() {
                let rh = root_h.as_ref().map_or(0.0, |r| r[flat]);
                let (r0, d) = zero.map_or((0.0, 0.0), |(r, d)| (r[flat], d[flat]));
                let resid = rh - r0 - h * d;
                cell += wx[flat] * resid * resid;
            }
            sq_norm += wt[i] * cell;
        }
        if !sq_norm.is_finite() {
            return Err(Error::Numerical(format!(
                "derivative residual at step {h} is not finite"
            )));
        }
        residuals.push(sq_norm.max(0.0).sqrt());
    }
    fit_rate(steps, &residuals)
}

/// `E_{M_alpha}[S(x) - psi(theta)]` by tensor quadrature, cross-checked
/// against the two-term closed form
/// `int E_theta[S] dQ - int psi(theta - alpha) q(theta) d theta`.
/// Requires declared bounds on both inputs; see `gamma_j_core` for the
/// unchecked path used by internal comparisons.
pub fn gamma_j(
    joint: &JointLocationModel,
    alpha: f64,
    stat: &Statistic,
    psi: &TargetFunction,
) -> Result<f64> {
    if stat.bound().is_none() {
        return Err(Error::ContractViolation(format!(
            "statistic '{}' declares no bound; the shifted mean needs a bounded statistic",
            stat.name()
        )));
    }
    if psi.value_bound().is_none() {
        return Err(Error::ContractViolation(format!(
            "target '{}' declares no bound; the shifted mean needs a bounded target",
            psi.name()
        )));
    }
    stat.validate_bound_on(joint.base.grid()?)?;
    gamma_j_core(joint, alpha, stat, psi)
}

pub(crate) fn gamma_j_core(
    joint: &JointLocationModel,
    alpha: f64,
    stat: &Statistic,
    psi: &TargetFunction,
) -> Result<f64> {
    joint.check_alpha(alpha)?;
    if stat.out_dim() != 1 || psi.in_dim() != 1 || psi.out_dim() != 1 {
        return Err(Error::misuse(
            "the shifted mean is defined for scalar statistics and targets",
        ));
    }
    let svals = crate::bounds::stat_values_on(&joint.base, stat)?;
    let grid = joint.base.grid()?;
    let wx = grid_weights(grid);
    let mean_s = |u: &[f64]| -> Result<f64> {
        let f = joint.base.density_values(u)?;
        let mut m = 0.0;
        for (flat, &fx) in f.iter().enumerate() {
            m += wx[flat] * fx * svals[0][flat];
        }
        Ok(m)
    };

    let mut psi_out = [0.0];
    let mut tensor = 0.0;
    let mut term_s = 0.0;
    let mut term_psi = 0.0;
    for (&t, &w) in joint
        .theta_grid
        .nodes()
        .iter()
        .zip(joint.theta_grid.weights())
    {
        let shifted = [t + alpha];
        let q_shift = joint.prior.density_at(&shifted);
        if q_shift > joint.q_floor {
            psi.eval_into(&[t], &mut psi_out);
            tensor += w * q_shift * (mean_s(&shifted)? - psi_out[0]);
        }
        let q = joint.prior.density_at(&[t]);
        if q > joint.q_floor {
            term_s += w * q * mean_s(&[t])?;
            psi.eval_into(&[t - alpha], &mut psi_out);
            term_psi += w * q * psi_out[0];
        }
    }
    let closed = term_s - term_psi;
    if !tensor.is_finite() || !closed.is_finite() {
        return Err(Error::Numerical(format!(
            "shifted mean at {alpha} is not finite"
        )));
    }
    if (tensor - closed).abs() > CROSS_CHECK_TOL {
        return Err(Error::ContractViolation(format!(
            "tensor quadrature {tensor:.12e} and closed form {closed:.12e} of the shifted mean disagree beyond {CROSS_CHECK_TOL:.0e}"
        )));
    }
    Ok(tensor)
}

/// The averaged bound recomputed as a pointwise bound in the joint family.
#[derive(Debug, Clone, Copy)]
pub struct JointComparison {
    /// Fisher information of the joint family at shift zero, `4 ||Delta||^2`.
    pub fisher_joint: f64,
    /// `I_Q + int I_P dQ` by the averaged-information paths.
    pub fisher_split: f64,
    /// `E[J]` at shift zero: the averaged bias.
    pub gamma_zero: f64,
    /// `d/d alpha E_{M_alpha}[J]` at zero by central difference.
    pub gamma_slope: f64,
    /// `int psi' dQ`, the derivative the slope must reproduce.
    pub int_psi_prime_dq: f64,
    /// Pointwise bound on `E[J^2]`: `gamma_slope^2 / fisher_joint +
    /// gamma_zero^2`.
    pub cr_bound: f64,
    /// The strengthened averaged bound computed by its own route.
    pub corollary_bound: f64,
    /// `E[J^2]` at shift zero by quadrature.
    pub mean_square_j: f64,
}

/// Computes the pointwise bound for `J = S - psi` in the joint family and
/// checks it coincides with the strengthened averaged bound; disagreement
/// beyond `IDENTIFICATION_TOL` is a contract violation.
pub fn van_trees_as_cramer_rao(
    joint: &JointLocationModel,
    stat: &Statistic,
    psi: &TargetFunction,
) -> Result<JointComparison> {
    if stat.out_dim() != 1 || psi.in_dim() != 1 || psi.out_dim() != 1 {
        return Err(Error::misuse(
            "the identification is stated for scalar statistics and targets",
        ));
    }
    // Delta vanishes off the support, so its squared norm over the tensor
    // measure is the same integral the squared-norm identity evaluates on
    // the prior's own nodes, where the quadrature is sharp.
    let dn = delta_norm_identity_residual(&joint.base, &joint.prior)?;
    let fisher_joint = dn.lhs.get(0, 0);
    let fisher_split = dn.prior_information.get(0, 0) + dn.fisher_average.get(0, 0);
    if !(fisher_joint > 0.0) {
        return Err(Error::Numerical(format!(
            "joint Fisher information {fisher_joint} must be positive"
        )));
    }

    let gamma_zero = gamma_j_core(joint, 0.0, stat, psi)?;
    let h = joint.delta / 100.0;
    let gamma_slope =
        (gamma_j_core(joint, h, stat, psi)? - gamma_j_core(joint, -h, stat, psi)?) / (2.0 * h);

    let mut grad = [0.0];
    let int_psi_prime_dq = joint.prior.integrate_dq(1, |t, _q, out| {
        psi.gradient_into(t, &mut grad);
        out[0] = grad[0];
        Ok(())
    })?[0];

    let cr_bound = gamma_slope * gamma_slope / fisher_joint + gamma_zero * gamma_zero;
    let corollary = van_trees_corollary(&joint.base, &joint.prior, psi, stat)?;
    let corollary_bound = corollary.bound.as_scalar().expect("scalar bound");
    let scale = corollary_bound.abs().max(1.0);
    if (cr_bound - corollary_bound).abs() > IDENTIFICATION_TOL * scale {
        return Err(Error::ContractViolation(format!(
            "pointwise bound {cr_bound:.10e} and averaged bound {corollary_bound:.10e} disagree beyond {IDENTIFICATION_TOL:.0e}"
        )));
    }

    let mean_square_j =
        bayes_risk(&joint.base, &joint.prior, psi, stat, RiskMode::Quadrature)?.scalar();
    if mean_square_j < cr_bound - crate::bounds::DOMINANCE_SLACK * scale {
        return Err(Error::ContractViolation(format!(
            "mean squared error {mean_square_j:.10e} fell below its bound {cr_bound:.10e}"
        )));
    }

    Ok(JointComparison {
        fisher_joint,
        fisher_split,
        gamma_zero,
        gamma_slope,
        int_psi_prime_dq,
        cr_bound,
        corollary_bound,
        mean_square_j,
    })
}
