//! Pointwise identities behind the bounds: the joint score field Delta, the
//! information equality driving the one-dimensional bound, the squared-norm
//! decomposition of Delta, and the integration-by-parts zero check.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{Model, Statistic};
use crate::numerics::SymmetricMatrix;
use crate::prior::Prior;

use super::target::TargetFunction;
use super::{check_pairing, stat_values_on};

/// `Delta(x, theta) = grad q / (2 sqrt q) * xi_theta + sqrt q * xidot_theta`
/// tabulated on the sample grid for one fixed `theta`.
#[derive(Debug, Clone)]
pub struct DeltaField {
    pub theta: Vec<f64>,
    /// `components[i]` holds `Delta_i` over the flat sample grid.
    pub components: Vec<Vec<f64>>,
}

/// The field, identically zero when `theta` carries no prior mass.
pub fn delta_function(model: &Model, prior: &Prior, theta: &[f64]) -> Result<DeltaField> {
    if prior.dim() != model.param_dim() || theta.len() != model.param_dim() {
        return Err(Error::misuse(
            "delta field needs matching model, prior, and theta dimensions",
        ));
    }
    let grid = model.grid()?;
    let p = model.param_dim();
    let q = prior.density_at(theta);
    if q <= prior.support_floor()? {
        return Ok(DeltaField {
            theta: theta.to_vec(),
            components: vec![vec![0.0; grid.len()]; p],
        });
    }
    let xi = model.root_density(theta)?;
    let scores = model.score_vector(theta)?;
    let mut grad_q = vec![0.0; p];
    prior.gradient_at(theta, &mut grad_q);
    let sq = q.sqrt();
    let components = (0..p)
        .map(|i| {
            let a = grad_q[i] / (2.0 * sq);
            xi.iter()
                .zip(scores.values(i))
                .map(|(&x, &d)| a * x + sq * d)
                .collect()
        })
        .collect();
    Ok(DeltaField {
        theta: theta.to_vec(),
        components,
    })
}

/// Both sides of the information equality and their gap.
#[derive(Debug, Clone)]
pub struct KeyEqualityCheck {
    /// `2 integral of Delta_i sqrt(q) xi (S_j - psi_j)`, row-major `p x s`.
    pub lhs: Vec<f64>,
    /// `integral of d_i psi_j dQ`, row-major `p x s`.
    pub rhs: Vec<f64>,
    pub residual: f64,
}

/// Verifies that the prior-smoothed score of the estimation error recovers
/// the averaged gradient of the target. Requires declared bounds on both the
/// statistic and the target; an undeclared bound is a contract violation
/// because the identity is only guaranteed for bounded inputs.
pub fn key_equality_residual(
    model: &Model,
    prior: &Prior,
    psi: &TargetFunction,
    stat: &Statistic,
) -> Result<KeyEqualityCheck> {
    if stat.bound().is_none() {
        return Err(Error::ContractViolation(format!(
            "statistic '{}' declares no bound; the information equality is checked for bounded statistics only",
            stat.name()
        )));
    }
    if psi.value_bound().is_none() || psi.grad_bound().is_none() {
        return Err(Error::ContractViolation(format!(
            "target '{}' declares no bounds; the information equality is checked for bounded targets only",
            psi.name()
        )));
    }
    stat.validate_bound_on(model.grid()?)?;
    key_equality_core(model, prior, psi, stat)
}

/// The computation itself, shared with the bound reports which embed the
/// residual as a diagnostic even for unbounded inputs.
pub(super) fn key_equality_core(
    model: &Model,
    prior: &Prior,
    psi: &TargetFunction,
    stat: &Statistic,
) -> Result<KeyEqualityCheck> {
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
    let grid = model.grid()?;
    let svals = stat_values_on(model, stat)?;
    let q_min = prior.support_floor()?;
    let pg = prior.grid();

    let mut lhs = vec![0.0; p * s];
    let mut theta = vec![0.0; p];
    let mut grad_q = vec![0.0; p];
    let mut psi_val = vec![0.0; s];
    // Outer integral in d(theta), not dQ: the q factors sit inside Delta.
    for flat in 0..pg.len() {
        pg.node(flat, &mut theta);
        let q = prior.density_at(&theta);
        if q <= q_min {
            continue;
        }
        let w = pg.weight(flat);
        prior.gradient_at(&theta, &mut grad_q);
        psi.eval_into(&theta, &mut psi_val);
        let xi = model.root_density(&theta)?;
        let scores = model.score_vector(&theta)?;
        for j in 0..s {
            // a_j = integral xi^2 (S_j - psi_j); b_{i,j} = integral
            // xidot_i xi (S_j - psi_j). Then 2 Delta sqrt(q) xi expands to
            // q' xi^2 + 2 q xidot xi.
            let mut a = 0.0;
            for (flat_x, (&x, &sv)) in xi.iter().zip(&svals[j]).enumerate() {
                a += grid.weight(flat_x) * x * x * (sv - psi_val[j]);
            }
            for i in 0..p {
                let mut b = 0.0;
                for (flat_x, (&x, &sv)) in xi.iter().zip(&svals[j]).enumerate() {
                    b += grid.weight(flat_x) * scores.values(i)[flat_x] * x * (sv - psi_val[j]);
                }
                lhs[i * s + j] += w * (grad_q[i] * a + 2.0 * q * b);
            }
        }
    }

    let mut grad = vec![0.0; p * s];
    let rhs = prior.integrate_dq(p * s, |t, _q, out| {
        psi.gradient_into(t, &mut grad);
        out.copy_from_slice(&grad);
        Ok(())
    })?;

    let residual = lhs
        .iter()
        .zip(&rhs)
        .fold(0.0f64, |m, (l, r)| m.max((l - r).abs()));
    if !residual.is_finite() {
        return Err(Error::Numerical(
            "information-equality residual is not finite".into(),
        ));
    }
    Ok(KeyEqualityCheck { lhs, rhs, residual })
}

/// Decomposition of `4 integral Delta Delta'` into prior information plus
/// averaged Fisher information, with the score cross-term that must vanish.
#[derive(Debug, Clone)]
pub struct DeltaNormCheck {
    pub lhs: SymmetricMatrix,
    pub prior_information: SymmetricMatrix,
    pub fisher_average: SymmetricMatrix,
    /// Entrywise `max |lhs - I_Q - int I_P dQ|`.
    pub residual: f64,
    /// `max_{i,j} |integral q_i' xi xidot_j|`; score orthogonality makes the
    /// exact value zero.
    pub cross_term: f64,
}

pub fn delta_norm_identity_residual(model: &Model, prior: &Prior) -> Result<DeltaNormCheck> {
    check_pairing(model, prior)?;
    let p = model.param_dim();
    let grid = model.grid()?;
    let q_min = prior.support_floor()?;
    let pg = prior.grid();

    let mut lhs_acc = vec![0.0; p * p];
    let mut fisher_acc = vec![0.0; p * p];
    let mut cross = 0.0f64;
    let mut theta = vec![0.0; p];
    let mut grad_q = vec![0.0; p];
    for flat in 0..pg.len() {
        pg.node(flat, &mut theta);
        let q = prior.density_at(&theta);
        if q <= q_min {
            continue;
        }
        let w = pg.weight(flat);
        prior.gradient_at(&theta, &mut grad_q);
        let xi = model.root_density(&theta)?;
        let scores = model.score_vector(&theta)?;
        let sq = q.sqrt();
        for i in 0..p {
            let ai = grad_q[i] / (2.0 * sq);
            let di = scores.values(i);
            let mut oi = 0.0;
            for (flat_x, &x) in xi.iter().enumerate() {
                oi += grid.weight(flat_x) * x * di[flat_x];
            }
            cross = cross.max((grad_q[i] * oi).abs());
            for j in i..p {
                let aj = grad_q[j] / (2.0 * sq);
                let dj = scores.values(j);
                let mut dot = 0.0;
                let mut fisher = 0.0;
                for (flat_x, &x) in xi.iter().enumerate() {
                    let wi = grid.weight(flat_x);
                    let deli = ai * x + sq * di[flat_x];
                    let delj = aj * x + sq * dj[flat_x];
                    dot += wi * deli * delj;
                    fisher += wi * di[flat_x] * dj[flat_x];
                }
                lhs_acc[i * p + j] += w * 4.0 * dot;
                fisher_acc[i * p + j] += w * q * 4.0 * fisher;
            }
        }
    }

    let lhs = SymmetricMatrix::from_fn(p, |i, j| lhs_acc[i * p + j])?;
    let fisher_average = SymmetricMatrix::from_fn(p, |i, j| fisher_acc[i * p + j])?;
    let prior_information = prior.information()?.matrix;
    let residual = (0..p)
        .flat_map(|i| (0..p).map(move |j| (i, j)))
        .fold(0.0f64, |m, (i, j)| {
            let gap = lhs.get(i, j) - prior_information.get(i, j) - fisher_average.get(i, j);
            m.max(gap.abs())
        });
    if !residual.is_finite() || !cross.is_finite() {
        return Err(Error::Numerical(
            "squared-norm identity residual is not finite".into(),
        ));
    }
    Ok(DeltaNormCheck {
        lhs,
        prior_information,
        fisher_average,
        residual,
        cross_term: cross,
    })
}

type FieldEvalFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type FieldGradFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// Scalar function on the parameter space with partial derivatives, the `f`
/// side of the integration-by-parts check.
#[derive(Clone)]
pub struct ScalarField {
    name: String,
    dim: usize,
    eval: FieldEvalFn,
    partials: Option<FieldGradFn>,
}

impl std::fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalarField")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .finish()
    }
}

/// Step used by the central-difference partials of a `ScalarField`.
pub const FIELD_FD_STEP: f64 = 1e-4;

impl ScalarField {
    pub fn from_fn(
        name: impl Into<String>,
        dim: usize,
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ScalarField {
            name: name.into(),
            dim,
            eval: Arc::new(eval),
            partials: None,
        }
    }

    pub fn with_partials(
        mut self,
        partials: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        self.partials = Some(Arc::new(partials));
        self
    }

    pub fn constant(dim: usize, value: f64) -> Self {
        ScalarField::from_fn(format!("constant[{value}]"), dim, move |_| value)
            .with_partials(|_, out| out.fill(0.0))
    }

    /// Component `j` of a target, inheriting its analytic gradient if any.
    pub fn from_target(psi: &TargetFunction, j: usize) -> Self {
        let s = psi.out_dim();
        let p = psi.in_dim();
        let eval_psi = psi.clone();
        let grad_psi = psi.clone();
        let field = ScalarField::from_fn(format!("{}[{j}]", psi.name()), p, move |t| {
            let mut out = vec![0.0; s];
            eval_psi.eval_into(t, &mut out);
            out[j]
        });
        if !psi.has_analytic_gradient() {
            return field;
        }
        field.with_partials(move |t, out| {
            let mut g = vec![0.0; p * s];
            grad_psi.gradient_into(t, &mut g);
            for i in 0..p {
                out[i] = g[i * s + j];
            }
        })
    }

    /// `theta -> E_theta[S_j]` by quadrature.
    ///
    /// Partials are left to the central-difference fallback on purpose: the
    /// score-identity derivative is a different quadrature estimator of the
    /// same quantity, and the mismatch between the two would dominate the
    /// boundary residual on coarse sample grids.
    pub fn from_gamma(model: &Model, stat: &Statistic, j: usize) -> Result<Self> {
        model.grid()?;
        if j >= stat.out_dim() {
            return Err(Error::misuse(format!(
                "statistic '{}' has {} components, no index {j}",
                stat.name(),
                stat.out_dim()
            )));
        }
        let m = model.clone();
        let s = stat.clone();
        Ok(ScalarField::from_fn(
            format!("mean[{}[{j}]]", stat.name()),
            model.param_dim(),
            move |t| match m.expectation(t, &s) {
                Ok(v) => v[j],
                Err(_) => f64::NAN,
            },
        ))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, theta: &[f64]) -> f64 {
        (self.eval)(theta)
    }

    /// Partial derivative in direction `i`, analytic when declared.
    pub fn partial(&self, theta: &[f64], i: usize) -> f64 {
        if let Some(g) = &self.partials {
            let mut out = vec![0.0; self.dim];
            g(theta, &mut out);
            return out[i];
        }
        let h = FIELD_FD_STEP * theta[i].abs().max(1.0);
        let mut probe = theta.to_vec();
        probe[i] = theta[i] + h;
        let up = (self.eval)(&probe);
        probe[i] = theta[i] - h;
        let dn = (self.eval)(&probe);
        (up - dn) / (2.0 * h)
    }
}

/// `| integral over {q > 0} of d_i f * q + f * d_i q |`.
///
/// For a prior density vanishing at its boundary the integrand is the exact
/// derivative of `f * q` along axis `i`, so the integral collapses to zero;
/// the returned magnitude measures how well the discretization preserves
/// that collapse.
pub fn ibp_zero_residual(field: &ScalarField, prior: &Prior, axis: usize) -> Result<f64> {
    let p = prior.dim();
    if field.dim() != p {
        return Err(Error::misuse(format!(
            "field '{}' has dimension {}, prior has {}",
            field.name(),
            field.dim(),
            p
        )));
    }
    if axis >= p {
        return Err(Error::misuse(format!(
            "axis {axis} out of range for dimension {p}"
        )));
    }
    let q_min = prior.support_floor()?;
    let grid = prior.grid();
    let mut acc = 0.0;
    let mut theta = vec![0.0; p];
    let mut grad_q = vec![0.0; p];
    for flat in 0..grid.len() {
        grid.node(flat, &mut theta);
        let q = prior.density_at(&theta);
        if q <= q_min {
            continue;
        }
        prior.gradient_at(&theta, &mut grad_q);
        let f = field.eval(&theta);
        let df = field.partial(&theta, axis);
        acc += grid.weight(flat) * (df * q + f * grad_q[axis]);
    }
    if !acc.is_finite() {
        return Err(Error::Numerical(format!(
            "integration-by-parts residual for field '{}' is not finite",
            field.name()
        )));
    }
    Ok(acc.abs())
}
