//! Estimation targets `psi : Theta -> R^s` with gradients.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::prior::Prior;

/// Relative step for the central-difference gradient fallback.
pub const GRAD_FD_STEP: f64 = 1e-5;

/// Largest analytic-vs-difference gradient gap tolerated at probe points.
pub const GRAD_CHECK_TOL: f64 = 1e-5;

type EvalFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
type GradFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// Differentiable target of estimation.
///
/// The gradient callback fills a row-major `p x s` buffer with
/// `out[i * s + j] = d psi_j / d theta_i`. Without one, gradients fall back to
/// central differences of the evaluator.
#[derive(Clone)]
pub struct TargetFunction {
    name: String,
    in_dim: usize,
    out_dim: usize,
    eval: EvalFn,
    grad: Option<GradFn>,
    value_bound: Option<f64>,
    grad_bound: Option<f64>,
}

impl std::fmt::Debug for TargetFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TargetFunction")
            .field("name", &self.name)
            .field("in_dim", &self.in_dim)
            .field("out_dim", &self.out_dim)
            .field("value_bound", &self.value_bound)
            .field("grad_bound", &self.grad_bound)
            .finish()
    }
}

impl TargetFunction {
    pub fn from_fn(
        name: impl Into<String>,
        in_dim: usize,
        out_dim: usize,
        eval: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        TargetFunction {
            name: name.into(),
            in_dim,
            out_dim,
            eval: Arc::new(eval),
            grad: None,
            value_bound: None,
            grad_bound: None,
        }
    }

    pub fn with_gradient(
        mut self,
        grad: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        self.grad = Some(Arc::new(grad));
        self
    }

    /// Declares sup norms of `psi` and its gradient over the prior support.
    pub fn with_bounds(mut self, value_bound: f64, grad_bound: f64) -> Self {
        self.value_bound = Some(value_bound);
        self.grad_bound = Some(grad_bound);
        self
    }

    /// `psi(theta) = theta`. Unbounded; gradient the identity matrix.
    pub fn identity(p: usize) -> Self {
        TargetFunction::from_fn("identity", p, p, |t, out| out.copy_from_slice(t)).with_gradient(
            move |_, g| {
                g.fill(0.0);
                for i in 0..p {
                    g[i * p + i] = 1.0;
                }
            },
        )
    }

    /// Coordinatewise clamp of the identity to `[-level, level]`.
    pub fn clamped_identity(p: usize, level: f64) -> Self {
        TargetFunction::from_fn(format!("clamped-identity[{level}]"), p, p, move |t, out| {
            for (o, &v) in out.iter_mut().zip(t) {
                *o = v.clamp(-level, level);
            }
        })
        .with_gradient(move |t, g| {
            g.fill(0.0);
            for i in 0..p {
                g[i * p + i] = if t[i].abs() < level { 1.0 } else { 0.0 };
            }
        })
        .with_bounds(level, 1.0)
    }

    pub fn constant(in_dim: usize, values: Vec<f64>) -> Self {
        let bound = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let s = values.len();
        TargetFunction::from_fn("constant", in_dim, s, move |_, out| {
            out.copy_from_slice(&values)
        })
        .with_gradient(|_, g| g.fill(0.0))
        .with_bounds(bound, 0.0)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn value_bound(&self) -> Option<f64> {
        self.value_bound
    }

    pub fn grad_bound(&self) -> Option<f64> {
        self.grad_bound
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.grad.is_some()
    }

    pub fn eval_into(&self, theta: &[f64], out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.out_dim);
        (self.eval)(theta, out);
    }

    pub fn eval_vec(&self, theta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.out_dim];
        self.eval_into(theta, &mut out);
        out
    }

    /// Gradient as a row-major `p x s` buffer, analytic when declared,
    /// otherwise by central differences.
    pub fn gradient_into(&self, theta: &[f64], out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.in_dim * self.out_dim);
        if let Some(g) = &self.grad {
            g(theta, out);
            return;
        }
        let s = self.out_dim;
        let mut up = vec![0.0; s];
        let mut dn = vec![0.0; s];
        let mut probe = theta.to_vec();
        for i in 0..self.in_dim {
            let h = GRAD_FD_STEP * theta[i].abs().max(1.0);
            probe[i] = theta[i] + h;
            self.eval_into(&probe, &mut up);
            probe[i] = theta[i] - h;
            self.eval_into(&probe, &mut dn);
            probe[i] = theta[i];
            for j in 0..s {
                out[i * s + j] = (up[j] - dn[j]) / (2.0 * h);
            }
        }
    }

    pub fn gradient_vec(&self, theta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.in_dim * self.out_dim];
        self.gradient_into(theta, &mut out);
        out
    }

    /// Cross-checks the analytic gradient against central differences at up
    /// to `max_probes` support nodes of the prior grid; errors when the gap
    /// exceeds `GRAD_CHECK_TOL`. A difference-based gradient passes trivially.
    pub fn validate_gradient_on(&self, prior: &Prior, max_probes: usize) -> Result<f64> {
        if self.grad.is_none() || max_probes == 0 {
            return Ok(0.0);
        }
        if prior.dim() != self.in_dim {
            return Err(Error::misuse(format!(
                "target '{}' takes {} arguments but the prior has dimension {}",
                self.name,
                self.in_dim,
                prior.dim()
            )));
        }
        let q_min = prior.support_floor()?;
        let grid = prior.grid();
        let stride = (grid.len() / max_probes).max(1);
        let mut theta = vec![0.0; self.in_dim];
        let mut analytic = vec![0.0; self.in_dim * self.out_dim];
        let mut worst = 0.0f64;
        let saved = self.grad.clone();
        let mut fd_view = self.clone();
        fd_view.grad = None;
        for flat in (0..grid.len()).step_by(stride) {
            grid.node(flat, &mut theta);
            if prior.density_at(&theta) <= q_min {
                continue;
            }
            (saved.as_ref().unwrap())(&theta, &mut analytic);
            let fd = fd_view.gradient_vec(&theta);
            for (a, b) in analytic.iter().zip(&fd) {
                worst = worst.max((a - b).abs());
            }
        }
        if worst > GRAD_CHECK_TOL {
            return Err(Error::InvalidInput(format!(
                "gradient of target '{}' disagrees with central differences by {worst:.3e}",
                self.name
            )));
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prior::families;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identity_gradient_is_identity_matrix() {
        let psi = TargetFunction::identity(2);
        let g = psi.gradient_vec(&[0.3, -0.7]);
        assert_eq!(g, vec![1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn difference_fallback_matches_analytic_square() {
        let psi = TargetFunction::from_fn("square", 1, 1, |t, out| out[0] = t[0] * t[0]);
        let g = psi.gradient_vec(&[1.5]);
        assert_abs_diff_eq!(g[0], 3.0, epsilon = 1e-9);
    }

    #[test]
    fn clamp_gradient_vanishes_outside_the_level() {
        let psi = TargetFunction::clamped_identity(1, 1.0);
        assert_eq!(psi.gradient_vec(&[0.5]), vec![1.0]);
        assert_eq!(psi.gradient_vec(&[1.5]), vec![0.0]);
        assert_eq!(psi.eval_vec(&[1.5]), vec![1.0]);
    }

    #[test]
    fn validate_gradient_accepts_correct_and_rejects_wrong() {
        let prior = families::quartic_bump(0.0, 1.0).unwrap();
        let ok = TargetFunction::identity(1);
        assert!(ok.validate_gradient_on(&prior, 8).unwrap() <= 1e-9);

        let bad = TargetFunction::from_fn("bad", 1, 1, |t, out| out[0] = t[0])
            .with_gradient(|_, g| g[0] = 2.0);
        assert!(bad.validate_gradient_on(&prior, 8).is_err());
    }
}
