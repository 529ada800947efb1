//! Dominated statistical models evaluated on quadrature grids.
//!
//! A [`Model`] is a family of densities `f_theta` over a fixed sample grid,
//! together with an optional analytic score `grad log f` and an optional
//! sampler. All differential structure used downstream lives in the square
//! roots `xi_theta = sqrt(f_theta)`: the central object is the L2 partial
//! derivative `xi_dot`, estimated by central differences or, when the score
//! is available, computed as `xi_dot = (1/2) d(log f) * xi`. Smoothness of
//! `theta -> f_theta(x)` at fixed `x` is never assumed; what is certified is
//! the quadratic-mean expansion
//!
//! ```text
//! || xi_{theta+h} - xi_theta - h * xi_dot ||_mu = o(h),
//! ```
//!
//! checked empirically by [`Model::dqm_certify`] through a log-log rate fit.

pub mod families;
pub mod tabulated;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics::{fit_rate, GridP, RateFit, Rng, SymmetricMatrix};

/// Open box of admissible parameters; entries may be infinite.
#[derive(Debug, Clone)]
pub struct ParamDomain {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl ParamDomain {
    pub fn new_box(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::invalid("domain box needs matching nonempty bounds"));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(Error::invalid("domain box needs lo < hi on every axis"));
        }
        Ok(ParamDomain { lo, hi })
    }

    pub fn real_line(dim: usize) -> Self {
        ParamDomain {
            lo: vec![f64::NEG_INFINITY; dim],
            hi: vec![f64::INFINITY; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim()
            && theta
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(t, (a, b))| a < t && t < b)
    }

    /// Distance from `theta` to the nearest boundary along axis `i`
    /// (infinite when both ends are open to infinity).
    pub fn boundary_gap(&self, theta: &[f64], i: usize) -> f64 {
        (theta[i] - self.lo[i]).min(self.hi[i] - theta[i])
    }

    /// Finite boundary faces as (axis, value, is_upper).
    pub fn finite_faces(&self) -> Vec<(usize, f64, bool)> {
        let mut faces = Vec::new();
        for i in 0..self.dim() {
            if self.lo[i].is_finite() {
                faces.push((i, self.lo[i], false));
            }
            if self.hi[i].is_finite() {
                faces.push((i, self.hi[i], true));
            }
        }
        faces
    }
}

pub type DensityFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
pub type LogGradFn = Arc<dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync>;
pub type SamplerFn = Arc<dyn Fn(&[f64], &mut Rng, &mut [f64]) + Send + Sync>;

/// Where a derivative came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Analytic,
    FiniteDifference,
}

/// Relative step for central differences in theta.
pub const FD_STEP_REL: f64 = 1e-4;

/// Default step ladder for quadratic-mean certification.
pub fn default_dqm_steps() -> Vec<f64> {
    crate::numerics::geometric_steps(0.1, 0.5, 5)
}

/// Slope margin above 1 required to certify a remainder as o(h).
pub const DQM_SLOPE_MARGIN: f64 = 0.3;

#[derive(Debug, Clone)]
pub struct L2Partial {
    /// `xi_dot` values on the sample grid.
    pub values: Vec<f64>,
    pub provenance: Provenance,
    /// Step actually used by the finite difference (0 for analytic).
    pub step: f64,
    /// L2 distance between analytic and finite-difference versions, when
    /// both are available.
    pub fd_gap_l2: Option<f64>,
    /// Nodes where the density vanished on exactly one side of the central
    /// difference; these sit where the support moves with theta.
    pub one_sided_support_nodes: usize,
}

#[derive(Debug, Clone)]
pub struct ScoreVectors {
    /// One xi_dot per canonical parameter direction.
    pub components: Vec<L2Partial>,
}

impl ScoreVectors {
    pub fn values(&self, i: usize) -> &[f64] {
        &self.components[i].values
    }

    pub fn max_fd_gap(&self) -> f64 {
        self.components
            .iter()
            .filter_map(|c| c.fd_gap_l2)
            .fold(0.0f64, f64::max)
    }
}

/// Outcome of the quadratic-mean differentiability check at a point.
#[derive(Debug, Clone)]
pub struct DqmReport {
    pub theta: Vec<f64>,
    /// One rate fit per canonical direction.
    pub fits: Vec<RateFit>,
    pub min_slope: f64,
    /// True when every directional slope exceeds `1 + DQM_SLOPE_MARGIN`.
    pub certified: bool,
}

/// Statistic `S : X -> R^s`, optionally with a declared uniform bound.
#[derive(Clone)]
pub struct Statistic {
    name: String,
    out_dim: usize,
    bound: Option<f64>,
    eval: Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>,
}

impl std::fmt::Debug for Statistic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Statistic")
            .field("name", &self.name)
            .field("out_dim", &self.out_dim)
            .field("bound", &self.bound)
            .finish()
    }
}

impl Statistic {
    pub fn from_fn(
        name: impl Into<String>,
        out_dim: usize,
        eval: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        Statistic {
            name: name.into(),
            out_dim,
            bound: None,
            eval: Arc::new(eval),
        }
    }

    pub fn with_bound(mut self, bound: f64) -> Self {
        self.bound = Some(bound);
        self
    }

    /// Scalar statistic `x -> x_i`. Unbounded.
    pub fn coordinate(i: usize) -> Self {
        Statistic::from_fn(format!("coordinate[{i}]"), 1, move |x, out| out[0] = x[i])
    }

    /// Identity map on a `d`-dimensional sample space. Unbounded.
    pub fn identity(d: usize) -> Self {
        Statistic::from_fn("identity", d, move |x, out| out.copy_from_slice(x))
    }

    /// Indicator of the half space `x_axis > level`; bounded by 1.
    pub fn indicator_above(axis: usize, level: f64) -> Self {
        Statistic::from_fn(format!("indicator[x{axis}>{level}]"), 1, move |x, out| {
            out[0] = if x[axis] > level { 1.0 } else { 0.0 }
        })
        .with_bound(1.0)
    }

    pub fn constant(values: Vec<f64>) -> Self {
        let bound = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let dim = values.len();
        Statistic::from_fn("constant", dim, move |_, out| out.copy_from_slice(&values))
            .with_bound(bound)
    }

    /// Coordinatewise clamp of the identity to `[-level, level]`; bounded.
    pub fn clamped_identity(d: usize, level: f64) -> Self {
        Statistic::from_fn(format!("clamped-identity[{level}]"), d, move |x, out| {
            for (o, &v) in out.iter_mut().zip(x) {
                *o = v.clamp(-level, level);
            }
        })
        .with_bound(level)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn bound(&self) -> Option<f64> {
        self.bound
    }

    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.out_dim);
        (self.eval)(x, out);
    }

    pub fn eval_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.out_dim];
        self.eval_into(x, &mut out);
        out
    }

    /// Verify the declared bound on every node of a grid.
    pub fn validate_bound_on(&self, grid: &GridP) -> Result<()> {
        let Some(b) = self.bound else {
            return Ok(());
        };
        let mut out = vec![0.0; self.out_dim];
        let mut worst = 0.0f64;
        grid.for_each_node(|_, x, _| {
            (self.eval)(x, &mut out);
            for &v in &out {
                worst = worst.max(v.abs());
            }
        });
        if worst > b * (1.0 + 1e-12) {
            return Err(Error::misuse(format!(
                "statistic '{}' declares bound {b} but reaches {worst} on the grid",
                self.name
            )));
        }
        Ok(())
    }
}

/// A dominated family over a fixed sample grid.
#[derive(Clone)]
pub struct Model {
    name: String,
    domain: ParamDomain,
    sample_dim: usize,
    sample_grid: GridP,
    density: DensityFn,
    log_grad: Option<LogGradFn>,
    sampler: Option<SamplerFn>,
    /// False for product models too large to integrate over.
    quadrature_capable: bool,
}

impl std::fmt::Debug for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Model")
            .field("name", &self.name)
            .field("param_dim", &self.domain.dim())
            .field("sample_dim", &self.sample_dim)
            .field("grid", &self.sample_grid.describe())
            .finish()
    }
}

impl Model {
    pub fn new(
        name: impl Into<String>,
        domain: ParamDomain,
        sample_grid: GridP,
        density: DensityFn,
    ) -> Self {
        let sample_dim = sample_grid.dim();
        Model {
            name: name.into(),
            domain,
            sample_dim,
            sample_grid,
            density,
            log_grad: None,
            sampler: None,
            quadrature_capable: true,
        }
    }

    pub fn with_log_grad(mut self, g: LogGradFn) -> Self {
        self.log_grad = Some(g);
        self
    }

    pub fn with_sampler(mut self, s: SamplerFn) -> Self {
        self.sampler = Some(s);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> &ParamDomain {
        &self.domain
    }

    pub fn param_dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn sample_dim(&self) -> usize {
        self.sample_dim
    }

    pub fn has_analytic_score(&self) -> bool {
        self.log_grad.is_some()
    }

    pub fn can_sample(&self) -> bool {
        self.sampler.is_some()
    }

    pub fn grid(&self) -> Result<&GridP> {
        if !self.quadrature_capable {
            return Err(Error::Capability(format!(
                "model '{}' supports sampling only; its sample space is too large for quadrature",
                self.name
            )));
        }
        Ok(&self.sample_grid)
    }

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if !self.domain.contains(theta) {
            return Err(Error::misuse(format!(
                "theta {:?} outside the domain of '{}'",
                theta, self.name
            )));
        }
        Ok(())
    }

    pub fn density_at(&self, theta: &[f64], x: &[f64]) -> f64 {
        (self.density)(theta, x)
    }

    /// Density values over the whole grid, flat order.
    pub fn density_values(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.check_theta(theta)?;
        let grid = self.grid()?;
        let mut vals = vec![0.0; grid.len()];
        grid.for_each_node(|flat, x, _| vals[flat] = (self.density)(theta, x));
        Ok(vals)
    }

    /// `sqrt(f_theta)` on the grid. Negative density anywhere is an error.
    pub fn root_density(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let vals = self.density_values(theta)?;
        if vals.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(Error::Numerical(format!(
                "density of '{}' is negative or non-finite on the grid",
                self.name
            )));
        }
        Ok(vals.into_iter().map(f64::sqrt).collect())
    }

    /// `mu[f_theta]`; should be 1 up to grid truncation.
    pub fn normalization(&self, theta: &[f64]) -> Result<f64> {
        let vals = self.density_values(theta)?;
        self.grid()?.integrate(&vals)
    }

    /// Expectation `E_theta[S]` by quadrature.
    pub fn expectation(&self, theta: &[f64], stat: &Statistic) -> Result<Vec<f64>> {
        let f = self.density_values(theta)?;
        let grid = self.grid()?;
        let mut acc = vec![0.0; stat.out_dim()];
        let mut out = vec![0.0; stat.out_dim()];
        grid.for_each_node(|flat, x, w| {
            stat.eval_into(x, &mut out);
            let wf = w * f[flat];
            for (a, &v) in acc.iter_mut().zip(&out) {
                *a += wf * v;
            }
        });
        Ok(acc)
    }

    /// L2 partial derivative of `theta -> xi_theta` along axis `i`.
    ///
    /// With an analytic score this returns `(1/2) d_i(log f) * xi` (zero off
    /// the support) and records the L2 gap to the central difference as a
    /// cross-check; otherwise the central difference itself, with the step
    /// shrunk to keep both probes inside the domain.
    pub fn l2_partial_derivative(&self, theta: &[f64], i: usize, step: f64) -> Result<L2Partial> {
        self.check_theta(theta)?;
        if i >= self.param_dim() {
            return Err(Error::invalid(format!("direction {i} out of range")));
        }
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::invalid("finite-difference step must be positive"));
        }
        let grid = self.grid()?;

        let gap = self.domain.boundary_gap(theta, i);
        let h = if gap.is_finite() {
            step.min(0.4 * gap)
        } else {
            step
        };

        let mut th_plus = theta.to_vec();
        let mut th_minus = theta.to_vec();
        th_plus[i] += h;
        th_minus[i] -= h;
        let xi_plus = self.root_density(&th_plus)?;
        let xi_minus = self.root_density(&th_minus)?;
        let one_sided = xi_plus
            .iter()
            .zip(&xi_minus)
            .filter(|(a, b)| (**a == 0.0) != (**b == 0.0))
            .count();
        let fd: Vec<f64> = xi_plus
            .iter()
            .zip(&xi_minus)
            .map(|(p, m)| (p - m) / (2.0 * h))
            .collect();

        match &self.log_grad {
            Some(log_grad) => {
                let mut analytic = vec![0.0; grid.len()];
                let mut g = vec![0.0; self.param_dim()];
                grid.for_each_node(|flat, x, _| {
                    let f = (self.density)(theta, x);
                    if f > 0.0 {
                        log_grad(theta, x, &mut g);
                        analytic[flat] = 0.5 * g[i] * f.sqrt();
                    }
                });
                let gap_sq = grid.integrate_fn_indexed(|flat| {
                    let d = analytic[flat] - fd[flat];
                    d * d
                });
                Ok(L2Partial {
                    values: analytic,
                    provenance: Provenance::Analytic,
                    step: 0.0,
                    fd_gap_l2: Some(gap_sq.max(0.0).sqrt()),
                    one_sided_support_nodes: one_sided,
                })
            }
            None => Ok(L2Partial {
                values: fd,
                provenance: Provenance::FiniteDifference,
                step: h,
                fd_gap_l2: None,
                one_sided_support_nodes: one_sided,
            }),
        }
    }

    /// All canonical L2 partials at `theta` with the default step rule.
    pub fn score_vector(&self, theta: &[f64]) -> Result<ScoreVectors> {
        let mut components = Vec::with_capacity(self.param_dim());
        for i in 0..self.param_dim() {
            let step = FD_STEP_REL * theta[i].abs().max(1.0);
            components.push(self.l2_partial_derivative(theta, i, step)?);
        }
        Ok(ScoreVectors { components })
    }

    /// Certify the quadratic-mean expansion at `theta` along every canonical
    /// direction over the given step ladder (strictly decreasing).
    pub fn dqm_certify(&self, theta: &[f64], steps: &[f64]) -> Result<DqmReport> {
        self.check_theta(theta)?;
        let grid = self.grid()?;
        if steps.len() < 3 {
            return Err(Error::invalid("dqm_certify needs at least 3 steps"));
        }
        let max_step = steps[0];
        for i in 0..self.param_dim() {
            let gap = self.domain.boundary_gap(theta, i);
            if gap.is_finite() && max_step >= gap {
                return Err(Error::misuse(format!(
                    "dqm step {max_step} reaches the domain boundary along axis {i}"
                )));
            }
        }

        let xi0 = self.root_density(theta)?;
        let scores = self.score_vector(theta)?;
        let mut fits = Vec::with_capacity(self.param_dim());
        for i in 0..self.param_dim() {
            let dot = &scores.components[i].values;
            let mut residuals = Vec::with_capacity(steps.len());
            for &h in steps {
                let mut r2 = 0.0f64;
                for sign in [1.0, -1.0] {
                    let mut th = theta.to_vec();
                    th[i] += sign * h;
                    let xi = self.root_density(&th)?;
                    let mut acc = 0.0;
                    grid.for_each_node(|flat, _, w| {
                        let d = xi[flat] - xi0[flat] - sign * h * dot[flat];
                        acc += w * d * d;
                    });
                    r2 = r2.max(acc);
                }
                residuals.push(r2.max(0.0).sqrt());
            }
            fits.push(fit_rate(steps, &residuals)?);
        }
        let min_slope = fits.iter().map(|f| f.slope).fold(f64::INFINITY, f64::min);
        Ok(DqmReport {
            theta: theta.to_vec(),
            min_slope,
            certified: min_slope > 1.0 + DQM_SLOPE_MARGIN,
            fits,
        })
    }

    /// Fisher information `4 mu[xi_dot xi_dot']` at `theta`.
    pub fn fisher_information(&self, theta: &[f64]) -> Result<SymmetricMatrix> {
        let scores = self.score_vector(theta)?;
        self.fisher_from_scores(&scores)
    }

    pub fn fisher_from_scores(&self, scores: &ScoreVectors) -> Result<SymmetricMatrix> {
        let grid = self.grid()?;
        let p = self.param_dim();
        SymmetricMatrix::from_fn(p, |i, j| {
            let a = &scores.components[i].values;
            let b = &scores.components[j].values;
            4.0 * grid.integrate_fn_indexed(|flat| a[flat] * b[flat])
        })
    }

    /// `mu[xi_dot_i xi]` per direction; identically zero in exact arithmetic.
    pub fn score_orthogonality(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let grid = self.grid()?;
        let xi = self.root_density(theta)?;
        let scores = self.score_vector(theta)?;
        Ok((0..self.param_dim())
            .map(|i| {
                let dot = &scores.components[i].values;
                grid.integrate_fn_indexed(|flat| dot[flat] * xi[flat])
            })
            .collect())
    }

    /// Derivative of `theta -> E_theta[T]` along axis `i`, computed as
    /// `2 mu[xi_dot_i xi T]` componentwise. Requires a bounded statistic.
    pub fn gamma_derivative(&self, theta: &[f64], stat: &Statistic, i: usize) -> Result<Vec<f64>> {
        if stat.bound().is_none() {
            return Err(Error::misuse(format!(
                "gamma_derivative needs a statistic with a declared bound; '{}' has none",
                stat.name()
            )));
        }
        let grid = self.grid()?;
        let xi = self.root_density(theta)?;
        let step = FD_STEP_REL * theta[i].abs().max(1.0);
        let dot = self.l2_partial_derivative(theta, i, step)?;
        let mut acc = vec![0.0; stat.out_dim()];
        let mut out = vec![0.0; stat.out_dim()];
        grid.for_each_node(|flat, x, w| {
            stat.eval_into(x, &mut out);
            let base = 2.0 * w * dot.values[flat] * xi[flat];
            for (a, &v) in acc.iter_mut().zip(&out) {
                *a += base * v;
            }
        });
        Ok(acc)
    }

    /// Draw one observation into `out` (length `sample_dim`).
    pub fn sample_into(&self, theta: &[f64], rng: &mut Rng, out: &mut [f64]) -> Result<()> {
        self.check_theta(theta)?;
        let sampler = self
            .sampler
            .as_ref()
            .ok_or_else(|| Error::Capability(format!("model '{}' has no sampler", self.name)))?;
        if out.len() != self.sample_dim {
            return Err(Error::invalid("sample buffer has wrong length"));
        }
        sampler(theta, rng, out);
        Ok(())
    }

    /// Maximum tensor-grid size a product model may use for quadrature.
    pub const MAX_PRODUCT_NODES: usize = 1 << 20;

    /// The n-fold product experiment: same parameter, `n` independent draws.
    ///
    /// The density multiplies across blocks and the score adds. Quadrature
    /// stays available while the product grid is at most
    /// `MAX_PRODUCT_NODES`; beyond that the product model only samples.
    pub fn product_model(&self, n: usize) -> Result<Model> {
        if n == 0 {
            return Err(Error::invalid("product model needs n >= 1"));
        }
        if !self.quadrature_capable {
            return Err(Error::Capability(
                "cannot build a product of a sampling-only model".into(),
            ));
        }
        let d = self.sample_dim;
        let base_nodes = self.sample_grid.len();
        let tractable = base_nodes
            .checked_pow(n as u32)
            .is_some_and(|total| total <= Self::MAX_PRODUCT_NODES);

        let density_base = self.density.clone();
        let density: DensityFn = Arc::new(move |theta: &[f64], x: &[f64]| {
            let mut f = 1.0;
            for k in 0..n {
                f *= density_base(theta, &x[k * d..(k + 1) * d]);
            }
            f
        });

        let log_grad = self.log_grad.as_ref().map(|g| {
            let g = g.clone();
            let p = self.param_dim();
            let f: LogGradFn = Arc::new(move |theta: &[f64], x: &[f64], out: &mut [f64]| {
                out.iter_mut().for_each(|v| *v = 0.0);
                let mut buf = vec![0.0; p];
                for k in 0..n {
                    g(theta, &x[k * d..(k + 1) * d], &mut buf);
                    for (o, &b) in out.iter_mut().zip(&buf) {
                        *o += b;
                    }
                }
            });
            f
        });

        let sampler = self.sampler.as_ref().map(|s| {
            let s = s.clone();
            let f: SamplerFn = Arc::new(move |theta: &[f64], rng: &mut Rng, out: &mut [f64]| {
                for k in 0..n {
                    s(theta, rng, &mut out[k * d..(k + 1) * d]);
                }
            });
            f
        });

        let (grid, capable) = if tractable {
            let mut axes = Vec::with_capacity(n * self.sample_grid.dim());
            for _ in 0..n {
                axes.extend(self.sample_grid.axes().iter().cloned());
            }
            (GridP::new(axes)?, true)
        } else {
            // Placeholder; quadrature is refused through the flag.
            (self.sample_grid.clone(), false)
        };

        let mut m = Model {
            name: format!("{}^({n})", self.name),
            domain: self.domain.clone(),
            sample_dim: n * d,
            sample_grid: grid,
            density,
            log_grad,
            sampler,
            quadrature_capable: capable,
        };
        if !capable {
            m.sample_grid = self.sample_grid.clone();
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::families;
    use approx::assert_abs_diff_eq;

    #[test]
    fn domain_box_basics() {
        let d = ParamDomain::new_box(vec![0.0], vec![1.0]).unwrap();
        assert!(d.contains(&[0.5]));
        assert!(!d.contains(&[0.0])); // open
        assert!(!d.contains(&[1.5]));
        assert_eq!(d.finite_faces().len(), 2);
        let r = ParamDomain::real_line(2);
        assert!(r.contains(&[1e9, -1e9]));
        assert!(r.finite_faces().is_empty());
    }

    #[test]
    fn gaussian_root_density_and_partial() {
        // xi_dot at theta = 0 is (x/2) * sqrt(phi(x)).
        let m = families::gaussian_location(1.0).unwrap();
        let xi = m.root_density(&[0.0]).unwrap();
        let grid = m.grid().unwrap();
        let mass = grid.integrate_fn_indexed(|k| xi[k] * xi[k]);
        assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-10);

        let part = m.l2_partial_derivative(&[0.0], 0, 1e-4).unwrap();
        assert_eq!(part.provenance, Provenance::Analytic);
        let norm = (2.0 * std::f64::consts::PI).sqrt();
        let mut worst = 0.0f64;
        grid.axes()[0]
            .nodes()
            .iter()
            .enumerate()
            .for_each(|(k, &x)| {
                let expected = 0.5 * x * ((-0.5 * x * x).exp() / norm).sqrt();
                worst = worst.max((part.values[k] - expected).abs());
            });
        assert!(worst <= 1e-12, "analytic xi_dot off by {worst}");
        // The finite-difference cross-check should agree to O(step^2).
        assert!(part.fd_gap_l2.unwrap() <= 1e-7);
    }

    #[test]
    fn bernoulli_partial_matches_closed_form() {
        // At theta = 1/2 the root density has derivative -1/(2 sqrt(1/2)) at
        // the atom x = 0 and +1/(2 sqrt(1/2)) at x = 1.
        let m = families::bernoulli().unwrap();
        let part = m.l2_partial_derivative(&[0.5], 0, 1e-4).unwrap();
        let expected = 0.5 / (0.5f64).sqrt();
        assert_abs_diff_eq!(part.values[0], -expected, epsilon = 1e-10);
        assert_abs_diff_eq!(part.values[1], expected, epsilon = 1e-10);
    }

    #[test]
    fn score_orthogonality_is_tiny_for_builtins() {
        for (m, theta) in [
            (families::gaussian_location(1.0).unwrap(), vec![0.3]),
            (families::bernoulli().unwrap(), vec![0.4]),
            (families::exponential().unwrap(), vec![2.0]),
        ] {
            let orth = m.score_orthogonality(&theta).unwrap();
            for v in orth {
                assert!(v.abs() <= 1e-9, "{}: orthogonality residual {v}", m.name());
            }
        }
    }

    #[test]
    fn fisher_oracles() {
        let m = families::gaussian_location(1.0).unwrap();
        let i = m.fisher_information(&[0.0]).unwrap();
        assert_abs_diff_eq!(i.get(0, 0), 1.0, epsilon = 1e-8);

        let m = families::bernoulli().unwrap();
        let i = m.fisher_information(&[0.5]).unwrap();
        assert_abs_diff_eq!(i.get(0, 0), 4.0, epsilon = 1e-8);

        let m = families::exponential().unwrap();
        let i = m.fisher_information(&[2.0]).unwrap();
        assert_abs_diff_eq!(i.get(0, 0), 0.25, epsilon = 1e-6);

        let m = families::gaussian_location_2d().unwrap();
        let i = m.fisher_information(&[0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(i.get(0, 0), 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(i.get(1, 1), 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(i.get(0, 1), 0.0, epsilon = 1e-8);
    }

    #[test]
    fn mean_log_sigma_fisher_is_diag_one_two() {
        let m = families::gaussian_mean_log_sigma().unwrap();
        let i = m.fisher_information(&[0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(i.get(0, 0), 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(i.get(1, 1), 2.0, epsilon = 1e-8);
        assert_abs_diff_eq!(i.get(0, 1), 0.0, epsilon = 1e-8);
    }

    #[test]
    fn triangular_fisher_is_twelve() {
        let m = families::triangular_location().unwrap();
        let i = m.fisher_information(&[0.3]).unwrap();
        // Exact value 12; the support edges cost one grid cell each.
        assert_abs_diff_eq!(i.get(0, 0), 12.0, epsilon = 0.02);
    }

    #[test]
    fn dqm_slopes_match_smoothness() {
        let steps = default_dqm_steps();
        let smooth = families::gaussian_location(1.0).unwrap();
        let rep = smooth.dqm_certify(&[0.3], &steps).unwrap();
        assert!(rep.certified);
        assert!(rep.min_slope >= 1.9, "gaussian slope {}", rep.min_slope);

        let kinked = families::triangular_location().unwrap();
        let rep = kinked.dqm_certify(&[0.3], &steps).unwrap();
        assert!(rep.certified, "triangular slope {}", rep.min_slope);
        assert!(
            rep.min_slope > 1.3 && rep.min_slope < 1.9,
            "triangular slope {} should sit strictly between 1.3 and 1.9",
            rep.min_slope
        );
    }

    #[test]
    fn gamma_derivative_oracles() {
        // Constant statistic: derivative 0.
        let m = families::gaussian_location(1.0).unwrap();
        let c = Statistic::constant(vec![1.0]);
        let d = m.gamma_derivative(&[0.0], &c, 0).unwrap();
        assert_abs_diff_eq!(d[0], 0.0, epsilon = 1e-12);

        // Half-space indicator: d/dtheta P(x > 0) at 0 is phi(0). The jump in
        // the integrand costs the trapezoid rule h^2/12 per unit of slope, so
        // the step must stay near 3e-3 for a 1e-6 check.
        let m = families::gaussian_location_fine(1.0, -2.0, 2.0, 8001).unwrap();
        let s = Statistic::indicator_above(0, 0.0);
        let d = m.gamma_derivative(&[0.0], &s, 0).unwrap();
        let phi0 = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        assert_abs_diff_eq!(d[0], phi0, epsilon = 1e-6);

        // Bernoulli with T(x) = x: gamma(theta) = theta, slope 1.
        let m = families::bernoulli().unwrap();
        let s = Statistic::coordinate(0).with_bound(1.0);
        let d = m.gamma_derivative(&[0.3], &s, 0).unwrap();
        assert_abs_diff_eq!(d[0], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn gamma_derivative_rejects_unbounded_statistics() {
        let m = families::gaussian_location(1.0).unwrap();
        let s = Statistic::coordinate(0);
        assert!(m.gamma_derivative(&[0.0], &s, 0).is_err());
    }

    #[test]
    fn gamma_derivative_agrees_with_difference_quotient() {
        // Both sides of the identity d/dtheta E_theta[T] = 2 mu[xi_dot xi T].
        let m = families::gaussian_location_fine(1.0, -2.0, 2.0, 4001).unwrap();
        let s = Statistic::indicator_above(0, 0.5);
        let lhs = m.gamma_derivative(&[0.2], &s, 0).unwrap()[0];
        let h = 1e-4;
        let up = m.expectation(&[0.2 + h], &s).unwrap()[0];
        let dn = m.expectation(&[0.2 - h], &s).unwrap()[0];
        assert_abs_diff_eq!(lhs, (up - dn) / (2.0 * h), epsilon = 1e-5);
    }

    #[test]
    fn product_model_scales_fisher() {
        let base = families::bernoulli().unwrap();
        for (n, theta) in [(2usize, 0.5f64), (3, 0.3)] {
            let prod = base.product_model(n).unwrap();
            let i1 = base.fisher_information(&[theta]).unwrap().get(0, 0);
            let i_n = prod.fisher_information(&[theta]).unwrap().get(0, 0);
            let rel = (i_n - n as f64 * i1).abs() / (n as f64 * i1);
            assert!(rel <= 1e-8, "n = {n}: relative error {rel}");
        }
    }

    #[test]
    fn intractable_product_refuses_quadrature_but_samples() {
        let base = families::gaussian_location(1.0).unwrap();
        let prod = base.product_model(5).unwrap(); // 2001^5 nodes
        assert!(matches!(
            prod.fisher_information(&[0.0]),
            Err(Error::Capability(_))
        ));
        let mut rng = crate::numerics::rng_from_seed(1);
        let mut buf = vec![0.0; prod.sample_dim()];
        prod.sample_into(&[0.0], &mut rng, &mut buf).unwrap();
        assert_eq!(buf.len(), 5);
    }

    #[test]
    fn theta_outside_domain_is_misuse() {
        let m = families::bernoulli().unwrap();
        assert!(matches!(m.root_density(&[1.5]), Err(Error::Misuse(_))));
        assert!(matches!(m.root_density(&[0.0]), Err(Error::Misuse(_))));
    }

    #[test]
    fn triangular_one_sided_support_nodes_are_flagged() {
        let m = families::triangular_location_fd().unwrap();
        let part = m.l2_partial_derivative(&[0.0], 0, 1e-3).unwrap();
        assert_eq!(part.provenance, Provenance::FiniteDifference);
        assert!(part.one_sided_support_nodes > 0);
    }
}
