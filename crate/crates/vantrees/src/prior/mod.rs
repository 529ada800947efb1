//! Priors over the parameter space.
//!
//! A [`Prior`] is a Lebesgue density `q` on an open ambient box, carried on
//! a quadrature grid that covers its support. The quantity the bounds care
//! about is the prior information
//!
//! ```text
//! I_Q = integral of  (grad q)(grad q)' / q  over { q > 0 },
//! ```
//!
//! which must be finite, and the behavior of `q` near any finite boundary
//! of the ambient box, where it must vanish. Numerically the `{ q > 0 }`
//! restriction becomes a mask `q > q_min` with `q_min` a tiny multiple of
//! the peak, and the mass excluded by the mask is reported so callers can
//! see it is negligible.

pub mod families;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{Model, ParamDomain, Statistic};
use crate::numerics::{GridP, Rng, SymmetricMatrix};

pub type PriorDensityFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type PriorGradFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
pub type PriorSamplerFn = Arc<dyn Fn(&mut Rng, &mut [f64]) + Send + Sync>;

/// Relative cutoff defining the numerical support `{ q > q_min }`.
pub const SUPPORT_MASK_REL: f64 = 1e-12;

#[derive(Clone)]
pub struct Prior {
    name: String,
    /// Ambient open box the prior lives in (the model's parameter domain,
    /// once the two are paired).
    ambient: ParamDomain,
    /// Closed hull of the support, one interval per axis.
    support_lo: Vec<f64>,
    support_hi: Vec<f64>,
    grid: GridP,
    density: PriorDensityFn,
    gradient: Option<PriorGradFn>,
    sampler: Option<PriorSamplerFn>,
}

impl std::fmt::Debug for Prior {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Prior")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("grid", &self.grid.describe())
            .finish()
    }
}

impl Prior {
    pub fn new(
        name: impl Into<String>,
        support_lo: Vec<f64>,
        support_hi: Vec<f64>,
        grid: GridP,
        density: PriorDensityFn,
    ) -> Result<Self> {
        if support_lo.len() != grid.dim() || support_hi.len() != grid.dim() {
            return Err(Error::invalid("prior support and grid dimensions differ"));
        }
        Ok(Prior {
            name: name.into(),
            ambient: ParamDomain::real_line(grid.dim()),
            support_lo,
            support_hi,
            grid,
            density,
            gradient: None,
            sampler: None,
        })
    }

    pub fn with_gradient(mut self, g: PriorGradFn) -> Self {
        self.gradient = Some(g);
        self
    }

    pub fn with_sampler(mut self, s: PriorSamplerFn) -> Self {
        self.sampler = Some(s);
        self
    }

    /// Declare the ambient box, checking the support fits inside it.
    pub fn with_ambient(mut self, ambient: ParamDomain) -> Result<Self> {
        if ambient.dim() != self.dim() {
            return Err(Error::invalid("ambient domain dimension mismatch"));
        }
        for i in 0..self.dim() {
            if self.support_lo[i] < ambient.lo()[i] || self.support_hi[i] > ambient.hi()[i] {
                return Err(Error::misuse(format!(
                    "prior '{}' support exceeds the ambient domain on axis {i}",
                    self.name
                )));
            }
        }
        self.ambient = ambient;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn grid(&self) -> &GridP {
        &self.grid
    }

    pub fn ambient(&self) -> &ParamDomain {
        &self.ambient
    }

    pub fn support(&self) -> (&[f64], &[f64]) {
        (&self.support_lo, &self.support_hi)
    }

    pub fn density_at(&self, theta: &[f64]) -> f64 {
        (self.density)(theta)
    }

    pub fn can_sample(&self) -> bool {
        self.sampler.is_some()
    }

    /// Gradient of `q`; analytic when provided, otherwise central
    /// differences with a step tied to the support width.
    pub fn gradient_at(&self, theta: &[f64], out: &mut [f64]) {
        if let Some(g) = &self.gradient {
            g(theta, out);
            return;
        }
        let mut tp = theta.to_vec();
        let mut tm = theta.to_vec();
        for i in 0..self.dim() {
            let width = (self.support_hi[i] - self.support_lo[i]).max(1e-6);
            let h = 1e-6 * width;
            tp[i] = theta[i] + h;
            tm[i] = theta[i] - h;
            out[i] = ((self.density)(&tp) - (self.density)(&tm)) / (2.0 * h);
            tp[i] = theta[i];
            tm[i] = theta[i];
        }
    }

    /// Grid mass of `q`; 1 up to truncation for a well-formed prior.
    pub fn normalization(&self) -> f64 {
        self.grid.integrate_fn(|t| (self.density)(t))
    }

    /// Prior mean by quadrature.
    pub fn mean(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.dim()];
        self.grid.for_each_node(|_, t, w| {
            let wq = w * (self.density)(t);
            for (a, &ti) in acc.iter_mut().zip(t) {
                *a += wq * ti;
            }
        });
        acc
    }

    /// Density level below which a grid node counts as outside the support.
    pub fn support_floor(&self) -> Result<f64> {
        let mut max_q = 0.0f64;
        self.grid.for_each_node(|_, t, _| {
            max_q = max_q.max((self.density)(t));
        });
        if !(max_q > 0.0) {
            return Err(Error::Numerical(format!(
                "prior '{}' vanishes on its whole grid",
                self.name
            )));
        }
        Ok(SUPPORT_MASK_REL * max_q)
    }

    /// Integrates a vector-valued integrand against the prior measure,
    /// skipping nodes below the support mask so that expensive integrands are
    /// never evaluated where `q` carries no mass.
    ///
    /// The callback receives `(theta, q(theta), out)` and fills `out`; the
    /// return value is the accumulated `sum of w * q * out`.
    pub fn integrate_dq<F>(&self, out_dim: usize, mut f: F) -> Result<Vec<f64>>
    where
        F: FnMut(&[f64], f64, &mut [f64]) -> Result<()>,
    {
        let q_min = self.support_floor()?;
        let mut acc = vec![0.0; out_dim];
        let mut out = vec![0.0; out_dim];
        let mut theta = vec![0.0; self.dim()];
        for flat in 0..self.grid.len() {
            self.grid.node(flat, &mut theta);
            let q = (self.density)(&theta);
            if q <= q_min {
                continue;
            }
            out.fill(0.0);
            f(&theta, q, &mut out)?;
            let wq = self.grid.weight(flat) * q;
            for (a, &v) in acc.iter_mut().zip(&out) {
                *a += wq * v;
            }
        }
        if acc.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!(
                "integral against prior '{}' diverged on the grid",
                self.name
            )));
        }
        Ok(acc)
    }

    /// Prior information matrix with the support mask applied.
    pub fn information(&self) -> Result<PriorInformation> {
        let dim = self.dim();
        let mut max_q = 0.0f64;
        self.grid.for_each_node(|_, t, _| {
            max_q = max_q.max((self.density)(t));
        });
        if !(max_q > 0.0) {
            return Err(Error::Numerical(format!(
                "prior '{}' vanishes on its whole grid",
                self.name
            )));
        }
        let q_min = SUPPORT_MASK_REL * max_q;

        let mut mat = vec![0.0; dim * dim];
        let mut masked_mass = 0.0;
        let mut grad = vec![0.0; dim];
        self.grid.for_each_node(|_, t, w| {
            let q = (self.density)(t);
            if q <= q_min {
                masked_mass += w * q.max(0.0);
                return;
            }
            self.gradient_at(t, &mut grad);
            let wq = w / q;
            for i in 0..dim {
                for j in i..dim {
                    mat[i * dim + j] += wq * grad[i] * grad[j];
                }
            }
        });
        let matrix = SymmetricMatrix::from_fn(dim, |i, j| mat[i * dim + j])?;
        if matrix.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!(
                "prior information of '{}' diverged on the grid",
                self.name
            )));
        }
        Ok(PriorInformation {
            matrix,
            masked_mass,
            q_min,
        })
    }

    /// Check that `q` vanishes toward every finite face of the ambient box.
    ///
    /// Probes walk from each face into the interior at offsets
    /// `width * 1e-2 .. width * 1e-6` along the face axis, holding the other
    /// coordinates at the support center. Passing means the density at the
    /// innermost offset is below `tol * max q` and does not grow toward the
    /// face.
    pub fn boundary_vanish_check(&self, tol: f64) -> BoundaryReport {
        let faces = self.ambient.finite_faces();
        if faces.is_empty() {
            return BoundaryReport {
                faces: Vec::new(),
                passes: true,
                vacuous: true,
            };
        }
        let mut max_q = 0.0f64;
        self.grid.for_each_node(|_, t, _| {
            max_q = max_q.max((self.density)(t));
        });
        let center: Vec<f64> = self
            .support_lo
            .iter()
            .zip(&self.support_hi)
            .map(|(a, b)| 0.5 * (a + b))
            .collect();

        let offsets = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
        let mut out_faces = Vec::new();
        let mut all_pass = true;
        for (axis, value, upper) in faces {
            let width =
                if self.ambient.lo()[axis].is_finite() && self.ambient.hi()[axis].is_finite() {
                    self.ambient.hi()[axis] - self.ambient.lo()[axis]
                } else {
                    self.support_hi[axis] - self.support_lo[axis]
                };
            let mut probe = center.clone();
            let mut values = Vec::with_capacity(offsets.len());
            for &eps in &offsets {
                probe[axis] = if upper {
                    value - eps * width
                } else {
                    value + eps * width
                };
                values.push((self.density)(&probe) / max_q);
            }
            // values[0] is farthest from the face; approaching it the density
            // must not grow, and the closest probe must be below tolerance.
            let nonincreasing = values.windows(2).all(|w| w[1] <= w[0] + 1e-12);
            let passes = nonincreasing && *values.last().unwrap() <= tol;
            all_pass &= passes;
            out_faces.push(FaceProbe {
                axis,
                value,
                upper,
                relative_values: values,
                passes,
            });
        }
        BoundaryReport {
            faces: out_faces,
            passes: all_pass,
            vacuous: false,
        }
    }

    /// The rescaled prior `theta -> q((theta - theta0) / r) / r^p`, centered
    /// at `theta0` with radius multiplier `r > 0`.
    ///
    /// Its information matrix is the base information divided by `r^2`.
    pub fn scaled(&self, theta0: &[f64], r: f64) -> Result<Prior> {
        if theta0.len() != self.dim() {
            return Err(Error::invalid("scaled prior: center dimension mismatch"));
        }
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::invalid(
                "scaled prior: radius multiplier must be positive",
            ));
        }
        let p = self.dim();
        let base_density = self.density.clone();
        let center = theta0.to_vec();
        let density: PriorDensityFn = Arc::new(move |theta: &[f64]| {
            let mut u = vec![0.0; theta.len()];
            for (ui, (&t, &c)) in u.iter_mut().zip(theta.iter().zip(&center)) {
                *ui = (t - c) / r;
            }
            base_density(&u) / r.powi(p as i32)
        });
        let gradient = self.gradient.as_ref().map(|g| {
            let g = g.clone();
            let center = theta0.to_vec();
            let f: PriorGradFn = Arc::new(move |theta: &[f64], out: &mut [f64]| {
                let mut u = vec![0.0; theta.len()];
                for (ui, (&t, &c)) in u.iter_mut().zip(theta.iter().zip(&center)) {
                    *ui = (t - c) / r;
                }
                g(&u, out);
                let scale = 1.0 / r.powi(p as i32 + 1);
                out.iter_mut().for_each(|v| *v *= scale);
            });
            f
        });
        let sampler = self.sampler.as_ref().map(|s| {
            let s = s.clone();
            let center = theta0.to_vec();
            let f: PriorSamplerFn = Arc::new(move |rng: &mut Rng, out: &mut [f64]| {
                s(rng, out);
                for (o, &c) in out.iter_mut().zip(&center) {
                    *o = c + r * *o;
                }
            });
            f
        });

        let axes = self
            .grid
            .axes()
            .iter()
            .zip(theta0)
            .map(|(ax, &c)| ax.affine_image(r, c))
            .collect::<Result<Vec<_>>>()?;
        let support_lo = self
            .support_lo
            .iter()
            .zip(theta0)
            .map(|(&s, &c)| c + r * s)
            .collect();
        let support_hi = self
            .support_hi
            .iter()
            .zip(theta0)
            .map(|(&s, &c)| c + r * s)
            .collect();

        let mut prior = Prior {
            name: format!("{}@scaled(r={r})", self.name),
            ambient: ParamDomain::real_line(p),
            support_lo,
            support_hi,
            grid: GridP::new(axes)?,
            density,
            gradient,
            sampler,
        };
        prior.ambient = self.ambient.clone();
        Ok(prior)
    }

    pub fn sample_into(&self, rng: &mut Rng, out: &mut [f64]) -> Result<()> {
        let sampler = self
            .sampler
            .as_ref()
            .ok_or_else(|| Error::Capability(format!("prior '{}' has no sampler", self.name)))?;
        sampler(rng, out);
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PriorInformation {
    pub matrix: SymmetricMatrix,
    /// Prior mass excluded by the support mask; should be negligible.
    pub masked_mass: f64,
    pub q_min: f64,
}

#[derive(Debug, Clone)]
pub struct FaceProbe {
    pub axis: usize,
    pub value: f64,
    pub upper: bool,
    /// `q / max q` at probes approaching the face (last entry is closest).
    pub relative_values: Vec<f64>,
    pub passes: bool,
}

#[derive(Debug, Clone)]
pub struct BoundaryReport {
    pub faces: Vec<FaceProbe>,
    pub passes: bool,
    /// True when the ambient box has no finite face to check.
    pub vacuous: bool,
}

/// The posterior mean of theta under (model, prior) as a statistic of x.
///
/// Evaluated by quadrature over the prior grid at each requested x. Where
/// the marginal density underflows to zero (far outside the data range) the
/// prior mean is returned, which keeps the statistic bounded without
/// affecting any integral against the marginal.
pub fn posterior_mean(model: &Model, prior: &Prior) -> Result<Statistic> {
    if model.param_dim() != prior.dim() {
        return Err(Error::invalid(format!(
            "posterior_mean: model has {} parameters, prior has {}",
            model.param_dim(),
            prior.dim()
        )));
    }
    let p = prior.dim();
    // Tabulate (node, weight * q) once.
    let mut nodes: Vec<Vec<f64>> = Vec::with_capacity(prior.grid().len());
    let mut wq: Vec<f64> = Vec::with_capacity(prior.grid().len());
    prior.grid().for_each_node(|_, t, w| {
        nodes.push(t.to_vec());
        wq.push(w * prior.density_at(t));
    });
    let prior_mean = prior.mean();
    let model = model.clone();
    let bound = nodes
        .iter()
        .flat_map(|t| t.iter().map(|v| v.abs()))
        .fold(0.0f64, f64::max);

    let stat = Statistic::from_fn("posterior-mean", p, move |x, out| {
        let mut den = 0.0;
        out.iter_mut().for_each(|v| *v = 0.0);
        for (t, &wq_t) in nodes.iter().zip(&wq) {
            let f = model.density_at(t, x) * wq_t;
            den += f;
            for (o, &ti) in out.iter_mut().zip(t) {
                *o += f * ti;
            }
        }
        if den > 0.0 {
            out.iter_mut().for_each(|v| *v /= den);
        } else {
            out.copy_from_slice(&prior_mean);
        }
    });
    Ok(stat.with_bound(bound.max(1e-300)))
}
