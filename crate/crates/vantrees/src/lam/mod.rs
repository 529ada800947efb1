//! Local asymptotic minimax bounds over shrinking neighborhoods.
//!
//! For a model at an interior point `theta0`, a target `psi`, and a positive
//! quadratic loss, the normalized risk of any estimator sequence over the
//! shrinking ball `||theta - theta0|| <= c/sqrt(n)` is bounded below by a
//! Gaussian quadratic integral built from three matrices: the averaged
//! target gradient G, the information I combining the rescaled prior
//! information with the averaged Fisher information, and `Gamma = G' I^-1 G`.
//! Letting n and then c grow recovers the classical efficiency bound
//! `grad psi' I_P(theta0)^-1 grad psi`. This module computes the finite
//! `(c, n)` table, the limit, Monte Carlo estimates of the left-hand side,
//! and the blow-up probe along singular Fisher directions.

use nalgebra::DMatrix;

use crate::bounds::{
    fisher_average, fmt_float, TargetFunction, MC_MIN_DRAWS, PINV_CUTOFF, PSD_TOL,
};
use crate::error::{Error, Result};
use crate::model::{Model, Statistic};
use crate::numerics::{derive_seed, mat_t_mat_mat, rng_from_seed, Eigen, SymmetricMatrix};
use crate::prior::{families as prior_families, Prior};

/// Rectangular grids must satisfy `n >= MIN_N_PER_C_SQ * c^2`, keeping the
/// iterated limit (n first, then c) honest.
pub const MIN_N_PER_C_SQ: f64 = 100.0;

/// Directions count as kernel directions when `||I_P u||` is below this
/// times the largest eigenvalue.
pub const KERNEL_TOL: f64 = 1e-8;

/// Relative jump allowed in the continuity probes of Fisher information and
/// target gradient around `theta0`.
const CONTINUITY_TOL: f64 = 0.1;

/// A positive quadratic loss `v -> v' L v` with its eigendecomposition
/// cached, so Gaussian integrals reduce to weighted squared projections.
#[derive(Debug, Clone)]
pub struct QuadraticForm {
    name: String,
    matrix: SymmetricMatrix,
    eigen: Eigen,
}

impl QuadraticForm {
    pub fn new(name: impl Into<String>, matrix: SymmetricMatrix) -> Result<Self> {
        let psd = matrix.psd_check(1e-10);
        if !psd.passes {
            return Err(Error::invalid(format!(
                "quadratic form must be positive semidefinite; min eigenvalue {:.3e}",
                psd.min_eigenvalue
            )));
        }
        let eigen = matrix.eigendecompose();
        Ok(QuadraticForm {
            name: name.into(),
            matrix,
            eigen,
        })
    }

    /// `l(v) = ||v||^2`.
    pub fn squared_norm(dim: usize) -> Result<Self> {
        QuadraticForm::new("squared-norm", SymmetricMatrix::identity(dim)?)
    }

    /// `l(v) = (u'v)^2`.
    pub fn rank_one(u: &[f64]) -> Result<Self> {
        let m = SymmetricMatrix::from_fn(u.len(), |i, j| u[i] * u[j])?;
        QuadraticForm::new("rank-one", m)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &SymmetricMatrix {
        &self.matrix
    }

    pub fn eval(&self, v: &[f64]) -> f64 {
        self.matrix.quad_form(v)
    }

    /// `sum_k lambda_k (u_k' v)^2`; must agree with `eval` to roundoff.
    pub fn eval_spectral(&self, v: &[f64]) -> f64 {
        self.eigen
            .values
            .iter()
            .zip(&self.eigen.vectors)
            .map(|(&l, u)| {
                let proj: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
                l * proj * proj
            })
            .sum()
    }

    /// `int l dN(0, gamma) = sum_k lambda_k u_k' gamma u_k`, which is
    /// `trace(L gamma)`; no sampling involved.
    pub fn gaussian_integral(&self, gamma: &SymmetricMatrix) -> Result<f64> {
        if gamma.dim() != self.dim() {
            return Err(Error::invalid(format!(
                "quadratic form has dimension {}, covariance {}",
                self.dim(),
                gamma.dim()
            )));
        }
        let spectral: f64 = self
            .eigen
            .values
            .iter()
            .zip(&self.eigen.vectors)
            .map(|(&l, u)| l * gamma.quad_form(u))
            .sum();
        Ok(spectral)
    }
}

/// `int l dN(0, gamma)` through the cached eigendecomposition of the loss.
pub fn gaussian_quadratic_integral(loss: &QuadraticForm, gamma: &SymmetricMatrix) -> Result<f64> {
    loss.gaussian_integral(gamma)
}

/// The base prior on the unit ball: a product of per-axis polynomial bumps
/// of radius `1/sqrt(p)`, so the support's corners sit on the sphere.
pub fn default_base_prior(p: usize) -> Result<Prior> {
    prior_families::product_quartic_bump_at(&vec![0.0; p], 1.0 / (p as f64).sqrt())
}

/// A localized estimation problem: model, interior point, target, loss, and
/// the `(c, n)` grids the bounds are tabulated on.
#[derive(Clone)]
pub struct LamInstance {
    model: Model,
    theta0: Vec<f64>,
    psi: TargetFunction,
    loss: QuadraticForm,
    h_prior: Prior,
    i_h: SymmetricMatrix,
    c_grid: Vec<f64>,
    n_grid: Vec<u64>,
    /// Radius of the neighborhood on which psi must stay regular; scaled
    /// priors must not escape it.
    neighborhood: f64,
}

impl std::fmt::Debug for LamInstance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LamInstance")
            .field("model", &self.model.name())
            .field("theta0", &self.theta0)
            .field("psi", &self.psi.name())
            .field("loss", &self.loss.name)
            .field("c_grid", &self.c_grid)
            .field("n_grid", &self.n_grid)
            .field("neighborhood", &self.neighborhood)
            .finish()
    }
}

pub fn lam_instance(
    model: &Model,
    theta0: &[f64],
    psi: TargetFunction,
    loss: QuadraticForm,
    c_grid: Vec<f64>,
    n_grid: Vec<u64>,
    neighborhood: Option<f64>,
) -> Result<LamInstance> {
    let p = model.param_dim();
    if theta0.len() != p || psi.in_dim() != p {
        return Err(Error::misuse(format!(
            "model '{}' has {} parameters; theta0 has {} and target '{}' takes {}",
            model.name(),
            p,
            theta0.len(),
            psi.name(),
            psi.in_dim()
        )));
    }
    if loss.dim() != psi.out_dim() {
        return Err(Error::misuse(format!(
            "loss acts on dimension {}, target '{}' produces {}",
            loss.dim(),
            psi.name(),
            psi.out_dim()
        )));
    }
    if !model.domain().contains(theta0) {
        return Err(Error::misuse(format!(
            "theta0 {theta0:?} is outside the parameter domain"
        )));
    }
    let gap = (0..p)
        .map(|i| model.domain().boundary_gap(theta0, i))
        .fold(f64::INFINITY, f64::min);
    if !(gap > 0.0) {
        return Err(Error::misuse(format!(
            "theta0 {theta0:?} sits on the domain boundary; an interior point is required"
        )));
    }
    let neighborhood = match neighborhood {
        Some(r) if r > 0.0 && r.is_finite() => {
            if r > gap {
                return Err(Error::misuse(format!(
                    "neighborhood radius {r} exceeds the distance {gap} to the domain boundary"
                )));
            }
            r
        }
        Some(r) => {
            return Err(Error::misuse(format!(
                "neighborhood radius must be positive, got {r}"
            )))
        }
        None => {
            if gap.is_finite() {
                (0.5 * gap).min(1.0)
            } else {
                1.0
            }
        }
    };
    if c_grid.is_empty() || n_grid.is_empty() {
        return Err(Error::misuse("c and n grids must be nonempty"));
    }
    if c_grid.iter().any(|&c| !(c > 0.0) || !c.is_finite()) {
        return Err(Error::misuse("every c must be positive and finite"));
    }
    if n_grid.iter().any(|&n| n == 0) {
        return Err(Error::misuse("every n must be positive"));
    }
    let c_max = c_grid.iter().cloned().fold(0.0f64, f64::max);
    let n_min = *n_grid.iter().min().expect("nonempty");
    if (n_min as f64) < MIN_N_PER_C_SQ * c_max * c_max {
        return Err(Error::misuse(format!(
            "grid couples c = {c_max} with n = {n_min}; the iterated limit needs n >= {:.0}",
            MIN_N_PER_C_SQ * c_max * c_max
        )));
    }

    let h_prior = default_base_prior(p)?;
    let i_h = h_prior.information()?.matrix;

    // Regularity smoke test: psi and its gradient must be finite on probes
    // of the neighborhood.
    let mut val = vec![0.0; psi.out_dim()];
    let mut grad = vec![0.0; p * psi.out_dim()];
    for i in 0..p {
        for sign in [-1.0, 1.0] {
            let mut t = theta0.to_vec();
            t[i] += sign * 0.99 * neighborhood / (p as f64).sqrt();
            psi.eval_into(&t, &mut val);
            psi.gradient_into(&t, &mut grad);
            if val.iter().chain(grad.iter()).any(|v| !v.is_finite()) {
                return Err(Error::misuse(format!(
                    "target '{}' is not finite on the neighborhood at {t:?}",
                    psi.name()
                )));
            }
        }
    }

    Ok(LamInstance {
        model: model.clone(),
        theta0: theta0.to_vec(),
        psi,
        loss,
        h_prior,
        i_h,
        c_grid,
        n_grid,
        neighborhood,
    })
}

impl LamInstance {
    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn theta0(&self) -> &[f64] {
        &self.theta0
    }

    pub fn psi(&self) -> &TargetFunction {
        &self.psi
    }

    pub fn loss(&self) -> &QuadraticForm {
        &self.loss
    }

    pub fn c_grid(&self) -> &[f64] {
        &self.c_grid
    }

    pub fn n_grid(&self) -> &[u64] {
        &self.n_grid
    }

    pub fn neighborhood(&self) -> f64 {
        self.neighborhood
    }

    /// Information of the unit-scale base prior.
    pub fn base_prior_information(&self) -> &SymmetricMatrix {
        &self.i_h
    }

    /// The prior of `theta0 + (c/sqrt(n)) h`, `h` from the base prior.
    pub fn scaled_prior(&self, c: f64, n: u64) -> Result<Prior> {
        let r = c / (n as f64).sqrt();
        if r > self.neighborhood * (1.0 + 1e-12) {
            let needed = (c / self.neighborhood).powi(2).ceil();
            return Err(Error::misuse(format!(
                "scaled support radius {r:.6e} escapes the neighborhood {:.6e}; take n large enough (n >= {needed:.0} at c = {c})",
                self.neighborhood
            )));
        }
        self.h_prior.scaled(&self.theta0, r)
    }
}

/// `G(theta0, c, n) = int grad psi(theta0 + c h / sqrt(n)) dH(h)`, `p x s`.
pub fn g_matrix(instance: &LamInstance, c: f64, n: u64) -> Result<DMatrix<f64>> {
    let p = instance.model.param_dim();
    let s = instance.psi.out_dim();
    let scaled = instance.scaled_prior(c, n)?;
    let mut grad = vec![0.0; p * s];
    let flat = scaled.integrate_dq(p * s, |t, _q, out| {
        instance.psi.gradient_into(t, &mut grad);
        out.copy_from_slice(&grad);
        Ok(())
    })?;
    Ok(DMatrix::from_row_slice(p, s, &flat))
}

/// `I(theta0, c, n) = I_H / c^2 + int I_P(theta0 + c h / sqrt(n)) dH(h)`.
pub fn i_matrix(instance: &LamInstance, c: f64, n: u64) -> Result<SymmetricMatrix> {
    let scaled = instance.scaled_prior(c, n)?;
    let avg = fisher_average(&instance.model, &scaled)?;
    let total = instance.i_h.scale(1.0 / (c * c)).add(&avg)?;
    let psd = total.psd_check(PSD_TOL);
    if !psd.passes {
        return Err(Error::Numerical(format!(
            "information matrix at (c, n) = ({c}, {n}) is not PSD; min eigenvalue {:.3e}",
            psd.min_eigenvalue
        )));
    }
    Ok(total)
}

/// The three matrices of one `(c, n)` cell.
#[derive(Debug, Clone)]
pub struct GammaRecord {
    pub c: f64,
    pub n: u64,
    /// `p x s` averaged target gradient.
    pub g: DMatrix<f64>,
    pub i: SymmetricMatrix,
    /// `G' I^-1 G`, `s x s`.
    pub gamma: SymmetricMatrix,
    /// Eigenvalues dropped when inverting `i`; only nonzero when the caller
    /// allowed the pseudo-inverse.
    pub pseudo_dropped: usize,
}

/// Largest entrywise gap between the stored `gamma` and one recomputed from
/// the stored `g` and `i`; the record contract keeps this at roundoff.
pub fn verify_gamma_record(rec: &GammaRecord) -> f64 {
    let pinv = rec.i.pseudo_inverse(PINV_CUTOFF);
    let back = mat_t_mat_mat(&rec.g, &pinv.matrix, &rec.g);
    let s = rec.gamma.dim();
    let mut gap = 0.0f64;
    for i in 0..s {
        for j in 0..s {
            gap = gap.max((back[(i, j)] - rec.gamma.get(i, j)).abs());
        }
    }
    gap
}

pub fn gamma_matrix(
    instance: &LamInstance,
    c: f64,
    n: u64,
    allow_pseudo: bool,
) -> Result<GammaRecord> {
    let g = g_matrix(instance, c, n)?;
    let i = i_matrix(instance, c, n)?;
    let pinv = i.pseudo_inverse(PINV_CUTOFF);
    if pinv.dropped > 0 && !allow_pseudo {
        return Err(Error::Numerical(format!(
            "information matrix at (c, n) = ({c}, {n}) is singular ({} null directions); pass the pseudo-inverse flag to proceed",
            pinv.dropped
        )));
    }
    let dm = mat_t_mat_mat(&g, &pinv.matrix, &g);
    let s = instance.psi.out_dim();
    let gamma = SymmetricMatrix::from_fn(s, |a, b| 0.5 * (dm[(a, b)] + dm[(b, a)]))?;
    let psd = gamma.psd_check(PSD_TOL);
    if !psd.passes {
        return Err(Error::Numerical(format!(
            "Gamma at (c, n) = ({c}, {n}) is not PSD; min eigenvalue {:.3e}",
            psd.min_eigenvalue
        )));
    }
    Ok(GammaRecord {
        c,
        n,
        g,
        i,
        gamma,
        pseudo_dropped: pinv.dropped,
    })
}

/// The limit experiment's bound: `int l dN(0, grad psi' I_P^-1 grad psi)`,
/// infinite when the loss sees a Fisher-kernel direction through the target.
#[derive(Debug, Clone)]
pub struct LimitBound {
    pub value: f64,
    /// Present when the value is finite.
    pub gamma: Option<SymmetricMatrix>,
    pub fisher_singular: bool,
}

/// Continuity probes around `theta0` (Fisher information and target
/// gradient must not jump), then the limit bound.
pub fn limit_bound(instance: &LamInstance) -> Result<LimitBound> {
    let p = instance.model.param_dim();
    let s = instance.psi.out_dim();
    let theta0 = &instance.theta0;
    let ip0 = instance.model.fisher_information(theta0)?;
    let mut grad0 = vec![0.0; p * s];
    instance.psi.gradient_into(theta0, &mut grad0);

    let eps = 1e-3 * instance.neighborhood.min(1.0);
    let scale_i = ip0.max_abs().max(1.0);
    let scale_g = grad0.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let mut grad = vec![0.0; p * s];
    for i in 0..p {
        for sign in [-1.0, 1.0] {
            let mut t = theta0.clone();
            t[i] += sign * eps;
            let ip = instance.model.fisher_information(&t)?;
            if ip.sub(&ip0)?.max_abs() > CONTINUITY_TOL * scale_i {
                return Err(Error::invalid(format!(
                    "Fisher information jumps near theta0 along axis {i}; the limit statement needs continuity"
                )));
            }
            instance.psi.gradient_into(&t, &mut grad);
            let gap = grad
                .iter()
                .zip(&grad0)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            if gap > CONTINUITY_TOL * scale_g {
                return Err(Error::invalid(format!(
                    "gradient of '{}' jumps near theta0 along axis {i}",
                    instance.psi.name()
                )));
            }
        }
    }

    let pinv = ip0.pseudo_inverse(PINV_CUTOFF);
    let g0 = DMatrix::from_row_slice(p, s, &grad0);
    if pinv.dropped > 0 {
        // Does the loss see any kernel direction through the target?
        let eig = ip0.eigendecompose();
        let lambda_max = eig.values.first().copied().unwrap_or(0.0).max(0.0);
        for (l, u) in eig.values.iter().zip(&eig.vectors) {
            if *l > pinv.cutoff.max(KERNEL_TOL * lambda_max) {
                continue;
            }
            let mut v = vec![0.0; s];
            for j in 0..s {
                v[j] = (0..p).map(|i| u[i] * g0[(i, j)]).sum();
            }
            if instance.loss.eval(&v) > 1e-12 {
                return Ok(LimitBound {
                    value: f64::INFINITY,
                    gamma: None,
                    fisher_singular: true,
                });
            }
        }
    }
    let dm = mat_t_mat_mat(&g0, &pinv.matrix, &g0);
    let gamma = SymmetricMatrix::from_fn(s, |a, b| 0.5 * (dm[(a, b)] + dm[(b, a)]))?;
    let value = instance.loss.gaussian_integral(&gamma)?;
    Ok(LimitBound {
        value,
        gamma: Some(gamma),
        fisher_singular: pinv.dropped > 0,
    })
}

#[derive(Debug, Clone)]
pub struct LamBoundRow {
    pub record: GammaRecord,
    pub bound: f64,
}

#[derive(Debug, Clone)]
pub struct LamBound {
    pub rows: Vec<LamBoundRow>,
    pub limit: LimitBound,
}

/// Tabulates the finite-(c, n) bounds over the instance grids and the limit
/// bound of the Gaussian limit experiment.
pub fn lam_bound(instance: &LamInstance) -> Result<LamBound> {
    let limit = limit_bound(instance)?;
    let mut rows = Vec::with_capacity(instance.c_grid.len() * instance.n_grid.len());
    for &c in &instance.c_grid {
        for &n in &instance.n_grid {
            let record = gamma_matrix(instance, c, n, false)?;
            let bound = instance.loss.gaussian_integral(&record.gamma)?;
            rows.push(LamBoundRow { record, bound });
        }
    }
    Ok(LamBound { rows, limit })
}

/// Seeded Monte Carlo settings for the empirical supremum.
#[derive(Debug, Clone, Copy)]
pub struct McConfig {
    pub seed: u64,
    pub draws: usize,
    /// Offsets per axis on each side of the center; the grid has
    /// `2 p grid_per_axis + 1` points.
    pub grid_per_axis: usize,
}

#[derive(Debug, Clone)]
pub struct RiskCell {
    pub theta: Vec<f64>,
    pub risk: f64,
    pub se: f64,
}

#[derive(Debug, Clone)]
pub struct MinimaxRisk {
    /// Largest estimated normalized risk over the parameter grid.
    pub risk: f64,
    /// Standard error at the argmax.
    pub se: f64,
    pub argmax: Vec<f64>,
    pub cells: Vec<RiskCell>,
}

/// Monte Carlo estimate of
/// `sup E_theta^n [ l( sqrt(n) (S_n - psi(theta)) ) ]` over an axis-aligned
/// grid of the shrinking ball. Every grid point consumes the identical
/// random stream (common random numbers), so the maximum is not inflated by
/// independent noise across points.
pub fn local_minimax_risk(
    instance: &LamInstance,
    c: f64,
    n: u64,
    stat: &Statistic,
    mc: &McConfig,
) -> Result<MinimaxRisk> {
    if mc.draws < MC_MIN_DRAWS {
        return Err(Error::misuse(format!(
            "{} Monte Carlo draws is below the minimum of {MC_MIN_DRAWS}",
            mc.draws
        )));
    }
    if mc.grid_per_axis == 0 {
        return Err(Error::misuse(
            "the parameter grid needs at least one offset per axis",
        ));
    }
    if !instance.model.can_sample() {
        return Err(Error::Capability(format!(
            "model '{}' has no sampler",
            instance.model.name()
        )));
    }
    let s = instance.psi.out_dim();
    if stat.out_dim() != s {
        return Err(Error::misuse(format!(
            "statistic '{}' produces dimension {}, target '{}' produces {}",
            stat.name(),
            stat.out_dim(),
            instance.psi.name(),
            s
        )));
    }
    let p = instance.model.param_dim();
    let radius = c / (n as f64).sqrt();
    if radius > instance.neighborhood * (1.0 + 1e-12) {
        return Err(Error::misuse(format!(
            "ball radius {radius:.6e} escapes the neighborhood; take n large enough"
        )));
    }

    // Center plus grid_per_axis offsets per direction on each axis.
    let mut thetas = vec![instance.theta0.clone()];
    for axis in 0..p {
        for k in 1..=mc.grid_per_axis {
            let off = radius * (k as f64) / (mc.grid_per_axis as f64);
            for sign in [-1.0, 1.0] {
                let mut t = instance.theta0.clone();
                t[axis] += sign * off;
                thetas.push(t);
            }
        }
    }

    let d = instance.model.sample_dim();
    let sqrt_n = (n as f64).sqrt();
    let mut sample = vec![0.0; d * n as usize];
    let mut sval = vec![0.0; s];
    let mut psival = vec![0.0; s];
    let mut v = vec![0.0; s];
    let mut cells = Vec::with_capacity(thetas.len());
    for theta in &thetas {
        // Identical stream for every theta: common random numbers.
        let mut rng = rng_from_seed(mc.seed);
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..mc.draws {
            for i in 0..n as usize {
                instance
                    .model
                    .sample_into(theta, &mut rng, &mut sample[i * d..(i + 1) * d])?;
            }
            stat.eval_into(&sample, &mut sval);
            instance.psi.eval_into(theta, &mut psival);
            for j in 0..s {
                v[j] = sqrt_n * (sval[j] - psival[j]);
            }
            let loss = instance.loss.eval(&v);
            sum += loss;
            sumsq += loss * loss;
        }
        let mean = sum / mc.draws as f64;
        let var = (sumsq / mc.draws as f64 - mean * mean).max(0.0);
        if !mean.is_finite() {
            return Err(Error::Numerical(format!(
                "Monte Carlo risk at theta {theta:?} is not finite"
            )));
        }
        cells.push(RiskCell {
            theta: theta.clone(),
            risk: mean,
            se: (var / mc.draws as f64).sqrt(),
        });
    }
    let best = cells
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.risk.total_cmp(&b.1.risk))
        .expect("at least the center cell");
    Ok(MinimaxRisk {
        risk: best.1.risk,
        se: best.1.se,
        argmax: best.1.theta.clone(),
        cells,
    })
}

/// One line of the long-format table: an empirical supremum next to its
/// finite and limit bounds.
#[derive(Debug, Clone)]
pub struct LamRow {
    pub c: f64,
    pub n: u64,
    pub theta_argmax: Vec<f64>,
    pub risk: f64,
    pub se: f64,
    pub bound_finite: f64,
    pub bound_limit: f64,
    pub loss_id: String,
    pub seed: u64,
}

/// Runs the whole grid: per `(c, n)` cell a seeded empirical supremum (one
/// derived seed per cell) and the finite bound, with the dominance contract
/// `risk + 3 se >= bound` enforced on every row.
pub fn minimax_table(
    instance: &LamInstance,
    make_stat: impl Fn(u64) -> Result<Statistic>,
    mc: &McConfig,
) -> Result<Vec<LamRow>> {
    let limit = limit_bound(instance)?;
    let mut rows = Vec::new();
    let mut cell = 0u64;
    for &c in &instance.c_grid {
        for &n in &instance.n_grid {
            let seed = derive_seed(mc.seed, cell);
            cell += 1;
            let record = gamma_matrix(instance, c, n, false)?;
            let bound = instance.loss.gaussian_integral(&record.gamma)?;
            let stat = make_stat(n)?;
            let mm = local_minimax_risk(instance, c, n, &stat, &McConfig { seed, ..*mc })?;
            if mm.risk + 3.0 * mm.se < bound {
                return Err(Error::ContractViolation(format!(
                    "empirical supremum {:.6e} (se {:.2e}) fell below the bound {bound:.6e} at (c, n) = ({c}, {n})",
                    mm.risk, mm.se
                )));
            }
            rows.push(LamRow {
                c,
                n,
                theta_argmax: mm.argmax,
                risk: mm.risk,
                se: mm.se,
                bound_finite: bound,
                bound_limit: limit.value,
                loss_id: instance.loss.name.clone(),
                seed,
            });
        }
    }
    Ok(rows)
}

pub fn lam_csv_header(p: usize) -> String {
    let mut cols = vec!["c".to_string(), "n".to_string()];
    for i in 0..p {
        cols.push(format!("theta_argmax_{i}"));
    }
    for name in [
        "risk",
        "se",
        "bound_finite",
        "bound_limit",
        "loss_id",
        "seed",
    ] {
        cols.push(name.to_string());
    }
    cols.join(",")
}

pub fn lam_rows_csv(p: usize, rows: &[LamRow]) -> String {
    let mut out = lam_csv_header(p);
    out.push('\n');
    for r in rows {
        let mut cols = vec![fmt_float(r.c), r.n.to_string()];
        for i in 0..p {
            cols.push(fmt_float(*r.theta_argmax.get(i).unwrap_or(&f64::NAN)));
        }
        cols.push(fmt_float(r.risk));
        cols.push(fmt_float(r.se));
        cols.push(fmt_float(r.bound_finite));
        cols.push(fmt_float(r.bound_limit));
        cols.push(r.loss_id.replace(',', ";"));
        cols.push(r.seed.to_string());
        out.push_str(&cols.join(","));
        out.push('\n');
    }
    out
}

/// Bounds along a Fisher-kernel direction, which must blow up like `c^2`.
#[derive(Debug, Clone)]
pub struct SingularProbe {
    pub direction: Vec<f64>,
    /// `(c, bound)` per grid value of c, strictly increasing in c.
    pub rows: Vec<(f64, f64)>,
    pub threshold: f64,
}

/// Evaluates the finite bounds with the rank-one loss `(u'v)^2` along a
/// direction `u` in the kernel of `I_P(theta0)`. The bound must increase
/// strictly in `c` and clear `threshold` at the largest grid `c`; a
/// direction outside the kernel is misuse.
pub fn singular_probe(instance: &LamInstance, u: &[f64], threshold: f64) -> Result<SingularProbe> {
    let p = instance.model.param_dim();
    let s = instance.psi.out_dim();
    if u.len() != s || s != p {
        return Err(Error::misuse(
            "the singular probe needs a square problem (s = p) and a direction of length s",
        ));
    }
    let norm: f64 = u.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(Error::misuse("direction must be nonzero"));
    }
    let unit: Vec<f64> = u.iter().map(|v| v / norm).collect();

    let ip0 = instance.model.fisher_information(&instance.theta0)?;
    let scale = ip0.max_abs().max(1.0);
    let mut image = vec![0.0; p];
    for i in 0..p {
        image[i] = (0..p).map(|j| ip0.get(i, j) * unit[j]).sum();
    }
    let image_norm = image.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if image_norm > KERNEL_TOL * scale {
        return Err(Error::misuse(format!(
            "direction is not in the Fisher kernel: ||I_P u|| = {image_norm:.3e}"
        )));
    }

    let loss = QuadraticForm::rank_one(&unit)?;
    let mut cs: Vec<f64> = instance.c_grid.clone();
    cs.sort_by(f64::total_cmp);
    let n = *instance.n_grid.iter().max().expect("nonempty");
    let mut rows = Vec::with_capacity(cs.len());
    for &c in &cs {
        let record = gamma_matrix(instance, c, n, false)?;
        let bound = loss.gaussian_integral(&record.gamma)?;
        rows.push((c, bound));
    }
    for w in rows.windows(2) {
        if !(w[1].1 > w[0].1) {
            return Err(Error::ContractViolation(format!(
                "kernel-direction bound failed to increase: {:.6e} at c = {} vs {:.6e} at c = {}",
                w[0].1, w[0].0, w[1].1, w[1].0
            )));
        }
    }
    let last = rows.last().expect("nonempty");
    if last.1 < threshold {
        return Err(Error::ContractViolation(format!(
            "kernel-direction bound {:.6e} at c = {} stayed below the threshold {threshold:.6e}",
            last.1, last.0
        )));
    }
    Ok(SingularProbe {
        direction: unit,
        rows,
        threshold,
    })
}

/// Componentwise mean of `n` stacked observations of dimension `d`.
pub fn sample_mean(n: u64, d: usize) -> Statistic {
    Statistic::from_fn("sample-mean", d, move |x, out| {
        out.iter_mut().for_each(|v| *v = 0.0);
        for chunk in x.chunks_exact(d) {
            for (o, &xi) in out.iter_mut().zip(chunk) {
                *o += xi;
            }
        }
        let inv = 1.0 / n as f64;
        out.iter_mut().for_each(|v| *v *= inv);
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::families as mf;
    use approx::assert_abs_diff_eq;
    use rand_distr::Distribution;

    /// Spectral agreement required between the two evaluation routes of a
    /// quadratic form.
    const SPECTRAL_TOL: f64 = 1e-12;

    fn gaussian_instance(c_grid: Vec<f64>, n_grid: Vec<u64>) -> LamInstance {
        let m = mf::gaussian_location(1.0).unwrap();
        lam_instance(
            &m,
            &[0.0],
            TargetFunction::identity(1),
            QuadraticForm::squared_norm(1).unwrap(),
            c_grid,
            n_grid,
            None,
        )
        .unwrap()
    }

    #[test]
    fn quadratic_form_routes_agree_and_reject_indefinite_matrices() {
        let l = SymmetricMatrix::from_rows(&[
            vec![2.0, 0.5, 0.0],
            vec![0.5, 1.0, -0.3],
            vec![0.0, -0.3, 0.7],
        ])
        .unwrap();
        let form = QuadraticForm::new("probe", l).unwrap();
        for v in [
            [1.0, 0.0, 0.0],
            [0.3, -1.2, 0.8],
            [2.0, 2.0, 2.0],
            [-0.1, 0.4, -0.9],
        ] {
            let gap = (form.eval(&v) - form.eval_spectral(&v)).abs();
            assert!(
                gap <= SPECTRAL_TOL * form.eval(&v).abs().max(1.0),
                "gap {gap}"
            );
        }

        let indef = SymmetricMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, -0.5]]).unwrap();
        assert!(matches!(
            QuadraticForm::new("bad", indef),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn gaussian_integral_is_the_trace_pairing() {
        let id2 = QuadraticForm::squared_norm(2).unwrap();
        let gamma = SymmetricMatrix::identity(2).unwrap();
        assert_abs_diff_eq!(id2.gaussian_integral(&gamma).unwrap(), 2.0, epsilon = 1e-14);

        let u = [0.6, -0.8];
        let rank1 = QuadraticForm::rank_one(&u).unwrap();
        let gamma = SymmetricMatrix::from_rows(&[vec![1.5, 0.2], vec![0.2, 0.9]]).unwrap();
        let expect = gamma.quad_form(&u);
        assert_abs_diff_eq!(
            rank1.gaussian_integral(&gamma).unwrap(),
            expect,
            epsilon = 1e-12
        );

        assert!(gaussian_quadratic_integral(&id2, &SymmetricMatrix::identity(3).unwrap()).is_err());
    }

    #[test]
    fn gaussian_integral_matches_monte_carlo() {
        let gamma = SymmetricMatrix::from_rows(&[vec![1.2, -0.4], vec![-0.4, 0.7]]).unwrap();
        let loss = QuadraticForm::new(
            "anisotropic",
            SymmetricMatrix::from_rows(&[vec![2.0, 0.3], vec![0.3, 0.5]]).unwrap(),
        )
        .unwrap();
        let exact = loss.gaussian_integral(&gamma).unwrap();

        // Sample N(0, gamma) through the spectral square root.
        let eig = gamma.eigendecompose();
        let mut rng = rng_from_seed(424242);
        let normal = rand_distr::StandardNormal;
        let n = 100_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n {
            let mut v = [0.0, 0.0];
            for (l, u) in eig.values.iter().zip(&eig.vectors) {
                let z: f64 = normal.sample(&mut rng);
                let a = l.max(0.0).sqrt() * z;
                v[0] += a * u[0];
                v[1] += a * u[1];
            }
            let val = loss.eval(&v);
            sum += val;
            sumsq += val * val;
        }
        let mean = sum / n as f64;
        let se = ((sumsq / n as f64 - mean * mean).max(0.0) / n as f64).sqrt();
        assert!(
            (mean - exact).abs() <= 4.0 * se,
            "mc {mean} exact {exact} se {se}"
        );
    }

    #[test]
    fn averaged_gradient_for_identity_and_square_targets() {
        let inst = gaussian_instance(vec![1.0], vec![10_000]);
        let g = g_matrix(&inst, 1.0, 10_000).unwrap();
        assert_abs_diff_eq!(g[(0, 0)], 1.0, epsilon = 1e-10);

        let m = mf::gaussian_location(1.0).unwrap();
        let square = TargetFunction::from_fn("square", 1, 1, |t, out| out[0] = t[0] * t[0])
            .with_gradient(|t, g| g[0] = 2.0 * t[0]);
        let inst = lam_instance(
            &m,
            &[1.0],
            square,
            QuadraticForm::squared_norm(1).unwrap(),
            vec![1.0],
            vec![10_000],
            None,
        )
        .unwrap();
        // The odd part integrates out under the symmetric base prior.
        let g = g_matrix(&inst, 1.0, 10_000).unwrap();
        assert_abs_diff_eq!(g[(0, 0)], 2.0, epsilon = 1e-10);
        // Shrinking the ball pulls the average toward the pointwise value.
        let a = (g_matrix(&inst, 1.0, 100).unwrap()[(0, 0)] - 2.0f64).abs();
        let b = (g_matrix(&inst, 1.0, 10_000).unwrap()[(0, 0)] - 2.0f64).abs();
        assert!(b <= a + 1e-12, "coarse {a} fine {b}");
    }

    #[test]
    fn scaled_support_escape_is_reported_with_a_usable_n() {
        let m = mf::gaussian_location(1.0).unwrap();
        let inst = lam_instance(
            &m,
            &[0.0],
            TargetFunction::identity(1),
            QuadraticForm::squared_norm(1).unwrap(),
            vec![1.0],
            vec![10_000],
            Some(0.05),
        )
        .unwrap();
        let err = gamma_matrix(&inst, 1.0, 10, false).unwrap_err();
        match err {
            Error::Misuse(msg) => assert!(msg.contains("n large enough"), "{msg}"),
            other => panic!("expected misuse, got {other:?}"),
        }
    }

    #[test]
    fn information_matrix_oracles() {
        // Constant Fisher: I = I_H / c^2 + 1 exactly.
        let inst = gaussian_instance(vec![2.0], vec![1_000_000]);
        let i = i_matrix(&inst, 2.0, 1_000_000).unwrap();
        let i_h = inst.base_prior_information().get(0, 0);
        assert_abs_diff_eq!(i_h, 10.0, epsilon = 1e-10);
        assert_abs_diff_eq!(i.get(0, 0), 10.0 / 4.0 + 1.0, epsilon = 1e-8);

        // Bernoulli at 1/2: the averaged Fisher tends to 4 as the ball
        // shrinks.
        let m = mf::bernoulli().unwrap();
        let inst = lam_instance(
            &m,
            &[0.5],
            TargetFunction::identity(1),
            QuadraticForm::squared_norm(1).unwrap(),
            vec![1.0],
            vec![1_000_000],
            None,
        )
        .unwrap();
        let i = i_matrix(&inst, 1.0, 1_000_000).unwrap();
        assert_abs_diff_eq!(i.get(0, 0), 4.0 + 10.0, epsilon = 1e-4);

        // Fixed c, growing n: the Fisher average settles at the pointwise
        // value; the gap must shrink.
        let inst = lam_instance(
            &m,
            &[0.3],
            TargetFunction::identity(1),
            QuadraticForm::squared_norm(1).unwrap(),
            vec![1.0],
            vec![10_000],
            None,
        )
        .unwrap();
        let ip0 = m.fisher_information(&[0.3]).unwrap().get(0, 0);
        let coarse = (i_matrix(&inst, 1.0, 10_000).unwrap().get(0, 0) - 10.0 - ip0).abs();
        let fine = (i_matrix(&inst, 1.0, 1_000_000).unwrap().get(0, 0) - 10.0 - ip0).abs();
        assert!(fine < coarse, "fine {fine} coarse {coarse}");
    }

    #[test]
    fn gamma_law_for_constant_fisher() {
        let inst = gaussian_instance(vec![10.0], vec![10_000_000]);
        let rec = gamma_matrix(&inst, 10.0, 10_000_000, false).unwrap();
        assert_abs_diff_eq!(rec.gamma.get(0, 0), 1.0 / 1.1, epsilon = 1e-8);
        assert_eq!(rec.pseudo_dropped, 0);
        assert!(verify_gamma_record(&rec) <= 1e-12);

        // Shrinking prior information: Gamma approaches 1/I_P.
        let wide = gamma_matrix(&inst, 1_000.0, 1_000_000, false).unwrap();
        assert_abs_diff_eq!(wide.gamma.get(0, 0), 1.0, epsilon = 1e-4);

        // Constant target: Gamma is the zero matrix.
        let m = mf::gaussian_location(1.0).unwrap();
        let inst = lam_instance(
            &m,
            &[0.0],
            TargetFunction::constant(1, vec![0.7]),
            QuadraticForm::squared_norm(1).unwrap(),
            vec![1.0],
            vec![10_000],
            None,
        )
        .unwrap();
        let rec = gamma_matrix(&inst, 1.0, 10_000, false).unwrap();
        assert!(rec.gamma.max_abs() <= 1e-15);
    }

    #[test]
    fn gamma_is_monotone_in_c_in_the_psd_order() {
        let m = mf::gaussian_location_2d_fine(-1.2, 1.2, 121).unwrap();
        let inst = lam_instance(
            &m,
            &[0.0, 0.0],
            TargetFunction::identity(2),
            QuadraticForm::squared_norm(2).unwrap(),
            vec![1.0, 2.0, 5.0],
            vec![10_000_000],
            None,
        )
        .unwrap();
        let g1 = gamma_matrix(&inst, 1.0, 10_000_000, false).unwrap().gamma;
        let g2 = gamma_matrix(&inst, 2.0, 10_000_000, false).unwrap().gamma;
        let g5 = gamma_matrix(&inst, 5.0, 10_000_000, false).unwrap().gamma;
        for (lo, hi) in [(&g1, &g2), (&g2, &g5)] {
            let diff = hi.sub(lo).unwrap();
            let psd = diff.psd_check(1e-9);
            assert!(psd.passes, "min eigenvalue {}", psd.min_eigenvalue);
        }
    }

    #[test]
    fn scaled_prior_information_follows_the_scaling_identity() {
        let inst = gaussian_instance(vec![3.0], vec![1_000_000]);
        let c = 3.0;
        let n = 1_000_000u64;
        let scaled = inst.scaled_prior(c, n).unwrap();
        let info = scaled.information().unwrap().matrix.get(0, 0);
        let expect = (n as f64 / (c * c)) * inst.base_prior_information().get(0, 0);
        assert!(
            (info - expect).abs() <= 1e-6 * expect,
            "info {info} expect {expect}"
        );
    }

    #[test]
    fn lam_bound_oracles() {
        // Scalar Gaussian: limit 1, finite value 1/(1 + 10/c^2).
        let inst = gaussian_instance(vec![10.0], vec![10_000_000]);
        let lb = lam_bound(&inst).unwrap();
        assert_abs_diff_eq!(lb.limit.value, 1.0, epsilon = 1e-8);
        assert!(!lb.limit.fisher_singular);
        assert_abs_diff_eq!(lb.rows[0].bound, 1.0 / 1.1, epsilon = 1e-8);

        // Bernoulli at 1/2: limit is theta(1-theta) = 1/4.
        let m = mf::bernoulli().unwrap();
        let inst = lam_instance(
            &m,
            &[0.5],
            TargetFunction::identity(1),
            QuadraticForm::squared_norm(1).unwrap(),
            vec![1.0],
            vec![100_000],
            None,
        )
        .unwrap();
        let lb = lam_bound(&inst).unwrap();
        assert_abs_diff_eq!(lb.limit.value, 0.25, epsilon = 1e-8);

        // Plane Gaussian with the squared norm: limit is the trace of the
        // identity.
        let m = mf::gaussian_location_2d_fine(-1.2, 1.2, 121).unwrap();
        let inst = lam_instance(
            &m,
            &[0.0, 0.0],
            TargetFunction::identity(2),
            QuadraticForm::squared_norm(2).unwrap(),
            vec![1.0],
            vec![10_000],
            None,
        )
        .unwrap();
        let lb = lam_bound(&inst).unwrap();
        assert_abs_diff_eq!(lb.limit.value, 2.0, epsilon = 1e-8);
    }

    #[test]
    fn singular_fisher_sends_the_limit_to_infinity() {
        let m = mf::degenerate_location_2d().unwrap();
        let inst = lam_instance(
            &m,
            &[0.0, 0.0],
            TargetFunction::identity(2),
            QuadraticForm::squared_norm(2).unwrap(),
            vec![5.0, 10.0],
            vec![100_000],
            None,
        )
        .unwrap();
        let lb = lam_bound(&inst).unwrap();
        assert!(lb.limit.fisher_singular);
        assert!(lb.limit.value.is_infinite());
        // Finite-(c, n) bounds stay finite: the prior term regularizes.
        assert!(lb.rows.iter().all(|r| r.bound.is_finite()));
    }

    #[test]
    fn singular_probe_blows_up_quadratically() {
        let m = mf::degenerate_location_2d().unwrap();
        let inst = lam_instance(
            &m,
            &[0.0, 0.0],
            TargetFunction::identity(2),
            QuadraticForm::squared_norm(2).unwrap(),
            vec![5.0, 10.0],
            vec![100_000],
            None,
        )
        .unwrap();
        let probe = singular_probe(&inst, &[0.0, 1.0], 1.0).unwrap();
        assert_eq!(probe.rows.len(), 2);
        // Gamma along the kernel is c^2 / I_H with I_H = 20 here.
        let (c1, b1) = probe.rows[0];
        let (c2, b2) = probe.rows[1];
        assert_abs_diff_eq!(b1, c1 * c1 / 20.0, epsilon = 1e-6);
        let ratio = b2 / b1;
        assert!((c2 / c1 - 2.0).abs() < 1e-12);
        assert!(
            (3.6..=4.4).contains(&ratio),
            "doubling c gave ratio {ratio}"
        );

        // A direction the model does identify is refused.
        assert!(matches!(
            singular_probe(&inst, &[1.0, 0.0], 1.0),
            Err(Error::Misuse(_))
        ));
    }

    #[test]
    fn sample_mean_attains_the_limit_bound() {
        let inst = gaussian_instance(vec![1.0], vec![100]);
        let mc = McConfig {
            seed: 7,
            draws: 4000,
            grid_per_axis: 10,
        };
        let rows = minimax_table(&inst, |n| Ok(sample_mean(n, 1)), &mc).unwrap();
        assert_eq!(rows.len(), 1);
        let row = &rows[0];
        // The normalized risk of the mean is exactly 1 at every theta.
        assert!(
            (row.risk - 1.0).abs() <= 3.0 * row.se,
            "risk {} se {}",
            row.risk,
            row.se
        );
        assert!((row.bound_limit - 1.0).abs() <= 1e-8);
        assert!(row.risk + 3.0 * row.se >= row.bound_finite);
        assert!(row.theta_argmax[0].abs() <= 0.1 + 1e-12);
    }

    #[test]
    fn bernoulli_proportion_risk_near_the_variance_bound() {
        let m = mf::bernoulli().unwrap();
        let inst = lam_instance(
            &m,
            &[0.5],
            TargetFunction::identity(1),
            QuadraticForm::squared_norm(1).unwrap(),
            vec![2.0],
            vec![400],
            None,
        )
        .unwrap();
        let mc = McConfig {
            seed: 21,
            draws: 5000,
            grid_per_axis: 10,
        };
        let mm = local_minimax_risk(&inst, 2.0, 400, &sample_mean(400, 1), &mc).unwrap();
        assert!(
            (mm.risk - 0.25).abs() <= 3.0 * mm.se,
            "risk {} se {}",
            mm.risk,
            mm.se
        );
    }

    #[test]
    fn constant_estimator_risk_grows_with_the_ball() {
        let inst = gaussian_instance(vec![1.5, 3.0], vec![1000]);
        let mc = McConfig {
            seed: 3,
            draws: 100,
            grid_per_axis: 10,
        };
        let zero = Statistic::constant(vec![0.0]);
        let risk_at = |c: f64| local_minimax_risk(&inst, c, 1000, &zero, &mc).unwrap();
        let a = risk_at(1.5);
        let b = risk_at(3.0);
        // Deterministic risk n (theta - theta0)^2, maximal at the ball edge.
        assert_abs_diff_eq!(a.risk, 1.5 * 1.5, epsilon = 1e-9);
        assert_abs_diff_eq!(b.risk, 3.0 * 3.0, epsilon = 1e-9);
        assert!(a.se == 0.0 && b.se == 0.0);
        assert_abs_diff_eq!(b.argmax[0].abs(), 3.0 / 1000f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn monte_carlo_guards() {
        let inst = gaussian_instance(vec![1.0], vec![100]);
        let mc = McConfig {
            seed: 1,
            draws: 10,
            grid_per_axis: 10,
        };
        assert!(matches!(
            local_minimax_risk(&inst, 1.0, 100, &sample_mean(100, 1), &mc),
            Err(Error::Misuse(_))
        ));
        let bad_grid = McConfig {
            seed: 1,
            draws: 500,
            grid_per_axis: 0,
        };
        assert!(matches!(
            local_minimax_risk(&inst, 1.0, 100, &sample_mean(100, 1), &bad_grid),
            Err(Error::Misuse(_))
        ));
    }

    #[test]
    fn grid_coupling_and_interior_point_are_enforced() {
        let m = mf::gaussian_location(1.0).unwrap();
        // n too small for the largest c.
        let err = lam_instance(
            &m,
            &[0.0],
            TargetFunction::identity(1),
            QuadraticForm::squared_norm(1).unwrap(),
            vec![10.0],
            vec![100],
            None,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Misuse(_)));

        let mb = mf::bernoulli().unwrap();
        let err = lam_instance(
            &mb,
            &[0.0],
            TargetFunction::identity(1),
            QuadraticForm::squared_norm(1).unwrap(),
            vec![1.0],
            vec![1000],
            None,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Misuse(_)));
    }

    #[test]
    fn long_format_csv_shape() {
        let row = LamRow {
            c: 1.0,
            n: 100,
            theta_argmax: vec![0.05],
            risk: 1.01,
            se: 0.02,
            bound_finite: 0.9,
            bound_limit: 1.0,
            loss_id: "squared-norm".into(),
            seed: 42,
        };
        let csv = lam_rows_csv(1, &[row]);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "c,n,theta_argmax_0,risk,se,bound_finite,bound_limit,loss_id,seed"
        );
        let data = lines.next().unwrap();
        assert_eq!(data.split(',').count(), 9);
        assert!(data.starts_with("1.0000000000000000e0,100,"));
        assert!(data.ends_with(",squared-norm,42"));
    }
}
