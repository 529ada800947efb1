//! JSON run configuration with a versioned schema.
//!
//! Unknown keys are rejected outright: a silently ignored misspelling would
//! change results without a trace, which is fatal for reproducibility. All
//! run state lives here; the CLI flags only override the seed, output
//! directory and format.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use crate::bounds::TargetFunction;
use crate::error::{Error, Result};
use crate::model::{families as mf, tabulated, Model, Statistic};
use crate::numerics::{Grid1D, GridP};
use crate::prior::{families as pf, posterior_mean, Prior, PriorDensityFn};

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u64,
    /// Optional task pin; when present it must match the task on the
    /// command line.
    #[serde(default)]
    pub task: Option<String>,
    pub model: ModelConfig,
    #[serde(default)]
    pub prior: Option<PriorConfig>,
    #[serde(default)]
    pub target: Option<TargetConfig>,
    #[serde(default)]
    pub estimator: Option<EstimatorConfig>,
    #[serde(default)]
    pub theta0: Option<Vec<f64>>,
    #[serde(default)]
    pub lam: Option<LamConfig>,
    #[serde(default)]
    pub numeric: NumericConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

impl RunConfig {
    /// Minimal configuration for running the check suite outside the CLI;
    /// the model block is a placeholder since every check picks its own
    /// fixtures.
    pub fn default_for_checks() -> RunConfig {
        RunConfig {
            schema_version: SCHEMA_VERSION,
            task: None,
            model: ModelConfig {
                family: "gaussian_location".into(),
                sigma: None,
                file: None,
                x_lo: None,
                x_hi: None,
                nodes: None,
            },
            prior: None,
            target: None,
            estimator: None,
            theta0: None,
            lam: None,
            numeric: NumericConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// gaussian_location | gaussian_location_2d | bernoulli | exponential |
    /// triangular_location | gaussian_mean_log_sigma | degenerate_location_2d
    /// | tabulated
    pub family: String,
    #[serde(default)]
    pub sigma: Option<f64>,
    /// Tabulated density file; see the tabulated model docs for the layout.
    #[serde(default)]
    pub file: Option<PathBuf>,
    #[serde(default)]
    pub x_lo: Option<f64>,
    #[serde(default)]
    pub x_hi: Option<f64>,
    #[serde(default)]
    pub nodes: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorConfig {
    /// raised_cosine | quartic_bump | product_quartic_bump | gaussian |
    /// uniform_interval | tabulated
    pub family: String,
    #[serde(default)]
    pub center: Option<f64>,
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default)]
    pub mean: Option<f64>,
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default)]
    pub nodes: Option<usize>,
    /// Dimension for product families centered at the origin.
    #[serde(default)]
    pub dim: Option<usize>,
    #[serde(default)]
    pub center_vec: Option<Vec<f64>>,
    #[serde(default)]
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    /// identity | clamped_identity | constant
    pub kind: String,
    #[serde(default)]
    pub level: Option<f64>,
    #[serde(default)]
    pub values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    /// posterior_mean | identity | constant | sample_mean
    pub kind: String,
    #[serde(default)]
    pub values: Option<Vec<f64>>,
    /// Declared sup bound for the raw-observation estimator, making it
    /// eligible for the bounded-statistic identities.
    #[serde(default)]
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LamConfig {
    pub c_grid: Vec<f64>,
    pub n_grid: Vec<u64>,
    #[serde(default)]
    pub neighborhood: Option<f64>,
    /// squared_norm (default) | rank_one with `direction`
    #[serde(default)]
    pub loss: Option<String>,
    #[serde(default)]
    pub direction: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericConfig {
    /// Required for any task that draws random numbers.
    pub seed: Option<u64>,
    pub mc_draws: usize,
    pub grid_per_axis: usize,
    /// Quadratic-mean certification steps; a built-in ladder when absent.
    pub dqm_steps: Option<Vec<f64>>,
    /// Multiplier on the grid resolutions used by the check suite's
    /// residual rows; 0.5 halves them.
    pub grid_scale: f64,
    /// Multiplier on the residual thresholds of the check suite, for runs
    /// that deliberately coarsen grids.
    pub threshold_relax: f64,
}

impl Default for NumericConfig {
    fn default() -> Self {
        NumericConfig {
            seed: None,
            mc_draws: 20_000,
            grid_per_axis: 10,
            dqm_steps: None,
            grid_scale: 1.0,
            threshold_relax: 1.0,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    /// csv | json | both (default both)
    pub format: Option<String>,
}

/// Parses a config file; syntax errors carry the line and column.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let config: RunConfig = serde_json::from_str(&text).map_err(|e| {
        // serde_json appends its own "at line L column C"; the prefix alone
        // anchors the message.
        let msg = e.to_string();
        let msg = msg.split(" at line ").next().unwrap_or(&msg).to_string();
        Error::Config(format!(
            "{}:{}:{}: {msg}",
            path.display(),
            e.line(),
            e.column()
        ))
    })?;
    if config.schema_version != SCHEMA_VERSION {
        return Err(Error::Config(format!(
            "schema_version {} is not supported; this build reads version {SCHEMA_VERSION}",
            config.schema_version
        )));
    }
    for file in [
        config.model.file.as_ref(),
        config.prior.as_ref().and_then(|p| p.file.as_ref()),
    ]
    .into_iter()
    .flatten()
    {
        if !file.exists() {
            return Err(Error::Config(format!(
                "referenced file {} does not exist",
                file.display()
            )));
        }
    }
    if config.numeric.mc_draws == 0 {
        return Err(Error::Config("numeric.mc_draws must be positive".into()));
    }
    if !(config.numeric.grid_scale > 0.0) || !config.numeric.grid_scale.is_finite() {
        return Err(Error::Config("numeric.grid_scale must be positive".into()));
    }
    if !(config.numeric.threshold_relax >= 1.0) {
        return Err(Error::Config(
            "numeric.threshold_relax must be at least 1 (thresholds only relax)".into(),
        ));
    }
    Ok(config)
}

pub fn build_model(cfg: &ModelConfig) -> Result<Model> {
    let need = |opt: Option<f64>, name: &str| {
        opt.ok_or_else(|| Error::Config(format!("model family '{}' needs '{name}'", cfg.family)))
    };
    match cfg.family.as_str() {
        "gaussian_location" => {
            let sigma = cfg.sigma.unwrap_or(1.0);
            match (cfg.x_lo, cfg.x_hi, cfg.nodes) {
                (None, None, None) => mf::gaussian_location(sigma),
                (lo, hi, nodes) => mf::gaussian_location_fine(
                    sigma,
                    lo.unwrap_or(-8.0),
                    hi.unwrap_or(8.0),
                    nodes.unwrap_or(20_001),
                ),
            }
        }
        "gaussian_location_2d" => match (cfg.x_lo, cfg.x_hi, cfg.nodes) {
            (None, None, None) => mf::gaussian_location_2d(),
            (lo, hi, nodes) => mf::gaussian_location_2d_fine(
                lo.unwrap_or(-1.2),
                hi.unwrap_or(1.2),
                nodes.unwrap_or(161),
            ),
        },
        "bernoulli" => mf::bernoulli(),
        "exponential" => match (cfg.x_hi, cfg.nodes) {
            (None, None) => mf::exponential(),
            (hi, nodes) => mf::exponential_fine(need(hi, "x_hi")?, nodes.unwrap_or(4001)),
        },
        "triangular_location" => mf::triangular_location(),
        "gaussian_mean_log_sigma" => mf::gaussian_mean_log_sigma(),
        "degenerate_location_2d" => mf::degenerate_location_2d(),
        "tabulated" => {
            let file = cfg
                .file
                .as_ref()
                .ok_or_else(|| Error::Config("model family 'tabulated' needs 'file'".into()))?;
            tabulated::load_model(file)
        }
        other => Err(Error::Config(format!(
            "unknown model family '{other}'; known: gaussian_location, gaussian_location_2d, \
             bernoulli, exponential, triangular_location, gaussian_mean_log_sigma, \
             degenerate_location_2d, tabulated"
        ))),
    }
}

pub fn build_prior(cfg: &PriorConfig) -> Result<Prior> {
    let need = |opt: Option<f64>, name: &str| {
        opt.ok_or_else(|| Error::Config(format!("prior family '{}' needs '{name}'", cfg.family)))
    };
    match cfg.family.as_str() {
        "raised_cosine" => {
            pf::raised_cosine(need(cfg.center, "center")?, need(cfg.radius, "radius")?)
        }
        "quartic_bump" => {
            let center = need(cfg.center, "center")?;
            let radius = need(cfg.radius, "radius")?;
            match cfg.nodes {
                Some(n) => pf::quartic_bump_with_nodes(center, radius, n),
                None => pf::quartic_bump(center, radius),
            }
        }
        "product_quartic_bump" => {
            let radius = need(cfg.radius, "radius")?;
            let center = match (&cfg.center_vec, cfg.dim) {
                (Some(center), _) => center.clone(),
                (None, Some(dim)) => vec![0.0; dim],
                (None, None) => {
                    return Err(Error::Config(
                        "prior family 'product_quartic_bump' needs 'dim' or 'center_vec'".into(),
                    ))
                }
            };
            match cfg.nodes {
                Some(n) => pf::product_quartic_bump_with_nodes(&center, radius, n),
                None => pf::product_quartic_bump_at(&center, radius),
            }
        }
        "gaussian" => pf::gaussian(cfg.mean.unwrap_or(0.0), need(cfg.tau, "tau")?),
        "uniform_interval" => {
            pf::uniform_interval(need(cfg.center, "center")?, need(cfg.radius, "radius")?)
        }
        "tabulated" => {
            let file = cfg
                .file
                .as_ref()
                .ok_or_else(|| Error::Config("prior family 'tabulated' needs 'file'".into()))?;
            load_tabulated_prior(file)
        }
        other => Err(Error::Config(format!(
            "unknown prior family '{other}'; known: raised_cosine, quartic_bump, \
             product_quartic_bump, gaussian, uniform_interval, tabulated"
        ))),
    }
}

/// A one-dimensional prior from a tabulated density file.
///
/// The file uses the same layout as a tabulated model with exactly one data
/// row: the header's nodes are read as theta values and the row holds the
/// density at each node (the row's leading label is ignored). Between nodes
/// the density interpolates linearly; mass is renormalized to one on load.
pub fn load_tabulated_prior(path: &Path) -> Result<Prior> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| Error::Config(format!("{}: empty prior table", path.display())))?;
    let mut cells = header.split(',');
    match cells.next() {
        Some(c) if c.trim() == "theta" => {}
        other => {
            return Err(Error::Config(format!(
                "{}: prior table header must start with 'theta', got {other:?}",
                path.display()
            )))
        }
    }
    let nodes: Vec<f64> = cells
        .map(|c| c.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Config(format!("{}: bad theta node: {e}", path.display())))?;
    if nodes.len() < 3 || nodes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(format!(
            "{}: prior table needs at least 3 strictly increasing theta nodes",
            path.display()
        )));
    }
    let row = lines
        .next()
        .ok_or_else(|| Error::Config(format!("{}: prior table has no data row", path.display())))?;
    if lines.next().is_some() {
        return Err(Error::Config(format!(
            "{}: a prior table holds exactly one density row",
            path.display()
        )));
    }
    let values: Vec<f64> = row
        .split(',')
        .skip(1)
        .map(|c| c.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Config(format!("{}: bad density value: {e}", path.display())))?;
    if values.len() != nodes.len() {
        return Err(Error::Config(format!(
            "{}: {} density values for {} nodes",
            path.display(),
            values.len(),
            nodes.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Config(format!(
            "{}: density values must be finite and nonnegative",
            path.display()
        )));
    }

    // Trapezoid mass of the piecewise-linear interpolant, for renormalizing.
    let mut mass = 0.0;
    for i in 0..nodes.len() - 1 {
        mass += 0.5 * (values[i] + values[i + 1]) * (nodes[i + 1] - nodes[i]);
    }
    if !(mass > 0.0) {
        return Err(Error::Config(format!(
            "{}: prior table has zero mass",
            path.display()
        )));
    }
    let lo = nodes[0];
    let hi = *nodes.last().unwrap();
    let nodes = Arc::new(nodes);
    let values = Arc::new(values);
    let (n, v) = (nodes.clone(), values.clone());
    let density: PriorDensityFn = Arc::new(move |theta: &[f64]| {
        let t = theta[0];
        if t <= n[0] || t >= *n.last().unwrap() {
            return 0.0;
        }
        let idx = match n.binary_search_by(|probe| probe.total_cmp(&t)) {
            Ok(i) => return v[i] / mass,
            Err(i) => i - 1,
        };
        let w = (t - n[idx]) / (n[idx + 1] - n[idx]);
        ((1.0 - w) * v[idx] + w * v[idx + 1]) / mass
    });
    // Integration on the table's own nodes keeps the interpolant exact.
    let grid = if is_uniform(&nodes) {
        Grid1D::uniform_trapezoid(lo, hi, nodes.len())?
    } else {
        return Err(Error::Config(format!(
            "{}: prior table nodes must be uniformly spaced",
            path.display()
        )));
    };
    Prior::new(
        format!("tabulated[{}]", path.display()),
        vec![lo],
        vec![hi],
        GridP::from_axis(grid),
        density,
    )
}

fn is_uniform(nodes: &[f64]) -> bool {
    let h = (nodes[nodes.len() - 1] - nodes[0]) / (nodes.len() - 1) as f64;
    let span = nodes[nodes.len() - 1] - nodes[0];
    nodes
        .windows(2)
        .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * span)
}

pub fn build_target(cfg: Option<&TargetConfig>, p: usize) -> Result<TargetFunction> {
    let Some(cfg) = cfg else {
        return Ok(TargetFunction::identity(p));
    };
    match cfg.kind.as_str() {
        "identity" => Ok(TargetFunction::identity(p)),
        "clamped_identity" => {
            let level = cfg.level.ok_or_else(|| {
                Error::Config("target kind 'clamped_identity' needs 'level'".into())
            })?;
            if !(level > 0.0) {
                return Err(Error::Config("target level must be positive".into()));
            }
            Ok(TargetFunction::clamped_identity(p, level))
        }
        "constant" => {
            let values = cfg
                .values
                .clone()
                .ok_or_else(|| Error::Config("target kind 'constant' needs 'values'".into()))?;
            Ok(TargetFunction::constant(p, values))
        }
        other => Err(Error::Config(format!(
            "unknown target kind '{other}'; known: identity, clamped_identity, constant"
        ))),
    }
}

/// Builds the estimator statistic for single-observation tasks. The default
/// is the posterior mean when a prior is on hand, otherwise the raw
/// observation.
pub fn build_statistic(
    cfg: Option<&EstimatorConfig>,
    model: &Model,
    prior: Option<&Prior>,
) -> Result<Statistic> {
    let kind = cfg.map(|c| c.kind.as_str()).unwrap_or(match prior {
        Some(_) => "posterior_mean",
        None => "identity",
    });
    match kind {
        "posterior_mean" => {
            let prior = prior.ok_or_else(|| {
                Error::Config("estimator 'posterior_mean' needs a prior block".into())
            })?;
            posterior_mean(model, prior)
        }
        "identity" => {
            let d = model.sample_dim();
            let stat = Statistic::from_fn("raw-observation", d, |x, out| {
                out.copy_from_slice(x);
            });
            Ok(match cfg.and_then(|c| c.bound) {
                Some(b) => stat.with_bound(b),
                None => stat,
            })
        }
        "constant" => {
            let values = cfg
                .and_then(|c| c.values.clone())
                .ok_or_else(|| Error::Config("estimator kind 'constant' needs 'values'".into()))?;
            Ok(Statistic::constant(values))
        }
        "sample_mean" => Err(Error::Config(
            "estimator 'sample_mean' is only meaningful for the lam task".into(),
        )),
        other => Err(Error::Config(format!(
            "unknown estimator kind '{other}'; known: posterior_mean, identity, constant, \
             sample_mean"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    #[test]
    fn minimal_config_parses_with_defaults() {
        let f = write_tmp(
            r#"{"schema_version":1,"model":{"family":"gaussian_location"},"theta0":[0.0]}"#,
        );
        let cfg = load_config(f.path()).unwrap();
        assert_eq!(cfg.numeric.mc_draws, 20_000);
        assert_eq!(cfg.numeric.grid_per_axis, 10);
        assert!(cfg.prior.is_none());
        assert!(build_model(&cfg.model).is_ok());
    }

    #[test]
    fn unknown_keys_are_rejected_with_position() {
        let f = write_tmp(r#"{"schema_version":1,"model":{"family":"bernoulli","sgima":1.0}}"#);
        let err = load_config(f.path()).unwrap_err();
        match err {
            Error::Config(msg) => {
                assert!(msg.contains("sgima"), "{msg}");
                assert!(msg.contains(':'), "{msg}");
            }
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn wrong_schema_version_and_missing_file_are_config_errors() {
        let f = write_tmp(r#"{"schema_version":99,"model":{"family":"bernoulli"}}"#);
        assert!(matches!(load_config(f.path()), Err(Error::Config(_))));

        let f = write_tmp(
            r#"{"schema_version":1,"model":{"family":"tabulated","file":"/nonexistent/t.csv"}}"#,
        );
        let err = load_config(f.path()).unwrap_err();
        match err {
            Error::Config(msg) => assert!(msg.contains("does not exist"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn family_dispatch_and_unknown_names() {
        for family in [
            "gaussian_location",
            "bernoulli",
            "exponential",
            "triangular_location",
            "degenerate_location_2d",
        ] {
            let cfg = ModelConfig {
                family: family.into(),
                sigma: None,
                file: None,
                x_lo: None,
                x_hi: None,
                nodes: None,
            };
            assert!(build_model(&cfg).is_ok(), "{family}");
        }
        let cfg = ModelConfig {
            family: "cauchy".into(),
            sigma: None,
            file: None,
            x_lo: None,
            x_hi: None,
            nodes: None,
        };
        assert!(matches!(build_model(&cfg), Err(Error::Config(_))));

        let pcfg = PriorConfig {
            family: "quartic_bump".into(),
            center: Some(0.0),
            radius: Some(1.0),
            mean: None,
            tau: None,
            nodes: None,
            dim: None,
            center_vec: None,
            file: None,
        };
        let q = build_prior(&pcfg).unwrap();
        assert!((q.information().unwrap().matrix.get(0, 0) - 10.0).abs() < 1e-8);

        let missing = PriorConfig {
            radius: None,
            ..pcfg
        };
        assert!(matches!(build_prior(&missing), Err(Error::Config(_))));
    }

    #[test]
    fn tabulated_prior_round_trips_a_triangle_density() {
        // Triangle on (-1, 1): q(t) = 1 - |t|, already unit mass. The
        // interpolant reproduces it exactly, including after renormalizing.
        let n = 2001;
        let mut header = String::from("theta");
        let mut row = String::from("q");
        for i in 0..n {
            let t = -1.0 + 2.0 * i as f64 / (n - 1) as f64;
            header.push_str(&format!(",{t:.12}"));
            row.push_str(&format!(",{:.12}", 1.0 - t.abs()));
        }
        let f = write_tmp(&format!("{header}\n{row}\n"));
        let q = load_tabulated_prior(f.path()).unwrap();
        assert!((q.density_at(&[0.25]) - 0.75).abs() < 1e-9);
        assert!((q.normalization() - 1.0).abs() < 1e-9);
        assert_eq!(q.density_at(&[-1.0]), 0.0);
        // Kinked density: information = int q'^2/q = 2 int_0^1 1/(1-t) dt
        // diverges; the support mask keeps it finite but large.
        assert!(q.information().unwrap().matrix.get(0, 0) > 10.0);
    }

    #[test]
    fn tabulated_prior_rejects_malformed_tables() {
        for text in [
            "",
            "x,0,1\nq,1,1\n",
            "theta,0.0,0.5,1.0\nq,1.0,1.0\n",
            "theta,0.0,0.5,1.0\nq,1.0,1.0,1.0\nq,1.0,1.0,1.0\n",
            "theta,0.0,0.5,0.4\nq,1.0,1.0,1.0\n",
            "theta,0.0,0.5,1.0\nq,1.0,-1.0,1.0\n",
            "theta,0.0,0.4,1.0\nq,1.0,1.0,1.0\n",
        ] {
            let f = write_tmp(text);
            assert!(
                matches!(load_tabulated_prior(f.path()), Err(Error::Config(_))),
                "accepted: {text:?}"
            );
        }
    }

    #[test]
    fn statistic_defaults_follow_the_available_blocks() {
        let m = mf::gaussian_location(1.0).unwrap();
        let q = pf::quartic_bump(0.0, 1.0).unwrap();
        let s = build_statistic(None, &m, Some(&q)).unwrap();
        assert_eq!(s.name(), "posterior-mean");
        let s = build_statistic(None, &m, None).unwrap();
        assert_eq!(s.name(), "raw-observation");
        assert!(s.bound().is_none());

        let cfg = EstimatorConfig {
            kind: "identity".into(),
            values: None,
            bound: Some(9.0),
        };
        let s = build_statistic(Some(&cfg), &m, None).unwrap();
        assert_eq!(s.bound(), Some(9.0));
    }
}
