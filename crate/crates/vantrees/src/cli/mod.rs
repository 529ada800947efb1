//! Configuration-driven command line: one task per invocation, JSON and CSV
//! artifacts on disk, and exit codes that separate bad requests (1) from
//! failed numerical contracts (2).

pub mod check;
pub mod config;

use std::path::{Path, PathBuf};

use crate::bounds::report::{json_float, json_str};
use crate::bounds::{
    bayes_risk, fmt_float, van_trees_1d, van_trees_corollary, van_trees_matrix, BoundReport,
    RiskMode,
};
use crate::error::{Error, Result};
use crate::joint::{build_joint, van_trees_as_cramer_rao};
use crate::lam::{
    lam_instance, lam_rows_csv, limit_bound, minimax_table, sample_mean, McConfig, QuadraticForm,
};
use crate::model::{Model, Statistic};
use crate::numerics::SymmetricMatrix;
use crate::prior::Prior;

pub use check::{check_all, CheckRow, CheckSuiteReport};
pub use config::{load_config, RunConfig, SCHEMA_VERSION};

use config::{build_model, build_prior, build_statistic, build_target};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Fisher,
    Dqm,
    Vt1,
    Corollary,
    Vtm,
    Joint,
    Lam,
    CheckAll,
}

impl Task {
    pub const ALL: [Task; 8] = [
        Task::Fisher,
        Task::Dqm,
        Task::Vt1,
        Task::Corollary,
        Task::Vtm,
        Task::Joint,
        Task::Lam,
        Task::CheckAll,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Task::Fisher => "fisher",
            Task::Dqm => "dqm",
            Task::Vt1 => "vt1",
            Task::Corollary => "corollary",
            Task::Vtm => "vtm",
            Task::Joint => "joint",
            Task::Lam => "lam",
            Task::CheckAll => "check-all",
        }
    }

    pub fn parse(s: &str) -> Result<Task> {
        Task::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Task::ALL.iter().map(|t| t.name()).collect();
                Error::Config(format!(
                    "unknown task '{s}'; expected one of {}",
                    names.join(", ")
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
    Both,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Result<OutputFormat> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            "both" => Ok(OutputFormat::Both),
            other => Err(Error::Config(format!(
                "unknown format '{other}'; expected csv, json or both"
            ))),
        }
    }

    fn wants_json(self) -> bool {
        matches!(self, OutputFormat::Json | OutputFormat::Both)
    }

    fn wants_csv(self) -> bool {
        matches!(self, OutputFormat::Csv | OutputFormat::Both)
    }
}

/// Serialized results of one task, before anything touches the filesystem.
#[derive(Debug, Clone)]
pub struct TaskArtifacts {
    pub json: String,
    pub csv: String,
    pub summary: String,
    /// False when a checked inequality failed but artifacts could still be
    /// produced; the run then exits with code 2.
    pub contracts_ok: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub artifacts: Vec<PathBuf>,
    pub summary: String,
}

pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::ContractViolation(_) | Error::Numerical(_) => 2,
        _ => 1,
    }
}

fn json_vec(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|&x| json_float(x)).collect();
    format!("[{}]", items.join(","))
}

fn json_matrix(m: &SymmetricMatrix) -> String {
    let d = m.dim();
    let rows: Vec<String> = (0..d)
        .map(|i| {
            let row: Vec<String> = (0..d).map(|j| json_float(m.get(i, j))).collect();
            format!("[{}]", row.join(","))
        })
        .collect();
    format!("[{}]", rows.join(","))
}

fn matrix_csv(m: &SymmetricMatrix) -> String {
    let mut out = String::from("row,col,value\n");
    for i in 0..m.dim() {
        for j in 0..m.dim() {
            out.push_str(&format!("{i},{j},{}\n", fmt_float(m.get(i, j))));
        }
    }
    out
}

/// Model plus optional prior, with the cross-block dimension invariant
/// enforced up front.
fn paired_inputs(config: &RunConfig) -> Result<(Model, Option<Prior>)> {
    let model = build_model(&config.model)?;
    let prior = match &config.prior {
        Some(cfg) => {
            let q = build_prior(cfg)?;
            if q.dim() != model.param_dim() {
                return Err(Error::Config(format!(
                    "dimension mismatch: model '{}' has {} parameter(s) but the prior '{}' is \
                     {}-dimensional",
                    model.name(),
                    model.param_dim(),
                    q.name(),
                    q.dim()
                )));
            }
            Some(q)
        }
        None => None,
    };
    Ok((model, prior))
}

fn required_prior(config: &RunConfig, task: Task) -> Result<(Model, Prior)> {
    let (model, prior) = paired_inputs(config)?;
    let prior =
        prior.ok_or_else(|| Error::Config(format!("task {} needs a prior block", task.name())))?;
    Ok((model, prior))
}

fn required_theta0(config: &RunConfig, model: &Model, task: Task) -> Result<Vec<f64>> {
    let theta0 = config
        .theta0
        .clone()
        .ok_or_else(|| Error::Config(format!("task {} needs theta0", task.name())))?;
    if theta0.len() != model.param_dim() {
        return Err(Error::Config(format!(
            "dimension mismatch: theta0 has {} entries but model '{}' has {} parameter(s)",
            theta0.len(),
            model.name(),
            model.param_dim()
        )));
    }
    Ok(theta0)
}

fn check_target_statistic_dims(psi_out: usize, stat_out: usize) -> Result<()> {
    if psi_out != stat_out {
        return Err(Error::Config(format!(
            "dimension mismatch: the target produces {psi_out} component(s) but the estimator \
             produces {stat_out}"
        )));
    }
    Ok(())
}

fn run_fisher(config: &RunConfig) -> Result<TaskArtifacts> {
    let model = build_model(&config.model)?;
    let theta0 = required_theta0(config, &model, Task::Fisher)?;
    let fisher = model.fisher_information(&theta0)?;
    let ortho = model.score_orthogonality(&theta0)?;
    let json = format!(
        "{{\"task\":\"fisher\",\"model\":{},\"theta0\":{},\"fisher\":{},\"score_orthogonality\":{}}}",
        json_str(model.name()),
        json_vec(&theta0),
        json_matrix(&fisher),
        json_vec(&ortho),
    );
    let summary = format!(
        "fisher: model {} at theta0 {:?}, trace = {}",
        model.name(),
        theta0,
        fmt_float((0..fisher.dim()).map(|i| fisher.get(i, i)).sum::<f64>())
    );
    Ok(TaskArtifacts {
        json,
        csv: matrix_csv(&fisher),
        summary,
        contracts_ok: true,
    })
}

fn run_dqm(config: &RunConfig) -> Result<TaskArtifacts> {
    let model = build_model(&config.model)?;
    let theta0 = required_theta0(config, &model, Task::Dqm)?;
    let steps = config
        .numeric
        .dqm_steps
        .clone()
        .unwrap_or_else(crate::model::default_dqm_steps);
    let report = model.dqm_certify(&theta0, &steps)?;

    let fits: Vec<String> = report
        .fits
        .iter()
        .enumerate()
        .map(|(axis, fit)| {
            format!(
                "{{\"axis\":{axis},\"slope\":{},\"used\":{},\"steps\":{},\"remainders\":{}}}",
                json_float(fit.slope),
                fit.used,
                json_vec(&fit.steps),
                json_vec(&fit.residuals),
            )
        })
        .collect();
    let json = format!(
        "{{\"task\":\"dqm\",\"model\":{},\"theta0\":{},\"min_slope\":{},\"certified\":{},\"fits\":[{}]}}",
        json_str(model.name()),
        json_vec(&theta0),
        json_float(report.min_slope),
        report.certified,
        fits.join(","),
    );
    let mut csv = String::from("axis,step,remainder\n");
    for (axis, fit) in report.fits.iter().enumerate() {
        for (h, r) in fit.steps.iter().zip(&fit.residuals) {
            csv.push_str(&format!("{axis},{},{}\n", fmt_float(*h), fmt_float(*r)));
        }
    }
    let summary = format!(
        "dqm: model {} min slope {} ({})",
        model.name(),
        fmt_float(report.min_slope),
        if report.certified {
            "certified"
        } else {
            "NOT certified"
        }
    );
    Ok(TaskArtifacts {
        json,
        csv,
        summary,
        contracts_ok: report.certified,
    })
}

fn bound_task_json(
    task: Task,
    model: &Model,
    prior: &Prior,
    report: &BoundReport,
    extra: &str,
) -> String {
    format!(
        "{{\"task\":{},\"model\":{},\"prior\":{}{extra},\"report\":{}}}",
        json_str(task.name()),
        json_str(model.name()),
        json_str(prior.name()),
        report.json_string(),
    )
}

fn bound_csv(report: &BoundReport) -> String {
    format!("{}\n{}\n", BoundReport::csv_header(), report.csv_row())
}

fn run_vt1(config: &RunConfig) -> Result<TaskArtifacts> {
    let (model, prior) = required_prior(config, Task::Vt1)?;
    let psi = build_target(config.target.as_ref(), model.param_dim())?;
    let report = van_trees_1d(&model, &prior, &psi)?;
    let bound = report.bound.as_scalar().unwrap_or(f64::NAN);
    let json = bound_task_json(Task::Vt1, &model, &prior, &report, "");
    let summary = format!("vt1: bound = {}", fmt_float(bound));
    Ok(TaskArtifacts {
        json,
        csv: bound_csv(&report),
        summary,
        contracts_ok: true,
    })
}

fn run_corollary(config: &RunConfig) -> Result<TaskArtifacts> {
    let (model, prior) = required_prior(config, Task::Corollary)?;
    let psi = build_target(config.target.as_ref(), model.param_dim())?;
    let stat = build_statistic(config.estimator.as_ref(), &model, Some(&prior))?;
    check_target_statistic_dims(psi.out_dim(), stat.out_dim())?;
    let report = van_trees_corollary(&model, &prior, &psi, &stat)?;
    let bound = report.bound.as_scalar().unwrap_or(f64::NAN);
    let risk = bayes_risk(&model, &prior, &psi, &stat, RiskMode::Quadrature)?.scalar();
    // The bound is a floor on this exact risk; a deficit is a broken
    // contract, not a config problem.
    let slack = 1e-8 * risk.abs().max(1.0);
    let contracts_ok = risk + slack >= bound;
    let extra = format!(
        ",\"estimator\":{},\"bayes_risk\":{},\"risk_minus_bound\":{}",
        json_str(stat.name()),
        json_float(risk),
        json_float(risk - bound),
    );
    let json = bound_task_json(Task::Corollary, &model, &prior, &report, &extra);
    let summary = format!(
        "corollary: bound = {} risk = {}{}",
        fmt_float(bound),
        fmt_float(risk),
        if contracts_ok {
            ""
        } else {
            " (risk fell below the bound)"
        }
    );
    Ok(TaskArtifacts {
        json,
        csv: bound_csv(&report),
        summary,
        contracts_ok,
    })
}

fn run_vtm(config: &RunConfig) -> Result<TaskArtifacts> {
    let (model, prior) = required_prior(config, Task::Vtm)?;
    let psi = build_target(config.target.as_ref(), model.param_dim())?;
    let stat = build_statistic(config.estimator.as_ref(), &model, Some(&prior))?;
    check_target_statistic_dims(psi.out_dim(), stat.out_dim())?;
    let vtm = van_trees_matrix(&model, &prior, &psi, &stat)?;
    let contracts_ok = vtm.block_psd.passes && vtm.gap_psd.passes;
    let extra = format!(
        ",\"estimator\":{},\"schur\":{},\"block_min_eigenvalue\":{},\"gap_min_eigenvalue\":{},\"pseudo_inverse_dropped\":{}",
        json_str(stat.name()),
        json_matrix(&vtm.schur),
        json_float(vtm.block_psd.min_eigenvalue),
        json_float(vtm.gap_psd.min_eigenvalue),
        vtm.pseudo_inverse_dropped,
    );
    let json = bound_task_json(Task::Vtm, &model, &prior, &vtm.report, &extra);
    let summary = format!(
        "vtm: schur trace = {} block min eig = {} gap min eig = {}{}",
        fmt_float(
            (0..vtm.schur.dim())
                .map(|i| vtm.schur.get(i, i))
                .sum::<f64>()
        ),
        fmt_float(vtm.block_psd.min_eigenvalue),
        fmt_float(vtm.gap_psd.min_eigenvalue),
        if contracts_ok {
            ""
        } else {
            " (PSD contract failed)"
        }
    );
    Ok(TaskArtifacts {
        json,
        csv: bound_csv(&vtm.report),
        summary,
        contracts_ok,
    })
}

fn run_joint(config: &RunConfig) -> Result<TaskArtifacts> {
    let (model, prior) = required_prior(config, Task::Joint)?;
    let psi = build_target(config.target.as_ref(), model.param_dim())?;
    let stat = build_statistic(config.estimator.as_ref(), &model, Some(&prior))?;
    check_target_statistic_dims(psi.out_dim(), stat.out_dim())?;
    let joint = build_joint(&model, &prior, None)?;
    let cmp = van_trees_as_cramer_rao(&joint, &stat, &psi)?;
    let json = format!(
        "{{\"task\":\"joint\",\"model\":{},\"prior\":{},\"estimator\":{},\"shift_margin\":{},\
         \"fisher_joint\":{},\"fisher_split\":{},\"gamma_zero\":{},\"gamma_slope\":{},\
         \"int_psi_prime_dQ\":{},\"cr_bound\":{},\"corollary_bound\":{},\"mean_square_j\":{}}}",
        json_str(model.name()),
        json_str(prior.name()),
        json_str(stat.name()),
        json_float(joint.delta()),
        json_float(cmp.fisher_joint),
        json_float(cmp.fisher_split),
        json_float(cmp.gamma_zero),
        json_float(cmp.gamma_slope),
        json_float(cmp.int_psi_prime_dq),
        json_float(cmp.cr_bound),
        json_float(cmp.corollary_bound),
        json_float(cmp.mean_square_j),
    );
    let csv = format!(
        "fisher_joint,fisher_split,gamma_zero,gamma_slope,int_psi_prime_dQ,cr_bound,corollary_bound,mean_square_j\n{}\n",
        [
            cmp.fisher_joint,
            cmp.fisher_split,
            cmp.gamma_zero,
            cmp.gamma_slope,
            cmp.int_psi_prime_dq,
            cmp.cr_bound,
            cmp.corollary_bound,
            cmp.mean_square_j,
        ]
        .map(fmt_float)
        .join(",")
    );
    let summary = format!(
        "joint: pointwise bound {} vs averaged bound {}",
        fmt_float(cmp.cr_bound),
        fmt_float(cmp.corollary_bound)
    );
    Ok(TaskArtifacts {
        json,
        csv,
        summary,
        contracts_ok: true,
    })
}

fn run_lam(config: &RunConfig) -> Result<TaskArtifacts> {
    let lam_cfg = config
        .lam
        .as_ref()
        .ok_or_else(|| Error::Config("task lam needs a lam block with c_grid and n_grid".into()))?;
    let seed = config.numeric.seed.ok_or_else(|| {
        Error::Config("task lam draws Monte Carlo samples; set numeric.seed or pass --seed".into())
    })?;
    let model = build_model(&config.model)?;
    let theta0 = required_theta0(config, &model, Task::Lam)?;
    let psi = build_target(config.target.as_ref(), model.param_dim())?;
    let s = psi.out_dim();
    let loss = match lam_cfg.loss.as_deref().unwrap_or("squared_norm") {
        "squared_norm" => QuadraticForm::squared_norm(s)?,
        "rank_one" => {
            let u = lam_cfg
                .direction
                .clone()
                .ok_or_else(|| Error::Config("lam loss 'rank_one' needs 'direction'".into()))?;
            if u.len() != s {
                return Err(Error::Config(format!(
                    "dimension mismatch: lam direction has {} entries, the target produces {s}",
                    u.len()
                )));
            }
            QuadraticForm::rank_one(&u)?
        }
        other => {
            return Err(Error::Config(format!(
                "unknown lam loss '{other}'; expected squared_norm or rank_one"
            )))
        }
    };
    let instance = lam_instance(
        &model,
        &theta0,
        psi,
        loss,
        lam_cfg.c_grid.clone(),
        lam_cfg.n_grid.clone(),
        lam_cfg.neighborhood,
    )?;

    let d = model.sample_dim();
    let estimator_kind = config
        .estimator
        .as_ref()
        .map(|c| c.kind.as_str())
        .unwrap_or("sample_mean");
    let constant_values = config.estimator.as_ref().and_then(|c| c.values.clone());
    let make_stat = move |n: u64| -> Result<Statistic> {
        match estimator_kind {
            "sample_mean" => Ok(sample_mean(n, d)),
            "constant" => {
                let values = constant_values.clone().ok_or_else(|| {
                    Error::Config("estimator kind 'constant' needs 'values'".into())
                })?;
                Ok(Statistic::constant(values))
            }
            other => Err(Error::Config(format!(
                "estimator '{other}' does not apply to samples of growing size; use sample_mean \
                 or constant"
            ))),
        }
    };
    let mc = McConfig {
        seed,
        draws: config.numeric.mc_draws,
        grid_per_axis: config.numeric.grid_per_axis.max(1),
    };
    let rows = minimax_table(&instance, make_stat, &mc)?;
    let limit = limit_bound(&instance)?;

    let p = model.param_dim();
    let json_rows: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "{{\"c\":{},\"n\":{},\"theta_argmax\":{},\"risk\":{},\"se\":{},\"bound_finite\":{},\"bound_limit\":{},\"loss_id\":{},\"seed\":{}}}",
                json_float(r.c),
                r.n,
                json_vec(&r.theta_argmax),
                json_float(r.risk),
                json_float(r.se),
                json_float(r.bound_finite),
                json_float(r.bound_limit),
                json_str(&r.loss_id),
                r.seed,
            )
        })
        .collect();
    let json = format!(
        "{{\"task\":\"lam\",\"model\":{},\"theta0\":{},\"limit_bound\":{},\"fisher_singular\":{},\"rows\":[{}]}}",
        json_str(model.name()),
        json_vec(&theta0),
        json_float(limit.value),
        limit.fisher_singular,
        json_rows.join(","),
    );
    let summary = format!(
        "lam: {} rows, limit bound {}",
        rows.len(),
        fmt_float(limit.value)
    );
    Ok(TaskArtifacts {
        json,
        csv: lam_rows_csv(p, &rows),
        summary,
        contracts_ok: true,
    })
}

fn run_check_all(config: &RunConfig) -> Result<TaskArtifacts> {
    let report = check_all(config);
    let passed = report.rows.iter().filter(|r| r.passed).count();
    let mut summary = String::new();
    for row in &report.rows {
        summary.push_str(&format!(
            "[{}] {} value={} threshold={}\n",
            if row.passed { "pass" } else { "FAIL" },
            row.name,
            fmt_float(row.value),
            fmt_float(row.threshold),
        ));
    }
    summary.push_str(&format!(
        "check-all: {passed}/{} checks passed",
        report.rows.len()
    ));
    let json = format!(
        "{{\"task\":\"check-all\",\"suite\":{}}}",
        report.json_string()
    );
    Ok(TaskArtifacts {
        json,
        csv: report.csv(),
        summary,
        contracts_ok: report.all_pass(),
    })
}

/// Runs one task against a loaded config, producing artifacts in memory.
pub fn execute(task: Task, config: &RunConfig) -> Result<TaskArtifacts> {
    if let Some(pinned) = &config.task {
        if Task::parse(pinned)? != task {
            return Err(Error::Config(format!(
                "config pins task '{pinned}' but '{}' was requested",
                task.name()
            )));
        }
    }
    match task {
        Task::Fisher => run_fisher(config),
        Task::Dqm => run_dqm(config),
        Task::Vt1 => run_vt1(config),
        Task::Corollary => run_corollary(config),
        Task::Vtm => run_vtm(config),
        Task::Joint => run_joint(config),
        Task::Lam => run_lam(config),
        Task::CheckAll => run_check_all(config),
    }
}

/// Executes the task and writes `<task>.json` / `<task>.csv` into `out_dir`
/// according to the requested format.
pub fn run(
    task: Task,
    config: &RunConfig,
    out_dir: &Path,
    format: OutputFormat,
) -> Result<RunOutcome> {
    let artifacts = execute(task, config)?;
    std::fs::create_dir_all(out_dir)?;
    let mut paths = Vec::new();
    if format.wants_json() {
        let path = out_dir.join(format!("{}.json", task.name()));
        std::fs::write(&path, format!("{}\n", artifacts.json))?;
        paths.push(path);
    }
    if format.wants_csv() {
        let path = out_dir.join(format!("{}.csv", task.name()));
        std::fs::write(&path, &artifacts.csv)?;
        paths.push(path);
    }
    Ok(RunOutcome {
        exit_code: if artifacts.contracts_ok { 0 } else { 2 },
        artifacts: paths,
        summary: artifacts.summary,
    })
}

#[derive(clap::Parser, Debug)]
#[command(
    name = "vantrees",
    version,
    about = "Information lower bounds for statistical estimation, with every identity checked numerically"
)]
struct Cli {
    /// One of: fisher, dqm, vt1, corollary, vtm, joint, lam, check-all
    task: String,
    /// Path to the JSON run configuration
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides output.dir; default ".")
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed override for stochastic tasks (overrides numeric.seed)
    #[arg(long)]
    seed: Option<u64>,
    /// csv | json | both (overrides output.format; default both)
    #[arg(long)]
    format: Option<String>,
}

fn run_cli(cli: Cli) -> Result<RunOutcome> {
    let task = Task::parse(&cli.task)?;
    let mut config = load_config(&cli.config)?;
    if let Some(seed) = cli.seed {
        config.numeric.seed = Some(seed);
    }
    if let Some(out) = cli.out {
        config.output.dir = Some(out);
    }
    if let Some(fmt) = cli.format {
        config.output.format = Some(fmt);
    }
    let format = OutputFormat::parse(config.output.format.as_deref().unwrap_or("both"))?;
    let out_dir = config
        .output
        .dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("."));
    run(task, &config, &out_dir, format)
}

/// Full command-line entry point; returns the process exit code.
pub fn main_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    use clap::error::ErrorKind;
    use clap::Parser;

    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                // Usage problems are config errors in this tool's taxonomy.
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match run_cli(cli) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            for p in &outcome.artifacts {
                println!("wrote {}", p.display());
            }
            outcome.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn config_from(json: &str) -> RunConfig {
        let f = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(f.path(), json).unwrap();
        load_config(f.path()).unwrap()
    }

    #[test]
    fn task_names_round_trip() {
        for task in Task::ALL {
            assert_eq!(Task::parse(task.name()).unwrap(), task);
        }
        assert!(matches!(Task::parse("fishing"), Err(Error::Config(_))));
    }

    #[test]
    fn conjugate_pair_bound_through_the_vt1_task() {
        let config = config_from(
            r#"{
                "schema_version": 1,
                "model": {"family": "gaussian_location"},
                "prior": {"family": "gaussian", "mean": 0.0, "tau": 1.0}
            }"#,
        );
        let art = execute(Task::Vt1, &config).unwrap();
        assert!(art.contracts_ok);
        let v: serde_json::Value = serde_json::from_str(&art.json).unwrap();
        let bound: f64 = v["report"]["bound"]
            .as_str()
            .map(|s| s.parse().unwrap())
            .unwrap_or_else(|| v["report"]["bound"].as_f64().unwrap());
        assert_abs_diff_eq!(bound, 0.5, epsilon = 1e-8);
        let mut lines = art.csv.lines();
        assert_eq!(lines.next().unwrap(), BoundReport::csv_header());
        assert_eq!(lines.next().unwrap().split(',').count(), 8);
    }

    #[test]
    fn dimension_mismatch_is_a_config_error() {
        let config = config_from(
            r#"{
                "schema_version": 1,
                "model": {"family": "gaussian_location"},
                "prior": {"family": "product_quartic_bump", "dim": 2, "radius": 1.0}
            }"#,
        );
        let err = execute(Task::Vt1, &config).unwrap_err();
        match err {
            Error::Config(msg) => assert!(msg.contains("dimension"), "{msg}"),
            other => panic!("expected config error, got {other:?}"),
        }
        assert_eq!(exit_code_for(&err_from_dimension()), 1);
    }

    fn err_from_dimension() -> Error {
        Error::Config("dimension mismatch".into())
    }

    #[test]
    fn stochastic_task_without_seed_is_refused() {
        let config = config_from(
            r#"{
                "schema_version": 1,
                "model": {"family": "gaussian_location"},
                "theta0": [0.0],
                "lam": {"c_grid": [1.0], "n_grid": [100]}
            }"#,
        );
        let err = execute(Task::Lam, &config).unwrap_err();
        match &err {
            Error::Config(msg) => assert!(msg.contains("seed"), "{msg}"),
            other => panic!("expected config error, got {other:?}"),
        }
        assert_eq!(exit_code_for(&err), 1);
    }

    #[test]
    fn pinned_task_must_match() {
        let config = config_from(
            r#"{
                "schema_version": 1,
                "task": "vt1",
                "model": {"family": "gaussian_location"},
                "theta0": [0.0]
            }"#,
        );
        assert!(matches!(
            execute(Task::Fisher, &config),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn fisher_task_emits_matrix_and_summary() {
        let config = config_from(
            r#"{
                "schema_version": 1,
                "model": {"family": "gaussian_location"},
                "theta0": [0.3]
            }"#,
        );
        let art = execute(Task::Fisher, &config).unwrap();
        let v: serde_json::Value = serde_json::from_str(&art.json).unwrap();
        let entry = &v["fisher"][0][0];
        let got: f64 = entry
            .as_str()
            .map(|s| s.parse().unwrap())
            .unwrap_or_else(|| entry.as_f64().unwrap());
        assert_abs_diff_eq!(got, 1.0, epsilon = 1e-8);
        assert!(art.csv.starts_with("row,col,value\n0,0,"));
    }

    #[test]
    fn exit_codes_split_request_errors_from_contract_failures() {
        assert_eq!(exit_code_for(&Error::Config("x".into())), 1);
        assert_eq!(exit_code_for(&Error::misuse("x")), 1);
        assert_eq!(exit_code_for(&Error::Capability("x".into())), 1);
        assert_eq!(exit_code_for(&Error::ContractViolation("x".into())), 2);
        assert_eq!(exit_code_for(&Error::Numerical("x".into())), 2);
    }
}
