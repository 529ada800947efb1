//! Tabulated models: densities given as a CSV matrix over a declared
//! theta-grid x sample-grid.
//!
//! File layout:
//!
//! ```text
//! # x: trapezoid        (optional; "trapezoid" is the default, or "atoms")
//! theta,-3.0,-2.99,...  (header row: literal "theta", then the x nodes)
//! 0.10,0.0012,0.0013,...
//! 0.11,...
//! ```
//!
//! Rows are densities `f_theta(x)` on the shared x nodes, one theta per
//! row. Trapezoid x nodes must be uniformly spaced; rows must be strictly
//! increasing in theta and are validated for unit mass on load. The
//! resulting [`Model`] evaluates only on the tabulated lattice: requests
//! snap to the nearest row within a tight tolerance, so finite-difference
//! steps must be multiples of the row spacing (see
//! [`TableInfo::theta_spacing`]).

use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{DensityFn, Model, ParamDomain};
use crate::numerics::{Grid1D, GridP};

/// Row-lattice facts a caller needs to differentiate a tabulated model.
#[derive(Debug, Clone)]
pub struct TableInfo {
    pub theta_rows: Vec<f64>,
    /// Uniform row spacing.
    pub theta_spacing: f64,
    pub x_nodes: usize,
}

/// Tolerance for snapping a requested coordinate onto the lattice, relative
/// to the lattice span.
const SNAP_REL: f64 = 1e-9;

/// Unit-mass tolerance for each tabulated row.
const MASS_TOL: f64 = 1e-6;

pub fn load_model(path: &Path) -> Result<Model> {
    load_model_info(path).map(|(m, _)| m)
}

pub fn load_model_info(path: &Path) -> Result<(Model, TableInfo)> {
    let text = std::fs::read_to_string(path)?;
    let (kind, lines) = split_directives(&text)?;

    let mut rows = lines.iter();
    let header = rows
        .next()
        .ok_or_else(|| Error::invalid("tabulated model: empty file"))?;
    let mut cells = header.split(',');
    match cells.next() {
        Some(c) if c.trim() == "theta" => {}
        other => {
            return Err(Error::invalid(format!(
                "tabulated model: header must start with 'theta', got {other:?}"
            )))
        }
    }
    let x_nodes: Vec<f64> = cells
        .map(|c| parse_float(c, "x node"))
        .collect::<Result<_>>()?;
    if x_nodes.len() < 2 {
        return Err(Error::invalid("tabulated model: need at least 2 x nodes"));
    }

    let x_grid = match kind {
        XKind::Trapezoid => {
            require_uniform(&x_nodes, "x nodes")?;
            Grid1D::uniform_trapezoid(x_nodes[0], *x_nodes.last().unwrap(), x_nodes.len())?
        }
        XKind::Atoms => Grid1D::discrete_atoms(&x_nodes)?,
    };

    let mut theta_rows: Vec<f64> = Vec::new();
    let mut table: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in rows.enumerate() {
        let mut cells = line.split(',');
        let theta = parse_float(
            cells.next().unwrap_or(""),
            &format!("theta in data row {}", lineno + 1),
        )?;
        let vals: Vec<f64> = cells
            .map(|c| parse_float(c, &format!("density in data row {}", lineno + 1)))
            .collect::<Result<_>>()?;
        if vals.len() != x_nodes.len() {
            return Err(Error::invalid(format!(
                "tabulated model: row {} has {} values for {} x nodes",
                lineno + 1,
                vals.len(),
                x_nodes.len()
            )));
        }
        if vals.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(Error::invalid(format!(
                "tabulated model: negative or non-finite density in row {}",
                lineno + 1
            )));
        }
        let mass = x_grid.integrate(&vals)?;
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(Error::invalid(format!(
                "tabulated model: row {} (theta = {theta}) has mass {mass}, not 1",
                lineno + 1
            )));
        }
        theta_rows.push(theta);
        table.push(vals);
    }
    if theta_rows.len() < 2 {
        return Err(Error::invalid(
            "tabulated model: need at least 2 theta rows",
        ));
    }
    if theta_rows.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid(
            "tabulated model: theta rows must be strictly increasing",
        ));
    }
    require_uniform(&theta_rows, "theta rows")?;
    let spacing = theta_rows[1] - theta_rows[0];

    let theta_span = theta_rows.last().unwrap() - theta_rows[0];
    let theta_tol = SNAP_REL * theta_span.max(1.0);
    let x_span = x_nodes.last().unwrap() - x_nodes[0];
    let x_tol = SNAP_REL * x_span.abs().max(1.0);

    let table = Arc::new(table);
    let rows_for_lookup = theta_rows.clone();
    let x_positions = x_nodes.clone();
    let density: DensityFn = Arc::new(move |theta: &[f64], x: &[f64]| {
        let Some(row) = snap_index(&rows_for_lookup, theta[0], theta_tol) else {
            return f64::NAN; // off the lattice; rejected upstream by root_density
        };
        let Some(col) = snap_index(&x_positions, x[0], x_tol) else {
            return f64::NAN;
        };
        table[row][col]
    });

    // The admissible interval is the row lattice minus half a spacing at
    // each end, so central differences at interior rows stay on the table.
    let domain = ParamDomain::new_box(
        vec![theta_rows[0] - 0.5 * spacing],
        vec![theta_rows.last().unwrap() + 0.5 * spacing],
    )?;

    let info = TableInfo {
        theta_spacing: spacing,
        theta_rows,
        x_nodes: x_nodes.len(),
    };
    let model = Model::new(
        format!("tabulated({})", path.display()),
        domain,
        GridP::from_axis(x_grid),
        density,
    );
    Ok((model, info))
}

enum XKind {
    Trapezoid,
    Atoms,
}

fn split_directives(text: &str) -> Result<(XKind, Vec<&str>)> {
    let mut kind = XKind::Trapezoid;
    let mut lines = Vec::new();
    for raw in text.lines() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let directive = rest.trim();
            if let Some(v) = directive.strip_prefix("x:") {
                kind = match v.trim() {
                    "trapezoid" => XKind::Trapezoid,
                    "atoms" => XKind::Atoms,
                    other => {
                        return Err(Error::invalid(format!(
                            "tabulated model: unknown x kind '{other}'"
                        )))
                    }
                };
            }
            continue;
        }
        lines.push(raw);
    }
    Ok((kind, lines))
}

fn parse_float(cell: &str, what: &str) -> Result<f64> {
    cell.trim()
        .parse::<f64>()
        .map_err(|_| Error::invalid(format!("tabulated data: bad {what}: '{}'", cell.trim())))
}

fn require_uniform(nodes: &[f64], what: &str) -> Result<()> {
    let h = nodes[1] - nodes[0];
    let span = nodes.last().unwrap() - nodes[0];
    for w in nodes.windows(2) {
        if ((w[1] - w[0]) - h).abs() > 1e-9 * span.max(1.0) {
            return Err(Error::invalid(format!(
                "tabulated data: {what} must be uniformly spaced"
            )));
        }
    }
    Ok(())
}

/// Index of the entry of `sorted` nearest to `v`, provided it lies within
/// `tol`; `None` otherwise.
fn snap_index(sorted: &[f64], v: f64, tol: f64) -> Option<usize> {
    let i = sorted.partition_point(|&s| s < v);
    let mut best: Option<usize> = None;
    for cand in [i.wrapping_sub(1), i] {
        if cand < sorted.len() && (sorted[cand] - v).abs() <= tol {
            best = match best {
                Some(b) if (sorted[b] - v).abs() <= (sorted[cand] - v).abs() => Some(b),
                _ => Some(cand),
            };
        }
    }
    best
}
