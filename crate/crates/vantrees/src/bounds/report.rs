//! Report emitted by the bound computations, with stable field names.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::numerics::SymmetricMatrix;

/// Fields of the serialized report, in emission order.
pub const BOUND_REPORT_FIELDS: [&str; 8] = [
    "bound",
    "bias_term",
    "int_psi_prime_dQ",
    "I_Q",
    "int_IP_dQ",
    "residual_key_eq",
    "residual_delta_norm",
    "grid_meta",
];

/// Formats with 17 significant digits so a reader can reconstruct the bit
/// pattern; non-finite values become `inf` / `-inf` / `nan`.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:.16e}")
    }
}

/// Scalar, vector, or row-major matrix value inside a report.
#[derive(Clone, Debug)]
pub enum Quantity {
    Scalar(f64),
    Vector(Vec<f64>),
    Matrix {
        rows: usize,
        cols: usize,
        data: Vec<f64>,
    },
}

impl Quantity {
    pub fn from_symmetric(m: &SymmetricMatrix) -> Self {
        Quantity::Matrix {
            rows: m.dim(),
            cols: m.dim(),
            data: m.as_slice().to_vec(),
        }
    }

    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            Quantity::Scalar(v) => Some(*v),
            _ => None,
        }
    }

    pub fn entries(&self) -> &[f64] {
        match self {
            Quantity::Scalar(v) => std::slice::from_ref(v),
            Quantity::Vector(v) => v,
            Quantity::Matrix { data, .. } => data,
        }
    }

    fn json_fragment(&self) -> String {
        match self {
            Quantity::Scalar(v) => json_float(*v),
            Quantity::Vector(v) => {
                let items: Vec<String> = v.iter().map(|&x| json_float(x)).collect();
                format!("[{}]", items.join(","))
            }
            Quantity::Matrix { rows, cols, data } => {
                let mut out = String::from("[");
                for r in 0..*rows {
                    if r > 0 {
                        out.push(',');
                    }
                    let row: Vec<String> =
                        (0..*cols).map(|c| json_float(data[r * cols + c])).collect();
                    out.push_str(&format!("[{}]", row.join(",")));
                }
                out.push(']');
                out
            }
        }
    }

    /// One CSV cell; multi-entry values are semicolon-joined row-major so the
    /// row stays flat.
    fn csv_cell(&self) -> String {
        let parts: Vec<String> = self.entries().iter().map(|&x| fmt_float(x)).collect();
        parts.join(";")
    }
}

// JSON has no literal for non-finite floats, so those become strings.
pub(crate) fn json_float(x: f64) -> String {
    if x.is_finite() {
        fmt_float(x)
    } else {
        format!("\"{}\"", fmt_float(x))
    }
}

pub(crate) fn json_str(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Outcome of a bound computation together with the quantities it was
/// assembled from and the residuals of the identities behind it.
#[derive(Clone, Debug)]
pub struct BoundReport {
    pub bound: Quantity,
    /// Prior-averaged bias of the estimator; zero when no estimator enters.
    pub bias_term: Quantity,
    /// `int psi' dQ` (scalar) or the matrix `int grad psi dQ`.
    pub int_psi_prime_dq: Quantity,
    pub i_q: Quantity,
    pub int_ip_dq: Quantity,
    pub residual_key_eq: f64,
    pub residual_delta_norm: f64,
    pub grid_meta: String,
}

impl BoundReport {
    pub fn json_string(&self) -> String {
        format!(
            "{{\"bound\":{},\"bias_term\":{},\"int_psi_prime_dQ\":{},\"I_Q\":{},\"int_IP_dQ\":{},\"residual_key_eq\":{},\"residual_delta_norm\":{},\"grid_meta\":{}}}",
            self.bound.json_fragment(),
            self.bias_term.json_fragment(),
            self.int_psi_prime_dq.json_fragment(),
            self.i_q.json_fragment(),
            self.int_ip_dq.json_fragment(),
            json_float(self.residual_key_eq),
            json_float(self.residual_delta_norm),
            json_str(&self.grid_meta),
        )
    }

    pub fn csv_header() -> String {
        BOUND_REPORT_FIELDS.join(",")
    }

    pub fn csv_row(&self) -> String {
        // grid_meta is commaless by construction; enforce it anyway so the
        // row always has exactly eight cells.
        let meta = self.grid_meta.replace(',', ";");
        [
            self.bound.csv_cell(),
            self.bias_term.csv_cell(),
            self.int_psi_prime_dq.csv_cell(),
            self.i_q.csv_cell(),
            self.int_ip_dq.csv_cell(),
            fmt_float(self.residual_key_eq),
            fmt_float(self.residual_delta_norm),
            meta,
        ]
        .join(",")
    }

    /// Rebuilds the bound from the reported intermediates; the reported bound
    /// must agree with this to 1e-12.
    pub fn recompute_bound(&self) -> Result<Quantity> {
        match (&self.int_psi_prime_dq, &self.i_q, &self.int_ip_dq) {
            (Quantity::Scalar(g), Quantity::Scalar(iq), Quantity::Scalar(ip)) => {
                let bias = self.bias_term.as_scalar().unwrap_or(0.0);
                let denom = iq + ip;
                if !(denom > 0.0) {
                    return Err(Error::Numerical(
                        "nonpositive information denominator in report".into(),
                    ));
                }
                Ok(Quantity::Scalar(bias * bias + g * g / denom))
            }
            (
                Quantity::Matrix { rows, cols, data },
                Quantity::Matrix { data: iq, .. },
                Quantity::Matrix { data: ip, .. },
            ) => {
                let p = *rows;
                let s = *cols;
                let m = SymmetricMatrix::from_fn(p, |i, j| iq[i * p + j] + ip[i * p + j])?;
                let pinv = m.pseudo_inverse(super::PINV_CUTOFF);
                let g = DMatrix::from_row_slice(p, s, data);
                let schur = crate::numerics::mat_t_mat_mat(&g, &pinv.matrix, &g);
                Ok(Quantity::Matrix {
                    rows: s,
                    cols: s,
                    data: schur.transpose().as_slice().to_vec(),
                })
            }
            _ => Err(Error::Numerical(
                "report intermediates are neither all scalar nor all matrix".into(),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_has_17_significant_digits() {
        assert_eq!(fmt_float(0.5), "5.0000000000000000e-1");
        assert_eq!(fmt_float(1.0 / 3.0), "3.3333333333333331e-1");
        assert_eq!(fmt_float(f64::INFINITY), "inf");
        let x = 0.1 + 0.2;
        let back: f64 = fmt_float(x).parse().unwrap();
        assert_eq!(back, x);
    }

    #[test]
    fn csv_and_json_have_the_stable_field_names() {
        let rep = BoundReport {
            bound: Quantity::Scalar(0.5),
            bias_term: Quantity::Scalar(0.0),
            int_psi_prime_dq: Quantity::Scalar(1.0),
            i_q: Quantity::Scalar(1.0),
            int_ip_dq: Quantity::Scalar(1.0),
            residual_key_eq: 1e-12,
            residual_delta_norm: 1e-12,
            grid_meta: "x:atoms[n=2] theta:gl[0;1]n=64".into(),
        };
        assert_eq!(
            BoundReport::csv_header(),
            "bound,bias_term,int_psi_prime_dQ,I_Q,int_IP_dQ,residual_key_eq,residual_delta_norm,grid_meta"
        );
        let row = rep.csv_row();
        assert_eq!(row.split(',').count(), 8);
        let json = rep.json_string();
        for field in BOUND_REPORT_FIELDS {
            assert!(json.contains(&format!("\"{field}\":")), "missing {field}");
        }
        serde_json::from_str::<serde_json::Value>(&json).expect("valid json");
    }

    #[test]
    fn scalar_bound_recomputes_from_intermediates() {
        let rep = BoundReport {
            bound: Quantity::Scalar(1.5),
            bias_term: Quantity::Scalar(-1.0),
            int_psi_prime_dq: Quantity::Scalar(1.0),
            i_q: Quantity::Scalar(1.0),
            int_ip_dq: Quantity::Scalar(1.0),
            residual_key_eq: 0.0,
            residual_delta_norm: 0.0,
            grid_meta: String::new(),
        };
        let back = rep.recompute_bound().unwrap().as_scalar().unwrap();
        assert!((back - 1.5).abs() <= 1e-12);
    }

    #[test]
    fn matrix_quantities_flatten_row_major_in_csv() {
        let q = Quantity::Matrix {
            rows: 2,
            cols: 2,
            data: vec![1.0, 2.0, 3.0, 4.0],
        };
        let cell = q.csv_cell();
        assert_eq!(cell.matches(';').count(), 3);
        assert!(!cell.contains(','));
    }
}
