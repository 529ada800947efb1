//! Small dense symmetric matrices and their spectral decompositions.
//!
//! Everything here is at most 16 x 16 (information matrices in a handful of
//! parameters plus one bordering row), so we store dense row-major data and
//! delegate the eigendecomposition to nalgebra's symmetric solver.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 16;

/// Dense symmetric matrix of dimension at most [`MAX_DIM`].
///
/// Constructors symmetrize their input; `from_rows` additionally rejects
/// input whose asymmetry exceeds a small multiple of its magnitude, since
/// that always indicates a caller bug rather than roundoff.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    dim: usize,
    data: Vec<f64>, // row-major, kept exactly symmetric
}

impl SymmetricMatrix {
    pub fn zeros(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(SymmetricMatrix {
            dim,
            data: vec![0.0; dim * dim],
        })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut m = Self::zeros(dim)?;
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        Ok(m)
    }

    /// Build from `f(i, j)`; only `i <= j` is evaluated and mirrored.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        check_dim(dim)?;
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                data[i * dim + j] = v;
                data[j * dim + i] = v;
            }
        }
        Ok(SymmetricMatrix { dim, data })
    }

    /// Build from full rows, enforcing symmetry up to roundoff.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        check_dim(dim)?;
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::invalid("from_rows: ragged rows"));
        }
        let mut scale: f64 = 1.0;
        for r in rows {
            for &v in r {
                scale = scale.max(v.abs());
            }
        }
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                let a = rows[i][j];
                let b = rows[j][i];
                if (a - b).abs() > 1e-9 * scale {
                    return Err(Error::invalid(format!(
                        "from_rows: entry ({i},{j}) = {a} vs ({j},{i}) = {b} is not symmetric"
                    )));
                }
                data[i * dim + j] = 0.5 * (a + b);
            }
        }
        Ok(SymmetricMatrix { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Set both `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| self.data[i * self.dim..(i + 1) * self.dim].to_vec())
            .collect()
    }

    pub fn add(&self, other: &SymmetricMatrix) -> Result<SymmetricMatrix> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SymmetricMatrix) -> Result<SymmetricMatrix> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> SymmetricMatrix {
        SymmetricMatrix {
            dim: self.dim,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    fn zip_with(
        &self,
        other: &SymmetricMatrix,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<SymmetricMatrix> {
        if self.dim != other.dim {
            return Err(Error::invalid(format!(
                "dimension mismatch: {} vs {}",
                self.dim, other.dim
            )));
        }
        Ok(SymmetricMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Quadratic form `v' M v`.
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += v[i] * self.get(i, j) * v[j];
            }
        }
        acc
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.data)
    }

    pub fn from_dmatrix(m: &DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::invalid("matrix is not square"));
        }
        Self::from_fn(m.nrows(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
    }

    /// Full spectral decomposition, eigenvalues descending.
    pub fn eigendecompose(&self) -> Eigen {
        let se = nalgebra::SymmetricEigen::new(self.to_dmatrix());
        let mut order: Vec<usize> = (0..self.dim).collect();
        order.sort_by(|&a, &b| {
            se.eigenvalues[b]
                .partial_cmp(&se.eigenvalues[a])
                .expect("eigenvalue is NaN")
        });
        let values: Vec<f64> = order.iter().map(|&k| se.eigenvalues[k]).collect();
        let vectors: Vec<Vec<f64>> = order
            .iter()
            .map(|&k| se.eigenvectors.column(k).iter().copied().collect())
            .collect();
        Eigen { values, vectors }
    }

    /// Positive semidefiniteness up to `tol * max(1, |M|_inf)`.
    pub fn psd_check(&self, tol: f64) -> PsdReport {
        let eig = self.eigendecompose();
        let min_eigenvalue = eig.values.last().copied().unwrap_or(0.0);
        let scale = self.max_abs().max(1.0);
        PsdReport {
            min_eigenvalue,
            threshold: -tol * scale,
            passes: min_eigenvalue >= -tol * scale,
        }
    }

    /// Moore-Penrose pseudo-inverse through the eigendecomposition.
    ///
    /// Eigenvalues at or below `rel_cutoff * lambda_max` are treated as zero;
    /// the report says how many were cut so callers can surface degeneracy
    /// instead of silently inverting noise.
    pub fn pseudo_inverse(&self, rel_cutoff: f64) -> PseudoInverse {
        let eig = self.eigendecompose();
        let lambda_max = eig.values.first().copied().unwrap_or(0.0).max(0.0);
        let cutoff = rel_cutoff * lambda_max;
        let mut data = vec![0.0; self.dim * self.dim];
        let mut dropped = 0usize;
        for (k, &lam) in eig.values.iter().enumerate() {
            if lam <= cutoff {
                dropped += 1;
                continue;
            }
            let u = &eig.vectors[k];
            for i in 0..self.dim {
                for j in 0..self.dim {
                    data[i * self.dim + j] += u[i] * u[j] / lam;
                }
            }
        }
        PseudoInverse {
            matrix: SymmetricMatrix {
                dim: self.dim,
                data,
            },
            dropped,
            cutoff,
        }
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::invalid("zero-dimensional matrix"));
    }
    if dim > MAX_DIM {
        return Err(Error::Capability(format!(
            "symmetric matrices are limited to dimension {MAX_DIM}, got {dim}"
        )));
    }
    Ok(())
}

/// Spectral decomposition with eigenvalues sorted descending and matching
/// orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

impl Eigen {
    /// `sum_k lambda_k u_k u_k'` rebuilt from the decomposition.
    pub fn reconstruct(&self) -> SymmetricMatrix {
        let dim = self.vectors.first().map_or(0, |v| v.len());
        let mut data = vec![0.0; dim * dim];
        for (lam, u) in self.values.iter().zip(&self.vectors) {
            for i in 0..dim {
                for j in 0..dim {
                    data[i * dim + j] += lam * u[i] * u[j];
                }
            }
        }
        SymmetricMatrix { dim, data }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PsdReport {
    pub min_eigenvalue: f64,
    pub threshold: f64,
    pub passes: bool,
}

#[derive(Debug, Clone)]
pub struct PseudoInverse {
    pub matrix: SymmetricMatrix,
    /// Number of eigenvalues treated as zero.
    pub dropped: usize,
    pub cutoff: f64,
}

/// General (possibly rectangular) matrix product helpers used by the bound
/// assembly; thin wrappers so call sites stay readable.
pub fn mat_t_mat_mat(a: &DMatrix<f64>, m: &SymmetricMatrix, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.transpose() * m.to_dmatrix() * b
}

pub fn dvec(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn two_by_two_spectrum() {
        // [[2,1],[1,2]] has eigenvalues 3 and 1 with eigenvectors (1,1)/sqrt2,
        // (1,-1)/sqrt2.
        let m = SymmetricMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let eig = m.eigendecompose();
        assert_abs_diff_eq!(eig.values[0], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(eig.values[1], 1.0, epsilon = 1e-12);
        let u = &eig.vectors[0];
        assert_abs_diff_eq!(u[0].abs(), std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-12);
        assert_abs_diff_eq!(u[0] * u[1], 0.5, epsilon = 1e-12); // same sign
        let recon = eig.reconstruct();
        assert!(recon.sub(&m).unwrap().max_abs() <= 1e-12);
    }

    #[test]
    fn kernel_vector_of_rank_deficient_matrix() {
        let m = SymmetricMatrix::from_rows(&[vec![4.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let eig = m.eigendecompose();
        assert_abs_diff_eq!(eig.values[0], 4.0, epsilon = 1e-14);
        assert_abs_diff_eq!(eig.values[1], 0.0, epsilon = 1e-14);
        let kernel = &eig.vectors[1];
        assert_abs_diff_eq!(kernel[0].abs(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(kernel[1].abs(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn psd_check_is_sign_sensitive_above_tolerance() {
        let big = SymmetricMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
        assert!(big.psd_check(1e-9).passes);
        assert!(!big.scale(-1.0).psd_check(1e-9).passes);
        // A matrix at tolerance scale passes in both signs.
        let tiny = big.scale(1e-12);
        assert!(tiny.psd_check(1e-9).passes);
        assert!(tiny.scale(-1.0).psd_check(1e-9).passes);
    }

    #[test]
    fn pseudo_inverse_cuts_kernel_directions() {
        let m = SymmetricMatrix::from_rows(&[vec![4.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let pinv = m.pseudo_inverse(1e-12);
        assert_eq!(pinv.dropped, 1);
        assert_abs_diff_eq!(pinv.matrix.get(0, 0), 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(pinv.matrix.get(1, 1), 0.0, epsilon = 0.0);

        let full = SymmetricMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let pinv = full.pseudo_inverse(1e-12);
        assert_eq!(pinv.dropped, 0);
        let prod =
            SymmetricMatrix::from_dmatrix(&(full.to_dmatrix() * pinv.matrix.to_dmatrix())).unwrap();
        assert!(
            prod.sub(&SymmetricMatrix::identity(2).unwrap())
                .unwrap()
                .max_abs()
                <= 1e-12
        );
    }

    #[test]
    fn asymmetric_input_is_rejected() {
        let err = SymmetricMatrix::from_rows(&[vec![1.0, 0.5], vec![0.2, 1.0]]);
        assert!(err.is_err());
        assert!(SymmetricMatrix::zeros(17).is_err());
    }

    #[test]
    fn quad_form_and_trace() {
        let m = SymmetricMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        assert_abs_diff_eq!(m.trace(), 4.0, epsilon = 0.0);
        assert_abs_diff_eq!(m.quad_form(&[1.0, 1.0]), 6.0, epsilon = 1e-14);
    }
}
