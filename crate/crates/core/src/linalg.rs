//! Dense symmetric linear algebra for covariance matrices.
//!
//! Matrices are row-major `n × n` slices. Only what the Fréchet distance
//! needs is here: a cyclic Jacobi eigensolver and the PSD square root built
//! on it.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Eigenvalues below `-PSD_TOL` make a matrix non-PSD; values in
/// `[-PSD_TOL, 0)` are rounding noise and clip to zero.
pub const PSD_TOL: f64 = 1e-8;

const MAX_SWEEPS: usize = 100;

/// Eigen-decomposition `A = V·diag(values)·Vᵀ`; column `k` of `vectors` is
/// the eigenvector for `values[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricEigen {
    pub n: usize,
    pub values: Vec<f64>,
    pub vectors: Vec<f64>,
}

fn check_square(a: &[f64], n: usize) -> Result<()> {
    if a.len() != n * n {
        return Err(Error::DimensionMismatch(format!(
            "{} entries for a {n}x{n} matrix",
            a.len()
        )));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix".into()));
    }
    Ok(())
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Only the upper triangle is read.
pub fn symmetric_eigen(a: &[f64], n: usize) -> Result<SymmetricEigen> {
    check_square(a, n)?;
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            m[i * n + j] = a[i * n + j];
            m[j * n + i] = a[i * n + j];
        }
    }
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    let scale = libm::sqrt(m.iter().map(|x| x * x).sum::<f64>());
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j] * m[i * n + j])
            .sum();
        if libm::sqrt(off) <= f64::EPSILON * scale * 1e-2 || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;

                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let values = (0..n).map(|i| m[i * n + i]).collect();
    Ok(SymmetricEigen {
        n,
        values,
        vectors: v,
    })
}

impl SymmetricEigen {
    /// `V·diag(f(λ))·Vᵀ`, symmetrized.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        let n = self.n;
        let fl: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let s: f64 = (0..n)
                    .map(|k| self.vectors[i * n + k] * fl[k] * self.vectors[j * n + k])
                    .sum();
                out[i * n + j] = s;
                out[j * n + i] = s;
            }
        }
        out
    }

    /// Smallest eigenvalue, or `+∞` for an empty matrix.
    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Fails with [`Error::NotPsd`] if any eigenvalue is below `-PSD_TOL`.
pub fn check_psd(e: &SymmetricEigen) -> Result<()> {
    let min = e.min_value();
    if min < -PSD_TOL {
        return Err(Error::NotPsd { eigenvalue: min });
    }
    Ok(())
}

/// Principal square root of a symmetric PSD matrix.
pub fn sqrtm_psd(a: &[f64], n: usize) -> Result<Vec<f64>> {
    let e = symmetric_eigen(a, n)?;
    check_psd(&e)?;
    Ok(e.map(|l| libm::sqrt(l.max(0.0))))
}

/// Row-major product of two `n × n` matrices.
pub fn matmul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    out
}

pub fn trace(a: &[f64], n: usize) -> f64 {
    (0..n).map(|i| a[i * n + i]).sum()
}

/// Singular values of a `rows × cols` row-major matrix, via the
/// eigenvalues of the smaller Gram matrix.
pub fn singular_values(a: &[f64], rows: usize, cols: usize) -> Result<Vec<f64>> {
    if a.len() != rows * cols {
        return Err(Error::DimensionMismatch(format!(
            "{} entries for a {rows}x{cols} matrix",
            a.len()
        )));
    }
    let (k, gram) = if rows <= cols {
        let mut g = vec![0.0; rows * rows];
        for i in 0..rows {
            for j in i..rows {
                let s: f64 = (0..cols).map(|c| a[i * cols + c] * a[j * cols + c]).sum();
                g[i * rows + j] = s;
                g[j * rows + i] = s;
            }
        }
        (rows, g)
    } else {
        let mut g = vec![0.0; cols * cols];
        for i in 0..cols {
            for j in i..cols {
                let s: f64 = (0..rows).map(|r| a[r * cols + i] * a[r * cols + j]).sum();
                g[i * cols + j] = s;
                g[j * cols + i] = s;
            }
        }
        (cols, g)
    };
    let e = symmetric_eigen(&gram, k)?;
    Ok(e.values.iter().map(|l| libm::sqrt(l.max(0.0))).collect())
}
