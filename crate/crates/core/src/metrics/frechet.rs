use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{check_psd, matmul, singular_values, sqrtm_psd, symmetric_eigen, trace};

/// Mean and unbiased covariance of a feature set.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianStats {
    pub mean: Vec<f64>,
    /// Row-major `dim × dim`, exactly symmetric.
    pub cov: Vec<f64>,
    pub n: usize,
}

impl GaussianStats {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

fn check_features(features: &[Vec<f64>]) -> Result<usize> {
    if features.len() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: features.len(),
        });
    }
    let d = features[0].len();
    if d == 0 {
        return Err(Error::InvalidArgument("zero-dimensional features".into()));
    }
    if let Some((k, f)) = features.iter().enumerate().find(|(_, f)| f.len() != d) {
        return Err(Error::DimensionMismatch(format!(
            "feature {k} has dimension {}, expected {d}",
            f.len()
        )));
    }
    if features.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("features".into()));
    }
    Ok(d)
}

fn mean_of(features: &[Vec<f64>], d: usize) -> Vec<f64> {
    let mut mean = vec![0.0; d];
    for f in features {
        for (m, v) in mean.iter_mut().zip(f) {
            *m += v;
        }
    }
    let n = features.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    mean
}

pub fn gaussian_stats(features: &[Vec<f64>]) -> Result<GaussianStats> {
    let d = check_features(features)?;
    let mean = mean_of(features, d);
    let mut cov = vec![0.0; d * d];
    let mut centered = vec![0.0; d];
    for f in features {
        for ((c, v), m) in centered.iter_mut().zip(f).zip(&mean) {
            *c = v - m;
        }
        for i in 0..d {
            let ci = centered[i];
            for j in i..d {
                cov[i * d + j] += ci * centered[j];
            }
        }
    }
    let denom = (features.len() - 1) as f64;
    for i in 0..d {
        for j in i..d {
            let v = cov[i * d + j] / denom;
            cov[i * d + j] = v;
            cov[j * d + i] = v;
        }
    }
    Ok(GaussianStats {
        mean,
        cov,
        n: features.len(),
    })
}

fn mean_sq_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `‖μ₁−μ₂‖² + Tr(Σ₁ + Σ₂ − 2(Σ₁Σ₂)^{1/2})`, with the square root taken
/// through the symmetric product `√Σ₁·Σ₂·√Σ₁`.
pub fn frechet_distance(s1: &GaussianStats, s2: &GaussianStats) -> Result<f64> {
    let d = s1.dim();
    if s2.dim() != d || s1.cov.len() != d * d || s2.cov.len() != d * d {
        return Err(Error::DimensionMismatch(format!(
            "statistics of dimension {d} and {}",
            s2.dim()
        )));
    }
    check_psd(&symmetric_eigen(&s2.cov, d)?)?;
    let r1 = sqrtm_psd(&s1.cov, d)?;
    let sandwich = matmul(&matmul(&r1, &s2.cov, d), &r1, d);
    let tr_sqrt = trace(&sqrtm_psd(&sandwich, d)?, d);
    let fd =
        mean_sq_diff(&s1.mean, &s2.mean) + trace(&s1.cov, d) + trace(&s2.cov, d) - 2.0 * tr_sqrt;
    finish(fd)
}

/// The same distance computed from the samples, for feature dimensions far
/// above the sample count.
///
/// With centered data matrices `A₁`, `A₂`, the nonzero eigenvalues of
/// `Σ₁Σ₂` are the squared singular values of `A₁A₂ᵀ` over `(n₁−1)(n₂−1)`,
/// so the trace term never forms a `dim × dim` matrix.
pub fn frechet_distance_samples(x: &[Vec<f64>], y: &[Vec<f64>]) -> Result<f64> {
    let d = check_features(x)?;
    if check_features(y)? != d {
        return Err(Error::DimensionMismatch(format!(
            "feature sets of dimension {d} and {}",
            y[0].len()
        )));
    }
    let center = |f: &[Vec<f64>]| {
        let m = mean_of(f, d);
        let a: Vec<Vec<f64>> = f
            .iter()
            .map(|r| r.iter().zip(&m).map(|(v, mu)| v - mu).collect())
            .collect();
        (m, a)
    };
    let (m1, a1) = center(x);
    let (m2, a2) = center(y);
    let (n1, n2) = (a1.len(), a2.len());
    let tr = |a: &[Vec<f64>]| a.iter().flatten().map(|v| v * v).sum::<f64>() / (a.len() - 1) as f64;

    let mut cross = vec![0.0; n1 * n2];
    for (i, r1) in a1.iter().enumerate() {
        for (j, r2) in a2.iter().enumerate() {
            cross[i * n2 + j] = r1.iter().zip(r2).map(|(p, q)| p * q).sum();
        }
    }
    let sv = singular_values(&cross, n1, n2)?;
    let tr_sqrt = sv.iter().sum::<f64>() / libm::sqrt(((n1 - 1) * (n2 - 1)) as f64);
    finish(mean_sq_diff(&m1, &m2) + tr(&a1) + tr(&a2) - 2.0 * tr_sqrt)
}

fn finish(fd: f64) -> Result<f64> {
    if !fd.is_finite() {
        return Err(Error::NonFinite("Fréchet distance".into()));
    }
    Ok(fd.max(0.0))
}
