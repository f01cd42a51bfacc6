//! Evaluation statistics: image fidelity (IF), Fréchet distance over global
//! features (FID) and over spatial features (sFID).
//!
//! The perceptual distance and the feature network are replaced by the
//! deterministic stand-ins in this module; [`MetricVariants`] labels them so
//! the numbers are never mistaken for LPIPS / Inception scores.

mod features;
mod frechet;

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::raster::{ErpImage, Raster};
use crate::reproject::{extract_perspective, PerspectiveSpec};
use crate::sphere::SphericalCoord;

pub use features::{
    global_features, spatial_features, RandomProjection, DEFAULT_DIM, DEFAULT_GRID, DEFAULT_PATCH,
};
pub use frechet::{frechet_distance, frechet_distance_samples, gaussian_stats, GaussianStats};

/// Above this feature dimension the Fréchet distance is computed from the
/// samples instead of from `dim × dim` covariances.
pub const SAMPLE_ROUTE_DIM: usize = 256;

/// `1 − mean dist(original, edited)`.
pub fn image_fidelity<F>(pairs: &[(&Raster, &Raster)], mut dist: F) -> Result<f64>
where
    F: FnMut(&Raster, &Raster) -> Result<f64>,
{
    if pairs.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    let mut sum = 0.0;
    for (a, b) in pairs {
        let d = dist(a, b)?;
        if !(0.0..=1.0).contains(&d) {
            return Err(Error::InvalidMetric { value: d });
        }
        sum += d;
    }
    Ok(1.0 - sum / pairs.len() as f64)
}

/// Mean absolute difference over co-registered samples.
pub fn default_distance(a: &Raster, b: &Raster) -> Result<f64> {
    if !a.same_shape(b) {
        return Err(Error::DimensionMismatch(format!(
            "{}x{}x{} vs {}x{}x{}",
            a.width(),
            a.height(),
            a.channels(),
            b.width(),
            b.height(),
            b.channels()
        )));
    }
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| libm::fabs(x - y))
        .sum();
    Ok(sum / a.data().len() as f64)
}

/// Fréchet distance between two feature sets, picking the covariance route
/// for small dimensions and the sample route above [`SAMPLE_ROUTE_DIM`].
pub fn feature_set_distance(x: &[Vec<f64>], y: &[Vec<f64>]) -> Result<f64> {
    let dim = x.first().map_or(0, Vec::len);
    if dim > SAMPLE_ROUTE_DIM {
        frechet_distance_samples(x, y)
    } else {
        frechet_distance(&gaussian_stats(x)?, &gaussian_stats(y)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MetricVariants {
    pub image_fidelity: &'static str,
    pub fid: &'static str,
    pub sfid: &'static str,
}

pub const VARIANTS: MetricVariants = MetricVariants {
    image_fidelity: "IF/mad",
    fid: "FID/rp64",
    sfid: "sFID/rp64g7",
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    /// Side of the square perspective views.
    pub view_size: usize,
    /// Seed of the random-projection extractor.
    pub seed: u64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            view_size: 224,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FovMetrics {
    pub fov_deg: f64,
    pub if_score: f64,
    /// `None` when fewer than two pairs were evaluated.
    pub fid: Option<f64>,
    pub sfid: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    /// Means over `per_fov`.
    pub if_score: f64,
    pub fid: Option<f64>,
    pub sfid: Option<f64>,
    pub per_fov: Vec<FovMetrics>,
    pub variants: MetricVariants,
    pub seed: u64,
}

struct Views {
    originals: Vec<Raster>,
    editeds: Vec<Raster>,
}

fn views_at(
    originals: &[ErpImage],
    editeds: &[ErpImage],
    centers: &[SphericalCoord],
    fov: f64,
    size: usize,
) -> Result<Views> {
    let mut v = Views {
        originals: Vec::new(),
        editeds: Vec::new(),
    };
    for ((o, e), c) in originals.iter().zip(editeds).zip(centers) {
        let spec = PerspectiveSpec::new(*c, fov, size)?;
        v.originals.push(extract_perspective(o, &spec)?);
        v.editeds.push(extract_perspective(e, &spec)?);
    }
    Ok(v)
}

fn check_sets(
    originals: &[ErpImage],
    editeds: &[ErpImage],
    centers: &[SphericalCoord],
    fovs: &[f64],
) -> Result<()> {
    if originals.len() != editeds.len() || originals.len() != centers.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} originals, {} edited images, {} view centers",
            originals.len(),
            editeds.len(),
            centers.len()
        )));
    }
    if originals.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    if fovs.is_empty() {
        return Err(Error::InvalidArgument("no FOVs requested".into()));
    }
    Ok(())
}

fn evaluate(
    originals: &[ErpImage],
    editeds: &[ErpImage],
    centers: &[SphericalCoord],
    fovs: &[f64],
    opts: &EvalOptions,
    with_fid: bool,
) -> Result<MetricReport> {
    check_sets(originals, editeds, centers, fovs)?;
    let mut per_fov = Vec::with_capacity(fovs.len());
    for &fov in fovs {
        let views = views_at(originals, editeds, centers, fov, opts.view_size)?;
        let pairs: Vec<(&Raster, &Raster)> = views.originals.iter().zip(&views.editeds).collect();
        let if_score = image_fidelity(&pairs, default_distance)?;
        let (fid, sfid) = if with_fid {
            let channels = views.originals[0].channels();
            let proj = RandomProjection::new(opts.seed, channels, DEFAULT_PATCH, DEFAULT_DIM)?;
            let global = |set: &[Raster]| -> Result<Vec<Vec<f64>>> {
                set.iter().map(|r| proj.global_features(r)).collect()
            };
            let spatial = |set: &[Raster]| -> Result<Vec<Vec<f64>>> {
                set.iter()
                    .map(|r| proj.spatial_features(r, DEFAULT_GRID))
                    .collect()
            };
            let fid = feature_set_distance(&global(&views.originals)?, &global(&views.editeds)?)?;
            let sfid =
                feature_set_distance(&spatial(&views.originals)?, &spatial(&views.editeds)?)?;
            (Some(fid), Some(sfid))
        } else {
            (None, None)
        };
        per_fov.push(FovMetrics {
            fov_deg: fov,
            if_score,
            fid,
            sfid,
        });
    }
    let n = per_fov.len() as f64;
    let mean_opt = |f: fn(&FovMetrics) -> Option<f64>| -> Option<f64> {
        per_fov.iter().map(f).sum::<Option<f64>>().map(|s| s / n)
    };
    Ok(MetricReport {
        if_score: per_fov.iter().map(|m| m.if_score).sum::<f64>() / n,
        fid: mean_opt(|m| m.fid),
        sfid: mean_opt(|m| m.sfid),
        per_fov,
        variants: VARIANTS,
        seed: opts.seed,
    })
}

/// IF, FID and sFID between the perspective views of `originals` and
/// `editeds` at each FOV; view `k` is centered at `centers[k]`.
///
/// FID needs at least two pairs.
pub fn evaluate_metrics(
    originals: &[ErpImage],
    editeds: &[ErpImage],
    centers: &[SphericalCoord],
    fovs: &[f64],
    opts: &EvalOptions,
) -> Result<MetricReport> {
    if originals.len() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: originals.len(),
        });
    }
    evaluate(originals, editeds, centers, fovs, opts, true)
}

/// IF only, valid for a single pair; the Fréchet fields are `None`.
pub fn evaluate_fidelity(
    originals: &[ErpImage],
    editeds: &[ErpImage],
    centers: &[SphericalCoord],
    fovs: &[f64],
    opts: &EvalOptions,
) -> Result<MetricReport> {
    evaluate(originals, editeds, centers, fovs, opts, false)
}
