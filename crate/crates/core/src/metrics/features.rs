//! Deterministic stand-in feature extractor: a seeded random projection of
//! non-overlapping square patches followed by `tanh`.
//!
//! Global features mean-pool the patch responses over the whole image (one
//! `dim`-vector). Spatial features mean-pool inside each cell of a `g × g`
//! grid and concatenate the cells row-major (`dim·g²` values). Patches never
//! straddle grid cells, so translating an image by whole cells permutes the
//! cell descriptors.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::raster::Raster;

pub const DEFAULT_DIM: usize = 64;
pub const DEFAULT_PATCH: usize = 4;
pub const DEFAULT_GRID: usize = 7;

#[derive(Debug, Clone, PartialEq)]
pub struct RandomProjection {
    seed: u64,
    channels: usize,
    patch: usize,
    dim: usize,
    /// `dim` rows of `patch²·channels` Rademacher weights scaled by
    /// `1/√(patch²·channels)`.
    weights: Vec<f64>,
}

impl RandomProjection {
    pub fn new(seed: u64, channels: usize, patch: usize, dim: usize) -> Result<Self> {
        if channels == 0 || patch == 0 || dim == 0 {
            return Err(Error::InvalidArgument(format!(
                "projection needs non-zero channels, patch and dim (got {channels}, {patch}, {dim})"
            )));
        }
        let k = patch * patch * channels;
        let scale = 1.0 / libm::sqrt(k as f64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::with_capacity(dim * k);
        let mut bits = 0u32;
        for n in 0..dim * k {
            if n % 32 == 0 {
                bits = rng.next_u32();
            }
            weights.push(if bits & 1 == 1 { scale } else { -scale });
            bits >>= 1;
        }
        Ok(Self {
            seed,
            channels,
            patch,
            dim,
            weights,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Response of the patch with top-left corner `(x0, y0)`, added into `acc`.
    fn accumulate(&self, img: &Raster, x0: usize, y0: usize, acc: &mut [f64], patch: &mut [f64]) {
        let (p, c) = (self.patch, self.channels);
        for dy in 0..p {
            for dx in 0..p {
                let px = img.pixel(x0 + dx, y0 + dy);
                for ch in 0..c {
                    patch[(dy * p + dx) * c + ch] = px[ch] - 0.5;
                }
            }
        }
        let k = patch.len();
        for (a, row) in acc.iter_mut().zip(self.weights.chunks_exact(k)) {
            let z: f64 = row.iter().zip(patch.iter()).map(|(w, v)| w * v).sum();
            *a += libm::tanh(z);
        }
    }

    /// Mean response over the patches tiling `[x0, x1) × [y0, y1)`.
    fn pool(&self, img: &Raster, x0: usize, x1: usize, y0: usize, y1: usize, out: &mut [f64]) {
        let p = self.patch;
        let mut scratch = vec![0.0; p * p * self.channels];
        out.iter_mut().for_each(|v| *v = 0.0);
        let mut count = 0usize;
        let mut y = y0;
        while y + p <= y1 {
            let mut x = x0;
            while x + p <= x1 {
                self.accumulate(img, x, y, out, &mut scratch);
                count += 1;
                x += p;
            }
            y += p;
        }
        out.iter_mut().for_each(|v| *v /= count as f64);
    }

    fn check(&self, img: &Raster) -> Result<()> {
        if img.channels() != self.channels {
            return Err(Error::DimensionMismatch(format!(
                "image has {} channels, projection expects {}",
                img.channels(),
                self.channels
            )));
        }
        Ok(())
    }

    pub fn global_features(&self, img: &Raster) -> Result<Vec<f64>> {
        self.check(img)?;
        if img.width() < self.patch || img.height() < self.patch {
            return Err(Error::InvalidArgument(format!(
                "image {}x{} smaller than a {}-pixel patch",
                img.width(),
                img.height(),
                self.patch
            )));
        }
        let mut out = vec![0.0; self.dim];
        self.pool(img, 0, img.width(), 0, img.height(), &mut out);
        Ok(out)
    }

    /// Cell `(gx, gy)` covers columns `[gx·W/g, (gx+1)·W/g)` (integer
    /// division), likewise for rows.
    pub fn spatial_features(&self, img: &Raster, grid: usize) -> Result<Vec<f64>> {
        self.check(img)?;
        if grid == 0 || img.width() / grid < self.patch || img.height() / grid < self.patch {
            return Err(Error::InvalidArgument(format!(
                "image {}x{} too small for a {grid}x{grid} grid of {}-pixel patches",
                img.width(),
                img.height(),
                self.patch
            )));
        }
        let (w, h) = (img.width(), img.height());
        let mut out = vec![0.0; self.dim * grid * grid];
        for gy in 0..grid {
            for gx in 0..grid {
                let cell = &mut out[(gy * grid + gx) * self.dim..][..self.dim];
                self.pool(
                    img,
                    gx * w / grid,
                    (gx + 1) * w / grid,
                    gy * h / grid,
                    (gy + 1) * h / grid,
                    cell,
                );
            }
        }
        Ok(out)
    }
}

/// `DEFAULT_DIM` global features with the default patch size.
pub fn global_features(img: &Raster, seed: u64) -> Result<Vec<f64>> {
    RandomProjection::new(seed, img.channels(), DEFAULT_PATCH, DEFAULT_DIM)?.global_features(img)
}

/// `DEFAULT_DIM·DEFAULT_GRID²` spatial features with the default patch size.
pub fn spatial_features(img: &Raster, seed: u64) -> Result<Vec<f64>> {
    RandomProjection::new(seed, img.channels(), DEFAULT_PATCH, DEFAULT_DIM)?
        .spatial_features(img, DEFAULT_GRID)
}
