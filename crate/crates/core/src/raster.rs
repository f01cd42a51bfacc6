//! Image containers: planar rasters, ERP panoramas and binary masks.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::sphere::wrap;

/// Sample positions this close to an integer are read without blending.
const SNAP_EPS: f64 = 1e-9;

/// Row-major, channel-interleaved image with samples in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Raster {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || channels == 0 {
            return Err(Error::InvalidArgument(format!(
                "raster dimensions {width}x{height}x{channels} must be non-zero"
            )));
        }
        if data.len() != width * height * channels {
            return Err(Error::DimensionMismatch(format!(
                "{} samples for a {width}x{height}x{channels} raster",
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidArgument(format!("sample {v} outside [0, 1]")));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(
            width,
            height,
            channels,
            vec![value; width * height * channels],
        )
    }

    /// Builds a raster by evaluating `f(x, y, out)` at every sample; outputs
    /// are clamped into `[0, 1]`.
    pub fn from_fn<F>(width: usize, height: usize, channels: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, usize, &mut [f64]),
    {
        let mut data = vec![0.0; width * height * channels];
        for y in 0..height {
            for x in 0..width {
                let px = &mut data[(y * width + x) * channels..][..channels];
                f(x, y, px);
                for v in px.iter_mut() {
                    *v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
                }
            }
        }
        Self::new(width, height, channels, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[f64] {
        let c = self.channels;
        &self.data[(y * self.width + x) * c..][..c]
    }

    pub fn same_shape(&self, other: &Raster) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    /// Bilinear sample with horizontal wrap and vertical clamp to the first
    /// and last rows.
    pub fn sample_bilinear_wrap(&self, x: f64, y: f64, out: &mut [f64]) {
        let (w, h) = (self.width, self.height);
        let x = snap(wrap(x, w as f64));
        let y = snap(y.clamp(0.0, (h - 1) as f64));
        let x0 = libm::floor(x);
        let y0 = libm::floor(y);
        let fx = x - x0;
        let fy = y - y0;
        let x0 = x0 as usize % w;
        let x1 = (x0 + 1) % w;
        let y0 = y0 as usize;
        let y1 = (y0 + 1).min(h - 1);
        if fx == 0.0 && fy == 0.0 {
            out.copy_from_slice(self.pixel(x0, y0));
            return;
        }
        let (a, b, c, d) = (
            self.pixel(x0, y0),
            self.pixel(x1, y0),
            self.pixel(x0, y1),
            self.pixel(x1, y1),
        );
        for (k, o) in out.iter_mut().enumerate() {
            let top = a[k] + (b[k] - a[k]) * fx;
            let bottom = c[k] + (d[k] - c[k]) * fx;
            *o = (top + (bottom - top) * fy).clamp(0.0, 1.0);
        }
    }

    /// Nearest-neighbour sample with horizontal wrap and vertical clamp.
    pub fn sample_nearest_wrap(&self, x: f64, y: f64, out: &mut [f64]) {
        let (xi, yi) = nearest_index(x, y, self.width, self.height);
        out.copy_from_slice(self.pixel(xi, yi));
    }
}

fn snap(v: f64) -> f64 {
    let r = libm::round(v);
    if libm::fabs(v - r) < SNAP_EPS {
        r
    } else {
        v
    }
}

pub(crate) fn nearest_index(x: f64, y: f64, width: usize, height: usize) -> (usize, usize) {
    let xi = libm::round(wrap(x, width as f64)) as usize % width;
    let yi = (libm::round(y.clamp(0.0, (height - 1) as f64)) as usize).min(height - 1);
    (xi, yi)
}

/// Equirectangular panorama: a raster with `W = 2·H`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErpImage(Raster);

impl ErpImage {
    pub fn new(raster: Raster) -> Result<Self> {
        if raster.width != 2 * raster.height {
            return Err(Error::InvalidArgument(format!(
                "ERP image must have width = 2 * height, got {}x{}",
                raster.width, raster.height
            )));
        }
        Ok(Self(raster))
    }

    pub fn raster(&self) -> &Raster {
        &self.0
    }

    pub fn into_raster(self) -> Raster {
        self.0
    }

    pub fn width(&self) -> usize {
        self.0.width
    }

    pub fn height(&self) -> usize {
        self.0.height
    }

    pub fn channels(&self) -> usize {
        self.0.channels
    }
}

/// Binary mask; 1 marks editable samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl MaskImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(
                "mask dimensions must be non-zero".into(),
            ));
        }
        if data.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{} mask samples for {width}x{height}",
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| **v > 1) {
            return Err(Error::InvalidArgument(format!(
                "mask value {v} is not binary"
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Any nonzero input sample becomes 1.
    pub fn binarize(width: usize, height: usize, raw: &[u8]) -> Result<Self> {
        Self::new(
            width,
            height,
            raw.iter().map(|&v| u8::from(v != 0)).collect(),
        )
    }

    pub fn filled(width: usize, height: usize, value: bool) -> Self {
        Self {
            width,
            height,
            data: vec![u8::from(value); width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x] != 0
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|v| **v != 0).count()
    }

    /// Downsample by an integer factor. Each output cell takes the majority
    /// of its block; ties resolve to editable.
    pub fn downsample_majority(&self, factor: usize) -> Result<Self> {
        if factor == 0 || self.width % factor != 0 || self.height % factor != 0 {
            return Err(Error::InvalidArgument(format!(
                "factor {factor} does not divide mask size {}x{}",
                self.width, self.height
            )));
        }
        let (w, h) = (self.width / factor, self.height / factor);
        let block = factor * factor;
        let mut data = vec![0u8; w * h];
        for y in 0..h {
            for x in 0..w {
                let mut on = 0;
                for by in 0..factor {
                    let row = (y * factor + by) * self.width + x * factor;
                    on += self.data[row..row + factor]
                        .iter()
                        .filter(|v| **v != 0)
                        .count();
                }
                data[y * w + x] = u8::from(2 * on >= block);
            }
        }
        Self::new(w, h, data)
    }
}
