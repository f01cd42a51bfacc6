use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::raster::{ErpImage, Raster};
use crate::sphere::{wrap, PixelCoord};

/// Grid of feature vectors; the optimized variable of the drag loop.
///
/// Cells follow the raster convention: cell `(x, y)` sits at field position
/// `(x, y)` and maps to image position `(x·s, y·s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureField {
    width: usize,
    height: usize,
    dim: usize,
    downsample: usize,
    data: Vec<f64>,
}

/// Bilinear weights of a continuous position over at most four cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stencil {
    /// `(cell index, weight)`; cell index is `y * width + x`.
    pub taps: [(usize, f64); 4],
    /// The position was outside the vertical range and got clamped.
    pub clamped: bool,
}

impl FeatureField {
    pub fn new(
        width: usize,
        height: usize,
        dim: usize,
        downsample: usize,
        data: Vec<f64>,
    ) -> Result<Self> {
        if width < 2 || height < 2 || dim == 0 || downsample == 0 {
            return Err(Error::InvalidArgument(format!(
                "feature field {width}x{height}x{dim} (factor {downsample}) is too small"
            )));
        }
        if data.len() != width * height * dim {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {width}x{height}x{dim} field",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature field".into()));
        }
        Ok(Self {
            width,
            height,
            dim,
            downsample,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn downsample(&self) -> usize {
        self.downsample
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn cell(&self, x: usize, y: usize) -> &[f64] {
        &self.data[(y * self.width + x) * self.dim..][..self.dim]
    }

    pub fn image_to_field(&self, p: PixelCoord) -> PixelCoord {
        let s = self.downsample as f64;
        PixelCoord::new(p.i / s, p.j / s)
    }

    pub fn field_to_image(&self, p: PixelCoord) -> PixelCoord {
        let s = self.downsample as f64;
        PixelCoord::new(p.i * s, p.j * s)
    }

    /// Bilinear stencil with horizontal wrap; exact (single tap) at integer
    /// positions.
    pub fn stencil(&self, pos: PixelCoord) -> Stencil {
        let (w, h) = (self.width, self.height);
        let x = wrap(pos.i, w as f64);
        let max_y = (h - 1) as f64;
        let clamped = !(0.0..=max_y).contains(&pos.j);
        let y = pos.j.clamp(0.0, max_y);
        let (xf, yf) = (libm::floor(x), libm::floor(y));
        let (fx, fy) = (x - xf, y - yf);
        let x0 = xf as usize % w;
        let x1 = (x0 + 1) % w;
        let y0 = yf as usize;
        let y1 = (y0 + 1).min(h - 1);
        Stencil {
            taps: [
                (y0 * w + x0, (1.0 - fx) * (1.0 - fy)),
                (y0 * w + x1, fx * (1.0 - fy)),
                (y1 * w + x0, (1.0 - fx) * fy),
                (y1 * w + x1, fx * fy),
            ],
            clamped,
        }
    }

    pub(crate) fn eval_stencil(&self, st: &Stencil, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for &(cell, wgt) in &st.taps {
            if wgt == 0.0 {
                continue;
            }
            let src = &self.data[cell * self.dim..][..self.dim];
            for (o, s) in out.iter_mut().zip(src) {
                *o += wgt * s;
            }
        }
    }

    /// Feature at a continuous position. Returns `true` when the position was
    /// vertically out of range and clamped.
    pub fn sample_into(&self, pos: PixelCoord, out: &mut [f64]) -> bool {
        let st = self.stencil(pos);
        self.eval_stencil(&st, out);
        st.clamped
    }

    pub fn sample(&self, pos: PixelCoord) -> (Vec<f64>, bool) {
        let mut out = vec![0.0; self.dim];
        let clamped = self.sample_into(pos, &mut out);
        (out, clamped)
    }
}

/// Box-downsample every channel of `img` by `factor`.
pub fn build_field(img: &ErpImage, factor: usize) -> Result<FeatureField> {
    let src = img.raster();
    let (w, h, c) = (src.width(), src.height(), src.channels());
    if factor == 0 || w % factor != 0 || h % factor != 0 {
        return Err(Error::InvalidArgument(format!(
            "downsample factor {factor} does not divide {w}x{h}"
        )));
    }
    let (fw, fh) = (w / factor, h / factor);
    let norm = 1.0 / (factor * factor) as f64;
    let mut data = vec![0.0; fw * fh * c];
    for y in 0..fh {
        for x in 0..fw {
            let cell = &mut data[(y * fw + x) * c..][..c];
            for by in 0..factor {
                for bx in 0..factor {
                    let px = src.pixel(x * factor + bx, y * factor + by);
                    for (acc, v) in cell.iter_mut().zip(px) {
                        *acc += v;
                    }
                }
            }
            cell.iter_mut().for_each(|v| *v *= norm);
        }
    }
    FeatureField::new(fw, fh, c, factor, data)
}

/// Write the optimization delta `edited − initial` back onto the full
/// resolution panorama (bilinear upsampling, clamped to `[0, 1]`).
pub fn apply_field_delta(
    img: &ErpImage,
    initial: &FeatureField,
    edited: &FeatureField,
) -> Result<ErpImage> {
    let src = img.raster();
    let same = initial.width == edited.width
        && initial.height == edited.height
        && initial.dim == edited.dim
        && initial.downsample == edited.downsample;
    if !same || initial.dim != src.channels() {
        return Err(Error::DimensionMismatch(
            "field delta does not match the image".into(),
        ));
    }
    let delta = FeatureField {
        data: edited
            .data
            .iter()
            .zip(&initial.data)
            .map(|(a, b)| a - b)
            .collect(),
        ..initial.clone()
    };
    let s = initial.downsample as f64;
    let c = src.channels();
    let mut buf = vec![0.0; c];
    let raster = Raster::from_fn(src.width(), src.height(), c, |x, y, out| {
        delta.sample_into(PixelCoord::new(x as f64 / s, y as f64 / s), &mut buf);
        for ((o, base), d) in out.iter_mut().zip(src.pixel(x, y)).zip(&buf) {
            *o = base + d;
        }
    })?;
    ErpImage::new(raster)
}
