use core::f64::consts::{FRAC_PI_2, PI};

use alloc::vec::Vec;

use super::field::FeatureField;
use super::{DragConfig, SsrtAxis};
use crate::error::Result;
use crate::sphere::{pixel_to_unit, unit_angle, PixelCoord};

/// Tracking window around the current handle, in field cells.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchRegion {
    /// Integer cell the window is centered on.
    pub center: (usize, usize),
    /// Horizontal and vertical radii before discretization.
    pub rx: f64,
    pub ry: f64,
    /// Member cells `(x, y)` in row-major order, `x` already wrapped.
    pub cells: Vec<(usize, usize)>,
}

impl SearchRegion {
    /// Solid angle of the discretized window, in steradians.
    pub fn solid_angle(&self, width: usize, height: usize) -> f64 {
        let cell = (2.0 * PI / width as f64) * (PI / height as f64);
        self.cells
            .iter()
            .map(|&(_, y)| libm::cos(FRAC_PI_2 - y as f64 / height as f64 * PI) * cell)
            .sum()
    }
}

/// Latitude of a continuous field row.
pub(crate) fn row_latitude(j: f64, height: usize) -> f64 {
    FRAC_PI_2 - j.clamp(0.0, height as f64) / height as f64 * PI
}

/// Continuous radii of the window at `handle`.
///
/// With SSRT the vertical radius is `r_base / cos(lat)`, capped at `r_cap`;
/// without it the window is the square `r_base × r_base`.
pub fn search_radii(
    handle: PixelCoord,
    cfg: &DragConfig,
    width: usize,
    height: usize,
) -> (f64, f64) {
    if !cfg.ssrt {
        return (cfg.r_base, cfg.r_base);
    }
    let cos_lat = libm::cos(row_latitude(handle.j, height));
    let cap = cfg.r_cap_for(height);
    let stretch = |r: f64| {
        if cos_lat <= 0.0 {
            cap
        } else {
            (r / cos_lat).min(cap)
        }
    };
    match cfg.ssrt_axis {
        SsrtAxis::Vertical => (cfg.r0(), stretch(cfg.r_base)),
        SsrtAxis::Horizontal => (stretch(cfg.r0()).min((width / 2) as f64), cfg.r_base),
    }
}

/// Half-width in cells for a real radius: nearest integer, halves rounding up.
fn half_extent(r: f64) -> i64 {
    libm::floor(r + 0.5) as i64
}

pub fn build_search_region(
    handle: PixelCoord,
    cfg: &DragConfig,
    width: usize,
    height: usize,
) -> SearchRegion {
    let (rx, ry) = search_radii(handle, cfg, width, height);
    let (w, h) = (width as i64, height as i64);
    let cx = (libm::round(handle.i) as i64).rem_euclid(w);
    let cy = (libm::round(handle.j) as i64).clamp(0, h - 1);
    let nx = half_extent(rx).min((w - 1) / 2);
    let ny = half_extent(ry);
    let mut cells = Vec::with_capacity(((2 * nx + 1) * (2 * ny + 1)) as usize);
    for y in (cy - ny).max(0)..=(cy + ny).min(h - 1) {
        let mut row: Vec<(usize, usize)> = (-nx..=nx)
            .map(|dx| ((cx + dx).rem_euclid(w) as usize, y as usize))
            .collect();
        row.sort_unstable();
        cells.extend(row);
    }
    SearchRegion {
        center: (cx as usize, cy as usize),
        rx,
        ry,
        cells,
    }
}

/// Angular distances closer than this (radians) count as equal, so that
/// mirror-image cells tie exactly regardless of rounding.
const TIE_EPS: f64 = 1e-12;

/// Cell of `region` whose feature is closest (L1) to `reference`. Ties go to
/// the cell nearest `current` on the sphere, then to row-major order.
pub fn track_in_field(
    field: &FeatureField,
    reference: &[f64],
    current: PixelCoord,
    region: &SearchRegion,
) -> Result<PixelCoord> {
    let (w, h) = (field.width(), field.height());
    let here = pixel_to_unit(current, w, h)?.as_vec();
    let mut best: Option<(f64, f64, (usize, usize))> = None;
    for &(x, y) in &region.cells {
        let cost: f64 = field
            .cell(x, y)
            .iter()
            .zip(reference)
            .map(|(a, b)| libm::fabs(a - b))
            .sum();
        if let Some((bc, _, _)) = best {
            if cost > bc {
                continue;
            }
        }
        let p = PixelCoord::new(x as f64, y as f64);
        let dist = unit_angle(here, pixel_to_unit(p, w, h)?.as_vec());
        let better = match best {
            None => true,
            Some((bc, bd, _)) => cost < bc || (cost == bc && dist < bd - TIE_EPS),
        };
        if better {
            best = Some((cost, dist, (x, y)));
        }
    }
    Ok(match best {
        Some((_, _, (x, y))) => PixelCoord::new(x as f64, y as f64),
        None => current,
    })
}
