//! Motion-supervision loss and its exact subgradient.
//!
//! `L = Σ_q ‖F(q + d) − sg(F(q))‖₁ + λ·‖(F − F⁰) ⊙ (1 − M)‖₁`
//!
//! The reference features `sg(F(q))` are captured once in a [`MotionPatch`];
//! the loss and gradient are then functions of the field alone, which is what
//! the stop-gradient means.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::field::{FeatureField, Stencil};
use crate::error::{Error, Result};
use crate::raster::MaskImage;
use crate::sphere::{DirectionVec2, PixelCoord};

#[derive(Debug, Clone, PartialEq)]
struct PatchPoint {
    moved: Stencil,
    reference: Vec<f64>,
}

/// Patch of supervision points around the current handle with their frozen
/// reference features.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionPatch {
    points: Vec<PatchPoint>,
    /// Some patch points fell outside the vertical range and were skipped.
    pub clipped: bool,
}

impl MotionPatch {
    /// Points `q = handle + (a, b)` for integer `a, b ∈ [−radius, radius]`.
    pub fn new(field: &FeatureField, handle: PixelCoord, d: DirectionVec2, radius: usize) -> Self {
        let r = radius as i64;
        let max_y = (field.height() - 1) as f64;
        let mut points = Vec::with_capacity(((2 * r + 1) * (2 * r + 1)) as usize);
        let mut clipped = false;
        for b in -r..=r {
            for a in -r..=r {
                let q = PixelCoord::new(handle.i + a as f64, handle.j + b as f64);
                let moved = PixelCoord::new(q.i + d.di, q.j + d.dj);
                if !(0.0..=max_y).contains(&q.j) || !(0.0..=max_y).contains(&moved.j) {
                    clipped = true;
                    continue;
                }
                let (reference, _) = field.sample(q);
                points.push(PatchPoint {
                    moved: field.stencil(moved),
                    reference,
                });
            }
        }
        Self { points, clipped }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Cells touched by the moved-side stencils.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.points
            .iter()
            .flat_map(|p| p.moved.taps.iter().filter(|t| t.1 != 0.0).map(|t| t.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossValue {
    pub motion: f64,
    pub mask: f64,
    pub total: f64,
    pub clipped: bool,
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub(crate) fn check_mask(field: &FeatureField, mask: &MaskImage) -> Result<()> {
    if mask.width() != field.width() || mask.height() != field.height() {
        return Err(Error::DimensionMismatch(format!(
            "mask {}x{} does not match field {}x{}",
            mask.width(),
            mask.height(),
            field.width(),
            field.height()
        )));
    }
    Ok(())
}

fn check_pair(field: &FeatureField, field0: &FeatureField) -> Result<()> {
    if field.data().len() != field0.data().len() || field.width() != field0.width() {
        return Err(Error::DimensionMismatch(
            "field and initial field differ in shape".into(),
        ));
    }
    Ok(())
}

/// Loss of `field` against a fixed patch.
pub fn loss_against(
    field: &FeatureField,
    field0: &FeatureField,
    mask: &MaskImage,
    patch: &MotionPatch,
    lambda: f64,
) -> Result<LossValue> {
    check_mask(field, mask)?;
    check_pair(field, field0)?;
    let dim = field.dim();
    let mut buf = vec![0.0; dim];
    let mut motion = 0.0;
    for p in &patch.points {
        field.eval_stencil(&p.moved, &mut buf);
        motion += buf
            .iter()
            .zip(&p.reference)
            .map(|(a, b)| libm::fabs(a - b))
            .sum::<f64>();
    }
    let mut masked = 0.0;
    if lambda != 0.0 {
        for (cell, chunk) in field.data().chunks_exact(dim).enumerate() {
            if mask.data()[cell] != 0 {
                continue;
            }
            let base = &field0.data()[cell * dim..][..dim];
            masked += chunk
                .iter()
                .zip(base)
                .map(|(a, b)| libm::fabs(a - b))
                .sum::<f64>();
        }
    }
    let mask_term = lambda * masked;
    Ok(LossValue {
        motion,
        mask: mask_term,
        total: motion + mask_term,
        clipped: patch.clipped,
    })
}

/// Subgradient of [`loss_against`] with respect to every field entry;
/// `sign(0)` is taken as 0.
pub fn gradient_against(
    field: &FeatureField,
    field0: &FeatureField,
    mask: &MaskImage,
    patch: &MotionPatch,
    lambda: f64,
) -> Result<Vec<f64>> {
    check_mask(field, mask)?;
    check_pair(field, field0)?;
    let dim = field.dim();
    let mut grad = vec![0.0; field.data().len()];
    let mut buf = vec![0.0; dim];
    for p in &patch.points {
        field.eval_stencil(&p.moved, &mut buf);
        for c in 0..dim {
            let s = sign(buf[c] - p.reference[c]);
            if s == 0.0 {
                continue;
            }
            for &(cell, w) in &p.moved.taps {
                grad[cell * dim + c] += s * w;
            }
        }
    }
    if lambda != 0.0 {
        for (k, (a, b)) in field.data().iter().zip(field0.data()).enumerate() {
            if mask.data()[k / dim] == 0 {
                grad[k] += lambda * sign(a - b);
            }
        }
    }
    Ok(grad)
}
