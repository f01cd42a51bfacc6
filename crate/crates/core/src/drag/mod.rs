//! The drag loop: motion supervision over a feature field, followed by point
//! tracking inside a latitude-aware search window, until the handle reaches
//! the target.
//!
//! The field plays both roles of the optimized latent and its feature maps
//! (the feature extractor is the identity). Positions here are in field
//! cells; [`FeatureField::image_to_field`] converts from image pixels.

mod field;
mod loss;
mod region;

use core::f64::consts::PI;

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::raster::MaskImage;
use crate::sphere::{great_circle_direction, pixel_to_unit, unit_angle, DirectionVec2, PixelCoord};

pub use field::{apply_field_delta, build_field, FeatureField, Stencil};
pub use loss::{gradient_against, loss_against, LossValue, MotionPatch};
pub use region::{build_search_region, search_radii, track_in_field, SearchRegion};

/// Which window axis SSRT stretches by `1/cos(lat)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SsrtAxis {
    #[default]
    Vertical,
    Horizontal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DragConfig {
    /// Weight of the off-mask consistency term.
    pub lambda: f64,
    /// Gradient step size.
    pub lr: f64,
    /// Base tracking radius in cells.
    pub r_base: f64,
    /// Horizontal tracking radius; `None` means `r_base`.
    pub r0: Option<f64>,
    /// Half-size of the motion-supervision patch.
    pub r_motion: usize,
    pub max_iter: usize,
    /// Stop once the great-circle distance to the target is within this many
    /// cells (one cell = π/H′ radians).
    pub stop_eps: f64,
    /// Great-circle trajectory adjustment.
    pub gcta: bool,
    /// Spherical search-region tracking.
    pub ssrt: bool,
    pub ssrt_axis: SsrtAxis,
    /// Largest stretched radius; `None` means `H′/4`.
    pub r_cap: Option<f64>,
}

impl Default for DragConfig {
    fn default() -> Self {
        Self {
            lambda: 0.1,
            lr: 0.01,
            r_base: 3.0,
            r0: None,
            r_motion: 1,
            max_iter: 80,
            stop_eps: 1.0,
            gcta: true,
            ssrt: true,
            ssrt_axis: SsrtAxis::Vertical,
            r_cap: None,
        }
    }
}

impl DragConfig {
    pub fn r0(&self) -> f64 {
        self.r0.unwrap_or(self.r_base)
    }

    pub fn r_cap_for(&self, height: usize) -> f64 {
        self.r_cap.unwrap_or(height as f64 / 4.0)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(format!("drag config: {what}")));
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be >= 0");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("lr must be > 0");
        }
        if self.r_base.is_nan()
            || self.r_base < 1.0
            || self.r0().is_nan()
            || self.r0() < 1.0
            || self.r_motion < 1
        {
            return bad("radii must be >= 1");
        }
        if self.r_cap.is_some_and(|c| c.is_nan() || c < 1.0) {
            return bad("r_cap must be >= 1");
        }
        if self.max_iter < 1 {
            return bad("max_iter must be >= 1");
        }
        if self.stop_eps.is_nan() || self.stop_eps < 0.0 {
            return bad("stop_eps must be >= 0");
        }
        Ok(())
    }
}

/// Great-circle distance between two field positions, in cells.
pub fn cell_distance(a: PixelCoord, b: PixelCoord, width: usize, height: usize) -> Result<f64> {
    let pa = pixel_to_unit(a, width, height)?.as_vec();
    let pb = pixel_to_unit(b, width, height)?.as_vec();
    Ok(unit_angle(pa, pb) / (PI / height as f64))
}

/// Mutable state of one drag.
#[derive(Debug, Clone)]
pub struct DragState {
    k: usize,
    handle: PixelCoord,
    handle0: PixelCoord,
    field: FeatureField,
    field0: FeatureField,
    handle0_feature: Vec<f64>,
    trajectory: Vec<PixelCoord>,
}

impl DragState {
    pub fn new(field: FeatureField, handle: PixelCoord) -> Result<Self> {
        let max_y = (field.height() - 1) as f64;
        if !handle.is_finite() || !(0.0..=max_y).contains(&handle.j) {
            return Err(Error::InvalidArgument(format!(
                "handle ({}, {}) outside the field",
                handle.i, handle.j
            )));
        }
        let (handle0_feature, _) = field.sample(handle);
        Ok(Self {
            k: 0,
            handle,
            handle0: handle,
            field0: field.clone(),
            field,
            handle0_feature,
            trajectory: alloc::vec![handle],
        })
    }

    pub fn iteration(&self) -> usize {
        self.k
    }

    pub fn handle(&self) -> PixelCoord {
        self.handle
    }

    pub fn initial_handle(&self) -> PixelCoord {
        self.handle0
    }

    pub fn field(&self) -> &FeatureField {
        &self.field
    }

    pub fn initial_field(&self) -> &FeatureField {
        &self.field0
    }

    pub fn handle0_feature(&self) -> &[f64] {
        &self.handle0_feature
    }

    pub fn trajectory(&self) -> &[PixelCoord] {
        &self.trajectory
    }

    fn dims(&self) -> (usize, usize) {
        (self.field.width(), self.field.height())
    }
}

/// Direction of motion for this iteration: great-circle when GCTA is on,
/// the raw normalized pixel difference otherwise.
pub fn motion_direction(
    state: &DragState,
    target: PixelCoord,
    cfg: &DragConfig,
) -> Result<DirectionVec2> {
    let (w, h) = state.dims();
    if cfg.gcta {
        great_circle_direction(state.handle0, target, state.handle, w, h)
    } else {
        DirectionVec2::new(target.i - state.handle.i, target.j - state.handle.j)
            .map_err(|_| Error::AtTarget)
    }
}

pub fn motion_supervision_loss(
    state: &DragState,
    d: DirectionVec2,
    mask: &MaskImage,
    cfg: &DragConfig,
) -> Result<LossValue> {
    let patch = MotionPatch::new(&state.field, state.handle, d, cfg.r_motion);
    loss_against(&state.field, &state.field0, mask, &patch, cfg.lambda)
}

pub fn loss_gradient(
    state: &DragState,
    d: DirectionVec2,
    mask: &MaskImage,
    cfg: &DragConfig,
) -> Result<Vec<f64>> {
    let patch = MotionPatch::new(&state.field, state.handle, d, cfg.r_motion);
    gradient_against(&state.field, &state.field0, mask, &patch, cfg.lambda)
}

/// Best match for the initial handle feature inside `region`.
pub fn track_point(state: &DragState, region: &SearchRegion) -> Result<PixelCoord> {
    track_in_field(&state.field, &state.handle0_feature, state.handle, region)
}

/// One line of the per-iteration trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub k: usize,
    pub handle: PixelCoord,
    pub loss: f64,
    pub direction: DirectionVec2,
    pub rx: f64,
    pub ry: f64,
    pub next_handle: PixelCoord,
}

/// Outcome of a single [`DragState::step`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepOutcome {
    Moved(TraceRecord),
    /// The handle is already within `stop_eps` of the target.
    Converged,
}

impl DragState {
    /// One iteration: stop check, gradient step on the field, re-tracking.
    pub fn step(
        &mut self,
        target: PixelCoord,
        mask: &MaskImage,
        cfg: &DragConfig,
    ) -> Result<StepOutcome> {
        let (w, h) = self.dims();
        if cell_distance(self.handle, target, w, h)? <= cfg.stop_eps {
            return Ok(StepOutcome::Converged);
        }
        let d = match motion_direction(self, target, cfg) {
            Ok(d) => d,
            Err(Error::AtTarget) => return Ok(StepOutcome::Converged),
            Err(e) => return Err(e),
        };
        let patch = MotionPatch::new(&self.field, self.handle, d, cfg.r_motion);
        let loss = loss_against(&self.field, &self.field0, mask, &patch, cfg.lambda)?;
        if !loss.total.is_finite() {
            return Err(Error::NonFinite(format!("loss at iteration {}", self.k)));
        }
        let grad = gradient_against(&self.field, &self.field0, mask, &patch, cfg.lambda)?;
        for (v, g) in self.field.data_mut().iter_mut().zip(&grad) {
            *v -= cfg.lr * g;
        }

        let region = build_search_region(self.handle, cfg, w, h);
        let next = track_point(self, &region)?;
        let record = TraceRecord {
            k: self.k,
            handle: self.handle,
            loss: loss.total,
            direction: d,
            rx: region.rx,
            ry: region.ry,
            next_handle: next,
        };
        self.handle = next;
        self.k += 1;
        self.trajectory.push(next);
        Ok(StepOutcome::Moved(record))
    }
}

#[derive(Debug, Clone)]
pub struct DragResult {
    pub converged: bool,
    pub iterations: usize,
    pub trajectory: Vec<PixelCoord>,
    pub final_field: FeatureField,
    /// Great-circle distance from the final handle to the target, in cells.
    pub final_distance: f64,
}

impl DragResult {
    pub fn final_handle(&self) -> PixelCoord {
        *self
            .trajectory
            .last()
            .expect("trajectory holds the start point")
    }
}

/// Drag `handle` to `target` over `field`. `mask` is at field resolution.
pub fn run_drag(
    field: &FeatureField,
    mask: &MaskImage,
    handle: PixelCoord,
    target: PixelCoord,
    cfg: &DragConfig,
) -> Result<DragResult> {
    run_drag_traced(field, mask, handle, target, cfg, |_| {})
}

/// [`run_drag`] reporting every iteration to `trace`.
pub fn run_drag_traced<F>(
    field: &FeatureField,
    mask: &MaskImage,
    handle: PixelCoord,
    target: PixelCoord,
    cfg: &DragConfig,
    mut trace: F,
) -> Result<DragResult>
where
    F: FnMut(&TraceRecord),
{
    cfg.validate()?;
    loss::check_mask(field, mask)?;
    let (w, h) = (field.width(), field.height());
    if !target.is_finite() || !(0.0..=(h - 1) as f64).contains(&target.j) {
        return Err(Error::InvalidArgument(format!(
            "target ({}, {}) outside the field",
            target.i, target.j
        )));
    }
    let start = pixel_to_unit(handle, w, h)?.as_vec();
    if unit_angle(start, pixel_to_unit(target, w, h)?.as_vec()) < 1e-12 {
        return Err(Error::InvalidArgument("handle and target coincide".into()));
    }

    let mut state = DragState::new(field.clone(), handle)?;
    let mut converged = false;
    while state.k < cfg.max_iter {
        match state.step(target, mask, cfg)? {
            StepOutcome::Converged => {
                converged = true;
                break;
            }
            StepOutcome::Moved(rec) => trace(&rec),
        }
    }
    let final_distance = cell_distance(state.handle, target, w, h)?;
    converged |= final_distance <= cfg.stop_eps;
    Ok(DragResult {
        converged,
        iterations: state.k,
        trajectory: state.trajectory,
        final_field: state.field,
        final_distance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blob_field(w: usize, h: usize, cx: f64, cy: f64, sigma: f64) -> FeatureField {
        let mut data = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                let dx = libm::fabs(x as f64 - cx);
                let dx = dx.min(w as f64 - dx);
                let dy = y as f64 - cy;
                data.push(libm::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma)));
            }
        }
        FeatureField::new(w, h, 1, 1, data).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(DragConfig::default().validate().is_ok());
        let bad = [
            DragConfig {
                lambda: -1.0,
                ..Default::default()
            },
            DragConfig {
                lr: 0.0,
                ..Default::default()
            },
            DragConfig {
                r_base: 0.5,
                ..Default::default()
            },
            DragConfig {
                max_iter: 0,
                ..Default::default()
            },
            DragConfig {
                r_motion: 0,
                ..Default::default()
            },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }

    #[test]
    fn already_at_target_converges_without_touching_field() {
        let f = blob_field(128, 64, 40.0, 32.0, 2.0);
        let m = MaskImage::filled(128, 64, true);
        let r = run_drag(
            &f,
            &m,
            PixelCoord::new(40.0, 32.0),
            PixelCoord::new(40.5, 32.0),
            &DragConfig::default(),
        )
        .unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 0);
        assert_eq!(r.final_field, f);
        assert!(r.final_distance <= 1.0);
    }

    #[test]
    fn equatorial_direction_matches_planar() {
        let f = blob_field(128, 64, 40.0, 32.0, 2.0);
        let state = DragState::new(f, PixelCoord::new(40.0, 32.0)).unwrap();
        let target = PixelCoord::new(50.0, 32.0);
        let gc = motion_direction(&state, target, &DragConfig::default()).unwrap();
        let planar = motion_direction(
            &state,
            target,
            &DragConfig {
                gcta: false,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((gc.di - planar.di).abs() < 1e-9 && (gc.dj - planar.dj).abs() < 1e-9);
    }

    #[test]
    fn high_latitude_direction_differs_from_planar() {
        let f = blob_field(128, 64, 64.0, 8.0, 2.0);
        let state = DragState::new(f, PixelCoord::new(64.0, 8.0)).unwrap();
        let target = PixelCoord::new(96.0, 8.0);
        let gc = motion_direction(&state, target, &DragConfig::default()).unwrap();
        let planar = motion_direction(
            &state,
            target,
            &DragConfig {
                gcta: false,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!((planar.di, planar.dj), (1.0, 0.0));
        assert!((gc.norm() - 1.0).abs() < 1e-12);
        // the great circle toward a point on the same parallel bulges poleward
        assert!(gc.dj < -0.1, "{gc:?}");
    }

    #[test]
    fn frozen_references_survive_steps() {
        let f = blob_field(64, 32, 20.0, 16.0, 2.0);
        let m = MaskImage::filled(64, 32, true);
        let mut state = DragState::new(f.clone(), PixelCoord::new(20.0, 16.0)).unwrap();
        let feat0 = state.handle0_feature().to_vec();
        let cfg = DragConfig {
            lr: 0.3,
            ..Default::default()
        };
        for _ in 0..5 {
            state.step(PixelCoord::new(28.0, 16.0), &m, &cfg).unwrap();
        }
        assert_eq!(state.initial_field(), &f);
        assert_eq!(state.handle0_feature(), &feat0[..]);
        assert_ne!(state.field(), &f);
        assert_eq!(state.trajectory().len(), state.iteration() + 1);
    }

    #[test]
    fn mask_term_limits_off_mask_drift() {
        // editable only in a 9x9 patch around the handle
        let (w, h) = (64, 32);
        let f = blob_field(w, h, 20.0, 16.0, 2.0);
        let mut mdata = alloc::vec![0u8; w * h];
        for y in 12..=20 {
            for x in 16..=24 {
                mdata[y * w + x] = 1;
            }
        }
        let m = MaskImage::new(w, h, mdata).unwrap();
        let drift = |lambda: f64| {
            let cfg = DragConfig {
                lambda,
                lr: 0.3,
                max_iter: 30,
                ..Default::default()
            };
            let r = run_drag(
                &f,
                &m,
                PixelCoord::new(20.0, 16.0),
                PixelCoord::new(30.0, 16.0),
                &cfg,
            )
            .unwrap();
            r.final_field
                .data()
                .iter()
                .zip(f.data())
                .enumerate()
                .filter(|(k, _)| m.data()[*k] == 0)
                .map(|(_, (a, b))| (a - b).abs())
                .fold(0.0, f64::max)
        };
        let with = drift(0.1);
        let without = drift(0.0);
        assert!(with < without, "{with} vs {without}");

        // cells outside the mask and outside every motion stencil only see
        // the mask term: at most lr * lambda per step
        let cfg = DragConfig {
            lambda: 0.1,
            lr: 0.3,
            ..Default::default()
        };
        let mut state = DragState::new(f.clone(), PixelCoord::new(20.0, 16.0)).unwrap();
        for _ in 0..5 {
            let before = state.field().clone();
            let d = motion_direction(&state, PixelCoord::new(30.0, 16.0), &cfg).unwrap();
            let patch = MotionPatch::new(state.field(), state.handle(), d, cfg.r_motion);
            let support: alloc::collections::BTreeSet<usize> = patch.support().collect();
            state.step(PixelCoord::new(30.0, 16.0), &m, &cfg).unwrap();
            for (k, (a, b)) in state.field().data().iter().zip(before.data()).enumerate() {
                if m.data()[k] == 0 && !support.contains(&k) {
                    assert!((a - b).abs() <= cfg.lr * cfg.lambda + 1e-15);
                }
            }
        }
    }

    #[test]
    fn run_drag_rejects_bad_input() {
        let f = blob_field(64, 32, 20.0, 16.0, 2.0);
        let m = MaskImage::filled(64, 32, true);
        let cfg = DragConfig::default();
        let p = PixelCoord::new(20.0, 16.0);
        assert!(run_drag(&f, &m, p, p, &cfg).is_err());
        assert!(run_drag(
            &f,
            &MaskImage::filled(32, 16, true),
            p,
            PixelCoord::new(25.0, 16.0),
            &cfg
        )
        .is_err());
        assert!(run_drag(&f, &m, p, PixelCoord::new(25.0, 40.0), &cfg).is_err());
    }

    #[test]
    fn trace_reports_every_iteration() {
        let f = blob_field(64, 32, 20.0, 16.0, 2.0);
        let m = MaskImage::filled(64, 32, true);
        let cfg = DragConfig {
            max_iter: 7,
            ..Default::default()
        };
        let mut ks = Vec::new();
        let r = run_drag_traced(
            &f,
            &m,
            PixelCoord::new(20.0, 16.0),
            PixelCoord::new(40.0, 16.0),
            &cfg,
            |t| ks.push(t.k),
        )
        .unwrap();
        assert_eq!(ks, (0..r.iterations).collect::<Vec<_>>());
        assert_eq!(r.trajectory.len(), r.iterations + 1);
    }
}
