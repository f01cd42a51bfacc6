use std::f64::consts::{FRAC_PI_2, PI, TAU};

use panodrag_core::drag::{
    build_search_region, gradient_against, loss_against, motion_supervision_loss, run_drag,
    search_radii, track_point, DragConfig, DragState, FeatureField, MotionPatch, SsrtAxis,
    StepOutcome,
};
use panodrag_core::{DirectionVec2, MaskImage, PixelCoord};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_field(
    rng: &mut ChaCha8Rng,
    w: usize,
    h: usize,
    dim: usize,
    levels: Option<u32>,
) -> FeatureField {
    let data = (0..w * h * dim)
        .map(|_| match levels {
            Some(n) => rng.random_range(0..n) as f64 / n as f64,
            None => rng.random_range(-1.0..1.0),
        })
        .collect();
    FeatureField::new(w, h, dim, 1, data).unwrap()
}

fn random_mask(rng: &mut ChaCha8Rng, w: usize, h: usize) -> MaskImage {
    MaskImage::new(
        w,
        h,
        (0..w * h).map(|_| u8::from(rng.random_bool(0.5))).collect(),
    )
    .unwrap()
}

// Independent bilinear sampler: wrap in x, clamp in y.
fn bilinear(f: &FeatureField, x: f64, y: f64, c: usize) -> f64 {
    let (w, h) = (f.width(), f.height());
    let x = x.rem_euclid(w as f64);
    let y = y.clamp(0.0, (h - 1) as f64);
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let x0 = x0 as usize % w;
    let y0 = y0 as usize;
    let x1 = (x0 + 1) % w;
    let y1 = (y0 + 1).min(h - 1);
    let v = |xx: usize, yy: usize| f.cell(xx, yy)[c];
    (1.0 - fy) * ((1.0 - fx) * v(x0, y0) + fx * v(x1, y0))
        + fy * ((1.0 - fx) * v(x0, y1) + fx * v(x1, y1))
}

/// Motion residuals `F(q + d) − F₀ref(q)` for every in-range patch point and
/// channel, with references taken from `reference_field`.
fn residuals(
    f: &FeatureField,
    reference_field: &FeatureField,
    handle: PixelCoord,
    d: DirectionVec2,
    r: i64,
) -> Vec<f64> {
    let max_y = (f.height() - 1) as f64;
    let mut out = Vec::new();
    for b in -r..=r {
        for a in -r..=r {
            let (qx, qy) = (handle.i + a as f64, handle.j + b as f64);
            let (mx, my) = (qx + d.di, qy + d.dj);
            if !(0.0..=max_y).contains(&qy) || !(0.0..=max_y).contains(&my) {
                continue;
            }
            for c in 0..f.dim() {
                out.push(bilinear(f, mx, my, c) - bilinear(reference_field, qx, qy, c));
            }
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn oracle_loss(
    f: &FeatureField,
    f0: &FeatureField,
    reference_field: &FeatureField,
    mask: &MaskImage,
    handle: PixelCoord,
    d: DirectionVec2,
    r: i64,
    lambda: f64,
) -> f64 {
    let motion: f64 = residuals(f, reference_field, handle, d, r)
        .iter()
        .map(|v| v.abs())
        .sum();
    let dim = f.dim();
    let masked: f64 = f
        .data()
        .iter()
        .zip(f0.data())
        .enumerate()
        .filter(|(k, _)| mask.data()[k / dim] == 0)
        .map(|(_, (a, b))| (a - b).abs())
        .sum();
    motion + lambda * masked
}

#[test]
fn gradient_matches_central_differences() {
    let mut checked = 0;
    let mut seed = 0u64;
    while checked < 100 {
        seed += 1;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (w, h) = (12, 8);
        let dim = rng.random_range(1..=3);
        let f0 = random_field(&mut rng, w, h, dim, None);
        // optimize from a perturbed copy so the mask term is active
        let f = FeatureField::new(
            w,
            h,
            dim,
            1,
            f0.data()
                .iter()
                .map(|v| v + rng.random_range(-0.2..0.2))
                .collect(),
        )
        .unwrap();
        let mask = random_mask(&mut rng, w, h);
        let handle = PixelCoord::new(
            rng.random_range(0.0..w as f64),
            rng.random_range(1.5..h as f64 - 2.5),
        );
        let d =
            DirectionVec2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)).unwrap();
        let lambda = 0.1;
        let patch = MotionPatch::new(&f, handle, d, 1);

        let analytic_loss = loss_against(&f, &f0, &mask, &patch, lambda).unwrap().total;
        let oracle = oracle_loss(&f, &f0, &f, &mask, handle, d, 1, lambda);
        assert!(
            (analytic_loss - oracle).abs() < 1e-12 * oracle.max(1.0),
            "seed {seed}"
        );

        // subgradient convention applies where a residual is near zero
        let res = residuals(&f, &f, handle, d, 1);
        let mask_res = f.data().iter().zip(f0.data()).map(|(a, b)| a - b);
        if res.iter().copied().chain(mask_res).any(|v| v.abs() < 1e-6) {
            continue;
        }

        let grad = gradient_against(&f, &f0, &mask, &patch, lambda).unwrap();
        let step = 1e-7;
        for k in 0..f.data().len() {
            let mut plus = f.data().to_vec();
            let mut minus = f.data().to_vec();
            plus[k] += step;
            minus[k] -= step;
            let fp = FeatureField::new(w, h, dim, 1, plus).unwrap();
            let fm = FeatureField::new(w, h, dim, 1, minus).unwrap();
            let lp = loss_against(&fp, &f0, &mask, &patch, lambda).unwrap().total;
            let lm = loss_against(&fm, &f0, &mask, &patch, lambda).unwrap().total;
            let fd = (lp - lm) / (2.0 * step);
            let scale = fd.abs().max(grad[k].abs());
            if scale < 1e-12 {
                continue;
            }
            assert!(
                (fd - grad[k]).abs() <= 1e-4 * scale,
                "seed {seed}, entry {k}: fd {fd} vs {}",
                grad[k]
            );
        }
        checked += 1;
    }
}

/// Exhaustive scan: every cell of the field is tested for window membership
/// from scratch, then ranked by (L1 cost, arc to handle, row-major index).
fn oracle_track(
    f: &FeatureField,
    reference: &[f64],
    handle: PixelCoord,
    cfg: &DragConfig,
) -> PixelCoord {
    let (w, h) = (f.width(), f.height());
    let lat = FRAC_PI_2 - handle.j.clamp(0.0, h as f64) / h as f64 * PI;
    let cap = cfg.r_cap.unwrap_or(h as f64 / 4.0);
    let (rx, ry) = if !cfg.ssrt {
        (cfg.r_base, cfg.r_base)
    } else {
        let s = |r: f64| {
            if lat.cos() <= 0.0 {
                cap
            } else {
                (r / lat.cos()).min(cap)
            }
        };
        match cfg.ssrt_axis {
            SsrtAxis::Vertical => (cfg.r0.unwrap_or(cfg.r_base), s(cfg.r_base)),
            SsrtAxis::Horizontal => (
                s(cfg.r0.unwrap_or(cfg.r_base)).min((w / 2) as f64),
                cfg.r_base,
            ),
        }
    };
    let nx = ((rx + 0.5).floor() as i64).min((w as i64 - 1) / 2);
    let ny = (ry + 0.5).floor() as i64;
    let cx = (handle.i.round() as i64).rem_euclid(w as i64);
    let cy = (handle.j.round() as i64).clamp(0, h as i64 - 1);
    let to_xyz = |i: f64, j: f64| {
        let (la, lo) = (FRAC_PI_2 - j / h as f64 * PI, i / w as f64 * TAU - PI);
        [la.cos() * lo.cos(), la.cos() * lo.sin(), la.sin()]
    };
    let hp = to_xyz(handle.i, handle.j);
    let mut best: Option<(f64, f64, usize, usize)> = None;
    for y in 0..h {
        for x in 0..w {
            let dx = (x as i64 - cx).rem_euclid(w as i64);
            let dx = dx.min(w as i64 - dx);
            if dx > nx || (y as i64 - cy).abs() > ny {
                continue;
            }
            let cost: f64 = f
                .cell(x, y)
                .iter()
                .zip(reference)
                .map(|(a, b)| (a - b).abs())
                .sum();
            let p = to_xyz(x as f64, y as f64);
            let cross = [
                hp[1] * p[2] - hp[2] * p[1],
                hp[2] * p[0] - hp[0] * p[2],
                hp[0] * p[1] - hp[1] * p[0],
            ];
            let dot = hp[0] * p[0] + hp[1] * p[1] + hp[2] * p[2];
            let arc = (cross[0].powi(2) + cross[1].powi(2) + cross[2].powi(2))
                .sqrt()
                .atan2(dot);
            let better = match best {
                None => true,
                Some((bc, ba, _, _)) => cost < bc || (cost == bc && arc < ba - 1e-12),
            };
            if better {
                best = Some((cost, arc, x, y));
            }
        }
    }
    let (_, _, x, y) = best.unwrap();
    PixelCoord::new(x as f64, y as f64)
}

#[test]
fn tracking_matches_exhaustive_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut seam_cases = 0;
    for n in 0..1000 {
        let (w, h) = (64, 32);
        // few quantization levels make exact cost ties common
        let dim = rng.random_range(1..=2);
        let f = random_field(&mut rng, w, h, dim, Some(3));
        let cfg = DragConfig {
            ssrt: rng.random_bool(0.8),
            ssrt_axis: if rng.random_bool(0.8) {
                SsrtAxis::Vertical
            } else {
                SsrtAxis::Horizontal
            },
            r_base: rng.random_range(1.0..4.0),
            ..Default::default()
        };
        let handle = if n % 4 == 0 {
            seam_cases += 1;
            PixelCoord::new(
                rng.random_range(-2.0..2.0f64).rem_euclid(w as f64),
                rng.random_range(0.0..(h - 1) as f64),
            )
        } else {
            PixelCoord::new(
                rng.random_range(0.0..w as f64),
                rng.random_range(0.0..(h - 1) as f64),
            )
        };
        let reference: Vec<f64> = (0..f.dim())
            .map(|_| rng.random_range(0..3) as f64 / 3.0)
            .collect();
        let state = DragState::new(f.clone(), handle).unwrap();
        let got = {
            let region = build_search_region(handle, &cfg, w, h);
            panodrag_core::drag::track_in_field(&f, &reference, handle, &region).unwrap()
        };
        let want = oracle_track(&f, &reference, handle, &cfg);
        assert_eq!(got, want, "case {n}: handle {handle:?}, cfg {cfg:?}");

        // and through the state, which tracks the handle's own initial feature
        let region = build_search_region(handle, &cfg, w, h);
        let via_state = track_point(&state, &region).unwrap();
        assert_eq!(
            via_state,
            oracle_track(&f, state.handle0_feature(), handle, &cfg)
        );
    }
    assert!(seam_cases >= 200);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn loss_is_non_negative(seed in any::<u64>(), hi in 0.0f64..16.0, hj in 0.0f64..7.0, a in -PI..PI) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_field(&mut rng, 16, 8, 2, None);
        let mask = random_mask(&mut rng, 16, 8);
        let state = DragState::new(f, PixelCoord::new(hi, hj)).unwrap();
        let d = DirectionVec2::new(a.cos(), a.sin()).unwrap();
        let l = motion_supervision_loss(&state, d, &mask, &DragConfig::default()).unwrap();
        prop_assert!(l.total >= 0.0 && l.motion >= 0.0 && l.mask >= 0.0);
        // at the start the field equals its reference, so the mask term is zero
        prop_assert_eq!(l.mask, 0.0);
    }

    #[test]
    fn continuous_window_solid_angle_is_constant(lat_deg in -80.0f64..80.0, r in 1.0f64..6.0) {
        let (w, h) = (1024usize, 512usize);
        let j = (90.0 - lat_deg) / 180.0 * h as f64;
        let cfg = DragConfig { r_base: r, r_cap: Some(1e9), ..Default::default() };
        let (rx, ry) = search_radii(PixelCoord::new(100.0, j), &cfg, w, h);
        let cell = (TAU / w as f64) * (PI / h as f64);
        let omega = 4.0 * rx * ry * lat_deg.to_radians().cos() * cell;
        let want = 4.0 * r * r * cell;
        prop_assert!((omega - want).abs() <= 1e-12 * want, "{omega} vs {want}");
    }
}

#[test]
fn discretized_window_solid_angle_within_15_percent() {
    let (w, h) = (1024usize, 512usize);
    let cfg = DragConfig::default();
    let eq = build_search_region(PixelCoord::new(300.0, 256.0), &cfg, w, h).solid_angle(w, h);
    let mut worst: f64 = 0.0;
    for tenth in -750..=750 {
        let lat = tenth as f64 / 10.0;
        let j = (90.0 - lat) / 180.0 * h as f64;
        let omega = build_search_region(PixelCoord::new(300.0, j), &cfg, w, h).solid_angle(w, h);
        worst = worst.max((omega - eq).abs() / eq);
    }
    assert!(worst <= 0.15, "worst relative deviation {worst}");
}

#[test]
fn baseline_iteration_without_gcta_and_ssrt() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let (w, h) = (48, 24);
    let f = random_field(&mut rng, w, h, 2, None);
    let mask = random_mask(&mut rng, w, h);
    let handle = PixelCoord::new(10.0, 5.0);
    let target = PixelCoord::new(17.0, 2.0);
    let cfg = DragConfig {
        gcta: false,
        ssrt: false,
        lr: 0.2,
        ..Default::default()
    };
    let mut state = DragState::new(f.clone(), handle).unwrap();
    let StepOutcome::Moved(rec) = state.step(target, &mask, &cfg).unwrap() else {
        panic!("no move");
    };
    let n = (7.0f64).hypot(3.0);
    assert_eq!((rec.direction.di, rec.direction.dj), (7.0 / n, -3.0 / n));
    assert_eq!((rec.rx, rec.ry), (3.0, 3.0));
    let region = build_search_region(handle, &cfg, w, h);
    assert_eq!(region.cells.len(), 49);

    // replay the iteration by hand
    let d = DirectionVec2::new(7.0, -3.0).unwrap();
    let patch = MotionPatch::new(&f, handle, d, 1);
    let g = gradient_against(&f, &f, &mask, &patch, cfg.lambda).unwrap();
    let stepped: Vec<f64> = f
        .data()
        .iter()
        .zip(&g)
        .map(|(v, g)| v - cfg.lr * g)
        .collect();
    assert_eq!(state.field().data(), &stepped[..]);
    let stepped = FeatureField::new(w, h, 2, 1, stepped).unwrap();
    let (reference, _) = f.sample(handle);
    assert_eq!(
        rec.next_handle,
        oracle_track(&stepped, &reference, handle, &cfg)
    );
}

#[test]
fn references_are_frozen_across_a_drag() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let f = random_field(&mut rng, 32, 16, 1, None);
    let mask = MaskImage::filled(32, 16, true);
    let handle = PixelCoord::new(8.0, 8.0);
    let cfg = DragConfig {
        max_iter: 10,
        lr: 0.3,
        stop_eps: 0.0,
        ..Default::default()
    };
    let mut state = DragState::new(f.clone(), handle).unwrap();
    let feat = state.handle0_feature().to_vec();
    for _ in 0..10 {
        if let StepOutcome::Converged = state.step(PixelCoord::new(16.0, 8.0), &mask, &cfg).unwrap()
        {
            break;
        }
    }
    assert_eq!(state.initial_field(), &f);
    assert_eq!(state.handle0_feature(), &feat[..]);
    assert_eq!(f.sample(handle).0, feat);
    let r = run_drag(&f, &mask, handle, PixelCoord::new(16.0, 8.0), &cfg).unwrap();
    assert_eq!(r.trajectory[0], handle);
}
