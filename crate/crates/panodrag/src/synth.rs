//! Synthetic drag cases: smooth panoramas with Gaussian blobs drawn on the
//! sphere, a handle at one blob's center and a target displaced along a
//! great circle.
//!
//! Families mirror the hard cases for ERP editing: drags across the seam,
//! drags at high latitude and long oblique drags, plus an equatorial control.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use panodrag_core::reproject::{DragCase, DragPair};
use panodrag_core::sphere::{cartesian_to_spherical, spherical_to_pixel, unit_angle};
use panodrag_core::{ErpImage, Error, MaskImage, PixelCoord, Raster, SphericalCoord, Vec3};

/// Output panorama height; width is twice this.
pub const DEFAULT_HEIGHT: usize = 512;
/// Field downsampling the families are tuned for.
pub const DEFAULT_DOWNSAMPLE: usize = 8;

/// Angular size of one field cell for the default geometry.
pub fn default_cell() -> f64 {
    PI / (DEFAULT_HEIGHT / DEFAULT_DOWNSAMPLE) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Seam,
    HighLat,
    Oblique,
    Equator,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::Seam,
        Family::HighLat,
        Family::Oblique,
        Family::Equator,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Seam => "seam",
            Family::HighLat => "highlat",
            Family::Oblique => "oblique",
            Family::Equator => "equator",
        }
    }

    pub fn params(self) -> SynthParams {
        let cell = default_cell();
        let base = SynthParams::default();
        match self {
            Family::Seam => SynthParams {
                lat_deg: (-30.0, 30.0),
                placement: Placement::Seam,
                bearing_deg: (-20.0, 20.0),
                ..base
            },
            Family::HighLat => SynthParams {
                lat_deg: (60.0, 75.0),
                mirror_lat: true,
                bearing_deg: (-30.0, 30.0),
                ..base
            },
            Family::Oblique => SynthParams {
                lat_deg: (-40.0, 40.0),
                bearing_deg: (30.0, 60.0),
                mirror_bearing: true,
                drag_arc: 20.0 * cell,
                ..base
            },
            Family::Equator => SynthParams {
                lat_deg: (0.0, 0.0),
                bearing_deg: (0.0, 0.0),
                ..base
            },
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| {
                format!("unknown family {s:?} (expected seam, highlat, oblique or equator)")
            })
    }
}

/// Where the handle's longitude is drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Placement {
    /// Anywhere at least a quarter turn from the seam.
    Interior,
    /// Just west of the seam, so an eastward drag crosses it.
    Seam,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthParams {
    pub height: usize,
    /// Number of blobs, including the dragged one.
    pub blobs: usize,
    /// Handle latitude range, degrees.
    pub lat_deg: (f64, f64),
    /// Flip the latitude sign with probability 1/2.
    pub mirror_lat: bool,
    pub placement: Placement,
    /// Drag arc length, radians.
    pub drag_arc: f64,
    /// Initial heading range, degrees counter-clockwise from east.
    pub bearing_deg: (f64, f64),
    /// Flip the heading to the west with probability 1/2.
    pub mirror_bearing: bool,
    /// Blob standard deviation, radians.
    pub sigma: f64,
    /// Mask radius around the drag path, in multiples of `sigma`.
    pub mask_sigmas: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        let cell = default_cell();
        Self {
            height: DEFAULT_HEIGHT,
            blobs: 3,
            lat_deg: (0.0, 0.0),
            mirror_lat: false,
            placement: Placement::Interior,
            drag_arc: 10.0 * cell,
            bearing_deg: (0.0, 0.0),
            mirror_bearing: false,
            sigma: 2.0 * cell,
            mask_sigmas: 3.0,
        }
    }
}

fn unit(lat: f64, lon: f64) -> Vec3 {
    Vec3::new(lat.cos() * lon.cos(), lat.cos() * lon.sin(), lat.sin())
}

fn pixel_unit(p: PixelCoord, w: usize, h: usize) -> Vec3 {
    unit(FRAC_PI_2 - p.j / h as f64 * PI, p.i / w as f64 * TAU - PI)
}

fn draw(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// Point `arc` radians from `p` along heading `bearing` (from east, toward north).
pub fn travel(lat: f64, lon: f64, bearing: f64, arc: f64) -> Vec3 {
    let p = unit(lat, lon);
    let east = Vec3::new(-lon.sin(), lon.cos(), 0.0);
    let north = Vec3::new(-lat.sin() * lon.cos(), -lat.sin() * lon.sin(), lat.cos());
    let t = east.scale(bearing.cos()) + north.scale(bearing.sin());
    p.scale(arc.cos()) + t.scale(arc.sin())
}

/// Angular distance from `p` to the minor arc `a → b`.
fn arc_distance(p: Vec3, a: Vec3, b: Vec3) -> f64 {
    let n = a.cross(b);
    let nn = n.norm();
    if nn < 1e-12 {
        return unit_angle(p, a);
    }
    let n = n.scale(1.0 / nn);
    let off = p.dot(n);
    let inplane = p - n.scale(off);
    // inside the wedge spanned by a and b?
    if a.cross(inplane).dot(n) >= 0.0 && inplane.cross(b).dot(n) >= 0.0 {
        off.abs().min(1.0).asin()
    } else {
        unit_angle(p, a).min(unit_angle(p, b))
    }
}

struct Blob {
    center: Vec3,
    sigma: f64,
    color: [f64; 3],
}

/// Render a single case. The handle sits at the first blob's center.
pub fn generate_synthetic_case(
    id: &str,
    seed: u64,
    params: &SynthParams,
) -> Result<DragCase, Error> {
    if params.drag_arc.is_nan() || params.drag_arc <= 0.0 {
        return Err(Error::InvalidArgument(
            "drag length must be positive (handle and target would coincide)".into(),
        ));
    }
    if params.drag_arc >= PI - 1e-6 {
        return Err(Error::DegenerateInput(format!(
            "drag arc {} rad makes handle and target antipodal; choose a shorter drag",
            params.drag_arc
        )));
    }
    if params.blobs == 0 || params.height < 16 || params.sigma.is_nan() || params.sigma <= 0.0 {
        return Err(Error::InvalidArgument(
            "need >= 1 blob, height >= 16 and sigma > 0".into(),
        ));
    }
    let (w, h) = (2 * params.height, params.height);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut lat = draw(&mut rng, params.lat_deg).to_radians();
    if params.mirror_lat && rng.random_bool(0.5) {
        lat = -lat;
    }
    let mut bearing = draw(&mut rng, params.bearing_deg).to_radians();
    if params.mirror_bearing && rng.random_bool(0.5) {
        bearing = PI - bearing;
    }
    let lon = match params.placement {
        Placement::Interior => rng.random_range(-0.75 * PI..0.75 * PI),
        Placement::Seam => {
            // start west of the seam so that a quarter to three quarters of
            // the eastward component lies beyond it
            let span = params.drag_arc * bearing.cos().abs() / lat.cos();
            PI - rng.random_range(0.25..0.75) * span
        }
    };

    // snap both endpoints to pixel centers; the blob follows the handle
    let snap = |v: Vec3| -> Result<PixelCoord, Error> {
        let p = spherical_to_pixel(cartesian_to_spherical(v)?, w, h);
        Ok(PixelCoord::new(
            p.i.round().rem_euclid(w as f64),
            p.j.round(),
        ))
    };
    let handle = snap(unit(lat, lon))?;
    let target = snap(travel(lat, lon, bearing, params.drag_arc))?;
    let (ph, pt) = (pixel_unit(handle, w, h), pixel_unit(target, w, h));
    if unit_angle(ph, pt) < 1e-9 {
        return Err(Error::DegenerateInput(
            "handle and target snap to the same pixel".into(),
        ));
    }

    let color = |rng: &mut ChaCha8Rng| [0.0; 3].map(|_| rng.random_range(0.3..0.5));
    let mut blobs = vec![Blob {
        center: ph,
        sigma: params.sigma,
        color: color(&mut rng),
    }];
    let keep_out = params.mask_sigmas * params.sigma * 2.0;
    let mut attempts = 0;
    while blobs.len() < params.blobs && attempts < 1000 {
        attempts += 1;
        let c = unit(rng.random_range(-1.2..1.2), rng.random_range(-PI..PI));
        let sigma = params.sigma * rng.random_range(0.7..1.3);
        if arc_distance(c, ph, pt) < keep_out
            || blobs.iter().any(|b| unit_angle(b.center, c) < keep_out)
        {
            continue;
        }
        blobs.push(Blob {
            center: c,
            sigma,
            color: color(&mut rng),
        });
    }

    // low-order spherical-harmonic background per channel
    let coeffs: Vec<[f64; 5]> = (0..3)
        .map(|_| [0.0; 5].map(|_| rng.random_range(-1.0..1.0)))
        .collect();
    let base: [f64; 3] = [0.0; 3].map(|_| rng.random_range(0.28..0.36));

    let trig_rows: Vec<(f64, f64)> = (0..h)
        .map(|y| (FRAC_PI_2 - y as f64 / h as f64 * PI).sin_cos())
        .collect();
    let trig_cols: Vec<(f64, f64)> = (0..w)
        .map(|x| (x as f64 / w as f64 * TAU - PI).sin_cos())
        .collect();
    let image = Raster::from_fn(w, h, 3, |x, y, px| {
        let (sl, cl) = trig_rows[y];
        let (so, co) = trig_cols[x];
        let p = Vec3::new(cl * co, cl * so, sl);
        for (c, v) in px.iter_mut().enumerate() {
            let k = &coeffs[c];
            *v = base[c]
                + 0.06 * (k[0] * p.x + k[1] * p.y + k[2] * p.z)
                + 0.03 * (k[3] * p.x * p.y + k[4] * (3.0 * p.z * p.z - 1.0) / 2.0);
        }
        for b in &blobs {
            let cos_t = p.dot(b.center);
            // skip the exp far from the blob
            if cos_t < (5.0 * b.sigma).min(PI).cos() {
                continue;
            }
            let t = unit_angle(p, b.center);
            let g = (-t * t / (2.0 * b.sigma * b.sigma)).exp();
            for (v, col) in px.iter_mut().zip(b.color) {
                *v += col * g;
            }
        }
    })?;

    let radius = params.mask_sigmas * params.sigma;
    let mut mask = vec![0u8; w * h];
    for y in 0..h {
        let (sl, cl) = trig_rows[y];
        for x in 0..w {
            let (so, co) = trig_cols[x];
            let p = Vec3::new(cl * co, cl * so, sl);
            mask[y * w + x] = u8::from(arc_distance(p, ph, pt) <= radius);
        }
    }
    let mask = MaskImage::new(w, h, mask)?;
    DragCase::new(
        id,
        ErpImage::new(image)?,
        mask,
        vec![DragPair::new(handle, target)],
    )
}

/// Case `k` of a family: seeded with `seed + k`, named `{family}-{seed}-{k}`.
pub fn family_case(family: Family, seed: u64, k: usize) -> Result<DragCase, Error> {
    let id = format!("{family}-{seed}-{k}");
    generate_synthetic_case(&id, seed.wrapping_add(k as u64), &family.params())
}

pub fn family_cases(family: Family, seed: u64, n: usize) -> Result<Vec<DragCase>, Error> {
    (0..n).map(|k| family_case(family, seed, k)).collect()
}

/// Exact arc between handle and target of a case's first pair, radians.
pub fn drag_arc(case: &DragCase) -> f64 {
    let p = case.pairs()[0];
    let (w, h) = (case.width(), case.height());
    unit_angle(pixel_unit(p.handle, w, h), pixel_unit(p.target, w, h))
}

/// Spherical coordinates of a pixel (used by tests and the CLI).
pub fn pixel_latlon(p: PixelCoord, w: usize, h: usize) -> SphericalCoord {
    panodrag_core::sphere::pixel_to_spherical(p, w, h).expect("valid pixel")
}
