//! Adaptive reprojection: rotating panoramas, masks and drag points on the
//! sphere, undoing that rotation, and extracting pinhole views.

use core::f64::consts::{FRAC_PI_2, PI, TAU};

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::raster::{nearest_index, ErpImage, MaskImage, Raster};
use crate::sphere::{
    alignment_rotation, cartesian_to_spherical, pixel_to_unit, spherical_to_cartesian,
    spherical_to_pixel, unit_angle, PixelCoord, RotationMatrix3, SphericalCoord, Vec3,
    DEGENERACY_EPS,
};

/// One handle → target drag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DragPair {
    pub handle: PixelCoord,
    pub target: PixelCoord,
}

impl DragPair {
    pub const fn new(handle: PixelCoord, target: PixelCoord) -> Self {
        Self { handle, target }
    }
}

/// A single editing task: panorama, editable mask and drag pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct DragCase {
    pub id: String,
    image: ErpImage,
    mask: MaskImage,
    pairs: Vec<DragPair>,
}

impl DragCase {
    pub fn new(
        id: impl Into<String>,
        image: ErpImage,
        mask: MaskImage,
        pairs: Vec<DragPair>,
    ) -> Result<Self> {
        let (w, h) = (image.width(), image.height());
        if mask.width() != w || mask.height() != h {
            return Err(Error::DimensionMismatch(format!(
                "mask is {}x{} but image is {w}x{h}",
                mask.width(),
                mask.height()
            )));
        }
        if pairs.is_empty() {
            return Err(Error::InvalidArgument(
                "a drag case needs at least one pair".into(),
            ));
        }
        let in_bounds = |p: &PixelCoord| {
            p.is_finite() && p.i >= 0.0 && p.i < w as f64 && p.j >= 0.0 && p.j <= h as f64
        };
        for (k, pair) in pairs.iter().enumerate() {
            if !in_bounds(&pair.handle) {
                return Err(Error::InvalidArgument(format!(
                    "pair {k}: handle ({}, {}) outside {w}x{h}",
                    pair.handle.i, pair.handle.j
                )));
            }
            if !in_bounds(&pair.target) {
                return Err(Error::InvalidArgument(format!(
                    "pair {k}: target ({}, {}) outside {w}x{h}",
                    pair.target.i, pair.target.j
                )));
            }
            let a = pixel_to_unit(pair.handle, w, h)?.as_vec();
            let b = pixel_to_unit(pair.target, w, h)?.as_vec();
            if unit_angle(a, b) < 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "pair {k}: handle and target coincide"
                )));
            }
        }
        Ok(Self {
            id: id.into(),
            image,
            mask,
            pairs,
        })
    }

    pub fn image(&self) -> &ErpImage {
        &self.image
    }

    pub fn mask(&self) -> &MaskImage {
        &self.mask
    }

    pub fn pairs(&self) -> &[DragPair] {
        &self.pairs
    }

    pub fn width(&self) -> usize {
        self.image.width()
    }

    pub fn height(&self) -> usize {
        self.image.height()
    }

    /// Same case with a different image (for example the edited result).
    pub fn with_image(&self, image: ErpImage) -> Result<Self> {
        Self::new(
            self.id.clone(),
            image,
            self.mask.clone(),
            self.pairs.clone(),
        )
    }
}

/// Rotation applied by [`align_case`], kept so it can be undone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignmentRecord {
    pub rotation: RotationMatrix3,
    pub target_lon: f64,
    pub keep_lat: bool,
    pub midpoint_before: SphericalCoord,
    pub midpoint_after: SphericalCoord,
    pub width: usize,
    pub height: usize,
}

impl AlignmentRecord {
    /// A no-op record for a case that is left in its original frame.
    pub fn identity(case: &DragCase) -> Result<Self> {
        let pair = case.pairs()[0];
        let mid = spherical_midpoint(pair.handle, pair.target, case.width(), case.height())?;
        Ok(Self {
            rotation: RotationMatrix3::IDENTITY,
            target_lon: mid.lon(),
            keep_lat: true,
            midpoint_before: mid,
            midpoint_after: mid,
            width: case.width(),
            height: case.height(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    #[default]
    Bilinear,
    Nearest,
}

/// Shortest-arc midpoint of two pixels on the sphere.
///
/// For two points on the same row that do not straddle the seam this is the
/// pixel average; across the seam it stays next to the seam instead of
/// jumping to the opposite side of the panorama.
pub fn spherical_midpoint(
    handle: PixelCoord,
    target: PixelCoord,
    width: usize,
    height: usize,
) -> Result<SphericalCoord> {
    let a = pixel_to_unit(handle, width, height)?.as_vec();
    let b = pixel_to_unit(target, width, height)?.as_vec();
    let sum = a + b;
    if sum.norm() < DEGENERACY_EPS {
        return Err(Error::DegenerateInput(
            "handle and target are antipodal; midpoint undefined".into(),
        ));
    }
    cartesian_to_spherical(sum)
}

/// A rotated point, flagged when it lands on a pole (longitude then 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotatedPoint {
    pub point: PixelCoord,
    pub pole_ambiguous: bool,
}

/// Exact pixel → sphere → `R` → pixel mapping of a single point.
pub fn rotate_point(
    p: PixelCoord,
    rotation: &RotationMatrix3,
    width: usize,
    height: usize,
) -> Result<RotatedPoint> {
    let v = pixel_to_unit(p, width, height)?.as_vec();
    let r = rotation.apply(v);
    let s = cartesian_to_spherical(r)?;
    let pole_ambiguous = libm::hypot(r.x, r.y) < 1e-15 * r.norm();
    Ok(RotatedPoint {
        point: spherical_to_pixel(s, width, height),
        pole_ambiguous,
    })
}

/// Per-row / per-column trigonometry for an ERP grid.
struct ErpTrig {
    lat_sin: Vec<f64>,
    lat_cos: Vec<f64>,
    lon_sin: Vec<f64>,
    lon_cos: Vec<f64>,
}

impl ErpTrig {
    fn new(width: usize, height: usize) -> Self {
        let (w, h) = (width as f64, height as f64);
        let (mut lat_sin, mut lat_cos) = (Vec::with_capacity(height), Vec::with_capacity(height));
        for y in 0..height {
            let (s, c) = libm::sincos(FRAC_PI_2 - (y as f64 / h) * PI);
            lat_sin.push(s);
            lat_cos.push(c);
        }
        let (mut lon_sin, mut lon_cos) = (Vec::with_capacity(width), Vec::with_capacity(width));
        for x in 0..width {
            let (s, c) = libm::sincos((x as f64 / w) * TAU - PI);
            lon_sin.push(s);
            lon_cos.push(c);
        }
        Self {
            lat_sin,
            lat_cos,
            lon_sin,
            lon_cos,
        }
    }

    fn unit(&self, x: usize, y: usize) -> Vec3 {
        Vec3::new(
            self.lat_cos[y] * self.lon_cos[x],
            self.lat_cos[y] * self.lon_sin[x],
            self.lat_sin[y],
        )
    }
}

/// Continuous ERP pixel position of a (not necessarily unit) direction.
fn direction_to_pixel(v: Vec3, width: usize, height: usize) -> (f64, f64) {
    let rho = libm::hypot(v.x, v.y);
    let lat = libm::atan2(v.z, rho);
    let lon = if rho == 0.0 {
        0.0
    } else {
        libm::atan2(v.y, v.x)
    };
    let i = (lon + PI) / TAU * width as f64;
    let j = (FRAC_PI_2 - lat) / PI * height as f64;
    (i, j)
}

/// For every output sample, the source position its content comes from.
fn inverse_map<F>(width: usize, height: usize, rotation: &RotationMatrix3, mut visit: F)
where
    F: FnMut(usize, usize, f64, f64),
{
    let trig = ErpTrig::new(width, height);
    let inv = rotation.transpose();
    for y in 0..height {
        for x in 0..width {
            let src = inv.apply(trig.unit(x, y));
            let (si, sj) = direction_to_pixel(src, width, height);
            visit(x, y, si, sj);
        }
    }
}

/// Resample a panorama rotated by `rotation` (output content at `R·p`
/// comes from `p`). Horizontal sampling wraps across the seam.
pub fn rotate_erp_image(
    img: &ErpImage,
    rotation: &RotationMatrix3,
    interp: Interpolation,
) -> Result<ErpImage> {
    if rotation.is_identity() {
        return Ok(img.clone());
    }
    let src = img.raster();
    let (w, h, c) = (src.width(), src.height(), src.channels());
    let mut data = vec![0.0; w * h * c];
    inverse_map(w, h, rotation, |x, y, si, sj| {
        let out = &mut data[(y * w + x) * c..][..c];
        match interp {
            Interpolation::Bilinear => src.sample_bilinear_wrap(si, sj, out),
            Interpolation::Nearest => src.sample_nearest_wrap(si, sj, out),
        }
    });
    ErpImage::new(Raster::new(w, h, c, data)?)
}

/// Nearest-neighbour rotation of a mask; the result stays binary.
pub fn rotate_mask(mask: &MaskImage, rotation: &RotationMatrix3) -> Result<MaskImage> {
    if rotation.is_identity() {
        return Ok(mask.clone());
    }
    let (w, h) = (mask.width(), mask.height());
    let mut data = vec![0u8; w * h];
    inverse_map(w, h, rotation, |x, y, si, sj| {
        let (xi, yi) = nearest_index(si, sj, w, h);
        data[y * w + x] = u8::from(mask.get(xi, yi));
    });
    MaskImage::new(w, h, data)
}

fn rotate_case(case: &DragCase, rotation: &RotationMatrix3) -> Result<DragCase> {
    if rotation.is_identity() {
        return Ok(case.clone());
    }
    let (w, h) = (case.width(), case.height());
    let image = rotate_erp_image(case.image(), rotation, Interpolation::Bilinear)?;
    let mask = rotate_mask(case.mask(), rotation)?;
    let pairs = case
        .pairs()
        .iter()
        .map(|p| {
            Ok(DragPair::new(
                rotate_point(p.handle, rotation, w, h)?.point,
                rotate_point(p.target, rotation, w, h)?.point,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    DragCase::new(case.id.clone(), image, mask, pairs)
}

/// Rotate the whole case so the first pair's midpoint sits at `target_lon`
/// (and on the equator unless `keep_lat`).
pub fn align_case(
    case: &DragCase,
    target_lon: f64,
    keep_lat: bool,
) -> Result<(DragCase, AlignmentRecord)> {
    let (w, h) = (case.width(), case.height());
    let pair = case.pairs()[0];
    let mid = spherical_midpoint(pair.handle, pair.target, w, h)?;
    let rotation = alignment_rotation(mid, target_lon, keep_lat);
    let after = cartesian_to_spherical(rotation.apply(spherical_to_cartesian(mid).as_vec()))?;
    let aligned = rotate_case(case, &rotation)?;
    Ok((
        aligned,
        AlignmentRecord {
            rotation,
            target_lon,
            keep_lat,
            midpoint_before: mid,
            midpoint_after: after,
            width: w,
            height: h,
        },
    ))
}

/// Map an aligned case back into the original frame.
pub fn inverse_align(case: &DragCase, record: &AlignmentRecord) -> Result<DragCase> {
    if case.width() != record.width || case.height() != record.height {
        return Err(Error::DimensionMismatch(format!(
            "case is {}x{} but alignment was recorded for {}x{}",
            case.width(),
            case.height(),
            record.width,
            record.height
        )));
    }
    rotate_case(case, &record.rotation.transpose())
}

/// Square pinhole view with equal horizontal and vertical field of view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerspectiveSpec {
    pub center: SphericalCoord,
    pub fov_deg: f64,
    pub out_size: usize,
}

impl PerspectiveSpec {
    pub const DEFAULT_SIZE: usize = 512;

    pub fn new(center: SphericalCoord, fov_deg: f64, out_size: usize) -> Result<Self> {
        let spec = Self {
            center,
            fov_deg,
            out_size,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if !(self.fov_deg > 0.0 && self.fov_deg < 180.0) {
            return Err(Error::InvalidArgument(format!(
                "field of view {} deg must lie in (0, 180)",
                self.fov_deg
            )));
        }
        if self.out_size < 16 {
            return Err(Error::InvalidArgument(format!(
                "output size {} below the minimum of 16",
                self.out_size
            )));
        }
        Ok(())
    }
}

/// Gnomonic view of `img` looking at `spec.center`; `+x` is east and `+y`
/// north at the view center. The optical axis passes through output sample
/// `(size/2, size/2)`.
pub fn extract_perspective(img: &ErpImage, spec: &PerspectiveSpec) -> Result<Raster> {
    spec.validate()?;
    let src = img.raster();
    let (w, h, c) = (src.width(), src.height(), src.channels());
    let (slat, clat) = libm::sincos(spec.center.lat());
    let (slon, clon) = libm::sincos(spec.center.lon());
    let forward = Vec3::new(clat * clon, clat * slon, slat);
    // Formulas stay defined at the poles, unlike `tangent_basis`.
    let east = Vec3::new(-slon, clon, 0.0);
    let north = Vec3::new(-slat * clon, -slat * slon, clat);

    let n = spec.out_size;
    let half = n as f64 / 2.0;
    let scale = libm::tan(spec.fov_deg.to_radians() / 2.0) / half;
    let mut data = vec![0.0; n * n * c];
    for v in 0..n {
        let yn = (half - v as f64) * scale;
        for u in 0..n {
            let xn = (u as f64 - half) * scale;
            let dir = forward + east.scale(xn) + north.scale(yn);
            let (si, sj) = direction_to_pixel(dir, w, h);
            src.sample_bilinear_wrap(si, sj, &mut data[(v * n + u) * c..][..c]);
        }
    }
    Raster::new(n, n, c, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::{rotation_lon, SphericalCoord};

    fn blank_case(pairs: Vec<DragPair>) -> DragCase {
        let img = ErpImage::new(Raster::filled(64, 32, 1, 0.5).unwrap()).unwrap();
        DragCase::new("t", img, MaskImage::filled(64, 32, false), pairs).unwrap()
    }

    #[test]
    fn midpoint_examples() {
        let m = spherical_midpoint(
            PixelCoord::new(500.0, 256.0),
            PixelCoord::new(524.0, 256.0),
            1024,
            512,
        )
        .unwrap();
        assert!(m.lat().abs() < 1e-12 && m.lon().abs() < 1e-12);

        let m = spherical_midpoint(
            PixelCoord::new(1014.0, 256.0),
            PixelCoord::new(10.0, 256.0),
            1024,
            512,
        )
        .unwrap();
        assert!((m.lon().abs() - PI).abs() < 1e-12);

        // mirror pair across the meridian at column 300
        let m = spherical_midpoint(
            PixelCoord::new(280.0, 100.0),
            PixelCoord::new(320.0, 100.0),
            1024,
            512,
        )
        .unwrap();
        let p = spherical_to_pixel(m, 1024, 512);
        assert!((p.i - 300.0).abs() < 1e-9);

        assert!(spherical_midpoint(
            PixelCoord::new(512.0, 256.0),
            PixelCoord::new(0.0, 256.0),
            1024,
            512
        )
        .is_err());
    }

    #[test]
    fn rotate_point_examples() {
        let p = PixelCoord::new(512.0, 256.0);
        let r = rotate_point(p, &RotationMatrix3::IDENTITY, 1024, 512).unwrap();
        assert_eq!(r.point, p);
        let r = rotate_point(p, &rotation_lon(FRAC_PI_2), 1024, 512).unwrap();
        assert!((r.point.i - 768.0).abs() < 1e-9 && (r.point.j - 256.0).abs() < 1e-9);
        assert!(!r.pole_ambiguous);

        let rot = crate::sphere::rotation_lat(FRAC_PI_2);
        let r = rotate_point(PixelCoord::new(768.0, 256.0), &rot, 1024, 512).unwrap();
        assert!(r.pole_ambiguous);
        assert!(r.point.j.abs() < 1e-9);
    }

    #[test]
    fn case_validation_names_pair() {
        let img = ErpImage::new(Raster::filled(64, 32, 1, 0.5).unwrap()).unwrap();
        let pairs = vec![
            DragPair::new(PixelCoord::new(1.0, 1.0), PixelCoord::new(2.0, 1.0)),
            DragPair::new(PixelCoord::new(70.0, 1.0), PixelCoord::new(2.0, 1.0)),
        ];
        let err =
            DragCase::new("t", img.clone(), MaskImage::filled(64, 32, false), pairs).unwrap_err();
        assert!(format!("{err}").contains("pair 1"));
        let same = vec![DragPair::new(
            PixelCoord::new(1.0, 1.0),
            PixelCoord::new(1.0, 1.0),
        )];
        assert!(DragCase::new("t", img.clone(), MaskImage::filled(64, 32, false), same).is_err());
        let bad_mask = MaskImage::filled(32, 32, false);
        let one = vec![DragPair::new(
            PixelCoord::new(1.0, 1.0),
            PixelCoord::new(3.0, 1.0),
        )];
        assert!(matches!(
            DragCase::new("t", img, bad_mask, one),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn identity_record_is_noop() {
        let case = blank_case(vec![DragPair::new(
            PixelCoord::new(10.0, 10.0),
            PixelCoord::new(14.0, 12.0),
        )]);
        let rec = AlignmentRecord::identity(&case).unwrap();
        assert_eq!(inverse_align(&case, &rec).unwrap(), case);
    }

    #[test]
    fn inverse_align_checks_dimensions() {
        let case = blank_case(vec![DragPair::new(
            PixelCoord::new(10.0, 10.0),
            PixelCoord::new(14.0, 12.0),
        )]);
        let mut rec = AlignmentRecord::identity(&case).unwrap();
        rec.width = 128;
        assert!(matches!(
            inverse_align(&case, &rec),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn perspective_spec_validation() {
        let c = SphericalCoord::new(0.0, 0.0).unwrap();
        assert!(PerspectiveSpec::new(c, 180.0, 64).is_err());
        assert!(PerspectiveSpec::new(c, 0.0, 64).is_err());
        assert!(PerspectiveSpec::new(c, 60.0, 8).is_err());
        assert!(PerspectiveSpec::new(c, 179.0, 16).is_ok());
    }

    #[test]
    fn perspective_center_samples_image_center() {
        let img = ErpImage::new(
            Raster::from_fn(64, 32, 1, |x, y, px| px[0] = (x + 64 * y) as f64 / 2048.0).unwrap(),
        )
        .unwrap();
        let spec = PerspectiveSpec::new(SphericalCoord::new(0.0, 0.0).unwrap(), 90.0, 16).unwrap();
        let view = extract_perspective(&img, &spec).unwrap();
        assert_eq!(view.pixel(8, 8), img.raster().pixel(32, 16));
    }
}
