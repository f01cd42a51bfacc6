//! Coordinate and direction mathematics on the unit sphere.
//!
//! Conventions used throughout the crate:
//!
//! - An ERP raster of width `W` and height `H` maps the continuous pixel
//!   position `(i, j)` to latitude `π/2 − (j/H)·π` and longitude
//!   `(i/W)·2π − π`. Sample `(x, y)` of a raster sits exactly at pixel
//!   position `(x, y)`, so row 0 is the north pole row.
//! - Longitude lives in the half-open range `(−π, π]`; `−π` is folded to `π`.
//! - Cartesian embedding: `(cos lat·cos lon, cos lat·sin lon, sin lat)`.
//! - In pixel space `+i` points east and `+j` points south (down the image).

use core::f64::consts::{FRAC_PI_2, PI, TAU};
use core::ops::{Add, Mul, Neg, Sub};

use alloc::format;

use crate::error::{Error, Result};

/// Cross products and projections shorter than this are degenerate.
pub const DEGENERACY_EPS: f64 = 1e-9;

/// Half-width of the polar cap in which no tangent basis is defined.
pub const POLE_EPS: f64 = 1e-6;

/// Normalize a longitude into `(−π, π]`.
pub fn normalize_lon(lon: f64) -> f64 {
    let mut r = libm::fmod(lon, TAU);
    if r <= -PI {
        r += TAU;
    } else if r > PI {
        r -= TAU;
    }
    r
}

/// Wrap `x` into `[0, period)`.
pub(crate) fn wrap(x: f64, period: f64) -> f64 {
    let r = libm::fmod(x, period);
    let r = if r < 0.0 { r + period } else { r };
    // fmod of a tiny negative number plus the period can round up to the period
    if r >= period {
        0.0
    } else {
        r
    }
}

/// Continuous ERP pixel position. `i` wraps modulo the width; `j` is clamped.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PixelCoord {
    pub i: f64,
    pub j: f64,
}

impl PixelCoord {
    pub const fn new(i: f64, j: f64) -> Self {
        Self { i, j }
    }

    pub fn is_finite(&self) -> bool {
        self.i.is_finite() && self.j.is_finite()
    }
}

/// Latitude/longitude pair in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalCoord {
    lat: f64,
    lon: f64,
}

impl SphericalCoord {
    /// Builds a coordinate, normalizing the longitude. Latitude must lie in
    /// `[−π/2, π/2]`.
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        if !lat.is_finite() || !lon.is_finite() {
            return Err(Error::NonFinite(format!(
                "spherical coordinate ({lat}, {lon})"
            )));
        }
        if !(-FRAC_PI_2..=FRAC_PI_2).contains(&lat) {
            return Err(Error::InvalidArgument(format!(
                "latitude {lat} outside [-pi/2, pi/2]"
            )));
        }
        Ok(Self {
            lat,
            lon: normalize_lon(lon),
        })
    }

    /// Latitude clamped into range; for values produced by trusted math.
    pub(crate) fn from_parts_clamped(lat: f64, lon: f64) -> Self {
        Self {
            lat: lat.clamp(-FRAC_PI_2, FRAC_PI_2),
            lon: normalize_lon(lon),
        }
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }
}

/// Plain Cartesian 3-vector.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, o: Self) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Self) -> Self {
        Self {
            x: self.y * o.z - self.z * o.y,
            y: self.z * o.x - self.x * o.z,
            z: self.x * o.y - self.y * o.x,
        }
    }

    pub fn norm(self) -> f64 {
        libm::sqrt(self.dot(self))
    }

    pub fn scale(self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        self.scale(s)
    }
}

/// A Cartesian vector of unit length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitVec3(Vec3);

impl UnitVec3 {
    /// Normalizes `v`. Fails for zero or non-finite input.
    pub fn new(v: Vec3) -> Result<Self> {
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("vector {v:?}")));
        }
        let n = v.norm();
        if n < DEGENERACY_EPS {
            return Err(Error::DegenerateInput(format!(
                "cannot normalize vector of norm {n:e}"
            )));
        }
        Ok(Self(v.scale(1.0 / n)))
    }

    /// Wraps a vector already known to be unit length.
    pub(crate) const fn new_unchecked(v: Vec3) -> Self {
        Self(v)
    }

    pub fn x(&self) -> f64 {
        self.0.x
    }

    pub fn y(&self) -> f64 {
        self.0.y
    }

    pub fn z(&self) -> f64 {
        self.0.z
    }

    pub fn as_vec(&self) -> Vec3 {
        self.0
    }
}

/// Proper rotation of R³, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix3 {
    m: [[f64; 3]; 3],
}

impl RotationMatrix3 {
    pub const IDENTITY: Self = Self {
        m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    /// Accepts a raw matrix if it is orthonormal with determinant 1 (1e-10).
    pub fn from_rows(m: [[f64; 3]; 3]) -> Result<Self> {
        let r = Self { m };
        if !m.iter().flatten().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("rotation matrix".into()));
        }
        if r.orthonormality_error() > 1e-10 || libm::fabs(r.determinant() - 1.0) > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "matrix {m:?} is not a rotation"
            )));
        }
        Ok(r)
    }

    pub fn rows(&self) -> [[f64; 3]; 3] {
        self.m
    }

    pub fn transpose(&self) -> Self {
        let m = &self.m;
        Self {
            m: [
                [m[0][0], m[1][0], m[2][0]],
                [m[0][1], m[1][1], m[2][1]],
                [m[0][2], m[1][2], m[2][2]],
            ],
        }
    }

    /// Matrix product `self · rhs`.
    pub fn mul(&self, rhs: &Self) -> Self {
        let mut out = [[0.0; 3]; 3];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| self.m[r][k] * rhs.m[k][c]).sum();
            }
        }
        Self { m: out }
    }

    pub fn apply(&self, v: Vec3) -> Vec3 {
        let m = &self.m;
        Vec3::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }

    pub fn apply_unit(&self, v: UnitVec3) -> UnitVec3 {
        let r = self.apply(v.as_vec());
        // renormalize away accumulated rounding
        UnitVec3::new_unchecked(r.scale(1.0 / r.norm()))
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Max absolute entry of `R·Rᵀ − I`.
    pub fn orthonormality_error(&self) -> f64 {
        let p = self.mul(&self.transpose());
        let mut worst: f64 = 0.0;
        for (r, row) in p.m.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                let target = if r == c { 1.0 } else { 0.0 };
                worst = worst.max(libm::fabs(v - target));
            }
        }
        worst
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::IDENTITY
    }
}

/// Orthonormal tangent frame at a sphere point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentBasis {
    /// Zonal (eastward) unit vector.
    pub east: UnitVec3,
    /// Meridional (northward) unit vector.
    pub north: UnitVec3,
}

/// Unit direction in pixel space. Positive `dj` points down the image.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DirectionVec2 {
    pub di: f64,
    pub dj: f64,
}

impl DirectionVec2 {
    /// Normalizes `(di, dj)`. Fails for a zero vector.
    pub fn new(di: f64, dj: f64) -> Result<Self> {
        let n = libm::hypot(di, dj);
        if !n.is_finite() {
            return Err(Error::NonFinite("direction".into()));
        }
        if n < 1e-15 {
            return Err(Error::DegenerateInput("zero-length direction".into()));
        }
        Ok(Self {
            di: di / n,
            dj: dj / n,
        })
    }

    pub fn norm(&self) -> f64 {
        libm::hypot(self.di, self.dj)
    }
}

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width < 2 || height < 2 {
        return Err(Error::InvalidArgument(format!(
            "raster dimensions {width}x{height} must both be at least 2"
        )));
    }
    Ok(())
}

/// ERP pixel position to latitude/longitude.
pub fn pixel_to_spherical(p: PixelCoord, width: usize, height: usize) -> Result<SphericalCoord> {
    check_dims(width, height)?;
    if !p.is_finite() {
        return Err(Error::NonFinite(format!("pixel {p:?}")));
    }
    let (w, h) = (width as f64, height as f64);
    let i = wrap(p.i, w);
    let j = p.j.clamp(0.0, h);
    let lat = FRAC_PI_2 - (j / h) * PI;
    let lon = (i / w) * TAU - PI;
    Ok(SphericalCoord::from_parts_clamped(lat, lon))
}

/// Exact inverse of [`pixel_to_spherical`]. The returned `i` lies in
/// `[0, W)`. At the poles every longitude maps to the same row, so `i`
/// simply follows the stored longitude.
pub fn spherical_to_pixel(s: SphericalCoord, width: usize, height: usize) -> PixelCoord {
    let (w, h) = (width as f64, height as f64);
    let i = wrap((s.lon + PI) / TAU * w, w);
    let j = (FRAC_PI_2 - s.lat) / PI * h;
    PixelCoord { i, j }
}

pub fn spherical_to_cartesian(s: SphericalCoord) -> UnitVec3 {
    let (sl, cl) = libm::sincos(s.lat);
    let (so, co) = libm::sincos(s.lon);
    UnitVec3::new_unchecked(Vec3::new(cl * co, cl * so, sl))
}

/// Inverse of [`spherical_to_cartesian`]; the input is renormalized. At the
/// poles the longitude is reported as 0.
pub fn cartesian_to_spherical(v: Vec3) -> Result<SphericalCoord> {
    let u = UnitVec3::new(v)?.as_vec();
    let rho = libm::hypot(u.x, u.y);
    let lat = libm::atan2(u.z, rho);
    let lon = if rho < 1e-15 {
        0.0
    } else {
        libm::atan2(u.y, u.x)
    };
    Ok(SphericalCoord::from_parts_clamped(lat, lon))
}

/// Pixel straight to its unit vector.
pub fn pixel_to_unit(p: PixelCoord, width: usize, height: usize) -> Result<UnitVec3> {
    pixel_to_spherical(p, width, height).map(spherical_to_cartesian)
}

/// Rotation about the z-axis by `dlon`; shifts longitudes by `dlon`.
pub fn rotation_lon(dlon: f64) -> RotationMatrix3 {
    let (s, c) = libm::sincos(dlon);
    RotationMatrix3 {
        m: [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]],
    }
}

/// Rotation about the x-axis by `dlat`.
pub fn rotation_lat(dlat: f64) -> RotationMatrix3 {
    let (s, c) = libm::sincos(dlat);
    RotationMatrix3 {
        m: [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]],
    }
}

/// Rotation that carries `mid` to longitude `target_lon`.
///
/// With `keep_lat` this is `R_lat(0)·R_lon(target_lon − lon)`, which leaves
/// the latitude unchanged. Without it the midpoint is also brought to the
/// equator. An x-axis rotation only changes latitude cleanly for points on
/// the ±90° meridians, so the point is first parked on the +90° meridian,
/// tilted there, then swung to `target_lon`:
/// `R_lon(target_lon − π/2) · R_lat(−lat) · R_lon(π/2 − lon)`.
pub fn alignment_rotation(mid: SphericalCoord, target_lon: f64, keep_lat: bool) -> RotationMatrix3 {
    if keep_lat {
        return rotation_lon(target_lon - mid.lon);
    }
    rotation_lon(target_lon - FRAC_PI_2)
        .mul(&rotation_lat(-mid.lat))
        .mul(&rotation_lon(FRAC_PI_2 - mid.lon))
}

/// East/north tangent frame at `s`; undefined within [`POLE_EPS`] of a pole.
pub fn tangent_basis(s: SphericalCoord) -> Result<TangentBasis> {
    if libm::fabs(s.lat) >= FRAC_PI_2 - POLE_EPS {
        return Err(Error::DegenerateBasis { lat: s.lat });
    }
    let (sl, cl) = libm::sincos(s.lat);
    let (so, co) = libm::sincos(s.lon);
    Ok(TangentBasis {
        east: UnitVec3::new_unchecked(Vec3::new(-so, co, 0.0)),
        north: UnitVec3::new_unchecked(Vec3::new(-sl * co, -sl * so, cl)),
    })
}

/// Arc length between two sphere points, in radians.
pub fn great_circle_distance(a: SphericalCoord, b: SphericalCoord) -> f64 {
    let (pa, pb) = (
        spherical_to_cartesian(a).as_vec(),
        spherical_to_cartesian(b).as_vec(),
    );
    unit_angle(pa, pb)
}

/// Angle between two unit vectors, stable for tiny and near-π angles.
pub fn unit_angle(a: Vec3, b: Vec3) -> f64 {
    libm::atan2(a.cross(b).norm(), a.dot(b))
}

/// Every intermediate of the great-circle direction computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreatCircleStep {
    /// Unit normal of the handle–target plane.
    pub normal: Vec3,
    /// Current point projected onto the great circle.
    pub projected: Vec3,
    /// Unit 3-D move direction from the projected point to the target.
    pub v_move: Vec3,
    /// East and north components of `v_move` at the current point.
    pub v_east: f64,
    pub v_north: f64,
    /// Final pixel-space direction.
    pub direction: DirectionVec2,
}

/// Pixel-space direction that moves `cur` along the handle→target great
/// circle toward `tar`.
pub fn great_circle_direction(
    han: PixelCoord,
    tar: PixelCoord,
    cur: PixelCoord,
    width: usize,
    height: usize,
) -> Result<DirectionVec2> {
    great_circle_step(han, tar, cur, width, height).map(|s| s.direction)
}

/// [`great_circle_direction`] with its intermediates exposed.
pub fn great_circle_step(
    han: PixelCoord,
    tar: PixelCoord,
    cur: PixelCoord,
    width: usize,
    height: usize,
) -> Result<GreatCircleStep> {
    let p_han = pixel_to_unit(han, width, height)?.as_vec();
    let p_tar = pixel_to_unit(tar, width, height)?.as_vec();
    let cur_s = pixel_to_spherical(cur, width, height)?;
    let p_cur = spherical_to_cartesian(cur_s).as_vec();

    let cross = p_han.cross(p_tar);
    let cross_norm = cross.norm();
    if cross_norm < DEGENERACY_EPS {
        return Err(Error::DegenerateGreatCircle { cross_norm });
    }
    let normal = cross.scale(1.0 / cross_norm);

    if unit_angle(p_cur, p_tar) < DEGENERACY_EPS {
        return Err(Error::AtTarget);
    }

    let off_plane = p_cur - normal.scale(p_cur.dot(normal));
    let off_norm = off_plane.norm();
    if off_norm < DEGENERACY_EPS {
        return Err(Error::DegenerateProjection { norm: off_norm });
    }
    let projected = off_plane.scale(1.0 / off_norm);

    let mut chord = p_tar - projected;
    // The projection can land on the target while `cur` sits off the circle;
    // head straight for the target then.
    if chord.norm() < DEGENERACY_EPS {
        chord = p_tar - p_cur;
    }
    let v_move = chord.scale(1.0 / chord.norm());

    let basis = tangent_basis(cur_s)?;
    let v_east = v_move.dot(basis.east.as_vec());
    let v_north = v_move.dot(basis.north.as_vec());

    // One column spans 2π/W of longitude, one row spans π/H of latitude.
    let cos_lat = libm::cos(cur_s.lat);
    let di = v_east / cos_lat * (width as f64 / TAU);
    let dj = -v_north * (height as f64 / PI);
    let direction = DirectionVec2::new(di, dj).map_err(|_| Error::DegenerateProjection {
        norm: libm::hypot(v_east, v_north),
    })?;

    Ok(GreatCircleStep {
        normal,
        projected,
        v_move,
        v_east,
        v_north,
        direction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::FRAC_PI_4;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        libm::fabs(a - b) <= tol
    }

    fn sph(lat: f64, lon: f64) -> SphericalCoord {
        SphericalCoord::new(lat, lon).unwrap()
    }

    #[test]
    fn pixel_to_spherical_examples() {
        let s = pixel_to_spherical(PixelCoord::new(512.0, 256.0), 1024, 512).unwrap();
        assert_eq!((s.lat(), s.lon()), (0.0, 0.0));

        let s = pixel_to_spherical(PixelCoord::new(0.0, 0.0), 1024, 512).unwrap();
        assert_eq!(s.lat(), FRAC_PI_2);
        assert_eq!(s.lon(), PI);

        let s = pixel_to_spherical(PixelCoord::new(768.0, 128.0), 1024, 512).unwrap();
        assert!(close(s.lat(), FRAC_PI_4, 1e-15));
        assert!(close(s.lon(), FRAC_PI_2, 1e-15));
    }

    #[test]
    fn pixel_to_spherical_rejects_bad_input() {
        assert!(matches!(
            pixel_to_spherical(PixelCoord::new(f64::NAN, 1.0), 1024, 512),
            Err(Error::NonFinite(_))
        ));
        assert!(matches!(
            pixel_to_spherical(PixelCoord::new(1.0, 1.0), 1, 512),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn pixel_wraps_and_clamps() {
        let a = pixel_to_spherical(PixelCoord::new(-24.0, 600.0), 1024, 512).unwrap();
        let b = pixel_to_spherical(PixelCoord::new(1000.0, 512.0), 1024, 512).unwrap();
        assert!(close(a.lon(), b.lon(), 1e-12));
        assert_eq!(a.lat(), -FRAC_PI_2);
    }

    #[test]
    fn spherical_to_pixel_examples() {
        let p = spherical_to_pixel(sph(0.0, 0.0), 1024, 512);
        assert_eq!((p.i, p.j), (512.0, 256.0));
        let p = spherical_to_pixel(sph(FRAC_PI_4, FRAC_PI_2), 1024, 512);
        assert!(close(p.i, 768.0, 1e-12) && close(p.j, 128.0, 1e-12));
        let p = spherical_to_pixel(sph(FRAC_PI_2, 0.3), 1024, 512);
        assert_eq!(p.j, 0.0);
        assert!(close(p.i, (0.3 + PI) / TAU * 1024.0, 1e-12));
    }

    #[test]
    fn cartesian_examples() {
        let v = spherical_to_cartesian(sph(0.0, 0.0));
        assert_eq!((v.x(), v.y(), v.z()), (1.0, 0.0, 0.0));
        let v = spherical_to_cartesian(sph(FRAC_PI_2, 0.0));
        assert!(close(v.x(), 0.0, 1e-16) && v.z() == 1.0);
        let v = spherical_to_cartesian(sph(0.0, FRAC_PI_2));
        assert!(close(v.x(), 0.0, 1e-16) && close(v.y(), 1.0, 1e-16));

        let s = cartesian_to_spherical(Vec3::new(0.0, 0.0, 1.0)).unwrap();
        assert_eq!((s.lat(), s.lon()), (FRAC_PI_2, 0.0));
        let s = cartesian_to_spherical(Vec3::new(1.0, 0.0, 0.0)).unwrap();
        assert_eq!((s.lat(), s.lon()), (0.0, 0.0));
        let s = cartesian_to_spherical(Vec3::new(0.5, 0.5, libm::sqrt(2.0) / 2.0)).unwrap();
        assert!(close(s.lat(), FRAC_PI_4, 1e-15) && close(s.lon(), FRAC_PI_4, 1e-15));

        assert!(matches!(
            cartesian_to_spherical(Vec3::default()),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn elementary_rotations() {
        assert!(rotation_lon(0.0).is_identity());
        assert!(rotation_lat(0.0).is_identity());
        let v = rotation_lon(FRAC_PI_2).apply(Vec3::new(1.0, 0.0, 0.0));
        assert!(close(v.x, 0.0, 1e-16) && close(v.y, 1.0, 1e-16));
        let v = rotation_lon(PI).apply(Vec3::new(1.0, 0.0, 0.0));
        assert!(close(v.x, -1.0, 1e-16) && close(v.y, 0.0, 1e-15));
        let v = rotation_lat(FRAC_PI_2).apply(Vec3::new(0.0, 1.0, 0.0));
        assert!(close(v.y, 0.0, 1e-16) && close(v.z, 1.0, 1e-16));
        let p = rotation_lat(0.7).mul(&rotation_lat(-0.7));
        for (r, row) in p.rows().iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                assert!(close(*v, if r == c { 1.0 } else { 0.0 }, 1e-12));
            }
        }
    }

    #[test]
    fn alignment_rotation_examples() {
        let mid = sph(0.3, 1.2);
        let r = alignment_rotation(mid, 0.0, true);
        assert_eq!(r, rotation_lon(-1.2));
        let after = cartesian_to_spherical(r.apply(spherical_to_cartesian(mid).as_vec())).unwrap();
        assert!(close(after.lon(), 0.0, 1e-12) && close(after.lat(), 0.3, 1e-12));

        assert!(alignment_rotation(sph(0.0, 0.0), 0.0, true).is_identity());

        let r = alignment_rotation(mid, 0.0, false);
        let after = cartesian_to_spherical(r.apply(spherical_to_cartesian(mid).as_vec())).unwrap();
        assert!(close(after.lat(), 0.0, 1e-10) && close(after.lon(), 0.0, 1e-10));
        assert!(r.orthonormality_error() < 1e-12);
    }

    #[test]
    fn tangent_basis_examples() {
        let b = tangent_basis(sph(0.0, 0.0)).unwrap();
        assert_eq!(b.east.as_vec(), Vec3::new(-0.0, 1.0, 0.0));
        assert_eq!(b.north.as_vec(), Vec3::new(-0.0, -0.0, 1.0));

        let b = tangent_basis(sph(0.0, FRAC_PI_2)).unwrap();
        assert!(close(b.east.x(), -1.0, 1e-16) && close(b.east.y(), 0.0, 1e-16));
        assert!(close(b.north.z(), 1.0, 1e-16));

        let s = sph(-0.4, 2.5);
        let b = tangent_basis(s).unwrap();
        let radial = spherical_to_cartesian(s).as_vec();
        assert!(libm::fabs(b.east.as_vec().dot(b.north.as_vec())) < 1e-15);
        assert!(libm::fabs(b.east.as_vec().dot(radial)) < 1e-15);
        assert!(libm::fabs(b.north.as_vec().dot(radial)) < 1e-15);

        assert!(matches!(
            tangent_basis(sph(FRAC_PI_2 - 1e-7, 0.0)),
            Err(Error::DegenerateBasis { .. })
        ));
    }

    #[test]
    fn great_circle_direction_examples() {
        let han = PixelCoord::new(512.0, 256.0);
        let d = great_circle_direction(han, PixelCoord::new(640.0, 256.0), han, 1024, 512).unwrap();
        assert!(close(d.di, 1.0, 1e-15) && close(d.dj, 0.0, 1e-15));

        let d = great_circle_direction(han, PixelCoord::new(512.0, 192.0), han, 1024, 512).unwrap();
        assert!(close(d.di, 0.0, 1e-15) && close(d.dj, -1.0, 1e-15));

        let err = great_circle_direction(han, PixelCoord::new(0.0, 256.0), han, 1024, 512);
        assert!(matches!(err, Err(Error::DegenerateGreatCircle { .. })));
    }

    #[test]
    fn great_circle_direction_signals() {
        let han = PixelCoord::new(100.0, 200.0);
        let tar = PixelCoord::new(160.0, 230.0);
        assert_eq!(
            great_circle_direction(han, tar, tar, 1024, 512),
            Err(Error::AtTarget)
        );
        // current point on the pole of the handle–target great circle
        let han = PixelCoord::new(512.0, 256.0);
        let tar = PixelCoord::new(600.0, 256.0);
        let cur = PixelCoord::new(512.0, 0.0);
        assert!(great_circle_direction(han, tar, cur, 1024, 512).is_err());
    }

    #[test]
    fn projection_lies_on_plane() {
        let step = great_circle_step(
            PixelCoord::new(300.0, 120.0),
            PixelCoord::new(420.0, 180.0),
            PixelCoord::new(350.0, 100.0),
            1024,
            512,
        )
        .unwrap();
        assert!(libm::fabs(step.projected.dot(step.normal)) < 1e-12);
        assert!(close(step.projected.norm(), 1.0, 1e-12));
        assert!(close(step.direction.norm(), 1.0, 1e-12));
    }

    #[test]
    fn great_circle_distance_examples() {
        let a = sph(0.2, -1.0);
        assert_eq!(great_circle_distance(a, a), 0.0);
        assert!(close(
            great_circle_distance(sph(0.0, 0.0), sph(0.0, FRAC_PI_2)),
            FRAC_PI_2,
            1e-15
        ));
        assert!(close(
            great_circle_distance(sph(0.0, 0.0), sph(FRAC_PI_4, 0.0)),
            FRAC_PI_4,
            1e-15
        ));
    }

    #[test]
    fn lon_normalization() {
        assert_eq!(normalize_lon(-PI), PI);
        assert_eq!(normalize_lon(PI), PI);
        assert!(close(normalize_lon(3.0 * PI / 2.0), -FRAC_PI_2, 1e-15));
        assert!(close(normalize_lon(-5.0 * PI), PI, 1e-14));
    }
}
