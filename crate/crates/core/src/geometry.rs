//! Planar geometry of the lifted table.
//!
//! Everything lives in the cover plane ℝ². A scatterer lift is addressed by
//! its disk index and an integer lattice cell, so the lift never drifts: the
//! center of `(i, (p, q))` is `(i/n + p, q)` computed from integers each time.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Collisions with `|cos φ|` below this are treated as degenerate.
pub const GRAZING_TOLERANCE: f64 = 1e-9;

/// Slack on the strict inequality of the stadium test; tangency does not count.
pub const HULL_TOLERANCE: f64 = 1e-12;

/// A point (or displacement) in the cover plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlanarPoint {
    pub x: f64,
    pub y: f64,
}

impl PlanarPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the planar cross product.
    pub fn cross(self, other: Self) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        (self.x * self.x + self.y * self.y).sqrt()
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn distance(self, other: Self) -> f64 {
        (self - other).norm()
    }

    /// Rotate by +90°.
    pub fn perp(self) -> Self {
        Self::new(-self.y, self.x)
    }
}

impl Add for PlanarPoint {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for PlanarPoint {
    fn add_assign(&mut self, rhs: Self) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for PlanarPoint {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Neg for PlanarPoint {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

impl Mul<f64> for PlanarPoint {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s)
    }
}

/// A direction of unit Euclidean length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "PlanarPoint", try_from = "PlanarPoint")]
pub struct UnitVector(PlanarPoint);

impl UnitVector {
    /// Normalizes `v`. Returns `None` for a zero or non-finite vector.
    pub fn new(v: PlanarPoint) -> Option<Self> {
        let norm = v.norm();
        if norm > 0.0 && norm.is_finite() {
            Some(Self(v * (1.0 / norm)))
        } else {
            None
        }
    }

    pub fn from_angle(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self(PlanarPoint::new(c, s))
    }

    pub fn x(self) -> f64 {
        self.0.x
    }

    pub fn y(self) -> f64 {
        self.0.y
    }

    pub fn as_point(self) -> PlanarPoint {
        self.0
    }

    pub fn dot(self, other: UnitVector) -> f64 {
        self.0.dot(other.0)
    }

    pub fn reversed(self) -> Self {
        Self(-self.0)
    }

    /// Re-normalizes against accumulated rounding.
    fn renormalized(v: PlanarPoint) -> Self {
        let norm = v.norm();
        Self(v * (1.0 / norm))
    }
}

impl From<UnitVector> for PlanarPoint {
    fn from(u: UnitVector) -> Self {
        u.0
    }
}

impl TryFrom<PlanarPoint> for UnitVector {
    type Error = String;
    fn try_from(p: PlanarPoint) -> std::result::Result<Self, String> {
        if (p.norm() - 1.0).abs() > 1e-9 {
            return Err(format!("vector ({}, {}) is not of unit length", p.x, p.y));
        }
        Ok(Self::renormalized(p))
    }
}

/// The table `T² \ ∪ D_i` with `n` disks of radius `r` centered at `(i/n, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BilliardTable {
    n: u32,
    r: f64,
}

impl BilliardTable {
    pub fn new(n: u32, r: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidTable("n must be at least 1".into()));
        }
        let max_r = 1.0 / (2.0 * f64::from(n));
        if !(r > 0.0 && r < max_r) {
            return Err(Error::InvalidTable(format!(
                "radius {r} outside (0, 1/(2n)) = (0, {max_r})"
            )));
        }
        Ok(Self { n, r })
    }

    /// The table with the `r = 1/(4n)` rule.
    pub fn quarter_spacing(n: u32) -> Result<Self> {
        Self::new(n, 1.0 / (4.0 * f64::from(n.max(1))))
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// Center of scatterer `i` in the base cell.
    pub fn base_center(&self, disk_id: u32) -> PlanarPoint {
        PlanarPoint::new(f64::from(disk_id) / f64::from(self.n), 0.0)
    }

    pub fn lifted_center(&self, d: LiftedDisk) -> Result<PlanarPoint> {
        if d.disk_id >= self.n {
            return Err(Error::DiskOutOfRange {
                disk_id: d.disk_id,
                n: self.n,
            });
        }
        Ok(self.center(d))
    }

    /// Unchecked variant of [`lifted_center`](Self::lifted_center) for disks
    /// produced internally.
    pub(crate) fn center(&self, d: LiftedDisk) -> PlanarPoint {
        PlanarPoint::new(
            f64::from(d.disk_id) / f64::from(self.n) + d.cell.0 as f64,
            d.cell.1 as f64,
        )
    }

    /// The lift whose center is `k/n + p` on row `q`, for any integer `k`.
    pub fn disk_at_column(&self, k: i64, q: i64) -> LiftedDisk {
        let n = i64::from(self.n);
        LiftedDisk {
            disk_id: k.rem_euclid(n) as u32,
            cell: (k.div_euclid(n), q),
        }
    }

    /// Integer column index `k` with center x-coordinate `k/n`.
    pub fn column_of(&self, d: LiftedDisk) -> i64 {
        d.cell.0 * i64::from(self.n) + i64::from(d.disk_id)
    }

    /// True when `point` is at distance less than `r` from some lifted center.
    pub fn inside_any_disk(&self, point: PlanarPoint) -> bool {
        self.nearest_disk(point).1 < self.r
    }

    /// The lifted disk nearest to `point` and the distance to its center.
    pub fn nearest_disk(&self, point: PlanarPoint) -> (LiftedDisk, f64) {
        let n = f64::from(self.n);
        let q = point.y.round() as i64;
        let k = (point.x * n).round() as i64;
        let d = self.disk_at_column(k, q);
        (d, point.distance(self.center(d)))
    }
}

/// A lift of scatterer `disk_id` to lattice cell `cell = (p, q)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LiftedDisk {
    pub disk_id: u32,
    pub cell: (i64, i64),
}

impl LiftedDisk {
    pub const fn new(disk_id: u32, p: i64, q: i64) -> Self {
        Self {
            disk_id,
            cell: (p, q),
        }
    }

    pub fn translated(self, dp: i64, dq: i64) -> Self {
        Self::new(self.disk_id, self.cell.0 + dp, self.cell.1 + dq)
    }
}

/// Smallest `t > 0` with `|origin + t·dir − center| = r`, if any.
pub fn ray_disk_first_hit(
    origin: PlanarPoint,
    dir: UnitVector,
    center: PlanarPoint,
    r: f64,
) -> Result<Option<f64>> {
    let oc = origin - center;
    let dist_sq = oc.norm_sq();
    if dist_sq < r * r {
        let distance = dist_sq.sqrt();
        if distance < r - 1e-12 {
            return Err(Error::OriginInsideDisk {
                distance,
                radius: r,
            });
        }
    }
    let d = dir.as_point();
    let b = oc.dot(d);
    if b >= 0.0 {
        return Ok(None);
    }
    let c = dist_sq - r * r;
    let disc = b * b - c;
    if disc < 0.0 {
        return Ok(None);
    }
    // c / (-b + sqrt(disc)) is the smaller root without cancellation.
    let mut t = c / (-b + disc.sqrt());
    if t <= 0.0 {
        return Ok(None);
    }
    // One Newton step on |oc + t d|² = r² tightens the circle residual.
    let p = oc + d * t;
    let slope = 2.0 * p.dot(d);
    if slope.abs() > 1e-300 {
        t -= (p.norm_sq() - r * r) / slope;
    }
    Ok(Some(t))
}

/// Specular reflection of `v` in the line with unit normal `normal`.
pub fn reflect(v: UnitVector, normal: UnitVector) -> Result<UnitVector> {
    let vn = v.dot(normal);
    if vn.abs() < GRAZING_TOLERANCE {
        return Err(Error::Grazing { cos_phi: vn.abs() });
    }
    let out = v.as_point() - normal.as_point() * (2.0 * vn);
    Ok(UnitVector::renormalized(out))
}

/// Distance from `p` to the closed segment `[a, b]`.
pub fn point_segment_distance(p: PlanarPoint, a: PlanarPoint, b: PlanarPoint) -> f64 {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    if len_sq == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len_sq).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

/// Whether a radius-`r` disk centered at `other` meets the open stadium
/// (convex hull of the two radius-`r` disks at `c1`, `c2`).
pub fn disk_meets_stadium(other: PlanarPoint, c1: PlanarPoint, c2: PlanarPoint, r: f64) -> bool {
    point_segment_distance(other, c1, c2) < 2.0 * r - HULL_TOLERANCE
}
