//! Planar and spatial primitives shared by the simulator, perception and planner.
//!
//! All lengths are meters in the workspace frame; `z = 0` is the workspace plate.

mod contour;
mod mask;

pub use contour::{marching_squares, outer_contour};
pub use mask::{label_components, BinaryMask, Labels};

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inches to meters.
pub const INCH: f64 = 0.0254;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Unit vector at `angle` radians from +x.
    pub fn from_angle(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(c, s)
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z component of the 3-D cross product.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, o: Vec2) -> f64 {
        (self - o).norm()
    }

    /// Returns `None` for (near) zero vectors.
    pub fn normalized(self) -> Option<Vec2> {
        let n = self.norm();
        (n > 1e-300).then(|| self * (1.0 / n))
    }

    /// Counterclockwise perpendicular.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn rotate(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn with_z(self, z: f64) -> Vec3 {
        Vec3::new(self.x, self.y, z)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn xy(self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn distance(self, o: Vec3) -> f64 {
        (self - o).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

macro_rules! impl_vec_ops {
    ($t:ident { $($f:ident),+ }) => {
        impl Add for $t {
            type Output = $t;
            fn add(self, o: $t) -> $t { $t { $($f: self.$f + o.$f),+ } }
        }
        impl AddAssign for $t {
            fn add_assign(&mut self, o: $t) { $(self.$f += o.$f;)+ }
        }
        impl Sub for $t {
            type Output = $t;
            fn sub(self, o: $t) -> $t { $t { $($f: self.$f - o.$f),+ } }
        }
        impl Mul<f64> for $t {
            type Output = $t;
            fn mul(self, s: f64) -> $t { $t { $($f: self.$f * s),+ } }
        }
        impl Neg for $t {
            type Output = $t;
            fn neg(self) -> $t { $t { $($f: -self.$f),+ } }
        }
    };
}

impl_vec_ops!(Vec2 { x, y });
impl_vec_ops!(Vec3 { x, y, z });

/// Circular target shape (or circular dough footprint).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub center: Vec2,
    pub radius: f64,
}

impl Disk {
    pub fn new(center: Vec2, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) || !center.is_finite() {
            return Err(Error::InvalidConfig(format!("disk radius must be positive, got {radius}")));
        }
        Ok(Self { center, radius })
    }

    /// Disk of the given diameter in inches.
    pub fn from_diameter_inches(center: Vec2, inches: f64) -> Result<Self> {
        Self::new(center, inches * INCH / 2.0)
    }

    pub fn area(&self) -> f64 {
        std::f64::consts::PI * self.radius * self.radius
    }

    pub fn contains(&self, p: Vec2) -> bool {
        disk_contains(self, p)
    }

    /// Signed distance from the outline; positive outside.
    pub fn outside_distance(&self, p: Vec2) -> f64 {
        p.distance(self.center) - self.radius
    }
}

/// Boundary-inclusive containment.
pub fn disk_contains(d: &Disk, p: Vec2) -> bool {
    (p - d.center).norm_sq() <= d.radius * d.radius
}

/// Point where a ray leaving `origin` (inside the disk) crosses the circle.
pub fn ray_circle_exit(origin: Vec2, dir: Vec2, d: &Disk) -> Result<Vec2> {
    if !d.contains(origin) {
        return Err(Error::OriginOutside);
    }
    let f = origin - d.center;
    let b = f.dot(dir);
    let c = f.norm_sq() - d.radius * d.radius;
    // c <= 0 so the discriminant is non-negative.
    let t = -b + (b * b - c).max(0.0).sqrt();
    Ok(origin + dir * t)
}

/// Far crossing of a ray with the circle, wherever the ray starts. `None` when
/// the ray misses or the circle lies behind the origin.
pub fn ray_circle_far_hit(origin: Vec2, dir: Vec2, d: &Disk) -> Option<Vec2> {
    let f = origin - d.center;
    let b = f.dot(dir);
    let c = f.norm_sq() - d.radius * d.radius;
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let t = -b + disc.sqrt();
    (t >= 0.0).then(|| origin + dir * t)
}

/// Closed polyline; the closing edge from the last vertex back to the first is implicit.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    pub points: Vec<Vec2>,
}

impl Contour {
    pub fn new(points: Vec<Vec2>) -> Self {
        Self { points }
    }

    /// Regular polygon approximating a circle, counterclockwise.
    pub fn regular_polygon(center: Vec2, radius: f64, n: usize) -> Self {
        let step = std::f64::consts::TAU / n as f64;
        Self::new((0..n).map(|i| center + Vec2::from_angle(i as f64 * step) * radius).collect())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn segments(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        let n = self.points.len();
        (0..n).map(move |i| (self.points[i], self.points[(i + 1) % n]))
    }

    /// Shoelace area; positive for counterclockwise contours.
    pub fn signed_area(&self) -> f64 {
        0.5 * self.segments().map(|(a, b)| a.cross(b)).sum::<f64>()
    }

    /// Even-odd point-in-polygon test.
    pub fn contains(&self, p: Vec2) -> bool {
        let mut inside = false;
        for (a, b) in self.segments() {
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Distance from `p` to the nearest point on any segment.
    pub fn distance_to(&self, p: Vec2) -> f64 {
        self.segments()
            .map(|(a, b)| point_segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn translated(&self, t: Vec2) -> Contour {
        Contour::new(self.points.iter().map(|&p| p + t).collect())
    }
}

pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let e = b - a;
    let len_sq = e.norm_sq();
    let u = if len_sq > 0.0 { ((p - a).dot(e) / len_sq).clamp(0.0, 1.0) } else { 0.0 };
    p.distance(a + e * u)
}

/// Farthest crossing of the ray with the contour. Taking the farthest crossing
/// handles mildly nonconvex outlines where the ray leaves and re-enters.
pub fn ray_contour_exit(origin: Vec2, dir: Vec2, c: &Contour) -> Result<Vec2> {
    if c.len() < 3 || !c.contains(origin) {
        return Err(Error::NoIntersection);
    }
    let mut best: Option<f64> = None;
    for (a, b) in c.segments() {
        let e = b - a;
        let denom = dir.cross(e);
        if denom.abs() < 1e-18 {
            continue;
        }
        let ao = a - origin;
        let t = ao.cross(e) / denom;
        let u = ao.cross(dir) / denom;
        if t >= 0.0 && (-1e-12..=1.0 + 1e-12).contains(&u) && best.is_none_or(|bt| t > bt) {
            best = Some(t);
        }
    }
    best.map(|t| origin + dir * t).ok_or(Error::NoIntersection)
}
