//! Disk and ball domains: exit times, normals and the incoming boundary set.
//!
//! Points and directions are stored as 3-vectors in both dimensions. In the
//! plane the third component is zero and every operation rejects inputs that
//! leave the plane.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// A point in the domain or its surroundings.
pub type Point = Vector3<f64>;
/// A direction or displacement.
pub type Vector = Vector3<f64>;

/// Relative tolerance for boundary membership tests.
pub const BOUNDARY_TOL: f64 = 1e-9;
/// Allowed deviation of a direction's norm from 1.
pub const UNIT_TOL: f64 = 1e-10;

/// Spatial dimension of the problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dimension {
    Two,
    Three,
}

impl Dimension {
    pub fn n(self) -> usize {
        match self {
            Dimension::Two => 2,
            Dimension::Three => 3,
        }
    }

    pub fn from_n(n: usize) -> Result<Self> {
        match n {
            2 => Ok(Dimension::Two),
            3 => Ok(Dimension::Three),
            other => Err(Error::UnsupportedDimension(other)),
        }
    }

    /// Measure of the unit sphere S^{n-1}: 2π or 4π.
    pub fn sphere_measure(self) -> f64 {
        match self {
            Dimension::Two => 2.0 * PI,
            Dimension::Three => 4.0 * PI,
        }
    }
}

/// Builds a planar point.
pub fn p2(x: f64, y: f64) -> Point {
    Vector3::new(x, y, 0.0)
}

/// Builds a spatial point.
pub fn p3(x: f64, y: f64, z: f64) -> Point {
    Vector3::new(x, y, z)
}

/// Unit direction at angle `theta` in the plane.
pub fn planar_direction(theta: f64) -> Vector {
    Vector3::new(theta.cos(), theta.sin(), 0.0)
}

/// The open disk or ball of a given center and radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainGeometry {
    dim: Dimension,
    center: Point,
    radius: f64,
}

impl DomainGeometry {
    pub fn new(dim: Dimension, center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Argument(format!("radius must be positive, got {radius}")));
        }
        if dim == Dimension::Two && center.z != 0.0 {
            return Err(Error::Argument("planar domain center must have z = 0".into()));
        }
        Ok(Self { dim, center, radius })
    }

    /// Unit disk centered at the origin.
    pub fn unit_disk() -> Self {
        Self::new(Dimension::Two, Point::zeros(), 1.0).expect("unit disk")
    }

    /// Unit ball centered at the origin.
    pub fn unit_ball() -> Self {
        Self::new(Dimension::Three, Point::zeros(), 1.0).expect("unit ball")
    }

    pub fn dimension(&self) -> Dimension {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.dim.n()
    }

    pub fn center(&self) -> Point {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn diameter(&self) -> f64 {
        2.0 * self.radius
    }

    fn check_plane(&self, p: &Vector, what: &str) -> Result<()> {
        if self.dim == Dimension::Two && p.z != 0.0 {
            return Err(Error::Argument(format!("{what} leaves the plane (z = {})", p.z)));
        }
        Ok(())
    }

    /// Rejects directions whose norm differs from one.
    pub fn check_unit(&self, v: &Vector) -> Result<()> {
        self.check_plane(v, "direction")?;
        let norm = v.norm();
        if (norm - 1.0).abs() > UNIT_TOL {
            return Err(Error::Normalization { norm });
        }
        Ok(())
    }

    /// Distance from `x` to the boundary; negative outside.
    pub fn distance_to_boundary(&self, x: &Point) -> f64 {
        self.radius - (x - self.center).norm()
    }

    /// Membership in the closed domain with the boundary tolerance.
    pub fn contains(&self, x: &Point) -> bool {
        (x - self.center).norm() <= self.radius * (1.0 + BOUNDARY_TOL)
    }

    /// Strict interior membership.
    pub fn is_interior(&self, x: &Point) -> bool {
        (x - self.center).norm() < self.radius
    }

    pub fn on_boundary(&self, x: &Point) -> bool {
        ((x - self.center).norm() - self.radius).abs() <= BOUNDARY_TOL * self.radius
    }

    /// Exit time τ₊ (`forward = true`) or τ₋ (`forward = false`) of the ray
    /// from `x` along ±`v`.
    pub fn exit_time(&self, x: &Point, v: &Vector, forward: bool) -> Result<f64> {
        self.check_plane(x, "point")?;
        self.check_unit(v)?;
        if !self.contains(x) {
            return Err(Error::Domain(format!(
                "point at distance {} from the center lies outside the domain of radius {}",
                (x - self.center).norm(),
                self.radius
            )));
        }
        let w = if forward { *v } else { -*v };
        Ok(self.exit_distance(x, &w))
    }

    /// Exit distance along `w` without validation.
    pub(crate) fn exit_distance(&self, x: &Point, w: &Vector) -> f64 {
        let p = x - self.center;
        let b = p.dot(w);
        let c = (self.radius * self.radius - p.norm_squared()).max(0.0);
        let disc = (b * b + c).sqrt();
        if b > 0.0 {
            c / (b + disc)
        } else {
            disc - b
        }
    }

    /// Length of the chord through `x` along `v`, computed from the distance
    /// between the center and the line.
    pub fn chord_length(&self, x: &Point, v: &Vector) -> Result<f64> {
        self.check_unit(v)?;
        let p = x - self.center;
        let perp = p - v * p.dot(v);
        let r2 = self.radius * self.radius - perp.norm_squared();
        if r2 < 0.0 {
            return Err(Error::Domain("line misses the domain".into()));
        }
        Ok(2.0 * r2.sqrt())
    }

    /// Outward unit normal at a boundary point.
    pub fn outward_normal(&self, xb: &Point) -> Result<Vector> {
        self.check_plane(xb, "point")?;
        let p = xb - self.center;
        let r = p.norm();
        if (r - self.radius).abs() > BOUNDARY_TOL * self.radius {
            return Err(Error::Domain(format!(
                "point at radius {r} is not on the boundary of radius {}",
                self.radius
            )));
        }
        Ok(p / r)
    }

    /// Outward normal at the radial projection of `x` onto the boundary.
    pub(crate) fn normal_unchecked(&self, x: &Point) -> Vector {
        (x - self.center).normalize()
    }

    /// Total dξ-measure of Γ₋: boundary measure times ∫_{ν·v<0} |ν·v| dv.
    pub fn incoming_measure(&self) -> f64 {
        match self.dim {
            Dimension::Two => 2.0 * PI * self.radius * 2.0,
            Dimension::Three => 4.0 * PI * self.radius * self.radius * PI,
        }
    }

    /// Seeded low-discrepancy quadrature of Γ₋ with the measure dξ.
    ///
    /// Boundary positions are uniform and directions are cosine-weighted about
    /// the inward normal, so every sample carries the same weight and the
    /// weights sum to [`incoming_measure`](Self::incoming_measure).
    pub fn sample_incoming(&self, count: usize, seed: u64) -> Result<Vec<(BoundaryPair, f64)>> {
        if count == 0 {
            return Err(Error::Argument("sample count must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift: [f64; 4] = [rng.gen(), rng.gen(), rng.gen(), rng.gen()];
        let weight = self.incoming_measure() / count as f64;
        let mut out = Vec::with_capacity(count);
        for i in 0..count {
            let idx = i as u64 + 1;
            let u = [
                open_unit(radical_inverse(idx, 2) + shift[0]),
                open_unit(radical_inverse(idx, 3) + shift[1]),
                open_unit(radical_inverse(idx, 5) + shift[2]),
                open_unit(radical_inverse(idx, 7) + shift[3]),
            ];
            let (point, dir) = match self.dim {
                Dimension::Two => {
                    let phi = 2.0 * PI * u[0];
                    let nu = planar_direction(phi);
                    let s = 2.0 * u[1] - 1.0;
                    let c = (1.0 - s * s).sqrt();
                    let tangent = Vector3::new(-nu.y, nu.x, 0.0);
                    (self.center + nu * self.radius, -nu * c + tangent * s)
                }
                Dimension::Three => {
                    let z = 1.0 - 2.0 * u[0];
                    let rho = (1.0 - z * z).max(0.0).sqrt();
                    let phi = 2.0 * PI * u[1];
                    let nu = Vector3::new(rho * phi.cos(), rho * phi.sin(), z);
                    let (e1, e2) = orthonormal_pair(&nu);
                    let r = u[2].sqrt();
                    let psi = 2.0 * PI * u[3];
                    let c = (1.0 - u[2]).sqrt();
                    let dir = -nu * c + e1 * (r * psi.cos()) + e2 * (r * psi.sin());
                    (self.center + nu * self.radius, dir.normalize())
                }
            };
            out.push((BoundaryPair { point, direction: dir }, weight));
        }
        Ok(out)
    }
}

fn open_unit(u: f64) -> f64 {
    let v = u - u.floor();
    v.clamp(1e-12, 1.0 - 1e-12)
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

/// Two unit vectors completing `v` to an orthonormal frame.
pub fn orthonormal_pair(v: &Vector) -> (Vector, Vector) {
    let helper = if v.x.abs() < 0.9 {
        Vector3::new(1.0, 0.0, 0.0)
    } else {
        Vector3::new(0.0, 1.0, 0.0)
    };
    let e1 = (helper - v * v.dot(&helper)).normalize();
    let e2 = v.cross(&e1);
    (e1, e2)
}

/// In-plane unit vector orthogonal to a planar direction (rotated by +90°).
pub fn planar_perpendicular(v: &Vector) -> Vector {
    Vector3::new(-v.y, v.x, 0.0)
}

/// An element (x′, v′) of the incoming set Γ₋.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPair {
    pub point: Point,
    pub direction: Vector,
}

impl BoundaryPair {
    /// Validated constructor: `point` on ∂X, `direction` unit and incoming.
    pub fn new(geom: &DomainGeometry, point: Point, direction: Vector) -> Result<Self> {
        geom.check_unit(&direction)?;
        let nu = geom.outward_normal(&point)?;
        if nu.dot(&direction) >= 0.0 {
            return Err(Error::Argument(format!(
                "direction is not incoming (ν·v = {})",
                nu.dot(&direction)
            )));
        }
        Ok(Self { point, direction })
    }

    /// The pair whose ray passes through interior point `x` along `v`.
    pub fn through(geom: &DomainGeometry, x: &Point, v: &Vector) -> Result<Self> {
        let back = geom.exit_time(x, v, false)?;
        let point = x - v * back;
        let nu = geom.normal_unchecked(&point);
        let point = geom.center() + nu * geom.radius();
        if nu.dot(v) >= 0.0 {
            return Err(Error::Argument("direction is tangent to the boundary".into()));
        }
        Ok(Self { point, direction: *v })
    }

    /// Pair entering at boundary angle `phi` with direction making angle `theta`
    /// with the inward normal (planar only).
    pub fn planar(geom: &DomainGeometry, phi: f64, theta: f64) -> Result<Self> {
        let nu = planar_direction(phi);
        let point = geom.center() + nu * geom.radius();
        let inward = -nu;
        let tangent = planar_perpendicular(&inward);
        let dir = inward * theta.cos() + tangent * theta.sin();
        Self::new(geom, point, dir)
    }

    /// |ν(x′)·v′|.
    pub fn cos_incidence(&self, geom: &DomainGeometry) -> f64 {
        geom.normal_unchecked(&self.point).dot(&self.direction).abs()
    }

    /// τ₊(x′, v′), the chord length of the pair's ray.
    pub fn chord(&self, geom: &DomainGeometry) -> f64 {
        geom.exit_distance(&self.point, &self.direction)
    }

    /// Point x′ + t v′.
    pub fn at(&self, t: f64) -> Point {
        self.point + self.direction * t
    }

    pub fn exit_point(&self, geom: &DomainGeometry) -> Point {
        self.at(self.chord(geom))
    }

    /// The reversed experiment (x′ + τ₊v′, −v′).
    pub fn reversed(&self, geom: &DomainGeometry) -> Self {
        let exit = self.exit_point(geom);
        let nu = geom.normal_unchecked(&exit);
        Self {
            point: geom.center() + nu * geom.radius(),
            direction: -self.direction,
        }
    }

    /// Decomposes x − x′ into the coordinate along v′ and the transverse part.
    pub fn split(&self, x: &Point) -> (f64, Vector) {
        let d = x - self.point;
        let along = d.dot(&self.direction);
        (along, d - self.direction * along)
    }

    /// |(x − x′)_⊥|.
    pub fn transverse_distance(&self, x: &Point) -> f64 {
        self.split(x).1.norm()
    }
}
