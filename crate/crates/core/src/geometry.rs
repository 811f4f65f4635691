//! The disk domain: boundary parametrization, chords, and the split of the
//! boundary unit bundle into inflow, outflow and tangent parts.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral;

/// A point (or vector) in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    /// Unit vector `(cos φ, sin φ)`.
    pub fn unit(phi: f64) -> Self {
        let (s, c) = phi.sin_cos();
        Point { x: c, y: s }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sqr(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    /// Counterclockwise rotation by π/2.
    pub fn perp(self) -> Point {
        Point::new(-self.y, self.x)
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.x, self.y)
    }

    pub fn from_complex(z: Complex64) -> Self {
        Point::new(z.re, z.im)
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// Which part of `Γ × S¹` a boundary ray belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RayClass {
    /// `θ·n < 0`: the ray enters the disk.
    Inflow,
    /// `θ·n > 0`: the ray leaves the disk.
    Outflow,
    /// `|θ·n|` inside the tangency band.
    Tangent,
}

pub const DEFAULT_TANGENCY_EPS: f64 = 1e-9;

/// The disk of a given radius with a uniform grid of `m` boundary nodes at
/// `s_i = 2πi/m`, traversed counterclockwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    radius: f64,
    m: usize,
    tangency_eps: f64,
}

impl Domain {
    pub fn new(radius: f64, boundary_nodes: usize) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Config(format!("radius must be positive, got {radius}")));
        }
        if boundary_nodes < 8 || boundary_nodes % 2 != 0 {
            return Err(Error::Config(format!(
                "boundary node count must be even and >= 8, got {boundary_nodes}"
            )));
        }
        Ok(Domain { radius, m: boundary_nodes, tangency_eps: DEFAULT_TANGENCY_EPS })
    }

    pub fn unit(boundary_nodes: usize) -> Result<Self> {
        Self::new(1.0, boundary_nodes)
    }

    pub fn with_tangency_eps(mut self, eps: f64) -> Self {
        self.tangency_eps = eps;
        self
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn boundary_nodes(&self) -> usize {
        self.m
    }

    pub fn tangency_eps(&self) -> f64 {
        self.tangency_eps
    }

    /// Parameter `s_i = 2πi/m` of boundary node `i`; also the outward normal angle.
    pub fn node_param(&self, i: usize) -> f64 {
        2.0 * PI * i as f64 / self.m as f64
    }

    pub fn node(&self, i: usize) -> Point {
        Point::unit(self.node_param(i)) * self.radius
    }

    pub fn normal(&self, i: usize) -> Point {
        Point::unit(self.node_param(i))
    }

    pub fn contains(&self, x: Point) -> bool {
        x.norm() <= self.radius * (1.0 + 1e-12)
    }

    /// Distance travelled from `x` along `theta` until leaving the closed disk.
    pub fn exit_distance(&self, x: Point, theta: Point) -> Result<f64> {
        let r2 = self.radius * self.radius;
        let xx = x.norm_sqr();
        if xx > r2 * (1.0 + 2e-12) {
            return Err(Error::Domain(format!(
                "point ({}, {}) is outside the disk of radius {}",
                x.x, x.y, self.radius
            )));
        }
        // |x + tθ|² = r²  →  t² + 2(x·θ)t + (|x|² − r²) = 0
        let b = x.dot(theta);
        let c = (xx - r2).min(0.0);
        let disc = b * b - c;
        Ok((-b + disc.max(0.0).sqrt()).max(0.0))
    }

    /// Chord length through `x` in direction `theta`.
    pub fn chord_length(&self, x: Point, theta: Point) -> Result<f64> {
        Ok(self.exit_distance(x, theta)? + self.exit_distance(x, -theta)?)
    }

    pub fn classify(&self, x: Point, theta: Point) -> Result<RayClass> {
        let r = x.norm();
        if (r - self.radius).abs() > 1e-12 * self.radius {
            return Err(Error::Domain(format!(
                "point ({}, {}) is not on the boundary (|x| = {r})",
                x.x, x.y
            )));
        }
        let n = x * (1.0 / r);
        let cos = theta.dot(n);
        Ok(if cos.abs() <= self.tangency_eps {
            RayClass::Tangent
        } else if cos > 0.0 {
            RayClass::Outflow
        } else {
            RayClass::Inflow
        })
    }

    /// Tangential derivative `∂_τ = (1/radius) d/ds` of values sampled on the
    /// boundary grid, by trigonometric interpolation.
    pub fn boundary_derivative(&self, values: &[Complex64]) -> Result<Vec<Complex64>> {
        if values.len() != self.m {
            return Err(Error::Shape(format!(
                "expected {} boundary values, got {}",
                self.m,
                values.len()
            )));
        }
        let scale = 1.0 / self.radius;
        Ok(spectral::derivative(values).into_iter().map(|v| v * scale).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk() -> Domain {
        Domain::unit(64).unwrap()
    }

    #[test]
    fn exit_distance_examples() {
        let d = disk();
        assert_eq!(d.exit_distance(Point::ORIGIN, Point::new(1.0, 0.0)).unwrap(), 1.0);
        assert!((d.exit_distance(Point::new(1.0, 0.0), Point::new(-1.0, 0.0)).unwrap() - 2.0).abs() < 1e-15);
        let t = d.exit_distance(Point::new(0.5, 0.0), Point::new(0.0, 1.0)).unwrap();
        assert!((t - 0.75f64.sqrt()).abs() < 1e-15);
        assert!((t - 0.8660254).abs() < 1e-7);
    }

    #[test]
    fn exit_distance_rejects_outside_points() {
        let err = disk().exit_distance(Point::new(1.1, 0.0), Point::new(1.0, 0.0));
        assert!(matches!(err, Err(Error::Domain(_))));
    }

    #[test]
    fn classify_examples() {
        let d = disk();
        let x = Point::new(1.0, 0.0);
        assert_eq!(d.classify(x, Point::new(1.0, 0.0)).unwrap(), RayClass::Outflow);
        assert_eq!(d.classify(x, Point::new(-1.0, 0.0)).unwrap(), RayClass::Inflow);
        assert_eq!(d.classify(x, Point::new(0.0, 1.0)).unwrap(), RayClass::Tangent);
        assert!(d.classify(Point::new(0.5, 0.0), Point::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn boundary_derivative_examples() {
        let d = Domain::unit(64).unwrap();
        let m = d.boundary_nodes();
        let consts = vec![Complex64::new(2.5, -1.0); m];
        assert!(d.boundary_derivative(&consts).unwrap().iter().all(|v| v.norm() < 1e-14));

        let e: Vec<_> = (0..m).map(|i| Complex64::from_polar(1.0, d.node_param(i))).collect();
        let de = d.boundary_derivative(&e).unwrap();
        for (v, dv) in e.iter().zip(&de) {
            assert!((dv - v * Complex64::i()).norm() < 1e-13);
        }

        let c3: Vec<_> = (0..m).map(|i| Complex64::new((3.0 * d.node_param(i)).cos(), 0.0)).collect();
        let dc3 = d.boundary_derivative(&c3).unwrap();
        let err = (0..m)
            .map(|i| (dc3[i] - Complex64::new(-3.0 * (3.0 * d.node_param(i)).sin(), 0.0)).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn boundary_derivative_scales_with_radius() {
        let d = Domain::new(2.0, 32).unwrap();
        let e: Vec<_> = (0..32).map(|i| Complex64::from_polar(1.0, d.node_param(i))).collect();
        let de = d.boundary_derivative(&e).unwrap();
        assert!((de[5] - e[5] * Complex64::new(0.0, 0.5)).norm() < 1e-13);
    }

    #[test]
    fn domain_rejects_bad_grids() {
        assert!(Domain::unit(7).is_err());
        assert!(Domain::unit(6).is_err());
        assert!(Domain::new(-1.0, 16).is_err());
    }

    proptest::proptest! {
        #[test]
        fn exit_distances_sum_to_chord(r in 0.0f64..0.999, a in 0.0f64..6.283, phi in 0.0f64..6.283) {
            let d = disk();
            let x = Point::unit(a) * r;
            let th = Point::unit(phi);
            let total = d.exit_distance(x, th).unwrap() + d.exit_distance(x, -th).unwrap();
            // chord at distance p from the center has length 2√(1−p²)
            let p = x.dot(th.perp());
            proptest::prop_assert!((total - 2.0 * (1.0 - p * p).sqrt()).abs() < 1e-12);
        }

        #[test]
        fn classify_is_antisymmetric(a in 0.0f64..6.283, phi in 0.0f64..6.283) {
            let d = disk();
            let x = Point::unit(a);
            let th = Point::unit(phi);
            match d.classify(x, th).unwrap() {
                RayClass::Outflow => proptest::prop_assert_eq!(d.classify(x, -th).unwrap(), RayClass::Inflow),
                RayClass::Inflow => proptest::prop_assert_eq!(d.classify(x, -th).unwrap(), RayClass::Outflow),
                RayClass::Tangent => proptest::prop_assert_eq!(d.classify(x, -th).unwrap(), RayClass::Tangent),
            }
        }
    }
}
