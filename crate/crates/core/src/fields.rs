//! Symmetric 2-tensor fields, scalar attenuations and the phantom library.
//!
//! A tensor `F = [[f11, f12], [f12, f22]]` is stored through its three
//! independent components. Its quadratic form along `θ = (cos φ, sin φ)`
//! has only the angular modes `{-2, 0, 2}`:
//!
//! ```text
//! ⟨Fθ, θ⟩ = f0 + conj(f2)·e^{2iφ} + f2·e^{-2iφ},
//! f0 = (f11 + f22)/2,   f2 = (f11 − f22)/4 + i·f12/2.
//! ```

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::grid::{CartesianGrid, GridField};

/// Value of a symmetric 2-tensor at a point.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Sym2 {
    pub f11: f64,
    pub f12: f64,
    pub f22: f64,
}

impl Sym2 {
    pub const ZERO: Sym2 = Sym2 { f11: 0.0, f12: 0.0, f22: 0.0 };

    pub const fn new(f11: f64, f12: f64, f22: f64) -> Self {
        Sym2 { f11, f12, f22 }
    }

    pub fn isotropic(s: f64) -> Self {
        Sym2::new(s, 0.0, s)
    }

    /// `θᵀ F θ`.
    pub fn quad_form(&self, theta: Point) -> f64 {
        self.f11 * theta.x * theta.x + 2.0 * self.f12 * theta.x * theta.y + self.f22 * theta.y * theta.y
    }

    /// `(f0, f2)`.
    pub fn decompose(&self) -> (f64, Complex64) {
        let f0 = 0.5 * (self.f11 + self.f22);
        let f2 = Complex64::new(0.25 * (self.f11 - self.f22), 0.5 * self.f12);
        (f0, f2)
    }

    /// Inverse of [`Sym2::decompose`].
    pub fn from_f0_f2(f0: f64, f2: Complex64) -> Self {
        Sym2::new(f0 + 2.0 * f2.re, 2.0 * f2.im, f0 - 2.0 * f2.re)
    }

    /// The quadratic form computed from the angular modes.
    pub fn quad_form_modes(&self, phi: f64) -> f64 {
        let (f0, f2) = self.decompose();
        let e2 = Complex64::from_polar(1.0, 2.0 * phi);
        (f0 + f2.conj() * e2 + f2 * e2.conj()).re
    }

    pub fn scale(&self, k: f64) -> Sym2 {
        Sym2::new(self.f11 * k, self.f12 * k, self.f22 * k)
    }

    pub fn add(&self, o: &Sym2) -> Sym2 {
        Sym2::new(self.f11 + o.f11, self.f12 + o.f12, self.f22 + o.f22)
    }

    pub fn max_abs(&self) -> f64 {
        self.f11.abs().max(self.f12.abs()).max(self.f22.abs())
    }
}

/// A symmetric 2-tensor field on the plane (zero where undefined).
pub trait TensorField: Sync {
    fn eval(&self, x: Point) -> Sym2;
}

impl<T: TensorField + ?Sized> TensorField for &T {
    fn eval(&self, x: Point) -> Sym2 {
        (**self).eval(x)
    }
}

/// The zero tensor.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroField;

impl TensorField for ZeroField {
    fn eval(&self, _x: Point) -> Sym2 {
        Sym2::ZERO
    }
}

pub fn decompose_f0_f2(field: &dyn TensorField, x: Point) -> (f64, Complex64) {
    field.eval(x).decompose()
}

/// `⟨F(x)θ, θ⟩` for `θ = (cos φ, sin φ)`.
pub fn source_term(field: &dyn TensorField, x: Point, phi: f64) -> f64 {
    field.eval(x).quad_form(Point::unit(phi))
}

/// Same value as [`source_term`] through the `f0`/`f2` mode formula.
pub fn source_term_modes(field: &dyn TensorField, x: Point, phi: f64) -> f64 {
    field.eval(x).quad_form_modes(phi)
}

/// `(1 − q)^3` for `q < 1`, zero otherwise, with its derivative in `q`.
fn cubic_bump(q: f64) -> (f64, f64) {
    if q >= 1.0 {
        (0.0, 0.0)
    } else {
        let t = 1.0 - q;
        (t * t * t, -3.0 * t * t)
    }
}

/// Analytic phantom building blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhantomComponent {
    /// `A·exp(−|x−c|²/σ²)·I`.
    GaussianIsotropic { sigma: f64, center: Point, amplitude: f64 },
    /// `(1 − |x−c|²/ρ²)³` on `|x−c| < ρ` times a constant symmetric matrix.
    Bump { center: Point, rho: f64, f11: f64, f12: f64, f22: f64 },
    /// Symmetrized gradient of a vector field vanishing on the boundary.
    Potential { field: VectorField },
}

impl PhantomComponent {
    pub fn eval(&self, x: Point) -> Sym2 {
        match *self {
            PhantomComponent::GaussianIsotropic { sigma, center, amplitude } => {
                let r2 = (x - center).norm_sqr();
                Sym2::isotropic(amplitude * (-r2 / (sigma * sigma)).exp())
            }
            PhantomComponent::Bump { center, rho, f11, f12, f22 } => {
                let (b, _) = cubic_bump((x - center).norm_sqr() / (rho * rho));
                Sym2::new(f11 * b, f12 * b, f22 * b)
            }
            PhantomComponent::Potential { ref field } => field.symmetric_gradient(x),
        }
    }

    /// Radius of a disk about the origin containing the support, if compact.
    fn support_radius(&self) -> Option<f64> {
        match *self {
            PhantomComponent::GaussianIsotropic { .. } => None,
            PhantomComponent::Bump { center, rho, .. } => Some(center.norm() + rho),
            PhantomComponent::Potential { ref field } => field.support_radius(),
        }
    }
}

/// Smooth vector fields used to build potential (null-space) tensors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VectorField {
    Zero,
    /// `(1 − |x|²/R²)²·(ax, ay)` on `|x| ≤ R`: vanishes to second order on the circle.
    BoundaryWeight { radius: f64, ax: f64, ay: f64 },
    /// `(1 − |x−c|²/ρ²)³·(ax, ay)` on `|x−c| < ρ`.
    Bump { center: Point, rho: f64, ax: f64, ay: f64 },
}

impl VectorField {
    pub fn eval(&self, x: Point) -> Point {
        match *self {
            VectorField::Zero => Point::ORIGIN,
            VectorField::BoundaryWeight { radius, ax, ay } => {
                let q = x.norm_sqr() / (radius * radius);
                let w = if q < 1.0 { (1.0 - q) * (1.0 - q) } else { 0.0 };
                Point::new(ax * w, ay * w)
            }
            VectorField::Bump { center, rho, ax, ay } => {
                let (b, _) = cubic_bump((x - center).norm_sqr() / (rho * rho));
                Point::new(ax * b, ay * b)
            }
        }
    }

    /// Jacobian `[[∂1 v1, ∂2 v1], [∂1 v2, ∂2 v2]]`.
    pub fn jacobian(&self, x: Point) -> [[f64; 2]; 2] {
        let (ax, ay, grad) = match *self {
            VectorField::Zero => return [[0.0; 2]; 2],
            VectorField::BoundaryWeight { radius, ax, ay } => {
                let r2 = radius * radius;
                let q = x.norm_sqr() / r2;
                let g = if q < 1.0 { -4.0 * (1.0 - q) / r2 } else { 0.0 };
                (ax, ay, Point::new(g * x.x, g * x.y))
            }
            VectorField::Bump { center, rho, ax, ay } => {
                let d = x - center;
                let (_, db) = cubic_bump(d.norm_sqr() / (rho * rho));
                let g = 2.0 * db / (rho * rho);
                (ax, ay, Point::new(g * d.x, g * d.y))
            }
        };
        [[ax * grad.x, ax * grad.y], [ay * grad.x, ay * grad.y]]
    }

    /// `(∂_j v_k + ∂_k v_j)/2`.
    pub fn symmetric_gradient(&self, x: Point) -> Sym2 {
        let j = self.jacobian(x);
        Sym2::new(j[0][0], 0.5 * (j[0][1] + j[1][0]), j[1][1])
    }

    fn support_radius(&self) -> Option<f64> {
        match *self {
            VectorField::Zero => Some(0.0),
            VectorField::BoundaryWeight { radius, .. } => Some(radius),
            VectorField::Bump { center, rho, .. } => Some(center.norm() + rho),
        }
    }
}

/// `F = (∇v + ∇vᵀ)/2` for a vector field vanishing on the circle of the given radius.
pub fn make_potential_tensor(v: VectorField, radius: f64) -> Result<Phantom> {
    let worst = (0..256)
        .map(|k| v.eval(Point::unit(2.0 * PI * k as f64 / 256.0) * radius).norm())
        .fold(0.0, f64::max);
    if worst > 1e-10 {
        return Err(Error::Precondition(format!(
            "vector field does not vanish on the boundary (max |v| = {worst:.3e})"
        )));
    }
    Ok(Phantom::new(vec![PhantomComponent::Potential { field: v }]))
}

/// Sum of analytic components.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Phantom {
    pub components: Vec<PhantomComponent>,
}

impl Phantom {
    pub fn new(components: Vec<PhantomComponent>) -> Self {
        Phantom { components }
    }

    pub fn zero() -> Self {
        Phantom::default()
    }

    pub fn gaussian_isotropic(sigma: f64, center: Point, amplitude: f64) -> Self {
        Phantom::new(vec![PhantomComponent::GaussianIsotropic { sigma, center, amplitude }])
    }

    pub fn bump_tensor(center: Point, rho: f64, f11: f64, f12: f64, f22: f64) -> Self {
        Phantom::new(vec![PhantomComponent::Bump { center, rho, f11, f12, f22 }])
    }

    /// Anisotropic test phantom made of two overlapping bumps, compactly
    /// supported in the disk of radius `0.75·radius`.
    pub fn standard_bumps(radius: f64) -> Self {
        Phantom::new(vec![
            PhantomComponent::Bump {
                center: Point::new(0.15 * radius, -0.1 * radius),
                rho: 0.55 * radius,
                f11: 1.0,
                f12: 0.4,
                f22: 0.6,
            },
            PhantomComponent::Bump {
                center: Point::new(-0.25 * radius, 0.3 * radius),
                rho: 0.35 * radius,
                f11: -0.3,
                f12: 0.5,
                f22: 0.8,
            },
        ])
    }

    pub fn with(mut self, c: PhantomComponent) -> Self {
        self.components.push(c);
        self
    }

    /// Distance from the circle of the given radius to the support, when compact.
    pub fn support_margin(&self, radius: f64) -> Option<f64> {
        self.components
            .iter()
            .map(|c| c.support_radius())
            .try_fold(0.0f64, |acc, r| r.map(|r| acc.max(r)))
            .map(|r| radius - r)
    }
}

impl TensorField for Phantom {
    fn eval(&self, x: Point) -> Sym2 {
        self.components.iter().fold(Sym2::ZERO, |acc, c| acc.add(&c.eval(x)))
    }
}

/// Tensor sampled on a Cartesian grid.
///
/// Inside `safe_radius` values come from bilinear interpolation; beyond it
/// they are extrapolated linearly along the radius from the two rings at
/// `safe_radius` and `safe_radius − Δ`, and set to zero outside `radius`.
#[derive(Debug, Clone, PartialEq)]
pub struct GriddedTensor {
    grid: CartesianGrid,
    values: Vec<Sym2>,
    valid: Vec<bool>,
    radius: f64,
    safe_radius: f64,
}

impl GriddedTensor {
    pub fn new(grid: CartesianGrid, values: Vec<Sym2>, valid: Vec<bool>, radius: f64) -> Result<Self> {
        if values.len() != grid.len() || valid.len() != grid.len() {
            return Err(Error::Shape(format!(
                "grid has {} nodes, got {} values / {} mask entries",
                grid.len(),
                values.len(),
                valid.len()
            )));
        }
        // largest r such that every cell meeting the disk of radius r has valid corners
        let h = grid.spacing();
        let mut safe = radius;
        for idx in 0..grid.len() {
            if !valid[idx] {
                let r = grid.node(idx).norm() - std::f64::consts::SQRT_2 * h;
                safe = safe.min(r);
            }
        }
        let safe_radius = safe.max(0.0);
        Ok(GriddedTensor { grid, values, valid, radius, safe_radius })
    }

    /// Assemble from `f0` and `f2` fields: `f11 = f0 + 2Re f2`, `f12 = 2Im f2`, `f22 = f0 − 2Re f2`.
    pub fn assemble(f0: &GridField, f2: &GridField, radius: f64) -> Result<Self> {
        if f0.grid != f2.grid {
            return Err(Error::Shape("f0 and f2 live on different grids".into()));
        }
        let values = f0
            .values
            .iter()
            .zip(&f2.values)
            .map(|(a, b)| Sym2::from_f0_f2(a.re, *b))
            .collect();
        let valid = f0.valid.iter().zip(&f2.valid).map(|(a, b)| *a && *b).collect();
        GriddedTensor::new(f0.grid, values, valid, radius)
    }

    pub fn grid(&self) -> &CartesianGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Sym2] {
        &self.values
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    pub fn safe_radius(&self) -> f64 {
        self.safe_radius
    }

    fn bilinear(&self, x: Point) -> Sym2 {
        let Some((ix, iy, fx, fy)) = self.grid.locate(x) else { return Sym2::ZERO };
        let g = &self.grid;
        let w = [
            (g.index(ix, iy), (1.0 - fx) * (1.0 - fy)),
            (g.index(ix + 1, iy), fx * (1.0 - fy)),
            (g.index(ix, iy + 1), (1.0 - fx) * fy),
            (g.index(ix + 1, iy + 1), fx * fy),
        ];
        w.iter().fold(Sym2::ZERO, |acc, &(k, wt)| {
            if self.valid[k] {
                acc.add(&self.values[k].scale(wt))
            } else {
                acc
            }
        })
    }
}

impl TensorField for GriddedTensor {
    fn eval(&self, x: Point) -> Sym2 {
        let r = x.norm();
        if r > self.radius * (1.0 + 1e-12) {
            return Sym2::ZERO;
        }
        if r <= self.safe_radius {
            return self.bilinear(x);
        }
        let dir = x * (1.0 / r);
        let r1 = self.safe_radius;
        let r0 = (r1 - self.grid.spacing()).max(0.0);
        let f1 = self.bilinear(dir * r1);
        let f0 = self.bilinear(dir * r0);
        let t = (r - r1) / (r1 - r0);
        f1.add(&f1.add(&f0.scale(-1.0)).scale(t))
    }
}

/// Attenuation profile on the closed disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttenuationProfile {
    Constant { a0: f64 },
    /// `base + amplitude·exp(−|x−c|²/σ²)`.
    Gaussian { base: f64, amplitude: f64, sigma: f64, center: Point },
}

/// Attenuation `a` on the disk together with its compactly supported
/// extension `ã = a·χ(|x|)`, where `χ` is a C² cutoff equal to one on the
/// disk and zero beyond `radius + cutoff_width`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attenuation {
    pub profile: AttenuationProfile,
    pub radius: f64,
    pub cutoff_width: f64,
}

/// C² smoothstep `1 − (10t³ − 15t⁴ + 6t⁵)` on `[0, 1]`.
fn cutoff(t: f64) -> f64 {
    if t <= 0.0 {
        1.0
    } else if t >= 1.0 {
        0.0
    } else {
        1.0 - t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
    }
}

impl Attenuation {
    pub fn new(profile: AttenuationProfile, radius: f64) -> Self {
        Attenuation { profile, radius, cutoff_width: 0.2 * radius }
    }

    pub fn constant_with_cutoff(a0: f64, radius: f64) -> Self {
        Attenuation::new(AttenuationProfile::Constant { a0 }, radius)
    }

    pub fn gaussian(base: f64, amplitude: f64, sigma: f64, center: Point, radius: f64) -> Self {
        Attenuation::new(AttenuationProfile::Gaussian { base, amplitude, sigma, center }, radius)
    }

    /// Default test attenuation: `0.2 + 0.8·exp(−|x − c|²/0.4²)`, minimum 0.2.
    pub fn standard_gaussian(radius: f64) -> Self {
        Attenuation::gaussian(0.2, 0.8, 0.4 * radius, Point::new(0.1 * radius, 0.05 * radius), radius)
    }

    /// `a(x)` (the profile itself, without cutoff).
    pub fn value(&self, x: Point) -> f64 {
        match self.profile {
            AttenuationProfile::Constant { a0 } => a0,
            AttenuationProfile::Gaussian { base, amplitude, sigma, center } => {
                base + amplitude * (-(x - center).norm_sqr() / (sigma * sigma)).exp()
            }
        }
    }

    /// `∇a(x)`.
    pub fn gradient(&self, x: Point) -> Point {
        match self.profile {
            AttenuationProfile::Constant { .. } => Point::ORIGIN,
            AttenuationProfile::Gaussian { amplitude, sigma, center, .. } => {
                let d = x - center;
                let s2 = sigma * sigma;
                let g = amplitude * (-d.norm_sqr() / s2).exp() * (-2.0 / s2);
                d * g
            }
        }
    }

    /// `∂̄a = (∂x a + i ∂y a)/2`.
    pub fn dbar(&self, x: Point) -> Complex64 {
        let g = self.gradient(x);
        Complex64::new(0.5 * g.x, 0.5 * g.y)
    }

    /// The extension `ã`.
    pub fn extended(&self, x: Point) -> f64 {
        let r = x.norm();
        if r <= self.radius {
            return self.value(x);
        }
        if self.cutoff_width <= 0.0 {
            return 0.0;
        }
        let chi = cutoff((r - self.radius) / self.cutoff_width);
        if chi == 0.0 {
            0.0
        } else {
            self.value(x) * chi
        }
    }

    /// Radius beyond which `ã` vanishes.
    pub fn support_radius(&self) -> f64 {
        self.radius + self.cutoff_width.max(0.0)
    }

    /// Minimum of `a` over the disk sampled on a polar mesh.
    pub fn min_on_disk(&self) -> f64 {
        let mut m = f64::INFINITY;
        for ir in 0..=64 {
            let r = self.radius * ir as f64 / 64.0;
            for ia in 0..128 {
                m = m.min(self.value(Point::unit(2.0 * PI * ia as f64 / 128.0) * r));
            }
        }
        m
    }

    /// Short tag recorded in data files.
    pub fn tag(&self) -> String {
        match self.profile {
            AttenuationProfile::Constant { a0 } => format!("constant:{a0}"),
            AttenuationProfile::Gaussian { base, amplitude, sigma, center } => {
                format!("gaussian:{base}:{amplitude}:{sigma}:{}:{}", center.x, center.y)
            }
        }
    }
}
