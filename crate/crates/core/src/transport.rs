//! Forward model: the (attenuated) X-ray transform by ray quadrature, the
//! transport solution inside the disk, and fan data on `Γ × S¹`.

use std::f64::consts::PI;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::{Attenuation, TensorField};
use crate::geometry::{Domain, Point, RayClass};
use crate::io::{self, Reader};

pub const DEFAULT_H_RAY: f64 = 1e-3;

/// Ray quadrature on a disk domain.
///
/// Integrals run backwards from the evaluation point to the inflow
/// boundary with composite Simpson on an even number of equal steps no
/// longer than `h_ray`. The attenuation exponent is a cumulative trapezoid
/// sum on the same nodes.
#[derive(Debug, Clone, Copy)]
pub struct RayIntegrator {
    pub domain: Domain,
    pub h_ray: f64,
}

impl RayIntegrator {
    pub fn new(domain: Domain, h_ray: f64) -> Result<Self> {
        if !(h_ray > 0.0) {
            return Err(Error::Config(format!("h_ray must be positive, got {h_ray}")));
        }
        Ok(RayIntegrator { domain, h_ray })
    }

    pub fn with_default_step(domain: Domain) -> Self {
        RayIntegrator { domain, h_ray: DEFAULT_H_RAY * domain.radius() }
    }

    fn integrate(&self, field: &dyn TensorField, a: Option<&Attenuation>, x: Point, theta: Point) -> Result<f64> {
        let tau = self.domain.exit_distance(x, -theta)?;
        if tau <= 0.0 {
            return Ok(0.0);
        }
        let mut n = (tau / self.h_ray).ceil() as usize;
        n = n.max(2);
        if n % 2 == 1 {
            n += 1;
        }
        let h = tau / n as f64;
        let src = |k: usize| field.eval(x + theta * (-tau + k as f64 * h)).quad_form(theta);
        let weight = |k: usize| -> f64 {
            if k == 0 || k == n {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            }
        };
        let total = match a {
            None => (0..=n).map(|k| weight(k) * src(k)).sum::<f64>(),
            Some(att) => {
                // walk from t = 0 back to t = −τ accumulating ∫_t^0 a
                let av = |k: usize| att.value(x + theta * (-tau + k as f64 * h));
                let mut acc = 0.0;
                let mut a_next = av(n);
                let mut sum = weight(n) * src(n);
                for k in (0..n).rev() {
                    let a_here = av(k);
                    acc += 0.5 * h * (a_here + a_next);
                    a_next = a_here;
                    sum += weight(k) * src(k) * (-acc).exp();
                }
                sum
            }
        };
        Ok(total * h / 3.0)
    }

    fn require_outflow(&self, x: Point, theta: Point) -> Result<()> {
        match self.domain.classify(x, theta)? {
            RayClass::Outflow => Ok(()),
            c => Err(Error::Precondition(format!(
                "ray at ({:.6}, {:.6}) with direction ({:.6}, {:.6}) is {c:?}, expected outflow",
                x.x, x.y, theta.x, theta.y
            ))),
        }
    }

    /// `∫_{−τ}^0 ⟨F(x+tθ)θ, θ⟩ dt` for an outflow boundary ray.
    pub fn xray(&self, field: &dyn TensorField, x: Point, theta: Point) -> Result<f64> {
        self.require_outflow(x, theta)?;
        self.integrate(field, None, x, theta)
    }

    /// Attenuated transform `∫_{−τ}^0 ⟨F(x+tθ)θ, θ⟩ e^{−∫_t^0 a(x+sθ)ds} dt`.
    pub fn att_xray(&self, field: &dyn TensorField, a: &Attenuation, x: Point, theta: Point) -> Result<f64> {
        self.require_outflow(x, theta)?;
        self.integrate(field, Some(a), x, theta)
    }

    /// Solution `u(x, θ)` of `θ·∇u + a u = ⟨Fθ, θ⟩` with zero inflow data.
    pub fn transport_solution(
        &self,
        field: &dyn TensorField,
        a: Option<&Attenuation>,
        x: Point,
        theta: Point,
    ) -> Result<f64> {
        self.integrate(field, a, x, theta)
    }

    /// Fan data on the `M × K` boundary/angle grid.
    pub fn make_fan(&self, field: &dyn TensorField, a: Option<&Attenuation>, k: usize) -> Result<FanData> {
        if k < 2 || k % 2 != 0 {
            return Err(Error::Config(format!("angle count K must be even, got {k}")));
        }
        let d = self.domain;
        let m = d.boundary_nodes();
        let rows: Vec<Result<Vec<f64>>> = (0..m)
            .into_par_iter()
            .map(|i| {
                let x = d.node(i);
                (0..k)
                    .map(|j| {
                        let theta = Point::unit(angle(j, k));
                        match d.classify(x, theta)? {
                            RayClass::Outflow => self.integrate(field, a, x, theta),
                            _ => Ok(0.0),
                        }
                    })
                    .collect()
            })
            .collect();
        let mut values = Vec::with_capacity(m * k);
        for r in rows {
            values.extend(r?);
        }
        Ok(FanData {
            m,
            k,
            radius: d.radius(),
            attenuation: a.map(|a| a.tag()),
            values,
        })
    }
}

/// Angle `φ_j = 2πj/K`.
pub fn angle(j: usize, k: usize) -> f64 {
    2.0 * PI * j as f64 / k as f64
}

/// Samples `g(ζ_i, θ_j)` on the boundary × direction grid, zero on `Γ− ∪ Γ0`.
#[derive(Debug, Clone, PartialEq)]
pub struct FanData {
    pub m: usize,
    pub k: usize,
    pub radius: f64,
    /// Tag of the attenuation used to produce the data, if any.
    pub attenuation: Option<String>,
    /// Row-major `(i, j)` values.
    pub values: Vec<f64>,
}

const BINARY_MAGIC: &[u8; 8] = b"TRFAN\0\0\0";
const BINARY_VERSION: u32 = 1;

impl FanData {
    pub fn zeros(domain: &Domain, k: usize) -> Self {
        let m = domain.boundary_nodes();
        FanData { m, k, radius: domain.radius(), attenuation: None, values: vec![0.0; m * k] }
    }

    pub fn from_fn(domain: &Domain, k: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let m = domain.boundary_nodes();
        let mut values = Vec::with_capacity(m * k);
        for i in 0..m {
            for j in 0..k {
                values.push(f(i, j));
            }
        }
        FanData { m, k, radius: domain.radius(), attenuation: None, values }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.k + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.k + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.k..(i + 1) * self.k]
    }

    pub fn domain(&self) -> Result<Domain> {
        Domain::new(self.radius, self.m)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `sup |self − other| / sup |other|` (absolute when `other` vanishes).
    pub fn sup_rel_diff(&self, other: &FanData) -> Result<f64> {
        self.check_same_grid(other)?;
        let diff = self.values.iter().zip(&other.values).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let scale = other.sup_norm();
        Ok(if scale > 0.0 { diff / scale } else { diff })
    }

    pub fn check_same_grid(&self, other: &FanData) -> Result<()> {
        if self.m != other.m || self.k != other.k || self.radius != other.radius {
            return Err(Error::Shape(format!(
                "fan grids differ: ({}, {}, r={}) vs ({}, {}, r={})",
                self.m, self.k, self.radius, other.m, other.k, other.radius
            )));
        }
        Ok(())
    }

    /// Entries on `Γ− ∪ Γ0` that are not zero.
    pub fn inflow_violations(&self) -> Result<usize> {
        let d = self.domain()?;
        let mut bad = 0;
        for i in 0..self.m {
            for j in 0..self.k {
                let c = d.classify(d.node(i), Point::unit(angle(j, self.k)))?;
                if c != RayClass::Outflow && self.get(i, j) != 0.0 {
                    bad += 1;
                }
            }
        }
        Ok(bad)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(self.values.len() * 64);
        s.push_str("# tensoray fan data v1\n");
        s.push_str("M,K,radius,attenuation\n");
        s.push_str(&format!(
            "{},{},{},{}\n",
            self.m,
            self.k,
            io::fmt_f64(self.radius),
            self.attenuation.as_deref().unwrap_or("none")
        ));
        s.push_str("i,j,s,phi,value\n");
        for i in 0..self.m {
            let si = 2.0 * PI * i as f64 / self.m as f64;
            for j in 0..self.k {
                s.push_str(&format!(
                    "{i},{j},{},{},{}\n",
                    io::fmt_f64(si),
                    io::fmt_f64(angle(j, self.k)),
                    io::fmt_f64(self.get(i, j))
                ));
            }
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(n, l)| (n + 1, l)).filter(|(_, l)| !l.starts_with('#'));
        let mut next = |what: &str| {
            lines.next().ok_or_else(|| Error::Parse { line: 0, msg: format!("missing {what}") })
        };
        let (ln, hdr) = next("metadata header")?;
        if hdr.trim() != "M,K,radius,attenuation" {
            return Err(Error::Parse { line: ln, msg: format!("unexpected header {hdr:?}") });
        }
        let (ln, meta) = next("metadata row")?;
        let f: Vec<&str> = meta.splitn(4, ',').collect();
        if f.len() != 4 {
            return Err(Error::Parse { line: ln, msg: "metadata row needs 4 fields".into() });
        }
        let m = io::parse_usize(f[0], ln)?;
        let k = io::parse_usize(f[1], ln)?;
        let radius = io::parse_f64(f[2], ln)?;
        let attenuation = match f[3].trim() {
            "none" => None,
            t => Some(t.to_string()),
        };
        let (ln, cols) = next("column header")?;
        if cols.trim() != "i,j,s,phi,value" {
            return Err(Error::Parse { line: ln, msg: format!("unexpected column header {cols:?}") });
        }
        let mut values = vec![f64::NAN; m * k];
        let mut seen = 0usize;
        for (ln, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(Error::Parse { line: ln, msg: format!("expected 5 fields, got {}", f.len()) });
            }
            let i = io::parse_usize(f[0], ln)?;
            let j = io::parse_usize(f[1], ln)?;
            if i >= m || j >= k {
                return Err(Error::Parse { line: ln, msg: format!("index ({i}, {j}) out of range") });
            }
            let v = io::parse_f64(f[4], ln)?;
            if !v.is_finite() {
                return Err(Error::Parse { line: ln, msg: "non-finite value".into() });
            }
            values[i * k + j] = v;
            seen += 1;
        }
        if seen != m * k || values.iter().any(|v| v.is_nan()) {
            return Err(Error::Parse { line: 0, msg: format!("expected {} samples, got {seen}", m * k) });
        }
        Ok(FanData { m, k, radius, attenuation, values })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let tag = self.attenuation.as_deref().unwrap_or("").as_bytes();
        let mut out = Vec::with_capacity(48 + tag.len() + 8 * self.values.len());
        out.extend_from_slice(BINARY_MAGIC);
        out.extend_from_slice(&BINARY_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.m as u64).to_le_bytes());
        out.extend_from_slice(&(self.k as u64).to_le_bytes());
        out.extend_from_slice(&self.radius.to_le_bytes());
        out.push(self.attenuation.is_some() as u8);
        out.extend_from_slice(&(tag.len() as u32).to_le_bytes());
        out.extend_from_slice(tag);
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = Reader::new(buf);
        if r.take(8)? != BINARY_MAGIC {
            return Err(Error::Parse { line: 0, msg: "not a tensoray fan file".into() });
        }
        let version = r.u32()?;
        if version != BINARY_VERSION {
            return Err(Error::Parse { line: 0, msg: format!("unsupported fan format version {version}") });
        }
        let m = r.u64()? as usize;
        let k = r.u64()? as usize;
        let radius = r.f64()?;
        let has_tag = r.take(1)?[0] != 0;
        let tag_len = r.u32()? as usize;
        let tag = String::from_utf8(r.take(tag_len)?.to_vec())
            .map_err(|_| Error::Parse { line: 0, msg: "attenuation tag is not UTF-8".into() })?;
        let mut values = Vec::with_capacity(m * k);
        for _ in 0..m * k {
            values.push(r.f64()?);
        }
        r.finish()?;
        Ok(FanData { m, k, radius, attenuation: has_tag.then_some(tag), values })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        io::write_atomic(path, self.to_csv().as_bytes())
    }

    pub fn write_binary(&self, path: &Path) -> Result<()> {
        io::write_atomic(path, &self.to_bytes())
    }

    /// Read either format, chosen by file content.
    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        if bytes.starts_with(BINARY_MAGIC) {
            FanData::from_bytes(&bytes)
        } else {
            let text = String::from_utf8(bytes)
                .map_err(|_| Error::Parse { line: 0, msg: "fan file is neither binary nor UTF-8".into() })?;
            FanData::from_csv(&text)
        }
    }
}
