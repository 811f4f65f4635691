//! Integrating factor for the attenuated problem.
//!
//! `h(z, θ) = Da(z, θ) − ½(I − iH)Ra(z·θ^⊥, θ)` with `θ^⊥ = (−sin φ, cos φ)`,
//! `Da` the divergent beam transform and `Ra` the Radon transform of the
//! extended attenuation, and `H f(s) = (1/π) PV∫ f(t)/(s − t) dt`. Then
//! `θ·∇h = −a`, and `e^{∓h}` have no negative angular modes; their
//! nonnegative modes are `α_k` and `β_k`.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aanalytic::SequenceField;
use crate::error::{Error, Result};
use crate::fields::Attenuation;
use crate::geometry::{Domain, Point};
use crate::grid::{CartesianGrid, GridField};
use crate::io::{self, Reader};
use crate::spectral;
use crate::transport::angle;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub const DEFAULT_PADDING: usize = 4;
pub const DEFAULT_BEAM_STEP: f64 = 0.01;
pub const DISCARDED_MASS_LIMIT: f64 = 1e-4;
/// The mode fields extend this many grid steps past the disk so that
/// difference stencils reach the boundary.
pub const PACK_MASK_STEPS: f64 = 3.0;

/// `θ^⊥ = (−sin φ, cos φ)`.
pub fn perp(theta: Point) -> Point {
    theta.perp()
}

/// Composite Simpson on `[a, b]` with steps no longer than `h`.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, h: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mut n = ((b - a) / h).ceil() as usize;
    n = n.max(2);
    n += n % 2;
    let step = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for k in 1..n {
        sum += f(a + k as f64 * step) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * step / 3.0
}

/// Parameters `t` where `|x + tθ| = r`, if the line meets the circle.
fn circle_hits(x: Point, theta: Point, r: f64) -> Option<(f64, f64)> {
    let b = x.dot(theta);
    let c = x.norm_sqr() - r * r;
    let disc = b * b - c;
    if disc <= 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    Some((-b - sq, -b + sq))
}

/// `∫_{t0}^{t1} ã(x + tθ) dt`, split where the extension is not smooth.
fn line_integral(a: &Attenuation, x: Point, theta: Point, t0: f64, t1: f64, h: f64) -> f64 {
    let mut cuts = vec![t0, t1];
    for r in [a.radius, a.support_radius()] {
        if let Some((p, q)) = circle_hits(x, theta, r) {
            for t in [p, q] {
                if t > t0 && t < t1 {
                    cuts.push(t);
                }
            }
        }
    }
    cuts.sort_by(|p, q| p.partial_cmp(q).unwrap());
    cuts.windows(2).map(|w| simpson(|t| a.extended(x + theta * t), w[0], w[1], h)).sum()
}

/// Divergent beam transform `Da(z, θ) = ∫_0^∞ ã(z + tθ) dt`.
pub fn beam_transform(a: &Attenuation, z: Point, theta: Point, h: f64) -> f64 {
    match circle_hits(z, theta, a.support_radius()) {
        Some((_, t_exit)) if t_exit > 0.0 => line_integral(a, z, theta, 0.0, t_exit, h),
        _ => 0.0,
    }
}

/// Radon transform `Ra(s, θ) = ∫ ã(sθ^⊥ + tθ) dt`.
pub fn radon(a: &Attenuation, s: f64, theta: Point, h: f64) -> f64 {
    let x = perp(theta) * s;
    match circle_hits(x, theta, a.support_radius()) {
        Some((t0, t1)) => line_integral(a, x, theta, t0, t1, h),
        None => 0.0,
    }
}

/// Classical Hilbert transform `(1/π) PV∫ f(t)/(s − t) dt` of samples on a
/// uniform grid of spacing `ds`, the function vanishing outside the window.
///
/// The periodic transform of the zero-padded samples is taken with the
/// multiplier `−i·sgn(ξ)`; the difference between the line kernel `1/x` and
/// its periodization `(π/P) cot(πx/P)` is smooth on the window and is added
/// back by the trapezoid rule.
pub fn classical_hilbert(samples: &[f64], ds: f64, padding: usize) -> Result<Vec<f64>> {
    let n = samples.len();
    if padding < DEFAULT_PADDING {
        return Err(Error::Config(format!("Hilbert padding must be at least {DEFAULT_PADDING}x, got {padding}x")));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let len = n * padding;
    let mut buf = vec![ZERO; len];
    for (i, v) in samples.iter().enumerate() {
        buf[i] = Complex64::new(*v, 0.0);
    }
    let mut c = spectral::analyze(&buf);
    for (k, v) in c.iter_mut().enumerate() {
        let f = spectral::signed_freq(k, len);
        *v *= if f == 0 || (len % 2 == 0 && f == (len / 2) as i64) {
            ZERO
        } else {
            Complex64::new(0.0, -(f.signum() as f64))
        };
    }
    let periodic = spectral::synthesize(&c);
    let period = len as f64 * ds;
    let kernel: Vec<f64> = (0..n)
        .map(|d| {
            if d == 0 {
                0.0
            } else {
                let x = d as f64 * ds;
                1.0 / x - (PI / period) / (PI * x / period).tan()
            }
        })
        .collect();
    Ok((0..n)
        .map(|i| {
            let corr: f64 = (0..n)
                .map(|j| {
                    let k = if i >= j { kernel[i - j] } else { -kernel[j - i] };
                    samples[j] * k
                })
                .sum();
            periodic[i].re + corr * ds / PI
        })
        .collect())
}

/// Four-point Lagrange interpolation on a uniform table starting at `s0`.
fn cubic(table: &[f64], s0: f64, ds: f64, s: f64) -> f64 {
    let x = (s - s0) / ds;
    let n = table.len();
    let i = (x.floor() as isize).clamp(1, n as isize - 3) as usize;
    let t = x - i as f64;
    let (p0, p1, p2, p3) = (table[i - 1], table[i], table[i + 1], table[i + 2]);
    let w0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
    let w1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
    let w2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
    let w3 = (t + 1.0) * t * (t - 1.0) / 6.0;
    p0 * w0 + p1 * w1 + p2 * w2 + p3 * w3
}

/// Discretization parameters of an [`AttenuationPack`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PackParams {
    /// Angle count `K`.
    pub angles: usize,
    /// Highest kept mode `N` of `α`, `β`.
    pub modes: usize,
    /// Spacing of the Radon `s`-grid.
    pub ds: f64,
    pub padding: usize,
    /// Simpson step for beam and Radon integrals.
    pub beam_step: f64,
}

impl PackParams {
    pub fn new(radius: f64, angles: usize, modes: usize) -> Self {
        PackParams { angles, modes, ds: radius / 256.0, padding: DEFAULT_PADDING, beam_step: DEFAULT_BEAM_STEP * radius }
    }
}

/// Attenuation with its integrating factor and the modes of `e^{∓h}`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttenuationPack {
    pub attenuation: Attenuation,
    pub params: PackParams,
    /// Boundary nodes `M` for the boundary table of `h`.
    pub m: usize,
    s_half: usize,
    /// `Ra` per angle on `s_i = (i − s_half)·ds`.
    ra: Vec<Vec<f64>>,
    hra: Vec<Vec<f64>>,
    /// `h(ζ_i, θ_j)` row-major.
    boundary_h: Vec<Complex64>,
    pub grid: CartesianGrid,
    pub grid_valid: Vec<bool>,
    /// `alpha[k][node]`, `k = 0..=N`
    alpha: Vec<Vec<Complex64>>,
    beta: Vec<Vec<Complex64>>,
    pub diagnostics: PackDiagnostics,
}

/// Mode mass that the truncation `0 ≤ k ≤ N` drops, over nodes in the disk.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PackDiagnostics {
    /// `max_z max_{k≥1} |mode_{−k}(e^{−h})|`
    pub neg_modes_minus: f64,
    /// `max_z max_{k≥1} |mode_{−k}(e^{+h})|`
    pub neg_modes_plus: f64,
    /// `max_z Σ_{k<0 or k>N} |mode_k|` over both factors
    pub discarded_mass: f64,
}

/// Modes of `e^{−h}` and `e^{h}` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointModes {
    pub alpha: Vec<Complex64>,
    pub beta: Vec<Complex64>,
    pub neg_minus: f64,
    pub neg_plus: f64,
    pub discarded: f64,
}

impl AttenuationPack {
    /// Build the Radon/Hilbert tables, the boundary table of `h` for `domain`,
    /// and `α`, `β` on the nodes of `grid` inside the disk.
    pub fn build(a: &Attenuation, domain: &Domain, grid: CartesianGrid, params: PackParams) -> Result<Self> {
        if params.angles < 2 * params.modes + 2 || params.angles % 2 != 0 {
            return Err(Error::Config(format!(
                "angle count {} must be even and at least 2N + 2 = {}",
                params.angles,
                2 * params.modes + 2
            )));
        }
        if !(params.ds > 0.0 && params.beam_step > 0.0) {
            return Err(Error::Config("pack steps must be positive".into()));
        }
        let support = a.support_radius();
        let s_half = (support / params.ds).ceil() as usize + 2;
        let k = params.angles;
        let tables: Vec<Result<(Vec<f64>, Vec<f64>)>> = (0..k)
            .into_par_iter()
            .map(|j| {
                let theta = Point::unit(angle(j, k));
                let ra: Vec<f64> = (0..=2 * s_half)
                    .map(|i| radon(a, (i as f64 - s_half as f64) * params.ds, theta, params.beam_step))
                    .collect();
                let hra = classical_hilbert(&ra, params.ds, params.padding)?;
                Ok((ra, hra))
            })
            .collect();
        let mut ra = Vec::with_capacity(k);
        let mut hra = Vec::with_capacity(k);
        for t in tables {
            let (r, h) = t?;
            ra.push(r);
            hra.push(h);
        }
        let mut pack = AttenuationPack {
            attenuation: a.clone(),
            params,
            m: domain.boundary_nodes(),
            s_half,
            ra,
            hra,
            boundary_h: Vec::new(),
            grid,
            grid_valid: grid.disk_mask(a.radius + PACK_MASK_STEPS * grid.spacing()),
            alpha: Vec::new(),
            beta: Vec::new(),
            diagnostics: PackDiagnostics::default(),
        };
        let m = pack.m;
        let rows: Vec<Vec<Complex64>> = (0..m)
            .into_par_iter()
            .map(|i| {
                let z = domain.node(i);
                (0..k).map(|j| pack.h(z, j)).collect()
            })
            .collect();
        pack.boundary_h = rows.into_iter().flatten().collect();

        let modes: Vec<Option<PointModes>> = (0..grid.len())
            .into_par_iter()
            .map(|idx| pack.grid_valid[idx].then(|| pack.modes_at(grid.node(idx))))
            .collect();
        let n = params.modes;
        let mut alpha = vec![vec![ZERO; grid.len()]; n + 1];
        let mut beta = vec![vec![ZERO; grid.len()]; n + 1];
        let mut diag = PackDiagnostics::default();
        for (idx, pm) in modes.iter().enumerate() {
            let Some(pm) = pm else { continue };
            for q in 0..=n {
                alpha[q][idx] = pm.alpha[q];
                beta[q][idx] = pm.beta[q];
            }
            if grid.node(idx).norm() > a.radius {
                continue;
            }
            diag.neg_modes_minus = diag.neg_modes_minus.max(pm.neg_minus);
            diag.neg_modes_plus = diag.neg_modes_plus.max(pm.neg_plus);
            diag.discarded_mass = diag.discarded_mass.max(pm.discarded);
        }
        pack.alpha = alpha;
        pack.beta = beta;
        pack.diagnostics = diag;
        if diag.discarded_mass > DISCARDED_MASS_LIMIT {
            return Err(Error::Config(format!(
                "attenuation under-resolved: modes outside 0..={n} carry mass {:.3e} > {DISCARDED_MASS_LIMIT:e}",
                diag.discarded_mass
            )));
        }
        Ok(pack)
    }

    pub fn angles(&self) -> usize {
        self.params.angles
    }

    pub fn modes(&self) -> usize {
        self.params.modes
    }

    fn s0(&self) -> f64 {
        -(self.s_half as f64) * self.params.ds
    }

    /// `Ra(s, θ_j)` from the table.
    pub fn radon_table(&self, j: usize, s: f64) -> f64 {
        cubic(&self.ra[j], self.s0(), self.params.ds, s)
    }

    /// `(H Ra)(s, θ_j)` from the table.
    pub fn hilbert_radon_table(&self, j: usize, s: f64) -> f64 {
        cubic(&self.hra[j], self.s0(), self.params.ds, s)
    }

    /// `h(z, θ_j)`; `Da` by direct quadrature, the Radon part from the tables.
    pub fn h(&self, z: Point, j: usize) -> Complex64 {
        let theta = Point::unit(angle(j, self.params.angles));
        let p = z.dot(perp(theta));
        let da = beam_transform(&self.attenuation, z, theta, self.params.beam_step);
        Complex64::new(da - 0.5 * self.radon_table(j, p), 0.5 * self.hilbert_radon_table(j, p))
    }

    /// `e^{−h(ζ_i, θ_j)}` on the boundary grid, row-major.
    pub fn boundary_weight(&self) -> Vec<Complex64> {
        self.boundary_h.iter().map(|h| (-h).exp()).collect()
    }

    pub fn boundary_h(&self, i: usize, j: usize) -> Complex64 {
        self.boundary_h[i * self.params.angles + j]
    }

    /// Modes of `e^{∓h(z, ·)}` at an arbitrary point of the closed disk.
    pub fn modes_at(&self, z: Point) -> PointModes {
        let k = self.params.angles;
        let n = self.params.modes;
        let hs: Vec<Complex64> = (0..k).map(|j| self.h(z, j)).collect();
        let em: Vec<Complex64> = hs.iter().map(|h| (-h).exp()).collect();
        let ep: Vec<Complex64> = hs.iter().map(|h| h.exp()).collect();
        let cm = spectral::analyze(&em);
        let cp = spectral::analyze(&ep);
        let mut neg_minus = 0.0f64;
        let mut neg_plus = 0.0f64;
        let mut discarded = 0.0f64;
        let mut disc_p = 0.0f64;
        for q in 0..k {
            let f = spectral::signed_freq(q, k);
            if f < 0 {
                neg_minus = neg_minus.max(cm[q].norm());
                neg_plus = neg_plus.max(cp[q].norm());
            }
            if f < 0 || f > n as i64 {
                discarded += cm[q].norm();
                disc_p += cp[q].norm();
            }
        }
        PointModes {
            alpha: cm[..=n].to_vec(),
            beta: cp[..=n].to_vec(),
            neg_minus,
            neg_plus,
            discarded: discarded.max(disc_p),
        }
    }

    /// `α_q` on the grid.
    pub fn alpha(&self, q: usize) -> GridField {
        GridField { grid: self.grid, values: self.alpha[q].clone(), valid: self.grid_valid.clone() }
    }

    /// `β_q` on the grid.
    pub fn beta(&self, q: usize) -> GridField {
        GridField { grid: self.grid, values: self.beta[q].clone(), valid: self.grid_valid.clone() }
    }

    pub fn alpha_values(&self) -> &[Vec<Complex64>] {
        &self.alpha
    }

    pub fn beta_values(&self) -> &[Vec<Complex64>] {
        &self.beta
    }

    fn check_grid(&self, sf: &SequenceField) -> Result<()> {
        if sf.grid != self.grid {
            return Err(Error::Shape("sequence field and attenuation pack use different grids".into()));
        }
        Ok(())
    }

    /// Versioned little-endian artifact.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        out.extend_from_slice(PACK_MAGIC);
        out.extend_from_slice(&PACK_VERSION.to_le_bytes());
        let meta = serde_json::to_vec(&(&self.attenuation, &self.params, &self.grid, &self.diagnostics))?;
        put_u64(&mut out, meta.len() as u64);
        out.extend_from_slice(&meta);
        put_u64(&mut out, self.m as u64);
        put_u64(&mut out, self.s_half as u64);
        for t in self.ra.iter().chain(&self.hra) {
            for v in t {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        put_complex(&mut out, &self.boundary_h);
        for v in &self.grid_valid {
            out.push(*v as u8);
        }
        for f in self.alpha.iter().chain(&self.beta) {
            put_complex(&mut out, f);
        }
        Ok(out)
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = Reader::new(buf);
        if r.take(8)? != PACK_MAGIC {
            return Err(Error::Parse { line: 0, msg: "not a tensoray attenuation pack".into() });
        }
        let version = r.u32()?;
        if version != PACK_VERSION {
            return Err(Error::Parse { line: 0, msg: format!("unsupported pack version {version}") });
        }
        let meta_len = r.u64()? as usize;
        let (attenuation, params, grid, diagnostics): (Attenuation, PackParams, CartesianGrid, PackDiagnostics) =
            serde_json::from_slice(r.take(meta_len)?)?;
        let m = r.u64()? as usize;
        let s_half = r.u64()? as usize;
        let ns = 2 * s_half + 1;
        let mut tables = Vec::with_capacity(2 * params.angles);
        for _ in 0..2 * params.angles {
            let mut t = Vec::with_capacity(ns);
            for _ in 0..ns {
                t.push(r.f64()?);
            }
            tables.push(t);
        }
        let hra = tables.split_off(params.angles);
        let ra = tables;
        let boundary_h = get_complex(&mut r, m * params.angles)?;
        let grid_valid = r.take(grid.len())?.iter().map(|&b| b != 0).collect();
        let mut fields = Vec::with_capacity(2 * (params.modes + 1));
        for _ in 0..2 * (params.modes + 1) {
            fields.push(get_complex(&mut r, grid.len())?);
        }
        let beta = fields.split_off(params.modes + 1);
        let alpha = fields;
        r.finish()?;
        Ok(AttenuationPack {
            attenuation,
            params,
            m,
            s_half,
            ra,
            hra,
            boundary_h,
            grid,
            grid_valid,
            alpha,
            beta,
            diagnostics,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        io::write_atomic(path, &self.to_bytes()?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        AttenuationPack::from_bytes(&std::fs::read(path)?)
    }
}

const PACK_MAGIC: &[u8; 8] = b"TRPACK\0\0";
const PACK_VERSION: u32 = 1;

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_complex(out: &mut Vec<u8>, vals: &[Complex64]) {
    for v in vals {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
}

fn get_complex(r: &mut Reader, n: usize) -> Result<Vec<Complex64>> {
    (0..n).map(|_| Ok(Complex64::new(r.f64()?, r.f64()?))).collect()
}

/// `Σ_{j=0}^{len−1−k} w_j(z) s_{k+j}(z)` per component: the convolution
/// shared by both directions of the `u ↔ v` map.
fn convolve(sf: &SequenceField, weights: &[Vec<Complex64>]) -> (SequenceField, f64) {
    let l = sf.len();
    let mut out = sf.clone();
    let mut loss = 0.0f64;
    for idx in 0..sf.grid.len() {
        if !sf.valid[idx] {
            continue;
        }
        for k in 0..l {
            let mut acc = ZERO;
            for j in 0..(l - k).min(weights.len()) {
                acc += weights[j][idx] * sf.comps[k + j][idx];
            }
            out.comps[k][idx] = acc;
        }
        if l > 0 && weights.len() >= l {
            loss = loss.max((weights[l - 1][idx] * sf.comps[l - 1][idx]).norm());
        }
    }
    (out, loss)
}

/// `u_n = Σ_{j≥0} β_j v_{n−j}` componentwise; also returns the magnitude of
/// the last term kept for the leading component.
pub fn u_from_v(v: &SequenceField, pack: &AttenuationPack) -> Result<(SequenceField, f64)> {
    pack.check_grid(v)?;
    Ok(convolve(v, &pack.beta))
}

/// `v_n = Σ_{j≥0} α_j u_{n−j}`.
pub fn v_from_u(u: &SequenceField, pack: &AttenuationPack) -> Result<(SequenceField, f64)> {
    pack.check_grid(u)?;
    Ok(convolve(u, &pack.alpha))
}

/// Identity residuals of a pack, evaluated on its grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    /// `sup |θ·∇h + a|` by central differences along rays at sample points
    pub transport: f64,
    /// `max |mode_{−k}(e^{−h})|`, `k ≥ 1`
    pub negative_modes: f64,
    /// `max |Σ_{m≤k} α_m β_{k−m} − δ_k|`
    pub convolution: f64,
    /// `max |α_0 β_0 − 1|`
    pub alpha0_beta0: f64,
    /// `max |∂̄α_0|`
    pub alpha0_holomorphic: f64,
    /// `max |∂̄α_1 − a α_0|`
    pub alpha1: f64,
    /// `max |∂̄α_{k+2} + ∂α_k − a α_{k+1}|`
    pub alpha_recursion: f64,
    /// `max |∂̄β_{k+2} + ∂β_k + a β_{k+1}|`
    pub beta_recursion: f64,
    /// `max |e^{−h} e^{h} − 1|`
    pub exp_product: f64,
    pub discarded_mass: f64,
}

/// Check the integrating-factor identities on nodes with `|z| ≤ r_test`.
pub fn verify_identities(pack: &AttenuationPack, r_test: f64, samples: usize) -> IdentityReport {
    let a = &pack.attenuation;
    let g = pack.grid;
    let k = pack.angles();
    let n = pack.modes();

    // transport identity along rays at scattered points
    let eps = 1e-3 * a.radius;
    let mut transport = 0.0f64;
    let mut exp_product = 0.0f64;
    for s in 0..samples {
        let t = s as f64 + 0.5;
        let r = r_test * (t / samples as f64).sqrt();
        let z = Point::unit(2.399963 * t) * r;
        let j = (s * 37) % k;
        let theta = Point::unit(angle(j, k));
        let dh = (pack.h(z + theta * eps, j) - pack.h(z - theta * eps, j)) / (2.0 * eps);
        transport = transport.max((dh + a.value(z)).norm());
        let h = pack.h(z, j);
        exp_product = exp_product.max(((-h).exp() * h.exp() - 1.0).norm());
    }

    let test: Vec<bool> = (0..g.len()).map(|i| pack.grid_valid[i] && g.node(i).norm() <= r_test).collect();
    let alpha: Vec<GridField> = (0..=n).map(|q| pack.alpha(q)).collect();
    let beta: Vec<GridField> = (0..=n).map(|q| pack.beta(q)).collect();
    let da: Vec<(GridField, GridField)> = alpha.iter().map(|f| f.cauchy_riemann4()).collect();
    let db: Vec<(GridField, GridField)> = beta.iter().map(|f| f.cauchy_riemann4()).collect();

    let mut convolution = 0.0f64;
    let mut alpha0_beta0 = 0.0f64;
    let mut alpha0_holomorphic = 0.0f64;
    let mut alpha1 = 0.0f64;
    let mut alpha_recursion = 0.0f64;
    let mut beta_recursion = 0.0f64;
    for idx in 0..g.len() {
        if !test[idx] {
            continue;
        }
        for q in 0..=n {
            let c: Complex64 = (0..=q).map(|m| alpha[m].values[idx] * beta[q - m].values[idx]).sum();
            let target = if q == 0 { 1.0 } else { 0.0 };
            convolution = convolution.max((c - target).norm());
        }
        alpha0_beta0 = alpha0_beta0.max((alpha[0].values[idx] * beta[0].values[idx] - 1.0).norm());
        if !da[0].1.valid[idx] {
            continue;
        }
        let av = a.value(g.node(idx));
        alpha0_holomorphic = alpha0_holomorphic.max(da[0].1.values[idx].norm());
        alpha1 = alpha1.max((da[1].1.values[idx] - alpha[0].values[idx] * av).norm());
        for q in 0..n.saturating_sub(1) {
            let ra = da[q + 2].1.values[idx] + da[q].0.values[idx] - alpha[q + 1].values[idx] * av;
            let rb = db[q + 2].1.values[idx] + db[q].0.values[idx] + beta[q + 1].values[idx] * av;
            alpha_recursion = alpha_recursion.max(ra.norm());
            beta_recursion = beta_recursion.max(rb.norm());
        }
    }
    IdentityReport {
        transport,
        negative_modes: pack.diagnostics.neg_modes_minus,
        convolution,
        alpha0_beta0,
        alpha0_holomorphic,
        alpha1,
        alpha_recursion,
        beta_recursion,
        exp_product,
        discarded_mass: pack.diagnostics.discarded_mass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::AttenuationProfile;

    fn narrow_gaussian(sigma: f64) -> Attenuation {
        Attenuation::new(AttenuationProfile::Gaussian { base: 0.0, amplitude: 1.0, sigma, center: Point::ORIGIN }, 1.0)
    }

    #[test]
    fn zero_attenuation_gives_zero_transforms() {
        let a = Attenuation::constant_with_cutoff(0.0, 1.0);
        assert_eq!(beam_transform(&a, Point::new(0.2, 0.1), Point::unit(0.3), 0.01), 0.0);
        assert_eq!(radon(&a, 0.4, Point::unit(1.3), 0.01), 0.0);
        assert!(classical_hilbert(&[0.0; 32], 0.1, 4).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn gaussian_beam_and_radon_closed_forms() {
        let sigma: f64 = 0.15;
        let a = narrow_gaussian(sigma);
        let half = sigma * PI.sqrt() / 2.0;
        for phi in [0.0, 0.7, 2.0] {
            let th = Point::unit(phi);
            assert!((beam_transform(&a, Point::ORIGIN, th, 0.005) - half).abs() < 1e-9);
            for s in [0.0, 0.1, -0.25] {
                let exact = sigma * PI.sqrt() * (-s * s / (sigma * sigma)).exp();
                assert!((radon(&a, s, th, 0.005) - exact).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn beam_pair_sums_to_radon() {
        let a = Attenuation::standard_gaussian(1.0);
        for (z, phi) in [(Point::new(0.3, -0.2), 0.4), (Point::new(-0.5, 0.6), 2.9), (Point::unit(1.0), 4.0)] {
            let th = Point::unit(phi);
            let pair = beam_transform(&a, z, th, 0.01) + beam_transform(&a, z, -th, 0.01);
            let full = radon(&a, z.dot(perp(th)), th, 0.01);
            assert!((pair - full).abs() < 1e-9, "{pair} {full}");
        }
    }

    #[test]
    fn radon_of_radial_attenuation_is_even() {
        let a = Attenuation::constant_with_cutoff(0.7, 1.0);
        for s in [0.1, 0.55, 0.99, 1.1] {
            let th = Point::unit(0.8);
            assert!((radon(&a, s, th, 0.01) - radon(&a, -s, th, 0.01)).abs() < 1e-12);
        }
    }

    #[test]
    fn hilbert_of_truncated_lorentzian() {
        let l = 40.0;
        let ds = 0.02;
        let n = (2.0 * l / ds) as usize + 1;
        let s: Vec<f64> = (0..n).map(|i| -l + i as f64 * ds).collect();
        let f: Vec<f64> = s.iter().map(|x| 1.0 / (1.0 + x * x)).collect();
        let h = classical_hilbert(&f, ds, 4).unwrap();
        for (i, x) in s.iter().enumerate() {
            if x.abs() > l / 2.0 {
                continue;
            }
            // transform of the Lorentzian restricted to [−L, L]
            let exact = (((l + x) / (l - x)).ln() + 2.0 * x * l.atan()) / (PI * (1.0 + x * x));
            assert!((h[i] - exact).abs() < 1e-4, "s={x}: {} vs {exact}", h[i]);
            // and the whole-line pair s/(1+s²) near the origin
            if x.abs() < 1.0 {
                assert!((h[i] - x / (1.0 + x * x)).abs() < 2e-2);
            }
        }
    }

    #[test]
    fn hilbert_twice_is_minus_identity() {
        // fourth derivative of a Gaussian: vanishing moments keep the tail of Hf small
        let ds = 0.02;
        let n = 4001;
        let s: Vec<f64> = (0..n).map(|i| -40.0 + i as f64 * ds).collect();
        let f: Vec<f64> = s.iter().map(|x| (16.0 * x.powi(4) - 48.0 * x * x + 12.0) * (-x * x).exp()).collect();
        let hh = classical_hilbert(&classical_hilbert(&f, ds, 4).unwrap(), ds, 4).unwrap();
        let err = hh.iter().zip(&f).map(|(a, b)| (a + b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn insufficient_padding_is_rejected() {
        assert!(matches!(classical_hilbert(&[1.0; 8], 0.1, 2), Err(Error::Config(_))));
    }

    #[test]
    fn cubic_interpolation_is_exact_for_cubics() {
        let t: Vec<f64> = (0..10).map(|i| {
            let x = -1.0 + 0.25 * i as f64;
            x * x * x - 2.0 * x + 1.0
        }).collect();
        for x in [-0.9, 0.13, 0.8, 1.2] {
            assert!((cubic(&t, -1.0, 0.25, x) - (x * x * x - 2.0 * x + 1.0)).abs() < 1e-13);
        }
    }

    fn small_pack(a: &Attenuation) -> AttenuationPack {
        let d = Domain::unit(32).unwrap();
        let g = CartesianGrid::covering(0.1, 1.0).unwrap();
        AttenuationPack::build(a, &d, g, PackParams::new(1.0, 128, 24)).unwrap()
    }

    #[test]
    fn vanishing_attenuation_gives_trivial_pack() {
        let pack = small_pack(&Attenuation::constant_with_cutoff(1e-14, 1.0));
        assert!(pack.boundary_h.iter().all(|h| h.norm() < 1e-10));
        let pm = pack.modes_at(Point::new(0.2, 0.3));
        assert!((pm.alpha[0] - 1.0).norm() < 1e-10 && (pm.beta[0] - 1.0).norm() < 1e-10);
        assert!(pm.alpha[1..].iter().chain(&pm.beta[1..]).all(|c| c.norm() < 1e-10));
    }

    #[test]
    fn pack_identities_hold() {
        let pack = small_pack(&Attenuation::standard_gaussian(1.0));
        let rep = verify_identities(&pack, 0.9, 40);
        assert!(rep.transport < 1e-4, "{rep:?}");
        assert!(rep.negative_modes < 1e-6, "{rep:?}");
        assert!(rep.convolution < 1e-8, "{rep:?}");
        assert!(rep.exp_product < 1e-12, "{rep:?}");
    }

    #[test]
    fn pack_binary_roundtrip() {
        let pack = small_pack(&Attenuation::constant_with_cutoff(0.5, 1.0));
        let bytes = pack.to_bytes().unwrap();
        let back = AttenuationPack::from_bytes(&bytes).unwrap();
        assert_eq!(back.attenuation, pack.attenuation);
        assert_eq!(back.params, pack.params);
        assert_eq!(back.grid, pack.grid);
        assert_eq!(back.diagnostics, pack.diagnostics);
        assert_eq!(back.grid_valid, pack.grid_valid);
        assert_eq!(back.boundary_h, pack.boundary_h);
        assert_eq!(back, pack);
        assert_eq!(back.to_bytes().unwrap(), bytes);
    }

    #[test]
    fn u_v_roundtrip_and_trivial_limit() {
        let pack = small_pack(&Attenuation::standard_gaussian(1.0));
        let g = pack.grid;
        let valid = g.disk_mask(0.9);
        let mut v = SequenceField::zeros(g, valid.clone(), (0..8).map(|k| -2 - k).collect(), 0.1);
        for (k, c) in v.comps.iter_mut().enumerate() {
            for (idx, x) in c.iter_mut().enumerate() {
                let z = g.node(idx).to_complex();
                *x = (z * (k as f64 + 1.0)).sin() * 0.5f64.powi(k as i32);
            }
        }
        let (u, _) = u_from_v(&v, &pack).unwrap();
        let (back, _) = v_from_u(&u, &pack).unwrap();
        for k in 0..8 {
            for idx in 0..g.len() {
                if valid[idx] {
                    assert!((back.comps[k][idx] - v.comps[k][idx]).norm() < 1e-8);
                }
            }
        }
        let zero = SequenceField::zeros(g, valid.clone(), v.labels.clone(), 0.1);
        assert!(u_from_v(&zero, &pack).unwrap().0.sup_norm() == 0.0);
        let trivial = small_pack(&Attenuation::constant_with_cutoff(1e-14, 1.0));
        let (u0, _) = u_from_v(&v, &trivial).unwrap();
        for k in 0..8 {
            for idx in 0..g.len() {
                if valid[idx] {
                    assert!((u0.comps[k][idx] - v.comps[k][idx]).norm() < 1e-8);
                }
            }
        }
    }
}
