//! Tensors consistent with given data.
//!
//! Negative modes of the transport solution come from the Bukhgeim–Cauchy
//! operator applied to the data sequences; one mode is free and is set to a
//! gauge function `ψ`. Each admissible `ψ` yields a tensor `F_ψ` with the same
//! data. All derivatives of `B`-fields are analytic; derivatives of `α`, `β`
//! use central differences on the pack grid.

use std::f64::consts::PI;
use std::path::Path;

use log::warn;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aanalytic::{range_residual, CauchyOperator, Jet, SequenceJet};
use crate::attenuation::{AttenuationPack, PACK_MASK_STEPS};
use crate::error::{Error, Result};
use crate::fields::{Attenuation, GriddedTensor, TensorField};
use crate::geometry::Point;
use crate::grid::{CartesianGrid, GridField};
use crate::io::{self, fmt_f64};
use crate::modes::{angular_modes, attenuated_data_modes, build_even, build_odd, BoundarySeq};
use crate::spectral::TrigSeries;
use crate::transport::{FanData, RayIntegrator};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub const DEFAULT_TOL_RANGE: f64 = 5e-3;
pub const DEFAULT_TOL_COMPAT: f64 = 5e-3;
pub const DEFAULT_MIN_A: f64 = 1e-6;
/// Mode truncation of the free pipeline.
pub const DEFAULT_MODES: usize = 24;
/// Mode truncation of the attenuated pipeline. The convolution `u = β ∗ v`
/// mixes every retained mode into `u_{−2}`, so truncation error reaches the
/// boundary terms directly.
pub const DEFAULT_MODES_ATTENUATED: usize = 48;

/// Grid shared by reconstructions and attenuation packs: spacing `Δ`,
/// extending a few steps past the disk.
pub fn reconstruction_grid(radius: f64, spacing: f64) -> Result<CartesianGrid> {
    CartesianGrid::covering(spacing, radius + PACK_MASK_STEPS * spacing)
}

/// Parameters of the reconstruction pipelines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconParams {
    /// Mode truncation `N`.
    pub n_max: usize,
    /// Interior grid step `Δ`.
    pub spacing: f64,
    /// Distance from the boundary inside which `B` is not evaluated.
    pub margin: f64,
    /// Ring spacing for boundary extrapolation in the compatibility term.
    pub ring_step: f64,
    pub tol_range: f64,
    pub tol_compat: f64,
    pub min_a: f64,
}

impl ReconParams {
    pub fn new(radius: f64) -> Self {
        let spacing = 0.02 * radius;
        ReconParams {
            n_max: DEFAULT_MODES,
            spacing,
            margin: spacing,
            ring_step: spacing,
            tol_range: DEFAULT_TOL_RANGE,
            tol_compat: DEFAULT_TOL_COMPAT,
            min_a: DEFAULT_MIN_A,
        }
    }

    /// Defaults for attenuated data.
    pub fn attenuated(radius: f64) -> Self {
        ReconParams { n_max: DEFAULT_MODES_ATTENUATED, ..Self::new(radius) }
    }

    pub fn grid(&self, radius: f64) -> Result<CartesianGrid> {
        reconstruction_grid(radius, self.spacing)
    }
}

/// Rule producing the free mode `ψ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsiKind {
    /// Harmonic extension of the boundary trace.
    PoissonDefault,
    /// `G(ω)P(r/R) + ρ(ω)·R·Q(r/R)` with Hermite profiles.
    RadialBlend,
    /// Values supplied on the reconstruction grid.
    UserGrid,
}

impl PsiKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "poisson_default" | "poisson" => Ok(PsiKind::PoissonDefault),
            "radial_blend" | "radial" => Ok(PsiKind::RadialBlend),
            "user_grid" => Ok(PsiKind::UserGrid),
            _ => Err(Error::Config(format!("unknown psi rule {s:?}"))),
        }
    }
}

/// `ψ` and the derivatives the pipelines need at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PsiJet {
    pub value: Complex64,
    pub dz: Complex64,
    pub dzbar: Complex64,
    pub dzbar_dzbar: Complex64,
    pub dz_dzbar: Complex64,
}

/// `P(t) = 4t³ − 3t⁴`: `P(1) = 1`, `P′(1) = 0`.
fn blend_p(t: f64) -> [f64; 3] {
    [4.0 * t.powi(3) - 3.0 * t.powi(4), 12.0 * t * t - 12.0 * t.powi(3), 24.0 * t - 36.0 * t * t]
}

/// `Q(t) = t⁴ − t³`: `Q(1) = 0`, `Q′(1) = 1`.
fn blend_q(t: f64) -> [f64; 3] {
    [t.powi(4) - t.powi(3), 4.0 * t.powi(3) - 3.0 * t * t, 12.0 * t * t - 6.0 * t]
}

/// Jet of `G(ω)S(r)` from `G, G′, G″` and `S, S′, S″`.
fn separable_jet(g: [Complex64; 3], s: [f64; 3], r: f64, omega: f64) -> PsiJet {
    let [g0, g1, g2] = g;
    let [s0, s1, s2] = s;
    let i = Complex64::i();
    let e = Complex64::from_polar(1.0, omega);
    PsiJet {
        value: g0 * s0,
        dz: e.conj() * (g0 * s1 - i * g1 * (s0 / r)) * 0.5,
        dzbar: e * (g0 * s1 + i * g1 * (s0 / r)) * 0.5,
        dzbar_dzbar: e * e
            * (g0 * s2 - g0 * (s1 / r) + i * g1 * (2.0 * s1 / r) - i * g1 * (2.0 * s0 / (r * r)) - g2 * (s0 / (r * r)))
            * 0.25,
        dz_dzbar: (g0 * s2 + g0 * (s1 / r) + g2 * (s0 / (r * r))) * 0.25,
    }
}

#[derive(Debug, Clone, PartialEq)]
struct UserPsi {
    value: GridField,
    dz: GridField,
    dzbar: GridField,
    dzbar_dzbar: GridField,
    dz_dzbar: GridField,
}

/// A member of the gauge class: the free mode `u_{−1}` (non-attenuated) or
/// `u_0` (attenuated).
#[derive(Debug, Clone, PartialEq)]
pub struct PsiChoice {
    pub kind: PsiKind,
    radius: f64,
    trace: Option<TrigSeries>,
    normal: Option<TrigSeries>,
    user: Option<UserPsi>,
}

impl PsiChoice {
    /// Harmonic extension of boundary samples `trace[i] = t(ζ_i)`, summed as
    /// `Σ c_n (z/R)^n + Σ c_{−n} (z̄/R)^n`.
    pub fn poisson(radius: f64, trace: &[Complex64]) -> Self {
        PsiChoice { kind: PsiKind::PoissonDefault, radius, trace: Some(TrigSeries::new(trace)), normal: None, user: None }
    }

    /// `trace(ω)P(r/R) + normal(ω)·R·Q(r/R)`; the normal derivative at the
    /// boundary equals `normal`, zero when absent.
    pub fn radial_blend(radius: f64, trace: &[Complex64], normal: Option<&[f64]>) -> Self {
        let normal = normal.map(|n| {
            let c: Vec<Complex64> = n.iter().map(|v| Complex64::new(*v, 0.0)).collect();
            TrigSeries::new(&c)
        });
        PsiChoice { kind: PsiKind::RadialBlend, radius, trace: Some(TrigSeries::new(trace)), normal, user: None }
    }

    /// Values on a reconstruction grid; derivatives by central differences.
    pub fn user_grid(radius: f64, values: GridField) -> Self {
        let (dz, dzbar) = values.cauchy_riemann4();
        let (_, dzbar_dzbar) = dzbar.cauchy_riemann4();
        let dz_dzbar = values.dz_dzbar();
        PsiChoice {
            kind: PsiKind::UserGrid,
            radius,
            trace: None,
            normal: None,
            user: Some(UserPsi { value: values, dz, dzbar, dzbar_dzbar, dz_dzbar }),
        }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Jet at a point of the closed disk; `None` for grid-defined `ψ`.
    pub fn jet(&self, z: Point) -> Option<PsiJet> {
        let r = z.norm();
        let omega = z.y.atan2(z.x);
        let big_r = self.radius;
        match self.kind {
            PsiKind::PoissonDefault => {
                let t = self.trace.as_ref()?;
                let rho = r / big_r;
                let mut j = PsiJet::default();
                for &(f, c) in t.terms() {
                    let n = f.abs() as i32;
                    let sgn = f.signum();
                    j.value += c * Complex64::from_polar(rho.powi(n), f * omega);
                    if n >= 1 {
                        let d = c * Complex64::from_polar(n as f64 * rho.powi(n - 1) / big_r, sgn * (n - 1) as f64 * omega);
                        if sgn > 0.0 {
                            j.dz += d;
                        } else {
                            j.dzbar += d;
                        }
                    }
                    if n >= 2 && sgn < 0.0 {
                        let k = (n * (n - 1)) as f64 * rho.powi(n - 2) / (big_r * big_r);
                        j.dzbar_dzbar += c * Complex64::from_polar(k, -((n - 2) as f64) * omega);
                    }
                }
                Some(j)
            }
            PsiKind::RadialBlend => {
                let t = self.trace.as_ref()?;
                if r < 1e-12 * big_r {
                    return Some(PsiJet::default());
                }
                let s = r / big_r;
                let p = blend_p(s);
                let mut j = separable_jet(t.eval(omega), [p[0], p[1] / big_r, p[2] / (big_r * big_r)], r, omega);
                if let Some(nm) = &self.normal {
                    let q = blend_q(s);
                    let k = separable_jet(nm.eval(omega), [q[0] * big_r, q[1], q[2] / big_r], r, omega);
                    j.value += k.value;
                    j.dz += k.dz;
                    j.dzbar += k.dzbar;
                    j.dzbar_dzbar += k.dzbar_dzbar;
                    j.dz_dzbar += k.dz_dzbar;
                }
                Some(j)
            }
            PsiKind::UserGrid => None,
        }
    }

    /// Jets on the nodes of `grid` flagged in `mask`.
    pub fn jets_on(&self, grid: CartesianGrid, mask: &[bool]) -> Result<Vec<Option<PsiJet>>> {
        if let Some(u) = &self.user {
            if u.value.grid != grid {
                return Err(Error::Shape("user psi is defined on a different grid".into()));
            }
            return (0..grid.len())
                .map(|idx| {
                    if !mask[idx] {
                        return Ok(None);
                    }
                    if !(u.dz.valid[idx] && u.dzbar_dzbar.valid[idx] && u.dz_dzbar.valid[idx]) {
                        return Err(Error::Shape(format!(
                            "user psi lacks difference stencils at node {:?}",
                            grid.node(idx)
                        )));
                    }
                    Ok(Some(PsiJet {
                        value: u.value.values[idx],
                        dz: u.dz.values[idx],
                        dzbar: u.dzbar.values[idx],
                        dzbar_dzbar: u.dzbar_dzbar.values[idx],
                        dz_dzbar: u.dz_dzbar.values[idx],
                    }))
                })
                .collect();
        }
        Ok((0..grid.len())
            .into_par_iter()
            .map(|idx| if mask[idx] { self.jet(grid.node(idx)) } else { None })
            .collect())
    }

    /// Values at `m` equispaced boundary points, where defined.
    pub fn boundary_trace(&self, m: usize) -> Option<Vec<Complex64>> {
        self.user.is_none().then(|| {
            (0..m)
                .map(|i| self.jet(Point::unit(2.0 * PI * i as f64 / m as f64) * self.radius).unwrap_or_default().value)
                .collect()
        })
    }
}

/// Default `ψ` for non-attenuated data: harmonic extension of `g_{−1}`.
pub fn psi_default_free(fan: &FanData, n_max: usize) -> Result<PsiChoice> {
    let ms = angular_modes(fan, n_max)?;
    Ok(PsiChoice::poisson(fan.radius, &ms.trace(-1)))
}

/// Second choice with the same trace: radial blend of `g_{−1}`.
pub fn psi_blend_free(fan: &FanData, n_max: usize) -> Result<PsiChoice> {
    let ms = angular_modes(fan, n_max)?;
    Ok(PsiChoice::radial_blend(fan.radius, &ms.trace(-1), None))
}

/// Modes `u_0, u_{−1}, u_{−2}, …` of the constructed transport solution on
/// the reconstruction grid.
#[derive(Debug, Clone, PartialEq)]
pub struct UModes {
    pub grid: CartesianGrid,
    pub valid: Vec<bool>,
    /// `modes[n][node] = u_{−n}`
    pub modes: Vec<Vec<Complex64>>,
}

impl UModes {
    fn zeros(grid: CartesianGrid, valid: Vec<bool>, count: usize) -> Self {
        UModes { grid, valid, modes: vec![vec![ZERO; grid.len()]; count] }
    }

    /// `u = u_0 + Σ_{n≥1} (u_{−n}e^{−inφ} + conj(u_{−n})e^{inφ})` at a grid
    /// node; returns the value and the imaginary part of the synthesis.
    pub fn assemble(&self, idx: usize, phi: f64) -> Result<(f64, f64)> {
        if !self.valid[idx] {
            return Err(Error::Domain(format!("node {:?} is outside the reconstruction region", self.grid.node(idx))));
        }
        let mut v = self.modes[0][idx];
        for n in 1..self.modes.len() {
            v += (self.modes[n][idx] * Complex64::from_polar(1.0, -(n as f64) * phi)).re * 2.0;
        }
        Ok((v.re, v.im))
    }

    pub fn field(&self, n: usize) -> GridField {
        GridField { grid: self.grid, values: self.modes[n].clone(), valid: self.valid.clone() }
    }
}

/// `u(x, θ)` at a grid node from its modes.
pub fn assemble_u(u: &UModes, idx: usize, phi: f64) -> Result<f64> {
    Ok(u.assemble(idx, phi)?.0)
}

/// Diagnostics stored with a reconstruction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconDiagnostics {
    pub attenuated: bool,
    pub psi: PsiKind,
    pub range_even: f64,
    pub range_odd: f64,
    pub compat: Option<f64>,
    /// Largest magnitude of the last retained data component.
    pub tail: f64,
    /// Nodes with `|z|` up to this radius carry computed values.
    pub valid_radius: f64,
    pub min_a: Option<f64>,
    pub warnings: Vec<String>,
}

/// Reconstructed tensor with the modes used to build it.
#[derive(Debug, Clone)]
pub struct ReconstructionResult {
    pub radius: f64,
    pub tensor: GriddedTensor,
    pub f0: GridField,
    pub f2: GridField,
    pub u: UModes,
    pub attenuation: Option<Attenuation>,
    pub diagnostics: ReconDiagnostics,
}

fn check_range(name: &str, seq: &BoundarySeq, tol: f64, warnings: &mut Vec<String>) -> Result<f64> {
    let r = range_residual(seq)?.report.sup;
    if r > tol {
        let msg = format!("{name} range residual {r:.3e} exceeds {tol:.1e}; reconstructing anyway");
        warn!("{msg}");
        warnings.push(msg);
    }
    Ok(r)
}

fn component(j: &SequenceJet, pick: fn(&SequenceJet) -> &crate::aanalytic::SequenceField, k: usize, idx: usize) -> Complex64 {
    let f = pick(j);
    if k < f.comps.len() {
        f.comps[k][idx]
    } else {
        ZERO
    }
}

/// Non-attenuated pipeline.
pub fn reconstruct_free(fan: &FanData, psi: &PsiChoice, params: &ReconParams) -> Result<ReconstructionResult> {
    if fan.attenuation.is_some() {
        warn!("fan carries attenuation tag {:?}; using the non-attenuated pipeline", fan.attenuation);
    }
    let radius = fan.radius;
    let ms = angular_modes(fan, params.n_max)?;
    let even = build_even(&ms)?;
    let odd = build_odd(&ms)?;
    let mut warnings = Vec::new();
    let range_even = check_range("g^even", &even, params.tol_range, &mut warnings)?;
    let range_odd = check_range("g^odd", &odd, params.tol_range, &mut warnings)?;

    let grid = params.grid(radius)?;
    let be = CauchyOperator::with_margin(&even, params.margin);
    let bo = CauchyOperator::with_margin(&odd, params.margin);
    let je = be.jets_on_grid(grid);
    let jo = bo.jets_on_grid(grid);
    let valid = je.value.valid.clone();
    let psi_jets = psi.jets_on(grid, &valid)?;

    let n_modes = params.n_max + 1;
    let mut u = UModes::zeros(grid, valid.clone(), n_modes);
    let mut f0 = GridField { grid, values: vec![ZERO; grid.len()], valid: valid.clone() };
    let mut f2 = f0.clone();
    for idx in 0..grid.len() {
        let Some(pj) = psi_jets[idx] else { continue };
        f0.values[idx] = Complex64::new(2.0 * pj.dz.re, 0.0);
        f2.values[idx] = pj.dzbar + component(&jo, |j| &j.dz, 0, idx);
        u.modes[1][idx] = pj.value;
        for n in (0..n_modes).filter(|n| n % 2 == 0) {
            u.modes[n][idx] = component(&je, |j| &j.value, n / 2, idx);
        }
        for n in (3..n_modes).filter(|n| n % 2 == 1) {
            u.modes[n][idx] = component(&jo, |j| &j.value, (n - 3) / 2, idx);
        }
    }
    let tensor = GriddedTensor::assemble(&f0, &f2, radius)?;
    Ok(ReconstructionResult {
        radius,
        tensor,
        f0,
        f2,
        u,
        attenuation: None,
        diagnostics: ReconDiagnostics {
            attenuated: false,
            psi: psi.kind,
            range_even,
            range_odd,
            compat: None,
            tail: be.tail_estimate().max(bo.tail_estimate()),
            valid_radius: radius - params.margin,
            min_a: None,
            warnings,
        },
    })
}

/// Boundary quantities of the attenuated problem at each boundary node:
/// the compatibility residual `∂_τ g_0 + 2 Im e^{−iη}C` and the prescribed
/// normal derivative `−2 Re e^{−iη}C`, where
/// `C = ∂(Σ_j β_j (Bg_h)_{−2−j})|_Γ + a|_Γ g_{−1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTerms {
    pub residual: Vec<f64>,
    pub normal: Vec<f64>,
    pub g0: Vec<f64>,
}

impl BoundaryTerms {
    pub fn sup(&self) -> f64 {
        self.residual.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn interleave(je: &Jet, jo: &Jet, j: usize) -> (Complex64, Complex64, Complex64, Complex64, Complex64) {
    let (jet, k) = if j % 2 == 0 { (je, j / 2) } else { (jo, (j - 1) / 2) };
    if k >= jet.value.len() {
        return (ZERO, ZERO, ZERO, ZERO, ZERO);
    }
    (jet.value[k], jet.dz[k], jet.dzbar[k], jet.dzdz[k], jet.dzdzbar[k])
}

/// `β_j` and `∂β_j` at a point by central differences of pointwise modes.
fn beta_with_dz(pack: &AttenuationPack, z: Point) -> (Vec<Complex64>, Vec<Complex64>) {
    let eps = 1e-3 * pack.attenuation.radius;
    let b = pack.modes_at(z).beta;
    let bx = [pack.modes_at(z + Point::new(eps, 0.0)).beta, pack.modes_at(z - Point::new(eps, 0.0)).beta];
    let by = [pack.modes_at(z + Point::new(0.0, eps)).beta, pack.modes_at(z - Point::new(0.0, eps)).beta];
    let d = (0..b.len())
        .map(|q| {
            let dx = (bx[0][q] - bx[1][q]) / (2.0 * eps);
            let dy = (by[0][q] - by[1][q]) / (2.0 * eps);
            (dx - Complex64::i() * dy) * 0.5
        })
        .collect();
    (b, d)
}

/// Compatibility residual and prescribed normal derivative. `∂u_{−2}` at
/// the boundary is extrapolated linearly from rings at `R − d` and `R − 2d`.
pub fn boundary_terms(fan: &FanData, pack: &AttenuationPack, params: &ReconParams) -> Result<BoundaryTerms> {
    let radius = fan.radius;
    let ms = angular_modes(fan, params.n_max)?;
    let am = attenuated_data_modes(fan, pack, params.n_max)?;
    let be = CauchyOperator::with_margin(&am.even, params.margin);
    let bo = CauchyOperator::with_margin(&am.odd, params.margin);
    let lv = am.g_h.len();
    let d = params.ring_step;
    if !(d > 0.0 && 2.0 * d < radius) {
        return Err(Error::Config(format!("ring step {d} out of range")));
    }
    let domain = fan.domain()?;
    let g0 = ms.trace(0);
    let gm1 = ms.trace(-1);
    let dtau = domain.boundary_derivative(&g0)?;
    let a = &pack.attenuation;
    let rows: Vec<Result<(f64, f64)>> = (0..fan.m)
        .into_par_iter()
        .map(|i| {
            let eta = domain.node_param(i);
            let dir = Point::unit(eta);
            let mut ring = [ZERO; 2];
            for (t, slot) in ring.iter_mut().enumerate() {
                let z = dir * (radius - (t + 1) as f64 * d);
                let je = be.jet_near_boundary(z)?;
                let jo = bo.jet_near_boundary(z)?;
                let (beta, dbeta) = beta_with_dz(pack, z);
                let mut acc = ZERO;
                for j in 0..lv.min(beta.len()) {
                    let (v, dv, ..) = interleave(&je, &jo, j);
                    acc += dbeta[j] * v + beta[j] * dv;
                }
                *slot = acc;
            }
            let du = ring[0] * 2.0 - ring[1];
            let c = du + gm1[i] * a.value(domain.node(i));
            let rot = Complex64::from_polar(1.0, -eta) * c;
            Ok((dtau[i].re + 2.0 * rot.im, -2.0 * rot.re))
        })
        .collect();
    let mut residual = Vec::with_capacity(fan.m);
    let mut normal = Vec::with_capacity(fan.m);
    for r in rows {
        let (res, nor) = r?;
        residual.push(res);
        normal.push(nor);
    }
    Ok(BoundaryTerms { residual, normal, g0: g0.iter().map(|v| v.re).collect() })
}

/// Sup of the attenuated compatibility residual.
pub fn compat_check(fan: &FanData, pack: &AttenuationPack, params: &ReconParams) -> Result<f64> {
    Ok(boundary_terms(fan, pack, params)?.sup())
}

/// Default `ψ` for attenuated data: real radial blend with trace `g_0` and
/// the prescribed normal derivative.
pub fn psi_default_att(terms: &BoundaryTerms, radius: f64) -> PsiChoice {
    let trace: Vec<Complex64> = terms.g0.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    PsiChoice::radial_blend(radius, &trace, Some(&terms.normal))
}

fn check_min_a(a: &Attenuation, params: &ReconParams) -> Result<f64> {
    let min_a = a.min_on_disk();
    if !(params.min_a >= 1e-6) {
        return Err(Error::Config(format!("min_a guard {:e} is below 1e-6", params.min_a)));
    }
    if min_a < params.min_a {
        return Err(Error::Config(format!("attenuation minimum {min_a:.3e} is below the guard {:.1e}", params.min_a)));
    }
    Ok(min_a)
}

/// Attenuated pipeline. `psi = None` selects [`psi_default_att`]. The pack
/// must be built on [`ReconParams::grid`].
pub fn reconstruct_att(
    fan: &FanData,
    pack: &AttenuationPack,
    psi: Option<&PsiChoice>,
    params: &ReconParams,
) -> Result<ReconstructionResult> {
    let a = &pack.attenuation;
    let min_a = check_min_a(a, params)?;
    let radius = fan.radius;
    let grid = params.grid(radius)?;
    if pack.grid != grid {
        return Err(Error::Shape("attenuation pack was built on a different grid than the reconstruction".into()));
    }
    let am = attenuated_data_modes(fan, pack, params.n_max)?;
    let mut warnings = Vec::new();
    let range_even = check_range("g_h^even", &am.even, params.tol_range, &mut warnings)?;
    let range_odd = check_range("g_h^odd", &am.odd, params.tol_range, &mut warnings)?;
    let terms = boundary_terms(fan, pack, params)?;
    let compat = terms.sup();
    if compat > params.tol_compat {
        let msg = format!("compatibility residual {compat:.3e} exceeds {:.1e}; reconstructing anyway", params.tol_compat);
        warn!("{msg}");
        warnings.push(msg);
    }
    let default_psi;
    let psi = match psi {
        Some(p) => p,
        None => {
            default_psi = psi_default_att(&terms, radius);
            &default_psi
        }
    };

    let be = CauchyOperator::with_margin(&am.even, params.margin);
    let bo = CauchyOperator::with_margin(&am.odd, params.margin);
    let je = be.jets_on_grid(grid);
    let jo = bo.jets_on_grid(grid);
    let valid = je.value.valid.clone();
    let psi_jets = psi.jets_on(grid, &valid)?;

    let lv = am.g_h.len();
    let nb = lv.min(pack.modes() + 1);
    let beta: Vec<GridField> = (0..nb).map(|q| pack.beta(q)).collect();
    let dbeta: Vec<(GridField, GridField)> = beta.iter().map(|b| b.cauchy_riemann4()).collect();
    let ddbeta: Vec<GridField> = beta.iter().map(|b| b.dz_dz()).collect();
    let lapbeta: Vec<GridField> = beta.iter().map(|b| b.dz_dzbar()).collect();
    for idx in (0..grid.len()).filter(|&i| valid[i]) {
        if !(dbeta[0].0.valid[idx] && ddbeta[0].valid[idx] && lapbeta[0].valid[idx]) {
            return Err(Error::Shape("attenuation pack does not cover the difference stencils near the boundary".into()));
        }
    }

    let n_modes = params.n_max + 1;
    let mut u = UModes::zeros(grid, valid.clone(), n_modes);
    let mut f0 = GridField { grid, values: vec![ZERO; grid.len()], valid: valid.clone() };
    let mut f2 = f0.clone();
    let v_at = |idx: usize, j: usize| -> (Complex64, Complex64, Complex64, Complex64, Complex64) {
        let (src, k) = if j % 2 == 0 { (&je, j / 2) } else { (&jo, (j - 1) / 2) };
        if k >= src.value.comps.len() {
            return (ZERO, ZERO, ZERO, ZERO, ZERO);
        }
        (
            src.value.comps[k][idx],
            src.dz.comps[k][idx],
            src.dzbar.comps[k][idx],
            src.dzdz.comps[k][idx],
            src.dzdzbar.comps[k][idx],
        )
    };
    for idx in 0..grid.len() {
        let Some(pj) = psi_jets[idx] else { continue };
        let x = grid.node(idx);
        let av = a.value(x);
        let dbar_a = a.dbar(x);
        let dz_a = dbar_a.conj();

        // u_{−2−k} = Σ_j β_j v_{−2−k−j}
        for k in 0..lv {
            let mut s = ZERO;
            for j in 0..(lv - k).min(nb) {
                s += beta[j].values[idx] * v_at(idx, k + j).0;
            }
            if k + 2 < n_modes {
                u.modes[k + 2][idx] = s;
            }
        }
        let mut du2 = ZERO;
        let mut dzdz_u2 = ZERO;
        let mut dzbar_dz_u2 = ZERO;
        let mut du3 = ZERO;
        for j in 0..lv.min(nb) {
            let b = beta[j].values[idx];
            let db = dbeta[j].0.values[idx];
            let dbb = dbeta[j].1.values[idx];
            let (v, dv, dbv, ddv, lapv) = v_at(idx, j);
            du2 += db * v + b * dv;
            dzdz_u2 += ddbeta[j].values[idx] * v + db * dv * 2.0 + b * ddv;
            dzbar_dz_u2 += lapbeta[j].values[idx] * v + db * dbv + dbb * dv + b * lapv;
            if j + 1 < lv {
                let (v3, dv3, ..) = v_at(idx, j + 1);
                du3 += db * v3 + b * dv3;
            }
        }
        let psi_v = pj.value.re;
        let q = (pj.dzbar + du2) / av;
        let dq = (pj.dz_dzbar + dzdz_u2) / av - q * dz_a / av;
        let dbar_q = (pj.dzbar_dzbar + dzbar_dz_u2) / av - q * dbar_a / av;
        f0.values[idx] = Complex64::new(-2.0 * dq.re + av * psi_v, 0.0);
        f2.values[idx] = -dbar_q + du3 + u.modes[2][idx] * av;
        u.modes[0][idx] = Complex64::new(psi_v, 0.0);
        u.modes[1][idx] = -q;
    }
    let tensor = GriddedTensor::assemble(&f0, &f2, radius)?;
    Ok(ReconstructionResult {
        radius,
        tensor,
        f0,
        f2,
        u,
        attenuation: Some(a.clone()),
        diagnostics: ReconDiagnostics {
            attenuated: true,
            psi: psi.kind,
            range_even,
            range_odd,
            compat: Some(compat),
            tail: be.tail_estimate().max(bo.tail_estimate()),
            valid_radius: radius - params.margin,
            min_a: Some(min_a),
            warnings,
        },
    })
}

impl ReconstructionResult {
    /// Forward data of the reconstructed tensor on the grid of `fan`.
    pub fn forward(&self, integrator: &RayIntegrator, k: usize) -> Result<FanData> {
        integrator.make_fan(&self.tensor, self.attenuation.as_ref(), k)
    }

    /// `sup |X_a F_ψ − g| / sup |g|`.
    pub fn roundtrip_error(&self, fan: &FanData, integrator: &RayIntegrator) -> Result<f64> {
        self.forward(integrator, fan.k)?.sup_rel_diff(fan)
    }

    /// Sup over interior nodes of the mode form of
    /// `θ·∇u + a u − ⟨F_ψθ, θ⟩` at random directions, with `∂`, `∂̄` of the
    /// modes by fourth-order differences.
    pub fn transport_residual(&self, samples: usize, seed: u64) -> f64 {
        let u = &self.u;
        let g = u.grid;
        let n = u.modes.len();
        let fields: Vec<GridField> = (0..n).map(|q| u.field(q)).collect();
        let ders: Vec<(GridField, GridField)> = fields.iter().map(|f| f.cauchy_riemann4()).collect();
        // mode m ≥ 0 of u is conj(u_{−m}); derivatives conjugate and swap
        let mode = |m: i64, idx: usize| -> (Complex64, Complex64, Complex64) {
            let q = m.unsigned_abs() as usize;
            if q >= n {
                return (ZERO, ZERO, ZERO);
            }
            let (v, d, db) = (fields[q].values[idx], ders[q].0.values[idx], ders[q].1.values[idx]);
            if m <= 0 {
                (v, d, db)
            } else {
                (v.conj(), db.conj(), d.conj())
            }
        };
        let interior: Vec<usize> = (0..g.len()).filter(|&i| ders[0].0.valid[i]).collect();
        if interior.is_empty() {
            return 0.0;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let idx = interior[rng.gen_range(0..interior.len())];
            let phi = rng.gen_range(0.0..2.0 * PI);
            let x = g.node(idx);
            let av = self.attenuation.as_ref().map_or(0.0, |a| a.value(x));
            let mut lhs = 0.0;
            for m in -(n as i64) + 1..n as i64 {
                // mode m of θ·∇u + au: ∂̄u_{m+1} + ∂u_{m−1} + a u_m
                let c = mode(m + 1, idx).2 + mode(m - 1, idx).1 + mode(m, idx).0 * av;
                lhs += (c * Complex64::from_polar(1.0, m as f64 * phi)).re;
            }
            let rhs = self.tensor.values()[idx].quad_form(Point::unit(phi));
            worst = worst.max((lhs - rhs).abs());
        }
        worst
    }

    /// `x,y,f11,f12,f22` at grid nodes in the disk.
    pub fn to_csv(&self) -> String {
        let g = self.tensor.grid();
        let radius = self.radius;
        let mut out = String::from("x,y,f11,f12,f22\n");
        for idx in 0..g.len() {
            let x = g.node(idx);
            if x.norm() > radius {
                continue;
            }
            let f = self.tensor.eval(x);
            out.push_str(&format!("{},{},{},{},{}\n", fmt_f64(x.x), fmt_f64(x.y), fmt_f64(f.f11), fmt_f64(f.f12), fmt_f64(f.f22)));
        }
        out
    }

    /// Writes `tensor.csv`, `diagnostics.json` and `plot.gp` into `dir`.
    pub fn write(&self, dir: &Path, extra: &serde_json::Value) -> Result<()> {
        io::write_atomic(&dir.join("tensor.csv"), self.to_csv().as_bytes())?;
        let diag = serde_json::json!({ "diagnostics": self.diagnostics, "run": extra });
        io::write_atomic(&dir.join("diagnostics.json"), serde_json::to_string_pretty(&diag)?.as_bytes())?;
        io::write_atomic(&dir.join("plot.gp"), GNUPLOT.as_bytes())?;
        Ok(())
    }
}

const GNUPLOT: &str = "set datafile separator ','
set view map
set size ratio -1
set terminal pngcairo size 1500,480
set output 'tensor.png'
set multiplot layout 1,3
set title 'f11'
splot 'tensor.csv' every ::1 using 1:2:3 with points pointtype 5 pointsize 0.5 palette notitle
set title 'f12'
splot 'tensor.csv' every ::1 using 1:2:4 with points pointtype 5 pointsize 0.5 palette notitle
set title 'f22'
splot 'tensor.csv' every ::1 using 1:2:5 with points pointtype 5 pointsize 0.5 palette notitle
unset multiplot
";

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;

    fn fd_jet(psi: &PsiChoice, z: Point, eps: f64) -> (Complex64, Complex64) {
        let d = |p: Point| psi.jet(p).unwrap();
        let ex = Point::new(eps, 0.0);
        let ey = Point::new(0.0, eps);
        let i = Complex64::i();
        let dz = ((d(z + ex).value - d(z - ex).value) - i * (d(z + ey).value - d(z - ey).value)) / (4.0 * eps);
        let dzbar_dzbar = ((d(z + ex).dzbar - d(z - ex).dzbar) + i * (d(z + ey).dzbar - d(z - ey).dzbar)) / (4.0 * eps);
        (dz, dzbar_dzbar)
    }

    #[test]
    fn poisson_psi_reproduces_holomorphic_trace() {
        let m = 64;
        let trace: Vec<Complex64> = (0..m).map(|i| Complex64::from_polar(1.0, 2.0 * PI * i as f64 / m as f64)).collect();
        let psi = PsiChoice::poisson(1.0, &trace);
        for z in [Point::new(0.3, -0.2), Point::new(-0.7, 0.5), Point::new(0.0, 0.0)] {
            let j = psi.jet(z).unwrap();
            assert!((j.value - z.to_complex()).norm() < 1e-13);
            assert!((j.dz - 1.0).norm() < 1e-13);
            assert!(j.dzbar.norm() < 1e-13 && j.dzbar_dzbar.norm() < 1e-13 && j.dz_dzbar.norm() < 1e-13);
        }
    }

    #[test]
    fn poisson_psi_jet_matches_differences() {
        let m = 64;
        let trace: Vec<Complex64> = (0..m)
            .map(|i| {
                let s = 2.0 * PI * i as f64 / m as f64;
                Complex64::new((3.0 * s).cos() + 0.5 * s.sin(), (2.0 * s).sin())
            })
            .collect();
        let psi = PsiChoice::poisson(1.3, &trace);
        let z = Point::new(0.4, 0.6);
        let (dz, dbdb) = fd_jet(&psi, z, 1e-5);
        let j = psi.jet(z).unwrap();
        assert!((j.dz - dz).norm() < 1e-7, "{} vs {}", j.dz, dz);
        assert!((j.dzbar_dzbar - dbdb).norm() < 1e-6);
        assert!(j.dz_dzbar.norm() < 1e-12);
    }

    #[test]
    fn radial_blend_matches_trace_and_normal_derivative() {
        let m = 64;
        let s = |i: usize| 2.0 * PI * i as f64 / m as f64;
        let trace: Vec<Complex64> = (0..m).map(|i| Complex64::new((2.0 * s(i)).cos() + 1.0, 0.0)).collect();
        let normal: Vec<f64> = (0..m).map(|i| 0.3 * s(i).sin()).collect();
        let radius = 1.5;
        let psi = PsiChoice::radial_blend(radius, &trace, Some(&normal));
        for i in (0..m).step_by(5) {
            let dir = Point::unit(s(i));
            let h = 1e-5;
            let v = psi.jet(dir * radius).unwrap().value;
            assert!((v - trace[i]).norm() < 1e-12);
            let dn = (psi.jet(dir * radius).unwrap().value - psi.jet(dir * (radius - h)).unwrap().value).re / h;
            assert!((dn - normal[i]).abs() < 1e-4, "{dn} vs {}", normal[i]);
        }
        let z = Point::new(-0.5, 0.7);
        let (dz, dbdb) = fd_jet(&psi, z, 1e-5);
        let j = psi.jet(z).unwrap();
        assert!((j.dz - dz).norm() < 1e-7);
        assert!((j.dzbar_dzbar - dbdb).norm() < 1e-6);
        // ∂∂̄ψ = ¼Δψ
        let e = 1e-4;
        let val = |p: Point| psi.jet(p).unwrap().value;
        let lap = (val(z + Point::new(e, 0.0)) + val(z - Point::new(e, 0.0)) + val(z + Point::new(0.0, e))
            + val(z - Point::new(0.0, e))
            - val(z) * 4.0)
            / (e * e);
        assert!((j.dz_dzbar - lap * 0.25).norm() < 1e-5);
    }

    #[test]
    fn user_grid_psi_uses_differences() {
        let grid = reconstruction_grid(1.0, 0.05).unwrap();
        let values = GridField {
            grid,
            values: (0..grid.len()).map(|i| Complex64::new(grid.node(i).norm_sqr(), 0.0)).collect(),
            valid: vec![true; grid.len()],
        };
        let psi = PsiChoice::user_grid(1.0, values);
        let mask = grid.disk_mask(0.9);
        let jets = psi.jets_on(grid, &mask).unwrap();
        for (idx, j) in jets.iter().enumerate() {
            if let Some(j) = j {
                let z = grid.node(idx).to_complex();
                assert!((j.dz - z.conj()).norm() < 1e-10);
                assert!((j.dz_dzbar - 1.0).norm() < 1e-10);
            }
        }
        assert!(psi.jet(Point::new(0.0, 0.0)).is_none());
    }

    #[test]
    fn psi_rule_names_parse() {
        assert_eq!(PsiKind::parse("poisson_default").unwrap(), PsiKind::PoissonDefault);
        assert_eq!(PsiKind::parse("radial_blend").unwrap(), PsiKind::RadialBlend);
        assert!(matches!(PsiKind::parse("spline"), Err(Error::Config(_))));
    }

    #[test]
    fn zero_fan_reconstructs_zero_tensor() {
        let d = Domain::unit(64).unwrap();
        let fan = FanData::zeros(&d, 64);
        let mut p = ReconParams::new(1.0);
        p.n_max = 12;
        p.spacing = 0.05;
        p.margin = 0.05;
        let psi = psi_default_free(&fan, 12).unwrap();
        let r = reconstruct_free(&fan, &psi, &p).unwrap();
        assert!(r.tensor.values().iter().all(|v| v.max_abs() == 0.0));
        assert_eq!(r.diagnostics.range_even, 0.0);
        assert_eq!(r.diagnostics.range_odd, 0.0);
        assert!(r.diagnostics.warnings.is_empty());
    }

    #[test]
    fn free_pipeline_solves_the_transport_equation() {
        let d = Domain::unit(128).unwrap();
        let ri = RayIntegrator::with_default_step(d);
        let ph = crate::fields::Phantom::standard_bumps(1.0);
        let fan = ri.make_fan(&ph, None, 128).unwrap();
        let mut p = ReconParams::new(1.0);
        p.spacing = 0.04;
        p.margin = 0.04;
        let r = reconstruct_free(&fan, &psi_default_free(&fan, 24).unwrap(), &p).unwrap();
        assert!(r.transport_residual(100, 3) < 2e-2);
        // u_0 is real up to discretization error
        let idx = (0..p.grid(1.0).unwrap().len()).find(|&i| r.u.valid[i]).unwrap();
        let (_, im) = r.u.assemble(idx, 0.7).unwrap();
        assert!(im.abs() < 1e-3, "{im}");
        let outside = r.u.valid.iter().position(|v| !v).unwrap();
        assert!(matches!(r.u.assemble(outside, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn min_a_guard_rejects_small_attenuation() {
        let p = ReconParams::attenuated(1.0);
        assert!(check_min_a(&Attenuation::constant_with_cutoff(0.2, 1.0), &p).is_ok());
        assert!(matches!(check_min_a(&Attenuation::constant_with_cutoff(1e-8, 1.0), &p), Err(Error::Config(_))));
        let mut loose = p;
        loose.min_a = 1e-9;
        assert!(matches!(check_min_a(&Attenuation::constant_with_cutoff(0.2, 1.0), &loose), Err(Error::Config(_))));
    }

    #[test]
    fn csv_lists_disk_nodes() {
        let d = Domain::unit(32).unwrap();
        let fan = FanData::zeros(&d, 32);
        let mut p = ReconParams::new(1.0);
        p.n_max = 8;
        p.spacing = 0.25;
        p.margin = 0.25;
        let r = reconstruct_free(&fan, &psi_default_free(&fan, 8).unwrap(), &p).unwrap();
        let csv = r.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "x,y,f11,f12,f22");
        let g = p.grid(1.0).unwrap();
        let inside = (0..g.len()).filter(|&i| g.node(i).norm() <= 1.0).count();
        assert_eq!(lines.len() - 1, inside);
    }
}
