//! L-analytic sequence maps: the left shift, the Bukhgeim–Cauchy operator,
//! the boundary Hilbert transform and the residuals built from them.
//!
//! Sequences are stored 0-based: component `k` of a boundary sequence plays
//! the role of `g_{−1−k}` in the Cauchy formula. On the circle `ζ = R e^{is}`
//! with `w = ζ − z` and `r = w̄/w` the operator reads
//!
//! `(Bc)_k(z) = (1/2π) ∫ [ζ S_k + ζ̄ S_{k+1}] / w ds`, `S_k = Σ_{j≥0} c_{k+j} r^j`,
//!
//! and the Hilbert transform at a node `ξ = R e^{is₀}` reads
//!
//! `(Hc)_k(ξ) = (1/2π) PV∫ c_k cot((s−s₀)/2) ds + (i/2π) ∫ c_k ds + (i/π) ∫ r S_{k+1} ds`
//!
//! with `r = −e^{−i(s+s₀)}` on the circle.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::grid::{CartesianGrid, GridField};
use crate::modes::BoundarySeq;
use crate::spectral;

pub const DEFAULT_MARGIN_FRACTION: f64 = 0.1;
const MAX_UPSAMPLED_NODES: usize = 16384;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Drop the first component.
pub fn shift_left<T: Clone>(seq: &[T]) -> Result<Vec<T>> {
    if seq.len() < 2 {
        return Err(Error::Precondition(format!("shift needs at least 2 components, got {}", seq.len())));
    }
    Ok(seq[1..].to_vec())
}

/// Value and derivatives of every component at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub value: Vec<Complex64>,
    pub dz: Vec<Complex64>,
    pub dzbar: Vec<Complex64>,
    /// `∂∂̄ = Δ/4`
    pub dzdzbar: Vec<Complex64>,
    pub dzdz: Vec<Complex64>,
}

struct Level {
    zeta: Vec<Complex64>,
    data: Vec<Complex64>,
}

/// Bukhgeim–Cauchy operator for a fixed boundary sequence.
///
/// Boundary integrals use the trapezoid rule. Close to the circle the data
/// is first trigonometrically interpolated onto a finer boundary grid so
/// that the rule keeps its geometric convergence.
pub struct CauchyOperator {
    radius: f64,
    margin: f64,
    len: usize,
    labels: Vec<i64>,
    levels: Vec<Level>,
    tail: f64,
}

impl CauchyOperator {
    /// Operator with the default margin `0.1·radius`.
    pub fn new(seq: &BoundarySeq) -> Self {
        Self::with_margin(seq, DEFAULT_MARGIN_FRACTION * seq.radius)
    }

    pub fn with_margin(seq: &BoundarySeq, margin: f64) -> Self {
        let len = seq.len();
        let m = seq.m;
        let comps: Vec<Vec<Complex64>> = (0..len).map(|k| seq.component(k)).collect();
        let mut levels = Vec::new();
        let mut factor = 1;
        while factor == 1 || m * factor <= MAX_UPSAMPLED_NODES {
            let mf = m * factor;
            let up: Vec<Vec<Complex64>> = comps.iter().map(|c| spectral::upsample(c, factor)).collect();
            let mut data = vec![ZERO; mf * len];
            for (k, c) in up.iter().enumerate() {
                for (i, v) in c.iter().enumerate() {
                    data[i * len + k] = *v;
                }
            }
            let zeta = (0..mf).map(|i| Complex64::from_polar(seq.radius, 2.0 * PI * i as f64 / mf as f64)).collect();
            levels.push(Level { zeta, data });
            factor *= 2;
        }
        let tail = if len == 0 { 0.0 } else { comps[len - 1].iter().fold(0.0f64, |a, v| a.max(v.norm())) };
        CauchyOperator { radius: seq.radius, margin, len, labels: seq.labels.clone(), levels, tail }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    /// Largest magnitude of the last retained boundary component, a proxy
    /// for the first term dropped by truncating the `j`-sums.
    pub fn tail_estimate(&self) -> f64 {
        self.tail
    }

    fn check(&self, z: Point) -> Result<()> {
        let dist = self.radius - z.norm();
        if dist < self.margin - 1e-12 * self.radius {
            return Err(Error::Margin { distance: dist, margin: self.margin });
        }
        Ok(())
    }

    fn level_for(&self, z: Point) -> &Level {
        let rho = z.norm() / self.radius;
        if rho < 1e-12 {
            return &self.levels[0];
        }
        let width = -rho.ln();
        let target = 40.0 + 2.0 * self.len as f64;
        for lvl in &self.levels {
            if lvl.zeta.len() as f64 * width >= target {
                return lvl;
            }
        }
        self.levels.last().expect("at least one level")
    }

    /// `⟨(Bc)_0(z), (Bc)_1(z), …⟩`.
    pub fn eval(&self, z: Point) -> Result<Vec<Complex64>> {
        self.check(z)?;
        let lvl = self.level_for(z);
        let zc = z.to_complex();
        let l = self.len;
        let mut out = vec![ZERO; l];
        let mut s = vec![ZERO; l + 1];
        for (i, &zeta) in lvl.zeta.iter().enumerate() {
            let w = zeta - zc;
            let winv = w.inv();
            let r = w.conj() * winv;
            let c = &lvl.data[i * l..(i + 1) * l];
            for k in (0..l).rev() {
                s[k] = c[k] + r * s[k + 1];
            }
            let zb = zeta.conj();
            for k in 0..l {
                out[k] += (zeta * s[k] + zb * s[k + 1]) * winv;
            }
        }
        let scale = 1.0 / lvl.zeta.len() as f64;
        out.iter_mut().for_each(|v| *v *= scale);
        Ok(out)
    }

    /// Value, `∂`, `∂̄` and `∂∂̄` of every component.
    pub fn jet(&self, z: Point) -> Result<Jet> {
        self.check(z)?;
        Ok(self.jet_unchecked(z))
    }

    /// Like [`jet`](Self::jet) with the margin test replaced by `|z| < radius`.
    pub fn jet_near_boundary(&self, z: Point) -> Result<Jet> {
        let dist = self.radius - z.norm();
        if !(dist > 0.0) {
            return Err(Error::Margin { distance: dist, margin: 0.0 });
        }
        Ok(self.jet_unchecked(z))
    }

    fn jet_unchecked(&self, z: Point) -> Jet {
        let lvl = self.level_for(z);
        let zc = z.to_complex();
        let l = self.len;
        let mut value = vec![ZERO; l];
        let mut dz = vec![ZERO; l];
        let mut dzbar = vec![ZERO; l];
        let mut lap = vec![ZERO; l];
        let mut dzdz = vec![ZERO; l];
        let mut s = vec![ZERO; l + 2];
        let mut t = vec![ZERO; l + 2];
        let mut u = vec![ZERO; l + 2];
        for (i, &zeta) in lvl.zeta.iter().enumerate() {
            let w = zeta - zc;
            let w1 = w.inv();
            let w2 = w1 * w1;
            let w3 = w2 * w1;
            let r = w.conj() * w1;
            let c = &lvl.data[i * l..(i + 1) * l];
            for k in (0..l).rev() {
                s[k] = c[k] + r * s[k + 1];
                t[k] = s[k] + r * t[k + 1];
                u[k] = t[k] * 2.0 + r * u[k + 1];
            }
            let zb = zeta.conj();
            for k in 0..l {
                value[k] += (zeta * s[k] + zb * s[k + 1]) * w1;
                dz[k] += (zeta * t[k] + zb * t[k + 1]) * w2;
                dzbar[k] -= (zeta * t[k + 1] + zb * t[k + 2]) * w2;
                lap[k] -= (zeta * u[k + 1] + zb * u[k + 2]) * w3;
                dzdz[k] += (zeta * u[k] + zb * u[k + 1]) * w3;
            }
        }
        let scale = 1.0 / lvl.zeta.len() as f64;
        for v in [&mut value, &mut dz, &mut dzbar, &mut lap, &mut dzdz] {
            v.iter_mut().for_each(|x| *x *= scale);
        }
        Jet { value, dz, dzbar, dzdzbar: lap, dzdz }
    }

    /// Evaluate on every grid node with `|z| ≤ radius − margin`.
    pub fn on_grid(&self, grid: CartesianGrid) -> SequenceField {
        let valid = grid.disk_mask(self.radius - self.margin);
        let vals: Vec<Vec<Complex64>> = (0..grid.len())
            .into_par_iter()
            .map(|idx| if valid[idx] { self.eval(grid.node(idx)).expect("inside margin") } else { vec![ZERO; self.len] })
            .collect();
        SequenceField::from_points(grid, valid, self.labels.clone(), self.margin, &vals)
    }

    /// Jets on every grid node with `|z| ≤ radius − margin`, one
    /// [`SequenceField`] per derivative.
    pub fn jets_on_grid(&self, grid: CartesianGrid) -> SequenceJet {
        let valid = grid.disk_mask(self.radius - self.margin);
        let jets: Vec<Option<Jet>> = (0..grid.len())
            .into_par_iter()
            .map(|idx| valid[idx].then(|| self.jet_unchecked(grid.node(idx))))
            .collect();
        let pick = |f: &dyn Fn(&Jet) -> &Vec<Complex64>| -> SequenceField {
            let vals: Vec<Vec<Complex64>> =
                jets.iter().map(|j| j.as_ref().map_or_else(|| vec![ZERO; self.len], |j| f(j).clone())).collect();
            SequenceField::from_points(grid, valid.clone(), self.labels.clone(), self.margin, &vals)
        };
        SequenceJet {
            value: pick(&|j| &j.value),
            dz: pick(&|j| &j.dz),
            dzbar: pick(&|j| &j.dzbar),
            dzdzbar: pick(&|j| &j.dzdzbar),
            dzdz: pick(&|j| &j.dzdz),
        }
    }
}

/// `⟨(Bc)_k(z)⟩` for a boundary sequence at one interior point.
pub fn bukhgeim_cauchy(seq: &BoundarySeq, z: Point) -> Result<Vec<Complex64>> {
    CauchyOperator::new(seq).eval(z)
}

/// Sequence-valued field on the interior grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceField {
    pub grid: CartesianGrid,
    pub valid: Vec<bool>,
    pub labels: Vec<i64>,
    pub margin: f64,
    /// `comps[k][node]`
    pub comps: Vec<Vec<Complex64>>,
}

/// Values and derivative fields of a sequence map.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceJet {
    pub value: SequenceField,
    pub dz: SequenceField,
    pub dzbar: SequenceField,
    pub dzdzbar: SequenceField,
    pub dzdz: SequenceField,
}

impl SequenceField {
    pub fn zeros(grid: CartesianGrid, valid: Vec<bool>, labels: Vec<i64>, margin: f64) -> Self {
        let comps = vec![vec![ZERO; grid.len()]; labels.len()];
        SequenceField { grid, valid, labels, margin, comps }
    }

    fn from_points(grid: CartesianGrid, valid: Vec<bool>, labels: Vec<i64>, margin: f64, vals: &[Vec<Complex64>]) -> Self {
        let mut sf = SequenceField::zeros(grid, valid, labels, margin);
        for (idx, v) in vals.iter().enumerate() {
            for (k, x) in v.iter().enumerate() {
                sf.comps[k][idx] = *x;
            }
        }
        sf
    }

    pub fn len(&self) -> usize {
        self.comps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.comps.is_empty()
    }

    pub fn component(&self, k: usize) -> GridField {
        GridField { grid: self.grid, values: self.comps[k].clone(), valid: self.valid.clone() }
    }

    pub fn shift_left(&self) -> Result<SequenceField> {
        Ok(SequenceField { comps: shift_left(&self.comps)?, labels: shift_left(&self.labels)?, ..self.clone() })
    }

    pub fn all_finite(&self) -> bool {
        self.comps.iter().flatten().zip(self.valid.iter().cycle()).all(|(v, _)| v.re.is_finite() && v.im.is_finite())
    }

    pub fn sup_norm(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter().zip(&self.valid).filter(|(_, &ok)| ok).map(|(v, _)| v.norm()))
            .fold(0.0, f64::max)
    }
}

/// `sup |∂̄u_k + ∂u_{k+1}|` over components and grid nodes, with `∂`, `∂̄`
/// by central differences.
pub fn l_analytic_residual(sf: &SequenceField) -> Result<f64> {
    if sf.len() < 2 {
        return Err(Error::Config("L-analyticity needs at least two components".into()));
    }
    let derivs: Vec<(GridField, GridField)> = (0..sf.len()).map(|k| sf.component(k).cauchy_riemann()).collect();
    let mut worst = 0.0f64;
    let mut tested = 0usize;
    for k in 0..sf.len() - 1 {
        let dbar = &derivs[k].1;
        let d = &derivs[k + 1].0;
        for idx in 0..sf.grid.len() {
            if dbar.valid[idx] && d.valid[idx] {
                worst = worst.max((dbar.values[idx] + d.values[idx]).norm());
                tested += 1;
            }
        }
    }
    if tested == 0 {
        return Err(Error::Config("grid too coarse: no node has all four neighbours inside the margin".into()));
    }
    Ok(worst)
}

/// Boundary Hilbert transform at node `xi`: `⟨(Hc)_k(ξ)⟩`.
pub fn hilbert(seq: &BoundarySeq, xi: usize) -> Result<Vec<Complex64>> {
    let m = seq.m;
    if m % 2 != 0 {
        return Err(Error::Config(format!("the PV rule needs an even boundary grid, got M = {m}")));
    }
    if xi >= m {
        return Err(Error::Shape(format!("node {xi} outside a boundary grid of {m}")));
    }
    Ok(hilbert_at(seq, xi))
}

fn hilbert_at(seq: &BoundarySeq, xi: usize) -> Vec<Complex64> {
    let m = seq.m;
    let l = seq.len();
    let mut pv = vec![ZERO; l];
    let mut mean = vec![ZERO; l];
    let mut smooth = vec![ZERO; l];
    let s0 = 2.0 * PI * xi as f64 / m as f64;
    let mut s = vec![ZERO; l + 1];
    for i in 0..m {
        let c = seq.at(i);
        let si = 2.0 * PI * i as f64 / m as f64;
        if (i + m - xi) % 2 == 1 {
            let cot = 1.0 / ((si - s0) / 2.0).tan();
            for k in 0..l {
                pv[k] += c[k] * cot;
            }
        }
        let r = -Complex64::from_polar(1.0, -(si + s0));
        s[l] = ZERO;
        for k in (0..l).rev() {
            s[k] = c[k] + r * s[k + 1];
        }
        for k in 0..l {
            mean[k] += c[k];
            smooth[k] += r * s[k + 1];
        }
    }
    let mf = m as f64;
    (0..l).map(|k| pv[k] * (2.0 / mf) + Complex64::i() * (mean[k] / mf + smooth[k] * (2.0 / mf))).collect()
}

/// `(I + iH)c` at every node, together with its summary.
#[derive(Debug, Clone)]
pub struct RangeResidual {
    /// `values[i·len + k]`
    pub values: Vec<Complex64>,
    pub report: RangeReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeReport {
    pub role: String,
    pub boundary_nodes: usize,
    pub components: usize,
    pub labels: Vec<i64>,
    pub sup: f64,
    pub per_component: Vec<f64>,
    /// sup norm of the input sequence, for scale
    pub data_sup: f64,
}

pub fn range_residual(seq: &BoundarySeq) -> Result<RangeResidual> {
    let m = seq.m;
    if m % 2 != 0 {
        return Err(Error::Config(format!("the PV rule needs an even boundary grid, got M = {m}")));
    }
    let l = seq.len();
    let rows: Vec<Vec<Complex64>> = (0..m)
        .into_par_iter()
        .map(|xi| {
            let h = hilbert_at(seq, xi);
            let c = seq.at(xi);
            (0..l).map(|k| c[k] + Complex64::i() * h[k]).collect()
        })
        .collect();
    let values: Vec<Complex64> = rows.into_iter().flatten().collect();
    let mut per_component = vec![0.0f64; l];
    for (idx, v) in values.iter().enumerate() {
        let k = idx % l.max(1);
        per_component[k] = per_component[k].max(v.norm());
    }
    let sup = per_component.iter().fold(0.0f64, |a, &b| a.max(b));
    let role = serde_json::to_value(seq.role).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
    Ok(RangeResidual {
        values,
        report: RangeReport {
            role,
            boundary_nodes: m,
            components: l,
            labels: seq.labels.clone(),
            sup,
            per_component,
            data_sup: seq.sup_norm(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::SeqRole;

    fn seq_from(m: usize, len: usize, f: impl Fn(Complex64, usize) -> Complex64) -> BoundarySeq {
        let comps: Vec<Vec<Complex64>> = (0..len)
            .map(|k| (0..m).map(|i| f(Complex64::from_polar(1.0, 2.0 * PI * i as f64 / m as f64), k)).collect())
            .collect();
        BoundarySeq::from_components(1.0, SeqRole::Custom, (0..len as i64).map(|k| -1 - k).collect(), &comps).unwrap()
    }

    /// Trace of the L-analytic map `⟨z̄, −z, 0, …⟩` plus a holomorphic
    /// first component and an `L`-analytic pair further down.
    fn analytic_trace(m: usize) -> BoundarySeq {
        seq_from(m, 6, |z, k| match k {
            0 => z.conj() + z * z,
            1 => -z,
            3 => z.conj() * z.conj() + Complex64::new(0.5, 0.0),
            4 => -z * z.conj() * 2.0,
            5 => z * z,
            _ => ZERO,
        })
    }

    fn analytic_value(z: Complex64) -> Vec<Complex64> {
        vec![
            z.conj() + z * z,
            -z,
            ZERO,
            z.conj() * z.conj() + Complex64::new(0.5, 0.0),
            -z * z.conj() * 2.0,
            z * z,
        ]
    }

    #[test]
    fn shift_examples() {
        assert_eq!(shift_left(&[1, 2, 3]).unwrap(), vec![2, 3]);
        assert_eq!(shift_left(&[0.0, 0.0]).unwrap(), vec![0.0]);
        assert!(shift_left(&[1]).is_err());
    }

    #[test]
    fn cauchy_of_zero_and_constant() {
        let zero = seq_from(64, 4, |_, _| ZERO);
        let c = Complex64::new(0.7, -1.3);
        let cst = seq_from(64, 4, |_, k| if k == 0 { c } else { ZERO });
        for z in [Point::ORIGIN, Point::new(0.3, -0.5), Point::new(-0.1, 0.85)] {
            assert!(bukhgeim_cauchy(&zero, z).unwrap().iter().all(|v| *v == ZERO));
            let v = bukhgeim_cauchy(&cst, z).unwrap();
            assert!((v[0] - c).norm() < 1e-13);
            assert!(v[1..].iter().all(|x| x.norm() < 1e-13));
        }
    }

    #[test]
    fn cauchy_reproduces_l_analytic_maps() {
        let seq = analytic_trace(128);
        let op = CauchyOperator::new(&seq);
        for z in [Point::new(0.2, 0.1), Point::new(-0.6, 0.3), Point::new(0.0, -0.88)] {
            let v = op.eval(z).unwrap();
            let exact = analytic_value(z.to_complex());
            for k in 0..6 {
                assert!((v[k] - exact[k]).norm() < 1e-11, "k={k} {} vs {}", v[k], exact[k]);
            }
        }
    }

    #[test]
    fn conjugate_trace_matches_refined_grid() {
        // ⟨ζ̄, 0, …⟩ alone is not a trace; compare M and 4M evaluations
        let coarse = seq_from(64, 3, |z, k| if k == 0 { z.conj() } else { ZERO });
        let fine = seq_from(256, 3, |z, k| if k == 0 { z.conj() } else { ZERO });
        for z in [Point::new(0.25, 0.4), Point::new(-0.7, -0.2)] {
            let a = bukhgeim_cauchy(&coarse, z).unwrap();
            let b = bukhgeim_cauchy(&fine, z).unwrap();
            for k in 0..3 {
                assert!((a[k] - b[k]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn near_boundary_upsampling_matches_refinement() {
        let smooth = |z: Complex64, k: usize| {
            let e = (z * 0.8).exp();
            e * Complex64::new(1.0 / (1.0 + k as f64), 0.3) + z.conj().powi(k as i32 + 1)
        };
        let coarse = seq_from(128, 8, smooth);
        let fine = seq_from(512, 8, smooth);
        let a = CauchyOperator::with_margin(&coarse, 0.004);
        let b = CauchyOperator::with_margin(&fine, 0.004);
        for z in [Point::unit(0.3) * 0.995, Point::unit(2.0) * 0.95, Point::unit(-1.0) * 0.9] {
            let ja = a.jet(z).unwrap();
            let jb = b.jet(z).unwrap();
            for k in 0..8 {
                assert!((ja.value[k] - jb.value[k]).norm() < 1e-9, "value k={k}");
                assert!((ja.dz[k] - jb.dz[k]).norm() < 1e-7, "dz k={k}");
            }
        }
    }

    #[test]
    fn margin_is_enforced() {
        let seq = seq_from(64, 3, |_, _| ZERO);
        assert!(matches!(bukhgeim_cauchy(&seq, Point::new(0.95, 0.0)), Err(Error::Margin { .. })));
    }

    #[test]
    fn jet_derivatives_match_finite_differences() {
        let seq = seq_from(128, 7, |z, k| (z * (k as f64 + 1.0) * 0.3).sin() + z.conj().powi(k as i32));
        let op = CauchyOperator::new(&seq);
        let z = Point::new(0.31, -0.42);
        let j = op.jet(z).unwrap();
        let h = 1e-4;
        let ex = op.eval(z + Point::new(h, 0.0)).unwrap();
        let wx = op.eval(z - Point::new(h, 0.0)).unwrap();
        let ny = op.eval(z + Point::new(0.0, h)).unwrap();
        let sy = op.eval(z - Point::new(0.0, h)).unwrap();
        for k in 0..7 {
            let dx = (ex[k] - wx[k]) / (2.0 * h);
            let dy = (ny[k] - sy[k]) / (2.0 * h);
            let d = (dx - Complex64::i() * dy) * 0.5;
            let db = (dx + Complex64::i() * dy) * 0.5;
            let lap = (ex[k] + wx[k] + ny[k] + sy[k] - j.value[k] * 4.0) / (4.0 * h * h);
            assert!((d - j.dz[k]).norm() < 1e-7);
            assert!((db - j.dzbar[k]).norm() < 1e-7);
            assert!((lap - j.dzdzbar[k]).norm() < 1e-4);
            if k + 1 < 7 {
                // exact L-analyticity of the truncated operator
                assert!((j.dzbar[k] + j.dz[k + 1]).norm() < 1e-12);
            }
        }
        let jx = [op.jet(z + Point::new(h, 0.0)).unwrap(), op.jet(z - Point::new(h, 0.0)).unwrap()];
        let jy = [op.jet(z + Point::new(0.0, h)).unwrap(), op.jet(z - Point::new(0.0, h)).unwrap()];
        for k in 0..7 {
            let dx = (jx[0].dz[k] - jx[1].dz[k]) / (2.0 * h);
            let dy = (jy[0].dz[k] - jy[1].dz[k]) / (2.0 * h);
            assert!(((dx - Complex64::i() * dy) * 0.5 - j.dzdz[k]).norm() < 1e-6);
            assert!(((dx + Complex64::i() * dy) * 0.5 - j.dzdzbar[k]).norm() < 1e-6);
        }
    }

    #[test]
    fn l_analytic_residual_examples() {
        let grid = CartesianGrid::covering(0.05, 1.0).unwrap();
        let valid = grid.disk_mask(0.9);
        let labels = vec![-1, -2, -3];
        let mut sf = SequenceField::zeros(grid, valid.clone(), labels.clone(), 0.1);
        for c in sf.comps.iter_mut() {
            c.iter_mut().for_each(|v| *v = Complex64::new(2.0, 1.0));
        }
        assert!(l_analytic_residual(&sf).unwrap() < 1e-14);
        let mut sf = SequenceField::zeros(grid, valid, labels, 0.1);
        for idx in 0..grid.len() {
            sf.comps[0][idx] = grid.node(idx).to_complex().conj();
        }
        assert!((l_analytic_residual(&sf).unwrap() - 1.0).abs() < 1e-12);
        let coarse = CartesianGrid::covering(0.5, 1.0).unwrap();
        let sf = SequenceField::zeros(coarse, coarse.disk_mask(0.4), vec![-1, -2], 0.1);
        assert!(matches!(l_analytic_residual(&sf), Err(Error::Config(_))));
    }

    #[test]
    fn hilbert_examples() {
        let zero = seq_from(64, 4, |_, _| ZERO);
        assert_eq!(range_residual(&zero).unwrap().report.sup, 0.0);
        let one = seq_from(64, 4, |_, k| if k == 0 { Complex64::new(1.0, 0.0) } else { ZERO });
        for xi in [0, 5, 63] {
            let h = hilbert(&one, xi).unwrap();
            assert!((h[0] - Complex64::i()).norm() < 1e-13);
        }
        assert!(range_residual(&one).unwrap().report.sup < 1e-13);
    }

    #[test]
    fn pv_rule_on_fourier_modes() {
        // (1/2π) PV∫ e^{ins} cot((s−s₀)/2) ds = i·sgn(n) e^{ins₀}
        let m = 32;
        for n in -15..=15i32 {
            let seq = seq_from(m, 1, |z, _| z.powi(n));
            for xi in [0, 7] {
                let h = hilbert(&seq, xi).unwrap()[0];
                let s0 = 2.0 * PI * xi as f64 / m as f64;
                let e = Complex64::from_polar(1.0, n as f64 * s0);
                let mean = if n == 0 { Complex64::i() } else { ZERO };
                let expect = Complex64::i() * (n.signum() as f64) * e + mean;
                assert!((h - expect).norm() < 1e-12, "n={n}");
            }
        }
    }

    #[test]
    fn traces_of_l_analytic_maps_have_zero_residual() {
        let res = range_residual(&analytic_trace(128)).unwrap();
        assert!(res.report.sup < 1e-12, "{}", res.report.sup);
        // a lone conjugate is not a trace
        let bad = seq_from(128, 3, |z, k| if k == 0 { z.conj() } else { ZERO });
        assert!(range_residual(&bad).unwrap().report.sup > 0.5);
    }

    #[test]
    fn hilbert_is_linear() {
        let a = analytic_trace(64);
        let b = seq_from(64, 6, |z, k| z.powi(k as i32 - 2) * 0.3);
        let alpha = Complex64::new(0.4, -2.0);
        let combo = BoundarySeq::new(
            64,
            1.0,
            SeqRole::Custom,
            a.labels.clone(),
            a.data().iter().zip(b.data()).map(|(x, y)| alpha * x + y).collect(),
        )
        .unwrap();
        for xi in [0, 9] {
            let ha = hilbert(&a, xi).unwrap();
            let hb = hilbert(&b, xi).unwrap();
            let hc = hilbert(&combo, xi).unwrap();
            for k in 0..6 {
                assert!((hc[k] - (alpha * ha[k] + hb[k])).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn odd_boundary_grid_is_rejected() {
        let seq = BoundarySeq::new(9, 1.0, SeqRole::Custom, vec![-1], vec![ZERO; 9]).unwrap();
        assert!(matches!(hilbert(&seq, 0), Err(Error::Config(_))));
    }
}
