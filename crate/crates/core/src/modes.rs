//! Angular Fourier analysis of fan data and the boundary sequences fed to
//! the A-analytic machinery.

use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attenuation::AttenuationPack;
use crate::error::{Error, Result};
use crate::io;
use crate::spectral;
use crate::transport::FanData;

pub const DEFAULT_TRUNCATION: usize = 24;

/// Where a set of angular modes came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Plain,
    OddExtended,
    Attenuated,
}

impl Provenance {
    fn as_str(self) -> &'static str {
        match self {
            Provenance::Plain => "plain",
            Provenance::OddExtended => "odd_extended",
            Provenance::Attenuated => "attenuated",
        }
    }

    fn parse(s: &str, line: usize) -> Result<Self> {
        match s.trim() {
            "plain" => Ok(Provenance::Plain),
            "odd_extended" => Ok(Provenance::OddExtended),
            "attenuated" => Ok(Provenance::Attenuated),
            other => Err(Error::Parse { line, msg: format!("unknown provenance {other:?}") }),
        }
    }
}

/// Angular modes `g_n(ζ_i)`, `|n| ≤ N`, normalized so `g = Σ g_n e^{inφ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSequences {
    pub m: usize,
    pub n_max: usize,
    pub radius: f64,
    pub provenance: Provenance,
    data: Vec<Complex64>,
}

impl ModeSequences {
    pub fn zeros(m: usize, n_max: usize, radius: f64, provenance: Provenance) -> Self {
        ModeSequences { m, n_max, radius, provenance, data: vec![Complex64::new(0.0, 0.0); m * (2 * n_max + 1)] }
    }

    fn width(&self) -> usize {
        2 * self.n_max + 1
    }

    /// Mode `n` at boundary node `i`; zero outside the truncation.
    pub fn get(&self, i: usize, n: i64) -> Complex64 {
        if n.unsigned_abs() as usize > self.n_max {
            return Complex64::new(0.0, 0.0);
        }
        self.data[i * self.width() + (n + self.n_max as i64) as usize]
    }

    pub fn set(&mut self, i: usize, n: i64, v: Complex64) {
        let w = self.width();
        self.data[i * w + (n + self.n_max as i64) as usize] = v;
    }

    /// Mode `n` at every boundary node.
    pub fn trace(&self, n: i64) -> Vec<Complex64> {
        (0..self.m).map(|i| self.get(i, n)).collect()
    }

    /// `max_{i,n} |g_{−n} − conj(g_n)|`.
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.m {
            for n in 0..=self.n_max as i64 {
                worst = worst.max((self.get(i, -n) - self.get(i, n).conj()).norm());
            }
        }
        worst
    }

    pub fn decay(&self) -> DecayDiagnostics {
        let mut l11 = 0.0f64;
        let mut l12 = 0.0f64;
        let mut tail = 0.0f64;
        for i in 0..self.m {
            let mut s1 = 0.0;
            let mut s2 = 0.0;
            for j in 1..=self.n_max {
                let v = self.get(i, -(j as i64)).norm();
                s1 += j as f64 * v;
                s2 += (j * j) as f64 * v;
            }
            l11 = l11.max(s1);
            l12 = l12.max(s2);
            tail = tail.max(self.get(i, -(self.n_max as i64)).norm());
        }
        DecayDiagnostics { l11, l12, tail }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        s.push_str("# tensoray angular modes v1\n");
        s.push_str("M,N,radius,provenance\n");
        s.push_str(&format!("{},{},{},{}\n", self.m, self.n_max, io::fmt_f64(self.radius), self.provenance.as_str()));
        s.push_str("i,n,re,im\n");
        for i in 0..self.m {
            for n in -(self.n_max as i64)..=self.n_max as i64 {
                let v = self.get(i, n);
                s.push_str(&format!("{i},{n},{},{}\n", io::fmt_f64(v.re), io::fmt_f64(v.im)));
            }
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(n, l)| (n + 1, l)).filter(|(_, l)| !l.starts_with('#'));
        let mut next = |what: &str| lines.next().ok_or_else(|| Error::Parse { line: 0, msg: format!("missing {what}") });
        let (ln, hdr) = next("metadata header")?;
        if hdr.trim() != "M,N,radius,provenance" {
            return Err(Error::Parse { line: ln, msg: format!("unexpected header {hdr:?}") });
        }
        let (ln, meta) = next("metadata row")?;
        let f: Vec<&str> = meta.split(',').collect();
        if f.len() != 4 {
            return Err(Error::Parse { line: ln, msg: "metadata row needs 4 fields".into() });
        }
        let m = io::parse_usize(f[0], ln)?;
        let n_max = io::parse_usize(f[1], ln)?;
        let radius = io::parse_f64(f[2], ln)?;
        let provenance = Provenance::parse(f[3], ln)?;
        let (ln, cols) = next("column header")?;
        if cols.trim() != "i,n,re,im" {
            return Err(Error::Parse { line: ln, msg: format!("unexpected column header {cols:?}") });
        }
        let mut ms = ModeSequences::zeros(m, n_max, radius, provenance);
        let mut seen = 0;
        for (ln, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(Error::Parse { line: ln, msg: format!("expected 4 fields, got {}", f.len()) });
            }
            let i = io::parse_usize(f[0], ln)?;
            let n: i64 = f[1].trim().parse().map_err(|e| Error::Parse { line: ln, msg: format!("bad mode index: {e}") })?;
            if i >= m || n.unsigned_abs() as usize > n_max {
                return Err(Error::Parse { line: ln, msg: format!("index ({i}, {n}) out of range") });
            }
            ms.set(i, n, Complex64::new(io::parse_f64(f[2], ln)?, io::parse_f64(f[3], ln)?));
            seen += 1;
        }
        if seen != m * (2 * n_max + 1) {
            return Err(Error::Parse { line: 0, msg: format!("expected {} modes, got {seen}", m * (2 * n_max + 1)) });
        }
        Ok(ms)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        io::write_atomic(path, self.to_csv().as_bytes())
    }
}

/// Finite-grid stand-ins for the weighted `l¹` norms of the negative modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayDiagnostics {
    /// `max_i Σ_j j |g_{−j}|`
    pub l11: f64,
    /// `max_i Σ_j j² |g_{−j}|`
    pub l12: f64,
    /// `max_i |g_{−N}|`
    pub tail: f64,
}

/// Role of a boundary sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeqRole {
    Even,
    Odd,
    OddExtended,
    Attenuated,
    AttenuatedEven,
    AttenuatedOdd,
    Custom,
}

/// Per-node sequence `⟨c_0, c_1, …⟩` on the boundary grid. `labels[k]` is
/// the angular mode index component `k` was taken from.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySeq {
    pub m: usize,
    pub radius: f64,
    pub role: SeqRole,
    pub labels: Vec<i64>,
    data: Vec<Complex64>,
}

impl BoundarySeq {
    pub fn new(m: usize, radius: f64, role: SeqRole, labels: Vec<i64>, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != m * labels.len() {
            return Err(Error::Shape(format!(
                "sequence data has {} entries, expected {} nodes × {} components",
                data.len(),
                m,
                labels.len()
            )));
        }
        Ok(BoundarySeq { m, radius, role, labels, data })
    }

    /// Sequence built from per-component traces.
    pub fn from_components(radius: f64, role: SeqRole, labels: Vec<i64>, comps: &[Vec<Complex64>]) -> Result<Self> {
        let m = comps.first().map_or(0, |c| c.len());
        if comps.len() != labels.len() || comps.iter().any(|c| c.len() != m) {
            return Err(Error::Shape("components must share one boundary grid".into()));
        }
        let len = comps.len();
        let mut data = vec![Complex64::new(0.0, 0.0); m * len];
        for (k, c) in comps.iter().enumerate() {
            for (i, v) in c.iter().enumerate() {
                data[i * len + k] = *v;
            }
        }
        BoundarySeq::new(m, radius, role, labels, data)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn at(&self, i: usize) -> &[Complex64] {
        let l = self.len();
        &self.data[i * l..(i + 1) * l]
    }

    pub fn component(&self, k: usize) -> Vec<Complex64> {
        (0..self.m).map(|i| self.at(i)[k]).collect()
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> BoundarySeq {
        BoundarySeq { data: self.data.iter().map(|&v| f(v)).collect(), ..self.clone() }
    }

    pub fn sup_norm(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// `max_i Σ_k (k+1)^p |c_k|`, the weighted `l¹` diagnostic.
    pub fn weighted_l1(&self, p: i32) -> f64 {
        (0..self.m)
            .map(|i| self.at(i).iter().enumerate().map(|(k, v)| ((k + 1) as f64).powi(p) * v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Hölder-type seminorm estimate `max |c(ζ_i) − c(ζ_l)|_{l¹} / |ζ_i − ζ_l|^α`
    /// over neighbouring node pairs up to distance `M/8`.
    pub fn holder_estimate(&self, alpha: f64) -> f64 {
        let mut worst = 0.0f64;
        let reach = (self.m / 8).max(1);
        for i in 0..self.m {
            for d in 1..=reach {
                let l = (i + d) % self.m;
                let diff: f64 = self.at(i).iter().zip(self.at(l)).map(|(a, b)| (a - b).norm()).sum();
                let chord = 2.0 * self.radius * (std::f64::consts::PI * d as f64 / self.m as f64).sin();
                worst = worst.max(diff / chord.powf(alpha));
            }
        }
        worst
    }
}

/// Per-node angular DFT of the fan, keeping `|n| ≤ N`.
pub fn angular_modes(fan: &FanData, n_max: usize) -> Result<ModeSequences> {
    modes_of_rows(fan.m, fan.k, fan.radius, n_max, Provenance::Plain, |i| {
        fan.row(i).iter().map(|&v| Complex64::new(v, 0.0)).collect()
    })
}

fn modes_of_rows(
    m: usize,
    k: usize,
    radius: f64,
    n_max: usize,
    provenance: Provenance,
    row: impl Fn(usize) -> Vec<Complex64> + Sync,
) -> Result<ModeSequences> {
    if k < 2 * n_max + 2 {
        return Err(Error::Config(format!("K = {k} is too small for N = {n_max} (need K >= 2N + 2)")));
    }
    let rows: Vec<Vec<Complex64>> = (0..m).into_par_iter().map(|i| spectral::analyze(&row(i))).collect();
    let mut ms = ModeSequences::zeros(m, n_max, radius, provenance);
    for (i, c) in rows.iter().enumerate() {
        for n in -(n_max as i64)..=n_max as i64 {
            ms.set(i, n, c[n.rem_euclid(k as i64) as usize]);
        }
    }
    Ok(ms)
}

/// Real fan `Σ_{|n|≤N} g_n e^{inφ_j}` on `K` angles.
pub fn synthesis(ms: &ModeSequences, k: usize) -> Result<FanData> {
    if k < 2 * ms.n_max + 1 {
        return Err(Error::Config(format!("K = {k} cannot represent N = {}", ms.n_max)));
    }
    let mut values = Vec::with_capacity(ms.m * k);
    for i in 0..ms.m {
        let mut c = vec![Complex64::new(0.0, 0.0); k];
        for n in -(ms.n_max as i64)..=ms.n_max as i64 {
            c[n.rem_euclid(k as i64) as usize] += ms.get(i, n);
        }
        values.extend(spectral::synthesize(&c).into_iter().map(|v| v.re));
    }
    Ok(FanData { m: ms.m, k, radius: ms.radius, attenuation: None, values })
}

fn collect(ms: &ModeSequences, labels: Vec<i64>, role: SeqRole) -> BoundarySeq {
    let comps: Vec<Vec<Complex64>> = labels.iter().map(|&n| ms.trace(n)).collect();
    BoundarySeq::from_components(ms.radius, role, labels, &comps).expect("traces share the boundary grid")
}

fn labels(start: i64, end: i64) -> Vec<i64> {
    (end..=start).rev().step_by(2).collect()
}

/// `⟨g_0, g_{−2}, g_{−4}, …⟩`.
pub fn build_even(ms: &ModeSequences) -> Result<BoundarySeq> {
    check_truncation(ms)?;
    Ok(collect(ms, labels(0, -(ms.n_max as i64)), SeqRole::Even))
}

/// `⟨g_{−3}, g_{−5}, …⟩`; `g_{−1}` is not part of it.
pub fn build_odd(ms: &ModeSequences) -> Result<BoundarySeq> {
    check_truncation(ms)?;
    Ok(collect(ms, labels(-3, -(ms.n_max as i64)), SeqRole::Odd))
}

fn check_truncation(ms: &ModeSequences) -> Result<()> {
    if ms.n_max < 4 {
        return Err(Error::Config(format!("truncation N = {} too small, need N >= 4", ms.n_max)));
    }
    Ok(())
}

/// `g̃(z, θ) = (g(z, θ) − g(z, −θ))/2`.
pub fn odd_extension(fan: &FanData) -> Result<FanData> {
    if fan.k % 2 != 0 {
        return Err(Error::Config(format!("odd extension needs an even angle count, got K = {}", fan.k)));
    }
    let half = fan.k / 2;
    let mut out = fan.clone();
    for i in 0..fan.m {
        for j in 0..fan.k {
            out.set(i, j, 0.5 * (fan.get(i, j) - fan.get(i, (j + half) % fan.k)));
        }
    }
    Ok(out)
}

/// Odd modes of the odd extension together with `⟨g̃_{−3}, g̃_{−5}, …⟩`.
pub fn gtilde_modes(fan: &FanData, n_max: usize) -> Result<(ModeSequences, BoundarySeq)> {
    let ext = odd_extension(fan)?;
    let mut ms = angular_modes(&ext, n_max)?;
    ms.provenance = Provenance::OddExtended;
    check_truncation(&ms)?;
    let seq = collect(&ms, labels(-3, -(n_max as i64)), SeqRole::OddExtended);
    Ok((ms, seq))
}

pub fn gtilde_seq(fan: &FanData, n_max: usize) -> Result<BoundarySeq> {
    Ok(gtilde_modes(fan, n_max)?.1)
}

/// Modes of `e^{−h} g` and the sequences built from them.
#[derive(Debug, Clone)]
pub struct AttenuatedModes {
    pub gamma: ModeSequences,
    /// `⟨γ_{−2}, γ_{−3}, γ_{−4}, …⟩`
    pub g_h: BoundarySeq,
    /// `⟨γ_{−2}, γ_{−4}, …⟩`
    pub even: BoundarySeq,
    /// `⟨γ_{−3}, γ_{−5}, …⟩`
    pub odd: BoundarySeq,
}

/// Attenuated data modes from the pointwise product of the fan with a
/// weight `e^{−h(ζ_i, θ_j)}` given row-major on the same grid.
pub fn attenuated_modes_with_weight(fan: &FanData, weight: &[Complex64], n_max: usize) -> Result<AttenuatedModes> {
    if weight.len() != fan.values.len() {
        return Err(Error::Shape(format!(
            "weight has {} samples but the fan has {}",
            weight.len(),
            fan.values.len()
        )));
    }
    let gamma = modes_of_rows(fan.m, fan.k, fan.radius, n_max, Provenance::Attenuated, |i| {
        let k = fan.k;
        (0..k).map(|j| weight[i * k + j] * fan.get(i, j)).collect()
    })?;
    check_truncation(&gamma)?;
    let nn = -(n_max as i64);
    let g_h = collect(&gamma, (nn..=-2).rev().collect(), SeqRole::Attenuated);
    let even = collect(&gamma, labels(-2, nn), SeqRole::AttenuatedEven);
    let odd = collect(&gamma, labels(-3, nn), SeqRole::AttenuatedOdd);
    Ok(AttenuatedModes { gamma, g_h, even, odd })
}

/// Attenuated data modes with the weight `e^{−h}` taken from `pack`.
pub fn attenuated_data_modes(fan: &FanData, pack: &AttenuationPack, n_max: usize) -> Result<AttenuatedModes> {
    if pack.m != fan.m || pack.angles() != fan.k {
        return Err(Error::Shape(format!(
            "fan grid {}x{} does not match the attenuation pack grid {}x{}",
            fan.m,
            fan.k,
            pack.m,
            pack.angles()
        )));
    }
    attenuated_modes_with_weight(fan, &pack.boundary_weight(), n_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;
    use crate::transport::angle;

    fn domain() -> Domain {
        Domain::unit(16).unwrap()
    }

    #[test]
    fn zero_fan_has_zero_modes() {
        let fan = FanData::zeros(&domain(), 64);
        let ms = angular_modes(&fan, 24).unwrap();
        assert!((0..16).all(|i| (-24..=24).all(|n| ms.get(i, n) == Complex64::new(0.0, 0.0))));
        assert_eq!(build_even(&ms).unwrap().sup_norm(), 0.0);
        assert_eq!(build_odd(&ms).unwrap().sup_norm(), 0.0);
        assert_eq!(gtilde_seq(&fan, 24).unwrap().sup_norm(), 0.0);
    }

    #[test]
    fn cosine_fan_has_two_modes() {
        let fan = FanData::from_fn(&domain(), 64, |_, j| angle(j, 64).cos());
        let ms = angular_modes(&fan, 24).unwrap();
        for i in 0..16 {
            for n in -24..=24i64 {
                let expect = if n.abs() == 1 { 0.5 } else { 0.0 };
                assert!((ms.get(i, n) - expect).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn real_fan_is_conjugate_symmetric_and_parseval_holds() {
        let fan = FanData::from_fn(&domain(), 64, |i, j| ((i * 7 + j * 3) as f64 * 0.1).sin().powi(3));
        let ms = angular_modes(&fan, 31).unwrap();
        assert!(ms.conjugate_symmetry_defect() < 1e-14);
        for i in 0..16 {
            let energy: f64 = (-31..=31).map(|n| ms.get(i, n).norm_sqr()).sum();
            let direct: f64 = fan.row(i).iter().map(|v| v * v).sum::<f64>() / 64.0;
            // the Nyquist bin is outside |n| ≤ 31
            let nyq = fan.row(i).iter().enumerate().map(|(j, v)| if j % 2 == 0 { *v } else { -v }).sum::<f64>() / 64.0;
            assert!((energy + nyq * nyq - direct).abs() < 1e-13);
        }
    }

    #[test]
    fn synthesis_inverts_analysis() {
        let d = domain();
        let fan = FanData::from_fn(&d, 64, |i, j| {
            let p = angle(j, 64);
            (i as f64).cos() + (3.0 * p).sin() * 0.5 - (7.0 * p + i as f64).cos()
        });
        let ms = angular_modes(&fan, 20).unwrap();
        let back = synthesis(&ms, 64).unwrap();
        assert!(back.values.iter().zip(&fan.values).all(|(a, b)| (a - b).abs() < 1e-13));
    }

    #[test]
    fn too_few_angles_is_a_config_error() {
        let fan = FanData::zeros(&domain(), 48);
        assert!(matches!(angular_modes(&fan, 24), Err(Error::Config(_))));
    }

    #[test]
    fn sequence_lengths_and_minus_one_exclusion() {
        let mut ms = ModeSequences::zeros(16, 24, 1.0, Provenance::Plain);
        for i in 0..16 {
            ms.set(i, -1, Complex64::new(1.0, 2.0));
        }
        let even = build_even(&ms).unwrap();
        let odd = build_odd(&ms).unwrap();
        assert_eq!(even.len(), 13);
        assert_eq!(odd.len(), 11);
        assert_eq!(even.labels[..3], [0, -2, -4]);
        assert_eq!(odd.labels[..3], [-3, -5, -7]);
        assert_eq!(*odd.labels.last().unwrap(), -23);
        assert_eq!(odd.sup_norm(), 0.0);
    }

    #[test]
    fn odd_extension_properties() {
        let d = domain();
        let fan = FanData::from_fn(&d, 32, |i, j| {
            let c = (angle(j, 32) - d.node_param(i)).cos();
            if c > 1e-9 { c * c * (1.0 + i as f64) } else { 0.0 }
        });
        let ext = odd_extension(&fan).unwrap();
        for i in 0..16 {
            for j in 0..32 {
                assert_eq!(ext.get(i, j), -ext.get(i, (j + 16) % 32));
                if fan.get(i, j) != 0.0 {
                    assert_eq!(ext.get(i, j), fan.get(i, j) / 2.0);
                }
            }
        }
        let (ms, _) = gtilde_modes(&fan, 12).unwrap();
        for i in 0..16 {
            for n in (-12..=12).step_by(2) {
                assert!(ms.get(i, n).norm() < 1e-14);
            }
        }
        let mut odd_k = FanData::zeros(&d, 8);
        odd_k.k = 7;
        odd_k.values.truncate(16 * 7);
        assert!(odd_extension(&odd_k).is_err());
    }

    #[test]
    fn unit_weight_gives_plain_modes() {
        let d = domain();
        let fan = FanData::from_fn(&d, 64, |i, j| ((i + 2 * j) as f64 * 0.3).cos());
        let w = vec![Complex64::new(1.0, 0.0); fan.values.len()];
        let att = attenuated_modes_with_weight(&fan, &w, 24).unwrap();
        let ms = angular_modes(&fan, 24).unwrap();
        for i in 0..16 {
            for n in -24..=24 {
                assert_eq!(att.gamma.get(i, n), ms.get(i, n));
            }
        }
        assert_eq!(att.g_h.labels[..3], [-2, -3, -4]);
        assert_eq!(att.even.labels[..2], [-2, -4]);
        assert_eq!(att.odd.labels[..2], [-3, -5]);
    }

    #[test]
    fn product_modes_match_convolution() {
        // weight with only nonnegative modes, fan with a handful of modes
        let d = domain();
        let k = 64;
        let alpha = [Complex64::new(1.0, 0.2), Complex64::new(-0.3, 0.1), Complex64::new(0.05, -0.02)];
        let w: Vec<Complex64> = (0..16 * k)
            .map(|idx| {
                let p = angle(idx % k, k);
                alpha.iter().enumerate().map(|(m, a)| a * Complex64::from_polar(1.0, m as f64 * p)).sum()
            })
            .collect();
        let fan = FanData::from_fn(&d, k, |i, j| {
            let p = angle(j, k);
            (2.0 * p).cos() + 0.3 * (5.0 * p + i as f64).sin()
        });
        let att = attenuated_modes_with_weight(&fan, &w, 24).unwrap();
        let ms = angular_modes(&fan, 24).unwrap();
        for i in 0..16 {
            for n in -20..=20i64 {
                let conv: Complex64 = (0..3).map(|m| alpha[m] * ms.get(i, n - m as i64)).sum();
                assert!((att.gamma.get(i, n) - conv).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn mode_csv_roundtrip() {
        let fan = FanData::from_fn(&domain(), 32, |i, j| (i as f64 - j as f64 * 0.5).sin());
        let ms = angular_modes(&fan, 8).unwrap();
        let back = ModeSequences::from_csv(&ms.to_csv()).unwrap();
        assert_eq!(back, ms);
    }

    #[test]
    fn decay_diagnostics_of_single_mode() {
        let mut ms = ModeSequences::zeros(4, 6, 1.0, Provenance::Plain);
        ms.set(2, -3, Complex64::new(0.0, 2.0));
        ms.set(1, -6, Complex64::new(0.5, 0.0));
        let d = ms.decay();
        assert!((d.l11 - 6.0).abs() < 1e-15);
        assert!((d.l12 - 18.0).abs() < 1e-15);
        assert!((d.tail - 0.5).abs() < 1e-15);
    }

    #[test]
    fn attenuated_modes_follow_the_convolution_theorem() {
        use crate::attenuation::PackParams;
        use crate::fields::Attenuation;
        use crate::grid::CartesianGrid;
        let d = Domain::unit(16).unwrap();
        let k = 64;
        let a = Attenuation::standard_gaussian(1.0);
        let g = CartesianGrid::covering(0.5, 1.0).unwrap();
        let pack = AttenuationPack::build(&a, &d, g, PackParams::new(1.0, k, 24)).unwrap();
        let fan = FanData::from_fn(&d, k, |i, j| {
            let phi = angle(j, k);
            (phi.cos() + (3.0 * phi + i as f64).sin()) * (1.0 + 0.1 * i as f64)
        });
        let am = attenuated_data_modes(&fan, &pack, 24).unwrap();
        let plain = angular_modes(&fan, 24).unwrap();
        let w = pack.boundary_weight();
        for i in 0..16 {
            let c = spectral::analyze(&w[i * k..(i + 1) * k]);
            for n in [-2i64, -3, -7] {
                let mut conv = Complex64::new(0.0, 0.0);
                for q in 0..k {
                    let m = spectral::signed_freq(q, k);
                    if (n - m).abs() <= 3 {
                        conv += c[q] * plain.get(i, n - m);
                    }
                }
                assert!((am.gamma.get(i, n) - conv).norm() < 1e-10);
            }
        }
        let zero = FanData::zeros(&d, k);
        let az = attenuated_data_modes(&zero, &pack, 24).unwrap();
        assert_eq!(az.g_h.sup_norm(), 0.0);
        let small = FanData::zeros(&Domain::unit(8).unwrap(), k);
        assert!(matches!(attenuated_data_modes(&small, &pack, 24), Err(Error::Shape(_))));
    }
}
