//! Command-line front end: run configuration, the five commands and their
//! exit codes.
//!
//! Exit codes: 0 ok, 1 a check failed (range test, roundtrip tolerance,
//! integrating-factor identities), 2 configuration error, 3 I/O or input
//! file error. `TENSORAY_THREADS` caps the worker pool.

use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::aanalytic::range_residual;
use crate::attenuation::{verify_identities, AttenuationPack, PackParams, DEFAULT_BEAM_STEP, DEFAULT_PADDING};
use crate::error::{Error, Result};
use crate::fields::{make_potential_tensor, Attenuation, Phantom, VectorField};
use crate::geometry::{Domain, Point};
use crate::io;
use crate::modes::{angular_modes, attenuated_data_modes, build_even, build_odd, gtilde_modes};
use crate::reconstruct::{
    boundary_terms, psi_blend_free, psi_default_free, reconstruct_att, reconstruct_free, PsiKind, ReconParams,
    ReconstructionResult, DEFAULT_MIN_A, DEFAULT_MODES, DEFAULT_MODES_ATTENUATED, DEFAULT_TOL_COMPAT,
    DEFAULT_TOL_RANGE,
};
use crate::transport::{FanData, RayIntegrator, DEFAULT_H_RAY};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;

pub const THREADS_ENV: &str = "TENSORAY_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Forward data of the phantom.
    Forward,
    /// Range conditions (and the compatibility condition with attenuation).
    RangeTest,
    /// Tensor consistent with the data.
    Reconstruct,
    /// Reconstruct, recompute the data and compare.
    Roundtrip,
    /// Integrating-factor identity suite.
    VerifyH,
}

/// Flags of the `tensoray` binary. Flags override the configuration file.
#[derive(Debug, Clone, Parser)]
#[command(name = "tensoray", version, about = "Attenuated X-ray transform of symmetric 2-tensors on the disk")]
pub struct Args {
    /// TOML or JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Phantom preset (zero, gaussian, bumps, potential) or descriptor file.
    #[arg(long)]
    pub phantom: Option<String>,
    /// Attenuation preset (none, gaussian, constant:<a0>) or descriptor file.
    #[arg(long)]
    pub attenuation: Option<String>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub cmd: Command,
    /// Input fan file (CSV or binary); forward data of the phantom when absent.
    #[arg(long)]
    pub fan: Option<PathBuf>,
    /// Gauge rule for the free mode.
    #[arg(long)]
    pub psi: Option<String>,
}

/// Phantom as a preset name or an explicit component list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PhantomSpec {
    Preset(String),
    Explicit(Phantom),
}

impl PhantomSpec {
    pub fn build(&self, radius: f64) -> Result<Phantom> {
        match self {
            PhantomSpec::Explicit(p) => Ok(p.clone()),
            PhantomSpec::Preset(name) => match name.as_str() {
                "zero" => Ok(Phantom::zero()),
                "gaussian" => Ok(Phantom::gaussian_isotropic(0.3 * radius, Point::new(0.0, 0.0), 1.0)),
                "bumps" => Ok(Phantom::standard_bumps(radius)),
                "potential" => make_potential_tensor(VectorField::BoundaryWeight { radius, ax: 1.0, ay: 0.0 }, radius),
                other => Err(Error::Config(format!("unknown phantom preset {other:?}"))),
            },
        }
    }
}

/// Attenuation as a preset name or an explicit profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttenuationSpec {
    Preset(String),
    Explicit(Attenuation),
}

impl AttenuationSpec {
    pub fn build(&self, radius: f64) -> Result<Option<Attenuation>> {
        match self {
            AttenuationSpec::Explicit(a) => Ok(Some(a.clone())),
            AttenuationSpec::Preset(name) => {
                if name == "none" {
                    return Ok(None);
                }
                if name == "gaussian" {
                    return Ok(Some(Attenuation::standard_gaussian(radius)));
                }
                if let Some(v) = name.strip_prefix("constant:") {
                    let a0: f64 =
                        v.parse().map_err(|_| Error::Config(format!("bad constant attenuation {v:?}")))?;
                    return Ok(Some(Attenuation::constant_with_cutoff(a0, radius)));
                }
                Err(Error::Config(format!("unknown attenuation preset {name:?}")))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub tol_range: f64,
    pub tol_compat: f64,
    /// `α ∗ β = δ`
    pub tol_conv: f64,
    /// negative modes of `e^{−h}`
    pub tol_neg: f64,
    /// transport identity and recursions of the integrating factor
    pub tol_identity: f64,
    pub min_a: f64,
    pub tol_roundtrip_free: f64,
    pub tol_roundtrip_att: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            tol_range: DEFAULT_TOL_RANGE,
            tol_compat: DEFAULT_TOL_COMPAT,
            tol_conv: 1e-8,
            tol_neg: 1e-6,
            tol_identity: 1e-3,
            min_a: DEFAULT_MIN_A,
            tol_roundtrip_free: 2e-2,
            tol_roundtrip_att: 5e-2,
        }
    }
}

/// Everything a command needs. Lengths are absolute; the defaults assume
/// a unit disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub radius: f64,
    /// Boundary nodes `M`.
    #[serde(alias = "M")]
    pub m: usize,
    /// Angles `K`.
    #[serde(alias = "K")]
    pub k: usize,
    /// Mode truncation `N` without attenuation.
    #[serde(alias = "N")]
    pub n: usize,
    /// Mode truncation `N` with attenuation.
    pub n_attenuated: usize,
    /// Interior grid step `Δ`.
    pub spacing: f64,
    /// Boundary margin of the interior evaluation; `Δ` when absent.
    pub margin: Option<f64>,
    /// Ring step of the boundary extrapolation; `Δ` when absent.
    pub ring_step: Option<f64>,
    pub h_ray: f64,
    /// Radon `s`-grid step of the integrating factor; `R/256` when absent.
    pub ds: Option<f64>,
    pub padding: usize,
    pub beam_step: f64,
    pub tolerances: Tolerances,
    pub phantom: PhantomSpec,
    pub attenuation: AttenuationSpec,
    pub psi: PsiKind,
    pub out: PathBuf,
    pub seed: u64,
    /// Amplitude of uniform noise added to forward data.
    pub noise: f64,
    pub fan: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            radius: 1.0,
            m: 256,
            k: 256,
            n: DEFAULT_MODES,
            n_attenuated: DEFAULT_MODES_ATTENUATED,
            spacing: 0.02,
            margin: None,
            ring_step: None,
            h_ray: DEFAULT_H_RAY,
            ds: None,
            padding: DEFAULT_PADDING,
            beam_step: DEFAULT_BEAM_STEP,
            tolerances: Tolerances::default(),
            phantom: PhantomSpec::Preset("bumps".into()),
            attenuation: AttenuationSpec::Preset("none".into()),
            psi: PsiKind::PoissonDefault,
            out: PathBuf::from("out"),
            seed: 0,
            noise: 0.0,
            fan: None,
        }
    }
}

fn parse_text<T: for<'de> Deserialize<'de>>(text: &str, path: &Path) -> Result<T> {
    if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    } else {
        toml::from_str(text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

impl RunConfig {
    /// Reads a TOML file, or JSON when the extension is `.json`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
        parse_text(&text, path)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Applies command-line overrides. Preset names are tried before files.
    pub fn apply(&mut self, args: &Args) -> Result<()> {
        if let Some(p) = &args.phantom {
            self.phantom = match PhantomSpec::Preset(p.clone()).build(self.radius) {
                Ok(_) => PhantomSpec::Preset(p.clone()),
                Err(_) => PhantomSpec::Explicit(load_descriptor(Path::new(p))?),
            };
        }
        if let Some(a) = &args.attenuation {
            self.attenuation = match AttenuationSpec::Preset(a.clone()).build(self.radius) {
                Ok(_) => AttenuationSpec::Preset(a.clone()),
                Err(_) => AttenuationSpec::Explicit(load_descriptor(Path::new(a))?),
            };
        }
        if let Some(o) = &args.out {
            self.out = o.clone();
        }
        if let Some(f) = &args.fan {
            self.fan = Some(f.clone());
        }
        if let Some(p) = &args.psi {
            self.psi = PsiKind::parse(p)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.radius > 0.0) {
            return bad(format!("radius must be positive, got {}", self.radius));
        }
        if self.m == 0 || self.m % 2 != 0 || self.k == 0 || self.k % 2 != 0 {
            return bad(format!("M and K must be positive and even, got M = {}, K = {}", self.m, self.k));
        }
        if self.k < 2 * self.n + 2 {
            return bad(format!("K = {} is too small for N = {} (need K >= 2N + 2)", self.k, self.n));
        }
        if self.attenuation()?.is_some() && self.k < 2 * self.n_attenuated + 2 {
            return bad(format!("K = {} is too small for N = {} (need K >= 2N + 2)", self.k, self.n_attenuated));
        }
        for (name, v) in [
            ("spacing", self.spacing),
            ("margin", self.margin()),
            ("ring_step", self.ring_step()),
            ("h_ray", self.h_ray),
            ("ds", self.ds()),
            ("beam_step", self.beam_step),
        ] {
            if !(v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("tol_range", t.tol_range),
            ("tol_compat", t.tol_compat),
            ("tol_conv", t.tol_conv),
            ("tol_neg", t.tol_neg),
            ("tol_identity", t.tol_identity),
            ("min_a", t.min_a),
            ("tol_roundtrip_free", t.tol_roundtrip_free),
            ("tol_roundtrip_att", t.tol_roundtrip_att),
        ] {
            if !(v > 0.0) {
                return bad(format!("tolerance {name} must be positive, got {v}"));
            }
        }
        if !(self.noise >= 0.0) {
            return bad(format!("noise must be non-negative, got {}", self.noise));
        }
        if self.padding < DEFAULT_PADDING {
            return bad(format!("padding must be at least {DEFAULT_PADDING}, got {}", self.padding));
        }
        self.phantom()?;
        Ok(())
    }

    pub fn margin(&self) -> f64 {
        self.margin.unwrap_or(self.spacing)
    }

    pub fn ring_step(&self) -> f64 {
        self.ring_step.unwrap_or(self.spacing)
    }

    pub fn ds(&self) -> f64 {
        self.ds.unwrap_or(self.radius / 256.0)
    }

    pub fn phantom(&self) -> Result<Phantom> {
        self.phantom.build(self.radius)
    }

    pub fn attenuation(&self) -> Result<Option<Attenuation>> {
        self.attenuation.build(self.radius)
    }

    pub fn domain(&self) -> Result<Domain> {
        Domain::new(self.radius, self.m)
    }

    pub fn integrator(&self) -> Result<RayIntegrator> {
        RayIntegrator::new(self.domain()?, self.h_ray)
    }

    /// Reconstruction parameters for data with or without attenuation.
    pub fn recon_params(&self, attenuated: bool) -> ReconParams {
        let t = &self.tolerances;
        ReconParams {
            n_max: if attenuated { self.n_attenuated } else { self.n },
            spacing: self.spacing,
            margin: self.margin(),
            ring_step: self.ring_step(),
            tol_range: t.tol_range,
            tol_compat: t.tol_compat,
            min_a: t.min_a,
        }
    }

    pub fn pack_params(&self) -> PackParams {
        PackParams { angles: self.k, modes: self.n_attenuated, ds: self.ds(), padding: self.padding, beam_step: self.beam_step }
    }

    /// Integrating factor on the reconstruction grid.
    pub fn build_pack(&self, a: &Attenuation) -> Result<AttenuationPack> {
        let grid = self.recon_params(true).grid(self.radius)?;
        AttenuationPack::build(a, &self.domain()?, grid, self.pack_params())
    }
}

fn load_descriptor<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    if !path.exists() {
        return Err(Error::Config(format!("{} is neither a preset nor an existing file", path.display())));
    }
    parse_text(&std::fs::read_to_string(path)?, path)
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) | Error::Parse { .. } | Error::Json(_) => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}

/// Caps the global worker pool from `TENSORAY_THREADS`. A pool that is
/// already running is left alone.
pub fn configure_threads() -> Result<Option<usize>> {
    let Ok(v) = std::env::var(THREADS_ENV) else { return Ok(None) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(Some(n))
}

/// Result of a command: exit code and the JSON report written with it.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub code: i32,
    pub report: serde_json::Value,
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    io::write_atomic(path, serde_json::to_string_pretty(value)?.as_bytes())
}

/// Forward data of the configured phantom, with seeded noise when asked.
pub fn forward_fan(cfg: &RunConfig) -> Result<FanData> {
    let mut fan = cfg.integrator()?.make_fan(&cfg.phantom()?, cfg.attenuation()?.as_ref(), cfg.k)?;
    if cfg.noise > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        for v in fan.values.iter_mut() {
            *v += cfg.noise * rng.gen_range(-1.0..1.0);
        }
    }
    Ok(fan)
}

/// Input data: the configured fan file, or forward data of the phantom.
pub fn input_fan(cfg: &RunConfig) -> Result<FanData> {
    let fan = match &cfg.fan {
        Some(path) => FanData::read(path)?,
        None => forward_fan(cfg)?,
    };
    if fan.m != cfg.m || fan.k != cfg.k || fan.radius != cfg.radius {
        return Err(Error::Config(format!(
            "fan grid M = {}, K = {}, R = {} does not match the configuration M = {}, K = {}, R = {}",
            fan.m, fan.k, fan.radius, cfg.m, cfg.k, cfg.radius
        )));
    }
    let tag = cfg.attenuation()?.map(|a| a.tag());
    if fan.attenuation.is_some() && fan.attenuation != tag {
        warn!("fan attenuation tag {:?} differs from the configured {:?}", fan.attenuation, tag);
    }
    Ok(fan)
}

pub fn cmd_forward(cfg: &RunConfig) -> Result<Outcome> {
    let fan = forward_fan(cfg)?;
    fan.write_csv(&cfg.out.join("fan.csv"))?;
    fan.write_binary(&cfg.out.join("fan.bin"))?;
    let report = json!({
        "command": Command::Forward,
        "config": cfg,
        "fan": { "m": fan.m, "k": fan.k, "radius": fan.radius, "attenuation": fan.attenuation, "sup": fan.sup_norm() },
    });
    write_json(&cfg.out.join("metadata.json"), &report)?;
    Ok(Outcome { code: EXIT_OK, report })
}

fn residual_entry(value: f64, tol: f64) -> serde_json::Value {
    json!({ "residual": value, "tolerance": tol, "pass": value < tol || value == 0.0 })
}

pub fn cmd_range_test(cfg: &RunConfig) -> Result<Outcome> {
    let fan = input_fan(cfg)?;
    let t = &cfg.tolerances;
    let mut checks = serde_json::Map::new();
    match cfg.attenuation()? {
        None => {
            let ms = angular_modes(&fan, cfg.n)?;
            checks.insert("g_even".into(), residual_entry(range_residual(&build_even(&ms)?)?.report.sup, t.tol_range));
            checks.insert("g_odd".into(), residual_entry(range_residual(&build_odd(&ms)?)?.report.sup, t.tol_range));
            let (_, gt) = gtilde_modes(&fan, cfg.n)?;
            checks.insert("g_tilde".into(), residual_entry(range_residual(&gt)?.report.sup, t.tol_range));
        }
        Some(a) => {
            let pack = cfg.build_pack(&a)?;
            let am = attenuated_data_modes(&fan, &pack, cfg.n_attenuated)?;
            checks.insert("g_h_even".into(), residual_entry(range_residual(&am.even)?.report.sup, t.tol_range));
            checks.insert("g_h_odd".into(), residual_entry(range_residual(&am.odd)?.report.sup, t.tol_range));
            let compat = boundary_terms(&fan, &pack, &cfg.recon_params(true))?.sup();
            checks.insert("compat".into(), residual_entry(compat, t.tol_compat));
        }
    }
    let pass = checks.values().all(|c| c["pass"] == json!(true));
    let report = json!({ "command": Command::RangeTest, "config": cfg, "pass": pass, "checks": checks });
    write_json(&cfg.out.join("range_report.json"), &report)?;
    Ok(Outcome { code: if pass { EXIT_OK } else { EXIT_CHECK_FAILED }, report })
}

/// Runs the pipeline that matches the configured attenuation.
pub fn reconstruct_from(cfg: &RunConfig, fan: &FanData) -> Result<ReconstructionResult> {
    match cfg.attenuation()? {
        None => {
            let params = cfg.recon_params(false);
            let psi = match cfg.psi {
                PsiKind::PoissonDefault => psi_default_free(fan, cfg.n)?,
                PsiKind::RadialBlend => psi_blend_free(fan, cfg.n)?,
                PsiKind::UserGrid => return Err(Error::Config("user_grid psi is only available through the library".into())),
            };
            reconstruct_free(fan, &psi, &params)
        }
        Some(a) => {
            if cfg.psi != PsiKind::RadialBlend && cfg.psi != PsiKind::PoissonDefault {
                return Err(Error::Config("user_grid psi is only available through the library".into()));
            }
            let pack = cfg.build_pack(&a)?;
            reconstruct_att(fan, &pack, None, &cfg.recon_params(true))
        }
    }
}

pub fn cmd_reconstruct(cfg: &RunConfig) -> Result<Outcome> {
    let fan = input_fan(cfg)?;
    let result = reconstruct_from(cfg, &fan)?;
    let run = json!({ "command": Command::Reconstruct, "config": cfg });
    result.write(&cfg.out, &run)?;
    let report = json!({ "command": Command::Reconstruct, "config": cfg, "diagnostics": result.diagnostics });
    Ok(Outcome { code: EXIT_OK, report })
}

pub fn cmd_roundtrip(cfg: &RunConfig) -> Result<Outcome> {
    let fan = input_fan(cfg)?;
    let result = reconstruct_from(cfg, &fan)?;
    let run = json!({ "command": Command::Roundtrip, "config": cfg });
    result.write(&cfg.out, &run)?;
    let err = result.roundtrip_error(&fan, &cfg.integrator()?)?;
    let tol = if result.attenuation.is_some() { cfg.tolerances.tol_roundtrip_att } else { cfg.tolerances.tol_roundtrip_free };
    let pass = err < tol || err == 0.0;
    let report = json!({
        "command": Command::Roundtrip,
        "config": cfg,
        "roundtrip_rel_error": err,
        "tolerance": tol,
        "pass": pass,
        "diagnostics": result.diagnostics,
    });
    write_json(&cfg.out.join("roundtrip.json"), &report)?;
    Ok(Outcome { code: if pass { EXIT_OK } else { EXIT_CHECK_FAILED }, report })
}

pub fn cmd_verify_h(cfg: &RunConfig) -> Result<Outcome> {
    let a = cfg.attenuation()?.ok_or_else(|| Error::Config("verify-h needs an attenuation".into()))?;
    let pack = cfg.build_pack(&a)?;
    let r = verify_identities(&pack, cfg.radius, 200);
    let t = &cfg.tolerances;
    let checks = json!({
        "transport": residual_entry(r.transport, t.tol_identity),
        "negative_modes": residual_entry(r.negative_modes, t.tol_neg),
        "convolution": residual_entry(r.convolution, t.tol_conv),
        "alpha1": residual_entry(r.alpha1, t.tol_identity),
        "alpha_recursion": residual_entry(r.alpha_recursion, t.tol_identity),
        "beta_recursion": residual_entry(r.beta_recursion, t.tol_identity),
    });
    let pass = checks.as_object().is_some_and(|m| m.values().all(|c| c["pass"] == json!(true)));
    let report = json!({ "command": Command::VerifyH, "config": cfg, "pass": pass, "checks": checks, "identities": r });
    write_json(&cfg.out.join("identities.json"), &report)?;
    Ok(Outcome { code: if pass { EXIT_OK } else { EXIT_CHECK_FAILED }, report })
}

/// Loads the configuration, applies the flags and runs the command.
pub fn run(args: &Args) -> Result<Outcome> {
    configure_threads()?;
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply(args)?;
    cfg.validate()?;
    match args.cmd {
        Command::Forward => cmd_forward(&cfg),
        Command::RangeTest => cmd_range_test(&cfg),
        Command::Reconstruct => cmd_reconstruct(&cfg),
        Command::Roundtrip => cmd_roundtrip(&cfg),
        Command::VerifyH => cmd_verify_h(&cfg),
    }
}

/// [`run`] with errors reported on stderr; returns the exit code.
pub fn main_with_args(args: &Args) -> i32 {
    match run(args) {
        Ok(out) => {
            let summary = out.report.as_object().map(|m| {
                m.iter().filter(|(k, _)| k.as_str() != "config").map(|(k, v)| (k.clone(), v.clone())).collect::<serde_json::Map<_, _>>()
            });
            println!("{}", serde_json::to_string_pretty(&summary).unwrap_or_default());
            out.code
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        assert_eq!((cfg.m, cfg.k, cfg.n), (256, 256, 24));
        assert_eq!(cfg.margin(), cfg.spacing);
        assert_eq!(cfg.recon_params(true).n_max, DEFAULT_MODES_ATTENUATED);
    }

    #[test]
    fn toml_and_json_configs_parse() {
        let cfg = RunConfig::from_toml("M = 64\nK = 64\nN = 8\nattenuation = \"constant:0.4\"\n[tolerances]\ntol_range = 1e-2\n").unwrap();
        assert_eq!((cfg.m, cfg.k, cfg.n), (64, 64, 8));
        assert_eq!(cfg.tolerances.tol_range, 1e-2);
        assert_eq!(cfg.tolerances.tol_compat, DEFAULT_TOL_COMPAT);
        assert_eq!(cfg.attenuation().unwrap().unwrap().tag(), "constant:0.4");

        let dir = tempfile::TempDir::new().unwrap();
        let path = dir.path().join("run.json");
        let json = serde_json::to_string(&cfg).unwrap();
        std::fs::write(&path, json).unwrap();
        assert_eq!(RunConfig::load(&path).unwrap(), cfg);
        assert!(matches!(RunConfig::from_toml("M = \"many\""), Err(Error::Config(_))));
    }

    #[test]
    fn explicit_descriptors_roundtrip_through_toml() {
        let mut cfg = RunConfig::default();
        cfg.phantom = PhantomSpec::Explicit(Phantom::standard_bumps(1.0));
        cfg.attenuation = AttenuationSpec::Explicit(Attenuation::standard_gaussian(1.0));
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn presets_build() {
        for name in ["zero", "gaussian", "bumps", "potential"] {
            PhantomSpec::Preset(name.into()).build(1.0).unwrap();
        }
        assert!(AttenuationSpec::Preset("none".into()).build(1.0).unwrap().is_none());
        assert!(AttenuationSpec::Preset("gaussian".into()).build(1.0).unwrap().is_some());
        assert!(matches!(AttenuationSpec::Preset("constant:x".into()).build(1.0), Err(Error::Config(_))));
        assert!(matches!(PhantomSpec::Preset("cube".into()).build(1.0), Err(Error::Config(_))));
    }

    #[test]
    fn invariants_are_enforced() {
        let bad = |f: fn(&mut RunConfig)| {
            let mut c = RunConfig::default();
            f(&mut c);
            matches!(c.validate(), Err(Error::Config(_)))
        };
        assert!(bad(|c| c.m = 255));
        assert!(bad(|c| c.k = 40));
        assert!(bad(|c| c.tolerances.tol_neg = 0.0));
        assert!(bad(|c| c.spacing = -0.1));
        assert!(bad(|c| c.padding = 2));
        assert!(bad(|c| {
            c.attenuation = AttenuationSpec::Preset("gaussian".into());
            c.k = 64;
        }));
    }

    #[test]
    fn flags_override_the_file() {
        let args = Args::parse_from([
            "tensoray", "--cmd", "roundtrip", "--phantom", "gaussian", "--attenuation", "constant:0.2", "--out", "x", "--psi",
            "radial_blend",
        ]);
        let mut cfg = RunConfig::default();
        cfg.apply(&args).unwrap();
        assert_eq!(cfg.phantom, PhantomSpec::Preset("gaussian".into()));
        assert_eq!(cfg.attenuation, AttenuationSpec::Preset("constant:0.2".into()));
        assert_eq!(cfg.out, PathBuf::from("x"));
        assert_eq!(cfg.psi, PsiKind::RadialBlend);
        assert_eq!(args.cmd, Command::Roundtrip);
    }

    #[test]
    fn error_kinds_map_to_exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), EXIT_CONFIG);
        assert_eq!(exit_code(&Error::Shape("x".into())), EXIT_CONFIG);
        assert_eq!(exit_code(&Error::Parse { line: 3, msg: "x".into() }), EXIT_IO);
        assert_eq!(exit_code(&Error::Io(std::io::Error::other("x"))), EXIT_IO);
    }
}
