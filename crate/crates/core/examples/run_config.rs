//! Driving the command layer from code: a TOML configuration, command
//! outcomes and exit codes, the same path the `tensoray` binary takes.
//!
//! cargo run --release --example run_config

use tensoray::cli::{cmd_forward, cmd_range_test, cmd_roundtrip, RunConfig};

const CONFIG: &str = r#"
M = 128
K = 128
N = 24
spacing = 0.04
phantom = "bumps"
attenuation = "none"
psi = "radial_blend"
seed = 7
"#;

fn main() -> tensoray::Result<()> {
    let mut cfg = RunConfig::from_toml(CONFIG)?;
    cfg.out = std::env::temp_dir().join("tensoray_run_config");
    cfg.validate()?;

    let fwd = cmd_forward(&cfg)?;
    println!("forward: exit {} sup {}", fwd.code, fwd.report["fan"]["sup"]);
    let rt = cmd_range_test(&cfg)?;
    println!("range-test: exit {} {}", rt.code, rt.report["checks"]);
    let round = cmd_roundtrip(&cfg)?;
    println!("roundtrip: exit {} error {}", round.code, round.report["roundtrip_rel_error"]);

    cfg.noise = 5e-2;
    let noisy = cmd_range_test(&cfg)?;
    println!("range-test on noisy data: exit {}", noisy.code);
    std::fs::remove_dir_all(&cfg.out)?;
    Ok(())
}
