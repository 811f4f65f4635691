//! Range and compatibility conditions for attenuated data, and their
//! failure when the data are perturbed.
//!
//! cargo run --release --example attenuated_range

use tensoray::aanalytic::range_residual;
use tensoray::attenuation::AttenuationPack;
use tensoray::fields::{Attenuation, Phantom};
use tensoray::geometry::{Domain, Point, RayClass};
use tensoray::modes::attenuated_data_modes;
use tensoray::reconstruct::{compat_check, ReconParams};
use tensoray::cli::RunConfig;
use tensoray::transport::{angle, RayIntegrator};

fn main() -> tensoray::Result<()> {
    let a = Attenuation::standard_gaussian(1.0);
    let domain = Domain::unit(256)?;
    let params = ReconParams::attenuated(1.0);
    let cfg = RunConfig::default();
    let pack = AttenuationPack::build(&a, &domain, params.grid(1.0)?, cfg.pack_params())?;
    let fan = RayIntegrator::with_default_step(domain).make_fan(&Phantom::standard_bumps(1.0), Some(&a), 256)?;

    let am = attenuated_data_modes(&fan, &pack, params.n_max)?;
    println!("g_h even residual {:.3e}", range_residual(&am.even)?.report.sup);
    println!("g_h odd residual  {:.3e}", range_residual(&am.odd)?.report.sup);
    let clean = compat_check(&fan, &pack, &params)?;
    println!("compatibility     {clean:.3e}");

    // add 0.01·cos(2η)·cos(φ) to the outflow data: breaks compatibility
    let mut bad = fan.clone();
    for i in 0..fan.m {
        let eta = domain.node_param(i);
        for j in 0..fan.k {
            let theta = Point::unit(angle(j, fan.k));
            if domain.classify(domain.node(i), theta)? == RayClass::Outflow {
                bad.set(i, j, fan.get(i, j) + 0.01 * (2.0 * eta).cos() * angle(j, fan.k).cos());
            }
        }
    }
    println!("perturbed compatibility {:.3e}", compat_check(&bad, &pack, &params)?);
    Ok(())
}
