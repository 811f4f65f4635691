//! Attenuated reconstruction with the default gauge: compatibility check,
//! prescribed normal derivative of `ψ`, roundtrip error under refinement.
//!
//! cargo run --release --example reconstruct_attenuated

use tensoray::attenuation::{AttenuationPack, PackParams};
use tensoray::fields::{Attenuation, Phantom};
use tensoray::geometry::Domain;
use tensoray::reconstruct::{reconstruct_att, ReconParams};
use tensoray::transport::RayIntegrator;

fn main() -> tensoray::Result<()> {
    let a = Attenuation::standard_gaussian(1.0);
    let domain = Domain::unit(256)?;
    let integrator = RayIntegrator::with_default_step(domain);
    let fan = integrator.make_fan(&Phantom::standard_bumps(1.0), Some(&a), 256)?;
    for spacing in [0.04, 0.02] {
        let params = ReconParams { spacing, margin: spacing, ring_step: spacing, ..ReconParams::attenuated(1.0) };
        let pack = AttenuationPack::build(&a, &domain, params.grid(1.0)?, PackParams::new(1.0, 256, params.n_max))?;
        let result = reconstruct_att(&fan, &pack, None, &params)?;
        println!(
            "Δ = {spacing}: compatibility {:.2e}, roundtrip {:.3e}",
            result.diagnostics.compat.unwrap_or(0.0),
            result.roundtrip_error(&fan, &integrator)?
        );
    }
    Ok(())
}
