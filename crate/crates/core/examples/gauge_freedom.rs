//! Non-uniqueness: two gauge choices `ψ` with the same boundary trace give
//! different tensors with the same data.
//!
//! cargo run --release --example gauge_freedom

use tensoray::fields::{Phantom, TensorField};
use tensoray::geometry::Domain;
use tensoray::reconstruct::{psi_blend_free, psi_default_free, reconstruct_free, ReconParams};
use tensoray::transport::RayIntegrator;

fn main() -> tensoray::Result<()> {
    let integrator = RayIntegrator::with_default_step(Domain::unit(256)?);
    let fan = integrator.make_fan(&Phantom::standard_bumps(1.0), None, 256)?;
    let params = ReconParams::new(1.0);
    let harmonic = reconstruct_free(&fan, &psi_default_free(&fan, 24)?, &params)?;
    let blend = reconstruct_free(&fan, &psi_blend_free(&fan, 24)?, &params)?;

    let grid = params.grid(1.0)?;
    let diff = (0..grid.len())
        .map(|i| grid.node(i))
        .filter(|x| x.norm() <= 1.0)
        .map(|x| harmonic.tensor.eval(x).add(&blend.tensor.eval(x).scale(-1.0)).max_abs())
        .fold(0.0, f64::max);
    println!("sup component difference {diff:.3e}");
    println!("roundtrip harmonic ψ      {:.3e}", harmonic.roundtrip_error(&fan, &integrator)?);
    println!("roundtrip blended ψ       {:.3e}", blend.roundtrip_error(&fan, &integrator)?);
    Ok(())
}
