//! Potential tensors `dˢv` with `v = 0` on the boundary have vanishing data.
//!
//! cargo run --release --example potential_null_space

use tensoray::fields::{make_potential_tensor, Phantom, VectorField};
use tensoray::geometry::{Domain, Point};
use tensoray::transport::RayIntegrator;

fn main() -> tensoray::Result<()> {
    let integrator = RayIntegrator::with_default_step(Domain::unit(256)?);
    let potential = make_potential_tensor(VectorField::BoundaryWeight { radius: 1.0, ax: 1.0, ay: 0.0 }, 1.0)?;
    let fan = integrator.make_fan(&potential, None, 256)?;
    println!("sup |X dˢv|                 {:.3e}", fan.sup_norm());

    // adding a potential leaves the data of any tensor unchanged
    let bumps = Phantom::standard_bumps(1.0);
    let mixed = bumps.clone().with(potential.components[0].clone());
    let a = integrator.make_fan(&bumps, None, 256)?;
    let b = integrator.make_fan(&mixed, None, 256)?;
    println!("data change from the potential {:.3e}", b.sup_rel_diff(&a)?);

    // a vector field that does not vanish on the circle is rejected
    let bad = make_potential_tensor(VectorField::Bump { center: Point::new(0.9, 0.0), rho: 0.3, ax: 1.0, ay: 0.0 }, 1.0);
    println!("non-vanishing field rejected   {}", bad.is_err());
    Ok(())
}
