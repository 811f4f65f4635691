//! The Bukhgeim–Cauchy operator: interior extension of a boundary sequence
//! into an L-analytic map, checked by the discrete `∂̄u_k + ∂u_{k+1}` residual
//! and against its own boundary trace.
//!
//! cargo run --release --example cauchy_operator

use tensoray::aanalytic::{l_analytic_residual, CauchyOperator};
use tensoray::fields::Phantom;
use tensoray::geometry::{Domain, Point};
use tensoray::grid::CartesianGrid;
use tensoray::modes::{angular_modes, build_even, build_odd};
use tensoray::transport::RayIntegrator;

fn main() -> tensoray::Result<()> {
    let fan = RayIntegrator::with_default_step(Domain::unit(256)?).make_fan(&Phantom::standard_bumps(1.0), None, 256)?;
    let ms = angular_modes(&fan, 24)?;
    let grid = CartesianGrid::covering(0.02, 1.0)?;
    for (name, seq) in [("even", build_even(&ms)?), ("odd", build_odd(&ms)?)] {
        let op = CauchyOperator::new(&seq);
        let field = op.on_grid(grid);
        println!("{name}: {} components, L-analytic residual {:.3e}", op.len(), l_analytic_residual(&field)?);
    }

    // near the boundary the extension approaches the data
    let even = build_even(&ms)?;
    let op = CauchyOperator::new(&even);
    let i = 40;
    let dir = Point::unit(Domain::unit(256)?.node_param(i));
    for r in [0.9, 0.98, 0.99, 0.995] {
        let v = op.jet_near_boundary(dir * r)?.value[0];
        println!("r = {r}: (Bg)_0 = {v:.6}   boundary value {:.6}", even.at(i)[0]);
    }
    Ok(())
}
