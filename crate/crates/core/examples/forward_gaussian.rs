//! Forward data of an isotropic Gaussian phantom compared with the exact
//! chord integral `σ√π e^{−s²/σ²} erf(√(R²−s²)/σ)`.
//!
//! cargo run --release --example forward_gaussian

use tensoray::fields::Phantom;
use tensoray::geometry::{Domain, Point};
use tensoray::transport::{angle, RayIntegrator};

fn main() -> tensoray::Result<()> {
    let sigma = 0.3;
    let domain = Domain::unit(256)?;
    let integrator = RayIntegrator::with_default_step(domain);
    let phantom = Phantom::gaussian_isotropic(sigma, Point::new(0.0, 0.0), 1.0);
    let fan = integrator.make_fan(&phantom, None, 256)?;

    let mut worst = 0.0f64;
    for i in 0..fan.m {
        let x = domain.node(i);
        for j in 0..fan.k {
            let theta = Point::unit(angle(j, fan.k));
            if x.dot(theta) <= 1e-12 {
                continue;
            }
            let s = x.dot(theta.perp());
            let exact = sigma * std::f64::consts::PI.sqrt() * (-s * s / (sigma * sigma)).exp()
                * libm::erf((1.0 - s * s).sqrt() / sigma);
            worst = worst.max((fan.get(i, j) - exact).abs() / exact);
        }
    }
    println!("diameter ray value      {:.9}", fan.get(0, 0));
    println!("max relative error      {worst:.3e}");
    Ok(())
}
