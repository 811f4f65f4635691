//! Range conditions for non-attenuated data: `(I + iH)` annihilates the
//! even, odd and odd-extension sequences built from forward data, and a
//! single spurious angular mode breaks them.
//!
//! cargo run --release --example range_conditions

use tensoray::aanalytic::range_residual;
use tensoray::fields::Phantom;
use tensoray::geometry::Domain;
use tensoray::modes::{angular_modes, build_even, build_odd, gtilde_modes};
use tensoray::transport::RayIntegrator;
use num_complex::Complex64;

fn main() -> tensoray::Result<()> {
    let phantom = Phantom::standard_bumps(1.0);
    for (m, n) in [(128, 48), (256, 48), (256, 24)] {
        let fan = RayIntegrator::with_default_step(Domain::unit(m)?).make_fan(&phantom, None, m)?;
        let ms = angular_modes(&fan, n)?;
        let even = range_residual(&build_even(&ms)?)?.report.sup;
        let odd = range_residual(&build_odd(&ms)?)?.report.sup;
        let (gt_modes, gt) = gtilde_modes(&fan, n)?;
        let gt_res = range_residual(&gt)?.report.sup;
        let even_modes = (0..m).flat_map(|i| (-(n as i64)..=n as i64).step_by(2).map(move |k| (i, k)))
            .fold(0.0f64, |w, (i, k)| w.max(gt_modes.get(i, k).norm()));
        println!("M = K = {m}, N = {n}: even {even:.3e}  odd {odd:.3e}  g̃ {gt_res:.3e}  even modes of g̃ {even_modes:.1e}");
    }

    // inject the angular mode 0.1·e^{i(η−5φ)} (with its conjugate) into the data
    let fan = RayIntegrator::with_default_step(Domain::unit(256)?).make_fan(&phantom, None, 256)?;
    let mut ms = angular_modes(&fan, 24)?;
    let clean = range_residual(&build_odd(&ms)?)?.report.sup;
    let domain = Domain::unit(256)?;
    for i in 0..ms.m {
        let e = Complex64::from_polar(0.1, domain.node_param(i));
        ms.set(i, -5, ms.get(i, -5) + e);
        ms.set(i, 5, ms.get(i, 5) + e.conj());
    }
    let dirty = range_residual(&build_odd(&ms)?)?.report.sup;
    println!("spurious mode: odd residual {clean:.3e} -> {dirty:.3e} ({:.0}x)", dirty / clean);
    Ok(())
}
