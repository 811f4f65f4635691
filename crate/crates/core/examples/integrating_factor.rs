//! The integrating factor `h` of an attenuation and the modes `α_k`, `β_k`
//! of `e^{∓h}`: identity suite, pointwise modes and the binary pack file.
//!
//! cargo run --release --example integrating_factor

use tensoray::attenuation::{verify_identities, AttenuationPack, PackParams};
use tensoray::fields::Attenuation;
use tensoray::geometry::{Domain, Point};
use tensoray::reconstruct::reconstruction_grid;

fn main() -> tensoray::Result<()> {
    let a = Attenuation::standard_gaussian(1.0);
    let domain = Domain::unit(256)?;
    let grid = reconstruction_grid(1.0, 0.02)?;
    let pack = AttenuationPack::build(&a, &domain, grid, PackParams::new(1.0, 256, 24))?;
    println!("build diagnostics {:?}", pack.diagnostics);

    let r = verify_identities(&pack, 1.0, 200);
    println!("θ·∇h + a                 {:.2e}", r.transport);
    println!("negative modes of e^(-h) {:.2e}", r.negative_modes);
    println!("α ∗ β − δ                {:.2e}", r.convolution);
    println!("∂̄α_1 − aα_0              {:.2e}", r.alpha1);
    println!("α recursion              {:.2e}", r.alpha_recursion);
    println!("β recursion              {:.2e}", r.beta_recursion);

    let pm = pack.modes_at(Point::new(0.3, -0.2));
    println!("α_0, β_0 at (0.3, -0.2)  {:.6} {:.6}", pm.alpha[0], pm.beta[0]);

    let path = std::env::temp_dir().join("tensoray_example_pack.bin");
    pack.write(&path)?;
    let back = AttenuationPack::read(&path)?;
    println!("pack file roundtrip exact {}", back == pack);
    std::fs::remove_file(&path)?;
    Ok(())
}
