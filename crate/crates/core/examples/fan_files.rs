//! Fan data files: CSV with 17 significant digits and a versioned
//! little-endian binary format, both read back by `FanData::read`.
//!
//! cargo run --release --example fan_files

use tensoray::fields::{Attenuation, Phantom};
use tensoray::geometry::Domain;
use tensoray::modes::angular_modes;
use tensoray::transport::{FanData, RayIntegrator};

fn main() -> tensoray::Result<()> {
    let a = Attenuation::constant_with_cutoff(0.3, 1.0);
    let fan = RayIntegrator::with_default_step(Domain::unit(64)?).make_fan(&Phantom::standard_bumps(1.0), Some(&a), 64)?;
    let dir = std::env::temp_dir().join("tensoray_fan_files");
    fan.write_csv(&dir.join("fan.csv"))?;
    fan.write_binary(&dir.join("fan.bin"))?;
    let from_csv = FanData::read(&dir.join("fan.csv"))?;
    let from_bin = FanData::read(&dir.join("fan.bin"))?;
    println!("attenuation tag {:?}", fan.attenuation);
    println!("csv exact {}, binary exact {}", from_csv == fan, from_bin == fan);

    let ms = angular_modes(&fan, 12)?;
    ms.write_csv(&dir.join("modes.csv"))?;
    println!("mode decay {:?}", ms.decay());
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
