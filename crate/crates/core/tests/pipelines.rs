//! End-to-end behaviour of the library pipelines on small grids.

use tensoray::attenuation::{AttenuationPack, PackParams};
use tensoray::fields::{Attenuation, Phantom, TensorField};
use tensoray::geometry::{Domain, Point, RayClass};
use tensoray::grid::GridField;
use tensoray::reconstruct::{
    boundary_terms, compat_check, psi_default_free, reconstruct_att, reconstruct_free, PsiChoice, ReconParams,
};
use tensoray::transport::{angle, FanData, RayIntegrator};
use tensoray::Error;

fn params(n_max: usize, spacing: f64) -> ReconParams {
    ReconParams { n_max, spacing, margin: spacing, ring_step: spacing, ..ReconParams::new(1.0) }
}

fn pack(a: &Attenuation, m: usize, p: &ReconParams) -> AttenuationPack {
    AttenuationPack::build(a, &Domain::unit(m).unwrap(), p.grid(1.0).unwrap(), PackParams::new(1.0, m, p.n_max)).unwrap()
}

#[test]
fn attenuated_zero_data_gives_zero_tensor() {
    let a = Attenuation::standard_gaussian(1.0);
    let p = params(24, 0.08);
    let pk = pack(&a, 64, &p);
    let fan = FanData::zeros(&Domain::unit(64).unwrap(), 64);
    let r = reconstruct_att(&fan, &pk, None, &p).unwrap();
    assert!(r.tensor.values().iter().all(|v| v.max_abs() == 0.0));
    assert_eq!(r.diagnostics.compat, Some(0.0));
    assert_eq!(r.diagnostics.range_even, 0.0);
}

#[test]
fn compatibility_detects_perturbed_data() {
    let a = Attenuation::standard_gaussian(1.0);
    let m = 128;
    let p = params(24, 0.04);
    let pk = pack(&a, m, &p);
    let domain = Domain::unit(m).unwrap();
    let fan = RayIntegrator::with_default_step(domain).make_fan(&Phantom::standard_bumps(1.0), Some(&a), m).unwrap();
    let clean = compat_check(&fan, &pk, &p).unwrap();
    let mut bad = fan.clone();
    for i in 0..m {
        let eta = domain.node_param(i);
        for j in 0..m {
            if domain.classify(domain.node(i), Point::unit(angle(j, m))).unwrap() == RayClass::Outflow {
                bad.set(i, j, fan.get(i, j) + 0.1 * (2.0 * eta).cos());
            }
        }
    }
    let dirty = compat_check(&bad, &pk, &p).unwrap();
    assert!(dirty > 10.0 * clean, "clean {clean:.3e}, perturbed {dirty:.3e}");
    let terms = boundary_terms(&fan, &pk, &p).unwrap();
    assert_eq!(terms.residual.len(), m);
    assert_eq!(terms.normal.len(), m);
}

#[test]
fn pack_must_share_the_reconstruction_grid() {
    let a = Attenuation::constant_with_cutoff(0.3, 1.0);
    let p = params(8, 0.1);
    let pk = pack(&a, 32, &p);
    let fan = FanData::zeros(&Domain::unit(32).unwrap(), 32);
    let other = params(8, 0.125);
    assert!(matches!(reconstruct_att(&fan, &pk, None, &other), Err(Error::Shape(_))));
    let wrong_angles = FanData::zeros(&Domain::unit(32).unwrap(), 40);
    assert!(matches!(reconstruct_att(&wrong_angles, &pk, None, &p), Err(Error::Shape(_))));
}

#[test]
fn vanishing_attenuation_is_rejected() {
    let a = Attenuation::constant_with_cutoff(1e-8, 1.0);
    let p = params(8, 0.1);
    let pk = pack(&a, 32, &p);
    let fan = FanData::zeros(&Domain::unit(32).unwrap(), 32);
    assert!(matches!(reconstruct_att(&fan, &pk, None, &p), Err(Error::Config(_))));
}

#[test]
fn grid_defined_gauge_matches_its_analytic_source() {
    let m = 128;
    let fan = RayIntegrator::with_default_step(Domain::unit(m).unwrap())
        .make_fan(&Phantom::standard_bumps(1.0), None, m)
        .unwrap();
    let p = params(24, 0.04);
    let psi = psi_default_free(&fan, 24).unwrap();
    let grid = p.grid(1.0).unwrap();
    // the harmonic extension is a trigonometric polynomial, defined past the circle
    let values = GridField {
        grid,
        values: (0..grid.len()).map(|i| psi.jet(grid.node(i)).unwrap().value).collect(),
        valid: vec![true; grid.len()],
    };
    let user = PsiChoice::user_grid(1.0, values);
    let a = reconstruct_free(&fan, &psi, &p).unwrap();
    let b = reconstruct_free(&fan, &user, &p).unwrap();
    let mut worst = 0.0f64;
    for i in 0..grid.len() {
        let x = grid.node(i);
        if x.norm() < 0.9 {
            worst = worst.max(a.tensor.eval(x).add(&b.tensor.eval(x).scale(-1.0)).max_abs());
        }
    }
    assert!(worst < 1e-3, "{worst:.3e}");
}

#[test]
fn fan_files_reproduce_in_memory_reconstruction() {
    let m = 64;
    let fan = RayIntegrator::with_default_step(Domain::unit(m).unwrap())
        .make_fan(&Phantom::standard_bumps(1.0), None, m)
        .unwrap();
    let dir = tempfile::TempDir::new().unwrap();
    fan.write_csv(&dir.path().join("fan.csv")).unwrap();
    let back = FanData::read(&dir.path().join("fan.csv")).unwrap();
    let p = params(12, 0.08);
    let a = reconstruct_free(&fan, &psi_default_free(&fan, 12).unwrap(), &p).unwrap();
    let b = reconstruct_free(&back, &psi_default_free(&back, 12).unwrap(), &p).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    a.write(dir.path(), &serde_json::json!({ "note": "test" })).unwrap();
    let diag: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("diagnostics.json")).unwrap()).unwrap();
    assert_eq!(diag["run"]["note"], "test");
    assert_eq!(diag["diagnostics"]["attenuated"], false);
}

#[test]
fn attenuated_reconstruction_solves_the_transport_equation() {
    let a = Attenuation::standard_gaussian(1.0);
    let m = 128;
    let p = params(24, 0.04);
    let pk = pack(&a, m, &p);
    let fan = RayIntegrator::with_default_step(Domain::unit(m).unwrap())
        .make_fan(&Phantom::standard_bumps(1.0), Some(&a), m)
        .unwrap();
    let r = reconstruct_att(&fan, &pk, None, &p).unwrap();
    let res = r.transport_residual(100, 5);
    assert!(res < 0.1, "{res:.3e}");
    assert!(r.diagnostics.min_a.unwrap() > 0.19);
    // u_0 is the gauge and is real
    let idx = (0..r.u.grid.len()).find(|&i| r.u.valid[i]).unwrap();
    assert_eq!(r.u.modes[0][idx].im, 0.0);
}
