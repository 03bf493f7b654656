use std::f64::consts::PI;

use fgm_iga::analysis::{nondimensionalize, run, InPlaneLoading, MeshSpec, RawResult, Regime, RunConfig};
use fgm_iga::assembly::{BoundarySpec, InPlaneRestraint};
use fgm_iga::cli::{result_table, sweep, SweepParam};
use fgm_iga::material::{FgmMaterial, Homogenization, PhaseProperties, TemperatureProfile};
use fgm_iga::nurbs::PlateGeometry;
use fgm_iga::plate_model::ShearCorrection;
use fgm_iga::solvers::FlutterOutcome;
use fgm_iga::Error;

fn config(regime: Regime) -> RunConfig {
    RunConfig {
        geometry: PlateGeometry { a: 1.3, b: 0.9, skew_deg: 10.0 },
        thickness: 0.07,
        material: FgmMaterial::new(
            PhaseProperties::ALUMINA,
            PhaseProperties::ALUMINUM,
            2.0,
            Homogenization::MoriTanaka,
        )
        .unwrap(),
        mesh: MeshSpec::new(2, 6),
        boundary: BoundarySpec::simply_supported().with_in_plane(InPlaneRestraint::Tangential),
        shear: ShearCorrection::default(),
        regime,
    }
}

fn rigidity(e: f64, nu: f64, h: f64) -> f64 {
    e * h.powi(3) / (12.0 * (1.0 - nu * nu))
}

fn scaled(raw: &RawResult, cfg: &RunConfig, name: &str) -> f64 {
    let (_, s, _) = nondimensionalize(raw, cfg).unwrap();
    s.iter().find(|q| q.name == name).unwrap_or_else(|| panic!("{name}")).value
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * b.abs()
}

#[test]
fn nondimensional_round_trip() {
    let (a, b, h): (f64, f64, f64) = (1.3, 0.9, 0.07);
    let (ec, nuc, rhoc) = (380e9, 0.3, 3800.0);
    let dc = rigidity(ec, nuc, h);
    let dm = rigidity(70e9, 0.3, h);

    let p = 2.5e4;
    let cfg = config(Regime::Static { pressure: p, temperature: None });
    let raw = RawResult::Static { center_deflection: 3.1e-5, center_stress_top: -4.2e6 };
    let w_bar = scaled(&raw, &cfg, "w_bar");
    assert!(close(w_bar * p * a.powi(4) / (100.0 * dm), 3.1e-5));
    assert!(close(scaled(&raw, &cfg, "w_over_h") * h, 3.1e-5));
    assert!(close(scaled(&raw, &cfg, "sigma_xx_bar") * p * a * a / (h * h), -4.2e6));

    let cfg = config(Regime::Vibration { modes: 2 });
    let raw = RawResult::Vibration { omega: vec![1234.5, 4321.0] };
    let om = scaled(&raw, &cfg, "omega_bar_2");
    assert!(close(om / (h * (rhoc / ec).sqrt()), 4321.0));

    let cfg = config(Regime::MechanicalBuckling { loading: InPlaneLoading::Uniaxial });
    let raw = RawResult::MechanicalBuckling { critical_resultant: 7.7e6 };
    assert!(close(scaled(&raw, &cfg, "lambda_cr") * PI * PI * dc / (b * b), 7.7e6));

    let cfg = config(Regime::ThermalBuckling { profile: TemperatureProfile::LinearTruncation, metal_rise: 5.0 });
    let raw = RawResult::ThermalBuckling { critical_delta_t: 42.5 };
    assert_eq!(scaled(&raw, &cfg, "delta_t_cr"), 42.5);

    let cfg = config(Regime::Flutter { flow_angle_deg: 0.0, lambda_max: 900.0, steps: 10, branches: 4 });
    let raw = RawResult::Flutter { outcome: FlutterOutcome::Coalescence { lambda: 3.3e5, omega_sq: 8.8e6 } };
    assert!(close(scaled(&raw, &cfg, "lambda_cr_bar") * dc / a.powi(3), 3.3e5));
    let w2 = scaled(&raw, &cfg, "omega_sq_cr_bar");
    assert!(close(w2 * dc / (a.powi(4) * rhoc * h), 8.8e6));
    assert!(close(scaled(&raw, &cfg, "omega_cr_bar").powi(2), w2));

    let raw = RawResult::Flutter { outcome: FlutterOutcome::StableUpTo { lambda_max: 1.0e5 } };
    let (_, s, status) = nondimensionalize(&raw, &cfg).unwrap();
    assert!(close(s[0].value * dc / a.powi(3), 1.0e5));
    assert_eq!(status.as_deref(), Some("stable up to lambda_max"));
}

#[test]
fn zero_pressure_cannot_be_scaled() {
    let cfg = config(Regime::Static { pressure: 0.0, temperature: None });
    let raw = RawResult::Static { center_deflection: 0.0, center_stress_top: 0.0 };
    assert!(matches!(nondimensionalize(&raw, &cfg), Err(Error::Domain(_))));
}

#[test]
fn runs_are_deterministic() {
    for regime in [
        Regime::Static { pressure: 1.0e3, temperature: None },
        Regime::Vibration { modes: 3 },
        Regime::MechanicalBuckling { loading: InPlaneLoading::Biaxial },
    ] {
        let cfg = config(regime);
        let first = run(&cfg).unwrap();
        let second = run(&cfg).unwrap();
        assert_eq!(first, second);
        assert_eq!(first.config_hash, cfg.hash());
    }
}

#[test]
fn hash_tracks_every_field() {
    let base = config(Regime::Vibration { modes: 1 });
    let mut other = base.clone();
    other.material.gradient_index = 2.0000001;
    assert_ne!(base.hash(), other.hash());
    let mut other = base.clone();
    other.mesh.control_points += 1;
    assert_ne!(base.hash(), other.hash());
    assert_eq!(base.hash(), base.clone().hash());
}

#[test]
fn cli_table_reports_api_values() {
    let cfg = config(Regime::Static { pressure: 1.0e3, temperature: None });
    let result = run(&cfg).unwrap();
    let table = result_table(&result);
    let k = table.headers.iter().position(|h| h == "w_bar").unwrap();
    assert_eq!(table.rows[0][k], result.scaled_value("w_bar").unwrap().into());
}

#[test]
fn invalid_configurations_are_rejected() {
    let mut cfg = config(Regime::Vibration { modes: 1 });
    cfg.thickness = 0.0;
    assert!(matches!(run(&cfg), Err(Error::Configuration(_))));
    let mut cfg = config(Regime::Vibration { modes: 0 });
    assert!(run(&cfg).is_err());
    cfg.regime = Regime::Vibration { modes: 1 };
    cfg.material.gradient_index = -1.0;
    assert!(matches!(run(&cfg), Err(Error::Domain(_))));
    let mut cfg = config(Regime::Vibration { modes: 1 });
    cfg.geometry.skew_deg = 90.0;
    let err = run(&cfg).unwrap_err();
    assert!(err.to_string().contains("mesh"), "{err}");
}

#[test]
fn stabilized_deflection_is_independent_of_slenderness() {
    let mut cfg = config(Regime::Static { pressure: 1.0, temperature: None });
    cfg.geometry = PlateGeometry::rectangle(1.0, 1.0);
    cfg.material = FgmMaterial::homogeneous(PhaseProperties::ALUMINUM);
    cfg.mesh = MeshSpec::new(2, 16);
    cfg.shear = ShearCorrection::stabilized();
    let ratios = [5.0, 10.0, 100.0, 1e4, 1e6];
    let table = sweep(&cfg, SweepParam::AOverH, &ratios).unwrap();
    let k = table.headers.iter().position(|h| h == "w_bar").unwrap();
    let w: Vec<f64> = table
        .rows
        .iter()
        .map(|r| match r[k] {
            fgm_iga::cli::table::Cell::Number(v) => v,
            ref c => panic!("{c:?}"),
        })
        .collect();
    // Thick plates deflect more through shear.
    assert!(w[0] > w[1] && w[1] > w[2]);
    let (lo, hi) = w[2..].iter().fold((f64::MAX, f64::MIN), |(l, h), &v| (l.min(v), h.max(v)));
    assert!((hi - lo) / lo < 0.01, "{w:?}");
}

#[test]
fn shear_lowers_the_frequency_of_thick_plates() {
    // omega_bar / h^2 is the classical frequency parameter up to a constant.
    let mut thin = config(Regime::Vibration { modes: 1 });
    thin.thickness = 0.01;
    let mut thick = thin.clone();
    thick.thickness = 0.2;
    let a = run(&thin).unwrap().scaled_value("omega_bar_1").unwrap() / 0.01f64.powi(2);
    let b = run(&thick).unwrap().scaled_value("omega_bar_1").unwrap() / 0.2f64.powi(2);
    assert!(b < a);
}
