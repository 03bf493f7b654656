//! End-to-end runs: mesh, section, operators, solve, and the customary
//! nondimensional forms of the results.

use std::f64::consts::PI;

use nalgebra::Matrix2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::assembly::{
    aero_matrix, apply_bcs, geometric_matrix, mass_matrix, stiffness_matrix, thermal_load_vector, uniform_load_vector,
    BoundarySpec, Constraints, Discretization, GlobalSystem,
};
use crate::linalg::KrylovOptions;
use crate::material::{FgmMaterial, TemperatureField, TemperatureProfile};
use crate::nurbs::PlateGeometry;
use crate::plate_model::{compute_section, stress_at, ShearCorrection};
use crate::solvers::{
    flutter_sweep, solve_buckling, solve_static, solve_vibration, FlutterOptions, FlutterOutcome, FlutterPoint,
};
use crate::{Error, Result};

/// Polynomial degree and control points per side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeshSpec {
    pub degree: usize,
    pub control_points: usize,
}

impl MeshSpec {
    pub fn new(degree: usize, control_points: usize) -> Self {
        Self { degree, control_points }
    }
}

impl Default for MeshSpec {
    fn default() -> Self {
        Self::new(2, 17)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InPlaneLoading {
    /// `N_xx = -1`.
    Uniaxial,
    /// `N_xx = N_yy = -1`.
    Biaxial,
}

/// What to solve for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Regime {
    /// Uniform transverse pressure, optionally with a steady temperature field.
    Static {
        pressure: f64,
        temperature: Option<TemperatureField>,
    },
    Vibration {
        modes: usize,
    },
    MechanicalBuckling {
        loading: InPlaneLoading,
    },
    /// Critical `T_c - T_m` with the metal face held `metal_rise` above the
    /// stress-free temperature.
    ThermalBuckling {
        profile: TemperatureProfile,
        metal_rise: f64,
    },
    /// `lambda_max` in units of `D_c / a^3`.
    Flutter {
        flow_angle_deg: f64,
        lambda_max: f64,
        steps: usize,
        branches: usize,
    },
}

impl Regime {
    pub fn tag(&self) -> &'static str {
        match self {
            Regime::Static { .. } => "static",
            Regime::Vibration { .. } => "vibration",
            Regime::MechanicalBuckling { .. } => "mechanical-buckling",
            Regime::ThermalBuckling { .. } => "thermal-buckling",
            Regime::Flutter { .. } => "flutter",
        }
    }
}

/// Complete description of one analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub geometry: PlateGeometry,
    /// Plate thickness, m.
    pub thickness: f64,
    pub material: FgmMaterial,
    pub mesh: MeshSpec,
    pub boundary: BoundarySpec,
    pub shear: ShearCorrection,
    pub regime: Regime,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let g = &self.geometry;
        if !(g.a > 0.0 && g.b > 0.0 && self.thickness > 0.0) {
            return Err(Error::Configuration("geometry: a, b and h must be positive".into()));
        }
        self.material.validate()?;
        self.shear.validate()?;
        match &self.regime {
            Regime::Vibration { modes } if *modes == 0 => {
                Err(Error::Configuration("regime: at least one mode is required".into()))
            }
            Regime::Flutter { lambda_max, steps, branches, .. }
                if !(*lambda_max > 0.0) || *steps == 0 || *branches < 2 =>
            {
                Err(Error::Configuration("regime: flutter needs lambda_max > 0, steps >= 1 and branches >= 2".into()))
            }
            _ => Ok(()),
        }
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("run configuration serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    /// Ceramic bending rigidity `E_c h^3 / (12 (1 - nu_c^2))`.
    pub fn ceramic_rigidity(&self) -> f64 {
        let c = &self.material.ceramic;
        c.young_modulus * self.thickness.powi(3) / (12.0 * (1.0 - c.poisson_ratio.powi(2)))
    }
}

/// A named value with its unit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Quantity {
    pub name: String,
    pub value: f64,
    pub unit: String,
}

impl Quantity {
    fn new(name: &str, value: f64, unit: &str) -> Self {
        Self { name: name.into(), value, unit: unit.into() }
    }
}

/// Dimensional results straight from the solvers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum RawResult {
    Static {
        center_deflection: f64,
        /// `sigma_xx` on the top face at the centre.
        center_stress_top: f64,
    },
    Vibration {
        omega: Vec<f64>,
    },
    MechanicalBuckling {
        critical_resultant: f64,
    },
    ThermalBuckling {
        critical_delta_t: f64,
    },
    Flutter {
        outcome: FlutterOutcome,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MeshStats {
    pub control_points: usize,
    pub elements: usize,
    pub dofs: usize,
    pub free_dofs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisResult {
    pub regime: &'static str,
    pub raw: RawResult,
    pub raw_quantities: Vec<Quantity>,
    pub scaled: Vec<Quantity>,
    /// Set when no critical value exists in the searched range.
    pub status: Option<String>,
    pub mesh: MeshStats,
    pub config_hash: String,
    #[serde(skip)]
    pub flutter_trace: Vec<FlutterPoint>,
}

impl AnalysisResult {
    pub fn scaled_value(&self, name: &str) -> Option<f64> {
        self.scaled.iter().find(|q| q.name == name).map(|q| q.value)
    }

    /// The headline nondimensional number of the regime.
    pub fn primary(&self) -> Option<f64> {
        self.scaled.first().map(|q| q.value)
    }
}

fn stage<T>(label: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Configuration(m) => Error::Configuration(format!("{label}: {m}")),
        Error::Domain(m) => Error::Domain(format!("{label}: {m}")),
        Error::Geometry(m) => Error::Geometry(format!("{label}: {m}")),
        Error::Internal(m) => Error::Internal(format!("{label}: {m}")),
        other => other,
    })
}

/// Runs the configured analysis.
pub fn run(config: &RunConfig) -> Result<AnalysisResult> {
    run_with(config, &KrylovOptions::default())
}

pub fn run_with(config: &RunConfig, krylov: &KrylovOptions) -> Result<AnalysisResult> {
    stage("config", config.validate())?;
    let h = config.thickness;
    let mesh = config.mesh;
    let disc = stage(
        "mesh",
        Discretization::new(config.geometry, (mesh.degree, mesh.degree), (mesh.control_points, mesh.control_points)),
    )?;
    let constraints = stage("boundary", Constraints::build(&disc, &config.boundary))?;
    let stats = MeshStats {
        control_points: disc.dofs.num_points(),
        elements: disc.num_elements(),
        dofs: disc.dofs.len(),
        free_dofs: constraints.num_free(),
    };
    let temperature = match &config.regime {
        Regime::Static { temperature, .. } => temperature.as_ref(),
        _ => None,
    };
    let section = stage("section", compute_section(&config.material, h, &config.shear, disc.diameter(0), temperature))?;
    let stiffness = stage("assembly", stiffness_matrix(&disc, &section, &config.shear, h))?;
    let mut system = GlobalSystem::new(stiffness);
    let mut trace = Vec::new();

    let raw = match &config.regime {
        Regime::Static { pressure, temperature } => {
            let mut load = stage("assembly", uniform_load_vector(&disc, *pressure))?;
            if temperature.is_some() {
                let thermal = stage("assembly", thermal_load_vector(&disc, &section))?;
                load.iter_mut().zip(&thermal).for_each(|(a, b)| *a += b);
                let n = section.thermal_force;
                let prestress = Matrix2::new(-n[0], -n[2], -n[2], -n[1]);
                system.geometric = Some(stage("assembly", geometric_matrix(&disc, &prestress, h))?);
            }
            system.load = Some(load);
            let reduced = stage("boundary", apply_bcs(&system, &constraints))?;
            let k = match &reduced.geometric {
                Some(g) => reduced.stiffness.add_scaled(1.0, g),
                None => reduced.stiffness.clone(),
            };
            let x = stage("solve", solve_static(&k, reduced.load.as_deref().unwrap_or_default()))?;
            let full = constraints.expand(&x);
            let sample = stage("post", disc.evaluate(0.5, 0.5, &full))?;
            let stress = stage(
                "post",
                stress_at(
                    &config.material,
                    h,
                    &sample.membrane_strain,
                    &sample.curvature,
                    h / 2.0,
                    temperature.as_ref(),
                ),
            )?;
            RawResult::Static { center_deflection: sample.displacement[2], center_stress_top: stress[0] }
        }
        Regime::Vibration { modes } => {
            system.mass = Some(stage("assembly", mass_matrix(&disc, &section))?);
            let reduced = stage("boundary", apply_bcs(&system, &constraints))?;
            let mass = reduced.mass.as_ref().expect("mass assembled");
            let r = stage("solve", solve_vibration(&reduced.stiffness, mass, *modes, krylov))?;
            RawResult::Vibration { omega: r.values.iter().map(|w2| w2.sqrt()).collect() }
        }
        Regime::MechanicalBuckling { loading } => {
            let unit = match loading {
                InPlaneLoading::Uniaxial => Matrix2::new(-1.0, 0.0, 0.0, 0.0),
                InPlaneLoading::Biaxial => Matrix2::new(-1.0, 0.0, 0.0, -1.0),
            };
            system.geometric = Some(stage("assembly", geometric_matrix(&disc, &unit, h))?);
            let reduced = stage("boundary", apply_bcs(&system, &constraints))?;
            let kg = reduced.geometric.as_ref().expect("geometric assembled");
            let r = stage("solve", solve_buckling(&reduced.stiffness, kg, 1, krylov))?;
            RawResult::MechanicalBuckling { critical_resultant: r.values[0] }
        }
        Regime::ThermalBuckling { profile, metal_rise } => {
            let offset =
                TemperatureField { t_metal: *metal_rise, t_ceramic: *metal_rise, t_reference: 0.0, profile: *profile };
            let shape = TemperatureField { t_metal: 0.0, t_ceramic: 1.0, t_reference: 0.0, profile: *profile };
            let resultant = |field: &TemperatureField| -> Result<f64> {
                Ok(compute_section(&config.material, h, &config.shear, disc.diameter(0), Some(field))?.thermal_force[0])
            };
            let n_offset = stage("section", resultant(&offset))?;
            let n_shape = stage("section", resultant(&shape))?;
            let base = stage("assembly", geometric_matrix(&disc, &Matrix2::new(-n_offset, 0.0, 0.0, -n_offset), h))?;
            system.stiffness = system.stiffness.add_scaled(1.0, &base);
            system.geometric =
                Some(stage("assembly", geometric_matrix(&disc, &Matrix2::new(-n_shape, 0.0, 0.0, -n_shape), h))?);
            let reduced = stage("boundary", apply_bcs(&system, &constraints))?;
            let kg = reduced.geometric.as_ref().expect("geometric assembled");
            let r = stage("solve", solve_buckling(&reduced.stiffness, kg, 1, krylov))?;
            RawResult::ThermalBuckling { critical_delta_t: r.values[0] }
        }
        Regime::Flutter { flow_angle_deg, lambda_max, steps, branches } => {
            system.mass = Some(stage("assembly", mass_matrix(&disc, &section))?);
            system.aero = Some(stage("assembly", aero_matrix(&disc, *flow_angle_deg))?);
            let reduced = stage("boundary", apply_bcs(&system, &constraints))?;
            let scale = config.ceramic_rigidity() / config.geometry.a.powi(3);
            let mut opts = FlutterOptions::new(lambda_max * scale);
            opts.steps = *steps;
            opts.branches = *branches;
            opts.krylov = *krylov;
            let r = stage(
                "solve",
                flutter_sweep(
                    &reduced.stiffness,
                    reduced.aero.as_ref().expect("aero assembled"),
                    reduced.mass.as_ref().expect("mass assembled"),
                    &opts,
                ),
            )?;
            trace = r.trace;
            RawResult::Flutter { outcome: r.outcome }
        }
    };
    let (raw_quantities, scaled, status) = nondimensionalize(&raw, config)?;
    Ok(AnalysisResult {
        regime: config.regime.tag(),
        raw,
        raw_quantities,
        scaled,
        status,
        mesh: stats,
        config_hash: config.hash(),
        flutter_trace: trace,
    })
}

type Scaled = (Vec<Quantity>, Vec<Quantity>, Option<String>);

/// Raw and nondimensional quantities for `raw` under `config`.
///
/// * deflection: `100 w E_m h^3 / (12 (1 - nu_m^2) p a^4)`, also `w / h`
/// * stress: `sigma_xx h^2 / (p a^2)`
/// * frequency: `omega h sqrt(rho_c / E_c)`
/// * buckling: `N b^2 / (pi^2 D_c)`
/// * flutter: `lambda a^3 / D_c` and `omega^2 a^4 rho_c h / D_c`
pub fn nondimensionalize(raw: &RawResult, config: &RunConfig) -> Result<Scaled> {
    let h = config.thickness;
    let a = config.geometry.a;
    let b = config.geometry.b;
    let ceramic = &config.material.ceramic;
    let metal = &config.material.metal;
    let dc = config.ceramic_rigidity();
    match raw {
        RawResult::Static { center_deflection, center_stress_top } => {
            let raw_q = vec![
                Quantity::new("center_deflection", *center_deflection, "m"),
                Quantity::new("center_stress_xx_top", *center_stress_top, "Pa"),
            ];
            let p = match &config.regime {
                Regime::Static { pressure, .. } => *pressure,
                _ => return Err(Error::Internal("static result under a non-static regime".into())),
            };
            let thermal = matches!(&config.regime, Regime::Static { temperature: Some(_), .. });
            let mut scaled = Vec::new();
            if p == 0.0 {
                if !thermal {
                    return Err(Error::Domain("zero pressure: deflection and stress scalings divide by p".into()));
                }
            } else {
                let dm = metal.young_modulus * h.powi(3) / (12.0 * (1.0 - metal.poisson_ratio.powi(2)));
                scaled.push(Quantity::new("w_bar", 100.0 * center_deflection * dm / (p * a.powi(4)), "-"));
            }
            scaled.push(Quantity::new("w_over_h", center_deflection / h, "-"));
            if p != 0.0 {
                scaled.push(Quantity::new("sigma_xx_bar", center_stress_top * h * h / (p * a * a), "-"));
            }
            Ok((raw_q, scaled, None))
        }
        RawResult::Vibration { omega } => {
            let f = h * (ceramic.density / ceramic.young_modulus).sqrt();
            let raw_q = omega
                .iter()
                .enumerate()
                .map(|(i, w)| Quantity::new(&format!("omega_{}", i + 1), *w, "rad/s"))
                .collect();
            let scaled = omega
                .iter()
                .enumerate()
                .map(|(i, w)| Quantity::new(&format!("omega_bar_{}", i + 1), w * f, "-"))
                .collect();
            Ok((raw_q, scaled, None))
        }
        RawResult::MechanicalBuckling { critical_resultant } => Ok((
            vec![Quantity::new("critical_resultant", *critical_resultant, "N/m")],
            vec![Quantity::new("lambda_cr", critical_resultant * b * b / (PI * PI * dc), "-")],
            None,
        )),
        RawResult::ThermalBuckling { critical_delta_t } => Ok((
            vec![Quantity::new("critical_delta_t", *critical_delta_t, "degC")],
            vec![Quantity::new("delta_t_cr", *critical_delta_t, "degC")],
            None,
        )),
        RawResult::Flutter { outcome } => match outcome {
            FlutterOutcome::Coalescence { lambda, omega_sq } => {
                let omega_sq_bar = omega_sq * a.powi(4) * ceramic.density * h / dc;
                Ok((
                    vec![
                        Quantity::new("lambda_cr", *lambda, "Pa"),
                        Quantity::new("omega_sq_cr", *omega_sq, "rad^2/s^2"),
                    ],
                    vec![
                        Quantity::new("lambda_cr_bar", lambda * a.powi(3) / dc, "-"),
                        Quantity::new("omega_sq_cr_bar", omega_sq_bar, "-"),
                        Quantity::new("omega_cr_bar", omega_sq_bar.max(0.0).sqrt(), "-"),
                    ],
                    None,
                ))
            }
            FlutterOutcome::StableUpTo { lambda_max } => Ok((
                vec![Quantity::new("lambda_max", *lambda_max, "Pa")],
                vec![Quantity::new("lambda_max_bar", lambda_max * a.powi(3) / dc, "-")],
                Some("stable up to lambda_max".into()),
            )),
        },
    }
}

/// Runs `base` over a list of control point counts, in parallel.
pub fn convergence_study(base: &RunConfig, control_points: &[usize]) -> Result<Vec<(MeshSpec, AnalysisResult)>> {
    control_points
        .par_iter()
        .map(|&n| {
            let mut cfg = base.clone();
            cfg.mesh.control_points = n;
            run(&cfg).map(|r| (cfg.mesh, r))
        })
        .collect()
}
