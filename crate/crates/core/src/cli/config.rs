//! TOML run configuration. Keys carry their units; unknown keys are rejected.

use serde::Deserialize;

use crate::analysis::{InPlaneLoading, MeshSpec, Regime, RunConfig};
use crate::assembly::{BoundarySpec, InPlaneRestraint};
use crate::material::{FgmMaterial, Homogenization, PhaseProperties, TemperatureField, TemperatureProfile};
use crate::nurbs::PlateGeometry;
use crate::plate_model::{ShearCorrection, Stabilization};
use crate::{Error, Result};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub schema: String,
    /// Base name of the output files; defaults to the config file stem.
    pub name: Option<String>,
    pub geometry: GeometryDoc,
    pub material: MaterialDoc,
    #[serde(default)]
    pub mesh: MeshDoc,
    #[serde(default)]
    pub boundary: BoundaryDoc,
    #[serde(default)]
    pub shear: ShearDoc,
    pub analysis: AnalysisDoc,
    /// Steady temperature field for static runs.
    pub temperature: Option<TemperatureDoc>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryDoc {
    pub a_m: f64,
    pub b_m: f64,
    pub h_m: f64,
    #[serde(default)]
    pub skew_deg: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum PhaseDoc {
    Preset(String),
    Custom(CustomPhaseDoc),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomPhaseDoc {
    pub young_modulus_pa: f64,
    pub poisson_ratio: f64,
    pub conductivity_w_per_m_k: f64,
    pub expansion_per_c: f64,
    pub density_kg_per_m3: f64,
}

impl PhaseDoc {
    fn resolve(&self, role: &str) -> Result<PhaseProperties> {
        match self {
            PhaseDoc::Preset(name) => PhaseProperties::preset(name).ok_or_else(|| {
                Error::Configuration(format!(
                    "material.{role}: unknown phase '{name}' (known: al, zro2-1, zro2-2, al2o3)"
                ))
            }),
            PhaseDoc::Custom(c) => PhaseProperties::new(
                c.young_modulus_pa,
                c.poisson_ratio,
                c.conductivity_w_per_m_k,
                c.expansion_per_c,
                c.density_kg_per_m3,
            )
            .map_err(|e| Error::Configuration(format!("material.{role}: {e}"))),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialDoc {
    pub ceramic: PhaseDoc,
    pub metal: PhaseDoc,
    pub gradient_index: f64,
    #[serde(default)]
    pub homogenization: Homogenization,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshDoc {
    pub degree: usize,
    pub control_points: usize,
}

impl Default for MeshDoc {
    fn default() -> Self {
        let m = MeshSpec::default();
        Self { degree: m.degree, control_points: m.control_points }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryDoc {
    /// Four letters for the edges left, bottom, right, top.
    pub edges: String,
    #[serde(default)]
    pub in_plane: InPlaneRestraint,
}

impl Default for BoundaryDoc {
    fn default() -> Self {
        Self { edges: "SSSS".into(), in_plane: InPlaneRestraint::default() }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "kebab-case")]
pub enum StabilizationDoc {
    #[default]
    Off,
    Modified,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShearDoc {
    pub factor: Option<f64>,
    #[serde(default)]
    pub stabilization: StabilizationDoc,
    pub beta: Option<u32>,
    pub exponent: Option<u32>,
}

impl Default for ShearDoc {
    fn default() -> Self {
        Self { factor: None, stabilization: StabilizationDoc::Off, beta: None, exponent: None }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case", tag = "kind")]
pub enum AnalysisDoc {
    Static {
        pressure_pa: f64,
    },
    Vibration {
        #[serde(default = "one")]
        modes: usize,
    },
    MechanicalBuckling {
        loading: InPlaneLoading,
    },
    ThermalBuckling {
        #[serde(default)]
        profile: TemperatureProfile,
        #[serde(default = "metal_rise")]
        metal_rise_c: f64,
    },
    Flutter {
        #[serde(default)]
        flow_angle_deg: f64,
        /// Upper end of the sweep in units of `D_c / a^3`.
        lambda_max_nondim: f64,
        #[serde(default = "steps")]
        steps: usize,
        #[serde(default = "branches")]
        branches: usize,
    },
}

fn one() -> usize {
    1
}
fn metal_rise() -> f64 {
    5.0
}
fn steps() -> usize {
    40
}
fn branches() -> usize {
    6
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemperatureDoc {
    pub metal_c: f64,
    pub ceramic_c: f64,
    #[serde(default)]
    pub reference_c: f64,
    #[serde(default)]
    pub profile: TemperatureProfile,
}

impl ConfigDocument {
    pub fn parse(text: &str) -> Result<Self> {
        let doc: Self = toml::from_str(text).map_err(|e| Error::Configuration(e.to_string()))?;
        if doc.schema != SCHEMA_VERSION {
            return Err(Error::Configuration(format!(
                "schema: unsupported version '{}', expected '{SCHEMA_VERSION}'",
                doc.schema
            )));
        }
        Ok(doc)
    }

    pub fn to_run_config(&self) -> Result<RunConfig> {
        let g = &self.geometry;
        for (key, v) in [("geometry.a_m", g.a_m), ("geometry.b_m", g.b_m), ("geometry.h_m", g.h_m)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Configuration(format!("{key}: must be positive, got {v}")));
            }
        }
        let material = FgmMaterial::new(
            self.material.ceramic.resolve("ceramic")?,
            self.material.metal.resolve("metal")?,
            self.material.gradient_index,
            self.material.homogenization,
        )
        .map_err(|e| Error::Configuration(format!("material: {e}")))?;
        let boundary: BoundarySpec = self
            .boundary
            .edges
            .parse::<BoundarySpec>()
            .map_err(|e| Error::Configuration(format!("boundary.edges: {e}")))?
            .with_in_plane(self.boundary.in_plane);
        let defaults = ShearCorrection::default();
        let stabilized = ShearCorrection::stabilized();
        let stabilization = match self.shear.stabilization {
            StabilizationDoc::Off => {
                if self.shear.beta.is_some() || self.shear.exponent.is_some() {
                    return Err(Error::Configuration(
                        "shear: beta and exponent need stabilization = \"modified\"".into(),
                    ));
                }
                Stabilization::Off
            }
            StabilizationDoc::Modified => {
                let Stabilization::Modified { beta, exponent } = stabilized.stabilization else {
                    unreachable!("stabilized() is modified")
                };
                Stabilization::Modified {
                    beta: self.shear.beta.unwrap_or(beta),
                    exponent: self.shear.exponent.unwrap_or(exponent),
                }
            }
        };
        let shear = ShearCorrection { factor: self.shear.factor.unwrap_or(defaults.factor), stabilization };
        let temperature = self.temperature.as_ref().map(|t| TemperatureField {
            t_metal: t.metal_c,
            t_ceramic: t.ceramic_c,
            t_reference: t.reference_c,
            profile: t.profile,
        });
        let regime = match &self.analysis {
            AnalysisDoc::Static { pressure_pa } => Regime::Static { pressure: *pressure_pa, temperature },
            other => {
                if temperature.is_some() {
                    return Err(Error::Configuration(
                        "temperature: a steady field is only used by static analyses".into(),
                    ));
                }
                match other {
                    AnalysisDoc::Vibration { modes } => Regime::Vibration { modes: *modes },
                    AnalysisDoc::MechanicalBuckling { loading } => Regime::MechanicalBuckling { loading: *loading },
                    AnalysisDoc::ThermalBuckling { profile, metal_rise_c } => {
                        Regime::ThermalBuckling { profile: *profile, metal_rise: *metal_rise_c }
                    }
                    AnalysisDoc::Flutter { flow_angle_deg, lambda_max_nondim, steps, branches } => Regime::Flutter {
                        flow_angle_deg: *flow_angle_deg,
                        lambda_max: *lambda_max_nondim,
                        steps: *steps,
                        branches: *branches,
                    },
                    AnalysisDoc::Static { .. } => unreachable!(),
                }
            }
        };
        let config = RunConfig {
            geometry: PlateGeometry { a: g.a_m, b: g.b_m, skew_deg: g.skew_deg },
            thickness: g.h_m,
            material,
            mesh: MeshSpec::new(self.mesh.degree, self.mesh.control_points),
            boundary,
            shear,
            regime,
        };
        config.validate()?;
        Ok(config)
    }
}

/// Parses and converts in one step.
pub fn load_config(text: &str) -> Result<(ConfigDocument, RunConfig)> {
    let doc = ConfigDocument::parse(text)?;
    let config = doc.to_run_config()?;
    Ok((doc, config))
}

#[cfg(test)]
mod tests {
    use super::*;

    const STATIC: &str = r#"
schema = "1"
[geometry]
a_m = 1.0
b_m = 1.0
h_m = 0.2
[material]
ceramic = "zro2-1"
metal = "al"
gradient_index = 1.0
homogenization = "rule-of-mixtures"
[mesh]
degree = 2
control_points = 8
[boundary]
edges = "SSSS"
in_plane = "tangential"
[analysis]
kind = "static"
pressure_pa = 1.0
"#;

    #[test]
    fn parses_static_document() {
        let (_, cfg) = load_config(STATIC).unwrap();
        assert_eq!(cfg.thickness, 0.2);
        assert_eq!(cfg.material.homogenization, Homogenization::RuleOfMixtures);
        assert_eq!(cfg.boundary.in_plane, InPlaneRestraint::Tangential);
        assert!(matches!(cfg.regime, Regime::Static { pressure, temperature: None } if pressure == 1.0));
    }

    #[test]
    fn missing_key_is_named() {
        let text = STATIC.replace("h_m = 0.2\n", "");
        let err = load_config(&text).unwrap_err().to_string();
        assert!(err.contains("h_m"), "{err}");
    }

    #[test]
    fn unknown_key_rejected() {
        let text = STATIC.replace("h_m = 0.2\n", "h_m = 0.2\nthickness = 3\n");
        let err = load_config(&text).unwrap_err().to_string();
        assert!(err.contains("thickness"), "{err}");
        let text = STATIC.replace("pressure_pa = 1.0", "pressure_pa = 1.0\nmodes = 3");
        assert!(load_config(&text).is_err());
    }

    #[test]
    fn custom_phase_and_stabilization() {
        let text = STATIC
            .replace(
                "ceramic = \"zro2-1\"",
                "ceramic = { young_modulus_pa = 1e9, poisson_ratio = 0.25, conductivity_w_per_m_k = 1.0, expansion_per_c = 1e-6, density_kg_per_m3 = 1000.0 }",
            )
            .replace("[analysis]", "[shear]\nstabilization = \"modified\"\nbeta = 2\n[analysis]");
        let (_, cfg) = load_config(&text).unwrap();
        assert_eq!(cfg.material.ceramic.young_modulus, 1e9);
        assert_eq!(cfg.shear.stabilization, Stabilization::Modified { beta: 2, exponent: 2 });
    }

    #[test]
    fn bad_schema_and_phase() {
        assert!(load_config(&STATIC.replace("schema = \"1\"", "schema = \"9\"")).is_err());
        let err = load_config(&STATIC.replace("\"zro2-1\"", "\"unobtainium\"")).unwrap_err();
        assert!(err.to_string().contains("unobtainium"));
    }
}
