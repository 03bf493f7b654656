//! Effective through-thickness properties of a ceramic/metal FGM and the
//! steady one-dimensional temperature profile across the plate.
//!
//! The top face (`z = h/2`) is pure ceramic and the bottom face
//! (`z = -h/2`) pure metal, with a power-law ceramic volume fraction in
//! between. Elastic and thermal properties are homogenised either by the
//! rule of mixtures or by the Mori-Tanaka scheme; density always follows the
//! rule of mixtures.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Relative slack allowed when checking `|z| <= h/2`.
const Z_SLACK: f64 = 1e-12;

/// Isotropic properties of one constituent phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseProperties {
    /// Young's modulus, Pa.
    pub young_modulus: f64,
    pub poisson_ratio: f64,
    /// Thermal conductivity, W/(m K).
    pub conductivity: f64,
    /// Linear thermal expansion coefficient, 1/degC.
    pub expansion_coeff: f64,
    /// Mass density, kg/m^3.
    pub density: f64,
}

impl PhaseProperties {
    pub const ALUMINUM: Self = Self::table(70e9, 0.3, 204.0, 23e-6, 2707.0);
    pub const ZIRCONIA_1: Self = Self::table(200e9, 0.3, 2.09, 10e-6, 5700.0);
    pub const ZIRCONIA_2: Self = Self::table(151e9, 0.3, 2.09, 10e-6, 3000.0);
    pub const ALUMINA: Self = Self::table(380e9, 0.3, 10.4, 7.2e-6, 3800.0);

    const fn table(e: f64, nu: f64, kappa: f64, alpha: f64, rho: f64) -> Self {
        Self { young_modulus: e, poisson_ratio: nu, conductivity: kappa, expansion_coeff: alpha, density: rho }
    }

    /// Validated constructor.
    pub fn new(
        young_modulus: f64,
        poisson_ratio: f64,
        conductivity: f64,
        expansion_coeff: f64,
        density: f64,
    ) -> Result<Self> {
        let p = Self::table(young_modulus, poisson_ratio, conductivity, expansion_coeff, density);
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.young_modulus > 0.0) {
            return Err(Error::Domain(format!("Young's modulus must be positive, got {}", self.young_modulus)));
        }
        if !(self.poisson_ratio > 0.0 && self.poisson_ratio < 0.5) {
            return Err(Error::Domain(format!("Poisson's ratio must lie in (0, 0.5), got {}", self.poisson_ratio)));
        }
        if !(self.conductivity > 0.0) {
            return Err(Error::Domain(format!("conductivity must be positive, got {}", self.conductivity)));
        }
        if !(self.density > 0.0) {
            return Err(Error::Domain(format!("density must be positive, got {}", self.density)));
        }
        if !self.expansion_coeff.is_finite() {
            return Err(Error::Domain("expansion coefficient must be finite".into()));
        }
        Ok(())
    }

    /// Bulk modulus `E / (3 (1 - 2 nu))`.
    pub fn bulk_modulus(&self) -> f64 {
        self.young_modulus / (3.0 * (1.0 - 2.0 * self.poisson_ratio))
    }

    /// Shear modulus `E / (2 (1 + nu))`.
    pub fn shear_modulus(&self) -> f64 {
        self.young_modulus / (2.0 * (1.0 + self.poisson_ratio))
    }

    /// Looks up one of the tabulated phases by name (case-insensitive).
    pub fn preset(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().replace(['_', ' '], "-").as_str() {
            "al" | "aluminum" | "aluminium" => Some(Self::ALUMINUM),
            "zro2-1" | "zirconia-1" => Some(Self::ZIRCONIA_1),
            "zro2-2" | "zirconia-2" => Some(Self::ZIRCONIA_2),
            "al2o3" | "alumina" => Some(Self::ALUMINA),
            _ => None,
        }
    }
}

/// Homogenisation scheme for elastic and thermal properties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Homogenization {
    RuleOfMixtures,
    #[default]
    MoriTanaka,
}

/// Two-phase power-law graded material.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FgmMaterial {
    pub ceramic: PhaseProperties,
    pub metal: PhaseProperties,
    pub gradient_index: f64,
    pub homogenization: Homogenization,
}

/// All effective properties at one thickness coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveProperties {
    pub young_modulus: f64,
    pub poisson_ratio: f64,
    pub conductivity: f64,
    pub expansion_coeff: f64,
    pub density: f64,
}

/// Ceramic volume fraction `((2z + h) / (2h))^n`.
pub fn volume_fraction(z: f64, h: f64, n: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::Domain(format!("thickness must be positive, got {h}")));
    }
    if !(n >= 0.0) || !n.is_finite() {
        return Err(Error::Domain(format!("gradient index must be finite and >= 0, got {n}")));
    }
    let r = normalized_height(z, h)?;
    Ok(r.powf(n))
}

/// `(2z + h) / (2h)`, clamped into `[0, 1]` after the range check.
fn normalized_height(z: f64, h: f64) -> Result<f64> {
    let half = 0.5 * h;
    if !(z.abs() <= half * (1.0 + Z_SLACK)) {
        return Err(Error::Domain(format!("z = {z} outside [-h/2, h/2] for h = {h}")));
    }
    Ok(((2.0 * z + h) / (2.0 * h)).clamp(0.0, 1.0))
}

impl FgmMaterial {
    pub fn new(
        ceramic: PhaseProperties,
        metal: PhaseProperties,
        gradient_index: f64,
        homogenization: Homogenization,
    ) -> Result<Self> {
        let m = Self { ceramic, metal, gradient_index, homogenization };
        m.validate()?;
        Ok(m)
    }

    /// Homogeneous material made of a single phase.
    pub fn homogeneous(phase: PhaseProperties) -> Self {
        Self { ceramic: phase, metal: phase, gradient_index: 0.0, homogenization: Homogenization::RuleOfMixtures }
    }

    pub fn validate(&self) -> Result<()> {
        self.ceramic.validate()?;
        self.metal.validate()?;
        if !(self.gradient_index >= 0.0) || !self.gradient_index.is_finite() {
            return Err(Error::Domain(format!("gradient index must be finite and >= 0, got {}", self.gradient_index)));
        }
        Ok(())
    }

    pub fn volume_fraction(&self, z: f64, h: f64) -> Result<f64> {
        volume_fraction(z, h, self.gradient_index)
    }

    /// `(E_eff, nu_eff)` at `z`.
    pub fn effective_elastic(&self, z: f64, h: f64) -> Result<(f64, f64)> {
        let vc = self.volume_fraction(z, h)?;
        Ok(self.elastic_at_fraction(vc))
    }

    /// `(kappa_eff, alpha_eff)` at `z`.
    pub fn effective_thermal(&self, z: f64, h: f64) -> Result<(f64, f64)> {
        let vc = self.volume_fraction(z, h)?;
        Ok(self.thermal_at_fraction(vc))
    }

    pub fn effective_density(&self, z: f64, h: f64) -> Result<f64> {
        let vc = self.volume_fraction(z, h)?;
        Ok(self.density_at_fraction(vc))
    }

    pub fn properties_at(&self, z: f64, h: f64) -> Result<EffectiveProperties> {
        let vc = self.volume_fraction(z, h)?;
        Ok(self.properties_at_fraction(vc))
    }

    pub fn properties_at_fraction(&self, vc: f64) -> EffectiveProperties {
        let (young_modulus, poisson_ratio) = self.elastic_at_fraction(vc);
        let (conductivity, expansion_coeff) = self.thermal_at_fraction(vc);
        EffectiveProperties {
            young_modulus,
            poisson_ratio,
            conductivity,
            expansion_coeff,
            density: self.density_at_fraction(vc),
        }
    }

    /// Elastic constants for a given ceramic volume fraction.
    pub fn elastic_at_fraction(&self, vc: f64) -> (f64, f64) {
        let (c, m) = (&self.ceramic, &self.metal);
        match self.homogenization {
            Homogenization::RuleOfMixtures => {
                (mix(c.young_modulus, m.young_modulus, vc), mix(c.poisson_ratio, m.poisson_ratio, vc))
            }
            // Pure phases are returned as given rather than rebuilt from K and G.
            Homogenization::MoriTanaka if vc == 1.0 => (c.young_modulus, c.poisson_ratio),
            Homogenization::MoriTanaka if vc == 0.0 => (m.young_modulus, m.poisson_ratio),
            Homogenization::MoriTanaka => {
                let (k, g) = self.mori_tanaka_moduli(vc);
                (9.0 * k * g / (3.0 * k + g), (3.0 * k - 2.0 * g) / (2.0 * (3.0 * k + g)))
            }
        }
    }

    /// Effective bulk and shear moduli from the Mori-Tanaka estimate.
    pub fn mori_tanaka_moduli(&self, vc: f64) -> (f64, f64) {
        let vm = 1.0 - vc;
        let (kc, gc) = (self.ceramic.bulk_modulus(), self.ceramic.shear_modulus());
        let (km, gm) = (self.metal.bulk_modulus(), self.metal.shear_modulus());
        let f1 = gm * (9.0 * km + 8.0 * gm) / (6.0 * (km + 2.0 * gm));
        let k = km + (kc - km) * vc / (1.0 + vm * 3.0 * (kc - km) / (3.0 * km + 4.0 * gm));
        let g = gm + (gc - gm) * vc / (1.0 + vm * (gc - gm) / (gm + f1));
        (k, g)
    }

    pub fn thermal_at_fraction(&self, vc: f64) -> (f64, f64) {
        let (c, m) = (&self.ceramic, &self.metal);
        match self.homogenization {
            Homogenization::RuleOfMixtures => {
                (mix(c.conductivity, m.conductivity, vc), mix(c.expansion_coeff, m.expansion_coeff, vc))
            }
            Homogenization::MoriTanaka if vc == 1.0 => (c.conductivity, c.expansion_coeff),
            Homogenization::MoriTanaka if vc == 0.0 => (m.conductivity, m.expansion_coeff),
            Homogenization::MoriTanaka => {
                let vm = 1.0 - vc;
                let dk = c.conductivity - m.conductivity;
                let kappa = m.conductivity + dk * vc / (1.0 + vm * dk / (3.0 * m.conductivity));
                let (k_eff, _) = self.mori_tanaka_moduli(vc);
                let (kc, km) = (c.bulk_modulus(), m.bulk_modulus());
                let denom = 1.0 / kc - 1.0 / km;
                // Equal bulk moduli leave the ratio undefined; fall back to linear weighting.
                let alpha = if denom.abs() <= 1e-14 * (1.0 / km).abs() {
                    mix(c.expansion_coeff, m.expansion_coeff, vc)
                } else {
                    m.expansion_coeff + (c.expansion_coeff - m.expansion_coeff) * (1.0 / k_eff - 1.0 / km) / denom
                };
                (kappa, alpha)
            }
        }
    }

    pub fn density_at_fraction(&self, vc: f64) -> f64 {
        mix(self.ceramic.density, self.metal.density, vc)
    }
}

fn mix(ceramic: f64, metal: f64, vc: f64) -> f64 {
    ceramic * vc + metal * (1.0 - vc)
}

/// Shape of the through-thickness temperature variation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TemperatureProfile {
    /// Six-term series solution of the graded steady conduction problem.
    #[default]
    NonlinearSeries,
    /// Leading series term only: the linear conduction profile.
    LinearTruncation,
    /// The whole section sits at the ceramic-face temperature.
    Uniform,
}

/// Steady temperature field, constant in the plate plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperatureField {
    /// Bottom (metal) face temperature, degC.
    pub t_metal: f64,
    /// Top (ceramic) face temperature, degC.
    pub t_ceramic: f64,
    /// Stress-free reference temperature, degC.
    pub t_reference: f64,
    pub profile: TemperatureProfile,
}

impl TemperatureField {
    /// A field with `T(z) = T_ref` everywhere.
    pub fn stress_free(t_reference: f64) -> Self {
        Self {
            t_metal: t_reference,
            t_ceramic: t_reference,
            t_reference,
            profile: TemperatureProfile::LinearTruncation,
        }
    }

    /// Dimensionless profile `eta(z, h)` with `eta(-h/2) = 0`, `eta(h/2) = 1`.
    pub fn shape(&self, mat: &FgmMaterial, z: f64, h: f64) -> Result<f64> {
        let r = normalized_height(z, h)?;
        match self.profile {
            TemperatureProfile::Uniform => Ok(1.0),
            TemperatureProfile::LinearTruncation => Ok(r),
            TemperatureProfile::NonlinearSeries => {
                let km = mat.metal.conductivity;
                if km == 0.0 {
                    return Err(Error::Domain("metal conductivity must be non-zero".into()));
                }
                let ratio = (mat.ceramic.conductivity - km) / km;
                let n = mat.gradient_index;
                let series = |r: f64| -> f64 {
                    (0..6)
                        .map(|k| {
                            let e = k as f64 * n + 1.0;
                            (-ratio).powi(k) * r.powf(e) / e
                        })
                        .sum()
                };
                Ok(series(r) / series(1.0))
            }
        }
    }

    /// `T(z) = T_m + (T_c - T_m) eta(z, h)`.
    pub fn temperature_at(&self, mat: &FgmMaterial, z: f64, h: f64) -> Result<f64> {
        Ok(self.t_metal + (self.t_ceramic - self.t_metal) * self.shape(mat, z, h)?)
    }

    /// Temperature rise above the stress-free state.
    pub fn rise_at(&self, mat: &FgmMaterial, z: f64, h: f64) -> Result<f64> {
        Ok(self.temperature_at(mat, z, h)? - self.t_reference)
    }
}

/// Free-function form of [`TemperatureField::temperature_at`].
pub fn temperature_at(field: &TemperatureField, mat: &FgmMaterial, z: f64, h: f64) -> Result<f64> {
    field.temperature_at(mat, z, h)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn al_al2o3(n: f64, scheme: Homogenization) -> FgmMaterial {
        FgmMaterial::new(PhaseProperties::ALUMINA, PhaseProperties::ALUMINUM, n, scheme).unwrap()
    }

    #[test]
    fn volume_fraction_faces_and_midplane() {
        let h = 0.1;
        assert_eq!(volume_fraction(h / 2.0, h, 3.7).unwrap(), 1.0);
        assert_eq!(volume_fraction(-h / 2.0, h, 2.0).unwrap(), 0.0);
        assert!((volume_fraction(0.0, h, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(volume_fraction(-h / 2.0, h, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn volume_fraction_rejects_out_of_range() {
        assert!(matches!(volume_fraction(0.06, 0.1, 1.0), Err(Error::Domain(_))));
        assert!(matches!(volume_fraction(0.0, 0.1, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn single_phase_limits_are_exact() {
        for scheme in [Homogenization::RuleOfMixtures, Homogenization::MoriTanaka] {
            let m = al_al2o3(1.0, scheme);
            let (e, nu) = m.elastic_at_fraction(1.0);
            assert!((e - 380e9).abs() <= 1e-12 * 380e9, "{scheme:?} {e}");
            assert!((nu - 0.3).abs() < 1e-14);
            let (e, nu) = m.elastic_at_fraction(0.0);
            assert!((e - 70e9).abs() <= 1e-12 * 70e9);
            assert!((nu - 0.3).abs() < 1e-14);
            let (k, a) = m.thermal_at_fraction(1.0);
            assert!((k - 10.4).abs() < 1e-12 && (a - 7.2e-6).abs() < 1e-20);
            let (k, a) = m.thermal_at_fraction(0.0);
            assert!((k - 204.0).abs() < 1e-12 && (a - 23e-6).abs() < 1e-20);
        }
    }

    #[test]
    fn density_rule_of_mixtures() {
        let m =
            FgmMaterial::new(PhaseProperties::ZIRCONIA_1, PhaseProperties::ALUMINUM, 1.0, Homogenization::MoriTanaka)
                .unwrap();
        assert!((m.density_at_fraction(0.5) - 4203.5).abs() < 1e-12);
        assert!((m.effective_density(0.05, 0.1).unwrap() - 5700.0).abs() < 1e-12);
        let m2 = FgmMaterial { gradient_index: 2.0, ..m };
        let expect = 2707.0 + (5700.0 - 2707.0) / 4.0;
        assert!((m2.effective_density(0.0, 0.1).unwrap() - expect).abs() < 1e-11);
    }

    /// Golden values from an independent evaluation of the Mori-Tanaka
    /// chain in 50-digit arithmetic (mpmath), Al/Al2O3 at V_c = 0.5.
    #[test]
    fn mori_tanaka_golden_half_fraction() {
        let m = al_al2o3(1.0, Homogenization::MoriTanaka);
        let (e, nu) = m.elastic_at_fraction(0.5);
        let (kappa, alpha) = m.thermal_at_fraction(0.5);
        assert!((e - MT_E_HALF).abs() <= 1e-12 * MT_E_HALF, "E = {e:.15e}");
        assert!((nu - MT_NU_HALF).abs() <= 1e-12, "nu = {nu:.15}");
        assert!((kappa - MT_KAPPA_HALF).abs() <= 1e-12 * MT_KAPPA_HALF, "kappa = {kappa:.15}");
        assert!((alpha - MT_ALPHA_HALF).abs() <= 1e-12 * MT_ALPHA_HALF, "alpha = {alpha:.15e}");
    }

    const MT_E_HALF: f64 = 144_019_125_721.604_875_5;
    const MT_NU_HALF: f64 = 0.287_237_535_761_003_4;
    const MT_KAPPA_HALF: f64 = 89.012_422_360_248_447;
    const MT_ALPHA_HALF: f64 = 1.364_658_753_709_198_8e-5;

    #[test]
    fn effective_modulus_bounded_by_phases() {
        let h = 1.0;
        for scheme in [Homogenization::RuleOfMixtures, Homogenization::MoriTanaka] {
            for n in [0.2, 1.0, 5.0] {
                let m = al_al2o3(n, scheme);
                for k in 0..1000 {
                    let z = -0.5 + k as f64 / 999.0;
                    let (e, nu) = m.effective_elastic(z, h).unwrap();
                    assert!(e >= 70e9 * (1.0 - 1e-14) && e <= 380e9 * (1.0 + 1e-14));
                    assert!(nu > 0.0 && nu < 0.5);
                }
            }
        }
    }

    #[test]
    fn temperature_endpoints() {
        for profile in [TemperatureProfile::NonlinearSeries, TemperatureProfile::LinearTruncation] {
            let f = TemperatureField { t_metal: 20.0, t_ceramic: 300.0, t_reference: 0.0, profile };
            for n in [0.0, 0.5, 1.0, 5.0] {
                let m = al_al2o3(n, Homogenization::MoriTanaka);
                assert_eq!(f.temperature_at(&m, -0.05, 0.1).unwrap(), 20.0);
                assert!((f.temperature_at(&m, 0.05, 0.1).unwrap() - 300.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn equal_conductivities_collapse_to_linear_profile() {
        let mut metal = PhaseProperties::ALUMINUM;
        metal.conductivity = PhaseProperties::ALUMINA.conductivity;
        let m = FgmMaterial::new(PhaseProperties::ALUMINA, metal, 2.0, Homogenization::MoriTanaka).unwrap();
        let f = TemperatureField {
            t_metal: 5.0,
            t_ceramic: 55.0,
            t_reference: 0.0,
            profile: TemperatureProfile::NonlinearSeries,
        };
        let h = 0.02;
        for k in 0..=50 {
            let z = -h / 2.0 + h * k as f64 / 50.0;
            let expect = 5.0 + 50.0 * (2.0 * z + h) / (2.0 * h);
            assert!((f.temperature_at(&m, z, h).unwrap() - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn series_profile_monotone_when_ceramic_conducts_less() {
        let f = TemperatureField {
            t_metal: 0.0,
            t_ceramic: 1.0,
            t_reference: 0.0,
            profile: TemperatureProfile::NonlinearSeries,
        };
        for n in [0.2, 0.5, 1.0, 2.0, 5.0, 10.0] {
            let m = al_al2o3(n, Homogenization::MoriTanaka);
            let mut prev = f64::NEG_INFINITY;
            for k in 0..=2000 {
                let z = -0.5 + k as f64 / 2000.0;
                let eta = f.shape(&m, z, 1.0).unwrap();
                assert!(eta >= prev - 1e-14, "n={n} z={z}");
                prev = eta;
            }
        }
    }

    #[test]
    fn pure_ceramic_is_uniform_through_thickness() {
        let m = al_al2o3(0.0, Homogenization::MoriTanaka);
        for z in [-0.5, -0.2, 0.0, 0.4, 0.5] {
            let p = m.properties_at(z, 1.0).unwrap();
            assert!((p.young_modulus - 380e9).abs() < 1e-3);
            assert_eq!(p.density, 3800.0);
        }
    }
}
