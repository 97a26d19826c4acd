use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which printed form of the slip-angle ω terms to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SlipConvention {
    /// `α_f = δ − (v_y + l_f ω)/v_x`, `α_r = −(v_y − l_r ω)/v_x`; the form
    /// the LPV matrices are derived from.
    #[default]
    Physical,
    /// The ω signs exactly as printed next to the model equations.
    Printed,
}

/// Sign of the `ẋ = ±v_x`, `θ̇ = ±ω` rows of the LPV state matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum KinematicSign {
    #[default]
    Physical,
    /// `−1` entries as printed in the matrix.
    Printed,
}

impl KinematicSign {
    pub fn value(self) -> f64 {
        match self {
            KinematicSign::Physical => 1.0,
            KinematicSign::Printed => -1.0,
        }
    }
}

/// Vehicle constants of the Driverless UPC car.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VehicleParams {
    pub l_f: f64,
    pub l_r: f64,
    pub m: f64,
    pub inertia: f64,
    pub d_f: f64,
    pub c_f: f64,
    pub b_f: f64,
    pub d_r: f64,
    pub c_r: f64,
    pub b_r: f64,
    /// Tire-road friction coefficient from the parameter table. Not used by
    /// the models; see `rolling_mu`.
    pub mu: f64,
    /// Coefficient of the `μ m g` term of the longitudinal resistance.
    /// The table's 1.4 would need 13.7 m/s² of drive just to hold speed,
    /// beyond the 13 m/s² input bound; 0.55 puts the cruise input at the
    /// middle of the input box at 5 m/s.
    pub rolling_mu: f64,
    pub rho: f64,
    pub g: f64,
    pub cda_f: f64,
    pub cda_l: f64,
    /// Newtons per unit of the Pacejka peak constant `d`.
    pub tire_force_scale: f64,
    pub slip_convention: SlipConvention,
    pub kinematic_sign: KinematicSign,
}

impl Default for VehicleParams {
    fn default() -> Self {
        VehicleParams {
            l_f: 0.902,
            l_r: 0.638,
            m: 196.0,
            inertia: 93.0,
            d_f: 8.255,
            c_f: 1.6,
            b_f: 6.1,
            d_r: 8.255,
            c_r: 1.6,
            b_r: 6.1,
            mu: 1.4,
            rolling_mu: 0.55,
            rho: 1.225,
            g: 9.81,
            cda_f: 1.64,
            cda_l: 1.82,
            tire_force_scale: 300.0,
            slip_convention: SlipConvention::Physical,
            kinematic_sign: KinematicSign::Physical,
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("l_f", self.l_f),
            ("l_r", self.l_r),
            ("m", self.m),
            ("inertia", self.inertia),
            ("d_f", self.d_f),
            ("c_f", self.c_f),
            ("b_f", self.b_f),
            ("d_r", self.d_r),
            ("c_r", self.c_r),
            ("b_r", self.b_r),
            ("mu", self.mu),
            ("rolling_mu", self.rolling_mu),
            ("rho", self.rho),
            ("g", self.g),
            ("cda_f", self.cda_f),
            ("cda_l", self.cda_l),
            ("tire_force_scale", self.tire_force_scale),
        ];
        for (name, v) in named {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Validation(format!("vehicle parameter {name} = {v} must be positive")));
            }
        }
        Ok(())
    }

    /// Longitudinal resistance `F_df = μ m g + ½ ρ C_dAf v_x²` (with
    /// `μ = rolling_mu`).
    pub fn drag_force(&self, v_x: f64) -> f64 {
        self.rolling_mu * self.m * self.g + 0.5 * self.rho * self.cda_f * v_x * v_x
    }
}

/// LPV tire stiffness polynomial `C(α) = p₁α^{n−1} + … + p_n + p_{n+1}/(α + ε)`
/// with a constant saturation value near zero slip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TirePoly {
    /// `p₁ … p_{n+1}`, highest power first.
    pub coefficients: Vec<f64>,
    pub epsilon: f64,
    /// Upper end of the saturation band `[0, band]`.
    pub saturation_band: f64,
    pub saturation_value: f64,
}

impl TirePoly {
    pub fn front() -> Self {
        TirePoly {
            coefficients: vec![-2.167e6, 1.284e6, -0.288e6, 0.029e6, 15.038],
            epsilon: 1e-4,
            saturation_band: 0.0075,
            saturation_value: 4e4,
        }
    }

    pub fn rear() -> Self {
        TirePoly {
            coefficients: vec![-2.130e6, 1.198e6, -0.252e6, 0.024e6, 14.551],
            epsilon: 1e-4,
            saturation_band: 0.0075,
            saturation_value: 4e4,
        }
    }

    /// Polynomial order `n` (one less than the coefficient count).
    pub fn order(&self) -> usize {
        self.coefficients.len().saturating_sub(1)
    }
}

/// Everything the vehicle models need, loadable from TOML:
///
/// ```toml
/// [vehicle]
/// m = 196.0
/// slip_convention = "physical"
///
/// [front_tire]
/// coefficients = [-2.167e6, 1.284e6, -0.288e6, 0.029e6, 15.038]
/// epsilon = 1e-4
/// saturation_band = 0.0075
/// saturation_value = 4e4
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleConfig {
    #[serde(default)]
    pub vehicle: VehicleParams,
    #[serde(default = "TirePoly::front")]
    pub front_tire: TirePoly,
    #[serde(default = "TirePoly::rear")]
    pub rear_tire: TirePoly,
}

impl Default for VehicleConfig {
    fn default() -> Self {
        VehicleConfig {
            vehicle: VehicleParams::default(),
            front_tire: TirePoly::front(),
            rear_tire: TirePoly::rear(),
        }
    }
}

impl VehicleConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: VehicleConfig = toml::from_str(text)?;
        cfg.vehicle.validate()?;
        for (name, t) in [("front_tire", &cfg.front_tire), ("rear_tire", &cfg.rear_tire)] {
            if t.coefficients.len() < 2 || !(t.epsilon > 0.0) || t.saturation_band < 0.0 {
                return Err(Error::Validation(format!("{name}: malformed tire polynomial")));
            }
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
        Self::from_toml_str(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_vehicle_table() {
        let p = VehicleParams::default();
        assert_eq!((p.l_f, p.l_r, p.m, p.inertia), (0.902, 0.638, 196.0, 93.0));
        assert_eq!((p.d_f, p.c_f, p.b_f, p.mu), (8.255, 1.6, 6.1, 1.4));
        assert_eq!((p.rho, p.cda_f, p.cda_l, p.g), (1.225, 1.64, 1.82, 9.81));
        p.validate().unwrap();
    }

    #[test]
    fn toml_overrides_and_defaults() {
        let cfg = VehicleConfig::from_toml_str(
            "[vehicle]\nm = 200.0\nslip_convention = \"printed\"\n",
        )
        .unwrap();
        assert_eq!(cfg.vehicle.m, 200.0);
        assert_eq!(cfg.vehicle.l_f, 0.902);
        assert_eq!(cfg.vehicle.slip_convention, SlipConvention::Printed);
        assert_eq!(cfg.rear_tire, TirePoly::rear());
    }

    #[test]
    fn toml_rejects_nonpositive_and_unknown() {
        assert!(VehicleConfig::from_toml_str("[vehicle]\nm = -1.0\n").is_err());
        assert!(VehicleConfig::from_toml_str("[vehicle]\nmass = 1.0\n").is_err());
    }
}
