//! Multi-rate closed loop: the tube MPC at the slow rate, the gain-scheduled
//! local controller and the plant at the fast rate.

mod metrics;
mod profile;
mod run;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use metrics::{compute_metrics, summarize_run_csv, CsvSummary, Metrics};
pub use profile::{
    default_disturbances, make_reference, reference_envelope, DisturbanceProfiles, Profile, Reference, ReferenceSpec, Segment,
    DEFAULT_BUDGET_SHARE, MAX_REF_OMEGA, REFERENCE_VX_BAND,
};
pub use run::{run_scenario, LocalSample, RunLog, TickRecord};

use crate::error::{Error, Result};
use crate::mpc::MpcConfig;
use crate::schedule::LocalController;
use crate::vehicle::VehicleConfig;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DisturbanceSpec {
    None,
    /// Steps and a sinusoid on the slope, steps and a ramp on the wind,
    /// calibrated to the disturbance bounds.
    #[default]
    Default,
    Custom { slope: Profile, wind: Profile },
}

/// Which plant the local loop drives.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlantModel {
    /// Pacejka tires, arctangent slips, RK4.
    #[default]
    Nonlinear,
    /// The frozen LPV model of the current tick with additive disturbance,
    /// stepped with the same Euler rule as the nominal state.
    Linear,
}

/// What the MPC takes as its initial state each tick.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NominalReset {
    /// `x̃_0 = x_k`, the measured state.
    #[default]
    Anchor,
    /// `x̃_0` continues from the nominal trajectory (classical tube MPC).
    Carry,
}

/// How local steps are grouped into MPC ticks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateCoupling {
    /// A fixed number of local steps per tick (`model.local_steps`).
    #[default]
    Fixed,
    /// Tick boundaries at multiples of `T_s`, rounded down to the local
    /// grid (6 or 7 steps, 6.6 on average for 33 ms / 5 ms).
    Average,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scenario {
    /// Simulated time in seconds.
    pub duration: f64,
    pub controller: LocalController,
    pub reference: ReferenceSpec,
    pub disturbances: DisturbanceSpec,
    /// Initial `v_x`; the reference's first speed when absent.
    pub initial_speed: Option<f64>,
    pub plant: PlantModel,
    pub nominal: NominalReset,
    pub rate_coupling: RateCoupling,
    /// Consecutive fallback ticks tolerated before the run is aborted.
    pub max_degraded_ticks: usize,
    pub mpc: MpcConfig,
    pub vehicle: VehicleConfig,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            duration: 60.0,
            controller: LocalController::Hinf,
            reference: ReferenceSpec::default(),
            disturbances: DisturbanceSpec::Default,
            initial_speed: None,
            plant: PlantModel::Nonlinear,
            nominal: NominalReset::Anchor,
            rate_coupling: RateCoupling::Fixed,
            max_degraded_ticks: 10,
            mpc: MpcConfig::default(),
            vehicle: VehicleConfig::default(),
        }
    }
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let sc: Scenario = toml::from_str(text)?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::Validation(format!("duration {} must be positive", self.duration)));
        }
        if let Some(v) = self.initial_speed {
            if !(v > 0.0) {
                return Err(Error::Validation("initial speed must be positive".into()));
            }
        }
        if let DisturbanceSpec::Custom { slope, wind } = &self.disturbances {
            slope.validate()?;
            wind.validate()?;
        }
        self.vehicle.vehicle.validate()?;
        self.mpc.validate()
    }

    /// Length of one MPC tick in simulated time.
    pub fn tick_period(&self) -> f64 {
        match self.rate_coupling {
            RateCoupling::Fixed => self.mpc.model.local_period * self.mpc.model.local_steps as f64,
            RateCoupling::Average => self.mpc.model.ts,
        }
    }

    pub fn disturbance_profiles(&self) -> Result<DisturbanceProfiles> {
        Ok(match &self.disturbances {
            DisturbanceSpec::None => DisturbanceProfiles::default(),
            DisturbanceSpec::Default => {
                let w = &self.mpc.w_bounds;
                default_disturbances(self.duration, &self.vehicle.vehicle, self.tick_period(), &[w[0], w[1], w[2]])?
            }
            DisturbanceSpec::Custom { slope, wind } => DisturbanceProfiles {
                slope: slope.clone(),
                wind: wind.clone(),
            },
        })
    }
}
