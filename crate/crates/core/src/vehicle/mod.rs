//! Vehicle models: the LPV design model used by the controller and the
//! Pacejka plant used in simulation.

mod lpv;
mod params;
mod plant;
mod tire;

pub use lpv::{
    design_derivatives, discretize_euler, lpv_matrices, lpv_matrices_at, slip_angles_lpv, slip_angles_plant,
    ControlInput, Disturbance, LpvMatrices, Scheduling, VehicleState, NU, NX,
};
pub use params::{KinematicSign, SlipConvention, TirePoly, VehicleConfig, VehicleParams};
pub use plant::{plant_derivatives, plant_step_rk4, plant_tire_forces, wind_force, PLANT_MIN_VX};
pub use tire::{fit_tire_poly, force_polynomial, lpv_tire_force, pacejka_force, tire_stiffness};
