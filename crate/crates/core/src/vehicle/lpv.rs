use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{tire_stiffness, SlipConvention, VehicleConfig, VehicleParams};
use crate::error::{Error, Result};

pub const NX: usize = 5;
pub const NU: usize = 2;

/// Body-frame state `(v_x, v_y, ω, x, θ)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VehicleState {
    pub v_x: f64,
    pub v_y: f64,
    pub omega: f64,
    pub x: f64,
    pub theta: f64,
}

impl VehicleState {
    pub fn new(v_x: f64, v_y: f64, omega: f64, x: f64, theta: f64) -> Self {
        VehicleState { v_x, v_y, omega, x, theta }
    }

    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.to_array())
    }

    pub fn to_array(&self) -> [f64; NX] {
        [self.v_x, self.v_y, self.omega, self.x, self.theta]
    }

    pub fn from_slice(v: &[f64]) -> Self {
        VehicleState::new(v[0], v[1], v[2], v[3], v[4])
    }
}

/// Front steering `δ` (rad) and rear acceleration `a` (m/s²).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlInput {
    pub delta: f64,
    pub a: f64,
}

impl ControlInput {
    pub fn new(delta: f64, a: f64) -> Self {
        ControlInput { delta, a }
    }

    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&[self.delta, self.a])
    }

    pub fn from_slice(v: &[f64]) -> Self {
        ControlInput::new(v[0], v[1])
    }
}

/// Exogenous inputs of the simulation plant: road slope `φ` (rad) and
/// lateral wind speed `v_w` (m/s).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Disturbance {
    pub slope: f64,
    pub wind: f64,
}

/// Scheduling vector `ζ = (v_x, v_y, δ)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Scheduling {
    pub v_x: f64,
    pub v_y: f64,
    pub delta: f64,
}

impl Scheduling {
    pub fn new(v_x: f64, v_y: f64, delta: f64) -> Self {
        Scheduling { v_x, v_y, delta }
    }

    pub fn from_state(s: &VehicleState, u: &ControlInput) -> Self {
        Scheduling::new(s.v_x, s.v_y, u.delta)
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.v_x, self.v_y, self.delta]
    }

    pub fn from_slice(v: &[f64]) -> Self {
        Scheduling::new(v[0], v[1], v[2])
    }
}

/// Continuous-time `A_ζ` (5×5) and `B_ζ` (5×2).
#[derive(Debug, Clone, PartialEq)]
pub struct LpvMatrices {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

fn positive_vx(v_x: f64) -> Result<()> {
    if v_x > 0.0 {
        Ok(())
    } else {
        Err(Error::OutOfDomain {
            what: "v_x",
            value: v_x,
            bound: "v_x > 0".into(),
        })
    }
}

/// Small-angle slip angles of the design model.
pub fn slip_angles_lpv(s: &VehicleState, u: &ControlInput, p: &VehicleParams) -> Result<(f64, f64)> {
    positive_vx(s.v_x)?;
    let (vy, lw_f, lw_r) = (s.v_y / s.v_x, p.l_f * s.omega / s.v_x, p.l_r * s.omega / s.v_x);
    Ok(match p.slip_convention {
        SlipConvention::Physical => (u.delta - vy - lw_f, -vy + lw_r),
        SlipConvention::Printed => (u.delta - vy + lw_f, -vy - lw_r),
    })
}

/// Arctangent slip angles of the simulation plant.
pub fn slip_angles_plant(s: &VehicleState, u: &ControlInput, p: &VehicleParams) -> Result<(f64, f64)> {
    positive_vx(s.v_x)?;
    let (vy, lw_f, lw_r) = (s.v_y / s.v_x, p.l_f * s.omega / s.v_x, p.l_r * s.omega / s.v_x);
    Ok(match p.slip_convention {
        SlipConvention::Physical => (u.delta - (vy + lw_f).atan(), -(vy - lw_r).atan()),
        SlipConvention::Printed => (u.delta - (vy - lw_f).atan(), -(vy + lw_r).atan()),
    })
}

/// LPV matrices for a scheduling point and given tire stiffnesses.
pub fn lpv_matrices(z: &Scheduling, c_f: f64, c_r: f64, p: &VehicleParams) -> Result<LpvMatrices> {
    positive_vx(z.v_x)?;
    let (vx, vy) = (z.v_x, z.v_y);
    let (sd, cd) = z.delta.sin_cos();
    let (m, i, lf, lr) = (p.m, p.inertia, p.l_f, p.l_r);
    let sign = p.kinematic_sign.value();

    let mut a = DMatrix::zeros(NX, NX);
    a[(0, 0)] = -p.rolling_mu * p.g / vx - p.rho * p.cda_f * vx / (2.0 * m);
    a[(0, 1)] = c_f * sd / (m * vx);
    a[(0, 2)] = c_f * lf * sd / (m * vx) + vy;
    a[(1, 1)] = -(c_r + c_f * cd) / (m * vx);
    a[(1, 2)] = -(c_f * lf * cd - c_r * lr) / (m * vx) - vx;
    a[(2, 1)] = -(c_f * lf * cd - lr * c_r) / (i * vx);
    a[(2, 2)] = -(c_f * lf * lf * cd + lr * lr * c_r) / (i * vx);
    a[(3, 0)] = sign;
    a[(4, 2)] = sign;

    let mut b = DMatrix::zeros(NX, NU);
    b[(0, 0)] = -sd * c_f / m;
    b[(0, 1)] = 1.0;
    b[(1, 0)] = cd * c_f / m;
    b[(2, 0)] = cd * c_f * lf / i;
    Ok(LpvMatrices { a, b })
}

/// LPV matrices with the stiffnesses evaluated at the slip angles of `(s, u)`.
pub fn lpv_matrices_at(s: &VehicleState, u: &ControlInput, cfg: &VehicleConfig) -> Result<LpvMatrices> {
    let (af, ar) = slip_angles_lpv(s, u, &cfg.vehicle)?;
    lpv_matrices(
        &Scheduling::from_state(s, u),
        tire_stiffness(af, &cfg.front_tire),
        tire_stiffness(ar, &cfg.rear_tire),
        &cfg.vehicle,
    )
}

/// Forward Euler: `A_d = I + A T_s`, `B_d = B T_s`.
pub fn discretize_euler(m: &LpvMatrices, ts: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = m.a.nrows();
    (DMatrix::identity(n, n) + &m.a * ts, &m.b * ts)
}

/// Right-hand side of the design model evaluated directly (not through the
/// matrices), with LPV tire forces.
pub fn design_derivatives(s: &VehicleState, u: &ControlInput, cfg: &VehicleConfig) -> Result<DVector<f64>> {
    let p = &cfg.vehicle;
    let (af, ar) = slip_angles_lpv(s, u, p)?;
    let fyf = tire_stiffness(af, &cfg.front_tire) * af;
    let fyr = tire_stiffness(ar, &cfg.rear_tire) * ar;
    let (sd, cd) = u.delta.sin_cos();
    let sign = p.kinematic_sign.value();
    Ok(DVector::from_column_slice(&[
        u.a + (-fyf * sd - p.drag_force(s.v_x)) / p.m + s.omega * s.v_y,
        (fyf * cd + fyr) / p.m - s.omega * s.v_x,
        (fyf * p.l_f * cd - fyr * p.l_r) / p.inertia,
        sign * s.v_x,
        sign * s.omega,
    ]))
}
