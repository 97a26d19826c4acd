use nalgebra::DVector;

use super::{pacejka_force, slip_angles_plant, ControlInput, Disturbance, VehicleParams, VehicleState};
use crate::error::{Error, Result};

/// Lowest longitudinal speed at which the plant is considered valid.
pub const PLANT_MIN_VX: f64 = 0.1;

/// Lateral force of a steady lateral wind, `½ ρ C_dAl v_w²`.
pub fn wind_force(v_w: f64, p: &VehicleParams) -> f64 {
    0.5 * p.rho * p.cda_l * v_w * v_w
}

/// Pacejka tire forces `(F_yf, F_yr)` in newtons.
pub fn plant_tire_forces(s: &VehicleState, u: &ControlInput, p: &VehicleParams) -> Result<(f64, f64)> {
    let (af, ar) = slip_angles_plant(s, u, p)?;
    Ok((
        pacejka_force(af, p.d_f, p.c_f, p.b_f, p.tire_force_scale),
        pacejka_force(ar, p.d_r, p.c_r, p.b_r, p.tire_force_scale),
    ))
}

/// Time derivative of the simulation plant, ordered like [`VehicleState`].
pub fn plant_derivatives(
    s: &VehicleState,
    u: &ControlInput,
    d: &Disturbance,
    p: &VehicleParams,
) -> Result<DVector<f64>> {
    let (fyf, fyr) = plant_tire_forces(s, u, p)?;
    let fw = wind_force(d.wind, p);
    let (sd, cd) = u.delta.sin_cos();
    Ok(DVector::from_column_slice(&[
        u.a + (-fyf * sd - p.drag_force(s.v_x)) / p.m + s.omega * s.v_y - p.g * d.slope.sin(),
        (fyf * cd + fyr - fw) / p.m - s.omega * s.v_x,
        (fyf * p.l_f * cd - fyr * p.l_r - fw * (p.l_f - p.l_r)) / p.inertia,
        s.v_x,
        s.omega,
    ]))
}

/// One classical RK4 step of length `h` with input and disturbance held.
pub fn plant_step_rk4(
    s: &VehicleState,
    u: &ControlInput,
    d: &Disturbance,
    p: &VehicleParams,
    h: f64,
) -> Result<VehicleState> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("step size {h} must be positive")));
    }
    let x0 = s.to_vector();
    let f = |x: &DVector<f64>| -> Result<DVector<f64>> {
        let st = VehicleState::from_slice(x.as_slice());
        if !(st.v_x > PLANT_MIN_VX) {
            return Err(Error::OutOfDomain {
                what: "v_x",
                value: st.v_x,
                bound: format!("plant requires v_x > {PLANT_MIN_VX}"),
            });
        }
        plant_derivatives(&st, u, d, p)
    };
    let k1 = f(&x0)?;
    let k2 = f(&(&x0 + &k1 * (h / 2.0)))?;
    let k3 = f(&(&x0 + &k2 * (h / 2.0)))?;
    let k4 = f(&(&x0 + &k3 * h))?;
    let x1 = x0 + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    let next = VehicleState::from_slice(x1.as_slice());
    if !(next.v_x > PLANT_MIN_VX) || x1.iter().any(|v| !v.is_finite()) {
        return Err(Error::OutOfDomain {
            what: "v_x",
            value: next.v_x,
            bound: format!("plant requires v_x > {PLANT_MIN_VX}"),
        });
    }
    Ok(next)
}
