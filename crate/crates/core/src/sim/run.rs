use std::fmt::Write as _;

use log::{info, warn};
use nalgebra::{DMatrix, DVector};

use super::{NominalReset, PlantModel, RateCoupling, Scenario};
use crate::error::{Error, Result};
use crate::mpc::{reference_state, MpcStatus, TubeMpc};
use crate::schedule::GainSchedule;
use crate::vehicle::{plant_step_rk4, wind_force, ControlInput, Disturbance, Scheduling, VehicleParams, VehicleState, NU, NX};

/// One local-controller step.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalSample {
    pub t: f64,
    pub tick: usize,
    /// Plant state at the start of the step.
    pub x: [f64; NX],
    pub x_nominal: [f64; NX],
    pub e: [f64; NX],
    pub u_nominal: [f64; NU],
    pub u_feedback: [f64; NU],
    /// Applied input after saturation.
    pub u: [f64; NU],
    pub saturated: bool,
    pub disturbance: Disturbance,
    /// Additive state increment the disturbance causes over the step in the
    /// linear model.
    pub w_step: [f64; NX],
    /// Local gain `K(ζ)`, row-major.
    pub gain: [f64; NU * NX],
}

/// One MPC tick.
#[derive(Debug, Clone, PartialEq)]
pub struct TickRecord {
    pub t: f64,
    pub index: usize,
    pub x: [f64; NX],
    /// Initial state handed to the MPC.
    pub x0: [f64; NX],
    pub v_x_ref: f64,
    pub omega_ref: f64,
    pub status: MpcStatus,
    pub degraded: bool,
    pub solve_time: f64,
    pub qp_iterations: usize,
    pub cost: f64,
    pub terminal_in_set: bool,
    pub u_nominal: [f64; NU],
    pub du_nominal: [f64; NU],
    /// Every planned `ũ_i` and `Δũ_i`, for constraint audits.
    pub planned_inputs: Vec<[f64; NU]>,
    pub planned_increments: Vec<[f64; NU]>,
    pub tightened_input: ([f64; NU], [f64; NU]),
    /// Interval-hull radii of the last tube set.
    pub tube_radius: [f64; NX],
    /// Plant state after the tick minus the frozen model's prediction with
    /// the same applied inputs.
    pub mismatch: [f64; NX],
    pub local_steps: usize,
    /// Continuous nominal model of the tick, row-major.
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RunLog {
    pub scenario: Scenario,
    pub local_period: f64,
    pub samples: Vec<LocalSample>,
    pub ticks: Vec<TickRecord>,
}

fn arr<const N: usize>(v: &DVector<f64>) -> [f64; N] {
    let mut out = [0.0; N];
    out.copy_from_slice(&v.as_slice()[..N]);
    out
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

/// Additive effect of slope and wind on the state over a step of `h`.
fn disturbance_increment(d: &Disturbance, p: &VehicleParams, h: f64) -> DVector<f64> {
    let fw = wind_force(d.wind, p);
    DVector::from_column_slice(&[
        -p.g * d.slope.sin() * h,
        -fw / p.m * h,
        -fw * (p.l_f - p.l_r) / p.inertia * h,
        0.0,
        0.0,
    ])
}

fn steps_in_tick(sc: &Scenario, k: usize) -> usize {
    let m = &sc.mpc.model;
    match sc.rate_coupling {
        RateCoupling::Fixed => m.local_steps,
        RateCoupling::Average => {
            let ratio = m.ts / m.local_period;
            let edge = |k: usize| (k as f64 * ratio + 1e-9).floor() as usize;
            (edge(k + 1) - edge(k)).max(1)
        }
    }
}

/// Runs the scenario to its duration. Fails if the plant leaves its valid
/// region or the MPC stays in fallback for more than
/// `max_degraded_ticks` consecutive ticks.
pub fn run_scenario(sc: &Scenario, gains: &GainSchedule) -> Result<RunLog> {
    sc.validate()?;
    let h = sc.mpc.model.local_period;
    let p = &sc.vehicle.vehicle;
    let hp = sc.mpc.horizon;
    let reference = super::make_reference(&sc.reference, sc.duration + (hp + 2) as f64 * sc.tick_period(), h)?;
    reference.check_bounds(
        (sc.mpc.state_lower[0], sc.mpc.state_upper[0]),
        (sc.mpc.state_lower[2], sc.mpc.state_upper[2]),
    )?;
    let profiles = sc.disturbance_profiles()?;
    let mut mpc = TubeMpc::new(sc.mpc.clone(), sc.vehicle.clone(), gains.clone(), sc.controller)?;
    let u_box = sc.mpc.input_box()?;

    let v0 = sc.initial_speed.unwrap_or(reference.at(0.0).0);
    let mut x = DVector::from_column_slice(&[v0, 0.0, 0.0, 0.0, 0.0]);
    let mut u_prev = DVector::from_column_slice(&[0.0, p.drag_force(v0) / p.m]);
    let mut x_nom = x.clone();

    let total_steps = (sc.duration / h).round() as usize;
    let mut samples = Vec::with_capacity(total_steps);
    let mut ticks = Vec::new();
    let mut step = 0usize;
    let mut consecutive = 0usize;
    let mut k = 0usize;
    while step < total_steps {
        let t_tick = step as f64 * h;
        let x0 = match sc.nominal {
            NominalReset::Anchor => x.clone(),
            NominalReset::Carry if k > 0 => x_nom.clone(),
            NominalReset::Carry => x.clone(),
        };
        let period = sc.tick_period();
        let refs: Vec<DVector<f64>> = (1..=hp)
            .map(|i| {
                let (v, w) = reference.at(t_tick + i as f64 * period);
                reference_state(v, w)
            })
            .collect();
        let sol = mpc.step(&x0, &u_prev, &refs)?;
        if sol.degraded {
            consecutive += 1;
            warn!("tick {k}: MPC fallback ({:?}), {consecutive} in a row", sol.status);
            if consecutive > sc.max_degraded_ticks {
                return Err(Error::DegradedMode(consecutive));
            }
        } else {
            consecutive = 0;
        }
        let u_nom = sol.first_input().clone();
        let a0 = sol.nominal_model.a.clone();
        let b0 = sol.nominal_model.b.clone();
        x_nom = sol.trajectory.states[0].clone();

        let n_local = steps_in_tick(sc, k).min(total_steps - step);
        let x_start = x.clone();
        let mut x_model = x.clone();
        for _ in 0..n_local {
            let t = step as f64 * h;
            let e = &x - &x_nom;
            let s = VehicleState::from_slice(x.as_slice());
            let z = gains.bounds.clamp(&Scheduling::from_state(&s, &ControlInput::from_slice(u_nom.as_slice())))?;
            let kz = gains.gain_at(&z, sc.controller)?;
            let u_fb = &kz * &e;
            let raw = &u_nom + &u_fb;
            let u = DVector::from_fn(NU, |i, _| raw[i].clamp(u_box.lower()[i], u_box.upper()[i]));
            let d = profiles.at(t);
            let w_step = disturbance_increment(&d, p, h);
            samples.push(LocalSample {
                t,
                tick: k,
                x: arr(&x),
                x_nominal: arr(&x_nom),
                e: arr(&e),
                u_nominal: arr(&u_nom),
                u_feedback: arr(&u_fb),
                u: arr(&u),
                saturated: u != raw,
                disturbance: d,
                w_step: arr(&w_step),
                gain: {
                    let mut g = [0.0; NU * NX];
                    g.copy_from_slice(&row_major(&kz));
                    g
                },
            });
            x = match sc.plant {
                PlantModel::Nonlinear => {
                    let s = plant_step_rk4(&s, &ControlInput::from_slice(u.as_slice()), &d, p, h)?;
                    s.to_vector()
                }
                PlantModel::Linear => &x + (&a0 * &x + &b0 * &u) * h + &w_step,
            };
            x_model = &x_model + (&a0 * &x_model + &b0 * &u) * h;
            x_nom = &x_nom + (&a0 * &x_nom + &b0 * &u_nom) * h;
            step += 1;
        }

        let (v_ref, w_ref) = reference.at(t_tick);
        let traj = &sol.trajectory;
        ticks.push(TickRecord {
            t: t_tick,
            index: k,
            x: arr(&x_start),
            x0: arr(&x0),
            v_x_ref: v_ref,
            omega_ref: w_ref,
            status: sol.status,
            degraded: sol.degraded,
            solve_time: sol.solve_time,
            qp_iterations: sol.qp_iterations,
            cost: sol.cost,
            terminal_in_set: sol.terminal_in_set,
            u_nominal: arr(&u_nom),
            du_nominal: arr(&traj.increments[0]),
            planned_inputs: traj.inputs.iter().map(arr).collect(),
            planned_increments: traj.increments.iter().map(arr).collect(),
            tightened_input: (arr(sol.tightened_inputs[0].lower()), arr(sol.tightened_inputs[0].upper())),
            tube_radius: {
                let last = sol.tube_hull_radii.last().expect("tube has at least one set");
                let mut r = [0.0; NX];
                r.copy_from_slice(last);
                r
            },
            mismatch: arr(&(&x - &x_model)),
            local_steps: n_local,
            a: row_major(&a0),
            b: row_major(&b0),
        });
        u_prev = u_nom;
        k += 1;
    }
    info!("simulated {} ticks, {} local steps", ticks.len(), samples.len());
    Ok(RunLog {
        scenario: sc.clone(),
        local_period: h,
        samples,
        ticks,
    })
}

impl RunLog {
    /// Column order of [`to_csv`](Self::to_csv).
    pub const CSV_HEADER: &'static str = "t,tick,v_x,v_y,omega,x,theta,\
nom_v_x,nom_v_y,nom_omega,nom_x,nom_theta,\
e_v_x,e_v_y,e_omega,e_x,e_theta,\
u_nom_delta,u_nom_a,u_fb_delta,u_fb_a,u_delta,u_a,saturated,\
slope,wind,v_x_ref,omega_ref,mpc_status,solve_time_s,qp_iterations,\
tube_r_v_x,tube_r_v_y,tube_r_omega,tube_r_x,tube_r_theta";

    /// One row per local step, numbers with 17 significant digits. Tick
    /// columns repeat the values of the tick the step belongs to.
    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(self.samples.len() * 700);
        s.push_str(Self::CSV_HEADER);
        s.push('\n');
        let f = |s: &mut String, v: f64| {
            let _ = write!(s, ",{v:.16e}");
        };
        for smp in &self.samples {
            let tk = &self.ticks[smp.tick];
            let _ = write!(s, "{:.16e},{}", smp.t, smp.tick);
            for v in smp.x.iter().chain(&smp.x_nominal).chain(&smp.e) {
                f(&mut s, *v);
            }
            for v in smp.u_nominal.iter().chain(&smp.u_feedback).chain(&smp.u) {
                f(&mut s, *v);
            }
            let _ = write!(s, ",{}", u8::from(smp.saturated));
            f(&mut s, smp.disturbance.slope);
            f(&mut s, smp.disturbance.wind);
            f(&mut s, tk.v_x_ref);
            f(&mut s, tk.omega_ref);
            let status = serde_json::to_value(tk.status).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default();
            let _ = write!(s, ",{status}");
            f(&mut s, tk.solve_time);
            let _ = write!(s, ",{}", tk.qp_iterations);
            for v in &tk.tube_radius {
                f(&mut s, *v);
            }
            s.push('\n');
        }
        s
    }
}
