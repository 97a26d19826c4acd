//! Tube MPC: the condensed quadratic program over the input increments and
//! the receding-horizon controller that builds and solves it every tick.
//!
//! The decision variables are `Δũ_0 … Δũ_{H_p−1}`. With `ũ_i = ũ_{−1} +
//! Σ_{j≤i} Δũ_j` and frozen per-step matrices, every predicted nominal state
//! is affine in them, `x̃_i = f_i + G_i Δ`, so dynamics never appear as
//! equality rows.

use std::time::Instant;

use log::{debug, warn};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::closed_loop::{disturbance_set, ClosedLoopFamily, ErrorModel, DEFAULT_W_BOUNDS};
use crate::error::{Error, Result};
use crate::invariant::{compute_terminal_set, RpiSettings};
use crate::qp::{self, DenseQp, QpSettings, QpStatus};
use crate::reach::{build_tube, TubeSequence, TubeSettings};
use crate::schedule::{GainSchedule, LocalController};
use crate::sets::{IntervalBox, Zonotope};
use crate::vehicle::{lpv_matrices_at, ControlInput, LpvMatrices, Scheduling, VehicleConfig, VehicleState, NU, NX};

/// Tuning and constraint data of the MPC.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MpcConfig {
    pub horizon: usize,
    /// Diagonal of the stage weight on `x̃ − r`.
    pub q: [f64; NX],
    /// Diagonal of the weight on `Δũ`.
    pub r: [f64; NU],
    pub state_lower: [f64; NX],
    pub state_upper: [f64; NX],
    pub input_lower: [f64; NU],
    pub input_upper: [f64; NU],
    /// Symmetric bound on each input increment.
    pub du_max: [f64; NU],
    /// State indices the reference applies to.
    pub tracked: Vec<usize>,
    pub w_bounds: [f64; NX],
    pub model: ErrorModel,
    pub tube: TubeSettings,
    pub qp_max_iter: usize,
    /// Tolerance of the independent feasibility re-check.
    pub feasibility_tol: f64,
}

impl Default for MpcConfig {
    fn default() -> Self {
        let (vx, om, delta, acc) = (14.0_f64, 2.8_f64, 0.534_f64, 15.0_f64);
        MpcConfig {
            horizon: 5,
            q: [0.8 * 0.4 / (vx * vx), 0.0, 0.8 * 0.6 / (om * om), 0.0, 0.0],
            r: [0.2 * 0.5 / (delta * delta), 0.2 * 0.5 / (acc * acc)],
            state_lower: [1.0, -1.0, -1.4, f64::NEG_INFINITY, f64::NEG_INFINITY],
            state_upper: [15.0, 1.0, 1.4, f64::INFINITY, f64::INFINITY],
            input_lower: [-0.267, -2.0],
            input_upper: [0.267, 13.0],
            du_max: [0.05, 0.5],
            tracked: vec![0, 2],
            w_bounds: DEFAULT_W_BOUNDS,
            model: ErrorModel::default(),
            tube: TubeSettings::default(),
            qp_max_iter: 4000,
            feasibility_tol: 1e-6,
        }
    }
}

impl MpcConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=50).contains(&self.horizon) {
            return Err(Error::Validation(format!("horizon {} outside 1..=50", self.horizon)));
        }
        if self.q.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(Error::Validation("Q must be positive semidefinite".into()));
        }
        if self.r.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::Validation("R must be positive definite".into()));
        }
        if self.du_max.iter().any(|&v| !(v > 0.0)) || self.w_bounds.iter().any(|&v| !(v >= 0.0)) {
            return Err(Error::Validation("Δu and W bounds must be nonnegative".into()));
        }
        if self.tracked.iter().any(|&i| i >= NX) {
            return Err(Error::Validation("tracked state index out of range".into()));
        }
        self.state_box()?;
        self.input_box()?;
        self.model.validate()
    }

    pub fn state_box(&self) -> Result<IntervalBox> {
        IntervalBox::new(
            DVector::from_column_slice(&self.state_lower),
            DVector::from_column_slice(&self.state_upper),
        )
    }

    pub fn input_box(&self) -> Result<IntervalBox> {
        IntervalBox::new(
            DVector::from_column_slice(&self.input_lower),
            DVector::from_column_slice(&self.input_upper),
        )
    }

    pub fn q_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.q))
    }

    pub fn r_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.r))
    }

    /// `P` restricted to the tracked states (zero elsewhere).
    pub fn terminal_weight(&self, p: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(NX, NX);
        for &i in &self.tracked {
            for &j in &self.tracked {
                out[(i, j)] = p[(i, j)];
            }
        }
        out
    }
}

/// Frozen discrete prediction model, one `(A_d, B_d)` pair per step.
#[derive(Debug, Clone)]
pub struct Prediction {
    pub a: Vec<DMatrix<f64>>,
    pub b: Vec<DMatrix<f64>>,
}

/// Terminal constraint on `x̃_{H_p} − r_{H_p}` over the tracked states.
#[derive(Debug, Clone)]
pub struct TerminalConstraint {
    pub tracked: Vec<usize>,
    /// Interval hull of the projected terminal set.
    pub hull: IntervalBox,
    /// Exact projected terminal set, for the post-check.
    pub set: Zonotope,
}

impl TerminalConstraint {
    pub fn new(chi_f: &Zonotope, tracked: &[usize]) -> Result<Self> {
        let sel = DMatrix::from_fn(tracked.len(), chi_f.dim(), |i, j| if tracked[i] == j { 1.0 } else { 0.0 });
        let set = chi_f.linear_image(&sel)?;
        Ok(TerminalConstraint {
            tracked: tracked.to_vec(),
            hull: set.interval_hull(),
            set,
        })
    }

    fn deviation(&self, x: &DVector<f64>, r: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.tracked.len(), self.tracked.iter().map(|&i| x[i] - r[i]))
    }

    pub fn contains(&self, x: &DVector<f64>, r: &DVector<f64>, tol: f64) -> Result<bool> {
        self.set.contains_point(&self.deviation(x, r), tol)
    }
}

/// The condensed QP together with the affine maps that recover the
/// trajectory from its solution.
#[derive(Debug, Clone)]
pub struct MpcQp {
    pub qp: DenseQp,
    pub horizon: usize,
    x0: DVector<f64>,
    u_prev: DVector<f64>,
    /// `f_i`, `i = 0 … H_p`.
    free: Vec<DVector<f64>>,
    /// `G_i`, `i = 0 … H_p`.
    forced: Vec<DMatrix<f64>>,
    refs: Vec<DVector<f64>>,
    q: DMatrix<f64>,
    r: DMatrix<f64>,
    p_terminal: DMatrix<f64>,
}

/// Predicted nominal trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `x̃_0 … x̃_{H_p}`.
    pub states: Vec<DVector<f64>>,
    /// `ũ_0 … ũ_{H_p−1}`.
    pub inputs: Vec<DVector<f64>>,
    /// `Δũ_0 … Δũ_{H_p−1}`.
    pub increments: Vec<DVector<f64>>,
}

impl MpcQp {
    pub fn trajectory(&self, z: &DVector<f64>) -> Trajectory {
        let mut inputs = Vec::with_capacity(self.horizon);
        let mut u = self.u_prev.clone();
        for i in 0..self.horizon {
            u += z.rows(NU * i, NU);
            inputs.push(u.clone());
        }
        // Taken as differences of the rounded inputs so the two always agree.
        let increments = differences(&self.u_prev, &inputs);
        let states = self.free.iter().zip(&self.forced).map(|(f, g)| f + g * z).collect();
        Trajectory {
            states,
            inputs,
            increments,
        }
    }

    /// Full cost `Σ‖x̃_i − r_i‖²_Q + ‖x̃_{H_p} − r_{H_p}‖²_P + Σ‖Δũ_i‖²_R`.
    pub fn cost(&self, t: &Trajectory) -> f64 {
        let mut j = 0.0;
        for i in 1..=self.horizon {
            let e = &t.states[i] - &self.refs[i - 1];
            j += e.dot(&(&self.q * &e));
        }
        let e = &t.states[self.horizon] - &self.refs[self.horizon - 1];
        j += e.dot(&(&self.p_terminal * &e));
        j + t.increments.iter().map(|d| d.dot(&(&self.r * d))).sum::<f64>()
    }

    pub fn initial_state(&self) -> &DVector<f64> {
        &self.x0
    }
}

fn differences(first: &DVector<f64>, inputs: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let mut last = first;
    inputs
        .iter()
        .map(|u| {
            let d = u - last;
            last = u;
            d
        })
        .collect()
}

/// Assembles the tube MPC QP. `refs[i]` is the reference for `x̃_{i+1}`;
/// only the tracked entries matter.
#[allow(clippy::too_many_arguments)]
pub fn build_qp(
    x0: &DVector<f64>,
    u_prev: &DVector<f64>,
    pred: &Prediction,
    refs: &[DVector<f64>],
    tube: &TubeSequence,
    terminal: Option<&TerminalConstraint>,
    p: &DMatrix<f64>,
    cfg: &MpcConfig,
) -> Result<MpcQp> {
    let hp = cfg.horizon;
    if pred.a.len() != hp || pred.b.len() != hp {
        return Err(Error::dim("prediction steps", hp, pred.a.len().min(pred.b.len())));
    }
    if refs.len() != hp {
        return Err(Error::dim("reference trajectory", hp, refs.len()));
    }
    if tube.horizon() != hp || tube.tightened_states.len() != hp + 1 {
        return Err(Error::dim("tube horizon", hp, tube.horizon()));
    }
    if x0.len() != NX || u_prev.len() != NU {
        return Err(Error::dim("initial state/input", NX + NU, x0.len() + u_prev.len()));
    }
    if tube.any_empty {
        return Err(Error::EmptyTube);
    }
    let nv = NU * hp;

    // Cumulative-sum selectors: ũ_i = u_prev + S_i z.
    let sel: Vec<DMatrix<f64>> = (0..hp)
        .map(|i| DMatrix::from_fn(NU, nv, |r, c| if c % NU == r && c / NU <= i { 1.0 } else { 0.0 }))
        .collect();
    let mut free = vec![x0.clone()];
    let mut forced = vec![DMatrix::zeros(NX, nv)];
    for i in 0..hp {
        free.push(&pred.a[i] * &free[i] + &pred.b[i] * u_prev);
        forced.push(&pred.a[i] * &forced[i] + &pred.b[i] * &sel[i]);
    }

    let q = cfg.q_matrix();
    let r = cfg.r_matrix();
    let p_terminal = cfg.terminal_weight(p);
    let mut h = DMatrix::zeros(nv, nv);
    let mut g = DVector::zeros(nv);
    for i in 1..=hp {
        let w = if i == hp { &q + &p_terminal } else { q.clone() };
        let gt_w = forced[i].transpose() * &w;
        h += &gt_w * &forced[i];
        g += &gt_w * (&free[i] - &refs[i - 1]);
    }
    for i in 0..hp {
        let mut block = h.view_mut((NU * i, NU * i), (NU, NU));
        block += &r;
    }
    h *= 2.0;
    g *= 2.0;
    let h = (&h + h.transpose()) * 0.5;

    let mut rows: Vec<DVector<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    let mut push_interval = |a: DVector<f64>, offset: f64, lo: f64, hi: f64| {
        if hi.is_finite() {
            rows.push(a.clone());
            rhs.push(hi - offset);
        }
        if lo.is_finite() {
            rows.push(-a);
            rhs.push(offset - lo);
        }
    };
    for i in 0..hp {
        let ub = &tube.tightened_inputs[i];
        for j in 0..NU {
            push_interval(sel[i].row(j).transpose(), u_prev[j], ub.lower()[j], ub.upper()[j]);
        }
    }
    for i in 1..=hp {
        let xb = &tube.tightened_states[i];
        for j in 0..NX {
            push_interval(forced[i].row(j).transpose(), free[i][j], xb.lower()[j], xb.upper()[j]);
        }
    }
    if let Some(t) = terminal {
        let r_end = &refs[hp - 1];
        for (k, &j) in t.tracked.iter().enumerate() {
            push_interval(
                forced[hp].row(j).transpose(),
                free[hp][j] - r_end[j],
                t.hull.lower()[k],
                t.hull.upper()[k],
            );
        }
    }
    let a_in = DMatrix::from_fn(rows.len(), nv, |r, c| rows[r][c]);
    let b_in = DVector::from_vec(rhs);

    let du = DVector::from_fn(nv, |k, _| cfg.du_max[k % NU]);
    let qp = DenseQp::new(h, g)?.with_inequalities(a_in, b_in)?.with_bounds(-&du, du)?;
    Ok(MpcQp {
        qp,
        horizon: hp,
        x0: x0.clone(),
        u_prev: u_prev.clone(),
        free,
        forced,
        refs: refs.to_vec(),
        q,
        r,
        p_terminal,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MpcStatus {
    Optimal,
    Infeasible,
    MaxIterations,
    EmptyTube,
}

#[derive(Debug, Clone)]
pub struct MpcSolution {
    pub trajectory: Trajectory,
    pub cost: f64,
    pub status: MpcStatus,
    /// The returned plan is the shifted previous one, not a QP solution.
    pub degraded: bool,
    pub qp_iterations: usize,
    pub active_set: Vec<usize>,
    /// Wall time of the whole tick (tube, QP build and solve).
    pub solve_time: f64,
    /// Whether `x̃_{H_p}` lies in the exact terminal set (the QP only
    /// enforces its interval hull).
    pub terminal_in_set: bool,
    /// Scheduling points the prediction and tube were frozen at.
    pub zeta: Vec<Scheduling>,
    /// Continuous model of the first step, which the local loop uses to
    /// propagate the nominal state between ticks.
    pub nominal_model: LpvMatrices,
    pub tube_hull_radii: Vec<Vec<f64>>,
    /// `Ũ_0 … Ũ_{H_p−1}` of this tick.
    pub tightened_inputs: Vec<IntervalBox>,
}

impl MpcSolution {
    pub fn first_input(&self) -> &DVector<f64> {
        &self.trajectory.inputs[0]
    }
}

/// Solves the QP and re-checks feasibility of the result independently of
/// the solver.
pub fn solve_qp(mq: &MpcQp, warm: Option<&[usize]>, settings: &QpSettings, tol: f64) -> Result<(Trajectory, qp::QpSolution)> {
    let sol = qp::solve(&mq.qp, warm, settings)?;
    if sol.status == QpStatus::Optimal {
        let v = mq.qp.max_violation(&sol.x);
        if v > tol {
            warn!("QP solution violates constraints by {v:e}");
        }
    }
    Ok((mq.trajectory(&sol.x), sol))
}

/// Receding-horizon tube MPC with its previous solution as memory.
#[derive(Debug, Clone)]
pub struct TubeMpc {
    pub cfg: MpcConfig,
    pub vehicle: VehicleConfig,
    pub gains: GainSchedule,
    pub controller: LocalController,
    w: Zonotope,
    x_box: IntervalBox,
    u_box: IntervalBox,
    terminal: TerminalConstraint,
    previous: Option<MpcSolution>,
}

impl TubeMpc {
    /// Uses the terminal set stored with the gains, or computes it from the
    /// H∞ vertex family when absent.
    pub fn new(cfg: MpcConfig, vehicle: VehicleConfig, gains: GainSchedule, controller: LocalController) -> Result<Self> {
        cfg.validate()?;
        gains.gains(controller)?;
        let w = disturbance_set(&cfg.w_bounds)?;
        let chi_f = match gains.terminal_zonotope()? {
            Some(z) => z,
            None => {
                let fam = ClosedLoopFamily::from_schedule(&gains, LocalController::Hinf, &cfg.model, &vehicle.vehicle, w.clone())?;
                compute_terminal_set(&fam, &RpiSettings::default())?.rpi.set
            }
        };
        let terminal = TerminalConstraint::new(&chi_f, &cfg.tracked)?;
        Ok(TubeMpc {
            x_box: cfg.state_box()?,
            u_box: cfg.input_box()?,
            cfg,
            vehicle,
            gains,
            controller,
            w,
            terminal,
            previous: None,
        })
    }

    pub fn terminal(&self) -> &TerminalConstraint {
        &self.terminal
    }

    pub fn previous(&self) -> Option<&MpcSolution> {
        self.previous.as_ref()
    }

    pub fn reset(&mut self) {
        self.previous = None;
    }

    /// Linearization points: the current state with the shifted previous
    /// plan, or the current state and input repeated on a cold start.
    fn linearization_points(&self, x0: &DVector<f64>, u_prev: &DVector<f64>) -> Vec<(VehicleState, ControlInput)> {
        let hp = self.cfg.horizon;
        let vx_min = self.cfg.state_lower[0].max(f64::EPSILON);
        let point = |x: &DVector<f64>, u: &DVector<f64>| {
            let mut s = VehicleState::from_slice(x.as_slice());
            s.v_x = s.v_x.max(vx_min);
            (s, ControlInput::from_slice(u.as_slice()))
        };
        match &self.previous {
            Some(prev) if prev.trajectory.inputs.len() == hp => (0..hp)
                .map(|i| {
                    let x = if i == 0 { x0 } else { &prev.trajectory.states[(i + 1).min(hp)] };
                    let u = &prev.trajectory.inputs[(i + 1).min(hp - 1)];
                    point(x, u)
                })
                .collect(),
            _ => vec![point(x0, u_prev); hp],
        }
    }

    /// Shifted previous plan (last input held), or `u_prev` held when there
    /// is none, propagated through the current prediction model.
    fn fallback(&self, u_prev: &DVector<f64>, pred: &Prediction, x0: &DVector<f64>) -> Trajectory {
        let hp = self.cfg.horizon;
        let inputs: Vec<DVector<f64>> = match &self.previous {
            Some(prev) if prev.trajectory.inputs.len() == hp => {
                (0..hp).map(|i| prev.trajectory.inputs[(i + 1).min(hp - 1)].clone()).collect()
            }
            _ => vec![u_prev.clone(); hp],
        };
        let increments = differences(u_prev, &inputs);
        let mut states = vec![x0.clone()];
        for i in 0..hp {
            states.push(&pred.a[i] * &states[i] + &pred.b[i] * &inputs[i]);
        }
        Trajectory {
            states,
            inputs,
            increments,
        }
    }

    /// One tick: shift, tube, tighten, build, solve, fall back if needed.
    /// `refs[i]` is the reference for `x̃_{i+1}`.
    pub fn step(&mut self, x0: &DVector<f64>, u_prev: &DVector<f64>, refs: &[DVector<f64>]) -> Result<MpcSolution> {
        let start = Instant::now();
        let hp = self.cfg.horizon;
        let points = self.linearization_points(x0, u_prev);
        let mut a = Vec::with_capacity(hp);
        let mut b = Vec::with_capacity(hp);
        let mut models = Vec::with_capacity(hp);
        for (s, u) in &points {
            let m = lpv_matrices_at(s, u, &self.vehicle)?;
            let (ad, bd) = self.cfg.model.prediction(&m);
            a.push(ad);
            b.push(bd);
            models.push(m);
        }
        let pred = Prediction { a, b };
        let zeta: Vec<Scheduling> = points.iter().map(|(s, u)| Scheduling::from_state(s, u)).collect();
        let tube = build_tube(
            &zeta,
            &self.gains,
            self.controller,
            &self.w,
            &self.cfg.model,
            &self.vehicle.vehicle,
            &self.x_box,
            &self.u_box,
            &self.cfg.tube,
        )?;

        let settings = QpSettings {
            max_iter: self.cfg.qp_max_iter,
            ..QpSettings::default()
        };
        let warm = self.previous.as_ref().map(|p| p.active_set.clone());
        let outcome = if tube.any_empty {
            None
        } else {
            let mq = build_qp(x0, u_prev, &pred, refs, &tube, Some(&self.terminal), &self.gains.p, &self.cfg)?;
            let (traj, sol) = solve_qp(&mq, warm.as_deref(), &settings, self.cfg.feasibility_tol)?;
            Some((mq, traj, sol))
        };

        let (trajectory, status, iterations, active_set, cost) = match outcome {
            Some((mq, traj, sol)) if sol.status == QpStatus::Optimal => {
                let cost = mq.cost(&traj);
                (traj, MpcStatus::Optimal, sol.iterations, sol.active_set, cost)
            }
            other => {
                let (status, iterations) = match &other {
                    None => (MpcStatus::EmptyTube, 0),
                    Some((_, _, s)) if s.status == QpStatus::Infeasible => (MpcStatus::Infeasible, s.iterations),
                    Some((_, _, s)) => (MpcStatus::MaxIterations, s.iterations),
                };
                debug!("MPC fallback ({status:?})");
                (self.fallback(u_prev, &pred, x0), status, iterations, Vec::new(), f64::NAN)
            }
        };
        let terminal_in_set =
            self.terminal
                .contains(&trajectory.states[hp], &refs[hp - 1], self.cfg.feasibility_tol)?;
        let solution = MpcSolution {
            degraded: status != MpcStatus::Optimal,
            trajectory,
            cost,
            status,
            qp_iterations: iterations,
            active_set,
            solve_time: 0.0,
            terminal_in_set,
            zeta,
            nominal_model: models.swap_remove(0),
            tube_hull_radii: tube.hull_radii(),
            tightened_inputs: tube.tightened_inputs.clone(),
        };
        let solution = MpcSolution {
            solve_time: start.elapsed().as_secs_f64(),
            ..solution
        };
        self.previous = Some(solution.clone());
        Ok(solution)
    }
}

/// Full-state reference vector with `v_x` and `ω` set.
/// `r ⊕ χ_f ⊆ X` for every reference state `r` in `references`, checked on
/// the exact erosion `X ⊖ χ_f`.
pub fn terminal_set_fits(chi_f: &Zonotope, x: &IntervalBox, references: &IntervalBox) -> Result<bool> {
    if chi_f.dim() != x.dim() || references.dim() != x.dim() {
        return Err(Error::dim("terminal set vs state box", x.dim(), chi_f.dim()));
    }
    let room = x.erode(chi_f)?;
    Ok(!room.is_empty()
        && (0..x.dim()).all(|i| room.lower()[i] <= references.lower()[i] && references.upper()[i] <= room.upper()[i]))
}

pub fn reference_state(v_x: f64, omega: f64) -> DVector<f64> {
    let mut r = DVector::zeros(NX);
    r[0] = v_x;
    r[2] = omega;
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reach::tighten_constraints;
    use nalgebra::dvector;

    fn loose_tube(hp: usize) -> TubeSequence {
        let x = IntervalBox::from_bounds(&[(f64::NEG_INFINITY, f64::INFINITY); NX]).unwrap();
        let u = IntervalBox::from_bounds(&[(f64::NEG_INFINITY, f64::INFINITY); NU]).unwrap();
        let sets = vec![Zonotope::origin(NX); hp + 1];
        tighten_constraints(&sets, &x, &u, &vec![DMatrix::zeros(NU, NX); hp]).unwrap()
    }

    #[test]
    fn defaults_match_design_table() {
        let c = MpcConfig::default();
        assert_eq!(c.horizon, 5);
        assert!((c.q[0] - 0.8 * 0.4 / 196.0).abs() < 1e-18);
        assert!((c.r[1] - 0.1 / 225.0).abs() < 1e-18);
        assert_eq!(c.du_max, [0.05, 0.5]);
        c.validate().unwrap();
    }

    #[test]
    fn infinite_state_rows_are_omitted() {
        let cfg = MpcConfig {
            horizon: 2,
            ..MpcConfig::default()
        };
        let x = cfg.state_box().unwrap();
        let u = cfg.input_box().unwrap();
        let tube = tighten_constraints(&vec![Zonotope::origin(NX); 3], &x, &u, &vec![DMatrix::zeros(NU, NX); 2]).unwrap();
        let pred = Prediction {
            a: vec![DMatrix::identity(NX, NX); 2],
            b: vec![DMatrix::zeros(NX, NU); 2],
        };
        let refs = vec![DVector::zeros(NX); 2];
        let x0 = dvector![5.0, 0.0, 0.0, 0.0, 0.0];
        let mq = build_qp(&x0, &DVector::zeros(NU), &pred, &refs, &tube, None, &DMatrix::zeros(NX, NX), &cfg).unwrap();
        // two sides of 2 inputs and 3 finite states, for 2 steps
        assert_eq!(mq.qp.a_in.nrows(), 2 * (NU * 2 + 3 * 2));
    }

    #[test]
    fn stationary_problem_keeps_input() {
        let cfg = MpcConfig {
            horizon: 1,
            q: [1.0, 0.0, 1.0, 0.0, 0.0],
            r: [1.0, 1.0],
            ..MpcConfig::default()
        };
        let a = DMatrix::from_fn(NX, NX, |i, j| if i == j { 0.9 } else { 0.0 });
        let b = DMatrix::from_fn(NX, NU, |i, j| if i == j { 0.1 } else { 0.0 });
        let u_eq = dvector![0.0, 0.0];
        let x0 = DVector::zeros(NX);
        let pred = Prediction { a: vec![a], b: vec![b] };
        let mq = build_qp(&x0, &u_eq, &pred, &[x0.clone()], &loose_tube(1), None, &DMatrix::zeros(NX, NX), &cfg).unwrap();
        let (t, s) = solve_qp(&mq, None, &QpSettings::default(), 1e-9).unwrap();
        assert_eq!(s.status, QpStatus::Optimal);
        assert!(t.increments[0].amax() < 1e-12);
    }

    #[test]
    fn increments_are_input_differences() {
        let cfg = MpcConfig {
            horizon: 3,
            ..MpcConfig::default()
        };
        let pred = Prediction {
            a: vec![DMatrix::identity(NX, NX); 3],
            b: vec![DMatrix::from_element(NX, NU, 0.01); 3],
        };
        let refs = vec![dvector![6.0, 0.0, 0.3, 0.0, 0.0]; 3];
        let u_prev = dvector![0.01, 5.0];
        let mq = build_qp(&dvector![5.0, 0.0, 0.0, 0.0, 0.0], &u_prev, &pred, &refs, &loose_tube(3), None, &DMatrix::zeros(NX, NX), &cfg).unwrap();
        let (t, _) = solve_qp(&mq, None, &QpSettings::default(), 1e-9).unwrap();
        let mut last = u_prev;
        for (u, d) in t.inputs.iter().zip(&t.increments) {
            assert_eq!(&(u - &last), d);
            last = u.clone();
        }
    }
}
