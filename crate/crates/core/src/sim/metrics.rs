use serde::{Deserialize, Serialize};

use super::RunLog;
use crate::error::{Error, Result};
use crate::mpc::MpcStatus;
use crate::schedule::LocalController;
use crate::vehicle::{NU, NX};

/// Slack allowed when auditing constraint satisfaction of returned plans.
const AUDIT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub controller: LocalController,
    pub duration: f64,
    pub ticks: usize,
    pub local_steps: usize,
    pub rmse_vx: f64,
    pub rmse_omega: f64,
    /// RMSE over the reference range; absent for a constant reference.
    pub nrmse_vx: Option<f64>,
    pub nrmse_omega: Option<f64>,
    /// Largest `|e|` per axis over all local steps.
    pub max_abs_error: [f64; NX],
    pub w_bounds: [f64; NX],
    /// Share of ticks whose model mismatch lies in the `W` box, over the
    /// axes where `W` has nonzero width (the kinematic integrators have a
    /// zero bound but always pick up a second-order mismatch).
    pub mismatch_inside_fraction: f64,
    pub max_abs_mismatch: [f64; NX],
    pub mean_solve_time_ms: f64,
    pub max_solve_time_ms: f64,
    pub degraded_ticks: usize,
    pub infeasible_ticks: usize,
    pub terminal_check_failures: usize,
    /// Planned `ũ` outside `U`.
    pub input_violations: usize,
    /// Planned `Δũ` outside the increment box.
    pub increment_violations: usize,
    /// First planned `ũ` outside its tightened set, optimal ticks only.
    pub tightened_input_violations: usize,
    /// Applied `u` outside `U`.
    pub plant_input_violations: usize,
    pub saturated_steps: usize,
}

fn rms(v: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut n) = (0.0, 0usize);
    for x in v {
        s += x * x;
        n += 1;
    }
    (s / n as f64).sqrt()
}

fn range(v: impl Iterator<Item = f64>) -> Option<f64> {
    let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    (hi > lo).then_some(hi - lo)
}

fn outside(v: f64, lo: f64, hi: f64) -> bool {
    v < lo - AUDIT_TOL || v > hi + AUDIT_TOL
}

/// Tracking errors are sampled once per MPC tick.
pub fn compute_metrics(log: &RunLog) -> Result<Metrics> {
    if log.ticks.is_empty() || log.samples.is_empty() {
        return Err(Error::InvalidArgument("cannot compute metrics of an empty log".into()));
    }
    let sc = &log.scenario;
    let cfg = &sc.mpc;
    let rmse_vx = rms(log.ticks.iter().map(|t| t.x[0] - t.v_x_ref));
    let rmse_omega = rms(log.ticks.iter().map(|t| t.x[2] - t.omega_ref));

    let mut max_abs_error = [0.0; NX];
    let mut saturated_steps = 0;
    let mut plant_input_violations = 0;
    for s in &log.samples {
        for i in 0..NX {
            max_abs_error[i] = f64::max(max_abs_error[i], s.e[i].abs());
        }
        saturated_steps += usize::from(s.saturated);
        plant_input_violations += usize::from((0..NU).any(|i| outside(s.u[i], cfg.input_lower[i], cfg.input_upper[i])));
    }

    let mut max_abs_mismatch = [0.0; NX];
    let mut inside = 0usize;
    let (mut input_violations, mut increment_violations, mut tightened_input_violations) = (0, 0, 0);
    for t in &log.ticks {
        for i in 0..NX {
            max_abs_mismatch[i] = f64::max(max_abs_mismatch[i], t.mismatch[i].abs());
        }
        inside += usize::from((0..NX).all(|i| cfg.w_bounds[i] == 0.0 || t.mismatch[i].abs() <= cfg.w_bounds[i]));
        input_violations += t
            .planned_inputs
            .iter()
            .filter(|u| (0..NU).any(|i| outside(u[i], cfg.input_lower[i], cfg.input_upper[i])))
            .count();
        increment_violations += t
            .planned_increments
            .iter()
            .filter(|d| (0..NU).any(|i| outside(d[i], -cfg.du_max[i], cfg.du_max[i])))
            .count();
        if t.status == MpcStatus::Optimal {
            let (lo, hi) = t.tightened_input;
            tightened_input_violations += usize::from((0..NU).any(|i| outside(t.u_nominal[i], lo[i], hi[i])));
        }
    }

    let times: Vec<f64> = log.ticks.iter().map(|t| t.solve_time * 1e3).collect();
    let n = log.ticks.len();
    Ok(Metrics {
        controller: sc.controller,
        duration: sc.duration,
        ticks: n,
        local_steps: log.samples.len(),
        rmse_vx,
        rmse_omega,
        nrmse_vx: range(log.ticks.iter().map(|t| t.v_x_ref)).map(|r| rmse_vx / r),
        nrmse_omega: range(log.ticks.iter().map(|t| t.omega_ref)).map(|r| rmse_omega / r),
        max_abs_error,
        w_bounds: cfg.w_bounds,
        mismatch_inside_fraction: inside as f64 / n as f64,
        max_abs_mismatch,
        mean_solve_time_ms: times.iter().sum::<f64>() / n as f64,
        max_solve_time_ms: times.iter().copied().fold(0.0, f64::max),
        degraded_ticks: log.ticks.iter().filter(|t| t.degraded).count(),
        infeasible_ticks: log.ticks.iter().filter(|t| t.status == MpcStatus::Infeasible).count(),
        terminal_check_failures: log.ticks.iter().filter(|t| !t.degraded && !t.terminal_in_set).count(),
        input_violations,
        increment_violations,
        tightened_input_violations,
        plant_input_violations,
        saturated_steps,
    })
}

/// What can be recovered from a run CSV alone: tracking errors at the MPC
/// rate, per-axis `|e|`, solver times and saturation counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSummary {
    pub ticks: usize,
    pub local_steps: usize,
    pub rmse_vx: f64,
    pub rmse_omega: f64,
    pub nrmse_vx: Option<f64>,
    pub nrmse_omega: Option<f64>,
    pub max_abs_error: [f64; NX],
    pub mean_solve_time_ms: f64,
    pub max_solve_time_ms: f64,
    pub non_optimal_ticks: usize,
    pub saturated_steps: usize,
}

/// Reads a CSV written by [`RunLog::to_csv`].
pub fn summarize_run_csv(text: &str) -> Result<CsvSummary> {
    let bad = |e: csv::Error| Error::Validation(format!("run csv: {e}"));
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header = rdr.headers().map_err(bad)?.clone();
    if header.iter().collect::<Vec<_>>().join(",") != RunLog::CSV_HEADER {
        return Err(Error::Validation("run csv header does not match the run log layout".into()));
    }
    let col = |name: &str| header.iter().position(|h| h == name).expect("header checked");
    let (c_tick, c_vx, c_om, c_vref, c_oref) = (col("tick"), col("v_x"), col("omega"), col("v_x_ref"), col("omega_ref"));
    let (c_e, c_status, c_time, c_sat) = (col("e_v_x"), col("mpc_status"), col("solve_time_s"), col("saturated"));

    let num = |r: &csv::StringRecord, i: usize| -> Result<f64> {
        r[i].parse::<f64>()
            .map_err(|_| Error::Validation(format!("run csv: bad number {:?} in column {}", &r[i], &header[i])))
    };
    let mut last_tick = None;
    let (mut dv, mut dw, mut vref, mut oref, mut times) = (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut max_abs_error = [0.0; NX];
    let (mut local_steps, mut non_optimal_ticks, mut saturated_steps) = (0, 0, 0);
    for rec in rdr.records() {
        let r = rec.map_err(bad)?;
        local_steps += 1;
        for (i, m) in max_abs_error.iter_mut().enumerate() {
            *m = f64::max(*m, num(&r, c_e + i)?.abs());
        }
        saturated_steps += usize::from(&r[c_sat] == "1");
        let tick = &r[c_tick];
        if last_tick.as_deref() != Some(tick) {
            last_tick = Some(tick.to_owned());
            let (vr, or) = (num(&r, c_vref)?, num(&r, c_oref)?);
            dv.push(num(&r, c_vx)? - vr);
            dw.push(num(&r, c_om)? - or);
            vref.push(vr);
            oref.push(or);
            times.push(num(&r, c_time)? * 1e3);
            non_optimal_ticks += usize::from(&r[c_status] != "optimal");
        }
    }
    if times.is_empty() {
        return Err(Error::InvalidArgument("run csv has no rows".into()));
    }
    let rmse_vx = rms(dv.into_iter());
    let rmse_omega = rms(dw.into_iter());
    let n = times.len();
    Ok(CsvSummary {
        ticks: n,
        local_steps,
        rmse_vx,
        rmse_omega,
        nrmse_vx: range(vref.into_iter()).map(|r| rmse_vx / r),
        nrmse_omega: range(oref.into_iter()).map(|r| rmse_omega / r),
        max_abs_error,
        mean_solve_time_ms: times.iter().sum::<f64>() / n as f64,
        max_solve_time_ms: times.iter().copied().fold(0.0, f64::max),
        non_optimal_ticks,
        saturated_steps,
    })
}
