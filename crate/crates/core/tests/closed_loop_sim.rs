//! Closed-loop simulation checked against the error recursion it should
//! obey, plus metrics and profile oracles.

use nalgebra::{DMatrix, DVector};
use zonotube::schedule::{GainSchedule, LocalController};
use zonotube::sim::{
    compute_metrics, run_scenario, summarize_run_csv, DisturbanceSpec, NominalReset, PlantModel, Reference, ReferenceSpec,
    RunLog, Scenario, DEFAULT_BUDGET_SHARE,
};
use zonotube::vehicle::{NU, NX};

fn scenario(duration: f64) -> Scenario {
    Scenario {
        duration,
        ..Scenario::default()
    }
}

fn run(sc: &Scenario) -> RunLog {
    run_scenario(sc, &GainSchedule::reference()).unwrap()
}

/// On the linear plant every unsaturated local step satisfies
/// `e⁺ = (I + h(A₀ + B₀K)) e + w` with the logged `A₀`, `B₀`, `K` and `w`.
#[test]
fn linear_plant_error_matches_recursion() {
    for nominal in [NominalReset::Anchor, NominalReset::Carry] {
        let sc = Scenario {
            plant: PlantModel::Linear,
            nominal,
            ..scenario(20.0)
        };
        let log = run(&sc);
        let h = log.local_period;
        let mut checked = 0;
        for pair in log.samples.windows(2) {
            let (s, next) = (&pair[0], &pair[1]);
            if s.tick != next.tick || s.saturated {
                continue;
            }
            let tk = &log.ticks[s.tick];
            let a = DMatrix::from_row_slice(NX, NX, &tk.a);
            let b = DMatrix::from_row_slice(NX, NU, &tk.b);
            let k = DMatrix::from_row_slice(NU, NX, &s.gain);
            let e = DVector::from_column_slice(&s.e);
            let m = DMatrix::identity(NX, NX) + (&a + &b * &k) * h;
            let expected = &m * &e + DVector::from_column_slice(&s.w_step);
            let got = DVector::from_column_slice(&next.e);
            let scale = 1.0 + s.x.iter().chain(&s.x_nominal).fold(0.0f64, |acc, v| acc.max(v.abs()));
            assert!(
                (&got - &expected).amax() <= 64.0 * f64::EPSILON * scale,
                "{nominal:?} t {}: {:e}",
                s.t,
                (&got - &expected).amax()
            );
            checked += 1;
        }
        assert!(checked > log.samples.len() / 2, "only {checked} steps checked");
    }
}

#[test]
fn undisturbed_linear_plant_tracks_nominal() {
    let sc = Scenario {
        plant: PlantModel::Linear,
        nominal: NominalReset::Carry,
        disturbances: DisturbanceSpec::None,
        ..scenario(20.0)
    };
    let log = run(&sc);
    let worst = log.samples.iter().flat_map(|s| s.e.iter()).fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(worst < 1e-6, "max |e| {worst}");
}

/// Per-tick mismatch between the nonlinear plant and the frozen model stays
/// inside `W` for at least 99% of ticks.
#[test]
fn nonlinear_mismatch_mostly_inside_w() {
    let log = run(&scenario(60.0));
    let m = compute_metrics(&log).unwrap();
    let w = log.scenario.mpc.w_bounds;
    let inside = log
        .ticks
        .iter()
        .filter(|t| (0..NX).all(|i| w[i] == 0.0 || t.mismatch[i].abs() <= w[i]))
        .count();
    let fraction = inside as f64 / log.ticks.len() as f64;
    assert_eq!(fraction, m.mismatch_inside_fraction);
    assert!(fraction >= 0.99, "inside fraction {fraction}");
}

#[test]
fn runs_are_deterministic() {
    let sc = scenario(10.0);
    let (a, b) = (run(&sc), run(&sc));
    assert_eq!(a.samples, b.samples);
    assert_eq!(a.ticks.len(), b.ticks.len());
    for (x, y) in a.ticks.iter().zip(&b.ticks) {
        let strip = |t: &zonotube::sim::TickRecord| zonotube::sim::TickRecord {
            solve_time: 0.0,
            ..t.clone()
        };
        assert_eq!(strip(x), strip(y));
    }
}

/// Constraint audit of a default run: no planned input or increment leaves
/// its box, and the tightened sets never come out empty.
#[test]
fn default_run_respects_constraints() {
    let log = run(&scenario(60.0));
    let m = compute_metrics(&log).unwrap();
    assert_eq!(m.input_violations, 0);
    assert_eq!(m.increment_violations, 0);
    assert_eq!(m.tightened_input_violations, 0);
    assert_eq!(m.plant_input_violations, 0);
    assert!(log.ticks.iter().all(|t| t.status != zonotube::mpc::MpcStatus::EmptyTube));
}

#[test]
fn metrics_of_synthetic_tracking_errors() {
    let base = run(&scenario(2.0));
    let with = |f: &dyn Fn(usize, f64) -> f64| {
        let mut log = base.clone();
        for (k, t) in log.ticks.iter_mut().enumerate() {
            t.x[0] = t.v_x_ref + f(k, t.v_x_ref);
            t.x[2] = t.omega_ref;
        }
        compute_metrics(&log).unwrap()
    };
    let exact = with(&|_, _| 0.0);
    assert_eq!(exact.rmse_vx, 0.0);
    assert_eq!(exact.rmse_omega, 0.0);
    let offset = with(&|_, _| 0.1);
    assert!((offset.rmse_vx - 0.1).abs() < 1e-12);
    // ten ticks per period, a whole number of periods
    let n = base.ticks.len() / 10 * 10;
    let mut log = base.clone();
    log.ticks.truncate(n);
    for (k, t) in log.ticks.iter_mut().enumerate() {
        t.x[0] = t.v_x_ref;
        t.x[2] = t.omega_ref + 0.3 * (2.0 * std::f64::consts::PI * k as f64 / 10.0).sin();
    }
    let m = compute_metrics(&log).unwrap();
    assert!((m.rmse_omega - 0.3 / 2f64.sqrt()).abs() < 1e-12, "{}", m.rmse_omega);
}

#[test]
fn csv_summary_agrees_with_metrics() {
    let log = run(&scenario(10.0));
    let m = compute_metrics(&log).unwrap();
    let s = summarize_run_csv(&log.to_csv()).unwrap();
    assert_eq!(s.ticks, m.ticks);
    assert_eq!(s.local_steps, m.local_steps);
    assert_eq!(s.rmse_vx, m.rmse_vx);
    assert_eq!(s.rmse_omega, m.rmse_omega);
    assert_eq!(s.max_abs_error, m.max_abs_error);
    assert_eq!(s.saturated_steps, m.saturated_steps);
    assert!(summarize_run_csv("a,b\n1,2\n").is_err());
}

#[test]
fn reference_csv_round_trip_is_exact() {
    let r = zonotube::sim::make_reference(&ReferenceSpec::Generated { seed: 7 }, 30.0, 0.005).unwrap();
    let back = Reference::from_csv(&r.to_csv()).unwrap();
    assert_eq!(back, r);
}

/// The default profiles, sampled on a fine grid, use exactly the
/// configured share of the `W` budget on their binding axis and no more on
/// the others. The segment-sum bound is never below the sampled one.
#[test]
fn default_disturbances_are_calibrated() {
    let sc = scenario(60.0);
    let d = sc.disturbance_profiles().unwrap();
    let p = &sc.vehicle.vehicle;
    let period = sc.tick_period();
    let (mut phi, mut vw) = (0.0f64, 0.0f64);
    for k in 0..=600_000 {
        let x = d.at(k as f64 * 1e-4);
        phi = phi.max(x.slope.abs());
        vw = vw.max(x.wind.abs());
    }
    let fw = 0.5 * p.rho * p.cda_l * vw * vw;
    let sampled = [p.g * phi.sin() * period, fw * period / p.m, fw * (p.l_f - p.l_r).abs() * period / p.inertia];
    let w = sc.mpc.w_bounds;
    let share: Vec<f64> = (0..3).map(|i| sampled[i] / w[i]).collect();
    assert!(share.iter().all(|&s| s <= DEFAULT_BUDGET_SHARE * (1.0 + 1e-12)), "{share:?}");
    assert!((share[0] - DEFAULT_BUDGET_SHARE).abs() < 1e-12);
    // the wind ramp only approaches its peak at the open end of its window
    assert!((share[1].max(share[2]) - DEFAULT_BUDGET_SHARE).abs() < 1e-4);
    let bound = d.induced_bounds(p, period);
    assert!((0..3).all(|i| bound[i] >= sampled[i]));
}

/// The slope sinusoid crosses zero every half period (5 s at 0.1 Hz).
#[test]
fn slope_sine_has_configured_frequency() {
    let sc = scenario(100.0);
    let d = sc.disturbance_profiles().unwrap();
    // sine window is [35, 55) and no step overlaps it
    let dt = 1e-3;
    let mut crossings = Vec::new();
    let mut prev = d.at(35.0 + dt).slope;
    let mut t = 35.0 + 2.0 * dt;
    while t < 55.0 - dt {
        let v = d.at(t).slope;
        if prev.signum() != v.signum() && v != 0.0 {
            crossings.push(t);
        }
        prev = v;
        t += dt;
    }
    assert_eq!(crossings.len(), 3);
    for w in crossings.windows(2) {
        assert!((w[1] - w[0] - 5.0).abs() < 2.0 * dt);
    }
}

#[test]
fn controllers_give_distinct_runs() {
    let h = run(&scenario(10.0));
    let l = run(&Scenario {
        controller: LocalController::Lqr,
        ..scenario(10.0)
    });
    assert_ne!(compute_metrics(&h).unwrap().rmse_vx, compute_metrics(&l).unwrap().rmse_vx);
}
