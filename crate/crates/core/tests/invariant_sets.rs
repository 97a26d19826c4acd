use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zonotube::closed_loop::{disturbance_set, spectral_radius, ClosedLoopFamily, ErrorModel};
use zonotube::invariant::{check_rpi, compute_terminal_set, RpiSettings};
use zonotube::mpc::{terminal_set_fits, MpcConfig};
use zonotube::schedule::{GainSchedule, LocalController};
use zonotube::sets::Zonotope;
use zonotube::sim::reference_envelope;
use zonotube::vehicle::VehicleParams;

fn axis(n: usize, i: usize, sign: f64) -> DVector<f64> {
    DVector::from_fn(n, |k, _| if k == i { sign } else { 0.0 })
}

#[test]
fn scalar_half_contraction_gives_two() {
    let fam = ClosedLoopFamily::new(vec![DMatrix::from_element(1, 1, 0.5)], Zonotope::centered_box(&[1.0]).unwrap())
        .unwrap();
    let s = RpiSettings::default();
    let rep = compute_terminal_set(&fam, &s).unwrap();
    let r = rep.rpi.set.axis_radius()[0];
    assert!((r - 2.0).abs() <= s.epsilon, "radius {r}");
    assert!(r >= 2.0 - 1e-12, "outer approximation must contain [-2, 2]");
    assert!(check_rpi(&fam, &rep.rpi.set, rep.rpi.epsilon_achieved).unwrap());
}

#[test]
fn zero_disturbance_gives_origin() {
    let fam = ClosedLoopFamily::new(vec![DMatrix::from_element(3, 3, 0.2)], Zonotope::origin(3)).unwrap();
    let rep = compute_terminal_set(&fam, &RpiSettings::default()).unwrap();
    assert_eq!(rep.rpi.set.axis_radius().amax(), 0.0);
    assert_eq!(rep.rpi.set.center().amax(), 0.0);
}

/// Random stable single-vertex systems against the truncated Minkowski
/// series `Σ_{k<200} A^k W`.
#[test]
fn matches_truncated_series() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let settings = RpiSettings {
        max_generators: 4000,
        ..RpiSettings::default()
    };
    for _ in 0..10 {
        let raw = DMatrix::from_fn(3, 3, |_, _| rng.gen_range(-1.0..1.0));
        let inf_norm = (0..3).map(|i| raw.row(i).iter().map(|v: &f64| v.abs()).sum::<f64>()).fold(0.0, f64::max);
        let a = raw * (rng.gen_range(0.3..0.8) / inf_norm);
        let w = Zonotope::centered_box(&[rng.gen_range(0.05..0.5), rng.gen_range(0.05..0.5), rng.gen_range(0.05..0.5)])
            .unwrap();
        let fam = ClosedLoopFamily::new(vec![a.clone()], w.clone()).unwrap();
        let rep = compute_terminal_set(&fam, &settings).unwrap();
        for i in 0..3 {
            for sign in [1.0, -1.0] {
                let d = axis(3, i, sign);
                let mut series = 0.0;
                let mut ak = DMatrix::identity(3, 3);
                for _ in 0..200 {
                    series += w.linear_image(&ak).unwrap().support(&d).unwrap();
                    ak = &a * ak;
                }
                let h = rep.rpi.set.support(&d).unwrap();
                assert!(h >= series - 1e-12, "support {h} below series {series}");
                assert!(h <= series + settings.epsilon, "support {h} exceeds series {series} by more than epsilon");
            }
        }
        assert!(check_rpi(&fam, &rep.rpi.set, rep.rpi.epsilon_achieved).unwrap());
    }
}

fn reference_family() -> (ClosedLoopFamily, MpcConfig) {
    let gs = GainSchedule::reference();
    let cfg = MpcConfig::default();
    let fam = ClosedLoopFamily::from_schedule(
        &gs,
        LocalController::Hinf,
        &ErrorModel::default(),
        &VehicleParams::default(),
        disturbance_set(&cfg.w_bounds).unwrap(),
    )
    .unwrap();
    (fam, cfg)
}

#[test]
fn reference_terminal_set_is_invariant_and_fits_state_box() {
    let gs = GainSchedule::reference();
    let rec = gs.terminal_set.clone().expect("terminal set stored with the gains");
    let chi = rec.to_zonotope().unwrap();
    let (fam, cfg) = reference_family();
    assert!(fam.matrices().iter().all(|m| spectral_radius(m) < 1.0));
    assert!(check_rpi(&fam, &chi, rec.epsilon_achieved).unwrap());
    assert!(terminal_set_fits(&chi, &cfg.state_box().unwrap(), &reference_envelope()).unwrap());

    // recomputing reproduces the stored set
    let rep = compute_terminal_set(&fam, &RpiSettings::default()).unwrap();
    let again = rep.rpi.set.compact();
    assert!((&again.generators().clone() - chi.generators()).amax() <= 1e-12);
    assert_eq!(rep.rpi.iterations, rec.iterations);
}

/// Sampled points of χ_f pushed through a random vertex loop plus a random
/// disturbance stay in χ_f up to the achieved ε.
#[test]
fn reference_terminal_set_sampled_invariance() {
    let gs = GainSchedule::reference();
    let rec = gs.terminal_set.clone().unwrap();
    let chi = rec.to_zonotope().unwrap();
    let (fam, cfg) = reference_family();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let grown = chi.minkowski_sum(&Zonotope::centered_box(&[rec.epsilon_achieved; 5]).unwrap()).unwrap();
    for _ in 0..300 {
        let xi = DVector::from_fn(chi.num_generators(), |_, _| if rng.gen_bool(0.5) { 1.0 } else { -1.0 });
        let e = chi.point_at(&xi);
        let m = &fam.matrices()[rng.gen_range(0..fam.matrices().len())];
        let w = DVector::from_fn(5, |i, _| cfg.w_bounds[i] * rng.gen_range(-1.0..=1.0));
        assert!(grown.contains_point(&(m * e + w), 1e-9).unwrap());
    }
}
