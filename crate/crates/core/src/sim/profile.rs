//! Time profiles: road slope and wind disturbances, and the speed and yaw
//! rate reference.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sets::IntervalBox;
use crate::vehicle::{wind_force, Disturbance, VehicleParams};

/// One active window of a profile. Values of overlapping segments add up;
/// outside every window the profile is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum Segment {
    Step { start: f64, end: f64, value: f64 },
    Ramp { start: f64, end: f64, from: f64, to: f64 },
    /// `amplitude · sin(2π f (t − start))`.
    Sine { start: f64, end: f64, amplitude: f64, frequency: f64 },
}

impl Segment {
    fn window(&self) -> (f64, f64) {
        match *self {
            Segment::Step { start, end, .. } | Segment::Ramp { start, end, .. } | Segment::Sine { start, end, .. } => {
                (start, end)
            }
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        let (start, end) = self.window();
        if !(t >= start && t < end) {
            return 0.0;
        }
        match *self {
            Segment::Step { value, .. } => value,
            Segment::Ramp { from, to, .. } => from + (to - from) * (t - start) / (end - start),
            Segment::Sine { amplitude, frequency, .. } => {
                amplitude * (2.0 * std::f64::consts::PI * frequency * (t - start)).sin()
            }
        }
    }

    /// Largest `|value|` over the window.
    fn peak(&self) -> f64 {
        match *self {
            Segment::Step { value, .. } => value.abs(),
            Segment::Ramp { from, to, .. } => from.abs().max(to.abs()),
            Segment::Sine { amplitude, .. } => amplitude.abs(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Profile {
    pub segments: Vec<Segment>,
}

impl Profile {
    pub fn value(&self, t: f64) -> f64 {
        self.segments.iter().map(|s| s.value(t)).sum()
    }

    /// Upper bound of `|value|` (sum of segment peaks).
    pub fn peak_bound(&self) -> f64 {
        self.segments.iter().map(Segment::peak).sum()
    }

    pub fn validate(&self) -> Result<()> {
        for s in &self.segments {
            let (start, end) = s.window();
            if !(start.is_finite() && end.is_finite() && start < end) {
                return Err(Error::Validation(format!("profile segment window [{start}, {end}] is invalid")));
            }
        }
        Ok(())
    }
}

/// Slope `φ(t)` in radians and lateral wind speed `v_w(t)` in m/s.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceProfiles {
    pub slope: Profile,
    pub wind: Profile,
}

impl DisturbanceProfiles {
    pub fn at(&self, t: f64) -> Disturbance {
        Disturbance {
            slope: self.slope.value(t),
            wind: self.wind.value(t),
        }
    }

    /// Worst-case per-period state increments `(v_x, v_y, ω)` the profiles
    /// can induce over a period of length `period`.
    pub fn induced_bounds(&self, p: &VehicleParams, period: f64) -> [f64; 3] {
        let sin_phi = self.slope.peak_bound().min(std::f64::consts::FRAC_PI_2).sin();
        let fw = wind_force(self.wind.peak_bound(), p);
        [
            p.g * sin_phi * period,
            fw * period / p.m,
            fw * (p.l_f - p.l_r).abs() * period / p.inertia,
        ]
    }
}

/// Share of the disturbance budget the default profiles use; the rest is
/// left for model mismatch.
pub const DEFAULT_BUDGET_SHARE: f64 = 0.5;

/// Slope made of steps and a sinusoid, wind made of steps and a ramp, with
/// windows placed as fractions of `duration` and amplitudes scaled to
/// [`DEFAULT_BUDGET_SHARE`] of the per-period bounds `w` on `(v_x, v_y, ω)`.
pub fn default_disturbances(duration: f64, p: &VehicleParams, period: f64, w: &[f64; 3]) -> Result<DisturbanceProfiles> {
    if !(duration > 0.0 && period > 0.0) {
        return Err(Error::InvalidArgument("duration and period must be positive".into()));
    }
    let d = duration;
    let phi = (DEFAULT_BUDGET_SHARE * w[0] / (p.g * period)).min(1.0).asin();
    let fw_max = DEFAULT_BUDGET_SHARE * (w[1] * p.m / period).min(w[2] * p.inertia / ((p.l_f - p.l_r).abs() * period));
    let vw = (2.0 * fw_max / (p.rho * p.cda_l)).sqrt();
    let slope = Profile {
        segments: vec![
            Segment::Step {
                start: 0.10 * d,
                end: 0.25 * d,
                value: 0.7 * phi,
            },
            Segment::Sine {
                start: 0.35 * d,
                end: 0.55 * d,
                amplitude: phi,
                frequency: 0.1,
            },
            Segment::Step {
                start: 0.65 * d,
                end: 0.75 * d,
                value: -phi,
            },
        ],
    };
    let wind = Profile {
        segments: vec![
            Segment::Step {
                start: 0.15 * d,
                end: 0.30 * d,
                value: 0.7 * vw,
            },
            Segment::Ramp {
                start: 0.45 * d,
                end: 0.70 * d,
                from: 0.0,
                to: vw,
            },
            Segment::Step {
                start: 0.80 * d,
                end: 0.90 * d,
                value: -0.85 * vw,
            },
        ],
    };
    Ok(DisturbanceProfiles { slope, wind })
}

/// Reference `(v_x, ω)` sampled on a uniform grid, linearly interpolated in
/// between and held after the last sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub dt: f64,
    pub v_x: Vec<f64>,
    pub omega: Vec<f64>,
}

/// Speed band of the reference, 10 to 25 km/h.
pub const REFERENCE_VX_BAND: (f64, f64) = (10.0 / 3.6, 25.0 / 3.6);

impl Reference {
    pub fn new(dt: f64, v_x: Vec<f64>, omega: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) || v_x.is_empty() || v_x.len() != omega.len() {
            return Err(Error::InvalidArgument("reference needs dt > 0 and matching non-empty samples".into()));
        }
        Ok(Reference { dt, v_x, omega })
    }

    pub fn len(&self) -> usize {
        self.v_x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v_x.is_empty()
    }

    pub fn duration(&self) -> f64 {
        (self.len() - 1) as f64 * self.dt
    }

    pub fn at(&self, t: f64) -> (f64, f64) {
        let s = (t / self.dt).max(0.0);
        let i = s.floor() as usize;
        if i + 1 >= self.len() {
            return (self.v_x[self.len() - 1], self.omega[self.len() - 1]);
        }
        let f = s - i as f64;
        (
            self.v_x[i] + f * (self.v_x[i + 1] - self.v_x[i]),
            self.omega[i] + f * (self.omega[i + 1] - self.omega[i]),
        )
    }

    /// Every sample inside the state bounds on `v_x` and `ω`.
    pub fn check_bounds(&self, vx: (f64, f64), omega: (f64, f64)) -> Result<()> {
        for (k, (&v, &w)) in self.v_x.iter().zip(&self.omega).enumerate() {
            if !(v >= vx.0 && v <= vx.1 && w >= omega.0 && w <= omega.1) {
                return Err(Error::Validation(format!(
                    "reference sample {k} (v_x = {v}, ω = {w}) is outside the state box"
                )));
            }
        }
        Ok(())
    }

    /// CSV with header `t,v_x,omega`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,v_x,omega\n");
        for k in 0..self.len() {
            s.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", k as f64 * self.dt, self.v_x[k], self.omega[k]));
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let mut t = Vec::new();
        let (mut vx, mut om) = (Vec::new(), Vec::new());
        for rec in rdr.deserialize::<(f64, f64, f64)>() {
            let (ti, v, w) = rec.map_err(|e| Error::Validation(format!("reference csv: {e}")))?;
            t.push(ti);
            vx.push(v);
            om.push(w);
        }
        if t.len() < 2 {
            return Err(Error::Validation("reference csv needs at least two samples".into()));
        }
        let dt = t[1] - t[0];
        for (k, &ti) in t.iter().enumerate() {
            if ((ti - t[0]) - k as f64 * dt).abs() > 1e-9 * dt.max(1.0) * (k as f64 + 1.0) {
                return Err(Error::Validation("reference csv must be uniformly sampled".into()));
            }
        }
        if t[0] != 0.0 {
            return Err(Error::Validation("reference csv must start at t = 0".into()));
        }
        Reference::new(dt, vx, om)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
        Self::from_csv(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path.as_ref(), self.to_csv()).map_err(|e| Error::io(path.as_ref(), e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReferenceSpec {
    Constant { v_x: f64, omega: f64 },
    /// Smooth speed changes and cornering manoeuvres drawn from `seed`.
    Generated { seed: u64 },
    File { path: String },
}

impl Default for ReferenceSpec {
    fn default() -> Self {
        ReferenceSpec::Generated { seed: 1 }
    }
}

/// Largest longitudinal acceleration of the generated speed changes.
const MAX_REF_ACCEL: f64 = 0.4;
/// Largest lateral acceleration `|ω| v_x` of the generated corners.
const MAX_REF_LATERAL: f64 = 2.0;

/// Largest yaw rate the generated reference commands.
pub const MAX_REF_OMEGA: f64 = 0.5;

/// Box of reference states (v_x band, |ω| ≤ [`MAX_REF_OMEGA`], zero
/// elsewhere) the terminal set is centered on.
pub fn reference_envelope() -> IntervalBox {
    let (lo, hi) = REFERENCE_VX_BAND;
    IntervalBox::from_bounds(&[(lo, hi), (0.0, 0.0), (-MAX_REF_OMEGA, MAX_REF_OMEGA), (0.0, 0.0), (0.0, 0.0)])
        .expect("static bounds are ordered")
}

/// `0 → 1` with zero slope at both ends.
fn smoothstep(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    0.5 - 0.5 * (std::f64::consts::PI * s).cos()
}

fn generated(seed: u64, duration: f64, dt: f64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = (duration / dt).ceil() as usize + 1;
    let (lo, hi) = REFERENCE_VX_BAND;
    let (lo, hi) = (lo + 0.3, hi - 0.3);

    // Speed: holds and cosine transitions between random levels.
    let mut knots = vec![(0.0, 4.0, 4.0)];
    let (mut t, mut v) = (3.0, 4.0);
    while t < duration {
        let target: f64 = rng.gen_range(lo..hi);
        let len = (std::f64::consts::FRAC_PI_2 * (target - v).abs() / MAX_REF_ACCEL).max(1.0);
        knots.push((t, v, target));
        t += len + rng.gen_range(3.0..7.0);
        v = target;
    }
    let speed = |t: f64| {
        let mut out = 4.0;
        for &(t0, from, to) in &knots {
            if t >= t0 {
                let len = (std::f64::consts::FRAC_PI_2 * (to - from).abs() / MAX_REF_ACCEL).max(1.0);
                out = from + (to - from) * smoothstep((t - t0) / len);
            }
        }
        out
    };

    // Yaw rate: sin² corners separated by straights.
    let mut corners = Vec::new();
    let mut t = 4.0;
    while t < duration {
        let len = rng.gen_range(3.0..6.0);
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let amp: f64 = rng.gen_range(0.5..1.0);
        corners.push((t, len, sign * amp));
        t += len + rng.gen_range(2.0..5.0);
    }
    let vx: Vec<f64> = (0..n).map(|k| speed(k as f64 * dt)).collect();
    let omega = (0..n)
        .map(|k| {
            let t = k as f64 * dt;
            corners
                .iter()
                .filter(|&&(t0, len, _)| t >= t0 && t < t0 + len)
                .map(|&(t0, len, a)| {
                    let limit = MAX_REF_LATERAL / speed(t0).max(speed(t0 + len)).max(speed(t));
                    a * limit.min(MAX_REF_OMEGA) * (std::f64::consts::PI * (t - t0) / len).sin().powi(2)
                })
                .sum()
        })
        .collect();
    (vx, omega)
}

/// Builds the reference on a grid of `dt` covering `duration`.
pub fn make_reference(spec: &ReferenceSpec, duration: f64, dt: f64) -> Result<Reference> {
    if !(duration > 0.0 && dt > 0.0) {
        return Err(Error::InvalidArgument("duration and dt must be positive".into()));
    }
    match spec {
        ReferenceSpec::Constant { v_x, omega } => {
            let n = (duration / dt).ceil() as usize + 1;
            Reference::new(dt, vec![*v_x; n], vec![*omega; n])
        }
        ReferenceSpec::Generated { seed } => {
            let (vx, om) = generated(*seed, duration, dt);
            Reference::new(dt, vx, om)
        }
        ReferenceSpec::File { path } => Reference::load(path),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segments_are_zero_outside_windows() {
        let p = default_disturbances(60.0, &VehicleParams::default(), 0.035, &[0.074, 0.192, 0.105]).unwrap();
        for t in [0.0, 5.9, 59.99, 100.0] {
            assert_eq!(p.at(t), Disturbance::default());
        }
        assert!(p.at(7.0).slope > 0.0);
    }

    #[test]
    fn ramp_and_step_values() {
        let r = Segment::Ramp {
            start: 1.0,
            end: 3.0,
            from: 0.0,
            to: 4.0,
        };
        assert_eq!(r.value(2.0), 2.0);
        assert_eq!(r.value(3.0), 0.0);
        let s = Segment::Step {
            start: 0.0,
            end: 1.0,
            value: -2.0,
        };
        assert_eq!(s.value(0.0), -2.0);
    }

    #[test]
    fn interpolation_and_hold() {
        let r = Reference::new(0.5, vec![1.0, 2.0, 4.0], vec![0.0, 0.1, 0.2]).unwrap();
        assert_eq!(r.at(0.25), (1.5, 0.05));
        assert_eq!(r.at(0.75).0, 3.0);
        assert_eq!(r.at(10.0), (4.0, 0.2));
    }

    #[test]
    fn generated_reference_is_deterministic() {
        let spec = ReferenceSpec::Generated { seed: 3 };
        assert_eq!(make_reference(&spec, 30.0, 0.035).unwrap(), make_reference(&spec, 30.0, 0.035).unwrap());
        assert_ne!(
            make_reference(&spec, 30.0, 0.035).unwrap(),
            make_reference(&ReferenceSpec::Generated { seed: 4 }, 30.0, 0.035).unwrap()
        );
    }
}
