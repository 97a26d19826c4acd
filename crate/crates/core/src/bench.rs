//! Timing comparison of the zonotope tube against the vertex-polytope
//! baseline.

use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::closed_loop::ErrorModel;
use crate::error::{Error, Result};
use crate::reach::{closed_loop_sequence, propagate_tube, propagate_tube_polytope, TubeSettings};
use crate::schedule::{GainSchedule, LocalController};
use crate::sets::Zonotope;
use crate::vehicle::{Scheduling, VehicleParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    Zonotope,
    Polytope,
}

/// One timed tube computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub rep: usize,
    pub representation: Representation,
    pub microseconds: f64,
    /// Generators of (zonotope) or vertices of (polytope) the last set.
    pub size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingStats {
    pub reps: usize,
    pub mean_ms: f64,
    pub median_ms: f64,
    pub p99_ms: f64,
}

impl TimingStats {
    pub fn from_micros(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidArgument("no timing samples".into()));
        }
        let mut s = samples.to_vec();
        s.sort_by(f64::total_cmp);
        let n = s.len();
        // nearest-rank percentiles
        let rank = |q: f64| s[((q * n as f64).ceil() as usize).clamp(1, n) - 1];
        Ok(TimingStats {
            reps: n,
            mean_ms: s.iter().sum::<f64>() / n as f64 / 1e3,
            median_ms: rank(0.5) / 1e3,
            p99_ms: rank(0.99) / 1e3,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TubeBenchmark {
    pub dim: usize,
    pub horizon: usize,
    pub zonotope: TimingStats,
    pub polytope: TimingStats,
    /// Mean polytope time over mean zonotope time.
    pub speedup: f64,
}

/// Closed-loop matrices along an accelerating, turning scheduling
/// trajectory: `v_x` from 3 to 7 m/s, small side slip and steering.
pub fn benchmark_sequence(
    gs: &GainSchedule,
    which: LocalController,
    horizon: usize,
    model: &ErrorModel,
    p: &VehicleParams,
) -> Result<Vec<DMatrix<f64>>> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be positive".into()));
    }
    let zeta: Vec<Scheduling> = (0..horizon)
        .map(|i| {
            let s = if horizon > 1 { i as f64 / (horizon - 1) as f64 } else { 0.0 };
            Scheduling::new(3.0 + 4.0 * s, 0.05 * s, 0.1 - 0.05 * s)
        })
        .collect();
    Ok(closed_loop_sequence(&zeta, gs, which, model, p)?.0)
}

/// Times `reps` zonotope tubes and `poly_reps` polytope tubes over the same
/// closed-loop sequence.
pub fn benchmark_tube(
    matrices: &[DMatrix<f64>],
    w: &Zonotope,
    settings: &TubeSettings,
    reps: usize,
    poly_reps: usize,
) -> Result<(TubeBenchmark, Vec<TimingRecord>)> {
    if reps == 0 || poly_reps == 0 {
        return Err(Error::InvalidArgument("repetition counts must be positive".into()));
    }
    let mut records = Vec::with_capacity(reps + poly_reps);
    for rep in 0..reps {
        let t = Instant::now();
        let tube = std::hint::black_box(propagate_tube(matrices, w, settings)?);
        let us = t.elapsed().as_secs_f64() * 1e6;
        records.push(TimingRecord {
            rep,
            representation: Representation::Zonotope,
            microseconds: us,
            size: tube.last().map_or(0, Zonotope::num_generators),
        });
    }
    for rep in 0..poly_reps {
        let t = Instant::now();
        let tube = std::hint::black_box(propagate_tube_polytope(matrices, w, settings.init)?);
        let us = t.elapsed().as_secs_f64() * 1e6;
        records.push(TimingRecord {
            rep,
            representation: Representation::Polytope,
            microseconds: us,
            size: tube.last().map_or(0, |p| p.len()),
        });
    }
    let times = |r: Representation| -> Vec<f64> {
        records.iter().filter(|x| x.representation == r).map(|x| x.microseconds).collect()
    };
    let zonotope = TimingStats::from_micros(&times(Representation::Zonotope))?;
    let polytope = TimingStats::from_micros(&times(Representation::Polytope))?;
    Ok((
        TubeBenchmark {
            dim: w.dim(),
            horizon: matrices.len(),
            speedup: polytope.mean_ms / zonotope.mean_ms,
            zonotope,
            polytope,
        },
        records,
    ))
}

/// CSV with header `step,representation,microseconds,size`.
pub fn records_to_csv(records: &[TimingRecord]) -> String {
    let mut s = String::from("step,representation,microseconds,size\n");
    for r in records {
        let name = match r.representation {
            Representation::Zonotope => "zonotope",
            Representation::Polytope => "polytope",
        };
        s.push_str(&format!("{},{name},{:.16e},{}\n", r.rep, r.microseconds, r.size));
    }
    s
}
