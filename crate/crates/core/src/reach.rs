//! Online tube: reachable error sets along the predicted scheduling
//! trajectory and the constraint sets they tighten.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::closed_loop::ErrorModel;
use crate::error::{Error, Result};
use crate::schedule::{GainSchedule, LocalController};
use crate::sets::{IntervalBox, VPolytope, Zonotope, GENERATORS_PER_DIM};
use crate::vehicle::{Scheduling, VehicleParams};

/// First set of the tube.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TubeInit {
    /// `Φ₀ = W`: the measured state already carries one disturbance step.
    #[default]
    Disturbance,
    /// `Φ₀ = {0}`.
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TubeSettings {
    pub init: TubeInit,
    /// Generator budget per state dimension.
    pub generators_per_dim: usize,
}

impl Default for TubeSettings {
    fn default() -> Self {
        TubeSettings {
            init: TubeInit::Disturbance,
            generators_per_dim: GENERATORS_PER_DIM,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TubeSequence {
    /// `Φ₀ … Φ_{H_p}`.
    pub sets: Vec<Zonotope>,
    /// `X̃₀ … X̃_{H_p}`.
    pub tightened_states: Vec<IntervalBox>,
    /// `Ũ₀ … Ũ_{H_p−1}`.
    pub tightened_inputs: Vec<IntervalBox>,
    pub any_empty: bool,
}

impl TubeSequence {
    pub fn horizon(&self) -> usize {
        self.tightened_inputs.len()
    }

    /// Interval-hull radii of every `Φ_i`, for telemetry.
    pub fn hull_radii(&self) -> Vec<Vec<f64>> {
        self.sets.iter().map(|s| s.axis_radius().iter().copied().collect()).collect()
    }
}

/// Closed-loop matrices `M_i` and gains `K(ζ_i)` along a scheduling
/// trajectory. Out-of-box values are clamped per the scheduler policy.
pub fn closed_loop_sequence(
    zeta_traj: &[Scheduling],
    gs: &GainSchedule,
    which: LocalController,
    model: &ErrorModel,
    p: &VehicleParams,
) -> Result<(Vec<DMatrix<f64>>, Vec<DMatrix<f64>>)> {
    let mut ms = Vec::with_capacity(zeta_traj.len());
    let mut ks = Vec::with_capacity(zeta_traj.len());
    for z in zeta_traj {
        let z = gs.bounds.clamp(z)?;
        let k = gs.gain_at(&z, which)?;
        ms.push(model.closed_loop(&z, &k, p)?);
        ks.push(k);
    }
    Ok((ms, ks))
}

/// `Φ₀ = W` (or `{0}`), `Φ_{i+1} = M_i Φ_i ⊕ W`, one set per matrix plus
/// the initial one. Generators are reduced beyond `generators_per_dim · n`.
pub fn propagate_tube(matrices: &[DMatrix<f64>], w: &Zonotope, s: &TubeSettings) -> Result<Vec<Zonotope>> {
    let n = w.dim();
    let p_max = (s.generators_per_dim * n).max(n);
    let mut phi = match s.init {
        TubeInit::Disturbance => w.clone(),
        TubeInit::Zero => Zonotope::origin(n),
    };
    let mut out = Vec::with_capacity(matrices.len() + 1);
    for m in matrices {
        let next = phi.linear_image(m)?.minkowski_sum(w)?;
        out.push(std::mem::replace(&mut phi, next.reduce_generators(p_max)?));
    }
    out.push(phi);
    Ok(out)
}

/// Same recursion on vertex polytopes (the benchmark baseline).
pub fn propagate_tube_polytope(matrices: &[DMatrix<f64>], w: &Zonotope, init: TubeInit) -> Result<Vec<VPolytope>> {
    let wp = VPolytope::from_zonotope(w)?;
    let mut phi = match init {
        TubeInit::Disturbance => wp.clone(),
        TubeInit::Zero => VPolytope::singleton(nalgebra::DVector::zeros(w.dim())),
    };
    let mut out = Vec::with_capacity(matrices.len() + 1);
    for m in matrices {
        let next = phi.linear_image(m)?.minkowski_sum(&wp)?;
        out.push(std::mem::replace(&mut phi, next));
    }
    out.push(phi);
    Ok(out)
}

/// `X̃_i = X ⊖ Φ_i` and `Ũ_i = U ⊖ K_i Φ_i`.
pub fn tighten_constraints(
    sets: &[Zonotope],
    x: &IntervalBox,
    u: &IntervalBox,
    gains: &[DMatrix<f64>],
) -> Result<TubeSequence> {
    if sets.len() != gains.len() + 1 {
        return Err(Error::dim("tube sets vs gains", gains.len() + 1, sets.len()));
    }
    let tightened_states = sets.iter().map(|phi| x.erode(phi)).collect::<Result<Vec<_>>>()?;
    let tightened_inputs = sets
        .iter()
        .zip(gains)
        .map(|(phi, k)| u.erode(&phi.linear_image(k)?))
        .collect::<Result<Vec<_>>>()?;
    let any_empty = tightened_states.iter().chain(&tightened_inputs).any(IntervalBox::is_empty);
    Ok(TubeSequence {
        sets: sets.to_vec(),
        tightened_states,
        tightened_inputs,
        any_empty,
    })
}

/// Everything one MPC tick needs from the tube.
#[allow(clippy::too_many_arguments)]
pub fn build_tube(
    zeta_traj: &[Scheduling],
    gs: &GainSchedule,
    which: LocalController,
    w: &Zonotope,
    model: &ErrorModel,
    p: &VehicleParams,
    x: &IntervalBox,
    u: &IntervalBox,
    s: &TubeSettings,
) -> Result<TubeSequence> {
    let (ms, ks) = closed_loop_sequence(zeta_traj, gs, which, model, p)?;
    tighten_constraints(&propagate_tube(&ms, w, s)?, x, u, &ks)
}
