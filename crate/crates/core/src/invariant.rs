//! Terminal robust positively invariant set of the polytopic error dynamics.
//!
//! The pipeline runs in dependency order: an initial outer bound `E₀`, the
//! iteration that grows it into an invariant `E_{k*}`, and finally the
//! contraction from `E_{k*}` towards the minimal RPI set.

use log::debug;
use serde::{Deserialize, Serialize};

use crate::closed_loop::ClosedLoopFamily;
use crate::error::{Error, Result};
use crate::sets::{TestDirections, Zonotope, GENERATORS_PER_DIM};

pub const E0_CAP: usize = 200;
pub const EK_CAP: usize = 500;
pub const MRPI_CAP: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RpiSettings {
    /// Contraction target `ξ` for `E₀`.
    pub xi: f64,
    /// Ball radius as a multiple of the largest axis radius of `W`.
    pub r_factor: f64,
    /// Precision of the outer approximation.
    pub epsilon: f64,
    /// Tolerance of the termination containment tests.
    pub tol_set: f64,
    pub max_generators: usize,
}

impl Default for RpiSettings {
    fn default() -> Self {
        RpiSettings {
            xi: 0.9,
            r_factor: 1.05,
            epsilon: 1e-4,
            tol_set: 1e-8,
            max_generators: GENERATORS_PER_DIM * 5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RpiResult {
    pub set: Zonotope,
    pub iterations: usize,
    /// Smallest slack for which `𝒜(set) ⊕ W ⊆ set` holds on the test
    /// directions (at least the requested ε).
    pub epsilon_achieved: f64,
    pub is_outer_approximation: bool,
}

/// Everything the offline pipeline produces.
#[derive(Debug, Clone)]
pub struct TerminalSetReport {
    pub e0: Zonotope,
    pub p_star: usize,
    pub ek_star: Zonotope,
    pub ek_iterations: usize,
    pub rpi: RpiResult,
}

/// Zonotope enclosure of `Conv{∪ M_i Ω}`, reduced to `p_max` generators.
pub fn one_step_map(family: &ClosedLoopFamily, omega: &Zonotope, p_max: usize) -> Result<Zonotope> {
    let images = family
        .matrices()
        .iter()
        .map(|m| omega.linear_image(m))
        .collect::<Result<Vec<_>>>()?;
    Zonotope::enclose_union(&images)?.reduce_generators(p_max.max(omega.dim()))
}

/// Axis box `B(r)` in `n` dimensions.
fn ball(n: usize, r: f64) -> Result<Zonotope> {
    Zonotope::centered_box(&vec![r; n])
}

/// Initial outer bound `E₀ = ⊕_{i<p*} 𝒜^i(B(r)) ⊕ (p*ξ/(1−ξ)) B(r)` with
/// `p*` the first power that maps `B(r)` into `ξ B(r)`.
pub fn compute_e0(family: &ClosedLoopFamily, xi: f64, r: f64, p_max: usize) -> Result<(Zonotope, usize)> {
    if !(xi > 0.0 && xi < 1.0) {
        return Err(Error::InvalidArgument(format!("xi = {xi} must lie in (0, 1)")));
    }
    let n = family.dim();
    let w_radius = family.disturbance().axis_radius();
    if w_radius.iter().any(|&wr| wr > r) {
        return Err(Error::InvalidArgument(format!("B({r}) does not cover W")));
    }
    let b = ball(n, r)?;
    let target = b.scale(xi);
    let dirs = TestDirections::standard(n);
    let mut sum = b.clone();
    let mut power = b.clone();
    for p in 1..=E0_CAP {
        power = one_step_map(family, &power, p_max)?;
        if power.support_contained_in(&target, &dirs, 0.0) {
            let tail = b.scale(p as f64 * xi / (1.0 - xi));
            return Ok((sum.minkowski_sum(&tail)?.reduce_generators(p_max)?, p));
        }
        sum = sum.minkowski_sum(&power)?.reduce_generators(p_max)?;
    }
    Err(Error::IterationCap { what: "E0 contraction power", cap: E0_CAP })
}

/// Grows `E₀` until it is invariant: `Ē = 𝒜(E_k) ⊕ W`, `E_{k+1}` encloses
/// `Ē ∪ E_k`; stops once the new set no longer exceeds the old one.
pub fn compute_ek_star(family: &ClosedLoopFamily, e0: &Zonotope, s: &RpiSettings) -> Result<(Zonotope, usize)> {
    let dirs = TestDirections::standard(family.dim());
    let mut e = e0.clone();
    for k in 0..EK_CAP {
        let bar = one_step_map(family, &e, s.max_generators)?.minkowski_sum(family.disturbance())?;
        if bar.support_contained_in(&e, &dirs, s.tol_set) {
            return Ok((e, k + 1));
        }
        let next = Zonotope::enclose_union(&[bar, e.clone()])?.reduce_generators(s.max_generators)?;
        if next.support_contained_in(&e, &dirs, s.tol_set) {
            return Ok((next, k + 1));
        }
        e = next;
    }
    Err(Error::IterationCap { what: "invariant outer bound", cap: EK_CAP })
}

/// Contraction `Ω_{k+1} = 𝒜(Ω_k) ⊕ W` from `Ω₀ = E_{k*}`, stopped when the
/// image of `Ω₀` after `k` steps has interval-hull radius ≤ ε.
pub fn compute_mrpi(family: &ClosedLoopFamily, ek_star: &Zonotope, s: &RpiSettings) -> Result<RpiResult> {
    if !(s.epsilon > 0.0) {
        return Err(Error::InvalidArgument("epsilon must be positive".into()));
    }
    let mut omega = ek_star.clone();
    let mut increment = ek_star.clone();
    for k in 1..=MRPI_CAP {
        omega = one_step_map(family, &omega, s.max_generators)?
            .minkowski_sum(family.disturbance())?
            .reduce_generators(s.max_generators)?;
        increment = one_step_map(family, &increment, s.max_generators)?;
        if increment.axis_radius().amax() <= s.epsilon {
            let eps = invariance_gap(family, &omega, s.max_generators)?.max(s.epsilon);
            debug!("mRPI terminated after {k} iterations, epsilon {eps:e}");
            return Ok(RpiResult {
                set: omega,
                iterations: k,
                epsilon_achieved: eps,
                is_outer_approximation: true,
            });
        }
    }
    Err(Error::IterationCap { what: "mRPI contraction", cap: MRPI_CAP })
}

/// Largest normalized support excess of `𝒜(Ω) ⊕ W` over `Ω`.
pub fn invariance_gap(family: &ClosedLoopFamily, omega: &Zonotope, p_max: usize) -> Result<f64> {
    let next = one_step_map(family, omega, p_max)?.minkowski_sum(family.disturbance())?;
    let dirs = TestDirections::standard(family.dim());
    Ok(dirs
        .iter()
        .map(|d| {
            let l1: f64 = d.iter().map(|v| v.abs()).sum();
            (next.support_unchecked(d.as_slice()) - omega.support_unchecked(d.as_slice())) / l1
        })
        .fold(0.0, f64::max))
}

/// `support(𝒜(Ω) ⊕ W, d) ≤ support(Ω, d) + slack·‖d‖₁` on the test
/// directions.
pub fn check_rpi(family: &ClosedLoopFamily, omega: &Zonotope, slack: f64) -> Result<bool> {
    let p_max = omega.num_generators().max(GENERATORS_PER_DIM * omega.dim());
    Ok(invariance_gap(family, omega, p_max)? <= slack)
}

/// Runs `E₀ → E_{k*} → χ_f`.
pub fn compute_terminal_set(family: &ClosedLoopFamily, s: &RpiSettings) -> Result<TerminalSetReport> {
    let w_max = family.disturbance().axis_radius().amax();
    if w_max == 0.0 {
        // the mRPI set of an undisturbed contractive loop is the origin
        let o = Zonotope::origin(family.dim());
        return Ok(TerminalSetReport {
            e0: o.clone(),
            p_star: 0,
            ek_star: o.clone(),
            ek_iterations: 0,
            rpi: RpiResult {
                set: o,
                iterations: 0,
                epsilon_achieved: 0.0,
                is_outer_approximation: true,
            },
        });
    }
    let r = s.r_factor * w_max;
    let (e0, p_star) = compute_e0(family, s.xi, r, s.max_generators)?;
    let (ek_star, ek_iterations) = compute_ek_star(family, &e0, s)?;
    let rpi = compute_mrpi(family, &ek_star, s)?;
    Ok(TerminalSetReport {
        e0,
        p_star,
        ek_star,
        ek_iterations,
        rpi,
    })
}
