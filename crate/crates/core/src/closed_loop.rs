//! Discrete closed-loop error dynamics `e⁺ = M(ζ, K) e + w` shared by the
//! terminal-set computation and the online tube.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schedule::{GainSchedule, LocalController, N_VERTICES};
use crate::sets::Zonotope;
use crate::vehicle::{discretize_euler, lpv_matrices, LpvMatrices, Scheduling, VehicleParams, NX};

/// Per-MPC-period disturbance bounds `b_w` on `(v_x, v_y, ω, x, θ)`.
pub const DEFAULT_W_BOUNDS: [f64; NX] = [0.074, 0.192, 0.105, 0.0, 0.0];

/// Tire stiffness used for vertex and tube matrices (the LPV saturation
/// value).
pub const VERTEX_STIFFNESS: f64 = 4e4;

/// Box disturbance set `W` as a zonotope.
pub fn disturbance_set(bounds: &[f64]) -> Result<Zonotope> {
    Zonotope::centered_box(bounds)
}

/// How one MPC period of the error dynamics is discretized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorPropagation {
    /// The local loop as it actually runs: `N` Euler steps of length `h`
    /// with the gain held, `M = (I + h(A + BK))^N`.
    #[default]
    SampledLocalLoop,
    /// A single Euler step over the MPC period, `M = I + T_s(A + BK)`.
    EulerMpcPeriod,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ErrorModel {
    pub propagation: ErrorPropagation,
    /// MPC sampling time used by the prediction model.
    pub ts: f64,
    /// Local-loop period.
    pub local_period: f64,
    /// Local steps per MPC tick.
    pub local_steps: usize,
    pub stiffness: f64,
}

impl Default for ErrorModel {
    fn default() -> Self {
        ErrorModel {
            propagation: ErrorPropagation::SampledLocalLoop,
            ts: 0.033,
            local_period: 0.005,
            local_steps: 7,
            stiffness: VERTEX_STIFFNESS,
        }
    }
}

impl ErrorModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.ts > 0.0 && self.local_period > 0.0 && self.local_steps > 0 && self.stiffness > 0.0) {
            return Err(Error::Validation(format!("invalid error model {self:?}")));
        }
        Ok(())
    }

    /// Continuous-time closed loop `A(ζ) + B(ζ) K`.
    pub fn continuous(&self, z: &Scheduling, k: &DMatrix<f64>, p: &VehicleParams) -> Result<DMatrix<f64>> {
        let m = lpv_matrices(z, self.stiffness, self.stiffness, p)?;
        Ok(&m.a + &m.b * k)
    }

    /// Discrete one-MPC-period closed-loop matrix.
    pub fn closed_loop(&self, z: &Scheduling, k: &DMatrix<f64>, p: &VehicleParams) -> Result<DMatrix<f64>> {
        let acl = self.continuous(z, k, p)?;
        let n = acl.nrows();
        Ok(match self.propagation {
            ErrorPropagation::SampledLocalLoop => {
                let step = DMatrix::identity(n, n) + acl * self.local_period;
                step.pow(self.local_steps as u32)
            }
            ErrorPropagation::EulerMpcPeriod => DMatrix::identity(n, n) + acl * self.ts,
        })
    }

    /// One-MPC-period discretization of `ẋ = Ax + Bu` with `u` held,
    /// matching [`closed_loop`](Self::closed_loop): `N` Euler steps of `h`
    /// (`A_d = (I + hA)^N`, `B_d = Σ_j (I + hA)^j hB`) or one Euler step of
    /// `T_s`.
    pub fn prediction(&self, m: &LpvMatrices) -> (DMatrix<f64>, DMatrix<f64>) {
        match self.propagation {
            ErrorPropagation::SampledLocalLoop => {
                let (step, hb) = discretize_euler(m, self.local_period);
                let mut ad = DMatrix::identity(step.nrows(), step.ncols());
                let mut bd = DMatrix::zeros(hb.nrows(), hb.ncols());
                for _ in 0..self.local_steps {
                    bd = &step * bd + &hb;
                    ad = &step * ad;
                }
                (ad, bd)
            }
            ErrorPropagation::EulerMpcPeriod => discretize_euler(m, self.ts),
        }
    }

    /// Duration one prediction step covers.
    pub fn period(&self) -> f64 {
        match self.propagation {
            ErrorPropagation::SampledLocalLoop => self.local_period * self.local_steps as f64,
            ErrorPropagation::EulerMpcPeriod => self.ts,
        }
    }
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues().iter().map(|l| l.norm()).fold(0.0, f64::max)
}

/// Vertex closed loops `M_i` with the disturbance set they are driven by.
#[derive(Debug, Clone)]
pub struct ClosedLoopFamily {
    matrices: Vec<DMatrix<f64>>,
    w: Zonotope,
}

impl ClosedLoopFamily {
    /// Rejects any vertex with spectral radius ≥ 1.
    pub fn new(matrices: Vec<DMatrix<f64>>, w: Zonotope) -> Result<Self> {
        if matrices.is_empty() {
            return Err(Error::InvalidArgument("closed-loop family needs at least one matrix".into()));
        }
        let n = w.dim();
        for (i, m) in matrices.iter().enumerate() {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::dim("closed-loop vertex matrix", n, m.nrows()));
            }
            let rho = spectral_radius(m);
            if !(rho < 1.0) {
                return Err(Error::Validation(format!(
                    "closed-loop vertex {i} is not contractive (spectral radius {rho:.6})"
                )));
            }
        }
        Ok(ClosedLoopFamily { matrices, w })
    }

    /// The eight scheduling-vertex closed loops of a gain schedule.
    pub fn from_schedule(
        gs: &GainSchedule,
        which: LocalController,
        model: &ErrorModel,
        p: &VehicleParams,
        w: Zonotope,
    ) -> Result<Self> {
        Self::new(vertex_closed_loops(gs, which, model, p)?, w)
    }

    pub fn matrices(&self) -> &[DMatrix<f64>] {
        &self.matrices
    }

    pub fn disturbance(&self) -> &Zonotope {
        &self.w
    }

    pub fn dim(&self) -> usize {
        self.w.dim()
    }
}

/// Discrete closed-loop matrix at every scheduling vertex (no stability
/// check, so callers can report unstable vertices by index).
pub fn vertex_closed_loops(
    gs: &GainSchedule,
    which: LocalController,
    model: &ErrorModel,
    p: &VehicleParams,
) -> Result<Vec<DMatrix<f64>>> {
    let ks = gs.gains(which)?;
    (0..N_VERTICES)
        .map(|i| model.closed_loop(&gs.bounds.vertex(i), &ks[i], p))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sampled_loop_is_matrix_power() {
        let p = VehicleParams::default();
        let z = Scheduling::new(5.0, 0.0, 0.1);
        let k = DMatrix::from_fn(2, 5, |i, j| -0.01 * (1 + i + j) as f64);
        let model = ErrorModel::default();
        let acl = model.continuous(&z, &k, &p).unwrap();
        let step = DMatrix::identity(5, 5) + &acl * 0.005;
        let mut expected = DMatrix::identity(5, 5);
        for _ in 0..7 {
            expected = &step * expected;
        }
        let m = model.closed_loop(&z, &k, &p).unwrap();
        assert!((m - expected).amax() < 1e-12);

        let euler = ErrorModel {
            propagation: ErrorPropagation::EulerMpcPeriod,
            ..model
        };
        let m = euler.closed_loop(&z, &k, &p).unwrap();
        assert!((m - (DMatrix::identity(5, 5) + acl * 0.033)).amax() < 1e-15);
    }

    #[test]
    fn sampled_prediction_matches_repeated_euler() {
        let p = VehicleParams::default();
        let m = lpv_matrices(&Scheduling::new(4.0, 0.1, -0.05), 3e4, 3.5e4, &p).unwrap();
        let (ad, bd) = ErrorModel::default().prediction(&m);
        let x0 = nalgebra::DVector::from_column_slice(&[4.0, 0.1, 0.2, 1.0, 0.3]);
        let u = nalgebra::DVector::from_column_slice(&[-0.05, 5.0]);
        let mut x = x0.clone();
        for _ in 0..7 {
            x = &x + (&m.a * &x + &m.b * &u) * 0.005;
        }
        assert!((ad * x0 + bd * u - x).amax() < 1e-12);
    }

    #[test]
    fn rejects_unstable_vertex() {
        let w = Zonotope::centered_box(&[1.0]).unwrap();
        assert!(ClosedLoopFamily::new(vec![DMatrix::from_element(1, 1, 0.5)], w.clone()).is_ok());
        assert!(ClosedLoopFamily::new(vec![DMatrix::from_element(1, 1, -1.0)], w).is_err());
    }

    #[test]
    fn spectral_radius_of_rotation() {
        let (s, c) = 0.3_f64.sin_cos();
        let r = DMatrix::from_row_slice(2, 2, &[0.9 * c, -0.9 * s, 0.9 * s, 0.9 * c]);
        assert_relative_eq!(spectral_radius(&r), 0.9, epsilon = 1e-12);
    }
}
