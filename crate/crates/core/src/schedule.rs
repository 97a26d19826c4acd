//! Polytopic membership weights and gain interpolation over the scheduling
//! box, plus the gains file the offline design tool exports.
//!
//! Vertices are numbered as a binary counter over `(v_x, v_y, δ)`: bit `j`
//! of the vertex index selects the lower (`0`) or upper (`1`) end of
//! variable `j`, so vertex 0 is all-lower and vertex 7 is all-upper.

use std::path::Path;

use log::warn;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sets::Zonotope;
use crate::vehicle::{Scheduling, NU, NX};

pub const N_ZETA: usize = 3;
pub const N_VERTICES: usize = 1 << N_ZETA;
pub const VERTEX_ORDER: &str = "binary:v_x,v_y,delta;bit0=lower";
/// The checked-in reference design (common H∞ gain, LQR baseline, terminal
/// set).
pub const REFERENCE_GAINS_JSON: &str = include_str!("../data/reference_gains.json");

/// Scheduling values this far outside the box (fraction of the interval
/// width) are clamped with a warning; further out is an error.
pub const CLAMP_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchedulingBounds {
    intervals: [(f64, f64); N_ZETA],
}

impl Default for SchedulingBounds {
    fn default() -> Self {
        SchedulingBounds {
            intervals: [(2.5, 7.5), (-0.6, 0.6), (-0.267, 0.267)],
        }
    }
}

impl SchedulingBounds {
    pub fn new(intervals: [(f64, f64); N_ZETA]) -> Result<Self> {
        for (j, &(lo, hi)) in intervals.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::Validation(format!(
                    "scheduling interval {j} = [{lo}, {hi}] must be finite with lower < upper"
                )));
            }
        }
        Ok(SchedulingBounds { intervals })
    }

    pub fn intervals(&self) -> &[(f64, f64); N_ZETA] {
        &self.intervals
    }

    pub fn vertex(&self, i: usize) -> Scheduling {
        let v: Vec<f64> = (0..N_ZETA)
            .map(|j| {
                let (lo, hi) = self.intervals[j];
                if (i >> j) & 1 == 0 {
                    lo
                } else {
                    hi
                }
            })
            .collect();
        Scheduling::from_slice(&v)
    }

    pub fn vertices(&self) -> Vec<Scheduling> {
        (0..N_VERTICES).map(|i| self.vertex(i)).collect()
    }

    /// Projects `ζ` onto the box. Values within [`CLAMP_FRACTION`] of an
    /// interval width outside are clamped (with a warning), anything
    /// further is rejected.
    pub fn clamp(&self, z: &Scheduling) -> Result<Scheduling> {
        let names = ["v_x", "v_y", "delta"];
        let mut out = z.to_array();
        for j in 0..N_ZETA {
            let (lo, hi) = self.intervals[j];
            let slack = CLAMP_FRACTION * (hi - lo);
            let v = out[j];
            if !(v >= lo - slack && v <= hi + slack) {
                return Err(Error::OutOfDomain {
                    what: names[j],
                    value: v,
                    bound: format!("scheduling interval [{lo}, {hi}] plus 1%"),
                });
            }
            if v < lo || v > hi {
                warn!("scheduling variable {} = {v} clamped to [{lo}, {hi}]", names[j]);
                out[j] = v.clamp(lo, hi);
            }
        }
        Ok(Scheduling::from_slice(&out))
    }
}

/// Membership weights `μ_i(ζ)`: products of the per-variable linear
/// memberships `η₀ = (ζ̄ − ζ)/(ζ̄ − ζ̲)` and `η₁ = 1 − η₀`.
pub fn membership_weights(z: &Scheduling, b: &SchedulingBounds) -> Result<[f64; N_VERTICES]> {
    let z = b.clamp(z)?.to_array();
    let mut eta = [[0.0; 2]; N_ZETA];
    for j in 0..N_ZETA {
        let (lo, hi) = b.intervals[j];
        let e0 = (hi - z[j]) / (hi - lo);
        eta[j] = [e0, 1.0 - e0];
    }
    let mut mu = [0.0; N_VERTICES];
    for (i, m) in mu.iter_mut().enumerate() {
        *m = (0..N_ZETA).map(|j| eta[j][(i >> j) & 1]).product();
    }
    Ok(mu)
}

/// `K = Σ μ_i K_i`.
pub fn interpolate_gain(weights: &[f64], gains: &[DMatrix<f64>]) -> Result<DMatrix<f64>> {
    if weights.len() != gains.len() {
        return Err(Error::dim("gain interpolation weights", gains.len(), weights.len()));
    }
    let first = gains
        .first()
        .ok_or_else(|| Error::InvalidArgument("no vertex gains".into()))?;
    let mut k = DMatrix::zeros(first.nrows(), first.ncols());
    for (w, g) in weights.iter().zip(gains) {
        if g.shape() != first.shape() {
            return Err(Error::InvalidArgument("vertex gains differ in shape".into()));
        }
        k += g * *w;
    }
    Ok(k)
}

/// `u_∞ = K e`.
pub fn local_control(e: &DVector<f64>, k: &DMatrix<f64>) -> DVector<f64> {
    k * e
}

/// Which vertex gain family drives the local loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalController {
    #[default]
    Hinf,
    Lqr,
}

impl std::str::FromStr for LocalController {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hinf" | "h_inf" => Ok(LocalController::Hinf),
            "lqr" => Ok(LocalController::Lqr),
            other => Err(Error::InvalidArgument(format!("unknown controller {other:?}, expected hinf or lqr"))),
        }
    }
}

/// Terminal set stored next to the gains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TerminalSetRecord {
    pub center: Vec<f64>,
    /// Row-major `n × p` generator matrix.
    pub generators: Vec<Vec<f64>>,
    pub epsilon_achieved: f64,
    pub iterations: usize,
}

impl TerminalSetRecord {
    pub fn from_zonotope(z: &Zonotope, epsilon_achieved: f64, iterations: usize) -> Self {
        TerminalSetRecord {
            center: z.center().iter().copied().collect(),
            generators: z.generators().row_iter().map(|r| r.iter().copied().collect()).collect(),
            epsilon_achieved,
            iterations,
        }
    }

    pub fn to_zonotope(&self) -> Result<Zonotope> {
        let n = self.center.len();
        if self.generators.len() != n {
            return Err(Error::dim("terminal set generator rows", n, self.generators.len()));
        }
        let p = self.generators.first().map_or(0, Vec::len);
        Zonotope::new(DVector::from_column_slice(&self.center), matrix_from_rows(&self.generators, n, p, "chi_f")?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsMetadata {
    pub tool: String,
    pub date: String,
}

/// On-disk layout of the gains file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GainsFile {
    n: usize,
    m: usize,
    n_zeta: usize,
    bounds: Vec<[f64; 2]>,
    vertex_order: String,
    #[serde(rename = "K")]
    k: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "P")]
    p: Vec<Vec<f64>>,
    gamma: f64,
    #[serde(rename = "K_lqr", default, skip_serializing_if = "Option::is_none")]
    k_lqr: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    chi_f: Option<TerminalSetRecord>,
    metadata: GainsMetadata,
}

fn matrix_from_rows(rows: &[Vec<f64>], nrows: usize, ncols: usize, what: &'static str) -> Result<DMatrix<f64>> {
    if rows.len() != nrows {
        return Err(Error::dim(what, nrows, rows.len()));
    }
    if let Some(r) = rows.iter().find(|r| r.len() != ncols) {
        return Err(Error::dim(what, ncols, r.len()));
    }
    let m = DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]);
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation(format!("{what} has non-finite entries")));
    }
    Ok(m)
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn vertex_gains(raw: &[Vec<Vec<f64>>], what: &'static str) -> Result<Vec<DMatrix<f64>>> {
    if raw.len() != N_VERTICES {
        return Err(Error::Validation(format!(
            "{what}: expected {N_VERTICES} vertex gains, found {}",
            raw.len()
        )));
    }
    raw.iter().map(|k| matrix_from_rows(k, NU, NX, what)).collect()
}

/// Offline design result: vertex gains, terminal cost and optionally the
/// terminal set.
#[derive(Debug, Clone)]
pub struct GainSchedule {
    pub bounds: SchedulingBounds,
    pub k_hinf: Vec<DMatrix<f64>>,
    pub k_lqr: Option<Vec<DMatrix<f64>>>,
    pub p: DMatrix<f64>,
    pub gamma: f64,
    pub terminal_set: Option<TerminalSetRecord>,
    pub metadata: GainsMetadata,
}

impl GainSchedule {
    /// Parses and runs [`validate`](Self::validate).
    pub fn from_json_str(text: &str) -> Result<Self> {
        let gs = Self::parse_unvalidated(text)?;
        gs.validate()?;
        Ok(gs)
    }

    /// Schema and shape checks only, so a file with a bad `P` can still be
    /// inspected.
    pub fn parse_unvalidated(text: &str) -> Result<Self> {
        let f: GainsFile = serde_json::from_str(text)?;
        if f.n != NX || f.m != NU || f.n_zeta != N_ZETA {
            return Err(Error::Validation(format!(
                "gains file dimensions (n, m, n_zeta) = ({}, {}, {}), expected ({NX}, {NU}, {N_ZETA})",
                f.n, f.m, f.n_zeta
            )));
        }
        if f.vertex_order != VERTEX_ORDER {
            return Err(Error::Validation(format!(
                "vertex_order {:?} does not match {VERTEX_ORDER:?}",
                f.vertex_order
            )));
        }
        if f.bounds.len() != N_ZETA {
            return Err(Error::dim("scheduling bounds", N_ZETA, f.bounds.len()));
        }
        let bounds = SchedulingBounds::new([
            (f.bounds[0][0], f.bounds[0][1]),
            (f.bounds[1][0], f.bounds[1][1]),
            (f.bounds[2][0], f.bounds[2][1]),
        ])?;
        Ok(GainSchedule {
            bounds,
            k_hinf: vertex_gains(&f.k, "K")?,
            k_lqr: f.k_lqr.as_deref().map(|k| vertex_gains(k, "K_lqr")).transpose()?,
            p: matrix_from_rows(&f.p, NX, NX, "P")?,
            gamma: f.gamma,
            terminal_set: f.chi_f,
            metadata: f.metadata,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
        Self::from_json_str(&text)
    }

    pub fn reference() -> Self {
        Self::from_json_str(REFERENCE_GAINS_JSON).expect("reference gains file is valid")
    }

    pub fn to_json_string(&self) -> Result<String> {
        let iv = self.bounds.intervals();
        let f = GainsFile {
            n: NX,
            m: NU,
            n_zeta: N_ZETA,
            bounds: iv.iter().map(|&(l, u)| [l, u]).collect(),
            vertex_order: VERTEX_ORDER.into(),
            k: self.k_hinf.iter().map(matrix_to_rows).collect(),
            p: matrix_to_rows(&self.p),
            gamma: self.gamma,
            k_lqr: self.k_lqr.as_ref().map(|ks| ks.iter().map(matrix_to_rows).collect()),
            chi_f: self.terminal_set.clone(),
            metadata: self.metadata.clone(),
        };
        Ok(serde_json::to_string_pretty(&f)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path.as_ref(), self.to_json_string()?).map_err(|e| Error::io(path.as_ref(), e))
    }

    /// Checks `P = Pᵀ ≻ 0`, finiteness of `γ` and the vertex gain shapes.
    pub fn validate(&self) -> Result<()> {
        if self.k_hinf.len() != N_VERTICES {
            return Err(Error::Validation(format!("expected {N_VERTICES} H∞ vertex gains")));
        }
        if let Some(k) = &self.k_lqr {
            if k.len() != N_VERTICES {
                return Err(Error::Validation(format!("expected {N_VERTICES} LQR vertex gains")));
            }
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::Validation(format!("gamma = {} must be finite and nonnegative", self.gamma)));
        }
        let asym = (&self.p - self.p.transpose()).amax();
        if asym > 1e-9 * self.p.amax().max(1.0) {
            return Err(Error::Validation(format!("P is not symmetric (max asymmetry {asym:e})")));
        }
        let min_eig = SymmetricEigen::new(self.p.clone()).eigenvalues.min();
        if !(min_eig > 0.0) {
            return Err(Error::Validation(format!("P is not positive definite (min eigenvalue {min_eig:e})")));
        }
        Ok(())
    }

    pub fn gains(&self, which: LocalController) -> Result<&[DMatrix<f64>]> {
        match which {
            LocalController::Hinf => Ok(&self.k_hinf),
            LocalController::Lqr => self
                .k_lqr
                .as_deref()
                .ok_or_else(|| Error::Validation("gains file has no LQR gains".into())),
        }
    }

    /// Interpolated gain `K(ζ)`.
    pub fn gain_at(&self, z: &Scheduling, which: LocalController) -> Result<DMatrix<f64>> {
        interpolate_gain(&membership_weights(z, &self.bounds)?, self.gains(which)?)
    }

    /// Lipschitz bound `L` with `‖K(ζ₁) − K(ζ₂)‖_F ≤ L‖ζ₁ − ζ₂‖₂`, from the
    /// largest vertex-gain difference along each box edge direction.
    pub fn lipschitz_bound(&self, which: LocalController) -> Result<f64> {
        let ks = self.gains(which)?;
        let mut sum = 0.0;
        for j in 0..N_ZETA {
            let (lo, hi) = self.bounds.intervals()[j];
            let worst = (0..N_VERTICES)
                .filter(|i| (i >> j) & 1 == 0)
                .map(|i| (&ks[i | (1 << j)] - &ks[i]).norm())
                .fold(0.0, f64::max);
            sum += (worst / (hi - lo)).powi(2);
        }
        Ok(sum.sqrt())
    }

    /// Terminal set if the file carries one.
    pub fn terminal_zonotope(&self) -> Result<Option<Zonotope>> {
        self.terminal_set.as_ref().map(TerminalSetRecord::to_zonotope).transpose()
    }
}
