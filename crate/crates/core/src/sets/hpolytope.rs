use nalgebra::{DMatrix, DVector};

use super::IntervalBox;
use crate::error::{Error, Result};

/// Halfspace polytope `{x : H x ≤ b}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HPolytope {
    normals: DMatrix<f64>,
    offsets: DVector<f64>,
}

impl HPolytope {
    pub fn new(normals: DMatrix<f64>, offsets: DVector<f64>) -> Result<Self> {
        if normals.nrows() != offsets.len() {
            return Err(Error::dim("halfspace offsets", normals.nrows(), offsets.len()));
        }
        if normals.iter().any(|v| !v.is_finite()) || offsets.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidArgument("halfspace data must be finite".into()));
        }
        Ok(HPolytope { normals, offsets })
    }

    /// Rows `e_iᵀx ≤ u_i`, `−e_iᵀx ≤ −l_i` for every finite bound.
    pub fn from_box(b: &IntervalBox) -> Self {
        let n = b.dim();
        let mut rows: Vec<(usize, f64, f64)> = Vec::new();
        for i in 0..n {
            if b.upper()[i].is_finite() {
                rows.push((i, 1.0, b.upper()[i]));
            }
            if b.lower()[i].is_finite() {
                rows.push((i, -1.0, -b.lower()[i]));
            }
        }
        let mut h = DMatrix::zeros(rows.len(), n);
        let mut off = DVector::zeros(rows.len());
        for (k, &(i, s, o)) in rows.iter().enumerate() {
            h[(k, i)] = s;
            off[k] = o;
        }
        HPolytope { normals: h, offsets: off }
    }

    pub fn dim(&self) -> usize {
        self.normals.ncols()
    }

    pub fn normals(&self) -> &DMatrix<f64> {
        &self.normals
    }

    pub fn offsets(&self) -> &DVector<f64> {
        &self.offsets
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> Result<bool> {
        if x.len() != self.dim() {
            return Err(Error::dim("hpoly_contains", self.dim(), x.len()));
        }
        if self.is_trivially_empty() {
            return Ok(false);
        }
        let hx = &self.normals * x;
        Ok((0..hx.len()).all(|k| hx[k] <= self.offsets[k] + tol))
    }

    /// A zero normal with a negative offset encodes `0 ≤ b < 0`.
    pub fn is_trivially_empty(&self) -> bool {
        self.normals
            .row_iter()
            .zip(self.offsets.iter())
            .any(|(row, &b)| b < 0.0 && row.iter().all(|&v| v == 0.0))
    }
}
