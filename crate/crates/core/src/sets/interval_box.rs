use nalgebra::{DMatrix, DVector};

use super::Zonotope;
use crate::error::{Error, Result};

/// Axis-aligned box `[lower, upper]`. Bounds may be infinite (unconstrained
/// coordinates). A box whose interval inverts on some axis is flagged empty
/// instead of being rejected, so erosion can report emptiness as data.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalBox {
    lower: DVector<f64>,
    upper: DVector<f64>,
    empty: bool,
}

impl IntervalBox {
    pub fn new(lower: DVector<f64>, upper: DVector<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::dim("box bounds", lower.len(), upper.len()));
        }
        if lower.iter().chain(upper.iter()).any(|v| v.is_nan()) {
            return Err(Error::InvalidArgument("box bound is NaN".into()));
        }
        Ok(Self::from_parts_unchecked(lower, upper))
    }

    pub(crate) fn from_parts_unchecked(lower: DVector<f64>, upper: DVector<f64>) -> Self {
        let empty = lower.iter().zip(upper.iter()).any(|(l, u)| l > u);
        IntervalBox { lower, upper, empty }
    }

    pub fn from_bounds(bounds: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            DVector::from_iterator(bounds.len(), bounds.iter().map(|b| b.0)),
            DVector::from_iterator(bounds.len(), bounds.iter().map(|b| b.1)),
        )
    }

    /// Symmetric box `[−r, r]`.
    pub fn symmetric(radius: &[f64]) -> Result<Self> {
        let bounds: Vec<(f64, f64)> = radius.iter().map(|&r| (-r, r)).collect();
        Self::from_bounds(&bounds)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &DVector<f64> {
        &self.lower
    }

    pub fn upper(&self) -> &DVector<f64> {
        &self.upper
    }

    pub fn is_empty(&self) -> bool {
        self.empty
    }

    pub fn is_bounded(&self) -> bool {
        self.lower.iter().chain(self.upper.iter()).all(|v| v.is_finite())
    }

    pub fn center(&self) -> DVector<f64> {
        (&self.lower + &self.upper) * 0.5
    }

    pub fn radius(&self) -> DVector<f64> {
        (&self.upper - &self.lower) * 0.5
    }

    /// The box as `⟨(u+l)/2, diag((u−l)/2)⟩`. Degenerate axes keep a zero
    /// column so the generator matrix stays diagonal.
    pub fn to_zonotope(&self) -> Result<Zonotope> {
        if self.empty {
            return Err(Error::InvalidArgument("empty box has no zonotope".into()));
        }
        if !self.is_bounded() {
            return Err(Error::InvalidArgument("unbounded box has no zonotope".into()));
        }
        Zonotope::new(self.center(), DMatrix::from_diagonal(&self.radius()))
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        !self.empty
            && x.len() == self.dim()
            && (0..self.dim()).all(|i| x[i] >= self.lower[i] - tol && x[i] <= self.upper[i] + tol)
    }

    pub fn intersect(&self, other: &IntervalBox) -> Result<IntervalBox> {
        if other.dim() != self.dim() {
            return Err(Error::dim("box intersection", self.dim(), other.dim()));
        }
        let lower = self.lower.zip_map(&other.lower, f64::max);
        let upper = self.upper.zip_map(&other.upper, f64::min);
        let mut b = Self::from_parts_unchecked(lower, upper);
        b.empty |= self.empty || other.empty;
        Ok(b)
    }

    /// Exact Minkowski difference `self ⊖ Z`: axis `i` shrinks to
    /// `[l_i − min_Z x_i, u_i − max_Z x_i]`. Infinite bounds stay infinite.
    pub fn erode(&self, z: &Zonotope) -> Result<IntervalBox> {
        if z.dim() != self.dim() {
            return Err(Error::dim("box erosion", self.dim(), z.dim()));
        }
        let r = z.axis_radius();
        let c = z.center();
        let lower = DVector::from_fn(self.dim(), |i, _| self.lower[i] - (c[i] - r[i]));
        let upper = DVector::from_fn(self.dim(), |i, _| self.upper[i] - (c[i] + r[i]));
        let mut b = Self::from_parts_unchecked(lower, upper);
        b.empty |= self.empty;
        Ok(b)
    }
}
