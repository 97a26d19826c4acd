use nalgebra::{DMatrix, DVector};

use super::hull::hull_vertices;
use super::Zonotope;
use crate::error::{Error, Result};

/// Vertex-count ceiling for baseline operations.
pub const VERTEX_CAP: usize = 100_000;

/// Convex hull of a finite vertex list. Operations re-run the hull so the
/// list holds extreme points only.
#[derive(Debug, Clone, PartialEq)]
pub struct VPolytope {
    vertices: Vec<DVector<f64>>,
    affine_dim: usize,
}

impl VPolytope {
    /// Hull of arbitrary points.
    pub fn convex_hull(points: &[DVector<f64>]) -> Result<VPolytope> {
        let h = hull_vertices(points, VERTEX_CAP)?;
        Ok(VPolytope {
            vertices: h.indices.iter().map(|&i| points[i].clone()).collect(),
            affine_dim: h.affine_dim,
        })
    }

    pub fn from_zonotope(z: &Zonotope) -> Result<VPolytope> {
        Self::convex_hull(&z.sign_points()?)
    }

    pub fn singleton(p: DVector<f64>) -> VPolytope {
        VPolytope {
            vertices: vec![p],
            affine_dim: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].len()
    }

    pub fn vertices(&self) -> &[DVector<f64>] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Dimension of the affine hull; below `dim()` means the hull is flat.
    pub fn affine_dim(&self) -> usize {
        self.affine_dim
    }

    pub fn is_degenerate(&self) -> bool {
        self.affine_dim < self.dim()
    }

    pub fn linear_image(&self, m: &DMatrix<f64>) -> Result<VPolytope> {
        if m.ncols() != self.dim() {
            return Err(Error::dim("poly_linear_image", self.dim(), m.ncols()));
        }
        let pts: Vec<DVector<f64>> = self.vertices.iter().map(|v| m * v).collect();
        Self::convex_hull(&pts)
    }

    /// Hull of all pairwise vertex sums.
    pub fn minkowski_sum(&self, other: &VPolytope) -> Result<VPolytope> {
        if other.dim() != self.dim() {
            return Err(Error::dim("poly_minkowski_sum", self.dim(), other.dim()));
        }
        let count = self.len() * other.len();
        if count > VERTEX_CAP * 64 {
            return Err(Error::VertexBlowUp { cap: VERTEX_CAP });
        }
        let mut pts = Vec::with_capacity(count);
        for a in &self.vertices {
            for b in &other.vertices {
                pts.push(a + b);
            }
        }
        Self::convex_hull(&pts)
    }

    pub fn support(&self, d: &DVector<f64>) -> Result<f64> {
        if d.len() != self.dim() {
            return Err(Error::dim("support", self.dim(), d.len()));
        }
        Ok(self
            .vertices
            .iter()
            .map(|v| v.dot(d))
            .fold(f64::NEG_INFINITY, f64::max))
    }
}
