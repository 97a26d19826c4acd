//! Exact convex hull of a finite point set.
//!
//! Points are first projected onto their affine hull so that flat inputs
//! (lower-dimensional polytopes embedded in `R^n`) are handled; the actual
//! hull is delegated to Qhull.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative singular-value threshold for the affine-hull rank.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct HullVertices {
    /// Indices into the input slice, ascending.
    pub indices: Vec<usize>,
    /// Dimension of the affine hull of the input.
    pub affine_dim: usize,
}

impl HullVertices {
    pub fn is_degenerate(&self, ambient: usize) -> bool {
        self.affine_dim < ambient
    }
}

/// Vertex indices of `conv(points)`; errors with `VertexBlowUp` if more
/// than `cap` vertices survive.
pub fn hull_vertices(points: &[DVector<f64>], cap: usize) -> Result<HullVertices> {
    let first = points
        .first()
        .ok_or_else(|| Error::InvalidArgument("convex hull of no points".into()))?;
    let n = first.len();
    if let Some(bad) = points.iter().find(|p| p.len() != n) {
        return Err(Error::dim("convex hull point", n, bad.len()));
    }
    if points.iter().any(|p| p.iter().any(|v| !v.is_finite())) {
        return Err(Error::InvalidArgument("convex hull point is not finite".into()));
    }

    let count = points.len() as f64;
    let mean = points.iter().fold(DVector::zeros(n), |acc, p| acc + p) / count;
    // SVD of the centered data rather than eigenvalues of the scatter
    // matrix, which would square the conditioning
    let centered = DMatrix::from_fn(n, points.len(), |i, j| points[j][i] - mean[i]);
    let svd = centered.svd(true, false);
    let u_full = svd.u.as_ref().expect("left singular vectors requested");
    let sigma_max = svd.singular_values.max();
    let basis: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| sigma_max > 0.0 && svd.singular_values[i] > RANK_TOL * sigma_max)
        .collect();
    let r = basis.len();

    let mut indices = match r {
        0 => vec![0],
        1 => {
            let u = u_full.column(basis[0]);
            let proj: Vec<f64> = points.iter().map(|p| u.dot(&(p - &mean))).collect();
            let (mut lo, mut hi) = (0, 0);
            for (i, &v) in proj.iter().enumerate() {
                if v < proj[lo] {
                    lo = i;
                }
                if v > proj[hi] {
                    hi = i;
                }
            }
            vec![lo, hi]
        }
        _ => {
            // hull vertices are affine invariant, so whiten the cloud on its
            // affine hull before handing it to Qhull
            let u = u_full.select_columns(&basis);
            let scale: Vec<f64> = basis.iter().map(|&i| 1.0 / svd.singular_values[i]).collect();
            let ut = u.transpose();
            qhull_indices(points.iter().map(|p| {
                (&ut * (p - &mean)).iter().zip(&scale).map(|(v, s)| v * s).collect::<Vec<_>>()
            }))?
        }
    };
    indices.sort_unstable();
    indices.dedup();
    if indices.len() > cap {
        return Err(Error::VertexBlowUp { cap });
    }
    Ok(HullVertices { indices, affine_dim: r })
}

fn qhull_indices(points: impl Iterator<Item = Vec<f64>>) -> Result<Vec<usize>> {
    // Q12 lets Qhull keep going when merging nearly coplanar facets widens
    // one, which only affects which near-coplanar points count as vertices
    let qh = qhull::Qh::builder()
        .compute(true)
        .qhull_args(["Q12"])
        .map_err(|e| Error::Validation(format!("qhull options: {e}")))?
        .build_from_iter(points)
        .map_err(|e| Error::Validation(format!("qhull failed: {e:?}")))?;
    qh.vertices()
        .map(|v| {
            v.index(&qh)
                .ok_or_else(|| Error::Validation("qhull returned a vertex without an input index".into()))
        })
        .collect()
}
