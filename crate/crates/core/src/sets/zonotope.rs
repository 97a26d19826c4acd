use nalgebra::{DMatrix, DVector};

use super::{IntervalBox, TestDirections};
use crate::error::{Error, Result};

/// Zonotope `⟨c, R⟩ = { c + R ξ : ‖ξ‖∞ ≤ 1 }`.
///
/// `R` is `n × p`; `p = 0` is a single point.
#[derive(Debug, Clone, PartialEq)]
pub struct Zonotope {
    center: DVector<f64>,
    generators: DMatrix<f64>,
}

impl Zonotope {
    pub fn new(center: DVector<f64>, generators: DMatrix<f64>) -> Result<Self> {
        if generators.nrows() != center.len() {
            return Err(Error::dim("zonotope generators", center.len(), generators.nrows()));
        }
        if center.iter().chain(generators.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("zonotope entries must be finite".into()));
        }
        Ok(Zonotope { center, generators })
    }

    pub fn point(center: DVector<f64>) -> Result<Self> {
        let n = center.len();
        Self::new(center, DMatrix::zeros(n, 0))
    }

    pub fn origin(n: usize) -> Self {
        Zonotope {
            center: DVector::zeros(n),
            generators: DMatrix::zeros(n, 0),
        }
    }

    /// Centered axis-aligned box with the given half-widths; zero half-widths
    /// produce no generator.
    pub fn centered_box(radius: &[f64]) -> Result<Self> {
        let n = radius.len();
        let cols: Vec<usize> = (0..n).filter(|&i| radius[i] != 0.0).collect();
        let mut g = DMatrix::zeros(n, cols.len());
        for (j, &i) in cols.iter().enumerate() {
            g[(i, j)] = radius[i].abs();
        }
        Self::new(DVector::zeros(n), g)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn num_generators(&self) -> usize {
        self.generators.ncols()
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn generators(&self) -> &DMatrix<f64> {
        &self.generators
    }

    pub fn linear_image(&self, m: &DMatrix<f64>) -> Result<Zonotope> {
        if m.ncols() != self.dim() {
            return Err(Error::dim("linear_image", self.dim(), m.ncols()));
        }
        Ok(Zonotope {
            center: m * &self.center,
            generators: m * &self.generators,
        })
    }

    pub fn minkowski_sum(&self, other: &Zonotope) -> Result<Zonotope> {
        if other.dim() != self.dim() {
            return Err(Error::dim("minkowski_sum", self.dim(), other.dim()));
        }
        let (n, p1, p2) = (self.dim(), self.num_generators(), other.num_generators());
        let mut g = DMatrix::zeros(n, p1 + p2);
        g.columns_mut(0, p1).copy_from(&self.generators);
        g.columns_mut(p1, p2).copy_from(&other.generators);
        Ok(Zonotope {
            center: &self.center + &other.center,
            generators: g,
        })
    }

    pub fn translate(&self, t: &DVector<f64>) -> Result<Zonotope> {
        if t.len() != self.dim() {
            return Err(Error::dim("translate", self.dim(), t.len()));
        }
        Ok(Zonotope {
            center: &self.center + t,
            generators: self.generators.clone(),
        })
    }

    /// Scales the set about the origin (center and generators).
    pub fn scale(&self, s: f64) -> Zonotope {
        Zonotope {
            center: &self.center * s,
            generators: &self.generators * s,
        }
    }

    /// `max_{x∈Z} dᵀx = dᵀc + Σ_j |dᵀ R_j|`.
    pub fn support(&self, d: &DVector<f64>) -> Result<f64> {
        if d.len() != self.dim() {
            return Err(Error::dim("support", self.dim(), d.len()));
        }
        Ok(self.support_unchecked(d.as_slice()))
    }

    pub(crate) fn support_unchecked(&self, d: &[f64]) -> f64 {
        let n = self.dim();
        let mut h: f64 = (0..n).map(|i| d[i] * self.center[i]).sum();
        for col in self.generators.column_iter() {
            let mut dot = 0.0;
            for i in 0..n {
                dot += d[i] * col[i];
            }
            h += dot.abs();
        }
        h
    }

    /// Per-axis half-widths `Σ_j |R_ij|`.
    pub fn axis_radius(&self) -> DVector<f64> {
        DVector::from_fn(self.dim(), |i, _| self.generators.row(i).iter().fold(0.0, |s, v| s + v.abs()))
    }

    /// Tight axis-aligned bounding box.
    pub fn interval_hull(&self) -> IntervalBox {
        let r = self.axis_radius();
        IntervalBox::from_parts_unchecked(&self.center - &r, &self.center + &r)
    }

    /// Drops all-zero generator columns.
    pub fn compact(&self) -> Zonotope {
        let keep: Vec<usize> = (0..self.num_generators())
            .filter(|&j| self.generators.column(j).iter().any(|&v| v != 0.0))
            .collect();
        if keep.len() == self.num_generators() {
            return self.clone();
        }
        Zonotope {
            center: self.center.clone(),
            generators: self.generators.select_columns(&keep),
        }
    }

    /// Outer approximation with at most `p_max` generators: the
    /// `p_max − n` longest generators are kept and the rest are enclosed in
    /// an axis-aligned box.
    pub fn reduce_generators(&self, p_max: usize) -> Result<Zonotope> {
        let n = self.dim();
        if p_max < n {
            return Err(Error::InvalidArgument(format!(
                "p_max = {p_max} is below the dimension {n}"
            )));
        }
        let p = self.num_generators();
        if p <= p_max {
            return Ok(self.clone());
        }
        let mut order: Vec<(f64, usize)> = self
            .generators
            .column_iter()
            .enumerate()
            .map(|(j, c)| (c.norm(), j))
            .collect();
        order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let kept = p_max - n;
        let mut boxed = DVector::<f64>::zeros(n);
        for &(_, j) in &order[kept..] {
            for i in 0..n {
                boxed[i] += self.generators[(i, j)].abs();
            }
        }
        let mut keep_cols: Vec<usize> = order[..kept].iter().map(|&(_, j)| j).collect();
        keep_cols.sort_unstable();
        let box_rows: Vec<usize> = (0..n).filter(|&i| boxed[i] > 0.0).collect();
        let mut g = DMatrix::zeros(n, kept + box_rows.len());
        for (k, &j) in keep_cols.iter().enumerate() {
            g.set_column(k, &self.generators.column(j));
        }
        for (k, &i) in box_rows.iter().enumerate() {
            g[(i, kept + k)] = boxed[i];
        }
        Ok(Zonotope {
            center: self.center.clone(),
            generators: g,
        })
    }

    /// Zonotope enclosing the convex hull of a union of zonotopes.
    ///
    /// Center and generators are averaged (generator lists are zero-padded
    /// to a common count); each member's deviation from the average is
    /// bounded per axis and added as a box. Identical members give back the
    /// member exactly.
    pub fn enclose_union(members: &[Zonotope]) -> Result<Zonotope> {
        let first = members
            .first()
            .ok_or_else(|| Error::InvalidArgument("enclosure of an empty union".into()))?;
        let n = first.dim();
        let p = members.iter().map(|z| z.num_generators()).max().unwrap_or(0);
        for z in members {
            if z.dim() != n {
                return Err(Error::dim("enclose_union", n, z.dim()));
            }
        }
        if members.iter().all(|z| z == first) {
            return Ok(first.clone());
        }
        if members.len() == 2 {
            return Ok(Self::enclose_pair(&members[0], &members[1]));
        }
        let k = members.len() as f64;
        let mut c_mean = DVector::zeros(n);
        let mut g_mean = DMatrix::zeros(n, p);
        for z in members {
            c_mean += &z.center;
            let mut view = g_mean.columns_mut(0, z.num_generators());
            view += &z.generators;
        }
        c_mean /= k;
        g_mean /= k;

        let mut resid = DVector::<f64>::zeros(n);
        for z in members {
            for i in 0..n {
                let mut r = (z.center[i] - c_mean[i]).abs();
                for j in 0..p {
                    let gij = if j < z.num_generators() { z.generators[(i, j)] } else { 0.0 };
                    r += (gij - g_mean[(i, j)]).abs();
                }
                resid[i] = resid[i].max(r);
            }
        }
        let box_rows: Vec<usize> = (0..n).filter(|&i| resid[i] > 0.0).collect();
        let mut g = DMatrix::zeros(n, p + box_rows.len());
        g.columns_mut(0, p).copy_from(&g_mean);
        for (k, &i) in box_rows.iter().enumerate() {
            g[(i, p + k)] = resid[i];
        }
        Ok(Zonotope {
            center: c_mean,
            generators: g,
        }
        .compact())
    }

    /// Two-set case: `⟨(c₁+c₂)/2, [(R₁+R₂)/2, (c₁−c₂)/2, (R₁−R₂)/2]⟩` with
    /// generators paired by column index. Every point `c₁ + R₁ξ` is hit with
    /// coefficients `(ξ, 1, ξ)` and every `c₂ + R₂ξ` with `(ξ, −1, −ξ)`.
    fn enclose_pair(a: &Zonotope, b: &Zonotope) -> Zonotope {
        let n = a.dim();
        let p = a.num_generators().max(b.num_generators());
        let padded = |z: &Zonotope| {
            let mut g = DMatrix::zeros(n, p);
            g.columns_mut(0, z.num_generators()).copy_from(&z.generators);
            g
        };
        let (ga, gb) = (padded(a), padded(b));
        let mut g = DMatrix::zeros(n, 2 * p + 1);
        g.columns_mut(0, p).copy_from(&((&ga + &gb) * 0.5));
        g.set_column(p, &((&a.center - &b.center) * 0.5));
        g.columns_mut(p + 1, p).copy_from(&((&ga - &gb) * 0.5));
        Zonotope {
            center: (&a.center + &b.center) * 0.5,
            generators: g,
        }
        .compact()
    }

    /// Containment `self ⊆ other` up to `tol`, compared through support
    /// functions on `dirs`. Necessary for true containment; exact only when
    /// the directions include the facet normals of `other`.
    pub fn support_contained_in(&self, other: &Zonotope, dirs: &TestDirections, tol: f64) -> bool {
        dirs.iter().all(|d| {
            let slack = tol * d.iter().map(|v| v.abs()).sum::<f64>();
            self.support_unchecked(d.as_slice()) <= other.support_unchecked(d.as_slice()) + slack
        })
    }

    /// Exact point membership: solves `R ξ = x − c, ‖ξ‖∞ ≤ 1` as a
    /// least-norm feasibility QP.
    pub fn contains_point(&self, x: &DVector<f64>, tol: f64) -> Result<bool> {
        if x.len() != self.dim() {
            return Err(Error::dim("contains_point", self.dim(), x.len()));
        }
        let z = self.compact();
        let p = z.num_generators();
        let d = x - &z.center;
        if p == 0 {
            return Ok(d.amax() <= tol);
        }
        // Cheap rejection on the interval hull first.
        if (0..z.dim()).any(|i| d[i].abs() > z.axis_radius()[i] + tol) {
            return Ok(false);
        }
        let qp = crate::qp::DenseQp::new(DMatrix::identity(p, p), DVector::zeros(p))?
            .with_equalities(z.generators.clone(), d.clone())?
            .with_bounds(DVector::from_element(p, -1.0), DVector::from_element(p, 1.0))?;
        let sol = crate::qp::solve(&qp, None, &crate::qp::QpSettings::default())?;
        Ok(sol.status == crate::qp::QpStatus::Optimal && (&z.generators * &sol.x - d).amax() <= tol)
    }

    /// All `2^p` sign-pattern points `c + R s`, `s ∈ {−1, 1}^p`.
    pub fn sign_points(&self) -> Result<Vec<DVector<f64>>> {
        let z = self.compact();
        let p = z.num_generators();
        if p > 20 {
            return Err(Error::InvalidArgument(format!(
                "refusing to enumerate 2^{p} sign patterns"
            )));
        }
        let mut out = Vec::with_capacity(1 << p);
        for mask in 0u32..(1u32 << p) {
            let mut v = z.center.clone();
            for j in 0..p {
                let s = if mask >> j & 1 == 1 { 1.0 } else { -1.0 };
                v.axpy(s, &z.generators.column(j), 1.0);
            }
            out.push(v);
        }
        Ok(out)
    }

    /// Point `c + R ξ` for a given `ξ` (used by samplers).
    pub fn point_at(&self, xi: &DVector<f64>) -> DVector<f64> {
        &self.center + &self.generators * xi
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::dmatrix;
    use nalgebra::dvector;

    fn diag2(a: f64, b: f64) -> DMatrix<f64> {
        DMatrix::from_diagonal(&dvector![a, b])
    }

    #[test]
    fn identity_image_is_unchanged() {
        let z = Zonotope::new(dvector![0.0, 0.0], dmatrix![0.1, 0.3; -0.2, 0.4]).unwrap();
        assert_eq!(z.linear_image(&DMatrix::identity(2, 2)).unwrap(), z);
    }

    #[test]
    fn point_maps_to_point() {
        let z = Zonotope::point(dvector![1.0, 2.0]).unwrap();
        let m = dmatrix![1.0, 2.0; 3.0, 4.0; 5.0, 6.0];
        let img = z.linear_image(&m).unwrap();
        assert_eq!(img.center(), &dvector![5.0, 11.0, 17.0]);
        assert_eq!(img.num_generators(), 0);
    }

    #[test]
    fn scaling_image() {
        let z = Zonotope::new(dvector![0.0, 0.0], diag2(0.1, 0.2)).unwrap();
        let img = z.linear_image(&(DMatrix::identity(2, 2) * 2.0)).unwrap();
        assert_eq!(img.generators(), &diag2(0.2, 0.4));
    }

    #[test]
    fn linear_image_rejects_bad_dimension() {
        let z = Zonotope::origin(3);
        assert!(matches!(
            z.linear_image(&DMatrix::identity(2, 2)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn axis_aligned_sum() {
        let a = Zonotope::new(dvector![0.0, 0.0], diag2(0.1, 0.1)).unwrap();
        let b = Zonotope::new(dvector![0.0, 0.0], diag2(0.2, 0.2)).unwrap();
        let s = a.minkowski_sum(&b).unwrap();
        assert_eq!(s.num_generators(), 4);
        assert_eq!(s.generators().columns(2, 2), diag2(0.2, 0.2));
        let hull = s.interval_hull();
        assert_relative_eq!(hull.upper()[0], 0.3, epsilon = 1e-15);
        assert_relative_eq!(hull.lower()[1], -0.3, epsilon = 1e-15);
    }

    #[test]
    fn sum_with_origin_keeps_set() {
        let z = Zonotope::new(dvector![1.0, -1.0], dmatrix![0.3, 0.1; 0.0, 0.2]).unwrap();
        let s = z.minkowski_sum(&Zonotope::origin(2)).unwrap();
        assert_eq!(s, z);
    }

    #[test]
    fn support_examples() {
        let z = Zonotope::new(dvector![0.0, 0.0], diag2(0.2, 0.1)).unwrap();
        assert_relative_eq!(z.support(&dvector![1.0, 0.0]).unwrap(), 0.2);
        let z = Zonotope::new(dvector![1.0, 0.0], diag2(0.2, 0.1)).unwrap();
        assert_relative_eq!(z.support(&dvector![1.0, 0.0]).unwrap(), 1.2);
    }

    #[test]
    fn interval_hull_examples() {
        let z = Zonotope::new(dvector![0.0, 0.0], dmatrix![0.1, 0.2; 0.0, 0.1]).unwrap();
        let h = z.interval_hull();
        assert_relative_eq!(h.upper()[0], 0.3, epsilon = 1e-15);
        assert_relative_eq!(h.lower()[0], -0.3, epsilon = 1e-15);
        assert_relative_eq!(h.upper()[1], 0.1);
        let p = Zonotope::point(dvector![2.0, -3.0]).unwrap().interval_hull();
        assert_eq!(p.lower(), p.upper());
    }

    #[test]
    fn reduction_keeps_small_zonotopes() {
        let z = Zonotope::new(dvector![0.0, 0.0], dmatrix![0.1, 0.2, 0.3; 0.0, 0.1, -0.1]).unwrap();
        assert_eq!(z.reduce_generators(3).unwrap(), z);
        let d = Zonotope::new(dvector![0.0, 0.0], diag2(0.5, 0.25)).unwrap();
        assert_eq!(d.reduce_generators(2).unwrap(), d);
        assert!(z.reduce_generators(1).is_err());
    }

    #[test]
    fn reduction_bounds_generator_count() {
        let g = DMatrix::from_fn(3, 20, |i, j| ((i * 7 + j * 3) % 11) as f64 / 10.0 - 0.5);
        let z = Zonotope::new(dvector![0.0, 1.0, 2.0], g).unwrap();
        let r = z.reduce_generators(6).unwrap();
        assert!(r.num_generators() <= 6);
        for d in TestDirections::standard(3).iter() {
            assert!(r.support(d).unwrap() >= z.support(d).unwrap() - 1e-12);
        }
    }

    #[test]
    fn enclosure_of_identical_members_is_exact() {
        let z = Zonotope::new(dvector![0.5, 0.0], dmatrix![0.1, 0.2; 0.3, 0.1]).unwrap();
        let e = Zonotope::enclose_union(&[z.clone(), z.clone(), z.clone()]).unwrap();
        assert_eq!(e, z);
    }

    #[test]
    fn enclosure_contains_members() {
        let a = Zonotope::new(dvector![0.5, 0.0], dmatrix![0.1, 0.2; 0.3, 0.1]).unwrap();
        let b = Zonotope::new(dvector![-0.5, 0.2], dmatrix![0.4, 0.0; 0.0, 0.1]).unwrap();
        let e = Zonotope::enclose_union(&[a.clone(), b.clone()]).unwrap();
        let dirs = TestDirections::standard(2);
        assert!(a.support_contained_in(&e, &dirs, 1e-12));
        assert!(b.support_contained_in(&e, &dirs, 1e-12));
    }

    #[test]
    fn sign_points_match_support() {
        let z = Zonotope::new(dvector![0.2, -0.1], dmatrix![0.1, 0.2, -0.3; 0.3, 0.1, 0.05]).unwrap();
        let pts = z.sign_points().unwrap();
        assert_eq!(pts.len(), 8);
        for d in TestDirections::standard(2).iter() {
            let brute = pts.iter().map(|p| p.dot(d)).fold(f64::NEG_INFINITY, f64::max);
            assert_relative_eq!(brute, z.support(d).unwrap(), epsilon = 1e-14);
        }
    }

    #[test]
    fn rejects_non_finite() {
        assert!(Zonotope::new(dvector![f64::NAN], DMatrix::zeros(1, 0)).is_err());
        assert!(Zonotope::new(dvector![0.0], DMatrix::zeros(2, 1)).is_err());
    }
}
