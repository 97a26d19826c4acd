//! Dense strictly convex QP solver (Goldfarb–Idnani dual active set).
//!
//! Solves
//!
//! ```text
//! min ½ xᵀH x + gᵀx   s.t.  A_eq x = b_eq,  A_in x ≤ b_in,  l ≤ x ≤ u
//! ```
//!
//! with `H ≻ 0`. The dual method starts from the unconstrained minimizer and
//! adds violated constraints one at a time, so it detects infeasibility
//! exactly and accepts a guessed active set as a warm start.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct DenseQp {
    pub h: DMatrix<f64>,
    pub g: DVector<f64>,
    pub a_eq: DMatrix<f64>,
    pub b_eq: DVector<f64>,
    pub a_in: DMatrix<f64>,
    pub b_in: DVector<f64>,
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
}

impl DenseQp {
    pub fn new(h: DMatrix<f64>, g: DVector<f64>) -> Result<Self> {
        let n = g.len();
        if h.nrows() != n || h.ncols() != n {
            return Err(Error::dim("QP Hessian", n, h.nrows().max(h.ncols())));
        }
        Ok(DenseQp {
            h,
            g,
            a_eq: DMatrix::zeros(0, n),
            b_eq: DVector::zeros(0),
            a_in: DMatrix::zeros(0, n),
            b_in: DVector::zeros(0),
            lower: DVector::from_element(n, f64::NEG_INFINITY),
            upper: DVector::from_element(n, f64::INFINITY),
        })
    }

    pub fn with_equalities(mut self, a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        check_rows("QP equalities", &a, &b, self.num_vars())?;
        self.a_eq = a;
        self.b_eq = b;
        Ok(self)
    }

    pub fn with_inequalities(mut self, a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        check_rows("QP inequalities", &a, &b, self.num_vars())?;
        self.a_in = a;
        self.b_in = b;
        Ok(self)
    }

    pub fn with_bounds(mut self, lower: DVector<f64>, upper: DVector<f64>) -> Result<Self> {
        let n = self.num_vars();
        if lower.len() != n || upper.len() != n {
            return Err(Error::dim("QP bounds", n, lower.len().min(upper.len())));
        }
        self.lower = lower;
        self.upper = upper;
        Ok(self)
    }

    pub fn num_vars(&self) -> usize {
        self.g.len()
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.h * x)) + self.g.dot(x)
    }

    /// Largest constraint violation at `x` (0 when feasible).
    pub fn max_violation(&self, x: &DVector<f64>) -> f64 {
        let mut v: f64 = 0.0;
        if self.a_eq.nrows() > 0 {
            v = v.max((&self.a_eq * x - &self.b_eq).amax());
        }
        if self.a_in.nrows() > 0 {
            let r = &self.a_in * x - &self.b_in;
            v = r.iter().fold(v, |acc, &e| acc.max(e));
        }
        for i in 0..self.num_vars() {
            v = v.max(self.lower[i] - x[i]).max(x[i] - self.upper[i]);
        }
        v
    }

    /// Inequalities in the unified numbering used by [`QpSolution::active_set`]:
    /// general rows, then lower bounds, then upper bounds. Infinite bounds
    /// are skipped. Each entry is `(index, a, b)` meaning `aᵀx ≥ b`.
    fn ge_constraints(&self) -> Vec<(usize, DVector<f64>, f64)> {
        let n = self.num_vars();
        let m = self.a_in.nrows();
        let mut out = Vec::with_capacity(m + 2 * n);
        for k in 0..m {
            out.push((k, -self.a_in.row(k).transpose(), -self.b_in[k]));
        }
        for j in 0..n {
            if self.lower[j].is_finite() {
                let mut e = DVector::zeros(n);
                e[j] = 1.0;
                out.push((m + j, e, self.lower[j]));
            }
        }
        for j in 0..n {
            if self.upper[j].is_finite() {
                let mut e = DVector::zeros(n);
                e[j] = -1.0;
                out.push((m + n + j, e, -self.upper[j]));
            }
        }
        out
    }
}

fn check_rows(what: &'static str, a: &DMatrix<f64>, b: &DVector<f64>, n: usize) -> Result<()> {
    if a.ncols() != n {
        return Err(Error::dim(what, n, a.ncols()));
    }
    if a.nrows() != b.len() {
        return Err(Error::dim(what, a.nrows(), b.len()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
pub struct QpSettings {
    /// Primal feasibility tolerance on normalized constraint rows.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for QpSettings {
    fn default() -> Self {
        QpSettings {
            tol: 1e-9,
            max_iter: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QpStatus {
    Optimal,
    Infeasible,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub x: DVector<f64>,
    pub objective: f64,
    pub status: QpStatus,
    pub iterations: usize,
    /// Active inequalities in the unified numbering (see [`DenseQp`]).
    pub active_set: Vec<usize>,
    pub warm_started: bool,
}

#[derive(Clone, Copy, PartialEq)]
enum Tag {
    Eq,
    Ge(usize),
}

struct State {
    n: usize,
    x: DVector<f64>,
    j: DMatrix<f64>,
    r: DMatrix<f64>,
    r_norm: f64,
    tags: Vec<Tag>,
    u: Vec<f64>,
}

enum Added {
    Ok,
    Redundant,
    Dependent,
}

impl State {
    fn iq(&self) -> usize {
        self.tags.len()
    }

    /// `d = Jᵀa`, primal direction `z` and dual direction `r`.
    fn directions(&self, a: &DVector<f64>) -> (DVector<f64>, DVector<f64>, Vec<f64>) {
        let n = self.n;
        let iq = self.iq();
        let d = self.j.tr_mul(a);
        let mut z = DVector::zeros(n);
        for k in iq..n {
            z.axpy(d[k], &self.j.column(k), 1.0);
        }
        let mut r = vec![0.0; iq];
        for i in (0..iq).rev() {
            let mut s = d[i];
            for k in i + 1..iq {
                s -= self.r[(i, k)] * r[k];
            }
            r[i] = s / self.r[(i, i)];
        }
        (d, z, r)
    }

    /// Appends a constraint whose `d = Jᵀa` is given; Givens rotations keep
    /// `R` upper triangular. Returns false when `a` depends on the active set.
    fn push(&mut self, mut d: DVector<f64>, tag: Tag, mult: f64) -> bool {
        let n = self.n;
        let iq = self.iq();
        for jj in (iq + 1..n).rev() {
            let (mut cc, mut ss) = (d[jj - 1], d[jj]);
            let h = cc.hypot(ss);
            if h == 0.0 {
                continue;
            }
            d[jj] = 0.0;
            ss /= h;
            cc /= h;
            if cc < 0.0 {
                cc = -cc;
                ss = -ss;
                d[jj - 1] = -h;
            } else {
                d[jj - 1] = h;
            }
            let xny = ss / (1.0 + cc);
            for k in 0..n {
                let t1 = self.j[(k, jj - 1)];
                let t2 = self.j[(k, jj)];
                let nv = t1 * cc + t2 * ss;
                self.j[(k, jj - 1)] = nv;
                self.j[(k, jj)] = xny * (t1 + nv) - t2;
            }
        }
        if d[iq].abs() <= f64::EPSILON * self.r_norm {
            return false;
        }
        for i in 0..=iq {
            self.r[(i, iq)] = d[i];
        }
        self.r_norm = self.r_norm.max(d[iq].abs());
        self.tags.push(tag);
        self.u.push(mult);
        true
    }

    fn remove(&mut self, pos: usize) {
        let n = self.n;
        let iq = self.iq();
        self.tags.remove(pos);
        self.u.remove(pos);
        for col in pos..iq - 1 {
            for i in 0..n {
                self.r[(i, col)] = self.r[(i, col + 1)];
            }
        }
        for i in 0..n {
            self.r[(i, iq - 1)] = 0.0;
        }
        let iq = iq - 1;
        for jj in pos..iq {
            let (mut cc, mut ss) = (self.r[(jj, jj)], self.r[(jj + 1, jj)]);
            let h = cc.hypot(ss);
            if h == 0.0 {
                continue;
            }
            cc /= h;
            ss /= h;
            self.r[(jj + 1, jj)] = 0.0;
            if cc < 0.0 {
                self.r[(jj, jj)] = -h;
                cc = -cc;
                ss = -ss;
            } else {
                self.r[(jj, jj)] = h;
            }
            let xny = ss / (1.0 + cc);
            for k in jj + 1..iq {
                let t1 = self.r[(jj, k)];
                let t2 = self.r[(jj + 1, k)];
                let nv = t1 * cc + t2 * ss;
                self.r[(jj, k)] = nv;
                self.r[(jj + 1, k)] = xny * (t1 + nv) - t2;
            }
            for k in 0..n {
                let t1 = self.j[(k, jj)];
                let t2 = self.j[(k, jj + 1)];
                let nv = t1 * cc + t2 * ss;
                self.j[(k, jj)] = nv;
                self.j[(k, jj + 1)] = xny * (nv + t1) - t2;
            }
        }
    }

    /// Full step onto `aᵀx = b` treating it as an equality.
    fn add_as_equality(&mut self, a: &DVector<f64>, b: f64, tag: Tag, tol: f64) -> Added {
        let (d, z, r) = self.directions(a);
        let zn = z.dot(a);
        let resid = b - a.dot(&self.x);
        if z.dot(&z) <= f64::EPSILON * a.dot(a).max(f64::MIN_POSITIVE) {
            return if resid.abs() <= tol * a.norm().max(1.0) {
                Added::Redundant
            } else {
                Added::Dependent
            };
        }
        let t = resid / zn;
        self.x.axpy(t, &z, 1.0);
        for (ui, ri) in self.u.iter_mut().zip(&r) {
            *ui -= t * ri;
        }
        if self.push(d, tag, t) {
            Added::Ok
        } else {
            Added::Dependent
        }
    }
}

pub fn solve(qp: &DenseQp, warm: Option<&[usize]>, settings: &QpSettings) -> Result<QpSolution> {
    let n = qp.num_vars();
    let chol = Cholesky::new(qp.h.clone())
        .ok_or_else(|| Error::InvalidArgument("QP Hessian is not positive definite".into()))?;
    let linv = chol
        .l()
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or_else(|| Error::InvalidArgument("QP Hessian factor is singular".into()))?;
    let cons = qp.ge_constraints();

    if let Some(guess) = warm.filter(|g| !g.is_empty()) {
        if let Some(sol) = run(qp, &linv, &cons, Some(guess), settings) {
            return Ok(sol);
        }
    }
    Ok(run(qp, &linv, &cons, None, settings).expect("cold start always yields a result"))
}

fn run(
    qp: &DenseQp,
    linv: &DMatrix<f64>,
    cons: &[(usize, DVector<f64>, f64)],
    warm: Option<&[usize]>,
    settings: &QpSettings,
) -> Option<QpSolution> {
    let n = qp.num_vars();
    let j = linv.transpose();
    let x = -(&j * j.tr_mul(&qp.g));
    let mut st = State {
        n,
        x,
        j,
        r: DMatrix::zeros(n, n),
        r_norm: 1.0,
        tags: Vec::with_capacity(n),
        u: Vec::with_capacity(n),
    };
    let finish = |st: &State, status: QpStatus, iterations: usize| QpSolution {
        objective: qp.objective(&st.x),
        x: st.x.clone(),
        status,
        iterations,
        active_set: st
            .tags
            .iter()
            .filter_map(|t| match t {
                Tag::Ge(k) => Some(cons[*k].0),
                Tag::Eq => None,
            })
            .collect(),
        warm_started: warm.is_some(),
    };

    for i in 0..qp.a_eq.nrows() {
        let a = qp.a_eq.row(i).transpose();
        match st.add_as_equality(&a, qp.b_eq[i], Tag::Eq, settings.tol) {
            Added::Ok | Added::Redundant => {}
            Added::Dependent => {
                return if warm.is_some() {
                    None
                } else {
                    Some(finish(&st, QpStatus::Infeasible, 0))
                }
            }
        }
    }

    let mut active = vec![false; cons.len()];
    if let Some(guess) = warm {
        for &g in guess {
            let k = cons.iter().position(|c| c.0 == g)?;
            if active[k] {
                continue;
            }
            match st.add_as_equality(&cons[k].1, cons[k].2, Tag::Ge(k), settings.tol) {
                Added::Ok => active[k] = true,
                _ => return None,
            }
        }
        if st.u.iter().zip(&st.tags).any(|(&u, t)| matches!(t, Tag::Ge(_)) && u < 0.0) {
            return None;
        }
    }

    let norms: Vec<f64> = cons.iter().map(|c| c.1.norm()).collect();
    let mut iterations = 0;
    loop {
        let mut worst: Option<(usize, f64)> = None;
        for (k, c) in cons.iter().enumerate() {
            if active[k] {
                continue;
            }
            let s = (c.1.dot(&st.x) - c.2) / norms[k];
            if s < -settings.tol && worst.map_or(true, |(_, w)| s < w) {
                worst = Some((k, s));
            }
        }
        let Some((ip, _)) = worst else {
            return Some(finish(&st, QpStatus::Optimal, iterations));
        };
        let (a, b) = (&cons[ip].1, cons[ip].2);
        let mut u_new = 0.0;
        loop {
            iterations += 1;
            if iterations > settings.max_iter {
                return Some(finish(&st, QpStatus::MaxIterations, iterations - 1));
            }
            let (d, z, r) = st.directions(a);
            let mut t1 = f64::INFINITY;
            let mut drop = None;
            for (pos, tag) in st.tags.iter().enumerate() {
                if matches!(tag, Tag::Ge(_)) && r[pos] > 0.0 {
                    let ratio = st.u[pos] / r[pos];
                    if ratio < t1 {
                        t1 = ratio;
                        drop = Some(pos);
                    }
                }
            }
            let t2 = if z.dot(&z) > f64::EPSILON {
                (b - a.dot(&st.x)) / z.dot(a)
            } else {
                f64::INFINITY
            };
            let t = t1.min(t2);
            if !t.is_finite() {
                return Some(finish(&st, QpStatus::Infeasible, iterations));
            }
            for (ui, ri) in st.u.iter_mut().zip(&r) {
                *ui -= t * ri;
            }
            u_new += t;
            if t2.is_finite() {
                st.x.axpy(t, &z, 1.0);
            }
            if t2 <= t1 {
                if !st.push(d, Tag::Ge(ip), u_new) {
                    return Some(finish(&st, QpStatus::Infeasible, iterations));
                }
                active[ip] = true;
                break;
            }
            let pos = drop.expect("partial step has a blocking constraint");
            if let Tag::Ge(k) = st.tags[pos] {
                active[k] = false;
            }
            st.remove(pos);
        }
    }
}
