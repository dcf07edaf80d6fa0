//! Boxes, halfspaces, polytopes, and a small dense LP solver.
//!
//! Every check the verifier performs on a single cube reduces to a linear
//! program in the state variables only, with at most a few hundred rows. The
//! solver is a two-phase tableau simplex using the smallest-index (Bland) rule
//! for both entering and leaving variables, which guarantees termination and
//! makes results bit-reproducible for a fixed constraint order.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Feasibility and optimality tolerance.
pub const LP_TOL: f64 = 1e-7;
/// Maximum number of simplex pivots across both phases.
pub const MAX_PIVOTS: usize = 10_000;

const PIVOT_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("simplex exceeded {0} pivots")]
    IterationLimit(usize),
    #[error("polytope is empty")]
    Infeasible,
    #[error("polytope is unbounded")]
    Unbounded,
}

/// `coeffs . x + offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineForm {
    pub coeffs: Vec<f64>,
    pub offset: f64,
}

impl AffineForm {
    pub fn new(coeffs: Vec<f64>, offset: f64) -> Self {
        Self { coeffs, offset }
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            coeffs: vec![0.0; dim],
            offset: 0.0,
        }
    }

    pub fn unit(dim: usize, k: usize) -> Self {
        let mut f = Self::zero(dim);
        f.coeffs[k] = 1.0;
        f
    }

    /// `sum_k weights[k] * forms[k] + bias`.
    pub fn combine(weights: &[f64], forms: &[AffineForm], bias: f64, dim: usize) -> Self {
        let mut out = Self::new(vec![0.0; dim], bias);
        for (w, f) in weights.iter().zip(forms) {
            if *w == 0.0 {
                continue;
            }
            for (o, c) in out.coeffs.iter_mut().zip(&f.coeffs) {
                *o += w * c;
            }
            out.offset += w * f.offset;
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.offset
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }
}

/// Axis-aligned box `lower <= x <= upper`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoxError {
    #[error("bounds have different lengths ({0} vs {1})")]
    Length(usize, usize),
    #[error("lower bound exceeds upper bound in coordinate {0}")]
    Inverted(usize),
    #[error("non-finite bound in coordinate {0}")]
    NonFinite(usize),
}

impl IntervalBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, BoxError> {
        if lower.len() != upper.len() {
            return Err(BoxError::Length(lower.len(), upper.len()));
        }
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !l.is_finite() || !u.is_finite() {
                return Err(BoxError::NonFinite(i));
            }
            if l > u {
                return Err(BoxError::Inverted(i));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn validate(&self) -> Result<(), BoxError> {
        Self::new(self.lower.clone(), self.upper.clone()).map(|_| ())
    }

    pub fn point(x: &[f64]) -> Self {
        Self {
            lower: x.to_vec(),
            upper: x.to_vec(),
        }
    }

    pub fn symmetric(dim: usize, radius: f64) -> Self {
        Self {
            lower: vec![-radius; dim],
            upper: vec![radius; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *v >= l - tol && *v <= u + tol)
    }

    pub fn contains_box(&self, other: &IntervalBox) -> bool {
        self.lower.iter().zip(&other.lower).all(|(a, b)| a <= b)
            && self.upper.iter().zip(&other.upper).all(|(a, b)| a >= b)
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| 0.5 * (l + u))
            .collect()
    }

    /// Componentwise clamp of `x` into the box. NaN entries map to the center.
    pub fn clamp(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (l, u))| {
                if v.is_nan() {
                    0.5 * (l + u)
                } else {
                    v.clamp(*l, *u)
                }
            })
            .collect()
    }

    /// Intersection with `other`; coordinates with an empty overlap collapse
    /// onto the nearer face of `other`.
    pub fn clip_to(&self, other: &IntervalBox) -> IntervalBox {
        let mut lower = Vec::with_capacity(self.dim());
        let mut upper = Vec::with_capacity(self.dim());
        for i in 0..self.dim() {
            let mut l = self.lower[i].max(other.lower[i]);
            let mut u = self.upper[i].min(other.upper[i]);
            if l > u {
                if self.lower[i] > other.upper[i] {
                    l = other.upper[i];
                    u = other.upper[i];
                } else {
                    l = other.lower[i];
                    u = other.lower[i];
                }
            }
            lower.push(l);
            upper.push(u);
        }
        IntervalBox { lower, upper }
    }

    pub fn hull(&self, other: &IntervalBox) -> IntervalBox {
        IntervalBox {
            lower: self.lower.iter().zip(&other.lower).map(|(a, b)| a.min(*b)).collect(),
            upper: self.upper.iter().zip(&other.upper).map(|(a, b)| a.max(*b)).collect(),
        }
    }

    /// Minimum of `w . u` over the box, attained coordinatewise.
    pub fn min_dot(&self, w: &[f64]) -> f64 {
        w.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(wk, (l, u))| (wk * l).min(wk * u))
            .sum()
    }

    pub fn max_dot(&self, w: &[f64]) -> f64 {
        w.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(wk, (l, u))| (wk * l).max(wk * u))
            .sum()
    }

    pub fn to_polytope(&self) -> Polytope {
        let mut p = Polytope::new(self.dim());
        self.append_to(&mut p);
        p
    }

    pub fn append_to(&self, poly: &mut Polytope) {
        let n = self.dim();
        for i in 0..n {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            poly.push(Halfspace::ge(e.clone(), -self.lower[i]));
            poly.push(Halfspace::le(e, -self.upper[i]));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
}

/// `normal . x + offset (sense) 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
    pub sense: Sense,
}

impl Halfspace {
    pub fn new(normal: Vec<f64>, offset: f64, sense: Sense) -> Self {
        Self {
            normal,
            offset,
            sense,
        }
    }

    pub fn ge(normal: Vec<f64>, offset: f64) -> Self {
        Self::new(normal, offset, Sense::Ge)
    }

    pub fn le(normal: Vec<f64>, offset: f64) -> Self {
        Self::new(normal, offset, Sense::Le)
    }

    pub fn eq(normal: Vec<f64>, offset: f64) -> Self {
        Self::new(normal, offset, Sense::Eq)
    }

    pub fn from_form(form: &AffineForm, sense: Sense) -> Self {
        Self::new(form.coeffs.clone(), form.offset, sense)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.normal.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + self.offset
    }

    pub fn satisfied(&self, x: &[f64], tol: f64) -> bool {
        let v = self.value(x);
        match self.sense {
            Sense::Ge => v >= -tol,
            Sense::Le => v <= tol,
            Sense::Eq => v.abs() <= tol,
        }
    }

    fn is_trivial(&self) -> bool {
        self.normal.iter().all(|&a| a == 0.0)
    }

    fn norm(&self) -> f64 {
        self.normal.iter().map(|a| a * a).sum::<f64>().sqrt()
    }
}

/// Intersection of halfspaces in a fixed dimension.
///
/// Constraints with an all-zero normal are decided when pushed: satisfied ones
/// are dropped, violated ones mark the polytope as trivially empty.
#[derive(Debug, Clone, PartialEq)]
pub struct Polytope {
    dim: usize,
    constraints: Vec<Halfspace>,
    trivially_empty: bool,
}

impl Polytope {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            constraints: Vec::new(),
            trivially_empty: false,
        }
    }

    pub fn from_halfspaces(dim: usize, hs: impl IntoIterator<Item = Halfspace>) -> Self {
        let mut p = Self::new(dim);
        for h in hs {
            p.push(h);
        }
        p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn constraints(&self) -> &[Halfspace] {
        &self.constraints
    }

    pub fn is_trivially_empty(&self) -> bool {
        self.trivially_empty
    }

    pub fn push(&mut self, h: Halfspace) {
        assert_eq!(h.normal.len(), self.dim, "halfspace dimension mismatch");
        if h.is_trivial() {
            if !h.satisfied(&vec![0.0; self.dim], 0.0) {
                self.trivially_empty = true;
            }
            return;
        }
        self.constraints.push(h);
    }

    pub fn intersect(&self, other: &Polytope) -> Polytope {
        assert_eq!(self.dim, other.dim, "polytope dimension mismatch");
        let mut p = self.clone();
        p.trivially_empty |= other.trivially_empty;
        p.constraints.extend(other.constraints.iter().cloned());
        p
    }

    pub fn with(&self, h: Halfspace) -> Polytope {
        let mut p = self.clone();
        p.push(h);
        p
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        !self.trivially_empty && self.constraints.iter().all(|h| h.satisfied(x, tol))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpResult {
    Optimal { value: f64, point: Vec<f64> },
    Infeasible,
    Unbounded,
}

impl LpResult {
    pub fn is_feasible(&self) -> bool {
        !matches!(self, LpResult::Infeasible)
    }
}

/// Minimizes `objective . x + constant` over `poly`.
pub fn lp_minimize(poly: &Polytope, objective: &[f64], constant: f64) -> Result<LpResult, LpError> {
    if objective.len() != poly.dim {
        return Err(LpError::Dimension {
            expected: poly.dim,
            got: objective.len(),
        });
    }
    if poly.trivially_empty {
        return Ok(LpResult::Infeasible);
    }
    let mut tab = Tableau::build(poly);
    if !tab.phase_one()? {
        return Ok(LpResult::Infeasible);
    }
    if !tab.phase_two(objective)? {
        return Ok(LpResult::Unbounded);
    }
    let point = tab.solution(poly.dim);
    let value = objective.iter().zip(&point).map(|(c, x)| c * x).sum::<f64>() + constant;
    Ok(LpResult::Optimal { value, point })
}

/// True iff the polytope has a point (within [`LP_TOL`]).
pub fn polytope_nonempty(poly: &Polytope) -> Result<bool, LpError> {
    Ok(lp_minimize(poly, &vec![0.0; poly.dim], 0.0)?.is_feasible())
}

/// A feasible point, if any.
pub fn feasible_point(poly: &Polytope) -> Result<Option<Vec<f64>>, LpError> {
    match lp_minimize(poly, &vec![0.0; poly.dim], 0.0)? {
        LpResult::Optimal { point, .. } => Ok(Some(point)),
        _ => Ok(None),
    }
}

/// Center of a largest ball inscribed in `poly`.
///
/// Solved as an LP in `(x, r)`: each inequality is tightened by `r * |a|`,
/// equalities are kept as they are and the ball lives inside their affine hull.
pub fn chebyshev_center(poly: &Polytope) -> Result<Vec<f64>, LpError> {
    let n = poly.dim;
    if poly.trivially_empty {
        return Err(LpError::Infeasible);
    }
    let mut lifted = Polytope::new(n + 1);
    for h in &poly.constraints {
        let norm = h.norm();
        let mut normal = h.normal.clone();
        match h.sense {
            Sense::Ge => {
                normal.push(-norm);
                lifted.push(Halfspace::ge(normal, h.offset));
            }
            Sense::Le => {
                normal.push(norm);
                lifted.push(Halfspace::le(normal, h.offset));
            }
            Sense::Eq => {
                normal.push(0.0);
                lifted.push(Halfspace::eq(normal, h.offset));
            }
        }
    }
    let mut r = vec![0.0; n + 1];
    r[n] = 1.0;
    lifted.push(Halfspace::ge(r.clone(), 0.0));
    let mut objective = vec![0.0; n + 1];
    objective[n] = -1.0;
    match lp_minimize(&lifted, &objective, 0.0)? {
        LpResult::Optimal { mut point, .. } => {
            point.truncate(n);
            Ok(point)
        }
        LpResult::Infeasible => Err(LpError::Infeasible),
        LpResult::Unbounded => Err(LpError::Unbounded),
    }
}

/// Dense simplex tableau over `x = p - q` with `p, q >= 0`.
///
/// Column layout: `p` (n), `q` (n), slack/surplus (one per inequality row),
/// artificials (one per `>=`/`=` row after sign normalization).
struct Tableau {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    obj: Vec<f64>,
    obj_rhs: f64,
    basis: Vec<usize>,
    n_struct: usize,
    first_artificial: usize,
    n_cols: usize,
    pivots: usize,
}

impl Tableau {
    fn build(poly: &Polytope) -> Self {
        let n = poly.dim;
        let n_struct = 2 * n;
        let m = poly.constraints.len();

        // Normalize rows, make rhs nonnegative, record the effective sense.
        let mut normalized = Vec::with_capacity(m);
        let mut n_slack = 0;
        let mut n_art = 0;
        for h in &poly.constraints {
            let scale = 1.0 / h.norm();
            let mut a: Vec<f64> = h.normal.iter().map(|v| v * scale).collect();
            let mut b = -h.offset * scale;
            let mut sense = h.sense;
            if b < 0.0 {
                a.iter_mut().for_each(|v| *v = -*v);
                b = -b;
                sense = match sense {
                    Sense::Ge => Sense::Le,
                    Sense::Le => Sense::Ge,
                    Sense::Eq => Sense::Eq,
                };
            }
            match sense {
                Sense::Le => n_slack += 1,
                Sense::Ge => {
                    n_slack += 1;
                    n_art += 1
                }
                Sense::Eq => n_art += 1,
            }
            normalized.push((a, b, sense));
        }

        let first_artificial = n_struct + n_slack;
        let n_cols = first_artificial + n_art;
        let mut rows = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut slack = n_struct;
        let mut art = first_artificial;
        for (a, b, sense) in normalized {
            let mut row = vec![0.0; n_cols];
            for (k, v) in a.iter().enumerate() {
                row[k] = *v;
                row[n + k] = -*v;
            }
            match sense {
                Sense::Le => {
                    row[slack] = 1.0;
                    basis.push(slack);
                    slack += 1;
                }
                Sense::Ge => {
                    row[slack] = -1.0;
                    slack += 1;
                    row[art] = 1.0;
                    basis.push(art);
                    art += 1;
                }
                Sense::Eq => {
                    row[art] = 1.0;
                    basis.push(art);
                    art += 1;
                }
            }
            rows.push(row);
            rhs.push(b);
        }
        Self {
            rows,
            rhs,
            obj: vec![0.0; n_cols],
            obj_rhs: 0.0,
            basis,
            n_struct,
            first_artificial,
            n_cols,
            pivots: 0,
        }
    }

    fn pivot(&mut self, r: usize, c: usize) -> Result<(), LpError> {
        self.pivots += 1;
        if self.pivots > MAX_PIVOTS {
            return Err(LpError::IterationLimit(MAX_PIVOTS));
        }
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        self.rhs[r] /= p;
        self.rows[r][c] = 1.0;
        let pivot_row = std::mem::take(&mut self.rows[r]);
        let pivot_rhs = self.rhs[r];
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
                self.rhs[i] -= f * pivot_rhs;
                if self.rhs[i] < 0.0 && self.rhs[i] > -PIVOT_TOL {
                    self.rhs[i] = 0.0;
                }
            }
        }
        let f = self.obj[c];
        if f != 0.0 {
            for (v, pv) in self.obj.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            self.obj[c] = 0.0;
            self.obj_rhs -= f * pivot_rhs;
        }
        self.rows[r] = pivot_row;
        self.basis[r] = c;
        Ok(())
    }

    /// Runs simplex iterations with Bland's rule over columns `< col_limit`.
    /// Returns false if the objective is unbounded below.
    fn iterate(&mut self, col_limit: usize) -> Result<bool, LpError> {
        loop {
            let Some(c) = (0..col_limit).find(|&j| self.obj[j] < -PIVOT_TOL) else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                let a = row[c];
                if a > PIVOT_TOL {
                    let ratio = self.rhs[i] / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - 1e-12
                                || (ratio <= lr + 1e-12 && self.basis[i] < self.basis[li])
                            {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            match leave {
                None => return Ok(false),
                Some((r, _)) => self.pivot(r, c)?,
            }
        }
    }

    /// Minimizes the sum of artificials. Returns false if infeasible.
    fn phase_one(&mut self) -> Result<bool, LpError> {
        if self.first_artificial == self.n_cols {
            return Ok(true);
        }
        self.obj = vec![0.0; self.n_cols];
        self.obj_rhs = 0.0;
        for j in self.first_artificial..self.n_cols {
            self.obj[j] = 1.0;
        }
        for i in 0..self.rows.len() {
            if self.basis[i] >= self.first_artificial {
                for j in 0..self.n_cols {
                    self.obj[j] -= self.rows[i][j];
                }
                self.obj_rhs -= self.rhs[i];
            }
        }
        self.iterate(self.n_cols)?;
        // obj_rhs holds minus the objective value
        if -self.obj_rhs > LP_TOL {
            return Ok(false);
        }
        // Drive remaining artificials out of the basis, dropping redundant rows.
        let mut i = 0;
        while i < self.rows.len() {
            if self.basis[i] >= self.first_artificial {
                let col = (0..self.first_artificial).find(|&j| self.rows[i][j].abs() > PIVOT_TOL);
                match col {
                    Some(c) => {
                        self.pivot(i, c)?;
                        i += 1;
                    }
                    None => {
                        self.rows.remove(i);
                        self.rhs.remove(i);
                        self.basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
        Ok(true)
    }

    fn phase_two(&mut self, objective: &[f64]) -> Result<bool, LpError> {
        let n = self.n_struct / 2;
        self.obj = vec![0.0; self.n_cols];
        self.obj_rhs = 0.0;
        for (k, c) in objective.iter().enumerate() {
            self.obj[k] = *c;
            self.obj[n + k] = -*c;
        }
        for i in 0..self.rows.len() {
            let cb = self.obj[self.basis[i]];
            if cb != 0.0 {
                for j in 0..self.n_cols {
                    self.obj[j] -= cb * self.rows[i][j];
                }
                self.obj_rhs -= cb * self.rhs[i];
            }
        }
        self.iterate(self.first_artificial)
    }

    fn solution(&self, n: usize) -> Vec<f64> {
        let mut x = vec![0.0; n];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < n {
                x[b] += self.rhs[i];
            } else if b < 2 * n {
                x[b - n] -= self.rhs[i];
            }
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn interval(lo: f64, hi: f64) -> Polytope {
        Polytope::from_halfspaces(1, [Halfspace::ge(vec![1.0], -lo), Halfspace::le(vec![1.0], -hi)])
    }

    #[test]
    fn unit_interval_minimum() {
        match lp_minimize(&interval(0.0, 1.0), &[1.0], 0.0).unwrap() {
            LpResult::Optimal { value, point } => {
                assert!(value.abs() < 1e-12);
                assert!(point[0].abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn crossed_interval_is_infeasible() {
        let p = interval(1.0, 0.0);
        assert_eq!(lp_minimize(&p, &[1.0], 0.0).unwrap(), LpResult::Infeasible);
        assert!(!polytope_nonempty(&p).unwrap());
    }

    #[test]
    fn half_line_is_unbounded() {
        let p = Polytope::from_halfspaces(1, [Halfspace::le(vec![1.0], -1.0)]);
        assert_eq!(lp_minimize(&p, &[1.0], 0.0).unwrap(), LpResult::Unbounded);
        // maximizing over x <= 1 is fine
        match lp_minimize(&p, &[-1.0], 0.0).unwrap() {
            LpResult::Optimal { value, .. } => assert!((value + 1.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            lp_minimize(&interval(0.0, 1.0), &[1.0, 2.0], 0.0),
            Err(LpError::Dimension { .. })
        ));
    }

    #[test]
    fn equality_rows_are_respected() {
        // x + y = 1, 0 <= x, y <= 1, minimize x - y
        let mut p = IntervalBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap().to_polytope();
        p.push(Halfspace::eq(vec![1.0, 1.0], -1.0));
        match lp_minimize(&p, &[1.0, -1.0], 0.5).unwrap() {
            LpResult::Optimal { value, point } => {
                assert!((value + 0.5).abs() < 1e-12);
                assert!((point[0]).abs() < 1e-12 && (point[1] - 1.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn redundant_equalities() {
        let mut p = Polytope::new(2);
        p.push(Halfspace::eq(vec![1.0, 1.0], -1.0));
        p.push(Halfspace::eq(vec![2.0, 2.0], -2.0));
        p.push(Halfspace::ge(vec![1.0, 0.0], 0.0));
        p.push(Halfspace::ge(vec![0.0, 1.0], 0.0));
        match lp_minimize(&p, &[1.0, 0.0], 0.0).unwrap() {
            LpResult::Optimal { value, point } => {
                assert!(value.abs() < 1e-12);
                assert!((point[1] - 1.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn trivial_constraints_resolve_on_push() {
        let mut p = interval(0.0, 1.0);
        p.push(Halfspace::ge(vec![0.0], 1.0));
        assert_eq!(p.constraints().len(), 2);
        assert!(polytope_nonempty(&p).unwrap());
        p.push(Halfspace::ge(vec![0.0], -1.0));
        assert!(p.is_trivially_empty());
        assert!(!polytope_nonempty(&p).unwrap());
    }

    #[test]
    fn chebyshev_of_square_and_interval() {
        let sq = IntervalBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap().to_polytope();
        let c = chebyshev_center(&sq).unwrap();
        assert!((c[0] - 0.5).abs() < 1e-12 && (c[1] - 0.5).abs() < 1e-12);
        let c = chebyshev_center(&interval(2.0, 4.0)).unwrap();
        assert!((c[0] - 3.0).abs() < 1e-12);
        assert_eq!(chebyshev_center(&interval(1.0, 0.0)), Err(LpError::Infeasible));
    }

    #[test]
    fn chebyshev_of_degenerate_box() {
        let b = IntervalBox::point(&[0.3, -0.2]).to_polytope();
        let c = chebyshev_center(&b).unwrap();
        assert!((c[0] - 0.3).abs() < 1e-12 && (c[1] + 0.2).abs() < 1e-12);
    }

    #[test]
    fn box_helpers() {
        let b = IntervalBox::new(vec![-1.0, 0.0], vec![1.0, 2.0]).unwrap();
        assert_eq!(b.min_dot(&[1.0, -1.0]), -3.0);
        assert_eq!(b.max_dot(&[1.0, -1.0]), 1.0);
        assert_eq!(b.clamp(&[f64::INFINITY, f64::NAN]), vec![1.0, 1.0]);
        assert!(IntervalBox::new(vec![1.0], vec![0.0]).is_err());
        let far = IntervalBox::new(vec![5.0, 0.5], vec![6.0, 0.7]).unwrap();
        let clipped = far.clip_to(&b);
        assert_eq!(clipped.lower, vec![1.0, 0.5]);
        assert_eq!(clipped.upper, vec![1.0, 0.7]);
    }
}
