//! Dense linear feasibility: Gauss-Jordan elimination of the equalities,
//! then a Phase-I simplex with Bland's rule over the remaining free
//! variables. Every feasible answer is re-checked by substitution.

use serde::{Deserialize, Serialize};
use std::ops::Range;
use thiserror::Error;

/// Default feasibility tolerance.
pub const LP_TOL: f64 = 1e-7;

const PIVOT_EPS: f64 = 1e-11;
const COST_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("malformed constraint {index}: {detail}")]
    Malformed { index: usize, detail: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

/// `Σ coeff·var  (≤ | ≥ | =)  rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub terms: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl LinearConstraint {
    pub fn new(terms: Vec<(usize, f64)>, relation: Relation, rhs: f64) -> Self {
        Self { terms, relation, rhs }
    }

    pub fn le(terms: Vec<(usize, f64)>, rhs: f64) -> Self {
        Self::new(terms, Relation::Le, rhs)
    }

    pub fn ge(terms: Vec<(usize, f64)>, rhs: f64) -> Self {
        Self::new(terms, Relation::Ge, rhs)
    }

    pub fn eq(terms: Vec<(usize, f64)>, rhs: f64) -> Self {
        Self::new(terms, Relation::Eq, rhs)
    }

    pub fn lhs(&self, z: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, a)| a * z[j]).sum()
    }

    /// Scaled violation at `z`; zero when satisfied.
    pub fn violation(&self, z: &[f64]) -> f64 {
        let lhs = self.lhs(z);
        let scale = self
            .terms
            .iter()
            .map(|&(j, a)| (a * z[j]).abs())
            .fold(self.rhs.abs().max(1.0), f64::max);
        let raw = match self.relation {
            Relation::Le => lhs - self.rhs,
            Relation::Ge => self.rhs - lhs,
            Relation::Eq => (lhs - self.rhs).abs(),
        };
        raw.max(0.0) / scale
    }
}

/// Real unknowns (all free) and closed affine constraints over them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraintSystem {
    pub names: Vec<String>,
    pub constraints: Vec<LinearConstraint>,
}

impl LinearConstraintSystem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>) -> usize {
        self.names.push(name.into());
        self.names.len() - 1
    }

    /// Adds `count` variables named `prefix[i]`.
    pub fn add_vars(&mut self, prefix: &str, count: usize) -> Range<usize> {
        let s = self.names.len();
        for i in 0..count {
            self.names.push(format!("{prefix}[{i}]"));
        }
        s..s + count
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    pub fn push(&mut self, c: LinearConstraint) {
        self.constraints.push(c);
    }

    pub fn validate(&self) -> Result<(), LpError> {
        validate(self.num_vars(), self.constraints.iter())
    }

    pub fn max_violation(&self, z: &[f64]) -> f64 {
        self.constraints.iter().map(|c| c.violation(z)).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Feasible(Vec<f64>),
    /// Phase-I optimum (sum of scaled violations) stays above the tolerance.
    Infeasible { residual: f64 },
}

impl LpOutcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, LpOutcome::Feasible(_))
    }
}

fn validate<'a>(n: usize, cons: impl Iterator<Item = &'a LinearConstraint>) -> Result<(), LpError> {
    for (i, c) in cons.enumerate() {
        if !c.rhs.is_finite() {
            return Err(LpError::Malformed { index: i, detail: "non-finite rhs".into() });
        }
        for &(j, a) in &c.terms {
            if j >= n {
                return Err(LpError::Malformed { index: i, detail: format!("unknown variable {j}") });
            }
            if !a.is_finite() {
                return Err(LpError::Malformed { index: i, detail: "non-finite coefficient".into() });
            }
        }
    }
    Ok(())
}

pub fn lp_feasible(sys: &LinearConstraintSystem, tol: f64) -> Result<LpOutcome, LpError> {
    feasible_parts(sys.num_vars(), &[&sys.constraints], tol)
}

/// Feasibility of the union of several constraint lists over `n` variables.
pub fn feasible_parts(n: usize, parts: &[&[LinearConstraint]], tol: f64) -> Result<LpOutcome, LpError> {
    validate(n, parts.iter().flat_map(|p| p.iter()))?;
    let all = || parts.iter().flat_map(|p| p.iter());

    // Equalities: dense rows [coeffs..., rhs], normalized.
    let mut eq: Vec<Vec<f64>> = Vec::new();
    let mut ineq: Vec<Vec<f64>> = Vec::new();
    for c in all() {
        let mut row = vec![0.0; n + 1];
        for &(j, a) in &c.terms {
            row[j] += a;
        }
        row[n] = c.rhs;
        match c.relation {
            Relation::Eq => eq.push(row),
            Relation::Le => ineq.push(row),
            Relation::Ge => {
                row.iter_mut().for_each(|v| *v = -*v);
                ineq.push(row);
            }
        }
    }

    let mut pivot_col: Vec<usize> = Vec::new();
    let mut pivot_rows: Vec<Vec<f64>> = Vec::new();
    let mut is_pivot = vec![false; n];
    for mut row in eq {
        // Eliminate existing pivots from this row.
        for (k, &c) in pivot_col.iter().enumerate() {
            let f = row[c];
            if f != 0.0 {
                let pr = &pivot_rows[k];
                for j in 0..=n {
                    row[j] -= f * pr[j];
                }
                row[c] = 0.0;
            }
        }
        let scale = row[..n].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let (best, mag) = (0..n)
            .filter(|&j| !is_pivot[j])
            .map(|j| (j, row[j].abs()))
            .fold((usize::MAX, 0.0), |b, x| if x.1 > b.1 { x } else { b });
        if best == usize::MAX || mag <= 1e-12 * scale.max(1e-300) || mag <= 1e-14 {
            if row[n].abs() > tol * scale.max(1.0) {
                return Ok(LpOutcome::Infeasible { residual: row[n].abs() });
            }
            continue;
        }
        let inv = 1.0 / row[best];
        row.iter_mut().for_each(|v| *v *= inv);
        row[best] = 1.0;
        for pr in pivot_rows.iter_mut() {
            let f = pr[best];
            if f != 0.0 {
                for j in 0..=n {
                    pr[j] -= f * row[j];
                }
                pr[best] = 0.0;
            }
        }
        is_pivot[best] = true;
        pivot_col.push(best);
        pivot_rows.push(row);
    }

    // Substitute pivots into the inequalities.
    for row in ineq.iter_mut() {
        for (k, &c) in pivot_col.iter().enumerate() {
            let f = row[c];
            if f != 0.0 {
                let pr = &pivot_rows[k];
                for j in 0..=n {
                    row[j] -= f * pr[j];
                }
                row[c] = 0.0;
            }
        }
    }

    let free: Vec<usize> = (0..n).filter(|&j| !is_pivot[j]).collect();
    let mut reduced: Vec<(Vec<f64>, f64)> = Vec::with_capacity(ineq.len());
    for row in &ineq {
        let a: Vec<f64> = free.iter().map(|&j| row[j]).collect();
        let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale <= 1e-14 {
            if row[n] < -tol {
                return Ok(LpOutcome::Infeasible { residual: -row[n] });
            }
            continue;
        }
        let inv = 1.0 / scale;
        reduced.push((a.into_iter().map(|v| v * inv).collect(), row[n] * inv));
    }

    let y = match phase_one(free.len(), &reduced, tol)? {
        Ok(y) => y,
        Err(residual) => return Ok(LpOutcome::Infeasible { residual }),
    };
    let mut z = vec![0.0; n];
    for (k, &j) in free.iter().enumerate() {
        z[j] = y[k];
    }
    for (k, &c) in pivot_col.iter().enumerate() {
        let pr = &pivot_rows[k];
        z[c] = pr[n] - free.iter().map(|&j| pr[j] * z[j]).sum::<f64>();
    }
    let worst = all().map(|c| c.violation(&z)).fold(0.0, f64::max);
    if worst > tol {
        return Err(LpError::NumericalFailure(format!(
            "recovered point violates a constraint by {worst:e}"
        )));
    }
    Ok(LpOutcome::Feasible(z))
}

/// Finds `y` with `a_i·y ≤ c_i` for all rows, `y` free. `Ok(Err(r))` when
/// the minimal total violation `r` exceeds `tol`.
#[allow(clippy::type_complexity)]
fn phase_one(p: usize, rows: &[(Vec<f64>, f64)], tol: f64) -> Result<Result<Vec<f64>, f64>, LpError> {
    let k = rows.len();
    if k == 0 {
        return Ok(Ok(vec![0.0; p]));
    }
    let n_art = rows.iter().filter(|r| r.1 < 0.0).count();
    let cols = 2 * p + k + n_art;
    let width = cols + 1;
    let mut t = vec![0.0; k * width];
    let mut basis = vec![0usize; k];
    let mut art = 2 * p + k;
    for (i, (a, c)) in rows.iter().enumerate() {
        let r = &mut t[i * width..(i + 1) * width];
        let sign = if *c < 0.0 { -1.0 } else { 1.0 };
        for j in 0..p {
            r[j] = sign * a[j];
            r[p + j] = -sign * a[j];
        }
        r[2 * p + i] = sign;
        r[cols] = sign * c;
        if *c < 0.0 {
            r[art] = 1.0;
            basis[i] = art;
            art += 1;
        } else {
            basis[i] = 2 * p + i;
        }
    }
    let is_art = |j: usize| j >= 2 * p + k;
    // Reduced costs d_j = c_j - Σ_{art rows} t_ij.
    let mut d = vec![0.0; width];
    for j in 0..cols {
        d[j] = if is_art(j) { 1.0 } else { 0.0 };
    }
    for i in 0..k {
        if is_art(basis[i]) {
            for j in 0..width {
                d[j] -= t[i * width + j];
            }
        }
    }
    let max_iter = 50 * (k + cols) + 1000;
    for _ in 0..max_iter {
        let Some(enter) = (0..cols).find(|&j| d[j] < -COST_EPS && !is_art(j)) else {
            let residual = -d[cols];
            if residual > tol {
                return Ok(Err(residual));
            }
            let mut val = vec![0.0; cols];
            for i in 0..k {
                val[basis[i]] = t[i * width + cols];
            }
            return Ok(Ok((0..p).map(|j| val[j] - val[p + j]).collect()));
        };
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for i in 0..k {
            let a = t[i * width + enter];
            if a > PIVOT_EPS {
                let ratio = t[i * width + cols] / a;
                let better = match leave {
                    None => true,
                    Some(l) => ratio < best - 1e-12 || (ratio <= best + 1e-12 && basis[i] < basis[l]),
                };
                if better {
                    best = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(l) = leave else {
            return Err(LpError::NumericalFailure("unbounded phase-one problem".into()));
        };
        pivot(&mut t, width, k, l, enter, &mut d);
        basis[l] = enter;
    }
    Err(LpError::NumericalFailure("simplex iteration limit".into()))
}

fn pivot(t: &mut [f64], width: usize, k: usize, l: usize, e: usize, d: &mut [f64]) {
    let inv = 1.0 / t[l * width + e];
    for j in 0..width {
        t[l * width + j] *= inv;
    }
    t[l * width + e] = 1.0;
    let (before, rest) = t.split_at_mut(l * width);
    let (prow, after) = rest.split_at_mut(width);
    for row in before.chunks_mut(width).chain(after.chunks_mut(width)).take(k - 1) {
        let f = row[e];
        if f != 0.0 {
            for j in 0..width {
                row[j] -= f * prow[j];
            }
            row[e] = 0.0;
        }
    }
    let f = d[e];
    if f != 0.0 {
        for j in 0..width {
            d[j] -= f * prow[j];
        }
        d[e] = 0.0;
    }
    // Clamp tiny negative right-hand sides produced by round-off.
    let cols = width - 1;
    for row in t.chunks_mut(width) {
        if row[cols] < 0.0 && row[cols] > -1e-13 {
            row[cols] = 0.0;
        }
    }
}
