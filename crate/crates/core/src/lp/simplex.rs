//! Dense two-phase primal simplex for `min c·x, Ax = b, x ≥ 0`.
//!
//! Entering variables follow Dantzig's rule with lowest-index ties and fall
//! back to Bland's rule after a run of degenerate pivots, so results are
//! deterministic and cycling cannot occur. The final basis is re-solved with
//! an LU factorization to recover accurate primal values and duals.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::discretize::Pair;
use crate::error::{Error, Result};
use crate::lp::program::LinearProgram;
use crate::measures::Measure;

const PIVOT_EPS: f64 = 1e-11;
const DRIVE_OUT_EPS: f64 = 1e-9;
const BLAND_AFTER: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Iteration limit reached, or the final basis failed the optimality checks.
    Stalled,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LPSolution {
    pub status: LpStatus,
    pub objective: f64,
    /// Primal values aligned with `LinearProgram::variables`.
    #[serde(skip)]
    pub values: Vec<f64>,
    #[serde(skip)]
    pub weights: BTreeMap<Pair, f64>,
    /// Dual values per row; rows found redundant get zero.
    pub duals: Vec<f64>,
    pub max_residual: f64,
    /// Largest dual infeasibility `max(0, -min_j (c_j - yᵀA_j))`.
    pub certificate: f64,
    pub duality_gap: f64,
    pub inf_mass: f64,
    pub iterations: usize,
}

impl Measure for LPSolution {
    fn weights(&self) -> &BTreeMap<Pair, f64> {
        &self.weights
    }
}

impl LPSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    fn without_point(status: LpStatus, lp: &LinearProgram, iterations: usize) -> Self {
        let objective = match status {
            LpStatus::Infeasible => f64::INFINITY,
            LpStatus::Unbounded => f64::NEG_INFINITY,
            _ => f64::NAN,
        };
        Self {
            status,
            objective,
            values: Vec::new(),
            weights: BTreeMap::new(),
            duals: vec![0.0; lp.num_rows()],
            max_residual: f64::NAN,
            certificate: f64::NAN,
            duality_gap: f64::NAN,
            inf_mass: f64::NAN,
            iterations,
        }
    }
}

struct Tableau {
    width: usize,
    data: Vec<f64>,
    cost: Vec<f64>,
    basis: Vec<usize>,
    /// Original row index of each tableau row.
    origin: Vec<usize>,
}

enum Outcome {
    Optimal,
    Unbounded,
    Stalled,
}

impl Tableau {
    fn rows(&self) -> usize {
        self.basis.len()
    }

    fn rhs_col(&self) -> usize {
        self.width - 1
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width + c]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let p = self.at(r, c);
        let pivot_row: Vec<f64> = self.data[r * w..(r + 1) * w].iter().map(|v| v / p).collect();
        self.data[r * w..(r + 1) * w].copy_from_slice(&pivot_row);
        self.data[r * w + c] = 1.0;
        for i in 0..self.rows() {
            if i == r {
                continue;
            }
            let f = self.data[i * w + c];
            if f != 0.0 {
                for (dst, src) in self.data[i * w..(i + 1) * w].iter_mut().zip(&pivot_row) {
                    *dst -= f * src;
                }
                self.data[i * w + c] = 0.0;
            }
        }
        let f = self.cost[c];
        if f != 0.0 {
            for (dst, src) in self.cost.iter_mut().zip(&pivot_row) {
                *dst -= f * src;
            }
            self.cost[c] = 0.0;
        }
        self.basis[r] = c;
    }

    fn entering(&self, eligible: usize, cost_eps: f64, bland: bool) -> Option<usize> {
        let mut best: Option<usize> = None;
        for j in 0..eligible {
            let d = self.cost[j];
            if d < -cost_eps {
                if bland {
                    return Some(j);
                }
                if best.is_none_or(|b| d < self.cost[b]) {
                    best = Some(j);
                }
            }
        }
        best
    }

    fn leaving(&self, c: usize) -> Option<(usize, f64)> {
        let rhs = self.rhs_col();
        let mut best: Option<(usize, f64)> = None;
        for r in 0..self.rows() {
            let a = self.at(r, c);
            if a <= PIVOT_EPS {
                continue;
            }
            let ratio = self.at(r, rhs).max(0.0) / a;
            best = match best {
                None => Some((r, ratio)),
                Some((br, bratio)) => {
                    let tie = (ratio - bratio).abs() <= 1e-12 * bratio.abs().max(1.0);
                    if ratio < bratio && !tie || tie && self.basis[r] < self.basis[br] {
                        Some((r, ratio))
                    } else {
                        Some((br, bratio))
                    }
                }
            };
        }
        best
    }

    fn run(&mut self, eligible: usize, cost_eps: f64, max_iterations: usize, iterations: &mut usize) -> Outcome {
        let mut degenerate_streak = 0;
        loop {
            if *iterations >= max_iterations {
                return Outcome::Stalled;
            }
            let Some(c) = self.entering(eligible, cost_eps, degenerate_streak >= BLAND_AFTER) else {
                return Outcome::Optimal;
            };
            let Some((r, ratio)) = self.leaving(c) else {
                return Outcome::Unbounded;
            };
            if ratio <= PIVOT_EPS {
                degenerate_streak += 1;
            } else {
                degenerate_streak = 0;
            }
            self.pivot(r, c);
            *iterations += 1;
        }
    }

    fn drop_rows(&mut self, redundant: &[usize]) {
        if redundant.is_empty() {
            return;
        }
        let w = self.width;
        let mut data = Vec::with_capacity(self.data.len());
        let mut basis = Vec::new();
        let mut origin = Vec::new();
        for r in 0..self.rows() {
            if !redundant.contains(&r) {
                data.extend_from_slice(&self.data[r * w..(r + 1) * w]);
                basis.push(self.basis[r]);
                origin.push(self.origin[r]);
            }
        }
        self.data = data;
        self.basis = basis;
        self.origin = origin;
    }
}

fn validate(lp: &LinearProgram) -> Result<()> {
    let n = lp.num_variables();
    if lp.objective.len() != n || lp.rhs.len() != lp.rows.len() || lp.rows.iter().any(|r| r.len() != n) {
        return Err(Error::MalformedLp("dimension mismatch".into()));
    }
    let all_finite = lp.objective.iter().chain(&lp.rhs).chain(lp.rows.iter().flatten()).all(|v| v.is_finite());
    if !all_finite {
        return Err(Error::MalformedLp("non-finite coefficient".into()));
    }
    Ok(())
}

/// Solves `lp` to tolerance `tol` on primal residual and dual infeasibility.
pub fn solve(lp: &LinearProgram, tol: f64) -> Result<LPSolution> {
    validate(lp)?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "lp_tol".into(),
            reason: "must be positive".into(),
        });
    }
    let n = lp.num_variables();
    let m = lp.num_rows();
    let width = n + m + 1;
    let mut data = vec![0.0; m * width];
    for r in 0..m {
        let sign = if lp.rhs[r] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            data[r * width + j] = sign * lp.rows[r][j];
        }
        data[r * width + n + r] = 1.0;
        data[r * width + width - 1] = sign * lp.rhs[r];
    }
    let mut cost = vec![0.0; width];
    for r in 0..m {
        for j in 0..n {
            cost[j] -= data[r * width + j];
        }
        cost[width - 1] -= data[r * width + width - 1];
    }
    let mut t = Tableau {
        width,
        data,
        cost,
        basis: (n..n + m).collect(),
        origin: (0..m).collect(),
    };
    let max_iterations = 1000 + 50 * (n + m);
    let mut iterations = 0;

    if let Outcome::Stalled = t.run(n, PIVOT_EPS, max_iterations, &mut iterations) {
        return Ok(LPSolution::without_point(LpStatus::Stalled, lp, iterations));
    }
    if -t.cost[width - 1] > tol {
        return Ok(LPSolution::without_point(LpStatus::Infeasible, lp, iterations));
    }

    let mut redundant = Vec::new();
    for r in 0..t.rows() {
        if t.basis[r] < n {
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for j in 0..n {
            let a = t.at(r, j).abs();
            if a > DRIVE_OUT_EPS && best.is_none_or(|(_, b)| a > b) {
                best = Some((j, a));
            }
        }
        match best {
            Some((j, _)) => t.pivot(r, j),
            None => redundant.push(r),
        }
    }
    t.drop_rows(&redundant);

    let cost_scale = lp.objective.iter().fold(1.0f64, |a, c| a.max(c.abs()));
    t.cost = vec![0.0; width];
    t.cost[..n].copy_from_slice(&lp.objective);
    for r in 0..t.rows() {
        let cb = lp.objective[t.basis[r]];
        if cb != 0.0 {
            for j in 0..width {
                t.cost[j] -= cb * t.data[r * width + j];
            }
        }
    }
    for r in 0..t.rows() {
        t.cost[t.basis[r]] = 0.0;
    }
    match t.run(n, PIVOT_EPS * cost_scale, max_iterations, &mut iterations) {
        Outcome::Unbounded => return Ok(LPSolution::without_point(LpStatus::Unbounded, lp, iterations)),
        Outcome::Stalled => return Ok(LPSolution::without_point(LpStatus::Stalled, lp, iterations)),
        Outcome::Optimal => {}
    }
    Ok(finish(lp, &t, tol, iterations))
}

fn clamp_nonnegative(x: &mut [f64]) {
    for v in x.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

fn finish(lp: &LinearProgram, t: &Tableau, tol: f64, iterations: usize) -> LPSolution {
    let n = lp.num_variables();
    let k = t.rows();
    let rhs = t.rhs_col();

    let mut tableau_x = vec![0.0; n];
    for r in 0..k {
        tableau_x[t.basis[r]] = t.at(r, rhs);
    }
    let mut most_negative = tableau_x.iter().fold(0.0f64, |a, v| a.min(*v));
    clamp_nonnegative(&mut tableau_x);

    let b_mat = DMatrix::from_fn(k, k, |i, j| lp.rows[t.origin[i]][t.basis[j]]);
    let b_rhs = DVector::from_fn(k, |i, _| lp.rhs[t.origin[i]]);
    let c_b = DVector::from_fn(k, |i, _| lp.objective[t.basis[i]]);
    let refined = b_mat.clone().lu().solve(&b_rhs);
    let y_k = b_mat.transpose().lu().solve(&c_b);

    let mut x = tableau_x.clone();
    if let Some(xb) = refined {
        let mut candidate = vec![0.0; n];
        for (i, v) in xb.iter().enumerate() {
            candidate[t.basis[i]] = *v;
        }
        let candidate_negative = candidate.iter().fold(0.0f64, |a, v| a.min(*v));
        clamp_nonnegative(&mut candidate);
        if lp.max_residual(&candidate) <= lp.max_residual(&x) {
            x = candidate;
            most_negative = candidate_negative;
        }
    }

    let mut duals = vec![0.0; lp.num_rows()];
    let factored = y_k.is_some();
    if let Some(y) = y_k {
        for (i, v) in y.iter().enumerate() {
            duals[t.origin[i]] = *v;
        }
    }

    let reduced: Vec<f64> = (0..n)
        .map(|j| lp.objective[j] - lp.rows.iter().zip(&duals).map(|(row, y)| y * row[j]).sum::<f64>())
        .collect();
    let certificate = reduced.iter().fold(0.0f64, |a, d| a.max(-d));
    let objective = lp.objective_value(&x);
    let dual_objective: f64 = lp.rhs.iter().zip(&duals).map(|(b, y)| b * y).sum();
    let max_residual = lp.max_residual(&x);

    let weights: BTreeMap<Pair, f64> = lp
        .variables
        .iter()
        .zip(&x)
        .filter(|(_, v)| **v > 0.0)
        .map(|(p, v)| (*p, *v))
        .collect();
    let inf_mass = lp
        .variables
        .iter()
        .zip(&x)
        .filter(|(p, _)| lp.is_inf_pair(**p))
        .map(|(_, v)| v)
        .sum();
    let duality_gap = (objective - dual_objective).abs();
    let ok = factored
        && max_residual <= tol && certificate <= tol && most_negative >= -tol && duality_gap <= tol * objective.abs().max(1.0);
    LPSolution {
        status: if ok { LpStatus::Optimal } else { LpStatus::Stalled },
        objective,
        values: x,
        weights,
        duals,
        max_residual,
        certificate,
        duality_gap,
        inf_mass,
        iterations,
    }
}
