//! Dynamic-programming values on a [`DiscretizedSystem`]: the normalized
//! discounted value `V_α(y) = (1-α) min Σ α^t g` by value iteration and the
//! averaged finite-horizon value `V(S, y) = (1/S) min Σ_{t<S} g` by backward
//! recursion. These are the independent counterpart of the LP module.

use rayon::prelude::*;
use serde::Serialize;

use crate::discretize::{DiscretizedSystem, Policy};
use crate::error::{Error, Result};
use crate::measures::eventual_cycle;

/// Sweep cap for value iteration.
pub const MAX_SWEEPS: usize = 1_000_000;

/// Relative slack under which two Bellman candidates count as tied.
const TIE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ValueKind {
    Discounted { alpha: f64 },
    FiniteHorizon { horizon: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValueFunction {
    /// One value per state, infinity node included. States from which no
    /// admissible path exists carry `+∞`.
    pub values: Vec<f64>,
    pub kind: ValueKind,
    /// Sup-norm Bellman residual of the returned values (0 for finite horizon).
    pub residual: f64,
    pub sweeps: usize,
    /// Sup-norm of each value-iteration update, in order.
    #[serde(skip)]
    pub update_norms: Vec<f64>,
    inf: Option<usize>,
}

impl ValueFunction {
    pub fn value(&self, state: usize) -> f64 {
        self.values[state]
    }

    pub fn inf(&self) -> Option<usize> {
        self.inf
    }

    fn candidates(&self, exclude_inf: bool) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values
            .iter()
            .copied()
            .enumerate()
            .filter(move |(s, _)| !(exclude_inf && Some(*s) == self.inf))
    }

    /// Minimum value and its state; the lowest index wins ties.
    pub fn min_over_states(&self, exclude_inf: bool) -> (usize, f64) {
        let mut best = (usize::MAX, f64::INFINITY);
        for (s, v) in self.candidates(exclude_inf) {
            if best.0 == usize::MAX || v < best.1 {
                best = (s, v);
            }
        }
        best
    }

    /// All states whose value lies within `tol` of the minimum.
    pub fn argmin_cluster(&self, exclude_inf: bool, tol: f64) -> Vec<usize> {
        let (_, min) = self.min_over_states(exclude_inf);
        self.candidates(exclude_inf)
            .filter(|(_, v)| *v <= min + tol)
            .map(|(s, _)| s)
            .collect()
    }
}

/// Free function form of [`ValueFunction::min_over_states`].
pub fn min_over_states(vf: &ValueFunction, exclude_inf: bool) -> (usize, f64) {
    vf.min_over_states(exclude_inf)
}

/// States from which every control eventually runs into a state without controls.
fn doomed_states(dsys: &DiscretizedSystem) -> Vec<bool> {
    let n = dsys.num_states();
    let mut doomed: Vec<bool> = (0..n).map(|s| dsys.transitions(s).is_empty()).collect();
    loop {
        let mut changed = false;
        for s in 0..n {
            if !doomed[s] && dsys.transitions(s).iter().all(|t| doomed[t.next]) {
                doomed[s] = true;
                changed = true;
            }
        }
        if !changed {
            return doomed;
        }
    }
}

fn is_better(candidate: f64, best: f64) -> bool {
    candidate < best - TIE_TOL * best.abs().max(1.0)
}

fn bellman(dsys: &DiscretizedSystem, alpha: f64, values: &[f64], state: usize) -> (f64, usize) {
    let mut best = (f64::INFINITY, 0);
    for (k, t) in dsys.transitions(state).iter().enumerate() {
        let q = (1.0 - alpha) * t.cost + alpha * values[t.next];
        if k == 0 || is_better(q, best.0) {
            best = (q, t.control);
        }
    }
    best
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| if x == y { 0.0 } else { (x - y).abs() })
        .fold(0.0, f64::max)
}

/// Value iteration for `V(y) = min_u [(1-α) g(y,u) + α V(f(y,u))]`.
///
/// Stops once the sup-norm update drops to `tol·(1-α)/α`, which bounds the
/// distance to the fixed point by `tol`.
pub fn value_iteration(dsys: &DiscretizedSystem, alpha: f64, tol: f64) -> Result<ValueFunction> {
    value_iteration_capped(dsys, alpha, tol, MAX_SWEEPS)
}

pub fn value_iteration_capped(dsys: &DiscretizedSystem, alpha: f64, tol: f64, max_sweeps: usize) -> Result<ValueFunction> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidDiscount(alpha));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "tol".into(),
            reason: "must be positive".into(),
        });
    }
    let n = dsys.num_states();
    let doomed = doomed_states(dsys);
    let mut values: Vec<f64> = doomed.iter().map(|d| if *d { f64::INFINITY } else { 0.0 }).collect();
    let mut next = values.clone();
    let threshold = tol * (1.0 - alpha) / alpha;
    let mut update_norms = Vec::new();
    for sweep in 1..=max_sweeps {
        for s in 0..n {
            if !doomed[s] {
                next[s] = bellman(dsys, alpha, &values, s).0;
            }
        }
        let update = sup_diff(&next, &values);
        update_norms.push(update);
        std::mem::swap(&mut values, &mut next);
        if update <= threshold {
            let applied: Vec<f64> = (0..n)
                .map(|s| if doomed[s] { f64::INFINITY } else { bellman(dsys, alpha, &values, s).0 })
                .collect();
            return Ok(ValueFunction {
                residual: sup_diff(&applied, &values),
                values,
                kind: ValueKind::Discounted { alpha },
                sweeps: sweep,
                update_norms,
                inf: dsys.inf(),
            });
        }
    }
    Err(Error::NotConverged {
        iterations: max_sweeps,
        last_update: update_norms.last().copied().unwrap_or(f64::NAN),
    })
}

/// Minimizer of the Bellman expression per state; ties go to the lowest control index.
pub fn greedy_policy(dsys: &DiscretizedSystem, vf: &ValueFunction) -> Result<Policy> {
    let ValueKind::Discounted { alpha } = vf.kind else {
        return Err(Error::InvalidParameter {
            name: "vf".into(),
            reason: "greedy policies need a discounted value function".into(),
        });
    };
    Ok(Policy::from_fn(dsys, |s| bellman(dsys, alpha, &vf.values, s).1))
}

/// Backward-recursion result: values plus the optimal decision for every
/// remaining-steps count, so optimal control sequences can be replayed.
#[derive(Clone, Debug)]
pub struct FiniteHorizonSolution {
    pub value: ValueFunction,
    /// `decisions[k][s]`: optimal control at `s` with `k + 1` steps to go.
    decisions: Vec<Vec<usize>>,
}

impl FiniteHorizonSolution {
    pub fn horizon(&self) -> usize {
        self.decisions.len()
    }

    /// The optimal open-loop control sequence of length `S` from `y0`.
    pub fn optimal_sequence(&self, dsys: &DiscretizedSystem, y0: usize) -> Result<Vec<usize>> {
        let horizon = self.horizon();
        let mut s = y0;
        let mut out = Vec::with_capacity(horizon);
        for t in 0..horizon {
            let u = self.decisions[horizon - 1 - t][s];
            out.push(u);
            s = dsys.successor(s, u)?;
        }
        Ok(out)
    }
}

/// `J_0 ≡ 0`, `J_{k+1}(y) = min_u [g(y,u) + J_k(f(y,u))]`, `V(S,y) = J_S(y)/S`.
pub fn finite_horizon(dsys: &DiscretizedSystem, horizon: usize) -> Result<FiniteHorizonSolution> {
    if horizon == 0 {
        return Err(Error::InvalidHorizon);
    }
    let n = dsys.num_states();
    let mut cost_to_go = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut decisions = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let mut row = vec![0; n];
        for (s, slot) in row.iter_mut().enumerate() {
            let mut best = (f64::INFINITY, 0);
            for (k, t) in dsys.transitions(s).iter().enumerate() {
                let q = t.cost + cost_to_go[t.next];
                if k == 0 || is_better(q, best.0) {
                    best = (q, t.control);
                }
            }
            next[s] = best.0;
            *slot = best.1;
        }
        std::mem::swap(&mut cost_to_go, &mut next);
        decisions.push(row);
    }
    let values = cost_to_go.iter().map(|j| j / horizon as f64).collect();
    Ok(FiniteHorizonSolution {
        value: ValueFunction {
            values,
            kind: ValueKind::FiniteHorizon { horizon },
            residual: 0.0,
            sweeps: horizon,
            update_norms: Vec::new(),
            inf: dsys.inf(),
        },
        decisions,
    })
}

/// One schedule point of the bounded-optimal-process diagnostic.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct A1Point {
    pub schedule_value: f64,
    pub argmin_state: usize,
    pub min_value: f64,
    /// Largest `|y|` along the optimal process started at the argmin state (grid states only).
    pub radius: f64,
    pub touches_inf: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum A1Verdict {
    Consistent,
    OutsideTheoremHypotheses,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct A1Report {
    pub discounted: Vec<A1Point>,
    pub averaged: Vec<A1Point>,
    pub bounding_radius: f64,
    pub verdict: A1Verdict,
}

fn path_extent(dsys: &DiscretizedSystem, states: impl IntoIterator<Item = usize>) -> (f64, bool) {
    let mut radius: f64 = 0.0;
    let mut touches_inf = false;
    for s in states {
        if dsys.is_inf(s) {
            touches_inf = true;
        } else {
            radius = radius.max(dsys.radius(s));
        }
    }
    (radius, touches_inf)
}

pub(crate) fn discounted_point(dsys: &DiscretizedSystem, alpha: f64, vi_tol: f64) -> Result<(ValueFunction, A1Point)> {
    let vf = value_iteration(dsys, alpha, vi_tol)?;
    let (argmin, min_value) = vf.min_over_states(true);
    let policy = greedy_policy(dsys, &vf)?;
    let (states, _) = eventual_cycle(dsys, argmin, &policy)?;
    let (radius, touches_inf) = path_extent(dsys, states);
    let point = A1Point {
        schedule_value: alpha,
        argmin_state: argmin,
        min_value,
        radius,
        touches_inf,
    };
    Ok((vf, point))
}

pub(crate) fn averaged_point(dsys: &DiscretizedSystem, horizon: usize) -> Result<(FiniteHorizonSolution, A1Point)> {
    let sol = finite_horizon(dsys, horizon)?;
    let (argmin, min_value) = sol.value.min_over_states(true);
    let controls = sol.optimal_sequence(dsys, argmin)?;
    let mut visited = Vec::with_capacity(controls.len() + 1);
    let mut s = argmin;
    for u in &controls {
        visited.push(s);
        s = dsys.successor(s, *u)?;
    }
    let (radius, touches_inf) = path_extent(dsys, visited);
    let point = A1Point {
        schedule_value: horizon as f64,
        argmin_state: argmin,
        min_value,
        radius,
        touches_inf,
    };
    Ok((sol, point))
}

/// Runs the optimal processes (started from the minimizing initial state) for
/// every discount factor and horizon and reports how far they travel.
///
/// The verdict is `Consistent` when no optimal process reaches the infinity node.
pub fn check_a1(dsys: &DiscretizedSystem, alphas: &[f64], horizons: &[usize], vi_tol: f64) -> Result<A1Report> {
    let discounted = alphas
        .par_iter()
        .map(|&a| discounted_point(dsys, a, vi_tol).map(|(_, p)| p))
        .collect::<Result<Vec<_>>>()?;
    let averaged = horizons
        .par_iter()
        .map(|&h| averaged_point(dsys, h).map(|(_, p)| p))
        .collect::<Result<Vec<_>>>()?;
    let all = discounted.iter().chain(&averaged);
    let bounding_radius = all.clone().map(|p| p.radius).fold(0.0, f64::max);
    let verdict = if all.clone().any(|p| p.touches_inf) {
        A1Verdict::OutsideTheoremHypotheses
    } else {
        A1Verdict::Consistent
    };
    Ok(A1Report {
        discounted,
        averaged,
        bounding_radius,
        verdict,
    })
}
