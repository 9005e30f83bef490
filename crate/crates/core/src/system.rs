//! Controlled discrete-time dynamical systems `y(t+1) = f(y(t), u(t))` with a
//! state constraint `y(t) ∈ Y`, finite control sets `U(y) ⊆ U₀`, and a running
//! cost `g(y, u)` bounded below.
//!
//! Systems come from a small parametrized catalog (see [`catalog`]) and the
//! running cost can be replaced from a separate cost catalog (see [`cost_from_catalog`]).

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};

pub type State = Vec<f64>;
pub type Parameters = BTreeMap<String, f64>;

type DynamicsFn = Arc<dyn Fn(&[f64], &[f64]) -> State + Send + Sync>;
type ControlSetFn = Arc<dyn Fn(&[f64]) -> Vec<usize> + Send + Sync>;
type ConstraintFn = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;
type CostFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

/// Declared extent of the state constraint set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum StateBounds {
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Unbounded,
}

/// Running cost together with its declared lower bound.
#[derive(Clone)]
pub struct Cost {
    eval: CostFn,
    lower_bound: f64,
}

impl Cost {
    pub fn new<F>(lower_bound: f64, eval: F) -> Self
    where
        F: Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            eval: Arc::new(eval),
            lower_bound,
        }
    }

    pub fn eval(&self, y: &[f64], u: &[f64]) -> f64 {
        (self.eval)(y, u)
    }

    pub fn lower_bound(&self) -> f64 {
        self.lower_bound
    }

    /// The capped cost `min{g, level}`.
    pub fn truncated(&self, level: f64) -> Self {
        let inner = self.eval.clone();
        Self {
            eval: Arc::new(move |y, u| inner(y, u).min(level)),
            lower_bound: self.lower_bound.min(level),
        }
    }
}

impl fmt::Debug for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Cost")
            .field("lower_bound", &self.lower_bound)
            .finish_non_exhaustive()
    }
}

#[derive(Clone)]
pub struct SystemModel {
    name: String,
    state_dim: usize,
    controls: Vec<Vec<f64>>,
    dynamics: DynamicsFn,
    control_set: Option<ControlSetFn>,
    constraint: Option<ConstraintFn>,
    bounds: StateBounds,
    cost: Cost,
}

impl fmt::Debug for SystemModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SystemModel")
            .field("name", &self.name)
            .field("state_dim", &self.state_dim)
            .field("controls", &self.controls)
            .field("bounds", &self.bounds)
            .field("cost", &self.cost)
            .finish_non_exhaustive()
    }
}

impl SystemModel {
    /// A model on all of `ℝ^m` with every control admissible everywhere and zero cost.
    pub fn new<F>(name: impl Into<String>, state_dim: usize, controls: Vec<Vec<f64>>, dynamics: F) -> Self
    where
        F: Fn(&[f64], &[f64]) -> State + Send + Sync + 'static,
    {
        assert!(state_dim > 0, "state dimension must be positive");
        assert!(!controls.is_empty(), "control list must be nonempty");
        Self {
            name: name.into(),
            state_dim,
            controls,
            dynamics: Arc::new(dynamics),
            control_set: None,
            constraint: None,
            bounds: StateBounds::Unbounded,
            cost: Cost::new(0.0, |_, _| 0.0),
        }
    }

    pub fn with_constraint<F>(mut self, bounds: StateBounds, predicate: F) -> Self
    where
        F: Fn(&[f64]) -> bool + Send + Sync + 'static,
    {
        self.bounds = bounds;
        self.constraint = Some(Arc::new(predicate));
        self
    }

    /// Restricts controls per state; the closure returns indices into the control list.
    pub fn with_control_set<F>(mut self, control_set: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<usize> + Send + Sync + 'static,
    {
        self.control_set = Some(Arc::new(control_set));
        self
    }

    pub fn with_cost(mut self, cost: Cost) -> Self {
        self.cost = cost;
        self
    }

    pub fn with_truncated_cost(mut self, level: f64) -> Self {
        self.cost = self.cost.truncated(level);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    /// The full control list `U₀`; controls are referred to by their index in it.
    pub fn controls(&self) -> &[Vec<f64>] {
        &self.controls
    }

    pub fn bounds(&self) -> &StateBounds {
        &self.bounds
    }

    pub fn is_unbounded(&self) -> bool {
        self.bounds == StateBounds::Unbounded
    }

    pub fn cost(&self) -> &Cost {
        &self.cost
    }

    pub fn cost_lower_bound(&self) -> f64 {
        self.cost.lower_bound()
    }

    pub fn satisfies_constraint(&self, y: &[f64]) -> bool {
        y.len() == self.state_dim && self.constraint.as_ref().is_none_or(|c| c(y))
    }

    pub fn control_set(&self, y: &[f64]) -> Vec<usize> {
        match &self.control_set {
            Some(set) => set(y),
            None => (0..self.controls.len()).collect(),
        }
    }

    /// Evaluates `f(y, u)` without any admissibility checks.
    pub fn dynamics(&self, y: &[f64], control: usize) -> State {
        (self.dynamics)(y, &self.controls[control])
    }

    pub fn running_cost(&self, y: &[f64], control: usize) -> f64 {
        self.cost.eval(y, &self.controls[control])
    }

    /// One step of the dynamics. The image is not checked against the constraint.
    pub fn step(&self, y: &[f64], control: usize) -> Result<State> {
        if control >= self.controls.len() || !self.control_set(y).contains(&control) {
            return Err(Error::InadmissibleControl {
                state: y.to_vec(),
                control,
            });
        }
        Ok(self.dynamics(y, control))
    }

    /// Rolls out `horizon` steps. The policy sees the time index and the current
    /// state, so both feedback laws and open-loop sequences fit.
    pub fn simulate<P>(&self, y0: &[f64], mut policy: P, horizon: usize) -> Result<Vec<(State, usize)>>
    where
        P: FnMut(usize, &[f64]) -> usize,
    {
        if !self.satisfies_constraint(y0) {
            return Err(Error::ConstraintViolation {
                step: 0,
                state: y0.to_vec(),
            });
        }
        let mut trajectory = Vec::with_capacity(horizon);
        let mut y = y0.to_vec();
        for t in 0..horizon {
            let u = policy(t, &y);
            let next = self.step(&y, u)?;
            if !self.satisfies_constraint(&next) {
                return Err(Error::ConstraintViolation {
                    step: t + 1,
                    state: next,
                });
            }
            trajectory.push((std::mem::replace(&mut y, next), u));
        }
        Ok(trajectory)
    }
}

pub fn norm(y: &[f64]) -> f64 {
    y.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum CoercivityVerdict {
    Consistent,
    Violated {
        radius: f64,
        state: State,
        control: usize,
        image_norm: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoercivityReport {
    pub radii: Vec<f64>,
    /// `min |f(y,u)|` over sampled admissible `(y,u)` with `|y| = r`; `None` when no
    /// sampled state at that radius satisfies the constraint.
    pub minima: Vec<Option<f64>>,
    pub verdict: CoercivityVerdict,
}

/// Sample directions: signed axes first, then the remaining vectors of
/// `{-1,0,1}^m` in lexicographic order, all normalized.
fn sample_directions(dim: usize, count: usize) -> Vec<Vec<f64>> {
    let mut dirs = Vec::new();
    for axis in 0..dim {
        for sign in [1.0, -1.0] {
            let mut d = vec![0.0; dim];
            d[axis] = sign;
            dirs.push(d);
        }
    }
    if dim > 1 {
        let total = 3usize.pow(dim as u32);
        for code in 0..total {
            let mut c = code;
            let mut d = vec![0.0; dim];
            for slot in d.iter_mut().rev() {
                *slot = (c % 3) as f64 - 1.0;
                c /= 3;
            }
            let nonzero = d.iter().filter(|v| **v != 0.0).count();
            if nonzero >= 2 {
                let n = norm(&d);
                dirs.push(d.into_iter().map(|v| v / n).collect());
            }
        }
    }
    dirs.truncate(count.max(1));
    dirs
}

/// Empirical check that `|f(y,u)| → ∞` as `|y| → ∞` uniformly in `u`.
///
/// Radii inside the declared bounding box (if any) are reported but ignored by
/// the verdict. The verdict requires the per-radius minima to increase strictly
/// and to be positive.
pub fn check_infinity_coercivity(model: &SystemModel, radii: &[f64], samples_per_radius: usize) -> CoercivityReport {
    let box_radius = match model.bounds() {
        StateBounds::Unbounded => 0.0,
        StateBounds::Box { lower, upper } => lower
            .iter()
            .zip(upper)
            .map(|(l, u)| l.abs().max(u.abs()).powi(2))
            .sum::<f64>()
            .sqrt(),
    };
    let dirs = sample_directions(model.state_dim(), samples_per_radius);
    let mut minima = Vec::with_capacity(radii.len());
    let mut witnesses = Vec::with_capacity(radii.len());
    for &r in radii {
        let mut best: Option<(f64, State, usize)> = None;
        for d in &dirs {
            let y: State = d.iter().map(|v| v * r).collect();
            if !model.satisfies_constraint(&y) {
                continue;
            }
            for u in model.control_set(&y) {
                let n = norm(&model.dynamics(&y, u));
                if best.as_ref().is_none_or(|(b, _, _)| n < *b) {
                    best = Some((n, y.clone(), u));
                }
            }
        }
        minima.push(best.as_ref().map(|b| b.0));
        witnesses.push(best);
    }

    let mut verdict = CoercivityVerdict::Consistent;
    let mut previous: Option<f64> = None;
    for ((&r, witness), _) in radii.iter().zip(&witnesses).zip(&minima) {
        if r <= box_radius {
            continue;
        }
        let Some((value, state, control)) = witness else {
            continue;
        };
        let grows = previous.is_none_or(|p| *value > p);
        if !grows || *value <= 0.0 {
            verdict = CoercivityVerdict::Violated {
                radius: r,
                state: state.clone(),
                control: *control,
                image_norm: *value,
            };
            break;
        }
        previous = Some(*value);
    }
    CoercivityReport {
        radii: radii.to_vec(),
        minima,
        verdict,
    }
}

/// A named, parametrized system builder.
#[derive(Clone, Copy)]
pub struct SystemCatalogEntry {
    pub name: &'static str,
    pub defaults: &'static [(&'static str, f64)],
    extra_keys: fn(&str) -> bool,
    builder: fn(&Parameters) -> Result<SystemModel>,
}

impl SystemCatalogEntry {
    pub fn build(&self, params: &Parameters) -> Result<SystemModel> {
        (self.builder)(&resolve_params(self.name, self.defaults, params, self.extra_keys)?)
    }
}

impl fmt::Debug for SystemCatalogEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SystemCatalogEntry")
            .field("name", &self.name)
            .field("defaults", &self.defaults)
            .finish()
    }
}

const SYSTEMS: &[SystemCatalogEntry] = &[
    SystemCatalogEntry {
        name: "drift",
        defaults: &[("center", 2.0)],
        extra_keys: no_extra_keys,
        builder: build_drift,
    },
    SystemCatalogEntry {
        name: "linear",
        defaults: &[("dim", 1.0), ("u_count", 2.0), ("u_min", 0.0), ("u_max", 1.0)],
        extra_keys: is_linear_key,
        builder: build_linear,
    },
    SystemCatalogEntry {
        name: "fixed-point",
        defaults: &[("dim", 1.0), ("u_count", 2.0)],
        extra_keys: no_extra_keys,
        builder: build_fixed_point,
    },
];

pub fn catalog() -> &'static [SystemCatalogEntry] {
    SYSTEMS
}

/// Looks up `name` in the system catalog and builds it with `params`
/// (unspecified parameters take their defaults; unknown ones are rejected).
pub fn build_system(name: &str, params: &Parameters) -> Result<SystemModel> {
    SYSTEMS
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::UnknownCatalogEntry(name.to_string()))?
        .build(params)
}

fn no_extra_keys(_: &str) -> bool {
    false
}

/// `a_i_j` and `b_i` entries of the linear system.
fn is_linear_key(key: &str) -> bool {
    let parts: Vec<&str> = key.split('_').collect();
    let all_idx = |s: &[&str]| s.iter().all(|p| p.parse::<usize>().is_ok());
    match parts.as_slice() {
        ["a", rest @ ..] => rest.len() == 2 && all_idx(rest),
        ["b", rest @ ..] => rest.len() == 1 && all_idx(rest),
        _ => false,
    }
}

fn resolve_params(
    entry: &str,
    defaults: &[(&str, f64)],
    given: &Parameters,
    extra: fn(&str) -> bool,
) -> Result<Parameters> {
    let mut resolved: Parameters = defaults.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    for (k, v) in given {
        if !resolved.contains_key(k) && !extra(k) {
            return Err(Error::InvalidParameter {
                name: k.clone(),
                reason: format!("not a parameter of `{entry}`"),
            });
        }
        if !v.is_finite() {
            return Err(Error::InvalidParameter {
                name: k.clone(),
                reason: "must be finite".into(),
            });
        }
        resolved.insert(k.clone(), *v);
    }
    Ok(resolved)
}

fn positive_count(params: &Parameters, key: &str) -> Result<usize> {
    let v = params[key];
    if v < 1.0 || v.fract() != 0.0 {
        return Err(Error::InvalidParameter {
            name: key.into(),
            reason: format!("must be a positive integer, got {v}"),
        });
    }
    Ok(v as usize)
}

fn scalar_controls(count: usize, lo: f64, hi: f64) -> Vec<Vec<f64>> {
    if count == 1 {
        return vec![vec![lo]];
    }
    (0..count)
        .map(|k| vec![lo + (hi - lo) * k as f64 / (count - 1) as f64])
        .collect()
}

/// `y(t+1) = y(t) + u(t)`, `Y = [0, ∞)`, `U = {0, 1}`; cost `1 - 1/(1 + (y - center)²)`.
fn build_drift(params: &Parameters) -> Result<SystemModel> {
    let center = params["center"];
    Ok(SystemModel::new("drift", 1, vec![vec![0.0], vec![1.0]], |y, u| vec![y[0] + u[0]])
        .with_constraint(StateBounds::Unbounded, |y| y[0] >= 0.0)
        .with_cost(inverted_bump(center)))
}

/// `y(t+1) = A y(t) + B u(t)` on `ℝ^m` with scalar controls evenly spaced on `[u_min, u_max]`.
/// `A` defaults to `0.5·I` and `B` to the all-ones column.
fn build_linear(params: &Parameters) -> Result<SystemModel> {
    let dim = positive_count(params, "dim")?;
    let count = positive_count(params, "u_count")?;
    let mut a = vec![vec![0.0; dim]; dim];
    for (i, row) in a.iter_mut().enumerate() {
        for (j, entry) in row.iter_mut().enumerate() {
            let default = if i == j { 0.5 } else { 0.0 };
            *entry = params.get(&format!("a_{i}_{j}")).copied().unwrap_or(default);
        }
    }
    let b: Vec<f64> = (0..dim)
        .map(|i| params.get(&format!("b_{i}")).copied().unwrap_or(1.0))
        .collect();
    for key in params.keys().filter(|k| is_linear_key(k)) {
        let out_of_range = key
            .split('_')
            .skip(1)
            .any(|p| p.parse::<usize>().is_ok_and(|i| i >= dim));
        if out_of_range {
            return Err(Error::InvalidParameter {
                name: key.clone(),
                reason: format!("index exceeds dim = {dim}"),
            });
        }
    }
    let controls = scalar_controls(count, params["u_min"], params["u_max"]);
    Ok(SystemModel::new("linear", dim, controls, move |y, u| {
        (0..y.len())
            .map(|i| a[i].iter().zip(y).map(|(aij, yj)| aij * yj).sum::<f64>() + b[i] * u[0])
            .collect()
    })
    .with_cost(Cost::new(0.0, |y, _| norm(y).powi(2))))
}

/// `f(y, u) = y` for every control; cost `|u|`.
fn build_fixed_point(params: &Parameters) -> Result<SystemModel> {
    let dim = positive_count(params, "dim")?;
    let count = positive_count(params, "u_count")?;
    let controls = scalar_controls(count, 0.0, 1.0);
    Ok(SystemModel::new("fixed-point", dim, controls, |y, _| y.to_vec())
        .with_cost(Cost::new(0.0, |_, u| u[0].abs())))
}

fn inverted_bump(center: f64) -> Cost {
    Cost::new(0.0, move |y, _| {
        let d2: f64 = y.iter().map(|v| (v - center).powi(2)).sum();
        1.0 - 1.0 / (1.0 + d2)
    })
}

/// Names of the entries in the cost catalog.
pub const COST_NAMES: &[&str] = &["constant", "inverted-bump", "quadratic", "reciprocal"];

/// Builds a running cost by name:
///
/// * `constant {value}`: `g ≡ value`
/// * `inverted-bump {center}`: `1 - 1/(1 + |y - center|²)`, bounded with minimum 0 at `center`
/// * `quadratic {center, offset, control_weight}`: `|y - center|² + offset + control_weight·|u|²`
/// * `reciprocal`: `1/(1 + |y|)`, decreasing toward 0 at infinity
///
/// Centers are broadcast to every coordinate.
pub fn cost_from_catalog(name: &str, params: &Parameters) -> Result<Cost> {
    let p = |defaults: &[(&str, f64)]| resolve_params(name, defaults, params, no_extra_keys);
    match name {
        "constant" => {
            let value = p(&[("value", 1.0)])?["value"];
            Ok(Cost::new(value, move |_, _| value))
        }
        "inverted-bump" => Ok(inverted_bump(p(&[("center", 2.0)])?["center"])),
        "quadratic" => {
            let r = p(&[("center", 2.0), ("offset", 0.0), ("control_weight", 0.0)])?;
            let (center, offset, weight) = (r["center"], r["offset"], r["control_weight"]);
            if weight < 0.0 {
                return Err(Error::InvalidParameter {
                    name: "control_weight".into(),
                    reason: "must be nonnegative".into(),
                });
            }
            Ok(Cost::new(offset, move |y, u| {
                y.iter().map(|v| (v - center).powi(2)).sum::<f64>() + offset + weight * norm(u).powi(2)
            }))
        }
        "reciprocal" => {
            p(&[])?;
            Ok(Cost::new(0.0, |y, _| 1.0 / (1.0 + norm(y))))
        }
        other => Err(Error::UnknownCatalogEntry(other.to_string())),
    }
}
