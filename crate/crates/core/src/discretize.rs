//! Finite state–control systems obtained by snapping a [`SystemModel`] onto a
//! uniform grid, with one extra absorbing node standing for the point at
//! infinity of the one-point compactification of the state set.
//!
//! Any image `f(y, u)` that leaves the grid box or violates the state
//! constraint is sent to the infinity node. The infinity node maps to itself
//! under every control, and every control is available there.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::system::{norm, State, SystemModel};

/// A state–control pair of a discretized system, addressed by indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pair {
    pub state: usize,
    pub control: usize,
}

impl Pair {
    pub fn new(state: usize, control: usize) -> Self {
        Self { state, control }
    }
}

/// Uniform tensor grid; `steps_per_dim[j]` is the number of intervals along axis `j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub steps_per_dim: Vec<usize>,
}

impl GridSpec {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, steps_per_dim: Vec<usize>) -> Self {
        Self {
            lower,
            upper,
            steps_per_dim,
        }
    }

    /// One-dimensional grid `lower, lower + h, ..., upper` with `steps` intervals.
    pub fn interval(lower: f64, upper: f64, steps: usize) -> Self {
        Self::new(vec![lower], vec![upper], vec![steps])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn validate(&self) -> Result<()> {
        let dim = self.lower.len();
        if dim == 0 || self.upper.len() != dim || self.steps_per_dim.len() != dim {
            return Err(Error::InvalidGrid(
                "lower, upper and steps_per_dim must have the same nonzero length".into(),
            ));
        }
        for j in 0..dim {
            let (lo, hi) = (self.lower[j], self.upper[j]);
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidGrid(format!("axis {j}: need lower < upper, got [{lo}, {hi}]")));
            }
            if self.steps_per_dim[j] == 0 {
                return Err(Error::InvalidGrid(format!("axis {j}: steps must be positive")));
            }
        }
        Ok(())
    }

    fn spacing(&self, axis: usize) -> f64 {
        (self.upper[axis] - self.lower[axis]) / self.steps_per_dim[axis] as f64
    }

    fn coordinate(&self, axis: usize, k: usize) -> f64 {
        if k == self.steps_per_dim[axis] {
            self.upper[axis]
        } else {
            self.lower[axis] + k as f64 * self.spacing(axis)
        }
    }

    fn point_count(&self) -> usize {
        self.steps_per_dim.iter().map(|s| s + 1).product()
    }

    /// Grid point for a linear index; the first axis varies slowest.
    fn point(&self, mut linear: usize) -> State {
        let mut y = vec![0.0; self.dim()];
        for axis in (0..self.dim()).rev() {
            let n = self.steps_per_dim[axis] + 1;
            y[axis] = self.coordinate(axis, linear % n);
            linear /= n;
        }
        y
    }

    /// Nearest grid point to `y` (ties toward the smaller index), or `None` outside the box.
    fn snap(&self, y: &[f64]) -> Option<usize> {
        const SLACK: f64 = 1e-9;
        let mut linear = 0;
        for (axis, &x) in y.iter().enumerate() {
            let steps = self.steps_per_dim[axis];
            let t = (x - self.lower[axis]) / self.spacing(axis);
            if !t.is_finite() || t < -SLACK || t > steps as f64 + SLACK {
                return None;
            }
            let k = ((t - 0.5).ceil().max(0.0) as usize).min(steps);
            linear = linear * (steps + 1) + k;
        }
        Some(linear)
    }

    /// The box corner farthest from the origin.
    pub fn farthest_corner(&self) -> State {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| if u.abs() >= l.abs() { *u } else { *l })
            .collect()
    }
}

/// How the running cost is valued at the infinity node.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "rule", content = "value", rename_all = "kebab-case")]
pub enum CostAtInf {
    Explicit(f64),
    /// Maximum running cost over all grid pairs.
    #[default]
    SupOverGrid,
    /// The truncation level `M` of a capped cost.
    TruncationLevel(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transition {
    pub control: usize,
    pub next: usize,
    pub cost: f64,
}

#[derive(Clone, Debug)]
pub struct DiscretizedSystem {
    name: String,
    points: Vec<State>,
    transitions: Vec<Vec<Transition>>,
    inf: Option<usize>,
    num_controls: usize,
    cost_at_inf: f64,
    cost_at_inf_rule: Option<CostAtInf>,
}

impl DiscretizedSystem {
    /// Snaps `model` onto `grid`.
    ///
    /// States are the grid points satisfying the state constraint, in
    /// lexicographic order; the infinity node gets the last index.
    pub fn build(model: &SystemModel, grid: &GridSpec, rule: CostAtInf) -> Result<Self> {
        grid.validate()?;
        if grid.dim() != model.state_dim() {
            return Err(Error::InvalidGrid(format!(
                "grid has dimension {} but the model has dimension {}",
                grid.dim(),
                model.state_dim()
            )));
        }
        let mut grid_to_state = vec![None; grid.point_count()];
        let mut points = Vec::new();
        for (linear, slot) in grid_to_state.iter_mut().enumerate() {
            let y = grid.point(linear);
            if model.satisfies_constraint(&y) {
                *slot = Some(points.len());
                points.push(y);
            }
        }
        if points.is_empty() {
            return Err(Error::InvalidGrid("no grid point satisfies the state constraint".into()));
        }
        let inf = points.len();
        let mut transitions = Vec::with_capacity(points.len() + 1);
        let mut sup_cost = f64::NEG_INFINITY;
        for y in &points {
            let controls = model.control_set(y);
            if controls.is_empty() {
                return Err(Error::NotViable(y.clone()));
            }
            let row: Vec<Transition> = controls
                .into_iter()
                .map(|u| {
                    let image = model.dynamics(y, u);
                    let next = if model.satisfies_constraint(&image) {
                        grid.snap(&image).and_then(|l| grid_to_state[l]).unwrap_or(inf)
                    } else {
                        inf
                    };
                    let cost = model.running_cost(y, u);
                    sup_cost = sup_cost.max(cost);
                    Transition { control: u, next, cost }
                })
                .collect();
            transitions.push(row);
        }
        let cost_at_inf = match rule {
            CostAtInf::Explicit(v) | CostAtInf::TruncationLevel(v) => v,
            CostAtInf::SupOverGrid => sup_cost,
        };
        let num_controls = model.controls().len();
        transitions.push(
            (0..num_controls)
                .map(|u| Transition {
                    control: u,
                    next: inf,
                    cost: cost_at_inf,
                })
                .collect(),
        );
        let system = Self {
            name: model.name().to_string(),
            points,
            transitions,
            inf: Some(inf),
            num_controls,
            cost_at_inf,
            cost_at_inf_rule: Some(rule),
        };
        if system.admissible_pairs().is_empty() {
            return Err(Error::NoAdmissiblePairs);
        }
        Ok(system)
    }

    /// Assembles a system from explicit transition tables.
    ///
    /// `transitions[s]` lists `(control, next, cost)` for grid state `s`. When
    /// `cost_at_inf` is given, an infinity node with index `points.len()` is
    /// appended and `next` may refer to it.
    pub fn from_parts(
        name: impl Into<String>,
        points: Vec<State>,
        transitions: Vec<Vec<(usize, usize, f64)>>,
        cost_at_inf: Option<f64>,
    ) -> Result<Self> {
        if points.is_empty() || transitions.len() != points.len() {
            return Err(Error::InvalidGrid("need one transition list per state".into()));
        }
        let n = points.len();
        let limit = if cost_at_inf.is_some() { n + 1 } else { n };
        let mut num_controls = 0;
        let mut rows = Vec::with_capacity(limit);
        for row in transitions {
            let mut out: Vec<Transition> = Vec::with_capacity(row.len());
            for (control, next, cost) in row {
                if next >= limit {
                    return Err(Error::StateOutOfRange(next));
                }
                if out.iter().any(|t| t.control == control) {
                    return Err(Error::InvalidGrid(format!("control {control} listed twice")));
                }
                num_controls = num_controls.max(control + 1);
                out.push(Transition { control, next, cost });
            }
            out.sort_by_key(|t| t.control);
            rows.push(out);
        }
        if let Some(c) = cost_at_inf {
            rows.push(
                (0..num_controls.max(1))
                    .map(|u| Transition {
                        control: u,
                        next: n,
                        cost: c,
                    })
                    .collect(),
            );
        }
        Ok(Self {
            name: name.into(),
            points,
            transitions: rows,
            inf: cost_at_inf.map(|_| n),
            num_controls: num_controls.max(1),
            cost_at_inf: cost_at_inf.unwrap_or(f64::NAN),
            cost_at_inf_rule: cost_at_inf.map(CostAtInf::Explicit),
        })
    }

    /// Removes the infinity node and every pair leading to it, leaving the
    /// finite analogue of `G = {(y,u) : y ∈ Y, u ∈ U(y), f(y,u) ∈ Y}`.
    pub fn restrict_to_g(&self) -> Result<Self> {
        let n = self.points.len();
        let transitions: Vec<Vec<Transition>> = self.transitions[..n]
            .iter()
            .map(|row| row.iter().filter(|t| t.next < n && Some(t.next) != self.inf).copied().collect())
            .collect();
        if transitions.iter().all(Vec::is_empty) {
            return Err(Error::NoAdmissiblePairs);
        }
        Ok(Self {
            name: self.name.clone(),
            points: self.points.clone(),
            transitions,
            inf: None,
            num_controls: self.num_controls,
            cost_at_inf: f64::NAN,
            cost_at_inf_rule: None,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Number of states including the infinity node when present.
    pub fn num_states(&self) -> usize {
        self.transitions.len()
    }

    /// Number of grid (non-infinity) states.
    pub fn num_grid_states(&self) -> usize {
        self.points.len()
    }

    pub fn num_controls(&self) -> usize {
        self.num_controls
    }

    pub fn state_dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn inf(&self) -> Option<usize> {
        self.inf
    }

    pub fn is_inf(&self, state: usize) -> bool {
        self.inf == Some(state)
    }

    pub fn has_inf(&self) -> bool {
        self.inf.is_some()
    }

    /// Coordinates of a grid state; `None` for the infinity node.
    pub fn point(&self, state: usize) -> Option<&State> {
        self.points.get(state)
    }

    pub fn points(&self) -> &[State] {
        &self.points
    }

    /// Euclidean norm of a state; infinite for the infinity node.
    pub fn radius(&self, state: usize) -> f64 {
        self.points.get(state).map_or(f64::INFINITY, |y| norm(y))
    }

    pub fn cost_at_inf(&self) -> Option<f64> {
        self.inf.map(|_| self.cost_at_inf)
    }

    pub fn cost_at_inf_rule(&self) -> Option<CostAtInf> {
        self.cost_at_inf_rule
    }

    pub fn transitions(&self, state: usize) -> &[Transition] {
        &self.transitions[state]
    }

    pub fn controls_of(&self, state: usize) -> impl Iterator<Item = usize> + '_ {
        self.transitions[state].iter().map(|t| t.control)
    }

    pub fn transition(&self, state: usize, control: usize) -> Option<&Transition> {
        self.transitions.get(state)?.iter().find(|t| t.control == control)
    }

    pub fn next(&self, state: usize, control: usize) -> Option<usize> {
        self.transition(state, control).map(|t| t.next)
    }

    pub fn cost_of(&self, pair: Pair) -> Option<f64> {
        self.transition(pair.state, pair.control).map(|t| t.cost)
    }

    /// Successor under an admissible control, or an error naming the pair.
    pub fn successor(&self, state: usize, control: usize) -> Result<usize> {
        if state >= self.num_states() {
            return Err(Error::StateOutOfRange(state));
        }
        self.next(state, control)
            .ok_or(Error::PolicyInadmissible { state, control })
    }

    /// Every pair of the system, infinity pairs included, ordered by (state, control).
    pub fn pairs(&self) -> Vec<Pair> {
        self.transitions
            .iter()
            .enumerate()
            .flat_map(|(s, row)| row.iter().map(move |t| Pair::new(s, t.control)))
            .collect()
    }

    /// Grid pairs whose image is a grid state.
    pub fn admissible_pairs(&self) -> Vec<Pair> {
        let n = self.points.len();
        self.transitions[..n]
            .iter()
            .enumerate()
            .flat_map(|(s, row)| row.iter().filter(|t| t.next < n).map(move |t| Pair::new(s, t.control)))
            .collect()
    }

    /// Index of the grid state whose coordinates equal `y` exactly.
    pub fn find_state(&self, y: &[f64]) -> Option<usize> {
        self.points.iter().position(|p| p.as_slice() == y)
    }

    /// Same transitions with every cost replaced by `min{cost, level}`, and
    /// the infinity node valued at `level`.
    pub fn with_truncated_cost(&self, level: f64) -> Self {
        let mut out = self.clone();
        for row in &mut out.transitions {
            for t in row.iter_mut() {
                t.cost = t.cost.min(level);
            }
        }
        if let Some(inf) = out.inf {
            for t in &mut out.transitions[inf] {
                t.cost = level;
            }
            out.cost_at_inf = level;
            out.cost_at_inf_rule = Some(CostAtInf::TruncationLevel(level));
        }
        out
    }
}

/// Deterministic stationary feedback law: one control per state.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Policy(Vec<usize>);

impl Policy {
    pub fn new(controls: Vec<usize>) -> Self {
        Self(controls)
    }

    pub fn constant(system: &DiscretizedSystem, control: usize) -> Self {
        Self(vec![control; system.num_states()])
    }

    pub fn from_fn(system: &DiscretizedSystem, f: impl Fn(usize) -> usize) -> Self {
        Self((0..system.num_states()).map(f).collect())
    }

    pub fn control(&self, state: usize) -> usize {
        self.0[state]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}
