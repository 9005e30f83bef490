use std::fmt::Write as _;

use serde::Serialize;

use crate::discretize::{DiscretizedSystem, Pair};
use crate::error::{Error, Result};
use crate::lp::basis::TestFunctionBasis;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum ConstraintFamily {
    /// `∫ [α(φ∘f - φ) + (1-α)(φ(y₀) - φ)] dγ = 0`
    Discounted { alpha: f64, origin: usize },
    /// `∫ (φ∘f - φ) dγ = 0`, over grid pairs only or including the infinity node.
    Stationary { compactified: bool },
}

/// `min c·γ` subject to `A γ = b`, `γ ≥ 0`, with one variable per state–control pair.
///
/// Rows are one per basis function followed by the normalization row `Σ γ = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    pub variables: Vec<Pair>,
    pub objective: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    pub row_names: Vec<String>,
    pub family: ConstraintFamily,
    /// Index of the infinity node when its pairs are variables.
    pub inf: Option<usize>,
}

impl LinearProgram {
    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn is_inf_pair(&self, pair: Pair) -> bool {
        self.inf == Some(pair.state)
    }

    /// Largest absolute row violation of `x`.
    pub fn max_residual(&self, x: &[f64]) -> f64 {
        self.rows
            .iter()
            .zip(&self.rhs)
            .map(|(row, b)| (row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Plain-text standard form for cross-checking with external solvers.
    ///
    /// ```text
    /// minimize
    ///   obj: 0.5 (0,0) + 0.2 (0,1)
    /// subject to
    ///   ind0: -0.5 (0,0) + 0.5 (1,0) = 0
    ///   norm: 1 (0,0) + 1 (0,1) = 1
    /// bounds
    ///   all variables >= 0
    /// end
    /// ```
    pub fn to_standard_form(&self) -> String {
        let name = |p: &Pair| format!("({},{})", p.state, p.control);
        let terms = |coefs: &[f64]| {
            let parts: Vec<String> = coefs
                .iter()
                .zip(&self.variables)
                .filter(|(c, _)| **c != 0.0)
                .map(|(c, p)| format!("{} {}", crate::io::fmt_float(*c), name(p)))
                .collect();
            if parts.is_empty() {
                "0".to_string()
            } else {
                parts.join(" + ")
            }
        };
        let mut out = String::new();
        let _ = writeln!(out, "minimize");
        let _ = writeln!(out, "  obj: {}", terms(&self.objective));
        let _ = writeln!(out, "subject to");
        for ((row, b), rname) in self.rows.iter().zip(&self.rhs).zip(&self.row_names) {
            let _ = writeln!(out, "  {rname}: {} = {}", terms(row), crate::io::fmt_float(*b));
        }
        let _ = writeln!(out, "bounds");
        let _ = writeln!(out, "  all variables >= 0");
        let _ = writeln!(out, "end");
        out
    }
}

fn assemble(
    dsys: &DiscretizedSystem,
    basis: &TestFunctionBasis,
    family: ConstraintFamily,
    coefficient: impl Fn(usize, usize, usize) -> f64,
) -> LinearProgram {
    let variables = dsys.pairs();
    let objective = variables.iter().map(|p| dsys.cost_of(*p).unwrap()).collect();
    let mut rows = Vec::with_capacity(basis.len() + 1);
    let mut row_names = Vec::with_capacity(basis.len() + 1);
    for (k, f) in basis.functions.iter().enumerate() {
        rows.push(
            variables
                .iter()
                .map(|p| coefficient(k, p.state, dsys.next(p.state, p.control).unwrap()))
                .collect(),
        );
        row_names.push(f.name.clone());
    }
    rows.push(vec![1.0; variables.len()]);
    row_names.push("norm".to_string());
    let mut rhs = vec![0.0; basis.len()];
    rhs.push(1.0);
    LinearProgram {
        variables,
        objective,
        rows,
        rhs,
        row_names,
        family,
        inf: dsys.inf(),
    }
}

/// LP over the discounted constraint set from `y0`. Variables are all pairs
/// of `dsys`, infinity pairs included when the system has the node.
pub fn build_discounted_lp(dsys: &DiscretizedSystem, basis: &TestFunctionBasis, alpha: f64, y0: usize) -> Result<LinearProgram> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidDiscount(alpha));
    }
    if y0 >= dsys.num_grid_states() {
        return Err(Error::MalformedLp(format!("initial state {y0} must be a grid state")));
    }
    let family = ConstraintFamily::Discounted { alpha, origin: y0 };
    Ok(assemble(dsys, basis, family, |k, here, next| {
        let f = &basis.functions[k];
        let (at_here, at_next, at_origin) = (f.eval(here), f.eval(next), f.eval(y0));
        alpha * (at_next - at_here) + (1.0 - alpha) * (at_origin - at_here)
    }))
}

/// LP over the stationary constraint set. With `compactified = false` the
/// variables are the pairs of `restrict_to_g(dsys)`; otherwise all pairs of
/// `dsys`, infinity pairs included.
pub fn build_average_lp(dsys: &DiscretizedSystem, basis: &TestFunctionBasis, compactified: bool) -> Result<LinearProgram> {
    let restricted;
    let system = if compactified {
        dsys
    } else {
        restricted = dsys.restrict_to_g()?;
        &restricted
    };
    let family = ConstraintFamily::Stationary { compactified };
    Ok(assemble(system, basis, family, |k, here, next| {
        let f = &basis.functions[k];
        f.eval(next) - f.eval(here)
    }))
}
