use serde::{Deserialize, Serialize};

use crate::discretize::DiscretizedSystem;
use crate::system::norm;

/// A function on the states of a discretized system that extends continuously
/// to the infinity node, i.e. it has a declared finite value there.
#[derive(Clone, Debug, PartialEq)]
pub struct TestFunction {
    pub name: String,
    /// Values on grid states, indexed like the system's points.
    pub values: Vec<f64>,
    pub at_inf: f64,
}

impl TestFunction {
    /// Value at a state index; indices past the grid states denote the infinity node.
    pub fn eval(&self, state: usize) -> f64 {
        self.values.get(state).copied().unwrap_or(self.at_inf)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TestFunctionBasis {
    pub name: String,
    pub functions: Vec<TestFunction>,
}

fn bounding_box(dsys: &DiscretizedSystem) -> (Vec<f64>, Vec<f64>) {
    let dim = dsys.state_dim();
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for y in dsys.points() {
        for j in 0..dim {
            lo[j] = lo[j].min(y[j]);
            hi[j] = hi[j].max(y[j]);
        }
    }
    (lo, hi)
}

/// Direction in which `y/|y|` is evaluated at infinity: toward the box corner
/// farthest from the origin.
fn escape_direction(dsys: &DiscretizedSystem) -> Vec<f64> {
    let (lo, hi) = bounding_box(dsys);
    let corner: Vec<f64> = lo
        .iter()
        .zip(&hi)
        .map(|(l, h)| if h.abs() >= l.abs() { *h } else { *l })
        .collect();
    let n = norm(&corner);
    if n == 0.0 {
        vec![0.0; corner.len()]
    } else {
        corner.into_iter().map(|c| c / n).collect()
    }
}

fn mapped_coordinates(dsys: &DiscretizedSystem) -> Vec<TestFunction> {
    let dir = escape_direction(dsys);
    (0..dsys.state_dim())
        .map(|j| TestFunction {
            name: format!("coord{j}"),
            values: dsys.points().iter().map(|y| y[j] / (1.0 + norm(y))).collect(),
            at_inf: dir[j],
        })
        .collect()
}

/// `count` Gaussian bumps `exp(-|y - c|² / (2 w²))` with centers spread along
/// the diagonal of the grid's bounding box; each vanishes at infinity.
fn gaussian_bumps(dsys: &DiscretizedSystem, count: usize, width: f64) -> Vec<TestFunction> {
    let (lo, hi) = bounding_box(dsys);
    (0..count)
        .map(|k| {
            let frac = (k as f64 + 0.5) / count as f64;
            let center: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| l + frac * (h - l)).collect();
            let values = dsys
                .points()
                .iter()
                .map(|y| {
                    let d2: f64 = y.iter().zip(&center).map(|(a, b)| (a - b).powi(2)).sum();
                    (-d2 / (2.0 * width * width)).exp()
                })
                .collect();
            TestFunction {
                name: format!("bump{k}"),
                values,
                at_inf: 0.0,
            }
        })
        .collect()
}

impl TestFunctionBasis {
    /// One indicator per grid state (zero at infinity). With this basis the
    /// finite LPs are exactly the classical flow-balance LPs.
    pub fn indicator(dsys: &DiscretizedSystem) -> Self {
        let n = dsys.num_grid_states();
        let functions = (0..n)
            .map(|s| {
                let mut values = vec![0.0; n];
                values[s] = 1.0;
                TestFunction {
                    name: format!("ind{s}"),
                    values,
                    at_inf: 0.0,
                }
            })
            .collect();
        Self {
            name: "indicator".into(),
            functions,
        }
    }

    /// Constant 1, the mapped coordinates `y_j/(1+|y|)`, and `bumps` Gaussian bumps of the given width.
    pub fn smooth(dsys: &DiscretizedSystem, bumps: usize, width: f64) -> Self {
        let n = dsys.num_grid_states();
        let mut functions = vec![TestFunction {
            name: "one".into(),
            values: vec![1.0; n],
            at_inf: 1.0,
        }];
        functions.extend(mapped_coordinates(dsys));
        functions.extend(gaussian_bumps(dsys, bumps, width));
        Self {
            name: format!("smooth({bumps},{width})"),
            functions,
        }
    }

    /// Concatenation of two bases.
    pub fn union(mut self, other: TestFunctionBasis) -> Self {
        self.name = format!("{}+{}", self.name, other.name);
        self.functions.extend(other.functions);
        self
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }
}

/// Recipe for a basis, resolved against a concrete system with [`BasisSpec::build`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BasisSpec {
    #[default]
    Indicator,
    Smooth { count: usize, width: f64 },
}

impl BasisSpec {
    pub fn build(&self, dsys: &DiscretizedSystem) -> TestFunctionBasis {
        match self {
            BasisSpec::Indicator => TestFunctionBasis::indicator(dsys),
            BasisSpec::Smooth { count, width } => TestFunctionBasis::smooth(dsys, *count, *width),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::{CostAtInf, GridSpec};
    use crate::system::{build_system, Parameters};

    fn drift() -> DiscretizedSystem {
        let model = build_system("drift", &Parameters::new()).unwrap();
        DiscretizedSystem::build(&model, &GridSpec::interval(0.0, 10.0, 10), CostAtInf::SupOverGrid).unwrap()
    }

    #[test]
    fn indicator_basis_shape() {
        let d = drift();
        let b = TestFunctionBasis::indicator(&d);
        assert_eq!(b.len(), 11);
        let inf = d.inf().unwrap();
        for (s, f) in b.functions.iter().enumerate() {
            assert_eq!(f.eval(s), 1.0);
            assert_eq!(f.eval(inf), 0.0);
            assert_eq!(f.values.iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn smooth_basis_has_declared_limits() {
        let d = drift();
        let b = TestFunctionBasis::smooth(&d, 5, 1.5);
        assert_eq!(b.len(), 7);
        let inf = d.inf().unwrap();
        assert_eq!(b.functions[0].eval(inf), 1.0);
        assert_eq!(b.functions[1].eval(inf), 1.0);
        assert!((b.functions[1].eval(10) - 10.0 / 11.0).abs() < 1e-15);
        assert!(b.functions[2..].iter().all(|f| f.at_inf == 0.0));
        assert!(b.functions.iter().all(|f| f.values.iter().all(|v| v.is_finite())));
    }
}
