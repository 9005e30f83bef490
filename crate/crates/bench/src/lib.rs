//! Shared fixtures for the criterion benches.

use occulp::system::{build_system, cost_from_catalog, Parameters};
use occulp::{CostAtInf, DiscretizedSystem, GridSpec};

/// Drift system on `[0, upper]` with unit steps and `g(y) = 1 - 1/(1+(y-2)²)`.
pub fn drift(upper: usize) -> DiscretizedSystem {
    let params: Parameters = [("center".to_string(), 2.0)].into_iter().collect();
    let model = build_system("drift", &Parameters::new())
        .unwrap()
        .with_cost(cost_from_catalog("inverted-bump", &params).unwrap());
    DiscretizedSystem::build(&model, &GridSpec::interval(0.0, upper as f64, upper), CostAtInf::SupOverGrid).unwrap()
}

