//! Finite linear programs over occupational measures.
//!
//! Constraints are generated by a finite family of test functions that extend
//! continuously to the infinity node. With the indicator basis the programs
//! reduce to the classical flow-balance LPs of a finite deterministic system.

mod basis;
mod program;
mod simplex;

use serde::Serialize;

pub use basis::{BasisSpec, TestFunction, TestFunctionBasis};
pub use program::{build_average_lp, build_discounted_lp, ConstraintFamily, LinearProgram};
pub use simplex::{solve, LPSolution, LpStatus};

use crate::discretize::DiscretizedSystem;
use crate::dp::value_iteration;
use crate::error::Result;
use crate::measures::Measure;

/// Comparison of the discounted LP optimum with the value-iteration value at
/// the same initial state.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EqRes1Report {
    pub alpha: f64,
    pub origin: usize,
    pub lp_value: f64,
    pub dp_value: f64,
    pub difference: f64,
    pub lp_status: LpStatus,
    pub tolerance: f64,
    pub passed: bool,
}

/// Solves the discounted LP from `y0` and checks `|LP - V_α(y0)| ≤ tol`.
pub fn verify_eq_res1(dsys: &DiscretizedSystem, basis: &TestFunctionBasis, alpha: f64, y0: usize, tol: f64) -> Result<EqRes1Report> {
    let lp = build_discounted_lp(dsys, basis, alpha, y0)?;
    let sol = solve(&lp, (tol / 10.0).min(1e-9))?;
    let vf = value_iteration(dsys, alpha, tol / 10.0)?;
    let dp_value = vf.value(y0);
    let difference = (sol.objective - dp_value).abs();
    Ok(EqRes1Report {
        alpha,
        origin: y0,
        lp_value: sol.objective,
        dp_value,
        difference,
        lp_status: sol.status,
        tolerance: tol,
        passed: sol.is_optimal() && difference <= tol,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InfinityMassProfile {
    pub radii: Vec<f64>,
    /// Mass on pairs whose state lies farther than each radius from the origin
    /// (the infinity node counts as infinitely far).
    pub mass_outside: Vec<f64>,
    pub inf_mass: f64,
    /// Mass on grid pairs whose successor is the infinity node.
    pub escaping_mass: f64,
    pub supported_on_g: bool,
}

pub fn infinity_mass_profile(mu: &dyn Measure, dsys: &DiscretizedSystem, radii: &[f64], tol: f64) -> InfinityMassProfile {
    let mass_outside = radii
        .iter()
        .map(|r| mu.mass_where(&|p| dsys.radius(p.state) > *r))
        .collect();
    let inf_mass = mu.mass_where(&|p| dsys.is_inf(p.state));
    let escaping_mass = mu.mass_where(&|p| !dsys.is_inf(p.state) && dsys.next(p.state, p.control).is_some_and(|n| dsys.is_inf(n)));
    InfinityMassProfile {
        radii: radii.to_vec(),
        mass_outside,
        inf_mass,
        escaping_mass,
        supported_on_g: inf_mass <= tol && escaping_mass <= tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::{CostAtInf, GridSpec, Pair, Policy};
    use crate::dp::greedy_policy;
    use crate::measures::{constraint_residual, discounted_measure, ResidualMode};
    use crate::system::{build_system, cost_from_catalog, Parameters};
    use crate::testkit::{enumerated_average_value, enumerated_discounted_value, random_system};
    use proptest::prelude::*;

    fn drift(upper: f64) -> DiscretizedSystem {
        let model = build_system("drift", &Parameters::new()).unwrap();
        DiscretizedSystem::build(&model, &GridSpec::interval(0.0, upper, upper as usize), CostAtInf::SupOverGrid).unwrap()
    }

    fn hand_lp(objective: Vec<f64>, rows: Vec<Vec<f64>>, rhs: Vec<f64>) -> LinearProgram {
        let n = objective.len();
        LinearProgram {
            variables: (0..n).map(|j| Pair::new(j, 0)).collect(),
            objective,
            row_names: (0..rows.len()).map(|r| format!("r{r}")).collect(),
            rows,
            rhs,
            family: ConstraintFamily::Stationary { compactified: false },
            inf: None,
        }
    }

    #[test]
    fn one_variable_lp() {
        let sol = solve(&hand_lp(vec![3.0], vec![vec![1.0]], vec![1.0]), 1e-12).unwrap();
        assert!(sol.is_optimal());
        assert_eq!(sol.objective, 3.0);
        assert_eq!(sol.values, vec![1.0]);
        assert_eq!(sol.duals, vec![3.0]);
    }

    #[test]
    fn textbook_lp_with_slacks() {
        // max 3a + 5b s.t. a ≤ 4, 2b ≤ 12, 3a + 2b ≤ 18: optimum a=2, b=6, value 36.
        let lp = hand_lp(
            vec![-3.0, -5.0, 0.0, 0.0, 0.0],
            vec![
                vec![1.0, 0.0, 1.0, 0.0, 0.0],
                vec![0.0, 2.0, 0.0, 1.0, 0.0],
                vec![3.0, 2.0, 0.0, 0.0, 1.0],
            ],
            vec![4.0, 12.0, 18.0],
        );
        let sol = solve(&lp, 1e-12).unwrap();
        assert!(sol.is_optimal());
        assert!((sol.objective + 36.0).abs() < 1e-12);
        assert!((sol.values[0] - 2.0).abs() < 1e-12 && (sol.values[1] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let infeasible = hand_lp(vec![1.0, 1.0], vec![vec![1.0, 1.0], vec![1.0, 1.0]], vec![1.0, 2.0]);
        assert_eq!(solve(&infeasible, 1e-9).unwrap().status, LpStatus::Infeasible);
        let unbounded = hand_lp(vec![-1.0, 0.0], vec![vec![1.0, -1.0]], vec![1.0]);
        assert_eq!(solve(&unbounded, 1e-9).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn redundant_rows_are_tolerated() {
        let lp = hand_lp(vec![2.0, 1.0], vec![vec![1.0, 1.0], vec![2.0, 2.0], vec![0.0, 0.0]], vec![1.0, 2.0, 0.0]);
        let sol = solve(&lp, 1e-12).unwrap();
        assert!(sol.is_optimal());
        assert_eq!(sol.objective, 1.0);
    }

    #[test]
    fn rejects_malformed_lp() {
        let lp = hand_lp(vec![1.0], vec![vec![1.0, 2.0]], vec![1.0]);
        assert!(matches!(solve(&lp, 1e-9), Err(crate::Error::MalformedLp(_))));
    }

    #[test]
    fn fixed_point_system_picks_cheapest_control() {
        let mut params = Parameters::new();
        params.insert("u_count".into(), 3.0);
        let model = build_system("fixed-point", &params).unwrap();
        let grid = GridSpec::interval(-1.0, 1.0, 4);
        let d = DiscretizedSystem::build(&model, &grid, CostAtInf::SupOverGrid).unwrap();
        let basis = TestFunctionBasis::indicator(&d);
        for y0 in 0..d.num_grid_states() {
            let sol = solve(&build_discounted_lp(&d, &basis, 0.7, y0).unwrap(), 1e-10).unwrap();
            let cheapest = d.transitions(y0).iter().map(|t| t.cost).fold(f64::INFINITY, f64::min);
            assert!(sol.is_optimal());
            assert!((sol.objective - cheapest).abs() < 1e-10);
        }
    }

    #[test]
    fn drift_discounted_lp_matches_greedy_measure() {
        let d = drift(10.0);
        let basis = TestFunctionBasis::indicator(&d);
        let alpha = 0.9;
        let sol = solve(&build_discounted_lp(&d, &basis, alpha, 5).unwrap(), 1e-10).unwrap();
        let vf = value_iteration(&d, alpha, 1e-13).unwrap();
        let greedy = discounted_measure(&d, 5, &greedy_policy(&d, &vf).unwrap(), alpha).unwrap();
        let cost = |p: Pair| d.cost_of(p).unwrap();
        assert!(sol.is_optimal());
        assert!((sol.objective - greedy.integrate(&cost)).abs() < 1e-9);
        assert!((sol.objective - 0.9).abs() < 1e-9);
        assert!(sol.inf_mass.abs() < 1e-12);
    }

    #[test]
    fn constant_cost_lp_value_is_that_constant() {
        let model = build_system("drift", &Parameters::new())
            .unwrap()
            .with_cost(cost_from_catalog("constant", &Parameters::from([("value".to_string(), 2.5)])).unwrap());
        let d = DiscretizedSystem::build(&model, &GridSpec::interval(0.0, 6.0, 6), CostAtInf::SupOverGrid).unwrap();
        let basis = TestFunctionBasis::indicator(&d);
        for alpha in [0.3, 0.9, 0.99] {
            let sol = solve(&build_discounted_lp(&d, &basis, alpha, 4).unwrap(), 1e-10).unwrap();
            assert!((sol.objective - 2.5).abs() < 1e-10);
        }
        let avg = solve(&build_average_lp(&d, &basis, false).unwrap(), 1e-10).unwrap();
        assert!((avg.objective - 2.5).abs() < 1e-10);
    }

    #[test]
    fn drift_average_lp_is_point_mass_at_rest_state() {
        let d = drift(10.0);
        let basis = TestFunctionBasis::indicator(&d);
        let sol = solve(&build_average_lp(&d, &basis, false).unwrap(), 1e-9).unwrap();
        assert!(sol.is_optimal());
        assert!(sol.objective.abs() <= 1e-9);
        assert_eq!(sol.weights.len(), 1);
        assert!((sol.weights[&Pair::new(2, 0)] - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn drift_stationary_feasible_set_lives_on_rest_control() {
        // Only control 0 (stay) can support a stationary measure on the grid.
        let d = drift(10.0);
        let lp = build_average_lp(&d, &TestFunctionBasis::indicator(&d), false).unwrap();
        for (j, p) in lp.variables.iter().enumerate() {
            let mut probe = lp.clone();
            probe.objective = vec![0.0; lp.num_variables()];
            probe.objective[j] = -1.0;
            let sol = solve(&probe, 1e-10).unwrap();
            let max_mass = -sol.objective;
            if p.control == 0 {
                assert!((max_mass - 1.0).abs() < 1e-10);
            } else {
                assert!(max_mass.abs() < 1e-10, "pair {p:?} carries {max_mass}");
            }
        }
    }

    #[test]
    fn compactified_lp_admits_point_mass_at_infinity() {
        let d = drift(10.0);
        let lp = build_average_lp(&d, &TestFunctionBasis::indicator(&d), true).unwrap();
        let inf = d.inf().unwrap();
        let x: Vec<f64> = lp.variables.iter().map(|p| if *p == Pair::new(inf, 0) { 1.0 } else { 0.0 }).collect();
        assert_eq!(lp.max_residual(&x), 0.0);
        let sol = solve(&lp, 1e-9).unwrap();
        let restricted = solve(&build_average_lp(&d, &TestFunctionBasis::indicator(&d), false).unwrap(), 1e-9).unwrap();
        assert!(sol.objective <= restricted.objective + 1e-12);
    }

    #[test]
    fn two_cycle_has_unique_stationary_measure() {
        let d = DiscretizedSystem::from_parts("two-cycle", vec![vec![0.0], vec![1.0]], vec![vec![(0, 1, 0.0)], vec![(0, 0, 1.0)]], None).unwrap();
        let sol = solve(&build_average_lp(&d, &TestFunctionBasis::indicator(&d), false).unwrap(), 1e-12).unwrap();
        assert!((sol.objective - 0.5).abs() < 1e-12);
        assert!((sol.weights[&Pair::new(0, 0)] - 0.5).abs() < 1e-12);
        assert!((sol.weights[&Pair::new(1, 0)] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn random_three_state_lp_matches_enumeration() {
        let d = random_system(7, 3, 2, false);
        let basis = TestFunctionBasis::indicator(&d);
        for y0 in 0..3 {
            let sol = solve(&build_discounted_lp(&d, &basis, 0.9, y0).unwrap(), 1e-10).unwrap();
            assert!((sol.objective - enumerated_discounted_value(&d, y0, 0.9)).abs() < 1e-9);
        }
    }

    #[test]
    fn standard_form_export_names_pairs() {
        let d = DiscretizedSystem::from_parts("two-cycle", vec![vec![0.0], vec![1.0]], vec![vec![(0, 1, 0.0)], vec![(0, 0, 1.0)]], None).unwrap();
        let text = build_average_lp(&d, &TestFunctionBasis::indicator(&d), false).unwrap().to_standard_form();
        assert_eq!(
            text,
            "minimize\n  obj: 1 (1,0)\nsubject to\n  ind0: -1 (0,0) + 1 (1,0) = 0\n  ind1: 1 (0,0) + -1 (1,0) = 0\n  norm: 1 (0,0) + 1 (1,0) = 1\nbounds\n  all variables >= 0\nend\n"
        );
    }

    #[test]
    fn eq_res1_check_on_drift() {
        let d = drift(10.0);
        let basis = TestFunctionBasis::indicator(&d);
        for (alpha, y0) in [(0.5, 0), (0.9, 5), (0.99, 10)] {
            let report = verify_eq_res1(&d, &basis, alpha, y0, 1e-7).unwrap();
            assert!(report.passed, "{report:?}");
        }
    }

    #[test]
    fn infinity_profile_flags_escaping_measures() {
        let d = drift(10.0);
        let escaping = discounted_measure(&d, 8, &Policy::constant(&d, 1), 0.5).unwrap();
        let profile = infinity_mass_profile(&escaping, &d, &[5.0, 9.0], 1e-12);
        assert!(!profile.supported_on_g);
        assert!((profile.inf_mass - 0.125).abs() < 1e-15);
        assert!((profile.escaping_mass - 0.125).abs() < 1e-15);
        assert!((profile.mass_outside[0] - 1.0).abs() < 1e-15);
        assert!((profile.mass_outside[1] - 0.25).abs() < 1e-15);
        let resting = discounted_measure(&d, 2, &Policy::constant(&d, 0), 0.5).unwrap();
        assert!(infinity_mass_profile(&resting, &d, &[5.0], 1e-12).supported_on_g);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn discounted_lp_agrees_with_enumeration_and_dp(seed in any::<u64>(), n in 3usize..7, m in 2usize..4,
                                                          alpha in prop::sample::select(vec![0.5, 0.9, 0.99]),
                                                          with_inf in any::<bool>()) {
            let d = random_system(seed, n, m, with_inf);
            let y0 = (seed % n as u64) as usize;
            let sol = solve(&build_discounted_lp(&d, &TestFunctionBasis::indicator(&d), alpha, y0).unwrap(), 1e-10).unwrap();
            prop_assert!(sol.is_optimal());
            let oracle = enumerated_discounted_value(&d, y0, alpha);
            prop_assert!((sol.objective - oracle).abs() < 1e-8, "{} vs {}", sol.objective, oracle);
            let vf = value_iteration(&d, alpha, 1e-12).unwrap();
            prop_assert!((vf.value(y0) - oracle).abs() < 1e-8);
        }

        #[test]
        fn average_lps_agree_with_cycle_enumeration(seed in any::<u64>(), n in 3usize..7, m in 2usize..4, with_inf in any::<bool>()) {
            let d = random_system(seed, n, m, with_inf);
            let basis = TestFunctionBasis::indicator(&d);
            let full = solve(&build_average_lp(&d, &basis, true).unwrap(), 1e-10).unwrap();
            prop_assert!(full.is_optimal());
            prop_assert!((full.objective - enumerated_average_value(&d, true)).abs() < 1e-9);
            let restricted_oracle = enumerated_average_value(&d, false);
            match build_average_lp(&d, &basis, false) {
                Ok(lp) => {
                    let sol = solve(&lp, 1e-10).unwrap();
                    if restricted_oracle.is_finite() {
                        prop_assert!((sol.objective - restricted_oracle).abs() < 1e-9);
                        prop_assert!(full.objective <= sol.objective + 1e-12);
                    } else {
                        prop_assert_eq!(sol.status, LpStatus::Infeasible);
                    }
                }
                Err(_) => prop_assert!(restricted_oracle.is_infinite()),
            }
        }

        #[test]
        fn exact_measures_are_lp_feasible(seed in any::<u64>(), n in 3usize..7, m in 1usize..4,
                                          alpha in 0.05f64..0.99, with_inf in any::<bool>()) {
            use rand::{Rng, SeedableRng};
            let d = random_system(seed, n, m, with_inf);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
            let policy = Policy::new((0..d.num_states()).map(|_| rng.random_range(0..m)).collect());
            let y0 = (seed % n as u64) as usize;
            let mu = discounted_measure(&d, y0, &policy, alpha).unwrap();
            let lp = build_discounted_lp(&d, &TestFunctionBasis::smooth(&d, 3, 1.0).union(TestFunctionBasis::indicator(&d)), alpha, y0).unwrap();
            let x: Vec<f64> = lp.variables.iter().map(|p| mu.weight(*p)).collect();
            prop_assert!(lp.max_residual(&x) < 1e-9);
            for f in &TestFunctionBasis::smooth(&d, 3, 1.0).functions {
                let r = constraint_residual(&mu, &d, &|s| f.eval(s), ResidualMode::Discounted { alpha, origin: y0 });
                prop_assert!(r.abs() < 1e-9);
            }
        }

        #[test]
        fn larger_basis_never_lowers_the_optimum(seed in any::<u64>(), n in 3usize..7, m in 2usize..4, alpha in 0.3f64..0.95) {
            let d = random_system(seed, n, m, true);
            let y0 = (seed % n as u64) as usize;
            let small = TestFunctionBasis::smooth(&d, 2, 1.0);
            let large = small.clone().union(TestFunctionBasis::indicator(&d));
            let a = solve(&build_discounted_lp(&d, &small, alpha, y0).unwrap(), 1e-10).unwrap();
            let b = solve(&build_discounted_lp(&d, &large, alpha, y0).unwrap(), 1e-10).unwrap();
            prop_assert!(a.is_optimal() && b.is_optimal());
            prop_assert!(a.objective <= b.objective + 1e-10);
            prop_assert!((b.objective - enumerated_discounted_value(&d, y0, alpha)).abs() < 1e-8);
        }
    }
}
