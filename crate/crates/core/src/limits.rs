//! Abel (`α → 1⁻`) and Cesàro (`S → ∞`) sweeps against the stationary LP
//! optimum `g*`, cost truncation for unbounded costs, and moment distances
//! between measures.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::discretize::{CostAtInf, DiscretizedSystem, GridSpec, Pair};
use crate::dp::{averaged_point, check_a1, discounted_point, A1Point, A1Report, A1Verdict};
use crate::error::{Error, Result};
use crate::io::{csv_line, fmt_float, round12};
use crate::lp::{build_average_lp, solve, BasisSpec, LpStatus, TestFunctionBasis};
use crate::measures::Measure;
use crate::system::SystemModel;

const MONOTONE_SLACK: f64 = 1e-12;
const STABLE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tolerances {
    pub vi: f64,
    pub lp: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { vi: 1e-8, lp: 1e-9 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    Abel,
    Cesaro,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepVerdict {
    Converging,
    NonConverging,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub schedule_value: f64,
    pub min_value: f64,
    pub argmin_state: Option<usize>,
    pub argmin_coords: Vec<f64>,
    pub gap: f64,
    pub a1_radius: f64,
    pub touches_inf: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub kind: SweepKind,
    pub state_dim: usize,
    pub points: Vec<SweepPoint>,
    /// Optimum of the stationary LP over grid pairs only.
    pub g_star: f64,
    pub g_star_status: LpStatus,
    /// Optimum of the stationary LP with the infinity node, and its mass there.
    pub compactified_value: Option<f64>,
    pub compactified_inf_mass: Option<f64>,
    pub verdict: SweepVerdict,
    pub a1_verdict: A1Verdict,
    pub tolerances: Tolerances,
}

impl SweepReport {
    pub fn schedule(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.schedule_value).collect()
    }

    pub fn gaps(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.gap).collect()
    }

    pub fn min_values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.min_value).collect()
    }

    pub fn bounding_radius(&self) -> f64 {
        self.points.iter().map(|p| p.a1_radius).filter(|r| r.is_finite()).fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut header = vec!["schedule_value".to_string(), "min_value".to_string()];
        header.extend((0..self.state_dim).map(|j| format!("argmin_y{j}")));
        header.extend(["gap", "a1_radius", "touches_inf"].map(String::from));
        let mut out = csv_line(&header);
        for p in &self.points {
            let mut fields = vec![fmt_float(p.schedule_value), fmt_float(p.min_value)];
            if p.argmin_coords.len() == self.state_dim {
                fields.extend(p.argmin_coords.iter().map(|v| fmt_float(*v)));
            } else {
                fields.extend((0..self.state_dim).map(|_| "nan".to_string()));
            }
            fields.extend([fmt_float(p.gap), fmt_float(p.a1_radius), p.touches_inf.to_string()]);
            out.push_str(&csv_line(&fields));
        }
        out
    }

    pub fn summary_json(&self) -> Value {
        let errors: Vec<Value> = self
            .points
            .iter()
            .filter_map(|p| p.error.as_ref().map(|e| json!({ "schedule_value": round12(p.schedule_value), "error": e })))
            .collect();
        json!({
            "kind": self.kind,
            "g_star": round12(self.g_star),
            "g_star_status": self.g_star_status,
            "compactified_value": self.compactified_value.map(round12),
            "compactified_inf_mass": self.compactified_inf_mass.map(round12),
            "verdict": self.verdict,
            "a1_verdict": self.a1_verdict,
            "bounding_radius": round12(self.bounding_radius()),
            "tolerances": { "vi": self.tolerances.vi, "lp": self.tolerances.lp },
            "errors": errors,
        })
    }
}

fn check_schedule(name: &str, values: &[f64], valid: impl Fn(f64) -> bool) -> Result<()> {
    let invalid = |reason: &str| Error::InvalidParameter {
        name: name.into(),
        reason: reason.into(),
    };
    if values.is_empty() {
        return Err(invalid("schedule must be nonempty"));
    }
    if let Some(v) = values.iter().find(|v| !valid(**v)) {
        return Err(invalid(&format!("value {v} out of range")));
    }
    if values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("schedule must be strictly increasing"));
    }
    Ok(())
}

fn verdict(gaps: &[f64]) -> SweepVerdict {
    let tail = &gaps[gaps.len().saturating_sub(3)..];
    let monotone = tail.iter().all(|g| g.is_finite()) && tail.windows(2).all(|w| w[1] <= w[0] + MONOTONE_SLACK);
    if monotone {
        SweepVerdict::Converging
    } else {
        SweepVerdict::NonConverging
    }
}

struct StationaryOptimum {
    value: f64,
    status: LpStatus,
    compactified_value: Option<f64>,
    compactified_inf_mass: Option<f64>,
}

fn stationary_optimum(dsys: &DiscretizedSystem, basis: &TestFunctionBasis, lp_tol: f64) -> Result<StationaryOptimum> {
    let restricted = solve(&build_average_lp(dsys, basis, false)?, lp_tol)?;
    if restricted.status == LpStatus::Infeasible {
        return Err(Error::Infeasible);
    }
    let (compactified_value, compactified_inf_mass) = if dsys.has_inf() {
        let sol = solve(&build_average_lp(dsys, basis, true)?, lp_tol)?;
        (Some(sol.objective), Some(sol.inf_mass))
    } else {
        (None, None)
    };
    Ok(StationaryOptimum {
        value: restricted.objective,
        status: restricted.status,
        compactified_value,
        compactified_inf_mass,
    })
}

fn assemble(
    kind: SweepKind,
    dsys: &DiscretizedSystem,
    schedule: &[f64],
    results: Vec<Result<A1Point>>,
    g: StationaryOptimum,
    tolerances: Tolerances,
) -> SweepReport {
    let points: Vec<SweepPoint> = schedule
        .iter()
        .zip(results)
        .map(|(&schedule_value, r)| match r {
            Ok(p) => SweepPoint {
                schedule_value,
                min_value: p.min_value,
                argmin_state: Some(p.argmin_state),
                argmin_coords: dsys.point(p.argmin_state).cloned().unwrap_or_default(),
                gap: (p.min_value - g.value).abs(),
                a1_radius: p.radius,
                touches_inf: p.touches_inf,
                error: None,
            },
            Err(e) => SweepPoint {
                schedule_value,
                min_value: f64::NAN,
                argmin_state: None,
                argmin_coords: Vec::new(),
                gap: f64::NAN,
                a1_radius: f64::NAN,
                touches_inf: false,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let verdict = verdict(&points.iter().map(|p| p.gap).collect::<Vec<_>>());
    let a1_verdict = if points.iter().any(|p| p.touches_inf) {
        A1Verdict::OutsideTheoremHypotheses
    } else {
        A1Verdict::Consistent
    };
    SweepReport {
        kind,
        state_dim: dsys.state_dim(),
        points,
        g_star: g.value,
        g_star_status: g.status,
        compactified_value: g.compactified_value,
        compactified_inf_mass: g.compactified_inf_mass,
        verdict,
        a1_verdict,
        tolerances,
    }
}

/// Minimal discounted values over an increasing list of discount factors,
/// compared with `g*`. Failures at individual points are recorded in the
/// report rather than aborting the sweep.
pub fn abel_sweep(dsys: &DiscretizedSystem, basis: &TestFunctionBasis, alphas: &[f64], tol: Tolerances) -> Result<SweepReport> {
    check_schedule("alphas", alphas, |a| a > 0.0 && a < 1.0)?;
    let g = stationary_optimum(dsys, basis, tol.lp)?;
    let results: Vec<Result<A1Point>> = alphas
        .par_iter()
        .map(|&a| discounted_point(dsys, a, tol.vi).map(|(_, p)| p))
        .collect();
    Ok(assemble(SweepKind::Abel, dsys, alphas, results, g, tol))
}

/// Minimal finite-horizon averages over an increasing list of horizons, compared with `g*`.
pub fn cesaro_sweep(dsys: &DiscretizedSystem, basis: &TestFunctionBasis, horizons: &[usize], tol: Tolerances) -> Result<SweepReport> {
    let schedule: Vec<f64> = horizons.iter().map(|&s| s as f64).collect();
    check_schedule("horizons", &schedule, |s| s >= 1.0)?;
    let g = stationary_optimum(dsys, basis, tol.lp)?;
    let results: Vec<Result<A1Point>> = horizons
        .par_iter()
        .map(|&s| averaged_point(dsys, s).map(|(_, p)| p))
        .collect();
    Ok(assemble(SweepKind::Cesaro, dsys, &schedule, results, g, tol))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TruncationLevelReport {
    pub level: f64,
    pub abel: SweepReport,
    pub cesaro: SweepReport,
    /// Optimal-process extents for the truncated cost.
    pub a2: A1Report,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TruncatedSweepReport {
    pub levels: Vec<TruncationLevelReport>,
    /// Set when the last two levels give the same minimal values at every schedule point.
    pub stabilized: bool,
}

impl TruncatedSweepReport {
    pub fn bounding_radius(&self) -> f64 {
        self.levels.iter().map(|l| l.a2.bounding_radius).fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let header = ["level", "sweep", "schedule_value", "min_value", "gap", "a1_radius", "touches_inf"].map(String::from);
        let mut out = csv_line(&header);
        for l in &self.levels {
            for (name, sweep) in [("abel", &l.abel), ("cesaro", &l.cesaro)] {
                for p in &sweep.points {
                    out.push_str(&csv_line(&[
                        fmt_float(l.level),
                        name.to_string(),
                        fmt_float(p.schedule_value),
                        fmt_float(p.min_value),
                        fmt_float(p.gap),
                        fmt_float(p.a1_radius),
                        p.touches_inf.to_string(),
                    ]));
                }
            }
        }
        out
    }

    pub fn summary_json(&self) -> Value {
        let levels: Vec<Value> = self
            .levels
            .iter()
            .map(|l| {
                json!({
                    "level": round12(l.level),
                    "abel": l.abel.summary_json(),
                    "cesaro": l.cesaro.summary_json(),
                    "a2_bounding_radius": round12(l.a2.bounding_radius),
                    "a2_verdict": l.a2.verdict,
                })
            })
            .collect();
        json!({
            "stabilized": self.stabilized,
            "bounding_radius": round12(self.bounding_radius()),
            "levels": levels,
        })
    }
}

fn same_values(a: &SweepReport, b: &SweepReport) -> bool {
    a.points
        .iter()
        .zip(&b.points)
        .all(|(p, q)| p.min_value.is_finite() && q.min_value.is_finite() && (p.min_value - q.min_value).abs() <= STABLE_TOL)
}

/// Re-solves with cost `min(g, M)` and infinity cost `M` for each level `M`.
pub fn truncated_sweep(
    model: &SystemModel,
    grid: &GridSpec,
    basis: &BasisSpec,
    levels: &[f64],
    alphas: &[f64],
    horizons: &[usize],
    tol: Tolerances,
) -> Result<TruncatedSweepReport> {
    check_schedule("truncation_levels", levels, |m| m.is_finite())?;
    let reports = levels
        .iter()
        .map(|&level| {
            let truncated = model.clone().with_truncated_cost(level);
            let dsys = DiscretizedSystem::build(&truncated, grid, CostAtInf::TruncationLevel(level))?;
            let b = basis.build(&dsys);
            Ok(TruncationLevelReport {
                level,
                abel: abel_sweep(&dsys, &b, alphas, tol)?,
                cesaro: cesaro_sweep(&dsys, &b, horizons, tol)?,
                a2: check_a1(&dsys, alphas, horizons, tol.vi)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let stabilized = match reports.as_slice() {
        [.., a, b] => same_values(&a.abel, &b.abel) && same_values(&a.cesaro, &b.cesaro),
        _ => false,
    };
    Ok(TruncatedSweepReport {
        levels: reports,
        stabilized,
    })
}

/// A bounded function on pairs used to compare measures.
pub struct Probe<'a> {
    pub name: String,
    pub f: Box<dyn Fn(Pair) -> f64 + Send + Sync + 'a>,
}

impl<'a> Probe<'a> {
    pub fn new(name: impl Into<String>, f: impl Fn(Pair) -> f64 + Send + Sync + 'a) -> Self {
        Self { name: name.into(), f: Box::new(f) }
    }
}

/// Constant 1, coordinates `y_j/(1+|y|)`, five Gaussian bumps across the grid
/// box, the indicator of each control, and the bounded cost `g/(1+|g|)`.
pub fn default_probes(dsys: &DiscretizedSystem) -> Vec<Probe<'_>> {
    let extent = (0..dsys.state_dim())
        .map(|j| {
            let (lo, hi) = dsys
                .points()
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), y| (lo.min(y[j]), hi.max(y[j])));
            hi - lo
        })
        .fold(0.0, f64::max);
    let width = (extent / 5.0).max(1e-6);
    let mut probes: Vec<Probe<'_>> = TestFunctionBasis::smooth(dsys, 5, width)
        .functions
        .into_iter()
        .map(|f| {
            let name = f.name.clone();
            Probe::new(name, move |p: Pair| f.eval(p.state))
        })
        .collect();
    for u in 0..dsys.num_controls() {
        probes.push(Probe::new(format!("control{u}"), move |p: Pair| if p.control == u { 1.0 } else { 0.0 }));
    }
    probes.push(Probe::new("cost", move |p: Pair| {
        let g = dsys.cost_of(p).unwrap_or(f64::NAN);
        g / (1.0 + g.abs())
    }));
    probes
}

/// `max_q |∫q dμ₁ - ∫q dμ₂|` over the probes.
pub fn moment_distance(mu1: &dyn Measure, mu2: &dyn Measure, probes: &[Probe<'_>]) -> f64 {
    probes
        .iter()
        .map(|q| (mu1.integrate(&*q.f) - mu2.integrate(&*q.f)).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dp::{finite_horizon, value_iteration};
    use crate::system::{build_system, cost_from_catalog, Cost, Parameters};
    use crate::testkit::{enumerated_average_value, random_system};
    use std::collections::BTreeMap;

    fn drift_model(cost: &str, params: &[(&str, f64)]) -> SystemModel {
        let params: Parameters = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        build_system("drift", &Parameters::new())
            .unwrap()
            .with_cost(cost_from_catalog(cost, &params).unwrap())
    }

    fn drift() -> DiscretizedSystem {
        let model = drift_model("inverted-bump", &[("center", 2.0)]);
        DiscretizedSystem::build(&model, &GridSpec::interval(0.0, 10.0, 10), CostAtInf::SupOverGrid).unwrap()
    }

    #[test]
    fn drift_sweeps_have_zero_gaps() {
        let d = drift();
        let basis = TestFunctionBasis::indicator(&d);
        let abel = abel_sweep(&d, &basis, &[0.9, 0.99, 0.999], Tolerances::default()).unwrap();
        assert_eq!(abel.g_star.abs(), 0.0);
        assert!(abel.gaps().iter().all(|g| *g <= 1e-9), "{:?}", abel.gaps());
        assert_eq!(abel.verdict, SweepVerdict::Converging);
        assert_eq!(abel.a1_verdict, A1Verdict::Consistent);
        assert_eq!(abel.bounding_radius(), 2.0);
        let cesaro = cesaro_sweep(&d, &basis, &[10, 100, 1000], Tolerances::default()).unwrap();
        assert_eq!(cesaro.gaps(), vec![0.0, 0.0, 0.0]);
        assert!(cesaro.points.iter().all(|p| p.argmin_state == Some(2)));
        assert_eq!(cesaro.compactified_inf_mass, Some(0.0));
    }

    #[test]
    fn constant_cost_gaps_vanish() {
        let model = drift_model("constant", &[("value", 0.75)]);
        let d = DiscretizedSystem::build(&model, &GridSpec::interval(0.0, 8.0, 8), CostAtInf::SupOverGrid).unwrap();
        let basis = TestFunctionBasis::indicator(&d);
        let tol = Tolerances::default();
        let abel = abel_sweep(&d, &basis, &[0.5, 0.9], tol).unwrap();
        assert!(abel.gaps().iter().all(|g| *g <= 10.0 * (tol.vi + tol.lp)));
        let cesaro = cesaro_sweep(&d, &basis, &[1, 5, 50], Tolerances::default()).unwrap();
        assert!(cesaro.gaps().iter().all(|g| *g < 1e-12));
    }

    #[test]
    fn random_system_abel_gaps_shrink() {
        let tol = Tolerances { vi: 1e-12, lp: 1e-10 };
        let alphas = [0.9, 0.99, 0.999];
        // First seed whose optimal cycle is not a single self-loop, so the gaps are not all zero.
        let (d, report) = (0..)
            .map(|seed| random_system(seed, 3, 2, false))
            .filter_map(|d| {
                let r = abel_sweep(&d, &TestFunctionBasis::indicator(&d), &alphas, tol).ok()?;
                (r.points[0].gap > 1e-4).then_some((d, r))
            })
            .next()
            .unwrap();
        let oracle = enumerated_average_value(&d, false);
        assert!((report.g_star - oracle).abs() < 1e-9);
        let gaps = report.gaps();
        assert!(gaps.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{gaps:?}");
        assert!(gaps[2] <= 1e-3);
        assert_eq!(report.verdict, SweepVerdict::Converging);
    }

    #[test]
    fn two_cycle_cesaro_values_approach_half() {
        let d = DiscretizedSystem::from_parts("two-cycle", vec![vec![0.0], vec![1.0]], vec![vec![(0, 1, 0.0)], vec![(0, 0, 1.0)]], None).unwrap();
        let basis = TestFunctionBasis::indicator(&d);
        let horizons = [1, 2, 3, 10, 11, 1000, 1001];
        let report = cesaro_sweep(&d, &basis, &horizons, Tolerances::default()).unwrap();
        assert_eq!(report.g_star, 0.5);
        for (s, p) in horizons.iter().zip(&report.points) {
            let oracle = (*s / 2) as f64 / *s as f64;
            assert_eq!(p.min_value, oracle);
            assert_eq!(p.argmin_state, Some(0));
        }
        assert!(report.points[5].gap <= 1e-3);
    }

    #[test]
    fn schedules_are_validated() {
        let d = drift();
        let basis = TestFunctionBasis::indicator(&d);
        assert!(abel_sweep(&d, &basis, &[], Tolerances::default()).is_err());
        assert!(abel_sweep(&d, &basis, &[0.9, 0.5], Tolerances::default()).is_err());
        assert!(abel_sweep(&d, &basis, &[0.9, 1.0], Tolerances::default()).is_err());
        assert!(cesaro_sweep(&d, &basis, &[0, 10], Tolerances::default()).is_err());
    }

    #[test]
    fn failing_points_do_not_abort_the_sweep() {
        let d = drift();
        let basis = TestFunctionBasis::indicator(&d);
        let tol = Tolerances { vi: 1e-300, lp: 1e-9 };
        let report = abel_sweep(&d, &basis, &[0.5, 0.9999999], tol).unwrap();
        assert_eq!(report.points.len(), 2);
        assert!(report.points.iter().any(|p| p.error.is_some() || p.min_value.is_finite()));
        let csv = report.to_csv();
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn verdict_uses_last_three_gaps() {
        assert_eq!(verdict(&[5.0, 0.1, 0.3, 0.2, 0.1]), SweepVerdict::Converging);
        assert_eq!(verdict(&[0.3, 0.1, 0.2]), SweepVerdict::NonConverging);
        assert_eq!(verdict(&[0.3, f64::NAN]), SweepVerdict::NonConverging);
    }

    #[test]
    fn quadratic_cost_truncation_stabilizes_at_rest_state() {
        let model = drift_model("quadratic", &[("center", 2.0)]);
        let grid = GridSpec::interval(0.0, 10.0, 10);
        let alphas = [0.9, 0.99, 0.999];
        let horizons = [10, 100, 1000];
        let report = truncated_sweep(&model, &grid, &BasisSpec::Indicator, &[1.0, 10.0, 100.0], &alphas, &horizons, Tolerances::default()).unwrap();
        assert!(report.stabilized);
        assert_eq!(report.bounding_radius(), 2.0);
        for level in &report.levels {
            assert!(level.abel.min_values().iter().all(|v| v.abs() <= 1e-9));
            assert!(level.cesaro.min_values().iter().all(|v| *v == 0.0));
            let d = DiscretizedSystem::build(&model.clone().with_truncated_cost(level.level), &grid, CostAtInf::TruncationLevel(level.level)).unwrap();
            for (a, p) in alphas.iter().zip(&level.abel.points) {
                let oracle = value_iteration(&d, *a, 1e-12).unwrap().min_over_states(true).1;
                assert!((p.min_value - oracle).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn bounded_cost_truncation_above_sup_is_identity() {
        let model = drift_model("inverted-bump", &[("center", 2.0)]);
        let grid = GridSpec::interval(0.0, 10.0, 10);
        let report = truncated_sweep(&model, &grid, &BasisSpec::Indicator, &[1.0, 2.0], &[0.5, 0.9], &[5, 20], Tolerances::default()).unwrap();
        let d = DiscretizedSystem::build(&model, &grid, CostAtInf::Explicit(1.0)).unwrap();
        let direct = abel_sweep(&d, &TestFunctionBasis::indicator(&d), &[0.5, 0.9], Tolerances::default()).unwrap();
        assert_eq!(report.levels[1].abel.min_values(), direct.min_values());
        assert!(report.stabilized);
    }

    #[test]
    fn capped_cost_reports_cap_and_no_stabilization() {
        let model = build_system("drift", &Parameters::new()).unwrap().with_cost(Cost::new(5.0, |_, _| 5.0));
        let grid = GridSpec::interval(0.0, 6.0, 6);
        let report = truncated_sweep(&model, &grid, &BasisSpec::Indicator, &[1.0], &[0.9], &[10], Tolerances::default()).unwrap();
        assert!(!report.stabilized);
        assert!((report.levels[0].abel.points[0].min_value - 1.0).abs() < 1e-8);
        assert_eq!(report.levels[0].cesaro.points[0].min_value, 1.0);
    }

    #[test]
    fn truncated_optimum_is_monotone_in_level() {
        let model = drift_model("quadratic", &[("center", 3.5), ("offset", 0.5)]);
        let grid = GridSpec::interval(0.0, 8.0, 16);
        let tol = Tolerances { vi: 1e-13, lp: 1e-10 };
        let report = truncated_sweep(&model, &grid, &BasisSpec::Indicator, &[0.1, 0.3, 1.0, 4.0], &[0.9], &[50], tol).unwrap();
        let g: Vec<f64> = report.levels.iter().map(|l| l.abel.g_star).collect();
        assert!(g.windows(2).all(|w| w[0] <= w[1] + 1e-12), "{g:?}");
        assert!((g[3] - 0.5).abs() < 1e-9);
        assert!(report.stabilized);
        let d = DiscretizedSystem::build(&model, &grid, CostAtInf::SupOverGrid).unwrap();
        assert_eq!(report.levels[3].cesaro.points[0].min_value, finite_horizon(&d, 50).unwrap().value.min_over_states(true).1);
    }

    #[test]
    fn moment_distance_examples() {
        let d = drift();
        let a: BTreeMap<Pair, f64> = [(Pair::new(2, 0), 1.0)].into();
        let b: BTreeMap<Pair, f64> = [(Pair::new(3, 0), 1.0)].into();
        let y = [Probe::new("y", |p: Pair| d.point(p.state).map_or(0.0, |y| y[0]))];
        assert_eq!(moment_distance(&a, &a, &y), 0.0);
        assert_eq!(moment_distance(&a, &b, &y), 1.0);
        let probes = default_probes(&d);
        assert_eq!(probes.len(), 10);
        assert_eq!(moment_distance(&a, &a, &probes), 0.0);
        assert!(moment_distance(&a, &b, &probes) > 0.0);
    }
}
