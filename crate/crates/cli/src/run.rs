//! Experiment dispatch and artifact writing.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use occulp::discretize::{CostAtInf, DiscretizedSystem, Policy};
use occulp::dp::{finite_horizon, greedy_policy, value_iteration, ValueFunction};
use occulp::io::{fmt_float, measure_csv, measure_json, round12, value_csv};
use occulp::limits::{abel_sweep, cesaro_sweep, truncated_sweep, SweepReport, Tolerances};
use occulp::lp::{build_average_lp, build_discounted_lp, solve, verify_eq_res1, LPSolution, LpStatus, TestFunctionBasis};
use occulp::measures::{averaging_measure, constraint_residual, discounted_measure, Measure, ResidualMode};
use occulp::system::{build_system, cost_from_catalog, norm, SystemModel};
use serde_json::{json, Value};

use crate::config::{emit_config, Experiment, RunConfig};

/// What a finished experiment produced.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub experiment: Experiment,
    pub output_dir: PathBuf,
    pub files: Vec<String>,
    /// `false` when the experiment ran but its checks failed.
    pub passed: bool,
    pub headline: String,
}

struct Artifacts {
    dir: PathBuf,
    files: Vec<String>,
}

impl Artifacts {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn write_json(&mut self, name: &str, value: &Value) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, &text)
    }
}

/// The model with the configured cost, and its discretization.
pub struct Setup {
    pub model: SystemModel,
    pub dsys: DiscretizedSystem,
    pub basis: TestFunctionBasis,
    pub tolerances: Tolerances,
    pub initial: Option<usize>,
}

/// Model with the configured cost but without truncation.
pub fn base_model(config: &RunConfig) -> Result<SystemModel> {
    let mut model = build_system(&config.system.name, &config.system.parameters)?;
    if let Some(cost) = &config.cost {
        model = model.with_cost(cost_from_catalog(&cost.name, &cost.parameters)?);
    }
    Ok(model)
}

/// Grid state closest to `y` (lowest index among equals).
pub fn nearest_state(dsys: &DiscretizedSystem, y: &[f64]) -> usize {
    let mut best = (0, f64::INFINITY);
    for (s, p) in dsys.points().iter().enumerate() {
        let d: Vec<f64> = p.iter().zip(y).map(|(a, b)| a - b).collect();
        let dist = norm(&d);
        if dist < best.1 {
            best = (s, dist);
        }
    }
    best.0
}

pub fn setup(config: &RunConfig) -> Result<Setup> {
    let mut model = base_model(config)?;
    let truncation = config.cost.as_ref().and_then(|c| c.truncation);
    if let Some(level) = truncation {
        model = model.with_truncated_cost(level);
    }
    let rule = config.cost_at_inf.unwrap_or(match truncation {
        Some(level) => CostAtInf::TruncationLevel(level),
        None => CostAtInf::SupOverGrid,
    });
    let dsys = DiscretizedSystem::build(&model, &config.grid, rule)?;
    let basis = config.basis.build(&dsys);
    let initial = config.initial_state.as_deref().map(|y| nearest_state(&dsys, y));
    Ok(Setup {
        model,
        dsys,
        basis,
        tolerances: Tolerances {
            vi: config.tolerances.vi_tol,
            lp: config.tolerances.lp_tol,
        },
        initial,
    })
}

/// Runs the configured experiment and writes its artifacts to `config.output_dir`.
pub fn execute(config: &RunConfig) -> Result<RunSummary> {
    let mut out = Artifacts::new(&config.output_dir)?;
    out.write("config.json", &(emit_config(config) + "\n"))?;
    let (passed, headline) = match config.experiment {
        Experiment::Simulate => simulate(config, &mut out)?,
        Experiment::ValueIter => value_iter(config, &mut out)?,
        Experiment::FiniteHorizon => horizon_values(config, &mut out)?,
        Experiment::SolveLp => solve_lp(config, &mut out)?,
        Experiment::SweepAbel | Experiment::SweepCesaro => sweep(config, &mut out)?,
        Experiment::SweepTruncated => sweep_truncated(config, &mut out)?,
        Experiment::Verify => verify(config, &mut out)?,
    };
    let manifest = json!({
        "experiment": config.experiment,
        "passed": passed,
        "headline": headline,
        "files": out.files.clone(),
    });
    out.write_json("run.json", &manifest)?;
    Ok(RunSummary {
        experiment: config.experiment,
        output_dir: out.dir,
        files: out.files,
        passed,
        headline,
    })
}

fn coords(dsys: &DiscretizedSystem, state: usize) -> Value {
    match dsys.point(state) {
        Some(y) => Value::Array(y.iter().map(|v| round12(*v)).collect()),
        None => json!("inf"),
    }
}

fn value_summary(dsys: &DiscretizedSystem, vf: &ValueFunction, initial: Option<usize>) -> Value {
    let (argmin, min_value) = vf.min_over_states(true);
    json!({
        "kind": vf.kind,
        "min_value": round12(min_value),
        "argmin_state": argmin,
        "argmin_coords": coords(dsys, argmin),
        "initial_value": initial.map(|s| round12(vf.value(s))),
        "residual": round12(vf.residual),
        "sweeps": vf.sweeps,
    })
}

fn simulate(config: &RunConfig, out: &mut Artifacts) -> Result<(bool, String)> {
    let s = setup(config)?;
    let u = config.policy.ok_or_else(|| anyhow!("simulate requires a policy"))?;
    if u >= s.model.controls().len() {
        bail!("policy control {u} out of range (system has {} controls)", s.model.controls().len());
    }
    let y0 = config.initial_state.clone().unwrap_or_default();
    let horizon = *config.schedules.horizons.iter().max().unwrap_or(&0);
    let path = s.model.simulate(&y0, |_, _| u, horizon)?;
    let mut csv = String::from("t,");
    csv.push_str(&(0..s.model.state_dim()).map(|j| format!("y{j}")).collect::<Vec<_>>().join(","));
    csv.push_str(",control,cost\n");
    for (t, (y, control)) in path.iter().enumerate() {
        let ys: Vec<String> = y.iter().map(|v| fmt_float(*v)).collect();
        csv.push_str(&format!("{t},{},{control},{}\n", ys.join(","), fmt_float(s.model.running_cost(y, *control))));
    }
    out.write("trajectory.csv", &csv)?;

    let start = s.initial.unwrap_or(0);
    let policy = Policy::constant(&s.dsys, u);
    let mut measures = Vec::new();
    for &h in &config.schedules.horizons {
        let mu = averaging_measure(&s.dsys, start, &policy, h)?;
        out.write(&format!("measure_averaging_S{h}.csv"), &measure_csv(&s.dsys, &mu))?;
        measures.push(measure_json(&s.dsys, &mu));
    }
    for &a in &config.schedules.alphas {
        let mu = discounted_measure(&s.dsys, start, &policy, a)?;
        out.write(&format!("measure_discounted_alpha{}.csv", fmt_float(a)), &measure_csv(&s.dsys, &mu))?;
        measures.push(measure_json(&s.dsys, &mu));
    }
    out.write_json("measures.json", &json!({ "initial_state": start, "control": u, "measures": measures }))?;
    Ok((true, format!("simulated {} steps under constant control {u}", path.len())))
}

fn value_iter(config: &RunConfig, out: &mut Artifacts) -> Result<(bool, String)> {
    let s = setup(config)?;
    let mut summaries = Vec::new();
    for &a in &config.schedules.alphas {
        let vf = value_iteration(&s.dsys, a, s.tolerances.vi)?;
        out.write(&format!("values_alpha{}.csv", fmt_float(a)), &value_csv(&s.dsys, &vf))?;
        summaries.push(value_summary(&s.dsys, &vf, s.initial));
    }
    out.write_json("values.json", &json!({ "values": summaries }))?;
    Ok((true, format!("value iteration for {} discount factors", config.schedules.alphas.len())))
}

fn horizon_values(config: &RunConfig, out: &mut Artifacts) -> Result<(bool, String)> {
    let s = setup(config)?;
    let mut summaries = Vec::new();
    for &h in &config.schedules.horizons {
        let sol = finite_horizon(&s.dsys, h)?;
        out.write(&format!("values_S{h}.csv"), &value_csv(&s.dsys, &sol.value))?;
        summaries.push(value_summary(&s.dsys, &sol.value, s.initial));
    }
    out.write_json("values.json", &json!({ "values": summaries }))?;
    Ok((true, format!("finite-horizon values for {} horizons", config.schedules.horizons.len())))
}

fn lp_summary(name: &str, sol: &LPSolution) -> Value {
    json!({
        "name": name,
        "status": sol.status,
        "objective": round12(sol.objective),
        "max_residual": round12(sol.max_residual),
        "certificate": round12(sol.certificate),
        "duality_gap": round12(sol.duality_gap),
        "inf_mass": round12(sol.inf_mass),
        "iterations": sol.iterations,
    })
}

fn solve_lp(config: &RunConfig, out: &mut Artifacts) -> Result<(bool, String)> {
    let s = setup(config)?;
    let tol = s.tolerances.lp;
    let mut summaries = Vec::new();

    let lp = build_average_lp(&s.dsys, &s.basis, false)?;
    out.write("lp_average.txt", &lp.to_standard_form())?;
    let average = solve(&lp, tol)?;
    out.write("lp_average.csv", &measure_csv(&s.dsys, &average))?;
    summaries.push(lp_summary("average", &average));

    if s.dsys.has_inf() {
        let sol = solve(&build_average_lp(&s.dsys, &s.basis, true)?, tol)?;
        out.write("lp_average_compactified.csv", &measure_csv(&s.dsys, &sol))?;
        summaries.push(lp_summary("average-compactified", &sol));
    }
    if let Some(y0) = s.initial {
        for &a in &config.schedules.alphas {
            let sol = solve(&build_discounted_lp(&s.dsys, &s.basis, a, y0)?, tol)?;
            let name = format!("discounted_alpha{}", fmt_float(a));
            out.write(&format!("lp_{name}.csv"), &measure_csv(&s.dsys, &sol))?;
            summaries.push(lp_summary(&name, &sol));
        }
    }
    out.write_json("lp_summary.json", &json!({ "basis": s.basis.name, "solutions": summaries }))?;
    if !average.is_optimal() {
        bail!("stationary LP finished with status {:?}", average.status);
    }
    Ok((true, format!("stationary LP optimum {}", fmt_float(average.objective))))
}

fn write_sweep(out: &mut Artifacts, name: &str, report: &SweepReport) -> Result<String> {
    out.write(&format!("{name}.csv"), &report.to_csv())?;
    out.write_json(&format!("{name}.json"), &report.summary_json())?;
    let last = report.points.last().map_or(f64::NAN, |p| p.gap);
    Ok(format!(
        "{name}: g* = {}, final gap {}, {:?}",
        fmt_float(report.g_star),
        fmt_float(last),
        report.verdict
    ))
}

fn sweep(config: &RunConfig, out: &mut Artifacts) -> Result<(bool, String)> {
    let s = setup(config)?;
    let headline = if config.experiment == Experiment::SweepAbel {
        let report = abel_sweep(&s.dsys, &s.basis, &config.schedules.alphas, s.tolerances)?;
        write_sweep(out, "sweep_abel", &report)?
    } else {
        let report = cesaro_sweep(&s.dsys, &s.basis, &config.schedules.horizons, s.tolerances)?;
        write_sweep(out, "sweep_cesaro", &report)?
    };
    Ok((true, headline))
}

fn sweep_truncated(config: &RunConfig, out: &mut Artifacts) -> Result<(bool, String)> {
    let model = base_model(config)?;
    let tol = Tolerances {
        vi: config.tolerances.vi_tol,
        lp: config.tolerances.lp_tol,
    };
    let sch = &config.schedules;
    let report = truncated_sweep(&model, &config.grid, &config.basis, &sch.truncation_levels, &sch.alphas, &sch.horizons, tol)?;
    out.write("sweep_truncated.csv", &report.to_csv())?;
    out.write_json("sweep_truncated.json", &report.summary_json())?;
    Ok((
        true,
        format!(
            "truncated sweep over {} levels, stabilized: {}, bounding radius {}",
            report.levels.len(),
            report.stabilized,
            fmt_float(report.bounding_radius())
        ),
    ))
}

struct Check {
    name: String,
    value: f64,
    tolerance: f64,
}

impl Check {
    fn passed(&self) -> bool {
        self.value <= self.tolerance
    }

    fn to_json(&self) -> Value {
        json!({
            "name": self.name,
            "value": round12(self.value),
            "tolerance": self.tolerance,
            "passed": self.passed(),
        })
    }
}

fn verify(config: &RunConfig, out: &mut Artifacts) -> Result<(bool, String)> {
    let s = setup(config)?;
    let tol = s.tolerances;
    let y0 = s.initial.unwrap_or(0);
    let mut checks = Vec::new();
    for &a in &config.schedules.alphas {
        let tag = fmt_float(a);
        let report = verify_eq_res1(&s.dsys, &s.basis, a, y0, 10.0 * (tol.vi + tol.lp))?;
        checks.push(Check {
            name: format!("eq-res1 alpha={tag}"),
            value: if report.lp_status == LpStatus::Optimal { nan_as_fail(report.difference) } else { f64::INFINITY },
            tolerance: report.tolerance,
        });

        let sol = solve(&build_discounted_lp(&s.dsys, &s.basis, a, y0)?, tol.lp)?;
        checks.push(Check {
            name: format!("lp residual alpha={tag}"),
            value: nan_as_fail(sol.max_residual),
            tolerance: tol.lp,
        });
        checks.push(Check {
            name: format!("lp certificate alpha={tag}"),
            value: nan_as_fail(sol.certificate),
            tolerance: tol.lp,
        });

        let vf = value_iteration(&s.dsys, a, tol.vi)?;
        let mu = discounted_measure(&s.dsys, y0, &greedy_policy(&s.dsys, &vf)?, a)?;
        let mode = ResidualMode::Discounted { alpha: a, origin: y0 };
        let worst = s
            .basis
            .functions
            .iter()
            .map(|f| constraint_residual(&mu, &s.dsys, &|st| f.eval(st), mode).abs())
            .fold(0.0, f64::max);
        checks.push(Check {
            name: format!("measure residual alpha={tag}"),
            value: nan_as_fail(worst),
            tolerance: tol.lp,
        });
        checks.push(Check {
            name: format!("measure normalization alpha={tag}"),
            value: (mu.total_mass() - 1.0).abs(),
            tolerance: 1e-12,
        });
    }
    let all = checks.iter().all(Check::passed);
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed()).map(|c| c.name.as_str()).collect();
    out.write_json(
        "verify.json",
        &json!({
            "initial_state": y0,
            "passed": all,
            "checks": checks.iter().map(Check::to_json).collect::<Vec<_>>(),
        }),
    )?;
    let headline = if all {
        format!("all {} checks passed", checks.len())
    } else {
        format!("failed checks: {}", failed.join(", "))
    };
    Ok((all, headline))
}

fn nan_as_fail(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}
