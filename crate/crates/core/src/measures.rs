//! Discounted and averaging occupational measures generated by processes on a
//! [`DiscretizedSystem`], plus integration against them.
//!
//! A discounted measure puts weight `(1-α) Σ_t α^t` on each pair the process
//! visits at times `t`; an averaging measure puts `(visits before S) / S`.
//! On a finite deterministic system a stationary policy yields an eventually
//! periodic trajectory, so the discounted geometric series has a closed form.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::discretize::{DiscretizedSystem, Pair, Policy};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MeasureKind {
    Discounted { alpha: f64 },
    Averaging { horizon: usize },
}

/// Anything that assigns nonnegative weights to finitely many pairs.
pub trait Measure {
    fn weights(&self) -> &BTreeMap<Pair, f64>;

    fn total_mass(&self) -> f64 {
        self.weights().values().sum()
    }

    /// `∫ q dμ` as a weighted sum over the support, in pair order.
    fn integrate(&self, q: &dyn Fn(Pair) -> f64) -> f64 {
        self.weights().iter().map(|(p, w)| w * q(*p)).sum()
    }

    fn mass_where(&self, region: &dyn Fn(Pair) -> bool) -> f64 {
        self.weights().iter().filter(|(p, _)| region(**p)).map(|(_, w)| w).sum()
    }
}

impl Measure for BTreeMap<Pair, f64> {
    fn weights(&self) -> &BTreeMap<Pair, f64> {
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OccupationalMeasure {
    weights: BTreeMap<Pair, f64>,
    #[serde(skip)]
    counts: Option<BTreeMap<Pair, u64>>,
    pub kind: MeasureKind,
    pub origin: usize,
    /// `true` for closed-form / counting construction; `false` for truncated summation.
    pub exact: bool,
    /// Mass discarded by truncation before renormalizing (0 when exact).
    pub tail_tolerance: f64,
}

impl Measure for OccupationalMeasure {
    fn weights(&self) -> &BTreeMap<Pair, f64> {
        &self.weights
    }

    /// Averaging measures sum visit counts first and divide once, so masses
    /// of regions are exact rationals rounded a single time.
    fn mass_where(&self, region: &dyn Fn(Pair) -> bool) -> f64 {
        match (&self.counts, self.kind) {
            (Some(counts), MeasureKind::Averaging { horizon }) => {
                let hits: u64 = counts.iter().filter(|(p, _)| region(**p)).map(|(_, c)| c).sum();
                hits as f64 / horizon as f64
            }
            _ => self.weights.iter().filter(|(p, _)| region(**p)).map(|(_, w)| w).sum(),
        }
    }
}

impl OccupationalMeasure {
    pub fn support(&self) -> impl Iterator<Item = Pair> + '_ {
        self.weights.keys().copied()
    }

    pub fn weight(&self, pair: Pair) -> f64 {
        self.weights.get(&pair).copied().unwrap_or(0.0)
    }

    /// Visit counts behind an averaging measure.
    pub fn visit_counts(&self) -> Option<&BTreeMap<Pair, u64>> {
        self.counts.as_ref()
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidDiscount(alpha))
    }
}

fn check_state(dsys: &DiscretizedSystem, state: usize) -> Result<()> {
    if state < dsys.num_states() {
        Ok(())
    } else {
        Err(Error::StateOutOfRange(state))
    }
}

/// Pre-period and cycle of the trajectory of a stationary policy from `y0`.
///
/// Returns the visited states in order and the time at which the cycle starts;
/// the cycle consists of `states[cycle_start..]`.
pub fn eventual_cycle(dsys: &DiscretizedSystem, y0: usize, policy: &Policy) -> Result<(Vec<usize>, usize)> {
    check_state(dsys, y0)?;
    let mut first_visit = vec![None; dsys.num_states()];
    let mut states = Vec::new();
    let mut s = y0;
    while first_visit[s].is_none() {
        first_visit[s] = Some(states.len());
        states.push(s);
        s = dsys.successor(s, policy.control(s))?;
    }
    Ok((states, first_visit[s].unwrap()))
}

/// Exact discounted occupational measure of a stationary policy from `y0`.
///
/// The pair visited at pre-period time `t` gets `(1-α)α^t`; a pair at cycle
/// time `t` (cycle length `c`) gets `(1-α)α^t / (1-α^c)`.
pub fn discounted_measure(dsys: &DiscretizedSystem, y0: usize, policy: &Policy, alpha: f64) -> Result<OccupationalMeasure> {
    check_alpha(alpha)?;
    let (states, cycle_start) = eventual_cycle(dsys, y0, policy)?;
    let cycle_len = states.len() - cycle_start;
    // 1 - α^c without cancellation
    let cycle_factor = -((cycle_len as f64) * alpha.ln()).exp_m1();
    let mut weights = BTreeMap::new();
    let mut power = 1.0;
    for (t, &s) in states.iter().enumerate() {
        let mut w = (1.0 - alpha) * power;
        if t >= cycle_start {
            w /= cycle_factor;
        }
        *weights.entry(Pair::new(s, policy.control(s))).or_insert(0.0) += w;
        power *= alpha;
    }
    Ok(OccupationalMeasure {
        weights,
        counts: None,
        kind: MeasureKind::Discounted { alpha },
        origin: y0,
        exact: true,
        tail_tolerance: 0.0,
    })
}

/// Discounted measure by summing the first `T = ⌈ln ε / ln α⌉` terms and
/// renormalizing. Used as an independent check on [`discounted_measure`].
pub fn discounted_measure_truncated(
    dsys: &DiscretizedSystem,
    y0: usize,
    policy: &Policy,
    alpha: f64,
    tail: f64,
) -> Result<OccupationalMeasure> {
    check_alpha(alpha)?;
    check_state(dsys, y0)?;
    if !(tail > 0.0 && tail < 1.0) {
        return Err(Error::InvalidParameter {
            name: "tail".into(),
            reason: "must lie in (0,1)".into(),
        });
    }
    let horizon = (tail.ln() / alpha.ln()).ceil().max(1.0) as usize;
    let mut weights = BTreeMap::new();
    let mut s = y0;
    let mut power = 1.0;
    let mut total = 0.0;
    for _ in 0..horizon {
        let u = policy.control(s);
        let w = (1.0 - alpha) * power;
        *weights.entry(Pair::new(s, u)).or_insert(0.0) += w;
        total += w;
        power *= alpha;
        s = dsys.successor(s, u)?;
    }
    for w in weights.values_mut() {
        *w /= total;
    }
    Ok(OccupationalMeasure {
        weights,
        counts: None,
        kind: MeasureKind::Discounted { alpha },
        origin: y0,
        exact: false,
        tail_tolerance: tail,
    })
}

fn averaging_from_counts(counts: BTreeMap<Pair, u64>, horizon: usize, y0: usize) -> OccupationalMeasure {
    let weights = counts
        .iter()
        .map(|(p, c)| (*p, *c as f64 / horizon as f64))
        .collect();
    OccupationalMeasure {
        weights,
        counts: Some(counts),
        kind: MeasureKind::Averaging { horizon },
        origin: y0,
        exact: true,
        tail_tolerance: 0.0,
    }
}

/// Averaging occupational measure of a stationary policy over `t = 0..S-1`.
pub fn averaging_measure(dsys: &DiscretizedSystem, y0: usize, policy: &Policy, horizon: usize) -> Result<OccupationalMeasure> {
    if horizon == 0 {
        return Err(Error::InvalidHorizon);
    }
    check_state(dsys, y0)?;
    let mut counts = BTreeMap::new();
    let mut s = y0;
    for _ in 0..horizon {
        let u = policy.control(s);
        *counts.entry(Pair::new(s, u)).or_insert(0) += 1;
        s = dsys.successor(s, u)?;
    }
    Ok(averaging_from_counts(counts, horizon, y0))
}

/// Averaging occupational measure of an open-loop control sequence; `S` is its length.
pub fn averaging_measure_open_loop(dsys: &DiscretizedSystem, y0: usize, controls: &[usize]) -> Result<OccupationalMeasure> {
    if controls.is_empty() {
        return Err(Error::InvalidHorizon);
    }
    check_state(dsys, y0)?;
    let mut counts = BTreeMap::new();
    let mut s = y0;
    for &u in controls {
        let next = dsys.successor(s, u)?;
        *counts.entry(Pair::new(s, u)).or_insert(0) += 1;
        s = next;
    }
    Ok(averaging_from_counts(counts, controls.len(), y0))
}

/// Which linear constraint family a residual is measured against.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ResidualMode {
    /// `∫ [α(φ(f) - φ(y)) + (1-α)(φ(y₀) - φ(y))] dγ`
    Discounted { alpha: f64, origin: usize },
    /// `∫ (φ(f) - φ(y)) dγ`
    Stationary,
}

/// Value of the constraint integral for test function `phi` (indexed by state,
/// infinity node included). Pairs outside `dsys` make the result NaN.
pub fn constraint_residual(mu: &dyn Measure, dsys: &DiscretizedSystem, phi: &dyn Fn(usize) -> f64, mode: ResidualMode) -> f64 {
    mu.weights()
        .iter()
        .map(|(p, w)| {
            let Some(next) = dsys.next(p.state, p.control) else {
                return f64::NAN;
            };
            let here = phi(p.state);
            let drift = phi(next) - here;
            let integrand = match mode {
                ResidualMode::Stationary => drift,
                ResidualMode::Discounted { alpha, origin } => alpha * drift + (1.0 - alpha) * (phi(origin) - here),
            };
            w * integrand
        })
        .sum()
}
