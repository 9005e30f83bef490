//! Brute-force oracles shared by unit tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::discretize::{DiscretizedSystem, Policy};
use crate::measures::{discounted_measure, eventual_cycle, Measure};

/// Random deterministic system on `n` states with every control admissible everywhere.
pub fn random_system(seed: u64, n: usize, m: usize, with_inf: bool) -> DiscretizedSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let targets = if with_inf { n + 1 } else { n };
    let transitions = (0..n)
        .map(|_| (0..m).map(|u| (u, rng.random_range(0..targets), rng.random::<f64>())).collect())
        .collect();
    let points = (0..n).map(|i| vec![i as f64]).collect();
    DiscretizedSystem::from_parts("random", points, transitions, with_inf.then_some(0.5)).unwrap()
}

/// Every stationary policy of a system whose states all admit controls `0..m`.
pub fn all_policies(dsys: &DiscretizedSystem) -> Vec<Policy> {
    let choices: Vec<Vec<usize>> = (0..dsys.num_states()).map(|s| dsys.controls_of(s).collect()).collect();
    let mut out = vec![Vec::new()];
    for c in &choices {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<usize>| {
                c.iter().map(move |u| {
                    let mut p = prefix.clone();
                    p.push(*u);
                    p
                })
            })
            .collect();
    }
    out.into_iter().map(Policy::new).collect()
}

pub fn enumerated_discounted_value(dsys: &DiscretizedSystem, y0: usize, alpha: f64) -> f64 {
    all_policies(dsys)
        .iter()
        .map(|p| {
            let mu = discounted_measure(dsys, y0, p, alpha).unwrap();
            mu.integrate(&|pair| dsys.cost_of(pair).unwrap())
        })
        .fold(f64::INFINITY, f64::min)
}

/// Smallest mean cost of a cycle reachable by any stationary policy from any state.
pub fn enumerated_average_value(dsys: &DiscretizedSystem, include_inf: bool) -> f64 {
    let mut best = f64::INFINITY;
    for p in all_policies(dsys) {
        for y0 in 0..dsys.num_states() {
            let (states, start) = eventual_cycle(dsys, y0, &p).unwrap();
            let cycle = &states[start..];
            if !include_inf && cycle.iter().any(|s| dsys.is_inf(*s)) {
                continue;
            }
            let mean = cycle.iter().map(|s| dsys.transition(*s, p.control(*s)).unwrap().cost).sum::<f64>() / cycle.len() as f64;
            best = best.min(mean);
        }
    }
    best
}
