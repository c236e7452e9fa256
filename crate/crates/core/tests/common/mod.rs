#![allow(dead_code)]

use std::collections::BTreeMap;

use nigrid::grid::{domain_membership, BatteryParams, Bus, GridScenario, Line};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn line(from: usize, to: usize, psi_bar: f64) -> Line {
    Line {
        from,
        to,
        reactance: 1.0,
        psi_bar,
    }
}

pub fn buses(n: usize, damping: f64) -> Vec<Bus> {
    (1..=n as u32).map(|i| Bus::new(i, 1.0, damping, 1.0, 0.0)).collect()
}

pub fn two_bus(damping: f64) -> GridScenario {
    GridScenario::new(
        buses(2, damping),
        vec![line(0, 1, 0.2)],
        vec![(0.0, 0.0); 2],
        BTreeMap::new(),
    )
    .unwrap()
}

/// Line angles close around the cycle: 0.2 + 0.1 = 0.3.
pub fn triangle(damping: f64) -> GridScenario {
    GridScenario::new(
        buses(3, damping),
        vec![line(0, 1, 0.2), line(1, 2, 0.1), line(0, 2, 0.3)],
        vec![(0.0, 0.0); 3],
        BTreeMap::new(),
    )
    .unwrap()
}

/// Ring 1-2-3-4-5-1 whose line angles sum to zero around the cycle.
pub fn ring5(damping: f64) -> GridScenario {
    let psi = [0.2, 0.1, -0.1, -0.15, -0.05];
    GridScenario::new(
        buses(5, damping),
        (0..5).map(|i| line(i, (i + 1) % 5, psi[i])).collect(),
        vec![(0.0, 0.0); 5],
        BTreeMap::new(),
    )
    .unwrap()
}

pub fn with_battery(s: &GridScenario, k: usize, p: BatteryParams) -> GridScenario {
    let mut b = BTreeMap::new();
    b.insert(k, p);
    GridScenario::new(s.buses.clone(), s.lines.clone(), s.initial.clone(), b).unwrap()
}

pub const DELTA_BOX: f64 = 0.4;
pub const FREQ_BOX: f64 = 0.3;

/// `count` initial conditions with `delta_dev` in `[-0.4, 0.4]` and
/// `freq_dev` in `[-0.3, 0.3]`, kept only when inside both local domains
/// (battery lines excluded).
pub fn sample_initial_conditions(s: &GridScenario, count: usize, seed: u64) -> Vec<Vec<(f64, f64)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let excluded = s.battery_lines();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let ic: Vec<(f64, f64)> = (0..s.buses.len())
            .map(|_| {
                (
                    rng.gen_range(-DELTA_BOX..=DELTA_BOX),
                    rng.gen_range(-FREQ_BOX..=FREQ_BOX),
                )
            })
            .collect();
        let delta: Vec<f64> = ic.iter().map(|p| p.0).collect();
        if domain_membership(s, &delta, &excluded).unwrap().inside() {
            out.push(ic);
        }
    }
    out
}
