//! Lossless transmission grid in deviation coordinates.
//!
//! Each generator bus follows the swing equation
//!
//! ```text
//! M_i d''_i + D_i d'_i = P^M_i + P^ST_i - P^L_i - sum_j Pmax_ij sin(d_i - d_j)
//! ```
//!
//! Around an equilibrium with line angles `psi_bar`, the deviations
//! `(w_i, d_i) = (freq_dev, delta_dev)` split into linear node plants
//!
//! ```text
//! x = (w, d),  x' = [[-D/M, 0], [1, 0]] x + [1/M, 0]^T u,  y = d
//! ```
//!
//! and static line controllers `y = Pmax (sin psi_bar - sin(u + psi_bar))`
//! fed by `u = d_from - d_to`. A line may instead carry a battery-backed
//! first-order controller (`tau`, `K1`, `K2`) that acts as a virtual line.
//!
//! Units: powers in per-unit, angles in radians, time in seconds.
//!
//! The bus plants are linear with state `(w, d)`, output `d` and input
//! entering `w'`. A constant output forces `w = 0` and hence a constant
//! state, and a constant state forces a constant input (`u = D w`), so both
//! observability-like and input-effect conditions required of node plants
//! hold.

use std::collections::{BTreeMap, VecDeque};
use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::network::{InterconnectedSystem, NetworkTopology};
use crate::sim::InitialState;
use crate::systems::DynamicSystem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: u32,
    /// Inertia `M`.
    pub inertia: f64,
    /// Damping `D`.
    pub damping: f64,
    /// Internal voltage magnitude `E0`.
    pub voltage: f64,
    /// Load `P^L`.
    pub load: f64,
    /// Mechanical injection `P^M`; derived by [`compute_equilibrium`].
    pub mechanical: f64,
    /// Pre-fault battery output.
    pub battery_baseline: f64,
}

impl Bus {
    pub fn new(id: u32, inertia: f64, damping: f64, voltage: f64, load: f64) -> Self {
        Self {
            id,
            inertia,
            damping,
            voltage,
            load,
            mechanical: 0.0,
            battery_baseline: 0.0,
        }
    }
}

/// Oriented line between bus indices `from -> to`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub from: usize,
    pub to: usize,
    pub reactance: f64,
    /// Equilibrium angle difference `d_from - d_to`.
    pub psi_bar: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatteryParams {
    pub tau: f64,
    pub k1: f64,
    pub k2: f64,
}

impl BatteryParams {
    pub fn new(tau: f64, k1: f64, k2: f64) -> Result<Self> {
        let p = Self { tau, k1, k2 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "battery controller requires tau > 0, got tau = {}",
                self.tau
            )));
        }
        if !(self.k1 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "battery controller requires K1 > 0, got K1 = {}",
                self.k1
            )));
        }
        if !(self.k2 > self.k1) {
            return Err(Error::InvalidParameter(format!(
                "battery controller requires K2 > K1, got K1 = {}, K2 = {}",
                self.k1, self.k2
            )));
        }
        Ok(())
    }

    /// Steady-state margin `gamma = K2 - K1`.
    pub fn steady_state_margin(&self) -> f64 {
        self.k2 - self.k1
    }
}

/// Validated grid. Build through [`GridScenario::new`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridScenario {
    pub buses: Vec<Bus>,
    pub lines: Vec<Line>,
    /// Nominal angular frequency; deviations are simulated, so it is carried
    /// along but does not enter the dynamics.
    pub nominal_frequency: f64,
    /// Per bus `(delta_dev, freq_dev)` at `t = 0`.
    pub initial: Vec<(f64, f64)>,
    /// Battery controllers keyed by line index.
    pub batteries: BTreeMap<usize, BatteryParams>,
    topology: NetworkTopology,
}

pub const DEFAULT_NOMINAL_FREQUENCY: f64 = 2.0 * PI * 50.0;

impl GridScenario {
    pub fn new(
        buses: Vec<Bus>,
        lines: Vec<Line>,
        initial: Vec<(f64, f64)>,
        batteries: BTreeMap<usize, BatteryParams>,
    ) -> Result<Self> {
        for b in &buses {
            if !(b.inertia > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "bus {}: inertia M must be positive, got {}",
                    b.id, b.inertia
                )));
            }
            if !(b.damping >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "bus {}: damping D must be nonnegative, got {}",
                    b.id, b.damping
                )));
            }
            if !(b.voltage > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "bus {}: voltage E0 must be positive, got {}",
                    b.id, b.voltage
                )));
            }
        }
        for (l, line) in lines.iter().enumerate() {
            if !(line.reactance > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "line {}: reactance X must be positive, got {}",
                    l + 1,
                    line.reactance
                )));
            }
        }
        check_len("grid scenario: initial deviations", buses.len(), initial.len())?;
        let topology = NetworkTopology::new(buses.len(), lines.iter().map(|l| (l.from, l.to)).collect())?;
        for (&k, p) in &batteries {
            if k >= lines.len() {
                return Err(Error::InvalidParameter(format!(
                    "battery edge references line {} which does not exist",
                    k + 1
                )));
            }
            p.validate()
                .map_err(|e| Error::InvalidParameter(format!("battery on line {}: {e}", k + 1)))?;
        }
        Ok(Self {
            buses,
            lines,
            nominal_frequency: DEFAULT_NOMINAL_FREQUENCY,
            initial,
            batteries,
            topology,
        })
    }

    pub fn topology(&self) -> &NetworkTopology {
        &self.topology
    }

    /// `Pmax = E_from E_to / X` of line `l`.
    pub fn pmax(&self, l: usize) -> f64 {
        let line = &self.lines[l];
        self.buses[line.from].voltage * self.buses[line.to].voltage / line.reactance
    }

    pub fn battery_lines(&self) -> Vec<usize> {
        self.batteries.keys().copied().collect()
    }

    pub fn is_damped(&self) -> bool {
        self.buses.iter().all(|b| b.damping > 0.0)
    }

    /// Line angle deviations `delta_from - delta_to`.
    pub fn psi_dev(&self, delta: &[f64]) -> Vec<f64> {
        self.lines.iter().map(|l| delta[l.from] - delta[l.to]).collect()
    }

    /// Flow deviation from the equilibrium flow on line `l`.
    pub fn flow_dev(&self, l: usize, psi_dev: f64) -> f64 {
        let psi = self.lines[l].psi_bar;
        self.pmax(l) * ((psi_dev + psi).sin() - psi.sin())
    }

    /// Power balance mismatch per bus at the equilibrium angles.
    pub fn equilibrium_residuals(&self) -> Vec<f64> {
        let mut r: Vec<f64> = self
            .buses
            .iter()
            .map(|b| b.mechanical + b.battery_baseline - b.load)
            .collect();
        for (l, line) in self.lines.iter().enumerate() {
            let flow = self.pmax(l) * line.psi_bar.sin();
            r[line.from] -= flow;
            r[line.to] += flow;
        }
        r
    }

    /// Same scenario with line `l` reoriented: endpoints swap and
    /// `psi_bar` changes sign.
    pub fn with_flipped_line(&self, l: usize) -> Result<Self> {
        if l >= self.lines.len() {
            return Err(Error::RejectedInput(format!("line index {l} out of range")));
        }
        let mut s = self.clone();
        let line = &mut s.lines[l];
        std::mem::swap(&mut line.from, &mut line.to);
        line.psi_bar = -line.psi_bar;
        s.topology = self.topology.with_flipped_edge(l)?;
        Ok(s)
    }

    /// Closed-loop initial state: plant states `(freq_dev, delta_dev)` per
    /// bus and zero battery states.
    pub fn initial_state(&self) -> InitialState {
        InitialState {
            x_p: self.initial.iter().flat_map(|&(d, w)| [w, d]).collect(),
            x_c: vec![0.0; self.batteries.len()],
        }
    }

    pub fn with_initial(&self, initial: Vec<(f64, f64)>) -> Result<Self> {
        check_len("grid scenario: initial deviations", self.buses.len(), initial.len())?;
        let mut s = self.clone();
        s.initial = initial;
        Ok(s)
    }

    /// Swing deviation dynamics written directly per bus, without the
    /// plant/controller split. State layout: `(w_i, d_i)` per bus, then one
    /// state per battery line in line order.
    pub fn deviation_rhs(&self) -> impl Fn(&[f64], &mut [f64]) + '_ {
        let n = self.buses.len();
        let pmax: Vec<f64> = (0..self.lines.len()).map(|l| self.pmax(l)).collect();
        let battery_slot: Vec<Option<(usize, BatteryParams)>> = (0..self.lines.len())
            .map(|l| self.batteries.get(&l).map(|p| (self.batteries.range(..l).count(), *p)))
            .collect();
        move |x: &[f64], dx: &mut [f64]| {
            let mut net = vec![0.0; n];
            for (l, line) in self.lines.iter().enumerate() {
                let psi_dev = x[2 * line.from + 1] - x[2 * line.to + 1];
                let flow_term = pmax[l] * (line.psi_bar.sin() - (psi_dev + line.psi_bar).sin());
                // Each end sees its own oriented flow term.
                net[line.from] += flow_term;
                net[line.to] -= flow_term;
                if let Some((slot, p)) = battery_slot[l] {
                    let xc = x[2 * n + slot];
                    let p_from = battery_power_command(1, xc, psi_dev, pmax[l], line.psi_bar, &p);
                    let p_to = battery_power_command(-1, xc, psi_dev, pmax[l], line.psi_bar, &p);
                    net[line.from] += p_from;
                    net[line.to] += p_to;
                    dx[2 * n + slot] = (-xc + p.k1 * psi_dev) / p.tau;
                }
            }
            for (i, b) in self.buses.iter().enumerate() {
                let w = x[2 * i];
                dx[2 * i] = (net[i] - b.damping * w) / b.inertia;
                dx[2 * i + 1] = w;
            }
        }
    }

    /// Direct-form state matching [`Self::deviation_rhs`].
    pub fn deviation_state(&self) -> Vec<f64> {
        let s = self.initial_state();
        s.x_p.into_iter().chain(s.x_c).collect()
    }
}

/// Active power on a lossless line: `E_i E_j / X * sin(angle_diff)`.
pub fn branch_flow(e_i: f64, e_j: f64, reactance: f64, angle_diff: f64) -> Result<f64> {
    if !(reactance > 0.0) {
        return Err(Error::RejectedInput(format!(
            "line reactance must be positive, got {reactance}"
        )));
    }
    Ok(e_i * e_j / reactance * angle_diff.sin())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub max_residual: f64,
    /// Largest `|psi_bar|` mismatch around a cycle. Zero when the line
    /// angles come from actual bus angles.
    pub max_cycle_residual: f64,
    /// `(line index, mismatch)` for non-tree lines whose cycle does not close.
    pub open_cycles: Vec<(usize, f64)>,
    /// Lines with `|psi_bar| >= pi/2`.
    pub unstable_branch_lines: Vec<usize>,
    /// Buses with `D = 0`.
    pub undamped_buses: Vec<usize>,
}

const CYCLE_TOL: f64 = 1e-12;

/// Fills `P^M` so every bus balances at the equilibrium angles.
pub fn compute_equilibrium(scenario: &GridScenario) -> (GridScenario, EquilibriumReport) {
    let mut s = scenario.clone();
    for b in s.buses.iter_mut() {
        b.mechanical = 0.0;
    }
    let r = s.equilibrium_residuals();
    for (b, ri) in s.buses.iter_mut().zip(&r) {
        b.mechanical = -ri;
    }
    let max_residual = s.equilibrium_residuals().iter().fold(0.0f64, |a, v| a.max(v.abs()));

    // Assign bus angles along a BFS tree; non-tree lines expose cycle gaps.
    let n = s.buses.len();
    let adj = s.topology.adjacency();
    let mut angle = vec![f64::NAN; n];
    let mut tree = vec![false; s.lines.len()];
    angle[0] = 0.0;
    let mut queue = VecDeque::from([0]);
    while let Some(i) = queue.pop_front() {
        for &(j, l) in &adj[i] {
            if angle[j].is_nan() {
                let line = &s.lines[l];
                angle[j] = if line.from == i {
                    angle[i] - line.psi_bar
                } else {
                    angle[i] + line.psi_bar
                };
                tree[l] = true;
                queue.push_back(j);
            }
        }
    }
    let open_cycles: Vec<(usize, f64)> = s
        .lines
        .iter()
        .enumerate()
        .filter(|(l, _)| !tree[*l])
        .map(|(l, line)| (l, line.psi_bar - (angle[line.from] - angle[line.to])))
        .filter(|(_, r)| r.abs() > CYCLE_TOL)
        .collect();
    let report = EquilibriumReport {
        max_residual,
        max_cycle_residual: open_cycles.iter().fold(0.0f64, |a, (_, r)| a.max(r.abs())),
        open_cycles,
        unstable_branch_lines: (0..s.lines.len())
            .filter(|&l| s.lines[l].psi_bar.abs() >= FRAC_PI_2)
            .collect(),
        undamped_buses: (0..n).filter(|&i| s.buses[i].damping == 0.0).collect(),
    };
    (s, report)
}

/// Linear swing plant of one bus with storage `M w^2 / 2` and strictness
/// `D` (the largest admissible value).
pub fn make_node_plant(bus: &Bus) -> Result<DynamicSystem> {
    if !(bus.inertia > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "bus {}: inertia M must be positive",
            bus.id
        )));
    }
    let (m, d) = (bus.inertia, bus.damping);
    DynamicSystem::builder(format!("bus {}", bus.id), 2, 1)
        .dynamics(move |x, u, dx| {
            dx[0] = (-d * x[0] + u[0]) / m;
            dx[1] = x[0];
        })
        .state_output(|x, y| y[0] = x[1])
        .storage(move |x| 0.5 * m * x[0] * x[0])
        .osni_epsilon(d)
        .build()
}

/// Static line controller `y = Pmax (sin psi_bar - sin(u + psi_bar))`.
pub fn make_line_controller(pmax: f64, psi_bar: f64) -> Result<DynamicSystem> {
    if !(pmax > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "line controller requires Pmax > 0, got {pmax}"
        )));
    }
    let s = psi_bar.sin();
    let c = psi_bar.cos();
    DynamicSystem::builder("line", 0, 1)
        .feedthrough(move |u, y| y[0] = pmax * (s - (u[0] + psi_bar).sin()))
        .feedthrough_primitive(move |u| pmax * (u[0] * s + (u[0] + psi_bar).cos() - c))
        .build()
}

/// Battery-backed edge controller
///
/// ```text
/// x' = -x / tau + (K1 / tau) u
/// y  = x - K2 u
/// ```
///
/// with storage `x^2 / (2 K1)`.
pub fn make_battery_controller(params: &BatteryParams) -> Result<DynamicSystem> {
    params.validate()?;
    let BatteryParams { tau, k1, k2 } = *params;
    DynamicSystem::builder("battery", 1, 1)
        .dynamics(move |x, u, dx| dx[0] = (-x[0] + k1 * u[0]) / tau)
        .state_output(|x, y| y[0] = x[0])
        .feedthrough(move |u, y| y[0] = -k2 * u[0])
        .feedthrough_primitive(move |u| -0.5 * k2 * u[0] * u[0])
        .storage(move |x| x[0] * x[0] / (2.0 * k1))
        .build()
}

/// Battery output deviation at one end of a battery line:
/// `q (x - K2 u - Pmax (sin psi_bar - sin(u + psi_bar)))`, where `q` is the
/// bus's incidence entry for the line.
pub fn battery_power_command(q: i8, x_c: f64, u_c: f64, pmax: f64, psi_bar: f64, params: &BatteryParams) -> f64 {
    q as f64 * (x_c - params.k2 * u_c - pmax * (psi_bar.sin() - (u_c + psi_bar).sin()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct D1Violation {
    pub line: usize,
    pub psi_dev: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainMembership {
    pub in_d1: bool,
    pub in_d2: bool,
    pub d2_sum: f64,
    pub d1_violations: Vec<D1Violation>,
}

impl DomainMembership {
    pub fn inside(&self) -> bool {
        self.in_d1 && self.in_d2
    }
}

/// Open interval `(-pi - 2 psi_bar, pi - 2 psi_bar)` for a line's angle
/// deviation.
pub fn d1_interval(psi_bar: f64) -> (f64, f64) {
    (-PI - 2.0 * psi_bar, PI - 2.0 * psi_bar)
}

/// One line's contribution `Pmax (cos psi_bar - psi sin psi_bar - cos(psi + psi_bar))`.
pub fn d2_term(pmax: f64, psi_bar: f64, psi_dev: f64) -> f64 {
    pmax * (psi_bar.cos() - psi_dev * psi_bar.sin() - (psi_dev + psi_bar).cos())
}

/// Membership of the angle deviations `delta` in the local domains, with
/// the lines in `excluded` left out of both conditions.
pub fn domain_membership(scenario: &GridScenario, delta: &[f64], excluded: &[usize]) -> Result<DomainMembership> {
    check_len("domain_membership: delta", scenario.buses.len(), delta.len())?;
    let psi = scenario.psi_dev(delta);
    let mut d2_sum = 0.0;
    let mut d1_violations = Vec::new();
    for (l, line) in scenario.lines.iter().enumerate() {
        if excluded.contains(&l) {
            continue;
        }
        let (lo, hi) = d1_interval(line.psi_bar);
        if !(psi[l] > lo && psi[l] < hi) {
            d1_violations.push(D1Violation {
                line: l,
                psi_dev: psi[l],
                lower: lo,
                upper: hi,
            });
        }
        d2_sum += d2_term(scenario.pmax(l), line.psi_bar, psi[l]);
    }
    let at_origin = delta.iter().all(|&d| d == 0.0);
    Ok(DomainMembership {
        in_d1: d1_violations.is_empty(),
        in_d2: d2_sum > 0.0 || at_origin,
        d2_sum,
        d1_violations,
    })
}

/// Node plants from the buses, static controllers on plain lines, battery
/// controllers on battery lines.
pub fn assemble_grid_system(scenario: &GridScenario) -> Result<InterconnectedSystem> {
    let plants = scenario.buses.iter().map(make_node_plant).collect::<Result<Vec<_>>>()?;
    let controllers = (0..scenario.lines.len())
        .map(|l| match scenario.batteries.get(&l) {
            Some(p) => make_battery_controller(p),
            None => make_line_controller(scenario.pmax(l), scenario.lines[l].psi_bar),
        })
        .collect::<Result<Vec<_>>>()?;
    InterconnectedSystem::new(plants, controllers, scenario.topology.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{check_steady_state_sign, Role};
    use std::f64::consts::FRAC_PI_6;

    fn two_bus(psi_bar: f64) -> GridScenario {
        GridScenario::new(
            vec![Bus::new(1, 1.0, 1.0, 1.0, 0.0), Bus::new(2, 1.0, 1.0, 1.0, 0.0)],
            vec![Line {
                from: 0,
                to: 1,
                reactance: 1.0,
                psi_bar,
            }],
            vec![(0.0, 0.0); 2],
            BTreeMap::new(),
        )
        .unwrap()
    }

    #[test]
    fn branch_flow_examples() {
        assert!((branch_flow(1.0, 1.0, 0.5, FRAC_PI_6).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(branch_flow(1.0, 1.0, 0.5, 0.0).unwrap(), 0.0);
        let v = branch_flow(1.05, 0.98, 0.4, 0.3).unwrap();
        assert!((v - 2.5725 * 0.3f64.sin()).abs() < 1e-12);
        assert!(branch_flow(1.0, 1.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn branch_flow_is_antisymmetric() {
        for a in [-1.3, -0.2, 0.0, 0.4, 2.9] {
            assert_eq!(
                branch_flow(1.1, 0.9, 0.3, a).unwrap(),
                -branch_flow(0.9, 1.1, 0.3, -a).unwrap()
            );
        }
    }

    #[test]
    fn equilibrium_single_line() {
        let (s, rep) = compute_equilibrium(&two_bus(FRAC_PI_6));
        assert!((s.buses[0].mechanical - 0.5).abs() < 1e-15);
        assert!((s.buses[1].mechanical + 0.5).abs() < 1e-15);
        assert!(rep.max_residual <= 1e-12);
        assert!(rep.open_cycles.is_empty());
    }

    #[test]
    fn equilibrium_zero_angles_balances_load_against_battery() {
        let mut base = two_bus(0.0);
        base.buses[0].load = 0.7;
        base.buses[1].battery_baseline = 0.2;
        let (s, _) = compute_equilibrium(&base);
        assert!((s.buses[0].mechanical - 0.7).abs() < 1e-15);
        assert!((s.buses[1].mechanical + 0.2).abs() < 1e-15);
    }

    #[test]
    fn equilibrium_triangle_per_node_sums() {
        let s = GridScenario::new(
            (1..=3).map(|i| Bus::new(i, 1.0, 1.0, 1.0, 0.0)).collect(),
            vec![
                Line {
                    from: 0,
                    to: 1,
                    reactance: 1.0,
                    psi_bar: 0.2,
                },
                Line {
                    from: 1,
                    to: 2,
                    reactance: 1.0,
                    psi_bar: 0.1,
                },
                Line {
                    from: 0,
                    to: 2,
                    reactance: 1.0,
                    psi_bar: 0.3,
                },
            ],
            vec![(0.0, 0.0); 3],
            BTreeMap::new(),
        )
        .unwrap();
        let (s, rep) = compute_equilibrium(&s);
        // Oracle: add each line's flow at its ends by hand.
        let expect = [
            0.2f64.sin() + 0.3f64.sin(),
            -0.2f64.sin() + 0.1f64.sin(),
            -0.1f64.sin() - 0.3f64.sin(),
        ];
        for (b, e) in s.buses.iter().zip(expect) {
            assert!((b.mechanical - e).abs() < 1e-15);
        }
        assert!(rep.max_residual <= 1e-12);
        // 0.2 + 0.1 = 0.3 closes the cycle.
        assert!(rep.max_cycle_residual < 1e-12);
    }

    #[test]
    fn open_cycles_are_reported_not_rejected() {
        let s = GridScenario::new(
            (1..=3).map(|i| Bus::new(i, 1.0, 1.0, 1.0, 0.0)).collect(),
            vec![
                Line {
                    from: 0,
                    to: 1,
                    reactance: 1.0,
                    psi_bar: 0.2,
                },
                Line {
                    from: 1,
                    to: 2,
                    reactance: 1.0,
                    psi_bar: 0.2,
                },
                Line {
                    from: 0,
                    to: 2,
                    reactance: 1.0,
                    psi_bar: 0.3,
                },
            ],
            vec![(0.0, 0.0); 3],
            BTreeMap::new(),
        )
        .unwrap();
        let (_, rep) = compute_equilibrium(&s);
        assert_eq!(rep.open_cycles.len(), 1);
        assert!((rep.max_cycle_residual - 0.1).abs() < 1e-12);
    }

    #[test]
    fn node_plant_examples() {
        let p = make_node_plant(&Bus::new(1, 1.0, 1.0, 1.0, 0.0)).unwrap();
        let (dx, y) = p.evaluate(&[1.0, 0.0], &[0.0]).unwrap();
        assert_eq!(dx, vec![-1.0, 1.0]);
        assert_eq!(y, vec![0.0]);
        let p = make_node_plant(&Bus::new(1, 2.0, 0.5, 1.0, 0.0)).unwrap();
        assert_eq!(p.storage(&[2.0, 7.0]), Some(4.0));
        assert_eq!(p.osni_epsilon(), 0.5);
        assert!(make_node_plant(&Bus::new(1, 0.0, 0.5, 1.0, 0.0)).is_err());
    }

    #[test]
    fn line_controller_examples() {
        let c = make_line_controller(2.0, FRAC_PI_6).unwrap();
        assert_eq!(c.feedthrough(&[0.0]), vec![0.0]);
        let y = c.feedthrough(&[FRAC_PI_6])[0];
        assert!((y - 2.0 * (0.5 - (2.0 * FRAC_PI_6).sin())).abs() < 1e-15);
        assert!((y + 0.7320508075688772).abs() < 1e-12);
        // u = -2 psi_bar lands on sin(-psi_bar).
        let y = c.feedthrough(&[-2.0 * FRAC_PI_6])[0];
        assert!((y - 2.0).abs() < 1e-12, "{y}");
        assert!(make_line_controller(0.0, 0.0).is_err());
    }

    #[test]
    fn line_controller_primitive_matches_quadrature() {
        let c = make_line_controller(2.0, FRAC_PI_6).unwrap();
        for u in [-0.9, -0.1, 0.3, 1.2] {
            let q = crate::lyapunov::trapezoid(|s| c.feedthrough(&[s])[0], u, 1e-4).unwrap();
            assert!((c.feedthrough_primitive(&[u]).unwrap() - q.value).abs() < 1e-8);
        }
    }

    #[test]
    fn battery_controller_examples() {
        let p = BatteryParams::new(1.0, 1.0, 2.0).unwrap();
        let c = make_battery_controller(&p).unwrap();
        let (dx, y) = c.evaluate(&[0.0], &[0.0]).unwrap();
        assert_eq!((dx, y), (vec![0.0], vec![0.0]));
        let r = check_steady_state_sign(&c, &[0.3], Role::Controller, 1.0, 100.0, 1e-9).unwrap();
        assert!(r.verdict.is_pass(), "{r:?}");
        assert!((r.y_bar[0] + 0.3).abs() < 1e-9);
        assert!((p.steady_state_margin() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn battery_parameters_are_validated() {
        let e = BatteryParams::new(1.0, 1.0, 1.0).unwrap_err().to_string();
        assert!(e.contains("K2 > K1"), "{e}");
        assert!(BatteryParams::new(0.0, 1.0, 2.0)
            .unwrap_err()
            .to_string()
            .contains("tau > 0"));
        assert!(BatteryParams::new(1.0, 0.0, 2.0)
            .unwrap_err()
            .to_string()
            .contains("K1 > 0"));
    }

    #[test]
    fn battery_commands() {
        let p = BatteryParams::new(1.0, 1.0, 2.0).unwrap();
        assert_eq!(battery_power_command(1, 0.0, 0.0, 2.0, FRAC_PI_6, &p), 0.0);
        assert_eq!(battery_power_command(-1, 0.0, 0.0, 2.0, FRAC_PI_6, &p), 0.0);
        let a = battery_power_command(1, 0.1, 0.2, 2.0, FRAC_PI_6, &p);
        let b = battery_power_command(-1, 0.1, 0.2, 2.0, FRAC_PI_6, &p);
        assert_eq!(a, -b);
        assert_eq!(a + b, 0.0);
        let oracle = 0.1 - 0.4 - 2.0 * (0.5 - (0.2 + FRAC_PI_6).sin());
        assert!((a - oracle).abs() < 1e-15);
    }

    #[test]
    fn domain_examples() {
        let s = two_bus(0.0);
        let d = domain_membership(&s, &[0.0, 0.0], &[]).unwrap();
        assert!(d.in_d1 && d.in_d2);
        let d = domain_membership(&s, &[PI / 3.0, 0.0], &[]).unwrap();
        assert!((d.d2_sum - 0.5).abs() < 1e-12);
        assert!(d.in_d2);
        let s = two_bus(FRAC_PI_6);
        let d = domain_membership(&s, &[PI - 2.0 * FRAC_PI_6, 0.0], &[]).unwrap();
        assert!(!d.in_d1);
        assert_eq!(d.d1_violations.len(), 1);
        // Common-mode shift: psi = 0 so the D2 sum vanishes away from the origin.
        let d = domain_membership(&s, &[0.3, 0.3], &[]).unwrap();
        assert!(d.in_d1 && !d.in_d2);
        let d = domain_membership(&s, &[4.0, 0.0], &[0]).unwrap();
        assert!(d.in_d1 && !d.in_d2);
    }

    #[test]
    fn d2_terms_positive_near_zero() {
        // Scalar sweep: each line term is positive for 0 < |psi| <= 1 at psi_bar = pi/6.
        for k in 1..=1000 {
            let psi = k as f64 / 1000.0;
            assert!(d2_term(1.0, FRAC_PI_6, psi) > 0.0);
            assert!(d2_term(1.0, FRAC_PI_6, -psi) > 0.0);
        }
    }

    #[test]
    fn assembled_two_bus_matches_hand_evaluation() {
        let s = two_bus(FRAC_PI_6).with_initial(vec![(0.2, 0.0), (0.0, 0.0)]).unwrap();
        let sys = assemble_grid_system(&s).unwrap();
        let zero = sys.coupled_rhs(&[0.0; 4], &[]).unwrap();
        assert!(zero.dx_p.iter().all(|&v| v == 0.0));
        let init = s.initial_state();
        let sig = sys.coupled_rhs(&init.x_p, &init.x_c).unwrap();
        let expect = s.pmax(0) * (FRAC_PI_6.sin() - (0.2 + FRAC_PI_6).sin()) / s.buses[0].inertia;
        assert!((sig.dx_p[0] - expect).abs() < 1e-15);
        assert!((sig.dx_p[2] + expect).abs() < 1e-15);
        assert_eq!(sig.u_c, vec![0.2]);
    }

    #[test]
    fn battery_lines_get_dynamic_controllers() {
        let mut bat = BTreeMap::new();
        bat.insert(1, BatteryParams::new(1.0, 1.0, 2.0).unwrap());
        let s = GridScenario::new(
            (1..=3).map(|i| Bus::new(i, 1.0, 1.0, 1.0, 0.0)).collect(),
            vec![
                Line {
                    from: 0,
                    to: 1,
                    reactance: 1.0,
                    psi_bar: 0.0,
                },
                Line {
                    from: 1,
                    to: 2,
                    reactance: 1.0,
                    psi_bar: 0.0,
                },
                Line {
                    from: 0,
                    to: 2,
                    reactance: 1.0,
                    psi_bar: 0.0,
                },
            ],
            vec![(0.0, 0.0); 3],
            bat,
        )
        .unwrap();
        let sys = assemble_grid_system(&s).unwrap();
        let dims: Vec<usize> = sys.controllers().iter().map(|c| c.state_dim()).collect();
        assert_eq!(dims, vec![0, 1, 0]);
        assert_eq!(s.initial_state().x_c, vec![0.0]);
    }

    #[test]
    fn scenario_validation() {
        let bus = |m: f64, d: f64| Bus::new(1, m, d, 1.0, 0.0);
        let line = vec![Line {
            from: 0,
            to: 1,
            reactance: 1.0,
            psi_bar: 0.0,
        }];
        assert!(GridScenario::new(
            vec![bus(0.0, 1.0), bus(1.0, 1.0)],
            line.clone(),
            vec![(0.0, 0.0); 2],
            BTreeMap::new()
        )
        .is_err());
        assert!(GridScenario::new(
            vec![bus(1.0, -1.0), bus(1.0, 1.0)],
            line.clone(),
            vec![(0.0, 0.0); 2],
            BTreeMap::new()
        )
        .is_err());
        assert!(GridScenario::new(
            vec![bus(1.0, 1.0), bus(1.0, 1.0)],
            line.clone(),
            vec![(0.0, 0.0); 1],
            BTreeMap::new()
        )
        .is_err());
        let mut bat = BTreeMap::new();
        bat.insert(
            3,
            BatteryParams {
                tau: 1.0,
                k1: 1.0,
                k2: 2.0,
            },
        );
        assert!(GridScenario::new(
            vec![bus(1.0, 1.0), bus(1.0, 1.0)],
            line.clone(),
            vec![(0.0, 0.0); 2],
            bat
        )
        .is_err());
        assert!(matches!(
            GridScenario::new(
                vec![bus(1.0, 1.0), bus(1.0, 1.0), bus(1.0, 1.0)],
                line,
                vec![(0.0, 0.0); 3],
                BTreeMap::new()
            ),
            Err(Error::Disconnected { .. })
        ));
    }
}
