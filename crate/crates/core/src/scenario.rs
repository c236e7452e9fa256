//! JSON scenario files, validation diagnostics and CSV output.
//!
//! ```json
//! {
//!   "buses": [{"id": 1, "M": 1.0, "D": 1.0, "E0": 1.0, "P_L": 0.0}],
//!   "lines": [{"from": 1, "to": 2, "X": 0.5, "psi_bar": 0.2}],
//!   "battery_edges": [{"line_index": 1, "tau": 1.0, "K1": 1.0, "K2": 2.0}],
//!   "initial": [{"bus": 1, "delta_dev": 0.3, "freq_dev": 0.0}],
//!   "sim": {"T": 50.0, "dt": 0.001, "consensus_tol": 0.001}
//! }
//! ```
//!
//! Lines reference bus ids; `line_index` is 1-based in file order. Buses
//! missing from `initial` start at zero deviation. Unknown fields are
//! rejected.

use std::collections::{BTreeMap, HashMap};
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::{battery_commands_at, RunOutcome, SimConfig, SweepRow};
use crate::grid::{
    compute_equilibrium, BatteryParams, Bus, EquilibriumReport, GridScenario, Line, DEFAULT_NOMINAL_FREQUENCY,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusEntry {
    pub id: u32,
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "E0")]
    pub e0: f64,
    #[serde(rename = "P_L")]
    pub p_l: f64,
    #[serde(rename = "P_ST", default)]
    pub p_st: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineEntry {
    pub from: u32,
    pub to: u32,
    #[serde(rename = "X")]
    pub x: f64,
    pub psi_bar: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatteryEntry {
    pub line_index: usize,
    pub tau: f64,
    #[serde(rename = "K1")]
    pub k1: f64,
    #[serde(rename = "K2")]
    pub k2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialEntry {
    pub bus: u32,
    #[serde(default)]
    pub delta_dev: f64,
    #[serde(default)]
    pub freq_dev: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimEntry {
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub consensus_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nominal_frequency: Option<f64>,
    pub buses: Vec<BusEntry>,
    pub lines: Vec<LineEntry>,
    #[serde(default)]
    pub battery_edges: Vec<BatteryEntry>,
    #[serde(default)]
    pub initial: Vec<InitialEntry>,
    #[serde(default)]
    pub sim: SimEntry,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string().split(" at line ").next().unwrap_or_default().to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario file serializes")
    }

    /// Builds the validated grid, naming the offending bus id or line
    /// number on failure.
    pub fn to_scenario(&self) -> Result<GridScenario> {
        let mut index: HashMap<u32, usize> = HashMap::new();
        for (i, b) in self.buses.iter().enumerate() {
            if index.insert(b.id, i).is_some() {
                return Err(Error::InvalidParameter(format!(
                    "bus id {} appears more than once",
                    b.id
                )));
            }
        }
        let lookup = |id: u32, line: usize| {
            index
                .get(&id)
                .copied()
                .ok_or_else(|| Error::InvalidTopology(format!("line {line}: unknown bus id {id}")))
        };
        let buses = self
            .buses
            .iter()
            .map(|b| Bus {
                id: b.id,
                inertia: b.m,
                damping: b.d,
                voltage: b.e0,
                load: b.p_l,
                mechanical: 0.0,
                battery_baseline: b.p_st,
            })
            .collect();
        let lines = self
            .lines
            .iter()
            .enumerate()
            .map(|(l, e)| {
                let from = lookup(e.from, l + 1)?;
                let to = lookup(e.to, l + 1)?;
                if from == to {
                    return Err(Error::InvalidTopology(format!(
                        "line {}: self-loop on bus {}",
                        l + 1,
                        e.from
                    )));
                }
                Ok(Line {
                    from,
                    to,
                    reactance: e.x,
                    psi_bar: e.psi_bar,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut initial = vec![(0.0, 0.0); self.buses.len()];
        let mut seen = vec![false; self.buses.len()];
        for e in &self.initial {
            let i = *index
                .get(&e.bus)
                .ok_or_else(|| Error::InvalidParameter(format!("initial condition for unknown bus id {}", e.bus)))?;
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidParameter(format!(
                    "initial condition for bus {} given twice",
                    e.bus
                )));
            }
            initial[i] = (e.delta_dev, e.freq_dev);
        }
        let mut batteries = BTreeMap::new();
        for e in &self.battery_edges {
            if e.line_index == 0 || e.line_index > self.lines.len() {
                return Err(Error::InvalidParameter(format!(
                    "battery edge references line {} but there are {} lines (line_index is 1-based)",
                    e.line_index,
                    self.lines.len()
                )));
            }
            let p = BatteryParams {
                tau: e.tau,
                k1: e.k1,
                k2: e.k2,
            };
            p.validate()
                .map_err(|err| Error::InvalidParameter(format!("battery on line {}: {err}", e.line_index)))?;
            if batteries.insert(e.line_index - 1, p).is_some() {
                return Err(Error::InvalidParameter(format!(
                    "line {} has more than one battery edge",
                    e.line_index
                )));
            }
        }
        for (v, what) in [
            (self.sim.horizon, "sim.T"),
            (self.sim.dt, "sim.dt"),
            (self.sim.consensus_tol, "sim.consensus_tol"),
        ] {
            if let Some(v) = v {
                if !(v > 0.0) || !v.is_finite() {
                    return Err(Error::InvalidParameter(format!("{what} must be positive, got {v}")));
                }
            }
        }
        let mut s = GridScenario::new(buses, lines, initial, batteries)?;
        s.nominal_frequency = self.nominal_frequency.unwrap_or(DEFAULT_NOMINAL_FREQUENCY);
        Ok(s)
    }

    /// Serializable form of `scenario`, listing every bus in `initial`.
    pub fn from_scenario(scenario: &GridScenario, sim: SimEntry) -> Self {
        Self {
            nominal_frequency: Some(scenario.nominal_frequency),
            buses: scenario
                .buses
                .iter()
                .map(|b| BusEntry {
                    id: b.id,
                    m: b.inertia,
                    d: b.damping,
                    e0: b.voltage,
                    p_l: b.load,
                    p_st: b.battery_baseline,
                })
                .collect(),
            lines: scenario
                .lines
                .iter()
                .map(|l| LineEntry {
                    from: scenario.buses[l.from].id,
                    to: scenario.buses[l.to].id,
                    x: l.reactance,
                    psi_bar: l.psi_bar,
                })
                .collect(),
            battery_edges: scenario
                .batteries
                .iter()
                .map(|(&k, p)| BatteryEntry {
                    line_index: k + 1,
                    tau: p.tau,
                    k1: p.k1,
                    k2: p.k2,
                })
                .collect(),
            initial: scenario
                .buses
                .iter()
                .zip(&scenario.initial)
                .map(|(b, &(d, w))| InitialEntry {
                    bus: b.id,
                    delta_dev: d,
                    freq_dev: w,
                })
                .collect(),
            sim,
        }
    }

    /// Simulation settings from the file over `base`.
    pub fn sim_config(&self, base: SimConfig) -> SimConfig {
        SimConfig {
            horizon: self.sim.horizon.unwrap_or(base.horizon),
            dt: self.sim.dt.unwrap_or(base.dt),
            consensus_tol: self.sim.consensus_tol.unwrap_or(base.consensus_tol),
            ..base
        }
    }
}

pub const EQUILIBRIUM_RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Validation {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
    pub equilibrium: Option<EquilibriumReport>,
}

impl Validation {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }
}

/// Schema, parameter and equilibrium checks on raw file text.
pub fn validate(text: &str) -> Validation {
    let mut v = Validation {
        errors: Vec::new(),
        warnings: Vec::new(),
        equilibrium: None,
    };
    let scenario = match ScenarioFile::parse(text).and_then(|f| f.to_scenario()) {
        Ok(s) => s,
        Err(e) => {
            v.errors.push(e.to_string());
            return v;
        }
    };
    let (s, eq) = compute_equilibrium(&scenario);
    if eq.max_residual > EQUILIBRIUM_RESIDUAL_TOL {
        v.errors.push(format!(
            "equilibrium power balance residual {:.3e} exceeds {EQUILIBRIUM_RESIDUAL_TOL:e}",
            eq.max_residual
        ));
    }
    for &(l, r) in &eq.open_cycles {
        v.warnings.push(format!(
            "line {}: psi_bar differs by {r:.3e} from the angle implied by a spanning tree; line angles do not close around a cycle",
            l + 1
        ));
    }
    for &l in &eq.unstable_branch_lines {
        v.warnings.push(format!("line {}: |psi_bar| >= pi/2", l + 1));
    }
    for &i in &eq.undamped_buses {
        v.warnings.push(format!(
            "bus {}: D = 0, plant is NI but not output strictly NI; consensus is not expected",
            s.buses[i].id
        ));
    }
    v.equilibrium = Some(eq);
    v
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Column names of the trajectory CSV.
pub fn trajectory_header(scenario: &GridScenario) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    for b in &scenario.buses {
        h.push(format!("delta_dev_{}", b.id));
        h.push(format!("freq_dev_{}", b.id));
    }
    for l in 1..=scenario.lines.len() {
        h.push(format!("psi_dev_{l}"));
        h.push(format!("flow_dev_{l}"));
    }
    for &k in scenario.batteries.keys() {
        let line = &scenario.lines[k];
        h.push(format!("x_c_{}", k + 1));
        h.push(format!("P_ST_{}_line_{}", scenario.buses[line.from].id, k + 1));
        h.push(format!("P_ST_{}_line_{}", scenario.buses[line.to].id, k + 1));
    }
    h.push("W_hat".to_string());
    h
}

/// Writes every recorded sample: time, per-bus `(delta_dev, freq_dev)`,
/// per-line `(psi_dev, flow_dev)`, per-battery `(x_c, P_ST at each end)`
/// and the Lyapunov value, each in 17 significant digits.
pub fn write_trajectory_csv<W: Write>(out: W, scenario: &GridScenario, run: &RunOutcome) -> io::Result<()> {
    let mut out = io::BufWriter::new(out);
    let traj = &run.trajectory;
    writeln!(out, "{}", trajectory_header(scenario).join(","))?;
    let w = traj.w_hat().unwrap_or_default();
    let mut row = Vec::new();
    for k in 0..traj.len() {
        row.clear();
        row.push(traj.time(k));
        let x = traj.x_p(k);
        for i in 0..scenario.buses.len() {
            row.push(x[2 * i + 1]);
            row.push(x[2 * i]);
        }
        let u_c = traj.u_c(k);
        for (l, &psi) in u_c.iter().enumerate() {
            row.push(psi);
            row.push(scenario.flow_dev(l, psi));
        }
        for &l in scenario.batteries.keys() {
            let (xc, a, b) = battery_commands_at(scenario, &run.system, traj, l, k);
            row.extend([xc, a, b]);
        }
        row.push(w.get(k).copied().unwrap_or(f64::NAN));
        let line: Vec<String> = row.iter().map(|&v| num(v)).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    out.flush()
}

pub const SWEEP_HEADER: &str = "value,in_domain,consensus_achieved,settle_time,w_min,max_step_increase,error";

pub fn write_sweep_csv<W: Write>(out: W, rows: &[SweepRow]) -> io::Result<()> {
    let mut out = io::BufWriter::new(out);
    writeln!(out, "{SWEEP_HEADER}")?;
    for r in rows {
        let err = r.error.as_deref().unwrap_or("").replace(['"', ','], ";");
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            num(r.value),
            r.in_domain,
            r.consensus_achieved,
            r.settle_time.map(num).unwrap_or_default(),
            num(r.w_min),
            num(r.max_step_increase),
            err
        )?;
    }
    out.flush()
}

/// Sweep values from `a,b,c` or an inclusive `start:step:stop` range. An
/// empty string gives no values.
pub fn parse_values(text: &str) -> Result<Vec<f64>> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let number = |s: &str| {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::RejectedInput(format!("'{s}' is not a finite number")))
    };
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let [a, h, b] = parts[..] else {
            return Err(Error::RejectedInput(format!("range '{text}' must be start:step:stop")));
        };
        let (a, h, b) = (number(a)?, number(h)?, number(b)?);
        if !(h > 0.0) {
            return Err(Error::RejectedInput(format!("range step must be positive, got {h}")));
        }
        if b < a {
            return Ok(Vec::new());
        }
        let n = ((b - a) / h + 1e-9).floor() as usize;
        return Ok((0..=n).map(|k| a + k as f64 * h).collect());
    }
    text.split(',').map(number).collect()
}
