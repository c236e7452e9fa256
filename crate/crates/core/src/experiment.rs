//! End-to-end grid runs and parameter sweeps.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::grid::{
    assemble_grid_system, battery_power_command, compute_equilibrium, domain_membership, BatteryParams,
    DomainMembership, EquilibriumReport, GridScenario,
};
use crate::lyapunov::{
    check_networked_plant_dissipation, lyapunov_series, monitor_monotonicity, MonotonicityReport, Quadrature,
};
use crate::network::InterconnectedSystem;
use crate::ode::Method;
use crate::sim::{
    detect_consensus, integrate, settle_and_hold, ConsensusVerdict, ConvergenceVerdict, IntegrationSettings,
    Trajectory, DEFAULT_CONSENSUS_TOL, DEFAULT_DT, DEFAULT_HORIZON,
};
use crate::systems::{check_dissipation, dissipation_tolerance_for, DissipationReport, Verdict};

pub const DEFAULT_MONOTONICITY_TOL: f64 = 1e-8;
pub const DEFAULT_REPORT_STRIDE: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub horizon: f64,
    pub dt: f64,
    pub method: Method,
    pub consensus_tol: f64,
    /// Largest allowed single-step increase of the Lyapunov value.
    pub monotonicity_tol: f64,
    /// `None` scales the default with `dt^2`.
    pub dissipation_tol: Option<f64>,
    pub quadrature: Quadrature,
    /// Sample stride of the battery command series kept in the report.
    pub report_stride: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            horizon: DEFAULT_HORIZON,
            dt: DEFAULT_DT,
            method: Method::Rk4,
            consensus_tol: DEFAULT_CONSENSUS_TOL,
            monotonicity_tol: DEFAULT_MONOTONICITY_TOL,
            dissipation_tol: None,
            quadrature: Quadrature::ClosedForm,
            report_stride: DEFAULT_REPORT_STRIDE,
        }
    }
}

impl SimConfig {
    pub fn dissipation_tolerance(&self) -> f64 {
        self.dissipation_tol
            .unwrap_or_else(|| dissipation_tolerance_for(self.dt))
    }

    fn settings(&self) -> IntegrationSettings {
        IntegrationSettings {
            horizon: self.horizon,
            dt: self.dt,
            method: self.method,
            record_every: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantDissipation {
    pub bus: u32,
    /// `false` when the bus has `D = 0` and can only be NI, not OSNI.
    pub osni_claim_valid: bool,
    pub report: DissipationReport,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerDissipation {
    /// 0-based line index.
    pub line: usize,
    pub report: DissipationReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatterySeries {
    pub line: usize,
    pub from_bus: u32,
    pub to_bus: u32,
    pub params: BatteryParams,
    pub stride: usize,
    pub x_c: Vec<f64>,
    pub p_from: Vec<f64>,
    pub p_to: Vec<f64>,
    /// Largest `|p_from + p_to|` over every recorded sample.
    pub max_end_sum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario_hash: String,
    pub config: SimConfig,
    pub samples: usize,
    pub equilibrium: EquilibriumReport,
    /// Membership at `t = 0`, battery lines excluded.
    pub domain: DomainMembership,
    pub damped: bool,
    pub plant_dissipation: Vec<PlantDissipation>,
    pub controller_dissipation: Vec<ControllerDissipation>,
    pub networked_plant_dissipation: DissipationReport,
    pub monotonicity: MonotonicityReport,
    pub consensus: ConsensusVerdict,
    pub frequency_sync: ConvergenceVerdict,
    pub battery: Vec<BatterySeries>,
    pub final_delta: Vec<f64>,
    pub final_freq: Vec<f64>,
}

impl RunReport {
    pub fn dissipation_verdict(&self) -> Verdict {
        self.plant_dissipation
            .iter()
            .map(|p| p.verdict)
            .chain(self.controller_dissipation.iter().map(|c| c.report.verdict))
            .fold(Verdict::Pass, Verdict::and)
    }

    pub fn lyapunov_verdict(&self) -> Verdict {
        self.monotonicity.verdict
    }

    pub fn domain_verdict(&self) -> Verdict {
        Verdict::from_pass(self.domain.inside())
    }

    pub fn convergence_verdict(&self) -> Verdict {
        Verdict::from_pass(self.consensus.achieved && self.frequency_sync.achieved)
    }
}

pub struct RunOutcome {
    pub report: RunReport,
    pub system: InterconnectedSystem,
    pub trajectory: Trajectory,
}

/// Hex SHA-256 of the canonical JSON of scenario and config.
pub fn scenario_hash(scenario: &GridScenario, config: &SimConfig) -> String {
    let bytes = serde_json::to_vec(&(scenario, config)).expect("scenario serializes");
    hex::encode(Sha256::digest(&bytes))
}

pub fn run_experiment(scenario: &GridScenario, config: &SimConfig) -> Result<RunOutcome> {
    if config.report_stride == 0 {
        return Err(Error::InvalidParameter("report stride must be at least 1".into()));
    }
    let (scenario, equilibrium) = compute_equilibrium(scenario);
    let hash = scenario_hash(&scenario, config);
    let sys = assemble_grid_system(&scenario)?;
    let initial = scenario.initial_state();
    let battery_lines = scenario.battery_lines();
    let delta0: Vec<f64> = scenario.initial.iter().map(|&(d, _)| d).collect();
    let domain = domain_membership(&scenario, &delta0, &battery_lines)?;

    let mut traj = integrate(&sys, &initial, &config.settings())?;
    traj.meta.scenario_hash = Some(hash.clone());
    let w = lyapunov_series(&sys, &traj, config.quadrature)?;
    traj.set_w_hat(w)?;

    let tol = config.dissipation_tolerance();
    let mut plant_dissipation = Vec::with_capacity(scenario.buses.len());
    for (i, bus) in scenario.buses.iter().enumerate() {
        let trace = traj.plant_trace(&sys, i)?;
        let report = check_dissipation(&sys.plants()[i], &trace, bus.damping, tol)?;
        let osni_claim_valid = bus.damping > 0.0;
        let verdict = if osni_claim_valid {
            report.verdict
        } else {
            Verdict::Fail
        };
        plant_dissipation.push(PlantDissipation {
            bus: bus.id,
            osni_claim_valid,
            report,
            verdict,
        });
    }
    let mut controller_dissipation = Vec::new();
    for &l in &battery_lines {
        let trace = traj.controller_trace(&sys, l)?;
        let report = check_dissipation(&sys.controllers()[l], &trace, 0.0, tol)?;
        controller_dissipation.push(ControllerDissipation { line: l, report });
    }
    let networked_plant_dissipation = check_networked_plant_dissipation(&sys, &traj, tol)?;
    let monotonicity = monitor_monotonicity(&sys, &traj, config.quadrature, config.monotonicity_tol)?;
    let consensus = detect_consensus(&traj, config.consensus_tol)?;
    let frequency_sync = settle_and_hold(traj.len(), traj.t0, traj.dt, config.consensus_tol, |k| {
        frequencies(&traj, k).fold(0.0f64, |a, w| a.max(w.abs()))
    });
    let battery = battery_series(&scenario, &sys, &traj, config.report_stride);

    let last = traj.len() - 1;
    let report = RunReport {
        scenario_hash: hash,
        config: config.clone(),
        samples: traj.len(),
        equilibrium,
        domain,
        damped: scenario.is_damped(),
        plant_dissipation,
        controller_dissipation,
        networked_plant_dissipation,
        monotonicity,
        consensus,
        frequency_sync,
        battery,
        final_delta: traj.y_p(last).to_vec(),
        final_freq: frequencies(&traj, last).collect(),
    };
    Ok(RunOutcome {
        report,
        system: sys,
        trajectory: traj,
    })
}

/// `freq_dev` of every bus at sample `k`.
pub fn frequencies(traj: &Trajectory, k: usize) -> impl Iterator<Item = f64> + '_ {
    traj.x_p(k).iter().step_by(2).copied()
}

/// Battery commands `(x_c, p_from, p_to)` of battery line `line` at sample `k`.
pub fn battery_commands_at(
    scenario: &GridScenario,
    sys: &InterconnectedSystem,
    traj: &Trajectory,
    line: usize,
    k: usize,
) -> (f64, f64, f64) {
    let params = &scenario.batteries[&line];
    let x = traj.x_c(k)[sys.controller_state_range(line)][0];
    let u = traj.u_c(k)[line];
    let (pmax, psi) = (scenario.pmax(line), scenario.lines[line].psi_bar);
    let q = sys.incidence();
    let (from, to) = q.ends(line);
    (
        x,
        battery_power_command(q.get(from, line), x, u, pmax, psi, params),
        battery_power_command(q.get(to, line), x, u, pmax, psi, params),
    )
}

fn battery_series(
    scenario: &GridScenario,
    sys: &InterconnectedSystem,
    traj: &Trajectory,
    stride: usize,
) -> Vec<BatterySeries> {
    scenario
        .battery_lines()
        .into_iter()
        .map(|l| {
            let line = &scenario.lines[l];
            let mut s = BatterySeries {
                line: l,
                from_bus: scenario.buses[line.from].id,
                to_bus: scenario.buses[line.to].id,
                params: scenario.batteries[&l],
                stride,
                x_c: Vec::new(),
                p_from: Vec::new(),
                p_to: Vec::new(),
                max_end_sum: 0.0,
            };
            for k in 0..traj.len() {
                let (x, a, b) = battery_commands_at(scenario, sys, traj, l, k);
                s.max_end_sum = s.max_end_sum.max((a + b).abs());
                if k % stride == 0 {
                    s.x_c.push(x);
                    s.p_from.push(a);
                    s.p_to.push(b);
                }
            }
            s
        })
        .collect()
}

/// Numeric scenario field addressed by a sweep. Bus ids are the scenario's
/// own ids; line indices are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParameter {
    InitialDelta(u32),
    InitialFreq(u32),
    Inertia(u32),
    Damping(u32),
    Voltage(u32),
    Load(u32),
    Reactance(usize),
    PsiBar(usize),
    BatteryTau(usize),
    BatteryK1(usize),
    BatteryK2(usize),
    /// Moves the scenario's battery controller to the given line.
    BatteryLine,
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use SweepParameter::*;
        match self {
            InitialDelta(b) => write!(f, "initial.{b}.delta_dev"),
            InitialFreq(b) => write!(f, "initial.{b}.freq_dev"),
            Inertia(b) => write!(f, "bus.{b}.M"),
            Damping(b) => write!(f, "bus.{b}.D"),
            Voltage(b) => write!(f, "bus.{b}.E0"),
            Load(b) => write!(f, "bus.{b}.P_L"),
            Reactance(l) => write!(f, "line.{l}.X"),
            PsiBar(l) => write!(f, "line.{l}.psi_bar"),
            BatteryTau(l) => write!(f, "battery.{l}.tau"),
            BatteryK1(l) => write!(f, "battery.{l}.K1"),
            BatteryK2(l) => write!(f, "battery.{l}.K2"),
            BatteryLine => f.write_str("battery_line"),
        }
    }
}

impl FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        use SweepParameter::*;
        if s == "battery_line" {
            return Ok(BatteryLine);
        }
        let reject = |why: &str| Error::RejectedInput(format!("sweep parameter '{s}': {why}"));
        let parts: Vec<&str> = s.split('.').collect();
        let [section, index, field] = parts[..] else {
            return Err(reject(
                "expected <section>.<index>.<field> or battery_line, e.g. initial.1.delta_dev, bus.2.D, line.1.X, battery.3.K2",
            ));
        };
        let index: u64 = index
            .parse()
            .map_err(|_| reject("index must be a nonnegative integer"))?;
        let bus = || u32::try_from(index).map_err(|_| reject("bus id out of range"));
        let line = || {
            if index == 0 {
                Err(reject("line indices are 1-based"))
            } else {
                Ok(index as usize)
            }
        };
        match (section, field) {
            ("initial", "delta_dev") => Ok(InitialDelta(bus()?)),
            ("initial", "freq_dev") => Ok(InitialFreq(bus()?)),
            ("bus", "M") => Ok(Inertia(bus()?)),
            ("bus", "D") => Ok(Damping(bus()?)),
            ("bus", "E0") => Ok(Voltage(bus()?)),
            ("bus", "P_L") => Ok(Load(bus()?)),
            ("line", "X") => Ok(Reactance(line()?)),
            ("line", "psi_bar") => Ok(PsiBar(line()?)),
            ("battery", "tau") => Ok(BatteryTau(line()?)),
            ("battery", "K1") => Ok(BatteryK1(line()?)),
            ("battery", "K2") => Ok(BatteryK2(line()?)),
            (_, "id" | "from" | "to" | "line_index") => Err(reject("target is an identifier, not a numeric parameter")),
            _ => Err(reject("unknown field")),
        }
    }
}

impl SweepParameter {
    /// Copy of `scenario` with the addressed field set to `value`.
    pub fn apply(&self, scenario: &GridScenario, value: f64) -> Result<GridScenario> {
        use SweepParameter::*;
        let mut buses = scenario.buses.clone();
        let mut lines = scenario.lines.clone();
        let mut initial = scenario.initial.clone();
        let mut batteries = scenario.batteries.clone();
        let bus_index = |id: u32| {
            scenario
                .buses
                .iter()
                .position(|b| b.id == id)
                .ok_or_else(|| Error::RejectedInput(format!("sweep parameter {self}: no bus with id {id}")))
        };
        let line_index = |l: usize| {
            if l >= 1 && l <= scenario.lines.len() {
                Ok(l - 1)
            } else {
                Err(Error::RejectedInput(format!("sweep parameter {self}: no line {l}")))
            }
        };
        let battery = |b: &mut std::collections::BTreeMap<usize, BatteryParams>, l: usize| -> Result<BatteryParams> {
            let k = line_index(l)?;
            b.get(&k)
                .copied()
                .ok_or_else(|| Error::RejectedInput(format!("sweep parameter {self}: line {l} has no battery")))
        };
        match *self {
            InitialDelta(b) => initial[bus_index(b)?].0 = value,
            InitialFreq(b) => initial[bus_index(b)?].1 = value,
            Inertia(b) => buses[bus_index(b)?].inertia = value,
            Damping(b) => buses[bus_index(b)?].damping = value,
            Voltage(b) => buses[bus_index(b)?].voltage = value,
            Load(b) => buses[bus_index(b)?].load = value,
            Reactance(l) => lines[line_index(l)?].reactance = value,
            PsiBar(l) => lines[line_index(l)?].psi_bar = value,
            BatteryTau(l) | BatteryK1(l) | BatteryK2(l) => {
                let mut p = battery(&mut batteries, l)?;
                match *self {
                    BatteryTau(_) => p.tau = value,
                    BatteryK1(_) => p.k1 = value,
                    _ => p.k2 = value,
                }
                batteries.insert(line_index(l)?, p);
            }
            BatteryLine => {
                if value.fract() != 0.0 {
                    return Err(Error::RejectedInput(format!(
                        "battery_line must be an integer line index, got {value}"
                    )));
                }
                let k = line_index(value as usize)?;
                let template = match batteries.len() {
                    0 => {
                        return Err(Error::RejectedInput(
                            "battery_line sweep needs a battery edge to move".into(),
                        ))
                    }
                    1 => *batteries.values().next().unwrap(),
                    _ => {
                        return Err(Error::RejectedInput(
                            "battery_line sweep needs exactly one battery edge".into(),
                        ))
                    }
                };
                batteries.clear();
                batteries.insert(k, template);
            }
        }
        let mut s = GridScenario::new(buses, lines, initial, batteries)?;
        s.nominal_frequency = scenario.nominal_frequency;
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub in_domain: bool,
    pub consensus_achieved: bool,
    pub settle_time: Option<f64>,
    pub w_min: f64,
    pub max_step_increase: f64,
    /// Set when the point could not be run; the numeric fields are NaN.
    pub error: Option<String>,
}

/// Runs one experiment per value, fanning out over `execution`. Rows come
/// back in the order of `values`.
pub fn run_sweep(
    scenario: &GridScenario,
    config: &SimConfig,
    parameter: SweepParameter,
    values: &[f64],
    execution: Execution,
) -> Vec<SweepRow> {
    exec::map(execution, values, |&v| {
        let run = parameter.apply(scenario, v).and_then(|s| run_experiment(&s, config));
        match run {
            Ok(o) => SweepRow {
                value: v,
                in_domain: o.report.domain.inside(),
                consensus_achieved: o.report.consensus.achieved,
                settle_time: o.report.consensus.settle_time,
                w_min: o.report.monotonicity.w_min,
                max_step_increase: o.report.monotonicity.max_step_increase,
                error: None,
            },
            Err(e) => SweepRow {
                value: v,
                in_domain: false,
                consensus_achieved: false,
                settle_time: None,
                w_min: f64::NAN,
                max_step_increase: f64::NAN,
                error: Some(e.to_string()),
            },
        }
    })
}
