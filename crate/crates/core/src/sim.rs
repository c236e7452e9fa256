//! Deterministic fixed-step simulation of interconnected systems.
//!
//! [`integrate`] runs classic RK4 over the coupled right-hand side and
//! records every closed-loop signal. [`oracle_integrate`] is the same loop
//! with explicit Euler at a fine step; it shares no stepping code path with
//! RK4 and serves as the independent reference in tests.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::network::InterconnectedSystem;
use crate::ode::{Method, Stepper};
use crate::systems::SystemTrace;

pub const DEFAULT_HORIZON: f64 = 50.0;
pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_CONSENSUS_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationSettings {
    pub horizon: f64,
    pub dt: f64,
    pub method: Method,
    /// Record one sample every this many steps.
    pub record_every: usize,
}

impl Default for IntegrationSettings {
    fn default() -> Self {
        Self {
            horizon: DEFAULT_HORIZON,
            dt: DEFAULT_DT,
            method: Method::Rk4,
            record_every: 1,
        }
    }
}

impl IntegrationSettings {
    pub fn rk4(horizon: f64, dt: f64) -> Self {
        Self {
            horizon,
            dt,
            method: Method::Rk4,
            record_every: 1,
        }
    }

    /// Number of uniform steps. The last one ends exactly at the horizon and
    /// the count is a multiple of `record_every`, so the final state is
    /// always recorded.
    pub fn steps(&self) -> usize {
        let raw = ((self.horizon / self.dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let r = self.record_every.max(1);
        raw.div_ceil(r) * r
    }

    /// Actual step length `horizon / steps`, never larger than `dt`.
    pub fn step_len(&self) -> f64 {
        self.horizon / self.steps() as f64
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.horizon >= self.dt) || !self.horizon.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "horizon must be at least dt, got horizon = {}, dt = {}",
                self.horizon, self.dt
            )));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidParameter("record_every must be positive".into()));
        }
        Ok(())
    }
}

/// Plant and controller states at one instant.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct InitialState {
    pub x_p: Vec<f64>,
    pub x_c: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub integrator: Method,
    pub step: f64,
    pub record_every: usize,
    pub scenario_hash: Option<String>,
}

/// Uniformly sampled closed-loop history. Each signal is a flat buffer of
/// `len` blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t0: f64,
    /// Spacing between recorded samples.
    pub dt: f64,
    pub meta: TrajectoryMeta,
    len: usize,
    dims: [usize; 6],
    x_p: Vec<f64>,
    x_c: Vec<f64>,
    y_p: Vec<f64>,
    y_c: Vec<f64>,
    u_p: Vec<f64>,
    u_c: Vec<f64>,
    w_hat: Option<Vec<f64>>,
    node_count: usize,
    io_dim: usize,
}

macro_rules! block {
    ($name:ident, $idx:expr) => {
        pub fn $name(&self, k: usize) -> &[f64] {
            let d = self.dims[$idx];
            &self.$name[k * d..(k + 1) * d]
        }
    };
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn io_dim(&self) -> usize {
        self.io_dim
    }

    block!(x_p, 0);
    block!(x_c, 1);
    block!(y_p, 2);
    block!(y_c, 3);
    block!(u_p, 4);
    block!(u_c, 5);

    pub fn w_hat(&self) -> Option<&[f64]> {
        self.w_hat.as_deref()
    }

    pub fn set_w_hat(&mut self, values: Vec<f64>) -> Result<()> {
        check_len("trajectory W_hat", self.len, values.len())?;
        self.w_hat = Some(values);
        Ok(())
    }

    pub fn final_state(&self) -> InitialState {
        let k = self.len - 1;
        InitialState {
            x_p: self.x_p(k).to_vec(),
            x_c: self.x_c(k).to_vec(),
        }
    }

    /// State and input history of node plant `i`.
    pub fn plant_trace(&self, sys: &InterconnectedSystem, i: usize) -> Result<SystemTrace> {
        let r = sys.plant_state_range(i);
        let m = sys.io_dim();
        let states = (0..self.len)
            .flat_map(|k| self.x_p(k)[r.clone()].iter().copied())
            .collect();
        let inputs = (0..self.len)
            .flat_map(|k| self.u_p(k)[i * m..(i + 1) * m].iter().copied())
            .collect();
        SystemTrace::new(self.t0, self.dt, r.len(), m, states, inputs)
    }

    /// State and input history of edge controller `l`.
    pub fn controller_trace(&self, sys: &InterconnectedSystem, l: usize) -> Result<SystemTrace> {
        let r = sys.controller_state_range(l);
        let m = sys.io_dim();
        let states = (0..self.len)
            .flat_map(|k| self.x_c(k)[r.clone()].iter().copied())
            .collect();
        let inputs = (0..self.len)
            .flat_map(|k| self.u_c(k)[l * m..(l + 1) * m].iter().copied())
            .collect();
        SystemTrace::new(self.t0, self.dt, r.len(), m, states, inputs)
    }
}

/// Integrates the closed loop from `initial`.
pub fn integrate(
    sys: &InterconnectedSystem,
    initial: &InitialState,
    settings: &IntegrationSettings,
) -> Result<Trajectory> {
    settings.validate()?;
    check_len("integrate: X_p0", sys.plant_state_dim(), initial.x_p.len())?;
    check_len("integrate: X_c0", sys.controller_state_dim(), initial.x_c.len())?;
    let np = sys.plant_state_dim();
    let nc = sys.controller_state_dim();
    let steps = settings.steps();
    let h = settings.step_len();
    let samples = steps / settings.record_every + 1;

    let mut sig = sys.signals_buffer();
    let dims = [np, nc, sig.y_p.len(), sig.y_c.len(), sig.u_p.len(), sig.u_c.len()];
    let mut bufs: [Vec<f64>; 6] = std::array::from_fn(|i| Vec::with_capacity(samples * dims[i]));

    let mut x: Vec<f64> = initial.x_p.iter().chain(&initial.x_c).copied().collect();
    let mut stepper = Stepper::new(settings.method, np + nc);
    let mut work = sys.signals_buffer();
    let mut rhs = |_t: f64, x: &[f64], dx: &mut [f64]| {
        sys.coupled_rhs_into(&x[..np], &x[np..], &mut work);
        dx[..np].copy_from_slice(&work.dx_p);
        dx[np..].copy_from_slice(&work.dx_c);
    };

    let mut recorded = 0;
    for k in 0..=steps {
        let t = k as f64 * h;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { time: t });
        }
        if k % settings.record_every == 0 {
            sys.outputs_into(&x[..np], &x[np..], &mut sig);
            bufs[0].extend_from_slice(&x[..np]);
            bufs[1].extend_from_slice(&x[np..]);
            bufs[2].extend_from_slice(&sig.y_p);
            bufs[3].extend_from_slice(&sig.y_c);
            bufs[4].extend_from_slice(&sig.u_p);
            bufs[5].extend_from_slice(&sig.u_c);
            recorded += 1;
        }
        if k < steps {
            stepper.step(&mut rhs, t, &mut x, h);
        }
    }
    let [x_p, x_c, y_p, y_c, u_p, u_c] = bufs;
    Ok(Trajectory {
        t0: 0.0,
        dt: h * settings.record_every as f64,
        meta: TrajectoryMeta {
            integrator: settings.method,
            step: h,
            record_every: settings.record_every,
            scenario_hash: None,
        },
        len: recorded,
        dims,
        x_p,
        x_c,
        y_p,
        y_c,
        u_p,
        u_c,
        w_hat: None,
        node_count: sys.plants().len(),
        io_dim: sys.io_dim(),
    })
}

/// Explicit-Euler reference run at a fine step.
pub fn oracle_integrate(
    sys: &InterconnectedSystem,
    initial: &InitialState,
    horizon: f64,
    dt_fine: f64,
    record_every: usize,
) -> Result<Trajectory> {
    integrate(
        sys,
        initial,
        &IntegrationSettings {
            horizon,
            dt: dt_fine,
            method: Method::Euler,
            record_every,
        },
    )
}

/// Integrates a plain ODE `x' = rhs(x)` and returns the recorded states.
pub fn integrate_ode<F>(mut rhs: F, x0: &[f64], settings: &IntegrationSettings) -> Result<Vec<Vec<f64>>>
where
    F: FnMut(&[f64], &mut [f64]),
{
    settings.validate()?;
    let steps = settings.steps();
    let h = settings.step_len();
    let mut x = x0.to_vec();
    let mut out = Vec::with_capacity(steps / settings.record_every + 1);
    let mut stepper = Stepper::new(settings.method, x.len());
    let mut f = |_t: f64, x: &[f64], dx: &mut [f64]| rhs(x, dx);
    for k in 0..=steps {
        let t = k as f64 * h;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { time: t });
        }
        if k % settings.record_every == 0 {
            out.push(x.clone());
        }
        if k < steps {
            stepper.step(&mut f, t, &mut x, h);
        }
    }
    Ok(out)
}

/// Settle-and-hold verdict on a per-sample scalar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceVerdict {
    pub achieved: bool,
    pub settle_time: Option<f64>,
    pub final_value: f64,
    pub tolerance: f64,
}

/// Finds the earliest sample after which `metric(k) <= tolerance` holds
/// through the last sample.
pub fn settle_and_hold(
    len: usize,
    t0: f64,
    dt: f64,
    tolerance: f64,
    metric: impl Fn(usize) -> f64,
) -> ConvergenceVerdict {
    let mut first_ok = None;
    let mut final_value = f64::NAN;
    for k in 0..len {
        let v = metric(k);
        final_value = v;
        if v <= tolerance {
            first_ok.get_or_insert(k);
        } else {
            first_ok = None;
        }
    }
    ConvergenceVerdict {
        achieved: first_ok.is_some(),
        settle_time: first_ok.map(|k| t0 + k as f64 * dt),
        final_value,
        tolerance,
    }
}

/// Output consensus over a finite horizon: the largest pairwise gap between
/// node outputs must drop below `tolerance` and stay there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsensusVerdict {
    pub achieved: bool,
    pub settle_time: Option<f64>,
    pub final_max_pairwise_gap: f64,
    pub tolerance: f64,
}

pub fn max_pairwise_gap(y: &[f64], n: usize, m: usize) -> f64 {
    let mut gap = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            let d: f64 = (0..m)
                .map(|c| (y[i * m + c] - y[j * m + c]).powi(2))
                .sum::<f64>()
                .sqrt();
            gap = gap.max(d);
        }
    }
    gap
}

pub fn detect_consensus(traj: &Trajectory, tolerance: f64) -> Result<ConsensusVerdict> {
    if traj.node_count() < 2 {
        return Err(Error::RejectedInput("consensus needs at least two nodes".into()));
    }
    let (n, m) = (traj.node_count(), traj.io_dim());
    let v = settle_and_hold(traj.len(), traj.t0, traj.dt, tolerance, |k| {
        max_pairwise_gap(traj.y_p(k), n, m)
    });
    Ok(ConsensusVerdict {
        achieved: v.achieved,
        settle_time: v.settle_time,
        final_max_pairwise_gap: v.final_value,
        tolerance,
    })
}
