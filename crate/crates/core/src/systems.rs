//! Nonlinear MIMO state-space systems of the form
//!
//! ```text
//! x' = f(x, u)
//! y  = h(x) + g(u)
//! ```
//!
//! with an optional storage function `V(x)` and a declared output-strictness
//! level `epsilon` (zero for a plain negative-imaginary claim). A system with
//! `state_dim == 0` is static: `y = g(u)` with storage identically zero.
//!
//! Everything here treats `f`, `h`, `g` and `V` as black boxes. The
//! dissipation check estimates `dV/dt` and `dh/dt` by central differences over
//! a sampled trace, so it applies to any system the caller can simulate.
//!
//! Observability-like and input-effect conditions on a system (a constant
//! output forcing a constant state, a constant state forcing a constant input)
//! have no constructive test for black-box `f`. They are established by hand
//! for the linear bus models in [`crate::grid`] and are not enforced here.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::ode::{Method, Stepper};

pub type DynamicsFn = Arc<dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync>;
pub type OutputFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Outcome of a numeric check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn from_pass(pass: bool) -> Self {
        if pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn is_pass(self) -> bool {
        self == Verdict::Pass
    }

    /// Combines verdicts: any failure fails, otherwise any inconclusive
    /// result is inconclusive.
    pub fn and(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Verdict::Fail, _) | (_, Verdict::Fail) => Verdict::Fail,
            (Verdict::Inconclusive, _) | (_, Verdict::Inconclusive) => Verdict::Inconclusive,
            _ => Verdict::Pass,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// A state-space model `x' = f(x,u)`, `y = h(x) + g(u)`.
///
/// Immutable after construction and cheap to clone.
#[derive(Clone)]
pub struct DynamicSystem {
    name: String,
    state_dim: usize,
    io_dim: usize,
    dynamics: Option<DynamicsFn>,
    state_output: Option<OutputFn>,
    feedthrough: Option<OutputFn>,
    feedthrough_primitive: Option<ScalarFn>,
    storage: Option<ScalarFn>,
    osni_epsilon: f64,
}

impl fmt::Debug for DynamicSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DynamicSystem")
            .field("name", &self.name)
            .field("state_dim", &self.state_dim)
            .field("io_dim", &self.io_dim)
            .field("has_feedthrough", &self.feedthrough.is_some())
            .field("has_storage", &self.storage.is_some())
            .field("osni_epsilon", &self.osni_epsilon)
            .finish()
    }
}

pub struct SystemBuilder {
    name: String,
    state_dim: usize,
    io_dim: usize,
    dynamics: Option<DynamicsFn>,
    state_output: Option<OutputFn>,
    feedthrough: Option<OutputFn>,
    feedthrough_primitive: Option<ScalarFn>,
    storage: Option<ScalarFn>,
    osni_epsilon: f64,
}

impl SystemBuilder {
    pub fn dynamics<F>(mut self, f: F) -> Self
    where
        F: Fn(&[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        self.dynamics = Some(Arc::new(f));
        self
    }

    /// The state-dependent output part `h`. Omitted means `h == 0`.
    pub fn state_output<F>(mut self, h: F) -> Self
    where
        F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        self.state_output = Some(Arc::new(h));
        self
    }

    /// The direct feedthrough `g`. Omitted means `g == 0`.
    pub fn feedthrough<F>(mut self, g: F) -> Self
    where
        F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        self.feedthrough = Some(Arc::new(g));
        self
    }

    /// Closed form of `sum_k integral_0^{u_k} g_k(s) ds`, when known. Lets
    /// the Lyapunov evaluator skip quadrature.
    pub fn feedthrough_primitive<F>(mut self, p: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        self.feedthrough_primitive = Some(Arc::new(p));
        self
    }

    pub fn storage<F>(mut self, v: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        self.storage = Some(Arc::new(v));
        self
    }

    pub fn osni_epsilon(mut self, eps: f64) -> Self {
        self.osni_epsilon = eps;
        self
    }

    pub fn build(self) -> Result<DynamicSystem> {
        if self.io_dim == 0 {
            return Err(Error::InvalidParameter(format!(
                "system '{}': io_dim must be positive",
                self.name
            )));
        }
        if !(self.osni_epsilon >= 0.0 && self.osni_epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "system '{}': osni_epsilon must be finite and nonnegative, got {}",
                self.name, self.osni_epsilon
            )));
        }
        if self.state_dim > 0 && self.dynamics.is_none() {
            return Err(Error::InvalidParameter(format!(
                "system '{}': dynamic system without f",
                self.name
            )));
        }
        let storage = match (self.state_dim, self.storage) {
            (0, None) => Some(Arc::new(|_: &[f64]| 0.0) as ScalarFn),
            (_, s) => s,
        };
        Ok(DynamicSystem {
            name: self.name,
            state_dim: self.state_dim,
            io_dim: self.io_dim,
            dynamics: self.dynamics,
            state_output: self.state_output,
            feedthrough: self.feedthrough,
            feedthrough_primitive: self.feedthrough_primitive,
            storage,
            osni_epsilon: self.osni_epsilon,
        })
    }
}

impl DynamicSystem {
    pub fn builder(name: impl Into<String>, state_dim: usize, io_dim: usize) -> SystemBuilder {
        SystemBuilder {
            name: name.into(),
            state_dim,
            io_dim,
            dynamics: None,
            state_output: None,
            feedthrough: None,
            feedthrough_primitive: None,
            storage: None,
            osni_epsilon: 0.0,
        }
    }

    /// Static system `y = g(u)` with zero storage.
    pub fn static_map<G>(name: impl Into<String>, io_dim: usize, g: G) -> Result<Self>
    where
        G: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self::builder(name, 0, io_dim).feedthrough(g).build()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn io_dim(&self) -> usize {
        self.io_dim
    }

    pub fn is_static(&self) -> bool {
        self.state_dim == 0
    }

    pub fn has_feedthrough(&self) -> bool {
        self.feedthrough.is_some()
    }

    pub fn has_storage(&self) -> bool {
        self.storage.is_some()
    }

    pub fn has_feedthrough_primitive(&self) -> bool {
        self.feedthrough_primitive.is_some()
    }

    pub fn osni_epsilon(&self) -> f64 {
        self.osni_epsilon
    }

    /// Returns `(f(x,u), h(x) + g(u))`.
    pub fn evaluate(&self, x: &[f64], u: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        check_len("evaluate: state", self.state_dim, x.len())?;
        check_len("evaluate: input", self.io_dim, u.len())?;
        let mut dx = vec![0.0; self.state_dim];
        let mut y = vec![0.0; self.io_dim];
        self.dynamics_into(x, u, &mut dx);
        self.output_into(x, u, &mut y);
        Ok((dx, y))
    }

    /// Unchecked `f(x,u)` into `dx`.
    pub fn dynamics_into(&self, x: &[f64], u: &[f64], dx: &mut [f64]) {
        if let Some(f) = &self.dynamics {
            f(x, u, dx);
        }
    }

    /// Unchecked `h(x)` into `y`.
    pub fn state_output_into(&self, x: &[f64], y: &mut [f64]) {
        match &self.state_output {
            Some(h) => h(x, y),
            None => y.fill(0.0),
        }
    }

    /// Unchecked `g(u)` into `y`.
    pub fn feedthrough_into(&self, u: &[f64], y: &mut [f64]) {
        match &self.feedthrough {
            Some(g) => g(u, y),
            None => y.fill(0.0),
        }
    }

    /// Unchecked `h(x) + g(u)` into `y`.
    pub fn output_into(&self, x: &[f64], u: &[f64], y: &mut [f64]) {
        self.state_output_into(x, y);
        if let Some(g) = &self.feedthrough {
            let mut gy = vec![0.0; self.io_dim];
            g(u, &mut gy);
            for (yi, gi) in y.iter_mut().zip(&gy) {
                *yi += gi;
            }
        }
    }

    pub fn state_output(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.io_dim];
        self.state_output_into(x, &mut y);
        y
    }

    pub fn feedthrough(&self, u: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.io_dim];
        self.feedthrough_into(u, &mut y);
        y
    }

    /// `g_k` evaluated with channel `k` set to `value` and every other
    /// channel at zero. Channel independence makes this the scalar map of
    /// channel `k`.
    pub fn feedthrough_channel(&self, channel: usize, value: f64) -> f64 {
        let Some(g) = &self.feedthrough else {
            return 0.0;
        };
        let mut u = vec![0.0; self.io_dim];
        let mut y = vec![0.0; self.io_dim];
        u[channel] = value;
        g(&u, &mut y);
        y[channel]
    }

    pub fn feedthrough_primitive(&self, u: &[f64]) -> Option<f64> {
        self.feedthrough_primitive.as_ref().map(|p| p(u))
    }

    pub fn storage(&self, x: &[f64]) -> Option<f64> {
        self.storage.as_ref().map(|v| v(x))
    }

    pub(crate) fn feedthrough_fn(&self) -> Option<&OutputFn> {
        self.feedthrough.as_ref()
    }

    /// Channel-independence check of this system's feedthrough.
    pub fn check_channel_independence(&self, sample_count: usize, seed: u64) -> Result<ChannelReport> {
        match &self.feedthrough {
            Some(g) => check_channel_independence(g.as_ref(), self.io_dim, sample_count, seed),
            None => {
                check_channel_independence(&|_: &[f64], y: &mut [f64]| y.fill(0.0), self.io_dim, sample_count, seed)
            }
        }
    }
}

/// Uniformly sampled state and input history of one system.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemTrace {
    pub t0: f64,
    pub dt: f64,
    state_dim: usize,
    io_dim: usize,
    states: Vec<f64>,
    inputs: Vec<f64>,
}

impl SystemTrace {
    pub fn new(t0: f64, dt: f64, state_dim: usize, io_dim: usize, states: Vec<f64>, inputs: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter(format!("trace dt must be positive, got {dt}")));
        }
        if io_dim == 0 || !inputs.len().is_multiple_of(io_dim) {
            return Err(Error::RejectedInput(
                "input buffer is not a whole number of samples".into(),
            ));
        }
        let len = inputs.len() / io_dim;
        check_len("trace states", len * state_dim, states.len())?;
        Ok(Self {
            t0,
            dt,
            state_dim,
            io_dim,
            states,
            inputs,
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.len() / self.io_dim
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn state(&self, k: usize) -> &[f64] {
        &self.states[k * self.state_dim..(k + 1) * self.state_dim]
    }

    pub fn input(&self, k: usize) -> &[f64] {
        &self.inputs[k * self.io_dim..(k + 1) * self.io_dim]
    }
}

/// Simulates `system` from `x0` under the open-loop input `input(t, u)`.
pub fn simulate_open_loop<I>(
    system: &DynamicSystem,
    x0: &[f64],
    input: I,
    horizon: f64,
    dt: f64,
    method: Method,
) -> Result<SystemTrace>
where
    I: Fn(f64, &mut [f64]),
{
    check_len("simulate_open_loop: initial state", system.state_dim, x0.len())?;
    if !(dt > 0.0) || !(horizon >= dt) {
        return Err(Error::InvalidParameter(format!(
            "need dt > 0 and horizon >= dt, got dt = {dt}, horizon = {horizon}"
        )));
    }
    // Uniform steps no longer than dt that end exactly at the horizon.
    let steps = ((horizon / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let dt = horizon / steps as f64;
    let n = system.state_dim;
    let m = system.io_dim;
    let mut states = Vec::with_capacity((steps + 1) * n);
    let mut inputs = Vec::with_capacity((steps + 1) * m);
    let mut x = x0.to_vec();
    let mut u = vec![0.0; m];
    let mut stepper = Stepper::new(method, n);
    let mut u_stage = vec![0.0; m];
    let mut rhs = |t: f64, x: &[f64], dx: &mut [f64]| {
        input(t, &mut u_stage);
        system.dynamics_into(x, &u_stage, dx);
    };
    for k in 0..=steps {
        let t = k as f64 * dt;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { time: t });
        }
        input(t, &mut u);
        states.extend_from_slice(&x);
        inputs.extend_from_slice(&u);
        if k < steps {
            stepper.step(&mut rhs, t, &mut x, dt);
        }
    }
    SystemTrace::new(0.0, dt, n, m, states, inputs)
}

/// A pair of inputs showing that perturbing one channel moved another.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossChannelWitness {
    pub base_input: Vec<f64>,
    pub perturbed_channel: usize,
    pub affected_channel: usize,
    pub output_change: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelReport {
    pub samples: usize,
    /// Largest `|g_k(0)|`.
    pub zero_output_error: f64,
    pub witness: Option<CrossChannelWitness>,
    pub verdict: Verdict,
}

const CHANNEL_TOL: f64 = 1e-12;

/// Checks that `g(0) = 0` and that `g` acts channel-wise, by perturbing one
/// channel at a time around seeded random inputs in `[-1, 1]^m`.
pub fn check_channel_independence(
    g: &dyn Fn(&[f64], &mut [f64]),
    io_dim: usize,
    sample_count: usize,
    seed: u64,
) -> Result<ChannelReport> {
    if sample_count == 0 {
        return Err(Error::RejectedInput("sample_count must be at least 1".into()));
    }
    if io_dim == 0 {
        return Err(Error::RejectedInput("io_dim must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zero = vec![0.0; io_dim];
    let mut y0 = vec![0.0; io_dim];
    g(&zero, &mut y0);
    let zero_output_error = y0.iter().fold(0.0f64, |a, v| a.max(v.abs()));

    let mut base = vec![0.0; io_dim];
    let mut pert = vec![0.0; io_dim];
    let mut yb = vec![0.0; io_dim];
    let mut yp = vec![0.0; io_dim];
    let mut witness = None;
    'outer: for _ in 0..sample_count {
        for v in base.iter_mut() {
            *v = rng.gen_range(-1.0..=1.0);
        }
        g(&base, &mut yb);
        for j in 0..io_dim {
            let mut delta: f64 = rng.gen_range(-0.5..=0.5);
            if delta.abs() < 1e-3 {
                delta = 0.25;
            }
            pert.copy_from_slice(&base);
            pert[j] += delta;
            g(&pert, &mut yp);
            for k in (0..io_dim).filter(|&k| k != j) {
                let change = yp[k] - yb[k];
                if change.abs() > CHANNEL_TOL * (1.0 + yb[k].abs()) {
                    witness = Some(CrossChannelWitness {
                        base_input: base.clone(),
                        perturbed_channel: j,
                        affected_channel: k,
                        output_change: change,
                    });
                    break 'outer;
                }
            }
        }
    }
    let verdict = Verdict::from_pass(witness.is_none() && zero_output_error <= CHANNEL_TOL);
    Ok(ChannelReport {
        samples: sample_count,
        zero_output_error,
        witness,
        verdict,
    })
}

/// Result of checking `V' - u.h' + eps |h'|^2 <= tol` along a trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissipationReport {
    /// Number of interior samples where the residual was evaluated.
    pub samples: usize,
    pub max_violation: f64,
    pub violation_count: usize,
    /// Times of the first violating samples (at most [`MAX_LISTED_VIOLATIONS`]).
    pub violating_times: Vec<f64>,
    pub epsilon: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
}

pub const MAX_LISTED_VIOLATIONS: usize = 32;

/// Default dissipation tolerance at `dt = 1e-3`.
pub const DEFAULT_DISSIPATION_TOL: f64 = 1e-6;

/// Central differences are second order, so a tolerance calibrated at one
/// step size scales as `C dt^2`.
pub fn dissipation_tolerance_for(dt: f64) -> f64 {
    DEFAULT_DISSIPATION_TOL * (dt / 1e-3).powi(2)
}

/// Checks the (output strict) negative-imaginary dissipation inequality
/// along `trace`, estimating `V'` and `h'` by central differences at every
/// interior sample.
pub fn check_dissipation(
    system: &DynamicSystem,
    trace: &SystemTrace,
    epsilon: f64,
    tolerance: f64,
) -> Result<DissipationReport> {
    if !system.has_storage() {
        return Err(Error::Unsupported(format!(
            "system '{}' has no storage function",
            system.name
        )));
    }
    check_len("check_dissipation: trace state dim", system.state_dim, trace.state_dim)?;
    check_len("check_dissipation: trace io dim", system.io_dim, trace.io_dim)?;
    let len = trace.len();
    if len < 3 {
        return Err(Error::InsufficientData { needed: 3, actual: len });
    }
    let m = system.io_dim;
    let inv2dt = 0.5 / trace.dt;
    let mut h_prev = vec![0.0; m];
    let mut h_next = vec![0.0; m];
    let mut max_violation = f64::NEG_INFINITY;
    let mut violation_count = 0;
    let mut violating_times = Vec::new();
    for k in 1..len - 1 {
        let xp = trace.state(k - 1);
        let xn = trace.state(k + 1);
        let v_dot = (system.storage(xn).unwrap_or(0.0) - system.storage(xp).unwrap_or(0.0)) * inv2dt;
        system.state_output_into(xp, &mut h_prev);
        system.state_output_into(xn, &mut h_next);
        let u = trace.input(k);
        let mut supply = 0.0;
        let mut strict = 0.0;
        for c in 0..m {
            let hd = (h_next[c] - h_prev[c]) * inv2dt;
            supply += u[c] * hd;
            strict += hd * hd;
        }
        let r = v_dot - supply + epsilon * strict;
        if r > max_violation {
            max_violation = r;
        }
        if r > tolerance {
            violation_count += 1;
            if violating_times.len() < MAX_LISTED_VIOLATIONS {
                violating_times.push(trace.time(k));
            }
        }
    }
    Ok(DissipationReport {
        samples: len - 2,
        max_violation,
        violation_count,
        violating_times,
        epsilon,
        tolerance,
        verdict: Verdict::from_pass(max_violation <= tolerance),
    })
}

/// Which sign condition a steady state must satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    /// `u.y >= 0`.
    Plant,
    /// `u.y <= -gamma |u|^2`.
    Controller,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateReport {
    pub role: Role,
    pub u_bar: Vec<f64>,
    pub y_bar: Vec<f64>,
    /// `u_bar . y_bar`.
    pub supply: f64,
    /// Right-hand side of the sign condition (`0` or `-gamma |u|^2`).
    pub bound: f64,
    pub settled_at: Option<f64>,
    pub verdict: Verdict,
}

/// Step used when driving a system to steady state.
pub const STEADY_STATE_DT: f64 = 1e-2;
/// Number of consecutive steps with `|y'| < tol` that count as settled.
pub const STEADY_STATE_WINDOW: usize = 100;

/// Drives `system` from rest with the constant input `u_bar` and, once the
/// output has settled, checks the steady-state sign condition of `role`.
/// A run that never settles within `settle_time` is inconclusive.
pub fn check_steady_state_sign(
    system: &DynamicSystem,
    u_bar: &[f64],
    role: Role,
    gamma: f64,
    settle_time: f64,
    tolerance: f64,
) -> Result<SteadyStateReport> {
    check_len("check_steady_state_sign: input", system.io_dim, u_bar.len())?;
    if !(settle_time > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "settle_time must be positive, got {settle_time}"
        )));
    }
    if !(gamma >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "gamma must be nonnegative, got {gamma}"
        )));
    }
    if !system.is_static() && !system.has_storage() {
        return Err(Error::Unsupported(format!(
            "system '{}' is dynamic and has no storage function",
            system.name
        )));
    }
    let m = system.io_dim;
    let n = system.state_dim;
    let mut y = vec![0.0; m];
    let mut y_prev = vec![0.0; m];
    let mut x = vec![0.0; n];
    let mut settled_at = None;

    if system.is_static() {
        system.output_into(&x, u_bar, &mut y);
        settled_at = Some(0.0);
    } else {
        let dt = STEADY_STATE_DT;
        let steps = (settle_time / dt).ceil() as usize;
        let mut stepper = Stepper::new(Method::Rk4, n);
        let mut rhs = |_t: f64, x: &[f64], dx: &mut [f64]| system.dynamics_into(x, u_bar, dx);
        system.output_into(&x, u_bar, &mut y_prev);
        let mut quiet = 0usize;
        for k in 0..steps {
            stepper.step(&mut rhs, k as f64 * dt, &mut x, dt);
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::Divergence {
                    time: (k + 1) as f64 * dt,
                });
            }
            system.output_into(&x, u_bar, &mut y);
            let rate = y
                .iter()
                .zip(&y_prev)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
                / dt;
            quiet = if rate < tolerance { quiet + 1 } else { 0 };
            y_prev.copy_from_slice(&y);
            if quiet >= STEADY_STATE_WINDOW {
                settled_at = Some((k + 1) as f64 * dt);
                break;
            }
        }
    }

    let supply: f64 = u_bar.iter().zip(&y).map(|(a, b)| a * b).sum();
    let u_sq: f64 = u_bar.iter().map(|v| v * v).sum();
    let bound = match role {
        Role::Plant => 0.0,
        Role::Controller => -gamma * u_sq,
    };
    let verdict = match settled_at {
        None => Verdict::Inconclusive,
        Some(_) => Verdict::from_pass(match role {
            Role::Plant => supply >= -tolerance,
            Role::Controller => supply <= bound + tolerance,
        }),
    };
    Ok(SteadyStateReport {
        role,
        u_bar: u_bar.to_vec(),
        y_bar: y,
        supply,
        bound,
        settled_at,
        verdict,
    })
}
