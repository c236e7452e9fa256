//! Lur'e-Postnikov type Lyapunov candidates for the single loop and for the
//! networked interconnection, positive-definiteness sampling, and
//! monotonicity monitoring along simulated trajectories.
//!
//! Single loop:
//!
//! ```text
//! W = V_p(x_p) + V_c(x_c) - h_p(x_p).h_c(x_c) - sum_k int_0^{h_p^k(x_p)} g_c^k(s) ds
//! ```
//!
//! Networked, with `Yhat_p = (Q^T (x) I_m) Y_p`, `Pi_cx` the stacked
//! controller state outputs and `Pi_cu` the stacked feedthrough maps:
//!
//! ```text
//! What = sum V_pi + sum V_cl - Yhat_p.Pi_cx - sum_k int_0^{Yhat_p^k} Pi_cu^k(s) ds
//! ```
//!
//! Positive definiteness is established by sampling only, so a passing
//! [`DomainSampleReport`] is evidence and not a certificate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::exec::{self, Execution};
use crate::network::{dot, edge_inputs_into, InterconnectedSystem};
use crate::sim::Trajectory;
use crate::systems::{DissipationReport, DynamicSystem, Verdict, MAX_LISTED_VIOLATIONS};

pub const DEFAULT_QUAD_STEP: f64 = 1e-4;

/// How the feedthrough integral is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quadrature {
    /// Composite trapezoid with panel width at most `step`.
    Trapezoid { step: f64 },
    /// The system's closed-form primitive when it has one, otherwise the
    /// trapezoid rule at [`DEFAULT_QUAD_STEP`].
    #[default]
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_bound: f64,
}

/// Composite trapezoid of `f` over `[0, upper]` (signed when `upper < 0`).
///
/// Uses `2n` panels, `n = ceil(|upper| / step)`, and bounds the error by the
/// Richardson estimate `|T_2n - T_n| / 3`.
pub fn trapezoid<F: FnMut(f64) -> f64>(mut f: F, upper: f64, step: f64) -> Result<QuadratureResult> {
    if !(step > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "quadrature step must be positive, got {step}"
        )));
    }
    if upper == 0.0 {
        return Ok(QuadratureResult {
            value: 0.0,
            error_bound: 0.0,
        });
    }
    let n = ((upper.abs() / step).ceil() as usize).max(1);
    let h = upper / n as f64;
    let mut coarse = 0.5 * (f(0.0) + f(upper));
    for i in 1..n {
        coarse += f(i as f64 * h);
    }
    let mut mids = 0.0;
    for i in 0..n {
        mids += f((i as f64 + 0.5) * h);
    }
    let t_n = coarse * h;
    let t_2n = 0.5 * t_n + 0.5 * h * mids;
    Ok(QuadratureResult {
        value: t_2n,
        error_bound: (t_2n - t_n).abs() / 3.0,
    })
}

/// `sum_k int_0^{upper_k} g^k(s) ds` for a system's feedthrough.
pub fn feedthrough_integral(system: &DynamicSystem, upper: &[f64], quad: Quadrature) -> Result<QuadratureResult> {
    check_len("feedthrough_integral: limits", system.io_dim(), upper.len())?;
    let Some(g) = system.feedthrough_fn() else {
        return Ok(QuadratureResult {
            value: 0.0,
            error_bound: 0.0,
        });
    };
    let step = match quad {
        Quadrature::ClosedForm => {
            if let Some(v) = system.feedthrough_primitive(upper) {
                return Ok(QuadratureResult {
                    value: v,
                    error_bound: 0.0,
                });
            }
            DEFAULT_QUAD_STEP
        }
        Quadrature::Trapezoid { step } => step,
    };
    let m = system.io_dim();
    let mut u = vec![0.0; m];
    let mut y = vec![0.0; m];
    let mut total = QuadratureResult {
        value: 0.0,
        error_bound: 0.0,
    };
    for (k, &lim) in upper.iter().enumerate() {
        let r = trapezoid(
            |s| {
                u[k] = s;
                g(&u, &mut y);
                y[k]
            },
            lim,
            step,
        )?;
        u[k] = 0.0;
        total.value += r.value;
        total.error_bound += r.error_bound;
    }
    Ok(total)
}

/// The summed Lyapunov value and its parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovEvaluation {
    pub value: f64,
    pub plant_storage: f64,
    pub controller_storage: f64,
    pub cross_term: f64,
    pub integral_term: f64,
    pub quadrature_error_bound: f64,
}

impl LyapunovEvaluation {
    fn assemble(plant_storage: f64, controller_storage: f64, cross_term: f64, integral: QuadratureResult) -> Self {
        Self {
            value: plant_storage + controller_storage - cross_term - integral.value,
            plant_storage,
            controller_storage,
            cross_term,
            integral_term: integral.value,
            quadrature_error_bound: integral.error_bound,
        }
    }
}

fn require_storage(s: &DynamicSystem) -> Result<()> {
    if s.has_storage() {
        Ok(())
    } else {
        Err(Error::Unsupported(format!(
            "system '{}' has no storage function",
            s.name()
        )))
    }
}

/// Lyapunov candidate of the loop `u_c = y_p`, `u_p = y_c`.
pub fn eval_lyapunov_single(
    plant: &DynamicSystem,
    controller: &DynamicSystem,
    x_p: &[f64],
    x_c: &[f64],
    quad: Quadrature,
) -> Result<LyapunovEvaluation> {
    require_storage(plant)?;
    require_storage(controller)?;
    check_len("eval_lyapunov_single: io dims", plant.io_dim(), controller.io_dim())?;
    check_len("eval_lyapunov_single: x_p", plant.state_dim(), x_p.len())?;
    check_len("eval_lyapunov_single: x_c", controller.state_dim(), x_c.len())?;
    let h_p = plant.state_output(x_p);
    let h_c = controller.state_output(x_c);
    let integral = feedthrough_integral(controller, &h_p, quad)?;
    Ok(LyapunovEvaluation::assemble(
        plant.storage(x_p).unwrap_or(0.0),
        controller.storage(x_c).unwrap_or(0.0),
        dot(&h_p, &h_c),
        integral,
    ))
}

/// Lyapunov candidate of the networked loop.
pub fn eval_lyapunov_networked(
    sys: &InterconnectedSystem,
    x_p: &[f64],
    x_c: &[f64],
    quad: Quadrature,
) -> Result<LyapunovEvaluation> {
    check_len("eval_lyapunov_networked: X_p", sys.plant_state_dim(), x_p.len())?;
    check_len("eval_lyapunov_networked: X_c", sys.controller_state_dim(), x_c.len())?;
    for s in sys.plants().iter().chain(sys.controllers()) {
        require_storage(s)?;
    }
    let m = sys.io_dim();
    let mut y_p = vec![0.0; sys.plants().len() * m];
    let mut plant_storage = 0.0;
    for (i, p) in sys.plants().iter().enumerate() {
        let xs = &x_p[sys.plant_state_range(i)];
        p.state_output_into(xs, &mut y_p[i * m..(i + 1) * m]);
        plant_storage += p.storage(xs).unwrap_or(0.0);
    }
    let mut y_hat = vec![0.0; sys.controllers().len() * m];
    edge_inputs_into(sys.incidence(), &y_p, m, &mut y_hat);

    let mut controller_storage = 0.0;
    let mut cross = 0.0;
    let mut integral = QuadratureResult {
        value: 0.0,
        error_bound: 0.0,
    };
    let mut h_c = vec![0.0; m];
    for (l, c) in sys.controllers().iter().enumerate() {
        let xs = &x_c[sys.controller_state_range(l)];
        let lim = &y_hat[l * m..(l + 1) * m];
        controller_storage += c.storage(xs).unwrap_or(0.0);
        c.state_output_into(xs, &mut h_c);
        cross += dot(lim, &h_c);
        let r = feedthrough_integral(c, lim, quad)?;
        integral.value += r.value;
        integral.error_bound += r.error_bound;
    }
    Ok(LyapunovEvaluation::assemble(
        plant_storage,
        controller_storage,
        cross,
        integral,
    ))
}

/// Grid points per axis plus seeded uniform samples over the box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub grid_per_axis: usize,
    pub random_samples: usize,
}

/// Largest grid the sampler will enumerate.
pub const MAX_GRID_POINTS: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSampleReport {
    /// Points generated (grid plus random), excluding the origin.
    pub samples: usize,
    /// Nonzero points accepted by the domain predicate.
    pub accepted: usize,
    pub origin_value: f64,
    pub min_value: f64,
    /// Sample that decided the verdict: the origin when `W(0) != 0`,
    /// otherwise the accepted sample with the smallest value (lowest index
    /// on ties).
    pub argmin: Option<Vec<f64>>,
    pub verdict: Verdict,
}

pub const ORIGIN_TOL: f64 = 1e-12;

/// Samples `evaluator` over a box restricted to `in_domain` and reports
/// whether it is positive at every accepted nonzero point and zero at the
/// origin.
pub fn sample_positive_definiteness<E, D>(
    evaluator: E,
    in_domain: D,
    bounds: &[(f64, f64)],
    plan: SamplingPlan,
    seed: u64,
    execution: Execution,
) -> Result<DomainSampleReport>
where
    E: Fn(&[f64]) -> f64 + Sync,
    D: Fn(&[f64]) -> bool + Sync,
{
    if plan.grid_per_axis == 0 && plan.random_samples == 0 {
        return Err(Error::RejectedInput("sampling plan is empty".into()));
    }
    if bounds.is_empty() {
        return Err(Error::RejectedInput("domain box has no coordinates".into()));
    }
    if let Some((i, _)) = bounds
        .iter()
        .enumerate()
        .find(|(_, (lo, hi))| !(*lo <= 0.0 && 0.0 <= *hi))
    {
        return Err(Error::RejectedInput(format!(
            "domain box does not contain the origin in coordinate {i}"
        )));
    }
    let d = bounds.len();
    let grid_total = if plan.grid_per_axis == 0 {
        0
    } else {
        plan.grid_per_axis
            .checked_pow(d as u32)
            .filter(|&g| g <= MAX_GRID_POINTS)
            .ok_or_else(|| {
                Error::RejectedInput(format!(
                    "grid of {}^{d} points exceeds the limit of {MAX_GRID_POINTS}",
                    plan.grid_per_axis
                ))
            })?
    };

    let mut points: Vec<Vec<f64>> = Vec::with_capacity(grid_total + plan.random_samples);
    let axis = |i: usize, j: usize| {
        let (lo, hi) = bounds[i];
        if plan.grid_per_axis == 1 {
            0.0
        } else {
            lo + (hi - lo) * j as f64 / (plan.grid_per_axis - 1) as f64
        }
    };
    for idx in 0..grid_total {
        let mut rem = idx;
        let p = (0..d)
            .map(|i| {
                let j = rem % plan.grid_per_axis;
                rem /= plan.grid_per_axis;
                axis(i, j)
            })
            .collect();
        points.push(p);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..plan.random_samples {
        points.push(
            bounds
                .iter()
                .map(|&(lo, hi)| if lo == hi { lo } else { rng.gen_range(lo..=hi) })
                .collect(),
        );
    }

    let origin = vec![0.0; d];
    let origin_value = evaluator(&origin);
    let values: Vec<Option<f64>> = exec::map(execution, &points, |p| {
        if p.iter().all(|&v| v == 0.0) || !in_domain(p) {
            None
        } else {
            Some(evaluator(p))
        }
    });

    let mut accepted = 0;
    let mut best: Option<(usize, f64)> = None;
    for (k, v) in values.iter().enumerate() {
        if let Some(v) = *v {
            accepted += 1;
            if best.is_none_or(|(_, b)| v < b) {
                best = Some((k, v));
            }
        }
    }
    let origin_ok = origin_value.abs() <= ORIGIN_TOL;
    let (verdict, argmin) = if !origin_ok {
        (Verdict::Fail, Some(origin))
    } else {
        match best {
            None => (Verdict::Inconclusive, None),
            Some((k, v)) => (Verdict::from_pass(v > 0.0), Some(points[k].clone())),
        }
    };
    Ok(DomainSampleReport {
        samples: points.len(),
        accepted,
        origin_value,
        min_value: best.map_or(f64::NAN, |(_, v)| v),
        argmin,
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub samples: usize,
    pub w_initial: f64,
    pub w_final: f64,
    pub w_min: f64,
    pub w_max: f64,
    /// Largest `W(t_{k+1}) - W(t_k)`.
    pub max_step_increase: f64,
    pub max_step_increase_time: f64,
    /// Largest `W(t_{k+1}) - W(t_k) + eps_min int |Y_p'|^2 dt`.
    pub sharp_bound_max_excess: f64,
    pub epsilon_min: f64,
    pub tolerance: f64,
    /// Plain monotone form: `max_step_increase <= tolerance`.
    pub verdict: Verdict,
    pub sharp_verdict: Verdict,
    #[serde(skip)]
    pub values: Vec<f64>,
}

/// Evaluates the networked Lyapunov candidate at every recorded sample.
pub fn lyapunov_series(sys: &InterconnectedSystem, traj: &Trajectory, quad: Quadrature) -> Result<Vec<f64>> {
    (0..traj.len())
        .map(|k| eval_lyapunov_networked(sys, traj.x_p(k), traj.x_c(k), quad).map(|e| e.value))
        .collect()
}

/// Squared norm of the central-difference estimate of `Y_p'` per sample
/// (one-sided at the ends).
fn output_rate_sq(traj: &Trajectory) -> Vec<f64> {
    let n = traj.len();
    (0..n)
        .map(|k| {
            let (a, b, span) = match k {
                0 => (0, 1, 1.0),
                k if k == n - 1 => (n - 2, n - 1, 1.0),
                k => (k - 1, k + 1, 2.0),
            };
            let (ya, yb) = (traj.y_p(a), traj.y_p(b));
            ya.iter()
                .zip(yb)
                .map(|(p, q)| ((q - p) / (span * traj.dt)).powi(2))
                .sum()
        })
        .collect()
}

/// Tracks the networked Lyapunov candidate along `traj`.
pub fn monitor_monotonicity(
    sys: &InterconnectedSystem,
    traj: &Trajectory,
    quad: Quadrature,
    tolerance: f64,
) -> Result<MonotonicityReport> {
    if traj.len() < 2 || traj.y_p(0).is_empty() {
        return Err(Error::InsufficientData {
            needed: 2,
            actual: traj.len(),
        });
    }
    let values = match traj.w_hat() {
        Some(w) => w.to_vec(),
        None => lyapunov_series(sys, traj, quad)?,
    };
    let rate = output_rate_sq(traj);
    let eps = sys.min_plant_epsilon();
    let mut max_inc = f64::NEG_INFINITY;
    let mut max_inc_t = traj.t0;
    let mut sharp = f64::NEG_INFINITY;
    for k in 0..values.len() - 1 {
        let dw = values[k + 1] - values[k];
        if dw > max_inc {
            max_inc = dw;
            max_inc_t = traj.time(k + 1);
        }
        let dissipated = eps * 0.5 * traj.dt * (rate[k] + rate[k + 1]);
        sharp = sharp.max(dw + dissipated);
    }
    let (w_min, w_max) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    Ok(MonotonicityReport {
        samples: values.len(),
        w_initial: values[0],
        w_final: *values.last().unwrap(),
        w_min,
        w_max,
        max_step_increase: max_inc,
        max_step_increase_time: max_inc_t,
        sharp_bound_max_excess: sharp,
        epsilon_min: eps,
        tolerance,
        verdict: Verdict::from_pass(max_inc <= tolerance),
        sharp_verdict: Verdict::from_pass(sharp <= tolerance),
        values,
    })
}

/// Dissipation of the networked node plants along a closed-loop run:
/// `sum V_pi' - Uhat_p.Yhat_p' + eps_min |Y_p'|^2 <= tol`, with
/// `Uhat_p = Y_c` and `Yhat_p = (Q^T (x) I_m) Y_p`.
pub fn check_networked_plant_dissipation(
    sys: &InterconnectedSystem,
    traj: &Trajectory,
    tolerance: f64,
) -> Result<DissipationReport> {
    let len = traj.len();
    if len < 3 {
        return Err(Error::InsufficientData { needed: 3, actual: len });
    }
    for p in sys.plants() {
        require_storage(p)?;
    }
    let m = sys.io_dim();
    let eps = sys.min_plant_epsilon();
    let inv2dt = 0.5 / traj.dt;
    let storage = |k: usize| -> f64 {
        sys.plants()
            .iter()
            .enumerate()
            .map(|(i, p)| p.storage(&traj.x_p(k)[sys.plant_state_range(i)]).unwrap_or(0.0))
            .sum()
    };
    let mut yhat_prev = vec![0.0; sys.controllers().len() * m];
    let mut yhat_next = yhat_prev.clone();
    let mut max_violation = f64::NEG_INFINITY;
    let mut violation_count = 0;
    let mut violating_times = Vec::new();
    for k in 1..len - 1 {
        let v_dot = (storage(k + 1) - storage(k - 1)) * inv2dt;
        edge_inputs_into(sys.incidence(), traj.y_p(k - 1), m, &mut yhat_prev);
        edge_inputs_into(sys.incidence(), traj.y_p(k + 1), m, &mut yhat_next);
        let uhat = traj.y_c(k);
        let supply: f64 = (0..uhat.len())
            .map(|j| uhat[j] * (yhat_next[j] - yhat_prev[j]) * inv2dt)
            .sum();
        let strict: f64 = traj
            .y_p(k + 1)
            .iter()
            .zip(traj.y_p(k - 1))
            .map(|(a, b)| ((a - b) * inv2dt).powi(2))
            .sum();
        let r = v_dot - supply + eps * strict;
        max_violation = max_violation.max(r);
        if r > tolerance {
            violation_count += 1;
            if violating_times.len() < MAX_LISTED_VIOLATIONS {
                violating_times.push(traj.time(k));
            }
        }
    }
    Ok(DissipationReport {
        samples: len - 2,
        max_violation,
        violation_count,
        violating_times,
        epsilon: eps,
        tolerance,
        verdict: Verdict::from_pass(max_violation <= tolerance),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plant(m: f64) -> DynamicSystem {
        DynamicSystem::builder("swing", 2, 1)
            .dynamics(move |x, u, dx| {
                dx[0] = (-x[0] + u[0]) / m;
                dx[1] = x[0];
            })
            .state_output(|x, y| y[0] = x[1])
            .storage(move |x| 0.5 * m * x[0] * x[0])
            .osni_epsilon(1.0)
            .build()
            .unwrap()
    }

    #[test]
    fn trapezoid_sign_and_zero_limit() {
        let r = trapezoid(|s| s, -2.0, 1e-3).unwrap();
        assert!((r.value - 2.0).abs() < 1e-12);
        assert_eq!(trapezoid(|s| s.cos(), 0.0, 1e-3).unwrap().value, 0.0);
        assert!(trapezoid(|s| s, 1.0, 0.0).is_err());
    }

    #[test]
    fn trapezoid_error_bound_is_honest() {
        let exact = 1.0 - 0.7f64.cos();
        for step in [1e-1, 1e-2, 1e-3] {
            let r = trapezoid(f64::sin, 0.7, step).unwrap();
            assert!((r.value - exact).abs() <= 1.01 * r.error_bound + 1e-15, "step {step}");
        }
    }

    #[test]
    fn single_loop_at_origin_is_zero() {
        let c = DynamicSystem::static_map("sin", 1, |u, y| y[0] = u[0].sin()).unwrap();
        let e = eval_lyapunov_single(&plant(2.0), &c, &[0.0, 0.0], &[], Quadrature::Trapezoid { step: 1e-4 }).unwrap();
        assert_eq!(
            e,
            LyapunovEvaluation::assemble(
                0.0,
                0.0,
                0.0,
                QuadratureResult {
                    value: 0.0,
                    error_bound: 0.0
                }
            )
        );
    }

    #[test]
    fn single_loop_sine_controller() {
        let c = DynamicSystem::static_map("sin", 1, |u, y| y[0] = u[0].sin()).unwrap();
        let e = eval_lyapunov_single(&plant(2.0), &c, &[1.0, 0.5], &[], Quadrature::Trapezoid { step: 1e-4 }).unwrap();
        assert!((e.plant_storage - 1.0).abs() < 1e-15);
        assert!((e.value - 0.8775825619).abs() < 1e-9, "{}", e.value);
        assert!((e.value - 0.5f64.cos()).abs() < 1e-9);
    }

    #[test]
    fn missing_storage_is_unsupported() {
        let p = DynamicSystem::builder("nostore", 1, 1)
            .dynamics(|x, u, dx| dx[0] = -x[0] + u[0])
            .state_output(|x, y| y[0] = x[0])
            .build()
            .unwrap();
        let c = DynamicSystem::static_map("c", 1, |u, y| y[0] = -u[0]).unwrap();
        assert!(matches!(
            eval_lyapunov_single(&p, &c, &[0.0], &[], Quadrature::ClosedForm),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn sampler_flags_nonzero_origin_and_empty_domain() {
        let bounds = [(-1.0, 1.0), (-1.0, 1.0)];
        let plan = SamplingPlan {
            grid_per_axis: 5,
            random_samples: 10,
        };
        let r = sample_positive_definiteness(|x| 0.5 + x[0] * x[0], |_| true, &bounds, plan, 0, Execution::Sequential)
            .unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert_eq!(r.argmin, Some(vec![0.0, 0.0]));

        let r = sample_positive_definiteness(
            |x| x[0] * x[0] + x[1] * x[1],
            |_| false,
            &bounds,
            plan,
            0,
            Execution::Sequential,
        )
        .unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
        assert_eq!(r.accepted, 0);

        let r = sample_positive_definiteness(
            |x| x[0] * x[0] + x[1] * x[1],
            |_| true,
            &bounds,
            plan,
            0,
            Execution::Sequential,
        )
        .unwrap();
        assert!(r.verdict.is_pass());
        assert_eq!(r.samples, 35);
        assert_eq!(r.accepted, 34);

        let r =
            sample_positive_definiteness(|x| x[0] * x[0], |_| true, &bounds, plan, 0, Execution::Sequential).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert_eq!(r.min_value, 0.0);
    }

    #[test]
    fn sampler_rejects_bad_plans() {
        let ok = |_: &[f64]| 1.0;
        let t = |_: &[f64]| true;
        let empty = SamplingPlan {
            grid_per_axis: 0,
            random_samples: 0,
        };
        assert!(sample_positive_definiteness(ok, t, &[(-1.0, 1.0)], empty, 0, Execution::Sequential).is_err());
        let plan = SamplingPlan {
            grid_per_axis: 3,
            random_samples: 0,
        };
        assert!(sample_positive_definiteness(ok, t, &[(0.5, 1.0)], plan, 0, Execution::Sequential).is_err());
        let huge = SamplingPlan {
            grid_per_axis: 100,
            random_samples: 0,
        };
        assert!(sample_positive_definiteness(ok, t, &[(-1.0, 1.0); 8], huge, 0, Execution::Sequential).is_err());
    }

    #[test]
    fn sampler_is_execution_independent() {
        let bounds = [(-0.5, 0.5), (-0.5, 0.5), (-1.0, 1.0)];
        let plan = SamplingPlan {
            grid_per_axis: 7,
            random_samples: 500,
        };
        let f = |x: &[f64]| (x[0] - x[1]).powi(2) + x[2].powi(4) - 0.01 * x[0].abs();
        let a = sample_positive_definiteness(f, |_| true, &bounds, plan, 9, Execution::Sequential).unwrap();
        let b = sample_positive_definiteness(f, |_| true, &bounds, plan, 9, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }
}
