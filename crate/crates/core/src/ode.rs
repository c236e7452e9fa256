//! Fixed-step explicit integrators over flat state vectors.
//!
//! The right-hand side writes the derivative of `x` into `dx`. Scratch
//! buffers live in the stepper so the inner loop does not allocate.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Classic four-stage Runge-Kutta.
    Rk4,
    /// Explicit Euler. Only meant for fine-step reference runs.
    Euler,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Rk4 => "rk4",
            Method::Euler => "euler",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Stepper {
    method: Method,
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Stepper {
    pub fn new(method: Method, dim: usize) -> Self {
        let z = vec![0.0; dim];
        Self {
            method,
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            tmp: z,
        }
    }

    pub fn method(&self) -> Method {
        self.method
    }

    /// Advances `x` in place from time `t` by one step of size `dt`.
    pub fn step<F>(&mut self, rhs: &mut F, t: f64, x: &mut [f64], dt: f64)
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        match self.method {
            Method::Euler => {
                rhs(t, x, &mut self.k1);
                for (xi, ki) in x.iter_mut().zip(&self.k1) {
                    *xi += dt * ki;
                }
            }
            #[allow(clippy::needless_range_loop)]
            Method::Rk4 => {
                let n = x.len();
                rhs(t, x, &mut self.k1);
                for i in 0..n {
                    self.tmp[i] = x[i] + 0.5 * dt * self.k1[i];
                }
                rhs(t + 0.5 * dt, &self.tmp, &mut self.k2);
                for i in 0..n {
                    self.tmp[i] = x[i] + 0.5 * dt * self.k2[i];
                }
                rhs(t + 0.5 * dt, &self.tmp, &mut self.k3);
                for i in 0..n {
                    self.tmp[i] = x[i] + dt * self.k3[i];
                }
                rhs(t + dt, &self.tmp, &mut self.k4);
                for i in 0..n {
                    x[i] += dt / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
                }
            }
        }
    }
}
