//! Fixed-step classical Runge–Kutta with a Richardson error monitor,
//! composite Simpson quadrature and the closed-form Riccati solution.

use serde::Serialize;

use crate::error::{Error, Result};

pub fn rk4_step<F: Fn(f64, f64) -> f64>(f: &F, t: f64, y: f64, h: f64) -> f64 {
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, y + 0.5 * h * k1);
    let k3 = f(t + 0.5 * h, y + 0.5 * h * k2);
    let k4 = f(t + h, y + h * k3);
    y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// `n` equal RK4 steps from `t0` to `t1`.
pub fn rk4<F: Fn(f64, f64) -> f64>(f: &F, t0: f64, t1: f64, y0: f64, n: usize) -> f64 {
    let h = (t1 - t0) / n as f64;
    (0..n).fold(y0, |y, k| rk4_step(f, t0 + k as f64 * h, y, h))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Integration {
    pub value: f64,
    /// Richardson estimate `|y_h − y_{2h}| / 15` of the global truncation error.
    pub error_estimate: f64,
    pub steps: usize,
}

/// Step count for step size `h` on an interval of length `len`.
pub fn step_count(len: f64, h: f64) -> Result<usize> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::StepRejected(format!(
            "step size {h} must be positive"
        )));
    }
    let n = (len / h).round().max(2.0) as usize;
    Ok(n + n % 2)
}

/// RK4 at step `h` with the monitor from a second pass at `2h`. Rejects the
/// step size when the estimate exceeds `rel_tol · max(|y|, floor)`.
pub fn rk4_monitored<F: Fn(f64, f64) -> f64>(
    f: &F,
    t0: f64,
    t1: f64,
    y0: f64,
    h: f64,
    rel_tol: f64,
    floor: f64,
) -> Result<Integration> {
    let n = step_count(t1 - t0, h)?;
    let fine = rk4(f, t0, t1, y0, n);
    let coarse = rk4(f, t0, t1, y0, n / 2);
    let error_estimate = (fine - coarse).abs() / 15.0;
    if !fine.is_finite() || error_estimate > rel_tol * fine.abs().max(floor) {
        return Err(Error::StepRejected(format!(
            "h = {h}: error estimate {error_estimate:e} exceeds tolerance {rel_tol:e} at value {fine:e}"
        )));
    }
    Ok(Integration {
        value: fine,
        error_estimate,
        steps: n,
    })
}

/// Solution at `t` of `f′ = −½f² − c`, `f(0) = f0`, for `c > 0`.
pub fn riccati_exact(c: f64, f0: f64, t: f64) -> f64 {
    let s = (2.0 * c).sqrt();
    s * ((f0 / s).atan() - 0.5 * s * t).tan()
}

/// Composite Simpson weights on `n` (odd) equally spaced nodes over `[0, 1]`,
/// as integer multiples of `1 / (3(n − 1))`.
pub fn simpson_weights(n: usize) -> Vec<u32> {
    assert!(n >= 3 && n % 2 == 1, "Simpson needs an odd node count ≥ 3");
    (0..n)
        .map(|k| {
            if k == 0 || k == n - 1 {
                1
            } else if k % 2 == 1 {
                4
            } else {
                2
            }
        })
        .collect()
}

/// Composite Simpson integral over `[0, 1]` of samples at `n` nodes.
pub fn simpson(samples: &[f64]) -> f64 {
    let w = simpson_weights(samples.len());
    let s: f64 = samples.iter().zip(&w).map(|(x, w)| x * *w as f64).sum();
    s / (3.0 * (samples.len() - 1) as f64)
}

/// Piecewise-linear interpolation of samples on the uniform grid over `[0, 1]`.
pub fn interpolate(samples: &[f64], t: f64) -> f64 {
    let n = samples.len() - 1;
    let x = (t.clamp(0.0, 1.0)) * n as f64;
    let k = (x.floor() as usize).min(n - 1);
    let w = x - k as f64;
    samples[k] * (1.0 - w) + samples[k + 1] * w
}
