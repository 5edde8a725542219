//! Analytical model of ADAM's behavior along an equidistant 1-D trace:
//! exponentially decaying gradient weights, weighted expectation/variance of
//! the gradient, the resulting closed-form step-size approximation, and the
//! stagnation predicate built on it.
//!
//! Note one deliberate asymmetry with the `optimizers` module: here epsilon
//! sits outside the square root, `lr * E / (sqrt(V) + eps)`, mirroring the
//! closed-form expression this module implements, while the live optimizers
//! use `sqrt(v_hat + eps)`. The two differ by O(eps), which the consistency
//! test below accounts for.

use crate::error::{Error, Result};
use crate::optimizers::OptimizerSettings;

/// An equidistant evaluation trace x0, x0 + dx, ..., x0 + N*dx.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSpec {
    /// Trace start.
    pub x0: f64,
    /// Signed spacing between consecutive points; nonzero.
    pub dx: f64,
    /// Number of steps N; the trace has N + 1 points.
    pub n_points: usize,
    /// Decay factor weighting older gradients, in (0, 1).
    pub beta: f64,
}

impl TraceSpec {
    pub fn new(x0: f64, dx: f64, n_points: usize, beta: f64) -> Result<Self> {
        if !x0.is_finite() {
            return Err(Error::NonFinite(format!("x0 is {x0}")));
        }
        if !(dx.is_finite() && dx != 0.0) {
            return Err(Error::Contract(format!(
                "dx must be nonzero and finite, got {dx}"
            )));
        }
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::Contract(format!(
                "beta must lie in (0, 1), got {beta}"
            )));
        }
        Ok(Self {
            x0,
            dx,
            n_points,
            beta,
        })
    }
}

/// Weighted gradient statistics along a trace and the step size they imply.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepApprox {
    /// Weighted mean gradient E[g].
    pub expectation: f64,
    /// Weighted mean squared gradient E[g^2]; never negative.
    pub variance: f64,
    /// lr * E[g] / (sqrt(E[g^2]) + eps).
    pub step_size: f64,
}

/// Weights an exponential moving average assigns to a window of G + 1
/// samples, oldest first: [beta^G, beta^(G-1)(1-beta), ..., (1-beta)].
/// They always sum to exactly 1 (telescoping).
pub fn gradient_weights(g: usize, beta: f64) -> Result<Vec<f64>> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Contract(format!(
            "beta must lie in (0, 1), got {beta}"
        )));
    }
    let mut weights = Vec::with_capacity(g + 1);
    weights.push(beta.powi(g as i32));
    for t in 1..=g {
        weights.push(beta.powi((g - t) as i32) * (1.0 - beta));
    }
    Ok(weights)
}

/// Evaluates the weighted expectation and variance of `fprime` along the
/// trace and the closed-form step size they produce.
pub fn step_size_approx(
    fprime: impl Fn(f64) -> f64,
    spec: &TraceSpec,
    opt: &OptimizerSettings,
) -> Result<StepApprox> {
    opt.validate()?;
    let weights = gradient_weights(spec.n_points, spec.beta)?;

    let mut expectation = 0.0;
    let mut variance = 0.0;
    for (n, w) in weights.iter().enumerate() {
        let x = spec.x0 + n as f64 * spec.dx;
        let g = fprime(x);
        if !g.is_finite() {
            return Err(Error::NonFinite(format!(
                "derivative at trace point {n} (x = {x}) is {g}"
            )));
        }
        expectation += w * g;
        variance += w * g * g;
    }

    let step_size = opt.learning_rate * expectation / (variance.sqrt() + opt.epsilon);
    Ok(StepApprox {
        expectation,
        variance,
        step_size,
    })
}

/// Stagnation predicate near an extremum.
///
/// The trace is laid from `x0` toward `x_extrema`: ascending (+dx_mag) when
/// x0 <= x_extrema, descending (-dx_mag) otherwise, so the trace endpoint
/// lands on the far side of the extremum and the branch matches the sign of
/// (endpoint - x_extrema). Returns true when the approximated step magnitude
/// falls below `tol` — the optimizer is predicted to be unable to move away
/// from this state — along with the underlying statistics.
pub fn escape_condition(
    fprime: impl Fn(f64) -> f64,
    x0: f64,
    dx_mag: f64,
    n_points: usize,
    x_extrema: f64,
    opt: &OptimizerSettings,
    tol: f64,
) -> Result<(bool, StepApprox)> {
    if !(dx_mag.is_finite() && dx_mag > 0.0) {
        return Err(Error::Contract(format!(
            "dx_mag must be positive and finite, got {dx_mag}"
        )));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::Contract(format!(
            "tol must be positive and finite, got {tol}"
        )));
    }
    if !x_extrema.is_finite() {
        return Err(Error::NonFinite(format!("x_extrema is {x_extrema}")));
    }
    let dx = if x0 <= x_extrema { dx_mag } else { -dx_mag };
    let spec = TraceSpec::new(x0, dx, n_points, opt.beta1)?;
    let approx = step_size_approx(fprime, &spec, opt)?;
    Ok((approx.step_size.abs() < tol, approx))
}
