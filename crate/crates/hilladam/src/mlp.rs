//! A fixed 6-4-3-1 dense network whose scalar output feeds a 1-D polynomial
//! loss. The input is held constant, so training moves the output x through
//! the loss landscape purely by reshaping the weights.
//!
//! Hidden layers use tanh; the output unit is affine so x can reach any
//! real value. Gradients are exact reverse-mode, written out by hand.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::losses::{eval_poly, poly_derivative, PolynomialLoss};
use crate::optimizers::{
    restore_best, HillAdamSettings, Optimizer, OptimizerKind, OptimizerSettings, StepRecord,
};

/// The constant network input.
pub const INPUT: [f64; 6] = [1.0; 6];

/// Total trainable parameters: 4*6 + 4 + 3*4 + 3 + 1*3 + 1.
pub const PARAM_COUNT: usize = 47;

/// Dense 6-4-3-1 weights.
///
/// The flat vector layout is layer-major, row-major within each matrix,
/// with each layer's biases directly after its matrix:
/// `[w1 rows (24), b1 (4), w2 rows (12), b2 (3), w3 row (3), b3 (1)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpWeights {
    pub w1: [[f64; 6]; 4],
    pub b1: [f64; 4],
    pub w2: [[f64; 4]; 3],
    pub b2: [f64; 3],
    pub w3: [[f64; 3]; 1],
    pub b3: [f64; 1],
}

impl MlpWeights {
    pub fn zeros() -> Self {
        Self {
            w1: [[0.0; 6]; 4],
            b1: [0.0; 4],
            w2: [[0.0; 4]; 3],
            b2: [0.0; 3],
            w3: [[0.0; 3]; 1],
            b3: [0.0; 1],
        }
    }

    /// Serializes to the documented flat layout.
    pub fn flatten(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(PARAM_COUNT);
        for row in &self.w1 {
            flat.extend_from_slice(row);
        }
        flat.extend_from_slice(&self.b1);
        for row in &self.w2 {
            flat.extend_from_slice(row);
        }
        flat.extend_from_slice(&self.b2);
        flat.extend_from_slice(&self.w3[0]);
        flat.extend_from_slice(&self.b3);
        flat
    }

    /// Rebuilds weights from the documented flat layout.
    pub fn from_flat(flat: &[f64]) -> Result<Self> {
        if flat.len() != PARAM_COUNT {
            return Err(Error::Contract(format!(
                "flat weight vector must have {PARAM_COUNT} entries, got {}",
                flat.len()
            )));
        }
        let mut w = Self::zeros();
        let mut at = 0;
        for row in &mut w.w1 {
            row.copy_from_slice(&flat[at..at + 6]);
            at += 6;
        }
        w.b1.copy_from_slice(&flat[at..at + 4]);
        at += 4;
        for row in &mut w.w2 {
            row.copy_from_slice(&flat[at..at + 4]);
            at += 4;
        }
        w.b2.copy_from_slice(&flat[at..at + 3]);
        at += 3;
        w.w3[0].copy_from_slice(&flat[at..at + 3]);
        at += 3;
        w.b3.copy_from_slice(&flat[at..at + 1]);
        Ok(w)
    }
}

/// Every intermediate of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub z1: [f64; 4],
    pub a1: [f64; 4],
    pub z2: [f64; 3],
    pub a2: [f64; 3],
    pub z3: f64,
    /// The network's scalar output (equals z3: identity output unit).
    pub output: f64,
}

/// Deterministic Xavier-uniform weights: each layer's entries are drawn
/// uniformly from [-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))],
/// in flat-layout order; biases start at zero.
pub fn init_weights(seed: u64) -> MlpWeights {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = MlpWeights::zeros();

    let limit1 = (6.0f64 / (6 + 4) as f64).sqrt();
    for row in &mut w.w1 {
        for entry in row.iter_mut() {
            *entry = rng.gen_range(-limit1..limit1);
        }
    }
    let limit2 = (6.0f64 / (4 + 3) as f64).sqrt();
    for row in &mut w.w2 {
        for entry in row.iter_mut() {
            *entry = rng.gen_range(-limit2..limit2);
        }
    }
    let limit3 = (6.0f64 / (3 + 1) as f64).sqrt();
    for entry in w.w3[0].iter_mut() {
        *entry = rng.gen_range(-limit3..limit3);
    }
    w
}

fn check_input(input: &[f64]) -> Result<()> {
    if input.len() != 6 {
        return Err(Error::Contract(format!(
            "input must have 6 entries, got {}",
            input.len()
        )));
    }
    for (i, v) in input.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("input entry {i} is {v}")));
        }
    }
    Ok(())
}

// Indexed loops below mirror the j/i weight subscripts on purpose.
#[allow(clippy::needless_range_loop)]
fn forward_with(w: &MlpWeights, input: &[f64], act: fn(f64) -> f64) -> ForwardTrace {
    let mut z1 = [0.0; 4];
    let mut a1 = [0.0; 4];
    for j in 0..4 {
        let mut z = w.b1[j];
        for i in 0..6 {
            z += w.w1[j][i] * input[i];
        }
        z1[j] = z;
        a1[j] = act(z);
    }

    let mut z2 = [0.0; 3];
    let mut a2 = [0.0; 3];
    for j in 0..3 {
        let mut z = w.b2[j];
        for i in 0..4 {
            z += w.w2[j][i] * a1[i];
        }
        z2[j] = z;
        a2[j] = act(z);
    }

    let mut z3 = w.b3[0];
    for i in 0..3 {
        z3 += w.w3[0][i] * a2[i];
    }

    ForwardTrace {
        z1,
        a1,
        z2,
        a2,
        z3,
        output: z3,
    }
}

/// Forward pass: affine + tanh, affine + tanh, affine.
pub fn forward(w: &MlpWeights, input: &[f64]) -> Result<ForwardTrace> {
    check_input(input)?;
    Ok(forward_with(w, input, f64::tanh))
}

/// `act_prime` receives each hidden unit's activation value a and returns
/// the activation derivative at that unit (for tanh, 1 - a^2).
#[allow(clippy::needless_range_loop)]
fn backward_with(
    trace: &ForwardTrace,
    w: &MlpWeights,
    input: &[f64],
    dl_dx: f64,
    act_prime: fn(f64) -> f64,
) -> Vec<f64> {
    // Output layer (identity): dL/dz3 = dL/dx.
    let dz3 = dl_dx;
    let mut gw3 = [0.0; 3];
    for i in 0..3 {
        gw3[i] = dz3 * trace.a2[i];
    }
    let gb3 = dz3;

    // Second hidden layer.
    let mut dz2 = [0.0; 3];
    for j in 0..3 {
        dz2[j] = dz3 * w.w3[0][j] * act_prime(trace.a2[j]);
    }
    let mut gw2 = [[0.0; 4]; 3];
    for j in 0..3 {
        for i in 0..4 {
            gw2[j][i] = dz2[j] * trace.a1[i];
        }
    }

    // First hidden layer.
    let mut dz1 = [0.0; 4];
    for j in 0..4 {
        let mut da = 0.0;
        for k in 0..3 {
            da += dz2[k] * w.w2[k][j];
        }
        dz1[j] = da * act_prime(trace.a1[j]);
    }
    let mut gw1 = [[0.0; 6]; 4];
    for j in 0..4 {
        for i in 0..6 {
            gw1[j][i] = dz1[j] * input[i];
        }
    }

    let grads = MlpWeights {
        w1: gw1,
        b1: dz1,
        w2: gw2,
        b2: dz2,
        w3: [gw3],
        b3: [gb3],
    };
    grads.flatten()
}

/// Gradient of the scalar loss with respect to the flat weight vector,
/// given dL/dx at the traced output.
pub fn backward(
    trace: &ForwardTrace,
    w: &MlpWeights,
    input: &[f64],
    dl_dx: f64,
) -> Result<Vec<f64>> {
    check_input(input)?;
    Ok(backward_with(trace, w, input, dl_dx, |a| 1.0 - a * a))
}

/// Outcome of one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainRecord {
    /// One entry per step.
    pub trajectory: Vec<StepRecord>,
    /// Lowest loss observed over the run.
    pub best_loss: f64,
    /// Network output x at which the best loss was observed.
    pub best_x: f64,
}

/// Runs the full loop: forward, evaluate the polynomial at the output,
/// backpropagate its derivative, apply one optimizer step; `steps` times.
///
/// For Hill-ADAM the returned best state is the controller's archive
/// restoration; for the other optimizers it is the running minimum.
/// A non-finite output, loss, or gradient aborts with the 1-based step
/// index at which it appeared.
pub fn train_run(
    loss: &PolynomialLoss,
    kind: OptimizerKind,
    opt: &OptimizerSettings,
    hill: &HillAdamSettings,
    seed: u64,
    steps: usize,
) -> Result<TrainRecord> {
    if steps == 0 {
        return Err(Error::Contract("steps must be at least 1".into()));
    }
    opt.validate()?;
    hill.validate()?;

    let derivative = poly_derivative(loss);
    let mut flat = init_weights(seed).flatten();
    let mut optimizer = Optimizer::new(kind, PARAM_COUNT, *hill);
    let mut trajectory = Vec::with_capacity(steps);
    let mut best_loss = f64::INFINITY;
    let mut best_x = f64::NAN;

    for step in 1..=steps {
        let weights = MlpWeights::from_flat(&flat)?;
        let trace = forward(&weights, &INPUT)?;
        let x = trace.output;
        if !x.is_finite() {
            return Err(Error::DivergedAt { step });
        }
        let loss_value = eval_poly(loss, x)?;
        if !loss_value.is_finite() {
            return Err(Error::DivergedAt { step });
        }
        let dl_dx = eval_poly(&derivative, x)?;
        let grads = backward(&trace, &weights, &INPUT, dl_dx)?;
        if grads.iter().any(|g| !g.is_finite()) {
            return Err(Error::DivergedAt { step });
        }

        optimizer.step(&mut flat, &grads, loss_value, opt)?;

        if loss_value < best_loss {
            best_loss = loss_value;
            best_x = x;
        }
        trajectory.push(StepRecord {
            loss: loss_value,
            direction: optimizer.direction(),
            best_loss,
        });
    }

    if let Some(controller) = optimizer.controller() {
        let (best_flat, archived_loss) = restore_best(controller)?;
        let trace = forward(&MlpWeights::from_flat(&best_flat)?, &INPUT)?;
        best_x = trace.output;
        best_loss = archived_loss;
    }

    Ok(TrainRecord {
        trajectory,
        best_loss,
        best_x,
    })
}
