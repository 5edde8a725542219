//! ADAM, Hill-ADAM, RMSprop, and NADAM as pure state-machine updates over
//! flat `f64` parameter vectors.
//!
//! Hill-ADAM is ADAM plus a direction controller: whenever two successive
//! losses differ by less than `delta` the travel direction toggles between
//! minimizing and maximizing, letting the optimizer climb out of the basin
//! it just settled into. If the loss ever exceeds the ceiling `gamma`, the
//! region is treated as a dead end and minimization is forced. The best
//! state seen over the whole run is archived and can be restored at the end,
//! so the exploration itself never costs final quality.
//!
//! All four update rules place epsilon inside the square root,
//! `sqrt(v_hat + eps)`, which keeps the delta = 0 / gamma = inf degenerate
//! configuration of Hill-ADAM bit-identical to plain ADAM.

use crate::error::{Error, Result};

/// Shared ADAM-family hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerSettings {
    /// Step-size scale (lambda).
    pub learning_rate: f64,
    /// First-moment decay (beta1), in (0, 1).
    pub beta1: f64,
    /// Second-moment decay (beta2), in (0, 1).
    pub beta2: f64,
    /// Stabilizer added to the second moment before the square root.
    pub epsilon: f64,
}

impl OptimizerSettings {
    /// Settings with the conventional beta1 = 0.9, beta2 = 0.999, eps = 1e-8.
    pub fn new(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Contract(format!(
                "learning_rate must be positive and finite, got {}",
                self.learning_rate
            )));
        }
        if !(self.beta1 > 0.0 && self.beta1 < 1.0) {
            return Err(Error::Contract(format!(
                "beta1 must lie in (0, 1), got {}",
                self.beta1
            )));
        }
        if !(self.beta2 > 0.0 && self.beta2 < 1.0) {
            return Err(Error::Contract(format!(
                "beta2 must lie in (0, 1), got {}",
                self.beta2
            )));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::Contract(format!(
                "epsilon must be positive and finite, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self::new(0.001)
    }
}

/// First/second moment accumulators plus the step counter driving bias
/// correction. `step == 0` implies both moments are all-zero.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentState {
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl MomentState {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
        }
    }

    /// Zeroes both moments and the step counter.
    pub fn reset(&mut self) {
        self.m.fill(0.0);
        self.v.fill(0.0);
        self.step = 0;
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    pub fn m(&self) -> &[f64] {
        &self.m
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn step(&self) -> u64 {
        self.step
    }
}

/// Travel direction of an update: descend the loss or climb it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Minimize,
    Maximize,
}

impl Direction {
    pub fn toggled(self) -> Self {
        match self {
            Direction::Minimize => Direction::Maximize,
            Direction::Maximize => Direction::Minimize,
        }
    }

    /// Short label used in CSV output: "min" or "max".
    pub fn label(self) -> &'static str {
        match self {
            Direction::Minimize => "min",
            Direction::Maximize => "max",
        }
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Hill-ADAM's two thresholds.
///
/// `delta = 0` disables toggling entirely (no pair of losses differs by less
/// than zero), and `gamma = f64::INFINITY` disables the dead-end ceiling;
/// together they reduce Hill-ADAM to plain ADAM exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HillAdamSettings {
    /// Loss-difference threshold below which the direction toggles.
    pub delta: f64,
    /// Loss ceiling above which the current region counts as a dead end.
    pub gamma: f64,
}

impl HillAdamSettings {
    pub fn new(delta: f64, gamma: f64) -> Self {
        Self { delta, gamma }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta.is_finite() && self.delta >= 0.0) {
            return Err(Error::Contract(format!(
                "delta must be finite and non-negative, got {}",
                self.delta
            )));
        }
        if self.gamma.is_nan() || self.gamma <= 0.0 {
            return Err(Error::Contract(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        Ok(())
    }
}

impl Default for HillAdamSettings {
    fn default() -> Self {
        // Gamma far above any loss scale these experiments produce, so the
        // dead-end branch activates only on genuine blow-ups.
        Self {
            delta: 1e-4,
            gamma: 1e6,
        }
    }
}

/// Full Hill-ADAM state: direction, loss trackers, best-state archive, and
/// the underlying ADAM moments.
#[derive(Debug, Clone)]
pub struct HillAdamController {
    direction: Direction,
    previous_loss: Option<f64>,
    dead_end: bool,
    best_loss: f64,
    best_params: Option<Vec<f64>>,
    moments: MomentState,
    toggles: u64,
}

impl HillAdamController {
    /// Fresh controller: minimizing, no loss history, best loss = infinity.
    pub fn new(param_len: usize) -> Self {
        Self {
            direction: Direction::Minimize,
            previous_loss: None,
            dead_end: false,
            best_loss: f64::INFINITY,
            best_params: None,
            moments: MomentState::new(param_len),
            toggles: 0,
        }
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn previous_loss(&self) -> Option<f64> {
        self.previous_loss
    }

    pub fn dead_end(&self) -> bool {
        self.dead_end
    }

    pub fn best_loss(&self) -> f64 {
        self.best_loss
    }

    pub fn moments(&self) -> &MomentState {
        &self.moments
    }

    /// Number of steps whose direction differed from the previous step's.
    pub fn toggle_count(&self) -> u64 {
        self.toggles
    }
}

fn check_update_inputs(params: &[f64], grads: &[f64], moment_len: usize) -> Result<()> {
    if params.len() != grads.len() || params.len() != moment_len {
        return Err(Error::Contract(format!(
            "length mismatch: params {}, grads {}, moments {}",
            params.len(),
            grads.len(),
            moment_len
        )));
    }
    for (i, g) in grads.iter().enumerate() {
        if !g.is_finite() {
            return Err(Error::NonFinite(format!("gradient entry {i} is {g}")));
        }
    }
    Ok(())
}

/// One ADAM update, in place.
///
/// m <- b1*m + (1-b1)*g, v <- b2*v + (1-b2)*g^2, then with bias-corrected
/// m_hat = m/(1-b1^t) and v_hat = v/(1-b2^t):
///
///   params -= lr * m_hat / sqrt(v_hat + eps)   (Minimize)
///   params += lr * m_hat / sqrt(v_hat + eps)   (Maximize)
pub fn adam_update(
    params: &mut [f64],
    grads: &[f64],
    moments: &mut MomentState,
    settings: &OptimizerSettings,
    direction: Direction,
) -> Result<()> {
    settings.validate()?;
    check_update_inputs(params, grads, moments.len())?;

    moments.step += 1;
    let t = moments.step as i32;
    let m_corr = 1.0 - settings.beta1.powi(t);
    let v_corr = 1.0 - settings.beta2.powi(t);
    let sign = match direction {
        Direction::Minimize => -1.0,
        Direction::Maximize => 1.0,
    };

    for i in 0..params.len() {
        let g = grads[i];
        moments.m[i] = settings.beta1 * moments.m[i] + (1.0 - settings.beta1) * g;
        moments.v[i] = settings.beta2 * moments.v[i] + (1.0 - settings.beta2) * g * g;
        let m_hat = moments.m[i] / m_corr;
        let v_hat = moments.v[i] / v_corr;
        params[i] += sign * settings.learning_rate * m_hat / (v_hat + settings.epsilon).sqrt();
    }
    Ok(())
}

/// One Hill-ADAM training step (direction control + ADAM update + archive).
///
/// `new_loss` is the loss evaluated at the current `params`; `grads` is its
/// gradient at the same point. In order:
///
/// 1. If a previous loss is recorded and `|new_loss - previous| < delta`,
///    the direction toggles and the loss tracker resets, so the comparison
///    is skipped on the immediately following step.
/// 2. If `new_loss > gamma` and the dead-end flag is not already set, the
///    direction is forced to `Minimize`, the flag is set, and the loss
///    tracker resets. The flag clears once the loss drops back below gamma,
///    re-arming the ceiling.
/// 3. If the direction actually changed in this step, the moments are
///    zeroed before the update, so the fresh direction starts with fresh
///    bias-correction denominators.
/// 4. `adam_update` runs in the resulting direction.
/// 5. The best-state archive takes a snapshot of the entry parameters
///    whenever `new_loss` improves on the best loss so far.
pub fn hilladam_step(
    controller: &mut HillAdamController,
    params: &mut [f64],
    grads: &[f64],
    new_loss: f64,
    opt: &OptimizerSettings,
    hill: &HillAdamSettings,
) -> Result<()> {
    opt.validate()?;
    hill.validate()?;
    if !new_loss.is_finite() {
        return Err(Error::NonFinite(format!("loss is {new_loss}")));
    }
    check_update_inputs(params, grads, controller.moments.len())?;

    let entry_direction = controller.direction;
    let mut trackers_reset = false;

    if let Some(prev) = controller.previous_loss {
        if (new_loss - prev).abs() < hill.delta {
            controller.direction = controller.direction.toggled();
            trackers_reset = true;
        }
    }

    if new_loss > hill.gamma {
        if !controller.dead_end {
            controller.direction = Direction::Minimize;
            controller.dead_end = true;
            trackers_reset = true;
        }
    } else {
        controller.dead_end = false;
    }

    if controller.direction != entry_direction {
        controller.moments.reset();
        controller.toggles += 1;
    }

    // Snapshot before the update: the archive must hold the exact parameters
    // at which new_loss was evaluated.
    if new_loss < controller.best_loss {
        controller.best_loss = new_loss;
        controller.best_params = Some(params.to_vec());
    }

    adam_update(
        params,
        grads,
        &mut controller.moments,
        opt,
        controller.direction,
    )?;

    controller.previous_loss = if trackers_reset { None } else { Some(new_loss) };
    Ok(())
}

/// Returns the archived best parameters and the loss observed at them.
pub fn restore_best(controller: &HillAdamController) -> Result<(Vec<f64>, f64)> {
    match &controller.best_params {
        Some(p) => Ok((p.clone(), controller.best_loss)),
        None => Err(Error::EmptyHistory),
    }
}

/// One RMSprop update, in place: v <- b2*v + (1-b2)*g^2, then
/// params -= lr * g / sqrt(v + eps).
pub fn rmsprop_update(
    params: &mut [f64],
    grads: &[f64],
    v: &mut [f64],
    settings: &OptimizerSettings,
) -> Result<()> {
    settings.validate()?;
    check_update_inputs(params, grads, v.len())?;

    for i in 0..params.len() {
        let g = grads[i];
        v[i] = settings.beta2 * v[i] + (1.0 - settings.beta2) * g * g;
        params[i] -= settings.learning_rate * g / (v[i] + settings.epsilon).sqrt();
    }
    Ok(())
}

/// One NADAM update, in place: the ADAM moment recurrences plus a Nesterov
/// lookahead in the numerator:
///
///   params -= lr * (b1*m_hat + (1-b1)*g/(1-b1^t)) / sqrt(v_hat + eps)
pub fn nadam_update(
    params: &mut [f64],
    grads: &[f64],
    moments: &mut MomentState,
    settings: &OptimizerSettings,
) -> Result<()> {
    settings.validate()?;
    check_update_inputs(params, grads, moments.len())?;

    moments.step += 1;
    let t = moments.step as i32;
    let m_corr = 1.0 - settings.beta1.powi(t);
    let v_corr = 1.0 - settings.beta2.powi(t);

    for i in 0..params.len() {
        let g = grads[i];
        moments.m[i] = settings.beta1 * moments.m[i] + (1.0 - settings.beta1) * g;
        moments.v[i] = settings.beta2 * moments.v[i] + (1.0 - settings.beta2) * g * g;
        let m_hat = moments.m[i] / m_corr;
        let v_hat = moments.v[i] / v_corr;
        let lookahead = settings.beta1 * m_hat + (1.0 - settings.beta1) * g / m_corr;
        params[i] -= settings.learning_rate * lookahead / (v_hat + settings.epsilon).sqrt();
    }
    Ok(())
}

/// Which update rule a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OptimizerKind {
    Adam,
    HillAdam,
    RmsProp,
    Nadam,
}

impl OptimizerKind {
    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Adam => "adam",
            OptimizerKind::HillAdam => "hilladam",
            OptimizerKind::RmsProp => "rmsprop",
            OptimizerKind::Nadam => "nadam",
        }
    }
}

impl std::fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adam" => Ok(OptimizerKind::Adam),
            "hilladam" => Ok(OptimizerKind::HillAdam),
            "rmsprop" => Ok(OptimizerKind::RmsProp),
            "nadam" => Ok(OptimizerKind::Nadam),
            other => Err(Error::Contract(format!(
                "unknown optimizer {other:?}; expected adam, hilladam, rmsprop, or nadam"
            ))),
        }
    }
}

/// A ready-to-step optimizer instance holding its own state, so training
/// loops can drive any of the four rules through one interface.
#[derive(Debug, Clone)]
pub enum Optimizer {
    Adam {
        moments: MomentState,
    },
    HillAdam {
        controller: HillAdamController,
        settings: HillAdamSettings,
    },
    RmsProp {
        v: Vec<f64>,
    },
    Nadam {
        moments: MomentState,
    },
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, param_len: usize, hill: HillAdamSettings) -> Self {
        match kind {
            OptimizerKind::Adam => Optimizer::Adam {
                moments: MomentState::new(param_len),
            },
            OptimizerKind::HillAdam => Optimizer::HillAdam {
                controller: HillAdamController::new(param_len),
                settings: hill,
            },
            OptimizerKind::RmsProp => Optimizer::RmsProp {
                v: vec![0.0; param_len],
            },
            OptimizerKind::Nadam => Optimizer::Nadam {
                moments: MomentState::new(param_len),
            },
        }
    }

    pub fn kind(&self) -> OptimizerKind {
        match self {
            Optimizer::Adam { .. } => OptimizerKind::Adam,
            Optimizer::HillAdam { .. } => OptimizerKind::HillAdam,
            Optimizer::RmsProp { .. } => OptimizerKind::RmsProp,
            Optimizer::Nadam { .. } => OptimizerKind::Nadam,
        }
    }

    /// Applies one update. `new_loss` is only consulted by Hill-ADAM; the
    /// other rules ignore it.
    pub fn step(
        &mut self,
        params: &mut [f64],
        grads: &[f64],
        new_loss: f64,
        opt: &OptimizerSettings,
    ) -> Result<()> {
        match self {
            Optimizer::Adam { moments } => {
                adam_update(params, grads, moments, opt, Direction::Minimize)
            }
            Optimizer::HillAdam {
                controller,
                settings,
            } => hilladam_step(controller, params, grads, new_loss, opt, settings),
            Optimizer::RmsProp { v } => rmsprop_update(params, grads, v, opt),
            Optimizer::Nadam { moments } => nadam_update(params, grads, moments, opt),
        }
    }

    /// Direction used by the most recent step (always Minimize for the
    /// non-hill rules).
    pub fn direction(&self) -> Direction {
        match self {
            Optimizer::HillAdam { controller, .. } => controller.direction(),
            _ => Direction::Minimize,
        }
    }

    pub fn controller(&self) -> Option<&HillAdamController> {
        match self {
            Optimizer::HillAdam { controller, .. } => Some(controller),
            _ => None,
        }
    }
}

/// One recorded step of a training trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    /// Loss at the parameters this step started from.
    pub loss: f64,
    /// Direction the step moved in.
    pub direction: Direction,
    /// Best loss observed up to and including this step.
    pub best_loss: f64,
}
