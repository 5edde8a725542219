//! Hill-ADAM: an ADAM variant that escapes local minima by alternating
//! between minimizing and maximizing the loss, plus the baselines and
//! experiment machinery built around it.
//!
//! Modules:
//! - [`optimizers`]: ADAM, Hill-ADAM, RMSprop, NADAM over flat parameter
//!   vectors.
//! - [`losses`]: the five 1-D polynomial benchmark losses and a
//!   global-minimum oracle.
//! - [`mlp`]: a fixed 6-4-3-1 network with hand-written backprop whose
//!   scalar output parameterizes a polynomial loss.
//! - [`analysis`]: closed-form step-size approximation along equidistant
//!   gradient traces and the stagnation predicate built on it.
//! - [`color`]: PPM image I/O and the regularized channel-mean matching
//!   loss over three RGB gains.

pub mod analysis;
pub mod color;
pub mod error;
pub mod losses;
pub mod mlp;
pub mod optimizers;

pub use error::{Error, Result};
pub use optimizers::{
    adam_update, hilladam_step, nadam_update, restore_best, rmsprop_update, Direction,
    HillAdamController, HillAdamSettings, MomentState, Optimizer, OptimizerKind, OptimizerSettings,
    StepRecord,
};

pub use analysis::{escape_condition, gradient_weights, step_size_approx, StepApprox, TraceSpec};
pub use color::{
    apply_gains, channel_means, color_loss, init_gains, load_image, save_image, train_color,
    ChannelMeans, ColorLossSpec, ColorRunRecord, GainVector, ImageBuffer,
};
pub use losses::{
    benchmark_losses, eval_poly, global_min_oracle, poly_derivative, MinimumReport, PolynomialLoss,
};
pub use mlp::{backward, forward, init_weights, train_run, ForwardTrace, MlpWeights, TrainRecord};
