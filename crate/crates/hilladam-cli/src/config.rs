//! Flat `key = value` experiment configuration.
//!
//! One pair per line, `#` starts a comment, keys may not repeat. Every
//! hyperparameter is scalar, so the format stays trivial and every error
//! can point at a line.

use std::collections::HashMap;
use std::path::PathBuf;

use hilladam::{
    benchmark_losses, HillAdamSettings, OptimizerKind, OptimizerSettings, PolynomialLoss,
};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("{0}")]
    Missing(String),
}

fn at(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError::Line {
        line,
        message: message.into(),
    }
}

fn missing(key: &str) -> ConfigError {
    ConfigError::Missing(format!("missing required key `{key}`"))
}

/// A parsed, fully validated experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub opt: OptimizerSettings,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone)]
pub enum Mode {
    PolyBench {
        sweep: SweepSpec,
        loss: PolynomialLoss,
    },
    Color {
        sweep: SweepSpec,
        source: PathBuf,
        target: PathBuf,
        reg_weight: f64,
        wells: (f64, f64),
    },
    Analyze {
        loss: PolynomialLoss,
        x0: f64,
        dx: f64,
        n_points: usize,
        escape: Option<EscapeQuery>,
    },
}

/// The (optimizer × seed) grid a benchmark mode runs.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub optimizers: Vec<OptimizerKind>,
    pub seeds: Vec<u64>,
    pub steps: usize,
    pub hill: HillAdamSettings,
}

/// Optional stagnation query attached to an analyze run.
#[derive(Debug, Clone, Copy)]
pub struct EscapeQuery {
    pub extrema: f64,
    pub tol: f64,
}

/// Raw pairs keyed by name, remembering the line each came from. Getters
/// consume entries so whatever is left at the end is unknown or misplaced.
struct Fields {
    pairs: HashMap<String, (usize, String)>,
}

impl Fields {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut pairs: HashMap<String, (usize, String)> = HashMap::new();
        for (index, raw) in text.lines().enumerate() {
            let line = index + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(at(line, format!("expected `key = value`, got `{content}`")));
            };
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() {
                return Err(at(line, "expected `key = value` with a nonempty key"));
            }
            if let Some((first, _)) = pairs.get(key) {
                return Err(at(
                    line,
                    format!("duplicate key `{key}` (already set on line {first})"),
                ));
            }
            pairs.insert(key.to_string(), (line, value.to_string()));
        }
        Ok(Self { pairs })
    }

    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.pairs.remove(key)
    }

    fn take_f64(&mut self, key: &str) -> Result<Option<(usize, f64)>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some((line, value)) => {
                let parsed = value
                    .parse::<f64>()
                    .map_err(|_| at(line, format!("`{key}` is not a number: `{value}`")))?;
                Ok(Some((line, parsed)))
            }
        }
    }

    fn take_usize(&mut self, key: &str) -> Result<Option<(usize, usize)>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some((line, value)) => {
                let parsed = value.parse::<usize>().map_err(|_| {
                    at(
                        line,
                        format!("`{key}` is not a non-negative integer: `{value}`"),
                    )
                })?;
                Ok(Some((line, parsed)))
            }
        }
    }

    /// Leftover entries are either misspellings or keys from another mode;
    /// report the earliest one so the message is deterministic.
    fn reject_leftovers(&self, mode: &str) -> Result<(), ConfigError> {
        let Some((key, (line, _))) = self.pairs.iter().min_by_key(|(_, (line, _))| *line) else {
            return Ok(());
        };
        const KNOWN: &[&str] = &[
            "mode",
            "optimizers",
            "seeds",
            "steps",
            "learning_rate",
            "beta1",
            "beta2",
            "epsilon",
            "delta",
            "gamma",
            "out_dir",
            "loss",
            "loss_coeffs",
            "loss_interval",
            "source",
            "target",
            "reg_weight",
            "well_a",
            "well_b",
            "x0",
            "dx",
            "n_points",
            "extrema",
            "tol",
        ];
        if KNOWN.contains(&key.as_str()) {
            Err(at(
                *line,
                format!("key `{key}` is not allowed in {mode} mode"),
            ))
        } else {
            Err(at(*line, format!("unknown key `{key}`")))
        }
    }
}

fn comma_list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim)
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut fields = Fields::parse(text)?;

    let (mode_line, mode_name) = fields.take("mode").ok_or_else(|| missing("mode"))?;
    let opt = take_optimizer_settings(&mut fields)?;
    // Analyze reports to stdout and owns no files, so `out_dir` stays an
    // experiment-mode key and falls through to the leftover rejection.
    let out_dir = match mode_name.as_str() {
        "analyze" => PathBuf::from("out"),
        _ => fields
            .take("out_dir")
            .map(|(_, value)| PathBuf::from(value))
            .unwrap_or_else(|| PathBuf::from("out")),
    };

    let mode = match mode_name.as_str() {
        "poly_bench" => Mode::PolyBench {
            sweep: take_sweep(&mut fields)?,
            loss: take_loss(&mut fields)?,
        },
        "color" => take_color_mode(&mut fields)?,
        "analyze" => take_analyze_mode(&mut fields)?,
        other => return Err(at(mode_line, format!("unknown mode `{other}`"))),
    };
    fields.reject_leftovers(&mode_name)?;

    Ok(ExperimentConfig { mode, opt, out_dir })
}

fn take_optimizer_settings(fields: &mut Fields) -> Result<OptimizerSettings, ConfigError> {
    let (lr_line, learning_rate) = fields
        .take_f64("learning_rate")?
        .ok_or_else(|| missing("learning_rate"))?;
    if !(learning_rate.is_finite() && learning_rate > 0.0) {
        return Err(at(lr_line, "learning_rate must be positive and finite"));
    }
    let mut opt = OptimizerSettings::new(learning_rate);
    if let Some((line, beta1)) = fields.take_f64("beta1")? {
        if !(beta1 > 0.0 && beta1 < 1.0) {
            return Err(at(line, "beta1 must lie in (0, 1)"));
        }
        opt.beta1 = beta1;
    }
    if let Some((line, beta2)) = fields.take_f64("beta2")? {
        if !(beta2 > 0.0 && beta2 < 1.0) {
            return Err(at(line, "beta2 must lie in (0, 1)"));
        }
        opt.beta2 = beta2;
    }
    if let Some((line, epsilon)) = fields.take_f64("epsilon")? {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(at(line, "epsilon must be positive and finite"));
        }
        opt.epsilon = epsilon;
    }
    Ok(opt)
}

fn take_sweep(fields: &mut Fields) -> Result<SweepSpec, ConfigError> {
    let (opt_line, raw) = fields
        .take("optimizers")
        .ok_or_else(|| missing("optimizers"))?;
    let mut optimizers = Vec::new();
    for name in comma_list(&raw) {
        let kind: OptimizerKind = name
            .parse()
            .map_err(|_| at(opt_line, format!("unknown optimizer `{name}`")))?;
        if optimizers.contains(&kind) {
            return Err(at(opt_line, format!("optimizer `{name}` listed twice")));
        }
        optimizers.push(kind);
    }
    if optimizers.is_empty() {
        return Err(at(
            opt_line,
            "`optimizers` must list at least one optimizer",
        ));
    }

    let (seed_line, raw) = fields.take("seeds").ok_or_else(|| missing("seeds"))?;
    let mut seeds = Vec::new();
    for entry in comma_list(&raw) {
        let seed: u64 = entry.parse().map_err(|_| {
            at(
                seed_line,
                format!("`seeds` entry is not an unsigned integer: `{entry}`"),
            )
        })?;
        if seeds.contains(&seed) {
            return Err(at(seed_line, format!("seed {seed} listed twice")));
        }
        seeds.push(seed);
    }
    if seeds.is_empty() {
        return Err(at(seed_line, "`seeds` must list at least one seed"));
    }

    let (steps_line, steps) = fields
        .take_usize("steps")?
        .ok_or_else(|| missing("steps"))?;
    if steps == 0 {
        return Err(at(steps_line, "steps must be at least 1"));
    }

    let wants_hill = optimizers.contains(&OptimizerKind::HillAdam);
    let delta = match fields.take_f64("delta")? {
        Some((line, delta)) => {
            if !(delta.is_finite() && delta > 0.0) {
                return Err(at(line, "delta must be positive"));
            }
            delta
        }
        None if wants_hill => {
            return Err(ConfigError::Missing(
                "missing required key `delta` (hilladam is listed)".into(),
            ));
        }
        None => HillAdamSettings::default().delta,
    };
    let gamma = match fields.take_f64("gamma")? {
        // `inf` parses as f64 infinity, which is an accepted unbounded value.
        Some((line, gamma)) => {
            if gamma.is_nan() || gamma <= 0.0 {
                return Err(at(line, "gamma must be positive (`inf` allowed)"));
            }
            gamma
        }
        None => HillAdamSettings::default().gamma,
    };

    Ok(SweepSpec {
        optimizers,
        seeds,
        steps,
        hill: HillAdamSettings { delta, gamma },
    })
}

/// Either `loss = <1..5>` picking a built-in benchmark row, or
/// `loss_coeffs = c0,c1,...` (ascending powers) with `loss_interval = lo,hi`.
fn take_loss(fields: &mut Fields) -> Result<PolynomialLoss, ConfigError> {
    let index = fields.take("loss");
    let coeffs = fields.take("loss_coeffs");
    let interval = fields.take("loss_interval");

    match (index, coeffs) {
        (Some(_), Some((line, _))) => Err(at(line, "`loss_coeffs` conflicts with `loss`")),
        (Some((line, value)), None) => {
            if let Some((interval_line, _)) = interval {
                return Err(at(
                    interval_line,
                    "`loss_interval` only applies to `loss_coeffs`",
                ));
            }
            let rows = benchmark_losses();
            let index: usize = value
                .parse()
                .ok()
                .filter(|i| (1..=rows.len()).contains(i))
                .ok_or_else(|| {
                    at(
                        line,
                        format!("`loss` must be 1..={}, got `{value}`", rows.len()),
                    )
                })?;
            Ok(rows.into_iter().nth(index - 1).expect("index checked"))
        }
        (None, Some((line, value))) => {
            let coefficients: Vec<f64> = comma_list(&value)
                .map(|entry| {
                    entry.parse::<f64>().map_err(|_| {
                        at(
                            line,
                            format!("`loss_coeffs` entry is not a number: `{entry}`"),
                        )
                    })
                })
                .collect::<Result<_, _>>()?;
            let (interval_line, raw) = interval.ok_or_else(|| {
                ConfigError::Missing(
                    "missing required key `loss_interval` (needed by `loss_coeffs`)".into(),
                )
            })?;
            let bounds: Vec<f64> = comma_list(&raw)
                .map(|entry| {
                    entry.parse::<f64>().map_err(|_| {
                        at(
                            interval_line,
                            format!("`loss_interval` entry is not a number: `{entry}`"),
                        )
                    })
                })
                .collect::<Result<_, _>>()?;
            let [lo, hi] = bounds[..] else {
                return Err(at(interval_line, "`loss_interval` must be exactly `lo,hi`"));
            };
            PolynomialLoss::new(coefficients, lo, hi).map_err(|e| at(line, e.to_string()))
        }
        (None, None) => Err(ConfigError::Missing(
            "missing required key `loss` (or `loss_coeffs`)".into(),
        )),
    }
}

fn take_color_mode(fields: &mut Fields) -> Result<Mode, ConfigError> {
    let sweep = take_sweep(fields)?;
    let source = fields
        .take("source")
        .map(|(_, value)| PathBuf::from(value))
        .ok_or_else(|| missing("source"))?;
    let target = fields
        .take("target")
        .map(|(_, value)| PathBuf::from(value))
        .ok_or_else(|| missing("target"))?;

    let mut reg_weight = 2.0;
    if let Some((line, value)) = fields.take_f64("reg_weight")? {
        if !(value.is_finite() && value >= 0.0) {
            return Err(at(line, "reg_weight must be finite and non-negative"));
        }
        reg_weight = value;
    }
    let well_a = fields.take_f64("well_a")?;
    let well_b = fields.take_f64("well_b")?;
    let line = well_b.or(well_a).map(|(line, _)| line);
    let wells = (
        well_a.map_or(0.8, |(_, value)| value),
        well_b.map_or(1.6, |(_, value)| value),
    );
    if !(wells.0.is_finite() && wells.1.is_finite() && wells.0 < wells.1) {
        return Err(at(
            line.expect("default wells are ordered"),
            format!(
                "wells must satisfy well_a < well_b, got ({}, {})",
                wells.0, wells.1
            ),
        ));
    }

    Ok(Mode::Color {
        sweep,
        source,
        target,
        reg_weight,
        wells,
    })
}

fn take_analyze_mode(fields: &mut Fields) -> Result<Mode, ConfigError> {
    let loss = take_loss(fields)?;
    let (x0_line, x0) = fields.take_f64("x0")?.ok_or_else(|| missing("x0"))?;
    if !x0.is_finite() {
        return Err(at(x0_line, "x0 must be finite"));
    }
    let (dx_line, dx) = fields.take_f64("dx")?.ok_or_else(|| missing("dx"))?;
    if !(dx.is_finite() && dx != 0.0) {
        return Err(at(dx_line, "dx must be nonzero and finite"));
    }
    let (_, n_points) = fields
        .take_usize("n_points")?
        .ok_or_else(|| missing("n_points"))?;

    let extrema = fields.take_f64("extrema")?;
    let tol = fields.take_f64("tol")?;
    let escape = match (extrema, tol) {
        (Some((line, extrema)), Some((tol_line, tol))) => {
            if !extrema.is_finite() {
                return Err(at(line, "extrema must be finite"));
            }
            if !(tol.is_finite() && tol > 0.0) {
                return Err(at(tol_line, "tol must be positive and finite"));
            }
            Some(EscapeQuery { extrema, tol })
        }
        (None, None) => None,
        (Some((line, _)), None) => return Err(at(line, "`extrema` requires `tol`")),
        (None, Some((line, _))) => return Err(at(line, "`tol` requires `extrema`")),
    };

    Ok(Mode::Analyze {
        loss,
        x0,
        dx,
        n_points,
        escape,
    })
}
