//! Sweep execution: every (optimizer × seed) cell of a config, one
//! trajectory CSV per cell, one summary CSV per run, and the analyze
//! report. Cells are pure given their seed, so output bytes never depend
//! on scheduling.

use std::fs;
use std::path::{Path, PathBuf};

use hilladam::{
    apply_gains, channel_means, escape_condition, eval_poly, load_image, poly_derivative,
    save_image, step_size_approx, train_color, train_run, ColorLossSpec, Error as CoreError,
    ImageBuffer, OptimizerKind, OptimizerSettings, StepRecord, TraceSpec,
};
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{ExperimentConfig, Mode, SweepSpec};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] CoreError),
}

fn io_err(path: &Path, source: std::io::Error) -> RunError {
    RunError::Io {
        path: path.to_owned(),
        source,
    }
}

/// Outcome of one (optimizer, seed) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub optimizer: OptimizerKind,
    pub seed: u64,
    pub result: CellResult,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellResult {
    Done {
        best_loss: f64,
        /// Parameter at the best loss: `[x]` for the benchmark, `[r, g, b]`
        /// gains for a color run.
        best: Vec<f64>,
        steps: usize,
        /// Direction toggles (Hill-ADAM cells only).
        toggles: Option<usize>,
    },
    /// The run hit a non-finite value at this 1-based step; no trajectory
    /// file is written.
    Aborted { step: usize },
}

enum Task<'a> {
    Poly {
        loss: &'a hilladam::PolynomialLoss,
    },
    Color {
        spec: ColorLossSpec,
        source_img: ImageBuffer,
    },
}

/// Runs every cell of an experiment config and writes its artifacts.
///
/// The summary file is created (and truncated) before any cell runs, so an
/// unwritable output directory fails fast.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RunSummary>, RunError> {
    let (sweep, task) = match &config.mode {
        Mode::PolyBench { sweep, loss } => (sweep, Task::Poly { loss }),
        Mode::Color {
            sweep,
            source,
            target,
            reg_weight,
            wells,
        } => {
            let source_img = read_image(source)?;
            let target_img = read_image(target)?;
            let spec = ColorLossSpec::new(
                channel_means(&source_img)?,
                channel_means(&target_img)?,
                *reg_weight,
                *wells,
            )?;
            (sweep, Task::Color { spec, source_img })
        }
        Mode::Analyze { .. } => {
            return Err(CoreError::Contract("analyze mode has no experiment cells".into()).into())
        }
    };

    fs::create_dir_all(&config.out_dir).map_err(|e| io_err(&config.out_dir, e))?;
    let summary_path = config.out_dir.join("summary.csv");
    fs::File::create(&summary_path).map_err(|e| io_err(&summary_path, e))?;

    let cells: Vec<(OptimizerKind, u64)> = sweep
        .optimizers
        .iter()
        .flat_map(|&kind| sweep.seeds.iter().map(move |&seed| (kind, seed)))
        .collect();
    let summaries = cells
        .par_iter()
        .map(|&(kind, seed)| run_cell(&task, sweep, &config.opt, kind, seed, &config.out_dir))
        .collect::<Result<Vec<_>, RunError>>()?;

    write_summary(
        &summary_path,
        &summaries,
        matches!(task, Task::Color { .. }),
    )?;
    Ok(summaries)
}

fn run_cell(
    task: &Task,
    sweep: &SweepSpec,
    opt: &OptimizerSettings,
    kind: OptimizerKind,
    seed: u64,
    out_dir: &Path,
) -> Result<RunSummary, RunError> {
    let result = match task {
        Task::Poly { loss } => match train_run(loss, kind, opt, &sweep.hill, seed, sweep.steps) {
            Ok(record) => {
                emit_csv(
                    &record.trajectory,
                    &out_dir.join(format!("{kind}_seed{seed}.csv")),
                )?;
                CellResult::Done {
                    best_loss: record.best_loss,
                    best: vec![record.best_x],
                    steps: sweep.steps,
                    toggles: toggles_for(kind, &record.trajectory),
                }
            }
            Err(CoreError::DivergedAt { step }) => CellResult::Aborted { step },
            Err(e) => return Err(e.into()),
        },
        Task::Color { spec, source_img } => {
            match train_color(spec, kind, opt, &sweep.hill, seed, sweep.steps) {
                Ok(record) => {
                    emit_csv(
                        &record.trajectory,
                        &out_dir.join(format!("{kind}_seed{seed}.csv")),
                    )?;
                    let corrected = apply_gains(source_img, &record.best_gains);
                    let path = out_dir.join(format!("corrected_{kind}_seed{seed}.ppm"));
                    fs::write(&path, save_image(&corrected)).map_err(|e| io_err(&path, e))?;
                    CellResult::Done {
                        best_loss: record.best_loss,
                        best: vec![
                            record.best_gains.r,
                            record.best_gains.g,
                            record.best_gains.b,
                        ],
                        steps: sweep.steps,
                        toggles: toggles_for(kind, &record.trajectory),
                    }
                }
                Err(CoreError::DivergedAt { step }) => CellResult::Aborted { step },
                Err(e) => return Err(e.into()),
            }
        }
    };
    Ok(RunSummary {
        optimizer: kind,
        seed,
        result,
    })
}

fn toggles_for(kind: OptimizerKind, trajectory: &[StepRecord]) -> Option<usize> {
    (kind == OptimizerKind::HillAdam).then(|| count_toggles(trajectory))
}

/// Number of adjacent direction changes in a trajectory.
pub fn count_toggles(trajectory: &[StepRecord]) -> usize {
    trajectory
        .windows(2)
        .filter(|pair| pair[0].direction != pair[1].direction)
        .count()
}

/// Writes a trajectory as `step,loss,direction,best_loss` rows, steps
/// numbered from 1, losses at 17 significant digits so they round-trip
/// bit-exactly, LF newlines.
pub fn emit_csv(trajectory: &[StepRecord], path: &Path) -> Result<(), RunError> {
    if trajectory.is_empty() {
        return Err(CoreError::Contract("refusing to emit an empty trajectory".into()).into());
    }
    let mut text = String::from("step,loss,direction,best_loss\n");
    for (index, record) in trajectory.iter().enumerate() {
        text.push_str(&format!(
            "{},{:.16e},{},{:.16e}\n",
            index + 1,
            record.loss,
            record.direction.label(),
            record.best_loss
        ));
    }
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn write_summary(path: &Path, summaries: &[RunSummary], color: bool) -> Result<(), RunError> {
    let mut text = String::from(if color {
        "optimizer,seed,best_loss,gain_r,gain_g,gain_b,steps,toggles,status\n"
    } else {
        "optimizer,seed,best_loss,best_x,steps,toggles,status\n"
    });
    let value_slots = if color { 3 } else { 1 };
    for summary in summaries {
        match &summary.result {
            CellResult::Done {
                best_loss,
                best,
                steps,
                toggles,
            } => {
                let best: Vec<String> = best.iter().map(|v| format!("{v:.16e}")).collect();
                let toggles = toggles.map(|t| t.to_string()).unwrap_or_default();
                text.push_str(&format!(
                    "{},{},{best_loss:.16e},{},{steps},{toggles},ok\n",
                    summary.optimizer,
                    summary.seed,
                    best.join(","),
                ));
            }
            CellResult::Aborted { step } => {
                text.push_str(&format!(
                    "{},{},,{},{},,aborted@{step}\n",
                    summary.optimizer,
                    summary.seed,
                    vec![""; value_slots].join(","),
                    step - 1,
                ));
            }
        }
    }
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn read_image(path: &Path) -> Result<ImageBuffer, RunError> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    load_image(&bytes).map_err(|e| match e {
        CoreError::Format(msg) => {
            RunError::Core(CoreError::Format(format!("{}: {msg}", path.display())))
        }
        other => RunError::Core(other),
    })
}

/// Renders the analyze-mode report: weighted gradient statistics of the
/// configured trace and, when an extremum and tolerance are given, the
/// branch laid toward that extremum with its stagnation verdict.
pub fn analyze_report(config: &ExperimentConfig) -> Result<String, RunError> {
    let Mode::Analyze {
        loss,
        x0,
        dx,
        n_points,
        escape,
    } = &config.mode
    else {
        return Err(CoreError::Contract("expected an analyze-mode config".into()).into());
    };
    let derivative = poly_derivative(loss);
    // Out-of-range evaluations surface as NaN so the trace validation can
    // name the offending point.
    let fprime = |x: f64| eval_poly(&derivative, x).unwrap_or(f64::NAN);

    let spec = TraceSpec::new(*x0, *dx, *n_points, config.opt.beta1)?;
    let approx = step_size_approx(fprime, &spec, &config.opt)?;
    let mut report = format!(
        "trace: x0 = {x0}, dx = {dx}, points = {}, beta = {}\n\
         expectation = {:.16e}\nvariance = {:.16e}\nstep_size = {:.16e}\n",
        n_points + 1,
        config.opt.beta1,
        approx.expectation,
        approx.variance,
        approx.step_size,
    );
    if let Some(query) = escape {
        let (stagnant, branch) = escape_condition(
            fprime,
            *x0,
            dx.abs(),
            *n_points,
            query.extrema,
            &config.opt,
            query.tol,
        )?;
        report.push_str(&format!(
            "escape trace toward extremum {}, tol = {}\n\
             escape_expectation = {:.16e}\nescape_variance = {:.16e}\n\
             escape_step_size = {:.16e}\nstagnant = {stagnant}\n",
            query.extrema, query.tol, branch.expectation, branch.variance, branch.step_size,
        ));
    }
    Ok(report)
}
