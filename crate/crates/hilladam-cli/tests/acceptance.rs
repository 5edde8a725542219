//! Twelve end-to-end checks, one per headline claim the toolkit makes: the
//! controller's degenerate-settings equivalence with ADAM, the benchmark
//! outcomes on the five polynomial rows, gradient and closed-form identities,
//! the two-well color experiments, codec round-trips, and run determinism.
//!
//! The polynomial sweeps share one lazily-computed result set so the whole
//! suite stays fast; every tolerance is asserted where the claim is stated.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::LazyLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use hilladam::mlp::INPUT;
use hilladam::*;

const BENCH_SEEDS: u64 = 15;
const BENCH_STEPS: usize = 15000;
const COLOR_SEEDS: [u64; 4] = [5343, 100, 2534, 3956];

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn fixture_means(name: &str) -> ChannelMeans {
    let img = load_image(&std::fs::read(fixture(name)).unwrap()).unwrap();
    channel_means(&img).unwrap()
}

fn color_spec(reg_weight: f64) -> ColorLossSpec {
    ColorLossSpec::new(
        fixture_means("amber.ppm"),
        fixture_means("blue.ppm"),
        reg_weight,
        (0.8, 1.6),
    )
    .unwrap()
}

/// Best outcome of one (optimizer, seed) cell of the polynomial sweep.
struct Cell {
    kind: OptimizerKind,
    best_loss: f64,
}

/// One sweep per benchmark row: ADAM and Hill-ADAM, 15 seeds each.
/// Row 1 runs with gamma = 10 (its bowl is too shallow for the ceiling to
/// ever trip at 1e6, which lets a late stagnation toggle wander off);
/// the quartic gets the raised learning rate it needs to leave the plateau.
static SWEEP: LazyLock<Vec<Vec<Cell>>> = LazyLock::new(|| {
    let rows = benchmark_losses();
    let plans: Vec<(usize, f64, f64)> = vec![
        (0, 0.01, 10.0),
        (1, 0.01, 1e6),
        (2, 0.01, 1e6),
        (3, 0.01, 1e6),
        (4, 0.1, 1e6),
    ];
    plans
        .par_iter()
        .map(|&(row, lr, gamma)| {
            (0..2 * BENCH_SEEDS)
                .into_par_iter()
                .map(|i| {
                    let kind = if i < BENCH_SEEDS {
                        OptimizerKind::Adam
                    } else {
                        OptimizerKind::HillAdam
                    };
                    let seed = i % BENCH_SEEDS;
                    let record = train_run(
                        &rows[row],
                        kind,
                        &OptimizerSettings::new(lr),
                        &HillAdamSettings::new(1e-4, gamma),
                        seed,
                        BENCH_STEPS,
                    )
                    .unwrap();
                    Cell {
                        kind,
                        best_loss: record.best_loss,
                    }
                })
                .collect()
        })
        .collect()
});

fn row_bests(row: usize, kind: OptimizerKind) -> Vec<f64> {
    SWEEP[row]
        .iter()
        .filter(|c| c.kind == kind)
        .map(|c| c.best_loss)
        .collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

#[test]
fn c01_hilladam_with_zero_delta_matches_adam_per_coordinate() {
    let rows = benchmark_losses();
    let loss = &rows[1];
    let derivative = poly_derivative(loss);
    let opt = OptimizerSettings::new(0.01);
    let inert = HillAdamSettings::new(0.0, f64::INFINITY);

    for seed in 0..5 {
        let mut flat_a = init_weights(seed).flatten();
        let mut flat_h = flat_a.clone();
        let mut adam = Optimizer::new(OptimizerKind::Adam, flat_a.len(), inert);
        let mut hill = Optimizer::new(OptimizerKind::HillAdam, flat_h.len(), inert);

        for step in 0..1000 {
            for (flat, optimizer) in [(&mut flat_a, &mut adam), (&mut flat_h, &mut hill)] {
                let w = MlpWeights::from_flat(flat).unwrap();
                let trace = forward(&w, &INPUT).unwrap();
                let value = eval_poly(loss, trace.output).unwrap();
                let dl_dx = eval_poly(&derivative, trace.output).unwrap();
                let grads = backward(&trace, &w, &INPUT, dl_dx).unwrap();
                optimizer.step(flat, &grads, value, &opt).unwrap();
            }
            for (i, (a, h)) in flat_a.iter().zip(&flat_h).enumerate() {
                assert!(
                    (a - h).abs() <= 1e-12,
                    "seed {seed} step {step} coordinate {i}: adam {a} vs hilladam {h}"
                );
            }
        }
    }
}

#[test]
fn c02_parabola_benchmark_reaches_four_within_tolerance() {
    for kind in [OptimizerKind::Adam, OptimizerKind::HillAdam] {
        let bests = row_bests(0, kind);
        for (seed, best) in bests.iter().enumerate() {
            assert!(
                (best - 4.0).abs() <= 1e-3,
                "{kind} seed {seed}: best loss {best} strays from 4.000"
            );
        }
        let m = mean(&bests);
        assert!((m - 4.0).abs() <= 1e-3, "{kind} mean {m} strays from 4.000");
        println!("[c02] {kind}: mean best {m:.9}");
    }
}

#[test]
fn c03_quartic_benchmark_reaches_its_minimum_with_raised_rate() {
    for kind in [OptimizerKind::Adam, OptimizerKind::HillAdam] {
        let bests = row_bests(4, kind);
        for (seed, best) in bests.iter().enumerate() {
            assert!(
                (best - 0.3125).abs() <= 1e-2,
                "{kind} seed {seed}: best loss {best} strays from 0.3125"
            );
        }
        println!("[c03] {kind}: mean best {:.9}", mean(&bests));
    }
}

#[test]
fn c04_hilladam_mean_best_never_trails_adam_on_higher_order_rows() {
    for row in 1..=3 {
        let adam = mean(&row_bests(row, OptimizerKind::Adam));
        let hill = mean(&row_bests(row, OptimizerKind::HillAdam));
        assert!(
            hill <= adam + 1e-6,
            "row {}: hilladam mean {hill} trails adam mean {adam}",
            row + 1
        );
        println!(
            "[c04] row {}: adam mean {adam:.6}, hilladam mean {hill:.6}",
            row + 1
        );
    }
}

#[test]
fn c05_oracle_minimum_lower_bounds_every_run() {
    let rows = benchmark_losses();
    for (row, cells) in SWEEP.iter().enumerate() {
        let report = global_min_oracle(&rows[row], 400_000).unwrap();
        for cell in cells {
            assert!(
                report.min_value <= cell.best_loss + 1e-9,
                "row {}: oracle min {} above a {} run's best {}",
                row + 1,
                report.min_value,
                cell.kind,
                cell.best_loss
            );
        }
    }
}

/// Central-difference comparisons allow, on top of the relative tolerance,
/// the quotient's own rounding noise: eps * |f|-scale * terms / (2h). Where
/// the landscape is flat that bound is what limits what a finite difference
/// can resolve; everywhere else it is negligible.
fn poly_fd_noise(p: &PolynomialLoss, x: f64, h: f64) -> f64 {
    let magnitude: f64 = p
        .coefficients()
        .iter()
        .enumerate()
        .map(|(j, c)| c.abs() * x.abs().powi(j as i32))
        .sum();
    f64::EPSILON * magnitude * p.coefficients().len() as f64 / (2.0 * h)
}

#[test]
fn c06_backprop_and_color_gradients_match_finite_differences() {
    let rows = benchmark_losses();
    let h = 1e-6;

    // 20 random network states, every coordinate of each.
    for state in 0..20u64 {
        let loss = &rows[state as usize % rows.len()];
        let derivative = poly_derivative(loss);
        let flat = init_weights(3000 + state).flatten();

        let w = MlpWeights::from_flat(&flat).unwrap();
        let trace = forward(&w, &INPUT).unwrap();
        let dl_dx = eval_poly(&derivative, trace.output).unwrap();
        let analytic = backward(&trace, &w, &INPUT, dl_dx).unwrap();
        let grad_scale = analytic.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        let noise = poly_fd_noise(loss, trace.output, h);

        let value_at = |flat: &[f64]| {
            let trace = forward(&MlpWeights::from_flat(flat).unwrap(), &INPUT).unwrap();
            eval_poly(loss, trace.output).unwrap()
        };
        for j in 0..flat.len() {
            let mut plus = flat.clone();
            plus[j] += h;
            let mut minus = flat.clone();
            minus[j] -= h;
            let fd = (value_at(&plus) - value_at(&minus)) / (2.0 * h);
            let denom = analytic[j]
                .abs()
                .max(fd.abs())
                .max(1e-3 * grad_scale)
                .max(1e-8);
            assert!(
                (analytic[j] - fd).abs() < 1e-5 * denom + noise,
                "state {state} coordinate {j}: backprop {} vs fd {fd}",
                analytic[j]
            );
        }
    }

    // 20 random gain states against both regularizer settings.
    for state in 0..20u64 {
        let spec = color_spec(if state % 2 == 0 { 2.0 } else { 0.0 });
        let gains = init_gains(7000 + state);
        let (_, analytic) = color_loss(&gains, &spec);

        let channels = [gains.r, gains.g, gains.b];
        for c in 0..3 {
            let probe = |delta: f64| {
                let mut v = channels;
                v[c] += delta;
                color_loss(&GainVector::new(v[0], v[1], v[2]).unwrap(), &spec).0
            };
            let fd = (probe(h) - probe(-h)) / (2.0 * h);
            let denom = analytic[c].abs().max(fd.abs()).max(1.0);
            assert!(
                (analytic[c] - fd).abs() < 1e-5 * denom,
                "state {state} channel {c}: gradient {} vs fd {fd}",
                analytic[c]
            );
        }
    }
}

#[test]
fn c07_gradient_weights_sum_to_one() {
    for g in 0..=200 {
        for beta in [0.5, 0.9, 0.99] {
            let weights = gradient_weights(g, beta).unwrap();
            let sum: f64 = weights.iter().sum();
            assert!(
                (sum - 1.0).abs() <= 1e-12,
                "G = {g}, beta = {beta}: weights sum to {sum}"
            );
        }
    }
}

#[test]
fn c08_constant_gradient_step_size_closed_form() {
    let opt = OptimizerSettings::new(0.01);
    for c in [-3.0, -1.0, 0.5, 2.0] {
        for n in [0, 5, 50] {
            let spec = TraceSpec::new(0.0, 0.1, n, 0.9).unwrap();
            let approx = step_size_approx(|_| c, &spec, &opt).unwrap();
            let expected = opt.learning_rate * c.signum();
            assert!(
                (approx.step_size - expected).abs() <= opt.learning_rate * 1e-6,
                "c = {c}, N = {n}: step {} vs lr*sign {expected}",
                approx.step_size
            );
        }
    }
    for n in [0, 5, 50] {
        let spec = TraceSpec::new(0.0, 0.1, n, 0.9).unwrap();
        let approx = step_size_approx(|_| 0.0, &spec, &opt).unwrap();
        assert_eq!(
            approx.step_size, 0.0,
            "flat derivative must give a zero step"
        );
    }
}

#[test]
fn c09_regularized_color_ordering_and_unregularized_convergence() {
    // Regularized ordering. At the stock 0.001 rate nothing stagnates within
    // the budget, so the controller never fires and the comparison is pure:
    // Hill-ADAM must never finish above ADAM, whichever well the seed picks.
    let spec = color_spec(2.0);
    let slow = OptimizerSettings::new(0.001);
    let hill_slow = HillAdamSettings::new(1e-6, 1e6);
    for seed in COLOR_SEEDS {
        let adam = train_color(&spec, OptimizerKind::Adam, &slow, &hill_slow, seed, 1000).unwrap();
        let hill = train_color(
            &spec,
            OptimizerKind::HillAdam,
            &slow,
            &hill_slow,
            seed,
            1000,
        )
        .unwrap();
        assert!(
            hill.best_loss <= adam.best_loss,
            "seed {seed}: hilladam best {} above adam best {}",
            hill.best_loss,
            adam.best_loss
        );
    }

    // Where ADAM is actually trapped in the shallow well, an active
    // controller with the ceiling between the floor and the ridge must win
    // outright, not merely tie.
    let fast = OptimizerSettings::new(0.01);
    let hill_active = HillAdamSettings::new(1e-4, 0.5);
    for seed in [2534, 3956] {
        let adam =
            train_color(&spec, OptimizerKind::Adam, &fast, &hill_active, seed, 1000).unwrap();
        let hill = train_color(
            &spec,
            OptimizerKind::HillAdam,
            &fast,
            &hill_active,
            seed,
            1000,
        )
        .unwrap();
        assert!(
            hill.best_loss < adam.best_loss - 0.02,
            "seed {seed}: escape should beat the trapped run decisively ({} vs {})",
            hill.best_loss,
            adam.best_loss
        );
        println!(
            "[c09] seed {seed}: trapped adam {:.9}, escaped hilladam {:.9}",
            adam.best_loss, hill.best_loss
        );
    }

    // Without the regularizer the loss has one minimum at the mean ratios;
    // every rule must land there.
    let free = color_spec(0.0);
    let src = fixture_means("amber.ppm");
    let tgt = fixture_means("blue.ppm");
    let target = [tgt.r / src.r, tgt.g / src.g, tgt.b / src.b];
    let hill_fine = HillAdamSettings::new(1e-9, 1e6);
    for kind in [
        OptimizerKind::Adam,
        OptimizerKind::HillAdam,
        OptimizerKind::RmsProp,
        OptimizerKind::Nadam,
    ] {
        for seed in COLOR_SEEDS {
            let run = train_color(&free, kind, &fast, &hill_fine, seed, 1000).unwrap();
            let gains = [run.gains.r, run.gains.g, run.gains.b];
            for c in 0..3 {
                assert!(
                    (gains[c] - target[c]).abs() <= 1e-3,
                    "{kind} seed {seed} channel {c}: gain {} vs ratio {}",
                    gains[c],
                    target[c]
                );
            }
            assert!(
                run.best_loss <= 1e-3,
                "{kind} seed {seed}: best loss {}",
                run.best_loss
            );
        }
    }
}

#[test]
fn c10_hilladam_escapes_the_shallow_blue_well() {
    let spec = color_spec(2.0);

    // The blue axis decouples, so its landscape is a quartic we can hand to
    // the grid-scan oracle: data term ((s*b - t)/255)^2 plus the two-well
    // penalty rho*((b - a)(b - w))^2, expanded into coefficients.
    let (s, t) = (spec.source_means.b, spec.target_means.b);
    let (a, w) = spec.blue_wells;
    let rho = spec.reg_weight;
    let quartic = PolynomialLoss::new(
        vec![
            (t * t) / 65025.0 + rho * a * a * w * w,
            (-2.0 * s * t) / 65025.0 - 2.0 * rho * (a + w) * a * w,
            (s * s) / 65025.0 + rho * ((a + w) * (a + w) + 2.0 * a * w),
            -2.0 * rho * (a + w),
            rho,
        ],
        0.2,
        2.45,
    )
    .unwrap();

    let report = global_min_oracle(&quartic, 400_000).unwrap();

    // Map the two wells and the ridge between them with a dense scan.
    let n = 250_000;
    let grid: Vec<(f64, f64)> = (0..=n)
        .map(|i| {
            let x = 0.2 + (2.45 - 0.2) * i as f64 / n as f64;
            (x, eval_poly(&quartic, x).unwrap())
        })
        .collect();
    let minima: Vec<(f64, f64)> = grid
        .windows(3)
        .filter(|w| w[1].1 <= w[0].1 && w[1].1 <= w[2].1)
        .map(|w| w[1])
        .collect();
    assert_eq!(
        minima.len(),
        2,
        "expected exactly two wells, found {minima:?}"
    );
    let (shallow_b, shallow_loss) = minima[0];
    let (global_b, _) = minima[1];
    assert!((global_b - report.arg_min).abs() < 1e-3);
    assert!(
        shallow_loss > report.min_value,
        "left well should be the shallow one"
    );
    let (barrier_b, _) = grid
        .iter()
        .filter(|(x, _)| (shallow_b..global_b).contains(x))
        .fold((f64::NAN, f64::NEG_INFINITY), |acc, &(x, v)| {
            if v > acc.1 {
                (x, v)
            } else {
                acc
            }
        });

    let opt = OptimizerSettings::new(0.01);
    let hill_settings = HillAdamSettings::new(1e-4, 0.5);
    for seed in [3956, 2534] {
        assert!(
            init_gains(seed).b < barrier_b,
            "seed {seed} must start in the non-global well"
        );
        let adam =
            train_color(&spec, OptimizerKind::Adam, &opt, &hill_settings, seed, 1000).unwrap();
        let hill = train_color(
            &spec,
            OptimizerKind::HillAdam,
            &opt,
            &hill_settings,
            seed,
            1000,
        )
        .unwrap();

        assert!(
            adam.gains.b > 0.2 && adam.gains.b < barrier_b,
            "seed {seed}: adam blue gain {} left its well (barrier {barrier_b})",
            adam.gains.b
        );
        let climbs = hill
            .trajectory
            .iter()
            .filter(|r| r.direction == Direction::Maximize)
            .count();
        assert!(climbs >= 1, "seed {seed}: no maximize phase recorded");
        assert!(
            hill.best_gains.b > barrier_b && (hill.best_gains.b - global_b).abs() < 0.05,
            "seed {seed}: hilladam blue gain {} did not settle the global well",
            hill.best_gains.b
        );
        assert!(hill.best_loss < adam.best_loss);
        println!(
            "[c10] seed {seed}: adam b {:.6} (barrier {barrier_b:.6}), hilladam b {:.6} after {climbs} climb steps",
            adam.gains.b, hill.best_gains.b
        );
    }
}

#[test]
fn c11_ppm_round_trip_and_malformed_rejection() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..50 {
        let width = rng.gen_range(1..=32);
        let height = rng.gen_range(1..=32);
        let pixels: Vec<u8> = (0..width * height * 3).map(|_| rng.gen()).collect();
        let img = ImageBuffer::new(width, height, pixels).unwrap();

        let encoded = save_image(&img);
        let decoded = load_image(&encoded).unwrap();
        assert_eq!(decoded, img, "case {case}: decode altered the image");
        assert_eq!(
            save_image(&decoded),
            encoded,
            "case {case}: re-encode not byte-identical"
        );
    }

    let malformed: [(&str, Vec<u8>, &str); 5] = [
        ("wrong magic", b"P5\n2 2\n255\n".to_vec(), "bad magic"),
        (
            "bad maxval",
            b"P6\n2 2\n254\n".to_vec(),
            "maxval must be 255",
        ),
        (
            "zero dimension",
            b"P6\n0 2\n255\n".to_vec(),
            "dimensions must be positive",
        ),
        (
            "truncated pixels",
            [b"P6\n2 2\n255\n".as_slice(), &[0u8; 5]].concat(),
            "truncated pixel data",
        ),
        (
            "trailing bytes",
            [b"P6\n2 2\n255\n".as_slice(), &[0u8; 13]].concat(),
            "trailing data",
        ),
    ];
    for (label, bytes, needle) in malformed {
        match load_image(&bytes) {
            Err(Error::Format(message)) => assert!(
                message.contains(needle),
                "{label}: message {message:?} missing {needle:?}"
            ),
            other => panic!("{label}: expected a format error, got {other:?}"),
        }
    }
}

fn run_config(config: &Path, out_dir: &Path) {
    let status = Command::new(env!("CARGO_BIN_EXE_hilladam"))
        .arg(config)
        .arg("--out-dir")
        .arg(out_dir)
        .args(["--jobs", "2"])
        .status()
        .unwrap();
    assert!(status.success());
}

fn dir_snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut entries: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().into_string().unwrap(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    entries.sort();
    entries
}

#[test]
fn c12_experiment_runs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let poly = dir.path().join("poly.conf");
    std::fs::write(
        &poly,
        "mode = poly_bench\nloss = 3\noptimizers = adam,hilladam,rmsprop,nadam\n\
         seeds = 0,1,2\nsteps = 400\nlearning_rate = 0.01\ndelta = 1e-4\nout_dir = unused\n",
    )
    .unwrap();
    let color = dir.path().join("color.conf");
    std::fs::write(
        &color,
        format!(
            "mode = color\nsource = {}\ntarget = {}\ngamma = 0.5\n\
             optimizers = adam,hilladam\nseeds = 2534,3956\nsteps = 300\n\
             learning_rate = 0.01\ndelta = 1e-4\nout_dir = unused\n",
            fixture("amber.ppm").display(),
            fixture("blue.ppm").display()
        ),
    )
    .unwrap();

    for (config, label) in [(&poly, "poly"), (&color, "color")] {
        let first = dir.path().join(format!("{label}_a"));
        let second = dir.path().join(format!("{label}_b"));
        run_config(config, &first);
        run_config(config, &second);
        let lhs = dir_snapshot(&first);
        let rhs = dir_snapshot(&second);
        assert!(!lhs.is_empty());
        assert_eq!(
            lhs.iter().map(|(n, _)| n).collect::<Vec<_>>(),
            rhs.iter().map(|(n, _)| n).collect::<Vec<_>>()
        );
        for ((name, a), (_, b)) in lhs.iter().zip(&rhs) {
            assert_eq!(a, b, "{label}: {name} differs between identical runs");
        }
    }
}
