//! The five 1-D polynomial benchmark losses, their analytic derivatives, and
//! a brute-force global-minimum oracle used as ground truth in tests.

use crate::error::{Error, Result};

/// A polynomial loss with ascending-degree coefficients (index i holds the
/// x^i coefficient) and the closed interval its minimum oracle scans.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialLoss {
    coefficients: Vec<f64>,
    search_interval: (f64, f64),
}

impl PolynomialLoss {
    pub fn new(coefficients: Vec<f64>, lo: f64, hi: f64) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::Contract(
                "polynomial needs at least one coefficient".into(),
            ));
        }
        if coefficients.last() == Some(&0.0) {
            return Err(Error::Contract(
                "leading coefficient must be nonzero".into(),
            ));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("polynomial coefficient".into()));
        }
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Contract(format!(
                "search interval must satisfy lo < hi, got [{lo}, {hi}]"
            )));
        }
        Ok(Self {
            coefficients,
            search_interval: (lo, hi),
        })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn search_interval(&self) -> (f64, f64) {
        self.search_interval
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }
}

/// Result of a global-minimum scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimumReport {
    pub arg_min: f64,
    pub min_value: f64,
    /// Grid spacing of the dense scan that seeded the refinement.
    pub resolution: f64,
}

fn horner(coefficients: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for &c in coefficients.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

/// Evaluates the polynomial by Horner's scheme.
pub fn eval_poly(p: &PolynomialLoss, x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::NonFinite(format!("eval_poly input x is {x}")));
    }
    Ok(horner(&p.coefficients, x))
}

/// Symbolic derivative. The derivative of a constant is the zero polynomial
/// `[0]` (the one representation exempt from the nonzero-leading-coefficient
/// rule, since it only ever arises here).
pub fn poly_derivative(p: &PolynomialLoss) -> PolynomialLoss {
    let coefficients = if p.coefficients.len() == 1 {
        vec![0.0]
    } else {
        p.coefficients
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c * i as f64)
            .collect()
    };
    PolynomialLoss {
        coefficients,
        search_interval: p.search_interval,
    }
}

/// Dense grid scan of the search interval followed by derivative bisection
/// around the best grid point.
///
/// The refinement brackets the best grid point by one grid cell on each side
/// and bisects the derivative's sign change; if the bracket holds no sign
/// change (a boundary minimum) the grid point stands. The reported minimum
/// is the smallest value over every scanned point plus the refined
/// candidate, so it never exceeds any scanned value.
pub fn global_min_oracle(p: &PolynomialLoss, grid_points: usize) -> Result<MinimumReport> {
    if grid_points < 1000 {
        return Err(Error::Contract(format!(
            "grid_points must be at least 1000, got {grid_points}"
        )));
    }
    let (lo, hi) = p.search_interval;
    let resolution = (hi - lo) / grid_points as f64;

    let mut best_x = lo;
    let mut best_value = horner(&p.coefficients, lo);
    for i in 1..=grid_points {
        let x = if i == grid_points {
            hi
        } else {
            lo + i as f64 * resolution
        };
        let value = horner(&p.coefficients, x);
        if value < best_value {
            best_value = value;
            best_x = x;
        }
    }

    let derivative = poly_derivative(p);
    let mut a = (best_x - resolution).max(lo);
    let mut b = (best_x + resolution).min(hi);
    let da = horner(&derivative.coefficients, a);
    let db = horner(&derivative.coefficients, b);
    if da <= 0.0 && db >= 0.0 {
        for _ in 0..200 {
            if (b - a).abs() <= f64::EPSILON * a.abs().max(b.abs()).max(1.0) {
                break;
            }
            let mid = 0.5 * (a + b);
            if horner(&derivative.coefficients, mid) <= 0.0 {
                a = mid;
            } else {
                b = mid;
            }
        }
        let refined = 0.5 * (a + b);
        let refined_value = horner(&p.coefficients, refined);
        if refined_value < best_value {
            best_value = refined_value;
            best_x = refined;
        }
    }

    Ok(MinimumReport {
        arg_min: best_x,
        min_value: best_value,
        resolution,
    })
}

/// The five benchmark polynomials, ascending-degree coefficients:
///
/// 1. x^2 + 4                                on [-5, 5]
/// 2. 40(x^6 + x^5 + 3x^3 + 4x^2 + x) + 8    on [-5, 5]
/// 3. 4x^8 - 76x^7 + 605x^6 - 2614.01x^5 + 6629x^4
///    - 9940x^3 + 8404x^2 - 3552x + 576      on [-1, 6]
/// 4. 0.1x^10 - 3x^9 + 39.5x^8 - 300x^7 + 1452.3x^6 - 4671x^5
///    + 10080.5x^4 - 14370x^3 + 12907.6x^2 - 6576.3x + 1440   on [-1, 6]
/// 5. x^4 - 6x^3 + 12x^2 - 10x + 5           on [-5, 5]
///
/// The intervals contain every real stationary point of their polynomial
/// (the derivative has a single sign on each side beyond them).
pub fn benchmark_losses() -> Vec<PolynomialLoss> {
    let rows: [(&[f64], f64, f64); 5] = [
        (&[4.0, 0.0, 1.0], -5.0, 5.0),
        (&[8.0, 40.0, 160.0, 120.0, 0.0, 40.0, 40.0], -5.0, 5.0),
        (
            &[
                576.0, -3552.0, 8404.0, -9940.0, 6629.0, -2614.01, 605.0, -76.0, 4.0,
            ],
            -1.0,
            6.0,
        ),
        (
            &[
                1440.0, -6576.3, 12907.6, -14370.0, 10080.5, -4671.0, 1452.3, -300.0, 39.5, -3.0,
                0.1,
            ],
            -1.0,
            6.0,
        ),
        (&[5.0, -10.0, 12.0, -6.0, 1.0], -5.0, 5.0),
    ];
    rows.iter()
        .map(|&(coefficients, lo, hi)| {
            PolynomialLoss::new(coefficients.to_vec(), lo, hi).expect("benchmark rows are valid")
        })
        .collect()
}
