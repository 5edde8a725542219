//! Color-transfer experiment: decode a source and target image, match the
//! source's per-channel means to the target's by learning three RGB gains,
//! with a double-well penalty on the blue gain that splits the otherwise
//! convex landscape into two separated minima.
//!
//! Image I/O is a deliberately narrow PPM subset: binary P6, maxval 255,
//! header exactly `P6\n{width} {height}\n255\n`, no comments, no padding.
//! Restricting to this canonical form is what makes the codec bit-exact:
//! every accepted stream re-encodes to the identical bytes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::optimizers::{
    restore_best, HillAdamSettings, Optimizer, OptimizerKind, OptimizerSettings, StepRecord,
};

/// Row-major 8-bit RGB image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl ImageBuffer {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Contract(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        let expected = width
            .checked_mul(height)
            .and_then(|n| n.checked_mul(3))
            .ok_or_else(|| Error::Contract("image dimensions overflow".into()))?;
        if pixels.len() != expected {
            return Err(Error::Contract(format!(
                "pixel buffer must hold {expected} bytes for {width}x{height}, got {}",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Row-major RGB triples.
    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }
}

/// Per-channel arithmetic means, each in [0, 255].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelMeans {
    pub r: f64,
    pub g: f64,
    pub b: f64,
}

/// Per-channel multiplicative gains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainVector {
    pub r: f64,
    pub g: f64,
    pub b: f64,
}

impl GainVector {
    pub fn new(r: f64, g: f64, b: f64) -> Result<Self> {
        let gains = Self { r, g, b };
        gains.validate()?;
        Ok(gains)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("r", self.r), ("g", self.g), ("b", self.b)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Contract(format!(
                    "gain {name} must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }

    fn as_array(&self) -> [f64; 3] {
        [self.r, self.g, self.b]
    }

    fn from_array(a: [f64; 3]) -> Self {
        Self {
            r: a[0],
            g: a[1],
            b: a[2],
        }
    }
}

/// Everything the regularized mean-matching loss depends on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColorLossSpec {
    pub source_means: ChannelMeans,
    pub target_means: ChannelMeans,
    /// Penalty weight rho; 0 switches the regularizer off.
    pub reg_weight: f64,
    /// The two well centers (a, b) of the blue-gain penalty, a < b.
    pub blue_wells: (f64, f64),
}

impl ColorLossSpec {
    pub fn new(
        source_means: ChannelMeans,
        target_means: ChannelMeans,
        reg_weight: f64,
        blue_wells: (f64, f64),
    ) -> Result<Self> {
        if !(reg_weight.is_finite() && reg_weight >= 0.0) {
            return Err(Error::Contract(format!(
                "reg_weight must be finite and non-negative, got {reg_weight}"
            )));
        }
        if !(blue_wells.0.is_finite() && blue_wells.1.is_finite() && blue_wells.0 < blue_wells.1) {
            return Err(Error::Contract(format!(
                "blue wells must satisfy a < b, got ({}, {})",
                blue_wells.0, blue_wells.1
            )));
        }
        Ok(Self {
            source_means,
            target_means,
            reg_weight,
            blue_wells,
        })
    }
}

fn parse_ascii_usize(field: &[u8], what: &str) -> Result<usize> {
    if field.is_empty() {
        return Err(Error::Format(format!("missing {what}")));
    }
    if field[0] == b'0' {
        // "0" itself is rejected later as a zero dimension; leading zeros
        // would break byte-exact re-encoding.
        if field.len() > 1 {
            return Err(Error::Format(format!("{what} has a leading zero")));
        }
    }
    let text =
        std::str::from_utf8(field).map_err(|_| Error::Format(format!("{what} is not ASCII")))?;
    text.parse::<usize>()
        .map_err(|_| Error::Format(format!("{what} is not a decimal number: {text:?}")))
}

/// Decodes the canonical binary-PPM subset described in the module docs.
pub fn load_image(bytes: &[u8]) -> Result<ImageBuffer> {
    let rest = bytes
        .strip_prefix(b"P6\n")
        .ok_or_else(|| Error::Format("bad magic: expected \"P6\"".into()))?;

    let header_end = rest
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Format("unterminated dimension line".into()))?;
    let dim_line = &rest[..header_end];
    let rest = &rest[header_end + 1..];

    let space = dim_line
        .iter()
        .position(|&b| b == b' ')
        .ok_or_else(|| Error::Format("dimension line must be \"width height\"".into()))?;
    let width = parse_ascii_usize(&dim_line[..space], "width")?;
    let height = parse_ascii_usize(&dim_line[space + 1..], "height")?;
    if width == 0 || height == 0 {
        return Err(Error::Format(format!(
            "image dimensions must be positive, got {width}x{height}"
        )));
    }

    let rest = rest
        .strip_prefix(b"255\n")
        .ok_or_else(|| Error::Format("maxval must be 255".into()))?;

    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(3))
        .ok_or_else(|| Error::Format("image dimensions overflow".into()))?;
    if rest.len() < expected {
        return Err(Error::Format(format!(
            "truncated pixel data: expected {expected} bytes, found {}",
            rest.len()
        )));
    }
    if rest.len() > expected {
        return Err(Error::Format(format!(
            "trailing data after pixel payload: {} extra bytes",
            rest.len() - expected
        )));
    }

    ImageBuffer::new(width, height, rest.to_vec())
}

/// Encodes to the same canonical subset `load_image` accepts.
pub fn save_image(img: &ImageBuffer) -> Vec<u8> {
    let mut bytes = format!("P6\n{} {}\n255\n", img.width, img.height).into_bytes();
    bytes.extend_from_slice(&img.pixels);
    bytes
}

/// Arithmetic mean of each channel over all pixels.
pub fn channel_means(img: &ImageBuffer) -> Result<ChannelMeans> {
    let count = img.width * img.height;
    if count == 0 {
        return Err(Error::Contract(
            "cannot take channel means of an empty image".into(),
        ));
    }
    let mut sums = [0.0f64; 3];
    for pixel in img.pixels.chunks_exact(3) {
        sums[0] += pixel[0] as f64;
        sums[1] += pixel[1] as f64;
        sums[2] += pixel[2] as f64;
    }
    let n = count as f64;
    Ok(ChannelMeans {
        r: sums[0] / n,
        g: sums[1] / n,
        b: sums[2] / n,
    })
}

/// Scales every channel by its gain, rounding half away from zero and
/// clamping to [0, 255].
pub fn apply_gains(img: &ImageBuffer, gains: &GainVector) -> ImageBuffer {
    let g = gains.as_array();
    let pixels = img
        .pixels
        .chunks_exact(3)
        .flat_map(|pixel| {
            [0, 1, 2].map(|c| (pixel[c] as f64 * g[c]).round().clamp(0.0, 255.0) as u8)
        })
        .collect();
    ImageBuffer {
        width: img.width,
        height: img.height,
        pixels,
    }
}

/// The regularized mean-matching loss and its exact gradient.
///
/// value = sum_c ((g_c * mu_src_c - mu_tgt_c) / 255)^2
///       + rho * (g_b - a)^2 * (g_b - b)^2
pub fn color_loss(gains: &GainVector, spec: &ColorLossSpec) -> (f64, [f64; 3]) {
    let g = gains.as_array();
    let src = [
        spec.source_means.r,
        spec.source_means.g,
        spec.source_means.b,
    ];
    let tgt = [
        spec.target_means.r,
        spec.target_means.g,
        spec.target_means.b,
    ];

    let mut value = 0.0;
    let mut grad = [0.0; 3];
    for c in 0..3 {
        let residual = (g[c] * src[c] - tgt[c]) / 255.0;
        value += residual * residual;
        grad[c] = 2.0 * residual * src[c] / 255.0;
    }

    let (a, b) = spec.blue_wells;
    let da = g[2] - a;
    let db = g[2] - b;
    value += spec.reg_weight * da * da * db * db;
    grad[2] += spec.reg_weight * (2.0 * da * db * db + 2.0 * da * da * db);

    (value, grad)
}

/// Outcome of one color-gain training run.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorRunRecord {
    /// One entry per step.
    pub trajectory: Vec<StepRecord>,
    /// Returned gains: the archive restoration for Hill-ADAM, the final
    /// post-training gains for the other rules.
    pub gains: GainVector,
    /// Gains at which the best loss was observed.
    pub best_gains: GainVector,
    /// Lowest loss observed over the run.
    pub best_loss: f64,
}

/// Initial gains drawn from the seed, uniform in [0.2, 2.0] per channel
/// (r, g, b order).
pub fn init_gains(seed: u64) -> GainVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    GainVector {
        r: rng.gen_range(0.2..2.0),
        g: rng.gen_range(0.2..2.0),
        b: rng.gen_range(0.2..2.0),
    }
}

/// Optimizes the three gains directly against `color_loss`.
pub fn train_color(
    spec: &ColorLossSpec,
    kind: OptimizerKind,
    opt: &OptimizerSettings,
    hill: &HillAdamSettings,
    seed: u64,
    steps: usize,
) -> Result<ColorRunRecord> {
    if steps == 0 {
        return Err(Error::Contract("steps must be at least 1".into()));
    }
    opt.validate()?;
    hill.validate()?;

    let mut gains = init_gains(seed).as_array();
    let mut optimizer = Optimizer::new(kind, 3, *hill);
    let mut trajectory = Vec::with_capacity(steps);
    let mut best_loss = f64::INFINITY;
    let mut best_gains = gains;

    for step in 1..=steps {
        let entry = gains;
        let (value, grad) = color_loss(&GainVector::from_array(gains), spec);
        if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::DivergedAt { step });
        }

        optimizer.step(&mut gains, &grad, value, opt)?;

        if value < best_loss {
            best_loss = value;
            best_gains = entry;
        }
        trajectory.push(StepRecord {
            loss: value,
            direction: optimizer.direction(),
            best_loss,
        });
    }

    let returned = if let Some(controller) = optimizer.controller() {
        let (archived, archived_loss) = restore_best(controller)?;
        best_gains = [archived[0], archived[1], archived[2]];
        best_loss = archived_loss;
        best_gains
    } else {
        gains
    };

    Ok(ColorRunRecord {
        trajectory,
        gains: GainVector::from_array(returned),
        best_gains: GainVector::from_array(best_gains),
        best_loss,
    })
}
