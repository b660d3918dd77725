//! Rate sweep over (subrate, quantizer step) points comparing the entropy
//! estimate, the CABAC-style coder and the proposed coder on the same indices.

use rayon::prelude::*;

use crate::codec::{encode_indices, measure_image, quantize_measurements, Analysis};
use crate::container::Scheme;
use crate::entropy::{bpp_from_entropy, zero_order_entropy};
use crate::error::{Error, Result};
use crate::image_io::{EdgeMode, GrayImage};
use crate::sensing::{measurements_for_subrate, MeasurementMatrix};

pub const DEFAULT_POINTS: usize = 20;
pub const DEFAULT_SUBRATE_RANGE: (f64, f64) = (0.05, 0.7);
/// Significant-component fractions aimed for at the lowest and highest subrate.
pub const DEFAULT_SIG_TARGETS: (f64, f64) = (0.3, 0.9);
/// Bounds of `c` in `step = c * sigma_d`.
pub const STEP_FACTOR_RANGE: (f64, f64) = (0.25, 2.0);
const BISECTION_ROUNDS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    Fixed(f64),
    /// Multiple of the image's open-loop residual standard deviation.
    Relative(f64),
    /// Relative step whose factor is searched within [`STEP_FACTOR_RANGE`] so
    /// that this fraction of all indices is nonzero.
    TargetFraction(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub subrate: f64,
    pub step: StepRule,
}

fn log_interp(lo: f64, hi: f64, t: f64) -> f64 {
    lo * (hi / lo).powf(t)
}

fn subrate_position(subrate: f64) -> f64 {
    let (lo, hi) = DEFAULT_SUBRATE_RANGE;
    (subrate / lo).ln() / (hi / lo).ln()
}

/// Significant fraction the default rule aims for at a subrate.
pub fn default_target_fraction(subrate: f64) -> f64 {
    let (lo, hi) = DEFAULT_SIG_TARGETS;
    lo + (hi - lo) * subrate_position(subrate)
}

/// 20 points with log-spaced subrates in [0.05, 0.7]; the targeted
/// significant fraction rises linearly in log-subrate from 0.3 to 0.9.
pub fn default_grid() -> Vec<GridPoint> {
    let n = DEFAULT_POINTS;
    (0..n)
        .map(|k| {
            let subrate = log_interp(
                DEFAULT_SUBRATE_RANGE.0,
                DEFAULT_SUBRATE_RANGE.1,
                k as f64 / (n - 1) as f64,
            );
            GridPoint {
                subrate,
                step: StepRule::TargetFraction(default_target_fraction(subrate)),
            }
        })
        .collect()
}

/// Parses one `subrate,step` pair per line; blank lines and `#` comments are skipped.
pub fn parse_grid(text: &str) -> Result<Vec<GridPoint>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = || Error::InvalidParameter(format!("grid line {}: expected `subrate,step`, got `{raw}`", n + 1));
        let (s, q) = line.split_once(',').ok_or_else(bad)?;
        let subrate: f64 = s.trim().parse().map_err(|_| bad())?;
        let step: f64 = q.trim().parse().map_err(|_| bad())?;
        if !(subrate > 0.0 && subrate <= 1.0) || !(step.is_finite() && step > 0.0) {
            return Err(bad());
        }
        out.push(GridPoint {
            subrate,
            step: StepRule::Fixed(step),
        });
    }
    if out.is_empty() {
        return Err(Error::InvalidParameter("grid has no points".into()));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
pub struct SweepConfig {
    pub seed: u64,
    pub block_size: usize,
    pub edge_mode: EdgeMode,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            block_size: 16,
            edge_mode: EdgeMode::Strict,
        }
    }
}

/// Standard deviation of the open-loop residual `y(j) - y(j-1)` over blocks 2..n.
pub fn residual_std(measurements: &[Vec<f64>]) -> Result<f64> {
    let (mut s1, mut s2, mut n) = (0.0, 0.0, 0usize);
    for pair in measurements.windows(2) {
        for (a, b) in pair[1].iter().zip(&pair[0]) {
            let d = a - b;
            s1 += d;
            s2 += d * d;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::InvalidParameter("calibration needs at least two blocks".into()));
    }
    let mean = s1 / n as f64;
    Ok((s2 / n as f64 - mean * mean).max(0.0).sqrt())
}

pub fn significant_fraction(indices: &[Vec<i32>]) -> f64 {
    let total: usize = indices.iter().map(Vec::len).sum();
    if total == 0 {
        return 0.0;
    }
    let nz = indices.iter().flatten().filter(|&&i| i != 0).count();
    nz as f64 / total as f64
}

/// Bisects `c` (geometrically) within [`STEP_FACTOR_RANGE`] so the nonzero
/// fraction is as close to `target` as the range allows. Returns the step.
fn search_step(dims: (usize, usize), ys: &[Vec<f64>], sd: f64, target: f64) -> Result<f64> {
    let frac = |c: f64| -> Result<f64> {
        let a = quantize_measurements(dims, ys.to_vec(), c * sd)?;
        Ok(significant_fraction(&a.indices))
    };
    let (mut lo, mut hi) = STEP_FACTOR_RANGE;
    let (mut f_lo, mut f_hi) = (frac(lo)?, frac(hi)?);
    if f_hi >= target {
        return Ok(hi * sd);
    }
    if f_lo <= target {
        return Ok(lo * sd);
    }
    for _ in 0..BISECTION_ROUNDS {
        let mid = (lo * hi).sqrt();
        let f = frac(mid)?;
        if f > target {
            (lo, f_lo) = (mid, f);
        } else {
            (hi, f_hi) = (mid, f);
        }
    }
    let c = if f_lo - target <= target - f_hi { lo } else { hi };
    Ok(c * sd)
}

fn validate_target(f: f64) -> Result<()> {
    if !(f > 0.0 && f < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "target fraction must be in (0, 1), got {f}"
        )));
    }
    Ok(())
}

/// Resolves a grid point for an image and runs the front end at it.
/// Returns the analysis and the step actually used.
pub fn analyze_point(img: &GrayImage, point: &GridPoint, cfg: &SweepConfig) -> Result<(Analysis, f64)> {
    let m = measurements_for_subrate(point.subrate, cfg.block_size)?;
    let matrix = MeasurementMatrix::generate(cfg.seed, m, cfg.block_size)?;
    let (dims, ys) = measure_image(img, &matrix, cfg.block_size, cfg.edge_mode)?;
    let spread = |ys: &[Vec<f64>]| -> Result<f64> {
        let sd = residual_std(ys)?;
        if sd <= 0.0 {
            return Err(Error::InvalidParameter(
                "relative step on an image with zero residual spread".into(),
            ));
        }
        Ok(sd)
    };
    let step = match point.step {
        StepRule::Fixed(q) => q,
        StepRule::Relative(c) => c * spread(&ys)?,
        StepRule::TargetFraction(f) => {
            validate_target(f)?;
            search_step(dims, &ys, spread(&ys)?, f)?
        }
    };
    Ok((quantize_measurements(dims, ys, step)?, step))
}

/// One row of the sweep table.
#[derive(Debug, Clone, PartialEq)]
pub struct RdRow {
    pub point: usize,
    pub subrate: f64,
    pub measurements: usize,
    pub step: f64,
    pub bpp_entropy: f64,
    pub bpp_cabac: f64,
    pub bpp_ac: f64,
    pub br13: f64,
    pub br23: f64,
    pub mse: f64,
    pub sig_fraction: f64,
}

pub fn bitrate_reduction(reference: f64, candidate: f64) -> f64 {
    if reference == 0.0 {
        0.0
    } else {
        100.0 * (reference - candidate) / reference
    }
}

pub fn run_point(img: &GrayImage, index: usize, point: &GridPoint, cfg: &SweepConfig) -> Result<RdRow> {
    let (a, step) = analyze_point(img, point, cfg)?;
    let pixels = img.pixel_count();
    let total = a.total_indices();
    let entropy = zero_order_entropy(a.indices.iter().flatten().copied())?;
    let bpp_entropy = bpp_from_entropy(entropy, total, pixels)?;
    let payload_bpp = |scheme| 8.0 * encode_indices(&a.indices, scheme).len() as f64 / pixels as f64;
    let bpp_cabac = payload_bpp(Scheme::CabacStyle);
    let bpp_ac = payload_bpp(Scheme::Proposed);
    Ok(RdRow {
        point: index,
        subrate: point.subrate,
        measurements: a.indices[0].len(),
        step,
        bpp_entropy,
        bpp_cabac,
        bpp_ac,
        br13: bitrate_reduction(bpp_entropy, bpp_ac),
        br23: bitrate_reduction(bpp_cabac, bpp_ac),
        mse: a.measurement_mse(),
        sig_fraction: significant_fraction(&a.indices),
    })
}

/// Runs every point of the grid in parallel; results keep grid order.
pub fn run_image(img: &GrayImage, grid: &[GridPoint], cfg: &SweepConfig) -> Vec<Result<RdRow>> {
    grid.par_iter()
        .enumerate()
        .map(|(k, p)| run_point(img, k + 1, p, cfg))
        .collect()
}

/// Column means of a set of rows.
#[derive(Debug, Clone, PartialEq)]
pub struct RdAverage {
    pub bpp_entropy: f64,
    pub bpp_cabac: f64,
    pub bpp_ac: f64,
    pub br13: f64,
    pub br23: f64,
    pub mse: f64,
}

pub fn average(rows: &[RdRow]) -> Option<RdAverage> {
    if rows.is_empty() {
        return None;
    }
    let n = rows.len() as f64;
    let mean = |f: fn(&RdRow) -> f64| rows.iter().map(f).sum::<f64>() / n;
    Some(RdAverage {
        bpp_entropy: mean(|r| r.bpp_entropy),
        bpp_cabac: mean(|r| r.bpp_cabac),
        bpp_ac: mean(|r| r.bpp_ac),
        br13: mean(|r| r.br13),
        br23: mean(|r| r.br23),
        mse: mean(|r| r.mse),
    })
}
