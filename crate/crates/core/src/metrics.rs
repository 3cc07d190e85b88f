//! Line-profile extraction and deviation statistics.
//!
//! Velocity fields are compared along user-chosen line segments: speeds are
//! sampled by bilinear interpolation at equispaced points, ordinates are
//! non-dimensionalized to Y* ∈ [−1, 1] about the segment center, and
//! measured profiles are scored against reference profiles with three
//! statistics — mean absolute deviation, population standard deviation of
//! the signed deviation, and mean absolute percentage error with per-point
//! division.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::field::{fill_invalid, NodeStatus, VectorField};

/// Validation and sampling failures in profile work.
#[derive(Debug, Clone, PartialEq)]
pub enum MetricsError {
    /// Line start and end coincide.
    DegenerateLine { id: String },
    /// Fewer than two samples cannot form a profile.
    TooFewSamples { got: usize },
    /// Y* needs distinct center and max ordinates.
    DegenerateOrdinate { y_center: f64 },
    /// A sample point left the field's node lattice.
    OutsideExtent { id: String, sample: usize },
    /// Profile arrays are inconsistent.
    BadProfile { what: String },
    /// compare() called across different lines.
    LineIdMismatch { measured: String, reference: String },
}

impl fmt::Display for MetricsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricsError::DegenerateLine { id } => {
                write!(f, "line '{id}' has coincident endpoints")
            }
            MetricsError::TooFewSamples { got } => {
                write!(f, "profiles need at least 2 samples, got {got}")
            }
            MetricsError::DegenerateOrdinate { y_center } => {
                write!(f, "ordinate normalization needs y_max != y_center (both {y_center})")
            }
            MetricsError::OutsideExtent { id, sample } => {
                write!(f, "line exceeds field extent (line '{id}', sample {sample})")
            }
            MetricsError::BadProfile { what } => write!(f, "malformed profile: {what}"),
            MetricsError::LineIdMismatch { measured, reference } => {
                write!(f, "cannot compare line '{measured}' against reference '{reference}'")
            }
        }
    }
}

impl core::error::Error for MetricsError {}

/// A straight probe through the field, in meter coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct LineSegment {
    id: String,
    start: (f64, f64),
    end: (f64, f64),
    sample_count: usize,
}

impl LineSegment {
    /// Default probe resolution: 25 points per line (75 over three lines).
    pub const DEFAULT_SAMPLES: usize = 25;

    /// A segment sampled at the default 25 points.
    pub fn new(id: &str, start: (f64, f64), end: (f64, f64)) -> Result<Self, MetricsError> {
        Self::with_samples(id, start, end, Self::DEFAULT_SAMPLES)
    }

    /// A segment with an explicit sample count (≥ 2).
    pub fn with_samples(
        id: &str,
        start: (f64, f64),
        end: (f64, f64),
        sample_count: usize,
    ) -> Result<Self, MetricsError> {
        if start == end {
            return Err(MetricsError::DegenerateLine { id: String::from(id) });
        }
        if sample_count < 2 {
            return Err(MetricsError::TooFewSamples { got: sample_count });
        }
        Ok(LineSegment { id: String::from(id), start, end, sample_count })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn start(&self) -> (f64, f64) {
        self.start
    }

    pub fn end(&self) -> (f64, f64) {
        self.end
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }
}

/// Speeds along one line, indexed by normalized ordinate Y*.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    line_id: String,
    ystar: Vec<f64>,
    speed: Vec<f64>,
    filled: Vec<bool>,
}

impl Profile {
    /// Assemble a profile, checking shape: equal-length arrays, at least two
    /// points, Y* strictly increasing within [−1, 1] (tiny slack allowed).
    pub fn new(
        line_id: &str,
        ystar: Vec<f64>,
        speed: Vec<f64>,
        filled: Vec<bool>,
    ) -> Result<Self, MetricsError> {
        if ystar.len() != speed.len() || ystar.len() != filled.len() {
            return Err(MetricsError::BadProfile {
                what: alloc::format!(
                    "array lengths differ: {} ystar, {} speed, {} flags",
                    ystar.len(),
                    speed.len(),
                    filled.len()
                ),
            });
        }
        if ystar.len() < 2 {
            return Err(MetricsError::TooFewSamples { got: ystar.len() });
        }
        const SLACK: f64 = 1e-9;
        for (i, &y) in ystar.iter().enumerate() {
            if !(-1.0 - SLACK..=1.0 + SLACK).contains(&y) {
                return Err(MetricsError::BadProfile {
                    what: alloc::format!("ystar[{i}] = {y} outside [-1, 1]"),
                });
            }
            if i > 0 && ystar[i - 1] >= y {
                return Err(MetricsError::BadProfile {
                    what: alloc::format!("ystar not strictly increasing at index {i}"),
                });
            }
        }
        if speed.iter().any(|s| !s.is_finite()) {
            return Err(MetricsError::BadProfile { what: String::from("non-finite speed") });
        }
        Ok(Profile { line_id: String::from(line_id), ystar, speed, filled })
    }

    pub fn line_id(&self) -> &str {
        &self.line_id
    }

    pub fn ystar(&self) -> &[f64] {
        &self.ystar
    }

    pub fn speed(&self) -> &[f64] {
        &self.speed
    }

    /// Per-point flag: true when the bilinear support touched invalid nodes
    /// and the value came from the fill-completed field.
    pub fn filled(&self) -> &[bool] {
        &self.filled
    }

    pub fn len(&self) -> usize {
        self.ystar.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ystar.is_empty()
    }
}

/// Deviation statistics of a measured profile against its reference.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationReport {
    /// Which line the statistics describe.
    pub line_id: String,
    /// Mean absolute deviation, m/s.
    pub mad_mps: f64,
    /// Population standard deviation of the signed deviation, m/s.
    pub std_mps: f64,
    /// Mean absolute percentage error; `None` when any reference speed is
    /// exactly zero (per-point division is undefined there).
    pub mape_pct: Option<f64>,
}

/// Non-dimensional ordinate: `Y* = (y − y_center) / (y_max − y_center)`.
///
/// With center-relative Y the segment endpoints map to ±1.
pub fn normalize_ordinate(y: f64, y_center: f64, y_max: f64) -> Result<f64, MetricsError> {
    let denom = y_max - y_center;
    if denom == 0.0 {
        return Err(MetricsError::DegenerateOrdinate { y_center });
    }
    Ok((y - y_center) / denom)
}

/// Fractional grid coordinate of a query along one axis given the node
/// positions of that axis. Returns None when outside the lattice.
///
/// The slack absorbs serialization round-trip noise: fields reloaded from
/// 9-significant-digit CSVs carry ~1e-9 relative calibration error, which
/// can push an exactly-on-the-edge line a few 1e-8 grid units outside.
fn grid_coordinate(query: f64, first: f64, last: f64, count: usize) -> Option<f64> {
    const SLACK: f64 = 1e-6;
    if count == 1 {
        return ((query - first).abs() <= SLACK).then_some(0.0);
    }
    let spacing = (last - first) / (count - 1) as f64;
    let g = (query - first) / spacing;
    if (-SLACK..=(count - 1) as f64 + SLACK).contains(&g) {
        Some(g.clamp(0.0, (count - 1) as f64))
    } else {
        None
    }
}

/// Sample speeds along `line` by bilinear interpolation on the field's node
/// lattice.
///
/// Points whose 2×2 support touches an invalid node take their value from
/// the fill-completed field instead and are flagged in the profile. The
/// line must lie within the node lattice (window centers), not merely the
/// frame.
pub fn sample_line(field: &VectorField, line: &LineSegment) -> Result<Profile, MetricsError> {
    let mpp = field.calibration().meters_per_pixel();
    let (cols, rows) = (field.cols(), field.rows());
    let top = field.frame_height_px() as f64 - 1.0;
    let x_first = field.x_px()[0];
    let x_last = field.x_px()[cols - 1];
    let y_first = field.y_px()[0];
    let y_last = field.y_px()[(rows - 1) * cols];

    // lazily fill only when a sample actually needs repaired nodes
    let mut filled_field: Option<VectorField> = None;

    let n = line.sample_count;
    let length = libm::hypot(line.end.0 - line.start.0, line.end.1 - line.start.1);
    let mut ystar = Vec::with_capacity(n);
    let mut speed = Vec::with_capacity(n);
    let mut filled_flags = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 / (n - 1) as f64;
        // meter-space sample point → pixel coordinates (y flips back down)
        let sx = line.start.0 + t * (line.end.0 - line.start.0);
        let sy = line.start.1 + t * (line.end.1 - line.start.1);
        let x_px = sx / mpp;
        let y_px = top - sy / mpp;

        let gx = grid_coordinate(x_px, x_first, x_last, cols)
            .ok_or(MetricsError::OutsideExtent { id: line.id.clone(), sample: i })?;
        let gy = grid_coordinate(y_px, y_first, y_last, rows)
            .ok_or(MetricsError::OutsideExtent { id: line.id.clone(), sample: i })?;

        let c0 = (gx as usize).min(cols - 1);
        let r0 = (gy as usize).min(rows - 1);
        let c1 = (c0 + 1).min(cols - 1);
        let r1 = (r0 + 1).min(rows - 1);
        let fx = gx - c0 as f64;
        let fy = gy - r0 as f64;
        let support = [r0 * cols + c0, r0 * cols + c1, r1 * cols + c0, r1 * cols + c1];

        let needs_fill =
            support.iter().any(|&node| field.status()[node] == NodeStatus::Invalid);
        if needs_fill && filled_field.is_none() {
            filled_field = Some(fill_invalid(field));
        }
        let source = if needs_fill { filled_field.as_ref().unwrap() } else { field };

        let lerp2 = |values: &[f64]| {
            let v00 = values[support[0]];
            let v10 = values[support[1]];
            let v01 = values[support[2]];
            let v11 = values[support[3]];
            let top_edge = v00 + fx * (v10 - v00);
            let bottom_edge = v01 + fx * (v11 - v01);
            top_edge + fy * (bottom_edge - top_edge)
        };
        let u = lerp2(source.u());
        let v = lerp2(source.v());
        speed.push(libm::hypot(u, v));
        filled_flags.push(needs_fill);

        // ordinate measured from the segment center, normalized by the
        // half-length so endpoints land at ±1
        let s = t * length;
        ystar.push(normalize_ordinate(s, 0.5 * length, length)?);
    }
    Profile::new(&line.id, ystar, speed, filled_flags)
}

/// Linearly interpolate a sorted profile's speeds at `targets`, clamping to
/// the end values outside the knot range.
fn resample(knots: &[f64], values: &[f64], targets: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(targets.len());
    for &t in targets {
        if t <= knots[0] {
            out.push(values[0]);
            continue;
        }
        if t >= knots[knots.len() - 1] {
            out.push(values[values.len() - 1]);
            continue;
        }
        // first knot strictly above t; t lies in [k-1, k)
        let k = knots.partition_point(|&y| y <= t);
        let (y0, y1) = (knots[k - 1], knots[k]);
        let frac = (t - y0) / (y1 - y0);
        out.push(values[k - 1] + frac * (values[k] - values[k - 1]));
    }
    out
}

/// Score `measured` against `reference` on the measured profile's Y* grid.
///
/// The reference is resampled by linear interpolation when the grids
/// differ. `mad` is the mean absolute deviation, `std` the population
/// standard deviation of the signed deviation, and `mape` averages
/// per-point percentage errors — reported as `None` when any aligned
/// reference speed is exactly zero.
pub fn compare(measured: &Profile, reference: &Profile) -> Result<DeviationReport, MetricsError> {
    if measured.line_id != reference.line_id {
        return Err(MetricsError::LineIdMismatch {
            measured: measured.line_id.clone(),
            reference: reference.line_id.clone(),
        });
    }
    let aligned_ref = if measured.ystar == reference.ystar {
        reference.speed.clone()
    } else {
        resample(&reference.ystar, &reference.speed, &measured.ystar)
    };
    Ok(deviation_stats(&measured.line_id, &measured.speed, &aligned_ref))
}

/// Pool several (measured, reference) pairs into one report over all
/// aligned points, labeled `pooled_id`.
pub fn compare_pooled(
    pairs: &[(&Profile, &Profile)],
    pooled_id: &str,
) -> Result<DeviationReport, MetricsError> {
    let mut all_measured = Vec::new();
    let mut all_reference = Vec::new();
    for (measured, reference) in pairs {
        if measured.line_id != reference.line_id {
            return Err(MetricsError::LineIdMismatch {
                measured: measured.line_id.clone(),
                reference: reference.line_id.clone(),
            });
        }
        let aligned_ref = if measured.ystar == reference.ystar {
            reference.speed.clone()
        } else {
            resample(&reference.ystar, &reference.speed, &measured.ystar)
        };
        all_measured.extend_from_slice(&measured.speed);
        all_reference.extend(aligned_ref);
    }
    if all_measured.is_empty() {
        return Err(MetricsError::TooFewSamples { got: 0 });
    }
    Ok(deviation_stats(pooled_id, &all_measured, &all_reference))
}

fn deviation_stats(line_id: &str, measured: &[f64], reference: &[f64]) -> DeviationReport {
    let n = measured.len() as f64;
    let mut abs_sum = 0.0;
    let mut diff_sum = 0.0;
    for (m, r) in measured.iter().zip(reference) {
        abs_sum += (m - r).abs();
        diff_sum += m - r;
    }
    let mad = abs_sum / n;
    let mean_diff = diff_sum / n;
    let var = measured
        .iter()
        .zip(reference)
        .map(|(m, r)| {
            let d = (m - r) - mean_diff;
            d * d
        })
        .sum::<f64>()
        / n;
    let std_dev = libm::sqrt(var);
    let mape = if reference.contains(&0.0) {
        None
    } else {
        let pct_sum: f64 =
            measured.iter().zip(reference).map(|(m, r)| ((m - r) / r).abs()).sum();
        Some(100.0 * pct_sum / n)
    };
    DeviationReport {
        line_id: String::from(line_id),
        mad_mps: mad,
        std_mps: std_dev,
        mape_pct: mape,
    }
}
