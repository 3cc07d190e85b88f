//! The shared analysis pipeline: frames → pairs → correlation → validated
//! fields → time-averaged field.
//!
//! Multi-pair recordings are aggregated by node-wise arithmetic mean over
//! the pairs in which the node is usable (measured or interpolated); a
//! node no pair could resolve stays invalid. Per-pair fields are kept so
//! callers can write them out behind a flag.

use std::path::Path;
use std::sync::Arc;

use anyhow::{Context, Result};
use pivlet_core::{
    build_grid, fill_invalid, make_pairs, normalize_frame, process_pair, validate_median,
    Calibration, NodeStatus, VectorField,
};

use crate::frame_io::load_sequence;

/// Parameters of one analysis run.
#[derive(Debug, Clone)]
pub struct AnalyzeSettings {
    pub fps: f64,
    pub stride: usize,
    pub window: usize,
    pub overlap: f64,
    pub meters_per_pixel: f64,
    pub pattern: String,
    pub normalize: bool,
}

/// Everything one analysis run produces.
pub struct AnalyzeOutput {
    /// Node-wise mean across pairs.
    pub mean_field: VectorField,
    /// The validated, fill-completed field of every frame pair.
    pub pair_fields: Vec<VectorField>,
    /// Human-readable diagnostics (quarter-rule violations and the like).
    pub warnings: Vec<String>,
    pub frame_count: usize,
}

/// Default normalized-median-test settings: threshold 2.0, epsilon 0.1 px.
pub const MEDIAN_THRESHOLD: f64 = 2.0;
pub const MEDIAN_EPSILON_PX: f64 = 0.1;

/// Run the full pipeline over a frame directory.
pub fn analyze_directory(directory: &Path, settings: &AnalyzeSettings) -> Result<AnalyzeOutput> {
    let frames = load_sequence(directory, &settings.pattern).context("frame_io stage")?;
    let frames: Vec<_> = if settings.normalize {
        frames.iter().map(normalize_frame).map(Arc::new).collect()
    } else {
        frames.into_iter().map(Arc::new).collect()
    };
    let frame_count = frames.len();
    let (width, height) = (frames[0].width(), frames[0].height());

    let calibration = Calibration::new(settings.meters_per_pixel, settings.stride as f64 / settings.fps)
        .context("field stage")?;
    let grid = build_grid(width, height, settings.window, settings.overlap)
        .context("correlation stage")?;
    let pairs = make_pairs(&frames, settings.fps, settings.stride).context("frame_io stage")?;

    let mut warnings = Vec::new();
    let mut pair_fields = Vec::with_capacity(pairs.len());
    for (index, pair) in pairs.iter().enumerate() {
        let estimates = process_pair(pair, &grid).context("correlation stage")?;

        // one-quarter rule: the median displacement magnitude should stay
        // under a quarter of the window size for reliable correlation
        let mut magnitudes: Vec<f64> = estimates
            .iter()
            .filter(|e| e.valid)
            .map(|e| e.dx.hypot(e.dy))
            .collect();
        if !magnitudes.is_empty() {
            magnitudes.sort_by(|a, b| a.partial_cmp(b).expect("finite displacement"));
            let median = magnitudes[magnitudes.len() / 2];
            let limit = settings.window as f64 / 4.0;
            if median > limit {
                warnings.push(format!(
                    "pair {index}: median displacement {median:.1} px exceeds a quarter of \
                     the {} px window; consider a larger window or higher frame rate",
                    settings.window
                ));
            }
        }

        let field = VectorField::from_estimates(&estimates, &grid, calibration)
            .context("field stage")?;
        let validated = validate_median(&field, MEDIAN_THRESHOLD, MEDIAN_EPSILON_PX);
        pair_fields.push(fill_invalid(&validated));
    }

    let mean_field = average_fields(&pair_fields).context("field stage")?;
    Ok(AnalyzeOutput { mean_field, pair_fields, warnings, frame_count })
}

/// Node-wise arithmetic mean over the pairs where each node is usable.
///
/// Output status: `Valid` when any contributing sample was measured,
/// `Interpolated` when all contributions were filled values, `Invalid`
/// when no pair resolved the node. SNR averages over the same samples.
pub fn average_fields(fields: &[VectorField]) -> Result<VectorField> {
    let first = fields.first().context("no pair fields to average")?;
    let n = first.len();
    let mut u_sum = vec![0.0f64; n];
    let mut v_sum = vec![0.0f64; n];
    let mut snr_sum = vec![0.0f64; n];
    let mut count = vec![0u32; n];
    let mut any_measured = vec![false; n];
    for field in fields {
        anyhow::ensure!(
            field.cols() == first.cols() && field.rows() == first.rows(),
            "pair fields disagree on grid shape"
        );
        for i in 0..n {
            match field.status()[i] {
                NodeStatus::Invalid => {}
                status => {
                    u_sum[i] += field.u()[i];
                    v_sum[i] += field.v()[i];
                    snr_sum[i] += field.snr()[i];
                    count[i] += 1;
                    if status == NodeStatus::Valid {
                        any_measured[i] = true;
                    }
                }
            }
        }
    }

    let mut u = vec![0.0f64; n];
    let mut v = vec![0.0f64; n];
    let mut snr = vec![0.0f64; n];
    let mut status = vec![NodeStatus::Invalid; n];
    for i in 0..n {
        if count[i] > 0 {
            let k = f64::from(count[i]);
            u[i] = u_sum[i] / k;
            v[i] = v_sum[i] / k;
            snr[i] = snr_sum[i] / k;
            status[i] =
                if any_measured[i] { NodeStatus::Valid } else { NodeStatus::Interpolated };
        }
    }
    VectorField::from_parts(
        first.cols(),
        first.rows(),
        first.x_px().to_vec(),
        first.y_px().to_vec(),
        u,
        v,
        status,
        snr,
        *first.calibration(),
        first.frame_height_px(),
    )
    .map_err(|e| anyhow::anyhow!("averaged field is inconsistent: {e}"))
}

/// Usable fraction and mean speed of a field, for run summaries.
pub fn field_summary(field: &VectorField) -> (f64, f64) {
    let mut usable = 0usize;
    let mut speed_sum = 0.0;
    for i in 0..field.len() {
        if field.status()[i].is_usable() {
            usable += 1;
            speed_sum += field.u()[i].hypot(field.v()[i]);
        }
    }
    let fraction = usable as f64 / field.len() as f64;
    let mean_speed = if usable > 0 { speed_sum / usable as f64 } else { 0.0 };
    (fraction, mean_speed)
}
