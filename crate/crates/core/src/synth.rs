//! Synthetic particle-image generation against analytic flow fields.
//!
//! This is the toolkit's verification oracle: particles are seeded by a
//! deterministic random source, advected one Euler step through a closed-form
//! flow, and rendered as Gaussian blobs into a frame pair. Because the flow
//! is known exactly, the ground-truth velocity at every window center is
//! available to compare against whatever the correlation pipeline measures.
//!
//! Coordinates: flow positions are image-aligned meters — pixel coordinates
//! scaled by the calibration, x along rows, y along columns (downward in the
//! image). Keeping the flow field in image alignment means truth and
//! measured fields share sign conventions end to end; the physically-upward
//! flip applies only when positions are serialized.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::correlation::WindowGrid;
use crate::field::{Calibration, NodeStatus, VectorField};
use crate::frame::{Frame, FramePair};
use crate::rng::Rng;

/// Analytic flow fields with closed-form velocity everywhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FlowSpec {
    /// Constant velocity everywhere, m/s.
    Uniform { u: f64, v: f64 },
    /// Rigid-body rotation about `center` (meters); positive `omega_rad_s`
    /// turns from +x toward +y.
    SolidRotation { center: (f64, f64), omega_rad_s: f64 },
    /// Potential flow around a cylinder of `radius_m` at `center`, free
    /// stream `u_inf` along +x. Zero velocity inside the cylinder.
    CylinderPotential { center: (f64, f64), radius_m: f64, u_inf: f64 },
}

/// Velocity (u, v) in m/s of the analytic flow at `position` (meters).
///
/// The cylinder solution is `u_inf·(1 − R²(x²−y²)/r⁴, −2R²xy/r⁴)` in
/// cylinder-centered coordinates, zero strictly inside `r < R`.
pub fn evaluate_flow(spec: &FlowSpec, position: (f64, f64)) -> (f64, f64) {
    match *spec {
        FlowSpec::Uniform { u, v } => (u, v),
        FlowSpec::SolidRotation { center, omega_rad_s } => {
            let (dx, dy) = (position.0 - center.0, position.1 - center.1);
            (-omega_rad_s * dy, omega_rad_s * dx)
        }
        FlowSpec::CylinderPotential { center, radius_m, u_inf } => {
            let (x, y) = (position.0 - center.0, position.1 - center.1);
            let r2 = x * x + y * y;
            if r2 < radius_m * radius_m || r2 == 0.0 {
                return (0.0, 0.0);
            }
            let k = radius_m * radius_m / (r2 * r2);
            (u_inf * (1.0 - k * (x * x - y * y)), u_inf * (-2.0 * k * x * y))
        }
    }
}

/// Knobs of the synthetic renderer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    /// Frame width, px.
    pub width: usize,
    /// Frame height, px.
    pub height: usize,
    /// Mean particle count per square pixel.
    pub particle_density: f64,
    /// Gaussian blob diameter at the e⁻² intensity level, px.
    pub particle_diameter: f64,
    /// Standard deviation of additive luminance noise, in unit-range
    /// intensity units.
    pub intensity_noise_sigma: f64,
    /// Seed for the deterministic random source.
    pub seed: u64,
    /// Image scale and exposure interval shared with the analysis side.
    pub calibration: Calibration,
}

/// Configuration or flow-description violations caught before rendering.
#[derive(Debug, Clone, PartialEq)]
pub enum SynthError {
    BadConfig { what: String },
    BadFlow { what: String },
    /// The truth grid was built for a different frame geometry.
    GridMismatch { grid: (usize, usize), frame: (usize, usize) },
}

impl fmt::Display for SynthError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SynthError::BadConfig { what } => write!(f, "bad render config: {what}"),
            SynthError::BadFlow { what } => write!(f, "bad flow description: {what}"),
            SynthError::GridMismatch { grid, frame } => write!(
                f,
                "truth grid covers {}×{} but frames are {}×{}",
                grid.0, grid.1, frame.0, frame.1
            ),
        }
    }
}

impl core::error::Error for SynthError {}

/// Non-fatal rendering diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub enum SynthWarning {
    /// Expected particles per interrogation window fell below 5; the
    /// correlation signal will be weak.
    LowSeeding { expected_per_window: f64 },
}

impl fmt::Display for SynthWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SynthWarning::LowSeeding { expected_per_window } => write!(
                f,
                "low seeding: {expected_per_window:.2} particles expected per window (< 5)"
            ),
        }
    }
}

/// Everything one rendering run produces.
#[derive(Debug, Clone)]
pub struct RenderOutput {
    /// The synthetic exposure pair, dt taken from the calibration.
    pub pair: FramePair,
    /// Exact flow velocities sampled at the grid's window centers.
    pub truth: VectorField,
    /// Diagnostics that don't invalidate the render.
    pub warnings: Vec<SynthWarning>,
}

impl SynthConfig {
    fn validate(&self) -> Result<(), SynthError> {
        if self.width == 0 || self.height == 0 {
            return Err(SynthError::BadConfig {
                what: alloc::format!("frame dimensions {}×{} are empty", self.width, self.height),
            });
        }
        if !(self.particle_density > 0.0 && self.particle_density.is_finite()) {
            return Err(SynthError::BadConfig {
                what: alloc::format!("particle_density must be > 0, got {}", self.particle_density),
            });
        }
        if !(self.particle_diameter >= 1.0 && self.particle_diameter.is_finite()) {
            return Err(SynthError::BadConfig {
                what: alloc::format!(
                    "particle_diameter must be ≥ 1 px, got {}",
                    self.particle_diameter
                ),
            });
        }
        if !(self.intensity_noise_sigma >= 0.0 && self.intensity_noise_sigma.is_finite()) {
            return Err(SynthError::BadConfig {
                what: alloc::format!(
                    "intensity_noise_sigma must be ≥ 0, got {}",
                    self.intensity_noise_sigma
                ),
            });
        }
        Ok(())
    }
}

fn validate_flow(spec: &FlowSpec) -> Result<(), SynthError> {
    let finite = |values: &[f64]| values.iter().all(|v| v.is_finite());
    match *spec {
        FlowSpec::Uniform { u, v } => {
            if !finite(&[u, v]) {
                return Err(SynthError::BadFlow { what: String::from("non-finite velocity") });
            }
        }
        FlowSpec::SolidRotation { center, omega_rad_s } => {
            if !finite(&[center.0, center.1, omega_rad_s]) {
                return Err(SynthError::BadFlow { what: String::from("non-finite parameters") });
            }
        }
        FlowSpec::CylinderPotential { center, radius_m, u_inf } => {
            if !finite(&[center.0, center.1, radius_m, u_inf]) {
                return Err(SynthError::BadFlow { what: String::from("non-finite parameters") });
            }
            if radius_m <= 0.0 {
                return Err(SynthError::BadFlow {
                    what: alloc::format!("cylinder radius must be > 0, got {radius_m}"),
                });
            }
        }
    }
    Ok(())
}

/// Pixel displacement of a tracer moving at `velocity` (m/s) over one
/// exposure interval.
fn displacement_px(velocity: (f64, f64), cal: &Calibration) -> (f64, f64) {
    let px_per_mps = cal.dt() / cal.meters_per_pixel();
    (velocity.0 * px_per_mps, velocity.1 * px_per_mps)
}

/// Largest displacement magnitude (px) the flow produces over the frame,
/// probed on a coarse lattice. Used to size the seeding margin so particles
/// can enter the frame between exposures.
fn probe_max_displacement_px(spec: &FlowSpec, config: &SynthConfig) -> f64 {
    const LATTICE: usize = 17;
    let mpp = config.calibration.meters_per_pixel();
    let mut max_px = 0.0f64;
    for iy in 0..LATTICE {
        for ix in 0..LATTICE {
            let x = (config.width - 1) as f64 * ix as f64 / (LATTICE - 1) as f64;
            let y = (config.height - 1) as f64 * iy as f64 / (LATTICE - 1) as f64;
            let vel = evaluate_flow(spec, (x * mpp, y * mpp));
            let (dx, dy) = displacement_px(vel, &config.calibration);
            max_px = max_px.max(libm::hypot(dx, dy));
        }
    }
    max_px
}

/// Stamp one Gaussian particle into the intensity buffer.
///
/// The blob is `exp(−8·r²/d²)` (intensity e⁻² at r = d/2), truncated at
/// 1.5 diameters where it has fallen below 2e-8.
fn stamp_particle(
    intensities: &mut [f64],
    width: usize,
    height: usize,
    px: f64,
    py: f64,
    diameter: f64,
) {
    let cutoff = 1.5 * diameter;
    let x0 = libm::floor(px - cutoff).max(0.0) as usize;
    let y0 = libm::floor(py - cutoff).max(0.0) as usize;
    if px + cutoff < 0.0 || py + cutoff < 0.0 {
        return;
    }
    let x1 = (libm::ceil(px + cutoff) as usize).min(width.saturating_sub(1));
    let y1 = (libm::ceil(py + cutoff) as usize).min(height.saturating_sub(1));
    if x0 > x1 || y0 > y1 {
        return;
    }
    let inv = 8.0 / (diameter * diameter);
    for y in y0..=y1 {
        let dy = y as f64 - py;
        let row = &mut intensities[y * width..y * width + width];
        for (x, value) in row.iter_mut().enumerate().take(x1 + 1).skip(x0) {
            let dx = x as f64 - px;
            *value += libm::exp(-(dx * dx + dy * dy) * inv);
        }
    }
}

/// Clamp to the frame's legal intensity range.
fn clamp_unit(values: &mut [f64]) {
    for v in values.iter_mut() {
        *v = v.clamp(0.0, 1.0);
    }
}

/// Render a synthetic exposure pair of `spec` under `config`, with ground
/// truth sampled at the window centers of `grid`.
///
/// Particles are seeded uniformly over the frame plus a margin wide enough
/// that tracers can enter between exposures, so seeding density stays flat
/// at the frame edges. Frame B positions are one Euler step of the flow
/// ahead of frame A. The random source is consumed in a fixed order —
/// placements, frame A noise row-major, frame B noise row-major — so equal
/// seeds give bit-identical pairs.
pub fn render_pair(
    spec: &FlowSpec,
    config: &SynthConfig,
    grid: &WindowGrid,
) -> Result<RenderOutput, SynthError> {
    config.validate()?;
    validate_flow(spec)?;
    if grid.frame_width() != config.width || grid.frame_height() != config.height {
        return Err(SynthError::GridMismatch {
            grid: (grid.frame_width(), grid.frame_height()),
            frame: (config.width, config.height),
        });
    }

    let mut warnings = Vec::new();
    let window_px = (grid.window_size() * grid.window_size()) as f64;
    let expected_per_window = config.particle_density * window_px;
    if expected_per_window < 5.0 {
        warnings.push(SynthWarning::LowSeeding { expected_per_window });
    }

    // seeding margin: worst displacement the flow can produce plus blob
    // support, so frame B never shows a particle the seed pass missed
    let margin = libm::ceil(1.5 * probe_max_displacement_px(spec, config))
        + 2.0 * config.particle_diameter
        + 2.0;
    let ext_w = config.width as f64 + 2.0 * margin;
    let ext_h = config.height as f64 + 2.0 * margin;
    let count = libm::round(config.particle_density * ext_w * ext_h) as usize;

    let mut rng = Rng::from_seed(config.seed);
    let mut positions = Vec::with_capacity(count);
    for _ in 0..count {
        let x = rng.uniform() * ext_w - margin;
        let y = rng.uniform() * ext_h - margin;
        positions.push((x, y));
    }

    let mpp = config.calibration.meters_per_pixel();
    let pixels = config.width * config.height;
    let mut a = vec![0.0f64; pixels];
    let mut b = vec![0.0f64; pixels];
    for &(x, y) in &positions {
        stamp_particle(&mut a, config.width, config.height, x, y, config.particle_diameter);
        let vel = evaluate_flow(spec, (x * mpp, y * mpp));
        let (dx, dy) = displacement_px(vel, &config.calibration);
        stamp_particle(
            &mut b,
            config.width,
            config.height,
            x + dx,
            y + dy,
            config.particle_diameter,
        );
    }
    clamp_unit(&mut a);
    clamp_unit(&mut b);

    if config.intensity_noise_sigma > 0.0 {
        for v in a.iter_mut() {
            *v = (*v + rng.normal() * config.intensity_noise_sigma).clamp(0.0, 1.0);
        }
        for v in b.iter_mut() {
            *v = (*v + rng.normal() * config.intensity_noise_sigma).clamp(0.0, 1.0);
        }
    }

    // clamped to [0,1] above, which is the laundered-entry contract
    let frame_a = Arc::new(Frame::from_laundered(config.width, config.height, a, 0));
    let frame_b = Arc::new(Frame::from_laundered(config.width, config.height, b, 1));
    let pair = FramePair::new(frame_a, frame_b, config.calibration.dt())
        .expect("geometry and dt are valid by construction");

    let nodes = grid.origins().len();
    let mut x_px = Vec::with_capacity(nodes);
    let mut y_px = Vec::with_capacity(nodes);
    let mut u = Vec::with_capacity(nodes);
    let mut v = Vec::with_capacity(nodes);
    for &origin in grid.origins() {
        let (cx, cy) = grid.center_of(origin);
        let (fu, fv) = evaluate_flow(spec, (cx * mpp, cy * mpp));
        x_px.push(cx);
        y_px.push(cy);
        u.push(fu);
        v.push(fv);
    }
    let truth = VectorField::from_parts(
        grid.cols(),
        grid.rows(),
        x_px,
        y_px,
        u,
        v,
        vec![NodeStatus::Valid; nodes],
        vec![f64::INFINITY; nodes],
        config.calibration,
        config.height,
    )
    .expect("truth arrays are grid-shaped by construction");

    Ok(RenderOutput { pair, truth, warnings })
}
