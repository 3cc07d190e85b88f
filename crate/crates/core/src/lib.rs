//! Core kernels for a particle-image-velocimetry (PIV) toolkit.
//!
//! The crate estimates planar velocity fields from pairs of seeded-flow
//! images: each frame is tiled into square interrogation windows, the
//! displacement of the particle pattern between the two exposures is found
//! by normalized cross-correlation, and the correlation peak is refined to
//! sub-pixel precision. Displacements become velocities through a
//! meters-per-pixel / time-step calibration.
//!
//! Modules:
//! - [`frame`]: grayscale frame and frame-pair types, pairing, contrast
//!   normalization.
//! - [`fft`]: power-of-two FFT used by the correlator.
//! - [`correlation`]: interrogation grids, correlation maps, sub-pixel peak
//!   refinement.
//! - [`field`]: calibrated vector fields, outlier validation, hole filling.
//! - [`metrics`]: line-profile extraction and deviation statistics against
//!   reference profiles.
//! - [`hydraulics`]: open-channel development-length relation and design
//!   sweeps.
//! - [`synth`]: synthetic particle-image rendering from analytic flows, the
//!   verification oracle for the rest of the pipeline.
//! - [`rng`]: the deterministic random generator behind [`synth`].
//!
//! The crate is `no_std` (with `alloc`) so the kernels stay free of
//! platform I/O; file formats and the command-line front end live in the
//! companion `pivlet-cli` crate.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod correlation;
pub mod fft;
pub mod field;
pub mod frame;
pub mod hydraulics;
pub mod metrics;
pub mod rng;
pub mod synth;

pub use correlation::{
    build_grid, correlate_window, process_pair, subpixel_peak, CorrelationMap, Correlator,
    DisplacementEstimate, WindowGrid,
};
pub use field::{fill_invalid, to_velocity, validate_median, Calibration, NodeStatus, VectorField};
pub use frame::{make_pairs, normalize_frame, Frame, FramePair};
pub use hydraulics::{
    design_sweep, development_ratio, ChannelDesign, DesignPoint, WATER_KINEMATIC_VISCOSITY_20C,
};
pub use metrics::{
    compare, compare_pooled, normalize_ordinate, sample_line, DeviationReport, LineSegment,
    Profile,
};
pub use synth::{evaluate_flow, render_pair, FlowSpec, RenderOutput, SynthConfig};
