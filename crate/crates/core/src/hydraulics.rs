//! Open-channel development length and the flume design sweep.
//!
//! The channel must be long enough that flow is fully developed where
//! measurements happen. The ratio of development length L to free-surface
//! level D follows a blended laminar correlation in the Reynolds number,
//!
//! `L/D = [0.631^1.6 + (0.0442·Re)^1.6]^(1/1.6)`,
//!
//! which tends to the constant 0.631 as Re → 0 and to the linear asymptote
//! 0.0442·Re for large Re. [`design_sweep`] evaluates the relation over a
//! grid of candidate velocities and depths to expose the feasible region.
//!
//! Units follow the apparatus drawings: D and L in millimeters, velocity in
//! mm/s, kinematic viscosity in SI m²/s. Reynolds numbers are computed with
//! all lengths converted to meters.

use alloc::vec::Vec;
use core::fmt;

/// Kinematic viscosity of water at 20 °C, m²/s.
///
/// Declared explicitly so every Reynolds number in this crate is
/// reproducible from stated constants.
pub const WATER_KINEMATIC_VISCOSITY_20C: f64 = 1.004e-6;

/// Domain violations in the hydraulic relations.
#[derive(Debug, Clone, PartialEq)]
pub enum HydraulicsError {
    /// Reynolds number below zero has no physical meaning here.
    NegativeReynolds { re: f64 },
    /// A quantity that must be strictly positive was not.
    NonPositive { name: &'static str, value: f64 },
    /// Supplied Re disagrees with Re recomputed from (v, D, ν).
    InconsistentDesign { supplied: f64, computed: f64 },
    /// Sweep called with nothing to sweep.
    EmptyVelocities,
    /// Depth range with min not below max.
    BadDepthRange { min: f64, max: f64 },
}

impl fmt::Display for HydraulicsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HydraulicsError::NegativeReynolds { re } => {
                write!(f, "Reynolds number must be non-negative, got {re}")
            }
            HydraulicsError::NonPositive { name, value } => {
                write!(f, "{name} must be strictly positive, got {value}")
            }
            HydraulicsError::InconsistentDesign { supplied, computed } => {
                write!(
                    f,
                    "supplied Re {supplied} disagrees with v·D/ν = {computed} beyond 0.5%"
                )
            }
            HydraulicsError::EmptyVelocities => write!(f, "velocity list is empty"),
            HydraulicsError::BadDepthRange { min, max } => {
                write!(f, "depth range needs min < max, got {min}..{max}")
            }
        }
    }
}

impl core::error::Error for HydraulicsError {}

/// Reynolds number for velocity in mm/s, depth in mm, viscosity in m²/s.
fn reynolds(velocity_mmps: f64, depth_mm: f64, viscosity: f64) -> f64 {
    // (v/1000 m/s) · (D/1000 m) / ν
    (velocity_mmps * depth_mm) / (1.0e6 * viscosity)
}

/// A self-consistent operating point of the channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelDesign {
    reynolds: f64,
    free_surface_level_mm: f64,
    kinematic_viscosity: f64,
    velocity_mmps: f64,
}

impl ChannelDesign {
    /// Build a design from the minimal set (v, D, ν); Re is derived.
    pub fn new(
        velocity_mmps: f64,
        free_surface_level_mm: f64,
        kinematic_viscosity: f64,
    ) -> Result<Self, HydraulicsError> {
        check_positive("velocity", velocity_mmps)?;
        check_positive("free_surface_level", free_surface_level_mm)?;
        check_positive("kinematic_viscosity", kinematic_viscosity)?;
        Ok(ChannelDesign {
            reynolds: reynolds(velocity_mmps, free_surface_level_mm, kinematic_viscosity),
            free_surface_level_mm,
            kinematic_viscosity,
            velocity_mmps,
        })
    }

    /// Build a design with an explicitly supplied Re, rejecting it when it
    /// disagrees with v·D/ν by more than 0.5%.
    pub fn with_reynolds(
        reynolds_supplied: f64,
        velocity_mmps: f64,
        free_surface_level_mm: f64,
        kinematic_viscosity: f64,
    ) -> Result<Self, HydraulicsError> {
        let design = Self::new(velocity_mmps, free_surface_level_mm, kinematic_viscosity)?;
        check_positive("reynolds", reynolds_supplied)?;
        let computed = design.reynolds;
        if (reynolds_supplied - computed).abs() > 0.005 * computed {
            return Err(HydraulicsError::InconsistentDesign {
                supplied: reynolds_supplied,
                computed,
            });
        }
        Ok(ChannelDesign { reynolds: reynolds_supplied, ..design })
    }

    pub fn reynolds(&self) -> f64 {
        self.reynolds
    }

    pub fn free_surface_level_mm(&self) -> f64 {
        self.free_surface_level_mm
    }

    pub fn kinematic_viscosity(&self) -> f64 {
        self.kinematic_viscosity
    }

    pub fn velocity_mmps(&self) -> f64 {
        self.velocity_mmps
    }

    /// Development length L in mm for this operating point.
    pub fn development_length_mm(&self) -> Result<f64, HydraulicsError> {
        Ok(self.free_surface_level_mm * development_ratio(self.reynolds)?)
    }
}

fn check_positive(name: &'static str, value: f64) -> Result<(), HydraulicsError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(HydraulicsError::NonPositive { name, value })
    }
}

/// Development length over free-surface level as a function of Re:
/// `[0.631^1.6 + (0.0442·Re)^1.6]^(1/1.6)`.
///
/// Strictly increasing and continuous; 0.631 at Re = 0 and asymptotically
/// 0.0442·Re for large Re.
pub fn development_ratio(re: f64) -> Result<f64, HydraulicsError> {
    if re.is_nan() || re < 0.0 {
        return Err(HydraulicsError::NegativeReynolds { re });
    }
    if re == 0.0 {
        // degenerate term: [0.631^1.6]^(1/1.6) exactly
        return Ok(0.631);
    }
    const P: f64 = 1.6;
    let laminar_floor = libm::pow(0.631, P);
    let asymptote = libm::pow(0.0442 * re, P);
    Ok(libm::pow(laminar_floor + asymptote, 1.0 / P))
}

/// One evaluated candidate of the design sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignPoint {
    /// Free-stream velocity, mm/s.
    pub velocity_mmps: f64,
    /// Free surface level D, mm.
    pub d_mm: f64,
    /// Reynolds number v·D/ν.
    pub reynolds: f64,
    /// Development length L = D·(L/D), mm.
    pub l_mm: f64,
}

/// Evaluate the development-length relation over velocities × depths.
///
/// Depths run from `depth_range.0` to `depth_range.1` inclusive in `step_mm`
/// increments; rows are grouped by velocity (in the order given) with depths
/// ascending, matching the family-of-curves presentation.
pub fn design_sweep(
    velocities_mmps: &[f64],
    depth_range_mm: (f64, f64),
    viscosity: f64,
    step_mm: f64,
) -> Result<Vec<DesignPoint>, HydraulicsError> {
    if velocities_mmps.is_empty() {
        return Err(HydraulicsError::EmptyVelocities);
    }
    for &v in velocities_mmps {
        check_positive("velocity", v)?;
    }
    check_positive("kinematic_viscosity", viscosity)?;
    check_positive("step", step_mm)?;
    let (min, max) = depth_range_mm;
    check_positive("depth", min)?;
    if min >= max || !max.is_finite() {
        return Err(HydraulicsError::BadDepthRange { min, max });
    }
    // inclusive count; the epsilon keeps 10..100 step 10 at ten depths
    // despite accumulated rounding
    let count = libm::floor((max - min) / step_mm + 1e-9) as usize + 1;
    let mut points = Vec::with_capacity(velocities_mmps.len() * count);
    for &velocity in velocities_mmps {
        for i in 0..count {
            let d_mm = min + i as f64 * step_mm;
            let re = reynolds(velocity, d_mm, viscosity);
            let ratio = development_ratio(re)?;
            points.push(DesignPoint { velocity_mmps: velocity, d_mm, reynolds: re, l_mm: d_mm * ratio });
        }
    }
    Ok(points)
}
