//! End-to-end checks: synthetic pairs rendered from known flows must be
//! recovered by the correlation pipeline within tight error bounds.

use pivlet_core::{
    build_grid, fill_invalid, process_pair, render_pair, validate_median, Calibration, FlowSpec,
    NodeStatus, SynthConfig, VectorField,
};

const MPP: f64 = 0.0000625;
const FPS: f64 = 240.0;

fn base_config(width: usize, height: usize, seed: u64, noise: f64) -> SynthConfig {
    SynthConfig {
        width,
        height,
        particle_density: 0.02,
        particle_diameter: 3.0,
        intensity_noise_sigma: noise,
        seed,
        calibration: Calibration::new(MPP, 1.0 / FPS).unwrap(),
    }
}

/// Velocity (m/s) that advects particles by exactly `px` pixels per frame.
fn velocity_for_displacement(px: f64) -> f64 {
    px * MPP * FPS
}

fn recovered_field(flow: &FlowSpec, config: &SynthConfig, window: usize) -> VectorField {
    let grid = build_grid(config.width, config.height, window, 0.5).unwrap();
    let rendered = render_pair(flow, config, &grid).unwrap();
    let estimates = process_pair(&rendered.pair, &grid).unwrap();
    let field = VectorField::from_estimates(&estimates, &grid, config.calibration).unwrap();
    validate_median(&field, 2.0, 0.1)
}

/// Mean absolute displacement error (px) over usable nodes, plus the
/// usable fraction.
fn mae_and_valid_fraction(field: &VectorField, truth: &VectorField) -> (f64, f64) {
    let cal = field.calibration();
    let px_per_mps = cal.dt() / cal.meters_per_pixel();
    let mut err_sum = 0.0;
    let mut usable = 0usize;
    for i in 0..field.len() {
        if field.status()[i] == NodeStatus::Invalid {
            continue;
        }
        let du = (field.u()[i] - truth.u()[i]) * px_per_mps;
        let dv = (field.v()[i] - truth.v()[i]) * px_per_mps;
        err_sum += (du * du + dv * dv).sqrt();
        usable += 1;
    }
    (err_sum / usable as f64, usable as f64 / field.len() as f64)
}

#[test]
fn uniform_flow_is_recovered_within_a_tenth_of_a_pixel() {
    let flow = FlowSpec::Uniform {
        u: velocity_for_displacement(3.7),
        v: velocity_for_displacement(-2.3),
    };
    let config = base_config(512, 512, 11, 0.0);
    let grid = build_grid(512, 512, 64, 0.5).unwrap();
    let rendered = render_pair(&flow, &config, &grid).unwrap();
    assert!(rendered.warnings.is_empty());

    let field = recovered_field(&flow, &config, 64);
    let (mae, valid) = mae_and_valid_fraction(&field, &rendered.truth);
    assert!(mae <= 0.1, "MAE {mae:.4} px exceeds 0.1 px");
    assert!(valid >= 0.95, "only {:.1}% of windows validated", 100.0 * valid);
}

#[test]
fn ten_pixel_design_displacement_is_recovered() {
    // 0.15 m/s at the design calibration is exactly 10 px between frames
    let flow = FlowSpec::Uniform { u: 0.15, v: 0.0 };
    let config = base_config(512, 512, 29, 0.0);
    let grid = build_grid(512, 512, 128, 0.5).unwrap();
    let rendered = render_pair(&flow, &config, &grid).unwrap();
    let field = recovered_field(&flow, &config, 128);
    let (mae, valid) = mae_and_valid_fraction(&field, &rendered.truth);
    assert!(mae <= 0.1, "MAE {mae:.4} px exceeds 0.1 px");
    assert!(valid >= 0.95);

    // chain check: mean recovered speed within 2% of 0.15 m/s
    let mut speed_sum = 0.0;
    let mut n = 0;
    for i in 0..field.len() {
        if field.status()[i].is_usable() {
            speed_sum += (field.u()[i].powi(2) + field.v()[i].powi(2)).sqrt();
            n += 1;
        }
    }
    let mean_speed = speed_sum / n as f64;
    assert!(
        (mean_speed - 0.15).abs() / 0.15 < 0.02,
        "mean speed {mean_speed:.5} m/s off design 0.15 m/s by more than 2%"
    );
}

#[test]
fn valid_fraction_does_not_rise_with_noise() {
    // small windows and a 4 px shift so luminance noise actually bites
    let flow = FlowSpec::Uniform { u: velocity_for_displacement(4.0), v: 0.0 };
    let mut fractions = Vec::new();
    for &sigma in &[0.0, 0.05, 0.1, 0.2] {
        let config = base_config(512, 512, 7, sigma);
        let field = recovered_field(&flow, &config, 32);
        let usable = field.status().iter().filter(|s| s.is_usable()).count();
        fractions.push(usable as f64 / field.len() as f64);
    }
    for pair in fractions.windows(2) {
        assert!(
            pair[1] <= pair[0] + 1e-12,
            "valid fraction rose with noise: {fractions:?}"
        );
    }
    assert_eq!(fractions[0], 1.0, "noise-free case should validate everywhere");
}

#[test]
fn rotation_field_survives_median_validation_and_filling() {
    // a gentle solid rotation: spatially varying but smooth, so the median
    // test must keep nearly everything and filling changes nothing. The
    // rate is chosen so the displacement change per grid stride (~0.13 px)
    // stays well inside the normalized-residual acceptance band even on
    // border stencils.
    let center = (256.0 * MPP, 256.0 * MPP);
    let flow = FlowSpec::SolidRotation { center, omega_rad_s: 1.0 };
    let config = base_config(512, 512, 3, 0.0);
    let field = recovered_field(&flow, &config, 64);
    let usable = field.status().iter().filter(|s| s.is_usable()).count();
    assert!(usable as f64 / field.len() as f64 >= 0.95);
    let filled = fill_invalid(&field);
    for i in 0..filled.len() {
        assert!(filled.u()[i].is_finite() && filled.v()[i].is_finite());
    }
}
