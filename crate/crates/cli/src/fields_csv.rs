//! Vector-field CSV interchange.
//!
//! Format (bit-exact header, row-major node order):
//!
//! ```text
//! x_px,y_px,x_m,y_m,u_mps,v_mps,valid,snr
//! ```
//!
//! Floats carry 9 significant digits (`{:.8e}`); the `valid` column is
//! `1` (measured), `0` (invalid), or `2` (interpolated); unbounded SNR is
//! written as `inf`. Output is deterministic byte-for-byte for identical
//! fields.
//!
//! Reading infers the calibration from the stored columns: meters per
//! pixel from `x_m / x_px` and the frame height from the y-flip identity
//! `y_m = (H − 1 − y_px) · mpp`. The time step is not recoverable from a
//! field CSV (velocities are already in m/s), so reloaded fields carry
//! dt = 1 s; every consumer of a reloaded field uses velocities only.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use pivlet_core::{Calibration, NodeStatus, VectorField};

pub const FIELD_HEADER: &str = "x_px,y_px,x_m,y_m,u_mps,v_mps,valid,snr";

fn fmt_float(v: f64) -> String {
    if v.is_infinite() {
        String::from(if v > 0.0 { "inf" } else { "-inf" })
    } else {
        format!("{v:.8e}")
    }
}

fn status_code(status: NodeStatus) -> u8 {
    match status {
        NodeStatus::Valid => 1,
        NodeStatus::Invalid => 0,
        NodeStatus::Interpolated => 2,
    }
}

/// Serialize a field to CSV text.
pub fn field_to_csv(field: &VectorField) -> String {
    let mut out = String::with_capacity(64 * (field.len() + 1));
    out.push_str(FIELD_HEADER);
    out.push('\n');
    for i in 0..field.len() {
        out.push_str(&fmt_float(field.x_px()[i]));
        out.push(',');
        out.push_str(&fmt_float(field.y_px()[i]));
        out.push(',');
        out.push_str(&fmt_float(field.x_m(i)));
        out.push(',');
        out.push_str(&fmt_float(field.y_m(i)));
        out.push(',');
        out.push_str(&fmt_float(field.u()[i]));
        out.push(',');
        out.push_str(&fmt_float(field.v()[i]));
        out.push(',');
        out.push_str(&format!("{}", status_code(field.status()[i])));
        out.push(',');
        out.push_str(&fmt_float(field.snr()[i]));
        out.push('\n');
    }
    out
}

/// Write a field CSV to disk.
pub fn write_field(field: &VectorField, path: &Path) -> Result<()> {
    fs::write(path, field_to_csv(field))
        .with_context(|| format!("cannot write field CSV {}", path.display()))
}

fn parse_float(token: &str, line: usize, column: &str) -> Result<f64> {
    token
        .parse::<f64>()
        .ok()
        .filter(|v| !v.is_nan())
        .with_context(|| format!("line {line}: unreadable {column} value '{token}'"))
}

/// Read a field CSV back into a [`VectorField`].
pub fn read_field(path: &Path) -> Result<VectorField> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read field CSV {}", path.display()))?;
    parse_field(&text).with_context(|| format!("in field CSV {}", path.display()))
}

fn parse_field(text: &str) -> Result<VectorField> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header != FIELD_HEADER {
        bail!("line 1: expected header '{FIELD_HEADER}', got '{header}'");
    }

    let mut x_px = Vec::new();
    let mut y_px = Vec::new();
    let mut x_m = Vec::new();
    let mut y_m = Vec::new();
    let mut u = Vec::new();
    let mut v = Vec::new();
    let mut status = Vec::new();
    let mut snr = Vec::new();
    for (index, line) in lines.enumerate() {
        let line_no = index + 2;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            bail!("line {line_no}: expected 8 fields, got {}", fields.len());
        }
        x_px.push(parse_float(fields[0], line_no, "x_px")?);
        y_px.push(parse_float(fields[1], line_no, "y_px")?);
        x_m.push(parse_float(fields[2], line_no, "x_m")?);
        y_m.push(parse_float(fields[3], line_no, "y_m")?);
        u.push(parse_float(fields[4], line_no, "u_mps")?);
        v.push(parse_float(fields[5], line_no, "v_mps")?);
        status.push(match fields[6] {
            "1" => NodeStatus::Valid,
            "0" => NodeStatus::Invalid,
            "2" => NodeStatus::Interpolated,
            other => bail!("line {line_no}: unreadable valid flag '{other}'"),
        });
        snr.push(parse_float(fields[7], line_no, "snr")?);
    }
    if x_px.is_empty() {
        bail!("no data rows");
    }

    // row-major order: x resets at each row boundary
    let cols = x_px
        .windows(2)
        .position(|w| w[1] < w[0])
        .map(|i| i + 1)
        .unwrap_or(x_px.len());
    if x_px.len() % cols != 0 {
        bail!("node count {} does not tile into rows of {cols}", x_px.len());
    }
    let rows = x_px.len() / cols;

    // x_m = x_px · mpp at any node with x_px > 0 (window centers always are)
    let anchor = x_px
        .iter()
        .position(|&x| x > 0.0)
        .context("cannot infer calibration: all x_px are zero")?;
    let mpp = x_m[anchor] / x_px[anchor];
    if !(mpp > 0.0 && mpp.is_finite()) {
        bail!("cannot infer calibration: x_m/x_px gives {mpp}");
    }
    // y_m = (H − 1 − y_px) · mpp  →  H = y_m/mpp + y_px + 1
    let frame_height = (y_m[0] / mpp + y_px[0] + 1.0).round();
    if !(frame_height > 0.0 && frame_height.is_finite()) {
        bail!("cannot infer frame height from y_m column");
    }
    let calibration = Calibration::new(mpp, 1.0).expect("positive mpp");

    VectorField::from_parts(
        cols,
        rows,
        x_px,
        y_px,
        u,
        v,
        status,
        snr,
        calibration,
        frame_height as usize,
    )
    .map_err(|e| anyhow::anyhow!("inconsistent field data: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use pivlet_core::{build_grid, Calibration, DisplacementEstimate};

    fn sample_field() -> VectorField {
        let grid = build_grid(256, 192, 64, 0.5).unwrap();
        let cal = Calibration::new(0.0000625, 1.0 / 60.0).unwrap();
        let estimates: Vec<DisplacementEstimate> = (0..grid.cols() * grid.rows())
            .map(|i| {
                if i == 3 {
                    DisplacementEstimate::invalid()
                } else {
                    DisplacementEstimate {
                        dx: 8.0 + i as f64 * 0.25,
                        dy: -1.5,
                        peak_value: 0.9,
                        snr: if i == 0 { f64::INFINITY } else { 2.5 },
                        valid: true,
                    }
                }
            })
            .collect();
        VectorField::from_estimates(&estimates, &grid, cal).unwrap()
    }

    #[test]
    fn header_is_bit_exact_and_rows_match_nodes() {
        let field = sample_field();
        let csv = field_to_csv(&field);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "x_px,y_px,x_m,y_m,u_mps,v_mps,valid,snr");
        assert_eq!(lines.count(), field.len());
    }

    #[test]
    fn known_velocity_serializes_at_nine_significant_digits() {
        // dx = 8 px at 0.0000625 m/px, dt = 1/60 s → exactly 0.03 m/s
        let field = sample_field();
        let csv = field_to_csv(&field);
        let first_row = csv.lines().nth(1).unwrap();
        let u_field = first_row.split(',').nth(4).unwrap();
        assert_eq!(u_field, "3.00000000e-2");
        let snr_field = first_row.split(',').nth(7).unwrap();
        assert_eq!(snr_field, "inf");
    }

    #[test]
    fn write_read_round_trip_preserves_all_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("field.csv");
        let field = sample_field();
        write_field(&field, &path).unwrap();
        let back = read_field(&path).unwrap();

        assert_eq!(back.cols(), field.cols());
        assert_eq!(back.rows(), field.rows());
        assert_eq!(back.frame_height_px(), field.frame_height_px());
        let rel = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0);
        assert!(rel(
            back.calibration().meters_per_pixel(),
            field.calibration().meters_per_pixel()
        ));
        for i in 0..field.len() {
            assert_eq!(back.status()[i], field.status()[i]);
            assert!(rel(back.x_px()[i], field.x_px()[i]));
            assert!(rel(back.u()[i], field.u()[i]));
            assert!(rel(back.v()[i], field.v()[i]));
            assert_eq!(back.snr()[i].is_infinite(), field.snr()[i].is_infinite());
            if field.snr()[i].is_finite() {
                assert!(rel(back.snr()[i], field.snr()[i]));
            }
        }
    }

    #[test]
    fn identical_fields_serialize_to_identical_bytes() {
        let a = field_to_csv(&sample_field());
        let b = field_to_csv(&sample_field());
        assert_eq!(a, b);
    }

    #[test]
    fn malformed_rows_are_reported_with_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        let good = field_to_csv(&sample_field());
        let mut lines: Vec<&str> = good.lines().collect();
        lines[2] = "1,2,3";
        fs::write(&path, lines.join("\n")).unwrap();
        let err = read_field(&path).unwrap_err();
        let msg = format!("{err:#}");
        assert!(msg.contains("line 3"), "{msg}");
        assert!(msg.contains("bad.csv"), "{msg}");
    }

    #[test]
    fn wrong_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.csv");
        fs::write(&path, "x,y\n1,2\n").unwrap();
        let err = read_field(&path).unwrap_err();
        assert!(format!("{err:#}").contains("expected header"));
    }
}
