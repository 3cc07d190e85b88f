//! Calibrated velocity fields assembled from window displacement estimates.
//!
//! A [`VectorField`] pins one velocity vector to each interrogation-window
//! center, in physical units. Conversion is direct: velocity is meters per
//! pixel times pixel displacement over the exposure interval. Post-processing
//! (outlier rejection, hole filling) never mutates a field in place; each
//! pass returns a fresh field so intermediate states stay inspectable.
//!
//! Coordinates: x is streamwise and y transverse, with pixel y growing
//! downward from the frame's top-left corner. Meter-space y is flipped to
//! grow physically upward, so plots read like the flow, not like the sensor.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::correlation::{DisplacementEstimate, WindowGrid};

/// Validation failures when assembling calibration or field data.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldError {
    /// A calibration constant was zero, negative, or non-finite.
    BadCalibration { name: &'static str, value: f64 },
    /// Node arrays disagree on cardinality.
    LengthMismatch { what: String },
    /// Estimate count does not match the grid it claims to cover.
    GridMismatch { estimates: usize, nodes: usize },
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldError::BadCalibration { name, value } => {
                write!(f, "calibration {name} must be strictly positive, got {value}")
            }
            FieldError::LengthMismatch { what } => {
                write!(f, "field arrays disagree on node count: {what}")
            }
            FieldError::GridMismatch { estimates, nodes } => {
                write!(f, "{estimates} estimates cannot fill a {nodes}-node grid")
            }
        }
    }
}

impl core::error::Error for FieldError {}

/// Physical scaling constants: image scale and exposure interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    meters_per_pixel: f64,
    dt: f64,
}

impl Calibration {
    /// Both constants must be strictly positive and finite.
    pub fn new(meters_per_pixel: f64, dt: f64) -> Result<Self, FieldError> {
        if !(meters_per_pixel > 0.0 && meters_per_pixel.is_finite()) {
            return Err(FieldError::BadCalibration {
                name: "meters_per_pixel",
                value: meters_per_pixel,
            });
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(FieldError::BadCalibration { name: "dt", value: dt });
        }
        Ok(Calibration { meters_per_pixel, dt })
    }

    pub fn meters_per_pixel(&self) -> f64 {
        self.meters_per_pixel
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }
}

/// Per-node bookkeeping: how the vector stored there came to be.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeStatus {
    /// Measured directly and still trusted.
    Valid,
    /// No usable measurement; u and v are zero placeholders.
    Invalid,
    /// Replaced by the mean of neighboring measurements.
    Interpolated,
}

impl NodeStatus {
    /// Whether the node carries usable velocity data (measured or filled).
    pub fn is_usable(&self) -> bool {
        !matches!(self, NodeStatus::Invalid)
    }
}

/// Convert one displacement estimate to velocity components in m/s.
///
/// Velocity is `meters_per_pixel × displacement / dt` per component. An
/// invalid estimate maps to `(0.0, 0.0)`; no NaN can escape.
pub fn to_velocity(estimate: &DisplacementEstimate, cal: &Calibration) -> (f64, f64) {
    if !estimate.valid {
        return (0.0, 0.0);
    }
    let scale = cal.meters_per_pixel / cal.dt;
    (scale * estimate.dx, scale * estimate.dy)
}

/// A calibrated velocity field on a rectangular grid of window centers.
///
/// Arrays are node-parallel in row-major grid order. Invalid nodes always
/// hold `u = v = 0.0` — consumers can sum without filtering NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    cols: usize,
    rows: usize,
    x_px: Vec<f64>,
    y_px: Vec<f64>,
    u: Vec<f64>,
    v: Vec<f64>,
    status: Vec<NodeStatus>,
    snr: Vec<f64>,
    calibration: Calibration,
    frame_height_px: usize,
}

impl VectorField {
    /// Assemble a field from the estimates produced over `grid`.
    ///
    /// Estimates must be in the grid's row-major order (as returned by the
    /// correlation pass). Invalid estimates become invalid nodes.
    pub fn from_estimates(
        estimates: &[DisplacementEstimate],
        grid: &WindowGrid,
        calibration: Calibration,
    ) -> Result<Self, FieldError> {
        let nodes = grid.origins().len();
        if estimates.len() != nodes {
            return Err(FieldError::GridMismatch { estimates: estimates.len(), nodes });
        }
        let mut x_px = Vec::with_capacity(nodes);
        let mut y_px = Vec::with_capacity(nodes);
        let mut u = Vec::with_capacity(nodes);
        let mut v = Vec::with_capacity(nodes);
        let mut status = Vec::with_capacity(nodes);
        let mut snr = Vec::with_capacity(nodes);
        for (estimate, &origin) in estimates.iter().zip(grid.origins()) {
            let (cx, cy) = grid.center_of(origin);
            x_px.push(cx);
            y_px.push(cy);
            let (vu, vv) = to_velocity(estimate, &calibration);
            u.push(vu);
            v.push(vv);
            status.push(if estimate.valid { NodeStatus::Valid } else { NodeStatus::Invalid });
            snr.push(estimate.snr);
        }
        Ok(VectorField {
            cols: grid.cols(),
            rows: grid.rows(),
            x_px,
            y_px,
            u,
            v,
            status,
            snr,
            calibration,
            frame_height_px: grid.frame_height(),
        })
    }

    /// Assemble a field directly from node arrays (deserialization, pair
    /// averaging). All arrays must hold `cols × rows` entries and invalid
    /// nodes must already carry zero velocity.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        cols: usize,
        rows: usize,
        x_px: Vec<f64>,
        y_px: Vec<f64>,
        u: Vec<f64>,
        v: Vec<f64>,
        status: Vec<NodeStatus>,
        snr: Vec<f64>,
        calibration: Calibration,
        frame_height_px: usize,
    ) -> Result<Self, FieldError> {
        let nodes = cols * rows;
        let lengths =
            [x_px.len(), y_px.len(), u.len(), v.len(), status.len(), snr.len()];
        if lengths.iter().any(|&len| len != nodes) {
            return Err(FieldError::LengthMismatch {
                what: alloc::format!("expected {nodes} nodes, got {lengths:?}"),
            });
        }
        for i in 0..nodes {
            if !u[i].is_finite() || !v[i].is_finite() {
                return Err(FieldError::LengthMismatch {
                    what: alloc::format!("non-finite velocity at node {i}"),
                });
            }
            if status[i] == NodeStatus::Invalid && (u[i] != 0.0 || v[i] != 0.0) {
                return Err(FieldError::LengthMismatch {
                    what: alloc::format!("invalid node {i} carries nonzero velocity"),
                });
            }
        }
        Ok(VectorField {
            cols,
            rows,
            x_px,
            y_px,
            u,
            v,
            status,
            snr,
            calibration,
            frame_height_px,
        })
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Total node count (`cols × rows`).
    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn x_px(&self) -> &[f64] {
        &self.x_px
    }

    pub fn y_px(&self) -> &[f64] {
        &self.y_px
    }

    /// Streamwise velocity per node, m/s.
    pub fn u(&self) -> &[f64] {
        &self.u
    }

    /// Transverse velocity per node, m/s.
    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn status(&self) -> &[NodeStatus] {
        &self.status
    }

    pub fn snr(&self) -> &[f64] {
        &self.snr
    }

    pub fn calibration(&self) -> &Calibration {
        &self.calibration
    }

    pub fn frame_height_px(&self) -> usize {
        self.frame_height_px
    }

    /// Meter-space x of a node: pixels scaled by the calibration.
    pub fn x_m(&self, node: usize) -> f64 {
        self.x_px[node] * self.calibration.meters_per_pixel
    }

    /// Meter-space y of a node, flipped so it grows physically upward.
    pub fn y_m(&self, node: usize) -> f64 {
        (self.frame_height_px as f64 - 1.0 - self.y_px[node]) * self.calibration.meters_per_pixel
    }

    /// Fraction of nodes carrying usable data (measured or interpolated).
    pub fn usable_fraction(&self) -> f64 {
        if self.status.is_empty() {
            return 0.0;
        }
        let usable = self.status.iter().filter(|s| s.is_usable()).count();
        usable as f64 / self.status.len() as f64
    }

    fn node_index(&self, col: usize, row: usize) -> usize {
        row * self.cols + col
    }

    /// Indices of in-bounds 8-neighbors of the node at (col, row).
    fn neighbors(&self, col: usize, row: usize, out: &mut Vec<usize>) {
        out.clear();
        let c0 = col.saturating_sub(1);
        let c1 = (col + 1).min(self.cols.saturating_sub(1));
        let r0 = row.saturating_sub(1);
        let r1 = (row + 1).min(self.rows.saturating_sub(1));
        for r in r0..=r1 {
            for c in c0..=c1 {
                if (c, r) != (col, row) {
                    out.push(self.node_index(c, r));
                }
            }
        }
    }
}

/// Median of a scratch buffer; even counts average the middle pair.
/// Values must be finite (field invariant). Empty input is a caller bug.
fn median(values: &mut [f64]) -> f64 {
    debug_assert!(!values.is_empty());
    values.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite by invariant"));
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

/// Normalized residual of one displacement component against its
/// neighborhood: `|d − median| / (median of neighbor residuals + epsilon)`.
fn component_residual(d: f64, neighbor_values: &[f64], epsilon: f64, scratch: &mut Vec<f64>) -> f64 {
    scratch.clear();
    scratch.extend_from_slice(neighbor_values);
    let med = median(scratch);
    scratch.clear();
    for &n in neighbor_values {
        scratch.push((n - med).abs());
    }
    let spread = median(scratch);
    (d - med).abs() / (spread + epsilon)
}

/// Reject vectors that disagree with their neighborhood (normalized median
/// test). Sweeps repeat until no further node fails, so a second application
/// is a no-op by construction.
///
/// Per sweep, each usable node's displacement is compared per component
/// against the median of its usable 8-neighbors; the residual is normalized
/// by the median of the neighbors' own residuals plus `epsilon_px`, and the
/// node is invalidated when either component exceeds `threshold`. Residuals
/// are computed in pixel units, so `epsilon_px` keeps its meaning regardless
/// of calibration. Nodes without usable neighbors are left untouched.
pub fn validate_median(field: &VectorField, threshold: f64, epsilon_px: f64) -> VectorField {
    assert!(threshold > 0.0, "threshold must be positive");
    assert!(epsilon_px >= 0.0, "epsilon must be non-negative");
    let mut out = field.clone();
    // velocity → pixel displacement, so epsilon compares like with like
    let px_per_mps = out.calibration.dt / out.calibration.meters_per_pixel;
    let mut neighbor_idx = Vec::with_capacity(8);
    let mut du = Vec::with_capacity(8);
    let mut dv = Vec::with_capacity(8);
    let mut scratch = Vec::with_capacity(8);
    let mut failed: Vec<usize> = Vec::new();
    loop {
        failed.clear();
        for row in 0..out.rows {
            for col in 0..out.cols {
                let node = out.node_index(col, row);
                if !out.status[node].is_usable() {
                    continue;
                }
                out.neighbors(col, row, &mut neighbor_idx);
                du.clear();
                dv.clear();
                for &n in &neighbor_idx {
                    if out.status[n].is_usable() {
                        du.push(out.u[n] * px_per_mps);
                        dv.push(out.v[n] * px_per_mps);
                    }
                }
                if du.is_empty() {
                    continue;
                }
                let ru =
                    component_residual(out.u[node] * px_per_mps, &du, epsilon_px, &mut scratch);
                let rv =
                    component_residual(out.v[node] * px_per_mps, &dv, epsilon_px, &mut scratch);
                if ru.max(rv) > threshold {
                    failed.push(node);
                }
            }
        }
        if failed.is_empty() {
            return out;
        }
        // apply the sweep's verdicts all at once, then re-examine
        for &node in &failed {
            out.status[node] = NodeStatus::Invalid;
            out.u[node] = 0.0;
            out.v[node] = 0.0;
        }
    }
}

/// Fill invalid nodes with the mean of their usable 8-neighbors.
///
/// A node is filled only when at least three usable neighbors exist; filled
/// nodes are flagged [`NodeStatus::Interpolated`]. Passes repeat (each pass
/// reading the previous pass's state) until nothing more can be filled, so
/// interpolation propagates inward from the rim of an invalid region.
pub fn fill_invalid(field: &VectorField) -> VectorField {
    let mut out = field.clone();
    let mut neighbor_idx = Vec::with_capacity(8);
    let mut fills: Vec<(usize, f64, f64)> = Vec::new();
    loop {
        fills.clear();
        for row in 0..out.rows {
            for col in 0..out.cols {
                let node = out.node_index(col, row);
                if out.status[node] != NodeStatus::Invalid {
                    continue;
                }
                out.neighbors(col, row, &mut neighbor_idx);
                let mut count = 0usize;
                let (mut sum_u, mut sum_v) = (0.0, 0.0);
                for &n in &neighbor_idx {
                    if out.status[n].is_usable() {
                        count += 1;
                        sum_u += out.u[n];
                        sum_v += out.v[n];
                    }
                }
                if count >= 3 {
                    fills.push((node, sum_u / count as f64, sum_v / count as f64));
                }
            }
        }
        if fills.is_empty() {
            return out;
        }
        for &(node, u, v) in &fills {
            out.status[node] = NodeStatus::Interpolated;
            out.u[node] = u;
            out.v[node] = v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlation::build_grid;
    use alloc::vec;
    use proptest::prelude::*;

    fn cal(mpp: f64, dt: f64) -> Calibration {
        Calibration::new(mpp, dt).unwrap()
    }

    /// Identity calibration: velocities equal pixel displacements.
    fn unit_cal() -> Calibration {
        cal(1.0, 1.0)
    }

    fn estimate(dx: f64, dy: f64) -> DisplacementEstimate {
        DisplacementEstimate { dx, dy, peak_value: 1.0, snr: 5.0, valid: true }
    }

    /// Build a cols×rows field with given u values (v = 0) at unit scale.
    fn field_from_u(cols: usize, rows: usize, u: &[f64]) -> VectorField {
        assert_eq!(u.len(), cols * rows);
        let n = u.len();
        VectorField::from_parts(
            cols,
            rows,
            (0..n).map(|i| (i % cols) as f64).collect(),
            (0..n).map(|i| (i / cols) as f64).collect(),
            u.to_vec(),
            vec![0.0; n],
            vec![NodeStatus::Valid; n],
            vec![10.0; n],
            unit_cal(),
            rows,
        )
        .unwrap()
    }

    #[test]
    fn calibration_rejects_non_positive_values() {
        assert!(Calibration::new(0.0, 1.0).is_err());
        assert!(Calibration::new(-1e-5, 1.0).is_err());
        assert!(Calibration::new(1e-5, 0.0).is_err());
        assert!(Calibration::new(f64::NAN, 1.0).is_err());
        assert!(Calibration::new(1e-5, f64::INFINITY).is_err());
        assert!(Calibration::new(0.0000625, 1.0 / 240.0).is_ok());
    }

    #[test]
    fn zero_displacement_maps_to_zero_velocity() {
        let (u, v) = to_velocity(&estimate(0.0, 0.0), &cal(0.0000625, 1.0 / 60.0));
        assert_eq!((u, v), (0.0, 0.0));
    }

    #[test]
    fn eight_pixels_at_sixty_fps_is_three_centimeters_per_second() {
        let (u, v) = to_velocity(&estimate(8.0, 0.0), &cal(0.0000625, 1.0 / 60.0));
        assert!((u - 0.03).abs() < 1e-12, "u = {u}");
        assert_eq!(v, 0.0);
    }

    #[test]
    fn forty_pixels_at_sixty_fps_is_the_design_free_stream() {
        // 40 px × 0.0000625 m/px × 60 Hz = 0.15 m/s
        let (u, _) = to_velocity(&estimate(40.0, 0.0), &cal(0.0000625, 1.0 / 60.0));
        assert!((u - 0.15).abs() < 1e-12, "u = {u}");
    }

    #[test]
    fn invalid_estimate_maps_to_zero_not_nan() {
        let mut bad = estimate(f64::NAN, 3.0);
        bad.valid = false;
        let (u, v) = to_velocity(&bad, &cal(1e-5, 0.01));
        assert_eq!((u, v), (0.0, 0.0));
    }

    #[test]
    fn field_assembles_from_grid_estimates() {
        let grid = build_grid(96, 64, 32, 0.5).unwrap();
        let estimates: Vec<_> = (0..grid.origins().len())
            .map(|i| if i == 2 { DisplacementEstimate::invalid() } else { estimate(4.0, -2.0) })
            .collect();
        let field =
            VectorField::from_estimates(&estimates, &grid, cal(0.0000625, 1.0 / 240.0)).unwrap();
        assert_eq!(field.len(), grid.origins().len());
        assert_eq!((field.cols(), field.rows()), (grid.cols(), grid.rows()));
        assert_eq!(field.status()[2], NodeStatus::Invalid);
        assert_eq!((field.u()[2], field.v()[2]), (0.0, 0.0));
        let expect_u = 0.0000625 * 4.0 * 240.0;
        assert!((field.u()[0] - expect_u).abs() < 1e-12);
        assert!(field.v()[0] < 0.0);
        // centers of the first grid window
        let (cx, cy) = grid.center_of(grid.origins()[0]);
        assert_eq!(field.x_px()[0], cx);
        assert_eq!(field.y_px()[0], cy);
    }

    #[test]
    fn estimate_count_must_match_grid() {
        let grid = build_grid(96, 64, 32, 0.0).unwrap();
        let err = VectorField::from_estimates(&[estimate(1.0, 1.0)], &grid, unit_cal());
        assert!(matches!(err, Err(FieldError::GridMismatch { .. })));
    }

    #[test]
    fn meter_space_y_points_upward() {
        // two nodes, the lower one (larger y_px) must get the smaller y_m
        let field = VectorField::from_parts(
            1,
            2,
            vec![8.0, 8.0],
            vec![8.0, 24.0],
            vec![0.0, 0.0],
            vec![0.0, 0.0],
            vec![NodeStatus::Valid; 2],
            vec![1.0; 2],
            cal(0.001, 0.01),
            32,
        )
        .unwrap();
        assert!(field.y_m(0) > field.y_m(1));
        assert!((field.y_m(0) - (31.0 - 8.0) * 0.001).abs() < 1e-12);
        assert!((field.x_m(0) - 0.008).abs() < 1e-12);
    }

    #[test]
    fn uniform_field_survives_median_test_untouched() {
        let field = field_from_u(5, 4, &[3.25; 20]);
        let checked = validate_median(&field, 2.0, 0.1);
        assert_eq!(checked, field);
    }

    #[test]
    fn single_outlier_is_exactly_what_gets_invalidated() {
        // uniform 2 px with the center node pushed 10 px away
        let mut u = vec![2.0; 25];
        u[12] = 12.0;
        let checked = validate_median(&field_from_u(5, 5, &u), 2.0, 0.1);
        for (i, status) in checked.status().iter().enumerate() {
            if i == 12 {
                assert_eq!(*status, NodeStatus::Invalid);
                assert_eq!(checked.u()[i], 0.0);
            } else {
                assert_eq!(*status, NodeStatus::Valid, "node {i} wrongly invalidated");
                assert_eq!(checked.u()[i], 2.0);
            }
        }
    }

    #[test]
    fn median_test_hand_derived_3x3() {
        // center = 50 among a 1..9 ramp: neighbor median 5, residual spread
        // 2.5 → r = 45/2.6 ≈ 17.3 kills it; every other node scores < 2 in
        // both sweeps (hand-evaluated), so exactly one node falls
        let u = vec![1.0, 2.0, 3.0, 4.0, 50.0, 6.0, 7.0, 8.0, 9.0];
        let checked = validate_median(&field_from_u(3, 3, &u), 2.0, 0.1);
        let invalid: Vec<usize> = (0..9)
            .filter(|&i| checked.status()[i] == NodeStatus::Invalid)
            .collect();
        assert_eq!(invalid, vec![4]);
    }

    #[test]
    fn all_invalid_field_passes_through_median_test() {
        let n = 12;
        let field = VectorField::from_parts(
            4,
            3,
            (0..n).map(|i| (i % 4) as f64).collect(),
            (0..n).map(|i| (i / 4) as f64).collect(),
            vec![0.0; n],
            vec![0.0; n],
            vec![NodeStatus::Invalid; n],
            vec![0.0; n],
            unit_cal(),
            3,
        )
        .unwrap();
        let checked = validate_median(&field, 2.0, 0.1);
        assert_eq!(checked, field);
    }

    #[test]
    fn median_test_checks_both_components() {
        // u uniform; one node's v disagrees → still invalidated
        let n = 25;
        let mut v = vec![1.5; n];
        v[7] = 40.0;
        let field = VectorField::from_parts(
            5,
            5,
            (0..n).map(|i| (i % 5) as f64).collect(),
            (0..n).map(|i| (i / 5) as f64).collect(),
            vec![2.0; n],
            v,
            vec![NodeStatus::Valid; n],
            vec![10.0; n],
            unit_cal(),
            5,
        )
        .unwrap();
        let checked = validate_median(&field, 2.0, 0.1);
        assert_eq!(checked.status()[7], NodeStatus::Invalid);
        assert_eq!(checked.status().iter().filter(|s| **s == NodeStatus::Invalid).count(), 1);
    }

    #[test]
    fn fill_restores_single_hole_with_uniform_value() {
        let mut field = field_from_u(5, 5, &[0.25; 25]);
        field.status[12] = NodeStatus::Invalid;
        field.u[12] = 0.0;
        let filled = fill_invalid(&field);
        assert_eq!(filled.status()[12], NodeStatus::Interpolated);
        assert!((filled.u()[12] - 0.25).abs() < 1e-12);
        assert_eq!(filled.status().iter().filter(|s| **s == NodeStatus::Valid).count(), 24);
    }

    #[test]
    fn fill_skips_nodes_with_two_usable_neighbors() {
        // 1×3 strip: middle node has exactly two neighbors
        let field = VectorField::from_parts(
            3,
            1,
            vec![0.0, 1.0, 2.0],
            vec![0.0; 3],
            vec![1.0, 0.0, 1.0],
            vec![0.0; 3],
            vec![NodeStatus::Valid, NodeStatus::Invalid, NodeStatus::Valid],
            vec![1.0; 3],
            unit_cal(),
            1,
        )
        .unwrap();
        let filled = fill_invalid(&field);
        assert_eq!(filled.status()[1], NodeStatus::Invalid);
        assert_eq!(filled.u()[1], 0.0);
    }

    #[test]
    fn fill_completes_checkerboard_in_uniform_field() {
        // invalidate every node with even (col+row) parity, corners included
        let mut field = field_from_u(4, 4, &[0.125; 16]);
        for row in 0..4 {
            for col in 0..4 {
                if (col + row) % 2 == 0 {
                    let i = row * 4 + col;
                    field.status[i] = NodeStatus::Invalid;
                    field.u[i] = 0.0;
                }
            }
        }
        let filled = fill_invalid(&field);
        for i in 0..16 {
            assert!(filled.status()[i].is_usable(), "node {i} still invalid");
            assert!((filled.u()[i] - 0.125).abs() < 1e-12, "node {i} wrong value");
        }
    }

    #[test]
    fn from_parts_rejects_inconsistent_arrays() {
        let bad = VectorField::from_parts(
            2,
            2,
            vec![0.0; 4],
            vec![0.0; 4],
            vec![0.0; 3], // short
            vec![0.0; 4],
            vec![NodeStatus::Valid; 4],
            vec![0.0; 4],
            unit_cal(),
            2,
        );
        assert!(matches!(bad, Err(FieldError::LengthMismatch { .. })));

        let nonzero_invalid = VectorField::from_parts(
            1,
            1,
            vec![0.0],
            vec![0.0],
            vec![1.0],
            vec![0.0],
            vec![NodeStatus::Invalid],
            vec![0.0],
            unit_cal(),
            1,
        );
        assert!(nonzero_invalid.is_err());
    }

    proptest! {
        /// Doubling the frame rate (halving dt) doubles velocity exactly,
        /// and power-of-two displacement scaling is exactly linear.
        #[test]
        fn velocity_scales_exactly_with_powers_of_two(
            dx in -64.0f64..64.0,
            dy in -64.0f64..64.0,
            mpp in 1e-6f64..1e-2,
            dt in 1e-4f64..1.0,
        ) {
            let base = cal(mpp, dt);
            let faster = cal(mpp, dt / 2.0);
            let (u1, v1) = to_velocity(&estimate(dx, dy), &base);
            let (u2, v2) = to_velocity(&estimate(dx, dy), &faster);
            prop_assert_eq!(u2, 2.0 * u1);
            prop_assert_eq!(v2, 2.0 * v1);
            let (u4, v4) = to_velocity(&estimate(4.0 * dx, 4.0 * dy), &base);
            prop_assert_eq!(u4, 4.0 * u1);
            prop_assert_eq!(v4, 4.0 * v1);
        }

        /// A second median-test application never invalidates more nodes.
        #[test]
        fn median_test_is_idempotent(
            cols in 1usize..6,
            rows in 1usize..6,
            seed in 0u64..1000,
        ) {
            let n = cols * rows;
            let mut rng = crate::rng::Rng::from_seed(seed);
            let u: Vec<f64> = (0..n).map(|_| rng.uniform() * 20.0 - 10.0).collect();
            let mut field = field_from_u(cols, rows, &u);
            // sprinkle pre-existing invalid nodes
            for i in 0..n {
                if rng.uniform() < 0.2 {
                    field.status[i] = NodeStatus::Invalid;
                    field.u[i] = 0.0;
                    field.v[i] = 0.0;
                }
            }
            let once = validate_median(&field, 2.0, 0.1);
            let twice = validate_median(&once, 2.0, 0.1);
            prop_assert_eq!(once, twice);
        }

        /// Post-processing preserves the no-NaN / zero-invalid invariant.
        #[test]
        fn pipeline_never_produces_nan(
            cols in 1usize..6,
            rows in 1usize..6,
            seed in 0u64..1000,
        ) {
            let n = cols * rows;
            let mut rng = crate::rng::Rng::from_seed(seed);
            let u: Vec<f64> = (0..n).map(|_| rng.uniform() * 4.0 - 2.0).collect();
            let mut field = field_from_u(cols, rows, &u);
            for i in 0..n {
                if rng.uniform() < 0.3 {
                    field.status[i] = NodeStatus::Invalid;
                    field.u[i] = 0.0;
                    field.v[i] = 0.0;
                }
            }
            let processed = fill_invalid(&validate_median(&field, 2.0, 0.1));
            for i in 0..n {
                prop_assert!(processed.u()[i].is_finite());
                prop_assert!(processed.v()[i].is_finite());
                if processed.status()[i] == NodeStatus::Invalid {
                    prop_assert_eq!(processed.u()[i], 0.0);
                    prop_assert_eq!(processed.v()[i], 0.0);
                }
            }
        }
    }
}
