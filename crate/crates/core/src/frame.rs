//! Grayscale frames, frame pairing, and intensity preprocessing.
//!
//! A [`Frame`] is an immutable row-major grid of normalized luminance values.
//! Frames are shared by reference counting so a long sequence can be paired
//! into overlapping [`FramePair`]s without copying pixel data.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

/// Errors arising from frame construction and pairing.
#[derive(Debug, Clone, PartialEq)]
pub enum FrameError {
    /// Width or height is zero.
    EmptyDimensions { width: usize, height: usize },
    /// Intensity buffer length does not match width × height.
    LengthMismatch { expected: usize, got: usize },
    /// An intensity sample is outside [0, 1] or not finite.
    IntensityOutOfRange { index: usize, value: f64 },
    /// Too few frames to form a single pair at the requested stride.
    TooFewFrames { stride: usize, count: usize },
    /// Pairing parameters out of range.
    BadPairing { what: &'static str },
    /// The two frames of a pair differ in size.
    GeometryMismatch,
}

impl fmt::Display for FrameError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FrameError::EmptyDimensions { width, height } => {
                write!(f, "frame dimensions must be positive, got {width}x{height}")
            }
            FrameError::LengthMismatch { expected, got } => {
                write!(f, "intensity buffer holds {got} values, geometry needs {expected}")
            }
            FrameError::IntensityOutOfRange { index, value } => {
                write!(f, "intensity {value} at index {index} is outside [0, 1]")
            }
            FrameError::TooFewFrames { stride, count } => {
                write!(f, "need at least stride+1 frames (stride {stride} needs {}, got {count})", stride + 1)
            }
            FrameError::BadPairing { what } => write!(f, "invalid pairing parameter: {what}"),
            FrameError::GeometryMismatch => write!(f, "paired frames differ in size"),
        }
    }
}

impl core::error::Error for FrameError {}

/// A single grayscale frame with normalized intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    width: usize,
    height: usize,
    intensities: Vec<f64>,
    source_index: usize,
}

impl Frame {
    /// Build a frame from row-major intensities in `[0, 1]`.
    ///
    /// `source_index` records the frame's ordinal position in its source
    /// sequence (0 for standalone frames).
    pub fn new(
        width: usize,
        height: usize,
        intensities: Vec<f64>,
        source_index: usize,
    ) -> Result<Self, FrameError> {
        if width == 0 || height == 0 {
            return Err(FrameError::EmptyDimensions { width, height });
        }
        if intensities.len() != width * height {
            return Err(FrameError::LengthMismatch {
                expected: width * height,
                got: intensities.len(),
            });
        }
        for (index, &value) in intensities.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(FrameError::IntensityOutOfRange { index, value });
            }
        }
        Ok(Frame { width, height, intensities, source_index })
    }

    /// Construct without the `[0, 1]` range check.
    ///
    /// Used by [`normalize_frame`] and the synthetic renderer, whose outputs
    /// are defined by their own contracts rather than by raw-image range.
    pub(crate) fn from_laundered(
        width: usize,
        height: usize,
        intensities: Vec<f64>,
        source_index: usize,
    ) -> Self {
        debug_assert_eq!(intensities.len(), width * height);
        Frame { width, height, intensities, source_index }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn source_index(&self) -> usize {
        self.source_index
    }

    /// Row-major intensity buffer.
    pub fn intensities(&self) -> &[f64] {
        &self.intensities
    }

    /// One pixel row.
    pub fn row(&self, y: usize) -> &[f64] {
        &self.intensities[y * self.width..(y + 1) * self.width]
    }

    /// Intensity at pixel column `x`, row `y`.
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.intensities[y * self.width + x]
    }
}

/// Two frames separated by a known exposure interval.
#[derive(Debug, Clone)]
pub struct FramePair {
    frame_a: Arc<Frame>,
    frame_b: Arc<Frame>,
    dt: f64,
}

impl FramePair {
    /// Pair two frames `dt` seconds apart.
    pub fn new(frame_a: Arc<Frame>, frame_b: Arc<Frame>, dt: f64) -> Result<Self, FrameError> {
        if frame_a.width != frame_b.width || frame_a.height != frame_b.height {
            return Err(FrameError::GeometryMismatch);
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(FrameError::BadPairing { what: "dt must be positive and finite" });
        }
        Ok(FramePair { frame_a, frame_b, dt })
    }

    pub fn frame_a(&self) -> &Frame {
        &self.frame_a
    }

    pub fn frame_b(&self) -> &Frame {
        &self.frame_b
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn width(&self) -> usize {
        self.frame_a.width
    }

    pub fn height(&self) -> usize {
        self.frame_a.height
    }
}

/// Pair frames `stride` indices apart: (0, stride), (1, 1+stride), …
///
/// `dt` of every pair is `stride / fps` seconds. With N frames the result
/// holds N − stride pairs in sequence order.
pub fn make_pairs(
    frames: &[Arc<Frame>],
    fps: f64,
    stride: usize,
) -> Result<Vec<FramePair>, FrameError> {
    if !(fps > 0.0 && fps.is_finite()) {
        return Err(FrameError::BadPairing { what: "fps must be positive and finite" });
    }
    if stride == 0 {
        return Err(FrameError::BadPairing { what: "stride must be at least 1" });
    }
    if frames.len() < stride + 1 {
        return Err(FrameError::TooFewFrames { stride, count: frames.len() });
    }
    let dt = stride as f64 / fps;
    let mut pairs = Vec::with_capacity(frames.len() - stride);
    for i in 0..frames.len() - stride {
        pairs.push(FramePair::new(frames[i].clone(), frames[i + stride].clone(), dt)?);
    }
    Ok(pairs)
}

/// Contrast-normalize a frame to zero mean and unit peak-to-peak range.
///
/// Output intensities are `(input − mean) / (max − min)`, which always lie
/// in `[−1, 1]`; a constant frame maps to all zeros. The result is invariant
/// under affine input transforms `a·I + b` with `a > 0`, which removes
/// global exposure and offset differences before correlation.
pub fn normalize_frame(frame: &Frame) -> Frame {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut sum = 0.0;
    for &value in &frame.intensities {
        min = min.min(value);
        max = max.max(value);
        sum += value;
    }
    let range = max - min;
    let intensities = if range == 0.0 {
        alloc::vec![0.0; frame.intensities.len()]
    } else {
        let mean = sum / frame.intensities.len() as f64;
        frame.intensities.iter().map(|&value| (value - mean) / range).collect()
    };
    Frame::from_laundered(frame.width, frame.height, intensities, frame.source_index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn frame_of(values: &[f64], width: usize) -> Arc<Frame> {
        Arc::new(Frame::new(width, values.len() / width, values.to_vec(), 0).unwrap())
    }

    #[test]
    fn new_rejects_bad_geometry_and_range() {
        assert!(matches!(
            Frame::new(0, 4, vec![], 0),
            Err(FrameError::EmptyDimensions { .. })
        ));
        assert!(matches!(
            Frame::new(2, 2, vec![0.0; 3], 0),
            Err(FrameError::LengthMismatch { expected: 4, got: 3 })
        ));
        assert!(matches!(
            Frame::new(2, 1, vec![0.5, 1.5], 0),
            Err(FrameError::IntensityOutOfRange { index: 1, .. })
        ));
        assert!(matches!(
            Frame::new(1, 1, vec![f64::NAN], 0),
            Err(FrameError::IntensityOutOfRange { .. })
        ));
    }

    #[test]
    fn accessors_follow_row_major_layout() {
        let f = frame_of(&[0.0, 0.25, 0.5, 0.75, 1.0, 0.125], 3);
        assert_eq!(f.width(), 3);
        assert_eq!(f.height(), 2);
        assert_eq!(f.get(1, 0), 0.25);
        assert_eq!(f.get(0, 1), 0.75);
        assert_eq!(f.row(1), &[0.75, 1.0, 0.125]);
    }

    #[test]
    fn make_pairs_consecutive() {
        let frames: Vec<_> = (0..3).map(|_| frame_of(&[0.0, 1.0], 2)).collect();
        let pairs = make_pairs(&frames, 60.0, 1).unwrap();
        assert_eq!(pairs.len(), 2);
        for pair in &pairs {
            assert_eq!(pair.dt(), 1.0 / 60.0);
        }
    }

    #[test]
    fn make_pairs_with_stride() {
        let frames: Vec<_> = (0..5).map(|_| frame_of(&[0.0, 1.0], 2)).collect();
        let pairs = make_pairs(&frames, 240.0, 2).unwrap();
        assert_eq!(pairs.len(), 3);
        assert_eq!(pairs[0].dt(), 1.0 / 120.0);
    }

    #[test]
    fn make_pairs_minimum_length() {
        let frames: Vec<_> = (0..2).map(|_| frame_of(&[0.0, 1.0], 2)).collect();
        let pairs = make_pairs(&frames, 30.0, 1).unwrap();
        assert_eq!(pairs.len(), 1);
        assert!((pairs[0].dt() - 0.0333).abs() < 1e-3);
    }

    #[test]
    fn make_pairs_too_few_frames() {
        let frames = vec![frame_of(&[0.0, 1.0], 2)];
        let err = make_pairs(&frames, 60.0, 1).unwrap_err();
        assert_eq!(err, FrameError::TooFewFrames { stride: 1, count: 1 });
        let msg = alloc::format!("{err}");
        assert!(msg.contains("need at least stride+1 frames"), "{msg}");
    }

    #[test]
    fn pair_rejects_mismatched_geometry() {
        let a = frame_of(&[0.0, 1.0], 2);
        let b = frame_of(&[0.0, 1.0], 1);
        assert!(matches!(FramePair::new(a, b, 0.1), Err(FrameError::GeometryMismatch)));
    }

    #[test]
    fn normalize_constant_frame_is_zero() {
        let f = frame_of(&[0.25; 6], 3);
        let n = normalize_frame(&f);
        assert!(n.intensities().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn normalize_balanced_binary_frame() {
        let f = frame_of(&[0.0, 1.0, 1.0, 0.0], 2);
        let n = normalize_frame(&f);
        assert_eq!(n.intensities(), &[-0.5, 0.5, 0.5, -0.5]);
    }

    #[test]
    fn normalize_is_idempotent_within_tolerance() {
        let f = frame_of(&[0.1, 0.4, 0.9, 0.3, 0.2, 0.6], 3);
        let once = normalize_frame(&f);
        let twice = normalize_frame(&once);
        for (a, b) in once.intensities().iter().zip(twice.intensities()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    proptest! {
        #[test]
        fn normalize_invariant_under_affine_input(
            values in proptest::collection::vec(0.0f64..=1.0, 4..60),
            gain in 0.05f64..20.0,
            offset in -5.0f64..5.0,
        ) {
            let width = 2;
            let height = values.len() / width;
            let trimmed = &values[..width * height];
            let base = Frame::from_laundered(width, height, trimmed.to_vec(), 0);
            let scaled = Frame::from_laundered(
                width,
                height,
                trimmed.iter().map(|v| gain * v + offset).collect(),
                0,
            );
            let n0 = normalize_frame(&base);
            let n1 = normalize_frame(&scaled);
            for (a, b) in n0.intensities().iter().zip(n1.intensities()) {
                prop_assert!((a - b).abs() < 1e-6);
            }
        }

        #[test]
        fn normalize_output_mean_near_zero(
            values in proptest::collection::vec(0.0f64..=1.0, 4..60),
        ) {
            let width = 2;
            let height = values.len() / width;
            let base = Frame::from_laundered(width, height, values[..width * height].to_vec(), 0);
            let n = normalize_frame(&base);
            let mean: f64 = n.intensities().iter().sum::<f64>() / n.intensities().len() as f64;
            prop_assert!(mean.abs() < 1e-6);
        }

        #[test]
        fn pair_count_matches_contract(count in 2usize..12, stride in 1usize..4) {
            prop_assume!(count > stride);
            let frames: alloc::vec::Vec<_> = (0..count)
                .map(|i| Arc::new(Frame::new(1, 2, vec![0.0, 1.0], i).unwrap()))
                .collect();
            let pairs = make_pairs(&frames, 60.0, stride).unwrap();
            prop_assert_eq!(pairs.len(), count - stride);
        }
    }
}
