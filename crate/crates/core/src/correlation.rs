//! Windowed normalized cross-correlation with sub-pixel peak refinement.
//!
//! Each interrogation window of a frame pair yields a correlation surface
//! whose peak encodes the most likely particle displacement. Surfaces are
//! computed in the frequency domain on zero-padded transforms, so shifts up
//! to one window minus a pixel are observable without periodic aliasing.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::fft::{transpose, Fft};
use crate::frame::FramePair;

/// Errors from grid construction and pair processing.
#[derive(Debug, Clone, PartialEq)]
pub enum CorrelationError {
    /// Window does not fit inside the frame.
    WindowExceedsFrame { window: usize, width: usize, height: usize },
    /// Window size is not a power of two of at least 16.
    InvalidWindowSize { window: usize },
    /// Overlap fraction is outside [0, 1).
    InvalidOverlap { overlap: f64 },
    /// Grid was built for a different frame geometry.
    GridMismatch { grid: (usize, usize), frame: (usize, usize) },
}

impl fmt::Display for CorrelationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorrelationError::WindowExceedsFrame { window, width, height } => {
                write!(f, "window exceeds frame ({window} px window, {width}x{height} frame)")
            }
            CorrelationError::InvalidWindowSize { window } => {
                write!(f, "window size must be a power of two of at least 16, got {window}")
            }
            CorrelationError::InvalidOverlap { overlap } => {
                write!(f, "overlap fraction must lie in [0, 1), got {overlap}")
            }
            CorrelationError::GridMismatch { grid, frame } => {
                write!(
                    f,
                    "grid was built for a {}x{} frame but the pair is {}x{}",
                    grid.0, grid.1, frame.0, frame.1
                )
            }
        }
    }
}

impl core::error::Error for CorrelationError {}

/// Layout of interrogation windows over a frame.
#[derive(Debug, Clone)]
pub struct WindowGrid {
    window_size: usize,
    overlap_fraction: f64,
    stride: usize,
    origins: Vec<(usize, usize)>,
    cols: usize,
    rows: usize,
    frame_width: usize,
    frame_height: usize,
}

impl WindowGrid {
    pub fn window_size(&self) -> usize {
        self.window_size
    }

    pub fn overlap_fraction(&self) -> f64 {
        self.overlap_fraction
    }

    /// Spacing between window origins in pixels.
    pub fn stride(&self) -> usize {
        self.stride
    }

    /// Top-left corners, row-major.
    pub fn origins(&self) -> &[(usize, usize)] {
        &self.origins
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn frame_width(&self) -> usize {
        self.frame_width
    }

    pub fn frame_height(&self) -> usize {
        self.frame_height
    }

    /// Center of the window at `origin`, in pixel-center coordinates.
    pub fn center_of(&self, origin: (usize, usize)) -> (f64, f64) {
        let half = (self.window_size - 1) as f64 / 2.0;
        (origin.0 as f64 + half, origin.1 as f64 + half)
    }
}

/// Lay out interrogation windows over a `frame_width`×`frame_height` frame.
///
/// Origins are spaced by `window_size × (1 − overlap_fraction)` rounded down
/// (at least one pixel), row-major, and the populated region is centered in
/// the frame so leftover margin splits evenly across opposite edges.
pub fn build_grid(
    frame_width: usize,
    frame_height: usize,
    window_size: usize,
    overlap_fraction: f64,
) -> Result<WindowGrid, CorrelationError> {
    if window_size < 16 || !window_size.is_power_of_two() {
        return Err(CorrelationError::InvalidWindowSize { window: window_size });
    }
    if !(0.0..1.0).contains(&overlap_fraction) {
        return Err(CorrelationError::InvalidOverlap { overlap: overlap_fraction });
    }
    if window_size > frame_width || window_size > frame_height {
        return Err(CorrelationError::WindowExceedsFrame {
            window: window_size,
            width: frame_width,
            height: frame_height,
        });
    }
    let stride = (((window_size as f64) * (1.0 - overlap_fraction)) as usize).max(1);
    let cols = (frame_width - window_size) / stride + 1;
    let rows = (frame_height - window_size) / stride + 1;
    let x0 = (frame_width - ((cols - 1) * stride + window_size)) / 2;
    let y0 = (frame_height - ((rows - 1) * stride + window_size)) / 2;
    let mut origins = Vec::with_capacity(cols * rows);
    for r in 0..rows {
        for c in 0..cols {
            origins.push((x0 + c * stride, y0 + r * stride));
        }
    }
    Ok(WindowGrid {
        window_size,
        overlap_fraction,
        stride,
        origins,
        cols,
        rows,
        frame_width,
        frame_height,
    })
}

/// Correlation surface of one interrogation window.
///
/// For window size `w` the surface is `(2w−1)×(2w−1)`; the center element is
/// the zero-displacement coefficient and element `(sx, sy)` (signed, relative
/// to center) is the normalized correlation at that shift.
#[derive(Debug, Clone)]
pub struct CorrelationMap {
    window_size: usize,
    side: usize,
    values: Vec<f64>,
    window_origin: (usize, usize),
    valid: bool,
}

impl CorrelationMap {
    fn invalid(window_size: usize, window_origin: (usize, usize)) -> Self {
        let side = 2 * window_size - 1;
        CorrelationMap {
            window_size,
            side,
            values: vec![0.0; side * side],
            window_origin,
            valid: false,
        }
    }

    pub fn window_size(&self) -> usize {
        self.window_size
    }

    /// Side length of the square surface, `2·window_size − 1`.
    pub fn side(&self) -> usize {
        self.side
    }

    /// Row-major coefficients; row index is the y shift plus `w−1`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn window_origin(&self) -> (usize, usize) {
        self.window_origin
    }

    /// False when either window had zero variance (no texture to match).
    pub fn is_valid(&self) -> bool {
        self.valid
    }

    /// Coefficient at signed shift `(sx, sy)`, each in `[−(w−1), w−1]`.
    pub fn at(&self, sx: isize, sy: isize) -> f64 {
        let half = (self.window_size - 1) as isize;
        assert!(sx.abs() <= half && sy.abs() <= half, "shift outside surface");
        let row = (sy + half) as usize;
        let col = (sx + half) as usize;
        self.values[row * self.side + col]
    }
}

/// One window's displacement measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisplacementEstimate {
    /// Sub-pixel displacement along x, pixels.
    pub dx: f64,
    /// Sub-pixel displacement along y, pixels.
    pub dy: f64,
    /// Correlation coefficient at the primary peak.
    pub peak_value: f64,
    /// Primary-to-secondary peak ratio; `f64::INFINITY` when no positive
    /// secondary peak exists.
    pub snr: f64,
    /// False when the surface gave no usable peak (zero-variance window,
    /// border peak, or non-positive maximum).
    pub valid: bool,
}

impl DisplacementEstimate {
    /// The canonical unusable estimate: zero displacement, zero confidence.
    pub fn invalid() -> Self {
        DisplacementEstimate { dx: 0.0, dy: 0.0, peak_value: 0.0, snr: 0.0, valid: false }
    }

    /// True when a positive secondary peak existed to form the SNR ratio.
    pub fn has_second_peak(&self) -> bool {
        self.valid && self.snr.is_finite()
    }
}

/// Reusable correlation engine for one window size.
///
/// Holds the FFT plan and scratch buffers so correlating many windows of the
/// same frame pair allocates only the output surfaces.
#[derive(Debug)]
pub struct Correlator {
    w: usize,
    n: usize,
    fft: Fft,
    // zero-padded packed windows, then one spare transpose target
    win_re: Vec<f64>,
    win_im: Vec<f64>,
    // packed spectrum, cross spectrum, and partial inverse, in place
    spec_re: Vec<f64>,
    spec_im: Vec<f64>,
    // transposed non-redundant half of the partial inverse
    col_re: Vec<f64>,
    col_im: Vec<f64>,
    // packed row pair for the final inverse pass
    z_re: Vec<f64>,
    z_im: Vec<f64>,
}

impl Correlator {
    /// Plan for square windows of `window_size` (a power of two ≥ 2).
    ///
    /// Grids built by [`build_grid`] additionally require ≥ 16; smaller sizes
    /// are accepted here for direct use on caller-extracted windows.
    pub fn new(window_size: usize) -> Self {
        assert!(
            window_size >= 2 && window_size.is_power_of_two(),
            "window size must be a power of two of at least 2, got {window_size}"
        );
        let n = 2 * window_size;
        Correlator {
            w: window_size,
            n,
            fft: Fft::new(n),
            win_re: vec![0.0; n * n],
            win_im: vec![0.0; n * n],
            spec_re: vec![0.0; n * n],
            spec_im: vec![0.0; n * n],
            col_re: vec![0.0; n * n],
            col_im: vec![0.0; n * n],
            z_re: vec![0.0; n],
            z_im: vec![0.0; n],
        }
    }

    pub fn window_size(&self) -> usize {
        self.w
    }

    /// Normalized cross-correlation surface of two `w×w` windows.
    ///
    /// Both windows are mean-subtracted, zero-padded to `2w`, and correlated
    /// via frequency-domain multiplication; the surface is normalized by the
    /// product of the windows' root energies, so coefficients lie in `[−1, 1]`
    /// up to rounding. A zero-variance window yields an invalid, all-zero
    /// surface.
    pub fn correlate(
        &mut self,
        a: &[f64],
        b: &[f64],
        window_origin: (usize, usize),
    ) -> CorrelationMap {
        let mut map = CorrelationMap::invalid(self.w, window_origin);
        self.correlate_into(a, b, window_origin, &mut map);
        map
    }

    /// [`Self::correlate`] writing into a caller-owned surface, so bulk
    /// processing can reuse one allocation across windows.
    pub fn correlate_into(
        &mut self,
        a: &[f64],
        b: &[f64],
        window_origin: (usize, usize),
        map: &mut CorrelationMap,
    ) {
        let w = self.w;
        let n = self.n;
        let side = 2 * w - 1;
        assert_eq!(a.len(), w * w, "window a has wrong pixel count");
        assert_eq!(b.len(), w * w, "window b has wrong pixel count");
        assert_eq!(map.window_size, w, "surface sized for a different window");

        map.window_origin = window_origin;

        // A window is constant exactly when its extremes coincide; a
        // residual-energy test would miss this because the computed mean of
        // a constant window is not always exact.
        let extremes =
            |win: &[f64]| win.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let (min_a, max_a) = extremes(a);
        let (min_b, max_b) = extremes(b);
        if min_a == max_a || min_b == max_b {
            map.values.fill(0.0);
            map.valid = false;
            return;
        }
        let inv_area = 1.0 / (w * w) as f64;
        let mean_a = a.iter().sum::<f64>() * inv_area;
        let mean_b = b.iter().sum::<f64>() * inv_area;
        let energy_a: f64 = a.iter().map(|&v| (v - mean_a) * (v - mean_a)).sum();
        let energy_b: f64 = b.iter().map(|&v| (v - mean_b) * (v - mean_b)).sum();

        // Pack both real windows into one complex grid (a real, b imaginary)
        // so a single forward transform serves both spectra. Rows w..n of the
        // padded grid stay zero across calls: nothing below writes them.
        for y in 0..w {
            let row_re = &mut self.win_re[y * n..(y + 1) * n];
            let row_im = &mut self.win_im[y * n..(y + 1) * n];
            for x in 0..w {
                row_re[x] = a[y * w + x] - mean_a;
                row_im[x] = b[y * w + x] - mean_b;
            }
            row_re[w..].fill(0.0);
            row_im[w..].fill(0.0);
        }

        let Correlator { fft, win_re, win_im, spec_re, spec_im, col_re, col_im, z_re, z_im, .. } =
            self;

        // Forward pass: rows w..n are identically zero, so only the first w
        // row transforms do any work.
        for (re, im) in win_re.chunks_exact_mut(n).zip(win_im.chunks_exact_mut(n)).take(w) {
            fft.forward(re, im);
        }
        transpose(win_re, spec_re, n);
        transpose(win_im, spec_im, n);
        for (re, im) in spec_re.chunks_exact_mut(n).zip(spec_im.chunks_exact_mut(n)) {
            fft.forward(re, im);
        }

        // Split the packed spectrum H into the two real-signal spectra
        //   F(k) = (H(k) + conj(H(−k))) / 2
        //   G(k) = −i·(H(k) − conj(H(−k))) / 2
        // and form the cross spectrum S = conj(F)·G in place. S inherits
        // Hermitian symmetry (S(−k) = conj(S(k))), so each {k, −k} pair is
        // visited once and the mirror element written by conjugation.
        for kx in 0..n {
            let nkx = if kx == 0 { 0 } else { n - kx };
            for ky in 0..n {
                let nky = if ky == 0 { 0 } else { n - ky };
                let idx = kx * n + ky;
                let nidx = nkx * n + nky;
                if idx > nidx {
                    continue;
                }
                let (pr, pi) = (spec_re[idx], spec_im[idx]);
                let (qr, qi) = (spec_re[nidx], -spec_im[nidx]);
                let (fr, fi) = (0.5 * (pr + qr), 0.5 * (pi + qi));
                let (gr, gi) = (0.5 * (pi - qi), -0.5 * (pr - qr));
                spec_re[idx] = fr * gr + fi * gi;
                spec_im[idx] = fr * gi - fi * gr;
                spec_re[nidx] = spec_re[idx];
                spec_im[nidx] = -spec_im[idx];
            }
        }

        // Inverse, exploiting that S is Hermitian so the correlation surface
        // is real: transform only the non-redundant half of the rows, then
        // finish pairs of real output rows with single complex transforms.
        let kept = n / 2 + 1;
        for (re, im) in spec_re.chunks_exact_mut(n).zip(spec_im.chunks_exact_mut(n)).take(kept) {
            fft.inverse(re, im);
        }
        transpose_rows(spec_re, col_re, n, kept);
        transpose_rows(spec_im, col_im, n, kept);

        // Row y of the (unscaled) correlation comes out of the final inverse
        // n² too large; fold that and the energy normalization into one
        // factor applied while scattering rows into the shift-centered
        // surface layout.
        let scale = 1.0 / ((n * n) as f64 * libm::sqrt(energy_a * energy_b));
        let scatter = |row: usize, out: &[f64], map_values: &mut [f64]| {
            let shift_y = if row < w {
                row as isize
            } else if row > w {
                row as isize - n as isize
            } else {
                return; // shift ±w is outside the surface
            };
            let map_row = (shift_y + w as isize - 1) as usize * side;
            // positive x shifts 0..w−1 sit at columns w−1.., negative ones
            // wrap from the top of the row
            for (sx, &v) in out[..w].iter().enumerate() {
                map_values[map_row + sx + w - 1] = v * scale;
            }
            for (i, &v) in out[w + 1..].iter().enumerate() {
                map_values[map_row + i] = v * scale;
            }
        };
        for y in (0..n).step_by(2) {
            // Pack real rows y and y+1 as one complex signal: both spectra
            // are Hermitian along kx, with elements beyond n/2 mirrored.
            for kx in 0..kept {
                let (ar, ai) = (col_re[y * n + kx], col_im[y * n + kx]);
                let (br, bi) = (col_re[(y + 1) * n + kx], col_im[(y + 1) * n + kx]);
                z_re[kx] = ar - bi;
                z_im[kx] = ai + br;
            }
            for kx in kept..n {
                let m = n - kx;
                let (ar, ai) = (col_re[y * n + m], -col_im[y * n + m]);
                let (br, bi) = (col_re[(y + 1) * n + m], -col_im[(y + 1) * n + m]);
                z_re[kx] = ar - bi;
                z_im[kx] = ai + br;
            }
            fft.inverse(z_re, z_im);
            scatter(y, z_re, &mut map.values);
            scatter(y + 1, z_im, &mut map.values);
        }
        map.valid = true;
    }
}

/// Transpose the first `rows` rows of a square `n`×`n` matrix into the first
/// `rows` columns of `dst`, blocked for cache locality.
fn transpose_rows(src: &[f64], dst: &mut [f64], n: usize, rows: usize) {
    const BLOCK: usize = 32;
    let mut by = 0;
    while by < rows {
        let ye = (by + BLOCK).min(rows);
        let mut bx = 0;
        while bx < n {
            let xe = (bx + BLOCK).min(n);
            for y in by..ye {
                for x in bx..xe {
                    dst[x * n + y] = src[y * n + x];
                }
            }
            bx += BLOCK;
        }
        by += BLOCK;
    }
}

/// Correlate two square windows given as flat row-major pixel slices.
///
/// Convenience wrapper over [`Correlator`] for one-off use; the window size
/// is inferred from the slice length, which must be a square of a power of
/// two.
pub fn correlate_window(a: &[f64], b: &[f64]) -> CorrelationMap {
    assert_eq!(a.len(), b.len(), "windows must have equal pixel counts");
    let w = a.len().isqrt();
    assert_eq!(w * w, a.len(), "window pixel count must be a perfect square");
    Correlator::new(w).correlate(a, b, (0, 0))
}

/// Three-point sub-pixel offset along one axis.
///
/// Gaussian fit on the logs when all three samples are positive, falling
/// back to a parabolic fit otherwise. When the center is the strict maximum
/// the result always lies in `[−0.5, 0.5]`.
fn axis_offset(before: f64, center: f64, after: f64) -> f64 {
    if before > 0.0 && center > 0.0 && after > 0.0 {
        let (lm, l0, lp) = (libm::log(before), libm::log(center), libm::log(after));
        let denom = 2.0 * lm + 2.0 * lp - 4.0 * l0;
        if denom == 0.0 {
            0.0
        } else {
            (lm - lp) / denom
        }
    } else {
        let denom = 2.0 * (before - 2.0 * center + after);
        if denom == 0.0 {
            0.0
        } else {
            (before - after) / denom
        }
    }
}

/// Refine the integer correlation peak to sub-pixel precision.
///
/// The primary peak is located by exhaustive search; a three-point fit along
/// each axis refines it. The estimate is flagged invalid when the surface
/// itself is invalid, the peak sits on the surface border (no complete
/// three-point stencil), or the maximum is not positive. SNR is the primary
/// peak over the highest positive value outside a 3×3 exclusion zone around
/// it, `f64::INFINITY` when no such value exists.
pub fn subpixel_peak(map: &CorrelationMap) -> DisplacementEstimate {
    if !map.valid {
        return DisplacementEstimate::invalid();
    }
    let side = map.side;
    let values = &map.values;
    let mut best = 0usize;
    for (idx, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = idx;
        }
    }
    let peak_value = values[best];
    if peak_value <= 0.0 {
        return DisplacementEstimate::invalid();
    }
    let px = best % side;
    let py = best / side;
    if px == 0 || py == 0 || px == side - 1 || py == side - 1 {
        return DisplacementEstimate::invalid();
    }

    let delta_x = axis_offset(values[py * side + px - 1], peak_value, values[py * side + px + 1]);
    let delta_y = axis_offset(values[(py - 1) * side + px], peak_value, values[(py + 1) * side + px]);
    let half = (map.window_size - 1) as f64;
    let dx = px as f64 - half + delta_x;
    let dy = py as f64 - half + delta_y;

    let mut second = 0.0f64;
    for y in 0..side {
        let dy_excl = y as isize - py as isize;
        for x in 0..side {
            let dx_excl = x as isize - px as isize;
            if dx_excl.abs() <= 1 && dy_excl.abs() <= 1 {
                continue;
            }
            let v = values[y * side + x];
            if v > second {
                second = v;
            }
        }
    }
    let snr = if second > 0.0 { peak_value / second } else { f64::INFINITY };

    DisplacementEstimate { dx, dy, peak_value, snr, valid: true }
}

/// Measure displacement in every window of a frame pair.
///
/// Returns one estimate per grid origin in grid (row-major) order. Windows
/// that fail to correlate produce invalid estimates; the pair as a whole
/// never aborts.
pub fn process_pair(
    pair: &FramePair,
    grid: &WindowGrid,
) -> Result<Vec<DisplacementEstimate>, CorrelationError> {
    if grid.frame_width != pair.width() || grid.frame_height != pair.height() {
        return Err(CorrelationError::GridMismatch {
            grid: (grid.frame_width, grid.frame_height),
            frame: (pair.width(), pair.height()),
        });
    }
    let w = grid.window_size;
    let mut correlator = Correlator::new(w);
    let mut win_a = vec![0.0; w * w];
    let mut win_b = vec![0.0; w * w];
    let mut map = CorrelationMap::invalid(w, (0, 0));
    let mut estimates = Vec::with_capacity(grid.origins.len());
    for &(ox, oy) in &grid.origins {
        for row in 0..w {
            let src_a = &pair.frame_a().row(oy + row)[ox..ox + w];
            let src_b = &pair.frame_b().row(oy + row)[ox..ox + w];
            win_a[row * w..(row + 1) * w].copy_from_slice(src_a);
            win_b[row * w..(row + 1) * w].copy_from_slice(src_b);
        }
        correlator.correlate_into(&win_a, &win_b, (ox, oy), &mut map);
        estimates.push(subpixel_peak(&map));
    }
    Ok(estimates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::Frame;
    use crate::rng::Rng;
    use alloc::sync::Arc;
    use proptest::prelude::*;
    use std::vec::Vec;

    /// Brute-force spatial normalized cross-correlation, the oracle for the
    /// frequency-domain implementation.
    fn direct_ncc(a: &[f64], b: &[f64], w: usize) -> Vec<f64> {
        let mean_a = a.iter().sum::<f64>() / (w * w) as f64;
        let mean_b = b.iter().sum::<f64>() / (w * w) as f64;
        let da: Vec<f64> = a.iter().map(|&v| v - mean_a).collect();
        let db: Vec<f64> = b.iter().map(|&v| v - mean_b).collect();
        let ea: f64 = da.iter().map(|v| v * v).sum();
        let eb: f64 = db.iter().map(|v| v * v).sum();
        let norm = (ea * eb).sqrt();
        let side = 2 * w - 1;
        let mut out = vec![0.0; side * side];
        let half = w as isize - 1;
        for sy in -half..=half {
            for sx in -half..=half {
                let mut acc = 0.0;
                for y in 0..w as isize {
                    for x in 0..w as isize {
                        let (bx, by) = (x + sx, y + sy);
                        if bx >= 0 && by >= 0 && (bx as usize) < w && (by as usize) < w {
                            acc += da[(y * w as isize + x) as usize]
                                * db[(by * w as isize + bx) as usize];
                        }
                    }
                }
                out[((sy + half) * side as isize + (sx + half)) as usize] = acc / norm;
            }
        }
        out
    }

    fn random_window(w: usize, seed: u64) -> Vec<f64> {
        let mut rng = Rng::from_seed(seed);
        (0..w * w).map(|_| rng.uniform()).collect()
    }

    #[test]
    fn build_grid_no_overlap_full_hd() {
        let grid = build_grid(1920, 1080, 128, 0.0).unwrap();
        assert_eq!(grid.cols(), 15);
        assert_eq!(grid.rows(), 8);
        assert_eq!(grid.origins().len(), 120);
        // 1080 leaves 56 px of margin, split 28/28.
        assert_eq!(grid.origins()[0], (0, 28));
        assert_eq!(grid.stride(), 128);
    }

    #[test]
    fn build_grid_exact_fit() {
        let grid = build_grid(128, 128, 128, 0.0).unwrap();
        assert_eq!(grid.origins(), &[(0, 0)]);
    }

    #[test]
    fn build_grid_half_overlap_full_hd() {
        let grid = build_grid(1920, 1080, 128, 0.5).unwrap();
        assert_eq!(grid.stride(), 64);
        assert_eq!(grid.cols(), 29);
        assert_eq!(grid.rows(), 15);
        assert_eq!(grid.origins().len(), 435);
    }

    #[test]
    fn build_grid_rejects_bad_parameters() {
        let err = build_grid(100, 100, 128, 0.0).unwrap_err();
        assert!(alloc::format!("{err}").contains("window exceeds frame"));
        assert!(matches!(
            build_grid(256, 256, 24, 0.0),
            Err(CorrelationError::InvalidWindowSize { window: 24 })
        ));
        assert!(matches!(
            build_grid(256, 256, 32, 1.0),
            Err(CorrelationError::InvalidOverlap { .. })
        ));
    }

    #[test]
    fn build_grid_stride_floor_is_clamped_to_one() {
        let grid = build_grid(64, 64, 16, 0.99).unwrap();
        assert_eq!(grid.stride(), 1);
        assert_eq!(grid.cols(), 49);
    }

    #[test]
    fn all_windows_fit_in_frame() {
        for &(fw, fh, w, o) in
            &[(1920usize, 1080usize, 128usize, 0.5f64), (300, 200, 32, 0.25), (64, 640, 64, 0.0)]
        {
            let grid = build_grid(fw, fh, w, o).unwrap();
            for &(x, y) in grid.origins() {
                assert!(x + w <= fw && y + w <= fh);
            }
        }
    }

    #[test]
    fn frequency_domain_matches_direct_oracle() {
        for &(w, seed) in &[(8usize, 1u64), (16, 2), (32, 3)] {
            let a = random_window(w, seed);
            let b = random_window(w, seed + 100);
            let map = correlate_window(&a, &b);
            let oracle = direct_ncc(&a, &b, w);
            for (got, want) in map.values().iter().zip(&oracle) {
                assert!((got - want).abs() < 1e-10, "w={w}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn autocorrelation_peaks_at_center_with_unit_value() {
        let a = random_window(16, 9);
        let map = correlate_window(&a, &a);
        assert!(map.is_valid());
        assert!((map.at(0, 0) - 1.0).abs() < 1e-6);
        let est = subpixel_peak(&map);
        assert!(est.valid);
        assert!(est.dx.abs() < 1e-9 && est.dy.abs() < 1e-9);
        assert!(est.snr >= 1.0);
    }

    #[test]
    fn integer_shift_recovers_exactly() {
        let w = 16;
        let a = random_window(w, 21);
        // b(x, y) = a(x − 3, y + 2): contents move by (+3, −2).
        let mut b = vec![0.0; w * w];
        for y in 0..w as isize {
            for x in 0..w as isize {
                let (sx, sy) = (x - 3, y + 2);
                if sx >= 0 && sy >= 0 && (sx as usize) < w && (sy as usize) < w {
                    b[(y * w as isize + x) as usize] = a[(sy * w as isize + sx) as usize];
                }
            }
        }
        let map = correlate_window(&a, &b);
        let mut best = (0, 0);
        let mut best_v = f64::NEG_INFINITY;
        let half = w as isize - 1;
        for sy in -half..=half {
            for sx in -half..=half {
                if map.at(sx, sy) > best_v {
                    best_v = map.at(sx, sy);
                    best = (sx, sy);
                }
            }
        }
        assert_eq!(best, (3, -2));
    }

    #[test]
    fn displacement_antisymmetry() {
        let w = 16;
        let a = random_window(w, 31);
        let mut b = vec![0.0; w * w];
        for y in 0..w {
            for x in 0..w {
                if x >= 2 && y >= 1 {
                    b[y * w + x] = a[(y - 1) * w + x - 2];
                }
            }
        }
        let fwd = subpixel_peak(&correlate_window(&a, &b));
        let rev = subpixel_peak(&correlate_window(&b, &a));
        assert!(fwd.valid && rev.valid);
        assert!((fwd.dx + rev.dx).abs() < 1e-6, "{} vs {}", fwd.dx, rev.dx);
        assert!((fwd.dy + rev.dy).abs() < 1e-6, "{} vs {}", fwd.dy, rev.dy);
    }

    #[test]
    fn constant_window_is_invalid() {
        let a = vec![0.37; 256];
        let b = random_window(16, 4);
        let map = correlate_window(&a, &b);
        assert!(!map.is_valid());
        assert!(map.values().iter().all(|&v| v == 0.0));
        assert!(!subpixel_peak(&map).valid);
    }

    fn map_from_values(w: usize, values: Vec<f64>) -> CorrelationMap {
        let side = 2 * w - 1;
        assert_eq!(values.len(), side * side);
        CorrelationMap { window_size: w, side, values, window_origin: (0, 0), valid: true }
    }

    /// A 3×3-supported peak embedded at center of a 7×7 surface (w = 4).
    fn surface_with_row(center_row: [f64; 3]) -> CorrelationMap {
        let side = 7;
        let mut values = vec![0.0; side * side];
        let c = side / 2;
        values[c * side + c] = center_row[1];
        values[c * side + c - 1] = center_row[0];
        values[c * side + c + 1] = center_row[2];
        values[(c - 1) * side + c] = 0.1;
        values[(c + 1) * side + c] = 0.1;
        map_from_values(4, values)
    }

    #[test]
    fn subpixel_symmetric_peak_centered() {
        let est = subpixel_peak(&surface_with_row([0.5, 1.0, 0.5]));
        assert!(est.valid);
        assert_eq!(est.dx, 0.0);
        assert_eq!(est.dy, 0.0);
    }

    #[test]
    fn subpixel_gaussian_three_point() {
        // Frozen from high-precision evaluation of
        // (ln 0.6 − ln 0.8) / (2 ln 0.6 + 2 ln 0.8 − 4 ln 1.0).
        let est = subpixel_peak(&surface_with_row([0.6, 1.0, 0.8]));
        assert!(est.valid);
        assert!((est.dx - 0.1959769444134667).abs() < 1e-12, "{}", est.dx);
    }

    #[test]
    fn subpixel_parabolic_fallback_on_nonpositive_neighbor() {
        // (c₋ − c₊) / (2(c₋ − 2c₀ + c₊)) = (−0.1 − 0.5) / (2(−0.1 − 2 + 0.5))
        let est = subpixel_peak(&surface_with_row([-0.1, 1.0, 0.5]));
        assert!(est.valid);
        assert!((est.dx - 0.1875).abs() < 1e-12, "{}", est.dx);
    }

    #[test]
    fn subpixel_border_peak_is_invalid() {
        let side = 7;
        let mut values = vec![0.0; side * side];
        values[0] = 1.0;
        let map = map_from_values(4, values);
        assert!(!subpixel_peak(&map).valid);
    }

    #[test]
    fn subpixel_nonpositive_peak_is_invalid() {
        let side = 7;
        let values = vec![-0.2; side * side];
        let map = map_from_values(4, values);
        assert!(!subpixel_peak(&map).valid);
    }

    #[test]
    fn snr_ratio_and_infinite_sentinel() {
        let side = 7;
        let mut values = vec![0.0; side * side];
        let c = side / 2;
        values[c * side + c] = 0.9;
        values[c * side + c - 1] = 0.5;
        values[c * side + c + 1] = 0.5;
        // Secondary peak at row 0, col 5: outside the 3×3 exclusion zone.
        values[5] = 0.3;
        let est = subpixel_peak(&map_from_values(4, values.clone()));
        assert!((est.snr - 3.0).abs() < 1e-12);
        assert!(est.has_second_peak());

        values[5] = 0.0;
        let est = subpixel_peak(&map_from_values(4, values));
        assert_eq!(est.snr, f64::INFINITY);
        assert!(!est.has_second_peak());
    }

    #[test]
    fn snr_ignores_primary_shoulder() {
        let side = 7;
        let mut values = vec![0.0; side * side];
        let c = side / 2;
        values[c * side + c] = 1.0;
        // Shoulders inside the exclusion zone must not count as second peak.
        values[c * side + c + 1] = 0.95;
        values[(c + 1) * side + c + 1] = 0.9;
        values[2] = 0.25;
        let est = subpixel_peak(&map_from_values(4, values));
        assert!((est.snr - 4.0).abs() < 1e-12);
    }

    fn pair_from(a: Frame, b: Frame, dt: f64) -> FramePair {
        FramePair::new(Arc::new(a), Arc::new(b), dt).unwrap()
    }

    #[test]
    fn identical_frames_give_zero_displacement_everywhere() {
        let mut rng = Rng::from_seed(77);
        let (fw, fh) = (96usize, 64usize);
        let pixels: Vec<f64> = (0..fw * fh).map(|_| rng.uniform()).collect();
        let frame = Frame::new(fw, fh, pixels, 0).unwrap();
        let pair = pair_from(frame.clone(), frame, 0.01);
        let grid = build_grid(fw, fh, 32, 0.5).unwrap();
        let estimates = process_pair(&pair, &grid).unwrap();
        assert_eq!(estimates.len(), grid.origins().len());
        for est in &estimates {
            assert!(est.valid);
            assert!(est.dx.abs() < 1e-9 && est.dy.abs() < 1e-9);
        }
    }

    #[test]
    fn process_pair_rejects_foreign_grid() {
        let frame = Frame::new(64, 64, vec![0.5; 64 * 64], 0).unwrap();
        let pair = pair_from(frame.clone(), frame, 0.01);
        let grid = build_grid(128, 128, 32, 0.0).unwrap();
        assert!(matches!(
            process_pair(&pair, &grid),
            Err(CorrelationError::GridMismatch { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn gain_and_offset_leave_estimates_unchanged(
            seed in 0u64..1000,
            gain in 0.05f64..4.0,
            offset in -0.5f64..0.5,
        ) {
            let w = 8;
            let a = random_window(w, seed);
            let mut b = vec![0.0; w * w];
            for y in 1..w {
                for x in 0..w - 1 {
                    b[y * w + x] = a[(y - 1) * w + x + 1];
                }
            }
            let base = subpixel_peak(&correlate_window(&a, &b));
            let a2: Vec<f64> = a.iter().map(|&v| gain * v + offset).collect();
            let b2: Vec<f64> = b.iter().map(|&v| gain * v + offset).collect();
            let scaled = subpixel_peak(&correlate_window(&a2, &b2));
            prop_assert_eq!(base.valid, scaled.valid);
            if base.valid {
                prop_assert!((base.dx - scaled.dx).abs() < 1e-6);
                prop_assert!((base.dy - scaled.dy).abs() < 1e-6);
            }
        }

        #[test]
        fn surface_values_bounded(seed in 0u64..1000) {
            let a = random_window(8, seed);
            let b = random_window(8, seed ^ 0xABCD);
            let map = correlate_window(&a, &b);
            for &v in map.values() {
                prop_assert!(v.abs() <= 1.0 + 1e-9);
            }
        }
    }
}
