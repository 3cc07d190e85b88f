//! Iterative power-of-two FFT over split real/imaginary buffers.
//!
//! Sized for the correlator: plans are immutable and reusable across
//! windows, and the inverse transform is left unscaled so callers can fold
//! the `1/n` factors into their own normalization.
//!
//! Stages run as radix-4 butterflies — two decimation-in-time levels fused,
//! which keeps plain bit-reversed input ordering while saving a quarter of
//! the twiddle multiplies and half the memory passes. Odd powers of two get
//! a single radix-2 level first. Twiddle triples are stored contiguously per
//! stage so the butterfly loops read every operand sequentially.

use alloc::vec::Vec;
use core::f64::consts::PI;

/// Transform plan for a fixed power-of-two length.
#[derive(Debug, Clone)]
pub struct Fft {
    n: usize,
    // fused-stage twiddle triples W_L^j, W_2L^j, W_2L^3j for j in 0..L/2,
    // stages concatenated; imaginary parts stored per direction
    tw_re: Vec<f64>,
    tw_fwd_im: Vec<f64>,
    tw_inv_im: Vec<f64>,
    // precomputed swap pairs of the bit-reversal permutation
    swaps: Vec<(u32, u32)>,
}

impl Fft {
    /// Plan a transform of length `n`.
    ///
    /// Panics if `n` is not a power of two or is smaller than 2.
    pub fn new(n: usize) -> Self {
        assert!(n >= 2 && n.is_power_of_two(), "fft length must be a power of two, got {n}");
        let mut tw_re = Vec::new();
        let mut tw_fwd_im = Vec::new();
        let mut tw_inv_im = Vec::new();
        let mut push = |angle: f64| {
            let (c, s) = (libm::cos(angle), libm::sin(angle));
            tw_re.push(c);
            tw_fwd_im.push(s);
            tw_inv_im.push(-s);
        };
        let mut len = if n.trailing_zeros() % 2 == 1 { 4 } else { 2 };
        while len <= n {
            // Fused stage turning four len/2-point transforms into one of
            // 2·len points. Each factor gets its own contiguous run so the
            // butterfly loop reads every table sequentially: all of
            // W_len^j, then all W_2len^j, then all W_2len^3j.
            for j in 0..len / 2 {
                push(-2.0 * PI * j as f64 / len as f64);
            }
            for j in 0..len / 2 {
                push(-2.0 * PI * j as f64 / (2 * len) as f64);
            }
            for j in 0..len / 2 {
                push(-2.0 * PI * (3 * j) as f64 / (2 * len) as f64);
            }
            len *= 4;
        }
        let bits = n.trailing_zeros();
        let mut swaps = Vec::new();
        for i in 0..n as u32 {
            let j = i.reverse_bits() >> (32 - bits);
            if i < j {
                swaps.push((i, j));
            }
        }
        Fft { n, tw_re, tw_fwd_im, tw_inv_im, swaps }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// In-place forward DFT: `X[k] = Σ x[j]·exp(-2πijk/n)`.
    pub fn forward(&self, re: &mut [f64], im: &mut [f64]) {
        self.transform::<true>(re, im, &self.tw_fwd_im);
    }

    /// In-place unscaled inverse DFT: `x[j] = Σ X[k]·exp(+2πijk/n)`.
    ///
    /// Divide by `n` (per axis) to recover the true inverse.
    pub fn inverse(&self, re: &mut [f64], im: &mut [f64]) {
        self.transform::<false>(re, im, &self.tw_inv_im);
    }

    fn transform<const FWD: bool>(&self, re: &mut [f64], im: &mut [f64], tw_im: &[f64]) {
        let n = self.n;
        assert_eq!(re.len(), n, "buffer length mismatch");
        assert_eq!(im.len(), n, "buffer length mismatch");

        for &(i, j) in &self.swaps {
            re.swap(i as usize, j as usize);
            im.swap(i as usize, j as usize);
        }

        let mut block = 4;
        if n.trailing_zeros() % 2 == 1 {
            // odd power of two: one radix-2 level, twiddle 1
            for (r, i) in re.chunks_exact_mut(2).zip(im.chunks_exact_mut(2)) {
                let (r0, r1) = (r[0], r[1]);
                let (i0, i1) = (i[0], i[1]);
                r[0] = r0 + r1;
                r[1] = r0 - r1;
                i[0] = i0 + i1;
                i[1] = i0 - i1;
            }
            block = 8;
        } else if n >= 4 {
            // the block-4 stage has unity twiddles throughout; run it as a
            // pure add/swap pass
            for (r, i) in re.chunks_exact_mut(4).zip(im.chunks_exact_mut(4)) {
                let (a1r, a1i) = (r[0] + r[1], i[0] + i[1]);
                let (b1r, b1i) = (r[0] - r[1], i[0] - i[1]);
                let (sr, si) = (r[2] + r[3], i[2] + i[3]);
                let (tr, ti) = (r[2] - r[3], i[2] - i[3]);
                r[0] = a1r + sr;
                i[0] = a1i + si;
                r[2] = a1r - sr;
                i[2] = a1i - si;
                if FWD {
                    r[1] = b1r + ti;
                    i[1] = b1i - tr;
                    r[3] = b1r - ti;
                    i[3] = b1i + tr;
                } else {
                    r[1] = b1r - ti;
                    i[1] = b1i + tr;
                    r[3] = b1r + ti;
                    i[3] = b1i - tr;
                }
            }
            block = 16;
        }

        // Radix-4 stages: combine butterflies at distance quarter and half
        // in one pass. With a1 = a + b·T1, b1 = a − b·T1, s = c·T2 + d·T3,
        // t = c·T2 − d·T3 the four outputs are a1 ± s and b1 ∓ i·t
        // (sign of i flipped for the inverse).
        let tw_re = &self.tw_re;
        let mut offset = if block == 16 { 3 } else { 0 };
        while block <= n {
            let half = block / 2;
            let quarter = block / 4;
            let stage_re = &tw_re[offset..offset + 3 * quarter];
            let stage_im = &tw_im[offset..offset + 3 * quarter];
            let (t1_re, rest_re) = stage_re.split_at(quarter);
            let (t2_re, t3_re) = rest_re.split_at(quarter);
            let (t1_im, rest_im) = stage_im.split_at(quarter);
            let (t2_im, t3_im) = rest_im.split_at(quarter);
            for (br, bi) in re.chunks_exact_mut(block).zip(im.chunks_exact_mut(block)) {
                let (r01, r23) = br.split_at_mut(half);
                let (i01, i23) = bi.split_at_mut(half);
                let (r0, r1) = r01.split_at_mut(quarter);
                let (i0, i1) = i01.split_at_mut(quarter);
                let (r2, r3) = r23.split_at_mut(quarter);
                let (i2, i3) = i23.split_at_mut(quarter);
                for j in 0..quarter {
                    let (t1r, t1i) = (t1_re[j], t1_im[j]);
                    let (t2r, t2i) = (t2_re[j], t2_im[j]);
                    let (t3r, t3i) = (t3_re[j], t3_im[j]);
                    let (ar, ai) = (r0[j], i0[j]);
                    let (br_, bi_) = (r1[j], i1[j]);
                    let (cr, ci) = (r2[j], i2[j]);
                    let (dr, di) = (r3[j], i3[j]);
                    let bbr = t1r * br_ - t1i * bi_;
                    let bbi = t1r * bi_ + t1i * br_;
                    let pr = t2r * cr - t2i * ci;
                    let pi = t2r * ci + t2i * cr;
                    let qr = t3r * dr - t3i * di;
                    let qi = t3r * di + t3i * dr;
                    let (a1r, a1i) = (ar + bbr, ai + bbi);
                    let (b1r, b1i) = (ar - bbr, ai - bbi);
                    let (sr, si) = (pr + qr, pi + qi);
                    let (tr, ti) = (pr - qr, pi - qi);
                    r0[j] = a1r + sr;
                    i0[j] = a1i + si;
                    r2[j] = a1r - sr;
                    i2[j] = a1i - si;
                    if FWD {
                        r1[j] = b1r + ti;
                        i1[j] = b1i - tr;
                        r3[j] = b1r - ti;
                        i3[j] = b1i + tr;
                    } else {
                        r1[j] = b1r - ti;
                        i1[j] = b1i + tr;
                        r3[j] = b1r + ti;
                        i3[j] = b1i - tr;
                    }
                }
            }
            offset += 3 * quarter;
            block *= 4;
        }
    }
}

/// Transpose a dense `n`×`n` matrix out of place, blocked for cache locality.
pub fn transpose(src: &[f64], dst: &mut [f64], n: usize) {
    assert_eq!(src.len(), n * n);
    assert_eq!(dst.len(), n * n);
    const BLOCK: usize = 32;
    let mut by = 0;
    while by < n {
        let ye = (by + BLOCK).min(n);
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
