//! PNG ingestion: grayscale and RGB, 8-bit and 16-bit.
//!
//! Color frames are collapsed to luminance with the Rec. 601 weights
//! (0.299, 0.587, 0.114) after normalizing each channel by the bit
//! depth's maximum, so an 8-bit pure red pixel reads as exactly 0.299.

use std::fs::File;
use std::path::Path;

use anyhow::{bail, Context, Result};
use png::{BitDepth, ColorType};

/// Decode a PNG into normalized luminance plus dimensions.
pub fn load_png(path: &Path) -> Result<(usize, usize, Vec<f64>)> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut decoder = png::Decoder::new(file);
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder
        .read_info()
        .with_context(|| format!("cannot decode {}", path.display()))?;

    let info = reader.info();
    let color = info.color_type;
    let depth: BitDepth = info.bit_depth;
    match color {
        ColorType::Grayscale | ColorType::Rgb => {}
        other => bail!(
            "unsupported PNG color type {other:?} in {} (grayscale or RGB required)",
            path.display()
        ),
    }
    let max = match depth {
        BitDepth::Eight => 255.0,
        BitDepth::Sixteen => 65535.0,
        other => bail!(
            "unsupported PNG bit depth {other:?} in {} (8 or 16 bit required)",
            path.display()
        ),
    };

    let mut buf = vec![0u8; reader.output_buffer_size()];
    let frame = reader
        .next_frame(&mut buf)
        .with_context(|| format!("cannot decode {}", path.display()))?;
    let (width, height) = (frame.width as usize, frame.height as usize);
    let data = &buf[..frame.buffer_size()];

    let channels = if color == ColorType::Rgb { 3 } else { 1 };
    let sixteen = depth == BitDepth::Sixteen;
    let sample_bytes = if sixteen { 2 } else { 1 };
    let expected = width * height * channels * sample_bytes;
    if data.len() != expected {
        bail!(
            "PNG payload size mismatch in {}: expected {expected} bytes, got {}",
            path.display(),
            data.len()
        );
    }

    let read_sample = |i: usize| -> f64 {
        if sixteen {
            f64::from(u16::from_be_bytes([data[2 * i], data[2 * i + 1]]))
        } else {
            f64::from(data[i])
        }
    };

    let mut intensities = Vec::with_capacity(width * height);
    for p in 0..width * height {
        let value = if channels == 3 {
            let r = read_sample(3 * p) / max;
            let g = read_sample(3 * p + 1) / max;
            let b = read_sample(3 * p + 2) / max;
            // the weights sum to 1 in decimal but can land a few ulps above
            // it in binary; keep the result inside the frame contract
            (0.299 * r + 0.587 * g + 0.114 * b).min(1.0)
        } else {
            read_sample(p) / max
        };
        intensities.push(value);
    }
    Ok((width, height, intensities))
}
