//! Frame-sequence ingestion: directory scanning, glob filtering,
//! natural-numeric ordering, and per-file decoding to [`Frame`]s.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use pivlet_core::Frame;

use crate::pgm::parse_pgm;
use crate::pngio::load_png;

/// Shell-style filename matching supporting `*` (any run, possibly empty)
/// and `?` (exactly one character).
pub fn glob_match(pattern: &str, name: &str) -> bool {
    let pat: Vec<char> = pattern.chars().collect();
    let text: Vec<char> = name.chars().collect();
    let (mut p, mut t) = (0usize, 0usize);
    // most recent star and the text position it has consumed up to
    let (mut star, mut star_t) = (usize::MAX, 0usize);
    while t < text.len() {
        if p < pat.len() && (pat[p] == '?' || pat[p] == text[t]) {
            p += 1;
            t += 1;
        } else if p < pat.len() && pat[p] == '*' {
            star = p;
            star_t = t;
            p += 1;
        } else if star != usize::MAX {
            // widen the last star by one character and retry
            p = star + 1;
            star_t += 1;
            t = star_t;
        } else {
            return false;
        }
    }
    while p < pat.len() && pat[p] == '*' {
        p += 1;
    }
    p == pat.len()
}

/// One comparison unit of a natural-order filename key.
#[derive(Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Segment {
    // numbers sort before text so frame2 < frame_a; value first so
    // frame_10 follows frame_9 regardless of digit count
    Number { value: u128, digits: usize },
    Text(String),
}

/// Split a filename into alternating text and number segments.
fn natural_key(name: &str) -> Vec<Segment> {
    let mut segments = Vec::new();
    let mut text = String::new();
    let mut chars = name.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_ascii_digit() {
            if !text.is_empty() {
                segments.push(Segment::Text(std::mem::take(&mut text)));
            }
            let mut value: u128 = 0;
            let mut digits = 0usize;
            while let Some(&d) = chars.peek() {
                if !d.is_ascii_digit() {
                    break;
                }
                value = value.saturating_mul(10).saturating_add(u128::from(d as u8 - b'0'));
                digits += 1;
                chars.next();
            }
            segments.push(Segment::Number { value, digits });
        } else {
            text.push(c);
            chars.next();
        }
    }
    if !text.is_empty() {
        segments.push(Segment::Text(text));
    }
    segments
}

/// Order filenames so numeric runs compare as numbers: frame_9 < frame_10.
pub fn natural_cmp(a: &str, b: &str) -> std::cmp::Ordering {
    natural_key(a).cmp(&natural_key(b)).then_with(|| a.cmp(b))
}

fn decode_frame(path: &Path, source_index: usize) -> Result<Frame> {
    let extension = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default();
    let (width, height, intensities) = match extension.as_str() {
        "pgm" => {
            let bytes = fs::read(path)
                .with_context(|| format!("cannot read {}", path.display()))?;
            let img = parse_pgm(&bytes)
                .with_context(|| format!("cannot decode {}", path.display()))?;
            let scale = f64::from(img.maxval);
            let intensities =
                img.samples.iter().map(|&s| f64::from(s) / scale).collect();
            (img.width, img.height, intensities)
        }
        "png" => load_png(path)?,
        _ => bail!(
            "unsupported frame format for {} (expected .pgm or .png)",
            path.display()
        ),
    };
    Frame::new(width, height, intensities, source_index)
        .with_context(|| format!("invalid frame data in {}", path.display()))
}

/// Load every frame in `directory` whose filename matches `pattern`,
/// sorted in natural numeric order. All frames must share one geometry.
pub fn load_sequence(directory: &Path, pattern: &str) -> Result<Vec<Frame>> {
    let entries = fs::read_dir(directory)
        .with_context(|| format!("cannot read directory {}", directory.display()))?;
    let mut names: Vec<String> = Vec::new();
    for entry in entries {
        let entry = entry
            .with_context(|| format!("cannot read directory {}", directory.display()))?;
        if !entry.file_type().map(|t| t.is_file()).unwrap_or(false) {
            continue;
        }
        let name = entry.file_name().to_string_lossy().into_owned();
        if glob_match(pattern, &name) {
            names.push(name);
        }
    }
    if names.is_empty() {
        bail!("no frames found in {} matching '{pattern}'", directory.display());
    }
    names.sort_by(|a, b| natural_cmp(a, b));

    let mut frames = Vec::with_capacity(names.len());
    for (index, name) in names.iter().enumerate() {
        let frame = decode_frame(&directory.join(name), index)?;
        if let Some(first) = frames.first() {
            let first: &Frame = first;
            if frame.width() != first.width() || frame.height() != first.height() {
                bail!(
                    "inconsistent frame geometry: {} is {}x{}, expected {}x{}",
                    name,
                    frame.width(),
                    frame.height(),
                    first.width(),
                    first.height()
                );
            }
        }
        frames.push(frame);
    }
    Ok(frames)
}

/// Write a frame as a 16-bit binary PGM.
pub fn write_pgm(frame: &Frame, path: &Path) -> Result<()> {
    let bytes = crate::pgm::encode_pgm(frame.width(), frame.height(), frame.intensities());
    fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
}
