//! TOML configuration files for the `sweep` and `compare` subcommands.
//!
//! A sweep file describes one parametric study: which acquisition
//! parameter varies, the frame directory and frame rate of each variant,
//! the fixed analysis settings, the probe lines, and the reference CSV.
//! Relative paths are resolved against the config file's directory so a
//! study stays portable as a folder.
//!
//! ```toml
//! [sweep]
//! parameter = "fps"            # fps | exposure_label | iso_label
//! reference = "reference.csv"
//!
//! [fixed]
//! meters_per_pixel = 0.0000625
//! window = 128
//! overlap = 0.5
//! stride = 1                   # optional, default 1
//! pattern = "*.pgm"            # optional, default "*"
//! normalize = false            # optional, default false
//!
//! [[variant]]
//! label = "240fps"
//! frames_dir = "captures/240"
//! fps = 240.0
//!
//! [[line]]
//! id = "L1"
//! start = [0.004, 0.002]       # meters
//! end = [0.004, 0.030]
//! samples = 25                 # optional, default 25
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use pivlet_core::LineSegment;
use serde::Deserialize;

/// Which acquisition-time parameter a sweep varies. Exposure and ISO are
/// labels for pre-recorded datasets: the tool cannot re-expose frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    Fps,
    ExposureLabel,
    IsoLabel,
}

impl SweepParameter {
    fn parse(raw: &str) -> Result<Self> {
        match raw {
            "fps" => Ok(SweepParameter::Fps),
            "exposure_label" => Ok(SweepParameter::ExposureLabel),
            "iso_label" => Ok(SweepParameter::IsoLabel),
            other => bail!(
                "unknown sweep parameter '{other}' (expected fps, exposure_label, or iso_label)"
            ),
        }
    }
}

/// One dataset in a sweep.
#[derive(Debug, Clone)]
pub struct Variant {
    pub label: String,
    pub frames_dir: PathBuf,
    pub fps: f64,
}

/// Analysis settings shared by every variant.
#[derive(Debug, Clone)]
pub struct FixedSettings {
    pub meters_per_pixel: f64,
    pub window: usize,
    pub overlap: f64,
    pub stride: usize,
    pub pattern: String,
    pub normalize: bool,
}

/// A fully validated sweep description.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub reference: PathBuf,
    pub fixed: FixedSettings,
    pub variants: Vec<Variant>,
    pub lines: Vec<LineSegment>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFile {
    sweep: SweepSection,
    fixed: FixedSection,
    #[serde(default)]
    variant: Vec<VariantSection>,
    #[serde(default)]
    line: Vec<LineSection>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSection {
    parameter: String,
    reference: PathBuf,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FixedSection {
    meters_per_pixel: f64,
    window: usize,
    overlap: f64,
    stride: Option<usize>,
    pattern: Option<String>,
    normalize: Option<bool>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct VariantSection {
    label: String,
    frames_dir: PathBuf,
    fps: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LineSection {
    id: String,
    start: [f64; 2],
    end: [f64; 2],
    samples: Option<usize>,
}

fn resolve(base: &Path, path: PathBuf) -> PathBuf {
    if path.is_absolute() {
        path
    } else {
        base.join(path)
    }
}

fn build_lines(sections: &[LineSection]) -> Result<Vec<LineSegment>> {
    let mut lines = Vec::with_capacity(sections.len());
    for section in sections {
        let start = (section.start[0], section.start[1]);
        let end = (section.end[0], section.end[1]);
        let line = match section.samples {
            Some(n) => LineSegment::with_samples(&section.id, start, end, n),
            None => LineSegment::new(&section.id, start, end),
        }
        .with_context(|| format!("line '{}'", section.id))?;
        if lines.iter().any(|known: &LineSegment| known.id() == line.id()) {
            bail!("duplicate line id '{}'", line.id());
        }
        lines.push(line);
    }
    Ok(lines)
}

/// Parse and validate a sweep config file.
pub fn load_sweep_config(path: &Path) -> Result<SweepConfig> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let file: SweepFile = toml::from_str(&text)
        .with_context(|| format!("cannot parse config {}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new("."));

    let parameter = SweepParameter::parse(&file.sweep.parameter)
        .with_context(|| format!("in config {}", path.display()))?;

    if file.variant.is_empty() {
        bail!("config {} declares no [[variant]] tables", path.display());
    }
    let mut variants = Vec::with_capacity(file.variant.len());
    for section in file.variant {
        if section.label.is_empty() {
            bail!("config {}: variant with empty label", path.display());
        }
        if variants.iter().any(|v: &Variant| v.label == section.label) {
            bail!("config {}: duplicate variant label '{}'", path.display(), section.label);
        }
        if !(section.fps > 0.0 && section.fps.is_finite()) {
            bail!(
                "config {}: variant '{}' has non-positive fps {}",
                path.display(),
                section.label,
                section.fps
            );
        }
        variants.push(Variant {
            label: section.label,
            frames_dir: resolve(base, section.frames_dir),
            fps: section.fps,
        });
    }

    let lines = build_lines(&file.line)
        .with_context(|| format!("in config {}", path.display()))?;
    if lines.is_empty() {
        bail!("config {} declares no [[line]] tables", path.display());
    }

    let fixed = FixedSettings {
        meters_per_pixel: file.fixed.meters_per_pixel,
        window: file.fixed.window,
        overlap: file.fixed.overlap,
        stride: file.fixed.stride.unwrap_or(1),
        pattern: file.fixed.pattern.unwrap_or_else(|| String::from("*")),
        normalize: file.fixed.normalize.unwrap_or(false),
    };
    if !(fixed.meters_per_pixel > 0.0 && fixed.meters_per_pixel.is_finite()) {
        bail!("config {}: meters_per_pixel must be positive", path.display());
    }

    Ok(SweepConfig {
        parameter,
        reference: resolve(base, file.sweep.reference),
        fixed,
        variants,
        lines,
    })
}

#[derive(Deserialize)]
struct LinesFile {
    #[serde(default)]
    line: Vec<LineSection>,
}

/// Parse the `[[line]]` tables of a config file (the other sections are
/// ignored, so a full sweep config doubles as a lines file).
pub fn load_lines_config(path: &Path) -> Result<Vec<LineSegment>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read lines config {}", path.display()))?;
    let file: LinesFile = toml::from_str(&text)
        .with_context(|| format!("cannot parse lines config {}", path.display()))?;
    let lines = build_lines(&file.line)
        .with_context(|| format!("in lines config {}", path.display()))?;
    if lines.is_empty() {
        bail!("lines config {} declares no [[line]] tables", path.display());
    }
    Ok(lines)
}
