//! Reference-profile CSV ingestion and deviation-report output.
//!
//! Reference format (one sample per row, any line order):
//!
//! ```text
//! line_id,ystar,speed_mps
//! ```
//!
//! Rows are grouped by `line_id` (groups ordered by first appearance) and
//! sorted by ystar within each group. Report format:
//!
//! ```text
//! line_id,mad_mps,std_mps,mape_pct
//! ```
//!
//! with `nan` in the MAPE column when a reference speed of exactly zero
//! makes the percentage undefined.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use pivlet_core::{DeviationReport, Profile};

pub const REFERENCE_HEADER: &str = "line_id,ystar,speed_mps";
pub const REPORT_HEADER: &str = "line_id,mad_mps,std_mps,mape_pct";

/// Load reference profiles grouped by line id.
pub fn load_reference(path: &Path) -> Result<Vec<Profile>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read reference CSV {}", path.display()))?;
    parse_reference(&text).with_context(|| format!("in reference CSV {}", path.display()))
}

fn parse_reference(text: &str) -> Result<Vec<Profile>> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header != REFERENCE_HEADER {
        bail!("line 1: expected header '{REFERENCE_HEADER}', got '{header}'");
    }

    // groups keyed by line id, in first-appearance order
    let mut order: Vec<String> = Vec::new();
    let mut groups: Vec<Vec<(f64, f64)>> = Vec::new();
    for (index, line) in lines.enumerate() {
        let line_no = index + 2;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            bail!("line {line_no}: expected 3 fields, got {}", fields.len());
        }
        let id = fields[0];
        if id.is_empty() {
            bail!("line {line_no}: empty line_id");
        }
        let ystar: f64 = fields[1]
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .with_context(|| format!("line {line_no}: unreadable ystar '{}'", fields[1]))?;
        let speed: f64 = fields[2]
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .with_context(|| format!("line {line_no}: unreadable speed_mps '{}'", fields[2]))?;

        let slot = match order.iter().position(|known| known == id) {
            Some(i) => i,
            None => {
                order.push(id.to_string());
                groups.push(Vec::new());
                groups.len() - 1
            }
        };
        if groups[slot].iter().any(|&(y, _)| y == ystar) {
            bail!("line {line_no}: duplicate sample for line '{id}' at ystar {ystar}");
        }
        groups[slot].push((ystar, speed));
    }

    let mut profiles = Vec::with_capacity(order.len());
    for (id, mut samples) in order.into_iter().zip(groups) {
        samples.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite ystar"));
        let ystar: Vec<f64> = samples.iter().map(|&(y, _)| y).collect();
        let speed: Vec<f64> = samples.iter().map(|&(_, s)| s).collect();
        let filled = vec![false; ystar.len()];
        profiles.push(
            Profile::new(&id, ystar, speed, filled)
                .with_context(|| format!("reference line '{id}'"))?,
        );
    }
    Ok(profiles)
}

/// Serialize deviation reports as CSV.
pub fn reports_to_csv(reports: &[DeviationReport]) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for r in reports {
        let mape = match r.mape_pct {
            Some(v) => format!("{v:.8e}"),
            None => String::from("nan"),
        };
        out.push_str(&format!(
            "{},{:.8e},{:.8e},{}\n",
            r.line_id, r.mad_mps, r.std_mps, mape
        ));
    }
    out
}

/// Write deviation reports to disk.
pub fn write_reports(reports: &[DeviationReport], path: &Path) -> Result<()> {
    fs::write(path, reports_to_csv(reports))
        .with_context(|| format!("cannot write report CSV {}", path.display()))
}

/// Human-readable deviation table for terminal output.
pub fn render_report_table(reports: &[DeviationReport]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<12} {:>14} {:>14} {:>10}\n",
        "line", "MAD (m/s)", "std (m/s)", "MAPE (%)"
    ));
    for r in reports {
        let mape = match r.mape_pct {
            Some(v) => format!("{v:.3}"),
            None => String::from("undefined"),
        };
        out.push_str(&format!(
            "{:<12} {:>14.6e} {:>14.6e} {:>10}\n",
            r.line_id, r.mad_mps, r.std_mps, mape
        ));
    }
    out
}
