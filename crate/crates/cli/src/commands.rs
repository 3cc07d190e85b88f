//! Subcommand implementations. Each function is the whole behavior of one
//! CLI verb; `main` only parses arguments and maps errors to exit codes.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use pivlet_core::{
    build_grid, compare, compare_pooled, design_sweep, render_pair, sample_line, Calibration,
    DeviationReport, FlowSpec, LineSegment, Profile, SynthConfig, VectorField,
};

use crate::config::{load_lines_config, load_sweep_config, SweepConfig, Variant};
use crate::fields_csv::{read_field, write_field};
use crate::frame_io::write_pgm;
use crate::pipeline::{analyze_directory, AnalyzeOutput, AnalyzeSettings};
use crate::reference_csv::{load_reference, render_report_table, write_reports};

/// `analyze`: frames in, one averaged field CSV out.
pub struct AnalyzeArgs {
    pub frames_dir: PathBuf,
    pub settings: AnalyzeSettings,
    pub out: PathBuf,
    pub per_pair: bool,
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<()> {
    let output = analyze_directory(&args.frames_dir, &args.settings)?;
    report_warnings(&output.warnings);
    write_field(&output.mean_field, &args.out).context("field stage")?;
    if args.per_pair {
        for (i, field) in output.pair_fields.iter().enumerate() {
            write_field(field, &per_pair_path(&args.out, i)).context("field stage")?;
        }
    }
    print_analyze_summary(&output);
    Ok(())
}

/// Path of the i-th per-pair CSV: `<stem>_pair000.csv` beside the output.
pub fn per_pair_path(out: &Path, index: usize) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("field");
    out.with_file_name(format!("{stem}_pair{index:03}.csv"))
}

fn report_warnings(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn print_analyze_summary(output: &AnalyzeOutput) {
    let (fraction, mean_speed) = crate::pipeline::field_summary(&output.mean_field);
    let pairs = output.pair_fields.len();
    println!(
        "analyzed {} frames ({} pair{}): {:.1}% valid vectors, mean speed {:.6} m/s",
        output.frame_count,
        pairs,
        if pairs == 1 { "" } else { "s" },
        100.0 * fraction,
        mean_speed
    );
}

/// `synth`: render one frame pair plus its ground-truth field.
pub struct SynthArgs {
    pub flow: FlowSpec,
    pub config: SynthConfig,
    pub window: usize,
    pub overlap: f64,
    pub out_dir: PathBuf,
    pub prefix: String,
}

pub fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let grid = build_grid(args.config.width, args.config.height, args.window, args.overlap)
        .context("synth stage")?;
    let rendered = render_pair(&args.flow, &args.config, &grid).context("synth stage")?;
    for warning in &rendered.warnings {
        eprintln!("warning: {warning}");
    }

    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("cannot create {}", args.out_dir.display()))?;
    let frame_a = args.out_dir.join(format!("{}_0001.pgm", args.prefix));
    let frame_b = args.out_dir.join(format!("{}_0002.pgm", args.prefix));
    let truth = args.out_dir.join(format!("{}_truth.csv", args.prefix));
    write_pgm(rendered.pair.frame_a(), &frame_a).context("synth stage")?;
    write_pgm(rendered.pair.frame_b(), &frame_b).context("synth stage")?;
    write_field(&rendered.truth, &truth).context("synth stage")?;
    println!(
        "wrote {} + {} and truth {}",
        frame_a.display(),
        frame_b.display(),
        truth.display()
    );
    Ok(())
}

/// `design`: development-length table over velocities and depths.
pub struct DesignArgs {
    pub velocities_mmps: Vec<f64>,
    pub depth_range_mm: (f64, f64),
    pub step_mm: f64,
    pub viscosity: f64,
    pub out: PathBuf,
}

pub fn cmd_design(args: &DesignArgs) -> Result<()> {
    let points = design_sweep(
        &args.velocities_mmps,
        args.depth_range_mm,
        args.viscosity,
        args.step_mm,
    )
    .context("hydraulics stage")?;
    let mut csv = String::from("velocity_mmps,D_mm,Re,L_mm\n");
    for p in &points {
        csv.push_str(&format!(
            "{:.8e},{:.8e},{:.8e},{:.8e}\n",
            p.velocity_mmps, p.d_mm, p.reynolds, p.l_mm
        ));
    }
    fs::write(&args.out, csv)
        .with_context(|| format!("cannot write design CSV {}", args.out.display()))?;
    println!("wrote {} design points to {}", points.len(), args.out.display());
    Ok(())
}

/// `compare`: score a field CSV against reference profiles along lines.
pub struct CompareArgs {
    pub field: PathBuf,
    pub reference: PathBuf,
    pub lines: PathBuf,
    pub out: PathBuf,
}

pub fn cmd_compare(args: &CompareArgs) -> Result<()> {
    let field = read_field(&args.field).context("field stage")?;
    let lines = load_lines_config(&args.lines).context("metrics stage")?;
    let references = load_reference(&args.reference).context("metrics stage")?;
    let reports = run_comparison(&field, &lines, &references).context("metrics stage")?;
    write_reports(&reports, &args.out).context("metrics stage")?;
    print!("{}", render_report_table(&reports));
    Ok(())
}

/// Sample each configured line and score it against the reference profile
/// with the matching id; the final report row pools every line.
fn run_comparison(
    field: &VectorField,
    lines: &[LineSegment],
    references: &[Profile],
) -> Result<Vec<DeviationReport>> {
    let mut reports = Vec::with_capacity(lines.len() + 1);
    let mut pooled_pairs: Vec<(Profile, Profile)> = Vec::with_capacity(lines.len());
    for line in lines {
        let reference = references
            .iter()
            .find(|p| p.line_id() == line.id())
            .with_context(|| format!("no reference data for line '{}'", line.id()))?;
        let measured = sample_line(field, line)?;
        reports.push(compare(&measured, reference)?);
        pooled_pairs.push((measured, reference.clone()));
    }
    let borrowed: Vec<(&Profile, &Profile)> =
        pooled_pairs.iter().map(|(m, r)| (m, r)).collect();
    reports.push(compare_pooled(&borrowed, "pooled")?);
    Ok(reports)
}

/// `sweep`: analyze + compare per variant, then rank by pooled MAPE.
pub struct SweepArgs {
    pub config: PathBuf,
    pub out_dir: PathBuf,
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let config = load_sweep_config(&args.config).context("config stage")?;
    let references = load_reference(&config.reference).context("metrics stage")?;
    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("cannot create {}", args.out_dir.display()))?;

    let mut per_variant: Vec<(String, Vec<DeviationReport>)> = Vec::new();
    for variant in &config.variants {
        let reports = run_variant(&config, variant, &references, &args.out_dir)
            .with_context(|| format!("variant '{}'", variant.label))?;
        per_variant.push((variant.label.clone(), reports));
    }

    // variant × line matrix, config order
    let mut matrix = String::from("label,line_id,mad_mps,std_mps,mape_pct\n");
    for (label, reports) in &per_variant {
        for r in reports {
            let mape = match r.mape_pct {
                Some(v) => format!("{v:.8e}"),
                None => String::from("nan"),
            };
            matrix.push_str(&format!(
                "{label},{},{:.8e},{:.8e},{mape}\n",
                r.line_id, r.mad_mps, r.std_mps
            ));
        }
    }
    let matrix_path = args.out_dir.join("sweep_matrix.csv");
    fs::write(&matrix_path, matrix)
        .with_context(|| format!("cannot write {}", matrix_path.display()))?;

    // ranking by pooled MAPE, ascending; undefined MAPEs rank last;
    // ties keep config order so output bytes stay deterministic
    let mut ranking: Vec<(usize, &str, Option<f64>)> = per_variant
        .iter()
        .enumerate()
        .map(|(i, (label, reports))| {
            let pooled = reports.last().expect("pooled row always present");
            (i, label.as_str(), pooled.mape_pct)
        })
        .collect();
    ranking.sort_by(|a, b| match (a.2, b.2) {
        (Some(x), Some(y)) => x.partial_cmp(&y).expect("finite MAPE").then(a.0.cmp(&b.0)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.0.cmp(&b.0),
    });
    let mut ranking_csv = String::from("rank,label,pooled_mape_pct\n");
    println!("{:<6} {:<16} {:>16}", "rank", "label", "pooled MAPE (%)");
    for (rank, (_, label, mape)) in ranking.iter().enumerate() {
        let shown = match mape {
            Some(v) => format!("{v:.8e}"),
            None => String::from("nan"),
        };
        ranking_csv.push_str(&format!("{},{label},{shown}\n", rank + 1));
        let human = match mape {
            Some(v) => format!("{v:.3}"),
            None => String::from("undefined"),
        };
        println!("{:<6} {:<16} {:>16}", rank + 1, label, human);
    }
    let ranking_path = args.out_dir.join("sweep_ranking.csv");
    fs::write(&ranking_path, ranking_csv)
        .with_context(|| format!("cannot write {}", ranking_path.display()))?;

    println!(
        "wrote {} and {}",
        matrix_path.display(),
        ranking_path.display()
    );
    Ok(())
}

fn run_variant(
    config: &SweepConfig,
    variant: &Variant,
    references: &[Profile],
    out_dir: &Path,
) -> Result<Vec<DeviationReport>> {
    let settings = AnalyzeSettings {
        fps: variant.fps,
        stride: config.fixed.stride,
        window: config.fixed.window,
        overlap: config.fixed.overlap,
        meters_per_pixel: config.fixed.meters_per_pixel,
        pattern: config.fixed.pattern.clone(),
        normalize: config.fixed.normalize,
    };
    let output = analyze_directory(&variant.frames_dir, &settings)?;
    for w in &output.warnings {
        eprintln!("warning [{}]: {w}", variant.label);
    }
    let field_path = out_dir.join(format!("field_{}.csv", variant.label));
    write_field(&output.mean_field, &field_path).context("field stage")?;
    let reports =
        run_comparison(&output.mean_field, &config.lines, references).context("metrics stage")?;
    let report_path = out_dir.join(format!("report_{}.csv", variant.label));
    write_reports(&reports, &report_path).context("metrics stage")?;
    println!("variant '{}':", variant.label);
    print!("{}", render_report_table(&reports));
    Ok(reports)
}

/// Parse "a,b,c" into numbers for the design command.
pub fn parse_number_list(raw: &str) -> Result<Vec<f64>> {
    raw.split(',')
        .map(|token| {
            token
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .with_context(|| format!("unreadable number '{token}' in list"))
        })
        .collect()
}

/// Parse "min:max" into a depth range.
pub fn parse_range(raw: &str) -> Result<(f64, f64)> {
    let (lo, hi) = raw
        .split_once(':')
        .with_context(|| format!("range '{raw}' must look like min:max"))?;
    let lo: f64 = lo.trim().parse().ok().filter(|v: &f64| v.is_finite())
        .with_context(|| format!("unreadable range start '{lo}'"))?;
    let hi: f64 = hi.trim().parse().ok().filter(|v: &f64| v.is_finite())
        .with_context(|| format!("unreadable range end '{hi}'"))?;
    Ok((lo, hi))
}

/// Build a [`FlowSpec`] from the flat flag set of `synth`.
#[allow(clippy::too_many_arguments)]
pub fn flow_from_flags(
    kind: &str,
    u: f64,
    v: f64,
    center_x: f64,
    center_y: f64,
    omega: f64,
    radius: f64,
    u_inf: f64,
) -> Result<FlowSpec> {
    match kind {
        "uniform" => Ok(FlowSpec::Uniform { u, v }),
        "rotation" => Ok(FlowSpec::SolidRotation {
            center: (center_x, center_y),
            omega_rad_s: omega,
        }),
        "cylinder" => Ok(FlowSpec::CylinderPotential {
            center: (center_x, center_y),
            radius_m: radius,
            u_inf,
        }),
        other => bail!("unknown flow '{other}' (expected uniform, rotation, or cylinder)"),
    }
}

/// Assemble the synth configuration from CLI flags.
#[allow(clippy::too_many_arguments)]
pub fn synth_config_from_flags(
    width: usize,
    height: usize,
    density: f64,
    diameter: f64,
    noise: f64,
    seed: u64,
    mpp: f64,
    fps: f64,
) -> Result<SynthConfig> {
    let calibration = Calibration::new(mpp, 1.0 / fps).context("synth stage")?;
    Ok(SynthConfig {
        width,
        height,
        particle_density: density,
        particle_diameter: diameter,
        intensity_noise_sigma: noise,
        seed,
        calibration,
    })
}
