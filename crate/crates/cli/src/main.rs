//! `pivlet` — particle-image-velocimetry workflows from the command line.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pivlet_cli::commands::{
    self, AnalyzeArgs, CompareArgs, DesignArgs, SweepArgs, SynthArgs,
};
use pivlet_cli::pipeline::AnalyzeSettings;
use pivlet_core::hydraulics::WATER_KINEMATIC_VISCOSITY_20C;

#[derive(Parser)]
#[command(
    name = "pivlet",
    about = "Velocity fields from particle-image pairs: correlation analysis, \
             synthetic benchmarks, flume design tables, and deviation reports",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Correlate a directory of frames into a velocity-field CSV
    Analyze(AnalyzeCli),
    /// Render a synthetic frame pair with known ground truth
    Synth(SynthCli),
    /// Tabulate development lengths over velocities and water depths
    Design(DesignCli),
    /// Score a field CSV against reference profiles along line segments
    Compare(CompareCli),
    /// Run analyze + compare over config-listed variants and rank them
    Sweep(SweepCli),
}

#[derive(Args)]
struct AnalyzeCli {
    /// Directory holding the frame sequence
    #[arg(long)]
    frames: PathBuf,
    /// Capture frame rate in frames per second
    #[arg(long)]
    fps: f64,
    /// Pair frames i and i+stride
    #[arg(long, default_value_t = 1)]
    stride: usize,
    /// Interrogation window size in pixels (power of two)
    #[arg(long, default_value_t = 128)]
    window: usize,
    /// Window overlap fraction in [0, 1)
    #[arg(long, default_value_t = 0.5)]
    overlap: f64,
    /// Calibration in meters per pixel
    #[arg(long)]
    mpp: f64,
    /// Filename glob selecting frames within the directory
    #[arg(long, default_value = "*")]
    pattern: String,
    /// Contrast-normalize frames before correlation
    #[arg(long, default_value_t = false)]
    normalize: bool,
    /// Output CSV path for the time-averaged field
    #[arg(long)]
    out: PathBuf,
    /// Also write each pair's field next to the output
    #[arg(long, default_value_t = false)]
    per_pair: bool,
}

#[derive(Args)]
struct SynthCli {
    /// Flow kind: uniform, rotation, or cylinder
    #[arg(long)]
    flow: String,
    /// Uniform flow: streamwise velocity, m/s
    #[arg(long, default_value_t = 0.0)]
    u: f64,
    /// Uniform flow: transverse velocity, m/s
    #[arg(long, default_value_t = 0.0)]
    v: f64,
    /// Rotation/cylinder: center x, meters
    #[arg(long, default_value_t = 0.0)]
    center_x: f64,
    /// Rotation/cylinder: center y, meters
    #[arg(long, default_value_t = 0.0)]
    center_y: f64,
    /// Rotation: angular velocity, rad/s
    #[arg(long, default_value_t = 0.0)]
    omega: f64,
    /// Cylinder: radius, meters
    #[arg(long, default_value_t = 0.0)]
    radius: f64,
    /// Cylinder: free-stream velocity, m/s
    #[arg(long, default_value_t = 0.0)]
    u_inf: f64,
    /// Frame width, pixels
    #[arg(long, default_value_t = 1920)]
    width: usize,
    /// Frame height, pixels
    #[arg(long, default_value_t = 1080)]
    height: usize,
    /// Mean particles per pixel²
    #[arg(long, default_value_t = 0.02)]
    density: f64,
    /// Particle image diameter, pixels (e⁻² Gaussian width)
    #[arg(long, default_value_t = 3.0)]
    diameter: f64,
    /// Additive Gaussian intensity noise sigma
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Random seed
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Calibration in meters per pixel
    #[arg(long, default_value_t = 0.0000625)]
    mpp: f64,
    /// Nominal frame rate defining the pair's time step
    #[arg(long, default_value_t = 240.0)]
    fps: f64,
    /// Window size used for the truth grid and seeding diagnostics
    #[arg(long, default_value_t = 128)]
    window: usize,
    /// Overlap fraction of the truth grid
    #[arg(long, default_value_t = 0.5)]
    overlap: f64,
    /// Output directory for frames and the truth CSV
    #[arg(long)]
    out_dir: PathBuf,
    /// Filename prefix for the pair and truth files
    #[arg(long, default_value = "frame")]
    prefix: String,
}

#[derive(Args)]
struct DesignCli {
    /// Comma-separated bulk velocities, mm/s
    #[arg(long)]
    velocities: String,
    /// Water-depth range min:max, mm
    #[arg(long)]
    depths: String,
    /// Depth step, mm
    #[arg(long, default_value_t = 10.0)]
    step: f64,
    /// Kinematic viscosity, m²/s
    #[arg(long, default_value_t = WATER_KINEMATIC_VISCOSITY_20C)]
    viscosity: f64,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CompareCli {
    /// Field CSV produced by analyze or synth
    #[arg(long)]
    field: PathBuf,
    /// Reference CSV (line_id,ystar,speed_mps)
    #[arg(long)]
    reference: PathBuf,
    /// TOML file with [[line]] tables
    #[arg(long)]
    lines: PathBuf,
    /// Output report CSV path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepCli {
    /// Sweep config TOML
    #[arg(long)]
    config: PathBuf,
    /// Directory for per-variant fields, reports, matrix, and ranking
    #[arg(long)]
    out_dir: PathBuf,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Analyze(a) => commands::cmd_analyze(&AnalyzeArgs {
            frames_dir: a.frames,
            settings: AnalyzeSettings {
                fps: a.fps,
                stride: a.stride,
                window: a.window,
                overlap: a.overlap,
                meters_per_pixel: a.mpp,
                pattern: a.pattern,
                normalize: a.normalize,
            },
            out: a.out,
            per_pair: a.per_pair,
        }),
        Command::Synth(s) => {
            let flow = commands::flow_from_flags(
                &s.flow, s.u, s.v, s.center_x, s.center_y, s.omega, s.radius, s.u_inf,
            )?;
            let config = commands::synth_config_from_flags(
                s.width, s.height, s.density, s.diameter, s.noise, s.seed, s.mpp, s.fps,
            )?;
            commands::cmd_synth(&SynthArgs {
                flow,
                config,
                window: s.window,
                overlap: s.overlap,
                out_dir: s.out_dir,
                prefix: s.prefix,
            })
        }
        Command::Design(d) => commands::cmd_design(&DesignArgs {
            velocities_mmps: commands::parse_number_list(&d.velocities)?,
            depth_range_mm: commands::parse_range(&d.depths)?,
            step_mm: d.step,
            viscosity: d.viscosity,
            out: d.out,
        }),
        Command::Compare(c) => commands::cmd_compare(&CompareArgs {
            field: c.field,
            reference: c.reference,
            lines: c.lines,
            out: c.out,
        }),
        Command::Sweep(s) => commands::cmd_sweep(&SweepArgs {
            config: s.config,
            out_dir: s.out_dir,
        }),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error:#}");
            ExitCode::FAILURE
        }
    }
}
