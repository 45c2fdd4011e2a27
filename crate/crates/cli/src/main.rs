use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dough_cli::{dcd_demo, run_config, run_preset, tactile_demo, CliError, DcdOptions, Format, Options, TactileOptions};

#[derive(Parser)]
#[command(name = "dough", version, about = "Simulated rolling-pin dough shaping experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides the configured seed (first seed for presets).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Log file format.
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Write a top-view SVG every k iterations (0 = off).
    #[arg(long, global = true, default_value_t = 0)]
    svg_every: usize,
    /// Height map cell size, m.
    #[arg(long, global = true)]
    resolution: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single configuration file.
    Run { config: PathBuf },
    /// Run one experiment preset, every condition three times.
    Preset {
        /// materials, start-methods, end-methods, shrink, target-shapes, dcd-synthetic or tactile.
        name: String,
        /// Base configuration the preset varies.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Gradient descent of a disk point cloud onto a wider disk under the DCD loss.
    DcdDemo {
        #[arg(long, default_value_t = 200)]
        steps: usize,
        #[arg(long, default_value_t = 1e-3)]
        lr: f64,
        #[arg(long, default_value_t = 500)]
        points: usize,
        #[arg(long, default_value_t = 0.028)]
        source_radius: f64,
        #[arg(long, default_value_t = 0.0508)]
        target_radius: f64,
    },
    /// Simulated press measurements and material classification.
    TactileDemo {
        #[arg(long, default_value_t = 5)]
        presses: usize,
        /// Force noise, N. Defaults to 5% of the smallest preset force gap.
        #[arg(long)]
        noise: Option<f64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let c = cli.common;
    let opts = Options {
        seed: c.seed,
        resolution: c.resolution,
        format: match c.format {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        },
        svg_every: c.svg_every,
    };
    let result = match cli.command {
        Command::Run { config } => run_config(&config, &opts),
        Command::Preset { name, config } => run_preset(&name, config.as_deref(), &opts),
        Command::DcdDemo { steps, lr, points, source_radius, target_radius } => dcd_demo(
            &DcdOptions { steps, lr, points, source_radius, target_radius, ..DcdOptions::default() },
            &opts,
        ),
        Command::TactileDemo { presses, noise } => {
            tactile_demo(&TactileOptions { presses, noise, seed: c.seed.unwrap_or(0) })
        }
    };
    match result.and_then(|out| out.write(&c.out).map(|_| out)) {
        Ok(out) => {
            print!("{}", out.report);
            ExitCode::SUCCESS
        }
        Err(e) => fail(e),
    }
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}
