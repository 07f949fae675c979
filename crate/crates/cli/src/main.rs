use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qmobius_core::covering::{CoverMode, EXACT_POINT_CAP};
use qmobius_core::verify::{Suite, DEFAULT_SEED, SEED_ENV};

mod commands;

#[derive(Parser, Debug)]
#[command(name = "qmobius", version, about = "Finite metric space workbench")]
struct Cli {
    /// Also write the run report to this file.
    #[arg(long, global = true)]
    report: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a space document against the metric or quasi-metric axioms.
    Validate {
        #[arg(long)]
        input: PathBuf,
    },
    /// Invert (or sphericalize) a metric space at a point.
    Invert(InvertArgs),
    /// Doubling constant over all centers and radii.
    Doubling {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "exact")]
        mode: CoverMode,
        /// Largest space accepted in exact mode.
        #[arg(long, default_value_t = EXACT_POINT_CAP)]
        exact_cap: usize,
    },
    /// θ-chains and the uniform disconnectedness threshold.
    Chains {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long, num_args = 2, value_names = ["A", "B"])]
        pair: Option<Vec<String>>,
    },
    /// Run the certificate sweep over generated instances.
    VerifyTheorems {
        #[arg(long, default_value = "default")]
        suite: Suite,
        #[arg(long, env = SEED_ENV, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Largest space given exact doubling constants in certificates.
        #[arg(long, default_value_t = 16)]
        exact_cap: usize,
        #[arg(long, hide = true)]
        inject_failure: bool,
    },
    /// Write a generated space document.
    Generate(GenerateArgs),
    /// Cross-ratio and distance-ratio distortion of a map between two spaces.
    Distortion {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        /// Lines of `source_label target_label`; identity by position if omitted.
        #[arg(long)]
        map: Option<PathBuf>,
        #[arg(long, env = SEED_ENV, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
}

#[derive(Args, Debug)]
struct InvertArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    point: String,
    #[arg(long)]
    sphericalize: bool,
    /// Add the remote point before transforming.
    #[arg(long)]
    complete: bool,
    /// Write the transformed space document here instead of into the report.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Model {
    Cantor,
    Euclidean,
    Ray,
    Random,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RandomKind {
    Euclidean,
    Ultrametric,
    Grid,
    Graph,
    Quasi,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long)]
    model: Model,
    #[arg(long)]
    name: Option<String>,
    /// Alphabet size (cantor).
    #[arg(long)]
    k: Option<usize>,
    /// Word length (cantor).
    #[arg(long)]
    depth: Option<u32>,
    /// Scale factor in (0, 1) (cantor).
    #[arg(long)]
    a: Option<f64>,
    /// Points as `x,y;x,y;...` (euclidean).
    #[arg(long)]
    coords: Option<String>,
    /// Number of points (euclidean without coords, ray, random).
    #[arg(long)]
    n: Option<usize>,
    /// Dimension for random Euclidean points.
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long)]
    ulo: Option<f64>,
    #[arg(long)]
    uhi: Option<f64>,
    #[arg(long = "random-model", default_value = "ultrametric")]
    random_model: RandomKind,
    #[arg(long, default_value_t = 0.3)]
    jitter: f64,
    /// Quasi-metric constant for the quasi random model.
    #[arg(long = "quasi-k", default_value_t = 2.0)]
    quasi_k: f64,
    #[arg(long, env = SEED_ENV, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            // A closed pipe (e.g. `| head`) is not an error.
            if let Some(text) = &out.stdout {
                let _ = stdout.write_all(text.as_bytes());
            }
            if let Some(report) = &out.report {
                let json = report.to_json();
                if out.stdout.is_none() {
                    let _ = writeln!(stdout, "{json}");
                }
                if let Some(path) = &cli.report {
                    if let Err(e) = std::fs::write(path, format!("{json}\n")) {
                        eprintln!("error: cannot write {}: {e}", path.display());
                        return ExitCode::from(2);
                    }
                }
            }
            if let Some(msg) = &out.message {
                eprintln!("{msg}");
            }
            ExitCode::from(if out.ok { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
