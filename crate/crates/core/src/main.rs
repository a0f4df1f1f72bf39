use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use myopic_cpp::experiment::suite::{render_episode_dir, MAP_FILE, RESULTS_FILE};
use myopic_cpp::experiment::{parse_config, parse_terrain_spec, run_suite, ExperimentConfig, SuiteSummary};
use myopic_cpp::terrain::generate_terrain;

/// Myopic coverage planning on raster terrain.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured planner weights on every seed.
    Run {
        config: PathBuf,
        /// Run this seed instead of the configured ones.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run every sweep weight pair on every seed.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Re-render the map of an episode directory.
    Render {
        episode_dir: PathBuf,
        /// Output image; defaults to map.ppm inside the episode directory.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Generate a heightfield from a terrain description.
    GenTerrain { spec: PathBuf, out: PathBuf },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Run { config, seed } => {
            let mut cfg = load_config(&config, seed)?;
            cfg.sweep = None;
            suite(&cfg)
        }
        Command::Sweep { config, seed } => {
            let cfg = load_config(&config, seed)?;
            if cfg.sweep.is_none() {
                return Err(format!("{}: no sweep pairs configured", config.display()));
            }
            suite(&cfg)
        }
        Command::Render { episode_dir, output } => {
            let img = render_episode_dir(&episode_dir).map_err(|e| e.to_string())?;
            let out = output.unwrap_or_else(|| episode_dir.join(MAP_FILE));
            fs::write(&out, img.to_ppm()).map_err(|e| format!("{}: {e}", out.display()))?;
            println!("wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::GenTerrain { spec, out } => {
            let f = File::open(&spec).map_err(|e| format!("{}: {e}", spec.display()))?;
            let spec = parse_terrain_spec(BufReader::new(f)).map_err(|e| format!("{}: {e}", spec.display()))?;
            let field = generate_terrain(&spec).map_err(|e| e.to_string())?;
            let f = File::create(&out).map_err(|e| format!("{}: {e}", out.display()))?;
            field.write_hfld(f).map_err(|e| format!("{}: {e}", out.display()))?;
            println!("wrote {} ({}x{})", out.display(), field.rows(), field.cols());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, String> {
    let f = File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut cfg = parse_config(BufReader::new(f)).map_err(|e| format!("{}: {e}", path.display()))?;
    cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
    if let Some(s) = seed {
        cfg.seeds = vec![s];
    }
    Ok(cfg)
}

fn suite(cfg: &ExperimentConfig) -> Result<ExitCode, String> {
    let summary = run_suite(cfg).map_err(|e| e.to_string())?;
    print_summary(&summary);
    println!("wrote {}", cfg.output_dir.join(RESULTS_FILE).display());
    Ok(if summary.all_covered() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn print_summary(s: &SuiteSummary) {
    println!(
        "{:>6} {:>5} {:>5} {:>8} {:>7} {:>10} {:>9} {:>6}  terminated_by",
        "seed", "alpha", "beta", "coverage", "ratio", "e_total", "max_pitch", "steps"
    );
    for r in &s.rows {
        println!(
            "{:>6} {:>5} {:>5} {:>8.4} {:>7.3} {:>10.1} {:>9.2} {:>6}  {}",
            r.seed, r.alpha, r.beta, r.coverage, r.path_length_ratio, r.e_total, r.max_pitch_deg, r.steps, r.terminated_by
        );
    }
}
