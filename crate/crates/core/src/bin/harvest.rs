use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use harvest_core::metrics::evaluate_dirs;
use harvest_core::pipeline::{bench_report, process_frame_dir, PipelineConfig};
use harvest_core::synth::{render_frame, SceneSpec};
use harvest_core::{Error, Result};

#[derive(Parser)]
#[command(name = "harvest", version, about = "Fruit localisation and pick planning from RGB-D frames")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Process one frame directory into a pick list and obstacle maps.
    Process {
        #[arg(long)]
        frame: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a synthetic frame from a scene description.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Score predicted label masks against ground truth.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        classes: usize,
        /// Also write the report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Per-stage timing over every frame subdirectory.
    Bench {
        #[arg(long)]
        frames: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn config(path: Option<&Path>) -> Result<PipelineConfig> {
    path.map_or_else(|| Ok(PipelineConfig::default()), PipelineConfig::load)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Process { frame, config: cfg, out } => {
            let cfg = config(cfg.as_deref())?;
            let r = process_frame_dir(&frame, &cfg, &out)?;
            let pickable = r.fruits.iter().filter(|f| f.can_pick()).count();
            println!(
                "{}: {} fruits ({} pickable), {} rejected, {:.1} ms -> {}",
                r.frame_id,
                r.fruits.len(),
                pickable,
                r.rejected.len(),
                r.timings.total().as_secs_f64() * 1e3,
                out.display()
            );
        }
        Command::Synth { spec, out, seed } => {
            let scene = SceneSpec::load(&spec)?;
            let truth = render_frame(&scene, seed, &out)?;
            println!("rendered {} fruits -> {}", truth.fruits.len(), out.display());
        }
        Command::Eval {
            pred,
            truth,
            classes,
            json,
        } => {
            let report = evaluate_dirs(&pred, &truth, classes)?;
            print!("{}", report.text());
            if let Some(path) = json {
                let text = serde_json::to_string_pretty(&report).expect("report serializes");
                fs::write(&path, text + "\n").map_err(|e| Error::Io { path, source: e })?;
            }
        }
        Command::Bench { frames, config: cfg } => {
            let cfg = config(cfg.as_deref())?;
            print!("{}", bench_report(&frames, &cfg)?.table());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
