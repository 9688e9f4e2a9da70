use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use lesionforge::poissonblend::{GuidanceMode, DEFAULT_TOLERANCE};
use lesionforge_cli::commands::{self, Metrics, Task};
use lesionforge_cli::config::Config;
use lesionforge_cli::output::resolve_jobs;
use lesionforge_cli::CliError;

#[derive(Parser)]
#[command(name = "lesionforge", version, about = "Synthetic skin-lesion data with exact correspondence ground truth")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Detect,
    Track,
}

impl From<ModeArg> for Task {
    fn from(m: ModeArg) -> Task {
        match m {
            ModeArg::Detect => Task::Detect,
            ModeArg::Track => Task::Track,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BlendArg {
    Import,
    Mixed,
}

#[derive(Subcommand)]
enum Command {
    /// Write procedural body and lesion assets.
    GenAssets {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of bodies (default from the config).
        #[arg(long)]
        count: Option<usize>,
    },
    /// Generate detection samples and their manifest.
    SynthDetect {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        assets: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Build one tracking pair per sample of a detection manifest.
    SynthTrack {
        /// Detection manifest file or directory.
        #[arg(long)]
        manifest: PathBuf,
        /// Pair settings; defaults to the config embedded in the manifest.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Run the sliding-window detector or the NCC tracker.
    Baseline {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Detect mode: the first N samples train, the rest are predicted.
        #[arg(long)]
        split: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Predictions JSON to write.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Score predictions: ROC for detect, PCK for track.
    Eval {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Metrics JSON to write.
        #[arg(long)]
        out: PathBuf,
        /// Directory for overlay PNGs.
        #[arg(long)]
        overlay: Option<PathBuf>,
    },
    /// Seamlessly clone a masked source region into a target image.
    PoissonClone {
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        mask: PathBuf,
        /// Placement of the source origin in the target, as `x,y`.
        #[arg(long, value_parser = parse_offset, default_value = "0,0", allow_hyphen_values = true)]
        offset: (i64, i64),
        #[arg(long, value_enum, default_value = "import")]
        mode: BlendArg,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tol: f64,
        /// Conjugate-gradient iteration cap (default 10 * sqrt(n) + 1000).
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_offset(s: &str) -> Result<(i64, i64), String> {
    let (x, y) = s.split_once(',').ok_or("expected x,y")?;
    Ok((x.trim().parse().map_err(|e| format!("{e}"))?, y.trim().parse().map_err(|e| format!("{e}"))?))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::GenAssets { config, out, seed, count } => {
            let cfg = Config::load(config.as_deref())?;
            let cat = commands::cmd_gen_assets(&cfg, &out, seed, count)?;
            log::info!("wrote {} bodies and {} lesions", cat.bodies.len(), cat.lesions.len());
        }
        Command::SynthDetect { config, assets, out, count, seed, jobs } => {
            let cfg = Config::load(config.as_deref())?;
            let jobs = resolve_jobs(jobs)?;
            let m = commands::cmd_synth_detect(&cfg, &assets, &out, count, seed, jobs)?;
            log::info!("wrote {} samples", m.samples.len());
        }
        Command::SynthTrack { manifest, config, out, seed, jobs } => {
            let cfg = config.as_deref().map(|p| Config::load(Some(p))).transpose()?;
            let jobs = resolve_jobs(jobs)?;
            let m = commands::cmd_synth_track(cfg.as_ref(), &manifest, &out, seed, jobs)?;
            log::info!("wrote {} pairs", m.pairs.len());
        }
        Command::Baseline { manifest, mode, config, split, seed, out, jobs } => {
            let cfg = Config::load(config.as_deref())?;
            let jobs = resolve_jobs(jobs)?;
            commands::cmd_baseline(&cfg, &manifest, mode.into(), split, seed, &out, jobs)?;
        }
        Command::Eval { manifest, predictions, mode, config, out, overlay } => {
            let cfg = Config::load(config.as_deref())?;
            match commands::cmd_eval(&cfg, &manifest, &predictions, mode.into(), &out, overlay.as_deref())? {
                Metrics::Detect(d) => println!("{}", serde_json::json!({ "auc": d.roc.auc, "truths": d.roc.truths })),
                Metrics::Track(t) => println!("{}", serde_json::json!({ "pck": t.pck.points, "invalid": t.invalid })),
            }
        }
        Command::PoissonClone { target, source, mask, offset, mode, tol, max_iter, out } => {
            let mode = match mode {
                BlendArg::Import => GuidanceMode::Import,
                BlendArg::Mixed => GuidanceMode::Mixed,
            };
            let r = commands::cmd_poisson_clone(&target, &source, &mask, offset, mode, tol, max_iter, &out)?;
            if r.eroded > 0 {
                log::warn!("{} mask pixels on the source border were eroded", r.eroded);
            }
            println!("{}", serde_json::to_string(&r.report).expect("report serializes"));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if let CliError::NotConverged(report) = &e {
                println!("{}", serde_json::to_string(report).expect("report serializes"));
            }
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
