use std::path::PathBuf;
use std::process::ExitCode;

use adaptive_hash::commands::{self, TrainOptions};
use adaptive_hash::{dataset, CliError, Result, RunConfig, Threads};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "adaptive-hash", version, about = "Neural SDF reconstruction with spatially-adaptive hash encodings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a synthetic posed-image dataset of an analytic scene.
    Generate {
        #[arg(long)]
        scene: String,
        #[arg(long, default_value_t = 48)]
        views: usize,
        #[arg(long, default_value_t = 128)]
        res: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a model; writes checkpoint.bin, metrics.csv and config.json.
    Train(TrainArgs),
    /// Extract the zero level set as OBJ or PLY.
    ExtractMesh {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = commands::DEFAULT_EXTRACT_RESOLUTION)]
        resolution: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Volume-render a dataset view with the trained model.
    Render {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 0)]
        view: usize,
        #[arg(long, default_value_t = commands::DEFAULT_RENDER_SAMPLES)]
        samples: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Chamfer-L1 of the extracted mesh against the analytic surface.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        scene: String,
        #[arg(long, default_value_t = commands::DEFAULT_EVAL_POINTS)]
        points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = commands::DEFAULT_EXTRACT_RESOLUTION)]
        resolution: usize,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render mask heat maps for frequency bands of grid levels.
    DumpMasks {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 0)]
        view: usize,
        /// Band of levels as FIRST-LAST, 1-based and inclusive; repeatable.
        /// Defaults to the low, mid and high bands.
        #[arg(long = "band")]
        bands: Vec<String>,
        #[arg(long, default_value_t = commands::DEFAULT_RENDER_SAMPLES)]
        samples: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct TrainArgs {
    /// Flat JSON run configuration; omitted keys take the preset values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset directory (overrides `dataset`).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Output directory (overrides `out_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    steps: Option<u64>,
    /// learned, pinned or none.
    #[arg(long)]
    mask: Option<String>,
    /// sigmoid or softmax.
    #[arg(long)]
    mask_activation: Option<String>,
    /// Any configuration key, as KEY=VALUE; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Continue from the checkpoint in the output directory.
    #[arg(long)]
    resume: bool,
    /// Stop after this many total steps, leaving a resumable checkpoint.
    #[arg(long)]
    stop_at: Option<u64>,
    #[arg(long, short)]
    quiet: bool,
}

fn run_config(args: &TrainArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::from_json_str("{}")?,
    };
    for kv in &args.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got '{kv}'")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    let flags = [
        ("seed", args.seed.map(|v| v.to_string())),
        ("steps", args.steps.map(|v| v.to_string())),
        ("mask", args.mask.clone()),
        ("mask_activation", args.mask_activation.clone()),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            cfg.set(k, &v)?;
        }
    }
    if let Some(d) = &args.data {
        cfg.dataset = Some(d.clone());
    }
    if let Some(o) = &args.out {
        cfg.out_dir = o.clone();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let exec = Threads::from_env().map_err(CliError::Usage)?;
    match cli.command {
        Command::Generate { scene, views, res, seed, out } => commands::generate(&scene, views, res, seed, &out, &exec),
        Command::Train(args) => {
            let cfg = run_config(&args)?;
            let data_dir = cfg
                .dataset
                .clone()
                .ok_or_else(|| CliError::Config("no dataset: set 'dataset' or pass --data".into()))?;
            let (_, data) = dataset::load(&data_dir)?;
            let opts = TrainOptions {
                resume: args.resume,
                stop_at: args.stop_at,
                verbose: !args.quiet,
            };
            let outcome = commands::train(&cfg, &data, &opts, &exec)?;
            if !args.quiet {
                eprintln!("wrote {} at step {}", outcome.checkpoint.display(), outcome.step);
            }
            Ok(())
        }
        Command::ExtractMesh { checkpoint, resolution, out } => {
            commands::extract_mesh(&checkpoint, resolution, &out, &exec).map(|_| ())
        }
        Command::Render { checkpoint, data, view, samples, out } => {
            commands::render(&checkpoint, &data, view, samples, &out, &exec)
        }
        Command::Eval { checkpoint, scene, points, seed, resolution, out } => {
            let report = commands::eval(&checkpoint, &scene, points, seed, resolution, &exec)?;
            let text = commands::eval_json(&report);
            match out {
                Some(p) => std::fs::write(&p, text).map_err(|e| CliError::io(&p, e)),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
        Command::DumpMasks { checkpoint, data, view, bands, samples, out } => {
            let bands = if bands.is_empty() {
                let levels = adaptive_hash::checkpoint::Checkpoint::load(&checkpoint)?.header.config.levels;
                commands::default_bands(levels)
            } else {
                bands
                    .iter()
                    .map(|s| {
                        let r = commands::parse_band(s)?;
                        Ok((format!("{}-{}", r.start(), r.end()), r))
                    })
                    .collect::<Result<Vec<_>>>()?
            };
            commands::dump_masks(&checkpoint, &data, view, &bands, samples, &out, &exec).map(|_| ())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
