//! Thin command-line front end over the library. Exit codes: 0 success,
//! 2 config error, 3 data error, 4 one or more model failures (the partial
//! bundle is still written).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use recbench::data::write_ncf_split;
use recbench::harness::{
    emit_reports, init_thread_pool, load_bundle, run_experiment, sweep, sweep_table,
    ExperimentConfig, RunOptions, SplitConfig, OUT_DIR_ENV,
};
use recbench::models::container::save_model;
use recbench::Error;

#[derive(Parser)]
#[command(name = "recbench", version, about = "Implicit-feedback recommender benchmark")]
struct Cli {
    /// Size of the worker pool; 1 gives fully sequential, bit-reproducible
    /// runs.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Allow configs whose dataset block is marked heavy.
    #[arg(long, global = true)]
    heavy: bool,
    /// Replace every model seed with this value.
    #[arg(long, global = true)]
    seed_override: Option<u64>,
    /// Output directory (overrides the config and the RECBENCH_OUT_DIR
    /// environment variable).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Build or validate the dataset split and report its shape.
    Prepare {
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Fit one model and store it as a container file.
    Train {
        #[command(flatten)]
        config: ConfigArg,
        /// Model name as configured.
        #[arg(long)]
        model: String,
    },
    /// Fit and evaluate the selected models; emit metric tables.
    Evaluate {
        #[command(flatten)]
        config: ConfigArg,
        /// Comma-separated subset of configured models.
        #[arg(long, value_delimiter = ',')]
        only: Option<Vec<String>>,
    },
    /// Full multi-model comparison incl. significance heatmaps.
    Compare {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, value_delimiter = ',')]
        only: Option<Vec<String>>,
    },
    /// Run the configured models and emit only the significance heatmaps.
    Significance {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, value_delimiter = ',')]
        only: Option<Vec<String>>,
    },
    /// Train/evaluate one embedding model across dimensions (curve data).
    Sweep {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        model: String,
        /// Comma-separated embedding dimensions.
        #[arg(long, value_delimiter = ',')]
        dims: Vec<usize>,
    },
    /// Re-emit reports from a stored bundle file.
    Report {
        /// Path to a `<dataset>_bundle.json` produced by compare/evaluate.
        #[arg(long)]
        bundle: PathBuf,
        /// Formats to emit.
        #[arg(long, value_delimiter = ',', default_values_t = vec!["tsv".to_string()])]
        format: Vec<String>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = init_thread_pool(threads) {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    let options = RunOptions {
        only: None,
        allow_heavy: cli.heavy,
        seed_override: cli.seed_override,
    };
    match cli.command {
        Command::Prepare { config } => {
            let config = ExperimentConfig::load(&config.config)?;
            let (pack, profile) = config.load_dataset()?;
            println!(
                "dataset {}: {} users, {} items, {} train interactions",
                config.dataset.name,
                pack.train.num_users(),
                pack.train.num_items(),
                pack.train.nnz()
            );
            println!(
                "test users: {}, candidate_count: {}, head size: {}",
                pack.num_test_users(),
                pack.candidate_count,
                profile.head_size()
            );
            if let SplitConfig::TemporalLoo { .. } = &config.dataset.split {
                let dir = out_dir(&cli.out, &config);
                write_ncf_split(&pack, &dir, &config.dataset.name)?;
                println!(
                    "wrote {0}.train.rating / {0}.test.rating / {0}.test.negative under {1}",
                    config.dataset.name,
                    dir.display()
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Train { config, model } => {
            let config = ExperimentConfig::load(&config.config)?;
            let specs = config.model_specs()?;
            let (_, spec) = specs
                .iter()
                .find(|(name, _)| *name == model)
                .ok_or_else(|| Error::Config(format!("model {model:?} is not configured")))?;
            let spec = match cli.seed_override {
                Some(seed) => spec.clone().with_seed(seed),
                None => spec.clone(),
            };
            let (pack, _) = config.load_dataset()?;
            let fitted = spec.fit(&pack)?;
            let dir = out_dir(&cli.out, &config);
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
            let path = dir.join(format!("{}_{}.rbm", config.dataset.name, model));
            save_model(&fitted, &path)?;
            println!("saved {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
        command @ (Command::Evaluate { .. } | Command::Compare { .. }) => {
            let (config, only, with_significance) = match command {
                Command::Evaluate { config, only } => (config, only, false),
                Command::Compare { config, only } => (config, only, true),
                _ => unreachable!(),
            };
            let mut config = ExperimentConfig::load(&config.config)?;
            if !with_significance {
                config.evaluation.significance_metrics.clear();
            }
            let options = RunOptions { only, ..options };
            let bundle = run_experiment(&config, &options)?;
            let dir = out_dir(&cli.out, &config);
            let written = emit_reports(&bundle, &dir, &config.output.formats)?;
            for path in written {
                println!("wrote {}", path.display());
            }
            if bundle.has_failures() {
                for (model, message) in &bundle.failures {
                    eprintln!("model {model} failed: {message}");
                }
                return Ok(ExitCode::from(4));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Significance { config, only } => {
            let config = ExperimentConfig::load(&config.config)?;
            let options = RunOptions { only, ..options };
            let bundle = run_experiment(&config, &options)?;
            let dir = out_dir(&cli.out, &config);
            for record in &bundle.significance {
                println!(
                    "{} @ threshold {}: {} algorithms",
                    record.metric,
                    record.threshold,
                    record.algorithms.len()
                );
            }
            let written = emit_reports(&bundle, &dir, &["tsv".to_string()])?;
            for path in written
                .iter()
                .filter(|p| p.to_string_lossy().contains("significance"))
            {
                println!("wrote {}", path.display());
            }
            if bundle.has_failures() {
                return Ok(ExitCode::from(4));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep {
            config,
            model,
            dims,
        } => {
            let config = ExperimentConfig::load(&config.config)?;
            let data = sweep(&config, &model, &dims, cli.heavy)?;
            let dir = out_dir(&cli.out, &config);
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
            let path = dir.join(format!("{}_sweep_{}.tsv", config.dataset.name, model));
            std::fs::write(&path, sweep_table(&data))
                .map_err(|e| Error::io(path.display().to_string(), e))?;
            println!("wrote {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { bundle, format } => {
            let bundle = load_bundle(&bundle)?;
            let dir = cli
                .out
                .clone()
                .or_else(|| std::env::var(OUT_DIR_ENV).ok().map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("."));
            let written = emit_reports(&bundle, &dir, &format)?;
            for path in written {
                println!("wrote {}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn out_dir(flag: &Option<PathBuf>, config: &ExperimentConfig) -> PathBuf {
    flag.clone()
        .or_else(|| std::env::var(OUT_DIR_ENV).ok().map(PathBuf::from))
        .unwrap_or_else(|| config.output.dir.clone())
}
