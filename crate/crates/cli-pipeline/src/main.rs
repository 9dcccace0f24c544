//! Command-line frontend.
//!
//! Exit codes: 0 success, 1 validation/configuration failure, 2 stage
//! failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cli_pipeline::{
    feature_variants, generate_dataset, rerender_aggregate, run_experiment, ExperimentConfig,
    PipelineError,
};

#[derive(Parser)]
#[command(name = "endoflow", about = "Surgical-workflow recognition pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Overrides {
    /// Experiment configuration file (TOML). Defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the dataset directory.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Override the artifact output directory.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of runs.
    #[arg(long)]
    runs: Option<usize>,
    /// Override the decoding mode: offline|online|both.
    #[arg(long)]
    mode: Option<String>,
    /// Also evaluate the feature-variant comparison.
    #[arg(long)]
    variants: bool,
}

impl Overrides {
    fn resolve(&self) -> Result<ExperimentConfig, PipelineError> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(dataset) = &self.dataset {
            config.dataset.path = dataset.clone();
        }
        if let Some(output) = &self.output {
            config.run.output = output.clone();
        }
        if let Some(seed) = self.seed {
            config.run.seed = seed;
        }
        if let Some(runs) = self.runs {
            config.run.runs = runs;
        }
        if let Some(mode) = &self.mode {
            config.run.mode = mode.clone();
        }
        if self.variants {
            config.run.feature_variants = true;
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic dataset described by the configuration.
    Generate {
        #[command(flatten)]
        overrides: Overrides,
        /// Override the number of videos.
        #[arg(long)]
        videos: Option<usize>,
        /// Override the duration scale.
        #[arg(long)]
        scale: Option<f64>,
    },
    /// Validate a dataset directory; exits 1 on any diagnostic.
    Validate {
        /// Dataset directory.
        dataset: PathBuf,
    },
    /// Train all stages (pre-train, fine-tune, SVM, HHMM) for every run.
    Train {
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Train (resuming persisted stages), decode the evaluation folds, and
    /// write per-run and aggregate reports.
    Evaluate {
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Re-render the aggregate report from persisted per-run reports.
    Report {
        #[command(flatten)]
        overrides: Overrides,
    },
}

fn exit_code_for(err: &PipelineError) -> ExitCode {
    match err {
        PipelineError::Config(_) | PipelineError::ValidationFailed(_) => ExitCode::from(1),
        _ => ExitCode::from(2),
    }
}

fn run(command: Command) -> Result<(), PipelineError> {
    match command {
        Command::Generate {
            overrides,
            videos,
            scale,
        } => {
            let mut config = overrides.resolve()?;
            if let Some(videos) = videos {
                config.dataset.videos = videos;
            }
            if let Some(scale) = scale {
                config.dataset.scale = scale;
            }
            let dataset = generate_dataset(&config)?;
            println!(
                "generated {} videos ({} frames) in {}",
                dataset.videos.len(),
                dataset.videos.iter().map(|v| v.frames.len()).sum::<usize>(),
                config.dataset.path.display()
            );
            Ok(())
        }
        Command::Validate { dataset } => {
            let diags = synth_corpus::validate_dataset(&dataset);
            if diags.is_empty() {
                println!("{}: ok", dataset.display());
                Ok(())
            } else {
                for d in &diags {
                    eprintln!("{d}");
                }
                Err(PipelineError::ValidationFailed(diags.len()))
            }
        }
        Command::Train { overrides } => {
            let config = overrides.resolve()?;
            let dataset = cli_pipeline::load_dataset(&config)?;
            std::fs::create_dir_all(&config.run.output)?;
            std::fs::write(
                config.run.output.join("config.resolved.toml"),
                config.resolved_toml(),
            )?;
            for run in 0..config.run.runs {
                let trained = cli_pipeline::train_run(&config, &dataset, run)?;
                println!("run {run}: artifacts in {}", trained.artifacts.dir.display());
            }
            Ok(())
        }
        Command::Evaluate { overrides } => {
            let config = overrides.resolve()?;
            let outcome = run_experiment(&config)?;
            print!("{}", outcome.aggregate);
            if config.run.feature_variants {
                feature_variants(&config)?;
                println!(
                    "variant table written to {}",
                    config.run.output.join("variants.txt").display()
                );
            }
            Ok(())
        }
        Command::Report { overrides } => {
            let config = overrides.resolve()?;
            let text = rerender_aggregate(&config)?;
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code_for(&err)
        }
    }
}
