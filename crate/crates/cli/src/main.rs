//! `facecue` command line: split, extract-features, augment, train, predict,
//! evaluate, plus `synth` to produce a synthetic landmark file.
//!
//! Every command writes `<output>.manifest.json` next to its main output.
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 protocol violation.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use facecue::ingestion::{
    self, read_labeled_landmark_csv, read_landmark_csv, write_angle_csv, write_landmark_csv,
};
use facecue::pipeline::{self, exit_code, InputDigest, PipelineError};
use facecue::synthetic::{synthetic_dataset, SyntheticConfig};
use facecue::{
    augment_dataset, AngleExtractor, AugmentationConfig, ForestConfig, ModelBundle, OriginIndex,
    RunManifest, TrainConfig,
};
use log::info;

#[derive(Parser)]
#[command(
    name = "facecue",
    version,
    about = "Classify ASL assertions and statements from facial landmarks"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct Global {
    /// Seed for every random stage.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Landmark used as the angle origin (8 is the chin).
    #[arg(long, global = true, default_value_t = 8)]
    origin_index: usize,
    /// Number of principal components.
    #[arg(long, global = true, default_value_t = 4)]
    k: usize,
    #[arg(long, global = true, default_value_t = 100)]
    n_trees: usize,
    /// Depth limit of each tree; unlimited when omitted.
    #[arg(long, global = true)]
    max_depth: Option<usize>,
    /// Share of frames that go to the training split.
    #[arg(long, global = true, default_value_t = 0.7)]
    train_fraction: f64,
    /// Reject frames where a landmark coincides with the origin.
    #[arg(long, global = true)]
    strict_degenerate: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Stratified train/test split of a labeled landmark CSV.
    Split {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        train_out: PathBuf,
        #[arg(long)]
        test_out: PathBuf,
    },
    /// Landmark CSV to angle CSV.
    ExtractFeatures {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Write each training frame followed by its augmented copies.
    Augment {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = AugmentationConfig::default().copies_per_frame)]
        copies: usize,
    },
    /// Fit PCA and the forest; or replay a recorded run with --manifest.
    Train {
        #[arg(
            long,
            required_unless_present = "manifest",
            conflicts_with = "manifest"
        )]
        input: Option<PathBuf>,
        #[arg(long)]
        model: PathBuf,
        /// Replay the run recorded in this manifest.
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long, default_value_t = AugmentationConfig::default().copies_per_frame)]
        copies: usize,
        /// Train on the frames as given.
        #[arg(long)]
        no_augment: bool,
    },
    /// Predict the class of every frame in a landmark CSV.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Score a model on a labeled test CSV and write a JSON report.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Generate a synthetic two-class landmark CSV.
    Synth {
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = SyntheticConfig::default().frames)]
        frames: usize,
    },
}

fn origin(global: &Global) -> Result<OriginIndex, PipelineError> {
    Ok(OriginIndex::new(global.origin_index)?)
}

fn manifest(
    command: &str,
    global: &Global,
    inputs: &[&Path],
    outputs: &[&Path],
) -> Result<RunManifest, PipelineError> {
    let mut m = RunManifest::new(command, global.seed);
    m.strict_degenerate = global.strict_degenerate;
    for path in inputs {
        m.inputs.push(InputDigest::of(path)?);
    }
    m.outputs = outputs.iter().map(|p| p.display().to_string()).collect();
    Ok(m)
}

fn train_config(
    global: &Global,
    copies: usize,
    augment: bool,
) -> Result<TrainConfig, PipelineError> {
    let mut config = TrainConfig {
        k: global.k,
        origin: origin(global)?,
        strict_degenerate: global.strict_degenerate,
        augmentation: augment.then(|| AugmentationConfig {
            copies_per_frame: copies,
            ..AugmentationConfig::default()
        }),
        forest: ForestConfig {
            n_trees: global.n_trees,
            max_depth: global.max_depth,
            ..ForestConfig::default()
        },
    };
    config.set_seed(global.seed);
    Ok(config)
}

fn run(command: Command, global: Global) -> Result<(), PipelineError> {
    match command {
        Command::Split {
            input,
            train_out,
            test_out,
        } => {
            let data = read_labeled_landmark_csv(&input)?;
            let (train, test) = pipeline::split(&data, global.train_fraction, global.seed)?;
            write_landmark_csv(&train_out, train.frames())?;
            write_landmark_csv(&test_out, test.frames())?;
            let mut m = manifest("split", &global, &[&input], &[&train_out, &test_out])?;
            m.train_fraction = Some(global.train_fraction);
            m.stratified = true;
            m.save(RunManifest::path_for(&train_out))?;
            println!("train {} frames, test {} frames", train.len(), test.len());
        }
        Command::ExtractFeatures { input, output } => {
            let frames = read_landmark_csv(&input)?;
            let extractor = AngleExtractor::new(origin(&global)?, global.strict_degenerate);
            let vectors = extractor.extract_all(&frames)?;
            write_angle_csv(&output, vectors.iter().zip(frames.iter().map(|f| f.label)))?;
            let mut m = manifest("extract-features", &global, &[&input], &[&output])?;
            m.origin = Some(extractor.origin);
            m.save(RunManifest::path_for(&output))?;
            println!("{} angle vectors", vectors.len());
        }
        Command::Augment {
            input,
            output,
            copies,
        } => {
            let data = read_labeled_landmark_csv(&input)?;
            let config = AugmentationConfig {
                copies_per_frame: copies,
                seed: global.seed,
                ..AugmentationConfig::default()
            };
            let augmented = augment_dataset(&data, &config)?;
            write_landmark_csv(&output, augmented.frames())?;
            let mut m = manifest("augment", &global, &[&input], &[&output])?;
            m.augmentation = Some(config);
            m.save(RunManifest::path_for(&output))?;
            println!("{} -> {} frames", data.len(), augmented.len());
        }
        Command::Train {
            input,
            model,
            manifest: recorded,
            copies,
            no_augment,
        } => {
            let mut m = if let Some(recorded) = recorded {
                let mut m = RunManifest::load(&recorded)?;
                pipeline::replay_train(&m, &model)?;
                m.outputs = vec![model.display().to_string()];
                m
            } else {
                let input = input.expect("clap requires --input without --manifest");
                let config = train_config(&global, copies, !no_augment)?;
                pipeline::train_file(&input, &config, &model)?.1
            };
            m.origin = m.train.map(|t| t.origin);
            m.augmentation = m.train.and_then(|t| t.augmentation);
            m.strict_degenerate = m.train.is_some_and(|t| t.strict_degenerate);
            m.save(RunManifest::path_for(&model))?;
            println!("model written to {}", model.display());
        }
        Command::Predict {
            model,
            input,
            output,
        } => {
            let bundle = ModelBundle::load(&model)?;
            let frames = read_landmark_csv(&input)?;
            let predictions = pipeline::predict(&bundle, &frames)?;
            pipeline::write_predictions(BufWriter::new(File::create(&output)?), &predictions)?;
            let mut m = manifest("predict", &global, &[&model, &input], &[&output])?;
            m.origin = Some(bundle.origin);
            m.strict_degenerate = bundle.strict_degenerate;
            m.save(RunManifest::path_for(&output))?;
            println!("{} predictions", predictions.len());
        }
        Command::Evaluate {
            model,
            input,
            output,
        } => {
            let report = pipeline::evaluate_file(&model, &input)?;
            let mut text = serde_json::to_string_pretty(&report.to_json())?;
            text.push('\n');
            std::fs::write(&output, text)?;
            manifest("evaluate", &global, &[&model, &input], &[&output])?
                .save(RunManifest::path_for(&output))?;
            print!("{report}");
        }
        Command::Synth { output, frames } => {
            let config = SyntheticConfig {
                frames,
                seed: global.seed,
                ..SyntheticConfig::default()
            };
            let data = synthetic_dataset(&config);
            ingestion::write_landmark_csv(&output, data.frames())?;
            manifest("synth", &global, &[], &[&output])?.save(RunManifest::path_for(&output))?;
            let [a, s] = data.class_counts();
            println!("{} frames ({a} AS, {s} ST)", data.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                exit_code::USAGE as u8
            } else {
                0
            });
        }
    };
    match run(cli.command, cli.global) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            info!("{e:?}");
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
