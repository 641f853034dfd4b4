use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use aliasmine_core::classifier::{
    cross_validate_par, ClassifierConfig, ClassifierKind, DEFAULT_VARIANCE_FLOOR,
};
use aliasmine_core::dataset::{
    extract_features, filter_min_traces, io as dio, FactionDictionary, SurrogateManifest,
};
use aliasmine_core::evaluation::{evaluate, GroundTruth, Tier, DEFAULT_CUTOFF};
use aliasmine_core::matrix::NormalizedConfusionMatrix;
use aliasmine_core::miner::{
    mine_par, pairs_to_json, read_pairs_csv, write_pairs_csv, MiningConfig,
};
use aliasmine_core::pipeline::{self, PipelineConfig};
use aliasmine_core::synthetic::{generate, SyntheticSpec};
use aliasmine_core::Parallelism;

#[derive(Parser)]
#[command(
    name = "aliasmine",
    version,
    about = "Mine avatar aliases from game-trace confusion matrices"
)]
struct Cli {
    /// Run folds and cluster scoring on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassifierName {
    Knn,
    NaiveBayes,
}

#[derive(Subcommand)]
enum Command {
    /// Turn event and metadata tables into a feature CSV.
    Extract {
        events: PathBuf,
        meta: PathBuf,
        /// Truncation horizon in seconds.
        #[arg(long)]
        tau: f64,
        /// Faction names in code order (comma separated).
        #[arg(long, value_delimiter = ',')]
        factions: Option<Vec<String>>,
        /// Defaults to stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Cross-validate a classifier and write the confusion counts as JSON.
    Classify {
        features: PathBuf,
        #[arg(long, value_enum, default_value = "knn")]
        classifier: ClassifierName,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Drop avatars with fewer traces first.
        #[arg(long, default_value_t = 1)]
        theta: usize,
        /// Neighbours for knn.
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = DEFAULT_VARIANCE_FLOOR)]
        variance_floor: f64,
        /// Accept avatars with fewer traces than folds.
        #[arg(long)]
        allow_sparse_classes: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Also write the row-normalized matrix here.
        #[arg(long)]
        normalized: Option<PathBuf>,
    },
    /// Rank alias pairs from a confusion matrix (counts or normalized JSON).
    Mine {
        confusion: PathBuf,
        #[arg(long, default_value_t = 0.9)]
        lambda: f64,
        #[arg(long, default_value_t = 0.0)]
        min_score: f64,
        #[arg(long, default_value_t = 100)]
        top_k: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Also write the ranking as JSON with concept provenance.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Score a ranking against surrogate, account and name ground truth.
    Evaluate {
        pairs: PathBuf,
        meta: PathBuf,
        surrogates: PathBuf,
        #[arg(long, default_value = "SUG")]
        tier: Tier,
        /// Confusion JSON whose labels define the evaluated avatar set.
        #[arg(long)]
        confusion: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_CUTOFF)]
        cutoff: usize,
        #[arg(long, value_delimiter = ',')]
        factions: Option<Vec<String>>,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Also write `rank,a,b,score,cluster_score,evidence` here.
        #[arg(long)]
        labeled: Option<PathBuf>,
    },
    /// Run every stage from a TOML config and write all artifacts.
    Pipeline { config: PathBuf },
    /// Generate synthetic event and metadata tables.
    Synth {
        #[arg(long, default_value_t = 50)]
        avatars: usize,
        #[arg(long, default_value_t = 30)]
        traces: usize,
        #[arg(long, default_value_t = 90.0)]
        tau: f64,
        #[arg(long, default_value_t = 0)]
        alias_pairs: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        events: PathBuf,
        #[arg(long)]
        meta: PathBuf,
    },
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| {
        format!("cannot open {}", path.display())
    })?))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

/// Writes to `path`, or stdout when absent.
fn emit(path: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let file = File::create(p).with_context(|| format!("cannot create {}", p.display()))?;
            let mut w = BufWriter::new(file);
            write(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            write(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn emit_text(path: Option<&Path>, text: &str) -> Result<()> {
    emit(path, |w| Ok(writeln!(w, "{text}")?))
}

fn factions(names: Option<Vec<String>>) -> FactionDictionary {
    names.map(FactionDictionary::new).unwrap_or_default()
}

fn load_normalized(path: &Path) -> Result<NormalizedConfusionMatrix> {
    NormalizedConfusionMatrix::from_any_json(&read_text(path)?)
        .with_context(|| format!("{}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    let par = if cli.sequential {
        Parallelism::Sequential
    } else {
        Parallelism::default()
    };
    match cli.command {
        Command::Extract {
            events,
            meta,
            tau,
            factions: names,
            output,
        } => {
            let events = dio::read_events(open(&events)?)
                .with_context(|| format!("{}", events.display()))?;
            let meta = dio::read_meta(open(&meta)?, &factions(names))
                .with_context(|| format!("{}", meta.display()))?;
            let features = extract_features(&events, tau, &meta)?;
            emit(output.as_deref(), |w| {
                Ok(dio::write_features(w, &features)?)
            })?;
        }
        Command::Classify {
            features,
            classifier,
            folds,
            seed,
            theta,
            k,
            variance_floor,
            allow_sparse_classes,
            output,
            normalized,
        } => {
            let kind = match classifier {
                ClassifierName::Knn => ClassifierKind::Knn { k },
                ClassifierName::NaiveBayes => ClassifierKind::NaiveBayes { variance_floor },
            };
            let config = ClassifierConfig {
                kind,
                folds,
                seed,
                allow_sparse_classes,
            };
            let dataset = dio::read_features(open(&features)?)
                .with_context(|| format!("{}", features.display()))?;
            let dataset = filter_min_traces(dataset, theta)?;
            let confusion = cross_validate_par(&dataset, &config, par)?;
            emit_text(output.as_deref(), &confusion.to_json())?;
            if let Some(path) = normalized {
                emit_text(Some(&path), &confusion.normalize()?.to_json())?;
            }
        }
        Command::Mine {
            confusion,
            lambda,
            min_score,
            top_k,
            output,
            json,
        } => {
            let matrix = load_normalized(&confusion)?;
            let pairs = mine_par(
                &matrix,
                &MiningConfig {
                    lambda,
                    min_score,
                    top_k,
                },
                par,
            )?;
            emit(output.as_deref(), |w| Ok(write_pairs_csv(w, &pairs)?))?;
            if let Some(path) = json {
                emit_text(Some(&path), &pairs_to_json(&pairs))?;
            }
        }
        Command::Evaluate {
            pairs,
            meta,
            surrogates,
            tier,
            confusion,
            cutoff,
            factions: names,
            output,
            labeled,
        } => {
            let ranking =
                read_pairs_csv(open(&pairs)?).with_context(|| format!("{}", pairs.display()))?;
            let meta = dio::read_meta(open(&meta)?, &factions(names))
                .with_context(|| format!("{}", meta.display()))?;
            let manifest =
                SurrogateManifest::from_json(&read_text(&surrogates)?).with_context(|| {
                    format!("{}: malformed surrogate manifest", surrogates.display())
                })?;
            let mut truth =
                GroundTruth::new(meta.into_iter().map(|m| m.avatar), &manifest.pairs, tier);
            if let Some(path) = confusion {
                let matrix = load_normalized(&path)?;
                truth = truth.with_universe(matrix.labels())?;
            }
            let report = evaluate(&ranking, &truth, cutoff)?;
            emit_text(output.as_deref(), &report.to_json())?;
            if let Some(path) = labeled {
                emit(Some(&path), |w| Ok(report.write_labeled_csv(w)?))?;
            }
        }
        Command::Pipeline { config } => {
            let mut config = PipelineConfig::load(&config)?;
            if cli.sequential {
                config.parallelism = Parallelism::Sequential;
            }
            let (outcome, written) = pipeline::run(&config)?;
            for skipped in &outcome.surrogates.skipped {
                eprintln!("warning: {skipped}");
            }
            for path in written {
                println!("{}", path.display());
            }
        }
        Command::Synth {
            avatars,
            traces,
            tau,
            alias_pairs,
            seed,
            events,
            meta,
        } => {
            if events == meta {
                bail!("--events and --meta must differ");
            }
            let spec = SyntheticSpec {
                avatars,
                traces_per_avatar: traces,
                tau,
                alias_pairs,
                seed,
                ..SyntheticSpec::default()
            };
            let data = generate(&spec)?;
            emit(Some(&events), |w| Ok(dio::write_events(w, &data.events)?))?;
            emit(Some(&meta), |w| Ok(dio::write_meta(w, &data.meta)?))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let mut message = String::new();
            for cause in err.chain().map(|c| c.to_string()) {
                if !message.contains(&cause) {
                    if !message.is_empty() {
                        message.push_str(": ");
                    }
                    message.push_str(&cause);
                }
            }
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
