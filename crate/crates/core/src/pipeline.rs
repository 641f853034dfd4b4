//! End-to-end runs driven by one TOML file.
//!
//! ```toml
//! output_dir = "out"
//!
//! [data]            # or a [synthetic] table with generator settings
//! events = "events.csv"
//! meta = "meta.csv"
//!
//! [dataset]
//! tau = 90.0
//! theta = 20
//!
//! [surrogates]
//! gamma = 0.2
//! beta = 0.5
//! seed = 7
//!
//! [classifier]
//! kind = "knn"
//! k = 1
//! folds = 10
//! seed = 7
//!
//! [mining]
//! lambda = 0.9
//!
//! [evaluation]
//! tier = "SUG"
//! ```
//!
//! Relative paths resolve against the directory holding the config file.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::{cross_validate_par, ClassifierConfig, ClassifierError};
use crate::dataset::{
    extract_features, filter_min_traces, inject_surrogates, io, DatasetError, DatasetSpec,
    FactionDictionary, SurrogateManifest, SurrogateSpec, TraceEvent, TraceMeta,
};
use crate::evaluation::{
    evaluate, EvaluationError, EvaluationReport, GroundTruth, Tier, DEFAULT_CUTOFF,
};
use crate::matrix::{ConfusionMatrix, MatrixError, NormalizedConfusionMatrix};
use crate::miner::{
    mine_par, pairs_to_json, write_pairs_csv, CandidatePair, MiningConfig, MiningError,
};
use crate::par::Parallelism;
use crate::synthetic::{generate, SyntheticSpec};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Mining(#[from] MiningError),
    #[error(transparent)]
    Evaluation(#[from] EvaluationError),
}

pub type Result<T> = std::result::Result<T, PipelineError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataPaths {
    pub events: PathBuf,
    pub meta: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationConfig {
    pub tier: Tier,
    #[serde(default = "default_cutoff")]
    pub cutoff: usize,
}

fn default_cutoff() -> usize {
    DEFAULT_CUTOFF
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig {
            tier: Tier::Sug,
            cutoff: DEFAULT_CUTOFF,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub output_dir: PathBuf,
    #[serde(default)]
    pub data: Option<DataPaths>,
    #[serde(default)]
    pub synthetic: Option<SyntheticSpec>,
    /// Faction names in code order; the built-in list when absent.
    #[serde(default)]
    pub factions: Option<Vec<String>>,
    pub dataset: DatasetSpec,
    pub surrogates: SurrogateSpec,
    pub classifier: ClassifierConfig,
    #[serde(default)]
    pub mining: MiningConfig,
    #[serde(default)]
    pub evaluation: EvaluationConfig,
    #[serde(default)]
    pub parallelism: Parallelism,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    /// Reads `path` and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let mut config = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.output_dir = base.join(&config.output_dir);
        if let Some(data) = &mut config.data {
            data.events = base.join(&data.events);
            data.meta = base.join(&data.meta);
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.data, &self.synthetic) {
            (Some(data), None) => {
                for p in [&data.events, &data.meta] {
                    if !p.is_file() {
                        return Err(PipelineError::Config(format!(
                            "{} does not exist",
                            p.display()
                        )));
                    }
                }
            }
            (None, Some(spec)) => spec.validate()?,
            _ => {
                return Err(PipelineError::Config(
                    "exactly one of [data] and [synthetic] is required".into(),
                ))
            }
        }
        self.stages().validate()
    }

    pub fn stages(&self) -> Stages {
        Stages {
            dataset: self.dataset,
            surrogates: self.surrogates,
            classifier: self.classifier,
            mining: self.mining,
            evaluation: self.evaluation,
            parallelism: self.parallelism,
        }
    }

    fn faction_dictionary(&self) -> FactionDictionary {
        match &self.factions {
            Some(names) => FactionDictionary::new(names),
            None => FactionDictionary::default(),
        }
    }
}

/// Parameters of every stage after data loading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stages {
    pub dataset: DatasetSpec,
    pub surrogates: SurrogateSpec,
    pub classifier: ClassifierConfig,
    pub mining: MiningConfig,
    pub evaluation: EvaluationConfig,
    pub parallelism: Parallelism,
}

impl Stages {
    pub fn validate(&self) -> Result<()> {
        self.dataset.validate()?;
        self.surrogates.validate()?;
        self.classifier.validate()?;
        self.mining.validate()?;
        Ok(())
    }
}

/// Everything a run produces, in memory.
#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub features: Vec<crate::dataset::FeatureVector>,
    pub dataset: Vec<crate::dataset::FeatureVector>,
    pub surrogates: SurrogateManifest,
    pub confusion: ConfusionMatrix,
    pub normalized: NormalizedConfusionMatrix,
    pub pairs: Vec<CandidatePair>,
    pub report: EvaluationReport,
}

/// extract, filter by theta, inject surrogates, cross-validate, mine, evaluate.
pub fn run_in_memory(
    events: &[TraceEvent],
    meta: &[TraceMeta],
    stages: &Stages,
) -> Result<PipelineOutcome> {
    stages.validate()?;
    let features = extract_features(events, stages.dataset.tau, meta)?;
    let filtered = filter_min_traces(features.clone(), stages.dataset.theta)?;
    let injected = inject_surrogates(filtered, &stages.surrogates, stages.dataset.theta)?;
    let surrogates = injected.manifest();
    let dataset = injected.dataset;

    let confusion = cross_validate_par(&dataset, &stages.classifier, stages.parallelism)?;
    let normalized = confusion.normalize()?;
    let pairs = mine_par(&normalized, &stages.mining, stages.parallelism)?;

    let truth = GroundTruth::new(
        meta.iter().map(|m| m.avatar.clone()),
        &surrogates.pairs,
        stages.evaluation.tier,
    )
    .with_universe(confusion.labels())?;
    let report = evaluate(&pairs, &truth, stages.evaluation.cutoff)?;
    Ok(PipelineOutcome {
        features,
        dataset,
        surrogates,
        confusion,
        normalized,
        pairs,
        report,
    })
}

fn write_file(
    dir: &Path,
    name: &str,
    write: impl FnOnce(&mut BufWriter<File>) -> Result<()>,
) -> Result<PathBuf> {
    let path = dir.join(name);
    let file = File::create(&path).map_err(io_err(&path))?;
    let mut w = BufWriter::new(file);
    write(&mut w)?;
    w.flush().map_err(io_err(&path))?;
    Ok(path)
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, format!("{text}\n")).map_err(io_err(&path))?;
    Ok(path)
}

/// Runs the configured pipeline and writes every artifact into
/// `output_dir`. Returns the written paths in creation order.
pub fn run(config: &PipelineConfig) -> Result<(PipelineOutcome, Vec<PathBuf>)> {
    config.validate()?;
    let out = &config.output_dir;
    fs::create_dir_all(out).map_err(io_err(out))?;
    let mut written = Vec::new();

    let (events, meta) = match (&config.data, &config.synthetic) {
        (Some(data), _) => {
            let events = io::read_events(BufReader::new(
                File::open(&data.events).map_err(io_err(&data.events))?,
            ))?;
            let meta = io::read_meta(
                BufReader::new(File::open(&data.meta).map_err(io_err(&data.meta))?),
                &config.faction_dictionary(),
            )?;
            (events, meta)
        }
        (None, Some(spec)) => {
            let generated = generate(spec)?;
            written.push(write_file(out, "events.csv", |w| {
                Ok(io::write_events(w, &generated.events)?)
            })?);
            written.push(write_file(out, "meta.csv", |w| {
                Ok(io::write_meta(w, &generated.meta)?)
            })?);
            (generated.events, generated.meta)
        }
        (None, None) => unreachable!("validated"),
    };

    let outcome = run_in_memory(&events, &meta, &config.stages())?;
    written.push(write_file(out, "features.csv", |w| {
        Ok(io::write_features(w, &outcome.features)?)
    })?);
    written.push(write_file(out, "dataset.csv", |w| {
        Ok(io::write_features(w, &outcome.dataset)?)
    })?);
    written.push(write_text(
        out,
        "surrogates.json",
        &outcome.surrogates.to_json(),
    )?);
    written.push(write_text(
        out,
        "confusion.json",
        &outcome.confusion.to_json(),
    )?);
    written.push(write_text(
        out,
        "normalized.json",
        &outcome.normalized.to_json(),
    )?);
    written.push(write_file(out, "pairs.csv", |w| {
        Ok(write_pairs_csv(w, &outcome.pairs)?)
    })?);
    written.push(write_text(
        out,
        "pairs.json",
        &pairs_to_json(&outcome.pairs),
    )?);
    written.push(write_file(out, "labeled.csv", |w| {
        Ok(outcome.report.write_labeled_csv(w)?)
    })?);
    written.push(write_text(out, "report.json", &outcome.report.to_json())?);
    Ok((outcome, written))
}
