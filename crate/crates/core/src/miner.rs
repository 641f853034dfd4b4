//! Turns pattern concepts into a ranked list of alias candidates.
//!
//! Concepts are scored by the total membership of their intent, every
//! extent is expanded into its unordered avatar pairs, and each pair is
//! checked with the cluster score, the cosine between
//! `<M[i][i], M[i][j]>` and `<M[j][j], M[j][i]>`. A pair whose traces are
//! split evenly between the two avatars points both vectors the same way;
//! one-sided confusion points them apart.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{enumerate_concepts, FuzzyPattern, LatticeError, PatternConcept};
use crate::matrix::{round_sig15, MatrixError, NormalizedConfusionMatrix};
use crate::par::Parallelism;

/// Largest matrix mined with `min_score = 0`; bigger ones need a positive
/// threshold to keep the concept count bounded.
pub const UNPRUNED_MAX_AVATARS: usize = 200;

#[derive(Debug, Error)]
pub enum MiningError {
    #[error("invalid mining parameter: {0}")]
    InvalidParameter(String),
    #[error("cluster score needs two distinct avatars, got `{0}` twice")]
    SameAvatar(String),
    #[error("{n} avatars need a positive min_score (unpruned mining is limited to {max})")]
    ConceptExplosion { n: usize, max: usize },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, MiningError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
#[serde(deny_unknown_fields)]
pub struct MiningConfig {
    /// Cluster-score acceptance threshold.
    pub lambda: f64,
    /// Concepts scoring below this are never built.
    pub min_score: f64,
    pub top_k: usize,
}

impl Default for MiningConfig {
    fn default() -> Self {
        MiningConfig {
            lambda: 0.9,
            min_score: 0.0,
            top_k: 100,
        }
    }
}

impl MiningConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(MiningError::InvalidParameter(format!(
                "lambda must lie in [0, 1], got {}",
                self.lambda
            )));
        }
        if !(self.min_score >= 0.0 && self.min_score.is_finite()) {
            return Err(MiningError::InvalidParameter(format!(
                "min_score must be >= 0, got {}",
                self.min_score
            )));
        }
        if self.top_k < 1 {
            return Err(MiningError::InvalidParameter("top_k must be >= 1".into()));
        }
        Ok(())
    }
}

/// Alias hypothesis `(a, b)` with `a < b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatePair {
    pub a: String,
    pub b: String,
    /// Best score among the concepts whose extent holds both avatars.
    pub score: f64,
    pub cluster_score: f64,
    /// Extents (as label lists) of the generating concepts.
    #[serde(skip)]
    pub provenance: Vec<Vec<String>>,
}

/// Sum of membership degrees.
pub fn score(d: &FuzzyPattern) -> f64 {
    d.degrees().iter().sum()
}

/// Expands every extent with at least two avatars into its pairs. Pair
/// score is the maximum over generating concepts. Sorted by score
/// (descending), then `(a, b)`; cluster scores are left at zero.
pub fn concepts_to_pairs(
    concepts: &[PatternConcept],
    m: &NormalizedConfusionMatrix,
) -> Vec<CandidatePair> {
    let labels = m.labels();
    let mut by_pair: BTreeMap<(&str, &str), CandidatePair> = BTreeMap::new();
    for concept in concepts.iter().filter(|c| c.extent.len() >= 2) {
        let s = concept.score();
        let mut extent_labels: Vec<&str> = concept.extent.labels(m);
        extent_labels.sort_unstable();
        let provenance: Vec<String> = extent_labels.iter().map(|l| l.to_string()).collect();
        let idx = concept.extent.indices();
        for (x, &i) in idx.iter().enumerate() {
            for &j in &idx[x + 1..] {
                let (a, b) = if labels[i] < labels[j] {
                    (&labels[i], &labels[j])
                } else {
                    (&labels[j], &labels[i])
                };
                let entry =
                    by_pair
                        .entry((a.as_str(), b.as_str()))
                        .or_insert_with(|| CandidatePair {
                            a: a.clone(),
                            b: b.clone(),
                            score: s,
                            cluster_score: 0.0,
                            provenance: Vec::new(),
                        });
                entry.score = entry.score.max(s);
                entry.provenance.push(provenance.clone());
            }
        }
    }
    let mut pairs: Vec<CandidatePair> = by_pair.into_values().collect();
    pairs.sort_by(|x, y| {
        y.score
            .total_cmp(&x.score)
            .then_with(|| (&x.a, &x.b).cmp(&(&y.a, &y.b)))
    });
    pairs
}

pub(crate) fn cluster_score_idx(i: usize, j: usize, m: &NormalizedConfusionMatrix) -> f64 {
    let u = (m.get(i, i), m.get(i, j));
    let v = (m.get(j, j), m.get(j, i));
    let nu = (u.0 * u.0 + u.1 * u.1).sqrt();
    let nv = (v.0 * v.0 + v.1 * v.1).sqrt();
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    ((u.0 * v.0 + u.1 * v.1) / (nu * nv)).clamp(0.0, 1.0)
}

/// Cosine of `<M[i][i], M[i][j]>` and `<M[j][j], M[j][i]>`; zero when
/// either vector vanishes.
pub fn cluster_score(i: &str, j: &str, m: &NormalizedConfusionMatrix) -> Result<f64> {
    if i == j {
        return Err(MiningError::SameAvatar(i.to_string()));
    }
    Ok(cluster_score_idx(m.index_of(i)?, m.index_of(j)?, m))
}

/// Final ranking order: score, then cluster score (both descending), then labels.
pub fn rank_order(x: &CandidatePair, y: &CandidatePair) -> Ordering {
    y.score
        .total_cmp(&x.score)
        .then_with(|| y.cluster_score.total_cmp(&x.cluster_score))
        .then_with(|| (&x.a, &x.b).cmp(&(&y.a, &y.b)))
}

/// Full mining pass: enumerate concepts, expand to pairs, drop pairs whose
/// cluster score is below `lambda`, re-rank and keep the first `top_k`.
pub fn mine(m: &NormalizedConfusionMatrix, config: &MiningConfig) -> Result<Vec<CandidatePair>> {
    mine_par(m, config, Parallelism::default())
}

pub fn mine_par(
    m: &NormalizedConfusionMatrix,
    config: &MiningConfig,
    par: Parallelism,
) -> Result<Vec<CandidatePair>> {
    config.validate()?;
    if m.n() > UNPRUNED_MAX_AVATARS && config.min_score <= 0.0 {
        return Err(MiningError::ConceptExplosion {
            n: m.n(),
            max: UNPRUNED_MAX_AVATARS,
        });
    }
    let concepts = enumerate_concepts(m, config.min_score)?;
    let pairs = concepts_to_pairs(&concepts, m);
    let cluster = par.map(&pairs, |p| {
        let i = m.index_of(&p.a).expect("pair labels come from the matrix");
        let j = m.index_of(&p.b).expect("pair labels come from the matrix");
        cluster_score_idx(i, j, m)
    });
    let mut kept: Vec<CandidatePair> = pairs
        .into_iter()
        .zip(cluster)
        .filter(|(_, c)| *c >= config.lambda)
        .map(|(mut p, c)| {
            p.cluster_score = c;
            p
        })
        .collect();
    kept.sort_by(rank_order);
    kept.truncate(config.top_k);
    Ok(kept)
}

#[derive(Serialize, Deserialize)]
struct PairRow {
    rank: usize,
    a: String,
    b: String,
    score: f64,
    cluster_score: f64,
}

/// `rank,a,b,score,cluster_score` with 1-based ranks.
pub fn write_pairs_csv<W: Write>(writer: W, pairs: &[CandidatePair]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for (i, p) in pairs.iter().enumerate() {
        wtr.serialize(PairRow {
            rank: i + 1,
            a: p.a.clone(),
            b: p.b.clone(),
            score: round_sig15(p.score),
            cluster_score: round_sig15(p.cluster_score),
        })?;
    }
    if pairs.is_empty() {
        wtr.write_record(["rank", "a", "b", "score", "cluster_score"])?;
    }
    wtr.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Reads a ranked-pairs CSV back, in rank order. Extra columns (such as
/// `evidence`) are ignored.
pub fn read_pairs_csv<R: std::io::Read>(reader: R) -> Result<Vec<CandidatePair>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows = Vec::new();
    for row in rdr.deserialize::<PairRow>() {
        let row = row.map_err(|e| MiningError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        rows.push(row);
    }
    rows.sort_by_key(|r| r.rank);
    Ok(rows
        .into_iter()
        .map(|r| {
            let (a, b) = if r.a <= r.b { (r.a, r.b) } else { (r.b, r.a) };
            CandidatePair {
                a,
                b,
                score: r.score,
                cluster_score: r.cluster_score,
                provenance: Vec::new(),
            }
        })
        .collect())
}

/// JSON array of `{rank, a, b, score, cluster_score}`.
pub fn pairs_to_json(pairs: &[CandidatePair]) -> String {
    let rows: Vec<PairRow> = pairs
        .iter()
        .enumerate()
        .map(|(i, p)| PairRow {
            rank: i + 1,
            a: p.a.clone(),
            b: p.b.clone(),
            score: round_sig15(p.score),
            cluster_score: round_sig15(p.cluster_score),
        })
        .collect();
    serde_json::to_string_pretty(&rows).expect("pairs serialize")
}
