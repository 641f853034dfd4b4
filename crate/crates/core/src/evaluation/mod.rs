//! Labels ranked candidate pairs against tiered ground truth and scores the
//! ranking.
//!
//! Three indicators exist, from strongest to weakest: surrogate siblings
//! (constructed, so certain), a shared account id (certain for real data),
//! and a shared display name (weak; common names collide). The tier
//! decides which of them count as positives. The metric suite reports a
//! single ranking's average precision under the name `map`.

pub mod metrics;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{AvatarIdentity, SurrogatePair};
use crate::matrix::round_sig15;
use crate::miner::CandidatePair;

pub use metrics::{average_precision, f1, p_at_k, precision_recall_f1, roc_auc, Judgement};

/// Number of top-ranked pairs scored by precision, recall and F1.
pub const DEFAULT_CUTOFF: usize = 100;

#[derive(Debug, Error)]
pub enum EvaluationError {
    #[error("unknown avatar label `{0}`")]
    UnknownLabel(String),
    #[error("{0} is undefined")]
    Undefined(String),
    #[error("ranking holds {retrieved} {class} but only {total} exist")]
    Inconsistent {
        retrieved: usize,
        total: usize,
        class: &'static str,
    },
    #[error("invalid tier `{0}` (expected SUG, SUG_URLS or SUG_URLS_NAMES)")]
    InvalidTier(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, EvaluationError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tier {
    #[serde(rename = "SUG")]
    Sug,
    #[serde(rename = "SUG_URLS")]
    SugUrls,
    #[serde(rename = "SUG_URLS_NAMES")]
    SugUrlsNames,
}

impl Tier {
    pub const ALL: [Tier; 3] = [Tier::Sug, Tier::SugUrls, Tier::SugUrlsNames];

    pub fn as_str(self) -> &'static str {
        match self {
            Tier::Sug => "SUG",
            Tier::SugUrls => "SUG_URLS",
            Tier::SugUrlsNames => "SUG_URLS_NAMES",
        }
    }

    pub fn counts(self, evidence: Evidence) -> bool {
        match evidence {
            Evidence::Surrogate => true,
            Evidence::SameAccount => self >= Tier::SugUrls,
            Evidence::SameName => self == Tier::SugUrlsNames,
            Evidence::Negative => false,
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Tier {
    type Err = EvaluationError;
    fn from_str(s: &str) -> Result<Tier> {
        Tier::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| EvaluationError::InvalidTier(s.to_string()))
    }
}

/// Strongest indicator linking two avatars.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Evidence {
    Surrogate,
    SameAccount,
    SameName,
    Negative,
}

impl Evidence {
    pub fn as_str(self) -> &'static str {
        match self {
            Evidence::Surrogate => "surrogate",
            Evidence::SameAccount => "same_account",
            Evidence::SameName => "same_name",
            Evidence::Negative => "negative",
        }
    }
}

fn unordered(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

fn non_empty(s: &Option<String>) -> Option<&str> {
    s.as_deref().filter(|s| !s.is_empty())
}

#[derive(Debug, Clone)]
pub struct GroundTruth {
    surrogate_pairs: HashSet<(String, String)>,
    identity_index: HashMap<String, AvatarIdentity>,
    /// Labels whose pairs make up the positive/negative population.
    universe: Vec<String>,
    pub tier: Tier,
}

impl GroundTruth {
    /// Surrogate labels missing from `identities` inherit the identity of
    /// their original avatar. Split originals leave the universe.
    pub fn new(
        identities: impl IntoIterator<Item = AvatarIdentity>,
        surrogates: &[SurrogatePair],
        tier: Tier,
    ) -> Self {
        let mut identity_index: HashMap<String, AvatarIdentity> = identities
            .into_iter()
            .map(|id| (id.label.clone(), id))
            .collect();
        let mut surrogate_pairs = HashSet::new();
        for pair in surrogates {
            let base = identity_index
                .get(&pair.original)
                .cloned()
                .unwrap_or_else(|| AvatarIdentity::new(&pair.original));
            for label in [&pair.first, &pair.second] {
                identity_index
                    .entry(label.clone())
                    .or_insert_with(|| base.relabeled(label.clone()));
            }
            surrogate_pairs.insert(unordered(&pair.first, &pair.second));
        }
        let originals: HashSet<&str> = surrogates.iter().map(|p| p.original.as_str()).collect();
        let mut universe: Vec<String> = identity_index
            .keys()
            .filter(|l| !originals.contains(l.as_str()))
            .cloned()
            .collect();
        universe.sort();
        GroundTruth {
            surrogate_pairs,
            identity_index,
            universe,
            tier,
        }
    }

    /// Restricts the pair population to `labels` (typically the labels of
    /// the classified, threshold-filtered dataset).
    pub fn with_universe<S: AsRef<str>>(mut self, labels: &[S]) -> Result<Self> {
        let mut universe = Vec::with_capacity(labels.len());
        for l in labels {
            let l = l.as_ref();
            if !self.identity_index.contains_key(l) {
                return Err(EvaluationError::UnknownLabel(l.to_string()));
            }
            universe.push(l.to_string());
        }
        universe.sort();
        universe.dedup();
        self.universe = universe;
        Ok(self)
    }

    pub fn with_tier(mut self, tier: Tier) -> Self {
        self.tier = tier;
        self
    }

    pub fn universe(&self) -> &[String] {
        &self.universe
    }

    pub fn identity(&self, label: &str) -> Result<&AvatarIdentity> {
        self.identity_index
            .get(label)
            .ok_or_else(|| EvaluationError::UnknownLabel(label.to_string()))
    }

    /// Strongest indicator for the pair, by priority surrogate, account, name.
    pub fn label_pair(&self, a: &str, b: &str) -> Result<Evidence> {
        let (ia, ib) = (self.identity(a)?, self.identity(b)?);
        if self.surrogate_pairs.contains(&unordered(a, b)) {
            return Ok(Evidence::Surrogate);
        }
        if let (Some(x), Some(y)) = (non_empty(&ia.account_id), non_empty(&ib.account_id)) {
            if x == y {
                return Ok(Evidence::SameAccount);
            }
        }
        if let (Some(x), Some(y)) = (non_empty(&ia.name), non_empty(&ib.name)) {
            if x == y {
                return Ok(Evidence::SameName);
            }
        }
        Ok(Evidence::Negative)
    }

    pub fn is_positive(&self, a: &str, b: &str) -> Result<bool> {
        Ok(self.tier.counts(self.label_pair(a, b)?))
    }

    /// Positive pair count per tier over the universe.
    pub fn positive_totals(&self) -> BTreeMap<Tier, usize> {
        let mut totals: BTreeMap<Tier, usize> = Tier::ALL.into_iter().map(|t| (t, 0)).collect();
        for (x, a) in self.universe.iter().enumerate() {
            for b in &self.universe[x + 1..] {
                let evidence = self.label_pair(a, b).expect("universe labels are indexed");
                for tier in Tier::ALL {
                    if tier.counts(evidence) {
                        *totals.get_mut(&tier).unwrap() += 1;
                    }
                }
            }
        }
        totals
    }

    pub fn total_pairs(&self) -> usize {
        let n = self.universe.len();
        n * n.saturating_sub(1) / 2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledPair {
    pub rank: usize,
    pub a: String,
    pub b: String,
    pub score: f64,
    pub cluster_score: f64,
    pub evidence: Evidence,
    pub positive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub tier: Tier,
    pub cutoff: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub p_at_10: f64,
    pub map: f64,
    pub auc: f64,
    pub ranking_length: usize,
    pub positives_in_ranking: usize,
    pub total_positives: usize,
    pub total_negatives: usize,
    pub total_positives_by_tier: BTreeMap<Tier, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub metrics: MetricsReport,
    pub pairs: Vec<LabeledPair>,
}

/// Labels `ranking` and computes the full metric suite. Precision, recall
/// and F1 look at the first `cutoff` pairs; AP and AUC at the whole list.
pub fn evaluate(
    ranking: &[CandidatePair],
    gt: &GroundTruth,
    cutoff: usize,
) -> Result<EvaluationReport> {
    let pairs = ranking
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let evidence = gt.label_pair(&p.a, &p.b)?;
            Ok(LabeledPair {
                rank: i + 1,
                a: p.a.clone(),
                b: p.b.clone(),
                score: p.score,
                cluster_score: p.cluster_score,
                evidence,
                positive: gt.tier.counts(evidence),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let judgements: Vec<Judgement> = pairs
        .iter()
        .map(|p| Judgement::new(p.positive, p.score, p.cluster_score))
        .collect();

    let by_tier = gt.positive_totals();
    let total_positives = by_tier[&gt.tier];
    let total_negatives = gt.total_pairs() - total_positives;
    let (precision, recall, f1) = precision_recall_f1(&judgements, cutoff, total_positives);
    let metrics = MetricsReport {
        tier: gt.tier,
        cutoff,
        precision,
        recall,
        f1,
        p_at_10: p_at_k(&judgements, 10),
        map: average_precision(&judgements, total_positives)?,
        auc: roc_auc(&judgements, total_positives, total_negatives)?,
        ranking_length: judgements.len(),
        positives_in_ranking: judgements[..cutoff.min(judgements.len())]
            .iter()
            .filter(|j| j.positive)
            .count(),
        total_positives,
        total_negatives,
        total_positives_by_tier: by_tier,
    };
    Ok(EvaluationReport { metrics, pairs })
}

impl EvaluationReport {
    /// Pretty JSON with floats rounded to 15 significant digits.
    pub fn to_json(&self) -> String {
        let mut rounded = self.clone();
        let m = &mut rounded.metrics;
        for x in [
            &mut m.precision,
            &mut m.recall,
            &mut m.f1,
            &mut m.p_at_10,
            &mut m.map,
            &mut m.auc,
        ] {
            *x = round_sig15(*x);
        }
        for p in &mut rounded.pairs {
            p.score = round_sig15(p.score);
            p.cluster_score = round_sig15(p.cluster_score);
        }
        serde_json::to_string_pretty(&rounded).expect("report serializes")
    }

    /// `rank,a,b,score,cluster_score,evidence`, ready for plotting.
    pub fn write_labeled_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["rank", "a", "b", "score", "cluster_score", "evidence"])?;
        for p in &self.pairs {
            wtr.write_record([
                p.rank.to_string(),
                p.a.clone(),
                p.b.clone(),
                round_sig15(p.score).to_string(),
                round_sig15(p.cluster_score).to_string(),
                p.evidence.as_str().to_string(),
            ])?;
        }
        wtr.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gt(tier: Tier) -> GroundTruth {
        let ids = vec![
            AvatarIdentity::new("eu/1234/Foo")
                .with_account("1234")
                .with_name("Foo"),
            AvatarIdentity::new("us/1234/Bar")
                .with_account("1234")
                .with_name("Bar"),
            AvatarIdentity::new("eu/1/Batman")
                .with_account("1")
                .with_name("Batman"),
            AvatarIdentity::new("us/2/Batman")
                .with_account("2")
                .with_name("Batman"),
            AvatarIdentity::new("kr/9/Solo")
                .with_account("9")
                .with_name("Solo"),
            AvatarIdentity::new("kr/7/Pro")
                .with_account("7")
                .with_name("Pro"),
        ];
        let sur = vec![SurrogatePair {
            original: "kr/7/Pro".into(),
            first: "kr/7/Pro#1".into(),
            second: "kr/7/Pro#2".into(),
        }];
        GroundTruth::new(ids, &sur, tier)
    }

    fn pair(a: &str, b: &str, score: f64) -> CandidatePair {
        let (a, b) = unordered(a, b);
        CandidatePair {
            a,
            b,
            score,
            cluster_score: 1.0,
            provenance: vec![],
        }
    }

    #[test]
    fn evidence_priority() {
        let g = gt(Tier::Sug);
        assert_eq!(
            g.label_pair("kr/7/Pro#1", "kr/7/Pro#2").unwrap(),
            Evidence::Surrogate
        );
        assert_eq!(
            g.label_pair("eu/1234/Foo", "us/1234/Bar").unwrap(),
            Evidence::SameAccount
        );
        assert_eq!(
            g.label_pair("eu/1/Batman", "us/2/Batman").unwrap(),
            Evidence::SameName
        );
        assert_eq!(
            g.label_pair("eu/1/Batman", "kr/9/Solo").unwrap(),
            Evidence::Negative
        );
        assert!(g.label_pair("eu/1/Batman", "nobody").is_err());
    }

    #[test]
    fn evidence_is_symmetric() {
        let g = gt(Tier::Sug);
        let labels = g.universe().to_vec();
        for a in &labels {
            for b in &labels {
                if a != b {
                    assert_eq!(g.label_pair(a, b).unwrap(), g.label_pair(b, a).unwrap());
                }
            }
        }
    }

    #[test]
    fn tiers_nest() {
        let totals = gt(Tier::Sug).positive_totals();
        assert_eq!(totals[&Tier::Sug], 1);
        // the surrogate siblings also share the account, but count once
        assert_eq!(totals[&Tier::SugUrls], 2);
        assert_eq!(totals[&Tier::SugUrlsNames], 3);
        for e in [
            Evidence::Surrogate,
            Evidence::SameAccount,
            Evidence::SameName,
            Evidence::Negative,
        ] {
            assert!(!Tier::Sug.counts(e) || Tier::SugUrls.counts(e));
            assert!(!Tier::SugUrls.counts(e) || Tier::SugUrlsNames.counts(e));
        }
    }

    #[test]
    fn universe_excludes_split_originals() {
        let g = gt(Tier::Sug);
        assert!(!g.universe().iter().any(|l| l == "kr/7/Pro"));
        assert_eq!(g.universe().len(), 7);
        assert_eq!(g.total_pairs(), 21);
        assert!(g.clone().with_universe(&["ghost"]).is_err());
    }

    #[test]
    fn tier_parsing() {
        assert_eq!("SUG_URLS".parse::<Tier>().unwrap(), Tier::SugUrls);
        assert_eq!("sug".parse::<Tier>().unwrap(), Tier::Sug);
        assert!("URLS".parse::<Tier>().is_err());
    }

    #[test]
    fn evaluate_perfect_surrogate_ranking() {
        let g = gt(Tier::Sug);
        let ranking = vec![
            pair("kr/7/Pro#1", "kr/7/Pro#2", 0.9),
            pair("eu/1/Batman", "kr/9/Solo", 0.1),
        ];
        let report = evaluate(&ranking, &g, DEFAULT_CUTOFF).unwrap();
        let m = &report.metrics;
        assert_eq!(m.total_positives, 1);
        assert_eq!(m.total_negatives, 20);
        assert_eq!(m.recall, 1.0);
        assert_eq!(m.precision, 0.5);
        assert_eq!(m.map, 1.0);
        assert_eq!(m.auc, 1.0);
        assert_eq!(
            precision_recall_f1(&[Judgement::new(true, 1.0, 1.0)], 1, 1).0,
            1.0
        );
        assert_eq!(report.pairs[0].evidence, Evidence::Surrogate);

        let json = report.to_json();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["metrics"]["total_positives_by_tier"]["SUG_URLS_NAMES"], 3);
        assert_eq!(v["pairs"][0]["evidence"], "surrogate");

        let mut buf = Vec::new();
        report.write_labeled_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(
            "rank,a,b,score,cluster_score,evidence\n1,kr/7/Pro#1,kr/7/Pro#2,0.9,1,surrogate\n"
        ));
    }

    #[test]
    fn wider_tiers_have_more_positives_in_the_same_ranking() {
        let ranking = vec![
            pair("kr/7/Pro#1", "kr/7/Pro#2", 0.9),
            pair("eu/1234/Foo", "us/1234/Bar", 0.8),
            pair("eu/1/Batman", "us/2/Batman", 0.7),
        ];
        let mut prev = 0;
        for tier in Tier::ALL {
            let r = evaluate(&ranking, &gt(tier), DEFAULT_CUTOFF).unwrap();
            assert!(r.metrics.positives_in_ranking > prev);
            prev = r.metrics.positives_in_ranking;
        }
    }
}
