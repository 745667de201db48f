//! A transparent rule-based per-repository classifier.
//!
//! A contributor with fewer than `min_comments` comments is `unknown`.
//! Otherwise it is a `bot` when it uses few patterns relative to its comment
//! count (`pattern_ratio <= max_pattern_ratio`) and those patterns are
//! unevenly used (`gini >= min_gini`), and `human` otherwise. A contributor
//! whose comments all fall into a single pattern counts as maximally
//! repetitive even though the Gini coefficient of one pattern is 0.

use alloc::vec::Vec;
use core::fmt;

use crate::corpus::{group_records, Corpus};
use crate::patterns::{compute_features, PatternError};
use crate::{FeatureVector, Label, Origin, Prediction, RepoId};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuleThresholds {
    pub min_comments: usize,
    pub max_pattern_ratio: f64,
    pub min_gini: f64,
}

impl Default for RuleThresholds {
    fn default() -> Self {
        Self {
            min_comments: 10,
            max_pattern_ratio: 0.2,
            min_gini: 0.3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdError {
    MinComments,
    PatternRatio(f64),
    Gini(f64),
}

impl fmt::Display for ThresholdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThresholdError::MinComments => f.write_str("min comments must be at least 1"),
            ThresholdError::PatternRatio(r) => write!(f, "max pattern ratio {r} not in (0, 1]"),
            ThresholdError::Gini(g) => write!(f, "min gini {g} not in [0, 1)"),
        }
    }
}

impl core::error::Error for ThresholdError {}

impl RuleThresholds {
    pub fn validate(&self) -> Result<(), ThresholdError> {
        if self.min_comments == 0 {
            return Err(ThresholdError::MinComments);
        }
        if !(self.max_pattern_ratio > 0.0 && self.max_pattern_ratio <= 1.0) {
            return Err(ThresholdError::PatternRatio(self.max_pattern_ratio));
        }
        if !(0.0..1.0).contains(&self.min_gini) {
            return Err(ThresholdError::Gini(self.min_gini));
        }
        Ok(())
    }
}

pub fn predict(features: &FeatureVector, thresholds: &RuleThresholds) -> Label {
    if features.n_comments < thresholds.min_comments {
        return Label::Unknown;
    }
    let few_patterns = features
        .pattern_ratio()
        .is_some_and(|r| r <= thresholds.max_pattern_ratio);
    let repetitive =
        features.n_patterns == 1 || features.gini.is_some_and(|g| g >= thresholds.min_gini);
    if few_patterns && repetitive {
        Label::Bot
    } else {
        Label::Human
    }
}

/// Classifies every contributor of one repository. Comments are taken from
/// the corpus as is; apply [`crate::corpus::sample`] first.
pub fn predict_repository(
    corpus: &Corpus,
    repository: &RepoId,
    thresholds: &RuleThresholds,
    similarity_threshold: f64,
) -> Result<Vec<Prediction>, PatternError> {
    group_records(corpus.for_repository(repository))
        .iter()
        .map(|activity| {
            let features = compute_features(activity, similarity_threshold)?;
            Ok(Prediction {
                contributor: activity.contributor.clone(),
                repository: activity.repository.clone(),
                label: predict(&features, thresholds),
                origin: Origin::Observed,
                features: Some(features),
            })
        })
        .collect()
}

/// [`predict_repository`] over every repository of the corpus, in
/// repository then contributor order.
pub fn predict_corpus(
    corpus: &Corpus,
    thresholds: &RuleThresholds,
    similarity_threshold: f64,
) -> Result<Vec<Prediction>, PatternError> {
    let mut out = Vec::new();
    for repo in corpus.repositories() {
        out.extend(predict_repository(corpus, &repo, thresholds, similarity_threshold)?);
    }
    Ok(out)
}
