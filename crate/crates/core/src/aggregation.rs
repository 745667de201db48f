//! Cross-repository aggregation of per-repository predictions.
//!
//! A contributor active in several repositories gets one label per
//! repository, and those labels can disagree. [`apply_wocp`] replaces the
//! minority label (bot or human) with the majority one; `unknown` labels never
//! vote and are never rewritten by it. [`complete_unknowns`] then optionally
//! turns the unknowns of contributors with no human and at least
//! `bot_threshold` bot predictions into bot predictions.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use crate::{
    AggregationConfig, ContributorPredictions, Label, LabelCounts, Login, Origin, Prediction,
    RepoId, Truth, Verdict,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AggregationError {
    DuplicatePair { contributor: Login, repository: RepoId },
}

impl fmt::Display for AggregationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AggregationError::DuplicatePair {
                contributor,
                repository,
            } => write!(f, "more than one prediction for {contributor} in {repository}"),
        }
    }
}

impl core::error::Error for AggregationError {}

/// Pivots predictions into one entry per contributor, sorted by login.
pub fn collect(predictions: &[Prediction]) -> Result<Vec<ContributorPredictions>, AggregationError> {
    let mut by_login: BTreeMap<Login, ContributorPredictions> = BTreeMap::new();
    for p in predictions {
        let entry = by_login
            .entry(p.contributor.clone())
            .or_insert_with(|| ContributorPredictions::new(p.contributor.clone()));
        let verdict = Verdict {
            label: p.label,
            origin: p.origin,
        };
        if entry.per_repo.insert(p.repository.clone(), verdict).is_some() {
            return Err(AggregationError::DuplicatePair {
                contributor: p.contributor.clone(),
                repository: p.repository.clone(),
            });
        }
    }
    Ok(by_login.into_values().collect())
}

/// Flattens entries back into predictions (contributor, then repository order).
pub fn flatten(entries: &[ContributorPredictions]) -> Vec<Prediction> {
    entries.iter().flat_map(|e| e.predictions()).collect()
}

/// Number-of-repositories bucket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RepoBucket {
    One,
    Two,
    Three,
    FourToFive,
    SixToNine,
    TenPlus,
}

impl RepoBucket {
    pub const ALL: [RepoBucket; 6] = [
        RepoBucket::One,
        RepoBucket::Two,
        RepoBucket::Three,
        RepoBucket::FourToFive,
        RepoBucket::SixToNine,
        RepoBucket::TenPlus,
    ];

    /// `None` for 0.
    pub fn of(n_repositories: usize) -> Option<Self> {
        Some(match n_repositories {
            0 => return None,
            1 => RepoBucket::One,
            2 => RepoBucket::Two,
            3 => RepoBucket::Three,
            4 | 5 => RepoBucket::FourToFive,
            6..=9 => RepoBucket::SixToNine,
            _ => RepoBucket::TenPlus,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RepoBucket::One => "1",
            RepoBucket::Two => "2",
            RepoBucket::Three => "3",
            RepoBucket::FourToFive => "4-5",
            RepoBucket::SixToNine => "6-9",
            RepoBucket::TenPlus => "10+",
        }
    }

    /// Smallest repository count in the bucket.
    pub fn min(self) -> usize {
        match self {
            RepoBucket::One => 1,
            RepoBucket::Two => 2,
            RepoBucket::Three => 3,
            RepoBucket::FourToFive => 4,
            RepoBucket::SixToNine => 6,
            RepoBucket::TenPlus => 10,
        }
    }
}

impl fmt::Display for RepoBucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramRow {
    pub bucket: RepoBucket,
    pub count: usize,
    /// Share of all counted contributors, in percent, unrounded.
    pub percentage: f64,
}

/// How many contributors are active in 1, 2, 3, 4-5, 6-9 and 10+
/// repositories. Entries without any repository are not counted.
pub fn repo_multiplicity_histogram(entries: &[ContributorPredictions]) -> Vec<HistogramRow> {
    histogram_from_counts(entries.iter().map(|e| e.n_repositories()))
}

/// Histogram over raw repository counts.
pub fn histogram_from_counts<I: IntoIterator<Item = usize>>(repo_counts: I) -> Vec<HistogramRow> {
    let mut counts = [0usize; 6];
    for n in repo_counts {
        if let Some(b) = RepoBucket::of(n) {
            counts[b as usize] += 1;
        }
    }
    histogram_from_bucket_counts(counts)
}

/// Histogram from already bucketed counts, in [`RepoBucket::ALL`] order.
pub fn histogram_from_bucket_counts(counts: [usize; 6]) -> Vec<HistogramRow> {
    let total: usize = counts.iter().sum();
    RepoBucket::ALL
        .iter()
        .zip(counts)
        .map(|(&bucket, count)| HistogramRow {
            bucket,
            count,
            percentage: if total == 0 {
                0.0
            } else {
                100.0 * count as f64 / total as f64
            },
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DivergenceStatus {
    ConsistentBot,
    ConsistentHuman,
    Diverging,
    IncompleteBot,
    IncompleteHuman,
    AllUnknown,
}

impl DivergenceStatus {
    pub const ALL: [DivergenceStatus; 6] = [
        DivergenceStatus::ConsistentBot,
        DivergenceStatus::ConsistentHuman,
        DivergenceStatus::Diverging,
        DivergenceStatus::IncompleteBot,
        DivergenceStatus::IncompleteHuman,
        DivergenceStatus::AllUnknown,
    ];

    /// Entries without any prediction count as `AllUnknown`.
    pub fn of(counts: &LabelCounts) -> Self {
        match (counts.bot > 0, counts.human > 0, counts.unknown > 0) {
            (true, true, _) => DivergenceStatus::Diverging,
            (true, false, false) => DivergenceStatus::ConsistentBot,
            (false, true, false) => DivergenceStatus::ConsistentHuman,
            (true, false, true) => DivergenceStatus::IncompleteBot,
            (false, true, true) => DivergenceStatus::IncompleteHuman,
            (false, false, _) => DivergenceStatus::AllUnknown,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DivergenceStatus::ConsistentBot => "consistent_bot",
            DivergenceStatus::ConsistentHuman => "consistent_human",
            DivergenceStatus::Diverging => "diverging",
            DivergenceStatus::IncompleteBot => "incomplete_bot",
            DivergenceStatus::IncompleteHuman => "incomplete_human",
            DivergenceStatus::AllUnknown => "all_unknown",
        }
    }
}

impl fmt::Display for DivergenceStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DivergenceReport {
    pub per_contributor: Vec<(Login, DivergenceStatus)>,
    pub summary: BTreeMap<DivergenceStatus, usize>,
}

impl DivergenceReport {
    pub fn count(&self, status: DivergenceStatus) -> usize {
        self.summary.get(&status).copied().unwrap_or(0)
    }
}

pub fn divergence_report(entries: &[ContributorPredictions]) -> DivergenceReport {
    let mut summary: BTreeMap<DivergenceStatus, usize> =
        DivergenceStatus::ALL.iter().map(|&s| (s, 0)).collect();
    let per_contributor = entries
        .iter()
        .map(|e| {
            let status = DivergenceStatus::of(&e.counts());
            *summary.entry(status).or_default() += 1;
            (e.contributor.clone(), status)
        })
        .collect();
    DivergenceReport {
        per_contributor,
        summary,
    }
}

/// Majority label among the known predictions, `None` when there are none.
pub fn majority(counts: &LabelCounts, tie_break: Truth) -> Option<Truth> {
    use core::cmp::Ordering::*;
    if counts.bot + counts.human == 0 {
        return None;
    }
    Some(match counts.bot.cmp(&counts.human) {
        Greater => Truth::Bot,
        Less => Truth::Human,
        Equal => tie_break,
    })
}

/// Rewrites every known (bot or human) label of each contributor to its
/// majority label; ties go to `config.tie_break`. Rewritten labels get
/// [`Origin::WocFlipped`]. Unknown labels are left alone.
pub fn apply_wocp(
    entries: &[ContributorPredictions],
    config: &AggregationConfig,
) -> Vec<ContributorPredictions> {
    entries
        .iter()
        .map(|e| {
            let mut out = e.clone();
            if let Some(winner) = majority(&e.counts(), config.tie_break) {
                let winner = winner.label();
                for v in out.per_repo.values_mut() {
                    if v.label != Label::Unknown && v.label != winner {
                        v.label = winner;
                        v.origin = Origin::WocFlipped;
                    }
                }
            }
            out
        })
        .collect()
}

/// Turns the unknown labels of contributors with no human prediction and at
/// least `config.bot_threshold` bot predictions into bot labels with
/// [`Origin::WocCompleted`]. Does nothing unless `config.complete_unknowns`.
pub fn complete_unknowns(
    entries: &[ContributorPredictions],
    config: &AggregationConfig,
) -> Vec<ContributorPredictions> {
    if !config.complete_unknowns {
        return entries.to_vec();
    }
    entries
        .iter()
        .map(|e| {
            let mut out = e.clone();
            let c = e.counts();
            if c.human == 0 && c.bot >= config.bot_threshold {
                for v in out.per_repo.values_mut().filter(|v| v.label == Label::Unknown) {
                    *v = Verdict {
                        label: Label::Bot,
                        origin: Origin::WocCompleted,
                    };
                }
            }
            out
        })
        .collect()
}

/// `collect`, then [`apply_wocp`], then [`complete_unknowns`] (when enabled).
pub fn aggregate(
    predictions: &[Prediction],
    config: &AggregationConfig,
) -> Result<Vec<ContributorPredictions>, AggregationError> {
    let entries = collect(predictions)?;
    let revised = apply_wocp(&entries, config);
    Ok(complete_unknowns(&revised, config))
}
