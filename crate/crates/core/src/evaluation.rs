//! Scoring predictions against ground truth.
//!
//! Scoring happens per prediction, i.e. per (contributor, repository) pair.
//! `bot` is the positive class. Unknown predictions are not scored; they are
//! counted separately.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::aggregation::majority;
use crate::{ConfusionMatrix, ContributorPredictions, GroundTruth, Label, Login, Prediction, RepoId, Truth};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvaluationError {
    MissingTruth(Vec<Login>),
    EmptyMatrix,
    DuplicatePair { contributor: Login, repository: RepoId },
    MismatchedPairs { only_before: usize, only_after: usize },
}

impl fmt::Display for EvaluationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvaluationError::MissingTruth(logins) => {
                f.write_str("contributors missing from ground truth:")?;
                for l in logins {
                    write!(f, " {l}")?;
                }
                Ok(())
            }
            EvaluationError::EmptyMatrix => f.write_str("nothing to score: confusion matrix is empty"),
            EvaluationError::DuplicatePair {
                contributor,
                repository,
            } => write!(f, "more than one prediction for {contributor} in {repository}"),
            EvaluationError::MismatchedPairs {
                only_before,
                only_after,
            } => write!(
                f,
                "prediction sets cover different pairs ({only_before} only before, {only_after} only after)"
            ),
        }
    }
}

impl core::error::Error for EvaluationError {}

/// Confusion matrix plus the number of unknown predictions left out of it.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Confusion {
    pub matrix: ConfusionMatrix,
    pub excluded_unknowns: usize,
}

impl Confusion {
    pub fn metrics(&self) -> Result<MetricsReport, EvaluationError> {
        let mut m = metrics(&self.matrix)?;
        m.excluded_unknowns = self.excluded_unknowns;
        Ok(m)
    }
}

fn missing_truth<'a, I>(logins: I, truth: &GroundTruth) -> Result<(), EvaluationError>
where
    I: IntoIterator<Item = &'a Login>,
{
    let mut missing: Vec<Login> = logins
        .into_iter()
        .filter(|l| truth.get(l).is_none())
        .cloned()
        .collect();
    if missing.is_empty() {
        return Ok(());
    }
    missing.sort();
    missing.dedup();
    Err(EvaluationError::MissingTruth(missing))
}

pub fn confusion(predictions: &[Prediction], truth: &GroundTruth) -> Result<Confusion, EvaluationError> {
    missing_truth(
        predictions
            .iter()
            .filter(|p| p.label != Label::Unknown)
            .map(|p| &p.contributor),
        truth,
    )?;
    let mut out = Confusion::default();
    for p in predictions {
        match p.label.known() {
            Some(predicted) => {
                // checked above
                let actual = truth.get(&p.contributor).expect("truth present");
                out.matrix.record(predicted, actual);
            }
            None => out.excluded_unknowns += 1,
        }
    }
    Ok(out)
}

/// Contributor-level scoring: each contributor counts once, with its majority
/// label (ties to `tie_break`). Contributors with only unknown labels are
/// excluded.
pub fn contributor_confusion(
    entries: &[ContributorPredictions],
    truth: &GroundTruth,
    tie_break: Truth,
) -> Result<Confusion, EvaluationError> {
    let decided: Vec<(&Login, Option<Truth>)> = entries
        .iter()
        .map(|e| (&e.contributor, majority(&e.counts(), tie_break)))
        .collect();
    missing_truth(decided.iter().filter(|(_, m)| m.is_some()).map(|(l, _)| *l), truth)?;
    let mut out = Confusion::default();
    for (login, label) in decided {
        match label {
            Some(predicted) => out.matrix.record(predicted, truth.get(login).expect("truth present")),
            None => out.excluded_unknowns += 1,
        }
    }
    Ok(out)
}

/// Accuracy, precision, recall and F1 in percent, at full precision. A
/// metric whose denominator is zero is `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub excluded_unknowns: usize,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| 100.0 * num as f64 / den as f64)
}

pub fn metrics(cm: &ConfusionMatrix) -> Result<MetricsReport, EvaluationError> {
    if cm.total() == 0 {
        return Err(EvaluationError::EmptyMatrix);
    }
    let precision = ratio(cm.tp, cm.tp + cm.fp);
    let recall = ratio(cm.tp, cm.tp + cm.fn_);
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    Ok(MetricsReport {
        accuracy: ratio(cm.correct(), cm.total()),
        precision,
        recall,
        f1,
        excluded_unknowns: 0,
    })
}

/// Tenths of a percent, rounded half up: `91.704 -> 917`.
pub fn round_tenths(value: f64) -> i64 {
    // The nudge keeps values that are exact halves in decimal (e.g. 92.15)
    // from rounding down due to binary representation error.
    libm::floor(value * 10.0 + 0.5 + 1e-9) as i64
}

/// One-decimal rendering with half-up rounding; `n/a` for undefined values.
pub fn format_percent(value: Option<f64>) -> String {
    match value {
        Some(v) => {
            let t = round_tenths(v);
            let sign = if t < 0 { "-" } else { "" };
            alloc::format!("{sign}{}.{}", t.abs() / 10, t.abs() % 10)
        }
        None => String::from("n/a"),
    }
}

/// Counts of one kind of label change, split by whether the new label
/// matches the ground truth.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ChangeCount {
    pub correct: usize,
    pub incorrect: usize,
    /// New label is `unknown`.
    pub unscored: usize,
}

impl ChangeCount {
    pub fn total(&self) -> usize {
        self.correct + self.incorrect + self.unscored
    }
}

/// Label changes between two prediction sets, keyed by `(before, after)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FlipSummary {
    pub changes: BTreeMap<(Label, Label), ChangeCount>,
}

impl FlipSummary {
    pub fn get(&self, from: Label, to: Label) -> ChangeCount {
        self.changes.get(&(from, to)).copied().unwrap_or_default()
    }

    pub fn bot_to_human(&self) -> ChangeCount {
        self.get(Label::Bot, Label::Human)
    }

    pub fn human_to_bot(&self) -> ChangeCount {
        self.get(Label::Human, Label::Bot)
    }

    pub fn unknown_to_bot(&self) -> ChangeCount {
        self.get(Label::Unknown, Label::Bot)
    }

    pub fn total_changed(&self) -> usize {
        self.changes.values().map(ChangeCount::total).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelComparison {
    pub before: Confusion,
    pub after: Confusion,
    pub before_metrics: MetricsReport,
    pub after_metrics: MetricsReport,
    pub flips: FlipSummary,
}

fn index_pairs(predictions: &[Prediction]) -> Result<BTreeMap<(&Login, &RepoId), Label>, EvaluationError> {
    let mut out = BTreeMap::new();
    for p in predictions {
        if out.insert((&p.contributor, &p.repository), p.label).is_some() {
            return Err(EvaluationError::DuplicatePair {
                contributor: p.contributor.clone(),
                repository: p.repository.clone(),
            });
        }
    }
    Ok(out)
}

/// Scores two prediction sets over the same pairs and tallies how labels
/// changed between them.
pub fn compare_models(
    before: &[Prediction],
    after: &[Prediction],
    truth: &GroundTruth,
) -> Result<ModelComparison, EvaluationError> {
    let b = index_pairs(before)?;
    let a = index_pairs(after)?;
    let only_before = b.keys().filter(|k| !a.contains_key(*k)).count();
    let only_after = a.keys().filter(|k| !b.contains_key(*k)).count();
    if only_before + only_after > 0 {
        return Err(EvaluationError::MismatchedPairs {
            only_before,
            only_after,
        });
    }

    let before_cm = confusion(before, truth)?;
    let after_cm = confusion(after, truth)?;

    let mut flips = FlipSummary::default();
    for (key, &old) in &b {
        let new = a[key];
        if old == new {
            continue;
        }
        let count = flips.changes.entry((old, new)).or_default();
        match new.known() {
            None => count.unscored += 1,
            Some(n) if truth.get(key.0) == Some(n) => count.correct += 1,
            Some(_) => count.incorrect += 1,
        }
    }

    Ok(ModelComparison {
        before_metrics: before_cm.metrics()?,
        after_metrics: after_cm.metrics()?,
        before: before_cm,
        after: after_cm,
        flips,
    })
}

/// One point of the bot-vs-human (or bot-vs-unknown) scatter plot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScatterRow {
    pub contributor: Login,
    pub n_bot: usize,
    pub n_human: usize,
    pub n_unknown: usize,
    /// `None` when the contributor is absent from the ground truth.
    pub actual: Option<Truth>,
}

pub fn export_scatter(entries: &[ContributorPredictions], truth: &GroundTruth) -> Vec<ScatterRow> {
    entries
        .iter()
        .map(|e| {
            let c = e.counts();
            ScatterRow {
                contributor: e.contributor.clone(),
                n_bot: c.bot,
                n_human: c.human,
                n_unknown: c.unknown,
                actual: truth.get(&e.contributor),
            }
        })
        .collect()
}
