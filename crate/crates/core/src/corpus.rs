//! Comment corpora: validation, sampling, grouping, repository qualification.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use chrono::{DateTime, SecondsFormat, Utc};

use crate::{CommentRecord, ContributorRepoActivity, Login, ParseError, RepoId, Source};

/// A comment as found in an input file, before validation.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RawComment {
    pub repo: String,
    pub contributor: String,
    pub created_at: String,
    pub body: String,
    pub source: String,
    pub id: String,
}

impl From<&CommentRecord> for RawComment {
    fn from(r: &CommentRecord) -> Self {
        RawComment {
            repo: r.repository.to_string(),
            contributor: r.contributor.to_string(),
            created_at: format_timestamp(&r.created_at),
            body: r.body.clone(),
            source: r.source.to_string(),
            id: r.comment_id.clone(),
        }
    }
}

/// Canonical textual form of a timestamp: RFC 3339, UTC, `Z` suffix.
pub fn format_timestamp(ts: &DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

pub fn parse_timestamp(raw: &str) -> Result<DateTime<Utc>, ParseError> {
    DateTime::parse_from_rfc3339(raw.trim())
        .map(|t| t.with_timezone(&Utc))
        .map_err(|_| ParseError::new("timestamp", raw))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RecordErrorKind {
    Repository(ParseError),
    Contributor(ParseError),
    Timestamp(ParseError),
    Source(ParseError),
    MissingId,
    Duplicate { repository: RepoId, comment_id: String },
}

/// Why the record at `index` (position in the input batch) was rejected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordError {
    pub index: usize,
    pub kind: RecordErrorKind,
}

impl fmt::Display for RecordErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RecordErrorKind::Repository(e)
            | RecordErrorKind::Contributor(e)
            | RecordErrorKind::Timestamp(e)
            | RecordErrorKind::Source(e) => write!(f, "{e}"),
            RecordErrorKind::MissingId => f.write_str("missing comment id"),
            RecordErrorKind::Duplicate {
                repository,
                comment_id,
            } => write!(f, "duplicate comment {comment_id} in {repository}"),
        }
    }
}

impl fmt::Display for RecordError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "record {}: {}", self.index, self.kind)
    }
}

impl core::error::Error for RecordError {}

/// A validated set of comments without duplicate `(repository, comment_id)`
/// pairs, kept in canonical order: repository, contributor, newest first,
/// comment id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    records: Vec<CommentRecord>,
}

fn canonical_order(a: &CommentRecord, b: &CommentRecord) -> Ordering {
    a.repository
        .cmp(&b.repository)
        .then_with(|| a.contributor.cmp(&b.contributor))
        .then_with(|| b.created_at.cmp(&a.created_at))
        .then_with(|| a.comment_id.cmp(&b.comment_id))
}

impl Corpus {
    /// Builds a corpus from already-typed records. Later duplicates of a
    /// `(repository, comment_id)` pair are rejected; `index` in the errors is
    /// the position in `records`.
    pub fn from_records(records: Vec<CommentRecord>) -> (Corpus, Vec<RecordError>) {
        Self::from_indexed(records.into_iter().enumerate())
    }

    fn from_indexed<I>(records: I) -> (Corpus, Vec<RecordError>)
    where
        I: IntoIterator<Item = (usize, CommentRecord)>,
    {
        let mut seen = BTreeSet::new();
        let mut kept = Vec::new();
        let mut errors = Vec::new();
        for (index, rec) in records {
            if seen.insert((rec.repository.clone(), rec.comment_id.clone())) {
                kept.push(rec);
            } else {
                errors.push(RecordError {
                    index,
                    kind: RecordErrorKind::Duplicate {
                        repository: rec.repository,
                        comment_id: rec.comment_id,
                    },
                });
            }
        }
        kept.sort_by(canonical_order);
        (Corpus { records: kept }, errors)
    }

    pub fn records(&self) -> &[CommentRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<CommentRecord> {
        self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn to_raw(&self) -> Vec<RawComment> {
        self.records.iter().map(RawComment::from).collect()
    }

    /// Distinct repositories, sorted.
    pub fn repositories(&self) -> Vec<RepoId> {
        let mut out: Vec<RepoId> = Vec::new();
        for r in &self.records {
            if out.last() != Some(&r.repository) {
                out.push(r.repository.clone());
            }
        }
        out
    }

    /// The slice of the corpus belonging to one repository.
    pub fn for_repository(&self, repository: &RepoId) -> &[CommentRecord] {
        let start = self.records.partition_point(|r| &r.repository < repository);
        let end = self.records.partition_point(|r| &r.repository <= repository);
        &self.records[start..end]
    }
}

fn parse_record(raw: &RawComment) -> Result<CommentRecord, RecordErrorKind> {
    let repository = RepoId::new(raw.repo.trim()).map_err(RecordErrorKind::Repository)?;
    let contributor = Login::new(&raw.contributor).map_err(RecordErrorKind::Contributor)?;
    let created_at = parse_timestamp(&raw.created_at).map_err(RecordErrorKind::Timestamp)?;
    let source = raw
        .source
        .trim()
        .parse::<Source>()
        .map_err(RecordErrorKind::Source)?;
    let comment_id = raw.id.trim();
    if comment_id.is_empty() {
        return Err(RecordErrorKind::MissingId);
    }
    Ok(CommentRecord {
        repository,
        contributor,
        created_at,
        body: raw.body.clone(),
        source,
        comment_id: comment_id.to_string(),
    })
}

/// Validates a batch of raw records. Invalid records are reported, one error
/// each, and never abort the batch.
pub fn validate_corpus(records: &[RawComment]) -> (Corpus, Vec<RecordError>) {
    let mut errors = Vec::new();
    let parsed: Vec<(usize, CommentRecord)> = records
        .iter()
        .enumerate()
        .filter_map(|(index, raw)| match parse_record(raw) {
            Ok(rec) => Some((index, rec)),
            Err(kind) => {
                errors.push(RecordError { index, kind });
                None
            }
        })
        .collect();
    let (corpus, dupes) = Corpus::from_indexed(parsed);
    errors.extend(dupes);
    errors.sort_by_key(|e| e.index);
    (corpus, errors)
}

/// Drops comments created before `since` and keeps at most
/// `max_per_contributor` comments (the newest) per contributor and
/// repository. Issue and pull-request comments share the cap.
pub fn sample(corpus: Corpus, since: &DateTime<Utc>, max_per_contributor: usize) -> Corpus {
    let mut kept: Vec<CommentRecord> = Vec::with_capacity(corpus.records.len());
    let mut run = 0usize;
    for rec in corpus.records {
        if rec.created_at < *since {
            continue;
        }
        let same_group = kept
            .last()
            .is_some_and(|p| p.repository == rec.repository && p.contributor == rec.contributor);
        run = if same_group { run + 1 } else { 1 };
        if run <= max_per_contributor {
            kept.push(rec);
        }
    }
    Corpus { records: kept }
}

/// Groups a corpus into one activity per (contributor, repository) pair,
/// ordered by repository then contributor, comments newest first.
pub fn activity_by_contributor(corpus: &Corpus) -> Vec<ContributorRepoActivity> {
    group_records(&corpus.records)
}

pub(crate) fn group_records(records: &[CommentRecord]) -> Vec<ContributorRepoActivity> {
    let mut out: Vec<ContributorRepoActivity> = Vec::new();
    for rec in records {
        match out.last_mut() {
            Some(a) if a.repository == rec.repository && a.contributor == rec.contributor => {
                a.comments.push(rec.clone())
            }
            _ => out.push(ContributorRepoActivity {
                contributor: rec.contributor.clone(),
                repository: rec.repository.clone(),
                comments: alloc::vec![rec.clone()],
            }),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepositoryStats {
    pub repository: RepoId,
    pub n_issues: u64,
    pub n_pull_requests: u64,
}

/// Default minimum number of issues plus pull requests.
pub const MIN_QUALIFYING_ACTIVITY: u64 = 100;

/// A repository qualifies when its issues and pull requests together reach
/// `min_total`.
pub fn qualify_repository(stats: &RepositoryStats, min_total: u64) -> bool {
    stats.n_issues.saturating_add(stats.n_pull_requests) >= min_total
}
