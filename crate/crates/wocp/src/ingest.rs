//! Offline corpus loading.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use chrono::{DateTime, Utc};
use wocp_core::corpus::{sample, validate_corpus, Corpus, RawComment};

use crate::formats::{parse_corpus_lines, LineError};

/// Cutoff date and per-contributor cap, applied identically to loaded and
/// fetched corpora.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplingRules {
    pub since: DateTime<Utc>,
    pub max_comments: usize,
}

impl Default for SamplingRules {
    fn default() -> Self {
        Self {
            since: wocp_core::default_since(),
            max_comments: 100,
        }
    }
}

impl SamplingRules {
    pub fn apply(&self, corpus: Corpus) -> Corpus {
        sample(corpus, &self.since, self.max_comments)
    }
}

#[derive(Debug, Clone, Default)]
pub struct LoadedCorpus {
    pub corpus: Corpus,
    /// Lines that were skipped, in line order.
    pub errors: Vec<LineError>,
}

pub fn load_corpus(path: &Path, rules: &SamplingRules) -> std::io::Result<LoadedCorpus> {
    let file = File::open(path)?;
    load_corpus_from(BufReader::new(file), rules)
}

pub fn load_corpus_from<R: BufRead>(r: R, rules: &SamplingRules) -> std::io::Result<LoadedCorpus> {
    let (lines, mut errors) = parse_corpus_lines(r)?;
    let (line_numbers, raws): (Vec<usize>, Vec<RawComment>) = lines.into_iter().unzip();
    let (corpus, rejected) = validate_corpus(&raws);
    errors.extend(rejected.into_iter().map(|e| LineError {
        line: line_numbers[e.index],
        message: e.kind.to_string(),
    }));
    errors.sort_by_key(|e| e.line);
    Ok(LoadedCorpus {
        corpus: rules.apply(corpus),
        errors,
    })
}
