//! Comment normalization, pattern clustering and the feature vector.
//!
//! Two comments are similar when the Jaccard distance between their token
//! sets is at most the threshold. Patterns are the connected components of
//! that relation (single linkage), so a chain of similar comments forms one
//! pattern even when its ends are far apart.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::{ContributorRepoActivity, FeatureVector};

pub const URL_TOKEN: &str = "<url>";
pub const NUM_TOKEN: &str = "<num>";
pub const CODE_TOKEN: &str = "<code>";

/// Default single-linkage distance threshold.
pub const DEFAULT_SIMILARITY_THRESHOLD: f64 = 0.5;

const FENCE: &str = "```";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PatternError {
    InvalidThreshold(f64),
    EmptySizes,
    ZeroSize,
}

impl fmt::Display for PatternError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternError::InvalidThreshold(t) => write!(f, "similarity threshold {t} not in [0, 1]"),
            PatternError::EmptySizes => f.write_str("gini of an empty size list is undefined"),
            PatternError::ZeroSize => f.write_str("pattern sizes must be positive"),
        }
    }
}

impl core::error::Error for PatternError {}

/// Replaces fenced code blocks with a placeholder. An unterminated fence
/// swallows the rest of the body.
fn strip_code_fences(body: &str) -> String {
    let mut out = String::with_capacity(body.len());
    let mut rest = body;
    while let Some(start) = rest.find(FENCE) {
        out.push_str(&rest[..start]);
        out.push(' ');
        out.push_str(CODE_TOKEN);
        out.push(' ');
        let after = &rest[start + FENCE.len()..];
        rest = match after.find(FENCE) {
            Some(end) => &after[end + FENCE.len()..],
            None => "",
        };
    }
    out.push_str(rest);
    out
}

fn is_url(token: &str) -> bool {
    let t = token.trim_start_matches(['(', '<', '[', '"', '\'']);
    t.starts_with("http://") || t.starts_with("https://") || t.starts_with("www.")
}

fn is_number(token: &str) -> bool {
    let t = token.trim_end_matches(['.', ',', ';', ':', '!', '?', ')']);
    let t = t.strip_prefix('#').or_else(|| t.strip_prefix('v')).unwrap_or(t);
    t.starts_with(|c: char| c.is_ascii_digit())
        && t.chars().all(|c| c.is_ascii_digit() || matches!(c, '.' | ',' | '_' | '-' | ':'))
}

/// Lowercases and tokenizes a comment body. URLs, numbers (including version
/// strings and `#123` references) and fenced code blocks become placeholder
/// tokens so templated messages collapse onto each other.
pub fn normalize_comment(body: &str) -> Vec<String> {
    let lowered = strip_code_fences(body).to_lowercase();
    lowered
        .split_whitespace()
        .map(|tok| {
            if tok == CODE_TOKEN {
                CODE_TOKEN.to_string()
            } else if is_url(tok) {
                URL_TOKEN.to_string()
            } else if is_number(tok) {
                NUM_TOKEN.to_string()
            } else {
                tok.to_string()
            }
        })
        .collect()
}

fn token_set<S: AsRef<str>>(tokens: &[S]) -> BTreeSet<&str> {
    tokens.iter().map(AsRef::as_ref).collect()
}

fn jaccard_distance(a: &BTreeSet<&str>, b: &BTreeSet<&str>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        1.0 - inter as f64 / union as f64
    }
}

/// `1 - |A ∩ B| / |A ∪ B|` over token sets; two empty comments are identical.
pub fn comment_distance<S: AsRef<str>>(a: &[S], b: &[S]) -> f64 {
    jaccard_distance(&token_set(a), &token_set(b))
}

/// Pattern membership of each comment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternAssignment {
    /// Pattern index of each comment, in input order. Patterns are numbered by
    /// their first comment.
    pub assignments: Vec<usize>,
    pub sizes: Vec<usize>,
}

impl PatternAssignment {
    pub fn n_patterns(&self) -> usize {
        self.sizes.len()
    }
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    // The smaller index always becomes the root.
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Single-linkage clustering of normalized comments.
pub fn cluster_patterns<S: AsRef<str>>(
    comments: &[Vec<S>],
    threshold: f64,
) -> Result<PatternAssignment, PatternError> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(PatternError::InvalidThreshold(threshold));
    }
    let sets: Vec<BTreeSet<&str>> = comments.iter().map(|c| token_set(c)).collect();
    let n = sets.len();
    let mut ds = DisjointSet::new(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if ds.find(i) != ds.find(j) && jaccard_distance(&sets[i], &sets[j]) <= threshold {
                ds.union(i, j);
            }
        }
    }

    let mut pattern_of_root = alloc::vec![usize::MAX; n];
    let mut assignments = Vec::with_capacity(n);
    let mut sizes: Vec<usize> = Vec::new();
    for i in 0..n {
        let root = ds.find(i);
        if pattern_of_root[root] == usize::MAX {
            pattern_of_root[root] = sizes.len();
            sizes.push(0);
        }
        let p = pattern_of_root[root];
        sizes[p] += 1;
        assignments.push(p);
    }
    Ok(PatternAssignment { assignments, sizes })
}

/// Gini coefficient of pattern sizes, `Σᵢ Σⱼ |xᵢ − xⱼ| / (2 n² μ)`, without
/// small-sample correction. Evaluated in O(n log n) through the sorted form
/// `Σᵢ (2i − n + 1) x₍ᵢ₎`, which equals half the pairwise sum.
pub fn gini(sizes: &[usize]) -> Result<f64, PatternError> {
    if sizes.is_empty() {
        return Err(PatternError::EmptySizes);
    }
    if sizes.contains(&0) {
        return Err(PatternError::ZeroSize);
    }
    let mut sorted = sizes.to_vec();
    sorted.sort_unstable();
    let n = sorted.len() as i128;
    let half_pairwise: i128 = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| (2 * i as i128 - n + 1) * x as i128)
        .sum();
    let total: i128 = sorted.iter().map(|&x| x as i128).sum();
    // pairwise / (2 n² μ) with μ = total / n  ==  half_pairwise / (n · total)
    Ok(half_pairwise as f64 / (n as f64 * total as f64))
}

/// Clusters an activity's comments and summarizes the result.
pub fn compute_features(
    activity: &ContributorRepoActivity,
    threshold: f64,
) -> Result<FeatureVector, PatternError> {
    if activity.comments.is_empty() {
        return Ok(FeatureVector::empty());
    }
    let normalized: Vec<Vec<String>> = activity
        .comments
        .iter()
        .map(|c| normalize_comment(&c.body))
        .collect();
    let assignment = cluster_patterns(&normalized, threshold)?;
    Ok(FeatureVector {
        n_comments: activity.comments.len(),
        n_patterns: assignment.n_patterns(),
        gini: Some(gini(&assignment.sizes)?),
    })
}
