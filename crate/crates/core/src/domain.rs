use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use chrono::{DateTime, TimeZone, Utc};

/// A per-repository prediction outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Bot,
    Human,
    Unknown,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::Bot, Label::Human, Label::Unknown];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Bot => "bot",
            Label::Human => "human",
            Label::Unknown => "unknown",
        }
    }

    /// The decided type behind this label, if any.
    pub fn known(self) -> Option<Truth> {
        match self {
            Label::Bot => Some(Truth::Bot),
            Label::Human => Some(Truth::Human),
            Label::Unknown => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bot" => Ok(Label::Bot),
            "human" => Ok(Label::Human),
            "unknown" => Ok(Label::Unknown),
            other => Err(ParseError::new("label", other)),
        }
    }
}

/// The actual type of an account. Unlike [`Label`] there is no `unknown`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Truth {
    Bot,
    Human,
}

impl Truth {
    pub fn as_str(self) -> &'static str {
        self.label().as_str()
    }

    pub fn label(self) -> Label {
        match self {
            Truth::Bot => Label::Bot,
            Truth::Human => Label::Human,
        }
    }
}

impl From<Truth> for Label {
    fn from(t: Truth) -> Self {
        t.label()
    }
}

impl fmt::Display for Truth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Truth {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bot" => Ok(Truth::Bot),
            "human" => Ok(Truth::Human),
            other => Err(ParseError::new("type (bot|human)", other)),
        }
    }
}

/// Failure to parse one of the textual domain values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub what: &'static str,
    pub input: String,
}

impl ParseError {
    pub(crate) fn new(what: &'static str, input: &str) -> Self {
        Self {
            what,
            input: input.to_string(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid {}: {:?}", self.what, self.input)
    }
}

impl core::error::Error for ParseError {}

/// A GitHub login. Logins compare case-insensitively, so the canonical form
/// is lowercase.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Login(String);

impl Login {
    pub fn new(raw: &str) -> Result<Self, ParseError> {
        let raw = raw.trim();
        if raw.is_empty() || raw.chars().any(|c| c.is_whitespace() || c.is_control()) {
            return Err(ParseError::new("login", raw));
        }
        Ok(Login(raw.to_lowercase()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Login {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for Login {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Login::new(s)
    }
}

/// A repository identifier of the form `owner/name`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RepoId(String);

impl RepoId {
    pub fn new(raw: &str) -> Result<Self, ParseError> {
        let err = || ParseError::new("repository (owner/name)", raw);
        let (owner, name) = raw.split_once('/').ok_or_else(err)?;
        let owner_ok = !owner.is_empty()
            && owner.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
        let name_ok = !name.is_empty()
            && name != "."
            && name != ".."
            && name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
        if owner_ok && name_ok {
            Ok(RepoId(raw.to_string()))
        } else {
            Err(err())
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn owner(&self) -> &str {
        self.0.split_once('/').map(|(o, _)| o).unwrap_or_default()
    }

    pub fn name(&self) -> &str {
        self.0.split_once('/').map(|(_, n)| n).unwrap_or_default()
    }
}

impl fmt::Display for RepoId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for RepoId {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RepoId::new(s)
    }
}

/// Where a comment was posted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Source {
    Issue,
    PullRequest,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Issue => "issue",
            Source::PullRequest => "pull_request",
        }
    }
}

impl FromStr for Source {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "issue" => Ok(Source::Issue),
            "pull_request" => Ok(Source::PullRequest),
            other => Err(ParseError::new("source (issue|pull_request)", other)),
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One issue or pull-request comment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommentRecord {
    pub repository: RepoId,
    pub contributor: Login,
    pub created_at: DateTime<Utc>,
    pub body: String,
    pub source: Source,
    /// Unique within `repository`.
    pub comment_id: String,
}

/// All sampled comments of one contributor in one repository, newest first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContributorRepoActivity {
    pub contributor: Login,
    pub repository: RepoId,
    pub comments: Vec<CommentRecord>,
}

/// Features the classifier looks at.
///
/// `n_patterns` is 0 and `gini` is `None` only for an activity without
/// comments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector {
    pub n_comments: usize,
    pub n_patterns: usize,
    pub gini: Option<f64>,
}

impl FeatureVector {
    pub fn empty() -> Self {
        Self {
            n_comments: 0,
            n_patterns: 0,
            gini: None,
        }
    }

    /// `n_patterns / n_comments`, undefined without comments.
    pub fn pattern_ratio(&self) -> Option<f64> {
        (self.n_comments > 0).then(|| self.n_patterns as f64 / self.n_comments as f64)
    }
}

/// How a prediction came to carry its label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Origin {
    /// Straight from the per-repository classifier.
    Observed,
    /// Minority label replaced by the contributor's majority label.
    WocFlipped,
    /// `unknown` replaced by `bot` for a contributor with enough bot predictions.
    WocCompleted,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Observed => "observed",
            Origin::WocFlipped => "woc-flipped",
            Origin::WocCompleted => "woc-completed",
        }
    }
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Origin {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "observed" => Ok(Origin::Observed),
            "woc-flipped" => Ok(Origin::WocFlipped),
            "woc-completed" => Ok(Origin::WocCompleted),
            other => Err(ParseError::new("origin", other)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub contributor: Login,
    pub repository: RepoId,
    pub label: Label,
    pub origin: Origin,
    pub features: Option<FeatureVector>,
}

impl Prediction {
    pub fn observed(contributor: Login, repository: RepoId, label: Label) -> Self {
        Self {
            contributor,
            repository,
            label,
            origin: Origin::Observed,
            features: None,
        }
    }
}

/// Label of one repository within a [`ContributorPredictions`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Verdict {
    pub label: Label,
    pub origin: Origin,
}

impl Verdict {
    pub fn observed(label: Label) -> Self {
        Self {
            label,
            origin: Origin::Observed,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LabelCounts {
    pub bot: usize,
    pub human: usize,
    pub unknown: usize,
}

impl LabelCounts {
    pub fn tally<I: IntoIterator<Item = Label>>(labels: I) -> Self {
        let mut c = LabelCounts::default();
        for l in labels {
            match l {
                Label::Bot => c.bot += 1,
                Label::Human => c.human += 1,
                Label::Unknown => c.unknown += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.bot + self.human + self.unknown
    }
}

/// Every per-repository prediction of one contributor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContributorPredictions {
    pub contributor: Login,
    pub per_repo: BTreeMap<RepoId, Verdict>,
}

impl ContributorPredictions {
    pub fn new(contributor: Login) -> Self {
        Self {
            contributor,
            per_repo: BTreeMap::new(),
        }
    }

    pub fn counts(&self) -> LabelCounts {
        LabelCounts::tally(self.per_repo.values().map(|v| v.label))
    }

    pub fn n_repositories(&self) -> usize {
        self.per_repo.len()
    }

    pub fn predictions(&self) -> impl Iterator<Item = Prediction> + '_ {
        self.per_repo.iter().map(move |(repo, v)| Prediction {
            contributor: self.contributor.clone(),
            repository: repo.clone(),
            label: v.label,
            origin: v.origin,
            features: None,
        })
    }
}

/// Manually established account types.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroundTruth(BTreeMap<Login, Truth>);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DuplicateTruth(pub Login);

impl fmt::Display for DuplicateTruth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "contributor {} appears more than once in the ground truth", self.0)
    }
}

impl core::error::Error for DuplicateTruth {}

impl GroundTruth {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, login: Login, truth: Truth) -> Result<(), DuplicateTruth> {
        if self.0.contains_key(&login) {
            return Err(DuplicateTruth(login));
        }
        self.0.insert(login, truth);
        Ok(())
    }

    pub fn from_entries<I>(entries: I) -> Result<Self, DuplicateTruth>
    where
        I: IntoIterator<Item = (Login, Truth)>,
    {
        let mut gt = Self::new();
        for (login, truth) in entries {
            gt.insert(login, truth)?;
        }
        Ok(gt)
    }

    pub fn get(&self, login: &Login) -> Option<Truth> {
        self.0.get(login).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Login, Truth)> {
        self.0.iter().map(|(l, t)| (l, *t))
    }
}

/// Binary confusion matrix with `bot` as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn new(tp: usize, tn: usize, fp: usize, fn_: usize) -> Self {
        Self { tp, tn, fp, fn_ }
    }

    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn correct(&self) -> usize {
        self.tp + self.tn
    }

    pub fn incorrect(&self) -> usize {
        self.fp + self.fn_
    }

    pub(crate) fn record(&mut self, predicted: Truth, actual: Truth) {
        match (predicted, actual) {
            (Truth::Bot, Truth::Bot) => self.tp += 1,
            (Truth::Human, Truth::Human) => self.tn += 1,
            (Truth::Bot, Truth::Human) => self.fp += 1,
            (Truth::Human, Truth::Bot) => self.fn_ += 1,
        }
    }
}

/// Knobs shared by the sampling, classification and aggregation stages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggregationConfig {
    /// Label given to every known prediction of a contributor with as many
    /// bot as human predictions.
    pub tie_break: Truth,
    /// Enables [`crate::aggregation::complete_unknowns`].
    pub complete_unknowns: bool,
    /// Minimum number of bot predictions before unknowns are completed.
    pub bot_threshold: usize,
    pub min_comments: usize,
    pub max_comments: usize,
    /// Comments created before this instant are ignored.
    pub since: DateTime<Utc>,
}

/// Default cutoff: December 2016.
pub fn default_since() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2016, 12, 1, 0, 0, 0).unwrap()
}

impl Default for AggregationConfig {
    fn default() -> Self {
        Self {
            tie_break: Truth::Human,
            complete_unknowns: false,
            bot_threshold: 3,
            min_comments: 10,
            max_comments: 100,
            since: default_since(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    ZeroBotThreshold,
    ZeroMinComments,
    MinAboveMax { min: usize, max: usize },
    OutOfRange { name: &'static str, value: f64 },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::ZeroBotThreshold => f.write_str("bot threshold must be at least 1"),
            ConfigError::ZeroMinComments => f.write_str("min comments must be at least 1"),
            ConfigError::MinAboveMax { min, max } => {
                write!(f, "min comments ({min}) exceeds max comments ({max})")
            }
            ConfigError::OutOfRange { name, value } => write!(f, "{name} out of range: {value}"),
        }
    }
}

impl core::error::Error for ConfigError {}

impl AggregationConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.bot_threshold == 0 {
            return Err(ConfigError::ZeroBotThreshold);
        }
        if self.min_comments == 0 {
            return Err(ConfigError::ZeroMinComments);
        }
        if self.min_comments > self.max_comments {
            return Err(ConfigError::MinAboveMax {
                min: self.min_comments,
                max: self.max_comments,
            });
        }
        Ok(())
    }
}
