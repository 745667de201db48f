//! Synthetic prediction sets with a controlled per-prediction accuracy.
//!
//! Generation is deterministic given the seed. The generator is ChaCha8
//! (`rand_chacha::ChaCha8Rng::seed_from_u64(seed)`), and draws happen in this
//! order for each contributor `i = 0..n_contributors`:
//!
//! 1. `u ~ U[0,1)`: the contributor is a bot iff `u < bot_prevalence`;
//! 2. `u ~ U[0,1)`: the repository-count bucket is the first whose cumulative
//!    probability exceeds `u` (the last bucket if rounding leaves `u` above
//!    all of them);
//! 3. for buckets spanning several counts, one uniform integer draw picks the
//!    count (`10+` spans `10..=ten_plus_max`);
//! 4. for each repository, `u ~ U[0,1)`: the label is `unknown` iff
//!    `u < unknown_rate`; otherwise a second `u ~ U[0,1)` makes it correct iff
//!    `u < accuracy`.
//!
//! `U[0,1)` is rand's `Standard` distribution for `f64` (53 random bits).
//! Errors are independent across repositories.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::aggregation::{apply_wocp, collect, flatten, AggregationError, RepoBucket};
use crate::evaluation::{confusion, EvaluationError};
use crate::{AggregationConfig, GroundTruth, Label, Login, Prediction, RepoId, Truth};

/// Bucket shares of contributors by number of repositories:
/// 66.5%, 17.9%, 5.8%, 4.5%, 2.8%, 2.5%.
pub fn default_repo_distribution() -> Vec<(RepoBucket, f64)> {
    RepoBucket::ALL
        .iter()
        .copied()
        .zip([0.665, 0.179, 0.058, 0.045, 0.028, 0.025])
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_contributors: usize,
    pub repo_count_distribution: Vec<(RepoBucket, f64)>,
    /// Largest repository count drawn for the `10+` bucket.
    pub ten_plus_max: usize,
    pub bot_prevalence: f64,
    /// Probability that a known per-repository label is correct.
    pub accuracy: f64,
    pub unknown_rate: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_contributors: 2_000,
            repo_count_distribution: default_repo_distribution(),
            ten_plus_max: 20,
            bot_prevalence: 0.5,
            accuracy: 0.9,
            unknown_rate: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SimError {
    InvalidProbability { name: &'static str, value: f64 },
    DistributionSum(f64),
    EmptyDistribution,
    TenPlusMax(usize),
    Aggregation(AggregationError),
    Evaluation(EvaluationError),
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::InvalidProbability { name, value } => write!(f, "{name} out of range: {value}"),
            SimError::DistributionSum(s) => write!(f, "repository distribution sums to {s}, not 1"),
            SimError::EmptyDistribution => f.write_str("repository distribution is empty"),
            SimError::TenPlusMax(m) => write!(f, "ten_plus_max must be at least 10, got {m}"),
            SimError::Aggregation(e) => write!(f, "{e}"),
            SimError::Evaluation(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for SimError {}

impl From<AggregationError> for SimError {
    fn from(e: AggregationError) -> Self {
        SimError::Aggregation(e)
    }
}

impl From<EvaluationError> for SimError {
    fn from(e: EvaluationError) -> Self {
        SimError::Evaluation(e)
    }
}

fn check_unit(name: &'static str, value: f64, include_one: bool) -> Result<(), SimError> {
    let ok = value >= 0.0 && (value < 1.0 || (include_one && value == 1.0));
    if ok {
        Ok(())
    } else {
        Err(SimError::InvalidProbability { name, value })
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        check_unit("bot_prevalence", self.bot_prevalence, true)?;
        check_unit("accuracy", self.accuracy, true)?;
        check_unit("unknown_rate", self.unknown_rate, false)?;
        if self.repo_count_distribution.is_empty() {
            return Err(SimError::EmptyDistribution);
        }
        for &(_, p) in &self.repo_count_distribution {
            check_unit("bucket probability", p, true)?;
        }
        let sum: f64 = self.repo_count_distribution.iter().map(|(_, p)| p).sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(SimError::DistributionSum(sum));
        }
        if self.ten_plus_max < 10 {
            return Err(SimError::TenPlusMax(self.ten_plus_max));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub predictions: Vec<Prediction>,
    pub truth: GroundTruth,
}

fn draw_repo_count(rng: &mut ChaCha8Rng, config: &SimConfig) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut bucket = config.repo_count_distribution.last().map(|(b, _)| *b).unwrap_or(RepoBucket::One);
    for &(b, p) in &config.repo_count_distribution {
        acc += p;
        if u < acc {
            bucket = b;
            break;
        }
    }
    match bucket {
        RepoBucket::One => 1,
        RepoBucket::Two => 2,
        RepoBucket::Three => 3,
        RepoBucket::FourToFive => rng.gen_range(4..=5),
        RepoBucket::SixToNine => rng.gen_range(6..=9),
        RepoBucket::TenPlus => rng.gen_range(10..=config.ten_plus_max),
    }
}

fn opposite(t: Truth) -> Truth {
    match t {
        Truth::Bot => Truth::Human,
        Truth::Human => Truth::Bot,
    }
}

pub fn simulate(config: &SimConfig) -> Result<SimOutput, SimError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut predictions = Vec::new();
    let mut truth = GroundTruth::new();
    for i in 0..config.n_contributors {
        let login = Login::new(&format!("sim{i:06}")).expect("valid login");
        let actual = if rng.gen::<f64>() < config.bot_prevalence {
            Truth::Bot
        } else {
            Truth::Human
        };
        let n_repos = draw_repo_count(&mut rng, config);
        for j in 0..n_repos {
            let label = if rng.gen::<f64>() < config.unknown_rate {
                Label::Unknown
            } else if rng.gen::<f64>() < config.accuracy {
                actual.label()
            } else {
                opposite(actual).label()
            };
            let repo = RepoId::new(&format!("sim/repo{j:03}")).expect("valid repository");
            predictions.push(Prediction::observed(login.clone(), repo, label));
        }
        truth.insert(login, actual).expect("logins are distinct");
    }
    Ok(SimOutput { predictions, truth })
}

/// Raw and WoC-P accuracy on contributors active in at least `min_repos`
/// repositories.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimScore {
    pub raw_accuracy: Option<f64>,
    pub wocp_accuracy: Option<f64>,
    /// Scored (non-unknown) raw predictions.
    pub n: usize,
    pub contributors: usize,
}

pub fn score(output: &SimOutput, min_repos: usize, config: &AggregationConfig) -> Result<SimScore, SimError> {
    let entries: Vec<_> = collect(&output.predictions)?
        .into_iter()
        .filter(|e| e.n_repositories() >= min_repos)
        .collect();
    let raw = confusion(&flatten(&entries), &output.truth)?;
    let revised = confusion(&flatten(&apply_wocp(&entries, config)), &output.truth)?;
    let acc = |c: &crate::evaluation::Confusion| {
        (c.matrix.total() > 0).then(|| 100.0 * c.matrix.correct() as f64 / c.matrix.total() as f64)
    };
    Ok(SimScore {
        raw_accuracy: acc(&raw),
        wocp_accuracy: acc(&revised),
        n: raw.matrix.total(),
        contributors: entries.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub accuracy: f64,
    /// Contributors scored, e.g. `2+` for two or more repositories.
    pub bucket: String,
    pub raw_accuracy: Option<f64>,
    pub wocp_accuracy: Option<f64>,
    pub n: usize,
}

/// Simulates and scores each configuration; one row per configuration.
pub fn sweep(configs: &[SimConfig], min_repos: usize) -> Result<Vec<SweepRow>, SimError> {
    let agg = AggregationConfig::default();
    configs
        .iter()
        .map(|cfg| {
            let s = score(&simulate(cfg)?, min_repos, &agg)?;
            Ok(SweepRow {
                accuracy: cfg.accuracy,
                bucket: format!("{min_repos}+"),
                raw_accuracy: s.raw_accuracy,
                wocp_accuracy: s.wocp_accuracy,
                n: s.n,
            })
        })
        .collect()
}
