//! Live comment ingestion through the GitHub GraphQL API.
//!
//! For every repository the fetcher first checks that it qualifies (enough
//! issues plus pull requests), then walks the `issues` and `pullRequests`
//! connections with cursor pagination. Each thread contributes its newest 100
//! comments, and older comments are paged backwards until they predate the
//! cutoff. The collected comments go through the same sampling rules as an
//! offline corpus.
//!
//! Transport and time are behind the [`Transport`] and [`Clock`] traits.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use wocp_core::corpus::{parse_timestamp, qualify_repository, Corpus, RepositoryStats, MIN_QUALIFYING_ACTIVITY};
use wocp_core::{CommentRecord, Login, RepoId, Source};

use crate::ingest::SamplingRules;

pub const GRAPHQL_ENDPOINT: &str = "https://api.github.com/graphql";
pub const TOKEN_ENV: &str = "GITHUB_TOKEN";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    /// `x-ratelimit-remaining`
    pub rate_remaining: Option<u64>,
    /// `x-ratelimit-reset`, epoch seconds.
    pub rate_reset: Option<i64>,
    /// `retry-after`, seconds.
    pub retry_after: Option<u64>,
    pub body: String,
}

pub trait Transport: Sync {
    /// POSTs a GraphQL payload. `Err` is a network-level failure.
    fn post_graphql(&self, payload: &str) -> Result<HttpResponse, String>;
}

pub trait Clock: Sync {
    fn now(&self) -> DateTime<Utc>;
    fn sleep(&self, d: Duration);
}

pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }

    fn sleep(&self, d: Duration) {
        std::thread::sleep(d)
    }
}

pub struct UreqTransport {
    agent: ureq::Agent,
    endpoint: String,
    token: String,
}

impl UreqTransport {
    pub fn new(token: String) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(60)))
            .build()
            .into();
        Self {
            agent,
            endpoint: GRAPHQL_ENDPOINT.to_string(),
            token,
        }
    }
}

fn header<T: std::str::FromStr>(resp: &ureq::http::Response<ureq::Body>, name: &str) -> Option<T> {
    resp.headers().get(name)?.to_str().ok()?.trim().parse().ok()
}

impl Transport for UreqTransport {
    fn post_graphql(&self, payload: &str) -> Result<HttpResponse, String> {
        let mut resp = self
            .agent
            .post(&self.endpoint)
            .header("Authorization", &format!("bearer {}", self.token))
            .header("User-Agent", concat!("wocp/", env!("CARGO_PKG_VERSION")))
            .header("Content-Type", "application/json")
            .send(payload)
            .map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        let rate_remaining = header(&resp, "x-ratelimit-remaining");
        let rate_reset = header(&resp, "x-ratelimit-reset");
        let retry_after = header(&resp, "retry-after");
        let body = resp.body_mut().read_to_string().map_err(|e| e.to_string())?;
        Ok(HttpResponse {
            status,
            rate_remaining,
            rate_reset,
            retry_after,
            body,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FetchError {
    #[error("authentication failed")]
    Auth,
    #[error("repository not found")]
    NotFound,
    #[error("rate limit still exhausted after {0} waits")]
    RateLimitExhausted(usize),
    #[error("transient failure after retries: {0}")]
    Transient(String),
    #[error("API error: {0}")]
    Api(String),
    #[error("unexpected response: {0}")]
    Decode(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RetryPolicy {
    /// Attempts per request for transient failures (network errors, 5xx).
    pub attempts: usize,
    /// Doubled after each failed attempt.
    pub base_delay: Duration,
    /// Rate-limit waits allowed per request before giving up.
    pub max_rate_limit_waits: usize,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 3,
            base_delay: Duration::from_secs(1),
            max_rate_limit_waits: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchPlan {
    pub repositories: Vec<RepoId>,
    pub since: DateTime<Utc>,
    pub max_comments_per_contributor: usize,
    /// Threads per page, 1 to 100.
    pub page_size: u32,
    /// Repositories below this many issues plus pull requests are skipped.
    pub min_activity: u64,
    pub workers: usize,
    pub token_env: String,
    pub retry: RetryPolicy,
}

impl Default for FetchPlan {
    fn default() -> Self {
        Self {
            repositories: Vec::new(),
            since: wocp_core::default_since(),
            max_comments_per_contributor: 100,
            page_size: 50,
            min_activity: MIN_QUALIFYING_ACTIVITY,
            workers: 4,
            token_env: TOKEN_ENV.to_string(),
            retry: RetryPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PlanError {
    #[error("page size must be between 1 and 100, got {0}")]
    PageSize(u32),
    #[error("cutoff {0} is in the future")]
    FutureSince(DateTime<Utc>),
    #[error("at least one worker is required")]
    Workers,
    #[error("max comments must be at least 1")]
    MaxComments,
    #[error("environment variable {0} is not set")]
    MissingToken(String),
}

impl FetchPlan {
    pub fn validate(&self, now: DateTime<Utc>) -> Result<(), PlanError> {
        if !(1..=100).contains(&self.page_size) {
            return Err(PlanError::PageSize(self.page_size));
        }
        if self.since >= now {
            return Err(PlanError::FutureSince(self.since));
        }
        if self.workers == 0 {
            return Err(PlanError::Workers);
        }
        if self.max_comments_per_contributor == 0 {
            return Err(PlanError::MaxComments);
        }
        Ok(())
    }

    pub fn token(&self) -> Result<String, PlanError> {
        std::env::var(&self.token_env)
            .ok()
            .filter(|t| !t.trim().is_empty())
            .ok_or_else(|| PlanError::MissingToken(self.token_env.clone()))
    }

    fn sampling(&self) -> SamplingRules {
        SamplingRules {
            since: self.since,
            max_comments: self.max_comments_per_contributor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RepoStatus {
    Ok,
    NotQualified { n_issues: u64, n_pull_requests: u64 },
    NotFound,
    AuthFailed,
    Failed { message: String },
}

impl RepoStatus {
    pub fn is_failure(&self) -> bool {
        matches!(self, RepoStatus::NotFound | RepoStatus::AuthFailed | RepoStatus::Failed { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RepoFetchReport {
    pub repository: String,
    #[serde(flatten)]
    pub status: RepoStatus,
    pub pages: usize,
    pub rate_limit_waits: usize,
    pub comments: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct FetchReport {
    pub repositories: Vec<RepoFetchReport>,
}

impl FetchReport {
    pub fn failures(&self) -> impl Iterator<Item = &RepoFetchReport> {
        self.repositories.iter().filter(|r| r.status.is_failure())
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        for r in &self.repositories {
            let status = match &r.status {
                RepoStatus::Ok => "ok".to_string(),
                RepoStatus::NotQualified { n_issues, n_pull_requests } => {
                    format!("skipped: {n_issues} issues + {n_pull_requests} pull requests")
                }
                RepoStatus::NotFound => "not found".to_string(),
                RepoStatus::AuthFailed => "authentication failed".to_string(),
                RepoStatus::Failed { message } => format!("failed: {message}"),
            };
            out.push_str(&format!(
                "{}\t{}\tpages={}\twaits={}\tcomments={}\n",
                r.repository, status, r.pages, r.rate_limit_waits, r.comments
            ));
        }
        let fetched: usize = self.repositories.iter().map(|r| r.comments).sum();
        out.push_str(&format!(
            "{} repositories, {} comments fetched, {} failures\n",
            self.repositories.len(),
            fetched,
            self.failures().count()
        ));
        out
    }

    /// Machine-readable form: every repository plus the failures alone.
    pub fn to_json(&self) -> Value {
        json!({
            "repositories": self.repositories,
            "failures": self.failures().collect::<Vec<_>>(),
        })
    }
}

pub struct FetchOutcome {
    pub corpus: Corpus,
    pub report: FetchReport,
}

const STATS_QUERY: &str = r#"
query($owner: String!, $name: String!) {
  repository(owner: $owner, name: $name) {
    issues { totalCount }
    pullRequests { totalCount }
  }
}"#;

const COMMENT_FIELDS: &str = r#"
fragment commentPage on IssueCommentConnection {
  pageInfo { hasPreviousPage startCursor }
  nodes { databaseId createdAt body author { login } }
}"#;

const ISSUES_QUERY: &str = r#"
query($owner: String!, $name: String!, $first: Int!, $after: String, $since: DateTime) {
  repository(owner: $owner, name: $name) {
    threads: issues(first: $first, after: $after, filterBy: {since: $since}, orderBy: {field: UPDATED_AT, direction: DESC}) {
      pageInfo { hasNextPage endCursor }
      nodes { id updatedAt comments(last: 100) { ...commentPage } }
    }
  }
}"#;

const PULLS_QUERY: &str = r#"
query($owner: String!, $name: String!, $first: Int!, $after: String) {
  repository(owner: $owner, name: $name) {
    threads: pullRequests(first: $first, after: $after, orderBy: {field: UPDATED_AT, direction: DESC}) {
      pageInfo { hasNextPage endCursor }
      nodes { id updatedAt comments(last: 100) { ...commentPage } }
    }
  }
}"#;

const MORE_COMMENTS_QUERY: &str = r#"
query($id: ID!, $before: String!) {
  node(id: $id) {
    ... on Issue { comments(last: 100, before: $before) { ...commentPage } }
    ... on PullRequest { comments(last: 100, before: $before) { ...commentPage } }
  }
}"#;

#[derive(Debug, Deserialize, Default)]
#[serde(rename_all = "camelCase", default)]
struct PageInfo {
    has_next_page: bool,
    end_cursor: Option<String>,
    has_previous_page: bool,
    start_cursor: Option<String>,
}

#[derive(Debug, Deserialize)]
struct Author {
    login: String,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct CommentNode {
    database_id: Option<u64>,
    created_at: String,
    #[serde(default)]
    body: String,
    author: Option<Author>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct CommentPage {
    page_info: PageInfo,
    nodes: Vec<Option<CommentNode>>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct ThreadNode {
    id: String,
    updated_at: String,
    comments: CommentPage,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct ThreadPage {
    page_info: PageInfo,
    nodes: Vec<Option<ThreadNode>>,
}

fn decode<T: serde::de::DeserializeOwned>(v: &Value, pointer: &str) -> Result<T, FetchError> {
    let inner = v
        .pointer(pointer)
        .filter(|x| !x.is_null())
        .ok_or_else(|| FetchError::Decode(format!("missing {pointer}")))?;
    serde_json::from_value(inner.clone()).map_err(|e| FetchError::Decode(format!("{pointer}: {e}")))
}

/// One repository's worth of requests, with its counters.
struct Session<'a> {
    transport: &'a dyn Transport,
    clock: &'a dyn Clock,
    policy: &'a RetryPolicy,
    pages: usize,
    waits: usize,
}

impl Session<'_> {
    fn wait_for_reset(&mut self, resp: &HttpResponse) {
        let wait = match (resp.retry_after, resp.rate_reset) {
            (Some(secs), _) => Duration::from_secs(secs),
            (None, Some(reset)) => {
                let secs = reset - self.clock.now().timestamp() + 1;
                Duration::from_secs(secs.max(1) as u64)
            }
            (None, None) => Duration::from_secs(60),
        };
        self.waits += 1;
        self.clock.sleep(wait);
    }

    fn query(&mut self, query: &str, variables: Value) -> Result<Value, FetchError> {
        let payload = json!({ "query": query, "variables": variables }).to_string();
        let mut failures = 0usize;
        let mut rate_waits = 0usize;
        loop {
            let resp = match self.transport.post_graphql(&payload) {
                Ok(resp) => resp,
                Err(e) => {
                    failures += 1;
                    if failures >= self.policy.attempts {
                        return Err(FetchError::Transient(e));
                    }
                    self.clock.sleep(self.policy.base_delay * (1 << (failures - 1)) as u32);
                    continue;
                }
            };
            let body: Option<Value> = serde_json::from_str(&resp.body).ok();
            let error_types: Vec<String> = body
                .as_ref()
                .and_then(|b| b.get("errors"))
                .and_then(Value::as_array)
                .map(|errs| errs.iter().filter_map(|e| e.get("type").and_then(Value::as_str).map(String::from)).collect())
                .unwrap_or_default();

            if resp.status == 401 {
                return Err(FetchError::Auth);
            }
            let limited = error_types.iter().any(|t| t == "RATE_LIMITED")
                || (matches!(resp.status, 403 | 429)
                    && (resp.rate_remaining == Some(0) || resp.retry_after.is_some()));
            if limited {
                rate_waits += 1;
                if rate_waits > self.policy.max_rate_limit_waits {
                    return Err(FetchError::RateLimitExhausted(rate_waits - 1));
                }
                self.wait_for_reset(&resp);
                continue;
            }
            if resp.status >= 500 {
                failures += 1;
                if failures >= self.policy.attempts {
                    return Err(FetchError::Transient(format!("HTTP {}", resp.status)));
                }
                self.clock.sleep(self.policy.base_delay * (1 << (failures - 1)) as u32);
                continue;
            }
            if resp.status != 200 {
                return Err(FetchError::Api(format!("HTTP {}", resp.status)));
            }
            let body = body.ok_or_else(|| FetchError::Decode("response is not JSON".into()))?;
            if error_types.iter().any(|t| t == "NOT_FOUND") {
                return Err(FetchError::NotFound);
            }
            if let Some(errs) = body.get("errors").and_then(Value::as_array).filter(|e| !e.is_empty()) {
                let messages: Vec<String> = errs
                    .iter()
                    .map(|e| e.get("message").and_then(Value::as_str).unwrap_or("unknown error").to_string())
                    .collect();
                return Err(FetchError::Api(messages.join("; ")));
            }
            self.pages += 1;
            if resp.rate_remaining == Some(0) {
                self.wait_for_reset(&resp);
            }
            return body
                .get("data")
                .cloned()
                .ok_or_else(|| FetchError::Decode("missing data".into()));
        }
    }
}

struct RepoFetcher<'a, 'b> {
    session: Session<'a>,
    repo: &'b RepoId,
    plan: &'b FetchPlan,
    records: Vec<CommentRecord>,
}

impl RepoFetcher<'_, '_> {
    fn stats(&mut self) -> Result<RepositoryStats, FetchError> {
        let data = self.session.query(
            STATS_QUERY,
            json!({ "owner": self.repo.owner(), "name": self.repo.name() }),
        )?;
        if data.pointer("/repository").is_none_or(Value::is_null) {
            return Err(FetchError::NotFound);
        }
        Ok(RepositoryStats {
            repository: self.repo.clone(),
            n_issues: decode(&data, "/repository/issues/totalCount")?,
            n_pull_requests: decode(&data, "/repository/pullRequests/totalCount")?,
        })
    }

    /// Keeps qualifying comments of a page. Returns whether older comments
    /// of the same thread may still be recent enough.
    fn take_comments(&mut self, page: &CommentPage, source: Source) -> bool {
        let mut oldest: Option<DateTime<Utc>> = None;
        for node in page.nodes.iter().flatten() {
            let Ok(created_at) = parse_timestamp(&node.created_at) else {
                continue;
            };
            oldest = Some(oldest.map_or(created_at, |o| o.min(created_at)));
            // deleted accounts have no author
            let (Some(author), Some(id)) = (&node.author, node.database_id) else {
                continue;
            };
            let Ok(contributor) = Login::new(&author.login) else {
                continue;
            };
            if created_at < self.plan.since {
                continue;
            }
            self.records.push(CommentRecord {
                repository: self.repo.clone(),
                contributor,
                created_at,
                body: node.body.clone(),
                source,
                comment_id: id.to_string(),
            });
        }
        oldest.is_some_and(|o| o >= self.plan.since)
    }

    fn thread(&mut self, thread: &ThreadNode, source: Source) -> Result<(), FetchError> {
        let mut page_info = &thread.comments.page_info;
        let mut more = self.take_comments(&thread.comments, source);
        let mut owned;
        while more && page_info.has_previous_page {
            let Some(before) = page_info.start_cursor.clone() else {
                break;
            };
            let data = self
                .session
                .query(MORE_COMMENTS_QUERY, json!({ "id": thread.id, "before": before }))?;
            owned = decode::<CommentPage>(&data, "/node/comments")?;
            more = self.take_comments(&owned, source);
            page_info = &owned.page_info;
        }
        Ok(())
    }

    fn threads(&mut self, source: Source) -> Result<(), FetchError> {
        let query = match source {
            Source::Issue => ISSUES_QUERY,
            Source::PullRequest => PULLS_QUERY,
        };
        let full_query = format!("{query}\n{COMMENT_FIELDS}");
        let mut after: Option<String> = None;
        loop {
            let mut vars = json!({
                "owner": self.repo.owner(),
                "name": self.repo.name(),
                "first": self.plan.page_size,
                "after": after,
            });
            if source == Source::Issue {
                vars["since"] = json!(wocp_core::corpus::format_timestamp(&self.plan.since));
            }
            let data = self.session.query(&full_query, vars)?;
            let page: ThreadPage = decode(&data, "/repository/threads")?;
            let mut reached_old = false;
            for thread in page.nodes.iter().flatten() {
                if parse_timestamp(&thread.updated_at).is_ok_and(|t| t < self.plan.since) {
                    // ordered by last update: nothing newer follows
                    reached_old = true;
                    break;
                }
                self.thread(thread, source)?;
            }
            if reached_old || !page.page_info.has_next_page {
                return Ok(());
            }
            match page.page_info.end_cursor {
                Some(c) => after = Some(c),
                None => return Ok(()),
            }
        }
    }

    fn run(&mut self) -> Result<RepoStatus, FetchError> {
        let stats = self.stats()?;
        if !qualify_repository(&stats, self.plan.min_activity) {
            return Ok(RepoStatus::NotQualified {
                n_issues: stats.n_issues,
                n_pull_requests: stats.n_pull_requests,
            });
        }
        self.threads(Source::Issue)?;
        self.threads(Source::PullRequest)?;
        Ok(RepoStatus::Ok)
    }
}

type RepoOutcome = (Vec<CommentRecord>, RepoFetchReport);

fn fetch_one(
    repo: &RepoId,
    plan: &FetchPlan,
    transport: &dyn Transport,
    clock: &dyn Clock,
) -> RepoOutcome {
    let mut f = RepoFetcher {
        session: Session {
            transport,
            clock,
            policy: &plan.retry,
            pages: 0,
            waits: 0,
        },
        repo,
        plan,
        records: Vec::new(),
    };
    let status = match f.run() {
        Ok(s) => s,
        Err(FetchError::NotFound) => RepoStatus::NotFound,
        Err(FetchError::Auth) => RepoStatus::AuthFailed,
        Err(e) => RepoStatus::Failed { message: e.to_string() },
    };
    // partial results of a failed repository are kept
    let sampled = plan.sampling().apply(Corpus::from_records(std::mem::take(&mut f.records)).0);
    let report = RepoFetchReport {
        repository: repo.to_string(),
        status,
        pages: f.session.pages,
        rate_limit_waits: f.session.waits,
        comments: sampled.len(),
    };
    (sampled.into_records(), report)
}

/// Fetches every repository of the plan with up to `plan.workers` threads.
/// Failures are recorded in the report; whatever was fetched is returned.
pub fn fetch_comments(plan: &FetchPlan, transport: &dyn Transport, clock: &dyn Clock) -> FetchOutcome {
    let n = plan.repositories.len();
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<RepoOutcome>>> = Mutex::new((0..n).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..plan.workers.min(n).max(1) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= n {
                    break;
                }
                let r = fetch_one(&plan.repositories[i], plan, transport, clock);
                results.lock().expect("results lock")[i] = Some(r);
            });
        }
    });
    let mut records = Vec::new();
    let mut report = FetchReport::default();
    for (recs, rep) in results.into_inner().expect("results lock").into_iter().flatten() {
        records.extend(recs);
        report.repositories.push(rep);
    }
    let (corpus, _) = Corpus::from_records(records);
    FetchOutcome {
        corpus: plan.sampling().apply(corpus),
        report,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;
    use std::collections::{BTreeMap, VecDeque};
    use std::sync::atomic::AtomicI64;

    struct FakeClock {
        now: AtomicI64,
        slept: Mutex<Vec<Duration>>,
    }

    impl FakeClock {
        fn new() -> Self {
            Self {
                now: AtomicI64::new(Utc.with_ymd_and_hms(2021, 6, 1, 0, 0, 0).unwrap().timestamp()),
                slept: Mutex::new(Vec::new()),
            }
        }
    }

    impl Clock for FakeClock {
        fn now(&self) -> DateTime<Utc> {
            DateTime::from_timestamp(self.now.load(Ordering::SeqCst), 0).unwrap()
        }

        fn sleep(&self, d: Duration) {
            self.now.fetch_add(d.as_secs() as i64, Ordering::SeqCst);
            self.slept.lock().unwrap().push(d);
        }
    }

    #[derive(Clone)]
    struct Comment {
        id: u64,
        author: Option<&'static str>,
        created: String,
    }

    #[derive(Clone)]
    struct Thread {
        id: String,
        updated: String,
        comments: Vec<Comment>,
    }

    #[derive(Default)]
    struct Repo {
        n_issues: u64,
        n_pulls: u64,
        issues: Vec<Thread>,
        pulls: Vec<Thread>,
    }

    /// Serves repositories from memory. Scripted responses are returned
    /// first, one per request.
    #[derive(Default)]
    struct FakeGitHub {
        repos: BTreeMap<String, Repo>,
        script: Mutex<VecDeque<Result<HttpResponse, String>>>,
        requests: AtomicUsize,
    }

    fn ok(data: Value) -> Result<HttpResponse, String> {
        Ok(HttpResponse {
            status: 200,
            rate_remaining: Some(4000),
            rate_reset: None,
            retry_after: None,
            body: json!({ "data": data }).to_string(),
        })
    }

    fn status(code: u16) -> HttpResponse {
        HttpResponse {
            status: code,
            rate_remaining: None,
            rate_reset: None,
            retry_after: None,
            body: "{}".into(),
        }
    }

    fn comment_page(comments: &[Comment], end: usize) -> Value {
        let start = end.saturating_sub(100);
        let nodes: Vec<Value> = comments[start..end]
            .iter()
            .map(|c| {
                json!({
                    "databaseId": c.id,
                    "createdAt": c.created,
                    "body": format!("comment {}", c.id),
                    "author": c.author.map(|a| json!({ "login": a })),
                })
            })
            .collect();
        json!({
            "pageInfo": { "hasPreviousPage": start > 0, "startCursor": start.to_string() },
            "nodes": nodes,
        })
    }

    impl FakeGitHub {
        fn serve(&self, payload: &str) -> Result<HttpResponse, String> {
            self.requests.fetch_add(1, Ordering::SeqCst);
            if let Some(r) = self.script.lock().unwrap().pop_front() {
                return r;
            }
            let v: Value = serde_json::from_str(payload).unwrap();
            let query = v["query"].as_str().unwrap();
            let vars = &v["variables"];
            if query.contains("node(id") {
                let id = vars["id"].as_str().unwrap();
                let before: usize = vars["before"].as_str().unwrap().parse().unwrap();
                let thread = self
                    .repos
                    .values()
                    .flat_map(|r| r.issues.iter().chain(&r.pulls))
                    .find(|t| t.id == id)
                    .unwrap();
                return ok(json!({ "node": { "comments": comment_page(&thread.comments, before) } }));
            }
            let key = format!("{}/{}", vars["owner"].as_str().unwrap(), vars["name"].as_str().unwrap());
            let Some(repo) = self.repos.get(&key) else {
                return Ok(HttpResponse {
                    body: json!({
                        "data": { "repository": null },
                        "errors": [{ "type": "NOT_FOUND", "message": "Could not resolve to a Repository" }],
                    })
                    .to_string(),
                    ..status(200)
                });
            };
            if query.contains("totalCount") {
                return ok(json!({ "repository": {
                    "issues": { "totalCount": repo.n_issues },
                    "pullRequests": { "totalCount": repo.n_pulls },
                }}));
            }
            let mut threads: Vec<&Thread> = if query.contains("threads: issues") {
                let since = vars["since"].as_str().unwrap();
                repo.issues.iter().filter(|t| t.updated.as_str() >= since).collect()
            } else {
                repo.pulls.iter().collect()
            };
            threads.sort_by(|a, b| b.updated.cmp(&a.updated));
            let first = vars["first"].as_u64().unwrap() as usize;
            let start: usize = vars["after"].as_str().map_or(0, |s| s.parse().unwrap());
            let end = (start + first).min(threads.len());
            let nodes: Vec<Value> = threads[start..end]
                .iter()
                .map(|t| json!({ "id": t.id, "updatedAt": t.updated, "comments": comment_page(&t.comments, t.comments.len()) }))
                .collect();
            ok(json!({ "repository": { "threads": {
                "pageInfo": { "hasNextPage": end < threads.len(), "endCursor": end.to_string() },
                "nodes": nodes,
            }}}))
        }
    }

    impl Transport for FakeGitHub {
        fn post_graphql(&self, payload: &str) -> Result<HttpResponse, String> {
            self.serve(payload)
        }
    }

    fn ts(day: u32, minute: u32) -> String {
        format!("2020-01-{day:02}T00:{minute:02}:00Z")
    }

    fn comments(author: &'static str, ids: std::ops::Range<u64>, day: u32) -> Vec<Comment> {
        ids.map(|id| Comment {
            id,
            author: Some(author),
            created: ts(day, (id % 60) as u32),
        })
        .collect()
    }

    fn thread(id: &str, updated: String, comments: Vec<Comment>) -> Thread {
        Thread {
            id: id.into(),
            updated,
            comments,
        }
    }

    fn plan(repos: &[&str]) -> FetchPlan {
        FetchPlan {
            repositories: repos.iter().map(|r| RepoId::new(r).unwrap()).collect(),
            since: Utc.with_ymd_and_hms(2019, 1, 1, 0, 0, 0).unwrap(),
            page_size: 2,
            workers: 2,
            retry: RetryPolicy {
                base_delay: Duration::from_secs(1),
                ..RetryPolicy::default()
            },
            ..FetchPlan::default()
        }
    }

    fn busy_repo() -> Repo {
        let mut old = comments("old", 900..901, 1);
        old[0].created = "2018-05-01T00:00:00Z".into();
        let ghost = Comment {
            id: 950,
            author: None,
            created: ts(2, 0),
        };
        Repo {
            n_issues: 80,
            n_pulls: 40,
            issues: vec![
                thread("i1", ts(3, 0), [comments("alice", 1..4, 1), old, vec![ghost]].concat()),
                thread("i2", ts(4, 0), comments("bob", 10..12, 2)),
                thread("i3", ts(5, 0), comments("alice", 20..21, 3)),
            ],
            pulls: vec![
                thread("p1", ts(6, 0), comments("bob", 30..32, 4)),
                thread("p2", "2018-01-01T00:00:00Z".into(), comments("carol", 40..41, 1)),
            ],
        }
    }

    #[test]
    fn fetches_issues_and_pull_requests() {
        let gh = FakeGitHub {
            repos: BTreeMap::from([("o/busy".to_string(), busy_repo())]),
            ..Default::default()
        };
        let out = fetch_comments(&plan(&["o/busy"]), &gh, &FakeClock::new());
        let recs = out.corpus.records();
        // 3 + 2 + 1 issue comments, 2 pull request comments; the old
        // comment, the deleted author and the stale pull request are dropped
        assert_eq!(recs.len(), 8);
        assert!(recs.iter().all(|r| r.created_at >= plan(&[]).since));
        assert!(!recs.iter().any(|r| r.contributor.as_str() == "carol"));
        assert_eq!(recs.iter().filter(|r| r.source == Source::PullRequest).count(), 2);
        let rep = &out.report.repositories[0];
        assert_eq!(rep.status, RepoStatus::Ok);
        assert_eq!(rep.comments, 8);
        // stats, two issue pages, one pull request page
        assert_eq!(rep.pages, 4);
        assert_eq!(out.report.failures().count(), 0);
    }

    #[test]
    fn repository_without_comments() {
        let gh = FakeGitHub {
            repos: BTreeMap::from([(
                "o/quiet".to_string(),
                Repo {
                    n_issues: 100,
                    ..Default::default()
                },
            )]),
            ..Default::default()
        };
        let out = fetch_comments(&plan(&["o/quiet"]), &gh, &FakeClock::new());
        assert!(out.corpus.is_empty());
        assert_eq!(out.report.failures().count(), 0);
        assert_eq!(out.report.repositories[0].status, RepoStatus::Ok);
    }

    #[test]
    fn small_repository_is_skipped() {
        let mut repo = busy_repo();
        repo.n_issues = 59;
        let gh = FakeGitHub {
            repos: BTreeMap::from([("o/small".to_string(), repo)]),
            ..Default::default()
        };
        let out = fetch_comments(&plan(&["o/small"]), &gh, &FakeClock::new());
        assert!(out.corpus.is_empty());
        assert_eq!(
            out.report.repositories[0].status,
            RepoStatus::NotQualified {
                n_issues: 59,
                n_pull_requests: 40
            }
        );
        assert_eq!(gh.requests.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn missing_repository_is_recorded_and_others_continue() {
        let gh = FakeGitHub {
            repos: BTreeMap::from([("o/busy".to_string(), busy_repo())]),
            ..Default::default()
        };
        let out = fetch_comments(&plan(&["o/gone", "o/busy"]), &gh, &FakeClock::new());
        assert_eq!(out.corpus.len(), 8);
        assert_eq!(out.report.repositories[0].status, RepoStatus::NotFound);
        let failures: Vec<_> = out.report.failures().map(|r| r.repository.as_str()).collect();
        assert_eq!(failures, ["o/gone"]);
        assert_eq!(out.report.to_json()["failures"][0]["status"], "not_found");
    }

    #[test]
    fn unauthorized_aborts_the_repository() {
        let gh = FakeGitHub {
            repos: BTreeMap::from([("o/busy".to_string(), busy_repo())]),
            script: Mutex::new(VecDeque::from([Ok(status(401))])),
            ..Default::default()
        };
        let mut p = plan(&["o/busy"]);
        p.workers = 1;
        let out = fetch_comments(&p, &gh, &FakeClock::new());
        assert!(out.corpus.is_empty());
        assert_eq!(out.report.repositories[0].status, RepoStatus::AuthFailed);
        assert_eq!(gh.requests.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn rate_limit_waits_until_reset_then_resumes() {
        let clock = FakeClock::new();
        let reset = clock.now().timestamp() + 30;
        let limited = HttpResponse {
            rate_remaining: Some(0),
            rate_reset: Some(reset),
            ..status(403)
        };
        let gh = FakeGitHub {
            repos: BTreeMap::from([("o/busy".to_string(), busy_repo())]),
            script: Mutex::new(VecDeque::from([Ok(limited)])),
            ..Default::default()
        };
        let out = fetch_comments(&plan(&["o/busy"]), &gh, &clock);
        assert_eq!(out.corpus.len(), 8);
        let rep = &out.report.repositories[0];
        assert_eq!(rep.rate_limit_waits, 1);
        assert_eq!(rep.status, RepoStatus::Ok);
        assert!(clock.now().timestamp() > reset);
        assert_eq!(*clock.slept.lock().unwrap(), [Duration::from_secs(31)]);
    }

    #[test]
    fn retry_after_header_is_honoured() {
        let clock = FakeClock::new();
        let limited = HttpResponse {
            retry_after: Some(7),
            ..status(429)
        };
        let gh = FakeGitHub {
            repos: BTreeMap::from([("o/busy".to_string(), busy_repo())]),
            script: Mutex::new(VecDeque::from([Ok(limited)])),
            ..Default::default()
        };
        let out = fetch_comments(&plan(&["o/busy"]), &gh, &clock);
        assert_eq!(out.report.repositories[0].rate_limit_waits, 1);
        assert_eq!(*clock.slept.lock().unwrap(), [Duration::from_secs(7)]);
    }

    #[test]
    fn endless_rate_limiting_gives_up() {
        let limited = || {
            Ok(HttpResponse {
                retry_after: Some(1),
                ..status(429)
            })
        };
        let gh = FakeGitHub {
            repos: BTreeMap::from([("o/busy".to_string(), busy_repo())]),
            script: Mutex::new((0..10).map(|_| limited()).collect()),
            ..Default::default()
        };
        let mut p = plan(&["o/busy"]);
        p.workers = 1;
        let out = fetch_comments(&p, &gh, &FakeClock::new());
        assert!(matches!(out.report.repositories[0].status, RepoStatus::Failed { .. }));
        assert_eq!(gh.requests.load(Ordering::SeqCst), 6);
    }

    #[test]
    fn transient_errors_back_off_exponentially() {
        let clock = FakeClock::new();
        let gh = FakeGitHub {
            repos: BTreeMap::from([("o/busy".to_string(), busy_repo())]),
            script: Mutex::new(VecDeque::from([Ok(status(502)), Err("connection reset".into())])),
            ..Default::default()
        };
        let mut p = plan(&["o/busy"]);
        p.workers = 1;
        let out = fetch_comments(&p, &gh, &clock);
        assert_eq!(out.report.repositories[0].status, RepoStatus::Ok);
        assert_eq!(*clock.slept.lock().unwrap(), [Duration::from_secs(1), Duration::from_secs(2)]);
    }

    #[test]
    fn persistent_transient_errors_fail_the_repository() {
        let gh = FakeGitHub {
            repos: BTreeMap::from([("o/busy".to_string(), busy_repo())]),
            script: Mutex::new(VecDeque::from([Ok(status(502)), Ok(status(503)), Ok(status(500))])),
            ..Default::default()
        };
        let mut p = plan(&["o/busy"]);
        p.workers = 1;
        let out = fetch_comments(&p, &gh, &FakeClock::new());
        let RepoStatus::Failed { message } = &out.report.repositories[0].status else {
            panic!("expected failure")
        };
        assert!(message.contains("500"), "{message}");
    }

    #[test]
    fn long_threads_are_paged_backwards_and_capped() {
        let mut many = comments("chatty", 1000..1250, 7);
        for (i, c) in many.iter_mut().enumerate() {
            c.created = format!("2020-02-01T{:02}:{:02}:00Z", i / 60, i % 60);
        }
        let repo = Repo {
            n_issues: 200,
            issues: vec![thread("long", ts(9, 0), many)],
            ..Default::default()
        };
        let gh = FakeGitHub {
            repos: BTreeMap::from([("o/long".to_string(), repo)]),
            ..Default::default()
        };
        let out = fetch_comments(&plan(&["o/long"]), &gh, &FakeClock::new());
        // stats, issue page (newest 100), two older comment pages, empty
        // pull request page; newest 100 kept
        assert_eq!(out.report.repositories[0].pages, 5);
        assert_eq!(out.corpus.len(), 100);
        let min_id = out.corpus.records().iter().map(|r| r.comment_id.parse::<u64>().unwrap()).min();
        assert_eq!(min_id, Some(1150));
    }

    #[test]
    fn plan_validation() {
        let now = Utc.with_ymd_and_hms(2021, 1, 1, 0, 0, 0).unwrap();
        assert!(plan(&["a/b"]).validate(now).is_ok());
        assert_eq!(
            FetchPlan { page_size: 0, ..plan(&[]) }.validate(now),
            Err(PlanError::PageSize(0))
        );
        assert!(matches!(
            FetchPlan { since: now, ..plan(&[]) }.validate(now),
            Err(PlanError::FutureSince(_))
        ));
        let p = FetchPlan {
            token_env: "WOCP_TEST_TOKEN_THAT_IS_NOT_SET".into(),
            ..plan(&[])
        };
        assert!(matches!(p.token(), Err(PlanError::MissingToken(_))));
    }

    #[test]
    fn summary_lists_every_repository() {
        let report = FetchReport {
            repositories: vec![
                RepoFetchReport {
                    repository: "a/b".into(),
                    status: RepoStatus::Ok,
                    pages: 3,
                    rate_limit_waits: 1,
                    comments: 12,
                },
                RepoFetchReport {
                    repository: "c/d".into(),
                    status: RepoStatus::AuthFailed,
                    pages: 0,
                    rate_limit_waits: 0,
                    comments: 0,
                },
            ],
        };
        let text = report.summary();
        assert!(text.contains("a/b\tok\tpages=3\twaits=1\tcomments=12"));
        assert!(text.ends_with("2 repositories, 12 comments fetched, 1 failures\n"));
        assert_eq!(report.to_json()["failures"].as_array().unwrap().len(), 1);
    }
}
