use std::collections::BTreeSet;
use std::thread;
use std::time::Duration;

use serde_json::Value;

use super::{
    analyze_structured, canonical_tags, Analysis, AnalysisRequest, AnalysisResult, Analyzer,
    BeliefEstimate, InsightCandidate,
};
use crate::error::{Error, Result};
use crate::types::{Lean, Side};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, Clone, PartialEq)]
pub struct RemoteConfig {
    /// Base URL; requests go to `{url}/v1/analyze`.
    pub url: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
    pub max_retries: u32,
    /// First retry delay; doubles on every further attempt.
    pub backoff: Duration,
}

impl RemoteConfig {
    pub fn new(url: impl Into<String>) -> Self {
        RemoteConfig {
            url: url.into(),
            api_key: None,
            timeout: DEFAULT_TIMEOUT,
            max_retries: 2,
            backoff: Duration::from_millis(200),
        }
    }

    /// Reads `ANALYZER_URL`, `ANALYZER_KEY`, and `ANALYZER_TIMEOUT_MS`.
    pub fn from_env() -> Result<Self> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup(lookup: impl Fn(&str) -> Option<String>) -> Result<Self> {
        let url = lookup("ANALYZER_URL")
            .filter(|u| !u.trim().is_empty())
            .ok_or_else(|| Error::Config("ANALYZER_URL is not set".into()))?;
        let mut config = RemoteConfig::new(url.trim());
        config.api_key = lookup("ANALYZER_KEY").filter(|k| !k.is_empty());
        if let Some(ms) = lookup("ANALYZER_TIMEOUT_MS") {
            let ms: u64 = ms
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("ANALYZER_TIMEOUT_MS `{ms}` is not an integer")))?;
            if ms == 0 {
                return Err(Error::Config("ANALYZER_TIMEOUT_MS must be positive".into()));
            }
            config.timeout = Duration::from_millis(ms);
        }
        Ok(config)
    }

    pub fn endpoint(&self) -> String {
        format!("{}/v1/analyze", self.url.trim_end_matches('/'))
    }
}

enum Failure {
    Retryable(String),
    Fatal(String),
}

/// HTTP client for an external analysis service. Every failure mode ends in
/// the structured reading of the same window plus a warning, so a session
/// never aborts because of the remote side.
pub struct RemoteAnalyzer {
    config: RemoteConfig,
    agent: ureq::Agent,
}

impl RemoteAnalyzer {
    pub fn new(config: RemoteConfig) -> Result<Self> {
        if !(config.url.starts_with("http://") || config.url.starts_with("https://")) {
            return Err(Error::Config(format!(
                "analyzer URL `{}` must start with http:// or https://",
                config.url
            )));
        }
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(RemoteAnalyzer { config, agent })
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    fn post(&self, body: &[u8]) -> Result<String, Failure> {
        let mut req = self
            .agent
            .post(self.config.endpoint())
            .header("Content-Type", "application/json");
        if let Some(key) = &self.config.api_key {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let mut resp = match req.send(body) {
            Ok(resp) => resp,
            Err(e @ (ureq::Error::Timeout(_)
            | ureq::Error::Io(_)
            | ureq::Error::ConnectionFailed
            | ureq::Error::HostNotFound)) => return Err(Failure::Retryable(e.to_string())),
            Err(e) => return Err(Failure::Fatal(e.to_string())),
        };
        let status = resp.status().as_u16();
        if status == 429 || status >= 500 {
            return Err(Failure::Retryable(format!("analyzer returned HTTP {status}")));
        }
        if !(200..300).contains(&status) {
            return Err(Failure::Fatal(format!("analyzer returned HTTP {status}")));
        }
        resp.body_mut().read_to_string().map_err(|e| match e {
            ureq::Error::Timeout(_) | ureq::Error::Io(_) => Failure::Retryable(e.to_string()),
            other => Failure::Fatal(other.to_string()),
        })
    }

    fn fallback(request: &AnalysisRequest, reason: String) -> Analysis {
        Analysis {
            result: analyze_structured(request),
            warnings: vec![format!("remote analyzer failed ({reason}); used structured fallback")],
        }
    }
}

impl Analyzer for RemoteAnalyzer {
    fn analyze(&self, request: &AnalysisRequest) -> Analysis {
        let body = match serde_json::to_vec(request) {
            Ok(b) => b,
            Err(e) => return Self::fallback(request, e.to_string()),
        };
        let mut last_error = String::new();
        for attempt in 0..=self.config.max_retries {
            match self.post(&body) {
                Ok(text) => {
                    return match validate_response(&text, request) {
                        Ok((result, warnings)) => Analysis { result, warnings },
                        Err(e) => Self::fallback(request, format!("malformed response: {e}")),
                    };
                }
                Err(Failure::Fatal(msg)) => return Self::fallback(request, msg),
                Err(Failure::Retryable(msg)) => {
                    last_error = msg;
                    if attempt < self.config.max_retries {
                        thread::sleep(self.config.backoff * 2u32.pow(attempt));
                    }
                }
            }
        }
        Self::fallback(
            request,
            format!("{} attempts: {last_error}", self.config.max_retries + 1),
        )
    }

    /// One in-flight request per subgroup; results are returned in request
    /// order regardless of completion order.
    fn analyze_batch(&self, requests: &[AnalysisRequest]) -> Vec<Analysis> {
        thread::scope(|s| {
            let handles: Vec<_> = requests
                .iter()
                .map(|r| s.spawn(move || self.analyze(r)))
                .collect();
            handles
                .into_iter()
                .zip(requests)
                .map(|(h, r)| {
                    h.join()
                        .unwrap_or_else(|_| Self::fallback(r, "worker panicked".into()))
                })
                .collect()
        })
    }
}

fn parse_belief(v: &Value, in_scope: &BTreeSet<&str>) -> Result<BeliefEstimate, String> {
    let id = v
        .get("participant_id")
        .and_then(Value::as_str)
        .ok_or("missing participant_id")?;
    if !in_scope.contains(id) {
        return Err(format!("participant `{id}` is not in scope"));
    }
    let team = match v.get("team").and_then(Value::as_str) {
        Some("A") => Lean::A,
        Some("B") => Lean::B,
        Some("UNDECIDED") => Lean::Undecided,
        other => return Err(format!("participant `{id}`: bad team {other:?}")),
    };
    let margin = v
        .get("margin")
        .and_then(Value::as_f64)
        .filter(|m| m.is_finite())
        .ok_or_else(|| format!("participant `{id}`: margin missing or not finite"))?;
    let strength = v
        .get("strength")
        .and_then(Value::as_f64)
        .ok_or_else(|| format!("participant `{id}`: strength missing"))?;
    if !(0.0..=1.0).contains(&strength) {
        return Err(format!("participant `{id}`: strength {strength} outside [0, 1]"));
    }
    if Lean::from_margin(margin) != team {
        return Err(format!(
            "participant `{id}`: team {team:?} disagrees with margin {margin}"
        ));
    }
    Ok(BeliefEstimate {
        participant_id: id.to_string(),
        team,
        margin,
        strength,
    })
}

fn parse_insight(v: &Value) -> Result<InsightCandidate, String> {
    let stance = match v.get("stance").and_then(Value::as_str) {
        Some("A") => Side::A,
        Some("B") => Side::B,
        other => return Err(format!("insight: bad stance {other:?}")),
    };
    let raw_tags: Vec<&str> = v
        .get("argument_tags")
        .and_then(Value::as_array)
        .ok_or("insight: argument_tags missing")?
        .iter()
        .map(|t| t.as_str().ok_or("insight: non-string tag"))
        .collect::<Result<_, _>>()?;
    let argument_tags = canonical_tags(&raw_tags);
    if argument_tags.is_empty() {
        return Err("insight: no argument tags".into());
    }
    let text = v
        .get("text")
        .and_then(Value::as_str)
        .ok_or("insight: text missing")?
        .to_string();
    Ok(InsightCandidate {
        stance,
        argument_tags,
        text,
    })
}

/// Parses a response body. Structural problems are an error; entries that
/// break an invariant are dropped and reported as warnings.
pub(crate) fn validate_response(
    body: &str,
    request: &AnalysisRequest,
) -> Result<(AnalysisResult, Vec<String>), String> {
    let value: Value = serde_json::from_str(body).map_err(|e| e.to_string())?;
    let beliefs = value
        .get("beliefs")
        .and_then(Value::as_array)
        .ok_or("`beliefs` array missing")?;
    let insights = value
        .get("insights")
        .and_then(Value::as_array)
        .ok_or("`insights` array missing")?;

    let in_scope: BTreeSet<&str> = request.participants.iter().map(String::as_str).collect();
    let mut warnings = Vec::new();
    let mut result = AnalysisResult::default();
    let mut seen = BTreeSet::new();
    for b in beliefs {
        match parse_belief(b, &in_scope) {
            Ok(est) if !seen.insert(est.participant_id.clone()) => warnings.push(format!(
                "dropped duplicate belief for `{}`",
                est.participant_id
            )),
            Ok(est) => result.beliefs.push(est),
            Err(e) => warnings.push(format!("dropped belief: {e}")),
        }
    }
    for i in insights {
        match parse_insight(i) {
            Ok(c) => result.insights.push(c),
            Err(e) => warnings.push(format!("dropped insight: {e}")),
        }
    }
    result
        .beliefs
        .sort_by(|a, b| a.participant_id.cmp(&b.participant_id));
    Ok((result, warnings))
}
