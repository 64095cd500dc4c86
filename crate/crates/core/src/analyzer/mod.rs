//! Text-analysis boundary: turns a window of subgroup dialog into
//! per-participant belief estimates and candidate insights.
//!
//! [`StructuredAnalyzer`] reads the structured payloads simulated
//! participants attach to their messages and is exact and deterministic.
//! [`RemoteAnalyzer`] posts the same request to an HTTP service and falls
//! back to the structured reading when the service misbehaves.

mod remote;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::session::{Payload, QuestionSpec, Utterance};
use crate::types::{Lean, Side};

pub use self::remote::{RemoteAnalyzer, RemoteConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionSummary {
    pub team_a: String,
    pub team_b: String,
    pub home_side: Side,
}

impl From<&QuestionSpec> for QuestionSummary {
    fn from(spec: &QuestionSpec) -> Self {
        QuestionSummary {
            team_a: spec.team_a.clone(),
            team_b: spec.team_b.clone(),
            home_side: spec.home_side,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowEntry {
    pub participant_id: String,
    pub tick: u32,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<Payload>,
}

impl WindowEntry {
    /// `None` for surrogate-authored utterances; only participant dialog is
    /// analyzed.
    pub fn from_utterance(u: &Utterance) -> Option<WindowEntry> {
        Some(WindowEntry {
            participant_id: u.author.participant_id()?.to_string(),
            tick: u.tick,
            text: u.text.clone(),
            payload: u.payload.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisRequest {
    pub question: QuestionSummary,
    pub participants: Vec<String>,
    /// Ordered by nondecreasing tick.
    pub window: Vec<WindowEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefEstimate {
    pub participant_id: String,
    pub team: Lean,
    pub margin: f64,
    pub strength: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InsightCandidate {
    pub stance: Side,
    pub argument_tags: Vec<String>,
    pub text: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnalysisResult {
    pub beliefs: Vec<BeliefEstimate>,
    pub insights: Vec<InsightCandidate>,
}

/// An analysis result plus any non-fatal problems met while producing it.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Analysis {
    pub result: AnalysisResult,
    pub warnings: Vec<String>,
}

pub trait Analyzer: Send + Sync {
    fn analyze(&self, request: &AnalysisRequest) -> Analysis;

    /// Results come back in request order.
    fn analyze_batch(&self, requests: &[AnalysisRequest]) -> Vec<Analysis> {
        requests.iter().map(|r| self.analyze(r)).collect()
    }
}

/// Lowercase, underscore-joined, sorted, deduplicated tags.
pub fn canonical_tags<S: AsRef<str>>(tags: &[S]) -> Vec<String> {
    tags.iter()
        .map(|t| {
            t.as_ref()
                .trim()
                .to_lowercase()
                .split_whitespace()
                .collect::<Vec<_>>()
                .join("_")
        })
        .filter(|t| !t.is_empty())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// Reads structured payloads: the latest payload carrying a belief defines
/// each participant's estimate, and every distinct (stance, tags) pair
/// becomes an insight candidate.
pub fn analyze_structured(request: &AnalysisRequest) -> AnalysisResult {
    let in_scope: BTreeSet<&str> = request.participants.iter().map(String::as_str).collect();
    let mut latest: BTreeMap<&str, (f64, f64)> = BTreeMap::new();
    let mut seen = BTreeSet::new();
    let mut insights = Vec::new();

    for entry in &request.window {
        if !in_scope.contains(entry.participant_id.as_str()) {
            continue;
        }
        let Some(payload) = &entry.payload else {
            continue;
        };
        if let (Some(margin), Some(strength)) = (payload.margin, payload.strength) {
            latest.insert(entry.participant_id.as_str(), (margin, strength));
        }
        if let Some(stance) = payload.stance {
            let tags = canonical_tags(&payload.argument_tags);
            if !tags.is_empty() && seen.insert((stance, tags.clone())) {
                insights.push(InsightCandidate {
                    stance,
                    argument_tags: tags,
                    text: entry.text.clone(),
                });
            }
        }
    }

    let beliefs = latest
        .into_iter()
        .map(|(id, (margin, strength))| BeliefEstimate {
            participant_id: id.to_string(),
            team: Lean::from_margin(margin),
            margin,
            strength,
        })
        .collect();
    AnalysisResult { beliefs, insights }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct StructuredAnalyzer;

impl Analyzer for StructuredAnalyzer {
    fn analyze(&self, request: &AnalysisRequest) -> Analysis {
        Analysis {
            result: analyze_structured(request),
            warnings: Vec::new(),
        }
    }
}
