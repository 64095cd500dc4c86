//! Question lifecycle: partition the room, run the tick clock, move messages
//! between participants, surrogates, and the belief tracker, and finalize
//! the forecast.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::analyzer::{AnalysisRequest, Analyzer, WindowEntry};
use crate::belief::{aggregate, classify, update_belief, BeliefState, CollectiveEstimate, Forecast};
use crate::error::{Error, Result};
use crate::persona::{DynamicsConfig, GameContext, ParticipantAgent, RosterMember};
use crate::rng;
use crate::surrogate::{render_delivery, Delivery, RoutingWeights, SurrogateNetwork};
use crate::types::Side;

pub const DEFAULT_PROMPT: &str =
    "Which team is most likely to win this game and by how many runs and why?";
pub const DEFAULT_DURATION_TICKS: u32 = 300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionSpec {
    pub question_id: String,
    pub team_a: String,
    pub team_b: String,
    pub home_side: Side,
    pub pitcher_a: String,
    pub pitcher_b: String,
    pub duration_ticks: u32,
    pub prompt: String,
}

impl QuestionSpec {
    pub fn new(
        question_id: impl Into<String>,
        team_a: impl Into<String>,
        team_b: impl Into<String>,
        home_side: Side,
    ) -> Self {
        QuestionSpec {
            question_id: question_id.into(),
            team_a: team_a.into(),
            team_b: team_b.into(),
            home_side,
            pitcher_a: String::new(),
            pitcher_b: String::new(),
            duration_ticks: DEFAULT_DURATION_TICKS,
            prompt: DEFAULT_PROMPT.to_string(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.team_a == self.team_b {
            return Err(Error::InvalidQuestion(format!(
                "{}: both teams are `{}`",
                self.question_id, self.team_a
            )));
        }
        if self.duration_ticks == 0 {
            return Err(Error::InvalidQuestion(format!(
                "{}: duration must be at least one tick",
                self.question_id
            )));
        }
        Ok(())
    }

    pub fn team_name(&self, side: Side) -> &str {
        match side {
            Side::A => &self.team_a,
            Side::B => &self.team_b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Participant {
    pub participant_id: String,
    pub persona_ref: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subgroup {
    pub subgroup_id: String,
    pub member_ids: Vec<String>,
    pub surrogate_id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnalyzerKind {
    #[default]
    Structured,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionConfig {
    pub subgroup_target_size: usize,
    pub tick_seconds: f64,
    /// Length of each question when the games fixture does not say.
    pub duration_ticks: u32,
    pub seed: u64,
    pub routing_weights: RoutingWeights,
    pub surrogate_cooldown_ticks: u32,
    /// Ticks after a delivery over which its impact is measured.
    pub impact_window_ticks: u32,
    /// Ticks of dialog the analyzer sees on each call.
    pub analysis_window_ticks: u32,
    pub analyzer: AnalyzerKind,
    /// Count surrogate utterances in the message rate.
    pub count_surrogate_messages: bool,
    /// Correlation of priors within a game, see [`GameContext`].
    pub prior_herding: f64,
    pub dynamics: DynamicsConfig,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            subgroup_target_size: 5,
            tick_seconds: 1.0,
            duration_ticks: DEFAULT_DURATION_TICKS,
            seed: 0,
            routing_weights: RoutingWeights::default(),
            surrogate_cooldown_ticks: 15,
            impact_window_ticks: 10,
            analysis_window_ticks: 30,
            analyzer: AnalyzerKind::Structured,
            count_surrogate_messages: false,
            prior_herding: 0.9,
            dynamics: DynamicsConfig::default(),
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.subgroup_target_size < 2 {
            return Err(Error::Config("subgroup_target_size must be at least 2".into()));
        }
        if !(self.tick_seconds.is_finite() && self.tick_seconds > 0.0) {
            return Err(Error::Config("tick_seconds must be positive".into()));
        }
        if self.duration_ticks == 0 {
            return Err(Error::Config("duration_ticks must be positive".into()));
        }
        if self.analysis_window_ticks == 0 {
            return Err(Error::Config("analysis_window_ticks must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.prior_herding) {
            return Err(Error::Config("prior_herding must be in [0, 1)".into()));
        }
        self.routing_weights.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Author {
    Participant(String),
    Surrogate(String),
}

impl Author {
    pub fn participant_id(&self) -> Option<&str> {
        match self {
            Author::Participant(id) => Some(id),
            Author::Surrogate(_) => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Author::Participant(_) => "participant",
            Author::Surrogate(_) => "surrogate",
        }
    }

    pub fn id(&self) -> &str {
        match self {
            Author::Participant(id) | Author::Surrogate(id) => id,
        }
    }
}

/// Structured content attached to an utterance. Participants fill in their
/// current belief and the argument they voiced, if any; surrogates fill in
/// the relayed argument and its insight id.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Payload {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stance: Option<Side>,
    #[serde(default)]
    pub argument_tags: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strength: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub insight_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Utterance {
    pub author: Author,
    pub subgroup_id: String,
    pub tick: u32,
    pub text: String,
    pub payload: Option<Payload>,
}

#[derive(Serialize, Deserialize)]
struct TranscriptEvent {
    tick: u32,
    author_kind: String,
    author_id: String,
    subgroup_id: String,
    text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    payload: Option<Payload>,
}

/// One JSON object per line:
/// `{tick, author_kind, author_id, subgroup_id, text, payload?}`.
pub fn write_transcript<W: Write>(mut writer: W, transcript: &[Utterance]) -> Result<()> {
    for u in transcript {
        let event = TranscriptEvent {
            tick: u.tick,
            author_kind: u.author.kind().to_string(),
            author_id: u.author.id().to_string(),
            subgroup_id: u.subgroup_id.clone(),
            text: u.text.clone(),
            payload: u.payload.clone(),
        };
        serde_json::to_writer(&mut writer, &event)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_transcript<R: BufRead>(reader: R) -> Result<Vec<Utterance>> {
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let e: TranscriptEvent = serde_json::from_str(&line)?;
        let author = match e.author_kind.as_str() {
            "participant" => Author::Participant(e.author_id),
            "surrogate" => Author::Surrogate(e.author_id),
            other => {
                return Err(Error::Config(format!("unknown author_kind `{other}`")));
            }
        };
        out.push(Utterance {
            author,
            subgroup_id: e.subgroup_id,
            tick: e.tick,
            text: e.text,
            payload: e.payload,
        });
    }
    Ok(out)
}

/// Splits participants into balanced subgroups by a seeded shuffle.
///
/// The group count is `round(n / target_size)`, at least 1 and at most n/2
/// so no group is a singleton; when rounding down would push groups past
/// `target_size + 1` members and a group can be added, one is.
pub fn partition(participant_ids: &[String], target_size: usize, seed: u64) -> Result<Vec<Subgroup>> {
    let n = participant_ids.len();
    if n < 2 {
        return Err(Error::InsufficientParticipants(n));
    }
    if target_size < 2 {
        return Err(Error::Config("subgroup target size must be at least 2".into()));
    }
    let unique: BTreeSet<&String> = participant_ids.iter().collect();
    if unique.len() != n {
        return Err(Error::Config("participant ids must be unique".into()));
    }

    let max_groups = n / 2;
    let mut groups = ((n as f64 / target_size as f64).round() as usize).clamp(1, max_groups);
    if n.div_ceil(groups) > target_size + 1 && groups < max_groups {
        groups += 1;
    }

    let mut order: Vec<String> = participant_ids.to_vec();
    order.shuffle(&mut rng::stream(seed, "partition"));

    let base = n / groups;
    let extra = n % groups;
    let mut rest = order.as_slice();
    let mut out = Vec::with_capacity(groups);
    for g in 0..groups {
        let size = base + usize::from(g < extra);
        let (members, tail) = rest.split_at(size);
        rest = tail;
        let mut member_ids = members.to_vec();
        member_ids.sort();
        let subgroup_id = format!("tt{}", g + 1);
        out.push(Subgroup {
            surrogate_id: format!("surrogate-{subgroup_id}"),
            subgroup_id,
            member_ids,
        });
    }
    Ok(out)
}

/// Participant messages per minute over the question's duration. Surrogate
/// messages are counted only when `count_surrogates` is set.
pub fn message_rate(
    transcript: &[Utterance],
    spec: &QuestionSpec,
    tick_seconds: f64,
    count_surrogates: bool,
) -> f64 {
    let minutes = f64::from(spec.duration_ticks) * tick_seconds / 60.0;
    if transcript.is_empty() || minutes <= 0.0 {
        return 0.0;
    }
    let count = transcript
        .iter()
        .filter(|u| count_surrogates || matches!(u.author, Author::Participant(_)))
        .count();
    count as f64 / minutes
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SessionWarning {
    pub tick: u32,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct QuestionOutcome {
    pub forecast: Forecast,
    pub subgroups: Vec<Subgroup>,
    /// One estimate per tick boundary, tick 0 included.
    pub trajectory: Vec<CollectiveEstimate>,
    pub transcript: Vec<Utterance>,
    pub deliveries: Vec<Delivery>,
    pub warnings: Vec<SessionWarning>,
}

struct ImpactProbe {
    insight_id: String,
    due_tick: u32,
    baseline: Vec<(String, f64)>,
}

/// Runs one timed question to completion.
///
/// Each tick: participants react to what their subgroup said on the previous
/// tick and maybe speak; the analyzer reads each subgroup's recent window;
/// belief estimates are applied in participant-id order; surrogates extract
/// and route insights; the collective estimate is appended. Deterministic
/// for a fixed (seed, roster, spec, config) under the structured analyzer.
pub fn run_question(
    spec: &QuestionSpec,
    context: &GameContext,
    config: &SessionConfig,
    roster: &[RosterMember],
    analyzer: &dyn Analyzer,
) -> Result<QuestionOutcome> {
    spec.validate()?;
    config.validate()?;
    context.validate()?;
    for m in roster {
        m.persona.validate()?;
    }

    let ids: Vec<String> = roster
        .iter()
        .map(|m| m.participant.participant_id.clone())
        .collect();
    let subgroups = partition(&ids, config.subgroup_target_size, config.seed)?;
    let subgroup_of: BTreeMap<&str, usize> = subgroups
        .iter()
        .enumerate()
        .flat_map(|(g, s)| s.member_ids.iter().map(move |id| (id.as_str(), g)))
        .collect();

    let mut agents: BTreeMap<String, ParticipantAgent> = roster
        .iter()
        .map(|m| {
            let id = m.participant.participant_id.clone();
            let g = subgroup_of[id.as_str()];
            let agent = ParticipantAgent::new(
                id.clone(),
                subgroups[g].subgroup_id.clone(),
                m.persona.clone(),
                context,
                config.seed,
            );
            (id, agent)
        })
        .collect();

    // the tracker starts from the opening positions
    let mut tracked: BTreeMap<String, BeliefState> = agents
        .iter()
        .map(|(id, a)| (id.clone(), a.belief.clone()))
        .collect();

    let mut network = SurrogateNetwork::new(
        &subgroups,
        config.routing_weights,
        config.surrogate_cooldown_ticks,
    );
    let mut trajectory = Vec::with_capacity(spec.duration_ticks as usize + 1);
    trajectory.push(aggregate(tracked.values(), 0)?);

    let mut transcript: Vec<Utterance> = Vec::new();
    let mut deliveries_log = Vec::new();
    let mut warnings = Vec::new();
    let mut probes: Vec<ImpactProbe> = Vec::new();
    let mut inboxes: Vec<Vec<Utterance>> = vec![Vec::new(); subgroups.len()];

    for tick in 1..=spec.duration_ticks {
        let mut heard: Vec<Vec<Utterance>> = vec![Vec::new(); subgroups.len()];
        for (g, group) in subgroups.iter().enumerate() {
            for id in &group.member_ids {
                let agent = agents.get_mut(id).expect("member has an agent");
                if let Some(u) = agent.step(
                    &inboxes[g],
                    tick,
                    config.tick_seconds,
                    spec,
                    &config.dynamics,
                ) {
                    heard[g].push(u.clone());
                    transcript.push(u);
                }
            }
        }

        let window_start = tick.saturating_sub(config.analysis_window_ticks - 1);
        let requests: Vec<AnalysisRequest> = subgroups
            .iter()
            .map(|group| AnalysisRequest {
                question: spec.into(),
                participants: group.member_ids.clone(),
                window: transcript
                    .iter()
                    .filter(|u| u.subgroup_id == group.subgroup_id && u.tick >= window_start)
                    .filter_map(WindowEntry::from_utterance)
                    .collect(),
            })
            .collect();
        let analyses = analyzer.analyze_batch(&requests);

        let mut estimates: Vec<_> = analyses
            .iter()
            .flat_map(|a| a.result.beliefs.iter())
            .collect();
        estimates.sort_by(|a, b| a.participant_id.cmp(&b.participant_id));
        for est in estimates {
            let Some(prior) = tracked.get(&est.participant_id) else {
                continue;
            };
            match update_belief(prior, Some(est), tick) {
                Ok(next) => {
                    tracked.insert(est.participant_id.clone(), next);
                }
                Err(e) => warnings.push(SessionWarning {
                    tick,
                    message: format!("belief for {} rejected: {e}", est.participant_id),
                }),
            }
        }

        let mut new_insights = Vec::new();
        for (group, analysis) in subgroups.iter().zip(&analyses) {
            warnings.extend(analysis.warnings.iter().map(|w| SessionWarning {
                tick,
                message: format!("{}: {w}", group.subgroup_id),
            }));
            new_insights.extend(network.absorb(&group.subgroup_id, tick, &analysis.result.insights));
        }

        let deliveries = network.route_tick(tick, &new_insights);
        for d in &deliveries {
            let g = subgroups
                .iter()
                .position(|s| s.subgroup_id == d.target)
                .expect("delivery targets a known subgroup");
            let state = network.state(&d.target).expect("target state");
            let insight = network.insight(&d.insight_id).expect("registered insight");
            let u = render_delivery(insight, state, tick);
            heard[g].push(u.clone());
            transcript.push(u);
            probes.push(ImpactProbe {
                insight_id: d.insight_id.clone(),
                due_tick: tick + config.impact_window_ticks,
                baseline: subgroups[g]
                    .member_ids
                    .iter()
                    .map(|id| (id.clone(), tracked[id].margin))
                    .collect(),
            });
        }
        deliveries_log.extend(deliveries);

        let (due, waiting): (Vec<_>, Vec<_>) = probes.into_iter().partition(|p| p.due_tick <= tick);
        probes = waiting;
        for probe in due {
            let deltas: Vec<f64> = probe
                .baseline
                .iter()
                .map(|(id, before)| tracked[id].margin - before)
                .collect();
            network.record_impact(&probe.insight_id, &deltas);
        }

        inboxes = heard;
        trajectory.push(aggregate(tracked.values(), tick)?);
    }

    let last = trajectory.last().expect("trajectory has tick 0");
    let c = classify(last, spec.home_side);
    let forecast = Forecast {
        question_id: spec.question_id.clone(),
        pick: c.pick,
        predicted_margin: c.predicted_margin,
        confidence: c.confidence,
        messages_per_minute: message_rate(
            &transcript,
            spec,
            config.tick_seconds,
            config.count_surrogate_messages,
        ),
        final_collective_margin: last.collective_margin,
    };
    for w in &warnings {
        log::warn!("{} tick {}: {}", spec.question_id, w.tick, w.message);
    }
    Ok(QuestionOutcome {
        forecast,
        subgroups,
        trajectory,
        transcript,
        deliveries: deliveries_log,
        warnings,
    })
}
