//! Surrogate agents: one per subgroup. Each one turns local dialog into
//! insights, queues insights from the other subgroups by how much they would
//! challenge its own group, and voices the best one whenever its cooldown
//! allows.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::analyzer::{AnalysisRequest, Analyzer, InsightCandidate, WindowEntry};
use crate::error::{Error, Result};
use crate::session::{Author, Payload, QuestionSpec, Subgroup, Utterance};
use crate::types::Side;

/// A participant counts toward an insight's impact once their margin moves
/// at least this many runs toward its stance.
pub const IMPACT_SHIFT_RUNS: f64 = 0.1;

// margins are differences of sums of 0.5-run steps; absorb rounding noise
const SHIFT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoutingWeights {
    pub novelty_weight: f64,
    pub impact_weight: f64,
}

impl Default for RoutingWeights {
    fn default() -> Self {
        RoutingWeights {
            novelty_weight: 0.7,
            impact_weight: 0.3,
        }
    }
}

impl RoutingWeights {
    pub fn validate(&self) -> Result<()> {
        let ok = |w: f64| w.is_finite() && w >= 0.0;
        if !(ok(self.novelty_weight) && ok(self.impact_weight)) {
            return Err(Error::Config("routing weights must be finite and nonnegative".into()));
        }
        if self.novelty_weight + self.impact_weight <= 0.0 {
            return Err(Error::Config("routing weights must not both be zero".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Insight {
    pub insight_id: String,
    pub source_subgroup: String,
    pub stance: Side,
    pub argument_tags: BTreeSet<String>,
    pub text: String,
    pub created_tick: u32,
    /// Running count of participants this insight has moved, network-wide.
    pub impact: f64,
}

type ArgumentKey = (Side, Vec<String>);

#[derive(Debug, Clone, PartialEq)]
pub struct PendingInsight {
    pub insight_id: String,
    pub priority: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateState {
    pub subgroup_id: String,
    pub surrogate_id: String,
    /// Tags voiced in this subgroup so far, by members or by deliveries.
    pub seen_tags: BTreeSet<String>,
    pub pending: Vec<PendingInsight>,
    pub cooldown_remaining: u32,
    /// (stance, tags) pairs already extracted from this subgroup.
    pub voiced: BTreeSet<ArgumentKey>,
    /// Insight ids already delivered here.
    pub delivered: BTreeSet<String>,
}

impl SurrogateState {
    pub fn new(subgroup_id: impl Into<String>, surrogate_id: impl Into<String>) -> Self {
        SurrogateState {
            subgroup_id: subgroup_id.into(),
            surrogate_id: surrogate_id.into(),
            seen_tags: BTreeSet::new(),
            pending: Vec::new(),
            cooldown_remaining: 0,
            voiced: BTreeSet::new(),
            delivered: BTreeSet::new(),
        }
    }
}

/// Share of the insight's tags this subgroup has not heard yet.
pub fn novelty(insight: &Insight, state: &SurrogateState) -> f64 {
    let total = insight.argument_tags.len();
    if total == 0 {
        return 0.0;
    }
    let seen = insight
        .argument_tags
        .iter()
        .filter(|t| state.seen_tags.contains(*t))
        .count();
    1.0 - seen as f64 / total as f64
}

pub fn priority(insight: &Insight, state: &SurrogateState, weights: &RoutingWeights) -> f64 {
    let normalized_impact = insight.impact / (1.0 + insight.impact);
    weights.novelty_weight * novelty(insight, state) + weights.impact_weight * normalized_impact
}

/// One line of the delivery log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Delivery {
    pub tick: u32,
    pub insight_id: String,
    pub source: String,
    pub target: String,
    pub stance: Side,
    pub tags: Vec<String>,
    pub priority: f64,
}

pub fn write_deliveries<W: Write>(mut writer: W, deliveries: &[Delivery]) -> Result<()> {
    for d in deliveries {
        serde_json::to_writer(&mut writer, d)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_deliveries<R: BufRead>(reader: R) -> Result<Vec<Delivery>> {
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

/// Surrogate utterance voicing `insight` in the target subgroup.
pub fn render_delivery(insight: &Insight, target: &SurrogateState, tick: u32) -> Utterance {
    Utterance {
        author: Author::Surrogate(target.surrogate_id.clone()),
        subgroup_id: target.subgroup_id.clone(),
        tick,
        text: format!("Another group raised this: {}", insight.text),
        payload: Some(Payload {
            stance: Some(insight.stance),
            argument_tags: insight.argument_tags.iter().cloned().collect(),
            margin: None,
            strength: None,
            insight_id: Some(insight.insight_id.clone()),
        }),
    }
}

/// All surrogate agents of one session plus the shared insight registry.
#[derive(Debug, Clone)]
pub struct SurrogateNetwork {
    states: Vec<SurrogateState>,
    insights: BTreeMap<String, Insight>,
    weights: RoutingWeights,
    cooldown_ticks: u32,
    next_seq: u64,
}

impl SurrogateNetwork {
    pub fn new(subgroups: &[Subgroup], weights: RoutingWeights, cooldown_ticks: u32) -> Self {
        Self::from_states(
            subgroups
                .iter()
                .map(|g| SurrogateState::new(&g.subgroup_id, &g.surrogate_id))
                .collect(),
            weights,
            cooldown_ticks,
        )
    }

    pub fn from_states(states: Vec<SurrogateState>, weights: RoutingWeights, cooldown_ticks: u32) -> Self {
        SurrogateNetwork {
            states,
            insights: BTreeMap::new(),
            weights,
            cooldown_ticks,
            next_seq: 0,
        }
    }

    pub fn states(&self) -> &[SurrogateState] {
        &self.states
    }

    pub fn states_mut(&mut self) -> &mut [SurrogateState] {
        &mut self.states
    }

    pub fn state(&self, subgroup_id: &str) -> Option<&SurrogateState> {
        self.states.iter().find(|s| s.subgroup_id == subgroup_id)
    }

    pub fn insight(&self, insight_id: &str) -> Option<&Insight> {
        self.insights.get(insight_id)
    }

    pub fn insights(&self) -> impl Iterator<Item = &Insight> {
        self.insights.values()
    }

    fn state_index(&self, subgroup_id: &str) -> Option<usize> {
        self.states.iter().position(|s| s.subgroup_id == subgroup_id)
    }

    /// Turns analyzer candidates from one subgroup into new insights. The
    /// candidates' tags count as voiced in that subgroup; a (stance, tags)
    /// pair already extracted there yields nothing.
    pub fn absorb(
        &mut self,
        subgroup_id: &str,
        tick: u32,
        candidates: &[InsightCandidate],
    ) -> Vec<Insight> {
        let Some(idx) = self.state_index(subgroup_id) else {
            return Vec::new();
        };
        let mut fresh = Vec::new();
        for c in candidates {
            if c.argument_tags.is_empty() {
                continue;
            }
            let state = &mut self.states[idx];
            state.seen_tags.extend(c.argument_tags.iter().cloned());
            let tags: BTreeSet<String> = c.argument_tags.iter().cloned().collect();
            if !state.voiced.insert((c.stance, tags.iter().cloned().collect())) {
                continue;
            }
            self.next_seq += 1;
            let insight = Insight {
                insight_id: format!("ins-{:05}", self.next_seq),
                source_subgroup: subgroup_id.to_string(),
                stance: c.stance,
                argument_tags: tags,
                text: c.text.clone(),
                created_tick: tick,
                impact: 0.0,
            };
            self.insights
                .insert(insight.insight_id.clone(), insight.clone());
            fresh.push(insight);
        }
        fresh
    }

    /// Runs the analyzer over one subgroup's recent dialog and absorbs the
    /// resulting candidates. Analyzer warnings are passed through.
    pub fn extract_insights(
        &mut self,
        subgroup_id: &str,
        tick: u32,
        window: &[Utterance],
        question: &QuestionSpec,
        participants: &[String],
        analyzer: &dyn Analyzer,
    ) -> (Vec<Insight>, Vec<String>) {
        let request = AnalysisRequest {
            question: question.into(),
            participants: participants.to_vec(),
            window: window
                .iter()
                .filter(|u| u.subgroup_id == subgroup_id)
                .filter_map(WindowEntry::from_utterance)
                .collect(),
        };
        let analysis = analyzer.analyze(&request);
        let fresh = self.absorb(subgroup_id, tick, &analysis.result.insights);
        (fresh, analysis.warnings)
    }

    /// Enqueues `new_insights` everywhere except their source, then lets every
    /// surrogate whose cooldown has expired voice its best pending insight.
    pub fn route_tick(&mut self, tick: u32, new_insights: &[Insight]) -> Vec<Delivery> {
        for insight in new_insights {
            self.insights
                .entry(insight.insight_id.clone())
                .or_insert_with(|| insight.clone());
            for state in &mut self.states {
                if state.subgroup_id == insight.source_subgroup
                    || state.delivered.contains(&insight.insight_id)
                    || state.pending.iter().any(|p| p.insight_id == insight.insight_id)
                {
                    continue;
                }
                let p = priority(insight, state, &self.weights);
                state.pending.push(PendingInsight {
                    insight_id: insight.insight_id.clone(),
                    priority: p,
                });
            }
        }

        let mut deliveries = Vec::new();
        for state in &mut self.states {
            // novelty and impact drift while an insight waits
            let refreshed: Vec<f64> = state
                .pending
                .iter()
                .map(|p| priority(&self.insights[&p.insight_id], state, &self.weights))
                .collect();
            for (p, value) in state.pending.iter_mut().zip(refreshed) {
                p.priority = value;
            }
            if state.cooldown_remaining > 0 {
                state.cooldown_remaining -= 1;
                continue;
            }
            let Some(best) = best_pending(&state.pending, &self.insights) else {
                continue;
            };
            let chosen = state.pending.remove(best);
            let insight = &self.insights[&chosen.insight_id];
            state.delivered.insert(chosen.insight_id.clone());
            state.seen_tags.extend(insight.argument_tags.iter().cloned());
            state.cooldown_remaining = self.cooldown_ticks;
            deliveries.push(Delivery {
                tick,
                insight_id: chosen.insight_id,
                source: insight.source_subgroup.clone(),
                target: state.subgroup_id.clone(),
                stance: insight.stance,
                tags: insight.argument_tags.iter().cloned().collect(),
                priority: chosen.priority,
            });
        }
        deliveries
    }

    /// Adds one unit of impact per exposed participant whose margin moved at
    /// least [`IMPACT_SHIFT_RUNS`] toward the insight's stance.
    pub fn record_impact(&mut self, insight_id: &str, margin_deltas: &[f64]) -> Option<f64> {
        let insight = self.insights.get_mut(insight_id)?;
        let sign = insight.stance.sign();
        let moved = margin_deltas
            .iter()
            .filter(|d| sign * **d >= IMPACT_SHIFT_RUNS - SHIFT_EPS)
            .count();
        insight.impact += moved as f64;
        Some(insight.impact)
    }
}

/// Highest priority; ties go to the older insight, then the smaller id.
fn best_pending(pending: &[PendingInsight], insights: &BTreeMap<String, Insight>) -> Option<usize> {
    pending
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| {
            let ia = &insights[&a.insight_id];
            let ib = &insights[&b.insight_id];
            a.priority
                .total_cmp(&b.priority)
                .then_with(|| ib.created_tick.cmp(&ia.created_tick))
                .then_with(|| ib.insight_id.cmp(&ia.insight_id))
        })
        .map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn insight(id: &str, source: &str, tags: &[&str], tick: u32, impact: f64) -> Insight {
        Insight {
            insight_id: id.into(),
            source_subgroup: source.into(),
            stance: Side::A,
            argument_tags: tags.iter().map(|s| s.to_string()).collect(),
            text: format!("argument {id}"),
            created_tick: tick,
            impact,
        }
    }

    fn state_with_seen(seen: &[&str]) -> SurrogateState {
        let mut s = SurrogateState::new("S2", "sur-S2");
        s.seen_tags = seen.iter().map(|s| s.to_string()).collect();
        s
    }

    fn network(n: usize, cooldown: u32) -> SurrogateNetwork {
        let states = (1..=n)
            .map(|i| SurrogateState::new(format!("S{i}"), format!("sur-S{i}")))
            .collect();
        SurrogateNetwork::from_states(states, RoutingWeights::default(), cooldown)
    }

    #[test]
    fn novelty_cases() {
        let i = insight("i", "S1", &["a", "b"], 0, 0.0);
        assert_eq!(novelty(&i, &state_with_seen(&[])), 1.0);
        assert_eq!(novelty(&i, &state_with_seen(&["a", "b", "c"])), 0.0);
        assert_eq!(novelty(&i, &state_with_seen(&["a"])), 0.5);
    }

    #[test]
    fn priority_cases() {
        let s = state_with_seen(&["a"]);
        let half_novel = insight("i", "S1", &["a", "b"], 0, 0.0);
        let w = RoutingWeights { novelty_weight: 1.0, impact_weight: 0.0 };
        assert_eq!(priority(&half_novel, &s, &w), 0.5);
        let w = RoutingWeights { novelty_weight: 0.0, impact_weight: 1.0 };
        assert_eq!(priority(&half_novel, &s, &w), 0.0);
        let fresh = insight("j", "S1", &["z"], 0, 1.0);
        let p = priority(&fresh, &s, &RoutingWeights::default());
        assert!((p - 0.85).abs() < 1e-12);
    }

    #[test]
    fn weights_validation() {
        assert!(RoutingWeights { novelty_weight: 0.0, impact_weight: 0.0 }.validate().is_err());
        assert!(RoutingWeights { novelty_weight: -1.0, impact_weight: 2.0 }.validate().is_err());
        assert!(RoutingWeights::default().validate().is_ok());
    }

    #[test]
    fn single_insight_reaches_every_other_subgroup() {
        let mut net = network(5, 15);
        let d = net.route_tick(3, &[insight("i1", "S1", &["a"], 3, 0.0)]);
        let targets: Vec<_> = d.iter().map(|d| d.target.as_str()).collect();
        assert_eq!(targets, ["S2", "S3", "S4", "S5"]);
        assert!(d.iter().all(|d| d.tick == 3 && d.source == "S1"));
        assert!(net.states().iter().skip(1).all(|s| s.cooldown_remaining == 15));
        assert!(net.state("S2").unwrap().seen_tags.contains("a"));
    }

    #[test]
    fn fresh_insight_beats_stale_one() {
        let mut net = network(2, 15);
        net.states_mut()[1].seen_tags = ["a".to_string(), "b".to_string()].into();
        net.states_mut()[1].cooldown_remaining = 1;
        let stale = insight("i1", "S1", &["a", "b"], 0, 0.0);
        let fresh = insight("i2", "S1", &["c"], 0, 0.0);
        assert!(net.route_tick(0, &[stale.clone(), fresh.clone()]).is_empty());
        let s2 = net.state("S2").unwrap();
        // priorities follow the formula: 0.7 * novelty
        assert_eq!(s2.pending[0].priority, 0.0);
        assert!((s2.pending[1].priority - 0.7).abs() < 1e-12);
        let d = net.route_tick(1, &[]);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].insight_id, "i2");
    }

    #[test]
    fn cooldown_blocks_delivery() {
        let mut net = network(3, 15);
        for s in net.states_mut() {
            s.cooldown_remaining = 4;
        }
        let d = net.route_tick(0, &[insight("i1", "S1", &["a"], 0, 0.0)]);
        assert!(d.is_empty());
        assert_eq!(net.state("S2").unwrap().pending.len(), 1);
        assert_eq!(net.state("S3").unwrap().pending.len(), 1);
        assert!(net.state("S1").unwrap().pending.is_empty());
        assert!(net.states().iter().all(|s| s.cooldown_remaining == 3));
    }

    #[test]
    fn ties_prefer_older_then_smaller_id() {
        let mut net = network(2, 0);
        net.states_mut()[1].cooldown_remaining = 1;
        let newer = insight("i1", "S1", &["x"], 5, 0.0);
        let older_b = insight("i3", "S1", &["y"], 2, 0.0);
        let older_a = insight("i2", "S1", &["z"], 2, 0.0);
        net.route_tick(5, &[newer, older_b, older_a]);
        let order: Vec<_> = (6..9)
            .flat_map(|t| net.route_tick(t, &[]))
            .map(|d| d.insight_id)
            .collect();
        assert_eq!(order, ["i2", "i3", "i1"]);
    }

    #[test]
    fn absorb_dedups_and_marks_seen() {
        let mut net = network(2, 0);
        let c = InsightCandidate {
            stance: Side::B,
            argument_tags: vec!["home_field".into()],
            text: "home field".into(),
        };
        let first = net.absorb("S1", 4, &[c.clone(), c.clone()]);
        assert_eq!(first.len(), 1);
        assert_eq!(first[0].created_tick, 4);
        assert!(net.absorb("S1", 5, &[c.clone()]).is_empty());
        assert_eq!(net.absorb("S2", 5, &[c]).len(), 1);
        assert!(net.state("S1").unwrap().seen_tags.contains("home_field"));
    }

    #[test]
    fn extract_with_empty_window() {
        let mut net = network(2, 0);
        let spec = QuestionSpec::new("q", "Royals", "Phillies", Side::B);
        let (ins, warn) = net.extract_insights(
            "S1",
            0,
            &[],
            &spec,
            &[],
            &crate::analyzer::StructuredAnalyzer,
        );
        assert!(ins.is_empty() && warn.is_empty());
    }

    #[test]
    fn impact_counting() {
        let mut net = network(2, 0);
        net.route_tick(0, &[insight("i1", "S1", &["a"], 0, 0.0)]);
        assert_eq!(net.record_impact("i1", &[0.5, 0.5, 0.5, 0.0, -0.5]), Some(3.0));
        assert_eq!(net.record_impact("i1", &[-0.5, -1.0]), Some(3.0));
        assert_eq!(net.record_impact("i1", &[0.1]), Some(4.0));
        assert_eq!(net.record_impact("i1", &[0.5 - 0.4]), Some(5.0));
        assert_eq!(net.record_impact("nope", &[1.0]), None);
    }

    #[test]
    fn render_is_lossless() {
        let target = SurrogateState::new("S3", "sur-S3");
        let mut i = insight("i7", "S1", &["bullpen_depth"], 2, 0.0);
        i.stance = Side::B;
        let u = render_delivery(&i, &target, 42);
        assert_eq!(u.tick, 42);
        assert_eq!(u.subgroup_id, "S3");
        assert_eq!(u.author, Author::Surrogate("sur-S3".into()));
        let p = u.payload.unwrap();
        assert_eq!(p.stance, Some(Side::B));
        assert_eq!(p.insight_id.as_deref(), Some("i7"));
        assert_eq!(p.argument_tags, vec!["bullpen_depth".to_string()]);

        let other = render_delivery(&i, &SurrogateState::new("S4", "sur-S4"), 42);
        assert_ne!(other.subgroup_id, "S3");
        assert_eq!(other.payload.unwrap().insight_id.as_deref(), Some("i7"));
    }

    #[test]
    fn delivery_log_round_trip() {
        let d = Delivery {
            tick: 9,
            insight_id: "ins-00001".into(),
            source: "tt1".into(),
            target: "tt2".into(),
            stance: Side::A,
            tags: vec!["ace_pitcher".into()],
            priority: 0.7,
        };
        let mut buf = Vec::new();
        write_deliveries(&mut buf, std::slice::from_ref(&d)).unwrap();
        let line = String::from_utf8(buf.clone()).unwrap();
        assert!(line.starts_with(r#"{"tick":9,"insight_id":"ins-00001","source":"tt1","target":"tt2","stance":"A""#));
        assert_eq!(read_deliveries(buf.as_slice()).unwrap(), vec![d]);
    }
}
