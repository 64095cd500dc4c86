//! Simulated fans. Each participant holds a prior drawn from its persona,
//! chats at a persona-specific rate, and moves its margin the first time it
//! hears each argument.

use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as NormalCdf};

use crate::analyzer::canonical_tags;
use crate::belief::{BeliefState, MAX_MARGIN};
use crate::error::{Error, Result};
use crate::rng;
use crate::session::{Author, Participant, Payload, QuestionSpec, Utterance};
use crate::types::{Lean, Side};

/// Smallest prior margin magnitude, so every prior leans somewhere.
pub const MIN_PRIOR_MARGIN: f64 = 0.1;
pub const MIN_PRIOR_STRENGTH: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Argument {
    pub stance: Side,
    pub argument_tags: Vec<String>,
    /// May contain `{team}`, replaced by the name of the side it supports.
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Persona {
    pub persona_id: String,
    /// Probability the prior lean follows the market favorite.
    pub favorite_bias: f64,
    /// Scales how far one argument moves the margin.
    pub openness: f64,
    /// Expected utterances per minute.
    pub chattiness: f64,
    pub prior_margin_scale: f64,
    pub argument_pool_ref: String,
    pub argument_pool: Vec<Argument>,
}

impl Persona {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !unit(self.favorite_bias) || !unit(self.openness) {
            return Err(Error::Config(format!(
                "persona {}: favorite_bias and openness must be in [0, 1]",
                self.persona_id
            )));
        }
        if !(self.chattiness.is_finite() && self.chattiness >= 0.0) {
            return Err(Error::Config(format!(
                "persona {}: chattiness must be >= 0",
                self.persona_id
            )));
        }
        if !(self.prior_margin_scale.is_finite() && self.prior_margin_scale > 0.0) {
            return Err(Error::Config(format!(
                "persona {}: prior_margin_scale must be positive",
                self.persona_id
            )));
        }
        Ok(())
    }
}

/// Argument templates: (tags, text). Each template exists for both sides.
const POOLS: &[(&str, &[(&[&str], &str)])] = &[
    (
        "pitching",
        &[
            (&["ace_pitcher"], "{team} have the better arm on the mound tonight"),
            (&["bullpen_depth"], "the {team} bullpen can shut this down late"),
            (&["ace_pitcher", "strikeout_rate"], "{team}'s starter is missing bats all month"),
        ],
    ),
    (
        "offense",
        &[
            (&["lineup_power"], "{team} can hit the ball out of any park"),
            (&["hot_streak"], "{team} bats are hot right now"),
            (&["lineup_power", "ballpark_factor"], "this park plays right into {team}'s power"),
        ],
    ),
    (
        "situational",
        &[
            (&["home_field"], "{team} get a real lift from their crowd"),
            (&["travel_fatigue"], "the other side is worn out from travel, edge {team}"),
            (&["rest_days"], "{team} come in rested"),
        ],
    ),
    (
        "analytics",
        &[
            (&["run_differential"], "{team}'s run differential tells the story"),
            (&["run_differential", "hot_streak"], "{team} have outscored everyone for two weeks"),
            (&["defense_metrics"], "{team} turn more balls into outs"),
        ],
    ),
    (
        "injuries",
        &[
            (&["injury_news"], "the other lineup is missing a key bat, so {team}"),
            (&["bench_depth"], "{team} have the deeper bench"),
        ],
    ),
];

pub fn pool_names() -> impl Iterator<Item = &'static str> {
    POOLS.iter().map(|(name, _)| *name)
}

/// Resolves a pool reference. `+` joins pools, e.g. `pitching+offense`; an
/// empty reference or `none` is an empty pool.
pub fn argument_pool(reference: &str) -> Option<Vec<Argument>> {
    let mut out = Vec::new();
    for name in reference.split('+').map(str::trim) {
        if name.is_empty() || name == "none" {
            continue;
        }
        let (_, templates) = POOLS.iter().find(|(n, _)| *n == name)?;
        for side in [Side::A, Side::B] {
            for (tags, text) in templates.iter() {
                out.push(Argument {
                    stance: side,
                    argument_tags: canonical_tags(tags),
                    text: text.to_string(),
                });
            }
        }
    }
    Some(out)
}

/// Per-game market facts the priors depend on.
///
/// `herding` in [0, 1) correlates the participants' leans through a shared
/// game-level draw `crowd_tilt` (a standard normal; positive tilts the room
/// toward the favorite). With `herding = 0` every lean is an independent
/// Bernoulli(favorite_bias) draw. For any herding value, averaging over
/// `crowd_tilt ~ N(0, 1)` keeps the favorite-lean probability at
/// favorite_bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameContext {
    pub question_id: String,
    pub market_favorite: Side,
    pub favorite_implied_prob: f64,
    pub crowd_tilt: f64,
    pub herding: f64,
}

impl GameContext {
    pub fn new(question_id: impl Into<String>, market_favorite: Side, favorite_implied_prob: f64) -> Self {
        GameContext {
            question_id: question_id.into(),
            market_favorite,
            favorite_implied_prob,
            crowd_tilt: 0.0,
            herding: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.favorite_implied_prob > 0.0 && self.favorite_implied_prob < 1.0) {
            return Err(Error::Config(format!(
                "game {}: implied probability {} is not in (0, 1)",
                self.question_id, self.favorite_implied_prob
            )));
        }
        if !(0.0..1.0).contains(&self.herding) || !self.crowd_tilt.is_finite() {
            return Err(Error::Config(format!(
                "game {}: herding must be in [0, 1) and crowd_tilt finite",
                self.question_id
            )));
        }
        Ok(())
    }
}

fn leans_to_favorite<R: Rng>(bias: f64, context: &GameContext, rng: &mut R) -> bool {
    if bias <= 0.0 {
        return false;
    }
    if bias >= 1.0 {
        return true;
    }
    if context.herding == 0.0 {
        return rng.random::<f64>() < bias;
    }
    let h = context.herding;
    let noise: f64 = StandardNormal.sample(rng);
    let latent = h * context.crowd_tilt + (1.0 - h * h).sqrt() * noise;
    let std_normal = NormalCdf::new(0.0, 1.0).expect("unit normal");
    latent > std_normal.inverse_cdf(1.0 - bias)
}

/// Draws a participant's opening belief: lean from the favorite bias, margin
/// magnitude from a half-normal with scale `prior_margin_scale` truncated to
/// [0.1, 10], strength uniform in [0.2, 1].
pub fn sample_prior<R: Rng>(
    persona: &Persona,
    context: &GameContext,
    participant_id: &str,
    rng: &mut R,
) -> BeliefState {
    let side = if leans_to_favorite(persona.favorite_bias, context, rng) {
        context.market_favorite
    } else {
        context.market_favorite.opposite()
    };
    let half_normal = Normal::new(0.0, persona.prior_margin_scale).expect("validated scale");
    let mut magnitude = MIN_PRIOR_MARGIN;
    for _ in 0..64 {
        let draw: f64 = half_normal.sample(rng);
        let draw = draw.abs();
        if (MIN_PRIOR_MARGIN..=MAX_MARGIN).contains(&draw) {
            magnitude = draw;
            break;
        }
    }
    let strength = rng.random_range(MIN_PRIOR_STRENGTH..=1.0);
    BeliefState::new(participant_id, side.sign() * magnitude, strength, 0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DynamicsConfig {
    /// Runs one novel argument moves a fully open participant.
    pub argument_step_runs: f64,
    /// Fraction of the gap to the strength target closed per novel argument.
    pub strength_drift: f64,
    pub agree_strength: f64,
    pub contradict_strength: f64,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        DynamicsConfig {
            argument_step_runs: 0.5,
            strength_drift: 0.1,
            agree_strength: 1.0,
            contradict_strength: 0.3,
        }
    }
}

type ArgumentKey = (Side, Vec<String>);

/// One simulated participant. Owns its belief, its memory of arguments
/// heard, and its random stream.
#[derive(Debug, Clone)]
pub struct ParticipantAgent {
    pub participant_id: String,
    pub subgroup_id: String,
    pub persona: Persona,
    pub belief: BeliefState,
    encountered: BTreeSet<ArgumentKey>,
    rng: ChaCha8Rng,
}

impl ParticipantAgent {
    pub fn new(
        participant_id: impl Into<String>,
        subgroup_id: impl Into<String>,
        persona: Persona,
        context: &GameContext,
        seed: u64,
    ) -> Self {
        let participant_id = participant_id.into();
        let mut rng = rng::participant_stream(seed, &participant_id);
        let belief = sample_prior(&persona, context, &participant_id, &mut rng);
        Self::with_belief(participant_id, subgroup_id, persona, belief, rng)
    }

    pub fn with_belief(
        participant_id: impl Into<String>,
        subgroup_id: impl Into<String>,
        persona: Persona,
        belief: BeliefState,
        rng: ChaCha8Rng,
    ) -> Self {
        ParticipantAgent {
            participant_id: participant_id.into(),
            subgroup_id: subgroup_id.into(),
            persona,
            belief,
            encountered: BTreeSet::new(),
            rng,
        }
    }

    /// Applies every argument in `inbox`. An argument moves the margin only
    /// the first time this participant meets its (stance, tags).
    pub fn absorb(&mut self, inbox: &[Utterance], dynamics: &DynamicsConfig, tick: u32) {
        for u in inbox {
            if u.author.participant_id() == Some(self.participant_id.as_str()) {
                continue;
            }
            let Some(payload) = &u.payload else { continue };
            let Some(stance) = payload.stance else { continue };
            let tags = canonical_tags(&payload.argument_tags);
            if tags.is_empty() || !self.encountered.insert((stance, tags)) {
                continue;
            }
            let b = &mut self.belief;
            let target = match b.lean.side() {
                Some(side) if side == stance => Some(dynamics.agree_strength),
                Some(_) => Some(dynamics.contradict_strength),
                None => None,
            };
            let margin = b.margin + self.persona.openness * stance.sign() * dynamics.argument_step_runs;
            let mut strength = b.strength;
            if let Some(t) = target {
                strength += dynamics.strength_drift * (t - strength);
            }
            *b = BeliefState::new(b.participant_id.clone(), margin, strength, tick);
        }
    }

    /// Speaks with probability chattiness * tick_seconds / 60, voicing an
    /// argument for the side it currently leans to when it has one.
    pub fn speak(&mut self, tick: u32, tick_seconds: f64, spec: &QuestionSpec) -> Option<Utterance> {
        let p_speak = (self.persona.chattiness * tick_seconds / 60.0).clamp(0.0, 1.0);
        let roll: f64 = self.rng.random();
        if roll >= p_speak {
            return None;
        }
        let lean = self.belief.lean;
        let options: Vec<&Argument> = self
            .persona
            .argument_pool
            .iter()
            .filter(|a| Lean::from(a.stance) == lean)
            .collect();
        let argument = (!options.is_empty())
            .then(|| options[self.rng.random_range(0..options.len())].clone());

        let b = &self.belief;
        let team = match lean {
            Lean::A => spec.team_a.as_str(),
            Lean::B => spec.team_b.as_str(),
            Lean::Undecided => "either side",
        };
        let text = match &argument {
            Some(a) => format!(
                "{team} by {:.1}: {}",
                b.margin.abs(),
                a.text.replace("{team}", spec.team_name(a.stance))
            ),
            None => format!("I'm on {team}, about {:.1} runs", b.margin.abs()),
        };
        let (stance, argument_tags) = match argument {
            Some(a) => {
                let tags = canonical_tags(&a.argument_tags);
                self.encountered.insert((a.stance, tags.clone()));
                (Some(a.stance), tags)
            }
            None => (None, Vec::new()),
        };
        Some(Utterance {
            author: Author::Participant(self.participant_id.clone()),
            subgroup_id: self.subgroup_id.clone(),
            tick,
            text,
            payload: Some(Payload {
                stance,
                argument_tags,
                margin: Some(b.margin),
                strength: Some(b.strength),
                insight_id: None,
            }),
        })
    }

    /// Absorbs the inbox, then maybe speaks.
    pub fn step(
        &mut self,
        inbox: &[Utterance],
        tick: u32,
        tick_seconds: f64,
        spec: &QuestionSpec,
        dynamics: &DynamicsConfig,
    ) -> Option<Utterance> {
        self.absorb(inbox, dynamics, tick);
        self.speak(tick, tick_seconds, spec)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RosterMember {
    pub participant: Participant,
    pub persona: Persona,
}

/// Default favorite bias: 43 of 59 collective picks were market favorites.
pub const DEFAULT_FAVORITE_BIAS: f64 = 0.73;

/// 25 fans with a spread of openness and chattiness, cycling through the
/// built-in argument pools.
pub fn default_roster() -> Vec<RosterMember> {
    let pools = [
        "pitching",
        "offense",
        "situational",
        "analytics",
        "pitching+injuries",
        "offense+situational",
    ];
    (0..25)
        .map(|i| {
            let id = format!("fan{:02}", i + 1);
            let pool_ref = pools[i % pools.len()].to_string();
            let persona = Persona {
                persona_id: id.clone(),
                favorite_bias: DEFAULT_FAVORITE_BIAS,
                openness: 0.2 + 0.6 * ((i * 7) % 25) as f64 / 24.0,
                chattiness: 3.0 + 6.0 * ((i * 11) % 25) as f64 / 24.0,
                prior_margin_scale: 2.0,
                argument_pool: argument_pool(&pool_ref).expect("built-in pool"),
                argument_pool_ref: pool_ref,
            };
            RosterMember {
                participant: Participant {
                    participant_id: id.clone(),
                    persona_ref: Some(id),
                },
                persona,
            }
        })
        .collect()
}
