//! Per-participant belief tracking, collective aggregation, and confidence
//! classification.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::analyzer::BeliefEstimate;
use crate::error::{Error, Result};
use crate::types::{Confidence, Lean, Side};

/// Largest run margin a belief may hold.
pub const MAX_MARGIN: f64 = 10.0;

/// Predicted winning margins at or above this many runs are High Confidence.
pub const HIGH_CONFIDENCE_RUNS: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefState {
    pub participant_id: String,
    pub lean: Lean,
    /// Signed runs; positive means team A wins by that many.
    pub margin: f64,
    pub strength: f64,
    pub updated_tick: u32,
}

impl BeliefState {
    /// Clamps margin and strength and derives the lean from the margin sign.
    /// Callers must reject non-finite inputs first.
    pub fn new(participant_id: impl Into<String>, margin: f64, strength: f64, tick: u32) -> Self {
        let margin = margin.clamp(-MAX_MARGIN, MAX_MARGIN);
        BeliefState {
            participant_id: participant_id.into(),
            lean: Lean::from_margin(margin),
            margin,
            strength: strength.clamp(0.0, 1.0),
            updated_tick: tick,
        }
    }
}

/// Replaces the prior with the analyzer's estimate. No estimate leaves the
/// prior untouched; a non-finite estimate is an error and the caller keeps
/// the prior.
pub fn update_belief(
    prior: &BeliefState,
    analysis: Option<&BeliefEstimate>,
    tick: u32,
) -> Result<BeliefState> {
    let Some(est) = analysis else {
        return Ok(prior.clone());
    };
    if !est.margin.is_finite() {
        return Err(Error::NonFinite { field: "margin" });
    }
    if !est.strength.is_finite() {
        return Err(Error::NonFinite { field: "strength" });
    }
    Ok(BeliefState::new(
        prior.participant_id.clone(),
        est.margin,
        est.strength,
        tick,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectiveEstimate {
    pub tick: u32,
    pub collective_margin: f64,
    pub support_a: f64,
    pub support_b: f64,
    pub n_participants: usize,
}

/// Strength-weighted mean of the signed margins. Undecided participants pull
/// the mean toward zero with their full strength.
pub fn aggregate<'a, I>(beliefs: I, tick: u32) -> Result<CollectiveEstimate>
where
    I: IntoIterator<Item = &'a BeliefState>,
{
    let beliefs: Vec<&BeliefState> = beliefs.into_iter().collect();
    let Some(first) = beliefs.first() else {
        return Err(Error::NoParticipants);
    };
    // shifted by the first margin so a unanimous group comes out exact
    let reference = first.margin;
    let mut weight = 0.0;
    let mut weighted_offset = 0.0;
    let mut weight_a = 0.0;
    let mut weight_b = 0.0;
    for b in &beliefs {
        weight += b.strength;
        weighted_offset += b.strength * (b.margin - reference);
        match b.lean {
            Lean::A => weight_a += b.strength,
            Lean::B => weight_b += b.strength,
            Lean::Undecided => {}
        }
    }
    let n = beliefs.len();
    let (collective_margin, support_a, support_b) = if weight > 0.0 {
        (
            reference + weighted_offset / weight,
            weight_a / weight,
            weight_b / weight,
        )
    } else {
        (0.0, 0.0, 0.0)
    };
    Ok(CollectiveEstimate {
        tick,
        collective_margin,
        support_a,
        support_b,
        n_participants: n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub pick: Side,
    pub predicted_margin: f64,
    pub confidence: Confidence,
}

/// Picks the side the collective margin points to. A zero margin goes to
/// the larger support share, then to the home side.
pub fn classify(last: &CollectiveEstimate, home_side: Side) -> Classification {
    let m = last.collective_margin;
    let pick = if m > 0.0 {
        Side::A
    } else if m < 0.0 {
        Side::B
    } else if last.support_a > last.support_b {
        Side::A
    } else if last.support_b > last.support_a {
        Side::B
    } else {
        home_side
    };
    let predicted_margin = m.abs();
    let confidence = if predicted_margin >= HIGH_CONFIDENCE_RUNS {
        Confidence::High
    } else {
        Confidence::Low
    };
    Classification {
        pick,
        predicted_margin,
        confidence,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forecast {
    pub question_id: String,
    pub pick: Side,
    pub predicted_margin: f64,
    pub confidence: Confidence,
    pub messages_per_minute: f64,
    pub final_collective_margin: f64,
}

pub fn write_forecasts<W: Write>(writer: W, forecasts: &[Forecast]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for f in forecasts {
        wtr.serialize(f)?;
    }
    if forecasts.is_empty() {
        wtr.write_record([
            "question_id",
            "pick",
            "predicted_margin",
            "confidence",
            "messages_per_minute",
            "final_collective_margin",
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_forecasts<R: Read>(reader: R) -> Result<Vec<Forecast>> {
    let mut rdr = csv::Reader::from_reader(reader);
    Ok(rdr.deserialize().collect::<Result<_, _>>()?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct TrajectoryRow {
    tick: u32,
    collective_margin: f64,
    support_a: f64,
    support_b: f64,
}

/// Writes `tick,collective_margin,support_a,support_b`.
pub fn write_trajectory<W: Write>(writer: W, trajectory: &[CollectiveEstimate]) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    wtr.write_record(["tick", "collective_margin", "support_a", "support_b"])?;
    for e in trajectory {
        wtr.serialize(TrajectoryRow {
            tick: e.tick,
            collective_margin: e.collective_margin,
            support_a: e.support_a,
            support_b: e.support_b,
        })?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads a trajectory CSV. Participant counts are not stored and come back
/// as zero.
pub fn read_trajectory<R: Read>(reader: R) -> Result<Vec<CollectiveEstimate>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.deserialize::<TrajectoryRow>() {
        let row = row?;
        out.push(CollectiveEstimate {
            tick: row.tick,
            collective_margin: row.collective_margin,
            support_a: row.support_a,
            support_b: row.support_b,
            n_participants: 0,
        });
    }
    Ok(out)
}
