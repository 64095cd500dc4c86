use serde::{Deserialize, Serialize};

use super::distribution::poisson_binomial_tail;
use super::record::GameRecord;
use crate::error::{Error, Result};
use crate::types::Confidence;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub confidence: Confidence,
    pub n: usize,
    pub wins: usize,
    pub accuracy: f64,
    pub mean_vegas_prob: f64,
    pub p_value: f64,
}

/// Accuracy per confidence class, High first. Classes with no records are
/// omitted.
pub fn accuracy_table(records: &[GameRecord]) -> Result<Vec<AccuracyRow>> {
    if records.is_empty() {
        return Err(Error::EmptyInput("record set".into()));
    }
    let mut rows = Vec::new();
    for confidence in [Confidence::High, Confidence::Low] {
        let probs: Vec<f64> = records
            .iter()
            .filter(|r| r.confidence == confidence)
            .map(|r| r.vegas_prob_pick)
            .collect();
        if probs.is_empty() {
            continue;
        }
        let wins = records
            .iter()
            .filter(|r| r.confidence == confidence && r.pick_won())
            .count();
        let n = probs.len();
        rows.push(AccuracyRow {
            confidence,
            n,
            wins,
            accuracy: wins as f64 / n as f64,
            mean_vegas_prob: probs.iter().sum::<f64>() / n as f64,
            p_value: poisson_binomial_tail(&probs, wins)?,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCell {
    pub confidence: Confidence,
    /// Strictly above the mean message rate of the whole record set.
    pub above_mean: bool,
    pub n: usize,
    pub wins: usize,
    /// `None` for an empty cell.
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateStratification {
    pub mean_messages_per_minute: f64,
    /// High/above, High/below, Low/above, Low/below.
    pub cells: Vec<RateCell>,
}

impl RateStratification {
    pub fn cell(&self, confidence: Confidence, above_mean: bool) -> &RateCell {
        self.cells
            .iter()
            .find(|c| c.confidence == confidence && c.above_mean == above_mean)
            .expect("all four cells are always present")
    }
}

/// 2x2 split of accuracy by confidence and by conversation rate.
pub fn stratify_by_rate(records: &[GameRecord]) -> Result<RateStratification> {
    if records.is_empty() {
        return Err(Error::EmptyInput("record set".into()));
    }
    let mean = records.iter().map(|r| r.messages_per_minute).sum::<f64>() / records.len() as f64;
    let mut cells = Vec::with_capacity(4);
    for confidence in [Confidence::High, Confidence::Low] {
        for above_mean in [true, false] {
            let members: Vec<&GameRecord> = records
                .iter()
                .filter(|r| r.confidence == confidence && (r.messages_per_minute > mean) == above_mean)
                .collect();
            let wins = members.iter().filter(|r| r.pick_won()).count();
            cells.push(RateCell {
                confidence,
                above_mean,
                n: members.len(),
                wins,
                accuracy: (!members.is_empty()).then(|| wins as f64 / members.len() as f64),
            });
        }
    }
    Ok(RateStratification {
        mean_messages_per_minute: mean,
        cells,
    })
}
