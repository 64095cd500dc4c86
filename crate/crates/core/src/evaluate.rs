//! Scoring a set of game records: accuracy by confidence class, intervals,
//! effect size, wager backtests and the conversation-rate split.

use std::fmt;
use std::fs;
use std::io::BufWriter;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{
    accuracy_table, cohens_d_proportions, simulate_ats, simulate_fade_low, simulate_moneyline,
    stratify_by_rate, wilson_interval, write_cumulative_profit, AccuracyRow, GameRecord,
    RateStratification, StrategyReport, Wager, WILSON_Z_95,
};
use crate::types::Confidence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Back every High Confidence pick outright.
    Moneyline,
    /// Back every High Confidence pick on the run line.
    Ats,
    /// Bet against every Low Confidence pick.
    FadeLow,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Moneyline, Strategy::Ats, Strategy::FadeLow];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Moneyline => "moneyline",
            Strategy::Ats => "ats",
            Strategy::FadeLow => "fade_low",
        }
    }

    pub fn confidence(self) -> Confidence {
        match self {
            Strategy::Moneyline | Strategy::Ats => Confidence::High,
            Strategy::FadeLow => Confidence::Low,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "moneyline" => Ok(Strategy::Moneyline),
            "ats" => Ok(Strategy::Ats),
            "fade" | "fade_low" | "fade-low" => Ok(Strategy::FadeLow),
            other => Err(Error::Config(format!("unknown strategy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluateOptions {
    pub wager: Wager,
    pub strategies: Vec<Strategy>,
    /// Flat implied probability for every fade bet. Defaults to the
    /// complement of each pick's price.
    pub fade_prob: Option<f64>,
}

impl Default for EvaluateOptions {
    fn default() -> Self {
        EvaluateOptions {
            wager: Wager::default(),
            strategies: Strategy::ALL.to_vec(),
            fade_prob: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassInterval {
    pub confidence: Confidence,
    pub wins: usize,
    pub n: usize,
    pub low: f64,
    pub high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub n_records: usize,
    pub accuracy_table: Vec<AccuracyRow>,
    pub wilson_intervals: Vec<ClassInterval>,
    /// High vs Low accuracy; absent unless both classes have records.
    pub cohens_d: Option<f64>,
    pub strategies: Vec<StrategyReport>,
    pub rate_stratification: RateStratification,
    pub warnings: Vec<String>,
}

impl EvaluationReport {
    pub fn row(&self, confidence: Confidence) -> Option<&AccuracyRow> {
        self.accuracy_table.iter().find(|r| r.confidence == confidence)
    }

    pub fn interval(&self, confidence: Confidence) -> Option<&ClassInterval> {
        self.wilson_intervals.iter().find(|r| r.confidence == confidence)
    }

    pub fn strategy(&self, strategy: Strategy) -> Option<&StrategyReport> {
        self.strategies.iter().find(|r| r.strategy == strategy.name())
    }
}

pub fn evaluate(records: &[GameRecord], options: &EvaluateOptions) -> Result<EvaluationReport> {
    options.wager.validate()?;
    if let Some(p) = options.fade_prob {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidProbability { index: 0, value: p });
        }
    }
    for (i, r) in records.iter().enumerate() {
        r.validate(i + 1)?;
    }
    let table = accuracy_table(records)?;
    let mut warnings = Vec::new();

    let mut intervals = Vec::with_capacity(table.len());
    for row in &table {
        let (low, high) = wilson_interval(row.wins as u64, row.n as u64, WILSON_Z_95)?;
        intervals.push(ClassInterval {
            confidence: row.confidence,
            wins: row.wins,
            n: row.n,
            low,
            high,
        });
    }

    let cohens_d = match table.as_slice() {
        [hi, lo] => match cohens_d_proportions(hi.accuracy, hi.n as u64, lo.accuracy, lo.n as u64) {
            Ok(d) => Some(d),
            Err(e) => {
                warnings.push(format!("effect size: {e}"));
                None
            }
        },
        _ => {
            warnings.push("effect size needs both confidence classes".to_string());
            None
        }
    };

    let mut strategies = Vec::new();
    for &strategy in &options.strategies {
        let subset: Vec<GameRecord> = records
            .iter()
            .filter(|r| r.confidence == strategy.confidence())
            .cloned()
            .collect();
        if subset.is_empty() {
            warnings.push(format!(
                "strategy {strategy}: no {} Confidence records, skipped",
                strategy.confidence()
            ));
            continue;
        }
        let report = match strategy {
            Strategy::Moneyline => simulate_moneyline(&subset, options.wager)?,
            Strategy::Ats => simulate_ats(&subset, options.wager)?,
            Strategy::FadeLow => {
                let flat = options.fade_prob.map(|p| vec![p; subset.len()]);
                simulate_fade_low(&subset, options.wager, flat.as_deref())?
            }
        };
        strategies.push(report);
    }

    Ok(EvaluationReport {
        n_records: records.len(),
        accuracy_table: table,
        wilson_intervals: intervals,
        cohens_d,
        strategies,
        rate_stratification: stratify_by_rate(records)?,
        warnings,
    })
}

/// Writes `report.json` and one `cumulative_profit_<strategy>.csv` per
/// strategy under `out`.
pub fn write_report(out: &Path, report: &EvaluationReport) -> Result<()> {
    fs::create_dir_all(out)?;
    let json = BufWriter::new(fs::File::create(out.join("report.json"))?);
    serde_json::to_writer_pretty(json, report)?;
    for s in &report.strategies {
        let path = out.join(format!("cumulative_profit_{}.csv", s.strategy));
        write_cumulative_profit(BufWriter::new(fs::File::create(path)?), s)?;
    }
    Ok(())
}
