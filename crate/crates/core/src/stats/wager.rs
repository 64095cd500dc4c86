use std::io::Write;

use serde::{Deserialize, Serialize};

use super::distribution::poisson_binomial_tail;
use super::record::GameRecord;
use crate::error::{Error, Result};
use crate::types::Confidence;

/// Flat-stake betting terms. Payouts are derived from implied probability:
/// decimal odds = (1 - vig) / p.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wager {
    pub stake: f64,
    pub vig: f64,
}

impl Default for Wager {
    fn default() -> Self {
        Wager {
            stake: 100.0,
            vig: 0.0,
        }
    }
}

impl Wager {
    pub fn validate(&self) -> Result<()> {
        if !(self.stake.is_finite() && self.stake > 0.0) {
            return Err(Error::NonPositiveStake);
        }
        if !(self.vig.is_finite() && (0.0..1.0).contains(&self.vig)) {
            return Err(Error::InvalidVig(self.vig));
        }
        Ok(())
    }

    /// Net result of one bet at implied probability `prob`.
    pub fn profit(&self, prob: f64, won: bool) -> f64 {
        if won {
            self.stake * ((1.0 - self.vig) / prob - 1.0)
        } else {
            -self.stake
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyReport {
    pub strategy: String,
    pub n_bets: usize,
    pub wins: usize,
    pub accuracy: f64,
    pub mean_implied_prob: f64,
    pub total_staked: f64,
    pub total_profit: f64,
    pub roi: f64,
    /// P(wins >= observed) if every bet won at its implied probability.
    pub p_value: f64,
    /// (1-based bet index, cumulative profit) in input order.
    pub cumulative_profit_series: Vec<(usize, f64)>,
}

fn settle(
    strategy: &str,
    bets: impl IntoIterator<Item = (f64, bool)>,
    wager: Wager,
) -> Result<StrategyReport> {
    wager.validate()?;
    let mut probs = Vec::new();
    let mut wins = 0;
    let mut running = 0.0;
    let mut series = Vec::new();
    for (prob, won) in bets {
        if !(prob > 0.0 && prob < 1.0) {
            return Err(Error::InvalidProbability {
                index: probs.len(),
                value: prob,
            });
        }
        probs.push(prob);
        wins += usize::from(won);
        running += wager.profit(prob, won);
        series.push((probs.len(), running));
    }
    if probs.is_empty() {
        return Err(Error::EmptyBetSet);
    }
    let n = probs.len();
    let total_staked = wager.stake * n as f64;
    Ok(StrategyReport {
        strategy: strategy.to_string(),
        n_bets: n,
        wins,
        accuracy: wins as f64 / n as f64,
        mean_implied_prob: probs.iter().sum::<f64>() / n as f64,
        total_staked,
        total_profit: running,
        roi: running / total_staked,
        p_value: poisson_binomial_tail(&probs, wins)?,
        cumulative_profit_series: series,
    })
}

/// Back the picked team outright on every record.
pub fn simulate_moneyline(records: &[GameRecord], wager: Wager) -> Result<StrategyReport> {
    settle(
        "moneyline",
        records.iter().map(|r| (r.vegas_prob_pick, r.pick_won())),
        wager,
    )
}

/// Back the picked team on the run line: it must win by at least
/// `ats_line_runs`.
pub fn simulate_ats(records: &[GameRecord], wager: Wager) -> Result<StrategyReport> {
    settle(
        "ats",
        records.iter().map(|r| (r.ats_prob_pick, r.covered())),
        wager,
    )
}

/// Back the opponent of every Low Confidence pick.
///
/// Without `opposite_probs` the opponent is priced at `1 - vegas_prob_pick`;
/// otherwise `opposite_probs[i]` is the implied probability for record `i`.
pub fn simulate_fade_low(
    records: &[GameRecord],
    wager: Wager,
    opposite_probs: Option<&[f64]>,
) -> Result<StrategyReport> {
    if let Some(r) = records.iter().find(|r| r.confidence != Confidence::Low) {
        return Err(Error::NotLowConfidence(r.game_id.clone()));
    }
    if let Some(probs) = opposite_probs {
        if probs.len() != records.len() {
            return Err(Error::Config(format!(
                "{} opposite-side probabilities for {} records",
                probs.len(),
                records.len()
            )));
        }
    }
    settle(
        "fade_low",
        records.iter().enumerate().map(|(i, r)| {
            let prob = opposite_probs.map_or(1.0 - r.vegas_prob_pick, |p| p[i]);
            (prob, !r.pick_won())
        }),
        wager,
    )
}

pub fn write_cumulative_profit<W: Write>(writer: W, report: &StrategyReport) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["bet_index", "cumulative_profit"])?;
    for (i, p) in &report.cumulative_profit_series {
        wtr.write_record([i.to_string(), p.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Side;
    use proptest::prelude::*;

    fn record(prob: f64, won: bool, margin: u32, confidence: Confidence) -> GameRecord {
        GameRecord {
            game_id: "g".into(),
            pick: Side::A,
            predicted_margin: 1.0,
            confidence,
            messages_per_minute: 10.0,
            vegas_prob_pick: prob,
            ats_prob_pick: 0.44,
            ats_line_runs: 2.0,
            winner: if won { Side::A } else { Side::B },
            actual_margin: margin,
        }
    }

    #[test]
    fn even_odds_single_win() {
        let r = simulate_moneyline(&[record(0.5, true, 3, Confidence::High)], Wager::default())
            .unwrap();
        assert!((r.total_profit - 100.0).abs() < 1e-9);
        assert!((r.roi - 1.0).abs() < 1e-12);
        assert!((r.p_value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn flat_moneyline_closed_form() {
        let recs: Vec<_> = (0..27)
            .map(|i| record(0.57, i < 21, 3, Confidence::High))
            .collect();
        let r = simulate_moneyline(&recs, Wager::default()).unwrap();
        let expected = 21.0 * 100.0 * (1.0 / 0.57 - 1.0) - 6.0 * 100.0;
        assert!((r.total_profit - expected).abs() < 1e-9);
        assert!((r.total_profit - 984.21).abs() < 0.01);
        assert!((r.roi - 0.3645).abs() < 1e-3);
    }

    #[test]
    fn all_losses() {
        let recs: Vec<_> = (0..5).map(|_| record(0.6, false, 1, Confidence::High)).collect();
        let r = simulate_moneyline(&recs, Wager::default()).unwrap();
        assert_eq!(r.roi, -1.0);
    }

    #[test]
    fn ats_one_run_win_loses() {
        let r = simulate_ats(&[record(0.6, true, 1, Confidence::High)], Wager::default()).unwrap();
        assert_eq!(r.wins, 0);
        let r = simulate_ats(&[record(0.6, true, 2, Confidence::High)], Wager::default()).unwrap();
        assert_eq!(r.wins, 1);
    }

    #[test]
    fn flat_ats_closed_form() {
        let recs: Vec<_> = (0..27)
            .map(|i| record(0.57, i < 21, if i < 17 { 3 } else { 1 }, Confidence::High))
            .collect();
        let r = simulate_ats(&recs, Wager::default()).unwrap();
        assert_eq!(r.wins, 17);
        let expected = (17.0 * 100.0 * (1.0 / 0.44 - 1.0) - 1000.0) / 2700.0;
        assert!((r.roi - expected).abs() < 1e-12);
        assert!((r.roi - 0.431).abs() < 1e-3);
    }

    #[test]
    fn fade_complement_and_override() {
        let lost = record(0.6, false, 2, Confidence::Low);
        let r = simulate_fade_low(&[lost.clone()], Wager::default(), None).unwrap();
        assert_eq!(r.wins, 1);
        assert!((r.mean_implied_prob - 0.4).abs() < 1e-12);

        let recs: Vec<_> = (0..32)
            .map(|i| record(0.531, i >= 19, 2, Confidence::Low))
            .collect();
        let r = simulate_fade_low(&recs, Wager::default(), Some(&[0.491; 32])).unwrap();
        assert_eq!(r.wins, 19);
        let expected = (19.0 * 100.0 * (1.0 / 0.491 - 1.0) - 1300.0) / 3200.0;
        assert!((r.roi - expected).abs() < 1e-12);
        assert!((r.roi - 0.209).abs() < 1e-3);
    }

    #[test]
    fn fade_total_loss() {
        let recs: Vec<_> = (0..4).map(|_| record(0.55, true, 2, Confidence::Low)).collect();
        assert_eq!(simulate_fade_low(&recs, Wager::default(), None).unwrap().roi, -1.0);
    }

    #[test]
    fn fade_rejects_high_records() {
        let recs = [record(0.55, true, 2, Confidence::High)];
        assert!(matches!(
            simulate_fade_low(&recs, Wager::default(), None),
            Err(Error::NotLowConfidence(_))
        ));
    }

    #[test]
    fn empty_and_bad_stake() {
        assert!(matches!(
            simulate_moneyline(&[], Wager::default()),
            Err(Error::EmptyBetSet)
        ));
        let w = Wager { stake: 0.0, vig: 0.0 };
        assert!(matches!(
            simulate_moneyline(&[record(0.5, true, 1, Confidence::High)], w),
            Err(Error::NonPositiveStake)
        ));
    }

    #[test]
    fn vig_reduces_payout() {
        let w = Wager { stake: 100.0, vig: 0.05 };
        assert!((w.profit(0.5, true) - 90.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn profit_identities(bets in prop::collection::vec((0.05f64..0.95, any::<bool>(), 1u32..6), 1..40)) {
            let recs: Vec<_> = bets.iter().map(|&(p, w, m)| record(p, w, m, Confidence::Low)).collect();
            let w = Wager::default();
            for report in [
                simulate_moneyline(&recs, w).unwrap(),
                simulate_ats(&recs, w).unwrap(),
                simulate_fade_low(&recs, w, None).unwrap(),
            ] {
                let per_bet: f64 = match report.strategy.as_str() {
                    "moneyline" => recs.iter().map(|r| w.profit(r.vegas_prob_pick, r.pick_won())).sum(),
                    "ats" => recs.iter().map(|r| w.profit(r.ats_prob_pick, r.covered())).sum(),
                    _ => recs.iter().map(|r| w.profit(1.0 - r.vegas_prob_pick, !r.pick_won())).sum(),
                };
                prop_assert!((report.total_profit - per_bet).abs() < 1e-6);
                let last = report.cumulative_profit_series.last().unwrap().1;
                prop_assert!((last - report.total_profit).abs() < 1e-9);
                prop_assert!((report.roi - report.total_profit / report.total_staked).abs() < 1e-12);
                prop_assert!((report.accuracy - report.wins as f64 / report.n_bets as f64).abs() < 1e-15);
            }
            // fading wins exactly when the straight bet loses
            let straight = simulate_moneyline(&recs, w).unwrap();
            let fade = simulate_fade_low(&recs, w, None).unwrap();
            prop_assert_eq!(straight.wins + fade.wins, recs.len());
        }
    }
}
