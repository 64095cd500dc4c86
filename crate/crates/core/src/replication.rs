//! A deterministic 59-game record set with flat market prices whose counts
//! match the published accuracy and conversation-rate tables, plus a text
//! summary of its evaluation.

use std::fmt::Write as _;

use crate::error::Result;
use crate::evaluate::{evaluate, EvaluateOptions, EvaluationReport, Strategy};
use crate::stats::{GameRecord, Wager};
use crate::types::{Confidence, Side};

pub const HIGH_PROB: f64 = 0.57;
pub const LOW_PROB: f64 = 0.531;
pub const HIGH_ATS_PROB: f64 = 0.44;
pub const LOW_ATS_PROB: f64 = 0.40;
pub const FADE_PROB: f64 = 0.491;

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationFixture {
    pub records: Vec<GameRecord>,
    /// Flat implied probability of the side opposite each Low pick.
    pub fade_prob: f64,
}

/// Whether item `j` of `n` is one of `k` evenly spread hits.
fn spread(j: usize, k: usize, n: usize) -> bool {
    (j + 1) * k / n > j * k / n
}

/// Interleaves two lists evenly, keeping each list's order.
fn merge_spread<T>(first: Vec<T>, second: Vec<T>) -> Vec<T> {
    let n = first.len() + second.len();
    let k = first.len();
    let mut a = first.into_iter();
    let mut b = second.into_iter();
    (0..n)
        .map(|j| {
            if spread(j, k, n) {
                a.next().expect("first list length")
            } else {
                b.next().expect("second list length")
            }
        })
        .collect()
}

struct Cell {
    above: bool,
    n: usize,
    wins: usize,
}

/// (won, above-mean rate) per record of one confidence class.
fn class_outcomes(cells: [Cell; 2]) -> Vec<(bool, bool)> {
    let [above, below] = cells;
    let make = |c: &Cell| (0..c.n).map(|j| (spread(j, c.wins, c.n), c.above)).collect::<Vec<_>>();
    merge_spread(make(&above), make(&below))
}

pub fn replication_fixture() -> ReplicationFixture {
    let high = class_outcomes([
        Cell { above: true, n: 16, wins: 14 },
        Cell { above: false, n: 11, wins: 7 },
    ]);
    let low = class_outcomes([
        Cell { above: true, n: 13, wins: 4 },
        Cell { above: false, n: 19, wins: 9 },
    ]);

    // 4 of the 21 High wins are by a single run, so 17 cover a 2-run line
    let mut high_wins_seen = 0;
    let high: Vec<(Confidence, bool, bool, u32)> = high
        .into_iter()
        .enumerate()
        .map(|(j, (won, above))| {
            let margin = if won {
                let one_run = spread(high_wins_seen, 4, 21);
                high_wins_seen += 1;
                if one_run { 1 } else { 2 + (j % 4) as u32 }
            } else {
                1 + (j % 3) as u32
            };
            (Confidence::High, won, above, margin)
        })
        .collect();
    let low: Vec<_> = low
        .into_iter()
        .enumerate()
        .map(|(j, (won, above))| (Confidence::Low, won, above, 1 + (j % 5) as u32))
        .collect();

    let (mut above_j, mut below_j) = (0usize, 0usize);
    let records = merge_spread(high, low)
        .into_iter()
        .enumerate()
        .map(|(i, (confidence, won, above, actual_margin))| {
            let rate = if above {
                above_j += 1;
                30.0 + ((above_j - 1) % 7) as f64 * 1.5
            } else {
                below_j += 1;
                18.0 + ((below_j - 1) % 6) as f64 * 1.5
            };
            let pick = if i % 2 == 0 { Side::A } else { Side::B };
            let (predicted_margin, vegas_prob_pick, ats_prob_pick) = match confidence {
                Confidence::High => (1.5 + (i % 6) as f64 * 0.3, HIGH_PROB, HIGH_ATS_PROB),
                Confidence::Low => (0.2 + (i % 6) as f64 * 0.2, LOW_PROB, LOW_ATS_PROB),
            };
            GameRecord {
                game_id: format!("g{:02}", i + 1),
                pick,
                predicted_margin: (predicted_margin * 10.0_f64).round() / 10.0,
                confidence,
                messages_per_minute: rate,
                vegas_prob_pick,
                ats_prob_pick,
                ats_line_runs: 2.0,
                winner: if won { pick } else { pick.opposite() },
                actual_margin,
            }
        })
        .collect();
    ReplicationFixture {
        records,
        fade_prob: FADE_PROB,
    }
}

/// Evaluates the fixture with a $100 flat stake and no vig.
pub fn replicate() -> Result<(ReplicationFixture, EvaluationReport)> {
    let fixture = replication_fixture();
    let options = EvaluateOptions {
        wager: Wager::default(),
        strategies: Strategy::ALL.to_vec(),
        fade_prob: Some(fixture.fade_prob),
    };
    let report = evaluate(&fixture.records, &options)?;
    Ok((fixture, report))
}

fn pct(x: f64) -> String {
    format!("{:.1}%", 100.0 * x)
}

/// Plain-text tables: accuracy by confidence, wager results, and accuracy
/// by conversation rate.
pub fn render_summary(report: &EvaluationReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "Prediction accuracy");
    let _ = writeln!(s, "  {:<6} {:>4} {:>9} {:>10} {:>8}", "class", "n", "accuracy", "market", "p");
    for row in &report.accuracy_table {
        let _ = writeln!(
            s,
            "  {:<6} {:>4} {:>9} {:>10} {:>8.3}",
            row.confidence.to_string(),
            row.n,
            pct(row.accuracy),
            pct(row.mean_vegas_prob),
            row.p_value
        );
    }
    for ci in &report.wilson_intervals {
        let _ = writeln!(
            s,
            "  {} 95% Wilson interval: [{}, {}]",
            ci.confidence,
            pct(ci.low),
            pct(ci.high)
        );
    }
    if let Some(d) = report.cohens_d {
        let _ = writeln!(s, "  Cohen's d (High vs Low): {d:.2}");
    }

    let _ = writeln!(s, "\nWager results ($100 flat stake)");
    let _ = writeln!(
        s,
        "  {:<10} {:>4} {:>10} {:>8} {:>9} {:>8} {:>8}",
        "strategy", "bets", "profit", "roi", "accuracy", "odds", "p"
    );
    for r in &report.strategies {
        let _ = writeln!(
            s,
            "  {:<10} {:>4} {:>10.2} {:>8} {:>9} {:>8} {:>8.3}",
            r.strategy,
            r.n_bets,
            r.total_profit,
            pct(r.roi),
            pct(r.accuracy),
            pct(r.mean_implied_prob),
            r.p_value
        );
    }

    let strat = &report.rate_stratification;
    let _ = writeln!(
        s,
        "\nAccuracy by conversation rate (mean {:.2} messages/min)",
        strat.mean_messages_per_minute
    );
    for confidence in [Confidence::High, Confidence::Low] {
        let cell = |above| {
            let c = strat.cell(confidence, above);
            match c.accuracy {
                Some(a) => format!("{:>3} @ {:>6}", c.n, pct(a)),
                None => format!("{:>3} @ {:>6}", c.n, "-"),
            }
        };
        let _ = writeln!(
            s,
            "  {:<6} above: {}   below: {}",
            confidence.to_string(),
            cell(true),
            cell(false)
        );
    }
    for w in &report.warnings {
        let _ = writeln!(s, "warning: {w}");
    }
    s
}
