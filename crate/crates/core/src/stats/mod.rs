//! Forecast scoring against market odds.

mod distribution;
mod interval;
mod record;
mod tables;
mod wager;

pub use self::distribution::{poisson_binomial_pmf, poisson_binomial_tail};
pub use self::interval::{cohens_d_proportions, wilson_interval, WILSON_Z_95};
pub use self::record::{read_records, read_records_from, write_records, write_records_to, GameRecord};
pub use self::tables::{
    accuracy_table, stratify_by_rate, AccuracyRow, RateCell, RateStratification,
};
pub use self::wager::{
    simulate_ats, simulate_fade_low, simulate_moneyline, write_cumulative_profit, StrategyReport,
    Wager,
};
