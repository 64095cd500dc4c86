//! Batch simulation over a games fixture.

use std::fs;
use std::io::BufWriter;
use std::path::Path;
use std::thread;

use rand_distr::{Distribution, StandardNormal};

use crate::analyzer::Analyzer;
use crate::belief::{write_forecasts, write_trajectory};
use crate::error::{Error, Result};
use crate::fixtures::GameSpec;
use crate::persona::RosterMember;
use crate::rng;
use crate::session::{run_question, write_transcript, QuestionOutcome, SessionConfig};
use crate::stats::{write_records, GameRecord};
use crate::surrogate::write_deliveries;

pub fn game_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add(index as u64)
}

#[derive(Debug, Clone)]
pub struct GameRun {
    pub game: GameSpec,
    pub seed: u64,
    pub outcome: QuestionOutcome,
    pub record: GameRecord,
}

/// Runs the game at position `index` with seed `config.seed + index`.
pub fn simulate_game(
    game: &GameSpec,
    index: usize,
    config: &SessionConfig,
    roster: &[RosterMember],
    analyzer: &dyn Analyzer,
) -> Result<GameRun> {
    let seed = game_seed(config.seed, index);
    let tilt: f64 = StandardNormal.sample(&mut rng::stream(seed, "crowd_tilt"));
    let context = game.context(config.prior_herding, tilt);
    let spec = game.question(config.duration_ticks);
    let game_config = SessionConfig {
        seed,
        ..config.clone()
    };
    let outcome = run_question(&spec, &context, &game_config, roster, analyzer)?;
    let record = game.record(&outcome.forecast);
    Ok(GameRun {
        game: game.clone(),
        seed,
        outcome,
        record,
    })
}

/// Runs every game, spread over `threads` workers. Results come back in
/// fixture order and do not depend on the thread count.
pub fn simulate_games(
    games: &[GameSpec],
    config: &SessionConfig,
    roster: &[RosterMember],
    analyzer: &dyn Analyzer,
    threads: usize,
) -> Result<Vec<GameRun>> {
    if games.is_empty() {
        return Err(Error::EmptyInput("games fixture".into()));
    }
    if roster.is_empty() {
        return Err(Error::NoParticipants);
    }
    let threads = threads.clamp(1, games.len());
    let chunk = games.len().div_ceil(threads);
    let results: Vec<Result<Vec<GameRun>>> = thread::scope(|scope| {
        let handles: Vec<_> = games
            .chunks(chunk)
            .enumerate()
            .map(|(c, slice)| {
                scope.spawn(move || {
                    slice
                        .iter()
                        .enumerate()
                        .map(|(j, g)| simulate_game(g, c * chunk + j, config, roster, analyzer))
                        .collect::<Result<Vec<_>>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("simulation worker panicked"))
            .collect()
    });
    let mut runs = Vec::with_capacity(games.len());
    for r in results {
        runs.extend(r?);
    }
    Ok(runs)
}

/// Writes `transcripts/`, `trajectories/`, `deliveries/`, `forecasts.csv`
/// and `records.csv` under `out`.
pub fn write_outputs(out: &Path, runs: &[GameRun]) -> Result<()> {
    for dir in ["transcripts", "trajectories", "deliveries"] {
        fs::create_dir_all(out.join(dir))?;
    }
    for run in runs {
        let id = &run.game.game_id;
        let file = |dir: &str, ext: &str| -> Result<BufWriter<fs::File>> {
            Ok(BufWriter::new(fs::File::create(out.join(dir).join(format!("{id}.{ext}")))?))
        };
        write_transcript(file("transcripts", "jsonl")?, &run.outcome.transcript)?;
        write_trajectory(file("trajectories", "csv")?, &run.outcome.trajectory)?;
        write_deliveries(file("deliveries", "jsonl")?, &run.outcome.deliveries)?;
    }
    let forecasts: Vec<_> = runs.iter().map(|r| r.outcome.forecast.clone()).collect();
    write_forecasts(BufWriter::new(fs::File::create(out.join("forecasts.csv"))?), &forecasts)?;
    let records: Vec<_> = runs.iter().map(|r| r.record.clone()).collect();
    write_records(&out.join("records.csv"), &records)?;
    Ok(())
}
