use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use log::info;

use hyperchat_core::analyzer::{Analyzer, RemoteAnalyzer, RemoteConfig, StructuredAnalyzer};
use hyperchat_core::evaluate::{evaluate, write_report, EvaluateOptions, Strategy};
use hyperchat_core::fixtures::{generate_games, read_games, read_roster, write_games, write_roster};
use hyperchat_core::persona::default_roster;
use hyperchat_core::replication::{render_summary, replicate};
use hyperchat_core::session::{AnalyzerKind, SessionConfig};
use hyperchat_core::simulate::{simulate_games, write_outputs};
use hyperchat_core::stats::{read_records, write_records, Wager};

#[derive(Parser)]
#[command(name = "hyperchat", version, about = "Swarm deliberation simulator and forecast scoring")]
struct Cli {
    /// Log progress (repeat for debug output).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one deliberation per game and write transcripts, trajectories and records.
    Simulate {
        /// TOML session config; every key is optional.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        games: PathBuf,
        /// Roster CSV; the built-in 25-fan roster when omitted.
        #[arg(long)]
        roster: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum)]
        analyzer: Option<AnalyzerArg>,
        /// Worker threads; results do not depend on this.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Score a record CSV: accuracy, intervals, effect size and wager backtests.
    Evaluate {
        #[arg(long)]
        records: PathBuf,
        #[arg(long, default_value_t = 100.0)]
        stake: f64,
        #[arg(long, default_value_t = 0.0)]
        vig: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "moneyline,ats,fade")]
        strategies: Vec<String>,
        /// Flat implied probability for every fade bet.
        #[arg(long)]
        fade_prob: Option<f64>,
    },
    /// Write the 59-game replication records and their evaluation.
    Replicate {
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic games fixture with fair-odds outcomes.
    GenerateGames {
        #[arg(long, default_value_t = 4)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the built-in roster as CSV.
    DefaultRoster {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum AnalyzerArg {
    Structured,
    Remote,
}

/// Failure classes with stable exit codes.
enum Failure {
    Input(anyhow::Error),
    Config(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Config(_) => 3,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Input(e) | Failure::Config(e) => e,
        }
    }
}

type CmdResult = Result<(), Failure>;

fn input<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Input(e.into())
}

fn config_err<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Config(e.into())
}

fn create_dir(path: &Path) -> CmdResult {
    fs::create_dir_all(path)
        .with_context(|| format!("cannot create {}", path.display()))
        .map_err(input)
}

fn load_config(path: Option<&Path>) -> Result<SessionConfig, Failure> {
    let Some(path) = path else {
        return Ok(SessionConfig::default());
    };
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))
        .map_err(config_err)?;
    toml::from_str(&text)
        .with_context(|| format!("invalid config {}", path.display()))
        .map_err(config_err)
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    config: Option<&Path>,
    games: &Path,
    roster: Option<&Path>,
    out: &Path,
    seed: u64,
    analyzer: Option<AnalyzerArg>,
    threads: Option<usize>,
) -> CmdResult {
    let mut session = load_config(config)?;
    session.seed = seed;
    if let Some(a) = analyzer {
        session.analyzer = match a {
            AnalyzerArg::Structured => AnalyzerKind::Structured,
            AnalyzerArg::Remote => AnalyzerKind::Remote,
        };
    }
    session.validate().map_err(config_err)?;

    let analyzer: Box<dyn Analyzer> = match session.analyzer {
        AnalyzerKind::Structured => Box::new(StructuredAnalyzer),
        AnalyzerKind::Remote => {
            let remote = RemoteConfig::from_env()
                .and_then(RemoteAnalyzer::new)
                .context("remote analyzer")
                .map_err(config_err)?;
            Box::new(remote)
        }
    };

    let games = read_games(games)
        .with_context(|| format!("games fixture {}", games.display()))
        .map_err(input)?;
    let roster = match roster {
        Some(path) => read_roster(path)
            .with_context(|| format!("roster {}", path.display()))
            .map_err(input)?,
        None => default_roster(),
    };
    let threads = threads.unwrap_or_else(|| {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    });
    info!("simulating {} games with {} participants", games.len(), roster.len());
    let runs = simulate_games(&games, &session, &roster, analyzer.as_ref(), threads)
        .context("simulation failed")
        .map_err(input)?;
    for run in &runs {
        for w in &run.outcome.warnings {
            log::debug!("{} tick {}: {}", run.game.game_id, w.tick, w.message);
        }
    }
    create_dir(out)?;
    write_outputs(out, &runs)
        .with_context(|| format!("cannot write outputs to {}", out.display()))
        .map_err(input)?;
    let favorites = runs
        .iter()
        .filter(|r| r.record.pick == r.game.market_favorite())
        .count();
    println!(
        "{} games simulated; {} picks were market favorites; outputs in {}",
        runs.len(),
        favorites,
        out.display()
    );
    Ok(())
}

fn cmd_evaluate(
    records: &Path,
    stake: f64,
    vig: f64,
    out: &Path,
    strategies: &[String],
    fade_prob: Option<f64>,
) -> CmdResult {
    let strategies = strategies
        .iter()
        .map(|s| s.parse::<Strategy>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(input)?;
    let wager = Wager { stake, vig };
    wager.validate().map_err(input)?;
    let records = read_records(records)
        .with_context(|| format!("records {}", records.display()))
        .map_err(input)?;
    if records.is_empty() {
        return Err(input(anyhow!("records file has no rows")));
    }
    let options = EvaluateOptions {
        wager,
        strategies,
        fade_prob,
    };
    let report = evaluate(&records, &options).map_err(input)?;
    for w in &report.warnings {
        log::warn!("{w}");
    }
    write_report(out, &report)
        .with_context(|| format!("cannot write report to {}", out.display()))
        .map_err(input)?;
    print!("{}", render_summary(&report));
    Ok(())
}

fn cmd_replicate(out: &Path) -> CmdResult {
    let (fixture, report) = replicate().map_err(input)?;
    create_dir(out)?;
    let fail = |e: hyperchat_core::Error| input(anyhow!(e).context(format!("cannot write to {}", out.display())));
    write_records(&out.join("replication_records.csv"), &fixture.records).map_err(fail)?;
    write_report(out, &report).map_err(fail)?;
    let summary = render_summary(&report);
    fs::write(out.join("summary.txt"), &summary)
        .context("cannot write summary")
        .map_err(input)?;
    print!("{summary}");
    Ok(())
}

fn run(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Simulate {
            config,
            games,
            roster,
            out,
            seed,
            analyzer,
            threads,
        } => cmd_simulate(
            config.as_deref(),
            &games,
            roster.as_deref(),
            &out,
            seed,
            analyzer,
            threads,
        ),
        Command::Evaluate {
            records,
            stake,
            vig,
            out,
            strategies,
            fade_prob,
        } => cmd_evaluate(&records, stake, vig, &out, &strategies, fade_prob),
        Command::Replicate { out } => cmd_replicate(&out),
        Command::GenerateGames { count, seed, out } => {
            if count == 0 {
                return Err(input(anyhow!("--count must be positive")));
            }
            write_games(&out, &generate_games(count, seed))
                .with_context(|| format!("cannot write {}", out.display()))
                .map_err(input)
        }
        Command::DefaultRoster { out } => write_roster(&out, &default_roster())
            .with_context(|| format!("cannot write {}", out.display()))
            .map_err(input),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}
