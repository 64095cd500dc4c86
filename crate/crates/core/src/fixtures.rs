//! Games and roster fixture files.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::belief::Forecast;
use crate::error::{Error, Result};
use crate::persona::{argument_pool, GameContext, Persona, RosterMember};
use crate::rng;
use crate::session::{Participant, QuestionSpec};
use crate::stats::GameRecord;
use crate::types::Side;

pub const GAME_COLUMNS: [&str; 12] = [
    "game_id",
    "team_a",
    "team_b",
    "home_side",
    "pitcher_a",
    "pitcher_b",
    "prob_a",
    "ats_prob_a",
    "ats_prob_b",
    "ats_line_runs",
    "winner",
    "actual_margin",
];

pub const ROSTER_COLUMNS: [&str; 6] = [
    "persona_id",
    "favorite_bias",
    "openness",
    "chattiness",
    "prior_margin_scale",
    "argument_pool_ref",
];

/// One game from the games fixture: matchup, market prices, final score.
///
/// `crowd_tilt` is an optional trailing column. When it is missing the
/// simulator draws one from the game seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameSpec {
    pub game_id: String,
    pub team_a: String,
    pub team_b: String,
    pub home_side: Side,
    #[serde(default)]
    pub pitcher_a: String,
    #[serde(default)]
    pub pitcher_b: String,
    /// Market-implied probability that A wins.
    pub prob_a: f64,
    pub ats_prob_a: f64,
    pub ats_prob_b: f64,
    pub ats_line_runs: f64,
    pub winner: Side,
    pub actual_margin: u32,
    #[serde(default)]
    pub crowd_tilt: Option<f64>,
}

impl GameSpec {
    pub fn validate(&self, row: usize) -> Result<()> {
        let bad = |column: &str, message: String| Error::InvalidRecord {
            row,
            column: column.to_string(),
            message,
        };
        if self.game_id.trim().is_empty() {
            return Err(bad("game_id", "empty game id".into()));
        }
        if self.team_a == self.team_b {
            return Err(bad("team_b", format!("same team as team_a: {}", self.team_b)));
        }
        for (column, p) in [
            ("prob_a", self.prob_a),
            ("ats_prob_a", self.ats_prob_a),
            ("ats_prob_b", self.ats_prob_b),
        ] {
            if !(p > 0.0 && p < 1.0) {
                return Err(bad(column, format!("{p} is not in (0, 1)")));
            }
        }
        if !(self.ats_line_runs.is_finite() && self.ats_line_runs > 0.0) {
            return Err(bad("ats_line_runs", "must be positive".into()));
        }
        if self.actual_margin == 0 {
            return Err(bad("actual_margin", "must be at least 1".into()));
        }
        if let Some(t) = self.crowd_tilt {
            if !t.is_finite() {
                return Err(bad("crowd_tilt", "must be finite".into()));
            }
        }
        Ok(())
    }

    pub fn market_favorite(&self) -> Side {
        if self.prob_a >= 0.5 {
            Side::A
        } else {
            Side::B
        }
    }

    pub fn prob(&self, side: Side) -> f64 {
        match side {
            Side::A => self.prob_a,
            Side::B => 1.0 - self.prob_a,
        }
    }

    pub fn ats_prob(&self, side: Side) -> f64 {
        match side {
            Side::A => self.ats_prob_a,
            Side::B => self.ats_prob_b,
        }
    }

    pub fn question(&self, duration_ticks: u32) -> QuestionSpec {
        let mut q = QuestionSpec::new(&self.game_id, &self.team_a, &self.team_b, self.home_side);
        q.pitcher_a = self.pitcher_a.clone();
        q.pitcher_b = self.pitcher_b.clone();
        q.duration_ticks = duration_ticks;
        q
    }

    /// Market context for the priors. `crowd_tilt` comes from the file when
    /// present, otherwise from the `fallback_tilt` draw.
    pub fn context(&self, herding: f64, fallback_tilt: f64) -> GameContext {
        let favorite = self.market_favorite();
        let mut ctx = GameContext::new(&self.game_id, favorite, self.prob(favorite));
        ctx.herding = herding;
        ctx.crowd_tilt = self.crowd_tilt.unwrap_or(fallback_tilt);
        ctx
    }

    /// Joins a forecast for this game with its prices and outcome.
    pub fn record(&self, forecast: &Forecast) -> GameRecord {
        GameRecord {
            game_id: self.game_id.clone(),
            pick: forecast.pick,
            predicted_margin: forecast.predicted_margin,
            confidence: forecast.confidence,
            messages_per_minute: forecast.messages_per_minute,
            vegas_prob_pick: self.prob(forecast.pick),
            ats_prob_pick: self.ats_prob(forecast.pick),
            ats_line_runs: self.ats_line_runs,
            winner: self.winner,
            actual_margin: self.actual_margin,
        }
    }
}

/// One data row with typed, column-named field access.
struct Row<'a> {
    number: usize,
    headers: &'a csv::StringRecord,
    record: csv::StringRecord,
}

impl Row<'_> {
    fn raw(&self, column: &str) -> Option<&str> {
        let i = self.headers.iter().position(|h| h == column)?;
        self.record.get(i).map(str::trim)
    }

    fn bad(&self, column: &str, message: String) -> Error {
        Error::InvalidRecord {
            row: self.number,
            column: column.to_string(),
            message,
        }
    }

    fn get<T: FromStr>(&self, column: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.raw(column).unwrap_or("");
        raw.parse()
            .map_err(|e: T::Err| self.bad(column, format!("cannot parse `{raw}`: {e}")))
    }

    /// Empty or absent cells read as `None`.
    fn opt<T: FromStr>(&self, column: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(column) {
            None | Some("") => Ok(None),
            Some(_) => self.get(column).map(Some),
        }
    }
}

fn read_rows<R: Read, T>(
    reader: R,
    required: &[&str],
    what: &str,
    mut parse: impl FnMut(&Row) -> Result<T>,
) -> Result<Vec<T>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    for column in required {
        if !headers.iter().any(|h| h == *column) {
            return Err(Error::MissingColumn(column.to_string()));
        }
    }
    let mut out = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = Row {
            number: i + 1,
            headers: &headers,
            record: record?,
        };
        out.push(parse(&row)?);
    }
    if out.is_empty() {
        return Err(Error::EmptyInput(what.to_string()));
    }
    Ok(out)
}

pub fn read_games_from<R: Read>(reader: R) -> Result<Vec<GameSpec>> {
    let mut seen = BTreeSet::new();
    read_rows(reader, &GAME_COLUMNS, "games fixture", |row| {
        let g = GameSpec {
            game_id: row.get("game_id")?,
            team_a: row.get("team_a")?,
            team_b: row.get("team_b")?,
            home_side: row.get("home_side")?,
            pitcher_a: row.get("pitcher_a")?,
            pitcher_b: row.get("pitcher_b")?,
            prob_a: row.get("prob_a")?,
            ats_prob_a: row.get("ats_prob_a")?,
            ats_prob_b: row.get("ats_prob_b")?,
            ats_line_runs: row.get("ats_line_runs")?,
            winner: row.get("winner")?,
            actual_margin: row.get("actual_margin")?,
            crowd_tilt: row.opt("crowd_tilt")?,
        };
        g.validate(row.number)?;
        if !seen.insert(g.game_id.clone()) {
            return Err(row.bad("game_id", format!("duplicate game id `{}`", g.game_id)));
        }
        Ok(g)
    })
}

pub fn read_games(path: &Path) -> Result<Vec<GameSpec>> {
    read_games_from(File::open(path)?)
}

pub fn write_games_to<W: Write>(writer: W, games: &[GameSpec]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for g in games {
        wtr.serialize(g)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_games(path: &Path, games: &[GameSpec]) -> Result<()> {
    write_games_to(File::create(path)?, games)
}

#[derive(Serialize)]
struct RosterRow<'a> {
    persona_id: &'a str,
    favorite_bias: f64,
    openness: f64,
    chattiness: f64,
    prior_margin_scale: f64,
    argument_pool_ref: &'a str,
}

/// Reads a roster CSV. Each row is one participant whose id is its
/// `persona_id`.
pub fn read_roster_from<R: Read>(reader: R) -> Result<Vec<RosterMember>> {
    let mut seen = BTreeSet::new();
    read_rows(reader, &ROSTER_COLUMNS, "roster", |row| {
        let persona_id: String = row.get("persona_id")?;
        if !seen.insert(persona_id.clone()) {
            return Err(row.bad("persona_id", format!("duplicate persona `{persona_id}`")));
        }
        let pool_ref: String = row.get("argument_pool_ref")?;
        let pool = argument_pool(&pool_ref)
            .ok_or_else(|| row.bad("argument_pool_ref", format!("unknown pool `{pool_ref}`")))?;
        let persona = Persona {
            persona_id: persona_id.clone(),
            favorite_bias: row.get("favorite_bias")?,
            openness: row.get("openness")?,
            chattiness: row.get("chattiness")?,
            prior_margin_scale: row.get("prior_margin_scale")?,
            argument_pool_ref: pool_ref,
            argument_pool: pool,
        };
        persona
            .validate()
            .map_err(|e| row.bad("persona_id", e.to_string()))?;
        Ok(RosterMember {
            participant: Participant {
                participant_id: persona_id.clone(),
                persona_ref: Some(persona_id),
            },
            persona,
        })
    })
}

pub fn read_roster(path: &Path) -> Result<Vec<RosterMember>> {
    read_roster_from(File::open(path)?)
}

pub fn write_roster_to<W: Write>(writer: W, roster: &[RosterMember]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for m in roster {
        let p = &m.persona;
        wtr.serialize(RosterRow {
            persona_id: &m.participant.participant_id,
            favorite_bias: p.favorite_bias,
            openness: p.openness,
            chattiness: p.chattiness,
            prior_margin_scale: p.prior_margin_scale,
            argument_pool_ref: &p.argument_pool_ref,
        })?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_roster(path: &Path, roster: &[RosterMember]) -> Result<()> {
    write_roster_to(File::create(path)?, roster)
}

const TEAMS: [&str; 30] = [
    "Diamondbacks", "Braves", "Orioles", "Red Sox", "Cubs", "White Sox", "Reds", "Guardians",
    "Rockies", "Tigers", "Astros", "Royals", "Angels", "Dodgers", "Marlins", "Brewers", "Twins",
    "Mets", "Yankees", "Athletics", "Phillies", "Pirates", "Padres", "Giants", "Mariners",
    "Cardinals", "Rays", "Rangers", "Blue Jays", "Nationals",
];

/// Synthetic games with outcomes drawn from the quoted prices, so the
/// market is fair by construction. `crowd_tilt` is left to the simulator.
pub fn generate_games(count: usize, seed: u64) -> Vec<GameSpec> {
    let mut rng = rng::stream(seed, "games");
    (0..count)
        .map(|i| {
            let a = rng.random_range(0..TEAMS.len());
            let b = (a + rng.random_range(1..TEAMS.len())) % TEAMS.len();
            let prob_a: f64 = (rng.random_range(0.35..0.65) * 1000.0_f64).round() / 1000.0;
            let winner = if rng.random::<f64>() < prob_a { Side::A } else { Side::B };
            // about 30% of MLB games are decided by one run
            let actual_margin = if rng.random::<f64>() < 0.3 {
                1
            } else {
                rng.random_range(2..=7)
            };
            let round3 = |x: f64| (x * 1000.0).round() / 1000.0;
            GameSpec {
                game_id: format!("game{:03}", i + 1),
                team_a: TEAMS[a].to_string(),
                team_b: TEAMS[b].to_string(),
                home_side: if rng.random::<bool>() { Side::A } else { Side::B },
                pitcher_a: String::new(),
                pitcher_b: String::new(),
                prob_a,
                ats_prob_a: round3(prob_a * 0.7),
                ats_prob_b: round3((1.0 - prob_a) * 0.7),
                ats_line_runs: 2.0,
                winner,
                actual_margin,
                crowd_tilt: None,
            }
        })
        .collect()
}
