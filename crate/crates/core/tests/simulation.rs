use hyperchat_core::analyzer::StructuredAnalyzer;
use hyperchat_core::belief::{aggregate, classify, CollectiveEstimate};
use hyperchat_core::fixtures::generate_games;
use hyperchat_core::persona::{
    argument_pool, default_roster, Argument, GameContext, ParticipantAgent, Persona, RosterMember,
};
use hyperchat_core::session::{
    message_rate, run_question, write_transcript, Author, Participant, QuestionSpec, SessionConfig,
};
use hyperchat_core::simulate::{simulate_games, write_outputs};
use hyperchat_core::Side;

fn spec(duration: u32) -> QuestionSpec {
    let mut q = QuestionSpec::new("g1", "Royals", "Phillies", Side::B);
    q.duration_ticks = duration;
    q
}

fn persona(id: &str, bias: f64, openness: f64, chattiness: f64, pool: Vec<Argument>) -> Persona {
    Persona {
        persona_id: id.into(),
        favorite_bias: bias,
        openness,
        chattiness,
        prior_margin_scale: 2.0,
        argument_pool_ref: "custom".into(),
        argument_pool: pool,
    }
}

fn member(id: &str, persona: Persona) -> RosterMember {
    RosterMember {
        participant: Participant { participant_id: id.into(), persona_ref: Some(persona.persona_id.clone()) },
        persona,
    }
}

fn pro_a_pool() -> Vec<Argument> {
    argument_pool("pitching+offense+situational+analytics+injuries")
        .unwrap()
        .into_iter()
        .filter(|a| a.stance == Side::A)
        .collect()
}

#[test]
fn same_seed_gives_identical_bytes() {
    let roster = default_roster();
    let mut context = GameContext::new("g1", Side::B, 0.57);
    context.herding = 0.9;
    context.crowd_tilt = -0.4;
    let config = SessionConfig { seed: 42, ..SessionConfig::default() };
    let run = || {
        let out = run_question(&spec(300), &context, &config, &roster, &StructuredAnalyzer).unwrap();
        let mut bytes = Vec::new();
        write_transcript(&mut bytes, &out.transcript).unwrap();
        (bytes, out)
    };
    let (a_bytes, a) = run();
    let (b_bytes, b) = run();
    assert!(!a.transcript.is_empty());
    assert_eq!(a_bytes, b_bytes);
    assert_eq!(a.forecast, b.forecast);
    assert_eq!(a.trajectory, b.trajectory);
    assert_eq!(a.deliveries, b.deliveries);

    let other = run_question(
        &spec(300),
        &context,
        &SessionConfig { seed: 43, ..config.clone() },
        &roster,
        &StructuredAnalyzer,
    )
    .unwrap();
    assert_ne!(other.transcript, a.transcript);
}

#[test]
fn trajectory_has_one_estimate_per_tick_boundary() {
    let out = run_question(
        &spec(37),
        &GameContext::new("g1", Side::A, 0.6),
        &SessionConfig::default(),
        &default_roster(),
        &StructuredAnalyzer,
    )
    .unwrap();
    assert_eq!(out.trajectory.len(), 38);
    for (t, e) in out.trajectory.iter().enumerate() {
        assert_eq!(e.tick as usize, t);
        assert_eq!(e.n_participants, 25);
    }
    assert_eq!(out.subgroups.len(), 5);
    let last = out.trajectory.last().unwrap();
    assert_eq!(out.forecast.final_collective_margin, last.collective_margin);
    assert_eq!(out.forecast.predicted_margin, last.collective_margin.abs());
    for d in &out.deliveries {
        assert_ne!(d.source, d.target);
    }
    for u in &out.transcript {
        assert!((1..=37).contains(&u.tick));
    }
}

#[test]
fn mute_room_forecasts_its_priors() {
    let roster: Vec<RosterMember> = default_roster()
        .into_iter()
        .map(|mut m| {
            m.persona.chattiness = 0.0;
            m
        })
        .collect();
    let context = GameContext::new("g1", Side::A, 0.62);
    let config = SessionConfig { seed: 9, ..SessionConfig::default() };
    let out = run_question(&spec(1), &context, &config, &roster, &StructuredAnalyzer).unwrap();
    assert!(out.transcript.is_empty());
    assert_eq!(out.forecast.messages_per_minute, 0.0);

    let priors: Vec<_> = roster
        .iter()
        .map(|m| {
            ParticipantAgent::new(&m.participant.participant_id, "x", m.persona.clone(), &context, 9).belief
        })
        .collect();
    let expected = aggregate(&priors, 0).unwrap();
    assert_eq!(out.trajectory[1].collective_margin, expected.collective_margin);
    let c = classify(&expected, Side::B);
    assert_eq!(out.forecast.pick, c.pick);
    assert_eq!(out.forecast.confidence, c.confidence);
    assert_eq!(out.forecast.predicted_margin, c.predicted_margin);
}

#[test]
fn message_rate_counts_participants_only() {
    let out = run_question(
        &spec(300),
        &GameContext::new("g1", Side::A, 0.6),
        &SessionConfig::default(),
        &default_roster(),
        &StructuredAnalyzer,
    )
    .unwrap();
    let humans = out
        .transcript
        .iter()
        .filter(|u| matches!(u.author, Author::Participant(_)))
        .count();
    assert!(humans < out.transcript.len(), "surrogates should have spoken");
    assert!((out.forecast.messages_per_minute - humans as f64 / 5.0).abs() < 1e-9);
    let with = message_rate(&out.transcript, &spec(300), 1.0, true);
    assert!((with - out.transcript.len() as f64 / 5.0).abs() < 1e-9);
}

fn mean_trajectory(runs: &[Vec<CollectiveEstimate>]) -> Vec<f64> {
    let len = runs[0].len();
    (0..len)
        .map(|t| runs.iter().map(|r| r[t].collective_margin).sum::<f64>() / runs.len() as f64)
        .collect()
}

#[test]
fn one_persuader_pulls_the_room_toward_a() {
    // 21 undecided-ish listeners with nothing to argue, one chatty pro-A voice
    let mut roster: Vec<RosterMember> = (1..=21)
        .map(|i| member(&format!("l{i:02}"), persona("listener", 0.5, 0.8, 4.0, Vec::new())))
        .collect();
    roster.push(member("zz-persuader", persona("persuader", 1.0, 0.0, 30.0, pro_a_pool())));

    let mut runs = Vec::new();
    for seed in 0..12 {
        let context = GameContext::new("g1", Side::A, 0.55);
        let config = SessionConfig { seed, ..SessionConfig::default() };
        let out = run_question(&spec(300), &context, &config, &roster, &StructuredAnalyzer).unwrap();
        assert_eq!(out.subgroups.len(), 4);
        runs.push(out.trajectory);
    }
    let mean = mean_trajectory(&runs);
    let window = |from: usize| mean[from..from + 50].iter().sum::<f64>() / 50.0;
    assert!(window(250) > window(0) + 0.5, "start {} end {}", window(0), window(250));
    // support for A grows in most sessions
    let grew = runs
        .iter()
        .filter(|r| r.last().unwrap().support_a > r[0].support_a)
        .count();
    assert!(grew >= 10, "{grew} of 12");
}

#[test]
fn all_pro_a_pools_never_lose_ground_in_expectation() {
    let roster: Vec<RosterMember> = default_roster()
        .into_iter()
        .map(|mut m| {
            m.persona.argument_pool = pro_a_pool();
            m.persona.favorite_bias = 0.5;
            m
        })
        .collect();
    let n = 40;
    let runs: Vec<Vec<CollectiveEstimate>> = (0..n)
        .map(|seed| {
            let config = SessionConfig { seed, ..SessionConfig::default() };
            run_question(&spec(150), &GameContext::new("g", Side::B, 0.55), &config, &roster, &StructuredAnalyzer)
                .unwrap()
                .trajectory
        })
        .collect();
    // between checkpoints every 15 ticks, the mean change is not
    // significantly negative at the 95% level
    for t in (0..135).step_by(15) {
        let diffs: Vec<f64> = runs.iter().map(|r| r[t + 15].collective_margin - r[t].collective_margin).collect();
        let mean = diffs.iter().sum::<f64>() / n as f64;
        let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let se = (var / n as f64).sqrt();
        assert!(mean >= -1.96 * se, "tick {t}: mean change {mean}, se {se}");
    }
    let mean = mean_trajectory(&runs);
    assert!(mean[150] > mean[0]);
}

#[test]
fn batch_results_do_not_depend_on_thread_count() {
    let games = generate_games(4, 21);
    let config = SessionConfig { seed: 77, duration_ticks: 120, ..SessionConfig::default() };
    let roster = default_roster();
    let one = simulate_games(&games, &config, &roster, &StructuredAnalyzer, 1).unwrap();
    let three = simulate_games(&games, &config, &roster, &StructuredAnalyzer, 3).unwrap();
    assert_eq!(one.len(), 4);
    for (a, b) in one.iter().zip(&three) {
        assert_eq!(a.seed, b.seed);
        assert_eq!(a.record, b.record);
        assert_eq!(a.outcome.transcript, b.outcome.transcript);
    }
    assert_eq!(one[2].seed, 79);

    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    write_outputs(dir_a.path(), &one).unwrap();
    write_outputs(dir_b.path(), &three).unwrap();
    for rel in ["records.csv", "forecasts.csv", "transcripts/game003.jsonl", "trajectories/game001.csv", "deliveries/game004.jsonl"] {
        let a = std::fs::read(dir_a.path().join(rel)).unwrap();
        assert_eq!(a, std::fs::read(dir_b.path().join(rel)).unwrap(), "{rel}");
    }
    let records = hyperchat_core::stats::read_records(&dir_a.path().join("records.csv")).unwrap();
    assert_eq!(records, one.iter().map(|r| r.record.clone()).collect::<Vec<_>>());
}
