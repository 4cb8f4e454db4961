//! Acceptance suite: one test per criterion, each printing a PASS line.
//! Everything runs against the deterministic scripted backend except the
//! final live smoke test, which is gated behind BELIEFBOX_LIVE_URL.
//!
//! The statistical oracles here are written independently of the library:
//! longhand textbook formulas plus numeric integration for tail
//! probabilities.

mod common;

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use beliefbox::backend::{BackendConfig, ChatBackend, HttpBackend, ScriptedBackend};
use beliefbox::dataset::{AporiaSample, Choice};
use beliefbox::debate::{
    rows_to_jsonl, run_debate, trajectory, transcript_rows, Agent, AgentRole, DebateConfig,
    DebateIds, DebateTask,
};
use beliefbox::experiment::{
    load_item_bank, run_bfi2, run_peer_pressure, run_persuasion, Bfi2Options, PeerDataset,
    PeerPressureOptions, PersuasionCondition, TraitName,
};
use beliefbox::model::{revise_strength, ArgumentativeForce, BeliefStrength, OpenMindedness};
use beliefbox::predictor::{train, BeliefUpdateExample, ForestParams, RegressorKind, TrainOptions};
use beliefbox::prompts::{parse_choice, parse_likert, parse_yes_no};
use beliefbox::stats::{f_test_univariate, pearson_r};

// ---------------------------------------------------------------------------
// independent oracles
// ---------------------------------------------------------------------------

fn oracle_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mut sum_x = 0.0;
    let mut sum_y = 0.0;
    for i in 0..x.len() {
        sum_x += x[i];
        sum_y += y[i];
    }
    let mx = sum_x / n;
    let my = sum_y / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..x.len() {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    sxy / (sxx * syy).sqrt()
}

fn oracle_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, eps: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let coarse = (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b));
    let left = (m - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + m)) + f(m));
    let right = (b - m) / 6.0 * (f(m) + 4.0 * f(0.5 * (m + b)) + f(b));
    let fine = left + right;
    if depth == 0 || (fine - coarse).abs() <= 15.0 * eps {
        fine + (fine - coarse) / 15.0
    } else {
        oracle_simpson(f, a, m, eps / 2.0, depth - 1)
            + oracle_simpson(f, m, b, eps / 2.0, depth - 1)
    }
}

/// Regularized incomplete beta by integrating t = sin^2(theta), which keeps
/// the integrand finite for a, b >= 1/2.
fn oracle_inc_beta(x: f64, a: f64, b: f64) -> f64 {
    let integrand =
        move |theta: f64| theta.sin().powf(2.0 * a - 1.0) * theta.cos().powf(2.0 * b - 1.0);
    let whole = oracle_simpson(&integrand, 0.0, std::f64::consts::FRAC_PI_2, 1e-14, 44);
    let part = oracle_simpson(&integrand, 0.0, x.sqrt().asin(), 1e-14, 44);
    part / whole
}

fn oracle_f_survival(f: f64, d1: f64, d2: f64) -> f64 {
    oracle_inc_beta(d2 / (d2 + d1 * f), 0.5 * d2, 0.5 * d1)
}

fn synthetic_aporia(n: usize) -> Vec<AporiaSample> {
    (0..n)
        .map(|i| {
            let mut sample = common::canonical_aporia();
            sample.scenario = format!("{} (case {i})", sample.scenario);
            sample
        })
        .collect()
}

// ---------------------------------------------------------------------------
// criterion 1: Eq-style revision property suite
// ---------------------------------------------------------------------------

#[test]
fn criterion_1_revision_property_suite() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..10_000 {
        let prev = BeliefStrength::new(rng.random_range(0..=5)).unwrap();
        let delta = rng.random_range(-100.0..100.0);
        let lambda: f64 = rng.random_range(0.0..=1.0);

        // range
        let out = revise_strength(prev, ArgumentativeForce::new(delta).unwrap(), lambda).unwrap();
        assert!(out.value() <= 5);

        // identity at zero force and zero openness
        let zero_force = ArgumentativeForce::new(0.0).unwrap();
        assert_eq!(revise_strength(prev, zero_force, lambda).unwrap(), prev);
        let any_force = ArgumentativeForce::new(delta).unwrap();
        assert_eq!(revise_strength(prev, any_force, 0.0).unwrap(), prev);

        // monotone in force
        let other = rng.random_range(-100.0..100.0);
        let (lo, hi) = if delta <= other {
            (delta, other)
        } else {
            (other, delta)
        };
        let lo_out = revise_strength(prev, ArgumentativeForce::new(lo).unwrap(), lambda).unwrap();
        let hi_out = revise_strength(prev, ArgumentativeForce::new(hi).unwrap(), lambda).unwrap();
        assert!(lo_out <= hi_out);
    }
    let elapsed = started.elapsed();
    assert!(
        elapsed < Duration::from_secs(1),
        "property suite took {elapsed:?}"
    );
    println!("criterion 1: PASS - 10,000 revision property cases in {elapsed:?}");
}

// ---------------------------------------------------------------------------
// criterion 2: scripted end-to-end persuasion
// ---------------------------------------------------------------------------

fn persuasion_script() -> Arc<dyn ChatBackend> {
    let mut queues = BTreeMap::new();
    queues.insert(
        "Persuading agent".to_string(),
        vec![
            "Nothing shows intent.".into(),
            "5".into(),
            "The rule turns on knowledge.".into(),
            "5".into(),
            "An oversight is not misconduct.".into(),
            "5".into(),
            "The aligned reading stands.".into(),
            "5".into(),
        ],
    );
    queues.insert(
        "Target agent".to_string(),
        vec![
            "I disagree strongly.".into(),
            "5".into(),
            "Your point lands somewhat.".into(),
            "4".into(),
            "I concede the knowledge element.".into(),
            "3".into(),
            "Little of my objection remains.".into(),
            "2".into(),
        ],
    );
    Arc::new(ScriptedBackend::per_agent(queues))
}

#[test]
fn criterion_2_scripted_persuasion_end_to_end() {
    let started = Instant::now();
    let samples = synthetic_aporia(1);
    let config = DebateConfig {
        rounds: 4,
        runs: 1,
        seed: 7,
        ..DebateConfig::default()
    };
    let run = || {
        let backend = persuasion_script();
        run_persuasion(&backend, &samples, &[PersuasionCondition::P5], &config, 1).unwrap()
    };
    let first = run();
    let second = run();

    assert_eq!(first.result.rows[0].values[0], 3.5);
    let speeches = first
        .rows
        .iter()
        .filter(|r| r.reassessed_strength.is_none())
        .count();
    let reassessments = first
        .rows
        .iter()
        .filter(|r| r.reassessed_strength.is_some())
        .count();
    assert_eq!(speeches, 8);
    assert_eq!(reassessments, 8);

    // byte-identical across two runs with the same seed
    assert_eq!(
        rows_to_jsonl(&first.rows).unwrap(),
        rows_to_jsonl(&second.rows).unwrap()
    );
    assert_eq!(first.result.to_csv(), second.result.to_csv());

    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    println!(
        "criterion 2: PASS - mean belief score 3.5, 8 speeches + 8 reassessments, byte-identical reruns in {elapsed:?}"
    );
}

// ---------------------------------------------------------------------------
// criterion 3: scripted peer-pressure matrix vs textbook oracle
// ---------------------------------------------------------------------------

#[test]
fn criterion_3_scripted_peer_pressure_matrix() {
    let backend: Arc<dyn ChatBackend> = Arc::new(ScriptedBackend::from_rule(|agent, _| {
        let size: usize = agent
            .split("-g")
            .nth(1)
            .and_then(|s| s.split('-').next())
            .and_then(|s| s.parse().ok())
            .unwrap();
        let is_target = agent.ends_with(&format!("/Agent {}", size + 1));
        Some(if is_target {
            if size >= 3 {
                "The group is right; I endorse B. Confidence 2.".into()
            } else {
                "I hold my ground with A. Confidence 5.".into()
            }
        } else {
            "We argue for B. Confidence 5.".into()
        })
    }));

    let output = run_peer_pressure(
        &backend,
        &PeerDataset::Aporia(synthetic_aporia(10)),
        &PeerPressureOptions::default(),
        &DebateConfig {
            rounds: 4,
            runs: 5,
            seed: 3,
            ..DebateConfig::default()
        },
        4,
    )
    .unwrap();

    let rates: Vec<f64> = output.result.rows.iter().map(|r| r.values[0]).collect();
    assert_eq!(rates, vec![0.0, 0.0, 1.0, 1.0]);
    assert!(output.result.rows.iter().all(|r| r.n == 50));

    // oracle computed straight from the pooled outcome pairs
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (size, rate) in [1.0, 2.0, 3.0, 4.0].iter().zip(&rates) {
        for _ in 0..50 {
            x.push(*size);
            y.push(*rate);
        }
    }
    let oracle_r = oracle_pearson(&x, &y);
    let n = x.len() as f64;
    let oracle_f = oracle_r * oracle_r * (n - 2.0) / (1.0 - oracle_r * oracle_r);
    let oracle_p = oracle_f_survival(oracle_f, 1.0, n - 2.0);

    let report = output.result.regression.expect("statistics defined");
    assert!(
        (report.r - oracle_r).abs() < 1e-9,
        "r {} vs {}",
        report.r,
        oracle_r
    );
    assert!(report.r > 0.0);
    assert!(
        (report.f - oracle_f).abs() / oracle_f < 1e-9,
        "F {} vs {}",
        report.f,
        oracle_f
    );
    assert!(
        (report.p - oracle_p).abs() < 1e-9,
        "p {} vs {}",
        report.p,
        oracle_p
    );
    println!(
        "criterion 3: PASS - rates {{0, 0, 1, 1}}, r={:.6}, p matches the oracle to 1e-9",
        report.r
    );
}

// ---------------------------------------------------------------------------
// criterion 4: statistics oracle suite
// ---------------------------------------------------------------------------

#[test]
fn criterion_4_statistics_oracle_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut checked = 0;
    while checked < 12 {
        let n = rng.random_range(5..=50);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-4.0..6.0)).collect();
        let slope = rng.random_range(-2.0..2.0);
        let y: Vec<f64> = x
            .iter()
            .map(|v| slope * v + rng.random_range(-4.0..4.0))
            .collect();

        let r = pearson_r(&x, &y).unwrap();
        let oracle_r = oracle_pearson(&x, &y);
        assert!((r - oracle_r).abs() < 1e-8);

        let report = f_test_univariate(&x, &y).unwrap();
        if report.perfect_fit {
            continue;
        }
        let nf = n as f64;
        let oracle_f = oracle_r * oracle_r * (nf - 2.0) / (1.0 - oracle_r * oracle_r);
        let oracle_p = oracle_f_survival(oracle_f, 1.0, nf - 2.0);
        assert!((report.f - oracle_f).abs() <= 1e-8 * oracle_f.max(1.0));
        assert!(
            (report.p - oracle_p).abs() < 1e-8,
            "n={n}: p {} vs oracle {}",
            report.p,
            oracle_p
        );
        checked += 1;
    }

    // degenerate inputs
    assert!(matches!(
        pearson_r(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]),
        Err(beliefbox::Error::UndefinedStatistic(_))
    ));
    assert!(matches!(
        pearson_r(&[1.0, 2.0, 3.0], &[7.0, 7.0, 7.0]),
        Err(beliefbox::Error::UndefinedStatistic(_))
    ));
    assert!(f_test_univariate(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
    let x = [1.0, 2.0, 3.0, 4.0, 5.0];
    let y: Vec<f64> = x.iter().map(|v| -3.0 * v + 2.0).collect();
    let perfect = f_test_univariate(&x, &y).unwrap();
    assert!(perfect.perfect_fit);
    assert_eq!(perfect.p, 0.0);

    println!("criterion 4: PASS - {checked} random datasets match the integration oracle to 1e-8");
}

// ---------------------------------------------------------------------------
// criterion 5: BFI-2 scorer on the synthetic item bank
// ---------------------------------------------------------------------------

#[test]
fn criterion_5_bfi2_scorer() {
    let items = load_item_bank(common::data_dir().join("bfi2_items_synthetic.json")).unwrap();
    let options = Bfi2Options {
        levels: vec![1, 2, 3, 4, 5],
        runs: 3,
        traits: TraitName::ALL.to_vec(),
    };

    // all-3 responses: every trait exactly 50.0
    let backend: Arc<dyn ChatBackend> =
        Arc::new(ScriptedBackend::from_rule(|_, _| Some("3".into())));
    let out = run_bfi2(&backend, &items, &options).unwrap();
    for row in &out.result.rows {
        for v in &row.values {
            assert_eq!(*v, 50.0);
        }
    }

    // endpoint keying: 5 on forward items and 1 on reversed scores 100.0,
    // the mirror image scores 0.0
    let reverse_flags: Vec<bool> = items.iter().map(|i| i.reverse).collect();
    let flags = reverse_flags.clone();
    let backend: Arc<dyn ChatBackend> = Arc::new(ScriptedBackend::from_rule(move |_, round| {
        Some(if flags[round - 1] {
            "1".into()
        } else {
            "5".into()
        })
    }));
    let out = run_bfi2(&backend, &items, &options).unwrap();
    for row in &out.result.rows {
        for v in &row.values {
            assert_eq!(*v, 100.0);
        }
    }
    let flags = reverse_flags.clone();
    let backend: Arc<dyn ChatBackend> = Arc::new(ScriptedBackend::from_rule(move |_, round| {
        Some(if flags[round - 1] {
            "5".into()
        } else {
            "1".into()
        })
    }));
    let out = run_bfi2(&backend, &items, &options).unwrap();
    for row in &out.result.rows {
        for v in &row.values {
            assert_eq!(*v, 0.0);
        }
    }

    // reverse-key correctness: a uniform "5" answers forward items at 5 and
    // reversed items at keyed 1; with two of each per trait the mean is 3
    let backend: Arc<dyn ChatBackend> =
        Arc::new(ScriptedBackend::from_rule(|_, _| Some("5".into())));
    let out = run_bfi2(&backend, &items, &options).unwrap();
    for row in &out.result.rows {
        for v in &row.values {
            assert_eq!(*v, 50.0);
        }
    }

    println!("criterion 5: PASS - midpoint 50.0, endpoints 100.0/0.0, reverse keying verified");
}

// ---------------------------------------------------------------------------
// criterion 6: predictor on the synthetic oracle corpus
// ---------------------------------------------------------------------------

/// Oracle corpus: the update is +1 when "agree" is present, -2 when
/// "concede", else 0. The previous strength is drawn so that the next
/// strength is exactly uniform on {1..5}, which makes the constant-median
/// baseline enumerate to 1.2.
fn oracle_corpus(n: usize, seed: u64) -> Vec<BeliefUpdateExample> {
    const FILLERS: [&str; 24] = [
        "the",
        "debate",
        "continues",
        "about",
        "policy",
        "rule",
        "case",
        "point",
        "view",
        "argument",
        "holds",
        "still",
        "remains",
        "open",
        "while",
        "others",
        "respond",
        "quickly",
        "topic",
        "matter",
        "group",
        "round",
        "claim",
        "issue",
    ];
    const AGREE_PREV: [u8; 10] = [1, 1, 1, 2, 2, 2, 3, 3, 4, 4];
    const CONCEDE_PREV: [u8; 10] = [3, 3, 3, 3, 4, 4, 4, 5, 5, 5];
    const NONE_PREV: [u8; 10] = [1, 1, 4, 4, 4, 4, 5, 5, 5, 5];

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let kind = rng.random_range(0..3u8);
            let slot = rng.random_range(0..10usize);
            let (signal, update, prev) = match kind {
                0 => (Some("agree"), 1i8, AGREE_PREV[slot]),
                1 => (Some("concede"), -2, CONCEDE_PREV[slot]),
                _ => (None, 0, NONE_PREV[slot]),
            };
            let next = (i16::from(prev) + i16::from(update)) as u8;
            let mut words: Vec<&str> = (0..5)
                .map(|_| FILLERS[rng.random_range(0..FILLERS.len())])
                .collect();
            if let Some(s) = signal {
                let at = rng.random_range(0..=words.len());
                words.insert(at, s);
            }
            BeliefUpdateExample::new(words.join(" "), prev, next).unwrap()
        })
        .collect()
}

#[test]
fn criterion_6_predictor_on_oracle_corpus() {
    let started = Instant::now();
    let examples = oracle_corpus(2000, 606);

    // enumeration oracle for the baseline: next is uniform on {1..5}, so the
    // constant-3 predictor's expected MAE is (2+1+0+1+2)/5 = 1.2
    let enumerated_baseline = 1.2;

    let ridge_options = TrainOptions {
        seed: 606,
        ..TrainOptions::default()
    };
    let (_, ridge_report) = train(&examples, &ridge_options).unwrap();
    assert_eq!(
        (
            ridge_report.train_size,
            ridge_report.validation_size,
            ridge_report.test_size
        ),
        (1400, 200, 400)
    );
    assert!(
        ridge_report.test.mae <= 0.1,
        "ridge test MAE {}",
        ridge_report.test.mae
    );
    assert!(ridge_report.test.mae < ridge_report.test.baseline_mae);
    assert!(
        (ridge_report.test.baseline_mae - enumerated_baseline).abs() < 0.15,
        "baseline {} strays from the enumerated 1.2",
        ridge_report.test.baseline_mae
    );

    let forest_options = TrainOptions {
        seed: 606,
        regressor: RegressorKind::Forest,
        forest: ForestParams {
            trees: 100,
            seed: 606,
            ..ForestParams::default()
        },
        ..TrainOptions::default()
    };
    let (_, forest_report) = train(&examples, &forest_options).unwrap();
    assert!(
        forest_report.test.mae <= 0.1,
        "forest test MAE {}",
        forest_report.test.mae
    );
    assert!(forest_report.test.mae < forest_report.test.baseline_mae);

    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    println!(
        "criterion 6: PASS - ridge MAE {:.3}, forest MAE {:.3}, baseline {:.3} (enumerated 1.2) in {elapsed:?}",
        ridge_report.test.mae, forest_report.test.mae, ridge_report.test.baseline_mae
    );
}

// ---------------------------------------------------------------------------
// criterion 7: prompt golden files
// ---------------------------------------------------------------------------

#[test]
fn criterion_7_prompt_golden_files() {
    common::verify_golden_files();
    println!("criterion 7: PASS - 7 templates x 5 levels byte-identical to the golden files");
}

// ---------------------------------------------------------------------------
// criterion 8: parser robustness table
// ---------------------------------------------------------------------------

#[test]
fn criterion_8_parser_robustness_table() {
    enum Case {
        Likert(&'static str, Option<u8>),
        YesNo(&'static str, Option<bool>),
        Letter(&'static str, Option<Choice>),
    }
    use Case::*;

    let table = [
        // likert: plain and decorated
        Likert("1", Some(1)),
        Likert("5", Some(5)),
        Likert("3.", Some(3)),
        Likert(" 4 ", Some(4)),
        Likert("(2)", Some(2)),
        Likert("I'd say 3 overall.", Some(3)),
        Likert("After weighing both sides, my answer is 4.", Some(4)),
        Likert("strength: 2", Some(2)),
        Likert("Updated belief strength: 1", Some(1)),
        Likert("I move from 5 to 3", Some(5)),
        Likert("rating 4/5", Some(4)),
        Likert("a 5!", Some(5)),
        // likert: failures
        Likert("maybe", None),
        Likert("", None),
        Likert("10", None),
        Likert("score of 7", None),
        Likert("v3 model", None),
        Likert("zero", None),
        // yes/no: plain and decorated
        YesNo("Yes", Some(true)),
        YesNo("no", Some(false)),
        YesNo("YES", Some(true)),
        YesNo("No.", Some(false)),
        YesNo("yes, absolutely", Some(true)),
        YesNo("No - my stance holds.", Some(false)),
        YesNo("  Yes  ", Some(true)),
        YesNo("no!", Some(false)),
        // yes/no: failures
        YesNo("It depends", None),
        YesNo("I do change my stance", None),
        YesNo("affirmative", None),
        YesNo("", None),
        YesNo("nope", None),
        YesNo("Y", None),
        // choice: plain and decorated
        Letter("A", Some(Choice::A)),
        Letter("Answer: A", Some(Choice::A)),
        Letter("(B)", Some(Choice::B)),
        Letter("C.", Some(Choice::C)),
        Letter("I conclude with D", Some(Choice::D)),
        Letter("I initially favored B, but conclude (C).", Some(Choice::C)),
        Letter(
            "Weighing all arguments in the discussion, I select (A).",
            Some(Choice::A),
        ),
        Letter("B seems right; final answer B.", Some(Choice::B)),
        Letter("Either A or D could work, but D is best.", Some(Choice::D)),
        Letter("My choice is C, not B... wait, yes, C.", Some(Choice::C)),
        Letter("A, then B, then C, then D.", Some(Choice::D)),
        Letter("the answer is (B).", Some(Choice::B)),
        // choice: failures and traps
        Letter("all options are weak", None),
        Letter("", None),
        Letter("a strong case indeed", None),
        Letter("ABCD", None),
        Letter("Eliminated everything.", None),
        Letter("choice letter withheld", None),
        // reasoning preambles with trailing verdicts
        Likert(
            "Given the counter-argument, and despite my reservations, 2",
            Some(2),
        ),
        YesNo(
            "Yes. The counter-argument overcame my initial view.",
            Some(true),
        ),
        Letter(
            "The pH of pure water is neutral, which matches option (C).",
            Some(Choice::C),
        ),
        Likert("First I note 9 concerns, but the strength is 1", Some(1)),
    ];

    assert!(table.len() >= 50, "table has only {} cases", table.len());
    for (i, case) in table.iter().enumerate() {
        match case {
            Likert(text, expected) => {
                assert_eq!(parse_likert(text).ok(), *expected, "case {i}: {text:?}")
            }
            YesNo(text, expected) => {
                assert_eq!(parse_yes_no(text).ok(), *expected, "case {i}: {text:?}")
            }
            Letter(text, expected) => {
                assert_eq!(parse_choice(text).ok(), *expected, "case {i}: {text:?}")
            }
        }
    }
    println!(
        "criterion 8: PASS - {} parser cases including preambles, punctuation, and failures",
        table.len()
    );
}

// ---------------------------------------------------------------------------
// criterion 9: optional live smoke test
// ---------------------------------------------------------------------------

#[test]
fn criterion_9_live_smoke_test() {
    let Ok(base_url) = std::env::var("BELIEFBOX_LIVE_URL") else {
        println!("criterion 9: SKIP - set BELIEFBOX_LIVE_URL to run the live smoke test");
        return;
    };
    let model_name =
        std::env::var("BELIEFBOX_LIVE_MODEL").unwrap_or_else(|_| "default".to_string());
    let config = BackendConfig {
        base_url,
        model_name,
        api_key: std::env::var("BELIEFBOX_API_KEY").ok(),
        ..BackendConfig::default()
    };
    let backend: Arc<dyn ChatBackend> = Arc::new(HttpBackend::new(config).unwrap());

    let sample = common::canonical_aporia();
    let aligned = common::box_with(&sample.aligned_belief, beliefbox::model::Polarity::P, 5);
    let misaligned = common::box_with(
        &sample.misaligned_belief,
        beliefbox::model::Polarity::NotP,
        5,
    );
    let agents = vec![
        Agent {
            name: "Persuading agent".into(),
            belief_box: aligned,
            openness: OpenMindedness::new(1).unwrap(),
            role: AgentRole::Persuader,
            backend: Arc::clone(&backend),
        },
        Agent {
            name: "Target agent".into(),
            belief_box: misaligned,
            openness: OpenMindedness::new(5).unwrap(),
            role: AgentRole::Target,
            backend,
        },
    ];
    let transcript = run_debate(
        agents,
        &DebateTask::Persuasion {
            sample: sample.clone(),
        },
        DebateIds {
            debate_id: "live-smoke".into(),
            sample_id: "s000".into(),
            run_index: 0,
        },
        &DebateConfig {
            runs: 1,
            ..DebateConfig::default()
        },
    )
    .unwrap();

    assert!(
        transcript.complete,
        "live debate aborted: {:?}",
        transcript.error
    );
    let strengths = trajectory(&transcript, "Target agent");
    assert!(!strengths.is_empty());
    assert!(strengths.iter().all(|s| s.value() <= 5));
    assert_eq!(transcript_rows(&transcript).len(), transcript.turns.len());
    println!(
        "criterion 9: PASS - live debate complete, target trajectory {:?}",
        strengths.iter().map(|s| s.value()).collect::<Vec<_>>()
    );
}

// ---------------------------------------------------------------------------
// transcript replay determinism (supports criterion 2's guarantee)
// ---------------------------------------------------------------------------

#[test]
fn scripted_replay_reproduces_transcripts_exactly() {
    let samples = synthetic_aporia(2);
    let config = DebateConfig {
        rounds: 4,
        runs: 2,
        seed: 11,
        ..DebateConfig::default()
    };
    let run = || {
        let backend: Arc<dyn ChatBackend> = Arc::new(ScriptedBackend::from_rule(|agent, round| {
            Some(format!("{agent} argues in round {round}. Confidence 4."))
        }));
        let out =
            run_persuasion(&backend, &samples, &PersuasionCondition::ALL, &config, 4).unwrap();
        rows_to_jsonl(&out.rows).unwrap()
    };
    assert_eq!(run(), run());
}
