// SPDX-License-Identifier: MIT OR Apache-2.0

//! Acceptance gate. Prints one PASS/FAIL line per criterion and fails if any
//! criterion fails.
//!
//! The ten full-size models take hours on one core, so trained checkpoints
//! are cached under the cargo target tmpdir, keyed by configuration, data and
//! crate version. Delete `acceptance-models` there to retrain from scratch.

mod common;

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use gradprobe::experiment::{
    accuracy_table, analyze, prepare_data, train_cached, train_seed, ExperimentConfig, SeedAnalysis,
};
use gradprobe::intervention::curves_csv;
use gradprobe::probing::{mean_activation, welch_t_test};
use gradprobe::rules::{classify_pair, ungrade_genitive, Consonant, Direction, Kind};
use gradprobe::seq2seq::checkpoint_digest;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

// Tolerances and thresholds.
const GRAD_CHECK_MAX_REL: f64 = 1e-4;
const ACCURACY_FLOOR: f64 = 90.0;
const REFERENCE_BAND: (f64, f64) = (94.1, 96.1);
const MIN_SEEDS_ALL_CATEGORY: usize = 5;
const MIN_SEEDS_SEPARATING: usize = 7;
const MEAN_TOL: f64 = 1e-12;
const WELCH_TOL: f64 = 1e-6;
const PARTITION_TOL: f64 = 1e-9;

/// Written straight to stdout so the lines show up even when the harness
/// captures output.
fn say(line: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

struct Gate {
    failed: Vec<String>,
}

impl Gate {
    fn check(&mut self, id: u32, name: &str, pass: bool, detail: String) {
        say(&format!("[{}] criterion {id} {name}: {detail}", if pass { "PASS" } else { "FAIL" }));
        if !pass {
            self.failed.push(format!("{id} {name}"));
        }
    }
}

const TABLE: [(&str, &str, Kind, Consonant, Direction); 17] = [
    ("pappi", "papin", Kind::Quantitative, Consonant::P, Direction::Direct),
    ("kenttä", "kentän", Kind::Quantitative, Consonant::T, Direction::Direct),
    ("kiukku", "kiukun", Kind::Quantitative, Consonant::K, Direction::Direct),
    ("ripe", "rippeen", Kind::Quantitative, Consonant::P, Direction::Inverse),
    ("laite", "laitteen", Kind::Quantitative, Consonant::T, Direction::Inverse),
    ("liike", "liikkeen", Kind::Quantitative, Consonant::K, Direction::Inverse),
    ("sopu", "sovun", Kind::Qualitative, Consonant::P, Direction::Direct),
    ("johto", "johdon", Kind::Qualitative, Consonant::T, Direction::Direct),
    ("aika", "ajan", Kind::Qualitative, Consonant::K, Direction::Direct),
    ("kyky", "kyvyn", Kind::Qualitative, Consonant::K, Direction::Direct),
    ("olento", "olennon", Kind::Qualitative, Consonant::T, Direction::Direct),
    ("kenkä", "kengän", Kind::Qualitative, Consonant::K, Direction::Direct),
    ("silta", "sillan", Kind::Qualitative, Consonant::T, Direction::Direct),
    ("rumpu", "rummun", Kind::Qualitative, Consonant::P, Direction::Direct),
    ("ranne", "ranteen", Kind::Qualitative, Consonant::T, Direction::Inverse),
    ("salko", "salon", Kind::Qualitative, Consonant::K, Direction::Direct),
    ("olut", "oluen", Kind::Qualitative, Consonant::T, Direction::Direct),
];

fn criterion_1(gate: &mut Gate) {
    let mut hits = 0;
    let mut misses = Vec::new();
    let mut patterns = std::collections::BTreeSet::new();
    for (nom, gen, kind, cons, dir) in TABLE {
        match classify_pair(nom, gen).map(|a| a.event) {
            Ok(Some(e)) if (e.kind(), e.consonant(), e.direction) == (kind, cons, dir) => {
                hits += 1;
                patterns.insert(e.pattern);
            }
            other => misses.push(format!("{nom}/{gen}: {other:?}")),
        }
    }
    let alternate = ungrade_genitive("luukku", "luukun");
    let pass = hits == 17 && patterns.len() == 17 && matches!(alternate.as_deref(), Ok("luukkun"));
    gate.check(
        1,
        "rule oracle",
        pass,
        format!("{hits}/17 rows, {} distinct patterns, luukku/luukun -> {alternate:?} {misses:?}", patterns.len()),
    );
}

fn criterion_2(gate: &mut Gate) {
    let mut model = common::tiny_model(3);
    let check = common::finite_difference_check(&mut model, &common::GRAD_PAIRS, 1e-4, 1e-8);
    gate.check(
        2,
        "gradient check",
        check.max_rel_error < GRAD_CHECK_MAX_REL,
        format!("max relative error {:.2e} over {} entries (tolerance {GRAD_CHECK_MAX_REL:e}), worst {}", check.max_rel_error, check.entries, check.worst),
    );
}

fn criterion_7(gate: &mut Gate) {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut worst_mean, mut worst_p, mut worst_t) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let (na, nb) = (rng.gen_range(3..60), rng.gen_range(3..60));
        let (ma, mb) = (rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let (sa, sb) = (rng.gen_range(0.05..3.0), rng.gen_range(0.05..3.0));
        let a: Vec<f64> = Normal::new(ma, sa).unwrap().sample_iter(&mut rng).take(na).collect();
        let b: Vec<f64> = Normal::new(mb, sb).unwrap().sample_iter(&mut rng).take(nb).collect();
        worst_mean = worst_mean.max((mean_activation(&a).unwrap() - common::oracle_mean(&a)).abs());
        let w = welch_t_test(&a, &b).unwrap();
        let (t, _, p) = common::oracle_welch(&a, &b);
        worst_t = worst_t.max((w.t - t).abs() / t.abs().max(1.0));
        worst_p = worst_p.max((w.p - p).abs());
    }
    gate.check(
        7,
        "statistics oracles",
        worst_mean <= MEAN_TOL && worst_p <= WELCH_TOL && worst_t <= WELCH_TOL,
        format!("100 cases: max |mean err| {worst_mean:.1e} (tol {MEAN_TOL:e}), max |p err| {worst_p:.1e}, max rel t err {worst_t:.1e} (tol {WELCH_TOL:e})"),
    );
}

fn cache_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance-models")
}

fn full_runs(gate: &mut Gate) -> Vec<SeedAnalysis> {
    let config = ExperimentConfig::default();
    let data = prepare_data(&config).unwrap();
    say(&format!(
        "acceptance: {} train / {} dev / {} evaluation pairs, seeds {:?}, cache {}",
        data.train.len(),
        data.dev.len(),
        data.probe.len(),
        config.seeds,
        cache_dir().display()
    ));
    let mut analyses = Vec::new();
    for &seed in &config.seeds {
        let start = Instant::now();
        let trained = train_cached(&config, &data, seed, &cache_dir()).unwrap();
        let trained_in = start.elapsed();
        let a = analyze(&trained.model, &data, &config, seed).unwrap();
        say(&format!(
            "  model-{seed}: overall {:.1}%  all-category dims {:?}  T{} at x={} alternate {:.1}% vs random {:.1}%  (train/load {:.0?}, analysis {:.0?})",
            a.accuracy.overall,
            a.significance.all_category_dims(),
            a.separation.n,
            a.separation.factor,
            a.separation.discovered_alternate_pct,
            a.separation.random_alternate_pct,
            trained_in,
            start.elapsed() - trained_in
        ));
        analyses.push(a);
    }

    // 3
    let rows: Vec<_> = analyses.iter().map(|a| (a.seed, a.accuracy)).collect();
    for line in accuracy_table(&rows).lines() {
        say(&format!("    {line}"));
    }
    let below: Vec<u64> = analyses.iter().filter(|a| a.accuracy.overall < ACCURACY_FLOOR).map(|a| a.seed).collect();
    let in_band = analyses
        .iter()
        .filter(|a| (REFERENCE_BAND.0..=REFERENCE_BAND.1).contains(&a.accuracy.overall))
        .count();
    let min = analyses.iter().map(|a| a.accuracy.overall).fold(f64::INFINITY, f64::min);
    gate.check(
        3,
        "training reproduction",
        below.is_empty() && analyses.len() == 10,
        format!(
            "{} seeds, min overall accuracy {min:.1}% (floor {ACCURACY_FLOOR}%), below floor {below:?}; {in_band}/10 inside the {:.1}-{:.1}% reference band (reported only)",
            analyses.len(),
            REFERENCE_BAND.0,
            REFERENCE_BAND.1
        ),
    );

    // 4
    let counts: Vec<usize> = analyses.iter().map(|a| a.significance.all_category_count()).collect();
    let with_any = counts.iter().filter(|&&c| c > 0).count();
    gate.check(
        4,
        "probe reproduction",
        with_any >= MIN_SEEDS_ALL_CATEGORY,
        format!("{with_any}/10 seeds have a dimension significant in all five categories (need {MIN_SEEDS_ALL_CATEGORY}); per-seed counts {counts:?}"),
    );

    // 5
    let separating: Vec<u64> = analyses.iter().filter(|a| a.separation.separates()).map(|a| a.seed).collect();
    let exceptions: Vec<u64> = analyses.iter().filter(|a| !a.separation.separates()).map(|a| a.seed).collect();
    let identity_ok = analyses.iter().all(|a| a.identity_exact);
    gate.check(
        5,
        "intervention separation",
        separating.len() >= MIN_SEEDS_SEPARATING && identity_ok,
        format!(
            "{}/10 seeds separate (need {MIN_SEEDS_SEPARATING}); exceptions {exceptions:?}; identity control byte-exact on all seeds: {identity_ok}",
            separating.len()
        ),
    );
    analyses
}

fn criterion_6(gate: &mut Gate, analyses: &[SeedAnalysis]) {
    let mut points = 0;
    let mut bad_points = 0;
    for a in analyses {
        for c in a.appendix.all() {
            for p in &c.points {
                points += 1;
                let sum = p.gold_pct() + p.alternate_pct() + p.nonce_pct();
                if (sum - 100.0).abs() > PARTITION_TOL || p.total() != analyses_eval_size(a) {
                    bad_points += 1;
                }
            }
        }
    }

    // Determinism on a small configuration trained twice from scratch.
    let mut config = ExperimentConfig::default();
    for (k, v) in [
        ("model.embed_dim", "24"),
        ("model.encoder_hidden", "16"),
        ("model.decoder_hidden", "24"),
        ("model.attention_dim", "24"),
        ("train.steps", "120"),
        ("train.eval_interval", "60"),
        ("sweep.factors", "1,0,-2,-5,-10,-25"),
    ] {
        config.set(k, v).unwrap();
    }
    let data = prepare_data(&config).unwrap();
    let run = || {
        let (model, report) = train_seed(&config, &data, 4).unwrap();
        let a = analyze(&model, &data, &config, 4).unwrap();
        let curves: Vec<_> = a.appendix.all().cloned().collect();
        (checkpoint_digest(&model), report.curve_csv(), a.significance.to_csv("m"), curves_csv("m", &curves))
    };
    let (first, second) = (run(), run());
    let same = [first.0 == second.0, first.1 == second.1, first.2 == second.2, first.3 == second.3];
    gate.check(
        6,
        "partition and determinism",
        bad_points == 0 && points > 0 && same.iter().all(|&s| s),
        format!(
            "{points} sweep points, {bad_points} not summing to 100%; repeat run identical [digest, curve, probe csv, sweep csv] = {same:?} (digest {}..)",
            &first.0[..12]
        ),
    );
}

fn analyses_eval_size(a: &SeedAnalysis) -> usize {
    a.accuracy.n_gradating
}

#[test]
fn acceptance() {
    let mut gate = Gate { failed: Vec::new() };
    criterion_1(&mut gate);
    criterion_2(&mut gate);
    criterion_7(&mut gate);
    let analyses = full_runs(&mut gate);
    criterion_6(&mut gate, &analyses);
    say(&format!("acceptance: {} failed {:?}", gate.failed.len(), gate.failed));
    assert!(gate.failed.is_empty(), "failed criteria: {:?}", gate.failed);
}
