// SPDX-License-Identifier: MIT OR Apache-2.0

mod common;

use gradprobe::dataset::InflectionExample;
use gradprobe::intervention::{
    appendix_sweep, default_factors, random_baseline, random_dims, run_sweep, select_best, tune_top_n, SiteRule,
    SweepConfig, SweepCurve, SweepPoint, SweepSet,
};
use gradprobe::report::{CurveSet, SweepMetric};
use gradprobe::seq2seq::evaluate;
use gradprobe::Error;
use proptest::prelude::*;

fn gradating(dev: &[InflectionExample]) -> Vec<InflectionExample> {
    dev.iter().filter(|e| e.is_gradating()).cloned().collect()
}

#[test]
fn partition_identity_and_consistency() {
    let (model, _, dev) = common::toy_trained(60);
    let grad = gradating(&dev);
    assert!(grad.len() >= 10);
    let set = SweepSet::new(&model, &grad, SiteRule::Span).unwrap();
    let curve = set.sweep(&model, &[0, 3, 7], &default_factors(), "T3").unwrap();
    assert_eq!(curve.points.len(), 27);
    for p in &curve.points {
        assert_eq!(p.total(), grad.len());
        let sum = p.gold_pct() + p.alternate_pct() + p.nonce_pct();
        assert!((sum - 100.0).abs() < 1e-9);
    }

    let words: Vec<&str> = grad.iter().map(|e| e.nominative.as_str()).collect();
    let plain = model.predict(&words).unwrap();
    assert_eq!(set.outputs(&model, &[0, 3, 7], 1.0).unwrap(), plain);
    assert_eq!(set.plain_outputs(&model), plain);

    let at_one = curve.point(1.0).unwrap();
    let acc = evaluate(&model, &grad).unwrap();
    assert_eq!(acc.gradating.unwrap(), at_one.gold_pct());

    assert_eq!(run_sweep(&model, &grad, &[0, 3, 7], &default_factors()).unwrap(), curve);
}

#[test]
fn malformed_inputs_are_rejected() {
    let (model, _, dev) = common::toy_trained(0);
    let plain = dev.iter().find(|e| !e.is_gradating()).unwrap().clone();
    assert!(matches!(run_sweep(&model, &[plain], &[0], &[1.0]), Err(Error::NotGradating(_))));
    let grad = gradating(&dev);
    assert!(matches!(run_sweep(&model, &grad, &[], &[1.0]), Err(Error::InvalidConfig(_))));
    assert!(matches!(run_sweep(&model, &grad, &[model.trace_dim()], &[2.0]), Err(Error::InvalidConfig(_))));
}

#[test]
fn random_baseline_is_seeded_and_clean() {
    let (model, _, dev) = common::toy_trained(40);
    let grad = gradating(&dev);
    let set = SweepSet::new(&model, &grad, SiteRule::Span).unwrap();
    let top = [1, 2, 3, 4, 5];
    let factors = [1.0, -3.0, -10.0];
    let a = random_baseline(&model, &set, 5, &top, &factors, 9).unwrap();
    let b = random_baseline(&model, &set, 5, &top, &factors, 9).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.dims, random_dims(model.trace_dim(), 5, &top, 9).unwrap());
    assert!(a.dims.iter().all(|d| !top.contains(d)));
    assert_eq!(a.label, "TR");
    let unhooked = set.plain_outputs(&model);
    let gold = grad.iter().zip(&unhooked).filter(|(e, o)| e.genitive == **o).count();
    assert_eq!(a.point(1.0).unwrap().gold, gold);
}

#[test]
fn appendix_family_shape() {
    let (model, _, dev) = common::toy_trained(40);
    let grad = gradating(&dev);
    let set = SweepSet::new(&model, &grad, SiteRule::Final).unwrap();
    let config = SweepConfig { factors: vec![1.0, -2.0, -8.0], random_seed: 4, ..SweepConfig::default() };
    let ranked = [10, 20, 30, 4, 5];
    let fam = appendix_sweep(&model, &set, &ranked, &config).unwrap();
    let labels: Vec<&str> = fam.all().map(|c| c.label.as_str()).collect();
    assert_eq!(labels, ["T1", "T2", "T3", "T4", "T5", "TR"]);
    for (n, c) in fam.tuned.curves.iter().enumerate() {
        assert_eq!(c.dims, ranked[..=n]);
    }
    let curves: Vec<&SweepCurve> = fam.all().collect();
    let plot = CurveSet::sweeps("m", &curves, &[SweepMetric::Alternate, SweepMetric::Gold]);
    assert_eq!(plot.series.len() * plot.metrics.len(), 12);

    let single = tune_top_n(&model, &set, &ranked, 1..=1, &config.factors).unwrap();
    assert_eq!(single.best_n, 1);
    assert_eq!(single.curves.len(), 1);
}

fn curves_from(alts: &[Vec<usize>]) -> Vec<SweepCurve> {
    alts.iter()
        .enumerate()
        .map(|(n, row)| SweepCurve {
            label: format!("T{}", n + 1),
            dims: (0..=n).collect(),
            points: row
                .iter()
                .enumerate()
                .map(|(i, &a)| SweepPoint { factor: 1.0 - i as f64, gold: 50 - a, alternate: a, nonce: 0 })
                .collect(),
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn tuning_matches_exhaustive_search(alts in proptest::collection::vec(proptest::collection::vec(0usize..50, 4), 1..6)) {
        let tuned = select_best(curves_from(&alts));
        let peak = alts.iter().map(|r| *r.iter().max().unwrap()).max().unwrap();
        let first_n = alts.iter().position(|r| r.contains(&peak)).unwrap() + 1;
        prop_assert_eq!(tuned.best_n, first_n);
        let row = &alts[first_n - 1];
        prop_assert_eq!(tuned.best_factor, 1.0 - row.iter().position(|&a| a == peak).unwrap() as f64);
    }

    #[test]
    fn lower_factors_never_change_best_n(
        alts in proptest::collection::vec(proptest::collection::vec(0usize..50, 4), 1..6),
        extra in proptest::collection::vec(0usize..50, 5),
    ) {
        let before = select_best(curves_from(&alts)).best_n;
        let lowered: Vec<Vec<usize>> = alts
            .iter()
            .zip(&extra)
            .map(|(r, &e)| {
                let mut r = r.clone();
                r.push(e.min(*r.iter().min().unwrap()));
                r
            })
            .collect();
        prop_assert_eq!(select_best(curves_from(&lowered)).best_n, before);
    }
}
