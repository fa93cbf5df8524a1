// SPDX-License-Identifier: MIT OR Apache-2.0

use std::collections::HashSet;

use gradprobe::dataset::{
    balance_probe_set, build_vocab, generate_corpus, generate_probe_pool, load_tsv, save_tsv_with_header, split, Composition,
    CorpusSpec,
};
use gradprobe::rules::{classify_pair, Consonant, PatternId};

#[test]
fn default_corpus_shape() {
    let spec = CorpusSpec::default();
    let corpus = generate_corpus(&spec).unwrap();
    assert_eq!(corpus.len(), 4797);

    let nominatives: HashSet<_> = corpus.iter().map(|e| e.nominative.as_str()).collect();
    assert_eq!(nominatives.len(), corpus.len(), "duplicate nominatives");

    for e in &corpus {
        let fresh = classify_pair(&e.nominative, &e.genitive).unwrap();
        assert_eq!(Some(fresh), e.annotation, "{} {}", e.nominative, e.genitive);
    }
    for id in PatternId::ALL {
        let n = corpus.iter().filter(|e| e.event().map(|ev| ev.pattern) == Some(id)).count();
        assert_eq!(n, spec.quota(id), "{id}");
    }
    let c = Composition::of(&corpus);
    assert_eq!(c.ungradating, 3177);
    assert_eq!(c.per_consonant[Consonant::P as usize], (540, 140, 400));
    assert_eq!(c.per_consonant[Consonant::T as usize], (540, 240, 300));
    assert_eq!(c.per_consonant[Consonant::K as usize], (540, 40, 500));

    let (train, dev) = split(&corpus, 0.9, spec.seed).unwrap();
    assert_eq!((train.len(), dev.len()), (4317, 480));
}

#[test]
fn generation_is_deterministic() {
    let spec = CorpusSpec { seed: 42, ..CorpusSpec::default() };
    let a = generate_corpus(&spec).unwrap();
    let b = generate_corpus(&spec).unwrap();
    assert_eq!(a, b);
    let c = generate_corpus(&CorpusSpec { seed: 43, ..spec }).unwrap();
    assert_ne!(a, c);
}

#[test]
fn probe_pool_tops_up_dev_set() {
    let spec = CorpusSpec::default();
    let corpus = generate_corpus(&spec).unwrap();
    let (_, dev) = split(&corpus, 0.9, 1).unwrap();
    let used: HashSet<String> = corpus.iter().map(|e| e.nominative.clone()).collect();
    let pool = generate_probe_pool(&spec, &used, 80, 9).unwrap();
    assert!(pool.iter().all(|e| !used.contains(&e.nominative) && e.is_gradating()));
    let balanced = balance_probe_set(&dev, &pool, 80, 5).unwrap();
    let c = Composition::of(&balanced);
    for k in Consonant::ALL {
        assert_eq!(c.gradating(k), 80, "{k}");
    }
    let vocab = build_vocab(&corpus);
    assert!(vocab.symbols().contains(&'ä'));
}

#[test]
fn saved_corpus_reloads() {
    let mut spec = CorpusSpec::empty(300, 5);
    spec.quotas = [6; 17];
    let corpus = generate_corpus(&spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("corpus.tsv");
    save_tsv_with_header(&corpus, &spec.to_key_values(), &path).unwrap();
    assert_eq!(load_tsv(&path).unwrap(), corpus);
}
