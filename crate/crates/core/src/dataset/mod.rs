// SPDX-License-Identifier: MIT OR Apache-2.0

//! Nominative/genitive corpora: schema, vocabulary, splitting and the
//! per-consonant balancing used to build probe sets.

mod generate;
mod tsv;

use std::collections::{BTreeSet, HashMap, HashSet};

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::rules::{Annotation, Consonant, GradationEvent};
use crate::seed::rng_for;

pub use generate::{generate_corpus, generate_probe_pool, CorpusSpec, DistractorClass, DistractorMix};
pub use tsv::{load_tsv, parse_tsv, save_tsv, save_tsv_with_header, to_tsv};

/// One nominative → genitive pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InflectionExample {
    pub nominative: String,
    pub genitive: String,
    pub annotation: Option<Annotation>,
}

impl InflectionExample {
    pub fn new(nominative: impl Into<String>, genitive: impl Into<String>) -> Self {
        InflectionExample { nominative: nominative.into(), genitive: genitive.into(), annotation: None }
    }

    pub fn annotated(nominative: impl Into<String>, genitive: impl Into<String>, annotation: Annotation) -> Self {
        InflectionExample { nominative: nominative.into(), genitive: genitive.into(), annotation: Some(annotation) }
    }

    pub fn event(&self) -> Option<&GradationEvent> {
        self.annotation.as_ref().and_then(|a| a.event.as_ref())
    }

    pub fn is_gradating(&self) -> bool {
        self.annotation.map(|a| a.gradating).unwrap_or(false)
    }

    pub fn consonant(&self) -> Option<Consonant> {
        self.event().map(|e| e.consonant())
    }
}

/// Reserved symbol ids.
pub const BOS: usize = 0;
pub const EOS: usize = 1;
pub const PAD: usize = 2;
pub const UNK: usize = 3;
const RESERVED: [&str; 4] = ["<s>", "</s>", "<pad>", "<unk>"];

/// Character vocabulary shared by the source and target side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    symbols: Vec<char>,
    index: HashMap<char, usize>,
}

impl Vocabulary {
    /// Build from explicit symbols; order is normalized by sorting.
    pub fn from_symbols(symbols: impl IntoIterator<Item = char>) -> Self {
        let set: BTreeSet<char> = symbols.into_iter().collect();
        let symbols: Vec<char> = set.into_iter().collect();
        let index = symbols.iter().enumerate().map(|(i, &c)| (c, i + RESERVED.len())).collect();
        Vocabulary { symbols, index }
    }

    /// Number of ids including the reserved ones.
    pub fn len(&self) -> usize {
        self.symbols.len() + RESERVED.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn symbols(&self) -> &[char] {
        &self.symbols
    }

    pub fn id(&self, c: char) -> usize {
        self.index.get(&c).copied().unwrap_or(UNK)
    }

    pub fn encode(&self, word: &str) -> Vec<usize> {
        word.chars().map(|c| self.id(c)).collect()
    }

    /// Map ids back to text; reserved ids other than UNK are dropped and UNK
    /// renders as `?`.
    pub fn decode(&self, ids: &[usize]) -> String {
        ids.iter()
            .filter_map(|&id| match id {
                BOS | EOS | PAD => None,
                UNK => Some('?'),
                id => self.symbols.get(id - RESERVED.len()).copied(),
            })
            .collect()
    }

    pub fn symbol_name(&self, id: usize) -> String {
        if id < RESERVED.len() {
            RESERVED[id].to_string()
        } else {
            self.symbols.get(id - RESERVED.len()).map(|c| c.to_string()).unwrap_or_else(|| "<?>".into())
        }
    }
}

/// Vocabulary over every character on both sides of the corpus.
pub fn build_vocab(examples: &[InflectionExample]) -> Vocabulary {
    Vocabulary::from_symbols(examples.iter().flat_map(|e| e.nominative.chars().chain(e.genitive.chars())))
}

/// Seeded shuffle followed by a cut at `floor(len * train_fraction)`.
pub fn split(
    examples: &[InflectionExample],
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<InflectionExample>, Vec<InflectionExample>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!("train fraction {train_fraction} outside (0, 1)")));
    }
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut rng: ChaCha8Rng = rng_for(seed, "split");
    order.shuffle(&mut rng);
    let n_train = ((examples.len() as f64) * train_fraction + 1e-9).floor() as usize;
    let train = order[..n_train].iter().map(|&i| examples[i].clone()).collect();
    let dev = order[n_train..].iter().map(|&i| examples[i].clone()).collect();
    Ok((train, dev))
}

/// Equalize the number of gradating examples per stop consonant.
///
/// Surplus gradating examples are dropped and deficits are filled from
/// `extra_pool`, both by seeded sampling. Non-gradating examples are kept.
pub fn balance_probe_set(
    dev: &[InflectionExample],
    extra_pool: &[InflectionExample],
    per_consonant_target: usize,
    seed: u64,
) -> Result<Vec<InflectionExample>> {
    let mut rng: ChaCha8Rng = rng_for(seed, "balance");
    let mut dropped: HashSet<usize> = HashSet::new();
    let mut additions = Vec::new();
    let present: HashSet<&str> = dev.iter().map(|e| e.nominative.as_str()).collect();

    for consonant in Consonant::ALL {
        let have: Vec<usize> = (0..dev.len()).filter(|&i| dev[i].consonant() == Some(consonant)).collect();
        if have.len() > per_consonant_target {
            let mut surplus = have.clone();
            surplus.shuffle(&mut rng);
            dropped.extend(surplus.into_iter().take(have.len() - per_consonant_target));
        } else if have.len() < per_consonant_target {
            let needed = per_consonant_target - have.len();
            let mut candidates: Vec<&InflectionExample> = extra_pool
                .iter()
                .filter(|e| e.consonant() == Some(consonant) && !present.contains(e.nominative.as_str()))
                .collect();
            if candidates.len() < needed {
                return Err(Error::InsufficientPool {
                    consonant: consonant.as_char(),
                    available: candidates.len(),
                    needed,
                });
            }
            candidates.shuffle(&mut rng);
            additions.extend(candidates.into_iter().take(needed).cloned());
        }
    }

    let mut out: Vec<InflectionExample> =
        dev.iter().enumerate().filter(|(i, _)| !dropped.contains(i)).map(|(_, e)| e.clone()).collect();
    out.extend(additions);
    Ok(out)
}

/// Counts in the layout of the annotated validation-set table:
/// per consonant (ungradating, qualitative, quantitative).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Composition {
    pub ungradating: usize,
    pub per_consonant: [(usize, usize, usize); 3],
}

impl Composition {
    pub fn of(examples: &[InflectionExample]) -> Self {
        use crate::rules::Kind;
        let mut c = Composition::default();
        for e in examples {
            match e.event() {
                None => c.ungradating += 1,
                Some(ev) => {
                    let row = &mut c.per_consonant[ev.consonant() as usize];
                    match ev.kind() {
                        Kind::Qualitative => row.1 += 1,
                        Kind::Quantitative => row.2 += 1,
                    }
                    row.0 += 1;
                }
            }
        }
        c
    }

    pub fn gradating(&self, consonant: Consonant) -> usize {
        self.per_consonant[consonant as usize].0
    }

    pub fn total_gradating(&self) -> usize {
        self.per_consonant.iter().map(|r| r.0).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::classify_pair;

    fn ex(nom: &str, gen: &str) -> InflectionExample {
        InflectionExample::annotated(nom, gen, classify_pair(nom, gen).unwrap())
    }

    #[test]
    fn vocab_reserved_and_sorted() {
        let v = build_vocab(&[InflectionExample::new("ab", "abn")]);
        assert_eq!(v.len(), 7);
        assert_eq!(v.symbols(), &['a', 'b', 'n']);
        assert_eq!(v.id('a'), 4);
        let w = build_vocab(&[InflectionExample::new("ba", "nab"), InflectionExample::new("a", "b")]);
        assert_eq!(v, w);
    }

    #[test]
    fn unseen_character_maps_to_unk() {
        let train = vec![InflectionExample::new("kana", "kanan")];
        let v = build_vocab(&train);
        assert_eq!(v.encode("kala"), vec![v.id('k'), v.id('a'), UNK, v.id('a')]);
        assert_eq!(v.decode(&v.encode("kala")), "ka?a");
    }

    #[test]
    fn split_sizes_and_disjointness() {
        let examples: Vec<_> = (0..10).map(|i| InflectionExample::new(format!("a{i}"), format!("a{i}n"))).collect();
        let (train, dev) = split(&examples, 0.9, 7).unwrap();
        assert_eq!((train.len(), dev.len()), (9, 1));
        assert!(dev.iter().all(|d| !train.contains(d)));
        let again = split(&examples, 0.9, 7).unwrap();
        assert_eq!((train, dev), again);

        let many: Vec<_> = (0..4797).map(|i| InflectionExample::new(format!("x{i}"), format!("x{i}n"))).collect();
        let (train, dev) = split(&many, 0.9, 1).unwrap();
        assert_eq!((train.len(), dev.len()), (4317, 480));
        assert!(split(&many, 1.0, 1).is_err());
    }

    fn grad_set() -> (Vec<InflectionExample>, Vec<InflectionExample>) {
        let dev = vec![ex("kana", "kanan"), ex("pappi", "papin"), ex("katto", "katon"), ex("kukka", "kukan")];
        let pool = vec![ex("sopu", "sovun"), ex("rumpu", "rummun"), ex("silta", "sillan")];
        (dev, pool)
    }

    #[test]
    fn balancing() {
        let (dev, pool) = grad_set();
        assert_eq!(balance_probe_set(&dev, &pool, 1, 3).unwrap(), dev);
        let two = balance_probe_set(&dev, &pool, 2, 3).unwrap_err();
        assert!(matches!(two, Error::InsufficientPool { consonant: 't', .. } | Error::InsufficientPool { consonant: 'k', .. }));
        let zero = balance_probe_set(&dev, &pool, 0, 3).unwrap();
        assert_eq!(zero, vec![ex("kana", "kanan")]);
        let no_p: Vec<_> = pool.iter().filter(|e| e.consonant() != Some(Consonant::P)).cloned().collect();
        let dev_t: Vec<_> = dev.iter().filter(|e| e.consonant() != Some(Consonant::P)).cloned().collect();
        assert!(matches!(
            balance_probe_set(&dev_t, &no_p, 1, 3),
            Err(Error::InsufficientPool { consonant: 'p', .. })
        ));
    }
}
