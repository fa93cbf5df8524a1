// SPDX-License-Identifier: MIT OR Apache-2.0

//! Synthetic Finnish-like corpus generation.
//!
//! Stems are built from a vowel-final prefix, a middle cluster and an
//! ending, all drawn from a fixed segment inventory with back/front vowel
//! harmony. Each of the 17 gradation patterns has its own template set,
//! and non-gradating distractors cover the look-alike paradigms
//! (`kana ~ kanan`, `tase ~ taseen`, `varis ~ variksen`) plus loanwords
//! marked by a foreign initial consonant. Every generated pair is checked
//! with [`classify_pair`] before it is accepted.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::rules::{classify_pair, Annotation, Consonant, PatternId, PATTERNS};
use crate::seed::rng_for;

use super::InflectionExample;

/// Non-gradating word classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DistractorClass {
    /// Vowel stem without a stop in the final onset (`kana`).
    Plain,
    /// Foreign initial consonant; never gradates (`bambu`).
    Loan,
    /// e-stem with vowel doubling (`tase ~ taseen`).
    EStem,
    /// s-stem with k-insertion (`varis ~ variksen`).
    SStem,
    /// as-stem without a stop (`kallas ~ kallaan`).
    AsStem,
}

impl DistractorClass {
    pub const ALL: [DistractorClass; 5] =
        [DistractorClass::Plain, DistractorClass::Loan, DistractorClass::EStem, DistractorClass::SStem, DistractorClass::AsStem];

    pub fn name(self) -> &'static str {
        match self {
            DistractorClass::Plain => "plain",
            DistractorClass::Loan => "loan",
            DistractorClass::EStem => "e-stem",
            DistractorClass::SStem => "s-stem",
            DistractorClass::AsStem => "as-stem",
        }
    }
}

impl fmt::Display for DistractorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DistractorClass {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        DistractorClass::ALL.iter().copied().find(|c| c.name() == s).ok_or_else(|| format!("unknown distractor class {s:?}"))
    }
}

/// Relative weights of the distractor classes among non-gradating pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct DistractorMix {
    pub weights: [f64; 5],
}

impl Default for DistractorMix {
    fn default() -> Self {
        DistractorMix { weights: [0.50, 0.25, 0.10, 0.08, 0.07] }
    }
}

/// Size and composition of a generated corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSpec {
    pub total_pairs: usize,
    /// Gradating pairs per pattern, indexed by `PatternId as usize`.
    pub quotas: [usize; 17],
    pub distractors: DistractorMix,
    pub seed: u64,
}

impl Default for CorpusSpec {
    /// 4,797 pairs; the quotas are ten times the per-consonant and
    /// qualitative/quantitative counts of the balanced validation set
    /// (p 14/40, t 24/30, k 4/50), spread over the patterns of each cell.
    fn default() -> Self {
        use PatternId::*;
        let mut quotas = [0; 17];
        for (id, q) in [
            (PpP, 200),
            (PPp, 200),
            (PV, 70),
            (MpMm, 70),
            (TtT, 150),
            (TTt, 150),
            (TD, 48),
            (NtNn, 48),
            (LtLl, 48),
            (NnNt, 48),
            (TZero, 48),
            (KkK, 250),
            (KKk, 250),
            (KJ, 10),
            (KV, 10),
            (NkNg, 10),
            (KZero, 10),
        ] {
            quotas[id as usize] = q;
        }
        CorpusSpec { total_pairs: 4797, quotas, distractors: DistractorMix::default(), seed: 1 }
    }
}

impl CorpusSpec {
    /// A `CorpusSpec` with every quota zero.
    pub fn empty(total_pairs: usize, seed: u64) -> Self {
        CorpusSpec { total_pairs, quotas: [0; 17], distractors: DistractorMix::default(), seed }
    }

    pub fn quota(&self, id: PatternId) -> usize {
        self.quotas[id as usize]
    }

    pub fn gradating_total(&self) -> usize {
        self.quotas.iter().sum()
    }

    pub fn non_gradating_total(&self) -> usize {
        self.total_pairs.saturating_sub(self.gradating_total())
    }

    pub fn non_gradating_fraction(&self) -> f64 {
        if self.total_pairs == 0 {
            0.0
        } else {
            self.non_gradating_total() as f64 / self.total_pairs as f64
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.gradating_total() > self.total_pairs {
            return Err(Error::InvalidConfig(format!(
                "quotas sum to {} which exceeds total_pairs {}",
                self.gradating_total(),
                self.total_pairs
            )));
        }
        let w = &self.distractors.weights;
        if w.iter().any(|&x| !x.is_finite() || x < 0.0) || (self.non_gradating_total() > 0 && w.iter().sum::<f64>() <= 0.0) {
            return Err(Error::InvalidConfig("distractor weights must be non-negative with a positive sum".into()));
        }
        Ok(())
    }

    /// Set one `key=value` field (`total_pairs`, `seed`, `quota.<pattern>`,
    /// `distractor.<class>`).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::InvalidConfig(format!("{key}={value}: {what}"));
        match key {
            "total_pairs" => self.total_pairs = value.parse().map_err(|_| bad("not a count"))?,
            "seed" => self.seed = value.parse().map_err(|_| bad("not a 64-bit seed"))?,
            _ => {
                if let Some(pattern) = key.strip_prefix("quota.") {
                    let id: PatternId = pattern.parse().map_err(|e: String| bad(&e))?;
                    self.quotas[id as usize] = value.parse().map_err(|_| bad("not a count"))?;
                } else if let Some(class) = key.strip_prefix("distractor.") {
                    let class: DistractorClass = class.parse().map_err(|e: String| bad(&e))?;
                    self.distractors.weights[class as usize] = value.parse().map_err(|_| bad("not a weight"))?;
                } else {
                    return Err(bad("unknown corpus key"));
                }
            }
        }
        Ok(())
    }

    /// Flat `key=value` lines that [`CorpusSpec::set`] reads back.
    pub fn to_key_values(&self) -> Vec<(String, String)> {
        let mut out = vec![("total_pairs".to_string(), self.total_pairs.to_string()), ("seed".to_string(), self.seed.to_string())];
        for id in PatternId::ALL {
            out.push((format!("quota.{id}"), self.quota(id).to_string()));
        }
        for class in DistractorClass::ALL {
            out.push((format!("distractor.{class}"), self.distractors.weights[class as usize].to_string()));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Harmony {
    Back,
    Front,
}

const HARMONIES: [Harmony; 2] = [Harmony::Back, Harmony::Front];

impl Harmony {
    fn vowels(self) -> [char; 5] {
        match self {
            Harmony::Back => ['a', 'o', 'u', 'e', 'i'],
            Harmony::Front => ['ä', 'ö', 'y', 'e', 'i'],
        }
    }

    fn finals(self) -> [char; 4] {
        match self {
            Harmony::Back => ['a', 'o', 'u', 'i'],
            Harmony::Front => ['ä', 'ö', 'y', 'i'],
        }
    }

    fn low(self) -> char {
        match self {
            Harmony::Back => 'a',
            Harmony::Front => 'ä',
        }
    }

    fn high_round(self) -> char {
        match self {
            Harmony::Back => 'u',
            Harmony::Front => 'y',
        }
    }
}

const ONSETS: [&str; 12] = ["", "h", "j", "k", "l", "m", "n", "p", "r", "s", "t", "v"];
const MEDIALS: [&str; 11] = ["l", "m", "n", "r", "s", "v", "h", "j", "k", "p", "t"];
const LOAN_ONSETS: [&str; 4] = ["b", "d", "f", "g"];
const NONSTOP_CLUSTERS: [&str; 22] =
    ["l", "m", "n", "r", "s", "v", "j", "h", "ll", "mm", "nn", "rr", "ss", "ls", "ns", "rs", "lm", "rm", "lv", "rv", "hm", "hn"];
const NONSTOP_SINGLES: [&str; 8] = ["l", "m", "n", "r", "s", "v", "j", "h"];
const E_STEM_CLUSTERS: [&str; 11] = ["l", "m", "n", "r", "s", "v", "h", "j", "ll", "ss", "rr"];
const LOAN_SITES: [&str; 16] = ["p", "t", "k", "pp", "tt", "kk", "nt", "nk", "mp", "lt", "b", "d", "g", "mb", "nd", "ng"];

/// Vowel-final stem beginnings for one harmony class.
fn prefixes(h: Harmony, onsets: &[&str]) -> Vec<String> {
    let vowels = h.vowels();
    let mut out = Vec::new();
    for onset in onsets {
        for &v in &vowels {
            out.push(format!("{onset}{v}"));
            out.push(format!("{onset}{v}{v}"));
            if v != 'i' {
                out.push(format!("{onset}{v}i"));
            }
            for medial in MEDIALS {
                for &w in &vowels {
                    out.push(format!("{onset}{v}{medial}{w}"));
                }
            }
        }
    }
    out
}

/// A family of forms `prefix + middle + ending` on both sides of the pair.
struct Template {
    prefixes: Vec<String>,
    middles: Vec<(String, String)>,
    endings: Vec<(String, String)>,
}

impl Template {
    fn size(&self) -> usize {
        self.prefixes.len() * self.middles.len() * self.endings.len()
    }

    fn instance(&self, index: usize) -> (String, String) {
        let e = index % self.endings.len();
        let rest = index / self.endings.len();
        let m = rest % self.middles.len();
        let p = rest / self.middles.len();
        let (prefix, (mid_n, mid_g), (end_n, end_g)) = (&self.prefixes[p], &self.middles[m], &self.endings[e]);
        (format!("{prefix}{mid_n}{end_n}"), format!("{prefix}{mid_g}{end_g}"))
    }
}

fn same(items: &[&str]) -> Vec<(String, String)> {
    items.iter().map(|s| (s.to_string(), s.to_string())).collect()
}

fn pairs(items: &[(&str, &str)]) -> Vec<(String, String)> {
    items.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
}

fn vowel_endings(h: Harmony) -> Vec<(String, String)> {
    h.finals().iter().map(|v| (v.to_string(), format!("{v}n"))).collect()
}

fn e_endings() -> Vec<(String, String)> {
    pairs(&[("e", "een")])
}

fn as_endings(h: Harmony) -> Vec<(String, String)> {
    let a = h.low();
    vec![(format!("{a}s"), format!("{a}{a}n"))]
}

struct Inventory {
    native: [Vec<String>; 2],
    loan: [Vec<String>; 2],
}

impl Inventory {
    fn new() -> Self {
        Inventory {
            native: [prefixes(Harmony::Back, &ONSETS), prefixes(Harmony::Front, &ONSETS)],
            loan: [prefixes(Harmony::Back, &LOAN_ONSETS), prefixes(Harmony::Front, &LOAN_ONSETS)],
        }
    }

    fn native(&self, h: Harmony) -> &[String] {
        &self.native[h as usize]
    }

    fn native_where(&self, h: Harmony, keep: impl Fn(&[char]) -> bool) -> Vec<String> {
        self.native(h)
            .iter()
            .filter(|p| {
                let chars: Vec<char> = p.chars().collect();
                keep(&chars)
            })
            .cloned()
            .collect()
    }

    fn pattern_templates(&self, id: PatternId) -> Vec<Template> {
        use PatternId::*;
        let rule = id.pattern();
        let mut out = Vec::new();
        for h in HARMONIES {
            let all = || self.native(h).to_vec();
            match id {
                PpP | TtT | KkK | PV | NtNn | NkNg | LtLl | MpMm => out.push(Template {
                    prefixes: all(),
                    middles: pairs(&[(rule.strong, rule.weak)]),
                    endings: vowel_endings(h),
                }),
                TD => out.push(Template { prefixes: all(), middles: pairs(&[("t", "d"), ("ht", "hd")]), endings: vowel_endings(h) }),
                KJ => out.push(Template {
                    // a single non-i vowel after a consonant or word start: aika, poika
                    prefixes: self.native_where(h, |c| {
                        let n = c.len();
                        c[n - 1] != 'i' && (n == 1 || !crate::rules::is_vowel(c[n - 2]))
                    }),
                    middles: pairs(&[("ik", "j")]),
                    endings: vowel_endings(h),
                }),
                KV => {
                    let u = h.high_round();
                    out.push(Template {
                        prefixes: self.native_where(h, |c| c[c.len() - 1] == u),
                        middles: pairs(&[("k", "v")]),
                        endings: vec![(u.to_string(), format!("{u}n"))],
                    })
                }
                KZero => out.push(Template {
                    prefixes: all(),
                    middles: pairs(&[("lk", "l"), ("rk", "r"), ("hk", "h")]),
                    endings: vowel_endings(h),
                }),
                PPp | TTt | KKk | NnNt => {
                    let middles = pairs(&[(rule.weak, rule.strong)]);
                    out.push(Template { prefixes: all(), middles: middles.clone(), endings: e_endings() });
                    out.push(Template { prefixes: all(), middles, endings: as_endings(h) });
                }
                TZero => {
                    let u = h.high_round();
                    out.push(Template {
                        prefixes: all(),
                        middles: same(&["l", "r", "n", "v", "h"]),
                        endings: vec![(format!("{u}t"), format!("{u}en"))],
                    })
                }
            }
        }
        out
    }

    fn distractor_templates(&self, class: DistractorClass) -> Vec<Template> {
        HARMONIES
            .iter()
            .map(|&h| match class {
                DistractorClass::Plain => {
                    Template { prefixes: self.native(h).to_vec(), middles: same(&NONSTOP_CLUSTERS), endings: vowel_endings(h) }
                }
                DistractorClass::Loan => {
                    Template { prefixes: self.loan[h as usize].clone(), middles: same(&LOAN_SITES), endings: vowel_endings(h) }
                }
                DistractorClass::EStem => {
                    Template { prefixes: self.native(h).to_vec(), middles: same(&E_STEM_CLUSTERS), endings: e_endings() }
                }
                DistractorClass::SStem => Template {
                    prefixes: self.native(h).to_vec(),
                    middles: same(&NONSTOP_SINGLES),
                    endings: pairs(&[("is", "iksen")]),
                },
                DistractorClass::AsStem => {
                    Template { prefixes: self.native(h).to_vec(), middles: same(&NONSTOP_SINGLES), endings: as_endings(h) }
                }
            })
            .collect()
    }
}

/// Distinct draws from the concatenated index space of several templates.
fn draw(
    templates: &[Template],
    quota: usize,
    rng: &mut ChaCha8Rng,
    used: &mut HashSet<String>,
    accept: impl Fn(&str, &str) -> Option<Annotation>,
    name: &str,
) -> Result<Vec<InflectionExample>> {
    let mut out = Vec::with_capacity(quota);
    if quota == 0 {
        return Ok(out);
    }
    let sizes: Vec<usize> = templates.iter().map(Template::size).collect();
    let space: usize = sizes.iter().sum();
    let instance = |mut i: usize| {
        for (t, &s) in templates.iter().zip(&sizes) {
            if i < s {
                return t.instance(i);
            }
            i -= s;
        }
        unreachable!("index beyond template space")
    };
    let mut try_index = |i: usize, out: &mut Vec<InflectionExample>| {
        let (nom, gen) = instance(i);
        if used.contains(&nom) {
            return;
        }
        if let Some(annotation) = accept(&nom, &gen) {
            used.insert(nom.clone());
            out.push(InflectionExample::annotated(nom, gen, annotation));
        }
    };

    let mut tried: HashSet<usize> = HashSet::new();
    // Rejection sampling while the space is sparsely explored, then an
    // exhaustive pass over the untried indices.
    while out.len() < quota && tried.len() * 2 < space && quota * 4 < space {
        let i = rng.gen_range(0..space);
        if tried.insert(i) {
            try_index(i, &mut out);
        }
    }
    if out.len() < quota {
        let mut rest: Vec<usize> = (0..space).filter(|i| !tried.contains(i)).collect();
        rest.shuffle(rng);
        for i in rest {
            if out.len() == quota {
                break;
            }
            try_index(i, &mut out);
        }
    }
    if out.len() < quota {
        return Err(Error::QuotaInfeasible { pattern: name.to_string(), available: out.len(), quota });
    }
    Ok(out)
}

fn accept_pattern(id: PatternId) -> impl Fn(&str, &str) -> Option<Annotation> {
    move |nom, gen| match classify_pair(nom, gen) {
        Ok(a) if a.event.map(|e| e.pattern) == Some(id) => Some(a),
        _ => None,
    }
}

fn accept_plain(nom: &str, gen: &str) -> Option<Annotation> {
    match classify_pair(nom, gen) {
        Ok(a) if !a.gradating => Some(a),
        _ => None,
    }
}

/// Split `total` proportionally to `weights` with largest-remainder rounding.
fn apportion(total: usize, weights: &[f64]) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    if total == 0 || sum <= 0.0 {
        return vec![0; weights.len()];
    }
    let exact: Vec<f64> = weights.iter().map(|w| w / sum * total as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    let mut missing = total - counts.iter().sum::<usize>();
    for i in order {
        if missing == 0 {
            break;
        }
        counts[i] += 1;
        missing -= 1;
    }
    counts
}

/// Generate a corpus. The output order is a seeded shuffle; the same `CorpusSpec`
/// always yields the same corpus.
pub fn generate_corpus(spec: &CorpusSpec) -> Result<Vec<InflectionExample>> {
    spec.validate()?;
    let inventory = Inventory::new();
    let mut rng: ChaCha8Rng = rng_for(spec.seed, "corpus");
    let mut used = HashSet::new();
    let mut out = Vec::with_capacity(spec.total_pairs);

    for id in PatternId::ALL {
        let templates = inventory.pattern_templates(id);
        out.extend(draw(&templates, spec.quota(id), &mut rng, &mut used, accept_pattern(id), id.name())?);
    }
    let counts = apportion(spec.non_gradating_total(), &spec.distractors.weights);
    for (class, count) in DistractorClass::ALL.into_iter().zip(counts) {
        let templates = inventory.distractor_templates(class);
        out.extend(draw(&templates, count, &mut rng, &mut used, accept_plain, class.name())?);
    }
    out.shuffle(&mut rng);
    Ok(out)
}

/// Gradating pairs for topping up a probe set: `per_consonant` per stop,
/// spread over that stop's patterns in proportion to the quotas in `spec` and
/// never reusing a nominative from `exclude`.
pub fn generate_probe_pool(
    spec: &CorpusSpec,
    exclude: &HashSet<String>,
    per_consonant: usize,
    seed: u64,
) -> Result<Vec<InflectionExample>> {
    let inventory = Inventory::new();
    let mut rng: ChaCha8Rng = rng_for(seed, "probe-pool");
    let mut used = exclude.clone();
    let mut out = Vec::new();
    for consonant in Consonant::ALL {
        let ids: Vec<PatternId> = PATTERNS.iter().filter(|p| p.consonant == consonant).map(|p| p.id).collect();
        let mut weights: Vec<f64> = ids.iter().map(|&id| spec.quota(id) as f64).collect();
        if weights.iter().sum::<f64>() <= 0.0 {
            weights = vec![1.0; ids.len()];
        }
        for (id, count) in ids.iter().zip(apportion(per_consonant, &weights)) {
            let templates = inventory.pattern_templates(*id);
            out.extend(draw(&templates, count, &mut rng, &mut used, accept_pattern(*id), id.name())?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::{Direction, Kind};

    #[test]
    fn single_quota() {
        let mut spec = CorpusSpec::empty(1, 11);
        spec.quotas[PatternId::KkK as usize] = 1;
        let corpus = generate_corpus(&spec).unwrap();
        assert_eq!(corpus.len(), 1);
        let e = &corpus[0];
        assert!(e.nominative.contains("kk"), "{}", e.nominative);
        let ev = classify_pair(&e.nominative, &e.genitive).unwrap().event.unwrap();
        assert_eq!((ev.kind(), ev.consonant(), ev.direction), (Kind::Quantitative, Consonant::K, Direction::Direct));
    }

    #[test]
    fn every_pattern_generates() {
        let mut spec = CorpusSpec::empty(17 * 5 + 50, 3);
        spec.quotas = [5; 17];
        let corpus = generate_corpus(&spec).unwrap();
        assert_eq!(corpus.len(), spec.total_pairs);
        for id in PatternId::ALL {
            let n = corpus.iter().filter(|e| e.event().map(|ev| ev.pattern) == Some(id)).count();
            assert_eq!(n, 5, "{id}");
        }
        let nominatives: HashSet<_> = corpus.iter().map(|e| &e.nominative).collect();
        assert_eq!(nominatives.len(), corpus.len());
    }

    #[test]
    fn infeasible_quota() {
        // k-v only admits stems whose prefix ends in u/y before a matching vowel.
        let mut spec = CorpusSpec::empty(100_000, 1);
        spec.quotas[PatternId::KV as usize] = 100_000;
        assert!(matches!(generate_corpus(&spec), Err(Error::QuotaInfeasible { .. })));
    }

    #[test]
    fn apportion_is_exact() {
        assert_eq!(apportion(10, &[0.5, 0.25, 0.25]), vec![5, 3, 2]);
        assert_eq!(apportion(3177, &DistractorMix::default().weights).iter().sum::<usize>(), 3177);
        assert_eq!(apportion(0, &[1.0]), vec![0]);
    }

    #[test]
    fn key_values_round_trip() {
        let spec = CorpusSpec::default();
        let mut back = CorpusSpec::empty(0, 0);
        for (k, v) in spec.to_key_values() {
            back.set(&k, &v).unwrap();
        }
        assert_eq!(back, spec);
        assert!(back.set("quota.x-y", "1").is_err());
    }
}
