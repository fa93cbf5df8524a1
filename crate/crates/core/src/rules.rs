// SPDX-License-Identifier: MIT OR Apache-2.0

//! Finnish consonant gradation as an executable rule table.
//!
//! Each [`GradePattern`] fixes a strong grade, a weak grade and the
//! direction in which the alternation shows up between the nominative and
//! the genitive. [`classify_pair`] aligns a nominative/genitive pair under a
//! small set of genitive paradigms and recovers the single grade
//! substitution (if any) that relates the two stems.
//!
//! All indices are character offsets, not byte offsets; `ä` and `ö` count as
//! one position each.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Stop consonant undergoing gradation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Consonant {
    P,
    T,
    K,
}

impl Consonant {
    pub const ALL: [Consonant; 3] = [Consonant::P, Consonant::T, Consonant::K];

    pub fn as_char(self) -> char {
        match self {
            Consonant::P => 'p',
            Consonant::T => 't',
            Consonant::K => 'k',
        }
    }
}

impl fmt::Display for Consonant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

impl FromStr for Consonant {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "p" | "P" => Ok(Consonant::P),
            "t" | "T" => Ok(Consonant::T),
            "k" | "K" => Ok(Consonant::K),
            other => Err(format!("unknown consonant {other:?}")),
        }
    }
}

/// Quantitative (length) versus qualitative (lenition/assimilation) gradation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kind {
    Quantitative,
    Qualitative,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Quantitative => "quant",
            Kind::Qualitative => "qual",
        })
    }
}

impl FromStr for Kind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "quant" | "quantitative" => Ok(Kind::Quantitative),
            "qual" | "qualitative" => Ok(Kind::Qualitative),
            other => Err(format!("unknown gradation kind {other:?}")),
        }
    }
}

/// Direct: strong grade in the nominative, weak in the genitive.
/// Inverse: the other way round (`rike ~ rikkeen`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Direct,
    Inverse,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Direct => "direct",
            Direction::Inverse => "inverse",
        })
    }
}

impl FromStr for Direction {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "direct" => Ok(Direction::Direct),
            "inverse" => Ok(Direction::Inverse),
            other => Err(format!("unknown direction {other:?}")),
        }
    }
}

/// Which of the two grades to produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Grade {
    Strong,
    Weak,
}

/// The 17 alternation types. Names read nominative → genitive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PatternId {
    PpP,
    TtT,
    KkK,
    PPp,
    TTt,
    KKk,
    PV,
    TD,
    KJ,
    KV,
    NtNn,
    NkNg,
    LtLl,
    MpMm,
    NnNt,
    KZero,
    TZero,
}

impl PatternId {
    pub const ALL: [PatternId; 17] = [
        PatternId::PpP,
        PatternId::TtT,
        PatternId::KkK,
        PatternId::PPp,
        PatternId::TTt,
        PatternId::KKk,
        PatternId::PV,
        PatternId::TD,
        PatternId::KJ,
        PatternId::KV,
        PatternId::NtNn,
        PatternId::NkNg,
        PatternId::LtLl,
        PatternId::MpMm,
        PatternId::NnNt,
        PatternId::KZero,
        PatternId::TZero,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PatternId::PpP => "pp-p",
            PatternId::TtT => "tt-t",
            PatternId::KkK => "kk-k",
            PatternId::PPp => "p-pp",
            PatternId::TTt => "t-tt",
            PatternId::KKk => "k-kk",
            PatternId::PV => "p-v",
            PatternId::TD => "t-d",
            PatternId::KJ => "k-j",
            PatternId::KV => "k-v",
            PatternId::NtNn => "nt-nn",
            PatternId::NkNg => "nk-ng",
            PatternId::LtLl => "lt-ll",
            PatternId::MpMm => "mp-mm",
            PatternId::NnNt => "nn-nt",
            PatternId::KZero => "k-0",
            PatternId::TZero => "t-0",
        }
    }

    pub fn pattern(self) -> &'static GradePattern {
        &PATTERNS[self as usize]
    }
}

impl fmt::Display for PatternId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PatternId {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        PatternId::ALL
            .iter()
            .copied()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown pattern {s:?}"))
    }
}

/// One row of the gradation table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GradePattern {
    pub id: PatternId,
    pub strong: &'static str,
    /// May be empty for the elision types (`salko ~ salon`, `olut ~ oluen`).
    pub weak: &'static str,
    pub kind: Kind,
    pub consonant: Consonant,
    pub direction: Direction,
}

impl GradePattern {
    pub fn grade(&self, grade: Grade) -> &'static str {
        match grade {
            Grade::Strong => self.strong,
            Grade::Weak => self.weak,
        }
    }

    /// Grade found in the nominative.
    pub fn nominative_grade(&self) -> Grade {
        match self.direction {
            Direction::Direct => Grade::Strong,
            Direction::Inverse => Grade::Weak,
        }
    }

    /// Grade found in the genitive.
    pub fn genitive_grade(&self) -> Grade {
        match self.direction {
            Direction::Direct => Grade::Weak,
            Direction::Inverse => Grade::Strong,
        }
    }
}

const fn row(
    id: PatternId,
    strong: &'static str,
    weak: &'static str,
    kind: Kind,
    consonant: Consonant,
    direction: Direction,
) -> GradePattern {
    GradePattern { id, strong, weak, kind, consonant, direction }
}

use Consonant::{K, P, T};
use Direction::{Direct, Inverse};
use Kind::{Qualitative as Qual, Quantitative as Quant};

/// The rule table, indexed by `PatternId as usize`.
pub static PATTERNS: [GradePattern; 17] = [
    row(PatternId::PpP, "pp", "p", Quant, P, Direct),
    row(PatternId::TtT, "tt", "t", Quant, T, Direct),
    row(PatternId::KkK, "kk", "k", Quant, K, Direct),
    row(PatternId::PPp, "pp", "p", Quant, P, Inverse),
    row(PatternId::TTt, "tt", "t", Quant, T, Inverse),
    row(PatternId::KKk, "kk", "k", Quant, K, Inverse),
    row(PatternId::PV, "p", "v", Qual, P, Direct),
    row(PatternId::TD, "t", "d", Qual, T, Direct),
    // aika ~ ajan: the i of the diphthong goes with the weak j.
    row(PatternId::KJ, "ik", "j", Qual, K, Direct),
    row(PatternId::KV, "k", "v", Qual, K, Direct),
    row(PatternId::NtNn, "nt", "nn", Qual, T, Direct),
    row(PatternId::NkNg, "nk", "ng", Qual, K, Direct),
    row(PatternId::LtLl, "lt", "ll", Qual, T, Direct),
    row(PatternId::MpMm, "mp", "mm", Qual, P, Direct),
    row(PatternId::NnNt, "nt", "nn", Qual, T, Inverse),
    row(PatternId::KZero, "k", "", Qual, K, Direct),
    row(PatternId::TZero, "t", "", Qual, T, Direct),
];

/// Half-open character range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn positions(&self) -> std::ops::Range<usize> {
        self.start..self.end
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

/// A located gradation alternation between a nominative and its genitive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GradationEvent {
    pub pattern: PatternId,
    pub direction: Direction,
    pub nom_span: Span,
    pub gen_span: Span,
}

impl GradationEvent {
    pub fn rule(&self) -> &'static GradePattern {
        self.pattern.pattern()
    }

    pub fn kind(&self) -> Kind {
        self.rule().kind
    }

    pub fn consonant(&self) -> Consonant {
        self.rule().consonant
    }
}

/// Gold analysis of a pair. `event` is present iff `gradating`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Annotation {
    pub gradating: bool,
    pub event: Option<GradationEvent>,
}

impl Annotation {
    pub fn none() -> Self {
        Annotation { gradating: false, event: None }
    }

    pub fn gradating(event: GradationEvent) -> Self {
        Annotation { gradating: true, event: Some(event) }
    }
}

/// Outcome of comparing a model output with the gold and alternate forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OutputCategory {
    Gold,
    Alternate,
    Nonce,
}

pub(crate) const VOWELS: &[char] = &['a', 'e', 'i', 'o', 'u', 'y', 'ä', 'ö', 'å'];

pub fn is_vowel(c: char) -> bool {
    VOWELS.contains(&c)
}

pub fn is_stop(c: char) -> bool {
    matches!(c, 'p' | 't' | 'k')
}

fn is_finnish_letter(c: char) -> bool {
    c.is_ascii_lowercase() || matches!(c, 'ä' | 'ö' | 'å' | 'š' | 'ž')
}

fn check_form(form: &str) -> Result<Vec<char>> {
    if form.is_empty() {
        return Err(Error::InvalidForm(form.to_string()));
    }
    let chars: Vec<char> = form.chars().collect();
    if !chars.iter().all(|&c| is_finnish_letter(c)) {
        return Err(Error::InvalidForm(form.to_string()));
    }
    Ok(chars)
}

/// Genitive paradigms known to the classifier. Each one strips the
/// paradigm-specific material and returns (nominative stem, genitive stem);
/// gradation is whatever single substitution maps one onto the other.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Paradigm {
    /// pappi ~ papin
    Vowel,
    /// rike ~ rikkeen, olut ~ oluen
    EStem,
    /// varis ~ variksen
    SStem,
    /// ratas ~ rattaan
    AsStem,
}

const PARADIGMS: [Paradigm; 4] =
    [Paradigm::Vowel, Paradigm::EStem, Paradigm::SStem, Paradigm::AsStem];

fn ends_with(chars: &[char], suffix: &str) -> bool {
    let suffix: Vec<char> = suffix.chars().collect();
    chars.len() > suffix.len() && chars[chars.len() - suffix.len()..] == suffix[..]
}

impl Paradigm {
    fn stems<'a>(self, nom: &'a [char], gen: &'a [char]) -> Option<(&'a [char], &'a [char])> {
        let last = *nom.last()?;
        match self {
            Paradigm::Vowel => {
                if is_vowel(last) && ends_with(gen, "n") {
                    Some((nom, &gen[..gen.len() - 1]))
                } else {
                    None
                }
            }
            Paradigm::EStem => {
                if (last == 'e' || last == 't') && ends_with(gen, "en") {
                    Some((nom, &gen[..gen.len() - 2]))
                } else {
                    None
                }
            }
            Paradigm::SStem => {
                if last == 's' && nom.len() > 1 && ends_with(gen, "ksen") {
                    Some((&nom[..nom.len() - 1], &gen[..gen.len() - 4]))
                } else {
                    None
                }
            }
            Paradigm::AsStem => {
                if last != 's' || nom.len() < 3 || gen.len() < 3 {
                    return None;
                }
                let vowel = nom[nom.len() - 2];
                if is_vowel(vowel) && gen[gen.len() - 1] == 'n' && gen[gen.len() - 2] == vowel {
                    Some((&nom[..nom.len() - 1], &gen[..gen.len() - 2]))
                } else {
                    None
                }
            }
        }
    }
}

/// A grade occurrence must not be carved out of a longer run of the same
/// consonant: the single `k` inside `kk` is not a site for `k-0`.
fn maximal_match(word: &[char], start: usize, grade: &[char]) -> bool {
    let end = start + grade.len();
    if end > word.len() || word[start..end] != *grade {
        return false;
    }
    if let Some(&first) = grade.first() {
        if !is_vowel(first) && start > 0 && word[start - 1] == first {
            return false;
        }
    }
    if let Some(&last) = grade.last() {
        if !is_vowel(last) && end < word.len() && word[end] == last {
            return false;
        }
    }
    true
}

/// All single grade substitutions that turn `base` into `graded`.
fn substitutions(base: &[char], graded: &[char]) -> Vec<GradationEvent> {
    let mut found = Vec::new();
    for rule in PATTERNS.iter() {
        let from: Vec<char> = rule.grade(rule.nominative_grade()).chars().collect();
        let to: Vec<char> = rule.grade(rule.genitive_grade()).chars().collect();
        if from.is_empty() || base.len() + to.len() != graded.len() + from.len() {
            continue;
        }
        for start in 0..=base.len() - from.len() {
            if !maximal_match(base, start, &from) {
                continue;
            }
            let from_end = start + from.len();
            let to_end = start + to.len();
            if base[..start] == graded[..start]
                && graded[start..to_end] == to[..]
                && base[from_end..] == graded[to_end..]
            {
                found.push(GradationEvent {
                    pattern: rule.id,
                    direction: rule.direction,
                    nom_span: Span::new(start, from_end),
                    gen_span: Span::new(start, to_end),
                });
            }
        }
    }
    found
}

/// Analyse a nominative/genitive pair.
///
/// A pair explained by plain suffixation is non-gradating even if some
/// other paradigm would also admit a substitution. Among gradation
/// explanations the rightmost site wins; two different events at that
/// site are reported as [`Error::AmbiguousAlignment`].
pub fn classify_pair(nominative: &str, genitive: &str) -> Result<Annotation> {
    let nom = check_form(nominative)?;
    let gen = check_form(genitive)?;

    let mut plain = false;
    let mut events: Vec<GradationEvent> = Vec::new();
    for paradigm in PARADIGMS {
        let Some((base, graded)) = paradigm.stems(&nom, &gen) else {
            continue;
        };
        if base == graded {
            plain = true;
        } else {
            for event in substitutions(base, graded) {
                if !events.contains(&event) {
                    events.push(event);
                }
            }
        }
    }

    if plain {
        return Ok(Annotation::none());
    }
    let Some(rightmost) = events.iter().map(|e| (e.nom_span.end, e.nom_span.start)).max() else {
        return Err(Error::NotAPair {
            nominative: nominative.to_string(),
            genitive: genitive.to_string(),
        });
    };
    let at_site: Vec<&GradationEvent> = events
        .iter()
        .filter(|e| (e.nom_span.end, e.nom_span.start) == rightmost)
        .collect();
    if at_site.len() > 1 {
        return Err(Error::AmbiguousAlignment {
            nominative: nominative.to_string(),
            genitive: genitive.to_string(),
            candidates: at_site.iter().map(|e| e.pattern.to_string()).collect(),
        });
    }
    Ok(Annotation::gradating(*at_site[0]))
}

fn cluster_partner(prev: char, stop: char) -> bool {
    prev == stop
        || matches!(
            (prev, stop),
            ('n', 't') | ('n', 'k') | ('l', 't') | ('l', 'k') | ('m', 'p') | ('r', 't') | ('r', 'k') | ('h', 't') | ('h', 'k')
        )
}

/// Span of the last stop in `form`, extended left over a geminate partner
/// or a preceding n/l/m/r/h that forms a gradation cluster with it.
pub fn alternation_site(form: &str) -> Option<Span> {
    let chars: Vec<char> = form.chars().collect();
    let last = chars.iter().rposition(|&c| is_stop(c))?;
    let start = if last > 0 && cluster_partner(chars[last - 1], chars[last]) { last - 1 } else { last };
    Some(Span::new(start, last + 1))
}

/// Rewrite the grade found at character offset `start` of `form`.
///
/// The longer of the two grades is tried first so that `kk` is not read as
/// a weak `k` followed by another `k`.
pub fn apply_grade_at(form: &str, pattern: PatternId, start: usize, target: Grade) -> Result<String> {
    let chars: Vec<char> = form.chars().collect();
    let rule = pattern.pattern();
    let strong: Vec<char> = rule.strong.chars().collect();
    let weak: Vec<char> = rule.weak.chars().collect();

    let mut order = [(Grade::Strong, &strong), (Grade::Weak, &weak)];
    if weak.len() > strong.len() {
        order.swap(0, 1);
    }
    let current = order.iter().find(|(_, g)| {
        let end = start + g.len();
        end <= chars.len() && chars[start..end] == g[..]
    });
    let Some(&(grade, found)) = current else {
        return Err(Error::SiteMismatch {
            form: form.to_string(),
            pattern: pattern.to_string(),
            start,
        });
    };
    if grade == target {
        return Ok(form.to_string());
    }
    let replacement = rule.grade(target);
    let mut out: String = chars[..start].iter().collect();
    out.push_str(replacement);
    out.extend(chars[start + found.len()..].iter());
    Ok(out)
}

/// Rewrite the event's nominative site of `form` to the requested grade.
pub fn apply_grade(form: &str, event: &GradationEvent, target: Grade) -> Result<String> {
    apply_grade_at(form, event.pattern, event.nom_span.start, target)
}

/// The genitive as it would look had gradation not applied (`luukku` →
/// `*luukkun`).
pub fn ungrade_genitive(nominative: &str, gold_genitive: &str) -> Result<String> {
    let annotation = classify_pair(nominative, gold_genitive)?;
    let event = annotation.event.ok_or_else(|| Error::NotGradating(nominative.to_string()))?;
    ungrade_with_event(gold_genitive, &event)
}

pub(crate) fn ungrade_with_event(gold_genitive: &str, event: &GradationEvent) -> Result<String> {
    let rule = event.rule();
    apply_grade_at(gold_genitive, event.pattern, event.gen_span.start, rule.nominative_grade())
}

/// Exact-match partition of a model output.
pub fn categorize_output(predicted: &str, gold: &str, alternate: &str) -> OutputCategory {
    if predicted == gold {
        OutputCategory::Gold
    } else if predicted == alternate {
        OutputCategory::Alternate
    } else {
        OutputCategory::Nonce
    }
}

pub const RULE_TABLE_HEADER: &str = "# gradation-rules v1";

/// Serialize the rule table: a version line, then one tab-separated row
/// per pattern (`id strong weak kind consonant direction`, `-` for an
/// empty grade).
pub fn rule_table_text() -> String {
    let mut out = String::from(RULE_TABLE_HEADER);
    out.push('\n');
    for rule in PATTERNS.iter() {
        let weak = if rule.weak.is_empty() { "-" } else { rule.weak };
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            rule.id, rule.strong, weak, rule.kind, rule.consonant, rule.direction
        ));
    }
    out
}

/// Parse a rule table and check it against the built-in one.
pub fn parse_rule_table(text: &str) -> Result<Vec<GradePattern>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(RULE_TABLE_HEADER) => {}
        Some(other) => {
            return Err(Error::VersionMismatch { expected: RULE_TABLE_HEADER.into(), found: other.into() })
        }
        None => return Err(Error::EmptyFile),
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let bad = |reason: String| Error::MalformedRow { line: i + 2, reason };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 6 {
            return Err(bad(format!("expected 6 fields, found {}", fields.len())));
        }
        let id: PatternId = fields[0].parse().map_err(bad)?;
        let builtin = id.pattern();
        let weak = if fields[2] == "-" { "" } else { fields[2] };
        let kind: Kind = fields[3].parse().map_err(bad)?;
        let consonant: Consonant = fields[4].parse().map_err(bad)?;
        let direction: Direction = fields[5].parse().map_err(bad)?;
        if fields[1] != builtin.strong
            || weak != builtin.weak
            || kind != builtin.kind
            || consonant != builtin.consonant
            || direction != builtin.direction
        {
            return Err(bad(format!("row for {id} disagrees with the built-in table")));
        }
        rows.push(builtin.clone());
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn classify(nom: &str, gen: &str) -> GradationEvent {
        classify_pair(nom, gen).unwrap().event.unwrap_or_else(|| panic!("{nom}/{gen} not gradating"))
    }

    #[test]
    fn table_invariants() {
        assert_eq!(PATTERNS.len(), 17);
        for (i, rule) in PATTERNS.iter().enumerate() {
            assert_eq!(rule.id as usize, i);
            assert_ne!(rule.strong, rule.weak);
            let geminate = matches!((rule.strong, rule.weak), ("pp", "p") | ("tt", "t") | ("kk", "k"));
            assert_eq!(rule.kind == Kind::Quantitative, geminate, "{}", rule.id);
        }
    }

    #[test]
    fn textbook_examples() {
        let e = classify("pappi", "papin");
        assert_eq!((e.kind(), e.consonant(), e.direction), (Kind::Quantitative, Consonant::P, Direction::Direct));
        let e = classify("aika", "ajan");
        assert_eq!((e.kind(), e.consonant(), e.direction), (Kind::Qualitative, Consonant::K, Direction::Direct));
        assert_eq!(classify_pair("kana", "kanan").unwrap(), Annotation::none());
        assert_eq!(classify_pair("varis", "variksen").unwrap(), Annotation::none());
        assert_eq!(classify_pair("tase", "taseen").unwrap(), Annotation::none());
    }

    #[test]
    fn spans_and_elision() {
        let e = classify("olut", "oluen");
        assert_eq!(e.pattern, PatternId::TZero);
        assert_eq!(e.nom_span, Span::new(3, 4));
        assert!(e.gen_span.is_empty());
        assert_eq!(e.gen_span.start, 3);

        let e = classify("ratas", "rattaan");
        assert_eq!(e.pattern, PatternId::TTt);
        assert_eq!(e.nom_span, Span::new(2, 3));
        assert_eq!(e.gen_span, Span::new(2, 4));

        let e = classify("kukka", "kukan");
        assert_eq!(e.pattern, PatternId::KkK);
    }

    #[test]
    fn unrelated_strings() {
        assert!(matches!(classify_pair("kana", "talon"), Err(Error::NotAPair { .. })));
        assert!(matches!(classify_pair("", "talon"), Err(Error::InvalidForm(_))));
    }

    #[test]
    fn sites() {
        assert_eq!(alternation_site("tupa"), Some(Span::new(2, 3)));
        assert_eq!(alternation_site("ratas"), Some(Span::new(2, 3)));
        assert_eq!(alternation_site("aamu"), None);
        assert_eq!(alternation_site("katto"), Some(Span::new(2, 4)));
        assert_eq!(alternation_site("kenkä"), Some(Span::new(2, 4)));
    }

    #[test]
    fn grade_application() {
        let katto = classify("katto", "katon");
        assert_eq!(apply_grade("katto", &katto, Grade::Weak).unwrap(), "kato");
        assert_eq!(apply_grade("kato", &katto, Grade::Weak).unwrap(), "kato");
        let rike = classify("rike", "rikkeen");
        assert_eq!(apply_grade("rike", &rike, Grade::Strong).unwrap(), "rikke");
        assert!(matches!(apply_grade("kala", &katto, Grade::Weak), Err(Error::SiteMismatch { .. })));
    }

    #[test]
    fn ungrading() {
        assert_eq!(ungrade_genitive("luukku", "luukun").unwrap(), "luukkun");
        assert_eq!(ungrade_genitive("kenkä", "kengän").unwrap(), "kenkän");
        assert_eq!(ungrade_genitive("aika", "ajan").unwrap(), "aikan");
        assert_eq!(ungrade_genitive("olut", "oluen").unwrap(), "oluten");
        assert_eq!(ungrade_genitive("rike", "rikkeen").unwrap(), "rikeen");
        assert!(matches!(ungrade_genitive("auto", "auton"), Err(Error::NotGradating(_))));
    }

    #[test]
    fn categories() {
        assert_eq!(categorize_output("luukun", "luukun", "luukkun"), OutputCategory::Gold);
        assert_eq!(categorize_output("luukkun", "luukun", "luukkun"), OutputCategory::Alternate);
        assert_eq!(categorize_output("luukuukuukkun", "luukun", "luukkun"), OutputCategory::Nonce);
    }

    #[test]
    fn rule_table_round_trip() {
        let text = rule_table_text();
        assert_eq!(text.lines().count(), 18);
        assert!(text.contains("k-0\tk\t-\tqual\tk\tdirect\n"));
        let rows = parse_rule_table(&text).unwrap();
        assert_eq!(rows, PATTERNS.to_vec());
        let tampered = text.replace("p-v\tp\tv", "p-v\tp\tb");
        assert!(matches!(parse_rule_table(&tampered), Err(Error::MalformedRow { .. })));
    }
}
