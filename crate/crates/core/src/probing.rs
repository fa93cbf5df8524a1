// SPDX-License-Identifier: MIT OR Apache-2.0

//! Locating and testing trace dimensions that respond to gradation.
//!
//! Activations are read at one position per example: the last character
//! of the nominative's gradation site for gradating forms (group G), and
//! the penultimate character of non-gradating forms when it is a consonant
//! (group N). Dimensions are ranked by the gap between the group means and
//! the best candidates are tested per category with Welch's t-test.

use std::fmt;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::autodiff::Scalar;
use crate::dataset::InflectionExample;
use crate::error::{Error, Result};
use crate::rules::{is_vowel, Consonant, GradationEvent, Kind};
use crate::seed::rng_for;
use crate::seq2seq::Seq2Seq;

/// Gradation categories tested against the non-gradating control group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    K,
    P,
    T,
    Qual,
    Quant,
}

impl Category {
    pub const ALL: [Category; 5] = [Category::K, Category::P, Category::T, Category::Qual, Category::Quant];

    pub fn name(self) -> &'static str {
        match self {
            Category::K => "K",
            Category::P => "P",
            Category::T => "T",
            Category::Qual => "Qual",
            Category::Quant => "Quant",
        }
    }

    pub fn contains(self, event: &GradationEvent) -> bool {
        match self {
            Category::K => event.consonant() == Consonant::K,
            Category::P => event.consonant() == Consonant::P,
            Category::T => event.consonant() == Consonant::T,
            Category::Qual => event.kind() == Kind::Qualitative,
            Category::Quant => event.kind() == Kind::Quantitative,
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Character position whose trace vector represents `example`.
///
/// Gradating forms use the last character of the nominative grade
/// (`tupa` → 2, `luukku` → 4, `ranne` → 3); non-gradating forms use the
/// penultimate character when it is a consonant (`kana` → 2) and are
/// excluded otherwise (`radio`).
pub fn select_site(example: &InflectionExample) -> Result<usize> {
    if let Some(event) = example.event() {
        return Ok(event.nom_span.end - 1);
    }
    let chars: Vec<char> = example.nominative.chars().collect();
    match chars.len().checked_sub(2) {
        Some(p) if !is_vowel(chars[p]) => Ok(p),
        _ => Err(Error::Excluded(example.nominative.clone())),
    }
}

/// Arithmetic mean of one group's activations for one dimension.
pub fn mean_activation(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyGroup("samples".into()));
    }
    Ok(samples.iter().sum::<f64>() / samples.len() as f64)
}

/// Mean activations of one dimension in both groups.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimScore {
    pub dim: usize,
    pub mean_g: f64,
    pub mean_n: f64,
    /// `|mean_n - mean_g|`
    pub gap: f64,
}

/// The `top_n` dimensions with the largest gap between the column means of
/// `g` and `n` (rows are samples), largest first, ties to the lower index.
pub fn rank_dimensions(g: &Array2<f64>, n: &Array2<f64>, top_n: usize) -> Result<Vec<DimScore>> {
    if g.nrows() == 0 {
        return Err(Error::EmptyGroup("G".into()));
    }
    if n.nrows() == 0 {
        return Err(Error::EmptyGroup("N".into()));
    }
    let dims = g.ncols();
    if n.ncols() != dims || top_n > dims {
        return Err(Error::InvalidConfig(format!("top_n {top_n} with {dims} dimensions")));
    }
    let mut scores: Vec<DimScore> = (0..dims)
        .map(|d| {
            let mean_g = mean_activation(&g.column(d).to_vec()).expect("non-empty");
            let mean_n = mean_activation(&n.column(d).to_vec()).expect("non-empty");
            DimScore { dim: d, mean_g, mean_n, gap: (mean_n - mean_g).abs() }
        })
        .collect();
    scores.sort_by(|a, b| b.gap.total_cmp(&a.gap).then(a.dim.cmp(&b.dim)));
    scores.truncate(top_n);
    Ok(scores)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchTest {
    pub t: f64,
    pub df: f64,
    /// Two-sided.
    pub p: f64,
}

/// Welch's unequal-variance t-test with Welch-Satterthwaite degrees of
/// freedom.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<WelchTest> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::EmptyGroup(format!("t-test needs two samples per group, got {} and {}", a.len(), b.len())));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, mb) = (mean_activation(a)?, mean_activation(b)?);
    let va = a.iter().map(|x| (x - ma).powi(2)).sum::<f64>() / (na - 1.0);
    let vb = b.iter().map(|x| (x - mb).powi(2)).sum::<f64>() / (nb - 1.0);
    if va == 0.0 && vb == 0.0 {
        return Err(Error::DegenerateVariance);
    }
    let (sa, sb) = (va / na, vb / nb);
    let se2 = sa + sb;
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::InvalidConfig(format!("t distribution: {e}")))?;
    let p = (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0);
    Ok(WelchTest { t, df, p })
}

/// Trace vectors at the selected site of every included example.
#[derive(Debug, Clone)]
pub struct SiteActivations {
    /// Index into the example list for each row of `matrix`.
    pub examples: Vec<usize>,
    pub positions: Vec<usize>,
    pub events: Vec<Option<GradationEvent>>,
    /// `[sites, 2n]`
    pub matrix: Array2<f64>,
}

impl SiteActivations {
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Rows whose example passes `keep`.
    pub fn rows(&self, keep: impl Fn(usize, Option<&GradationEvent>) -> bool) -> Array2<f64> {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| keep(self.examples[i], self.events[i].as_ref())).collect();
        self.matrix.select(Axis(0), &idx)
    }
}

/// Encode every example and read its site vector; excluded examples are
/// skipped.
pub fn collect_sites<F: Scalar>(model: &Seq2Seq<F>, examples: &[InflectionExample]) -> Result<SiteActivations> {
    let mut keep = Vec::new();
    let mut positions = Vec::new();
    for (i, e) in examples.iter().enumerate() {
        match select_site(e) {
            Ok(p) => {
                keep.push(i);
                positions.push(p);
            }
            Err(Error::Excluded(_)) => {}
            Err(other) => return Err(other),
        }
    }
    let words: Vec<&str> = keep.iter().map(|&i| examples[i].nominative.as_str()).collect();
    let traces = model.encode_batch(&words)?;
    let mut matrix = Array2::zeros((keep.len(), model.trace_dim()));
    for (row, (trace, &p)) in traces.iter().zip(&positions).enumerate() {
        matrix.row_mut(row).assign(&trace.states.row(p).mapv(|x| x.to_f64().expect("finite")));
    }
    let events = keep.iter().map(|&i| examples[i].event().copied()).collect();
    Ok(SiteActivations { examples: keep, positions, events, matrix })
}

/// One (dimension, category) test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignificanceCell {
    pub dim: usize,
    pub category: Category,
    /// `a_G - a_N` on the test half, G restricted to the category.
    pub mean_gap: f64,
    pub p_value: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignificanceReport {
    pub split_seed: u64,
    pub alpha: f64,
    /// Candidates ranked on the discovery half.
    pub candidates: Vec<DimScore>,
    pub cells: Vec<SignificanceCell>,
    pub discovery_examples: usize,
    pub test_examples: usize,
}

impl SignificanceReport {
    /// Candidate dimensions significant in every category.
    pub fn all_category_dims(&self) -> Vec<usize> {
        self.candidates
            .iter()
            .map(|c| c.dim)
            .filter(|&d| self.cells.iter().filter(|c| c.dim == d).all(|c| c.significant))
            .collect()
    }

    pub fn all_category_count(&self) -> usize {
        self.all_category_dims().len()
    }

    pub const CSV_HEADER: &'static str = "model,dimension,category,mean_gap,p_value,significant";

    /// CSV rows (without header) labelled with `model`.
    pub fn csv_rows(&self, model: &str) -> String {
        let mut out = String::new();
        for c in &self.cells {
            out.push_str(&format!(
                "{model},{},{},{:.6},{:.6e},{}\n",
                c.dim, c.category, c.mean_gap, c.p_value, c.significant
            ));
        }
        out
    }

    pub fn to_csv(&self, model: &str) -> String {
        format!("{}\n{}", Self::CSV_HEADER, self.csv_rows(model))
    }

    /// Fixed-width table: one row per candidate, mean gaps per category,
    /// `*` marking p < alpha and `<all>` marking rows significant everywhere.
    pub fn to_table(&self, model: &str) -> String {
        let mut out = format!(
            "model {model}  split seed {}  alpha {}  discovery {}  test {}\n",
            self.split_seed, self.alpha, self.discovery_examples, self.test_examples
        );
        out.push_str(&format!("{:>6}", "dim"));
        for c in Category::ALL {
            out.push_str(&format!("{:>11}", c.name()));
        }
        out.push('\n');
        let all = self.all_category_dims();
        for cand in &self.candidates {
            out.push_str(&format!("{:>6}", cand.dim));
            for cat in Category::ALL {
                let cell = self.cells.iter().find(|c| c.dim == cand.dim && c.category == cat).expect("cell");
                let mark = if cell.significant { "*" } else { " " };
                out.push_str(&format!("{:>10.3}{mark}", cell.mean_gap));
            }
            if all.contains(&cand.dim) {
                out.push_str("  <all>");
            }
            out.push('\n');
        }
        out
    }
}

/// Discover `top_n` candidates on one random half of `dev` and test them per
/// category on the other half.
pub fn significance_report<F: Scalar>(
    model: &Seq2Seq<F>,
    dev: &[InflectionExample],
    top_n: usize,
    alpha: f64,
    split_seed: u64,
) -> Result<SignificanceReport> {
    let sites = collect_sites(model, dev)?;
    significance_from_sites(&sites, dev.len(), top_n, alpha, split_seed)
}

/// [`significance_report`] over already collected site activations;
/// `n_examples` is the size of the example list the sites index into.
pub fn significance_from_sites(
    sites: &SiteActivations,
    n_examples: usize,
    top_n: usize,
    alpha: f64,
    split_seed: u64,
) -> Result<SignificanceReport> {
    let mut order: Vec<usize> = (0..n_examples).collect();
    let mut rng: ChaCha8Rng = rng_for(split_seed, "probe-split");
    order.shuffle(&mut rng);
    let half = n_examples / 2;
    let mut in_discovery = vec![false; n_examples];
    for &i in &order[..half] {
        in_discovery[i] = true;
    }

    let g_a = sites.rows(|i, ev| in_discovery[i] && ev.is_some());
    let n_a = sites.rows(|i, ev| in_discovery[i] && ev.is_none());
    let candidates = rank_dimensions(&g_a, &n_a, top_n)?;

    let n_b = sites.rows(|i, ev| !in_discovery[i] && ev.is_none());
    if n_b.nrows() == 0 {
        return Err(Error::EmptyGroup("N".into()));
    }
    let mut cells = Vec::with_capacity(top_n * Category::ALL.len());
    for cand in &candidates {
        let control = n_b.column(cand.dim).to_vec();
        for cat in Category::ALL {
            let g_b = sites.rows(|i, ev| !in_discovery[i] && ev.is_some_and(|e| cat.contains(e)));
            if g_b.nrows() == 0 {
                return Err(Error::EmptyGroup(cat.name().into()));
            }
            let sample = g_b.column(cand.dim).to_vec();
            let mean_gap = mean_activation(&sample)? - mean_activation(&control)?;
            let p_value = match welch_t_test(&sample, &control) {
                Ok(t) => t.p,
                Err(Error::DegenerateVariance) => 1.0,
                Err(Error::EmptyGroup(_)) => return Err(Error::EmptyGroup(cat.name().into())),
                Err(e) => return Err(e),
            };
            cells.push(SignificanceCell { dim: cand.dim, category: cat, mean_gap, p_value, significant: p_value < alpha });
        }
    }
    Ok(SignificanceReport {
        split_seed,
        alpha,
        candidates,
        cells,
        discovery_examples: half,
        test_examples: n_examples - half,
    })
}
