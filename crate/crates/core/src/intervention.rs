// SPDX-License-Identifier: MIT OR Apache-2.0

//! Scaling interventions on encoder traces.
//!
//! Each gradating nominative is encoded once. For every factor `x` the
//! chosen dimensions are multiplied by `x` at every character of the
//! nominative's gradation site, the trace is decoded greedily and the
//! output is sorted into gold, alternate (gradation failed to apply) or
//! nonce.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::Scalar;
use crate::dataset::InflectionExample;
use crate::error::{Error, Result};
use crate::rules::{categorize_output, classify_pair, ungrade_with_event, OutputCategory, Span};
use crate::seed::rng_for;
use crate::seq2seq::{EncoderTrace, InterventionHook, Seq2Seq};

/// The integers 1, 0, −1, …, −25.
pub fn default_factors() -> Vec<f64> {
    (-25..=1).rev().map(f64::from).collect()
}

/// Which characters of the nominative's alternation cluster are scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SiteRule {
    /// Every character of the cluster ("kk" in `luukku`).
    #[default]
    Span,
    /// Only the final character of the cluster.
    Final,
}

impl SiteRule {
    pub fn positions(self, nom_span: Span) -> Vec<usize> {
        match self {
            SiteRule::Span => nom_span.positions().collect(),
            SiteRule::Final => vec![nom_span.end - 1],
        }
    }
}

impl std::str::FromStr for SiteRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "span" => Ok(SiteRule::Span),
            "final" => Ok(SiteRule::Final),
            other => Err(Error::InvalidConfig(format!("unknown site rule {other:?}"))),
        }
    }
}

impl std::fmt::Display for SiteRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SiteRule::Span => "span",
            SiteRule::Final => "final",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Largest n tried when tuning; also the random baseline's k.
    pub max_n: usize,
    pub factors: Vec<f64>,
    pub site: SiteRule,
    pub random_seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { max_n: 5, factors: default_factors(), site: SiteRule::Span, random_seed: 1 }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_n == 0 {
            return Err(Error::InvalidConfig("sweep.max_n must be positive".into()));
        }
        if self.factors.is_empty() || self.factors.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidConfig("sweep.factors must be a non-empty list of finite numbers".into()));
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |e: &dyn std::fmt::Display| Error::InvalidConfig(format!("sweep.{key} = {value:?}: {e}"));
        match key {
            "max_n" => self.max_n = value.parse().map_err(|e| bad(&e))?,
            "site" => self.site = value.parse()?,
            "random_seed" => self.random_seed = value.parse().map_err(|e| bad(&e))?,
            "factors" => {
                self.factors = value
                    .split(',')
                    .map(|x| x.trim().parse::<f64>().map_err(|e| bad(&e)))
                    .collect::<Result<Vec<_>>>()?
            }
            _ => return Err(Error::InvalidConfig(format!("unknown key sweep.{key}"))),
        }
        Ok(())
    }

    pub fn to_key_values(&self) -> Vec<(String, String)> {
        let factors = self.factors.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        vec![
            ("max_n".into(), self.max_n.to_string()),
            ("factors".into(), factors),
            ("site".into(), self.site.to_string()),
            ("random_seed".into(), self.random_seed.to_string()),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub factor: f64,
    pub gold: usize,
    pub alternate: usize,
    pub nonce: usize,
}

impl SweepPoint {
    pub fn total(&self) -> usize {
        self.gold + self.alternate + self.nonce
    }

    fn pct(&self, n: usize) -> f64 {
        100.0 * n as f64 / self.total() as f64
    }

    pub fn gold_pct(&self) -> f64 {
        self.pct(self.gold)
    }

    pub fn alternate_pct(&self) -> f64 {
        self.pct(self.alternate)
    }

    pub fn nonce_pct(&self) -> f64 {
        self.pct(self.nonce)
    }
}

/// Output categories as a function of the scaling factor.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCurve {
    /// `T1`..`T5`, `TR`, or a caller-chosen name.
    pub label: String,
    pub dims: Vec<usize>,
    pub points: Vec<SweepPoint>,
}

impl SweepCurve {
    pub fn point(&self, factor: f64) -> Option<&SweepPoint> {
        self.points.iter().find(|p| p.factor == factor)
    }

    /// Point with the highest alternate count; ties go to the earlier factor
    /// in grid order.
    pub fn peak_alternate(&self) -> &SweepPoint {
        let mut best = &self.points[0];
        for p in &self.points[1..] {
            if p.alternate > best.alternate {
                best = p;
            }
        }
        best
    }

    pub const CSV_HEADER: &'static str = "model,dims,label,factor,gold_pct,alternate_pct,nonce_pct";

    pub fn csv_rows(&self, model: &str) -> String {
        let dims = self.dims.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
        let mut out = String::new();
        for p in &self.points {
            out.push_str(&format!(
                "{model},{dims},{},{},{:.4},{:.4},{:.4}\n",
                self.label,
                p.factor,
                p.gold_pct(),
                p.alternate_pct(),
                p.nonce_pct()
            ));
        }
        out
    }
}

pub fn curves_csv(model: &str, curves: &[SweepCurve]) -> String {
    let mut out = format!("{}\n", SweepCurve::CSV_HEADER);
    for c in curves {
        out.push_str(&c.csv_rows(model));
    }
    out
}

/// Gradating examples encoded once, with their hook sites and alternates.
pub struct SweepSet<F: Scalar = f32> {
    traces: Vec<EncoderTrace<F>>,
    sites: Vec<Vec<usize>>,
    gold: Vec<String>,
    alternate: Vec<String>,
}

impl<F: Scalar> SweepSet<F> {
    /// Every example must verify as gradating.
    pub fn new(model: &Seq2Seq<F>, examples: &[InflectionExample], site: SiteRule) -> Result<Self> {
        let mut sites = Vec::with_capacity(examples.len());
        let mut alternate = Vec::with_capacity(examples.len());
        for e in examples {
            let event = classify_pair(&e.nominative, &e.genitive)?
                .event
                .ok_or_else(|| Error::NotGradating(e.nominative.clone()))?;
            sites.push(site.positions(event.nom_span));
            alternate.push(ungrade_with_event(&e.genitive, &event)?);
        }
        let words: Vec<&str> = examples.iter().map(|e| e.nominative.as_str()).collect();
        let traces = model.encode_batch(&words)?;
        let gold = examples.iter().map(|e| e.genitive.clone()).collect();
        Ok(SweepSet { traces, sites, gold, alternate })
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    /// Decoded outputs with `dims` scaled by `factor` at every site.
    pub fn outputs(&self, model: &Seq2Seq<F>, dims: &[usize], factor: f64) -> Result<Vec<String>> {
        let mut hooked = self.traces.clone();
        for (trace, sites) in hooked.iter_mut().zip(&self.sites) {
            trace.apply(&InterventionHook { dims: dims.to_vec(), positions: sites.clone(), factor })?;
        }
        Ok(model.decode_batch(&hooked))
    }

    /// Decoded outputs of the untouched traces.
    pub fn plain_outputs(&self, model: &Seq2Seq<F>) -> Vec<String> {
        model.decode_batch(&self.traces)
    }

    fn point(&self, outputs: &[String], factor: f64) -> SweepPoint {
        let mut p = SweepPoint { factor, gold: 0, alternate: 0, nonce: 0 };
        for ((out, gold), alt) in outputs.iter().zip(&self.gold).zip(&self.alternate) {
            match categorize_output(out, gold, alt) {
                OutputCategory::Gold => p.gold += 1,
                OutputCategory::Alternate => p.alternate += 1,
                OutputCategory::Nonce => p.nonce += 1,
            }
        }
        p
    }

    pub fn sweep(&self, model: &Seq2Seq<F>, dims: &[usize], factors: &[f64], label: &str) -> Result<SweepCurve> {
        if dims.is_empty() {
            return Err(Error::InvalidConfig("sweep needs at least one dimension".into()));
        }
        if self.is_empty() {
            return Err(Error::EmptyEvalSet);
        }
        let points = factors
            .iter()
            .map(|&x| Ok(self.point(&self.outputs(model, dims, x)?, x)))
            .collect::<Result<Vec<_>>>()?;
        Ok(SweepCurve { label: label.to_string(), dims: dims.to_vec(), points })
    }
}

/// Sweep `factors` over `dims` on gradating `examples`.
pub fn run_sweep<F: Scalar>(
    model: &Seq2Seq<F>,
    examples: &[InflectionExample],
    dims: &[usize],
    factors: &[f64],
) -> Result<SweepCurve> {
    SweepSet::new(model, examples, SiteRule::Span)?.sweep(model, dims, factors, &format!("T{}", dims.len()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tuned {
    pub best_n: usize,
    /// Factor of the best curve's alternate peak.
    pub best_factor: f64,
    /// One curve per tried n, labelled `T<n>`.
    pub curves: Vec<SweepCurve>,
}

impl Tuned {
    pub fn best_curve(&self) -> &SweepCurve {
        self.curves.iter().find(|c| c.dims.len() == self.best_n).expect("best curve present")
    }
}

/// Pick the prefix length of `ranked` whose curve has the highest alternate
/// peak; ties go to the smaller n.
pub fn tune_top_n<F: Scalar>(
    model: &Seq2Seq<F>,
    set: &SweepSet<F>,
    ranked: &[usize],
    n_range: std::ops::RangeInclusive<usize>,
    factors: &[f64],
) -> Result<Tuned> {
    if *n_range.start() == 0 || *n_range.end() > ranked.len() || n_range.is_empty() {
        return Err(Error::InvalidConfig(format!("n range {n_range:?} with {} ranked dimensions", ranked.len())));
    }
    let curves =
        n_range.map(|n| set.sweep(model, &ranked[..n], factors, &format!("T{n}"))).collect::<Result<Vec<_>>>()?;
    Ok(select_best(curves))
}

/// Choice rule of [`tune_top_n`] over already computed `T<n>` curves.
pub fn select_best(curves: Vec<SweepCurve>) -> Tuned {
    let mut best = 0;
    for (i, c) in curves.iter().enumerate() {
        if c.peak_alternate().alternate > curves[best].peak_alternate().alternate {
            best = i;
        }
    }
    Tuned { best_n: curves[best].dims.len(), best_factor: curves[best].peak_alternate().factor, curves }
}

/// `k` distinct dimensions out of `0..dim`, avoiding `exclude`, seeded.
pub fn random_dims(dim: usize, k: usize, exclude: &[usize], seed: u64) -> Result<Vec<usize>> {
    let excluded: BTreeSet<usize> = exclude.iter().copied().collect();
    let mut pool: Vec<usize> = (0..dim).filter(|d| !excluded.contains(d)).collect();
    if k > pool.len() {
        return Err(Error::InvalidConfig(format!("cannot draw {k} of {} dimensions", pool.len())));
    }
    let mut rng: ChaCha8Rng = rng_for(seed, "random-dims");
    pool.shuffle(&mut rng);
    pool.truncate(k);
    Ok(pool)
}

/// Sweep over `k` random dimensions that avoid the discovered ones.
pub fn random_baseline<F: Scalar>(
    model: &Seq2Seq<F>,
    set: &SweepSet<F>,
    k: usize,
    exclude: &[usize],
    factors: &[f64],
    seed: u64,
) -> Result<SweepCurve> {
    let dims = random_dims(model.trace_dim(), k, exclude, seed)?;
    set.sweep(model, &dims, factors, "TR")
}

/// Per-model curve family: `T1`..`T<len(ranked)>` plus `TR`.
#[derive(Debug, Clone, PartialEq)]
pub struct AppendixCurves {
    pub tuned: Tuned,
    pub random: SweepCurve,
}

impl AppendixCurves {
    pub fn all(&self) -> impl Iterator<Item = &SweepCurve> {
        self.tuned.curves.iter().chain(std::iter::once(&self.random))
    }

    /// Alternate% and gold% of the tuned setting and of the random baseline
    /// at the tuned factor.
    pub fn separation(&self) -> Separation {
        let best = self.tuned.best_curve().point(self.tuned.best_factor).expect("tuned factor on grid");
        let random = self.random.point(self.tuned.best_factor).expect("baseline on same grid");
        Separation {
            n: self.tuned.best_n,
            factor: self.tuned.best_factor,
            discovered_alternate_pct: best.alternate_pct(),
            random_alternate_pct: random.alternate_pct(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Separation {
    pub n: usize,
    pub factor: f64,
    pub discovered_alternate_pct: f64,
    pub random_alternate_pct: f64,
}

impl Separation {
    /// Discovered dimensions beat the baseline strictly and by at least 5×
    /// or 20 percentage points.
    pub fn separates(&self) -> bool {
        let (d, r) = (self.discovered_alternate_pct, self.random_alternate_pct);
        d > r && (d >= 5.0 * r || d - r >= 20.0)
    }
}

/// Tune over the top 1..=max_n ranked dimensions and add a random baseline
/// of max_n dimensions that avoids them.
pub fn appendix_sweep<F: Scalar>(
    model: &Seq2Seq<F>,
    set: &SweepSet<F>,
    ranked: &[usize],
    config: &SweepConfig,
) -> Result<AppendixCurves> {
    config.validate()?;
    let n = config.max_n.min(ranked.len());
    let tuned = tune_top_n(model, set, ranked, 1..=n, &config.factors)?;
    let random = random_baseline(model, set, config.max_n, &ranked[..n], &config.factors, config.random_seed)?;
    Ok(AppendixCurves { tuned, random })
}
