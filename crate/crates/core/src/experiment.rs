// SPDX-License-Identifier: MIT OR Apache-2.0

//! End-to-end runs: configuration, data preparation, (cached) training and
//! per-model analysis.
//!
//! Configuration files are flat `key = value` lines. Keys are routed by
//! prefix: `corpus.`, `data.`, `model.`, `train.`, `probe.`, `sweep.`, plus
//! the top-level `seeds` list (`1,2,5` or `1..10`). `#` starts a comment.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::dataset::{
    balance_probe_set, build_vocab, generate_corpus, generate_probe_pool, split, to_tsv, CorpusSpec, InflectionExample,
};
use crate::error::{Error, Result};
use crate::intervention::{appendix_sweep, AppendixCurves, Separation, SweepConfig, SweepSet};
use crate::probing::{significance_report, SignificanceReport};
use crate::seed::derive_seed;
use crate::seq2seq::{
    checkpoint_digest, evaluate, load_checkpoint, save_checkpoint, train, Accuracy, CurvePoint, ModelConfig, Seq2Seq,
    TrainConfig, TrainReport, CHECKPOINT_VERSION,
};

/// Split and probe-set construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DataConfig {
    pub train_fraction: f64,
    pub split_seed: u64,
    /// Gradating examples per stop in the balanced evaluation set.
    pub probe_per_consonant: usize,
    pub pool_seed: u64,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig { train_fraction: 0.9, split_seed: 1, probe_per_consonant: 54, pool_seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeConfig {
    pub top_n: usize,
    pub alpha: f64,
    pub split_seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig { top_n: 5, alpha: 0.005, split_seed: 1 }
    }
}

fn parse_field<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::InvalidConfig(format!("{key} = {value:?}: not a valid value")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seeds: Vec<u64>,
    pub corpus: CorpusSpec,
    pub data: DataConfig,
    /// Template for every model; `seed` is replaced per run.
    pub model: ModelConfig,
    /// Template for every run; `seed` is replaced per run.
    pub train: TrainConfig,
    pub probe: ProbeConfig,
    pub sweep: SweepConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seeds: (1..=10).collect(),
            corpus: CorpusSpec::default(),
            data: DataConfig::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            probe: ProbeConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

pub fn parse_seeds(value: &str) -> Result<Vec<u64>> {
    let mut seeds = Vec::new();
    for part in value.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let (a, b): (u64, u64) = (parse_field("seeds", a.trim())?, parse_field("seeds", b.trim())?);
            if a > b {
                return Err(Error::InvalidConfig(format!("empty seed range {part}")));
            }
            seeds.extend(a..=b);
        } else {
            seeds.push(parse_field("seeds", part)?);
        }
    }
    if seeds.is_empty() {
        return Err(Error::InvalidConfig("no seeds".into()));
    }
    Ok(seeds)
}

impl ExperimentConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let Some((section, rest)) = key.split_once('.') else {
            return match key {
                "seeds" => {
                    self.seeds = parse_seeds(value)?;
                    Ok(())
                }
                _ => Err(Error::InvalidConfig(format!("unknown key {key:?}"))),
            };
        };
        match section {
            "corpus" => self.corpus.set(rest, value),
            "model" => self.model.set(rest, value),
            "train" => self.train.set(rest, value),
            "sweep" => self.sweep.set(rest, value),
            "data" => {
                match rest {
                    "train_fraction" => self.data.train_fraction = parse_field(key, value)?,
                    "split_seed" => self.data.split_seed = parse_field(key, value)?,
                    "probe_per_consonant" => self.data.probe_per_consonant = parse_field(key, value)?,
                    "pool_seed" => self.data.pool_seed = parse_field(key, value)?,
                    _ => return Err(Error::InvalidConfig(format!("unknown key {key:?}"))),
                }
                Ok(())
            }
            "probe" => {
                match rest {
                    "top_n" => self.probe.top_n = parse_field(key, value)?,
                    "alpha" => self.probe.alpha = parse_field(key, value)?,
                    "split_seed" => self.probe.split_seed = parse_field(key, value)?,
                    _ => return Err(Error::InvalidConfig(format!("unknown key {key:?}"))),
                }
                Ok(())
            }
            _ => Err(Error::InvalidConfig(format!("unknown section in key {key:?}"))),
        }
    }

    /// Defaults overridden by the lines of `text`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = ExperimentConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::MalformedRow { line: i + 1, reason: "expected key = value".into() })?;
            config.set(key.trim(), value.trim()).map_err(|e| Error::MalformedRow { line: i + 1, reason: e.to_string() })?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn validate(&self) -> Result<()> {
        self.corpus.validate()?;
        self.model.validate()?;
        self.train.validate()?;
        self.sweep.validate()?;
        if !(self.data.train_fraction > 0.0 && self.data.train_fraction < 1.0) {
            return Err(Error::InvalidConfig("data.train_fraction must lie in (0, 1)".into()));
        }
        if self.probe.top_n == 0 || !(self.probe.alpha > 0.0 && self.probe.alpha < 1.0) {
            return Err(Error::InvalidConfig("probe.top_n must be positive and probe.alpha in (0, 1)".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("no seeds".into()));
        }
        Ok(())
    }

    pub fn to_key_values(&self) -> Vec<(String, String)> {
        let seeds = self.seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(",");
        let mut out = vec![("seeds".to_string(), seeds)];
        let sections: [(&str, Vec<(String, String)>); 6] = [
            ("corpus", self.corpus.to_key_values()),
            (
                "data",
                vec![
                    ("train_fraction".into(), self.data.train_fraction.to_string()),
                    ("split_seed".into(), self.data.split_seed.to_string()),
                    ("probe_per_consonant".into(), self.data.probe_per_consonant.to_string()),
                    ("pool_seed".into(), self.data.pool_seed.to_string()),
                ],
            ),
            ("model", self.model.to_key_values()),
            ("train", self.train.to_key_values()),
            (
                "probe",
                vec![
                    ("top_n".into(), self.probe.top_n.to_string()),
                    ("alpha".into(), self.probe.alpha.to_string()),
                    ("split_seed".into(), self.probe.split_seed.to_string()),
                ],
            ),
            ("sweep", self.sweep.to_key_values()),
        ];
        for (section, kvs) in sections {
            out.extend(kvs.into_iter().map(|(k, v)| (format!("{section}.{k}"), v)));
        }
        out
    }

    pub fn to_text(&self) -> String {
        self.to_key_values().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// Model and training configuration of the run with `seed`.
    pub fn for_seed(&self, seed: u64) -> (ModelConfig, TrainConfig) {
        (ModelConfig { seed, ..self.model.clone() }, TrainConfig { seed, ..self.train.clone() })
    }
}

/// Corpus, split and balanced evaluation set.
#[derive(Debug, Clone)]
pub struct Data {
    pub corpus: Vec<InflectionExample>,
    pub train: Vec<InflectionExample>,
    /// Raw held-out split.
    pub dev: Vec<InflectionExample>,
    /// `dev` balanced to `probe_per_consonant` gradating pairs per stop;
    /// used for accuracy, curves, probing and sweeps.
    pub probe: Vec<InflectionExample>,
}

impl Data {
    pub fn probe_gradating(&self) -> Vec<InflectionExample> {
        self.probe.iter().filter(|e| e.is_gradating()).cloned().collect()
    }
}

pub fn prepare_data(config: &ExperimentConfig) -> Result<Data> {
    let corpus = generate_corpus(&config.corpus)?;
    let (train, dev) = split(&corpus, config.data.train_fraction, config.data.split_seed)?;
    let exclude: HashSet<String> = corpus.iter().map(|e| e.nominative.clone()).collect();
    let pool = generate_probe_pool(&config.corpus, &exclude, config.data.probe_per_consonant, config.data.pool_seed)?;
    let probe = balance_probe_set(&dev, &pool, config.data.probe_per_consonant, config.data.split_seed)?;
    Ok(Data { corpus, train, dev, probe })
}

pub fn train_seed(config: &ExperimentConfig, data: &Data, seed: u64) -> Result<(Seq2Seq<f32>, TrainReport)> {
    let (mc, tc) = config.for_seed(seed);
    let mut model = Seq2Seq::new(mc, build_vocab(&data.train))?;
    let report = train(&mut model, &data.train, &data.probe, &tc)?;
    Ok((model, report))
}

/// Identifies a training run: configuration, training and evaluation data,
/// checkpoint format and crate version.
pub fn run_key(config: &ExperimentConfig, data: &Data, seed: u64) -> String {
    let (mc, tc) = config.for_seed(seed);
    let mut h = Sha256::new();
    h.update(env!("CARGO_PKG_VERSION").as_bytes());
    h.update(CHECKPOINT_VERSION.to_le_bytes());
    for (k, v) in mc.to_key_values().into_iter().chain(tc.to_key_values()) {
        h.update(format!("{k}={v}\n").as_bytes());
    }
    h.update(to_tsv(&data.train).as_bytes());
    h.update(to_tsv(&data.probe).as_bytes());
    hex::encode(h.finalize())
}

fn curve_text(curve: &[CurvePoint]) -> String {
    let mut out = String::from("step,dev_accuracy\n");
    for p in curve {
        let _ = writeln!(out, "{},{}", p.step, p.dev_accuracy);
    }
    out
}

pub fn parse_curve(text: &str) -> Result<Vec<CurvePoint>> {
    let mut lines = text.lines();
    if lines.next() != Some("step,dev_accuracy") {
        return Err(Error::MalformedRow { line: 1, reason: "curve header".into() });
    }
    lines
        .enumerate()
        .map(|(i, l)| {
            let bad = || Error::MalformedRow { line: i + 2, reason: "expected step,dev_accuracy".into() };
            let (s, a) = l.split_once(',').ok_or_else(bad)?;
            Ok(CurvePoint { step: s.parse().map_err(|_| bad())?, dev_accuracy: a.parse().map_err(|_| bad())? })
        })
        .collect()
}

/// A trained model with its development curve.
#[derive(Debug, Clone)]
pub struct Trained {
    pub seed: u64,
    pub model: Seq2Seq<f32>,
    pub curve: Vec<CurvePoint>,
}

/// Train, or reuse the checkpoint that an identical earlier run left in
/// `cache_dir`.
pub fn train_cached(config: &ExperimentConfig, data: &Data, seed: u64, cache_dir: &Path) -> Result<Trained> {
    let key = run_key(config, data, seed);
    let ckpt = cache_dir.join(format!("{key}.ckpt"));
    let curve_path = cache_dir.join(format!("{key}.curve.csv"));
    if ckpt.exists() && curve_path.exists() {
        let model = load_checkpoint(&ckpt)?;
        let curve = parse_curve(&fs::read_to_string(&curve_path).map_err(|e| Error::io(&curve_path, e))?)?;
        return Ok(Trained { seed, model, curve });
    }
    let (model, report) = train_seed(config, data, seed)?;
    fs::create_dir_all(cache_dir).map_err(|e| Error::io(cache_dir, e))?;
    // Write the curve first: a checkpoint without a curve is not a cache hit.
    fs::write(&curve_path, curve_text(&report.curve)).map_err(|e| Error::io(&curve_path, e))?;
    let tmp = cache_dir.join(format!("{key}.ckpt.tmp"));
    save_checkpoint(&model, &tmp)?;
    fs::rename(&tmp, &ckpt).map_err(|e| Error::io(&ckpt, e))?;
    Ok(Trained { seed, model, curve: report.curve })
}

/// Everything measured on one trained model.
#[derive(Debug, Clone)]
pub struct SeedAnalysis {
    pub seed: u64,
    pub digest: String,
    pub accuracy: Accuracy,
    pub significance: SignificanceReport,
    pub appendix: AppendixCurves,
    pub separation: Separation,
    /// Hooking the tuned dimensions with factor 1 reproduced every unhooked
    /// output byte for byte.
    pub identity_exact: bool,
}

impl SeedAnalysis {
    pub fn ranked_dims(&self) -> Vec<usize> {
        self.significance.candidates.iter().map(|c| c.dim).collect()
    }
}

/// Random-baseline seed of the model trained with `seed`.
pub fn baseline_seed(config: &ExperimentConfig, seed: u64) -> u64 {
    derive_seed(config.sweep.random_seed, &format!("baseline-{seed}"))
}

pub fn analyze(model: &Seq2Seq<f32>, data: &Data, config: &ExperimentConfig, seed: u64) -> Result<SeedAnalysis> {
    let accuracy = evaluate(model, &data.probe)?;
    let significance = significance_report(model, &data.probe, config.probe.top_n, config.probe.alpha, config.probe.split_seed)?;
    let ranked: Vec<usize> = significance.candidates.iter().map(|c| c.dim).collect();
    let grad = data.probe_gradating();
    let set = SweepSet::new(model, &grad, config.sweep.site)?;
    let sweep = SweepConfig { random_seed: baseline_seed(config, seed), ..config.sweep.clone() };
    let appendix = appendix_sweep(model, &set, &ranked, &sweep)?;
    let separation = appendix.separation();
    let words: Vec<&str> = grad.iter().map(|e| e.nominative.as_str()).collect();
    let unhooked = model.predict(&words)?;
    let identity_exact = set.outputs(model, &ranked[..appendix.tuned.best_n], 1.0)? == unhooked;
    Ok(SeedAnalysis {
        seed,
        digest: checkpoint_digest(model),
        accuracy,
        significance,
        appendix,
        separation,
        identity_exact,
    })
}

pub fn model_name(seed: u64) -> String {
    format!("model-{seed}")
}

fn pct(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.1}")).unwrap_or_else(|| "-".into())
}

/// Per-model accuracy table with a mean row.
pub fn accuracy_table(rows: &[(u64, Accuracy)]) -> String {
    let mut out = format!("{:<10}{:>10}{:>12}{:>16}\n", "model", "overall", "gradating", "non-gradating");
    for (seed, a) in rows {
        let _ = writeln!(out, "{:<10}{:>10.1}{:>12}{:>16}", model_name(*seed), a.overall, pct(a.gradating), pct(a.non_gradating));
    }
    if !rows.is_empty() {
        let n = rows.len() as f64;
        let mean = |f: &dyn Fn(&Accuracy) -> Option<f64>| -> Option<f64> {
            let v: Vec<f64> = rows.iter().filter_map(|(_, a)| f(a)).collect();
            (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
        };
        let overall = rows.iter().map(|(_, a)| a.overall).sum::<f64>() / n;
        let _ = writeln!(
            out,
            "{:<10}{:>10.1}{:>12}{:>16}",
            "mean",
            overall,
            pct(mean(&|a| a.gradating)),
            pct(mean(&|a| a.non_gradating))
        );
    }
    out
}

pub const ACCURACY_HEADER: &str = "model,overall,gradating,non_gradating,n_gradating,n_non_gradating";

pub fn accuracy_csv(rows: &[(u64, Accuracy)]) -> String {
    let mut out = format!("{ACCURACY_HEADER}\n");
    for (seed, a) in rows {
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            model_name(*seed),
            a.overall,
            opt(a.gradating),
            opt(a.non_gradating),
            a.n_gradating,
            a.n_non_gradating
        );
    }
    out
}

pub const SEPARATION_HEADER: &str = "model,best_n,factor,discovered_alternate_pct,random_alternate_pct,random_dims,separates";

pub fn separation_csv(analyses: &[SeedAnalysis]) -> String {
    let mut out = format!("{SEPARATION_HEADER}\n");
    for a in analyses {
        let s = &a.separation;
        let dims = a.appendix.random.dims.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
        let _ = writeln!(
            out,
            "{},{},{},{:.4},{:.4},{dims},{}",
            model_name(a.seed),
            s.n,
            s.factor,
            s.discovered_alternate_pct,
            s.random_alternate_pct,
            s.separates()
        );
    }
    out
}

/// Provenance record written next to every run's outputs.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Manifest {
    pub command: Vec<String>,
    pub version: String,
    pub seeds: Vec<u64>,
    pub config: Vec<(String, String)>,
    pub checkpoints: Vec<CheckpointEntry>,
    pub outputs: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CheckpointEntry {
    pub seed: u64,
    pub path: PathBuf,
    pub digest: String,
}

impl Manifest {
    pub fn new(command: Vec<String>, config: &ExperimentConfig) -> Self {
        Manifest {
            command,
            version: env!("CARGO_PKG_VERSION").to_string(),
            seeds: config.seeds.clone(),
            config: config.to_key_values(),
            checkpoints: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_text_round_trip() {
        let text = "# small run\nseeds = 1..3, 7\nmodel.embed_dim = 32\ntrain.steps=100 # short\nprobe.alpha = 0.01\nsweep.site = final\ndata.probe_per_consonant = 20\ncorpus.quota.pp-p = 12\n";
        let c = ExperimentConfig::parse(text).unwrap();
        assert_eq!(c.seeds, [1, 2, 3, 7]);
        assert_eq!((c.model.embed_dim, c.train.steps, c.probe.alpha), (32, 100, 0.01));
        assert_eq!(ExperimentConfig::parse(&c.to_text()).unwrap(), c);
        assert_eq!(ExperimentConfig::parse("").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn bad_lines_name_their_line() {
        for text in ["seeds = 1\nmodel.nope = 3", "seeds = 1\njust words", "x\n", "seeds = 3..1"] {
            match ExperimentConfig::parse(text) {
                Err(Error::MalformedRow { line, .. }) => assert!(line >= 1),
                other => panic!("{text:?} gave {other:?}"),
            }
        }
        assert!(ExperimentConfig::parse("train.steps = 0\ntrain.batch_size = 0").is_err());
    }

    #[test]
    fn seeds_override_per_run() {
        let c = ExperimentConfig::default();
        let (m, t) = c.for_seed(7);
        assert_eq!((m.seed, t.seed), (7, 7));
        assert_ne!(baseline_seed(&c, 1), baseline_seed(&c, 2));
    }
}
