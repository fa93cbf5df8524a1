// SPDX-License-Identifier: MIT OR Apache-2.0

//! SGD training with a step-decay schedule, and exact-match evaluation.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::Scalar;
use crate::dataset::InflectionExample;
use crate::error::{Error, Result};
use crate::seed::rng_for;

use super::Seq2Seq;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub steps: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Number of updates run at the initial rate.
    pub decay_start: usize,
    /// The rate is multiplied by `decay_factor` every `decay_every` updates
    /// after `decay_start`.
    pub decay_every: usize,
    pub decay_factor: f64,
    /// Global gradient norm ceiling; 0 disables clipping.
    pub clip_norm: f64,
    /// Dev accuracy is recorded every this many updates; 0 disables it.
    pub eval_interval: usize,
    /// Examples are length-sorted within pools of this many batches.
    pub length_pool: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            steps: 3000,
            batch_size: 64,
            learning_rate: 1.0,
            decay_start: 1500,
            decay_every: 500,
            decay_factor: 0.5,
            clip_norm: 5.0,
            eval_interval: 500,
            length_pool: 8,
            seed: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.length_pool == 0 || self.decay_every == 0 {
            return Err(Error::InvalidConfig("batch_size, length_pool and decay_every must be at least 1".into()));
        }
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.learning_rate) || !positive(self.decay_factor) || self.clip_norm.is_nan() || self.clip_norm < 0.0 {
            return Err(Error::InvalidConfig("learning_rate and decay_factor must be positive, clip_norm non-negative".into()));
        }
        Ok(())
    }

    /// Rate for the update with 0-based index `step`.
    pub fn learning_rate_at(&self, step: usize) -> f64 {
        if step < self.decay_start {
            self.learning_rate
        } else {
            let halvings = 1 + (step - self.decay_start) / self.decay_every;
            self.learning_rate * self.decay_factor.powi(halvings as i32)
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = || Error::InvalidConfig(format!("train.{key}={value}: not a valid value"));
        let count = |v: &str| v.parse::<usize>().map_err(|_| bad());
        let real = |v: &str| v.parse::<f64>().map_err(|_| bad());
        match key {
            "steps" => self.steps = count(value)?,
            "batch_size" => self.batch_size = count(value)?,
            "learning_rate" => self.learning_rate = real(value)?,
            "decay_start" => self.decay_start = count(value)?,
            "decay_every" => self.decay_every = count(value)?,
            "decay_factor" => self.decay_factor = real(value)?,
            "clip_norm" => self.clip_norm = real(value)?,
            "eval_interval" => self.eval_interval = count(value)?,
            "length_pool" => self.length_pool = count(value)?,
            "seed" => self.seed = value.parse().map_err(|_| bad())?,
            _ => return Err(Error::InvalidConfig(format!("unknown train key {key:?}"))),
        }
        Ok(())
    }

    pub fn to_key_values(&self) -> Vec<(String, String)> {
        [
            ("steps", self.steps.to_string()),
            ("batch_size", self.batch_size.to_string()),
            ("learning_rate", self.learning_rate.to_string()),
            ("decay_start", self.decay_start.to_string()),
            ("decay_every", self.decay_every.to_string()),
            ("decay_factor", self.decay_factor.to_string()),
            ("clip_norm", self.clip_norm.to_string()),
            ("eval_interval", self.eval_interval.to_string()),
            ("length_pool", self.length_pool.to_string()),
            ("seed", self.seed.to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub step: usize,
    pub dev_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub curve: Vec<CurvePoint>,
    /// Training loss of every update, in order.
    pub losses: Vec<f64>,
}

impl TrainReport {
    /// `step,dev_accuracy` CSV.
    pub fn curve_csv(&self) -> String {
        let mut out = String::from("step,dev_accuracy\n");
        for p in &self.curve {
            out.push_str(&format!("{},{:.4}\n", p.step, p.dev_accuracy));
        }
        out
    }
}

/// Exact-match accuracy in percent, overall and per stratum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Accuracy {
    pub overall: f64,
    /// `None` when the set has no examples of the stratum.
    pub gradating: Option<f64>,
    pub non_gradating: Option<f64>,
    pub n_gradating: usize,
    pub n_non_gradating: usize,
}

/// Endless epoch-wise batch order: shuffle, sort by length inside pools of
/// `length_pool` batches, cut into batches, shuffle the batches.
struct Batcher<'a> {
    examples: &'a [InflectionExample],
    batch_size: usize,
    pool: usize,
    rng: ChaCha8Rng,
    queue: Vec<Vec<usize>>,
}

impl<'a> Batcher<'a> {
    fn next(&mut self) -> Vec<usize> {
        if self.queue.is_empty() {
            let mut order: Vec<usize> = (0..self.examples.len()).collect();
            order.shuffle(&mut self.rng);
            let mut batches: Vec<Vec<usize>> = Vec::new();
            for pool in order.chunks(self.batch_size * self.pool) {
                let mut pool = pool.to_vec();
                pool.sort_by_key(|&i| (self.examples[i].nominative.chars().count(), self.examples[i].genitive.chars().count()));
                batches.extend(pool.chunks(self.batch_size).map(<[usize]>::to_vec));
            }
            batches.shuffle(&mut self.rng);
            batches.reverse();
            self.queue = batches;
        }
        self.queue.pop().expect("non-empty epoch")
    }
}

/// Run exactly `config.steps` SGD updates on `train_set`, recording dev
/// accuracy every `eval_interval` updates.
pub fn train<F: Scalar>(
    model: &mut Seq2Seq<F>,
    train_set: &[InflectionExample],
    dev_set: &[InflectionExample],
    config: &TrainConfig,
) -> Result<TrainReport> {
    config.validate()?;
    let mut report = TrainReport { curve: Vec::new(), losses: Vec::with_capacity(config.steps) };
    if config.steps == 0 {
        return Ok(report);
    }
    if train_set.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut batcher = Batcher {
        examples: train_set,
        batch_size: config.batch_size,
        pool: config.length_pool,
        rng: rng_for(config.seed, "batches"),
        queue: Vec::new(),
    };
    for update in 0..config.steps {
        let batch: Vec<(&str, &str)> = batcher
            .next()
            .into_iter()
            .map(|i| (train_set[i].nominative.as_str(), train_set[i].genitive.as_str()))
            .collect();
        let (loss, mut grads) = model.loss_and_grads(&batch)?;
        let norm = grads.iter().flatten().map(|g| g.to_f64().unwrap_or(f64::NAN).powi(2)).sum::<f64>().sqrt();
        if !norm.is_finite() {
            return Err(Error::NonFiniteLoss { step: model.step });
        }
        let mut scale = config.learning_rate_at(update);
        if config.clip_norm > 0.0 && norm > config.clip_norm {
            scale *= config.clip_norm / norm;
        }
        let scale = F::from_f64(-scale).expect("finite rate");
        for (p, g) in model.params.iter_mut().zip(grads.iter_mut()) {
            p.scaled_add(scale, g);
        }
        model.step += 1;
        report.losses.push(loss);
        if config.eval_interval > 0 && (update + 1) % config.eval_interval == 0 {
            let acc = evaluate(model, dev_set)?;
            report.curve.push(CurvePoint { step: update + 1, dev_accuracy: acc.overall });
        }
    }
    Ok(report)
}

/// Greedy exact-match accuracy on annotated examples.
pub fn evaluate<F: Scalar>(model: &Seq2Seq<F>, examples: &[InflectionExample]) -> Result<Accuracy> {
    if examples.is_empty() {
        return Err(Error::EmptyEvalSet);
    }
    let words: Vec<&str> = examples.iter().map(|e| e.nominative.as_str()).collect();
    let predictions = model.predict(&words)?;
    let correct: Vec<bool> = examples.iter().zip(&predictions).map(|(e, p)| *p == e.genitive).collect();
    Ok(accuracy_from(examples, &correct))
}

pub(crate) fn accuracy_from(examples: &[InflectionExample], correct: &[bool]) -> Accuracy {
    let (mut g, mut gc, mut n, mut nc) = (0usize, 0usize, 0usize, 0usize);
    for (e, &ok) in examples.iter().zip(correct) {
        if e.is_gradating() {
            g += 1;
            gc += ok as usize;
        } else {
            n += 1;
            nc += ok as usize;
        }
    }
    let pct = |c: usize, t: usize| if t == 0 { None } else { Some(100.0 * c as f64 / t as f64) };
    Accuracy {
        overall: 100.0 * (gc + nc) as f64 / (g + n) as f64,
        gradating: pct(gc, g),
        non_gradating: pct(nc, n),
        n_gradating: g,
        n_non_gradating: n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::classify_pair;

    #[test]
    fn schedule() {
        let c = TrainConfig::default();
        assert_eq!(c.learning_rate_at(0), 1.0);
        assert_eq!(c.learning_rate_at(1499), 1.0);
        assert_eq!(c.learning_rate_at(1500), 0.5);
        assert_eq!(c.learning_rate_at(1999), 0.5);
        assert_eq!(c.learning_rate_at(2000), 0.25);
        assert_eq!(c.learning_rate_at(2999), 0.125);
    }

    #[test]
    fn strata_recombine() {
        let ex = |n: &str, g: &str| InflectionExample::annotated(n, g, classify_pair(n, g).unwrap());
        let set = vec![ex("pappi", "papin"), ex("kana", "kanan"), ex("katto", "katon"), ex("tase", "taseen")];
        let acc = accuracy_from(&set, &[true, false, false, false]);
        assert_eq!((acc.gradating, acc.non_gradating), (Some(50.0), Some(0.0)));
        let weighted = (acc.gradating.unwrap() * 2.0 + acc.non_gradating.unwrap() * 2.0) / 4.0;
        assert_eq!(acc.overall, weighted);
        let all = accuracy_from(&set, &[true; 4]);
        assert_eq!((all.overall, all.gradating, all.non_gradating), (100.0, Some(100.0), Some(100.0)));
    }

    #[test]
    fn key_values_round_trip() {
        let c = TrainConfig { steps: 7, clip_norm: 0.0, ..TrainConfig::default() };
        let mut back = TrainConfig::default();
        for (k, v) in c.to_key_values() {
            back.set(&k, &v).unwrap();
        }
        assert_eq!(back, c);
    }
}
