// SPDX-License-Identifier: MIT OR Apache-2.0

#![allow(dead_code)]

use gradprobe::dataset::{build_vocab, generate_corpus, split, CorpusSpec, InflectionExample};
use gradprobe::seq2seq::{train, ModelConfig, Seq2Seq, TrainConfig};

/// Downsized architecture for gradient checks: embed 8, hidden 4.
pub fn tiny_config(seed: u64) -> ModelConfig {
    ModelConfig {
        embed_dim: 8,
        encoder_layers: 2,
        encoder_hidden: 4,
        decoder_hidden: 4,
        attention_dim: 4,
        max_decode_len: 10,
        init_range: 0.1,
        seed,
    }
}

pub const GRAD_PAIRS: [(&str, &str); 2] = [("pappi", "papin"), ("aika", "ajan")];

pub fn tiny_model(seed: u64) -> Seq2Seq<f64> {
    let examples: Vec<_> = GRAD_PAIRS.iter().map(|(n, g)| InflectionExample::new(*n, *g)).collect();
    let mut model = Seq2Seq::<f64>::new(tiny_config(seed), build_vocab(&examples)).unwrap();
    // Spread the weights beyond the init range so that every gate works away
    // from its linear regime.
    for p in model.params_mut() {
        p.mapv_inplace(|x| x * 8.0);
    }
    model
}

pub struct GradCheck {
    pub max_rel_error: f64,
    pub worst: String,
    pub entries: usize,
}

/// Central differences with step `h` on every parameter entry, compared with
/// the analytic gradient. The relative error is
/// `|a - n| / max(|a|, |n|, floor)`.
pub fn finite_difference_check(model: &mut Seq2Seq<f64>, batch: &[(&str, &str)], h: f64, floor: f64) -> GradCheck {
    let (_, analytic) = model.loss_and_grads(batch).unwrap();
    let mut out = GradCheck { max_rel_error: 0.0, worst: String::new(), entries: 0 };
    for (k, grad) in analytic.iter().enumerate() {
        let name = model.param_names()[k].clone();
        let (rows, cols) = model.params()[k].dim();
        for r in 0..rows {
            for c in 0..cols {
                let original = model.params()[k][[r, c]];
                model.params_mut()[k][[r, c]] = original + h;
                let plus = model.loss_and_grads(batch).unwrap().0;
                model.params_mut()[k][[r, c]] = original - h;
                let minus = model.loss_and_grads(batch).unwrap().0;
                model.params_mut()[k][[r, c]] = original;
                let numeric = (plus - minus) / (2.0 * h);
                let a = grad[[r, c]];
                let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(floor);
                out.entries += 1;
                if rel > out.max_rel_error {
                    out.max_rel_error = rel;
                    out.worst = format!("{name}[{r},{c}] analytic {a:e} numeric {numeric:e}");
                }
            }
        }
    }
    out
}

/// Neumaier-compensated mean, independent of the library's plain sum.
pub fn oracle_mean(xs: &[f64]) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for &x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    (sum + comp) / xs.len() as f64
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Two-sided tail probability of Student's t with `nu` degrees of freedom.
/// Substituting `t = sqrt(nu) tan(theta)` turns the density into
/// `cos(theta)^(nu - 1)` on `[0, pi/2)`, so no gamma function is needed.
pub fn oracle_two_sided_p(t: f64, nu: f64) -> f64 {
    let f = move |theta: f64| theta.cos().max(0.0).powf(nu - 1.0);
    let theta_t = (t.abs() / nu.sqrt()).atan();
    let half_pi = std::f64::consts::FRAC_PI_2;
    let total = adaptive_simpson(&f, 0.0, half_pi, 1e-15);
    let tail = adaptive_simpson(&f, theta_t, half_pi, 1e-15);
    (tail / total).clamp(0.0, 1.0)
}

/// Welch statistic, degrees of freedom and two-sided p from first principles.
pub fn oracle_welch(a: &[f64], b: &[f64]) -> (f64, f64, f64) {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, mb) = (oracle_mean(a), oracle_mean(b));
    let va: f64 = a.iter().map(|x| (x - ma) * (x - ma)).sum::<f64>() / (na - 1.0);
    let vb: f64 = b.iter().map(|x| (x - mb) * (x - mb)).sum::<f64>() / (nb - 1.0);
    let se2 = va / na + vb / nb;
    let t = (ma - mb) / se2.sqrt();
    let nu = se2 * se2 / ((va / na).powi(2) / (na - 1.0) + (vb / nb).powi(2) / (nb - 1.0));
    (t, nu, oracle_two_sided_p(t, nu))
}

/// 400-pair corpus with ten pairs of every pattern, split 0.9.
pub fn toy_corpus() -> (Vec<InflectionExample>, Vec<InflectionExample>) {
    let mut spec = CorpusSpec::empty(400, 3);
    spec.quotas = [10; 17];
    let corpus = generate_corpus(&spec).unwrap();
    split(&corpus, 0.9, 3).unwrap()
}

pub fn toy_model_config() -> ModelConfig {
    ModelConfig { embed_dim: 16, encoder_hidden: 16, decoder_hidden: 16, attention_dim: 16, ..ModelConfig::default() }
}

/// A briefly trained small model with its train and dev sets.
pub fn toy_trained(steps: usize) -> (Seq2Seq<f32>, Vec<InflectionExample>, Vec<InflectionExample>) {
    let (train_set, dev_set) = toy_corpus();
    let mut model = Seq2Seq::<f32>::new(toy_model_config(), build_vocab(&train_set)).unwrap();
    let tc = TrainConfig { steps, batch_size: 16, eval_interval: 20, decay_start: 40, decay_every: 10, ..TrainConfig::default() };
    train(&mut model, &train_set, &dev_set, &tc).unwrap();
    (model, train_set, dev_set)
}
