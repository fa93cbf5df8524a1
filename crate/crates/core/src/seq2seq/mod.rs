// SPDX-License-Identifier: MIT OR Apache-2.0

//! Character-level attentional encoder-decoder.
//!
//! The encoder is a stack of bidirectional LSTMs; its top layer produces one
//! vector `h_t = f_t ⊕ b_t` per input character (the [`EncoderTrace`]). The
//! decoder is a single LSTM that attends over the trace with additive
//! (feed-forward) scoring and is initialised from the trace through a
//! `tanh` bridge, so every path from the input to the output passes
//! through the trace. An [`InterventionHook`] rescales chosen entries of a
//! trace after encoding and before decoding.

mod checkpoint;
mod train;

use ndarray::{Array2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Scalar, Tape, Var};
use crate::dataset::{Vocabulary, BOS, EOS, PAD};
use crate::error::{Error, Result};
use crate::seed::rng_for;

pub use checkpoint::{checkpoint_bytes, checkpoint_digest, load_checkpoint, save_checkpoint, CHECKPOINT_VERSION};
pub use train::{evaluate, train, Accuracy, CurvePoint, TrainConfig, TrainReport};

/// Architecture hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub embed_dim: usize,
    pub encoder_layers: usize,
    /// Per direction; the trace has twice this many dimensions.
    pub encoder_hidden: usize,
    pub decoder_hidden: usize,
    pub attention_dim: usize,
    pub max_decode_len: usize,
    /// Parameters start uniform in `[-init_range, init_range]`.
    pub init_range: f64,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            embed_dim: 500,
            encoder_layers: 2,
            encoder_hidden: 250,
            decoder_hidden: 250,
            attention_dim: 250,
            max_decode_len: 32,
            init_range: 0.1,
            seed: 1,
        }
    }
}

impl ModelConfig {
    pub fn trace_dim(&self) -> usize {
        2 * self.encoder_hidden
    }

    pub fn validate(&self) -> Result<()> {
        let sizes = [
            ("embed_dim", self.embed_dim),
            ("encoder_layers", self.encoder_layers),
            ("encoder_hidden", self.encoder_hidden),
            ("decoder_hidden", self.decoder_hidden),
            ("attention_dim", self.attention_dim),
            ("max_decode_len", self.max_decode_len),
        ];
        if let Some((name, _)) = sizes.iter().find(|(_, v)| *v == 0) {
            return Err(Error::InvalidConfig(format!("{name} must be at least 1")));
        }
        if !(self.init_range > 0.0 && self.init_range.is_finite()) {
            return Err(Error::InvalidConfig("init_range must be positive".into()));
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = || Error::InvalidConfig(format!("model.{key}={value}: not a valid value"));
        let count = |v: &str| v.parse::<usize>().map_err(|_| bad());
        match key {
            "embed_dim" => self.embed_dim = count(value)?,
            "encoder_layers" => self.encoder_layers = count(value)?,
            "encoder_hidden" => self.encoder_hidden = count(value)?,
            "decoder_hidden" => self.decoder_hidden = count(value)?,
            "attention_dim" => self.attention_dim = count(value)?,
            "max_decode_len" => self.max_decode_len = count(value)?,
            "init_range" => self.init_range = value.parse().map_err(|_| bad())?,
            "seed" => self.seed = value.parse().map_err(|_| bad())?,
            _ => return Err(Error::InvalidConfig(format!("unknown model key {key:?}"))),
        }
        Ok(())
    }

    pub fn to_key_values(&self) -> Vec<(String, String)> {
        [
            ("embed_dim", self.embed_dim.to_string()),
            ("encoder_layers", self.encoder_layers.to_string()),
            ("encoder_hidden", self.encoder_hidden.to_string()),
            ("decoder_hidden", self.decoder_hidden.to_string()),
            ("attention_dim", self.attention_dim.to_string()),
            ("max_decode_len", self.max_decode_len.to_string()),
            ("init_range", self.init_range.to_string()),
            ("seed", self.seed.to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }
}

/// Scale `dims` at `positions` of a trace by `factor`. Indices are 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct InterventionHook {
    pub dims: Vec<usize>,
    pub positions: Vec<usize>,
    pub factor: f64,
}

/// Top-layer encoder states, one row per input character.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderTrace<F = f32> {
    pub input: String,
    /// `[len, 2n]`; columns `0..n` are forward states, `n..2n` backward.
    pub states: Array2<F>,
}

impl<F: Scalar> EncoderTrace<F> {
    pub fn len(&self) -> usize {
        self.states.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.states.nrows() == 0
    }

    pub fn apply(&mut self, hook: &InterventionHook) -> Result<()> {
        let (len, dim) = self.states.dim();
        if let Some(d) = hook.dims.iter().find(|&&d| d >= dim) {
            return Err(Error::InvalidConfig(format!("hook dimension {d} outside 0..{dim}")));
        }
        if let Some(p) = hook.positions.iter().find(|&&p| p >= len) {
            return Err(Error::InvalidConfig(format!("hook position {p} outside {:?} (length {len})", self.input)));
        }
        let x = F::from_f64(hook.factor).expect("finite factor");
        for &p in &hook.positions {
            for &d in &hook.dims {
                self.states[[p, d]] = self.states[[p, d]] * x;
            }
        }
        Ok(())
    }
}

/// Positions of every parameter in [`Seq2Seq::params`].
#[derive(Debug, Clone)]
struct Layout {
    enc_embed: usize,
    /// `[w_x, w_h, b]` per `layer * 2 + direction`.
    enc: Vec<[usize; 3]>,
    bridge_w: usize,
    bridge_b: usize,
    dec_embed: usize,
    attn_wq: usize,
    attn_bq: usize,
    attn_wk: usize,
    attn_v: usize,
    dec_wx: usize,
    dec_wc: usize,
    dec_wh: usize,
    dec_b: usize,
    out_w: usize,
    out_b: usize,
}

/// Parameter names with their `(rows, cols)`, in storage order.
type Shapes = Vec<(String, (usize, usize))>;

fn param_layout(c: &ModelConfig, vocab: usize) -> (Shapes, Layout) {
    let mut shapes: Vec<(String, (usize, usize))> = Vec::new();
    let mut add = |name: String, shape: (usize, usize)| {
        shapes.push((name, shape));
        shapes.len() - 1
    };
    let (e, h, d, a) = (c.embed_dim, c.encoder_hidden, c.decoder_hidden, c.attention_dim);
    let enc_embed = add("enc_embed".into(), (vocab, e));
    let mut enc = Vec::new();
    for layer in 0..c.encoder_layers {
        let input = if layer == 0 { e } else { 2 * h };
        for dir in ["fwd", "bwd"] {
            enc.push([
                add(format!("enc.l{layer}.{dir}.w_x"), (input, 4 * h)),
                add(format!("enc.l{layer}.{dir}.w_h"), (h, 4 * h)),
                add(format!("enc.l{layer}.{dir}.b"), (1, 4 * h)),
            ]);
        }
    }
    let layout = Layout {
        enc_embed,
        enc,
        bridge_w: add("bridge.w".into(), (2 * h, d)),
        bridge_b: add("bridge.b".into(), (1, d)),
        dec_embed: add("dec_embed".into(), (vocab, e)),
        attn_wq: add("attn.w_q".into(), (d, a)),
        attn_bq: add("attn.b_q".into(), (1, a)),
        attn_wk: add("attn.w_k".into(), (2 * h, a)),
        attn_v: add("attn.v".into(), (a, 1)),
        dec_wx: add("dec.w_x".into(), (e, 4 * d)),
        dec_wc: add("dec.w_c".into(), (2 * h, 4 * d)),
        dec_wh: add("dec.w_h".into(), (d, 4 * d)),
        dec_b: add("dec.b".into(), (1, 4 * d)),
        out_w: add("out.w".into(), (d + 2 * h, vocab)),
        out_b: add("out.b".into(), (1, vocab)),
    };
    (shapes, layout)
}

/// Parameters placed on a tape on first use.
struct Bound<'m, F: Scalar> {
    params: &'m [Array2<F>],
    vars: Vec<Option<Var>>,
    trainable: bool,
}

impl<'m, F: Scalar> Bound<'m, F> {
    fn new(params: &'m [Array2<F>], trainable: bool) -> Self {
        Bound { params, vars: vec![None; params.len()], trainable }
    }

    fn get(&mut self, tape: &mut Tape<F>, i: usize) -> Var {
        if let Some(v) = self.vars[i] {
            return v;
        }
        let value = self.params[i].clone();
        let v = if self.trainable { tape.param(value) } else { tape.constant(value) };
        self.vars[i] = Some(v);
        v
    }
}

/// Decoder state carried between steps.
struct DecoderState {
    s: Var,
    c: Var,
    memory: Var,
    keys: Var,
    lengths: Vec<usize>,
}

/// An attentional BiLSTM encoder-decoder with its vocabulary.
#[derive(Debug, Clone)]
pub struct Seq2Seq<F: Scalar = f32> {
    config: ModelConfig,
    vocab: Vocabulary,
    names: Vec<String>,
    params: Vec<Array2<F>>,
    layout: Layout,
    step: usize,
}

const DECODE_CHUNK: usize = 64;

impl<F: Scalar> Seq2Seq<F> {
    /// Fresh model with seeded uniform initialisation.
    pub fn new(config: ModelConfig, vocab: Vocabulary) -> Result<Self> {
        config.validate()?;
        let (shapes, layout) = param_layout(&config, vocab.len());
        let mut rng: ChaCha8Rng = rng_for(config.seed, "init");
        let r = config.init_range;
        let params = shapes
            .iter()
            .map(|(_, shape)| Array2::from_shape_simple_fn(*shape, || F::from_f64(rng.gen_range(-r..=r)).expect("finite")))
            .collect();
        let names = shapes.into_iter().map(|(n, _)| n).collect();
        Ok(Seq2Seq { config, vocab, names, params, layout, step: 0 })
    }

    /// Assemble a model from stored parameters, checking names, shapes and
    /// finiteness.
    pub fn from_parts(config: ModelConfig, vocab: Vocabulary, params: Vec<(String, Array2<F>)>, step: usize) -> Result<Self> {
        config.validate()?;
        let (shapes, layout) = param_layout(&config, vocab.len());
        if shapes.len() != params.len() {
            return Err(Error::CorruptFile(format!("expected {} parameter tensors, found {}", shapes.len(), params.len())));
        }
        for ((name, shape), (found, value)) in shapes.iter().zip(&params) {
            if name != found || *shape != value.dim() {
                return Err(Error::CorruptFile(format!("parameter {found} {:?} does not match {name} {shape:?}", value.dim())));
            }
            if value.iter().any(|x| !x.is_finite()) {
                return Err(Error::CorruptFile(format!("parameter {name} has non-finite entries")));
            }
        }
        let (names, params) = params.into_iter().unzip();
        Ok(Seq2Seq { config, vocab, names, params, layout, step })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn param_names(&self) -> &[String] {
        &self.names
    }

    pub fn params(&self) -> &[Array2<F>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Array2<F>] {
        &mut self.params
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn trace_dim(&self) -> usize {
        self.config.trace_dim()
    }

    /// Same model in another element type.
    pub fn cast<G: Scalar>(&self) -> Seq2Seq<G> {
        Seq2Seq {
            config: self.config.clone(),
            vocab: self.vocab.clone(),
            names: self.names.clone(),
            params: self.params.iter().map(|p| p.mapv(|x| G::from(x).expect("castable"))).collect(),
            layout: self.layout.clone(),
            step: self.step,
        }
    }

    fn source_ids(&self, word: &str) -> Result<Vec<usize>> {
        if word.is_empty() {
            return Err(Error::EmptyInput);
        }
        Ok(self.vocab.encode(word))
    }

    /// Run the encoder on a batch; returns the time-major top-layer memory
    /// `[T * B, 2n]` with row `t * B + b` for example `b` at position `t`.
    fn encode_tape(&self, tape: &mut Tape<F>, p: &mut Bound<F>, sources: &[Vec<usize>]) -> Var {
        let b = sources.len();
        let t_max = sources.iter().map(Vec::len).max().unwrap_or(0);
        let h = self.config.encoder_hidden;
        let ids: Vec<usize> =
            (0..t_max).flat_map(|t| sources.iter().map(move |s| s.get(t).copied().unwrap_or(PAD))).collect();
        let embed = p.get(tape, self.layout.enc_embed);
        let mut input = tape.gather(embed, &ids);
        let masks: Vec<Vec<bool>> = (0..t_max).map(|t| sources.iter().map(|s| t < s.len()).collect()).collect();

        for layer in 0..self.config.encoder_layers {
            let mut outputs: [Vec<Option<Var>>; 2] = [vec![None; t_max], vec![None; t_max]];
            for (dir, out) in outputs.iter_mut().enumerate() {
                let [w_x, w_h, bias] = self.layout.enc[layer * 2 + dir];
                let (w_x, w_h, bias) = (p.get(tape, w_x), p.get(tape, w_h), p.get(tape, bias));
                let projected = tape.matmul(input, w_x);
                let mut hs = tape.constant(Array2::zeros((b, h)));
                let mut cs = tape.constant(Array2::zeros((b, h)));
                let order: Vec<usize> = if dir == 0 { (0..t_max).collect() } else { (0..t_max).rev().collect() };
                for t in order {
                    let x = tape.slice_rows(projected, t * b, (t + 1) * b);
                    let rec = tape.matmul(hs, w_h);
                    let z = tape.add(x, rec);
                    let z = tape.add(z, bias);
                    let hc = tape.lstm_cell(z, cs);
                    let h_new = tape.slice_cols(hc, 0, h);
                    let c_new = tape.slice_cols(hc, h, 2 * h);
                    hs = tape.blend(h_new, hs, &masks[t]);
                    cs = tape.blend(c_new, cs, &masks[t]);
                    out[t] = Some(hs);
                }
            }
            let rows: Vec<Var> = (0..t_max)
                .map(|t| tape.concat_cols(&[outputs[0][t].expect("forward state"), outputs[1][t].expect("backward state")]))
                .collect();
            input = tape.concat_rows(&rows);
        }
        input
    }

    /// Bridge and attention keys from a memory matrix.
    fn decoder_start(&self, tape: &mut Tape<F>, p: &mut Bound<F>, memory: Var, lengths: Vec<usize>) -> DecoderState {
        let b = lengths.len();
        let h = self.config.encoder_hidden;
        let last: Vec<usize> = lengths.iter().enumerate().map(|(i, &len)| (len - 1) * b + i).collect();
        let first: Vec<usize> = (0..b).collect();
        let f_last = tape.gather(memory, &last);
        let f_last = tape.slice_cols(f_last, 0, h);
        let b_first = tape.gather(memory, &first);
        let b_first = tape.slice_cols(b_first, h, 2 * h);
        let summary = tape.concat_cols(&[f_last, b_first]);
        let (w, bias) = (p.get(tape, self.layout.bridge_w), p.get(tape, self.layout.bridge_b));
        let s = tape.matmul(summary, w);
        let s = tape.add(s, bias);
        let s = tape.tanh(s);
        let c = tape.constant(Array2::zeros((b, self.config.decoder_hidden)));
        let w_k = p.get(tape, self.layout.attn_wk);
        let keys = tape.matmul(memory, w_k);
        DecoderState { s, c, memory, keys, lengths }
    }

    /// One decoder step from the projected previous-symbol embedding;
    /// returns the output features `[s_i ; ctx_i]`.
    fn decoder_step(&self, tape: &mut Tape<F>, p: &mut Bound<F>, st: &mut DecoderState, x_proj: Var) -> Var {
        let d = self.config.decoder_hidden;
        let l = &self.layout;
        let (w_q, b_q, v) = (p.get(tape, l.attn_wq), p.get(tape, l.attn_bq), p.get(tape, l.attn_v));
        let q = tape.matmul(st.s, w_q);
        let q = tape.add(q, b_q);
        let scores = tape.additive_scores(q, st.keys, v);
        let alpha = tape.masked_softmax(scores, &st.lengths);
        let ctx = tape.weighted_sum(alpha, st.memory);
        let (w_c, w_h, bias) = (p.get(tape, l.dec_wc), p.get(tape, l.dec_wh), p.get(tape, l.dec_b));
        let zc = tape.matmul(ctx, w_c);
        let zh = tape.matmul(st.s, w_h);
        let z = tape.add(x_proj, zc);
        let z = tape.add(z, zh);
        let z = tape.add(z, bias);
        let hc = tape.lstm_cell(z, st.c);
        st.s = tape.slice_cols(hc, 0, d);
        st.c = tape.slice_cols(hc, d, 2 * d);
        tape.concat_cols(&[st.s, ctx])
    }

    /// Encoder trace for one word, optionally intervened on.
    pub fn encode(&self, word: &str, hook: Option<&InterventionHook>) -> Result<EncoderTrace<F>> {
        let mut trace = self.encode_batch(&[word])?.pop().expect("one trace");
        if let Some(hook) = hook {
            trace.apply(hook)?;
        }
        Ok(trace)
    }

    pub fn encode_batch(&self, words: &[&str]) -> Result<Vec<EncoderTrace<F>>> {
        let mut out = Vec::with_capacity(words.len());
        for chunk in words.chunks(DECODE_CHUNK) {
            let sources = chunk.iter().map(|w| self.source_ids(w)).collect::<Result<Vec<_>>>()?;
            let mut tape = Tape::new();
            let mut p = Bound::new(&self.params, false);
            let memory = self.encode_tape(&mut tape, &mut p, &sources);
            let memory = tape.value(memory);
            let b = chunk.len();
            for (i, word) in chunk.iter().enumerate() {
                let rows: Vec<usize> = (0..sources[i].len()).map(|t| t * b + i).collect();
                out.push(EncoderTrace { input: word.to_string(), states: memory.select(Axis(0), &rows) });
            }
        }
        Ok(out)
    }

    /// Greedy decoding from a (possibly intervened) trace.
    pub fn decode_greedy(&self, trace: &EncoderTrace<F>) -> String {
        self.decode_batch(std::slice::from_ref(trace)).pop().expect("one output")
    }

    pub fn decode_batch(&self, traces: &[EncoderTrace<F>]) -> Vec<String> {
        traces.chunks(DECODE_CHUNK).flat_map(|chunk| self.decode_chunk(chunk)).collect()
    }

    fn decode_chunk(&self, traces: &[EncoderTrace<F>]) -> Vec<String> {
        let b = traces.len();
        let lengths: Vec<usize> = traces.iter().map(EncoderTrace::len).collect();
        let t_max = lengths.iter().copied().max().unwrap_or(0);
        if t_max == 0 || lengths.contains(&0) {
            return vec![String::new(); b];
        }
        let mut memory = Array2::zeros((t_max * b, self.trace_dim()));
        for (i, trace) in traces.iter().enumerate() {
            for t in 0..trace.len() {
                memory.row_mut(t * b + i).assign(&trace.states.row(t));
            }
        }
        let mut tape = Tape::new();
        let mut p = Bound::new(&self.params, false);
        let memory = tape.constant(memory);
        let mut st = self.decoder_start(&mut tape, &mut p, memory, lengths);
        let l = &self.layout;
        let mut prev = vec![BOS; b];
        let mut done = vec![false; b];
        let mut outputs: Vec<Vec<usize>> = vec![Vec::new(); b];
        for _ in 0..self.config.max_decode_len {
            let (embed, w_x) = (p.get(&mut tape, l.dec_embed), p.get(&mut tape, l.dec_wx));
            let x = tape.gather(embed, &prev);
            let x_proj = tape.matmul(x, w_x);
            let features = self.decoder_step(&mut tape, &mut p, &mut st, x_proj);
            let (out_w, out_b) = (p.get(&mut tape, l.out_w), p.get(&mut tape, l.out_b));
            let logits = tape.matmul(features, out_w);
            let logits = tape.add(logits, out_b);
            let logits = tape.value(logits);
            for i in 0..b {
                let id = argmax(logits.row(i).iter().copied());
                prev[i] = id;
                if done[i] {
                    continue;
                }
                if id == EOS {
                    done[i] = true;
                } else {
                    outputs[i].push(id);
                }
            }
            if done.iter().all(|&d| d) {
                break;
            }
        }
        outputs.iter().map(|ids| self.vocab.decode(ids)).collect()
    }

    /// Greedy predictions without intervention.
    pub fn predict(&self, words: &[&str]) -> Result<Vec<String>> {
        Ok(self.decode_batch(&self.encode_batch(words)?))
    }

    /// Mean per-token negative log-likelihood of the genitives under teacher
    /// forcing (end-of-word symbol included) and its gradient for every
    /// parameter, in [`Seq2Seq::params`] order.
    pub fn loss_and_grads(&self, batch: &[(&str, &str)]) -> Result<(f64, Vec<Array2<F>>)> {
        let sources = batch.iter().map(|(nom, _)| self.source_ids(nom)).collect::<Result<Vec<_>>>()?;
        let targets: Vec<Vec<usize>> = batch
            .iter()
            .map(|(_, gen)| {
                let mut ids = self.vocab.encode(gen);
                ids.push(EOS);
                ids
            })
            .collect();
        self.sequence_loss_and_grads(&sources, &targets)
    }

    /// Teacher-forced loss over explicit output id sequences.
    pub(crate) fn sequence_loss_and_grads(&self, sources: &[Vec<usize>], outputs: &[Vec<usize>]) -> Result<(f64, Vec<Array2<F>>)> {
        if sources.is_empty() {
            return Err(Error::EmptyInput);
        }
        let b = sources.len();
        let steps = outputs.iter().map(Vec::len).max().unwrap_or(0);
        let tokens: usize = outputs.iter().map(Vec::len).sum();
        if tokens == 0 {
            return Err(Error::EmptyInput);
        }
        let mut tape = Tape::new();
        let mut p = Bound::new(&self.params, true);
        let memory = self.encode_tape(&mut tape, &mut p, sources);
        let lengths = sources.iter().map(Vec::len).collect();
        let mut st = self.decoder_start(&mut tape, &mut p, memory, lengths);
        let l = &self.layout;

        let inputs: Vec<usize> = (0..steps)
            .flat_map(|i| outputs.iter().map(move |o| if i == 0 { BOS } else { o.get(i - 1).copied().unwrap_or(PAD) }))
            .collect();
        let (embed, w_x) = (p.get(&mut tape, l.dec_embed), p.get(&mut tape, l.dec_wx));
        let x = tape.gather(embed, &inputs);
        let x_proj = tape.matmul(x, w_x);
        let mut features = Vec::with_capacity(steps);
        for i in 0..steps {
            let xi = tape.slice_rows(x_proj, i * b, (i + 1) * b);
            features.push(self.decoder_step(&mut tape, &mut p, &mut st, xi));
        }
        let features = tape.concat_rows(&features);
        let (out_w, out_b) = (p.get(&mut tape, l.out_w), p.get(&mut tape, l.out_b));
        let logits = tape.matmul(features, out_w);
        let logits = tape.add(logits, out_b);

        let weight = 1.0 / tokens as f64;
        let mut targets = Vec::with_capacity(steps * b);
        let mut weights = Vec::with_capacity(steps * b);
        for i in 0..steps {
            for o in outputs {
                match o.get(i) {
                    Some(&id) => {
                        targets.push(id);
                        weights.push(weight);
                    }
                    None => {
                        targets.push(PAD);
                        weights.push(0.0);
                    }
                }
            }
        }
        let loss = tape.cross_entropy(logits, &targets, &weights);
        let value = tape.value(loss)[[0, 0]].to_f64().unwrap_or(f64::NAN);
        if !value.is_finite() {
            return Err(Error::NonFiniteLoss { step: self.step });
        }
        let mut grads = tape.backward(loss);
        let grads = (0..self.params.len())
            .map(|i| match p.vars[i] {
                Some(v) => grads.take(v).unwrap_or_else(|| Array2::zeros(self.params[i].dim())),
                None => Array2::zeros(self.params[i].dim()),
            })
            .collect();
        Ok((value, grads))
    }
}

/// Index of the largest value; ties go to the lowest index.
fn argmax<F: Scalar>(values: impl Iterator<Item = F>) -> usize {
    let mut best = (0, F::neg_infinity());
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}
