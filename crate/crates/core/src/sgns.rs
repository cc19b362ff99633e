//! Skip-gram with negative sampling, plain and period-tagged.
//!
//! In tagged mode the input layer has one row per (word, period) while the
//! output layer keeps a single row per context word, so every period's
//! vectors are trained against the same context space. An exact softmax is
//! kept for small-vocabulary verification; training uses the
//! negative-sampling estimator.

use std::cell::UnsafeCell;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::cooc::{TaggedVocabulary, TrainingPair};
use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::scalar::{axpy, dot, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// One input row per word.
    Plain,
    /// One input row per (word, period), `t * |V| + i`.
    Tagged,
}

/// Input and output weight matrices, both stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SgnsModel<T> {
    mode: Mode,
    vocab_size: usize,
    periods: usize,
    dim: usize,
    tagged_contexts: bool,
    input: Vec<T>,
    output: Vec<T>,
}

impl<T: Scalar> SgnsModel<T> {
    /// Assembles a model from existing weights, e.g. a checkpoint.
    pub fn from_parts(
        mode: Mode,
        vocab_size: usize,
        periods: usize,
        dim: usize,
        tagged_contexts: bool,
        input: Vec<T>,
        output: Vec<T>,
    ) -> Result<Self> {
        let model = SgnsModel {
            mode,
            vocab_size,
            periods: if mode == Mode::Plain { 1 } else { periods },
            dim,
            tagged_contexts,
            input: Vec::new(),
            output: Vec::new(),
        };
        if input.len() != model.input_rows() * dim || output.len() != model.output_rows() * dim {
            return Err(Error::DimensionMismatch(format!(
                "expected {}x{dim} input and {}x{dim} output weights",
                model.input_rows(),
                model.output_rows()
            )));
        }
        if input.iter().chain(&output).any(|x| !x.is_finite()) {
            return Err(Error::Validation("non-finite model weight".into()));
        }
        Ok(SgnsModel {
            input,
            output,
            ..model
        })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn periods(&self) -> usize {
        self.periods
    }

    pub fn tagged_contexts(&self) -> bool {
        self.tagged_contexts
    }

    pub fn input_rows(&self) -> usize {
        match self.mode {
            Mode::Plain => self.vocab_size,
            Mode::Tagged => self.vocab_size * self.periods,
        }
    }

    pub fn output_rows(&self) -> usize {
        if self.mode == Mode::Tagged && self.tagged_contexts {
            self.vocab_size * self.periods
        } else {
            self.vocab_size
        }
    }

    pub fn input_row(&self, row: usize) -> &[T] {
        &self.input[row * self.dim..(row + 1) * self.dim]
    }

    pub fn output_row(&self, row: usize) -> &[T] {
        &self.output[row * self.dim..(row + 1) * self.dim]
    }

    pub fn input_weights(&self) -> &[T] {
        &self.input
    }

    pub fn output_weights(&self) -> &[T] {
        &self.output
    }

    pub fn input_weights_mut(&mut self) -> &mut [T] {
        &mut self.input
    }

    pub fn output_weights_mut(&mut self) -> &mut [T] {
        &mut self.output
    }
}

/// Uniform input weights in `(-0.5/N, 0.5/N)`, zero output weights.
pub fn init_model<T: Scalar>(
    vocab_size: usize,
    periods: usize,
    dim: usize,
    mode: Mode,
    tagged_contexts: bool,
    seed: u64,
) -> Result<SgnsModel<T>> {
    if dim < 1 {
        return Err(Error::InvalidArgument("hidden dimension must be at least 1".into()));
    }
    if vocab_size < 1 {
        return Err(Error::InvalidArgument("empty vocabulary".into()));
    }
    if mode == Mode::Tagged && periods < 1 {
        return Err(Error::InvalidArgument("tagged mode needs at least one period".into()));
    }
    let mut model = SgnsModel {
        mode,
        vocab_size,
        periods: if mode == Mode::Plain { 1 } else { periods },
        dim,
        tagged_contexts: mode == Mode::Tagged && tagged_contexts,
        input: Vec::new(),
        output: Vec::new(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = 0.5 / dim as f64;
    model.input = (0..model.input_rows() * dim)
        .map(|_| {
            let mut x = rng.random_range(-half..half);
            while x == -half {
                x = rng.random_range(-half..half);
            }
            T::lit(x)
        })
        .collect();
    model.output = vec![T::zero(); model.output_rows() * dim];
    Ok(model)
}

/// Full softmax `p(context | center)` over the model's output vocabulary.
pub fn softmax_prob<T: Scalar>(model: &SgnsModel<T>, context: usize, center: usize) -> Result<T> {
    if context >= model.output_rows() || center >= model.input_rows() {
        return Err(Error::InvalidArgument(format!(
            "context {context} or center {center} out of range"
        )));
    }
    Ok(softmax_distribution(model, center)?[context])
}

/// The whole conditional distribution for one center row, computed with
/// max-logit subtraction.
pub fn softmax_distribution<T: Scalar>(model: &SgnsModel<T>, center: usize) -> Result<Vec<T>> {
    if center >= model.input_rows() {
        return Err(Error::InvalidArgument(format!("center {center} out of range")));
    }
    let h = model.input_row(center);
    let logits: Vec<T> = (0..model.output_rows()).map(|a| dot(model.output_row(a), h)).collect();
    let max = logits.iter().copied().fold(T::min_value().unwrap(), T::max);
    let exps: Vec<T> = logits.iter().map(|&l| (l - max).exp()).collect();
    let z = exps.iter().copied().fold(T::zero(), |a, b| a + b);
    Ok(exps.into_iter().map(|e| e / z).collect())
}

/// `-log(sigmoid(x))`, stable for large `|x|`.
#[inline]
pub fn neg_log_sigmoid<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    }
}

#[inline]
pub fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Input,
    Output,
}

/// Gradient of the pair loss with respect to one weight row.
#[derive(Clone, Debug, PartialEq)]
pub struct RowGradient<T> {
    pub row: usize,
    pub side: Side,
    pub delta: Vec<T>,
}

/// Loss `-log s(out_c . in_w) - sum_n log s(-out_n . in_w)` and its gradient.
///
/// The gradient touches only the center's input row and the positive and
/// negative output rows; repeated output rows have their contributions summed.
pub fn pair_loss_and_gradient<T: Scalar>(
    model: &SgnsModel<T>,
    pair: &TrainingPair,
    negatives: &[u32],
) -> Result<(T, Vec<RowGradient<T>>)> {
    let (w, c) = (pair.center as usize, pair.context as usize);
    if w >= model.input_rows() || c >= model.output_rows() {
        return Err(Error::InvalidArgument(format!("pair ({w}, {c}) out of range")));
    }
    if let Some(&n) = negatives.iter().find(|&&n| n as usize >= model.output_rows()) {
        return Err(Error::InvalidArgument(format!("negative {n} out of range")));
    }
    let dim = model.dim;
    let h = model.input_row(w);
    let mut loss = T::zero();
    let mut grad_in = vec![T::zero(); dim];
    let mut outputs: Vec<RowGradient<T>> = Vec::new();
    let add_output = |row: usize, coeff: T, outputs: &mut Vec<RowGradient<T>>| {
        let entry = match outputs.iter_mut().find(|g| g.row == row) {
            Some(e) => e,
            None => {
                outputs.push(RowGradient {
                    row,
                    side: Side::Output,
                    delta: vec![T::zero(); dim],
                });
                outputs.last_mut().unwrap()
            }
        };
        axpy(coeff, h, &mut entry.delta);
    };

    let x = dot(model.output_row(c), h);
    loss += neg_log_sigmoid(x);
    let g = sigmoid(x) - T::one();
    axpy(g, model.output_row(c), &mut grad_in);
    add_output(c, g, &mut outputs);

    for &n in negatives {
        let n = n as usize;
        let y = dot(model.output_row(n), h);
        loss += neg_log_sigmoid(-y);
        let g = sigmoid(y);
        axpy(g, model.output_row(n), &mut grad_in);
        add_output(n, g, &mut outputs);
    }

    let mut grads = vec![RowGradient {
        row: w,
        side: Side::Input,
        delta: grad_in,
    }];
    grads.extend(outputs);
    Ok((loss, grads))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: u32,
    pub learning_rate: f64,
    /// Floor of the linear decay as a fraction of `learning_rate`.
    pub min_learning_rate_fraction: f64,
    pub negatives: usize,
    pub noise_exponent: f64,
    pub subsample_threshold: Option<f64>,
    pub seed: u64,
    pub workers: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 5,
            learning_rate: 0.025,
            min_learning_rate_fraction: 1e-4,
            negatives: 5,
            noise_exponent: 0.75,
            subsample_threshold: None,
            seed: 1,
            workers: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.negatives < 1 {
            return Err(Error::InvalidArgument("need at least one negative per pair".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument("learning_rate must be positive".into()));
        }
        if self.workers < 1 {
            return Err(Error::InvalidArgument("workers must be at least 1".into()));
        }
        if self.epochs < 1 {
            return Err(Error::InvalidArgument("epochs must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TrainReport {
    /// Mean pair loss of each epoch.
    pub epoch_losses: Vec<f64>,
    pub updates: u64,
    pub distinct_pairs: usize,
    pub weighted_pairs: u64,
}

/// Weight storage shared by hogwild workers. Rows may be written
/// concurrently without synchronization.
struct Hogwild<T> {
    cells: Box<[UnsafeCell<T>]>,
    dim: usize,
}

unsafe impl<T: Send> Sync for Hogwild<T> {}

impl<T: Scalar> Hogwild<T> {
    fn new(data: Vec<T>, dim: usize) -> Self {
        Hogwild {
            cells: data.into_iter().map(UnsafeCell::new).collect(),
            dim,
        }
    }

    /// # Safety
    /// Callers accept racy reads and writes on the returned row.
    #[allow(clippy::mut_from_ref)]
    #[inline]
    unsafe fn row(&self, r: usize) -> &mut [T] {
        let ptr = self.cells[r * self.dim].get();
        std::slice::from_raw_parts_mut(ptr, self.dim)
    }

    fn into_inner(self) -> Vec<T> {
        self.cells.into_vec().into_iter().map(UnsafeCell::into_inner).collect()
    }
}

struct Sampler {
    pairs: Vec<(u32, u32)>,
    pair_dist: WeightedAliasIndex<f64>,
    noise: Vec<u32>,
    noise_dist: WeightedAliasIndex<f64>,
}

/// One negative-sampling SGD step; returns the pair loss.
#[inline]
fn sgd_step<T: Scalar>(
    input: &mut [T],
    output: &Hogwild<T>,
    context: u32,
    negatives: &[u32],
    lr: T,
    scratch: &mut [T],
) -> f64 {
    scratch.iter_mut().for_each(|x| *x = T::zero());
    let mut prob = 1.0f64;
    for (k, &target) in std::iter::once(&context).chain(negatives).enumerate() {
        // SAFETY: hogwild regime, see `Hogwild`.
        let out = unsafe { output.row(target as usize) };
        let f = dot(input, out);
        let s = sigmoid(f);
        let (label, p) = if k == 0 { (T::one(), s) } else { (T::zero(), T::one() - s) };
        prob *= p.as_f64();
        let g = (label - s) * lr;
        axpy(g, out, scratch);
        axpy(g, input, out);
    }
    for (x, d) in input.iter_mut().zip(scratch.iter()) {
        *x += *d;
    }
    -prob.max(f64::MIN_POSITIVE).ln()
}

/// Trains `model` on `pairs` with per-pair SGD.
///
/// Pairs are aggregated, then each epoch draws as many pairs as their
/// total weight, with probability proportional to weight. Negatives come
/// from context frequencies raised to `noise_exponent`. The learning rate
/// decays linearly to `min_learning_rate_fraction * learning_rate`. With a
/// single worker the result is bit-reproducible for a given seed.
pub fn train<T, I>(model: &mut SgnsModel<T>, pairs: I, config: &TrainConfig) -> Result<TrainReport>
where
    T: Scalar,
    I: IntoIterator<Item = TrainingPair>,
{
    train_epochs(model, pairs, config, 0..config.epochs)
}

/// Runs only `epochs` out of the `config.epochs` schedule.
///
/// Learning rate and sampling seeds depend on the absolute epoch, so
/// `0..k` followed by `k..n` gives the same weights as `0..n` with one
/// worker.
pub fn train_epochs<T, I>(
    model: &mut SgnsModel<T>,
    pairs: I,
    config: &TrainConfig,
    epochs: std::ops::Range<u32>,
) -> Result<TrainReport>
where
    T: Scalar,
    I: IntoIterator<Item = TrainingPair>,
{
    config.validate()?;
    if epochs.start >= epochs.end || epochs.end > config.epochs {
        return Err(Error::InvalidArgument(format!(
            "epoch range {}..{} outside 0..{}",
            epochs.start, epochs.end, config.epochs
        )));
    }
    let mut all: Vec<TrainingPair> = pairs.into_iter().collect();
    if let Some(p) = all
        .iter()
        .find(|p| p.center as usize >= model.input_rows() || p.context as usize >= model.output_rows())
    {
        return Err(Error::InvalidArgument(format!(
            "pair ({}, {}) does not fit a model with {} input and {} output rows",
            p.center,
            p.context,
            model.input_rows(),
            model.output_rows()
        )));
    }
    all.sort_unstable_by_key(|p| (p.center, p.context));
    let mut merged: Vec<TrainingPair> = Vec::with_capacity(all.len());
    for p in all {
        match merged.last_mut() {
            Some(last) if last.center == p.center && last.context == p.context => last.weight += p.weight,
            _ => merged.push(p),
        }
    }
    merged.retain(|p| p.weight > 0);
    if merged.is_empty() {
        return Err(Error::NoTrainingData);
    }

    let weighted: u64 = merged.iter().map(|p| p.weight).sum();
    let mut context_freq = vec![0f64; model.output_rows()];
    for p in &merged {
        context_freq[p.context as usize] += p.weight as f64;
    }
    let noise: Vec<u32> = (0..context_freq.len() as u32)
        .filter(|&c| context_freq[c as usize] > 0.0)
        .collect();
    let noise_weights: Vec<f64> = noise
        .iter()
        .map(|&c| context_freq[c as usize].powf(config.noise_exponent))
        .collect();
    let sampler = Sampler {
        pair_dist: WeightedAliasIndex::new(merged.iter().map(|p| p.weight as f64).collect())
            .map_err(|e| Error::InvalidArgument(format!("pair weights: {e}")))?,
        pairs: merged.iter().map(|p| (p.center, p.context)).collect(),
        noise_dist: WeightedAliasIndex::new(noise_weights)
            .map_err(|e| Error::InvalidArgument(format!("noise weights: {e}")))?,
        noise,
    };

    let dim = model.dim;
    let input = Hogwild::new(std::mem::take(&mut model.input), dim);
    let output = Hogwild::new(std::mem::take(&mut model.output), dim);
    let total = weighted * u64::from(config.epochs);
    let mut report = TrainReport {
        distinct_pairs: merged.len(),
        weighted_pairs: weighted,
        ..TrainReport::default()
    };

    let result = (|| {
        for epoch in epochs {
            let start = weighted * u64::from(epoch);
            let loss_sum = if config.workers == 1 {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ (u64::from(epoch) << 32));
                run_worker(&sampler, &input, &output, config, start, weighted, total, &mut rng)
            } else {
                let workers = config.workers as u64;
                let per = weighted.div_ceil(workers);
                std::thread::scope(|scope| {
                    let handles: Vec<_> = (0..workers)
                        .map(|wid| {
                            let (sampler, input, output) = (&sampler, &input, &output);
                            let lo = (wid * per).min(weighted);
                            let hi = ((wid + 1) * per).min(weighted);
                            scope.spawn(move || {
                                let mut rng = ChaCha8Rng::seed_from_u64(
                                    config.seed ^ (u64::from(epoch) << 32) ^ (wid << 48),
                                );
                                run_worker(sampler, input, output, config, start + lo, hi - lo, total, &mut rng)
                            })
                        })
                        .collect();
                    handles.into_iter().map(|h| h.join().expect("worker panicked")).sum()
                })
            };
            let mean = loss_sum / weighted as f64;
            if !mean.is_finite() {
                return Err(Error::Diverged(format!(
                    "epoch {} mean loss {mean}; try a smaller learning rate",
                    epoch + 1
                )));
            }
            log::info!("epoch {}/{}: mean loss {mean:.5}", epoch + 1, config.epochs);
            report.epoch_losses.push(mean);
            report.updates += weighted;
        }
        Ok(())
    })();

    model.input = input.into_inner();
    model.output = output.into_inner();
    result?;
    if model.input.iter().any(|x| !x.is_finite()) {
        return Err(Error::Diverged("non-finite input weights after training".into()));
    }
    Ok(report)
}

#[allow(clippy::too_many_arguments)]
fn run_worker<T: Scalar>(
    sampler: &Sampler,
    input: &Hogwild<T>,
    output: &Hogwild<T>,
    config: &TrainConfig,
    start: u64,
    count: u64,
    total: u64,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let mut scratch = vec![T::zero(); input.dim];
    let mut negatives = vec![0u32; config.negatives];
    let floor = config.learning_rate * config.min_learning_rate_fraction;
    let mut loss = 0.0;
    let mut lr = T::lit(config.learning_rate);
    for step in 0..count {
        if step % 1024 == 0 {
            let progress = (start + step) as f64 / total as f64;
            lr = T::lit((config.learning_rate * (1.0 - progress)).max(floor));
        }
        let (center, context) = sampler.pairs[sampler.pair_dist.sample(rng)];
        for n in negatives.iter_mut() {
            *n = sampler.noise[sampler.noise_dist.sample(rng)];
        }
        // SAFETY: hogwild regime, see `Hogwild`.
        let row = unsafe { input.row(center as usize) };
        loss += sgd_step(row, output, context, &negatives, lr, &mut scratch);
    }
    loss
}

/// The input vector of `word`, at `period` in tagged mode.
pub fn embedding_of<'m, T: Scalar>(
    model: &'m SgnsModel<T>,
    vocab: &Vocabulary,
    word: &str,
    period: Option<usize>,
) -> Result<&'m [T]> {
    let i = vocab.index(word).ok_or_else(|| Error::UnknownWord(word.to_string()))?;
    let row = match (model.mode, period) {
        (Mode::Plain, None) => i,
        (Mode::Plain, Some(_)) => {
            return Err(Error::Lookup("a plain model has no periods".into()));
        }
        (Mode::Tagged, None) => {
            return Err(Error::Lookup("a tagged model needs a period".into()));
        }
        (Mode::Tagged, Some(t)) => {
            if t >= model.periods {
                return Err(Error::Lookup(format!("period {t} out of range")));
            }
            TaggedVocabulary::new(model.vocab_size, model.periods).tag(i, t)
        }
    };
    Ok(model.input_row(row))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(center: u32, context: u32) -> TrainingPair {
        TrainingPair {
            center,
            context,
            weight: 1,
        }
    }

    #[test]
    fn init_shapes_and_determinism() {
        let m: SgnsModel<f32> = init_model(100, 3, 300, Mode::Tagged, false, 7).unwrap();
        assert_eq!(m.input_rows(), 300);
        assert_eq!(m.output_rows(), 100);
        assert_eq!(m.input_row(0).len(), 300);
        assert!(m.input_weights().iter().all(|&x| x.abs() < 0.5 / 300.0));
        assert!(m.output_weights().iter().all(|&x| x == 0.0));
        let again: SgnsModel<f32> = init_model(100, 3, 300, Mode::Tagged, false, 7).unwrap();
        assert_eq!(m, again);
        let tagged_ctx: SgnsModel<f32> = init_model(10, 3, 4, Mode::Tagged, true, 7).unwrap();
        assert_eq!(tagged_ctx.output_rows(), 30);
        assert!(init_model::<f32>(10, 1, 0, Mode::Plain, false, 1).is_err());
    }

    #[test]
    fn zero_output_gives_uniform_softmax() {
        let m: SgnsModel<f64> = init_model(4, 1, 3, Mode::Plain, false, 1).unwrap();
        for a in 0..4 {
            assert!((softmax_prob(&m, a, 2).unwrap() - 0.25).abs() < 1e-15);
        }
        assert!(softmax_prob(&m, 4, 0).is_err());
    }

    #[test]
    fn softmax_hand_case() {
        let m = SgnsModel::<f64>::from_parts(
            Mode::Plain,
            2,
            1,
            1,
            false,
            vec![1.0, 1.0],
            vec![3f64.ln(), 0.0],
        )
        .unwrap();
        assert!((softmax_prob(&m, 0, 0).unwrap() - 0.75).abs() < 1e-15);
        assert!((softmax_prob(&m, 1, 0).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn softmax_normalizes() {
        let mut m: SgnsModel<f64> = init_model(12, 2, 5, Mode::Tagged, false, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for x in m.output_weights_mut() {
            *x = rng.random_range(-3.0..3.0);
        }
        for center in 0..m.input_rows() {
            let s: f64 = softmax_distribution(&m, center).unwrap().iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_weights_loss_is_two_log_two() {
        let m = SgnsModel::<f64>::from_parts(Mode::Plain, 3, 1, 2, false, vec![0.0; 6], vec![0.0; 6]).unwrap();
        let (loss, _) = pair_loss_and_gradient(&m, &pair(0, 1), &[2]).unwrap();
        assert!((loss - 2.0 * 2f64.ln()).abs() < 1e-15);
        assert!((loss - 1.3863).abs() < 1e-4);
    }

    #[test]
    fn duplicate_negative_is_finite_and_summed() {
        let mut m: SgnsModel<f64> = init_model(3, 1, 4, Mode::Plain, false, 2).unwrap();
        m.output_weights_mut().iter_mut().enumerate().for_each(|(i, x)| *x = 0.1 * i as f64);
        let (loss, grads) = pair_loss_and_gradient(&m, &pair(0, 1), &[1, 1]).unwrap();
        assert!(loss.is_finite());
        let outs: Vec<_> = grads.iter().filter(|g| g.side == Side::Output).collect();
        assert_eq!(outs.len(), 1);
        let (_, single) = pair_loss_and_gradient(&m, &pair(0, 1), &[1]).unwrap();
        let h = m.input_row(0);
        let s = sigmoid(dot(m.output_row(1), h));
        for k in 0..4 {
            let expected = single[1].delta[k] + s * h[k];
            assert!((outs[0].delta[k] - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn embedding_lookup_contract() {
        let vocab = Vocabulary::from_counts([("a", 3u64), ("b", 2), ("c", 1)]);
        let m: SgnsModel<f32> = init_model(3, 2, 4, Mode::Tagged, false, 1).unwrap();
        assert_eq!(embedding_of(&m, &vocab, "c", Some(1)).unwrap(), m.input_row(5));
        assert_eq!(embedding_of(&m, &vocab, "c", Some(1)).unwrap().len(), 4);
        assert!(embedding_of(&m, &vocab, "c", None).is_err());
        assert!(embedding_of(&m, &vocab, "zzz", Some(0)).is_err());
        let p: SgnsModel<f32> = init_model(3, 1, 4, Mode::Plain, false, 1).unwrap();
        assert!(matches!(embedding_of(&p, &vocab, "a", Some(0)), Err(Error::Lookup(_))));
        assert_eq!(embedding_of(&p, &vocab, "b", None).unwrap(), p.input_row(1));
    }

    #[test]
    fn empty_stream_is_an_error() {
        let mut m: SgnsModel<f32> = init_model(3, 1, 4, Mode::Plain, false, 1).unwrap();
        let res = train(&mut m, Vec::new(), &TrainConfig::default());
        assert!(matches!(res, Err(Error::NoTrainingData)));
        let res = train(&mut m, vec![pair(0, 9)], &TrainConfig::default());
        assert!(matches!(res, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn diverging_learning_rate_is_reported() {
        let mut m: SgnsModel<f32> = init_model(3, 1, 4, Mode::Plain, false, 1).unwrap();
        let cfg = TrainConfig {
            learning_rate: 1e30,
            ..TrainConfig::default()
        };
        let pairs = vec![pair(0, 1), pair(1, 2), pair(2, 0)];
        assert!(matches!(train(&mut m, pairs, &cfg), Err(Error::Diverged(_))));
    }

    #[test]
    fn stable_log_sigmoid() {
        assert!((neg_log_sigmoid(0.0f64) - 2f64.ln()).abs() < 1e-15);
        assert!(neg_log_sigmoid(800.0f64) >= 0.0);
        assert!((neg_log_sigmoid(-800.0f64) - 800.0).abs() < 1e-9);
        assert!((sigmoid(-800.0f64)).is_finite());
    }
}
