//! Two-branch recurrent network for next-day direction prediction.
//!
//! Per step i the price branch reads the scalar return r_i and the news
//! branch reads the L-bin histogram f_i with a recurrent carry:
//!
//! ```text
//! hr_i = ReLU(W_r r_i + b_hr)
//! hf_i = ReLU(W_f f_i + V_hf hf_{i-1} + b_hf),  hf_0 = 0
//! h_i  = ReLU(W_hr hr_i + W_hf hf_i + b_h)
//! y_i  = Softmax(W_h h_i)                        (no output bias)
//! ```
//!
//! y_i[1] is the predicted probability that day i+1 closes up. Training
//! minimizes summed binary cross-entropy against next-day labels plus an L2
//! penalty on the weight matrices, by SGD over exact reverse-mode gradients.

pub mod checkpoint;
pub mod linalg;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use linalg::Mat;

/// Natural-log arguments are clamped below at this value.
pub const LOG_CLAMP: f64 = 1e-12;

/// Layer widths; the news-feature width must match the histogram bin count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RnnDims {
    pub news_width: usize,
    pub hidden_price: usize,
    pub hidden_news: usize,
    pub hidden_fusion: usize,
}

pub const DEFAULT_HIDDEN_PRICE: usize = 8;
pub const DEFAULT_HIDDEN_NEWS: usize = 16;
pub const DEFAULT_HIDDEN_FUSION: usize = 16;

impl RnnDims {
    pub fn validate(&self) -> Result<()> {
        if self.news_width == 0
            || self.hidden_price == 0
            || self.hidden_news == 0
            || self.hidden_fusion == 0
        {
            return Err(Error::ShapeMismatch {
                msg: format!("all layer widths must be positive, got {self:?}"),
            });
        }
        Ok(())
    }
}

/// All learnable tensors. Doubles as the gradient container, since gradients
/// share every shape.
#[derive(Debug, Clone, PartialEq)]
pub struct RnnParams<S> {
    pub w_r: Mat<S>,
    pub b_hr: Vec<S>,
    pub w_f: Mat<S>,
    pub v_hf: Mat<S>,
    pub b_hf: Vec<S>,
    pub w_hr: Mat<S>,
    pub w_hf: Mat<S>,
    pub b_h: Vec<S>,
    pub w_h: Mat<S>,
}

impl<S: Scalar> RnnParams<S> {
    pub fn zeros(dims: &RnnDims) -> Self {
        let (l, hr, hf, h) = (
            dims.news_width,
            dims.hidden_price,
            dims.hidden_news,
            dims.hidden_fusion,
        );
        RnnParams {
            w_r: Mat::zeros(hr, 1),
            b_hr: vec![S::zero(); hr],
            w_f: Mat::zeros(hf, l),
            v_hf: Mat::zeros(hf, hf),
            b_hf: vec![S::zero(); hf],
            w_hr: Mat::zeros(h, hr),
            w_hf: Mat::zeros(h, hf),
            b_h: vec![S::zero(); h],
            w_h: Mat::zeros(2, h),
        }
    }

    pub fn dims(&self) -> RnnDims {
        RnnDims {
            news_width: self.w_f.cols(),
            hidden_price: self.w_r.rows(),
            hidden_news: self.w_f.rows(),
            hidden_fusion: self.w_hr.rows(),
        }
    }

    fn weights(&self) -> [&Mat<S>; 6] {
        [&self.w_r, &self.w_f, &self.v_hf, &self.w_hr, &self.w_hf, &self.w_h]
    }

    fn weights_mut(&mut self) -> [&mut Mat<S>; 6] {
        [
            &mut self.w_r,
            &mut self.w_f,
            &mut self.v_hf,
            &mut self.w_hr,
            &mut self.w_hf,
            &mut self.w_h,
        ]
    }

    fn biases(&self) -> [&Vec<S>; 3] {
        [&self.b_hr, &self.b_hf, &self.b_h]
    }

    fn biases_mut(&mut self) -> [&mut Vec<S>; 3] {
        [&mut self.b_hr, &mut self.b_hf, &mut self.b_h]
    }

    /// Sum of squared Frobenius norms over the six weight matrices.
    pub fn squared_weight_norm(&self) -> S {
        self.weights().iter().map(|w| w.frobenius_sq()).sum()
    }

    fn squared_bias_norm(&self) -> S {
        self.biases()
            .iter()
            .map(|b| b.iter().map(|&x| x * x).sum::<S>())
            .sum()
    }

    /// Euclidean norm over every entry, weights and biases alike.
    pub fn global_norm(&self) -> S {
        (self.squared_weight_norm() + self.squared_bias_norm()).sqrt()
    }

    /// self += a * other, tensor by tensor.
    pub fn add_scaled(&mut self, other: &RnnParams<S>, a: S) {
        for (w, o) in self.weights_mut().into_iter().zip(other.weights()) {
            w.add_scaled(o, a);
        }
        for (b, o) in self.biases_mut().into_iter().zip(other.biases()) {
            for (x, y) in b.iter_mut().zip(o) {
                *x = *x + a * *y;
            }
        }
    }

    pub fn scale(&mut self, a: S) {
        for w in self.weights_mut() {
            w.scale(a);
        }
        for b in self.biases_mut() {
            for x in b.iter_mut() {
                *x = *x * a;
            }
        }
    }
}

/// Glorot-uniform weights, zero biases, deterministic in the seed.
///
/// Matrices are filled in a fixed order (w_r, w_f, v_hf, w_hr, w_hf, w_h),
/// each entry uniform in +-sqrt(6 / (fan_in + fan_out)).
pub fn init_params<S: Scalar>(dims: &RnnDims, seed: u64) -> RnnParams<S> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = RnnParams::zeros(dims);
    let fans = [
        (1, dims.hidden_price),
        (dims.news_width, dims.hidden_news),
        (dims.hidden_news, dims.hidden_news),
        (dims.hidden_price, dims.hidden_fusion),
        (dims.hidden_news, dims.hidden_fusion),
        (dims.hidden_fusion, 2),
    ];
    for (w, (fan_in, fan_out)) in params.weights_mut().into_iter().zip(fans) {
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        for x in w.data_mut() {
            *x = S::from_f64_lossy(rng.random_range(-bound..bound));
        }
    }
    params
}

/// One step's intermediate values; pre-activations let tests locate ReLU
/// kinks exactly.
#[derive(Debug, Clone)]
pub struct StepTrace<S> {
    pub hr_pre: Vec<S>,
    pub hr: Vec<S>,
    pub hf_pre: Vec<S>,
    pub hf: Vec<S>,
    pub h_pre: Vec<S>,
    pub h: Vec<S>,
    pub logits: [S; 2],
    pub y: [S; 2],
}

/// Everything backward needs: the inputs, the initial news state, and every
/// step's intermediates.
#[derive(Debug, Clone)]
pub struct ForwardTrace<S> {
    pub hf_init: Vec<S>,
    pub r_seq: Vec<S>,
    pub f_seq: Vec<Vec<S>>,
    pub steps: Vec<StepTrace<S>>,
}

impl<S: Scalar> ForwardTrace<S> {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Final news-branch state, the carry for a continuation window.
    pub fn final_hf(&self) -> &[S] {
        self.steps.last().map(|s| s.hf.as_slice()).unwrap_or(&self.hf_init)
    }
}

fn relu<S: Scalar>(v: &[S]) -> Vec<S> {
    v.iter().map(|&x| x.max(S::zero())).collect()
}

fn softmax2<S: Scalar>(logits: [S; 2]) -> [S; 2] {
    let m = logits[0].max(logits[1]);
    let e0 = (logits[0] - m).exp();
    let e1 = (logits[1] - m).exp();
    let sum = e0 + e1;
    [e0 / sum, e1 / sum]
}

/// Run the recurrence from a zero news state.
pub fn forward<S: Scalar>(
    params: &RnnParams<S>,
    r_seq: &[S],
    f_seq: &[Vec<S>],
) -> Result<ForwardTrace<S>> {
    let zero = vec![S::zero(); params.dims().hidden_news];
    forward_from(params, &zero, r_seq, f_seq)
}

/// Run the recurrence from a given initial news state (truncated-window
/// training carries the state between windows).
pub fn forward_from<S: Scalar>(
    params: &RnnParams<S>,
    hf_init: &[S],
    r_seq: &[S],
    f_seq: &[Vec<S>],
) -> Result<ForwardTrace<S>> {
    let dims = params.dims();
    if r_seq.is_empty() || r_seq.len() != f_seq.len() {
        return Err(Error::ShapeMismatch {
            msg: format!(
                "need equal non-zero sequence lengths, got r={} f={}",
                r_seq.len(),
                f_seq.len()
            ),
        });
    }
    if hf_init.len() != dims.hidden_news {
        return Err(Error::ShapeMismatch {
            msg: format!(
                "initial news state has width {}, expected {}",
                hf_init.len(),
                dims.hidden_news
            ),
        });
    }
    for f in f_seq {
        if f.len() != dims.news_width {
            return Err(Error::ShapeMismatch {
                msg: format!("news feature width {} != {}", f.len(), dims.news_width),
            });
        }
    }

    let mut steps = Vec::with_capacity(r_seq.len());
    let mut hf_prev = hf_init.to_vec();
    for (&r, f) in r_seq.iter().zip(f_seq) {
        let mut hr_pre = params.w_r.matvec(&[r]);
        for (z, b) in hr_pre.iter_mut().zip(&params.b_hr) {
            *z = *z + *b;
        }
        let hr = relu(&hr_pre);

        let mut hf_pre = params.w_f.matvec(f);
        let carry = params.v_hf.matvec(&hf_prev);
        for ((z, cv), b) in hf_pre.iter_mut().zip(&carry).zip(&params.b_hf) {
            *z = *z + *cv + *b;
        }
        let hf = relu(&hf_pre);

        let mut h_pre = params.w_hr.matvec(&hr);
        let from_news = params.w_hf.matvec(&hf);
        for ((z, nv), b) in h_pre.iter_mut().zip(&from_news).zip(&params.b_h) {
            *z = *z + *nv + *b;
        }
        let h = relu(&h_pre);

        let logit_vec = params.w_h.matvec(&h);
        let logits = [logit_vec[0], logit_vec[1]];
        let y = softmax2(logits);

        hf_prev = hf.clone();
        steps.push(StepTrace {
            hr_pre,
            hr,
            hf_pre,
            hf,
            h_pre,
            h,
            logits,
            y,
        });
    }
    Ok(ForwardTrace {
        hf_init: hf_init.to_vec(),
        r_seq: r_seq.to_vec(),
        f_seq: f_seq.to_vec(),
        steps,
    })
}

/// Summed binary cross-entropy of next-day labels against each step's
/// up-probability, plus lambda times the squared weight norm (biases are
/// excluded by default).
pub fn loss<S: Scalar>(
    params: &RnnParams<S>,
    trace: &ForwardTrace<S>,
    labels: &[u8],
    lambda: S,
) -> S {
    loss_with(params, trace, labels, lambda, false)
}

pub fn loss_with<S: Scalar>(
    params: &RnnParams<S>,
    trace: &ForwardTrace<S>,
    labels: &[u8],
    lambda: S,
    l2_include_biases: bool,
) -> S {
    assert_eq!(labels.len(), trace.len(), "one label per step");
    let clamp = S::from_f64_lossy(LOG_CLAMP);
    let one = S::one();
    let mut ce = S::zero();
    for (step, &c) in trace.steps.iter().zip(labels) {
        let up = step.y[1];
        let c = S::from_usize_lossy(c as usize);
        ce = ce - c * up.max(clamp).ln() - (one - c) * (one - up).max(clamp).ln();
    }
    let mut reg = params.squared_weight_norm();
    if l2_include_biases {
        reg = reg + params.squared_bias_norm();
    }
    ce + lambda * reg
}

/// Exact gradient of [`loss_with`] by reverse-mode accumulation through the
/// recurrence; the ReLU subgradient at 0 is 0, and clamped log terms
/// contribute zero gradient.
pub fn backward<S: Scalar>(
    params: &RnnParams<S>,
    trace: &ForwardTrace<S>,
    labels: &[u8],
    lambda: S,
) -> RnnParams<S> {
    backward_with(params, trace, labels, lambda, false)
}

pub fn backward_with<S: Scalar>(
    params: &RnnParams<S>,
    trace: &ForwardTrace<S>,
    labels: &[u8],
    lambda: S,
    l2_include_biases: bool,
) -> RnnParams<S> {
    assert_eq!(labels.len(), trace.len(), "one label per step");
    let dims = params.dims();
    let mut g = RnnParams::zeros(&dims);
    let clamp = S::from_f64_lossy(LOG_CLAMP);
    let (zero, one) = (S::zero(), S::one());
    let two = one + one;

    let mask_mul = |values: &mut [S], acts: &[S]| {
        for (v, &a) in values.iter_mut().zip(acts) {
            if a <= zero {
                *v = zero;
            }
        }
    };

    let mut dhf_carry = vec![zero; dims.hidden_news];
    for i in (0..trace.len()).rev() {
        let step = &trace.steps[i];
        let c = S::from_usize_lossy(labels[i] as usize);
        let (s0, s1) = (step.y[0], step.y[1]);

        // d(ce)/d(up-probability), honoring the clamp regions exactly.
        let up = s1;
        let down = one - s1;
        let mut dly = zero;
        if up > clamp {
            dly = dly - c / up;
        }
        if down > clamp {
            dly = dly + (one - c) / down;
        }
        // Through the two-way softmax: d(up)/dz1 = s1*s0 = -d(up)/dz0.
        let a = dly * s1 * s0;
        let dz = [-a, a];

        g.w_h.add_outer(&dz, &step.h, one);
        let mut dh = params.w_h.matvec_t(&dz);
        mask_mul(&mut dh, &step.h);

        g.w_hr.add_outer(&dh, &step.hr, one);
        g.w_hf.add_outer(&dh, &step.hf, one);
        for (b, &d) in g.b_h.iter_mut().zip(&dh) {
            *b = *b + d;
        }

        let mut dhr = params.w_hr.matvec_t(&dh);
        mask_mul(&mut dhr, &step.hr);
        g.w_r.add_outer(&dhr, &[trace.r_seq[i]], one);
        for (b, &d) in g.b_hr.iter_mut().zip(&dhr) {
            *b = *b + d;
        }

        let mut dhf = params.w_hf.matvec_t(&dh);
        for (d, &carry) in dhf.iter_mut().zip(&dhf_carry) {
            *d = *d + carry;
        }
        mask_mul(&mut dhf, &step.hf);
        g.w_f.add_outer(&dhf, &trace.f_seq[i], one);
        let hf_prev = if i == 0 {
            trace.hf_init.as_slice()
        } else {
            trace.steps[i - 1].hf.as_slice()
        };
        g.v_hf.add_outer(&dhf, hf_prev, one);
        for (b, &d) in g.b_hf.iter_mut().zip(&dhf) {
            *b = *b + d;
        }
        dhf_carry = params.v_hf.matvec_t(&dhf);
    }

    let twol = two * lambda;
    for (gw, w) in g.weights_mut().into_iter().zip(params.weights()) {
        gw.add_scaled(w, twol);
    }
    if l2_include_biases {
        for (gb, b) in g.biases_mut().into_iter().zip(params.biases()) {
            for (x, &y) in gb.iter_mut().zip(b) {
                *x = *x + twol * y;
            }
        }
    }
    g
}

/// One stock's training window: equal-length returns, histograms, and
/// next-day labels.
#[derive(Debug, Clone)]
pub struct TrainSequence<S> {
    pub returns: Vec<S>,
    pub histograms: Vec<Vec<S>>,
    pub labels: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Multiplicative learning-rate decay per epoch.
    pub lr_decay: f64,
    pub l2_lambda: f64,
    pub l2_include_biases: bool,
    pub epochs: usize,
    pub seed: u64,
    /// Scale gradients down to this global norm when they exceed it.
    pub grad_clip: Option<f64>,
    /// Split each sequence into windows of this many steps, carrying the
    /// news state (detached) across windows; one SGD update per window.
    pub bptt_truncation: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            lr_decay: 0.95,
            l2_lambda: 1e-4,
            l2_include_biases: false,
            epochs: 50,
            seed: 0,
            grad_clip: Some(5.0),
            bptt_truncation: Some(32),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<S> {
    pub params: RnnParams<S>,
    /// Mean full-sequence loss across sequences after each epoch.
    pub epoch_losses: Vec<f64>,
}

/// SGD over sequences: per epoch, visit sequences in seeded-shuffled order
/// and apply one update per sequence (or per truncation window). Aborts if
/// the epoch loss stops being finite.
pub fn train<S: Scalar>(
    sequences: &[TrainSequence<S>],
    dims: &RnnDims,
    config: &TrainConfig,
) -> Result<TrainOutcome<S>> {
    dims.validate()?;
    if sequences.is_empty() {
        return Err(Error::NoSamples);
    }
    for seq in sequences {
        if seq.returns.is_empty()
            || seq.returns.len() != seq.histograms.len()
            || seq.returns.len() != seq.labels.len()
        {
            return Err(Error::ShapeMismatch {
                msg: format!(
                    "training sequence lengths disagree: r={} f={} c={}",
                    seq.returns.len(),
                    seq.histograms.len(),
                    seq.labels.len()
                ),
            });
        }
    }

    let mut params: RnnParams<S> = init_params(dims, config.seed);
    // Separate stream so the shuffle does not depend on how many samples
    // initialization consumed.
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let lambda = S::from_f64_lossy(config.l2_lambda);
    let window = config.bptt_truncation.unwrap_or(usize::MAX).max(1);

    let mut order: Vec<usize> = (0..sequences.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let lr = S::from_f64_lossy(config.learning_rate * config.lr_decay.powi(epoch as i32));
        order.shuffle(&mut shuffle_rng);
        for &si in &order {
            let seq = &sequences[si];
            let mut carry = vec![S::zero(); dims.hidden_news];
            let mut start = 0;
            while start < seq.returns.len() {
                let end = (start + window).min(seq.returns.len());
                let trace = forward_from(
                    &params,
                    &carry,
                    &seq.returns[start..end],
                    &seq.histograms[start..end],
                )?;
                carry = trace.final_hf().to_vec();
                let grads = backward_with(
                    &params,
                    &trace,
                    &seq.labels[start..end],
                    lambda,
                    config.l2_include_biases,
                );
                let grads = clipped(grads, config.grad_clip);
                params.add_scaled(&grads, -lr);
                start = end;
            }
        }

        let mut total = 0.0;
        for seq in sequences {
            let trace = forward(&params, &seq.returns, &seq.histograms)?;
            total += loss_with(
                &params,
                &trace,
                &seq.labels,
                lambda,
                config.l2_include_biases,
            )
            .to_f64_lossy();
        }
        let mean = total / sequences.len() as f64;
        if !mean.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
        epoch_losses.push(mean);
    }
    Ok(TrainOutcome {
        params,
        epoch_losses,
    })
}

fn clipped<S: Scalar>(mut grads: RnnParams<S>, clip: Option<f64>) -> RnnParams<S> {
    if let Some(max_norm) = clip {
        let max_norm = S::from_f64_lossy(max_norm);
        let norm = grads.global_norm();
        if norm > max_norm {
            grads.scale(max_norm / norm);
        }
    }
    grads
}

/// Run the whole sequence and read the final step: class 1 iff the
/// up-probability strictly beats the down-probability; the up-probability
/// is returned either way.
pub fn predict<S: Scalar>(params: &RnnParams<S>, r_seq: &[S], f_seq: &[Vec<S>]) -> Result<(u8, S)> {
    let trace = forward(params, r_seq, f_seq)?;
    let y = trace.steps.last().expect("forward guarantees >= 1 step").y;
    Ok((u8::from(y[1] > y[0]), y[1]))
}
