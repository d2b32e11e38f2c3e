//! Linear max-margin baselines over lagged returns.
//!
//! Both comparison methods classify the next day's direction from the last
//! three daily returns; the richer variant appends the current day's news
//! histogram. Training minimizes mean hinge loss plus an L2 penalty on the
//! weights (not the bias) by projected subgradient descent with the
//! 1/(lambda*t) step schedule, returning the best iterate seen.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::features::FeatureSequence;

/// Lags used as price features.
pub const PRICE_LAGS: usize = 3;

/// One training example: lagged returns (plus optional histogram) and the
/// next-day direction encoded as -1/+1.
#[derive(Debug, Clone, PartialEq)]
pub struct LagSample {
    pub x: Vec<f64>,
    pub y: i8,
}

impl LagSample {
    /// The {0,1} class behind the -1/+1 training label.
    pub fn class(&self) -> u8 {
        u8::from(self.y > 0)
    }
}

/// Build one sample per predictable day: the sample targeting day t+1 reads
/// returns (r_{t-2}, r_{t-1}, r_t), appends day t's histogram when
/// `with_news`, and is labeled with day t+1's direction.
pub fn build_lag_samples(features: &FeatureSequence, with_news: bool) -> Result<Vec<LagSample>> {
    let t_f = features.returns.len();
    if t_f < PRICE_LAGS + 1 {
        return Err(Error::TooShort {
            msg: format!(
                "{}: need at least {} feature days for lagged samples, have {}",
                features.stock_id,
                PRICE_LAGS + 1,
                t_f
            ),
        });
    }
    let mut samples = Vec::with_capacity(t_f - PRICE_LAGS);
    for k in 0..=t_f - PRICE_LAGS - 1 {
        let day = k + PRICE_LAGS - 1;
        let mut x = features.returns[k..k + PRICE_LAGS].to_vec();
        if with_news {
            x.extend_from_slice(&features.histograms[day]);
        }
        let y = if features.labels[day] == 1 { 1 } else { -1 };
        samples.push(LagSample { x, y });
    }
    Ok(samples)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearConfig {
    /// L2 strength lambda in lambda/2 * |w|^2 + mean hinge; must be positive
    /// because the step size is 1/(lambda*t).
    pub reg: f64,
    pub epochs: usize,
    pub seed: u64,
}

pub const DEFAULT_BASELINE_REG: f64 = 1e-3;
pub const DEFAULT_BASELINE_EPOCHS: usize = 100;

impl Default for LinearConfig {
    fn default() -> Self {
        LinearConfig {
            reg: DEFAULT_BASELINE_REG,
            epochs: DEFAULT_BASELINE_EPOCHS,
            seed: 0,
        }
    }
}

/// Linear classifier; `degenerate` marks a constant majority-class model
/// produced when training saw only one class.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub w: Vec<f64>,
    pub b: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearOutcome {
    pub model: LinearModel,
    /// Full objective of the current iterate after each epoch.
    pub objective_trace: Vec<f64>,
    /// Objective of the returned (best) iterate.
    pub best_objective: f64,
}

fn objective(w: &[f64], b: f64, samples: &[LagSample], reg: f64) -> f64 {
    let hinge: f64 = samples
        .iter()
        .map(|s| {
            let margin = s.y as f64 * (dot(w, &s.x) + b);
            (1.0 - margin).max(0.0)
        })
        .sum();
    0.5 * reg * dot(w, w) + hinge / samples.len() as f64
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Subgradient descent on the hinge objective. Deterministic in the seed;
/// returns the iterate with the lowest end-of-epoch objective.
pub fn train_linear(samples: &[LagSample], config: &LinearConfig) -> Result<LinearOutcome> {
    if samples.is_empty() {
        return Err(Error::NoSamples);
    }
    if config.reg.is_nan() || config.reg <= 0.0 || config.epochs == 0 {
        return Err(Error::config(format!(
            "linear baseline needs reg > 0 and epochs > 0, got reg={} epochs={}",
            config.reg, config.epochs
        )));
    }
    let width = samples[0].x.len();
    for s in samples {
        if s.x.len() != width {
            return Err(Error::FeatureWidth {
                expected: width,
                got: s.x.len(),
            });
        }
    }

    let n_pos = samples.iter().filter(|s| s.y > 0).count();
    if n_pos == 0 || n_pos == samples.len() {
        // One-class data: fall back to always predicting that class.
        let b = if n_pos == 0 { -1.0 } else { 1.0 };
        let model = LinearModel {
            w: vec![0.0; width],
            b,
            degenerate: true,
        };
        let obj = objective(&model.w, model.b, samples, config.reg);
        return Ok(LinearOutcome {
            model,
            objective_trace: vec![obj],
            best_objective: obj,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut w = vec![0.0f64; width];
    let mut b = 0.0f64;
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut step = 0u64;
    let mut trace = Vec::with_capacity(config.epochs);
    let mut best = (w.clone(), b, f64::INFINITY);
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for &si in &order {
            step += 1;
            let s = &samples[si];
            let eta = 1.0 / (config.reg * step as f64);
            let margin = s.y as f64 * (dot(&w, &s.x) + b);
            let shrink = 1.0 - eta * config.reg;
            for v in w.iter_mut() {
                *v *= shrink;
            }
            if margin < 1.0 {
                let scale = eta * s.y as f64;
                for (v, &x) in w.iter_mut().zip(&s.x) {
                    *v += scale * x;
                }
                b += scale;
            }
        }
        let obj = objective(&w, b, samples, config.reg);
        if !obj.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch: trace.len(),
            });
        }
        trace.push(obj);
        if obj < best.2 {
            best = (w.clone(), b, obj);
        }
    }
    Ok(LinearOutcome {
        model: LinearModel {
            w: best.0,
            b: best.1,
            degenerate: false,
        },
        objective_trace: trace,
        best_objective: best.2,
    })
}

/// Class 1 iff the margin w.x + b is strictly positive; a zero margin maps
/// to class 0.
pub fn predict_linear(model: &LinearModel, x: &[f64]) -> Result<u8> {
    if x.len() != model.w.len() {
        return Err(Error::FeatureWidth {
            expected: model.w.len(),
            got: x.len(),
        });
    }
    Ok(u8::from(dot(&model.w, x) + model.b > 0.0))
}

/// TSV export: one value per line, w entries first, bias last.
pub fn linear_model_tsv(model: &LinearModel) -> String {
    let mut out = String::new();
    for v in &model.w {
        writeln!(out, "{v}").expect("string write");
    }
    writeln!(out, "{}", model.b).expect("string write");
    out
}

pub fn write_linear_tsv(path: &Path, model: &LinearModel) -> Result<()> {
    std::fs::write(path, linear_model_tsv(model))
        .map_err(|e| Error::io(path.display().to_string(), e))
}
