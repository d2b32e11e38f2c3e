//! Numeric model inputs: per-day polarity histograms, returns, and labels.
//!
//! A feature day t covers trading days 2..=T because the first day has no
//! return. Each feature day carries the return r_t, the polarity histogram
//! of that day's news, and the next day's direction label where one exists;
//! the final day has features only and serves live prediction.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::corpus::AlignedSeries;
use crate::error::{Error, Result};
use crate::lexicon::PolarityLexicon;

/// What the histogram divides by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DenominatorMode {
    /// In-vocabulary token occurrences only; nonempty input sums to 1.
    #[default]
    InVocab,
    /// All token occurrences; out-of-vocabulary mass is simply missing.
    AllTokens,
}

/// Equal-width binning of the lexicon's polarity range into L bins.
///
/// Bins are half-open [edge_{j-1}, edge_j) with the last bin closed at Max,
/// so every polarity maps to exactly one bin. A degenerate range (Max = Min)
/// puts all mass in bin 0.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramSpec {
    bins: usize,
    min: f64,
    max: f64,
    /// edge_j = min + j * (max - min) / L for j = 1..L-1, ascending.
    interior: Vec<f64>,
    denominator: DenominatorMode,
}

/// Bin edges over the exact polarity extrema of the lexicon.
///
/// The caller guarantees bins >= 1 and a non-empty lexicon.
pub fn make_spec(lexicon: &PolarityLexicon, bins: usize) -> HistogramSpec {
    make_spec_with(lexicon, bins, DenominatorMode::InVocab)
}

pub fn make_spec_with(
    lexicon: &PolarityLexicon,
    bins: usize,
    denominator: DenominatorMode,
) -> HistogramSpec {
    assert!(bins >= 1, "histogram needs at least one bin");
    assert!(!lexicon.is_empty(), "histogram spec needs a non-empty lexicon");
    let (min, max) = lexicon.polarity_range();
    HistogramSpec::new(bins, min, max, denominator)
}

impl HistogramSpec {
    pub fn new(bins: usize, min: f64, max: f64, denominator: DenominatorMode) -> Self {
        assert!(bins >= 1 && min <= max);
        let step = (max - min) / bins as f64;
        let interior = (1..bins).map(|j| min + j as f64 * step).collect();
        HistogramSpec {
            bins,
            min,
            max,
            interior,
            denominator,
        }
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn denominator(&self) -> DenominatorMode {
        self.denominator
    }

    /// All L+1 edges; the last one is exactly Max.
    pub fn edges(&self) -> Vec<f64> {
        let mut edges = Vec::with_capacity(self.bins + 1);
        edges.push(self.min);
        edges.extend_from_slice(&self.interior);
        edges.push(self.max);
        edges
    }

    /// Index of the unique bin containing `polarity`.
    pub fn bin_of(&self, polarity: f64) -> usize {
        if self.max <= self.min {
            return 0;
        }
        // Lower-inclusive bins: the bin index is the number of interior
        // edges at or below the value, capped so Max lands in the last bin.
        let j = self.interior.partition_point(|e| *e <= polarity);
        j.min(self.bins - 1)
    }
}

/// L-bin normalized polarity histogram of a day's tokens.
///
/// Out-of-vocabulary tokens are dropped; repetitions count per occurrence.
/// Empty or fully out-of-vocabulary input gives the zero vector.
pub fn histogram(spec: &HistogramSpec, lexicon: &PolarityLexicon, tokens: &[String]) -> Vec<f64> {
    let mut counts = vec![0usize; spec.bins];
    let mut in_vocab = 0usize;
    for token in tokens {
        if let Some(p) = lexicon.polarity(token) {
            counts[spec.bin_of(p)] += 1;
            in_vocab += 1;
        }
    }
    let denom = match spec.denominator {
        DenominatorMode::InVocab => in_vocab,
        DenominatorMode::AllTokens => tokens.len(),
    };
    if denom == 0 {
        return vec![0.0; spec.bins];
    }
    counts
        .into_iter()
        .map(|c| c as f64 / denom as f64)
        .collect()
}

/// One-day relative changes; output index i is the return of day i+2.
pub fn returns(closes: &[f64]) -> Result<Vec<f64>> {
    assert!(closes.len() >= 2, "returns need at least two prices");
    for (i, &p) in closes.iter().enumerate() {
        if p.is_nan() || p <= 0.0 {
            return Err(Error::NonPositivePrice { index: i, price: p });
        }
    }
    Ok(closes.windows(2).map(|w| (w[1] - w[0]) / w[0]).collect())
}

/// Direction labels; output index i is 1 iff day i+2 closed above day i+1.
pub fn labels(closes: &[f64]) -> Vec<u8> {
    assert!(closes.len() >= 2, "labels need at least two prices");
    closes.windows(2).map(|w| u8::from(w[1] > w[0])).collect()
}

/// Model-ready series for one stock: feature days 2..=T.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence {
    pub stock_id: String,
    /// Calendar dates of the feature days.
    pub dates: Vec<NaiveDate>,
    /// r_t per feature day.
    pub returns: Vec<f64>,
    /// f_t per feature day, each of width L.
    pub histograms: Vec<Vec<f64>>,
    /// labels[j] is the direction of feature day j+1; one shorter than
    /// `dates` because the final day has no next day yet.
    pub labels: Vec<u8>,
}

impl FeatureSequence {
    /// Number of feature days.
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn width(&self) -> usize {
        self.histograms.first().map(Vec::len).unwrap_or(0)
    }
}

/// Featurize one aligned stock: returns, per-day histograms, and next-day
/// labels. Needs at least three trading days (one return plus one label).
pub fn assemble(
    aligned: &AlignedSeries,
    lexicon: &PolarityLexicon,
    spec: &HistogramSpec,
) -> Result<FeatureSequence> {
    if aligned.len() < 3 {
        return Err(Error::TooShort {
            msg: format!(
                "stock {} has {} trading days, need at least 3",
                aligned.stock_id,
                aligned.len()
            ),
        });
    }
    let closes = aligned.closes();
    let rets = returns(&closes)?;
    let labs = labels(&closes);
    // Feature day j is trading day j+1; its label is the next day's move.
    let dates = aligned.days[1..].iter().map(|d| d.date).collect();
    let histograms = aligned.days[1..]
        .iter()
        .map(|d| histogram(spec, lexicon, &d.news.tokens))
        .collect();
    Ok(FeatureSequence {
        stock_id: aligned.stock_id.clone(),
        dates,
        returns: rets,
        histograms,
        labels: labs[1..].to_vec(),
    })
}

/// Dump feature sequences as CSV `stock_id,date,r,c_next,x_1..x_L`, with
/// `c_next` empty on each stock's final day.
pub fn write_features(path: impl AsRef<Path>, sequences: &[FeatureSequence]) -> Result<()> {
    let path_str = path.as_ref().display().to_string();
    let file = File::create(path.as_ref()).map_err(|e| Error::io(&path_str, e))?;
    let mut out = BufWriter::new(file);
    let werr = |e: std::io::Error| Error::io(&path_str, e);
    let width = sequences.first().map(FeatureSequence::width).unwrap_or(0);
    let mut header = String::from("stock_id,date,r,c_next");
    for j in 1..=width {
        header.push_str(&format!(",x_{j}"));
    }
    writeln!(out, "{header}").map_err(werr)?;
    for seq in sequences {
        for j in 0..seq.len() {
            let label = seq
                .labels
                .get(j)
                .map(|c| c.to_string())
                .unwrap_or_default();
            let mut row = format!("{},{},{},{label}", seq.stock_id, seq.dates[j], seq.returns[j]);
            for x in &seq.histograms[j] {
                row.push_str(&format!(",{x}"));
            }
            writeln!(out, "{row}").map_err(werr)?;
        }
    }
    out.flush().map_err(werr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{AlignedDay, DailyNews};
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn lex(scores: &[(&str, f64)]) -> PolarityLexicon {
        PolarityLexicon::from_scores(scores.iter().map(|(t, p)| (t.to_string(), *p)))
    }

    fn toks(tokens: &[&str]) -> Vec<String> {
        tokens.iter().map(|t| t.to_string()).collect()
    }

    #[test]
    fn spec_covers_the_exact_polarity_extrema() {
        let spec = make_spec(&lex(&[("a", -1.0), ("b", 0.0), ("c", 2.0)]), 3);
        assert_eq!(spec.min(), -1.0);
        assert_eq!(spec.max(), 2.0);
        assert_eq!(spec.edges(), vec![-1.0, 0.0, 1.0, 2.0]);

        let single = make_spec(&lex(&[("a", 0.7)]), 4);
        assert_eq!(single.min(), single.max());
    }

    #[test]
    fn spec_extrema_match_a_linear_scan() {
        let mut rng = StdRng::seed_from_u64(7);
        let scores: Vec<(String, f64)> = (0..200)
            .map(|i| (format!("t{i}"), rng.random_range(-3.0..3.0)))
            .collect();
        let lexicon = PolarityLexicon::from_scores(scores.clone());
        let spec = make_spec(&lexicon, 5);
        let min = scores.iter().map(|(_, p)| *p).fold(f64::INFINITY, f64::min);
        let max = scores
            .iter()
            .map(|(_, p)| *p)
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(spec.min(), min);
        assert_eq!(spec.max(), max);
    }

    #[test]
    fn histogram_bins_by_hand() {
        let lexicon = lex(&[("a", -0.5), ("b", 0.2), ("c", 0.9)]);
        let spec = HistogramSpec::new(2, -1.0, 1.0, DenominatorMode::InVocab);
        let h = histogram(&spec, &lexicon, &toks(&["a", "b", "c"]));
        assert_eq!(h, vec![1.0 / 3.0, 2.0 / 3.0]);
    }

    #[test]
    fn max_polarity_lands_in_the_closed_last_bin() {
        let lexicon = lex(&[("a", 1.0)]);
        let spec = HistogramSpec::new(4, -1.0, 1.0, DenominatorMode::InVocab);
        let h = histogram(&spec, &lexicon, &toks(&["a", "a"]));
        assert_eq!(h, vec![0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn interior_edges_are_lower_inclusive() {
        let lexicon = lex(&[("edge", 0.0), ("below", -1e-9)]);
        let spec = HistogramSpec::new(2, -1.0, 1.0, DenominatorMode::InVocab);
        assert_eq!(histogram(&spec, &lexicon, &toks(&["edge"])), vec![0.0, 1.0]);
        assert_eq!(histogram(&spec, &lexicon, &toks(&["below"])), vec![1.0, 0.0]);
    }

    #[test]
    fn empty_or_oov_input_gives_the_zero_vector() {
        let lexicon = lex(&[("a", 0.5)]);
        let spec = HistogramSpec::new(3, -1.0, 1.0, DenominatorMode::InVocab);
        assert_eq!(histogram(&spec, &lexicon, &[]), vec![0.0; 3]);
        assert_eq!(histogram(&spec, &lexicon, &toks(&["x", "y"])), vec![0.0; 3]);
    }

    #[test]
    fn oov_tokens_leave_the_denominator_by_default() {
        let lexicon = lex(&[("a", 0.5)]);
        let spec = HistogramSpec::new(1, 0.0, 1.0, DenominatorMode::InVocab);
        assert_eq!(histogram(&spec, &lexicon, &toks(&["a", "x", "y", "z"])), vec![1.0]);
        let all = HistogramSpec::new(1, 0.0, 1.0, DenominatorMode::AllTokens);
        assert_eq!(histogram(&all, &lexicon, &toks(&["a", "x", "y", "z"])), vec![0.25]);
    }

    #[test]
    fn degenerate_range_puts_all_mass_in_bin_zero() {
        let lexicon = lex(&[("a", 0.7), ("b", 0.7)]);
        let spec = make_spec(&lexicon, 4);
        let h = histogram(&spec, &lexicon, &toks(&["a", "b", "a"]));
        assert_eq!(h, vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn histogram_ignores_token_order() {
        let lexicon = lex(&[("a", -0.8), ("b", 0.1), ("c", 0.6)]);
        let spec = make_spec(&lexicon, 3);
        let h1 = histogram(&spec, &lexicon, &toks(&["a", "b", "c", "b"]));
        let h2 = histogram(&spec, &lexicon, &toks(&["b", "c", "b", "a"]));
        assert_eq!(h1, h2);
    }

    #[test]
    fn returns_match_hand_arithmetic() {
        assert_eq!(returns(&[100.0, 110.0]).unwrap(), vec![0.1]);
        let r = returns(&[100.0, 110.0, 99.0]).unwrap();
        assert!((r[0] - 0.1).abs() < 1e-15);
        assert!((r[1] + 0.1).abs() < 1e-15);
        assert_eq!(returns(&[5.0, 5.0, 5.0]).unwrap(), vec![0.0, 0.0]);
        assert!(matches!(
            returns(&[5.0, -1.0, 5.0]),
            Err(Error::NonPositivePrice { index: 1, .. })
        ));
    }

    #[test]
    fn labels_follow_the_tie_goes_down_rule() {
        assert_eq!(labels(&[1.0, 2.0, 2.0, 1.0]), vec![1, 0, 0]);
        assert_eq!(labels(&[1.0, 2.0, 3.0, 4.0]), vec![1, 1, 1]);
        let mut rng = StdRng::seed_from_u64(11);
        let prices: Vec<f64> = (0..20).map(|_| rng.random_range(1.0..10.0)).collect();
        let got = labels(&prices);
        for i in 1..prices.len() {
            assert_eq!(got[i - 1], u8::from(prices[i] > prices[i - 1]));
        }
    }

    fn aligned(stock: &str, closes: &[f64], news: &[&[&str]]) -> AlignedSeries {
        assert_eq!(closes.len(), news.len());
        let days = closes
            .iter()
            .zip(news)
            .enumerate()
            .map(|(i, (&close, tokens))| {
                let date = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap() + chrono::Days::new(i as u64);
                AlignedDay {
                    date,
                    close,
                    news: DailyNews {
                        stock_id: stock.into(),
                        date,
                        tokens: toks(tokens),
                    },
                }
            })
            .collect();
        AlignedSeries {
            stock_id: stock.into(),
            days,
            dropped_docs: 0,
        }
    }

    #[test]
    fn assemble_builds_the_minimal_three_day_case() {
        let lexicon = lex(&[("good", 1.0), ("bad", -1.0)]);
        let spec = make_spec(&lexicon, 2);
        let series = aligned("s1", &[100.0, 110.0, 99.0], &[&[], &["good"], &[]]);
        let seq = assemble(&series, &lexicon, &spec).unwrap();
        assert_eq!(seq.len(), 2);
        assert_eq!(seq.labels, vec![0]);
        assert!((seq.returns[0] - 0.1).abs() < 1e-15);
        assert_eq!(seq.histograms[0], vec![0.0, 1.0]);
        assert_eq!(seq.histograms[1], vec![0.0, 0.0]);
        assert_eq!(seq.dates[0], NaiveDate::from_ymd_opt(2020, 1, 2).unwrap());
    }

    #[test]
    fn assemble_rejects_too_short_series() {
        let lexicon = lex(&[("good", 1.0)]);
        let spec = make_spec(&lexicon, 2);
        let series = aligned("s1", &[100.0, 110.0], &[&[], &[]]);
        assert!(matches!(
            assemble(&series, &lexicon, &spec),
            Err(Error::TooShort { .. })
        ));
    }

    #[test]
    fn no_news_stock_has_zero_histograms() {
        let lexicon = lex(&[("good", 1.0), ("bad", -1.0)]);
        let spec = make_spec(&lexicon, 3);
        let series = aligned("s1", &[10.0, 11.0, 12.0, 11.0], &[&[], &[], &[], &[]]);
        let seq = assemble(&series, &lexicon, &spec).unwrap();
        assert!(seq.histograms.iter().all(|h| h.iter().all(|&x| x == 0.0)));
        assert_eq!(seq.labels, vec![1, 0]);
    }

    #[test]
    fn labels_agree_with_return_signs() {
        let lexicon = lex(&[("good", 1.0)]);
        let spec = make_spec(&lexicon, 2);
        let mut rng = StdRng::seed_from_u64(3);
        let mut closes = vec![50.0];
        for _ in 0..30 {
            let r: f64 = rng.random_range(-0.05..0.05);
            let last = *closes.last().unwrap();
            closes.push(last * (1.0 + r));
        }
        let news: Vec<&[&str]> = vec![&[]; closes.len()];
        let seq = assemble(&aligned("s1", &closes, &news), &lexicon, &spec).unwrap();
        for j in 0..seq.labels.len() {
            assert_eq!(seq.labels[j] == 1, seq.returns[j + 1] > 0.0);
        }
    }

    #[test]
    fn feature_csv_dump_matches_golden_output() {
        let lexicon = lex(&[("good", 1.0), ("bad", -1.0)]);
        let spec = make_spec(&lexicon, 2);
        let series = aligned("s1", &[100.0, 110.0, 99.0], &[&[], &["good"], &["bad"]]);
        let seq = assemble(&series, &lexicon, &spec).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("features.csv");
        write_features(&path, &[seq]).unwrap();
        let got = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            got,
            "stock_id,date,r,c_next,x_1,x_2\n\
             s1,2020-01-02,0.1,0,0,1\n\
             s1,2020-01-03,-0.1,,1,0\n"
        );
    }

    proptest! {
        #[test]
        fn histogram_mass_is_conserved(
            polarities in proptest::collection::vec(-5.0f64..5.0, 1..40),
            picks in proptest::collection::vec(0usize..40, 0..60),
            bins in 1usize..12,
        ) {
            let scores: Vec<(String, f64)> =
                polarities.iter().enumerate().map(|(i, &p)| (format!("t{i}"), p)).collect();
            let lexicon = PolarityLexicon::from_scores(scores);
            let spec = make_spec(&lexicon, bins);
            let tokens: Vec<String> = picks
                .iter()
                .map(|&i| format!("t{}", i % polarities.len()))
                .collect();
            let h = histogram(&spec, &lexicon, &tokens);
            prop_assert_eq!(h.len(), bins);
            if tokens.is_empty() {
                prop_assert!(h.iter().all(|&x| x == 0.0));
            } else {
                let sum: f64 = h.iter().sum();
                prop_assert!((sum - 1.0).abs() < 1e-12);
                prop_assert!(h.iter().all(|&x| (0.0..=1.0).contains(&x)));
            }
            // Every occurrence lands in exactly one bin.
            let total: f64 = h.iter().sum::<f64>() * tokens.len() as f64;
            prop_assert!((total - tokens.len() as f64).abs() < 1e-9);
        }

        #[test]
        fn doubling_bins_refines_the_histogram(
            polarities in proptest::collection::vec(-5.0f64..5.0, 2..30),
            picks in proptest::collection::vec(0usize..30, 1..40),
            bins in 1usize..8,
        ) {
            let scores: Vec<(String, f64)> =
                polarities.iter().enumerate().map(|(i, &p)| (format!("t{i}"), p)).collect();
            let lexicon = PolarityLexicon::from_scores(scores.clone());
            let coarse = make_spec(&lexicon, bins);
            let fine = make_spec(&lexicon, bins * 2);
            // Coarse edges reappear bitwise among the fine ones, so summing
            // adjacent fine bins reproduces the coarse histogram exactly.
            let ce = coarse.edges();
            let fe = fine.edges();
            for j in 0..=bins {
                prop_assert_eq!(ce[j].to_bits(), fe[2 * j].to_bits());
            }
            let tokens: Vec<String> = picks
                .iter()
                .map(|&i| format!("t{}", i % polarities.len()))
                .collect();
            // Every value routes to the fine bin nested inside its coarse
            // bin, unless it sits bitwise on a new (odd) fine edge.
            for token in &tokens {
                let p = lexicon.polarity(token).unwrap();
                if (1..2 * bins).step_by(2).any(|j| fe[j].to_bits() == p.to_bits()) {
                    continue;
                }
                prop_assert_eq!(coarse.bin_of(p), fine.bin_of(p) / 2);
            }
            let hc = histogram(&coarse, &lexicon, &tokens);
            let hf = histogram(&fine, &lexicon, &tokens);
            for j in 0..bins {
                // Same counts on both sides; only division rounding differs.
                prop_assert!((hc[j] - (hf[2 * j] + hf[2 * j + 1])).abs() < 1e-15);
            }
        }
    }
}
