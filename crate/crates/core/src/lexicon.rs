//! Polarity lexicon induction from document co-occurrence statistics.
//!
//! Pipeline: count document-level presence, score every vocabulary token by
//! its mean PMI contrast against hand-picked seed words, pick the K most
//! extreme tokens on each side as standard sets, then score the whole
//! vocabulary against those standard sets. Positive polarity marks
//! good-news-leaning tokens.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use crate::corpus::Document;
use crate::error::{Error, Result};

pub const DEFAULT_K: usize = 100;
pub const DEFAULT_MIN_DF: u32 = 5;
pub const DEFAULT_EPSILON: f64 = 0.5;

const BUILTIN_SEEDS: &str = include_str!("../data/default_seeds.txt");

/// Document-presence statistics: how many documents contain each token and
/// each token pair. Repetitions within one document count once.
#[derive(Debug, Clone)]
pub struct CorpusStats {
    n_docs: usize,
    vocab: Vec<String>,
    index: HashMap<String, usize>,
    df: Vec<u32>,
    /// Sorted document ids containing each token; pair counts come from
    /// intersecting two postings lists on demand.
    postings: Vec<Vec<u32>>,
    epsilon: f64,
}

/// Anything that exposes a bag of tokens can feed [`build_stats`].
pub trait TokenBag {
    fn bag(&self) -> &[String];
}

impl TokenBag for Vec<String> {
    fn bag(&self) -> &[String] {
        self
    }
}

impl TokenBag for Document {
    fn bag(&self) -> &[String] {
        &self.tokens
    }
}

/// Count document frequencies over `docs`, keeping tokens with df >= min_df.
///
/// Vocabulary order is first occurrence in the corpus, which downstream
/// tie-breaks rely on being stable.
pub fn build_stats<D: TokenBag>(docs: &[D], min_df: u32) -> Result<CorpusStats> {
    build_stats_with_epsilon(docs, min_df, DEFAULT_EPSILON)
}

/// [`build_stats`] with an explicit smoothing constant for [`pmi`].
pub fn build_stats_with_epsilon<D: TokenBag>(
    docs: &[D],
    min_df: u32,
    epsilon: f64,
) -> Result<CorpusStats> {
    if docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut order: Vec<String> = Vec::new();
    let mut raw: HashMap<String, (u32, Vec<u32>)> = HashMap::new();
    for (doc_id, doc) in docs.iter().enumerate() {
        let mut seen: HashSet<&str> = HashSet::with_capacity(doc.bag().len());
        for token in doc.bag() {
            if !seen.insert(token.as_str()) {
                continue;
            }
            match raw.get_mut(token.as_str()) {
                Some((df, posts)) => {
                    *df += 1;
                    posts.push(doc_id as u32);
                }
                None => {
                    order.push(token.clone());
                    raw.insert(token.clone(), (1, vec![doc_id as u32]));
                }
            }
        }
    }

    let mut vocab = Vec::new();
    let mut df = Vec::new();
    let mut postings = Vec::new();
    for token in order {
        let (count, posts) = raw.remove(&token).unwrap();
        if count >= min_df {
            vocab.push(token);
            df.push(count);
            postings.push(posts);
        }
    }
    if vocab.is_empty() {
        return Err(Error::EmptyVocab { min_df });
    }
    let index = vocab
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), i))
        .collect();
    Ok(CorpusStats {
        n_docs: docs.len(),
        vocab,
        index,
        df,
        postings,
        epsilon,
    })
}

impl CorpusStats {
    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    fn idx(&self, token: &str) -> Result<usize> {
        self.index.get(token).copied().ok_or_else(|| Error::UnknownToken {
            token: token.to_string(),
        })
    }

    pub fn df(&self, token: &str) -> Result<u32> {
        Ok(self.df[self.idx(token)?])
    }

    /// Documents containing both tokens, by sorted-postings intersection.
    pub fn co_df(&self, w: &str, v: &str) -> Result<u32> {
        let (a, b) = (&self.postings[self.idx(w)?], &self.postings[self.idx(v)?]);
        let (mut i, mut j, mut count) = (0, 0, 0u32);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    count += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        Ok(count)
    }
}

/// Smoothed pointwise mutual information between two vocabulary tokens.
///
/// Returns ln(N * (co_df + epsilon) / (df(w) * df(v))). Smoothing applies to
/// the joint count only, so zero co-occurrence stays finite while marginal
/// frequencies remain exact.
pub fn pmi(stats: &CorpusStats, w: &str, v: &str) -> Result<f64> {
    let co = stats.co_df(w, v)? as f64;
    let dw = stats.df(w)? as f64;
    let dv = stats.df(v)? as f64;
    Ok((stats.n_docs as f64 * (co + stats.epsilon) / (dw * dv)).ln())
}

/// Hand-picked good-news and bad-news anchor tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedSets {
    pos: Vec<String>,
    neg: Vec<String>,
}

impl SeedSets {
    /// Both sides non-empty, no duplicates within or across sides.
    pub fn new(pos: Vec<String>, neg: Vec<String>) -> Result<Self> {
        if pos.is_empty() || neg.is_empty() {
            return Err(Error::BadSeeds {
                msg: "both POS and NEG sections need at least one token".into(),
            });
        }
        let mut all = HashSet::new();
        for token in pos.iter().chain(neg.iter()) {
            if !all.insert(token.as_str()) {
                return Err(Error::BadSeeds {
                    msg: format!("duplicate seed token {token:?}"),
                });
            }
        }
        Ok(SeedSets { pos, neg })
    }

    pub fn pos(&self) -> &[String] {
        &self.pos
    }

    pub fn neg(&self) -> &[String] {
        &self.neg
    }

    pub fn contains(&self, token: &str) -> bool {
        self.pos.iter().chain(self.neg.iter()).any(|t| t == token)
    }

    /// The shipped Chinese good/bad-news seed list.
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_SEEDS).expect("builtin seed list parses")
    }

    /// Parse the seed file format: a `POS:` section then a `NEG:` section,
    /// one token per line, nothing else.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        let mut current: Option<&mut Vec<String>> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            match line {
                "POS:" => current = Some(&mut pos),
                "NEG:" => current = Some(&mut neg),
                token => match current {
                    Some(ref mut section) => section.push(token.to_string()),
                    None => {
                        return Err(Error::BadSeeds {
                            msg: format!("line {}: token {token:?} before any POS:/NEG: header", i + 1),
                        })
                    }
                },
            }
        }
        Self::new(pos, neg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path_str = path.as_ref().display().to_string();
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(&path_str, e))?;
        Self::parse(&text)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path_str = path.as_ref().display().to_string();
        let mut text = String::from("POS:\n");
        for t in &self.pos {
            text.push_str(t);
            text.push('\n');
        }
        text.push_str("NEG:\n");
        for t in &self.neg {
            text.push_str(t);
            text.push('\n');
        }
        std::fs::write(path.as_ref(), text).map_err(|e| Error::io(&path_str, e))
    }

    /// Every seed must survive the frequency filter; a missing seed is a
    /// build error rather than a silent drop.
    pub fn validate_against(&self, stats: &CorpusStats) -> Result<()> {
        for token in self.pos.iter().chain(self.neg.iter()) {
            if !stats.contains(token) {
                return Err(Error::SeedNotInVocab {
                    token: token.clone(),
                });
            }
        }
        Ok(())
    }
}

/// Mean PMI to positive seeds minus mean PMI to negative seeds.
pub fn seed_polarity(stats: &CorpusStats, seeds: &SeedSets, w: &str) -> Result<f64> {
    let mean = |side: &[String]| -> Result<f64> {
        let mut sum = 0.0;
        for v in side {
            sum += pmi(stats, w, v)?;
        }
        Ok(sum / side.len() as f64)
    };
    Ok(mean(&seeds.pos)? - mean(&seeds.neg)?)
}

/// Pick the K tokens with the highest seed polarity as the positive standard
/// set and the K lowest as the negative one.
///
/// Sorting is by descending seed polarity with ties broken by ascending token
/// byte order, then first-occurrence order; the selection is the exact argmax
/// of sum(polarity over P) - sum(polarity over N) across disjoint K-subsets.
pub fn select_standard_sets(
    stats: &CorpusStats,
    seeds: &SeedSets,
    k: usize,
    exclude_seeds: bool,
) -> Result<(Vec<String>, Vec<String>)> {
    seeds.validate_against(stats)?;
    if k == 0 {
        return Err(Error::BadSeeds {
            msg: "standard set size K must be positive".into(),
        });
    }
    let mut scored: Vec<(&str, f64)> = Vec::new();
    for token in stats.vocab() {
        if exclude_seeds && seeds.contains(token) {
            continue;
        }
        scored.push((token.as_str(), seed_polarity(stats, seeds, token)?));
    }
    if 2 * k > scored.len() {
        return Err(Error::StandardSetTooLarge {
            two_k: 2 * k,
            vocab: scored.len(),
        });
    }
    scored.sort_by(|(ta, sa), (tb, sb)| {
        sb.total_cmp(sa).then_with(|| ta.cmp(tb))
    });
    let p_star: Vec<String> = scored[..k].iter().map(|(t, _)| t.to_string()).collect();
    let n_star: Vec<String> = scored[scored.len() - k..]
        .iter()
        .map(|(t, _)| t.to_string())
        .collect();
    debug_assert!(scored[k - 1].1 >= scored[scored.len() - k].1);
    Ok((p_star, n_star))
}

/// Everything [`build_lexicon`] needs beyond the corpus and seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct LexiconParams {
    /// Standard set size.
    pub k: usize,
    /// Minimum document frequency for a token to enter the vocabulary.
    pub min_df: u32,
    /// Additive smoothing on the joint document count.
    pub epsilon: f64,
    /// Keep seed tokens out of the standard sets (sensitivity runs only).
    pub exclude_seeds: bool,
}

impl Default for LexiconParams {
    fn default() -> Self {
        LexiconParams {
            k: DEFAULT_K,
            min_df: DEFAULT_MIN_DF,
            epsilon: DEFAULT_EPSILON,
            exclude_seeds: false,
        }
    }
}

/// Token polarity scores plus the standard sets and build parameters.
#[derive(Debug, Clone)]
pub struct PolarityLexicon {
    /// (token, polarity) sorted by descending polarity, ties by token bytes.
    entries: Vec<(String, f64)>,
    index: HashMap<String, usize>,
    p_star: Vec<String>,
    n_star: Vec<String>,
    pub k: usize,
    pub epsilon: f64,
    pub min_df: u32,
    /// Documents behind the statistics.
    pub n_docs: usize,
    /// Seeds used for the build; absent when loaded from a TSV export.
    pub seeds: Option<SeedSets>,
}

impl PolarityLexicon {
    /// Lexicon from bare token scores, without standard sets (K = 0) or
    /// build provenance; enough for featurization and synthetic fixtures.
    /// Tokens must be unique and at least one score must be given.
    pub fn from_scores(scores: impl IntoIterator<Item = (String, f64)>) -> Self {
        let mut entries: Vec<(String, f64)> = scores.into_iter().collect();
        assert!(!entries.is_empty(), "lexicon needs at least one token");
        entries.sort_by(|(ta, pa), (tb, pb)| pb.total_cmp(pa).then_with(|| ta.cmp(tb)));
        let index: HashMap<String, usize> = entries
            .iter()
            .enumerate()
            .map(|(i, (t, _))| (t.clone(), i))
            .collect();
        assert!(index.len() == entries.len(), "duplicate token in scores");
        PolarityLexicon {
            entries,
            index,
            p_star: Vec::new(),
            n_star: Vec::new(),
            k: 0,
            epsilon: 0.0,
            min_df: 0,
            n_docs: 0,
            seeds: None,
        }
    }

    pub fn polarity(&self, token: &str) -> Option<f64> {
        self.index.get(token).map(|&i| self.entries[i].1)
    }

    /// Entries in export order: descending polarity, ties by token bytes.
    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn p_star(&self) -> &[String] {
        &self.p_star
    }

    pub fn n_star(&self) -> &[String] {
        &self.n_star
    }

    /// Extreme polarity values over the vocabulary, (min, max).
    pub fn polarity_range(&self) -> (f64, f64) {
        let max = self.entries.first().map(|(_, p)| *p).unwrap_or(0.0);
        let min = self.entries.last().map(|(_, p)| *p).unwrap_or(0.0);
        (min, max)
    }

    /// TSV export: one `# K= epsilon= min_df= N=` header, then
    /// `token<TAB>polarity<TAB>in_p_star<TAB>in_n_star` rows in entry order.
    /// Polarity uses the shortest round-trip float form, so re-importing and
    /// re-exporting is byte-identical.
    pub fn to_tsv(&self) -> String {
        let p_set: HashSet<&str> = self.p_star.iter().map(|s| s.as_str()).collect();
        let n_set: HashSet<&str> = self.n_star.iter().map(|s| s.as_str()).collect();
        let mut out = String::new();
        writeln!(
            out,
            "# K={} epsilon={} min_df={} N={}",
            self.k, self.epsilon, self.min_df, self.n_docs
        )
        .unwrap();
        for (token, pol) in &self.entries {
            writeln!(
                out,
                "{token}\t{pol}\t{}\t{}",
                u8::from(p_set.contains(token.as_str())),
                u8::from(n_set.contains(token.as_str()))
            )
            .unwrap();
        }
        out
    }

    pub fn write_tsv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path_str = path.as_ref().display().to_string();
        std::fs::write(path.as_ref(), self.to_tsv()).map_err(|e| Error::io(&path_str, e))
    }

    pub fn from_tsv(text: &str, path_for_errors: &str) -> Result<Self> {
        let fmt_err = |msg: String| Error::LexiconFormat {
            path: path_for_errors.to_string(),
            msg,
        };
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| fmt_err("empty lexicon file".into()))?;
        let rest = header
            .strip_prefix("# ")
            .ok_or_else(|| fmt_err(format!("bad header line {header:?}")))?;
        let mut k = None;
        let mut epsilon = None;
        let mut min_df = None;
        let mut n_docs = None;
        for part in rest.split(' ') {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| fmt_err(format!("bad header field {part:?}")))?;
            let parse_fail = |e: &dyn std::fmt::Display| fmt_err(format!("bad header {key}={value:?}: {e}"));
            match key {
                "K" => k = Some(value.parse::<usize>().map_err(|e| parse_fail(&e))?),
                "epsilon" => epsilon = Some(value.parse::<f64>().map_err(|e| parse_fail(&e))?),
                "min_df" => min_df = Some(value.parse::<u32>().map_err(|e| parse_fail(&e))?),
                "N" => n_docs = Some(value.parse::<usize>().map_err(|e| parse_fail(&e))?),
                other => return Err(fmt_err(format!("unknown header field {other:?}"))),
            }
        }
        let (k, epsilon, min_df, n_docs) = match (k, epsilon, min_df, n_docs) {
            (Some(k), Some(e), Some(m), Some(n)) => (k, e, m, n),
            _ => return Err(fmt_err("header must carry K, epsilon, min_df and N".into())),
        };

        let mut entries = Vec::new();
        let mut p_star = Vec::new();
        let mut n_star = Vec::new();
        for (i, line) in lines {
            let cols: Vec<&str> = line.split('\t').collect();
            let line_err = |msg: String| fmt_err(format!("line {}: {msg}", i + 1));
            if cols.len() != 4 {
                return Err(line_err(format!("expected 4 columns, found {}", cols.len())));
            }
            let pol: f64 = cols[1]
                .parse()
                .map_err(|e| line_err(format!("bad polarity {:?}: {e}", cols[1])))?;
            let flag = |col: usize| -> Result<bool> {
                match cols[col] {
                    "0" => Ok(false),
                    "1" => Ok(true),
                    other => Err(line_err(format!("bad flag {other:?}"))),
                }
            };
            if flag(2)? {
                p_star.push(cols[0].to_string());
            }
            if flag(3)? {
                n_star.push(cols[0].to_string());
            }
            entries.push((cols[0].to_string(), pol));
        }
        if entries.is_empty() {
            return Err(fmt_err("no lexicon entries".into()));
        }
        if p_star.len() != k || n_star.len() != k {
            return Err(fmt_err(format!(
                "standard set sizes ({}, {}) disagree with header K={k}",
                p_star.len(),
                n_star.len()
            )));
        }
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, (t, _))| (t.clone(), i))
            .collect();
        Ok(PolarityLexicon {
            entries,
            index,
            p_star,
            n_star,
            k,
            epsilon,
            min_df,
            n_docs,
            seeds: None,
        })
    }

    pub fn read_tsv(path: impl AsRef<Path>) -> Result<Self> {
        let path_str = path.as_ref().display().to_string();
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(&path_str, e))?;
        Self::from_tsv(&text, &path_str)
    }
}

/// Full lexicon build: statistics, standard set selection, then a polarity
/// score for every vocabulary token as mean PMI to the positive standard set
/// minus mean PMI to the negative one.
pub fn build_lexicon<D: TokenBag>(
    docs: &[D],
    seeds: &SeedSets,
    params: &LexiconParams,
) -> Result<PolarityLexicon> {
    let stats = build_stats_with_epsilon(docs, params.min_df, params.epsilon)?;
    let (p_star, n_star) = select_standard_sets(&stats, seeds, params.k, params.exclude_seeds)?;

    let mut entries: Vec<(String, f64)> = Vec::with_capacity(stats.vocab().len());
    for token in stats.vocab() {
        let mean = |side: &[String]| -> Result<f64> {
            let mut sum = 0.0;
            for anchor in side {
                sum += pmi(&stats, token, anchor)?;
            }
            Ok(sum / side.len() as f64)
        };
        entries.push((token.clone(), mean(&p_star)? - mean(&n_star)?));
    }
    entries.sort_by(|(ta, pa), (tb, pb)| pb.total_cmp(pa).then_with(|| ta.cmp(tb)));
    let index = entries
        .iter()
        .enumerate()
        .map(|(i, (t, _))| (t.clone(), i))
        .collect();
    Ok(PolarityLexicon {
        entries,
        index,
        p_star,
        n_star,
        k: params.k,
        epsilon: params.epsilon,
        min_df: params.min_df,
        n_docs: stats.n_docs(),
        seeds: Some(seeds.clone()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn docs(raw: &[&[&str]]) -> Vec<Vec<String>> {
        raw.iter()
            .map(|d| d.iter().map(|t| t.to_string()).collect())
            .collect()
    }

    fn seeds(pos: &[&str], neg: &[&str]) -> SeedSets {
        SeedSets::new(
            pos.iter().map(|t| t.to_string()).collect(),
            neg.iter().map(|t| t.to_string()).collect(),
        )
        .unwrap()
    }

    // ln(1.125) and ln(2.5) to full f64 precision.
    const LN_1_125: f64 = 0.11778303565638346;
    const LN_2_5: f64 = 0.9162907318741551;
    const LN_0_5: f64 = -std::f64::consts::LN_2;

    #[test]
    fn build_stats_counts_document_presence() {
        let d = docs(&[&["a", "b"], &["a"], &["b", "c"]]);
        let stats = build_stats(&d, 1).unwrap();
        assert_eq!(stats.n_docs(), 3);
        assert_eq!(stats.df("a").unwrap(), 2);
        assert_eq!(stats.df("b").unwrap(), 2);
        assert_eq!(stats.df("c").unwrap(), 1);
        assert_eq!(stats.co_df("a", "b").unwrap(), 1);
        assert_eq!(stats.co_df("b", "a").unwrap(), 1);
        assert_eq!(stats.co_df("a", "c").unwrap(), 0);
    }

    #[test]
    fn min_df_filters_vocab() {
        let d = docs(&[&["a", "b"], &["a"], &["b", "c"]]);
        let stats = build_stats(&d, 2).unwrap();
        assert_eq!(stats.vocab(), ["a", "b"]);
        assert!(!stats.contains("c"));
    }

    #[test]
    fn repeated_tokens_count_once_per_document() {
        let d = docs(&[&["a", "a", "a"]]);
        let stats = build_stats(&d, 1).unwrap();
        assert_eq!(stats.df("a").unwrap(), 1);
        assert_eq!(stats.co_df("a", "a").unwrap(), 1);
    }

    #[test]
    fn empty_corpus_and_empty_vocab_are_errors() {
        let empty: Vec<Vec<String>> = Vec::new();
        assert!(matches!(build_stats(&empty, 1), Err(Error::EmptyCorpus)));
        let d = docs(&[&["a"], &["b"]]);
        assert!(matches!(
            build_stats(&d, 5),
            Err(Error::EmptyVocab { min_df: 5 })
        ));
    }

    #[test]
    fn pmi_matches_hand_computed_values() {
        // Both tokens in all 4 docs: ln(4 * 4.5 / 16) = ln(1.125).
        let d = docs(&[&["w", "v"], &["w", "v"], &["w", "v"], &["w", "v"]]);
        let stats = build_stats(&d, 1).unwrap();
        assert!((pmi(&stats, "w", "v").unwrap() - LN_1_125).abs() < 1e-15);

        // df(w)=df(v)=2, co_df=2: ln(4 * 2.5 / 4) = ln(2.5).
        let d = docs(&[&["w", "v"], &["w", "v"], &["x"], &["x"]]);
        let stats = build_stats(&d, 1).unwrap();
        assert!((pmi(&stats, "w", "v").unwrap() - LN_2_5).abs() < 1e-15);

        // Zero co-occurrence stays finite: ln(4 * 0.5 / 4) = ln(0.5).
        let d = docs(&[&["w"], &["w"], &["v"], &["v"]]);
        let stats = build_stats(&d, 1).unwrap();
        let p = pmi(&stats, "w", "v").unwrap();
        assert!(p.is_finite() && p < 0.0);
        assert!((p - LN_0_5).abs() < 1e-15);
    }

    #[test]
    fn pmi_is_symmetric_and_rejects_unknown_tokens() {
        let d = docs(&[&["w", "v"], &["w"], &["v"], &["w", "v", "x"]]);
        let stats = build_stats(&d, 1).unwrap();
        for (a, b) in [("w", "v"), ("w", "x"), ("v", "x")] {
            assert_eq!(
                pmi(&stats, a, b).unwrap().to_bits(),
                pmi(&stats, b, a).unwrap().to_bits()
            );
        }
        assert!(matches!(
            pmi(&stats, "w", "zz"),
            Err(Error::UnknownToken { .. })
        ));
    }

    #[test]
    fn pmi_is_strictly_increasing_in_joint_count() {
        // Three corpora, identical N and marginals, co_df 0 / 1 / 2.
        let fixtures = [
            docs(&[&["w"], &["w"], &["v"], &["v"], &["z"]]),
            docs(&[&["w", "v"], &["w"], &["v"], &["z"], &["z"]]),
            docs(&[&["w", "v"], &["w", "v"], &["z"], &["z"], &["z"]]),
        ];
        let mut last = f64::NEG_INFINITY;
        for d in &fixtures {
            let stats = build_stats(d, 1).unwrap();
            assert_eq!(stats.df("w").unwrap(), 2);
            assert_eq!(stats.df("v").unwrap(), 2);
            let p = pmi(&stats, "w", "v").unwrap();
            assert!(p > last);
            last = p;
        }
    }

    #[test]
    fn seed_polarity_is_zero_under_symmetry() {
        let d = docs(&[&["w", "u"], &["w", "v"], &["u"], &["v"]]);
        let stats = build_stats(&d, 1).unwrap();
        let s = seeds(&["u"], &["v"]);
        assert_eq!(seed_polarity(&stats, &s, "w").unwrap(), 0.0);
    }

    #[test]
    fn seed_polarity_favors_own_class() {
        // Positive and negative seeds never share a document.
        let d = docs(&[
            &["u1", "u2"],
            &["u1", "u2"],
            &["u1", "x"],
            &["v1", "v2"],
            &["v1", "v2"],
            &["v1", "x"],
        ]);
        let stats = build_stats(&d, 1).unwrap();
        let s = seeds(&["u1", "u2"], &["v1", "v2"]);
        assert!(seed_polarity(&stats, &s, "u1").unwrap() > 0.0);
        assert!(seed_polarity(&stats, &s, "v1").unwrap() < 0.0);
    }

    #[test]
    fn seed_polarity_matches_pmi_difference() {
        let d = docs(&[&["w", "u"], &["w", "u"], &["w", "v"], &["u", "v"], &["w"]]);
        let stats = build_stats(&d, 1).unwrap();
        let s = seeds(&["u"], &["v"]);
        let expected = pmi(&stats, "w", "u").unwrap() - pmi(&stats, "w", "v").unwrap();
        assert_eq!(seed_polarity(&stats, &s, "w").unwrap(), expected);
    }

    /// Graded corpus: tokens a..f co-occur with seed u (resp. v) with joint
    /// counts 3/2/1 (resp. 1/2/3), giving seed polarities
    /// ln7 > ln5 > ln3 > -ln3 > -ln5 > -ln7; the seeds themselves score
    /// +/- ln13.
    fn graded_corpus() -> Vec<Vec<String>> {
        let mut d: Vec<Vec<String>> = Vec::new();
        for (token, count) in [("a", 3), ("b", 2), ("c", 1)] {
            for _ in 0..count {
                d.push(vec![token.to_string(), "u".to_string()]);
            }
        }
        for (token, count) in [("d", 1), ("e", 2), ("f", 3)] {
            for _ in 0..count {
                d.push(vec![token.to_string(), "v".to_string()]);
            }
        }
        d
    }

    #[test]
    fn select_takes_top_and_bottom_of_the_sorted_order() {
        let d = graded_corpus();
        let stats = build_stats(&d, 1).unwrap();
        let s = seeds(&["u"], &["v"]);
        // Seeds excluded: six candidates with distinct scores. Both sets
        // come back in descending seed-polarity order.
        let (p, n) = select_standard_sets(&stats, &s, 2, true).unwrap();
        assert_eq!(p, ["a", "b"]);
        assert_eq!(n, ["e", "f"]);
        // Seeds included: u and v are the extremes.
        let (p, n) = select_standard_sets(&stats, &s, 2, false).unwrap();
        assert_eq!(p, ["u", "a"]);
        assert_eq!(n, ["f", "v"]);
    }

    #[test]
    fn select_breaks_ties_by_token_byte_order() {
        // Every candidate co-occurs with u and v equally: all scores zero.
        let d = docs(&[
            &["c", "u", "v"],
            &["a", "u", "v"],
            &["b", "u", "v"],
            &["u"],
            &["v"],
        ]);
        let stats = build_stats(&d, 1).unwrap();
        let s = seeds(&["u"], &["v"]);
        let (p, n) = select_standard_sets(&stats, &s, 1, true).unwrap();
        assert_eq!(p, ["a"]);
        assert_eq!(n, ["c"]);
    }

    #[test]
    fn select_rejects_oversized_k_and_missing_seeds() {
        let d = docs(&[&["a", "u"], &["b", "v"], &["u"], &["v"]]);
        let stats = build_stats(&d, 1).unwrap();
        let s = seeds(&["u"], &["v"]);
        assert!(matches!(
            select_standard_sets(&stats, &s, 3, false),
            Err(Error::StandardSetTooLarge { two_k: 6, vocab: 4 })
        ));
        let missing = seeds(&["u"], &["nope"]);
        assert!(matches!(
            select_standard_sets(&stats, &missing, 1, false),
            Err(Error::SeedNotInVocab { .. })
        ));
    }

    /// Exhaustive argmax of sum(score over P) - sum(score over N) across all
    /// disjoint K-subset pairs, with canonical by-index summation.
    fn brute_force_objective(scores: &[f64], k: usize) -> f64 {
        fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
            let mut out = Vec::new();
            let mut cur = Vec::new();
            fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
                if cur.len() == k {
                    out.push(cur.clone());
                    return;
                }
                for i in start..n {
                    cur.push(i);
                    rec(i + 1, n, k, cur, out);
                    cur.pop();
                }
            }
            rec(0, n, k, &mut cur, &mut out);
            out
        }
        let mut best = f64::NEG_INFINITY;
        for p in subsets(scores.len(), k) {
            for n in subsets(scores.len(), k) {
                if p.iter().any(|i| n.contains(i)) {
                    continue;
                }
                let obj: f64 = p.iter().map(|&i| scores[i]).sum::<f64>()
                    - n.iter().map(|&i| scores[i]).sum::<f64>();
                if obj > best {
                    best = obj;
                }
            }
        }
        best
    }

    #[test]
    fn select_attains_the_exhaustive_maximum() {
        let d = graded_corpus();
        let stats = build_stats(&d, 1).unwrap();
        let s = seeds(&["u"], &["v"]);
        let scores: Vec<f64> = stats
            .vocab()
            .iter()
            .map(|t| seed_polarity(&stats, &s, t).unwrap())
            .collect();
        for k in 1..=3 {
            let (p, n) = select_standard_sets(&stats, &s, k, false).unwrap();
            let score_of = |token: &str| {
                let i = stats.vocab().iter().position(|t| t == token).unwrap();
                scores[i]
            };
            let mut p_idx: Vec<usize> = p
                .iter()
                .map(|t| stats.vocab().iter().position(|v| v == t).unwrap())
                .collect();
            let mut n_idx: Vec<usize> = n
                .iter()
                .map(|t| stats.vocab().iter().position(|v| v == t).unwrap())
                .collect();
            p_idx.sort();
            n_idx.sort();
            let obj: f64 = p_idx.iter().map(|&i| scores[i]).sum::<f64>()
                - n_idx.iter().map(|&i| scores[i]).sum::<f64>();
            assert_eq!(obj, brute_force_objective(&scores, k));
            // Separation between the chosen sides.
            let p_min = p.iter().map(|t| score_of(t)).fold(f64::INFINITY, f64::min);
            let n_max = n.iter().map(|t| score_of(t)).fold(f64::NEG_INFINITY, f64::max);
            assert!(p_min >= n_max);
        }
    }

    #[test]
    fn lexicon_separates_planted_clusters() {
        let d = graded_corpus();
        let s = seeds(&["u"], &["v"]);
        let params = LexiconParams {
            k: 2,
            min_df: 1,
            epsilon: 0.5,
            exclude_seeds: false,
        };
        let lex = build_lexicon(&d, &s, &params).unwrap();
        assert_eq!(lex.len(), 8);
        for token in lex.p_star() {
            assert!(lex.polarity(token).unwrap() > 0.0, "{token}");
        }
        for token in lex.n_star() {
            assert!(lex.polarity(token).unwrap() < 0.0, "{token}");
        }
        // Mirror-symmetric corpus: equidistant token scores exactly zero.
        let d = docs(&[&["w", "u"], &["w", "v"], &["u", "a"], &["v", "b"]]);
        let lex = build_lexicon(
            &d,
            &seeds(&["u"], &["v"]),
            &LexiconParams {
                k: 1,
                min_df: 1,
                epsilon: 0.5,
                exclude_seeds: true,
            },
        )
        .unwrap();
        assert_eq!(lex.p_star(), ["a"]);
        assert_eq!(lex.n_star(), ["b"]);
        assert_eq!(lex.polarity("w").unwrap(), 0.0);
    }

    /// Naive recount: rebuild every count with hash sets straight from the
    /// raw documents and apply the formulas directly.
    fn naive_polarity(
        raw: &[Vec<String>],
        p_star: &[String],
        n_star: &[String],
        w: &str,
        epsilon: f64,
    ) -> f64 {
        let n = raw.len() as f64;
        let present = |t: &str| -> Vec<usize> {
            raw.iter()
                .enumerate()
                .filter(|(_, d)| d.iter().any(|x| x == t))
                .map(|(i, _)| i)
                .collect()
        };
        let naive_pmi = |a: &str, b: &str| -> f64 {
            let pa = present(a);
            let pb = present(b);
            let co = pa.iter().filter(|i| pb.contains(i)).count() as f64;
            (n * (co + epsilon) / (pa.len() as f64 * pb.len() as f64)).ln()
        };
        let mean = |side: &[String]| -> f64 {
            side.iter().map(|v| naive_pmi(w, v)).sum::<f64>() / side.len() as f64
        };
        mean(p_star) - mean(n_star)
    }

    #[test]
    fn lexicon_polarity_matches_naive_recount() {
        let d = graded_corpus();
        let s = seeds(&["u"], &["v"]);
        let params = LexiconParams {
            k: 2,
            min_df: 1,
            epsilon: 0.5,
            exclude_seeds: false,
        };
        let lex = build_lexicon(&d, &s, &params).unwrap();
        for (token, pol) in lex.entries() {
            let naive = naive_polarity(&d, lex.p_star(), lex.n_star(), token, 0.5);
            let denom = naive.abs().max(1e-30);
            assert!(
                ((pol - naive) / denom).abs() < 1e-12,
                "{token}: {pol} vs {naive}"
            );
        }
    }

    #[test]
    fn tsv_round_trip_is_byte_identical() {
        let d = graded_corpus();
        let s = seeds(&["u"], &["v"]);
        let params = LexiconParams {
            k: 2,
            min_df: 1,
            epsilon: 0.5,
            exclude_seeds: false,
        };
        let lex = build_lexicon(&d, &s, &params).unwrap();
        let tsv = lex.to_tsv();
        assert!(tsv.starts_with("# K=2 epsilon=0.5 min_df=1 N=12\n"));
        let reloaded = PolarityLexicon::from_tsv(&tsv, "mem").unwrap();
        assert_eq!(reloaded.to_tsv(), tsv);
        for (token, pol) in lex.entries() {
            assert_eq!(reloaded.polarity(token).unwrap().to_bits(), pol.to_bits());
        }
        let mut p_orig = lex.p_star().to_vec();
        let mut p_back = reloaded.p_star().to_vec();
        p_orig.sort();
        p_back.sort();
        assert_eq!(p_orig, p_back);
    }

    #[test]
    fn malformed_tsv_is_rejected() {
        for text in [
            "",
            "no header\n",
            "# K=1 epsilon=0.5 min_df=1\n",
            "# K=1 epsilon=0.5 min_df=1 N=4\nfoo\t0.5\t1\n",
            "# K=1 epsilon=0.5 min_df=1 N=4\nfoo\tnan?\t1\t0\n",
            "# K=2 epsilon=0.5 min_df=1 N=4\nfoo\t0.5\t1\t0\nbar\t-0.5\t0\t1\n",
        ] {
            assert!(
                matches!(
                    PolarityLexicon::from_tsv(text, "mem"),
                    Err(Error::LexiconFormat { .. })
                ),
                "accepted {text:?}"
            );
        }
    }

    #[test]
    fn builtin_seed_list_has_ten_tokens_per_side() {
        let s = SeedSets::builtin();
        assert_eq!(s.pos().len(), 10);
        assert_eq!(s.neg().len(), 10);
        assert_eq!(s.pos()[0], "受益");
        assert_eq!(s.neg()[0], "下滑");
        assert!(s.contains("利好"));
        assert!(s.contains("利空"));
    }

    #[test]
    fn seed_parsing_rejects_bad_files() {
        assert!(SeedSets::parse("利好\nPOS:\nx\nNEG:\ny\n").is_err());
        assert!(SeedSets::parse("POS:\nx\nNEG:\n").is_err());
        assert!(SeedSets::parse("POS:\nx\nNEG:\nx\n").is_err());
        let ok = SeedSets::parse("POS:\n\na\nNEG:\nb\n").unwrap();
        assert_eq!(ok.pos(), ["a"]);
    }

    #[test]
    fn seed_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("seeds.txt");
        let s = SeedSets::builtin();
        s.write(&path).unwrap();
        assert_eq!(SeedSets::load(&path).unwrap(), s);
    }
}
