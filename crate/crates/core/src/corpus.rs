//! Price and news ingestion plus per-stock date alignment.
//!
//! Input formats:
//! - prices: UTF-8 CSV with header `stock_id,date,open,close,high,volume`,
//!   ISO-8601 dates, `.` decimal point, no thousands separators;
//! - news: UTF-8 JSONL, one object per line with fields `doc_id`, `date`,
//!   `stock_id` and `tokens` (a single string of space-separated tokens).
//!
//! Tokenization happens upstream; this layer only splits on single spaces.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One trading day of price data for one stock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceBar {
    pub date: NaiveDate,
    pub open: f64,
    pub close: f64,
    pub high: f64,
    pub volume: u64,
}

impl PriceBar {
    fn validate(&self) -> std::result::Result<(), String> {
        let bad = |p: f64| p.is_nan() || p <= 0.0;
        if bad(self.open) || bad(self.close) || bad(self.high) {
            return Err(format!(
                "prices must be positive (open={}, close={}, high={})",
                self.open, self.close, self.high
            ));
        }
        if self.high < self.open.max(self.close) {
            return Err(format!(
                "high {} below max(open, close) = {}",
                self.high,
                self.open.max(self.close)
            ));
        }
        Ok(())
    }
}

/// Date-ordered price bars for one stock.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    pub stock_id: String,
    pub bars: Vec<PriceBar>,
}

impl PriceSeries {
    /// Close prices in date order.
    pub fn closes(&self) -> Vec<f64> {
        self.bars.iter().map(|b| b.close).collect()
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }
}

/// One pre-tokenized news document tied to a stock and a calendar date.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub date: NaiveDate,
    pub stock_id: String,
    pub tokens: Vec<String>,
}

/// All news tokens attached to one trading day of one stock.
///
/// Empty `tokens` means a no-news day; that record is synthesized during
/// alignment so every trading day carries exactly one `DailyNews`.
#[derive(Debug, Clone, PartialEq)]
pub struct DailyNews {
    pub stock_id: String,
    pub date: NaiveDate,
    pub tokens: Vec<String>,
}

/// One aligned trading day: close price plus that day's news.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedDay {
    pub date: NaiveDate,
    pub close: f64,
    pub news: DailyNews,
}

/// A stock's price series zipped with its news, one record per trading day.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedSeries {
    pub stock_id: String,
    pub days: Vec<AlignedDay>,
    /// Documents dated after the last trading day, dropped during alignment.
    pub dropped_docs: usize,
}

impl AlignedSeries {
    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    pub fn closes(&self) -> Vec<f64> {
        self.days.iter().map(|d| d.close).collect()
    }
}

const PRICE_HEADER: [&str; 6] = ["stock_id", "date", "open", "close", "high", "volume"];

/// Load and validate a price CSV, returning one series per stock.
///
/// Series appear in order of first occurrence in the file; bars within a
/// series are sorted by date. Duplicate `(stock, date)` pairs and series
/// shorter than two bars are errors.
pub fn load_prices(path: impl AsRef<Path>) -> Result<Vec<PriceSeries>> {
    let path = path.as_ref();
    let path_str = path.display().to_string();
    let file = File::open(path).map_err(|e| Error::io(&path_str, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(BufReader::new(file));

    let header = reader
        .headers()
        .map_err(|e| Error::PriceRow {
            path: path_str.clone(),
            line: 1,
            msg: e.to_string(),
        })?
        .clone();
    if header.iter().collect::<Vec<_>>() != PRICE_HEADER {
        return Err(Error::PriceRow {
            path: path_str,
            line: 1,
            msg: format!(
                "expected header {:?}, found {:?}",
                PRICE_HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }

    let mut order: Vec<String> = Vec::new();
    let mut by_stock: HashMap<String, Vec<PriceBar>> = HashMap::new();

    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e
                .position()
                .map(|p| p.line())
                .unwrap_or(0);
            Error::PriceRow {
                path: path_str.clone(),
                line,
                msg: e.to_string(),
            }
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let row_err = |msg: String| Error::PriceRow {
            path: path_str.clone(),
            line,
            msg,
        };

        if record.len() != 6 {
            return Err(row_err(format!("expected 6 columns, found {}", record.len())));
        }
        let field = |i: usize| record.get(i).unwrap_or("").trim();

        let stock_id = field(0).to_string();
        if stock_id.is_empty() {
            return Err(row_err("empty stock_id".into()));
        }
        let date = NaiveDate::parse_from_str(field(1), "%Y-%m-%d")
            .map_err(|e| row_err(format!("bad date {:?}: {e}", field(1))))?;
        let parse_price = |i: usize, name: &str| -> Result<f64> {
            field(i)
                .parse::<f64>()
                .map_err(|e| row_err(format!("bad {name} {:?}: {e}", field(i))))
        };
        let open = parse_price(2, "open")?;
        let close = parse_price(3, "close")?;
        let high = parse_price(4, "high")?;
        let volume = field(5)
            .parse::<u64>()
            .map_err(|e| row_err(format!("bad volume {:?}: {e}", field(5))))?;

        let bar = PriceBar {
            date,
            open,
            close,
            high,
            volume,
        };
        bar.validate().map_err(row_err)?;

        if !by_stock.contains_key(&stock_id) {
            order.push(stock_id.clone());
        }
        by_stock.entry(stock_id).or_default().push(bar);
    }

    let mut out = Vec::with_capacity(order.len());
    for stock_id in order {
        let mut bars = by_stock.remove(&stock_id).unwrap();
        bars.sort_by_key(|b| b.date);
        for pair in bars.windows(2) {
            if pair[0].date == pair[1].date {
                return Err(Error::DuplicateDate {
                    stock: stock_id,
                    date: pair[0].date.to_string(),
                });
            }
        }
        if bars.len() < 2 {
            return Err(Error::ShortSeries {
                stock: stock_id,
                len: bars.len(),
            });
        }
        out.push(PriceSeries { stock_id, bars });
    }
    Ok(out)
}

/// Write price series back to the CSV format accepted by [`load_prices`].
pub fn write_prices(path: impl AsRef<Path>, series: &[PriceSeries]) -> Result<()> {
    let path_str = path.as_ref().display().to_string();
    let file = File::create(path.as_ref()).map_err(|e| Error::io(&path_str, e))?;
    let mut out = std::io::BufWriter::new(file);
    let werr = |e: std::io::Error| Error::io(&path_str, e);
    writeln!(out, "{}", PRICE_HEADER.join(",")).map_err(werr)?;
    for s in series {
        for b in &s.bars {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                s.stock_id, b.date, b.open, b.close, b.high, b.volume
            )
            .map_err(werr)?;
        }
    }
    out.flush().map_err(werr)
}

#[derive(Serialize, Deserialize)]
struct NewsLine<'a> {
    doc_id: &'a str,
    date: &'a str,
    stock_id: &'a str,
    tokens: &'a str,
}

/// Load a news JSONL file into documents in file order.
///
/// The `tokens` field is split on single spaces; an empty field or an empty
/// token (from consecutive spaces) is an error naming the line.
pub fn load_news(path: impl AsRef<Path>) -> Result<Vec<Document>> {
    let path = path.as_ref();
    let path_str = path.display().to_string();
    let file = File::open(path).map_err(|e| Error::io(&path_str, e))?;
    let reader = BufReader::new(file);

    let mut docs = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx as u64 + 1;
        let line = line.map_err(|e| Error::io(&path_str, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let line_err = |msg: String| Error::NewsLine {
            path: path_str.clone(),
            line: line_no,
            msg,
        };
        let parsed: NewsLine = serde_json::from_str(&line).map_err(|e| line_err(e.to_string()))?;
        let date = NaiveDate::parse_from_str(parsed.date, "%Y-%m-%d")
            .map_err(|e| line_err(format!("bad date {:?}: {e}", parsed.date)))?;
        if parsed.tokens.is_empty() {
            return Err(line_err("empty tokens field".into()));
        }
        let mut tokens = Vec::new();
        for tok in parsed.tokens.split(' ') {
            if tok.is_empty() {
                return Err(line_err("empty token (consecutive or leading spaces)".into()));
            }
            if tok.chars().any(char::is_whitespace) {
                return Err(line_err(format!("token {tok:?} contains whitespace")));
            }
            tokens.push(tok.to_string());
        }
        if parsed.stock_id.is_empty() {
            return Err(line_err("empty stock_id".into()));
        }
        docs.push(Document {
            doc_id: parsed.doc_id.to_string(),
            date,
            stock_id: parsed.stock_id.to_string(),
            tokens,
        });
    }
    Ok(docs)
}

/// Write documents back to the JSONL format accepted by [`load_news`].
pub fn write_news(path: impl AsRef<Path>, docs: &[Document]) -> Result<()> {
    let path_str = path.as_ref().display().to_string();
    let file = File::create(path.as_ref()).map_err(|e| Error::io(&path_str, e))?;
    let mut out = std::io::BufWriter::new(file);
    for doc in docs {
        let line = serde_json::to_string(&NewsLine {
            doc_id: &doc.doc_id,
            date: &doc.date.to_string(),
            stock_id: &doc.stock_id,
            tokens: &doc.tokens.join(" "),
        })
        .expect("news line serializes");
        writeln!(out, "{line}").map_err(|e| Error::io(&path_str, e))?;
    }
    out.flush().map_err(|e| Error::io(&path_str, e))
}

/// Zip a price series with its documents into one record per trading day.
///
/// Same-day documents concatenate in input order. A document dated on a
/// non-trading day merges into the next trading day (its earliest tradable
/// impact); documents after the final trading day are dropped and counted.
pub fn align(prices: &PriceSeries, docs: &[Document]) -> AlignedSeries {
    let mut day_tokens: Vec<Vec<String>> = vec![Vec::new(); prices.bars.len()];
    let mut dropped = 0usize;

    for doc in docs {
        if doc.stock_id != prices.stock_id {
            continue;
        }
        // First trading day on or after the document date.
        let slot = prices.bars.partition_point(|b| b.date < doc.date);
        if slot == prices.bars.len() {
            dropped += 1;
        } else {
            day_tokens[slot].extend(doc.tokens.iter().cloned());
        }
    }

    let days = prices
        .bars
        .iter()
        .zip(day_tokens)
        .map(|(bar, tokens)| AlignedDay {
            date: bar.date,
            close: bar.close,
            news: DailyNews {
                stock_id: prices.stock_id.clone(),
                date: bar.date,
                tokens,
            },
        })
        .collect();

    AlignedSeries {
        stock_id: prices.stock_id.clone(),
        days,
        dropped_docs: dropped,
    }
}
