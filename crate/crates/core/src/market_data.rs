//! Price panel ingestion and loss series construction.
//!
//! Input is UTF-8 CSV in one of two layouts, detected from the header:
//!
//! * wide — a date column followed by one column per ticker:
//!   `Date,AAA,BBB` with one row per trading date;
//! * long — exactly the three columns `date,ticker,price` in any order.
//!
//! Dates must be ISO-8601 (`YYYY-MM-DD`). Lines starting with `#` are
//! skipped, so panels written by this crate (which carry a provenance
//! comment) load back unchanged. Panels are rectangular: every ticker has a
//! strictly positive price on every date. [`load_prices`] rejects gaps;
//! [`load_prices_dropping`] instead drops tickers without a full history and
//! reports them, which mirrors how a full-history stock universe is built.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::weights::Weights;

/// Column layout of an input CSV.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum CsvSchema {
    /// Detect wide vs long from the header.
    #[default]
    Auto,
    /// Wide layout; the named column holds the date, all others are tickers.
    Wide { date_column: String },
    /// Long layout with explicit column names.
    Long {
        date_column: String,
        ticker_column: String,
        price_column: String,
    },
}

/// Date-aligned rectangular matrix of strictly positive prices.
#[derive(Clone, Debug)]
pub struct PricePanel {
    dates: Vec<NaiveDate>,
    tickers: Vec<String>,
    prices: Vec<Vec<f64>>, // one row per date
}

impl PricePanel {
    /// Builds a panel, validating shape, date order, and price positivity.
    pub fn new(dates: Vec<NaiveDate>, tickers: Vec<String>, prices: Vec<Vec<f64>>) -> Result<Self> {
        if dates.is_empty() || tickers.is_empty() {
            return Err(Error::EmptyInput("panel has no dates or no tickers".into()));
        }
        if prices.len() != dates.len() {
            return Err(Error::DimensionMismatch {
                left: prices.len(),
                right: dates.len(),
            });
        }
        for w in dates.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::DuplicateDate(w[1].to_string()));
            }
        }
        for (row, date) in prices.iter().zip(&dates) {
            if row.len() != tickers.len() {
                return Err(Error::DimensionMismatch {
                    left: row.len(),
                    right: tickers.len(),
                });
            }
            for (value, ticker) in row.iter().zip(&tickers) {
                if !value.is_finite() || *value <= 0.0 {
                    return Err(Error::NonPositivePrice {
                        ticker: ticker.clone(),
                        date: date.to_string(),
                        value: *value,
                    });
                }
            }
        }
        Ok(Self {
            dates,
            tickers,
            prices,
        })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn n_dates(&self) -> usize {
        self.dates.len()
    }

    pub fn n_assets(&self) -> usize {
        self.tickers.len()
    }

    pub fn price_row(&self, t: usize) -> &[f64] {
        &self.prices[t]
    }

    /// New panel containing only the requested tickers, in the given order.
    pub fn restrict(&self, tickers: &[String]) -> Result<Self> {
        let mut cols = Vec::with_capacity(tickers.len());
        for t in tickers {
            let idx = self
                .tickers
                .iter()
                .position(|x| x == t)
                .ok_or_else(|| Error::UnknownTicker(t.clone()))?;
            if cols.contains(&idx) {
                return Err(Error::InvalidParameter(format!(
                    "ticker {t} selected twice"
                )));
            }
            cols.push(idx);
        }
        let prices = self
            .prices
            .iter()
            .map(|row| cols.iter().map(|&c| row[c]).collect())
            .collect();
        Self::new(self.dates.clone(), tickers.to_vec(), prices)
    }

    /// Wide-layout CSV rendering with shortest round-trip float formatting.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        out.push_str("Date");
        for t in &self.tickers {
            out.push(',');
            out.push_str(&crate::report::csv_escape(t));
        }
        out.push('\n');
        for (date, row) in self.dates.iter().zip(&self.prices) {
            out.push_str(&date.to_string());
            for v in row {
                out.push(',');
                out.push_str(&format!("{v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Per-day logarithmic and relative losses derived from a [`PricePanel`].
///
/// Row `t` holds the losses realized between panel dates `t` and `t + 1`;
/// `dates` carries the later date of each pair. Logarithmic losses are
/// `log S(t-1) - log S(t)`, relative losses `S(t-1)/S(t) - 1`, so both are
/// positive when the price falls.
#[derive(Clone, Debug)]
pub struct LossMatrix {
    dates: Vec<NaiveDate>,
    tickers: Vec<String>,
    log_losses: Vec<Vec<f64>>,
    rel_losses: Vec<Vec<f64>>,
}

impl LossMatrix {
    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn n_periods(&self) -> usize {
        self.dates.len()
    }

    pub fn n_assets(&self) -> usize {
        self.tickers.len()
    }

    pub fn log_row(&self, t: usize) -> &[f64] {
        &self.log_losses[t]
    }

    pub fn rel_row(&self, t: usize) -> &[f64] {
        &self.rel_losses[t]
    }

    /// Rows `start..end` of the logarithmic losses.
    pub fn log_window(&self, start: usize, end: usize) -> &[Vec<f64>] {
        &self.log_losses[start..end]
    }

    /// Logarithmic loss history of one asset.
    pub fn log_column(&self, asset: usize) -> Vec<f64> {
        self.log_losses.iter().map(|row| row[asset]).collect()
    }
}

/// Loads a rectangular panel from CSV bytes; any missing cell is an error.
pub fn load_prices(source: impl Read, schema: &CsvSchema) -> Result<PricePanel> {
    let cells = read_cells(source, schema)?;
    build_panel(cells, false).map(|(panel, _)| panel)
}

/// Loads a panel, dropping tickers that lack a full price history.
///
/// Returns the panel and the dropped tickers so callers can log them.
pub fn load_prices_dropping(
    source: impl Read,
    schema: &CsvSchema,
) -> Result<(PricePanel, Vec<String>)> {
    let cells = read_cells(source, schema)?;
    build_panel(cells, true)
}

/// Relative portfolio return for one period: the negated scalar product of
/// the weights with the relative loss vector.
pub fn portfolio_relative_return(weights: &Weights, rel_loss_row: &[f64]) -> Result<f64> {
    if weights.len() != rel_loss_row.len() {
        return Err(Error::DimensionMismatch {
            left: weights.len(),
            right: rel_loss_row.len(),
        });
    }
    Ok(-crate::linalg::dot(weights.values(), rel_loss_row))
}

/// Derives logarithmic and relative losses from a panel of prices.
pub fn compute_losses(panel: &PricePanel) -> Result<LossMatrix> {
    if panel.n_dates() < 2 {
        return Err(Error::TooFewDates {
            needed: 2,
            got: panel.n_dates(),
        });
    }
    let periods = panel.n_dates() - 1;
    let mut log_losses = Vec::with_capacity(periods);
    let mut rel_losses = Vec::with_capacity(periods);
    for t in 1..panel.n_dates() {
        let prev = panel.price_row(t - 1);
        let cur = panel.price_row(t);
        log_losses.push(
            prev.iter()
                .zip(cur)
                .map(|(p, c)| p.ln() - c.ln())
                .collect::<Vec<f64>>(),
        );
        rel_losses.push(
            prev.iter()
                .zip(cur)
                .map(|(p, c)| p / c - 1.0)
                .collect::<Vec<f64>>(),
        );
    }
    Ok(LossMatrix {
        dates: panel.dates()[1..].to_vec(),
        tickers: panel.tickers().to_vec(),
        log_losses,
        rel_losses,
    })
}

struct RawCells {
    // ticker -> date -> price cell (string kept for error reporting)
    by_ticker: BTreeMap<String, BTreeMap<NaiveDate, f64>>,
    ticker_order: Vec<String>,
    dates: BTreeSet<NaiveDate>,
}

fn read_cells(source: impl Read, schema: &CsvSchema) -> Result<RawCells> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(source);
    let headers: Vec<String> = reader
        .headers()
        .map_err(Error::Csv)?
        .iter()
        .map(|h| h.to_string())
        .collect();
    if headers.is_empty() {
        return Err(Error::EmptyInput("csv has no header".into()));
    }

    enum Layout {
        Wide { date_col: usize },
        Long { date: usize, ticker: usize, price: usize },
    }

    let find = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::EmptyInput(format!("column {name:?} not found in header")))
    };

    let layout = match schema {
        CsvSchema::Auto => {
            let lower: Vec<String> = headers.iter().map(|h| h.to_ascii_lowercase()).collect();
            let is_long = headers.len() == 3
                && ["date", "ticker", "price"]
                    .iter()
                    .all(|n| lower.iter().any(|h| h == n));
            if is_long {
                Layout::Long {
                    date: find("date")?,
                    ticker: find("ticker")?,
                    price: find("price")?,
                }
            } else {
                Layout::Wide { date_col: 0 }
            }
        }
        CsvSchema::Wide { date_column } => Layout::Wide {
            date_col: find(date_column)?,
        },
        CsvSchema::Long {
            date_column,
            ticker_column,
            price_column,
        } => Layout::Long {
            date: find(date_column)?,
            ticker: find(ticker_column)?,
            price: find(price_column)?,
        },
    };

    let mut cells = RawCells {
        by_ticker: BTreeMap::new(),
        ticker_order: Vec::new(),
        dates: BTreeSet::new(),
    };

    match layout {
        Layout::Wide { date_col } => {
            for (i, h) in headers.iter().enumerate() {
                if i != date_col {
                    cells.ticker_order.push(h.clone());
                    cells.by_ticker.insert(h.clone(), BTreeMap::new());
                }
            }
            if cells.ticker_order.is_empty() {
                return Err(Error::EmptyInput("wide csv has no ticker columns".into()));
            }
            for (record_no, record) in reader.records().enumerate() {
                let record = record.map_err(Error::Csv)?;
                let date = parse_date(record.get(date_col).unwrap_or(""), record_no + 2)?;
                if !cells.dates.insert(date) {
                    return Err(Error::DuplicateDate(date.to_string()));
                }
                for (i, h) in headers.iter().enumerate() {
                    if i == date_col {
                        continue;
                    }
                    let raw = record.get(i).unwrap_or("");
                    if raw.is_empty() {
                        continue; // missing cell, handled when assembling
                    }
                    let value = parse_number(raw, record_no + 2)?;
                    cells
                        .by_ticker
                        .get_mut(h)
                        .expect("ticker registered from header")
                        .insert(date, value);
                }
            }
        }
        Layout::Long {
            date,
            ticker,
            price,
        } => {
            for (record_no, record) in reader.records().enumerate() {
                let record = record.map_err(Error::Csv)?;
                let d = parse_date(record.get(date).unwrap_or(""), record_no + 2)?;
                let t = record.get(ticker).unwrap_or("").to_string();
                if t.is_empty() {
                    return Err(Error::EmptyInput(format!(
                        "empty ticker in record {}",
                        record_no + 2
                    )));
                }
                let v = parse_number(record.get(price).unwrap_or(""), record_no + 2)?;
                cells.dates.insert(d);
                if !cells.by_ticker.contains_key(&t) {
                    cells.ticker_order.push(t.clone());
                }
                if cells.by_ticker.entry(t.clone()).or_default().insert(d, v).is_some() {
                    return Err(Error::DuplicateCell {
                        ticker: t,
                        date: d.to_string(),
                    });
                }
            }
        }
    }
    Ok(cells)
}

fn build_panel(cells: RawCells, drop_partial: bool) -> Result<(PricePanel, Vec<String>)> {
    if cells.dates.is_empty() {
        return Err(Error::EmptyInput("csv has no data rows".into()));
    }
    let dates: Vec<NaiveDate> = cells.dates.iter().copied().collect();
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for ticker in &cells.ticker_order {
        let series = &cells.by_ticker[ticker];
        match dates.iter().find(|d| !series.contains_key(d)) {
            None => kept.push(ticker.clone()),
            Some(missing) => {
                if drop_partial {
                    dropped.push(ticker.clone());
                } else {
                    return Err(Error::MissingCell {
                        ticker: ticker.clone(),
                        date: missing.to_string(),
                    });
                }
            }
        }
    }
    if kept.is_empty() {
        return Err(Error::EmptyInput(
            "no ticker has a full price history".into(),
        ));
    }
    let prices: Vec<Vec<f64>> = dates
        .iter()
        .map(|d| kept.iter().map(|t| cells.by_ticker[t][d]).collect())
        .collect();
    let panel = PricePanel::new(dates, kept, prices)?;
    Ok((panel, dropped))
}

fn parse_date(raw: &str, record: usize) -> Result<NaiveDate> {
    raw.parse::<NaiveDate>().map_err(|_| Error::UnparseableDate {
        value: raw.to_string(),
        record,
    })
}

fn parse_number(raw: &str, record: usize) -> Result<f64> {
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::UnparseableNumber {
            value: raw.to_string(),
            record,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::auto_tickers;

    fn panel_from(csv: &str) -> PricePanel {
        load_prices(csv.as_bytes(), &CsvSchema::Auto).unwrap()
    }

    #[test]
    fn wide_ingestion_shape() {
        let p = panel_from("Date,AAA,BBB\n2020-01-01,1,2\n2020-01-02,3,4\n2020-01-03,5,6\n");
        assert_eq!(p.n_dates(), 3);
        assert_eq!(p.n_assets(), 2);
        assert_eq!(p.tickers(), &["AAA".to_string(), "BBB".to_string()]);
        assert_eq!(p.price_row(1), &[3.0, 4.0]);
    }

    #[test]
    fn long_ingestion_sorts_rows() {
        let shuffled = "date,ticker,price\n2020-01-02,AAA,3\n2020-01-01,BBB,2\n2020-01-01,AAA,1\n2020-01-02,BBB,4\n";
        let ordered = "date,ticker,price\n2020-01-01,AAA,1\n2020-01-01,BBB,2\n2020-01-02,AAA,3\n2020-01-02,BBB,4\n";
        let a = panel_from(shuffled);
        let b = panel_from(ordered);
        assert_eq!(a.dates(), b.dates());
        assert_eq!(a.tickers(), b.tickers());
        for t in 0..a.n_dates() {
            assert_eq!(a.price_row(t), b.price_row(t));
        }
    }

    #[test]
    fn missing_cell_names_ticker_and_date() {
        let csv = "date,ticker,price\n2020-01-01,AAA,1\n2020-01-02,AAA,2\n2020-01-01,BBB,3\n";
        let err = load_prices(csv.as_bytes(), &CsvSchema::Auto).unwrap_err();
        match err {
            Error::MissingCell { ticker, date } => {
                assert_eq!(ticker, "BBB");
                assert_eq!(date, "2020-01-02");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn dropping_loader_reports_partial_tickers() {
        let csv = "date,ticker,price\n2020-01-01,AAA,1\n2020-01-02,AAA,2\n2020-01-01,BBB,3\n";
        let (panel, dropped) = load_prices_dropping(csv.as_bytes(), &CsvSchema::Auto).unwrap();
        assert_eq!(panel.tickers(), &["AAA".to_string()]);
        assert_eq!(dropped, vec!["BBB".to_string()]);

        // wide layout: an empty cell marks the ticker as partial
        let csv = "Date,AAA,BBB\n2020-01-01,1,\n2020-01-02,2,3\n";
        let (panel, dropped) = load_prices_dropping(csv.as_bytes(), &CsvSchema::Auto).unwrap();
        assert_eq!(panel.tickers(), &["AAA".to_string()]);
        assert_eq!(dropped, vec!["BBB".to_string()]);
        assert!(matches!(
            load_prices(csv.as_bytes(), &CsvSchema::Auto),
            Err(Error::MissingCell { .. })
        ));
    }

    #[test]
    fn restrict_selects_and_validates() {
        let p = panel_from("Date,AAA,BBB,CCC\n2020-01-01,1,2,3\n2020-01-02,4,5,6\n");
        let r = p.restrict(&["CCC".to_string(), "AAA".to_string()]).unwrap();
        assert_eq!(r.tickers(), &["CCC".to_string(), "AAA".to_string()]);
        assert_eq!(r.price_row(1), &[6.0, 4.0]);
        assert!(p.restrict(&["ZZZ".to_string()]).is_err());
        assert!(p
            .restrict(&["AAA".to_string(), "AAA".to_string()])
            .is_err());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            load_prices("Date,AAA\nnot-a-date,1\n".as_bytes(), &CsvSchema::Auto),
            Err(Error::UnparseableDate { .. })
        ));
        assert!(matches!(
            load_prices("Date,AAA\n2020-01-01,-3\n".as_bytes(), &CsvSchema::Auto),
            Err(Error::NonPositivePrice { .. })
        ));
        assert!(matches!(
            load_prices("Date,AAA\n".as_bytes(), &CsvSchema::Auto),
            Err(Error::EmptyInput(_))
        ));
        assert!(matches!(
            load_prices(
                "Date,AAA\n2020-01-01,1\n2020-01-01,2\n".as_bytes(),
                &CsvSchema::Auto
            ),
            Err(Error::DuplicateDate(_))
        ));
    }

    #[test]
    fn comment_lines_are_skipped() {
        let p = panel_from("# config: {}\nDate,AAA\n2020-01-01,1\n2020-01-02,2\n");
        assert_eq!(p.n_dates(), 2);
    }

    #[test]
    fn csv_round_trip() {
        let p = panel_from("Date,AAA,BBB\n2020-01-01,1.25,2\n2020-01-02,3,4.5\n");
        let again = panel_from(&p.to_csv_string());
        assert_eq!(p.dates(), again.dates());
        for t in 0..p.n_dates() {
            assert_eq!(p.price_row(t), again.price_row(t));
        }
    }

    #[test]
    fn loss_values_match_closed_forms() {
        let p = panel_from("Date,AAA\n2020-01-01,100\n2020-01-02,90\n2020-01-03,90\n2020-01-04,180\n");
        let losses = compute_losses(&p).unwrap();
        assert_eq!(losses.n_periods(), 3);
        // 100 -> 90
        assert!((losses.log_row(0)[0] - (-(0.9f64).ln())).abs() < 1e-15);
        assert!((losses.rel_row(0)[0] - (100.0 / 90.0 - 1.0)).abs() < 1e-15);
        assert!((losses.log_row(0)[0] - 0.1053605156578263).abs() < 1e-12);
        assert!((losses.rel_row(0)[0] - 0.1111111111111111).abs() < 1e-12);
        // constant price
        assert_eq!(losses.log_row(1)[0], 0.0);
        assert_eq!(losses.rel_row(1)[0], 0.0);
        // 90 -> 180, a doubling
        assert!((losses.log_row(2)[0] - (-(2.0f64).ln())).abs() < 1e-12);
        assert!((losses.rel_row(2)[0] - (-0.5)).abs() < 1e-15);
    }

    #[test]
    fn too_few_dates_is_rejected() {
        let p = panel_from("Date,AAA\n2020-01-01,100\n");
        assert!(matches!(
            compute_losses(&p),
            Err(Error::TooFewDates { needed: 2, got: 1 })
        ));
    }

    #[test]
    fn portfolio_return_examples() {
        let w = Weights::new(auto_tickers(2), vec![1.0, 0.0]).unwrap();
        assert!((portfolio_relative_return(&w, &[0.02, -0.05]).unwrap() + 0.02).abs() < 1e-15);
        let w = Weights::new(auto_tickers(2), vec![0.5, 0.5]).unwrap();
        assert!(portfolio_relative_return(&w, &[0.02, -0.02]).unwrap().abs() < 1e-15);
        let w = Weights::new(auto_tickers(2), vec![0.25, 0.75]).unwrap();
        assert!((portfolio_relative_return(&w, &[0.04, -0.04]).unwrap() - 0.02).abs() < 1e-15);
        assert!(portfolio_relative_return(&w, &[0.04]).is_err());
    }

    #[test]
    fn portfolio_return_is_linear_in_weights() {
        let rel = [0.013, -0.024, 0.005];
        let u = Weights::new(auto_tickers(3), vec![0.2, 0.3, 0.5]).unwrap();
        let v = Weights::new(auto_tickers(3), vec![0.6, 0.1, 0.3]).unwrap();
        let ru = portfolio_relative_return(&u, &rel).unwrap();
        let rv = portfolio_relative_return(&v, &rel).unwrap();
        for t in [0.25, 0.5, 0.75] {
            let mix: Vec<f64> = u
                .values()
                .iter()
                .zip(v.values())
                .map(|(a, b)| t * a + (1.0 - t) * b)
                .collect();
            let w = Weights::new(auto_tickers(3), mix).unwrap();
            let rw = portfolio_relative_return(&w, &rel).unwrap();
            assert!((rw - (t * ru + (1.0 - t) * rv)).abs() < 1e-12);
        }
    }
}
