//! Price ingestion, weekly aggregation, and log-return panels.
//!
//! Input is long-form CSV `date,ticker,close`. Prices are aligned into a
//! date-by-ticker grid with explicit missing cells, collapsed to weekly
//! frequency by taking each asset's last available close within an ISO-8601
//! week, and converted to log returns over consecutive retained rows. Assets
//! best covered below the configured threshold are dropped first; any row
//! still missing a cell is then dropped so the result is balanced.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::Read;
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, SdError};
use crate::sdstat::Sample;

/// Date-by-ticker close grid; rows sorted by date, tickers sorted
/// lexicographically, missing observations explicit.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePanel {
    pub dates: Vec<NaiveDate>,
    pub tickers: Vec<String>,
    /// Row-major: `prices[row][col]`, `Some` values strictly positive.
    pub prices: Vec<Vec<Option<f64>>>,
}

impl PricePanel {
    pub fn new(
        dates: Vec<NaiveDate>,
        tickers: Vec<String>,
        prices: Vec<Vec<Option<f64>>>,
    ) -> Result<Self> {
        if dates.is_empty() || tickers.is_empty() {
            return Err(SdError::PanelTooSmall("price panel has no rows or no tickers".into()));
        }
        if dates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SdError::PanelTooSmall("price panel rows must be strictly dated".into()));
        }
        if prices.len() != dates.len() || prices.iter().any(|r| r.len() != tickers.len()) {
            return Err(SdError::PanelTooSmall("price grid shape mismatch".into()));
        }
        for row in &prices {
            for cell in row {
                if let Some(v) = cell {
                    if !(v.is_finite() && *v > 0.0) {
                        return Err(SdError::PanelTooSmall(format!("invalid price {v}")));
                    }
                }
            }
        }
        Ok(PricePanel { dates, tickers, prices })
    }

    pub fn n_assets(&self) -> usize {
        self.tickers.len()
    }

    pub fn n_rows(&self) -> usize {
        self.dates.len()
    }
}

fn parse_strict_date(s: &str, line: usize) -> Result<NaiveDate> {
    let b = s.as_bytes();
    let shaped = b.len() == 10
        && b[4] == b'-'
        && b[7] == b'-'
        && b.iter().enumerate().all(|(i, c)| matches!(i, 4 | 7) || c.is_ascii_digit());
    if !shaped {
        return Err(SdError::Parse { line, msg: format!("date `{s}` is not YYYY-MM-DD") });
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .map_err(|e| SdError::Parse { line, msg: format!("date `{s}`: {e}") })
}

/// Read a long-form `date,ticker,close` CSV into a price panel.
pub fn load_prices(path: &Path) -> Result<PricePanel> {
    let file = std::fs::File::open(path)?;
    load_prices_from(file)
}

pub fn load_prices_from<R: Read>(reader: R) -> Result<PricePanel> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    {
        let headers = rdr.headers()?;
        let names: Vec<String> = headers.iter().map(|h| h.to_ascii_lowercase()).collect();
        if names != ["date", "ticker", "close"] {
            return Err(SdError::Parse {
                line: 1,
                msg: format!("expected header date,ticker,close, got {}", names.join(",")),
            });
        }
    }

    let mut obs: BTreeMap<(NaiveDate, String), f64> = BTreeMap::new();
    let mut seen: HashSet<(NaiveDate, String)> = HashSet::new();
    let mut record = csv::StringRecord::new();
    while rdr.read_record(&mut record)? {
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.len() != 3 {
            return Err(SdError::Parse { line, msg: format!("expected 3 fields, got {}", record.len()) });
        }
        let date = parse_strict_date(&record[0], line)?;
        let ticker = record[1].to_string();
        if ticker.is_empty() {
            return Err(SdError::Parse { line, msg: "empty ticker".into() });
        }
        let close: f64 = record[2]
            .parse()
            .map_err(|e| SdError::Parse { line, msg: format!("close `{}`: {e}", &record[2]) })?;
        if !(close.is_finite() && close > 0.0) {
            return Err(SdError::NonPositivePrice { line, value: close });
        }
        if !seen.insert((date, ticker.clone())) {
            return Err(SdError::DuplicateKey { date: date.to_string(), ticker });
        }
        obs.insert((date, ticker), close);
    }

    if obs.is_empty() {
        return Err(SdError::Parse { line: 1, msg: "no data rows".into() });
    }

    let dates: Vec<NaiveDate> = obs.keys().map(|(d, _)| *d).collect::<BTreeSet<_>>().into_iter().collect();
    let tickers: Vec<String> =
        obs.keys().map(|(_, t)| t.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    let date_idx: BTreeMap<NaiveDate, usize> = dates.iter().enumerate().map(|(i, d)| (*d, i)).collect();
    let ticker_idx: BTreeMap<&str, usize> =
        tickers.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();

    let mut prices = vec![vec![None; tickers.len()]; dates.len()];
    for ((date, ticker), close) in obs {
        prices[date_idx[&date]][ticker_idx[ticker.as_str()]] = Some(close);
    }
    PricePanel::new(dates, tickers, prices)
}

/// Collapse to one row per ISO-8601 week, keeping each asset's last available
/// close within the week. The row keeps the date of the week's last observed
/// row, so boundary weeks that straddle the panel edges survive as shorter
/// weeks and reapplication is a no-op.
pub fn to_weekly(panel: &PricePanel) -> Result<PricePanel> {
    let mut dates = Vec::new();
    let mut prices: Vec<Vec<Option<f64>>> = Vec::new();

    let mut current_key: Option<(i32, u32)> = None;
    for (row, date) in panel.dates.iter().enumerate() {
        let iso = date.iso_week();
        let key = (iso.year(), iso.week());
        if current_key != Some(key) {
            current_key = Some(key);
            dates.push(*date);
            prices.push(vec![None; panel.n_assets()]);
        }
        let out = prices.last_mut().expect("pushed above");
        *dates.last_mut().expect("pushed above") = *date;
        for (col, cell) in panel.prices[row].iter().enumerate() {
            if cell.is_some() {
                out[col] = *cell;
            }
        }
    }

    PricePanel::new(dates, panel.tickers.clone(), prices)
}

/// Balanced panel of log returns.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnPanel {
    /// Date each return row settles on (the later of the two rows it spans).
    pub periods: Vec<NaiveDate>,
    pub tickers: Vec<String>,
    /// Row-major: `returns[row][col]`.
    pub returns: Vec<Vec<f64>>,
}

impl ReturnPanel {
    pub fn new(periods: Vec<NaiveDate>, tickers: Vec<String>, returns: Vec<Vec<f64>>) -> Result<Self> {
        if periods.is_empty() || tickers.is_empty() {
            return Err(SdError::PanelTooSmall("return panel has no rows or no tickers".into()));
        }
        if returns.len() != periods.len() || returns.iter().any(|r| r.len() != tickers.len()) {
            return Err(SdError::PanelTooSmall("return grid shape mismatch".into()));
        }
        if returns.iter().flatten().any(|v| !v.is_finite()) {
            return Err(SdError::PanelTooSmall("returns must be finite".into()));
        }
        Ok(ReturnPanel { periods, tickers, returns })
    }

    pub fn n_assets(&self) -> usize {
        self.tickers.len()
    }

    pub fn n_periods(&self) -> usize {
        self.periods.len()
    }

    pub fn column(&self, asset: usize) -> Vec<f64> {
        self.returns.iter().map(|row| row[asset]).collect()
    }

    pub fn sample(&self, asset: usize) -> Result<Sample> {
        Sample::new(self.column(asset))
    }

    /// Cross-sectional mean series over the given assets.
    pub fn mean_series(&self, assets: &[usize]) -> Vec<f64> {
        let m = assets.len() as f64;
        self.returns
            .iter()
            .map(|row| assets.iter().map(|&a| row[a]).sum::<f64>() / m)
            .collect()
    }

    /// Panel restricted to the given asset indices, in the given order.
    pub fn subset(&self, assets: &[usize]) -> Result<ReturnPanel> {
        let tickers = assets.iter().map(|&a| self.tickers[a].clone()).collect();
        let returns = self
            .returns
            .iter()
            .map(|row| assets.iter().map(|&a| row[a]).collect())
            .collect();
        ReturnPanel::new(self.periods.clone(), tickers, returns)
    }

    pub fn index_of(&self, ticker: &str) -> Option<usize> {
        self.tickers.iter().position(|t| t == ticker)
    }

    /// Content hash covering shape, tickers, dates, and exact return bits.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.n_assets() as u64).to_le_bytes());
        h.update((self.n_periods() as u64).to_le_bytes());
        for t in &self.tickers {
            h.update(t.as_bytes());
            h.update([0u8]);
        }
        for d in &self.periods {
            h.update(d.to_string().as_bytes());
            h.update([0u8]);
        }
        for row in &self.returns {
            for v in row {
                h.update(v.to_le_bytes());
            }
        }
        format!("{:x}", h.finalize())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["period".to_string()];
        header.extend(self.tickers.iter().cloned());
        w.write_record(&header)?;
        for (i, period) in self.periods.iter().enumerate() {
            let mut rec = vec![period.to_string()];
            rec.extend(self.returns[i].iter().map(|v| format!("{v}")));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load_csv(path: &Path) -> Result<ReturnPanel> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
        let tickers: Vec<String> = {
            let headers = rdr.headers()?;
            if headers.is_empty() || headers[0].to_ascii_lowercase() != "period" {
                return Err(SdError::Parse { line: 1, msg: "first column must be `period`".into() });
            }
            headers.iter().skip(1).map(|s| s.to_string()).collect()
        };
        let mut periods = Vec::new();
        let mut returns = Vec::new();
        let mut record = csv::StringRecord::new();
        while rdr.read_record(&mut record)? {
            let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
            if record.len() != tickers.len() + 1 {
                return Err(SdError::Parse {
                    line,
                    msg: format!("expected {} fields, got {}", tickers.len() + 1, record.len()),
                });
            }
            periods.push(parse_strict_date(&record[0], line)?);
            let mut row = Vec::with_capacity(tickers.len());
            for field in record.iter().skip(1) {
                let v: f64 = field
                    .parse()
                    .map_err(|e| SdError::Parse { line, msg: format!("return `{field}`: {e}") })?;
                row.push(v);
            }
            returns.push(row);
        }
        ReturnPanel::new(periods, tickers, returns)
    }
}

/// What ingestion removed on the way to a balanced panel.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IngestReport {
    /// Dropped tickers with their row coverage.
    pub dropped_tickers: Vec<(String, f64)>,
    /// Rows removed because a retained asset was missing.
    pub dropped_rows: usize,
    pub kept_assets: usize,
    pub kept_periods: usize,
}

/// Log returns over consecutive retained rows.
///
/// `min_coverage` is the minimum fraction of rows an asset must cover to be
/// kept; 1.0 keeps only fully observed assets.
pub fn log_returns(panel: &PricePanel, min_coverage: f64) -> Result<(ReturnPanel, IngestReport)> {
    if !(0.0..=1.0).contains(&min_coverage) {
        return Err(SdError::Config(format!("min_coverage must lie in [0, 1], got {min_coverage}")));
    }
    let n_rows = panel.n_rows();

    let mut kept_assets = Vec::new();
    let mut dropped_tickers = Vec::new();
    for col in 0..panel.n_assets() {
        let present = panel.prices.iter().filter(|row| row[col].is_some()).count();
        let coverage = present as f64 / n_rows as f64;
        if coverage >= min_coverage {
            kept_assets.push(col);
        } else {
            dropped_tickers.push((panel.tickers[col].clone(), coverage));
        }
    }
    if kept_assets.is_empty() {
        return Err(SdError::AllAssetsDropped);
    }

    let kept_rows: Vec<usize> = (0..n_rows)
        .filter(|&r| kept_assets.iter().all(|&c| panel.prices[r][c].is_some()))
        .collect();
    let dropped_rows = n_rows - kept_rows.len();
    if kept_rows.len() < 2 {
        return Err(SdError::PanelTooSmall(format!(
            "only {} complete rows after filtering; need at least 2 for returns",
            kept_rows.len()
        )));
    }

    let tickers: Vec<String> = kept_assets.iter().map(|&c| panel.tickers[c].clone()).collect();
    let mut periods = Vec::with_capacity(kept_rows.len() - 1);
    let mut returns = Vec::with_capacity(kept_rows.len() - 1);
    for w in kept_rows.windows(2) {
        let (prev, cur) = (w[0], w[1]);
        periods.push(panel.dates[cur]);
        let row: Vec<f64> = kept_assets
            .iter()
            .map(|&c| {
                let p0 = panel.prices[prev][c].expect("kept rows are complete");
                let p1 = panel.prices[cur][c].expect("kept rows are complete");
                (p1 / p0).ln()
            })
            .collect();
        returns.push(row);
    }

    let report = IngestReport {
        dropped_tickers,
        dropped_rows,
        kept_assets: tickers.len(),
        kept_periods: periods.len(),
    };
    Ok((ReturnPanel::new(periods, tickers, returns)?, report))
}

/// Write a panel back out in the long-form input format. Used by data
/// generators and round-trip tests.
pub fn save_prices_csv(panel: &PricePanel, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["date", "ticker", "close"])?;
    for (row, date) in panel.dates.iter().enumerate() {
        for (col, ticker) in panel.tickers.iter().enumerate() {
            if let Some(price) = panel.prices[row][col] {
                w.write_record([date.to_string().as_str(), ticker, &format!("{price}")])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
