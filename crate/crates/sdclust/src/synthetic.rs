//! Seeded synthetic panels with known group structure, used by the test
//! suite and as bundled demo data.
//!
//! Every generator follows the same recipe: each group shares one common
//! factor series that dominates a small idiosyncratic noise term, and both
//! the factor and the noise are de-meaned before the group location is added.
//! Group membership then shows up as distributional similarity (clustering
//! should recover it), while realized per-asset means equal the group
//! location up to float dust (so return orderings between groups are strict
//! by construction, not by luck).

use std::collections::BTreeMap;

use chrono::NaiveDate;
use rand_distr::{Distribution, Normal};

use crate::market_data::{PricePanel, ReturnPanel};
use crate::seed;

fn demeaned_normal(sd: f64, len: usize, root: u64, tags: &[u64]) -> Vec<f64> {
    let mut rng = seed::rng(root, tags);
    let dist = Normal::new(0.0, sd).expect("sd is finite and positive");
    let mut v: Vec<f64> = (0..len).map(|_| dist.sample(&mut rng)).collect();
    let m = v.iter().sum::<f64>() / len as f64;
    for x in &mut v {
        *x -= m;
    }
    v
}

fn weekly_periods(start: NaiveDate, len: usize) -> Vec<NaiveDate> {
    (0..len).map(|i| start + chrono::Days::new(7 * i as u64)).collect()
}

fn grouped_panel(
    groups: &[(&str, usize, f64, f64)],
    periods: usize,
    start: NaiveDate,
    root: u64,
) -> ReturnPanel {
    let mut tickers = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for (g, (prefix, count, location, factor_sd)) in groups.iter().enumerate() {
        let factor = demeaned_normal(*factor_sd, periods, root, &[31, g as u64]);
        for i in 0..*count {
            let eps =
                demeaned_normal(0.1 * factor_sd, periods, root, &[32, g as u64, i as u64]);
            let series: Vec<f64> =
                factor.iter().zip(&eps).map(|(f, e)| location + f + e).collect();
            tickers.push(format!("{prefix}{:02}", i + 1));
            columns.push(series);
        }
    }
    let returns: Vec<Vec<f64>> =
        (0..periods).map(|t| columns.iter().map(|c| c[t]).collect()).collect();
    ReturnPanel::new(weekly_periods(start, periods), tickers, returns)
        .expect("generated panel is well formed")
}

/// Twelve assets in three groups of four with distinct locations and scales.
pub fn three_group_panel(root: u64) -> ReturnPanel {
    grouped_panel(
        &[
            ("LOW", 4, -0.06, 0.010),
            ("MID", 4, 0.00, 0.020),
            ("TOP", 4, 0.06, 0.030),
        ],
        120,
        NaiveDate::from_ymd_opt(2021, 1, 8).expect("valid date"),
        root,
    )
}

/// True group labels for `three_group_panel`.
pub fn three_group_truth() -> BTreeMap<String, usize> {
    let mut truth = BTreeMap::new();
    for (g, prefix) in ["LOW", "MID", "TOP"].iter().enumerate() {
        for i in 1..=4 {
            truth.insert(format!("{prefix}{i:02}"), g);
        }
    }
    truth
}

/// Two regimes of six assets: CALM with low spread, WILD with four times the
/// spread and a slightly higher location. The location gap is far inside the
/// statistical noise of the spread difference, so dominance tests see the
/// regimes through risk, while realized mean returns still order strictly.
pub fn two_regime_panel(root: u64) -> ReturnPanel {
    grouped_panel(
        &[("CALM", 6, 0.002, 0.007), ("WILD", 6, 0.003, 0.028)],
        250,
        NaiveDate::from_ymd_opt(2020, 1, 10).expect("valid date"),
        root,
    )
}

/// True regime labels for `two_regime_panel`: CALM = 0, WILD = 1.
pub fn two_regime_truth() -> BTreeMap<String, usize> {
    let mut truth = BTreeMap::new();
    for i in 1..=6 {
        truth.insert(format!("CALM{i:02}"), 0);
        truth.insert(format!("WILD{i:02}"), 1);
    }
    truth
}

/// Group shapes behind the bundled demo panel: LAG shares DRY's spread but
/// sits a full spread below it in location (first-order dominated), while
/// DRY and WET share a location and differ only in spread (second-order
/// separable). Weekly means and spreads are plausible equity magnitudes.
const DEMO_GROUPS: [(&str, usize, f64, f64); 3] = [
    ("DRY", 4, 0.002, 0.012),
    ("LAG", 4, -0.010, 0.012),
    ("WET", 4, 0.002, 0.028),
];

/// Daily close prices for the bundled twelve-asset demo. Weekly log returns
/// follow the three-group structure; weekday closes interpolate inside each
/// week with noise that cancels by Friday, so weekly aggregation recovers the
/// generated returns exactly.
pub fn demo_prices(root: u64) -> PricePanel {
    let weeks = 124;
    let returns = grouped_panel(
        &DEMO_GROUPS,
        weeks,
        NaiveDate::from_ymd_opt(2021, 1, 8).expect("valid date"),
        root,
    );
    let n = returns.n_assets();

    // Monday of the week before the first return period.
    let mut dates = Vec::with_capacity(5 * (weeks + 1));
    let start = NaiveDate::from_ymd_opt(2020, 12, 28).expect("valid date");
    for w in 0..=weeks {
        for d in 0..5 {
            dates.push(start + chrono::Days::new((7 * w + d) as u64));
        }
    }

    let mut prices = vec![vec![None; n]; dates.len()];
    for (col, _) in returns.tickers.iter().enumerate() {
        let mut rng = seed::rng(root, &[33, col as u64]);
        let jitter = Normal::new(0.0, 0.004).expect("valid sd");
        let mut friday_log = (100.0 + 5.0 * col as f64).ln();
        for w in 0..=weeks {
            let week_ret = if w == 0 { 0.0 } else { returns.returns[w - 1][col] };
            let base = friday_log;
            let mut z = [0.0; 5];
            let mut carry = 0.0;
            for slot in z.iter_mut().take(4) {
                let noise = jitter.sample(&mut rng);
                *slot = noise;
                carry += noise;
            }
            z[4] = -carry;
            for d in 0..5 {
                let frac = (d + 1) as f64 / 5.0;
                let log_price = base + week_ret * frac + if d < 4 { z[d] } else { 0.0 };
                prices[5 * w + d][col] = Some(log_price.exp());
            }
            friday_log = base + week_ret;
        }
    }
    PricePanel::new(dates, returns.tickers.clone(), prices)
        .expect("generated prices are well formed")
}
