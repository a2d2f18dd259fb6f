//! Minimum-variance portfolios, single-index regression, and the random-draw
//! comparison experiment.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::clustering::Clustering;
use crate::error::{Result, SdError};
use crate::market_data::ReturnPanel;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioStats {
    pub weights: BTreeMap<String, f64>,
    /// Per-period mean portfolio return.
    pub exp_return: f64,
    /// Per-period portfolio return variance (sample covariance based).
    pub risk: f64,
    /// True when the covariance needed diagonal loading to solve.
    pub ridged: bool,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample covariance (denominator T - 1).
fn covariance(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let s: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    s / (a.len() - 1) as f64
}

/// Global minimum-variance weights over all assets of the panel: minimize
/// w' S w subject to sum w = 1, long and short positions allowed. A singular
/// sample covariance falls back once to diagonal loading with
/// lambda = 1e-8 * trace / n; the `ridged` flag records that this happened.
pub fn gmvp(panel: &ReturnPanel) -> Result<PortfolioStats> {
    let n = panel.n_assets();
    if n < 2 {
        return Err(SdError::PanelTooSmall("need at least two assets for a portfolio".into()));
    }
    if panel.n_periods() < 2 {
        return Err(SdError::PanelTooSmall("need at least two periods for a covariance".into()));
    }
    let cols: Vec<Vec<f64>> = (0..n).map(|a| panel.column(a)).collect();
    let cov = DMatrix::from_fn(n, n, |i, j| covariance(&cols[i], &cols[j]));

    let ones = DVector::from_element(n, 1.0);
    let (raw, ridged) = match cov.clone().cholesky() {
        Some(chol) => (chol.solve(&ones), false),
        None => {
            let lambda = 1e-8 * cov.trace() / n as f64;
            let loaded = &cov + DMatrix::identity(n, n) * lambda;
            let chol = loaded.cholesky().ok_or(SdError::CovarianceSolve)?;
            (chol.solve(&ones), true)
        }
    };
    let total: f64 = raw.iter().sum();
    if !(total.is_finite() && total != 0.0) {
        return Err(SdError::CovarianceSolve);
    }
    let w = raw / total;

    let mu = DVector::from_iterator(n, cols.iter().map(|c| mean(c)));
    let exp_return = mu.dot(&w);
    let risk = (&cov * &w).dot(&w);
    let weights = panel.tickers.iter().cloned().zip(w.iter().copied()).collect();
    Ok(PortfolioStats { weights, exp_return, risk, ridged })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaBeta {
    pub alpha: f64,
    pub beta: f64,
}

/// Ordinary least squares of the asset series on the market series:
/// beta = cov(a, m) / var(m), alpha = mean(a) - beta * mean(m).
pub fn alpha_beta(asset: &[f64], market: &[f64]) -> Result<AlphaBeta> {
    if asset.len() != market.len() || asset.len() < 3 {
        return Err(SdError::PanelTooSmall(format!(
            "regression needs equal lengths of at least 3, got {} and {}",
            asset.len(),
            market.len()
        )));
    }
    let var_m = covariance(market, market);
    if var_m <= 0.0 {
        return Err(SdError::ZeroMarketVariance);
    }
    let beta = covariance(asset, market) / var_m;
    let alpha = mean(asset) - beta * mean(market);
    Ok(AlphaBeta { alpha, beta })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrawPoint {
    pub draw: usize,
    pub risk: f64,
    pub exp_return: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolSummary {
    pub tickers: Vec<String>,
    pub mean_risk: f64,
    pub mean_return: f64,
    /// Sample standard deviations across draws; zero for a single draw.
    pub spread_risk: f64,
    pub spread_return: f64,
    pub points: Vec<DrawPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrawSummary {
    pub m: usize,
    pub draws: usize,
    pub pool_a: PoolSummary,
    pub pool_b: PoolSummary,
}

fn spread(xs: &[f64]) -> f64 {
    // Identical draws must report exactly zero, not mean-rounding dust.
    if xs.len() < 2 || xs.windows(2).all(|w| w[0] == w[1]) {
        return 0.0;
    }
    covariance(xs, xs).sqrt()
}

/// First 8 bytes of the pool's ticker digest; keys the draw stream so equal
/// pools replay identical subsets while distinct pools stay independent.
fn pool_tag(tickers: &[String]) -> u64 {
    let mut h = Sha256::new();
    for t in tickers {
        h.update(t.as_bytes());
        h.update([0u8]);
    }
    u64::from_le_bytes(h.finalize()[..8].try_into().expect("digest is long enough"))
}

fn run_pool(
    panel: &ReturnPanel,
    tickers: &[String],
    m: usize,
    draws: usize,
    root: u64,
) -> Result<PoolSummary> {
    let indices: Vec<usize> = tickers
        .iter()
        .map(|t| {
            panel.index_of(t).ok_or_else(|| SdError::Config(format!("ticker {t} not in panel")))
        })
        .collect::<Result<_>>()?;
    let tag = pool_tag(tickers);

    let points: Vec<DrawPoint> = (0..draws)
        .into_par_iter()
        .map(|k| {
            let mut rng = seed::rng(root, &[seed::TAG_DRAW, tag, k as u64]);
            let pick = rand::seq::index::sample(&mut rng, indices.len(), m);
            // A draw is a set; canonical order keeps equal sets bit-identical.
            let mut subset: Vec<usize> = pick.iter().map(|i| indices[i]).collect();
            subset.sort_unstable();
            let stats = gmvp(&panel.subset(&subset)?)?;
            Ok(DrawPoint { draw: k, risk: stats.risk, exp_return: stats.exp_return })
        })
        .collect::<Result<_>>()?;

    let risks: Vec<f64> = points.iter().map(|p| p.risk).collect();
    let rets: Vec<f64> = points.iter().map(|p| p.exp_return).collect();
    Ok(PoolSummary {
        tickers: tickers.to_vec(),
        mean_risk: mean(&risks),
        mean_return: mean(&rets),
        spread_risk: spread(&risks),
        spread_return: spread(&rets),
        points,
    })
}

/// Draw `draws` random m-asset portfolios from each pool and summarize their
/// in-sample risk and return. Pools are canonicalized (sorted, deduplicated)
/// before drawing.
pub fn draw_experiment(
    panel: &ReturnPanel,
    pool_a: &[String],
    pool_b: &[String],
    m: usize,
    draws: usize,
    root: u64,
) -> Result<DrawSummary> {
    let canon = |pool: &[String]| {
        let mut v = pool.to_vec();
        v.sort();
        v.dedup();
        v
    };
    let (a, b) = (canon(pool_a), canon(pool_b));
    if draws == 0 {
        return Err(SdError::Config("draws must be at least 1".into()));
    }
    if m < 2 {
        return Err(SdError::Config(format!("portfolio size must be at least 2, got {m}")));
    }
    for pool in [&a, &b] {
        if pool.len() < m {
            return Err(SdError::PoolTooSmall { have: pool.len(), want: m });
        }
    }
    Ok(DrawSummary {
        m,
        draws,
        pool_a: run_pool(panel, &a, m, draws, root)?,
        pool_b: run_pool(panel, &b, m, draws, root)?,
    })
}

/// Scatter rows `(pool, draw, risk, exp_return)` for plotting.
/// Per-asset single-index regressions against the equal-weight market mean
/// of the whole panel, as `ticker,alpha,beta,cluster` rows for plotting.
pub fn alpha_beta_csv(panel: &ReturnPanel, clustering: &Clustering) -> Result<String> {
    let all: Vec<usize> = (0..panel.n_assets()).collect();
    let market = panel.mean_series(&all);
    let mut out = String::from("ticker,alpha,beta,cluster\n");
    for (ticker, &label) in &clustering.assignments {
        let asset = panel
            .index_of(ticker)
            .ok_or_else(|| SdError::Config(format!("clustering ticker {ticker} not in panel")))?;
        let ab = alpha_beta(&panel.column(asset), &market)?;
        out.push_str(&format!("{ticker},{:e},{:e},{label}\n", ab.alpha, ab.beta));
    }
    Ok(out)
}

pub fn scatter_csv(summary: &DrawSummary) -> String {
    let mut out = String::from("pool,draw,risk,exp_return\n");
    for (label, pool) in [("A", &summary.pool_a), ("B", &summary.pool_b)] {
        for p in &pool.points {
            out.push_str(&format!("{label},{},{:e},{:e}\n", p.draw, p.risk, p.exp_return));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use rand::Rng;

    fn panel_from_columns(cols: &[(&str, Vec<f64>)]) -> ReturnPanel {
        let rows = cols[0].1.len();
        let start = NaiveDate::from_ymd_opt(2024, 1, 5).unwrap();
        let periods = (0..rows).map(|i| start + chrono::Days::new(7 * i as u64)).collect();
        let tickers = cols.iter().map(|(t, _)| t.to_string()).collect();
        let returns = (0..rows).map(|r| cols.iter().map(|(_, c)| c[r]).collect()).collect();
        ReturnPanel::new(periods, tickers, returns).unwrap()
    }

    #[test]
    fn symmetric_two_asset_case_splits_evenly() {
        let panel = panel_from_columns(&[
            ("AAA", vec![0.01, -0.01, 0.01, -0.01]),
            ("BBB", vec![0.01, 0.01, -0.01, -0.01]),
        ]);
        let s = gmvp(&panel).unwrap();
        assert!((s.weights["AAA"] - 0.5).abs() <= 1e-12);
        assert!((s.weights["BBB"] - 0.5).abs() <= 1e-12);
        assert!(!s.ridged);
        assert!(s.risk >= 0.0);
    }

    #[test]
    fn uncorrelated_weights_follow_inverse_variance() {
        // Sample variances 1 and 3, covariance exactly 0.
        let panel = panel_from_columns(&[
            ("AAA", vec![1.0, -1.0, 0.0]),
            ("BBB", vec![1.0, 1.0, -2.0]),
        ]);
        let s = gmvp(&panel).unwrap();
        assert!((s.weights["AAA"] - 0.75).abs() <= 1e-12);
        assert!((s.weights["BBB"] - 0.25).abs() <= 1e-12);
        assert!((s.risk - 0.75).abs() <= 1e-12);
    }

    #[test]
    fn duplicated_column_takes_ridge_path() {
        let col = vec![0.02, -0.01, 0.03, -0.02, 0.01];
        let panel = panel_from_columns(&[
            ("AAA", col.clone()),
            ("BBB", col),
            ("CCC", vec![0.01, 0.02, -0.03, 0.02, -0.01]),
        ]);
        let s = gmvp(&panel).unwrap();
        assert!(s.ridged);
        let total: f64 = s.weights.values().sum();
        assert!((total - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn gmvp_beats_equal_weight_and_satisfies_first_order_condition() {
        for trial in 0..10u64 {
            let mut rng = seed::rng(trial, &[17]);
            let n = 5;
            let t = 60;
            let cols: Vec<(String, Vec<f64>)> = (0..n)
                .map(|i| {
                    let scale = 0.01 + 0.01 * i as f64;
                    let series =
                        (0..t).map(|_| rng.gen_range(-scale..scale)).collect::<Vec<f64>>();
                    (format!("S{i}"), series)
                })
                .collect();
            let refs: Vec<(&str, Vec<f64>)> =
                cols.iter().map(|(s, v)| (s.as_str(), v.clone())).collect();
            let panel = panel_from_columns(&refs);
            let s = gmvp(&panel).unwrap();
            assert!(!s.ridged);

            let series: Vec<Vec<f64>> = (0..n).map(|a| panel.column(a)).collect();
            let port = |w: &dyn Fn(usize) -> f64| -> f64 {
                let combo: Vec<f64> = (0..t)
                    .map(|r| (0..n).map(|a| w(a) * series[a][r]).sum::<f64>())
                    .collect();
                covariance(&combo, &combo)
            };
            let gm = port(&|a| s.weights[&format!("S{a}")]);
            let eq = port(&|_| 1.0 / n as f64);
            assert!(gm <= eq + 1e-15, "trial {trial}: gmvp {gm} vs equal weight {eq}");
            assert!((gm - s.risk).abs() <= 1e-12);

            // First-order condition: the covariance image of w is constant.
            let cov =
                DMatrix::from_fn(n, n, |i, j| covariance(&series[i], &series[j]));
            let w = DVector::from_iterator(n, (0..n).map(|a| s.weights[&format!("S{a}")]));
            let img = cov * w;
            let avg = img.iter().sum::<f64>() / n as f64;
            for v in img.iter() {
                assert!((v - avg).abs() <= 1e-8 * avg.abs().max(1e-30));
            }
        }
    }

    #[test]
    fn regression_recovers_exact_relations() {
        let market = vec![0.01, -0.02, 0.03, 0.0, -0.01, 0.02];
        let ab = alpha_beta(&market, &market).unwrap();
        assert!((ab.alpha).abs() <= 1e-15);
        assert!((ab.beta - 1.0).abs() <= 1e-12);

        let doubled: Vec<f64> = market.iter().map(|v| 2.0 * v).collect();
        let ab = alpha_beta(&doubled, &market).unwrap();
        assert!((ab.alpha).abs() <= 1e-15);
        assert!((ab.beta - 2.0).abs() <= 1e-12);

        let flat = vec![0.01; 6];
        assert!(matches!(alpha_beta(&market, &flat), Err(SdError::ZeroMarketVariance)));
        assert!(alpha_beta(&market[..4], &market).is_err());
    }

    #[test]
    fn regression_estimates_land_near_truth() {
        let mut rng = seed::rng(9, &[23]);
        let t = 300;
        let market: Vec<f64> = (0..t).map(|_| rng.gen_range(-0.03..0.03)).collect();
        let noise_sd = 0.005;
        let asset: Vec<f64> = market
            .iter()
            .map(|m| 0.001 + 0.8 * m + rng.gen_range(-noise_sd..noise_sd))
            .collect();
        let ab = alpha_beta(&asset, &market).unwrap();

        let mm = mean(&market);
        let sxx: f64 = market.iter().map(|m| (m - mm) * (m - mm)).sum();
        let resid_var: f64 = asset
            .iter()
            .zip(&market)
            .map(|(a, m)| {
                let e = a - ab.alpha - ab.beta * m;
                e * e
            })
            .sum::<f64>()
            / (t as f64 - 2.0);
        let se_beta = (resid_var / sxx).sqrt();
        let se_alpha = (resid_var * (1.0 / t as f64 + mm * mm / sxx)).sqrt();
        assert!((ab.beta - 0.8).abs() <= 3.0 * se_beta, "beta {} se {se_beta}", ab.beta);
        assert!((ab.alpha - 0.001).abs() <= 3.0 * se_alpha, "alpha {} se {se_alpha}", ab.alpha);

        // Residuals are orthogonal to the regressor by construction.
        let resid: Vec<f64> =
            asset.iter().zip(&market).map(|(a, m)| a - ab.alpha - ab.beta * m).collect();
        assert!(covariance(&resid, &market).abs() <= 1e-10);
    }

    fn draw_panel() -> ReturnPanel {
        let mut rng = seed::rng(3, &[29]);
        let t = 50;
        let mut cols: Vec<(String, Vec<f64>)> = Vec::new();
        for i in 0..5 {
            let series = (0..t).map(|_| rng.gen_range(-0.01..0.01)).collect();
            cols.push((format!("LOW{i}"), series));
        }
        for i in 0..5 {
            let series = (0..t).map(|_| rng.gen_range(-0.05..0.05)).collect();
            cols.push((format!("HIGH{i}"), series));
        }
        let refs: Vec<(&str, Vec<f64>)> =
            cols.iter().map(|(s, v)| (s.as_str(), v.clone())).collect();
        panel_from_columns(&refs)
    }

    fn names(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{i}")).collect()
    }

    #[test]
    fn low_volatility_pool_carries_less_risk() {
        let panel = draw_panel();
        let s = draw_experiment(&panel, &names("LOW", 5), &names("HIGH", 5), 3, 100, 7).unwrap();
        assert!(
            s.pool_a.mean_risk < s.pool_b.mean_risk,
            "low pool {} vs high pool {}",
            s.pool_a.mean_risk,
            s.pool_b.mean_risk
        );
        assert_eq!(s.pool_a.points.len(), 100);
    }

    #[test]
    fn equal_pools_same_seed_are_identical() {
        let panel = draw_panel();
        let mut shuffled = names("LOW", 5);
        shuffled.reverse();
        let s = draw_experiment(&panel, &names("LOW", 5), &shuffled, 3, 20, 11).unwrap();
        assert_eq!(s.pool_a, PoolSummary { tickers: s.pool_b.tickers.clone(), ..s.pool_b.clone() });
    }

    #[test]
    fn degenerate_draw_counts_and_sizes() {
        let panel = draw_panel();
        // Pool size equals m: every draw is the same subset.
        let s = draw_experiment(&panel, &names("LOW", 3), &names("HIGH", 3), 3, 10, 5).unwrap();
        assert_eq!(s.pool_a.spread_risk, 0.0);
        assert_eq!(s.pool_a.spread_return, 0.0);
        assert!(s.pool_a.points.windows(2).all(|w| w[0].risk == w[1].risk));

        // A single draw reports exactly that portfolio's stats.
        let one = draw_experiment(&panel, &names("LOW", 5), &names("HIGH", 5), 2, 1, 5).unwrap();
        assert_eq!(one.pool_a.mean_risk, one.pool_a.points[0].risk);
        assert_eq!(one.pool_a.spread_risk, 0.0);

        assert!(matches!(
            draw_experiment(&panel, &names("LOW", 2), &names("HIGH", 5), 3, 10, 5),
            Err(SdError::PoolTooSmall { have: 2, want: 3 })
        ));
        assert!(draw_experiment(&panel, &names("LOW", 5), &names("HIGH", 5), 3, 0, 5).is_err());
    }

    #[test]
    fn scatter_csv_lists_both_pools() {
        let panel = draw_panel();
        let s = draw_experiment(&panel, &names("LOW", 5), &names("HIGH", 5), 2, 3, 5).unwrap();
        let csv = scatter_csv(&s);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 1 + 6);
        assert_eq!(lines[0], "pool,draw,risk,exp_return");
        assert!(lines[1].starts_with("A,0,"));
        assert!(lines[4].starts_with("B,0,"));
    }

    #[test]
    fn alpha_beta_csv_regresses_against_panel_mean() {
        let market: Vec<f64> = (0..10).map(|i| 0.01 * ((i % 5) as f64 - 2.0)).collect();
        let doubled: Vec<f64> = market.iter().map(|v| 2.0 * v).collect();
        let panel = panel_from_columns(&[("AAA", doubled), ("BBB", market)]);
        let mut assignments = BTreeMap::new();
        assignments.insert("AAA".to_string(), 0);
        assignments.insert("BBB".to_string(), 1);
        let clustering = crate::clustering::Clustering::from_assignments(2, assignments).unwrap();

        // Panel mean is 1.5x the base series, so betas are 4/3 and 2/3.
        let csv = alpha_beta_csv(&panel, &clustering).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "ticker,alpha,beta,cluster");
        let parse = |line: &str| {
            let f: Vec<&str> = line.split(',').collect();
            (
                f[0].to_string(),
                f[1].parse::<f64>().unwrap(),
                f[2].parse::<f64>().unwrap(),
                f[3].parse::<usize>().unwrap(),
            )
        };
        let (t0, a0, b0, c0) = parse(lines[1]);
        let (t1, a1, b1, c1) = parse(lines[2]);
        assert_eq!((t0.as_str(), c0), ("AAA", 0));
        assert_eq!((t1.as_str(), c1), ("BBB", 1));
        assert!(a0.abs() < 1e-15 && a1.abs() < 1e-15);
        assert!((b0 - 4.0 / 3.0).abs() < 1e-12);
        assert!((b1 - 2.0 / 3.0).abs() < 1e-12);
    }
}
