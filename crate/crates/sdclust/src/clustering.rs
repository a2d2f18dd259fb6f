//! Partition of panel assets into clusters, shared by both clustering
//! algorithms.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SdError};
use crate::market_data::ReturnPanel;

/// Assignment of every ticker to one of `k` clusters.
///
/// `centers` and `distances` are working data: centers hold each cluster's
/// per-period mean return series, distances each stock's coefficient to its
/// own center from the final full-precision pass. Neither is serialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    #[serde(rename = "K")]
    pub k: usize,
    pub assignments: BTreeMap<String, usize>,
    pub iterations_used: usize,
    pub converged: bool,
    #[serde(skip)]
    pub centers: Vec<Vec<f64>>,
    #[serde(skip)]
    pub distances: BTreeMap<String, f64>,
}

impl Clustering {
    /// Builds a validated partition from bare labels, without working data.
    pub fn from_assignments(k: usize, assignments: BTreeMap<String, usize>) -> Result<Clustering> {
        let c = Clustering {
            k,
            assignments,
            iterations_used: 0,
            converged: true,
            centers: Vec::new(),
            distances: BTreeMap::new(),
        };
        c.validate()?;
        Ok(c)
    }

    /// Check structural invariants: indices in range, no empty cluster.
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.assignments.is_empty() {
            return Err(SdError::Config("clustering must have k >= 1 and assignments".into()));
        }
        let mut counts = vec![0usize; self.k];
        for (ticker, &c) in &self.assignments {
            if c >= self.k {
                return Err(SdError::Config(format!(
                    "ticker {ticker} assigned to cluster {c}, k = {}",
                    self.k
                )));
            }
            counts[c] += 1;
        }
        if let Some(empty) = counts.iter().position(|&c| c == 0) {
            return Err(SdError::Config(format!("cluster {empty} is empty")));
        }
        Ok(())
    }

    /// Tickers per cluster, each list sorted.
    pub fn members(&self) -> Vec<Vec<String>> {
        let mut out = vec![Vec::new(); self.k];
        for (ticker, &c) in &self.assignments {
            out[c].push(ticker.clone());
        }
        out
    }

    /// Panel column indices per cluster.
    pub fn member_indices(&self, panel: &ReturnPanel) -> Result<Vec<Vec<usize>>> {
        let mut out = vec![Vec::new(); self.k];
        for (ticker, &c) in &self.assignments {
            let idx = panel
                .index_of(ticker)
                .ok_or_else(|| SdError::Config(format!("ticker {ticker} not in panel")))?;
            out[c].push(idx);
        }
        for v in &mut out {
            v.sort_unstable();
        }
        Ok(out)
    }

    /// Equality as a set of sets, ignoring cluster labels.
    pub fn same_partition(&self, other: &Clustering) -> bool {
        let norm = |c: &Clustering| {
            let mut groups = c.members();
            groups.sort();
            groups
        };
        norm(self) == norm(other)
    }

    /// Fill `centers` with the member mean series from the panel.
    pub fn recompute_centers(&mut self, panel: &ReturnPanel) -> Result<()> {
        let members = self.member_indices(panel)?;
        self.centers = compute_centers(panel, &members);
        Ok(())
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<Clustering> {
        let text = std::fs::read_to_string(path)?;
        let c: Clustering = serde_json::from_str(&text)?;
        c.validate()?;
        Ok(c)
    }
}

/// Per-cluster mean return series for the given membership.
pub fn compute_centers(panel: &ReturnPanel, members: &[Vec<usize>]) -> Vec<Vec<f64>> {
    members.iter().map(|m| panel.mean_series(m)).collect()
}

/// Adjusted Rand index between two labelings of the same tickers: 1 for
/// identical partitions, around 0 for independent ones, negative for
/// systematic disagreement. Label values themselves are irrelevant.
pub fn adjusted_rand_index(
    a: &BTreeMap<String, usize>,
    b: &BTreeMap<String, usize>,
) -> Result<f64> {
    if a.len() != b.len() || a.keys().zip(b.keys()).any(|(x, y)| x != y) {
        return Err(SdError::Config("partitions must label the same tickers".into()));
    }
    let n = a.len();
    let choose2 = |x: usize| (x * x.saturating_sub(1)) as f64 / 2.0;

    let mut cells: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut rows: BTreeMap<usize, usize> = BTreeMap::new();
    let mut cols: BTreeMap<usize, usize> = BTreeMap::new();
    for (ticker, &la) in a {
        let lb = b[ticker];
        *cells.entry((la, lb)).or_default() += 1;
        *rows.entry(la).or_default() += 1;
        *cols.entry(lb).or_default() += 1;
    }
    let sum_cells: f64 = cells.values().map(|&c| choose2(c)).sum();
    let sum_rows: f64 = rows.values().map(|&c| choose2(c)).sum();
    let sum_cols: f64 = cols.values().map(|&c| choose2(c)).sum();
    let total = choose2(n);
    let expected = sum_rows * sum_cols / total;
    let max_index = 0.5 * (sum_rows + sum_cols);
    if max_index == expected {
        // Both partitions are all-singletons or single-cluster; they agree.
        return Ok(1.0);
    }
    Ok((sum_cells - expected) / (max_index - expected))
}
