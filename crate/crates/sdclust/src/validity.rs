//! Cluster validity indices over dominance coefficients, and K selection.
//!
//! The silhouette variant reads cohesion and separation straight off the
//! coefficient matrix. The Davies-Bouldin variant runs fresh pair tests
//! against cluster centers, because centers are derived mean series that do
//! not exist as matrix rows.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bootstrap::{pair_test, BootstrapConfig};
use crate::clustering::{compute_centers, Clustering};
use crate::error::{Result, SdError};
use crate::hierarchical::sd_hierarchical;
use crate::kmeans::{sd_kmeans, KmeansOptions};
use crate::market_data::ReturnPanel;
use crate::matrix::SdMatrix;
use crate::sdstat::Sample;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    #[serde(rename = "K")]
    pub k: usize,
    pub sd_sc: f64,
    /// None when separation collapsed for this K (identical centers).
    pub sd_dbi: Option<f64>,
    pub per_point_silhouette: BTreeMap<String, f64>,
}

/// Silhouette coefficient over matrix entries.
///
/// Cohesion a(i) averages distances to the other members of i's cluster
/// (zero-width clusters give a = 0 via the singleton rule below); separation
/// b(i) is the smallest mean distance to any other cluster. Each point scores
/// (b - a) / max(a, b); singletons score 0, as does a degenerate point with
/// a = b = 0. The index is the arithmetic mean over all points.
pub fn sd_sc(matrix: &SdMatrix, clustering: &Clustering) -> Result<(f64, BTreeMap<String, f64>)> {
    clustering.validate()?;
    if clustering.k < 2 {
        return Err(SdError::KOutOfRange { k: clustering.k, n: matrix.n() });
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); clustering.k];
    for (ticker, &c) in &clustering.assignments {
        let idx = matrix
            .index_of(ticker)
            .ok_or_else(|| SdError::Config(format!("ticker {ticker} not in matrix")))?;
        members[c].push(idx);
    }

    let mut per_point = BTreeMap::new();
    let mut total = 0.0;
    for (ticker, &c) in &clustering.assignments {
        let i = matrix.index_of(ticker).expect("checked above");
        let own = &members[c];
        let s = if own.len() < 2 {
            0.0
        } else {
            let a = own.iter().filter(|&&v| v != i).map(|&v| matrix.get(i, v)).sum::<f64>()
                / (own.len() - 1) as f64;
            let b = members
                .iter()
                .enumerate()
                .filter(|(t, m)| *t != c && !m.is_empty())
                .map(|(_, m)| m.iter().map(|&v| matrix.get(i, v)).sum::<f64>() / m.len() as f64)
                .fold(f64::INFINITY, f64::min);
            let denom = a.max(b);
            if denom == 0.0 {
                0.0
            } else {
                (b - a) / denom
            }
        };
        per_point.insert(ticker.clone(), s);
        total += s;
    }
    Ok((total / per_point.len() as f64, per_point))
}

/// Davies-Bouldin ratio from precomputed compactness and separation values.
///
/// `s[i]` is cluster i's mean member-to-center coefficient and `m[i][k]` the
/// center-to-center coefficient. Exposed separately so the arithmetic can be
/// pinned against hand values.
pub fn dbi_from_components(s: &[f64], m: &[Vec<f64>]) -> Result<f64> {
    let k = s.len();
    let mut total = 0.0;
    for i in 0..k {
        let mut worst = f64::NEG_INFINITY;
        for t in 0..k {
            if t == i {
                continue;
            }
            if m[i][t] == 0.0 {
                return Err(SdError::ZeroSeparation { i, k: t });
            }
            worst = worst.max((s[i] + s[t]) / m[i][t]);
        }
        total += worst;
    }
    Ok(total / k as f64)
}

/// Davies-Bouldin index with coefficient distances, lower is better.
///
/// Centers are recomputed from the panel as member mean series. Every
/// stock-to-center and center-to-center test runs fresh with a seed canonical
/// in its operands, so the result is schedule-independent.
pub fn sd_dbi(panel: &ReturnPanel, clustering: &Clustering, cfg: &BootstrapConfig) -> Result<f64> {
    clustering.validate()?;
    cfg.validate()?;
    if clustering.k < 2 {
        return Err(SdError::KOutOfRange { k: clustering.k, n: panel.n_assets() });
    }
    let members = clustering.member_indices(panel)?;
    let centers = compute_centers(panel, &members);
    let center_samples: Vec<Sample> =
        centers.iter().map(|c| Sample::new(c.clone())).collect::<Result<_>>()?;

    let jobs: Vec<(usize, usize)> = members
        .iter()
        .enumerate()
        .flat_map(|(c, m)| m.iter().map(move |&v| (c, v)))
        .collect();
    let compact: Vec<((usize, usize), f64)> = jobs
        .into_par_iter()
        .map(|(c, v)| {
            let s = seed::derive(cfg.seed, &[seed::TAG_DBI, 1, c as u64, v as u64]);
            let stock = panel.sample(v)?;
            let coef = pair_test(&stock, &center_samples[c], &cfg.with_seed(s))?.coefficient;
            Ok(((c, v), coef))
        })
        .collect::<Result<_>>()?;
    let mut s = vec![0.0; clustering.k];
    for ((c, _), coef) in compact {
        s[c] += coef / members[c].len() as f64;
    }

    let pairs: Vec<(usize, usize)> = (0..clustering.k)
        .flat_map(|i| ((i + 1)..clustering.k).map(move |t| (i, t)))
        .collect();
    let seps: Vec<((usize, usize), f64)> = pairs
        .into_par_iter()
        .map(|(i, t)| {
            let sd = seed::derive(cfg.seed, &[seed::TAG_DBI, 2, i as u64, t as u64]);
            let coef =
                pair_test(&center_samples[i], &center_samples[t], &cfg.with_seed(sd))?.coefficient;
            Ok(((i, t), coef))
        })
        .collect::<Result<_>>()?;
    let mut m = vec![vec![0.0; clustering.k]; clustering.k];
    for ((i, t), coef) in seps {
        m[i][t] = coef;
        m[t][i] = coef;
    }

    dbi_from_components(&s, &m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClusterAlgo {
    Kmeans,
    Hierarchical,
}

impl ClusterAlgo {
    pub fn label(&self) -> &'static str {
        match self {
            ClusterAlgo::Kmeans => "kmeans",
            ClusterAlgo::Hierarchical => "hierarchical",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "kmeans" => Ok(ClusterAlgo::Kmeans),
            "hier" | "hierarchical" => Ok(ClusterAlgo::Hierarchical),
            other => Err(SdError::Config(format!(
                "unknown algorithm `{other}`, expected kmeans or hier"
            ))),
        }
    }
}

/// Run the chosen algorithm for every K in `k_min..=k_max`, score each
/// partition, and return the K with the highest silhouette (smallest K wins
/// ties) together with all per-K reports.
///
/// A separation collapse only disables the Davies-Bouldin column for that K;
/// selection is driven by the silhouette.
#[allow(clippy::too_many_arguments)]
pub fn select_k(
    panel: &ReturnPanel,
    matrix: &SdMatrix,
    algo: ClusterAlgo,
    k_min: usize,
    k_max: usize,
    cfg: &BootstrapConfig,
    opts: &KmeansOptions,
    seed: u64,
) -> Result<(usize, Vec<ValidityReport>)> {
    let n = panel.n_assets();
    if !(2 <= k_min && k_min <= k_max && k_max <= n) {
        return Err(SdError::Config(format!(
            "need 2 <= k_min <= k_max <= {n}, got [{k_min}, {k_max}]"
        )));
    }

    let mut reports = Vec::new();
    for k in k_min..=k_max {
        let clustering = match algo {
            ClusterAlgo::Kmeans => {
                let k_seed = seed::derive(seed, &[seed::TAG_SELECT_K, k as u64]);
                sd_kmeans(panel, k, cfg, opts, k_seed)?
            }
            ClusterAlgo::Hierarchical => sd_hierarchical(matrix, k)?.0,
        };
        let (sc, per_point) = sd_sc(matrix, &clustering)?;
        let dbi = match sd_dbi(panel, &clustering, cfg) {
            Ok(v) => Some(v),
            Err(SdError::ZeroSeparation { .. }) => None,
            Err(e) => return Err(e),
        };
        reports.push(ValidityReport { k, sd_sc: sc, sd_dbi: dbi, per_point_silhouette: per_point });
    }

    let best = reports
        .iter()
        .max_by(|a, b| {
            a.sd_sc.partial_cmp(&b.sd_sc).expect("silhouette is finite").then(b.k.cmp(&a.k))
        })
        .expect("k range is nonempty")
        .k;
    Ok((best, reports))
}

/// CSV of (K, SD-SC, SD-DBI), one row per candidate K.
pub fn reports_to_csv(reports: &[ValidityReport]) -> String {
    let mut out = String::from("K,sd_sc,sd_dbi\n");
    for r in reports {
        let dbi = r.sd_dbi.map(|v| format!("{v:.12}")).unwrap_or_default();
        out.push_str(&format!("{},{:.12},{}\n", r.k, r.sd_sc, dbi));
    }
    out
}
