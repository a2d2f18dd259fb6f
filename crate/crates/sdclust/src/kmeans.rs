//! K-means-style partitioning with bootstrap dominance coefficients as the
//! point-to-center distance.
//!
//! Centers are cross-sectional mean return series of the current members.
//! Each iteration tests every stock against every center; the coefficient
//! seed is derived from (iteration, stock, cluster), so a run is reproducible
//! regardless of thread schedule. Iterations use a reduced replication count
//! and a final pass recomputes the reported distances at full precision.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::bootstrap::{pair_test, BootstrapConfig};
use crate::clustering::Clustering;
use crate::error::{Result, SdError};
use crate::market_data::ReturnPanel;
use crate::sdstat::Sample;
use crate::seed;

#[derive(Debug, Clone)]
pub struct KmeansOptions {
    pub max_iter: usize,
    /// Bootstrap replications used inside the iteration loop; the final
    /// reported distances always use the full count from the test config.
    pub iter_reps: usize,
}

impl Default for KmeansOptions {
    fn default() -> Self {
        KmeansOptions { max_iter: 100, iter_reps: 300 }
    }
}

/// Distance from a stock to a cluster center: the pair-test coefficient.
pub fn distance(stock: &Sample, center: &Sample, cfg: &BootstrapConfig) -> Result<f64> {
    Ok(pair_test(stock, center, cfg)?.coefficient)
}

/// Move one stock into each empty cluster.
///
/// The stock chosen is the one farthest from its own center (largest
/// coefficient this iteration), drawn only from clusters that would keep at
/// least two members, ties to the lowest stock index. Returns the repaired
/// assignment in place.
fn repair_empty_clusters(dist: &[Vec<f64>], assign: &mut [usize], k: usize) {
    let n = assign.len();
    loop {
        let mut counts = vec![0usize; k];
        for &c in assign.iter() {
            counts[c] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let donor = (0..n)
            .filter(|&i| counts[assign[i]] >= 2)
            .max_by(|&a, &b| {
                dist[a][assign[a]]
                    .partial_cmp(&dist[b][assign[b]])
                    .expect("coefficients are finite")
                    .then(b.cmp(&a))
            })
            .expect("a cluster with two members exists while any cluster is empty");
        assign[donor] = empty;
    }
}

/// Partition the panel into `k` clusters (2 <= k <= number of assets).
///
/// `seed` drives both the random initial centers and every per-iteration
/// coefficient; `cfg.seed` is not used.
pub fn sd_kmeans(
    panel: &ReturnPanel,
    k: usize,
    cfg: &BootstrapConfig,
    opts: &KmeansOptions,
    seed: u64,
) -> Result<Clustering> {
    cfg.validate()?;
    let n = panel.n_assets();
    if k < 2 || k > n {
        return Err(SdError::KOutOfRange { k, n });
    }
    if opts.max_iter == 0 || opts.iter_reps == 0 {
        return Err(SdError::Config("max_iter and iter_reps must be at least 1".into()));
    }

    let samples: Vec<Sample> = (0..n).map(|a| panel.sample(a)).collect::<Result<_>>()?;

    let init = rand::seq::index::sample(&mut seed::rng(seed, &[seed::TAG_KMEANS_INIT]), n, k);
    let mut centers: Vec<Vec<f64>> = init.iter().map(|i| panel.column(i)).collect();

    let mut assign: Vec<usize> = vec![0; n];
    let mut have_assignment = false;
    let mut iterations_used = 0;
    let mut converged = false;

    for it in 0..opts.max_iter {
        iterations_used = it + 1;
        let center_samples: Vec<Sample> =
            centers.iter().map(|c| Sample::new(c.clone())).collect::<Result<_>>()?;

        let dist: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                (0..k)
                    .map(|t| {
                        let s = seed::derive(
                            seed,
                            &[seed::TAG_KMEANS_DIST, it as u64, i as u64, t as u64],
                        );
                        let iter_cfg =
                            BootstrapConfig { seed: s, reps: opts.iter_reps, ..cfg.clone() };
                        distance(&samples[i], &center_samples[t], &iter_cfg)
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<_>>()?;

        let mut next: Vec<usize> = dist
            .iter()
            .map(|row| {
                // Lowest index wins ties, hence strict less-than.
                let mut best = 0;
                for (t, &d) in row.iter().enumerate().skip(1) {
                    if d < row[best] {
                        best = t;
                    }
                }
                best
            })
            .collect();
        repair_empty_clusters(&dist, &mut next, k);

        let changed = !have_assignment || next != assign;
        assign = next;
        have_assignment = true;

        let mut members = vec![Vec::new(); k];
        for (i, &c) in assign.iter().enumerate() {
            members[c].push(i);
        }
        centers = members.iter().map(|m| panel.mean_series(m)).collect();

        if !changed {
            converged = true;
            break;
        }
    }

    let center_samples: Vec<Sample> =
        centers.iter().map(|c| Sample::new(c.clone())).collect::<Result<_>>()?;
    let final_distances: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let t = assign[i];
            let s = seed::derive(seed, &[seed::TAG_KMEANS_FINAL, i as u64, t as u64]);
            distance(&samples[i], &center_samples[t], &cfg.with_seed(s))
        })
        .collect::<Result<_>>()?;

    let assignments: BTreeMap<String, usize> =
        panel.tickers.iter().cloned().zip(assign.iter().copied()).collect();
    let distances: BTreeMap<String, f64> =
        panel.tickers.iter().cloned().zip(final_distances).collect();

    let clustering = Clustering {
        k,
        assignments,
        iterations_used,
        converged,
        centers,
        distances,
    };
    clustering.validate()?;
    Ok(clustering)
}
