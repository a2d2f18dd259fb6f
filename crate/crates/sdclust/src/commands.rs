//! Command implementations behind the CLI.
//!
//! Every command reads and writes files under `out_dir` using fixed names, so
//! commands chain without path plumbing: `ingest` leaves `returns.csv`,
//! `matrix` leaves `matrix.csv`, and so on. `pipeline` runs the whole chain
//! with `s1_` and `s2_` prefixes and records a manifest. Reruns with the same
//! config and inputs are byte-identical; nothing here writes a timestamp.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::clustering::Clustering;
use crate::config::RunConfig;
use crate::error::{Result, SdError};
use crate::heatmap;
use crate::hierarchical::sd_hierarchical;
use crate::kmeans::sd_kmeans;
use crate::market_data::{self, ReturnPanel};
use crate::matrix::{build_matrix, SdMatrix};
use crate::portfolio::{alpha_beta_csv, draw_experiment, scatter_csv, DrawSummary};
use crate::ranking::{rank_centers, refine_pool, ClusterRanking};
use crate::sdstat::Order;
use crate::synthetic;
use crate::validity::{reports_to_csv, select_k, ClusterAlgo};

/// Output collector: writes files under one directory, echoes each write,
/// and remembers names so the pipeline manifest can digest them.
struct Outbox {
    dir: PathBuf,
    written: Vec<String>,
}

impl Outbox {
    fn new(dir: &Path) -> Result<Outbox> {
        std::fs::create_dir_all(dir)?;
        Ok(Outbox { dir: dir.to_path_buf(), written: Vec::new() })
    }

    fn save(&mut self, name: &str, write: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
        let path = self.dir.join(name);
        write(&path)?;
        println!("wrote {}", path.display());
        self.written.push(name.to_string());
        Ok(())
    }

    fn save_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        self.save(name, |p| Ok(std::fs::write(p, bytes)?))
    }

    fn save_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.save_bytes(name, text.as_bytes())
    }

    fn digests(&self) -> Result<BTreeMap<String, String>> {
        let mut out = BTreeMap::new();
        for name in &self.written {
            let bytes = std::fs::read(self.dir.join(name))?;
            out.insert(name.clone(), format!("{:x}", Sha256::digest(&bytes)));
        }
        Ok(out)
    }
}

/// Ticker pool on disk, produced by `refine` and consumed by `portfolio`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoolFile {
    pub tickers: Vec<String>,
}

pub fn load_pool(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path)?;
    let pool: PoolFile = serde_json::from_str(&text)?;
    Ok(pool.tickers)
}

fn load_panel(cfg: &RunConfig) -> Result<ReturnPanel> {
    let path = match &cfg.returns {
        Some(p) => p.clone(),
        None => {
            let fallback = cfg.out_dir.join("returns.csv");
            if !fallback.exists() {
                return Err(SdError::Config(
                    "no return panel: pass returns=<csv> or run `ingest` first".into(),
                ));
            }
            fallback
        }
    };
    ReturnPanel::load_csv(&path)
}

fn load_matrix(
    cfg: &RunConfig,
    explicit: Option<&Path>,
    panel: Option<&ReturnPanel>,
) -> Result<SdMatrix> {
    let path = explicit
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cfg.out_dir.join("matrix.csv"));
    if !path.exists() {
        return Err(SdError::Config(format!(
            "no coefficient matrix at {}: run `matrix` first or pass --matrix",
            path.display()
        )));
    }
    let matrix = SdMatrix::load_csv(&path)?;
    if let Some(p) = panel {
        if matrix.panel_digest.is_some() && !matrix.matches_panel(p) {
            return Err(SdError::Config(
                "coefficient matrix was built from a different return panel".into(),
            ));
        }
    }
    Ok(matrix)
}

fn ingest_panel(cfg: &RunConfig, out: &mut Outbox) -> Result<ReturnPanel> {
    let prices_path = cfg.prices.as_ref().ok_or_else(|| {
        SdError::Config("ingest needs prices=<csv> with date,ticker,close rows".into())
    })?;
    let raw = market_data::load_prices(prices_path)?;
    let weekly = market_data::to_weekly(&raw)?;
    let (panel, report) = market_data::log_returns(&weekly, cfg.min_coverage)?;
    out.save("returns.csv", |p| panel.save_csv(p))?;
    out.save_json("ingest_report.json", &report)?;
    println!(
        "ingested {} assets x {} periods ({} tickers dropped)",
        panel.n_assets(),
        panel.n_periods(),
        report.dropped_tickers.len()
    );
    Ok(panel)
}

fn run_matrix(
    panel: &ReturnPanel,
    cfg: &RunConfig,
    out: &mut Outbox,
    prefix: &str,
) -> Result<SdMatrix> {
    let matrix = build_matrix(panel, &cfg.bootstrap_config())?;
    out.save(&format!("{prefix}matrix.csv"), |p| matrix.save_csv(p))?;
    Ok(matrix)
}

fn run_select_k(
    panel: &ReturnPanel,
    matrix: &SdMatrix,
    cfg: &RunConfig,
    out: &mut Outbox,
    prefix: &str,
) -> Result<usize> {
    let (best, reports) = select_k(
        panel,
        matrix,
        cfg.algorithm,
        cfg.k_min,
        cfg.k_max,
        &cfg.bootstrap_config(),
        &cfg.kmeans_options(),
        cfg.seed,
    )?;
    out.save_bytes(&format!("{prefix}validity.csv"), reports_to_csv(&reports).as_bytes())?;
    out.save_json(
        &format!("{prefix}selected_k.json"),
        &json!({
            "algorithm": cfg.algorithm.label(),
            "k_min": cfg.k_min,
            "k_max": cfg.k_max,
            "best_k": best,
        }),
    )?;
    println!("selected K = {best} over [{}, {}]", cfg.k_min, cfg.k_max);
    Ok(best)
}

/// Clusters at the configured K, selecting one first when none is fixed.
/// Returns the partition and where its K came from.
fn run_cluster(
    panel: &ReturnPanel,
    matrix: Option<&SdMatrix>,
    cfg: &RunConfig,
    out: &mut Outbox,
    prefix: &str,
) -> Result<(Clustering, &'static str)> {
    let need_matrix = || {
        matrix.ok_or_else(|| {
            SdError::Config("this step needs the coefficient matrix: run `matrix` first".into())
        })
    };
    let (k, k_source) = match cfg.k {
        Some(k) => (k, "configured"),
        None => (run_select_k(panel, need_matrix()?, cfg, out, prefix)?, "selected"),
    };
    let clustering = match cfg.algorithm {
        ClusterAlgo::Kmeans => {
            sd_kmeans(panel, k, &cfg.bootstrap_config(), &cfg.kmeans_options(), cfg.seed)?
        }
        ClusterAlgo::Hierarchical => {
            let (clustering, dendrogram) = sd_hierarchical(need_matrix()?, k)?;
            out.save(&format!("{prefix}dendrogram.json"), |p| dendrogram.save_json(p))?;
            clustering
        }
    };
    out.save(&format!("{prefix}clustering.json"), |p| clustering.save_json(p))?;
    println!(
        "clustered {} assets into K = {k} ({}, {k_source})",
        panel.n_assets(),
        cfg.algorithm.label()
    );
    Ok((clustering, k_source))
}

/// Ranks cluster centers by directional dominance. Centers are always
/// recomputed from the panel so file-loaded and in-memory partitions agree
/// bit for bit.
fn run_rank(
    panel: &ReturnPanel,
    clustering: &mut Clustering,
    cfg: &RunConfig,
    out: &mut Outbox,
    prefix: &str,
) -> Result<ClusterRanking> {
    clustering.recompute_centers(panel)?;
    let ranking = rank_centers(clustering, cfg.alpha, &cfg.bootstrap_config())?;
    out.save(&format!("{prefix}ranking.json"), |p| ranking.save_json(p))?;
    print!("{}", ranking.summary_table(clustering.k));
    println!("optimal clusters: {:?}", ranking.optimal);
    Ok(ranking)
}

fn run_refine(
    panel: &ReturnPanel,
    clustering: &Clustering,
    ranking: &ClusterRanking,
    cfg: &RunConfig,
    out: &mut Outbox,
    prefix: &str,
) -> Result<Vec<String>> {
    let pool = refine_pool(panel, clustering, ranking, cfg.alpha, &cfg.bootstrap_config())?;
    out.save_json(&format!("{prefix}pool.json"), &PoolFile { tickers: pool.clone() })?;
    println!("refined pool holds {} of {} assets", pool.len(), panel.n_assets());
    Ok(pool)
}

fn run_draws(
    panel: &ReturnPanel,
    pool_a: &[String],
    pool_b: &[String],
    m: usize,
    cfg: &RunConfig,
    out: &mut Outbox,
) -> Result<DrawSummary> {
    let summary = draw_experiment(panel, pool_a, pool_b, m, cfg.draws, cfg.seed)?;
    out.save_json("draws.json", &summary)?;
    out.save_bytes("scatter.csv", scatter_csv(&summary).as_bytes())?;
    println!(
        "pool A: mean risk {:.3e}, mean return {:.3e}; pool B: mean risk {:.3e}, mean return {:.3e}",
        summary.pool_a.mean_risk,
        summary.pool_a.mean_return,
        summary.pool_b.mean_risk,
        summary.pool_b.mean_return
    );
    Ok(summary)
}

fn run_heatmap(
    matrix: &SdMatrix,
    clustering: Option<&Clustering>,
    out: &mut Outbox,
    prefix: &str,
) -> Result<()> {
    let order = heatmap::display_order(matrix, clustering)?;
    let permuted = matrix.permuted(&order)?;
    out.save_bytes(&format!("{prefix}heatmap.ppm"), &heatmap::render_p6(&permuted))?;
    out.save(&format!("{prefix}heatmap_matrix.csv"), |p| permuted.save_csv(p))?;
    Ok(())
}

pub fn cmd_ingest(cfg: &RunConfig) -> Result<()> {
    let mut out = Outbox::new(&cfg.out_dir)?;
    ingest_panel(cfg, &mut out)?;
    Ok(())
}

pub fn cmd_matrix(cfg: &RunConfig) -> Result<()> {
    let mut out = Outbox::new(&cfg.out_dir)?;
    let panel = load_panel(cfg)?;
    run_matrix(&panel, cfg, &mut out, "")?;
    Ok(())
}

pub fn cmd_cluster(cfg: &RunConfig, matrix_path: Option<&Path>) -> Result<()> {
    let mut out = Outbox::new(&cfg.out_dir)?;
    let panel = load_panel(cfg)?;
    let needs_matrix = cfg.algorithm == ClusterAlgo::Hierarchical || cfg.k.is_none();
    let matrix = if needs_matrix {
        Some(load_matrix(cfg, matrix_path, Some(&panel))?)
    } else {
        None
    };
    run_cluster(&panel, matrix.as_ref(), cfg, &mut out, "")?;
    Ok(())
}

pub fn cmd_select_k(cfg: &RunConfig, matrix_path: Option<&Path>) -> Result<()> {
    let mut out = Outbox::new(&cfg.out_dir)?;
    let panel = load_panel(cfg)?;
    let matrix = load_matrix(cfg, matrix_path, Some(&panel))?;
    run_select_k(&panel, &matrix, cfg, &mut out, "")?;
    Ok(())
}

pub fn cmd_rank(cfg: &RunConfig, clustering_path: Option<&Path>) -> Result<()> {
    let mut out = Outbox::new(&cfg.out_dir)?;
    let panel = load_panel(cfg)?;
    let path = clustering_path
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cfg.out_dir.join("clustering.json"));
    let mut clustering = Clustering::load_json(&path)?;
    run_rank(&panel, &mut clustering, cfg, &mut out, "")?;
    Ok(())
}

pub fn cmd_refine(
    cfg: &RunConfig,
    clustering_path: Option<&Path>,
    ranking_path: Option<&Path>,
) -> Result<()> {
    let mut out = Outbox::new(&cfg.out_dir)?;
    let panel = load_panel(cfg)?;
    let cpath = clustering_path
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cfg.out_dir.join("clustering.json"));
    let rpath = ranking_path
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cfg.out_dir.join("ranking.json"));
    let mut clustering = Clustering::load_json(&cpath)?;
    clustering.recompute_centers(&panel)?;
    let ranking = ClusterRanking::load_json(&rpath)?;
    run_refine(&panel, &clustering, &ranking, cfg, &mut out, "")?;
    Ok(())
}

pub fn cmd_portfolio(
    cfg: &RunConfig,
    pool_a: &Path,
    pool_b: &Path,
    clustering_path: Option<&Path>,
) -> Result<()> {
    let mut out = Outbox::new(&cfg.out_dir)?;
    let panel = load_panel(cfg)?;
    let a = load_pool(pool_a)?;
    let b = load_pool(pool_b)?;
    run_draws(&panel, &a, &b, cfg.portfolio_size, cfg, &mut out)?;
    if let Some(cpath) = clustering_path {
        let clustering = Clustering::load_json(cpath)?;
        out.save_bytes("alpha_beta.csv", alpha_beta_csv(&panel, &clustering)?.as_bytes())?;
    }
    Ok(())
}

pub fn cmd_heatmap(
    cfg: &RunConfig,
    matrix_path: Option<&Path>,
    clustering_path: Option<&Path>,
) -> Result<()> {
    let mut out = Outbox::new(&cfg.out_dir)?;
    let matrix = load_matrix(cfg, matrix_path, None)?;
    let clustering = match clustering_path {
        Some(p) => Some(Clustering::load_json(p)?),
        None => None,
    };
    run_heatmap(&matrix, clustering.as_ref(), &mut out, "")?;
    Ok(())
}

pub fn cmd_demo_data(cfg: &RunConfig, out_path: Option<&Path>) -> Result<()> {
    let panel = synthetic::demo_prices(cfg.seed);
    let path = match out_path {
        Some(p) => p.to_path_buf(),
        None => {
            std::fs::create_dir_all(&cfg.out_dir)?;
            cfg.out_dir.join("prices.csv")
        }
    };
    market_data::save_prices_csv(&panel, &path)?;
    println!(
        "wrote {} ({} assets x {} days)",
        path.display(),
        panel.n_assets(),
        panel.n_rows()
    );
    Ok(())
}

/// Splits a partition into the members of `optimal` clusters and the rest.
fn split_by_optimality(clustering: &Clustering, optimal: &[usize]) -> (Vec<String>, Vec<String>) {
    let chosen: BTreeSet<usize> = optimal.iter().copied().collect();
    let mut inside = Vec::new();
    let mut outside = Vec::new();
    for (ticker, label) in &clustering.assignments {
        if chosen.contains(label) {
            inside.push(ticker.clone());
        } else {
            outside.push(ticker.clone());
        }
    }
    (inside, outside)
}

pub fn cmd_pipeline(cfg: &RunConfig) -> Result<()> {
    let mut out = Outbox::new(&cfg.out_dir)?;

    let panel = if cfg.returns.is_none() && cfg.prices.is_some() {
        ingest_panel(cfg, &mut out)?
    } else {
        load_panel(cfg)?
    };

    // Stage 1: first-order clustering, ranking, pool refinement.
    let mut cfg1 = cfg.clone();
    cfg1.order = Order::First;
    println!("stage 1: order 1 {}", cfg1.direction.label());
    let m1 = run_matrix(&panel, &cfg1, &mut out, "s1_")?;
    let (mut c1, k1_source) = run_cluster(&panel, Some(&m1), &cfg1, &mut out, "s1_")?;
    let r1 = run_rank(&panel, &mut c1, &cfg1, &mut out, "s1_")?;
    run_heatmap(&m1, Some(&c1), &mut out, "s1_")?;
    let pool = run_refine(&panel, &c1, &r1, &cfg1, &mut out, "s1_")?;

    // Stage 2: second-order clustering of the refined pool.
    let indices: Vec<usize> = pool
        .iter()
        .map(|t| {
            panel
                .index_of(t)
                .ok_or_else(|| SdError::Config(format!("pool ticker {t} not in panel")))
        })
        .collect::<Result<_>>()?;
    let panel2 = panel.subset(&indices)?;
    out.save("s2_returns.csv", |p| panel2.save_csv(p))?;

    let mut cfg2 = cfg.clone();
    cfg2.order = Order::Second;
    cfg2.k_max = cfg.k_max.min(panel2.n_assets());
    if cfg2.k_min > cfg2.k_max {
        return Err(SdError::Config(format!(
            "refined pool of {} assets cannot host k_min = {}",
            panel2.n_assets(),
            cfg2.k_min
        )));
    }
    println!("stage 2: order 2 {} on {} assets", cfg2.direction.label(), panel2.n_assets());
    let m2 = run_matrix(&panel2, &cfg2, &mut out, "s2_")?;
    let (mut c2, k2_source) = run_cluster(&panel2, Some(&m2), &cfg2, &mut out, "s2_")?;
    let r2 = run_rank(&panel2, &mut c2, &cfg2, &mut out, "s2_")?;
    run_heatmap(&m2, Some(&c2), &mut out, "s2_")?;

    // Compare the investor-optimal pool against the rejected remainder.
    let (pool_a, pool_b) = split_by_optimality(&c2, &r2.optimal);
    out.save_json("s2_pool.json", &PoolFile { tickers: pool_a.clone() })?;
    let m_used = cfg.portfolio_size.min(pool_a.len()).min(pool_b.len());
    let draw_status = if pool_b.is_empty() {
        "skipped: every cluster is optimal, nothing to compare against"
    } else if m_used < 2 {
        "skipped: a pool is too small for a portfolio"
    } else {
        let mut dcfg = cfg.clone();
        dcfg.portfolio_size = m_used;
        run_draws(&panel2, &pool_a, &pool_b, m_used, &dcfg, &mut out)?;
        "ran"
    };
    out.save_bytes("alpha_beta.csv", alpha_beta_csv(&panel2, &c2)?.as_bytes())?;

    let manifest = json!({
        "config": cfg.describe(),
        "panel": {
            "digest": panel.digest(),
            "assets": panel.n_assets(),
            "periods": panel.n_periods(),
        },
        "stage1": {
            "order": 1,
            "direction": cfg.direction.label(),
            "k": c1.k,
            "k_source": k1_source,
            "optimal_clusters": r1.optimal,
            "refined_pool_size": pool.len(),
        },
        "stage2": {
            "order": 2,
            "direction": cfg.direction.label(),
            "panel_digest": panel2.digest(),
            "assets": panel2.n_assets(),
            "k": c2.k,
            "k_source": k2_source,
            "optimal_clusters": r2.optimal,
            "optimal_pool_size": pool_a.len(),
            "rejected_pool_size": pool_b.len(),
        },
        "draws": {
            "requested_portfolio_size": cfg.portfolio_size,
            "portfolio_size": m_used,
            "draws": cfg.draws,
            "status": draw_status,
        },
        "seed": cfg.seed,
        "outputs": out.digests()?,
    });
    out.save_json("manifest.json", &manifest)?;
    Ok(())
}
