//! Run configuration shared by every command.
//!
//! Settings come from an optional flat `key = value` text file, then
//! command-line flags override individual keys. One root seed drives all
//! randomness so a config file pins an entire run.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::bootstrap::BootstrapConfig;
use crate::error::{Result, SdError};
use crate::kmeans::KmeansOptions;
use crate::sdstat::{Direction, Order};
use crate::validity::ClusterAlgo;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Raw price CSV (`date,ticker,close`), input to `ingest`.
    pub prices: Option<PathBuf>,
    /// Balanced return panel CSV; produced by `ingest`, consumed downstream.
    pub returns: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub direction: Direction,
    pub order: Order,
    /// Bootstrap replications per pair test.
    pub reps: usize,
    pub grid_points: usize,
    /// Significance level for directional dominance tests.
    pub alpha: f64,
    /// Fixed cluster count. When absent, commands scan `k_min..=k_max`.
    pub k: Option<usize>,
    pub k_min: usize,
    pub k_max: usize,
    pub algorithm: ClusterAlgo,
    pub seed: u64,
    /// Rayon worker threads; 0 keeps the library default.
    pub workers: usize,
    pub min_coverage: f64,
    pub var_floor: f64,
    /// Cheaper replication count inside k-means iterations.
    pub iter_reps: usize,
    pub max_iter: usize,
    /// Portfolio size per random draw.
    pub portfolio_size: usize,
    pub draws: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            prices: None,
            returns: None,
            out_dir: PathBuf::from("out"),
            direction: Direction::Ascending,
            order: Order::First,
            reps: 1000,
            grid_points: 100,
            alpha: 0.05,
            k: None,
            k_min: 2,
            k_max: 6,
            algorithm: ClusterAlgo::Kmeans,
            seed: 42,
            workers: 0,
            min_coverage: 1.0,
            var_floor: 1e-12,
            iter_reps: 300,
            max_iter: 100,
            portfolio_size: 3,
            draws: 100,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| SdError::Config(format!("invalid value `{value}` for key `{key}`")))
}

impl RunConfig {
    /// Applies one `key = value` assignment. Both the config file parser and
    /// the flag layer funnel through here so they cannot drift apart.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "prices" => self.prices = Some(PathBuf::from(value)),
            "returns" => self.returns = Some(PathBuf::from(value)),
            "out_dir" => self.out_dir = PathBuf::from(value),
            "direction" => self.direction = Direction::parse(value)?,
            "order" => self.order = Order::from_u8(parse_num(key, value)?)?,
            "reps" => self.reps = parse_num(key, value)?,
            "grid_points" => self.grid_points = parse_num(key, value)?,
            "alpha" => self.alpha = parse_num(key, value)?,
            "k" => self.k = Some(parse_num(key, value)?),
            "k_min" => self.k_min = parse_num(key, value)?,
            "k_max" => self.k_max = parse_num(key, value)?,
            "algorithm" => self.algorithm = ClusterAlgo::parse(value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "workers" => self.workers = parse_num(key, value)?,
            "min_coverage" => self.min_coverage = parse_num(key, value)?,
            "var_floor" => self.var_floor = parse_num(key, value)?,
            "iter_reps" => self.iter_reps = parse_num(key, value)?,
            "max_iter" => self.max_iter = parse_num(key, value)?,
            "portfolio_size" => self.portfolio_size = parse_num(key, value)?,
            "draws" => self.draws = parse_num(key, value)?,
            other => return Err(SdError::Config(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        cfg.merge_file(path)?;
        Ok(cfg)
    }

    pub fn merge_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            SdError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                SdError::Config(format!("config line {} is not `key = value`: `{raw}`", i + 1))
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.bootstrap_config().validate()?;
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(SdError::Config(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if let Some(k) = self.k {
            if k < 2 {
                return Err(SdError::Config(format!("k must be at least 2, got {k}")));
            }
        }
        if self.k_min < 2 || self.k_min > self.k_max {
            return Err(SdError::Config(format!(
                "need 2 <= k_min <= k_max, got [{}, {}]",
                self.k_min, self.k_max
            )));
        }
        if !(self.min_coverage > 0.0 && self.min_coverage <= 1.0) {
            return Err(SdError::Config(format!(
                "min_coverage must lie in (0, 1], got {}",
                self.min_coverage
            )));
        }
        if self.iter_reps == 0 || self.max_iter == 0 {
            return Err(SdError::Config(
                "iter_reps and max_iter must be at least 1".into(),
            ));
        }
        if self.portfolio_size < 2 {
            return Err(SdError::Config(format!(
                "portfolio_size must be at least 2, got {}",
                self.portfolio_size
            )));
        }
        if self.draws == 0 {
            return Err(SdError::Config("draws must be at least 1".into()));
        }
        Ok(())
    }

    pub fn bootstrap_config(&self) -> BootstrapConfig {
        BootstrapConfig {
            order: self.order,
            direction: self.direction,
            reps: self.reps,
            grid_points: self.grid_points,
            seed: self.seed,
            var_floor: self.var_floor,
            keep_boot_stats: false,
        }
    }

    pub fn kmeans_options(&self) -> KmeansOptions {
        KmeansOptions {
            max_iter: self.max_iter,
            iter_reps: self.iter_reps,
        }
    }

    /// Effective settings as sorted text pairs, echoed into run manifests.
    pub fn describe(&self) -> BTreeMap<String, String> {
        let path = |p: &Option<PathBuf>| {
            p.as_ref().map(|v| v.display().to_string()).unwrap_or_default()
        };
        let mut m = BTreeMap::new();
        m.insert("prices".into(), path(&self.prices));
        m.insert("returns".into(), path(&self.returns));
        m.insert("out_dir".into(), self.out_dir.display().to_string());
        m.insert("direction".into(), self.direction.label().to_string());
        m.insert("order".into(), self.order.j().to_string());
        m.insert("reps".into(), self.reps.to_string());
        m.insert("grid_points".into(), self.grid_points.to_string());
        m.insert("alpha".into(), self.alpha.to_string());
        m.insert(
            "k".into(),
            self.k.map(|k| k.to_string()).unwrap_or_default(),
        );
        m.insert("k_min".into(), self.k_min.to_string());
        m.insert("k_max".into(), self.k_max.to_string());
        m.insert("algorithm".into(), self.algorithm.label().to_string());
        m.insert("seed".into(), self.seed.to_string());
        m.insert("workers".into(), self.workers.to_string());
        m.insert("min_coverage".into(), self.min_coverage.to_string());
        m.insert("var_floor".into(), self.var_floor.to_string());
        m.insert("iter_reps".into(), self.iter_reps.to_string());
        m.insert("max_iter".into(), self.max_iter.to_string());
        m.insert("portfolio_size".into(), self.portfolio_size.to_string());
        m.insert("draws".into(), self.draws.to_string());
        m
    }
}
