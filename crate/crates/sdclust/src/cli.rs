//! Argument parsing and command dispatch.
//!
//! Settings resolve in three layers: built-in defaults, then an optional
//! `--config` file of flat `key = value` lines, then individual flags. Exit
//! codes: 0 ok, 2 config error, 3 data error, 4 numerical error.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands;
use crate::config::RunConfig;
use crate::error::Result;
use crate::sdstat::{Direction, Order};
use crate::validity::ClusterAlgo;

#[derive(Debug, Parser)]
#[command(
    name = "sdclust",
    version,
    about = "Cluster return series by stochastic-dominance distance and compare the preferred pools"
)]
struct Cli {
    /// Flat key = value config file, applied before flag overrides
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Cmd,
}

/// Per-key overrides mirroring the config file. Only flags the user passes
/// are applied, so file settings survive unless explicitly overridden.
#[derive(Debug, Args)]
struct Overrides {
    /// Raw price CSV with date,ticker,close rows
    #[arg(long, global = true, value_name = "FILE")]
    prices: Option<PathBuf>,
    /// Balanced return panel CSV
    #[arg(long, global = true, value_name = "FILE")]
    returns: Option<PathBuf>,
    /// Directory for all outputs
    #[arg(long, global = true, value_name = "DIR")]
    out_dir: Option<PathBuf>,
    /// Test direction: asc (risk-averse) or desc (risk-seeking)
    #[arg(long, global = true)]
    direction: Option<String>,
    /// Dominance order: 1, 2 or 3
    #[arg(long, global = true)]
    order: Option<u8>,
    /// Bootstrap replications per pair test
    #[arg(long, global = true)]
    reps: Option<usize>,
    /// Evaluation grid size
    #[arg(long, global = true)]
    grid_points: Option<usize>,
    /// Significance level for directional tests
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Fixed cluster count (omit to scan k_min..=k_max)
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Lower end of the K scan
    #[arg(long, global = true)]
    k_min: Option<usize>,
    /// Upper end of the K scan
    #[arg(long, global = true)]
    k_max: Option<usize>,
    /// Clustering algorithm: kmeans or hier
    #[arg(long, global = true)]
    algorithm: Option<String>,
    /// Root seed; every random step derives from it
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel sections (0 = library default)
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Minimum fraction of price rows an asset must cover
    #[arg(long, global = true)]
    min_coverage: Option<f64>,
    /// Pooled-variance floor below which a grid point is skipped
    #[arg(long, global = true)]
    var_floor: Option<f64>,
    /// Replications used inside k-means iterations
    #[arg(long, global = true)]
    iter_reps: Option<usize>,
    /// K-means iteration cap
    #[arg(long, global = true)]
    max_iter: Option<usize>,
    /// Assets per random portfolio draw
    #[arg(long, global = true)]
    portfolio_size: Option<usize>,
    /// Random draws per pool
    #[arg(long, global = true)]
    draws: Option<usize>,
}

impl Overrides {
    fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        if let Some(v) = &self.prices {
            cfg.prices = Some(v.clone());
        }
        if let Some(v) = &self.returns {
            cfg.returns = Some(v.clone());
        }
        if let Some(v) = &self.out_dir {
            cfg.out_dir = v.clone();
        }
        if let Some(v) = &self.direction {
            cfg.direction = Direction::parse(v)?;
        }
        if let Some(v) = self.order {
            cfg.order = Order::from_u8(v)?;
        }
        if let Some(v) = self.reps {
            cfg.reps = v;
        }
        if let Some(v) = self.grid_points {
            cfg.grid_points = v;
        }
        if let Some(v) = self.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = self.k {
            cfg.k = Some(v);
        }
        if let Some(v) = self.k_min {
            cfg.k_min = v;
        }
        if let Some(v) = self.k_max {
            cfg.k_max = v;
        }
        if let Some(v) = &self.algorithm {
            cfg.algorithm = ClusterAlgo::parse(v)?;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.workers {
            cfg.workers = v;
        }
        if let Some(v) = self.min_coverage {
            cfg.min_coverage = v;
        }
        if let Some(v) = self.var_floor {
            cfg.var_floor = v;
        }
        if let Some(v) = self.iter_reps {
            cfg.iter_reps = v;
        }
        if let Some(v) = self.max_iter {
            cfg.max_iter = v;
        }
        if let Some(v) = self.portfolio_size {
            cfg.portfolio_size = v;
        }
        if let Some(v) = self.draws {
            cfg.draws = v;
        }
        Ok(())
    }
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Load raw prices, aggregate to weekly, write the balanced return panel
    Ingest,
    /// Build the pairwise dominance-coefficient matrix from the return panel
    Matrix,
    /// Partition the panel at K, selecting K first when none is configured
    Cluster {
        /// Coefficient matrix CSV (default <out_dir>/matrix.csv)
        #[arg(long, value_name = "FILE")]
        matrix: Option<PathBuf>,
    },
    /// Scan K over [k_min, k_max] and report validity indices
    SelectK {
        /// Coefficient matrix CSV (default <out_dir>/matrix.csv)
        #[arg(long, value_name = "FILE")]
        matrix: Option<PathBuf>,
    },
    /// Rank cluster centers by directional dominance tests
    Rank {
        /// Clustering JSON (default <out_dir>/clustering.json)
        #[arg(long, value_name = "FILE")]
        clustering: Option<PathBuf>,
    },
    /// Keep optimal-cluster members plus outsiders no optimal center dominates
    Refine {
        /// Clustering JSON (default <out_dir>/clustering.json)
        #[arg(long, value_name = "FILE")]
        clustering: Option<PathBuf>,
        /// Ranking JSON (default <out_dir>/ranking.json)
        #[arg(long, value_name = "FILE")]
        ranking: Option<PathBuf>,
    },
    /// Random-draw minimum-variance comparison between two ticker pools
    Portfolio {
        /// Pool JSON for side A
        #[arg(long, value_name = "FILE")]
        pool_a: PathBuf,
        /// Pool JSON for side B
        #[arg(long, value_name = "FILE")]
        pool_b: PathBuf,
        /// Clustering JSON; when given, also writes alpha_beta.csv
        #[arg(long, value_name = "FILE")]
        clustering: Option<PathBuf>,
    },
    /// Render the coefficient matrix as a grayscale pixmap in cluster order
    Heatmap {
        /// Coefficient matrix CSV (default <out_dir>/matrix.csv)
        #[arg(long, value_name = "FILE")]
        matrix: Option<PathBuf>,
        /// Clustering JSON giving the block order (optional)
        #[arg(long, value_name = "FILE")]
        clustering: Option<PathBuf>,
    },
    /// Run the whole chain: order-1 cluster, rank, refine, order-2 cluster,
    /// rank, then compare the optimal pool against the rest
    Pipeline,
    /// Write the bundled synthetic demo price panel
    DemoData {
        /// Output CSV path (default <out_dir>/prices.csv)
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
}

fn execute(cli: &Cli) -> Result<()> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        cfg.merge_file(path)?;
    }
    cli.overrides.apply(&mut cfg)?;
    cfg.validate()?;
    if cfg.workers > 0 {
        // The global pool can be set once per process; later calls are no-ops.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build_global();
    }
    match &cli.command {
        Cmd::Ingest => commands::cmd_ingest(&cfg),
        Cmd::Matrix => commands::cmd_matrix(&cfg),
        Cmd::Cluster { matrix } => commands::cmd_cluster(&cfg, matrix.as_deref()),
        Cmd::SelectK { matrix } => commands::cmd_select_k(&cfg, matrix.as_deref()),
        Cmd::Rank { clustering } => commands::cmd_rank(&cfg, clustering.as_deref()),
        Cmd::Refine { clustering, ranking } => {
            commands::cmd_refine(&cfg, clustering.as_deref(), ranking.as_deref())
        }
        Cmd::Portfolio { pool_a, pool_b, clustering } => {
            commands::cmd_portfolio(&cfg, pool_a, pool_b, clustering.as_deref())
        }
        Cmd::Heatmap { matrix, clustering } => {
            commands::cmd_heatmap(&cfg, matrix.as_deref(), clustering.as_deref())
        }
        Cmd::Pipeline => commands::cmd_pipeline(&cfg),
        Cmd::DemoData { out } => commands::cmd_demo_data(&cfg, out.as_deref()),
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version surface as Err but are not failures.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
