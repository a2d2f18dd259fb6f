//! Pairwise dominance-coefficient matrix over a return panel.
//!
//! Entry (i, k) is the bootstrap coefficient from testing asset i against
//! asset k, which is symmetric in its arguments, so each unordered pair is
//! computed once. The diagonal is zero by definition and no test is run for
//! it. Every pair draws its replications from a seed derived from the root
//! seed and the canonical (smaller, larger) index pair, which makes entries
//! independent of build order and of the parallel schedule.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::bootstrap::{pair_test, BootstrapConfig};
use crate::error::{Result, SdError};
use crate::market_data::ReturnPanel;
use crate::sdstat::{Direction, Order, Sample};
use crate::seed;

/// Loaded matrices may disagree with their stored counterpart by at most this
/// much per entry before the file is rejected as asymmetric.
const SYMMETRY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SdMatrix {
    pub tickers: Vec<String>,
    /// Row-major `n * n` coefficients in [0, 1], symmetric, zero diagonal.
    values: Vec<f64>,
    pub order: Order,
    pub direction: Direction,
    pub reps: usize,
    pub grid_points: usize,
    pub seed: u64,
    pub var_floor: f64,
    /// Digest of the panel the matrix was built from, when known.
    pub panel_digest: Option<String>,
}

impl SdMatrix {
    pub fn n(&self) -> usize {
        self.tickers.len()
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.values[i * self.n() + k]
    }

    pub fn index_of(&self, ticker: &str) -> Option<usize> {
        self.tickers.iter().position(|t| t == ticker)
    }

    pub fn matches_panel(&self, panel: &ReturnPanel) -> bool {
        self.panel_digest.as_deref() == Some(panel.digest().as_str())
    }

    /// Wraps externally computed distances. `values` is row-major `n * n` and
    /// must pass the same symmetry and range checks as a loaded file; `cfg`
    /// only stamps the metadata fields.
    pub fn from_values(tickers: Vec<String>, values: Vec<f64>, cfg: &BootstrapConfig) -> Result<SdMatrix> {
        let m = SdMatrix {
            tickers,
            values,
            order: cfg.order,
            direction: cfg.direction,
            reps: cfg.reps,
            grid_points: cfg.grid_points,
            seed: cfg.seed,
            var_floor: cfg.var_floor,
            panel_digest: None,
        };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        let n = self.n();
        if n < 2 {
            return Err(SdError::MatrixFormat("need at least two tickers".into()));
        }
        if self.values.len() != n * n {
            return Err(SdError::MatrixFormat("value grid is not square".into()));
        }
        for i in 0..n {
            if self.get(i, i) != 0.0 {
                return Err(SdError::MatrixFormat(format!(
                    "diagonal entry ({i}, {i}) is {}, expected 0",
                    self.get(i, i)
                )));
            }
            for k in (i + 1)..n {
                let (a, b) = (self.get(i, k), self.get(k, i));
                if (a - b).abs() > SYMMETRY_TOL {
                    return Err(SdError::AsymmetricMatrix { i, k, a, b });
                }
                if !(0.0..=1.0).contains(&a) {
                    return Err(SdError::MatrixFormat(format!(
                        "entry ({i}, {k}) = {a} outside [0, 1]"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Reorders assets by `order`, a permutation of `0..n`. The digest is
    /// dropped because the result no longer matches any panel column order.
    pub fn permuted(&self, order: &[usize]) -> Result<SdMatrix> {
        let n = self.n();
        let mut seen = vec![false; n];
        for &i in order {
            if i >= n || seen[i] {
                return Err(SdError::MatrixFormat(format!(
                    "asset order {order:?} is not a permutation of 0..{n}"
                )));
            }
            seen[i] = true;
        }
        if order.len() != n {
            return Err(SdError::MatrixFormat(format!(
                "asset order has {} entries, matrix has {n}",
                order.len()
            )));
        }
        let tickers = order.iter().map(|&i| self.tickers[i].clone()).collect();
        let mut values = vec![0.0; n * n];
        for (row, &i) in order.iter().enumerate() {
            for (col, &k) in order.iter().enumerate() {
                values[row * n + col] = self.get(i, k);
            }
        }
        Ok(SdMatrix {
            tickers,
            values,
            panel_digest: None,
            ..self.clone()
        })
    }

    /// Write as CSV with `#` metadata lines, values at 12 decimal places.
    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        out.push_str("# sdclust coefficient matrix v1\n");
        out.push_str(&format!("# order: {}\n", self.order.j()));
        out.push_str(&format!("# direction: {}\n", self.direction.label()));
        out.push_str(&format!("# reps: {}\n", self.reps));
        out.push_str(&format!("# grid_points: {}\n", self.grid_points));
        out.push_str(&format!("# seed: {}\n", self.seed));
        out.push_str(&format!("# var_floor: {:e}\n", self.var_floor));
        if let Some(d) = &self.panel_digest {
            out.push_str(&format!("# panel_digest: {d}\n"));
        }
        out.push_str("ticker");
        for t in &self.tickers {
            out.push(',');
            out.push_str(t);
        }
        out.push('\n');
        for (i, t) in self.tickers.iter().enumerate() {
            out.push_str(t);
            for k in 0..self.n() {
                out.push_str(&format!(",{:.12}", self.get(i, k)));
            }
            out.push('\n');
        }
        let mut f = std::fs::File::create(path)?;
        f.write_all(out.as_bytes())?;
        Ok(())
    }

    pub fn load_csv(path: &Path) -> Result<SdMatrix> {
        let text = std::fs::read_to_string(path)?;
        let mut meta: BTreeMap<String, String> = BTreeMap::new();
        let mut body = String::new();
        for line in text.lines() {
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((key, value)) = rest.split_once(':') {
                    meta.insert(key.trim().to_string(), value.trim().to_string());
                }
            } else if !line.trim().is_empty() {
                body.push_str(line);
                body.push('\n');
            }
        }

        let need = |key: &str| -> Result<&String> {
            meta.get(key)
                .ok_or_else(|| SdError::MatrixFormat(format!("missing `# {key}:` metadata line")))
        };
        let order = Order::from_u8(
            need("order")?
                .parse()
                .map_err(|e| SdError::MatrixFormat(format!("order: {e}")))?,
        )?;
        let direction = Direction::parse(need("direction")?)?;
        let reps: usize =
            need("reps")?.parse().map_err(|e| SdError::MatrixFormat(format!("reps: {e}")))?;
        let grid_points: usize = need("grid_points")?
            .parse()
            .map_err(|e| SdError::MatrixFormat(format!("grid_points: {e}")))?;
        let seed: u64 =
            need("seed")?.parse().map_err(|e| SdError::MatrixFormat(format!("seed: {e}")))?;
        let var_floor: f64 = need("var_floor")?
            .parse()
            .map_err(|e| SdError::MatrixFormat(format!("var_floor: {e}")))?;
        let panel_digest = meta.get("panel_digest").cloned();

        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(body.as_bytes());
        let tickers: Vec<String> = {
            let headers = rdr.headers().map_err(|e| SdError::MatrixFormat(e.to_string()))?;
            if headers.is_empty() || &headers[0] != "ticker" {
                return Err(SdError::MatrixFormat("first column must be `ticker`".into()));
            }
            headers.iter().skip(1).map(|s| s.to_string()).collect()
        };
        let n = tickers.len();
        let mut values = vec![0.0; n * n];
        let mut row_count = 0usize;
        let mut record = csv::StringRecord::new();
        while rdr.read_record(&mut record).map_err(|e| SdError::MatrixFormat(e.to_string()))? {
            if row_count >= n {
                return Err(SdError::MatrixFormat(format!("more than {n} data rows")));
            }
            if record.len() != n + 1 {
                return Err(SdError::MatrixFormat(format!(
                    "row {} has {} fields, expected {}",
                    row_count + 1,
                    record.len(),
                    n + 1
                )));
            }
            if &record[0] != tickers[row_count].as_str() {
                return Err(SdError::MatrixFormat(format!(
                    "row label `{}` does not match header ticker `{}`",
                    &record[0],
                    tickers[row_count]
                )));
            }
            for k in 0..n {
                let field = &record[k + 1];
                let v: f64 = field
                    .parse()
                    .map_err(|e| SdError::MatrixFormat(format!("value `{field}`: {e}")))?;
                values[row_count * n + k] = v;
            }
            row_count += 1;
        }
        if row_count != n {
            return Err(SdError::MatrixFormat(format!("{row_count} data rows for {n} tickers")));
        }

        let mut m = SdMatrix {
            tickers,
            values,
            order,
            direction,
            reps,
            grid_points,
            seed,
            var_floor,
            panel_digest,
        };
        m.validate()?;
        // Canonicalize the lower triangle so later lookups are exact mirrors
        // even when the file carried sub-tolerance asymmetry.
        let nn = m.n();
        for i in 0..nn {
            for k in (i + 1)..nn {
                m.values[k * nn + i] = m.values[i * nn + k];
            }
        }
        Ok(m)
    }
}

/// Run the pairwise test for every unordered ticker pair of the panel.
pub fn build_matrix(panel: &ReturnPanel, cfg: &BootstrapConfig) -> Result<SdMatrix> {
    cfg.validate()?;
    let n = panel.n_assets();
    if n < 2 {
        return Err(SdError::PanelTooSmall("need at least two assets for a matrix".into()));
    }
    let samples: Vec<Sample> = (0..n).map(|a| panel.sample(a)).collect::<Result<_>>()?;

    let pairs: Vec<(usize, usize)> =
        (0..n).flat_map(|u| ((u + 1)..n).map(move |v| (u, v))).collect();
    let computed: Vec<((usize, usize), f64)> = pairs
        .into_par_iter()
        .map(|(u, v)| {
            let pair_cfg =
                cfg.with_seed(seed::derive(cfg.seed, &[seed::TAG_MATRIX, u as u64, v as u64]));
            let res = pair_test(&samples[u], &samples[v], &pair_cfg)?;
            Ok(((u, v), res.coefficient))
        })
        .collect::<Result<_>>()?;

    let mut values = vec![0.0; n * n];
    for ((u, v), coef) in computed {
        values[u * n + v] = coef;
        values[v * n + u] = coef;
    }

    let m = SdMatrix {
        tickers: panel.tickers.clone(),
        values,
        order: cfg.order,
        direction: cfg.direction,
        reps: cfg.reps,
        grid_points: cfg.grid_points,
        seed: cfg.seed,
        var_floor: cfg.var_floor,
        panel_digest: Some(panel.digest()),
    };
    m.validate()?;
    Ok(m)
}
