//! C ABI over the core clustering flow: load a return panel, run pair
//! dominance tests, build the coefficient matrix, cluster, and score.
//!
//! Conventions, mirrored in the generated `include/sdclust.h`:
//! - Objects cross the boundary as opaque handles freed by their `_free`
//!   function. Handles are immutable after creation, so sharing one across
//!   threads for reads is safe; freeing must happen exactly once.
//! - Every fallible call returns an `int32_t` status: 0 ok, 1 misuse (null
//!   pointer, bad UTF-8, caught panic), 2 invalid configuration, 3 data
//!   error, 4 numerical failure. The codes above 1 match the CLI exit codes.
//! - After a nonzero status, `sdc_last_error_message` returns a
//!   thread-local, NUL-terminated description that stays valid until the
//!   next failing call on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use sdclust::bootstrap::{pair_test, BootstrapConfig};
use sdclust::clustering::Clustering;
use sdclust::hierarchical::sd_hierarchical;
use sdclust::kmeans::{sd_kmeans, KmeansOptions};
use sdclust::market_data::{load_prices, log_returns, to_weekly, ReturnPanel};
use sdclust::matrix::{build_matrix, SdMatrix as CoreMatrix};
use sdclust::sdstat::{Direction, Order};
use sdclust::validity::sd_sc;
use sdclust::SdError;

pub const SDC_OK: i32 = 0;
pub const SDC_MISUSE: i32 = 1;
pub const SDC_CONFIG: i32 = 2;
pub const SDC_DATA: i32 = 3;
pub const SDC_NUMERICAL: i32 = 4;

/// Opaque handle to a balanced weekly return panel.
pub struct SdcPanel {
    inner: ReturnPanel,
}

/// Opaque handle to a pairwise dominance-coefficient matrix.
pub struct SdcMatrix {
    inner: CoreMatrix,
}

/// Opaque handle to a partition of the panel's assets.
pub struct SdcClustering {
    inner: Clustering,
}

/// Pair-test settings, shared by every test-driven call.
#[repr(C)]
#[derive(Clone, Copy)]
pub struct SdcTestConfig {
    /// Dominance order: 1, 2 or 3.
    pub order: u8,
    /// Nonzero tests ascending (risk-averse), zero descending.
    pub ascending: u8,
    /// Bootstrap replications, at least 1.
    pub reps: u64,
    /// Evaluation grid size, at least 2.
    pub grid_points: u64,
    /// Root seed; identical settings reproduce results bit for bit.
    pub seed: u64,
    /// Pooled-variance floor; pass 0 for the default 1e-12.
    pub var_floor: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let sanitized = msg.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn code_of(err: &SdError) -> i32 {
    err.exit_code()
}

/// Runs `body`, catching panics and recording any error message.
fn guarded<T>(out: *mut T, body: impl FnOnce() -> Result<T, (i32, String)>) -> i32 {
    if out.is_null() {
        set_error("output pointer is null");
        return SDC_MISUSE;
    }
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(value)) => {
            unsafe { out.write(value) };
            SDC_OK
        }
        Ok(Err((code, msg))) => {
            set_error(&msg);
            code
        }
        Err(_) => {
            set_error("internal panic");
            SDC_MISUSE
        }
    }
}

fn sd_err(e: SdError) -> (i32, String) {
    (code_of(&e), e.to_string())
}

fn misuse(msg: &str) -> (i32, String) {
    (SDC_MISUSE, msg.to_string())
}

unsafe fn path_arg(ptr: *const c_char) -> Result<PathBuf, (i32, String)> {
    if ptr.is_null() {
        return Err(misuse("path is null"));
    }
    let s = CStr::from_ptr(ptr).to_str().map_err(|_| misuse("path is not valid UTF-8"))?;
    Ok(PathBuf::from(s))
}

unsafe fn panel_arg<'a>(ptr: *const SdcPanel) -> Result<&'a ReturnPanel, (i32, String)> {
    ptr.as_ref().map(|p| &p.inner).ok_or_else(|| misuse("panel handle is null"))
}

unsafe fn matrix_arg<'a>(ptr: *const SdcMatrix) -> Result<&'a CoreMatrix, (i32, String)> {
    ptr.as_ref().map(|m| &m.inner).ok_or_else(|| misuse("matrix handle is null"))
}

unsafe fn clustering_arg<'a>(
    ptr: *const SdcClustering,
) -> Result<&'a Clustering, (i32, String)> {
    ptr.as_ref().map(|c| &c.inner).ok_or_else(|| misuse("clustering handle is null"))
}

unsafe fn test_config(ptr: *const SdcTestConfig) -> Result<BootstrapConfig, (i32, String)> {
    let c = ptr.as_ref().ok_or_else(|| misuse("test config is null"))?;
    let cfg = BootstrapConfig {
        order: Order::from_u8(c.order).map_err(sd_err)?,
        direction: if c.ascending != 0 { Direction::Ascending } else { Direction::Descending },
        reps: c.reps as usize,
        grid_points: c.grid_points as usize,
        seed: c.seed,
        var_floor: if c.var_floor == 0.0 { 1e-12 } else { c.var_floor },
        keep_boot_stats: false,
    };
    cfg.validate().map_err(sd_err)?;
    Ok(cfg)
}

/// Message of the most recent failure on this thread; empty until one fails.
#[no_mangle]
pub extern "C" fn sdc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Loads a balanced return panel from a `period,<tickers...>` CSV.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sdc_panel_load_csv(
    path: *const c_char,
    out: *mut *mut SdcPanel,
) -> i32 {
    guarded(out, || {
        let panel = ReturnPanel::load_csv(&path_arg(path)?).map_err(sd_err)?;
        Ok(Box::into_raw(Box::new(SdcPanel { inner: panel })))
    })
}

/// Loads raw `date,ticker,close` prices, aggregates to weekly, and computes
/// log returns, dropping assets below `min_coverage` (0, 1].
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sdc_panel_from_prices(
    path: *const c_char,
    min_coverage: f64,
    out: *mut *mut SdcPanel,
) -> i32 {
    guarded(out, || {
        let raw = load_prices(&path_arg(path)?).map_err(sd_err)?;
        let weekly = to_weekly(&raw).map_err(sd_err)?;
        let (panel, _report) = log_returns(&weekly, min_coverage).map_err(sd_err)?;
        Ok(Box::into_raw(Box::new(SdcPanel { inner: panel })))
    })
}

/// # Safety
/// `panel` must come from a `sdc_panel_*` constructor and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sdc_panel_free(panel: *mut SdcPanel) {
    if !panel.is_null() {
        drop(Box::from_raw(panel));
    }
}

/// # Safety
/// `panel` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn sdc_panel_n_assets(panel: *const SdcPanel, out: *mut u64) -> i32 {
    guarded(out, || Ok(panel_arg(panel)?.n_assets() as u64))
}

/// # Safety
/// `panel` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn sdc_panel_n_periods(panel: *const SdcPanel, out: *mut u64) -> i32 {
    guarded(out, || Ok(panel_arg(panel)?.n_periods() as u64))
}

/// Copies the NUL-terminated ticker of asset `index` into `buf`. Fails with
/// code 2 when `cap` is too small; `buf` is untouched on failure.
///
/// # Safety
/// `buf` must point to at least `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn sdc_panel_ticker(
    panel: *const SdcPanel,
    index: u64,
    buf: *mut c_char,
    cap: u64,
) -> i32 {
    let mut written: u8 = 0;
    guarded(&mut written, || {
        let p = panel_arg(panel)?;
        if buf.is_null() {
            return Err(misuse("ticker buffer is null"));
        }
        let ticker = p
            .tickers
            .get(index as usize)
            .ok_or_else(|| (SDC_CONFIG, format!("asset index {index} out of range")))?;
        let bytes = ticker.as_bytes();
        if (bytes.len() as u64) + 1 > cap {
            return Err((
                SDC_CONFIG,
                format!("buffer of {cap} bytes cannot hold {} + NUL", bytes.len()),
            ));
        }
        std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast(), bytes.len());
        buf.add(bytes.len()).write(0);
        Ok(1)
    })
}

/// Two-sided dominance test between assets `i` and `j`; writes the
/// coefficient (1 - bootstrap p-value) to `out`.
///
/// # Safety
/// All pointers must be valid; `cfg` must point to a filled config.
#[no_mangle]
pub unsafe extern "C" fn sdc_pair_coefficient(
    panel: *const SdcPanel,
    i: u64,
    j: u64,
    cfg: *const SdcTestConfig,
    out: *mut f64,
) -> i32 {
    guarded(out, || {
        let p = panel_arg(panel)?;
        let cfg = test_config(cfg)?;
        let f = p.sample(i as usize).map_err(sd_err)?;
        let g = p.sample(j as usize).map_err(sd_err)?;
        let result = pair_test(&f, &g, &cfg).map_err(sd_err)?;
        Ok(result.coefficient)
    })
}

/// Builds the full pairwise coefficient matrix.
///
/// # Safety
/// All pointers must be valid; `cfg` must point to a filled config.
#[no_mangle]
pub unsafe extern "C" fn sdc_matrix_build(
    panel: *const SdcPanel,
    cfg: *const SdcTestConfig,
    out: *mut *mut SdcMatrix,
) -> i32 {
    guarded(out, || {
        let p = panel_arg(panel)?;
        let cfg = test_config(cfg)?;
        let m = build_matrix(p, &cfg).map_err(sd_err)?;
        Ok(Box::into_raw(Box::new(SdcMatrix { inner: m })))
    })
}

/// Reads a matrix from the CSV format written by `sdc_matrix_save_csv`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sdc_matrix_load_csv(
    path: *const c_char,
    out: *mut *mut SdcMatrix,
) -> i32 {
    guarded(out, || {
        let m = CoreMatrix::load_csv(&path_arg(path)?).map_err(sd_err)?;
        Ok(Box::into_raw(Box::new(SdcMatrix { inner: m })))
    })
}

/// # Safety
/// `matrix` and `path` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn sdc_matrix_save_csv(
    matrix: *const SdcMatrix,
    path: *const c_char,
) -> i32 {
    let mut unit: u8 = 0;
    guarded(&mut unit, || {
        matrix_arg(matrix)?.save_csv(&path_arg(path)?).map_err(sd_err)?;
        Ok(1)
    })
}

/// # Safety
/// `matrix` must come from a matrix constructor and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sdc_matrix_free(matrix: *mut SdcMatrix) {
    if !matrix.is_null() {
        drop(Box::from_raw(matrix));
    }
}

/// # Safety
/// `matrix` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn sdc_matrix_n(matrix: *const SdcMatrix, out: *mut u64) -> i32 {
    guarded(out, || Ok(matrix_arg(matrix)?.n() as u64))
}

/// Coefficient between assets `i` and `k` in matrix order.
///
/// # Safety
/// `matrix` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn sdc_matrix_get(
    matrix: *const SdcMatrix,
    i: u64,
    k: u64,
    out: *mut f64,
) -> i32 {
    guarded(out, || {
        let m = matrix_arg(matrix)?;
        let n = m.n() as u64;
        if i >= n || k >= n {
            return Err((SDC_CONFIG, format!("index ({i}, {k}) out of range for n = {n}")));
        }
        Ok(m.get(i as usize, k as usize))
    })
}

/// K-means over dominance distances. `iter_reps` is the cheaper replication
/// count used inside iterations; final distances use `cfg->reps`.
///
/// # Safety
/// All pointers must be valid; `cfg` must point to a filled config.
#[no_mangle]
pub unsafe extern "C" fn sdc_cluster_kmeans(
    panel: *const SdcPanel,
    k: u64,
    cfg: *const SdcTestConfig,
    iter_reps: u64,
    max_iter: u64,
    out: *mut *mut SdcClustering,
) -> i32 {
    guarded(out, || {
        let p = panel_arg(panel)?;
        let cfg = test_config(cfg)?;
        let opts = KmeansOptions { max_iter: max_iter as usize, iter_reps: iter_reps as usize };
        if opts.max_iter == 0 || opts.iter_reps == 0 {
            return Err((SDC_CONFIG, "iter_reps and max_iter must be at least 1".into()));
        }
        let c = sd_kmeans(p, k as usize, &cfg, &opts, cfg.seed).map_err(sd_err)?;
        Ok(Box::into_raw(Box::new(SdcClustering { inner: c })))
    })
}

/// Average-linkage agglomerative clustering cut at `k`.
///
/// # Safety
/// `matrix` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn sdc_cluster_hierarchical(
    matrix: *const SdcMatrix,
    k: u64,
    out: *mut *mut SdcClustering,
) -> i32 {
    guarded(out, || {
        let m = matrix_arg(matrix)?;
        let (c, _dendrogram) = sd_hierarchical(m, k as usize).map_err(sd_err)?;
        Ok(Box::into_raw(Box::new(SdcClustering { inner: c })))
    })
}

/// # Safety
/// `clustering` must come from a cluster constructor and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sdc_clustering_free(clustering: *mut SdcClustering) {
    if !clustering.is_null() {
        drop(Box::from_raw(clustering));
    }
}

/// # Safety
/// `clustering` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn sdc_clustering_k(
    clustering: *const SdcClustering,
    out: *mut u64,
) -> i32 {
    guarded(out, || Ok(clustering_arg(clustering)?.k as u64))
}

/// Cluster label of `ticker`, or code 2 when the ticker is not assigned.
///
/// # Safety
/// All pointers must be valid; `ticker` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn sdc_clustering_label(
    clustering: *const SdcClustering,
    ticker: *const c_char,
    out: *mut u64,
) -> i32 {
    guarded(out, || {
        let c = clustering_arg(clustering)?;
        if ticker.is_null() {
            return Err(misuse("ticker is null"));
        }
        let name = CStr::from_ptr(ticker)
            .to_str()
            .map_err(|_| misuse("ticker is not valid UTF-8"))?;
        c.assignments
            .get(name)
            .map(|&label| label as u64)
            .ok_or_else(|| (SDC_CONFIG, format!("ticker {name} is not in the clustering")))
    })
}

/// Mean silhouette of the partition over the matrix distances.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sdc_silhouette(
    matrix: *const SdcMatrix,
    clustering: *const SdcClustering,
    out: *mut f64,
) -> i32 {
    guarded(out, || {
        let m = matrix_arg(matrix)?;
        let c = clustering_arg(clustering)?;
        let (score, _per_point) = sd_sc(m, c).map_err(sd_err)?;
        Ok(score)
    })
}
