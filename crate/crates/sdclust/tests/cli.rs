//! End-to-end command behavior through the installed binary: exit codes,
//! artifact formats, and the pipeline-equals-manual-chain guarantee.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sdclust"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "command {:?} failed\nstdout: {}\nstderr: {}",
        args,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn exit_code(args: &[&str]) -> i32 {
    run(args).status.code().expect("exit code")
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("reading {}: {e}", path.display()))
}

fn assert_same(a: &Path, b: &Path) {
    assert!(
        read(a) == read(b),
        "{} and {} differ",
        a.display(),
        b.display()
    );
}

fn demo_prices(dir: &Path) -> PathBuf {
    let path = dir.join("prices.csv");
    run_ok(&["demo-data", "--seed", "7", "--out", path.to_str().unwrap()]);
    path
}

/// Shared speed settings: small bootstrap, fixed K, few draws.
fn fast(dir: &Path, extra: &[&str]) -> Vec<String> {
    let mut v: Vec<String> = [
        "--out-dir",
        dir.to_str().unwrap(),
        "--reps",
        "120",
        "--grid-points",
        "60",
        "--iter-reps",
        "60",
        "--draws",
        "10",
        "--seed",
        "11",
        "--k",
        "3",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    v.extend(extra.iter().map(|s| s.to_string()));
    v
}

fn run_fast(dir: &Path, extra: &[&str], cmd: &[&str]) -> Output {
    let mut args = fast(dir, extra);
    args.extend(cmd.iter().map(|s| s.to_string()));
    let strs: Vec<&str> = args.iter().map(String::as_str).collect();
    run_ok(&strs)
}

#[test]
fn pipeline_matches_manual_command_chain() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let prices = demo_prices(root);

    // One shared ingest so every chain consumes identical returns.
    let ing = root.join("ing");
    run_fast(&ing, &["--prices", prices.to_str().unwrap()], &["ingest"]);
    let returns = ing.join("returns.csv");
    let ret = ["--returns", returns.to_str().unwrap()];

    let pipe = root.join("pipe");
    run_fast(&pipe, &ret, &["pipeline"]);

    // Manual stage 1 at order 1.
    let manual = root.join("manual");
    let m1 = ["--returns", returns.to_str().unwrap(), "--order", "1"];
    run_fast(&manual, &m1, &["matrix"]);
    run_fast(&manual, &m1, &["cluster"]);
    run_fast(&manual, &m1, &["rank"]);
    run_fast(&manual, &m1, &["refine"]);
    run_fast(
        &manual,
        &m1,
        &[
            "heatmap",
            "--clustering",
            manual.join("clustering.json").to_str().unwrap(),
        ],
    );
    assert_same(&pipe.join("s1_matrix.csv"), &manual.join("matrix.csv"));
    assert_same(&pipe.join("s1_clustering.json"), &manual.join("clustering.json"));
    assert_same(&pipe.join("s1_ranking.json"), &manual.join("ranking.json"));
    assert_same(&pipe.join("s1_pool.json"), &manual.join("pool.json"));
    assert_same(&pipe.join("s1_heatmap.ppm"), &manual.join("heatmap.ppm"));
    assert_same(&pipe.join("s1_heatmap_matrix.csv"), &manual.join("heatmap_matrix.csv"));

    // Manual stage 2 at order 2 on the refined panel the pipeline wrote.
    let manual2 = root.join("manual2");
    let s2_returns = pipe.join("s2_returns.csv");
    let m2 = ["--returns", s2_returns.to_str().unwrap(), "--order", "2"];
    run_fast(&manual2, &m2, &["matrix"]);
    run_fast(&manual2, &m2, &["cluster"]);
    run_fast(&manual2, &m2, &["rank"]);
    assert_same(&pipe.join("s2_matrix.csv"), &manual2.join("matrix.csv"));
    assert_same(&pipe.join("s2_clustering.json"), &manual2.join("clustering.json"));
    assert_same(&pipe.join("s2_ranking.json"), &manual2.join("ranking.json"));

    // Manual portfolio comparison using the pipeline's pools.
    let manifest: serde_json::Value =
        serde_json::from_slice(&read(&pipe.join("manifest.json"))).unwrap();
    assert_eq!(manifest["draws"]["status"], "ran");
    let m_used = manifest["draws"]["portfolio_size"].as_u64().unwrap().to_string();

    let pool_a: serde_json::Value =
        serde_json::from_slice(&read(&pipe.join("s2_pool.json"))).unwrap();
    let chosen: Vec<String> = pool_a["tickers"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    let header = String::from_utf8(read(&s2_returns)).unwrap();
    let rest: Vec<String> = header
        .lines()
        .next()
        .unwrap()
        .split(',')
        .skip(1)
        .map(str::to_string)
        .filter(|t| !chosen.contains(t))
        .collect();
    assert!(!rest.is_empty());
    let pool_b_path = root.join("pool_b.json");
    std::fs::write(
        &pool_b_path,
        serde_json::to_string(&serde_json::json!({ "tickers": rest })).unwrap(),
    )
    .unwrap();

    let manual3 = root.join("manual3");
    run_fast(
        &manual3,
        &m2,
        &[
            "--portfolio-size",
            &m_used,
            "portfolio",
            "--pool-a",
            pipe.join("s2_pool.json").to_str().unwrap(),
            "--pool-b",
            pool_b_path.to_str().unwrap(),
            "--clustering",
            pipe.join("s2_clustering.json").to_str().unwrap(),
        ],
    );
    assert_same(&pipe.join("draws.json"), &manual3.join("draws.json"));
    assert_same(&pipe.join("scatter.csv"), &manual3.join("scatter.csv"));
    assert_same(&pipe.join("alpha_beta.csv"), &manual3.join("alpha_beta.csv"));
}

#[test]
fn select_k_reports_candidates() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let prices = demo_prices(root);
    let dir = root.join("run");
    run_fast(&dir, &["--prices", prices.to_str().unwrap()], &["ingest"]);
    run_fast(&dir, &[], &["matrix"]);
    // Fixed K comes from fast(); override the range scan explicitly.
    let mut args = fast(&dir, &["--k-min", "2", "--k-max", "4"]);
    args.retain(|a| a != "--k" && a != "3");
    args.push("select-k".into());
    let strs: Vec<&str> = args.iter().map(String::as_str).collect();
    run_ok(&strs);

    let selected: serde_json::Value =
        serde_json::from_slice(&read(&dir.join("selected_k.json"))).unwrap();
    let best = selected["best_k"].as_u64().unwrap();
    assert!((2..=4).contains(&best));
    let validity = String::from_utf8(read(&dir.join("validity.csv"))).unwrap();
    assert!(validity.starts_with("K,sd_sc,sd_dbi"));
    assert_eq!(validity.lines().count(), 1 + 3);
}

#[test]
fn heatmap_renders_the_two_by_two_example() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let matrix = dir.join("tiny.csv");
    std::fs::write(
        &matrix,
        "# sdclust coefficient matrix v1\n\
         # order: 1\n\
         # direction: asc\n\
         # reps: 100\n\
         # grid_points: 50\n\
         # seed: 1\n\
         # var_floor: 1e-12\n\
         ticker,AAA,BBB\n\
         AAA,0.000000000000,1.000000000000\n\
         BBB,1.000000000000,0.000000000000\n",
    )
    .unwrap();
    run_ok(&[
        "--out-dir",
        dir.to_str().unwrap(),
        "heatmap",
        "--matrix",
        matrix.to_str().unwrap(),
    ]);
    let ppm = read(&dir.join("heatmap.ppm"));
    let mut want = b"P6\n2 2\n255\n".to_vec();
    want.extend_from_slice(&[255, 255, 255, 0, 0, 0, 0, 0, 0, 255, 255, 255]);
    assert_eq!(ppm, want, "diagonal must be white, off-diagonal black");
    assert!(dir.join("heatmap_matrix.csv").exists());
}

#[test]
fn config_errors_exit_with_code_2() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().to_str().unwrap().to_string();

    // Zero bootstrap replications is rejected before any file is touched.
    assert_eq!(exit_code(&["--out-dir", &dir, "--reps", "0", "matrix"]), 2);
    // No return panel configured and none ingested.
    assert_eq!(exit_code(&["--out-dir", &dir, "matrix"]), 2);
    // Unknown key in the config file.
    let conf = tmp.path().join("bad.conf");
    std::fs::write(&conf, "repz = 5\n").unwrap();
    assert_eq!(
        exit_code(&["--config", conf.to_str().unwrap(), "--out-dir", &dir, "matrix"]),
        2
    );
    // Ingest without a prices path.
    assert_eq!(exit_code(&["--out-dir", &dir, "ingest"]), 2);
}

#[test]
fn data_errors_exit_with_code_3() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().to_str().unwrap().to_string();

    assert_eq!(
        exit_code(&["--out-dir", &dir, "--prices", "/no/such/file.csv", "ingest"]),
        3
    );
    let bad = tmp.path().join("bad_prices.csv");
    std::fs::write(&bad, "date,ticker,close\n2024-01-02,AAA,-3.5\n").unwrap();
    assert_eq!(
        exit_code(&["--out-dir", &dir, "--prices", bad.to_str().unwrap(), "ingest"]),
        3
    );
}

#[test]
fn ingest_filters_incomplete_assets_and_reports_them() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("run");
    let prices = tmp.path().join("prices.csv");
    // THIN trades only the first two weeks of twelve.
    let mut text = String::from("date,ticker,close\n");
    for w in 0..12 {
        let date = chrono_date(w);
        text.push_str(&format!("{date},FULL,{}\n", 100.0 + w as f64));
        text.push_str(&format!("{date},ALSO,{}\n", 50.0 + w as f64));
        if w < 2 {
            text.push_str(&format!("{date},THIN,10.0\n"));
        }
    }
    std::fs::write(&prices, text).unwrap();
    run_ok(&[
        "--out-dir",
        dir.to_str().unwrap(),
        "--prices",
        prices.to_str().unwrap(),
        "ingest",
    ]);
    let report: serde_json::Value =
        serde_json::from_slice(&read(&dir.join("ingest_report.json"))).unwrap();
    let dropped = report["dropped_tickers"].as_array().unwrap();
    assert_eq!(dropped.len(), 1);
    assert_eq!(dropped[0][0], "THIN");
    let returns = String::from_utf8(read(&dir.join("returns.csv"))).unwrap();
    assert_eq!(returns.lines().next().unwrap(), "period,ALSO,FULL");
}

/// Mondays of consecutive weeks starting 2021-01-04, as YYYY-MM-DD.
fn chrono_date(week: usize) -> String {
    let days = 3 + 7 * week as u32; // offset from 2021-01-01
    let (mut m, mut d) = (1u32, 1 + days);
    for len in [31u32, 28, 31, 30, 31, 30] {
        if d > len {
            d -= len;
            m += 1;
        } else {
            break;
        }
    }
    format!("2021-{m:02}-{d:02}")
}
