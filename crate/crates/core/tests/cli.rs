use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tilemm::cli::{run_verify, EXIT_FAILURE, EXIT_OK, EXIT_USAGE};
use tilemm::report::{self, ChartSpec, SeriesKey};
use tilemm::verify::{run_backend, VerifyPlan};
use tilemm::{Backend, Precision};

fn tilemm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tilemm"))
        .args(args)
        .env_remove(tilemm::bench::WORKERS_ENV)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn bench_cardinality() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("results.csv");
    let o = tilemm(&[
        "bench", "--sizes", "32,64", "--tiles", "32", "--backends", "naive-seq,tiled-seq", "--reps", "1",
        "--precisions", "single", "--out", path(&csv),
    ]);
    assert_eq!(o.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&o.stderr));
    let records = report::read_csv(&csv).unwrap();
    assert_eq!(records.len(), 4);
    assert!(stdout(&o).contains("| backend / tile | 32 | 64 |"));
}

#[test]
fn bench_exact_fit_rejects_before_work() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("results.csv");
    let o = tilemm(&["bench", "--exact-fit", "--sizes", "100", "--tiles", "32", "--out", path(&csv)]);
    assert_eq!(o.status.code(), Some(EXIT_USAGE));
    assert!(!csv.exists());
}

#[test]
fn worker_env_override() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("results.csv");
    let base = [
        "bench", "--sizes", "64", "--tiles", "16", "--backends", "tiled-par", "--reps", "1", "--precisions",
        "double", "--out", path(&csv),
    ];
    let o = Command::new(env!("CARGO_BIN_EXE_tilemm"))
        .args(base)
        .env(tilemm::bench::WORKERS_ENV, "3")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(EXIT_OK));
    assert_eq!(report::read_csv(&csv).unwrap()[0].workers, 3);

    // The flag beats the environment.
    let o = Command::new(env!("CARGO_BIN_EXE_tilemm"))
        .args(base)
        .args(["--workers", "2"])
        .env(tilemm::bench::WORKERS_ENV, "3")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(EXIT_OK));
    assert_eq!(report::read_csv(&csv).unwrap()[0].workers, 2);
}

#[test]
fn verify_default_and_boundary() {
    let o = tilemm(&["verify"]);
    assert_eq!(o.status.code(), Some(EXIT_OK));
    assert!(stdout(&o).contains("all 880 cases passed"));
    let o = tilemm(&["verify", "--sizes", "33", "--tiles", "32"]);
    assert_eq!(o.status.code(), Some(EXIT_OK));
}

#[test]
fn verify_catches_corrupted_kernel() {
    let plan = VerifyPlan {
        sizes: vec![8],
        tiles: vec![4],
        workers: vec![2],
        ..VerifyPlan::default()
    };
    let mut out = Vec::new();
    let code = run_verify(
        &plan,
        |case, a, b| {
            let mut c = run_backend(case, a, b)?;
            if case.backend == Backend::TiledPar {
                c.set(5, 6, c.get(5, 6)? * 2.0 + 1.0)?;
            }
            Ok(c)
        },
        &mut out,
    );
    let text = String::from_utf8(out).unwrap();
    assert_eq!(code, EXIT_FAILURE);
    assert!(text.contains("FAIL tiled-par single size=8 tile=4 workers=2: first difference at (5, 6)"), "{text}");
}

#[test]
fn model_reports_anchored_values() {
    let o = tilemm(&["model", "--device", "geforce-940m", "--size", "2048", "--tile", "32", "--precision", "double"]);
    assert_eq!(o.status.code(), Some(EXIT_OK));
    let text = stdout(&o);
    for line in [
        "footprint_bytes=100663296",
        "footprint_mib=96",
        "footprint_fits_global=true",
        "blocks_per_sm=2",
        "warps_per_block=32",
        "shared_bytes_needed=16384",
    ] {
        assert!(text.lines().any(|l| l == line), "missing {line} in\n{text}");
    }
    let o = tilemm(&["model", "--size", "100", "--tile", "20"]);
    assert!(stdout(&o).contains("grid_x=5\ngrid_y=5\n"));
    let o = tilemm(&["model", "--tile", "33"]);
    assert!(stdout(&o).contains("block_threads=1089\n"));
    assert!(stdout(&o).contains("block_valid=false\n"));
}

#[test]
fn model_from_spec_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("dev.txt");
    fs::write(&file, tilemm::DeviceSpec::geforce_940m().to_kv().replace("shared_mem_bytes_per_sm = 50176", "shared_mem_bytes_per_sm = 4096")).unwrap();
    let o = tilemm(&["model", "--device", path(&file), "--tile", "32", "--precision", "double"]);
    assert_eq!(o.status.code(), Some(EXIT_OK));
    assert!(stdout(&o).contains("shared_fits=false\n"));

    fs::write(&file, "sm_count = 3\n").unwrap();
    let o = tilemm(&["model", "--device", path(&file)]);
    assert_eq!(o.status.code(), Some(EXIT_USAGE));
}

#[test]
fn plot_header_only_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("empty.csv");
    report::write_csv(&[], &csv).unwrap();
    let o = tilemm(&["plot", "--kind", "gflops", "--in", path(&csv), "--out-dir", path(&dir.path().join("p"))]);
    assert_eq!(o.status.code(), Some(EXIT_FAILURE));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no records"));
}

#[test]
fn plot_bad_schema() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bad.csv");
    fs::write(&csv, "a,b,c\n").unwrap();
    let o = tilemm(&["plot", "--kind", "time", "--in", path(&csv)]);
    assert_eq!(o.status.code(), Some(EXIT_FAILURE));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1"));
}

#[test]
fn plot_speedup_delegates_to_series() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("r.csv");
    let o = tilemm(&[
        "bench", "--sizes", "32,64,128", "--tiles", "32", "--backends", "tiled-seq,tiled-par", "--reps", "1",
        "--precisions", "single", "--workers", "2", "--out", path(&csv),
    ]);
    assert_eq!(o.status.code(), Some(EXIT_OK));
    let out_dir = dir.path().join("plots");
    let o = tilemm(&[
        "plot", "--kind", "speedup", "--baseline", "tiled-seq", "--target", "tiled-par", "--in", path(&csv),
        "--out-dir", path(&out_dir),
    ]);
    assert_eq!(o.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&o.stderr));
    let written = fs::read_to_string(out_dir.join("speedup_single_reps1.svg")).unwrap();

    let records = report::read_csv(&csv).unwrap();
    let key = SeriesKey { precision: Precision::Single, tile: 32, reps: 1 };
    let series = report::derive_speedup_series(&records, Backend::TiledSeq, Backend::TiledPar, key).unwrap();
    let mut spec = ChartSpec::new(
        "Speedup of tiled-par over tiled-seq, single precision, reps = 1",
        "matrix order",
        "speedup",
    );
    spec.series = vec![series];
    assert_eq!(written, report::render_svg(&spec).unwrap());

    // A baseline with no records leaves every size unpaired.
    let o = tilemm(&[
        "plot", "--kind", "speedup", "--baseline", "naive-seq", "--target", "tiled-par", "--in", path(&csv),
        "--out-dir", path(&out_dir),
    ]);
    assert_eq!(o.status.code(), Some(EXIT_FAILURE));
    assert!(String::from_utf8_lossy(&o.stderr).contains("[32, 64, 128]"));
}

#[test]
fn unknown_flags_rejected() {
    assert_eq!(tilemm(&["bench", "--sizez", "32"]).status.code(), Some(EXIT_USAGE));
    assert_eq!(tilemm(&["nope"]).status.code(), Some(EXIT_USAGE));
    assert_eq!(tilemm(&["plot"]).status.code(), Some(EXIT_USAGE));
}
