//! Acceptance suite. Criteria run sequentially inside one test so the timing
//! checks do not compete with other tests for cores. Each criterion prints
//! one PASS / FAIL / SKIP line; any FAIL fails the test.
//!
//! Run with `cargo test -p tilemm --test acceptance -- --nocapture` to see
//! the report.

use std::fs;
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tilemm::bench::{gflops, run_case, speedup, sweep, BenchmarkConfig, BenchmarkRecord, CaseSpec};
use tilemm::model::{footprint, global_load_model, occupancy, plan_grid, shared_mem_fit, DeviceSpec, GIB, MIB};
use tilemm::report::{read_csv, read_csv_from, write_csv, write_csv_to, CSV_HEADER};
use tilemm::verify::VerifyPlan;
use tilemm::{Backend, Precision};

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Criterion = (&'static str, fn() -> Verdict);

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

/// All four backends, bitwise, on small-int fills across sizes, tiles and
/// worker counts.
fn oracle_equivalence() -> Verdict {
    let plan = VerifyPlan::default();
    let start = Instant::now();
    let mut first = None;
    let mut cases = 0;
    let failures = plan
        .run_backends(|case, outcome| {
            cases += 1;
            if !outcome.passed() && first.is_none() {
                first = Some(format!("{case:?}: {outcome:?}"));
            }
        })
        .expect("operands generate");
    let elapsed = start.elapsed();
    let detail = format!(
        "{cases} cases, {failures} mismatches, {:.2} s (limit 30 s){}",
        elapsed.as_secs_f64(),
        first.map(|f| format!("; first: {f}")).unwrap_or_default()
    );
    check(failures == 0 && cases == 880 && elapsed < Duration::from_secs(30), detail)
}

fn model_arithmetic() -> Verdict {
    let dev = DeviceSpec::geforce_940m();
    let grid = plan_grid(100, 100, 20);
    let occ = occupancy(&dev, 1024);
    let too_big = occupancy(&dev, 2048);
    let fp = footprint(&dev, 2048, 2048, 2048, Precision::Double);
    let smem = shared_mem_fit(&dev, 32, Precision::Single);
    let checks = [
        ("grid 100/20 = 5x5", grid.grid_x == 5 && grid.grid_y == 5),
        ("940M block 1024 -> 2 blocks/SM", occ.blocks_per_sm == 2),
        ("940M block 1024 -> 32 warps", occ.warps_per_block == 32),
        ("block 1024 valid", occ.valid),
        ("block 2048 invalid", !too_big.valid),
        ("footprint 2048^3 f64 = 100663296 B", fp.bytes_total == 100_663_296),
        ("footprint = 96 MiB", fp.bytes_total == 96 * MIB),
        ("fits in 2 GiB", fp.fits_global && dev.global_mem_bytes == 2 * GIB),
        ("shared tile 32 f32 = 8192 B", smem.bytes_needed == 8192),
        ("fits 49 KiB", smem.fits && dev.shared_mem_bytes_per_sm == 49 * 1024),
    ];
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    check(failed.is_empty(), format!("{} exact checks, failed: {failed:?}", checks.len()))
}

fn load_ratio() -> Verdict {
    let mut count = 0;
    let mut bad = Vec::new();
    for tile in [1u64, 2, 3, 4, 5, 8, 16, 20, 32, 64] {
        for mt in [1u64, 2, 3, 7] {
            for nt in [1u64, 2, 5] {
                for wt in [1u64, 3, 4, 9] {
                    let (m, n, w) = (mt * tile, nt * tile, wt * tile);
                    let naive = global_load_model(m, n, w, None);
                    let tiled = global_load_model(m, n, w, Some(tile));
                    count += 1;
                    if !naive.total_loads.is_multiple_of(tiled.total_loads) || naive.total_loads / tiled.total_loads != tile {
                        bad.push((m, n, w, tile));
                    }
                    if tile == 1 && naive != tiled {
                        bad.push((m, n, w, tile));
                    }
                }
            }
        }
    }
    check(bad.is_empty(), format!("{count} divisible shapes, failures: {bad:?}"))
}

fn metric_arithmetic() -> Verdict {
    let cube = gflops(1024, 1024, 1024, 2.147483648).unwrap();
    let same = [1e-6, 0.37, 2.0, 1234.5].iter().all(|&t| speedup(t, t).unwrap() == 1.0);
    let config = BenchmarkConfig {
        sizes: vec![16, 32, 48],
        tiles: vec![8, 16],
        precisions: Precision::ALL.to_vec(),
        reps_list: vec![1, 7, 100],
        backends: Backend::ALL.to_vec(),
        workers: 2,
        seed: 5,
        exact_fit: true,
        warmup_runs: 1,
    };
    let report = sweep(&config).unwrap();
    let avg_ok = report.records.iter().all(|r| {
        let avg = r.total_seconds / r.reps as f64;
        (r.avg_seconds - avg).abs() <= 1e-12 * avg
    });
    let gflops_ok = report.records.iter().all(|r| {
        let g = gflops(r.m, r.n, r.w, r.avg_seconds).unwrap();
        (g - r.gflops).abs() <= 1e-12 * g
    });
    check(
        cube == 1.0 && same && avg_ok && gflops_ok && report.failures.is_empty() && report.records.len() == 144,
        format!(
            "gflops(1024^3, 2.147483648 s) = {cube}; speedup(t,t) = 1: {same}; {} records, avg=total/reps: {avg_ok}, gflops recomputed: {gflops_ok}",
            report.records.len()
        ),
    )
}

fn physical_cores() -> usize {
    num_cpus::get_physical().min(tilemm::bench::hardware_workers())
}

struct PerfRun {
    naive: f64,
    tiled: f64,
    par: f64,
    workers: usize,
}

/// The 2048 single-precision runs shared by both halves of criterion 5.
/// Each run is checked against the reference product by `run_case`.
fn perf_runs() -> &'static PerfRun {
    static RUNS: OnceLock<PerfRun> = OnceLock::new();
    RUNS.get_or_init(|| {
        let case = |backend, workers| CaseSpec {
            backend,
            precision: Precision::Single,
            size: 2048,
            tile: 32,
            reps: 1,
            workers,
            seed: 42,
            warmup: 0,
            exact_fit: true,
        };
        let workers = tilemm::bench::hardware_workers();
        let time = |backend, workers| {
            run_case(&case(backend, workers))
                .unwrap_or_else(|e| panic!("{backend} 2048: {e}"))
                .record
                .avg_seconds
        };
        PerfRun {
            naive: time(Backend::NaiveSeq, 1),
            tiled: time(Backend::TiledSeq, 1),
            par: time(Backend::TiledPar, workers),
            workers,
        }
    })
}

fn tiling_beats_naive() -> Verdict {
    let r = perf_runs();
    check(
        r.tiled <= r.naive,
        format!("2048 f32: naive {:.3} s, tiled {:.3} s (tiled must not be slower)", r.naive, r.tiled),
    )
}

fn parallel_speedup() -> Verdict {
    let r = perf_runs();
    let s = speedup(r.tiled, r.par).unwrap();
    let detail = format!(
        "2048 f32: tiled-seq {:.3} s, tiled-par({}) {:.3} s, speedup {s:.2} (threshold 1.2)",
        r.tiled, r.workers, r.par
    );
    let cores = physical_cores();
    if cores < 2 {
        return Verdict::Skip(format!("{detail}; requires >= 2 physical cores, {cores} available"));
    }
    check(s >= 1.2, detail)
}

fn end_to_end() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("results.csv");
    let csv_s = csv.to_str().unwrap();
    let start = Instant::now();
    let run = |args: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_tilemm"))
            .args(args)
            .output()
            .expect("binary runs")
    };
    let bench = run(&[
        "bench", "--sizes", "32,64,128,256", "--tiles", "16,32", "--reps", "1", "--precisions", "single,double",
        "--out", csv_s,
    ]);
    if bench.status.code() != Some(0) {
        return Verdict::Fail(format!("bench exit {:?}: {}", bench.status.code(), String::from_utf8_lossy(&bench.stderr)));
    }
    let text = fs::read_to_string(&csv).unwrap();
    let header_ok = text.lines().next() == Some(CSV_HEADER.join(",").as_str());
    let records = match read_csv(&csv) {
        Ok(r) => r,
        Err(e) => return Verdict::Fail(format!("csv: {e}")),
    };
    let expected_records = 4 * 2 * 2 * 4;

    let mut deterministic = true;
    let mut svgs = 0;
    let plots: [&[&str]; 2] = [
        &["--kind", "gflops"],
        &["--kind", "speedup", "--baseline", "tiled-seq", "--target", "tiled-par"],
    ];
    for (i, extra) in plots.iter().enumerate() {
        let mut outputs = Vec::new();
        for round in 0..2 {
            let out_dir = dir.path().join(format!("plot{i}_{round}"));
            let mut args = vec!["plot", "--in", csv_s, "--out-dir", out_dir.to_str().unwrap()];
            args.extend_from_slice(extra);
            let o = run(&args);
            if o.status.code() != Some(0) {
                return Verdict::Fail(format!("plot {extra:?} exit {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr)));
            }
            let mut files: Vec<_> = fs::read_dir(&out_dir).unwrap().map(|e| e.unwrap().path()).collect();
            files.sort();
            let contents: Vec<(String, Vec<u8>)> = files
                .iter()
                .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(p).unwrap()))
                .collect();
            outputs.push(contents);
        }
        deterministic &= outputs[0] == outputs[1];
        svgs += outputs[0].len();
        deterministic &= outputs[0].iter().all(|(_, b)| b.starts_with(b"<?xml") && b.ends_with(b"</svg>\n"));
    }
    let elapsed = start.elapsed();
    check(
        header_ok && records.len() == expected_records && deterministic && svgs == 4 && elapsed < Duration::from_secs(60),
        format!(
            "{} records (expected {expected_records}), header ok: {header_ok}, {svgs} SVGs, byte-identical re-render: {deterministic}, {:.1} s (limit 60 s)",
            records.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn csv_round_trip() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC5F);
    let records: Vec<BenchmarkRecord> = (0..1000)
        .map(|_| {
            let backend = Backend::ALL[rng.gen_range(0..4)];
            let precision = Precision::ALL[rng.gen_range(0..2)];
            let dims = (rng.gen_range(1..4096), rng.gen_range(1..4096), rng.gen_range(1..4096));
            let secs = rng.gen::<f64>() * 10f64.powi(rng.gen_range(-9..4)) + f64::MIN_POSITIVE;
            BenchmarkRecord::from_batch(
                backend,
                precision,
                dims,
                rng.gen_range(1..129),
                rng.gen_range(1..2001),
                rng.gen_range(1..65),
                secs,
            )
            .unwrap()
        })
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("round.csv");
    write_csv(&records, &path).unwrap();
    let back = read_csv(&path).unwrap();
    let mut buf = Vec::new();
    write_csv_to(&records, &mut buf).unwrap();
    let in_memory = read_csv_from(&buf[..]).unwrap();
    let same = back == records && in_memory == records;
    let bits = back.iter().zip(&records).all(|(a, b)| {
        a.total_seconds.to_bits() == b.total_seconds.to_bits()
            && a.avg_seconds.to_bits() == b.avg_seconds.to_bits()
            && a.gflops.to_bits() == b.gflops.to_bits()
    });
    check(same && bits, format!("{} records, field-equal: {same}, float bits equal: {bits}", back.len()))
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 8] = [
        ("1 oracle equivalence", oracle_equivalence),
        ("2 model arithmetic", model_arithmetic),
        ("3 load-model ratio", load_ratio),
        ("4 metric arithmetic", metric_arithmetic),
        ("5a tiled vs naive at 2048 (machine-sensitive)", tiling_beats_naive),
        ("5b parallel speedup at 2048 (machine-sensitive)", parallel_speedup),
        ("6 end-to-end bench/plot", end_to_end),
        ("7 CSV round-trip", csv_round_trip),
    ];
    let mut failed = Vec::new();
    for (name, criterion) in criteria {
        match criterion() {
            Verdict::Pass(d) => println!("[PASS] criterion {name}: {d}"),
            Verdict::Skip(d) => println!("[SKIP] criterion {name}: {d}"),
            Verdict::Fail(d) => {
                println!("[FAIL] criterion {name}: {d}");
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
