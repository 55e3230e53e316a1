// Each example exposes `run_example`; these tests keep them compiling and
// running on small inputs.

#[path = "../examples/gpu_occupancy.rs"]
mod gpu_occupancy;
#[path = "../examples/memory_traffic.rs"]
mod memory_traffic;
#[path = "../examples/custom_device.rs"]
mod custom_device;
#[path = "../examples/oracle_equivalence.rs"]
mod oracle_equivalence;
#[path = "../examples/tiled_vs_naive.rs"]
mod tiled_vs_naive;
#[path = "../examples/parallel_speedup.rs"]
mod parallel_speedup;
#[path = "../examples/sweep_to_csv.rs"]
mod sweep_to_csv;
#[path = "../examples/render_charts.rs"]
mod render_charts;

#[test]
fn model_examples_run() {
    gpu_occupancy::run_example();
    memory_traffic::run_example();
    custom_device::run_example(None).unwrap();
}

#[test]
fn kernel_examples_run() {
    oracle_equivalence::run_example().unwrap();
    tiled_vs_naive::run_example(96, 32).unwrap();
    parallel_speedup::run_example(96).unwrap();
}

#[test]
fn reporting_examples_run() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("results.csv");
    sweep_to_csv::run_example(&csv).unwrap();
    let records = tilemm::report::read_csv(&csv).unwrap();
    assert_eq!(records.len(), 3 * 2 * 2 * 4 * 2);
    let charts = dir.path().join("charts");
    render_charts::run_example(&records, &charts).unwrap();
    let svgs = std::fs::read_dir(&charts).unwrap().count();
    assert!(svgs >= 8, "{svgs}");
}
