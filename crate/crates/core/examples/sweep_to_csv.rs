//! Runs a small sweep over every backend, writes the records as CSV and
//! prints the markdown GFLOPS summary.
//!
//! ```bash
//! cargo run --release -p tilemm --example sweep_to_csv -- results.csv
//! ```

use std::env;
use std::error::Error;
use std::path::Path;

use tilemm::report::{summary_table, write_csv};
use tilemm::{sweep, Backend, BenchmarkConfig, Precision};

pub fn run_example(out: &Path) -> Result<(), Box<dyn Error>> {
    let config = BenchmarkConfig {
        sizes: vec![32, 64, 128],
        tiles: vec![16, 32],
        precisions: vec![Precision::Single, Precision::Double],
        reps_list: vec![1, 10],
        backends: Backend::ALL.to_vec(),
        workers: tilemm::bench::resolve_workers(None),
        seed: 42,
        exact_fit: true,
        warmup_runs: 1,
    };
    let report = sweep(&config)?;
    for failure in &report.failures {
        eprintln!("failed: {:?}: {}", failure.case, failure.error);
    }
    write_csv(&report.records, out)?;
    print!("{}", summary_table(&report.records)?);
    println!("\n{} records written to {}", report.records.len(), out.display());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    let out = env::args().nth(1).unwrap_or_else(|| "results.csv".to_string());
    run_example(Path::new(&out))
}
