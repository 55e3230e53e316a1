//! Turns benchmark records into the three chart styles: GFLOPS against
//! order, time against order, and speedup of one backend over another.
//!
//! ```bash
//! cargo run --release -p tilemm --example render_charts -- results.csv charts/
//! ```
//!
//! Without arguments it benchmarks a tiny sweep first.

use std::env;
use std::error::Error;
use std::fs;
use std::path::Path;

use tilemm::report::{self, ChartSpec, Metric, SeriesKey};
use tilemm::{sweep, Backend, BenchmarkConfig, BenchmarkRecord, Precision};

pub fn run_example(records: &[BenchmarkRecord], out_dir: &Path) -> Result<(), Box<dyn Error>> {
    fs::create_dir_all(out_dir)?;
    for ((precision, reps), group) in report::group_by_precision_reps(records) {
        for metric in [Metric::Gflops, Metric::Time] {
            let mut spec = ChartSpec::new(format!("{precision}, reps = {reps}"), "matrix order", metric.axis_label());
            spec.series = report::metric_series(&group, metric);
            let name = format!("{}_{precision}_{reps}.svg", metric.axis_label().split(' ').next().unwrap_or("chart").to_lowercase());
            report::render_chart(&spec, out_dir.join(&name))?;
            println!("wrote {}", out_dir.join(name).display());
        }
        let key = SeriesKey { precision, tile: group[0].tile, reps };
        if let Ok(series) = report::derive_speedup_series(records, Backend::TiledSeq, Backend::TiledPar, key) {
            let mut spec = ChartSpec::new("tiled-par over tiled-seq", "matrix order", "speedup");
            spec.series = vec![series];
            let path = out_dir.join(format!("speedup_{precision}_{reps}.svg"));
            report::render_chart(&spec, &path)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    let mut args = env::args().skip(1);
    let records = match args.next() {
        Some(csv) => report::read_csv(csv)?,
        None => {
            let config = BenchmarkConfig {
                sizes: vec![32, 64, 128, 256],
                tiles: vec![32],
                precisions: vec![Precision::Single],
                reps_list: vec![1],
                backends: vec![Backend::NaiveSeq, Backend::TiledSeq, Backend::TiledPar],
                ..BenchmarkConfig::default()
            };
            sweep(&config)?.records
        }
    };
    let out_dir = args.next().unwrap_or_else(|| "charts".to_string());
    run_example(&records, Path::new(&out_dir))
}
