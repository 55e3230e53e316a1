//! Command-line front end: `bench`, `verify`, `model` and `plot`.
//!
//! Exit codes: 0 on success, 1 on runtime or verification failure, 2 on
//! usage or validation errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench::{self, BenchmarkConfig, WORKERS_ENV};
use crate::kernels::Backend;
use crate::matrix::Precision;
use crate::model::{self, DeviceSpec};
use crate::report::{self, ChartSpec, Metric, ReportError, SeriesKey};
use crate::verify::{self, Outcome, VerifyPlan};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "tilemm", version, about = "Dense matrix multiplication benchmarks and GPU occupancy model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a timed sweep, write CSV and print a GFLOPS summary.
    Bench(BenchArgs),
    /// Check every backend bitwise against the reference product.
    Verify(VerifyArgs),
    /// Print the analytic GPU model for one problem as key=value lines.
    Model(ModelArgs),
    /// Render SVG charts from a results CSV.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Square matrix orders.
    #[arg(long, value_delimiter = ',', default_values_t = bench::DEFAULT_SIZES)]
    sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = bench::DEFAULT_TILES)]
    tiles: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = Precision::ALL)]
    precisions: Vec<Precision>,
    /// Repetition counts; each batch is timed as a whole.
    #[arg(long, value_delimiter = ',', default_values_t = bench::DEFAULT_REPS)]
    reps: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = Backend::ALL)]
    backends: Vec<Backend>,
    /// Worker threads for parallel backends [default: hardware threads].
    #[arg(long, env = WORKERS_ENV)]
    workers: Option<usize>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Refuse sizes that some tile does not divide.
    #[arg(long)]
    exact_fit: bool,
    /// Untimed runs before each timed batch.
    #[arg(long, default_value_t = 1)]
    warmup: usize,
    #[arg(long, default_value = "results.csv")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, value_delimiter = ',', default_values_t = verify::DEFAULT_SIZES)]
    sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = verify::DEFAULT_TILES)]
    tiles: Vec<usize>,
    /// Worker counts tried for every backend.
    #[arg(long, value_delimiter = ',', default_values_t = verify::DEFAULT_WORKERS)]
    workers: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = Backend::ALL)]
    backends: Vec<Backend>,
    #[arg(long, value_delimiter = ',', default_values_t = [Precision::Single])]
    precisions: Vec<Precision>,
    #[arg(long, default_value_t = 2024)]
    seed: u64,
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Preset name or path to a key=value device file.
    #[arg(long, default_value = "geforce-940m")]
    device: String,
    #[arg(long, default_value_t = 2048)]
    size: u64,
    #[arg(long, default_value_t = 32)]
    tile: u64,
    #[arg(long, default_value_t = Precision::Single)]
    precision: Precision,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PlotKind {
    Gflops,
    Time,
    Speedup,
}

#[derive(Debug, Args)]
struct PlotArgs {
    #[arg(long = "in", default_value = "results.csv")]
    input: PathBuf,
    #[arg(long, value_enum)]
    kind: PlotKind,
    #[arg(long)]
    baseline: Option<Backend>,
    #[arg(long)]
    target: Option<Backend>,
    #[arg(long, default_value = "plots")]
    out_dir: PathBuf,
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    match cli.command {
        Command::Bench(a) => cmd_bench(a, out, err),
        Command::Verify(a) => cmd_verify(a, out),
        Command::Model(a) => cmd_model(a, out, err),
        Command::Plot(a) => cmd_plot(a, out, err),
    }
}

fn cmd_bench(args: BenchArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let config = BenchmarkConfig {
        sizes: args.sizes,
        tiles: args.tiles,
        precisions: args.precisions,
        reps_list: args.reps,
        backends: args.backends,
        workers: bench::resolve_workers(args.workers),
        seed: args.seed,
        exact_fit: args.exact_fit,
        warmup_runs: args.warmup,
    };
    if let Err(e) = config.validate() {
        let _ = writeln!(err, "error: {e}");
        return EXIT_USAGE;
    }
    let result = bench::sweep_with(&config, |case, res| {
        let label = format!(
            "{} {} n={} tile={} reps={} workers={}",
            case.backend, case.precision, case.size, case.tile, case.reps, case.workers
        );
        let _ = match res {
            Ok(r) => writeln!(err, "ok   {label}: avg {:.6e} s, {:.4} GFLOPS", r.avg_seconds, r.gflops),
            Err(e) => writeln!(err, "FAIL {label}: {e}"),
        };
    });
    let sweep = match result {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USAGE;
        }
    };
    for &i in &sweep.clamped {
        let _ = writeln!(err, "warning: record {i} measured zero time; clamped to clock floor");
    }
    if let Err(e) = report::write_csv(&sweep.records, &args.out) {
        let _ = writeln!(err, "error: {e}");
        return EXIT_FAILURE;
    }
    if let Ok(table) = report::summary_table(&sweep.records) {
        let _ = write!(out, "{table}");
    }
    let _ = writeln!(
        err,
        "{} records written to {}, {} failed",
        sweep.records.len(),
        args.out.display(),
        sweep.failures.len()
    );
    if sweep.failures.is_empty() {
        EXIT_OK
    } else {
        EXIT_FAILURE
    }
}

fn cmd_verify(args: VerifyArgs, out: &mut dyn Write) -> i32 {
    let plan = VerifyPlan {
        sizes: args.sizes,
        tiles: args.tiles,
        workers: args.workers,
        backends: args.backends,
        precisions: args.precisions,
        seed: args.seed,
    };
    run_verify(&plan, verify::run_backend, out)
}

/// Runs an equivalence plan with the given kernel, printing one line per
/// case. The first failure also prints the offending element.
pub fn run_verify<K>(plan: &VerifyPlan, kernel: K, out: &mut dyn Write) -> i32
where
    K: Fn(&verify::EquivalenceCase, &crate::Matrix, &crate::Matrix) -> Result<crate::Matrix, crate::MatrixError>,
{
    if [plan.sizes.len(), plan.tiles.len(), plan.workers.len(), plan.backends.len()].contains(&0)
        || plan.sizes.contains(&0)
        || plan.tiles.contains(&0)
        || plan.workers.contains(&0)
    {
        let _ = writeln!(out, "error: sizes, tiles and workers must be nonempty and positive");
        return EXIT_USAGE;
    }
    let mut first_failure: Option<String> = None;
    let mut total = 0;
    let result = plan.run(kernel, |case, outcome| {
        total += 1;
        let label = format!(
            "{} {} size={} tile={} workers={}",
            case.backend, case.precision, case.size, case.tile, case.workers
        );
        let _ = match outcome {
            Outcome::Pass => writeln!(out, "PASS {label}"),
            Outcome::Mismatch { row, col, expected, got } => {
                let detail = format!("first difference at ({row}, {col}): expected {expected}, got {got}");
                first_failure.get_or_insert_with(|| format!("{label}: {detail}"));
                writeln!(out, "FAIL {label}: {detail}")
            }
            Outcome::Error(e) => {
                first_failure.get_or_insert_with(|| format!("{label}: {e}"));
                writeln!(out, "FAIL {label}: {e}")
            }
        };
    });
    match result {
        Ok(0) => {
            let _ = writeln!(out, "all {total} cases passed");
            EXIT_OK
        }
        Ok(n) => {
            let _ = writeln!(out, "{n} of {total} cases failed; first: {}", first_failure.unwrap_or_default());
            EXIT_FAILURE
        }
        Err(e) => {
            let _ = writeln!(out, "error: {e}");
            EXIT_FAILURE
        }
    }
}

fn cmd_model(args: ModelArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    if args.size == 0 || args.tile == 0 {
        let _ = writeln!(err, "error: --size and --tile must be positive");
        return EXIT_USAGE;
    }
    let spec = match DeviceSpec::resolve(&args.device) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_USAGE;
        }
    };
    for (k, v) in model::report(&spec, args.size, args.tile, args.precision) {
        let _ = writeln!(out, "{k}={v}");
    }
    EXIT_OK
}

fn cmd_plot(args: PlotArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let (baseline, target) = match (args.kind, args.baseline, args.target) {
        (PlotKind::Speedup, Some(b), Some(t)) => (Some(b), Some(t)),
        (PlotKind::Speedup, _, _) => {
            let _ = writeln!(err, "error: --kind speedup requires --baseline and --target");
            return EXIT_USAGE;
        }
        _ => (None, None),
    };
    match plot(&args, baseline.zip(target)) {
        Ok(paths) => {
            for p in paths {
                let _ = writeln!(out, "{}", p.display());
            }
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_FAILURE
        }
    }
}

fn plot(args: &PlotArgs, pair: Option<(Backend, Backend)>) -> Result<Vec<PathBuf>, ReportError> {
    let records = report::read_csv(&args.input)?;
    if records.is_empty() {
        return Err(ReportError::NoRecords);
    }
    fs::create_dir_all(&args.out_dir).map_err(|source| ReportError::Io {
        path: args.out_dir.display().to_string(),
        source,
    })?;
    let kind = match args.kind {
        PlotKind::Gflops => "gflops",
        PlotKind::Time => "time",
        PlotKind::Speedup => "speedup",
    };
    let mut written = Vec::new();
    for ((precision, reps), group) in report::group_by_precision_reps(&records) {
        let (series, y_label, title) = match (args.kind, pair) {
            (PlotKind::Speedup, Some((baseline, target))) => {
                let owned: Vec<_> = group.iter().map(|r| (*r).clone()).collect();
                let mut tiles: Vec<usize> = owned.iter().map(|r| r.tile).collect();
                tiles.sort_unstable();
                tiles.dedup();
                let series = tiles
                    .into_iter()
                    .map(|tile| report::derive_speedup_series(&owned, baseline, target, SeriesKey { precision, tile, reps }))
                    .collect::<Result<Vec<_>, _>>()?;
                (series, "speedup".to_string(), format!("Speedup of {target} over {baseline}"))
            }
            (PlotKind::Time, _) => (
                report::metric_series(&group, Metric::Time),
                Metric::Time.axis_label().to_string(),
                "Execution time".to_string(),
            ),
            _ => (
                report::metric_series(&group, Metric::Gflops),
                Metric::Gflops.axis_label().to_string(),
                "Throughput".to_string(),
            ),
        };
        let mut spec = ChartSpec::new(
            format!("{title}, {precision} precision, reps = {reps}"),
            "matrix order",
            y_label,
        );
        spec.series = series;
        let path = args.out_dir.join(format!("{kind}_{precision}_reps{reps}.svg"));
        report::render_chart(&spec, &path)?;
        written.push(path);
    }
    Ok(written)
}
