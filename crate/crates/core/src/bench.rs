//! Timed, verified execution of kernel backends over size / tile /
//! precision / repetition sweeps.

use std::env;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernels::{matmul_reference, Backend, TileConfig};
use crate::matrix::{first_approx_difference, reduction_rel_tol, FillRange, Matrix, MatrixError, Precision};

/// Environment variable consulted for the worker count when no explicit
/// value is given.
pub const WORKERS_ENV: &str = "TILEMM_NUM_THREADS";

/// Smallest duration a case may report. Batches that measure as zero are
/// raised to this value and flagged.
pub const CLOCK_FLOOR: Duration = Duration::from_nanos(1);

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid benchmark configuration: {0}")]
    InvalidConfig(String),
    #[error("time must be positive, got {0}")]
    NonPositiveTime(f64),
    #[error(transparent)]
    Kernel(#[from] MatrixError),
    #[error("{backend} produced a wrong product at ({row}, {col}) for {size}x{size} {precision}")]
    Verification {
        backend: Backend,
        precision: Precision,
        size: usize,
        row: usize,
        col: usize,
    },
}

/// `2 m n w` floating-point operations over `seconds`, in units of 1e9.
pub fn gflops(m: usize, n: usize, w: usize, seconds: f64) -> Result<f64, BenchError> {
    if seconds.is_nan() || seconds <= 0.0 {
        return Err(BenchError::NonPositiveTime(seconds));
    }
    Ok(2.0 * m as f64 * n as f64 * w as f64 / (seconds * 1e9))
}

/// Measured ratio `baseline / candidate`.
pub fn speedup(baseline_seconds: f64, candidate_seconds: f64) -> Result<f64, BenchError> {
    for t in [baseline_seconds, candidate_seconds] {
        if t.is_nan() || t <= 0.0 {
            return Err(BenchError::NonPositiveTime(t));
        }
    }
    Ok(baseline_seconds / candidate_seconds)
}

/// Worker count: explicit value, else [`WORKERS_ENV`], else the hardware
/// parallelism reported by the OS.
pub fn resolve_workers(explicit: Option<usize>) -> usize {
    explicit
        .filter(|&w| w >= 1)
        .or_else(|| {
            env::var(WORKERS_ENV)
                .ok()
                .and_then(|v| v.trim().parse::<usize>().ok())
                .filter(|&w| w >= 1)
        })
        .unwrap_or_else(hardware_workers)
}

pub fn hardware_workers() -> usize {
    thread::available_parallelism().map_or(1, |n| n.get())
}

/// One timed measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRecord {
    pub backend: Backend,
    pub precision: Precision,
    pub m: usize,
    pub n: usize,
    pub w: usize,
    pub tile: usize,
    pub reps: usize,
    pub workers: usize,
    pub total_seconds: f64,
    pub avg_seconds: f64,
    pub gflops: f64,
}

impl BenchmarkRecord {
    /// Builds a record for a batch of `reps` runs that took `total_seconds`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_batch(
        backend: Backend,
        precision: Precision,
        (m, n, w): (usize, usize, usize),
        tile: usize,
        reps: usize,
        workers: usize,
        total_seconds: f64,
    ) -> Result<Self, BenchError> {
        if reps == 0 {
            return Err(BenchError::InvalidConfig("reps must be at least 1".into()));
        }
        let avg_seconds = total_seconds / reps as f64;
        Ok(BenchmarkRecord {
            backend,
            precision,
            m,
            n,
            w,
            tile,
            reps,
            workers,
            total_seconds,
            avg_seconds,
            gflops: gflops(m, n, w, avg_seconds)?,
        })
    }
}

/// A single point of the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CaseSpec {
    pub backend: Backend,
    pub precision: Precision,
    pub size: usize,
    pub tile: usize,
    pub reps: usize,
    pub workers: usize,
    pub seed: u64,
    pub warmup: usize,
    pub exact_fit: bool,
}

#[derive(Debug, Clone)]
pub struct CaseResult {
    pub record: BenchmarkRecord,
    /// Product of the final timed run.
    pub product: Matrix,
    /// The batch measured as zero and was raised to [`CLOCK_FLOOR`].
    pub clamped: bool,
}

/// Seeds for the A and B operands of a case.
pub fn operand_seeds(seed: u64) -> (u64, u64) {
    (seed, seed ^ 0x9E37_79B9_7F4A_7C15)
}

/// Generates both operands, runs `warmup` untimed multiplies, then times
/// `reps` back-to-back multiplies as one batch. The last product is checked
/// against [`matmul_reference`] before the record is returned.
pub fn run_case(case: &CaseSpec) -> Result<CaseResult, BenchError> {
    let cfg = TileConfig::new(case.tile.max(1))?;
    run_case_with(case, |a, b| case.backend.multiply(a, b, cfg, case.workers))
}

/// [`run_case`] with the multiply supplied by the caller. The record is
/// still labelled with `case.backend`.
pub fn run_case_with<K>(case: &CaseSpec, kernel: K) -> Result<CaseResult, BenchError>
where
    K: Fn(&Matrix, &Matrix) -> Result<Matrix, MatrixError>,
{
    if case.size == 0 || case.tile == 0 || case.reps == 0 || case.workers == 0 {
        return Err(BenchError::InvalidConfig(format!(
            "size, tile, reps and workers must all be positive: {case:?}"
        )));
    }
    if case.exact_fit && !case.size.is_multiple_of(case.tile) {
        return Err(BenchError::InvalidConfig(format!(
            "exact-fit: tile {} does not divide size {}",
            case.tile, case.size
        )));
    }
    let n = case.size;
    let (seed_a, seed_b) = operand_seeds(case.seed);
    let a = Matrix::random_filled(n, n, case.precision, seed_a, FillRange::UnitReal)?;
    let b = Matrix::random_filled(n, n, case.precision, seed_b, FillRange::UnitReal)?;
    let run = || kernel(&a, &b);

    for _ in 0..case.warmup {
        run()?;
    }
    let start = Instant::now();
    let mut product = run()?;
    for _ in 1..case.reps {
        product = run()?;
    }
    let mut elapsed = start.elapsed();
    let clamped = elapsed.is_zero();
    if clamped {
        elapsed = CLOCK_FLOOR;
    }

    let reference = matmul_reference(&a, &b)?;
    let tol = reduction_rel_tol(n, case.precision);
    if let Some((row, col)) = first_approx_difference(&product, &reference, tol, 0.0)? {
        return Err(BenchError::Verification {
            backend: case.backend,
            precision: case.precision,
            size: n,
            row,
            col,
        });
    }

    let record = BenchmarkRecord::from_batch(
        case.backend,
        case.precision,
        (n, n, n),
        case.tile,
        case.reps,
        case.workers,
        elapsed.as_secs_f64(),
    )?;
    Ok(CaseResult {
        record,
        product,
        clamped,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchmarkConfig {
    pub sizes: Vec<usize>,
    pub tiles: Vec<usize>,
    pub precisions: Vec<Precision>,
    pub reps_list: Vec<usize>,
    pub backends: Vec<Backend>,
    pub workers: usize,
    pub seed: u64,
    pub exact_fit: bool,
    pub warmup_runs: usize,
}

pub const DEFAULT_SIZES: [usize; 7] = [32, 64, 128, 320, 640, 1024, 2048];
pub const DEFAULT_TILES: [usize; 3] = [8, 16, 32];
pub const DEFAULT_REPS: [usize; 3] = [1, 100, 1000];

impl Default for BenchmarkConfig {
    /// The full experimental grid: both precisions, every backend, sizes 32
    /// to 2048, tiles 8/16/32, and 1, 100 and 1000 repetitions.
    fn default() -> Self {
        BenchmarkConfig {
            sizes: DEFAULT_SIZES.to_vec(),
            tiles: DEFAULT_TILES.to_vec(),
            precisions: Precision::ALL.to_vec(),
            reps_list: DEFAULT_REPS.to_vec(),
            backends: Backend::ALL.to_vec(),
            workers: resolve_workers(None),
            seed: 42,
            exact_fit: false,
            warmup_runs: 1,
        }
    }
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        let lists = [
            ("sizes", self.sizes.is_empty()),
            ("tiles", self.tiles.is_empty()),
            ("precisions", self.precisions.is_empty()),
            ("reps", self.reps_list.is_empty()),
            ("backends", self.backends.is_empty()),
        ];
        if let Some((name, _)) = lists.iter().find(|(_, empty)| *empty) {
            return Err(BenchError::InvalidConfig(format!("{name} list is empty")));
        }
        let positive = |name: &str, v: &[usize]| {
            if v.contains(&0) {
                Err(BenchError::InvalidConfig(format!("{name} must be positive")))
            } else {
                Ok(())
            }
        };
        positive("sizes", &self.sizes)?;
        positive("tiles", &self.tiles)?;
        positive("reps", &self.reps_list)?;
        if self.workers == 0 {
            return Err(BenchError::InvalidConfig("workers must be at least 1".into()));
        }
        if self.exact_fit {
            let bad: Vec<String> = self
                .sizes
                .iter()
                .flat_map(|&s| self.tiles.iter().map(move |&t| (s, t)))
                .filter(|(s, t)| s % t != 0)
                .map(|(s, t)| format!("{s}/{t}"))
                .collect();
            if !bad.is_empty() {
                return Err(BenchError::InvalidConfig(format!(
                    "exact-fit requires every tile to divide every size; not divisible: {}",
                    bad.join(", ")
                )));
            }
        }
        Ok(())
    }

    /// Cases in execution order: precision, then size, then tile, then
    /// backend, then repetition count (outermost to innermost), each list
    /// in the order given.
    pub fn cases(&self) -> Vec<CaseSpec> {
        let mut out = Vec::new();
        for &precision in &self.precisions {
            for &size in &self.sizes {
                for &tile in &self.tiles {
                    for &backend in &self.backends {
                        for &reps in &self.reps_list {
                            out.push(CaseSpec {
                                backend,
                                precision,
                                size,
                                tile,
                                reps,
                                workers: if backend.is_parallel() { self.workers } else { 1 },
                                seed: self.seed,
                                warmup: self.warmup_runs,
                                exact_fit: self.exact_fit,
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug)]
pub struct CaseFailure {
    pub case: CaseSpec,
    pub error: BenchError,
}

#[derive(Debug, Default)]
pub struct SweepReport {
    pub records: Vec<BenchmarkRecord>,
    pub failures: Vec<CaseFailure>,
    /// Indices into `records` whose duration was clamped to the clock floor.
    pub clamped: Vec<usize>,
}

/// Runs every case of a validated config; a failing case is recorded and
/// skipped.
pub fn sweep(config: &BenchmarkConfig) -> Result<SweepReport, BenchError> {
    sweep_with(config, |_, _| {})
}

/// [`sweep`] with a progress callback invoked after each case.
pub fn sweep_with<F>(config: &BenchmarkConfig, mut progress: F) -> Result<SweepReport, BenchError>
where
    F: FnMut(&CaseSpec, Result<&BenchmarkRecord, &BenchError>),
{
    config.validate()?;
    let mut report = SweepReport::default();
    for case in config.cases() {
        match run_case(&case) {
            Ok(result) => {
                progress(&case, Ok(&result.record));
                if result.clamped {
                    report.clamped.push(report.records.len());
                }
                report.records.push(result.record);
            }
            Err(error) => {
                progress(&case, Err(&error));
                report.failures.push(CaseFailure { case, error });
            }
        }
    }
    Ok(report)
}
