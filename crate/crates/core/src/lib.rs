//! Dense matrix multiplication in three flavours (naive, tile-blocked and
//! parallel tile-blocked) over `f32` and `f64`, with a timing harness, an
//! analytic GPU occupancy and memory model, and CSV/SVG reporting.
//!
//! ```
//! use tilemm::{matmul_reference, matmul_tiled, FillRange, Matrix, Precision, TileConfig};
//!
//! let a = Matrix::random_filled(64, 64, Precision::Single, 1, FillRange::SmallInt).unwrap();
//! let b = Matrix::random_filled(64, 64, Precision::Single, 2, FillRange::SmallInt).unwrap();
//! let c = matmul_tiled(&a, &b, TileConfig::new(32).unwrap()).unwrap();
//! assert!(c.bitwise_eq(&matmul_reference(&a, &b).unwrap()));
//! ```
//!
//! See the `examples/` directory for one runnable program per capability.

pub mod bench;
pub mod cli;
pub mod kernels;
pub mod matrix;
pub mod model;
pub mod report;
pub mod verify;

pub use bench::{gflops, run_case, speedup, sweep, BenchError, BenchmarkConfig, BenchmarkRecord, CaseSpec};
pub use kernels::{
    matmul_naive, matmul_naive_parallel, matmul_parallel, matmul_reference, matmul_tiled, Backend, TileConfig,
};
pub use matrix::{approx_eq, FillRange, Matrix, MatrixError, Precision};
pub use model::{DeviceSpec, GridPlan};
pub use report::{ChartSeries, ChartSpec, ReportError};
