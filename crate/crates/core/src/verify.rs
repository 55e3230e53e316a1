//! Oracle-equivalence checks: every backend against [`matmul_reference`]
//! on integer-valued inputs, where exact equality is required.

use crate::kernels::{matmul_reference, Backend, TileConfig};
use crate::matrix::{FillRange, Matrix, MatrixError, Precision};

pub const DEFAULT_SIZES: [usize; 11] = [1, 2, 3, 7, 8, 31, 32, 33, 64, 100, 128];
pub const DEFAULT_TILES: [usize; 4] = [1, 8, 16, 32];
pub const DEFAULT_WORKERS: [usize; 5] = [1, 2, 3, 4, 7];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EquivalenceCase {
    pub backend: Backend,
    pub precision: Precision,
    pub size: usize,
    pub tile: usize,
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Pass,
    /// First element whose bits differ from the oracle.
    Mismatch {
        row: usize,
        col: usize,
        expected: f64,
        got: f64,
    },
    Error(MatrixError),
}

impl Outcome {
    pub fn passed(&self) -> bool {
        matches!(self, Outcome::Pass)
    }
}

#[derive(Debug, Clone)]
pub struct VerifyPlan {
    pub sizes: Vec<usize>,
    pub tiles: Vec<usize>,
    pub workers: Vec<usize>,
    pub backends: Vec<Backend>,
    pub precisions: Vec<Precision>,
    pub seed: u64,
}

impl Default for VerifyPlan {
    fn default() -> Self {
        VerifyPlan {
            sizes: DEFAULT_SIZES.to_vec(),
            tiles: DEFAULT_TILES.to_vec(),
            workers: DEFAULT_WORKERS.to_vec(),
            backends: Backend::ALL.to_vec(),
            precisions: vec![Precision::Single],
            seed: 2024,
        }
    }
}

impl VerifyPlan {
    /// Square small-int operands for `size`; A and B use distinct streams.
    pub fn operands(&self, size: usize, precision: Precision) -> Result<(Matrix, Matrix), MatrixError> {
        let base = self.seed.wrapping_add(size as u64 * 1_000_003);
        let a = Matrix::random_filled(size, size, precision, base, FillRange::SmallInt)?;
        let b = Matrix::random_filled(size, size, precision, base ^ 0x5851_F42D, FillRange::SmallInt)?;
        Ok((a, b))
    }

    /// Runs the full cross product using `kernel` for each case and calls
    /// `report` with every outcome. Returns the number of failures.
    pub fn run<K, R>(&self, kernel: K, mut report: R) -> Result<usize, MatrixError>
    where
        K: Fn(&EquivalenceCase, &Matrix, &Matrix) -> Result<Matrix, MatrixError>,
        R: FnMut(&EquivalenceCase, &Outcome),
    {
        let mut failures = 0;
        for &precision in &self.precisions {
            for &size in &self.sizes {
                let (a, b) = self.operands(size, precision)?;
                let expected = matmul_reference(&a, &b)?;
                for &tile in &self.tiles {
                    for &backend in &self.backends {
                        for &workers in &self.workers {
                            let case = EquivalenceCase {
                                backend,
                                precision,
                                size,
                                tile,
                                workers,
                            };
                            let outcome = check(&expected, kernel(&case, &a, &b));
                            if !outcome.passed() {
                                failures += 1;
                            }
                            report(&case, &outcome);
                        }
                    }
                }
            }
        }
        Ok(failures)
    }

    /// [`VerifyPlan::run`] with the real backends.
    pub fn run_backends<R>(&self, report: R) -> Result<usize, MatrixError>
    where
        R: FnMut(&EquivalenceCase, &Outcome),
    {
        self.run(run_backend, report)
    }
}

pub fn run_backend(case: &EquivalenceCase, a: &Matrix, b: &Matrix) -> Result<Matrix, MatrixError> {
    case.backend.multiply(a, b, TileConfig::new(case.tile)?, case.workers)
}

fn check(expected: &Matrix, got: Result<Matrix, MatrixError>) -> Outcome {
    let got = match got {
        Ok(m) => m,
        Err(e) => return Outcome::Error(e),
    };
    match expected.first_bitwise_difference(&got) {
        Ok(None) => Outcome::Pass,
        Ok(Some((row, col))) => Outcome::Mismatch {
            row,
            col,
            expected: expected.get(row, col).unwrap_or(f64::NAN),
            got: got.get(row, col).unwrap_or(f64::NAN),
        },
        Err(e) => Outcome::Error(e),
    }
}
