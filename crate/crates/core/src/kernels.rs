//! Matrix-multiplication backends.
//!
//! Every backend accumulates each output element in ascending `k`, starting
//! from zero, in the input precision. The tiled schedules only reorder work
//! *between* elements, so on the same inputs all four backends produce
//! bitwise-identical results. [`matmul_reference`] is kept separate: it uses
//! a plain i-j-k loop with an `f64` accumulator and serves as the oracle.

use std::fmt;
use std::ops::{Add, Mul};
use std::str::FromStr;
use std::thread;

use serde::{Deserialize, Serialize};

use crate::matrix::{Matrix, MatrixError, Storage};

/// Tile geometry for the blocked backends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TileConfig {
    /// Edge length of a square tile, in elements.
    pub tile: usize,
    /// Copy each A/B tile into a contiguous scratch buffer before the
    /// inner product, mimicking a GPU shared-memory staging step.
    pub copy_tiles: bool,
}

impl TileConfig {
    pub fn new(tile: usize) -> Result<Self, MatrixError> {
        if tile == 0 {
            return Err(MatrixError::InvalidTile);
        }
        Ok(TileConfig {
            tile,
            copy_tiles: false,
        })
    }

    pub fn with_copy(mut self, copy_tiles: bool) -> Self {
        self.copy_tiles = copy_tiles;
        self
    }

    /// True when the tile divides every given dimension.
    pub fn fits_exactly(&self, dims: &[usize]) -> bool {
        dims.iter().all(|d| d % self.tile == 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    NaiveSeq,
    TiledSeq,
    TiledPar,
    NaivePar,
}

impl Backend {
    pub const ALL: [Backend; 4] = [
        Backend::NaiveSeq,
        Backend::TiledSeq,
        Backend::TiledPar,
        Backend::NaivePar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Backend::NaiveSeq => "naive-seq",
            Backend::TiledSeq => "tiled-seq",
            Backend::TiledPar => "tiled-par",
            Backend::NaivePar => "naive-par",
        }
    }

    pub fn is_parallel(self) -> bool {
        matches!(self, Backend::TiledPar | Backend::NaivePar)
    }

    /// Runs this backend. Sequential backends ignore `workers`; naive
    /// backends ignore the tile.
    pub fn multiply(
        self,
        a: &Matrix,
        b: &Matrix,
        cfg: TileConfig,
        workers: usize,
    ) -> Result<Matrix, MatrixError> {
        match self {
            Backend::NaiveSeq => matmul_naive(a, b),
            Backend::TiledSeq => matmul_tiled(a, b, cfg),
            Backend::TiledPar => matmul_parallel(a, b, cfg, workers),
            Backend::NaivePar => matmul_naive_parallel(a, b, workers),
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Backend::ALL
            .into_iter()
            .find(|b| b.name() == s.trim())
            .ok_or_else(|| {
                format!("unknown backend `{s}` (expected naive-seq, tiled-seq, tiled-par or naive-par)")
            })
    }
}

/// Element types the performance kernels run on.
pub trait Element: Copy + Send + Sync + Add<Output = Self> + Mul<Output = Self> {
    const ZERO: Self;
}

impl Element for f32 {
    const ZERO: Self = 0.0;
}

impl Element for f64 {
    const ZERO: Self = 0.0;
}

/// Problem shape `(m x n) * (n x w)`.
#[derive(Debug, Clone, Copy)]
struct Dims {
    m: usize,
    n: usize,
    w: usize,
}

fn check_operands(a: &Matrix, b: &Matrix) -> Result<Dims, MatrixError> {
    if a.cols() != b.rows() {
        return Err(MatrixError::InnerDimension {
            a_rows: a.rows(),
            a_cols: a.cols(),
            b_rows: b.rows(),
            b_cols: b.cols(),
        });
    }
    if a.precision() != b.precision() {
        return Err(MatrixError::PrecisionMismatch(a.precision(), b.precision()));
    }
    Ok(Dims {
        m: a.rows(),
        n: a.cols(),
        w: b.cols(),
    })
}

/// Applies a slice kernel to whichever native storage the operands carry.
macro_rules! dispatch {
    ($a:expr, $b:expr, $dims:expr, |$x:ident, $y:ident| $body:expr) => {{
        let storage = match ($a.storage(), $b.storage()) {
            (Storage::Single($x), Storage::Single($y)) => Storage::Single($body),
            (Storage::Double($x), Storage::Double($y)) => Storage::Double($body),
            _ => unreachable!("precision checked"),
        };
        Matrix::from_storage($dims.m, $dims.w, storage)
    }};
}

/// Textbook i-j-k product with an `f64` accumulator, rounded to the
/// operand precision. Used as the correctness oracle.
pub fn matmul_reference(a: &Matrix, b: &Matrix) -> Result<Matrix, MatrixError> {
    let d = check_operands(a, b)?;
    let av = a.to_f64_vec();
    let bv = b.to_f64_vec();
    // Column j of B as a contiguous run; summation order is unchanged.
    let mut bt = vec![0.0f64; d.n * d.w];
    for k in 0..d.n {
        for j in 0..d.w {
            bt[j * d.n + k] = bv[k * d.w + j];
        }
    }
    let mut c = Matrix::zeros(d.m, d.w, a.precision())?;
    for i in 0..d.m {
        let a_row = &av[i * d.n..(i + 1) * d.n];
        for j in 0..d.w {
            let b_col = &bt[j * d.n..(j + 1) * d.n];
            let mut acc = 0.0f64;
            for k in 0..d.n {
                acc += a_row[k] * b_col[k];
            }
            c.set(i, j, acc)?;
        }
    }
    Ok(c)
}

/// One output element per `(i, j)`, native-precision accumulator.
pub fn matmul_naive(a: &Matrix, b: &Matrix) -> Result<Matrix, MatrixError> {
    let d = check_operands(a, b)?;
    dispatch!(a, b, d, |x, y| {
        let mut c = zeroed(d.m * d.w);
        naive_rows(x, y, &mut c, 0, d);
        c
    })
}

/// Tile-blocked product over `(I, J, K)` tile triples. Edge tiles are
/// clamped, so any shape is accepted.
pub fn matmul_tiled(a: &Matrix, b: &Matrix, cfg: TileConfig) -> Result<Matrix, MatrixError> {
    let d = check_operands(a, b)?;
    if cfg.tile == 0 {
        return Err(MatrixError::InvalidTile);
    }
    dispatch!(a, b, d, |x, y| {
        let mut c = zeroed(d.m * d.w);
        tiled_rows(x, y, &mut c, 0, d, cfg);
        c
    })
}

/// Tiled product with output tile-rows split into contiguous bands, one
/// band per worker thread. Each worker owns a disjoint slice of C.
pub fn matmul_parallel(
    a: &Matrix,
    b: &Matrix,
    cfg: TileConfig,
    workers: usize,
) -> Result<Matrix, MatrixError> {
    let d = check_operands(a, b)?;
    if cfg.tile == 0 {
        return Err(MatrixError::InvalidTile);
    }
    if workers == 0 {
        return Err(MatrixError::InvalidWorkers);
    }
    dispatch!(a, b, d, |x, y| {
        let tile_rows = d.m.div_ceil(cfg.tile);
        let bands = band_bounds(tile_rows, workers)
            .into_iter()
            .map(|(lo, hi)| (lo * cfg.tile, (hi * cfg.tile).min(d.m)))
            .collect::<Vec<_>>();
        run_bands(d, &bands, |c, row0| tiled_rows(x, y, c, row0, d, cfg))
    })
}

/// Non-tiled parallel product: output rows split evenly among workers.
pub fn matmul_naive_parallel(a: &Matrix, b: &Matrix, workers: usize) -> Result<Matrix, MatrixError> {
    let d = check_operands(a, b)?;
    if workers == 0 {
        return Err(MatrixError::InvalidWorkers);
    }
    dispatch!(a, b, d, |x, y| {
        let bands = band_bounds(d.m, workers);
        run_bands(d, &bands, |c, row0| naive_rows(x, y, c, row0, d))
    })
}

fn zeroed<T: Element>(len: usize) -> Vec<T> {
    vec![T::ZERO; len]
}

/// Splits `units` into at most `workers` contiguous, nonempty ranges whose
/// lengths differ by at most one. Earlier ranges take the remainder.
pub fn band_bounds(units: usize, workers: usize) -> Vec<(usize, usize)> {
    let parts = workers.min(units).max(1);
    let base = units / parts;
    let extra = units % parts;
    let mut out = Vec::with_capacity(parts);
    let mut lo = 0;
    for p in 0..parts {
        let len = base + usize::from(p < extra);
        out.push((lo, lo + len));
        lo += len;
    }
    out
}

/// Allocates C, hands each row band to its own scoped thread, and joins.
fn run_bands<T, F>(d: Dims, bands: &[(usize, usize)], work: F) -> Vec<T>
where
    T: Element,
    F: Fn(&mut [T], usize) + Sync,
{
    let mut c = zeroed(d.m * d.w);
    if bands.len() <= 1 {
        work(&mut c, 0);
        return c;
    }
    thread::scope(|scope| {
        let mut rest: &mut [T] = &mut c;
        for &(lo, hi) in bands {
            let (band, tail) = rest.split_at_mut((hi - lo) * d.w);
            rest = tail;
            let work = &work;
            scope.spawn(move || work(band, lo));
        }
    });
    c
}

/// Computes output rows `row0 .. row0 + c.len() / w` into `c`.
fn naive_rows<T: Element>(a: &[T], b: &[T], c: &mut [T], row0: usize, d: Dims) {
    for (r, c_row) in c.chunks_exact_mut(d.w).enumerate() {
        let a_row = &a[(row0 + r) * d.n..(row0 + r + 1) * d.n];
        for (j, out) in c_row.iter_mut().enumerate() {
            let mut acc = T::ZERO;
            for (k, &aik) in a_row.iter().enumerate() {
                acc = acc + aik * b[k * d.w + j];
            }
            *out = acc;
        }
    }
}

/// Tiled schedule over the output rows held in `c`. `row0` must sit on a
/// tile boundary relative to the band, which `matmul_parallel` guarantees.
fn tiled_rows<T: Element>(a: &[T], b: &[T], c: &mut [T], row0: usize, d: Dims, cfg: TileConfig) {
    let t = cfg.tile;
    let rows = c.len() / d.w;
    let mut a_buf = Vec::new();
    let mut b_buf = Vec::new();
    if cfg.copy_tiles {
        a_buf.resize(t * t, T::ZERO);
        b_buf.resize(t * t, T::ZERO);
    }
    for i0 in (0..rows).step_by(t) {
        let i1 = (i0 + t).min(rows);
        for j0 in (0..d.w).step_by(t) {
            let j1 = (j0 + t).min(d.w);
            let tw = j1 - j0;
            for k0 in (0..d.n).step_by(t) {
                let k1 = (k0 + t).min(d.n);
                let tk = k1 - k0;
                if cfg.copy_tiles {
                    for (ii, i) in (i0..i1).enumerate() {
                        let src = &a[(row0 + i) * d.n + k0..(row0 + i) * d.n + k1];
                        a_buf[ii * tk..ii * tk + tk].copy_from_slice(src);
                    }
                    for (kk, k) in (k0..k1).enumerate() {
                        b_buf[kk * tw..kk * tw + tw].copy_from_slice(&b[k * d.w + j0..k * d.w + j1]);
                    }
                    for (ii, i) in (i0..i1).enumerate() {
                        let c_row = &mut c[i * d.w + j0..i * d.w + j1];
                        let a_row = &a_buf[ii * tk..ii * tk + tk];
                        tile_update(c_row, a_row, &b_buf[..tk * tw], tw);
                    }
                } else {
                    for i in i0..i1 {
                        let c_row = &mut c[i * d.w + j0..i * d.w + j1];
                        let a_row = &a[(row0 + i) * d.n + k0..(row0 + i) * d.n + k1];
                        for (kk, &aik) in a_row.iter().enumerate() {
                            let k = k0 + kk;
                            let b_row = &b[k * d.w + j0..k * d.w + j1];
                            axpy(c_row, aik, b_row);
                        }
                    }
                }
            }
        }
    }
}

/// `c_row += a_row * b_tile` for a packed `a_row.len() x width` B tile.
#[inline]
fn tile_update<T: Element>(c_row: &mut [T], a_row: &[T], b_tile: &[T], width: usize) {
    for (&aik, b_row) in a_row.iter().zip(b_tile.chunks_exact(width)) {
        axpy(c_row, aik, b_row);
    }
}

#[inline(always)]
fn axpy<T: Element>(c: &mut [T], alpha: T, x: &[T]) {
    for (cv, &xv) in c.iter_mut().zip(x) {
        *cv = *cv + alpha * xv;
    }
}
