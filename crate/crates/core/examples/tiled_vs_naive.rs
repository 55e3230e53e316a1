//! Times the naive and tile-blocked kernels on one square problem and
//! checks both against the reference product.
//!
//! ```bash
//! cargo run --release -p tilemm --example tiled_vs_naive -- 512 32
//! ```

use std::env;
use std::error::Error;
use std::time::Instant;

use tilemm::{approx_eq, matmul_naive, matmul_reference, matmul_tiled, FillRange, Matrix, Precision, TileConfig};

pub fn run_example(size: usize, tile: usize) -> Result<(), Box<dyn Error>> {
    let a = Matrix::random_filled(size, size, Precision::Single, 1, FillRange::UnitReal)?;
    let b = Matrix::random_filled(size, size, Precision::Single, 2, FillRange::UnitReal)?;

    let t = Instant::now();
    let naive = matmul_naive(&a, &b)?;
    let naive_s = t.elapsed().as_secs_f64();

    let cfg = TileConfig::new(tile)?;
    let t = Instant::now();
    let tiled = matmul_tiled(&a, &b, cfg)?;
    let tiled_s = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let staged = matmul_tiled(&a, &b, cfg.with_copy(true))?;
    let staged_s = t.elapsed().as_secs_f64();

    let reference = matmul_reference(&a, &b)?;
    let tol = tilemm::matrix::reduction_rel_tol(size, Precision::Single);
    assert!(approx_eq(&naive, &reference, tol, 0.0)?);
    assert!(tiled.bitwise_eq(&naive), "tiled and naive sum in the same order");
    assert!(staged.bitwise_eq(&naive));

    let flops = |s: f64| tilemm::gflops(size, size, size, s.max(1e-9)).unwrap_or(0.0);
    println!("{size}x{size} single precision, tile {tile}");
    println!("  naive           {naive_s:>10.4} s  {:>8.3} GFLOPS", flops(naive_s));
    println!("  tiled           {tiled_s:>10.4} s  {:>8.3} GFLOPS", flops(tiled_s));
    println!("  tiled + staging {staged_s:>10.4} s  {:>8.3} GFLOPS", flops(staged_s));
    println!("  tiling speedup  {:.2}x", naive_s / tiled_s.max(1e-9));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    let mut args = env::args().skip(1);
    let size = args.next().map(|s| s.parse()).transpose()?.unwrap_or(512);
    let tile = args.next().map(|s| s.parse()).transpose()?.unwrap_or(32);
    run_example(size, tile)
}
