//! Measures the parallel tiled backend against the sequential one for a
//! range of worker counts.
//!
//! ```bash
//! cargo run --release -p tilemm --example parallel_speedup -- 1024
//! ```

use std::env;
use std::error::Error;

use tilemm::bench::{hardware_workers, run_case, CaseSpec};
use tilemm::{speedup, Backend, Precision};

pub fn run_example(size: usize) -> Result<(), Box<dyn Error>> {
    let base = CaseSpec {
        backend: Backend::TiledSeq,
        precision: Precision::Single,
        size,
        tile: 32,
        reps: 1,
        workers: 1,
        seed: 7,
        warmup: 1,
        exact_fit: false,
    };
    let seq = run_case(&base)?;
    println!("hardware threads: {}", hardware_workers());
    println!("tiled-seq          {:.4} s", seq.record.avg_seconds);
    let mut counts = vec![1, 2, 4];
    counts.push(hardware_workers());
    counts.sort_unstable();
    counts.dedup();
    for workers in counts {
        let par = run_case(&CaseSpec {
            backend: Backend::TiledPar,
            workers,
            ..base
        })?;
        assert!(par.product.bitwise_eq(&seq.product), "worker count must not change the result");
        println!(
            "tiled-par w={workers:<3}     {:.4} s  speedup {:.2}",
            par.record.avg_seconds,
            speedup(seq.record.avg_seconds, par.record.avg_seconds)?
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    let size = env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(512);
    run_example(size)
}
