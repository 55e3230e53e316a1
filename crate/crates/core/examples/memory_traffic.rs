//! Global-memory element loads with and without tiling, and the device
//! footprint of A, B and C across the size sweep.
//!
//! ```bash
//! cargo run -p tilemm --example memory_traffic
//! ```

use tilemm::bench::DEFAULT_SIZES;
use tilemm::model::{footprint, global_load_model, DeviceSpec, MIB};
use tilemm::Precision;

pub fn run_example() {
    let device = DeviceSpec::geforce_940m();
    let tile = 32;
    println!("order   naive loads      tiled loads   ratio  f32 MiB  f64 MiB  fits");
    for size in DEFAULT_SIZES {
        let n = size as u64;
        let naive = global_load_model(n, n, n, None);
        let tiled = global_load_model(n, n, n, Some(tile));
        let f32_fp = footprint(&device, n, n, n, Precision::Single);
        let f64_fp = footprint(&device, n, n, n, Precision::Double);
        println!(
            "{size:>5}  {:>12}  {:>15}  {:>6}  {:>7}  {:>7}  {}",
            naive.total_loads,
            tiled.total_loads,
            naive.total_loads / tiled.total_loads,
            f32_fp.bytes_total as f64 / MIB as f64,
            f64_fp.bytes_total as f64 / MIB as f64,
            f64_fp.fits_global
        );
    }
}

#[allow(dead_code)]
fn main() {
    run_example()
}
