//! Loads a device description from a key=value file and reports the model
//! for it.
//!
//! ```bash
//! cargo run -p tilemm --example custom_device -- path/to/device.txt
//! ```
//!
//! Without an argument a sample description is written to a temporary file
//! and read back.

use std::env;
use std::error::Error;
use std::fs;

use tilemm::model::{self, DeviceSpec};
use tilemm::Precision;

const SAMPLE: &str = "\
# A larger part with 48 KiB of shared memory per SM.
name = sample-gpu
sm_count = 20
cores_per_sm = 128
warp_size = 32
max_threads_per_block = 1024
max_threads_per_sm = 1536
max_blocks_per_sm = 16
global_mem_bytes = 8589934592
shared_mem_bytes_per_sm = 49152
peak_gflops_single = 8873.0
peak_gflops_double = 277.3
";

pub fn run_example(path: Option<String>) -> Result<(), Box<dyn Error>> {
    let device = match path {
        Some(p) => DeviceSpec::load(p)?,
        None => {
            let p = env::temp_dir().join("tilemm-sample-device.txt");
            fs::write(&p, SAMPLE)?;
            DeviceSpec::load(&p)?
        }
    };
    for (k, v) in model::report(&device, 4096, 32, Precision::Double) {
        println!("{k}={v}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example(env::args().nth(1))
}
