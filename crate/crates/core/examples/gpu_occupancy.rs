//! Grid decomposition, occupancy and shared-memory fit on the built-in
//! GeForce 940M limit sheet for the usual tile edges.
//!
//! ```bash
//! cargo run -p tilemm --example gpu_occupancy
//! ```

use tilemm::model::{occupancy, plan_grid, shared_mem_fit, DeviceSpec};
use tilemm::Precision;

pub fn run_example() {
    let device = DeviceSpec::geforce_940m();
    println!(
        "{}: {} SMs x {} cores, warp {}, <= {} threads/block, <= {} threads/SM",
        device.name,
        device.sm_count,
        device.cores_per_sm,
        device.warp_size,
        device.max_threads_per_block,
        device.max_threads_per_sm
    );
    println!("tile  threads  warps  blocks/SM  threads/SM  valid  smem(f32)  smem(f64)");
    for tile in [4, 8, 16, 20, 32, 33] {
        let grid = plan_grid(2048, 2048, tile);
        let occ = occupancy(&device, grid.block_threads);
        let s = shared_mem_fit(&device, tile, Precision::Single);
        let d = shared_mem_fit(&device, tile, Precision::Double);
        println!(
            "{tile:>4}  {:>7}  {:>5}  {:>9}  {:>10}  {:>5}  {:>9}  {:>9}",
            grid.block_threads, occ.warps_per_block, occ.blocks_per_sm, occ.threads_per_sm, occ.valid, s.bytes_needed, d.bytes_needed
        );
    }
    let g = plan_grid(100, 100, 20);
    println!("100x100 with 20x20 tiles -> {}x{} grid, exact fit: {}", g.grid_x, g.grid_y, g.exact_fit);
}

#[allow(dead_code)]
fn main() {
    run_example()
}
