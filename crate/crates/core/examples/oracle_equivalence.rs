//! Runs every backend against the reference product on integer-valued
//! inputs and demands bitwise equality, including non-divisible sizes.
//!
//! ```bash
//! cargo run --release -p tilemm --example oracle_equivalence
//! ```

use std::error::Error;

use tilemm::verify::VerifyPlan;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let plan = VerifyPlan {
        sizes: vec![1, 7, 31, 33, 100],
        tiles: vec![1, 8, 32],
        workers: vec![1, 3],
        ..VerifyPlan::default()
    };
    let mut cases = 0;
    let failures = plan.run_backends(|case, outcome| {
        cases += 1;
        if !outcome.passed() {
            println!("FAIL {case:?}: {outcome:?}");
        }
    })?;
    println!("{cases} cases, {failures} failures");
    if failures > 0 {
        return Err("oracle mismatch".into());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
