//! Greedy Jacobi-style MMF against Nyström column sampling on the normalized
//! Laplacian of a Cayley tree, across final core sizes.
//!
//! Run with `cargo run --release --example greedy_vs_nystrom`.

use learnable_mmf::baselines::{greedy_mmf, nystrom};
use learnable_mmf::graphgen::{cayley_tree, normalized_laplacian};
use learnable_mmf::mmf::{levels_for_core_size, objective};
use learnable_mmf::seeding;

fn main() -> learnable_mmf::Result<()> {
    let a = normalized_laplacian(&cayley_tree(3, 4)?)?;
    let n = a.dim();
    println!("n = {n}");
    println!("core_size,greedy,nystrom_mean");
    for core_size in [4, 8, 16, 24] {
        let levels = levels_for_core_size(n, 1, core_size)?;
        let greedy = objective(&a, &greedy_mmf(&a, levels)?)?.sqrt();
        let runs = 10;
        let mut total = 0.0;
        for s in 0..runs {
            total += nystrom(&a, core_size, &mut seeding::stream(s, "nystrom"))?.error;
        }
        println!("{core_size},{greedy:.6},{:.6}", total / runs as f64);
    }
    Ok(())
}
