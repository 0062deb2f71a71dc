//! Learnable MMF against greedy MMF and Nyström on the Karate club Laplacian.
//!
//! Run with `cargo run --release --example karate_comparison`.

use std::time::Instant;

use learnable_mmf::baselines::{greedy_mmf, nystrom};
use learnable_mmf::graphgen::{karate_graph, normalized_laplacian};
use learnable_mmf::mmf::{levels_for_core_size, objective, MmfConfig};
use learnable_mmf::rlpolicy::{train, TrainConfig};
use learnable_mmf::seeding;

fn main() -> learnable_mmf::Result<()> {
    let a = normalized_laplacian(&karate_graph())?;
    let n = a.dim();
    println!("core_size,greedy,nystrom_mean,learnable_mean,seconds");
    for core_size in [6, 8, 10, 12] {
        let start = Instant::now();
        let levels = levels_for_core_size(n, 1, core_size)?;
        let greedy = objective(&a, &greedy_mmf(&a, levels)?)?.sqrt();

        let mut nys = 0.0;
        for seed in 0..20 {
            nys += nystrom(&a, core_size, &mut seeding::stream(seed, "nystrom"))?.error;
        }
        nys /= 20.0;

        let mut learned = 0.0;
        for seed in 0..5 {
            let mut mmf = MmfConfig::new(levels, 8, 1);
            mmf.seed = seed;
            learned += train(&a, &TrainConfig::new(mmf))?.error;
        }
        learned /= 5.0;
        println!(
            "{core_size},{greedy:.6},{nys:.6},{learned:.6},{:.1}",
            start.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
