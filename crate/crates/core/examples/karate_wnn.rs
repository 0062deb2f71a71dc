//! Semi-supervised node classification on the karate club with a wavelet
//! network over a learned MMF basis, from two labeled nodes per faction.
//!
//! Run with `cargo run --release --example karate_wnn`.

use learnable_mmf::graphgen::{karate_factions, karate_graph, normalized_laplacian};
use learnable_mmf::mmf::{levels_for_core_size, MmfConfig};
use learnable_mmf::rlpolicy::{train, TrainConfig};
use learnable_mmf::seeding;
use learnable_mmf::wavelets::{extract_basis, BasisMode};
use learnable_mmf::wnn::{
    self, AdamConfig, NodeFeatures, Split, WnnModel, DEFAULT_DIFFUSION_STEPS,
};

fn main() -> learnable_mmf::Result<()> {
    let a = normalized_laplacian(&karate_graph())?;
    let n = a.dim();
    let levels = levels_for_core_size(n, 1, 8)?;
    let factorization = train(&a, &TrainConfig::new(MmfConfig::new(levels, 8, 1)))?.factorization;
    let basis = extract_basis(&a, &factorization, BasisMode::Orthonormal)?;

    let labels = karate_factions();
    let features = wnn::node_features(&a, NodeFeatures::Diffusion, DEFAULT_DIFFUSION_STEPS);
    let split = Split::complement(n, vec![0, 1, 32, 33])?;
    let model = WnnModel::initialized(basis, &[n, 2], &mut seeding::stream(0, "wnn-init"))?;
    let (_, trace) = wnn::train(
        &model,
        &features,
        &labels,
        &split,
        256,
        &AdamConfig::default(),
    )?;

    println!("epoch,loss,test_accuracy");
    for r in trace.iter().filter(|r| r.epoch % 32 == 0 || r.epoch == 255) {
        println!("{},{:.4},{:.3}", r.epoch, r.loss, r.accuracy);
    }
    Ok(())
}
