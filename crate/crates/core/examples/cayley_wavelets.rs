//! Wavelet basis of a Cayley tree: localization of the first mother wavelets
//! and an exact analysis/synthesis round trip.
//!
//! Run with `cargo run --release --example cayley_wavelets`.

use learnable_mmf::baselines::greedy_mmf;
use learnable_mmf::graphgen::{cayley_tree, normalized_laplacian};
use learnable_mmf::wavelets::{
    extract_basis, mass_concentration, BasisMode, WaveletLabel, SPARSITY_TOL,
};

fn main() -> learnable_mmf::Result<()> {
    let a = normalized_laplacian(&cayley_tree(3, 4)?)?;
    let n = a.dim();
    let f = greedy_mmf(&a, 30)?;
    let basis = extract_basis(&a, &f, BasisMode::Orthonormal)?;
    println!(
        "n = {n}, mothers = {}, fathers = {}",
        basis.mother_count(),
        basis.father_count()
    );
    println!("orthogonality error {:.2e}", basis.orthogonality_error());
    println!("nonzero fraction    {:.3}", basis.sparsity(SPARSITY_TOL));

    println!("first mother wavelets (share of energy on the 4 largest entries):");
    for (row, label) in basis.labels().iter().enumerate() {
        if let WaveletLabel::Mother { level, index } = label {
            if *level <= 5 {
                let w: Vec<f64> = basis.rows().row(row).iter().copied().collect();
                println!(
                    "  level {level:2} node {index:2}: {:.3}",
                    mass_concentration(&w, 4)
                );
            }
        }
    }

    let signal: Vec<f64> = (0..n).map(|v| (v as f64 * 0.3).sin()).collect();
    let coefficients = basis.transform(&signal)?;
    let back = basis.inverse_transform(&coefficients)?;
    let err = signal
        .iter()
        .zip(&back)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    println!("round-trip error    {err:.2e}");
    Ok(())
}
