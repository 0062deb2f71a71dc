//! The benchmark generators and their sizes, written as MatrixMarket files.
//!
//! Run with `cargo run --release --example datasets -- <output-dir>`.

use std::path::PathBuf;

use learnable_mmf::graphgen::{
    cayley_tree, karate_graph, kronecker_matrix, normalized_laplacian, write_matrix_market,
};
use learnable_mmf::mmf::final_core_size;

fn main() -> learnable_mmf::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "datasets".into()));

    let karate = karate_graph();
    println!(
        "karate      N = {:3}, E = {}",
        karate.n(),
        karate.edges().len()
    );
    write_matrix_market(&normalized_laplacian(&karate)?, out.join("karate.mtx"))?;

    let kronecker = kronecker_matrix([[0.0, 1.0], [1.0, 1.0]], 9)?;
    println!(
        "kronecker   N = {:3}, core after 62 levels of 8 = {}",
        kronecker.dim(),
        final_core_size(512, 8, 62)?
    );
    write_matrix_market(&kronecker, out.join("kronecker.mtx"))?;

    for (z, depth) in [(4, 4), (3, 4)] {
        let tree = cayley_tree(z, depth)?;
        println!(
            "cayley z={z}  N = {:3}, E = {}",
            tree.n(),
            tree.edges().len()
        );
        write_matrix_market(
            &normalized_laplacian(&tree)?,
            out.join(format!("cayley_{z}_{depth}.mtx")),
        )?;
    }
    println!("written to {}", out.display());
    Ok(())
}
