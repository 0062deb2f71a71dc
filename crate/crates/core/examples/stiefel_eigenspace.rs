//! Dominant eigenspace of a symmetric matrix by curvilinear search on the
//! Stiefel manifold: maximize `tr(XᵀAX)` over `n × p` matrices with
//! orthonormal columns.
//!
//! Run with `cargo run --release --example stiefel_eigenspace`.

use learnable_mmf::matcore::{sym_eigh, SymMatrix};
use learnable_mmf::seeding;
use learnable_mmf::stiefel::{minimize, FnObjective, SearchParams, StiefelPoint};
use nalgebra::DMatrix;
use rand::Rng;

fn main() -> learnable_mmf::Result<()> {
    let (n, p) = (20, 3);
    let mut rng = seeding::stream(7, "example");
    let noise = DMatrix::from_fn(n, n, |_, _| rng.random_range(-0.5..0.5));
    let spread = DMatrix::from_fn(n, n, |i, j| if i == j { (i + 1) as f64 } else { 0.0 });
    let a = SymMatrix::new(spread + (&noise + noise.transpose()) * 0.5)?;

    let m = a.as_matrix().clone();
    let m2 = m.clone();
    let objective = FnObjective {
        value: move |x: &DMatrix<f64>| -(x.transpose() * &m * x).trace(),
        gradient: move |x: &DMatrix<f64>| -2.0 * &m2 * x,
    };
    let result = minimize(
        &objective,
        &StiefelPoint::identity(n, p),
        &SearchParams::default(),
    )?;

    let eig = sym_eigh(&a)?;
    let best: f64 = eig.values.iter().rev().take(p).sum();
    println!("iterations          {}", result.iterations);
    println!("converged           {}", result.converged);
    println!("trace found         {:.12}", -result.values.last().unwrap());
    println!("top-{p} eigenvalue sum {best:.12}");
    println!("max |XᵀX − I|       {:.2e}", result.max_feasibility_error);
    Ok(())
}
