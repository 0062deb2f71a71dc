//! Reference methods: greedy Jacobi-style MMF with Givens rotations and the
//! Nyström column-sampling approximation.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matcore::{conjugate_in_place, givens_core, sym_eigh, IndexSet, SymMatrix};
use crate::mmf::{Factorization, LevelPlan};

/// Entries of the 2×2 diagonal block and the outside Gram block of a
/// candidate pair `(i, j)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PairTerms {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
    pub b11: f64,
    pub b12: f64,
    pub b22: f64,
}

impl PairTerms {
    /// Error left in the retired row after rotating by `θ`: twice the squared
    /// coupling to the kept index plus twice its mass outside the pair.
    pub fn local_error(&self, theta: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        let x = s * c * (self.a11 - self.a22) + (c * c - s * s) * self.a12;
        let y = s * s * self.b11 + 2.0 * s * c * self.b12 + c * c * self.b22;
        2.0 * x * x + 2.0 * y
    }
}

const GRID: usize = 64;
const GOLDEN_TOL: f64 = 1e-12;

/// Minimizes [`PairTerms::local_error`] over `[0, 2π)`: a uniform grid, then
/// golden-section refinement inside the bracket of every grid local minimum.
/// Returns `(θ, E(θ))`; on exact ties the smaller angle wins.
pub fn givens_best_angle(terms: &PairTerms) -> (f64, f64) {
    let step = TAU / GRID as f64;
    let values: Vec<f64> = (0..GRID)
        .map(|g| terms.local_error(g as f64 * step))
        .collect();
    let mut best = (0.0, values[0]);
    for g in 1..GRID {
        if values[g] < best.1 {
            best = (g as f64 * step, values[g]);
        }
    }
    for g in 0..GRID {
        let prev = values[(g + GRID - 1) % GRID];
        let next = values[(g + 1) % GRID];
        if values[g] <= prev && values[g] <= next {
            let center = g as f64 * step;
            let (theta, e) = golden_section(|t| terms.local_error(t), center - step, center + step);
            if e < best.1 {
                best = (theta.rem_euclid(TAU), e);
            }
        }
    }
    best
}

fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > GOLDEN_TOL {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Terms for the pair `(i, j)` of the current matrix, where `gram` holds
/// `Σ_{m ∈ S} a_im a_jm` over the active set `S`.
fn pair_terms(m: &DMatrix<f64>, gram: &DMatrix<f64>, i: usize, j: usize) -> PairTerms {
    let (aii, aij, ajj) = (m[(i, i)], m[(i, j)], m[(j, j)]);
    PairTerms {
        a11: aii,
        a12: aij,
        a22: ajj,
        b11: (gram[(i, i)] - aii * aii - aij * aij).max(0.0),
        b12: gram[(i, j)] - aii * aij - aij * ajj,
        b22: (gram[(j, j)] - aij * aij - ajj * ajj).max(0.0),
    }
}

fn active_gram(m: &DMatrix<f64>, active: &IndexSet) -> DMatrix<f64> {
    let n = m.nrows();
    let mut g = DMatrix::zeros(n, n);
    for u in active.iter() {
        for v in active.iter() {
            if v < u {
                continue;
            }
            let dot: f64 = active.iter().map(|w| m[(u, w)] * m[(v, w)]).sum();
            g[(u, v)] = dot;
            g[(v, u)] = dot;
        }
    }
    g
}

fn refresh_gram_rows(g: &mut DMatrix<f64>, m: &DMatrix<f64>, active: &IndexSet, rows: [usize; 2]) {
    for u in rows {
        for v in active.iter() {
            let dot: f64 = active.iter().map(|w| m[(u, w)] * m[(v, w)]).sum();
            g[(u, v)] = dot;
            g[(v, u)] = dot;
        }
    }
}

/// Greedy MMF with Givens rotations: at each level every active pair
/// `i < j` is scored by its best local error and the winner (lowest `(i, j)`
/// on ties) is rotated, retiring `j`. Runs `levels` levels with one wavelet
/// each.
pub fn greedy_mmf(a: &SymMatrix, levels: usize) -> Result<Factorization> {
    let n = a.dim();
    if levels == 0 || levels >= n {
        return Err(Error::Size(format!(
            "greedy MMF needs 1 <= levels < n, got {levels} for n = {n}"
        )));
    }
    let mut m = a.as_matrix().clone();
    let mut active = IndexSet::full(n);
    let mut gram = active_gram(&m, &active);
    let mut plans = Vec::with_capacity(levels);
    let mut cores = Vec::with_capacity(levels);
    for _ in 0..levels {
        let idx = active.as_slice();
        let best = (0..idx.len())
            .into_par_iter()
            .filter_map(|p| {
                let mut local: Option<(f64, usize, usize, f64)> = None;
                for q in p + 1..idx.len() {
                    let (theta, e) = givens_best_angle(&pair_terms(&m, &gram, idx[p], idx[q]));
                    if local.is_none_or(|(be, ..)| e < be) {
                        local = Some((e, idx[p], idx[q], theta));
                    }
                }
                local
            })
            .collect::<Vec<_>>()
            .into_iter()
            .reduce(|acc, cand| if cand.0 < acc.0 { cand } else { acc })
            .ok_or_else(|| Error::Size("fewer than two active indices".into()))?;
        let (_, i, j, theta) = best;
        let support = IndexSet::new(vec![i, j], n)?;
        let core = givens_core(theta);
        conjugate_in_place(&mut m, &support, &core);
        refresh_gram_rows(&mut gram, &m, &active, [i, j]);
        let wavelets = IndexSet::singleton(j, n)?;
        active = active.difference(&wavelets);
        for u in active.iter() {
            for v in active.iter() {
                gram[(u, v)] -= m[(u, j)] * m[(v, j)];
            }
        }
        plans.push(LevelPlan::new(support, wavelets)?);
        cores.push(core);
    }
    Factorization::from_cores(a, 2, 1, &plans, cores)
}

/// Sampled columns of a Nyström approximation `A ≈ C W† Cᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct NystromSketch {
    pub sampled_columns: IndexSet,
    /// `A[:, sampled]`.
    pub c: DMatrix<f64>,
    /// `A[sampled, sampled]`.
    pub w: DMatrix<f64>,
}

#[derive(Debug, Clone)]
pub struct NystromResult {
    pub sketch: NystromSketch,
    pub approx: SymMatrix,
    pub error: f64,
}

/// Pseudoinverse through the eigendecomposition, dropping eigenvalues below
/// `1e-10` of the largest magnitude.
fn pseudo_inverse(w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = sym_eigh(&SymMatrix::symmetrized(w.clone()))?;
    let max = eig.values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let d = w.nrows();
    let mut out = DMatrix::zeros(d, d);
    for (idx, &lambda) in eig.values.iter().enumerate() {
        if lambda.abs() > 1e-10 * max && lambda != 0.0 {
            let v = eig.vectors.column(idx);
            out += (v * v.transpose()) / lambda;
        }
    }
    Ok(out)
}

/// Nyström approximation from `columns` columns sampled uniformly without
/// replacement. Returns the sketch, `C W† Cᵀ` and `‖A − C W† Cᵀ‖_F`.
pub fn nystrom(a: &SymMatrix, columns: usize, rng: &mut impl Rng) -> Result<NystromResult> {
    let n = a.dim();
    if columns == 0 || columns > n {
        return Err(Error::InvalidArgument(format!(
            "cannot sample {columns} of {n} columns"
        )));
    }
    let picked = rand::seq::index::sample(rng, n, columns).into_vec();
    nystrom_with_columns(a, IndexSet::new(picked, n)?)
}

/// Nyström approximation from a fixed column set.
pub fn nystrom_with_columns(a: &SymMatrix, sampled: IndexSet) -> Result<NystromResult> {
    let c = a.submatrix(&IndexSet::full(a.dim()), &sampled);
    let w = a.submatrix(&sampled, &sampled);
    let approx = SymMatrix::symmetrized(&c * pseudo_inverse(&w)? * c.transpose());
    let error = (a.as_matrix() - approx.as_matrix()).norm();
    Ok(NystromResult {
        sketch: NystromSketch {
            sampled_columns: sampled,
            c,
            w,
        },
        approx,
        error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphgen::{karate_graph, normalized_laplacian};
    use crate::matcore::testutil::{random_sym, rng};
    use crate::mmf::{level_errors, objective, reconstruct};
    use std::f64::consts::FRAC_PI_4;

    fn random_terms(rng: &mut impl Rng) -> PairTerms {
        let bvec: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        // B is a Gram matrix of two vectors, hence positive semidefinite
        let (u, v) = (&bvec[..3], &bvec[3..]);
        let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
        PairTerms {
            a11: rng.random_range(-2.0..2.0),
            a12: rng.random_range(-2.0..2.0),
            a22: rng.random_range(-2.0..2.0),
            b11: dot(u, u),
            b12: dot(u, v),
            b22: dot(v, v),
        }
    }

    #[test]
    fn jacobi_annihilation_without_outside_mass() {
        let mut rng = rng(1);
        for _ in 0..50 {
            let t = PairTerms {
                b11: 0.0,
                b12: 0.0,
                b22: 0.0,
                ..random_terms(&mut rng)
            };
            let (theta, e) = givens_best_angle(&t);
            assert!(e < 1e-20);
            let a = DMatrix::from_row_slice(2, 2, &[t.a11, t.a12, t.a12, t.a22]);
            let o = givens_core(theta);
            assert!((&o * a * o.transpose())[(1, 0)].abs() < 1e-10);
            // classical Jacobi angle also annihilates
            let jac = 0.5 * (2.0 * t.a12).atan2(t.a22 - t.a11);
            assert!(t.local_error(jac) < 1e-20);
        }
    }

    #[test]
    fn diagonal_blocks_keep_zero_angle() {
        let t = PairTerms {
            a11: 3.0,
            a12: 0.0,
            a22: 1.0,
            b11: 2.0,
            b12: 0.0,
            b22: 0.5,
        };
        assert_eq!(givens_best_angle(&t), (0.0, 1.0));
    }

    #[test]
    fn angle_search_beats_dense_grid() {
        let mut rng = rng(2);
        for _ in 0..100 {
            let t = random_terms(&mut rng);
            let (_, e) = givens_best_angle(&t);
            let grid = (0..10_000)
                .map(|g| t.local_error(g as f64 * TAU / 10_000.0))
                .fold(f64::INFINITY, f64::min);
            assert!(e <= grid + 1e-9);
        }
    }

    #[test]
    fn local_error_is_the_level_error() {
        let mut rng = rng(3);
        let a = random_sym(7, &mut rng);
        let active = IndexSet::full(7);
        let gram = active_gram(a.as_matrix(), &active);
        let (i, j) = (1, 4);
        let terms = pair_terms(a.as_matrix(), &gram, i, j);
        let theta = 0.37;
        let mut m = a.as_matrix().clone();
        let support = IndexSet::new(vec![i, j], 7).unwrap();
        conjugate_in_place(&mut m, &support, &givens_core(theta));
        let wav = IndexSet::singleton(j, 7).unwrap();
        let direct = crate::mmf::level_error(&m, &wav, &active.difference(&wav));
        assert!((terms.local_error(theta) - direct).abs() < 1e-12);
    }

    #[test]
    fn greedy_exact_two_by_two() {
        let a = SymMatrix::from_row_major(2, vec![2.0, 1.0, 1.0, 2.0]).unwrap();
        let f = greedy_mmf(&a, 1).unwrap();
        assert!(objective(&a, &f).unwrap() <= 1e-10);
        assert!((f.rotations()[0].core()[(0, 0)].abs() - FRAC_PI_4.cos()).abs() < 1e-9);
    }

    #[test]
    fn greedy_on_diagonal_is_exact() {
        let a = SymMatrix::from_diagonal(&[4.0, 3.0, 2.0, 1.0]);
        let f = greedy_mmf(&a, 3).unwrap();
        assert_eq!(objective(&a, &f).unwrap(), 0.0);
        assert_eq!(f.rotations()[0].support().as_slice(), &[0, 1]);
        assert_eq!(f.rotations()[0].core(), &DMatrix::identity(2, 2));
    }

    #[test]
    fn greedy_level_choice_matches_brute_force() {
        let mut rng = rng(4);
        let a = random_sym(6, &mut rng);
        let f = greedy_mmf(&a, 1).unwrap();
        let mut best = f64::INFINITY;
        for i in 0..6 {
            for j in i + 1..6 {
                let wav = IndexSet::singleton(j, 6).unwrap();
                let rest = IndexSet::full(6).difference(&wav);
                let support = IndexSet::new(vec![i, j], 6).unwrap();
                for g in 0..2000 {
                    let mut m = a.as_matrix().clone();
                    conjugate_in_place(&mut m, &support, &givens_core(g as f64 * TAU / 2000.0));
                    best = best.min(crate::mmf::level_error(&m, &wav, &rest));
                }
            }
        }
        assert!(objective(&a, &f).unwrap() <= best + 1e-9);
    }

    #[test]
    fn greedy_on_karate_is_consistent() {
        let a = normalized_laplacian(&karate_graph()).unwrap();
        let f = greedy_mmf(&a, 26).unwrap();
        assert_eq!(f.final_active().len(), 8);
        let errs = level_errors(&a, &f).unwrap();
        assert!(errs.iter().all(|&e| e >= 0.0));
        let obj = objective(&a, &f).unwrap();
        let recon = (a.as_matrix() - reconstruct(&f).as_matrix()).norm_squared();
        assert!((obj - recon).abs() < 1e-9);
        // incremental Gram bookkeeping matches a fresh computation
        let mut m = a.as_matrix().clone();
        let mut active = IndexSet::full(34);
        for (r, t) in f.rotations().iter().zip(f.wavelet_sets()) {
            let fresh = active_gram(&m, &active);
            let (i, j) = (r.support()[0], r.support()[1]);
            let (_, e) = givens_best_angle(&pair_terms(&m, &fresh, i, j));
            conjugate_in_place(&mut m, r.support(), r.core());
            active = active.difference(t);
            assert!((crate::mmf::level_error(&m, t, &active) - e).abs() < 1e-9);
        }
        assert!(greedy_mmf(&a, 34).is_err());
    }

    #[test]
    fn nystrom_full_sample_is_exact() {
        let mut rng = rng(5);
        let a = random_sym(8, &mut rng);
        let res = nystrom(&a, 8, &mut rng).unwrap();
        assert!(res.error < 1e-9);
        assert_eq!(
            res.sketch.w,
            a.submatrix(&res.sketch.sampled_columns, &res.sketch.sampled_columns)
        );
    }

    #[test]
    fn nystrom_low_rank_is_exact() {
        let mut rng = rng(6);
        let v: Vec<f64> = (0..9).map(|_| rng.random_range(0.5..1.5)).collect();
        let rank_one = SymMatrix::from_fn(9, |i, j| v[i] * v[j]);
        for d in 1..=9 {
            assert!(nystrom(&rank_one, d, &mut rng).unwrap().error < 1e-9);
        }
        // rank 3 with a spanning column choice
        let basis = DMatrix::from_fn(9, 3, |_, _| rng.random_range(-1.0..1.0));
        let low = SymMatrix::symmetrized(
            &basis
                * DMatrix::from_diagonal(&nalgebra::dvector![1.0, -2.0, 0.5])
                * basis.transpose(),
        );
        let res = nystrom_with_columns(&low, IndexSet::new(vec![0, 4, 7], 9).unwrap()).unwrap();
        assert!(res.error < 1e-9);
        assert!(nystrom(&low, 0, &mut rng).is_err());
    }
}
