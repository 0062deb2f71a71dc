//! Dense symmetric-matrix kernel.
//!
//! Everything the factorization needs from linear algebra lives here: the
//! [`SymMatrix`] container, sorted coordinate sets, `k`-point rotations and
//! their sparse conjugation, the core-diagonal projection, and a cyclic
//! Jacobi eigensolver for small symmetric matrices.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Asymmetry accepted at construction before symmetrizing.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Maximum deviation of `OᵀO` from identity for a rotation core.
pub const ORTHOGONALITY_TOL: f64 = 1e-8;

const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_OFF_TOL: f64 = 1e-12;

/// Dense symmetric `n × n` real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    m: DMatrix<f64>,
}

impl SymMatrix {
    /// Wraps a square matrix, rejecting asymmetry above `1e-12` (relative to
    /// the largest entry) and symmetrizing the rest.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "expected square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() == 0 {
            return Err(Error::Size("matrix dimension must be at least 1".into()));
        }
        let scale = m.amax().max(1.0);
        let asym = max_asymmetry(&m);
        if !asym.is_finite() || asym > SYMMETRY_TOL * scale {
            return Err(Error::NotSymmetric(asym));
        }
        Ok(Self::symmetrized(m))
    }

    pub fn from_row_major(n: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries, got {}",
                n * n,
                entries.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(n, n, &entries))
    }

    /// Builds from `f(i, j)` evaluated on the lower triangle and mirrored.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = f(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        SymMatrix { m }
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix {
            m: DMatrix::identity(n, n),
        }
    }

    pub fn zeros(n: usize) -> Self {
        SymMatrix {
            m: DMatrix::zeros(n, n),
        }
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        SymMatrix {
            m: DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(d)),
        }
    }

    /// Averages `m` with its transpose. Caller guarantees near-symmetry.
    pub(crate) fn symmetrized(mut m: DMatrix<f64>) -> Self {
        let n = m.nrows();
        for i in 0..n {
            for j in 0..i {
                let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        SymMatrix { m }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    pub fn row_major(&self) -> Vec<f64> {
        // symmetric, so column-major storage is also row-major
        self.m.as_slice().to_vec()
    }

    /// `[A]_{rows, cols}` as a dense block.
    pub fn submatrix(&self, rows: &IndexSet, cols: &IndexSet) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), cols.len(), |a, b| self.m[(rows[a], cols[b])])
    }

    /// Principal block `[A]_{S,S}`.
    pub fn principal(&self, set: &IndexSet) -> SymMatrix {
        SymMatrix {
            m: self.submatrix(set, set),
        }
    }

    /// `self + shift * I`.
    pub fn shifted(&self, shift: f64) -> SymMatrix {
        let mut m = self.m.clone();
        for i in 0..self.dim() {
            m[(i, i)] += shift;
        }
        SymMatrix { m }
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| i == j || self.m[(i, j)].abs() <= tol))
    }
}

fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..i {
            let d = (m[(i, j)] - m[(j, i)]).abs();
            if d.is_nan() {
                return f64::NAN;
            }
            worst = worst.max(d);
        }
    }
    worst
}

/// Strictly increasing list of 0-based coordinates drawn from `0..universe`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IndexSet {
    indices: Vec<usize>,
    universe: usize,
}

impl IndexSet {
    /// Sorts `indices`; duplicates or out-of-range entries are errors.
    pub fn new(mut indices: Vec<usize>, universe: usize) -> Result<Self> {
        indices.sort_unstable();
        for w in indices.windows(2) {
            if w[0] == w[1] {
                return Err(Error::InvalidArgument(format!("duplicate index {}", w[0])));
            }
        }
        if let Some(&last) = indices.last() {
            if last >= universe {
                return Err(Error::InvalidIndex {
                    index: last,
                    dim: universe,
                });
            }
        }
        Ok(IndexSet { indices, universe })
    }

    pub fn full(universe: usize) -> Self {
        IndexSet {
            indices: (0..universe).collect(),
            universe,
        }
    }

    pub fn empty(universe: usize) -> Self {
        IndexSet {
            indices: Vec::new(),
            universe,
        }
    }

    pub fn singleton(index: usize, universe: usize) -> Result<Self> {
        Self::new(vec![index], universe)
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.indices
    }

    pub fn iter(&self) -> std::iter::Copied<std::slice::Iter<'_, usize>> {
        self.indices.iter().copied()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&index).is_ok()
    }

    /// Position of `index` inside the sorted list.
    pub fn position(&self, index: usize) -> Option<usize> {
        self.indices.binary_search(&index).ok()
    }

    pub fn is_subset(&self, other: &IndexSet) -> bool {
        self.universe == other.universe && self.iter().all(|i| other.contains(i))
    }

    pub fn difference(&self, other: &IndexSet) -> IndexSet {
        IndexSet {
            indices: self.iter().filter(|&i| !other.contains(i)).collect(),
            universe: self.universe,
        }
    }

    /// Boolean membership mask of length `universe`.
    pub fn mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.universe];
        for i in self.iter() {
            mask[i] = true;
        }
        mask
    }
}

impl std::ops::Index<usize> for IndexSet {
    type Output = usize;

    fn index(&self, pos: usize) -> &usize {
        &self.indices[pos]
    }
}

/// A `k`-point rotation: the identity except on `support`, where it acts as
/// the orthogonal `k × k` `core`. Row/column `a` of the core maps to
/// coordinate `support[a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rotation {
    support: IndexSet,
    core: DMatrix<f64>,
}

impl Rotation {
    pub fn new(support: IndexSet, core: DMatrix<f64>) -> Result<Self> {
        let k = support.len();
        if k < 2 {
            return Err(Error::InvalidArgument(format!(
                "rotation order must be at least 2, got {k}"
            )));
        }
        if core.nrows() != k || core.ncols() != k {
            return Err(Error::DimensionMismatch(format!(
                "core is {}x{} but support has {k} indices",
                core.nrows(),
                core.ncols()
            )));
        }
        let dev = orthogonality_error(&core);
        if !(dev <= ORTHOGONALITY_TOL) {
            return Err(Error::NotOrthogonal(dev));
        }
        Ok(Rotation { support, core })
    }

    pub fn identity(support: IndexSet) -> Result<Self> {
        let k = support.len();
        Self::new(support, DMatrix::identity(k, k))
    }

    /// Givens rotation on `(i, j)` with core `[[cos θ, −sin θ], [sin θ, cos θ]]`,
    /// where the first row belongs to the smaller index.
    pub fn givens(i: usize, j: usize, n: usize, theta: f64) -> Result<Self> {
        let support = IndexSet::new(vec![i, j], n)?;
        Self::new(support, givens_core(theta))
    }

    pub fn k(&self) -> usize {
        self.support.len()
    }

    pub fn support(&self) -> &IndexSet {
        &self.support
    }

    pub fn core(&self) -> &DMatrix<f64> {
        &self.core
    }

    pub fn transpose(&self) -> Rotation {
        Rotation {
            support: self.support.clone(),
            core: self.core.transpose(),
        }
    }
}

pub fn givens_core(theta: f64) -> DMatrix<f64> {
    let (s, c) = theta.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

/// `max |XᵀX − I|`.
pub fn orthogonality_error(x: &DMatrix<f64>) -> f64 {
    let gram = x.transpose() * x;
    let p = gram.nrows();
    let mut worst = 0.0_f64;
    for i in 0..p {
        for j in 0..p {
            let target = if i == j { 1.0 } else { 0.0 };
            let d = (gram[(i, j)] - target).abs();
            if d.is_nan() {
                return f64::NAN;
            }
            worst = worst.max(d);
        }
    }
    worst
}

/// Symmetric matrix that vanishes off the diagonal except on the
/// `core_support × core_support` block.
#[derive(Debug, Clone, PartialEq)]
pub struct CoreDiagonal {
    pub n: usize,
    pub core_support: IndexSet,
    pub core: DMatrix<f64>,
    /// Diagonal of the full matrix (core diagonal entries included).
    pub diag: Vec<f64>,
}

impl CoreDiagonal {
    pub fn to_sym(&self) -> SymMatrix {
        let mut m = DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&self.diag));
        let s = &self.core_support;
        for a in 0..s.len() {
            for b in 0..s.len() {
                m[(s[a], s[b])] = self.core[(a, b)];
            }
        }
        SymMatrix::symmetrized(m)
    }
}

pub fn frobenius_norm(m: &SymMatrix) -> f64 {
    m.as_matrix().norm()
}

/// Squared mass outside the diagonal and outside `core × core`.
pub fn residual_norm_sq(m: &SymMatrix, core_support: &IndexSet) -> f64 {
    let n = m.dim();
    let in_core = core_support.mask();
    let mut sum = 0.0;
    for j in 0..n {
        for i in 0..n {
            if i != j && !(in_core[i] && in_core[j]) {
                let v = m.get(i, j);
                sum += v * v;
            }
        }
    }
    sum
}

/// Dense `n × n` matrix `I_{n−k} ⊕_I O`.
pub fn embed_rotation(r: &Rotation, n: usize) -> Result<DMatrix<f64>> {
    check_support(r.support(), n)?;
    let mut u = DMatrix::identity(n, n);
    let s = r.support();
    for a in 0..s.len() {
        for b in 0..s.len() {
            u[(s[a], s[b])] = r.core()[(a, b)];
        }
    }
    Ok(u)
}

fn check_support(support: &IndexSet, n: usize) -> Result<()> {
    if let Some(&bad) = support.as_slice().iter().find(|&&i| i >= n) {
        return Err(Error::InvalidIndex { index: bad, dim: n });
    }
    if support.universe() != n {
        return Err(Error::DimensionMismatch(format!(
            "rotation acts on dimension {} but matrix has dimension {n}",
            support.universe()
        )));
    }
    Ok(())
}

/// `U m Uᵀ`, touching only the support rows and columns.
pub fn conjugate(m: &SymMatrix, r: &Rotation) -> Result<SymMatrix> {
    check_support(r.support(), m.dim())?;
    let mut out = m.as_matrix().clone();
    conjugate_in_place(&mut out, r.support(), r.core());
    Ok(SymMatrix { m: out })
}

/// `Uᵀ m U`, the inverse of [`conjugate`].
pub fn conjugate_transpose(m: &SymMatrix, r: &Rotation) -> Result<SymMatrix> {
    check_support(r.support(), m.dim())?;
    let mut out = m.as_matrix().clone();
    conjugate_in_place(&mut out, r.support(), &r.core().transpose());
    Ok(SymMatrix { m: out })
}

/// In-place `m ← U m Uᵀ` with `U = I ⊕_support core`, for symmetric `m`.
///
/// Only the support rows and columns change: they become `C = m[:, I] Oᵀ`,
/// except the `I × I` block, which becomes `O C[I, :]`.
pub(crate) fn conjugate_in_place(m: &mut DMatrix<f64>, support: &IndexSet, core: &DMatrix<f64>) {
    let n = m.nrows();
    let k = support.len();
    let gathered = DMatrix::from_fn(n, k, |i, b| m[(i, support[b])]);
    let cols = gathered * core.transpose();
    let inner = DMatrix::from_fn(k, k, |b, c| cols[(support[b], c)]);
    let block = core * inner;
    for a in 0..k {
        let j = support[a];
        for i in 0..n {
            let v = cols[(i, a)];
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    for a in 0..k {
        for c in 0..k {
            m[(support[a], support[c])] = 0.5 * (block[(a, c)] + block[(c, a)]);
        }
    }
}

/// Keeps the diagonal and the core block, zeroing everything else.
pub fn core_diagonal_projection(m: &SymMatrix, core_support: &IndexSet) -> CoreDiagonal {
    CoreDiagonal {
        n: m.dim(),
        core_support: core_support.clone(),
        core: m.submatrix(core_support, core_support),
        diag: (0..m.dim()).map(|i| m.get(i, i)).collect(),
    }
}

/// Eigendecomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `i` is the eigenvector for `values[i]`.
    pub vectors: DMatrix<f64>,
}

/// Cyclic Jacobi eigensolver.
///
/// Sweeps over all off-diagonal pairs until the off-diagonal Frobenius mass
/// drops below `1e-12 · max(1, ‖m‖_F)`; at most 100 sweeps.
pub fn sym_eigh(m: &SymMatrix) -> Result<SymEigen> {
    let n = m.dim();
    if n > 1024 {
        return Err(Error::Size(format!(
            "eigensolver limited to n <= 1024, got {n}"
        )));
    }
    let mut a = m.as_matrix().clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let tol = JACOBI_OFF_TOL * frobenius_norm(m).max(1.0);

    let off_mass = |a: &DMatrix<f64>| {
        let mut s = 0.0;
        for j in 0..n {
            for i in 0..j {
                s += 2.0 * a[(i, j)] * a[(i, j)];
            }
        }
        s.sqrt()
    };

    let mut converged = off_mass(&a) <= tol;
    let mut sweep = 0;
    while !converged && sweep < JACOBI_MAX_SWEEPS {
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // columns p, q
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                // rows p, q
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
        sweep += 1;
        let off = off_mass(&a);
        if !off.is_finite() {
            return Err(Error::Numerical(
                "non-finite entries in Jacobi sweep".into(),
            ));
        }
        converged = off <= tol;
    }
    if !converged {
        return Err(Error::Numerical(format!(
            "Jacobi eigensolver did not converge in {JACOBI_MAX_SWEEPS} sweeps"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(SymEigen { values, vectors })
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    pub fn random_sym(n: usize, rng: &mut impl Rng) -> SymMatrix {
        SymMatrix::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
    }

    /// Orthogonal matrix from Gram–Schmidt on a random Gaussian-ish matrix.
    pub fn random_orthogonal(k: usize, rng: &mut impl Rng) -> DMatrix<f64> {
        let m = DMatrix::from_fn(k, k, |_, _| rng.random_range(-1.0..1.0));
        m.qr().q()
    }

    pub fn random_subset(n: usize, k: usize, rng: &mut impl Rng) -> IndexSet {
        let picked = rand::seq::index::sample(rng, n, k).into_vec();
        IndexSet::new(picked, n).unwrap()
    }
}
