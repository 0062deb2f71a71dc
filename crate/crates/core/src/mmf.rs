//! Multiresolution factorizations `A ≈ U₁ᵀ⋯U_Lᵀ H U_L⋯U₁`.
//!
//! Level `ℓ` applies a rotation `U_ℓ` supported on `I_ℓ ⊆ S_{ℓ−1}` and then
//! retires the wavelet indices `T_ℓ ⊆ I_ℓ`, leaving `S_ℓ = S_{ℓ−1} \ T_ℓ`.
//! The error of a factorization is the squared mass of `A_L = U_L⋯U₁ A U₁ᵀ⋯U_Lᵀ`
//! outside its diagonal and outside `S_L × S_L`.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{
    conjugate_in_place, core_diagonal_projection, orthogonality_error, residual_norm_sq, sym_eigh,
    CoreDiagonal, IndexSet, Rotation, SymMatrix, ORTHOGONALITY_TOL,
};
use crate::stiefel::{minimize_multi, MultiObjective, MultiStrategy, SearchParams, StiefelPoint};

/// Index choice for one level: the rotation support and the wavelet
/// indices it retires.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelPlan {
    pub support: IndexSet,
    pub wavelets: IndexSet,
}

impl LevelPlan {
    pub fn new(support: IndexSet, wavelets: IndexSet) -> Result<Self> {
        if support.len() < 2 {
            return Err(Error::InvalidArgument(
                "rotation support needs at least 2 indices".into(),
            ));
        }
        if wavelets.is_empty() || !wavelets.is_subset(&support) {
            return Err(Error::InvalidArgument(
                "wavelet indices must be a non-empty subset of the support".into(),
            ));
        }
        Ok(LevelPlan { support, wavelets })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Factorization {
    n: usize,
    k: usize,
    c: usize,
    rotations: Vec<Rotation>,
    active_sets: Vec<IndexSet>,
    wavelet_sets: Vec<IndexSet>,
    core: CoreDiagonal,
}

impl Factorization {
    /// Assembles and validates a factorization. `k` is the nominal rotation
    /// order (individual rotations may be smaller when few indices remain)
    /// and `c` the number of wavelets retired per level.
    pub fn new(
        n: usize,
        k: usize,
        c: usize,
        rotations: Vec<Rotation>,
        wavelet_sets: Vec<IndexSet>,
        core: CoreDiagonal,
    ) -> Result<Self> {
        if rotations.len() != wavelet_sets.len() {
            return Err(Error::Invariant(format!(
                "{} rotations but {} wavelet sets",
                rotations.len(),
                wavelet_sets.len()
            )));
        }
        let mut active_sets = vec![IndexSet::full(n)];
        for (level, (rot, t)) in rotations.iter().zip(&wavelet_sets).enumerate() {
            let prev = active_sets.last().unwrap();
            if rot.support().universe() != n || t.universe() != n {
                return Err(Error::Invariant(format!(
                    "level {} acts on the wrong dimension",
                    level + 1
                )));
            }
            if rot.k() > k {
                return Err(Error::Invariant(format!(
                    "level {} rotation order {} exceeds k = {k}",
                    level + 1,
                    rot.k()
                )));
            }
            if !rot.support().is_subset(prev) {
                return Err(Error::Invariant(format!(
                    "level {} rotates retired indices",
                    level + 1
                )));
            }
            if t.len() != c || !t.is_subset(rot.support()) {
                return Err(Error::Invariant(format!(
                    "level {} must retire exactly {c} indices from its support",
                    level + 1
                )));
            }
            active_sets.push(prev.difference(t));
        }
        let last = active_sets.last().unwrap();
        if core.n != n || core.core_support != *last || core.diag.len() != n {
            return Err(Error::Invariant(
                "core does not match the final active set".into(),
            ));
        }
        if core.core.shape() != (last.len(), last.len()) {
            return Err(Error::Invariant("core block has the wrong shape".into()));
        }
        Ok(Factorization {
            n,
            k,
            c,
            rotations,
            active_sets,
            wavelet_sets,
            core,
        })
    }

    /// Builds the factorization of `a` with the given plans and cores, taking
    /// `H` as the core-diagonal projection of `A_L`.
    pub fn from_cores(
        a: &SymMatrix,
        k: usize,
        c: usize,
        plans: &[LevelPlan],
        cores: Vec<DMatrix<f64>>,
    ) -> Result<Self> {
        if plans.len() != cores.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} plans but {} cores",
                plans.len(),
                cores.len()
            )));
        }
        let n = a.dim();
        let rotations = plans
            .iter()
            .zip(cores)
            .map(|(p, core)| Rotation::new(p.support.clone(), core))
            .collect::<Result<Vec<_>>>()?;
        let wavelet_sets: Vec<IndexSet> = plans.iter().map(|p| p.wavelets.clone()).collect();
        let mut final_active = IndexSet::full(n);
        for t in &wavelet_sets {
            final_active = final_active.difference(t);
        }
        let a_last = apply_chain(a, &rotations, rotations.len())?;
        let core = core_diagonal_projection(&a_last, &final_active);
        Factorization::new(n, k, c, rotations, wavelet_sets, core)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn levels(&self) -> usize {
        self.rotations.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn c(&self) -> usize {
        self.c
    }

    pub fn rotations(&self) -> &[Rotation] {
        &self.rotations
    }

    /// `S_0, …, S_L`.
    pub fn active_sets(&self) -> &[IndexSet] {
        &self.active_sets
    }

    /// `T_1, …, T_L`.
    pub fn wavelet_sets(&self) -> &[IndexSet] {
        &self.wavelet_sets
    }

    pub fn core(&self) -> &CoreDiagonal {
        &self.core
    }

    pub fn final_active(&self) -> &IndexSet {
        self.active_sets.last().unwrap()
    }

    pub fn plans(&self) -> Vec<LevelPlan> {
        self.rotations
            .iter()
            .zip(&self.wavelet_sets)
            .map(|(r, t)| LevelPlan {
                support: r.support().clone(),
                wavelets: t.clone(),
            })
            .collect()
    }

    pub fn cores(&self) -> Vec<DMatrix<f64>> {
        self.rotations.iter().map(|r| r.core().clone()).collect()
    }
}

/// Size of the final core, `n − c·L`.
pub fn final_core_size(n: usize, c: usize, levels: usize) -> Result<usize> {
    match c.checked_mul(levels) {
        Some(dropped) if dropped < n => Ok(n - dropped),
        _ => Err(Error::InvalidArgument(format!(
            "{levels} levels dropping {c} each leave nothing of {n}"
        ))),
    }
}

/// Number of levels reaching a final core of size `core_size`.
pub fn levels_for_core_size(n: usize, c: usize, core_size: usize) -> Result<usize> {
    if c == 0 || core_size == 0 || core_size > n || !(n - core_size).is_multiple_of(c) {
        return Err(Error::InvalidArgument(format!(
            "core size {core_size} unreachable from {n} dropping {c} per level"
        )));
    }
    Ok((n - core_size) / c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MmfConfig {
    pub levels: usize,
    /// Nominal rotation order; clamped to the number of active indices.
    pub k: usize,
    /// Wavelets retired per level.
    pub c: usize,
    pub search: SearchParams,
    pub strategy: MultiStrategy,
    pub seed: u64,
}

impl MmfConfig {
    pub fn new(levels: usize, k: usize, c: usize) -> Self {
        MmfConfig {
            levels,
            k,
            c,
            search: SearchParams::default(),
            strategy: MultiStrategy::default(),
            seed: 0,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.c == 0 || self.levels == 0 {
            return Err(Error::InvalidArgument(
                "levels and c must be positive".into(),
            ));
        }
        final_core_size(n, self.c, self.levels)?;
        if self.k < 2 || self.k > n {
            return Err(Error::InvalidArgument(format!(
                "rotation order {} outside [2, {n}]",
                self.k
            )));
        }
        if self.c > self.k {
            return Err(Error::InvalidArgument(format!(
                "cannot retire {} indices with {}-point rotations",
                self.c, self.k
            )));
        }
        self.search.validate()
    }

    /// Rotation order at a level whose active set has `active` indices.
    pub fn effective_k(&self, active: usize) -> usize {
        self.k.min(active)
    }
}

/// `A_ℓ = U_ℓ⋯U₁ A U₁ᵀ⋯U_ℓᵀ`.
pub fn apply_chain(a: &SymMatrix, rotations: &[Rotation], upto: usize) -> Result<SymMatrix> {
    if upto > rotations.len() {
        return Err(Error::InvalidArgument(format!(
            "level {upto} beyond {} rotations",
            rotations.len()
        )));
    }
    let n = a.dim();
    let mut m = a.as_matrix().clone();
    for r in &rotations[..upto] {
        if r.support().universe() != n {
            return Err(Error::DimensionMismatch(format!(
                "rotation on dimension {} applied to {n}",
                r.support().universe()
            )));
        }
        conjugate_in_place(&mut m, r.support(), r.core());
    }
    Ok(SymMatrix::symmetrized(m))
}

fn check_matches(a: &SymMatrix, f: &Factorization) -> Result<()> {
    if a.dim() != f.n {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {}x{} but factorization has n = {}",
            a.dim(),
            a.dim(),
            f.n
        )));
    }
    Ok(())
}

/// `‖A_L‖²_resi`, the squared factorization error.
pub fn objective(a: &SymMatrix, f: &Factorization) -> Result<f64> {
    check_matches(a, f)?;
    let a_last = apply_chain(a, &f.rotations, f.levels())?;
    Ok(residual_norm_sq(&a_last, f.final_active()))
}

/// Residual mass settled at one level: `2‖A[T, S_after]‖² + ‖A[T, T]‖²_off`.
///
/// Rows of retired indices are never rotated again and later rotations only
/// mix the remaining columns, so this mass is final once level `ℓ` is applied.
pub fn level_error(a_level: &DMatrix<f64>, wavelets: &IndexSet, remaining: &IndexSet) -> f64 {
    let mut sum = 0.0;
    for t in wavelets.iter() {
        for j in remaining.iter() {
            sum += 2.0 * a_level[(t, j)].powi(2);
        }
        for u in wavelets.iter() {
            if u != t {
                sum += a_level[(t, u)].powi(2);
            }
        }
    }
    sum
}

/// Per-level split of [`objective`]; the entries sum to the objective.
pub fn level_errors(a: &SymMatrix, f: &Factorization) -> Result<Vec<f64>> {
    check_matches(a, f)?;
    let mut m = a.as_matrix().clone();
    let mut out = Vec::with_capacity(f.levels());
    for (level, r) in f.rotations.iter().enumerate() {
        conjugate_in_place(&mut m, r.support(), r.core());
        out.push(level_error(
            &m,
            &f.wavelet_sets[level],
            &f.active_sets[level + 1],
        ));
    }
    Ok(out)
}

/// Objective over the cores with the index plans held fixed.
pub struct MmfObjective<'a> {
    a: &'a SymMatrix,
    plans: Vec<LevelPlan>,
    final_mask: Vec<bool>,
}

impl<'a> MmfObjective<'a> {
    pub fn new(a: &'a SymMatrix, plans: Vec<LevelPlan>) -> Result<Self> {
        let n = a.dim();
        let mut active = IndexSet::full(n);
        for (level, p) in plans.iter().enumerate() {
            if p.support.universe() != n || !p.support.is_subset(&active) {
                return Err(Error::InvalidArgument(format!(
                    "level {} plan is not inside the active set",
                    level + 1
                )));
            }
            active = active.difference(&p.wavelets);
        }
        Ok(MmfObjective {
            a,
            plans,
            final_mask: active.mask(),
        })
    }

    fn transformed(&self, cores: &[DMatrix<f64>]) -> DMatrix<f64> {
        let mut m = self.a.as_matrix().clone();
        for (p, core) in self.plans.iter().zip(cores) {
            conjugate_in_place(&mut m, &p.support, core);
        }
        m
    }

    fn masked_value(&self, m: &DMatrix<f64>) -> f64 {
        let n = m.nrows();
        let mut sum = 0.0;
        for j in 0..n {
            for i in 0..n {
                if i != j && !(self.final_mask[i] && self.final_mask[j]) {
                    sum += m[(i, j)] * m[(i, j)];
                }
            }
        }
        sum
    }
}

impl MultiObjective for MmfObjective<'_> {
    fn num_vars(&self) -> usize {
        self.plans.len()
    }

    fn value(&self, cores: &[DMatrix<f64>]) -> f64 {
        self.masked_value(&self.transformed(cores))
    }

    /// Backward sweep: with `Γ_L = 2 M ∘ A_L` and `Γ_{ℓ−1} = U_ℓᵀ Γ_ℓ U_ℓ`,
    /// `∂F/∂O_ℓ = 2 [Γ_ℓ A_ℓ]_{I,I} O_ℓ`.
    fn gradients(&self, cores: &[DMatrix<f64>]) -> Vec<DMatrix<f64>> {
        let mut m = self.transformed(cores);
        let n = m.nrows();
        let mut gamma = DMatrix::from_fn(n, n, |i, j| {
            if i != j && !(self.final_mask[i] && self.final_mask[j]) {
                2.0 * m[(i, j)]
            } else {
                0.0
            }
        });
        let mut grads = vec![DMatrix::zeros(0, 0); cores.len()];
        for level in (0..cores.len()).rev() {
            let support = &self.plans[level].support;
            let core = &cores[level];
            let k = support.len();
            // Γ is symmetric, so its support rows are its support columns
            let gamma_cols = DMatrix::from_fn(n, k, |r, a| gamma[(r, support[a])]);
            let m_cols = DMatrix::from_fn(n, k, |r, b| m[(r, support[b])]);
            let block = gamma_cols.tr_mul(&m_cols);
            grads[level] = block * core * 2.0;
            let back = core.transpose();
            conjugate_in_place(&mut m, support, &back);
            conjugate_in_place(&mut gamma, support, &back);
        }
        grads
    }
}

/// `∂F/∂O_ℓ` (0-based `level`) with every other core fixed.
pub fn objective_gradient(a: &SymMatrix, f: &Factorization, level: usize) -> Result<DMatrix<f64>> {
    if level >= f.levels() {
        return Err(Error::InvalidArgument(format!(
            "level {level} out of range for {} levels",
            f.levels()
        )));
    }
    Ok(objective_gradients(a, f)?.swap_remove(level))
}

/// Gradients for all cores at once.
pub fn objective_gradients(a: &SymMatrix, f: &Factorization) -> Result<Vec<DMatrix<f64>>> {
    check_matches(a, f)?;
    Ok(MmfObjective::new(a, f.plans())?.gradients(&f.cores()))
}

/// Result of [`optimize_rotations`].
#[derive(Debug, Clone)]
pub struct OptimizeReport {
    pub factorization: Factorization,
    /// Objective at the start and after each outer iteration.
    pub values: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Optimizes all cores of `f` on their Stiefel manifolds, keeping the index
/// sets, and re-projects `H`.
pub fn optimize_rotations(
    a: &SymMatrix,
    f: &Factorization,
    cfg: &MmfConfig,
) -> Result<OptimizeReport> {
    check_matches(a, f)?;
    let plans = f.plans();
    let obj = MmfObjective::new(a, plans.clone())?;
    let start = f
        .cores()
        .into_iter()
        .map(StiefelPoint::new)
        .collect::<Result<Vec<_>>>()?;
    let res = minimize_multi(&obj, &start, &cfg.search, cfg.strategy)?;
    let factorization = Factorization::from_cores(a, f.k, f.c, &plans, res.xs)?;
    Ok(OptimizeReport {
        factorization,
        values: res.values,
        iterations: res.iterations,
        converged: res.converged,
    })
}

/// Columns are the eigenvectors of `A[support, active] A[support, active]ᵀ`
/// in ascending eigenvalue order, each flipped so its largest-magnitude
/// entry is positive.
pub fn closed_form_core(
    a_prev: &SymMatrix,
    support: &IndexSet,
    active: &IndexSet,
) -> Result<DMatrix<f64>> {
    if !support.is_subset(active) {
        return Err(Error::InvalidArgument(
            "support must lie inside the active set".into(),
        ));
    }
    let block = a_prev.submatrix(support, active);
    let gram = SymMatrix::symmetrized(&block * block.transpose());
    let mut vectors = sym_eigh(&gram)?.vectors;
    for mut col in vectors.column_iter_mut() {
        let peak = col.amax();
        let lead = col
            .iter()
            .position(|v| v.abs() >= peak - 1e-12)
            .unwrap_or(0);
        if col[lead] < 0.0 {
            col.neg_mut();
        }
    }
    Ok(vectors)
}

/// Closed-form rotation core for one level: rows are the eigenvectors of
/// [`closed_form_core`], with the smallest-eigenvalue ones placed at the
/// wavelet positions so the retired rows carry the least energy.
pub fn phase_one_core(
    a_prev: &SymMatrix,
    plan: &LevelPlan,
    active: &IndexSet,
) -> Result<DMatrix<f64>> {
    let vectors = closed_form_core(a_prev, &plan.support, active)?;
    let k = plan.support.len();
    let mut order = Vec::with_capacity(k);
    let wavelet_pos: Vec<usize> = plan
        .wavelets
        .iter()
        .map(|t| plan.support.position(t).unwrap())
        .collect();
    let mut next_small = 0;
    let mut next_large = plan.wavelets.len();
    for pos in 0..k {
        if wavelet_pos.contains(&pos) {
            order.push(next_small);
            next_small += 1;
        } else {
            order.push(next_large);
            next_large += 1;
        }
    }
    Ok(DMatrix::from_fn(k, k, |row, col| {
        vectors[(col, order[row])]
    }))
}

/// Sequential closed-form factorization along fixed plans.
pub fn phase_one(a: &SymMatrix, k: usize, c: usize, plans: &[LevelPlan]) -> Result<Factorization> {
    let n = a.dim();
    let mut m = a.clone();
    let mut active = IndexSet::full(n);
    let mut cores = Vec::with_capacity(plans.len());
    for plan in plans {
        let core = phase_one_core(&m, plan, &active)?;
        let mut dense = m.into_matrix();
        conjugate_in_place(&mut dense, &plan.support, &core);
        m = SymMatrix::symmetrized(dense);
        active = active.difference(&plan.wavelets);
        cores.push(core);
    }
    Factorization::from_cores(a, k, c, plans, cores)
}

/// `U₁ᵀ⋯U_Lᵀ H U_L⋯U₁`.
pub fn reconstruct(f: &Factorization) -> SymMatrix {
    let mut m = f.core.to_sym().into_matrix();
    for r in f.rotations.iter().rev() {
        conjugate_in_place(&mut m, r.support(), &r.core().transpose());
    }
    SymMatrix::symmetrized(m)
}

const FORMAT_TAG: &str = "learnable-mmf/factorization";
const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LevelRecord {
    support: Vec<usize>,
    wavelets: Vec<usize>,
    core: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoreRecord {
    support: Vec<usize>,
    block: Vec<f64>,
    diagonal: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FactorizationRecord {
    format: String,
    version: u32,
    n: usize,
    k: usize,
    c: usize,
    levels: Vec<LevelRecord>,
    core: CoreRecord,
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    (0..m.nrows())
        .flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)]))
        .collect()
}

fn square_from(values: &[f64], k: usize, what: &str) -> Result<DMatrix<f64>> {
    if values.len() != k * k {
        return Err(Error::Invariant(format!(
            "{what} has {} entries, expected {}",
            values.len(),
            k * k
        )));
    }
    Ok(DMatrix::from_row_slice(k, k, values))
}

fn invariant<T>(r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Invariant(_) => e,
        other => Error::Invariant(other.to_string()),
    })
}

/// JSON document for `f`; reals are written in shortest round-trip form.
pub fn to_json(f: &Factorization) -> String {
    let record = FactorizationRecord {
        format: FORMAT_TAG.into(),
        version: FORMAT_VERSION,
        n: f.n,
        k: f.k,
        c: f.c,
        levels: f
            .rotations
            .iter()
            .zip(&f.wavelet_sets)
            .map(|(r, t)| LevelRecord {
                support: r.support().as_slice().to_vec(),
                wavelets: t.as_slice().to_vec(),
                core: row_major(r.core()),
            })
            .collect(),
        core: CoreRecord {
            support: f.core.core_support.as_slice().to_vec(),
            block: row_major(&f.core.core),
            diagonal: f.core.diag.clone(),
        },
    };
    serde_json::to_string_pretty(&record).expect("factorization serializes")
}

/// Parses and re-validates a document written by [`to_json`].
pub fn from_json(text: &str) -> Result<Factorization> {
    let record: FactorizationRecord =
        serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    if record.format != FORMAT_TAG || record.version != FORMAT_VERSION {
        return Err(Error::Schema(format!(
            "unsupported format {} v{}",
            record.format, record.version
        )));
    }
    let n = record.n;
    let mut rotations = Vec::with_capacity(record.levels.len());
    let mut wavelet_sets = Vec::with_capacity(record.levels.len());
    for (level, l) in record.levels.iter().enumerate() {
        let support = invariant(IndexSet::new(l.support.clone(), n))?;
        let core = square_from(&l.core, support.len(), &format!("level {} core", level + 1))?;
        let dev = orthogonality_error(&core);
        if !(dev <= ORTHOGONALITY_TOL) {
            return Err(Error::Invariant(format!(
                "level {} core is not orthogonal (deviation {dev:e})",
                level + 1
            )));
        }
        rotations.push(invariant(Rotation::new(support, core))?);
        wavelet_sets.push(invariant(IndexSet::new(l.wavelets.clone(), n))?);
    }
    let core_support = invariant(IndexSet::new(record.core.support.clone(), n))?;
    let block = square_from(&record.core.block, core_support.len(), "core block")?;
    if (&block - block.transpose()).amax() > 0.0
        || record.core.diagonal.iter().any(|v| !v.is_finite())
    {
        return Err(Error::Invariant(
            "core block must be symmetric and finite".into(),
        ));
    }
    for (a, &i) in core_support.as_slice().iter().enumerate() {
        if record.core.diagonal.get(i) != Some(&block[(a, a)]) {
            return Err(Error::Invariant(
                "core block diagonal disagrees with the stored diagonal".into(),
            ));
        }
    }
    let core = CoreDiagonal {
        n,
        core_support,
        core: block,
        diag: record.core.diagonal,
    };
    Factorization::new(n, record.k, record.c, rotations, wavelet_sets, core)
}

pub fn save(f: &Factorization, path: &Path) -> Result<()> {
    crate::graphgen::write_file(path, &to_json(f))
}

pub fn load(path: &Path) -> Result<Factorization> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_json(&text)
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;
    use crate::matcore::testutil::{random_orthogonal, random_subset};
    use rand::Rng;

    /// Random nested plans with `c = 1`: support of size `min(k, |S|)`,
    /// wavelet drawn from it.
    pub fn random_plans(n: usize, levels: usize, k: usize, rng: &mut impl Rng) -> Vec<LevelPlan> {
        let mut active = IndexSet::full(n);
        let mut plans = Vec::new();
        for _ in 0..levels {
            let kk = k.min(active.len());
            let pick = random_subset(active.len(), kk, rng);
            let support = IndexSet::new(pick.iter().map(|p| active[p]).collect(), n).unwrap();
            let t = support[rng.random_range(0..kk)];
            let wavelets = IndexSet::singleton(t, n).unwrap();
            active = active.difference(&wavelets);
            plans.push(LevelPlan::new(support, wavelets).unwrap());
        }
        plans
    }

    pub fn random_factorization(
        a: &SymMatrix,
        levels: usize,
        k: usize,
        rng: &mut impl Rng,
    ) -> Factorization {
        let plans = random_plans(a.dim(), levels, k, rng);
        let cores = plans
            .iter()
            .map(|p| random_orthogonal(p.support.len(), rng))
            .collect();
        Factorization::from_cores(a, k, 1, &plans, cores).unwrap()
    }
}
