//! Wavelet bases read off a factorization, and the transforms they define.
//!
//! In orthonormal mode the basis rows are rows of the composite rotation
//! `Ū = U_L⋯U₁`: the row of each retired index is a mother wavelet at the
//! level that retired it, and the rows of the final active set are father
//! wavelets. Literal mode instead takes mother rows from the transformed
//! matrices `A_ℓ` and father rows from `H`; such a basis is generally not
//! orthogonal and supports no transforms.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphgen::{write_file, write_matrix_market_dense};
use crate::matcore::{conjugate_in_place, SymMatrix};
use crate::mmf::Factorization;

pub const SPARSITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisMode {
    #[default]
    Orthonormal,
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WaveletLabel {
    /// Retired at `level` (1-based); `index` is the retired coordinate.
    Mother { level: usize, index: usize },
    /// Coordinate `index` of the final core.
    Father { index: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveletBasis {
    rows: DMatrix<f64>,
    labels: Vec<WaveletLabel>,
    mode: BasisMode,
}

impl WaveletBasis {
    pub fn n(&self) -> usize {
        self.rows.nrows()
    }

    /// Wavelets as rows: fathers first, then mothers in level order.
    pub fn rows(&self) -> &DMatrix<f64> {
        &self.rows
    }

    pub fn labels(&self) -> &[WaveletLabel] {
        &self.labels
    }

    pub fn mode(&self) -> BasisMode {
        self.mode
    }

    pub fn mother_count(&self) -> usize {
        self.labels
            .iter()
            .filter(|l| matches!(l, WaveletLabel::Mother { .. }))
            .count()
    }

    pub fn father_count(&self) -> usize {
        self.labels.len() - self.mother_count()
    }

    /// `‖W Wᵀ − I‖_max`.
    pub fn orthogonality_error(&self) -> f64 {
        let n = self.n();
        (&self.rows * self.rows.transpose() - DMatrix::<f64>::identity(n, n)).amax()
    }

    fn require_orthonormal(&self) -> Result<()> {
        match self.mode {
            BasisMode::Orthonormal => Ok(()),
            BasisMode::Literal => Err(Error::UnsupportedMode(
                "literal bases have no exact inverse".into(),
            )),
        }
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n() {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {len} for a basis of size {}",
                self.n()
            )));
        }
        Ok(())
    }

    /// Wavelet coefficients `⟨f, ψ⟩` in row order.
    pub fn transform(&self, signal: &[f64]) -> Result<Vec<f64>> {
        self.require_orthonormal()?;
        self.check_len(signal.len())?;
        Ok((&self.rows * DVector::from_column_slice(signal))
            .as_slice()
            .to_vec())
    }

    /// Signal `Σ coeff · ψ` from coefficients in row order.
    pub fn inverse_transform(&self, coefficients: &[f64]) -> Result<Vec<f64>> {
        self.require_orthonormal()?;
        self.check_len(coefficients.len())?;
        Ok(
            (self.rows.tr_mul(&DVector::from_column_slice(coefficients)))
                .as_slice()
                .to_vec(),
        )
    }

    /// Fraction of entries with magnitude above `tol`.
    pub fn sparsity(&self, tol: f64) -> f64 {
        let nonzero = self.rows.iter().filter(|v| v.abs() > tol).count();
        nonzero as f64 / self.rows.len() as f64
    }
}

/// Builds the wavelet basis of `f` (a factorization of `a`).
pub fn extract_basis(a: &SymMatrix, f: &Factorization, mode: BasisMode) -> Result<WaveletBasis> {
    let n = f.n();
    if a.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "matrix of size {} for a factorization of size {n}",
            a.dim()
        )));
    }
    let mut labels = Vec::with_capacity(n);
    let mut rows = DMatrix::zeros(n, n);
    let mut next = 0;
    let mut push = |row: nalgebra::RowDVector<f64>, label: WaveletLabel| {
        rows.set_row(next, &row);
        labels.push(label);
        next += 1;
    };
    match mode {
        BasisMode::Orthonormal => {
            let composite = composite_rotation(f);
            for index in f.final_active().iter() {
                push(
                    composite.row(index).into_owned(),
                    WaveletLabel::Father { index },
                );
            }
            for (l, t) in f.wavelet_sets().iter().enumerate() {
                for index in t.iter() {
                    push(
                        composite.row(index).into_owned(),
                        WaveletLabel::Mother {
                            level: l + 1,
                            index,
                        },
                    );
                }
            }
        }
        BasisMode::Literal => {
            let h = f.core().to_sym();
            for index in f.final_active().iter() {
                push(
                    h.as_matrix().row(index).into_owned(),
                    WaveletLabel::Father { index },
                );
            }
            let mut m = a.as_matrix().clone();
            for (l, (r, t)) in f.rotations().iter().zip(f.wavelet_sets()).enumerate() {
                conjugate_in_place(&mut m, r.support(), r.core());
                for index in t.iter() {
                    push(
                        m.row(index).into_owned(),
                        WaveletLabel::Mother {
                            level: l + 1,
                            index,
                        },
                    );
                }
            }
        }
    }
    Ok(WaveletBasis { rows, labels, mode })
}

/// `U_L⋯U₁` as a dense matrix.
pub fn composite_rotation(f: &Factorization) -> DMatrix<f64> {
    let n = f.n();
    let mut u = DMatrix::identity(n, n);
    for r in f.rotations() {
        let s = r.support();
        let k = s.len();
        let block = DMatrix::from_fn(k, n, |a, j| u[(s[a], j)]);
        let mixed = r.core() * block;
        for a in 0..k {
            u.set_row(s[a], &mixed.row(a));
        }
    }
    u
}

/// Share of a vector's squared mass on its `count` largest-magnitude entries.
pub fn mass_concentration(row: &[f64], count: usize) -> f64 {
    let mut sq: Vec<f64> = row.iter().map(|v| v * v).collect();
    let total: f64 = sq.iter().sum();
    if total == 0.0 {
        return 1.0;
    }
    sq.sort_by(|x, y| y.total_cmp(x));
    sq.iter().take(count).sum::<f64>() / total
}

pub fn labels_to_json(basis: &WaveletBasis) -> String {
    #[derive(Serialize)]
    struct Sidecar<'a> {
        mode: BasisMode,
        labels: &'a [WaveletLabel],
    }
    serde_json::to_string_pretty(&Sidecar {
        mode: basis.mode,
        labels: &basis.labels,
    })
    .expect("labels serialize")
}

/// Writes the rows as a dense MatrixMarket array and the labels as JSON.
pub fn export(basis: &WaveletBasis, matrix_path: &Path, labels_path: &Path) -> Result<()> {
    write_matrix_market_dense(&basis.rows, matrix_path)?;
    write_file(labels_path, &labels_to_json(basis))
}
