//! The parity `S = σ₃ (−1)^N` and sector-restricted ground states.

use crate::error::{Error, Result};
use crate::fock::FockBasis;
use crate::operator::{SparseOperator, C64, PAULI_X, ZERO};
use crate::spectral::{fix_phase, lowest_two_with, EigenResult, SolverOptions};

/// Parity eigenvalue of every basis state of spin ⊗ Fock.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SectorLabels {
    labels: Vec<i8>,
}

impl SectorLabels {
    pub fn new(basis: &FockBasis) -> Self {
        let photon: Vec<i8> = basis
            .states()
            .iter()
            .map(|s| if s.total() % 2 == 0 { 1 } else { -1 })
            .collect();
        let labels = photon.iter().copied().chain(photon.iter().map(|&p| -p)).collect();
        Self { labels }
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Basis positions with the given label, ascending.
    pub fn sector(&self, label: i8) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i] == label).collect()
    }

    pub fn as_operator(&self) -> SparseOperator {
        let diag: Vec<f64> = self.labels.iter().map(|&l| f64::from(l)).collect();
        SparseOperator::from_diagonal(&diag)
    }
}

pub fn parity_matrix(basis: &FockBasis) -> SparseOperator {
    SectorLabels::new(basis).as_operator()
}

/// Max-row-sum norm of `AB − BA`.
pub fn commutator_norm(a: &SparseOperator, b: &SparseOperator) -> Result<f64> {
    let ab = a.matmul(b)?;
    let ba = b.matmul(a)?;
    Ok(ab.sub(&ba)?.max_row_sum() + 0.0)
}

/// Lowest eigenpairs of the two parity sectors, with vectors on the full space.
#[derive(Clone, Debug)]
pub struct SectorSolution {
    pub plus: EigenResult,
    pub minus: EigenResult,
}

impl SectorSolution {
    /// Label of the sector holding the ground state; ties go to `+1`.
    pub fn ground_label(&self) -> i8 {
        if self.minus.e0 < self.plus.e0 {
            -1
        } else {
            1
        }
    }

    /// Global ground state with `E₁` taken over both sectors.
    pub fn combined(&self) -> EigenResult {
        let (own, other) = if self.ground_label() == 1 {
            (&self.plus, &self.minus)
        } else {
            (&self.minus, &self.plus)
        };
        let e1 = own.e1.min(other.e0);
        EigenResult {
            e0: own.e0,
            phi0: own.phi0.clone(),
            e1,
            gap: (e1 - own.e0).max(0.0),
            residual: own.residual,
            method: own.method,
        }
    }
}

pub fn sector_solve(h: &SparseOperator, labels: &SectorLabels, tol: f64) -> Result<SectorSolution> {
    sector_solve_with(h, labels, tol, &SolverOptions::default(), None)
}

pub fn sector_solve_with(
    h: &SparseOperator,
    labels: &SectorLabels,
    tol: f64,
    opts: &SolverOptions,
    start: Option<&[C64]>,
) -> Result<SectorSolution> {
    if labels.len() != h.dim() {
        return Err(Error::DimensionMismatch {
            left: h.dim(),
            right: labels.len(),
        });
    }
    let broken = commutator_norm(&labels.as_operator(), h)?;
    if broken != 0.0 {
        return Err(Error::SymmetryBroken(broken));
    }
    let solve = |label: i8| -> Result<EigenResult> {
        let keep = labels.sector(label);
        let block = h.compress(&keep);
        let sub_start: Option<Vec<C64>> = start.map(|s| keep.iter().map(|&i| s[i]).collect());
        let r = lowest_two_with(&block, tol, opts, sub_start.as_deref())?;
        let mut full = vec![ZERO; h.dim()];
        for (k, &i) in keep.iter().enumerate() {
            full[i] = r.phi0[k];
        }
        fix_phase(&mut full);
        Ok(EigenResult { phi0: full, ..r })
    };
    Ok(SectorSolution {
        plus: solve(1)?,
        minus: solve(-1)?,
    })
}

/// `⟨φ, (σ ⊗ 1) φ⟩` for a vector on spin ⊗ Fock.
pub fn spin_expectation(phi: &[C64], spin: [[C64; 2]; 2]) -> Result<C64> {
    if !phi.len().is_multiple_of(2) {
        return Err(Error::LengthMismatch {
            expected: phi.len() + 1,
            got: phi.len(),
        });
    }
    let d = phi.len() / 2;
    let mut acc = ZERO;
    for (s, row) in spin.iter().enumerate() {
        for (t, &w) in row.iter().enumerate() {
            if w == ZERO {
                continue;
            }
            acc += (0..d).map(|i| phi[s * d + i].conj() * w * phi[t * d + i]).sum::<C64>();
        }
    }
    Ok(acc)
}

pub fn sigma1_expectation(phi: &[C64]) -> Result<C64> {
    spin_expectation(phi, PAULI_X)
}
