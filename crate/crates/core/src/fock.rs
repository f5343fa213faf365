//! Truncated bosonic Fock spaces and second-quantized operators on them.
//!
//! A basis holds every occupation vector over `M` modes whose total photon
//! number is at most `N_max`. Operators are compressed onto that space: any
//! matrix element whose image leaves the cap is dropped.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
pub use crate::operator::SparseOperator;
use crate::operator::{c, C64};

/// Default cap on the number of Fock states a basis may hold.
pub const DEFAULT_STATE_BUDGET: usize = 4_000_000;

/// Photon occupation numbers, one per mode.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OccupationState(Vec<u32>);

impl OccupationState {
    pub fn new(occupations: Vec<u32>) -> Self {
        Self(occupations)
    }

    pub fn vacuum(modes: usize) -> Self {
        Self(vec![0; modes])
    }

    pub fn occupations(&self) -> &[u32] {
        &self.0
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn modes(&self) -> usize {
        self.0.len()
    }
}

impl fmt::Debug for OccupationState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// All occupation states over `modes` modes with total number `<= n_max`,
/// in graded-lexicographic order.
#[derive(Clone, Debug)]
pub struct FockBasis {
    modes: usize,
    n_max: u32,
    states: Vec<OccupationState>,
    index: HashMap<OccupationState, usize>,
}

impl FockBasis {
    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[OccupationState] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &OccupationState {
        &self.states[i]
    }

    pub fn index_of(&self, occupations: &[u32]) -> Option<usize> {
        // Avoid allocating for the common miss on the cap layer.
        if occupations.len() != self.modes || occupations.iter().sum::<u32>() > self.n_max {
            return None;
        }
        self.index.get(&OccupationState(occupations.to_vec())).copied()
    }

    fn check_mode(&self, j: usize) -> Result<()> {
        if j >= self.modes {
            return Err(Error::ModeOutOfRange {
                index: j,
                modes: self.modes,
            });
        }
        Ok(())
    }
}

/// `binomial(n, k)`, or `None` on overflow.
pub fn binomial(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

pub fn enumerate_basis(modes: usize, n_max: u32) -> Result<FockBasis> {
    enumerate_basis_with_budget(modes, n_max, DEFAULT_STATE_BUDGET)
}

/// Enumerates the truncated basis. `modes == 0` yields the vacuum alone.
pub fn enumerate_basis_with_budget(modes: usize, n_max: u32, budget: usize) -> Result<FockBasis> {
    let dim = binomial(modes as u64 + n_max as u64, n_max as u64).unwrap_or(u128::MAX);
    if dim > budget as u128 {
        return Err(Error::BudgetExceeded { dim, budget });
    }
    let mut states = Vec::with_capacity(dim as usize);
    let mut scratch = vec![0u32; modes];
    for total in 0..=n_max {
        if modes == 0 {
            if total == 0 {
                states.push(OccupationState(Vec::new()));
            }
            continue;
        }
        compositions(total, 0, &mut scratch, &mut states);
    }
    let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
    Ok(FockBasis {
        modes,
        n_max,
        states,
        index,
    })
}

// Ascending lexicographic compositions of `remaining` into the tail slots.
fn compositions(remaining: u32, pos: usize, scratch: &mut [u32], out: &mut Vec<OccupationState>) {
    if pos + 1 == scratch.len() {
        scratch[pos] = remaining;
        out.push(OccupationState(scratch.to_vec()));
        return;
    }
    for head in 0..=remaining {
        scratch[pos] = head;
        compositions(remaining - head, pos + 1, scratch, out);
    }
    scratch[pos] = 0;
}

pub fn creation_matrix(basis: &FockBasis, j: usize) -> Result<SparseOperator> {
    basis.check_mode(j)?;
    let mut triplets = Vec::new();
    let mut occ = vec![0u32; basis.modes];
    for (col, s) in basis.states.iter().enumerate() {
        occ.copy_from_slice(s.occupations());
        let nj = occ[j];
        occ[j] += 1;
        if let Some(row) = basis.index_of(&occ) {
            triplets.push((row, col, c(f64::from(nj + 1).sqrt())));
        }
    }
    Ok(SparseOperator::from_triplets(basis.dim(), triplets))
}

pub fn annihilation_matrix(basis: &FockBasis, j: usize) -> Result<SparseOperator> {
    basis.check_mode(j)?;
    let mut triplets = Vec::new();
    let mut occ = vec![0u32; basis.modes];
    for (col, s) in basis.states.iter().enumerate() {
        let nj = s.occupations()[j];
        if nj == 0 {
            continue;
        }
        occ.copy_from_slice(s.occupations());
        occ[j] -= 1;
        let row = basis.index_of(&occ).expect("lowering stays inside a graded basis");
        triplets.push((row, col, c(f64::from(nj).sqrt())));
    }
    Ok(SparseOperator::from_triplets(basis.dim(), triplets))
}

pub fn number_matrix(basis: &FockBasis) -> SparseOperator {
    let diag: Vec<f64> = basis.states.iter().map(|s| f64::from(s.total())).collect();
    SparseOperator::from_diagonal(&diag)
}

/// Free field energy `Σ_i n_i ω_i` as a diagonal matrix.
pub fn hph_matrix(basis: &FockBasis, freqs: &[f64]) -> Result<SparseOperator> {
    if freqs.len() != basis.modes {
        return Err(Error::LengthMismatch {
            expected: basis.modes,
            got: freqs.len(),
        });
    }
    if let Some((index, &value)) = freqs.iter().enumerate().find(|(_, &w)| !(w > 0.0)) {
        return Err(Error::NonPositiveFrequency { index, value });
    }
    Ok(SparseOperator::from_diagonal(&free_energies(basis, freqs)))
}

pub(crate) fn free_energies(basis: &FockBasis, freqs: &[f64]) -> Vec<f64> {
    basis
        .states
        .iter()
        .map(|s| s.occupations().iter().zip(freqs).map(|(&n, &w)| f64::from(n) * w).sum())
        .collect()
}

/// `Σ_j (c_j a†_j + conj(c_j) a_j)`, assembled so that it is exactly Hermitian.
pub fn field_matrix(basis: &FockBasis, coeffs: &[C64]) -> Result<SparseOperator> {
    if coeffs.len() != basis.modes {
        return Err(Error::LengthMismatch {
            expected: basis.modes,
            got: coeffs.len(),
        });
    }
    let mut triplets = Vec::new();
    let mut occ = vec![0u32; basis.modes];
    for (col, s) in basis.states.iter().enumerate() {
        for (j, &cj) in coeffs.iter().enumerate() {
            if cj == crate::operator::ZERO {
                continue;
            }
            occ.copy_from_slice(s.occupations());
            let nj = occ[j];
            occ[j] += 1;
            if let Some(row) = basis.index_of(&occ) {
                let amp = f64::from(nj + 1).sqrt();
                triplets.push((row, col, cj * amp));
                triplets.push((col, row, cj.conj() * amp));
            }
        }
    }
    Ok(SparseOperator::from_triplets(basis.dim(), triplets))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{norm, ZERO};
    use proptest::prelude::*;

    fn brute_force_count(modes: usize, n_max: u32) -> usize {
        // Odometer over the full box [0, n_max]^M, keeping capped vectors.
        let mut count = 0;
        let mut v = vec![0u32; modes];
        loop {
            if v.iter().sum::<u32>() <= n_max {
                count += 1;
            }
            let mut k = 0;
            loop {
                if k == modes {
                    return count;
                }
                v[k] += 1;
                if v[k] <= n_max {
                    break;
                }
                v[k] = 0;
                k += 1;
            }
        }
    }

    #[test]
    fn single_mode_counts() {
        let b = enumerate_basis(1, 2).unwrap();
        let got: Vec<Vec<u32>> = b.states().iter().map(|s| s.occupations().to_vec()).collect();
        assert_eq!(got, vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn two_modes_cap_two_has_six_states() {
        assert_eq!(brute_force_count(2, 2), 6);
        assert_eq!(enumerate_basis(2, 2).unwrap().dim(), 6);
    }

    #[test]
    fn cap_zero_is_vacuum_only() {
        let b = enumerate_basis(3, 0).unwrap();
        assert_eq!(b.dim(), 1);
        assert_eq!(b.state(0), &OccupationState::vacuum(3));
    }

    #[test]
    fn graded_lexicographic_order() {
        let b = enumerate_basis(2, 2).unwrap();
        let got: Vec<Vec<u32>> = b.states().iter().map(|s| s.occupations().to_vec()).collect();
        assert_eq!(
            got,
            vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![0, 2], vec![1, 1], vec![2, 0]]
        );
    }

    #[test]
    fn budget_error_names_dimension() {
        let err = enumerate_basis_with_budget(10, 10, 1000).unwrap_err();
        match err {
            Error::BudgetExceeded { dim, .. } => assert_eq!(dim, 184_756),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ladder_action_single_mode() {
        let b = enumerate_basis(1, 2).unwrap();
        let ad = creation_matrix(&b, 0).unwrap();
        assert_eq!(ad.get(1, 0), c(1.0));
        assert_eq!(ad.get(2, 1), c(2f64.sqrt()));
        assert!((0..3).all(|r| ad.get(r, 2) == ZERO));
        let a = annihilation_matrix(&b, 0).unwrap();
        assert_eq!(a.get(0, 1), c(1.0));
        assert!((0..3).all(|r| a.get(r, 0) == ZERO));
    }

    #[test]
    fn creation_column_norms_below_cap() {
        let b = enumerate_basis(3, 3).unwrap();
        for j in 0..3 {
            let ad = creation_matrix(&b, j).unwrap().to_dense();
            for (col, s) in b.states().iter().enumerate() {
                if s.total() < 3 {
                    let sq: f64 = ad.column(col).iter().map(|z| z.norm_sqr()).sum();
                    assert!((sq - f64::from(s.occupations()[j] + 1)).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn annihilation_is_adjoint_of_creation() {
        let b = enumerate_basis(3, 3).unwrap();
        for j in 0..3 {
            let ad = creation_matrix(&b, j).unwrap().to_dense();
            let a = annihilation_matrix(&b, j).unwrap().to_dense();
            assert_eq!(ad.adjoint(), a);
        }
    }

    #[test]
    fn canonical_commutator_on_interior() {
        let n_max = 3;
        let b = enumerate_basis(2, n_max).unwrap();
        let interior: Vec<usize> = (0..b.dim()).filter(|&i| b.state(i).total() < n_max).collect();
        for j in 0..2 {
            for k in 0..2 {
                let a = annihilation_matrix(&b, j).unwrap();
                let ad = creation_matrix(&b, k).unwrap();
                let comm = a.matmul(&ad).unwrap().sub(&ad.matmul(&a).unwrap()).unwrap();
                let inner_block = comm.compress(&interior);
                let expected = if j == k {
                    SparseOperator::identity(interior.len())
                } else {
                    SparseOperator::zeros(interior.len())
                };
                assert!(max_diff(&inner_block, &expected) < 1e-14, "j={j} k={k}");
            }
        }
        // The cap layer is where truncation breaks the algebra.
        let a = annihilation_matrix(&b, 0).unwrap();
        let ad = creation_matrix(&b, 0).unwrap();
        let comm = a.matmul(&ad).unwrap().sub(&ad.matmul(&a).unwrap()).unwrap();
        let top = b.index_of(&[3, 0]).unwrap();
        assert!((comm.get(top, top) - c(-3.0)).norm() < 1e-14);
    }

    #[test]
    fn pull_through_is_exact() {
        let b = enumerate_basis(3, 3).unwrap();
        let n = number_matrix(&b);
        let id = SparseOperator::identity(b.dim());
        for j in 0..3 {
            let a = annihilation_matrix(&b, j).unwrap();
            let lhs = a.matmul(&n).unwrap();
            let rhs = n.add(&id).unwrap().matmul(&a).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn number_operator_values() {
        let b = enumerate_basis(2, 3).unwrap();
        let n = number_matrix(&b);
        assert_eq!(n.get(0, 0), ZERO);
        let i = b.index_of(&[1, 2]).unwrap();
        assert_eq!(n.get(i, i), c(3.0));
        let mut sum = SparseOperator::zeros(b.dim());
        for j in 0..2 {
            let a = annihilation_matrix(&b, j).unwrap();
            let ad = creation_matrix(&b, j).unwrap();
            sum = sum.add(&ad.matmul(&a).unwrap()).unwrap();
        }
        assert!(max_diff(&sum, &n) < 1e-14);
    }

    fn max_diff(a: &SparseOperator, b: &SparseOperator) -> f64 {
        (a.to_dense() - b.to_dense())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn free_energy_diagonal() {
        let b = enumerate_basis(2, 2).unwrap();
        let h = hph_matrix(&b, &[0.275, 0.0275]).unwrap();
        assert_eq!(h.get(0, 0), ZERO);
        let i = b.index_of(&[1, 1]).unwrap();
        assert!((h.get(i, i).re - 0.3025).abs() < 1e-16);
        let min_excited = (1..b.dim()).map(|k| h.get(k, k).re).fold(f64::INFINITY, f64::min);
        assert_eq!(min_excited, 0.0275);
        assert!(h.matmul(&number_matrix(&b)).unwrap() == number_matrix(&b).matmul(&h).unwrap());
    }

    #[test]
    fn free_energy_rejects_bad_input() {
        let b = enumerate_basis(2, 1).unwrap();
        assert!(matches!(
            hph_matrix(&b, &[1.0, 0.0]),
            Err(Error::NonPositiveFrequency { index: 1, .. })
        ));
        assert!(matches!(hph_matrix(&b, &[1.0]), Err(Error::LengthMismatch { .. })));
        assert!(matches!(creation_matrix(&b, 2), Err(Error::ModeOutOfRange { .. })));
    }

    #[test]
    fn field_operator_examples() {
        let b = enumerate_basis(1, 3).unwrap();
        assert_eq!(field_matrix(&b, &[ZERO]).unwrap().nnz(), 0);
        let phi = field_matrix(&b, &[c(0.3)]).unwrap();
        assert_eq!(phi.get(1, 0), c(0.3));
        assert!(phi.hermitian_flag());

        let b = enumerate_basis(3, 2).unwrap();
        let coeffs = [C64::new(0.1, 0.2), c(-0.4), C64::new(0.0, 0.05)];
        let phi = field_matrix(&b, &coeffs).unwrap();
        let mut vac = vec![ZERO; b.dim()];
        vac[0] = c(1.0);
        let expected = norm(&coeffs);
        assert!((norm(&phi.apply(&vac)) - expected).abs() < 1e-15);
        assert!(matches!(field_matrix(&b, &[ZERO]), Err(Error::LengthMismatch { .. })));
    }

    proptest! {
        #[test]
        fn basis_invariants(modes in 1usize..5, n_max in 0u32..5) {
            let b = enumerate_basis(modes, n_max).unwrap();
            prop_assert_eq!(b.dim() as u128, binomial((modes as u32 + n_max) as u64, n_max as u64).unwrap());
            prop_assert_eq!(b.dim(), brute_force_count(modes, n_max));
            for (i, s) in b.states().iter().enumerate() {
                prop_assert_eq!(b.index_of(s.occupations()), Some(i));
                prop_assert!(s.total() <= n_max);
                prop_assert_eq!(s.modes(), modes);
            }
            for w in b.states().windows(2) {
                prop_assert!((w[0].total(), &w[0]) < (w[1].total(), &w[1]));
            }
            let again = enumerate_basis(modes, n_max).unwrap();
            prop_assert_eq!(again.states(), b.states());
        }

        #[test]
        fn field_is_exactly_hermitian(re in proptest::collection::vec(-1.0f64..1.0, 3),
                                      im in proptest::collection::vec(-1.0f64..1.0, 3)) {
            let b = enumerate_basis(3, 3).unwrap();
            let coeffs: Vec<C64> = re.iter().zip(&im).map(|(&r, &i)| C64::new(r, i)).collect();
            let phi = field_matrix(&b, &coeffs).unwrap();
            prop_assert!(phi.is_exactly_hermitian());
        }
    }
}
