//! Operator-norm and quadratic-form probes on the truncated spaces.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fock::{self, FockBasis};
use crate::model::{rho, Coupling, LevelSpace, ModelParams, ShellModes};
use crate::operator::{c, inner, normalize, SparseOperator, C64};

use super::lanczos::{self, default_start, LanczosOptions};
use super::DENSE_MAX_DIM;

/// Largest singular value.
pub fn dense_operator_norm(m: &DMatrix<C64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().iter().copied().fold(0.0, f64::max)
}

/// Largest singular value: dense SVD up to [`DENSE_MAX_DIM`], power
/// iteration on `A†A` beyond.
pub fn sparse_operator_norm(a: &SparseOperator) -> f64 {
    if a.nnz() == 0 {
        return 0.0;
    }
    if a.dim() <= DENSE_MAX_DIM {
        return dense_operator_norm(&a.to_dense());
    }
    let adj = a.adjoint();
    let mut v = default_start(a.dim());
    let mut estimate = 0.0;
    for _ in 0..20_000 {
        let w = adj.apply(&a.apply(&v));
        let next = inner(&v, &w).re.max(0.0).sqrt();
        v = w;
        if normalize(&mut v) == 0.0 {
            return 0.0;
        }
        if (next - estimate).abs() <= 1e-12 * next {
            return next;
        }
        estimate = next;
    }
    estimate
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(h: &SparseOperator) -> Result<f64> {
    if h.dim() <= DENSE_MAX_DIM {
        return Ok(h
            .to_dense()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min));
    }
    Ok(lanczos::lowest(h, None, &[], 1e-10, LanczosOptions::default())?.value)
}

/// `‖Φ(λ) (H_ph(1_{supp λ} ω) + ρ)^{-1/2}‖` on the Fock space of one shell.
pub fn field_bound_lhs(shell: &ShellModes, rho: f64, basis: &FockBasis) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(Error::InvalidParameter {
            field: "rho",
            reason: format!("must be positive, got {rho}"),
        });
    }
    if basis.modes() != shell.nodes.len() {
        return Err(Error::LengthMismatch {
            expected: shell.nodes.len(),
            got: basis.modes(),
        });
    }
    let coeffs: Vec<C64> = shell.nodes.iter().map(|m| c(m.lambda)).collect();
    let freqs: Vec<f64> = shell
        .nodes
        .iter()
        .map(|m| if m.lambda != 0.0 { m.omega } else { 0.0 })
        .collect();
    let field = fock::field_matrix(basis, &coeffs)?;
    let scale: Vec<f64> = fock::free_energies(basis, &freqs)
        .into_iter()
        .map(|e| 1.0 / (e + rho).sqrt())
        .collect();
    let product = SparseOperator::from_triplets(
        basis.dim(),
        field.entries().iter().map(|&(r, col, v)| (r, col, v * scale[col])),
    );
    Ok(sparse_operator_norm(&product))
}

/// `(‖Φ(G̃_n)(H̃_n − z)⁻¹‖, ‖Φ(G̃_n)(H_{n+1} − z)⁻¹‖)` on level `n + 1`.
/// Refuses shifts closer than `ρ_{n+1}/64` to either spectrum.
pub fn resolvent_coupling_norm(params: &ModelParams, n: usize, z: C64) -> Result<(f64, f64)> {
    Ok(resolvent_coupling_norms(params, n, &[z])?[0])
}

/// [`resolvent_coupling_norm`] at several shifts, assembling level `n + 1` once.
pub fn resolvent_coupling_norms(params: &ModelParams, n: usize, zs: &[C64]) -> Result<Vec<(f64, f64)>> {
    let space = LevelSpace::new(params, n + 1)?;
    if space.dim() > DENSE_MAX_DIM {
        return Err(Error::OracleCap {
            dim: space.dim(),
            cap: DENSE_MAX_DIM,
        });
    }
    let tilde = space.hamiltonian(0..n, Coupling::OffDiagonal)?.to_dense();
    let next = space.hamiltonian(0..n + 1, Coupling::OffDiagonal)?.to_dense();
    let coupling = space.shell_coupling(n..n + 1, Coupling::OffDiagonal)?.to_dense();
    let guard = rho(params, n + 1) / 64.0;
    let spectra = [
        tilde.clone().symmetric_eigenvalues(),
        next.clone().symmetric_eigenvalues(),
    ];
    let norm_for = |dense: &DMatrix<C64>, spectrum: &nalgebra::DVector<f64>, z: C64| -> Result<f64> {
        let distance = spectrum
            .iter()
            .map(|&mu| (C64::new(mu, 0.0) - z).norm())
            .fold(f64::INFINITY, f64::min);
        if distance < guard {
            return Err(Error::NearSpectrum {
                re: z.re,
                im: z.im,
                distance,
                guard,
            });
        }
        let mut shifted = dense.clone();
        for i in 0..shifted.nrows() {
            shifted[(i, i)] -= z;
        }
        let inv = shifted
            .lu()
            .try_inverse()
            .ok_or(Error::SingularShift { re: z.re, im: z.im })?;
        Ok(dense_operator_norm(&(&coupling * inv)))
    };
    zs.iter()
        .map(|&z| Ok((norm_for(&tilde, &spectra[0], z)?, norm_for(&next, &spectra[1], z)?)))
        .collect()
}

/// Smallest eigenvalue of
/// `(H_{n+1} + ρ_n) − (H_n ⊗ 1 + (1 − g)(H_ph(ω̃_n) + ρ_n))` on level `n + 1`.
pub fn quadratic_form_floor(params: &ModelParams, n: usize) -> Result<f64> {
    quadratic_form_floor_deep(params, n, n + 1)
}

/// The same difference with `H_{n+1}` replaced by the level-`deepest`
/// Hamiltonian (all shells below `deepest` coupled).
pub fn quadratic_form_floor_deep(params: &ModelParams, n: usize, deepest: usize) -> Result<f64> {
    if deepest <= n {
        return Err(Error::InvalidParameter {
            field: "deepest",
            reason: format!("level {deepest} does not contain shell {n}"),
        });
    }
    let space = LevelSpace::new(params, deepest)?;
    let dim = space.dim();
    let rho_n = rho(params, n);
    let shift = SparseOperator::identity(dim).scale(c(rho_n));

    let full = space.hamiltonian(0..deepest, Coupling::OffDiagonal)?;
    // H_n ⊗ 1 carries the free energy of shells below n only.
    let mut hn = space.hamiltonian(0..n, Coupling::OffDiagonal)?;
    for m in n..deepest {
        hn = hn.sub(&space.shell_free_energy(m))?;
    }
    let hph = space.shell_free_energy(n);

    let left = full.add(&shift)?;
    let right = hn.add(&hph.add(&shift)?.scale(c(1.0 - params.g)))?;
    min_eigenvalue(&left.sub(&right)?)
}
