//! Ground states, gaps, rank-one projection geometry and operator-norm probes.

pub mod lanczos;
mod probes;
mod riesz;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::FockBasis;
use crate::model::embedding_map;
use crate::operator::{inner, norm, normalize, SparseOperator, C64, ZERO};

pub use lanczos::LanczosOptions;
pub use probes::{
    dense_operator_norm, field_bound_lhs, min_eigenvalue, quadratic_form_floor, quadratic_form_floor_deep,
    resolvent_coupling_norm, resolvent_coupling_norms, sparse_operator_norm,
};
pub use riesz::{riesz_projection, riesz_projection_guarded};

/// Largest dimension handled by dense factorizations.
pub const DENSE_MAX_DIM: usize = 2000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Dense,
    Iterative,
}

#[derive(Clone, Debug)]
pub struct EigenResult {
    pub e0: f64,
    pub phi0: Vec<C64>,
    /// Second-lowest eigenvalue; `+∞` on a one-dimensional space.
    pub e1: f64,
    /// `e1 - e0`, clamped at zero.
    pub gap: f64,
    /// `‖H φ₀ − E₀ φ₀‖`.
    pub residual: f64,
    pub method: Method,
}

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    pub dense_max_dim: usize,
    pub lanczos: LanczosOptions,
    /// Newton polishing of the dense ground vector.
    pub refine: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            dense_max_dim: DENSE_MAX_DIM,
            lanczos: LanczosOptions::default(),
            refine: true,
        }
    }
}

pub fn lowest_two(h: &SparseOperator, tol: f64) -> Result<EigenResult> {
    lowest_two_with(h, tol, &SolverOptions::default(), None)
}

/// Two lowest eigenvalues and the ground vector. `start` seeds the
/// iterative path and is ignored by the dense one.
pub fn lowest_two_with(
    h: &SparseOperator,
    tol: f64,
    opts: &SolverOptions,
    start: Option<&[C64]>,
) -> Result<EigenResult> {
    if !h.hermitian_flag() {
        return Err(Error::InvalidParameter {
            field: "H",
            reason: "matrix is not exactly Hermitian".into(),
        });
    }
    if h.dim() == 0 {
        return Err(Error::InvalidParameter {
            field: "H",
            reason: "empty matrix".into(),
        });
    }
    let (e0, mut phi, e1, method) = if h.dim() <= opts.dense_max_dim {
        let (e0, phi, e1) = dense_lowest_two(h, opts.refine)?;
        (e0, phi, e1, Method::Dense)
    } else {
        let first = lanczos::lowest(h, start, &[], tol, opts.lanczos)?;
        let e1 = if h.dim() > 1 {
            let second = lanczos::lowest(
                h,
                None,
                std::slice::from_ref(&first.vector),
                tol.max(1e-9),
                opts.lanczos,
            )?;
            second.value
        } else {
            f64::INFINITY
        };
        (first.value, first.vector, e1, Method::Iterative)
    };
    fix_phase(&mut phi);
    let residual = residual_norm(h, &phi, e0);
    if !(residual <= tol) {
        return Err(Error::NoConvergence {
            iterations: 0,
            residual,
        });
    }
    Ok(EigenResult {
        e0,
        phi0: phi,
        e1,
        gap: (e1 - e0).max(0.0),
        residual,
        method,
    })
}

fn is_real(h: &SparseOperator) -> bool {
    h.entries().iter().all(|e| e.2.im == 0.0)
}

fn real_dense(h: &SparseOperator, border: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(h.dim() + border, h.dim() + border);
    for &(r, c, v) in h.entries() {
        m[(r, c)] += v.re;
    }
    m
}

/// First index of the smallest value.
fn lowest_index(values: &[f64]) -> usize {
    (0..values.len())
        .min_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)))
        .unwrap_or(0)
}

fn dense_lowest_two(h: &SparseOperator, refine: bool) -> Result<(f64, Vec<C64>, f64)> {
    // Real symmetric input takes the (several times faster) real decomposition.
    let (values, mut phi): (Vec<f64>, Vec<C64>) = if is_real(h) {
        let eig = real_dense(h, 0).symmetric_eigen();
        let values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        let k = lowest_index(&values);
        let phi = eig.eigenvectors.column(k).iter().map(|&x| C64::new(x, 0.0)).collect();
        (values, phi)
    } else {
        let eig = h.to_dense().symmetric_eigen();
        let values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        let k = lowest_index(&values);
        (values, eig.eigenvectors.column(k).iter().copied().collect())
    };
    let mut order: Vec<usize> = (0..h.dim()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    normalize(&mut phi);
    let e1 = order.get(1).map_or(f64::INFINITY, |&i| values[i]);
    let e0_dense = values[order[0]];
    let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    // Polishing needs a simple eigenvalue; a degenerate pair is left alone.
    if refine && e1 - e0_dense > 1e-8 * scale {
        newton_refine(h, &mut phi)?;
    }
    let e0 = rayleigh(h, &phi);
    Ok((e0, phi, e1))
}

/// Newton steps on `(H − E)φ = 0, ‖φ‖ = 1` through the bordered system
/// `[[H − E, φ], [φ†, 0]]`. The residual is formed with the sparse product,
/// so the correction is limited by the residual accuracy rather than by the
/// conditioning of the dense eigenvector.
fn newton_refine(h: &SparseOperator, phi: &mut Vec<C64>) -> Result<()> {
    let n = h.dim();
    let mut best = residual_norm(h, phi, rayleigh(h, phi));
    for _ in 0..4 {
        if best == 0.0 {
            break;
        }
        let e = rayleigh(h, phi);
        let hp = h.apply(phi);
        let real = is_real(h) && phi.iter().all(|p| p.im == 0.0);
        let sol: Option<Vec<C64>> = if real {
            let mut m = real_dense(h, 1);
            let mut rhs = nalgebra::DVector::zeros(n + 1);
            for i in 0..n {
                m[(i, i)] -= e;
                m[(i, n)] = phi[i].re;
                m[(n, i)] = phi[i].re;
                rhs[i] = -(hp[i].re - phi[i].re * e);
            }
            m.lu()
                .solve(&rhs)
                .map(|x| x.iter().map(|&v| C64::new(v, 0.0)).collect())
        } else {
            let mut m = DMatrix::from_element(n + 1, n + 1, ZERO);
            for &(r, c, v) in h.entries() {
                m[(r, c)] += v;
            }
            let mut rhs = nalgebra::DVector::from_element(n + 1, ZERO);
            for i in 0..n {
                m[(i, i)] -= C64::new(e, 0.0);
                m[(i, n)] = phi[i];
                m[(n, i)] = phi[i].conj();
                rhs[i] = -(hp[i] - phi[i] * e);
            }
            m.lu().solve(&rhs).map(|x| x.iter().copied().collect())
        };
        let Some(sol) = sol else {
            break;
        };
        let mut next: Vec<C64> = phi.iter().zip(&sol).map(|(p, d)| p + d).collect();
        normalize(&mut next);
        let r = residual_norm(h, &next, rayleigh(h, &next));
        if r < best {
            best = r;
            *phi = next;
        } else {
            break;
        }
    }
    Ok(())
}

pub(crate) fn rayleigh(h: &SparseOperator, phi: &[C64]) -> f64 {
    inner(phi, &h.apply(phi)).re / inner(phi, phi).re
}

pub(crate) fn residual_norm(h: &SparseOperator, phi: &[C64], e: f64) -> f64 {
    h.apply(phi)
        .iter()
        .zip(phi)
        .map(|(hp, p)| (hp - p * e).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Makes the first largest-magnitude component real and positive.
pub fn fix_phase(phi: &mut [C64]) {
    let mut best = 0;
    for (i, v) in phi.iter().enumerate() {
        if v.norm() > phi[best].norm() {
            best = i;
        }
    }
    let a = phi[best];
    if a.norm() == 0.0 {
        return;
    }
    let rot = a.conj() / a.norm();
    for v in phi.iter_mut() {
        *v *= rot;
    }
}

/// `‖|φ⟩⟨φ| − |ψ⟩⟨ψ|‖ = √(1 − |⟨φ,ψ⟩|²)` for unit vectors, evaluated as
/// the length of the component of each vector orthogonal to the other.
pub fn proj_distance(phi: &[C64], psi: &[C64]) -> Result<f64> {
    if phi.len() != psi.len() {
        return Err(Error::DimensionMismatch {
            left: phi.len(),
            right: psi.len(),
        });
    }
    let one_sided = |a: &[C64], b: &[C64]| {
        let s = inner(a, b);
        b.iter().zip(a).map(|(y, x)| (y - x * s).norm_sqr()).sum::<f64>().sqrt()
    };
    let d = 0.5 * (one_sided(phi, psi) + one_sided(psi, phi));
    Ok(d.clamp(0.0, 1.0))
}

/// Basis identity of the space a projection lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpaceTag {
    pub level: usize,
    pub modes: usize,
    pub n_max: u32,
}

/// A rank-one orthogonal projection stored as its unit range vector.
#[derive(Clone, Debug)]
pub struct ProjectionHandle {
    phi: Vec<C64>,
    space_tag: SpaceTag,
}

impl ProjectionHandle {
    pub fn new(phi: Vec<C64>, space_tag: SpaceTag) -> Result<Self> {
        let n = norm(&phi);
        if (n - 1.0).abs() > 1e-14 {
            return Err(Error::InvalidParameter {
                field: "phi",
                reason: format!("range vector has norm {n}, expected 1"),
            });
        }
        Ok(Self { phi, space_tag })
    }

    pub fn phi(&self) -> &[C64] {
        &self.phi
    }

    pub fn space_tag(&self) -> SpaceTag {
        self.space_tag
    }

    pub fn distance(&self, other: &Self) -> Result<f64> {
        if self.space_tag != other.space_tag {
            return Err(Error::IncompatibleBases(format!(
                "{:?} vs {:?}",
                self.space_tag, other.space_tag
            )));
        }
        proj_distance(&self.phi, &other.phi)
    }

    /// Dense `|φ⟩⟨φ|`.
    pub fn to_dense(&self) -> DMatrix<C64> {
        let v = nalgebra::DVector::from_column_slice(&self.phi);
        &v * v.adjoint()
    }
}

/// Copies `phi` onto the states of `large` whose appended modes are empty.
/// Accepts vectors on the Fock space alone or on spin ⊗ Fock.
pub fn embed_vacuum(phi: &[C64], small: &FockBasis, large: &FockBasis) -> Result<Vec<C64>> {
    let map = embedding_map(small, large)?;
    let (ds, dl) = (small.dim(), large.dim());
    let copies = if phi.len() == ds {
        1
    } else if phi.len() == 2 * ds {
        2
    } else {
        return Err(Error::LengthMismatch {
            expected: 2 * ds,
            got: phi.len(),
        });
    };
    let mut out = vec![ZERO; copies * dl];
    for s in 0..copies {
        for (i, &j) in map.iter().enumerate() {
            out[s * dl + j] = phi[s * ds + i];
        }
    }
    Ok(out)
}

/// Solves `(H − E) x = P⊥ b` on the orthogonal complement of the unit
/// vector `phi`, where `E` is the eigenvalue belonging to `phi`.
pub fn deflated_solve(h: &SparseOperator, e: f64, phi: &[C64], b: &[C64]) -> Result<Vec<C64>> {
    Ok(deflated_solve_many(h, e, phi, &[b.to_vec()])?.remove(0))
}

/// [`deflated_solve`] for several right-hand sides sharing one factorization.
pub fn deflated_solve_many(h: &SparseOperator, e: f64, phi: &[C64], bs: &[Vec<C64>]) -> Result<Vec<Vec<C64>>> {
    let n = h.dim();
    if phi.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: phi.len(),
        });
    }
    if let Some(b) = bs.iter().find(|b| b.len() != n) {
        return Err(Error::LengthMismatch {
            expected: n,
            got: b.len(),
        });
    }
    let project = |v: &mut [C64]| {
        let s = inner(phi, v);
        for (vi, p) in v.iter_mut().zip(phi) {
            *vi -= p * s;
        }
    };
    let rhs: Vec<Vec<C64>> = bs
        .iter()
        .map(|b| {
            let mut r = b.clone();
            project(&mut r);
            r
        })
        .collect();
    if n > DENSE_MAX_DIM {
        return rhs.iter().map(|r| projected_cg(h, e, phi, r)).collect();
    }
    let mut m = DMatrix::from_element(n + 1, n + 1, ZERO);
    for &(r, c, v) in h.entries() {
        m[(r, c)] = v;
    }
    for i in 0..n {
        m[(i, i)] -= C64::new(e, 0.0);
        m[(i, n)] = phi[i];
        m[(n, i)] = phi[i].conj();
    }
    let lu = m.lu();
    rhs.iter()
        .map(|r| {
            let mut v = nalgebra::DVector::from_element(n + 1, ZERO);
            for i in 0..n {
                v[i] = r[i];
            }
            let sol = lu.solve(&v).ok_or(Error::SingularShift { re: e, im: 0.0 })?;
            let mut x: Vec<C64> = sol.iter().take(n).copied().collect();
            project(&mut x);
            Ok(x)
        })
        .collect()
}

/// Conjugate gradients for `P⊥(H − E)P⊥`, which is positive on the range of
/// `P⊥` when `E` is the lowest eigenvalue.
fn projected_cg(h: &SparseOperator, e: f64, phi: &[C64], rhs: &[C64]) -> Result<Vec<C64>> {
    let n = h.dim();
    let project = |v: &mut [C64]| {
        let s = inner(phi, v);
        for (vi, p) in v.iter_mut().zip(phi) {
            *vi -= p * s;
        }
    };
    let mut x = vec![ZERO; n];
    let mut r = rhs.to_vec();
    let mut p = r.clone();
    let mut rr = inner(&r, &r).re;
    let target = 1e-13 * rr.sqrt().max(f64::MIN_POSITIVE);
    let max_iter = 50 * n;
    let mut ap = vec![ZERO; n];
    for it in 0..max_iter {
        if rr.sqrt() <= target {
            return Ok(x);
        }
        h.apply_into(&p, &mut ap);
        for (a, pi) in ap.iter_mut().zip(&p) {
            *a -= pi * e;
        }
        project(&mut ap);
        let pap = inner(&p, &ap).re;
        if !(pap > 0.0) {
            return Err(Error::NoConvergence {
                iterations: it,
                residual: rr.sqrt(),
            });
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += p[i] * alpha;
            r[i] -= ap[i] * alpha;
        }
        let rr_new = inner(&r, &r).re;
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + p[i] * beta;
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: rr.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::enumerate_basis;
    use crate::model::{assemble_hn, rho, ModelParams};
    use crate::operator::c;
    use proptest::prelude::*;

    #[test]
    fn bare_atom() {
        let h = SparseOperator::from_diagonal(&[2.0, 0.0]);
        let r = lowest_two(&h, 1e-12).unwrap();
        assert_eq!(r.e0, 0.0);
        assert_eq!(r.e1, 2.0);
        assert_eq!(r.phi0, vec![ZERO, c(1.0)]);
        assert_eq!(r.method, Method::Dense);
    }

    #[test]
    fn decoupled_level_two() {
        let p = ModelParams {
            g: 0.0,
            ..ModelParams::baseline()
        };
        let r = lowest_two(&assemble_hn(&p, 2).unwrap(), 1e-12).unwrap();
        assert_eq!(r.e0, 0.0);
        // The discrete model has no continuum; the threshold sits at ρ₂.
        assert_eq!(r.gap.min(rho(&p, 2)), 2f64.min(rho(&p, 2)));
    }

    #[test]
    fn refinement_gives_small_residual() {
        let p = ModelParams::baseline();
        for n in 1..6 {
            let r = lowest_two(&assemble_hn(&p, n).unwrap(), 1e-11).unwrap();
            assert!(r.residual < 1e-15, "n={n} residual={}", r.residual);
            assert!((norm(&r.phi0) - 1.0).abs() < 1e-14);
            assert!(r.phi0.iter().any(|v| v.im == 0.0 && v.re > 0.0));
        }
    }

    #[test]
    fn dense_and_iterative_paths_agree() {
        let p = ModelParams::baseline();
        for n in 2..5 {
            let h = assemble_hn(&p, n).unwrap();
            let dense = lowest_two(&h, 1e-11).unwrap();
            let opts = SolverOptions {
                dense_max_dim: 0,
                ..SolverOptions::default()
            };
            let iter = lowest_two_with(&h, 1e-11, &opts, None).unwrap();
            assert_eq!(iter.method, Method::Iterative);
            assert!((dense.e0 - iter.e0).abs() < 1e-10);
            assert!((dense.e1 - iter.e1).abs() < 1e-10);
            assert!(proj_distance(&dense.phi0, &iter.phi0).unwrap() < 1e-8);
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let h = SparseOperator::from_triplets(2, vec![(0, 1, c(1.0))]);
        assert!(lowest_two(&h, 1e-12).is_err());
    }

    #[test]
    fn distance_examples() {
        let a = vec![c(1.0), ZERO];
        let b = vec![ZERO, c(1.0)];
        assert_eq!(proj_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(proj_distance(&a, &b).unwrap(), 1.0);
        let d = proj_distance(&a, &[c(0.8), c(0.6)]).unwrap();
        assert!((d - 0.6).abs() < 1e-15);
        assert!(proj_distance(&a, &[c(1.0)]).is_err());
    }

    #[test]
    fn projection_handles_check_tags() {
        let tag = SpaceTag {
            level: 1,
            modes: 1,
            n_max: 3,
        };
        let a = ProjectionHandle::new(vec![c(1.0), ZERO], tag).unwrap();
        let b = ProjectionHandle::new(vec![ZERO, c(1.0)], SpaceTag { level: 2, ..tag }).unwrap();
        assert!(a.distance(&b).is_err());
        assert!(ProjectionHandle::new(vec![c(2.0)], tag).is_err());
        assert_eq!(a.to_dense()[(0, 0)], c(1.0));
    }

    #[test]
    fn embedding_is_an_isometry() {
        let small = enumerate_basis(2, 3).unwrap();
        let large = enumerate_basis(3, 3).unwrap();
        let phi: Vec<C64> = (0..2 * small.dim())
            .map(|i| C64::new(i as f64, 1.0 - i as f64))
            .collect();
        let psi: Vec<C64> = (0..2 * small.dim()).map(|i| C64::new((i * i) as f64, 0.5)).collect();
        let ep = embed_vacuum(&phi, &small, &large).unwrap();
        let eq = embed_vacuum(&psi, &small, &large).unwrap();
        assert_eq!(norm(&ep), norm(&phi));
        assert_eq!(inner(&ep, &eq), inner(&phi, &psi));
        let vac = embed_vacuum(&[c(1.0)], &enumerate_basis(0, 3).unwrap(), &large).unwrap();
        assert_eq!(vac[0], c(1.0));
        assert!(embed_vacuum(&phi, &large, &small).is_err());
    }

    #[test]
    fn deflated_solve_inverts_on_complement() {
        let h = SparseOperator::from_diagonal(&[0.0, 1.0, 4.0]);
        let phi = vec![c(1.0), ZERO, ZERO];
        let x = deflated_solve(&h, 0.0, &phi, &[c(3.0), c(2.0), c(8.0)]).unwrap();
        assert!((x[0]).norm() < 1e-15);
        assert!((x[1] - c(2.0)).norm() < 1e-14);
        assert!((x[2] - c(2.0)).norm() < 1e-14);
    }

    #[test]
    fn projected_cg_matches_dense_solve() {
        let p = ModelParams::baseline();
        let h = assemble_hn(&p, 2).unwrap();
        let r = lowest_two(&h, 1e-11).unwrap();
        let b: Vec<C64> = (0..h.dim()).map(|i| C64::new(1.0 / (i + 1) as f64, 0.0)).collect();
        let dense = deflated_solve(&h, r.e0, &r.phi0, &b).unwrap();
        let s = inner(&r.phi0, &b);
        let rhs: Vec<C64> = b.iter().zip(&r.phi0).map(|(bi, q)| bi - q * s).collect();
        let cg = projected_cg(&h, r.e0, &r.phi0, &rhs).unwrap();
        let diff: f64 = dense
            .iter()
            .zip(&cg)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(diff < 1e-8 * norm(&dense), "diff {diff}");
    }

    fn unit_vector(len: usize) -> impl Strategy<Value = Vec<C64>> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), len).prop_filter_map("nonzero", |v| {
            let mut v: Vec<C64> = v.into_iter().map(|(a, b)| C64::new(a, b)).collect();
            (normalize(&mut v) > 1e-3).then_some(v)
        })
    }

    proptest! {
        #[test]
        fn distance_is_a_metric(a in unit_vector(5), b in unit_vector(5), c3 in unit_vector(5)) {
            let ab = proj_distance(&a, &b).unwrap();
            let ba = proj_distance(&b, &a).unwrap();
            prop_assert_eq!(ab, ba);
            prop_assert!((0.0..=1.0).contains(&ab));
            let ac = proj_distance(&a, &c3).unwrap();
            let cb = proj_distance(&c3, &b).unwrap();
            prop_assert!(ab <= ac + cb + 1e-12);
            prop_assert!(proj_distance(&a, &a).unwrap() < 1e-7);
        }

        #[test]
        fn distance_is_phase_invariant(a in unit_vector(4), b in unit_vector(4), t in 0.0f64..6.3) {
            let rot: Vec<C64> = b.iter().map(|x| x * C64::from_polar(1.0, t)).collect();
            let d0 = proj_distance(&a, &b).unwrap();
            let d1 = proj_distance(&a, &rot).unwrap();
            prop_assert!((d0 - d1).abs() < 1e-12);
        }
    }
}
