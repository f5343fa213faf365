//! Slow reference implementations for cross-checking the primary modules.
//!
//! Nothing here reuses the primary eigensolvers or quadrature: spectra come
//! from Householder tridiagonalization plus Sturm bisection, shell integrals
//! from a Golub–Welsch rule built on the same bisection.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{build_mode_set, rho, ModelParams};
use crate::operator::{SparseOperator, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Nodes of the reference rule on each smooth piece of a shell.
    pub quad_nodes: usize,
    pub dense_dim_cap: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            quad_nodes: 64,
            dense_dim_cap: 4000,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.quad_nodes < 16 {
            return Err(Error::InvalidParameter {
                field: "quad_nodes",
                reason: format!("need at least 16, got {}", self.quad_nodes),
            });
        }
        if self.dense_dim_cap < 2 {
            return Err(Error::InvalidParameter {
                field: "dense_dim_cap",
                reason: format!("need at least 2, got {}", self.dense_dim_cap),
            });
        }
        Ok(())
    }
}

/// Reduces a Hermitian matrix to real tridiagonal form `(diag, |offdiag|)`.
fn tridiagonalize(mut a: Vec<C64>, n: usize) -> (Vec<f64>, Vec<f64>) {
    let at = |i: usize, j: usize| i * n + j;
    let mut off = vec![0.0; n.saturating_sub(1)];
    for k in 0..n.saturating_sub(2) {
        let m = n - k - 1;
        let x: Vec<C64> = (0..m).map(|i| a[at(k + 1 + i, k)]).collect();
        let xnorm = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let phase = if x[0].norm() == 0.0 {
            C64::new(1.0, 0.0)
        } else {
            x[0] / x[0].norm()
        };
        let alpha = -phase * xnorm;
        let mut v = x;
        v[0] -= alpha;
        let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            off[k] = xnorm;
            continue;
        }
        for z in &mut v {
            *z /= vnorm;
        }
        // Trailing block B ← B − 2 v w† − 2 w v†, with p = B v, w = p − (v†p) v.
        let p: Vec<C64> = (0..m)
            .map(|i| (0..m).map(|j| a[at(k + 1 + i, k + 1 + j)] * v[j]).sum())
            .collect();
        let kappa: C64 = v.iter().zip(&p).map(|(vi, pi)| vi.conj() * pi).sum();
        let w: Vec<C64> = p.iter().zip(&v).map(|(pi, vi)| pi - vi * kappa.re).collect();
        for i in 0..m {
            for j in 0..m {
                let d = v[i] * w[j].conj() + w[i] * v[j].conj();
                a[at(k + 1 + i, k + 1 + j)] -= d * 2.0;
            }
        }
        off[k] = xnorm;
        for i in 0..m {
            a[at(k + 1 + i, k)] = C64::new(0.0, 0.0);
            a[at(k, k + 1 + i)] = C64::new(0.0, 0.0);
        }
    }
    if n >= 2 {
        off[n - 2] = a[at(n - 1, n - 2)].norm();
    }
    let diag = (0..n).map(|i| a[at(i, i)].re).collect();
    (diag, off)
}

/// Real symmetric variant of [`tridiagonalize`]; updates one triangle.
fn tridiagonalize_real(mut a: Vec<f64>, n: usize) -> (Vec<f64>, Vec<f64>) {
    let at = |i: usize, j: usize| i * n + j;
    let mut off = vec![0.0; n.saturating_sub(1)];
    for k in 0..n.saturating_sub(2) {
        let m = n - k - 1;
        let mut v: Vec<f64> = (0..m).map(|i| a[at(k + 1 + i, k)]).collect();
        let xnorm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let alpha = if v[0] >= 0.0 { -xnorm } else { xnorm };
        v[0] -= alpha;
        let vnorm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        off[k] = xnorm;
        if vnorm == 0.0 {
            continue;
        }
        for x in &mut v {
            *x /= vnorm;
        }
        let p: Vec<f64> = (0..m)
            .map(|i| {
                let start = at(k + 1 + i, k + 1);
                a[start..start + m].iter().zip(&v).map(|(x, y)| x * y).sum()
            })
            .collect();
        let kappa: f64 = v.iter().zip(&p).map(|(x, y)| x * y).sum();
        let w: Vec<f64> = p.iter().zip(&v).map(|(pi, vi)| pi - vi * kappa).collect();
        for i in 0..m {
            for j in 0..=i {
                let d = 2.0 * (v[i] * w[j] + w[i] * v[j]);
                a[at(k + 1 + i, k + 1 + j)] -= d;
                if i != j {
                    a[at(k + 1 + j, k + 1 + i)] -= d;
                }
            }
        }
    }
    if n >= 2 {
        off[n - 2] = a[at(n - 1, n - 2)].abs();
    }
    let diag = (0..n).map(|i| a[at(i, i)]).collect();
    (diag, off)
}

/// Number of eigenvalues of the tridiagonal matrix strictly below `x`.
fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let tiny = f64::MIN_POSITIVE.sqrt();
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..diag.len() {
        let e2 = if i == 0 { 0.0 } else { off[i - 1] * off[i - 1] };
        q = diag[i] - x - if i == 0 { 0.0 } else { e2 / q };
        if q == 0.0 {
            q = -tiny;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// All eigenvalues of a symmetric tridiagonal matrix, ascending.
fn tridiagonal_eigenvalues(diag: &[f64], off: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..n {
        let r = if i > 0 { off[i - 1] } else { 0.0 } + if i + 1 < n { off[i] } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    let pad = 1e-12 * (lo.abs().max(hi.abs()) + 1.0);
    let (lo, hi) = (lo - pad, hi + pad);
    // Absolute resolution relative to the spectral radius.
    let resolution = f64::EPSILON * lo.abs().max(hi.abs());
    (0..n)
        .map(|k| {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b || b - a <= resolution {
                    break;
                }
                if sturm_count(diag, off, mid) > k {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            0.5 * (a + b)
        })
        .collect()
}

/// Full spectrum of a Hermitian operator, ascending.
pub fn dense_spectrum(h: &SparseOperator) -> Result<Vec<f64>> {
    dense_spectrum_with(h, &OracleConfig::default())
}

pub fn dense_spectrum_with(h: &SparseOperator, config: &OracleConfig) -> Result<Vec<f64>> {
    config.validate()?;
    let n = h.dim();
    if n > config.dense_dim_cap {
        return Err(Error::OracleCap {
            dim: n,
            cap: config.dense_dim_cap,
        });
    }
    let (diag, off) = if h.entries().iter().all(|e| e.2.im == 0.0) {
        let mut a = vec![0.0; n * n];
        for &(r, c, v) in h.entries() {
            a[r * n + c] += v.re;
        }
        tridiagonalize_real(a, n)
    } else {
        let mut a = vec![C64::new(0.0, 0.0); n * n];
        for &(r, c, v) in h.entries() {
            a[r * n + c] += v;
        }
        tridiagonalize(a, n)
    };
    Ok(tridiagonal_eigenvalues(&diag, &off))
}

/// Golub–Welsch Gauss–Legendre rule on `[a, b]`.
pub fn reference_rule(nodes: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let off: Vec<f64> = (1..nodes)
        .map(|k| {
            let k = k as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        })
        .collect();
    let xs = tridiagonal_eigenvalues(&vec![0.0; nodes], &off);
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    xs.into_iter()
        .map(|x| {
            // Christoffel weight 1 / Σ p_k(x)² over orthonormal Legendre polynomials.
            let mut prev = 0.0;
            let mut cur = 1.0 / 2f64.sqrt();
            let mut sum = cur * cur;
            for k in 1..nodes {
                let beta_k = off[k - 1];
                let beta_prev = if k >= 2 { off[k - 2] } else { 0.0 };
                let next = (x * cur - beta_prev * prev) / beta_k;
                prev = cur;
                cur = next;
                sum += cur * cur;
            }
            (mid + half * x, half / sum)
        })
        .collect()
}

/// `∫_{ρ_{n+1}}^{ρ_n} (g²/4π) f(r)² r · r^moment dr`, the shell integral of
/// `|η_n|² ω^moment` over momentum space.
pub fn shell_integral(params: &ModelParams, n: usize, moment: i32) -> Result<f64> {
    shell_integral_with(params, n, moment, &OracleConfig::default())
}

pub fn shell_integral_with(params: &ModelParams, n: usize, moment: i32, config: &OracleConfig) -> Result<f64> {
    config.validate()?;
    if !(-1..=1).contains(&moment) {
        return Err(Error::InvalidParameter {
            field: "moment",
            reason: format!("must be -1, 0 or 1, got {moment}"),
        });
    }
    let (inner, outer) = (rho(params, n + 1), rho(params, n));
    let mut cuts = vec![inner];
    cuts.extend(
        params
            .profile
            .breakpoints()
            .into_iter()
            .filter(|&r| r > inner && r < outer),
    );
    cuts.push(outer);
    let prefactor = params.g * params.g / (4.0 * PI);
    let mut total = 0.0;
    for w in cuts.windows(2) {
        for (r, weight) in reference_rule(config.quad_nodes, w[0], w[1]) {
            let f = params.profile.eval(r);
            total += weight * f * f * r.powi(1 + moment);
        }
    }
    Ok(prefactor * total)
}

/// Second-order ground energy `−Σ_j λ_j² / (2 + ω_j)` of level `n`.
pub fn perturbative_energy(params: &ModelParams, n: usize) -> Result<f64> {
    let modes = build_mode_set(params, n)?;
    Ok(-modes
        .couplings()
        .iter()
        .zip(modes.frequencies())
        .map(|(l, w)| l * l / (2.0 + w))
        .sum::<f64>())
}

/// Exact ground energy `−λ²/ω` of one mode coupled through `σ₃`.
pub fn coherent_energy(omega: f64, lambda: f64) -> f64 {
    -lambda * lambda / omega
}

/// `|⟨Ω, coherent state with α = λ/ω⟩| = exp(−α²/2)`.
pub fn coherent_vacuum_overlap(omega: f64, lambda: f64) -> f64 {
    let alpha = lambda / omega;
    (-0.5 * alpha * alpha).exp()
}

/// `diag(2, 0) + ω a†a + λ σ₃ (a + a†)` on `C² ⊗ span{|0⟩..|n_max⟩}`,
/// written out entry by entry.
pub fn single_mode_diagonal_hamiltonian(omega: f64, lambda: f64, n_max: u32) -> SparseOperator {
    let d = n_max as usize + 1;
    let mut t = Vec::new();
    for (spin, (shift, sign)) in [(2.0, 1.0), (0.0, -1.0)].into_iter().enumerate() {
        let base = spin * d;
        for k in 0..d {
            t.push((base + k, base + k, C64::new(shift + omega * k as f64, 0.0)));
            if k + 1 < d {
                let v = C64::new(sign * lambda * ((k + 1) as f64).sqrt(), 0.0);
                t.push((base + k, base + k + 1, v));
                t.push((base + k + 1, base + k, v));
            }
        }
    }
    SparseOperator::from_triplets(2 * d, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::enumerate_basis;
    use crate::model::{assemble_hn, discretize_shell, interaction_norms, Profile};
    use crate::operator::{c, PAULI_X};
    use crate::spectral::lowest_two;
    use proptest::prelude::*;

    #[test]
    fn atom_spectrum() {
        let h = SparseOperator::from_diagonal(&[2.0, 0.0]);
        let s = dense_spectrum(&h).unwrap();
        assert!(s[0].abs() < 1e-15 && (s[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn decoupled_level_one() {
        let p = ModelParams {
            g: 0.0,
            n_max: 2,
            ..ModelParams::baseline()
        };
        let w = discretize_shell(&p, 0).unwrap().nodes[0].omega;
        let spec = dense_spectrum(&assemble_hn(&p, 1).unwrap()).unwrap();
        let mut expected: Vec<f64> = [0.0, 2.0]
            .iter()
            .flat_map(|a| (0..3).map(move |k| a + w * k as f64))
            .collect();
        expected.sort_by(f64::total_cmp);
        assert_eq!(spec.len(), 6);
        for (x, y) in spec.iter().zip(&expected) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn complex_hermitian_spectrum() {
        // σ_y has eigenvalues ±1.
        let h = SparseOperator::from_triplets(2, vec![(0, 1, C64::new(0.0, -1.0)), (1, 0, C64::new(0.0, 1.0))]);
        let s = dense_spectrum(&h).unwrap();
        assert!((s[0] + 1.0).abs() < 1e-15 && (s[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn matches_lowest_two_at_level_two() {
        let h = assemble_hn(&ModelParams::baseline(), 2).unwrap();
        let s = dense_spectrum(&h).unwrap();
        let r = lowest_two(&h, 1e-11).unwrap();
        assert!((s[0] - r.e0).abs() < 1e-12);
        assert!((s[1] - r.e1).abs() < 1e-12);
    }

    #[test]
    fn cap_is_enforced() {
        let cfg = OracleConfig {
            quad_nodes: 16,
            dense_dim_cap: 2,
        };
        let h = SparseOperator::identity(3);
        assert!(matches!(
            dense_spectrum_with(&h, &cfg),
            Err(Error::OracleCap { dim: 3, cap: 2 })
        ));
        assert!(OracleConfig { quad_nodes: 8, ..cfg }.validate().is_err());
    }

    #[test]
    fn reference_rule_integrates_polynomials() {
        let rule = reference_rule(16, 0.0, 2.0);
        let total: f64 = rule.iter().map(|x| x.1).sum();
        assert!((total - 2.0).abs() < 1e-14);
        let x30: f64 = rule.iter().map(|(x, w)| w * x.powi(30)).sum();
        let exact = 2f64.powi(31) / 31.0;
        assert!((x30 - exact).abs() < 1e-13 * exact);
    }

    #[test]
    fn shell_integrals_closed_form() {
        let p = ModelParams::baseline();
        for n in 0..8 {
            let (a, b) = (rho(&p, n), rho(&p, n + 1));
            let m0 = p.g * p.g * (a * a - b * b) / (8.0 * PI);
            let m1 = p.g * p.g * (a - b) / (4.0 * PI);
            assert!((shell_integral(&p, n, 0).unwrap() - m0).abs() < 1e-14 * m0);
            assert!((shell_integral(&p, n, -1).unwrap() - m1).abs() < 1e-14 * m1);
            let (l2, weighted) = interaction_norms(&discretize_shell(&p, n).unwrap());
            assert!((l2 * l2 - m0).abs() < 1e-12 * m0);
            assert!((weighted * weighted - m1).abs() < 1e-12 * m1);
        }
        let zero = ModelParams {
            profile: Profile::zero(),
            ..p
        };
        assert_eq!(shell_integral(&zero, 0, 1).unwrap(), 0.0);
        assert!(shell_integral(&zero, 0, 2).is_err());
    }

    #[test]
    fn piecewise_profile_splits_at_kinks() {
        let p = ModelParams {
            profile: Profile::Table(vec![(0.0, 0.0), (0.2, 1.0)]),
            ..ModelParams::baseline()
        };
        // Over [0.05, 0.5]: (f(r) = 5r up to 0.2, then 1) ∫ f² r dr.
        let exact = 25.0 * (0.2f64.powi(4) - 0.05f64.powi(4)) / 4.0 + (0.25 - 0.04) / 2.0;
        let got = shell_integral(&p, 0, 0).unwrap() * 4.0 * PI / (p.g * p.g);
        assert!((got - exact).abs() < 1e-14);
    }

    #[test]
    fn perturbative_level_one() {
        let p = ModelParams::baseline();
        let e = perturbative_energy(&p, 1).unwrap();
        assert!((e + 4.33e-9).abs() < 5e-12);
        let exact = lowest_two(&assemble_hn(&p, 1).unwrap(), 1e-11).unwrap().e0;
        assert!((e - exact).abs() < 10.0 * p.g.powi(4));
        let off = ModelParams { g: 0.0, ..p };
        assert_eq!(perturbative_energy(&off, 4).unwrap(), 0.0);
    }

    #[test]
    fn perturbative_is_additive_over_shells() {
        let p = ModelParams::baseline();
        for n in 1..6 {
            let step = perturbative_energy(&p, n + 1).unwrap() - perturbative_energy(&p, n).unwrap();
            let m = discretize_shell(&p, n).unwrap().nodes[0];
            assert!((step + m.lambda * m.lambda / (2.0 + m.omega)).abs() < 1e-24);
        }
    }

    #[test]
    fn single_mode_coherent_energy() {
        for &(w, l) in &[(1.0, 0.1), (0.3, 0.03), (0.05, 1e-3)] {
            let s = dense_spectrum(&single_mode_diagonal_hamiltonian(w, l, 6)).unwrap();
            assert!((s[0] - coherent_energy(w, l)).abs() < 1e-10);
        }
        assert_eq!(coherent_vacuum_overlap(1.0, 0.0), 1.0);
    }

    #[test]
    fn single_mode_matches_fock_assembly() {
        let basis = enumerate_basis(1, 4).unwrap();
        let spec = dense_spectrum(&single_mode_diagonal_hamiltonian(0.7, 0.0, 4)).unwrap();
        assert_eq!(spec.len(), 2 * basis.dim());
        let x = SparseOperator::identity(1).spin_kron(PAULI_X).scale(c(0.5));
        let s = dense_spectrum(&x).unwrap();
        assert!((s[0] + 0.5).abs() < 1e-15 && (s[1] - 0.5).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn spectrum_matches_nalgebra(seed in prop::collection::vec(-1.0f64..1.0, 72)) {
            let n = 6;
            let mut t = Vec::new();
            for i in 0..n {
                t.push((i, i, c(seed[i])));
                for j in 0..i {
                    let v = C64::new(seed[n + i * n + j], seed[(i * 7 + j * 3) % 72]);
                    t.push((i, j, v));
                    t.push((j, i, v.conj()));
                }
            }
            let h = SparseOperator::from_triplets(n, t);
            let ours = dense_spectrum(&h).unwrap();
            let mut theirs: Vec<f64> = h.to_dense().symmetric_eigenvalues().iter().copied().collect();
            theirs.sort_by(f64::total_cmp);
            for (a, b) in ours.iter().zip(&theirs) {
                prop_assert!((a - b).abs() < 1e-12);
            }
            prop_assert!(ours.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
