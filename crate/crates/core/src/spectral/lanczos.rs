//! Restarted Lanczos for the lowest eigenpair of a sparse Hermitian matrix,
//! with full reorthogonalization and explicit deflation of known vectors.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::operator::{inner, norm, normalize, SparseOperator, C64, ZERO};

#[derive(Clone, Copy, Debug)]
pub struct LanczosOptions {
    /// Krylov dimension before an explicit restart.
    pub max_krylov: usize,
    pub max_restarts: usize,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            max_krylov: 240,
            max_restarts: 400,
        }
    }
}

pub struct LanczosOutcome {
    pub value: f64,
    pub vector: Vec<C64>,
    pub residual: f64,
    pub matvecs: usize,
}

/// Deterministic start vector with no special structure.
pub fn default_start(dim: usize) -> Vec<C64> {
    let mut v: Vec<C64> = (0..dim)
        .map(|i| {
            let x = ((i as u64).wrapping_mul(2_654_435_761) % 1009) as f64 / 1009.0;
            C64::new(1.0 + x, 0.25 * x)
        })
        .collect();
    normalize(&mut v);
    v
}

fn orthogonalize(w: &mut [C64], against: &[Vec<C64>]) {
    // Two passes of classical Gram–Schmidt.
    for _ in 0..2 {
        for q in against {
            let proj = inner(q, w);
            for (wi, qi) in w.iter_mut().zip(q) {
                *wi -= proj * qi;
            }
        }
    }
}

/// Lowest eigenpair of `h` on the orthogonal complement of `deflate`
/// (which must be orthonormal).
pub fn lowest(
    h: &SparseOperator,
    start: Option<&[C64]>,
    deflate: &[Vec<C64>],
    tol: f64,
    opts: LanczosOptions,
) -> Result<LanczosOutcome> {
    let dim = h.dim();
    let room = dim.saturating_sub(deflate.len());
    if room == 0 {
        return Err(Error::InvalidParameter {
            field: "deflate",
            reason: "deflation space fills the whole matrix".into(),
        });
    }
    let mut v = match start {
        Some(s) if s.len() == dim => s.to_vec(),
        _ => default_start(dim),
    };
    orthogonalize(&mut v, deflate);
    if normalize(&mut v) < 1e-8 {
        v = default_start(dim);
        orthogonalize(&mut v, deflate);
        normalize(&mut v);
    }

    let kmax = opts.max_krylov.min(room).max(1);
    let mut matvecs = 0;
    let mut last_residual = f64::INFINITY;
    let mut w = vec![ZERO; dim];

    for _ in 0..opts.max_restarts.max(1) {
        let mut basis: Vec<Vec<C64>> = vec![v.clone()];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut ritz: Option<(f64, Vec<f64>)> = None;

        for k in 0..kmax {
            h.apply_into(&basis[k], &mut w);
            matvecs += 1;
            let a = inner(&basis[k], &w).re;
            alpha.push(a);
            orthogonalize(&mut w, &basis);
            orthogonalize(&mut w, deflate);
            let b = norm(&w);

            let at_end = k + 1 == kmax;
            let breakdown = b <= 1e-14 * (a.abs() + 1.0);
            if at_end || breakdown || (k + 1) % 8 == 0 {
                let (theta, s) = tridiagonal_lowest(&alpha, &beta);
                let estimate = b * s[s.len() - 1].abs();
                ritz = Some((theta, s));
                if breakdown || estimate <= 0.1 * tol || at_end {
                    break;
                }
            }
            beta.push(b);
            let next: Vec<C64> = w.iter().map(|x| x / b).collect();
            basis.push(next);
        }

        let (_, s) = ritz.expect("at least one Ritz pair per cycle");
        let mut x = vec![ZERO; dim];
        for (coef, q) in s.iter().zip(&basis) {
            for (xi, qi) in x.iter_mut().zip(q) {
                *xi += qi * *coef;
            }
        }
        orthogonalize(&mut x, deflate);
        normalize(&mut x);
        h.apply_into(&x, &mut w);
        matvecs += 1;
        let value = inner(&x, &w).re;
        let residual = w
            .iter()
            .zip(&x)
            .map(|(hx, xi)| (hx - xi * value).norm_sqr())
            .sum::<f64>()
            .sqrt();
        last_residual = residual;
        if residual <= tol {
            return Ok(LanczosOutcome {
                value,
                vector: x,
                residual,
                matvecs,
            });
        }
        v = x;
    }
    Err(Error::NoConvergence {
        iterations: matvecs,
        residual: last_residual,
    })
}

fn tridiagonal_lowest(alpha: &[f64], beta: &[f64]) -> (f64, Vec<f64>) {
    let k = alpha.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = t.symmetric_eigen();
    let (imin, theta) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty tridiagonal");
    (theta, eig.eigenvectors.column(imin).iter().copied().collect())
}
