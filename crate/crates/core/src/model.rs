//! The spin-boson model, its infrared shells, and the cutoff Hamiltonians.
//!
//! Momentum space is cut into annuli `ρ_{n+1} <= |k| < ρ_n` with
//! `ρ_n = κ γ^n`. Each annulus is discretized radially by a `J`-point
//! Gauss–Legendre rule; with a radial profile only the s-wave couples, so
//! one radial node is one bosonic mode. Level `n` carries the modes of shells
//! `0..n` and acts on `C^2 ⊗ Fock(J n modes, N_max)`, with spin index 0 the
//! excited atomic level (energy 2) and spin index 1 the ground level.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{self, enumerate_basis, FockBasis};
use crate::operator::{c, SparseOperator, C64, PAULI_X, PAULI_Z};
use crate::quadrature::gauss_legendre_on;

/// Excited atomic level; the ground level sits at 0.
pub const ATOM_GAP: f64 = 2.0;

/// Radial coupling profile `f(|k|)`, bounded by 1 in absolute value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Profile {
    Named(NamedProfile),
    /// `(r, f(r))` samples, linearly interpolated and held constant
    /// outside the sampled range.
    Table(Vec<(f64, f64)>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NamedProfile {
    Unit,
    Zero,
}

impl Profile {
    pub fn unit() -> Self {
        Profile::Named(NamedProfile::Unit)
    }

    pub fn zero() -> Self {
        Profile::Named(NamedProfile::Zero)
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Profile::Named(NamedProfile::Unit) => 1.0,
            Profile::Named(NamedProfile::Zero) => 0.0,
            Profile::Table(t) => {
                let first = t[0];
                let last = t[t.len() - 1];
                if r <= first.0 {
                    return first.1;
                }
                if r >= last.0 {
                    return last.1;
                }
                let k = t.partition_point(|p| p.0 <= r);
                let (r0, f0) = t[k - 1];
                let (r1, f1) = t[k];
                f0 + (f1 - f0) * (r - r0) / (r1 - r0)
            }
        }
    }

    /// Radii where the profile has kinks; empty for smooth profiles.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Profile::Table(t) => t.iter().map(|p| p.0).collect(),
            Profile::Named(_) => Vec::new(),
        }
    }

    fn validate(&self) -> Result<()> {
        if let Profile::Table(t) = self {
            if t.is_empty() {
                return Err(invalid("f_profile", "table must not be empty"));
            }
            if t.windows(2).any(|w| !(w[0].0 < w[1].0)) {
                return Err(invalid("f_profile", "radii must be strictly increasing"));
            }
            if t.iter().any(|p| !(p.0 >= 0.0) || !p.1.is_finite()) {
                return Err(invalid("f_profile", "radii must be non-negative and values finite"));
            }
            if let Some(p) = t.iter().find(|p| p.1.abs() > 1.0) {
                return Err(invalid(
                    "f_profile",
                    format!("|f({})| = {} violates the bound |f| <= 1", p.0, p.1.abs()),
                ));
            }
        }
        Ok(())
    }
}

/// Which Pauli matrix multiplies the field in the interaction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    /// `σ₁ ⊗ Φ`: the levels only talk to each other.
    OffDiagonal,
    /// `σ₃ ⊗ Φ`: exactly solvable contrast model.
    Diagonal,
}

impl Coupling {
    fn spin_matrix(self) -> [[C64; 2]; 2] {
        match self {
            Coupling::OffDiagonal => PAULI_X,
            Coupling::Diagonal => PAULI_Z,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub g: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub profile: Profile,
    /// Quadrature nodes per shell (`J`).
    pub nodes_per_shell: usize,
    /// Total photon-number cap.
    pub n_max: u32,
    /// Deepest cutoff level of the cascade.
    pub n_scales: usize,
    pub tol_eig: f64,
    /// Skip the coupling-regime hypotheses (`γ < 1/2`, `g < γ/64`).
    pub allow_out_of_regime: bool,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::baseline()
    }
}

impl ModelParams {
    /// `g = 0.001, γ = 0.1, κ = 0.5, J = 1, N_max = 3`, eight scales.
    pub fn baseline() -> Self {
        Self {
            g: 0.001,
            gamma: 0.1,
            kappa: 0.5,
            profile: Profile::unit(),
            nodes_per_shell: 1,
            n_max: 3,
            n_scales: 8,
            tol_eig: 1e-11,
            allow_out_of_regime: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g >= 0.0) || !self.g.is_finite() {
            return Err(invalid("g", "coupling must be finite and non-negative"));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(invalid("gamma", "scale ratio must lie in (0, 1)"));
        }
        if !(self.kappa > 0.0 && self.kappa < 1.0) {
            return Err(invalid("kappa", "ultraviolet cutoff must satisfy 0 < κ < 1"));
        }
        if self.nodes_per_shell < 1 {
            return Err(invalid("J", "need at least one quadrature node per shell"));
        }
        if !(self.tol_eig > 0.0) {
            return Err(invalid("tol_eig", "tolerance must be positive"));
        }
        self.profile.validate()?;
        if !self.allow_out_of_regime {
            if !(self.gamma < 0.5) {
                return Err(invalid(
                    "gamma",
                    format!("γ = {} violates the hypothesis γ < 1/2", self.gamma),
                ));
            }
            if !(self.g < self.gamma / 64.0) {
                return Err(invalid(
                    "g",
                    format!(
                        "g = {} violates the hypothesis g < 1/64 γ = {} (pass --allow-out-of-regime to explore)",
                        self.g,
                        self.gamma / 64.0
                    ),
                ));
            }
        }
        Ok(())
    }
}

fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field,
        reason: reason.into(),
    }
}

/// `ρ_n = κ γ^n`, as a left-to-right multiply chain.
pub fn rho(params: &ModelParams, n: usize) -> f64 {
    let mut r = params.kappa;
    for _ in 0..n {
        r *= params.gamma;
    }
    r
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellNode {
    /// Photon energy, equal to the radial node `r`.
    pub omega: f64,
    /// Mode coupling; `λ² = (g²/4π) w f(r)² r`, signed like `f`.
    pub lambda: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellModes {
    pub n: usize,
    pub nodes: Vec<ShellNode>,
}

impl ShellModes {
    pub fn frequencies(&self) -> Vec<f64> {
        self.nodes.iter().map(|m| m.omega).collect()
    }

    pub fn couplings(&self) -> Vec<f64> {
        self.nodes.iter().map(|m| m.lambda).collect()
    }
}

pub fn discretize_shell(params: &ModelParams, n: usize) -> Result<ShellModes> {
    if params.nodes_per_shell < 1 {
        return Err(invalid("J", "need at least one quadrature node per shell"));
    }
    let outer = rho(params, n);
    let inner = rho(params, n + 1);
    let prefactor = params.g * params.g / (4.0 * std::f64::consts::PI);
    let nodes = gauss_legendre_on(params.nodes_per_shell, inner, outer)
        .into_iter()
        .map(|(r, w)| {
            assert!(r >= inner && r < outer, "quadrature node {r} escaped shell {n}");
            let f = params.profile.eval(r);
            ShellNode {
                omega: r,
                lambda: f.signum() * (prefactor * w * f * f * r).sqrt(),
            }
        })
        .collect();
    Ok(ShellModes { n, nodes })
}

/// Modes of shells `0..n`, concatenated in shell order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeSet {
    pub shells: Vec<ShellModes>,
    pub offsets: Vec<usize>,
}

impl ModeSet {
    pub fn len(&self) -> usize {
        self.shells.iter().map(|s| s.nodes.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.shells.iter().flat_map(|s| s.frequencies()).collect()
    }

    pub fn couplings(&self) -> Vec<f64> {
        self.shells.iter().flat_map(|s| s.couplings()).collect()
    }

    /// Mode positions belonging to shell `m`.
    pub fn shell_range(&self, m: usize) -> std::ops::Range<usize> {
        let start = self.offsets[m];
        start..start + self.shells[m].nodes.len()
    }
}

pub fn build_mode_set(params: &ModelParams, n: usize) -> Result<ModeSet> {
    let mut shells = Vec::with_capacity(n);
    let mut offsets = Vec::with_capacity(n);
    let mut pos = 0;
    for m in 0..n {
        let shell = discretize_shell(params, m)?;
        offsets.push(pos);
        pos += shell.nodes.len();
        shells.push(shell);
    }
    Ok(ModeSet { shells, offsets })
}

/// Spin ⊗ truncated Fock space of cutoff level `n`.
#[derive(Clone, Debug)]
pub struct LevelSpace {
    pub level: usize,
    pub modes: ModeSet,
    pub basis: FockBasis,
}

impl LevelSpace {
    pub fn new(params: &ModelParams, level: usize) -> Result<Self> {
        let modes = build_mode_set(params, level)?;
        let basis = enumerate_basis(modes.len(), params.n_max)?;
        Ok(Self { level, modes, basis })
    }

    pub fn dim(&self) -> usize {
        2 * self.basis.dim()
    }

    pub fn fock_dim(&self) -> usize {
        self.basis.dim()
    }

    /// Index of `(spin, fock state)` in the doubled space.
    pub fn index(&self, spin: usize, fock: usize) -> usize {
        spin * self.basis.dim() + fock
    }

    /// `H_at ⊗ 1 + σ ⊗ Φ(λ restricted to coupled shells) + 1 ⊗ H_ph`.
    pub fn hamiltonian(&self, coupled_shells: std::ops::Range<usize>, coupling: Coupling) -> Result<SparseOperator> {
        let freqs = self.modes.frequencies();
        let free = fock::free_energies(&self.basis, &freqs);
        let fd = self.basis.dim();
        let diag = (0..2 * fd).map(|k| {
            let (spin, i) = (k / fd, k % fd);
            let atom = if spin == 0 { ATOM_GAP } else { 0.0 };
            (k, k, c(atom + free[i]))
        });
        let field = self.shell_coupling(coupled_shells, coupling)?;
        Ok(SparseOperator::from_triplets(
            2 * fd,
            diag.chain(field.entries().iter().copied()),
        ))
    }

    /// `σ ⊗ Φ(λ)` with only the modes of the given shells switched on.
    pub fn shell_coupling(&self, shells: std::ops::Range<usize>, coupling: Coupling) -> Result<SparseOperator> {
        let mut coeffs = vec![crate::operator::ZERO; self.modes.len()];
        for m in shells.filter(|&m| m < self.modes.shells.len()) {
            for (pos, node) in self.modes.shell_range(m).zip(&self.modes.shells[m].nodes) {
                coeffs[pos] = c(node.lambda);
            }
        }
        let phi = fock::field_matrix(&self.basis, &coeffs)?;
        Ok(phi.spin_kron(coupling.spin_matrix()))
    }

    /// `1 ⊗ H_ph` restricted to the modes of shell `m`.
    pub fn shell_free_energy(&self, m: usize) -> SparseOperator {
        let mut freqs = vec![0.0; self.modes.len()];
        for (pos, node) in self.modes.shell_range(m).zip(&self.modes.shells[m].nodes) {
            freqs[pos] = node.omega;
        }
        let free = fock::free_energies(&self.basis, &freqs);
        let doubled: Vec<f64> = free.iter().chain(free.iter()).copied().collect();
        SparseOperator::from_diagonal(&doubled)
    }

    /// Positions in `self` of `(spin, state ⊗ vacuum of the appended modes)`
    /// for every state of the smaller space.
    pub fn vacuum_embedding_of(&self, small: &LevelSpace) -> Result<Vec<usize>> {
        let map = embedding_map(&small.basis, &self.basis)?;
        Ok((0..2)
            .flat_map(|s| map.iter().map(move |&i| s * self.basis.dim() + i))
            .collect())
    }
}

/// Index map from `small` into `large` when `large` appends modes to
/// `small` under the same photon cap.
pub fn embedding_map(small: &FockBasis, large: &FockBasis) -> Result<Vec<usize>> {
    if large.modes() < small.modes() || large.n_max() != small.n_max() {
        return Err(Error::IncompatibleBases(format!(
            "cannot extend {} modes (cap {}) to {} modes (cap {})",
            small.modes(),
            small.n_max(),
            large.modes(),
            large.n_max()
        )));
    }
    let extra = large.modes() - small.modes();
    let mut occ = Vec::with_capacity(large.modes());
    small
        .states()
        .iter()
        .map(|s| {
            occ.clear();
            occ.extend_from_slice(s.occupations());
            occ.extend(std::iter::repeat_n(0, extra));
            large
                .index_of(&occ)
                .ok_or_else(|| Error::IncompatibleBases(format!("state {s:?} missing from the larger basis")))
        })
        .collect()
}

/// `H_n = H_at + Φ(G_n) + H_ph(ω_n)` on level `n`.
pub fn assemble_hn(params: &ModelParams, n: usize) -> Result<SparseOperator> {
    assemble_hn_with(params, n, Coupling::OffDiagonal)
}

pub fn assemble_hn_with(params: &ModelParams, n: usize, coupling: Coupling) -> Result<SparseOperator> {
    LevelSpace::new(params, n)?.hamiltonian(0..n, coupling)
}

/// `H̃_n = H_n ⊗ 1 + 1 ⊗ H_ph(ω̃_n)` on level `n + 1`: shell `n` present but free.
pub fn assemble_htilde(params: &ModelParams, n: usize) -> Result<SparseOperator> {
    assemble_htilde_with(params, n, Coupling::OffDiagonal)
}

pub fn assemble_htilde_with(params: &ModelParams, n: usize, coupling: Coupling) -> Result<SparseOperator> {
    LevelSpace::new(params, n + 1)?.hamiltonian(0..n, coupling)
}

/// `(√Σλ², √Σλ²/ω)`: the discrete `‖F‖` and `‖ω^{-1/2} F‖` of one shell.
pub fn interaction_norms(shell: &ShellModes) -> (f64, f64) {
    let l2 = shell.nodes.iter().map(|m| m.lambda * m.lambda).sum::<f64>().sqrt();
    let weighted = shell
        .nodes
        .iter()
        .map(|m| m.lambda * m.lambda / m.omega)
        .sum::<f64>()
        .sqrt();
    (l2, weighted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::ZERO;
    use std::f64::consts::PI;

    fn baseline() -> ModelParams {
        ModelParams::baseline()
    }

    #[test]
    fn rho_values() {
        let p = baseline();
        assert_eq!(rho(&p, 0), 0.5);
        assert!((rho(&p, 2) - 0.005).abs() < 1e-18);
        assert!((1..20).all(|n| rho(&p, n) < rho(&p, n - 1)));
    }

    #[test]
    fn baseline_shell_zero() {
        let s = discretize_shell(&baseline(), 0).unwrap();
        assert_eq!(s.nodes.len(), 1);
        assert_eq!(s.nodes[0].omega, 0.275);
        let expected_sq = 1e-6 / (4.0 * PI) * 0.45 * 0.275;
        assert!((s.nodes[0].lambda.powi(2) - expected_sq).abs() < 1e-22);
        assert!((s.nodes[0].lambda - 9.923e-5).abs() < 5e-8);
    }

    #[test]
    fn zero_profile_decouples() {
        let p = ModelParams {
            profile: Profile::zero(),
            nodes_per_shell: 3,
            ..baseline()
        };
        let s = discretize_shell(&p, 2).unwrap();
        assert!(s.nodes.iter().all(|m| m.lambda == 0.0));
        assert_eq!(interaction_norms(&s), (0.0, 0.0));
    }

    #[test]
    fn shell_weight_closed_form() {
        for j in 1..5 {
            let p = ModelParams {
                nodes_per_shell: j,
                ..baseline()
            };
            for n in 0..6 {
                let s = discretize_shell(&p, n).unwrap();
                let (hi, lo) = (rho(&p, n), rho(&p, n + 1));
                let sum: f64 = s.nodes.iter().map(|m| m.lambda * m.lambda).sum();
                let exact = p.g * p.g * (hi * hi - lo * lo) / (8.0 * PI);
                assert!(((sum - exact) / exact).abs() < 1e-14, "J={j} n={n}");
                assert!(s.nodes.iter().all(|m| m.omega >= lo && m.omega < hi && m.lambda >= 0.0));
            }
        }
    }

    #[test]
    fn mode_set_layout() {
        let p = ModelParams {
            nodes_per_shell: 2,
            ..baseline()
        };
        assert!(build_mode_set(&p, 0).unwrap().is_empty());
        let m = build_mode_set(&p, 3).unwrap();
        assert_eq!(m.len(), 6);
        assert_eq!(m.offsets, vec![0, 2, 4]);
        assert!(m.frequencies().iter().all(|&w| w >= rho(&p, 3)));
    }

    #[test]
    fn level_zero_is_the_bare_atom() {
        let h = assemble_hn(&baseline(), 0).unwrap();
        assert_eq!(h.dim(), 2);
        assert_eq!(
            h.to_dense(),
            nalgebra::DMatrix::from_row_slice(2, 2, &[c(2.0), ZERO, ZERO, ZERO])
        );
    }

    #[test]
    fn hamiltonians_are_exactly_hermitian_with_real_diagonal() {
        let p = ModelParams {
            nodes_per_shell: 2,
            ..baseline()
        };
        for n in 0..4 {
            let h = assemble_hn(&p, n).unwrap();
            assert!(h.hermitian_flag());
            assert!(h.diagonal().iter().all(|d| d.im == 0.0));
            let ht = assemble_htilde(&p, n).unwrap();
            assert!(ht.hermitian_flag());
        }
    }

    #[test]
    fn step_operator_is_the_shell_coupling() {
        let p = baseline();
        for n in 0..4 {
            let next = assemble_hn(&p, n + 1).unwrap();
            let tilde = assemble_htilde(&p, n).unwrap();
            let space = LevelSpace::new(&p, n + 1).unwrap();
            let step = space.shell_coupling(n..n + 1, Coupling::OffDiagonal).unwrap();
            assert_eq!(next.sub(&tilde).unwrap(), step);
        }
    }

    #[test]
    fn level_embeds_in_next_level() {
        let p = ModelParams {
            nodes_per_shell: 2,
            ..baseline()
        };
        for n in 0..3 {
            let small = LevelSpace::new(&p, n).unwrap();
            let large = LevelSpace::new(&p, n + 1).unwrap();
            let keep = large.vacuum_embedding_of(&small).unwrap();
            let compressed = assemble_hn(&p, n + 1).unwrap().compress(&keep);
            assert_eq!(compressed, assemble_hn(&p, n).unwrap());
        }
    }

    #[test]
    fn coupling_flips_spin_and_photon_parity() {
        let p = baseline();
        let space = LevelSpace::new(&p, 3).unwrap();
        let h = space.hamiltonian(0..3, Coupling::OffDiagonal).unwrap();
        let fd = space.fock_dim();
        for &(r, col, _) in h.entries().iter().filter(|e| e.0 != e.1) {
            let (sr, sc) = (r / fd, col / fd);
            let (nr, nc) = (space.basis.state(r % fd).total(), space.basis.state(col % fd).total());
            assert_ne!(sr, sc);
            assert_ne!(nr % 2, nc % 2);
        }
    }

    #[test]
    fn field_norm_bound_holds_for_unit_shells() {
        let p = ModelParams {
            nodes_per_shell: 3,
            ..baseline()
        };
        for n in 0..10 {
            let s = discretize_shell(&p, n).unwrap();
            let (l2, w) = interaction_norms(&s);
            let r = rho(&p, n);
            assert!(2.0 * (w + l2 / r.sqrt()) <= p.g * r.sqrt());
        }
    }

    #[test]
    fn baseline_interaction_norms() {
        let s = discretize_shell(&baseline(), 0).unwrap();
        let (l2, w) = interaction_norms(&s);
        assert!((l2 - 9.923e-5).abs() < 5e-8);
        assert!((w - 1.8924e-4).abs() < 5e-8);
    }

    #[test]
    fn validation_enforces_regime() {
        let mut p = baseline();
        p.g = p.gamma / 32.0;
        let err = p.validate().unwrap_err().to_string();
        assert!(err.contains("g < 1/64 γ"), "{err}");
        p.allow_out_of_regime = true;
        p.validate().unwrap();
        p.kappa = 1.0;
        assert!(p.validate().is_err());
        let bad = ModelParams {
            profile: Profile::Table(vec![(0.0, 0.5), (1.0, 1.5)]),
            ..baseline()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn table_profile_interpolates() {
        let f = Profile::Table(vec![(0.0, 0.0), (1.0, 1.0), (2.0, 0.5)]);
        assert_eq!(f.eval(0.5), 0.5);
        assert_eq!(f.eval(1.5), 0.75);
        assert_eq!(f.eval(3.0), 0.5);
        assert_eq!(f.eval(-1.0), 0.0);
    }
}
