//! The scale-by-scale cascade: ground states of every cutoff level, the
//! quantities linking consecutive levels, and the ledger of inequalities
//! they are expected to satisfy.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::enumerate_basis;
use crate::model::{discretize_shell, interaction_norms, rho, Coupling, LevelSpace, ModelParams};
use crate::operator::{inner, norm, SparseOperator, C64, PAULI_X, PAULI_Z, ZERO};
use crate::spectral::{
    deflated_solve, deflated_solve_many, dense_operator_norm, embed_vacuum, field_bound_lhs, lowest_two_with,
    proj_distance, quadratic_form_floor, quadratic_form_floor_deep, resolvent_coupling_norms, riesz_projection,
    EigenResult, Method, SolverOptions,
};
use crate::symmetry::{commutator_norm, sector_solve_with, spin_expectation, SectorLabels};

/// Contour used for the resolvent probes and the contour projector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RieszSettings {
    /// Radius of the circle around `E_n`, in units of `ρ_{n+1}`.
    #[serde(default = "default_radius_factor")]
    pub radius_factor: f64,
    #[serde(default = "default_riesz_nodes")]
    pub nodes: usize,
    /// Deepest level at which the dense contour projector is compared.
    #[serde(default = "default_riesz_levels")]
    pub max_level: usize,
}

fn default_radius_factor() -> f64 {
    0.125
}

fn default_riesz_nodes() -> usize {
    64
}

fn default_riesz_levels() -> usize {
    3
}

impl Default for RieszSettings {
    fn default() -> Self {
        Self {
            radius_factor: default_radius_factor(),
            nodes: default_riesz_nodes(),
            max_level: default_riesz_levels(),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CascadeOptions {
    pub coupling: Coupling,
    pub riesz: RieszSettings,
    pub solver: SolverOptions,
    /// Rerun with one more photon allowed and report the changes.
    pub truncation_check: bool,
    /// Measure the resolvent, quadratic-form, contour and coupling probes.
    pub probes: bool,
}

impl Default for CascadeOptions {
    fn default() -> Self {
        Self {
            coupling: Coupling::OffDiagonal,
            riesz: RieszSettings::default(),
            solver: SolverOptions::default(),
            truncation_check: true,
            probes: true,
        }
    }
}

/// Per-level summary. Fields tied to the next level are `None` at the
/// deepest one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleRecord {
    pub n: usize,
    pub rho_n: f64,
    pub e_n: f64,
    /// Distance to the rest of the spectrum, capped by the photon threshold `ρ_n`.
    pub gap_n: f64,
    /// `E₁ − E₀` of the truncated matrix alone.
    pub gap_discrete: f64,
    /// Gap of `H̃_n`, capped by `ρ_{n+1}`.
    pub gap_tilde: Option<f64>,
    pub energy_step: Option<f64>,
    /// `‖P^∞_{n+1} − P^∞_n‖`.
    pub proj_step: Option<f64>,
    /// `‖(H_n − E_n)⁻¹ P_n⊥ σ₁ φ_n‖`.
    pub contraction_q: f64,
    /// `|⟨φ_n, σ₁ φ_n⟩|` from the solve without sector restriction.
    pub sigma1_elem: f64,
    /// `‖G^∞_n‖`, bounding `‖H φ^∞_n − E_n φ^∞_n‖`.
    pub residual_full: f64,
    pub dim: usize,
    /// Parity of the ground state (0 when no sector split was used).
    pub ground_sector: i8,
    pub method: Method,
}

/// Raw measurements feeding the bound ledger.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScaleProbes {
    pub n: usize,
    pub commutator: f64,
    pub h_norm1: f64,
    pub field_lhs: f64,
    pub field_l2: f64,
    pub field_weighted: f64,
    /// `‖H_N φ^∞_n − E_n φ^∞_n‖` on the deepest level.
    pub certificate_lhs: f64,
    /// `‖P⊥_{n+1} P̃_n‖`.
    pub split_rhs: Option<f64>,
    /// `‖R⊥_{n+1} (P_n⊥ ⊗ P_Ω̃⊥) σ₁ (P_n ⊗ P_Ω̃⊥)‖`.
    pub coupling_factor: Option<f64>,
    pub resolvent_tilde: Option<f64>,
    pub resolvent_next: Option<f64>,
    pub form_floor: Option<f64>,
    pub form_floor_deep: Option<f64>,
    /// Operator-norm distance between the contour projector and `|φ_n⟩⟨φ_n|`.
    pub riesz_error: Option<f64>,
    /// `⟨φ_n, σ₃ φ_n⟩`, recorded by the diagonal benchmark.
    pub sigma3: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub n: Option<usize>,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`.
    pub margin: f64,
    pub slack: f64,
    /// Strict checks require `lhs < rhs`; the rest `lhs <= rhs + slack`.
    pub strict: bool,
    pub pass: bool,
    pub anchor: String,
}

impl BoundCheck {
    pub fn new(name: &str, n: Option<usize>, lhs: f64, rhs: f64, slack: f64, anchor: &str) -> Self {
        Self {
            name: name.to_owned(),
            n,
            lhs,
            rhs,
            margin: rhs - lhs,
            slack,
            strict: false,
            pass: lhs <= rhs + slack,
            anchor: anchor.to_owned(),
        }
    }

    pub fn strict(name: &str, n: Option<usize>, lhs: f64, rhs: f64, anchor: &str) -> Self {
        Self {
            strict: true,
            pass: lhs < rhs,
            ..Self::new(name, n, lhs, rhs, 0.0, anchor)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EgsEstimate {
    pub e_gs: f64,
    /// `g ρ_N / (1 − γ)`, the summed energy steps beyond the deepest level.
    pub tail_bound: f64,
    /// `|E_N|` change under one more allowed photon, when measured.
    pub truncation_shift: f64,
    pub error_bound: f64,
    pub residual_full: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationDiagnostics {
    pub n_max: u32,
    pub energy_shifts: Vec<f64>,
    pub proj_shifts: Vec<f64>,
    pub max_energy_shift: f64,
    pub max_proj_shift: f64,
}

/// Exact reference values of the diagonal-coupling model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagonalSummary {
    pub exact_energies: Vec<f64>,
    /// Exact `|⟨φ_{n+1}, φ_n ⊗ Ω⟩|`.
    pub exact_step_overlaps: Vec<f64>,
    pub step_overlaps: Vec<f64>,
    /// Running products of the measured step overlaps, starting at 1.
    pub overlap_products: Vec<f64>,
    pub max_energy_error: f64,
    /// Running overlap product strictly decreasing at every scale.
    pub vanishing_overlap: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CascadeReport {
    pub params: ModelParams,
    pub coupling: Coupling,
    pub riesz: RieszSettings,
    pub records: Vec<ScaleRecord>,
    pub probes: Vec<ScaleProbes>,
    pub checks: Vec<BoundCheck>,
    pub egs: Option<EgsEstimate>,
    pub truncation: Option<TruncationDiagnostics>,
    pub diagonal: Option<DiagonalSummary>,
    /// Set when a level could not be solved; records stop there.
    pub failure: Option<String>,
}

impl CascadeReport {
    pub fn all_checks_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &BoundCheck> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

struct Level {
    space: LevelSpace,
    h: SparseOperator,
    ground: EigenResult,
    sector: i8,
    sigma1_elem: f64,
    commutator: f64,
}

fn solve_level(
    params: &ModelParams,
    n: usize,
    opts: &CascadeOptions,
    previous: Option<&Level>,
    unrestricted_check: bool,
) -> Result<Level> {
    let space = LevelSpace::new(params, n)?;
    let h = space.hamiltonian(0..n, opts.coupling)?;
    let start = match previous {
        Some(prev) => Some(embed_vacuum(&prev.ground.phi0, &prev.space.basis, &space.basis)?),
        None => None,
    };
    let labels = SectorLabels::new(&space.basis);
    let commutator = commutator_norm(&labels.as_operator(), &h)?;
    let (ground, sector, sigma1_elem) = match opts.coupling {
        Coupling::OffDiagonal => {
            let sol = sector_solve_with(&h, &labels, params.tol_eig, &opts.solver, start.as_deref())?;
            let sigma1_elem = if unrestricted_check {
                let full = lowest_two_with(&h, params.tol_eig, &opts.solver, start.as_deref())?;
                spin_expectation(&full.phi0, PAULI_X)?.norm()
            } else {
                0.0
            };
            (sol.combined(), sol.ground_label(), sigma1_elem)
        }
        Coupling::Diagonal => {
            let full = lowest_two_with(&h, params.tol_eig, &opts.solver, start.as_deref())?;
            let s1 = spin_expectation(&full.phi0, PAULI_X)?.norm();
            (full, 0, s1)
        }
    };
    Ok(Level {
        space,
        h,
        ground,
        sector,
        sigma1_elem,
        commutator,
    })
}

fn solve_levels(params: &ModelParams, opts: &CascadeOptions, unrestricted_check: bool) -> (Vec<Level>, Option<String>) {
    let mut levels: Vec<Level> = Vec::with_capacity(params.n_scales + 1);
    for n in 0..=params.n_scales {
        match solve_level(params, n, opts, levels.last(), unrestricted_check) {
            Ok(level) => levels.push(level),
            Err(e) => return (levels, Some(format!("level {n}: {e}"))),
        }
    }
    (levels, None)
}

fn apply_spin(phi: &[C64], spin: [[C64; 2]; 2]) -> Vec<C64> {
    let d = phi.len() / 2;
    let mut out = vec![ZERO; phi.len()];
    for (s, row) in spin.iter().enumerate() {
        for (t, &w) in row.iter().enumerate() {
            if w != ZERO {
                for i in 0..d {
                    out[s * d + i] += w * phi[t * d + i];
                }
            }
        }
    }
    out
}

/// `√(Σ_{m ≥ n} Σ_j λ_{m,j}²)`, summed until the shells stop contributing.
pub fn tail_coupling_norm(params: &ModelParams, n: usize) -> Result<f64> {
    let mut sum = 0.0;
    let floor = rho(params, n) * 1e-18;
    let mut m = n;
    while rho(params, m) > floor && m < n + 4000 {
        sum += discretize_shell(params, m)?
            .nodes
            .iter()
            .map(|x| x.lambda * x.lambda)
            .sum::<f64>();
        m += 1;
    }
    Ok(sum.sqrt())
}

/// `‖R⊥_{n+1} X‖` for `X = (P_n⊥ σ₁ P_n) ⊗ P_Ω̃⊥` compressed to level `n + 1`.
fn coupling_factor(params: &ModelParams, lower: &Level, upper: &Level) -> Result<f64> {
    let phi = &lower.ground.phi0;
    let mut u = apply_spin(phi, PAULI_X);
    let s = inner(phi, &u);
    for (ui, p) in u.iter_mut().zip(phi) {
        *ui -= p * s;
    }
    let shell_modes = upper.space.modes.len() - lower.space.modes.len();
    let shell_basis = enumerate_basis(shell_modes, params.n_max)?;
    let (fd_lo, fd_hi) = (lower.space.fock_dim(), upper.space.fock_dim());
    let mut bs = Vec::new();
    let mut a_cols = Vec::new();
    let mut occ = Vec::with_capacity(upper.space.modes.len());
    for chi in shell_basis.states().iter().filter(|s| s.total() > 0) {
        let mut b = vec![ZERO; upper.space.dim()];
        let mut a = vec![ZERO; upper.space.dim()];
        for (i, state) in lower.space.basis.states().iter().enumerate() {
            occ.clear();
            occ.extend_from_slice(state.occupations());
            occ.extend_from_slice(chi.occupations());
            if let Some(j) = upper.space.basis.index_of(&occ) {
                for spin in 0..2 {
                    b[spin * fd_hi + j] = u[spin * fd_lo + i];
                    a[spin * fd_hi + j] = phi[spin * fd_lo + i];
                }
            }
        }
        bs.push(b);
        a_cols.push(a);
    }
    if bs.is_empty() {
        return Ok(0.0);
    }
    let rb = deflated_solve_many(&upper.h, upper.ground.e0, &upper.ground.phi0, &bs)?;
    // ‖RB A†‖ = ‖RB L‖ with A A† = L L†.
    let k = a_cols.len();
    let gram = DMatrix::from_fn(k, k, |i, j| inner(&a_cols[i], &a_cols[j]));
    let eig = gram.symmetric_eigen();
    let l = DMatrix::from_fn(k, k, |i, j| {
        eig.eigenvectors[(i, j)] * eig.eigenvalues[j].max(0.0).sqrt()
    });
    let rb_mat = DMatrix::from_fn(upper.space.dim(), k, |i, j| rb[j][i]);
    Ok(dense_operator_norm(&(rb_mat * l)))
}

fn measure(
    params: &ModelParams,
    opts: &CascadeOptions,
    levels: &[Level],
    with_probes: bool,
) -> Result<(Vec<ScaleRecord>, Vec<ScaleProbes>)> {
    let mut records = Vec::with_capacity(levels.len());
    let mut probes = Vec::with_capacity(levels.len());
    let deepest = levels.last().expect("at least the bare atom");
    for (n, level) in levels.iter().enumerate() {
        let next = levels.get(n + 1);
        let rho_n = rho(params, n);
        let e_n = level.ground.e0;
        let phi = &level.ground.phi0;

        let s1 = apply_spin(phi, PAULI_X);
        let q = norm(&deflated_solve(&level.h, e_n, phi, &s1)?);

        let mut rec = ScaleRecord {
            n,
            rho_n,
            e_n,
            gap_n: level.ground.gap.min(rho_n),
            gap_discrete: level.ground.gap,
            gap_tilde: None,
            energy_step: None,
            proj_step: None,
            contraction_q: q,
            sigma1_elem: level.sigma1_elem,
            residual_full: tail_coupling_norm(params, n)?,
            dim: level.space.dim(),
            ground_sector: level.sector,
            method: level.ground.method,
        };

        let shell = discretize_shell(params, n)?;
        let (field_l2, field_weighted) = interaction_norms(&shell);
        let shell_basis = enumerate_basis(shell.nodes.len(), params.n_max)?;
        let embedded_deep = embed_vacuum(phi, &level.space.basis, &deepest.space.basis)?;
        let certificate_lhs = deepest
            .h
            .apply(&embedded_deep)
            .iter()
            .zip(&embedded_deep)
            .map(|(hp, p)| (hp - p * e_n).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let mut pr = ScaleProbes {
            n,
            commutator: level.commutator,
            h_norm1: level.h.max_col_sum(),
            field_lhs: field_bound_lhs(&shell, rho_n, &shell_basis)?,
            field_l2,
            field_weighted,
            certificate_lhs,
            ..ScaleProbes::default()
        };
        if opts.coupling == Coupling::Diagonal {
            pr.sigma3 = Some(spin_expectation(phi, PAULI_Z)?.re);
        }

        if let Some(up) = next {
            rec.energy_step = Some((up.ground.e0 - e_n).abs());
            let psi = embed_vacuum(phi, &level.space.basis, &up.space.basis)?;
            rec.proj_step = Some(proj_distance(&up.ground.phi0, &psi)?);
            let overlap = inner(&up.ground.phi0, &psi);
            pr.split_rhs = Some(
                psi.iter()
                    .zip(&up.ground.phi0)
                    .map(|(x, p)| (x - p * overlap).norm_sqr())
                    .sum::<f64>()
                    .sqrt(),
            );
            let tilde = up.space.hamiltonian(0..n, opts.coupling)?;
            let tilde_ground = lowest_two_with(&tilde, params.tol_eig, &opts.solver, Some(&psi))?;
            rec.gap_tilde = Some(tilde_ground.gap.min(rho(params, n + 1)));

            if with_probes && opts.coupling == Coupling::OffDiagonal {
                pr.coupling_factor = Some(coupling_factor(params, level, up)?);
                let radius = opts.riesz.radius_factor * rho(params, n + 1);
                let zs: Vec<C64> = (0..4)
                    .map(|k| C64::new(up.ground.e0, 0.0) + C64::from_polar(radius, 0.5 * PI * k as f64))
                    .collect();
                let norms = resolvent_coupling_norms(params, n, &zs)?;
                pr.resolvent_tilde = Some(norms.iter().map(|x| x.0).fold(0.0, f64::max));
                pr.resolvent_next = Some(norms.iter().map(|x| x.1).fold(0.0, f64::max));
                pr.form_floor = Some(quadratic_form_floor(params, n)?);
                pr.form_floor_deep = Some(quadratic_form_floor_deep(params, n, levels.len() - 1)?);
            }
        }
        if with_probes && n <= opts.riesz.max_level {
            let radius = opts.riesz.radius_factor * rho(params, n + 1);
            let p = riesz_projection(&level.h, e_n, radius, opts.riesz.nodes)?;
            let v = nalgebra::DVector::from_column_slice(phi);
            pr.riesz_error = Some(dense_operator_norm(&(p - &v * v.adjoint())));
        }
        records.push(rec);
        probes.push(pr);
    }
    Ok((records, probes))
}

pub fn run_cascade(params: &ModelParams) -> Result<CascadeReport> {
    run_cascade_with(params, &CascadeOptions::default())
}

pub fn run_cascade_with(params: &ModelParams, opts: &CascadeOptions) -> Result<CascadeReport> {
    params.validate()?;
    let (levels, mut failure) = solve_levels(params, opts, true);
    let mut report = CascadeReport {
        params: params.clone(),
        coupling: opts.coupling,
        riesz: opts.riesz,
        records: Vec::new(),
        probes: Vec::new(),
        checks: Vec::new(),
        egs: None,
        truncation: None,
        diagonal: None,
        failure: None,
    };
    if !levels.is_empty() {
        match measure(params, opts, &levels, opts.probes) {
            Ok((records, probes)) => {
                report.records = records;
                report.probes = probes;
            }
            Err(e) => failure = failure.or(Some(format!("measurement: {e}"))),
        }
    }
    if opts.truncation_check && failure.is_none() {
        match truncation_diagnostics(params, opts, &report.records) {
            Ok(t) => report.truncation = Some(t),
            Err(e) => failure = Some(format!("truncation rerun: {e}")),
        }
    }
    if opts.coupling == Coupling::Diagonal && failure.is_none() {
        report.diagonal = Some(diagonal_summary(params, &levels, &report.records)?);
    }
    report.failure = failure;
    report.egs = estimate_egs(&report).ok();
    report.checks = verify_bounds(&report, params);
    Ok(report)
}

fn truncation_diagnostics(
    params: &ModelParams,
    opts: &CascadeOptions,
    records: &[ScaleRecord],
) -> Result<TruncationDiagnostics> {
    let alt = ModelParams {
        n_max: params.n_max + 1,
        ..params.clone()
    };
    let (levels, failure) = solve_levels(&alt, opts, false);
    if let Some(f) = failure {
        return Err(Error::Config(f));
    }
    let mut energy_shifts = Vec::new();
    let mut proj_shifts = Vec::new();
    for (n, rec) in records.iter().enumerate() {
        let level = &levels[n];
        energy_shifts.push((level.ground.e0 - rec.e_n).abs());
        if let (Some(step), Some(up)) = (rec.proj_step, levels.get(n + 1)) {
            let psi = embed_vacuum(&level.ground.phi0, &level.space.basis, &up.space.basis)?;
            proj_shifts.push((proj_distance(&up.ground.phi0, &psi)? - step).abs());
        }
    }
    Ok(TruncationDiagnostics {
        n_max: alt.n_max,
        max_energy_shift: energy_shifts.iter().copied().fold(0.0, f64::max),
        max_proj_shift: proj_shifts.iter().copied().fold(0.0, f64::max),
        energy_shifts,
        proj_shifts,
    })
}

/// `E_gs ≈ E_N` with the geometric tail of the energy steps as error bound.
pub fn estimate_egs(report: &CascadeReport) -> Result<EgsEstimate> {
    if report.records.len() < 2 {
        return Err(Error::InvalidParameter {
            field: "records",
            reason: "need at least two scales".into(),
        });
    }
    let p = &report.params;
    let last = report.records.last().expect("checked length");
    let tail_bound = p.g * last.rho_n / (1.0 - p.gamma);
    let truncation_shift = report
        .truncation
        .as_ref()
        .and_then(|t| t.energy_shifts.get(last.n).copied())
        .unwrap_or(0.0);
    Ok(EgsEstimate {
        e_gs: last.e_n,
        tail_bound,
        truncation_shift,
        error_bound: tail_bound + truncation_shift,
        residual_full: last.residual_full,
    })
}

/// Energy and gap checks allow `10 tol_eig`; norm checks `1e-10`.
pub fn verify_bounds(report: &CascadeReport, params: &ModelParams) -> Vec<BoundCheck> {
    match report.coupling {
        Coupling::OffDiagonal => offdiagonal_checks(report, params),
        Coupling::Diagonal => diagonal_checks(report),
    }
}

const NORM_SLACK: f64 = 1e-10;

fn offdiagonal_checks(report: &CascadeReport, params: &ModelParams) -> Vec<BoundCheck> {
    let tol = 10.0 * params.tol_eig;
    let (g, gamma) = (params.g, params.gamma);
    let recs = &report.records;
    let mut out = Vec::new();
    for (i, r) in recs.iter().enumerate() {
        let n = Some(r.n);
        let next = recs.get(i + 1);
        let pr = report.probes.get(i);

        out.push(BoundCheck::new(
            "gap_half",
            n,
            0.5 * r.rho_n,
            r.gap_n,
            tol,
            "gap_n >= rho_n / 2",
        ));
        out.push(BoundCheck::new(
            "gap_half_discrete",
            n,
            0.5 * r.rho_n,
            r.gap_discrete,
            tol,
            "E1 - E0 of the truncated H_n >= rho_n / 2",
        ));
        if r.n == 0 {
            out.push(BoundCheck::new(
                "gap_zero",
                n,
                (r.gap_n - params.kappa).abs(),
                0.0,
                0.0,
                "gap_0 = kappa",
            ));
        }
        out.push(BoundCheck::new(
            "sigma1",
            n,
            r.sigma1_elem,
            1e-12,
            0.0,
            "<phi_n, sigma1 phi_n> = 0",
        ));
        if r.n >= 1 {
            let prev = &recs[i - 1];
            out.push(BoundCheck::new(
                "q_recursion",
                n,
                r.contraction_q,
                (1.0 + 147.0 * g / gamma) * prev.contraction_q,
                NORM_SLACK,
                "q_n <= (1 + 147 g / gamma) q_{n-1}",
            ));
        }
        if let Some(up) = next {
            out.push(BoundCheck::new(
                "energy_monotone",
                n,
                up.e_n - r.e_n,
                0.0,
                tol,
                "E_{n+1} <= E_n",
            ));
            out.push(BoundCheck::new(
                "energy_step",
                n,
                (up.e_n - r.e_n).abs(),
                g * r.rho_n,
                tol,
                "|E_{n+1} - E_n| <= g rho_n",
            ));
            out.push(BoundCheck::new(
                "gap_recursion",
                n,
                r.gap_n.min((1.0 - g) * up.rho_n) - g * r.rho_n,
                up.gap_n,
                tol,
                "gap_{n+1} >= min(gap_n, (1 - g) rho_{n+1}) - g rho_n",
            ));
            if let Some(gt) = r.gap_tilde {
                out.push(BoundCheck::new(
                    "gap_tilde",
                    n,
                    (gt - r.gap_n.min(up.rho_n)).abs(),
                    0.0,
                    2.0 * params.tol_eig,
                    "gap~_n = min(gap_n, rho_{n+1})",
                ));
            }
        }
        if let Some(step) = r.proj_step {
            out.push(BoundCheck::new(
                "proj_step_uniform",
                n,
                step,
                16.0 * g / gamma,
                NORM_SLACK,
                "||P_{n+1} - P~_n|| <= 16 g / gamma",
            ));
            out.push(BoundCheck::new(
                "proj_contraction",
                n,
                step,
                48.0 * g * r.rho_n * r.contraction_q,
                NORM_SLACK,
                "||P_{n+1} - P~_n|| <= 48 g rho_n q_n",
            ));
            out.push(BoundCheck::new(
                "proj_geometric",
                n,
                step,
                48.0 * g * (gamma + 147.0 * g).powi(r.n as i32),
                NORM_SLACK,
                "||P_{n+1} - P~_n|| <= 48 g (gamma + 147 g)^n",
            ));
            if gamma <= 0.125 {
                out.push(BoundCheck::new(
                    "proj_half",
                    n,
                    step,
                    0.5f64.powi(r.n as i32),
                    NORM_SLACK,
                    "||P_{n+1} - P~_n|| <= (1/2)^n",
                ));
            }
            if let Some(split) = pr.and_then(|p| p.split_rhs) {
                out.push(BoundCheck::new(
                    "proj_split",
                    n,
                    step,
                    4.0 * split,
                    NORM_SLACK,
                    "||P_{n+1} - P~_n|| <= 4 ||P_{n+1}^perp P~_n||",
                ));
                if let Some(factor) = pr.and_then(|p| p.coupling_factor) {
                    out.push(BoundCheck::new(
                        "proj_coupling",
                        n,
                        split,
                        2.0 * g * r.rho_n * factor,
                        NORM_SLACK,
                        "||P_{n+1}^perp P~_n|| <= 2 g rho_n ||R_{n+1}^perp X_n||",
                    ));
                }
            }
        }
        if let Some(p) = pr {
            out.push(BoundCheck::new(
                "field_bound",
                n,
                p.field_lhs,
                2.0 * (p.field_weighted + p.field_l2 / r.rho_n.sqrt()),
                NORM_SLACK,
                "||Phi(F)(H_ph + rho)^{-1/2}|| <= 2(||omega^{-1/2} F|| + rho^{-1/2} ||F||)",
            ));
            out.push(BoundCheck::new(
                "field_bound_sqrt",
                n,
                p.field_lhs,
                g * r.rho_n.sqrt(),
                NORM_SLACK,
                "||Phi(F)(H_ph + rho)^{-1/2}|| <= g rho_n^{1/2}",
            ));
            out.push(BoundCheck::new(
                "commutator",
                n,
                p.commutator,
                1e-15 * p.h_norm1,
                0.0,
                "||[S, H_n]|| <= 1e-15 ||H_n||_1",
            ));
            out.push(BoundCheck::new(
                "ground_certificate",
                n,
                p.certificate_lhs,
                r.residual_full,
                NORM_SLACK,
                "||H phi_n^inf - E_n phi_n^inf|| <= ||G_n^inf||",
            ));
            if let Some(x) = p.resolvent_tilde {
                out.push(BoundCheck::new(
                    "resolvent_tilde",
                    n,
                    x,
                    16.0 * g / gamma,
                    NORM_SLACK,
                    "||Phi(G~_n)(H~_n - z)^{-1}|| <= 16 g / gamma on Gamma_{n+1}",
                ));
            }
            if let Some(x) = p.resolvent_next {
                out.push(BoundCheck::new(
                    "resolvent_next",
                    n,
                    x,
                    32.0 * g / gamma,
                    NORM_SLACK,
                    "||Phi(G~_n)(H_{n+1} - z)^{-1}|| <= 32 g / gamma on Gamma_{n+1}",
                ));
            }
            if let Some(x) = p.form_floor {
                out.push(BoundCheck::new(
                    "form_floor",
                    n,
                    -x,
                    0.0,
                    NORM_SLACK,
                    "H_{n+1} + rho_n >= H_n + (1 - g)(H_ph(omega~_n) + rho_n)",
                ));
            }
            if let Some(x) = p.form_floor_deep {
                out.push(BoundCheck::new(
                    "form_floor_deep",
                    n,
                    -x,
                    0.0,
                    NORM_SLACK,
                    "H_N + rho_n >= H_n + (1 - g)(H_ph(omega~_n) + rho_n)",
                ));
            }
            if let Some(x) = p.riesz_error {
                out.push(BoundCheck::new(
                    "riesz",
                    n,
                    x,
                    1e-9,
                    0.0,
                    "contour projector = |phi_n><phi_n|",
                ));
            }
        }
    }
    out
}

fn diagonal_checks(report: &CascadeReport) -> Vec<BoundCheck> {
    let mut out = Vec::new();
    let Some(d) = &report.diagonal else {
        return out;
    };
    for (i, r) in report.records.iter().enumerate() {
        let n = Some(r.n);
        out.push(BoundCheck::new(
            "oracle_energy",
            n,
            (r.e_n - d.exact_energies[i]).abs(),
            1e-10,
            0.0,
            "E_n = -sum lambda^2 / omega",
        ));
        if let Some(s3) = report.probes.get(i).and_then(|p| p.sigma3) {
            out.push(BoundCheck::new(
                "lower_branch",
                n,
                (s3 + 1.0).abs(),
                1e-12,
                0.0,
                "<phi_n, sigma3 phi_n> = -1",
            ));
        }
        if let (Some(num), Some(exact)) = (d.step_overlaps.get(i), d.exact_step_overlaps.get(i)) {
            out.push(BoundCheck::new(
                "oracle_overlap",
                n,
                (num - exact).abs(),
                1e-10,
                0.0,
                "|<phi_{n+1}, phi_n (x) Omega>| = prod exp(-lambda^2 / (2 omega^2))",
            ));
        }
        if i >= 1 && i < d.overlap_products.len() {
            out.push(BoundCheck::strict(
                "overlap_decreasing",
                n,
                d.overlap_products[i],
                d.overlap_products[i - 1],
                "running overlap product strictly decreasing",
            ));
        }
    }
    out
}

fn diagonal_summary(params: &ModelParams, levels: &[Level], records: &[ScaleRecord]) -> Result<DiagonalSummary> {
    let mut exact_energies = Vec::new();
    let mut exact_step_overlaps = Vec::new();
    for level in levels {
        let modes = &level.space.modes;
        exact_energies.push(
            -modes
                .couplings()
                .iter()
                .zip(modes.frequencies())
                .map(|(l, w)| l * l / w)
                .sum::<f64>(),
        );
    }
    for n in 0..levels.len().saturating_sub(1) {
        let shell = discretize_shell(params, n)?;
        exact_step_overlaps.push(
            shell
                .nodes
                .iter()
                .map(|m| (-m.lambda * m.lambda / (2.0 * m.omega * m.omega)).exp())
                .product(),
        );
    }
    let mut step_overlaps = Vec::new();
    for n in 0..levels.len().saturating_sub(1) {
        let (lo, up) = (&levels[n], &levels[n + 1]);
        let psi = embed_vacuum(&lo.ground.phi0, &lo.space.basis, &up.space.basis)?;
        step_overlaps.push(inner(&up.ground.phi0, &psi).norm());
    }
    let mut overlap_products = vec![1.0];
    for s in &step_overlaps {
        let last = *overlap_products.last().expect("non-empty");
        overlap_products.push(last * s);
    }
    let max_energy_error = records
        .iter()
        .zip(&exact_energies)
        .map(|(r, e)| (r.e_n - e).abs())
        .fold(0.0, f64::max);
    let vanishing_overlap = overlap_products.windows(2).all(|w| w[1] < w[0]);
    Ok(DiagonalSummary {
        exact_energies,
        exact_step_overlaps,
        step_overlaps,
        overlap_products,
        max_energy_error,
        vanishing_overlap,
    })
}

/// The cascade with `σ₃` in place of `σ₁`, checked against its closed form.
pub fn diagonal_benchmark(params: &ModelParams) -> Result<CascadeReport> {
    run_cascade_with(
        params,
        &CascadeOptions {
            coupling: Coupling::Diagonal,
            truncation_check: false,
            ..CascadeOptions::default()
        },
    )
}

/// One dense `|φ⟩⟨φ|` for callers comparing against a matrix projector.
pub fn rank_one(phi: &[C64]) -> DMatrix<C64> {
    let v = nalgebra::DVector::from_column_slice(phi);
    &v * v.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> CascadeOptions {
        CascadeOptions {
            truncation_check: false,
            probes: false,
            ..CascadeOptions::default()
        }
    }

    #[test]
    fn baseline_first_record() {
        let p = ModelParams {
            n_scales: 3,
            ..ModelParams::baseline()
        };
        let r = run_cascade_with(&p, &quick()).unwrap();
        assert_eq!(r.records.len(), 4);
        assert_eq!(r.records[0].e_n, 0.0);
        assert_eq!(r.records[0].gap_n, 0.5);
        assert!((r.records[0].contraction_q - 0.5).abs() < 1e-15);
        assert!(r.records[3].energy_step.is_none());
        assert!(r.failure.is_none());
    }

    #[test]
    fn decoupled_cascade_is_trivial() {
        let p = ModelParams {
            g: 0.0,
            n_scales: 4,
            ..ModelParams::baseline()
        };
        let r = run_cascade_with(&p, &quick()).unwrap();
        for rec in &r.records {
            assert_eq!(rec.e_n, 0.0);
            assert!(rec.proj_step.is_none_or(|s| s == 0.0));
        }
        let e = estimate_egs(&r).unwrap();
        assert_eq!((e.e_gs, e.error_bound), (0.0, 0.0));
    }

    #[test]
    fn tail_norm_matches_closed_form() {
        let p = ModelParams::baseline();
        for n in 0..9 {
            let exact = p.g * rho(&p, n) / (8.0 * PI).sqrt();
            let got = tail_coupling_norm(&p, n).unwrap();
            assert!((got - exact).abs() < 1e-14 * exact);
        }
    }

    #[test]
    fn diagonal_matches_offdiagonal_without_coupling() {
        let p = ModelParams {
            g: 0.0,
            n_scales: 3,
            ..ModelParams::baseline()
        };
        let a = run_cascade_with(&p, &quick()).unwrap();
        let b = run_cascade_with(
            &p,
            &CascadeOptions {
                coupling: Coupling::Diagonal,
                ..quick()
            },
        )
        .unwrap();
        for (x, y) in a.records.iter().zip(&b.records) {
            assert_eq!((x.e_n, x.gap_n, x.proj_step), (y.e_n, y.gap_n, y.proj_step));
        }
    }

    #[test]
    fn strict_check_needs_positive_margin() {
        assert!(!BoundCheck::strict("x", None, 1.0, 1.0, "").pass);
        assert!(BoundCheck::strict("x", None, 0.5, 1.0, "").pass);
        assert!(BoundCheck::new("x", None, 1.0 + 1e-12, 1.0, 1e-11, "").pass);
    }

    #[test]
    fn estimate_needs_two_records() {
        let p = ModelParams {
            n_scales: 0,
            ..ModelParams::baseline()
        };
        let r = run_cascade_with(&p, &quick()).unwrap();
        assert!(r.egs.is_none());
    }
}
