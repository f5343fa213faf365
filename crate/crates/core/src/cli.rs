//! Command-line front end: config parsing, the `run` / `verify` / `sweep`
//! commands, and CSV/JSON output.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{build_mode_set, discretize_shell, interaction_norms, Coupling, LevelSpace, ModelParams, Profile};
use crate::multiscale::{run_cascade_with, BoundCheck, CascadeOptions, CascadeReport, RieszSettings};
use crate::oracle::{dense_spectrum, shell_integral};
use crate::spectral::{lowest_two, DENSE_MAX_DIM};

/// Process exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ExitStatus {
    Success = 0,
    Io = 1,
    BoundFailure = 2,
    SolverFailure = 3,
    ConfigError = 4,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }

    fn of_report(report: &CascadeReport) -> Self {
        if report.failure.is_some() {
            ExitStatus::SolverFailure
        } else if !report.all_checks_pass() {
            ExitStatus::BoundFailure
        } else {
            ExitStatus::Success
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Offdiagonal,
    DiagonalBenchmark,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emit {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub param: String,
    pub values: Vec<f64>,
}

/// JSON configuration; absent model keys take the baseline values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub g: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub f_profile: Profile,
    #[serde(rename = "J")]
    pub j: usize,
    #[serde(rename = "N_max")]
    pub n_max: u32,
    #[serde(rename = "N_scales")]
    pub n_scales: usize,
    pub tol_eig: f64,
    pub mode: Mode,
    pub riesz: RieszSettings,
    pub emit: Vec<Emit>,
    pub output_dir: Option<PathBuf>,
    pub sweep: Option<SweepSpec>,
    pub allow_out_of_regime: bool,
    /// Rerun with `N_max + 1` and report the shifts.
    pub truncation_check: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = ModelParams::baseline();
        Self {
            g: p.g,
            gamma: p.gamma,
            kappa: p.kappa,
            f_profile: p.profile,
            j: p.nodes_per_shell,
            n_max: p.n_max,
            n_scales: p.n_scales,
            tol_eig: p.tol_eig,
            mode: Mode::default(),
            riesz: RieszSettings::default(),
            emit: vec![Emit::Csv, Emit::Json],
            output_dir: None,
            sweep: None,
            allow_out_of_regime: false,
            truncation_check: true,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn params(&self) -> ModelParams {
        ModelParams {
            g: self.g,
            gamma: self.gamma,
            kappa: self.kappa,
            profile: self.f_profile.clone(),
            nodes_per_shell: self.j,
            n_max: self.n_max,
            n_scales: self.n_scales,
            tol_eig: self.tol_eig,
            allow_out_of_regime: self.allow_out_of_regime,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params().validate()?;
        if !(self.riesz.radius_factor > 0.0 && self.riesz.radius_factor < 1.0) {
            return Err(Error::Config(format!(
                "riesz.radius_factor = {} must lie in (0, 1)",
                self.riesz.radius_factor
            )));
        }
        if self.riesz.nodes < 4 {
            return Err(Error::Config(format!(
                "riesz.nodes = {} must be at least 4",
                self.riesz.nodes
            )));
        }
        Ok(())
    }

    pub fn options(&self) -> CascadeOptions {
        CascadeOptions {
            coupling: match self.mode {
                Mode::Offdiagonal => Coupling::OffDiagonal,
                Mode::DiagonalBenchmark => Coupling::Diagonal,
            },
            riesz: self.riesz,
            truncation_check: self.truncation_check && self.mode == Mode::Offdiagonal,
            ..CascadeOptions::default()
        }
    }

    /// Copy with one model parameter replaced.
    pub fn with_param(&self, name: &str, value: f64) -> Result<Self> {
        let mut c = self.clone();
        let count = |v: f64| -> Result<usize> {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::Config(format!(
                    "{name} must be a non-negative integer, got {value}"
                )))
            }
        };
        match name {
            "g" => c.g = value,
            "gamma" => c.gamma = value,
            "kappa" => c.kappa = value,
            "tol_eig" => c.tol_eig = value,
            "J" => c.j = count(value)?,
            "N_max" => c.n_max = count(value)? as u32,
            "N_scales" => c.n_scales = count(value)?,
            _ => {
                return Err(Error::Config(format!(
                    "unknown sweep parameter `{name}` (expected g, gamma, kappa, tol_eig, J, N_max or N_scales)"
                )))
            }
        }
        Ok(c)
    }
}

pub const CSV_HEADER: &str = "n,rho_n,E_n,gap_n,energy_step,proj_step,contraction_q,sigma1_elem,residual_full";

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// One row per recorded scale, 17 significant digits.
pub fn cascade_csv(report: &CascadeReport) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &report.records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.n,
            num(r.rho_n),
            num(r.e_n),
            num(r.gap_n),
            opt(r.energy_step),
            opt(r.proj_step),
            num(r.contraction_q),
            num(r.sigma1_elem),
            num(r.residual_full)
        );
    }
    out
}

pub fn write_report(report: &CascadeReport, dir: &Path, emit: &[Emit]) -> Result<()> {
    fs::create_dir_all(dir)?;
    if emit.contains(&Emit::Csv) {
        fs::write(dir.join("cascade.csv"), cascade_csv(report))?;
    }
    if emit.contains(&Emit::Json) {
        fs::write(dir.join("report.json"), serde_json::to_string_pretty(report)? + "\n")?;
    }
    Ok(())
}

/// Cross-checks of the primary modules against the reference implementations.
pub fn oracle_checks(params: &ModelParams, report: &CascadeReport) -> Result<Vec<BoundCheck>> {
    let mut out = Vec::new();
    for rec in &report.records {
        if rec.dim > DENSE_MAX_DIM {
            continue;
        }
        let h = LevelSpace::new(params, rec.n)?.hamiltonian(0..rec.n, report.coupling)?;
        let spec = dense_spectrum(&h)?;
        let primary = lowest_two(&h, params.tol_eig)?;
        out.push(BoundCheck::new(
            "oracle_e0",
            Some(rec.n),
            (spec[0] - primary.e0).abs(),
            1e-12,
            0.0,
            "lowest eigenvalue agrees with the dense oracle",
        ));
        if spec.len() > 1 {
            out.push(BoundCheck::new(
                "oracle_e1",
                Some(rec.n),
                (spec[1] - primary.e1).abs(),
                1e-12,
                0.0,
                "second eigenvalue agrees with the dense oracle",
            ));
        }
    }
    // A J-point rule is exact for these integrands only when f is constant.
    if matches!(params.profile, Profile::Named(_)) {
        let n_shells = build_mode_set(params, params.n_scales)?.shells.len();
        for n in 0..n_shells {
            let (l2, weighted) = interaction_norms(&discretize_shell(params, n)?);
            for (moment, discrete) in [(0, l2 * l2), (-1, weighted * weighted)] {
                let reference = shell_integral(params, n, moment)?;
                let scale = reference.abs().max(f64::MIN_POSITIVE);
                out.push(BoundCheck::new(
                    if moment == 0 {
                        "oracle_quadrature_l2"
                    } else {
                        "oracle_quadrature_weighted"
                    },
                    Some(n),
                    (discrete - reference).abs() / scale,
                    1e-12,
                    0.0,
                    "discrete shell norms agree with the reference quadrature (relative)",
                ));
            }
        }
    }
    Ok(out)
}

fn run_one(config: &RunConfig, with_oracles: bool) -> Result<CascadeReport> {
    let params = config.params();
    let mut report = run_cascade_with(&params, &config.options())?;
    if with_oracles && report.failure.is_none() {
        report.checks.extend(oracle_checks(&params, &report)?);
    }
    Ok(report)
}

#[derive(Parser, Debug)]
#[command(
    name = "irflow",
    version,
    about = "Multiscale infrared cascade for the spin-boson model"
)]
pub struct Cli {
    /// Accept parameters outside the coupling regime of the bounds.
    #[arg(long, global = true)]
    pub allow_out_of_regime: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the cascade and write cascade.csv and report.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the cascade plus oracle cross-checks; exit 2 if any check fails.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One run per parameter value, in parallel, plus summary.csv.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Defaults to the `sweep` entry of the config.
        #[arg(long)]
        param: Option<String>,
        #[arg(long, value_delimiter = ',', num_args = 1.., allow_negative_numbers = true)]
        values: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(path: &Path, allow: bool) -> Result<RunConfig> {
    let mut config = RunConfig::load(path)?;
    config.allow_out_of_regime |= allow;
    config.validate()?;
    Ok(config)
}

fn fail(e: &Error) -> ExitStatus {
    eprintln!("irflow: {e}");
    match e {
        Error::Io(_) => ExitStatus::Io,
        Error::Config(_) | Error::InvalidParameter { .. } | Error::Json(_) => ExitStatus::ConfigError,
        _ => ExitStatus::SolverFailure,
    }
}

fn summarize(report: &CascadeReport) {
    let failed: Vec<_> = report.failed_checks().collect();
    eprintln!(
        "irflow: {} scales, {} checks, {} failed",
        report.records.len(),
        report.checks.len(),
        failed.len()
    );
    for c in failed {
        eprintln!(
            "  FAIL {}{}: lhs {:e} rhs {:e} ({})",
            c.name,
            c.n.map(|n| format!("[{n}]")).unwrap_or_default(),
            c.lhs,
            c.rhs,
            c.anchor
        );
    }
    if let Some(f) = &report.failure {
        eprintln!("  solver failure: {f}");
    }
}

fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("IRFLOW_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("IRFLOW_THREADS = {v:?} is not a positive integer")))?;
        builder = builder.num_threads(n.max(1));
    }
    builder.build().map_err(|e| Error::Config(format!("worker pool: {e}")))
}

fn sweep_dir_name(param: &str, value: f64) -> String {
    format!("{param}={value:e}")
}

fn execute_inner(cli: Cli) -> Result<ExitStatus> {
    let allow = cli.allow_out_of_regime;
    match cli.command {
        Command::Run { config, out } => {
            let cfg = load_config(&config, allow)?;
            let dir = out
                .or_else(|| cfg.output_dir.clone())
                .ok_or_else(|| Error::Config("no output directory: pass --out or set output_dir".into()))?;
            let report = run_one(&cfg, false)?;
            write_report(&report, &dir, &cfg.emit)?;
            summarize(&report);
            Ok(ExitStatus::of_report(&report))
        }
        Command::Verify { config, out } => {
            let cfg = load_config(&config, allow)?;
            let report = run_one(&cfg, true)?;
            if let Some(dir) = out.or_else(|| cfg.output_dir.clone()) {
                write_report(&report, &dir, &cfg.emit)?;
            } else {
                println!("{}", serde_json::to_string_pretty(&report.checks)?);
            }
            summarize(&report);
            Ok(ExitStatus::of_report(&report))
        }
        Command::Sweep {
            config,
            param,
            values,
            out,
        } => {
            let base = RunConfig::load(&config)?;
            let base = RunConfig {
                allow_out_of_regime: base.allow_out_of_regime || allow,
                ..base
            };
            let spec = base.sweep.clone();
            let param = param
                .or_else(|| spec.as_ref().map(|s| s.param.clone()))
                .ok_or_else(|| Error::Config("sweep needs --param or a `sweep` config entry".into()))?;
            let values = if values.is_empty() {
                spec.map(|s| s.values).unwrap_or_default()
            } else {
                values
            };
            if values.is_empty() {
                return Err(Error::Config("sweep has no values".into()));
            }
            let configs = values
                .iter()
                .map(|&v| {
                    let c = base.with_param(&param, v)?;
                    c.validate()?;
                    Ok(c)
                })
                .collect::<Result<Vec<_>>>()?;
            let dir = out.or_else(|| base.output_dir.clone());
            let pool = worker_pool()?;
            let reports: Vec<Result<CascadeReport>> =
                pool.install(|| configs.par_iter().map(|c| run_one(c, false)).collect());
            let mut summary = String::from("param,value,E_gs,error_bound,checks,failed,status\n");
            let mut status = ExitStatus::Success;
            for (&v, r) in values.iter().zip(reports) {
                let report = r?;
                let s = ExitStatus::of_report(&report);
                status = status.max(s);
                let egs = report.egs.as_ref();
                let _ = writeln!(
                    summary,
                    "{param},{},{},{},{},{},{}",
                    num(v),
                    opt(egs.map(|e| e.e_gs)),
                    opt(egs.map(|e| e.error_bound)),
                    report.checks.len(),
                    report.failed_checks().count(),
                    s.code()
                );
                if let Some(d) = &dir {
                    write_report(&report, &d.join(sweep_dir_name(&param, v)), &base.emit)?;
                }
                summarize(&report);
            }
            match &dir {
                Some(d) => {
                    fs::create_dir_all(d)?;
                    fs::write(d.join("summary.csv"), &summary)?;
                }
                None => print!("{summary}"),
            }
            Ok(status)
        }
    }
}

pub fn execute(cli: Cli) -> ExitStatus {
    execute_inner(cli).unwrap_or_else(|e| fail(&e))
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(cli).code(),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                ExitStatus::ConfigError.code()
            } else {
                0
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_baseline() {
        let c = RunConfig::from_json("{}").unwrap();
        assert_eq!(c.params(), ModelParams::baseline());
        assert_eq!(c.mode, Mode::Offdiagonal);
    }

    #[test]
    fn spec_keys_parse() {
        let c = RunConfig::from_json(
            r#"{"g": 0.0005, "gamma": 0.1, "kappa": 0.5, "f_profile": "unit", "J": 2, "N_max": 4,
                "N_scales": 5, "tol_eig": 1e-11, "mode": "diagonal_benchmark",
                "riesz": {"radius_factor": 0.125, "nodes": 32}}"#,
        )
        .unwrap();
        assert_eq!((c.j, c.n_max, c.n_scales), (2, 4, 5));
        assert_eq!(c.riesz.nodes, 32);
        assert_eq!(c.options().coupling, Coupling::Diagonal);
        let t = RunConfig::from_json(r#"{"f_profile": [[0.0, 0.5], [1.0, 1.0]]}"#).unwrap();
        assert_eq!(t.f_profile, Profile::Table(vec![(0.0, 0.5), (1.0, 1.0)]));
    }

    #[test]
    fn unknown_keys_rejected() {
        let e = RunConfig::from_json(r#"{"gg": 1}"#).unwrap_err();
        assert!(e.to_string().contains("gg"));
        assert!(RunConfig::from_json(r#"{"riesz": {"radius": 1}}"#).is_err());
    }

    #[test]
    fn regime_violation_cites_hypothesis() {
        let c = RunConfig {
            g: 0.1 / 32.0,
            ..RunConfig::default()
        };
        let e = c.validate().unwrap_err().to_string();
        assert!(e.contains("g < 1/64 γ"), "{e}");
        assert!(RunConfig {
            allow_out_of_regime: true,
            ..c
        }
        .validate()
        .is_ok());
    }

    #[test]
    fn sweep_parameter_names() {
        let c = RunConfig::default();
        assert_eq!(c.with_param("N_max", 4.0).unwrap().n_max, 4);
        assert!(c.with_param("N_max", 2.5).is_err());
        assert!(c.with_param("delta", 1.0).is_err());
        assert_eq!(c.with_param("g", 1e-4).unwrap().g, 1e-4);
    }

    #[test]
    fn csv_layout() {
        let cfg = RunConfig {
            n_scales: 2,
            truncation_check: false,
            ..RunConfig::default()
        };
        let report = run_one(&cfg, false).unwrap();
        let csv = cascade_csv(&report);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0,5.0000000000000000e-1,0.0000000000000000e0,"));
        // Deepest row leaves the step columns empty.
        assert_eq!(lines[3].split(',').nth(4), Some(""));
        assert_eq!(lines[3].split(',').count(), 9);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(ExitStatus::BoundFailure.code(), 2);
        assert_eq!(ExitStatus::SolverFailure.code(), 3);
        assert_eq!(ExitStatus::ConfigError.code(), 4);
        assert_eq!(main_with_args(["irflow", "frobnicate"]), 4);
    }
}
