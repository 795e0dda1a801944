//! Pipeline orchestration behind the CLI subcommands: prepare a run from
//! a config, compute outputs, and write deterministic CSV/JSON files.
//!
//! All floats are written as `{:.16e}` (17 significant digits) so identical
//! configs produce byte-identical files.

use crate::config::{ConfigError, RunConfig};
use crate::geometry::{classify_regime, DipoleGeometry, RegimeVerdict};
use crate::kernel::AngularKernel;
use crate::master::{
    build_generator, detailed_balance_check, evolve, gibbs, stationary, MasterError, Stationary,
};
use crate::pauli::{build_hamiltonian, diagonalize, HamiltonianError, Spectrum};
use crate::rates::{
    all_dipole_elements, collective_weight, kernel_for, kernel_quadratic_form, occupancy,
    prefactor, rate_matrix, site_sum_weight, CouplingSpec, KernelMode, KernelSettings,
    PhysicalConstants, RateError, RateMatrix, RateVariant,
};
use nalgebra::DVector;
use serde_json::json;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numeric(String),
    #[error("{0}")]
    Io(String),
}

impl RunError {
    /// CLI exit code: 2 config, 3 numeric, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numeric(_) => 3,
            RunError::Io(_) => 4,
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e.to_string())
    }
}

impl From<HamiltonianError> for RunError {
    fn from(e: HamiltonianError) -> Self {
        match e {
            HamiltonianError::Parse(p) => RunError::Config(p.to_string()),
            other => RunError::Numeric(other.to_string()),
        }
    }
}

impl From<RateError> for RunError {
    fn from(e: RateError) -> Self {
        match e {
            RateError::InvalidInput(msg) => RunError::Config(msg),
            other => RunError::Numeric(other.to_string()),
        }
    }
}

impl From<MasterError> for RunError {
    fn from(e: MasterError) -> Self {
        RunError::Numeric(e.to_string())
    }
}

fn io_err(e: std::io::Error, path: &Path) -> RunError {
    RunError::Io(format!("{}: {e}", path.display()))
}

/// Fixed float formatting for all file outputs.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// A validated config with its derived objects, ready for any subcommand.
pub struct Prepared {
    pub config: RunConfig,
    pub constants: PhysicalConstants,
    pub coupling: CouplingSpec,
    pub settings: KernelSettings,
    pub geometry: DipoleGeometry,
    pub spectrum: Spectrum,
}

pub fn prepare(config: RunConfig) -> Result<Prepared, RunError> {
    config.validate()?;
    let constants = config.constants();
    let coupling = config.coupling_spec();
    coupling.validate()?;
    constants.validate()?;
    let settings = config.kernel_settings();
    let geometry = config.build_geometry();
    let terms = config.hamiltonian_terms()?;
    let h = build_hamiltonian(&terms, config.hamiltonian.n)?;
    let spectrum = diagonalize(&h, None)?;
    Ok(Prepared {
        config,
        constants,
        coupling,
        settings,
        geometry,
        spectrum,
    })
}

fn write_file(dir: &Path, name: &str, content: &str) -> Result<(), RunError> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(e, dir))?;
    let path = dir.join(name);
    std::fs::write(&path, content).map_err(|e| io_err(e, &path))
}

fn spectrum_csv(spectrum: &Spectrum) -> String {
    let mut out = String::from("m,energy,manifold\n");
    for (m, &e) in spectrum.eigenvalues.iter().enumerate() {
        writeln!(out, "{},{},{}", m + 1, fmt_float(e), spectrum.manifolds[m]).unwrap();
    }
    out
}

fn rates_csv(rm: &RateMatrix, spectrum: &Spectrum, constants: &PhysicalConstants) -> String {
    let dim = spectrum.dimension();
    let mut out = String::from("n,m,e_n,e_m,omega_nm,rate,kernel_provenance\n");
    for m in 0..dim {
        for n in 0..dim {
            if n == m {
                continue;
            }
            let omega = spectrum.gap(n, m) / constants.hbar;
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                n + 1,
                m + 1,
                fmt_float(spectrum.eigenvalues[n]),
                fmt_float(spectrum.eigenvalues[m]),
                fmt_float(omega),
                fmt_float(rm.rates[(n, m)]),
                if omega > 0.0 {
                    rm.provenance_for(omega)
                } else {
                    "none"
                },
            )
            .unwrap();
        }
    }
    out
}

fn gap_summaries(p: &Prepared, rm: &RateMatrix) -> Vec<serde_json::Value> {
    rm.kernel_provenance
        .iter()
        .map(|&(omega, provenance)| {
            let report = classify_regime(
                &p.geometry,
                omega,
                p.constants.c,
                p.settings.theta_coherent,
                p.settings.theta_incoherent,
            );
            json!({
                "omega": omega,
                "wavelength": report.wavelength,
                "extent_ratio": report.extent_ratio,
                "spacing_ratio": report.spacing_ratio,
                "verdict": report.verdict,
                "kernel_provenance": provenance,
            })
        })
        .collect()
}

fn summary_json(p: &Prepared, rm: &RateMatrix) -> String {
    let doc = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "config": p.config,
        "constants": p.constants,
        "spectrum": {
            "eigenvalues": p.spectrum.eigenvalues,
            "manifolds": p.spectrum.manifolds,
            "degeneracy_tol": p.spectrum.degeneracy_tol,
        },
        "gaps": gap_summaries(p, rm),
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
    s.push('\n');
    s
}

/// `rates` subcommand: spectrum, stimulated and spontaneous rate matrices,
/// optional kernel dumps, and a summary with enough context to reproduce
/// the run.
pub fn cmd_rates(p: &Prepared, out_dir: &Path) -> Result<(), RunError> {
    let stim = rate_matrix(
        &p.spectrum,
        &p.geometry,
        &p.coupling,
        &p.constants,
        &p.settings,
        RateVariant::Stimulated,
    )?;
    let spont = rate_matrix(
        &p.spectrum,
        &p.geometry,
        &p.coupling,
        &p.constants,
        &p.settings,
        RateVariant::WithSpontaneous,
    )?;
    write_file(out_dir, "spectrum.csv", &spectrum_csv(&p.spectrum))?;
    write_file(
        out_dir,
        "rates_stimulated.csv",
        &rates_csv(&stim, &p.spectrum, &p.constants),
    )?;
    write_file(
        out_dir,
        "rates_spontaneous.csv",
        &rates_csv(&spont, &p.spectrum, &p.constants),
    )?;
    if p.config.outputs.dump_kernels {
        for (idx, &(omega, _)) in stim.kernel_provenance.iter().enumerate() {
            let kernel = kernel_for(&p.geometry, omega, &p.constants, &p.settings)?;
            write_file(out_dir, &format!("kernel_{idx:03}.csv"), &kernel.to_csv())?;
        }
    }
    write_file(out_dir, "summary.json", &summary_json(p, &spont))?;
    Ok(())
}

/// Initial-state choice for `evolve`.
#[derive(Debug, Clone)]
pub enum InitialState {
    Ground,
    Uniform,
    Explicit(Vec<f64>),
}

impl InitialState {
    pub fn parse(text: &str) -> Result<Self, RunError> {
        match text {
            "ground" => Ok(InitialState::Ground),
            "uniform" => Ok(InitialState::Uniform),
            list => {
                let values: Result<Vec<f64>, _> =
                    list.split(',').map(|t| t.trim().parse::<f64>()).collect();
                let values = values
                    .map_err(|e| RunError::Config(format!("invalid p0 list '{list}': {e}")))?;
                Ok(InitialState::Explicit(values))
            }
        }
    }

    fn build(&self, dim: usize) -> Result<DVector<f64>, RunError> {
        match self {
            InitialState::Ground => {
                let mut p = DVector::zeros(dim);
                p[0] = 1.0;
                Ok(p)
            }
            InitialState::Uniform => Ok(DVector::from_element(dim, 1.0 / dim as f64)),
            InitialState::Explicit(values) => {
                if values.len() != dim {
                    return Err(RunError::Config(format!(
                        "p0 has {} entries, expected {dim}",
                        values.len()
                    )));
                }
                if values.iter().any(|&v| v < 0.0) || values.iter().sum::<f64>() <= 0.0 {
                    return Err(RunError::Config("p0 must be nonnegative, sum > 0".into()));
                }
                let total: f64 = values.iter().sum();
                Ok(DVector::from_iterator(
                    dim,
                    values.iter().map(|v| v / total),
                ))
            }
        }
    }
}

fn trajectory_csv(traj: &[crate::master::TrajectoryPoint]) -> String {
    let dim = traj[0].populations.len();
    let mut out = String::from("t");
    for m in 1..=dim {
        write!(out, ",p_{m}").unwrap();
    }
    out.push('\n');
    for pt in traj {
        write!(out, "{}", fmt_float(pt.time)).unwrap();
        for v in pt.populations.iter() {
            write!(out, ",{}", fmt_float(*v)).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Smallest nonzero decay rate of the generator, from its eigenvalues.
fn slowest_rate(generator: &crate::master::Generator) -> f64 {
    let scale = generator
        .matrix
        .diagonal()
        .iter()
        .fold(0.0f64, |a, &b| a.max(b.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    generator
        .matrix
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re.abs())
        .filter(|&r| r > 1e-10 * scale)
        .fold(f64::INFINITY, f64::min)
}

/// `evolve` subcommand: integrate the Pauli master equation with the
/// WithSpontaneous rates and report convergence toward Gibbs.
pub fn cmd_evolve(
    p: &Prepared,
    out_dir: &Path,
    p0: &InitialState,
    t_final: f64,
    dt: f64,
) -> Result<(), RunError> {
    if !(t_final > 0.0 && dt > 0.0) {
        return Err(RunError::Config("t_final and dt must be > 0".into()));
    }
    let rm = rate_matrix(
        &p.spectrum,
        &p.geometry,
        &p.coupling,
        &p.constants,
        &p.settings,
        RateVariant::WithSpontaneous,
    )?;
    let generator = build_generator(&rm);
    let p0 = p0.build(p.spectrum.dimension())?;
    let traj = evolve(&generator, &p0, t_final, dt).map_err(|e| match e {
        MasterError::StabilityGuard { dt, max_dt } => RunError::Numeric(format!(
            "dt = {dt} violates the stability guard; use dt <= {max_dt:.6e}"
        )),
        other => RunError::Numeric(other.to_string()),
    })?;
    let target = gibbs(&p.spectrum, p.coupling.temperature, &p.constants);
    let final_p = &traj.last().expect("nonempty trajectory").populations;
    let distance = (final_p - &target).amax();
    let slowest = slowest_rate(&generator);
    let balance = detailed_balance_check(&rm, &p.spectrum, p.coupling.temperature, &p.constants);
    let stationary_distance = match stationary(&generator)? {
        Stationary::Irreducible(pi) => Some((pi - &target).amax()),
        Stationary::Reducible(_) => None,
    };
    let doc = json!({
        "t_final": t_final,
        "dt": dt,
        "final_distance_to_gibbs": distance,
        "stationary_distance_to_gibbs": stationary_distance,
        "slowest_rate": slowest,
        "relaxation_time": if slowest > 0.0 { Some(1.0 / slowest) } else { None },
        "detailed_balance_worst_error": balance.worst_relative_error,
        "warning": balance.warning,
    });
    write_file(out_dir, "trajectory.csv", &trajectory_csv(&traj))?;
    let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
    s.push('\n');
    write_file(out_dir, "convergence.json", &s)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanParameter {
    Spacing,
    Omega,
}

/// One row of the regime scan.
struct ScanRow {
    parameter: f64,
    rate_general: f64,
    rate_coherent: f64,
    rate_incoherent: f64,
    verdict: RegimeVerdict,
}

#[allow(clippy::too_many_arguments)]
fn scan_row(
    p: &Prepared,
    geometry: &DipoleGeometry,
    parameter: f64,
    omega: f64,
    weight_coh: f64,
    weight_inc: f64,
    elems: &[nalgebra::DMatrix<num_complex::Complex64>],
    n: usize,
    m: usize,
) -> Result<ScanRow, RunError> {
    // general formula: lattice closed form when available, else quadrature
    let mode = if geometry.lattice_spacing().is_some() {
        KernelMode::Lattice
    } else {
        KernelMode::Quadrature
    };
    let settings = KernelSettings { mode, ..p.settings };
    let kernel: AngularKernel = kernel_for(geometry, omega, &p.constants, &settings)?;
    let s_general = kernel_quadratic_form(&kernel, elems, n, m);
    let occ = occupancy(omega, p.coupling.temperature, &p.constants);
    let base = prefactor(&p.coupling, &p.constants) * omega.powi(3) * occ;
    let q0 = 8.0 * std::f64::consts::PI / 3.0;
    let verdict = classify_regime(
        geometry,
        omega,
        p.constants.c,
        p.settings.theta_coherent,
        p.settings.theta_incoherent,
    )
    .verdict;
    Ok(ScanRow {
        parameter,
        rate_general: base * s_general,
        rate_coherent: base * q0 * weight_coh,
        rate_incoherent: base * q0 * weight_inc,
        verdict,
    })
}

/// `regime-scan` subcommand: sweep the lattice spacing or the transition
/// frequency for one eigenstate pair and tabulate the general rate next
/// to both limits.
#[allow(clippy::too_many_arguments)]
pub fn cmd_regime_scan(
    p: &Prepared,
    out_dir: &Path,
    parameter: ScanParameter,
    from: f64,
    to: f64,
    points: usize,
    upper: usize,
    lower: usize,
) -> Result<(), RunError> {
    if points == 0 {
        return Err(RunError::Config("scan grid is empty".into()));
    }
    if !(from > 0.0 && to >= from) {
        return Err(RunError::Config(
            "scan range must satisfy 0 < from <= to".into(),
        ));
    }
    let dim = p.spectrum.dimension();
    if upper == 0 || lower == 0 || upper > dim || lower > dim || upper == lower {
        return Err(RunError::Config(format!(
            "scan pair must be two distinct states in 1..={dim}"
        )));
    }
    let (n, m) = (upper - 1, lower - 1);
    let gap = p.spectrum.gap(n, m);
    if gap == 0.0 {
        return Err(RunError::Config(
            "scan pair is degenerate; its rate is identically zero".into(),
        ));
    }
    let n_sites = p.geometry.len();
    let elems = all_dipole_elements(&p.spectrum, n_sites);
    let weight_coh = collective_weight(&p.spectrum, n_sites, n, m);
    let weight_inc = site_sum_weight(&p.spectrum, n_sites, n, m);
    let omega_pair = gap / p.constants.hbar;

    let grid: Vec<f64> = if points == 1 {
        vec![from]
    } else {
        let step = (to / from).ln() / (points - 1) as f64;
        (0..points)
            .map(|k| from * (step * k as f64).exp())
            .collect()
    };

    let mut rows = Vec::with_capacity(points);
    for &value in &grid {
        let row = match parameter {
            ScanParameter::Spacing => {
                let geometry = DipoleGeometry::linear_lattice(n_sites, value);
                scan_row(
                    p, &geometry, value, omega_pair, weight_coh, weight_inc, &elems, n, m,
                )?
            }
            ScanParameter::Omega => scan_row(
                p,
                &p.geometry,
                value,
                value,
                weight_coh,
                weight_inc,
                &elems,
                n,
                m,
            )?,
        };
        rows.push(row);
    }

    let mut out =
        String::from("parameter,rate_general,rate_coherent_limit,rate_incoherent_limit,verdict\n");
    for row in &rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            fmt_float(row.parameter),
            fmt_float(row.rate_general),
            fmt_float(row.rate_coherent),
            fmt_float(row.rate_incoherent),
            match row.verdict {
                RegimeVerdict::Coherent => "coherent",
                RegimeVerdict::Incoherent => "incoherent",
                RegimeVerdict::Intermediate => "intermediate",
            },
        )
        .unwrap();
    }
    write_file(out_dir, "scan.csv", &out)?;
    Ok(())
}

/// `kernel-dump` subcommand: the kernel at one frequency as CSV.
pub fn cmd_kernel_dump(p: &Prepared, out_dir: &Path, omega: f64) -> Result<(), RunError> {
    if omega.is_nan() || omega < 0.0 {
        return Err(RunError::Config("omega must be >= 0".into()));
    }
    let kernel = kernel_for(&p.geometry, omega, &p.constants, &p.settings)?;
    write_file(out_dir, "kernel.csv", &kernel.to_csv())
}
