//! Declarative run configuration: one JSON document, schema-validated
//! before any computation, unknown keys rejected.

use crate::geometry::DipoleGeometry;
use crate::pauli::{parse_hamiltonian, PauliString};
use crate::rates::{CouplingSpec, KernelMode, KernelSettings, PhysicalConstants};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("config error: {0}")]
    Invalid(String),
    #[error("hamiltonian parse error: {0}")]
    Hamiltonian(#[from] crate::pauli::ParseError),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub units: UnitsConfig,
    pub hamiltonian: HamiltonianConfig,
    pub geometry: GeometryConfig,
    pub coupling: CouplingConfig,
    #[serde(default)]
    pub kernel: KernelConfig,
    #[serde(default)]
    pub outputs: OutputsConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitsConfig {
    pub system: UnitSystem,
    /// Optional overrides of the individual constants.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hbar: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_b: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UnitSystem {
    #[serde(rename = "dimensionless")]
    Dimensionless,
    #[serde(rename = "gaussian-ev-um-k")]
    GaussianEvUmK,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianConfig {
    /// Number of spin sites.
    pub n: usize,
    /// Inline Pauli strings, one per entry.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terms: Option<Vec<String>>,
    /// Path to a Hamiltonian text file (alternative to `terms`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<LatticeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explicit: Option<Vec<[f64; 3]>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub n: usize,
    pub spacing: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingConfig {
    pub mu: f64,
    pub temperature: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelConfig {
    pub mode: KernelMode,
    pub tol: f64,
    pub theta_coherent: f64,
    pub theta_incoherent: f64,
    pub b_switch: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        let d = KernelSettings::default();
        KernelConfig {
            mode: d.mode,
            tol: d.tol,
            theta_coherent: d.theta_coherent,
            theta_incoherent: d.theta_incoherent,
            b_switch: d.b_switch,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputsConfig {
    /// Output directory; overridable with `--out`.
    pub directory: String,
    /// Also write one kernel CSV per distinct transition frequency.
    pub dump_kernels: bool,
}

impl Default for OutputsConfig {
    fn default() -> Self {
        OutputsConfig {
            directory: "out".to_string(),
            dump_kernels: false,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.hamiltonian.n == 0 || self.hamiltonian.n > crate::pauli::MAX_SITES {
            return Err(ConfigError::Invalid(format!(
                "hamiltonian.n must be in 1..={}",
                crate::pauli::MAX_SITES
            )));
        }
        match (&self.hamiltonian.terms, &self.hamiltonian.file) {
            (Some(_), None) | (None, Some(_)) => {}
            _ => {
                return Err(ConfigError::Invalid(
                    "hamiltonian needs exactly one of `terms` or `file`".into(),
                ))
            }
        }
        match (&self.geometry.lattice, &self.geometry.explicit) {
            (Some(l), None) => {
                if l.n != self.hamiltonian.n {
                    return Err(ConfigError::Invalid(
                        "geometry.lattice.n must equal hamiltonian.n".into(),
                    ));
                }
                if !l.spacing.is_finite() || l.spacing <= 0.0 {
                    return Err(ConfigError::Invalid("lattice spacing must be > 0".into()));
                }
            }
            (None, Some(p)) => {
                if p.len() != self.hamiltonian.n {
                    return Err(ConfigError::Invalid(
                        "geometry.explicit length must equal hamiltonian.n".into(),
                    ));
                }
            }
            _ => {
                return Err(ConfigError::Invalid(
                    "geometry needs exactly one of `lattice` or `explicit`".into(),
                ))
            }
        }
        if !(self.coupling.temperature.is_finite() && self.coupling.temperature > 0.0) {
            return Err(ConfigError::Invalid(
                "coupling.temperature must be finite and > 0".into(),
            ));
        }
        if !self.coupling.mu.is_finite() {
            return Err(ConfigError::Invalid("coupling.mu must be finite".into()));
        }
        if self.kernel.tol < 1e-13 {
            return Err(ConfigError::Invalid("kernel.tol must be >= 1e-13".into()));
        }
        if !(self.kernel.b_switch > 0.0 && self.kernel.b_switch <= 0.1) {
            return Err(ConfigError::Invalid(
                "kernel.b_switch must be in (0, 0.1]".into(),
            ));
        }
        Ok(())
    }

    pub fn constants(&self) -> PhysicalConstants {
        let mut k = match self.units.system {
            UnitSystem::Dimensionless => PhysicalConstants::dimensionless(),
            UnitSystem::GaussianEvUmK => PhysicalConstants::gaussian_ev_um_k(),
        };
        if let Some(h) = self.units.hbar {
            k.hbar = h;
        }
        if let Some(c) = self.units.c {
            k.c = c;
        }
        if let Some(kb) = self.units.k_b {
            k.k_b = kb;
        }
        k
    }

    pub fn coupling_spec(&self) -> CouplingSpec {
        CouplingSpec {
            mu: self.coupling.mu,
            temperature: self.coupling.temperature,
        }
    }

    pub fn kernel_settings(&self) -> KernelSettings {
        KernelSettings {
            mode: self.kernel.mode,
            tol: self.kernel.tol,
            theta_coherent: self.kernel.theta_coherent,
            theta_incoherent: self.kernel.theta_incoherent,
            b_switch: self.kernel.b_switch,
        }
    }

    /// Hamiltonian terms, reading the referenced file if needed.
    pub fn hamiltonian_terms(&self) -> Result<Vec<PauliString>, ConfigError> {
        let text = match (&self.hamiltonian.terms, &self.hamiltonian.file) {
            (Some(lines), None) => lines.join("\n"),
            (None, Some(path)) => std::fs::read_to_string(path)
                .map_err(|e| ConfigError::Invalid(format!("cannot read {path}: {e}")))?,
            _ => unreachable!("validated"),
        };
        Ok(parse_hamiltonian(&text, self.hamiltonian.n)?)
    }

    pub fn build_geometry(&self) -> DipoleGeometry {
        match (&self.geometry.lattice, &self.geometry.explicit) {
            (Some(l), None) => DipoleGeometry::linear_lattice(l.n, l.spacing),
            (None, Some(p)) => DipoleGeometry::from_positions(
                p.iter().map(|&[x, y, z]| Vector3::new(x, y, z)).collect(),
            ),
            _ => unreachable!("validated"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal(extra: &str) -> String {
        format!(
            r#"{{
            "units": {{"system": "dimensionless"}},
            "hamiltonian": {{"n": 1, "terms": ["0.5 Z1"]}},
            "geometry": {{"lattice": {{"n": 1, "spacing": 1.0}}}},
            "coupling": {{"mu": 1.0, "temperature": 1.0}}{extra}
        }}"#
        )
    }

    #[test]
    fn minimal_config_parses() {
        let cfg = RunConfig::from_json(&minimal("")).unwrap();
        assert_eq!(cfg.hamiltonian.n, 1);
        assert_eq!(cfg.kernel.tol, 1e-10);
        assert_eq!(cfg.outputs.directory, "out");
        assert_eq!(cfg.constants().hbar, 1.0);
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = minimal(r#", "extra_block": {}"#);
        assert!(matches!(
            RunConfig::from_json(&text),
            Err(ConfigError::Json(_))
        ));
    }

    #[test]
    fn geometry_mismatch_rejected() {
        let text = r#"{
            "units": {"system": "dimensionless"},
            "hamiltonian": {"n": 2, "terms": ["0.5 Z1"]},
            "geometry": {"lattice": {"n": 3, "spacing": 1.0}},
            "coupling": {"mu": 1.0, "temperature": 1.0}
        }"#;
        assert!(matches!(
            RunConfig::from_json(text),
            Err(ConfigError::Invalid(_))
        ));
    }

    #[test]
    fn infinite_temperature_rejected() {
        let text = r#"{
            "units": {"system": "dimensionless"},
            "hamiltonian": {"n": 1, "terms": ["0.5 Z1"]},
            "geometry": {"lattice": {"n": 1, "spacing": 1.0}},
            "coupling": {"mu": 1.0, "temperature": 1e999}
        }"#;
        assert!(RunConfig::from_json(text).is_err());
    }

    #[test]
    fn explicit_geometry_and_overrides() {
        let text = r#"{
            "units": {"system": "gaussian-ev-um-k", "c": 1.0},
            "hamiltonian": {"n": 2, "terms": ["0.5 Z1", "0.5 Z2"]},
            "geometry": {"explicit": [[0,0,0],[0,0,1]]},
            "coupling": {"mu": 1.0, "temperature": 300.0},
            "kernel": {"mode": "quadrature"}
        }"#;
        let cfg = RunConfig::from_json(text).unwrap();
        assert_eq!(cfg.constants().c, 1.0);
        assert!(cfg.constants().hbar > 1e-16);
        assert_eq!(cfg.kernel_settings().mode, KernelMode::Quadrature);
        assert_eq!(cfg.build_geometry().len(), 2);
    }
}
