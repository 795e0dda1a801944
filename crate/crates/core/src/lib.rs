//! Transition rates for N fixed spin-1/2 magnetic dipoles weakly coupled
//! to blackbody radiation, and a Pauli master-equation layer that relaxes
//! eigenstate populations to the Gibbs distribution.
//!
//! Pipeline: parse a Pauli-string Hamiltonian, diagonalize it, build the
//! angular kernel for each transition frequency (spherical quadrature,
//! lattice closed form, or coherent/incoherent limit), assemble the rate
//! matrix with the Planck weight and optional spontaneous-emission
//! correction, then evolve populations.

pub mod config;
pub mod geometry;
pub mod kernel;
pub mod master;
pub mod pauli;
pub mod rates;
pub mod run;

pub use geometry::{classify_regime, DipoleGeometry, RegimeReport, RegimeVerdict};
pub use kernel::{
    kernel_coherent, kernel_incoherent, kernel_lattice, kernel_quadrature, q_analytic,
    AngularKernel, AxisClass,
};
pub use master::{build_generator, detailed_balance_check, evolve, gibbs, stationary, Generator};
pub use pauli::{build_hamiltonian, diagonalize, parse_hamiltonian, PauliString, Spectrum};
pub use rates::{
    manifold_rates, planck_weight, rate_coherent, rate_incoherent, rate_matrix, transition_rate,
    CouplingSpec, KernelMode, KernelSettings, PhysicalConstants, RateMatrix, RateVariant,
};
