//! Transition-rate assembly: the Planck weight, the general angular-kernel
//! rate, its coherent/incoherent closed forms, and the full rate matrix.
//!
//! Index convention: P[n,m] is the rate of the transition m → n.
//! E_n < E_m is emission and receives the spontaneous +1 in the
//! `WithSpontaneous` variant.

use crate::geometry::{classify_regime, DipoleGeometry, RegimeVerdict};
use crate::kernel::{
    kernel_coherent, kernel_incoherent, kernel_quadrature, AngularKernel, KernelError,
};
use crate::pauli::{dipole_matrix_elements, Axis, Spectrum};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

/// ħ, c, k_B in the configured unit system; all strictly positive.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub c: f64,
    pub k_b: f64,
}

impl PhysicalConstants {
    /// Reduced units ħ = c = k_B = 1.
    pub fn dimensionless() -> Self {
        PhysicalConstants {
            hbar: 1.0,
            c: 1.0,
            k_b: 1.0,
        }
    }

    /// Energies in eV, lengths in µm, temperatures in K, times in s.
    /// hc = 1.23984 eV·µm follows from these values.
    pub fn gaussian_ev_um_k() -> Self {
        PhysicalConstants {
            hbar: 6.582_119_569e-16, // eV s
            c: 2.997_924_58e14,      // µm / s
            k_b: 8.617_333_262e-5,   // eV / K
        }
    }

    pub fn validate(&self) -> Result<(), RateError> {
        if self.hbar > 0.0 && self.c > 0.0 && self.k_b > 0.0 {
            Ok(())
        } else {
            Err(RateError::InvalidInput(
                "physical constants must be strictly positive".into(),
            ))
        }
    }
}

/// Dipole moment and bath temperature.
#[derive(Debug, Clone, Copy)]
pub struct CouplingSpec {
    pub mu: f64,
    pub temperature: f64,
}

impl CouplingSpec {
    pub fn validate(&self) -> Result<(), RateError> {
        if !self.temperature.is_finite() || self.temperature <= 0.0 {
            return Err(RateError::InvalidInput(
                "temperature must be finite and > 0".into(),
            ));
        }
        if !self.mu.is_finite() {
            return Err(RateError::InvalidInput("mu must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateVariant {
    Stimulated,
    WithSpontaneous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelMode {
    Auto,
    Quadrature,
    Lattice,
    Coherent,
    Incoherent,
}

/// Knobs for kernel construction, shared by the rate pipeline and the CLI.
#[derive(Debug, Clone, Copy)]
pub struct KernelSettings {
    pub mode: KernelMode,
    /// Relative tolerance of the adaptive quadrature.
    pub tol: f64,
    /// Threshold on ωℓ/c below which `auto` uses the coherent closed form.
    pub theta_coherent: f64,
    /// Threshold on ωa/c above which `auto` uses the incoherent closed form.
    pub theta_incoherent: f64,
    /// Series/closed-form switch of the lattice kernel.
    pub b_switch: f64,
}

impl Default for KernelSettings {
    fn default() -> Self {
        KernelSettings {
            mode: KernelMode::Auto,
            tol: 1e-10,
            theta_coherent: crate::geometry::DEFAULT_THETA_COHERENT,
            theta_incoherent: crate::geometry::DEFAULT_THETA_INCOHERENT,
            b_switch: crate::kernel::B_SWITCH,
        }
    }
}

impl KernelSettings {
    pub fn with_mode(mode: KernelMode) -> Self {
        KernelSettings {
            mode,
            ..Default::default()
        }
    }
}

#[derive(Debug, Error)]
pub enum RateError {
    #[error("{0}")]
    InvalidInput(String),
    #[error("kernel failed for pair ({n}, {m}): {source}")]
    Kernel {
        n: usize,
        m: usize,
        source: KernelError,
    },
    #[error("lattice kernel requested but geometry is not a declared lattice")]
    NotALattice,
}

/// ω³ n̄(ω) = ω³ / (e^{ħω/k_BT} − 1); 0 at ω = 0 (the ω³ zero wins).
/// Deep-exponential arguments switch to ω³ e^{−x} to avoid overflow.
pub fn planck_weight(omega: f64, temperature: f64, constants: &PhysicalConstants) -> f64 {
    assert!(omega >= 0.0 && temperature > 0.0);
    if omega == 0.0 {
        return 0.0;
    }
    let x = constants.hbar * omega / (constants.k_b * temperature);
    let w3 = omega * omega * omega;
    if x > 700.0 {
        w3 * (-x).exp()
    } else {
        w3 / x.exp_m1()
    }
}

/// Photon occupancy n̄(ω) with the same overflow guard.
pub fn occupancy(omega: f64, temperature: f64, constants: &PhysicalConstants) -> f64 {
    let x = constants.hbar * omega / (constants.k_b * temperature);
    if x > 700.0 {
        (-x).exp()
    } else {
        1.0 / x.exp_m1()
    }
}

/// All dipole matrix-element matrices, indexed as elems[3·i + h].
pub fn all_dipole_elements(spectrum: &Spectrum, n_sites: usize) -> Vec<DMatrix<Complex64>> {
    let mut elems = Vec::with_capacity(3 * n_sites);
    for site in 1..=n_sites {
        for axis in Axis::ALL {
            elems.push(dipole_matrix_elements(spectrum, site, axis).matrix);
        }
    }
    elems
}

/// Quadratic form Σ_{ihjl} Q[(ih),(jl)] T_i^h conj(T_j^l) for the pair
/// (n, m); real and ≥ 0 since the kernel is PSD.
pub fn kernel_quadratic_form(
    kernel: &AngularKernel,
    elems: &[DMatrix<Complex64>],
    n: usize,
    m: usize,
) -> f64 {
    let dim = kernel.matrix.nrows();
    let mut v = DVector::<Complex64>::zeros(dim);
    for k in 0..dim {
        v[k] = elems[k][(n, m)].conj();
    }
    let s = (v.adjoint() * &kernel.matrix * &v)[(0, 0)];
    s.re
}

/// μ²/(2πħc³), the scale in front of every general rate.
pub fn prefactor(coupling: &CouplingSpec, constants: &PhysicalConstants) -> f64 {
    coupling.mu * coupling.mu / (2.0 * PI * constants.hbar * constants.c.powi(3))
}

/// Build the kernel for one transition frequency according to the settings.
pub fn kernel_for(
    geometry: &DipoleGeometry,
    omega: f64,
    constants: &PhysicalConstants,
    settings: &KernelSettings,
) -> Result<AngularKernel, RateError> {
    let n = geometry.len();
    let build = |mode: KernelMode| -> Result<AngularKernel, RateError> {
        match mode {
            KernelMode::Coherent => Ok(kernel_coherent(n)),
            KernelMode::Incoherent => Ok(kernel_incoherent(n)),
            KernelMode::Lattice => {
                let a = geometry.lattice_spacing().ok_or(RateError::NotALattice)?;
                Ok(crate::kernel::kernel_lattice_switch(
                    n,
                    a,
                    omega,
                    constants.c,
                    settings.b_switch,
                ))
            }
            KernelMode::Quadrature => kernel_quadrature(geometry, omega, constants.c, settings.tol)
                .map_err(|source| RateError::Kernel { n: 0, m: 0, source }),
            KernelMode::Auto => unreachable!(),
        }
    };
    match settings.mode {
        KernelMode::Auto => {
            let verdict = classify_regime(
                geometry,
                omega,
                constants.c,
                settings.theta_coherent,
                settings.theta_incoherent,
            )
            .verdict;
            match verdict {
                RegimeVerdict::Coherent => build(KernelMode::Coherent),
                RegimeVerdict::Incoherent => build(KernelMode::Incoherent),
                RegimeVerdict::Intermediate => {
                    if geometry.lattice_spacing().is_some() {
                        build(KernelMode::Lattice)
                    } else {
                        build(KernelMode::Quadrature)
                    }
                }
            }
        }
        m => build(m),
    }
}

/// Coherent-limit weight Σ_h |<n| Σ_i σ_i^h |m>|².
pub fn collective_weight(spectrum: &Spectrum, n_sites: usize, n: usize, m: usize) -> f64 {
    let mut s = 0.0;
    for axis in Axis::ALL {
        let mut total = Complex64::new(0.0, 0.0);
        for site in 1..=n_sites {
            total += dipole_matrix_elements(spectrum, site, axis).matrix[(n, m)];
        }
        s += total.norm_sqr();
    }
    s
}

/// Incoherent-limit weight Σ_i Σ_h |<n| σ_i^h |m>|².
pub fn site_sum_weight(spectrum: &Spectrum, n_sites: usize, n: usize, m: usize) -> f64 {
    let mut s = 0.0;
    for axis in Axis::ALL {
        for site in 1..=n_sites {
            s += dipole_matrix_elements(spectrum, site, axis).matrix[(n, m)].norm_sqr();
        }
    }
    s
}

/// Rate of the transition m → n with an explicit kernel.
///
/// Stimulated: prefactor · ω³ n̄ · Σ Q T T*.
/// WithSpontaneous: occupancy n̄ → n̄ + 1 when E_n < E_m (emission).
#[allow(clippy::too_many_arguments)]
pub fn rate_with_kernel(
    spectrum: &Spectrum,
    kernel: &AngularKernel,
    elems: &[DMatrix<Complex64>],
    coupling: &CouplingSpec,
    constants: &PhysicalConstants,
    n: usize,
    m: usize,
    variant: RateVariant,
) -> f64 {
    assert!(n != m);
    let gap = spectrum.gap(n, m);
    if gap == 0.0 {
        return 0.0;
    }
    let omega = gap / constants.hbar;
    let mut occ = occupancy(omega, coupling.temperature, constants);
    if variant == RateVariant::WithSpontaneous && spectrum.eigenvalues[n] < spectrum.eigenvalues[m]
    {
        occ += 1.0;
    }
    let s = kernel_quadratic_form(kernel, elems, n, m);
    let rate = prefactor(coupling, constants) * omega.powi(3) * occ * s;
    debug_assert!(rate >= -1e-14);
    rate.max(0.0)
}

/// General rate for one pair, building the kernel according to `mode`.
#[allow(clippy::too_many_arguments)]
pub fn transition_rate(
    spectrum: &Spectrum,
    geometry: &DipoleGeometry,
    coupling: &CouplingSpec,
    constants: &PhysicalConstants,
    n: usize,
    m: usize,
    mode: KernelMode,
    variant: RateVariant,
) -> Result<f64, RateError> {
    let gap = spectrum.gap(n, m);
    if gap == 0.0 {
        return Ok(0.0);
    }
    let omega = gap / constants.hbar;
    let kernel =
        kernel_for(geometry, omega, constants, &KernelSettings::with_mode(mode)).map_err(|e| {
            match e {
                RateError::Kernel { source, .. } => RateError::Kernel { n, m, source },
                other => other,
            }
        })?;
    let elems = all_dipole_elements(spectrum, geometry.len());
    Ok(rate_with_kernel(
        spectrum, &kernel, &elems, coupling, constants, n, m, variant,
    ))
}

/// Coherent closed form: (4μ²/3ħc³) · ω³ occ · Σ_h |<n| Σ_i σ_i^h |m>|².
pub fn rate_coherent(
    spectrum: &Spectrum,
    n_sites: usize,
    coupling: &CouplingSpec,
    constants: &PhysicalConstants,
    n: usize,
    m: usize,
    variant: RateVariant,
) -> f64 {
    closed_form_rate(spectrum, n_sites, coupling, constants, n, m, variant, true)
}

/// Incoherent closed form: (4μ²/3ħc³) · ω³ occ · Σ_i Σ_h |<n| σ_i^h |m>|².
pub fn rate_incoherent(
    spectrum: &Spectrum,
    n_sites: usize,
    coupling: &CouplingSpec,
    constants: &PhysicalConstants,
    n: usize,
    m: usize,
    variant: RateVariant,
) -> f64 {
    closed_form_rate(spectrum, n_sites, coupling, constants, n, m, variant, false)
}

#[allow(clippy::too_many_arguments)]
fn closed_form_rate(
    spectrum: &Spectrum,
    n_sites: usize,
    coupling: &CouplingSpec,
    constants: &PhysicalConstants,
    n: usize,
    m: usize,
    variant: RateVariant,
    coherent: bool,
) -> f64 {
    assert!(n != m);
    let gap = spectrum.gap(n, m);
    if gap == 0.0 {
        return 0.0;
    }
    let omega = gap / constants.hbar;
    let mut occ = occupancy(omega, coupling.temperature, constants);
    if variant == RateVariant::WithSpontaneous && spectrum.eigenvalues[n] < spectrum.eigenvalues[m]
    {
        occ += 1.0;
    }
    let s = if coherent {
        collective_weight(spectrum, n_sites, n, m)
    } else {
        site_sum_weight(spectrum, n_sites, n, m)
    };
    let pref = 4.0 * coupling.mu * coupling.mu / (3.0 * constants.hbar * constants.c.powi(3));
    pref * omega.powi(3) * occ * s
}

/// M×M nonnegative rates between eigenstates; P[n,m] is the rate m → n.
#[derive(Debug, Clone)]
pub struct RateMatrix {
    pub rates: DMatrix<f64>,
    pub variant: RateVariant,
    /// Kernel provenance label per distinct gap, (omega, label), ascending.
    pub kernel_provenance: Vec<(f64, &'static str)>,
}

impl RateMatrix {
    pub fn dimension(&self) -> usize {
        self.rates.nrows()
    }

    pub fn provenance_for(&self, omega: f64) -> &'static str {
        for &(w, label) in &self.kernel_provenance {
            if (w - omega).abs() <= 1e-12 * w.max(1.0) {
                return label;
            }
        }
        "none"
    }
}

/// Assemble the full rate matrix. Kernels are computed once per distinct
/// transition frequency (grouped at 1e-12 relative) and reused across all
/// pairs sharing the gap. Stimulated rates are exactly symmetric by
/// construction: each unordered pair is evaluated once.
pub fn rate_matrix(
    spectrum: &Spectrum,
    geometry: &DipoleGeometry,
    coupling: &CouplingSpec,
    constants: &PhysicalConstants,
    settings: &KernelSettings,
    variant: RateVariant,
) -> Result<RateMatrix, RateError> {
    coupling.validate()?;
    constants.validate()?;
    let dim = spectrum.dimension();
    assert!(dim == 1 << geometry.len(), "spectrum/geometry mismatch");
    let elems = all_dipole_elements(spectrum, geometry.len());

    // distinct gaps, ascending, grouped at 1e-12 relative
    let mut gaps: Vec<f64> = Vec::new();
    for m in 0..dim {
        for n in (m + 1)..dim {
            let g = spectrum.gap(n, m);
            if g == 0.0 {
                continue;
            }
            if !gaps.iter().any(|&x| (x - g).abs() <= 1e-12 * g) {
                gaps.push(g);
            }
        }
    }
    gaps.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut kernels: Vec<AngularKernel> = Vec::with_capacity(gaps.len());
    let mut provenance = Vec::with_capacity(gaps.len());
    for &g in &gaps {
        let omega = g / constants.hbar;
        let k = kernel_for(geometry, omega, constants, settings)?;
        provenance.push((omega, k.provenance.label()));
        kernels.push(k);
    }
    let kernel_for_gap = |g: f64| -> &AngularKernel {
        let idx = gaps
            .iter()
            .position(|&x| (x - g).abs() <= 1e-12 * g)
            .expect("gap registered above");
        &kernels[idx]
    };

    let pref = prefactor(coupling, constants);
    let mut rates = DMatrix::<f64>::zeros(dim, dim);
    for m in 0..dim {
        for n in (m + 1)..dim {
            let gap = spectrum.gap(n, m);
            if gap == 0.0 {
                continue;
            }
            let omega = gap / constants.hbar;
            let s = kernel_quadratic_form(kernel_for_gap(gap), &elems, n, m);
            let occ = occupancy(omega, coupling.temperature, constants);
            let base = pref * omega.powi(3) * s;
            // eigenvalues ascending: n > m means E_n >= E_m, so m -> n is
            // absorption and n -> m is emission.
            let (occ_up, occ_down) = match variant {
                RateVariant::Stimulated => (occ, occ),
                RateVariant::WithSpontaneous => (occ, occ + 1.0),
            };
            rates[(n, m)] = (base * occ_up).max(0.0);
            rates[(m, n)] = (base * occ_down).max(0.0);
        }
    }
    Ok(RateMatrix {
        rates,
        variant,
        kernel_provenance: provenance,
    })
}

/// Aggregated rates between degenerate manifolds: rate B → A is
/// Σ_{n∈A, m∈B} P[n,m], invariant under intra-manifold basis rotations.
pub fn manifold_rates(rate_matrix: &RateMatrix, spectrum: &Spectrum) -> DMatrix<f64> {
    let dim = spectrum.dimension();
    let k = spectrum.num_manifolds();
    let mut agg = DMatrix::<f64>::zeros(k, k);
    for n in 0..dim {
        for m in 0..dim {
            let (a, b) = (spectrum.manifolds[n], spectrum.manifolds[m]);
            if a != b {
                agg[(a, b)] += rate_matrix.rates[(n, m)];
            }
        }
    }
    agg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{build_hamiltonian, diagonalize, parse_hamiltonian};

    fn spectrum_of(text: &str, n: usize) -> Spectrum {
        let terms = parse_hamiltonian(text, n).unwrap();
        let h = build_hamiltonian(&terms, n).unwrap();
        diagonalize(&h, None).unwrap()
    }

    const DIMLESS: PhysicalConstants = PhysicalConstants {
        hbar: 1.0,
        c: 1.0,
        k_b: 1.0,
    };

    #[test]
    fn planck_zero_frequency() {
        assert_eq!(planck_weight(0.0, 1.0, &DIMLESS), 0.0);
    }

    #[test]
    fn planck_unit_argument() {
        // ħω = k_BT: ω³/(e−1)
        let w = planck_weight(2.0, 2.0, &DIMLESS);
        assert!((w - 8.0 / (1.0f64.exp() - 1.0)).abs() < 1e-12);
        assert!((planck_weight(1.0, 1.0, &DIMLESS) - 0.5819767068693265).abs() < 1e-12);
    }

    #[test]
    fn planck_deep_exponential() {
        // ħω/k_BT = 1000: equals ω³ e^{-1000}, no overflow or NaN
        let w = planck_weight(1000.0, 1.0, &DIMLESS);
        assert!(w.is_finite() && w >= 0.0);
        let expected = 1e9 * (-1000.0f64).exp();
        assert!((w - expected).abs() <= 1e-12 * expected.max(f64::MIN_POSITIVE));
        // continuity across the branch switch
        let lo = planck_weight(699.9, 1.0, &DIMLESS);
        let hi = planck_weight(700.1, 1.0, &DIMLESS);
        assert!(lo > hi && lo / hi < 1.3);
    }

    /// Textbook single-spin anchor: H = (Δ/2)Z, stimulated rate
    /// (4μ²/3ħc³)·ω³/(e^{ħω/k_BT}−1)·2.
    #[test]
    fn single_spin_textbook_rate() {
        let delta = 1.3f64;
        let s = spectrum_of(&format!("{} Z1", delta / 2.0), 1);
        let coupling = CouplingSpec {
            mu: 0.7,
            temperature: 0.9,
        };
        let geometry = DipoleGeometry::linear_lattice(1, 1.0);
        let got = transition_rate(
            &s,
            &geometry,
            &coupling,
            &DIMLESS,
            1,
            0,
            KernelMode::Coherent,
            RateVariant::Stimulated,
        )
        .unwrap();
        let omega = delta;
        let want = 4.0 * coupling.mu.powi(2) / 3.0 * omega.powi(3)
            / ((omega / coupling.temperature).exp() - 1.0)
            * 2.0;
        assert!((got - want).abs() <= 1e-12 * want, "{got} vs {want}");
    }

    /// Two coincident non-interacting spins: the symmetric (triplet)
    /// transition doubles the collective matrix element, quadrupling
    /// nothing -- oracle is the brute-force collective element on the
    /// 4-dimensional space.
    #[test]
    fn coincident_pair_collective_enhancement() {
        let s = spectrum_of("0.5 Z1\n0.5 Z2\n0.001 X1 X2\n0.001 Y1 Y2\n", 2);
        let coupling = CouplingSpec {
            mu: 1.0,
            temperature: 1.0,
        };
        // XX+YY splits the one-excitation pair: index 1 is the antisymmetric
        // (dark) state, index 2 the symmetric (bright) state.
        let collective = |n: usize| -> f64 {
            let mut w = 0.0;
            for axis in Axis::ALL {
                let t1 = dipole_matrix_elements(&s, 1, axis).matrix;
                let t2 = dipole_matrix_elements(&s, 2, axis).matrix;
                w += (t1[(n, 0)] + t2[(n, 0)]).norm_sqr();
            }
            w
        };
        assert!(collective(1) < 1e-20, "dark state should be decoupled");
        let want_s = collective(2);
        let r = rate_coherent(&s, 2, &coupling, &DIMLESS, 2, 0, RateVariant::Stimulated);
        let omega = s.eigenvalues[2] - s.eigenvalues[0];
        let pref = 4.0 / 3.0 * omega.powi(3) / ((omega).exp_m1());
        assert!((r - pref * want_s).abs() <= 1e-12 * r.max(1e-300));
        // symmetric channel carries weight 2 = 2x single spin
        assert!((want_s - 4.0).abs() < 1e-2, "collective weight {want_s}");
    }

    #[test]
    fn coherent_closed_form_matches_general() {
        let s = spectrum_of("0.5 Z1\n0.45 Z2\n0.2 X1 X2\n-0.1 Y1 Z2\n", 2);
        let coupling = CouplingSpec {
            mu: 1.3,
            temperature: 0.7,
        };
        let geometry = DipoleGeometry::linear_lattice(2, 1.0);
        for n in 0..4 {
            for m in 0..4 {
                if n == m {
                    continue;
                }
                let closed = rate_coherent(
                    &s,
                    2,
                    &coupling,
                    &DIMLESS,
                    n,
                    m,
                    RateVariant::WithSpontaneous,
                );
                let general = transition_rate(
                    &s,
                    &geometry,
                    &coupling,
                    &DIMLESS,
                    n,
                    m,
                    KernelMode::Coherent,
                    RateVariant::WithSpontaneous,
                )
                .unwrap();
                assert!((closed - general).abs() <= 1e-12 * closed.max(1e-300));
            }
        }
    }

    #[test]
    fn incoherent_closed_form_matches_general() {
        let s = spectrum_of("0.5 Z1\n0.45 Z2\n0.2 X1 X2\n", 2);
        let coupling = CouplingSpec {
            mu: 0.8,
            temperature: 1.5,
        };
        let geometry = DipoleGeometry::linear_lattice(2, 1.0);
        for n in 0..4 {
            for m in 0..4 {
                if n == m {
                    continue;
                }
                let closed =
                    rate_incoherent(&s, 2, &coupling, &DIMLESS, n, m, RateVariant::Stimulated);
                let general = transition_rate(
                    &s,
                    &geometry,
                    &coupling,
                    &DIMLESS,
                    n,
                    m,
                    KernelMode::Incoherent,
                    RateVariant::Stimulated,
                )
                .unwrap();
                assert!((closed - general).abs() <= 1e-12 * closed.max(1e-300));
            }
        }
    }

    /// Singlet <-> triplet-0: the collective operator Σσ^h has zero matrix
    /// element between the two-spin singlet and any triplet state.
    #[test]
    fn singlet_triplet_collective_forbidden() {
        // Heisenberg pair: ground state is the singlet
        let s = spectrum_of("1 X1 X2\n1 Y1 Y2\n1 Z1 Z2\n", 2);
        assert!((s.eigenvalues[0] + 3.0).abs() < 1e-10); // singlet at -3
        let coupling = CouplingSpec {
            mu: 1.0,
            temperature: 1.0,
        };
        for n in 1..4 {
            let r = rate_coherent(
                &s,
                2,
                &coupling,
                &DIMLESS,
                n,
                0,
                RateVariant::WithSpontaneous,
            );
            assert!(r.abs() < 1e-20, "triplet {n} rate {r}");
        }
    }

    #[test]
    fn rate_matrix_zero_gap_and_symmetry() {
        let s = spectrum_of("1.0 Z1 Z2\n", 2);
        let geometry = DipoleGeometry::linear_lattice(2, 1.0);
        let coupling = CouplingSpec {
            mu: 1.0,
            temperature: 1.0,
        };
        let rm = rate_matrix(
            &s,
            &geometry,
            &coupling,
            &DIMLESS,
            &KernelSettings::default(),
            RateVariant::Stimulated,
        )
        .unwrap();
        // intra-manifold rates exactly zero, diagonal zero
        for n in 0..4 {
            for m in 0..4 {
                if s.manifolds[n] == s.manifolds[m] {
                    assert_eq!(rm.rates[(n, m)], 0.0);
                } else {
                    assert!(
                        (rm.rates[(n, m)] - rm.rates[(m, n)]).abs()
                            <= 1e-12 * rm.rates[(n, m)].max(1e-300)
                    );
                }
            }
        }
    }

    #[test]
    fn spontaneous_ratio_identity() {
        let s = spectrum_of("0.5 Z1\n0.3 X1\n", 1);
        let geometry = DipoleGeometry::linear_lattice(1, 1.0);
        let coupling = CouplingSpec {
            mu: 1.0,
            temperature: 0.8,
        };
        let stim = rate_matrix(
            &s,
            &geometry,
            &coupling,
            &DIMLESS,
            &KernelSettings::default(),
            RateVariant::Stimulated,
        )
        .unwrap();
        let spont = rate_matrix(
            &s,
            &geometry,
            &coupling,
            &DIMLESS,
            &KernelSettings::default(),
            RateVariant::WithSpontaneous,
        )
        .unwrap();
        let omega = s.eigenvalues[1] - s.eigenvalues[0];
        let nbar = 1.0 / (omega / 0.8).exp_m1();
        // emission entry (0,1): ratio (n̄+1)/n̄
        let ratio = spont.rates[(0, 1)] / stim.rates[(0, 1)];
        assert!((ratio - (nbar + 1.0) / nbar).abs() < 1e-12 * ratio);
        // absorption entry unchanged
        assert!((spont.rates[(1, 0)] - stim.rates[(1, 0)]).abs() <= 1e-300);
    }

    #[test]
    fn mu_squared_scaling() {
        let s = spectrum_of("0.5 Z1\n", 1);
        let _geometry = DipoleGeometry::linear_lattice(1, 1.0);
        let c1 = CouplingSpec {
            mu: 1.0,
            temperature: 1.0,
        };
        let c2 = CouplingSpec {
            mu: 2.0,
            temperature: 1.0,
        };
        let r1 = rate_coherent(&s, 1, &c1, &DIMLESS, 1, 0, RateVariant::Stimulated);
        let r2 = rate_coherent(&s, 1, &c2, &DIMLESS, 1, 0, RateVariant::Stimulated);
        assert_eq!(r2, 4.0 * r1);
    }

    #[test]
    fn manifold_rates_aggregate() {
        let s = spectrum_of("1.0 Z1 Z2\n", 2);
        let geometry = DipoleGeometry::linear_lattice(2, 1.0);
        let coupling = CouplingSpec {
            mu: 1.0,
            temperature: 1.0,
        };
        let rm = rate_matrix(
            &s,
            &geometry,
            &coupling,
            &DIMLESS,
            &KernelSettings::default(),
            RateVariant::WithSpontaneous,
        )
        .unwrap();
        let agg = manifold_rates(&rm, &s);
        assert_eq!(agg.nrows(), 2);
        // self-rates vanish
        assert_eq!(agg[(0, 0)], 0.0);
        assert_eq!(agg[(1, 1)], 0.0);
        // totals match the summed per-state rates
        let mut want = 0.0;
        for n in 0..4 {
            for m in 0..4 {
                if s.manifolds[n] == 1 && s.manifolds[m] == 0 {
                    want += rm.rates[(n, m)];
                }
            }
        }
        assert_eq!(agg[(1, 0)], want);
    }

    #[test]
    fn invalid_temperature_rejected() {
        let c = CouplingSpec {
            mu: 1.0,
            temperature: f64::INFINITY,
        };
        assert!(c.validate().is_err());
        let c = CouplingSpec {
            mu: 1.0,
            temperature: 0.0,
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn gaussian_constants_reproduce_hc() {
        let k = PhysicalConstants::gaussian_ev_um_k();
        let hc = 2.0 * PI * k.hbar * k.c;
        assert!((hc - 1.23984).abs() < 1e-4);
    }
}
