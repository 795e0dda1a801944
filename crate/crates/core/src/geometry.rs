//! Dipole positions, extent / minimum spacing, and coherence-regime
//! classification of a transition frequency against the geometry.

use nalgebra::Vector3;
use std::f64::consts::PI;

/// N fixed dipole positions with cached extent and minimum spacing.
///
/// For N = 1 both the extent and the spacing are 0 by convention.
#[derive(Debug, Clone)]
pub struct DipoleGeometry {
    positions: Vec<Vector3<f64>>,
    extent: f64,
    min_spacing: f64,
    /// Set when the geometry was generated as a z-axis lattice; enables
    /// the analytic kernel path.
    lattice_spacing: Option<f64>,
}

impl DipoleGeometry {
    /// Build from explicit positions; extent and spacing are always
    /// recomputed from the points.
    pub fn from_positions(positions: Vec<Vector3<f64>>) -> Self {
        assert!(!positions.is_empty());
        let mut extent = 0.0f64;
        let mut min_spacing = f64::INFINITY;
        for i in 0..positions.len() {
            for j in (i + 1)..positions.len() {
                let d = (positions[i] - positions[j]).norm();
                extent = extent.max(d);
                min_spacing = min_spacing.min(d);
            }
        }
        if positions.len() == 1 {
            min_spacing = 0.0;
        }
        assert!(
            positions.len() == 1 || min_spacing > 0.0,
            "coincident dipoles"
        );
        DipoleGeometry {
            positions,
            extent,
            min_spacing,
            lattice_spacing: None,
        }
    }

    /// Regular linear lattice along z: r_i = (0, 0, a·i), i = 1..=n.
    pub fn linear_lattice(n: usize, spacing: f64) -> Self {
        assert!(n >= 1 && spacing > 0.0);
        let positions = (1..=n)
            .map(|i| Vector3::new(0.0, 0.0, spacing * i as f64))
            .collect();
        let mut g = Self::from_positions(positions);
        if n >= 2 {
            g.lattice_spacing = Some(spacing);
        }
        g
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn positions(&self) -> &[Vector3<f64>] {
        &self.positions
    }

    /// ℓ = max_{i≠j} |r_i − r_j|
    pub fn extent(&self) -> f64 {
        self.extent
    }

    /// a = min_{i≠j} |r_i − r_j|
    pub fn min_spacing(&self) -> f64 {
        self.min_spacing
    }

    /// Spacing of the generating z-lattice, if this geometry came from
    /// `linear_lattice` with n >= 2.
    pub fn lattice_spacing(&self) -> Option<f64> {
        self.lattice_spacing
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RegimeVerdict {
    Coherent,
    Incoherent,
    Intermediate,
}

/// Classification of one transition frequency against the geometry scales.
#[derive(Debug, Clone, serde::Serialize)]
pub struct RegimeReport {
    pub omega: f64,
    /// λ = 2πc/ω; infinite at ω = 0.
    pub wavelength: f64,
    /// 2πℓ/λ = ωℓ/c
    pub extent_ratio: f64,
    /// 2πa/λ = ωa/c
    pub spacing_ratio: f64,
    pub verdict: RegimeVerdict,
}

/// Default threshold on 2πℓ/λ below which the coherent closed form is
/// accurate to ~1% (error is O((2πℓ/λ)²)).
pub const DEFAULT_THETA_COHERENT: f64 = 0.1;
/// Default threshold on 2πa/λ above which off-diagonal kernel terms are
/// ~1% (error is O(λ/(2πa))).
pub const DEFAULT_THETA_INCOHERENT: f64 = 100.0;

/// Decide which limit (if any) applies to a transition of frequency ω.
pub fn classify_regime(
    geometry: &DipoleGeometry,
    omega: f64,
    c: f64,
    theta_coherent: f64,
    theta_incoherent: f64,
) -> RegimeReport {
    assert!(omega >= 0.0);
    let extent_ratio = omega * geometry.extent() / c;
    let spacing_ratio = omega * geometry.min_spacing() / c;
    let verdict = if extent_ratio <= theta_coherent {
        RegimeVerdict::Coherent
    } else if spacing_ratio >= theta_incoherent && geometry.len() >= 2 {
        RegimeVerdict::Incoherent
    } else {
        RegimeVerdict::Intermediate
    };
    RegimeReport {
        omega,
        wavelength: if omega > 0.0 {
            2.0 * PI * c / omega
        } else {
            f64::INFINITY
        },
        extent_ratio,
        spacing_ratio,
        verdict,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Rotation3, Vector3};

    #[test]
    fn lattice_positions() {
        let g = DipoleGeometry::linear_lattice(2, 1.0);
        assert_eq!(g.positions()[0], Vector3::new(0.0, 0.0, 1.0));
        assert_eq!(g.positions()[1], Vector3::new(0.0, 0.0, 2.0));
        assert_eq!(g.extent(), 1.0);
        assert_eq!(g.min_spacing(), 1.0);
    }

    #[test]
    fn single_point_convention() {
        let g = DipoleGeometry::linear_lattice(1, 5.0);
        assert_eq!(g.extent(), 0.0);
        assert_eq!(g.min_spacing(), 0.0);
        assert_eq!(g.lattice_spacing(), None);
    }

    #[test]
    fn lattice_scales() {
        let g = DipoleGeometry::linear_lattice(4, 2.0);
        assert_eq!(g.extent(), 6.0);
        assert_eq!(g.min_spacing(), 2.0);
        assert_eq!(g.lattice_spacing(), Some(2.0));
    }

    #[test]
    fn regime_atomic_scale() {
        // 3 nm extent, 1 eV gap; eV-µm-K unit system with ħ, c in eV·s, µm/s
        let hbar = 6.582119569e-16;
        let c = 2.99792458e14;
        let g = DipoleGeometry::from_positions(vec![
            Vector3::zeros(),
            Vector3::new(0.0, 0.0, 3.0e-3), // 3 nm in µm
        ]);
        let omega = 1.0 / hbar;
        let r = classify_regime(&g, omega, c, 0.1, 100.0);
        assert_eq!(r.verdict, RegimeVerdict::Coherent);
        // λ ≈ 1.24 µm
        assert!((r.wavelength - 1.23984).abs() < 1e-3);
    }

    #[test]
    fn regime_incoherent() {
        let g = DipoleGeometry::linear_lattice(2, 1.0);
        // 2πa/λ = 200 with c = 1
        let r = classify_regime(&g, 200.0, 1.0, 0.1, 100.0);
        assert_eq!(r.verdict, RegimeVerdict::Incoherent);
    }

    #[test]
    fn regime_zero_frequency() {
        let g = DipoleGeometry::linear_lattice(3, 1.0);
        let r = classify_regime(&g, 0.0, 1.0, 0.1, 100.0);
        assert_eq!(r.verdict, RegimeVerdict::Coherent);
        assert!(r.wavelength.is_infinite());
    }

    #[test]
    fn regime_monotone_in_omega() {
        let g = DipoleGeometry::linear_lattice(3, 1.0);
        let rank = |v: RegimeVerdict| match v {
            RegimeVerdict::Coherent => 0,
            RegimeVerdict::Intermediate => 1,
            RegimeVerdict::Incoherent => 2,
        };
        let mut prev = 0;
        for k in 0..200 {
            let omega = 1e-3 * 10f64.powf(k as f64 * 0.04);
            let r = rank(classify_regime(&g, omega, 1.0, 0.1, 100.0).verdict);
            assert!(r >= prev);
            prev = r;
        }
    }

    #[test]
    fn scales_rigid_motion_invariant() {
        let pts = vec![
            Vector3::new(0.1, -0.4, 0.9),
            Vector3::new(1.3, 0.2, -0.5),
            Vector3::new(-0.7, 0.8, 0.3),
        ];
        let g = DipoleGeometry::from_positions(pts.clone());
        let rot = Rotation3::from_euler_angles(0.3, -1.1, 2.4);
        let shift = Vector3::new(5.0, -2.0, 0.7);
        let moved: Vec<_> = pts.iter().map(|p| rot * p + shift).collect();
        let g2 = DipoleGeometry::from_positions(moved);
        assert!((g.extent() - g2.extent()).abs() < 1e-12);
        assert!((g.min_spacing() - g2.min_spacing()).abs() < 1e-12);
        assert!(g.extent() >= g.min_spacing());
    }
}
