//! The 3N×3N angular kernel
//!
//!   Q[(i,h),(j,l)] = ∫ sinθ dθ dφ  e^{i u·(r_i−r_j) ω/c} (δ_hl − u_h u_l),
//!
//! computed by adaptive spherical quadrature for arbitrary geometry, by
//! closed form on a linear lattice, and in the coherent/incoherent limits.
//! Every diagonal entry is 8π/3; the kernel is Hermitian and positive
//! semidefinite (it is a Gram-type integral of the transverse projector).

use crate::geometry::DipoleGeometry;
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Provenance {
    Quadrature { tol: f64, achieved: f64 },
    LatticeAnalytic,
    CoherentLimit,
    IncoherentLimit,
}

impl Provenance {
    pub fn label(&self) -> &'static str {
        match self {
            Provenance::Quadrature { .. } => "quadrature",
            Provenance::LatticeAnalytic => "lattice-analytic",
            Provenance::CoherentLimit => "coherent-limit",
            Provenance::IncoherentLimit => "incoherent-limit",
        }
    }
}

/// Angular kernel at one transition frequency. Row/column index is
/// 3·i + h with dipole i and axis h both 0-based.
#[derive(Debug, Clone)]
pub struct AngularKernel {
    pub omega: f64,
    pub matrix: DMatrix<Complex64>,
    pub provenance: Provenance,
}

impl AngularKernel {
    pub fn num_dipoles(&self) -> usize {
        self.matrix.nrows() / 3
    }

    pub fn entry(&self, i: usize, h: usize, j: usize, l: usize) -> Complex64 {
        self.matrix[(3 * i + h, 3 * j + l)]
    }

    /// Diagnostic CSV: (i, h, j, l, re_q, im_q, provenance, achieved_error).
    /// Indices are 1-based in the dump.
    pub fn to_csv(&self) -> String {
        let achieved = match self.provenance {
            Provenance::Quadrature { achieved, .. } => achieved,
            _ => 0.0,
        };
        let mut out = String::from("i,h,j,l,re_q,im_q,provenance,achieved_error\n");
        let n = self.num_dipoles();
        for i in 0..n {
            for h in 0..3 {
                for j in 0..n {
                    for l in 0..3 {
                        let q = self.entry(i, h, j, l);
                        writeln!(
                            out,
                            "{},{},{},{},{:.16e},{:.16e},{},{:.16e}",
                            i + 1,
                            h + 1,
                            j + 1,
                            l + 1,
                            q.re,
                            q.im,
                            self.provenance.label(),
                            achieved
                        )
                        .unwrap();
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Error)]
pub enum KernelError {
    #[error(
        "spherical quadrature did not converge to {tol:.3e} after {orders} order doublings \
         (achieved {achieved:.3e})"
    )]
    NoConvergence {
        tol: f64,
        achieved: f64,
        orders: usize,
    },
}

/// Axis class for the lattice closed forms: the lattice lies along z, so
/// h = z is longitudinal and h = x, y are transverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisClass {
    Transverse,
    Longitudinal,
}

/// Below this |b| the closed forms switch to their Taylor series; the b³
/// denominators lose ~3·|log10 b| digits to cancellation.
pub const B_SWITCH: f64 = 1e-3;

/// Closed-form lattice kernel entry for dimensionless separation
/// b = (i−j)·a·ω/c:
///
///   transverse:   4π (b cos b + (b²−1) sin b) / b³
///   longitudinal: 8π (sin b − b cos b) / b³
///
/// Both tend to 8π/3 as b → 0.
pub fn q_analytic(b: f64, class: AxisClass) -> f64 {
    q_analytic_switch(b, class, B_SWITCH)
}

/// `q_analytic` with a caller-chosen series/closed-form switch point.
pub fn q_analytic_switch(b: f64, class: AxisClass, b_switch: f64) -> f64 {
    assert!(b.is_finite());
    if b.abs() < b_switch {
        let b2 = b * b;
        return match class {
            // π (8/3 − 8b²/15 + b⁴/35)
            AxisClass::Transverse => PI * (8.0 / 3.0 + b2 * (-8.0 / 15.0 + b2 / 35.0)),
            // π (8/3 − 4b²/15 + b⁴/105)
            AxisClass::Longitudinal => PI * (8.0 / 3.0 + b2 * (-4.0 / 15.0 + b2 / 105.0)),
        };
    }
    let (s, c) = b.sin_cos();
    let b3 = b * b * b;
    match class {
        AxisClass::Transverse => 4.0 * PI * (b * c + (b * b - 1.0) * s) / b3,
        AxisClass::Longitudinal => 8.0 * PI * (s - b * c) / b3,
    }
}

/// Coherent limit: phase factor ≡ 1, every (i,j) block is (8π/3)·I₃.
pub fn kernel_coherent(n: usize) -> AngularKernel {
    assert!(n >= 1);
    let dim = 3 * n;
    let q = 8.0 * PI / 3.0;
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for i in 0..n {
        for j in 0..n {
            for h in 0..3 {
                m[(3 * i + h, 3 * j + h)] = Complex64::new(q, 0.0);
            }
        }
    }
    AngularKernel {
        omega: 0.0,
        matrix: m,
        provenance: Provenance::CoherentLimit,
    }
}

/// Incoherent limit: (8π/3)·identity on the full 3N index space.
pub fn kernel_incoherent(n: usize) -> AngularKernel {
    assert!(n >= 1);
    let dim = 3 * n;
    let q = 8.0 * PI / 3.0;
    AngularKernel {
        omega: 0.0,
        matrix: DMatrix::<Complex64>::identity(dim, dim) * Complex64::new(q, 0.0),
        provenance: Provenance::IncoherentLimit,
    }
}

/// Analytic kernel for a linear z-lattice of spacing a:
/// Q[(i,h),(j,l)] = q_analytic((i−j)·a·ω/c, class(h))·δ_hl.
pub fn kernel_lattice(n: usize, spacing: f64, omega: f64, c: f64) -> AngularKernel {
    kernel_lattice_switch(n, spacing, omega, c, B_SWITCH)
}

/// `kernel_lattice` with a caller-chosen series switch for the closed forms.
pub fn kernel_lattice_switch(
    n: usize,
    spacing: f64,
    omega: f64,
    c: f64,
    b_switch: f64,
) -> AngularKernel {
    assert!(n >= 1 && spacing > 0.0 && omega >= 0.0);
    let dim = 3 * n;
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for i in 0..n {
        for j in 0..n {
            let b = (i as f64 - j as f64) * spacing * omega / c;
            for (h, class) in [
                AxisClass::Transverse,
                AxisClass::Transverse,
                AxisClass::Longitudinal,
            ]
            .iter()
            .enumerate()
            {
                m[(3 * i + h, 3 * j + h)] =
                    Complex64::new(q_analytic_switch(b, *class, b_switch), 0.0);
            }
        }
    }
    AngularKernel {
        omega,
        matrix: m,
        provenance: Provenance::LatticeAnalytic,
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1], by Newton iteration on
/// the Legendre polynomial.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            // evaluate P_n and P_n' by recurrence
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            pp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / pp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * pp * pp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Product rule on the unit sphere: Gauss–Legendre in cosθ × uniform
/// trapezoid in φ. Integrates smooth integrands of angular bandwidth
/// below the order spectrally.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    /// cosθ nodes
    pub polar_nodes: Vec<f64>,
    pub polar_weights: Vec<f64>,
    pub azimuthal_count: usize,
}

impl QuadratureRule {
    pub fn new(order: usize) -> Self {
        let (polar_nodes, polar_weights) = gauss_legendre(order);
        QuadratureRule {
            polar_nodes,
            polar_weights,
            azimuthal_count: order,
        }
    }

    /// Total weight over the sphere; 4π up to roundoff.
    pub fn total_weight(&self) -> f64 {
        let wsum: f64 = self.polar_weights.iter().sum();
        wsum * 2.0 * PI
    }
}

fn kernel_at_order(
    geometry: &DipoleGeometry,
    omega: f64,
    c: f64,
    order: usize,
) -> DMatrix<Complex64> {
    let n = geometry.len();
    let dim = 3 * n;
    let rule = QuadratureRule::new(order);
    let dphi = 2.0 * PI / rule.azimuthal_count as f64;
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    let mut phases = vec![Complex64::new(0.0, 0.0); n];
    for (ct, wt) in rule.polar_nodes.iter().zip(&rule.polar_weights) {
        let st = (1.0 - ct * ct).max(0.0).sqrt();
        for kphi in 0..rule.azimuthal_count {
            let phi = dphi * kphi as f64;
            let u = [st * phi.cos(), st * phi.sin(), *ct];
            let w = wt * dphi;
            for (p, r) in phases.iter_mut().zip(geometry.positions()) {
                let arg = (u[0] * r.x + u[1] * r.y + u[2] * r.z) * omega / c;
                *p = Complex64::from_polar(1.0, arg);
            }
            // projector δ_hl − u_h u_l
            let mut proj = [[0.0f64; 3]; 3];
            for h in 0..3 {
                for l in 0..3 {
                    proj[h][l] = if h == l { 1.0 } else { 0.0 } - u[h] * u[l];
                }
            }
            for i in 0..n {
                for j in 0..n {
                    let pair = phases[i] * phases[j].conj() * w;
                    for h in 0..3 {
                        for l in 0..3 {
                            m[(3 * i + h, 3 * j + l)] += pair * proj[h][l];
                        }
                    }
                }
            }
        }
    }
    m
}

/// Largest entry modulus of a complex matrix.
pub fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().fold(0.0f64, |a, z| a.max(z.norm()))
}

const MAX_ORDER_DOUBLINGS: usize = 10;

/// Adaptive spherical quadrature of the kernel: start at order
/// max(16, ⌈1.2·b_max⌉ + 10) with b_max = ω·ℓ/c, double until two
/// successive orders agree to `tol` (relative, max-entry norm).
///
/// ω = 0 short-circuits to the coherent kernel, which is exact there.
pub fn kernel_quadrature(
    geometry: &DipoleGeometry,
    omega: f64,
    c: f64,
    tol: f64,
) -> Result<AngularKernel, KernelError> {
    assert!(omega >= 0.0 && tol >= 1e-13);
    if omega == 0.0 {
        let mut k = kernel_coherent(geometry.len());
        k.omega = 0.0;
        return Ok(k);
    }
    let b_max = omega * geometry.extent() / c;
    let mut order = ((1.2 * b_max).ceil() as usize + 10).max(16);
    let mut prev = kernel_at_order(geometry, omega, c, order);
    let mut achieved = f64::INFINITY;
    for _ in 0..MAX_ORDER_DOUBLINGS {
        order *= 2;
        let next = kernel_at_order(geometry, omega, c, order);
        let scale = max_abs(&next).max(f64::MIN_POSITIVE);
        achieved = max_abs(&(&next - &prev)) / scale;
        if achieved <= tol {
            return Ok(AngularKernel {
                omega,
                matrix: next,
                provenance: Provenance::Quadrature { tol, achieved },
            });
        }
        prev = next;
    }
    Err(KernelError::NoConvergence {
        tol,
        achieved,
        orders: MAX_ORDER_DOUBLINGS,
    })
}
