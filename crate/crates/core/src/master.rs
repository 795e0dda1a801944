//! Classical Pauli master equation over eigenstate populations:
//! generator construction, fixed-step evolution, stationary states, the
//! Gibbs target, and the detailed-balance diagnostic.

use crate::pauli::Spectrum;
use crate::rates::{PhysicalConstants, RateMatrix, RateVariant};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// dp/dt = G p with G[n,m] = K[n,m] for n ≠ m and
/// G[m,m] = −Σ_{n≠m} K[n,m]; columns sum to zero.
#[derive(Debug, Clone)]
pub struct Generator {
    pub matrix: DMatrix<f64>,
}

#[derive(Debug, Error)]
pub enum MasterError {
    #[error("dt = {dt} violates the stability guard dt <= {max_dt} (0.1/max|G_mm|)")]
    StabilityGuard { dt: f64, max_dt: f64 },
    #[error("stationary solve residual {residual:.3e} exceeds tolerance")]
    SingularSolve { residual: f64 },
}

/// Build the generator from a rate matrix. Strict relaxation toward Gibbs
/// needs the WithSpontaneous variant; a stimulated-only input is accepted
/// but flagged by `detailed_balance_check`.
pub fn build_generator(rates: &RateMatrix) -> Generator {
    let dim = rates.dimension();
    let mut g = rates.rates.clone();
    for m in 0..dim {
        g[(m, m)] = 0.0;
        let loss: f64 = (0..dim)
            .filter(|&n| n != m)
            .map(|n| rates.rates[(n, m)])
            .sum();
        g[(m, m)] = -loss;
    }
    Generator { matrix: g }
}

impl Generator {
    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    /// Largest admissible step for the explicit integrator.
    pub fn max_stable_dt(&self) -> f64 {
        let max_diag = (0..self.dimension())
            .map(|m| self.matrix[(m, m)].abs())
            .fold(0.0f64, f64::max);
        if max_diag == 0.0 {
            f64::INFINITY
        } else {
            0.1 / max_diag
        }
    }
}

/// Population snapshot along a trajectory.
#[derive(Debug, Clone)]
pub struct TrajectoryPoint {
    pub time: f64,
    pub populations: DVector<f64>,
}

fn renormalize(p: &mut DVector<f64>) {
    for e in p.iter_mut() {
        if *e < 0.0 {
            debug_assert!(*e > -1e-12, "population {e} below clip tolerance");
            *e = 0.0;
        }
    }
    let total: f64 = p.iter().sum();
    if total > 0.0 {
        *p /= total;
    }
}

/// Fixed-step 4th-order explicit integration of dp/dt = G p, with each
/// step renormalized. The initial state is clipped and normalized too.
pub fn evolve(
    generator: &Generator,
    p0: &DVector<f64>,
    t_final: f64,
    dt: f64,
) -> Result<Vec<TrajectoryPoint>, MasterError> {
    let max_dt = generator.max_stable_dt();
    if dt > max_dt {
        return Err(MasterError::StabilityGuard { dt, max_dt });
    }
    let g = &generator.matrix;
    let mut p = p0.clone();
    renormalize(&mut p);
    let mut out = vec![TrajectoryPoint {
        time: 0.0,
        populations: p.clone(),
    }];
    let steps = (t_final / dt).ceil() as usize;
    let mut t = 0.0;
    for _ in 0..steps {
        let step = dt.min(t_final - t);
        let k1 = g * &p;
        let k2 = g * &(&p + &k1 * (step / 2.0));
        let k3 = g * &(&p + &k2 * (step / 2.0));
        let k4 = g * &(&p + &k3 * step);
        p += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (step / 6.0);
        renormalize(&mut p);
        t += step;
        out.push(TrajectoryPoint {
            time: t,
            populations: p.clone(),
        });
        if t >= t_final {
            break;
        }
    }
    Ok(out)
}

/// Outcome of the stationary-state solve.
#[derive(Debug, Clone)]
pub enum Stationary {
    /// Single communicating class; the unique normalized null vector.
    Irreducible(DVector<f64>),
    /// One stationary vector per closed communicating class, with the
    /// member state indices of each class.
    Reducible(Vec<(Vec<usize>, DVector<f64>)>),
}

impl Stationary {
    /// The stationary distribution when the generator is irreducible.
    pub fn unwrap_irreducible(self) -> DVector<f64> {
        match self {
            Stationary::Irreducible(p) => p,
            Stationary::Reducible(_) => panic!("generator is reducible"),
        }
    }
}

/// Strongly connected components of the digraph m -> n where G[n,m] > 0,
/// by iterative Tarjan.
fn communicating_classes(g: &DMatrix<f64>) -> Vec<Vec<usize>> {
    let dim = g.nrows();
    let adj: Vec<Vec<usize>> = (0..dim)
        .map(|m| (0..dim).filter(|&n| n != m && g[(n, m)] > 0.0).collect())
        .collect();
    let mut index = vec![usize::MAX; dim];
    let mut low = vec![0usize; dim];
    let mut on_stack = vec![false; dim];
    let mut stack: Vec<usize> = Vec::new();
    let mut next_index = 0usize;
    let mut components: Vec<Vec<usize>> = Vec::new();
    // explicit DFS stack: (node, child iterator position)
    for start in 0..dim {
        if index[start] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(start, 0)];
        while let Some(&mut (v, ref mut ci)) = call.last_mut() {
            if *ci == 0 {
                index[v] = next_index;
                low[v] = next_index;
                next_index += 1;
                stack.push(v);
                on_stack[v] = true;
            }
            if *ci < adj[v].len() {
                let w = adj[v][*ci];
                *ci += 1;
                if index[w] == usize::MAX {
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&mut (parent, _)) = call.last_mut() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    while let Some(w) = stack.pop() {
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    components.push(comp);
                }
            }
        }
    }
    components
}

/// Solve G p = 0 on one class by replacing the last balance equation with
/// the normalization Σp = 1.
fn stationary_on(g: &DMatrix<f64>, class: &[usize]) -> Result<DVector<f64>, MasterError> {
    let k = class.len();
    if k == 1 {
        return Ok(DVector::from_element(1, 1.0));
    }
    let mut a = DMatrix::<f64>::zeros(k, k);
    for (r, &n) in class.iter().enumerate() {
        for (c, &m) in class.iter().enumerate() {
            a[(r, c)] = g[(n, m)];
        }
    }
    // restrict diagonal to intra-class losses so columns sum to zero
    for c in 0..k {
        a[(c, c)] = 0.0;
        let loss: f64 = (0..k).filter(|&r| r != c).map(|r| a[(r, c)]).sum();
        a[(c, c)] = -loss;
    }
    let mut sys = a.clone();
    for c in 0..k {
        sys[(k - 1, c)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(k);
    rhs[k - 1] = 1.0;
    let p = sys
        .lu()
        .solve(&rhs)
        .ok_or(MasterError::SingularSolve { residual: f64::NAN })?;
    let residual = (&a * &p).norm();
    let scale = a.norm().max(1.0);
    if residual > 1e-10 * scale {
        return Err(MasterError::SingularSolve { residual });
    }
    Ok(p)
}

/// Stationary distribution(s) of the generator. A reducible generator
/// (dark states, disconnected manifolds) returns one vector per closed
/// class instead of failing.
pub fn stationary(generator: &Generator) -> Result<Stationary, MasterError> {
    let g = &generator.matrix;
    let classes = communicating_classes(g);
    if classes.len() == 1 {
        return Ok(Stationary::Irreducible(stationary_on(g, &classes[0])?));
    }
    // closed classes: no probability flow out of the class
    let mut per_class = Vec::new();
    for class in &classes {
        let closed = class.iter().all(|&m| {
            (0..g.nrows())
                .filter(|n| !class.contains(n))
                .all(|n| g[(n, m)] <= 0.0)
        });
        if closed {
            per_class.push((class.clone(), stationary_on(g, class)?));
        }
    }
    Ok(Stationary::Reducible(per_class))
}

/// Gibbs distribution p_m ∝ e^{−E_m/k_BT}, max-shifted for overflow safety.
pub fn gibbs(spectrum: &Spectrum, temperature: f64, constants: &PhysicalConstants) -> DVector<f64> {
    assert!(temperature > 0.0);
    let beta = 1.0 / (constants.k_b * temperature);
    let e_min = spectrum.eigenvalues[0];
    let mut p = DVector::<f64>::from_iterator(
        spectrum.dimension(),
        spectrum
            .eigenvalues
            .iter()
            .map(|&e| (-(e - e_min) * beta).exp()),
    );
    let total: f64 = p.iter().sum();
    p /= total;
    p
}

/// One pair in the detailed-balance report.
#[derive(Debug, Clone, serde::Serialize)]
pub struct BalancePair {
    pub upper: usize,
    pub lower: usize,
    pub ratio: f64,
    pub expected: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct BalanceReport {
    pub pairs: Vec<BalancePair>,
    pub worst_relative_error: f64,
    /// Set for stimulated-only inputs, where emission/absorption ratios
    /// are 1 and no relaxation to Gibbs is expected.
    pub warning: Option<String>,
}

/// Check K_emit/K_absorb = e^{ħω/k_BT} for every connected pair.
/// Zero-gap pairs are skipped (their rates are identically zero).
pub fn detailed_balance_check(
    rates: &RateMatrix,
    spectrum: &Spectrum,
    temperature: f64,
    constants: &PhysicalConstants,
) -> BalanceReport {
    let dim = spectrum.dimension();
    let mut pairs = Vec::new();
    let mut worst = 0.0f64;
    for m in 0..dim {
        for n in (m + 1)..dim {
            let gap = spectrum.gap(n, m);
            if gap == 0.0 {
                continue;
            }
            let absorb = rates.rates[(n, m)]; // m -> n, upward
            let emit = rates.rates[(m, n)]; // n -> m, downward
            if absorb == 0.0 && emit == 0.0 {
                continue;
            }
            let ratio = emit / absorb;
            let expected = match rates.variant {
                RateVariant::WithSpontaneous => (gap / (constants.k_b * temperature)).exp(),
                RateVariant::Stimulated => 1.0,
            };
            let relative_error = (ratio - expected).abs() / expected;
            worst = worst.max(relative_error);
            pairs.push(BalancePair {
                upper: n,
                lower: m,
                ratio,
                expected,
                relative_error,
            });
        }
    }
    let warning = match rates.variant {
        RateVariant::Stimulated => {
            Some("stimulated-only rates: no thermalization to Gibbs expected".to_string())
        }
        RateVariant::WithSpontaneous => None,
    };
    BalanceReport {
        pairs,
        worst_relative_error: worst,
        warning,
    }
}

/// KL divergence Σ p ln(p/q), for the relative-entropy monotonicity check.
pub fn kl_divergence(p: &DVector<f64>, q: &DVector<f64>) -> f64 {
    p.iter()
        .zip(q.iter())
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &qi)| pi * (pi / qi).ln())
        .sum()
}
