//! Pauli-string Hamiltonians on N spin-1/2 sites: parsing, dense
//! construction, diagonalization, and dipole matrix elements between
//! eigenstates.
//!
//! A Hamiltonian is a sum of weighted Pauli products,
//!
//!   H = Σ_k c_k · σ^{h1}_{i1} σ^{h2}_{i2} …,   c_k ∈ ℝ,
//!
//! with identity on unlisted sites. Site indices are 1-based in the text
//! format and throughout the public API.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

/// Single-site Pauli axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn letter(self) -> char {
        match self {
            Axis::X => 'X',
            Axis::Y => 'Y',
            Axis::Z => 'Z',
        }
    }
}

/// One weighted Pauli product. An empty factor list is the identity term.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliString {
    pub coefficient: f64,
    /// (site, axis) pairs, sites 1-based and distinct.
    pub factors: Vec<(usize, Axis)>,
}

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("line {line}, token {token}: malformed token '{text}'")]
    Malformed {
        line: usize,
        token: usize,
        text: String,
    },
    #[error("line {line}, token {token}: duplicate site {site}")]
    DuplicateSite {
        line: usize,
        token: usize,
        site: usize,
    },
    #[error("line {line}, token {token}: site {site} out of range 1..={n}")]
    SiteOutOfRange {
        line: usize,
        token: usize,
        site: usize,
        n: usize,
    },
    #[error("line {line}: missing coefficient")]
    Empty { line: usize },
}

impl PauliString {
    /// Parse one line of the text format: `<real> (<axis><site>)*`,
    /// axis ∈ {X,Y,Z} (case-insensitive), site ∈ 1..=n.
    pub fn parse(text: &str, n: usize, line: usize) -> Result<Self, ParseError> {
        let mut tokens = text.split_whitespace().enumerate();
        let (_, coeff_tok) = tokens.next().ok_or(ParseError::Empty { line })?;
        let coefficient: f64 = coeff_tok.parse().map_err(|_| ParseError::Malformed {
            line,
            token: 1,
            text: coeff_tok.to_string(),
        })?;
        let mut factors: Vec<(usize, Axis)> = Vec::new();
        for (idx, tok) in tokens {
            let token = idx + 1;
            let mut chars = tok.chars();
            let axis = match chars.next().map(|c| c.to_ascii_uppercase()) {
                Some('X') => Axis::X,
                Some('Y') => Axis::Y,
                Some('Z') => Axis::Z,
                _ => {
                    return Err(ParseError::Malformed {
                        line,
                        token,
                        text: tok.to_string(),
                    })
                }
            };
            let site: usize = chars.as_str().parse().map_err(|_| ParseError::Malformed {
                line,
                token,
                text: tok.to_string(),
            })?;
            if site == 0 || site > n {
                return Err(ParseError::SiteOutOfRange {
                    line,
                    token,
                    site,
                    n,
                });
            }
            if factors.iter().any(|&(s, _)| s == site) {
                return Err(ParseError::DuplicateSite { line, token, site });
            }
            factors.push((site, axis));
        }
        Ok(PauliString {
            coefficient,
            factors,
        })
    }

    /// Serialize back to the text format; `parse` round-trips it.
    pub fn to_line(&self) -> String {
        let mut s = format!("{}", self.coefficient);
        for &(site, axis) in &self.factors {
            s.push(' ');
            s.push(axis.letter());
            s.push_str(&site.to_string());
        }
        s
    }
}

/// Parse a whole Hamiltonian file: one string per line, `#` comments and
/// blank lines ignored.
pub fn parse_hamiltonian(text: &str, n: usize) -> Result<Vec<PauliString>, ParseError> {
    let mut terms = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        terms.push(PauliString::parse(line, n, idx + 1)?);
    }
    Ok(terms)
}

#[derive(Debug, Error)]
pub enum HamiltonianError {
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("n = {n} exceeds the dense-storage budget (max {max})")]
    TooLarge { n: usize, max: usize },
    #[error("eigensolver did not converge (residual {residual:.3e})")]
    NoConvergence { residual: f64 },
}

/// Largest site count accepted by the dense builder (M = 2^12 = 4096).
pub const MAX_SITES: usize = 12;

/// Dense 2^n × 2^n Hermitian matrix for a list of Pauli strings.
///
/// Basis convention: computational-basis index s has bit (site-1) equal to
/// 0 for σ^z = +1 and 1 for σ^z = −1.
pub fn build_hamiltonian(
    terms: &[PauliString],
    n: usize,
) -> Result<DMatrix<Complex64>, HamiltonianError> {
    assert!(n >= 1);
    if n > MAX_SITES {
        return Err(HamiltonianError::TooLarge { n, max: MAX_SITES });
    }
    let dim = 1usize << n;
    let mut h = DMatrix::<Complex64>::zeros(dim, dim);
    for term in terms {
        for s in 0..dim {
            // apply the product to basis state |s>
            let mut target = s;
            let mut amp = Complex64::new(term.coefficient, 0.0);
            for &(site, axis) in &term.factors {
                let bit = site - 1;
                let set = (target >> bit) & 1 == 1;
                match axis {
                    Axis::X => target ^= 1 << bit,
                    Axis::Y => {
                        // σ^y |0> = i|1>, σ^y |1> = -i|0>
                        amp *= if set { -Complex64::i() } else { Complex64::i() };
                        target ^= 1 << bit;
                    }
                    Axis::Z => {
                        if set {
                            amp = -amp;
                        }
                    }
                }
            }
            h[(target, s)] += amp;
        }
    }
    Ok(h)
}

/// Ascending eigenvalues, phase-fixed eigenvectors, and degenerate-manifold
/// labels of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// Column m is the eigenvector of eigenvalue m.
    pub eigenvectors: DMatrix<Complex64>,
    pub degeneracy_tol: f64,
    /// manifold[m] is the index of the degenerate manifold containing m;
    /// labels are contiguous starting at 0, ascending with energy.
    pub manifolds: Vec<usize>,
}

impl Spectrum {
    pub fn dimension(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn num_manifolds(&self) -> usize {
        self.manifolds.last().map_or(0, |&m| m + 1)
    }

    /// |E_n - E_m| treated as exactly zero inside a manifold.
    pub fn gap(&self, n: usize, m: usize) -> f64 {
        if self.manifolds[n] == self.manifolds[m] {
            0.0
        } else {
            (self.eigenvalues[n] - self.eigenvalues[m]).abs()
        }
    }
}

/// Relative factor applied to the spectral range when no explicit
/// degeneracy tolerance is supplied.
pub const DEFAULT_DEGENERACY_REL_TOL: f64 = 1e-9;

/// Diagonalize a Hermitian matrix. Pass `None` to use the default
/// degeneracy tolerance of 1e-9 × spectral range.
pub fn diagonalize(
    h: &DMatrix<Complex64>,
    degeneracy_tol: Option<f64>,
) -> Result<Spectrum, HamiltonianError> {
    let dim = h.nrows();
    assert_eq!(dim, h.ncols());
    let eig = h.clone().symmetric_eigen();

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());

    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut eigenvectors = DMatrix::<Complex64>::zeros(dim, dim);
    for (m, &k) in order.iter().enumerate() {
        let mut col: DVector<Complex64> = eig.eigenvectors.column(k).into_owned();
        fix_phase(&mut col);
        eigenvectors.set_column(m, &col);
    }

    // residual check: ||H v - E v|| <= 1e-10 ||H||
    let h_norm = h.norm();
    let mut worst = 0.0f64;
    for (m, &e) in eigenvalues.iter().enumerate() {
        let v = eigenvectors.column(m);
        let r = (h * v) - v * Complex64::new(e, 0.0);
        worst = worst.max(r.norm());
    }
    if worst > 1e-10 * h_norm.max(1.0) {
        return Err(HamiltonianError::NoConvergence { residual: worst });
    }

    let range = eigenvalues[dim - 1] - eigenvalues[0];
    let tol = degeneracy_tol.unwrap_or(DEFAULT_DEGENERACY_REL_TOL * range.max(f64::MIN_POSITIVE));

    let mut manifolds = vec![0usize; dim];
    for m in 1..dim {
        manifolds[m] = if eigenvalues[m] - eigenvalues[m - 1] <= tol {
            manifolds[m - 1]
        } else {
            manifolds[m - 1] + 1
        };
    }

    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
        degeneracy_tol: tol,
        manifolds,
    })
}

/// Make the largest-modulus entry real positive so eigenvectors are
/// reproducible across runs and orderings.
fn fix_phase(v: &mut DVector<Complex64>) {
    let mut best = 0usize;
    let mut best_norm = 0.0f64;
    for (k, z) in v.iter().enumerate() {
        let n = z.norm_sqr();
        if n > best_norm + 1e-30 {
            best_norm = n;
            best = k;
        }
    }
    let z = v[best];
    if z.norm() > 0.0 {
        let phase = z / z.norm();
        for e in v.iter_mut() {
            *e /= phase;
        }
    }
}

/// Matrix elements T[n,m] = <E_n| σ_i^h |E_m> for one site and axis.
#[derive(Debug, Clone)]
pub struct DipoleElements {
    pub site: usize,
    pub axis: Axis,
    pub matrix: DMatrix<Complex64>,
}

/// T = V† (σ_i^h V), computed by applying the Pauli operator to each
/// eigenvector in the computational basis.
pub fn dipole_matrix_elements(spectrum: &Spectrum, site: usize, axis: Axis) -> DipoleElements {
    let dim = spectrum.dimension();
    let bit = site - 1;
    assert!(1 << bit < dim || dim == 1, "site out of range");
    let v = &spectrum.eigenvectors;
    let mut sigma_v = DMatrix::<Complex64>::zeros(dim, dim);
    for m in 0..dim {
        for s in 0..dim {
            let set = (s >> bit) & 1 == 1;
            let amp = v[(s, m)];
            match axis {
                Axis::X => sigma_v[(s ^ (1 << bit), m)] += amp,
                Axis::Y => {
                    let f = if set { -Complex64::i() } else { Complex64::i() };
                    sigma_v[(s ^ (1 << bit), m)] += f * amp;
                }
                Axis::Z => sigma_v[(s, m)] += if set { -amp } else { amp },
            }
        }
    }
    let matrix = v.adjoint() * sigma_v;
    DipoleElements { site, axis, matrix }
}
