//! su(1,1) disentangling in the 2×2 representation, Fock-basis matrix
//! elements of the one-generator exponentials, and dense truncated-space
//! operators used as independent oracles for the closed-form propagator.
//!
//! Generators: `K⁺ = a†²/2`, `K⁻ = a²/2`, `K⁰ = (a†a + 1/2)/2`, with 2×2
//! representation `K⁺ = [[0,1],[0,0]]`, `K⁰ = diag(1/2,−1/2)`,
//! `K⁻ = [[0,0],[−1,0]]`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{build_hamiltonian, DimensionlessParams};
use crate::special::ln_sqrt_factorial_ratio;

pub type Mat2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Threshold below which `e^{−g/2}` is treated as vanishing.
pub const FACTORED_FORM_EPS: f64 = 1e-13;

/// Coefficients of `exp(A₊K⁺ + A₀K⁰ + A₋K⁻)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripleCoefficients {
    pub a_plus: Complex64,
    pub a0: Complex64,
    pub a_minus: Complex64,
}

impl TripleCoefficients {
    pub fn new(a_plus: Complex64, a0: Complex64, a_minus: Complex64) -> Self {
        TripleCoefficients { a_plus, a0, a_minus }
    }

    /// `A = A₀² − 4A₊A₋`.
    pub fn discriminant(&self) -> Complex64 {
        self.a0 * self.a0 - 4.0 * self.a_plus * self.a_minus
    }

    /// The 2×2 generator combination `[[A₀/2, A₊], [−A₋, −A₀/2]]`.
    pub fn generator_2x2(&self) -> Mat2 {
        [[self.a0 * 0.5, self.a_plus], [-self.a_minus, -self.a0 * 0.5]]
    }
}

/// `exp(fK⁺) exp(gK⁰) exp(hK⁻)`. `exp_neg_half_g` carries `e^{−g/2}`
/// directly; `g` is its principal-branch logarithm times −2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactoredForm {
    pub f: Complex64,
    pub g: Complex64,
    pub h: Complex64,
    pub exp_neg_half_g: Complex64,
}

/// `(cosh(√A/2), sinh(√A/2)/√A)` as even functions of `√A`.
///
/// `root_sign` selects the branch of `√A` outside the series region; the
/// result does not depend on it beyond rounding.
fn even_parts(disc: Complex64, root_sign: f64) -> (Complex64, Complex64) {
    let w = disc * 0.25;
    if w.norm() < 1.0 {
        // cosh x = Σ wʲ/(2j)!, sinh x/(2x) = ½ Σ wʲ/(2j+1)! with x² = w.
        let mut ch = ONE;
        let mut sh = ONE;
        let mut term = ONE;
        for j in 1..40 {
            let jj = j as f64;
            term = term * w / ((2.0 * jj - 1.0) * (2.0 * jj));
            ch += term;
            let t_odd = term / (2.0 * jj + 1.0);
            sh += t_odd;
            if t_odd.norm() < 1e-18 * sh.norm() && term.norm() < 1e-18 * ch.norm() {
                break;
            }
        }
        (ch, sh * 0.5)
    } else {
        let root = disc.sqrt() * root_sign;
        let x = root * 0.5;
        (x.cosh(), x.sinh() / root)
    }
}

fn disentangle_with_branch(t: &TripleCoefficients, root_sign: f64) -> Result<FactoredForm> {
    let (ch, sh) = even_parts(t.discriminant(), root_sign);
    let e = ch - t.a0 * sh;
    if !(e.norm() > FACTORED_FORM_EPS) {
        return Err(Error::NoFactoredForm { value: e });
    }
    Ok(FactoredForm {
        f: 2.0 * t.a_plus * sh / e,
        g: -2.0 * e.ln(),
        h: 2.0 * t.a_minus * sh / e,
        exp_neg_half_g: e,
    })
}

/// Solves `exp(A₊K⁺ + A₀K⁰ + A₋K⁻) = exp(fK⁺) exp(gK⁰) exp(hK⁻)`.
pub fn disentangle(t: &TripleCoefficients) -> Result<FactoredForm> {
    disentangle_with_branch(t, 1.0)
}

/// Closed form of `exp(A₊K⁺ + A₀K⁰ + A₋K⁻)` in the 2×2 representation.
pub fn su11_closed_form_2x2(t: &TripleCoefficients) -> Mat2 {
    let (ch, sh) = even_parts(t.discriminant(), 1.0);
    [
        [ch + t.a0 * sh, 2.0 * t.a_plus * sh],
        [-2.0 * t.a_minus * sh, ch - t.a0 * sh],
    ]
}

/// `exp(fK⁺) exp(gK⁰) exp(hK⁻)` multiplied out in the 2×2 representation.
pub fn factored_product_2x2(ff: &FactoredForm) -> Mat2 {
    let ep = (ff.g * 0.5).exp();
    let em = (-ff.g * 0.5).exp();
    [[ep - ff.f * em * ff.h, ff.f * em], [-em * ff.h, em]]
}

pub fn mat2_max_diff(a: &Mat2, b: &Mat2) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..2 {
        for j in 0..2 {
            worst = worst.max((a[i][j] - b[i][j]).norm());
        }
    }
    worst
}

/// `z^j / j!` for `z ≠ 0`, assembled in log form.
fn scaled_power(z: Complex64, j: usize, ln_prefactor: f64) -> Complex64 {
    if j == 0 {
        return Complex64::new(ln_prefactor.exp(), 0.0);
    }
    if z == ZERO {
        return ZERO;
    }
    let ln_fact = crate::special::ln_factorial(j);
    (z.ln() * j as f64 + (ln_prefactor - ln_fact)).exp()
}

/// `⟨m| exp(h K⁻) |n⟩ = sqrt(n!/m!) (h/2)^{(n−m)/2} / ((n−m)/2)!` for
/// `n ≥ m` with `n − m` even, zero otherwise.
pub fn fock_element_kminus(m: usize, n: usize, h: Complex64) -> Complex64 {
    if n < m || (n - m) % 2 == 1 {
        return ZERO;
    }
    scaled_power(h * 0.5, (n - m) / 2, ln_sqrt_factorial_ratio(n, m))
}

/// `⟨m| exp(f K⁺) |n⟩`, the transpose counterpart of [`fock_element_kminus`].
pub fn fock_element_kplus(m: usize, n: usize, f: Complex64) -> Complex64 {
    fock_element_kminus(n, m, f)
}

/// `⟨m| exp(g₁K⁺) exp(g₀K⁰) exp(g₁K⁻) |k⟩` by explicit summation over the
/// intermediate Fock states.
pub fn s_via_elements(m: usize, k: usize, g0: Complex64, g1: Complex64) -> Complex64 {
    if (m + k) % 2 == 1 {
        return ZERO;
    }
    (m % 2..=m.min(k))
        .step_by(2)
        .map(|j| {
            let diag = (g0 * ((j as f64 + 0.5) * 0.5)).exp();
            fock_element_kplus(m, j, g1) * diag * fock_element_kminus(j, k, g1)
        })
        .sum()
}

/// Dense operator on a truncated Fock space of dimension `dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    matrix: DMatrix<Complex64>,
}

impl DenseOperator {
    pub fn from_matrix(matrix: DMatrix<Complex64>) -> Self {
        assert!(matrix.is_square(), "operators are square");
        DenseOperator { matrix }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_matrix(DMatrix::identity(dim, dim))
    }

    /// `a|n⟩ = √n |n−1⟩`.
    pub fn annihilation(dim: usize) -> Self {
        Self::from_matrix(DMatrix::from_fn(dim, dim, |r, c| {
            if c == r + 1 {
                Complex64::new((c as f64).sqrt(), 0.0)
            } else {
                ZERO
            }
        }))
    }

    /// `a†|n⟩ = √(n+1) |n+1⟩`.
    pub fn creation(dim: usize) -> Self {
        Self::from_matrix(Self::annihilation(dim).matrix.transpose())
    }

    pub fn k_plus(dim: usize) -> Self {
        let ad = Self::creation(dim);
        ad.mul(&ad).scale(Complex64::new(0.5, 0.0))
    }

    pub fn k_minus(dim: usize) -> Self {
        let a = Self::annihilation(dim);
        a.mul(&a).scale(Complex64::new(0.5, 0.0))
    }

    pub fn k_zero(dim: usize) -> Self {
        Self::from_matrix(DMatrix::from_fn(dim, dim, |r, c| {
            if r == c {
                Complex64::new((r as f64 + 0.5) * 0.5, 0.0)
            } else {
                ZERO
            }
        }))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.matrix[(m, n)]
    }

    pub fn column(&self, n: usize) -> Vec<Complex64> {
        self.matrix.column(n).iter().copied().collect()
    }

    pub fn mul(&self, other: &DenseOperator) -> DenseOperator {
        Self::from_matrix(&self.matrix * &other.matrix)
    }

    pub fn add(&self, other: &DenseOperator) -> DenseOperator {
        Self::from_matrix(&self.matrix + &other.matrix)
    }

    pub fn scale(&self, s: Complex64) -> DenseOperator {
        Self::from_matrix(&self.matrix * s)
    }

    /// Matrix exponential by scaling and squaring of a Taylor series.
    pub fn exp(&self) -> Result<DenseOperator> {
        expm_taylor(&self.matrix).map(Self::from_matrix)
    }
}

fn norm1(m: &DMatrix<Complex64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

const TAYLOR_MAX_TERMS: usize = 60;

/// `exp(M)`: scale so that `‖M‖₁ / 2^s ≤ 1/2`, sum the Taylor series until
/// the next term drops below unit roundoff relative to the partial sum, then
/// square `s` times.
pub fn expm_taylor(m: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let n = m.nrows();
    let norm = norm1(m);
    if !norm.is_finite() {
        return Err(Error::SeriesDiverged(format!("operator norm is {norm}")));
    }
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    if squarings > 1000 {
        return Err(Error::SeriesDiverged(format!("norm {norm:e} needs {squarings} squarings")));
    }
    let scaled = m * Complex64::new(0.5f64.powi(squarings), 0.0);

    let mut sum = DMatrix::<Complex64>::identity(n, n);
    let mut term = DMatrix::<Complex64>::identity(n, n);
    let mut converged = false;
    for k in 1..=TAYLOR_MAX_TERMS {
        term = (&term * &scaled) * Complex64::new(1.0 / k as f64, 0.0);
        sum += &term;
        if norm1(&term) <= f64::EPSILON * 0.5 * norm1(&sum) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::SeriesDiverged(format!(
            "Taylor series not converged after {TAYLOR_MAX_TERMS} terms (scaled norm {:e})",
            norm1(&scaled)
        )));
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    if sum.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::SeriesDiverged("result overflowed".into()));
    }
    Ok(sum)
}

/// Brute-force 2×2 exponential of the generator matrix.
pub fn expm_2x2(t: &TripleCoefficients) -> Result<Mat2> {
    let g = t.generator_2x2();
    let m = DMatrix::from_fn(2, 2, |r, c| g[r][c]);
    let e = expm_taylor(&m)?;
    Ok([[e[(0, 0)], e[(0, 1)]], [e[(1, 0)], e[(1, 1)]]])
}

pub const ORACLE_MIN_DIM: usize = 20;
pub const ORACLE_MAX_DIM: usize = 320;

/// `exp(−iHZ)` on a `dim`-site truncation.
pub fn dense_oracle(params: &DimensionlessParams, dim: usize, z: f64) -> Result<DenseOperator> {
    if dim < ORACLE_MIN_DIM {
        return Err(Error::LatticeTooSmall { got: dim, min: ORACLE_MIN_DIM });
    }
    let h = build_hamiltonian(params, dim)?.to_dense();
    let gen = h * Complex64::new(0.0, -z);
    expm_taylor(&gen).map(DenseOperator::from_matrix)
}

/// One column of the dense propagator, with the truncation grown until the
/// column is clean at the far edge.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleColumn {
    pub amplitudes: Vec<Complex64>,
    pub dim: usize,
    /// The top entries were still above tolerance at [`ORACLE_MAX_DIM`].
    pub contaminated: bool,
}

/// Column `n` of `exp(−iHZ)`, starting at `dim` and doubling (up to 320)
/// while any of the ten highest-index entries exceeds `1e−10` of the column
/// maximum.
pub fn dense_column(params: &DimensionlessParams, dim: usize, z: f64, n: usize) -> Result<OracleColumn> {
    let mut d = dim.max(ORACLE_MIN_DIM);
    loop {
        if n >= d {
            return Err(Error::InvalidParameter {
                name: "site",
                reason: format!("input site {n} outside oracle dimension {d}"),
            });
        }
        let col = dense_oracle(params, d, z)?.column(n);
        let peak = col.iter().map(|a| a.norm()).fold(0.0, f64::max);
        let edge = col[d - 10..].iter().map(|a| a.norm()).fold(0.0, f64::max);
        let clean = edge <= 1e-10 * peak;
        if clean || d * 2 > ORACLE_MAX_DIM {
            return Ok(OracleColumn { amplitudes: col, dim: d, contaminated: !clean });
        }
        d *= 2;
    }
}
