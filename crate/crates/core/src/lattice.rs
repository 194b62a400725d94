//! Lattice model: physical and dimensionless parameters, coupling
//! coefficients, the truncated Hamiltonian and the Bloch period.
//!
//! Field evolution is written as `i dΨ/dZ = H Ψ` with
//! `H = -[λ a†a + α⁻ a† + α⁺ a + β (a†² + a²)]`, so the numerical right-hand
//! side and the operator picture share one matrix.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Smallest lattice the pentadiagonal stencil fits in.
pub const MIN_SITES: usize = 5;

/// Default truncation, matching the largest fabricated arrays.
pub const DEFAULT_SITES: usize = 60;

/// Unit tag for rate-like inputs (couplings, index gradient).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateUnit {
    PerCm,
    PerMm,
}

impl RateUnit {
    fn to_per_cm(self, value: f64) -> f64 {
        match self {
            RateUnit::PerCm => value,
            RateUnit::PerMm => value * 10.0,
        }
    }
}

/// A rate together with the unit it was supplied in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rate {
    pub value: f64,
    pub unit: RateUnit,
}

impl Rate {
    pub fn per_cm(value: f64) -> Self {
        Rate { value, unit: RateUnit::PerCm }
    }

    pub fn per_mm(value: f64) -> Self {
        Rate { value, unit: RateUnit::PerMm }
    }

    /// Value in the canonical unit, 1/cm.
    pub fn in_per_cm(&self) -> f64 {
        self.unit.to_per_cm(self.value)
    }
}

/// Dimensional description of the waveguide array.
///
/// Distances `d1`, `d2` and `kappa` are in µm; they only enter through the
/// ratio `(d - d_ref)/kappa`, so any common length unit works.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalParams {
    pub coupling: Rate,
    pub gradient: Rate,
    /// Base propagation constant. Only contributes the global phase `e^{iμz}`.
    pub mu: Rate,
    pub d1: f64,
    pub d2: f64,
    pub kappa: f64,
    pub alpha_plus: f64,
    pub alpha_minus: f64,
    pub beta: f64,
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let c = self.coupling.in_per_cm();
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidParameter {
                name: "C",
                reason: format!("reference coupling must be positive, got {c}"),
            });
        }
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return Err(Error::InvalidParameter {
                name: "kappa",
                reason: format!("decay length must be positive, got {}", self.kappa),
            });
        }
        for (name, v) in [
            ("alpha0", self.gradient.value),
            ("mu", self.mu.value),
            ("d1", self.d1),
            ("d2", self.d2),
            ("alpha_plus", self.alpha_plus),
            ("alpha_minus", self.alpha_minus),
            ("beta", self.beta),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter { name, reason: "must be finite".into() });
            }
        }
        Ok(())
    }

    /// Global phase factor `e^{iμz}` relating `ℰₙ(z)` to `Ψₙ(Z)`, with `z` in cm.
    pub fn global_phase(&self, z_cm: f64) -> Complex64 {
        Complex64::from_polar(1.0, self.mu.in_per_cm() * z_cm)
    }
}

/// Which nearest-neighbour hopping a first-order coupling refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Minus,
    Plus,
}

/// The four real constants of the dimensionless coupled-mode equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionlessParams {
    pub lambda: f64,
    pub alpha_plus: f64,
    pub alpha_minus: f64,
    pub beta: f64,
}

impl DimensionlessParams {
    pub fn new(lambda: f64, alpha_plus: f64, alpha_minus: f64, beta: f64) -> Result<Self> {
        for (name, v) in [
            ("lambda", lambda),
            ("alpha_plus", alpha_plus),
            ("alpha_minus", alpha_minus),
            ("beta", beta),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter { name, reason: format!("must be finite, got {v}") });
            }
        }
        Ok(DimensionlessParams { lambda, alpha_plus, alpha_minus, beta })
    }

    /// `4β² − λ²`.
    pub fn gamma_sq(&self) -> f64 {
        4.0 * self.beta * self.beta - self.lambda * self.lambda
    }

    pub fn is_hermitian(&self) -> bool {
        self.alpha_plus == self.alpha_minus
    }
}

/// Converts to dimensionless form. Returns the parameters and the scale
/// `C` (1/cm) such that `Z = C z`.
pub fn nondimensionalize(p: &PhysicalParams) -> Result<(DimensionlessParams, f64)> {
    p.validate()?;
    let c = p.coupling.in_per_cm();
    let lambda = p.gradient.in_per_cm() / c;
    let params = DimensionlessParams::new(lambda, p.alpha_plus, p.alpha_minus, p.beta)?;
    Ok((params, c))
}

/// Nearest-neighbour coupling `C_n^{(1,∓)}` in 1/cm, evaluated through the
/// waveguide separation `d_n = d1 − (κ/2) ln n`. Zero for `n = 0`.
pub fn coupling_first(n: usize, side: Side, p: &PhysicalParams) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let amp = match side {
        Side::Minus => p.alpha_minus,
        Side::Plus => p.alpha_plus,
    };
    let d_n = p.d1 - 0.5 * p.kappa * (n as f64).ln();
    amp * p.coupling.in_per_cm() * (-(d_n - p.d1) / p.kappa).exp()
}

/// Next-nearest-neighbour coupling `C_n^{(2)}` in 1/cm via
/// `d_n = d2 − (κ/2) ln[n(n−1)]`. Zero for `n < 2`.
pub fn coupling_second(n: usize, p: &PhysicalParams) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let nn = n as f64;
    let d_n = p.d2 - 0.5 * p.kappa * (nn * (nn - 1.0)).ln();
    p.beta * p.coupling.in_per_cm() * (-(d_n - p.d2) / p.kappa).exp()
}

/// Bloch period `2π / sqrt(λ² − 4β²)`.
pub fn bloch_period(lambda: f64, beta: f64) -> Result<f64> {
    let disc = lambda * lambda - 4.0 * beta * beta;
    if !(disc > 0.0) {
        return Err(Error::NoOscillatoryRegime { lambda, beta });
    }
    Ok(2.0 * PI / disc.sqrt())
}

/// Banded (bandwidth 2) truncation of the lattice Hamiltonian to `N` sites.
///
/// Row `m`, offset `d` (`-2..=2`) is stored at `bands[m][d + 2]` and holds
/// `H[m, m + d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedHamiltonian {
    sites: usize,
    bands: Vec<[f64; 5]>,
}

impl TruncatedHamiltonian {
    pub fn sites(&self) -> usize {
        self.sites
    }

    /// `H[m, n]`; zero outside the band.
    pub fn get(&self, m: usize, n: usize) -> f64 {
        let d = n as isize - m as isize;
        if d.abs() > 2 || m >= self.sites || n >= self.sites {
            return 0.0;
        }
        self.bands[m][(d + 2) as usize]
    }

    /// Banded matrix-vector product `H ψ`.
    pub fn apply(&self, psi: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(psi.len(), self.sites, "state length must match the lattice");
        let n = self.sites;
        (0..n)
            .map(|m| {
                let row = &self.bands[m];
                let lo = m.saturating_sub(2);
                let hi = (m + 2).min(n - 1);
                (lo..=hi)
                    .map(|j| psi[j] * row[j + 2 - m])
                    .sum::<Complex64>()
            })
            .collect()
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.sites, self.sites, |m, n| Complex64::new(self.get(m, n), 0.0))
    }

    /// The entries are real, so Hermitian means symmetric.
    pub fn is_hermitian(&self) -> bool {
        (0..self.sites).all(|m| (m..self.sites.min(m + 3)).all(|n| self.get(m, n) == self.get(n, m)))
    }
}

pub fn build_hamiltonian(params: &DimensionlessParams, sites: usize) -> Result<TruncatedHamiltonian> {
    if sites < MIN_SITES {
        return Err(Error::LatticeTooSmall { got: sites, min: MIN_SITES });
    }
    let DimensionlessParams { lambda, alpha_plus, alpha_minus, beta } = *params;
    let bands = (0..sites)
        .map(|m| {
            let x = m as f64;
            let mut row = [0.0; 5];
            if m >= 2 {
                row[0] = -beta * (x * (x - 1.0)).sqrt();
            }
            if m >= 1 {
                row[1] = -alpha_minus * x.sqrt();
            }
            row[2] = -lambda * x;
            if m + 1 < sites {
                row[3] = -alpha_plus * (x + 1.0).sqrt();
            }
            if m + 2 < sites {
                row[4] = -beta * ((x + 1.0) * (x + 2.0)).sqrt();
            }
            row
        })
        .collect();
    Ok(TruncatedHamiltonian { sites, bands })
}
