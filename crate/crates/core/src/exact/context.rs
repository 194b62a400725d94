use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::DimensionlessParams;

/// `|4β² − λ²|` at or below this rejects exact-solver construction.
pub const EPS_GAMMA: f64 = 1e-9;

/// Constants of the closed-form propagator that do not depend on `Z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverContext {
    pub params: DimensionlessParams,
    /// `Γ² = 4β² − λ²`.
    pub gamma_sq: f64,
    /// Principal square root of `Γ²`.
    pub gamma: Complex64,
    pub zeta_plus: f64,
    pub zeta_minus: f64,
    /// Constant shift `f` of the transformed (Hermitian) generator.
    pub f_const: f64,
}

impl SolverContext {
    pub fn new(params: &DimensionlessParams) -> Result<Self> {
        let DimensionlessParams { lambda, alpha_plus, alpha_minus, beta } = *params;
        let gamma_sq = params.gamma_sq();
        if !(gamma_sq.abs() > EPS_GAMMA) {
            return Err(Error::DegenerateGamma { gamma_sq_abs: gamma_sq.abs(), eps: EPS_GAMMA });
        }
        let zeta_minus = (2.0 * beta * alpha_plus - lambda * alpha_minus) / gamma_sq;
        let zeta_plus = (2.0 * beta * alpha_minus - lambda * alpha_plus) / gamma_sq;
        // α⁺α⁻[λ − β(α⁻/α⁺ + α⁺/α⁻)] with the ratios cleared.
        let cleared = alpha_plus * alpha_minus * lambda
            - beta * (alpha_minus * alpha_minus + alpha_plus * alpha_plus);
        let f_const = 0.5 * lambda - cleared / gamma_sq;
        Ok(SolverContext {
            params: *params,
            gamma_sq,
            gamma: Complex64::new(gamma_sq, 0.0).sqrt(),
            zeta_plus,
            zeta_minus,
            f_const,
        })
    }

    /// Residuals of the two conditions that remove the linear terms:
    /// `ζ⁻λ + 2βζ⁺ − α⁻` and `ζ⁺λ + 2βζ⁻ − α⁺`.
    pub fn linear_term_residuals(&self) -> (f64, f64) {
        let p = &self.params;
        (
            self.zeta_minus * p.lambda + 2.0 * p.beta * self.zeta_plus - p.alpha_minus,
            self.zeta_plus * p.lambda + 2.0 * p.beta * self.zeta_minus - p.alpha_plus,
        )
    }

    /// `Γ² < 0`: trigonometric (Bloch-oscillating) rather than hyperbolic.
    pub fn is_oscillatory(&self) -> bool {
        self.gamma_sq < 0.0
    }
}
