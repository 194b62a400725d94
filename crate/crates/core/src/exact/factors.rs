use std::f64::consts::PI;

use num_complex::Complex64;

use super::context::SolverContext;

/// The `Z`-dependent quantities of the factorized propagator.
///
/// `g0` is the logarithm `−2 ln[cosh(ΓZ) − i(λ/Γ) sinh(ΓZ)]` continued along
/// the propagation path, not its principal value: `e^{g0/4}` must stay
/// continuous in `Z` through every Bloch period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZFactors {
    pub z: f64,
    pub xi_plus: Complex64,
    pub xi_minus: Complex64,
    pub nu: Complex64,
    pub g0: Complex64,
    pub g1: Complex64,
}

impl ZFactors {
    /// Factors at `Z = 0`, where the propagator is the identity.
    pub fn zero() -> Self {
        let z = Complex64::new(0.0, 0.0);
        ZFactors { z: 0.0, xi_plus: z, xi_minus: z, nu: z, g0: z, g1: z }
    }
}

/// Evaluates the factors at `z` with the context's `Γ`.
pub fn z_factors(z: f64, ctx: &SolverContext) -> ZFactors {
    z_factors_with_gamma(z, ctx, ctx.gamma)
}

/// Same as [`z_factors`] with an explicitly chosen square root `gamma` of
/// `Γ²`. Every formula is even in `Γ`, so either root gives the same result.
pub fn z_factors_with_gamma(z: f64, ctx: &SolverContext, gamma: Complex64) -> ZFactors {
    let p = &ctx.params;
    let (lambda, ap, am, beta) = (p.lambda, p.alpha_plus, p.alpha_minus, p.beta);
    let i = Complex64::new(0.0, 1.0);

    let gz = gamma * z;
    let half = (gz * 0.5).sinh();
    // sinh(ΓZ)/Γ and sinh²(ΓZ/2)/Γ², both even in Γ.
    let s1 = gz.sinh() / gamma;
    let s2 = half * half / (gamma * gamma);
    let ch = gz.cosh();

    let xi_plus = s2 * (2.0 * (lambda * am - 2.0 * beta * ap)) + i * s1 * am;
    let xi_minus = s2 * (2.0 * (lambda * ap - 2.0 * beta * am)) - i * s1 * ap;

    let (zp, zm) = (ctx.zeta_plus, ctx.zeta_minus);
    // ζ⁺ζ⁻[λ + β(ζ⁻/ζ⁺ + ζ⁺/ζ⁻)] with the ratios cleared.
    let nu_coeff = lambda * zp * zm + beta * (zm * zm + zp * zp);
    let nu = Complex64::new(ctx.f_const * z, 0.0) - s1 * nu_coeff;

    let arg = ch - i * s1 * lambda;
    let g0 = -2.0 * continued_log(arg, z, ctx);
    let g1 = i * s1 * (2.0 * beta) / arg;

    ZFactors { z, xi_plus, xi_minus, nu, g0, g1 }
}

/// `ln[cosh(ΓZ) − i(λ/Γ) sinh(ΓZ)]` on the branch continuous from `Z = 0`.
///
/// For `Γ² > 0` the real part of the argument is `cosh ≥ 1` and the principal
/// branch is already continuous. For `Γ² = −ω²` the argument is
/// `cos(ωZ) − i(λ/ω) sin(ωZ)`, an ellipse around the origin traversed once
/// per Bloch period; its winding is added explicitly.
fn continued_log(arg: Complex64, z: f64, ctx: &SolverContext) -> Complex64 {
    if !ctx.is_oscillatory() {
        return arg.ln();
    }
    let omega = (-ctx.gamma_sq).sqrt();
    let ratio = ctx.params.lambda / omega;
    let u = ratio.signum() * omega * z;
    let turns = (u / (2.0 * PI)).round();
    let reduced = u - 2.0 * PI * turns;
    let phase = -((ratio.abs() * reduced.sin()).atan2(reduced.cos()) + 2.0 * PI * turns);
    Complex64::new(arg.norm().ln(), phase)
}

/// Sampled real and imaginary parts of `ξ±(Z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct XiCurves {
    pub z: Vec<f64>,
    pub re_plus: Vec<f64>,
    pub im_plus: Vec<f64>,
    pub re_minus: Vec<f64>,
    pub im_minus: Vec<f64>,
}

impl XiCurves {
    pub fn max_abs_plus(&self) -> f64 {
        self.re_plus.iter().zip(&self.im_plus).map(|(r, i)| r.hypot(*i)).fold(0.0, f64::max)
    }

    pub fn max_abs_minus(&self) -> f64 {
        self.re_minus.iter().zip(&self.im_minus).map(|(r, i)| r.hypot(*i)).fold(0.0, f64::max)
    }
}

pub fn xi_curves(z_grid: &[f64], ctx: &SolverContext) -> XiCurves {
    let mut out = XiCurves {
        z: z_grid.to_vec(),
        re_plus: Vec::with_capacity(z_grid.len()),
        im_plus: Vec::with_capacity(z_grid.len()),
        re_minus: Vec::with_capacity(z_grid.len()),
        im_minus: Vec::with_capacity(z_grid.len()),
    };
    for &z in z_grid {
        let zf = z_factors(z, ctx);
        out.re_plus.push(zf.xi_plus.re);
        out.im_plus.push(zf.xi_plus.im);
        out.re_minus.push(zf.xi_minus.re);
        out.im_minus.push(zf.xi_minus.im);
    }
    out
}
