use std::ops::RangeInclusive;

use num_complex::Complex64;
use rayon::prelude::*;

use super::context::SolverContext;
use super::factors::{z_factors, ZFactors};
use super::laguerre::laguerre;
use crate::error::{Error, Result};
use crate::grid::{GridCell, PropagationGrid};
use crate::integrator::LatticeState;
use crate::special::ln_factorial;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Stopping rule for the infinite sum over intermediate Fock states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationPolicy {
    /// A term counts as negligible when `|term| / max(1, |partial sum|)` is
    /// below this.
    pub tail_tol: f64,
    /// Number of successive negligible terms that ends the sum.
    pub consecutive_below: usize,
    /// Hard cap on the summation index.
    pub k_max: usize,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy { tail_tol: 1e-14, consecutive_below: 4, k_max: 400 }
    }
}

impl TruncationPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.tail_tol > 0.0) {
            return Err(Error::InvalidPolicy(format!("tail tolerance must be positive, got {}", self.tail_tol)));
        }
        if self.consecutive_below == 0 {
            return Err(Error::InvalidPolicy("consecutive-below count must be at least 1".into()));
        }
        Ok(())
    }

    fn check_sites(&self, n: usize, m: usize) -> Result<()> {
        self.validate()?;
        let need = n.max(m) + 20;
        if self.k_max < need {
            return Err(Error::InvalidPolicy(format!(
                "k_max={} too small for sites n={n}, m={m} (needs at least {need})",
                self.k_max
            )));
        }
        Ok(())
    }
}

/// Logarithms of the factor powers, computed once per `Z`.
#[derive(Debug, Clone, Copy)]
struct FactorLogs {
    g0: Complex64,
    ln_half_g1: Option<Complex64>,
    ln_xi_plus: Option<Complex64>,
    ln_neg_xi_minus: Option<Complex64>,
    xi_product: Complex64,
}

fn ln_nonzero(z: Complex64) -> Option<Complex64> {
    (z != ZERO).then(|| z.ln())
}

impl FactorLogs {
    fn new(zf: &ZFactors) -> Self {
        FactorLogs {
            g0: zf.g0,
            ln_half_g1: ln_nonzero(zf.g1 * 0.5),
            ln_xi_plus: ln_nonzero(zf.xi_plus),
            ln_neg_xi_minus: ln_nonzero(-zf.xi_minus),
            xi_product: zf.xi_plus * zf.xi_minus,
        }
    }

    fn s_element(&self, m: usize, k: usize) -> Complex64 {
        if (m + k) % 2 == 1 {
            return ZERO;
        }
        let base = 0.5 * (ln_factorial(m) + ln_factorial(k));
        let mut sum = ZERO;
        // p runs over the common parity of m and k; the power of g₁ is
        // (m + k)/2 − p, which never goes negative.
        for p in (m % 2..=m.min(k)).step_by(2) {
            let power = (m + k) / 2 - p;
            let g1_part = match (power, self.ln_half_g1) {
                (0, _) => ZERO,
                (_, Some(l)) => l * power as f64,
                (_, None) => continue,
            };
            let ln_mag = base - ln_factorial(p) - ln_factorial((m - p) / 2) - ln_factorial((k - p) / 2);
            let exponent = self.g0 * (0.25 + 0.5 * p as f64) + g1_part + ln_mag;
            sum += exponent.exp();
        }
        sum
    }

    fn d_element(&self, k: usize, n: usize) -> Complex64 {
        let x = self.xi_product;
        let (lo, hi, ln_base) = if k >= n { (n, k, self.ln_xi_plus) } else { (k, n, self.ln_neg_xi_minus) };
        let power = hi - lo;
        let base_part = match (power, ln_base) {
            (0, _) => ZERO,
            (_, Some(l)) => l * power as f64,
            (_, None) => return ZERO,
        };
        let ln_ratio = 0.5 * (ln_factorial(lo) - ln_factorial(hi));
        (base_part - x * 0.5 + ln_ratio).exp() * laguerre(lo, power, x)
    }
}

/// `𝒮_{m,k}(Z)`: Fock-basis element of `e^{g₁K⁺} e^{g₀K⁰} e^{g₁K⁻}`.
pub fn s_element(m: usize, k: usize, zf: &ZFactors) -> Complex64 {
    FactorLogs::new(zf).s_element(m, k)
}

/// `𝔇_{k,n}(Z)`: Fock-basis element of `e^{−ξ⁺ξ⁻/2} e^{ξ⁺a†} e^{−ξ⁻a}`.
pub fn d_element(k: usize, n: usize, zf: &ZFactors) -> Complex64 {
    FactorLogs::new(zf).d_element(k, n)
}

/// One closed-form amplitude with its summation diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeResult {
    pub value: Complex64,
    /// Number of intermediate states summed.
    pub terms: usize,
    /// The sum hit `k_max` before the tail criterion was met.
    pub truncated: bool,
}

/// Per-`Z` evaluator for a fixed input site, reusing the `𝔇_{k,n}` column
/// across output sites.
struct SliceEvaluator {
    logs: FactorLogs,
    phase: Complex64,
    d_column: Vec<Complex64>,
    n: usize,
    policy: TruncationPolicy,
}

impl SliceEvaluator {
    fn new(n: usize, zf: &ZFactors, policy: TruncationPolicy) -> Self {
        let logs = FactorLogs::new(zf);
        let d_column = (0..=policy.k_max).map(|k| logs.d_element(k, n)).collect();
        SliceEvaluator { logs, phase: (-Complex64::new(0.0, 1.0) * zf.nu).exp(), d_column, n, policy }
    }

    fn amplitude(&self, m: usize) -> AmplitudeResult {
        let TruncationPolicy { tail_tol, consecutive_below, k_max } = self.policy;
        // Early terms can be negligible while the dominant ones lie ahead;
        // the tail test only starts once both sites are passed.
        let floor = m.max(self.n);
        let mut sum = ZERO;
        let mut below = 0;
        let mut terms = 0;
        let mut prev_mag = f64::INFINITY;
        for k in (m % 2..=k_max).step_by(2) {
            let term = self.logs.s_element(m, k) * self.d_column[k];
            sum += term;
            terms += 1;
            if k >= floor {
                let mag = term.norm();
                if mag < tail_tol * sum.norm().max(1.0) && mag <= prev_mag {
                    below += 1;
                    if below >= consecutive_below {
                        return AmplitudeResult { value: self.phase * sum, terms, truncated: false };
                    }
                } else {
                    below = 0;
                }
                prev_mag = mag;
            }
        }
        AmplitudeResult { value: self.phase * sum, terms, truncated: true }
    }
}

/// `Ψ^{(n)}_m(Z)`: amplitude at site `m` for unit excitation of site `n`.
pub fn amplitude(
    n: usize,
    m: usize,
    z: f64,
    ctx: &SolverContext,
    policy: &TruncationPolicy,
) -> Result<AmplitudeResult> {
    policy.check_sites(n, m)?;
    amplitude_with_factors(n, m, &z_factors(z, ctx), policy)
}

/// [`amplitude`] from precomputed factors.
pub fn amplitude_with_factors(n: usize, m: usize, zf: &ZFactors, policy: &TruncationPolicy) -> Result<AmplitudeResult> {
    policy.check_sites(n, m)?;
    Ok(SliceEvaluator::new(n, zf, *policy).amplitude(m))
}

/// Output of [`propagate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Propagated {
    pub state: LatticeState,
    pub truncated: bool,
}

/// Evolves an arbitrary initial superposition `Σ cₙ |n⟩` to distance `z` and
/// returns the amplitudes on sites `0..sites`.
pub fn propagate(
    initial: &[Complex64],
    sites: usize,
    z: f64,
    ctx: &SolverContext,
    policy: &TruncationPolicy,
) -> Result<Propagated> {
    let zf = z_factors(z, ctx);
    let mut amplitudes = vec![ZERO; sites];
    let mut truncated = false;
    for (n, &c) in initial.iter().enumerate() {
        if c == ZERO {
            continue;
        }
        policy.check_sites(n, sites.saturating_sub(1))?;
        let eval = SliceEvaluator::new(n, &zf, *policy);
        for (m, out) in amplitudes.iter_mut().enumerate() {
            let r = eval.amplitude(m);
            truncated |= r.truncated;
            *out += c * r.value;
        }
    }
    Ok(Propagated { state: LatticeState { z, amplitudes }, truncated })
}

/// Intensity map `|Ψ^{(n)}_m(Z)|²` over `z_grid × m_range`. Rows are
/// evaluated in parallel.
pub fn intensity_map(
    n: usize,
    z_grid: &[f64],
    m_range: RangeInclusive<usize>,
    ctx: &SolverContext,
    policy: &TruncationPolicy,
) -> Result<PropagationGrid> {
    policy.check_sites(n, *m_range.end())?;
    let ms: Vec<usize> = m_range.collect();
    let rows: Vec<Vec<GridCell>> = z_grid
        .par_iter()
        .map(|&z| {
            let eval = SliceEvaluator::new(n, &z_factors(z, ctx), *policy);
            ms.iter()
                .map(|&m| {
                    let r = eval.amplitude(m);
                    GridCell::new(r.value, r.truncated)
                })
                .collect()
        })
        .collect();
    Ok(PropagationGrid::new(z_grid.to_vec(), ms, rows.into_iter().flatten().collect()))
}
