//! Adaptive Runge–Kutta–Fehlberg 4(5) integration of the truncated
//! coupled-mode system.
//!
//! Steps are clipped so that every requested sample distance is hit exactly;
//! no interpolation is ever performed. The fifth-order solution is carried
//! forward and the embedded fourth-order solution only feeds the error
//! estimate.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{DimensionlessParams, MIN_SITES};

/// Field amplitudes on a truncated lattice at one propagation distance.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeState {
    pub z: f64,
    pub amplitudes: Vec<Complex64>,
}

impl LatticeState {
    /// Unit excitation of site `site` at `Z = 0`.
    pub fn single_site(sites: usize, site: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); sites];
        amplitudes[site] = Complex64::new(1.0, 0.0);
        LatticeState { z: 0.0, amplitudes }
    }

    pub fn sites(&self) -> usize {
        self.amplitudes.len()
    }

    /// `Σ |Ψₘ|²`.
    pub fn total_intensity(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn intensities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }
}

/// Precomputed stencil weights for the right-hand side, `O(N)` per call.
#[derive(Debug, Clone)]
struct Stencil {
    diag: Vec<f64>,
    lower1: Vec<f64>,
    upper1: Vec<f64>,
    lower2: Vec<f64>,
    upper2: Vec<f64>,
}

impl Stencil {
    fn new(params: &DimensionlessParams, sites: usize) -> Self {
        let x = |n: usize| n as f64;
        Stencil {
            diag: (0..sites).map(|n| params.lambda * x(n)).collect(),
            lower1: (0..sites).map(|n| params.alpha_minus * x(n).sqrt()).collect(),
            upper1: (0..sites).map(|n| params.alpha_plus * x(n + 1).sqrt()).collect(),
            lower2: (0..sites)
                .map(|n| if n >= 2 { params.beta * (x(n) * x(n - 1)).sqrt() } else { 0.0 })
                .collect(),
            upper2: (0..sites).map(|n| params.beta * (x(n + 1) * x(n + 2)).sqrt()).collect(),
        }
    }

    fn eval(&self, psi: &[Complex64], out: &mut [Complex64]) {
        let n = psi.len();
        let i = Complex64::new(0.0, 1.0);
        for m in 0..n {
            let mut acc = psi[m] * self.diag[m];
            if m >= 1 {
                acc += psi[m - 1] * self.lower1[m];
            }
            if m >= 2 {
                acc += psi[m - 2] * self.lower2[m];
            }
            if m + 1 < n {
                acc += psi[m + 1] * self.upper1[m];
            }
            if m + 2 < n {
                acc += psi[m + 2] * self.upper2[m];
            }
            out[m] = i * acc;
        }
    }
}

/// `dΨₙ/dZ = i[λnΨₙ + α⁻√n Ψₙ₋₁ + α⁺√(n+1) Ψₙ₊₁ + β(√(n(n−1))Ψₙ₋₂ + √((n+1)(n+2))Ψₙ₊₂)]`
/// with amplitudes outside `0..N` treated as zero.
pub fn rhs(state: &LatticeState, params: &DimensionlessParams) -> Vec<Complex64> {
    let n = state.sites();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    Stencil::new(params, n).eval(&state.amplitudes, &mut out);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    pub h0: f64,
    pub hmax: f64,
    pub safety: f64,
    /// Sample distances; strictly increasing and starting at 0.
    pub z_grid: Vec<f64>,
}

impl IntegratorConfig {
    pub const DEFAULT_RTOL: f64 = 1e-10;
    pub const DEFAULT_ATOL: f64 = 1e-12;

    /// Default tolerances on a uniform grid of `samples` points over `[0, z_max]`.
    pub fn uniform(z_max: f64, samples: usize) -> Self {
        IntegratorConfig {
            rtol: Self::DEFAULT_RTOL,
            atol: Self::DEFAULT_ATOL,
            h0: 1e-3,
            hmax: 0.25,
            safety: 0.9,
            z_grid: uniform_grid(z_max, samples),
        }
    }

    pub fn with_tolerances(mut self, rtol: f64, atol: f64) -> Self {
        self.rtol = rtol;
        self.atol = atol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return bad(format!("rtol and atol must be positive (rtol={}, atol={})", self.rtol, self.atol));
        }
        if !(self.h0 > 0.0 && self.hmax > 0.0) {
            return bad("h0 and hmax must be positive".into());
        }
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return bad(format!("safety factor must lie in (0, 1], got {}", self.safety));
        }
        match self.z_grid.first() {
            None => return bad("z grid is empty".into()),
            Some(&z0) if z0 != 0.0 => return bad(format!("z grid must start at 0, got {z0}")),
            _ => {}
        }
        if self.z_grid.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return bad("z grid must be strictly increasing and finite".into());
        }
        Ok(())
    }
}

/// `samples` evenly spaced points on `[0, z_max]`, endpoints included.
pub fn uniform_grid(z_max: f64, samples: usize) -> Vec<f64> {
    match samples {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => {
            let last = (samples - 1) as f64;
            (0..samples)
                .map(|k| if k + 1 == samples { z_max } else { z_max * k as f64 / last })
                .collect()
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IntegratorStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub params: DimensionlessParams,
    pub states: Vec<LatticeState>,
    pub stats: IntegratorStats,
}

// Fehlberg 4(5) tableau. The system is autonomous, so the nodes c_i are unused.
const A21: f64 = 1.0 / 4.0;
const A31: f64 = 3.0 / 32.0;
const A32: f64 = 9.0 / 32.0;
const A41: f64 = 1932.0 / 2197.0;
const A42: f64 = -7200.0 / 2197.0;
const A43: f64 = 7296.0 / 2197.0;
const A51: f64 = 439.0 / 216.0;
const A52: f64 = -8.0;
const A53: f64 = 3680.0 / 513.0;
const A54: f64 = -845.0 / 4104.0;
const A61: f64 = -8.0 / 27.0;
const A62: f64 = 2.0;
const A63: f64 = -3544.0 / 2565.0;
const A64: f64 = 1859.0 / 4104.0;
const A65: f64 = -11.0 / 40.0;

// fifth order
const B1: f64 = 16.0 / 135.0;
const B3: f64 = 6656.0 / 12825.0;
const B4: f64 = 28561.0 / 56430.0;
const B5: f64 = -9.0 / 50.0;
const B6: f64 = 2.0 / 55.0;

// fifth minus fourth order
const E1: f64 = B1 - 25.0 / 216.0;
const E3: f64 = B3 - 1408.0 / 2565.0;
const E4: f64 = B4 - 2197.0 / 4104.0;
const E5: f64 = B5 + 1.0 / 5.0;
const E6: f64 = B6;

const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

struct Workspace {
    k: [Vec<Complex64>; 6],
    tmp: Vec<Complex64>,
    y5: Vec<Complex64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        let zero = || vec![Complex64::new(0.0, 0.0); n];
        Workspace { k: [zero(), zero(), zero(), zero(), zero(), zero()], tmp: zero(), y5: zero() }
    }
}

/// One trial step of size `h`. Leaves the fifth-order candidate in `ws.y5`
/// and returns the scaled error norm (accept when `<= 1`).
fn trial_step(
    stencil: &Stencil,
    y: &[Complex64],
    h: f64,
    rtol: f64,
    atol: f64,
    ws: &mut Workspace,
) -> f64 {
    let n = y.len();
    let Workspace { k, tmp, y5 } = ws;

    stencil.eval(y, &mut k[0]);

    for i in 0..n {
        tmp[i] = y[i] + k[0][i] * (h * A21);
    }
    stencil.eval(tmp, &mut k[1]);

    for i in 0..n {
        tmp[i] = y[i] + (k[0][i] * A31 + k[1][i] * A32) * h;
    }
    stencil.eval(tmp, &mut k[2]);

    for i in 0..n {
        tmp[i] = y[i] + (k[0][i] * A41 + k[1][i] * A42 + k[2][i] * A43) * h;
    }
    stencil.eval(tmp, &mut k[3]);

    for i in 0..n {
        tmp[i] = y[i] + (k[0][i] * A51 + k[1][i] * A52 + k[2][i] * A53 + k[3][i] * A54) * h;
    }
    stencil.eval(tmp, &mut k[4]);

    for i in 0..n {
        tmp[i] = y[i]
            + (k[0][i] * A61 + k[1][i] * A62 + k[2][i] * A63 + k[3][i] * A64 + k[4][i] * A65) * h;
    }
    stencil.eval(tmp, &mut k[5]);

    let mut err = 0.0_f64;
    for i in 0..n {
        y5[i] = y[i] + (k[0][i] * B1 + k[2][i] * B3 + k[3][i] * B4 + k[4][i] * B5 + k[5][i] * B6) * h;
        let e = (k[0][i] * E1 + k[2][i] * E3 + k[3][i] * E4 + k[4][i] * E5 + k[5][i] * E6) * h;
        let scale = atol + rtol * y[i].norm().max(y5[i].norm());
        err = err.max(e.norm() / scale);
    }
    err
}

/// Integrates from `initial` (which must sit at `Z = 0`) and samples at every
/// point of `cfg.z_grid`.
pub fn integrate(
    initial: &LatticeState,
    params: &DimensionlessParams,
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    let n = initial.sites();
    if n < MIN_SITES {
        return Err(Error::LatticeTooSmall { got: n, min: MIN_SITES });
    }
    if initial.z != cfg.z_grid[0] {
        return Err(Error::InvalidConfig(format!(
            "initial state sits at Z={}, grid starts at {}",
            initial.z, cfg.z_grid[0]
        )));
    }
    if initial.amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
        return Err(Error::NonFinite { z: initial.z });
    }

    let stencil = Stencil::new(params, n);
    let mut ws = Workspace::new(n);
    let mut stats = IntegratorStats::default();
    let mut states = Vec::with_capacity(cfg.z_grid.len());
    states.push(initial.clone());

    let mut y = initial.amplitudes.clone();
    let mut z = 0.0_f64;
    let mut h = cfg.h0.min(cfg.hmax);

    for &target in &cfg.z_grid[1..] {
        while z < target {
            let remaining = target - z;
            let landing = h >= remaining;
            let step = if landing { remaining } else { h };
            let h_min = 1e-14 * z.abs().max(1.0);
            if step < h_min && !landing {
                return Err(Error::StepUnderflow { z, h: step });
            }

            let err = trial_step(&stencil, &y, step, cfg.rtol, cfg.atol, &mut ws);
            stats.rhs_evals += 6;
            if !err.is_finite() {
                return Err(Error::NonFinite { z });
            }

            let factor = if err == 0.0 {
                MAX_FACTOR
            } else {
                (cfg.safety * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
            };

            if err <= 1.0 {
                stats.accepted += 1;
                std::mem::swap(&mut y, &mut ws.y5);
                z = if landing { target } else { z + step };
                // A clipped landing step says nothing about the natural step size.
                if !landing || factor < 1.0 {
                    h = (step * factor).min(cfg.hmax);
                }
                if y.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
                    return Err(Error::NonFinite { z });
                }
            } else {
                stats.rejected += 1;
                h = step * factor;
                if h < h_min {
                    return Err(Error::StepUnderflow { z, h });
                }
            }
        }
        states.push(LatticeState { z: target, amplitudes: y.clone() });
    }

    Ok(Trajectory { params: *params, states, stats })
}

/// Outcome of [`edge_monitor`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeReport {
    pub flagged: bool,
    pub worst_ratio: f64,
    pub worst_z: f64,
}

pub const DEFAULT_EDGE_THRESHOLD: f64 = 1e-8;

/// Largest ratio `(|Ψ_{N−1}|² + |Ψ_{N−2}|²) / maxₘ |Ψₘ|²` over the samples.
/// Flags the trajectory when it exceeds `threshold`.
pub fn edge_monitor(traj: &Trajectory, threshold: f64) -> EdgeReport {
    let mut worst = EdgeReport { flagged: false, worst_ratio: 0.0, worst_z: 0.0 };
    for s in &traj.states {
        let n = s.sites();
        if n < 2 {
            continue;
        }
        let peak = s.amplitudes.iter().map(|a| a.norm_sqr()).fold(0.0, f64::max);
        if peak == 0.0 {
            continue;
        }
        let ratio = (s.amplitudes[n - 1].norm_sqr() + s.amplitudes[n - 2].norm_sqr()) / peak;
        if ratio > worst.worst_ratio {
            worst.worst_ratio = ratio;
            worst.worst_z = s.z;
        }
    }
    worst.flagged = worst.worst_ratio > threshold;
    worst
}
