//! Closed-form propagator of the zigzag lattice.

mod amplitude;
mod context;
mod factors;
mod laguerre;

pub use amplitude::{
    amplitude, amplitude_with_factors, d_element, intensity_map, propagate, s_element, AmplitudeResult, Propagated,
    TruncationPolicy,
};
pub use context::{SolverContext, EPS_GAMMA};
pub use factors::{xi_curves, z_factors, z_factors_with_gamma, XiCurves, ZFactors};
pub use laguerre::laguerre;
