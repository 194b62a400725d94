//! Rectangular `(Z, site)` samples of a propagated field.

use std::ops::RangeInclusive;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::integrator::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCell {
    pub amplitude: Complex64,
    pub intensity: f64,
    /// Set when the value came from a truncated sum or a contaminated run.
    pub flag: bool,
}

impl GridCell {
    pub fn new(amplitude: Complex64, flag: bool) -> Self {
        GridCell { amplitude, intensity: amplitude.norm_sqr(), flag }
    }
}

/// Cells are stored Z-major: `cells[i * m.len() + j]` is `(z[i], m[j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationGrid {
    pub z: Vec<f64>,
    pub m: Vec<usize>,
    pub cells: Vec<GridCell>,
}

impl PropagationGrid {
    /// Panics if `cells.len() != z.len() * m.len()`.
    pub fn new(z: Vec<f64>, m: Vec<usize>, cells: Vec<GridCell>) -> Self {
        assert_eq!(cells.len(), z.len() * m.len(), "grid dimensions disagree with cell count");
        PropagationGrid { z, m, cells }
    }

    /// Samples a trajectory on `m_range`. Every cell carries `flag`.
    pub fn from_trajectory(traj: &Trajectory, m_range: RangeInclusive<usize>, flag: bool) -> Result<Self> {
        let sites = traj.states.first().map_or(0, |s| s.sites());
        if *m_range.end() >= sites {
            return Err(Error::InvalidConfig(format!(
                "site range ends at {} but the lattice has {sites} sites",
                m_range.end()
            )));
        }
        let m: Vec<usize> = m_range.collect();
        let z = traj.states.iter().map(|s| s.z).collect();
        let cells = traj
            .states
            .iter()
            .flat_map(|s| m.iter().map(move |&j| GridCell::new(s.amplitudes[j], flag)))
            .collect();
        Ok(PropagationGrid { z, m, cells })
    }

    pub fn cell(&self, zi: usize, mi: usize) -> &GridCell {
        &self.cells[zi * self.m.len() + mi]
    }

    pub fn row(&self, zi: usize) -> &[GridCell] {
        let w = self.m.len();
        &self.cells[zi * w..(zi + 1) * w]
    }

    /// `Σₘ Iₘ` at `z[zi]`.
    pub fn row_total(&self, zi: usize) -> f64 {
        self.row(zi).iter().map(|c| c.intensity).sum()
    }

    pub fn any_flagged(&self) -> bool {
        self.cells.iter().any(|c| c.flag)
    }

    pub fn intensities(&self) -> impl Iterator<Item = f64> + '_ {
        self.cells.iter().map(|c| c.intensity)
    }
}
