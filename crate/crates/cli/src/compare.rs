use serde::Serialize;
use zigzag_core::grid::PropagationGrid;

use crate::config::Metric;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WorstCell {
    pub z: f64,
    pub m: usize,
    pub abs_error: f64,
}

/// Intensity differences between a reference grid `A` and a candidate `B`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CompareReport {
    pub max_abs_error: f64,
    /// `‖I_A − I_B‖₂ / ‖I_A‖₂`.
    pub rel_l2_error: f64,
    pub worst_cell: WorstCell,
    /// `(Z, max_m |I_A − I_B|)` per row.
    pub per_z_max: Vec<(f64, f64)>,
    pub metric: Metric,
    pub threshold: f64,
    pub pass: bool,
}

fn same_axis(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12 * x.abs().max(1.0))
}

pub fn compare_grids(a: &PropagationGrid, b: &PropagationGrid, metric: Metric, threshold: f64) -> Result<CompareReport> {
    if !same_axis(&a.z, &b.z) {
        return Err(CliError::Incompatible(format!("Z grids differ ({} vs {} samples)", a.z.len(), b.z.len())));
    }
    if a.m != b.m {
        return Err(CliError::Incompatible(format!(
            "site ranges differ ({:?}..={:?} vs {:?}..={:?})",
            a.m.first(),
            a.m.last(),
            b.m.first(),
            b.m.last()
        )));
    }
    let mut worst = WorstCell { z: a.z.first().copied().unwrap_or(0.0), m: a.m.first().copied().unwrap_or(0), abs_error: 0.0 };
    let (mut diff_sq, mut ref_sq) = (0.0, 0.0);
    let mut per_z_max = Vec::with_capacity(a.z.len());
    for (i, &z) in a.z.iter().enumerate() {
        let mut row_max = 0.0_f64;
        for (j, &m) in a.m.iter().enumerate() {
            let (ia, ib) = (a.cell(i, j).intensity, b.cell(i, j).intensity);
            let d = (ia - ib).abs();
            diff_sq += d * d;
            ref_sq += ia * ia;
            row_max = row_max.max(d);
            if d > worst.abs_error {
                worst = WorstCell { z, m, abs_error: d };
            }
        }
        per_z_max.push((z, row_max));
    }
    let rel_l2_error = if ref_sq > 0.0 {
        (diff_sq / ref_sq).sqrt()
    } else if diff_sq > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    let value = match metric {
        Metric::RelL2 => rel_l2_error,
        Metric::MaxAbs => worst.abs_error,
    };
    Ok(CompareReport {
        max_abs_error: worst.abs_error,
        rel_l2_error,
        worst_cell: worst,
        per_z_max,
        metric,
        threshold,
        pass: value <= threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use zigzag_core::grid::GridCell;

    fn grid(vals: &[f64]) -> PropagationGrid {
        let cells = vals.iter().map(|&v| GridCell::new(Complex64::new(v, 0.0), false)).collect();
        PropagationGrid::new(vec![0.0, 1.0], vec![4, 5], cells)
    }

    #[test]
    fn self_comparison_is_zero() {
        let g = grid(&[1.0, 0.0, 0.5, 0.5]);
        let r = compare_grids(&g, &g, Metric::RelL2, 0.0).unwrap();
        assert_eq!((r.max_abs_error, r.rel_l2_error), (0.0, 0.0));
        assert!(r.pass);
    }

    #[test]
    fn worst_cell_and_norms() {
        let a = grid(&[1.0, 0.0, 1.0, 1.0]);
        let b = grid(&[1.0, 0.0, 1.0, 2.0f64.sqrt()]);
        let r = compare_grids(&a, &b, Metric::MaxAbs, 0.5).unwrap();
        assert_eq!(r.worst_cell.z, 1.0);
        assert_eq!(r.worst_cell.m, 5);
        assert!((r.max_abs_error - 1.0).abs() < 1e-15);
        assert!((r.rel_l2_error - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(r.per_z_max[0], (0.0, 0.0));
        assert!(!r.pass);
    }

    #[test]
    fn incompatible_grids() {
        let a = grid(&[1.0, 0.0, 1.0, 1.0]);
        let b = PropagationGrid::new(vec![0.0, 2.0], vec![4, 5], a.cells.clone());
        assert!(matches!(compare_grids(&a, &b, Metric::RelL2, 1.0), Err(CliError::Incompatible(_))));
        let c = PropagationGrid::new(vec![0.0, 1.0], vec![3, 4], a.cells.clone());
        assert!(compare_grids(&a, &c, Metric::RelL2, 1.0).is_err());
    }
}
