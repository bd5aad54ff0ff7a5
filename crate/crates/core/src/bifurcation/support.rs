use num_complex::Complex64;
use serde::Serialize;

use super::{BifurcationError, MassField};

/// Two-sided overlap between high-mass cells and a point set.
///
/// JSON fields, all plain numbers: `quantile`, `radius_cells`, `threshold`
/// (mass at the quantile), `n_points`, `n_off_grid` (points outside the box,
/// excluded from both fractions), `n_high_cells`, `points_in_high`
/// (fraction of on-grid points with a high cell within the radius) and
/// `high_near_points` (fraction of high cells within the radius of a point).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupportReport {
    pub quantile: f64,
    pub radius_cells: usize,
    pub threshold: f64,
    pub n_points: usize,
    pub n_off_grid: usize,
    pub n_high_cells: usize,
    pub points_in_high: f64,
    pub high_near_points: f64,
}

/// Compares the cells above the `quantile` of mass with `points` on a
/// one-parameter mass field, matching within `radius_cells` grid steps.
pub fn support_compare(
    mass: &MassField,
    points: &[Complex64],
    quantile: f64,
    radius_cells: usize,
) -> Result<SupportReport, BifurcationError> {
    let f = &mass.field;
    if f.q() != 1 {
        return Err(BifurcationError::WrongDimension { expected: 1, got: f.q() });
    }
    if points.is_empty() {
        return Err(BifurcationError::EmptyInput);
    }
    let mut sorted: Vec<f64> = f.values.iter().copied().filter(|v| v.is_finite()).collect();
    if sorted.is_empty() {
        return Err(BifurcationError::EmptyInput);
    }
    sorted.sort_by(f64::total_cmp);
    let q = quantile.clamp(0.0, 1.0);
    let threshold = sorted[((q * (sorted.len() - 1) as f64).floor() as usize).min(sorted.len() - 1)];
    let high: Vec<bool> = f.values.iter().map(|v| v.is_finite() && *v >= threshold).collect();
    let (nx, ny) = (f.shape[0] as isize, f.shape[1] as isize);
    let r = radius_cells as isize;
    let mut near = vec![false; f.len()];
    let mut on_grid = 0usize;
    let mut hits = 0usize;
    for p in points {
        let Some(c) = f.nearest(&[*p]) else { continue };
        on_grid += 1;
        let mut hit = false;
        for dj in -r..=r {
            for di in -r..=r {
                let (i, j) = (c[0] as isize + di, c[1] as isize + dj);
                if di * di + dj * dj > r * r || i < 0 || j < 0 || i >= nx || j >= ny {
                    continue;
                }
                let k = (i + nx * j) as usize;
                near[k] = true;
                hit |= high[k];
            }
        }
        hits += hit as usize;
    }
    let n_high = high.iter().filter(|h| **h).count();
    let high_near = high.iter().zip(&near).filter(|(h, n)| **h && **n).count();
    Ok(SupportReport {
        quantile: q,
        radius_cells,
        threshold,
        n_points: points.len(),
        n_off_grid: points.len() - on_grid,
        n_high_cells: n_high,
        points_in_high: if on_grid > 0 { hits as f64 / on_grid as f64 } else { 0.0 },
        high_near_points: if n_high > 0 { high_near as f64 / n_high as f64 } else { 0.0 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bifurcation::{ScalarField, DDC_CONVENTION};
    use crate::families::Rect;

    fn ring() -> MassField {
        // mass concentrated on the unit circle
        let field = ScalarField::from_fn(vec![Rect::new(-2.0, 2.0, -2.0, 2.0)], vec![81, 81], |p| {
            Some(if (p[0].norm() - 1.0).abs() < 0.03 { 1.0 } else { 0.0 })
        });
        MassField { field, convention: DDC_CONVENTION.into(), clamped_negative: 0.0 }
    }

    #[test]
    fn circle_points_match() {
        let m = ring();
        let pts: Vec<Complex64> = (0..40).map(|k| Complex64::from_polar(1.0, k as f64 * 0.157)).collect();
        let rep = support_compare(&m, &pts, 0.99, 2).unwrap();
        assert_eq!(rep.points_in_high, 1.0);
        assert!(rep.high_near_points > 0.9);
        let off = support_compare(&m, &[Complex64::new(0.0, 0.0), Complex64::new(9.0, 0.0)], 0.99, 2).unwrap();
        assert_eq!((off.points_in_high, off.n_off_grid), (0.0, 1));
    }

    #[test]
    fn empty_input() {
        assert_eq!(support_compare(&ring(), &[], 0.99, 3), Err(BifurcationError::EmptyInput));
    }
}
