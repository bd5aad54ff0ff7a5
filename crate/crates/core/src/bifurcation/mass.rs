use num_complex::Complex64;
use rayon::prelude::*;

use super::{BifurcationError, MassField, ScalarField};

/// `dd^c log|λ − a|` has unit mass.
pub const DDC_CONVENTION: &str = "ddc-log-unit";
/// `(dd^c (log|σ₁ − a| + log|σ₂ − b|))²` has unit mass.
pub const MA2_CONVENTION: &str = "ma2-product-log-unit";
/// Factor turning `∫ det(∂²u/∂σ_j∂σ̄_k) dV` into the unit-mass convention above.
pub const MA2_NORMALIZATION: f64 = 4.0 / (std::f64::consts::PI * std::f64::consts::PI);

const MIN_INTERIOR: usize = 8;

/// Cell masses `(h_x h_y / 2π) Δ_h u` from the five-point Laplacian.
/// Boundary cells and cells next to masked ones are masked.
pub fn ddc_mass(field: &ScalarField) -> Result<MassField, BifurcationError> {
    if field.q() != 1 {
        return Err(BifurcationError::WrongDimension { expected: 1, got: field.q() });
    }
    let (nx, ny) = (field.shape[0], field.shape[1]);
    let interior = nx.saturating_sub(2) * ny.saturating_sub(2);
    if interior < MIN_INTERIOR {
        return Err(BifurcationError::InsufficientResolution { needed: MIN_INTERIOR, have: interior });
    }
    let h = field.spacing();
    let (hx, hy) = (h[0], h[1]);
    let scale = hx * hy / std::f64::consts::TAU;
    let u = &field.values;
    let values = (0..nx * ny)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k % nx, k / nx);
            if i == 0 || j == 0 || i == nx - 1 || j == ny - 1 {
                return f64::NAN;
            }
            let c = u[k];
            let lap_x = (u[k - 1] + u[k + 1] - 2.0 * c) / (hx * hx);
            let lap_y = (u[k - nx] + u[k + nx] - 2.0 * c) / (hy * hy);
            scale * (lap_x + lap_y)
        })
        .collect();
    let mut out = ScalarField { values, ..field.clone() };
    out.meta.insert("source".into(), "ddc".into());
    Ok(MassField { field: out, convention: DDC_CONVENTION.into(), clamped_negative: 0.0 })
}

fn gaussian_kernel(radius: f64) -> Vec<f64> {
    if radius <= 0.0 {
        return vec![1.0];
    }
    let half = (3.0 * radius).ceil() as isize;
    (-half..=half).map(|t| (-(t * t) as f64 / (2.0 * radius * radius)).exp()).collect()
}

/// One separable pass along `axis`, renormalized over valid in-range taps.
fn smooth_axis(field: &ScalarField, values: &[f64], axis: usize, kernel: &[f64]) -> Vec<f64> {
    let n = field.shape[axis];
    let stride = field.strides()[axis];
    let half = (kernel.len() / 2) as isize;
    (0..values.len())
        .into_par_iter()
        .map(|k| {
            let i = ((k / stride) % n) as isize;
            let (mut acc, mut wsum) = (0.0, 0.0);
            for (t, w) in kernel.iter().enumerate() {
                let j = i + t as isize - half;
                if j < 0 || j >= n as isize {
                    continue;
                }
                let v = values[(k as isize + (j - i) * stride as isize) as usize];
                if v.is_finite() {
                    acc += w * v;
                    wsum += w;
                }
            }
            if wsum > 0.0 {
                acc / wsum
            } else {
                f64::NAN
            }
        })
        .collect()
}

/// Monge–Ampère mass `c_norm · det(∂²ũ/∂σ_j∂σ̄_k) · h⁴` of the Gaussian
/// smoothing `ũ` of a two-parameter field.
///
/// Cells closer to the boundary than the kernel half-width plus one are
/// masked, since their smoothed values see the truncated grid. Negative
/// determinants are set to zero and their total is kept in
/// `clamped_negative`.
pub fn ma2_mass(field: &ScalarField, smoothing_radius: f64) -> Result<MassField, BifurcationError> {
    if field.q() != 2 {
        return Err(BifurcationError::WrongDimension { expected: 2, got: field.q() });
    }
    let kernel = gaussian_kernel(smoothing_radius);
    let margin = kernel.len() / 2 + 1;
    let interior: usize = field.shape.iter().map(|&n| n.saturating_sub(2 * margin)).product();
    if interior < MIN_INTERIOR {
        return Err(BifurcationError::InsufficientResolution { needed: MIN_INTERIOR, have: interior });
    }
    let mut u = field.values.clone();
    for axis in 0..4 {
        u = smooth_axis(field, &u, axis, &kernel);
    }
    let h = field.spacing();
    let s = field.strides();
    let vol: f64 = h.iter().product();
    let shape = &field.shape;
    let masses: Vec<f64> = (0..u.len())
        .into_par_iter()
        .map(|k| {
            let idx = field.unflat(k);
            if idx.iter().zip(shape).any(|(&i, &n)| i < margin || i + margin >= n) {
                return f64::NAN;
            }
            let at = |moves: &[(usize, isize)]| {
                let off: isize = moves.iter().map(|&(a, d)| d * s[a] as isize).sum();
                u[(k as isize + off) as usize]
            };
            let second = |a: usize| (at(&[(a, 1)]) + at(&[(a, -1)]) - 2.0 * u[k]) / (h[a] * h[a]);
            let mixed = |a: usize, b: usize| {
                (at(&[(a, 1), (b, 1)]) - at(&[(a, 1), (b, -1)]) - at(&[(a, -1), (b, 1)]) + at(&[(a, -1), (b, -1)]))
                    / (4.0 * h[a] * h[b])
            };
            // axes: 0 = Re σ₁, 1 = Im σ₁, 2 = Re σ₂, 3 = Im σ₂
            let h11 = 0.25 * (second(0) + second(1));
            let h22 = 0.25 * (second(2) + second(3));
            let h12 = Complex64::new(0.25 * (mixed(0, 2) + mixed(1, 3)), 0.25 * (mixed(0, 3) - mixed(1, 2)));
            MA2_NORMALIZATION * (h11 * h22 - h12.norm_sqr()) * vol
        })
        .collect();
    let clamped_negative: f64 = masses.iter().filter(|m| **m < 0.0).sum();
    let values = masses.into_iter().map(|m| if m < 0.0 { 0.0 } else { m }).collect();
    let mut out = ScalarField { values, ..field.clone() };
    out.meta.insert("source".into(), "ma2".into());
    out.meta.insert("smoothing_radius".into(), smoothing_radius.to_string());
    out.meta.insert("clamped_negative".into(), format!("{clamped_negative:e}"));
    Ok(MassField { field: out, convention: MA2_CONVENTION.into(), clamped_negative })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::Rect;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn log_has_unit_mass() {
        // even node count keeps 0 off the grid
        let f = ScalarField::from_fn(vec![Rect::new(-1.0, 1.0, -1.0, 1.0)], vec![200, 200], |p| Some(p[0].norm().ln()));
        let m = ddc_mass(&f).unwrap();
        assert!((m.total() - 1.0).abs() < 0.02, "{}", m.total());
    }

    #[test]
    fn harmonic_vanishes() {
        let f = ScalarField::from_fn(vec![Rect::new(-2.0, 1.0, -1.5, 2.5)], vec![40, 50], |p| Some((p[0] * p[0]).re));
        let m = ddc_mass(&f).unwrap();
        let scale = f.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(m.field.values.iter().filter(|v| v.is_finite()).all(|v| v.abs() < 1e-9 * scale));
        assert_eq!(m.field.valid_count(), 38 * 48);
    }

    #[test]
    fn too_small() {
        let f = ScalarField::from_fn(vec![Rect::new(0.0, 1.0, 0.0, 1.0)], vec![4, 5], |_| Some(0.0));
        assert_eq!(ddc_mass(&f), Err(BifurcationError::InsufficientResolution { needed: 8, have: 6 }));
    }

    #[test]
    fn ma2_calibration() {
        let (a, b) = (c(0.13, -0.07), c(-0.21, 0.11));
        let r = Rect::new(-1.0, 1.0, -1.0, 1.0);
        let f = ScalarField::from_fn(vec![r, r], vec![30, 30, 30, 30], |p| {
            Some((p[0] - a).norm().ln() + (p[1] - b).norm().ln())
        });
        let m = ma2_mass(&f, 2.0).unwrap();
        assert!((m.total() - 1.0).abs() < 0.05, "{}", m.total());
        assert_eq!(m.convention, MA2_CONVENTION);
    }

    #[test]
    fn ma2_pluriharmonic() {
        let r = Rect::new(-1.0, 1.0, -1.0, 1.0);
        let f = ScalarField::from_fn(vec![r, r], vec![20, 20, 20, 20], |p| {
            Some((p[0] * p[1] + p[0] * p[0] * c(0.3, 0.5) - p[1]).re)
        });
        let m = ma2_mass(&f, 2.0).unwrap();
        let scale = f.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(m.total() < 1e-6 * scale && m.clamped_negative.abs() < 1e-6 * scale);
    }
}
