use bifcurrents::bifurcation::{ddc_mass, read_field, write_field, FieldFile, ScalarField};
use bifcurrents::families::Rect;
use num_complex::Complex64;
use proptest::prelude::*;

const NX: usize = 14;
const NY: usize = 11;

fn grid() -> Rect {
    Rect::new(-1.3, 0.9, -0.7, 1.1)
}

fn field(values: Vec<f64>) -> ScalarField {
    let mut f = ScalarField::from_fn(vec![grid()], vec![NX, NY], |_| Some(0.0));
    f.values = values;
    f
}

fn values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, NX * NY)
}

/// Bound on the magnitude of one cell's stencil sum for inputs bounded by `m`.
fn stencil_scale(m: f64) -> f64 {
    let h = ScalarField::from_fn(vec![grid()], vec![NX, NY], |_| Some(0.0)).spacing();
    h[0] * h[1] / std::f64::consts::TAU * m * (4.0 / (h[0] * h[0]) + 4.0 / (h[1] * h[1]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn ddc_is_linear(u in values(), v in values(), a in -3.0..3.0f64, b in -3.0..3.0f64) {
        let w: Vec<f64> = u.iter().zip(&v).map(|(x, y)| a * x + b * y).collect();
        let (mu, mv, mw) = (ddc_mass(&field(u)).unwrap(), ddc_mass(&field(v)).unwrap(), ddc_mass(&field(w)).unwrap());
        let scale = stencil_scale(10.0 * (a.abs() + b.abs()));
        for k in 0..mw.field.len() {
            let (x, y, z) = (mu.field.values[k], mv.field.values[k], mw.field.values[k]);
            if !z.is_finite() {
                prop_assert!(!x.is_finite() && !y.is_finite());
                continue;
            }
            prop_assert!((z - (a * x + b * y)).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn ddc_of_harmonic_cubics_vanishes(coeffs in prop::array::uniform4((-2.0..2.0f64, -2.0..2.0f64))) {
        // the five-point stencil is exact on harmonic polynomials of degree ≤ 3
        let a: Vec<Complex64> = coeffs.iter().map(|&(re, im)| Complex64::new(re, im)).collect();
        let f = ScalarField::from_fn(vec![grid()], vec![NX, NY], |p| {
            let z = p[0];
            Some((a[0] + z * (a[1] + z * (a[2] + z * a[3]))).re)
        });
        let scale = f.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let m = ddc_mass(&f).unwrap();
        for v in m.field.values.iter().filter(|v| v.is_finite()) {
            prop_assert!(v.abs() < 1e-9 * scale.max(1e-300), "{v} vs scale {scale}");
        }
    }

    #[test]
    fn field_files_round_trip(u in values(), masked in prop::collection::vec(any::<bool>(), NX * NY)) {
        let vals = u.iter().zip(&masked).map(|(x, m)| if *m { f64::NAN } else { *x }).collect();
        let f = field(vals);
        let text = write_field(&FieldFile::Scalar(f.clone()));
        let back = read_field(&text).unwrap();
        for (a, b) in f.values.iter().zip(&back.field().values) {
            prop_assert!(a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()));
        }
    }
}
