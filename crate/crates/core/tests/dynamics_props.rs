use bifcurrents::corpus::random_map;
use bifcurrents::families::{per_locus, Family, PerConfig, Rect};
use bifcurrents::greenfn::green;
use bifcurrents::lyapunov::closed_form;
use bifcurrents::maps::{all_cycles_dividing, CycleConfig, Mobius};
use bifcurrents::sampling::{sample_mu_f, MeasureKind, MeasureSampler};
use bifcurrents::P1Point;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn complex(r: f64) -> impl Strategy<Value = Complex64> {
    (-r..r, -r..r).prop_map(|(re, im)| Complex64::new(re, im))
}

fn mobius() -> impl Strategy<Value = Mobius> {
    prop::array::uniform4(complex(1.5))
        .prop_map(|[a, b, c, d]| Mobius([[a, b], [c, d]]))
        // |det| / ‖φ‖² bounds the condition number of φ
        .prop_filter("well conditioned", |m| {
            m.det().norm() > 0.2 * m.0.iter().flatten().map(|c| c.norm_sqr()).sum::<f64>()
        })
}

fn map(seed: u64, d: usize) -> bifcurrents::maps::RationalMap {
    random_map(d, &mut ChaCha8Rng::seed_from_u64(seed))
}

const TOL: f64 = 1e-12;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn green_functional_equation(seed in any::<u64>(), d in 2usize..5, z0 in complex(3.0), z1 in complex(3.0)) {
        prop_assume!(z0.norm() + z1.norm() > 1e-3);
        let f = map(seed, d);
        let g = green(&f, &[z0, z1], TOL).unwrap().value;
        let fz = f.eval_lift([z0, z1]);
        let gf = green(&f, &fz, TOL).unwrap().value;
        prop_assert!((gf - d as f64 * g).abs() <= (d + 1) as f64 * TOL + 1e-13 * g.abs());
    }

    #[test]
    fn green_is_log_homogeneous(seed in any::<u64>(), z0 in complex(2.0), z1 in complex(2.0), t in complex(4.0)) {
        prop_assume!(z0.norm() + z1.norm() > 1e-3 && t.norm() > 1e-2);
        let f = map(seed, 2);
        let g = green(&f, &[z0, z1], TOL).unwrap().value;
        let gt = green(&f, &[t * z0, t * z1], TOL).unwrap().value;
        prop_assert!((gt - g - t.norm().ln()).abs() <= 2.0 * TOL + 1e-13 * g.abs());
    }

    #[test]
    fn lyapunov_is_conjugation_invariant(seed in any::<u64>(), d in 2usize..4, phi in mobius()) {
        let f = map(seed, d);
        let g = f.conjugate(&phi).unwrap();
        let (a, b) = (closed_form(&f, TOL).unwrap().value, closed_form(&g, TOL).unwrap().value);
        prop_assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }

    #[test]
    fn critical_points_move_by_the_inverse(seed in any::<u64>(), phi in mobius()) {
        let f = map(seed, 3);
        let g = f.conjugate(&phi).unwrap();
        let inv = phi.adjugate();
        let pts = |h: &bifcurrents::maps::RationalMap| -> Vec<P1Point> {
            h.critical_points().vectors.iter().map(|v| P1Point::from_homogeneous(v[0], v[1])).collect()
        };
        let expected: Vec<P1Point> = pts(&f).iter().map(|p| inv.apply(p)).collect();
        for p in pts(&g) {
            let best = expected.iter().map(|q| q.chordal_distance(&p)).fold(f64::INFINITY, f64::min);
            prop_assert!(best < 1e-7, "unmatched critical point at distance {best}");
        }
    }

    #[test]
    fn samplers_are_reproducible(seed in any::<u64>(), stream in any::<u64>()) {
        let f = map(seed, 2);
        prop_assert_eq!(sample_mu_f(&f, 300, stream).unwrap(), sample_mu_f(&f, 300, stream).unwrap());
        let fs = MeasureSampler::new(MeasureKind::FubiniStudy, stream);
        prop_assert_eq!(fs.points(300).unwrap(), fs.points(300).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn iterate_has_d_pow_n_plus_one_fixed_points(seed in any::<u64>(), d in 2usize..4, n in 1usize..4) {
        let f = map(seed, d);
        let count: usize = all_cycles_dividing(&f, n, false, &CycleConfig::default())
            .unwrap()
            .iter()
            .map(|c| c.points.len() * c.multiplicity)
            .sum();
        prop_assert_eq!(count, d.pow(n as u32) + 1);
    }

    #[test]
    fn per_locus_is_periodic_in_theta(theta in 0.0..1.0f64, n in 1usize..3) {
        let cfg = PerConfig { grid: 30, ..PerConfig::default() };
        let b = Rect::new(-2.5, 1.5, -2.0, 2.0);
        let eta = |t: f64| Complex64::from_polar(1.0, std::f64::consts::TAU * t);
        let a = per_locus(&Family::Quadratic, n, eta(theta), b, &cfg).unwrap();
        let c = per_locus(&Family::Quadratic, n, eta(theta + 1.0), b, &cfg).unwrap();
        prop_assert_eq!(a.solutions.len(), c.solutions.len());
        for s in &a.solutions {
            prop_assert!(c.solutions.iter().any(|t| (t.lambda - s.lambda).norm() < 1e-9));
        }
    }
}
