//! Fixed test maps: ten named examples and twenty seeded random maps of
//! degree two and three.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::algebra::BinaryForm;
use crate::families::quadratic;
use crate::maps::RationalMap;

#[derive(Debug, Clone)]
pub struct CorpusMap {
    pub name: String,
    pub map: RationalMap,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn affine(name: &str, num: &[Complex64], den: &[Complex64]) -> CorpusMap {
    CorpusMap { name: name.into(), map: RationalMap::from_affine(num, den).expect("corpus map is nondegenerate") }
}

pub fn named_maps() -> Vec<CorpusMap> {
    let z = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    vec![
        CorpusMap { name: "power2".into(), map: RationalMap::power(2) },
        CorpusMap { name: "power3".into(), map: RationalMap::power(3) },
        CorpusMap { name: "basilica".into(), map: quadratic(c(-1.0, 0.0)) },
        CorpusMap { name: "chebyshev".into(), map: quadratic(c(-2.0, 0.0)) },
        CorpusMap { name: "dendrite".into(), map: quadratic(c(0.0, 1.0)) },
        CorpusMap { name: "rabbit".into(), map: quadratic(c(-0.122_561_166_876_654, 0.744_861_766_619_744)) },
        CorpusMap { name: "escaping".into(), map: quadratic(c(0.5, 0.6)) },
        // z(z − 2)/(1 − 2z): all three fixed multipliers equal −2
        affine("lattes2", &[z, c(-2.0, 0.0), one], &[one, c(-2.0, 0.0)]),
        // Newton's method for z³ − 1
        affine("newton3", &[one, z, z, c(2.0, 0.0)], &[z, z, c(3.0, 0.0)]),
        affine("cubic_rational", &[c(0.3, -0.2), z, c(0.5, 0.1), one], &[c(1.0, 0.4), c(-0.6, 0.0), c(0.2, 0.0), z]),
    ]
}

/// A map with independent standard complex Gaussian coefficients.
pub fn random_map(degree: usize, rng: &mut ChaCha8Rng) -> RationalMap {
    loop {
        let mut form = || {
            BinaryForm::new(
                (0..=degree)
                    .map(|_| {
                        let re: f64 = rng.sample(StandardNormal);
                        let im: f64 = rng.sample(StandardNormal);
                        c(re, im) * std::f64::consts::FRAC_1_SQRT_2
                    })
                    .collect(),
            )
        };
        let (p, q) = (form(), form());
        if let Ok(f) = RationalMap::new(p, q) {
            return f;
        }
    }
}

/// `count` random maps from `seed`, degrees cycling through `degrees`.
pub fn random_maps(count: usize, degrees: &[usize], seed: u64) -> Vec<CorpusMap> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let d = degrees[i % degrees.len()];
            CorpusMap { name: format!("random{i:02}_d{d}"), map: random_map(d, &mut rng) }
        })
        .collect()
}

pub const CORPUS_SEED: u64 = 0x5eed_0c0f_fee0_0001;

/// The 30-map corpus.
pub fn corpus() -> Vec<CorpusMap> {
    let mut v = named_maps();
    v.extend(random_maps(20, &[2, 2, 3], CORPUS_SEED));
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{periodic_cycles, CycleConfig};

    #[test]
    fn corpus_is_stable() {
        let a = corpus();
        let b = corpus();
        assert_eq!(a.len(), 30);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.map.numerator().coeffs(), y.map.numerator().coeffs());
            assert_eq!(x.map.denominator().coeffs(), y.map.denominator().coeffs());
        }
    }

    #[test]
    fn lattes_multipliers() {
        let f = &named_maps()[7].map;
        for cy in periodic_cycles(f, 1, false, &CycleConfig::default()).unwrap() {
            assert!((cy.multiplier - c(-2.0, 0.0)).norm() < 1e-9);
        }
    }
}
