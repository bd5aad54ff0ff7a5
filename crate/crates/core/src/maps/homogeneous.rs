use std::sync::OnceLock;

use num_complex::Complex64;

use super::{fingerprint_of, Lift, MapError};
use crate::algebra::{determinant, sylvester_resultant, BinaryForm};
use crate::greenfn::estimate_escape_constant;

/// Sparse homogeneous polynomial in `n` variables.
#[derive(Clone, Debug, PartialEq)]
pub struct HomogeneousPoly {
    pub terms: Vec<(Complex64, Vec<u32>)>,
}

impl HomogeneousPoly {
    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        self.terms
            .iter()
            .map(|(c, e)| e.iter().zip(z).fold(*c, |acc, (&k, &x)| acc * x.powu(k)))
            .sum()
    }

    /// `∂/∂z_j` evaluated at `z`.
    pub fn partial(&self, j: usize, z: &[Complex64]) -> Complex64 {
        self.terms
            .iter()
            .filter(|(_, e)| e[j] > 0)
            .map(|(c, e)| {
                e.iter().zip(z).enumerate().fold(*c * e[j] as f64, |acc, (i, (&k, &x))| {
                    acc * x.powu(if i == j { k - 1 } else { k })
                })
            })
            .sum()
    }

    fn total_degree(&self) -> Option<u32> {
        let mut degs = self.terms.iter().map(|(_, e)| e.iter().sum::<u32>());
        let first = degs.next()?;
        degs.all(|d| d == first).then_some(first)
    }
}

/// A homogeneous polynomial map `F = (F_0, …, F_k)` of C^{k+1}.
#[derive(Debug)]
pub struct HomogeneousMap {
    degree: usize,
    components: Vec<HomogeneousPoly>,
    escape: OnceLock<f64>,
}

impl Clone for HomogeneousMap {
    fn clone(&self) -> Self {
        HomogeneousMap { degree: self.degree, components: self.components.clone(), escape: self.escape.clone() }
    }
}

impl HomogeneousMap {
    pub fn new(components: Vec<HomogeneousPoly>) -> Result<Self, MapError> {
        let n = components.len();
        let degree = components
            .first()
            .and_then(|c| c.total_degree())
            .ok_or(MapError::NotHomogeneous(0))? as usize;
        if degree < 2 {
            return Err(MapError::DegreeTooLow(degree));
        }
        for c in &components {
            if c.total_degree() != Some(degree as u32) || c.terms.iter().any(|(_, e)| e.len() != n) {
                return Err(MapError::NotHomogeneous(degree));
            }
        }
        let map = HomogeneousMap { degree, components, escape: OnceLock::new() };
        if n == 2 {
            let (p, q) = map.planar_forms().expect("two components");
            let res = sylvester_resultant(&p, &q)?;
            let scale = p.max_coeff().max(q.max_coeff()).powi(2 * degree as i32);
            if res.norm() <= 1e-14 * scale {
                return Err(MapError::Degenerate { resultant: res.norm() });
            }
        }
        Ok(map)
    }

    /// `(z_0^d, …, z_k^d)`.
    pub fn diagonal(degree: usize, k: usize) -> Self {
        let components = (0..=k)
            .map(|j| {
                let mut e = vec![0u32; k + 1];
                e[j] = degree as u32;
                HomogeneousPoly { terms: vec![(Complex64::new(1.0, 0.0), e)] }
            })
            .collect();
        HomogeneousMap::new(components).expect("diagonal maps are non-degenerate")
    }

    pub fn from_forms(p: &BinaryForm, q: &BinaryForm) -> Result<Self, MapError> {
        if p.degree() != q.degree() {
            return Err(MapError::DegreeMismatch(p.degree(), q.degree()));
        }
        let d = p.degree() as u32;
        let to_poly = |f: &BinaryForm| HomogeneousPoly {
            terms: f
                .coeffs()
                .iter()
                .enumerate()
                .filter(|(_, c)| c.norm_sqr() > 0.0)
                .map(|(i, &c)| (c, vec![d - i as u32, i as u32]))
                .collect(),
        };
        HomogeneousMap::new(vec![to_poly(p), to_poly(q)])
    }

    /// The two components as binary forms when `k = 1`.
    pub fn planar_forms(&self) -> Option<(BinaryForm, BinaryForm)> {
        if self.components.len() != 2 {
            return None;
        }
        let d = self.degree;
        let to_form = |c: &HomogeneousPoly| {
            let mut f = BinaryForm::zero(d);
            for (coef, e) in &c.terms {
                f = f.add(&BinaryForm::monomial(d, e[1] as usize, *coef));
            }
            f
        };
        Some((to_form(&self.components[0]), to_form(&self.components[1])))
    }

    pub fn components(&self) -> &[HomogeneousPoly] {
        &self.components
    }

    pub fn eval(&self, z: &[Complex64]) -> Vec<Complex64> {
        self.components.iter().map(|c| c.eval(z)).collect()
    }
}

impl Lift for HomogeneousMap {
    fn dim(&self) -> usize {
        self.components.len()
    }

    fn degree(&self) -> usize {
        self.degree
    }

    fn apply(&self, z: &[Complex64], out: &mut [Complex64]) {
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c.eval(z);
        }
    }

    fn det_jacobian(&self, z: &[Complex64]) -> Complex64 {
        let n = self.components.len();
        let mut m: Vec<Complex64> = Vec::with_capacity(n * n);
        for c in &self.components {
            for j in 0..n {
                m.push(c.partial(j, z));
            }
        }
        determinant(&mut m, n)
    }

    fn escape_constant(&self) -> f64 {
        *self.escape.get_or_init(|| estimate_escape_constant(self))
    }

    fn fingerprint(&self) -> u64 {
        fingerprint_of(self.components.iter().flat_map(|c| {
            c.terms.iter().flat_map(|(coef, e)| {
                std::iter::once(*coef).chain(e.iter().map(|&k| Complex64::new(k as f64, 0.0)))
            })
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn power_map_evaluation() {
        let f = HomogeneousMap::diagonal(2, 1);
        assert_eq!(f.eval(&[c(1.0, 0.0), c(2.0, 0.0)]), vec![c(1.0, 0.0), c(4.0, 0.0)]);
        assert_eq!(f.eval(&[c(0.0, 0.0), c(0.0, 0.0)]), vec![c(0.0, 0.0), c(0.0, 0.0)]);
    }

    #[test]
    fn homogeneity_of_evaluation() {
        let p = BinaryForm::new(vec![c(0.3, 1.0), c(-1.0, 0.2), c(0.5, 0.5), c(2.0, -1.0)]);
        let q = BinaryForm::new(vec![c(1.0, 0.0), c(0.0, 0.7), c(-0.4, 0.1), c(0.2, 0.9)]);
        let f = HomogeneousMap::from_forms(&p, &q).unwrap();
        let z = [c(0.4, -0.3), c(1.1, 0.6)];
        let t = c(-0.7, 1.3);
        let fz = f.eval(&z);
        let ftz = f.eval(&[z[0] * t, z[1] * t]);
        for (a, b) in ftz.iter().zip(&fz) {
            let expected = b * t.powu(3);
            assert!((a - expected).norm() / expected.norm() < 1e-12);
        }
    }

    #[test]
    fn diagonal_jacobian() {
        let f = HomogeneousMap::diagonal(3, 2);
        let z = [c(1.0, 1.0), c(0.5, 0.0), c(0.0, 2.0)];
        let expected = z.iter().fold(c(27.0, 0.0), |acc, x| acc * x * x);
        assert!((f.det_jacobian(&z) - expected).norm() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        let p = BinaryForm::new(vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let q = BinaryForm::new(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!(matches!(HomogeneousMap::from_forms(&p, &q), Err(MapError::Degenerate { .. })));
        let mixed = HomogeneousPoly { terms: vec![(c(1.0, 0.0), vec![2, 0]), (c(1.0, 0.0), vec![0, 1])] };
        assert!(matches!(HomogeneousMap::new(vec![mixed.clone(), mixed]), Err(MapError::NotHomogeneous(_))));
    }
}
