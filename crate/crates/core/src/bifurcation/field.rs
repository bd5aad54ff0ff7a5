use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;

use super::BifurcationError;
use crate::families::{Family, Rect};
use crate::lyapunov;
use crate::sampling::substream_seed;

/// Values on a uniform grid over one rectangle (q = 1) or a product of two
/// (q = 2). Nodes include both ends of every axis.
///
/// Axis `a` runs over the real part of parameter `a / 2` when `a` is even and
/// the imaginary part when odd, and cell `(i₀, i₁, …)` sits at flat index
/// `i₀ + n₀(i₁ + n₁(i₂ + …))`. Masked cells hold NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub boxes: Vec<Rect>,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
    pub meta: BTreeMap<String, String>,
}

/// Cell masses on the grid of a [`ScalarField`].
#[derive(Debug, Clone, PartialEq)]
pub struct MassField {
    pub field: ScalarField,
    pub convention: String,
    /// Sum of the negative masses set to zero (Monge–Ampère only).
    pub clamped_negative: f64,
}

impl ScalarField {
    /// Evaluates `f` at every node; `None` or a non-finite value masks the cell.
    pub fn from_fn<F>(boxes: Vec<Rect>, shape: Vec<usize>, f: F) -> ScalarField
    where
        F: Fn(&[Complex64]) -> Option<f64> + Sync,
    {
        Self::from_indexed_fn(boxes, shape, |_, p| f(p))
    }

    /// As [`from_fn`](Self::from_fn), with the flat cell index passed along.
    pub fn from_indexed_fn<F>(boxes: Vec<Rect>, shape: Vec<usize>, f: F) -> ScalarField
    where
        F: Fn(usize, &[Complex64]) -> Option<f64> + Sync,
    {
        assert_eq!(shape.len(), 2 * boxes.len(), "shape needs two axes per box");
        let mut field = ScalarField { boxes, shape, values: Vec::new(), meta: BTreeMap::new() };
        let n = field.len();
        field.values = (0..n)
            .into_par_iter()
            .map(|k| {
                let p = field.point(k);
                f(k, &p).filter(|v| v.is_finite()).unwrap_or(f64::NAN)
            })
            .collect();
        field
    }

    pub fn q(&self) -> usize {
        self.boxes.len()
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_valid(&self, k: usize) -> bool {
        self.values[k].is_finite()
    }

    pub fn valid_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_finite()).count()
    }

    fn axis_range(&self, a: usize) -> (f64, f64) {
        let b = &self.boxes[a / 2];
        if a % 2 == 0 {
            (b.re0, b.re1)
        } else {
            (b.im0, b.im1)
        }
    }

    /// Grid spacing along each axis.
    pub fn spacing(&self) -> Vec<f64> {
        (0..self.shape.len())
            .map(|a| {
                let (lo, hi) = self.axis_range(a);
                (hi - lo) / (self.shape[a].max(2) - 1) as f64
            })
            .collect()
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.shape.len()];
        for a in 1..self.shape.len() {
            s[a] = s[a - 1] * self.shape[a - 1];
        }
        s
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().zip(self.strides()).map(|(i, s)| i * s).sum()
    }

    pub fn unflat(&self, mut k: usize) -> Vec<usize> {
        self.shape
            .iter()
            .map(|&n| {
                let i = k % n;
                k /= n;
                i
            })
            .collect()
    }

    /// Parameter value at cell `k`.
    pub fn point(&self, k: usize) -> Vec<Complex64> {
        let idx = self.unflat(k);
        self.boxes
            .iter()
            .enumerate()
            .map(|(p, b)| b.node(idx[2 * p], idx[2 * p + 1], self.shape[2 * p], self.shape[2 * p + 1]))
            .collect()
    }

    /// Nearest grid index to `p`, or `None` outside the boxes.
    pub fn nearest(&self, p: &[Complex64]) -> Option<Vec<usize>> {
        if p.len() != self.q() || !self.boxes.iter().zip(p).all(|(b, z)| b.contains(*z)) {
            return None;
        }
        let h = self.spacing();
        Some(
            (0..self.shape.len())
                .map(|a| {
                    let (lo, _) = self.axis_range(a);
                    let x = if a % 2 == 0 { p[a / 2].re } else { p[a / 2].im };
                    (((x - lo) / h[a]).round().max(0.0) as usize).min(self.shape[a] - 1)
                })
                .collect(),
        )
    }

    pub fn value_at(&self, p: &[Complex64]) -> Option<f64> {
        self.nearest(p).map(|i| self.values[self.flat(&i)])
    }
}

impl MassField {
    pub fn total(&self) -> f64 {
        self.field.values.iter().filter(|v| v.is_finite()).sum()
    }

    /// Largest mass among valid cells within `radius` grid steps of `p` (q = 1).
    pub fn max_within(&self, p: Complex64, radius: usize) -> Option<f64> {
        let f = &self.field;
        let c = f.nearest(&[p])?;
        let r = radius as isize;
        let mut best: Option<f64> = None;
        for dj in -r..=r {
            for di in -r..=r {
                if di * di + dj * dj > r * r {
                    continue;
                }
                let (i, j) = (c[0] as isize + di, c[1] as isize + dj);
                if i < 0 || j < 0 || i >= f.shape[0] as isize || j >= f.shape[1] as isize {
                    continue;
                }
                let v = f.values[f.flat(&[i as usize, j as usize])];
                if v.is_finite() {
                    best = Some(best.map_or(v, |b| b.max(v)));
                }
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScanMethod {
    Closed { tol: f64 },
    /// μ_F Monte Carlo with `samples` points and a per-cell substream.
    Ergodic { samples: usize },
}

impl ScanMethod {
    fn name(&self) -> &'static str {
        match self {
            ScanMethod::Closed { .. } => "closed",
            ScanMethod::Ergodic { .. } => "ergodic",
        }
    }
}

/// `L(f_λ)` on a grid; cells where the family or the evaluation fails are masked.
pub fn scan_l(
    fam: &Family,
    boxes: Vec<Rect>,
    shape: Vec<usize>,
    method: ScanMethod,
    seed: u64,
) -> Result<ScalarField, BifurcationError> {
    if boxes.len() != fam.parameter_dim() {
        return Err(BifurcationError::WrongDimension { expected: fam.parameter_dim(), got: boxes.len() });
    }
    let mut field = ScalarField::from_indexed_fn(boxes, shape, |k, p| {
        let f = fam.eval(p).ok()?;
        match method {
            ScanMethod::Closed { tol } => lyapunov::closed_form(&f, tol).ok().map(|c| c.value),
            ScanMethod::Ergodic { samples } => {
                lyapunov::ergodic(&f, samples, substream_seed(seed, k as u64)).ok().map(|e| e.value)
            }
        }
    });
    field.meta.insert("family".into(), fam.name().into());
    field.meta.insert("method".into(), method.name().into());
    field.meta.insert("seed".into(), seed.to_string());
    match method {
        ScanMethod::Closed { tol } => field.meta.insert("tolerance".into(), format!("{tol:e}")),
        ScanMethod::Ergodic { samples } => field.meta.insert("samples".into(), samples.to_string()),
    };
    field.meta.insert("masked".into(), (field.len() - field.valid_count()).to_string());
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greenfn;
    use crate::maps::Lift;

    #[test]
    fn quadratic_cells() {
        let field = scan_l(
            &Family::Quadratic,
            vec![Rect::new(-1.0, 4.0, 0.0, 0.0)],
            vec![6, 1],
            ScanMethod::Closed { tol: 1e-12 },
            0,
        )
        .unwrap();
        let log2 = 2f64.ln();
        assert!((field.values[0] - log2).abs() < 1e-6);
        assert!((field.values[1] - log2).abs() < 1e-6);
        // independent escape rate of the critical orbit at c = 4
        let f = crate::families::quadratic(Complex64::new(4.0, 0.0));
        let g0 = greenfn::green(&f, &[Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)], 1e-13).unwrap().value;
        assert!(f.escape_constant() > 1.0);
        assert!((field.values[5] - (log2 + g0)).abs() < 1e-8);
        let mut z = Complex64::new(4.0, 0.0);
        let mut g = 0.0;
        for k in 1..=6 {
            g = z.norm().ln() / 2f64.powi(k);
            z = z * z + 4.0;
        }
        assert!((g0 - g).abs() < 1e-3);
    }

    #[test]
    fn indexing_round_trip() {
        let f = ScalarField::from_fn(
            vec![Rect::new(0.0, 1.0, 0.0, 2.0), Rect::new(-1.0, 1.0, -1.0, 0.0)],
            vec![3, 4, 2, 5],
            |p| Some(p[0].re + 10.0 * p[1].im),
        );
        for k in 0..f.len() {
            assert_eq!(f.flat(&f.unflat(k)), k);
            let p = f.point(k);
            assert_eq!(f.nearest(&p).unwrap(), f.unflat(k));
        }
        assert_eq!(f.spacing(), vec![0.5, 2.0 / 3.0, 2.0, 0.25]);
    }

    #[test]
    fn failures_are_masked() {
        let f = ScalarField::from_fn(vec![Rect::new(0.0, 1.0, 0.0, 1.0)], vec![2, 2], |p| {
            (p[0].re > 0.5).then_some(1.0)
        });
        assert_eq!(f.valid_count(), 2);
        assert!(f.values[0].is_nan());
    }
}
