//! Polynomial root finding by simultaneous (Aberth–Ehrlich) iteration.
//!
//! Every returned root carries a residual certificate: the relative residual
//! `|p(r)| / scale(p, r)` with `scale(p, r) = Σ |a_i| |r|^i`, which is the
//! natural bound on the rounding error of evaluating `p` at `r`.
//!
//! Approximations closer than `CLUSTER_RADIUS · max(1, |r|)` are merged into
//! one root whose multiplicity is the cluster size and whose value is the
//! cluster centroid (the centroid of the approximations of an `m`-fold root
//! is far more accurate than any single one of them).

use std::f64::consts::TAU;

use num_complex::Complex64;

use super::{AlgebraError, Poly1};

/// Relative clustering radius used to assign multiplicities.
pub const CLUSTER_RADIUS: f64 = 1e-7;

/// Default residual tolerance for [`roots`].
pub const DEFAULT_ROOT_TOL: f64 = 1e-10;

const MAX_ITERATIONS: usize = 600;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Root {
    pub value: Complex64,
    pub multiplicity: usize,
    /// Relative residual `|p(r)| / Σ |a_i| |r|^i`.
    pub residual: f64,
}

/// All roots of `p` with multiplicities; multiplicities sum to `deg p`.
pub fn roots(p: &Poly1, tol: f64) -> Result<Vec<Root>, AlgebraError> {
    let approx = root_approximations(p)?;
    let clusters = cluster(&approx);
    let mut out = Vec::with_capacity(clusters.len());
    let mut worst = 0.0f64;
    for (mut value, multiplicity) in clusters {
        if multiplicity > 1 {
            value = polish_multiple(p, value, multiplicity);
        }
        let residual = relative_residual(p, value);
        worst = worst.max(residual);
        out.push(Root { value, multiplicity, residual });
    }
    if !(worst <= tol) {
        return Err(AlgebraError::NonConvergence { residual: worst });
    }
    Ok(out)
}

/// Newton on `p^{(m-1)}`, which has a simple zero at an `m`-fold root of `p`.
fn polish_multiple(p: &Poly1, z: Complex64, m: usize) -> Complex64 {
    let mut q = p.clone();
    for _ in 1..m {
        q = q.derivative();
    }
    super::form::newton_polish(&q, z)
}

/// `|p(z)| / Σ |a_i| |z|^i`, zero when the scale vanishes.
pub fn relative_residual(p: &Poly1, z: Complex64) -> f64 {
    let scale = p.eval_scale(z);
    if scale == 0.0 {
        0.0
    } else {
        p.eval(z).norm() / scale
    }
}

/// Unclustered root approximations, repeated according to multiplicity.
pub(crate) fn root_approximations(p: &Poly1) -> Result<Vec<Complex64>, AlgebraError> {
    let degree = match p.degree() {
        None => return Err(AlgebraError::ZeroPolynomial),
        Some(0) => return Err(AlgebraError::ConstantPolynomial),
        Some(d) => d,
    };
    let a = p.coeffs();
    let zeros = a.iter().take_while(|c| c.norm_sqr() == 0.0).count();
    let mut out = vec![Complex64::new(0.0, 0.0); zeros];
    let reduced = &a[zeros..];
    match degree - zeros {
        0 => {}
        1 => out.push(-reduced[0] / reduced[1]),
        2 => out.extend(quadratic(reduced[0], reduced[1], reduced[2])),
        _ => out.extend(aberth(reduced, MAX_ITERATIONS)),
    }
    Ok(out)
}

/// Roots of `a2 z² + a1 z + a0` by the cancellation-free formula.
fn quadratic(a0: Complex64, a1: Complex64, a2: Complex64) -> [Complex64; 2] {
    let sq = (a1 * a1 - a2 * a0 * 4.0).sqrt();
    let s = if (a1.conj() * sq).re >= 0.0 { sq } else { -sq };
    let q = -(a1 + s) * 0.5;
    if q.norm_sqr() == 0.0 {
        // a1 = 0 and a0 = 0 cannot happen after zero-root stripping
        return [Complex64::new(0.0, 0.0); 2];
    }
    [q / a2, a0 / q]
}

/// Aberth–Ehrlich iteration on `a` (ascending, `a[0] != 0`, leading nonzero).
fn aberth(a: &[Complex64], max_iterations: usize) -> Vec<Complex64> {
    let n = a.len() - 1;
    let norm = a.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let a: Vec<Complex64> = a.iter().map(|&c| c / norm).collect();
    let rev: Vec<Complex64> = a.iter().rev().copied().collect();
    let eps = f64::EPSILON * 4.0 * (n as f64 + 1.0);

    let mut z = initial_guesses(&a);
    let mut done = vec![false; n];
    for _ in 0..max_iterations {
        let mut all_done = true;
        for i in 0..n {
            if done[i] {
                continue;
            }
            all_done = false;
            let zi = z[i];
            let (ratio, small) = if zi.norm_sqr() <= 1.0 {
                let (pv, dp) = horner(&a, zi);
                (pv / dp, pv.norm() <= eps * scale(&a, zi.norm()))
            } else {
                let y = zi.inv();
                let (rv, dr) = horner(&rev, y);
                (zi * rv / (rv * n as f64 - y * dr), rv.norm() <= eps * scale(&rev, y.norm()))
            };
            if small {
                done[i] = true;
                continue;
            }
            if !ratio.is_finite() {
                // stationary point of p: nudge off it
                z[i] = zi * Complex64::new(1.0, 1e-3) + Complex64::new(1e-3, 0.0);
                continue;
            }
            let s: Complex64 = (0..n).filter(|&j| j != i).map(|j| (zi - z[j]).inv()).sum();
            let w = ratio / (Complex64::new(1.0, 0.0) - ratio * s);
            if !w.is_finite() {
                z[i] = zi * Complex64::new(1.0, 1e-3) + Complex64::new(1e-3, 0.0);
                continue;
            }
            z[i] = zi - w;
            if w.norm() <= f64::EPSILON * z[i].norm() {
                done[i] = true;
            }
        }
        if all_done {
            break;
        }
    }
    z
}

fn horner(a: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let zero = Complex64::new(0.0, 0.0);
    let mut p = zero;
    let mut dp = zero;
    for &c in a.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

fn scale(a: &[Complex64], r: f64) -> f64 {
    a.iter().rev().fold(0.0, |acc, c| acc * r + c.norm())
}

/// Bini's starting points: circles whose radii come from the upper convex
/// hull of `(i, log|a_i|)`.
fn initial_guesses(a: &[Complex64]) -> Vec<Complex64> {
    let n = a.len() - 1;
    let pts: Vec<(usize, f64)> = a
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm_sqr() > 0.0)
        .map(|(i, c)| (i, c.norm().ln()))
        .collect();
    let mut hull: Vec<(usize, f64)> = Vec::new();
    for &p in &pts {
        while hull.len() >= 2 {
            let (i1, y1) = hull[hull.len() - 2];
            let (i2, y2) = hull[hull.len() - 1];
            let cross = (i2 as f64 - i1 as f64) * (p.1 - y1) - (y2 - y1) * (p.0 as f64 - i1 as f64);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let mut out = Vec::with_capacity(n);
    for w in hull.windows(2) {
        let (k0, y0) = w[0];
        let (k1, y1) = w[1];
        let m = k1 - k0;
        let radius = ((y0 - y1) / m as f64).exp();
        for j in 0..m {
            let angle = TAU * (j as f64 / m as f64 + k0 as f64 / n as f64) + 0.7;
            out.push(Complex64::from_polar(radius, angle));
        }
    }
    out
}

/// Single-linkage clustering; returns (centroid, size) in first-seen order.
fn cluster(approx: &[Complex64]) -> Vec<(Complex64, usize)> {
    let n = approx.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let r = CLUSTER_RADIUS * approx[i].norm().max(approx[j].norm()).max(1.0);
            if (approx[i] - approx[j]).norm() <= r {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[b] = a;
                }
            }
        }
    }
    let mut sums: Vec<(Complex64, usize)> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = sums.len();
            sums.push((Complex64::new(0.0, 0.0), 0));
        }
        let s = &mut sums[slot[r]];
        s.0 += approx[i];
        s.1 += 1;
    }
    sums.into_iter().map(|(s, m)| (s / m as f64, m)).collect()
}
