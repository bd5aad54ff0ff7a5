//! Periodic points of `f^n`, grouped into cycles with multipliers.
//!
//! Fixed points of `f^n` are the zeros of the binary form
//! `z1·P_n(z) − z0·Q_n(z)` of degree `d^n + 1`, where `(P_n, Q_n)` is the
//! formally expanded lift of `f^n`. Root approximations of the expanded form
//! are Newton-polished on `f^n` evaluated by iteration, which does not suffer
//! from the conditioning of the expanded coefficients.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{MapError, RationalMap};
use crate::algebra::{cluster_points, roots::CLUSTER_RADIUS, BinaryForm};
use crate::point::P1Point;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CycleKind {
    Attracting,
    Neutral,
    Repelling,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cycle {
    /// Exact period.
    pub period: usize,
    pub points: Vec<P1Point>,
    /// Derivative of `f^period` along the cycle; exactly zero when a cycle
    /// point is critical.
    pub multiplier: Complex64,
    /// Multiplicity of the cycle points as fixed points of the iterate.
    pub multiplicity: usize,
    pub kind: Option<CycleKind>,
}

#[derive(Clone, Copy, Debug)]
pub struct CycleConfig {
    /// Largest admissible number of fixed points `d^n + 1`.
    pub max_roots: usize,
    /// `| |multiplier| − 1 | < neutral_band` counts as neutral.
    pub neutral_band: f64,
    /// Chordal distance under which `f^m(p)` is considered equal to `p`.
    pub period_tolerance: f64,
}

impl Default for CycleConfig {
    fn default() -> Self {
        CycleConfig { max_roots: 700, neutral_band: 1e-9, period_tolerance: 1e-7 }
    }
}

impl CycleConfig {
    pub fn classify(&self, multiplier: Complex64) -> CycleKind {
        let m = multiplier.norm();
        if (m - 1.0).abs() < self.neutral_band {
            CycleKind::Neutral
        } else if m < 1.0 {
            CycleKind::Attracting
        } else {
            CycleKind::Repelling
        }
    }
}

/// Newton iteration on the fixed-point equation of `f^n` in the chart of `p`.
fn polish_periodic(f: &RationalMap, n: usize, p: P1Point, steps: usize) -> P1Point {
    let residual = |q: &P1Point| {
        let (h, _) = fixed_point_equation(f, n, q);
        h.norm()
    };
    let mut best = p;
    let mut best_r = residual(&p);
    let mut cur = p;
    for _ in 0..steps {
        let (h, dh) = fixed_point_equation(f, n, &cur);
        if dh.norm_sqr() == 0.0 || !h.is_finite() || !dh.is_finite() {
            break;
        }
        let step = h / dh;
        let next = match cur {
            P1Point::Affine(z) => P1Point::from_affine(z - step),
            P1Point::Reciprocal(u) => {
                let u = u - step;
                if u.norm_sqr() <= 1.0 { P1Point::Reciprocal(u) } else { P1Point::Affine(u.inv()) }
            }
        };
        let r = residual(&next);
        if r.is_finite() && r < best_r {
            best_r = r;
            best = next;
        }
        if step.norm() < 1e-16 {
            break;
        }
        cur = next;
    }
    best
}

/// `h = det[F^n(v), v]` and its derivative in the chart coordinate of `p`,
/// both up to a common positive factor.
fn fixed_point_equation(f: &RationalMap, n: usize, p: &P1Point) -> (Complex64, Complex64) {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let (v0, dv0) = match *p {
        P1Point::Affine(z) => ([z, one], [one, zero]),
        P1Point::Reciprocal(u) => ([one, u], [zero, one]),
    };
    let (mut v, mut dv) = (v0, dv0);
    for _ in 0..n {
        let (w, dw) = f.eval_with_tangent(v, dv);
        let s = w[0].norm().max(w[1].norm());
        if s == 0.0 || !s.is_finite() {
            return (Complex64::new(f64::NAN, 0.0), Complex64::new(f64::NAN, 0.0));
        }
        v = [w[0] / s, w[1] / s];
        dv = [dw[0] / s, dw[1] / s];
    }
    let h = v[0] * v0[1] - v[1] * v0[0];
    let dh = dv[0] * v0[1] + v[0] * dv0[1] - dv[1] * v0[0] - v[1] * dv0[0];
    (h, dh)
}

/// Fixed points of `f^n` with multiplicities summing to `d^n + 1`.
pub fn fixed_points_of_iterate(
    f: &RationalMap,
    n: usize,
    config: &CycleConfig,
) -> Result<Vec<(P1Point, usize)>, MapError> {
    assert!(n >= 1, "period must be positive");
    let needed = (f.degree() as u128).checked_pow(n as u32).map_or(u128::MAX, |x| x + 1);
    if needed > config.max_roots as u128 {
        return Err(MapError::DegreeOverflow {
            needed: needed.min(usize::MAX as u128) as usize,
            cap: config.max_roots,
        });
    }
    let (pn, qn) = f.iterate_forms(n);
    let z0 = BinaryForm::monomial(1, 0, Complex64::new(1.0, 0.0));
    let z1 = BinaryForm::monomial(1, 1, Complex64::new(1.0, 0.0));
    let h = pn.mul(&z1).sub(&qn.mul(&z0));
    let approx = h.projective_root_approximations()?;
    Ok(cluster_points(&implicit_aberth(f, n, approx)))
}

/// Aberth–Ehrlich iteration for the zeros of `det[F^n(v), v]` on P¹, with
/// `F^n` evaluated by iteration rather than through its expanded
/// coefficients. Each point moves in its own chart; the correction from the
/// other points is `Σ_j (w_j ∧ dv) / (w_j ∧ v)`, which is chart-free.
fn implicit_aberth(f: &RationalMap, n: usize, mut pts: Vec<P1Point>) -> Vec<P1Point> {
    let count = pts.len();
    let mut done = vec![false; count];
    for _ in 0..ABERTH_SWEEPS {
        let mut moving = false;
        for i in 0..count {
            if done[i] {
                continue;
            }
            let (h, dh) = fixed_point_equation(f, n, &pts[i]);
            if h.norm_sqr() == 0.0 {
                done[i] = true;
                continue;
            }
            if !h.is_finite() || !dh.is_finite() {
                continue;
            }
            moving = true;
            let v = pts[i].lift();
            let dv = match pts[i] {
                P1Point::Affine(_) => [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
                P1Point::Reciprocal(_) => [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
            };
            let mut s = Complex64::new(0.0, 0.0);
            for (j, q) in pts.iter().enumerate() {
                if j != i {
                    let w = q.unit_lift();
                    let den = w[0] * v[1] - w[1] * v[0];
                    if den.norm_sqr() > 0.0 {
                        s += (w[0] * dv[1] - w[1] * dv[0]) / den;
                    }
                }
            }
            let ratio = h / dh;
            let mut step = ratio / (Complex64::new(1.0, 0.0) - ratio * s);
            if !step.is_finite() {
                step = ratio;
            }
            if !step.is_finite() {
                continue;
            }
            let (x, next) = match pts[i] {
                P1Point::Affine(z) => (z, P1Point::from_affine(z - step)),
                P1Point::Reciprocal(u) => {
                    let u2 = u - step;
                    (u, if u2.norm_sqr() <= 1.0 { P1Point::Reciprocal(u2) } else { P1Point::Affine(u2.inv()) })
                }
            };
            pts[i] = next;
            if step.norm() <= 4.0 * f64::EPSILON * x.norm().max(1.0) {
                done[i] = true;
            }
        }
        if !moving {
            break;
        }
    }
    pts
}

const ABERTH_SWEEPS: usize = 200;

fn iterate_point(f: &RationalMap, p: &P1Point, m: usize) -> P1Point {
    (0..m).fold(*p, |x, _| f.eval(&x))
}

/// Multiplier of the cycle `points[0] → points[1] → … → points[0]`.
///
/// With chart lifts `v_i` and `F(v_i) = s_i v_{i+1}`, the multiplier is
/// `Π det F′(v_i) / (d s_i²)`; it is exactly zero if some `v_i` is critical.
pub fn cycle_multiplier(f: &RationalMap, points: &[P1Point]) -> Complex64 {
    let d = f.degree() as f64;
    let n = points.len();
    let mut m = Complex64::new(1.0, 0.0);
    for i in 0..n {
        let v = points[i].lift();
        let det = f.det_jacobian_at(v);
        let scale = f.jacobian().eval_scale(v[0], v[1]);
        if det.norm() <= 1e-10 * scale {
            return Complex64::new(0.0, 0.0);
        }
        let w = f.eval_lift(v);
        let next = points[(i + 1) % n].lift();
        let s = (w[0] * next[0].conj() + w[1] * next[1].conj()) / (next[0].norm_sqr() + next[1].norm_sqr());
        m *= det / (s * s * d);
    }
    m
}

/// `f^n(x)` and `(f^n)′(x)`, both in the chart of `x`. Unlike
/// [`cycle_multiplier`] this is holomorphic in `x` and in the map, which
/// Newton solvers need; it is `None` if the orbit meets a zero of `F`.
pub fn orbit_in_chart(f: &RationalMap, x: &P1Point, n: usize) -> Option<(Complex64, Complex64)> {
    let d = f.degree() as f64;
    let affine = matches!(x, P1Point::Affine(_));
    let mut v = x.lift();
    let mut m = Complex64::new(1.0, 0.0);
    for i in 0..n {
        let w = f.eval_lift(v);
        let to_affine = if i + 1 == n { affine } else { w[0].norm_sqr() <= w[1].norm_sqr() };
        let s = if to_affine { w[1] } else { w[0] };
        if s.norm_sqr() == 0.0 || !s.is_finite() {
            return None;
        }
        // a step between charts of different type contributes −det F′ / (d s²);
        // those sign flips cancel because the last step returns to the chart of x
        m *= f.det_jacobian_at(v) / (s * s * d);
        v = [w[0] / s, w[1] / s];
    }
    let y = if affine { v[0] } else { v[1] };
    Some((y, m))
}

/// Every cycle whose exact period divides `n`, from one root computation.
pub fn all_cycles_dividing(
    f: &RationalMap,
    n: usize,
    classify: bool,
    config: &CycleConfig,
) -> Result<Vec<Cycle>, MapError> {
    let fixed = fixed_points_of_iterate(f, n, config)?;
    for i in 0..fixed.len() {
        for j in (i + 1)..fixed.len() {
            let dist = fixed[i].0.chordal_distance(&fixed[j].0);
            if dist < 2.0 * CLUSTER_RADIUS {
                return Err(MapError::ClusterAmbiguity { period: n, distance: dist });
            }
        }
    }
    let divisors: Vec<usize> = (1..=n).filter(|m| n % m == 0).collect();
    let periods: Vec<usize> = fixed
        .iter()
        .map(|(p, _)| {
            divisors
                .iter()
                .copied()
                .find(|&m| iterate_point(f, p, m).chordal_distance(p) < config.period_tolerance)
                .unwrap_or(n)
        })
        .collect();
    let nearest = |q: &P1Point| {
        (0..fixed.len())
            .min_by(|&a, &b| fixed[a].0.chordal_distance(q).total_cmp(&fixed[b].0.chordal_distance(q)))
            .unwrap()
    };
    let mut assigned = vec![false; fixed.len()];
    let mut cycles = Vec::new();
    for start in 0..fixed.len() {
        if assigned[start] {
            continue;
        }
        let period = periods[start];
        let mut idx = vec![start];
        assigned[start] = true;
        let mut cur = fixed[start].0;
        for _ in 1..period {
            let next = f.eval(&cur);
            let k = nearest(&next);
            idx.push(k);
            assigned[k] = true;
            cur = fixed[k].0;
        }
        let points: Vec<P1Point> = idx.iter().map(|&k| fixed[k].0).collect();
        let multiplier = cycle_multiplier(f, &points);
        cycles.push(Cycle {
            period,
            points,
            multiplier,
            multiplicity: fixed[start].1,
            kind: classify.then(|| config.classify(multiplier)),
        });
    }
    Ok(cycles)
}

/// Cycles of exact period `n`.
pub fn periodic_cycles(
    f: &RationalMap,
    n: usize,
    classify: bool,
    config: &CycleConfig,
) -> Result<Vec<Cycle>, MapError> {
    Ok(all_cycles_dividing(f, n, classify, config)?.into_iter().filter(|c| c.period == n).collect())
}

/// Re-solves a period-`n` point of `f` near `seed` (continuation from a
/// nearby map) and rebuilds its cycle.
pub fn refine_cycle(f: &RationalMap, n: usize, seed: &P1Point) -> Cycle {
    let p = polish_periodic(f, n, *seed, 30);
    let mut points = vec![p];
    for _ in 1..n {
        let next = f.eval(points.last().unwrap());
        points.push(next);
    }
    let multiplier = cycle_multiplier(f, &points);
    Cycle { period: n, points, multiplier, multiplicity: 1, kind: None }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::Mobius;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn quadratic(cv: Complex64) -> RationalMap {
        RationalMap::from_affine(&[cv, c(0.0, 0.0), c(1.0, 0.0)], &[c(1.0, 0.0)]).unwrap()
    }

    fn random_map(rng: &mut ChaCha8Rng, d: usize) -> RationalMap {
        loop {
            let mut rc = || c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let p = BinaryForm::new((0..=d).map(|_| rc()).collect());
            let q = BinaryForm::new((0..=d).map(|_| rc()).collect());
            if let Ok(f) = RationalMap::new(p, q) {
                return f;
            }
        }
    }

    #[test]
    fn fixed_points_of_square() {
        let cfg = CycleConfig::default();
        let cycles = periodic_cycles(&RationalMap::power(2), 1, true, &cfg).unwrap();
        assert_eq!(cycles.len(), 3);
        for cy in &cycles {
            let p = cy.points[0];
            if p.is_infinity() || p.to_affine() == Some(c(0.0, 0.0)) {
                assert_eq!(cy.multiplier, c(0.0, 0.0));
                assert_eq!(cy.kind, Some(CycleKind::Attracting));
            } else {
                assert!((p.to_affine().unwrap() - c(1.0, 0.0)).norm() < 1e-12);
                assert!((cy.multiplier - c(2.0, 0.0)).norm() < 1e-12);
                assert_eq!(cy.kind, Some(CycleKind::Repelling));
            }
        }
    }

    #[test]
    fn superattracting_two_cycle_of_basilica() {
        let cfg = CycleConfig::default();
        let cycles = periodic_cycles(&quadratic(c(-1.0, 0.0)), 2, true, &cfg).unwrap();
        assert_eq!(cycles.len(), 1);
        let cy = &cycles[0];
        let mut pts: Vec<f64> = cy.points.iter().map(|p| p.to_affine().unwrap().re).collect();
        pts.sort_by(f64::total_cmp);
        assert!((pts[0] + 1.0).abs() < 1e-12 && pts[1].abs() < 1e-12);
        assert_eq!(cy.multiplier, c(0.0, 0.0));
    }

    #[test]
    fn parabolic_double_fixed_point() {
        let cfg = CycleConfig::default();
        let cycles = periodic_cycles(&quadratic(c(0.25, 0.0)), 1, true, &cfg).unwrap();
        let finite: Vec<&Cycle> = cycles.iter().filter(|cy| !cy.points[0].is_infinity()).collect();
        assert_eq!(finite.len(), 1);
        assert_eq!(finite[0].multiplicity, 2);
        assert!((finite[0].points[0].to_affine().unwrap() - c(0.5, 0.0)).norm() < 1e-7);
        assert!((finite[0].multiplier - c(1.0, 0.0)).norm() < 1e-7);
    }

    #[test]
    fn fixed_point_count_is_d_pow_n_plus_one() {
        let cfg = CycleConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for d in [2usize, 3] {
            for _ in 0..3 {
                let f = random_map(&mut rng, d);
                for n in 1..=4 {
                    let fixed = fixed_points_of_iterate(&f, n, &cfg).unwrap();
                    let total: usize = fixed.iter().map(|(_, m)| m).sum();
                    assert_eq!(total, d.pow(n as u32) + 1, "d={d} n={n}");
                    for (p, _) in &fixed {
                        let dist = iterate_point(&f, p, n).chordal_distance(p);
                        assert!(dist < 1e-8, "d={d} n={n} p={p} dist={dist:e}");
                    }
                }
            }
        }
    }

    #[test]
    fn degree_cap_enforced() {
        let cfg = CycleConfig::default();
        let err = fixed_points_of_iterate(&RationalMap::power(3), 6, &cfg).unwrap_err();
        assert!(matches!(err, MapError::DegreeOverflow { needed: 730, cap: 700 }));
    }

    #[test]
    fn multiplier_invariant_under_rotation_and_conjugation() {
        let cfg = CycleConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..4 {
            let f = random_map(&mut rng, 2);
            let mut rc = || c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let phi = Mobius([[rc(), rc()], [rc(), rc()]]);
            let g = f.conjugate(&phi).unwrap();
            let cf = periodic_cycles(&f, 3, false, &cfg).unwrap();
            let cg = periodic_cycles(&g, 3, false, &cfg).unwrap();
            assert_eq!(cf.len(), 2);
            assert_eq!(cg.len(), 2);
            for cy in &cf {
                let mut rotated = cy.points.clone();
                rotated.rotate_left(1);
                let m2 = cycle_multiplier(&f, &rotated);
                assert!((m2 - cy.multiplier).norm() <= 1e-6 * cy.multiplier.norm().max(1.0));
                let matched = cg
                    .iter()
                    .map(|o| (o.multiplier - cy.multiplier).norm())
                    .fold(f64::INFINITY, f64::min);
                assert!(matched <= 1e-6 * cy.multiplier.norm().max(1.0));
            }
        }
    }

    #[test]
    fn orbit_derivative_matches_cycle_multiplier() {
        let cfg = CycleConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let f = random_map(&mut rng, 2);
        for cy in periodic_cycles(&f, 3, false, &cfg).unwrap() {
            for p in &cy.points {
                let (y, m) = orbit_in_chart(&f, p, 3).unwrap();
                let x = match *p {
                    P1Point::Affine(z) | P1Point::Reciprocal(z) => z,
                };
                assert!((y - x).norm() < 1e-8);
                assert!((m - cy.multiplier).norm() < 1e-6 * cy.multiplier.norm().max(1.0));
            }
        }
        // holomorphic in x: compare with a difference quotient off the cycle
        let x = P1Point::Affine(c(0.3, 0.2));
        let h = 1e-6;
        let (y0, m0) = orbit_in_chart(&f, &x, 2).unwrap();
        let (y1, _) = orbit_in_chart(&f, &P1Point::Affine(c(0.3 + h, 0.2)), 2).unwrap();
        assert!(((y1 - y0) / h - m0).norm() < 1e-4 * m0.norm().max(1.0));
    }

    #[test]
    fn cycles_close_up() {
        let cfg = CycleConfig::default();
        let f = quadratic(c(-0.12, 0.75));
        for cy in periodic_cycles(&f, 4, true, &cfg).unwrap() {
            for (i, p) in cy.points.iter().enumerate() {
                let next = cy.points[(i + 1) % cy.period];
                assert!(f.eval(p).chordal_distance(&next) < 1e-8);
            }
        }
    }
}
