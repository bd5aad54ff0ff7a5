//! Holomorphic families `λ ↦ f_λ`: the quadratic family, the moduli space
//! M₂ in fixed-point multiplier coordinates, and user families whose
//! coefficients are expressions in `l1`, `l2`; plus Per(n, η) solving.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::algebra::{roots::root_approximations, Poly1};
use crate::maps::{orbit_in_chart, periodic_cycles, refine_cycle, Cycle, CycleConfig, Expr, MapError, RationalMap};
use crate::point::P1Point;

/// Multiplier pairs with `|μ_i μ_j − 1|` below this cannot carry the normal form.
pub const M2_GUARD: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FamilyError {
    #[error("degenerate map at parameter {lambda:?}: {source}")]
    DegenerateParameter { lambda: Vec<Complex64>, source: MapError },
    #[error("(σ₁, σ₂) = ({0}, {1}) has no normal form: every multiplier pair has product 1")]
    UnrepresentablePoint(Complex64, Complex64),
    #[error("family takes {expected} parameters, got {got}")]
    WrongDimension { expected: usize, got: usize },
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown builtin '{0}'")]
    UnknownBuiltin(String),
    #[error(transparent)]
    Map(#[from] MapError),
}

/// A family whose numerator and denominator coefficients (ascending powers of
/// `z`) are expressions in `l1` (and `l2` when `q = 2`).
#[derive(Debug, Clone, PartialEq)]
pub struct UserFamily {
    pub degree: usize,
    pub q: usize,
    pub num: Vec<Expr>,
    pub den: Vec<Expr>,
}

impl UserFamily {
    /// ```text
    /// params 1
    /// degree 2
    /// P: l1 0 1
    /// Q: 1
    /// ```
    pub fn parse(text: &str) -> Result<UserFamily, FamilyError> {
        let mut degree = None;
        let mut q = None;
        let mut num = None;
        let mut den = None;
        for (i, raw) in text.lines().enumerate() {
            let err = |message: String| FamilyError::Parse { line: i + 1, message };
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("degree") {
                degree = Some(rest.trim().parse::<usize>().map_err(|_| err("bad degree".into()))?);
            } else if let Some(rest) = line.strip_prefix("params") {
                q = Some(rest.trim().parse::<usize>().map_err(|_| err("bad params".into()))?);
            } else if let Some((key, rest)) = line.split_once(':') {
                let exprs = rest
                    .split_whitespace()
                    .map(|t| Expr::parse(t).map_err(|e| err(format!("'{t}': {e}"))))
                    .collect::<Result<Vec<_>, _>>()?;
                match key.trim() {
                    "P" => num = Some(exprs),
                    "Q" => den = Some(exprs),
                    other => return Err(err(format!("unknown directive '{other}'"))),
                }
            } else {
                return Err(err(format!("unrecognized line '{line}'")));
            }
        }
        let missing = |what: &str| FamilyError::Parse { line: 0, message: format!("missing {what}") };
        let degree = degree.ok_or_else(|| missing("degree"))?;
        let num = num.ok_or_else(|| missing("P"))?;
        let den = den.ok_or_else(|| missing("Q"))?;
        let mut used = 0;
        for e in num.iter().chain(&den) {
            for v in e.variables() {
                used = used.max(match v.as_str() {
                    "l1" => 1,
                    "l2" => 2,
                    other => {
                        return Err(FamilyError::Parse { line: 0, message: format!("unknown variable '{other}'") })
                    }
                });
            }
        }
        let q = q.unwrap_or(used.max(1));
        if !(1..=2).contains(&q) || used > q {
            return Err(FamilyError::Parse { line: 0, message: format!("params must be 1 or 2 and cover l{used}") });
        }
        if num.len() > degree + 1 || den.len() > degree + 1 {
            return Err(FamilyError::Parse { line: 0, message: "more coefficients than degree + 1".into() });
        }
        Ok(UserFamily { degree, q, num, den })
    }

    fn eval(&self, lambda: &[Complex64]) -> Result<RationalMap, FamilyError> {
        let vars: Vec<(&str, Complex64)> = ["l1", "l2"].into_iter().zip(lambda.iter().copied()).collect();
        let coeffs = |es: &[Expr]| -> Result<Vec<Complex64>, FamilyError> {
            let mut v = es
                .iter()
                .map(|e| e.eval(&vars).map_err(|err| FamilyError::Parse { line: 0, message: err.to_string() }))
                .collect::<Result<Vec<_>, _>>()?;
            v.resize(self.degree + 1, Complex64::new(0.0, 0.0));
            Ok(v)
        };
        let (p, q) = (coeffs(&self.num)?, coeffs(&self.den)?);
        RationalMap::from_affine(&p, &q)
            .map_err(|source| FamilyError::DegenerateParameter { lambda: lambda.to_vec(), source })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// `z² + λ` with lift `(z0² + λ z1², z1²)`.
    Quadratic,
    /// `(σ₁, σ₂) ↦` [`m2_normal_form`].
    M2,
    User(UserFamily),
}

impl Family {
    pub fn parameter_dim(&self) -> usize {
        match self {
            Family::Quadratic => 1,
            Family::M2 => 2,
            Family::User(u) => u.q,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Quadratic => "quadratic",
            Family::M2 => "m2",
            Family::User(_) => "user",
        }
    }

    pub fn eval(&self, lambda: &[Complex64]) -> Result<RationalMap, FamilyError> {
        let q = self.parameter_dim();
        if lambda.len() != q {
            return Err(FamilyError::WrongDimension { expected: q, got: lambda.len() });
        }
        match self {
            Family::Quadratic => Ok(quadratic(lambda[0])),
            Family::M2 => m2_normal_form(&M2Point { sigma1: lambda[0], sigma2: lambda[1] }),
            Family::User(u) => u.eval(lambda),
        }
    }
}

pub fn quadratic(c: Complex64) -> RationalMap {
    let (zero, one) = (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
    RationalMap::from_affine(&[c, zero, one], &[one]).expect("z² + c is never degenerate")
}

/// Symmetric functions of the three fixed-point multipliers of a quadratic
/// rational map. The third one is `σ₃ = σ₁ − 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct M2Point {
    pub sigma1: Complex64,
    pub sigma2: Complex64,
}

/// The roots of `λ³ − σ₁λ² + σ₂λ − (σ₁ − 2)`, repeated by multiplicity.
pub fn m2_multipliers(p: &M2Point) -> [Complex64; 3] {
    let one = Complex64::new(1.0, 0.0);
    let cubic = Poly1::new(vec![-(p.sigma1 - 2.0), p.sigma2, -p.sigma1, one]);
    let r = root_approximations(&cubic).expect("monic cubic");
    [r[0], r[1], r[2]]
}

/// `z (z + μ₁) / (μ₂ z + 1)` with lift `(z0² + μ₁ z0 z1, μ₂ z0 z1 + z1²)`,
/// which fixes 0 and ∞ with multipliers μ₁ and μ₂. The pair is the one with
/// `|μ₁ μ₂ − 1|` largest.
pub fn m2_normal_form(p: &M2Point) -> Result<RationalMap, FamilyError> {
    let mu = m2_multipliers(p);
    let (i, j) = [(0, 1), (0, 2), (1, 2)]
        .into_iter()
        .max_by(|a, b| (mu[a.0] * mu[a.1] - 1.0).norm().total_cmp(&(mu[b.0] * mu[b.1] - 1.0).norm()))
        .unwrap();
    let (m1, m2) = (mu[i], mu[j]);
    // all three products equal 1 only for μ = (1, 1, 1), where the computed
    // triple root is only accurate to about the cube root of machine precision
    let triple = (p.sigma1 - 3.0).norm() + (p.sigma2 - 3.0).norm();
    if (m1 * m2 - 1.0).norm() < M2_GUARD || triple < M2_GUARD {
        return Err(FamilyError::UnrepresentablePoint(p.sigma1, p.sigma2));
    }
    let (zero, one) = (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
    RationalMap::from_affine(&[zero, m1, one], &[one, m2]).map_err(|source| FamilyError::DegenerateParameter {
        lambda: vec![p.sigma1, p.sigma2],
        source,
    })
}

/// `(σ₁, σ₂)` of a quadratic map from its fixed-point multipliers.
pub fn m2_coordinates(f: &RationalMap) -> Result<M2Point, FamilyError> {
    let mut mu = Vec::with_capacity(3);
    for cy in periodic_cycles(f, 1, false, &CycleConfig::default())? {
        mu.extend(std::iter::repeat_n(cy.multiplier, cy.multiplicity));
    }
    let sigma1 = mu.iter().sum();
    let mut sigma2 = Complex64::new(0.0, 0.0);
    for a in 0..mu.len() {
        for b in (a + 1)..mu.len() {
            sigma2 += mu[a] * mu[b];
        }
    }
    Ok(M2Point { sigma1, sigma2 })
}

/// Resolves `builtin:quadratic(c=…)`, `builtin:power(d=…)` and
/// `builtin:m2(s1=…,s2=…)`.
pub fn parse_builtin(spec: &str) -> Result<RationalMap, FamilyError> {
    let unknown = || FamilyError::UnknownBuiltin(spec.to_string());
    let body = spec.strip_prefix("builtin:").ok_or_else(unknown)?;
    let (name, args) = match body.split_once('(') {
        Some((n, rest)) => (n.trim(), rest.strip_suffix(')').ok_or_else(unknown)?),
        None => (body.trim(), ""),
    };
    let mut kv = Vec::new();
    for part in args.split(',').filter(|s| !s.trim().is_empty()) {
        let (k, v) = part.split_once('=').ok_or_else(unknown)?;
        let value = crate::maps::parse_complex(v.trim())
            .map_err(|e| FamilyError::Parse { line: 0, message: format!("{spec}: {e}") })?;
        kv.push((k.trim().to_string(), value));
    }
    let get = |key: &str, default: Option<Complex64>| {
        kv.iter().find(|(k, _)| k == key).map(|(_, v)| *v).or(default).ok_or_else(unknown)
    };
    if kv.iter().any(|(k, _)| !matches!((name, k.as_str()), ("quadratic", "c") | ("power", "d") | ("m2", "s1" | "s2"))) {
        return Err(unknown());
    }
    match name {
        "quadratic" => Ok(quadratic(get("c", Some(Complex64::new(0.0, 0.0)))?)),
        "power" => {
            let d = get("d", Some(Complex64::new(2.0, 0.0)))?;
            if d.im != 0.0 || d.re.fract() != 0.0 || d.re < 2.0 || d.re > 64.0 {
                return Err(FamilyError::Map(MapError::DegreeTooLow(d.re.max(0.0) as usize)));
            }
            Ok(RationalMap::power(d.re as usize))
        }
        "m2" => m2_normal_form(&M2Point { sigma1: get("s1", None)?, sigma2: get("s2", None)? }),
        _ => Err(unknown()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerSolution {
    pub lambda: Complex64,
    /// A point of the cycle.
    pub point: P1Point,
    /// Multiplier recomputed from the exact-period cycle search.
    pub multiplier: Complex64,
    /// `|multiplier − η|`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerLocusResult {
    pub n: usize,
    pub eta: Complex64,
    pub solutions: Vec<PerSolution>,
    pub seeds: usize,
    /// Seeds whose Newton iteration failed or left the box.
    pub diverged: usize,
    /// Converged seeds rejected by the exact-period re-verification.
    pub rejected: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct PerConfig {
    /// Seeding grid nodes per axis.
    pub grid: usize,
    pub max_newton: usize,
    /// Required `|multiplier − η|` in the re-verification.
    pub verify_tol: f64,
    pub cycles: CycleConfig,
}

impl Default for PerConfig {
    fn default() -> Self {
        PerConfig { grid: 60, max_newton: 60, verify_tol: 1e-7, cycles: CycleConfig::default() }
    }
}

/// Parameter rectangle `[re0, re1] × [im0, im1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rect {
    pub re0: f64,
    pub re1: f64,
    pub im0: f64,
    pub im1: f64,
}

impl Rect {
    pub fn new(re0: f64, re1: f64, im0: f64, im1: f64) -> Rect {
        Rect { re0, re1, im0, im1 }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.re0 && z.re <= self.re1 && z.im >= self.im0 && z.im <= self.im1
    }

    /// Node `(i, j)` of an `n × m` grid including both ends.
    pub fn node(&self, i: usize, j: usize, n: usize, m: usize) -> Complex64 {
        let t = |k: usize, n: usize| if n > 1 { k as f64 / (n - 1) as f64 } else { 0.5 };
        Complex64::new(self.re0 + (self.re1 - self.re0) * t(i, n), self.im0 + (self.im1 - self.im0) * t(j, m))
    }
}

/// Per(n, η) in a one-parameter family.
pub fn per_locus(fam: &Family, n: usize, eta: Complex64, search: Rect, config: &PerConfig) -> Result<PerLocusResult, FamilyError> {
    if fam.parameter_dim() != 1 {
        return Err(FamilyError::WrongDimension { expected: 1, got: fam.parameter_dim() });
    }
    Ok(per_locus_with(&|l| fam.eval(&[l]), n, eta, search, config))
}

/// Per(n, η) for the family `eval`.
///
/// Seeds are grid nodes where `min over period-n cycles of |m − η|` is a
/// local minimum. Each seed is refined by Newton on the pair `(λ, x)` with
/// `f_λ^n(x) = x` and `(f_λ^n)′(x) = η`, which stays regular where the cycle
/// is parabolic. Converged solutions are re-verified with an independent
/// exact-period cycle search.
pub fn per_locus_with(
    eval: &(dyn Fn(Complex64) -> Result<RationalMap, FamilyError> + Sync),
    n: usize,
    eta: Complex64,
    search: Rect,
    config: &PerConfig,
) -> PerLocusResult {
    let g = config.grid.max(2);
    let phi: Vec<Option<(f64, P1Point)>> = (0..g * g)
        .into_par_iter()
        .map(|k| {
            let lambda = search.node(k % g, k / g, g, g);
            let f = eval(lambda).ok()?;
            periodic_cycles(&f, n, false, &config.cycles)
                .ok()?
                .into_iter()
                .filter(|cy| !persistent(eval, lambda, n, eta, cy))
                .map(|cy| ((cy.multiplier - eta).norm(), cy.points[0]))
                .min_by(|a, b| a.0.total_cmp(&b.0))
        })
        .collect();
    let mut seeds = Vec::new();
    for j in 0..g {
        for i in 0..g {
            let Some((v, p)) = phi[j * g + i] else { continue };
            let mut is_min = true;
            for dj in -1i64..=1 {
                for di in -1i64..=1 {
                    let (ii, jj) = (i as i64 + di, j as i64 + dj);
                    if (di, dj) == (0, 0) || ii < 0 || jj < 0 || ii >= g as i64 || jj >= g as i64 {
                        continue;
                    }
                    if let Some((w, _)) = phi[jj as usize * g + ii as usize] {
                        // ties broken by index so plateaus yield one seed
                        let k = jj as usize * g + ii as usize;
                        if w < v || (w == v && k < j * g + i) {
                            is_min = false;
                        }
                    }
                }
            }
            if is_min {
                seeds.push((search.node(i, j, g, g), p));
            }
        }
    }
    let refined: Vec<Option<(Complex64, P1Point)>> = seeds
        .par_iter()
        .map(|&(l, p)| newton_per(eval, n, eta, l, p, config.max_newton).filter(|(l, _)| search.contains(*l)))
        .collect();
    let diverged = refined.iter().filter(|r| r.is_none()).count();
    let mut candidates: Vec<(Complex64, P1Point)> = Vec::new();
    for (l, p) in refined.into_iter().flatten() {
        if !candidates.iter().any(|(m, _)| (m - l).norm() <= 1e-7 * l.norm().max(1.0)) {
            candidates.push((l, p));
        }
    }
    let verified: Vec<Option<PerSolution>> = candidates
        .par_iter()
        .map(|&(lambda, _)| {
            let f = eval(lambda).ok()?;
            let cycles = periodic_cycles(&f, n, false, &config.cycles).ok()?;
            let best = cycles
                .iter()
                .filter(|cy| !persistent(eval, lambda, n, eta, cy))
                .min_by(|a, b| (a.multiplier - eta).norm().total_cmp(&(b.multiplier - eta).norm()))?;
            let residual = (best.multiplier - eta).norm();
            (residual < config.verify_tol).then_some(PerSolution {
                lambda,
                point: best.points[0],
                multiplier: best.multiplier,
                residual,
            })
        })
        .collect();
    let rejected = verified.iter().filter(|v| v.is_none()).count();
    let mut solutions: Vec<PerSolution> = verified.into_iter().flatten().collect();
    solutions.sort_by(|a, b| a.lambda.re.total_cmp(&b.lambda.re).then(a.lambda.im.total_cmp(&b.lambda.im)));
    PerLocusResult { n, eta, solutions, seeds: seeds.len(), diverged, rejected }
}

/// Whether `cy` has multiplier `η` and keeps it under a parameter
/// perturbation, like the superattracting fixed point ∞ of polynomial
/// families. Such cycles lie over the whole family and are not part of the
/// locus being solved for.
fn persistent(
    eval: &(dyn Fn(Complex64) -> Result<RationalMap, FamilyError> + Sync),
    lambda: Complex64,
    n: usize,
    eta: Complex64,
    cy: &Cycle,
) -> bool {
    if (cy.multiplier - eta).norm() > 1e-12 {
        return false;
    }
    let delta = Complex64::new(1e-3, 7e-4) * lambda.norm().max(1.0);
    [lambda + delta, lambda - delta].iter().all(|&l| {
        eval(l).is_ok_and(|g| (refine_cycle(&g, n, &cy.points[0]).multiplier - eta).norm() <= 1e-12)
    })
}

/// Damped Newton on `(λ, x) ↦ (f_λ^n(x) − x, (f_λ^n)′(x) − η)` with
/// central-difference Jacobian; `x` stays in the chart of the seed point.
fn newton_per(
    eval: &(dyn Fn(Complex64) -> Result<RationalMap, FamilyError> + Sync),
    n: usize,
    eta: Complex64,
    lambda0: Complex64,
    p0: P1Point,
    max_iter: usize,
) -> Option<(Complex64, P1Point)> {
    let affine = matches!(p0, P1Point::Affine(_));
    let chart_point = |x: Complex64| if affine { P1Point::Affine(x) } else { P1Point::Reciprocal(x) };
    let residual = |l: Complex64, x: Complex64| -> Option<[Complex64; 2]> {
        let f = eval(l).ok()?;
        let (y, m) = orbit_in_chart(&f, &chart_point(x), n)?;
        let r = [y - x, m - eta];
        (r[0].is_finite() && r[1].is_finite()).then_some(r)
    };
    let size = |r: &[Complex64; 2]| r[0].norm().hypot(r[1].norm());
    let mut l = lambda0;
    let mut x = match p0 {
        P1Point::Affine(z) | P1Point::Reciprocal(z) => z,
    };
    let mut r = residual(l, x)?;
    for _ in 0..max_iter {
        let hl = 1e-6 * l.norm().max(1.0);
        let hx = 1e-6 * x.norm().max(1.0);
        let rl1 = residual(l + hl, x)?;
        let rl0 = residual(l - hl, x)?;
        let rx1 = residual(l, x + hx)?;
        let rx0 = residual(l, x - hx)?;
        let j = [
            [(rl1[0] - rl0[0]) / (2.0 * hl), (rx1[0] - rx0[0]) / (2.0 * hx)],
            [(rl1[1] - rl0[1]) / (2.0 * hl), (rx1[1] - rx0[1]) / (2.0 * hx)],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det.norm_sqr() == 0.0 || !det.is_finite() {
            return None;
        }
        let dl = (j[1][1] * r[0] - j[0][1] * r[1]) / det;
        let dx = (j[0][0] * r[1] - j[1][0] * r[0]) / det;
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..12 {
            let (l2, x2) = (l - dl * t, x - dx * t);
            if let Some(r2) = residual(l2, x2) {
                if size(&r2) < size(&r) || size(&r) < 1e-13 {
                    accepted = Some((l2, x2, r2));
                    break;
                }
            }
            t *= 0.5;
        }
        let (l2, x2, r2) = accepted?;
        let step = (l2 - l).norm() + (x2 - x).norm();
        l = l2;
        x = x2;
        r = r2;
        if step <= 1e-14 * (1.0 + l.norm()) || size(&r) <= 1e-14 {
            break;
        }
    }
    (size(&r) < 1e-9).then(|| {
        let p = chart_point(x);
        let [a, b] = p.lift();
        (l, P1Point::from_homogeneous(a, b))
    })
}

/// Points of Per(n, η) in M₂: for each `σ₁` on a `g1 × g1` grid of
/// `sigma1_box`, the Per(n, η) solutions `σ₂ ∈ sigma2_box` of the slice.
pub fn per_curve_m2(
    n: usize,
    eta: Complex64,
    sigma1_box: Rect,
    g1: usize,
    sigma2_box: Rect,
    config: &PerConfig,
) -> Vec<M2Point> {
    let mut out = Vec::new();
    for j in 0..g1 {
        for i in 0..g1 {
            let s1 = sigma1_box.node(i, j, g1, g1);
            let slice = move |s2: Complex64| m2_normal_form(&M2Point { sigma1: s1, sigma2: s2 });
            let res = per_locus_with(&slice, n, eta, sigma2_box, config);
            out.extend(res.solutions.iter().map(|s| M2Point { sigma1: s1, sigma2: s.lambda }));
        }
    }
    out
}
