//! The Lyapunov exponent `L(f)` of a rational map with respect to μ_f, by
//! four routes:
//!
//! * closed form from the critical directions and the resultant,
//!   `L(f) = Σ_j G_F(c̃_j) − log d − (2/d) log|Res F|`;
//! * ergodic average of `log|det F′|` over μ_F, minus `log d`;
//! * average of `log|det F′|` over repelling periodic points lifted to `{G_F = 0}`;
//! * the integral formula `L + log d = Σ_j g_F(c̃_j) − 2(d−1) B(F) + ∫ log‖J_F‖₀ ω`,
//!   with `B(F)` and the last integral by Monte Carlo.

use std::sync::Mutex;

use num_complex::Complex64;
use serde::Serialize;

use crate::greenfn::{self, GreenError, MAX_DIM};
use crate::maps::{all_cycles_dividing, CycleConfig, CycleKind, HomogeneousMap, Lift, MapError, RationalMap};
use crate::sampling::{self, substream_seed, MCEstimate, MeasureKind, MeasureSampler, SamplingError, SAMPLE_GREEN_TOL};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LyapunovError {
    #[error(transparent)]
    Green(#[from] GreenError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error("no repelling period-{0} points")]
    NoRepellingPoints(usize),
}

/// Smallest `L(f) − ½ log d` seen by [`closed_form`] in this process.
static LOWER_BOUND_MONITOR: Mutex<Option<Observed>> = Mutex::new(None);

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Observed {
    /// `min (L − ½ log d)`.
    pub min_margin: f64,
    pub value_at_min: f64,
    pub degree_at_min: usize,
    pub evaluations: u64,
}

fn observe(l: f64, d: usize) {
    let margin = l - 0.5 * (d as f64).ln();
    let mut guard = LOWER_BOUND_MONITOR.lock().unwrap_or_else(|e| e.into_inner());
    let o = guard.get_or_insert(Observed {
        min_margin: f64::INFINITY,
        value_at_min: f64::NAN,
        degree_at_min: d,
        evaluations: 0,
    });
    o.evaluations += 1;
    if margin < o.min_margin || margin.is_nan() {
        o.min_margin = margin;
        o.value_at_min = l;
        o.degree_at_min = d;
    }
}

/// The running minimum over every closed-form evaluation so far.
pub fn lower_bound_monitor() -> Option<Observed> {
    *LOWER_BOUND_MONITOR.lock().unwrap_or_else(|e| e.into_inner())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedForm {
    pub value: f64,
    /// `Σ_j G_F(c̃_j)`.
    pub sum_green: f64,
    /// `Σ_j g_F(c̃_j) = Σ_j (G_F(c̃_j) − log‖c̃_j‖)`.
    pub sum_g: f64,
    pub log_res: f64,
    /// `B(F) = log|Res| / (d(d−1)) − ½`.
    pub b_used: f64,
    pub factor_residual: f64,
    pub error_bound: f64,
}

/// Closed-form `L(f)`; Green values are computed to `tol`.
pub fn closed_form(f: &RationalMap, tol: f64) -> Result<ClosedForm, LyapunovError> {
    let d = f.degree();
    let df = d as f64;
    let crit = f.critical_points();
    let mut sum_green = 0.0;
    let mut sum_g = 0.0;
    let mut error_bound = 0.0;
    for v in &crit.vectors {
        let g = greenfn::green(f, v, tol)?;
        sum_green += g.value;
        sum_g += g.value - (v[0].norm_sqr() + v[1].norm_sqr()).sqrt().ln();
        error_bound += g.error_bound;
    }
    let log_res = f.resultant().norm().ln();
    let value = sum_green - df.ln() - 2.0 / df * log_res;
    observe(value, d);
    Ok(ClosedForm {
        value,
        sum_green,
        sum_g,
        log_res,
        b_used: log_res / (df * (df - 1.0)) - 0.5,
        factor_residual: crit.residual,
        error_bound,
    })
}

/// `L(f)` as the μ_F-average of `log|det F′|` minus `log d`.
pub fn ergodic(f: &RationalMap, n: usize, seed: u64) -> Result<MCEstimate, LyapunovError> {
    let log_d = (f.degree() as f64).ln();
    let est = sampling::mc_integral(
        &MeasureSampler::new(MeasureKind::MuFLift(f), seed),
        |s| {
            let v = s.vector().expect("lifted samples are vectors");
            f.det_jacobian_at([v[0], v[1]]).norm().ln()
        },
        n,
    )?;
    Ok(est.affine(1.0, -log_d))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CycleEstimate {
    pub value: f64,
    pub period: usize,
    /// Number of repelling fixed points of `f^n` used.
    pub count: usize,
    /// Number of non-repelling fixed points left out.
    pub excluded: usize,
}

/// `(1/N) Σ log|det F′(a_j)| − log d` over the repelling fixed points `a_j`
/// of `f^n`, each lifted to `{G_F = 0}`.
pub fn cycle_estimate(f: &RationalMap, n: usize, config: &CycleConfig) -> Result<CycleEstimate, LyapunovError> {
    let cycles = all_cycles_dividing(f, n, true, config)?;
    let mut sum = 0.0;
    let mut count = 0;
    let mut excluded = 0;
    for cy in &cycles {
        if cy.kind != Some(CycleKind::Repelling) {
            excluded += cy.points.len() * cy.multiplicity;
            continue;
        }
        for p in &cy.points {
            let v = greenfn::lift_to_zero_level(f, p, SAMPLE_GREEN_TOL)?;
            sum += f.det_jacobian_at(v).norm().ln();
            count += 1;
        }
    }
    if count == 0 {
        return Err(LyapunovError::NoRepellingPoints(n));
    }
    Ok(CycleEstimate { value: sum / count as f64 - (f.degree() as f64).ln(), period: n, count, excluded })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegralCheck {
    /// With `∫ log‖J_F‖₀ ω`.
    pub via_fubini_study: MCEstimate,
    /// With `∫ log|det F′| m`.
    pub via_sphere: MCEstimate,
    pub b_mc: MCEstimate,
}

/// `L(f)` from the integral formula, with each Monte-Carlo term on `n` draws.
pub fn integral_check(f: &RationalMap, n: usize, seed: u64) -> Result<IntegralCheck, LyapunovError> {
    let d = f.degree() as f64;
    let closed = closed_form(f, greenfn::DEFAULT_TOL)?;
    let b = sampling::b_mc(f, n, substream_seed(seed, 0))?;
    let jw = sampling::jacobian_fs_integral(f, n, substream_seed(seed, 1))?;
    let jm = sampling::jacobian_sphere_integral(f, n, substream_seed(seed, 2))?;
    let head = b.affine(-2.0 * (d - 1.0), closed.sum_g - d.ln());
    Ok(IntegralCheck { via_fubini_study: head.plus(&jw), via_sphere: head.plus(&jm), b_mc: b })
}

#[derive(Debug, Clone, Serialize)]
pub struct LyapunovReport {
    pub closed: Option<ClosedForm>,
    pub ergodic: Option<MCEstimate>,
    pub cycles: Option<CycleEstimate>,
    pub integral: Option<IntegralCheck>,
    pub degree: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct Methods {
    pub closed: bool,
    pub ergodic: bool,
    pub cycles: bool,
    pub integral: bool,
}

impl Methods {
    pub const ALL: Methods = Methods { closed: true, ergodic: true, cycles: true, integral: true };
}

/// Runs the selected methods with `samples` draws per Monte-Carlo term and
/// period `period` for the cycle average.
pub fn report(
    f: &RationalMap,
    methods: Methods,
    samples: usize,
    period: usize,
    seed: u64,
) -> Result<LyapunovReport, LyapunovError> {
    let cfg = CycleConfig::default();
    Ok(LyapunovReport {
        closed: methods.closed.then(|| closed_form(f, greenfn::DEFAULT_TOL)).transpose()?,
        ergodic: methods.ergodic.then(|| ergodic(f, samples, substream_seed(seed, 10))).transpose()?,
        cycles: methods.cycles.then(|| cycle_estimate(f, period, &cfg)).transpose()?,
        integral: methods.integral.then(|| integral_check(f, samples, substream_seed(seed, 11))).transpose()?,
        degree: f.degree(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagonalReport {
    pub degree: usize,
    pub k: usize,
    /// Largest `|G_F(z) − log max|z_j||` over the test grid.
    pub green_max_error: f64,
    /// `L(F)` from torus samples of μ_F, against `(k + 1) log d`.
    pub l_lift: MCEstimate,
    pub l_lift_expected: f64,
    /// `B(F)` for `k = 1`, against `C₁ = −½`.
    pub c1: Option<MCEstimate>,
}

/// Checks on `F = (z_0^d, …, z_k^d)`: the Green function on a fixed grid of
/// 100 points, `L(F)` over the torus, and `B(F)` when `k = 1`.
pub fn diagonal_checks(d: usize, k: usize, n: usize, seed: u64) -> Result<DiagonalReport, LyapunovError> {
    assert!(k + 1 <= MAX_DIM);
    let f = HomogeneousMap::diagonal(d, k);
    let mut green_max_error = 0.0f64;
    for i in 0..100 {
        // deterministic spread of moduli and phases
        let z: Vec<Complex64> = (0..=k)
            .map(|j| {
                let t = (i * (k + 1) + j) as f64;
                Complex64::from_polar(0.2 + 2.8 * (t * 0.618_033_988_75).fract(), 2.0 * t)
            })
            .collect();
        let g = greenfn::green(&f, &z, greenfn::DEFAULT_TOL)?.value;
        let expected = z.iter().map(|x| x.norm()).fold(0.0, f64::max).ln();
        green_max_error = green_max_error.max((g - expected).abs());
    }
    let l_lift = sampling::mc_integral(
        &MeasureSampler::new(MeasureKind::Torus { dim: k + 1 }, substream_seed(seed, 0)),
        |s| f.det_jacobian(s.vector().unwrap()).norm().ln(),
        n,
    )?;
    let c1 = if k == 1 {
        Some(sampling::b_mc(&RationalMap::power(d), n, substream_seed(seed, 1))?)
    } else {
        None
    };
    Ok(DiagonalReport {
        degree: d,
        k,
        green_max_error,
        l_lift,
        l_lift_expected: (k + 1) as f64 * (d as f64).ln(),
        c1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn quadratic(cv: Complex64) -> RationalMap {
        RationalMap::from_affine(&[cv, c(0.0, 0.0), c(1.0, 0.0)], &[c(1.0, 0.0)]).unwrap()
    }

    #[test]
    fn closed_form_of_power_maps() {
        for d in 2..=5 {
            let l = closed_form(&RationalMap::power(d), 1e-12).unwrap();
            assert!((l.value - (d as f64).ln()).abs() < 1e-10, "d={d}: {}", l.value);
            assert!((l.sum_green - 2.0 * (d as f64).ln()).abs() < 1e-10);
            assert!((l.b_used + 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn quadratic_polynomials() {
        for cv in [c(0.0, 0.0), c(-1.0, 0.0), c(-2.0, 0.0), c(0.25, 0.0)] {
            assert!((closed_form(&quadratic(cv), 1e-12).unwrap().value - 2f64.ln()).abs() < 1e-10);
        }
        // outside the Mandelbrot set, L = log 2 + G_c(0)
        let f = quadratic(c(4.0, 0.0));
        let g0 = greenfn::green(&f, &[c(0.0, 0.0), c(1.0, 0.0)], 1e-12).unwrap().value;
        assert!(g0 > 0.5);
        assert!((closed_form(&f, 1e-12).unwrap().value - 2f64.ln() - g0).abs() < 1e-10);
    }

    #[test]
    fn ergodic_on_square_is_exact() {
        let e = ergodic(&RationalMap::power(2), 5000, 1).unwrap();
        assert!((e.value - 2f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn cycle_estimate_on_square() {
        let e = cycle_estimate(&RationalMap::power(2), 3, &CycleConfig::default()).unwrap();
        assert_eq!(e.count, 7);
        assert_eq!(e.excluded, 2);
        assert!((e.value - 2f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn integral_formula_on_square() {
        let r = integral_check(&RationalMap::power(2), 50_000, 3).unwrap();
        let tol = |e: &MCEstimate| 1e-2f64.max(3.0 * e.stderr);
        assert!((r.via_fubini_study.value - 2f64.ln()).abs() < tol(&r.via_fubini_study));
        assert!((r.via_sphere.value - 2f64.ln()).abs() < tol(&r.via_sphere));
    }

    #[test]
    fn monitor_records_minimum() {
        closed_form(&RationalMap::power(2), 1e-12).unwrap();
        let o = lower_bound_monitor().unwrap();
        assert!(o.evaluations >= 1 && o.min_margin <= 0.5 * 2f64.ln() + 1e-9);
    }
}
