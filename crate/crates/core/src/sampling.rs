//! Samplers for μ_f (inverse iteration), μ_F (μ_f lifted to `{G_F = 0}`),
//! the unit-sphere measure m, the Fubini–Study measure ω on P¹ and the unit
//! torus, plus Monte-Carlo integration against them.
//!
//! Samples are produced in fixed blocks of [`BLOCK`] draws. Block `b` of a
//! run with seed `s` uses `ChaCha8Rng::seed_from_u64(s)` on stream `b`, so
//! every block is reproducible on its own and estimates do not depend on
//! how blocks are distributed over threads. Block moments are merged in
//! block order.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::greenfn::{self, GreenError, MAX_DIM};
use crate::maps::{MapError, RationalMap};
use crate::point::P1Point;

pub const BLOCK: usize = 4096;
pub const DEFAULT_BURN_IN: usize = 30;
/// Backward steps between recorded μ_f draws. Consecutive steps of the walk
/// are correlated (lag-one autocorrelation up to 0.75 on random quadratics),
/// which would make `sd/√n` understate the error; at lag 8 it is below 0.03.
pub const MU_F_THIN: usize = 8;
/// Default starting point of the backward orbit.
pub const MU_F_START: Complex64 = Complex64::new(0.5, 0.31);
/// Consecutive backward steps with fewer than `d` distinct preimages that
/// mark the orbit as exceptional.
const EXCEPTIONAL_STEPS: usize = 5;
/// Distinct preimages are those farther apart than this (chordal).
const DISTINCT_PREIMAGE: f64 = 1e-9;
/// Tolerance of the Green evaluations inside samplers and integrands.
pub const SAMPLE_GREEN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplingError {
    #[error("backward orbit collapsed onto fewer than d preimages for {0} consecutive steps")]
    ExceptionalOrbit(usize),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Green(#[from] GreenError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MCEstimate {
    pub value: f64,
    /// Sample standard deviation over `sqrt(n_samples)`.
    pub stderr: f64,
    pub n_samples: u64,
    /// Draws whose integrand was not finite.
    pub rejected: u64,
}

impl MCEstimate {
    /// Sum of independent estimates.
    pub fn plus(&self, other: &MCEstimate) -> MCEstimate {
        MCEstimate {
            value: self.value + other.value,
            stderr: self.stderr.hypot(other.stderr),
            n_samples: self.n_samples + other.n_samples,
            rejected: self.rejected + other.rejected,
        }
    }

    /// `a·self + b`.
    pub fn affine(&self, a: f64, b: f64) -> MCEstimate {
        MCEstimate { value: a * self.value + b, stderr: a.abs() * self.stderr, ..*self }
    }

    /// An exactly known value.
    pub fn exact(value: f64) -> MCEstimate {
        MCEstimate { value, stderr: 0.0, n_samples: 0, rejected: 0 }
    }
}

/// Streaming mean and second central moment.
#[derive(Debug, Clone, Copy, Default)]
pub struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
    rejected: u64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        if !x.is_finite() {
            self.rejected += 1;
            return;
        }
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Chan et al. pairwise combination.
    pub fn merge(&mut self, other: &Moments) {
        self.rejected += other.rejected;
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            let rejected = self.rejected;
            *self = *other;
            self.rejected = rejected;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        self.mean += delta * other.n as f64 / n as f64;
        self.m2 += other.m2 + delta * delta * (self.n as f64 * other.n as f64) / n as f64;
        self.n = n;
    }

    pub fn estimate(&self) -> MCEstimate {
        let stderr = if self.n > 1 { (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt() } else { 0.0 };
        let value = if self.n > 0 { self.mean } else { f64::NAN };
        MCEstimate { value, stderr, n_samples: self.n, rejected: self.rejected }
    }
}

/// SplitMix64 finalizer; derives independent seeds such as per-cell substreams.
pub fn substream_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(0x632b_e59b_d9b4_e019);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn block_rng(seed: u64, block: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block as u64);
    rng
}

/// One draw from a sampler.
#[derive(Debug, Clone, Copy)]
pub enum Sample<'a> {
    Point(P1Point),
    Vector(&'a [Complex64]),
}

impl Sample<'_> {
    /// The point of P¹, for point samples and for vectors of C².
    pub fn point(&self) -> P1Point {
        match *self {
            Sample::Point(p) => p,
            Sample::Vector(v) => P1Point::from_homogeneous(v[0], v[1]),
        }
    }

    pub fn vector(&self) -> Option<&[Complex64]> {
        match self {
            Sample::Vector(v) => Some(v),
            Sample::Point(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum MeasureKind<'a> {
    /// μ_f on P¹, by inverse iteration.
    MuF(&'a RationalMap),
    /// μ_F on C², μ_f samples lifted to `{G_F = 0}`.
    MuFLift(&'a RationalMap),
    /// Normalized Lebesgue measure m on the unit sphere of C^dim.
    Sphere { dim: usize },
    /// Fubini–Study probability measure ω on P¹.
    FubiniStudy,
    /// Haar measure on the unit torus of C^dim.
    Torus { dim: usize },
}

#[derive(Debug, Clone, Copy)]
pub struct MeasureSampler<'a> {
    pub kind: MeasureKind<'a>,
    pub seed: u64,
    pub burn_in: usize,
}

impl<'a> MeasureSampler<'a> {
    pub fn new(kind: MeasureKind<'a>, seed: u64) -> Self {
        MeasureSampler { kind, seed, burn_in: DEFAULT_BURN_IN }
    }

    /// Feeds draws `block·BLOCK .. block·BLOCK + count` to `visit`.
    pub fn run_block(
        &self,
        block: usize,
        count: usize,
        visit: &mut dyn FnMut(Sample<'_>),
    ) -> Result<(), SamplingError> {
        let mut rng = block_rng(self.seed, block);
        match self.kind {
            MeasureKind::MuF(f) => {
                let mut chain = BackwardOrbit::start(f, &mut rng, self.burn_in)?;
                for _ in 0..count {
                    visit(Sample::Point(chain.advance(&mut rng, MU_F_THIN)?));
                }
            }
            MeasureKind::MuFLift(f) => {
                let mut chain = BackwardOrbit::start(f, &mut rng, self.burn_in)?;
                for _ in 0..count {
                    let p = chain.advance(&mut rng, MU_F_THIN)?;
                    let v = greenfn::lift_to_zero_level(f, &p, SAMPLE_GREEN_TOL)?;
                    visit(Sample::Vector(&v));
                }
            }
            MeasureKind::Sphere { dim } => {
                assert!(dim <= MAX_DIM);
                let mut v = [Complex64::new(0.0, 0.0); MAX_DIM];
                for _ in 0..count {
                    sphere_point(&mut rng, &mut v[..dim]);
                    visit(Sample::Vector(&v[..dim]));
                }
            }
            MeasureKind::FubiniStudy => {
                for _ in 0..count {
                    visit(Sample::Point(fubini_study_point(&mut rng)));
                }
            }
            MeasureKind::Torus { dim } => {
                assert!(dim <= MAX_DIM);
                let mut v = [Complex64::new(0.0, 0.0); MAX_DIM];
                for _ in 0..count {
                    for x in &mut v[..dim] {
                        *x = Complex64::from_polar(1.0, std::f64::consts::TAU * rng.random::<f64>());
                    }
                    visit(Sample::Vector(&v[..dim]));
                }
            }
        }
        Ok(())
    }

    /// The first `n` points of the stream (point-valued or C² samplers).
    pub fn points(&self, n: usize) -> Result<Vec<P1Point>, SamplingError> {
        let mut out = Vec::with_capacity(n);
        for (b, count) in blocks(n) {
            self.run_block(b, count, &mut |s| out.push(s.point()))?;
        }
        Ok(out)
    }
}

fn blocks(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n.div_ceil(BLOCK)).map(move |b| (b, BLOCK.min(n - b * BLOCK)))
}

fn sphere_point(rng: &mut ChaCha8Rng, out: &mut [Complex64]) {
    loop {
        for x in out.iter_mut() {
            *x = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        }
        let r = out.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if r > 0.0 {
            for x in out.iter_mut() {
                *x /= r;
            }
            return;
        }
    }
}

/// ω-distributed point by inverting its radial law in the affine chart:
/// `P(|w|² ≤ t) = t / (1 + t)`, with uniform argument.
fn fubini_study_point(rng: &mut ChaCha8Rng) -> P1Point {
    let u: f64 = rng.random();
    let theta = std::f64::consts::TAU * rng.random::<f64>();
    if u <= 0.5 {
        P1Point::Affine(Complex64::from_polar((u / (1.0 - u)).sqrt(), theta))
    } else {
        P1Point::Reciprocal(Complex64::from_polar(((1.0 - u) / u).sqrt(), theta))
    }
}

/// Backward orbit choosing one of the `d` preimages uniformly at each step.
pub struct BackwardOrbit<'a> {
    f: &'a RationalMap,
    current: P1Point,
    collapsed: usize,
}

impl<'a> BackwardOrbit<'a> {
    /// Starts at [`MU_F_START`], perturbing the start if the orbit turns out
    /// to be exceptional, and discards `burn_in` steps.
    pub fn start(f: &'a RationalMap, rng: &mut ChaCha8Rng, burn_in: usize) -> Result<Self, SamplingError> {
        let mut last = SamplingError::ExceptionalOrbit(EXCEPTIONAL_STEPS);
        for attempt in 0..4 {
            let w0 = MU_F_START + Complex64::new(0.0137, -0.0291) * attempt as f64;
            let mut orbit = BackwardOrbit { f, current: P1Point::from_affine(w0), collapsed: 0 };
            match (0..burn_in).try_for_each(|_| orbit.step(rng).map(|_| ())) {
                Ok(()) => return Ok(orbit),
                Err(e @ SamplingError::ExceptionalOrbit(_)) => last = e,
                Err(e) => return Err(e),
            }
        }
        Err(last)
    }

    /// `steps` backward steps; returns the final point.
    pub fn advance(&mut self, rng: &mut ChaCha8Rng, steps: usize) -> Result<P1Point, SamplingError> {
        for _ in 1..steps {
            self.step(rng)?;
        }
        self.step(rng)
    }

    pub fn step(&mut self, rng: &mut ChaCha8Rng) -> Result<P1Point, SamplingError> {
        let pre = self.f.preimages(&self.current)?;
        let d = pre.len();
        let mut distinct = 0;
        for (i, p) in pre.iter().enumerate() {
            if pre[..i].iter().all(|q| q.chordal_distance(p) > DISTINCT_PREIMAGE) {
                distinct += 1;
            }
        }
        if distinct < d {
            self.collapsed += 1;
            if self.collapsed >= EXCEPTIONAL_STEPS {
                return Err(SamplingError::ExceptionalOrbit(self.collapsed));
            }
        } else {
            self.collapsed = 0;
        }
        self.current = pre[rng.random_range(0..d)];
        Ok(self.current)
    }
}

/// `n` samples of μ_f.
pub fn sample_mu_f(f: &RationalMap, n: usize, seed: u64) -> Result<Vec<P1Point>, SamplingError> {
    MeasureSampler::new(MeasureKind::MuF(f), seed).points(n)
}

/// Monte-Carlo mean of `integrand` over `n` draws; blocks run in parallel and
/// are reduced in block order.
pub fn mc_integral<I>(sampler: &MeasureSampler<'_>, integrand: I, n: usize) -> Result<MCEstimate, SamplingError>
where
    I: Fn(Sample<'_>) -> f64 + Sync,
{
    let parts: Vec<Result<Moments, SamplingError>> = blocks(n)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(b, count)| {
            let mut m = Moments::default();
            sampler.run_block(b, count, &mut |s| m.push(integrand(s)))?;
            Ok(m)
        })
        .collect();
    let mut total = Moments::default();
    for p in parts {
        total.merge(&p?);
    }
    Ok(total.estimate())
}

/// `g_F(w)`, or NaN if the evaluation fails.
pub fn g_at(f: &RationalMap, p: &P1Point) -> f64 {
    greenfn::green_p1(f, p, SAMPLE_GREEN_TOL).map_or(f64::NAN, |g| g.value)
}

/// `B(F) = ∫ g_F (μ_f + ω)` as the sum of two independent estimates with
/// `n` draws each.
pub fn b_mc(f: &RationalMap, n: usize, seed: u64) -> Result<MCEstimate, SamplingError> {
    let mu = mc_integral(&MeasureSampler::new(MeasureKind::MuF(f), substream_seed(seed, 0)), |s| g_at(f, &s.point()), n)?;
    let om = mc_integral(
        &MeasureSampler::new(MeasureKind::FubiniStudy, substream_seed(seed, 1)),
        |s| g_at(f, &s.point()),
        n,
    )?;
    Ok(mu.plus(&om))
}

/// `log‖J_F‖₀(w) = log|det F′(v)| − (2d − 2) log‖v‖` for any lift `v` of `w`.
pub fn log_jacobian_norm(f: &RationalMap, p: &P1Point) -> f64 {
    let v = p.lift();
    let r = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    f.det_jacobian_at(v).norm().ln() - (2 * f.degree() - 2) as f64 * r.ln()
}

/// `∫_{P¹} log‖J_F‖₀ ω`.
pub fn jacobian_fs_integral(f: &RationalMap, n: usize, seed: u64) -> Result<MCEstimate, SamplingError> {
    mc_integral(&MeasureSampler::new(MeasureKind::FubiniStudy, seed), |s| log_jacobian_norm(f, &s.point()), n)
}

/// `∫_{C²} log|det F′| m`.
pub fn jacobian_sphere_integral(f: &RationalMap, n: usize, seed: u64) -> Result<MCEstimate, SamplingError> {
    mc_integral(
        &MeasureSampler::new(MeasureKind::Sphere { dim: 2 }, seed),
        |s| {
            let v = s.vector().expect("sphere samples are vectors");
            f.det_jacobian_at([v[0], v[1]]).norm().ln()
        },
        n,
    )
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
    fn moments_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37 % 101) as f64).sin()).collect();
        let mut all = Moments::default();
        xs.iter().for_each(|&x| all.push(x));
        let mut a = Moments::default();
        let mut b = Moments::default();
        xs[..313].iter().for_each(|&x| a.push(x));
        xs[313..].iter().for_each(|&x| b.push(x));
        a.merge(&b);
        let (e1, e2) = (all.estimate(), a.estimate());
        assert!((e1.value - e2.value).abs() < 1e-14 && (e1.stderr - e2.stderr).abs() < 1e-14);
        let mut r = Moments::default();
        r.push(f64::NAN);
        assert_eq!(r.estimate().rejected, 1);
    }

    #[test]
    fn square_samples_lie_on_circle() {
        let s = sample_mu_f(&RationalMap::power(2), 5000, 1).unwrap();
        let mean = s.iter().map(|p| (p.unit_lift()[0].norm() / p.unit_lift()[1].norm() - 1.0).abs()).sum::<f64>()
            / s.len() as f64;
        assert!(mean < 0.02);
    }

    #[test]
    fn chebyshev_samples_are_real() {
        let s = sample_mu_f(&quadratic(c(-2.0, 0.0)), 5000, 2).unwrap();
        for p in s {
            let z = p.to_affine().unwrap();
            assert!(z.im.abs() < 0.02 && z.re.abs() <= 2.0 + 1e-6);
        }
    }

    #[test]
    fn streams_are_reproducible() {
        let f = quadratic(c(-0.12, 0.75));
        assert_eq!(sample_mu_f(&f, 5000, 9).unwrap(), sample_mu_f(&f, 5000, 9).unwrap());
        assert_ne!(sample_mu_f(&f, 10, 9).unwrap(), sample_mu_f(&f, 10, 10).unwrap());
    }

    #[test]
    fn thinned_draws_are_nearly_uncorrelated() {
        // the unthinned walk has lag-one autocorrelation about 0.75 here
        let f = &crate::corpus::random_maps(8, &[2, 3], 77)[6].map;
        let xs: Vec<f64> = sample_mu_f(f, BLOCK, 5).unwrap().iter().map(|p| g_at(f, p)).collect();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let lag1 = xs.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum::<f64>() / (n - 1.0) / var;
        assert!(lag1.abs() < 0.08, "lag-one autocorrelation {lag1}");
    }

    #[test]
    fn probability_mass_is_one() {
        let f = quadratic(c(0.3, 0.1));
        let e = mc_integral(&MeasureSampler::new(MeasureKind::MuF(&f), 3), |_| 1.0, 3000).unwrap();
        assert_eq!(e.value, 1.0);
        assert_eq!(e.n_samples, 3000);
    }

    #[test]
    fn test_function_mean_agrees_between_seeds() {
        let f = quadratic(c(-0.12, 0.75));
        let phi = |s: Sample<'_>| s.point().unit_lift()[0].norm_sqr();
        let a = mc_integral(&MeasureSampler::new(MeasureKind::MuF(&f), 4), phi, 20000).unwrap();
        let b = mc_integral(&MeasureSampler::new(MeasureKind::MuF(&f), 5), phi, 20000).unwrap();
        assert!((a.value - b.value).abs() < 3.0 * a.stderr.hypot(b.stderr));
    }

    #[test]
    fn log_coordinate_on_sphere() {
        let e = mc_integral(
            &MeasureSampler::new(MeasureKind::Sphere { dim: 2 }, 6),
            |s| s.vector().unwrap()[1].norm().ln(),
            100_000,
        )
        .unwrap();
        assert!((e.value + 0.5).abs() < 3.0 * e.stderr, "{e:?}");
    }

    #[test]
    fn fubini_study_radial_law() {
        // ω({|w| ≤ 1}) = 1/2 and ∫ |w|²/(1+|w|²) ω = 1/2
        let e = mc_integral(
            &MeasureSampler::new(MeasureKind::FubiniStudy, 7),
            |s| {
                let [a, b] = s.point().unit_lift();
                a.norm_sqr() / (a.norm_sqr() + b.norm_sqr())
            },
            50_000,
        )
        .unwrap();
        assert!((e.value - 0.5).abs() < 3.0 * e.stderr);
    }

    #[test]
    fn exceptional_start_is_avoided() {
        // the backward orbit of 0.5+0.31i under z² never collapses, but the
        // sampler must still cope with a polynomial's exceptional point ∞
        let f = quadratic(c(0.0, 0.0));
        let mut rng = block_rng(0, 0);
        let mut orbit = BackwardOrbit { f: &f, current: P1Point::infinity(), collapsed: 0 };
        let err = (0..10).try_for_each(|_| orbit.step(&mut rng).map(|_| ()));
        assert!(matches!(err, Err(SamplingError::ExceptionalOrbit(_))));
    }
}
