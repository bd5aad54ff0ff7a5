//! The acceptance criteria as runnable checks.
//!
//! `Full` runs every criterion at its stated size. `Quick` divides sample
//! counts by ten, scans the quadratic family on a coarser grid, skips the
//! Per-locus support comparison and keeps only the calibration parts of the
//! Monge–Ampère criterion.

use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;

use crate::algebra::{sylvester_resultant, BinaryForm};
use crate::bifurcation::{self, ddc_mass, ma2_mass, scan_l, MassField, ScalarField, ScanMethod};
use crate::corpus::{corpus, random_maps};
use crate::families::{per_locus, quadratic, Family, PerConfig, Rect};
use crate::greenfn::{self, DEFAULT_TOL};
use crate::lyapunov::{self, closed_form, cycle_estimate, ergodic, integral_check, lower_bound_monitor};
use crate::maps::{CycleConfig, RationalMap};
use crate::sampling::{self, substream_seed, MCEstimate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Quick,
    Full,
}

/// Deliberate defects for checking that the suite notices them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    /// Uses `−log|Res|` in the DeMarco identity.
    FlipResultantSign,
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub level: Level,
    pub seed: u64,
    /// Restricts the run to these criteria; `None` runs the level's default set.
    pub only: Option<Vec<u32>>,
    pub mutation: Option<Mutation>,
}

impl VerifyOptions {
    pub fn new(level: Level) -> Self {
        VerifyOptions { level, seed: 20_240_601, only: None, mutation: None }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    /// The deciding measurement (the worst case where several are checked).
    pub measured: f64,
    /// The bound `measured` was held to.
    pub tolerance: f64,
    pub details: Vec<String>,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub level: Level,
    pub seed: u64,
    pub criteria: Vec<CriterionResult>,
    pub passed: bool,
    pub seconds: f64,
}

pub const ALL_CRITERIA: [u32; 12] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12];
pub const QUICK_CRITERIA: [u32; 11] = [1, 2, 3, 4, 5, 6, 7, 8, 10, 11, 12];

/// Box of the Monge–Ampère scan, `(σ₁ box, σ₂ box)`.
pub const M2_BOXES: (Rect, Rect) =
    (Rect { re0: -8.0, re1: 6.0, im0: -7.0, im1: 7.0 }, Rect { re0: -10.0, re1: 20.0, im0: -15.0, im1: 15.0 });
pub const M2_RESOLUTION: usize = 40;
pub const M2_SMOOTHING: f64 = 2.0;
pub const QUADRATIC_BOX: Rect = Rect { re0: -2.5, re1: 1.5, im0: -2.0, im1: 2.0 };

struct Ctx {
    level: Level,
    seed: u64,
    mutation: Option<Mutation>,
    quadratic: Option<(ScalarField, MassField)>,
    m2_scanned: bool,
}

impl Ctx {
    fn samples(&self, full: usize) -> usize {
        match self.level {
            Level::Full => full,
            Level::Quick => full / 10,
        }
    }

    fn sub(&self, criterion: u32) -> u64 {
        substream_seed(self.seed, criterion as u64)
    }
}

struct Outcome {
    name: &'static str,
    passed: bool,
    measured: f64,
    tolerance: f64,
    details: Vec<String>,
}

/// Tracks the case with the largest `|diff| / tol`.
struct Worst {
    ratio: f64,
    diff: f64,
    tol: f64,
    label: String,
    failures: usize,
}

impl Worst {
    fn new() -> Self {
        Worst { ratio: f64::NEG_INFINITY, diff: f64::NAN, tol: f64::NAN, label: String::new(), failures: 0 }
    }

    fn check(&mut self, diff: f64, tol: f64, label: impl Into<String>) -> bool {
        let diff = diff.abs();
        let ok = diff < tol;
        let ratio = if diff.is_nan() { f64::INFINITY } else { diff / tol };
        if !ok {
            self.failures += 1;
        }
        if ratio > self.ratio {
            *self = Worst { ratio, diff, tol, label: label.into(), failures: self.failures };
        }
        ok
    }

    /// Records a case that could not be computed.
    fn fail(&mut self, label: impl Into<String>) {
        self.failures += 1;
        if self.ratio < f64::INFINITY {
            *self = Worst { ratio: f64::INFINITY, diff: f64::NAN, tol: self.tol, label: label.into(), failures: self.failures };
        }
    }

    fn passed(&self) -> bool {
        self.failures == 0 && self.ratio.is_finite()
    }

    fn describe(&self, what: &str) -> String {
        format!("{what}: worst {} |diff| = {:.3e} vs {:.3e}; {} failing", self.label, self.diff, self.tol, self.failures)
    }
}

pub fn run(opts: &VerifyOptions) -> VerifyReport {
    let start = Instant::now();
    let mut ids: Vec<u32> = match &opts.only {
        Some(v) => v.clone(),
        None => match opts.level {
            Level::Full => ALL_CRITERIA.to_vec(),
            Level::Quick => QUICK_CRITERIA.to_vec(),
        },
    };
    ids.sort_unstable();
    ids.dedup();
    let mut ctx = Ctx { level: opts.level, seed: opts.seed, mutation: opts.mutation, quadratic: None, m2_scanned: false };
    // the lower bound is judged after every other evaluation has been seen
    let order: Vec<u32> = ids.iter().copied().filter(|&i| i != 7).chain(ids.iter().copied().filter(|&i| i == 7)).collect();
    let mut results = Vec::new();
    for id in order {
        let t = Instant::now();
        let o = run_one(id, &mut ctx);
        results.push(CriterionResult {
            id,
            name: o.name.into(),
            passed: o.passed,
            measured: o.measured,
            tolerance: o.tolerance,
            details: o.details,
            seconds: t.elapsed().as_secs_f64(),
        });
    }
    results.sort_by_key(|r| r.id);
    let passed = results.iter().all(|r| r.passed);
    VerifyReport { level: opts.level, seed: opts.seed, criteria: results, passed, seconds: start.elapsed().as_secs_f64() }
}

fn run_one(id: u32, ctx: &mut Ctx) -> Outcome {
    match id {
        1 => resultant_normalization(ctx),
        2 => green_functional_equation(ctx),
        3 => demarco_identity(ctx),
        4 => jacobian_integrals(ctx),
        5 => lyapunov_cross_method(ctx),
        6 => iterate_law(ctx),
        7 => lower_bound(ctx),
        8 => quadratic_mass(ctx),
        9 => support_vs_per(ctx),
        10 => cardioid_harmonicity(ctx),
        11 => monge_ampere(ctx),
        12 => determinism(ctx),
        _ => Outcome {
            name: "unknown criterion",
            passed: false,
            measured: f64::NAN,
            tolerance: f64::NAN,
            details: vec![format!("no criterion {id}")],
        },
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn resultant_normalization(ctx: &Ctx) -> Outcome {
    let one = c(1.0, 0.0);
    let mut exact = true;
    let mut details = Vec::new();
    for d in 2..=6 {
        let r = sylvester_resultant(&BinaryForm::monomial(d, 0, one), &BinaryForm::monomial(d, d, one));
        let ok = r == Ok(one);
        exact &= ok;
        if !ok {
            details.push(format!("Res(z0^{d}, z1^{d}) = {r:?}"));
        }
    }
    let mut worst = Worst::new();
    let maps = random_maps(25, &[2, 3, 4, 5, 6], ctx.sub(1));
    for (i, m) in maps.iter().enumerate() {
        let d = m.map.degree();
        let a = Complex64::from_polar(0.5 + 0.1 * i as f64, 0.7 * i as f64);
        let p = m.map.numerator().scale(a);
        let q = m.map.denominator().scale(a);
        match sylvester_resultant(&p, &q) {
            Ok(r) => {
                let expected = a.powu(2 * d as u32) * m.map.resultant();
                worst.check((r - expected).norm() / expected.norm(), 1e-12, format!("{} a={a:.3}", m.name));
            }
            Err(e) => worst.fail(format!("{}: {e}", m.name)),
        }
    }
    details.insert(0, format!("Res(z0^d, z1^d) == 1 exactly for d = 2..6: {exact}"));
    details.push(worst.describe("homogeneity, relative"));
    Outcome {
        name: "resultant normalization and homogeneity",
        passed: exact && worst.passed(),
        measured: worst.diff,
        tolerance: worst.tol,
        details,
    }
}

fn green_functional_equation(ctx: &Ctx) -> Outcome {
    let maps = random_maps(100, &[2, 3], ctx.sub(2));
    let mut worst = Worst::new();
    for (i, m) in maps.iter().enumerate() {
        let f = &m.map;
        let d = f.degree() as f64;
        let t = i as f64;
        let z = [Complex64::from_polar(0.3 + (t * 0.618).fract() * 2.0, 1.3 * t), Complex64::from_polar(0.3 + (t * 0.414).fract() * 2.0, 0.4 - 2.1 * t)];
        let fz = f.eval_lift(z);
        match (greenfn::green(f, &z, DEFAULT_TOL), greenfn::green(f, &fz, DEFAULT_TOL)) {
            (Ok(g), Ok(gf)) => {
                worst.check(gf.value - d * g.value, (d + 1.0) * 1e-12, m.name.clone());
            }
            _ => worst.fail(m.name.clone()),
        }
    }
    let mut diag = Worst::new();
    for (d, k) in [(2, 1), (3, 1), (2, 2), (3, 2), (4, 3)] {
        match lyapunov::diagonal_checks(d, k, 4096, ctx.sub(2)) {
            Ok(r) => {
                diag.check(r.green_max_error, 1e-12, format!("d={d} k={k}"));
            }
            Err(e) => diag.fail(format!("d={d} k={k}: {e}")),
        }
    }
    let (measured, tolerance) = if worst.ratio >= diag.ratio { (worst.diff, worst.tol) } else { (diag.diff, diag.tol) };
    Outcome {
        name: "Green functional equation and diagonal Green function",
        passed: worst.passed() && diag.passed(),
        measured,
        tolerance,
        details: vec![worst.describe("|G(F(z)) - d G(z)| over 100 (F, z)"), diag.describe("|G - log max|z_j|| on 100-point grids")],
    }
}

fn demarco_identity(ctx: &Ctx) -> Outcome {
    let n = 200_000;
    // At 2e5 samples the 5e-3 floor dominates 3·stderr; the quick level keeps
    // that and cuts the map count instead, for the same 10× fewer samples.
    let count = match ctx.level {
        Level::Full => 50,
        Level::Quick => 5,
    };
    let sign = if ctx.mutation == Some(Mutation::FlipResultantSign) { -1.0 } else { 1.0 };
    let mut worst = Worst::new();
    for (i, m) in random_maps(50, &[2, 3], ctx.sub(3)).iter().take(count).enumerate() {
        let d = m.map.degree() as f64;
        let expected = sign * m.map.resultant().norm().ln() / (d * (d - 1.0)) - 0.5;
        match sampling::b_mc(&m.map, n, substream_seed(ctx.sub(3), i as u64)) {
            Ok(b) => {
                worst.check(b.value - expected, 5e-3f64.max(3.0 * b.stderr), m.name.clone());
            }
            Err(e) => worst.fail(format!("{}: {e}", m.name)),
        }
    }
    Outcome {
        name: "DeMarco identity B = log|Res|/(d(d-1)) - 1/2",
        passed: worst.passed(),
        measured: worst.diff,
        tolerance: worst.tol,
        details: vec![format!("{count} maps, {n} samples each"), worst.describe("|B_mc - closed|")],
    }
}

fn combined(a: &MCEstimate, b: &MCEstimate) -> f64 {
    (a.stderr * a.stderr + b.stderr * b.stderr).sqrt()
}

fn jacobian_integrals(ctx: &Ctx) -> Outcome {
    let n = ctx.samples(200_000);
    let seed = ctx.sub(4);
    let mut worst = Worst::new();
    for (i, m) in random_maps(20, &[2, 3], seed).iter().enumerate() {
        let i = i as u64;
        let fs = sampling::jacobian_fs_integral(&m.map, n, substream_seed(seed, 2 * i));
        let sp = sampling::jacobian_sphere_integral(&m.map, n, substream_seed(seed, 2 * i + 1));
        match (fs, sp) {
            (Ok(a), Ok(b)) => {
                worst.check(a.value - b.value, 3.0 * combined(&a, &b), m.name.clone());
            }
            _ => worst.fail(m.name.clone()),
        }
    }
    let mut diag = Worst::new();
    for d in [2usize, 3, 4] {
        let df = d as f64;
        let expected = 2.0 * df.ln() - (df - 1.0);
        match sampling::jacobian_fs_integral(&RationalMap::power(d), n, substream_seed(seed, 100 + d as u64)) {
            Ok(e) => {
                diag.check(e.value - expected, 3.0 * e.stderr, format!("d={d}"));
            }
            Err(e) => diag.fail(format!("d={d}: {e}")),
        }
    }
    let (measured, tolerance) = if worst.ratio >= diag.ratio { (worst.diff, worst.tol) } else { (diag.diff, diag.tol) };
    Outcome {
        name: "Jacobian integrals over the sphere and over P1 agree",
        passed: worst.passed() && diag.passed(),
        measured,
        tolerance,
        details: vec![
            format!("{n} samples per integral"),
            worst.describe("|int log||J||_0 w - int log|det F'| m| (3 combined stderr)"),
            diag.describe("diagonal int log||J||_0 w vs 2 log d - (d - 1) (3 stderr)"),
        ],
    }
}

fn lyapunov_cross_method(ctx: &Ctx) -> Outcome {
    let n = ctx.samples(200_000);
    let seed = ctx.sub(5);
    let cfg = CycleConfig::default();
    let mut erg = Worst::new();
    let mut integ = Worst::new();
    let mut cyc = Worst::new();
    let mut exact = Worst::new();
    let tol = |e: &MCEstimate| 1e-2f64.max(3.0 * e.stderr);
    for (i, m) in corpus().iter().enumerate() {
        let i = i as u64;
        let l = match closed_form(&m.map, DEFAULT_TOL) {
            Ok(l) => l.value,
            Err(e) => {
                erg.fail(format!("{}: {e}", m.name));
                continue;
            }
        };
        match ergodic(&m.map, n, substream_seed(seed, 3 * i)) {
            Ok(e) => {
                erg.check(e.value - l, tol(&e), m.name.clone());
            }
            Err(e) => erg.fail(format!("{}: {e}", m.name)),
        }
        match integral_check(&m.map, n, substream_seed(seed, 3 * i + 1)) {
            Ok(r) => {
                integ.check(r.via_fubini_study.value - l, tol(&r.via_fubini_study), format!("{} (P1)", m.name));
                integ.check(r.via_sphere.value - l, tol(&r.via_sphere), format!("{} (sphere)", m.name));
            }
            Err(e) => integ.fail(format!("{}: {e}", m.name)),
        }
        match cycle_estimate(&m.map, 5, &cfg) {
            Ok(e) => {
                cyc.check(e.value - l, 5e-2, m.name.clone());
            }
            Err(e) => cyc.fail(format!("{}: {e}", m.name)),
        }
    }
    for d in 2..=6 {
        match closed_form(&RationalMap::power(d), DEFAULT_TOL) {
            Ok(l) => {
                exact.check(l.value - (d as f64).ln(), 1e-10, format!("z^{d}"));
            }
            Err(e) => exact.fail(format!("z^{d}: {e}")),
        }
    }
    let cheb = quadratic(c(-2.0, 0.0));
    let log2 = 2f64.ln();
    // fixed tolerances, so always at the full sample count
    match lyapunov::report(&cheb, lyapunov::Methods::ALL, 200_000, 5, substream_seed(seed, 999)) {
        Ok(r) => {
            let vals = [
                r.closed.map(|x| x.value),
                r.ergodic.map(|x| x.value),
                r.cycles.map(|x| x.value),
                r.integral.map(|x| x.via_fubini_study.value),
            ];
            // the period-5 cycle average is held to the corpus cycle tolerance
            for ((v, name), tol) in vals.iter().zip(["closed", "ergodic", "cycles", "integral"]).zip([1e-2, 1e-2, 5e-2, 1e-2]) {
                match v {
                    Some(v) => {
                        exact.check(v - log2, tol, format!("z^2-2 {name}"));
                    }
                    None => exact.fail(format!("z^2-2 {name}")),
                }
            }
        }
        Err(e) => exact.fail(format!("z^2-2: {e}")),
    }
    let all = [&erg, &integ, &cyc, &exact];
    let w = all.iter().max_by(|a, b| a.ratio.total_cmp(&b.ratio)).unwrap();
    Outcome {
        name: "Lyapunov exponent: closed form vs ergodic, integral and cycle averages",
        passed: all.iter().all(|w| w.passed()),
        measured: w.diff,
        tolerance: w.tol,
        details: vec![
            format!("30-map corpus, {n} samples, cycles of period 5"),
            erg.describe("ergodic"),
            integ.describe("integral formula"),
            cyc.describe("cycle average n=5"),
            exact.describe("z^d closed form and z^2-2"),
        ],
    }
}

fn iterate_law(ctx: &Ctx) -> Outcome {
    let mut worst = Worst::new();
    for m in random_maps(10, &[2], ctx.sub(6)) {
        let f2 = match m.map.compose(&m.map) {
            Ok(f2) => f2,
            Err(e) => {
                worst.fail(format!("{}: {e}", m.name));
                continue;
            }
        };
        match (closed_form(&m.map, DEFAULT_TOL), closed_form(&f2, DEFAULT_TOL)) {
            (Ok(a), Ok(b)) => {
                worst.check(b.value - 2.0 * a.value, 1e-5, m.name.clone());
            }
            _ => worst.fail(m.name.clone()),
        }
    }
    Outcome {
        name: "iterate law L(f^2) = 2 L(f)",
        passed: worst.passed(),
        measured: worst.diff,
        tolerance: worst.tol,
        details: vec![worst.describe("10 degree-2 maps")],
    }
}

fn scan_m2(ctx: &mut Ctx, resolution: usize) -> Result<ScalarField, bifurcation::BifurcationError> {
    let (b1, b2) = M2_BOXES;
    let f = scan_l(&Family::M2, vec![b1, b2], vec![resolution; 4], ScanMethod::Closed { tol: DEFAULT_TOL }, ctx.seed)?;
    ctx.m2_scanned = true;
    Ok(f)
}

fn lower_bound(ctx: &mut Ctx) -> Outcome {
    let mut details = Vec::new();
    if !ctx.m2_scanned {
        let res = match ctx.level {
            Level::Full => 24,
            Level::Quick => 12,
        };
        match scan_m2(ctx, res) {
            Ok(f) => details.push(format!("scanned M2 on a {res}^4 grid ({} cells masked)", f.len() - f.valid_count())),
            Err(e) => details.push(format!("M2 scan failed: {e}")),
        }
    }
    let Some(o) = lower_bound_monitor() else {
        return Outcome {
            name: "lower bound L >= log(d)/2",
            passed: false,
            measured: f64::NAN,
            tolerance: -1e-3,
            details: vec!["no closed-form evaluations recorded".into()],
        };
    };
    details.push(format!(
        "{} evaluations; minimum of L - log(d)/2 is {:.6e} at L = {:.6}, d = {}",
        o.evaluations, o.min_margin, o.value_at_min, o.degree_at_min
    ));
    Outcome {
        name: "lower bound L >= log(d)/2",
        passed: o.min_margin >= -1e-3 && ctx.m2_scanned,
        measured: o.min_margin,
        tolerance: -1e-3,
        details,
    }
}

fn quadratic_field(ctx: &mut Ctx) -> Result<&(ScalarField, MassField), bifurcation::BifurcationError> {
    if ctx.quadratic.is_none() {
        let n = match ctx.level {
            Level::Full => 600,
            Level::Quick => 190,
        };
        let f = scan_l(&Family::Quadratic, vec![QUADRATIC_BOX], vec![n, n], ScanMethod::Closed { tol: DEFAULT_TOL }, ctx.seed)?;
        let m = ddc_mass(&f)?;
        ctx.quadratic = Some((f, m));
    }
    Ok(ctx.quadratic.as_ref().unwrap())
}

fn quadratic_mass(ctx: &mut Ctx) -> Outcome {
    let name = "quadratic family bifurcation mass";
    let mut details = Vec::new();
    let mut oracle = Worst::new();
    for cv in [c(1e4, 0.0), c(0.0, 1e4), Complex64::from_polar(1e4, 2.0)] {
        let f = quadratic(cv);
        match greenfn::green(&f, &[c(0.0, 0.0), c(1.0, 0.0)], DEFAULT_TOL) {
            Ok(g) => {
                oracle.check(g.value / cv.norm().ln() - 0.5, 1e-3, format!("c = {cv:.1}"));
            }
            Err(e) => oracle.fail(format!("c = {cv}: {e}")),
        }
    }
    details.push(oracle.describe("G_c(0)/log|c| - 1/2 at |c| = 1e4"));
    let (f, m) = match quadratic_field(ctx) {
        Ok(x) => x,
        Err(e) => {
            return Outcome { name, passed: false, measured: f64::NAN, tolerance: 0.05, details: vec![format!("scan failed: {e}")] }
        }
    };
    let total = m.total();
    let block: f64 = (0..m.field.len())
        .filter(|&k| {
            let p = m.field.point(k)[0];
            p.re.abs() <= 0.1 && p.im.abs() <= 0.1
        })
        .map(|k| m.field.values[k])
        .filter(|v| v.is_finite())
        .map(f64::abs)
        .sum();
    let valid = m.field.valid_count() as f64;
    let negative = m.field.values.iter().filter(|v| **v < -1e-6).count() as f64 / valid;
    details.push(format!("grid {}x{}, {} masked scan cells", f.shape[0], f.shape[1], f.len() - f.valid_count()));
    details.push(format!("total mass {total:.6}, block |c| <= 0.1 (sup norm) mass {block:.3e} = {:.3e} of total", block / total));
    details.push(format!("cells with mass < -1e-6: {:.3}%", 100.0 * negative));
    let passed = oracle.passed() && (total - 0.5).abs() < 0.05 && block < 1e-6 * total;
    Outcome { name, passed, measured: total, tolerance: 0.05, details }
}

/// `c(η) = η/2 − η²/4` has a fixed point of multiplier `η`.
fn cardioid_point(eta: Complex64) -> Complex64 {
    eta / 2.0 - eta * eta / 4.0
}

fn support_vs_per(ctx: &mut Ctx) -> Outcome {
    let name = "support of dd^c L vs Per loci";
    let mut details = Vec::new();
    let mut points = Vec::new();
    for n in 1..=3 {
        for theta in [1.0 / 3.0, 0.4, 0.5] {
            let eta = Complex64::from_polar(1.0, std::f64::consts::TAU * theta);
            match per_locus(&Family::Quadratic, n, eta, QUADRATIC_BOX, &PerConfig::default()) {
                Ok(r) => {
                    details.push(format!("Per({n}, e^(2 pi i {theta:.3})): {} points", r.solutions.len()));
                    points.extend(r.solutions.iter().map(|s| s.lambda));
                }
                Err(e) => details.push(format!("Per({n}, theta={theta}) failed: {e}")),
            }
        }
    }
    let m = match quadratic_field(ctx) {
        Ok((_, m)) => m,
        Err(e) => {
            return Outcome { name, passed: false, measured: f64::NAN, tolerance: 0.95, details: vec![format!("scan failed: {e}")] }
        }
    };
    let report = match bifurcation::support_compare(m, &points, 0.99, 3) {
        Ok(r) => r,
        Err(e) => {
            details.push(format!("support comparison failed: {e}"));
            return Outcome { name, passed: false, measured: f64::NAN, tolerance: 0.95, details };
        }
    };
    details.push(format!(
        "{} points, {} high cells (threshold {:.3e}); points in high cells {:.3}, high cells near points {:.4}",
        report.n_points, report.n_high_cells, report.threshold, report.points_in_high, report.high_near_points
    ));
    let total = m.total();
    let mut control_max = 0.0f64;
    for k in 0..50 {
        let eta = Complex64::from_polar(0.9 * ((k as f64 + 0.5) / 50.0).sqrt(), 2.399_963 * k as f64);
        let v = m.field.value_at(&[cardioid_point(eta)]).unwrap_or(f64::NAN);
        control_max = if v.is_nan() { f64::NAN } else { control_max.max(v.abs()) };
    }
    details.push(format!("cardioid controls: max |mass| {control_max:.3e} = {:.3e} of total", control_max / total));
    let passed = report.points_in_high >= 0.95 && control_max < 1e-8 * total;
    Outcome { name, passed, measured: report.points_in_high, tolerance: 0.95, details }
}

fn cardioid_harmonicity(_ctx: &Ctx) -> Outcome {
    let center = c(-0.1, 0.05);
    let radius = 0.15;
    let l = |cv: Complex64| closed_form(&quadratic(cv), DEFAULT_TOL).map(|x| x.value);
    let mut details = Vec::new();
    let result = (|| -> Result<(f64, f64), lyapunov::LyapunovError> {
        let lc = l(center)?;
        let mut sum = 0.0;
        let m = 64;
        for k in 0..m {
            sum += l(center + Complex64::from_polar(radius, std::f64::consts::TAU * k as f64 / m as f64))?;
        }
        Ok((lc, sum / m as f64))
    })();
    match result {
        Ok((lc, mean)) => {
            details.push(format!("center value {lc:.15}, circle mean {mean:.15}, log 2 = {:.15}", 2f64.ln()));
            let diff = (mean - lc).abs();
            Outcome { name: "mean value property inside the main cardioid", passed: diff < 1e-6, measured: diff, tolerance: 1e-6, details }
        }
        Err(e) => Outcome {
            name: "mean value property inside the main cardioid",
            passed: false,
            measured: f64::NAN,
            tolerance: 1e-6,
            details: vec![e.to_string()],
        },
    }
}

fn monge_ampere(ctx: &mut Ctx) -> Outcome {
    let name = "Monge-Ampere mass on M2";
    let mut details = Vec::new();
    let r = Rect::new(-1.0, 1.0, -1.0, 1.0);
    let n = 30;
    let (a, b) = (c(0.13, -0.07), c(-0.21, 0.11));
    let calib = ScalarField::from_fn(vec![r, r], vec![n; 4], |p| Some((p[0] - a).norm().ln() + (p[1] - b).norm().ln()));
    let calib_mass = ma2_mass(&calib, M2_SMOOTHING).map(|m| m.total());
    let ph = ScalarField::from_fn(vec![r, r], vec![n; 4], |p| Some((p[0] * p[1] + p[0] * p[0] * c(0.3, 0.5) - p[1]).re));
    let scale = ph.values.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    let ph_mass = ma2_mass(&ph, M2_SMOOTHING).map(|m| m.total());
    let mut passed = true;
    match &calib_mass {
        Ok(t) => {
            details.push(format!("calibration log|s1 - a| + log|s2 - b| on {n}^4: mass {t:.5}"));
            passed &= (t - 1.0).abs() < 0.05;
        }
        Err(e) => {
            details.push(format!("calibration failed: {e}"));
            passed = false;
        }
    }
    match ph_mass {
        Ok(t) => {
            details.push(format!("pluriharmonic field: mass {t:.3e} (scale {scale:.3})"));
            passed &= t < 1e-6 * scale;
        }
        Err(e) => {
            details.push(format!("pluriharmonic failed: {e}"));
            passed = false;
        }
    }
    let mut measured = calib_mass.clone().unwrap_or(f64::NAN);
    let mut tolerance = 0.05;
    if ctx.level == Level::Full {
        match scan_m2(ctx, M2_RESOLUTION).and_then(|f| ma2_mass(&f, M2_SMOOTHING).map(|m| (f, m))) {
            Ok((f, m)) => {
                let h = m.field.spacing();
                let total = m.total();
                let tube: f64 = (0..m.field.len())
                    .filter(|&k| m.field.values[k].is_finite())
                    .filter(|&k| {
                        let d = m.field.point(k)[0] - 2.0;
                        (d.re / h[0]).powi(2) + (d.im / h[1]).powi(2) <= 9.0
                    })
                    .map(|k| m.field.values[k])
                    .sum();
                let frac = tube / total;
                let (b1, b2) = M2_BOXES;
                details.push(format!(
                    "L on {0}^4 grid, s1 in [{1}, {2}]x[{3}, {4}]i, s2 in [{5}, {6}]x[{7}, {8}]i, {9} masked",
                    M2_RESOLUTION, b1.re0, b1.re1, b1.im0, b1.im1, b2.re0, b2.re1, b2.im0, b2.im1,
                    f.len() - f.valid_count()
                ));
                details.push(format!(
                    "smoothing {M2_SMOOTHING} cells; box total {total:.4e}, clamped negative {:.3e}; tube |s1 - 2| <= 3 cells: {tube:.4e} = {:.4} of total",
                    m.clamped_negative, frac
                ));
                passed &= frac < 0.02;
                measured = frac;
                tolerance = 0.02;
            }
            Err(e) => {
                details.push(format!("M2 scan failed: {e}"));
                passed = false;
            }
        }
    } else {
        details.push("tube test runs at the full level only".into());
    }
    Outcome { name, passed, measured, tolerance, details }
}

fn determinism(ctx: &Ctx) -> Outcome {
    let mut mismatches = Vec::new();
    let pool = |threads: usize| rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool");
    let scan = || {
        let f = scan_l(&Family::Quadratic, vec![QUADRATIC_BOX], vec![48, 48], ScanMethod::Closed { tol: DEFAULT_TOL }, ctx.seed)
            .expect("quadratic scan");
        let m = ddc_mass(&f).expect("mass");
        (bifurcation::write_field(&bifurcation::FieldFile::Scalar(f)), bifurcation::write_field(&bifurcation::FieldFile::Mass(m)))
    };
    let erg_scan = || {
        let f = scan_l(&Family::Quadratic, vec![Rect::new(-1.0, 0.5, 0.0, 1.0)], vec![4, 3], ScanMethod::Ergodic { samples: 3000 }, ctx.seed)
            .expect("ergodic scan");
        bifurcation::write_field(&bifurcation::FieldFile::Scalar(f))
    };
    let f = &corpus()[9].map;
    let mc = || {
        let e = ergodic(f, 20_000, ctx.seed).expect("ergodic");
        let b = sampling::b_mc(f, 20_000, ctx.seed).expect("b_mc");
        (e.value.to_bits(), e.stderr.to_bits(), b.value.to_bits())
    };
    let ma = || {
        let r = Rect::new(-1.0, 1.0, -1.0, 1.0);
        let g = ScalarField::from_fn(vec![r, r], vec![18; 4], |p| Some((p[0].norm_sqr() + 1.0).ln() + (p[0] * p[1]).norm()));
        bifurcation::write_field(&bifurcation::FieldFile::Mass(ma2_mass(&g, 2.0).expect("ma2")))
    };
    let per = || {
        per_locus(&Family::Quadratic, 2, c(0.3, 0.2), QUADRATIC_BOX, &PerConfig { grid: 30, ..PerConfig::default() })
            .map(|r| r.solutions.iter().map(|s| (s.lambda.re.to_bits(), s.lambda.im.to_bits())).collect::<Vec<_>>())
            .expect("per")
    };
    let one = pool(1);
    let three = pool(3);
    let checks: [(&str, bool); 5] = [
        ("scan and ddc fields", one.install(scan) == three.install(scan) && scan() == scan()),
        ("ergodic scan field", one.install(erg_scan) == three.install(erg_scan)),
        ("Monte Carlo estimates", one.install(mc) == three.install(mc) && mc() == mc()),
        ("Monge-Ampere field", one.install(ma) == three.install(ma)),
        ("Per solutions", one.install(per) == three.install(per)),
    ];
    for (what, ok) in checks {
        if !ok {
            mismatches.push(what.to_string());
        }
    }
    let mut details = vec!["repeated runs and 1 vs 3 worker threads compared bit for bit".to_string()];
    if mismatches.is_empty() {
        details.push("all outputs identical".into());
    } else {
        details.push(format!("differing: {}", mismatches.join(", ")));
    }
    Outcome {
        name: "determinism across runs and thread counts",
        passed: mismatches.is_empty(),
        measured: mismatches.len() as f64,
        tolerance: 0.0,
        details,
    }
}
