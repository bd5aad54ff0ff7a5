use std::sync::OnceLock;

use num_complex::Complex64;

use super::{fingerprint_of, Lift, MapError};
use crate::algebra::{factor_linear, jacobian_det, sylvester_resultant, BinaryForm, LinearFactorization};
use crate::greenfn::estimate_escape_constant;
use crate::point::P1Point;

/// Relative threshold below which a resultant counts as zero.
const DEGENERATE_RESULTANT: f64 = 1e-14;

/// A rational map `f = P/Q` of P¹ of degree `d ≥ 2`, together with its lift
/// `F = (P, Q)` on C². Here `P`, `Q` are binary forms and the affine
/// coordinate is `z = z0 / z1`.
///
/// The Jacobian determinant, its linear factorization (the critical
/// directions) and the resultant are computed at construction; the value is
/// immutable afterwards.
#[derive(Debug)]
pub struct RationalMap {
    p: BinaryForm,
    q: BinaryForm,
    dp: [BinaryForm; 2],
    dq: [BinaryForm; 2],
    jacobian: BinaryForm,
    critical: LinearFactorization,
    resultant: Complex64,
    escape: OnceLock<f64>,
}

impl Clone for RationalMap {
    fn clone(&self) -> Self {
        RationalMap {
            p: self.p.clone(),
            q: self.q.clone(),
            dp: self.dp.clone(),
            dq: self.dq.clone(),
            jacobian: self.jacobian.clone(),
            critical: self.critical.clone(),
            resultant: self.resultant,
            escape: self.escape.clone(),
        }
    }
}

/// Möbius transformation `z ↦ (a z + b)/(c z + d)` acting on lifts by the matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mobius(pub [[Complex64; 2]; 2]);

impl Mobius {
    pub fn identity() -> Self {
        let (o, z) = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
        Mobius([[o, z], [z, o]])
    }

    pub fn det(&self) -> Complex64 {
        let m = self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    /// Adjugate, which acts as the inverse on P¹.
    pub fn adjugate(&self) -> Self {
        let m = self.0;
        Mobius([[m[1][1], -m[0][1]], [-m[1][0], m[0][0]]])
    }

    pub fn apply_lift(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        let m = self.0;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }

    pub fn apply(&self, p: &P1Point) -> P1Point {
        let [a, b] = self.apply_lift(p.unit_lift());
        P1Point::from_homogeneous(a, b)
    }
}

impl RationalMap {
    /// Builds `f` from the lift components; fails when `Res(P, Q) = 0`.
    pub fn new(p: BinaryForm, q: BinaryForm) -> Result<Self, MapError> {
        if p.degree() != q.degree() {
            return Err(MapError::DegreeMismatch(p.degree(), q.degree()));
        }
        let d = p.degree();
        if d < 2 {
            return Err(MapError::DegreeTooLow(d));
        }
        let resultant = sylvester_resultant(&p, &q)?;
        // Res(aP, bQ) = a^d b^d Res(P, Q)
        let scale = (p.max_coeff() * q.max_coeff()).powi(d as i32);
        if !(resultant.norm() > DEGENERATE_RESULTANT * scale) {
            return Err(MapError::Degenerate { resultant: resultant.norm() });
        }
        let jacobian = jacobian_det(&p, &q);
        let critical = factor_linear(&jacobian)?;
        Ok(RationalMap {
            dp: [p.partial_z0(), p.partial_z1()],
            dq: [q.partial_z0(), q.partial_z1()],
            p,
            q,
            jacobian,
            critical,
            resultant,
            escape: OnceLock::new(),
        })
    }

    /// `f(z) = num(z) / den(z)` from affine coefficient lists (ascending powers
    /// of `z`), homogenized to the common degree `max(deg num, deg den)`.
    pub fn from_affine(num: &[Complex64], den: &[Complex64]) -> Result<Self, MapError> {
        let d = num.len().max(den.len()).saturating_sub(1);
        let homog = |a: &[Complex64]| {
            let mut c = vec![Complex64::new(0.0, 0.0); d + 1];
            for (i, &x) in a.iter().enumerate() {
                c[d - i] = x;
            }
            BinaryForm::new(c)
        };
        RationalMap::new(homog(num), homog(den))
    }

    /// `z ↦ z^d` with lift `(z0^d, z1^d)`.
    pub fn power(d: usize) -> Self {
        let one = Complex64::new(1.0, 0.0);
        RationalMap::new(BinaryForm::monomial(d, 0, one), BinaryForm::monomial(d, d, one))
            .expect("power maps are non-degenerate")
    }

    pub fn degree(&self) -> usize {
        self.p.degree()
    }

    pub fn numerator(&self) -> &BinaryForm {
        &self.p
    }

    pub fn denominator(&self) -> &BinaryForm {
        &self.q
    }

    /// `det F′`, a form of nominal degree `2d − 2`.
    pub fn jacobian(&self) -> &BinaryForm {
        &self.jacobian
    }

    /// Critical directions `c̃_j` with `det F′(z) = Π (c̃_j ∧ z)`.
    pub fn critical_points(&self) -> &LinearFactorization {
        &self.critical
    }

    pub fn resultant(&self) -> Complex64 {
        self.resultant
    }

    /// `F(z)`.
    pub fn eval_lift(&self, z: [Complex64; 2]) -> [Complex64; 2] {
        [self.p.eval(z[0], z[1]), self.q.eval(z[0], z[1])]
    }

    /// `f(w)` on P¹.
    pub fn eval(&self, w: &P1Point) -> P1Point {
        let [a, b] = self.eval_lift(w.lift());
        P1Point::from_homogeneous(a, b)
    }

    pub fn det_jacobian_at(&self, z: [Complex64; 2]) -> Complex64 {
        self.jacobian.eval(z[0], z[1])
    }

    /// `F` followed by a derivative along the tangent `dz`.
    pub(crate) fn eval_with_tangent(
        &self,
        z: [Complex64; 2],
        dz: [Complex64; 2],
    ) -> ([Complex64; 2], [Complex64; 2]) {
        let (a, b) = (z[0], z[1]);
        let v = [self.p.eval(a, b), self.q.eval(a, b)];
        let dv = [
            self.dp[0].eval(a, b) * dz[0] + self.dp[1].eval(a, b) * dz[1],
            self.dq[0].eval(a, b) * dz[0] + self.dq[1].eval(a, b) * dz[1],
        ];
        (v, dv)
    }

    /// The same map with lift `a·F`.
    pub fn scaled(&self, a: Complex64) -> Self {
        RationalMap::new(self.p.scale(a), self.q.scale(a)).expect("scaling preserves non-degeneracy")
    }

    /// `self ∘ other`, with lift `F ∘ G`.
    pub fn compose(&self, other: &RationalMap) -> Result<Self, MapError> {
        RationalMap::new(self.p.compose(&other.p, &other.q), self.q.compose(&other.p, &other.q))
    }

    /// Lift of `f^n` as normalized forms `(P_n, Q_n)`, expanded by formal
    /// composition. Each step is rescaled by its largest coefficient, which
    /// leaves the projective map unchanged.
    pub fn iterate_forms(&self, n: usize) -> (BinaryForm, BinaryForm) {
        let one = Complex64::new(1.0, 0.0);
        let mut pn = BinaryForm::monomial(1, 0, one);
        let mut qn = BinaryForm::monomial(1, 1, one);
        for _ in 0..n {
            let np = self.p.compose(&pn, &qn);
            let nq = self.q.compose(&pn, &qn);
            let s = np.max_coeff().max(nq.max_coeff());
            pn = np.scale(Complex64::new(1.0 / s, 0.0));
            qn = nq.scale(Complex64::new(1.0 / s, 0.0));
        }
        (pn, qn)
    }

    /// `φ⁻¹ ∘ f ∘ φ`, with lift `adj(Φ) · F(Φ z)`.
    pub fn conjugate(&self, phi: &Mobius) -> Result<Self, MapError> {
        let m = phi.0;
        let norm = m.iter().flatten().map(|c| c.norm_sqr()).sum::<f64>();
        if phi.det().norm() <= 1e-14 * norm {
            return Err(MapError::SingularMatrix);
        }
        // det φ = 1 keeps the resultant of the lift comparable to that of F
        let s = phi.det().sqrt().inv();
        let m = m.map(|row| row.map(|c| c * s));
        let phi = &Mobius(m);
        let l0 = BinaryForm::new(vec![m[0][0], m[0][1]]);
        let l1 = BinaryForm::new(vec![m[1][0], m[1][1]]);
        let pp = self.p.compose(&l0, &l1);
        let qq = self.q.compose(&l0, &l1);
        let adj = phi.adjugate().0;
        RationalMap::new(
            pp.scale(adj[0][0]).add(&qq.scale(adj[0][1])),
            pp.scale(adj[1][0]).add(&qq.scale(adj[1][1])),
        )
    }

    /// All solutions of `f(z) = w`, repeated by multiplicity.
    pub fn preimages(&self, w: &P1Point) -> Result<Vec<P1Point>, MapError> {
        let h = match *w {
            P1Point::Affine(a) => self.p.sub(&self.q.scale(a)),
            P1Point::Reciprocal(u) => self.p.scale(u).sub(&self.q),
        };
        Ok(h.projective_root_approximations()?)
    }
}

impl Lift for RationalMap {
    fn dim(&self) -> usize {
        2
    }

    fn degree(&self) -> usize {
        self.p.degree()
    }

    fn apply(&self, z: &[Complex64], out: &mut [Complex64]) {
        out[0] = self.p.eval(z[0], z[1]);
        out[1] = self.q.eval(z[0], z[1]);
    }

    fn det_jacobian(&self, z: &[Complex64]) -> Complex64 {
        self.jacobian.eval(z[0], z[1])
    }

    fn escape_constant(&self) -> f64 {
        *self.escape.get_or_init(|| estimate_escape_constant(self))
    }

    fn fingerprint(&self) -> u64 {
        fingerprint_of(self.p.coeffs().iter().chain(self.q.coeffs()).copied())
    }
}
