//! Two-peakon collisions.
//!
//! For `d = 2` the trace of `A(z)` is `(β₋+β₊)z² + Mz + C₂`. As the gap
//! closes with `M` and `C₂` fixed, `A(z)` tends to a limit matrix whose
//! off-diagonal entries share the root `z = -C₂/M`. Conjugating by
//! `D = diag(1/r, r)` with `r = z + C₂/M` and then by an upper-triangular
//! gauge `P` removes the dependence on the collision point and leaves a form
//! with one simple pole at `-C₂/M`.

use thiserror::Error;

use crate::lax::{Mat2, MatrixPoly2, Variable};
use crate::model::{ModelParams, PeakonState};
use crate::poly::Poly;
use crate::Scalar;

/// `|M|` below this is treated as zero.
pub const MASS_TOL: Scalar = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CollisionError {
    #[error("total mass {0} vanishes; the collision form is undefined")]
    ZeroTotalMass(Scalar),
    #[error("β₋ vanishes; the gauge is undefined")]
    ZeroBetaMinus,
    #[error("collision analysis needs exactly two peakons, got {0}")]
    WrongDimension(usize),
    #[error("non-finite input to the collision form")]
    NonFinite,
}

/// `num / den` with a monic denominator.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalFn {
    pub num: Poly,
    pub den: Poly,
}

impl RationalFn {
    /// Normalizes `den` to be monic. Panics if `den` is the zero polynomial.
    pub fn new(num: Poly, den: Poly) -> Self {
        let lead = den.leading();
        assert!(lead != 0.0, "rational function with zero denominator");
        RationalFn { num: num.scale(1.0 / lead), den: den.scale(1.0 / lead) }
    }

    pub fn from_poly(p: Poly) -> Self {
        RationalFn { num: p, den: Poly::one() }
    }

    pub fn eval(&self, z: Scalar) -> Scalar {
        self.num.eval(z) / self.den.eval(z)
    }

    pub fn mul(&self, rhs: &RationalFn) -> RationalFn {
        RationalFn::new(&self.num * &rhs.num, &self.den * &rhs.den)
    }

    pub fn add(&self, rhs: &RationalFn) -> RationalFn {
        if self.den == rhs.den {
            return RationalFn::new(&self.num + &rhs.num, self.den.clone());
        }
        RationalFn::new(&(&self.num * &rhs.den) + &(&rhs.num * &self.den), &self.den * &rhs.den)
    }

    pub fn scale(&self, s: Scalar) -> RationalFn {
        RationalFn { num: self.num.scale(s), den: self.den.clone() }
    }

    /// Cancel every common factor `(z - root)` of numerator and denominator.
    pub fn cancel_root(&self, root: Scalar) -> RationalFn {
        let (mut num, mut den) = (self.num.clone(), self.den.clone());
        while den.degree().unwrap_or(0) > 0 && !num.is_zero() {
            let (qn, rn) = num.divide_linear(root);
            let (qd, rd) = den.divide_linear(root);
            let tol = 1e-12;
            if rn.abs() > tol * num.norm_inf().max(1.0) || rd.abs() > tol * den.norm_inf().max(1.0) {
                break;
            }
            num = qn;
            den = qd;
        }
        RationalFn::new(num, den)
    }

    /// The pole of a linear denominator.
    pub fn linear_pole(&self) -> Option<Scalar> {
        (self.den.degree() == Some(1)).then(|| -self.den.coeff(0) / self.den.coeff(1))
    }
}

/// The reduced collision form.
#[derive(Debug, Clone, PartialEq)]
pub struct CollisionForm {
    pub beta_minus: Scalar,
    pub beta_plus: Scalar,
    pub total_mass: Scalar,
    pub c2: Scalar,
    pub pole_location: Scalar,
    pub entries: [[RationalFn; 2]; 2],
}

impl CollisionForm {
    pub fn eval(&self, z: Scalar) -> Mat2 {
        let e = &self.entries;
        [[e[0][0].eval(z), e[0][1].eval(z)], [e[1][0].eval(z), e[1][1].eval(z)]]
    }

    /// `(trace, determinant)` at `z`.
    pub fn char_poly_at(&self, z: Scalar) -> (Scalar, Scalar) {
        char_data(&self.eval(z))
    }

    /// The form written out directly from `(β₋, β₊, M, C₂)`.
    pub fn expected(beta_minus: Scalar, beta_plus: Scalar, m: Scalar, c2: Scalar) -> [[RationalFn; 2]; 2] {
        let r = Poly::from_coeffs(vec![c2 / m, 1.0]);
        let z2 = Poly::monomial(1.0, 2);
        [
            [
                RationalFn::from_poly(z2.scale(beta_minus)),
                RationalFn::from_poly((&(&r * &r) * &z2).scale(beta_minus * m)),
            ],
            [
                RationalFn::new(Poly::one(), r),
                RationalFn::from_poly(Poly::from_coeffs(vec![c2, m, beta_plus])),
            ],
        ]
    }
}

pub fn char_data(a: &Mat2) -> (Scalar, Scalar) {
    (a[0][0] + a[1][1], a[0][0] * a[1][1] - a[0][1] * a[1][0])
}

fn check_inputs(params: &ModelParams, m: Scalar, c2: Scalar, x_star: Scalar) -> Result<(), CollisionError> {
    if !(m.is_finite() && c2.is_finite() && x_star.is_finite()) {
        return Err(CollisionError::NonFinite);
    }
    if m.abs() < MASS_TOL {
        return Err(CollisionError::ZeroTotalMass(m));
    }
    if params.beta_minus == 0.0 {
        return Err(CollisionError::ZeroBetaMinus);
    }
    Ok(())
}

/// Limit of `A(z)` as two peakons meet at `x_star` with total mass `M` and
/// constant trace coefficient `C₂`.
pub fn collision_limit_a(
    params: &ModelParams,
    m: Scalar,
    c2: Scalar,
    x_star: Scalar,
) -> Result<MatrixPoly2, CollisionError> {
    check_inputs(params, m, c2, x_star)?;
    let (bm, bp) = (params.beta_minus, params.beta_plus);
    let e = (2.0 * params.nu * x_star).exp();
    let r = Poly::from_coeffs(vec![c2 / m, 1.0]);
    Ok(MatrixPoly2::new(
        [
            [Poly::from_coeffs(vec![bm * c2, bm * m, bm]), r.scale(bp * m / e)],
            [r.scale(-bm * m * e), Poly::from_coeffs(vec![-bp * c2, -bp * m, bp])],
        ],
        Variable::Z,
    ))
}

/// Conjugate the limit matrix to the canonical form.
///
/// `A' = D⁻¹ A D` multiplies the `(1,2)` entry by `r²` and divides the
/// `(2,1)` entry by `r²`. The gauge `P = [[a, b], [0, d]]` with
/// `a/d = -1/(β₋ M e^{2νx*})` and `b = β₋ M a r²` then yields `A'' = P⁻¹ A' P`.
pub fn reduce_limit(
    limit: &MatrixPoly2,
    params: &ModelParams,
    m: Scalar,
    c2: Scalar,
    x_star: Scalar,
) -> Result<CollisionForm, CollisionError> {
    check_inputs(params, m, c2, x_star)?;
    let bm = params.beta_minus;
    let e = (2.0 * params.nu * x_star).exp();
    let root = -c2 / m;
    let r = Poly::from_coeffs(vec![c2 / m, 1.0]);
    let r2 = &r * &r;
    let lim = &limit.entries;

    let p11 = RationalFn::from_poly(lim[0][0].clone());
    let p22 = RationalFn::from_poly(lim[1][1].clone());
    let p12 = RationalFn::from_poly(&lim[0][1] * &r2);
    let p21 = RationalFn::new(lim[1][0].clone(), r2.clone()).cancel_root(root);

    // gauge ratios, with d normalized to 1
    let a = -1.0 / (bm * m * e);
    let b = RationalFn::from_poly(r2.scale(bm * m * a));
    let b_over_d = &b;

    let q11 = p11.add(&b_over_d.mul(&p21).scale(-1.0)).cancel_root(root);
    let q22 = b_over_d.mul(&p21).add(&p22).cancel_root(root);
    let q21 = p21.scale(a).cancel_root(root);
    // (1/a)(A'11 b + A'12 d) - (b/(a d))(A'21 b + A'22 d)
    let first = p11.mul(&b).add(&p12).scale(1.0 / a);
    let second = p21.mul(&b).add(&p22).mul(&b).scale(-1.0 / a);
    let q12 = first.add(&second).cancel_root(root);

    Ok(CollisionForm {
        beta_minus: bm,
        beta_plus: params.beta_plus,
        total_mass: m,
        c2,
        pole_location: root,
        entries: [[q11, q12], [q21, q22]],
    })
}

/// Canonical form for the invariants `(M, C₂)`; the collision point drops out.
pub fn canonical_form(params: &ModelParams, m: Scalar, c2: Scalar) -> Result<CollisionForm, CollisionError> {
    let limit = collision_limit_a(params, m, c2, 0.0)?;
    reduce_limit(&limit, params, m, c2, 0.0)
}

/// `C₂ = m₁ m₂ (1 - e^{-2νg})(β₋ - β₊ e^{2νg})` with `g = x₂ - x₁`.
pub fn c2_invariant(state: &PeakonState, params: &ModelParams) -> Result<Scalar, CollisionError> {
    if state.len() != 2 {
        return Err(CollisionError::WrongDimension(state.len()));
    }
    Ok(c2_formula(state.masses()[0], state.masses()[1], state.gaps()[0], params))
}

/// The `C₂` expression for raw inputs, valid also at zero mass or zero gap.
pub fn c2_formula(m1: Scalar, m2: Scalar, gap: Scalar, params: &ModelParams) -> Scalar {
    let a = 2.0 * params.nu * gap;
    m1 * m2 * -(-a).exp_m1() * (params.beta_minus - params.beta_plus * a.exp())
}
