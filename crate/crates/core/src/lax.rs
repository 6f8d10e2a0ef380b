//! Transition matrix `T(λ)`, Lax matrix `A(z) = z^d T(1/z) β` and its
//! partner `B(z)`.
//!
//! `A(z)` can be assembled two ways: by multiplying the elementary jump
//! matrices and reversing coefficients, or from the subset expansion
//! `A(z) = β z^d + Σ_j z^{d-j} Σ_{|I|=j} f_I m_I (...)`. The second route
//! only touches separations through `expm1`, which keeps it accurate next to
//! a collision; the first is the independent check.

use thiserror::Error;

use crate::model::{gap_field, ModelError, ModelParams, PeakonState};
use crate::poly::Poly;
use crate::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LaxError {
    #[error("substitution λ = 1/z left a negative power of z in entry ({row}, {col})")]
    DegreeOverflow { row: usize, col: usize },
    #[error("Lax partner needs a z-matrix of degree >= 1")]
    NotLaxMatrix,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// The formal variable of a [`MatrixPoly2`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variable {
    Lambda,
    Z,
}

pub type Mat2 = [[Scalar; 2]; 2];

/// A 2×2 matrix of polynomials in one variable.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPoly2 {
    pub entries: [[Poly; 2]; 2],
    pub variable: Variable,
}

impl MatrixPoly2 {
    pub fn new(entries: [[Poly; 2]; 2], variable: Variable) -> Self {
        MatrixPoly2 { entries, variable }
    }

    pub fn identity(variable: Variable) -> Self {
        MatrixPoly2::new([[Poly::one(), Poly::zero()], [Poly::zero(), Poly::one()]], variable)
    }

    pub fn entry(&self, i: usize, j: usize) -> &Poly {
        &self.entries[i][j]
    }

    /// Largest entry degree; `None` if all entries vanish.
    pub fn degree(&self) -> Option<usize> {
        self.entries.iter().flatten().filter_map(Poly::degree).max()
    }

    /// The constant matrix multiplying `var^k`.
    pub fn coeff_matrix(&self, k: usize) -> Mat2 {
        let e = &self.entries;
        [[e[0][0].coeff(k), e[0][1].coeff(k)], [e[1][0].coeff(k), e[1][1].coeff(k)]]
    }

    pub fn eval(&self, v: Scalar) -> Mat2 {
        let e = &self.entries;
        [[e[0][0].eval(v), e[0][1].eval(v)], [e[1][0].eval(v), e[1][1].eval(v)]]
    }

    pub fn trace(&self) -> Poly {
        &self.entries[0][0] + &self.entries[1][1]
    }

    pub fn det(&self) -> Poly {
        let e = &self.entries;
        &(&e[0][0] * &e[1][1]) - &(&e[0][1] * &e[1][0])
    }

    pub fn mul(&self, rhs: &MatrixPoly2) -> MatrixPoly2 {
        debug_assert_eq!(self.variable, rhs.variable);
        let a = &self.entries;
        let b = &rhs.entries;
        let cell = |i: usize, j: usize| &(&a[i][0] * &b[0][j]) + &(&a[i][1] * &b[1][j]);
        MatrixPoly2::new([[cell(0, 0), cell(0, 1)], [cell(1, 0), cell(1, 1)]], self.variable)
    }

    /// Add `c · var^k` to both diagonal entries.
    pub fn add_scalar_identity(&self, c: Scalar, k: usize) -> MatrixPoly2 {
        let mut out = self.clone();
        let term = Poly::monomial(c, k);
        out.entries[0][0] = &out.entries[0][0] + &term;
        out.entries[1][1] = &out.entries[1][1] + &term;
        out
    }

    /// Largest coefficient magnitude over all entries.
    pub fn norm_inf(&self) -> Scalar {
        self.entries.iter().flatten().map(Poly::norm_inf).fold(0.0, Scalar::max)
    }
}

pub fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

pub fn commutator(a: &Mat2, b: &Mat2) -> Mat2 {
    let ab = mat_mul(a, b);
    let ba = mat_mul(b, a);
    [[ab[0][0] - ba[0][0], ab[0][1] - ba[0][1]], [ab[1][0] - ba[1][0], ab[1][1] - ba[1][1]]]
}

pub fn mat_norm_max(a: &Mat2) -> Scalar {
    a.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
}

/// How [`build_a`] assembles the Lax matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AMethod {
    Product,
    ClosedForm,
}

/// `T(λ) = T_d ··· T_1` with `T_j = I + λ m_j [[1, e^{-2νx_j}], [-e^{2νx_j}, -1]]`.
pub fn build_t(state: &PeakonState, params: &ModelParams) -> Result<MatrixPoly2, LaxError> {
    params.check_state(state)?;
    let mut t = MatrixPoly2::identity(Variable::Lambda);
    for (x, &m) in state.positions().into_iter().zip(state.masses()) {
        let e = (2.0 * params.nu * x).exp();
        let tj = MatrixPoly2::new(
            [
                [Poly::from_coeffs(vec![1.0, m]), Poly::from_coeffs(vec![0.0, m / e])],
                [Poly::from_coeffs(vec![0.0, -m * e]), Poly::from_coeffs(vec![1.0, -m])],
            ],
            Variable::Lambda,
        );
        t = tj.mul(&t);
    }
    Ok(t)
}

/// `A(z) = z^d T(1/z) β` by the chosen route.
pub fn build_a(
    state: &PeakonState,
    params: &ModelParams,
    method: AMethod,
) -> Result<MatrixPoly2, LaxError> {
    match method {
        AMethod::Product => a_from_t(&build_t(state, params)?, params),
        AMethod::ClosedForm => a_closed_form(state, params),
    }
}

/// Coefficient reversal of `T` followed by right multiplication with `β`.
pub fn a_from_t(t: &MatrixPoly2, params: &ModelParams) -> Result<MatrixPoly2, LaxError> {
    let d = params.d;
    let beta = [params.beta_minus, params.beta_plus];
    let mut entries: [[Poly; 2]; 2] = Default::default();
    for (i, row) in entries.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            let rev = t.entries[i][j].reversed(d).ok_or(LaxError::DegreeOverflow { row: i, col: j })?;
            *cell = rev.scale(beta[j]);
        }
    }
    Ok(MatrixPoly2::new(entries, Variable::Z))
}

fn a_closed_form(state: &PeakonState, params: &ModelParams) -> Result<MatrixPoly2, LaxError> {
    params.check_state(state)?;
    let d = state.len();
    let nu2 = 2.0 * params.nu;
    let xs = state.positions();
    let m = state.masses();
    // coefficient arrays indexed by power of z
    let mut c = [[vec![0.0; d + 1], vec![0.0; d + 1]], [vec![0.0; d + 1], vec![0.0; d + 1]]];
    c[0][0][d] = params.beta_minus;
    c[1][1][d] = params.beta_plus;
    for mask in 1u64..(1u64 << d) {
        let idx: Vec<usize> = (0..d).filter(|&k| mask >> k & 1 == 1).collect();
        let j = idx.len();
        let (first, last) = (idx[0], idx[j - 1]);
        let mut weight: Scalar = idx.iter().map(|&k| m[k]).product();
        for w in idx.windows(2) {
            weight *= -(-nu2 * state.separation(w[0], w[1])).exp_m1();
        }
        let span = state.separation(first, last);
        let p = d - j;
        c[0][0][p] += weight * params.beta_minus;
        c[0][1][p] += weight * params.beta_plus * (-nu2 * xs[first]).exp();
        c[1][0][p] -= weight * params.beta_minus * (nu2 * xs[last]).exp();
        c[1][1][p] -= weight * params.beta_plus * (nu2 * span).exp();
    }
    let [[c00, c01], [c10, c11]] = c;
    let mk = |v: Vec<Scalar>| Poly::from_coeffs(v);
    Ok(MatrixPoly2::new([[mk(c00), mk(c01)], [mk(c10), mk(c11)]], Variable::Z))
}

/// The polynomial part of `A(z) / z^{d-1}`.
pub fn polynomial_part_partner(a: &MatrixPoly2) -> Result<MatrixPoly2, LaxError> {
    let d = match (a.variable, a.degree()) {
        (Variable::Z, Some(d)) if d >= 1 => d,
        _ => return Err(LaxError::NotLaxMatrix),
    };
    let e = &a.entries;
    let part = |p: &Poly| p.polynomial_part_div_monomial(d - 1);
    Ok(MatrixPoly2::new(
        [[part(&e[0][0]), part(&e[0][1])], [part(&e[1][0]), part(&e[1][1])]],
        Variable::Z,
    ))
}

/// Lax partner `B(z) = [[z/2 + νC, β₊M₋], [-β₋M₊, -z/2 - νC]]` for the drift
/// `C` carried by `params`.
///
/// The off-diagonal entries are read from the `z^{d-1}` coefficient of `A`.
/// This partner is exact for every drift. The polynomial part of
/// `A/z^{d-1}` differs from it by a multiple of the identity only when
/// `νC = (β₋+β₊)M/2`.
pub fn build_b(a: &MatrixPoly2, params: &ModelParams) -> Result<MatrixPoly2, LaxError> {
    let d = match (a.variable, a.degree()) {
        (Variable::Z, Some(d)) if d >= 1 => d,
        _ => return Err(LaxError::NotLaxMatrix),
    };
    let sub = a.coeff_matrix(d - 1);
    let c = params.nu * params.drift;
    Ok(MatrixPoly2::new(
        [
            [Poly::from_coeffs(vec![c, 0.5]), Poly::constant(sub[0][1])],
            [Poly::constant(sub[1][0]), Poly::from_coeffs(vec![-c, -0.5])],
        ],
        Variable::Z,
    ))
}

/// Max over `z_samples` of `|dA/dt - [B, A]|`, normalized per sample by
/// `max(1, |A(z)| |B(z)|)`. `dA/dt` is a central difference of the closed-form
/// `A` along the vector field. The time step is `h` divided by the fastest
/// rate in the field, so `h` is dimensionless and the truncation error does
/// not depend on how fast a given configuration moves.
pub fn lax_residual(
    state: &PeakonState,
    params: &ModelParams,
    z_samples: &[Scalar],
    h: Scalar,
) -> Result<Scalar, LaxError> {
    let a = build_a(state, params, AMethod::ClosedForm)?;
    let b = build_b(&a, params)?;
    let dir = gap_field(state, params);
    let speed = std::iter::once(dir.anchor_rate)
        .chain(dir.gap_rates.iter().copied())
        .chain(dir.mdot.iter().copied())
        .fold(1.0 as Scalar, |m, v| m.max(v.abs()));
    let h = h / speed;
    let a_plus = build_a(&state.displaced(h, &dir), params, AMethod::ClosedForm)?;
    let a_minus = build_a(&state.displaced(-h, &dir), params, AMethod::ClosedForm)?;
    let mut worst: Scalar = 0.0;
    for &z in z_samples {
        let (ap, am) = (a_plus.eval(z), a_minus.eval(z));
        let (az, bz) = (a.eval(z), b.eval(z));
        let comm = commutator(&bz, &az);
        let mut r: Scalar = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let da = (ap[i][j] - am[i][j]) / (2.0 * h);
                r = r.max((da - comm[i][j]).abs());
            }
        }
        let scale = (mat_norm_max(&az) * mat_norm_max(&bz)).max(1.0);
        worst = worst.max(r / scale);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Scalar, b: Scalar, tol: Scalar) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn zero_masses_give_identity() {
        let s = PeakonState::from_gaps_unchecked_masses(0.0, 0.0, vec![1.0], vec![0.0, 0.0]);
        let p = ModelParams::new(1.0, 0.2, 0.0, 2).unwrap();
        assert_eq!(build_t(&s, &p).unwrap(), MatrixPoly2::identity(Variable::Lambda));
    }

    #[test]
    fn single_jump_matrix() {
        let (x, m, nu) = (0.3, 1.7, 0.9);
        let s = PeakonState::new(0.0, &[x], &[m]).unwrap();
        let p = ModelParams::new(nu, 0.1, 0.0, 1).unwrap();
        let t = build_t(&s, &p).unwrap();
        let e = (2.0 * nu * x).exp();
        let c1 = t.coeff_matrix(1);
        assert_eq!(t.coeff_matrix(0), [[1.0, 0.0], [0.0, 1.0]]);
        assert!(close(c1[0][0], m, 1e-15) && close(c1[1][1], -m, 1e-15));
        assert!(close(c1[0][1], m / e, 1e-15) && close(c1[1][0], -m * e, 1e-15));
        assert!(t.det().coeffs().iter().skip(1).all(|c| c.abs() < 1e-12));
    }

    #[test]
    fn two_body_quadratic_coefficient() {
        let s = PeakonState::new(0.0, &[1.0, 2.0], &[5.0, -1.0]).unwrap();
        let p = ModelParams::new(2.0, 0.018, 0.0, 2).unwrap();
        let t = build_t(&s, &p).unwrap();
        let q = t.coeff_matrix(2);
        let (x1, x2, nu, mm): (Scalar, Scalar, Scalar, Scalar) = (1.0, 2.0, 2.0, -5.0);
        let expected = [
            [mm * (1.0 - (2.0 * nu * (x1 - x2)).exp()), mm * ((-2.0 * nu * x1).exp() - (-2.0 * nu * x2).exp())],
            [mm * ((2.0 * nu * x1).exp() - (2.0 * nu * x2).exp()), mm * (1.0 - (2.0 * nu * (x2 - x1)).exp())],
        ];
        for i in 0..2 {
            for j in 0..2 {
                assert!(close(q[i][j], expected[i][j], 1e-12), "({i},{j})");
            }
        }
    }

    #[test]
    fn single_peakon_lax_matrix() {
        let (x, m, nu, bp) = (-0.4, 2.5, 1.3, 0.3);
        let s = PeakonState::new(0.0, &[x], &[m]).unwrap();
        let p = ModelParams::new(nu, bp, 0.0, 1).unwrap();
        let bm = bp + 1.0;
        let e = (2.0 * nu * x).exp();
        for method in [AMethod::Product, AMethod::ClosedForm] {
            let a = build_a(&s, &p, method).unwrap();
            assert_eq!(a.coeff_matrix(1), [[bm, 0.0], [0.0, bp]]);
            let c0 = a.coeff_matrix(0);
            let want = [[m * bm, m * bp / e], [-m * bm * e, -m * bp]];
            for i in 0..2 {
                for j in 0..2 {
                    assert!(close(c0[i][j], want[i][j], 1e-14));
                }
            }
        }
    }

    #[test]
    fn partner_constant_term_from_asymptotics() {
        let s = PeakonState::new(0.0, &[-0.5, 0.1, 0.8], &[1.0, 0.4, 2.0]).unwrap();
        let p = ModelParams::paired(1.0, 0.05, &s).unwrap();
        let a = build_a(&s, &p, AMethod::ClosedForm).unwrap();
        let asy = s.asymptotics(p.nu);
        let poly_part = polynomial_part_partner(&a).unwrap();
        assert_eq!(poly_part.coeff_matrix(1), [[p.beta_minus, 0.0], [0.0, p.beta_plus]]);
        let c0 = poly_part.coeff_matrix(0);
        let want = [
            [p.beta_minus * asy.total_mass, p.beta_plus * asy.m_minus],
            [-p.beta_minus * asy.m_plus, -p.beta_plus * asy.total_mass],
        ];
        for i in 0..2 {
            for j in 0..2 {
                assert!(close(c0[i][j], want[i][j], 1e-13), "({i},{j})");
            }
        }
        // the symmetric-gauge partner differs from the polynomial part by a multiple of I
        let b = build_b(&a, &p).unwrap();
        let diff1 = [
            poly_part.coeff_matrix(1)[0][0] - b.coeff_matrix(1)[0][0],
            poly_part.coeff_matrix(1)[1][1] - b.coeff_matrix(1)[1][1],
        ];
        let diff0 = [
            poly_part.coeff_matrix(0)[0][0] - b.coeff_matrix(0)[0][0],
            poly_part.coeff_matrix(0)[1][1] - b.coeff_matrix(0)[1][1],
        ];
        assert!(close(diff1[0], diff1[1], 1e-14));
        assert!(close(diff0[0], diff0[1], 1e-13));
        assert_eq!(b.coeff_matrix(0)[0][1], poly_part.coeff_matrix(0)[0][1]);
    }

    #[test]
    fn static_configuration_has_zero_residual() {
        let s = PeakonState::new(0.0, &[0.0, 1.0], &[1.0, 2.0]).unwrap().with_scaled_masses(0.0);
        let p = ModelParams::new(1.0, 0.2, 0.0, 2).unwrap();
        let r = lax_residual(&s, &p, &[-1.0, 0.3, 2.0], 1e-5).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn identity_shift_leaves_commutator_unchanged() {
        let s = PeakonState::new(0.0, &[-0.3, 0.6], &[1.2, 0.7]).unwrap();
        let p = ModelParams::paired(1.0, 0.1, &s).unwrap();
        let a = build_a(&s, &p, AMethod::ClosedForm).unwrap();
        let b = build_b(&a, &p).unwrap();
        let shifted = b.add_scalar_identity(3.7, 0).add_scalar_identity(-1.1, 1);
        for &z in &[-0.8, 0.5, 1.9] {
            let c1 = commutator(&b.eval(z), &a.eval(z));
            let c2 = commutator(&shifted.eval(z), &a.eval(z));
            for i in 0..2 {
                for j in 0..2 {
                    assert!((c1[i][j] - c2[i][j]).abs() < 1e-12 * (1.0 + c1[i][j].abs()));
                }
            }
        }
    }

    #[test]
    fn partner_rejects_constant_matrix() {
        let p = ModelParams::new(1.0, 0.1, 0.0, 1).unwrap();
        assert_eq!(build_b(&MatrixPoly2::identity(Variable::Z), &p), Err(LaxError::NotLaxMatrix));
    }

    #[test]
    fn residual_is_small_for_any_drift() {
        let s = PeakonState::new(0.0, &[-0.7, 0.2, 0.9], &[1.1, -0.6, 0.8]).unwrap();
        for drift in [None, Some(0.0), Some(-2.3)] {
            let p = match drift {
                None => ModelParams::paired(0.8, 0.07, &s).unwrap(),
                Some(c) => ModelParams::new(0.8, 0.07, c, 3).unwrap(),
            };
            let r = lax_residual(&s, &p, &[-1.3, -0.2, 0.4, 1.7], 1e-4).unwrap();
            assert!(r < 1e-7, "drift {drift:?}: residual {r}");
        }
    }

    #[test]
    fn residual_shrinks_quadratically() {
        let s = PeakonState::new(0.0, &[-0.4, 0.5], &[1.5, 0.9]).unwrap();
        let p = ModelParams::paired(1.2, 0.1, &s).unwrap();
        let z = [-0.9, 0.6, 1.4];
        let r1 = lax_residual(&s, &p, &z, 1e-2).unwrap();
        let r2 = lax_residual(&s, &p, &z, 5e-3).unwrap();
        let ratio = r1 / r2;
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn product_and_closed_form_agree() {
        let s = PeakonState::new(0.0, &[-1.0, -0.2, 0.3, 1.1], &[0.5, 2.0, -1.0, 0.7]).unwrap();
        let p = ModelParams::paired(0.6, 0.2, &s).unwrap();
        let a1 = build_a(&s, &p, AMethod::Product).unwrap();
        let a2 = build_a(&s, &p, AMethod::ClosedForm).unwrap();
        let scale = a1.norm_inf();
        for k in 0..=4 {
            let (c1, c2) = (a1.coeff_matrix(k), a2.coeff_matrix(k));
            for i in 0..2 {
                for j in 0..2 {
                    assert!((c1[i][j] - c2[i][j]).abs() < 1e-12 * scale, "k={k} ({i},{j})");
                }
            }
        }
    }
}
