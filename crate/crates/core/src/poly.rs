//! Univariate polynomials and truncated power series over [`Scalar`].
//!
//! [`Poly`] keeps its coefficients in ascending order and is always stored in
//! canonical trimmed form. Trimming of near-zero leading coefficients happens
//! once per operation, relative to the magnitude of the operation's inputs,
//! never on intermediate terms.
//!
//! [`PowerSeries`] tracks how many coefficients are trusted. Binary operations
//! yield `min(order_a, order_b)` and never extend a series silently.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use thiserror::Error;

use crate::Scalar;

/// Relative threshold used when canonicalizing polynomial results.
pub const TRIM_RELATIVE: Scalar = 1e-13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("denominator series has zero constant term")]
    ZeroConstantTerm,
    #[error("square root requested for a series vanishing at the origin (branch point)")]
    BranchPointAtOrigin,
    #[error("square root of a series with negative constant term {0} has no real branch")]
    NegativeConstantTerm(Scalar),
    #[error("truncation order must be at least 1")]
    ZeroOrder,
}

/// A polynomial `c[0] + c[1] x + ... + c[n] x^n`.
///
/// The zero polynomial has no stored coefficients and [`Poly::degree`]
/// returns `None` for it.
#[derive(Clone, PartialEq, Default)]
pub struct Poly {
    coeffs: Vec<Scalar>,
}

fn max_abs(c: &[Scalar]) -> Scalar {
    c.iter().fold(0.0, |m, v| m.max(v.abs()))
}

impl Poly {
    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    pub fn constant(c: Scalar) -> Self {
        Self::from_coeffs(vec![c])
    }

    /// `c * x^k`
    pub fn monomial(c: Scalar, k: usize) -> Self {
        let mut coeffs = vec![0.0; k + 1];
        coeffs[k] = c;
        Self::from_coeffs(coeffs)
    }

    /// Build from ascending coefficients; only exact trailing zeros are dropped.
    pub fn from_coeffs(mut coeffs: Vec<Scalar>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    /// Build from ascending coefficients, trimming trailing coefficients whose
    /// magnitude is below `TRIM_RELATIVE * scale`.
    pub fn canonical(mut coeffs: Vec<Scalar>, scale: Scalar) -> Self {
        let cut = TRIM_RELATIVE * scale;
        while let Some(&c) = coeffs.last() {
            if c == 0.0 || c.abs() <= cut {
                coeffs.pop();
            } else {
                break;
            }
        }
        Poly { coeffs }
    }

    pub fn coeffs(&self) -> &[Scalar] {
        &self.coeffs
    }

    /// Coefficient of `x^k` (zero beyond the stored degree).
    pub fn coeff(&self, k: usize) -> Scalar {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn leading(&self) -> Scalar {
        self.coeffs.last().copied().unwrap_or(0.0)
    }

    /// Largest coefficient magnitude.
    pub fn norm_inf(&self) -> Scalar {
        max_abs(&self.coeffs)
    }

    pub fn eval(&self, x: Scalar) -> Scalar {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_complex(&self, x: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Poly {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| c * k as Scalar)
            .collect();
        Poly::from_coeffs(coeffs)
    }

    pub fn scale(&self, s: Scalar) -> Poly {
        Poly::from_coeffs(self.coeffs.iter().map(|c| c * s).collect())
    }

    /// Multiply by `x^k`.
    pub fn shift_up(&self, k: usize) -> Poly {
        if self.is_zero() {
            return Poly::zero();
        }
        let mut coeffs = vec![0.0; k];
        coeffs.extend_from_slice(&self.coeffs);
        Poly { coeffs }
    }

    /// Coefficients `k..` of the polynomial, i.e. the polynomial part of `p / x^k`.
    pub fn polynomial_part_div_monomial(&self, k: usize) -> Poly {
        Poly::from_coeffs(self.coeffs.iter().skip(k).copied().collect())
    }

    /// `x^n p(1/x)`; `None` if the degree exceeds `n`.
    pub fn reversed(&self, n: usize) -> Option<Poly> {
        match self.degree() {
            Some(deg) if deg > n => None,
            None => Some(Poly::zero()),
            Some(_) => {
                let coeffs = (0..=n).map(|k| self.coeff(n - k)).collect();
                Some(Poly::from_coeffs(coeffs))
            }
        }
    }

    /// Divide by `(x - root)` using synthetic division; returns quotient and remainder.
    pub fn divide_linear(&self, root: Scalar) -> (Poly, Scalar) {
        let n = self.coeffs.len();
        if n == 0 {
            return (Poly::zero(), 0.0);
        }
        let mut q = vec![0.0; n - 1];
        let mut carry = 0.0;
        for k in (0..n).rev() {
            let v = self.coeffs[k] + carry * root;
            if k == 0 {
                return (Poly::from_coeffs(q), v);
            }
            q[k - 1] = v;
            carry = v;
        }
        unreachable!()
    }

    pub fn pow(&self, n: u32) -> Poly {
        (0..n).fold(Poly::one(), |acc, _| &acc * self)
    }

    fn combine(a: &Poly, b: &Poly, sign: Scalar) -> Poly {
        let n = a.coeffs.len().max(b.coeffs.len());
        let coeffs = (0..n).map(|k| a.coeff(k) + sign * b.coeff(k)).collect();
        let scale = a.norm_inf().max(b.norm_inf());
        Poly::canonical(coeffs, scale)
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "Poly(0)");
        }
        write!(f, "Poly(")?;
        for (k, c) in self.coeffs.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c:e}·x^{k}")?;
        }
        write!(f, ")")
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        Poly::combine(self, rhs, 1.0)
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        Poly::combine(self, rhs, -1.0)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(-1.0)
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.is_zero() || rhs.is_zero() {
            return Poly::zero();
        }
        let mut coeffs = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Poly::canonical(coeffs, self.norm_inf() * rhs.norm_inf())
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Poly {
            type Output = Poly;
            fn $m(self, rhs: Poly) -> Poly {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

/// A power series known through `x^(order-1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerSeries {
    coeffs: Vec<Scalar>,
}

impl PowerSeries {
    /// Coefficients beyond `order` are discarded, missing ones are zero.
    pub fn new(mut coeffs: Vec<Scalar>, order: usize) -> Result<Self, SeriesError> {
        if order == 0 {
            return Err(SeriesError::ZeroOrder);
        }
        coeffs.resize(order, 0.0);
        Ok(PowerSeries { coeffs })
    }

    pub fn from_poly(p: &Poly, order: usize) -> Result<Self, SeriesError> {
        Self::new(p.coeffs().to_vec(), order)
    }

    pub fn constant(c: Scalar, order: usize) -> Result<Self, SeriesError> {
        Self::new(vec![c], order)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[Scalar] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> Scalar {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    /// Restrict to a lower order; requests above the current order are clamped.
    pub fn truncate(&self, order: usize) -> PowerSeries {
        let n = order.clamp(1, self.order());
        PowerSeries { coeffs: self.coeffs[..n].to_vec() }
    }

    pub fn scale(&self, s: Scalar) -> PowerSeries {
        PowerSeries { coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    /// Multiply by `x^k`; the order grows by `k` since the shifted-in terms are exact zeros.
    pub fn shift_up(&self, k: usize) -> PowerSeries {
        let mut coeffs = vec![0.0; k];
        coeffs.extend_from_slice(&self.coeffs);
        PowerSeries { coeffs }
    }

    pub fn add(&self, rhs: &PowerSeries) -> PowerSeries {
        let n = self.order().min(rhs.order());
        PowerSeries { coeffs: (0..n).map(|k| self.coeffs[k] + rhs.coeffs[k]).collect() }
    }

    pub fn sub(&self, rhs: &PowerSeries) -> PowerSeries {
        let n = self.order().min(rhs.order());
        PowerSeries { coeffs: (0..n).map(|k| self.coeffs[k] - rhs.coeffs[k]).collect() }
    }

    pub fn mul(&self, rhs: &PowerSeries) -> PowerSeries {
        let n = self.order().min(rhs.order());
        let coeffs = (0..n)
            .map(|k| (0..=k).map(|j| self.coeffs[j] * rhs.coeffs[k - j]).sum())
            .collect();
        PowerSeries { coeffs }
    }

    /// `self / den` to the common truncation order.
    pub fn div(&self, den: &PowerSeries) -> Result<PowerSeries, SeriesError> {
        let d0 = den.coeffs[0];
        if d0 == 0.0 || !d0.is_finite() {
            return Err(SeriesError::ZeroConstantTerm);
        }
        let n = self.order().min(den.order());
        let mut q = vec![0.0; n];
        for k in 0..n {
            let acc: Scalar = (1..=k).map(|j| den.coeffs[j] * q[k - j]).sum();
            q[k] = (self.coeffs[k] - acc) / d0;
        }
        Ok(PowerSeries { coeffs: q })
    }

    /// The branch of `sqrt(self)` whose constant term is `sign * sqrt(self(0))`.
    pub fn sqrt(&self, sign: Scalar) -> Result<PowerSeries, SeriesError> {
        let p0 = self.coeffs[0];
        if p0 == 0.0 {
            return Err(SeriesError::BranchPointAtOrigin);
        }
        if p0 < 0.0 {
            return Err(SeriesError::NegativeConstantTerm(p0));
        }
        let n = self.order();
        let mut s = vec![0.0; n];
        s[0] = sign.signum() * p0.sqrt();
        let two_s0 = 2.0 * s[0];
        for k in 1..n {
            let acc: Scalar = (1..k).map(|j| s[j] * s[k - j]).sum();
            s[k] = (self.coeffs[k] - acc) / two_s0;
        }
        Ok(PowerSeries { coeffs: s })
    }

    pub fn eval(&self, x: Scalar) -> Scalar {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }
}
