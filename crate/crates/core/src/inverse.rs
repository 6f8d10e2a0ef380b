//! Inverse problem: from the Weyl series back to positions and masses.
//!
//! Near `λ = ∞` the Weyl data defines the Stieltjes function
//!
//! ```text
//! S(λ) = (T₁₁ - T₂₁) / (2λ T₁₁) = Σ (-1)^i c_i / λ^{i+1}
//!      = 1/(2νλ l_d + 1/(g_d + 1/(2νλ l_{d-1} + … + 1/(g_1 + 1/(2νλ l_0)))))
//! ```
//!
//! of a discrete string on `[-1/(2ν), 1/(2ν)]` with point masses `g_j` at
//! `y_j = tanh(νx_j)/(2ν)` and gaps `l_j`. The peakon masses are
//! `m_j = g_j (1 - (2νy_j)²)/2`.

use thiserror::Error;

use crate::model::{ModelError, ModelParams, PeakonState};
use crate::poly::{PowerSeries, SeriesError};
use crate::spectral::{SpectralData, SpectralError, WeylSeries};
use crate::Scalar;

/// `Δ_k` counts as zero when the last pivot `Δ_k/Δ_{k-1}` is below this
/// fraction of the largest moment in the block.
pub const HANKEL_TOL: Scalar = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InverseError {
    #[error("{needed} moments needed, {available} available")]
    InsufficientMoments { needed: usize, available: usize },
    #[error("Hankel minor Δ_{k}^{ell} = {value} is numerically zero")]
    SingularHankel { ell: usize, k: usize, value: Scalar },
    #[error("string length l_{index} = {value} is not positive")]
    NegativeLength { index: usize, value: Scalar },
    #[error("string position {index} lies outside the open interval (2νy = {value})")]
    OutOfRange { index: usize, value: Scalar },
    #[error("string masses do not share one sign")]
    MixedSignMasses,
    #[error("non-finite value in reconstruction input")]
    NonFinite,
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Moments `c_i` of `f(λ) = Σ (-1)^i c_i / λ^{i+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSequence {
    pub c: Vec<Scalar>,
}

impl MomentSequence {
    pub fn new(c: Vec<Scalar>) -> Self {
        MomentSequence { c }
    }

    pub fn count(&self) -> usize {
        self.c.len()
    }

    /// Moments of `S = z(1 - W)/2` from the `z`-coefficients `w_i` of `W`.
    pub fn from_weyl(w: &[Scalar]) -> Self {
        let c = w
            .iter()
            .enumerate()
            .map(|(i, &wi)| if i == 0 { 0.5 * (1.0 - wi) } else if i % 2 == 1 { 0.5 * wi } else { -0.5 * wi })
            .collect();
        MomentSequence { c }
    }
}

/// Determinant `Δ_k^ℓ` of the `k×k` Hankel block whose top-left entry is `c_ℓ`.
pub fn hankel_minor(c: &MomentSequence, ell: usize, k: usize) -> Result<Scalar, InverseError> {
    Ok(hankel_minor_scaled(c, ell, k)?.0)
}

/// `Δ_k^ℓ` together with the scale of its last pivot, `|Δ_{k-1}^ℓ| · max |c|`.
fn hankel_minor_scaled(c: &MomentSequence, ell: usize, k: usize) -> Result<(Scalar, Scalar), InverseError> {
    if k == 0 {
        return Ok((1.0, 1.0));
    }
    let needed = ell + 2 * k - 1;
    if c.count() < needed {
        return Err(InverseError::InsufficientMoments { needed, available: c.count() });
    }
    let block = |n: usize| -> Vec<Vec<Scalar>> {
        (0..n).map(|i| (0..n).map(|j| c.c[ell + i + j]).collect()).collect()
    };
    let largest = c.c[ell..needed].iter().fold(0.0 as Scalar, |m, v| m.max(v.abs()));
    let prev = if k == 1 { 1.0 } else { bareiss_det(&mut block(k - 1)) };
    Ok((bareiss_det(&mut block(k)), prev.abs() * largest))
}

/// Fraction-free elimination with partial pivoting; consumes `m`.
fn bareiss_det(m: &mut [Vec<Scalar>]) -> Scalar {
    let n = m.len();
    let mut sign = 1.0;
    let mut prev = 1.0;
    for p in 0..n {
        let piv = (p..n).max_by(|&a, &b| m[a][p].abs().total_cmp(&m[b][p].abs())).unwrap_or(p);
        if m[piv][p] == 0.0 {
            return 0.0;
        }
        if piv != p {
            m.swap(piv, p);
            sign = -sign;
        }
        for i in p + 1..n {
            for j in p + 1..n {
                m[i][j] = (m[i][j] * m[p][p] - m[i][p] * m[p][j]) / prev;
            }
        }
        prev = m[p][p];
    }
    sign * m[n - 1][n - 1]
}

/// Which closed form is used for the odd-index coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OddIndexFormula {
    /// `a_{2k+1} = (Δ_k^1)² / (Δ_k^0 Δ_{k+1}^0)`.
    Classical,
    /// `a_{2k+1} = (Δ_k^1)² / (Δ_k^1 Δ_{k+1}^1)`; kept only for auditing.
    Printed,
}

/// `a_1..a_n` of `f = 1/(λa₁ + 1/(a₂ + 1/(λa₃ + …)))`. Needs `n` moments.
pub fn stieltjes_coefficients(c: &MomentSequence, n: usize) -> Result<Vec<Scalar>, InverseError> {
    stieltjes_coefficients_with(c, n, OddIndexFormula::Classical)
}

pub fn stieltjes_coefficients_with(
    c: &MomentSequence,
    n: usize,
    odd: OddIndexFormula,
) -> Result<Vec<Scalar>, InverseError> {
    if c.count() < n {
        return Err(InverseError::InsufficientMoments { needed: n, available: c.count() });
    }
    if c.c.iter().take(n).any(|v| !v.is_finite()) {
        return Err(InverseError::NonFinite);
    }
    let minor = |ell: usize, k: usize| -> Result<Scalar, InverseError> {
        let (value, bound) = hankel_minor_scaled(c, ell, k)?;
        if value.abs() <= HANKEL_TOL * bound || value == 0.0 {
            return Err(InverseError::SingularHankel { ell, k, value });
        }
        Ok(value)
    };
    let mut a = Vec::with_capacity(n);
    for idx in 1..=n {
        let k = idx / 2;
        let v = if idx % 2 == 0 {
            minor(0, k)?.powi(2) / (minor(1, k)? * minor(1, k - 1)?)
        } else {
            match odd {
                OddIndexFormula::Classical => minor(1, k)?.powi(2) / (minor(0, k)? * minor(0, k + 1)?),
                OddIndexFormula::Printed => minor(1, k)?.powi(2) / (minor(1, k)? * minor(1, k + 1)?),
            }
        };
        a.push(v);
    }
    Ok(a)
}

/// The first `count` moments of the terminating continued fraction with
/// coefficients `a` (odd positions multiply `λ`).
pub fn continued_fraction_moments(a: &[Scalar], count: usize) -> Result<MomentSequence, InverseError> {
    let order = count + 1;
    let z = PowerSeries::new(vec![0.0, 1.0], order)?;
    let mut tail = PowerSeries::constant(0.0, order)?;
    for (pos, &aj) in a.iter().enumerate().rev() {
        tail = if pos % 2 == 0 {
            // 1/(a λ + tail) = z / (a + z·tail)
            z.div(&PowerSeries::constant(aj, order)?.add(&z.mul(&tail)))?
        } else {
            PowerSeries::constant(1.0, order)?.div(&PowerSeries::constant(aj, order)?.add(&tail))?
        };
    }
    let c = (0..count).map(|i| if i % 2 == 0 { tail.coeff(i + 1) } else { -tail.coeff(i + 1) }).collect();
    Ok(MomentSequence { c })
}

/// Discrete string on `[-1/(2ν), 1/(2ν)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StringData {
    /// `l_0, …, l_d` from left to right.
    pub lengths: Vec<Scalar>,
    /// `g_1, …, g_d` from left to right.
    pub masses: Vec<Scalar>,
    pub nu: Scalar,
}

impl StringData {
    pub fn total_length(&self) -> Scalar {
        self.lengths.iter().sum()
    }

    /// Continued fraction coefficients `2νl_d, g_d, 2νl_{d-1}, …, g_1, 2νl_0`.
    pub fn coefficients(&self) -> Vec<Scalar> {
        let d = self.masses.len();
        let mut a = Vec::with_capacity(2 * d + 1);
        for j in (1..=d).rev() {
            a.push(2.0 * self.nu * self.lengths[j]);
            a.push(self.masses[j - 1]);
        }
        a.push(2.0 * self.nu * self.lengths[0]);
        a
    }
}

/// Diagnostics from a reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub string: StringData,
    pub state: PeakonState,
    /// `g_1` read off `a_{2d}`; compare with the closure value.
    pub g1_from_series: Option<Scalar>,
    /// `l_0` read off `a_{2d+1}` when enough moments were supplied.
    pub l0_from_series: Option<Scalar>,
}

/// String data from `a_1..a_{2d-1}`, the total mass `M` and `ν`.
///
/// `l_0` follows from the total length `1/ν`; `g_1` from `M` once the
/// positions are known, so the peakon state is built alongside.
pub fn reconstruct_from_coefficients(
    a: &[Scalar],
    d: usize,
    total_mass: Scalar,
    nu: Scalar,
) -> Result<(StringData, PeakonState), InverseError> {
    if a.len() < 2 * d - 1 {
        return Err(InverseError::InsufficientMoments { needed: 2 * d - 1, available: a.len() });
    }
    let mut lengths = vec![0.0; d + 1];
    let mut masses = vec![0.0; d];
    for k in 0..d {
        lengths[d - k] = a[2 * k] / (2.0 * nu);
        if k >= 1 {
            masses[d - k] = a[2 * k - 1];
        }
    }
    lengths[0] = 1.0 / nu - lengths[1..].iter().sum::<Scalar>();
    if let Some((index, &value)) = lengths.iter().enumerate().find(|(_, l)| l.is_nan() || **l <= 0.0) {
        return Err(InverseError::NegativeLength { index, value });
    }
    // g_1 is provisional until the mass closure fixes it
    let (xs, weights) = string_geometry(&lengths, nu)?;
    let tail: Scalar = (1..d).map(|j| masses[j] * weights[j]).sum();
    let m1 = total_mass - tail;
    masses[0] = m1 / weights[0];
    let string = StringData { lengths, masses, nu };
    let ms: Vec<Scalar> = string.masses.iter().zip(&weights).map(|(g, w)| g * w).collect();
    check_same_sign(&string.masses)?;
    let state = PeakonState::new(0.0, &xs, &ms)?;
    Ok((string, state))
}

/// Positions `x_j` and the factors `w_j` with `m_j = w_j g_j`.
fn string_geometry(lengths: &[Scalar], nu: Scalar) -> Result<(Vec<Scalar>, Vec<Scalar>), InverseError> {
    let d = lengths.len() - 1;
    let total: Scalar = lengths.iter().sum();
    let mut left = 0.0;
    let mut xs = Vec::with_capacity(d);
    let mut ws = Vec::with_capacity(d);
    for j in 1..=d {
        left += lengths[j - 1];
        let right: Scalar = lengths[j..].iter().sum();
        // 1 ± 2νy_j computed from partial sums, normalized by the actual total
        let (lp, rp) = (2.0 * left / total, 2.0 * right / total);
        if !(lp > 0.0 && rp > 0.0) {
            return Err(InverseError::OutOfRange { index: j, value: lp - 1.0 });
        }
        xs.push((lp / rp).ln() / (2.0 * nu));
        ws.push(0.5 * lp * rp);
    }
    Ok((xs, ws))
}

fn check_same_sign(g: &[Scalar]) -> Result<(), InverseError> {
    if g.iter().any(|v| !v.is_finite()) {
        return Err(InverseError::NonFinite);
    }
    let pos = g.iter().all(|&v| v > 0.0);
    let neg = g.iter().all(|&v| v < 0.0);
    if pos || neg {
        Ok(())
    } else {
        Err(InverseError::MixedSignMasses)
    }
}

/// Full reconstruction from a Weyl series of order at least `2d`.
pub fn reconstruct_string(
    weyl: &WeylSeries,
    spectral: &SpectralData,
    params: &ModelParams,
) -> Result<Reconstruction, InverseError> {
    let d = params.d;
    let available = weyl.order.min(weyl.coeffs().len());
    if available < 2 * d {
        return Err(InverseError::InsufficientMoments { needed: 2 * d, available });
    }
    let total_mass = spectral.trace_poly.coeff(d - 1);
    let moments = MomentSequence::from_weyl(&weyl.coeffs()[..available]);
    let n = available.min(2 * d + 1);
    let a = stieltjes_coefficients(&moments, 2 * d - 1)?;
    let (string, state) = reconstruct_from_coefficients(&a, d, total_mass, params.nu)?;
    // optional cross-checks from the extra coefficients
    let extra = stieltjes_coefficients(&moments, n).ok();
    let g1_from_series = extra.as_ref().and_then(|e| e.get(2 * d - 1).copied());
    let l0_from_series = extra.as_ref().and_then(|e| e.get(2 * d).map(|v| v / (2.0 * params.nu)));
    Ok(Reconstruction { string, state, g1_from_series, l0_from_series })
}

/// Map a string back to the line.
pub fn string_to_peakons(s: &StringData) -> Result<PeakonState, InverseError> {
    if s.lengths.len() != s.masses.len() + 1 || s.masses.is_empty() {
        return Err(InverseError::InsufficientMoments { needed: s.masses.len() + 1, available: s.lengths.len() });
    }
    check_same_sign(&s.masses)?;
    if let Some((index, &value)) = s.lengths.iter().enumerate().find(|(_, l)| l.is_nan() || **l <= 0.0) {
        return Err(InverseError::NegativeLength { index, value });
    }
    let (xs, ws) = string_geometry(&s.lengths, s.nu)?;
    let ms: Vec<Scalar> = s.masses.iter().zip(&ws).map(|(g, w)| g * w).collect();
    Ok(PeakonState::new(0.0, &xs, &ms)?)
}

/// `y = tanh(νx)/(2ν)` for a single point; the inverse of the position map.
pub fn string_position(x: Scalar, nu: Scalar) -> Scalar {
    (nu * x).tanh() / (2.0 * nu)
}

/// `x = ln((1 + 2νy)/(1 - 2νy))/(2ν)`.
pub fn line_position(y: Scalar, nu: Scalar) -> Result<Scalar, InverseError> {
    let s = 2.0 * nu * y;
    if s.is_nan() || s.abs() >= 1.0 {
        return Err(InverseError::OutOfRange { index: 0, value: s });
    }
    Ok(s.atanh() / nu)
}

/// The string of a peakon state, with gaps computed without cancellation.
pub fn peakons_to_string(state: &PeakonState, nu: Scalar) -> StringData {
    let d = state.len();
    let xs = state.positions();
    let ch: Vec<Scalar> = xs.iter().map(|x| (nu * x).cosh()).collect();
    let mut lengths = Vec::with_capacity(d + 1);
    lengths.push((nu * xs[0]).exp() / (2.0 * nu * ch[0]));
    for j in 0..d - 1 {
        lengths.push((nu * state.gaps()[j]).sinh() / (2.0 * nu * ch[j] * ch[j + 1]));
    }
    lengths.push((-nu * xs[d - 1]).exp() / (2.0 * nu * ch[d - 1]));
    let masses = state.masses().iter().zip(&ch).map(|(m, c)| 2.0 * c * c * m).collect();
    StringData { lengths, masses, nu }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moments(c: &[Scalar]) -> MomentSequence {
        MomentSequence::new(c.to_vec())
    }

    #[test]
    fn hankel_conventions() {
        let c = moments(&[3.0, 1.0, 1.0, 1.0]);
        assert_eq!(hankel_minor(&c, 2, 0).unwrap(), 1.0);
        assert_eq!(hankel_minor(&c, 0, 1).unwrap(), 3.0);
        assert_eq!(hankel_minor(&moments(&[1.0; 5]), 0, 2).unwrap(), 0.0);
        assert_eq!(hankel_minor(&c, 1, 2).unwrap(), 0.0);
        assert!(matches!(hankel_minor(&c, 1, 3), Err(InverseError::InsufficientMoments { .. })));
    }

    #[test]
    fn bareiss_matches_cofactor_expansion() {
        let c = moments(&[2.0, -1.0, 0.5, 3.0, 1.5]);
        // 3×3 Hankel [[2,-1,.5],[-1,.5,3],[.5,3,1.5]]
        let want = 2.0 * (0.5 * 1.5 - 9.0) + 1.0 * (-1.5 - 1.5) + 0.5 * (-3.0 - 0.25);
        assert!((hankel_minor(&c, 0, 3).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn geometric_moments_give_unit_coefficients() {
        // 1/(λ + 1) = Σ (-1)^i / λ^{i+1} = 1/(λ·1 + 1/1)
        assert_eq!(stieltjes_coefficients(&moments(&[1.0, 1.0]), 2).unwrap(), vec![1.0, 1.0]);
        // the fraction terminates: a₃ needs Δ_2^0, which vanishes
        assert!(matches!(
            stieltjes_coefficients(&moments(&[1.0, 1.0, 1.0]), 3),
            Err(InverseError::SingularHankel { .. })
        ));
    }

    #[test]
    fn moments_of_fraction_round_trip() {
        let a = [0.7, 1.3, 2.1, 0.4, 1.9, 0.8];
        let c = continued_fraction_moments(&a, 6).unwrap();
        let back = stieltjes_coefficients(&c, 6).unwrap();
        for (u, v) in a.iter().zip(&back) {
            assert!((u - v).abs() < 1e-10 * u, "{u} vs {v}");
        }
    }

    #[test]
    fn printed_odd_formula_fails() {
        let a = [0.7, 1.3, 2.1, 0.4, 1.9, 0.8, 1.1];
        // Δ_3^1 reaches c_5, one moment beyond the classical requirement
        let c = continued_fraction_moments(&a, 6).unwrap();
        let printed = stieltjes_coefficients_with(&c, 5, OddIndexFormula::Printed).unwrap();
        assert!((printed[2] - a[2]).abs() > 1e-3);
    }

    #[test]
    fn position_map_fixes_origin() {
        for nu in [0.3, 1.0, 2.5] {
            assert_eq!(line_position(0.0, nu).unwrap(), 0.0);
            let x = 0.37;
            assert!((line_position(string_position(x, nu), nu).unwrap() - x).abs() < 1e-14);
        }
        assert!(matches!(line_position(0.5, 1.0), Err(InverseError::OutOfRange { .. })));
    }

    #[test]
    fn string_total_length_and_back() {
        let s = PeakonState::new(0.0, &[-0.8, 0.1, 1.2], &[0.5, 1.5, 0.9]).unwrap();
        let nu = 0.9;
        let string = peakons_to_string(&s, nu);
        assert!((string.total_length() - 1.0 / nu).abs() < 1e-14);
        let back = string_to_peakons(&string).unwrap();
        for j in 0..3 {
            assert!((back.position(j) - s.position(j)).abs() < 1e-13);
            assert!((back.masses()[j] - s.masses()[j]).abs() < 1e-13);
        }
    }

    #[test]
    fn coefficients_reconstruct_string() {
        let s = PeakonState::new(0.0, &[-0.3, 0.6], &[1.1, 0.6]).unwrap();
        let nu = 1.3;
        let string = peakons_to_string(&s, nu);
        let a = string.coefficients();
        let (rebuilt, state) = reconstruct_from_coefficients(&a[..3], 2, s.total_mass(), nu).unwrap();
        for (u, v) in rebuilt.lengths.iter().zip(&string.lengths) {
            assert!((u - v).abs() < 1e-13);
        }
        assert!((state.masses()[0] - 1.1).abs() < 1e-13);
    }

    #[test]
    fn bad_strings_are_rejected() {
        let st = StringData { lengths: vec![0.5, 0.6, -0.1], masses: vec![1.0, 1.0], nu: 1.0 };
        assert!(matches!(string_to_peakons(&st), Err(InverseError::NegativeLength { index: 2, .. })));
        let st = StringData { lengths: vec![0.5, 0.5], masses: vec![-1.0], nu: 1.0 };
        assert!(string_to_peakons(&st).is_ok());
        let st = StringData { lengths: vec![0.4, 0.3, 0.3], masses: vec![1.0, -1.0], nu: 1.0 };
        assert_eq!(string_to_peakons(&st), Err(InverseError::MixedSignMasses));
    }
}
