//! Spectral curve `w² = P(z)` of the Lax matrix and the generalized Weyl
//! function as a power series at `z = 0`.
//!
//! Everything here works in the traceless convention: `w` denotes the
//! eigenvalue of `A(z) - ½ Tr A(z)`, so `w² = P(z)` with
//! `P = ¼ (Tr A)² - det β · z^{2d}`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::lax::{MatrixPoly2, Variable};
use crate::poly::{Poly, PowerSeries, SeriesError};
use crate::Scalar;

/// Relative distance under which two roots of `P` count as one.
pub const ROOT_CLUSTER_TOL: Scalar = 1e-8;

/// Threshold, relative to the size of `A`, below which `Tr A(0)` or a Weyl
/// denominator at the origin is treated as zero.
pub const ORIGIN_TOL: Scalar = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("spectral curve has a repeated branch point near {root}")]
    DegenerateCurve { root: Complex64 },
    #[error("Tr A(0) = {trace0} vanishes: z = 0 is a branch point")]
    BranchAtOrigin { trace0: Scalar },
    #[error("Weyl denominator {value} vanishes at z = 0; the state is at or near a collision")]
    ZeroDenominator { value: Scalar },
    #[error("expected a Lax matrix in z of degree >= 1")]
    NotLaxMatrix,
    #[error("series order must be at least 1")]
    ZeroOrder,
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// Sheet of the curve over a neighbourhood of `z = 0`.
///
/// On the upper sheet the traceless eigenvalue satisfies `w(0) = +½|Tr A(0)|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sheet {
    Upper,
    Lower,
}

impl Sheet {
    pub fn sign(self) -> Scalar {
        match self {
            Sheet::Upper => 1.0,
            Sheet::Lower => -1.0,
        }
    }

    pub fn opposite(self) -> Sheet {
        match self {
            Sheet::Upper => Sheet::Lower,
            Sheet::Lower => Sheet::Upper,
        }
    }

    /// The sheet carrying the Weyl function for a given `Tr A(0)`.
    pub fn for_trace(trace0: Scalar) -> Sheet {
        if trace0 > 0.0 {
            Sheet::Upper
        } else {
            Sheet::Lower
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    pub trace_poly: Poly,
    pub det_beta: Scalar,
    pub p: Poly,
    /// All `2d` roots of `P`, repeated according to multiplicity.
    pub branch_points: Vec<Complex64>,
    pub genus: usize,
    /// True when no two branch points cluster.
    pub simple: bool,
}

impl SpectralData {
    /// Spectral data without the genericity check.
    ///
    /// When `det β = 0` the curve is the square of `½ Tr A`, so the roots of
    /// the trace are returned twice each.
    pub fn analyze(a: &MatrixPoly2, det_beta: Scalar) -> Result<SpectralData, SpectralError> {
        let d = lax_degree(a)?;
        let trace_poly = a.trace();
        let p = curve_polynomial(&trace_poly, det_beta, d);
        let branch_points = if det_beta == 0.0 {
            let mut roots = poly_roots(&trace_poly);
            roots.extend(roots.clone());
            roots
        } else {
            poly_roots(&p)
        };
        let odd = odd_multiplicity_count(&branch_points);
        let simple = odd == branch_points.len() && branch_points.len() == 2 * d;
        let genus = if simple { d - 1 } else { (odd / 2).saturating_sub(1) };
        Ok(SpectralData { trace_poly, det_beta, p, branch_points, genus, simple })
    }
}

fn lax_degree(a: &MatrixPoly2) -> Result<usize, SpectralError> {
    match (a.variable, a.degree()) {
        (Variable::Z, Some(d)) if d >= 1 => Ok(d),
        _ => Err(SpectralError::NotLaxMatrix),
    }
}

/// `P(z) = ¼ (Tr A)² - det β · z^{2d}`.
pub fn curve_polynomial(trace: &Poly, det_beta: Scalar, d: usize) -> Poly {
    let sq = (trace * trace).scale(0.25);
    &sq - &Poly::monomial(det_beta, 2 * d)
}

/// Curve data for a generic state.
///
/// The perfect-square curve of `β₊ = 0` is accepted as a known degeneration.
/// Any other clustered pair of branch points is reported as
/// [`SpectralError::DegenerateCurve`].
pub fn curve_data(a: &MatrixPoly2, det_beta: Scalar) -> Result<SpectralData, SpectralError> {
    let data = SpectralData::analyze(a, det_beta)?;
    if det_beta != 0.0 && !data.simple {
        let root = first_clustered(&data.branch_points).unwrap_or_default();
        return Err(SpectralError::DegenerateCurve { root });
    }
    Ok(data)
}

/// Coefficients of `Tr A(z)`, index `i` holding the `z^i` coefficient.
pub fn trace_invariants(a: &MatrixPoly2) -> Vec<Scalar> {
    let d = a.degree().unwrap_or(0);
    let tr = a.trace();
    (0..=d).map(|k| tr.coeff(k)).collect()
}

/// All complex roots of `p` from the companion matrix, each polished by one
/// Newton step.
///
/// A double root only resolves to about the square root of machine precision,
/// so nearby pairs whose midpoint is a critical point of `p` with a residual
/// at rounding level are merged onto that point.
pub fn poly_roots(p: &Poly) -> Vec<Complex64> {
    let n = match p.degree() {
        Some(n) if n >= 1 => n,
        _ => return Vec::new(),
    };
    let lead = p.leading();
    let mut comp = DMatrix::<Scalar>::zeros(n, n);
    for i in 1..n {
        comp[(i, i - 1)] = 1.0;
    }
    for i in 0..n {
        comp[(i, n - 1)] = -p.coeff(i) / lead;
    }
    let dp = p.derivative();
    let mut roots: Vec<Complex64> = comp
        .complex_eigenvalues()
        .iter()
        .map(|&r| newton_step(p, &dp, r))
        .collect();
    merge_double_roots(p, &dp, &mut roots);
    roots
}

fn newton_step(p: &Poly, dp: &Poly, r: Complex64) -> Complex64 {
    let slope = dp.eval_complex(r);
    if slope.norm() > 0.0 {
        let step = p.eval_complex(r) / slope;
        if step.is_finite() && step.norm() < 1e-3 * (1.0 + r.norm()) {
            return r - step;
        }
    }
    r
}

/// Bound on the rounding error of evaluating `p` at `x`.
fn eval_noise(p: &Poly, x: Complex64) -> Scalar {
    let r = x.norm();
    let n = p.coeffs().len() as Scalar;
    let mag = p.coeffs().iter().rev().fold(0.0, |acc, c| acc * r + c.abs());
    64.0 * n * Scalar::EPSILON * mag
}

fn merge_double_roots(p: &Poly, dp: &Poly, roots: &mut [Complex64]) {
    let ddp = dp.derivative();
    for i in 0..roots.len() {
        for j in i + 1..roots.len() {
            let (a, b) = (roots[i], roots[j]);
            if a == b || (a - b).norm() > 1e-5 * (1.0 + a.norm().max(b.norm())) {
                continue;
            }
            let mut mid = (a + b) * 0.5;
            for _ in 0..3 {
                mid = newton_step(dp, &ddp, mid);
            }
            if mid.im.abs() <= ROOT_CLUSTER_TOL * (1.0 + mid.re.abs()) {
                mid.im = 0.0;
            }
            if p.eval_complex(mid).norm() <= eval_noise(p, mid) {
                roots[i] = mid;
                roots[j] = mid;
            }
        }
    }
}

fn clustered(a: Complex64, b: Complex64) -> bool {
    (a - b).norm() <= ROOT_CLUSTER_TOL * (1.0 + a.norm().max(b.norm()))
}

fn cluster_sizes(roots: &[Complex64]) -> Vec<usize> {
    let mut taken = vec![false; roots.len()];
    let mut sizes = Vec::new();
    for i in 0..roots.len() {
        if taken[i] {
            continue;
        }
        taken[i] = true;
        let mut size = 1;
        for j in i + 1..roots.len() {
            if !taken[j] && clustered(roots[i], roots[j]) {
                taken[j] = true;
                size += 1;
            }
        }
        sizes.push(size);
    }
    sizes
}

fn odd_multiplicity_count(roots: &[Complex64]) -> usize {
    cluster_sizes(roots).into_iter().filter(|s| s % 2 == 1).count()
}

fn first_clustered(roots: &[Complex64]) -> Option<Complex64> {
    for i in 0..roots.len() {
        for j in i + 1..roots.len() {
            if clustered(roots[i], roots[j]) {
                return Some(roots[i]);
            }
        }
    }
    None
}

/// Which algebraically equivalent expression produces the Weyl series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeylFormula {
    /// `(w - ½(A₁₁ - A₂₂)) / A₁₂`; fails when `β₊ = 0`.
    Numerator,
    /// `A₂₁ / (w + ½(A₁₁ - A₂₂))`; the denominator at 0 is `A₁₁(0)`.
    Denominator,
    /// Fixed point of `W ↦ (A₂₁ + A₂₂W) / (A₁₁ + A₁₂W)` started at `A₂₁/A₁₁`.
    FixedPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeylSeries {
    pub series: PowerSeries,
    pub sheet: Sheet,
    pub order: usize,
}

impl WeylSeries {
    pub fn coeffs(&self) -> &[Scalar] {
        self.series.coeffs()
    }
}

/// Weyl series on the sheet fixed by the sign of `Tr A(0)`.
pub fn weyl_series(
    a: &MatrixPoly2,
    spectral: &SpectralData,
    order: usize,
    formula: WeylFormula,
) -> Result<WeylSeries, SpectralError> {
    let trace0 = spectral.trace_poly.coeff(0);
    weyl_series_on_sheet(a, spectral, order, formula, Sheet::for_trace(trace0))
}

/// Weyl series on an explicitly chosen sheet.
///
/// Only the sheet matching the sign of `Tr A(0)` yields the Weyl function;
/// the other sheet is exposed for negative controls.
pub fn weyl_series_on_sheet(
    a: &MatrixPoly2,
    spectral: &SpectralData,
    order: usize,
    formula: WeylFormula,
    sheet: Sheet,
) -> Result<WeylSeries, SpectralError> {
    let d = lax_degree(a)?;
    if order == 0 {
        return Err(SpectralError::ZeroOrder);
    }
    let scale = a.norm_inf();
    let trace0 = spectral.trace_poly.coeff(0);
    if trace0.abs() <= ORIGIN_TOL * scale {
        return Err(SpectralError::BranchAtOrigin { trace0 });
    }
    let ser = |p: &Poly| PowerSeries::from_poly(p, order);
    let e = &a.entries;
    let half_diff = ser(&(&e[0][0] - &e[1][1]))?.scale(0.5);
    let series = match formula {
        WeylFormula::Numerator | WeylFormula::Denominator => {
            let w = curve_root(spectral, d, order, sheet)?;
            let (num, den) = if formula == WeylFormula::Numerator {
                (w.sub(&half_diff), ser(&e[0][1])?)
            } else {
                (ser(&e[1][0])?, w.add(&half_diff))
            };
            guard_denominator(den.coeff(0), scale)?;
            num.div(&den)?
        }
        WeylFormula::FixedPoint => {
            if sheet != Sheet::for_trace(trace0) {
                // the iteration only converges to the eigenvector with w(0) = Tr A(0)
                let w = curve_root(spectral, d, order, sheet)?;
                let den = ser(&e[0][1])?;
                guard_denominator(den.coeff(0), scale)?;
                w.sub(&half_diff).div(&den)?
            } else {
                fixed_point_series(a, order, scale)?
            }
        }
    };
    Ok(WeylSeries { series, sheet, order })
}

/// `w = ±½ Tr A · √(1 - 4 det β z^{2d} / (Tr A)²)` on the given sheet.
///
/// Expanding `√P` directly divides by `w(0) = ½ Tr A(0)` at every order and
/// loses all accuracy when a branch point sits near the origin. In this form
/// the square root differs from one only from `z^{2d}` on, so the low
/// coefficients come straight from the trace.
fn curve_root(spectral: &SpectralData, d: usize, order: usize, sheet: Sheet) -> Result<PowerSeries, SpectralError> {
    let trace = PowerSeries::from_poly(&spectral.trace_poly, order)?;
    let ratio = PowerSeries::from_poly(&Poly::monomial(4.0 * spectral.det_beta, 2 * d), order)?
        .div(&trace.mul(&trace))?;
    let root = PowerSeries::constant(1.0, order)?.sub(&ratio).sqrt(1.0)?;
    let sign = sheet.sign() * Sheet::for_trace(spectral.trace_poly.coeff(0)).sign();
    Ok(trace.mul(&root).scale(0.5 * sign))
}

fn guard_denominator(value: Scalar, scale: Scalar) -> Result<(), SpectralError> {
    if value.abs() <= ORIGIN_TOL * scale || !value.is_finite() {
        Err(SpectralError::ZeroDenominator { value })
    } else {
        Ok(())
    }
}

fn fixed_point_series(a: &MatrixPoly2, order: usize, scale: Scalar) -> Result<PowerSeries, SpectralError> {
    let d = lax_degree(a)?;
    let e = &a.entries;
    let s = |p: &Poly| PowerSeries::from_poly(p, order);
    let (a11, a12, a21, a22) = (s(&e[0][0])?, s(&e[0][1])?, s(&e[1][0])?, s(&e[1][1])?);
    guard_denominator(a11.coeff(0), scale)?;
    let mut w = a21.div(&a11)?;
    // each pass gains 2d correct coefficients since det A = O(z^{2d})
    for _ in 0..order.div_ceil(2 * d) {
        w = a21.add(&a22.mul(&w)).div(&a11.add(&a12.mul(&w)))?;
    }
    Ok(w)
}

/// Largest coefficient of `W - A₂₁/A₁₁` below `z^{limit}`, relative to the
/// largest coefficient of `W` in that range.
pub fn pade_defect(a: &MatrixPoly2, weyl: &WeylSeries, limit: usize) -> Result<Scalar, SpectralError> {
    let n = limit.min(weyl.order);
    let e = &a.entries;
    let ratio = PowerSeries::from_poly(&e[1][0], n)?.div(&PowerSeries::from_poly(&e[0][0], n)?)?;
    let w = weyl.series.truncate(n);
    let diff = w.sub(&ratio);
    let scale = w.coeffs().iter().fold(0.0 as Scalar, |m, c| m.max(c.abs())).max(Scalar::MIN_POSITIVE);
    Ok(diff.coeffs().iter().fold(0.0 as Scalar, |m, c| m.max(c.abs())) / scale)
}
