//! Peakon state, model parameters, the Green's function and the peakon
//! vector field.
//!
//! Positions are stored as the leftmost position plus the consecutive gaps
//! `x_{j+1} - x_j`. Every quantity that depends on a separation is computed
//! from the gaps, so gaps far below the spacing of representable absolute
//! positions (which the collision dynamics reach) keep full relative precision.

use thiserror::Error;

use crate::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("nu must be positive and finite, got {0}")]
    NonPositiveNu(Scalar),
    #[error("beta_minus - beta_plus must equal 1, got {beta_minus} - {beta_plus}")]
    BetaNormalization { beta_plus: Scalar, beta_minus: Scalar },
    #[error("parameter {0} is not finite")]
    NonFinite(&'static str),
    #[error("particle count must be positive")]
    NoParticles,
    #[error("{positions} positions but {masses} masses")]
    LengthMismatch { positions: usize, masses: usize },
    #[error("mass {index} is zero")]
    ZeroMass { index: usize },
    #[error("positions {left} and {right} coincide")]
    CoincidentPositions { left: usize, right: usize },
    #[error("state has {state} particles but parameters expect {params}")]
    DimensionMismatch { state: usize, params: usize },
}

/// Fixed parameters of one run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub nu: Scalar,
    pub beta_plus: Scalar,
    pub beta_minus: Scalar,
    /// Constant `C` subtracted from the peakon superposition in `u`.
    pub drift: Scalar,
    pub d: usize,
}

/// Normalization tolerance for `beta_minus - beta_plus = 1`.
const BETA_TOL: Scalar = 1e-12;

impl ModelParams {
    /// Parameters with `beta_minus = beta_plus + 1` and an explicit drift.
    pub fn new(nu: Scalar, beta_plus: Scalar, drift: Scalar, d: usize) -> Result<Self, ModelError> {
        Self::with_beta_minus(nu, beta_plus, beta_plus + 1.0, drift, d)
    }

    /// Explicit `beta_minus`; the normalization is still enforced.
    pub fn with_beta_minus(
        nu: Scalar,
        beta_plus: Scalar,
        beta_minus: Scalar,
        drift: Scalar,
        d: usize,
    ) -> Result<Self, ModelError> {
        if !(nu.is_finite() && nu > 0.0) {
            return Err(ModelError::NonPositiveNu(nu));
        }
        if !beta_plus.is_finite() {
            return Err(ModelError::NonFinite("beta_plus"));
        }
        if !beta_minus.is_finite() {
            return Err(ModelError::NonFinite("beta_minus"));
        }
        if !drift.is_finite() {
            return Err(ModelError::NonFinite("drift"));
        }
        if ((beta_minus - beta_plus) - 1.0).abs() > BETA_TOL * (1.0 + beta_plus.abs()) {
            return Err(ModelError::BetaNormalization { beta_plus, beta_minus });
        }
        if d == 0 {
            return Err(ModelError::NoParticles);
        }
        Ok(ModelParams { nu, beta_plus, beta_minus, drift, d })
    }

    /// Parameters paired with `state`, using the drift `(beta_minus + beta_plus) M / 2`
    /// that makes the polynomial Lax partner exact.
    pub fn paired(nu: Scalar, beta_plus: Scalar, state: &PeakonState) -> Result<Self, ModelError> {
        let mut p = Self::new(nu, beta_plus, 0.0, state.len())?;
        p.drift = p.default_drift(state.total_mass());
        Ok(p)
    }

    pub fn default_drift(&self, total_mass: Scalar) -> Scalar {
        0.5 * (self.beta_minus + self.beta_plus) * total_mass
    }

    /// Whether `drift` equals the default value for the given total mass.
    pub fn has_default_drift(&self, total_mass: Scalar) -> bool {
        let c0 = self.default_drift(total_mass);
        (self.drift - c0).abs() <= 1e-12 * (1.0 + c0.abs())
    }

    pub fn det_beta(&self) -> Scalar {
        self.beta_minus * self.beta_plus
    }

    pub fn beta_sum(&self) -> Scalar {
        self.beta_minus + self.beta_plus
    }

    pub fn check_state(&self, state: &PeakonState) -> Result<(), ModelError> {
        if state.len() != self.d {
            return Err(ModelError::DimensionMismatch { state: state.len(), params: self.d });
        }
        Ok(())
    }
}

/// Positions and masses of `d` peakons at time `t`, with `x_1 < ... < x_d`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakonState {
    pub t: Scalar,
    anchor: Scalar,
    gaps: Vec<Scalar>,
    masses: Vec<Scalar>,
    reordered: bool,
}

impl PeakonState {
    /// Sorts the particles by position if necessary; see [`PeakonState::reordered`].
    pub fn new(t: Scalar, x: &[Scalar], m: &[Scalar]) -> Result<Self, ModelError> {
        if x.len() != m.len() {
            return Err(ModelError::LengthMismatch { positions: x.len(), masses: m.len() });
        }
        if x.is_empty() {
            return Err(ModelError::NoParticles);
        }
        if !t.is_finite() {
            return Err(ModelError::NonFinite("t"));
        }
        if x.iter().chain(m).any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite("state"));
        }
        let mut order: Vec<usize> = (0..x.len()).collect();
        order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
        let reordered = order.iter().enumerate().any(|(k, &j)| k != j);
        let xs: Vec<Scalar> = order.iter().map(|&j| x[j]).collect();
        let ms: Vec<Scalar> = order.iter().map(|&j| m[j]).collect();
        for (k, w) in xs.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(ModelError::CoincidentPositions { left: order[k], right: order[k + 1] });
            }
        }
        let gaps = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let mut state = Self::from_gaps(t, xs[0], gaps, ms)?;
        state.reordered = reordered;
        Ok(state)
    }

    /// Leftmost position plus consecutive gaps.
    pub fn from_gaps(
        t: Scalar,
        anchor: Scalar,
        gaps: Vec<Scalar>,
        masses: Vec<Scalar>,
    ) -> Result<Self, ModelError> {
        if masses.is_empty() {
            return Err(ModelError::NoParticles);
        }
        if gaps.len() + 1 != masses.len() {
            return Err(ModelError::LengthMismatch { positions: gaps.len() + 1, masses: masses.len() });
        }
        if !anchor.is_finite() || gaps.iter().chain(&masses).any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite("state"));
        }
        if let Some(k) = gaps.iter().position(|&g| g <= 0.0) {
            return Err(ModelError::CoincidentPositions { left: k, right: k + 1 });
        }
        if let Some(index) = masses.iter().position(|&m| m == 0.0) {
            return Err(ModelError::ZeroMass { index });
        }
        Ok(PeakonState { t, anchor, gaps, masses, reordered: false })
    }

    /// Same layout without the nonzero-mass check; used for degenerate
    /// configurations such as the all-zero-mass static state.
    pub fn from_gaps_unchecked_masses(
        t: Scalar,
        anchor: Scalar,
        gaps: Vec<Scalar>,
        masses: Vec<Scalar>,
    ) -> Self {
        debug_assert_eq!(gaps.len() + 1, masses.len());
        PeakonState { t, anchor, gaps, masses, reordered: false }
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    /// True if the constructor had to sort the input particles.
    pub fn reordered(&self) -> bool {
        self.reordered
    }

    pub fn masses(&self) -> &[Scalar] {
        &self.masses
    }

    pub fn gaps(&self) -> &[Scalar] {
        &self.gaps
    }

    pub fn anchor(&self) -> Scalar {
        self.anchor
    }

    pub fn position(&self, j: usize) -> Scalar {
        self.anchor + self.gaps[..j].iter().sum::<Scalar>()
    }

    pub fn positions(&self) -> Vec<Scalar> {
        let mut out = Vec::with_capacity(self.len());
        let mut x = self.anchor;
        out.push(x);
        for g in &self.gaps {
            x += g;
            out.push(x);
        }
        out
    }

    /// `x_j - x_i` for `i <= j`, summed from gaps.
    pub fn separation(&self, i: usize, j: usize) -> Scalar {
        debug_assert!(i <= j);
        self.gaps[i..j].iter().sum()
    }

    /// `x_j - x_k` with sign.
    pub fn signed_separation(&self, j: usize, k: usize) -> Scalar {
        if j >= k {
            self.separation(k, j)
        } else {
            -self.separation(j, k)
        }
    }

    pub fn min_gap(&self) -> Option<Scalar> {
        self.gaps.iter().copied().reduce(Scalar::min)
    }

    pub fn total_mass(&self) -> Scalar {
        self.masses.iter().sum()
    }

    pub fn asymptotics(&self, nu: Scalar) -> Asymptotics {
        let xs = self.positions();
        let mut a = Asymptotics { total_mass: 0.0, m_plus: 0.0, m_minus: 0.0 };
        for (&x, &m) in xs.iter().zip(&self.masses) {
            a.total_mass += m;
            a.m_plus += m * (2.0 * nu * x).exp();
            a.m_minus += m * (-2.0 * nu * x).exp();
        }
        a
    }

    /// Copy with every mass multiplied by `s`; the result may hold zero masses.
    pub fn with_scaled_masses(&self, s: Scalar) -> PeakonState {
        PeakonState {
            masses: self.masses.iter().map(|m| m * s).collect(),
            ..self.clone()
        }
    }

    /// Copy shifted by `h` along a direction given in gap coordinates.
    pub(crate) fn displaced(&self, h: Scalar, dir: &GapField) -> PeakonState {
        PeakonState {
            t: self.t + h,
            anchor: self.anchor + h * dir.anchor_rate,
            gaps: self.gaps.iter().zip(&dir.gap_rates).map(|(g, r)| g + h * r).collect(),
            masses: self.masses.iter().zip(&dir.mdot).map(|(m, r)| m + h * r).collect(),
            reordered: false,
        }
    }
}

/// Total mass and the exponentially weighted masses `M_± = Σ m_j e^{±2ν x_j}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Asymptotics {
    pub total_mass: Scalar,
    pub m_plus: Scalar,
    pub m_minus: Scalar,
}

/// `G(x) = β₋/(2ν) e^{-2ν|x|} + β₊/(2ν) e^{2ν|x|}`.
pub fn green(x: Scalar, params: &ModelParams) -> Scalar {
    let a = 2.0 * params.nu * x.abs();
    (params.beta_minus * (-a).exp() + params.beta_plus * a.exp()) / (2.0 * params.nu)
}

/// `G'(x)` for `x != 0`; zero at the origin (mean of the one-sided slopes).
pub fn green_slope(x: Scalar, params: &ModelParams) -> Scalar {
    if x == 0.0 {
        return 0.0;
    }
    let a = 2.0 * params.nu * x.abs();
    x.signum() * (params.beta_plus * a.exp() - params.beta_minus * (-a).exp())
}

/// `G(a + g) - G(a)` for `a, g >= 0` without cancellation.
fn green_increment(a: Scalar, g: Scalar, params: &ModelParams) -> Scalar {
    let two_nu = 2.0 * params.nu;
    (params.beta_minus * (-two_nu * a).exp() * (-two_nu * g).exp_m1()
        + params.beta_plus * (two_nu * a).exp() * (two_nu * g).exp_m1())
        / two_nu
}

/// `u(x)` and the averaged slope `<u_x>(x)`.
pub fn potential(state: &PeakonState, params: &ModelParams, x: Scalar) -> (Scalar, Scalar) {
    let mut u = -params.drift;
    let mut ux = 0.0;
    for (xk, &mk) in state.positions().into_iter().zip(state.masses()) {
        let s = x - xk;
        u += mk * green(s, params);
        ux += mk * green_slope(s, params);
    }
    (u, ux)
}

/// Right-hand side of the peakon ODEs in position coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub xdot: Vec<Scalar>,
    pub mdot: Vec<Scalar>,
}

/// Right-hand side in anchor/gap coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct GapField {
    pub anchor_rate: Scalar,
    pub gap_rates: Vec<Scalar>,
    pub mdot: Vec<Scalar>,
}

/// `mdot_j = -m_j <u_x>(x_j)`, accumulated pairwise so that `Σ mdot_j`
/// cancels term by term.
fn mass_rates(state: &PeakonState, params: &ModelParams) -> Vec<Scalar> {
    let m = state.masses();
    let d = m.len();
    let mut mdot = vec![0.0; d];
    for j in 0..d {
        for k in (j + 1)..d {
            // flux = m_j m_k G'(x_k - x_j), x_k > x_j
            let flux = m[j] * m[k] * green_slope(state.separation(j, k), params);
            // mdot_j gets -m_j m_k G'(x_j - x_k) = +flux
            mdot[j] += flux;
            mdot[k] -= flux;
        }
    }
    mdot
}

/// `u(x_j)` using separations only.
fn velocity(state: &PeakonState, params: &ModelParams, j: usize) -> Scalar {
    let m = state.masses();
    let mut u = -params.drift;
    for (k, &mk) in m.iter().enumerate() {
        let s = if k == j { 0.0 } else { state.signed_separation(j, k) };
        u += mk * green(s, params);
    }
    u
}

/// `xdot_j = u(x_j)`, `mdot_j = -m_j <u_x>(x_j)`.
pub fn vector_field(state: &PeakonState, params: &ModelParams) -> VectorField {
    let xdot = (0..state.len()).map(|j| velocity(state, params, j)).collect();
    VectorField { xdot, mdot: mass_rates(state, params) }
}

/// The vector field with gap rates `u(x_{j+1}) - u(x_j)` evaluated through
/// `expm1`, so they stay accurate relative to the gaps themselves.
pub fn gap_field(state: &PeakonState, params: &ModelParams) -> GapField {
    let m = state.masses();
    let d = m.len();
    let mut gap_rates = vec![0.0; d.saturating_sub(1)];
    for (j, rate) in gap_rates.iter_mut().enumerate() {
        let g = state.gaps()[j];
        let mut acc = 0.0;
        for (k, &mk) in m.iter().enumerate() {
            if k <= j {
                // G(x_{j+1} - x_k) - G(x_j - x_k), both arguments >= 0
                acc += mk * green_increment(state.separation(k, j), g, params);
            } else {
                // arguments x_{j+1} - x_k <= 0 and x_j - x_k < 0
                acc -= mk * green_increment(state.separation(j + 1, k), g, params);
            }
        }
        *rate = acc;
    }
    GapField { anchor_rate: velocity(state, params, 0), gap_rates, mdot: mass_rates(state, params) }
}

/// `H = ½ Σ_{j,k} m_j m_k G(x_j - x_k)`.
pub fn hamiltonian(state: &PeakonState, params: &ModelParams) -> Scalar {
    let m = state.masses();
    let mut h = 0.0;
    for j in 0..m.len() {
        for k in 0..m.len() {
            let s = if j == k { 0.0 } else { state.signed_separation(j, k) };
            h += m[j] * m[k] * green(s, params);
        }
    }
    0.5 * h
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ch_params(drift: Scalar, d: usize) -> ModelParams {
        ModelParams::new(0.5, 0.0, drift, d).unwrap()
    }

    #[test]
    fn green_at_origin() {
        let p = ModelParams::new(2.0, 0.0, 0.0, 1).unwrap();
        assert_eq!(green(0.0, &p), 0.25);
    }

    #[test]
    fn green_reduces_to_ch_kernel() {
        let p = ch_params(0.0, 1);
        for &x in &[-3.0, -0.5, 0.0, 0.7, 2.0] {
            assert!((green(x, &p) - (-(x as Scalar).abs()).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn parameter_validation() {
        assert!(matches!(ModelParams::new(0.0, 0.1, 0.0, 1), Err(ModelError::NonPositiveNu(_))));
        assert!(matches!(
            ModelParams::with_beta_minus(1.0, 0.1, 1.2, 0.0, 1),
            Err(ModelError::BetaNormalization { .. })
        ));
        assert!(matches!(ModelParams::new(1.0, 0.1, 0.0, 0), Err(ModelError::NoParticles)));
    }

    #[test]
    fn default_drift_matches_formula() {
        let s = PeakonState::new(0.0, &[0.0, 1.0], &[1.0, 2.0]).unwrap();
        let p = ModelParams::paired(1.0, 0.25, &s).unwrap();
        assert!((p.drift - 0.5 * 1.5 * 3.0).abs() < 1e-15);
        assert!(p.has_default_drift(3.0));
    }

    #[test]
    fn constructor_sorts_and_flags() {
        let s = PeakonState::new(0.0, &[2.0, -1.0, 0.5], &[1.0, 2.0, 3.0]).unwrap();
        assert!(s.reordered());
        assert_eq!(s.positions(), vec![-1.0, 0.5, 2.0]);
        assert_eq!(s.masses(), &[2.0, 3.0, 1.0]);
        let s = PeakonState::new(0.0, &[0.0, 1.0], &[1.0, 1.0]).unwrap();
        assert!(!s.reordered());
    }

    #[test]
    fn constructor_rejects_invalid_states() {
        assert!(matches!(
            PeakonState::new(0.0, &[0.0, 0.0], &[1.0, 1.0]),
            Err(ModelError::CoincidentPositions { .. })
        ));
        assert!(matches!(
            PeakonState::new(0.0, &[0.0, 1.0], &[1.0, 0.0]),
            Err(ModelError::ZeroMass { index: 1 })
        ));
        assert!(matches!(
            PeakonState::new(0.0, &[0.0, 1.0], &[1.0]),
            Err(ModelError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn single_peakon_moves_at_its_mass() {
        let s = PeakonState::new(0.0, &[0.0], &[2.0]).unwrap();
        let v = vector_field(&s, &ch_params(0.0, 1));
        assert_eq!(v.xdot, vec![2.0]);
        assert_eq!(v.mdot, vec![0.0]);
    }

    #[test]
    fn averaged_slope_vanishes_at_single_peakon() {
        let s = PeakonState::new(0.0, &[0.3], &[1.7]).unwrap();
        let p = ModelParams::new(1.3, 0.2, 0.0, 1).unwrap();
        let (_, ux) = potential(&s, &p, 0.3);
        assert_eq!(ux, 0.0);
    }

    #[test]
    fn potential_left_tail() {
        let s = PeakonState::new(0.0, &[-0.4, 0.1, 0.9], &[1.0, -0.5, 2.0]).unwrap();
        let p = ModelParams::new(0.8, 0.15, 0.3, 3).unwrap();
        let a = s.asymptotics(p.nu);
        let x: Scalar = -1.7;
        let expected = p.beta_minus / (2.0 * p.nu) * a.m_minus * (2.0 * p.nu * x).exp()
            + p.beta_plus / (2.0 * p.nu) * a.m_plus * (-2.0 * p.nu * x).exp()
            - p.drift;
        let (u, _) = potential(&s, &p, x);
        assert!((u - expected).abs() < 1e-13 * expected.abs().max(1.0));
    }

    #[test]
    fn gap_rates_match_velocity_differences() {
        let s = PeakonState::new(0.0, &[-0.7, 0.2, 0.5, 1.4], &[1.0, 2.0, 0.5, 1.5]).unwrap();
        let p = ModelParams::paired(1.1, 0.05, &s).unwrap();
        let v = vector_field(&s, &p);
        let g = gap_field(&s, &p);
        for j in 0..3 {
            let diff = v.xdot[j + 1] - v.xdot[j];
            assert!((g.gap_rates[j] - diff).abs() < 1e-13 * (1.0 + diff.abs()), "gap {j}");
        }
        assert_eq!(g.anchor_rate, v.xdot[0]);
    }

    #[test]
    fn two_body_mass_rates_are_exactly_opposite() {
        let s = PeakonState::new(0.0, &[1.0, 2.0], &[5.0, -1.0]).unwrap();
        let p = ModelParams::paired(2.0, 0.018, &s).unwrap();
        let v = vector_field(&s, &p);
        assert_eq!(v.mdot[0], -v.mdot[1]);
    }
}
