//! Adaptive integration of the peakon equations.
//!
//! The state is carried as `[x_1, g_1..g_{d-1}, m_1..m_d]` with `g_j` the gap
//! between neighbours. Near a collision the gaps shrink far below the spacing
//! of representable absolute positions, and the gap rates are computed
//! without cancellation, so this layout can follow a collision until the
//! masses reach `10^6` and beyond.

use thiserror::Error;

use crate::lax::{build_a, AMethod};
use crate::model::{gap_field, ModelError, ModelParams, PeakonState};
use crate::spectral::trace_invariants;
use crate::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("integrator setting `{0}` must be positive and finite")]
    InvalidConfig(&'static str),
    #[error("end time must be finite")]
    NonFiniteEndTime,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("step size underflow at t = {time}")]
    StepFailure { time: Scalar, partial: Box<Trajectory> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub rel_tol: Scalar,
    pub abs_tol: Scalar,
    pub max_step: Scalar,
    /// Smallest admissible gap between neighbours.
    pub collision_gap: Scalar,
    /// Largest admissible `|m_j|`.
    pub mass_cap: Scalar,
    /// Largest admissible `2ν|x_j|`; beyond it the exponential tails overflow.
    pub position_cap: Scalar,
    /// Largest admissible `|dx_j/dt|`. With `β₊ > 0` a peakon can escape
    /// to infinity in finite time and its speed diverges well before the
    /// position cap is met.
    pub speed_cap: Scalar,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: 1.0,
            collision_gap: 1e-9,
            mass_cap: 1e8,
            position_cap: 600.0,
            speed_cap: 1e8,
        }
    }
}

impl IntegratorConfig {
    pub fn with_tolerance(tol: Scalar) -> Self {
        IntegratorConfig { rel_tol: tol, abs_tol: tol * 1e-2, ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), FlowError> {
        let fields = [
            (self.rel_tol, "rel_tol"),
            (self.abs_tol, "abs_tol"),
            (self.max_step, "max_step"),
            (self.collision_gap, "collision_gap"),
            (self.mass_cap, "mass_cap"),
            (self.position_cap, "position_cap"),
            (self.speed_cap, "speed_cap"),
        ];
        for (v, name) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(FlowError::InvalidConfig(name));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BlowupKind {
    MassCap { index: usize },
    PositionCap { index: usize },
    SpeedCap { index: usize },
    /// The vector field produced a non-finite or degenerate state.
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    ReachedEnd,
    /// Neighbours `pair.0` and `pair.1` came within the collision gap.
    Collision { pair: (usize, usize), time: Scalar },
    Blowup { kind: BlowupKind, time: Scalar },
    StepFailure { time: Scalar },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<PeakonState>,
    /// Coefficients of `Tr A(z)` at each sample.
    pub invariant_log: Vec<Vec<Scalar>>,
    pub termination: Termination,
}

impl Trajectory {
    pub fn final_state(&self) -> &PeakonState {
        self.samples.last().expect("trajectory holds at least the initial state")
    }

    pub fn times(&self) -> Vec<Scalar> {
        self.samples.iter().map(|s| s.t).collect()
    }
}

/// Maximum relative drift of each `Tr A` coefficient along a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftReport {
    pub per_coefficient: Vec<Scalar>,
}

impl DriftReport {
    pub fn max(&self) -> Scalar {
        self.per_coefficient.iter().copied().fold(0.0, Scalar::max)
    }
}

pub const DRIFT_FLOOR: Scalar = 1e-12;

pub fn invariant_drift(traj: &Trajectory) -> DriftReport {
    let Some(first) = traj.invariant_log.first() else {
        return DriftReport { per_coefficient: Vec::new() };
    };
    let per_coefficient = first
        .iter()
        .enumerate()
        .map(|(k, &c0)| {
            let denom = c0.abs().max(DRIFT_FLOOR);
            traj.invariant_log.iter().map(|row| (row[k] - c0).abs() / denom).fold(0.0, Scalar::max)
        })
        .collect();
    DriftReport { per_coefficient }
}

/// True when no mass ever changes sign along the trajectory.
pub fn sign_check(traj: &Trajectory) -> bool {
    let Some(first) = traj.samples.first() else {
        return true;
    };
    traj.samples.iter().all(|s| {
        s.masses().iter().zip(first.masses()).all(|(m, m0)| m.signum() == m0.signum() && *m != 0.0)
    })
}

// Dormand–Prince 5(4) tableau.
const C: [Scalar; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[Scalar; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [Scalar; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Flattened state `[x_1, gaps.., masses..]`.
struct Packed {
    d: usize,
}

impl Packed {
    fn pack(&self, s: &PeakonState) -> Vec<Scalar> {
        let mut y = Vec::with_capacity(2 * self.d);
        y.push(s.anchor());
        y.extend_from_slice(s.gaps());
        y.extend_from_slice(s.masses());
        y
    }

    fn unpack(&self, t: Scalar, y: &[Scalar]) -> PeakonState {
        PeakonState::from_gaps_unchecked_masses(t, y[0], y[1..self.d].to_vec(), y[self.d..].to_vec())
    }

    fn admissible(&self, y: &[Scalar]) -> bool {
        y.iter().all(|v| v.is_finite()) && y[1..self.d].iter().all(|&g| g > 0.0)
    }

    fn rhs(&self, t: Scalar, y: &[Scalar], params: &ModelParams) -> Option<Vec<Scalar>> {
        if !self.admissible(y) {
            return None;
        }
        let f = gap_field(&self.unpack(t, y), params);
        let mut out = Vec::with_capacity(2 * self.d);
        out.push(f.anchor_rate);
        out.extend(f.gap_rates);
        out.extend(f.mdot);
        out.iter().all(|v| v.is_finite()).then_some(out)
    }

    /// Error weights; gaps get a purely relative weight so that a gap of
    /// `1e-14` is still resolved.
    fn weight(&self, i: usize, a: Scalar, b: Scalar, cfg: &IntegratorConfig) -> Scalar {
        let mag = a.abs().max(b.abs());
        if (1..self.d).contains(&i) {
            cfg.rel_tol * mag + cfg.abs_tol * mag.min(1.0)
        } else {
            cfg.rel_tol * mag + cfg.abs_tol
        }
    }
}

struct Step {
    y: Vec<Scalar>,
    err: Scalar,
    k_last: Vec<Scalar>,
}

fn dp_step(
    pk: &Packed,
    params: &ModelParams,
    cfg: &IntegratorConfig,
    t: Scalar,
    y: &[Scalar],
    k1: &[Scalar],
    h: Scalar,
) -> Option<Step> {
    let n = y.len();
    let mut k: Vec<Vec<Scalar>> = Vec::with_capacity(7);
    k.push(k1.to_vec());
    let mut ytmp = vec![0.0; n];
    for s in 1..7 {
        for i in 0..n {
            let incr: Scalar = (0..s).map(|j| A[s][j] * k[j][i]).sum();
            ytmp[i] = y[i] + h * incr;
        }
        k.push(pk.rhs(t + C[s] * h, &ytmp, params)?);
    }
    // stage 7 is evaluated at the fifth-order solution
    let ynew = ytmp;
    let mut err: Scalar = 0.0;
    for i in 0..n {
        let e: Scalar = h * (0..7).map(|j| E[j] * k[j][i]).sum::<Scalar>();
        let w = pk.weight(i, y[i], ynew[i], cfg);
        err = err.max((e / w).abs());
    }
    Some(Step { y: ynew, err, k_last: k.pop().unwrap() })
}

struct Recorder {
    samples: Vec<PeakonState>,
    log: Vec<Vec<Scalar>>,
}

impl Recorder {
    fn push(&mut self, s: PeakonState, params: &ModelParams) {
        let inv = build_a(&s, params, AMethod::ClosedForm)
            .map(|a| trace_invariants(&a))
            .unwrap_or_default();
        self.log.push(inv);
        self.samples.push(s);
    }

    fn finish(self, termination: Termination) -> Trajectory {
        Trajectory { samples: self.samples, invariant_log: self.log, termination }
    }
}

/// Integrate from `state0.t` to `t_end`, which may lie in the past.
pub fn integrate(
    state0: &PeakonState,
    params: &ModelParams,
    t_end: Scalar,
    cfg: &IntegratorConfig,
) -> Result<Trajectory, FlowError> {
    cfg.validate()?;
    params.check_state(state0)?;
    if !t_end.is_finite() {
        return Err(FlowError::NonFiniteEndTime);
    }
    let d = state0.len();
    let pk = Packed { d };
    let mut rec = Recorder { samples: Vec::new(), log: Vec::new() };
    rec.push(pk.unpack(state0.t, &pk.pack(state0)), params);

    let span = (t_end - state0.t).abs();
    if span == 0.0 {
        return Ok(rec.finish(Termination::ReachedEnd));
    }
    let dir = (t_end - state0.t).signum();
    let mut t = state0.t;
    let mut y = pk.pack(state0);
    let Some(mut k1) = pk.rhs(t, &y, params) else {
        return Ok(rec.finish(Termination::Blowup { kind: BlowupKind::NonFinite, time: t }));
    };
    let mut h = initial_step(&pk, &y, &k1, cfg).min(span).min(cfg.max_step);
    let h_min = 1e-14 * span;
    let mut err_prev: Scalar = 1e-4;

    loop {
        let remaining = (t_end - t).abs();
        if remaining <= 1e-15 * span.max(t.abs()) {
            return Ok(rec.finish(Termination::ReachedEnd));
        }
        let last = h >= remaining;
        let hs = if last { remaining } else { h };
        if hs < h_min && !last {
            let partial = Box::new(rec.finish(Termination::StepFailure { time: t }));
            return Err(FlowError::StepFailure { time: t, partial });
        }
        let Some(step) = dp_step(&pk, params, cfg, t, &y, &k1, dir * hs) else {
            // a stage left the admissible region; retry with a smaller step
            h = hs * 0.25;
            continue;
        };
        if step.err > 1.0 {
            h = hs * (0.9 * step.err.powf(-0.2)).clamp(0.1, 0.9);
            continue;
        }
        let t_new = if last { t_end } else { t + dir * hs };

        if let Some(pair) = collided(&pk, &step.y, cfg) {
            let (tc, yc) = refine_collision(&pk, params, cfg, t, &y, &k1, dir * hs);
            rec.push(pk.unpack(tc, &yc), params);
            return Ok(rec.finish(Termination::Collision { pair, time: tc }));
        }
        let new_state = PeakonState::from_gaps(t_new, step.y[0], step.y[1..d].to_vec(), step.y[d..].to_vec());
        let Ok(new_state) = new_state else {
            return Ok(rec.finish(Termination::Blowup { kind: BlowupKind::NonFinite, time: t }));
        };
        rec.push(new_state, params);
        if let Some(kind) = blown_up(&pk, &step.y, &step.k_last, params, cfg) {
            return Ok(rec.finish(Termination::Blowup { kind, time: t_new }));
        }

        t = t_new;
        y = step.y;
        k1 = step.k_last;
        let err = step.err.max(1e-10);
        let factor = 0.9 * err.powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0);
        h = (hs * factor.clamp(0.2, 5.0)).min(cfg.max_step);
        err_prev = err;
    }
}

fn initial_step(pk: &Packed, y: &[Scalar], f: &[Scalar], cfg: &IntegratorConfig) -> Scalar {
    let mut ratio: Scalar = 0.0;
    for i in 0..y.len() {
        let w = pk.weight(i, y[i], y[i], cfg);
        ratio = ratio.max((f[i] / w).abs());
    }
    if ratio == 0.0 {
        return cfg.max_step;
    }
    // one explicit step would carry an error of roughly (h·ratio)·h^4
    (1.0 / ratio).powf(0.2) * 0.1
}

fn collided(pk: &Packed, y: &[Scalar], cfg: &IntegratorConfig) -> Option<(usize, usize)> {
    let gaps = &y[1..pk.d];
    let (k, &g) = gaps.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1))?;
    (g < cfg.collision_gap).then_some((k, k + 1))
}

fn blown_up(
    pk: &Packed,
    y: &[Scalar],
    rates: &[Scalar],
    params: &ModelParams,
    cfg: &IntegratorConfig,
) -> Option<BlowupKind> {
    if let Some(index) = y[pk.d..].iter().position(|m| m.abs() > cfg.mass_cap) {
        return Some(BlowupKind::MassCap { index });
    }
    let (mut x, mut v) = (y[0], rates[0]);
    for j in 0..pk.d {
        if j > 0 {
            x += y[j];
            v += rates[j];
        }
        if 2.0 * params.nu * x.abs() > cfg.position_cap {
            return Some(BlowupKind::PositionCap { index: j });
        }
        if v.abs() > cfg.speed_cap {
            return Some(BlowupKind::SpeedCap { index: j });
        }
    }
    None
}

/// Bisect the step length until the first time a gap reaches the collision
/// gap is bracketed to `1e-10`. Returns the state on the admissible side.
fn refine_collision(
    pk: &Packed,
    params: &ModelParams,
    cfg: &IntegratorConfig,
    t: Scalar,
    y: &[Scalar],
    k1: &[Scalar],
    h: Scalar,
) -> (Scalar, Vec<Scalar>) {
    let mut lo = 0.0;
    let mut hi = h.abs();
    let dir = h.signum();
    let mut best = (t, y.to_vec());
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        match dp_step(pk, params, cfg, t, y, k1, dir * mid) {
            Some(s) if collided(pk, &s.y, cfg).is_none() => {
                lo = mid;
                best = (t + dir * mid, s.y);
            }
            _ => hi = mid,
        }
    }
    best
}
