//! Peakon laboratory for the Calogero–Françoise flows.
//!
//! A configuration of `d` peakons with positions `x_j` and masses `m_j`
//! moves under the kernel
//! `G(x) = β₋/(2ν) e^{-2ν|x|} + β₊/(2ν) e^{2ν|x|}` with `β₋ - β₊ = 1`.
//! The crate integrates that flow ([`flow`]), builds its Lax matrix
//! ([`lax`]), reads off the spectral curve and the Weyl function
//! ([`spectral`]), analyses two-body collisions ([`collision`]) and inverts
//! Weyl data back to peakons through Stieltjes continued fractions
//! ([`inverse`]).
//!
//! ```
//! use cf_peakon::{build_a, AMethod, ModelParams, PeakonState};
//!
//! let state = PeakonState::new(0.0, &[-0.5, 0.5], &[1.0, 2.0]).unwrap();
//! let params = ModelParams::paired(1.0, 0.05, &state).unwrap();
//! let a = build_a(&state, &params, AMethod::ClosedForm).unwrap();
//! // the z^{d-1} coefficient of Tr A is the total mass
//! assert!((a.trace().coeff(1) - 3.0).abs() < 1e-12);
//! ```

#![allow(clippy::needless_range_loop)]

/// Working precision for every numeric routine in the crate.
pub type Scalar = f64;

pub mod collision;
pub mod flow;
pub mod inverse;
pub mod lax;
pub mod model;
pub mod poly;
pub mod spectral;

pub use collision::{c2_invariant, canonical_form, collision_limit_a, CollisionError, CollisionForm, RationalFn};
pub use flow::{
    integrate, invariant_drift, sign_check, BlowupKind, DriftReport, FlowError, IntegratorConfig, Termination,
    Trajectory,
};
pub use inverse::{
    hankel_minor, peakons_to_string, reconstruct_string, stieltjes_coefficients, string_to_peakons, InverseError,
    MomentSequence, OddIndexFormula, Reconstruction, StringData,
};
pub use lax::{build_a, build_b, build_t, lax_residual, AMethod, LaxError, MatrixPoly2, Variable};
pub use model::{ModelError, ModelParams, PeakonState};
pub use poly::{Poly, PowerSeries, SeriesError};
pub use spectral::{
    curve_data, trace_invariants, weyl_series, Sheet, SpectralData, SpectralError, WeylFormula, WeylSeries,
};
