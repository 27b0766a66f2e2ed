//! Critical front speeds of one-dimensional heterogeneous Fisher-KPP
//! equations
//!
//! ```text
//! u_t - a(x,t) u_xx + q(x,t) u_x = f(x,t,u),   f(x,t,u) <= mu(x,t) u,
//! ```
//!
//! with coefficients periodic in `x`. The crate computes the positive
//! periodic-cell solutions `eta_lambda` of the linearised problem, the speeds
//! `c_lambda` they induce, least and upper means, the critical decay rate and
//! speed `(lambda_*, c_*)`, Floquet and generalised principal eigenvalues,
//! and simulates fronts of the nonlinear equation to check all of it.
//!
//! Numerical routines are generic over [`Real`] (`f32` or `f64`); the
//! aliases at the crate root fix `f64`.

pub mod barriers;
pub mod coefficients;
pub mod error;
pub mod eta;
pub mod export;
pub mod expr;
pub mod front;
pub mod means;
pub mod parabolic;
pub mod scalar;
pub mod speed;
pub mod verification;

pub use coefficients::{
    check_kpp, make_builtin, sample_bounds, BoundReport, CoefficientField, Family, KppReport, ParamValue, Params,
    ReactionKind, ReactionTerm,
};
pub use error::{Error, Result};
pub use expr::{Bindings, Expression};
pub use scalar::Real;

pub type StateVector64 = parabolic::StateVector<f64>;
pub type CellGrid64 = parabolic::CellGrid<f64>;
pub type LineGrid64 = parabolic::LineGrid<f64>;
pub type SampledFunction64 = means::SampledFunction<f64>;
pub type MeanEstimate64 = means::MeanEstimate<f64>;
pub type EtaSolution64 = eta::EtaSolution<f64>;
pub type SpeedCurve64 = speed::SpeedCurve<f64>;
pub type EigenCurve64 = speed::EigenCurve<f64>;
pub type FrontTrace64 = front::FrontTrace<f64>;
