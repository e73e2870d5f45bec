//! Worst-case expected loss over Wasserstein balls, computed exactly.
//!
//! Given an empirical distribution, a loss family, a ground norm, and a
//! transport order p ∈ [1, ∞], this crate evaluates
//! sup { E_Q[loss] : W_p(Q, P̂) ≤ α } three independent ways and keeps the
//! routes honest against each other:
//!
//! - [`duality::worst_case_dual`] minimizes the strong-dual objective
//!   λ·α^p + Σᵢ wᵢ·sup_z [loss(z) − λ·d(z, ẑⁱ)^p] over λ ≥ 0, with the inner
//!   suprema reduced exactly to univariate ray problems.
//! - [`oracle::oracle_worst_case`] searches primal displacement candidates
//!   under a shared transport budget — a lower bound by construction, never
//!   reusing the dual reductions.
//! - [`equivalence`] holds closed forms for order-1 Lipschitz families
//!   (norm-penalty form) plus a projected-subgradient fitter for the
//!   regularized objective.
//!
//! Around these sit exact discrete optimal transport ([`transport`]),
//! gradient-norm regularization bounds and the shrinking-radius experiment
//! ([`regularization`]), and robust discrete-choice probabilities
//! ([`choice`]).
//!
//! Everything numeric is generic over the scalar via [`scalar::Real`]
//! (`f32` or `f64`); the crate root exports `f64` aliases for the common
//! types. All randomized components take explicit `u64` seeds and are
//! deterministic given them.

// Validation guards use `!(a < b)` on purpose: the negated form fails NaN
// inputs, where `a >= b` would wave them through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod choice;
pub mod distribution;
pub mod duality;
pub mod equivalence;
pub mod error;
pub mod loss;
pub mod norm;
pub mod numeric;
pub mod oracle;
pub mod regularization;
pub mod sampler;
pub mod scalar;
pub mod transport;

pub use choice::{
    choice_probabilities, gev_closed_form, mnl_closed_form, nested_logit_closed_form,
    representative_agent_value, solve_alpha0, ChoiceGenerator,
};
pub use distribution::EmpiricalDistribution;
pub use duality::{
    dual_objective, finiteness_threshold, inner_sup, worst_case_dual, worst_case_inf,
    DualCertificate, SampleSup, SupOutcome,
};
pub use equivalence::{
    exactness_report, fit_regularized, norm_penalty_value, piecewise_penalty_value,
    ExactnessReport, FitConfig, FitProblem, FitResult, ParamDomain, StepSchedule,
};
pub use error::{Error, Result};
pub use loss::{
    Composition, CustomLoss, HolderBound, LossSpec, Piece, SmoothnessCertificate, UnivariateLoss,
};
pub use norm::{empirical_norm, empirical_p_mean, Exponent, NormSpec};
pub use oracle::{oracle_worst_case, DisplacementCandidate, SearchMode, SearchSpec};
pub use regularization::{
    asymptotic_gap_curve, grad_penalty, lower_bound, upper_bound, young_check, GapCurve, GapRow,
};
pub use sampler::Sampler;
pub use scalar::Real;
pub use transport::{in_ball, wasserstein_p, TransportPlan};

/// `f64` loss family.
pub type Loss = loss::LossSpec<f64>;
/// `f64` ground norm.
pub type Norm = norm::NormSpec<f64>;
/// `f64` transport / moment order.
pub type Order = norm::Exponent<f64>;
/// `f64` empirical distribution.
pub type Data = distribution::EmpiricalDistribution<f64>;
/// `f64` dual solve certificate.
pub type Certificate = duality::DualCertificate<f64>;
/// `f64` transport plan.
pub type Plan = transport::TransportPlan<f64>;
/// `f64` choice generator.
pub type Generator = choice::ChoiceGenerator<f64>;
