//! Discrete optimization under scenario uncertainty with the weighted OWA
//! (WOWA) criterion.
//!
//! A [`ScenarioInstance`] holds `K` cost scenarios over `n` elements,
//! scenario probabilities `p` and rank weights `v`. Solutions are ranked by
//! the WOWA of their scenario costs. The crate provides:
//!
//! * the aggregation operators ([`wowa`](mod@wowa)),
//! * greedy selection and Hungarian assignment base solvers ([`solvers`]),
//! * the aggregated-cost approximation with its `v_1 K` guarantee ([`approx`]),
//! * the tail-integral decomposition and MIP model with LP export ([`mip`]),
//! * exhaustive and branch-and-bound exact solvers ([`exact`]),
//! * a seeded instance generator and benchmark harness ([`experiments`]).
//!
//! All numeric code is generic over [`Scalar`] (`f64` and `f32`); the
//! aliases below fix `f64`.

pub mod approx;
pub mod error;
pub mod exact;
pub mod experiments;
pub mod io;
pub mod mip;
pub mod model;
pub mod rng;
pub mod scalar;
pub mod solvers;
pub mod wowa;

pub use approx::{aggregate_costs, approx_solve, approx_solve_with, ApproxResult};
pub use error::{Error, Result};
pub use exact::{brute_force, exact_bb, ExactResult, ProofStatus};
pub use mip::{build_mip, compute_lj, export_lp, wowa_via_decomposition, MipModel};
pub use model::{ProblemKind, ScenarioInstance, Solution, Violation};
pub use scalar::Scalar;
pub use solvers::{solve_assignment, solve_selection, BuiltinSolver, DeterministicSolver, PartialFixing};
pub use wowa::{
    f_pi, generate_weights, owa, rank_weights, wowa, wstar_eval, DistortionFunction, ProbabilityVector, RankWeights,
    WeightVector, Wowa,
};

pub type Instance = ScenarioInstance<f64>;
pub type Instance32 = ScenarioInstance<f32>;
pub type Weights = WeightVector<f64>;
pub type Probabilities = ProbabilityVector<f64>;
pub type Distortion = DistortionFunction<f64>;
pub type WowaOperator = Wowa<f64>;
pub type Model = MipModel<f64>;
pub type Approx = ApproxResult<f64>;
pub type Exact = ExactResult<f64>;
