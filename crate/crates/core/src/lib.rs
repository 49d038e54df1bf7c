//! Layered-medium travel-time inversion posed as a sequence of QUBO problems.
//!
//! The forward model ([`model`]) produces two-way travel times for a stack
//! of layers. [`linsys`] assembles the lower-triangular system `M s = t`,
//! [`qubo`] turns a box around the current estimate into a binary
//! quadratic problem, [`samplers`] search it, and [`solver`] shrinks the
//! box until the estimate is fine enough. [`oracle`] and [`metrics`]
//! provide the classical reference and the comparison.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod linsys;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod qubo;
pub mod samplers;
pub mod solver;

pub use error::{Error, Result};
pub use linsys::{boxed_rhs, build_system, build_system_with_times, recover_slowness, BoxTransform, LinearSystem, SlownessVector};
pub use metrics::{compare, ComparisonReport};
pub use model::{model_from_profile, ray_angle, travel_times, Layer, LayeredModel, SoundSpeedProfile, SpacingPolicy, TravelTimes};
pub use oracle::{condition_bound, forward_substitution, ConditioningReport};
pub use qubo::{apply_gauge, build_qubo, expand_matrix, qubo_to_ising, BitLayout, GaugeVector, IsingProblem, QuboProblem};
pub use samplers::{solve_annealed, solve_exact, solve_gauged, AnnealSchedule, SampleSet};
pub use solver::{invert, InversionResult, SamplerChoice, ScheduleTemplate, SolverConfig};
