//! Multi-armed bandits with a divisible, renewable per-period resource.
//!
//! Each round a unit of resource is split across `K` arms; arm `i` with share
//! `A` returns `A·μ_i + A^b·ξ` where `ξ` is σ-sub-Gaussian. The noise order
//! `b ∈ [0, 1]` interpolates between classic bandits (`b → 0`) and full
//! information (`b → 1`).
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix it to `f64`, which is what the harness and verifiers use.

// Negated float comparisons in this crate are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod concentration;
pub mod env;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod policies;
pub mod scalar;

pub use env::{AllocationVector, BanditInstance, InstanceSpec, NoiseFamily, NoiseStream};
pub use error::{Error, Result};
pub use estimators::ArmStatistics;
pub use policies::{EpsGreedy, Policy, PolicyKind, PolicySpec, SuccessiveElimination, UcbBinary, Uniform};
pub use scalar::Scalar;

pub type Instance = BanditInstance<f64>;
pub type Allocation = AllocationVector<f64>;
pub type Stats = ArmStatistics<f64>;
pub type SePolicy = SuccessiveElimination<f64>;
pub type GreedyPolicy = EpsGreedy<f64>;
