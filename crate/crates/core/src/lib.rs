//! Exact and Monte Carlo computation of system signatures, joint signatures
//! of systems with shared components, and signature-based joint reliability.
//!
//! The core objects are semicoherent [`StructureFunction`]s over a common
//! component pool, lifetime ordering models ([`PermutationModel`] and the
//! quality functions derived from them), and the signature containers in
//! [`signature`]. Everything probabilistic is generic over a [`Scalar`] so
//! the same algorithms run in exact rational arithmetic or in floating
//! point; the `Exact*` and `Real*` aliases pick the two common choices.

pub mod error;
pub mod io;
pub mod lifetimes;
pub mod quality;
pub mod reliability;
pub mod scalar;
pub mod signature;
pub mod structure;
pub mod subsets;

pub use error::{Error, Result};
pub use lifetimes::{
    empirical_joint_signature, empirical_permutation_model, EstimateReport, LifetimeModel,
    Marginal, MixturePart, Samples,
};
pub use quality::{q0, q0_multi, BivariateQuality, PermutationModel, QualityFunction};
pub use reliability::{
    check_condition_exchangeable_pair, check_state_exchangeability, decompose_joint_reliability,
    joint_reliability_direct, order_stat_joint_reliability, ComponentStateModel, ConditionReport,
    ConditionWitness, StateDistribution,
};
pub use scalar::Scalar;
pub use signature::{
    boland_signature, joint_signature, joint_structure_signature, joint_structure_tail,
    joint_tail, multi_tail, probability_signature, probability_tail, signature_from_tail,
    signature_matrix_from_tail, structure_tail, tail_from_signature, tail_matrix_from_signature,
    SignatureMatrix, SignatureVector, TailArray, TailMatrix, TailVector,
};
pub use structure::{system_lifetime, LifetimeSample, StructureFunction};

/// Exact probability scalar used throughout the rational lane.
pub type Rational = num_rational::BigRational;

pub type ExactSignatureVector = SignatureVector<Rational>;
pub type ExactTailVector = TailVector<Rational>;
pub type ExactSignatureMatrix = SignatureMatrix<Rational>;
pub type ExactTailMatrix = TailMatrix<Rational>;
pub type ExactTailArray = TailArray<Rational>;

pub type RealSignatureVector = SignatureVector<f64>;
pub type RealTailVector = TailVector<f64>;
pub type RealSignatureMatrix = SignatureMatrix<f64>;
pub type RealTailMatrix = TailMatrix<f64>;
pub type RealTailArray = TailArray<f64>;
