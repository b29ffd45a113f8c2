//! Spectral (Umeyama) matching of correlated Gaussian geometric models.
//!
//! Two observation types are supported: Wishart-type dot-product matrices
//! `x·xᵀ`, `y·yᵀ` and pairwise Euclidean distance matrices, the latter
//! reduced to centered Gram matrices by classical double centering before
//! matching.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the Monte
//! Carlo harness and the command line live in the `geomatch` crate.

#![no_std]
extern crate alloc;

pub mod assignment;
pub mod diagnostics;
pub mod error;
pub mod matcher;
pub mod metrics;
pub mod model;
pub mod permutation;
pub mod seeding;
pub mod spectral;

pub use assignment::{brute_force_lap, solve_max_lap, AssignmentSolution};
pub use error::{Error, Result};
pub use matcher::{
    enumerate_signs, match_bases, match_distance, match_distance_with, similarity_matrix,
    umeyama_match, umeyama_match_with, MatchOptions, MatchResult, SignMatrix,
};
pub use metrics::{score, threshold_sigma, RecoveryScore, ThresholdMode};
pub use model::{
    observe, observe_distance, observe_dot, sample_instance, ModelInstance, ModelKind,
    ObservationPair, TruthMode,
};
pub use permutation::Permutation;
pub use spectral::{
    double_center, svd_factor, top_d_eigs, CenteredGram, SpectralBasis, SvdFactors,
};
