//! Diachronic word embeddings in a single vector space.
//!
//! Every period's words are embedded together: tagged skip-gram with
//! negative sampling (one input row per word and period, one shared context
//! layer), tagged SVD over stacked PPMI matrices, and the usual baselines
//! (per-period SGNS and SVD, orthogonal Procrustes, joint dynamic
//! factorization). The [`eval`] module holds the experiment harnesses.

pub mod align;
pub mod checkpoint;
pub mod cooc;
pub mod embedding;
pub mod corpus;
pub mod dw2v;
pub mod error;
pub mod eval;
pub mod methods;
pub mod ppmi;
pub mod scalar;
pub mod sgns;
pub mod sparse;
pub mod svd;
pub mod synthetic;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type EmbeddingSetF32 = embedding::EmbeddingSet<f32>;
pub type EmbeddingSetF64 = embedding::EmbeddingSet<f64>;
pub type SgnsModelF32 = sgns::SgnsModel<f32>;
pub type SgnsModelF64 = sgns::SgnsModel<f64>;
pub type AlignmentMapF32 = align::AlignmentMap<f32>;
pub type AlignmentMapF64 = align::AlignmentMap<f64>;
