//! Text graph construction, a multi-task GCN graph autoencoder (MT-Text GCN),
//! random-walk baselines and cross-validated evaluation.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases at the
//! crate root fix the scalar for the common cases.

pub mod corpus;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod gcn;
pub mod graph;
pub mod mtl;
pub mod scalar;
pub mod sparse;
pub mod synthetic;
pub mod walks;

pub use error::{Error, Result};
pub use scalar::Real;

pub type SparseMatrixF64 = sparse::SparseMatrix<f64>;
pub type SparseMatrixF32 = sparse::SparseMatrix<f32>;
pub type TextGraphF64 = graph::TextGraph<f64>;
pub type TextGraphF32 = graph::TextGraph<f32>;
pub type EmbeddingTableF64 = embedding::EmbeddingTable<f64>;
pub type EmbeddingTableF32 = embedding::EmbeddingTable<f32>;
pub type GcnParamsF64 = gcn::GcnParams<f64>;
pub type GcnParamsF32 = gcn::GcnParams<f32>;
pub type GcnModelF64 = mtl::GcnModel<f64>;
pub type GcnModelF32 = mtl::GcnModel<f32>;
