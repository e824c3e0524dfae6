//! Average-case fine-grained reductions at desk scale.
//!
//! Factored problems and their count-preserving reductions, a worst-case to
//! average-case pipeline for low-degree partite polynomials, counting and
//! detection for average-case zero-k-clique, subgraph counting by
//! inclusion-edgesclusion, and counting algorithms for regular expressions
//! and longest common subsequences. Each solver has a brute-force oracle.

pub mod avgov;
pub mod bits;
pub mod corrector;
pub mod dpoly;
pub mod error;
pub mod factored;
pub mod field;
pub mod io;
pub mod sampler;
pub mod seqalign;
pub mod subgraphs;
pub mod wc2ac;
pub mod xforms;
pub mod zkc;

pub use bits::Bits;
pub use dpoly::PartitePolynomial;
pub use error::{Error, Result};
pub use factored::{FactoredVector, FfkcInstance, FkfInstance, PredKind, Predicate};
pub use field::{FieldElem, PrimeBasis};
pub use num_bigint::BigUint;
pub use sampler::SamplerConfig;
