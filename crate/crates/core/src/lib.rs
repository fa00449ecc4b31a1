//! Writer-invariant similarity scoring for handwritten document images.
//!
//! Pages are segmented into word hypotheses ([`segmenter`]), word images are
//! embedded as unit vectors ([`descriptor`]), and document pairs are scored by
//! a symmetric best-match distance and by a region-constrained assignment
//! score ([`matcher`]). [`eval`] holds retrieval metrics, stemming and the
//! synthetic corpus generator.

pub mod ann;
pub mod assignment;
pub mod descriptor;
pub mod doc_model;
pub mod eval;
pub mod matcher;
pub mod render;
pub mod segmenter;
