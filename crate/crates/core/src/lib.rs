//! Numerical workbench for finite-dimensional C*-categories, Hilbert modules
//! over them, hereditary structures, pre-complete structure and the
//! Green-Julg correspondence for finite groupoids.
//!
//! Everything is desk scale: hom-spaces are spans of small dense complex
//! matrices under a faithful representation, modules are given by finitely
//! many generators and a positive Gram matrix, and all analytic statements
//! are realized as residual checks against an explicit [`TolerancePolicy`].

pub mod cat;
pub mod doc;
pub mod greenjulg;
pub mod hereditary;
pub mod hilbert;
pub mod numerics;
pub mod precomplete;

pub use numerics::{ComplexMatrix, SpectrumReport, TolerancePolicy};
