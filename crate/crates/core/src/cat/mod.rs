//! Finite C*-category presentations via faithful matrix representations:
//! axiom verification, matrix amplification and element positivity.

pub mod axioms;
pub mod closure;
pub mod functor;
pub mod matrix_algebra;
pub mod positivity;
pub mod presentation;
pub mod span;

pub use axioms::{check_cstar_axioms, AxiomReport, Verdict};
pub use closure::{algebra_closure, star_closure};
pub use functor::StarFunctor;
pub use matrix_algebra::{matrix_algebra, BlockLayout};
pub use positivity::{element_positivity, PositivityBreakdown};
pub use presentation::{CatElement, CatError, CatObject, CStarCategoryPresentation, StarOp};
