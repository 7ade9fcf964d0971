//! Lattice Lipschitz operators on spaces of continuous functions over a
//! finite sample of a compact metric space.
//!
//! An operator `T` is lattice Lipschitz when some bound function `phi`
//! satisfies `|Tf(w) - Tg(w)| <= phi(w) |f(w) - g(w)|` pointwise. Such
//! operators act diagonally, as superpositions `T(f)(w) = psi(w, f(w))`.
//!
//! - [`grid`]: grids, grid functions and continuity diagnostics.
//! - [`operators`]: sampled, superposition, tensor and multiplication backends.
//! - [`bounds`]: bound functions, inequality verification and operator norms.
//! - [`extension`]: McShane, Whitney and midpoint extensions of sampled operators.
//! - [`algebra`]: composition of superposition fields.
//! - [`reference_cases`]: worked examples with known answers.

pub mod algebra;
pub mod bounds;
pub mod config;
pub mod error;
pub mod extension;
pub mod grid;
pub mod operators;
pub mod random;
pub mod reference_cases;

pub use config::Config;
pub use error::{LlipError, Result};
pub use grid::{CompactGrid, GridFunction, GridId, Metric};
pub use operators::{OperatorRep, SampleOperator, ScalarPwl, SuperpositionField, TensorOperator};
