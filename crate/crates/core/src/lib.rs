//! Time-indexed "arrives-by" formulation of the air traffic flow management
//! problem, with the solvers and checks needed to study it at desk scale.
//!
//! The pipeline is
//!
//! 1. [`model`]: instance types, window derivation and validation,
//! 2. [`formulation`]: 0/1 variables, constraint rows and the delay-cost objective,
//! 3. [`lp`] and [`bnb`]: bounded-variable simplex and best-first branch-and-bound,
//! 4. [`polyhedral`]: brute-force enumeration of the feasible set, face and facet
//!    classification of the formulation's rows,
//! 5. [`decomposition`]: the conflict-set iteration that solves only flights in conflict,
//! 6. [`harness`]: instance files, random instances, experiments and reports.

pub mod bnb;
pub mod decomposition;
pub mod formulation;
pub mod harness;
pub mod lp;
pub mod model;
pub mod polyhedral;
pub mod system;

pub use model::{Instance, ValidatedInstance};
pub use system::{ConstraintSystem, Rational, Row, RowTag, Sense};

/// Absolute distance to the nearest integer below which a value counts as integral.
pub const INTEGRALITY_TOL: f64 = 1e-6;

/// Feasibility tolerance for floating point row checks.
pub const FEASIBILITY_TOL: f64 = 1e-7;
