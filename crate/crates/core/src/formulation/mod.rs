//! The integer program, its reductions, and plan encoding/decoding.

pub mod lp;
pub mod model;
pub mod plan;
pub mod reduce;
pub mod solution;
pub mod validate;

pub use lp::{export_lp, parse_lp};
pub use model::{Model, ObjectiveSense, Sense, Var};
pub use plan::{Confusion, Knockout, Plan};
pub use reduce::{ReductionMask, ReductionPolicy, ReductionStats};
pub use solution::{import_solution, parse_solution, plan_from_values};
pub use validate::{validate_plan, ValidationReport, Violation};
