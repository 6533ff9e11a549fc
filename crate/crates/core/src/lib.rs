//! Repairs and repair-based inconsistency measures for relational databases
//! under denial constraints and functional dependencies.
//!
//! ```
//! use incdeg::measure::{inc_deg_g3, MeasureRequest};
//! use incdeg::text::{parse_constraints_with_schema, parse_instance};
//!
//! let db = parse_instance("P(a). P(e). Q(a,b). R(a,c).").unwrap();
//! let sigma = parse_constraints_with_schema(
//!     "dc k1: <- P(x), Q(x,y).\ndc k2: <- P(x), R(x,y).",
//!     db.schema(),
//! )
//! .unwrap();
//! let report = inc_deg_g3(&db, &sigma, &MeasureRequest::default());
//! assert_eq!((report.numerator, report.denominator), (1, 4));
//! ```

pub mod asp;
pub mod cli;
pub mod hitting;
pub mod measure;
pub mod model;
pub mod repair;
pub mod text;
pub mod violations;

pub use measure::{inc_deg_g3, measures_agree, InconsistencyReport, MeasureRequest, Normalizer};
pub use model::{
    ConflictHypergraph, ConstraintSet, DatabaseInstance, DenialConstraint, FunctionalDependency, Repair, Semantics, Tid,
};
pub use repair::{c_repairs, endogenous_c_repairs, enumerate_s_repairs, is_repair, min_hitting_set, RepairEngine};
pub use violations::{compile_fd_to_dc, find_conflicts, is_consistent};
