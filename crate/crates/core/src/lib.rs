//! Chart-local tensor calculus: curvature pipelines from metric jets, the
//! self-dual Weyl split in dimension four, Aubin-type bump deformations with
//! exact-rational principal-part coefficients, polynomial infeasibility
//! certificates, and a verification harness over a small metric catalog.

pub mod aubin;
pub mod catalog;
pub mod curvature;
pub mod duality;
pub mod error;
pub mod harness;
pub mod jets;
pub mod obstruction;
pub mod poly;
pub mod taylor;

pub use error::{Error, Result};
