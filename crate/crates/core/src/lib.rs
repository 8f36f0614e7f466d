//! Exact symbolic calculus on jet coordinates: Euler–Lagrange operators,
//! linear differential operators with their adjoint `η`, Noether identities,
//! gauge symmetries and reducibility chains.

pub mod error;
pub mod expr;
pub mod index;
pub mod lindop;
pub mod models;
pub mod noether;
pub mod property;
pub mod random;
pub mod report;
pub mod syntax;
pub mod varcalc;

pub use error::{Error, Result};
pub use expr::{Density, Expr, JetVar, Monomial, Substitution};
pub use index::{BundleSpec, Coord, FamilyId, FieldFamily, MultiIndex, Role};
pub use lindop::{op_equal, LinearDiffOp, OperatorRole};
