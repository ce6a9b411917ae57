//! Rank-four PPT entangled states of two qutrits.
//!
//! The crate covers projective invariants of quintuples of product vectors,
//! the six-parameter family of unextendible product bases and its symbols,
//! construction and reconstruction of rank-four PPT entangled states, the
//! search for product states in small subspaces, stabilizer groups and
//! entanglement witnesses.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fixtures;
pub mod invariants;
pub mod json;
pub mod linalg;
pub mod pptes;
pub mod sampling;
pub mod search;
pub mod segre;
pub mod stabilizer;
pub mod upb;
pub mod witness;

pub use error::{Error, ErrorKind, Result};
pub use invariants::{InvariantSextet, QuintupleClass, Transposition};
pub use linalg::{Mat3, Op9, Tolerances, Vec3, Vec9, C64};
pub use pptes::{BlockState, CanonicalParams, ReconstructionResult};
pub use search::SearchConfig;
pub use segre::{ProductVector, Quadruple, Quintuple, Sextet, Side};
pub use upb::{Symbol, UpbAngles};
