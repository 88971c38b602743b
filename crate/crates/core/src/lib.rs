//! Discrete logarithms in F_{q^{2k}} for small characteristic, via the
//! quasi-polynomial descent pipeline with trap detection and avoidance.
//!
//! The crate is organised as a pipeline: build the field tower, search for a
//! suitable (h0, h1) setup, enumerate Möbius coset representatives, generate
//! factor-base relations, analyse the relation lattice, solve factor-base
//! logarithms, then descend arbitrary elements to the factor base.

pub mod cosets;
pub mod descent;
pub mod error;
pub mod field;
pub mod lattice;
pub mod numint;
pub mod oracle;
pub mod linlog;
pub mod pipeline;
pub mod poly;
pub mod relations;
pub mod setup;

pub use error::{Error, Result};
pub use field::{FieldTower, Fq2Elt};
