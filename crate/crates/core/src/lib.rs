//! Adaptive-gap entangled polynomial codes for coded multi-party matrix
//! multiplication over prime fields.
//!
//! The crate covers worker-count planning ([`workercount`]), the exponent-set
//! algebra behind it ([`powersets`]), share construction ([`coding`]), a
//! deterministic simulation of the three-phase protocol ([`protocol`]), and
//! closed-form cost accounting ([`costmodel`]).

#![no_std]

extern crate alloc;

pub mod coding;
pub mod costmodel;
pub mod field;
pub mod powersets;
pub mod protocol;
pub mod workercount;

pub use coding::{Role, SourceInput};
pub use costmodel::{predicted_costs, reconcile, CostReport};
pub use field::{BlockMatrix, FieldElement, PrimeField};
pub use powersets::{product_support, PartitionScheme, PowerSet};
pub use protocol::{run_protocol, Transcript};
pub use workercount::{compare, gamma, n_age};
