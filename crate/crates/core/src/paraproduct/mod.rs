//! Bony decomposition, commutators and the estimate verification harness.

pub mod bony;
pub mod harness;
pub mod registry;

pub use bony::{bony, commutator_block, commutator_blocks, dealiased_product, paraproduct, remainder, BonyTerms, Nonlinearity};
pub use harness::{
    append_csv, verify_commutator_estimate, verify_composition_estimate, verify_estimate, verify_product_estimate,
    EstimateReport, Mode,
};
pub use registry::{lookup, registry, EstimateParams, EstimateSpec};
