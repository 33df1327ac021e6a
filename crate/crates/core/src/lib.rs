//! Exact bounded-generation toolkit for `SL_m` over the integers.
//!
//! The crate factors group elements into short products of block elementary
//! matrices, commutators and a small residue, emits machine-checkable
//! certificates, evaluates Kazhdan-constant budgets with certified interval
//! arithmetic, and probes spectral gaps of small Schreier graphs.

pub mod budget;
pub mod cli;
pub mod decompose;
pub mod elwords;
pub mod error;
pub(crate) mod lattice;
pub mod normal_form;
pub mod random;
pub mod ring;
pub mod spectral;
pub mod unimodular;

pub use error::{Error, Result};
pub use ring::{Mat, Ring};
