//! Factorization pipeline: corner reduction, block ULUL halving, commutator
//! expansion, dimension peeling, and certificates.

pub mod certificate;
pub mod commutator;
pub mod corner;
pub mod lift;
pub mod peel;
pub mod pipeline;
pub mod ulul;

pub use certificate::{check_certificate, verify_certificate, Certificate, Mode, Stage, Strategy};
pub use commutator::{antidiag3, block_unitriangular_to_commutator, commutator, commutator_expand40, h_unit, whitehead_diag5};
pub use corner::corner_reduce_gl4;
pub use lift::{elementary_word_of, lift_sl};
pub use peel::{peel_dimension, PeelCertificate, PeelFactor, B_PEEL};
pub use pipeline::{decompose_full, pipeline_el4n};
pub use ulul::block_ulul;
