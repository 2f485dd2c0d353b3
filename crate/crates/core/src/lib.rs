//! Bipolar compressed-sensing matrices built from binary linear codes.
//!
//! The columns of the sensing matrix are `β_p(c) = (e − 2c)/√p` for the nonzero
//! codewords `c` of the nullspace code of a random parity-check matrix. The
//! crate covers the F₂ algebra ([`gf2`]), weight-band certificates
//! ([`codeanalysis`]), the compact matrix itself ([`sensing`]), closed-form
//! bounds ([`ripbounds`]), the uniform parity-check ensemble ([`ensemble`]) and
//! ground-truth checks including basis pursuit ([`oracle`]).

pub mod codeanalysis;
pub mod ensemble;
pub mod epsilon;
pub mod error;
pub mod gf2;
pub mod linalg;
pub mod oracle;
pub mod report;
pub mod ripbounds;
pub mod sensing;

pub use codeanalysis::{
    incoherence_certificate, weight_distribution, IncoherenceCertificate, WeightDistribution,
};
pub use epsilon::{Band, Epsilon};
pub use error::{Error, Result};
pub use gf2::{
    enumerate_codewords, generator_from_parity_check, hamming_distance, BinaryMatrix, BitVector,
    Codeword,
};
pub use sensing::{bipolarize, inner_product_via_distance, BipolarColumn, CompactSensingMatrix};
