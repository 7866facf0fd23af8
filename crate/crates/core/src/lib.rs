//! Generative maximum-likelihood decoding for stabilizer codes.
//!
//! An autoregressive network (MADE) learns the joint distribution of
//! syndromes and logical sectors from streamed error samples, and decodes by
//! sequential conditional argmax. Exact coset-sum MLD, a marginal neural
//! baseline and BP+OSD are included for comparison.

pub mod bench;
pub mod code;
pub mod decoders;
pub mod dem;
pub mod error;
pub mod gf2;
pub mod nn;
pub mod noise;
pub mod pauli;
pub mod rng;

pub use error::{Error, Result};
