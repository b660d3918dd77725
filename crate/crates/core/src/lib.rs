//! Measurement-domain compression for block-based compressive sensing of
//! grayscale images.
//!
//! The pipeline partitions an image into `B x B` blocks, measures every block
//! with one seeded row-orthonormal Gaussian matrix, predicts each block's
//! measurements from the previous block's reconstruction (DPCM), quantizes the
//! residual with a uniform midtread quantizer, and entropy codes the indices
//! with an adaptive binary arithmetic coder.
//!
//! Two entropy coding schemes share the engine and binarization:
//! [`Scheme::Proposed`] uses one context for significance flags and one for
//! level bins; [`Scheme::CabacStyle`] uses position- and history-dependent
//! context banks plus a last-significant flag. [`entropy`] provides the
//! zero-order entropy estimate the coded rates are compared against.

pub mod binarization;
pub mod cabac_baseline;
pub mod codec;
pub mod container;
pub mod dpcm;
pub mod entropy;
pub mod error;
pub mod image_io;
pub mod mcoder;
pub mod rng;
pub mod sensing;
pub mod sweep;

pub use codec::{
    decode_image, encode_image, encode_image_detailed, significance_position_profile, CodecParams, Decoded, Encoded,
};
pub use container::{split_containers, Container, Header, Scheme, HEADER_LEN};
pub use dpcm::Quantizer;
pub use error::{Error, Result};
pub use image_io::{read_pgm, write_pgm, EdgeMode, GrayImage};
pub use sensing::MeasurementMatrix;
