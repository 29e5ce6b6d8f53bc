//! Decimal sequences (the periodic expansions of `1/q`) used as spreading
//! codes for spread-spectrum watermarking of grayscale images.
//!
//! - [`dseq`]: digit generation, periods, the carry shift register.
//! - [`analysis`]: bipolar chips, correlation reports, shift selection and an
//!   LFSR m-sequence baseline.
//! - [`watermark`]: plans, embedding, correlation extraction.
//! - [`pnm`]: PGM/PBM codecs.
//! - [`synth`] and [`sweep`]: synthetic covers and parameter sweeps.

pub mod analysis;
pub mod dseq;
mod error;
pub mod pnm;
pub mod prng;
pub mod sweep;
pub mod synth;
pub mod watermark;

pub use error::{Error, Result};
