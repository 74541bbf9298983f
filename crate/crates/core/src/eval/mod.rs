//! Small-scale evaluation: a monotone phrase decoder and corpus BLEU.

mod bleu;
mod decode;

pub use bleu::{bleu4, BleuScore};
pub use decode::{decode_monotone, DecodeConfig, Decoded, Decoder};
