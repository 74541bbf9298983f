//! Phrase-table triangulation for pivot-based statistical machine
//! translation, with morphology constraint features.
//!
//! A source–pivot and a pivot–target phrase table are joined on shared pivot
//! phrases ([`triangulate`]); the resulting entries can be scored for
//! connectivity and morphological agreement ([`features`]), merged with a
//! direct table ([`combine`]) and evaluated with a small monotone decoder and
//! BLEU ([`eval`]).

pub mod cli;
pub mod combine;
pub mod error;
pub mod eval;
pub mod extsort;
pub mod features;
pub mod morph;
pub mod table;
pub mod triangulate;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/phrase-tables.md")]
    mod phrase_tables {}
    #[doc = include_str!("../../../book/src/triangulation.md")]
    mod triangulation {}
    #[doc = include_str!("../../../book/src/morphology.md")]
    mod morphology {}
    #[doc = include_str!("../../../book/src/features.md")]
    mod features {}
    #[doc = include_str!("../../../book/src/combination.md")]
    mod combination {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
