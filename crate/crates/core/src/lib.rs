//! Novel word-sense detection and definition matching with a gloss/usage
//! pair classifier.
//!
//! The pipeline: [`corpus`] loads shared-task TSV splits, [`pairgen`] builds
//! positive and hard-negative training pairs, [`scorer`] trains and runs the
//! pair classifier, [`assigner`] maps new-period usages onto old senses or
//! flags them as novel, [`wiktionary`] harvests candidate definitions,
//! [`glossmatch`] attaches the best one to each novel usage, and [`metrics`]
//! scores both stages.

pub mod assigner;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod glossmatch;
pub mod lang;
pub mod metrics;
pub mod pairgen;
pub mod scorer;
pub mod wiktionary;

pub use error::{Error, Result};
pub use lang::Language;
