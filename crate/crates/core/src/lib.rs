//! Distant-supervised segmentation of multilabel documents.
//!
//! A feed-forward scorer estimates `P(label | text span)` over the document
//! classes plus a null class. Given those scores, [`segmenter::dp_segment`]
//! finds the labeled segmentation that maximizes the summed scores minus a
//! fixed penalty per segment. [`pipeline`] trains the scorer from
//! document-level labels only, optionally refining it on its own segments.

pub mod classifier;
pub mod corpus;
mod error;
pub mod metrics;
pub mod pipeline;
pub mod segmenter;
pub mod stem;
pub mod stopwords;
pub mod toy;

pub use error::{Error, Result};
