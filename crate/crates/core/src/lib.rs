//! Core of the topic-switching pipeline.
//!
//! Everything in this crate is pure computation over in-memory values and
//! builds without `std` (only `alloc` is required). File formats, the HTTP
//! embedding bridge, and the command line live in the `topicswitch` crate.
//!
//! The flow mirrors how an earnings call is analysed:
//!
//! 1. [`transcript`] pairs analyst questions with the management answers.
//! 2. [`encoder`] turns each text span into an embedding vector.
//! 3. [`tsi`] scores each pair as one minus cosine similarity and averages
//!    the scores per call.
//! 4. [`market`] aligns each call with the surrounding trading days and
//!    produces up/down labels.
//! 5. [`models`], [`regression`] and [`analytics`] evaluate the index.

#![no_std]

extern crate alloc;

#[cfg(any(feature = "std", test))]
extern crate std;

pub mod analytics;
pub mod encoder;
pub mod market;
pub mod math;
pub mod models;
pub mod regression;
pub mod sector;
pub mod transcript;
pub mod tsi;

pub use encoder::{EmbeddingVector, Encoder, EncoderConfig};
pub use market::{LabelKind, LabelSpec, LabeledCall, PriceSeries};
pub use sector::Sector;
pub use transcript::{EarningsCall, QaPair, Role, SpeakerTurn};
pub use tsi::{CallIndexRecord, PairScore};

/// Calendar date used throughout the pipeline.
pub type Date = chrono::NaiveDate;
