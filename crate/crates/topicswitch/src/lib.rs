//! File formats, embedding backends, the study pipeline and the command-line
//! front end for the topic-switching index.
//!
//! The numerical work lives in [`topicswitch_core`], re-exported here as
//! [`core`].

pub use topicswitch_core as core;

pub mod bridge;
pub mod config;
pub mod embed;
pub mod formats;
pub mod pipeline;
pub mod prices;
pub mod records;
pub mod synth;
