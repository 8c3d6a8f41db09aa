//! Bird-sound classification from raw audio: mel spectral features,
//! unsupervised spherical k-means feature learning, temporal summarization
//! and random-forest classification, with fold-wise evaluation.
//!
//! The stages compose as
//! `decode -> mel spectrogram -> (noise reduction) -> features -> summaries
//! -> forest -> pooled predictions -> AUC / MAP`.
//! [`pipeline`] wires them together with caching and grid search.

mod binio;
pub mod dataset;
pub mod encode;
pub mod error;
pub mod evaluate;
pub mod featlearn;
pub mod forest;
pub mod pipeline;
pub mod series;
pub mod spectral;
pub mod summarize;
pub mod synth;

pub use error::{Error, Result};
pub use series::{DimMeaning, FeatureSeries};
