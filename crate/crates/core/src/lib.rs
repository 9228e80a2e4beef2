//! Synthetic training data for low-resource language models.
//!
//! The pipeline starts from a language name and drives a teacher model
//! through prompt generation (topic, scenario and context based), prompt
//! revision, response generation with reasoning capture, and translation of
//! an English instruction corpus. The resulting examples are assembled into
//! token-budgeted training subsets, exported in a conversation format, and
//! paired with a fine-tuning configuration. A few-shot evaluation harness
//! with accuracy and chrF++ scoring closes the loop.
//!
//! Numeric code (chrF++, length ratios, task probabilities) is generic over
//! [`Scalar`]; the aliases below pin the common `f64` instantiations.

pub mod dataset;
pub mod eval;
pub mod pipeline;
pub mod prompts;
pub mod responses;
pub mod rng;
pub mod scalar;
pub mod teacher;
pub mod tokenize;
pub mod translation;

pub use scalar::Scalar;
pub use tokenize::{CharCounter, TokenCounter, WordPunctCounter};

/// chrF++ parameters in double precision.
pub type ChrfParams = eval::chrf::ChrfParams<f64>;
/// Length-ratio bounds in double precision.
pub type RatioBounds = translation::RatioBounds<f64>;
/// A translated conversation carrying an `f64` token ratio.
pub type TranslatedConversation = translation::TranslatedConversation<f64>;
/// Translation stage outcome with `f64` ratios.
pub type TranslationOutcome = translation::TranslationOutcome<f64>;
