//! Client for OpenAI-compatible chat-completion endpoints.

mod cache;
mod client;
pub mod mock;
mod reasoning;
mod request;
mod transport;

pub use cache::{CacheKey, ResponseCache};
pub use client::{RetryPolicy, TeacherClient, TeacherError};
pub use reasoning::ReasoningMarkers;
pub use request::{ChatRequest, ChatResponse, Message, Role, Usage};
pub use transport::{FnTransport, HttpTransport, Transport, TransportFailure};
