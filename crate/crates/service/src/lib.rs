//! HTTP session service and command-line tools for CRM speech-in-speech
//! testing with plain and embodied interfaces.

pub mod api;
pub mod cli;
pub mod config;
pub mod error;
pub mod registry;
pub mod routes;

pub use cli::serve;
pub use config::{AgentMode, ServiceConfig};
pub use error::{ErrorBody, ServiceError};
pub use registry::AppState;
pub use routes::router;
