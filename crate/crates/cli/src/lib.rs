//! `crossfield` command line and HTTP service.

pub mod cli;
pub mod error;
pub mod request;
pub mod service;

pub use cli::run;
pub use error::{AppError, EXIT_NOT_CONVERGED, EXIT_OK, EXIT_USAGE, EXIT_VALIDATION};
pub use service::{router, AppState};
