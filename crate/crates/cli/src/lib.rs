//! Command-line front end: module documents, the example zoo, command
//! implementations and the acceptance suite.

pub mod acceptance;
pub mod doc;
pub mod error;
pub mod run;
pub mod zoo;

pub use doc::{parse_spec, Expr, ModuleSpecDoc, ParseError};
pub use error::CliError;

/// Caps the global thread pool from `SWANLAB_THREADS`; unset or invalid means rayon's default.
pub fn init_threads() {
    if let Some(n) = std::env::var("SWANLAB_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}
