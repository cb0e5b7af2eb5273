//! File formats, a thread-pool executor and the `dpswd` command line on top
//! of `dpswd-core`.

pub mod cli;
pub mod experiments;
pub mod io;
pub mod manifest;
mod parallel;

pub use parallel::RayonExecutor;
