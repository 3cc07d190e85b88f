//! File formats, configuration, and pipeline plumbing behind the `pivlet`
//! binary. Kept as a library so integration tests can drive each layer
//! directly as well as through the executable.

pub mod commands;
pub mod config;
pub mod fields_csv;
pub mod frame_io;
pub mod pgm;
pub mod pipeline;
pub mod pngio;
pub mod reference_csv;
