//! Thread-pool execution, JSON/CSV/PGM/SVG formats and the `navsim`
//! command-line front end built on [`navsim_core`].

pub use navsim_core as core;

pub mod cli;
pub mod exec;
pub mod grid;
pub mod io;
pub mod report;
pub mod svg;
pub mod trajectory;
