//! Configuration, batch runs and result files for `phonon-eraser`.

pub mod config;
pub mod emit;
pub mod error;
pub mod run;

pub use config::{parse_config, parse_time, Config, Kind};
pub use emit::{render, write, Format};
pub use error::{CliError, ErrorReport};
pub use run::{run, ResultBundle, Table, SCHEMA};
