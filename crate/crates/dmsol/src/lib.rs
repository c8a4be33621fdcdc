//! Files, configuration and the `dmsol` command line on top of
//! [`dmsol_core`].
//!
//! | module | contents |
//! |---|---|
//! | [`io`] | text and binary field files |
//! | [`config`] | TOML run configuration |
//! | [`manifest`] | `manifest.json` written into every output directory |
//! | [`output`] | output directory with write-then-reread validation |
//! | [`records`] | rows and documents of the emitted CSV and JSON files |
//! | [`commands`] | the subcommands |
//! | [`cli`] | argument parsing and exit codes |

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod manifest;
pub mod output;
pub mod records;

pub use cli::run_command;
pub use config::Config;
pub use error::CliError;
