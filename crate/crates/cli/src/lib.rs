//! Implementation library for the `parfee` command-line tool.
//!
//! The binary itself is a thin argument-parsing shell; everything it does is
//! implemented here so integration tests can drive the same code paths
//! directly. The pieces are:
//!
//! - [`scenario`]: TOML scenario files describing a publisher, an optional
//!   two-publisher market, a sweep grid, and tolerances.
//! - [`table`]: CSV emission for fee/profit sweeps and market shift sweeps.
//! - [`verify`]: the self-check battery run by `parfee verify`.

pub mod scenario;
pub mod table;
pub mod verify;

pub use scenario::{load_scenario, parse_scenario, CliError, Scenario};
