//! Std companion of `qswitch-core`: configuration files, the parallel
//! parameter-sweep engine, reference reproductions, oracle cross-checks and
//! CSV/JSON/gnuplot output for the `qswitch` command-line tool.

pub mod config;
pub mod diagnose;
pub mod oracle_check;
pub mod output;
pub mod run;
pub mod sweep;
pub mod table1;

pub use config::{Config, ConfigError, ParamKey, PointSpec};
pub use run::{run_point, CancelToken};
pub use sweep::{run_sweep, Axis, Optimize, Output, SweepRow, SweepSpec, SweepTable};
pub use table1::{reproduce_table1, Table1Report};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
