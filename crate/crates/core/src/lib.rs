//! Runtime consistency monitor for redundant camera and LiDAR perception.
//!
//! Two object lists are compared inside a region of interest computed from
//! the ego state; the resulting verdict stream drives a debounced
//! fail-operational mode request. A seeded scenario simulator exercises the
//! whole pipeline over an in-process bus.

pub mod bus;
pub mod config;
pub mod domain;
pub mod io;
pub mod log;
pub mod mode_control;
pub mod monitor;
pub mod safe_zone;
pub mod sim;
pub mod sync_buffer;
pub mod validator;

use std::path::PathBuf;

pub use config::RunConfig;
pub use domain::{
    validate_config, ConfigError, DetectedObject, EgoState, ObjectListFrame, Position, SensorSource, Timestamp,
    ValidatorConfig, ZoneSpec,
};
pub use mode_control::{AdsMode, Mode, ModeMachine, ModePolicy, ModeTransition};
pub use monitor::Monitor;
pub use safe_zone::{compute_roi, contains, RegionOfInterest, Zone, ZonePolygon, ZoneSet};
pub use sync_buffer::{snapshot_pair, SensorBuffer, Snapshot, Starved};
pub use validator::{decide, evaluate, filter_roi, pair_compatible, ValidationVerdict, VerdictStatus};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {message} (at {location})", path.display())]
    Parse { path: PathBuf, location: String, message: String },
    #[error("invalid input: {0}")]
    Invalid(#[from] ConfigError),
    #[error(transparent)]
    Buffer(#[from] sync_buffer::BufferError),
    #[error(transparent)]
    Mode(#[from] mode_control::ModeError),
    #[error(transparent)]
    Bus(#[from] bus::BusError),
    #[error("no ego state has been provided")]
    MissingEgo,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
