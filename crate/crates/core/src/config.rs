//! The run configuration file: validator thresholds, zone extents, mode
//! policy and monitor cadence. Every section falls back to its defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::{into_result, validate_config, ConfigError, FieldViolation, ValidatorConfig};
use crate::mode_control::ModePolicy;
use crate::safe_zone::ZoneSet;
use crate::sync_buffer::DEFAULT_CAPACITY;
use crate::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub validator: ValidatorConfig,
    pub zones: ZoneSet,
    pub mode: ModePolicy,
    pub monitor_rate_hz: f64,
    pub buffer_capacity: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            validator: ValidatorConfig::default(),
            zones: ZoneSet::default(),
            mode: ModePolicy::default(),
            monitor_rate_hz: 10.0,
            buffer_capacity: DEFAULT_CAPACITY,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut out = Vec::new();
        let nest = |prefix: &str, res: Result<(), ConfigError>, out: &mut Vec<FieldViolation>| {
            if let Err(e) = res {
                out.extend(
                    e.violations
                        .into_iter()
                        .map(|v| FieldViolation::new(format!("{prefix}.{}", v.field), v.message)),
                );
            }
        };
        nest("validator", validate_config(&self.validator), &mut out);
        nest("zones", self.zones.validate(), &mut out);
        nest("mode", self.mode.validate(), &mut out);
        if !(self.monitor_rate_hz.is_finite() && self.monitor_rate_hz > 0.0) {
            out.push(FieldViolation::new("monitor_rate_hz", "must be > 0"));
        }
        if self.buffer_capacity == 0 {
            out.push(FieldViolation::new("buffer_capacity", "must be > 0"));
        }
        into_result(out)
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let cfg: RunConfig = crate::io::read_json(path)?;
        cfg.validate()?;
        Ok(cfg)
    }
}
