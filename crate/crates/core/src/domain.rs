//! Shared value types: time, sensor sources, detections, ego state and the
//! validator configuration.
//!
//! All coordinates live in the vehicle frame: origin at the rear-axle
//! center, `x` forward, `y` left, meters.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Milliseconds on the single run clock shared by every component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Timestamp(pub u64);

impl Timestamp {
    pub const ZERO: Timestamp = Timestamp(0);

    pub fn from_ms(ms: u64) -> Self {
        Timestamp(ms)
    }

    pub fn ms(self) -> u64 {
        self.0
    }

    /// Signed age of `self` as seen from `now`. Negative when `self` lies in
    /// the future of `now`.
    pub fn age_at(self, now: Timestamp) -> i64 {
        now.0 as i64 - self.0 as i64
    }

    /// Absolute distance between two instants.
    pub fn abs_diff(self, other: Timestamp) -> u64 {
        self.0.abs_diff(other.0)
    }

    pub fn plus_ms(self, ms: u64) -> Self {
        Timestamp(self.0.saturating_add(ms))
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}ms", self.0)
    }
}

/// One of the two redundant perception chains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorSource {
    Camera,
    Lidar,
}

impl SensorSource {
    pub const ALL: [SensorSource; 2] = [SensorSource::Camera, SensorSource::Lidar];

    /// Short label used in logs and topic names (`CAI` / `LAI` lists).
    pub fn label(self) -> &'static str {
        match self {
            SensorSource::Camera => "camera",
            SensorSource::Lidar => "lidar",
        }
    }

    pub fn other(self) -> SensorSource {
        match self {
            SensorSource::Camera => SensorSource::Lidar,
            SensorSource::Lidar => SensorSource::Camera,
        }
    }
}

impl fmt::Display for SensorSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Planar position in the vehicle frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Position {
    pub x_m: f64,
    pub y_m: f64,
}

impl Position {
    pub fn new(x_m: f64, y_m: f64) -> Self {
        Position { x_m, y_m }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x_m - other.x_m).hypot(self.y_m - other.y_m)
    }

    pub fn is_finite(&self) -> bool {
        self.x_m.is_finite() && self.y_m.is_finite()
    }
}

/// A single perceived object with a 2.5D box: image-plane width and height
/// plus metric depth folded into `position`. There is no length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectedObject {
    pub class_label: String,
    pub width_m: f64,
    pub height_m: f64,
    pub position: Position,
    pub confidence: f64,
    pub sensed_at: Timestamp,
    pub source: SensorSource,
}

impl DetectedObject {
    /// Returns every violated invariant, prefixed with `path`.
    pub fn violations(&self, path: &str) -> Vec<FieldViolation> {
        let mut out = Vec::new();
        if !(self.width_m.is_finite() && self.width_m >= 0.0) {
            out.push(FieldViolation::new(format!("{path}.width_m"), "must be finite and >= 0"));
        }
        if !(self.height_m.is_finite() && self.height_m >= 0.0) {
            out.push(FieldViolation::new(format!("{path}.height_m"), "must be finite and >= 0"));
        }
        if !self.position.is_finite() {
            out.push(FieldViolation::new(format!("{path}.position"), "must be finite"));
        }
        if !(0.0..=1.0).contains(&self.confidence) {
            out.push(FieldViolation::new(format!("{path}.confidence"), "must be in [0, 1]"));
        }
        out
    }
}

/// A timestamped batch of detections from one sensor chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectListFrame {
    pub source: SensorSource,
    pub frame_time: Timestamp,
    pub objects: Vec<DetectedObject>,
}

impl ObjectListFrame {
    pub fn empty(source: SensorSource, frame_time: Timestamp) -> Self {
        ObjectListFrame { source, frame_time, objects: Vec::new() }
    }

    pub fn violations(&self) -> Vec<FieldViolation> {
        let mut out = Vec::new();
        for (i, obj) in self.objects.iter().enumerate() {
            let path = format!("objects[{i}]");
            out.extend(obj.violations(&path));
            if obj.source != self.source {
                out.push(FieldViolation::new(
                    format!("{path}.source"),
                    format!("is {} but the frame source is {}", obj.source, self.source),
                ));
            }
            if obj.sensed_at > self.frame_time {
                out.push(FieldViolation::new(
                    format!("{path}.sensed_at"),
                    "must not be later than frame_time",
                ));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        into_result(self.violations())
    }
}

/// Ego vehicle state used to shape the region of interest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgoState {
    pub speed_mps: f64,
    /// Positive steers left.
    pub steering_angle_rad: f64,
    pub wheelbase_m: f64,
    pub body_length_m: f64,
    pub body_width_m: f64,
    pub max_decel_mps2: f64,
    pub reaction_time_s: f64,
    pub at: Timestamp,
}

impl EgoState {
    /// A parked 1:8 model car.
    pub fn model_car(at: Timestamp) -> Self {
        EgoState {
            speed_mps: 0.0,
            steering_angle_rad: 0.0,
            wheelbase_m: 0.36,
            body_length_m: 0.55,
            body_width_m: 0.30,
            max_decel_mps2: 2.0,
            reaction_time_s: 0.5,
            at,
        }
    }

    /// Longitudinal position of the front bumper. Overhangs are assumed equal
    /// front and rear.
    pub fn front_bumper_x(&self) -> f64 {
        self.wheelbase_m + (self.body_length_m - self.wheelbase_m) / 2.0
    }

    pub fn violations(&self) -> Vec<FieldViolation> {
        let mut out = Vec::new();
        let mut check = |name: &str, v: f64, ok: bool, rule: &str| {
            if !v.is_finite() || !ok {
                out.push(FieldViolation::new(name, rule));
            }
        };
        check("speed_mps", self.speed_mps, self.speed_mps >= 0.0, "must be finite and >= 0");
        check("steering_angle_rad", self.steering_angle_rad, true, "must be finite");
        check("wheelbase_m", self.wheelbase_m, self.wheelbase_m > 0.0, "must be finite and > 0");
        check("body_length_m", self.body_length_m, self.body_length_m > 0.0, "must be finite and > 0");
        check("body_width_m", self.body_width_m, self.body_width_m > 0.0, "must be finite and > 0");
        check("max_decel_mps2", self.max_decel_mps2, self.max_decel_mps2 > 0.0, "must be finite and > 0");
        check("reaction_time_s", self.reaction_time_s, self.reaction_time_s >= 0.0, "must be finite and >= 0");
        out
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        into_result(self.violations())
    }
}

/// Consistency thresholds. These come from a hazard analysis outside this
/// crate; nothing here derives them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ValidatorConfig {
    pub stale_timeout_ms: u64,
    pub pair_max_dt_ms: u64,
    pub max_center_dist_m: f64,
    pub max_width_diff_m: f64,
    pub max_height_diff_m: f64,
    pub min_confidence: f64,
    pub require_class_equal: bool,
    pub nodata_timeout_ms: u64,
}

impl Default for ValidatorConfig {
    fn default() -> Self {
        ValidatorConfig {
            stale_timeout_ms: 2000,
            pair_max_dt_ms: 1000,
            max_center_dist_m: 0.10,
            max_width_diff_m: 0.5,
            max_height_diff_m: 0.5,
            min_confidence: 0.25,
            require_class_equal: true,
            nodata_timeout_ms: 2000,
        }
    }
}

/// Checks every invariant of `cfg`; the error carries all violations.
pub fn validate_config(cfg: &ValidatorConfig) -> Result<(), ConfigError> {
    let mut out = Vec::new();
    let positive_ms = [
        ("stale_timeout_ms", cfg.stale_timeout_ms),
        ("pair_max_dt_ms", cfg.pair_max_dt_ms),
        ("nodata_timeout_ms", cfg.nodata_timeout_ms),
    ];
    for (name, v) in positive_ms {
        if v == 0 {
            out.push(FieldViolation::new(name, "must be > 0"));
        }
    }
    let positive_m = [
        ("max_center_dist_m", cfg.max_center_dist_m),
        ("max_width_diff_m", cfg.max_width_diff_m),
        ("max_height_diff_m", cfg.max_height_diff_m),
    ];
    for (name, v) in positive_m {
        if !(v.is_finite() && v > 0.0) {
            out.push(FieldViolation::new(name, "must be > 0"));
        }
    }
    if !(0.0..=1.0).contains(&cfg.min_confidence) {
        out.push(FieldViolation::new("min_confidence", "must be in [0, 1]"));
    }
    if cfg.pair_max_dt_ms > cfg.stale_timeout_ms {
        out.push(FieldViolation::new("pair_max_dt_ms", "must be <= stale_timeout_ms"));
    }
    into_result(out)
}

/// Base extents of one zone. `near_m`/`far_m` are measured ahead of the
/// front bumper, `left_m`/`right_m` are lateral half-extents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoneSpec {
    pub near_m: f64,
    pub far_m: f64,
    pub left_m: f64,
    pub right_m: f64,
}

impl ZoneSpec {
    pub fn violations(&self, path: &str) -> Vec<FieldViolation> {
        let mut out = Vec::new();
        let all_finite = [self.near_m, self.far_m, self.left_m, self.right_m]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite {
            out.push(FieldViolation::new(path, "extents must be finite"));
            return out;
        }
        if self.near_m < 0.0 {
            out.push(FieldViolation::new(format!("{path}.near_m"), "must be >= 0"));
        }
        if self.far_m <= self.near_m {
            out.push(FieldViolation::new(format!("{path}.far_m"), "must be > near_m"));
        }
        if self.left_m <= 0.0 {
            out.push(FieldViolation::new(format!("{path}.left_m"), "must be > 0"));
        }
        if self.right_m <= 0.0 {
            out.push(FieldViolation::new(format!("{path}.right_m"), "must be > 0"));
        }
        out
    }
}

/// A single invariant violation, addressed by field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldViolation {
    pub field: String,
    pub message: String,
}

impl FieldViolation {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        FieldViolation { field: field.into(), message: message.into() }
    }
}

impl fmt::Display for FieldViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.field, self.message)
    }
}

/// One or more invariant violations.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ConfigError {
    pub violations: Vec<FieldViolation>,
}

impl ConfigError {
    pub fn single(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError { violations: vec![FieldViolation::new(field, message)] }
    }

    pub fn mentions(&self, field: &str) -> bool {
        self.violations.iter().any(|v| v.field == field)
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

pub(crate) fn into_result(violations: Vec<FieldViolation>) -> Result<(), ConfigError> {
    if violations.is_empty() {
        Ok(())
    } else {
        Err(ConfigError { violations })
    }
}
