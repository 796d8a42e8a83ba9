//! Declarative scenario files: ego timeline, actors, sensor models and the
//! verdicts a run is expected to produce.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::{into_result, ConfigError, EgoState, FieldViolation, Position, SensorSource, Timestamp};
use crate::validator::VerdictStatus;
use crate::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub duration_ms: u64,
    pub seed: u64,
    #[serde(default)]
    pub ego_params: EgoParams,
    pub ego_timeline: Vec<EgoSample>,
    #[serde(default)]
    pub actors: Vec<Actor>,
    pub sensors: Vec<SensorModel>,
    #[serde(default)]
    pub expected: Vec<Expectation>,
}

/// Static vehicle parameters; the time-varying part lives in the timeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EgoParams {
    pub wheelbase_m: f64,
    pub body_length_m: f64,
    pub body_width_m: f64,
    pub max_decel_mps2: f64,
    pub reaction_time_s: f64,
}

impl Default for EgoParams {
    fn default() -> Self {
        let car = EgoState::model_car(Timestamp::ZERO);
        EgoParams {
            wheelbase_m: car.wheelbase_m,
            body_length_m: car.body_length_m,
            body_width_m: car.body_width_m,
            max_decel_mps2: car.max_decel_mps2,
            reaction_time_s: car.reaction_time_s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EgoSample {
    pub t_ms: u64,
    pub speed_mps: f64,
    pub steering_angle_rad: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Waypoint {
    pub t_ms: u64,
    pub x_m: f64,
    pub y_m: f64,
}

/// A ground-truth object. Its trajectory is piecewise linear in the vehicle
/// frame; it does not exist before its first waypoint and holds its last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Actor {
    pub id: String,
    pub class_label: String,
    pub width_m: f64,
    pub height_m: f64,
    pub trajectory: Vec<Waypoint>,
    pub visible_to: Vec<SensorSource>,
}

impl Actor {
    pub fn position_at(&self, t: Timestamp) -> Option<Position> {
        let t = t.ms();
        let first = self.trajectory.first()?;
        if t < first.t_ms {
            return None;
        }
        let idx = self.trajectory.partition_point(|w| w.t_ms <= t);
        let a = &self.trajectory[idx - 1];
        match self.trajectory.get(idx) {
            None => Some(Position::new(a.x_m, a.y_m)),
            Some(b) => {
                let f = (t - a.t_ms) as f64 / (b.t_ms - a.t_ms) as f64;
                Some(Position::new(a.x_m + (b.x_m - a.x_m) * f, a.y_m + (b.y_m - a.y_m) * f))
            }
        }
    }

    pub fn is_visible_to(&self, source: SensorSource) -> bool {
        self.visible_to.contains(&source)
    }
}

/// Half-open interval `[from_ms, to_ms)` during which a sensor publishes
/// nothing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outage {
    pub from_ms: u64,
    pub to_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorModel {
    pub source: SensorSource,
    pub rate_hz: f64,
    #[serde(default)]
    pub latency_ms: u64,
    #[serde(default)]
    pub dropout_prob: f64,
    #[serde(default)]
    pub position_noise_sigma_m: f64,
    #[serde(default)]
    pub size_noise_sigma_m: f64,
    pub confidence_range: (f64, f64),
    #[serde(default)]
    pub outages: Vec<Outage>,
}

impl SensorModel {
    pub fn in_outage(&self, t: Timestamp) -> bool {
        self.outages.iter().any(|o| (o.from_ms..o.to_ms).contains(&t.ms()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    pub t_from: u64,
    pub t_to: u64,
    pub status: VerdictStatus,
}

impl Scenario {
    pub fn from_json_str(text: &str, origin: &Path) -> Result<Self, Error> {
        let scenario: Scenario = crate::io::parse_json(text, origin)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn sensor(&self, source: SensorSource) -> &SensorModel {
        self.sensors
            .iter()
            .find(|s| s.source == source)
            .expect("validated scenarios carry both sensors")
    }

    /// Ego state at `t`, linearly interpolated along the timeline and held
    /// constant outside it.
    pub fn ego_at(&self, t: Timestamp) -> EgoState {
        let tl = &self.ego_timeline;
        let idx = tl.partition_point(|s| s.t_ms <= t.ms());
        let (speed, steer) = if idx == 0 {
            (tl[0].speed_mps, tl[0].steering_angle_rad)
        } else if idx == tl.len() {
            (tl[idx - 1].speed_mps, tl[idx - 1].steering_angle_rad)
        } else {
            let (a, b) = (&tl[idx - 1], &tl[idx]);
            let f = (t.ms() - a.t_ms) as f64 / (b.t_ms - a.t_ms) as f64;
            (
                a.speed_mps + (b.speed_mps - a.speed_mps) * f,
                a.steering_angle_rad + (b.steering_angle_rad - a.steering_angle_rad) * f,
            )
        };
        let p = &self.ego_params;
        EgoState {
            speed_mps: speed,
            steering_angle_rad: steer,
            wheelbase_m: p.wheelbase_m,
            body_length_m: p.body_length_m,
            body_width_m: p.body_width_m,
            max_decel_mps2: p.max_decel_mps2,
            reaction_time_s: p.reaction_time_s,
            at: t,
        }
    }

    /// Every invariant violation, addressed by its path in the document.
    pub fn violations(&self) -> Vec<FieldViolation> {
        let mut out = Vec::new();
        if self.name.trim().is_empty() {
            out.push(FieldViolation::new("name", "must not be empty"));
        }
        if self.duration_ms == 0 {
            out.push(FieldViolation::new("duration_ms", "must be > 0"));
        }

        let probe = self.ego_at_params_only();
        for v in probe.violations() {
            if !matches!(v.field.as_str(), "speed_mps" | "steering_angle_rad") {
                out.push(FieldViolation::new(format!("ego_params.{}", v.field), "is out of range"));
            }
        }

        if self.ego_timeline.is_empty() {
            out.push(FieldViolation::new("ego_timeline", "must have at least one sample"));
        }
        for (i, s) in self.ego_timeline.iter().enumerate() {
            if i > 0 && s.t_ms <= self.ego_timeline[i - 1].t_ms {
                out.push(FieldViolation::new(format!("ego_timeline[{i}].t_ms"), "must be strictly increasing"));
            }
            if !(s.speed_mps.is_finite() && s.speed_mps >= 0.0) {
                out.push(FieldViolation::new(format!("ego_timeline[{i}].speed_mps"), "must be finite and >= 0"));
            }
            if !s.steering_angle_rad.is_finite() {
                out.push(FieldViolation::new(format!("ego_timeline[{i}].steering_angle_rad"), "must be finite"));
            }
        }

        let mut ids = HashSet::new();
        for (i, a) in self.actors.iter().enumerate() {
            let at = format!("actors[{i}]");
            if !ids.insert(a.id.as_str()) {
                out.push(FieldViolation::new(format!("{at}.id"), "duplicates another actor id"));
            }
            if !(a.width_m.is_finite() && a.width_m >= 0.0) {
                out.push(FieldViolation::new(format!("{at}.width_m"), "must be finite and >= 0"));
            }
            if !(a.height_m.is_finite() && a.height_m >= 0.0) {
                out.push(FieldViolation::new(format!("{at}.height_m"), "must be finite and >= 0"));
            }
            if a.trajectory.is_empty() {
                out.push(FieldViolation::new(format!("{at}.trajectory"), "must have at least one waypoint"));
            }
            for (j, w) in a.trajectory.iter().enumerate() {
                if j > 0 && w.t_ms <= a.trajectory[j - 1].t_ms {
                    out.push(FieldViolation::new(
                        format!("{at}.trajectory[{j}].t_ms"),
                        format!("actor {:?}: waypoint {j} time must be after waypoint {}", a.id, j - 1),
                    ));
                }
                if !(w.x_m.is_finite() && w.y_m.is_finite()) {
                    out.push(FieldViolation::new(format!("{at}.trajectory[{j}]"), "coordinates must be finite"));
                }
            }
            let distinct: HashSet<_> = a.visible_to.iter().collect();
            if distinct.len() != a.visible_to.len() {
                out.push(FieldViolation::new(format!("{at}.visible_to"), "lists a sensor twice"));
            }
        }

        for source in SensorSource::ALL {
            let n = self.sensors.iter().filter(|s| s.source == source).count();
            if n != 1 {
                out.push(FieldViolation::new("sensors", format!("needs exactly one {source} model, found {n}")));
            }
        }
        for (i, s) in self.sensors.iter().enumerate() {
            let at = format!("sensors[{i}]");
            let mut bad = |f: &str, msg: &str| out.push(FieldViolation::new(format!("{at}.{f}"), msg));
            if !(s.rate_hz.is_finite() && s.rate_hz > 0.0) {
                bad("rate_hz", "must be > 0");
            }
            if !(0.0..1.0).contains(&s.dropout_prob) {
                bad("dropout_prob", "must be in [0, 1)");
            }
            if !(s.position_noise_sigma_m.is_finite() && s.position_noise_sigma_m >= 0.0) {
                bad("position_noise_sigma_m", "must be finite and >= 0");
            }
            if !(s.size_noise_sigma_m.is_finite() && s.size_noise_sigma_m >= 0.0) {
                bad("size_noise_sigma_m", "must be finite and >= 0");
            }
            let (lo, hi) = s.confidence_range;
            if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
                bad("confidence_range", "must satisfy 0 <= lo <= hi <= 1");
            }
            for (j, o) in s.outages.iter().enumerate() {
                if o.from_ms >= o.to_ms {
                    bad(&format!("outages[{j}]"), "from_ms must be < to_ms");
                }
            }
        }

        for (i, e) in self.expected.iter().enumerate() {
            if e.t_from > e.t_to {
                out.push(FieldViolation::new(format!("expected[{i}]"), "t_from must be <= t_to"));
            }
            if e.t_to > self.duration_ms {
                out.push(FieldViolation::new(format!("expected[{i}].t_to"), "lies beyond duration_ms"));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        into_result(self.violations())
    }

    fn ego_at_params_only(&self) -> EgoState {
        let p = &self.ego_params;
        EgoState {
            speed_mps: 0.0,
            steering_angle_rad: 0.0,
            wheelbase_m: p.wheelbase_m,
            body_length_m: p.body_length_m,
            body_width_m: p.body_width_m,
            max_decel_mps2: p.max_decel_mps2,
            reaction_time_s: p.reaction_time_s,
            at: Timestamp::ZERO,
        }
    }
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario, Error> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_owned(), source })?;
    Scenario::from_json_str(&text, path)
}
