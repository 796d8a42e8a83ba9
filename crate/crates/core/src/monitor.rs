//! A stateful monitor node: two sensor buffers, the latest ego state and the
//! mode machine, evaluated on demand.

use crate::config::RunConfig;
use crate::domain::{ConfigError, EgoState, ObjectListFrame, SensorSource, Timestamp};
use crate::mode_control::{AdsMode, ModeMachine, ModeTransition};
use crate::sync_buffer::SensorBuffer;
use crate::validator::{evaluate, ValidationVerdict};
use crate::Error;

#[derive(Debug, Clone)]
pub struct Monitor {
    cfg: RunConfig,
    camera: SensorBuffer,
    lidar: SensorBuffer,
    ego: Option<EgoState>,
    mode: ModeMachine,
}

impl Monitor {
    pub fn new(cfg: RunConfig, start: Timestamp) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let capacity = cfg.buffer_capacity;
        let camera = SensorBuffer::new(SensorSource::Camera, capacity).expect("capacity validated");
        let lidar = SensorBuffer::new(SensorSource::Lidar, capacity).expect("capacity validated");
        let mode = ModeMachine::new(cfg.mode.clone(), start);
        Ok(Monitor { cfg, camera, lidar, ego: None, mode })
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    /// Validates `frame` and routes it to the buffer of its source.
    pub fn ingest(&mut self, frame: ObjectListFrame) -> Result<(), Error> {
        frame.validate()?;
        let buf = match frame.source {
            SensorSource::Camera => &mut self.camera,
            SensorSource::Lidar => &mut self.lidar,
        };
        buf.ingest(frame)?;
        Ok(())
    }

    pub fn set_ego(&mut self, ego: EgoState) -> Result<(), ConfigError> {
        ego.validate()?;
        self.ego = Some(ego);
        Ok(())
    }

    pub fn ego(&self) -> Option<&EgoState> {
        self.ego.as_ref()
    }

    pub fn buffer(&self, source: SensorSource) -> &SensorBuffer {
        match source {
            SensorSource::Camera => &self.camera,
            SensorSource::Lidar => &self.lidar,
        }
    }

    /// One verdict at `now`, without touching the mode machine.
    pub fn verdict(&self, now: Timestamp) -> Result<ValidationVerdict, Error> {
        let ego = self.ego.as_ref().ok_or(Error::MissingEgo)?;
        Ok(evaluate(now, &self.camera, &self.lidar, ego, &self.cfg.validator, &self.cfg.zones)?)
    }

    /// One verdict at `now`, fed to the mode machine as well.
    pub fn evaluate(&mut self, now: Timestamp) -> Result<(ValidationVerdict, Option<ModeTransition>), Error> {
        let verdict = self.verdict(now)?;
        let transition = self.mode.step(&verdict)?;
        Ok((verdict, transition))
    }

    pub fn mode(&self) -> &AdsMode {
        self.mode.state()
    }

    pub fn reset_mode(&mut self, at: Timestamp) -> Option<ModeTransition> {
        self.mode.reset(at)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mode_control::Mode;
    use crate::validator::VerdictStatus;

    #[test]
    fn needs_ego_before_evaluating() {
        let mut m = Monitor::new(RunConfig::default(), Timestamp(0)).unwrap();
        assert!(matches!(m.evaluate(Timestamp(0)), Err(Error::MissingEgo)));
    }

    #[test]
    fn routes_frames_and_degrades() {
        let mut m = Monitor::new(RunConfig::default(), Timestamp(0)).unwrap();
        m.set_ego(EgoState::model_car(Timestamp(0))).unwrap();
        let person = crate::domain::DetectedObject {
            class_label: "person".into(),
            width_m: 0.1,
            height_m: 0.3,
            position: crate::domain::Position::new(1.0, 0.0),
            confidence: 0.9,
            sensed_at: Timestamp(0),
            source: SensorSource::Lidar,
        };
        for t in [100, 200, 300] {
            m.ingest(ObjectListFrame::empty(SensorSource::Camera, Timestamp(t))).unwrap();
            let mut obj = person.clone();
            obj.sensed_at = Timestamp(t);
            m.ingest(ObjectListFrame { source: SensorSource::Lidar, frame_time: Timestamp(t), objects: vec![obj] })
                .unwrap();
            let (v, _) = m.evaluate(Timestamp(t)).unwrap();
            assert_eq!(v.status, VerdictStatus::Inconsistent);
        }
        assert_eq!(m.mode().mode, Mode::Degraded);
        assert_eq!(m.buffer(SensorSource::Lidar).len(), 3);
    }

    #[test]
    fn rejects_invalid_frames() {
        let mut m = Monitor::new(RunConfig::default(), Timestamp(0)).unwrap();
        let mut f = ObjectListFrame::empty(SensorSource::Camera, Timestamp(5));
        f.objects.push(crate::domain::DetectedObject {
            class_label: "x".into(),
            width_m: -1.0,
            height_m: 0.0,
            position: crate::domain::Position::new(0.0, 0.0),
            confidence: 0.5,
            sensed_at: Timestamp(5),
            source: SensorSource::Camera,
        });
        assert!(m.ingest(f).is_err());
    }
}
