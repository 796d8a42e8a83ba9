//! Per-sensor frame buffers. Camera and LiDAR publish at different rates, so
//! each side keeps a short time-ordered history; staleness is judged per
//! object and data starvation per frame.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::domain::{ObjectListFrame, SensorSource, Timestamp, ValidatorConfig};

pub const DEFAULT_CAPACITY: usize = 16;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BufferError {
    #[error("frame from {got} offered to the {expected} buffer")]
    SourceMismatch { expected: SensorSource, got: SensorSource },
    #[error("buffer capacity must be > 0")]
    ZeroCapacity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensorBuffer {
    source: SensorSource,
    frames: Vec<ObjectListFrame>,
    capacity: usize,
}

impl SensorBuffer {
    pub fn new(source: SensorSource, capacity: usize) -> Result<Self, BufferError> {
        if capacity == 0 {
            return Err(BufferError::ZeroCapacity);
        }
        Ok(SensorBuffer { source, frames: Vec::with_capacity(capacity), capacity })
    }

    pub fn with_default_capacity(source: SensorSource) -> Self {
        SensorBuffer { source, frames: Vec::with_capacity(DEFAULT_CAPACITY), capacity: DEFAULT_CAPACITY }
    }

    pub fn source(&self) -> SensorSource {
        self.source
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn frames(&self) -> &[ObjectListFrame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frame_times(&self) -> Vec<u64> {
        self.frames.iter().map(|f| f.frame_time.ms()).collect()
    }

    /// Inserts `frame` in time order, evicting the oldest frame when full.
    /// Frames sharing a `frame_time` are ordered by content so the result does
    /// not depend on arrival order.
    pub fn ingest(&mut self, frame: ObjectListFrame) -> Result<(), BufferError> {
        if frame.source != self.source {
            return Err(BufferError::SourceMismatch { expected: self.source, got: frame.source });
        }
        let at = self
            .frames
            .partition_point(|f| frame_order(f, &frame) != Ordering::Greater);
        self.frames.insert(at, frame);
        while self.frames.len() > self.capacity {
            self.frames.remove(0);
        }
        Ok(())
    }

    /// Drops every object older than `stale_timeout_ms` at `now`. A frame that
    /// ends up without objects is removed when it lost objects here or is
    /// itself older than the timeout; fresh frames that were empty from the
    /// start are kept.
    pub fn prune_stale(&mut self, now: Timestamp, stale_timeout_ms: u64) {
        self.frames.retain_mut(|frame| {
            let before = frame.objects.len();
            frame.objects.retain(|o| !is_stale(o.sensed_at, now, stale_timeout_ms));
            if !frame.objects.is_empty() {
                return true;
            }
            before == 0 && !is_stale(frame.frame_time, now, stale_timeout_ms)
        });
    }

    /// Newest frame with `frame_time` in `[now - nodata_timeout, now]`.
    pub fn latest_fresh(&self, now: Timestamp, nodata_timeout_ms: u64) -> Option<&ObjectListFrame> {
        self.frames
            .iter()
            .rev()
            .filter(|f| f.frame_time <= now)
            .find(|f| !is_stale(f.frame_time, now, nodata_timeout_ms))
    }
}

/// "Older than the timeout" is strict: an age equal to the timeout is fresh.
pub fn is_stale(t: Timestamp, now: Timestamp, timeout_ms: u64) -> bool {
    t.age_at(now) > timeout_ms as i64
}

fn frame_order(a: &ObjectListFrame, b: &ObjectListFrame) -> Ordering {
    a.frame_time.cmp(&b.frame_time).then_with(|| {
        let n = a.objects.len().cmp(&b.objects.len());
        a.objects
            .iter()
            .zip(&b.objects)
            .map(|(x, y)| {
                x.sensed_at
                    .cmp(&y.sensed_at)
                    .then_with(|| x.class_label.cmp(&y.class_label))
                    .then_with(|| x.position.x_m.total_cmp(&y.position.x_m))
                    .then_with(|| x.position.y_m.total_cmp(&y.position.y_m))
                    .then_with(|| x.width_m.total_cmp(&y.width_m))
                    .then_with(|| x.height_m.total_cmp(&y.height_m))
                    .then_with(|| x.confidence.total_cmp(&y.confidence))
            })
            .find(|o| o.is_ne())
            .unwrap_or(n)
    })
}

/// Which side ran dry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Starved {
    Camera,
    Lidar,
    Both,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Snapshot {
    Pair { camera: ObjectListFrame, lidar: ObjectListFrame },
    NoData(Starved),
}

/// Picks the newest fresh frame per side and strips its stale objects. A
/// fresh frame whose objects are all stale yields an empty list, not NoData.
pub fn snapshot_pair(cam: &SensorBuffer, lidar: &SensorBuffer, now: Timestamp, cfg: &ValidatorConfig) -> Snapshot {
    let pick = |buf: &SensorBuffer| {
        buf.latest_fresh(now, cfg.nodata_timeout_ms).map(|f| {
            let mut f = f.clone();
            f.objects.retain(|o| !is_stale(o.sensed_at, now, cfg.stale_timeout_ms));
            f
        })
    };
    match (pick(cam), pick(lidar)) {
        (Some(camera), Some(lidar)) => Snapshot::Pair { camera, lidar },
        (None, Some(_)) => Snapshot::NoData(Starved::Camera),
        (Some(_), None) => Snapshot::NoData(Starved::Lidar),
        (None, None) => Snapshot::NoData(Starved::Both),
    }
}
