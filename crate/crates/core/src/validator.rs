//! The consistency check between the camera and LiDAR object lists.
//!
//! Both lists are first cut down to the region of interest (and a minimum
//! detection confidence). Every remaining camera object must then be paired
//! one-to-one with a compatible LiDAR object and vice versa; a pair is
//! compatible when class, center distance, box width, box height and sensing
//! time all agree within the configured limits. The pairing is a maximum
//! bipartite matching, so a duplicated detection on one side can never hide
//! a missed one on the other.

use serde::{Deserialize, Serialize};

use crate::domain::{validate_config, ConfigError, DetectedObject, EgoState, ObjectListFrame, Timestamp, ValidatorConfig};
use crate::safe_zone::{compute_roi, contains, RegionOfInterest, Zone, ZoneSet};
use crate::sync_buffer::{snapshot_pair, SensorBuffer, Snapshot, Starved};

/// First failed compatibility criterion for a candidate pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    ClassMismatch,
    CenterDist,
    WidthDiff,
    HeightDiff,
    TimestampGap,
}

/// Why an object never reached the pairing stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exclusion {
    OutsideRoi,
    Confidence,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Excluded {
    pub index: usize,
    pub reason: Exclusion,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZoneTag {
    pub index: usize,
    pub zone: Zone,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairRejection {
    pub camera: usize,
    pub lidar: usize,
    pub reason: RejectReason,
}

/// Diagnostics of one decision. Indices refer to the object lists of the
/// frames handed to [`decide`].
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MatchReport {
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_camera: Vec<usize>,
    pub unmatched_lidar: Vec<usize>,
    pub reject_reasons: Vec<PairRejection>,
    pub in_roi_camera: Vec<ZoneTag>,
    pub in_roi_lidar: Vec<ZoneTag>,
    pub excluded_camera: Vec<Excluded>,
    pub excluded_lidar: Vec<Excluded>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictStatus {
    Consistent,
    Inconsistent,
    NoData,
}

impl VerdictStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            VerdictStatus::Consistent => "consistent",
            VerdictStatus::Inconsistent => "inconsistent",
            VerdictStatus::NoData => "no_data",
        }
    }
}

impl std::fmt::Display for VerdictStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationVerdict {
    #[serde(rename = "t_ms")]
    pub at: Timestamp,
    pub status: VerdictStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub starved: Option<Starved>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<MatchReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roi: Option<RegionOfInterest>,
}

impl ValidationVerdict {
    pub fn no_data(at: Timestamp, starved: Starved) -> Self {
        ValidationVerdict { at, status: VerdictStatus::NoData, starved: Some(starved), report: None, roi: None }
    }

    pub fn is_consistent(&self) -> bool {
        self.status == VerdictStatus::Consistent
    }
}

struct RoiPartition {
    kept: Vec<ZoneTag>,
    excluded: Vec<Excluded>,
}

fn partition_roi(frame: &ObjectListFrame, roi: &RegionOfInterest, cfg: &ValidatorConfig) -> RoiPartition {
    let mut kept = Vec::new();
    let mut excluded = Vec::new();
    for (index, obj) in frame.objects.iter().enumerate() {
        match contains(roi, &obj.position) {
            Zone::Outside => excluded.push(Excluded { index, reason: Exclusion::OutsideRoi }),
            _ if obj.confidence < cfg.min_confidence => {
                excluded.push(Excluded { index, reason: Exclusion::Confidence })
            }
            zone => kept.push(ZoneTag { index, zone }),
        }
    }
    RoiPartition { kept, excluded }
}

/// Keeps the objects inside the region of interest whose confidence reaches
/// `cfg.min_confidence`, in their original order.
pub fn filter_roi(frame: &ObjectListFrame, roi: &RegionOfInterest, cfg: &ValidatorConfig) -> ObjectListFrame {
    let part = partition_roi(frame, roi, cfg);
    ObjectListFrame {
        source: frame.source,
        frame_time: frame.frame_time,
        objects: part.kept.iter().map(|t| frame.objects[t.index].clone()).collect(),
    }
}

/// Checks class, center distance, width, height and sensing-time gap in that
/// order and reports the first failure. Limits are inclusive.
// The negated comparisons make a NaN measurement fail its criterion.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn pair_compatible(a: &DetectedObject, b: &DetectedObject, cfg: &ValidatorConfig) -> Result<(), RejectReason> {
    if cfg.require_class_equal && a.class_label != b.class_label {
        return Err(RejectReason::ClassMismatch);
    }
    if !(a.position.distance(&b.position) <= cfg.max_center_dist_m) {
        return Err(RejectReason::CenterDist);
    }
    if !((a.width_m - b.width_m).abs() <= cfg.max_width_diff_m) {
        return Err(RejectReason::WidthDiff);
    }
    if !((a.height_m - b.height_m).abs() <= cfg.max_height_diff_m) {
        return Err(RejectReason::HeightDiff);
    }
    if a.sensed_at.abs_diff(b.sensed_at) > cfg.pair_max_dt_ms {
        return Err(RejectReason::TimestampGap);
    }
    Ok(())
}

/// Maximum bipartite matching by augmenting paths. Left vertices are tried
/// in ascending order and each adjacency list is scanned ascending, which
/// fixes the result for a given graph. Returns the right partner of every
/// left vertex.
pub fn maximum_matching(n_right: usize, adj: &[Vec<usize>]) -> Vec<Option<usize>> {
    fn augment(u: usize, adj: &[Vec<usize>], seen: &mut [bool], right_of: &mut [Option<usize>]) -> bool {
        for &v in &adj[u] {
            if seen[v] {
                continue;
            }
            seen[v] = true;
            let free = match right_of[v] {
                None => true,
                Some(w) => augment(w, adj, seen, right_of),
            };
            if free {
                right_of[v] = Some(u);
                return true;
            }
        }
        false
    }

    let mut right_of: Vec<Option<usize>> = vec![None; n_right];
    for u in 0..adj.len() {
        let mut seen = vec![false; n_right];
        augment(u, adj, &mut seen, &mut right_of);
    }
    let mut left_of = vec![None; adj.len()];
    for (v, u) in right_of.iter().enumerate() {
        if let Some(u) = u {
            left_of[*u] = Some(v);
        }
    }
    left_of
}

/// Decides consistency of two staleness-filtered frames within `roi`.
pub fn decide(
    cam_frame: &ObjectListFrame,
    lidar_frame: &ObjectListFrame,
    roi: &RegionOfInterest,
    cfg: &ValidatorConfig,
) -> ValidationVerdict {
    let cam = partition_roi(cam_frame, roi, cfg);
    let lidar = partition_roi(lidar_frame, roi, cfg);

    let mut report = MatchReport {
        excluded_camera: cam.excluded,
        excluded_lidar: lidar.excluded,
        ..MatchReport::default()
    };

    let mut adj = vec![Vec::new(); cam.kept.len()];
    for (i, ct) in cam.kept.iter().enumerate() {
        for (j, lt) in lidar.kept.iter().enumerate() {
            match pair_compatible(&cam_frame.objects[ct.index], &lidar_frame.objects[lt.index], cfg) {
                Ok(()) => adj[i].push(j),
                Err(reason) => report.reject_reasons.push(PairRejection {
                    camera: ct.index,
                    lidar: lt.index,
                    reason,
                }),
            }
        }
    }

    let matching = maximum_matching(lidar.kept.len(), &adj);
    let mut lidar_used = vec![false; lidar.kept.len()];
    for (i, m) in matching.iter().enumerate() {
        match m {
            Some(j) => {
                lidar_used[*j] = true;
                report.pairs.push((cam.kept[i].index, lidar.kept[*j].index));
            }
            None => report.unmatched_camera.push(cam.kept[i].index),
        }
    }
    report.unmatched_lidar = lidar
        .kept
        .iter()
        .zip(&lidar_used)
        .filter(|(_, used)| !**used)
        .map(|(t, _)| t.index)
        .collect();
    report.in_roi_camera = cam.kept;
    report.in_roi_lidar = lidar.kept;

    // Both lists empty inside the ROI falls out of this as Consistent.
    let status = if report.unmatched_camera.is_empty() && report.unmatched_lidar.is_empty() {
        VerdictStatus::Consistent
    } else {
        VerdictStatus::Inconsistent
    };

    ValidationVerdict { at: roi.computed_at, status, starved: None, report: Some(report), roi: Some(roi.clone()) }
}

/// One monitor step: snapshot both buffers, short-circuit on starvation,
/// build the region of interest and decide.
pub fn evaluate(
    now: Timestamp,
    cam_buf: &SensorBuffer,
    lidar_buf: &SensorBuffer,
    ego: &EgoState,
    cfg: &ValidatorConfig,
    zones: &ZoneSet,
) -> Result<ValidationVerdict, ConfigError> {
    validate_config(cfg)?;
    let (camera, lidar) = match snapshot_pair(cam_buf, lidar_buf, now, cfg) {
        Snapshot::Pair { camera, lidar } => (camera, lidar),
        Snapshot::NoData(side) => return Ok(ValidationVerdict::no_data(now, side)),
    };
    let roi = compute_roi(ego, zones)?;
    let mut verdict = decide(&camera, &lidar, &roi, cfg);
    verdict.at = now;
    Ok(verdict)
}
