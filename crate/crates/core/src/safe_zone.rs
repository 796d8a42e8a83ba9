//! Region of interest around the ego vehicle: a speed-independent clear zone
//! directly ahead of the bumper and a focus zone that stretches with
//! stopping distance and bends with the steering angle.

use serde::{Deserialize, Serialize};

use crate::domain::{into_result, ConfigError, EgoState, Position, Timestamp, ZoneSpec};

/// Upper bound on `|tan(steering)|`.
pub const MAX_STEER_TAN: f64 = 10.0;

/// Default number of longitudinal stations used to sample the focus zone.
pub const DEFAULT_STATIONS: usize = 8;

pub type Vertex = (f64, f64);

/// Base zone extents plus the focus-zone sampling density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneSet {
    pub clear: ZoneSpec,
    pub focus: ZoneSpec,
    #[serde(default = "default_stations")]
    pub stations: usize,
}

fn default_stations() -> usize {
    DEFAULT_STATIONS
}

impl Default for ZoneSet {
    /// Lab-scale (1:8 model car) extents.
    fn default() -> Self {
        ZoneSet {
            clear: ZoneSpec { near_m: 0.0, far_m: 0.06, left_m: 0.025, right_m: 0.025 },
            focus: ZoneSpec { near_m: 0.22, far_m: 1.2, left_m: 0.55, right_m: 0.55 },
            stations: DEFAULT_STATIONS,
        }
    }
}

impl ZoneSet {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut out = self.clear.violations("clear");
        out.extend(self.focus.violations("focus"));
        if self.stations < 2 {
            out.push(crate::domain::FieldViolation::new("stations", "must be >= 2"));
        }
        if out.is_empty() && self.focus.far_m < self.clear.far_m {
            out.push(crate::domain::FieldViolation::new("focus.far_m", "must be >= clear.far_m"));
        }
        into_result(out)
    }
}

/// Closed simple polygon in the vehicle frame, counter-clockwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZonePolygon {
    pub vertices: Vec<Vertex>,
}

impl ZonePolygon {
    pub fn new(vertices: Vec<Vertex>) -> Self {
        ZonePolygon { vertices }
    }

    pub fn edges(&self) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Shoelace area, positive for counter-clockwise order.
    pub fn signed_area(&self) -> f64 {
        self.edges().map(|(a, b)| a.0 * b.1 - b.0 * a.1).sum::<f64>() / 2.0
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn centroid(&self) -> Vertex {
        let a = self.signed_area();
        let (mut cx, mut cy) = (0.0, 0.0);
        for (p, q) in self.edges() {
            let cross = p.0 * q.1 - q.0 * p.1;
            cx += (p.0 + q.0) * cross;
            cy += (p.1 + q.1) * cross;
        }
        (cx / (6.0 * a), cy / (6.0 * a))
    }

    /// Axis-aligned bounds as `(min_x, min_y, max_x, max_y)`.
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        self.vertices.iter().fold(
            (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
            |(x0, y0, x1, y1), &(x, y)| (x0.min(x), y0.min(y), x1.max(x), y1.max(y)),
        )
    }

    /// Closed-polygon containment: boundary points are inside.
    pub fn contains(&self, p: Vertex) -> bool {
        if self.vertices.len() < 3 {
            return false;
        }
        let mut winding = 0i32;
        for (a, b) in self.edges() {
            let side = orient(a, b, p);
            if side == 0.0 && within_box(a, b, p) {
                return true;
            }
            if a.1 <= p.1 {
                if b.1 > p.1 && side > 0.0 {
                    winding += 1;
                }
            } else if b.1 <= p.1 && side < 0.0 {
                winding -= 1;
            }
        }
        winding != 0
    }

    /// True when no two non-adjacent edges touch.
    pub fn is_simple(&self) -> bool {
        let edges: Vec<_> = self.edges().collect();
        let n = edges.len();
        if n < 3 {
            return false;
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if !adjacent && segments_touch(edges[i], edges[j]) {
                    return false;
                }
            }
        }
        true
    }

    pub fn is_finite(&self) -> bool {
        self.vertices.iter().all(|v| v.0.is_finite() && v.1.is_finite())
    }
}

fn orient(a: Vertex, b: Vertex, p: Vertex) -> f64 {
    (b.0 - a.0) * (p.1 - a.1) - (p.0 - a.0) * (b.1 - a.1)
}

fn within_box(a: Vertex, b: Vertex, p: Vertex) -> bool {
    p.0 >= a.0.min(b.0) && p.0 <= a.0.max(b.0) && p.1 >= a.1.min(b.1) && p.1 <= a.1.max(b.1)
}

fn segments_touch((a, b): (Vertex, Vertex), (c, d): (Vertex, Vertex)) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && within_box(c, d, a))
        || (d2 == 0.0 && within_box(c, d, b))
        || (d3 == 0.0 && within_box(a, b, c))
        || (d4 == 0.0 && within_box(a, b, d))
}

/// Which zone a point falls in. The clear zone wins where both apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Zone {
    Outside,
    InClear,
    InFocus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionOfInterest {
    pub clear: ZonePolygon,
    pub focus: ZonePolygon,
    pub computed_at: Timestamp,
    pub ego_snapshot: EgoState,
}

impl RegionOfInterest {
    pub fn contains(&self, p: &Position) -> Zone {
        contains(self, p)
    }
}

/// Speed-stretched far edge of the focus zone, measured ahead of the bumper:
/// base far extent plus reaction distance plus braking distance.
pub fn focus_far_extent(ego: &EgoState, base_focus: &ZoneSpec) -> f64 {
    let v = ego.speed_mps;
    base_focus.far_m + v * ego.reaction_time_s + v * v / (2.0 * ego.max_decel_mps2)
}

/// `tan(steering)` with the magnitude capped at [`MAX_STEER_TAN`]. Odd in
/// the steering angle bit-for-bit.
pub fn clamped_steer_tan(steering_angle_rad: f64) -> f64 {
    let limit = MAX_STEER_TAN.atan();
    let t = steering_angle_rad.abs().min(limit).tan().min(MAX_STEER_TAN);
    t.copysign(steering_angle_rad)
}

/// Lateral offset of the rear-axle path at longitudinal position `x`
/// (small-angle bicycle model).
pub fn path_offset(steer_tan: f64, wheelbase_m: f64, x: f64) -> f64 {
    steer_tan * x * x / (2.0 * wheelbase_m)
}

pub fn compute_roi(ego: &EgoState, zones: &ZoneSet) -> Result<RegionOfInterest, ConfigError> {
    ego.validate()?;
    zones.validate()?;

    let bumper = ego.front_bumper_x();
    let half_width = ego.body_width_m / 2.0;

    let clear_spec = &zones.clear;
    let (cx0, cx1) = (bumper + clear_spec.near_m, bumper + clear_spec.far_m);
    let (cyr, cyl) = (-(half_width + clear_spec.right_m), half_width + clear_spec.left_m);
    let clear = ZonePolygon::new(vec![(cx0, cyr), (cx1, cyr), (cx1, cyl), (cx0, cyl)]);

    let focus_spec = &zones.focus;
    let x_near = bumper + focus_spec.near_m;
    let x_far = bumper + focus_far_extent(ego, focus_spec);
    let steer_tan = clamped_steer_tan(ego.steering_angle_rad);
    let n = zones.stations;
    let stations: Vec<f64> = (0..n)
        .map(|i| {
            if i + 1 == n {
                x_far
            } else {
                x_near + (x_far - x_near) * (i as f64) / ((n - 1) as f64)
            }
        })
        .collect();

    let mut vertices = Vec::with_capacity(2 * n);
    for &x in &stations {
        vertices.push((x, path_offset(steer_tan, ego.wheelbase_m, x) - focus_spec.right_m));
    }
    for &x in stations.iter().rev() {
        vertices.push((x, path_offset(steer_tan, ego.wheelbase_m, x) + focus_spec.left_m));
    }
    let focus = ZonePolygon::new(vertices);

    if !clear.is_finite() || !focus.is_finite() {
        return Err(ConfigError::single("ego", "produced non-finite zone geometry"));
    }

    Ok(RegionOfInterest { clear, focus, computed_at: ego.at, ego_snapshot: ego.clone() })
}

pub fn contains(roi: &RegionOfInterest, p: &Position) -> Zone {
    let v = (p.x_m, p.y_m);
    if roi.clear.contains(v) {
        Zone::InClear
    } else if roi.focus.contains(v) {
        Zone::InFocus
    } else {
        Zone::Outside
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ego(speed: f64, steer: f64) -> EgoState {
        EgoState { speed_mps: speed, steering_angle_rad: steer, ..EgoState::model_car(Timestamp(0)) }
    }

    /// Crossing-number ray cast, written independently of `ZonePolygon::contains`.
    fn ray_cast(poly: &[Vertex], p: Vertex) -> bool {
        let mut inside = false;
        let mut j = poly.len() - 1;
        for i in 0..poly.len() {
            let (xi, yi) = poly[i];
            let (xj, yj) = poly[j];
            if (yi > p.1) != (yj > p.1) && p.0 < (xj - xi) * (p.1 - yi) / (yj - yi) + xi {
                inside = !inside;
            }
            j = i;
        }
        inside
    }

    #[test]
    fn far_extent_matches_hand_computation() {
        let e = EgoState { speed_mps: 1.0, reaction_time_s: 0.5, max_decel_mps2: 2.0, ..ego(0.0, 0.0) };
        let spec = ZoneSpec { near_m: 0.22, far_m: 1.2, left_m: 0.55, right_m: 0.55 };
        // reaction 1.0 * 0.5 = 0.5, braking 1.0^2 / 4.0 = 0.25
        let hand = 1.2 + 0.5 + 0.25;
        assert!((focus_far_extent(&e, &spec) - 1.95).abs() < 1e-12);
        assert!((focus_far_extent(&e, &spec) - hand).abs() < 1e-12);
    }

    #[test]
    fn parked_straight_focus_is_base_rectangle() {
        let e = ego(0.0, 0.0);
        let zones = ZoneSet::default();
        let roi = compute_roi(&e, &zones).unwrap();
        let b = e.front_bumper_x();
        let (x0, x1) = (b + 0.22, b + 1.2);
        let focus = &roi.focus.vertices;
        assert_eq!(focus.len(), 2 * DEFAULT_STATIONS);
        assert_eq!(focus[0], (x0, -0.55));
        assert_eq!(focus[DEFAULT_STATIONS - 1], (x1, -0.55));
        assert_eq!(focus[DEFAULT_STATIONS], (x1, 0.55));
        assert_eq!(focus[2 * DEFAULT_STATIONS - 1], (x0, 0.55));
        for &(x, y) in focus {
            assert!(y == -0.55 || y == 0.55);
            assert!((x0..=x1).contains(&x));
        }
        assert_eq!(roi.focus.bounds(), (x0, -0.55, x1, 0.55));
        assert!(roi.focus.signed_area() > 0.0);
    }

    #[test]
    fn clear_zone_hugs_the_bumper() {
        let e = ego(3.0, 0.3);
        let roi = compute_roi(&e, &ZoneSet::default()).unwrap();
        let b = e.front_bumper_x();
        assert_eq!(roi.clear.bounds(), (b, -0.175, b + 0.06, 0.175));
        let parked = compute_roi(&ego(0.0, 0.0), &ZoneSet::default()).unwrap();
        assert_eq!(parked.clear, roi.clear);
    }

    #[test]
    fn beyond_far_extent_is_outside() {
        let e = ego(1.0, 0.0);
        let zones = ZoneSet::default();
        let roi = compute_roi(&e, &zones).unwrap();
        let far = e.front_bumper_x() + focus_far_extent(&e, &zones.focus);
        assert_eq!(contains(&roi, &Position::new(far + 1.0, 0.0)), Zone::Outside);
        assert_eq!(contains(&roi, &Position::new(far, 0.0)), Zone::InFocus);
    }

    #[test]
    fn edge_point_counts_as_inside() {
        let e = ego(0.0, 0.0);
        let roi = compute_roi(&e, &ZoneSet::default()).unwrap();
        let x = e.front_bumper_x() + 0.7;
        assert_eq!(contains(&roi, &Position::new(x, 0.55)), Zone::InFocus);
        assert_eq!(contains(&roi, &Position::new(x, -0.55)), Zone::InFocus);
        assert_eq!(contains(&roi, &Position::new(x, 0.550001)), Zone::Outside);
    }

    #[test]
    fn focus_centroid_is_inside() {
        let roi = compute_roi(&ego(0.0, 0.0), &ZoneSet::default()).unwrap();
        let c = roi.focus.centroid();
        assert!(ray_cast(&roi.focus.vertices, c));
        assert_eq!(contains(&roi, &Position::new(c.0, c.1)), Zone::InFocus);
    }

    #[test]
    fn clear_wins_over_focus() {
        let zones = ZoneSet {
            clear: ZoneSpec { near_m: 0.0, far_m: 0.5, left_m: 0.1, right_m: 0.1 },
            ..ZoneSet::default()
        };
        let e = ego(0.0, 0.0);
        let roi = compute_roi(&e, &zones).unwrap();
        assert_eq!(contains(&roi, &Position::new(e.front_bumper_x() + 0.3, 0.0)), Zone::InClear);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(compute_roi(&ego(f64::NAN, 0.0), &ZoneSet::default()).is_err());
        let bad = ZoneSet { stations: 1, ..ZoneSet::default() };
        assert!(compute_roi(&ego(0.0, 0.0), &bad).is_err());
        let inverted = ZoneSet {
            focus: ZoneSpec { near_m: 0.0, far_m: 0.01, left_m: 0.5, right_m: 0.5 },
            ..ZoneSet::default()
        };
        assert!(inverted.validate().unwrap_err().mentions("focus.far_m"));
    }

    #[test]
    fn extreme_steering_is_clamped() {
        assert_eq!(clamped_steer_tan(1.56), clamped_steer_tan(1.5));
        assert!(clamped_steer_tan(1.56) <= MAX_STEER_TAN);
        assert_eq!(clamped_steer_tan(-1.56), -clamped_steer_tan(1.56));
        let roi = compute_roi(&ego(2.0, 1.56), &ZoneSet::default()).unwrap();
        assert!(roi.focus.is_simple());
    }

    #[test]
    fn deterministic_output() {
        let a = compute_roi(&ego(1.3, 0.2), &ZoneSet::default()).unwrap();
        let b = compute_roi(&ego(1.3, 0.2), &ZoneSet::default()).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    proptest! {
        #[test]
        fn polygons_are_simple_and_ccw(speed in 0.0..5.0f64, steer in -1.5..1.5f64) {
            let roi = compute_roi(&ego(speed, steer), &ZoneSet::default()).unwrap();
            for poly in [&roi.clear, &roi.focus] {
                prop_assert!(poly.vertices.len() >= 4);
                prop_assert!(poly.is_simple());
                prop_assert!(poly.signed_area() > 0.0);
            }
            prop_assert!(roi.focus.bounds().2 >= roi.clear.bounds().2);
        }

        #[test]
        fn steering_zero_is_mirror_symmetric(speed in 0.0..5.0f64) {
            let roi = compute_roi(&ego(speed, 0.0), &ZoneSet::default()).unwrap();
            let mut a: Vec<_> = roi.focus.vertices.iter().map(|v| (v.0.to_bits(), v.1.to_bits())).collect();
            let mut b: Vec<_> = roi.focus.vertices.iter().map(|v| (v.0.to_bits(), (-v.1).to_bits())).collect();
            a.sort();
            b.sort();
            prop_assert_eq!(a, b);
        }

        // Swapping left/right together with the steering sign mirrors the
        // geometry even for asymmetric zones.
        #[test]
        fn mirror_with_swapped_sides(speed in 0.0..5.0f64, steer in -1.0..1.0f64, l in 0.1..1.0f64, r in 0.1..1.0f64) {
            let mut zones = ZoneSet::default();
            zones.focus.left_m = l;
            zones.focus.right_m = r;
            let mut swapped = zones.clone();
            swapped.focus.left_m = r;
            swapped.focus.right_m = l;
            let a = compute_roi(&ego(speed, steer), &zones).unwrap();
            let b = compute_roi(&ego(speed, -steer), &swapped).unwrap();
            let mut va: Vec<_> = a.focus.vertices.iter().map(|v| (v.0.to_bits(), (-v.1).to_bits())).collect();
            let mut vb: Vec<_> = b.focus.vertices.iter().map(|v| (v.0.to_bits(), v.1.to_bits())).collect();
            va.sort();
            vb.sort();
            prop_assert_eq!(va, vb);
        }

        #[test]
        fn winding_agrees_with_ray_cast(speed in 0.0..4.0f64, steer in -1.2..1.2f64, pts in prop::collection::vec((-1.0..5.0f64, -3.0..3.0f64), 200)) {
            let roi = compute_roi(&ego(speed, steer), &ZoneSet::default()).unwrap();
            for p in pts {
                prop_assert_eq!(roi.focus.contains(p), ray_cast(&roi.focus.vertices, p));
                prop_assert_eq!(roi.clear.contains(p), ray_cast(&roi.clear.vertices, p));
            }
        }

        #[test]
        fn straight_containment_is_stable_in_speed(v1 in 0.0..3.0f64, dv in 0.0..3.0f64, x in 0.0..6.0f64, y in -1.0..1.0f64) {
            let a = compute_roi(&ego(v1, 0.0), &ZoneSet::default()).unwrap();
            let b = compute_roi(&ego(v1 + dv, 0.0), &ZoneSet::default()).unwrap();
            let p = Position::new(x, y);
            if contains(&a, &p) == Zone::InFocus {
                prop_assert_eq!(contains(&b, &p), Zone::InFocus);
            }
        }
    }
}
