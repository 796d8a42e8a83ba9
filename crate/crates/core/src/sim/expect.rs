//! Scoring a verdict log against a scenario's expected windows.

use std::fmt;

use serde::Serialize;

use crate::log::VerdictLog;
use crate::mode_control::ModeTransition;
use crate::sim::scenario::{Expectation, Scenario};
use crate::validator::VerdictStatus;

/// Share of verdicts in a window that must carry the expected status.
pub const PASS_FRACTION: f64 = 0.95;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StatusCounts {
    pub consistent: usize,
    pub inconsistent: usize,
    pub no_data: usize,
}

impl StatusCounts {
    pub fn from_log(log: &VerdictLog) -> Self {
        let mut c = StatusCounts::default();
        for v in log.verdicts() {
            c.add(v.status);
        }
        c
    }

    fn add(&mut self, status: VerdictStatus) {
        match status {
            VerdictStatus::Consistent => self.consistent += 1,
            VerdictStatus::Inconsistent => self.inconsistent += 1,
            VerdictStatus::NoData => self.no_data += 1,
        }
    }

    pub fn get(&self, status: VerdictStatus) -> usize {
        match status {
            VerdictStatus::Consistent => self.consistent,
            VerdictStatus::Inconsistent => self.inconsistent,
            VerdictStatus::NoData => self.no_data,
        }
    }

    pub fn total(&self) -> usize {
        self.consistent + self.inconsistent + self.no_data
    }

    /// Most frequent status; ties go to the more severe one.
    pub fn dominant(&self) -> Option<VerdictStatus> {
        if self.total() == 0 {
            return None;
        }
        [VerdictStatus::NoData, VerdictStatus::Inconsistent, VerdictStatus::Consistent]
            .into_iter()
            .rev()
            .max_by_key(|s| self.get(*s))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpectationResult {
    pub window: Expectation,
    pub total: usize,
    pub matching: usize,
    pub dominant: Option<VerdictStatus>,
    pub passed: bool,
}

/// Scores each expected window `[t_from, t_to]` (inclusive). A window with
/// no verdicts in it fails.
pub fn check_expectations(log: &VerdictLog, scenario: &Scenario) -> Vec<ExpectationResult> {
    scenario
        .expected
        .iter()
        .map(|w| {
            let mut counts = StatusCounts::default();
            for v in log.verdicts().filter(|v| (w.t_from..=w.t_to).contains(&v.at.ms())) {
                counts.add(v.status);
            }
            let total = counts.total();
            let matching = counts.get(w.status);
            let passed = total > 0 && matching as f64 >= PASS_FRACTION * total as f64;
            ExpectationResult { window: w.clone(), total, matching, dominant: counts.dominant(), passed }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub scenario: String,
    pub counts: StatusCounts,
    pub transitions: Vec<ModeTransition>,
    pub expectations: Vec<ExpectationResult>,
    pub wall_ms: u128,
}

impl RunSummary {
    pub fn new(scenario: &Scenario, log: &VerdictLog, wall_ms: u128) -> Self {
        RunSummary {
            scenario: scenario.name.clone(),
            counts: StatusCounts::from_log(log),
            transitions: log.transitions().cloned().collect(),
            expectations: check_expectations(log, scenario),
            wall_ms,
        }
    }

    pub fn passed(&self) -> bool {
        self.expectations.iter().all(|e| e.passed)
    }
}

impl fmt::Display for RunSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.counts;
        writeln!(f, "scenario {} ({} ms wall)", self.scenario, self.wall_ms)?;
        writeln!(
            f,
            "  verdicts: {} consistent, {} inconsistent, {} no_data",
            c.consistent, c.inconsistent, c.no_data
        )?;
        for t in &self.transitions {
            writeln!(f, "  mode {:>6} ms: {:?} -> {:?} ({:?})", t.at.ms(), t.from, t.to, t.cause)?;
        }
        for e in &self.expectations {
            let w = &e.window;
            writeln!(
                f,
                "  [{}] {}..={} ms expect {}: {}/{} matching",
                if e.passed { "ok" } else { "FAIL" },
                w.t_from,
                w.t_to,
                w.status.as_str(),
                e.matching,
                e.total
            )?;
        }
        write!(f, "  result: {}", if self.passed() { "pass" } else { "fail" })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Timestamp;
    use crate::log::LogRecord;
    use crate::sync_buffer::Starved;
    use crate::validator::ValidationVerdict;

    fn log_of(statuses: &[(u64, VerdictStatus)]) -> VerdictLog {
        let mut log = VerdictLog::new();
        for &(t, s) in statuses {
            let mut v = ValidationVerdict::no_data(Timestamp(t), Starved::Both);
            v.status = s;
            log.push(LogRecord::Verdict(v));
        }
        log
    }

    fn scenario_with(expected: Vec<Expectation>) -> Scenario {
        let text = r#"{"name": "e", "duration_ms": 10000, "seed": 0,
            "ego_timeline": [{"t_ms": 0, "speed_mps": 0, "steering_angle_rad": 0}],
            "sensors": [{"source": "camera", "rate_hz": 10, "confidence_range": [1, 1]},
                        {"source": "lidar", "rate_hz": 10, "confidence_range": [1, 1]}]}"#;
        let mut s = Scenario::from_json_str(text, std::path::Path::new("e")).unwrap();
        s.expected = expected;
        s
    }

    #[test]
    fn window_bounds_are_inclusive_and_threshold_applies() {
        use VerdictStatus::*;
        let mut stream: Vec<_> = (1..=20).map(|k| (k * 100, Consistent)).collect();
        stream[19].1 = Inconsistent; // 1/20 off is exactly 95 %
        let log = log_of(&stream);
        let r = check_expectations(&log, &scenario_with(vec![Expectation { t_from: 100, t_to: 2000, status: Consistent }]));
        assert_eq!((r[0].total, r[0].matching, r[0].passed), (20, 19, true));

        stream[18].1 = NoData;
        let r = check_expectations(&log_of(&stream), &scenario_with(vec![Expectation { t_from: 100, t_to: 2000, status: Consistent }]));
        assert!(!r[0].passed);
    }

    #[test]
    fn empty_window_fails() {
        let log = log_of(&[(100, VerdictStatus::Consistent)]);
        let r = check_expectations(&log, &scenario_with(vec![Expectation { t_from: 150, t_to: 190, status: VerdictStatus::Consistent }]));
        assert_eq!(r[0].total, 0);
        assert!(!r[0].passed);
    }

    #[test]
    fn dominant_prefers_severity_on_ties() {
        let c = StatusCounts { consistent: 2, inconsistent: 2, no_data: 1 };
        assert_eq!(c.dominant(), Some(VerdictStatus::Inconsistent));
        assert_eq!(StatusCounts::default().dominant(), None);
    }

    #[test]
    fn summary_mentions_failures() {
        let s = scenario_with(vec![Expectation { t_from: 0, t_to: 500, status: VerdictStatus::NoData }]);
        let log = log_of(&[(100, VerdictStatus::Consistent)]);
        let summary = RunSummary::new(&s, &log, 3);
        assert!(!summary.passed());
        let text = summary.to_string();
        assert!(text.contains("[FAIL]"), "{text}");
        assert!(text.ends_with("result: fail"));
    }
}
