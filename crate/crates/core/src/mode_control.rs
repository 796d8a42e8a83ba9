//! Debounced mapping from the verdict stream to a fail-operational mode
//! request. Only the trigger is modeled; what the vehicle does with it is
//! someone else's job.

use serde::{Deserialize, Serialize};

use crate::domain::Timestamp;
use crate::validator::{ValidationVerdict, VerdictStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Nominal,
    Degraded,
    SafeStopRequested,
}

/// What pushed the machine into its current mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeCause {
    Inconsistent,
    NoData,
    Consistent,
    ExternalReset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModePolicy {
    pub k_inconsistent: u32,
    pub nodata_ms: u64,
}

impl Default for ModePolicy {
    fn default() -> Self {
        ModePolicy { k_inconsistent: 3, nodata_ms: 1000 }
    }
}

impl ModePolicy {
    pub fn validate(&self) -> Result<(), crate::domain::ConfigError> {
        let mut out = Vec::new();
        if self.k_inconsistent == 0 {
            out.push(crate::domain::FieldViolation::new("k_inconsistent", "must be > 0"));
        }
        if self.nodata_ms == 0 {
            out.push(crate::domain::FieldViolation::new("nodata_ms", "must be > 0"));
        }
        crate::domain::into_result(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdsMode {
    pub mode: Mode,
    pub since: Timestamp,
    pub cause: Option<ModeCause>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeTransition {
    #[serde(rename = "t_ms")]
    pub at: Timestamp,
    pub from: Mode,
    pub to: Mode,
    pub cause: ModeCause,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModeError {
    #[error("verdict at {got} arrived after one at {last}")]
    OutOfOrder { last: Timestamp, got: Timestamp },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeMachine {
    policy: ModePolicy,
    state: AdsMode,
    inconsistent_streak: u32,
    nodata_since: Option<Timestamp>,
    last_seen: Option<Timestamp>,
}

impl ModeMachine {
    pub fn new(policy: ModePolicy, start: Timestamp) -> Self {
        ModeMachine {
            policy,
            state: AdsMode { mode: Mode::Nominal, since: start, cause: None },
            inconsistent_streak: 0,
            nodata_since: None,
            last_seen: None,
        }
    }

    pub fn state(&self) -> &AdsMode {
        &self.state
    }

    pub fn mode(&self) -> Mode {
        self.state.mode
    }

    pub fn policy(&self) -> &ModePolicy {
        &self.policy
    }

    /// Feeds one verdict. Returns the transition it caused, if any.
    pub fn step(&mut self, verdict: &ValidationVerdict) -> Result<Option<ModeTransition>, ModeError> {
        self.observe(verdict.status, verdict.at)
    }

    pub fn observe(&mut self, status: VerdictStatus, at: Timestamp) -> Result<Option<ModeTransition>, ModeError> {
        if let Some(last) = self.last_seen {
            if at < last {
                return Err(ModeError::OutOfOrder { last, got: at });
            }
        }
        self.last_seen = Some(at);

        let target = match status {
            VerdictStatus::Consistent => {
                self.inconsistent_streak = 0;
                self.nodata_since = None;
                (self.state.mode == Mode::Degraded).then_some((Mode::Nominal, ModeCause::Consistent))
            }
            VerdictStatus::Inconsistent => {
                self.nodata_since = None;
                self.inconsistent_streak = self.inconsistent_streak.saturating_add(1);
                (self.state.mode == Mode::Nominal && self.inconsistent_streak >= self.policy.k_inconsistent)
                    .then_some((Mode::Degraded, ModeCause::Inconsistent))
            }
            VerdictStatus::NoData => {
                self.inconsistent_streak = 0;
                let since = *self.nodata_since.get_or_insert(at);
                (self.state.mode != Mode::SafeStopRequested && at.ms() - since.ms() >= self.policy.nodata_ms)
                    .then_some((Mode::SafeStopRequested, ModeCause::NoData))
            }
        };

        // Safe stop is absorbing; only reset() leaves it.
        if self.state.mode == Mode::SafeStopRequested {
            return Ok(None);
        }
        Ok(target.map(|(to, cause)| self.transition(to, cause, at)))
    }

    /// External override, the only way out of `SafeStopRequested`.
    pub fn reset(&mut self, at: Timestamp) -> Option<ModeTransition> {
        self.inconsistent_streak = 0;
        self.nodata_since = None;
        if self.state.mode == Mode::Nominal {
            return None;
        }
        Some(self.transition(Mode::Nominal, ModeCause::ExternalReset, at))
    }

    fn transition(&mut self, to: Mode, cause: ModeCause, at: Timestamp) -> ModeTransition {
        let from = self.state.mode;
        self.state = AdsMode { mode: to, since: at, cause: Some(cause) };
        ModeTransition { at, from, to, cause }
    }
}
