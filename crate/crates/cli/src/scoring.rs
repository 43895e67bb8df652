//! Weighted trial scoring.
//!
//! Six error categories with fixed integer weights; a trial's score is the
//! plain sum over its logged events, so scoring is linear under
//! concatenation.

use crate::error::HarnessError;
use crate::records::EventRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    FailedPickup,
    StretchOnPegs,
    StretchHandoff,
    DropRing,
    Collision,
    StrawDisplacement,
}

impl EventKind {
    pub fn weight(&self) -> u64 {
        match self {
            EventKind::FailedPickup => 2,
            EventKind::StretchOnPegs => 2,
            EventKind::StretchHandoff => 4,
            EventKind::DropRing => 5,
            EventKind::Collision => 3,
            EventKind::StrawDisplacement => 3,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::FailedPickup => "failed_pickup",
            EventKind::StretchOnPegs => "stretch_pegs",
            EventKind::StretchHandoff => "stretch_handoff",
            EventKind::DropRing => "drop",
            EventKind::Collision => "collision",
            EventKind::StrawDisplacement => "straw",
        }
    }

    pub fn parse(s: &str) -> Result<Self, HarnessError> {
        Ok(match s {
            "failed_pickup" => EventKind::FailedPickup,
            "stretch_pegs" => EventKind::StretchOnPegs,
            "stretch_handoff" => EventKind::StretchHandoff,
            "drop" => EventKind::DropRing,
            "collision" => EventKind::Collision,
            "straw" => EventKind::StrawDisplacement,
            other => {
                return Err(HarnessError::validation(format!(
                    "unknown event kind {other:?}"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialEvent {
    pub t: f64,
    pub kind: EventKind,
}

impl TrialEvent {
    pub fn from_record(record: &EventRecord) -> Result<Self, HarnessError> {
        Ok(TrialEvent {
            t: record.t,
            kind: EventKind::parse(&record.kind)?,
        })
    }
}

/// Sum of the event weights.
pub fn score_trial(events: &[TrialEvent]) -> u64 {
    events.iter().map(|e| e.kind.weight()).sum()
}
