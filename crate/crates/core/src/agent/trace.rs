//! JSON-lines execution trace.
//!
//! Every record carries the virtual time `t` and a `kind` tag. Field names
//! are stable; tests and offline tools match on them.

use serde::{Deserialize, Serialize};

use crate::exec::ForecastClass;
use crate::search::{RoundExit, SearchMode};
use crate::task::SnapKind;
use crate::time::Time;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    GoalAchieved,
    SearchFailed,
    TimeLimit,
    Failed,
    NoActivatableDesire,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThreadKind {
    NonImproving,
    Improving,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Running,
    Success,
    Fail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForecastOutcome {
    Success,
    Failure,
    GoalNotReached,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TraceEvent {
    DesireActivated {
        desire: String,
        goal: Vec<String>,
        priority: f64,
    },
    SearchStarted {
        thread: ThreadKind,
        mode: SearchMode,
        reason: String,
        committed: usize,
        epoch: u64,
    },
    Round {
        thread: ThreadKind,
        round: u64,
        mode: SearchMode,
        exit: RoundExit,
        expansions: u64,
        best_hval: Option<f64>,
        plan_size: usize,
        elapsed_ms: u64,
        message: Option<String>,
    },
    ModeChange {
        thread: ThreadKind,
        from: SearchMode,
        to: SearchMode,
    },
    GoalReached {
        thread: ThreadKind,
    },
    Schedule {
        action: String,
        message: String,
        steps: usize,
        snaps: Vec<String>,
    },
    Commit {
        snaps: Vec<String>,
        committed: usize,
        version: u64,
    },
    Dispatch {
        action: String,
        snap: SnapKind,
    },
    ActionStatus {
        action: String,
        snap: SnapKind,
        status: Status,
        literal: Option<String>,
    },
    Exogenous {
        add: Vec<String>,
        del: Vec<String>,
    },
    Forecast {
        version: u64,
        outcome: ForecastOutcome,
        failure_index: Option<usize>,
        class: Option<ForecastClass>,
        literal: Option<String>,
    },
    EarlyArrest {
        reason: String,
        anchor: Option<String>,
        must_finish: Vec<String>,
        cancelled: Vec<String>,
    },
    GoalRevision {
        semantics: String,
        rule: String,
        incoming: String,
        goal: Vec<String>,
    },
    GoalRevisionRejected {
        incoming: String,
        reason: String,
    },
    DesirePushed {
        desire: String,
    },
    Preempted {
        desire: String,
        by: String,
    },
    SearchOutdated {
        thread: ThreadKind,
    },
    SearchFailed {
        thread: ThreadKind,
    },
    GoalAchieved {
        desire: String,
        goal: Vec<String>,
    },
    Outcome {
        outcome: Outcome,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: Time,
    #[serde(flatten)]
    pub event: TraceEvent,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
}

impl Trace {
    pub fn push(&mut self, t: Time, event: TraceEvent) {
        self.records.push(TraceRecord { t, event });
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("trace records serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Trace, serde_json::Error> {
        let records = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<Result<_, _>>()?;
        Ok(Trace { records })
    }

    pub fn iter(&self) -> impl Iterator<Item = &TraceRecord> {
        self.records.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_roundtrip() {
        let mut t = Trace::default();
        t.push(Time::from_millis(5), TraceEvent::GoalReached { thread: ThreadKind::NonImproving });
        t.push(
            Time::from_units(2),
            TraceEvent::Forecast {
                version: 3,
                outcome: ForecastOutcome::Failure,
                failure_index: Some(4),
                class: Some(ForecastClass::AfterCommitted),
                literal: Some("(connected w2 w3)".into()),
            },
        );
        t.push(Time::from_units(3), TraceEvent::Outcome { outcome: Outcome::GoalAchieved });
        let text = t.to_jsonl();
        assert!(text.lines().next().unwrap().contains(r#""kind":"goal_reached""#));
        assert!(text.contains(r#""outcome":"GoalAchieved""#));
        assert_eq!(Trace::from_jsonl(&text).unwrap(), t);
    }
}
