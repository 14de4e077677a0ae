//! Simulated environment, executor and events monitor.

use std::collections::VecDeque;

use crate::state::{snap_times, Inconsistent, StepError, WorldState};
use crate::task::{ActionId, GroundedTask, Literal, SnapKind, SnapRef};
use crate::time::Time;

use super::trace::Status;

/// Ground truth, which only the executor and exogenous events change.
#[derive(Debug, Clone)]
pub struct Environment {
    pub truth: WorldState,
    failures: Vec<(ActionId, SnapKind)>,
}

impl Environment {
    pub fn new(truth: WorldState) -> Self {
        Environment { truth, failures: Vec::new() }
    }

    /// The next execution of this snap fails regardless of the state.
    pub fn inject_failure(&mut self, action: ActionId, snap: SnapKind) {
        self.failures.push((action, snap));
    }

    pub fn apply_exogenous(&mut self, add: &[Literal], del: &[Literal]) {
        apply_change(&mut self.truth, add, del);
    }

    /// Executes a snap against the ground truth.
    pub fn execute(&mut self, task: &GroundedTask, snap: SnapRef) -> (Status, Option<StepError>) {
        if let Some(i) = self.failures.iter().position(|f| *f == (snap.action, snap.kind)) {
            self.failures.remove(i);
            self.abort(snap);
            return (Status::Fail, None);
        }
        match self.truth.progress(task, snap) {
            Ok(next) => {
                self.truth = next;
                (if snap.kind == SnapKind::Start { Status::Running } else { Status::Success }, None)
            }
            Err(e) => {
                self.abort(snap);
                (Status::Fail, Some(e))
            }
        }
    }

    fn abort(&mut self, snap: SnapRef) {
        if snap.kind == SnapKind::End {
            if let Some(p) = self.truth.running.iter().position(|a| *a == snap.action) {
                self.truth.running.remove(p);
            }
        }
    }
}

fn apply_change(state: &mut WorldState, add: &[Literal], del: &[Literal]) {
    for l in del {
        state.fluents.remove(l.atom);
    }
    for l in add {
        state.fluents.insert(l.atom);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecEvent {
    pub at: Time,
    pub snap: SnapRef,
    pub status: Status,
    pub error: Option<StepError>,
}

/// Dispatches committed snaps at their scheduled times.
#[derive(Debug, Clone, Default)]
pub struct Executor {
    scheduled: VecDeque<(Time, SnapRef)>,
    last: Time,
    stopped: bool,
}

impl Executor {
    /// Schedules a committed chunk no earlier than `now` and after every
    /// previously scheduled snap.
    pub fn schedule(&mut self, task: &GroundedTask, snaps: &[SnapRef], now: Time) -> Result<(), Inconsistent> {
        let times = snap_times(task, snaps)?;
        let offset = now.max(self.last);
        for (s, t) in snaps.iter().zip(times) {
            let at = offset + t;
            self.last = self.last.max(at);
            self.scheduled.push_back((at, *s));
        }
        self.stopped = false;
        Ok(())
    }

    pub fn next_due(&self) -> Option<Time> {
        if self.stopped {
            return None;
        }
        self.scheduled.front().map(|(t, _)| *t)
    }

    pub fn is_idle(&self) -> bool {
        self.scheduled.is_empty()
    }

    pub fn scheduled(&self) -> impl Iterator<Item = &(Time, SnapRef)> {
        self.scheduled.iter()
    }

    /// Executes the next snap if it is due by `until`.
    pub fn tick_one(&mut self, task: &GroundedTask, env: &mut Environment, until: Time) -> Option<ExecEvent> {
        let at = self.next_due().filter(|t| *t <= until)?;
        let (_, snap) = self.scheduled.pop_front()?;
        let (status, error) = env.execute(task, snap);
        if status == Status::Fail {
            self.stopped = true;
        }
        Some(ExecEvent { at, snap, status, error })
    }

    /// Drops everything scheduled except `keep`, preserving times.
    pub fn retain(&mut self, keep: impl Fn(SnapRef) -> bool) {
        self.scheduled.retain(|(_, s)| keep(*s));
        self.last = self.scheduled.iter().map(|(t, _)| *t).max().unwrap_or(Time::ZERO);
        self.stopped = false;
    }
}

/// Runs every snap due by `until`, stopping at the first failure.
pub fn executor_tick(task: &GroundedTask, exec: &mut Executor, env: &mut Environment, until: Time) -> Vec<ExecEvent> {
    let mut out = Vec::new();
    while let Some(e) = exec.tick_one(task, env, until) {
        let failed = e.status == Status::Fail;
        out.push(e);
        if failed {
            break;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub enum Observation {
    Exogenous { add: Vec<Literal>, del: Vec<Literal> },
    Action(ExecEvent),
}

/// Updates beliefs with sensed changes and executed snap effects.
pub fn monitor(task: &GroundedTask, beliefs: &WorldState, observations: &[Observation]) -> WorldState {
    let mut b = beliefs.clone();
    for o in observations {
        match o {
            Observation::Exogenous { add, del } => apply_change(&mut b, add, del),
            Observation::Action(e) => {
                let s = task.snap(e.snap);
                match e.status {
                    Status::Running | Status::Success => {
                        b.fluents.apply(&s.del, &s.add);
                        match e.snap.kind {
                            SnapKind::Start => b.running.push(e.snap.action),
                            SnapKind::End => remove_running(&mut b, e.snap.action),
                        }
                    }
                    Status::Fail => {
                        if e.snap.kind == SnapKind::End {
                            remove_running(&mut b, e.snap.action);
                        }
                    }
                }
            }
        }
    }
    b
}

fn remove_running(b: &mut WorldState, a: ActionId) {
    if let Some(p) = b.running.iter().position(|x| *x == a) {
        b.running.remove(p);
    }
}
