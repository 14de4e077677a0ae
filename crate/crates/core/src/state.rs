//! Forward temporal state space over snap actions.
//!
//! A durative action contributes a start and an end snap. States record the
//! actions started but not yet ended; an end snap is only applicable while
//! its action runs, and no snap may falsify the invariant (over-all guard) of
//! a running action. Time-triggered plans are recovered from a totally
//! ordered snap sequence by solving a simple temporal network.

use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::task::{ActionId, Fluents, Goal, GroundedTask, Literal, SnapKind, SnapRef};
use crate::time::{Time, EPSILON};

/// Fluents plus the actions currently executing (FIFO by start order).
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WorldState {
    pub fluents: Fluents,
    pub running: Vec<ActionId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum StepError {
    #[error("end of action {0:?} which is not running")]
    NotRunning(ActionId),
    #[error("condition {0:?} does not hold")]
    Condition(Literal),
    #[error("invariant {literal:?} of running action {action:?} violated")]
    Guard { action: ActionId, literal: Literal },
}

impl StepError {
    pub fn literal(&self) -> Option<Literal> {
        match self {
            StepError::NotRunning(_) => None,
            StepError::Condition(l) | StepError::Guard { literal: l, .. } => Some(*l),
        }
    }
}

impl WorldState {
    pub fn new(fluents: Fluents) -> Self {
        WorldState { fluents, running: Vec::new() }
    }

    pub fn no_run_actions(&self) -> bool {
        self.running.is_empty()
    }

    /// Closed-list signature: fluents plus the running multiset.
    pub fn signature(&self) -> (Fluents, Vec<ActionId>) {
        let mut r = self.running.clone();
        r.sort();
        (self.fluents.clone(), r)
    }

    /// Applies a snap after checking its conditions, that an end snap's action
    /// is running, and that every running action's invariant holds afterwards.
    pub fn progress(&self, task: &GroundedTask, snap: SnapRef) -> Result<WorldState, StepError> {
        let s = task.snap(snap);
        let mut running = self.running.clone();
        if s.kind == SnapKind::End {
            let pos = running
                .iter()
                .position(|a| *a == snap.action)
                .ok_or(StepError::NotRunning(snap.action))?;
            running.remove(pos);
        }
        if let Some(l) = self.fluents.first_violated(&s.conditions) {
            return Err(StepError::Condition(l));
        }
        let mut fluents = self.fluents.clone();
        fluents.apply(&s.del, &s.add);
        if s.kind == SnapKind::Start {
            running.push(snap.action);
        }
        for a in &running {
            if let Some(l) = fluents.first_violated(&task.action(*a).cond_overall) {
                return Err(StepError::Guard { action: *a, literal: l });
            }
        }
        Ok(WorldState { fluents, running })
    }

    pub fn goal_reached(&self, goal: &Goal) -> bool {
        self.running.is_empty() && goal.satisfied_by(&self.fluents)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct RunInfo {
    start_step: usize,
    deadline: Time,
}

/// Cached heuristic evaluation of a state.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub hval: f64,
    pub helpful: Arc<[SnapRef]>,
}

/// Search node: world state, snaps applied since the search root, and a
/// running clock used to estimate the partial plan's makespan.
#[derive(Debug, Clone)]
pub struct SearchState {
    world: WorldState,
    run_info: Vec<RunInfo>,
    steps: Vec<SnapRef>,
    clock: Time,
    eval: OnceLock<Evaluation>,
}

impl SearchState {
    /// Root state. Actions already running in `world` get a zero deadline.
    pub fn root(world: WorldState) -> Self {
        let run_info = world.running.iter().map(|_| RunInfo { start_step: 0, deadline: Time::ZERO }).collect();
        SearchState { world, run_info, steps: Vec::new(), clock: Time::ZERO, eval: OnceLock::new() }
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn fluents(&self) -> &Fluents {
        &self.world.fluents
    }

    pub fn running(&self) -> &[ActionId] {
        &self.world.running
    }

    /// The node's plan: snaps applied since the root.
    pub fn steps(&self) -> &[SnapRef] {
        &self.steps
    }

    pub fn no_run_actions(&self) -> bool {
        self.world.no_run_actions()
    }

    pub fn goal_reached(&self, goal: &Goal) -> bool {
        self.world.goal_reached(goal)
    }

    pub fn signature(&self) -> (Fluents, Vec<ActionId>) {
        self.world.signature()
    }

    /// Earliest completion of the plan so far, assuming each snap happens no
    /// earlier than its predecessor and ends wait for their duration.
    pub fn projected_makespan(&self) -> Time {
        self.run_info.iter().map(|r| r.deadline).fold(self.clock, Time::max)
    }

    pub fn evaluation(&self) -> Option<&Evaluation> {
        self.eval.get()
    }

    /// Evaluates once; later calls return the cached value.
    pub fn evaluate_with(&self, f: impl FnOnce(&SearchState) -> Evaluation) -> &Evaluation {
        self.eval.get_or_init(|| f(self))
    }

    pub fn applicable(&self, task: &GroundedTask, snap: SnapRef) -> bool {
        self.world.progress(task, snap).is_ok()
    }

    pub fn apply(&self, task: &GroundedTask, snap: SnapRef) -> Result<SearchState, StepError> {
        let world = self.world.progress(task, snap)?;
        let mut run_info = self.run_info.clone();
        let mut clock = self.clock;
        match snap.kind {
            SnapKind::Start => run_info.push(RunInfo {
                start_step: self.steps.len(),
                deadline: clock + task.action(snap.action).duration,
            }),
            SnapKind::End => {
                let pos = self.world.running.iter().position(|a| *a == snap.action).expect("checked by progress");
                let info = run_info.remove(pos);
                clock = clock.max(info.deadline);
            }
        }
        let mut steps = self.steps.clone();
        steps.push(snap);
        Ok(SearchState { world, run_info, steps, clock, eval: OnceLock::new() })
    }

    /// Drops the first `len` steps, rebasing the clock so that the state
    /// after those steps becomes time zero.
    pub fn truncate_prefix(&self, len: usize, base: Time) -> SearchState {
        SearchState {
            world: self.world.clone(),
            run_info: self
                .run_info
                .iter()
                .map(|r| RunInfo {
                    start_step: r.start_step.saturating_sub(len),
                    deadline: r.deadline - base,
                })
                .collect(),
            steps: self.steps[len.min(self.steps.len())..].to_vec(),
            clock: self.clock - base,
            eval: self.eval.clone(),
        }
    }

    pub fn clock(&self) -> Time {
        self.clock
    }

    /// Time each running action still needs, by action.
    pub fn remaining(&self) -> Vec<(ActionId, Time)> {
        let mut r: Vec<(ActionId, Time)> = self
            .world
            .running
            .iter()
            .zip(&self.run_info)
            .map(|(a, i)| (*a, (i.deadline - self.clock).max(Time::ZERO)))
            .collect();
        r.sort();
        r
    }

    /// Index of the start step of each running action, parallel to `running()`.
    pub fn running_start_steps(&self) -> Vec<usize> {
        self.run_info.iter().map(|r| r.start_step).collect()
    }
}

/// One successor per applicable snap, in snap index order.
pub fn get_successors(state: &SearchState, task: &GroundedTask) -> Vec<SearchState> {
    (0..task.snaps().len())
        .map(SnapRef::from_index)
        .filter_map(|r| state.apply(task, r).ok())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub time: Time,
    pub action: ActionId,
    pub duration: Time,
}

/// Time-triggered plan: entries sorted by dispatch time.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimedPlan {
    pub entries: Vec<PlanEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("temporal network is inconsistent")]
pub struct Inconsistent;

impl TimedPlan {
    pub fn makespan(&self) -> Time {
        makespan(self)
    }

    pub fn render(&self, task: &GroundedTask) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&format!("{}: {} [{}]\n", e.time, task.action(e.action).name(), e.duration));
        }
        out
    }

    /// Parses `t: (action args) [d]` lines; blank lines and `;` comments are skipped.
    pub fn parse(text: &str, task: &GroundedTask) -> Result<TimedPlan, String> {
        let mut entries = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split(';').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |what: &str| format!("line {}: {what}: `{raw}`", n + 1);
            let (t, rest) = line.split_once(':').ok_or_else(|| bad("missing `:`"))?;
            let time: Time = t.trim().parse().map_err(|_| bad("bad time"))?;
            let open = rest.find('(').ok_or_else(|| bad("missing action"))?;
            let close = rest.find(')').ok_or_else(|| bad("missing `)`"))?;
            let action = task.parse_action(&rest[open..=close]).ok_or_else(|| bad("unknown action"))?;
            let after = rest[close + 1..].trim();
            let duration = match after.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                Some(d) => d.trim().parse().map_err(|_| bad("bad duration"))?,
                None if after.is_empty() => task.action(action).duration,
                None => return Err(bad("bad duration")),
            };
            if time < Time::ZERO {
                return Err(bad("negative time"));
            }
            entries.push(PlanEntry { time, action, duration });
        }
        entries.sort_by_key(|e| e.time);
        Ok(TimedPlan { entries })
    }

    /// Snap sequence ordered by event time. At equal times ends precede
    /// starts; otherwise entry order is kept.
    pub fn to_snaps(&self) -> Vec<SnapRef> {
        let mut events: Vec<(Time, u8, usize, SnapRef)> = Vec::new();
        for (i, e) in self.entries.iter().enumerate() {
            events.push((e.time, 1, i, SnapRef::start(e.action)));
            events.push((e.time + e.duration, 0, i, SnapRef::end(e.action)));
        }
        events.sort();
        events.into_iter().map(|(_, _, _, s)| s).collect()
    }
}

pub fn makespan(plan: &TimedPlan) -> Time {
    plan.entries.iter().map(|e| e.time + e.duration).max().unwrap_or(Time::ZERO)
}

impl fmt::Display for PlanEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: #{} [{}]", self.time, self.action.0, self.duration)
    }
}

fn falsifies(del: &[crate::task::AtomId], add: &[crate::task::AtomId], conds: &[Literal]) -> bool {
    conds.iter().any(|c| if c.positive { del.contains(&c.atom) } else { add.contains(&c.atom) })
}

/// Whether a later snap `j` must be separated from an earlier snap `i`.
pub fn interferes(task: &GroundedTask, i: SnapRef, j: SnapRef) -> bool {
    let si = task.snap(i);
    let sj = task.snap(j);
    falsifies(&sj.del, &sj.add, &si.conditions)
        || si.add.iter().any(|a| sj.del.contains(a))
        || falsifies(&si.del, &si.add, &sj.conditions)
}

/// Builds the simple temporal network of a totally ordered snap sequence and
/// returns the earliest time of each snap.
pub fn snap_times(task: &GroundedTask, steps: &[SnapRef]) -> Result<Vec<Time>, Inconsistent> {
    let n = steps.len();
    // node 0 is the origin, node k+1 is step k
    let mut edges: Vec<(usize, usize, i64)> = Vec::new();
    for k in 0..n {
        edges.push((0, k + 1, 0));
        if k + 1 < n {
            edges.push((k + 1, k + 2, 0));
        }
        for j in k + 1..n {
            if interferes(task, steps[k], steps[j]) {
                edges.push((k + 1, j + 1, EPSILON.ticks()));
            }
        }
    }
    let mut open: Vec<(ActionId, usize)> = Vec::new();
    for (k, s) in steps.iter().enumerate() {
        match s.kind {
            SnapKind::Start => open.push((s.action, k)),
            SnapKind::End => {
                if let Some(p) = open.iter().position(|(a, _)| *a == s.action) {
                    let (a, start) = open.remove(p);
                    let d = task.action(a).duration.ticks();
                    edges.push((start + 1, k + 1, d));
                    edges.push((k + 1, start + 1, -d));
                }
            }
        }
    }

    // longest paths from the origin; a positive cycle means no schedule exists
    let mut dist = vec![i64::MIN; n + 1];
    dist[0] = 0;
    let mut changed = true;
    let mut rounds = 0;
    while changed {
        if rounds > n + 1 {
            return Err(Inconsistent);
        }
        changed = false;
        for &(u, v, w) in &edges {
            if dist[u] != i64::MIN && dist[u] + w > dist[v] {
                dist[v] = dist[u] + w;
                changed = true;
            }
        }
        rounds += 1;
    }

    Ok(dist[1..].iter().map(|t| Time::from_ticks(*t)).collect())
}

/// Earliest-dispatch time-triggered plan of a snap sequence.
pub fn schedule_steps(task: &GroundedTask, steps: &[SnapRef]) -> Result<TimedPlan, Inconsistent> {
    let times = snap_times(task, steps)?;
    let mut entries: Vec<PlanEntry> = steps
        .iter()
        .zip(&times)
        .filter(|(s, _)| s.kind == SnapKind::Start)
        .map(|(s, t)| PlanEntry { time: *t, action: s.action, duration: task.action(s.action).duration })
        .collect();
    entries.sort_by_key(|e| e.time);
    Ok(TimedPlan { entries })
}

pub fn extract_timed_plan(task: &GroundedTask, state: &SearchState) -> Result<TimedPlan, Inconsistent> {
    schedule_steps(task, state.steps())
}
