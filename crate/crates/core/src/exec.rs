//! Committed actions, state projection and plan-failure forecasting.

use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use crate::state::{StepError, WorldState};
use crate::task::{Goal, GroundedTask, Literal, SnapKind, SnapRef};

/// Consistent view of the board at one version.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoardSnapshot {
    /// Snaps committed since the last reinitialization.
    pub actions: Arc<Vec<SnapRef>>,
    /// Beliefs projected through the not yet executed committed snaps.
    pub state: WorldState,
    pub version: u64,
    pub epoch: u64,
}

/// Shared record of committed actions. One writer, many readers.
#[derive(Debug)]
pub struct CommittedBoard {
    inner: RwLock<BoardSnapshot>,
}

impl CommittedBoard {
    pub fn new(state: WorldState) -> Self {
        CommittedBoard {
            inner: RwLock::new(BoardSnapshot { actions: Arc::new(Vec::new()), state, version: 0, epoch: 0 }),
        }
    }

    pub fn snapshot(&self) -> BoardSnapshot {
        self.inner.read().expect("board lock poisoned").clone()
    }

    /// Appends newly committed snaps. Commitments are never withdrawn.
    pub fn extend(&self, snaps: &[SnapRef], state: WorldState) {
        let mut b = self.inner.write().expect("board lock poisoned");
        let mut actions = (*b.actions).clone();
        actions.extend_from_slice(snaps);
        b.actions = Arc::new(actions);
        b.state = state;
        b.version += 1;
    }

    /// Publishes a new projection after a belief update.
    pub fn refresh(&self, state: WorldState) {
        let mut b = self.inner.write().expect("board lock poisoned");
        if b.state != state {
            b.state = state;
            b.version += 1;
        }
    }

    /// Starts a new epoch whose commitment list is `actions`.
    pub fn reinit(&self, actions: Vec<SnapRef>, state: WorldState) {
        let mut b = self.inner.write().expect("board lock poisoned");
        b.actions = Arc::new(actions);
        b.state = state;
        b.version += 1;
        b.epoch += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SimulationResult {
    Success(WorldState),
    Failure { index: usize, error: StepError },
    GoalNotReached(WorldState),
}

impl SimulationResult {
    pub fn is_success(&self) -> bool {
        matches!(self, SimulationResult::Success(_))
    }

    pub fn failing_literal(&self) -> Option<Literal> {
        match self {
            SimulationResult::Failure { error, .. } => error.literal(),
            _ => None,
        }
    }
}

/// Progresses `state` through `steps`, stopping at the first violated
/// condition or invariant.
pub fn simulate_plan(task: &GroundedTask, state: &WorldState, steps: &[SnapRef], goal: &Goal) -> SimulationResult {
    let mut cur = state.clone();
    for (index, s) in steps.iter().enumerate() {
        match cur.progress(task, *s) {
            Ok(next) => cur = next,
            Err(error) => return SimulationResult::Failure { index, error },
        }
    }
    if cur.goal_reached(goal) {
        SimulationResult::Success(cur)
    } else {
        SimulationResult::GoalNotReached(cur)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("committed snap {index} cannot be applied: {error}")]
pub struct ProjectionFailed {
    pub index: usize,
    pub error: StepError,
}

pub fn project_committed(
    task: &GroundedTask,
    state: &WorldState,
    committed: &[SnapRef],
) -> Result<WorldState, ProjectionFailed> {
    let mut cur = state.clone();
    for (index, s) in committed.iter().enumerate() {
        cur = cur.progress(task, *s).map_err(|error| ProjectionFailed { index, error })?;
    }
    Ok(cur)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ForecastClass {
    WithinCommitted,
    AfterCommitted,
}

pub fn classify_forecast(failure_index: usize, committed_len: usize) -> ForecastClass {
    if failure_index < committed_len {
        ForecastClass::WithinCommitted
    } else {
        ForecastClass::AfterCommitted
    }
}

/// Length of the shortest prefix with at least `min_commit` snaps after
/// which no action is left open, or the whole queue if there is none.
pub fn select_commit(queue: &[SnapRef], min_commit: usize) -> usize {
    let mut open: Vec<crate::task::ActionId> = Vec::new();
    for (i, s) in queue.iter().enumerate() {
        match s.kind {
            SnapKind::Start => open.push(s.action),
            SnapKind::End => {
                if let Some(p) = open.iter().position(|a| *a == s.action) {
                    open.remove(p);
                }
            }
        }
        if i + 1 >= min_commit && open.is_empty() {
            return i + 1;
        }
    }
    queue.len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::pddl::load_task;
    use crate::task::ActionId;

    fn delivery() -> GroundedTask {
        load_task(fixtures::DELIVERY_DOMAIN, fixtures::DELIVERY_P1).unwrap()
    }

    fn full_plan(t: &GroundedTask) -> Vec<SnapRef> {
        ["(load r1 b1 w1)", "(move r1 w1 w2)", "(move r1 w2 w3)", "(unload r1 b1 w3)"]
            .iter()
            .flat_map(|n| {
                let a = t.parse_action(n).unwrap();
                [SnapRef::start(a), SnapRef::end(a)]
            })
            .collect()
    }

    #[test]
    fn simulate_delivery() {
        let t = delivery();
        let init = WorldState::new(t.init.clone());
        let empty = Goal::new([t.parse_literal("(at r1 w1)").unwrap()]);
        assert!(simulate_plan(&t, &init, &[], &empty).is_success());
        match simulate_plan(&t, &init, &full_plan(&t), &t.goal) {
            SimulationResult::Success(s) => assert!(s.fluents.holds(t.parse_literal("(box-at b1 w3)").unwrap())),
            other => panic!("{other:?}"),
        }
        assert!(matches!(simulate_plan(&t, &init, &[], &t.goal), SimulationResult::GoalNotReached(_)));
    }

    #[test]
    fn simulate_after_road_closure() {
        let t = delivery();
        let mut init = WorldState::new(t.init.clone());
        let closed = t.parse_literal("(connected w2 w3)").unwrap();
        init.fluents.remove(closed.atom);
        let r = simulate_plan(&t, &init, &full_plan(&t), &t.goal);
        assert_eq!(r, SimulationResult::Failure { index: 4, error: StepError::Condition(closed) });
        assert_eq!(r.failing_literal(), Some(closed));
    }

    #[test]
    fn projection() {
        let t = delivery();
        let init = WorldState::new(t.init.clone());
        assert_eq!(project_committed(&t, &init, &[]).unwrap(), init);
        let p = project_committed(&t, &init, &full_plan(&t)[..2]).unwrap();
        assert!(p.fluents.holds(t.parse_literal("(holding r1 b1)").unwrap()));
        let bad = &full_plan(&t)[4..];
        assert_eq!(project_committed(&t, &init, bad).unwrap_err().index, 0);
    }

    #[test]
    fn forecast_classes() {
        assert_eq!(classify_forecast(1, 4), ForecastClass::WithinCommitted);
        assert_eq!(classify_forecast(4, 4), ForecastClass::AfterCommitted);
        assert_eq!(classify_forecast(0, 0), ForecastClass::AfterCommitted);
    }

    #[test]
    fn commit_prefixes() {
        let (a, b) = (ActionId(0), ActionId(1));
        let seq = [SnapRef::start(a), SnapRef::end(a), SnapRef::start(b), SnapRef::end(b)];
        assert_eq!(select_commit(&seq, 1), 2);
        assert_eq!(select_commit(&seq, 3), 4);
        let nested = [SnapRef::start(a), SnapRef::start(b), SnapRef::end(a), SnapRef::end(b)];
        assert_eq!(select_commit(&nested, 1), 4);
        assert_eq!(select_commit(&[], 1), 0);
    }

    #[test]
    fn board_versions() {
        let t = delivery();
        let init = WorldState::new(t.init.clone());
        let board = CommittedBoard::new(init.clone());
        let plan = full_plan(&t);
        let p = project_committed(&t, &init, &plan[..2]).unwrap();
        board.extend(&plan[..2], p.clone());
        let s = board.snapshot();
        assert_eq!((s.version, s.epoch, s.actions.len()), (1, 0, 2));
        assert_eq!(s.state, p);
        board.reinit(Vec::new(), p);
        let s2 = board.snapshot();
        assert_eq!((s2.version, s2.epoch, s2.actions.len()), (2, 1, 0));
    }
}
