use std::collections::BTreeSet;
use std::sync::Arc;

use crate::exec::BoardSnapshot;
use crate::search::SearchMessage;
use crate::state::{TimedPlan, WorldState};
use crate::task::{ActionId, GroundedTask, SnapRef};
use crate::time::Time;

/// A received plan fragment and the states it connects.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub steps: Vec<SnapRef>,
    pub root: WorldState,
    pub end: WorldState,
}

impl Segment {
    /// `None` if the steps do not apply to `root`.
    pub fn new(task: &GroundedTask, steps: Vec<SnapRef>, root: WorldState) -> Option<Segment> {
        let mut end = root.clone();
        for s in &steps {
            end = end.progress(task, *s).ok()?;
        }
        Some(Segment { steps, root, end })
    }
}

/// Plans received but not yet committed.
#[derive(Debug, Clone, Default)]
pub struct PlanQueue {
    pub pending: Vec<Segment>,
    /// Commitment prefix of the search feeding the queue.
    pub anchor: Arc<Vec<SnapRef>>,
    /// State the next fragment must start from.
    pub tail: WorldState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleAction {
    Enqueue,
    Replace,
    Reject,
}

impl ScheduleAction {
    pub fn as_str(self) -> &'static str {
        match self {
            ScheduleAction::Enqueue => "enqueue",
            ScheduleAction::Replace => "replace",
            ScheduleAction::Reject => "reject",
        }
    }
}

impl PlanQueue {
    /// Empty queue fed by a search that starts from the board's state.
    pub fn reset(&mut self, board: &BoardSnapshot) {
        self.pending.clear();
        self.anchor = board.actions.clone();
        self.tail = board.state.clone();
    }

    pub fn pending_steps(&self) -> Vec<SnapRef> {
        self.pending.iter().flat_map(|s| s.steps.iter().copied()).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.iter().all(|s| s.steps.is_empty())
    }

    /// Removes the first `n` pending snaps.
    pub fn take(&mut self, task: &GroundedTask, mut n: usize) -> Vec<SnapRef> {
        let mut out = Vec::new();
        while n > 0 && !self.pending.is_empty() {
            let seg = &mut self.pending[0];
            if seg.steps.len() <= n {
                n -= seg.steps.len();
                out.extend(self.pending.remove(0).steps);
            } else {
                let rest = seg.steps.split_off(n);
                out.append(&mut seg.steps);
                let mut root = seg.root.clone();
                for s in &out[out.len() - n..] {
                    root = root.progress(task, *s).unwrap_or(root);
                }
                seg.steps = rest;
                seg.root = root;
                n = 0;
            }
        }
        out
    }
}

/// Decides what to do with a search result.
///
/// A partial plan from the feeding search that continues the queue's tail
/// is enqueued. A plan computed from exactly the current commitments and
/// projection replaces everything pending. Anything else is stale.
pub fn schedule_plan(task: &GroundedTask, queue: &mut PlanQueue, msg: &SearchMessage, board: &BoardSnapshot) -> ScheduleAction {
    let (steps, prefix, root) = match msg {
        SearchMessage::PartialPlan { steps, prefix, root, .. } => (steps, prefix, root),
        SearchMessage::ImprovedPlan { steps, prefix, root, .. } => (steps, prefix, root),
        SearchMessage::SearchFailed => return ScheduleAction::Reject,
    };
    let Some(seg) = Segment::new(task, steps.clone(), root.clone()) else {
        return ScheduleAction::Reject;
    };
    let current = **prefix == *board.actions && *root == board.state;
    let continues = matches!(msg, SearchMessage::PartialPlan { .. }) && *prefix == queue.anchor && *root == queue.tail;
    if continues {
        queue.tail = seg.end.clone();
        queue.pending.push(seg);
        ScheduleAction::Enqueue
    } else if current {
        queue.anchor = prefix.clone();
        queue.tail = seg.end.clone();
        queue.pending = vec![seg];
        ScheduleAction::Replace
    } else {
        ScheduleAction::Reject
    }
}

/// Actions that must still finish when execution is arrested at `anchor`:
/// the anchor and every action dispatched before it finishes.
pub fn early_arrest_point(plan: &TimedPlan, anchor: ActionId) -> BTreeSet<usize> {
    let Some(a) = plan.entries.iter().position(|e| e.action == anchor) else {
        return BTreeSet::new();
    };
    let finish: Time = plan.entries[a].time + plan.entries[a].duration;
    let mut out: BTreeSet<usize> = plan.entries.iter().enumerate().filter(|(_, e)| e.time < finish).map(|(i, _)| i).collect();
    out.insert(a);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::CommittedBoard;
    use crate::fixtures;
    use crate::pddl::load_task;
    use crate::state::PlanEntry;

    fn entry(t: i64, a: u32, d: i64) -> PlanEntry {
        PlanEntry { time: Time::from_units(t), action: ActionId(a), duration: Time::from_units(d) }
    }

    #[test]
    fn arrest_examples() {
        let plan = TimedPlan { entries: vec![entry(0, 0, 2), entry(1, 1, 3), entry(4, 2, 2)] };
        assert_eq!(early_arrest_point(&plan, ActionId(0)), BTreeSet::from([0, 1]));
        assert_eq!(early_arrest_point(&plan, ActionId(2)), BTreeSet::from([0, 1, 2]));
        let apart = TimedPlan { entries: vec![entry(0, 0, 1), entry(5, 1, 1)] };
        assert_eq!(early_arrest_point(&apart, ActionId(0)), BTreeSet::from([0]));
    }

    #[test]
    fn chain_and_replace() {
        let t = load_task(fixtures::DELIVERY_DOMAIN, fixtures::DELIVERY_P1).unwrap();
        let init = WorldState::new(t.init.clone());
        let board = CommittedBoard::new(init.clone());
        let snap = board.snapshot();
        let mut q = PlanQueue::default();
        q.reset(&snap);
        let l = t.parse_action("(load r1 b1 w1)").unwrap();
        let m = t.parse_action("(move r1 w1 w2)").unwrap();
        let first = vec![SnapRef::start(l), SnapRef::end(l)];
        let msg = SearchMessage::PartialPlan { steps: first.clone(), prefix: snap.actions.clone(), root: init.clone(), reaches_goal: false };
        assert_eq!(schedule_plan(&t, &mut q, &msg, &snap), ScheduleAction::Enqueue);
        let after = q.tail.clone();
        let msg2 = SearchMessage::PartialPlan {
            steps: vec![SnapRef::start(m), SnapRef::end(m)],
            prefix: snap.actions.clone(),
            root: after,
            reaches_goal: false,
        };
        assert_eq!(schedule_plan(&t, &mut q, &msg2, &snap), ScheduleAction::Enqueue);
        assert_eq!(q.pending.len(), 2);

        let improved = SearchMessage::ImprovedPlan {
            steps: first.clone(),
            prefix: snap.actions.clone(),
            root: init.clone(),
            makespan: Time::from_units(1),
        };
        assert_eq!(schedule_plan(&t, &mut q, &improved, &snap), ScheduleAction::Replace);
        assert_eq!(q.pending_steps(), first);

        board.extend(&first, q.tail.clone());
        let moved = board.snapshot();
        assert_eq!(schedule_plan(&t, &mut q, &improved, &moved), ScheduleAction::Reject);
    }

    #[test]
    fn take_splits_segments() {
        let t = load_task(fixtures::DELIVERY_DOMAIN, fixtures::DELIVERY_P1).unwrap();
        let init = WorldState::new(t.init.clone());
        let l = t.parse_action("(load r1 b1 w1)").unwrap();
        let m = t.parse_action("(move r1 w1 w2)").unwrap();
        let steps = vec![SnapRef::start(l), SnapRef::end(l), SnapRef::start(m), SnapRef::end(m)];
        let mut q = PlanQueue { pending: vec![Segment::new(&t, steps.clone(), init).unwrap()], ..Default::default() };
        assert_eq!(q.take(&t, 2), steps[..2].to_vec());
        assert_eq!(q.pending[0].steps, steps[2..].to_vec());
        assert!(q.pending[0].root.fluents.holds(t.parse_literal("(holding r1 b1)").unwrap()));
        assert_eq!(q.take(&t, 5), steps[2..].to_vec());
        assert!(q.is_empty());
    }
}
