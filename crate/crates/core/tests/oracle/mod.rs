//! Brute-force reference implementations used by the integration tests.
//!
//! Nothing here calls into the planner's own progression, heuristic or
//! scheduling code; only the grounded action data is shared.

#![allow(dead_code)]

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashSet, VecDeque};

use contiplan_core::state::PlanEntry;
use contiplan_core::task::{GroundDurativeAction, Literal};
use contiplan_core::{ActionId, AtomId, Goal, GroundedTask, SnapKind, SnapRef, TimedPlan, WorldState};

pub type Atoms = BTreeSet<u32>;

fn holds(atoms: &Atoms, lits: &[Literal]) -> bool {
    lits.iter().all(|l| atoms.contains(&l.atom.0) == l.positive)
}

fn apply(atoms: &mut Atoms, del: &[AtomId], add: &[AtomId]) {
    for d in del {
        atoms.remove(&d.0);
    }
    for a in add {
        atoms.insert(a.0);
    }
}

fn invariants_hold<'a>(task: &GroundedTask, atoms: &Atoms, running: impl IntoIterator<Item = &'a u32>) -> bool {
    running.into_iter().all(|a| holds(atoms, &task.action(ActionId(*a)).cond_overall))
}

fn action(task: &GroundedTask, a: u32) -> &GroundDurativeAction {
    task.action(ActionId(a))
}

/// Optimal makespan in ticks under a clock model: starts take no time,
/// time only passes by waiting for the earliest running action to end.
/// Separation between interfering events is ignored.
pub fn optimal_makespan(task: &GroundedTask) -> Option<i64> {
    optimal_from(task, &task.init.iter().map(|a| a.0).collect(), &task.goal).map(|(g, _)| g)
}

/// Optimal makespan from `init` to `goal` and the final atoms of one
/// optimal plan.
pub fn optimal_from(task: &GroundedTask, init: &Atoms, goal: &Goal) -> Option<(i64, Atoms)> {
    type Node = (Atoms, Vec<(u32, i64)>);
    let goal = goal.literals().to_vec();
    let mut heap = BinaryHeap::new();
    let mut seen: HashSet<Node> = HashSet::new();
    heap.push(Reverse((0i64, (init.clone(), Vec::new()))));
    while let Some(Reverse((g, node))) = heap.pop() {
        if !seen.insert(node.clone()) {
            continue;
        }
        let (atoms, running) = node;
        if running.is_empty() && holds(&atoms, &goal) {
            return Some((g, atoms));
        }
        for a in task.actions() {
            let id = a.id.0;
            if running.iter().any(|(r, _)| *r == id) || !holds(&atoms, &a.cond_start) {
                continue;
            }
            let mut next = atoms.clone();
            apply(&mut next, &a.del_start, &a.add_start);
            let mut run = running.clone();
            run.push((id, a.duration.ticks()));
            run.sort();
            if invariants_hold(task, &next, run.iter().map(|(r, _)| r)) {
                heap.push(Reverse((g, (next, run))));
            }
        }
        let Some(wait) = running.iter().map(|(_, rem)| *rem).min() else {
            continue;
        };
        for (id, rem) in &running {
            if *rem != wait {
                continue;
            }
            let a = action(task, *id);
            if !holds(&atoms, &a.cond_end) || !holds(&atoms, &a.cond_overall) {
                continue;
            }
            let mut next = atoms.clone();
            apply(&mut next, &a.del_end, &a.add_end);
            let run: Vec<(u32, i64)> = running.iter().filter(|(r, _)| r != id).map(|(r, t)| (*r, t - wait)).collect();
            if invariants_hold(task, &next, run.iter().map(|(r, _)| r)) {
                heap.push(Reverse((g + wait, (next, run))));
            }
        }
    }
    None
}

/// Untimed reachability of `goal` from `state`, one running copy per action.
pub fn goal_reachable(task: &GroundedTask, state: &WorldState, goal: &Goal) -> bool {
    type Node = (Atoms, BTreeSet<u32>);
    let start: Node = (state.fluents.iter().map(|a| a.0).collect(), state.running.iter().map(|a| a.0).collect());
    let mut seen = HashSet::from([start.clone()]);
    let mut queue = VecDeque::from([start]);
    let lits = goal.literals();
    while let Some((atoms, running)) = queue.pop_front() {
        if running.is_empty() && holds(&atoms, lits) {
            return true;
        }
        for a in task.actions() {
            let id = a.id.0;
            let mut next = atoms.clone();
            let mut run = running.clone();
            if running.contains(&id) {
                if !holds(&atoms, &a.cond_end) {
                    continue;
                }
                apply(&mut next, &a.del_end, &a.add_end);
                run.remove(&id);
            } else {
                if !holds(&atoms, &a.cond_start) {
                    continue;
                }
                apply(&mut next, &a.del_start, &a.add_start);
                run.insert(id);
            }
            if invariants_hold(task, &next, &run) {
                let n = (next, run);
                if seen.insert(n.clone()) {
                    queue.push_back(n);
                }
            }
        }
    }
    false
}

/// Entries that must finish when arresting at `anchor`, by sweeping the
/// plan in dispatch order against the anchor's end.
pub fn arrest_oracle(plan: &TimedPlan, anchor: ActionId) -> BTreeSet<usize> {
    let Some(ai) = plan.entries.iter().position(|e| e.action == anchor) else {
        return BTreeSet::new();
    };
    let a: &PlanEntry = &plan.entries[ai];
    let end = a.time.ticks() + a.duration.ticks();
    let mut order: Vec<usize> = (0..plan.entries.len()).collect();
    order.sort_by_key(|i| plan.entries[*i].time);
    let mut out = BTreeSet::from([ai]);
    for i in order {
        if plan.entries[i].time.ticks() >= end {
            break;
        }
        out.insert(i);
    }
    out
}

/// Progresses a snap sequence, returning the index of the first snap that
/// cannot be applied.
pub fn replay(task: &GroundedTask, state: &WorldState, steps: &[SnapRef]) -> Result<(Atoms, Vec<u32>), usize> {
    let mut atoms: Atoms = state.fluents.iter().map(|a| a.0).collect();
    let mut running: Vec<u32> = state.running.iter().map(|a| a.0).collect();
    for (i, s) in steps.iter().enumerate() {
        let a = action(task, s.action.0);
        match s.kind {
            SnapKind::Start => {
                if !holds(&atoms, &a.cond_start) {
                    return Err(i);
                }
                apply(&mut atoms, &a.del_start, &a.add_start);
                running.push(a.id.0);
            }
            SnapKind::End => {
                let Some(p) = running.iter().position(|r| *r == a.id.0) else {
                    return Err(i);
                };
                if !holds(&atoms, &a.cond_end) {
                    return Err(i);
                }
                running.remove(p);
                apply(&mut atoms, &a.del_end, &a.add_end);
            }
        }
        if !invariants_hold(task, &atoms, &running) {
            return Err(i);
        }
    }
    running.sort();
    Ok((atoms, running))
}

pub fn atoms_of(state: &WorldState) -> (Atoms, Vec<u32>) {
    let mut running: Vec<u32> = state.running.iter().map(|a| a.0).collect();
    running.sort();
    (state.fluents.iter().map(|a| a.0).collect(), running)
}

pub fn world_from_atoms(atoms: &Atoms) -> WorldState {
    WorldState::new(atoms.iter().map(|a| AtomId(*a)).collect())
}

/// Number of untimed states reachable from `state`, up to `cap`.
pub fn count_states(task: &GroundedTask, state: &WorldState, cap: usize) -> usize {
    let start = atoms_of(state);
    let mut seen = HashSet::from([start.clone()]);
    let mut queue = VecDeque::from([start]);
    while let Some((atoms, running)) = queue.pop_front() {
        if seen.len() > cap {
            break;
        }
        for sref in (0..task.snaps().len()).map(SnapRef::from_index) {
            let w = WorldState { fluents: atoms.iter().map(|a| AtomId(*a)).collect(), running: running.iter().map(|a| ActionId(*a)).collect() };
            if let Ok(next) = replay(task, &w, &[sref]) {
                if seen.insert(next.clone()) {
                    queue.push_back(next);
                }
            }
        }
    }
    seen.len()
}
