//! Relaxed planning graph over snap actions.
//!
//! Facts are literals: `p` and `not p` are separate facts, so negative
//! conditions are handled by treating a delete of `p` as an achiever of
//! `not p`. Deletes are otherwise ignored. An end snap becomes available one
//! layer after its start. The value of a state is the number of snaps in a
//! relaxed plan extracted backwards from the goal.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::state::{Evaluation, SearchState};
use crate::task::{ActionId, Goal, GroundedTask, Literal, SnapKind, SnapRef};

const NEVER: u32 = u32::MAX;

fn fact(l: Literal) -> usize {
    l.atom.index() * 2 + usize::from(!l.positive)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("goal unreachable in the relaxation")]
pub struct Unreachable;

/// Layered reachability information plus the extracted relaxed plan.
#[derive(Debug, Clone)]
pub struct RelaxedGraph {
    fact_layer: Vec<u32>,
    snap_layer: Vec<u32>,
    goal_layer: u32,
    plan: Vec<SnapRef>,
}

impl RelaxedGraph {
    /// First fact layer in which every goal literal is present.
    pub fn goal_layer(&self) -> u32 {
        self.goal_layer
    }

    pub fn fact_layer(&self, l: Literal) -> Option<u32> {
        let v = self.fact_layer[fact(l)];
        (v != NEVER).then_some(v)
    }

    pub fn snap_layer(&self, s: SnapRef) -> Option<u32> {
        let v = self.snap_layer[s.index()];
        (v != NEVER).then_some(v)
    }

    /// Snaps of the relaxed plan, sorted by layer then snap index.
    pub fn relaxed_plan(&self) -> &[SnapRef] {
        &self.plan
    }
}

/// Relaxed conditions of a snap. A start also needs the action's invariant,
/// minus whatever the start itself makes true; an end needs its invariant.
fn relaxed_conditions(task: &GroundedTask, s: SnapRef) -> Vec<Literal> {
    let a = task.action(s.action);
    match s.kind {
        SnapKind::Start => a
            .cond_start
            .iter()
            .copied()
            .chain(a.cond_overall.iter().copied().filter(|l| {
                let own = if l.positive { &a.add_start } else { &a.del_start };
                !own.contains(&l.atom)
            }))
            .collect(),
        SnapKind::End => a.cond_end.iter().chain(&a.cond_overall).copied().collect(),
    }
}

fn effects(task: &GroundedTask, s: SnapRef) -> impl Iterator<Item = Literal> + '_ {
    let snap = task.snap(s);
    snap.add.iter().map(|a| Literal::pos(*a)).chain(snap.del.iter().map(|a| Literal::neg(*a)))
}

pub fn build_rpg(state: &SearchState, task: &GroundedTask, goal: &Goal) -> Result<RelaxedGraph, Unreachable> {
    let n_atoms = task.num_atoms();
    let n_snaps = task.snaps().len();
    let mut fact_layer = vec![NEVER; n_atoms * 2];
    for i in 0..n_atoms {
        let a = crate::task::AtomId(i as u32);
        let l = if state.fluents().contains(a) { Literal::pos(a) } else { Literal::neg(a) };
        fact_layer[fact(l)] = 0;
    }
    // layer from which an end snap's start counts as applied
    let mut started = vec![NEVER; task.actions().len()];
    for a in state.running() {
        started[a.index()] = 0;
        for l in effects(task, SnapRef::end(*a)) {
            fact_layer[fact(l)] = 0;
        }
    }
    let conditions: Vec<Vec<Literal>> =
        (0..n_snaps).map(|i| relaxed_conditions(task, SnapRef::from_index(i))).collect();
    let mut snap_layer = vec![NEVER; n_snaps];

    let goal_in = |fl: &[u32], k: u32| goal.literals().iter().all(|l| fl[fact(*l)] <= k);
    let mut k = 0u32;
    loop {
        if goal_in(&fact_layer, k) {
            break;
        }
        let mut progress = false;
        let mut new_facts = Vec::new();
        for i in 0..n_snaps {
            if snap_layer[i] != NEVER {
                continue;
            }
            let s = SnapRef::from_index(i);
            if s.kind == SnapKind::End && started[s.action.index()] > k {
                continue;
            }
            if conditions[i].iter().all(|l| fact_layer[fact(*l)] <= k) {
                snap_layer[i] = k;
                progress = true;
                if s.kind == SnapKind::Start && started[s.action.index()] == NEVER {
                    started[s.action.index()] = k + 1;
                }
                for l in effects(task, s) {
                    if fact_layer[fact(l)] == NEVER {
                        new_facts.push(fact(l));
                    }
                }
            }
        }
        for f in new_facts {
            fact_layer[f] = fact_layer[f].min(k + 1);
        }
        // a start applied at k enables its end at k + 1 even without new facts
        if !progress {
            return Err(Unreachable);
        }
        k += 1;
    }
    let goal_layer = k;
    let plan = extract(task, state, goal, &fact_layer, &snap_layer, &conditions);
    Ok(RelaxedGraph { fact_layer, snap_layer, goal_layer, plan })
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Need {
    Fact(usize, Literal),
    Started(ActionId),
}

fn extract(
    task: &GroundedTask,
    state: &SearchState,
    goal: &Goal,
    fact_layer: &[u32],
    snap_layer: &[u32],
    conditions: &[Vec<Literal>],
) -> Vec<SnapRef> {
    let top = goal.literals().iter().map(|l| fact_layer[fact(*l)]).max().unwrap_or(0) as usize;
    let mut needs: Vec<BTreeSet<Need>> = vec![BTreeSet::new(); top + 1];
    for l in goal.literals() {
        needs[fact_layer[fact(*l)] as usize].insert(Need::Fact(fact(*l), *l));
    }
    let mut chosen: BTreeSet<(u32, usize)> = BTreeSet::new();
    let mut achieved = vec![false; fact_layer.len()];
    let mut started_chosen = vec![false; task.actions().len()];
    for a in state.running() {
        started_chosen[a.index()] = true;
    }
    for layer in (1..=top).rev() {
        let items: Vec<Need> = needs[layer].iter().copied().collect();
        for item in items {
            let achiever = match item {
                Need::Fact(f, _) if achieved[f] => continue,
                Need::Started(a) if started_chosen[a.index()] => continue,
                Need::Started(a) => SnapRef::start(a),
                Need::Fact(f, lit) => {
                    // earliest snap in task order at the layer just below
                    let found = (0..snap_layer.len()).find(|&i| {
                        snap_layer[i] == layer as u32 - 1
                            && effects(task, SnapRef::from_index(i)).any(|e| fact(e) == f)
                    });
                    match found {
                        Some(i) => SnapRef::from_index(i),
                        None => unreachable!("fact {lit:?} at layer {layer} has an achiever below"),
                    }
                }
            };
            let sl = snap_layer[achiever.index()];
            if !chosen.insert((sl, achiever.index())) {
                continue;
            }
            for e in effects(task, achiever) {
                achieved[fact(e)] = true;
            }
            if achiever.kind == SnapKind::Start {
                started_chosen[achiever.action.index()] = true;
            }
            for c in &conditions[achiever.index()] {
                let fl = fact_layer[fact(*c)] as usize;
                if fl > 0 && !achieved[fact(*c)] {
                    needs[fl].insert(Need::Fact(fact(*c), *c));
                }
            }
            if achiever.kind == SnapKind::End && !started_chosen[achiever.action.index()] {
                let start_layer = snap_layer[SnapRef::start(achiever.action).index()] as usize;
                needs[start_layer + 1].insert(Need::Started(achiever.action));
            }
        }
    }
    chosen.into_iter().map(|(_, i)| SnapRef::from_index(i)).collect()
}

/// Heuristic value and helpful snaps, or an infinite value if unreachable.
pub fn evaluate(state: &SearchState, task: &GroundedTask, goal: &Goal) -> Evaluation {
    match build_rpg(state, task, goal) {
        Ok(g) => Evaluation { hval: g.plan.len() as f64, helpful: helpful_actions(&g).into() },
        Err(Unreachable) => Evaluation { hval: f64::INFINITY, helpful: Arc::from(Vec::new()) },
    }
}

/// Cached value of `state`.
pub fn hval(state: &SearchState, task: &GroundedTask, goal: &Goal) -> f64 {
    state.evaluate_with(|s| evaluate(s, task, goal)).hval
}

/// Relaxed-plan snaps in the first layer.
pub fn helpful_actions(graph: &RelaxedGraph) -> Vec<SnapRef> {
    graph.plan.iter().copied().filter(|s| graph.snap_layer[s.index()] == 0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::pddl::load_task;
    use crate::state::WorldState;

    fn delivery() -> (GroundedTask, SearchState) {
        let t = load_task(fixtures::DELIVERY_DOMAIN, fixtures::DELIVERY_P1).unwrap();
        let s = SearchState::root(WorldState::new(t.init.clone()));
        (t, s)
    }

    #[test]
    fn delivery_init_value() {
        let (t, s) = delivery();
        let g = build_rpg(&s, &t, &t.goal).unwrap();
        assert_eq!(g.goal_layer(), 6);
        assert_eq!(hval(&s, &t, &t.goal), 8.0);
        let names: Vec<String> = g.relaxed_plan().iter().map(|r| t.snap_name(*r)).collect();
        assert_eq!(names.len(), 8);
        assert!(names.contains(&"start (load r1 b1 w1)".to_string()));
        assert!(names.contains(&"end (unload r1 b1 w3)".to_string()));
    }

    #[test]
    fn helpful_includes_load_start() {
        let (t, s) = delivery();
        let g = build_rpg(&s, &t, &t.goal).unwrap();
        let load = t.parse_action("(load r1 b1 w1)").unwrap();
        assert!(helpful_actions(&g).contains(&SnapRef::start(load)));
    }

    #[test]
    fn satisfied_goal_is_zero() {
        let (t, s) = delivery();
        let g = Goal::new([t.parse_literal("(at r1 w1)").unwrap()]);
        assert_eq!(hval(&s, &t, &g), 0.0);
        assert!(helpful_actions(&build_rpg(&s, &t, &g).unwrap()).is_empty());
    }

    #[test]
    fn running_end_effects_are_free() {
        let (t, s) = delivery();
        let m = t.parse_action("(move r1 w1 w2)").unwrap();
        let s1 = s.apply(&t, SnapRef::start(m)).unwrap();
        let g = Goal::new([t.parse_literal("(at r1 w2)").unwrap()]);
        assert_eq!(hval(&s1, &t, &g), 0.0);
    }

    #[test]
    fn unreachable_is_infinite() {
        let t = load_task(fixtures::DELIVERY_DOMAIN, fixtures::DELIVERY_UNSOLVABLE).unwrap();
        let s = SearchState::root(WorldState::new(t.init.clone()));
        assert!(build_rpg(&s, &t, &t.goal).is_err());
        assert_eq!(hval(&s, &t, &t.goal), f64::INFINITY);
    }

    #[test]
    fn negative_goal_achieved_by_delete() {
        let (t, s) = delivery();
        let g = Goal::new([t.parse_literal("(not (box-at b1 w1))").unwrap()]);
        assert_eq!(hval(&s, &t, &g), 1.0);
    }
}
