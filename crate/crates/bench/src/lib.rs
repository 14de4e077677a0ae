//! Workloads shared by the benchmarks.

use std::sync::Arc;

use contiplan_core::agent::Desire;
use contiplan_core::fixtures;
use contiplan_core::pddl::load_task;
use contiplan_core::search::SearchContext;
use contiplan_core::{GroundedTask, WorldState};

/// Generated delivery task for `seed`.
pub fn delivery(seed: u64, waypoints: usize, boxes: usize) -> Arc<GroundedTask> {
    Arc::new(load_task(fixtures::DELIVERY_DOMAIN, &fixtures::generate_delivery(seed, waypoints, boxes)).expect("generated task parses"))
}

pub fn context(task: &Arc<GroundedTask>) -> (SearchContext, WorldState) {
    (SearchContext::new(task.clone(), task.goal.clone()), WorldState::new(task.init.clone()))
}

/// The task's own goal as the only desire.
pub fn goal_desire(task: &GroundedTask) -> Vec<Desire> {
    vec![Desire { id: "goal".into(), goal: task.goal.clone(), priority: 0.0, precondition: Vec::new(), revision_rules: Vec::new() }]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn workloads_build() {
        let t = delivery(1, 4, 2);
        let (ctx, init) = context(&t);
        assert_eq!(ctx.goal, t.goal);
        assert_eq!(init.fluents, t.init);
        assert_eq!(goal_desire(&t).len(), 1);
    }
}
