mod oracle;

use std::sync::Arc;

use proptest::prelude::*;

use contiplan_core::agent::{run_agent, Desire, Outcome, Trace};
use contiplan_core::exec::{select_commit, simulate_plan};
use contiplan_core::fixtures;
use contiplan_core::pddl::load_task;
use contiplan_core::search::{plan_offline, reroot, search_round, ClosedList, OpenList, RoundLimits, SearchContext, SearchMode, VirtualClock};
use contiplan_core::state::{schedule_steps, snap_times};
use contiplan_core::time::EPSILON;
use contiplan_core::{Config, GroundedTask, SearchState, SnapKind, SnapRef, Time, TimedPlan, WorldState};

fn delivery(seed: u64, waypoints: usize, boxes: usize) -> GroundedTask {
    load_task(fixtures::DELIVERY_DOMAIN, &fixtures::generate_delivery(seed, waypoints, boxes)).unwrap()
}

/// Random walk of applicable snaps, closing every action it opens.
fn walk(task: &GroundedTask, picks: &[usize]) -> Vec<SnapRef> {
    let mut state = WorldState::new(task.init.clone());
    let mut steps = Vec::new();
    for p in picks {
        let options: Vec<SnapRef> = (0..task.snaps().len())
            .map(SnapRef::from_index)
            .filter(|s| state.progress(task, *s).is_ok())
            .collect();
        if options.is_empty() {
            break;
        }
        let s = options[p % options.len()];
        state = state.progress(task, s).unwrap();
        steps.push(s);
    }
    steps
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 40, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn offline_plans_are_valid_and_optimal(seed in 0u64..10_000) {
        let task = delivery(seed, 4, 2);
        let ctx = SearchContext::new(Arc::new(task.clone()), task.goal.clone());
        let init = WorldState::new(task.init.clone());
        let plan = plan_offline(&ctx, init.clone(), &Config::default()).expect("generated instances are solvable");
        prop_assert!(simulate_plan(&task, &init, &plan.plan.to_snaps(), &task.goal).is_success());
        let opt = oracle::optimal_makespan(&task).unwrap();
        prop_assert!((plan.plan.makespan().ticks() - opt).abs() <= 10, "{} vs {}", plan.plan.makespan(), opt);
    }

    #[test]
    fn schedules_respect_durations_and_order(seed in 0u64..1000, picks in prop::collection::vec(0usize..64, 0..14)) {
        let task = delivery(seed, 4, 2);
        let steps = walk(&task, &picks);
        let times = snap_times(&task, &steps).expect("sequential delivery steps are consistent");
        for w in times.windows(2) {
            prop_assert!(w[0] <= w[1]);
        }
        for (i, s) in steps.iter().enumerate() {
            if s.kind == SnapKind::End {
                let start = steps[..i].iter().rposition(|x| *x == SnapRef::start(s.action)).unwrap();
                prop_assert_eq!(times[i] - times[start], task.action(s.action).duration);
            }
        }
        prop_assert!(times.first().is_none_or(|t| *t == Time::ZERO));
    }

    #[test]
    fn plan_text_roundtrip(seed in 0u64..1000, picks in prop::collection::vec(0usize..64, 0..14)) {
        let task = delivery(seed, 4, 2);
        let mut steps = walk(&task, &picks);
        let init = WorldState::new(task.init.clone());
        while let Err(oracle_fail) = oracle::replay(&task, &init, &steps) {
            steps.truncate(oracle_fail);
        }
        let open: Vec<_> = oracle::replay(&task, &init, &steps).unwrap().1;
        steps.retain(|s| !(s.kind == SnapKind::Start && open.contains(&s.action.0)));
        if let Ok(plan) = schedule_steps(&task, &steps) {
            let parsed = TimedPlan::parse(&plan.render(&task), &task).unwrap();
            prop_assert_eq!(&parsed, &plan);
        }
    }

    #[test]
    fn reroot_keeps_exactly_the_prefix_extensions(seed in 0u64..500, size in 1usize..5) {
        let task = delivery(seed, 4, 1);
        let ctx = SearchContext::new(Arc::new(task.clone()), task.goal.clone());
        let (mut open, mut closed) = (OpenList::new(), ClosedList::new());
        let root = SearchState::root(WorldState::new(task.init.clone()));
        let limits = RoundLimits { interval_ms: u64::MAX, plan_size_limit: size };
        let r = search_round(&ctx, SearchMode::NG, &root, &mut open, &mut closed, &limits, &mut VirtualClock::default());
        let Some(mid) = r.state else { return Ok(()) };
        let before: Vec<SearchState> = open.states().cloned().collect();
        let base = mid.clock();
        let new_root = reroot(&mid, &mut open, &mut closed, SearchMode::NG);
        prop_assert!(closed.is_empty());
        prop_assert_eq!(new_root.clock(), Time::ZERO);
        let expected = before.iter().filter(|s| s.steps().starts_with(mid.steps())).count();
        prop_assert_eq!(open.len(), expected);
        for s in open.states() {
            let original = before.iter().find(|b| b.signature() == s.signature()).unwrap();
            prop_assert_eq!(s.clock() + base, original.clock());
            prop_assert_eq!(oracle::replay(&task, new_root.world(), s.steps()), Ok(oracle::atoms_of(s.world())));
        }
    }

    #[test]
    fn commit_points_close_every_action(seed in 0u64..500, min in 1usize..6) {
        let task = delivery(seed, 4, 2);
        let ctx = SearchContext::new(Arc::new(task.clone()), task.goal.clone());
        let plan = plan_offline(&ctx, WorldState::new(task.init.clone()), &Config::default()).unwrap();
        let n = select_commit(&plan.steps, min);
        prop_assert!(n >= min.min(plan.steps.len()));
        let (_, running) = oracle::replay(&task, &WorldState::new(task.init.clone()), &plan.steps[..n]).unwrap();
        prop_assert!(running.is_empty());
    }

    #[test]
    fn agent_executes_a_valid_plan(seed in 0u64..10_000, min_commit in 1usize..5, size in 1usize..6) {
        let task = delivery(seed, 4, 2);
        let desire = Desire { id: "goal".into(), goal: task.goal.clone(), priority: 0.0, precondition: vec![], revision_rules: vec![] };
        let config = Config { min_commit, plan_size_limit: size, ..Config::default() };
        let run = run_agent(Arc::new(task.clone()), vec![desire], vec![], &config);
        prop_assert_eq!(run.outcome, Outcome::GoalAchieved);
        let executed: Vec<SnapRef> = run.executed.iter().map(|(_, s, _)| *s).collect();
        let (atoms, running) = oracle::replay(&task, &WorldState::new(task.init.clone()), &executed).unwrap();
        prop_assert!(running.is_empty());
        prop_assert!(task.goal.literals().iter().all(|l| atoms.contains(&l.atom.0) == l.positive));
        for w in run.executed.windows(2) {
            prop_assert!(w[0].0 <= w[1].0);
        }
        prop_assert_eq!(Trace::from_jsonl(&run.trace.to_jsonl()).unwrap(), run.trace);
    }
}

#[test]
fn interfering_neighbours_are_separated() {
    let task = load_task(fixtures::DELIVERY_DOMAIN, fixtures::DELIVERY_P1).unwrap();
    let names = ["(load r1 b1 w1)", "(move r1 w1 w2)", "(move r1 w2 w3)", "(unload r1 b1 w3)"];
    let steps: Vec<SnapRef> = names
        .iter()
        .flat_map(|n| {
            let a = task.parse_action(n).unwrap();
            [SnapRef::start(a), SnapRef::end(a)]
        })
        .collect();
    let times = snap_times(&task, &steps).unwrap();
    // End(move w1 w2) adds the position that Start(move w2 w3) deletes
    assert_eq!(times[4] - times[3], EPSILON);
}
