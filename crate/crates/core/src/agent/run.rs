//! The deliberation loop.
//!
//! One cooperative, single-threaded loop owns the environment, the beliefs,
//! the committed-action board and up to two search threads. Search effort
//! advances virtual time; execution dispatches committed snaps at their
//! scheduled times in between. With a fixed seed every run is identical.

use std::collections::VecDeque;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::desire::{activate_goal, revise_goal, Desire, Revision};
use super::env::{Environment, ExecEvent, Executor, Observation};
use super::queue::{early_arrest_point, schedule_plan, PlanQueue, ScheduleAction};
use super::scenario::{EnvEvent, Scenario, ScheduledEvent};
use super::trace::{ForecastOutcome, Outcome, Status, ThreadKind, Trace, TraceEvent};
use crate::config::Config;
use crate::exec::{classify_forecast, project_committed, select_commit, simulate_plan, CommittedBoard, SimulationResult};
use crate::search::{make_clock, RoundLimits, SearchContext, SearchMessage, SearchMode, SearchThread, ThreadEnd};
use crate::state::{schedule_steps, PlanEntry, TimedPlan, WorldState};
use crate::task::{Goal, GroundedTask, SnapKind, SnapRef};
use crate::time::Time;

/// Restarts allowed per intention before the agent gives up.
const MAX_REPLANS: usize = 20;

#[derive(Debug, Clone)]
pub struct AgentRun {
    pub trace: Trace,
    pub outcome: Outcome,
    pub truth: WorldState,
    pub beliefs: WorldState,
    /// Every executed snap with its dispatch time and result.
    pub executed: Vec<(Time, SnapRef, Status)>,
    pub achieved: Vec<String>,
    pub end_time: Time,
}

struct Intention {
    desire: Desire,
    goal: Goal,
    replans: usize,
}

struct Agent<'a> {
    task: Arc<GroundedTask>,
    config: &'a Config,
    now: Time,
    trace: Trace,
    rng: ChaCha8Rng,
    env: Environment,
    beliefs: WorldState,
    desires: Vec<Desire>,
    intention: Option<Intention>,
    board: CommittedBoard,
    committed: Vec<SnapRef>,
    executed: usize,
    exec: Executor,
    queue: PlanQueue,
    nonimp: Option<SearchThread>,
    imp: Option<SearchThread>,
    events: VecDeque<ScheduledEvent>,
    log: Vec<(Time, SnapRef, Status)>,
    achieved: Vec<String>,
    outcome: Option<Outcome>,
}

pub fn run_scenario(s: &Scenario) -> AgentRun {
    run_agent(Arc::new(s.task.clone()), s.desires.clone(), s.events.clone(), &s.config)
}

pub fn run_agent(task: Arc<GroundedTask>, desires: Vec<Desire>, events: Vec<ScheduledEvent>, config: &Config) -> AgentRun {
    let init = WorldState::new(task.init.clone());
    let mut events = events;
    events.sort_by_key(|e| e.at);
    let mut a = Agent {
        task,
        config,
        now: Time::ZERO,
        trace: Trace::default(),
        rng: ChaCha8Rng::seed_from_u64(config.seed),
        env: Environment::new(init.clone()),
        beliefs: init.clone(),
        desires,
        intention: None,
        board: CommittedBoard::new(init),
        committed: Vec::new(),
        executed: 0,
        exec: Executor::default(),
        queue: PlanQueue::default(),
        nonimp: None,
        imp: None,
        events: events.into(),
        log: Vec::new(),
        achieved: Vec::new(),
        outcome: None,
    };
    let outcome = a.run();
    a.trace.push(a.now, TraceEvent::Outcome { outcome });
    AgentRun {
        trace: a.trace,
        outcome,
        truth: a.env.truth,
        beliefs: a.beliefs,
        executed: a.log,
        achieved: a.achieved,
        end_time: a.now,
    }
}

impl Agent<'_> {
    fn run(&mut self) -> Outcome {
        loop {
            if self.now > self.config.time_limit {
                return Outcome::TimeLimit;
            }
            self.process_due();
            if let Some(o) = self.outcome {
                return o;
            }
            self.manage_intention();
            self.check_achieved();
            if self.commit_if_idle() {
                self.process_due();
            }
            self.check_achieved();
            if let Some(o) = self.outcome {
                return o;
            }
            let ran = self.step_threads();
            if let Some(o) = self.outcome {
                return o;
            }
            if ran {
                continue;
            }
            let next = [self.events.front().map(|e| e.at), self.exec.next_due()].into_iter().flatten().min();
            match next {
                Some(t) => self.now = self.now.max(t),
                None => {
                    if self.intention.is_none() {
                        if activate_goal(&self.desires, &self.beliefs).is_some() {
                            continue;
                        }
                        return if self.desires.is_empty() && !self.achieved.is_empty() {
                            Outcome::GoalAchieved
                        } else {
                            Outcome::NoActivatableDesire
                        };
                    }
                    if !self.queue.is_empty() && self.exec.is_idle() {
                        continue;
                    }
                    // nothing left to run for an active intention
                    if !self.replan("stalled") {
                        return Outcome::Failed;
                    }
                }
            }
        }
    }

    fn name(&self, s: SnapRef) -> String {
        self.task.action(s.action).name()
    }

    fn goal_names(&self, g: &Goal) -> Vec<String> {
        g.literals().iter().map(|l| self.task.literal_name(*l)).collect()
    }

    fn limits(&self) -> RoundLimits {
        RoundLimits::from_config(self.config)
    }

    // ---- environment and beliefs ----

    fn process_due(&mut self) {
        loop {
            let ev = self.events.front().map(|e| e.at).filter(|t| *t <= self.now);
            let ex = self.exec.next_due().filter(|t| *t <= self.now);
            match (ev, ex) {
                (Some(a), b) if b.is_none_or(|b| a <= b) => {
                    let e = self.events.pop_front().expect("peeked");
                    self.handle_event(e);
                }
                (_, Some(_)) => {
                    let e = self.exec.tick_one(&self.task, &mut self.env, self.now).expect("due");
                    self.handle_exec(e);
                }
                _ => break,
            }
            if self.outcome.is_some() {
                break;
            }
        }
    }

    fn handle_event(&mut self, e: ScheduledEvent) {
        match e.event {
            EnvEvent::Exogenous { add, del } => {
                self.env.apply_exogenous(&add, &del);
                self.trace.push(
                    e.at,
                    TraceEvent::Exogenous {
                        add: add.iter().map(|l| self.task.literal_name(*l)).collect(),
                        del: del.iter().map(|l| self.task.literal_name(*l)).collect(),
                    },
                );
                self.beliefs = super::env::monitor(&self.task, &self.beliefs, &[Observation::Exogenous { add, del }]);
                self.after_belief_update(e.at);
            }
            EnvEvent::InjectFailure { action, snap } => self.env.inject_failure(action, snap),
            EnvEvent::PushDesire(d) => self.push_desire(e.at, d),
        }
    }

    fn handle_exec(&mut self, e: ExecEvent) {
        let action = self.name(e.snap);
        self.trace.push(e.at, TraceEvent::Dispatch { action: action.clone(), snap: e.snap.kind });
        self.trace.push(
            e.at,
            TraceEvent::ActionStatus {
                action,
                snap: e.snap.kind,
                status: e.status,
                literal: e.error.and_then(|x| x.literal()).map(|l| self.task.literal_name(l)),
            },
        );
        self.log.push((e.at, e.snap, e.status));
        self.beliefs = super::env::monitor(&self.task, &self.beliefs, &[Observation::Action(e.clone())]);
        if e.status == Status::Fail {
            // only ends of actions still running stay committed
            let running = self.beliefs.running.clone();
            let keep = move |s: SnapRef| s.kind == SnapKind::End && running.contains(&s.action);
            self.exec.retain(&keep);
            self.committed = self.exec.scheduled().map(|(_, s)| *s).collect();
            self.executed = 0;
            let proj = project_committed(&self.task, &self.beliefs, &self.committed).unwrap_or_else(|_| self.beliefs.clone());
            self.board.reinit(self.committed.clone(), proj);
            if !self.replan("execution_failure") {
                self.outcome = Some(Outcome::Failed);
            }
            return;
        }
        self.executed += 1;
        self.after_belief_update(e.at);
    }

    fn refresh_board(&mut self) {
        if let Ok(p) = project_committed(&self.task, &self.beliefs, &self.committed[self.executed..]) {
            self.board.refresh(p);
        }
    }

    fn search_active(&self) -> bool {
        self.nonimp.as_ref().is_some_and(|t| t.finished().is_none())
    }

    /// Re-simulates committed and pending snaps from the new beliefs.
    fn after_belief_update(&mut self, at: Time) {
        self.refresh_board();
        let Some(int) = &self.intention else {
            return;
        };
        let unexecuted = &self.committed[self.executed..];
        let mut steps = unexecuted.to_vec();
        steps.extend(self.queue.pending_steps());
        let res = simulate_plan(&self.task, &self.beliefs, &steps, &int.goal);
        let version = self.board.snapshot().version;
        let (outcome, index, class) = match &res {
            SimulationResult::Success(_) => (ForecastOutcome::Success, None, None),
            SimulationResult::GoalNotReached(_) => (ForecastOutcome::GoalNotReached, None, None),
            SimulationResult::Failure { index, .. } => {
                (ForecastOutcome::Failure, Some(*index), Some(classify_forecast(*index, unexecuted.len())))
            }
        };
        self.trace.push(
            at,
            TraceEvent::Forecast {
                version,
                outcome,
                failure_index: index,
                class,
                literal: res.failing_literal().map(|l| self.task.literal_name(l)),
            },
        );
        match (outcome, class) {
            (ForecastOutcome::Failure, Some(crate::exec::ForecastClass::AfterCommitted)) => {
                if !self.replan("forecast") {
                    self.outcome = Some(Outcome::Failed);
                }
            }
            (ForecastOutcome::GoalNotReached, _) if !self.search_active() && self.imp.is_none() => {
                if !self.replan("goal_not_reached") {
                    self.outcome = Some(Outcome::Failed);
                }
            }
            _ => {}
        }
    }

    // ---- intentions ----

    fn manage_intention(&mut self) {
        if self.intention.is_some() {
            return;
        }
        let Some(i) = activate_goal(&self.desires, &self.beliefs) else {
            return;
        };
        let d = self.desires.remove(i);
        self.trace.push(
            self.now,
            TraceEvent::DesireActivated { desire: d.id.clone(), goal: self.goal_names(&d.goal), priority: d.priority },
        );
        self.intention = Some(Intention { goal: d.goal.clone(), desire: d, replans: 0 });
        self.start_search("activation");
    }

    fn check_achieved(&mut self) {
        let Some(int) = &self.intention else {
            return;
        };
        let done = self.exec.is_idle()
            && self.beliefs.running.is_empty()
            && int.goal.satisfied_by(&self.beliefs.fluents)
            && int.goal.satisfied_by(&self.env.truth.fluents);
        if done {
            let int = self.intention.take().expect("checked");
            self.trace.push(
                self.now,
                TraceEvent::GoalAchieved { desire: int.desire.id.clone(), goal: self.goal_names(&int.goal) },
            );
            self.achieved.push(int.desire.id);
            self.nonimp = None;
            self.imp = None;
            let snap = self.board.snapshot();
            self.queue.reset(&snap);
        }
    }

    fn push_desire(&mut self, at: Time, d: Desire) {
        self.trace.push(at, TraceEvent::DesirePushed { desire: d.id.clone() });
        let Some(int) = &self.intention else {
            self.desires.push(d);
            return;
        };
        let mut rules = d.revision_rules.clone();
        rules.extend(int.desire.revision_rules.iter().cloned());
        match revise_goal(&self.task, &int.goal, &d.goal, &rules) {
            Revision::Revised { goal, rule } => {
                self.trace.push(
                    at,
                    TraceEvent::GoalRevision {
                        semantics: "conjunction".into(),
                        rule,
                        incoming: d.id.clone(),
                        goal: self.goal_names(&goal),
                    },
                );
                if let Some(int) = &mut self.intention {
                    int.goal = goal;
                }
                self.start_search("goal_revision");
            }
            Revision::Contradictory { rule } => {
                self.trace.push(
                    at,
                    TraceEvent::GoalRevisionRejected { incoming: d.id.clone(), reason: format!("contradictory under rule {rule}") },
                );
                self.desires.push(d);
            }
            Revision::NoRule => {
                let preempts = d.precedence(&int.desire).is_lt() && self.beliefs.fluents.holds_all(&d.precondition);
                if preempts {
                    self.early_arrest("preemption", &self.queue.pending_steps());
                    let int = self.intention.take().expect("checked");
                    self.trace.push(at, TraceEvent::Preempted { desire: int.desire.id.clone(), by: d.id.clone() });
                    self.nonimp = None;
                    self.imp = None;
                    let snap = self.board.snapshot();
                    self.queue.reset(&snap);
                    self.desires.push(int.desire);
                } else {
                    self.trace.push(
                        at,
                        TraceEvent::GoalRevisionRejected { incoming: d.id.clone(), reason: "no matching rule".into() },
                    );
                }
                self.desires.push(d);
            }
        }
    }

    // ---- search threads ----

    fn context(&self) -> Option<SearchContext> {
        self.intention.as_ref().map(|i| SearchContext::new(self.task.clone(), i.goal.clone()))
    }

    fn start_search(&mut self, reason: &str) {
        let Some(ctx) = self.context() else {
            return;
        };
        self.imp = None;
        let snap = self.board.snapshot();
        self.queue.reset(&snap);
        self.nonimp = Some(SearchThread::new(ctx, &snap, self.limits(), make_clock(self.config.deterministic)));
        self.trace.push(
            self.now,
            TraceEvent::SearchStarted {
                thread: ThreadKind::NonImproving,
                mode: SearchMode::G,
                reason: reason.into(),
                committed: snap.actions.len(),
                epoch: snap.epoch,
            },
        );
    }

    /// Restarts the search from the committed projection. False once the
    /// intention has used up its restarts.
    fn replan(&mut self, reason: &str) -> bool {
        let Some(int) = &mut self.intention else {
            return true;
        };
        int.replans += 1;
        if int.replans > MAX_REPLANS {
            return false;
        }
        self.start_search(reason);
        true
    }

    fn spawn_improving(&mut self) {
        let Some(ctx) = self.context() else {
            return;
        };
        let pending = self.queue.pending_steps();
        if pending.is_empty() {
            return;
        }
        let Ok(incumbent) = schedule_steps(&self.task, &pending) else {
            return;
        };
        let snap = self.board.snapshot();
        if snap.state != self.queue.pending[0].root {
            return;
        }
        self.imp = Some(SearchThread::improving(
            ctx,
            &snap,
            self.limits(),
            make_clock(self.config.deterministic),
            incumbent.makespan(),
        ));
        self.trace.push(
            self.now,
            TraceEvent::SearchStarted {
                thread: ThreadKind::Improving,
                mode: SearchMode::NG,
                reason: "improve".into(),
                committed: snap.actions.len(),
                epoch: snap.epoch,
            },
        );
    }

    fn step_threads(&mut self) -> bool {
        let mut order = Vec::new();
        if self.search_active() {
            order.push(ThreadKind::NonImproving);
        }
        if self.imp.as_ref().is_some_and(|t| t.finished().is_none()) {
            order.push(ThreadKind::Improving);
        }
        if order.len() > 1 {
            order.shuffle(&mut self.rng);
        }
        let ran = !order.is_empty();
        for kind in order {
            let snap = self.board.snapshot();
            let thread = match kind {
                ThreadKind::NonImproving => self.nonimp.as_mut(),
                ThreadKind::Improving => self.imp.as_mut(),
            };
            let Some(thread) = thread else {
                continue;
            };
            let st = thread.step(&snap);
            if let Some(r) = &st.report {
                self.now += Time::from_millis(r.elapsed_ms as i64);
                self.trace.push(
                    self.now,
                    TraceEvent::Round {
                        thread: kind,
                        round: r.round,
                        mode: r.mode,
                        exit: r.exit,
                        expansions: r.expansions,
                        best_hval: r.best_hval.is_finite().then_some(r.best_hval),
                        plan_size: r.plan_size,
                        elapsed_ms: r.elapsed_ms,
                        message: st.message.as_ref().map(|m| m.kind().to_string()),
                    },
                );
            }
            if let Some((from, to)) = st.mode_change {
                self.trace.push(self.now, TraceEvent::ModeChange { thread: kind, from, to });
            }
            let mut replaced = false;
            if let Some(msg) = st.message {
                replaced = self.handle_message(kind, msg);
            }
            if self.outcome.is_some() {
                return true;
            }
            match st.finished {
                Some(ThreadEnd::GoalReached) => {
                    self.trace.push(self.now, TraceEvent::GoalReached { thread: kind });
                    if self.imp.is_none() {
                        self.spawn_improving();
                    }
                }
                Some(ThreadEnd::Improved) => {
                    self.trace.push(self.now, TraceEvent::GoalReached { thread: kind });
                    self.imp = None;
                    if replaced {
                        self.spawn_improving();
                    }
                }
                Some(ThreadEnd::NotImproved) => self.imp = None,
                Some(ThreadEnd::Outdated) => {
                    self.trace.push(self.now, TraceEvent::SearchOutdated { thread: kind });
                    match kind {
                        ThreadKind::Improving => self.imp = None,
                        ThreadKind::NonImproving => {
                            if !self.replan("outdated") {
                                self.outcome = Some(Outcome::Failed);
                            }
                        }
                    }
                }
                Some(ThreadEnd::Unsat) | None => {}
            }
        }
        ran
    }

    /// Returns true when the message replaced the queue.
    fn handle_message(&mut self, kind: ThreadKind, msg: SearchMessage) -> bool {
        if msg == SearchMessage::SearchFailed {
            self.trace.push(self.now, TraceEvent::SearchFailed { thread: kind });
            if kind == ThreadKind::NonImproving {
                self.outcome = Some(Outcome::SearchFailed);
            }
            return false;
        }
        let old_pending = self.queue.pending_steps();
        let snap = self.board.snapshot();
        let action = schedule_plan(&self.task, &mut self.queue, &msg, &snap);
        let snaps: Vec<String> = match &msg {
            SearchMessage::PartialPlan { steps, .. } | SearchMessage::ImprovedPlan { steps, .. } => {
                steps.iter().map(|s| self.task.snap_name(*s)).collect()
            }
            SearchMessage::SearchFailed => Vec::new(),
        };
        self.trace.push(
            self.now,
            TraceEvent::Schedule { action: action.as_str().into(), message: msg.kind().into(), steps: snaps.len(), snaps },
        );
        if action == ScheduleAction::Replace {
            self.early_arrest(msg.kind(), &old_pending);
            return true;
        }
        false
    }

    /// Records which actions must still finish and which are cancelled when
    /// the current plan is cut after its committed part.
    fn early_arrest(&mut self, reason: &str, cancelled_steps: &[SnapRef]) {
        let mut entries: Vec<PlanEntry> = Vec::new();
        // running actions, with their dispatch times
        for a in &self.beliefs.running {
            let t = self
                .log
                .iter()
                .rev()
                .find(|(_, s, st)| s.action == *a && s.kind == SnapKind::Start && *st == Status::Running)
                .map_or(self.now, |(t, _, _)| *t);
            entries.push(PlanEntry { time: t, action: *a, duration: self.task.action(*a).duration });
        }
        let mut last = self.now;
        for (t, s) in self.exec.scheduled() {
            last = last.max(*t);
            if s.kind == SnapKind::Start {
                entries.push(PlanEntry { time: *t, action: s.action, duration: self.task.action(s.action).duration });
            }
        }
        let committed_len = entries.len();
        if let Ok(p) = schedule_steps(&self.task, cancelled_steps) {
            entries.extend(p.entries.into_iter().map(|e| PlanEntry { time: e.time + last, ..e }));
        }
        let plan = TimedPlan { entries };
        let anchor = plan.entries[..committed_len]
            .iter()
            .enumerate()
            .max_by_key(|(i, e)| (e.time + e.duration, *i))
            .map(|(_, e)| e.action);
        let must = anchor.map(|a| early_arrest_point(&plan, a)).unwrap_or_default();
        let fmt = |e: &PlanEntry| format!("{}@{}", self.task.action(e.action).name(), e.time);
        let must_finish = plan.entries.iter().enumerate().filter(|(i, _)| must.contains(i)).map(|(_, e)| fmt(e)).collect();
        let cancelled = plan.entries.iter().enumerate().filter(|(i, _)| !must.contains(i)).map(|(_, e)| fmt(e)).collect();
        self.trace.push(
            self.now,
            TraceEvent::EarlyArrest {
                reason: reason.into(),
                anchor: anchor.map(|a| self.task.action(a).name()),
                must_finish,
                cancelled,
            },
        );
    }

    // ---- commitment ----

    fn commit_if_idle(&mut self) -> bool {
        if self.intention.is_none() || !self.exec.is_idle() || self.queue.is_empty() {
            return false;
        }
        let flat = self.queue.pending_steps();
        let n = select_commit(&flat, self.config.min_commit);
        let snaps = self.queue.take(&self.task, n);
        if snaps.is_empty() {
            return false;
        }
        self.committed.extend_from_slice(&snaps);
        let proj = project_committed(&self.task, &self.beliefs, &self.committed[self.executed..])
            .unwrap_or_else(|_| self.board.snapshot().state);
        self.board.extend(&snaps, proj);
        if self.exec.schedule(&self.task, &snaps, self.now).is_err() {
            self.outcome = Some(Outcome::Failed);
            return false;
        }
        let version = self.board.snapshot().version;
        self.trace.push(
            self.now,
            TraceEvent::Commit {
                snaps: snaps.iter().map(|s| format!("{} {}", s.kind, self.name(*s))).collect(),
                committed: self.committed.len(),
                version,
            },
        );
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::scenario::ScenarioSpec;
    use crate::fixtures;

    fn scenario(json: &str, problem: &str) -> Scenario {
        let spec: ScenarioSpec = serde_json::from_str(json).unwrap();
        Scenario::from_texts(&spec, fixtures::DELIVERY_DOMAIN, problem).unwrap()
    }

    fn kinds(run: &AgentRun) -> Vec<String> {
        run.trace
            .iter()
            .map(|r| serde_json::to_value(&r.event).unwrap()["kind"].as_str().unwrap().to_string())
            .collect()
    }

    #[test]
    fn plain_delivery() {
        let s = scenario(r#"{"domain_path": "d", "problem_path": "p"}"#, fixtures::DELIVERY_P1);
        let run = run_scenario(&s);
        assert_eq!(run.outcome, Outcome::GoalAchieved);
        assert_eq!(run.achieved, vec!["goal".to_string()]);
        assert_eq!(run.truth, run.beliefs);
        assert_eq!(run.executed.len(), 8);
    }

    #[test]
    fn unmet_precondition_means_no_desire() {
        let s = scenario(
            r#"{"domain_path": "d", "problem_path": "p",
                "desires": [{"goal": ["(box-at b1 w3)"], "precondition": ["(at r1 w3)"]}]}"#,
            fixtures::DELIVERY_P1,
        );
        let run = run_scenario(&s);
        assert_eq!(run.outcome, Outcome::NoActivatableDesire);
        assert!(run.executed.is_empty());
    }

    #[test]
    fn injected_failure_recovers() {
        let s = scenario(
            r#"{"domain_path": "d", "problem_path": "p",
                "events": [{"at": 0, "kind": "inject_failure", "payload": {"action": "(move r1 w1 w2)"}}]}"#,
            fixtures::DELIVERY_P1,
        );
        let run = run_scenario(&s);
        assert_eq!(run.outcome, Outcome::GoalAchieved);
        assert!(run.executed.iter().any(|(_, _, st)| *st == Status::Fail));
        assert!(kinds(&run).iter().any(|k| k == "search_started"));
        let reasons: Vec<_> = run
            .trace
            .iter()
            .filter_map(|r| match &r.event {
                TraceEvent::SearchStarted { reason, .. } => Some(reason.as_str()),
                _ => None,
            })
            .collect();
        assert!(reasons.contains(&"execution_failure"));
    }

    #[test]
    fn higher_priority_desire_preempts() {
        let s = scenario(
            r#"{"domain_path": "d", "problem_path": "p",
                "desires": [{"id": "low", "goal": ["(box-at b1 w3)"], "priority": 1}],
                "events": [{"at": 1.5, "kind": "push_desire",
                            "payload": {"id": "high", "goal": ["(box-at b2 w1)"], "priority": 5}}]}"#,
            fixtures::DELIVERY_TWO_BOXES,
        );
        let run = run_scenario(&s);
        assert_eq!(run.outcome, Outcome::GoalAchieved);
        assert_eq!(run.achieved, vec!["high".to_string(), "low".to_string()]);
        let k = kinds(&run);
        let arrest = k.iter().position(|x| x == "early_arrest").unwrap();
        let pre = k.iter().position(|x| x == "preempted").unwrap();
        assert!(arrest < pre);
        let b1 = s.task.parse_literal("(box-at b1 w3)").unwrap();
        let b2 = s.task.parse_literal("(box-at b2 w1)").unwrap();
        assert!(run.truth.fluents.holds(b1) && run.truth.fluents.holds(b2));
    }

    #[test]
    fn contradictory_revision_is_rejected() {
        let s = scenario(
            r#"{"domain_path": "d", "problem_path": "p",
                "desires": [{"goal": ["(box-at b1 w3)"],
                             "revision_rules": [{"id": "any", "active": ["(box-at ?b ?w)"], "incoming": []}]}],
                "events": [{"at": 0.5, "kind": "push_desire", "payload": {"id": "undo", "goal": ["(not (box-at b1 w3))"]}}]}"#,
            fixtures::DELIVERY_P1,
        );
        let run = run_scenario(&s);
        assert!(kinds(&run).contains(&"goal_revision_rejected".to_string()));
        assert_eq!(run.achieved.first().map(String::as_str), Some("d0"));
    }

    #[test]
    fn identical_runs_give_identical_traces() {
        let json = r#"{"domain_path": "d", "problem_path": "p",
            "events": [{"at": 0.5, "kind": "exogenous", "payload": {"del": ["(connected w2 w3)"]}}],
            "config": {"seed": 3}}"#;
        let s = scenario(json, fixtures::DELIVERY_CLOSURE);
        assert_eq!(run_scenario(&s).trace.to_jsonl(), run_scenario(&s).trace.to_jsonl());
    }
}
