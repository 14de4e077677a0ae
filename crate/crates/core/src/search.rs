//! Round-based continual search.
//!
//! [`search_round`] runs a bounded best-first search and returns the most
//! promising committable state found. [`SearchThread`] chains rounds: each
//! returned state's plan is emitted as a partial plan and the search is
//! re-rooted at that state, so execution can start before a full plan
//! exists. A greedy mode runs first and falls back to a complete mode when
//! it runs out of states; failure of the complete mode proves the goal
//! unreachable.

use std::cmp::Ordering;
use std::collections::hash_map::Entry as Slot;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::exec::{BoardSnapshot, CommittedBoard};
use crate::heuristic;
use crate::state::{schedule_steps, SearchState, TimedPlan, WorldState};
use crate::task::{ActionId, Fluents, Goal, GroundedTask, SnapRef};
use crate::time::Time;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SearchMode {
    G,
    NG,
    #[serde(rename = "UNSAT")]
    Unsat,
}

impl SearchMode {
    pub fn fallback(self) -> SearchMode {
        match self {
            SearchMode::G => SearchMode::NG,
            _ => SearchMode::Unsat,
        }
    }
}

/// What a search is solving.
#[derive(Debug, Clone)]
pub struct SearchContext {
    pub task: Arc<GroundedTask>,
    pub goal: Goal,
    /// Only plans with a makespan strictly below this count as solutions.
    pub bound: Option<Time>,
}

impl SearchContext {
    pub fn new(task: Arc<GroundedTask>, goal: Goal) -> Self {
        SearchContext { task, goal, bound: None }
    }

    pub fn with_bound(self, bound: Time) -> Self {
        SearchContext { bound: Some(bound), ..self }
    }

    pub fn hval(&self, s: &SearchState) -> f64 {
        heuristic::hval(s, &self.task, &self.goal)
    }

    /// Goal literals hold, nothing runs and the plan can be scheduled.
    pub fn goal_reached(&self, s: &SearchState) -> bool {
        s.goal_reached(&self.goal)
            && match schedule_steps(&self.task, s.steps()) {
                Ok(p) => self.bound.is_none_or(|b| p.makespan() < b),
                Err(_) => false,
            }
    }
}

pub type Signature = (Fluents, Vec<ActionId>);

struct Entry {
    hval: f64,
    len: usize,
    makespan: Time,
    seq: u64,
    state: SearchState,
}

impl Entry {
    fn cmp_key(&self, other: &Self) -> Ordering {
        self.hval
            .total_cmp(&other.hval)
            .then(self.len.cmp(&other.len))
            .then(self.makespan.cmp(&other.makespan))
            .then(self.seq.cmp(&other.seq))
    }
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp_key(other) == Ordering::Equal
    }
}
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Entry {
    // reversed: the heap pops the smallest key
    fn cmp(&self, other: &Self) -> Ordering {
        other.cmp_key(self)
    }
}

/// Priority queue of search states.
///
/// Greedy mode orders by (hval, insertion); the complete mode by (hval, plan
/// length, projected makespan, insertion). A signature is held at most once.
#[derive(Default)]
pub struct OpenList {
    heap: BinaryHeap<Entry>,
    members: HashSet<Signature>,
    seq: u64,
    timed: bool,
}

impl OpenList {
    pub fn new() -> Self {
        Self::default()
    }

    /// A list that keeps same-signature states reached at different times;
    /// the matching closed list decides which of them are worth expanding.
    pub fn timed() -> Self {
        OpenList { timed: true, ..Self::default() }
    }

    /// Returns false if a state with the same signature is already queued.
    pub fn push(&mut self, mode: SearchMode, state: SearchState, hval: f64) -> bool {
        if !self.timed && !self.members.insert(state.signature()) {
            return false;
        }
        let (len, makespan) = match mode {
            SearchMode::NG => (state.steps().len(), state.projected_makespan()),
            _ => (0, Time::ZERO),
        };
        self.seq += 1;
        self.heap.push(Entry { hval, len, makespan, seq: self.seq, state });
        true
    }

    pub fn pop(&mut self) -> Option<SearchState> {
        let e = self.heap.pop()?;
        self.members.remove(&e.state.signature());
        Some(e.state)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn clear(&mut self) {
        self.heap.clear();
        self.members.clear();
    }

    pub fn states(&self) -> impl Iterator<Item = &SearchState> {
        self.heap.iter().map(|e| &e.state)
    }
}

type TimedKey = (Signature, Vec<(ActionId, Time)>);

#[derive(Debug, Default, Clone)]
pub struct ClosedList {
    seen: HashSet<Signature>,
    timed: Option<HashMap<TimedKey, Time>>,
}

impl ClosedList {
    pub fn new() -> Self {
        Self::default()
    }

    /// Remembers the earliest clock per signature and remaining durations,
    /// and lets a state through again when it is reached earlier.
    pub fn timed() -> Self {
        ClosedList { seen: HashSet::new(), timed: Some(HashMap::new()) }
    }

    pub fn contains(&self, s: &SearchState) -> bool {
        match &self.timed {
            Some(m) => m.contains_key(&(s.signature(), s.remaining())),
            None => self.seen.contains(&s.signature()),
        }
    }

    pub fn len(&self) -> usize {
        self.timed.as_ref().map_or(self.seen.len(), HashMap::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn clear(&mut self) {
        self.seen.clear();
        if let Some(m) = &mut self.timed {
            m.clear();
        }
    }

    fn record(&mut self, s: &SearchState) -> bool {
        match &mut self.timed {
            Some(m) => match m.entry((s.signature(), s.remaining())) {
                Slot::Occupied(mut e) if s.clock() < *e.get() => {
                    e.insert(s.clock());
                    true
                }
                Slot::Occupied(_) => false,
                Slot::Vacant(e) => {
                    e.insert(s.clock());
                    true
                }
            },
            None => self.seen.insert(s.signature()),
        }
    }
}

/// True the first time a signature is seen, which also records it.
pub fn need_to_visit(succ: &SearchState, closed: &mut ClosedList) -> bool {
    closed.record(succ)
}

/// Queues `succ` unless its goal is unreachable even in the relaxation, or
/// it already runs past the makespan bound.
pub fn search_core_logic(ctx: &SearchContext, mode: SearchMode, succ: SearchState, open: &mut OpenList) {
    if ctx.bound.is_some_and(|b| succ.projected_makespan() >= b) {
        return;
    }
    let h = ctx.hval(&succ);
    if h.is_finite() {
        open.push(mode, succ, h);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundLimits {
    pub interval_ms: u64,
    pub plan_size_limit: usize,
}

impl RoundLimits {
    pub fn from_config(c: &Config) -> Self {
        RoundLimits { interval_ms: c.interval_ms, plan_size_limit: c.plan_size_limit }
    }
}

/// Measures the effort spent in a round.
pub trait RoundClock: Send {
    fn reset(&mut self);
    fn on_expansion(&mut self);
    fn elapsed_ms(&self) -> u64;
}

/// Each expansion costs one millisecond.
#[derive(Debug, Default)]
pub struct VirtualClock {
    expansions: u64,
}

impl RoundClock for VirtualClock {
    fn reset(&mut self) {
        self.expansions = 0;
    }
    fn on_expansion(&mut self) {
        self.expansions += 1;
    }
    fn elapsed_ms(&self) -> u64 {
        self.expansions
    }
}

#[derive(Debug)]
pub struct WallClock {
    start: Instant,
}

impl Default for WallClock {
    fn default() -> Self {
        WallClock { start: Instant::now() }
    }
}

impl RoundClock for WallClock {
    fn reset(&mut self) {
        self.start = Instant::now();
    }
    fn on_expansion(&mut self) {}
    fn elapsed_ms(&self) -> u64 {
        self.start.elapsed().as_millis() as u64
    }
}

pub fn make_clock(deterministic: bool) -> Box<dyn RoundClock> {
    if deterministic {
        Box::new(VirtualClock::default())
    } else {
        Box::new(WallClock::default())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundExit {
    Goal,
    Interval,
    PlanSize,
    Exhausted,
}

#[derive(Debug, Clone)]
pub struct RoundOutcome {
    pub state: Option<SearchState>,
    pub exit: RoundExit,
    pub expansions: u64,
    pub elapsed_ms: u64,
    pub best_hval: f64,
}

fn candidate_snaps(ctx: &SearchContext, mode: SearchMode, s: &SearchState) -> Vec<SnapRef> {
    let n = ctx.task.snaps().len();
    match mode {
        SearchMode::G => {
            let eval = s.evaluate_with(|s| heuristic::evaluate(s, &ctx.task, &ctx.goal));
            let mut snaps: Vec<SnapRef> = eval.helpful.to_vec();
            snaps.extend(s.running().iter().map(|a| SnapRef::end(*a)));
            snaps.sort();
            snaps.dedup();
            snaps
        }
        _ => (0..n).map(SnapRef::from_index).collect(),
    }
}

/// One bounded search round from `start`.
///
/// Returns the first goal state popped, or the best committable state seen
/// once the time budget or the plan size bound is hit, or `None` when the
/// open list runs empty.
pub fn search_round(
    ctx: &SearchContext,
    mode: SearchMode,
    start: &SearchState,
    open: &mut OpenList,
    closed: &mut ClosedList,
    limits: &RoundLimits,
    clock: &mut dyn RoundClock,
) -> RoundOutcome {
    clock.reset();
    let mut best = start.clone();
    let mut best_h = ctx.hval(start);
    let start_h = best_h;
    open.push(mode, start.clone(), start_h);
    closed.record(start);
    let mut expansions = 0;
    let out = |state, exit, expansions, clock: &dyn RoundClock, h| RoundOutcome {
        state,
        exit,
        expansions,
        elapsed_ms: clock.elapsed_ms(),
        best_hval: h,
    };
    while let Some(s) = open.pop() {
        let h = ctx.hval(&s);
        if s.no_run_actions() && h < best_h && schedule_steps(&ctx.task, s.steps()).is_ok() {
            best = s.clone();
            best_h = h;
        }
        if ctx.goal_reached(&s) {
            return out(Some(s), RoundExit::Goal, expansions, clock, 0.0);
        }
        if clock.elapsed_ms() >= limits.interval_ms {
            return out(Some(best), RoundExit::Interval, expansions, clock, best_h);
        }
        if best.steps().len() >= limits.plan_size_limit {
            return out(Some(best), RoundExit::PlanSize, expansions, clock, best_h);
        }
        expansions += 1;
        clock.on_expansion();
        for snap in candidate_snaps(ctx, mode, &s) {
            if let Ok(succ) = s.apply(&ctx.task, snap) {
                if need_to_visit(&succ, closed) {
                    search_core_logic(ctx, mode, succ, open);
                }
            }
        }
    }
    out(None, RoundExit::Exhausted, expansions, clock, best_h)
}

/// Makes `new_state` the root: clears `closed`, keeps the open states that
/// extend its plan and strips that plan from them.
pub fn reroot(new_state: &SearchState, open: &mut OpenList, closed: &mut ClosedList, mode: SearchMode) -> SearchState {
    closed.clear();
    let prefix = new_state.steps();
    let base = new_state.clock();
    let mut kept = Vec::new();
    while let Some(e) = open.heap.pop() {
        if e.state.steps().starts_with(prefix) {
            kept.push((e.hval, e.seq, e.state.truncate_prefix(prefix.len(), base)));
        }
    }
    open.clear();
    kept.sort_by_key(|(_, seq, _)| *seq);
    for (h, _, s) in kept {
        open.push(mode, s, h);
    }
    new_state.truncate_prefix(prefix.len(), base)
}

/// Whether a search rooted after `s_prefix` no longer matches `commit_p`.
/// Commitments drawn from the search's own emitted plans keep it current.
pub fn outdated(s_prefix: &[SnapRef], commit_p: &[SnapRef], emitted: &[Vec<SnapRef>]) -> bool {
    let Some(rest) = commit_p.strip_prefix(s_prefix) else {
        return true;
    };
    let mut it = emitted.iter().flatten();
    !rest.iter().all(|s| it.next() == Some(s))
}

/// Strict improvement of the concatenated plans over the incumbent makespan.
pub fn improved_solution(task: &GroundedTask, plans: &[Vec<SnapRef>], incumbent: Time) -> bool {
    let steps: Vec<SnapRef> = plans.iter().flatten().copied().collect();
    match schedule_steps(task, &steps) {
        Ok(p) => p.makespan() < incumbent,
        Err(_) => false,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SearchMessage {
    /// A plan fragment continuing from `root`, for a search that started
    /// after the commitments `prefix`.
    PartialPlan { steps: Vec<SnapRef>, prefix: Arc<Vec<SnapRef>>, root: WorldState, reaches_goal: bool },
    ImprovedPlan { steps: Vec<SnapRef>, prefix: Arc<Vec<SnapRef>>, root: WorldState, makespan: Time },
    SearchFailed,
}

impl SearchMessage {
    pub fn kind(&self) -> &'static str {
        match self {
            SearchMessage::PartialPlan { .. } => "partial_plan",
            SearchMessage::ImprovedPlan { .. } => "improved_plan",
            SearchMessage::SearchFailed => "search_failed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThreadEnd {
    GoalReached,
    Unsat,
    Outdated,
    Improved,
    NotImproved,
}

#[derive(Debug, Clone)]
pub struct RoundReport {
    pub round: u64,
    pub mode: SearchMode,
    pub exit: RoundExit,
    pub expansions: u64,
    pub best_hval: f64,
    pub plan_size: usize,
    pub elapsed_ms: u64,
}

#[derive(Debug, Clone)]
pub struct ThreadStep {
    pub report: Option<RoundReport>,
    pub mode_change: Option<(SearchMode, SearchMode)>,
    pub message: Option<SearchMessage>,
    pub finished: Option<ThreadEnd>,
}

/// A search thread driven one round at a time.
pub struct SearchThread {
    ctx: SearchContext,
    improving: bool,
    mode: SearchMode,
    limits: RoundLimits,
    s_prefix: Arc<Vec<SnapRef>>,
    base: WorldState,
    curr: SearchState,
    open: OpenList,
    closed: ClosedList,
    plans: Vec<Vec<SnapRef>>,
    incumbent: Time,
    round: u64,
    clock: Box<dyn RoundClock>,
    done: Option<ThreadEnd>,
}

impl SearchThread {
    /// Non-improving thread: greedy first, emits partial plans.
    pub fn new(ctx: SearchContext, board: &BoardSnapshot, limits: RoundLimits, clock: Box<dyn RoundClock>) -> Self {
        Self::spawn(ctx, board, limits, clock, false, Time::ZERO)
    }

    /// Improving thread: complete mode, emits one plan if it beats `incumbent`.
    pub fn improving(
        ctx: SearchContext,
        board: &BoardSnapshot,
        limits: RoundLimits,
        clock: Box<dyn RoundClock>,
        incumbent: Time,
    ) -> Self {
        Self::spawn(ctx, board, limits, clock, true, incumbent)
    }

    fn spawn(
        ctx: SearchContext,
        board: &BoardSnapshot,
        limits: RoundLimits,
        clock: Box<dyn RoundClock>,
        improving: bool,
        incumbent: Time,
    ) -> Self {
        let (ctx, open, closed) = if improving {
            (ctx.with_bound(incumbent), OpenList::timed(), ClosedList::timed())
        } else {
            (ctx, OpenList::new(), ClosedList::new())
        };
        SearchThread {
            ctx,
            improving,
            mode: if improving { SearchMode::NG } else { SearchMode::G },
            limits,
            s_prefix: board.actions.clone(),
            base: board.state.clone(),
            curr: SearchState::root(board.state.clone()),
            open,
            closed,
            plans: Vec::new(),
            incumbent,
            round: 0,
            clock,
            done: None,
        }
    }

    pub fn is_improving(&self) -> bool {
        self.improving
    }

    pub fn mode(&self) -> SearchMode {
        self.mode
    }

    pub fn finished(&self) -> Option<ThreadEnd> {
        self.done
    }

    pub fn prefix(&self) -> &[SnapRef] {
        &self.s_prefix
    }

    pub fn goal(&self) -> &Goal {
        &self.ctx.goal
    }

    fn is_outdated(&self, board: &BoardSnapshot) -> bool {
        if self.improving {
            *board.actions != *self.s_prefix
        } else {
            outdated(&self.s_prefix, &board.actions, &self.plans)
        }
    }

    fn end(&mut self, how: ThreadEnd) -> Option<ThreadEnd> {
        self.done = Some(how);
        self.done
    }

    /// Runs one round against the current board.
    pub fn step(&mut self, board: &BoardSnapshot) -> ThreadStep {
        let mut out = ThreadStep { report: None, mode_change: None, message: None, finished: self.done };
        if self.done.is_some() {
            return out;
        }
        if self.is_outdated(board) {
            out.finished = self.end(ThreadEnd::Outdated);
            return out;
        }
        self.round += 1;
        let r = search_round(
            &self.ctx,
            self.mode,
            &self.curr,
            &mut self.open,
            &mut self.closed,
            &self.limits,
            self.clock.as_mut(),
        );
        out.report = Some(RoundReport {
            round: self.round,
            mode: self.mode,
            exit: r.exit,
            expansions: r.expansions,
            best_hval: r.best_hval,
            plan_size: r.state.as_ref().map_or(0, |s| s.steps().len()),
            elapsed_ms: r.elapsed_ms,
        });
        let Some(new_state) = r.state else {
            let from = self.mode;
            self.mode = from.fallback();
            out.mode_change = Some((from, self.mode));
            if self.mode == SearchMode::NG {
                self.s_prefix = board.actions.clone();
                self.base = board.state.clone();
                self.curr = SearchState::root(board.state.clone());
                self.open.clear();
                self.closed.clear();
                self.plans.clear();
            } else {
                if !self.improving {
                    out.message = Some(SearchMessage::SearchFailed);
                }
                out.finished = self.end(ThreadEnd::Unsat);
            }
            return out;
        };
        if new_state.steps().is_empty() && !self.ctx.goal_reached(&new_state) {
            // no progress this round; keep searching from the same root
            return out;
        }
        let reaches_goal = self.ctx.goal_reached(&new_state);
        let root = self.curr.world().clone();
        let steps = new_state.steps().to_vec();
        if !self.improving && !steps.is_empty() {
            out.message =
                Some(SearchMessage::PartialPlan { steps: steps.clone(), prefix: self.s_prefix.clone(), root, reaches_goal });
        }
        self.plans.push(steps);
        self.curr = reroot(&new_state, &mut self.open, &mut self.closed, self.mode);
        if reaches_goal {
            if !self.improving {
                out.finished = self.end(ThreadEnd::GoalReached);
            } else if improved_solution(&self.ctx.task, &self.plans, self.incumbent) {
                let all: Vec<SnapRef> = self.plans.iter().flatten().copied().collect();
                let makespan = schedule_steps(&self.ctx.task, &all).map(|p| p.makespan()).unwrap_or(Time::ZERO);
                out.message = Some(SearchMessage::ImprovedPlan {
                    steps: all,
                    prefix: self.s_prefix.clone(),
                    root: self.base.clone(),
                    makespan,
                });
                out.finished = self.end(ThreadEnd::Improved);
            } else {
                out.finished = self.end(ThreadEnd::NotImproved);
            }
        }
        out
    }
}

const MAX_OFFLINE_IMPROVEMENTS: usize = 64;

/// Result of planning without execution.
#[derive(Debug, Clone)]
pub struct OfflinePlan {
    pub steps: Vec<SnapRef>,
    pub plan: TimedPlan,
    pub rounds: u64,
    pub mode_changes: Vec<(SearchMode, SearchMode)>,
    pub improvements: usize,
}

/// Runs a non-improving thread against a board that never commits, then
/// improving threads while they keep shortening the makespan. The last
/// improving thread exhausts every plan shorter than the one returned.
pub fn plan_offline(ctx: &SearchContext, init: WorldState, config: &Config) -> Option<OfflinePlan> {
    let board = CommittedBoard::new(init).snapshot();
    let limits = RoundLimits::from_config(config);
    let mut thread = SearchThread::new(ctx.clone(), &board, limits, make_clock(config.deterministic));
    let mut steps = Vec::new();
    let mut rounds = 0;
    let mut mode_changes = Vec::new();
    loop {
        let st = thread.step(&board);
        rounds += 1;
        mode_changes.extend(st.mode_change);
        match st.message {
            Some(SearchMessage::PartialPlan { steps: s, .. }) => steps.extend(s),
            Some(SearchMessage::SearchFailed) => return None,
            _ => {}
        }
        match st.finished {
            Some(ThreadEnd::GoalReached) => break,
            Some(_) => return None,
            None => {}
        }
    }
    let mut plan = schedule_steps(&ctx.task, &steps).ok()?;
    let mut improvements = 0;
    // one unbounded round per improving thread, so each one is complete
    let whole = RoundLimits { interval_ms: u64::MAX, plan_size_limit: usize::MAX };
    for _ in 0..MAX_OFFLINE_IMPROVEMENTS {
        let mut imp = SearchThread::improving(ctx.clone(), &board, whole, make_clock(true), plan.makespan());
        let mut better = None;
        while imp.finished().is_none() {
            let st = imp.step(&board);
            rounds += 1;
            if let Some(SearchMessage::ImprovedPlan { steps: s, .. }) = st.message {
                better = Some(s);
            }
        }
        match better.and_then(|s| schedule_steps(&ctx.task, &s).ok().map(|p| (s, p))) {
            Some((s, p)) => {
                steps = s;
                plan = p;
                improvements += 1;
            }
            None => break,
        }
    }
    Some(OfflinePlan { steps, plan, rounds, mode_changes, improvements })
}
