//! Agent control loop: desires and intentions, plan queue, executor and
//! events monitor over a simulated environment.

pub mod desire;
pub mod env;
pub mod queue;
pub mod run;
pub mod scenario;
pub mod trace;

pub use desire::{activate_goal, revise_goal, Desire, Revision, RevisionRule};
pub use env::{executor_tick, monitor, Environment, ExecEvent, Executor, Observation};
pub use queue::{early_arrest_point, schedule_plan, PlanQueue, ScheduleAction, Segment};
pub use run::{run_agent, run_scenario, AgentRun};
pub use scenario::{EnvEvent, Scenario, ScenarioError, ScenarioSpec, ScheduledEvent};
pub use trace::{Outcome, Trace, TraceEvent, TraceRecord};
