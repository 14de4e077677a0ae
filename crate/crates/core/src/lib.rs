//! Continual temporal planning interleaved with execution.
//!
//! The crate is organised bottom-up:
//!
//! * [`pddl`] parses and grounds a PDDL 2.1 subset into a [`task::GroundedTask`].
//! * [`state`] is the snap-action search space and time-triggered plan extraction.
//! * [`heuristic`] is the temporal relaxed planning graph.
//! * [`search`] runs bounded search rounds, re-rooting between them, inside a
//!   search thread that emits partial, improved or failed results.
//! * [`exec`] holds the committed-action board, plan simulation and failure
//!   forecasting.
//! * [`agent`] is the deliberation loop: goal activation and revision, plan
//!   queue, executor and events monitor against a simulated environment.

pub mod agent;
pub mod config;
pub mod exec;
pub mod fixtures;
pub mod heuristic;
pub mod pddl;
pub mod search;
pub mod state;
pub mod task;
pub mod time;

pub use config::Config;
pub use state::{SearchState, TimedPlan, WorldState};
pub use task::{ActionId, AtomId, Fluents, Goal, GroundedTask, Literal, SnapKind, SnapRef};
pub use time::Time;
