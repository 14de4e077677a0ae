//! Scenario files: a planning task, desires and timed environment events.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::desire::{Desire, RevisionRule};
use crate::config::Config;
use crate::pddl::{load_task, PddlError};
use crate::task::{ActionId, Goal, GroundedTask, Literal, SnapKind};
use crate::time::Time;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleSpec {
    pub id: String,
    #[serde(default)]
    pub active: Vec<String>,
    #[serde(default)]
    pub incoming: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesireSpec {
    #[serde(default)]
    pub id: Option<String>,
    pub goal: Vec<String>,
    #[serde(default)]
    pub priority: f64,
    #[serde(default)]
    pub precondition: Vec<String>,
    #[serde(default)]
    pub revision_rules: Vec<RuleSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExogenousSpec {
    #[serde(default)]
    pub add: Vec<String>,
    #[serde(default)]
    pub del: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FailureSpec {
    pub action: String,
    #[serde(default = "default_snap")]
    pub snap: SnapKind,
}

fn default_snap() -> SnapKind {
    SnapKind::Start
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum EventPayload {
    Exogenous(ExogenousSpec),
    PushDesire(DesireSpec),
    InjectFailure(FailureSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSpec {
    pub at: Time,
    #[serde(flatten)]
    pub payload: EventPayload,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub domain_path: PathBuf,
    pub problem_path: PathBuf,
    #[serde(default)]
    pub desires: Option<Vec<DesireSpec>>,
    #[serde(default)]
    pub events: Vec<EventSpec>,
    #[serde(default)]
    pub config: Config,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnvEvent {
    Exogenous { add: Vec<Literal>, del: Vec<Literal> },
    PushDesire(Desire),
    InjectFailure { action: ActionId, snap: SnapKind },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduledEvent {
    pub at: Time,
    pub event: EnvEvent,
}

/// A scenario resolved against its grounded task.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub task: GroundedTask,
    pub desires: Vec<Desire>,
    pub events: Vec<ScheduledEvent>,
    pub config: Config,
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed scenario: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Pddl(#[from] PddlError),
    #[error("unknown literal `{0}`")]
    UnknownLiteral(String),
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("invalid config: {0}")]
    Config(String),
}

fn read(path: &Path) -> Result<String, ScenarioError> {
    std::fs::read_to_string(path).map_err(|source| ScenarioError::Io { path: path.to_owned(), source })
}

fn literals(task: &GroundedTask, texts: &[String]) -> Result<Vec<Literal>, ScenarioError> {
    texts
        .iter()
        .map(|t| task.parse_literal(t).ok_or_else(|| ScenarioError::UnknownLiteral(t.clone())))
        .collect()
}

fn positive_atoms(task: &GroundedTask, texts: &[String]) -> Result<Vec<Literal>, ScenarioError> {
    let lits = literals(task, texts)?;
    match lits.iter().zip(texts).find(|(l, _)| !l.positive) {
        Some((_, t)) => Err(ScenarioError::UnknownLiteral(t.clone())),
        None => Ok(lits),
    }
}

fn desire(task: &GroundedTask, spec: &DesireSpec, default_id: String) -> Result<Desire, ScenarioError> {
    Ok(Desire {
        id: spec.id.clone().unwrap_or(default_id),
        goal: Goal::new(literals(task, &spec.goal)?),
        priority: spec.priority,
        precondition: literals(task, &spec.precondition)?,
        revision_rules: spec
            .revision_rules
            .iter()
            .map(|r| RevisionRule { id: r.id.clone(), active: r.active.clone(), incoming: r.incoming.clone() })
            .collect(),
    })
}

impl Scenario {
    /// Resolves a scenario whose PDDL paths are relative to `base_dir`.
    pub fn resolve(spec: &ScenarioSpec, base_dir: &Path) -> Result<Scenario, ScenarioError> {
        let domain = read(&base_dir.join(&spec.domain_path))?;
        let problem = read(&base_dir.join(&spec.problem_path))?;
        Self::from_texts(spec, &domain, &problem)
    }

    pub fn from_texts(spec: &ScenarioSpec, domain: &str, problem: &str) -> Result<Scenario, ScenarioError> {
        spec.config.validate().map_err(ScenarioError::Config)?;
        let task = load_task(domain, problem)?;
        let desires = match &spec.desires {
            Some(ds) => ds.iter().enumerate().map(|(i, d)| desire(&task, d, format!("d{i}"))).collect::<Result<_, _>>()?,
            None => vec![Desire {
                id: "goal".into(),
                goal: task.goal.clone(),
                priority: 0.0,
                precondition: Vec::new(),
                revision_rules: Vec::new(),
            }],
        };
        let mut events = Vec::new();
        for (i, e) in spec.events.iter().enumerate() {
            let event = match &e.payload {
                EventPayload::Exogenous(x) => {
                    EnvEvent::Exogenous { add: positive_atoms(&task, &x.add)?, del: positive_atoms(&task, &x.del)? }
                }
                EventPayload::PushDesire(d) => EnvEvent::PushDesire(desire(&task, d, format!("e{i}"))?),
                EventPayload::InjectFailure(f) => EnvEvent::InjectFailure {
                    action: task.parse_action(&f.action).ok_or_else(|| ScenarioError::UnknownAction(f.action.clone()))?,
                    snap: f.snap,
                },
            };
            events.push(ScheduledEvent { at: e.at, event });
        }
        // stable: equal times keep file order
        events.sort_by_key(|e| e.at);
        Ok(Scenario { task, desires, events, config: spec.config.clone() })
    }

    pub fn load(path: &Path) -> Result<Scenario, ScenarioError> {
        let spec: ScenarioSpec = serde_json::from_str(&read(path)?)?;
        Self::resolve(&spec, path.parent().unwrap_or(Path::new(".")))
    }
}
