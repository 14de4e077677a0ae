use std::cmp::Ordering;
use std::collections::HashMap;

use crate::state::WorldState;
use crate::task::{Goal, GroundedTask, Literal};

/// Rule allowing an incoming goal to be merged into the active one.
///
/// Patterns are literal texts such as `(box-at ?b w3)`; a `?name` token
/// matches any single token, consistently within one pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct RevisionRule {
    pub id: String,
    pub active: Vec<String>,
    pub incoming: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Desire {
    pub id: String,
    pub goal: Goal,
    pub priority: f64,
    pub precondition: Vec<Literal>,
    pub revision_rules: Vec<RevisionRule>,
}

impl Desire {
    /// Higher priority first, then lower id.
    pub fn precedence(&self, other: &Desire) -> Ordering {
        other.priority.total_cmp(&self.priority).then_with(|| self.id.cmp(&other.id))
    }
}

/// Index of the highest-priority desire whose precondition holds.
pub fn activate_goal(desires: &[Desire], beliefs: &WorldState) -> Option<usize> {
    desires
        .iter()
        .enumerate()
        .filter(|(_, d)| beliefs.fluents.holds_all(&d.precondition))
        .min_by(|(_, a), (_, b)| a.precedence(b))
        .map(|(i, _)| i)
}

fn tokens(text: &str) -> Vec<String> {
    text.replace('(', " ( ").replace(')', " ) ").split_whitespace().map(|t| t.to_lowercase()).collect()
}

pub fn pattern_matches(pattern: &str, literal: &str) -> bool {
    let p = tokens(pattern);
    let l = tokens(literal);
    if p.len() != l.len() {
        return false;
    }
    let mut binding: HashMap<&str, &str> = HashMap::new();
    p.iter().zip(&l).all(|(pt, lt)| {
        if pt.starts_with('?') && lt != "(" && lt != ")" {
            *binding.entry(pt.as_str()).or_insert(lt.as_str()) == lt.as_str()
        } else {
            pt == lt
        }
    })
}

fn goal_matches(task: &GroundedTask, patterns: &[String], goal: &Goal) -> bool {
    patterns
        .iter()
        .all(|p| goal.literals().iter().any(|l| pattern_matches(p, &task.literal_name(*l))))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Revision {
    /// Conjunction of both goals, with the id of the rule that allowed it.
    Revised { goal: Goal, rule: String },
    NoRule,
    Contradictory { rule: String },
}

pub fn revise_goal(task: &GroundedTask, active: &Goal, incoming: &Goal, rules: &[RevisionRule]) -> Revision {
    let Some(rule) = rules
        .iter()
        .find(|r| goal_matches(task, &r.active, active) && goal_matches(task, &r.incoming, incoming))
    else {
        return Revision::NoRule;
    };
    let merged = active.conjoin(incoming);
    if merged.is_contradictory() {
        Revision::Contradictory { rule: rule.id.clone() }
    } else {
        Revision::Revised { goal: merged, rule: rule.id.clone() }
    }
}
