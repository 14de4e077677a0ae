//! Ground planning task: indexed atoms, ground durative actions and their snaps.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::time::Time;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AtomId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ActionId(pub u32);

impl AtomId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl ActionId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Literal {
    pub atom: AtomId,
    pub positive: bool,
}

impl Literal {
    pub fn pos(atom: AtomId) -> Self {
        Literal { atom, positive: true }
    }

    pub fn neg(atom: AtomId) -> Self {
        Literal { atom, positive: false }
    }

    pub fn negated(self) -> Self {
        Literal { atom: self.atom, positive: !self.positive }
    }
}

/// Set of true ground atoms.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Fluents(BTreeSet<AtomId>);

impl Fluents {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn contains(&self, atom: AtomId) -> bool {
        self.0.contains(&atom)
    }

    pub fn holds(&self, lit: Literal) -> bool {
        self.0.contains(&lit.atom) == lit.positive
    }

    /// First literal of `lits` that does not hold.
    pub fn first_violated(&self, lits: &[Literal]) -> Option<Literal> {
        lits.iter().copied().find(|l| !self.holds(*l))
    }

    pub fn holds_all(&self, lits: &[Literal]) -> bool {
        self.first_violated(lits).is_none()
    }

    pub fn insert(&mut self, atom: AtomId) -> bool {
        self.0.insert(atom)
    }

    pub fn remove(&mut self, atom: AtomId) -> bool {
        self.0.remove(&atom)
    }

    /// Deletes first, then adds.
    pub fn apply(&mut self, del: &[AtomId], add: &[AtomId]) {
        for a in del {
            self.0.remove(a);
        }
        for a in add {
            self.0.insert(*a);
        }
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = AtomId> + '_ {
        self.0.iter().copied()
    }
}

impl FromIterator<AtomId> for Fluents {
    fn from_iter<I: IntoIterator<Item = AtomId>>(iter: I) -> Self {
        Fluents(iter.into_iter().collect())
    }
}

/// Conjunction of ground literals, kept sorted and duplicate-free.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Goal {
    literals: Vec<Literal>,
}

impl Goal {
    pub fn new(lits: impl IntoIterator<Item = Literal>) -> Self {
        let set: BTreeSet<Literal> = lits.into_iter().collect();
        Goal { literals: set.into_iter().collect() }
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    pub fn satisfied_by(&self, fluents: &Fluents) -> bool {
        fluents.holds_all(&self.literals)
    }

    /// Whether some atom is required both true and false.
    pub fn is_contradictory(&self) -> bool {
        self.literals.windows(2).any(|w| w[0].atom == w[1].atom && w[0].positive != w[1].positive)
    }

    pub fn conjoin(&self, other: &Goal) -> Goal {
        Goal::new(self.literals.iter().chain(&other.literals).copied())
    }

    /// Whether every literal of `other` is also required here.
    pub fn entails(&self, other: &Goal) -> bool {
        other.literals.iter().all(|l| self.literals.binary_search(l).is_ok())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SnapKind {
    Start,
    End,
}

/// Reference to one of the two snaps of a ground action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SnapRef {
    pub action: ActionId,
    pub kind: SnapKind,
}

impl SnapRef {
    pub fn start(action: ActionId) -> Self {
        SnapRef { action, kind: SnapKind::Start }
    }

    pub fn end(action: ActionId) -> Self {
        SnapRef { action, kind: SnapKind::End }
    }

    /// Dense index: `2 * action + kind`.
    pub fn index(self) -> usize {
        self.action.index() * 2 + usize::from(self.kind == SnapKind::End)
    }

    pub fn from_index(i: usize) -> Self {
        let action = ActionId((i / 2) as u32);
        if i % 2 == 0 {
            SnapRef::start(action)
        } else {
            SnapRef::end(action)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundDurativeAction {
    pub id: ActionId,
    pub schema: String,
    pub args: Vec<String>,
    pub duration: Time,
    pub cond_start: Vec<Literal>,
    pub cond_overall: Vec<Literal>,
    pub cond_end: Vec<Literal>,
    pub add_start: Vec<AtomId>,
    pub del_start: Vec<AtomId>,
    pub add_end: Vec<AtomId>,
    pub del_end: Vec<AtomId>,
}

impl GroundDurativeAction {
    pub fn name(&self) -> String {
        let mut s = format!("({}", self.schema);
        for a in &self.args {
            s.push(' ');
            s.push_str(a);
        }
        s.push(')');
        s
    }
}

/// One instantaneous half of a durative action.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SnapAction {
    pub parent: ActionId,
    pub kind: SnapKind,
    pub conditions: Vec<Literal>,
    pub add: Vec<AtomId>,
    pub del: Vec<AtomId>,
    pub overall_guard: Vec<Literal>,
}

impl SnapAction {
    pub fn snap_ref(&self) -> SnapRef {
        SnapRef { action: self.parent, kind: self.kind }
    }
}

/// Splits a ground durative action into its start and end snaps.
pub fn split_durative(action: &GroundDurativeAction) -> (SnapAction, SnapAction) {
    let start = SnapAction {
        parent: action.id,
        kind: SnapKind::Start,
        conditions: action.cond_start.clone(),
        add: action.add_start.clone(),
        del: action.del_start.clone(),
        overall_guard: action.cond_overall.clone(),
    };
    let end = SnapAction {
        parent: action.id,
        kind: SnapKind::End,
        conditions: action.cond_end.clone(),
        add: action.add_end.clone(),
        del: action.del_end.clone(),
        overall_guard: action.cond_overall.clone(),
    };
    (start, end)
}

#[derive(Debug, Clone)]
pub struct GroundedTask {
    atoms: Vec<(String, Vec<String>)>,
    actions: Vec<GroundDurativeAction>,
    snaps: Vec<SnapAction>,
    pub init: Fluents,
    pub goal: Goal,
}

impl GroundedTask {
    /// `atoms` must be sorted; action ids must equal their position.
    pub fn new(
        atoms: Vec<(String, Vec<String>)>,
        actions: Vec<GroundDurativeAction>,
        init: Fluents,
        goal: Goal,
    ) -> Self {
        debug_assert!(actions.iter().enumerate().all(|(i, a)| a.id.index() == i));
        let mut snaps = Vec::with_capacity(actions.len() * 2);
        for a in &actions {
            let (s, e) = split_durative(a);
            snaps.push(s);
            snaps.push(e);
        }
        GroundedTask { atoms, actions, snaps, init, goal }
    }

    pub fn num_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn actions(&self) -> &[GroundDurativeAction] {
        &self.actions
    }

    pub fn action(&self, id: ActionId) -> &GroundDurativeAction {
        &self.actions[id.index()]
    }

    pub fn snaps(&self) -> &[SnapAction] {
        &self.snaps
    }

    pub fn snap(&self, r: SnapRef) -> &SnapAction {
        &self.snaps[r.index()]
    }

    pub fn atom_name(&self, id: AtomId) -> String {
        let (p, args) = &self.atoms[id.index()];
        let mut s = format!("({p}");
        for a in args {
            s.push(' ');
            s.push_str(a);
        }
        s.push(')');
        s
    }

    pub fn literal_name(&self, lit: Literal) -> String {
        if lit.positive {
            self.atom_name(lit.atom)
        } else {
            format!("(not {})", self.atom_name(lit.atom))
        }
    }

    pub fn snap_name(&self, r: SnapRef) -> String {
        let kind = match r.kind {
            SnapKind::Start => "start",
            SnapKind::End => "end",
        };
        format!("{kind} {}", self.action(r.action).name())
    }

    pub fn find_atom(&self, predicate: &str, args: &[&str]) -> Option<AtomId> {
        self.atoms
            .binary_search_by(|(p, a)| {
                p.as_str().cmp(predicate).then_with(|| a.iter().map(String::as_str).cmp(args.iter().copied()))
            })
            .ok()
            .map(|i| AtomId(i as u32))
    }

    pub fn find_action(&self, schema: &str, args: &[&str]) -> Option<ActionId> {
        self.actions
            .iter()
            .find(|a| a.schema == schema && a.args.iter().map(String::as_str).eq(args.iter().copied()))
            .map(|a| a.id)
    }

    /// Resolves text like `(at r1 w2)` or `(not (at r1 w2))`.
    pub fn parse_literal(&self, text: &str) -> Option<Literal> {
        let t = text.trim();
        if let Some(inner) = t.strip_prefix("(not").and_then(|r| r.trim().strip_suffix(')')) {
            return self.parse_literal(inner).filter(|l| l.positive).map(Literal::negated);
        }
        let body = t.strip_prefix('(')?.strip_suffix(')')?;
        let mut parts = body.split_whitespace().map(|s| s.to_ascii_lowercase());
        let pred = parts.next()?;
        let args: Vec<String> = parts.collect();
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        self.find_atom(&pred, &refs).map(Literal::pos)
    }

    /// Resolves text like `(move r1 w1 w2)`.
    pub fn parse_action(&self, text: &str) -> Option<ActionId> {
        let body = text.trim().strip_prefix('(')?.strip_suffix(')')?;
        let parts: Vec<String> = body.split_whitespace().map(|s| s.to_ascii_lowercase()).collect();
        let (schema, args) = parts.split_first()?;
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        self.find_action(schema, &refs)
    }

    /// Inverse of [`GroundedTask::snap_name`].
    pub fn parse_snap(&self, text: &str) -> Option<SnapRef> {
        let (kind, action) = text.trim().split_once(' ')?;
        let action = self.parse_action(action)?;
        match kind {
            "start" => Some(SnapRef::start(action)),
            "end" => Some(SnapRef::end(action)),
            _ => None,
        }
    }
}

impl fmt::Display for SnapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SnapKind::Start => write!(f, "start"),
            SnapKind::End => write!(f, "end"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn goal_is_sorted_and_deduplicated() {
        let g = Goal::new([Literal::pos(AtomId(3)), Literal::pos(AtomId(1)), Literal::pos(AtomId(3))]);
        assert_eq!(g.literals(), &[Literal::pos(AtomId(1)), Literal::pos(AtomId(3))]);
        assert!(!g.is_contradictory());
        let bad = g.conjoin(&Goal::new([Literal::neg(AtomId(1))]));
        assert!(bad.is_contradictory());
    }

    #[test]
    fn delete_before_add() {
        let mut f = Fluents::from_iter([AtomId(0)]);
        f.apply(&[AtomId(0)], &[AtomId(0)]);
        assert!(f.contains(AtomId(0)));
        f.apply(&[], &[AtomId(0)]);
        assert_eq!(f.len(), 1);
    }

    #[test]
    fn snap_index_roundtrip() {
        for i in 0..10 {
            assert_eq!(SnapRef::from_index(i).index(), i);
        }
    }
}
