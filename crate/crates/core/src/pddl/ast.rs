use std::fmt;

use crate::time::Time;

pub const OBJECT_TYPE: &str = "object";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedName {
    pub name: String,
    pub ty: String,
}

/// `(pred arg ...)` where args are `?variables` or object names.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AtomExpr {
    pub predicate: String,
    pub args: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LiteralExpr {
    pub atom: AtomExpr,
    pub positive: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicateDecl {
    pub name: String,
    pub params: Vec<TypedName>,
}

/// A durative action before grounding. Effects use `positive = false` for deletes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSchema {
    pub name: String,
    pub params: Vec<TypedName>,
    pub duration: Time,
    pub cond_start: Vec<LiteralExpr>,
    pub cond_overall: Vec<LiteralExpr>,
    pub cond_end: Vec<LiteralExpr>,
    pub eff_start: Vec<LiteralExpr>,
    pub eff_end: Vec<LiteralExpr>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainAst {
    pub name: String,
    pub requirements: Vec<String>,
    /// `(type, parent)` in declaration order; the root `object` is implicit.
    pub types: Vec<TypedName>,
    pub predicates: Vec<PredicateDecl>,
    pub durative_actions: Vec<ActionSchema>,
}

impl DomainAst {
    pub fn parent_of(&self, ty: &str) -> Option<&str> {
        self.types.iter().find(|t| t.name == ty).map(|t| t.ty.as_str())
    }

    pub fn has_type(&self, ty: &str) -> bool {
        ty == OBJECT_TYPE || self.types.iter().any(|t| t.name == ty)
    }

    /// Whether `ty` equals `ancestor` or lies below it in the hierarchy.
    pub fn is_subtype(&self, ty: &str, ancestor: &str) -> bool {
        if ancestor == OBJECT_TYPE {
            return true;
        }
        let mut cur = ty;
        // the hierarchy is validated acyclic, the bound only guards malformed input
        for _ in 0..=self.types.len() {
            if cur == ancestor {
                return true;
            }
            match self.parent_of(cur) {
                Some(p) => cur = p,
                None => return false,
            }
        }
        false
    }

    pub fn predicate(&self, name: &str) -> Option<&PredicateDecl> {
        self.predicates.iter().find(|p| p.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemAst {
    pub name: String,
    pub domain: String,
    pub objects: Vec<TypedName>,
    pub init: Vec<AtomExpr>,
    pub goal: Vec<LiteralExpr>,
}

impl fmt::Display for AtomExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for LiteralExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "{}", self.atom)
        } else {
            write!(f, "(not {})", self.atom)
        }
    }
}

fn write_typed(f: &mut fmt::Formatter<'_>, names: &[TypedName]) -> fmt::Result {
    for (i, n) in names.iter().enumerate() {
        if i > 0 {
            write!(f, " ")?;
        }
        write!(f, "{} - {}", n.name, n.ty)?;
    }
    Ok(())
}

fn write_timed(
    f: &mut fmt::Formatter<'_>,
    parts: &[(&str, &[LiteralExpr])],
) -> fmt::Result {
    write!(f, "(and")?;
    for (tag, lits) in parts {
        for l in *lits {
            write!(f, "\n      ({tag} {l})")?;
        }
    }
    write!(f, ")")
}

impl fmt::Display for DomainAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "(define (domain {})", self.name)?;
        if !self.requirements.is_empty() {
            writeln!(f, "  (:requirements {})", self.requirements.join(" "))?;
        }
        if !self.types.is_empty() {
            write!(f, "  (:types ")?;
            write_typed(f, &self.types)?;
            writeln!(f, ")")?;
        }
        write!(f, "  (:predicates")?;
        for p in &self.predicates {
            write!(f, "\n    ({}", p.name)?;
            if !p.params.is_empty() {
                write!(f, " ")?;
                write_typed(f, &p.params)?;
            }
            write!(f, ")")?;
        }
        writeln!(f, ")")?;
        for a in &self.durative_actions {
            writeln!(f, "  (:durative-action {}", a.name)?;
            write!(f, "    :parameters (")?;
            write_typed(f, &a.params)?;
            writeln!(f, ")")?;
            writeln!(f, "    :duration (= ?duration {})", a.duration)?;
            write!(f, "    :condition ")?;
            write_timed(
                f,
                &[("at start", &a.cond_start), ("over all", &a.cond_overall), ("at end", &a.cond_end)],
            )?;
            write!(f, "\n    :effect ")?;
            write_timed(f, &[("at start", &a.eff_start), ("at end", &a.eff_end)])?;
            writeln!(f, ")")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for ProblemAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "(define (problem {})", self.name)?;
        writeln!(f, "  (:domain {})", self.domain)?;
        write!(f, "  (:objects ")?;
        write_typed(f, &self.objects)?;
        writeln!(f, ")")?;
        write!(f, "  (:init")?;
        for a in &self.init {
            write!(f, "\n    {a}")?;
        }
        writeln!(f, ")")?;
        write!(f, "  (:goal (and")?;
        for l in &self.goal {
            write!(f, " {l}")?;
        }
        write!(f, ")))")
    }
}
