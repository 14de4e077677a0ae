use std::collections::HashSet;

use super::ast::*;
use super::sexpr::{self, Pos, Sexpr};
use super::PddlError;
use crate::time::Time;

const SUPPORTED_REQUIREMENTS: &[&str] =
    &[":strips", ":typing", ":durative-actions", ":negative-preconditions"];

fn expect(pos: Pos, expected: &str, found: &Sexpr) -> PddlError {
    PddlError::Syntax { pos, expected: expected.to_string(), found: found.describe() }
}

fn expect_end(pos: Pos, expected: &str) -> PddlError {
    PddlError::Syntax { pos, expected: expected.to_string(), found: "`)`".to_string() }
}

fn unsupported(feature: impl Into<String>, pos: Pos) -> PddlError {
    PddlError::Unsupported { feature: feature.into(), pos }
}

fn atom_of<'a>(e: &'a Sexpr, expected: &str) -> Result<&'a str, PddlError> {
    e.as_atom().ok_or_else(|| expect(e.pos(), expected, e))
}

fn list_of<'a>(e: &'a Sexpr, expected: &str) -> Result<&'a [Sexpr], PddlError> {
    e.as_list().ok_or_else(|| expect(e.pos(), expected, e))
}

/// Splits `(define (<kind> name) sections...)`.
fn define_header<'a>(root: &'a Sexpr, kind: &str) -> Result<(&'a str, &'a [Sexpr]), PddlError> {
    let items = list_of(root, "`(define ...)`")?;
    match items.first() {
        Some(h) if h.as_atom() == Some("define") => {}
        Some(h) => return Err(expect(h.pos(), "`define`", h)),
        None => return Err(expect_end(root.pos(), "`define`")),
    }
    let header = items.get(1).ok_or_else(|| expect_end(root.pos(), &format!("`({kind} <name>)`")))?;
    let hl = list_of(header, &format!("`({kind} <name>)`"))?;
    match hl {
        [k, n] if k.as_atom() == Some(kind) => Ok((atom_of(n, "name")?, &items[2..])),
        _ => Err(expect(header.pos(), &format!("`({kind} <name>)`"), header)),
    }
}

/// Parses `a b - t c - u d` style lists; names without a type default to `object`.
fn typed_list(items: &[Sexpr], what: &str) -> Result<Vec<TypedName>, PddlError> {
    let mut out = Vec::new();
    let mut pending: Vec<String> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let it = &items[i];
        let s = atom_of(it, what)?;
        if s == "-" {
            let ty_e = items.get(i + 1).ok_or_else(|| expect_end(it.pos(), "type name"))?;
            if ty_e.head() == Some("either") {
                return Err(unsupported("either types", ty_e.pos()));
            }
            let ty = atom_of(ty_e, "type name")?;
            if pending.is_empty() {
                return Err(expect(it.pos(), what, it));
            }
            for n in pending.drain(..) {
                out.push(TypedName { name: n, ty: ty.to_string() });
            }
            i += 2;
        } else {
            pending.push(s.to_string());
            i += 1;
        }
    }
    for n in pending {
        out.push(TypedName { name: n, ty: OBJECT_TYPE.to_string() });
    }
    Ok(out)
}

fn atom_expr(e: &Sexpr) -> Result<AtomExpr, PddlError> {
    let items = list_of(e, "atom `(predicate args...)`")?;
    let head = items.first().ok_or_else(|| expect_end(e.pos(), "predicate name"))?;
    let predicate = atom_of(head, "predicate name")?;
    match predicate {
        "=" | "<" | ">" | "<=" | ">=" => return Err(unsupported("numeric comparisons", e.pos())),
        "increase" | "decrease" | "assign" | "scale-up" | "scale-down" => {
            return Err(unsupported("numeric effects", e.pos()))
        }
        "or" => return Err(unsupported("disjunctive conditions", e.pos())),
        "forall" => return Err(unsupported("universal quantification", e.pos())),
        "exists" => return Err(unsupported("existential quantification", e.pos())),
        "imply" => return Err(unsupported("implications", e.pos())),
        "when" => return Err(unsupported("conditional effects", e.pos())),
        "and" | "not" => return Err(expect(head.pos(), "predicate name", head)),
        _ => {}
    }
    let args = items[1..]
        .iter()
        .map(|a| atom_of(a, "argument").map(str::to_string))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(AtomExpr { predicate: predicate.to_string(), args })
}

fn literal_expr(e: &Sexpr) -> Result<LiteralExpr, PddlError> {
    if e.head() == Some("not") {
        let items = e.as_list().unwrap_or_default();
        match items {
            [_, inner] => Ok(LiteralExpr { atom: atom_expr(inner)?, positive: false }),
            _ => Err(expect(e.pos(), "`(not <atom>)`", e)),
        }
    } else {
        Ok(LiteralExpr { atom: atom_expr(e)?, positive: true })
    }
}

/// Flattens an optional `(and ...)` wrapper. `()` is accepted as empty.
fn conjuncts(e: &Sexpr) -> Result<Vec<&Sexpr>, PddlError> {
    match e {
        Sexpr::List(items, _) if items.is_empty() => Ok(Vec::new()),
        Sexpr::List(items, _) if e.head() == Some("and") => {
            let mut out = Vec::new();
            for it in &items[1..] {
                out.extend(conjuncts(it)?);
            }
            Ok(out)
        }
        Sexpr::List(..) => Ok(vec![e]),
        Sexpr::Atom(..) => Err(expect(e.pos(), "list", e)),
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum When {
    Start,
    Overall,
    End,
}

fn timed(e: &Sexpr) -> Result<(When, &Sexpr), PddlError> {
    let items = list_of(e, "timed literal")?;
    let when = match items {
        [a, b, _] if a.as_atom() == Some("at") && b.as_atom() == Some("start") => When::Start,
        [a, b, _] if a.as_atom() == Some("at") && b.as_atom() == Some("end") => When::End,
        [a, b, _] if a.as_atom() == Some("over") && b.as_atom() == Some("all") => When::Overall,
        _ => {
            if let Some(h) = e.head() {
                if matches!(h, "increase" | "decrease") {
                    return Err(unsupported("continuous effects", e.pos()));
                }
                if matches!(h, "forall" | "when" | "or" | "exists" | "imply") {
                    // name the construct rather than a generic syntax error
                    atom_expr(e)?;
                }
            }
            return Err(expect(e.pos(), "`(at start ...)`, `(over all ...)` or `(at end ...)`", e));
        }
    };
    Ok((when, &items[2]))
}

fn duration(e: &Sexpr) -> Result<Time, PddlError> {
    let parts = conjuncts(e)?;
    let [c] = parts.as_slice() else {
        return Err(expect(e.pos(), "`(= ?duration <number>)`", e));
    };
    let items = list_of(c, "duration constraint")?;
    match items {
        [op, var, val] if var.as_atom() == Some("?duration") => {
            match op.as_atom() {
                Some("=") => {}
                Some("<=" | ">=" | "<" | ">") => {
                    return Err(unsupported("duration inequalities", c.pos()))
                }
                _ => return Err(expect(op.pos(), "`=`", op)),
            }
            let s = val
                .as_atom()
                .ok_or_else(|| unsupported("non-constant duration expressions", val.pos()))?;
            let d: Time = s
                .parse()
                .map_err(|_| unsupported("non-constant duration expressions", val.pos()))?;
            if d <= Time::ZERO {
                return Err(PddlError::Semantic {
                    pos: val.pos(),
                    message: format!("duration must be positive, got {d}"),
                });
            }
            Ok(d)
        }
        _ => Err(expect(c.pos(), "`(= ?duration <number>)`", c)),
    }
}

fn durative_action(items: &[Sexpr], pos: Pos) -> Result<ActionSchema, PddlError> {
    let name = atom_of(items.get(1).ok_or_else(|| expect_end(pos, "action name"))?, "action name")?;
    let mut schema = ActionSchema {
        name: name.to_string(),
        params: Vec::new(),
        duration: Time::ZERO,
        cond_start: Vec::new(),
        cond_overall: Vec::new(),
        cond_end: Vec::new(),
        eff_start: Vec::new(),
        eff_end: Vec::new(),
    };
    let mut seen_duration = false;
    let mut i = 2;
    while i < items.len() {
        let key_e = &items[i];
        let key = atom_of(key_e, "action keyword")?;
        let val = items.get(i + 1).ok_or_else(|| expect_end(key_e.pos(), "value"))?;
        match key {
            ":parameters" => schema.params = typed_list(list_of(val, "parameter list")?, "parameter")?,
            ":duration" => {
                schema.duration = duration(val)?;
                seen_duration = true;
            }
            ":condition" => {
                for c in conjuncts(val)? {
                    let (when, lit) = timed(c)?;
                    let lit = literal_expr(lit)?;
                    match when {
                        When::Start => schema.cond_start.push(lit),
                        When::Overall => schema.cond_overall.push(lit),
                        When::End => schema.cond_end.push(lit),
                    }
                }
            }
            ":effect" => {
                for c in conjuncts(val)? {
                    let (when, lit) = timed(c)?;
                    let lit = literal_expr(lit)?;
                    match when {
                        When::Start => schema.eff_start.push(lit),
                        When::End => schema.eff_end.push(lit),
                        When::Overall => {
                            return Err(unsupported("continuous effects", c.pos()))
                        }
                    }
                }
            }
            _ => return Err(expect(key_e.pos(), "`:parameters`, `:duration`, `:condition` or `:effect`", key_e)),
        }
        i += 2;
    }
    if !seen_duration {
        return Err(PddlError::Semantic { pos, message: format!("action `{name}` has no :duration") });
    }
    Ok(schema)
}

/// Parses a domain in the supported PDDL 2.1 subset and validates it.
pub fn parse_domain(text: &str) -> Result<DomainAst, PddlError> {
    let root = sexpr::read(text)?;
    let (name, sections) = define_header(&root, "domain")?;
    let mut dom = DomainAst {
        name: name.to_string(),
        requirements: Vec::new(),
        types: Vec::new(),
        predicates: Vec::new(),
        durative_actions: Vec::new(),
    };
    for sec in sections {
        let items = list_of(sec, "domain section")?;
        let head = sec.head().ok_or_else(|| expect(sec.pos(), "section keyword", sec))?;
        match head {
            ":requirements" => {
                for r in &items[1..] {
                    let r_name = atom_of(r, "requirement flag")?;
                    if !SUPPORTED_REQUIREMENTS.contains(&r_name) {
                        return Err(unsupported(r_name, r.pos()));
                    }
                    dom.requirements.push(r_name.to_string());
                }
            }
            ":types" => dom.types = typed_list(&items[1..], "type name")?,
            ":predicates" => {
                for p in &items[1..] {
                    let pl = list_of(p, "predicate declaration")?;
                    let pname = atom_of(pl.first().ok_or_else(|| expect_end(p.pos(), "predicate name"))?, "predicate name")?;
                    dom.predicates.push(PredicateDecl {
                        name: pname.to_string(),
                        params: typed_list(&pl[1..], "parameter")?,
                    });
                }
            }
            ":durative-action" => dom.durative_actions.push(durative_action(items, sec.pos())?),
            ":action" => return Err(unsupported("instantaneous actions (:action)", sec.pos())),
            ":functions" => return Err(unsupported("numeric fluents (:functions)", sec.pos())),
            ":constants" => return Err(unsupported("domain constants (:constants)", sec.pos())),
            ":derived" => return Err(unsupported("derived predicates", sec.pos())),
            other => return Err(unsupported(other, sec.pos())),
        }
    }
    validate_domain(&dom, root.pos())?;
    Ok(dom)
}

fn semantic(pos: Pos, message: String) -> PddlError {
    PddlError::Semantic { pos, message }
}

fn validate_domain(dom: &DomainAst, pos: Pos) -> Result<(), PddlError> {
    let mut type_names = HashSet::new();
    for t in &dom.types {
        if t.name == OBJECT_TYPE {
            continue;
        }
        if !type_names.insert(t.name.as_str()) {
            return Err(semantic(pos, format!("type `{}` declared twice", t.name)));
        }
    }
    for t in &dom.types {
        if !dom.has_type(&t.ty) {
            return Err(PddlError::Undeclared { kind: "type", name: t.ty.clone() });
        }
    }
    for t in &dom.types {
        let mut cur = t.ty.as_str();
        let mut steps = 0;
        while cur != OBJECT_TYPE {
            if cur == t.name || steps > dom.types.len() {
                return Err(semantic(pos, format!("type hierarchy has a cycle through `{}`", t.name)));
            }
            cur = dom.parent_of(cur).unwrap_or(OBJECT_TYPE);
            steps += 1;
        }
    }
    let mut preds = HashSet::new();
    for p in &dom.predicates {
        if !preds.insert(p.name.as_str()) {
            return Err(semantic(pos, format!("predicate `{}` declared twice", p.name)));
        }
        for prm in &p.params {
            if !dom.has_type(&prm.ty) {
                return Err(PddlError::Undeclared { kind: "type", name: prm.ty.clone() });
            }
        }
    }
    let mut actions = HashSet::new();
    for a in &dom.durative_actions {
        if !actions.insert(a.name.as_str()) {
            return Err(semantic(pos, format!("action `{}` declared twice", a.name)));
        }
        let mut vars = HashSet::new();
        for prm in &a.params {
            if !prm.name.starts_with('?') {
                return Err(semantic(pos, format!("parameter `{}` of `{}` must start with `?`", prm.name, a.name)));
            }
            if !vars.insert(prm.name.as_str()) {
                return Err(semantic(pos, format!("parameter `{}` repeated in `{}`", prm.name, a.name)));
            }
            if !dom.has_type(&prm.ty) {
                return Err(PddlError::Undeclared { kind: "type", name: prm.ty.clone() });
            }
        }
        let all = a
            .cond_start
            .iter()
            .chain(&a.cond_overall)
            .chain(&a.cond_end)
            .chain(&a.eff_start)
            .chain(&a.eff_end);
        for lit in all {
            check_schema_atom(dom, a, &lit.atom)?;
        }
    }
    Ok(())
}

fn check_schema_atom(dom: &DomainAst, a: &ActionSchema, atom: &AtomExpr) -> Result<(), PddlError> {
    let decl = dom
        .predicate(&atom.predicate)
        .ok_or_else(|| PddlError::Undeclared { kind: "predicate", name: atom.predicate.clone() })?;
    if decl.params.len() != atom.args.len() {
        return Err(PddlError::TypeMismatch {
            context: format!("action `{}`", a.name),
            message: format!("`{}` expects {} arguments, got {}", atom.predicate, decl.params.len(), atom.args.len()),
        });
    }
    for (arg, prm) in atom.args.iter().zip(&decl.params) {
        let Some(var) = a.params.iter().find(|p| &p.name == arg) else {
            return Err(PddlError::Undeclared { kind: "variable", name: arg.clone() });
        };
        if !dom.is_subtype(&var.ty, &prm.ty) {
            return Err(PddlError::TypeMismatch {
                context: format!("action `{}`", a.name),
                message: format!("`{arg}` has type `{}` but `{}` expects `{}`", var.ty, atom.predicate, prm.ty),
            });
        }
    }
    Ok(())
}

/// Parses a problem. Objects referenced by init and goal must be declared;
/// predicates are checked against the domain at grounding time.
pub fn parse_problem(text: &str) -> Result<ProblemAst, PddlError> {
    let root = sexpr::read(text)?;
    let (name, sections) = define_header(&root, "problem")?;
    let mut prob = ProblemAst {
        name: name.to_string(),
        domain: String::new(),
        objects: Vec::new(),
        init: Vec::new(),
        goal: Vec::new(),
    };
    for sec in sections {
        let items = list_of(sec, "problem section")?;
        let head = sec.head().ok_or_else(|| expect(sec.pos(), "section keyword", sec))?;
        match head {
            ":domain" => match items {
                [_, d] => prob.domain = atom_of(d, "domain name")?.to_string(),
                _ => return Err(expect(sec.pos(), "`(:domain <name>)`", sec)),
            },
            ":objects" => prob.objects = typed_list(&items[1..], "object name")?,
            ":init" => {
                for it in &items[1..] {
                    match it.head() {
                        Some("at") if matches!(it.as_list(), Some([_, _, Sexpr::List(..)])) => {
                            return Err(unsupported("timed initial literals", it.pos()))
                        }
                        Some("=") => return Err(unsupported("numeric fluents", it.pos())),
                        Some("not") => {
                            return Err(expect(it.pos(), "positive ground atom", it))
                        }
                        _ => prob.init.push(atom_expr(it)?),
                    }
                }
            }
            ":goal" => {
                let [_, g] = items else {
                    return Err(expect(sec.pos(), "`(:goal <condition>)`", sec));
                };
                for c in conjuncts(g)? {
                    prob.goal.push(literal_expr(c)?);
                }
            }
            ":metric" => {
                // only makespan minimisation, which is what the planner optimises anyway
                let ok = matches!(items, [_, m, e]
                    if m.as_atom() == Some("minimize")
                    && (e.as_atom() == Some("total-time") || e.head() == Some("total-time")));
                if !ok {
                    return Err(unsupported("metric optimization expressions", sec.pos()));
                }
            }
            other => return Err(unsupported(other, sec.pos())),
        }
    }
    let mut declared = HashSet::new();
    for o in &prob.objects {
        if o.name.starts_with('?') {
            return Err(expect(root.pos(), "object name", &Sexpr::Atom(o.name.clone(), root.pos())));
        }
        if !declared.insert(o.name.as_str()) {
            return Err(semantic(root.pos(), format!("object `{}` declared twice", o.name)));
        }
    }
    let mentioned = prob.init.iter().chain(prob.goal.iter().map(|l| &l.atom));
    for atom in mentioned {
        for arg in &atom.args {
            if !declared.contains(arg.as_str()) {
                return Err(PddlError::Undeclared { kind: "object", name: arg.clone() });
            }
        }
    }
    Ok(prob)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn zero_action_domain() {
        let d = parse_domain("(define (domain e) (:predicates (p)))").unwrap();
        assert!(d.durative_actions.is_empty());
        assert_eq!(d.predicates.len(), 1);
    }

    #[test]
    fn delivery_has_three_schemas() {
        let d = parse_domain(fixtures::DELIVERY_DOMAIN).unwrap();
        let got: Vec<_> = d.durative_actions.iter().map(|a| (a.name.as_str(), a.duration)).collect();
        assert_eq!(
            got,
            vec![
                ("move", Time::from_units(2)),
                ("load", Time::from_units(1)),
                ("unload", Time::from_units(1)),
            ]
        );
    }

    #[test]
    fn duration_inequalities_unsupported() {
        let text = "(define (domain d) (:requirements :durative-actions :duration-inequalities) (:predicates (p)))";
        assert!(matches!(parse_domain(text), Err(PddlError::Unsupported { feature, .. }) if feature == ":duration-inequalities"));
        let text = "(define (domain d) (:predicates (p))
          (:durative-action a :parameters () :duration (<= ?duration 3)
            :condition (at start (p)) :effect (at end (not (p)))))";
        assert!(matches!(parse_domain(text), Err(PddlError::Unsupported { feature, .. }) if feature == "duration inequalities"));
    }

    #[test]
    fn continuous_effects_unsupported() {
        let text = "(define (domain d) (:predicates (p))
          (:durative-action a :parameters () :duration (= ?duration 3)
            :condition (at start (p)) :effect (increase (fuel) (* #t 2))))";
        assert!(matches!(parse_domain(text), Err(PddlError::Unsupported { feature, .. }) if feature == "continuous effects"));
    }

    #[test]
    fn syntax_error_has_position_and_expectation() {
        let err = parse_domain("(define (domain d)\n  (:predicates (p))\n  (:durative-action a :parameters () :duration (= ?duration 1)").unwrap_err();
        match err {
            PddlError::Syntax { pos, expected, .. } => {
                assert_eq!(expected, "`)`");
                assert_eq!(pos.line, 3);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_cycles_and_unknown_predicates() {
        let cyc = "(define (domain d) (:types a - b b - a) (:predicates (p)))";
        assert!(matches!(parse_domain(cyc), Err(PddlError::Semantic { .. })));
        let unk = "(define (domain d) (:predicates (p))
          (:durative-action a :parameters () :duration (= ?duration 1)
            :condition (at start (q)) :effect ()))";
        assert!(matches!(parse_domain(unk), Err(PddlError::Undeclared { kind: "predicate", .. })));
    }

    #[test]
    fn type_checked_arguments() {
        let bad = "(define (domain d) (:types a b) (:predicates (p ?x - a))
          (:durative-action act :parameters (?y - b) :duration (= ?duration 1)
            :condition (at start (p ?y)) :effect ()))";
        assert!(matches!(parse_domain(bad), Err(PddlError::TypeMismatch { .. })));
    }

    #[test]
    fn empty_problem() {
        let p = parse_problem("(define (problem e) (:domain d) (:objects) (:init) (:goal (and)))").unwrap();
        assert!(p.init.is_empty());
        assert!(p.goal.is_empty());
    }

    #[test]
    fn delivery_p1_counts() {
        let p = parse_problem(fixtures::DELIVERY_P1).unwrap();
        assert_eq!(p.objects.len(), 5);
        assert_eq!(p.goal.len(), 1);
        assert_eq!(p.init.len(), 7);
    }

    #[test]
    fn goal_with_unknown_object() {
        let err = parse_problem("(define (problem e) (:domain d) (:objects a) (:init) (:goal (p zz)))").unwrap_err();
        assert!(matches!(&err, PddlError::Undeclared { kind: "object", name } if name == "zz"));
        assert!(err.to_string().contains("zz"));
    }

    #[test]
    fn pretty_print_roundtrip_fixtures() {
        for text in [fixtures::DELIVERY_DOMAIN, fixtures::MATCHCELLAR_DOMAIN, fixtures::TRAP_DOMAIN, fixtures::COURIER_DOMAIN] {
            let d = parse_domain(text).unwrap();
            let again = parse_domain(&d.to_string()).unwrap();
            assert_eq!(d, again);
        }
        let p = parse_problem(fixtures::DELIVERY_P1).unwrap();
        assert_eq!(parse_problem(&p.to_string()).unwrap(), p);
    }
}
