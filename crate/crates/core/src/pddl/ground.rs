use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use super::ast::*;
use super::PddlError;
use crate::task::{ActionId, AtomId, Fluents, Goal, GroundDurativeAction, GroundedTask, Literal};

type GroundAtom = (String, Vec<String>);

struct Binder<'a> {
    schema: &'a ActionSchema,
    /// static literals of the schema, checked as soon as their args are bound
    statics: Vec<&'a LiteralExpr>,
    init: &'a HashSet<GroundAtom>,
}

impl Binder<'_> {
    fn substitute(&self, atom: &AtomExpr, binding: &[&str]) -> Option<GroundAtom> {
        let mut args = Vec::with_capacity(atom.args.len());
        for a in &atom.args {
            let idx = self.schema.params.iter().position(|p| &p.name == a)?;
            args.push(binding.get(idx)?.to_string());
        }
        Some((atom.predicate.clone(), args))
    }

    /// False when some fully bound static literal cannot hold.
    fn statics_ok(&self, binding: &[&str]) -> bool {
        self.statics.iter().all(|lit| match self.substitute(&lit.atom, binding) {
            Some(g) => self.init.contains(&g) == lit.positive,
            None => true,
        })
    }
}

/// Grounds every type-consistent binding of every schema, in lexicographic
/// order of (schema name, object tuple), pruning bindings whose static
/// conditions are false in the initial state.
pub fn ground(domain: &DomainAst, problem: &ProblemAst) -> Result<GroundedTask, PddlError> {
    if !problem.domain.is_empty() && problem.domain != domain.name {
        return Err(PddlError::TypeMismatch {
            context: format!("problem `{}`", problem.name),
            message: format!("declared for domain `{}`, got `{}`", problem.domain, domain.name),
        });
    }
    let mut object_types: HashMap<&str, &str> = HashMap::new();
    for o in &problem.objects {
        if !domain.has_type(&o.ty) {
            return Err(PddlError::Undeclared { kind: "type", name: o.ty.clone() });
        }
        object_types.insert(&o.name, &o.ty);
    }
    let check_atom = |atom: &AtomExpr| -> Result<(), PddlError> {
        let decl = domain
            .predicate(&atom.predicate)
            .ok_or_else(|| PddlError::Undeclared { kind: "predicate", name: atom.predicate.clone() })?;
        if decl.params.len() != atom.args.len() {
            return Err(PddlError::TypeMismatch {
                context: format!("{atom}"),
                message: format!("`{}` expects {} arguments", atom.predicate, decl.params.len()),
            });
        }
        for (arg, prm) in atom.args.iter().zip(&decl.params) {
            let ty = object_types
                .get(arg.as_str())
                .ok_or_else(|| PddlError::Undeclared { kind: "object", name: arg.clone() })?;
            if !domain.is_subtype(ty, &prm.ty) {
                return Err(PddlError::TypeMismatch {
                    context: format!("{atom}"),
                    message: format!("object `{arg}` of type `{ty}` where `{}` is expected", prm.ty),
                });
            }
        }
        Ok(())
    };
    for a in &problem.init {
        check_atom(a)?;
    }
    for l in &problem.goal {
        check_atom(&l.atom)?;
    }

    let init: HashSet<GroundAtom> =
        problem.init.iter().map(|a| (a.predicate.clone(), a.args.clone())).collect();
    let fluent_preds: HashSet<&str> = domain
        .durative_actions
        .iter()
        .flat_map(|a| a.eff_start.iter().chain(&a.eff_end))
        .map(|l| l.atom.predicate.as_str())
        .collect();

    let mut objects: Vec<&TypedName> = problem.objects.iter().collect();
    objects.sort_by(|a, b| a.name.cmp(&b.name));

    let mut schemas: Vec<&ActionSchema> = domain.durative_actions.iter().collect();
    schemas.sort_by(|a, b| a.name.cmp(&b.name));

    struct Proto<'s> {
        schema: &'s ActionSchema,
        args: Vec<String>,
        lits: [Vec<(GroundAtom, bool)>; 5],
    }
    let mut protos: Vec<Proto> = Vec::new();
    for schema in schemas {
        let candidates: Vec<Vec<&str>> = schema
            .params
            .iter()
            .map(|p| {
                objects
                    .iter()
                    .filter(|o| domain.is_subtype(&o.ty, &p.ty))
                    .map(|o| o.name.as_str())
                    .collect()
            })
            .collect();
        let binder = Binder {
            schema,
            statics: schema
                .cond_start
                .iter()
                .chain(&schema.cond_overall)
                .chain(&schema.cond_end)
                .filter(|l| !fluent_preds.contains(l.atom.predicate.as_str()))
                .collect(),
            init: &init,
        };
        let mut bindings = Vec::new();
        enumerate(&binder, &candidates, &mut Vec::new(), &mut bindings);
        for binding in bindings {
            let ground_lits = |lits: &[LiteralExpr]| -> Vec<(GroundAtom, bool)> {
                lits.iter()
                    .filter_map(|l| binder.substitute(&l.atom, &binding).map(|g| (g, l.positive)))
                    .collect()
            };
            protos.push(Proto {
                schema,
                args: binding.iter().map(|s| s.to_string()).collect(),
                lits: [
                    ground_lits(&schema.cond_start),
                    ground_lits(&schema.cond_overall),
                    ground_lits(&schema.cond_end),
                    ground_lits(&schema.eff_start),
                    ground_lits(&schema.eff_end),
                ],
            });
        }
    }

    let mut universe: BTreeSet<GroundAtom> = init.iter().cloned().collect();
    universe.extend(problem.goal.iter().map(|l| (l.atom.predicate.clone(), l.atom.args.clone())));
    for p in &protos {
        for set in &p.lits {
            universe.extend(set.iter().map(|(g, _)| g.clone()));
        }
    }
    let atoms: Vec<GroundAtom> = universe.into_iter().collect();
    let index: BTreeMap<&GroundAtom, AtomId> =
        atoms.iter().enumerate().map(|(i, a)| (a, AtomId(i as u32))).collect();

    let to_lits = |set: &[(GroundAtom, bool)]| -> Vec<Literal> {
        let s: BTreeSet<Literal> =
            set.iter().map(|(g, pos)| Literal { atom: index[g], positive: *pos }).collect();
        s.into_iter().collect()
    };
    let to_atoms = |set: &[(GroundAtom, bool)], positive: bool| -> Vec<AtomId> {
        let s: BTreeSet<AtomId> =
            set.iter().filter(|(_, p)| *p == positive).map(|(g, _)| index[g]).collect();
        s.into_iter().collect()
    };

    let actions: Vec<GroundDurativeAction> = protos
        .iter()
        .enumerate()
        .map(|(i, p)| GroundDurativeAction {
            id: ActionId(i as u32),
            schema: p.schema.name.clone(),
            args: p.args.clone(),
            duration: p.schema.duration,
            cond_start: to_lits(&p.lits[0]),
            cond_overall: to_lits(&p.lits[1]),
            cond_end: to_lits(&p.lits[2]),
            add_start: to_atoms(&p.lits[3], true),
            del_start: to_atoms(&p.lits[3], false),
            add_end: to_atoms(&p.lits[4], true),
            del_end: to_atoms(&p.lits[4], false),
        })
        .collect();

    let init_fluents: Fluents = init.iter().map(|g| index[g]).collect();
    let goal = Goal::new(problem.goal.iter().map(|l| Literal {
        atom: index[&(l.atom.predicate.clone(), l.atom.args.clone())],
        positive: l.positive,
    }));
    Ok(GroundedTask::new(atoms, actions, init_fluents, goal))
}

fn enumerate<'o>(
    binder: &Binder,
    candidates: &[Vec<&'o str>],
    partial: &mut Vec<&'o str>,
    out: &mut Vec<Vec<&'o str>>,
) {
    if partial.len() == candidates.len() {
        out.push(partial.clone());
        return;
    }
    for obj in &candidates[partial.len()] {
        partial.push(obj);
        if binder.statics_ok(partial) {
            enumerate(binder, candidates, partial, out);
        }
        partial.pop();
    }
}
