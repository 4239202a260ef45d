use std::collections::HashMap;
use std::sync::Arc;

use num_traits::ToPrimitive;

use super::*;
use crate::pddl::{ArithExpr, Atom, LiftedCondition, LiftedDomain, LiftedEffect, LiftedProblem, Term, TOTAL_COST};

struct Grounder<'a> {
    domain: &'a LiftedDomain,
    objects: Vec<ObjectInfo>,
    object_index: HashMap<&'a str, u32>,
    symbols: HashMap<&'a str, Arc<str>>,
    atoms: Vec<GroundSymbol>,
    atom_index: HashMap<GroundSymbol, u32>,
    fluent_index: HashMap<GroundSymbol, u32>,
}

fn ratio_to_f64(r: &num_rational::Rational64) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

impl<'a> Grounder<'a> {
    fn symbol(&mut self, name: &'a str) -> Arc<str> {
        self.symbols.entry(name).or_insert_with(|| Arc::from(name)).clone()
    }

    fn objects_of_type(&self, ty: &str) -> Vec<u32> {
        (0..self.objects.len() as u32).filter(|&o| self.domain.is_subtype(&self.objects[o as usize].ty, ty)).collect()
    }

    fn resolve(&self, atom: &'a Atom, binding: &HashMap<&str, u32>) -> Vec<u32> {
        atom.args
            .iter()
            .map(|t| match t {
                Term::Var(v) => binding[v.as_str()],
                Term::Object(o) => self.object_index[o.as_str()],
            })
            .collect()
    }

    fn name_of(&self, s: &GroundSymbol) -> String {
        let mut out = format!("({}", s.symbol);
        for &a in &s.args {
            out.push(' ');
            out.push_str(&self.objects[a as usize].name);
        }
        out + ")"
    }

    fn atom_var(&mut self, atom: &'a Atom, binding: &HashMap<&str, u32>) -> u32 {
        let key = GroundSymbol { symbol: self.symbol(&atom.symbol), args: self.resolve(atom, binding) };
        if let Some(&i) = self.atom_index.get(&key) {
            return i;
        }
        // Atoms outside the type-respecting enumeration get appended.
        let i = self.atoms.len() as u32;
        self.atoms.push(key.clone());
        self.atom_index.insert(key, i);
        i
    }

    fn fluent_var(&mut self, atom: &'a Atom, binding: &HashMap<&str, u32>) -> Result<u32, TaskError> {
        let key = GroundSymbol { symbol: self.symbol(&atom.symbol), args: self.resolve(atom, binding) };
        self.fluent_index.get(&key).copied().ok_or_else(|| TaskError::UndefinedFluent(self.name_of(&key)))
    }

    fn expr(&mut self, e: &'a ArithExpr, binding: &HashMap<&str, u32>) -> Result<GroundExpr, TaskError> {
        Ok(match e {
            ArithExpr::Const(c) => GroundExpr::Const(ratio_to_f64(c)),
            ArithExpr::Fluent(a) => GroundExpr::Var(self.fluent_var(a, binding)?),
            ArithExpr::Neg(e) => GroundExpr::Neg(Box::new(self.expr(e, binding)?)),
            ArithExpr::Binary(op, l, r) => {
                GroundExpr::Binary(*op, Box::new(self.expr(l, binding)?), Box::new(self.expr(r, binding)?))
            }
        })
    }

    fn condition(
        &mut self,
        c: &'a LiftedCondition,
        binding: &HashMap<&str, u32>,
    ) -> Result<GroundCondition, TaskError> {
        Ok(match c {
            LiftedCondition::Literal { atom, positive } => {
                GroundCondition::Prop { var: self.atom_var(atom, binding), positive: *positive }
            }
            LiftedCondition::Numeric { cmp, lhs, rhs } => {
                GroundCondition::Numeric { cmp: *cmp, lhs: self.expr(lhs, binding)?, rhs: self.expr(rhs, binding)? }
            }
        })
    }
}

/// Cartesian product of candidate lists, last position varying fastest.
fn bindings(candidates: &[Vec<u32>]) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for cands in candidates {
        let mut next = Vec::with_capacity(out.len() * cands.len());
        for prefix in &out {
            for &c in cands {
                let mut b = prefix.clone();
                b.push(c);
                next.push(b);
            }
        }
        out = next;
    }
    out
}

/// Instantiates every schema with every type-respecting parameter binding.
///
/// Same-typed parameters may bind the same object. A binding whose numeric
/// effects collide on one fluent is dropped with a warning.
pub fn ground(domain: &LiftedDomain, problem: &LiftedProblem) -> Result<GroundTask, TaskError> {
    let mut g = Grounder {
        domain,
        objects: Vec::new(),
        object_index: HashMap::new(),
        symbols: HashMap::new(),
        atoms: Vec::new(),
        atom_index: HashMap::new(),
        fluent_index: HashMap::new(),
    };
    let all_objects = domain.constants.iter().map(|c| (c, true)).chain(problem.objects.iter().map(|o| (o, false)));
    for (o, is_constant) in all_objects {
        g.object_index.insert(&o.name, g.objects.len() as u32);
        g.objects.push(ObjectInfo { name: Arc::from(o.name.as_str()), ty: Arc::from(o.ty.as_str()), is_constant });
    }

    for p in &domain.predicates {
        let symbol = g.symbol(&p.name);
        let cands: Vec<Vec<u32>> = p.params.iter().map(|t| g.objects_of_type(&t.ty)).collect();
        for args in bindings(&cands) {
            let key = GroundSymbol { symbol: symbol.clone(), args };
            let i = g.atoms.len() as u32;
            g.atoms.push(key.clone());
            g.atom_index.insert(key, i);
        }
    }

    let mut fluents = Vec::new();
    let mut values = Vec::new();
    for (f, v) in &problem.init_numeric {
        if f.symbol == TOTAL_COST && f.args.is_empty() {
            continue;
        }
        let key = GroundSymbol {
            symbol: g.symbol(&f.symbol),
            args: f.args.iter().map(|a| g.object_index[a.as_str()]).collect(),
        };
        g.fluent_index.insert(key.clone(), fluents.len() as u32);
        fluents.push(key);
        values.push(ratio_to_f64(v));
    }

    let mut actions = Vec::new();
    for (schema_idx, schema) in domain.schemata.iter().enumerate() {
        let cost_value = schema.cost.constant_value();
        let cands: Vec<Vec<u32>> = schema.params.iter().map(|t| g.objects_of_type(&t.ty)).collect();
        'binding: for args in bindings(&cands) {
            let binding: HashMap<&str, u32> =
                schema.params.iter().map(|p| p.name.as_str()).zip(args.iter().copied()).collect();
            let mut name = format!("({}", schema.name);
            for &a in &args {
                name.push(' ');
                name.push_str(&g.objects[a as usize].name);
            }
            name.push(')');

            let cost = match cost_value {
                Some(c) => ratio_to_f64(&c),
                None => return Err(TaskError::NonConstantCost(name)),
            };
            if cost < 0.0 {
                return Err(TaskError::NegativeCost(name));
            }

            let mut precondition = Vec::with_capacity(schema.precondition.len());
            for c in &schema.precondition {
                precondition.push(g.condition(c, &binding)?);
            }
            let mut adds = Vec::new();
            let mut deletes = Vec::new();
            let mut numeric_effects: Vec<NumericEffect> = Vec::new();
            for e in &schema.effects {
                match e {
                    LiftedEffect::Add(a) => {
                        let v = g.atom_var(a, &binding);
                        if !adds.contains(&v) {
                            adds.push(v);
                        }
                    }
                    LiftedEffect::Delete(a) => {
                        let v = g.atom_var(a, &binding);
                        if !deletes.contains(&v) {
                            deletes.push(v);
                        }
                    }
                    LiftedEffect::Numeric { op, fluent, expr } => {
                        let f = g.fluent_var(fluent, &binding)?;
                        let expr = g.expr(expr, &binding)?;
                        if numeric_effects.iter().any(|x| x.fluent == f) {
                            log::warn!("dropping {name}: two numeric effects on one fluent");
                            continue 'binding;
                        }
                        numeric_effects.push(NumericEffect { fluent: f, op: *op, expr });
                    }
                }
            }
            actions.push(GroundAction {
                name,
                schema: schema_idx,
                args,
                precondition,
                adds,
                deletes,
                numeric_effects,
                cost,
            });
        }
    }

    let empty = HashMap::new();
    let mut goal = Vec::with_capacity(problem.goal.len());
    for c in &problem.goal {
        goal.push(g.condition(c, &empty)?);
    }
    let init_vars: Vec<u32> = problem
        .init_atoms
        .iter()
        .map(|a| {
            let key = GroundSymbol {
                symbol: g.symbol(&a.symbol),
                args: a.args.iter().map(|x| g.object_index[x.as_str()]).collect(),
            };
            match g.atom_index.get(&key) {
                Some(&i) => i,
                None => {
                    let i = g.atoms.len() as u32;
                    g.atoms.push(key.clone());
                    g.atom_index.insert(key, i);
                    i
                }
            }
        })
        .collect();

    let mut initial = State::new(g.atoms.len(), values);
    for v in init_vars {
        initial.set(v as usize, true);
    }
    let action_index = actions.iter().enumerate().map(|(i, a)| (a.name.clone(), i)).collect();

    Ok(GroundTask {
        domain_name: domain.name.clone(),
        problem_name: problem.name.clone(),
        objects: g.objects,
        atoms: g.atoms,
        fluents,
        actions,
        initial,
        goal,
        action_index,
    })
}
