use std::collections::HashMap;

use super::{Bits, Clause, CondEffect, Dnf, Formula, GroundedAction, GroundedProblem, PlannerError};
use crate::pddl::{GroundAtom, ProblemInstance, State};
use crate::query_gen::{CompiledProblem, TwinAtom, TwinGrounding, TwinModel, TwinRole};

/// Atom layout of a grounded twin problem: the instance's ground atoms and
/// the guard for twin `i`, the same again for twin `j`, then the divergence
/// flag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwinAtomTable {
    base: Vec<GroundAtom>,
    index: HashMap<GroundAtom, usize>,
}

impl TwinAtomTable {
    pub fn new(instance: &ProblemInstance) -> Self {
        let base = instance.ground_atoms();
        let index = base.iter().cloned().enumerate().map(|(i, a)| (a, i)).collect();
        TwinAtomTable { base, index }
    }

    /// Ground atoms per twin copy, without the guard.
    pub fn base_len(&self) -> usize {
        self.base.len()
    }

    pub fn len(&self) -> usize {
        2 * (self.base.len() + 1) + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn offset(&self, role: TwinRole) -> usize {
        match role {
            TwinRole::I => 0,
            TwinRole::J => self.base.len() + 1,
        }
    }

    pub fn guard(&self, role: TwinRole) -> usize {
        self.offset(role) + self.base.len()
    }

    pub fn flag(&self) -> usize {
        2 * (self.base.len() + 1)
    }

    pub fn atom(&self, role: TwinRole, atom: &GroundAtom) -> Option<usize> {
        self.index.get(atom).map(|i| self.offset(role) + i)
    }

    fn twin_atom(&self, role: TwinRole, atom: &TwinAtom) -> usize {
        match atom {
            TwinAtom::Base(a) => self
                .atom(role, a)
                .expect("grounded action atoms use distinct, sort-compatible objects"),
            TwinAtom::Guard => self.guard(role),
        }
    }

    /// Both twin copies of `state`, guards and flag false.
    pub fn encode(&self, state: &State) -> Bits {
        let mut b = Bits::with_capacity(self.len());
        for a in state.iter() {
            if let Some(i) = self.index.get(a) {
                b.insert(self.offset(TwinRole::I) + i);
                b.insert(self.offset(TwinRole::J) + i);
            }
        }
        b
    }

    /// One twin's copy of a grounded state, with its guard.
    pub fn decode(&self, bits: &Bits, role: TwinRole) -> (State, bool) {
        let off = self.offset(role);
        let state = self
            .base
            .iter()
            .enumerate()
            .filter(|(i, _)| bits.contains(off + i))
            .map(|(_, a)| a.clone())
            .collect();
        (state, bits.contains(self.guard(role)))
    }

    pub fn names(&self, instance: &ProblemInstance) -> Vec<String> {
        let mut out = Vec::with_capacity(self.len());
        for role in [TwinRole::I, TwinRole::J] {
            for a in &self.base {
                let name = &instance.vocab().predicate(a.predicate).name;
                let s = instance.fmt_atom(a);
                out.push(format!("({}{}{}", name, role.suffix(), &s[1 + name.len()..]));
            }
            out.push(format!("(pu{})", role.suffix()));
        }
        out.push("(psi__)".into());
        out
    }
}

fn dnf(table: &TwinAtomTable, role: TwinRole, g: &TwinGrounding) -> Dnf {
    Dnf(g
        .pre
        .iter()
        .map(|clause| {
            let mut c = Clause::default();
            for (atom, sign) in clause {
                let i = table.twin_atom(role, atom);
                if *sign {
                    c.pos.push(i);
                } else {
                    c.neg.push(i);
                }
            }
            c
        })
        .filter(|c| !c.is_contradictory())
        .collect())
}

fn effects(table: &TwinAtomTable, role: TwinRole, g: &TwinGrounding, add: &mut Vec<usize>, del: &mut Vec<usize>) {
    for (atom, sign) in &g.eff {
        let i = table.twin_atom(role, atom);
        if *sign {
            add.push(i);
        } else {
            del.push(i);
        }
    }
}

/// Ground a twin problem over the instance's objects. Actions come out
/// sorted by action name, then object tuple.
pub fn ground(
    problem: &CompiledProblem,
    instance: &ProblemInstance,
    grounding_cap: usize,
) -> Result<(GroundedProblem, TwinAtomTable), PlannerError> {
    let table = TwinAtomTable::new(instance);
    let groundings = instance.all_groundings();
    if groundings.len() > grounding_cap {
        return Err(PlannerError::GroundingBlowup {
            count: groundings.len(),
            cap: grounding_cap,
        });
    }
    let twins: [(&TwinModel, TwinRole); 2] = [
        (&problem.twin_i, TwinRole::I),
        (&problem.twin_j, TwinRole::J),
    ];
    let mut actions = Vec::with_capacity(groundings.len());
    for ga in groundings {
        let parts: Vec<(Dnf, TwinGrounding)> = twins
            .iter()
            .map(|(t, r)| {
                let g = t.ground(&ga);
                (dnf(&table, *r, &g), g)
            })
            .collect();
        let (pre_i, pre_j) = (&parts[0].0, &parts[1].0);
        if pre_i.0.is_empty() && pre_j.0.is_empty() {
            continue;
        }
        let mut add = Vec::new();
        let mut del = Vec::new();
        effects(&table, TwinRole::I, &parts[0].1, &mut add, &mut del);
        effects(&table, TwinRole::J, &parts[1].1, &mut add, &mut del);
        let (fi, fj) = (pre_i.to_formula(), pre_j.to_formula());
        let mut pre = pre_i.clone();
        pre.0.extend(pre_j.0.iter().cloned());
        actions.push(GroundedAction {
            name: instance.fmt_action(&ga),
            label: ga,
            pre,
            effects: vec![
                CondEffect {
                    condition: Formula::And(vec![fi.clone(), fj.clone()]),
                    add,
                    del,
                },
                CondEffect {
                    condition: Formula::xor(fi, fj),
                    add: vec![table.flag()],
                    del: vec![],
                },
            ],
        });
    }
    let mut goal: Vec<Formula> = (0..=table.base_len())
        .map(|k| {
            Formula::xor(
                Formula::Atom(table.offset(TwinRole::I) + k),
                Formula::Atom(table.offset(TwinRole::J) + k),
            )
        })
        .collect();
    goal.push(Formula::Atom(table.flag()));
    let grounded = GroundedProblem {
        atoms: table.names(instance),
        actions,
        init: table.encode(&problem.init),
        goal: Formula::Or(goal),
    };
    Ok((grounded, table))
}
