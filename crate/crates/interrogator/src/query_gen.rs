//! Distinguishing-query synthesis.
//!
//! Two candidate models that differ in the mode of one pal tuple are turned
//! into guarded twins, and the twins are compiled into a single planning
//! problem whose goal is reached exactly when a plan makes the twins
//! disagree. A plan for that problem, together with its initial state, is a
//! plan-outcome query that can tell the candidates apart.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::agent::{PlanOutcomeQuery, QueryResponse};
use crate::pddl::{
    CanonicalAtom, GroundAction, GroundAtom, Location, Mode, Model, PalTuple, PddlError,
    ProblemInstance, State,
};
use crate::planner::{self, PlannerError, SearchLimits};

#[derive(Debug, Error)]
pub enum QueryGenError {
    #[error("twins need two different modes, got {0} twice")]
    SameMode(Mode),
    #[error(transparent)]
    Pddl(#[from] PddlError),
    #[error(transparent)]
    Planner(#[from] PlannerError),
    #[error("the state pool is empty")]
    EmptyPool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum TwinRole {
    I,
    J,
}

impl TwinRole {
    pub fn suffix(self) -> &'static str {
        match self {
            TwinRole::I => "__i",
            TwinRole::J => "__j",
        }
    }
}

/// An atom of a twin's grounded vocabulary: an ordinary atom or the guard.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TwinAtom {
    Base(GroundAtom),
    Guard,
}

/// Grounded behaviour of one twin action: a precondition in disjunctive
/// normal form and a plain effect list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwinGrounding {
    pub pre: Vec<Vec<(TwinAtom, bool)>>,
    pub eff: Vec<(TwinAtom, bool)>,
}

/// A candidate model extended with the nullary guard atom.
///
/// The guard literals come from which locations of the base model already
/// mention the refined atom: a positive guard goes on every untouched
/// location and a negative guard on every touched effect. When the refined
/// tuple is a precondition of action `a`, its literal is relaxed to
/// `literal ∨ guard` and the guard requirement on `a`'s precondition is
/// lifted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwinModel {
    role: TwinRole,
    model: Model,
    target: Option<(PalTuple, Mode)>,
    guards: BTreeMap<(usize, Location), bool>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwinResponse {
    /// The response with the guard atom removed.
    pub response: QueryResponse,
    pub guard: bool,
}

impl TwinModel {
    /// A twin without guards; it behaves exactly like `model`.
    pub fn unguarded(model: Model, role: TwinRole) -> Self {
        TwinModel {
            role,
            model,
            target: None,
            guards: BTreeMap::new(),
        }
    }

    pub fn role(&self) -> TwinRole {
        self.role
    }

    /// The model the learner sees, without any guard.
    pub fn learner_model(&self) -> &Model {
        &self.model
    }

    pub fn target(&self) -> Option<&(PalTuple, Mode)> {
        self.target.as_ref()
    }

    /// Guard sign per (action, location).
    pub fn guards(&self) -> &BTreeMap<(usize, Location), bool> {
        &self.guards
    }

    fn relaxed_target(&self, action: usize) -> Option<(&PalTuple, bool)> {
        match &self.target {
            Some((pal, mode)) if pal.location == Location::Pre && pal.action == action => {
                mode.sign().map(|s| (pal, s))
            }
            _ => None,
        }
    }

    fn is_target_pre(&self, pal_action: usize, atom: &crate::pddl::LiftedAtom) -> bool {
        matches!(&self.target, Some((p, _))
            if p.location == Location::Pre && p.action == pal_action && &p.atom == atom)
    }

    pub fn ground(&self, ga: &GroundAction) -> TwinGrounding {
        let a = ga.action;
        let mut base: Vec<(TwinAtom, bool)> = self
            .model
            .literals(a, Location::Pre)
            .filter(|(atom, _)| !self.is_target_pre(a, atom))
            .map(|(atom, s)| (TwinAtom::Base(atom.ground(&ga.args)), s))
            .collect();
        if let Some(&g) = self.guards.get(&(a, Location::Pre)) {
            base.push((TwinAtom::Guard, g));
        }
        let pre = match self.relaxed_target(a) {
            Some((pal, sign)) => {
                let mut with_literal = base.clone();
                with_literal.push((TwinAtom::Base(pal.atom.ground(&ga.args)), sign));
                let mut with_guard = base;
                with_guard.push((TwinAtom::Guard, true));
                vec![with_literal, with_guard]
            }
            None => vec![base],
        };
        let mut eff: Vec<(TwinAtom, bool)> = self
            .model
            .literals(a, Location::Eff)
            .map(|(atom, s)| (TwinAtom::Base(atom.ground(&ga.args)), s))
            .collect();
        if let Some(&g) = self.guards.get(&(a, Location::Eff)) {
            eff.push((TwinAtom::Guard, g));
        }
        TwinGrounding { pre, eff }
    }

    pub fn successor(&self, state: &State, guard: bool, ga: &GroundAction) -> Option<(State, bool)> {
        let g = self.ground(ga);
        let holds = |(atom, sign): &(TwinAtom, bool)| match atom {
            TwinAtom::Base(b) => state.contains(b) == *sign,
            TwinAtom::Guard => guard == *sign,
        };
        if !g.pre.iter().any(|clause| clause.iter().all(holds)) {
            return None;
        }
        let mut next = state.clone();
        let mut next_guard = guard;
        for (atom, sign) in g.eff.iter().filter(|(_, s)| !s) {
            match atom {
                TwinAtom::Base(b) => {
                    next.remove(b);
                }
                TwinAtom::Guard => next_guard = *sign,
            }
        }
        for (atom, _) in g.eff.iter().filter(|(_, s)| *s) {
            match atom {
                TwinAtom::Base(b) => {
                    next.insert(b.clone());
                }
                TwinAtom::Guard => next_guard = true,
            }
        }
        Some((next, next_guard))
    }

    /// Run a query from a guard-false initial state.
    pub fn respond(&self, query: &PlanOutcomeQuery) -> TwinResponse {
        let mut state = query.init.clone();
        let mut guard = false;
        for (k, ga) in query.plan.iter().enumerate() {
            match self.successor(&state, guard, ga) {
                Some((s, g)) => {
                    state = s;
                    guard = g;
                }
                None => {
                    return TwinResponse {
                        response: QueryResponse {
                            prefix_len: k,
                            final_state: state,
                        },
                        guard,
                    }
                }
            }
        }
        TwinResponse {
            response: QueryResponse {
                prefix_len: query.plan.len(),
                final_state: state,
            },
            guard,
        }
    }
}

/// Locations of `base` that mention the same action-independent atom as `pal`.
fn touching(base: &Model, target: &CanonicalAtom) -> BTreeSet<(usize, Location)> {
    let vocab = base.vocab();
    base.palms()
        .keys()
        .filter(|p| &vocab.canonical_atom(p.action, &p.atom) == target)
        .map(|p| (p.action, p.location))
        .collect()
}

/// Guarded twins `base ∪ {⟨pal, mode_i⟩}` and `base ∪ {⟨pal, mode_j⟩}`.
pub fn build_twins(
    base: &Model,
    pal: &PalTuple,
    mode_i: Mode,
    mode_j: Mode,
) -> Result<(TwinModel, TwinModel), QueryGenError> {
    if mode_i == mode_j {
        return Err(QueryGenError::SameMode(mode_i));
    }
    let vocab = base.vocab();
    let target = vocab.canonical_atom(pal.action, &pal.atom);
    let touched = touching(base, &target);
    let mut guards = BTreeMap::new();
    for a in 0..vocab.actions().len() {
        for loc in Location::ALL {
            let is_target_slot = pal.location == Location::Pre && loc == Location::Pre && a == pal.action;
            if !touched.contains(&(a, loc)) {
                if !is_target_slot {
                    guards.insert((a, loc), true);
                }
            } else if loc == Location::Eff {
                guards.insert((a, loc), false);
            }
        }
    }
    let make = |mode: Mode, role: TwinRole| -> Result<TwinModel, QueryGenError> {
        let model = crate::model_space::refine(base, pal, mode)?;
        Ok(TwinModel {
            role,
            model,
            target: Some((pal.clone(), mode)),
            guards: guards.clone(),
        })
    };
    let twins = (make(mode_i, TwinRole::I)?, make(mode_j, TwinRole::J)?);
    for t in [&twins.0, &twins.1] {
        for (a, header) in vocab.actions().iter().enumerate() {
            let g = t.guards.get(&(a, Location::Pre));
            let has_neg_guard = g == Some(&false);
            if has_neg_guard && t.relaxed_target(a).is_some() {
                log::warn!("twin precondition of `{}` requires and forbids the guard", header.name);
            }
        }
    }
    Ok(twins)
}

/// The twin problem before grounding: two guarded twins and a shared
/// initial state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompiledProblem {
    pub twin_i: TwinModel,
    pub twin_j: TwinModel,
    pub init: State,
}

pub fn compile_ppo(twin_i: TwinModel, twin_j: TwinModel, init: State) -> CompiledProblem {
    CompiledProblem {
        twin_i,
        twin_j,
        init,
    }
}

impl CompiledProblem {
    /// Lifted domain and grounded problem text for external cross-checks.
    pub fn to_pddl(&self, instance: &ProblemInstance) -> (String, String) {
        let vocab = self.twin_i.model.vocab();
        let mut d = String::new();
        let _ = writeln!(d, "(define (domain {}-twins)", vocab.name);
        let _ = writeln!(
            d,
            "  (:requirements :strips{} :negative-preconditions :disjunctive-preconditions :conditional-effects)",
            if vocab.typed { " :typing" } else { "" }
        );
        if vocab.typed {
            let decl: Vec<String> = vocab.types.declared().map(|(t, p)| format!("{t} - {p}")).collect();
            if !decl.is_empty() {
                let _ = writeln!(d, "  (:types {})", decl.join(" "));
            }
        }
        d.push_str("  (:predicates");
        for role in [TwinRole::I, TwinRole::J] {
            for p in vocab.predicates() {
                let _ = write!(d, "\n    ({}{}", p.name, role.suffix());
                for (k, s) in p.sorts.iter().enumerate() {
                    if vocab.typed {
                        let _ = write!(d, " ?x{} - {s}", k + 1);
                    } else {
                        let _ = write!(d, " ?x{}", k + 1);
                    }
                }
                d.push(')');
            }
            let _ = write!(d, "\n    (pu{})", role.suffix());
        }
        d.push_str("\n    (psi__))\n");

        let lit = |t: &TwinModel, a: usize, atom: &TwinAtomLifted, sign: bool| {
            let body = match atom {
                TwinAtomLifted::Base(l) => {
                    let mut s = format!("({}{}", vocab.predicate(l.predicate).name, t.role.suffix());
                    for &k in &l.args {
                        let _ = write!(s, " ?{}", vocab.action(a).params[k].name);
                    }
                    s.push(')');
                    s
                }
                TwinAtomLifted::Guard => format!("(pu{})", t.role.suffix()),
            };
            if sign {
                body
            } else {
                format!("(not {body})")
            }
        };
        let mut order: Vec<usize> = (0..vocab.actions().len()).collect();
        order.sort_by(|x, y| vocab.action(*x).name.cmp(&vocab.action(*y).name));
        for a in order {
            let header = vocab.action(a);
            let params: Vec<String> = header
                .params
                .iter()
                .map(|p| if vocab.typed { format!("?{} - {}", p.name, p.sort) } else { format!("?{}", p.name) })
                .collect();
            let pre_of = |t: &TwinModel| {
                let clauses: Vec<String> = t
                    .lifted_pre(a)
                    .iter()
                    .map(|c| {
                        let parts: Vec<String> = c.iter().map(|(at, s)| lit(t, a, at, *s)).collect();
                        format!("(and {})", parts.join(" "))
                    })
                    .collect();
                format!("(or {})", clauses.join(" "))
            };
            let eff_of = |t: &TwinModel| {
                t.lifted_eff(a)
                    .iter()
                    .map(|(at, s)| lit(t, a, at, *s))
                    .collect::<Vec<_>>()
                    .join(" ")
            };
            let (pi, pj) = (pre_of(&self.twin_i), pre_of(&self.twin_j));
            let _ = writeln!(d, "  (:action {}", header.name);
            let _ = writeln!(d, "    :parameters ({})", params.join(" "));
            let _ = writeln!(d, "    :precondition (or {pi} {pj})");
            let _ = writeln!(
                d,
                "    :effect (and (when (and {pi} {pj}) (and {} {}))\n                 (when (or (and {pi} (not {pj})) (and (not {pi}) {pj})) (psi__))))",
                eff_of(&self.twin_i),
                eff_of(&self.twin_j)
            );
        }
        d.push_str(")\n");

        let mut p = String::new();
        let _ = writeln!(p, "(define (problem {}-query)", instance.name);
        let _ = writeln!(p, "  (:domain {}-twins)", vocab.name);
        let objs: Vec<String> = instance
            .objects()
            .iter()
            .map(|o| if vocab.typed { format!("{} - {}", o.name, o.sort) } else { o.name.clone() })
            .collect();
        let _ = writeln!(p, "  (:objects {})", objs.join(" "));
        let suffixed = |atom: &GroundAtom, role: TwinRole| {
            let s = instance.fmt_atom(atom);
            let name = &vocab.predicate(atom.predicate).name;
            format!("({}{}{}", name, role.suffix(), &s[1 + name.len()..])
        };
        let init: Vec<String> = [TwinRole::I, TwinRole::J]
            .iter()
            .flat_map(|r| self.init.iter().map(move |a| suffixed(a, *r)))
            .collect();
        let _ = writeln!(p, "  (:init {})", init.join(" "));
        let mut goal: Vec<String> = instance
            .ground_atoms()
            .iter()
            .map(|a| {
                let (i, j) = (suffixed(a, TwinRole::I), suffixed(a, TwinRole::J));
                format!("(and {i} (not {j})) (and (not {i}) {j})")
            })
            .collect();
        goal.push("(and (pu__i) (not (pu__j))) (and (not (pu__i)) (pu__j))".into());
        goal.push("(psi__)".into());
        let _ = writeln!(p, "  (:goal (or {})))", goal.join("\n    "));
        (d, p)
    }
}

enum TwinAtomLifted {
    Base(crate::pddl::LiftedAtom),
    Guard,
}

impl TwinModel {
    fn lifted_pre(&self, a: usize) -> Vec<Vec<(TwinAtomLifted, bool)>> {
        let mut base: Vec<(TwinAtomLifted, bool)> = self
            .model
            .literals(a, Location::Pre)
            .filter(|(atom, _)| !self.is_target_pre(a, atom))
            .map(|(atom, s)| (TwinAtomLifted::Base(atom.clone()), s))
            .collect();
        if let Some(&g) = self.guards.get(&(a, Location::Pre)) {
            base.push((TwinAtomLifted::Guard, g));
        }
        match self.relaxed_target(a) {
            Some((pal, sign)) => {
                let mut with_guard: Vec<(TwinAtomLifted, bool)> = base
                    .iter()
                    .map(|(at, s)| match at {
                        TwinAtomLifted::Base(l) => (TwinAtomLifted::Base(l.clone()), *s),
                        TwinAtomLifted::Guard => (TwinAtomLifted::Guard, *s),
                    })
                    .collect();
                with_guard.push((TwinAtomLifted::Guard, true));
                base.push((TwinAtomLifted::Base(pal.atom.clone()), sign));
                vec![base, with_guard]
            }
            None => vec![base],
        }
    }

    fn lifted_eff(&self, a: usize) -> Vec<(TwinAtomLifted, bool)> {
        let mut eff: Vec<(TwinAtomLifted, bool)> = self
            .model
            .literals(a, Location::Eff)
            .map(|(atom, s)| (TwinAtomLifted::Base(atom.clone()), s))
            .collect();
        if let Some(&g) = self.guards.get(&(a, Location::Eff)) {
            eff.push((TwinAtomLifted::Guard, g));
        }
        eff
    }
}

/// Result of a query search for one pal tuple and mode pair.
#[derive(Debug, Clone)]
pub struct GeneratedQuery {
    pub query: Option<PlanOutcomeQuery>,
    /// `base ∪ {⟨pal, mode_i⟩}` without guards.
    pub model_i: Model,
    /// `base ∪ {⟨pal, mode_j⟩}` without guards.
    pub model_j: Model,
    pub twin_i: TwinModel,
    pub twin_j: TwinModel,
}

/// Search the pool for a plan that makes the guarded twins disagree. All
/// pool states are searched together, so the plan returned is a shortest one
/// over the whole pool; ties go to the earlier pool state.
pub fn generate_query(
    base: &Model,
    mode_i: Mode,
    mode_j: Mode,
    pal: &PalTuple,
    states: &[State],
    instance: &ProblemInstance,
    limits: &SearchLimits,
    grounding_cap: usize,
) -> Result<GeneratedQuery, QueryGenError> {
    if states.is_empty() {
        return Err(QueryGenError::EmptyPool);
    }
    let (twin_i, twin_j) = build_twins(base, pal, mode_i, mode_j)?;
    let compiled = compile_ppo(twin_i, twin_j, states[0].clone());
    let (grounded, table) = planner::ground(&compiled, instance, grounding_cap)?;
    let inits: Vec<_> = states.iter().map(|s| table.encode(s)).collect();
    let found = planner::solve_from(&grounded, &inits, limits)?;
    let query = found.map(|(k, plan)| PlanOutcomeQuery {
        init: states[k].clone(),
        plan: plan.iter().map(|&a| grounded.actions[a].label.clone()).collect(),
    });
    let CompiledProblem { twin_i, twin_j, .. } = compiled;
    Ok(GeneratedQuery {
        query,
        model_i: twin_i.model.clone(),
        model_j: twin_j.model.clone(),
        twin_i,
        twin_j,
    })
}
