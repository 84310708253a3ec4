use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::PddlError;

pub const ROOT_SORT: &str = "object";

/// Names containing this marker are reserved for compiled query problems.
pub const RESERVED_MARKER: &str = "__";

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeHierarchy {
    parent: BTreeMap<String, String>,
}

impl TypeHierarchy {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare(&mut self, name: &str, parent: &str) -> Result<(), PddlError> {
        if name == ROOT_SORT {
            return Ok(());
        }
        if let Some(existing) = self.parent.get(name) {
            if existing != parent {
                return Err(PddlError::semantic(format!(
                    "type `{name}` declared with parents `{existing}` and `{parent}`"
                )));
            }
            return Ok(());
        }
        self.parent.insert(name.to_string(), parent.to_string());
        Ok(())
    }

    pub fn contains(&self, sort: &str) -> bool {
        sort == ROOT_SORT || self.parent.contains_key(sort)
    }

    pub fn is_subtype(&self, sort: &str, of: &str) -> bool {
        let mut current = sort;
        for _ in 0..=self.parent.len() {
            if current == of {
                return true;
            }
            match self.parent.get(current) {
                Some(p) => current = p,
                None => return false,
            }
        }
        false
    }

    /// Declared (type, parent) pairs, sorted by type name.
    pub fn declared(&self) -> impl Iterator<Item = (&str, &str)> {
        self.parent.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    fn check(&self) -> Result<(), PddlError> {
        for (name, parent) in &self.parent {
            if !self.contains(parent) {
                return Err(PddlError::semantic(format!(
                    "type `{name}` has undeclared parent `{parent}`"
                )));
            }
            if !self.is_subtype(name, ROOT_SORT) {
                return Err(PddlError::semantic(format!("type `{name}` is part of a cycle")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PredicateSchema {
    pub name: String,
    pub sorts: Vec<String>,
}

impl PredicateSchema {
    pub fn new(name: &str, sorts: &[&str]) -> Self {
        PredicateSchema {
            name: name.to_string(),
            sorts: sorts.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn arity(&self) -> usize {
        self.sorts.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Parameter {
    pub name: String,
    pub sort: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ActionHeader {
    pub name: String,
    pub params: Vec<Parameter>,
}

impl ActionHeader {
    /// Build a header from `(name, sort)` pairs. Parameter names are given
    /// without the leading `?`.
    pub fn new(name: &str, params: &[(&str, &str)]) -> Self {
        ActionHeader {
            name: name.to_string(),
            params: params
                .iter()
                .map(|(n, s)| Parameter {
                    name: n.to_string(),
                    sort: s.to_string(),
                })
                .collect(),
        }
    }

    pub fn arity(&self) -> usize {
        self.params.len()
    }
}

/// A predicate applied to parameters of one action. `args[k]` is the
/// position of the action parameter filling slot `k`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LiftedAtom {
    pub predicate: usize,
    pub args: Vec<usize>,
}

/// Action-independent identity of a lifted atom. Each argument is named by
/// the sort of the parameter it binds and that parameter's rank among the
/// action's parameters of the same sort.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalAtom {
    pub predicate: usize,
    pub args: Vec<(String, usize)>,
}

/// Predicates, types and action headers shared by every model over a domain.
///
/// Predicates are kept sorted by name so that index order is name order.
/// Actions keep their declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub name: String,
    pub typed: bool,
    pub types: TypeHierarchy,
    predicates: Vec<PredicateSchema>,
    actions: Vec<ActionHeader>,
}

impl Vocabulary {
    pub fn new(
        name: &str,
        typed: bool,
        types: TypeHierarchy,
        mut predicates: Vec<PredicateSchema>,
        actions: Vec<ActionHeader>,
    ) -> Result<Self, PddlError> {
        types.check()?;
        predicates.sort_by(|a, b| a.name.cmp(&b.name));
        for pair in predicates.windows(2) {
            if pair[0].name == pair[1].name {
                return Err(PddlError::semantic(format!(
                    "predicate `{}` declared twice",
                    pair[0].name
                )));
            }
        }
        for p in &predicates {
            check_name(&p.name, "predicate")?;
            for s in &p.sorts {
                if !types.contains(s) {
                    return Err(PddlError::semantic(format!(
                        "predicate `{}` uses undeclared type `{s}`",
                        p.name
                    )));
                }
            }
        }
        let mut seen = BTreeSet::new();
        for a in &actions {
            check_name(&a.name, "action")?;
            if !seen.insert(a.name.as_str()) {
                return Err(PddlError::semantic(format!("action `{}` declared twice", a.name)));
            }
            let mut names = BTreeSet::new();
            for p in &a.params {
                if !names.insert(p.name.as_str()) {
                    return Err(PddlError::semantic(format!(
                        "action `{}` repeats parameter `?{}`",
                        a.name, p.name
                    )));
                }
                if !types.contains(&p.sort) {
                    return Err(PddlError::semantic(format!(
                        "action `{}` uses undeclared type `{}`",
                        a.name, p.sort
                    )));
                }
            }
        }
        Ok(Vocabulary {
            name: name.to_string(),
            typed,
            types,
            predicates,
            actions,
        })
    }

    pub fn predicates(&self) -> &[PredicateSchema] {
        &self.predicates
    }

    pub fn actions(&self) -> &[ActionHeader] {
        &self.actions
    }

    pub fn predicate(&self, idx: usize) -> &PredicateSchema {
        &self.predicates[idx]
    }

    pub fn action(&self, idx: usize) -> &ActionHeader {
        &self.actions[idx]
    }

    pub fn predicate_index(&self, name: &str) -> Option<usize> {
        self.predicates
            .binary_search_by(|p| p.name.as_str().cmp(name))
            .ok()
    }

    pub fn action_index(&self, name: &str) -> Option<usize> {
        self.actions.iter().position(|a| a.name == name)
    }

    /// Whether `atom` is a well-formed instantiation for action `action`.
    pub fn atom_fits(&self, action: usize, atom: &LiftedAtom) -> bool {
        let Some(header) = self.actions.get(action) else {
            return false;
        };
        let Some(schema) = self.predicates.get(atom.predicate) else {
            return false;
        };
        if schema.arity() != atom.args.len() {
            return false;
        }
        let mut used = BTreeSet::new();
        atom.args.iter().zip(&schema.sorts).all(|(&arg, sort)| {
            arg < header.arity()
                && used.insert(arg)
                && self.types.is_subtype(&header.params[arg].sort, sort)
        })
    }

    pub fn canonical_atom(&self, action: usize, atom: &LiftedAtom) -> CanonicalAtom {
        let params = &self.actions[action].params;
        let args = atom
            .args
            .iter()
            .map(|&k| {
                let sort = &params[k].sort;
                let rank = params[..k].iter().filter(|p| &p.sort == sort).count();
                (sort.clone(), rank)
            })
            .collect();
        CanonicalAtom {
            predicate: atom.predicate,
            args,
        }
    }

    /// Size of the action-independent pool of instantiated predicates.
    pub fn instantiated_predicate_count(&self) -> usize {
        let per_action = instantiate_predicates(self);
        per_action
            .iter()
            .enumerate()
            .flat_map(|(a, atoms)| atoms.iter().map(move |atom| self.canonical_atom(a, atom)))
            .collect::<BTreeSet<_>>()
            .len()
    }

    /// `(pred ?x ?y)` using the parameter names of `action`.
    pub fn fmt_atom(&self, action: usize, atom: &LiftedAtom) -> String {
        let header = &self.actions[action];
        let mut out = format!("({}", self.predicates[atom.predicate].name);
        for &a in &atom.args {
            let _ = write!(out, " ?{}", header.params[a].name);
        }
        out.push(')');
        out
    }

    /// Same predicates, types and action headers, regardless of the
    /// declaration order of actions.
    pub fn same_signature(&self, other: &Vocabulary) -> bool {
        let sorted = |v: &Vocabulary| {
            let mut a: Vec<_> = v.actions.clone();
            a.sort_by(|x, y| x.name.cmp(&y.name));
            a
        };
        self.types == other.types
            && self.predicates == other.predicates
            && sorted(self) == sorted(other)
    }
}

fn check_name(name: &str, what: &str) -> Result<(), PddlError> {
    if name.contains(RESERVED_MARKER) {
        return Err(PddlError::semantic(format!(
            "{what} name `{name}` uses the reserved marker `{RESERVED_MARKER}`"
        )));
    }
    Ok(())
}

/// Every way of filling each predicate's slots with pairwise distinct,
/// sort-compatible parameters of each action. Result is indexed by action;
/// within an action atoms are ordered by predicate name, then arguments.
pub fn instantiate_predicates(vocab: &Vocabulary) -> Vec<Vec<LiftedAtom>> {
    vocab
        .actions()
        .iter()
        .map(|header| {
            let mut atoms = Vec::new();
            for (pi, schema) in vocab.predicates().iter().enumerate() {
                let mut slots = Vec::with_capacity(schema.arity());
                fill_slots(vocab, header, schema, &mut slots, &mut |args| {
                    atoms.push(LiftedAtom {
                        predicate: pi,
                        args: args.to_vec(),
                    })
                });
            }
            atoms
        })
        .collect()
}

fn fill_slots(
    vocab: &Vocabulary,
    header: &ActionHeader,
    schema: &PredicateSchema,
    slots: &mut Vec<usize>,
    emit: &mut dyn FnMut(&[usize]),
) {
    if slots.len() == schema.arity() {
        emit(slots);
        return;
    }
    let want = &schema.sorts[slots.len()];
    for (k, p) in header.params.iter().enumerate() {
        if slots.contains(&k) || !vocab.types.is_subtype(&p.sort, want) {
            continue;
        }
        slots.push(k);
        fill_slots(vocab, header, schema, slots, emit);
        slots.pop();
    }
}
