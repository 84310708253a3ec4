use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::sexpr::{self, Sexpr};
use super::vocab::Vocabulary;
use super::PddlError;

/// A predicate applied to objects; `args` index into the instance's objects.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroundAtom {
    pub predicate: usize,
    pub args: Vec<usize>,
}

/// Closed-world state: the set of true atoms.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct State(BTreeSet<GroundAtom>);

impl State {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn contains(&self, atom: &GroundAtom) -> bool {
        self.0.contains(atom)
    }

    pub fn insert(&mut self, atom: GroundAtom) -> bool {
        self.0.insert(atom)
    }

    pub fn remove(&mut self, atom: &GroundAtom) -> bool {
        self.0.remove(atom)
    }

    pub fn iter(&self) -> impl Iterator<Item = &GroundAtom> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_superset(&self, other: &State) -> bool {
        self.0.is_superset(&other.0)
    }

    pub fn atoms(&self) -> &BTreeSet<GroundAtom> {
        &self.0
    }
}

impl FromIterator<GroundAtom> for State {
    fn from_iter<I: IntoIterator<Item = GroundAtom>>(iter: I) -> Self {
        State(iter.into_iter().collect())
    }
}

/// An action name applied to objects.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroundAction {
    pub action: usize,
    pub args: Vec<usize>,
}

impl GroundAction {
    pub fn new(action: usize, args: Vec<usize>) -> Self {
        GroundAction { action, args }
    }

    pub fn has_distinct_args(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.args.iter().all(|a| seen.insert(*a))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Object {
    pub name: String,
    pub sort: String,
}

/// Objects and an initial state over a vocabulary. Objects are kept sorted by
/// name so that object index order is name order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemInstance {
    vocab: Arc<Vocabulary>,
    pub name: String,
    objects: Vec<Object>,
    init: State,
}

impl ProblemInstance {
    pub fn new(
        vocab: Arc<Vocabulary>,
        name: &str,
        mut objects: Vec<Object>,
        init_names: &[(String, Vec<String>)],
    ) -> Result<Self, PddlError> {
        objects.sort_by(|a, b| a.name.cmp(&b.name));
        for pair in objects.windows(2) {
            if pair[0].name == pair[1].name {
                return Err(PddlError::semantic(format!(
                    "object `{}` declared twice",
                    pair[0].name
                )));
            }
        }
        for o in &objects {
            if !vocab.types.contains(&o.sort) {
                return Err(PddlError::semantic(format!(
                    "object `{}` has undeclared type `{}`",
                    o.name, o.sort
                )));
            }
        }
        let mut inst = ProblemInstance {
            vocab,
            name: name.to_string(),
            objects,
            init: State::new(),
        };
        let init = init_names
            .iter()
            .map(|(p, args)| inst.atom_from_names(p, args))
            .collect::<Result<State, _>>()?;
        inst.init = init;
        Ok(inst)
    }

    pub fn vocab(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    pub fn objects(&self) -> &[Object] {
        &self.objects
    }

    pub fn init(&self) -> &State {
        &self.init
    }

    pub fn object_index(&self, name: &str) -> Option<usize> {
        self.objects.binary_search_by(|o| o.name.as_str().cmp(name)).ok()
    }

    fn fits(&self, object: usize, sort: &str) -> bool {
        self.vocab.types.is_subtype(&self.objects[object].sort, sort)
    }

    fn tuples(&self, sorts: &[String]) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut cur = Vec::with_capacity(sorts.len());
        self.extend_tuples(sorts, &mut cur, &mut out);
        out
    }

    fn extend_tuples(&self, sorts: &[String], cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == sorts.len() {
            out.push(cur.clone());
            return;
        }
        for o in 0..self.objects.len() {
            if cur.contains(&o) || !self.fits(o, &sorts[cur.len()]) {
                continue;
            }
            cur.push(o);
            self.extend_tuples(sorts, cur, out);
            cur.pop();
        }
    }

    /// Every application of `action` to pairwise distinct, sort-compatible
    /// objects, ordered by object tuple.
    pub fn groundings(&self, action: usize) -> Vec<GroundAction> {
        let sorts: Vec<String> = self
            .vocab
            .action(action)
            .params
            .iter()
            .map(|p| p.sort.clone())
            .collect();
        self.tuples(&sorts)
            .into_iter()
            .map(|args| GroundAction::new(action, args))
            .collect()
    }

    /// All groundings of all actions, ordered by (action name, object tuple).
    pub fn all_groundings(&self) -> Vec<GroundAction> {
        let mut order: Vec<usize> = (0..self.vocab.actions().len()).collect();
        order.sort_by(|a, b| self.vocab.action(*a).name.cmp(&self.vocab.action(*b).name));
        order.into_iter().flat_map(|a| self.groundings(a)).collect()
    }

    /// Every ground atom over pairwise distinct, sort-compatible objects.
    pub fn ground_atoms(&self) -> Vec<GroundAtom> {
        self.vocab
            .predicates()
            .iter()
            .enumerate()
            .flat_map(|(p, schema)| {
                self.tuples(&schema.sorts)
                    .into_iter()
                    .map(move |args| GroundAtom { predicate: p, args })
            })
            .collect()
    }

    pub fn atom_from_names(&self, predicate: &str, args: &[String]) -> Result<GroundAtom, PddlError> {
        let p = self
            .vocab
            .predicate_index(predicate)
            .ok_or_else(|| PddlError::semantic(format!("unknown predicate `{predicate}`")))?;
        let schema = self.vocab.predicate(p);
        if schema.arity() != args.len() {
            return Err(PddlError::semantic(format!(
                "predicate `{predicate}` expects {} arguments, got {}",
                schema.arity(),
                args.len()
            )));
        }
        let mut idx = Vec::with_capacity(args.len());
        for (name, sort) in args.iter().zip(&schema.sorts) {
            let o = self
                .object_index(name)
                .ok_or_else(|| PddlError::semantic(format!("unknown object `{name}`")))?;
            if !self.fits(o, sort) {
                return Err(PddlError::semantic(format!(
                    "object `{name}` is not of type `{sort}` in `{predicate}`"
                )));
            }
            if idx.contains(&o) {
                return Err(PddlError::semantic(format!(
                    "atom `{predicate}` repeats object `{name}`"
                )));
            }
            idx.push(o);
        }
        Ok(GroundAtom { predicate: p, args: idx })
    }

    pub fn action_from_names(&self, action: &str, args: &[String]) -> Result<GroundAction, PddlError> {
        let a = self
            .vocab
            .action_index(action)
            .ok_or_else(|| PddlError::semantic(format!("unknown action `{action}`")))?;
        let header = self.vocab.action(a);
        if header.arity() != args.len() {
            return Err(PddlError::Arity {
                action: action.to_string(),
                expected: header.arity(),
                found: args.len(),
            });
        }
        let mut idx = Vec::with_capacity(args.len());
        for (name, param) in args.iter().zip(&header.params) {
            let o = self
                .object_index(name)
                .ok_or_else(|| PddlError::semantic(format!("unknown object `{name}`")))?;
            if !self.fits(o, &param.sort) {
                return Err(PddlError::semantic(format!(
                    "object `{name}` is not of type `{}` in `{action}`",
                    param.sort
                )));
            }
            idx.push(o);
        }
        let ga = GroundAction::new(a, idx);
        if !ga.has_distinct_args() {
            return Err(PddlError::RepeatedObject {
                action: action.to_string(),
            });
        }
        Ok(ga)
    }

    /// Checks that an atom is well formed over this instance.
    pub fn check_atom(&self, atom: &GroundAtom) -> Result<(), PddlError> {
        let schema = self
            .vocab
            .predicates()
            .get(atom.predicate)
            .ok_or_else(|| PddlError::semantic(format!("unknown predicate index {}", atom.predicate)))?;
        let ok = schema.arity() == atom.args.len()
            && atom
                .args
                .iter()
                .zip(&schema.sorts)
                .all(|(&o, s)| o < self.objects.len() && self.fits(o, s));
        if ok {
            Ok(())
        } else {
            Err(PddlError::semantic(format!("malformed atom {atom:?}")))
        }
    }

    pub fn check_action(&self, ga: &GroundAction) -> Result<(), PddlError> {
        let header = self
            .vocab
            .actions()
            .get(ga.action)
            .ok_or_else(|| PddlError::semantic(format!("unknown action index {}", ga.action)))?;
        if header.arity() != ga.args.len() {
            return Err(PddlError::Arity {
                action: header.name.clone(),
                expected: header.arity(),
                found: ga.args.len(),
            });
        }
        if !ga
            .args
            .iter()
            .zip(&header.params)
            .all(|(&o, p)| o < self.objects.len() && self.fits(o, &p.sort))
        {
            return Err(PddlError::semantic(format!(
                "arguments of `{}` do not match its parameter types",
                header.name
            )));
        }
        if !ga.has_distinct_args() {
            return Err(PddlError::RepeatedObject {
                action: header.name.clone(),
            });
        }
        Ok(())
    }

    pub fn fmt_atom(&self, atom: &GroundAtom) -> String {
        let mut out = format!("({}", self.vocab.predicate(atom.predicate).name);
        for &o in &atom.args {
            let _ = write!(out, " {}", self.objects[o].name);
        }
        out.push(')');
        out
    }

    pub fn fmt_action(&self, ga: &GroundAction) -> String {
        let mut out = format!("({}", self.vocab.action(ga.action).name);
        for &o in &ga.args {
            let _ = write!(out, " {}", self.objects[o].name);
        }
        out.push(')');
        out
    }

    /// `((at b1 rooma) (free left))`, atoms in canonical order.
    pub fn fmt_state(&self, state: &State) -> String {
        let parts: Vec<String> = state.iter().map(|a| self.fmt_atom(a)).collect();
        format!("({})", parts.join(" "))
    }

    pub fn state_atoms(&self, state: &State) -> Vec<String> {
        state.iter().map(|a| self.fmt_atom(a)).collect()
    }

    fn words(e: &Sexpr) -> Result<(String, Vec<String>), PddlError> {
        let items = e.as_list().ok_or_else(|| PddlError::Syntax {
            pos: e.pos(),
            message: "expected a parenthesized atom".into(),
        })?;
        let mut names = items.iter().map(|i| {
            i.as_atom().map(str::to_string).ok_or_else(|| PddlError::Syntax {
                pos: i.pos(),
                message: "expected a name".into(),
            })
        });
        let head = names.next().ok_or_else(|| PddlError::Syntax {
            pos: e.pos(),
            message: "empty atom".into(),
        })??;
        Ok((head, names.collect::<Result<_, _>>()?))
    }

    pub fn parse_atom(&self, text: &str) -> Result<GroundAtom, PddlError> {
        let (p, args) = Self::words(&sexpr::read_one(text)?)?;
        self.atom_from_names(&p, &args)
    }

    pub fn parse_action(&self, text: &str) -> Result<GroundAction, PddlError> {
        let (a, args) = Self::words(&sexpr::read_one(text)?)?;
        self.action_from_names(&a, &args)
    }

    /// Inverse of [`ProblemInstance::fmt_state`].
    pub fn parse_state(&self, text: &str) -> Result<State, PddlError> {
        let e = sexpr::read_one(text)?;
        let items = e.as_list().ok_or_else(|| PddlError::Syntax {
            pos: e.pos(),
            message: "a state is a parenthesized list of atoms".into(),
        })?;
        items
            .iter()
            .map(|i| {
                let (p, args) = Self::words(i)?;
                self.atom_from_names(&p, &args)
            })
            .collect()
    }

    pub fn parse_state_atoms(&self, atoms: &[String]) -> Result<State, PddlError> {
        atoms.iter().map(|a| self.parse_atom(a)).collect()
    }
}
