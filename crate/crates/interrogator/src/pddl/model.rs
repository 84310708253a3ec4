use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::state::{GroundAction, GroundAtom, State};
use super::vocab::{LiftedAtom, Vocabulary};
use super::PddlError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Location {
    Pre,
    Eff,
}

impl Location {
    pub const ALL: [Location; 2] = [Location::Pre, Location::Eff];
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Location::Pre => "pre",
            Location::Eff => "eff",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Mode {
    Pos,
    Neg,
    Absent,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Pos, Mode::Neg, Mode::Absent];

    pub fn symbol(self) -> &'static str {
        match self {
            Mode::Pos => "+",
            Mode::Neg => "-",
            Mode::Absent => "0",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Mode> {
        match s {
            "+" => Some(Mode::Pos),
            "-" => Some(Mode::Neg),
            "0" => Some(Mode::Absent),
            _ => None,
        }
    }

    /// The literal sign this mode contributes, if any.
    pub fn sign(self) -> Option<bool> {
        match self {
            Mode::Pos => Some(true),
            Mode::Neg => Some(false),
            Mode::Absent => None,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Which action mentions which lifted atom at which location, without saying how.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PalTuple {
    pub action: usize,
    pub location: Location,
    pub atom: LiftedAtom,
}

impl PalTuple {
    pub fn new(action: usize, location: Location, atom: LiftedAtom) -> Self {
        PalTuple {
            action,
            location,
            atom,
        }
    }

    pub fn with_mode(&self, mode: Mode) -> PalmTuple {
        PalmTuple {
            pal: self.clone(),
            mode,
        }
    }

    /// `move pre (at-robby ?from)`
    pub fn display(&self, vocab: &Vocabulary) -> String {
        format!(
            "{} {} {}",
            vocab.action(self.action).name,
            self.location,
            vocab.fmt_atom(self.action, &self.atom)
        )
    }

    /// Inverse of [`PalTuple::display`].
    pub fn parse(vocab: &Vocabulary, text: &str) -> Result<PalTuple, PddlError> {
        let bad = || PddlError::semantic(format!("malformed pal tuple `{text}`"));
        let text = text.trim();
        let (action_name, rest) = text.split_once(' ').ok_or_else(bad)?;
        let (loc, atom_text) = rest.trim_start().split_once(' ').ok_or_else(bad)?;
        let action = vocab.action_index(action_name).ok_or_else(bad)?;
        let location = match loc {
            "pre" => Location::Pre,
            "eff" => Location::Eff,
            _ => return Err(bad()),
        };
        let inner = atom_text
            .trim()
            .strip_prefix('(')
            .and_then(|s| s.strip_suffix(')'))
            .ok_or_else(bad)?;
        let mut words = inner.split_whitespace();
        let predicate = vocab.predicate_index(words.next().ok_or_else(bad)?).ok_or_else(bad)?;
        let header = vocab.action(action);
        let args = words
            .map(|w| {
                let name = w.strip_prefix('?').ok_or_else(bad)?;
                header.params.iter().position(|p| p.name == name).ok_or_else(bad)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let atom = LiftedAtom { predicate, args };
        if !vocab.atom_fits(action, &atom) {
            return Err(bad());
        }
        Ok(PalTuple::new(action, location, atom))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PalmTuple {
    pub pal: PalTuple,
    pub mode: Mode,
}

impl PalmTuple {
    pub fn is_variant_of(&self, other: &PalmTuple) -> bool {
        self.pal == other.pal && self.mode != other.mode
    }
}

/// The map from pal tuples to modes that a model is made of.
pub type Palms = BTreeMap<PalTuple, Mode>;

/// Grounded preconditions and effects of one action application.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroundedStrips {
    pub pre: Vec<(GroundAtom, bool)>,
    pub eff: Vec<(GroundAtom, bool)>,
}

impl GroundedStrips {
    pub fn applicable(&self, state: &State) -> bool {
        self.pre.iter().all(|(a, v)| state.contains(a) == *v)
    }

    pub fn apply(&self, state: &State) -> State {
        let mut next = state.clone();
        for (a, v) in &self.eff {
            if !v {
                next.remove(a);
            }
        }
        for (a, v) in &self.eff {
            if *v {
                next.insert(a.clone());
            }
        }
        next
    }
}

/// A STRIPS action model, concrete or abstract: a vocabulary plus a set of
/// palm tuples holding at most one mode per pal tuple.
///
/// Pal tuples absent from the map are unexplored. Mode `Absent` entries are
/// explored and contribute no literal.
#[derive(Debug, Clone)]
pub struct Model {
    vocab: Arc<Vocabulary>,
    palms: Palms,
}

impl Model {
    pub fn empty(vocab: Arc<Vocabulary>) -> Self {
        Model {
            vocab,
            palms: Palms::new(),
        }
    }

    pub fn from_palms(vocab: Arc<Vocabulary>, palms: Palms) -> Result<Self, PddlError> {
        for pal in palms.keys() {
            check_pal(&vocab, pal)?;
        }
        Ok(Model { vocab, palms })
    }

    pub fn vocab(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    pub fn palms(&self) -> &Palms {
        &self.palms
    }

    pub fn into_palms(self) -> Palms {
        self.palms
    }

    pub fn mode_of(&self, pal: &PalTuple) -> Option<Mode> {
        self.palms.get(pal).copied()
    }

    pub fn contains(&self, palm: &PalmTuple) -> bool {
        self.mode_of(&palm.pal) == Some(palm.mode)
    }

    /// Add a palm tuple; fails if a variant of it is already present.
    pub fn insert(&mut self, palm: PalmTuple) -> Result<(), PddlError> {
        check_pal(&self.vocab, &palm.pal)?;
        match self.palms.get(&palm.pal) {
            Some(m) if *m != palm.mode => Err(PddlError::VariantConflict {
                pal: palm.pal.display(&self.vocab),
            }),
            _ => {
                self.palms.insert(palm.pal, palm.mode);
                Ok(())
            }
        }
    }

    pub fn remove(&mut self, pal: &PalTuple) -> Option<Mode> {
        self.palms.remove(pal)
    }

    /// Literals of `action` at `location`, skipping `Absent` entries.
    pub fn literals(
        &self,
        action: usize,
        location: Location,
    ) -> impl Iterator<Item = (&LiftedAtom, bool)> + '_ {
        self.palms
            .range(action_range(action, location))
            .filter_map(|(pal, mode)| mode.sign().map(|s| (&pal.atom, s)))
    }

    pub fn literal_count(&self) -> usize {
        self.palms.values().filter(|m| **m != Mode::Absent).count()
    }

    pub fn ground_action(&self, ga: &GroundAction) -> Result<GroundedStrips, PddlError> {
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
        if !ga.has_distinct_args() {
            return Err(PddlError::RepeatedObject {
                action: header.name.clone(),
            });
        }
        Ok(self.ground_unchecked(ga))
    }

    pub(crate) fn ground_unchecked(&self, ga: &GroundAction) -> GroundedStrips {
        let sub = |atom: &LiftedAtom| atom.ground(&ga.args);
        GroundedStrips {
            pre: self
                .literals(ga.action, Location::Pre)
                .map(|(a, s)| (sub(a), s))
                .collect(),
            eff: self
                .literals(ga.action, Location::Eff)
                .map(|(a, s)| (sub(a), s))
                .collect(),
        }
    }

    /// The state after applying `ga`, or `None` when it is not applicable.
    pub fn successor(&self, state: &State, ga: &GroundAction) -> Option<State> {
        let g = self.ground_unchecked(ga);
        g.applicable(state).then(|| g.apply(state))
    }

    /// Structural equality by names, tolerant of action declaration order.
    /// The same model over an equal-signature vocabulary whose actions may be
    /// declared in a different order.
    pub fn rebase(&self, vocab: Arc<Vocabulary>) -> Result<Model, PddlError> {
        if !self.vocab.same_signature(&vocab) {
            return Err(PddlError::semantic("vocabularies differ".to_string()));
        }
        let mut palms = Palms::new();
        for (pal, mode) in &self.palms {
            palms.insert(PalTuple::parse(&vocab, &pal.display(&self.vocab))?, *mode);
        }
        Model::from_palms(vocab, palms)
    }

    pub fn same_structure(&self, other: &Model) -> bool {
        if Arc::ptr_eq(&self.vocab, &other.vocab) || *self.vocab == *other.vocab {
            return self.palms == other.palms;
        }
        if !self.vocab.same_signature(&other.vocab) {
            return false;
        }
        self.named_palms() == other.named_palms()
    }

    fn named_palms(&self) -> BTreeMap<String, Mode> {
        self.palms
            .iter()
            .map(|(p, m)| (p.display(&self.vocab), *m))
            .collect()
    }
}

impl PartialEq for Model {
    fn eq(&self, other: &Self) -> bool {
        self.same_structure(other)
    }
}

impl Eq for Model {}

fn action_range(
    action: usize,
    location: Location,
) -> std::ops::RangeInclusive<PalTuple> {
    let lo = PalTuple::new(action, location, LiftedAtom { predicate: 0, args: vec![] });
    let hi = PalTuple::new(
        action,
        location,
        LiftedAtom {
            predicate: usize::MAX,
            args: vec![usize::MAX],
        },
    );
    lo..=hi
}

fn check_pal(vocab: &Vocabulary, pal: &PalTuple) -> Result<(), PddlError> {
    if vocab.atom_fits(pal.action, &pal.atom) {
        Ok(())
    } else {
        Err(PddlError::semantic(format!(
            "atom {:?} does not fit action index {}",
            pal.atom, pal.action
        )))
    }
}

impl LiftedAtom {
    pub fn ground(&self, objects: &[usize]) -> GroundAtom {
        GroundAtom {
            predicate: self.predicate,
            args: self.args.iter().map(|&k| objects[k]).collect(),
        }
    }
}
