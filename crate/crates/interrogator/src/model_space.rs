//! Palm-tuple algebra and the bookkeeping for one node of the model lattice.
//!
//! The lattice itself is never built. A node is identified by the set of pal
//! tuples whose modes have been decided, and the models living at that node
//! are kept in a [`ModelSet`].

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pddl::{
    emit_domain, instantiate_predicates, Location, Mode, Model, PalTuple, PalmTuple, Palms,
    PddlError, Vocabulary,
};

#[derive(Debug, Error)]
pub enum ModelSpaceError {
    #[error("models are over different vocabularies")]
    VocabularyMismatch,
    #[error("model set members disagree on which pal tuples are resolved")]
    MixedFootprint,
    #[error("model set is empty")]
    Empty,
    #[error(transparent)]
    Pddl(#[from] PddlError),
    #[error("malformed model set text: {0}")]
    Format(String),
}

/// Drop `palm` from `model` if present.
pub fn abstract_model(model: &Model, palm: &PalmTuple) -> Model {
    let mut out = model.clone();
    if out.contains(palm) {
        out.remove(&palm.pal);
    }
    out
}

/// Add `⟨pal, mode⟩` to a model that has not decided `pal` yet.
pub fn refine(model: &Model, pal: &PalTuple, mode: Mode) -> Result<Model, PddlError> {
    if model.mode_of(pal).is_some() {
        return Err(PddlError::VariantConflict {
            pal: pal.display(model.vocab()),
        });
    }
    let mut out = model.clone();
    out.insert(pal.with_mode(mode))?;
    Ok(out)
}

pub fn variants(pal: &PalTuple) -> [PalmTuple; 3] {
    Mode::ALL.map(|m| pal.with_mode(m))
}

/// Every pal tuple of the vocabulary, in the default refinement order:
/// actions in declaration order, preconditions before effects, atoms by
/// predicate name then arguments.
pub fn all_pal_tuples(vocab: &Vocabulary) -> Vec<PalTuple> {
    let per_action = instantiate_predicates(vocab);
    let mut out = Vec::new();
    for (a, atoms) in per_action.iter().enumerate() {
        for loc in Location::ALL {
            out.extend(atoms.iter().map(|atom| PalTuple::new(a, loc, atom.clone())));
        }
    }
    out
}

/// The query bound `2 · |P*| · |A|` with `|P*|` the action-independent
/// instantiated predicate count.
pub fn query_budget(vocab: &Vocabulary) -> usize {
    2 * vocab.instantiated_predicate_count() * vocab.actions().len()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Accuracy {
    /// Pal tuples whose mode matches the truth, over all pal tuples.
    pub over_pal_tuples: f64,
    /// Literals of the truth recovered exactly, over the truth's literals.
    pub over_truth_literals: f64,
}

/// Undecided pal tuples in `estimate` count as `Absent`.
pub fn accuracy(estimate: &Model, truth: &Model) -> Result<Accuracy, ModelSpaceError> {
    if !estimate.vocab().same_signature(truth.vocab()) {
        return Err(ModelSpaceError::VocabularyMismatch);
    }
    let est = named_modes(estimate);
    let tru = named_modes(truth);
    let gamma = all_pal_tuples(truth.vocab());
    let lookup = |m: &BTreeMap<String, Mode>, k: &str| m.get(k).copied().unwrap_or(Mode::Absent);
    let mut agree = 0usize;
    let mut literals = 0usize;
    let mut literals_hit = 0usize;
    for pal in &gamma {
        let key = pal.display(truth.vocab());
        let t = lookup(&tru, &key);
        let e = lookup(&est, &key);
        if t == e {
            agree += 1;
        }
        if t != Mode::Absent {
            literals += 1;
            if t == e {
                literals_hit += 1;
            }
        }
    }
    let ratio = |n: usize, d: usize| if d == 0 { 1.0 } else { n as f64 / d as f64 };
    Ok(Accuracy {
        over_pal_tuples: ratio(agree, gamma.len()),
        over_truth_literals: ratio(literals_hit, literals),
    })
}

fn named_modes(model: &Model) -> BTreeMap<String, Mode> {
    model
        .palms()
        .iter()
        .map(|(p, m)| (p.display(model.vocab()), *m))
        .collect()
}

/// Replace effect entries that repeat the precondition on the same atom by
/// `Absent`. Two models with equal keys have the same transition function
/// on every state.
pub fn behavior_key(palms: &Palms) -> Palms {
    palms
        .iter()
        .map(|(pal, mode)| {
            if pal.location == Location::Eff && *mode != Mode::Absent {
                let pre = PalTuple::new(pal.action, Location::Pre, pal.atom.clone());
                if palms.get(&pre) == Some(mode) {
                    return (pal.clone(), Mode::Absent);
                }
            }
            (pal.clone(), *mode)
        })
        .collect()
}

/// Unresolved pal tuples in refinement order, plus tuples whose mode was
/// fixed outside the lattice refinement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PalOrdering {
    pub queue: VecDeque<PalTuple>,
    pub resolved: BTreeMap<PalTuple, Mode>,
}

impl PalOrdering {
    pub fn default_for(vocab: &Vocabulary) -> Self {
        PalOrdering {
            queue: all_pal_tuples(vocab).into(),
            resolved: BTreeMap::new(),
        }
    }

    pub fn from_sequence(seq: Vec<PalTuple>) -> Self {
        PalOrdering {
            queue: seq.into(),
            resolved: BTreeMap::new(),
        }
    }

    /// Move a queued tuple into `resolved`. Returns false if it was not queued.
    pub fn resolve(&mut self, pal: &PalTuple, mode: Mode) -> bool {
        match self.queue.iter().position(|p| p == pal) {
            Some(i) => {
                self.queue.remove(i);
                self.resolved.insert(pal.clone(), mode);
                true
            }
            None => false,
        }
    }
}

/// Models at one lattice node: they all decide the same pal tuples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelSet {
    vocab: Arc<Vocabulary>,
    members: BTreeSet<Palms>,
}

impl ModelSet {
    pub fn singleton(model: Model) -> Self {
        let vocab = model.vocab().clone();
        ModelSet {
            vocab,
            members: [model.into_palms()].into(),
        }
    }

    pub fn from_models(models: Vec<Model>) -> Result<Self, ModelSpaceError> {
        let first = models.first().ok_or(ModelSpaceError::Empty)?;
        let vocab = first.vocab().clone();
        let mut set = ModelSet {
            vocab,
            members: BTreeSet::new(),
        };
        for m in models {
            if !Arc::ptr_eq(m.vocab(), &set.vocab) && **m.vocab() != *set.vocab {
                return Err(ModelSpaceError::VocabularyMismatch);
            }
            set.members.insert(m.into_palms());
        }
        set.check_footprint()?;
        Ok(set)
    }

    pub(crate) fn from_palms(
        vocab: Arc<Vocabulary>,
        members: BTreeSet<Palms>,
    ) -> Result<Self, ModelSpaceError> {
        if members.is_empty() {
            return Err(ModelSpaceError::Empty);
        }
        let set = ModelSet { vocab, members };
        set.check_footprint()?;
        Ok(set)
    }

    fn check_footprint(&self) -> Result<(), ModelSpaceError> {
        let mut it = self.members.iter();
        if let Some(first) = it.next() {
            for m in it {
                if m.len() != first.len() || !m.keys().eq(first.keys()) {
                    return Err(ModelSpaceError::MixedFootprint);
                }
            }
        }
        Ok(())
    }

    pub fn vocab(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn palms(&self) -> impl Iterator<Item = &Palms> {
        self.members.iter()
    }

    pub fn models(&self) -> impl Iterator<Item = Model> + '_ {
        self.members
            .iter()
            .map(|p| Model::from_palms(self.vocab.clone(), p.clone()).expect("members are valid"))
    }

    pub fn contains(&self, model: &Model) -> bool {
        self.models().any(|m| m == *model)
    }

    /// The decided pal tuples shared by all members.
    pub fn footprint(&self) -> Vec<PalTuple> {
        self.members
            .iter()
            .next()
            .map(|p| p.keys().cloned().collect())
            .unwrap_or_default()
    }

    /// The member with the fewest literals; ties go to the smaller emitted text.
    pub fn canonical(&self) -> Model {
        self.models()
            .map(|m| (m.literal_count(), emit_domain(&m), m))
            .min_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)))
            .map(|(_, _, m)| m)
            .expect("model sets are never empty")
    }

    pub fn to_text(&self) -> ModelSetText {
        ModelSetText {
            domain: self.vocab.name.clone(),
            models: self
                .members
                .iter()
                .map(|p| {
                    p.iter()
                        .map(|(pal, m)| format!("{} {}", pal.display(&self.vocab), m))
                        .collect()
                })
                .collect(),
        }
    }

    pub fn from_text(vocab: Arc<Vocabulary>, text: &ModelSetText) -> Result<Self, ModelSpaceError> {
        if text.domain != vocab.name {
            return Err(ModelSpaceError::VocabularyMismatch);
        }
        let mut members = BTreeSet::new();
        for entries in &text.models {
            let mut palms = Palms::new();
            for e in entries {
                let (pal_text, mode_text) = e
                    .rsplit_once(' ')
                    .ok_or_else(|| ModelSpaceError::Format(e.clone()))?;
                let mode =
                    Mode::from_symbol(mode_text).ok_or_else(|| ModelSpaceError::Format(e.clone()))?;
                let pal = PalTuple::parse(&vocab, pal_text)?;
                if palms.insert(pal, mode).is_some() {
                    return Err(ModelSpaceError::Format(format!("duplicate entry `{e}`")));
                }
            }
            members.insert(palms);
        }
        Self::from_palms(vocab, members)
    }
}

/// Canonical serializable form of a [`ModelSet`]: every member as a sorted
/// list of `"<action> <pre|eff> <atom> <mode>"` entries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSetText {
    pub domain: String,
    pub models: Vec<Vec<String>>,
}
