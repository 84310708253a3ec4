//! The interrogation loop.
//!
//! Pal tuples are refined one at a time. For every candidate model and every
//! pair of modes of the current tuple a distinguishing query is generated,
//! asked, and used to prune the modes the agent contradicts. When the agent
//! refuses to execute a plan, the precondition of the refused action is
//! repaired with single-step probes.

mod equivalence;
mod filter;
mod repair;
mod report;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{AgentError, PlanOutcomeOracle, PlanOutcomeQuery, QueryResponse};
use crate::model_space::{self, behavior_key, ModelSet, ModelSetText, ModelSpaceError, PalOrdering};
use crate::pddl::{
    instantiate_predicates, GroundAction, LiftedAtom, Location, Mode, Model, PalTuple, Palms, PddlError,
    ProblemInstance, State, Vocabulary,
};
use crate::planner::{PlannerError, SearchLimits, DEFAULT_GROUNDING_CAP};
use crate::query_gen::{generate_query, QueryGenError, TwinRole};

pub use equivalence::{equivalence_witness, functionally_equivalent};
pub use filter::{filter_models, relevant_atoms, FailureContext, FilterOutcome};
pub use repair::update_pal_ordering;
pub use report::{write_jsonl, IterationRecord, PairRecord, RunSummary};

pub const DEFAULT_MAX_MODELS: usize = 1 << 15;

/// Mode pairs tried for every pal tuple, in order.
pub const MODE_PAIRS: [(Mode, Mode); 3] = [
    (Mode::Pos, Mode::Neg),
    (Mode::Pos, Mode::Absent),
    (Mode::Neg, Mode::Absent),
];

#[derive(Debug, Error)]
pub enum InterrogationError {
    #[error("no state in the pool lets the agent execute `{action}` ({probes} probes asked)")]
    RepairFailure {
        action: String,
        probes: usize,
        partial: Option<Box<ModelSetText>>,
    },
    #[error("the agent executes {action} in {state} but refused it in an equivalent state")]
    Nondeterminism { action: String, state: String },
    #[error("{count} candidate models exceed the cap of {cap}")]
    ModelLimit { count: usize, cap: usize },
    #[error("the state pool is empty")]
    EmptyPool,
    #[error("the agent and the learner use different vocabularies")]
    VocabularyMismatch,
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    QueryGen(#[from] QueryGenError),
    #[error(transparent)]
    ModelSpace(#[from] ModelSpaceError),
    #[error(transparent)]
    Pddl(#[from] PddlError),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

impl InterrogationError {
    /// True for errors caused by a resource cap rather than bad input.
    pub fn is_resource_limit(&self) -> bool {
        matches!(
            self,
            InterrogationError::ModelLimit { .. }
                | InterrogationError::QueryGen(QueryGenError::Planner(
                    PlannerError::NodeLimit { .. } | PlannerError::GroundingBlowup { .. }
                ))
        )
    }
}

#[derive(Debug, Clone)]
pub struct AiaConfig {
    pub limits: SearchLimits,
    pub grounding_cap: usize,
    /// Refinement order; defaults to every action's precondition tuples, then
    /// its effect tuples, in declaration order.
    pub ordering: Option<Vec<PalTuple>>,
    pub max_models: usize,
    /// Used only for bookkeeping: accuracy and wrongly pruned models.
    pub ground_truth: Option<Model>,
    pub checkpoint: Option<PathBuf>,
}

impl Default for AiaConfig {
    fn default() -> Self {
        AiaConfig {
            limits: SearchLimits::default(),
            grounding_cap: DEFAULT_GROUNDING_CAP,
            ordering: None,
            max_models: DEFAULT_MAX_MODELS,
            ground_truth: None,
            checkpoint: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryKind {
    Lattice,
    Repair,
}

/// Truth values of an action's lifted relevant atoms under one grounding.
/// In a STRIPS model they alone decide whether the action is executable.
pub type Valuation = Vec<bool>;

/// Wraps the oracle, counting distinct queries by purpose and remembering,
/// per action and valuation, whether the agent executed the first step.
pub struct Asker<'a> {
    oracle: &'a dyn PlanOutcomeOracle,
    lifted: Vec<Vec<LiftedAtom>>,
    seen: HashSet<PlanOutcomeQuery>,
    pub lattice: usize,
    pub repair: usize,
    outcomes: HashMap<(usize, Valuation), (bool, State, GroundAction)>,
    conflict: Option<(State, GroundAction)>,
}

impl<'a> Asker<'a> {
    pub fn new(oracle: &'a dyn PlanOutcomeOracle, vocab: &Vocabulary) -> Self {
        Asker {
            oracle,
            lifted: instantiate_predicates(vocab),
            seen: HashSet::new(),
            lattice: 0,
            repair: 0,
            outcomes: HashMap::new(),
            conflict: None,
        }
    }

    pub fn valuation(&self, state: &State, ga: &GroundAction) -> Valuation {
        self.lifted[ga.action]
            .iter()
            .map(|a| state.contains(&a.ground(&ga.args)))
            .collect()
    }

    pub fn was_asked(&self, query: &PlanOutcomeQuery) -> bool {
        self.seen.contains(query)
    }

    /// Whether the agent executes `ga` in `state`, if an earlier answer
    /// already tells.
    pub fn known_outcome(&self, state: &State, ga: &GroundAction) -> Option<bool> {
        self.outcomes
            .get(&(ga.action, self.valuation(state, ga)))
            .map(|(ok, ..)| *ok)
    }

    /// Some state and grounding in which the agent was seen to execute `action`.
    pub fn execution_of(&self, action: usize) -> Option<(State, GroundAction)> {
        self.outcomes
            .iter()
            .filter(|((a, _), (ok, ..))| *a == action && *ok)
            .map(|(_, (_, s, g))| (s.clone(), g.clone()))
            .min_by(|x, y| (&x.1, &x.0).cmp(&(&y.1, &y.0)))
    }

    fn note(&mut self, state: &State, ga: &GroundAction, ok: bool) {
        let key = (ga.action, self.valuation(state, ga));
        let known = self
            .outcomes
            .entry(key)
            .or_insert_with(|| (ok, state.clone(), ga.clone()));
        if known.0 != ok && self.conflict.is_none() {
            self.conflict = Some((state.clone(), ga.clone()));
        }
    }

    /// A grounding the agent both executed and refused under the same
    /// valuation, if one was seen.
    pub fn conflict(&self) -> Option<&(State, GroundAction)> {
        self.conflict.as_ref()
    }

    pub fn ask(&mut self, query: &PlanOutcomeQuery, kind: QueryKind) -> Result<QueryResponse, AgentError> {
        let response = self.oracle.answer(query)?;
        if self.seen.insert(query.clone()) {
            match kind {
                QueryKind::Lattice => self.lattice += 1,
                QueryKind::Repair => self.repair += 1,
            }
            if let Some(first) = query.plan.first() {
                self.note(&query.init, first, response.prefix_len > 0);
            }
            if let Some(failed) = query.plan.get(response.prefix_len) {
                self.note(&response.final_state, failed, false);
            }
        }
        Ok(response)
    }
}

/// Everything needed to continue an interrupted run.
#[derive(Debug, Clone, PartialEq)]
pub struct InterrogationState {
    pub ordering: PalOrdering,
    pub models: ModelSet,
    pub iteration: usize,
    /// Tuples deferred since the last iteration that made progress.
    pub deferred: BTreeSet<PalTuple>,
    pub lattice_queries: usize,
    pub repair_probes: usize,
    pub truth_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub queue: Vec<String>,
    pub resolved: Vec<String>,
    pub models: ModelSetText,
    pub iteration: usize,
    pub deferred: Vec<String>,
    pub lattice_queries: usize,
    pub repair_probes: usize,
    pub truth_violations: usize,
}

impl InterrogationState {
    pub fn initial(vocab: Arc<crate::pddl::Vocabulary>, ordering: Option<Vec<PalTuple>>) -> Self {
        let ordering = match ordering {
            Some(seq) => PalOrdering::from_sequence(seq),
            None => PalOrdering::default_for(&vocab),
        };
        InterrogationState {
            ordering,
            models: ModelSet::singleton(Model::empty(vocab)),
            iteration: 0,
            deferred: BTreeSet::new(),
            lattice_queries: 0,
            repair_probes: 0,
            truth_violations: 0,
        }
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let vocab = self.models.vocab();
        Checkpoint {
            queue: self.ordering.queue.iter().map(|p| p.display(vocab)).collect(),
            resolved: self
                .ordering
                .resolved
                .iter()
                .map(|(p, m)| format!("{} {}", p.display(vocab), m))
                .collect(),
            models: self.models.to_text(),
            iteration: self.iteration,
            deferred: self.deferred.iter().map(|p| p.display(vocab)).collect(),
            lattice_queries: self.lattice_queries,
            repair_probes: self.repair_probes,
            truth_violations: self.truth_violations,
        }
    }

    pub fn from_checkpoint(
        vocab: Arc<crate::pddl::Vocabulary>,
        cp: &Checkpoint,
    ) -> Result<Self, InterrogationError> {
        let pal = |t: &String| PalTuple::parse(&vocab, t);
        let mut resolved = BTreeMap::new();
        for e in &cp.resolved {
            let (p, m) = e
                .rsplit_once(' ')
                .ok_or_else(|| InterrogationError::Checkpoint(format!("bad entry `{e}`")))?;
            let mode = Mode::from_symbol(m).ok_or_else(|| InterrogationError::Checkpoint(format!("bad mode `{m}`")))?;
            resolved.insert(PalTuple::parse(&vocab, p)?, mode);
        }
        Ok(InterrogationState {
            ordering: PalOrdering {
                queue: cp.queue.iter().map(pal).collect::<Result<_, _>>()?,
                resolved,
            },
            models: ModelSet::from_text(vocab.clone(), &cp.models)?,
            iteration: cp.iteration,
            deferred: cp.deferred.iter().map(pal).collect::<Result<_, _>>()?,
            lattice_queries: cp.lattice_queries,
            repair_probes: cp.repair_probes,
            truth_violations: cp.truth_violations,
        })
    }
}

#[derive(Debug, Clone)]
pub struct AiaOutcome {
    pub models: ModelSet,
    pub records: Vec<IterationRecord>,
    pub summary: RunSummary,
    pub state: InterrogationState,
}

/// Learn the agent's model from scratch.
pub fn run_aia(
    oracle: &dyn PlanOutcomeOracle,
    instance: &ProblemInstance,
    pool: &[State],
    config: &AiaConfig,
) -> Result<AiaOutcome, InterrogationError> {
    let state = InterrogationState::initial(instance.vocab().clone(), config.ordering.clone());
    resume_aia(oracle, instance, pool, config, state)
}

struct GroupResult {
    members: Vec<Palms>,
    surviving: BTreeSet<Mode>,
    open_pairs: Vec<(Mode, Mode)>,
}

fn is_abstraction_of_truth(model: &Model, truth: &Model) -> bool {
    model
        .palms()
        .iter()
        .all(|(pal, mode)| truth.mode_of(pal).unwrap_or(Mode::Absent) == *mode)
}

fn log_pair(log: &mut Vec<PairRecord>, rec: PairRecord) {
    match log.iter_mut().find(|r| PairRecord { groups: r.groups, ..rec.clone() } == **r) {
        Some(r) => r.groups += 1,
        None => log.push(rec),
    }
}

fn mode_pair(a: Mode, b: Mode) -> String {
    format!("{}/{}", a, b)
}

/// Continue a run from a saved state.
pub fn resume_aia(
    oracle: &dyn PlanOutcomeOracle,
    instance: &ProblemInstance,
    pool: &[State],
    config: &AiaConfig,
    mut state: InterrogationState,
) -> Result<AiaOutcome, InterrogationError> {
    let started = Instant::now();
    if pool.is_empty() {
        return Err(InterrogationError::EmptyPool);
    }
    let vocab = instance.vocab().clone();
    if !vocab.same_signature(state.models.vocab()) {
        return Err(InterrogationError::VocabularyMismatch);
    }
    let mut asker = Asker::new(oracle, &vocab);
    let mut records = Vec::new();
    let mut query_times: Vec<f64> = Vec::new();
    let with_partial = |e: InterrogationError, models: &ModelSet| match e {
        InterrogationError::RepairFailure { action, probes, .. } => InterrogationError::RepairFailure {
            action,
            probes,
            partial: Some(Box::new(models.to_text())),
        },
        other => other,
    };

    while let Some(gamma) = state.ordering.queue.front().cloned() {
        state.iteration += 1;
        let gamma_text = gamma.display(&vocab);
        log::info!("iteration {}: refining {}", state.iteration, gamma_text);
        let mut groups: BTreeMap<Palms, Vec<Palms>> = BTreeMap::new();
        for p in state.models.palms() {
            groups.entry(behavior_key(p)).or_default().push(p.clone());
        }
        let mut pair_log = Vec::new();
        let mut results: Vec<GroupResult> = Vec::new();
        let mut failures: Vec<(FailureContext, Mode, Mode, usize)> = Vec::new();
        let mut progress = false;
        let lattice_before = asker.lattice;

        for members in groups.into_values() {
            let base = Model::from_palms(vocab.clone(), members[0].clone())?;
            let gi = results.len();
            let mut pruned = BTreeSet::new();
            let mut open_pairs = Vec::new();
            for (mi, mj) in MODE_PAIRS {
                if pruned.contains(&mi) || pruned.contains(&mj) {
                    continue;
                }
                let t0 = Instant::now();
                let gen = generate_query(
                    &base,
                    mi,
                    mj,
                    &gamma,
                    pool,
                    instance,
                    &config.limits,
                    config.grounding_cap,
                )?;
                query_times.push(t0.elapsed().as_secs_f64());
                let Some(query) = gen.query.clone() else {
                    log_pair(
                        &mut pair_log,
                        PairRecord {
                            modes: mode_pair(mi, mj),
                            groups: 1,
                            init: None,
                            plan: None,
                            agent_prefix_len: None,
                            twin_prefix_len: None,
                            outcome: "indistinguishable".into(),
                        },
                    );
                    continue;
                };
                let response = asker.ask(&query, QueryKind::Lattice)?;
                let n = query.plan.len();
                let before_last = if n > 1 && response.prefix_len == n {
                    let prefix = PlanOutcomeQuery {
                        init: query.init.clone(),
                        plan: query.plan[..n - 1].to_vec(),
                    };
                    Some(asker.ask(&prefix, QueryKind::Lattice)?.final_state)
                } else {
                    None
                };
                let (outcome, ri, rj) =
                    filter_models(&query, &response, &gen.twin_i, &gen.twin_j, before_last.as_ref());
                let label = match &outcome {
                    FilterOutcome::Prune(role) => {
                        let (mode, model) = match role {
                            TwinRole::I => (mi, &gen.model_i),
                            TwinRole::J => (mj, &gen.model_j),
                        };
                        pruned.insert(mode);
                        progress = true;
                        if let Some(truth) = &config.ground_truth {
                            if is_abstraction_of_truth(model, truth) {
                                state.truth_violations += 1;
                                log::warn!("pruned a model consistent with the ground truth at {}", gamma_text);
                            }
                        }
                        format!("pruned {}", mode)
                    }
                    FilterOutcome::BothConsistent => "equivalent".to_string(),
                    FilterOutcome::Inconclusive => {
                        open_pairs.push((mi, mj));
                        "inconclusive".to_string()
                    }
                    FilterOutcome::AgentFailure(ctx) => {
                        open_pairs.push((mi, mj));
                        failures.push((ctx.clone(), mi, mj, gi));
                        "agent-failure".to_string()
                    }
                };
                log_pair(
                    &mut pair_log,
                    PairRecord {
                        modes: mode_pair(mi, mj),
                        groups: 1,
                        init: Some(instance.state_atoms(&query.init)),
                        plan: Some(query.plan.iter().map(|g| instance.fmt_action(g)).collect()),
                        agent_prefix_len: Some(response.prefix_len),
                        twin_prefix_len: Some((ri.response.prefix_len, rj.response.prefix_len)),
                        outcome: label,
                    },
                );
            }
            let surviving = Mode::ALL.into_iter().filter(|m| !pruned.contains(m)).collect();
            results.push(GroupResult {
                members,
                surviving,
                open_pairs,
            });
        }

        check_conflict(&asker, instance)?;
        let still_open = |r: &GroupResult, a: Mode, b: Mode| r.surviving.contains(&a) && r.surviving.contains(&b);
        let blocking = failures
            .iter()
            .find(|(_, a, b, g)| still_open(&results[*g], *a, *b))
            .map(|(ctx, ..)| ctx.clone());
        let mut repaired = BTreeMap::new();
        if let Some(ctx) = blocking {
            let action = ctx.failed_action.action;
            let unresolved: Vec<PalTuple> = state
                .ordering
                .queue
                .iter()
                .filter(|p| p.action == action && p.location == Location::Pre)
                .cloned()
                .collect();
            let known = common_modes(&state.models, action);
            repaired = update_pal_ordering(&ctx, instance, pool, &unresolved, &known, &mut asker)
                .map_err(|e| with_partial(e, &state.models))?;
            check_conflict(&asker, instance)?;
        }

        let event;
        let mut surviving_modes = Vec::new();
        if !repaired.is_empty() {
            let mut members = BTreeSet::new();
            for p in state.models.palms() {
                let mut p = p.clone();
                for (pal, mode) in &repaired {
                    p.insert(pal.clone(), *mode);
                }
                members.insert(p);
            }
            for (pal, mode) in &repaired {
                state.ordering.resolve(pal, *mode);
            }
            state.models = ModelSet::from_palms(vocab.clone(), members)?;
            state.deferred.clear();
            event = "repair";
        } else {
            let ambiguous = results
                .iter()
                .any(|r| r.open_pairs.iter().any(|(a, b)| still_open(r, *a, *b)));
            if (!progress || ambiguous) && !state.deferred.contains(&gamma) {
                state.ordering.queue.pop_front();
                state.ordering.queue.push_back(gamma.clone());
                state.deferred.insert(gamma.clone());
                event = "defer";
            } else {
                let mut members = BTreeSet::new();
                let mut all_surviving = BTreeSet::new();
                for r in &results {
                    for mode in &r.surviving {
                        all_surviving.insert(*mode);
                        for m in &r.members {
                            let mut p = m.clone();
                            p.insert(gamma.clone(), *mode);
                            members.insert(p);
                        }
                    }
                }
                if members.len() > config.max_models {
                    return Err(InterrogationError::ModelLimit {
                        count: members.len(),
                        cap: config.max_models,
                    });
                }
                surviving_modes = all_surviving.iter().map(|m| m.to_string()).collect();
                state.ordering.queue.pop_front();
                state.models = ModelSet::from_palms(vocab.clone(), members)?;
                event = if progress {
                    state.deferred.clear();
                    "refine"
                } else {
                    "accept-stalled"
                };
            }
        }

        state.lattice_queries += asker.lattice - lattice_before;
        let accuracy = match &config.ground_truth {
            Some(truth) => {
                let first = state.models.models().next().expect("model sets are never empty");
                Some(model_space::accuracy(&first, truth)?.over_pal_tuples)
            }
            None => None,
        };
        records.push(IterationRecord {
            iteration: state.iteration,
            pal: gamma_text,
            event: event.into(),
            pairs: pair_log,
            surviving_modes,
            repaired: repaired
                .iter()
                .map(|(p, m)| format!("{} {}", p.display(&vocab), m))
                .collect(),
            models: state.models.len(),
            resolved: state.models.footprint().len(),
            lattice_queries: state.lattice_queries,
            repair_probes: state.repair_probes + asker.repair,
            accuracy,
        });
        if let Some(path) = &config.checkpoint {
            let mut snapshot = state.clone();
            snapshot.repair_probes += asker.repair;
            let text = serde_json::to_string_pretty(&snapshot.to_checkpoint())
                .map_err(|e| InterrogationError::Checkpoint(e.to_string()))?;
            std::fs::write(path, text).map_err(|e| InterrogationError::Checkpoint(e.to_string()))?;
        }
    }

    state.repair_probes += asker.repair;
    let (accuracy, over_truth) = match &config.ground_truth {
        Some(truth) => {
            let acc = model_space::accuracy(&state.models.canonical(), truth)?;
            (Some(acc.over_pal_tuples), Some(acc.over_truth_literals))
        }
        None => (None, None),
    };
    let summary = RunSummary {
        domain: vocab.name.clone(),
        converged: true,
        iterations: state.iteration,
        models: state.models.len(),
        lattice_queries: state.lattice_queries,
        repair_probes: state.repair_probes,
        total_queries: state.lattice_queries + state.repair_probes,
        query_budget: model_space::query_budget(&vocab),
        truth_violations: state.truth_violations,
        accuracy,
        accuracy_over_truth_literals: over_truth,
        wall_seconds: started.elapsed().as_secs_f64(),
        mean_query_seconds: if query_times.is_empty() {
            0.0
        } else {
            query_times.iter().sum::<f64>() / query_times.len() as f64
        },
        max_query_seconds: query_times.iter().cloned().fold(0.0, f64::max),
    };
    Ok(AiaOutcome {
        models: state.models.clone(),
        records,
        summary,
        state,
    })
}

pub(crate) fn check_conflict(asker: &Asker<'_>, instance: &ProblemInstance) -> Result<(), InterrogationError> {
    match asker.conflict() {
        Some((state, ga)) => Err(InterrogationError::Nondeterminism {
            action: instance.fmt_action(ga),
            state: instance.fmt_state(state),
        }),
        None => Ok(()),
    }
}

/// Precondition modes of `action` that every model agrees on.
fn common_modes(models: &ModelSet, action: usize) -> BTreeMap<PalTuple, Mode> {
    let mut it = models.palms();
    let Some(first) = it.next() else {
        return BTreeMap::new();
    };
    let mut common: BTreeMap<PalTuple, Mode> = first
        .iter()
        .filter(|(p, _)| p.action == action && p.location == Location::Pre)
        .map(|(p, m)| (p.clone(), *m))
        .collect();
    for p in it {
        common.retain(|pal, mode| p.get(pal) == Some(mode));
    }
    common
}
