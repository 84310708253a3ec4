//! The black-box agent: a hidden model that only answers plan-outcome queries.

use std::collections::{HashMap, HashSet};
use std::io::{self, Write};
use std::sync::{Arc, Mutex};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pddl::{GroundAction, Model, PddlError, ProblemInstance, State};

pub const DEFAULT_WALK_LENGTH: usize = 40;
pub const DEFAULT_POOL_SIZE: usize = 60;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PlanOutcomeQuery {
    pub init: State,
    pub plan: Vec<GroundAction>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QueryResponse {
    /// Number of plan steps executed before the first inapplicable one.
    pub prefix_len: usize,
    pub final_state: State,
}

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("malformed query: {0}")]
    Malformed(#[from] PddlError),
    #[error("agent model and instance use different vocabularies")]
    VocabularyMismatch,
    #[error("query not found in the replayed transcript: {0}")]
    NotInTranscript(String),
    #[error("transcript: {0}")]
    Transcript(String),
}

/// Run a plan under `model`, stopping at the first inapplicable step.
pub fn simulate(model: &Model, query: &PlanOutcomeQuery) -> QueryResponse {
    let mut state = query.init.clone();
    for (k, ga) in query.plan.iter().enumerate() {
        match model.successor(&state, ga) {
            Some(next) => state = next,
            None => {
                return QueryResponse {
                    prefix_len: k,
                    final_state: state,
                }
            }
        }
    }
    QueryResponse {
        prefix_len: query.plan.len(),
        final_state: state,
    }
}

/// Anything that answers plan-outcome queries. The interrogation side only
/// ever sees the agent through this trait.
pub trait PlanOutcomeOracle: Send + Sync {
    fn answer(&self, query: &PlanOutcomeQuery) -> Result<QueryResponse, AgentError>;

    /// Distinct queries answered so far; repeated queries are not counted.
    fn distinct_queries(&self) -> usize;
}

/// One distinct query and its answer, in canonical text form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    /// Cumulative count of distinct queries including this one.
    pub index: usize,
    pub init: Vec<String>,
    pub plan: Vec<String>,
    pub prefix_len: usize,
    pub final_state: Vec<String>,
}

impl TranscriptRecord {
    fn new(index: usize, inst: &ProblemInstance, q: &PlanOutcomeQuery, r: &QueryResponse) -> Self {
        TranscriptRecord {
            index,
            init: inst.state_atoms(&q.init),
            plan: q.plan.iter().map(|g| inst.fmt_action(g)).collect(),
            prefix_len: r.prefix_len,
            final_state: inst.state_atoms(&r.final_state),
        }
    }
}

pub fn write_transcript(records: &[TranscriptRecord], mut out: impl Write) -> io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_transcript(text: &str) -> Result<Vec<TranscriptRecord>, AgentError> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| AgentError::Transcript(e.to_string())))
        .collect()
}

#[derive(Default)]
struct Ledger {
    cache: HashMap<PlanOutcomeQuery, QueryResponse>,
    transcript: Vec<TranscriptRecord>,
}

/// A hidden model wrapped so that only plan-outcome queries reach it.
pub struct AgentHandle {
    model: Model,
    instance: Arc<ProblemInstance>,
    ledger: Mutex<Ledger>,
}

/// Reachable states gathered by random walks, each with the action sequence
/// that reached it from the instance's initial state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StatePool {
    pub states: Vec<State>,
    pub witnesses: Vec<Vec<GroundAction>>,
}

impl AgentHandle {
    pub fn new(model: Model, instance: Arc<ProblemInstance>) -> Result<Self, AgentError> {
        if **model.vocab() != **instance.vocab() {
            return Err(AgentError::VocabularyMismatch);
        }
        Ok(AgentHandle {
            model,
            instance,
            ledger: Mutex::new(Ledger::default()),
        })
    }

    pub fn instance(&self) -> &Arc<ProblemInstance> {
        &self.instance
    }

    fn check(&self, query: &PlanOutcomeQuery) -> Result<(), AgentError> {
        for a in query.init.iter() {
            self.instance.check_atom(a)?;
        }
        for g in &query.plan {
            self.instance.check_action(g)?;
        }
        Ok(())
    }

    pub fn answer_plan_outcome(&self, query: &PlanOutcomeQuery) -> Result<QueryResponse, AgentError> {
        let mut ledger = self.ledger.lock().expect("agent ledger poisoned");
        if let Some(r) = ledger.cache.get(query) {
            return Ok(r.clone());
        }
        self.check(query)?;
        let response = simulate(&self.model, query);
        let index = ledger.transcript.len() + 1;
        let record = TranscriptRecord::new(index, &self.instance, query, &response);
        log::trace!("query {index}: {:?} -> {}", record.plan, response.prefix_len);
        ledger.transcript.push(record);
        ledger.cache.insert(query.clone(), response.clone());
        Ok(response)
    }

    pub fn query_count(&self) -> usize {
        self.ledger.lock().expect("agent ledger poisoned").transcript.len()
    }

    pub fn transcript(&self) -> Vec<TranscriptRecord> {
        self.ledger.lock().expect("agent ledger poisoned").transcript.clone()
    }

    /// Seeded random walks from the initial state. Applicable actions are
    /// chosen uniformly; a walk restarts from the initial state at a dead end
    /// or after `length` steps. Collection stops at `count` distinct states or
    /// when many walks in a row find nothing new.
    pub fn random_walk_states(&self, length: usize, count: usize, seed: u64) -> StatePool {
        let init = self.instance.init().clone();
        let mut pool = StatePool {
            states: vec![init.clone()],
            witnesses: vec![vec![]],
        };
        if count <= 1 || length == 0 {
            return pool;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let groundings = self.instance.all_groundings();
        let mut seen: HashSet<State> = [init.clone()].into();
        let max_walks = 4 * count + 50;
        let mut stale_walks = 0;
        for _ in 0..max_walks {
            let mut state = init.clone();
            let mut path = Vec::new();
            let mut found = false;
            for _ in 0..length {
                let options: Vec<(&GroundAction, State)> = groundings
                    .iter()
                    .filter_map(|g| self.model.successor(&state, g).map(|s| (g, s)))
                    .collect();
                let Some((g, next)) = options.choose(&mut rng) else {
                    break;
                };
                path.push((*g).clone());
                state = next.clone();
                if seen.insert(state.clone()) {
                    found = true;
                    pool.states.push(state.clone());
                    pool.witnesses.push(path.clone());
                    if pool.states.len() == count {
                        return pool;
                    }
                }
            }
            stale_walks = if found { 0 } else { stale_walks + 1 };
            if stale_walks >= 25 {
                break;
            }
        }
        pool
    }
}

impl PlanOutcomeOracle for AgentHandle {
    fn answer(&self, query: &PlanOutcomeQuery) -> Result<QueryResponse, AgentError> {
        self.answer_plan_outcome(query)
    }

    fn distinct_queries(&self) -> usize {
        self.query_count()
    }
}

/// Answers queries from a recorded transcript instead of a hidden model.
pub struct ReplayOracle {
    answers: HashMap<PlanOutcomeQuery, QueryResponse>,
    asked: Mutex<HashSet<PlanOutcomeQuery>>,
    instance: Arc<ProblemInstance>,
}

impl ReplayOracle {
    pub fn new(instance: Arc<ProblemInstance>, records: &[TranscriptRecord]) -> Result<Self, AgentError> {
        let mut answers = HashMap::new();
        for r in records {
            let query = PlanOutcomeQuery {
                init: instance.parse_state_atoms(&r.init)?,
                plan: r
                    .plan
                    .iter()
                    .map(|p| instance.parse_action(p))
                    .collect::<Result<_, _>>()?,
            };
            let response = QueryResponse {
                prefix_len: r.prefix_len,
                final_state: instance.parse_state_atoms(&r.final_state)?,
            };
            answers.insert(query, response);
        }
        Ok(ReplayOracle {
            answers,
            asked: Mutex::new(HashSet::new()),
            instance,
        })
    }
}

impl PlanOutcomeOracle for ReplayOracle {
    fn answer(&self, query: &PlanOutcomeQuery) -> Result<QueryResponse, AgentError> {
        match self.answers.get(query) {
            Some(r) => {
                self.asked.lock().expect("replay ledger poisoned").insert(query.clone());
                Ok(r.clone())
            }
            None => {
                let plan: Vec<String> = query.plan.iter().map(|g| self.instance.fmt_action(g)).collect();
                Err(AgentError::NotInTranscript(format!(
                    "{} {}",
                    self.instance.fmt_state(&query.init),
                    plan.join(" ")
                )))
            }
        }
    }

    fn distinct_queries(&self) -> usize {
        self.asked.lock().expect("replay ledger poisoned").len()
    }
}
