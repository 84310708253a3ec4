use crate::agent::{PlanOutcomeQuery, QueryResponse};
use crate::pddl::{instantiate_predicates, GroundAction, GroundAtom, State, Vocabulary};
use crate::query_gen::{TwinModel, TwinResponse, TwinRole};

/// What the agent's failure tells the repair step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FailureContext {
    /// The first plan step the agent could not execute.
    pub failed_action: GroundAction,
    /// The agent's state just before that step.
    pub state_before: State,
    pub query: PlanOutcomeQuery,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FilterOutcome {
    /// Exactly one twin answers like the agent; the other one is pruned.
    Prune(TwinRole),
    /// Both twins answer like the agent.
    BothConsistent,
    /// Neither twin can be judged: no twin answers like the agent, or the
    /// agent reached the last step in a state the twins did not predict.
    Inconclusive,
    /// The agent stopped before the end of the plan.
    AgentFailure(FailureContext),
}

/// Ground atoms an action application can read or write under any model.
pub fn relevant_atoms(vocab: &Vocabulary, ga: &GroundAction) -> Vec<GroundAtom> {
    instantiate_predicates(vocab)[ga.action]
        .iter()
        .map(|a| a.ground(&ga.args))
        .collect()
}

fn agree_on(a: &State, b: &State, atoms: &[GroundAtom]) -> bool {
    atoms.iter().all(|x| a.contains(x) == b.contains(x))
}

fn run_prefix(twin: &TwinModel, query: &PlanOutcomeQuery) -> Option<State> {
    let n = query.plan.len();
    let prefix = PlanOutcomeQuery {
        init: query.init.clone(),
        plan: query.plan[..n - 1].to_vec(),
    };
    let r = twin.respond(&prefix);
    (r.response.prefix_len == n - 1).then_some(r.response.final_state)
}

/// Judge a distinguishing query against the agent's answer.
///
/// A twin is consistent when it executes the whole plan like the agent and
/// its final state agrees with the agent's on every atom where the two twins
/// end up different. For plans longer than one step the agent's state
/// before the last step (`agent_before_last`) must match the twins' on the
/// atoms the last action can touch; otherwise the answer is inconclusive.
pub fn filter_models(
    query: &PlanOutcomeQuery,
    response: &QueryResponse,
    twin_i: &TwinModel,
    twin_j: &TwinModel,
    agent_before_last: Option<&State>,
) -> (FilterOutcome, TwinResponse, TwinResponse) {
    let ri = twin_i.respond(query);
    let rj = twin_j.respond(query);
    let n = query.plan.len();
    if response.prefix_len < n {
        let ctx = FailureContext {
            failed_action: query.plan[response.prefix_len].clone(),
            state_before: response.final_state.clone(),
            query: query.clone(),
        };
        return (FilterOutcome::AgentFailure(ctx), ri, rj);
    }
    if n == 0 {
        return (FilterOutcome::BothConsistent, ri, rj);
    }
    let last = &query.plan[n - 1];
    let relevant = relevant_atoms(twin_i.learner_model().vocab(), last);
    if n > 1 {
        let matched = match (agent_before_last, run_prefix(twin_i, query), run_prefix(twin_j, query)) {
            (Some(agent), Some(si), Some(sj)) => agree_on(agent, &si, &relevant) && agree_on(agent, &sj, &relevant),
            _ => false,
        };
        if !matched {
            return (FilterOutcome::Inconclusive, ri, rj);
        }
    }
    let full_i = ri.response.prefix_len == n;
    let full_j = rj.response.prefix_len == n;
    let (ok_i, ok_j) = if full_i && full_j {
        let delta: Vec<GroundAtom> = relevant
            .iter()
            .filter(|a| ri.response.final_state.contains(a) != rj.response.final_state.contains(a))
            .cloned()
            .collect();
        (
            agree_on(&ri.response.final_state, &response.final_state, &delta),
            agree_on(&rj.response.final_state, &response.final_state, &delta),
        )
    } else {
        (full_i, full_j)
    };
    let outcome = match (ok_i, ok_j) {
        (true, true) => FilterOutcome::BothConsistent,
        (true, false) => FilterOutcome::Prune(TwinRole::J),
        (false, true) => FilterOutcome::Prune(TwinRole::I),
        (false, false) => FilterOutcome::Inconclusive,
    };
    (outcome, ri, rj)
}
