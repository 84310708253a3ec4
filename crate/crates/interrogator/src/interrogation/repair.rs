use std::collections::BTreeMap;

use super::filter::FailureContext;
use super::{Asker, InterrogationError, QueryKind};
use crate::agent::PlanOutcomeQuery;
use crate::pddl::{GroundAction, Location, Mode, PalTuple, ProblemInstance, State};

fn single(state: &State, ga: &GroundAction) -> PlanOutcomeQuery {
    PlanOutcomeQuery {
        init: state.clone(),
        plan: vec![ga.clone()],
    }
}

fn violates_known(state: &State, ga: &GroundAction, known: &BTreeMap<PalTuple, Mode>) -> bool {
    known.iter().any(|(pal, mode)| {
        let holds = state.contains(&pal.atom.ground(&ga.args));
        match mode {
            Mode::Pos => !holds,
            Mode::Neg => holds,
            Mode::Absent => false,
        }
    })
}

/// A state in which the agent executes some grounding of the failed action.
fn find_executable(
    ctx: &FailureContext,
    instance: &ProblemInstance,
    pool: &[State],
    known: &BTreeMap<PalTuple, Mode>,
    asker: &mut Asker<'_>,
) -> Result<Option<(State, GroundAction)>, InterrogationError> {
    let action = ctx.failed_action.action;
    if let Some(w) = asker.execution_of(action) {
        return Ok(Some(w));
    }
    let mut groundings = vec![ctx.failed_action.clone()];
    groundings.extend(
        instance
            .groundings(action)
            .into_iter()
            .filter(|g| *g != ctx.failed_action),
    );
    let (mut states, rest): (Vec<&State>, Vec<&State>) =
        pool.iter().partition(|s| s.is_superset(&ctx.state_before));
    let failed_valuation = asker.valuation(&ctx.state_before, &ctx.failed_action);
    let recheck = states.iter().find(|s| {
        **s != &ctx.state_before && asker.valuation(s, &ctx.failed_action) == failed_valuation
    });
    if let Some(s) = recheck {
        let q = single(s, &ctx.failed_action);
        if !asker.was_asked(&q) {
            asker.ask(&q, QueryKind::Repair)?;
            super::check_conflict(asker, instance)?;
        }
    }
    states.extend(rest);
    for g in &groundings {
        for s in &states {
            if violates_known(s, g, known) || asker.known_outcome(s, g).is_some() {
                continue;
            }
            let q = single(s, g);
            if asker.was_asked(&q) {
                continue;
            }
            if asker.ask(&q, QueryKind::Repair)?.prefix_len == 1 {
                return Ok(Some(((*s).clone(), g.clone())));
            }
        }
    }
    Ok(None)
}

/// Fix the precondition modes of the action the agent refused to execute.
///
/// Starting from a state where the agent does execute the action, each
/// unresolved precondition atom is flipped on its own. If the agent still
/// executes, the atom is not a precondition; otherwise its value in the
/// executable state is the required one.
pub fn update_pal_ordering(
    ctx: &FailureContext,
    instance: &ProblemInstance,
    pool: &[State],
    unresolved: &[PalTuple],
    known: &BTreeMap<PalTuple, Mode>,
    asker: &mut Asker<'_>,
) -> Result<BTreeMap<PalTuple, Mode>, InterrogationError> {
    let action = ctx.failed_action.action;
    let targets: Vec<&PalTuple> = unresolved
        .iter()
        .filter(|p| p.action == action && p.location == Location::Pre)
        .collect();
    if targets.is_empty() {
        return Ok(BTreeMap::new());
    }
    let name = instance.vocab().action(action).name.clone();
    let probes_before = asker.repair;
    let Some((state, ga)) = find_executable(ctx, instance, pool, known, asker)? else {
        return Err(InterrogationError::RepairFailure {
            action: name,
            probes: asker.repair - probes_before,
            partial: None,
        });
    };
    super::check_conflict(asker, instance)?;
    let mut resolved = BTreeMap::new();
    for pal in targets {
        let atom = pal.atom.ground(&ga.args);
        let mut flipped = state.clone();
        let was_true = state.contains(&atom);
        if was_true {
            flipped.remove(&atom);
        } else {
            flipped.insert(atom);
        }
        let executes = match asker.known_outcome(&flipped, &ga) {
            Some(ok) => ok,
            None => asker.ask(&single(&flipped, &ga), QueryKind::Repair)?.prefix_len == 1,
        };
        let mode = match (executes, was_true) {
            (true, _) => Mode::Absent,
            (false, true) => Mode::Pos,
            (false, false) => Mode::Neg,
        };
        resolved.insert(pal.clone(), mode);
    }
    Ok(resolved)
}
