use std::collections::{HashSet, VecDeque};

use crate::agent::PlanOutcomeQuery;
use crate::pddl::{GroundAction, Model, ProblemInstance, State};

/// A plan-outcome query on which the two models answer differently, found
/// by breadth-first search over the states reachable from `states` in at
/// most `depth` steps. `None` means no such query exists within the bound.
pub fn equivalence_witness(
    a: &Model,
    b: &Model,
    instance: &ProblemInstance,
    states: &[State],
    depth: Option<usize>,
) -> Option<PlanOutcomeQuery> {
    let groundings = instance.all_groundings();
    for init in states {
        let mut seen: HashSet<State> = HashSet::from([init.clone()]);
        let mut frontier: VecDeque<(State, Vec<GroundAction>)> = VecDeque::from([(init.clone(), Vec::new())]);
        while let Some((s, plan)) = frontier.pop_front() {
            if depth.is_some_and(|d| plan.len() >= d) {
                continue;
            }
            for g in &groundings {
                let sa = a.successor(&s, g);
                let sb = b.successor(&s, g);
                let mut next = plan.clone();
                next.push(g.clone());
                match (sa, sb) {
                    (Some(x), Some(y)) if x == y => {
                        if seen.insert(x.clone()) {
                            frontier.push_back((x, next));
                        }
                    }
                    (None, None) => {}
                    _ => {
                        return Some(PlanOutcomeQuery {
                            init: init.clone(),
                            plan: next,
                        })
                    }
                }
            }
        }
    }
    None
}

/// True when no plan from the given states tells the two models apart.
pub fn functionally_equivalent(
    a: &Model,
    b: &Model,
    instance: &ProblemInstance,
    states: &[State],
    depth: Option<usize>,
) -> bool {
    equivalence_witness(a, b, instance, states, depth).is_none()
}
