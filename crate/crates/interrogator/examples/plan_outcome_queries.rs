//! Ask a simulated agent a few plan-outcome queries by hand.

use interrogator::agent::{AgentHandle, PlanOutcomeQuery};
use interrogator::domains;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (truth, instance) = domains::GRIPPER.load()?;
    let agent = AgentHandle::new(truth, instance.clone())?;

    let plans = [
        "(pick b1 rooma left) (move rooma roomb) (drop b1 roomb left)",
        "(pick b1 rooma left) (pick b1 rooma right)",
        "(move roomb rooma)",
        "(pick b1 rooma left) (move rooma roomb) (drop b1 roomb left)",
    ];
    for text in plans {
        let plan = text
            .split_inclusive(')')
            .map(|s| instance.parse_action(s.trim()))
            .collect::<Result<Vec<_>, _>>()?;
        let query = PlanOutcomeQuery {
            init: instance.init().clone(),
            plan,
        };
        let r = agent.answer_plan_outcome(&query)?;
        println!("{text}");
        println!("  executed {} of {} steps", r.prefix_len, query.plan.len());
        println!("  final state {}", instance.fmt_state(&r.final_state));
    }
    // the repeated plan is answered from the cache
    println!("distinct queries: {}", agent.query_count());
    Ok(())
}
