//! Find a plan that tells two candidate settings of one literal slot apart.

use interrogator::agent::{simulate, AgentHandle};
use interrogator::domains;
use interrogator::model_space::{abstract_model, all_pal_tuples};
use interrogator::pddl::Mode;
use interrogator::planner::SearchLimits;
use interrogator::query_gen::generate_query;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (truth, instance) = domains::GRIPPER.load()?;
    let agent = AgentHandle::new(truth.clone(), instance.clone())?;
    let pool = agent.random_walk_states(20, 30, 1).states;

    // Keep everything the truth says except one slot, then ask which
    // setting of that slot the agent follows.
    let pal = all_pal_tuples(truth.vocab())
        .into_iter()
        .find(|p| p.display(truth.vocab()) == "pick eff (at ?b ?r)")
        .expect("slot exists");
    let mode = truth.mode_of(&pal).unwrap_or(Mode::Absent);
    let base = abstract_model(&truth, &pal.with_mode(mode));

    for (mi, mj) in [(Mode::Pos, Mode::Neg), (Mode::Pos, Mode::Absent), (Mode::Neg, Mode::Absent)] {
        let found = generate_query(&base, mi, mj, &pal, &pool, &instance, &SearchLimits::default(), 100_000)?;
        let Some(q) = found.query else {
            println!("{mi} vs {mj}: indistinguishable on this pool");
            continue;
        };
        let plan: Vec<String> = q.plan.iter().map(|g| instance.fmt_action(g)).collect();
        let agent_says = simulate(&truth, &q);
        let twin_i = simulate(&found.model_i, &q);
        let twin_j = simulate(&found.model_j, &q);
        println!("{mi} vs {mj}: from {}", instance.fmt_state(&q.init));
        println!("  plan  {}", plan.join(" "));
        println!("  agent {}", instance.fmt_state(&agent_says.final_state));
        println!("  {mi}     {}", instance.fmt_state(&twin_i.final_state));
        println!("  {mj}     {}", instance.fmt_state(&twin_j.final_state));
    }
    Ok(())
}
