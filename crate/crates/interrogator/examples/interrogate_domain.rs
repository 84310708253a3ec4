//! Learn one of the bundled domains from a simulated agent and compare the
//! result with the true model.
//!
//! cargo run --release --example interrogate_domain -- blocksworld

use interrogator::agent::{AgentHandle, DEFAULT_POOL_SIZE, DEFAULT_WALK_LENGTH};
use interrogator::domains;
use interrogator::interrogation::{functionally_equivalent, run_aia, AiaConfig};
use interrogator::pddl::emit_domain;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "gripper".into());
    let bundled = domains::by_name(&name).ok_or(format!("unknown domain `{name}`"))?;
    let (truth, instance) = bundled.load()?;
    let agent = AgentHandle::new(truth.clone(), instance.clone())?;
    let pool = agent.random_walk_states(DEFAULT_WALK_LENGTH, DEFAULT_POOL_SIZE, 7);

    let config = AiaConfig {
        ground_truth: Some(truth.clone()),
        ..AiaConfig::default()
    };
    let outcome = run_aia(&agent, &instance, &pool.states, &config)?;
    let learned = outcome.models.canonical();

    println!("{}", emit_domain(&learned));
    println!("models kept:      {}", outcome.models.len());
    println!("lattice queries:  {}", outcome.summary.lattice_queries);
    println!("repair probes:    {}", outcome.summary.repair_probes);
    println!("query budget:     {}", outcome.summary.query_budget);
    println!("accuracy:         {:.3}", outcome.summary.accuracy.unwrap_or(0.0));
    println!("wrong prunes:     {}", outcome.summary.truth_violations);
    println!(
        "equivalent to the agent on the pool: {}",
        functionally_equivalent(&learned, &truth, &instance, &pool.states, None)
    );
    println!("wall time:        {:.2}s", outcome.summary.wall_seconds);
    Ok(())
}
