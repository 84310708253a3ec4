//! Collect a seeded pool of reachable states and show how each was reached.
//!
//! cargo run --example random_walk_pool -- miconic 3

use interrogator::agent::AgentHandle;
use interrogator::domains;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "blocksworld".into());
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0);
    let bundled = domains::by_name(&name).ok_or(format!("unknown domain `{name}`"))?;
    let (truth, instance) = bundled.load()?;
    let agent = AgentHandle::new(truth, instance.clone())?;

    let pool = agent.random_walk_states(40, 60, seed);
    for (state, path) in pool.states.iter().zip(&pool.witnesses) {
        let steps: Vec<String> = path.iter().map(|g| instance.fmt_action(g)).collect();
        println!("{}", instance.fmt_state(state));
        println!("    after {} step(s): {}", steps.len(), steps.join(" "));
    }
    println!("{} distinct states", pool.states.len());
    Ok(())
}
