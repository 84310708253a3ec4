//! Record a run's transcript, then learn again from the transcript alone.

use interrogator::agent::{read_transcript, write_transcript, AgentHandle, ReplayOracle};
use interrogator::domains;
use interrogator::interrogation::{run_aia, AiaConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (truth, instance) = domains::MICONIC.load()?;
    let agent = AgentHandle::new(truth, instance.clone())?;
    let pool = agent.random_walk_states(40, 60, 3).states;
    let live = run_aia(&agent, &instance, &pool, &AiaConfig::default())?;

    let mut buf = Vec::new();
    write_transcript(&agent.transcript(), &mut buf)?;
    println!("transcript: {} queries, {} bytes", agent.query_count(), buf.len());

    let records = read_transcript(std::str::from_utf8(&buf)?)?;
    let replay = ReplayOracle::new(instance.clone(), &records)?;
    let again = run_aia(&replay, &instance, &pool, &AiaConfig::default())?;
    println!("models live: {}  replayed: {}", live.models.len(), again.models.len());
    println!("same model set: {}", live.models == again.models);
    Ok(())
}
