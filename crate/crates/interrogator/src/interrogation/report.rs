use std::io::{self, Write};

use serde::{Deserialize, Serialize};

/// One query issued while refining a pal tuple. Identical entries from
/// different model groups are merged and counted in `groups`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairRecord {
    pub modes: String,
    pub groups: usize,
    pub init: Option<Vec<String>>,
    pub plan: Option<Vec<String>>,
    pub agent_prefix_len: Option<usize>,
    pub twin_prefix_len: Option<(usize, usize)>,
    pub outcome: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub pal: String,
    /// `refine`, `defer`, `accept-stalled` or `repair`.
    pub event: String,
    pub pairs: Vec<PairRecord>,
    pub surviving_modes: Vec<String>,
    pub repaired: Vec<String>,
    pub models: usize,
    pub resolved: usize,
    pub lattice_queries: usize,
    pub repair_probes: usize,
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub domain: String,
    pub converged: bool,
    pub iterations: usize,
    pub models: usize,
    pub lattice_queries: usize,
    pub repair_probes: usize,
    pub total_queries: usize,
    pub query_budget: usize,
    pub truth_violations: usize,
    pub accuracy: Option<f64>,
    pub accuracy_over_truth_literals: Option<f64>,
    pub wall_seconds: f64,
    pub mean_query_seconds: f64,
    pub max_query_seconds: f64,
}

pub fn write_jsonl(records: &[IterationRecord], mut out: impl Write) -> io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
