//! Command-line entry points behind the `aia` binary.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::agent::{
    read_transcript, write_transcript, AgentError, AgentHandle, PlanOutcomeOracle, ReplayOracle,
    DEFAULT_POOL_SIZE, DEFAULT_WALK_LENGTH,
};
use crate::domains;
use crate::interrogation::{
    equivalence_witness, resume_aia, run_aia, write_jsonl, AiaConfig, Checkpoint, InterrogationError,
    InterrogationState,
};
use crate::model_space::{accuracy, behavior_key, ModelSet, ModelSpaceError};
use crate::pddl::{emit_domain, parse_domain, parse_problem, Model, PddlError, ProblemInstance, State};
use crate::planner::{SearchLimits, DEFAULT_NODE_CAP, DEFAULT_PLAN_CAP};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_REPAIR: i32 = 3;
pub const EXIT_RESOURCE: i32 = 4;

fn positive(text: &str) -> Result<usize, String> {
    match text.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(n) => Ok(n),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Debug, Parser)]
#[command(name = "aia", version, about = "Learn an agent's STRIPS model by querying it")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Interrogate a simulated agent and write the learned model.
    Interrogate(InterrogateArgs),
    /// Compare a learned domain with a reference domain.
    Evaluate(EvaluateArgs),
    /// Write a state pool gathered by seeded random walks.
    GenStates(GenStatesArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Jsonl,
    Summary,
}

#[derive(Debug, Clone, Args)]
pub struct InstanceArgs {
    /// Domain file, or the name of a bundled domain (gripper, blocksworld, miconic).
    #[arg(long)]
    pub domain: String,
    /// Problem file. Defaults to the bundled problem when --domain names a bundled domain.
    #[arg(long)]
    pub problem: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PoolArgs {
    /// State pool file, one state per line. Random walks are used when absent.
    #[arg(long)]
    pub states: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_POOL_SIZE, value_parser = positive)]
    pub max_states: usize,
}

#[derive(Debug, Clone, Args)]
pub struct InterrogateArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[command(flatten)]
    pub pool: PoolArgs,
    #[arg(long, default_value_t = DEFAULT_PLAN_CAP, value_parser = positive)]
    pub plan_cap: usize,
    #[arg(long, default_value_t = DEFAULT_NODE_CAP, value_parser = positive)]
    pub node_cap: usize,
    #[arg(long, default_value = "aia-out")]
    pub out: PathBuf,
    /// What to print on standard output when the run ends.
    #[arg(long, value_enum, default_value_t = ReportFormat::Summary)]
    pub report: ReportFormat,
    /// Answer queries from a recorded transcript instead of the hidden model.
    #[arg(long)]
    pub replay: Option<PathBuf>,
    /// Continue from a checkpoint written by an earlier run.
    #[arg(long)]
    pub resume: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    /// Learned domain file.
    #[arg(long)]
    pub learned: PathBuf,
    #[command(flatten)]
    pub reference: InstanceArgs,
    #[command(flatten)]
    pub pool: PoolArgs,
    /// Longest plan tried when looking for a disagreement; unbounded if absent.
    #[arg(long)]
    pub bound: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct GenStatesArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_POOL_SIZE)]
    pub max_states: usize,
    #[arg(long, default_value_t = DEFAULT_WALK_LENGTH)]
    pub walk_length: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Pddl { path: String, source: PddlError },
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    ModelSpace(#[from] ModelSpaceError),
    #[error(transparent)]
    Interrogation(#[from] InterrogationError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Interrogation(InterrogationError::RepairFailure { .. }) => EXIT_REPAIR,
            CliError::Interrogation(e) if e.is_resource_limit() => EXIT_RESOURCE,
            _ => EXIT_INPUT,
        }
    }
}

/// Everything `cmd_interrogate` needs, resolved from the command line.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub domain_text: String,
    pub domain_label: String,
    pub problem_text: String,
    pub problem_label: String,
    pub states: Option<PathBuf>,
    pub max_states: usize,
    pub seed: u64,
    pub plan_cap: usize,
    pub node_cap: usize,
    pub out: PathBuf,
    pub report: ReportFormat,
    pub replay: Option<PathBuf>,
    pub resume: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Domain and problem text with labels for diagnostics.
fn resolve_instance(args: &InstanceArgs) -> Result<(String, String, String, String), CliError> {
    let path = Path::new(&args.domain);
    let (domain_text, domain_label, bundled_problem) = if path.exists() {
        (read(path)?, args.domain.clone(), None)
    } else if let Some(b) = domains::by_name(&args.domain) {
        (b.domain.to_string(), b.name.to_string(), Some(b.problem))
    } else {
        return Err(CliError::Input(format!(
            "`{}` is neither a file nor a bundled domain",
            args.domain
        )));
    };
    let (problem_text, problem_label) = match (&args.problem, bundled_problem) {
        (Some(p), _) => (read(p)?, p.display().to_string()),
        (None, Some(text)) => (text.to_string(), format!("{} problem", args.domain)),
        (None, None) => return Err(CliError::Input("--problem is required for a domain file".into())),
    };
    Ok((domain_text, domain_label, problem_text, problem_label))
}

fn load(
    domain_text: &str,
    domain_label: &str,
    problem_text: &str,
    problem_label: &str,
) -> Result<(Model, Arc<ProblemInstance>), CliError> {
    let model = parse_domain(domain_text).map_err(|source| CliError::Pddl {
        path: domain_label.into(),
        source,
    })?;
    let instance = parse_problem(problem_text, model.vocab().clone()).map_err(|source| CliError::Pddl {
        path: problem_label.into(),
        source,
    })?;
    Ok((model, Arc::new(instance)))
}

/// Read a state pool: one parenthesized list of atoms per line. Blank lines
/// and lines starting with `;` are skipped.
pub fn read_state_pool(text: &str, instance: &ProblemInstance) -> Result<Vec<State>, PddlError> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with(';'))
        .map(|l| instance.parse_state(l))
        .collect()
}

pub fn write_state_pool(states: &[State], instance: &ProblemInstance) -> String {
    states.iter().map(|s| instance.fmt_state(s) + "\n").collect()
}

fn pool(args_states: &Option<PathBuf>, max_states: usize, seed: u64, agent: &AgentHandle) -> Result<Vec<State>, CliError> {
    match args_states {
        Some(path) => {
            let mut states = read_state_pool(&read(path)?, agent.instance()).map_err(|source| CliError::Pddl {
                path: path.display().to_string(),
                source,
            })?;
            states.truncate(max_states);
            if states.is_empty() {
                return Err(CliError::Input(format!("{}: no states", path.display())));
            }
            Ok(states)
        }
        None => Ok(agent.random_walk_states(DEFAULT_WALK_LENGTH, max_states, seed).states),
    }
}

impl RunConfig {
    pub fn from_args(args: &InterrogateArgs) -> Result<Self, CliError> {
        let (domain_text, domain_label, problem_text, problem_label) = resolve_instance(&args.instance)?;
        Ok(RunConfig {
            domain_text,
            domain_label,
            problem_text,
            problem_label,
            states: args.pool.states.clone(),
            max_states: args.pool.max_states,
            seed: args.pool.seed,
            plan_cap: args.plan_cap,
            node_cap: args.node_cap,
            out: args.out.clone(),
            report: args.report,
            replay: args.replay.clone(),
            resume: args.resume.clone(),
        })
    }
}

/// Members of a model set with distinct behaviour, each represented by its
/// smallest member.
fn distinct_behaviours(models: &ModelSet) -> Vec<Model> {
    let mut classes: BTreeMap<_, Vec<Model>> = BTreeMap::new();
    for m in models.models() {
        classes.entry(behavior_key(m.palms())).or_default().push(m);
    }
    classes
        .into_values()
        .map(|ms| {
            ms.into_iter()
                .map(|m| (m.literal_count(), emit_domain(&m), m))
                .min_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)))
                .map(|(_, _, m)| m)
                .expect("classes are never empty")
        })
        .collect()
}

/// Run a full interrogation and write its artifacts to `config.out`:
/// `canonical.pddl`, `learned/model-NNNN.pddl` (one per distinct
/// behaviour), `models.json`, `report.jsonl`, `summary.json`,
/// `transcript.jsonl` and `checkpoint.json`.
pub fn cmd_interrogate(config: &RunConfig) -> Result<(), CliError> {
    let (hidden, instance) = load(
        &config.domain_text,
        &config.domain_label,
        &config.problem_text,
        &config.problem_label,
    )?;
    let agent = AgentHandle::new(hidden, instance.clone())?;
    let states = pool(&config.states, config.max_states, config.seed, &agent)?;
    let replay = match &config.replay {
        Some(path) => Some(ReplayOracle::new(instance.clone(), &read_transcript(&read(path)?)?)?),
        None => None,
    };
    let oracle: &dyn PlanOutcomeOracle = match &replay {
        Some(r) => r,
        None => &agent,
    };
    fs::create_dir_all(config.out.join("learned")).map_err(|source| CliError::Io {
        path: config.out.clone(),
        source,
    })?;
    let aia = AiaConfig {
        limits: SearchLimits {
            plan_cap: config.plan_cap,
            node_cap: config.node_cap,
        },
        checkpoint: Some(config.out.join("checkpoint.json")),
        ..AiaConfig::default()
    };
    let result = match &config.resume {
        Some(path) => {
            let cp: Checkpoint =
                serde_json::from_str(&read(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            let state = InterrogationState::from_checkpoint(instance.vocab().clone(), &cp)?;
            resume_aia(oracle, &instance, &states, &aia, state)
        }
        None => run_aia(oracle, &instance, &states, &aia),
    };
    let mut transcript = Vec::new();
    write_transcript(&agent.transcript(), &mut transcript).expect("writing to memory");
    if replay.is_none() {
        write(&config.out.join("transcript.jsonl"), &transcript)?;
    }
    let outcome = match result {
        Ok(o) => o,
        Err(e) => {
            if let InterrogationError::RepairFailure { partial: Some(p), .. } = &e {
                let text = serde_json::to_string_pretty(p).expect("model sets serialize");
                write(&config.out.join("partial.json"), text)?;
            }
            return Err(e.into());
        }
    };

    write(&config.out.join("canonical.pddl"), emit_domain(&outcome.models.canonical()))?;
    for (k, m) in distinct_behaviours(&outcome.models).iter().enumerate() {
        write(&config.out.join("learned").join(format!("model-{:04}.pddl", k + 1)), emit_domain(m))?;
    }
    let models_json = serde_json::to_string_pretty(&outcome.models.to_text()).expect("model sets serialize");
    write(&config.out.join("models.json"), models_json)?;
    let mut report = Vec::new();
    write_jsonl(&outcome.records, &mut report).expect("writing to memory");
    write(&config.out.join("report.jsonl"), &report)?;
    let summary = serde_json::to_string_pretty(&outcome.summary).expect("summaries serialize");
    write(&config.out.join("summary.json"), &summary)?;

    let mut stdout = io::stdout().lock();
    let printed = match config.report {
        ReportFormat::Jsonl => stdout.write_all(&report),
        ReportFormat::Summary => writeln!(stdout, "{summary}"),
    };
    printed.map_err(|source| CliError::Io {
        path: "<stdout>".into(),
        source,
    })
}

/// Accuracy of a learned domain against a reference, and whether the two
/// behave the same from every pool state.
pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<(), CliError> {
    let (domain_text, domain_label, problem_text, problem_label) = resolve_instance(&args.reference)?;
    let (truth, instance) = load(&domain_text, &domain_label, &problem_text, &problem_label)?;
    let learned_label = args.learned.display().to_string();
    let learned = parse_domain(&read(&args.learned)?).map_err(|source| CliError::Pddl {
        path: learned_label,
        source,
    })?;
    let acc = accuracy(&learned, &truth)?;
    let learned = learned.rebase(truth.vocab().clone()).map_err(|source| CliError::Pddl {
        path: args.learned.display().to_string(),
        source,
    })?;
    let agent = AgentHandle::new(truth.clone(), instance.clone())?;
    let states = pool(&args.pool.states, args.pool.max_states, args.pool.seed, &agent)?;
    println!("accuracy: {:.4}", acc.over_pal_tuples);
    println!("accuracy over reference literals: {:.4}", acc.over_truth_literals);
    match equivalence_witness(&learned, &truth, &instance, &states, args.bound) {
        None => println!("equivalent: yes"),
        Some(q) => {
            println!("equivalent: no");
            let plan: Vec<String> = q.plan.iter().map(|g| instance.fmt_action(g)).collect();
            println!("witness init: {}", instance.fmt_state(&q.init));
            println!("witness plan: {}", plan.join(" "));
        }
    }
    Ok(())
}

pub fn cmd_gen_states(args: &GenStatesArgs) -> Result<(), CliError> {
    let (domain_text, domain_label, problem_text, problem_label) = resolve_instance(&args.instance)?;
    let (model, instance) = load(&domain_text, &domain_label, &problem_text, &problem_label)?;
    let agent = AgentHandle::new(model, instance.clone())?;
    let pool = agent.random_walk_states(args.walk_length, args.max_states, args.seed);
    write(&args.out, write_state_pool(&pool.states, &instance))
}

/// Parse arguments, dispatch, and return the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Interrogate(args) => RunConfig::from_args(args).and_then(|c| cmd_interrogate(&c)),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::GenStates(args) => cmd_gen_states(args),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn main() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    run(Cli::parse())
}
