//! Ground a two-model problem, solve it and validate the plan step by step.

use interrogator::domains;
use interrogator::planner::{self, SearchLimits};
use interrogator::pddl::parse_domain;
use interrogator::query_gen::{compile_ppo, TwinModel, TwinRole};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (truth, instance) = domains::BLOCKSWORLD.load()?;
    let sloppy = domains::BLOCKSWORLD.domain.replacen("(clear ?x) (ontable ?x) (handempty)", "(clear ?x) (handempty)", 1);
    let other = parse_domain(&sloppy)?.rebase(truth.vocab().clone())?;

    let problem = compile_ppo(
        TwinModel::unguarded(truth, TwinRole::I),
        TwinModel::unguarded(other, TwinRole::J),
        instance.init().clone(),
    );
    let (grounded, _) = planner::ground(&problem, &instance, planner::DEFAULT_GROUNDING_CAP)?;
    println!("{} atoms, {} ground actions", grounded.atoms.len(), grounded.actions.len());

    let Some(plan) = planner::solve(&grounded, &SearchLimits::default())? else {
        println!("the two models agree everywhere reachable");
        return Ok(());
    };
    for line in planner::trace(&grounded, &grounded.init, &plan) {
        println!("{line}");
    }
    println!("valid: {}", planner::validate(&grounded, &plan).valid);
    Ok(())
}
