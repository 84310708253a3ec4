//! Score a hand-edited model against the true gripper model.

use interrogator::domains;
use interrogator::interrogation::equivalence_witness;
use interrogator::model_space::accuracy;
use interrogator::pddl::parse_domain;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (truth, instance) = domains::GRIPPER.load()?;
    // drop forgets that the gripper was holding the ball
    let edited = domains::GRIPPER
        .domain
        .replace("(not (carry ?b ?g))", "");
    let model = parse_domain(&edited)?.rebase(truth.vocab().clone())?;

    let acc = accuracy(&model, &truth)?;
    println!("accuracy over slots:    {:.3}", acc.over_pal_tuples);
    println!("accuracy over literals: {:.3}", acc.over_truth_literals);

    match equivalence_witness(&model, &truth, &instance, &[instance.init().clone()], Some(4)) {
        None => println!("no behavioural difference within 4 steps"),
        Some(q) => {
            let plan: Vec<String> = q.plan.iter().map(|g| instance.fmt_action(g)).collect();
            println!("differs from {} after {}", instance.fmt_state(&q.init), plan.join(" "));
        }
    }
    Ok(())
}
