//! Parse a PDDL domain, list its candidate literal slots and print it back in
//! canonical form.
//!
//! cargo run --example parse_and_emit -- path/to/domain.pddl

use interrogator::domains;
use interrogator::model_space::{all_pal_tuples, query_budget};
use interrogator::pddl::{emit_domain, parse_domain};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let text = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(path)?,
        None => domains::GRIPPER.domain.to_string(),
    };
    let model = parse_domain(&text)?;
    let vocab = model.vocab();

    for pal in all_pal_tuples(vocab) {
        let mode = model.mode_of(&pal).map(|m| m.symbol()).unwrap_or("?");
        println!("{:<40} {}", pal.display(vocab), mode);
    }
    println!("\nliterals: {}  query budget: {}\n", model.literal_count(), query_budget(vocab));
    print!("{}", emit_domain(&model));
    Ok(())
}
