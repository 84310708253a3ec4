//! Small benchmark domains shipped with the crate, each with one problem.

use std::sync::Arc;

use crate::pddl::{parse_domain, parse_problem, Model, PddlError, ProblemInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BundledDomain {
    pub name: &'static str,
    pub domain: &'static str,
    pub problem: &'static str,
}

pub const GRIPPER: BundledDomain = BundledDomain {
    name: "gripper",
    domain: include_str!("../domains/gripper-domain.pddl"),
    problem: include_str!("../domains/gripper-problem.pddl"),
};

pub const BLOCKSWORLD: BundledDomain = BundledDomain {
    name: "blocksworld",
    domain: include_str!("../domains/blocksworld-domain.pddl"),
    problem: include_str!("../domains/blocksworld-problem.pddl"),
};

pub const MICONIC: BundledDomain = BundledDomain {
    name: "miconic",
    domain: include_str!("../domains/miconic-domain.pddl"),
    problem: include_str!("../domains/miconic-problem.pddl"),
};

pub const ALL: [BundledDomain; 3] = [GRIPPER, BLOCKSWORLD, MICONIC];

pub fn by_name(name: &str) -> Option<BundledDomain> {
    ALL.into_iter().find(|d| d.name == name)
}

impl BundledDomain {
    /// The domain's true model and its problem instance.
    pub fn load(&self) -> Result<(Model, Arc<ProblemInstance>), PddlError> {
        let model = parse_domain(self.domain)?;
        let instance = parse_problem(self.problem, model.vocab().clone())?;
        Ok((model, Arc::new(instance)))
    }
}
