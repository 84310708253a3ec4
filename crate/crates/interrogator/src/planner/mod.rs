//! Forward breadth-first search over grounded problems with disjunctive
//! preconditions and conditional effects.

mod ground;

use std::collections::HashMap;

use fixedbitset::FixedBitSet;
use thiserror::Error;

use crate::pddl::GroundAction;

pub use ground::{ground, TwinAtomTable};

pub type Bits = FixedBitSet;

pub const DEFAULT_PLAN_CAP: usize = 10;
pub const DEFAULT_NODE_CAP: usize = 2_000_000;
pub const DEFAULT_GROUNDING_CAP: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlannerError {
    #[error("search exceeded the node cap of {cap}")]
    NodeLimit { cap: usize },
    #[error("grounding produced {count} actions, above the cap of {cap}")]
    GroundingBlowup { count: usize, cap: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchLimits {
    pub plan_cap: usize,
    pub node_cap: usize,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            plan_cap: DEFAULT_PLAN_CAP,
            node_cap: DEFAULT_NODE_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Formula {
    True,
    False,
    Atom(usize),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
}

impl Formula {
    pub fn eval(&self, s: &Bits) -> bool {
        match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Atom(i) => s.contains(*i),
            Formula::Not(f) => !f.eval(s),
            Formula::And(fs) => fs.iter().all(|f| f.eval(s)),
            Formula::Or(fs) => fs.iter().any(|f| f.eval(s)),
        }
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn xor(a: Formula, b: Formula) -> Formula {
        Formula::Or(vec![
            Formula::And(vec![a.clone(), Formula::not(b.clone())]),
            Formula::And(vec![Formula::not(a), b]),
        ])
    }
}

/// A conjunction of literals over atom indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Clause {
    pub pos: Vec<usize>,
    pub neg: Vec<usize>,
}

impl Clause {
    pub fn holds(&self, s: &Bits) -> bool {
        self.pos.iter().all(|&i| s.contains(i)) && !self.neg.iter().any(|&i| s.contains(i))
    }

    pub fn is_contradictory(&self) -> bool {
        self.pos.iter().any(|p| self.neg.contains(p))
    }

    pub fn to_formula(&self) -> Formula {
        let mut parts: Vec<Formula> = self.pos.iter().map(|&i| Formula::Atom(i)).collect();
        parts.extend(self.neg.iter().map(|&i| Formula::not(Formula::Atom(i))));
        Formula::And(parts)
    }
}

/// A disjunction of clauses. An empty disjunction is unsatisfiable.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dnf(pub Vec<Clause>);

impl Dnf {
    pub fn holds(&self, s: &Bits) -> bool {
        self.0.iter().any(|c| c.holds(s))
    }

    pub fn to_formula(&self) -> Formula {
        Formula::Or(self.0.iter().map(Clause::to_formula).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CondEffect {
    pub condition: Formula,
    pub add: Vec<usize>,
    pub del: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundedAction {
    /// The lifted action and objects this grounded action came from.
    pub label: GroundAction,
    pub name: String,
    pub pre: Dnf,
    pub effects: Vec<CondEffect>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundedProblem {
    pub atoms: Vec<String>,
    pub actions: Vec<GroundedAction>,
    pub init: Bits,
    pub goal: Formula,
}

/// Indices into [`GroundedProblem::actions`].
pub type Plan = Vec<usize>;

/// Successor of `state`, or `None` if no precondition clause holds. Every
/// effect condition is read from `state`; all deletes go before all adds.
pub fn apply(state: &Bits, action: &GroundedAction) -> Option<Bits> {
    if !action.pre.holds(state) {
        return None;
    }
    let firing: Vec<&CondEffect> = action
        .effects
        .iter()
        .filter(|e| e.condition.eval(state))
        .collect();
    let mut next = state.clone();
    for e in &firing {
        for &d in &e.del {
            next.set(d, false);
        }
    }
    for e in &firing {
        for &a in &e.add {
            next.insert(a);
        }
    }
    Some(next)
}

/// Shortest plan of at most `limits.plan_cap` steps from the problem's
/// initial state.
pub fn solve(problem: &GroundedProblem, limits: &SearchLimits) -> Result<Option<Plan>, PlannerError> {
    Ok(solve_from(problem, std::slice::from_ref(&problem.init), limits)?.map(|(_, p)| p))
}

struct Node {
    parent: usize,
    action: usize,
    root: usize,
}

/// Breadth-first search started from all of `inits` at once. Returns the
/// index of the initial state the plan starts from and the plan. Plans are
/// shortest over all starts; among those, the first found in expansion order
/// wins, which favours earlier starts.
pub fn solve_from(
    problem: &GroundedProblem,
    inits: &[Bits],
    limits: &SearchLimits,
) -> Result<Option<(usize, Plan)>, PlannerError> {
    let mut index: HashMap<Bits, usize> = HashMap::new();
    let mut nodes: Vec<Node> = Vec::new();
    let mut frontier: Vec<(usize, Bits)> = Vec::new();
    for (k, s) in inits.iter().enumerate() {
        if index.contains_key(s) {
            continue;
        }
        if problem.goal.eval(s) {
            return Ok(Some((k, vec![])));
        }
        index.insert(s.clone(), nodes.len());
        frontier.push((nodes.len(), s.clone()));
        nodes.push(Node {
            parent: usize::MAX,
            action: usize::MAX,
            root: k,
        });
    }

    let rebuild = |nodes: &[Node], mut at: usize| {
        let mut plan = Vec::new();
        while nodes[at].parent != usize::MAX {
            plan.push(nodes[at].action);
            at = nodes[at].parent;
        }
        plan.reverse();
        (nodes[at].root, plan)
    };

    for _depth in 0..limits.plan_cap {
        let mut next = Vec::new();
        for (id, state) in &frontier {
            for (ai, action) in problem.actions.iter().enumerate() {
                let Some(succ) = apply(state, action) else { continue };
                if index.contains_key(&succ) {
                    continue;
                }
                let nid = nodes.len();
                nodes.push(Node {
                    parent: *id,
                    action: ai,
                    root: nodes[*id].root,
                });
                if problem.goal.eval(&succ) {
                    return Ok(Some(rebuild(&nodes, nid)));
                }
                if nodes.len() > limits.node_cap {
                    return Err(PlannerError::NodeLimit {
                        cap: limits.node_cap,
                    });
                }
                index.insert(succ.clone(), nid);
                next.push((nid, succ));
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Validation {
    pub valid: bool,
    /// First inapplicable step, or the plan length when every step applies
    /// but the goal does not hold at the end.
    pub failing_step: Option<usize>,
}

pub fn validate(problem: &GroundedProblem, plan: &[usize]) -> Validation {
    validate_from(problem, &problem.init, plan)
}

pub fn validate_from(problem: &GroundedProblem, init: &Bits, plan: &[usize]) -> Validation {
    let mut s = init.clone();
    for (k, &a) in plan.iter().enumerate() {
        match problem.actions.get(a).and_then(|act| apply(&s, act)) {
            Some(n) => s = n,
            None => {
                return Validation {
                    valid: false,
                    failing_step: Some(k),
                }
            }
        }
    }
    let valid = problem.goal.eval(&s);
    Validation {
        valid,
        failing_step: (!valid).then_some(plan.len()),
    }
}

/// One line per visited state, naming the true atoms.
pub fn trace(problem: &GroundedProblem, init: &Bits, plan: &[usize]) -> Vec<String> {
    let show = |s: &Bits| {
        s.ones()
            .map(|i| problem.atoms[i].clone())
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut out = vec![format!("0: {}", show(init))];
    let mut s = init.clone();
    for (k, &a) in plan.iter().enumerate() {
        match apply(&s, &problem.actions[a]) {
            Some(n) => {
                s = n;
                out.push(format!("{}: {} -> {}", k + 1, problem.actions[a].name, show(&s)));
            }
            None => {
                out.push(format!("{}: {} inapplicable", k + 1, problem.actions[a].name));
                break;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(n: usize, on: &[usize]) -> Bits {
        let mut b = Bits::with_capacity(n);
        for &i in on {
            b.insert(i);
        }
        b
    }

    fn strips(name: &str, pre: &[usize], add: &[usize], del: &[usize]) -> GroundedAction {
        GroundedAction {
            label: GroundAction::new(0, vec![]),
            name: name.into(),
            pre: Dnf(vec![Clause {
                pos: pre.to_vec(),
                neg: vec![],
            }]),
            effects: vec![CondEffect {
                condition: Formula::True,
                add: add.to_vec(),
                del: del.to_vec(),
            }],
        }
    }

    fn chain() -> GroundedProblem {
        // 0 -> 1 -> 2 -> 3 with a shortcut 0 -> 2 that also needs atom 4
        GroundedProblem {
            atoms: (0..5).map(|i| format!("a{i}")).collect(),
            actions: vec![
                strips("s01", &[0], &[1], &[0]),
                strips("s12", &[1], &[2], &[1]),
                strips("s23", &[2], &[3], &[2]),
                strips("jump", &[0, 4], &[2], &[0]),
            ],
            init: bits(5, &[0]),
            goal: Formula::Atom(3),
        }
    }

    #[test]
    fn empty_action_is_identity() {
        let s = bits(3, &[1]);
        let a = strips("noop", &[], &[], &[]);
        assert_eq!(apply(&s, &a), Some(s));
    }

    #[test]
    fn adds_win_over_deletes() {
        let s = bits(2, &[0]);
        let a = strips("flip", &[0], &[0, 1], &[0]);
        assert_eq!(apply(&s, &a), Some(bits(2, &[0, 1])));
    }

    #[test]
    fn conditions_read_the_old_state() {
        let s = bits(3, &[0]);
        let a = GroundedAction {
            label: GroundAction::new(0, vec![]),
            name: "c".into(),
            pre: Dnf(vec![Clause::default()]),
            effects: vec![
                CondEffect {
                    condition: Formula::Atom(0),
                    add: vec![1],
                    del: vec![0],
                },
                CondEffect {
                    condition: Formula::not(Formula::Atom(1)),
                    add: vec![2],
                    del: vec![],
                },
            ],
        };
        assert_eq!(apply(&s, &a), Some(bits(3, &[1, 2])));
    }

    #[test]
    fn shortest_plan_and_cap() {
        let p = chain();
        let limits = SearchLimits::default();
        assert_eq!(solve(&p, &limits).unwrap(), Some(vec![0, 1, 2]));
        let mut with_shortcut = p.clone();
        with_shortcut.init = bits(5, &[0, 4]);
        assert_eq!(solve(&with_shortcut, &limits).unwrap(), Some(vec![3, 2]));
        let tight = SearchLimits {
            plan_cap: 2,
            ..limits
        };
        assert_eq!(solve(&p, &tight).unwrap(), None);
    }

    #[test]
    fn goal_in_init_gives_empty_plan() {
        let mut p = chain();
        p.init = bits(5, &[3]);
        assert_eq!(solve(&p, &SearchLimits::default()).unwrap(), Some(vec![]));
        assert!(validate(&p, &[]).valid);
    }

    #[test]
    fn node_cap_is_an_error() {
        let p = chain();
        let limits = SearchLimits {
            plan_cap: 10,
            node_cap: 1,
        };
        assert!(matches!(solve(&p, &limits), Err(PlannerError::NodeLimit { .. })));
    }

    #[test]
    fn multi_start_prefers_shorter_then_earlier() {
        let p = chain();
        let starts = [bits(5, &[0]), bits(5, &[2]), bits(5, &[1])];
        let found = solve_from(&p, &starts, &SearchLimits::default()).unwrap();
        assert_eq!(found, Some((1, vec![2])));
    }

    #[test]
    fn validate_reports_failing_step() {
        let p = chain();
        assert_eq!(
            validate(&p, &[0, 2]),
            Validation {
                valid: false,
                failing_step: Some(1)
            }
        );
        assert_eq!(
            validate(&p, &[0, 1]),
            Validation {
                valid: false,
                failing_step: Some(2)
            }
        );
        assert!(validate(&p, &[0, 1, 2]).valid);
        assert_eq!(trace(&p, &p.init, &[0]).len(), 2);
    }
}
