use std::collections::BTreeSet;
use std::sync::Arc;

use proptest::prelude::*;

use interrogator::agent::{simulate, AgentHandle, PlanOutcomeOracle, PlanOutcomeQuery};
use interrogator::domains::{self, BundledDomain};
use interrogator::interrogation::{functionally_equivalent, run_aia, AiaConfig, AiaOutcome};
use interrogator::model_space::{abstract_model, all_pal_tuples, query_budget, refine};
use interrogator::pddl::{
    emit_domain, instantiate_predicates, parse_domain, GroundAction, Model, Mode, PalTuple,
    ProblemInstance, State,
};
use interrogator::planner::{self, SearchLimits};
use interrogator::query_gen::{compile_ppo, generate_query, TwinModel, TwinRole};

fn gripper() -> (Model, Arc<ProblemInstance>) {
    domains::GRIPPER.load().unwrap()
}

fn mode(code: u8) -> Option<Mode> {
    match code {
        0 => Some(Mode::Pos),
        1 => Some(Mode::Neg),
        2 => Some(Mode::Absent),
        _ => None,
    }
}

/// A model over `truth`'s vocabulary with pal `k` set from `codes[k]`.
fn model_from_codes(truth: &Model, codes: &[u8]) -> Model {
    let mut m = Model::empty(truth.vocab().clone());
    for (pal, &c) in all_pal_tuples(truth.vocab()).iter().zip(codes) {
        if let Some(md) = mode(c) {
            m.insert(pal.with_mode(md)).unwrap();
        }
    }
    m
}

fn state_from_bits(instance: &ProblemInstance, bits: &[bool]) -> State {
    instance
        .ground_atoms()
        .into_iter()
        .zip(bits)
        .filter(|(_, b)| **b)
        .map(|(a, _)| a)
        .collect()
}

fn plan_from_picks(instance: &ProblemInstance, picks: &[usize]) -> Vec<GroundAction> {
    let all = instance.all_groundings();
    picks.iter().map(|k| all[k % all.len()].clone()).collect()
}

fn pool(handle: &AgentHandle) -> Vec<State> {
    handle.random_walk_states(10, 12, 3).states
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

#[test]
fn instantiated_atoms_are_closed_under_sort_preserving_parameter_swaps() {
    for d in domains::ALL {
        let (m, _) = d.load().unwrap();
        let vocab = m.vocab();
        for (a, atoms) in instantiate_predicates(vocab).iter().enumerate() {
            let header = vocab.action(a);
            let set: BTreeSet<_> = atoms.iter().cloned().collect();
            let idx: Vec<usize> = (0..header.arity()).collect();
            for perm in permutations(&idx) {
                if perm.iter().enumerate().any(|(i, &j)| header.params[i].sort != header.params[j].sort) {
                    continue;
                }
                let mapped: BTreeSet<_> = atoms
                    .iter()
                    .map(|at| {
                        let mut at = at.clone();
                        at.args = at.args.iter().map(|&k| perm[k]).collect();
                        at
                    })
                    .collect();
                assert_eq!(mapped, set, "{} in {}", header.name, d.name);
            }
        }
    }
}

#[test]
fn groundings_match_a_brute_force_substitution() {
    for d in domains::ALL {
        let (m, inst) = d.load().unwrap();
        let vocab = m.vocab();
        let n = inst.objects().len();
        for (a, header) in vocab.actions().iter().enumerate() {
            let mut expected = Vec::new();
            let mut args = vec![0usize; header.arity()];
            let total = n.pow(header.arity() as u32);
            for code in 0..total {
                let mut c = code;
                for slot in args.iter_mut().rev() {
                    *slot = c % n;
                    c /= n;
                }
                let distinct = args.iter().collect::<BTreeSet<_>>().len() == args.len();
                let fits = args.iter().zip(&header.params).all(|(&o, p)| {
                    vocab.types.is_subtype(&inst.objects()[o].sort, &p.sort)
                });
                if distinct && fits {
                    expected.push(GroundAction::new(a, args.clone()));
                }
            }
            assert_eq!(inst.groundings(a), expected, "{} in {}", header.name, d.name);
        }
    }
}

fn bundled(d: BundledDomain, seed: u64) -> AiaOutcome {
    let (truth, inst) = d.load().unwrap();
    let handle = AgentHandle::new(truth.clone(), inst.clone()).unwrap();
    let states = handle.random_walk_states(40, 60, seed).states;
    let config = AiaConfig {
        ground_truth: Some(truth),
        ..AiaConfig::default()
    };
    let out = run_aia(&handle, &inst, &states, &config).unwrap();
    assert_eq!(
        handle.distinct_queries(),
        out.summary.lattice_queries + out.summary.repair_probes,
        "{}",
        d.name
    );
    out
}

#[test]
fn runs_on_bundled_domains_respect_progress_and_growth_bounds() {
    for d in domains::ALL {
        let (truth, inst) = d.load().unwrap();
        let gamma = all_pal_tuples(truth.vocab()).len();
        let out = bundled(d, 5);
        assert!(out.records.len() <= gamma, "{}: {} iterations", d.name, out.records.len());
        assert!(out.summary.lattice_queries <= query_budget(truth.vocab()), "{}", d.name);
        let mut prev_models = 1;
        let mut prev_resolved = 0;
        for r in &out.records {
            assert!(r.models <= 3 * prev_models, "{} iteration {}", d.name, r.iteration);
            if r.event == "defer" {
                assert_eq!(r.resolved, prev_resolved);
            } else {
                assert!(r.resolved > prev_resolved, "{} iteration {}", d.name, r.iteration);
            }
            prev_models = r.models;
            prev_resolved = r.resolved;
        }
        let models: Vec<Model> = out.models.models().collect();
        let footprint: BTreeSet<&PalTuple> = models[0].palms().keys().collect();
        let states = AgentHandle::new(truth.clone(), inst.clone())
            .unwrap()
            .random_walk_states(40, 60, 5)
            .states;
        for m in &models {
            assert_eq!(m.palms().keys().collect::<BTreeSet<_>>(), footprint);
        }
        for m in models.iter().take(16) {
            assert!(functionally_equivalent(m, &truth, &inst, &states, Some(2)), "{}", d.name);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn emit_then_parse_preserves_every_mode(codes in prop::collection::vec(0u8..4, 20)) {
        let (truth, _) = gripper();
        let m = model_from_codes(&truth, &codes);
        let text = emit_domain(&m);
        let back = parse_domain(&text).unwrap().rebase(m.vocab().clone()).unwrap();
        prop_assert_eq!(emit_domain(&back), text);
        for pal in all_pal_tuples(m.vocab()) {
            prop_assert_eq!(
                back.mode_of(&pal).unwrap_or(Mode::Absent),
                m.mode_of(&pal).unwrap_or(Mode::Absent)
            );
        }
    }

    #[test]
    fn a_model_never_holds_two_variants(codes in prop::collection::vec(0u8..3, 20), k in 0usize..20, shift in 1u8..3) {
        let (truth, _) = gripper();
        let mut m = model_from_codes(&truth, &codes);
        let pal = all_pal_tuples(m.vocab())[k].clone();
        let other = mode((codes[k] + shift) % 3).unwrap();
        let before = m.clone();
        prop_assert!(m.insert(pal.with_mode(other)).is_err());
        prop_assert_eq!(&m, &before);
        prop_assert!(refine(&m, &pal, other).is_err());
    }

    #[test]
    fn refine_then_abstract_is_identity(codes in prop::collection::vec(0u8..4, 20), k in 0usize..20, md in 0u8..3) {
        let (truth, _) = gripper();
        let mut codes = codes;
        codes[k] = 3;
        let m = model_from_codes(&truth, &codes);
        let pal = all_pal_tuples(m.vocab())[k].clone();
        let md = mode(md).unwrap();
        let child = refine(&m, &pal, md).unwrap();
        let mut expected: BTreeSet<&PalTuple> = m.palms().keys().collect();
        expected.insert(&pal);
        prop_assert_eq!(child.palms().keys().collect::<BTreeSet<_>>(), expected);
        prop_assert_eq!(abstract_model(&child, &pal.with_mode(md)), m);
    }

    #[test]
    fn agent_answers_are_deterministic_sound_and_counted(
        bits in prop::collection::vec(any::<bool>(), 14),
        picks in prop::collection::vec(0usize..1000, 0..5),
    ) {
        let (truth, inst) = gripper();
        let handle = AgentHandle::new(truth.clone(), inst.clone()).unwrap();
        let query = PlanOutcomeQuery { init: state_from_bits(&inst, &bits), plan: plan_from_picks(&inst, &picks) };
        let first = handle.answer_plan_outcome(&query).unwrap();
        prop_assert_eq!(handle.query_count(), 1);
        let second = handle.answer_plan_outcome(&query).unwrap();
        prop_assert_eq!(&first, &second);
        prop_assert_eq!(handle.query_count(), 1);

        let mut state = query.init.clone();
        for ga in &query.plan[..first.prefix_len] {
            state = truth.successor(&state, ga).expect("prefix step must be executable");
        }
        prop_assert_eq!(&state, &first.final_state);
        if first.prefix_len < query.plan.len() {
            prop_assert!(truth.successor(&state, &query.plan[first.prefix_len]).is_none());
        }
    }

    #[test]
    fn distinct_queries_are_counted_once(
        queries in prop::collection::vec((prop::collection::vec(any::<bool>(), 14), prop::collection::vec(0usize..1000, 0..3)), 1..8),
    ) {
        let (truth, inst) = gripper();
        let handle = AgentHandle::new(truth, inst.clone()).unwrap();
        let mut seen = BTreeSet::new();
        for (bits, picks) in &queries {
            let init = state_from_bits(&inst, bits);
            let plan = plan_from_picks(&inst, picks);
            seen.insert((init.clone(), plan.clone()));
            handle.answer_plan_outcome(&PlanOutcomeQuery { init, plan }).unwrap();
        }
        prop_assert_eq!(handle.query_count(), seen.len());
        prop_assert_eq!(handle.transcript().len(), seen.len());
    }

    #[test]
    fn twin_problems_are_symmetric_and_plans_separate_the_twins(
        codes in prop::collection::vec(0u8..4, 20),
        k in 0usize..20,
        pair in 0usize..3,
    ) {
        let (truth, inst) = gripper();
        let handle = AgentHandle::new(truth.clone(), inst.clone()).unwrap();
        let states = pool(&handle);
        let mut codes = codes;
        codes[k] = 3;
        let base = model_from_codes(&truth, &codes);
        let pal = all_pal_tuples(base.vocab())[k].clone();
        let (mi, mj) = [(Mode::Pos, Mode::Neg), (Mode::Pos, Mode::Absent), (Mode::Neg, Mode::Absent)][pair];
        let limits = SearchLimits { plan_cap: 4, ..SearchLimits::default() };
        let fwd = generate_query(&base, mi, mj, &pal, &states, &inst, &limits, 10_000).unwrap();
        let bwd = generate_query(&base, mj, mi, &pal, &states, &inst, &limits, 10_000).unwrap();
        prop_assert_eq!(fwd.query.is_some(), bwd.query.is_some());
        if let (Some(q), Some(r)) = (&fwd.query, &bwd.query) {
            prop_assert_eq!(q.plan.len(), r.plan.len());
        }
        if let Some(q) = fwd.query {
            prop_assert!(!q.plan.is_empty());
            prop_assert_eq!(q.plan.last().unwrap().action, pal.action);
            prop_assert_ne!(fwd.twin_i.respond(&q), fwd.twin_j.respond(&q));

            let compiled = compile_ppo(fwd.twin_i.clone(), fwd.twin_j.clone(), q.init.clone());
            let (grounded, table) = planner::ground(&compiled, &inst, 10_000).unwrap();
            let steps: Vec<usize> = q
                .plan
                .iter()
                .map(|ga| grounded.actions.iter().position(|a| &a.label == ga).unwrap())
                .collect();
            prop_assert!(planner::validate_from(&grounded, &table.encode(&q.init), &steps).valid);
        }
    }

    #[test]
    fn planner_steps_match_model_successors(
        codes in prop::collection::vec(0u8..4, 20),
        bits in prop::collection::vec(any::<bool>(), 14),
        pick in 0usize..1000,
    ) {
        let (truth, inst) = gripper();
        let m = model_from_codes(&truth, &codes);
        let state = state_from_bits(&inst, &bits);
        let ga = plan_from_picks(&inst, &[pick]).pop().unwrap();
        let compiled = compile_ppo(
            TwinModel::unguarded(m.clone(), TwinRole::I),
            TwinModel::unguarded(m.clone(), TwinRole::J),
            state.clone(),
        );
        let (grounded, table) = planner::ground(&compiled, &inst, 10_000).unwrap();
        let expected = m.successor(&state, &ga);
        match grounded.actions.iter().find(|a| a.label == ga) {
            None => prop_assert!(expected.is_none()),
            Some(action) => {
                let bits = table.encode(&state);
                let once = planner::apply(&bits, action);
                prop_assert_eq!(&once, &planner::apply(&bits, action));
                prop_assert_eq!(once.map(|b| table.decode(&b, TwinRole::I).0), expected.clone());
                prop_assert_eq!(simulate(&m, &PlanOutcomeQuery { init: state.clone(), plan: vec![ga.clone()] }).prefix_len, usize::from(expected.is_some()));
            }
        }
    }

    #[test]
    fn solved_plans_validate(codes in prop::collection::vec(0u8..4, 20), other in prop::collection::vec(0u8..4, 20)) {
        let (truth, inst) = gripper();
        let compiled = compile_ppo(
            TwinModel::unguarded(model_from_codes(&truth, &codes), TwinRole::I),
            TwinModel::unguarded(model_from_codes(&truth, &other), TwinRole::J),
            inst.init().clone(),
        );
        let (grounded, _) = planner::ground(&compiled, &inst, 10_000).unwrap();
        let limits = SearchLimits { plan_cap: 4, ..SearchLimits::default() };
        if let Some(plan) = planner::solve(&grounded, &limits).unwrap() {
            prop_assert!(plan.len() <= 4);
            prop_assert!(planner::validate(&grounded, &plan).valid);
        }
    }
}

#[test]
fn gripper_runs_over_several_seeds_never_prune_the_truth() {
    for seed in 0..4 {
        let out = bundled(domains::GRIPPER, seed);
        assert_eq!(out.summary.truth_violations, 0);
    }
}
