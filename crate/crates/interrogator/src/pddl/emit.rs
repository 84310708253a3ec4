use std::fmt::Write as _;

use super::model::{Location, Mode, Model};
use super::state::ProblemInstance;
use super::vocab::{Vocabulary, ROOT_SORT};

fn typed_param(vocab: &Vocabulary, name: &str, sort: &str) -> String {
    if vocab.typed {
        format!("?{name} - {sort}")
    } else {
        format!("?{name}")
    }
}

/// Canonical domain text: actions sorted by name, literals sorted by
/// location, predicate name and argument positions. `Absent` entries are not
/// written.
pub fn emit_domain(model: &Model) -> String {
    let vocab = model.vocab();
    let mut out = String::new();
    let _ = writeln!(out, "(define (domain {})", vocab.name);

    let negative = model
        .palms()
        .iter()
        .any(|(p, m)| p.location == Location::Pre && *m == Mode::Neg);
    let mut reqs = vec![":strips"];
    if vocab.typed {
        reqs.push(":typing");
    }
    if negative {
        reqs.push(":negative-preconditions");
    }
    let _ = writeln!(out, "  (:requirements {})", reqs.join(" "));

    if vocab.typed {
        let decl: Vec<String> = vocab
            .types
            .declared()
            .map(|(t, p)| format!("{t} - {p}"))
            .collect();
        if !decl.is_empty() {
            let _ = writeln!(out, "  (:types {})", decl.join(" "));
        }
    }

    out.push_str("  (:predicates");
    for p in vocab.predicates() {
        let _ = write!(out, "\n    ({}", p.name);
        for (k, s) in p.sorts.iter().enumerate() {
            let _ = write!(out, " {}", typed_param(vocab, &format!("x{}", k + 1), s));
        }
        out.push(')');
    }
    out.push_str(")\n");

    let mut order: Vec<usize> = (0..vocab.actions().len()).collect();
    order.sort_by(|a, b| vocab.action(*a).name.cmp(&vocab.action(*b).name));
    for a in order {
        let header = vocab.action(a);
        let params: Vec<String> = header
            .params
            .iter()
            .map(|p| typed_param(vocab, &p.name, &p.sort))
            .collect();
        let _ = write!(out, "  (:action {}\n    :parameters ({})", header.name, params.join(" "));
        for (loc, key) in [(Location::Pre, ":precondition"), (Location::Eff, ":effect")] {
            let lits: Vec<String> = model
                .literals(a, loc)
                .map(|(atom, sign)| {
                    let s = vocab.fmt_atom(a, atom);
                    if sign {
                        s
                    } else {
                        format!("(not {s})")
                    }
                })
                .collect();
            if !lits.is_empty() {
                let _ = write!(out, "\n    {key} (and {})", lits.join(" "));
            }
        }
        out.push_str(")\n");
    }
    out.push_str(")\n");
    out
}

/// Canonical problem text with an empty goal.
pub fn emit_problem(instance: &ProblemInstance) -> String {
    let vocab = instance.vocab();
    let mut out = String::new();
    let _ = writeln!(out, "(define (problem {})", instance.name);
    let _ = writeln!(out, "  (:domain {})", vocab.name);
    let objs: Vec<String> = instance
        .objects()
        .iter()
        .map(|o| {
            if vocab.typed && o.sort != ROOT_SORT {
                format!("{} - {}", o.name, o.sort)
            } else {
                o.name.clone()
            }
        })
        .collect();
    let _ = writeln!(out, "  (:objects {})", objs.join(" "));
    let _ = writeln!(out, "  (:init {})", instance.state_atoms(instance.init()).join(" "));
    out.push_str("  (:goal (and)))\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model_space::abstract_model;
    use crate::pddl::{parse_domain, parse_problem, PalTuple};

    const LOAD: &str = "
    (define (domain logistics)
      (:requirements :strips :typing)
      (:types truck package - locatable location)
      (:predicates (at ?o - locatable ?l - location) (in ?p - package ?t - truck))
      (:action load_truck
        :parameters (?p - package ?t - truck ?l - location)
        :precondition (and (at ?t ?l) (at ?p ?l))
        :effect (and (in ?p ?t) (not (at ?p ?l)))))";

    #[test]
    fn empty_model_emits_headers_only() {
        let m = parse_domain(LOAD).unwrap();
        let empty = Model::empty(m.vocab().clone());
        let text = emit_domain(&empty);
        assert!(text.contains("(:action load_truck"));
        assert!(!text.contains(":precondition"));
        assert!(!text.contains(":effect"));
        assert!(parse_domain(&text).unwrap().palms().is_empty());
    }

    #[test]
    fn abstracted_delete_leaves_single_effect() {
        let m = parse_domain(LOAD).unwrap();
        let v = m.vocab().clone();
        let delete = PalTuple::parse(&v, "load_truck eff (at ?p ?l)").unwrap();
        let m1 = abstract_model(&m, &delete.with_mode(Mode::Neg));
        let text = emit_domain(&m1);
        assert!(text.contains(":effect (and (in ?p ?t))"), "{text}");
    }

    #[test]
    fn emit_is_idempotent_and_parse_inverse() {
        let m = parse_domain(LOAD).unwrap();
        let once = emit_domain(&m);
        let back = parse_domain(&once).unwrap();
        assert_eq!(back, m);
        assert_eq!(emit_domain(&back), once);
    }

    #[test]
    fn problem_round_trips() {
        let m = parse_domain(LOAD).unwrap();
        let p = parse_problem(
            "(define (problem p1) (:domain logistics)
               (:objects p1 - package t1 - truck l1 l2 - location)
               (:init (at t1 l1) (at p1 l1)))",
            m.vocab().clone(),
        )
        .unwrap();
        let text = emit_problem(&p);
        assert_eq!(parse_problem(&text, m.vocab().clone()).unwrap(), p);
    }
}
