use std::sync::Arc;

use super::model::{Location, Mode, Model, PalTuple, PalmTuple};
use super::sexpr::{self, Pos, Sexpr};
use super::state::{Object, ProblemInstance};
use super::vocab::{
    ActionHeader, LiftedAtom, Parameter, PredicateSchema, TypeHierarchy, Vocabulary, ROOT_SORT,
};
use super::PddlError;

const SUPPORTED_REQUIREMENTS: [&str; 3] = [":strips", ":typing", ":negative-preconditions"];

/// Constructs outside the supported subset, rejected with their own name.
const UNSUPPORTED_HEADS: [&str; 14] = [
    "forall",
    "exists",
    "or",
    "imply",
    "when",
    "=",
    "increase",
    "decrease",
    "assign",
    "scale-up",
    "scale-down",
    "<",
    ">",
    "either",
];

fn syntax(pos: Pos, message: impl Into<String>) -> PddlError {
    PddlError::Syntax {
        pos,
        message: message.into(),
    }
}

fn unsupported(construct: &str, pos: Pos) -> PddlError {
    PddlError::Unsupported {
        construct: construct.to_string(),
        pos,
    }
}

fn atom_of<'a>(e: &'a Sexpr, what: &str) -> Result<&'a str, PddlError> {
    e.as_atom().ok_or_else(|| syntax(e.pos(), format!("expected {what}")))
}

fn list_of<'a>(e: &'a Sexpr, what: &str) -> Result<&'a [Sexpr], PddlError> {
    e.as_list().ok_or_else(|| syntax(e.pos(), format!("expected {what}")))
}

/// Splits `(define (kind name) sections...)`.
fn define_block<'a>(e: &'a Sexpr, kind: &str) -> Result<(String, &'a [Sexpr]), PddlError> {
    let items = list_of(e, "(define ...)")?;
    if items.first().and_then(Sexpr::as_atom) != Some("define") {
        return Err(syntax(e.pos(), "expected `define`"));
    }
    let header = items
        .get(1)
        .ok_or_else(|| syntax(e.pos(), format!("missing ({kind} <name>)")))?;
    let h = list_of(header, &format!("({kind} <name>)"))?;
    if h.len() != 2 || h[0].as_atom() != Some(kind) {
        return Err(syntax(header.pos(), format!("expected ({kind} <name>)")));
    }
    Ok((atom_of(&h[1], "a name")?.to_string(), &items[2..]))
}

/// Parses `a b - t c` style lists into `(name, sort)` pairs.
fn typed_list(items: &[Sexpr], strip_var: bool) -> Result<Vec<(String, String, Pos)>, PddlError> {
    let mut out = Vec::new();
    let mut pending: Vec<(String, Pos)> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let it = &items[i];
        if let Some(l) = it.as_list() {
            if l.first().and_then(Sexpr::as_atom) == Some("either") {
                return Err(unsupported("either", it.pos()));
            }
            return Err(syntax(it.pos(), "unexpected list in typed list"));
        }
        let word = it.as_atom().unwrap();
        if word == "-" {
            let sort_expr = items
                .get(i + 1)
                .ok_or_else(|| syntax(it.pos(), "missing type after `-`"))?;
            if sort_expr.head() == Some("either") {
                return Err(unsupported("either", sort_expr.pos()));
            }
            let sort = atom_of(sort_expr, "a type name")?;
            if pending.is_empty() {
                return Err(syntax(it.pos(), "`-` without preceding names"));
            }
            for (n, p) in pending.drain(..) {
                out.push((n, sort.to_string(), p));
            }
            i += 2;
            continue;
        }
        let name = if strip_var {
            word.strip_prefix('?')
                .ok_or_else(|| syntax(it.pos(), format!("expected a variable, found `{word}`")))?
        } else {
            word
        };
        pending.push((name.to_string(), it.pos()));
        i += 1;
    }
    for (n, p) in pending {
        out.push((n, ROOT_SORT.to_string(), p));
    }
    Ok(out)
}

struct RawAction {
    header: ActionHeader,
    pre: Option<Sexpr>,
    eff: Option<Sexpr>,
}

fn parse_action(items: &[Sexpr], pos: Pos) -> Result<RawAction, PddlError> {
    let name = atom_of(items.get(1).ok_or_else(|| syntax(pos, "missing action name"))?, "an action name")?;
    let mut params = Vec::new();
    let mut pre = None;
    let mut eff = None;
    let mut i = 2;
    while i < items.len() {
        let key = atom_of(&items[i], "an action keyword")?;
        let value = items
            .get(i + 1)
            .ok_or_else(|| syntax(items[i].pos(), format!("missing value for `{key}`")))?;
        match key {
            ":parameters" => {
                params = typed_list(list_of(value, "a parameter list")?, true)?
                    .into_iter()
                    .map(|(name, sort, _)| Parameter { name, sort })
                    .collect();
            }
            ":precondition" => pre = Some(value.clone()),
            ":effect" => eff = Some(value.clone()),
            other => return Err(unsupported(other, items[i].pos())),
        }
        i += 2;
    }
    Ok(RawAction {
        header: ActionHeader {
            name: name.to_string(),
            params,
        },
        pre,
        eff,
    })
}

/// Collect `(atom, sign, pos)` literals from a conjunction.
fn literals(e: &Sexpr, out: &mut Vec<(Sexpr, bool)>) -> Result<(), PddlError> {
    let items = list_of(e, "a formula")?;
    let Some(head) = items.first() else {
        return Ok(());
    };
    let head_word = match head.as_atom() {
        Some(w) => w,
        None => return Err(syntax(head.pos(), "expected a connective or predicate")),
    };
    if UNSUPPORTED_HEADS.contains(&head_word) {
        return Err(unsupported(head_word, head.pos()));
    }
    match head_word {
        "and" => {
            for sub in &items[1..] {
                literals(sub, out)?;
            }
        }
        "not" => {
            if items.len() != 2 {
                return Err(syntax(e.pos(), "`not` takes one argument"));
            }
            let inner = &items[1];
            let inner_head = inner.head();
            if let Some(h) = inner_head {
                if UNSUPPORTED_HEADS.contains(&h) || h == "and" || h == "not" {
                    return Err(unsupported(&format!("not {h}"), inner.pos()));
                }
            }
            out.push((inner.clone(), false));
        }
        _ => out.push((e.clone(), true)),
    }
    Ok(())
}

fn lift_atom(
    vocab: &Vocabulary,
    action: usize,
    e: &Sexpr,
) -> Result<LiftedAtom, PddlError> {
    let items = list_of(e, "an atom")?;
    let name = atom_of(&items[0], "a predicate name")?;
    let predicate = vocab
        .predicate_index(name)
        .ok_or_else(|| PddlError::Semantic {
            pos: Some(e.pos()),
            message: format!("unknown predicate `{name}`"),
        })?;
    let header = vocab.action(action);
    let mut args = Vec::new();
    for a in &items[1..] {
        let w = atom_of(a, "a variable")?;
        let Some(var) = w.strip_prefix('?') else {
            return Err(unsupported(&format!("constant `{w}`"), a.pos()));
        };
        let k = header.params.iter().position(|p| p.name == var).ok_or_else(|| {
            PddlError::Semantic {
                pos: Some(a.pos()),
                message: format!("`?{var}` is not a parameter of `{}`", header.name),
            }
        })?;
        if args.contains(&k) {
            return Err(unsupported(&format!("repeated variable `?{var}`"), a.pos()));
        }
        args.push(k);
    }
    let atom = LiftedAtom { predicate, args };
    if !vocab.atom_fits(action, &atom) {
        return Err(PddlError::Semantic {
            pos: Some(e.pos()),
            message: format!("arguments of `{name}` do not match its declaration"),
        });
    }
    Ok(atom)
}

/// Parse a domain in the supported STRIPS subset into a model.
pub fn parse_domain(text: &str) -> Result<Model, PddlError> {
    let root = sexpr::read_one(text)?;
    let (name, sections) = define_block(&root, "domain")?;
    let mut types = TypeHierarchy::new();
    let mut typed = false;
    let mut predicates = Vec::new();
    let mut raw_actions = Vec::new();

    for sec in sections {
        let items = list_of(sec, "a domain section")?;
        let key = items
            .first()
            .and_then(Sexpr::as_atom)
            .ok_or_else(|| syntax(sec.pos(), "expected a section keyword"))?;
        match key {
            ":requirements" => {
                for r in &items[1..] {
                    let r_name = atom_of(r, "a requirement")?;
                    if !SUPPORTED_REQUIREMENTS.contains(&r_name) {
                        return Err(unsupported(r_name, r.pos()));
                    }
                    if r_name == ":typing" {
                        typed = true;
                    }
                }
            }
            ":types" => {
                typed = true;
                let decls = typed_list(&items[1..], false)?;
                for (t, parent, pos) in &decls {
                    types.declare(t, parent).map_err(|e| e.at(*pos))?;
                }
                // parents may be used without being declared themselves
                for (_, parent, _) in &decls {
                    if !types.contains(parent) {
                        types.declare(parent, ROOT_SORT)?;
                    }
                }
            }
            ":predicates" => {
                for p in &items[1..] {
                    let pl = list_of(p, "a predicate declaration")?;
                    let pname = atom_of(
                        pl.first().ok_or_else(|| syntax(p.pos(), "empty predicate"))?,
                        "a predicate name",
                    )?;
                    let sorts = typed_list(&pl[1..], true)?
                        .into_iter()
                        .map(|(_, s, _)| s)
                        .collect();
                    predicates.push(PredicateSchema {
                        name: pname.to_string(),
                        sorts,
                    });
                }
            }
            ":action" => raw_actions.push(parse_action(items, sec.pos())?),
            ":constants" | ":functions" | ":derived" | ":durative-action" | ":axiom" => {
                return Err(unsupported(key, sec.pos()))
            }
            other => return Err(syntax(sec.pos(), format!("unknown section `{other}`"))),
        }
    }

    let headers = raw_actions.iter().map(|a| a.header.clone()).collect();
    let vocab = Arc::new(Vocabulary::new(&name, typed, types, predicates, headers)?);
    let mut model = Model::empty(vocab.clone());
    for (ai, raw) in raw_actions.iter().enumerate() {
        for (location, formula) in [(Location::Pre, &raw.pre), (Location::Eff, &raw.eff)] {
            let Some(formula) = formula else { continue };
            let mut lits = Vec::new();
            literals(formula, &mut lits)?;
            for (atom_expr, sign) in lits {
                let atom = lift_atom(&vocab, ai, &atom_expr)?;
                let mode = if sign { Mode::Pos } else { Mode::Neg };
                model
                    .insert(PalmTuple {
                        pal: PalTuple::new(ai, location, atom),
                        mode,
                    })
                    .map_err(|e| e.at(atom_expr.pos()))?;
            }
        }
    }
    Ok(model)
}

/// Parse a problem over `vocab`. The goal, if present, is ignored.
pub fn parse_problem(text: &str, vocab: Arc<Vocabulary>) -> Result<ProblemInstance, PddlError> {
    let root = sexpr::read_one(text)?;
    let (name, sections) = define_block(&root, "problem")?;
    let mut objects = Vec::new();
    let mut init = Vec::new();
    for sec in sections {
        let items = list_of(sec, "a problem section")?;
        let key = items
            .first()
            .and_then(Sexpr::as_atom)
            .ok_or_else(|| syntax(sec.pos(), "expected a section keyword"))?;
        match key {
            ":domain" => {
                let d = atom_of(items.get(1).ok_or_else(|| syntax(sec.pos(), "missing domain name"))?, "a domain name")?;
                if d != vocab.name {
                    return Err(PddlError::Semantic {
                        pos: Some(sec.pos()),
                        message: format!("problem is for domain `{d}`, not `{}`", vocab.name),
                    });
                }
            }
            ":requirements" | ":goal" => {}
            ":objects" => {
                for (n, s, _) in typed_list(&items[1..], false)? {
                    objects.push(Object { name: n, sort: s });
                }
            }
            ":init" => {
                for a in &items[1..] {
                    let al = list_of(a, "an initial atom")?;
                    let head = al
                        .first()
                        .and_then(Sexpr::as_atom)
                        .ok_or_else(|| syntax(a.pos(), "expected an atom"))?;
                    if UNSUPPORTED_HEADS.contains(&head) || head == "not" {
                        return Err(unsupported(head, a.pos()));
                    }
                    let args = al[1..]
                        .iter()
                        .map(|x| atom_of(x, "an object name").map(str::to_string))
                        .collect::<Result<Vec<_>, _>>()?;
                    init.push((head.to_string(), args));
                }
            }
            ":metric" | ":constraints" => return Err(unsupported(key, sec.pos())),
            other => return Err(syntax(sec.pos(), format!("unknown section `{other}`"))),
        }
    }
    ProblemInstance::new(vocab, &name, objects, &init)
}
