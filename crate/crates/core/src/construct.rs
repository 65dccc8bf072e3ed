//! Compilation of rewbs to stack machines.
//!
//! [`build_nsa`] turns the ref-word automaton of a rewb into a nested stack
//! automaton. Letters and brackets are pushed as they are read. A reference
//! `i` is pushed too, and then dereferenced in three modes: *call* (`c_i`)
//! scans left for the nearest `[i`, *execute* (`e_i`) compares the bracketed
//! letters with the input, and *return* (`r_i`) climbs back to a marker
//! naming the state to resume in. Markers live in one-cell substacks so that
//! a reference met while executing can be resolved recursively.
//!
//! [`build_nesa`] is the variant for rewbs without a captured reference: the
//! marker is pushed on the stack itself and never popped.
//!
//! Mode states are only materialized for labels that are referenced, and the
//! return states `E_{p,i}` / `L_{p,i}` only for pairs that can occur.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::machine::{Action, Budget, Context, Direction, Flavor, Pattern, Rule, StackMachine};
use crate::refnfa::RefNfa;
use crate::refword::{RefSymbol, RefWord};
use crate::syntax::{Label, Node, Rewb, Symbol};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConstructError {
    #[error("rewb {0} has a reference inside a capture; no nonerasing machine is built for it")]
    CapturedReference(String),
}

pub const Z0: &str = "Z0";

/// Stack spelling of an input letter; letters that could be mistaken for a
/// reference number or the initial symbol are quoted.
pub fn letter_cell(a: &Symbol) -> String {
    let s = a.as_str();
    if s == Z0 || s.chars().all(|c| c.is_ascii_digit()) {
        format!("'{s}'")
    } else {
        s.to_string()
    }
}

pub fn open_cell(i: Label) -> String {
    format!("[{i}")
}

pub fn close_cell(i: Label) -> String {
    format!("]{i}")
}

pub fn ref_cell(i: Label) -> String {
    i.to_string()
}

pub fn marker_cell(state: &str) -> String {
    format!("<{state}>")
}

pub fn nfa_state(q: usize) -> String {
    format!("q{q}")
}

fn call(i: Label) -> String {
    format!("c{i}")
}

fn exec(i: Label) -> String {
    format!("e{i}")
}

fn ret(i: Label) -> String {
    format!("r{i}")
}

fn wait(q: usize) -> String {
    format!("W_{}", nfa_state(q))
}

fn erase(p: &str, i: Label) -> String {
    format!("E[{p},{i}]")
}

fn leave(p: &str, i: Label) -> String {
    format!("L[{p},{i}]")
}

/// For each capture label, the labels referenced somewhere inside a capture
/// with that label.
fn refs_inside_captures(ast: &Rewb) -> BTreeMap<Label, BTreeSet<Label>> {
    fn walk(r: &Rewb, out: &mut BTreeMap<Label, BTreeSet<Label>>) {
        if let Node::Capture(i, child) = r.node() {
            out.entry(*i).or_default().extend(child.referenced_labels());
        }
        for c in r.children() {
            walk(c, out);
        }
    }
    let mut out = BTreeMap::new();
    walk(ast, &mut out);
    out
}

struct Parts<'a> {
    ast: &'a Rewb,
    nfa: RefNfa,
    letters: Vec<Symbol>,
    captured: BTreeSet<Label>,
    referenced: BTreeSet<Label>,
    /// For each referenced label, the automaton states entered by its edges.
    ref_targets: BTreeMap<Label, BTreeSet<usize>>,
}

impl<'a> Parts<'a> {
    fn new(ast: &'a Rewb) -> Parts<'a> {
        let nfa = RefNfa::build(ast);
        let mut ref_targets: BTreeMap<Label, BTreeSet<usize>> = BTreeMap::new();
        for edges in &nfa.edges {
            for (x, p) in edges {
                if let RefSymbol::Ref(i) = x {
                    ref_targets.entry(*i).or_default().insert(*p);
                }
            }
        }
        Parts {
            ast,
            letters: ast.letters().into_iter().collect(),
            captured: ast.captured_labels(),
            referenced: ref_targets.keys().copied().collect(),
            nfa,
            ref_targets,
        }
    }

    fn base_alphabet(&self) -> Vec<String> {
        let mut gamma = vec![Z0.to_string()];
        gamma.extend(self.letters.iter().map(letter_cell));
        for &i in &self.captured {
            gamma.push(open_cell(i));
            gamma.push(close_cell(i));
        }
        gamma.extend(self.referenced.iter().map(|&i| ref_cell(i)));
        gamma
    }

    /// Rules (1) and (2), plus the translation of reference edges given by `on_ref`.
    fn embedded_rules(&self, on_ref: impl Fn(usize, Label, usize) -> Rule) -> Vec<Rule> {
        let mut rules = Vec::new();
        for (q, edges) in self.nfa.edges.iter().enumerate() {
            for (x, p) in edges {
                let rule = match x {
                    RefSymbol::Letter(a) => Rule::new(
                        nfa_state(q),
                        Some(a.as_str()),
                        Context::AtTop(Pattern::Any),
                        Action::Push(vec![letter_cell(a)]),
                        nfa_state(*p),
                    ),
                    RefSymbol::Open(i) | RefSymbol::Close(i) => {
                        let cell = if matches!(x, RefSymbol::Open(_)) { open_cell(*i) } else { close_cell(*i) };
                        Rule::new(nfa_state(q), None, Context::AtTop(Pattern::Any), Action::Push(vec![cell]), nfa_state(*p))
                    }
                    RefSymbol::Ref(i) => on_ref(q, *i, *p),
                };
                rules.push(rule);
            }
        }
        rules
    }

    /// Rules (5)–(11) and (13) for label `i`; `markers` are the cells `c_i`
    /// may start on, `skipped` extra cells `e_i` steps over.
    fn mode_rules(&self, i: Label, markers: &[String], skipped: &[String]) -> Vec<Rule> {
        let (c, e, r) = (call(i), exec(i), ret(i));
        let mut rules = vec![Rule::new(
            c.clone(),
            None,
            Context::AtTop(Pattern::AnyOf(markers.to_vec())),
            Action::Move(Direction::L),
            c.clone(),
        )];
        let mut stop = vec![Z0.to_string()];
        if self.captured.contains(&i) {
            stop.insert(0, open_cell(i));
        }
        rules.push(Rule::new(c.clone(), None, Context::Interior(Pattern::NoneOf(stop)), Action::Move(Direction::L), c.clone()));
        rules.push(Rule::new(c.clone(), None, Context::Interior(Pattern::is(Z0)), Action::Move(Direction::R), r.clone()));
        if self.captured.contains(&i) {
            rules.push(Rule::new(c.clone(), None, Context::Interior(Pattern::is(open_cell(i))), Action::Move(Direction::R), e.clone()));
            for a in &self.letters {
                rules.push(Rule::new(
                    e.clone(),
                    Some(a.as_str()),
                    Context::Interior(Pattern::is(letter_cell(a))),
                    Action::Move(Direction::R),
                    e.clone(),
                ));
            }
            for z in skipped {
                rules.push(Rule::new(e.clone(), None, Context::Interior(Pattern::is(z.clone())), Action::Move(Direction::R), e.clone()));
            }
            for &j in self.captured.iter().filter(|&&j| j != i) {
                rules.push(Rule::new(e.clone(), None, Context::Interior(Pattern::is(open_cell(j))), Action::Move(Direction::R), e.clone()));
            }
            rules.push(Rule::new(e.clone(), None, Context::Interior(Pattern::is(close_cell(i))), Action::Move(Direction::R), r.clone()));
            for &j in self.captured.iter().filter(|&&j| j != i) {
                rules.push(Rule::new(e.clone(), None, Context::Interior(Pattern::is(close_cell(j))), Action::Move(Direction::R), e.clone()));
            }
        }
        rules.push(Rule::new(r.clone(), None, Context::Interior(Pattern::Any), Action::Move(Direction::R), r));
        rules
    }

    fn input_alphabet(&self) -> Vec<String> {
        self.letters.iter().map(|a| a.to_string()).collect()
    }

    fn nfa_states(&self) -> Vec<String> {
        (0..self.nfa.num_states()).map(nfa_state).collect()
    }

    fn finals(&self) -> Vec<String> {
        self.nfa.finals.iter().map(|&q| nfa_state(q)).collect()
    }
}

/// Nested stack automaton recognizing `L(ast)`.
pub fn build_nsa(ast: &Rewb) -> StackMachine {
    let parts = Parts::new(ast);
    let inside = refs_inside_captures(ast);

    // Callers of each label: automaton states resumed after a reference edge,
    // and execute modes that meet the label inside their capture.
    let mut callers: BTreeMap<Label, Vec<String>> = BTreeMap::new();
    for (&i, targets) in &parts.ref_targets {
        callers.entry(i).or_default().extend(targets.iter().map(|&q| nfa_state(q)));
    }
    for (&j, refs) in &inside {
        if !parts.referenced.contains(&j) {
            continue;
        }
        for &i in refs {
            if parts.referenced.contains(&i) {
                callers.entry(i).or_default().push(exec(j));
            }
        }
    }

    let waits: BTreeSet<usize> = parts.ref_targets.values().flatten().copied().collect();
    let mut states = parts.nfa_states();
    states.extend(waits.iter().map(|&q| wait(q)));
    for &i in &parts.referenced {
        states.extend([call(i), exec(i), ret(i)]);
    }
    for (&i, ps) in &callers {
        for p in ps {
            states.extend([erase(p, i), leave(p, i)]);
        }
    }

    let mut gamma = parts.base_alphabet();
    let markers: BTreeSet<String> = callers.values().flatten().cloned().collect();
    gamma.extend(markers.iter().map(|p| marker_cell(p)));

    let mut rules = parts.embedded_rules(|q, i, p| {
        Rule::new(nfa_state(q), None, Context::AtTop(Pattern::Any), Action::Push(vec![ref_cell(i)]), wait(p))
    });
    for &q in &waits {
        for (&i, targets) in &parts.ref_targets {
            if targets.contains(&q) {
                rules.push(Rule::new(
                    wait(q),
                    None,
                    Context::AtTop(Pattern::is(ref_cell(i))),
                    Action::CreateSubstack(vec![marker_cell(&nfa_state(q))]),
                    call(i),
                ));
            }
        }
    }
    for &i in &parts.referenced {
        let own: Vec<String> = callers[&i].iter().map(|p| marker_cell(p)).collect();
        rules.extend(parts.mode_rules(i, &own, &[]));
        if parts.captured.contains(&i) {
            for &j in inside.get(&i).into_iter().flatten() {
                if parts.referenced.contains(&j) {
                    rules.push(Rule::new(
                        exec(i),
                        None,
                        Context::Interior(Pattern::is(ref_cell(j))),
                        Action::CreateSubstack(vec![marker_cell(&exec(i))]),
                        call(j),
                    ));
                }
            }
        }
    }
    for (&i, ps) in &callers {
        for p in ps {
            rules.push(Rule::new(ret(i), None, Context::AtTop(Pattern::is(marker_cell(p))), Action::Rewrite(vec![]), erase(p, i)));
        }
    }
    for (&i, ps) in &callers {
        for p in ps {
            rules.push(Rule::new(erase(p, i), None, Context::AtEmptySubstackTop, Action::DestroySubstack, leave(p, i)));
        }
    }
    for (&i, ps) in &callers {
        for p in ps {
            let rule = if p.starts_with('e') {
                Rule::new(leave(p, i), None, Context::Interior(Pattern::is(ref_cell(i))), Action::Move(Direction::R), p.clone())
            } else {
                Rule::new(leave(p, i), None, Context::AtTop(Pattern::is(ref_cell(i))), Action::Move(Direction::S), p.clone())
            };
            rules.push(rule);
        }
    }

    StackMachine {
        name: format!("nsa {}", parts.ast),
        flavor: Flavor::Nsa,
        states,
        input_alphabet: parts.input_alphabet(),
        stack_alphabet: gamma,
        start: nfa_state(parts.nfa.start),
        initial_stack_symbol: Z0.to_string(),
        finals: parts.finals(),
        rules,
    }
}

/// Nonerasing stack automaton recognizing `L(ast)`; only for rewbs without
/// a captured reference.
pub fn build_nesa(ast: &Rewb) -> Result<StackMachine, ConstructError> {
    if ast.has_captured_reference() {
        return Err(ConstructError::CapturedReference(ast.to_string()));
    }
    let parts = Parts::new(ast);
    let targets: BTreeSet<usize> = parts.ref_targets.values().flatten().copied().collect();
    let all_markers: Vec<String> = targets.iter().map(|&q| marker_cell(&nfa_state(q))).collect();

    let mut states = parts.nfa_states();
    for &i in &parts.referenced {
        states.extend([call(i), exec(i), ret(i)]);
    }
    let mut gamma = parts.base_alphabet();
    gamma.extend(all_markers.iter().cloned());

    let mut rules = parts.embedded_rules(|q, i, p| {
        Rule::new(
            nfa_state(q),
            None,
            Context::AtTop(Pattern::Any),
            Action::Push(vec![ref_cell(i), marker_cell(&nfa_state(p))]),
            call(i),
        )
    });
    for (&i, ts) in &parts.ref_targets {
        let own: Vec<String> = ts.iter().map(|&q| marker_cell(&nfa_state(q))).collect();
        rules.extend(parts.mode_rules(i, &own, &all_markers));
        for &q in ts {
            let m = marker_cell(&nfa_state(q));
            rules.push(Rule::new(ret(i), None, Context::AtTop(Pattern::is(m.clone())), Action::Rewrite(vec![m]), nfa_state(q)));
        }
    }

    Ok(StackMachine {
        name: format!("nesa {}", parts.ast),
        flavor: Flavor::Nesa,
        states,
        input_alphabet: parts.input_alphabet(),
        stack_alphabet: gamma,
        start: nfa_state(parts.nfa.start),
        initial_stack_symbol: Z0.to_string(),
        finals: parts.finals(),
        rules,
    })
}

/// Cells needed to replay the accepting run that follows `witness`: the
/// witness itself on the stack, one marker or substack frame per reference,
/// plus `Z0`, `$` and slack.
pub fn witness_cells(witness: &RefWord) -> usize {
    witness.len() + 3 * witness.cnt() + 8
}

/// Search budget for confirming that a constructed machine accepts `w`,
/// given an oracle witness for `w`.
pub fn derive_budget(witness: &RefWord, w: &[Symbol]) -> Budget {
    let cells = witness_cells(witness).max(w.len() + 8);
    Budget { max_steps: STEP_FACTOR * cells * cells + STEP_BASE, max_cells: cells }
}

/// Calibrated against the acceptance corpus.
pub const STEP_FACTOR: usize = 16;
pub const STEP_BASE: usize = 4096;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::Outcome;
    use crate::refnfa::Oracle;
    use crate::syntax::{parse, word, Alphabet};

    fn accepts(m: &StackMachine, w: &str) -> bool {
        m.runner().unwrap().accepts(&word(w), Budget::new(200_000, 60)).is_accepted()
    }

    #[test]
    fn ww_nsa() {
        let ast = parse(r"(1:(a+b)*)\1").unwrap();
        let m = build_nsa(&ast);
        assert!(m.validate_flavor().is_ok(), "{:?}", m.validate_flavor());
        let witness = Oracle::new(&ast).check(&word("abab")).witness.unwrap();
        let budget = derive_budget(&witness, &word("abab"));
        let runner = m.runner().unwrap();
        assert!(runner.accepts(&word("abab"), budget).is_accepted());
        assert!(!runner.accepts(&word("aba"), budget).is_accepted());
    }

    #[test]
    fn single_letter_copy() {
        let m = build_nsa(&parse(r"(1:a)\1").unwrap());
        let accepted: Vec<String> = Alphabet::parse("a")
            .unwrap()
            .words_up_to(4)
            .into_iter()
            .filter(|w| m.runner().unwrap().accepts(w, Budget::new(100_000, 40)).is_accepted())
            .map(|w| crate::syntax::format_word(&w))
            .collect();
        assert_eq!(accepted, vec!["aa"]);
    }

    #[test]
    fn regular_case_uses_only_letter_rules() {
        let m = build_nsa(&parse("a*").unwrap());
        assert!(m.rules.iter().all(|r| r.read.is_some() && matches!(r.action, Action::Push(_))));
        for n in 0..=5 {
            assert!(accepts(&m, &"a".repeat(n)));
        }
        assert!(!accepts(&m, "b"));
    }

    #[test]
    fn nesa_variant() {
        let ast = parse(r"(1:(a+b)*)\1").unwrap();
        let m = build_nesa(&ast).unwrap();
        assert_eq!(m.validate_flavor(), Ok(()));
        assert!(accepts(&m, "aabbaabb"));
        assert!(!accepts(&m, "aabbaab"));
        let m = build_nesa(&parse(r"(1:a)\1\1").unwrap()).unwrap();
        let accepted: Vec<usize> = (0..=5).filter(|&n| accepts(&m, &"a".repeat(n))).collect();
        assert_eq!(accepted, vec![3]);
        assert!(matches!(build_nesa(&parse(r"(1:a)(2:\1)\2").unwrap()), Err(ConstructError::CapturedReference(_))));
    }

    #[test]
    fn nested_reference_uses_substacks() {
        let ast = parse(r"(1:a)(2:\1b)\2").unwrap();
        let m = build_nsa(&ast);
        assert_eq!(m.validate_flavor(), Ok(()));
        let runner = m.runner().unwrap();
        match runner.accepts(&word("aabab"), Budget::new(100_000, 40)) {
            Outcome::Accepted(t) => {
                crate::machine::check_trace_invariants(&runner, &t).unwrap();
                assert!(t.configurations.iter().any(|c| c.tape.iter().filter(|&&z| z == crate::machine::CENT).count() == 2));
            }
            other => panic!("{other:?}"),
        }
        assert!(!runner.accepts(&word("aaba"), Budget::new(100_000, 40)).is_accepted());
    }

    #[test]
    fn unbound_reference_falls_through() {
        let m = build_nsa(&parse(r"\1a").unwrap());
        assert!(accepts(&m, "a"));
        assert!(!accepts(&m, "aa"));
    }

    #[test]
    fn digit_letters_stay_distinct_from_numbers() {
        let ast = parse(r"(1:'1')\1").unwrap();
        let m = build_nsa(&ast);
        assert!(m.stack_alphabet.contains(&"'1'".to_string()));
        assert!(m.runner().unwrap().accepts(&[crate::syntax::sym("1"), crate::syntax::sym("1")], Budget::new(10_000, 40)).is_accepted());
    }
}
