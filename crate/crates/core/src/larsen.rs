//! Larsen's hierarchy: rewbs `x_i` and hand-built nonerasing stack automata
//! `A_i` recognizing them.
//!
//! `x_0 = (a0l a0m a0r)*` and `x_(l) = (al_l (l: x_(l-1)) al_m \l al_r)*`.
//! The usual presentation numbers the capture inside `x_l` as `l - 1`
//! (starting from 0); here labels start at 1, so capture `l` holds `x_(l-1)`.
//!
//! `A_i` follows a chain of loop states, one per level, pushing every letter
//! and bracket it reads. Each reference is resolved by a call/execute/return
//! gadget. A gadget is indexed by the *call chain* that leads to it: the
//! reference of level `l` starts chain `[l]`, and a number `n` met while
//! executing chain `C` starts chain `C + [n]`. Labels along a chain strictly
//! decrease, so `A_i` has `2^i - 1` gadgets.

use crate::construct::{close_cell, letter_cell, open_cell, ref_cell};
use crate::machine::{Action, Context, Direction, Flavor, Pattern, Rule, StackMachine};
use crate::syntax::{sym, Alphabet, Label, Rewb, Symbol};

/// Three symbols `ajl`, `ajm`, `ajr` per level `j ≤ level`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LarsenAlphabet {
    pub level: usize,
}

impl LarsenAlphabet {
    pub fn new(level: usize) -> LarsenAlphabet {
        LarsenAlphabet { level }
    }

    pub fn left(j: usize) -> Symbol {
        sym(&format!("a{j}l"))
    }

    pub fn middle(j: usize) -> Symbol {
        sym(&format!("a{j}m"))
    }

    pub fn right(j: usize) -> Symbol {
        sym(&format!("a{j}r"))
    }

    pub fn symbols(&self) -> Vec<Symbol> {
        (0..=self.level).flat_map(|j| [Self::left(j), Self::middle(j), Self::right(j)]).collect()
    }

    pub fn alphabet(&self) -> Alphabet {
        Alphabet::new(self.symbols()).expect("distinct symbols")
    }
}

pub fn larsen_alphabet(level: usize) -> Alphabet {
    LarsenAlphabet::new(level).alphabet()
}

/// Capture label used for the copy of `x_(l-1)` inside `x_l`.
pub fn capture_label(l: usize) -> Label {
    l as Label
}

pub fn larsen_rewb(level: usize) -> Rewb {
    let lit = Rewb::literal;
    let mut x = Rewb::star(Rewb::concat_all([
        lit(LarsenAlphabet::left(0)),
        lit(LarsenAlphabet::middle(0)),
        lit(LarsenAlphabet::right(0)),
    ]));
    for l in 1..=level {
        let label = capture_label(l);
        x = Rewb::star(Rewb::concat_all([
            lit(LarsenAlphabet::left(l)),
            Rewb::capture(label, x).expect("inner labels are smaller"),
            lit(LarsenAlphabet::middle(l)),
            Rewb::reference(label).expect("positive"),
            lit(LarsenAlphabet::right(l)),
        ]));
    }
    x
}

/// Explains the label numbering of [`larsen_rewb`].
pub fn label_note(level: usize) -> String {
    if level == 0 {
        return "no captures".into();
    }
    let pairs: Vec<String> = (1..=level).map(|l| format!("{} ↦ {}", l - 1, capture_label(l))).collect();
    format!("capture labels shifted by one: {}", pairs.join(", "))
}

fn loop_state(l: usize) -> String {
    format!("q0^{l}")
}

fn chain_name(chain: &[Label]) -> String {
    let parts: Vec<String> = chain.iter().map(|l| l.to_string()).collect();
    parts.join(",")
}

fn call(chain: &[Label]) -> String {
    format!("c[{}]", chain_name(chain))
}

fn exec(chain: &[Label]) -> String {
    format!("e[{}]", chain_name(chain))
}

fn ret(chain: &[Label]) -> String {
    format!("r[{}]", chain_name(chain))
}

/// All strictly decreasing label sequences starting at `first`.
fn chains_from(first: Label) -> Vec<Vec<Label>> {
    let mut out = vec![vec![first]];
    let mut i = 0;
    while i < out.len() {
        let last = *out[i].last().expect("nonempty");
        for n in (1..last).rev() {
            let mut c = out[i].clone();
            c.push(n);
            out.push(c);
        }
        i += 1;
    }
    out
}

pub fn larsen_nesa(level: usize) -> StackMachine {
    let alpha = LarsenAlphabet::new(level);
    let letters = alpha.symbols();
    let push = |s: String| Action::Push(vec![s]);
    let top = || Context::AtTop(Pattern::Any);
    let mut states = Vec::new();
    let mut rules = Vec::new();

    let (l0, m0, r0) = (LarsenAlphabet::left(0), LarsenAlphabet::middle(0), LarsenAlphabet::right(0));
    let q0 = loop_state(0);
    let (after_l, after_m) = (format!("{q0}/l"), format!("{q0}/m"));
    states.extend([q0.clone(), after_l.clone(), after_m.clone()]);
    rules.push(Rule::new(q0.clone(), Some(l0.as_str()), top(), push(letter_cell(&l0)), after_l.clone()));
    rules.push(Rule::new(after_l, Some(m0.as_str()), top(), push(letter_cell(&m0)), after_m.clone()));
    rules.push(Rule::new(after_m, Some(r0.as_str()), top(), push(letter_cell(&r0)), q0));

    for l in 1..=level {
        let (q, inner) = (loop_state(l), loop_state(l - 1));
        let (u, v, w, x) = (format!("u^{l}"), format!("v^{l}"), format!("w^{l}"), format!("x^{l}"));
        let label = capture_label(l);
        let (al, am, ar) = (LarsenAlphabet::left(l), LarsenAlphabet::middle(l), LarsenAlphabet::right(l));
        states.extend([q.clone(), u.clone(), v.clone(), w.clone(), x.clone()]);
        rules.push(Rule::new(q.clone(), Some(al.as_str()), top(), push(letter_cell(&al)), u.clone()));
        rules.push(Rule::new(u, None, top(), push(open_cell(label)), inner.clone()));
        rules.push(Rule::new(inner, None, top(), push(close_cell(label)), v.clone()));
        rules.push(Rule::new(v, Some(am.as_str()), top(), push(letter_cell(&am)), w.clone()));
        rules.push(Rule::new(w, None, top(), push(ref_cell(label)), call(&[label])));
        rules.push(Rule::new(x.clone(), Some(ar.as_str()), top(), push(letter_cell(&ar)), q));

        for chain in chains_from(label) {
            let m = *chain.last().expect("nonempty");
            let (c, e, r) = (call(&chain), exec(&chain), ret(&chain));
            states.extend([c.clone(), e.clone(), r.clone()]);
            let not_open = Pattern::NoneOf(vec![open_cell(m)]);
            rules.push(Rule::new(c.clone(), None, Context::AtTop(not_open.clone()), Action::Move(Direction::L), c.clone()));
            rules.push(Rule::new(c.clone(), None, Context::Interior(not_open), Action::Move(Direction::L), c.clone()));
            rules.push(Rule::new(c, None, Context::Interior(Pattern::is(open_cell(m))), Action::Move(Direction::R), e.clone()));
            for a in &letters {
                rules.push(Rule::new(
                    e.clone(),
                    Some(a.as_str()),
                    Context::Interior(Pattern::is(letter_cell(a))),
                    Action::Move(Direction::R),
                    e.clone(),
                ));
            }
            for n in 1..m {
                for cell in [open_cell(n), close_cell(n)] {
                    rules.push(Rule::new(e.clone(), None, Context::Interior(Pattern::is(cell)), Action::Move(Direction::R), e.clone()));
                }
            }
            for n in (1..m).rev() {
                let mut sub = chain.clone();
                sub.push(n);
                rules.push(Rule::new(e.clone(), None, Context::Interior(Pattern::is(ref_cell(n))), Action::Move(Direction::L), call(&sub)));
            }
            rules.push(Rule::new(e, None, Context::Interior(Pattern::is(close_cell(m))), Action::Move(Direction::R), r.clone()));
            rules.push(Rule::new(
                r.clone(),
                None,
                Context::Interior(Pattern::NoneOf(vec![ref_cell(m)])),
                Action::Move(Direction::R),
                r.clone(),
            ));
            if chain.len() == 1 {
                rules.push(Rule::new(r, None, Context::AtTop(Pattern::is(ref_cell(m))), Action::Move(Direction::S), x.clone()));
            } else {
                let parent = exec(&chain[..chain.len() - 1]);
                rules.push(Rule::new(r, None, Context::Interior(Pattern::is(ref_cell(m))), Action::Move(Direction::R), parent));
            }
        }
    }

    let mut gamma = vec!["Z0".to_string()];
    gamma.extend(letters.iter().map(letter_cell));
    for l in 1..=level {
        let label = capture_label(l);
        gamma.extend([open_cell(label), close_cell(label), ref_cell(label)]);
    }
    let start = loop_state(level);
    StackMachine {
        name: format!("larsen A_{level}"),
        flavor: Flavor::Nesa,
        states,
        input_alphabet: letters.iter().map(|s| s.to_string()).collect(),
        stack_alphabet: gamma,
        start: start.clone(),
        initial_stack_symbol: "Z0".into(),
        finals: vec![start],
        rules,
    }
}

/// Number of call/execute/return states of `A_level`.
pub fn gadget_state_count(level: usize) -> usize {
    3 * ((1usize << level) - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::Budget;
    use crate::refnfa::Oracle;
    use crate::syntax::format_word;

    fn words(text: &str) -> Vec<Symbol> {
        larsen_alphabet(3).tokenize(text).unwrap()
    }

    #[test]
    fn rewb_shapes() {
        assert_eq!(larsen_rewb(0).pretty(), "('a0l''a0m''a0r')*");
        let x1 = larsen_rewb(1);
        assert_eq!(x1.captured_labels().len(), 1);
        assert_eq!(x1.referenced_labels().len(), 1);
        assert_eq!(x1.pretty(), "('a1l'(1:('a0l''a0m''a0r')*)'a1m'\\1'a1r')*");
        for i in 0..5 {
            assert_eq!(larsen_rewb(i).has_captured_reference(), i >= 2, "level {i}");
        }
        assert_eq!(larsen_alphabet(2).len(), 9);
    }

    #[test]
    fn level_zero_is_single_loop() {
        let m = larsen_nesa(0);
        assert_eq!(m.states.len(), 3);
        assert_eq!(m.rules.len(), 3);
        let r = m.runner().unwrap();
        assert!(r.accepts(&words("a0l a0m a0r"), Budget::default()).is_accepted());
        assert!(r.accepts(&[], Budget::default()).is_accepted());
        assert!(!r.accepts(&words("a0l a0m"), Budget::default()).is_accepted());
    }

    #[test]
    fn gadget_counts() {
        for i in 0..5 {
            let m = larsen_nesa(i);
            let gadgets = m.states.iter().filter(|s| s.contains('[')).count();
            assert_eq!(gadgets, gadget_state_count(i));
            assert_eq!(m.validate_flavor(), Ok(()), "level {i}");
        }
        let m = larsen_nesa(2);
        let names: Vec<&str> = m.states.iter().map(|s| s.as_str()).filter(|s| s.starts_with('c')).collect();
        assert_eq!(names, vec!["c[1]", "c[2]", "c[2,1]"]);
    }

    #[test]
    fn level_one_member() {
        let w = words("a1l a0l a0m a0r a1m a0l a0m a0r a1r");
        assert!(Oracle::new(&larsen_rewb(1)).is_member(&w));
        assert!(larsen_nesa(1).runner().unwrap().accepts(&w, Budget::default()).is_accepted());
        let bad = words("a1l a0l a0m a0r a1m a1r");
        assert!(!larsen_nesa(1).runner().unwrap().accepts(&bad, Budget::new(100_000, 64)).is_accepted());
    }

    #[test]
    fn level_two_nested_dereference() {
        let inner = "a1l a0l a0m a0r a1m a0l a0m a0r a1r";
        let w = words(&format!("a2l {inner} a2m {inner} a2r"));
        assert!(Oracle::new(&larsen_rewb(2)).is_member(&w), "{}", format_word(&w));
        let t = larsen_nesa(2).runner().unwrap().accepts(&w, Budget::default());
        assert!(t.is_accepted());
    }
}
