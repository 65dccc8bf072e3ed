use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rewb::construct::{build_nesa, build_nsa, derive_budget, STEP_BASE, STEP_FACTOR};
use rewb::larsen::{larsen_alphabet, larsen_nesa, larsen_rewb};
use rewb::machine::{check_trace_invariants, Budget, Outcome, Runner, StackMachine};
use rewb::refnfa::{Oracle, RefNfa};
use rewb::refword::{deref, RefSymbol, RefWord};
use rewb::syntax::{parse, random_rewb, sym, word, Alphabet, GenConfig, Rewb, Symbol};

fn accepting_run(m: &StackMachine, w: &[Symbol], budget: Budget) -> Option<(Runner, rewb::machine::Trace)> {
    let runner = m.runner().unwrap();
    match runner.accepts(w, budget) {
        Outcome::Accepted(t) => Some((runner, t)),
        Outcome::NotWithinBudget(_) => None,
    }
}

/// Reads the final stack of an accepted NSA run back as a ref-word.
fn stack_refword(runner: &Runner, t: &rewb::machine::Trace) -> RefWord {
    let last = t.configurations.last().unwrap();
    let cells = &last.tape[1..last.tape.len() - 1];
    RefWord::new(
        cells
            .iter()
            .map(|&c| {
                let name = runner.cell_name(c);
                if let Some(n) = name.strip_prefix('[') {
                    RefSymbol::Open(n.parse().unwrap())
                } else if let Some(n) = name.strip_prefix(']') {
                    RefSymbol::Close(n.parse().unwrap())
                } else if name.chars().all(|c| c.is_ascii_digit()) {
                    RefSymbol::Ref(name.parse().unwrap())
                } else {
                    RefSymbol::Letter(sym(name.trim_matches('\'')))
                }
            })
            .collect(),
    )
}

#[test]
fn accepted_nsa_runs_leave_a_ref_word_on_the_stack() {
    for text in [r"(1:(a+b)*)\1", r"(1:a)(2:\1b)\2", r"((1:\2)(2:\1a))*", r"(2:(1:(a+b)*)\1)\2(2:\1)*"] {
        let ast = parse(text).unwrap();
        let nfa = RefNfa::build(&ast);
        let oracle = Oracle::new(&ast);
        let m = build_nsa(&ast);
        for w in Alphabet::parse("a,b").unwrap().words_up_to(6) {
            let Some(witness) = oracle.check(&w).witness else { continue };
            let (runner, t) = accepting_run(&m, &w, derive_budget(&witness, &w)).expect("member accepted");
            let v = stack_refword(&runner, &t);
            assert!(nfa.accepts(&v), "{text}: stack {v} not a ref-word of the rewb");
            assert_eq!(deref(&v), Some(w.clone()), "{text}: stack {v}");
            assert!(!t.configurations.last().unwrap().has_substack());
        }
    }
}

#[test]
fn nested_reference_states() {
    let m = build_nsa(&parse(r"(1:a)(2:\1b)\2").unwrap());
    for s in ["c1", "e1", "r1", "c2", "e2", "r2", "E[e2,1]", "L[e2,1]"] {
        assert!(m.states.iter().any(|x| x == s), "missing {s} in {:?}", m.states);
    }
    assert!(m.stack_alphabet.contains(&"<e2>".to_string()));
    let m = build_nsa(&parse(r"(1:(a+b)*)\1").unwrap());
    assert!(!m.states.iter().any(|s| s.starts_with("c2") || s.contains("e1,")));
}

#[test]
fn nesa_on_ww() {
    let ast = parse(r"(1:(a+b)*)\1").unwrap();
    let m = build_nesa(&ast).unwrap();
    assert_eq!(m.validate_flavor(), Ok(()));
    let (runner, t) = accepting_run(&m, &word("aabbaabb"), Budget::new(1_000_000, 64)).unwrap();
    check_trace_invariants(&runner, &t).unwrap();
    let lens: Vec<usize> = t.configurations.iter().map(|c| c.tape.len()).collect();
    assert!(lens.windows(2).all(|p| p[0] <= p[1]));
}

#[test]
fn nesa_triple_copy() {
    let m = build_nesa(&parse(r"(1:a)\1\1").unwrap()).unwrap();
    let runner = m.runner().unwrap();
    let accepted: Vec<usize> =
        (0..=5).filter(|&n| runner.accepts(&word(&"a".repeat(n)), Budget::new(100_000, 40)).is_accepted()).collect();
    assert_eq!(accepted, vec![3]);
}

#[test]
fn constructed_machines_round_trip_json() {
    for text in [r"(1:(a+b)*)\1", r"((1:\4a)(2:\3)(3:\2a)(4:\1\3))*", "a*", "~"] {
        let m = build_nsa(&parse(text).unwrap());
        assert_eq!(StackMachine::from_json(&m.to_json()).unwrap(), m);
    }
}

#[test]
fn derived_budget_shape() {
    let v = RefWord::parse("[1 ab ]1 1").unwrap();
    let b = derive_budget(&v, &word("abab"));
    assert_eq!(b.max_cells, 5 + 3 + 8);
    assert_eq!(b.max_steps, STEP_FACTOR * b.max_cells * b.max_cells + STEP_BASE);
}

#[test]
fn larsen_level_two_members_accepted() {
    let x2 = larsen_rewb(2);
    let members = Oracle::new(&x2).members(12);
    assert!(members.len() > 1);
    let runner = larsen_nesa(2).runner().unwrap();
    for w in &members {
        let t = match runner.accepts(w, Budget::default()) {
            Outcome::Accepted(t) => t,
            other => panic!("{} not accepted: {other:?}", rewb::syntax::format_word(w)),
        };
        check_trace_invariants(&runner, &t).unwrap();
    }
}

#[test]
fn larsen_level_three_agrees_on_members_and_edits() {
    let x3 = larsen_rewb(3);
    let oracle = Oracle::new(&x3);
    let runner = larsen_nesa(3).runner().unwrap();
    let alpha = larsen_alphabet(3);
    let a = |s: &str| alpha.tokenize(s).unwrap();
    let inner1 = "a1l a0l a0m a0r a1m a0l a0m a0r a1r";
    let inner2 = format!("a2l {inner1} a2m {inner1} a2r");
    let member = a(&format!("a3l {inner2} a3m {inner2} a3r"));
    assert!(oracle.is_member(&member));
    assert!(runner.accepts(&member, Budget::default()).is_accepted());
    for i in 0..member.len() {
        let mut d = member.clone();
        d.remove(i);
        assert_eq!(
            runner.accepts(&d, Budget::default()).is_accepted(),
            oracle.is_member(&d),
            "deletion at {i}"
        );
    }
}

fn small_rewb(seed: u64) -> Rewb {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_rewb(&mut rng, &GenConfig { max_depth: 3, max_label: 2, alphabet: vec![sym("a"), sym("b")] })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn nsa_agrees_with_oracle(seed in any::<u64>()) {
        let ast = small_rewb(seed);
        let oracle = Oracle::new(&ast);
        let nsa = build_nsa(&ast);
        let nesa = build_nesa(&ast).ok();
        let runner = nsa.runner().unwrap();
        for w in Alphabet::parse("a,b").unwrap().words_up_to(4) {
            let check = oracle.check(&w);
            let budget = check.witness.as_ref().map(|v| derive_budget(v, &w)).unwrap_or(Budget::new(20_000, 24));
            let got = runner.accepts(&w, budget);
            prop_assert_eq!(got.is_accepted(), check.accepted, "{} on {:?}", ast, w);
            if let Outcome::Accepted(t) = &got {
                prop_assert!(check_trace_invariants(&runner, t).is_ok());
            }
            if let Some(m) = &nesa {
                let got = m.runner().unwrap().accepts(&w, budget).is_accepted();
                prop_assert_eq!(got, check.accepted, "nesa {} on {:?}", ast, w);
            }
        }
    }

    #[test]
    fn nesa_exists_iff_no_captured_reference(seed in any::<u64>()) {
        let ast = small_rewb(seed);
        let built = build_nesa(&ast);
        prop_assert_eq!(built.is_ok(), !ast.has_captured_reference());
        if let Ok(m) = built {
            prop_assert!(m.validate_flavor().is_ok());
        }
        prop_assert!(build_nsa(&ast).validate_flavor().is_ok());
    }
}
