//! Example languages, language slices and the oracle cross-check.

use std::collections::BTreeSet;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::construct::{build_nesa, build_nsa, derive_budget, STEP_BASE, STEP_FACTOR};
use crate::machine::{
    check_trace_invariants, Action, Budget, Context, Direction, Flavor, Outcome, Pattern, Rule, Runner, SearchStats,
    StackMachine,
};
use crate::refnfa::Oracle;
use crate::refword::{deref, RefSymbol, RefWord};
use crate::syntax::{format_word, parse, Alphabet, Rewb, Word};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LangLabError {
    #[error("unknown example {0:?} (expected one of: ww, square, cubic, anbn_nesa)")]
    UnknownExample(String),
    #[error("deref of b_{n} has length {got}, formula gives {want}")]
    FormulaMismatch { n: usize, got: usize, want: usize },
}

pub const EXAMPLE_NAMES: [&str; 4] = ["ww", "square", "cubic", "anbn_nesa"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Example {
    Rewb(Rewb),
    Machine(StackMachine),
}

pub fn example(name: &str) -> Result<Example, LangLabError> {
    match name {
        "ww" => Ok(Example::Rewb(ww())),
        "square" => Ok(Example::Rewb(square())),
        "cubic" => Ok(Example::Rewb(cubic())),
        "anbn_nesa" => Ok(Example::Machine(anbn_nesa())),
        other => Err(LangLabError::UnknownExample(other.to_string())),
    }
}

/// `{ww | w ∈ {a,b}*}`.
pub fn ww() -> Rewb {
    parse(r"(1:(a+b)*)\1").expect("well-formed")
}

/// `{a^(n²)}`.
pub fn square() -> Rewb {
    parse(r"((1:\2)(2:\1a))*").expect("well-formed")
}

/// `{a^f(n)}` with `f` = [`cubic_length`].
pub fn cubic() -> Rewb {
    parse(r"((1:\4a)(2:\3)(3:\2a)(4:\1\3))*").expect("well-formed")
}

pub fn cubic_length(n: usize) -> usize {
    n * (n + 7) * (2 * n + 1) / 6
}

/// Three-state nonerasing stack automaton for `{a^n b^n}`: push a star per
/// `a`, then walk down the stack once per `b`.
pub fn anbn_nesa() -> StackMachine {
    let star = "⋆";
    let rules = vec![
        Rule::new("q0", Some("a"), Context::AtTop(Pattern::Any), Action::Push(vec![star.into()]), "q0"),
        Rule::new("q0", None, Context::AtTop(Pattern::Any), Action::Move(Direction::S), "q1"),
        Rule::new("q1", Some("b"), Context::Interior(Pattern::is(star)), Action::Move(Direction::L), "q1"),
        Rule::new("q1", Some("b"), Context::AtTop(Pattern::is(star)), Action::Move(Direction::L), "q1"),
        Rule::new("q1", None, Context::Interior(Pattern::is("Z0")), Action::Move(Direction::S), "q2"),
        Rule::new("q1", None, Context::AtTop(Pattern::is("Z0")), Action::Move(Direction::S), "q2"),
    ];
    StackMachine {
        name: "anbn".into(),
        flavor: Flavor::Nesa,
        states: vec!["q0".into(), "q1".into(), "q2".into()],
        input_alphabet: vec!["a".into(), "b".into()],
        stack_alphabet: vec!["Z0".into(), star.into()],
        start: "q0".into(),
        initial_stack_symbol: "Z0".into(),
        finals: vec!["q2".into()],
        rules,
    }
}

/// `b_n = ([1 4 a ]1 [2 3 ]2 [3 2 a ]3 [4 1 3 ]4)^n`.
pub fn cubic_refword(n: usize) -> RefWord {
    use RefSymbol::*;
    let a = || Letter(crate::syntax::sym("a"));
    let block = [
        Open(1), Ref(4), a(), Close(1),
        Open(2), Ref(3), Close(2),
        Open(3), Ref(2), a(), Close(3),
        Open(4), Ref(1), Ref(3), Close(4),
    ];
    RefWord::new(block.iter().cloned().cycle().take(block.len() * n).collect())
}

/// Dereferences `b_n` and checks its length against [`cubic_length`].
pub fn derefword_calc_cubic(n: usize) -> Result<(RefWord, Word), LangLabError> {
    let v = cubic_refword(n);
    let w = deref(&v).expect("b_n is matching");
    let want = cubic_length(n);
    if w.len() != want {
        return Err(LangLabError::FormulaMismatch { n, got: w.len(), want });
    }
    Ok((v, w))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Decided by the oracle.
    Member,
    NonMember,
    /// Found an accepting run.
    Accepted,
    /// Search finished without limits cutting it short.
    Rejected,
    /// A limit cut the search short; not a proof of non-membership.
    NotWithinBudget,
}

impl Verdict {
    pub fn accepts(self) -> bool {
        matches!(self, Verdict::Member | Verdict::Accepted)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Member => "member",
            Verdict::NonMember => "non-member",
            Verdict::Accepted => "accepted",
            Verdict::Rejected => "rejected (exhaustive)",
            Verdict::NotWithinBudget => "not within budget",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StringOutcome {
    #[serde(serialize_with = "ser_word")]
    pub word: Word,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<Budget>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stats: Option<SearchStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_len: Option<usize>,
    /// Broken trace invariant of the accepting run, if any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub invariant_error: Option<String>,
}

fn ser_word<S: serde::Serializer>(w: &Word, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format_word(w))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Mismatch {
    pub acceptor: String,
    #[serde(serialize_with = "ser_word")]
    pub word: Word,
    pub expected: bool,
    pub got: Verdict,
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let want = if self.expected { "member" } else { "non-member" };
        write!(f, "{}: {} is a {want} but got {}", self.acceptor, format_word(&self.word), self.got)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SliceReport {
    pub acceptor: String,
    pub alphabet: Vec<String>,
    pub max_len: usize,
    /// Shortlex order.
    pub outcomes: Vec<StringOutcome>,
    pub mismatches: Vec<Mismatch>,
}

impl SliceReport {
    pub fn accepted(&self) -> Vec<&Word> {
        self.outcomes.iter().filter(|o| o.verdict.accepts()).map(|o| &o.word).collect()
    }

    pub fn accepted_set(&self) -> BTreeSet<Word> {
        self.accepted().into_iter().cloned().collect()
    }

    pub fn accepted_lengths(&self) -> BTreeSet<usize> {
        self.accepted().into_iter().map(|w| w.len()).collect()
    }

    /// Rejections that are only bounded refutations.
    pub fn bounded_refutations(&self) -> usize {
        self.outcomes.iter().filter(|o| o.verdict == Verdict::NotWithinBudget).count()
    }

    pub fn invariant_errors(&self) -> Vec<String> {
        self.outcomes
            .iter()
            .filter_map(|o| o.invariant_error.as_ref().map(|e| format!("{} on {}: {e}", self.acceptor, format_word(&o.word))))
            .collect()
    }

    /// Records a mismatch for every string whose acceptance disagrees with `reference`.
    pub fn compare_with(&mut self, reference: &BTreeSet<Word>) {
        for o in &self.outcomes {
            let expected = reference.contains(&o.word);
            if expected != o.verdict.accepts() {
                self.mismatches.push(Mismatch {
                    acceptor: self.acceptor.clone(),
                    word: o.word.clone(),
                    expected,
                    got: o.verdict,
                });
            }
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{} over {{{}}} up to length {}\n",
            self.acceptor,
            self.alphabet.join(","),
            self.max_len
        );
        for o in &self.outcomes {
            out.push_str(&format!("{}\t{}\n", format_word(&o.word), o.verdict));
        }
        let acc = self.accepted().len();
        out.push_str(&format!(
            "accepted {acc} of {} ({} bounded refutations), {} mismatches\n",
            self.outcomes.len(),
            self.bounded_refutations(),
            self.mismatches.len()
        ));
        for m in &self.mismatches {
            out.push_str(&format!("MISMATCH {m}\n"));
        }
        out
    }
}

/// What a slice is computed for.
#[derive(Debug, Clone, Copy)]
pub enum Acceptor<'a> {
    Rewb(&'a Rewb),
    Machine(&'a StackMachine),
}

fn machine_outcome(runner: &Runner, w: &Word, budget: Budget) -> StringOutcome {
    match runner.accepts(w, budget) {
        Outcome::Accepted(t) => StringOutcome {
            word: w.clone(),
            verdict: Verdict::Accepted,
            budget: Some(budget),
            stats: Some(t.stats),
            trace_len: Some(t.len()),
            invariant_error: check_trace_invariants(runner, &t).err(),
        },
        Outcome::NotWithinBudget(stats) => StringOutcome {
            word: w.clone(),
            verdict: if stats.exhaustive() { Verdict::Rejected } else { Verdict::NotWithinBudget },
            budget: Some(budget),
            stats: Some(stats),
            trace_len: None,
            invariant_error: None,
        },
    }
}

fn oracle_outcome(oracle: &Oracle, w: &Word) -> StringOutcome {
    StringOutcome {
        word: w.clone(),
        verdict: if oracle.is_member(w) { Verdict::Member } else { Verdict::NonMember },
        budget: None,
        stats: None,
        trace_len: None,
        invariant_error: None,
    }
}

/// Membership of every string over `alphabet` up to `max_len`. Machines
/// are searched under `budget`; rewbs go to the oracle.
pub fn language_slice(acceptor: Acceptor<'_>, alphabet: &Alphabet, max_len: usize, budget: Budget) -> SliceReport {
    let words = alphabet.words_up_to(max_len);
    let (name, outcomes) = match acceptor {
        Acceptor::Rewb(ast) => {
            let oracle = Oracle::new(ast);
            (format!("oracle {ast}"), words.par_iter().map(|w| oracle_outcome(&oracle, w)).collect())
        }
        Acceptor::Machine(m) => {
            let runner = m.runner().expect("well-formed machine");
            (m.name.clone(), words.par_iter().map(|w| machine_outcome(&runner, w, budget)).collect())
        }
    };
    SliceReport {
        acceptor: name,
        alphabet: alphabet.symbols().iter().map(|s| s.to_string()).collect(),
        max_len,
        outcomes,
        mismatches: Vec::new(),
    }
}

/// How machine searches are bounded during a cross-check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BudgetPolicy {
    /// Positives get [`derive_budget`] from their oracle witness; negatives
    /// get the largest positive budget scaled by `negative_factor`.
    Derived { negative_factor: usize },
    Fixed(Budget),
}

impl Default for BudgetPolicy {
    fn default() -> BudgetPolicy {
        BudgetPolicy::Derived { negative_factor: 4 }
    }
}

/// Budget standing in for the largest positive one when a slice has no members.
pub fn fallback_budget(max_len: usize) -> Budget {
    let cells = max_len + 8;
    Budget::new(STEP_FACTOR * cells * cells + STEP_BASE, cells)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CrosscheckReport {
    #[serde(serialize_with = "ser_rewb")]
    pub rewb: Rewb,
    pub oracle: SliceReport,
    pub nsa: SliceReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nesa: Option<SliceReport>,
    /// Budget given to every negative.
    pub negative_budget: Budget,
    /// Flavor violations of the constructed machines.
    pub flavor_errors: Vec<String>,
}

fn ser_rewb<S: serde::Serializer>(r: &Rewb, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

impl CrosscheckReport {
    pub fn mismatches(&self) -> Vec<&Mismatch> {
        self.nsa.mismatches.iter().chain(self.nesa.iter().flat_map(|r| &r.mismatches)).collect()
    }

    pub fn invariant_errors(&self) -> Vec<String> {
        let mut out = self.nsa.invariant_errors();
        if let Some(r) = &self.nesa {
            out.extend(r.invariant_errors());
        }
        out
    }

    /// No mismatch, no broken trace invariant, no flavor violation.
    pub fn is_clean(&self) -> bool {
        self.mismatches().is_empty() && self.invariant_errors().is_empty() && self.flavor_errors.is_empty()
    }

    pub fn to_text(&self) -> String {
        let members = self.oracle.accepted().len();
        let mut out = format!(
            "crosscheck {} over {{{}}} up to length {}: {members} members of {}\n",
            self.rewb,
            self.oracle.alphabet.join(","),
            self.oracle.max_len,
            self.oracle.outcomes.len()
        );
        for r in std::iter::once(&self.nsa).chain(&self.nesa) {
            out.push_str(&format!(
                "{}: accepted {}, bounded refutations {}, mismatches {}\n",
                r.acceptor.split(' ').next().unwrap_or_default().to_uppercase(),
                r.accepted().len(),
                r.bounded_refutations(),
                r.mismatches.len()
            ));
        }
        for m in self.mismatches() {
            out.push_str(&format!("MISMATCH {m}\n"));
        }
        for e in self.invariant_errors() {
            out.push_str(&format!("INVARIANT {e}\n"));
        }
        for e in &self.flavor_errors {
            out.push_str(&format!("FLAVOR {e}\n"));
        }
        out.push_str(if self.is_clean() { "OK\n" } else { "FAIL\n" });
        out
    }
}

/// Oracle decisions on a word list, with the search budget each word gets.
#[derive(Debug, Clone)]
pub struct OracleVerdicts {
    pub words: Vec<Word>,
    pub members: BTreeSet<Word>,
    /// Budget of each member, `None` for non-members.
    pub positive_budgets: Vec<Option<Budget>>,
    pub negative_budget: Budget,
}

impl OracleVerdicts {
    pub fn budget(&self, index: usize) -> Budget {
        self.positive_budgets[index].unwrap_or(self.negative_budget)
    }
}

pub fn oracle_verdicts(ast: &Rewb, words: Vec<Word>, policy: BudgetPolicy) -> OracleVerdicts {
    let oracle = Oracle::new(ast);
    let checks: Vec<_> = words.par_iter().map(|w| oracle.check(w)).collect();
    let positive_budgets: Vec<Option<Budget>> = checks
        .iter()
        .zip(&words)
        .map(|(c, w)| match policy {
            BudgetPolicy::Derived { .. } => c.witness.as_ref().map(|v| derive_budget(v, w)),
            BudgetPolicy::Fixed(b) => c.accepted.then_some(b),
        })
        .collect();
    let longest = words.iter().map(|w| w.len()).max().unwrap_or(0);
    let negative_budget = match policy {
        BudgetPolicy::Derived { negative_factor } => positive_budgets
            .iter()
            .flatten()
            .copied()
            .reduce(Budget::max)
            .unwrap_or_else(|| fallback_budget(longest))
            .scaled(negative_factor),
        BudgetPolicy::Fixed(b) => b,
    };
    let members = words.iter().zip(&checks).filter(|(_, c)| c.accepted).map(|(w, _)| w.clone()).collect();
    OracleVerdicts { words, members, positive_budgets, negative_budget }
}

/// Runs `m` on every word of `verdicts` under its budget and records
/// disagreements with the oracle.
pub fn machine_report(m: &StackMachine, alphabet: &Alphabet, max_len: usize, verdicts: &OracleVerdicts) -> SliceReport {
    let runner = m.runner().expect("well-formed machine");
    let outcomes = verdicts
        .words
        .par_iter()
        .enumerate()
        .map(|(i, w)| machine_outcome(&runner, w, verdicts.budget(i)))
        .collect();
    let mut report = SliceReport {
        acceptor: m.name.clone(),
        alphabet: alphabet.symbols().iter().map(|s| s.to_string()).collect(),
        max_len,
        outcomes,
        mismatches: Vec::new(),
    };
    report.compare_with(&verdicts.members);
    report
}

/// Compares the oracle slice of `ast` with the slices of [`build_nsa`] and,
/// for capture-free rewbs, [`build_nesa`].
pub fn crosscheck(ast: &Rewb, alphabet: &Alphabet, max_len: usize, policy: BudgetPolicy) -> CrosscheckReport {
    let verdicts = oracle_verdicts(ast, alphabet.words_up_to(max_len), policy);
    let oracle_report = SliceReport {
        acceptor: format!("oracle {ast}"),
        alphabet: alphabet.symbols().iter().map(|s| s.to_string()).collect(),
        max_len,
        outcomes: verdicts
            .words
            .iter()
            .map(|w| {
                let verdict = if verdicts.members.contains(w) { Verdict::Member } else { Verdict::NonMember };
                StringOutcome { word: w.clone(), verdict, budget: None, stats: None, trace_len: None, invariant_error: None }
            })
            .collect(),
        mismatches: Vec::new(),
    };

    let mut flavor_errors = Vec::new();
    let mut run = |m: StackMachine| {
        if let Err(vs) = m.validate_flavor() {
            flavor_errors.extend(vs.iter().map(|v| format!("{}: {}", m.name, v.message)));
        }
        machine_report(&m, alphabet, max_len, &verdicts)
    };
    let nsa = run(build_nsa(ast));
    let nesa = build_nesa(ast).ok().map(&mut run);

    CrosscheckReport {
        rewb: ast.clone(),
        oracle: oracle_report,
        nsa,
        nesa,
        negative_budget: verdicts.negative_budget,
        flavor_errors,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::word;

    #[test]
    fn example_spellings() {
        assert_eq!(square().pretty(), r"((1:\2)(2:\1a))*");
        assert_eq!(cubic().pretty(), r"((1:\4a)(2:\3)(3:\2a)(4:\1\3))*");
        assert_eq!(anbn_nesa().validate_flavor(), Ok(()));
        assert!(matches!(example("nope"), Err(LangLabError::UnknownExample(_))));
        for name in EXAMPLE_NAMES {
            assert!(example(name).is_ok());
        }
    }

    #[test]
    fn cubic_formula_values() {
        let values: Vec<usize> = (0..5).map(cubic_length).collect();
        assert_eq!(values, vec![0, 4, 15, 35, 66]);
    }

    #[test]
    fn cubic_derefwords() {
        assert_eq!(derefword_calc_cubic(0).unwrap().1, word(""));
        assert_eq!(derefword_calc_cubic(1).unwrap().1, word("aaaa"));
        assert_eq!(derefword_calc_cubic(3).unwrap().1.len(), 35);
        for n in 0..8 {
            assert!(derefword_calc_cubic(n).is_ok(), "n = {n}");
        }
    }

    #[test]
    fn anbn_slice() {
        let m = anbn_nesa();
        let ab = Alphabet::parse("a,b").unwrap();
        let report = language_slice(Acceptor::Machine(&m), &ab, 8, Budget::new(10_000, 40));
        let expected: BTreeSet<Word> = (0..=4).map(|n| word(&("a".repeat(n) + &"b".repeat(n)))).collect();
        assert_eq!(report.accepted_set(), expected);
        assert!(report.invariant_errors().is_empty());
        let t = match m.runner().unwrap().accepts(&word("ab"), Budget::default()) {
            Outcome::Accepted(t) => t,
            other => panic!("{other:?}"),
        };
        assert_eq!(t.len(), 5);
    }

    #[test]
    fn slice_of_empty_length() {
        let a = Alphabet::parse("a").unwrap();
        let report = language_slice(Acceptor::Rewb(&square()), &a, 0, Budget::default());
        assert_eq!(report.outcomes.len(), 1);
        assert_eq!(report.accepted_lengths(), BTreeSet::from([0]));
    }

    #[test]
    fn square_lengths_by_oracle() {
        let a = Alphabet::parse("a").unwrap();
        let report = language_slice(Acceptor::Rewb(&square()), &a, 20, Budget::default());
        assert_eq!(report.accepted_lengths(), BTreeSet::from([0, 1, 4, 9, 16]));
    }

    #[test]
    fn crosscheck_examples() {
        let ab = Alphabet::parse("a,b").unwrap();
        let a = Alphabet::parse("a").unwrap();
        for (ast, alpha, n) in [(ww(), &ab, 6), (parse(r"(1:a)\1").unwrap(), &a, 6), (parse("((a+b)a)*").unwrap(), &ab, 6)] {
            let report = crosscheck(&ast, alpha, n, BudgetPolicy::default());
            assert!(report.is_clean(), "{}", report.to_text());
            assert!(report.nesa.is_some());
        }
        let report = crosscheck(&parse(r"(1:a)(2:\1b)\2").unwrap(), &ab, 5, BudgetPolicy::default());
        assert!(report.is_clean(), "{}", report.to_text());
        assert!(report.nesa.is_none());
    }

    #[test]
    fn reports_mismatch_for_wrong_reference() {
        let ab = Alphabet::parse("a,b").unwrap();
        let mut report = language_slice(Acceptor::Machine(&anbn_nesa()), &ab, 2, Budget::new(1000, 20));
        report.compare_with(&BTreeSet::from([word("ab"), word("ba")]));
        let words: Vec<String> = report.mismatches.iter().map(|m| format_word(&m.word)).collect();
        assert_eq!(words, vec!["ε", "ba"]);
    }
}
