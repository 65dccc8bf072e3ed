//! Stack automata: plain (SA), nonerasing (NESA) and nested (NSA).
//!
//! A [`StackMachine`] is a plain description with named states and stack
//! symbols. [`Runner`] compiles it into a form suitable for search.
//!
//! The stack tape is written `# Z0 ... $`. `#` is the fixed bottom, `$`
//! ends the tape and every substack is framed as `¢ ... $`. Only the part
//! left of the leftmost `$` is accessible; the cell just left of it is the
//! top.

mod dot;
mod json;
mod runtime;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dot::to_dot;
pub use runtime::{
    check_trace_invariants, Budget, Configuration, Outcome, Runner, SearchStats, Trace, CENT, DOLLAR,
};

/// Reserved cell names.
pub const CENT_NAME: &str = "¢";
pub const DOLLAR_NAME: &str = "$";
pub const BOTTOM_NAME: &str = "#";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Flavor {
    #[serde(rename = "SA")]
    Sa,
    #[serde(rename = "NESA")]
    Nesa,
    #[serde(rename = "NSA")]
    Nsa,
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Flavor::Sa => "SA",
            Flavor::Nesa => "NESA",
            Flavor::Nsa => "NSA",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    L,
    S,
    R,
}

impl Direction {
    pub fn delta(self) -> i32 {
        match self {
            Direction::L => -1,
            Direction::S => 0,
            Direction::R => 1,
        }
    }
}

/// Which cell contents a context accepts. `¢` may be named in interior patterns.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Pattern {
    Any,
    Is(String),
    AnyOf(Vec<String>),
    NoneOf(Vec<String>),
}

impl Pattern {
    pub fn is(name: impl Into<String>) -> Pattern {
        Pattern::Is(name.into())
    }

    pub fn matches(&self, cell: &str) -> bool {
        match self {
            Pattern::Any => true,
            Pattern::Is(z) => z == cell,
            Pattern::AnyOf(zs) => zs.iter().any(|z| z == cell),
            Pattern::NoneOf(zs) => zs.iter().all(|z| z != cell),
        }
    }

    pub fn names(&self) -> Vec<&str> {
        match self {
            Pattern::Any => vec![],
            Pattern::Is(z) => vec![z.as_str()],
            Pattern::AnyOf(zs) | Pattern::NoneOf(zs) => zs.iter().map(String::as_str).collect(),
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pattern::Any => f.write_str("*"),
            Pattern::Is(z) => f.write_str(z),
            Pattern::AnyOf(zs) => write!(f, "{{{}}}", zs.join(",")),
            Pattern::NoneOf(zs) => write!(f, "¬{{{}}}", zs.join(",")),
        }
    }
}

/// Where the pointer is and what it reads.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "json::ContextJson", into = "json::ContextJson")]
pub enum Context {
    /// Pointer on the top cell, which is a stack symbol.
    AtTop(Pattern),
    /// Pointer strictly below the top, on a stack symbol or `¢`.
    Interior(Pattern),
    /// Pointer on `#`.
    AtBottom,
    /// Pointer on a `¢` that is immediately followed by the leftmost `$`.
    AtEmptySubstackTop,
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Context::AtTop(p) => write!(f, "{p}$"),
            Context::Interior(p) => write!(f, "{p}"),
            Context::AtBottom => f.write_str("#"),
            Context::AtEmptySubstackTop => f.write_str("¢$"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "json::ActionJson", into = "json::ActionJson")]
pub enum Action {
    /// Replace the top cell with the given symbols (pointer goes to the new top).
    Rewrite(Vec<String>),
    /// Append symbols above the top cell; shorthand for rewriting `Z` as `Z w`.
    Push(Vec<String>),
    Move(Direction),
    /// Insert `¢ w $` in front of the pointed cell; pointer to the new top.
    CreateSubstack(Vec<String>),
    /// Remove an empty `¢$`; pointer to the cell right of it.
    DestroySubstack,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Rewrite(w) if w.is_empty() => f.write_str("$"),
            Action::Rewrite(w) => write!(f, "{}$", w.concat()),
            Action::Push(w) => write!(f, "+{}", w.concat()),
            Action::Move(d) => write!(f, "{d:?}"),
            Action::CreateSubstack(w) => write!(f, "¢{}$", w.concat()),
            Action::DestroySubstack => f.write_str("destroy"),
        }
    }
}

/// One transition. `read: None` means the rule leaves the input untouched
/// (and may fire at the end of input); `Some(a)` consumes `a`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rule {
    pub from: String,
    #[serde(default)]
    pub read: Option<String>,
    pub context: Context,
    pub action: Action,
    pub to: String,
}

impl Rule {
    pub fn new(
        from: impl Into<String>,
        read: Option<&str>,
        context: Context,
        action: Action,
        to: impl Into<String>,
    ) -> Rule {
        Rule { from: from.into(), read: read.map(str::to_string), context, action, to: to.into() }
    }

    /// Edge label in the `read / context → action` style.
    pub fn label(&self) -> String {
        let read = self.read.as_deref().unwrap_or("ε");
        format!("{read} / {} → {}", self.context, self.action)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} --[{}]--> {}", self.from, self.label(), self.to)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StackMachine {
    pub name: String,
    pub flavor: Flavor,
    pub states: Vec<String>,
    pub input_alphabet: Vec<String>,
    pub stack_alphabet: Vec<String>,
    pub start: String,
    pub initial_stack_symbol: String,
    pub finals: Vec<String>,
    pub rules: Vec<Rule>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MachineError {
    #[error("unknown state {0:?}")]
    UnknownState(String),
    #[error("unknown stack symbol {0:?}")]
    UnknownStackSymbol(String),
    #[error("unknown input symbol {0:?}")]
    UnknownInputSymbol(String),
    #[error("reserved name {0:?} used as a stack symbol")]
    ReservedSymbol(String),
    #[error("too many stack symbols ({0})")]
    TooManySymbols(usize),
    #[error("machine JSON: {0}")]
    Json(String),
}

/// A flavor rule broken by a machine, with the index of the offending rule
/// when there is one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub rule: Option<usize>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.rule {
            Some(i) => write!(f, "rule {i}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl StackMachine {
    pub fn with_flavor(&self, flavor: Flavor) -> StackMachine {
        StackMachine { flavor, ..self.clone() }
    }

    pub fn rules_from<'a>(&'a self, state: &'a str) -> impl Iterator<Item = &'a Rule> + 'a {
        self.rules.iter().filter(move |r| r.from == state)
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn runner(&self) -> Result<Runner, MachineError> {
        Runner::new(self)
    }

    /// Checks well-formedness and the restrictions of the declared flavor.
    pub fn validate_flavor(&self) -> Result<(), Vec<Violation>> {
        let mut out = Vec::new();
        let mut global = |m: String| out.push(Violation { rule: None, message: m });
        let states: BTreeSet<&str> = self.states.iter().map(String::as_str).collect();
        let gamma: BTreeSet<&str> = self.stack_alphabet.iter().map(String::as_str).collect();
        let sigma: BTreeSet<&str> = self.input_alphabet.iter().map(String::as_str).collect();
        if states.len() != self.states.len() {
            global("duplicate state names".into());
        }
        if gamma.len() != self.stack_alphabet.len() {
            global("duplicate stack symbols".into());
        }
        for reserved in [CENT_NAME, DOLLAR_NAME, BOTTOM_NAME] {
            if gamma.contains(reserved) {
                global(format!("reserved symbol {reserved} in the stack alphabet"));
            }
        }
        if !states.contains(self.start.as_str()) {
            global(format!("start state {} is not a state", self.start));
        }
        if !gamma.contains(self.initial_stack_symbol.as_str()) {
            global(format!("initial stack symbol {} is not a stack symbol", self.initial_stack_symbol));
        }
        for f in &self.finals {
            if !states.contains(f.as_str()) {
                global(format!("final state {f} is not a state"));
            }
        }

        for (idx, rule) in self.rules.iter().enumerate() {
            let mut bad = |m: String| out.push(Violation { rule: Some(idx), message: m });
            for s in [&rule.from, &rule.to] {
                if !states.contains(s.as_str()) {
                    bad(format!("unknown state {s}"));
                }
            }
            if let Some(a) = &rule.read {
                if !sigma.contains(a.as_str()) {
                    bad(format!("unknown input symbol {a}"));
                }
            }
            let pattern_names = match &rule.context {
                Context::AtTop(p) => {
                    if p.names().contains(&CENT_NAME) {
                        bad("¢ cannot be a top symbol".into());
                    }
                    p.names()
                }
                Context::Interior(p) => {
                    if self.flavor != Flavor::Nsa && p.names().contains(&CENT_NAME) {
                        bad(format!("¢ context in an {} machine", self.flavor));
                    }
                    p.names()
                }
                _ => vec![],
            };
            for z in pattern_names {
                if z != CENT_NAME && !gamma.contains(z) {
                    bad(format!("unknown stack symbol {z}"));
                }
            }
            let written: &[String] = match &rule.action {
                Action::Rewrite(w) | Action::Push(w) | Action::CreateSubstack(w) => w,
                _ => &[],
            };
            for z in written {
                if !gamma.contains(z.as_str()) {
                    bad(format!("writes unknown stack symbol {z}"));
                }
            }

            match (&rule.context, &rule.action) {
                (Context::AtTop(_), Action::Move(Direction::R)) => {
                    bad("pointer cannot move right from the top".into())
                }
                (Context::AtBottom, Action::Move(d)) if *d != Direction::R => {
                    bad("pointer can only move right from the bottom".into())
                }
                (Context::AtTop(_), Action::Rewrite(_) | Action::Push(_)) => {}
                (_, Action::Rewrite(_) | Action::Push(_)) => bad("only the top can be rewritten".into()),
                (Context::AtTop(_) | Context::Interior(_), Action::CreateSubstack(_)) => {}
                (_, Action::CreateSubstack(_)) => {
                    bad("substacks are created only at a stack symbol or ¢".into())
                }
                (Context::AtEmptySubstackTop, Action::DestroySubstack) => {}
                (_, Action::DestroySubstack) => bad("only an empty substack ¢$ can be destroyed".into()),
                (Context::AtEmptySubstackTop, Action::Move(Direction::R)) => {
                    bad("pointer cannot move right from the top".into())
                }
                _ => {}
            }

            if self.flavor != Flavor::Nsa {
                match &rule.action {
                    Action::CreateSubstack(_) | Action::DestroySubstack => {
                        bad(format!("substack operation in an {} machine", self.flavor))
                    }
                    _ => {}
                }
                if rule.context == Context::AtEmptySubstackTop {
                    bad(format!("¢$ context in an {} machine", self.flavor));
                }
            }
            if self.flavor == Flavor::Nesa {
                if let (Context::AtTop(p), Action::Rewrite(w)) = (&rule.context, &rule.action) {
                    let keeps = match p {
                        Pattern::Is(z) => w.first() == Some(z),
                        _ => false,
                    };
                    if !keeps {
                        bad("nonerasing machine rewrites the top without keeping it".into());
                    }
                }
            }
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }

    /// Rules grouped by source state, in declaration order.
    pub fn rules_by_state(&self) -> BTreeMap<&str, Vec<&Rule>> {
        let mut map: BTreeMap<&str, Vec<&Rule>> = BTreeMap::new();
        for r in &self.rules {
            map.entry(r.from.as_str()).or_default().push(r);
        }
        map
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("machine serializes")
    }

    pub fn from_json(text: &str) -> Result<StackMachine, MachineError> {
        serde_json::from_str(text).map_err(|e| MachineError::Json(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(flavor: Flavor, rule: Rule) -> StackMachine {
        StackMachine {
            name: "tiny".into(),
            flavor,
            states: vec!["p".into(), "q".into()],
            input_alphabet: vec!["a".into()],
            stack_alphabet: vec!["Z0".into(), "x".into()],
            start: "p".into(),
            initial_stack_symbol: "Z0".into(),
            finals: vec!["q".into()],
            rules: vec![rule],
        }
    }

    #[test]
    fn erasing_rewrite_is_not_nonerasing() {
        let m = tiny(Flavor::Nesa, Rule::new("p", None, Context::AtTop(Pattern::is("x")), Action::Rewrite(vec![]), "q"));
        let v = m.validate_flavor().unwrap_err();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule, Some(0));
        assert!(m.with_flavor(Flavor::Sa).validate_flavor().is_ok());
    }

    #[test]
    fn substacks_need_nested_flavor() {
        let m = tiny(Flavor::Sa, Rule::new("p", None, Context::AtEmptySubstackTop, Action::DestroySubstack, "q"));
        assert!(m.validate_flavor().is_err());
        assert!(m.with_flavor(Flavor::Nsa).validate_flavor().is_ok());
    }

    #[test]
    fn push_keeps_top() {
        let m = tiny(Flavor::Nesa, Rule::new("p", Some("a"), Context::AtTop(Pattern::Any), Action::Push(vec!["x".into()]), "q"));
        assert!(m.validate_flavor().is_ok());
        let keep = tiny(
            Flavor::Nesa,
            Rule::new("p", None, Context::AtTop(Pattern::is("x")), Action::Rewrite(vec!["x".into(), "x".into()]), "q"),
        );
        assert!(keep.validate_flavor().is_ok());
    }

    #[test]
    fn pointer_directions_are_restricted() {
        let m = tiny(Flavor::Sa, Rule::new("p", None, Context::AtTop(Pattern::Any), Action::Move(Direction::R), "q"));
        assert!(m.validate_flavor().is_err());
        let m = tiny(Flavor::Sa, Rule::new("p", None, Context::AtBottom, Action::Move(Direction::L), "q"));
        assert!(m.validate_flavor().is_err());
        let m = tiny(Flavor::Sa, Rule::new("p", None, Context::Interior(Pattern::Any), Action::Push(vec![]), "q"));
        assert!(m.validate_flavor().is_err());
    }

    #[test]
    fn unknown_names_are_reported() {
        let m = tiny(Flavor::Sa, Rule::new("p", Some("b"), Context::AtTop(Pattern::is("y")), Action::Move(Direction::S), "zz"));
        assert_eq!(m.validate_flavor().unwrap_err().len(), 3);
    }

    #[test]
    fn labels() {
        let r = Rule::new("p", Some("a"), Context::AtTop(Pattern::Any), Action::Push(vec!["x".into()]), "q");
        assert_eq!(r.label(), "a / *$ → +x");
        let r = Rule::new("p", None, Context::Interior(Pattern::NoneOf(vec!["[1".into(), "Z0".into()])), Action::Move(Direction::L), "q");
        assert_eq!(r.label(), "ε / ¬{[1,Z0} → L");
    }
}
