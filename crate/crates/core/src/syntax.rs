//! Concrete syntax, validation and label analysis for rewbs.
//!
//! Grammar (whitespace between tokens is ignored):
//!
//! ```text
//! alt     := concat ('+' concat)*
//! concat  := postfix postfix*
//! postfix := atom '*'*
//! atom    := letter | '\'' ident '\'' | '~' | '\' label | '(' label ':' alt ')' | '(' alt ')'
//! ```
//!
//! A letter is a single ASCII alphanumeric character; `'name'` spells a
//! multi-character symbol. `~` is the empty word, `\i` a reference and
//! `(i: ... )` a capture with label `i`. Concatenation and alternation are
//! left-associative.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Capture/reference label. Always positive.
pub type Label = u32;

/// A word over the input alphabet.
pub type Word = Vec<Symbol>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SyntaxError {
    #[error("syntax error at offset {pos}: {message}")]
    Parse { pos: usize, message: String },
    #[error("label {label} is captured or referenced inside a capture with the same label")]
    LabelConflict { label: Label },
    #[error("labels must be positive integers")]
    ZeroLabel,
    #[error("invalid symbol name {0:?}")]
    InvalidSymbol(String),
    #[error("alphabet is empty")]
    EmptyAlphabet,
    #[error("symbol {0:?} declared twice")]
    DuplicateSymbol(String),
    #[error("cannot read {0:?} as a word over the alphabet")]
    UnknownSymbol(String),
    #[error("malformed AST: {0}")]
    Ast(String),
}

/// An input symbol: one alphanumeric character or an alphanumeric identifier.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(Arc<str>);

impl Symbol {
    pub fn new(name: &str) -> Result<Symbol, SyntaxError> {
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric()) {
            return Err(SyntaxError::InvalidSymbol(name.to_string()));
        }
        Ok(Symbol(Arc::from(name)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Whether this symbol must be written `'quoted'` in rewb text.
    /// Digits are quoted so that `\1` followed by the letter `2` stays unambiguous.
    pub fn needs_quotes(&self) -> bool {
        self.0.len() != 1 || self.0.chars().all(|c| c.is_ascii_digit())
    }

    /// Spelling used inside rewb text and ref-word tokens.
    pub fn spelled(&self) -> String {
        if self.needs_quotes() {
            format!("'{}'", self.0)
        } else {
            self.0.to_string()
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

/// Shorthand for tests and builders; panics on an invalid name.
pub fn sym(name: &str) -> Symbol {
    Symbol::new(name).expect("valid symbol name")
}

/// Reads a word of single-character symbols, e.g. `word("abab")`.
pub fn word(text: &str) -> Word {
    text.chars().map(|c| sym(&c.to_string())).collect()
}

/// Renders a word: `ε` when empty, juxtaposed when every symbol is a
/// single character, space separated otherwise.
pub fn format_word(w: &[Symbol]) -> String {
    if w.is_empty() {
        "ε".to_string()
    } else if w.iter().all(|s| s.as_str().len() == 1) {
        w.iter().map(Symbol::as_str).collect()
    } else {
        w.iter().map(Symbol::as_str).collect::<Vec<_>>().join(" ")
    }
}

/// Ordered set of distinct input symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    symbols: Vec<Symbol>,
}

impl Alphabet {
    pub fn new(symbols: Vec<Symbol>) -> Result<Alphabet, SyntaxError> {
        if symbols.is_empty() {
            return Err(SyntaxError::EmptyAlphabet);
        }
        let mut seen = BTreeSet::new();
        for s in &symbols {
            if !seen.insert(s.clone()) {
                return Err(SyntaxError::DuplicateSymbol(s.to_string()));
            }
        }
        Ok(Alphabet { symbols })
    }

    /// Parses `a,b,'a0l'` (comma separated) or `ab` (one symbol per character).
    pub fn parse(decl: &str) -> Result<Alphabet, SyntaxError> {
        let decl = decl.trim();
        let names: Vec<String> = if decl.contains(',') || decl.contains('\'') {
            decl.split(',')
                .map(|s| s.trim().trim_matches('\'').to_string())
                .collect()
        } else {
            decl.chars().filter(|c| !c.is_whitespace()).map(|c| c.to_string()).collect()
        };
        let symbols = names.iter().map(|n| Symbol::new(n)).collect::<Result<Vec<_>, _>>()?;
        Alphabet::new(symbols)
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn contains(&self, s: &Symbol) -> bool {
        self.symbols.contains(s)
    }

    /// Reads a word: `~`, `ε` or the empty string is ε; text containing
    /// whitespace is split into symbol names; otherwise the text is cut by
    /// greedy longest match against the alphabet.
    pub fn tokenize(&self, text: &str) -> Result<Word, SyntaxError> {
        let text = text.trim();
        if text.is_empty() || text == "~" || text == "ε" {
            return Ok(Vec::new());
        }
        if text.contains(char::is_whitespace) {
            return text
                .split_whitespace()
                .map(|t| {
                    let s = Symbol::new(t.trim_matches('\''))
                        .map_err(|_| SyntaxError::UnknownSymbol(t.to_string()))?;
                    if self.contains(&s) {
                        Ok(s)
                    } else {
                        Err(SyntaxError::UnknownSymbol(t.to_string()))
                    }
                })
                .collect();
        }
        let mut out = Vec::new();
        let mut rest = text;
        while !rest.is_empty() {
            let best = self
                .symbols
                .iter()
                .filter(|s| rest.starts_with(s.as_str()))
                .max_by_key(|s| s.as_str().len())
                .ok_or_else(|| SyntaxError::UnknownSymbol(rest.to_string()))?;
            out.push(best.clone());
            rest = &rest[best.as_str().len()..];
        }
        Ok(out)
    }

    /// All words of length at most `max_len`, in shortlex order.
    pub fn words_up_to(&self, max_len: usize) -> Vec<Word> {
        let mut all = vec![Vec::new()];
        let mut layer: Vec<Word> = vec![Vec::new()];
        for _ in 0..max_len {
            let mut next = Vec::with_capacity(layer.len() * self.symbols.len());
            for w in &layer {
                for s in &self.symbols {
                    let mut v = w.clone();
                    v.push(s.clone());
                    next.push(v);
                }
            }
            all.extend(next.iter().cloned());
            layer = next;
        }
        all
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.symbols.iter().map(Symbol::as_str).collect();
        write!(f, "{{{}}}", names.join(","))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Node {
    Literal(Symbol),
    Epsilon,
    Reference(Label),
    Concat(Box<Rewb>, Box<Rewb>),
    Alt(Box<Rewb>, Box<Rewb>),
    Star(Box<Rewb>),
    Capture(Label, Box<Rewb>),
}

/// A validated rewb. Every node carries its var-set (labels captured or
/// referenced below it).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Rewb {
    node: Node,
    vars: BTreeSet<Label>,
}

impl Rewb {
    pub fn literal(s: Symbol) -> Rewb {
        Rewb { node: Node::Literal(s), vars: BTreeSet::new() }
    }

    pub fn epsilon() -> Rewb {
        Rewb { node: Node::Epsilon, vars: BTreeSet::new() }
    }

    pub fn reference(label: Label) -> Result<Rewb, SyntaxError> {
        if label == 0 {
            return Err(SyntaxError::ZeroLabel);
        }
        Ok(Rewb { node: Node::Reference(label), vars: BTreeSet::from([label]) })
    }

    pub fn concat(left: Rewb, right: Rewb) -> Rewb {
        let vars = left.vars.union(&right.vars).copied().collect();
        Rewb { node: Node::Concat(Box::new(left), Box::new(right)), vars }
    }

    pub fn alt(left: Rewb, right: Rewb) -> Rewb {
        let vars = left.vars.union(&right.vars).copied().collect();
        Rewb { node: Node::Alt(Box::new(left), Box::new(right)), vars }
    }

    pub fn star(child: Rewb) -> Rewb {
        let vars = child.vars.clone();
        Rewb { node: Node::Star(Box::new(child)), vars }
    }

    /// `(label: child)`; rejected when `label` already occurs in `child`.
    pub fn capture(label: Label, child: Rewb) -> Result<Rewb, SyntaxError> {
        if label == 0 {
            return Err(SyntaxError::ZeroLabel);
        }
        if child.vars.contains(&label) {
            return Err(SyntaxError::LabelConflict { label });
        }
        let mut vars = child.vars.clone();
        vars.insert(label);
        Ok(Rewb { node: Node::Capture(label, Box::new(child)), vars })
    }

    /// Concatenation of a non-empty sequence, left-associated.
    pub fn concat_all(parts: impl IntoIterator<Item = Rewb>) -> Rewb {
        parts
            .into_iter()
            .reduce(Rewb::concat)
            .unwrap_or_else(Rewb::epsilon)
    }

    pub fn node(&self) -> &Node {
        &self.node
    }

    pub fn vars(&self) -> &BTreeSet<Label> {
        &self.vars
    }

    /// Largest label in use; 0 for a plain regular expression.
    pub fn k(&self) -> Label {
        self.vars.iter().next_back().copied().unwrap_or(0)
    }

    pub fn children(&self) -> Vec<&Rewb> {
        match &self.node {
            Node::Literal(_) | Node::Epsilon | Node::Reference(_) => vec![],
            Node::Concat(l, r) | Node::Alt(l, r) => vec![l, r],
            Node::Star(c) | Node::Capture(_, c) => vec![c],
        }
    }

    /// Letters occurring in the expression.
    pub fn letters(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.visit(&mut |r| {
            if let Node::Literal(s) = &r.node {
                out.insert(s.clone());
            }
        });
        out
    }

    /// Labels that appear as a reference somewhere.
    pub fn referenced_labels(&self) -> BTreeSet<Label> {
        let mut out = BTreeSet::new();
        self.visit(&mut |r| {
            if let Node::Reference(i) = &r.node {
                out.insert(*i);
            }
        });
        out
    }

    /// Labels that appear on some capture.
    pub fn captured_labels(&self) -> BTreeSet<Label> {
        let mut out = BTreeSet::new();
        self.visit(&mut |r| {
            if let Node::Capture(i, _) = &r.node {
                out.insert(*i);
            }
        });
        out
    }

    fn visit<'a>(&'a self, f: &mut dyn FnMut(&'a Rewb)) {
        f(self);
        for c in self.children() {
            c.visit(f);
        }
    }

    /// True iff some reference lies inside some capture.
    pub fn has_captured_reference(&self) -> bool {
        fn walk(r: &Rewb, inside: bool) -> bool {
            match &r.node {
                Node::Reference(_) => inside,
                Node::Capture(_, c) => walk(c, true),
                Node::Concat(a, b) | Node::Alt(a, b) => walk(a, inside) || walk(b, inside),
                Node::Star(c) => walk(c, inside),
                Node::Literal(_) | Node::Epsilon => false,
            }
        }
        walk(self, false)
    }

    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(|c| c.depth()).max().unwrap_or(0)
    }

    pub fn pretty(&self) -> String {
        let mut out = String::new();
        self.write_prec(&mut out, 0);
        out
    }

    // 0: alternation, 1: concatenation, 2: postfix operand
    fn write_prec(&self, out: &mut String, prec: u8) {
        let own = match self.node {
            Node::Alt(..) => 0,
            Node::Concat(..) => 1,
            _ => 2,
        };
        let wrap = own < prec;
        if wrap {
            out.push('(');
        }
        match &self.node {
            Node::Literal(s) => out.push_str(&s.spelled()),
            Node::Epsilon => out.push('~'),
            Node::Reference(i) => {
                out.push('\\');
                out.push_str(&i.to_string());
            }
            Node::Concat(l, r) => {
                l.write_prec(out, 1);
                r.write_prec(out, 2);
            }
            Node::Alt(l, r) => {
                l.write_prec(out, 0);
                out.push('+');
                r.write_prec(out, 1);
            }
            Node::Star(c) => {
                c.write_prec(out, 2);
                out.push('*');
            }
            Node::Capture(i, c) => {
                out.push('(');
                out.push_str(&i.to_string());
                out.push(':');
                c.write_prec(out, 0);
                out.push(')');
            }
        }
        if wrap {
            out.push(')');
        }
    }
}

impl fmt::Display for Rewb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.pretty())
    }
}

impl fmt::Debug for Rewb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Rewb({})", self.pretty())
    }
}

impl std::str::FromStr for Rewb {
    type Err = SyntaxError;

    fn from_str(s: &str) -> Result<Rewb, SyntaxError> {
        parse(s)
    }
}

/// Parses rewb text into a validated AST.
pub fn parse(text: &str) -> Result<Rewb, SyntaxError> {
    let mut p = Parser { chars: text.chars().collect(), pos: 0 };
    let ast = p.alt()?;
    p.skip_ws();
    if p.pos < p.chars.len() {
        return Err(p.error(format!("unexpected {:?}", p.chars[p.pos])));
    }
    Ok(ast)
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

impl Parser {
    fn error(&self, message: impl Into<String>) -> SyntaxError {
        SyntaxError::Parse { pos: self.pos, message: message.into() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn starts_atom(c: char) -> bool {
        c.is_ascii_alphanumeric() || matches!(c, '\'' | '~' | '\\' | '(')
    }

    fn alt(&mut self) -> Result<Rewb, SyntaxError> {
        let mut left = self.concat()?;
        while self.peek() == Some('+') {
            self.pos += 1;
            let right = self.concat()?;
            left = Rewb::alt(left, right);
        }
        Ok(left)
    }

    fn concat(&mut self) -> Result<Rewb, SyntaxError> {
        let mut left = match self.peek() {
            Some(c) if Self::starts_atom(c) => self.postfix()?,
            Some(c) => return Err(self.error(format!("expected an expression, found {c:?}"))),
            None => return Err(self.error("expected an expression, found end of input")),
        };
        while let Some(c) = self.peek() {
            if !Self::starts_atom(c) {
                break;
            }
            let right = self.postfix()?;
            left = Rewb::concat(left, right);
        }
        Ok(left)
    }

    fn postfix(&mut self) -> Result<Rewb, SyntaxError> {
        let mut atom = self.atom()?;
        while self.peek() == Some('*') {
            self.pos += 1;
            atom = Rewb::star(atom);
        }
        Ok(atom)
    }

    fn digits(&mut self) -> Option<String> {
        let start = self.pos;
        while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        (self.pos > start).then(|| self.chars[start..self.pos].iter().collect())
    }

    fn label(&mut self, digits: &str) -> Result<Label, SyntaxError> {
        let n: Label = digits
            .parse()
            .map_err(|_| self.error(format!("label {digits} out of range")))?;
        if n == 0 {
            return Err(SyntaxError::ZeroLabel);
        }
        Ok(n)
    }

    fn atom(&mut self) -> Result<Rewb, SyntaxError> {
        let start = self.pos;
        let c = self.chars[self.pos];
        self.pos += 1;
        match c {
            '~' => Ok(Rewb::epsilon()),
            '\\' => {
                let digits = self.digits().ok_or_else(|| self.error("expected a label after '\\'"))?;
                let label = self.label(&digits)?;
                Rewb::reference(label)
            }
            '\'' => {
                let name_start = self.pos;
                while self.pos < self.chars.len() && self.chars[self.pos] != '\'' {
                    self.pos += 1;
                }
                if self.pos >= self.chars.len() {
                    self.pos = start;
                    return Err(self.error("unterminated quoted symbol"));
                }
                let name: String = self.chars[name_start..self.pos].iter().collect();
                self.pos += 1;
                Symbol::new(&name).map(Rewb::literal)
            }
            '(' => {
                let after_paren = self.pos;
                if let Some(d) = self.digits() {
                    if self.chars.get(self.pos) == Some(&':') {
                        self.pos += 1;
                        let label = self.label(&d)?;
                        let child = self.alt()?;
                        self.expect_close()?;
                        return Rewb::capture(label, child);
                    }
                }
                self.pos = after_paren;
                let inner = self.alt()?;
                self.expect_close()?;
                Ok(inner)
            }
            c if c.is_ascii_alphanumeric() => Ok(Rewb::literal(Symbol(Arc::from(c.to_string())))),
            c => {
                self.pos = start;
                Err(self.error(format!("unexpected {c:?}")))
            }
        }
    }

    fn expect_close(&mut self) -> Result<(), SyntaxError> {
        if self.peek() == Some(')') {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error("expected ')'"))
        }
    }
}

/// JSON tree shape: `{kind, label?, symbol?, children?}`.
#[derive(Serialize, Deserialize)]
struct AstJson {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<Label>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    symbol: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    children: Vec<AstJson>,
}

impl From<&Rewb> for AstJson {
    fn from(r: &Rewb) -> AstJson {
        let (kind, label, symbol) = match &r.node {
            Node::Literal(s) => ("literal", None, Some(s.to_string())),
            Node::Epsilon => ("epsilon", None, None),
            Node::Reference(i) => ("reference", Some(*i), None),
            Node::Concat(..) => ("concat", None, None),
            Node::Alt(..) => ("alt", None, None),
            Node::Star(_) => ("star", None, None),
            Node::Capture(i, _) => ("capture", Some(*i), None),
        };
        AstJson {
            kind: kind.to_string(),
            label,
            symbol,
            children: r.children().into_iter().map(AstJson::from).collect(),
        }
    }
}

impl TryFrom<AstJson> for Rewb {
    type Error = SyntaxError;

    fn try_from(j: AstJson) -> Result<Rewb, SyntaxError> {
        let arity = |n: usize| {
            if j.children.len() == n {
                Ok(())
            } else {
                Err(SyntaxError::Ast(format!("{} expects {n} children", j.kind)))
            }
        };
        let need_label = || j.label.ok_or_else(|| SyntaxError::Ast(format!("{} needs a label", j.kind)));
        match j.kind.as_str() {
            "literal" => {
                arity(0)?;
                let s = j.symbol.as_deref().ok_or_else(|| SyntaxError::Ast("literal needs a symbol".into()))?;
                Ok(Rewb::literal(Symbol::new(s)?))
            }
            "epsilon" => arity(0).map(|_| Rewb::epsilon()),
            "reference" => {
                arity(0)?;
                Rewb::reference(need_label()?)
            }
            "star" => {
                arity(1)?;
                let c = j.children.into_iter().next().expect("one child");
                Ok(Rewb::star(Rewb::try_from(c)?))
            }
            "capture" => {
                arity(1)?;
                let label = need_label()?;
                let c = j.children.into_iter().next().expect("one child");
                Rewb::capture(label, Rewb::try_from(c)?)
            }
            "concat" | "alt" => {
                arity(2)?;
                let is_concat = j.kind == "concat";
                let mut it = j.children.into_iter();
                let l = Rewb::try_from(it.next().expect("two children"))?;
                let r = Rewb::try_from(it.next().expect("two children"))?;
                Ok(if is_concat { Rewb::concat(l, r) } else { Rewb::alt(l, r) })
            }
            other => Err(SyntaxError::Ast(format!("unknown node kind {other:?}"))),
        }
    }
}

impl Serialize for Rewb {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        AstJson::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Rewb {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Rewb, D::Error> {
        let j = AstJson::deserialize(deserializer)?;
        Rewb::try_from(j).map_err(serde::de::Error::custom)
    }
}

/// Parameters for [`random_rewb`].
#[derive(Debug, Clone)]
pub struct GenConfig {
    pub max_depth: usize,
    pub max_label: Label,
    pub alphabet: Vec<Symbol>,
}

/// Draws a random valid rewb. Capture labels are drawn from the labels
/// not already used inside the captured child; when none is free the
/// capture is retried a few times and then dropped in favour of the child.
pub fn random_rewb<R: Rng + ?Sized>(rng: &mut R, cfg: &GenConfig) -> Rewb {
    gen_node(rng, cfg, cfg.max_depth.max(1))
}

fn gen_leaf<R: Rng + ?Sized>(rng: &mut R, cfg: &GenConfig) -> Rewb {
    let refs = if cfg.max_label > 0 { 2 } else { 0 };
    let pick = rng.gen_range(0..4 + refs);
    match pick {
        0..=2 => Rewb::literal(cfg.alphabet[rng.gen_range(0..cfg.alphabet.len())].clone()),
        3 => Rewb::epsilon(),
        _ => Rewb::reference(rng.gen_range(1..=cfg.max_label)).expect("positive label"),
    }
}

fn gen_node<R: Rng + ?Sized>(rng: &mut R, cfg: &GenConfig, depth: usize) -> Rewb {
    if depth <= 1 {
        return gen_leaf(rng, cfg);
    }
    let caps = if cfg.max_label > 0 { 3 } else { 0 };
    match rng.gen_range(0..9 + caps) {
        0..=1 => gen_leaf(rng, cfg),
        2..=4 => Rewb::concat(gen_node(rng, cfg, depth - 1), gen_node(rng, cfg, depth - 1)),
        5..=6 => Rewb::alt(gen_node(rng, cfg, depth - 1), gen_node(rng, cfg, depth - 1)),
        7..=8 => Rewb::star(gen_node(rng, cfg, depth - 1)),
        _ => {
            let mut child = gen_node(rng, cfg, depth - 1);
            for _ in 0..4 {
                let free: Vec<Label> =
                    (1..=cfg.max_label).filter(|l| !child.vars.contains(l)).collect();
                if !free.is_empty() {
                    let label = free[rng.gen_range(0..free.len())];
                    return Rewb::capture(label, child).expect("label is free");
                }
                child = gen_node(rng, cfg, depth - 1);
            }
            child
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lit(s: &str) -> Rewb {
        Rewb::literal(sym(s))
    }

    #[test]
    fn parses_ww() {
        let ast = parse(r"(1:(a+b)*)\1").unwrap();
        let expected = Rewb::concat(
            Rewb::capture(1, Rewb::star(Rewb::alt(lit("a"), lit("b")))).unwrap(),
            Rewb::reference(1).unwrap(),
        );
        assert_eq!(ast, expected);
        assert_eq!(ast.k(), 1);
        assert_eq!(ast.pretty(), r"(1:(a+b)*)\1");
    }

    #[test]
    fn epsilon_literal() {
        assert_eq!(parse("~").unwrap(), Rewb::epsilon());
        assert_eq!(Rewb::epsilon().pretty(), "~");
    }

    #[test]
    fn rejects_the_three_non_rewbs() {
        assert_eq!(parse("(1:(1:a*))"), Err(SyntaxError::LabelConflict { label: 1 }));
        assert_eq!(parse(r"(1:a*\1)"), Err(SyntaxError::LabelConflict { label: 1 }));
        assert_eq!(parse("(1:(2:(1:a*)))"), Err(SyntaxError::LabelConflict { label: 1 }));
    }

    #[test]
    fn rejects_bad_labels_and_syntax() {
        assert_eq!(parse(r"\0"), Err(SyntaxError::ZeroLabel));
        assert_eq!(parse("(0:a)"), Err(SyntaxError::ZeroLabel));
        assert!(matches!(parse("(x:a)"), Err(SyntaxError::Parse { .. })));
        assert!(matches!(parse("a+"), Err(SyntaxError::Parse { .. })));
        assert!(matches!(parse("(a"), Err(SyntaxError::Parse { .. })));
        assert!(matches!(parse(""), Err(SyntaxError::Parse { .. })));
        assert!(matches!(parse("'a"), Err(SyntaxError::Parse { .. })));
        assert!(matches!(parse("a)"), Err(SyntaxError::Parse { .. })));
        assert!(matches!(parse(r"\"), Err(SyntaxError::Parse { .. })));
    }

    #[test]
    fn captured_reference_detection() {
        assert!(parse(r"(1:a)(2:\1)\2").unwrap().has_captured_reference());
        assert!(!parse(r"(1:(a+b)*)\1").unwrap().has_captured_reference());
        assert!(!parse("a*").unwrap().has_captured_reference());
    }

    #[test]
    fn capture_prints_directly() {
        assert_eq!(Rewb::capture(1, lit("a")).unwrap().pretty(), "(1:a)");
    }

    #[test]
    fn cubic_round_trips() {
        let text = r"((1:\4a)(2:\3)(3:\2a)(4:\1\3))*";
        let ast = parse(text).unwrap();
        assert_eq!(ast.pretty(), text);
        assert_eq!(parse(&ast.pretty()).unwrap(), ast);
        assert_eq!(ast.k(), 4);
    }

    #[test]
    fn quoted_and_digit_symbols() {
        let ast = parse(r"('a0l''a0m')*(1:'7')\1'2'").unwrap();
        assert_eq!(ast.letters().len(), 4);
        let printed = ast.pretty();
        assert_eq!(parse(&printed).unwrap(), ast);
        assert!(printed.contains(r"\1'2'"));
    }

    #[test]
    fn right_nested_concat_keeps_shape() {
        let ast = Rewb::concat(lit("a"), Rewb::concat(lit("b"), lit("c")));
        assert_eq!(ast.pretty(), "a(bc)");
        assert_eq!(parse("a(bc)").unwrap(), ast);
        let alt = Rewb::alt(lit("a"), Rewb::alt(lit("b"), lit("c")));
        assert_eq!(parse(&alt.pretty()).unwrap(), alt);
    }

    #[test]
    fn json_shape() {
        let ast = parse(r"(1:a)\1").unwrap();
        let j = serde_json::to_value(&ast).unwrap();
        assert_eq!(j["kind"], "concat");
        assert_eq!(j["children"][0]["kind"], "capture");
        assert_eq!(j["children"][0]["label"], 1);
        assert_eq!(j["children"][0]["children"][0]["symbol"], "a");
        let back: Rewb = serde_json::from_value(j).unwrap();
        assert_eq!(back, ast);
        let bad = serde_json::json!({"kind": "capture", "label": 1, "children": [{"kind": "reference", "label": 1}]});
        assert!(serde_json::from_value::<Rewb>(bad).is_err());
    }

    #[test]
    fn alphabet_parsing_and_tokenizing() {
        let ab = Alphabet::parse("a,b").unwrap();
        assert_eq!(ab, Alphabet::parse("ab").unwrap());
        assert_eq!(ab.tokenize("abba").unwrap(), word("abba"));
        assert_eq!(ab.tokenize("~").unwrap(), Vec::<Symbol>::new());
        assert!(ab.tokenize("abc").is_err());
        assert!(Alphabet::parse("a,a").is_err());
        assert!(Alphabet::parse("").is_err());
        let multi = Alphabet::parse("a0l,a0m,a").unwrap();
        assert_eq!(multi.tokenize("a0la").unwrap(), vec![sym("a0l"), sym("a")]);
        assert_eq!(multi.tokenize("a0m a0l").unwrap(), vec![sym("a0m"), sym("a0l")]);
        assert_eq!(ab.words_up_to(2).len(), 7);
    }
}
