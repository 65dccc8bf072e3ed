//! Ref-words: strings over letters, indexed brackets and reference numbers,
//! together with the dereferencing function.
//!
//! Token syntax: `[i` and `]i` are brackets, a bare integer is a reference,
//! a run of non-digit characters is a sequence of one-character letters and
//! `'name'` is a single (possibly multi-character) letter. Tokens are
//! separated by whitespace; `~` or an empty line is the empty ref-word.

use std::fmt;

use rand::Rng;
use thiserror::Error;

use crate::syntax::{Label, Symbol, Word};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RefSymbol {
    Letter(Symbol),
    Open(Label),
    Close(Label),
    Ref(Label),
}

impl RefSymbol {
    pub fn label(&self) -> Option<Label> {
        match self {
            RefSymbol::Letter(_) => None,
            RefSymbol::Open(i) | RefSymbol::Close(i) | RefSymbol::Ref(i) => Some(*i),
        }
    }

    pub fn is_ref(&self) -> bool {
        matches!(self, RefSymbol::Ref(_))
    }
}

impl fmt::Display for RefSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RefSymbol::Letter(s) => f.write_str(&s.spelled()),
            RefSymbol::Open(i) => write!(f, "[{i}"),
            RefSymbol::Close(i) => write!(f, "]{i}"),
            RefSymbol::Ref(i) => write!(f, "{i}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RefWordError {
    #[error("bad ref-word token {0:?}")]
    BadToken(String),
    #[error("labels must be positive integers")]
    ZeroLabel,
    #[error("reference {0} cannot be erased by g")]
    ReferenceInG(Label),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RefWord(pub Vec<RefSymbol>);

impl RefWord {
    pub fn new(symbols: Vec<RefSymbol>) -> RefWord {
        RefWord(symbols)
    }

    pub fn symbols(&self) -> &[RefSymbol] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of reference symbols.
    pub fn cnt(&self) -> usize {
        self.0.iter().filter(|s| s.is_ref()).count()
    }

    pub fn prefix(&self, len: usize) -> RefWord {
        RefWord(self.0[..len].to_vec())
    }

    pub fn parse(text: &str) -> Result<RefWord, RefWordError> {
        let text = text.trim();
        if text.is_empty() || text == "~" || text == "ε" {
            return Ok(RefWord::default());
        }
        let mut out = Vec::new();
        for tok in text.split_whitespace() {
            parse_token(tok, &mut out)?;
        }
        Ok(RefWord(out))
    }

    /// Splits into letter/bracket segments and reference numbers.
    pub fn decompose(&self) -> Decomposition {
        let mut segments = vec![Vec::new()];
        let mut numbers = Vec::new();
        for s in &self.0 {
            match s {
                RefSymbol::Ref(i) => {
                    numbers.push(*i);
                    segments.push(Vec::new());
                }
                other => segments.last_mut().expect("nonempty").push(other.clone()),
            }
        }
        Decomposition { segments, numbers }
    }

    /// For every reference `n` and every `[n` before it, the first `[n`/`]n`
    /// following that bracket is a `]n`.
    pub fn is_matching(&self) -> bool {
        let syms = &self.0;
        for (p, s) in syms.iter().enumerate() {
            let RefSymbol::Ref(n) = s else { continue };
            for q in 0..p {
                if syms[q] != RefSymbol::Open(*n) {
                    continue;
                }
                let first = syms[q + 1..p]
                    .iter()
                    .find(|x| matches!(x, RefSymbol::Open(j) | RefSymbol::Close(j) if j == n));
                if first != Some(&RefSymbol::Close(*n)) {
                    return false;
                }
            }
        }
        true
    }
}

fn parse_token(tok: &str, out: &mut Vec<RefSymbol>) -> Result<(), RefWordError> {
    let bad = || RefWordError::BadToken(tok.to_string());
    let label = |digits: &str| -> Result<Label, RefWordError> {
        if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let n: Label = digits.parse().map_err(|_| bad())?;
        if n == 0 {
            Err(RefWordError::ZeroLabel)
        } else {
            Ok(n)
        }
    };
    if let Some(rest) = tok.strip_prefix('[') {
        out.push(RefSymbol::Open(label(rest)?));
    } else if let Some(rest) = tok.strip_prefix(']') {
        out.push(RefSymbol::Close(label(rest)?));
    } else if tok.chars().all(|c| c.is_ascii_digit()) {
        out.push(RefSymbol::Ref(label(tok)?));
    } else {
        let mut rest = tok;
        while !rest.is_empty() {
            if let Some(q) = rest.strip_prefix('\'') {
                let end = q.find('\'').ok_or_else(bad)?;
                out.push(RefSymbol::Letter(Symbol::new(&q[..end]).map_err(|_| bad())?));
                rest = &q[end + 1..];
            } else {
                let c = rest.chars().next().expect("nonempty");
                if c.is_ascii_digit() {
                    return Err(bad());
                }
                out.push(RefSymbol::Letter(Symbol::new(&c.to_string()).map_err(|_| bad())?));
                rest = &rest[c.len_utf8()..];
            }
        }
    }
    Ok(())
}

impl fmt::Display for RefWord {
    /// Runs of plain one-character letters are written together.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("ε");
        }
        let mut tokens: Vec<String> = Vec::new();
        let mut run = String::new();
        for s in &self.0 {
            match s {
                RefSymbol::Letter(a) if !a.needs_quotes() => run.push_str(a.as_str()),
                other => {
                    if !run.is_empty() {
                        tokens.push(std::mem::take(&mut run));
                    }
                    tokens.push(other.to_string());
                }
            }
        }
        if !run.is_empty() {
            tokens.push(run);
        }
        f.write_str(&tokens.join(" "))
    }
}

impl std::str::FromStr for RefWord {
    type Err = RefWordError;

    fn from_str(s: &str) -> Result<RefWord, RefWordError> {
        RefWord::parse(s)
    }
}

/// `v = v_0 n_1 v_1 ... n_m v_m` with every `v_r` free of references.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    pub segments: Vec<Vec<RefSymbol>>,
    pub numbers: Vec<Label>,
}

impl Decomposition {
    pub fn cnt(&self) -> usize {
        self.numbers.len()
    }

    /// `y_r = v_0 n_1 v_1 ... n_r v_r`.
    pub fn y(&self, r: usize) -> RefWord {
        let mut out = self.segments[0].clone();
        for s in 1..=r {
            out.push(RefSymbol::Ref(self.numbers[s - 1]));
            out.extend(self.segments[s].iter().cloned());
        }
        RefWord(out)
    }

    pub fn reassemble(&self) -> RefWord {
        self.y(self.numbers.len())
    }
}

/// Erases brackets. Fails on a reference symbol.
pub fn g(v: &[RefSymbol]) -> Result<Word, RefWordError> {
    let mut out = Vec::new();
    for s in v {
        match s {
            RefSymbol::Letter(a) => out.push(a.clone()),
            RefSymbol::Open(_) | RefSymbol::Close(_) => {}
            RefSymbol::Ref(i) => return Err(RefWordError::ReferenceInG(*i)),
        }
    }
    Ok(out)
}

fn letters_only(v: &[RefSymbol]) -> Word {
    v.iter()
        .filter_map(|s| match s {
            RefSymbol::Letter(a) => Some(a.clone()),
            _ => None,
        })
        .collect()
}

/// Record of one run of the tape procedure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerefTrace {
    /// Bracketed content used at each completed loop (empty when unbound).
    pub values: Vec<Vec<RefSymbol>>,
    /// Tape before the first loop and after each completed loop.
    pub snapshots: Vec<RefWord>,
    /// `None` when the procedure ended in the undefined state.
    pub result: Option<Word>,
}

impl DerefTrace {
    pub fn loops(&self) -> usize {
        self.values.len()
    }
}

/// Runs the one-tape dereferencing procedure, keeping every intermediate tape.
pub fn deref_values(v: &RefWord) -> DerefTrace {
    let mut tape = v.0.clone();
    let mut values = Vec::new();
    let mut snapshots = vec![v.clone()];
    // Everything left of `from` is already free of references.
    let mut from = 0;
    loop {
        let Some(at) = tape[from..].iter().position(RefSymbol::is_ref).map(|p| p + from) else {
            let result = letters_only(&tape);
            return DerefTrace { values, snapshots, result: Some(result) };
        };
        let RefSymbol::Ref(i) = tape[at] else { unreachable!() };
        let open = tape[..at].iter().rposition(|s| *s == RefSymbol::Open(i));
        let content: Vec<RefSymbol> = match open {
            None => Vec::new(),
            Some(o) => {
                let Some(close) = tape[o + 1..at].iter().position(|s| *s == RefSymbol::Close(i))
                else {
                    return DerefTrace { values, snapshots, result: None };
                };
                tape[o + 1..o + 1 + close].to_vec()
            }
        };
        let inserted: Vec<RefSymbol> =
            letters_only(&content).into_iter().map(RefSymbol::Letter).collect();
        from = at + inserted.len();
        tape.splice(at..at + 1, inserted);
        values.push(content);
        snapshots.push(RefWord(tape.clone()));
    }
}

/// The dereferencing function; `None` is the undefined result.
pub fn deref(v: &RefWord) -> Option<Word> {
    deref_values(v).result
}

/// Closed-form dereference for matching ref-words:
/// `g(v_0) g(v_[1]) g(v_1) ... g(v_[m]) g(v_m)`, where each `v_[r]` is read
/// off the original word (from the last `[n_r` before `n_r` to the next
/// `]n_r`) with earlier references expanded to their values.
/// Returns `None` if a needed closing bracket is missing.
pub fn deref_closed_form(v: &RefWord) -> Option<Word> {
    let syms = &v.0;
    let mut value_at: Vec<Option<Word>> = vec![None; syms.len()];
    let mut out = Vec::new();
    for (p, s) in syms.iter().enumerate() {
        match s {
            RefSymbol::Letter(a) => out.push(a.clone()),
            RefSymbol::Open(_) | RefSymbol::Close(_) => {}
            RefSymbol::Ref(n) => {
                let mut val = Vec::new();
                if let Some(o) = syms[..p].iter().rposition(|x| *x == RefSymbol::Open(*n)) {
                    let close = syms[o + 1..p].iter().position(|x| *x == RefSymbol::Close(*n))? + o + 1;
                    for q in o + 1..close {
                        match &syms[q] {
                            RefSymbol::Letter(a) => val.push(a.clone()),
                            RefSymbol::Ref(_) => val.extend(value_at[q].clone().expect("earlier value")),
                            _ => {}
                        }
                    }
                }
                out.extend(val.iter().cloned());
                value_at[p] = Some(val);
            }
        }
    }
    Some(out)
}

/// Draws a random matching ref-word of length at most `max_len` with labels
/// in `1..=k`. References are only emitted where they keep the word matching.
pub fn random_matching<R: Rng + ?Sized>(
    rng: &mut R,
    letters: &[Symbol],
    k: Label,
    max_len: usize,
) -> RefWord {
    let len = rng.gen_range(0..=max_len);
    // open[i]: last bracket of label i was `[i`; broken[i]: some `[i` was
    // followed directly by another `[i`, so references to i are forbidden.
    let mut open = vec![false; k as usize + 1];
    let mut broken = vec![false; k as usize + 1];
    let mut out = Vec::with_capacity(len);
    while out.len() < len {
        let choice = if k == 0 { 0 } else { rng.gen_range(0..5) };
        match choice {
            0 | 1 => out.push(RefSymbol::Letter(letters[rng.gen_range(0..letters.len())].clone())),
            2 => {
                let i = rng.gen_range(1..=k);
                if open[i as usize] {
                    broken[i as usize] = true;
                }
                open[i as usize] = true;
                out.push(RefSymbol::Open(i));
            }
            3 => {
                let i = rng.gen_range(1..=k);
                open[i as usize] = false;
                out.push(RefSymbol::Close(i));
            }
            _ => {
                let i = rng.gen_range(1..=k);
                if !open[i as usize] && !broken[i as usize] {
                    out.push(RefSymbol::Ref(i));
                }
            }
        }
    }
    RefWord(out)
}

/// Draws an arbitrary ref-word (not necessarily matching).
pub fn random_refword<R: Rng + ?Sized>(
    rng: &mut R,
    letters: &[Symbol],
    k: Label,
    max_len: usize,
) -> RefWord {
    let len = rng.gen_range(0..=max_len);
    let out = (0..len)
        .map(|_| {
            let choice = if k == 0 { 0 } else { rng.gen_range(0..5) };
            let i = if k == 0 { 1 } else { rng.gen_range(1..=k) };
            match choice {
                0 | 1 => RefSymbol::Letter(letters[rng.gen_range(0..letters.len())].clone()),
                2 => RefSymbol::Open(i),
                3 => RefSymbol::Close(i),
                _ => RefSymbol::Ref(i),
            }
        })
        .collect();
    RefWord(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::word;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rw(text: &str) -> RefWord {
        RefWord::parse(text).unwrap()
    }

    #[test]
    fn token_round_trip() {
        let v = rw("[1 a [2 b ]2 2 ]1 1");
        assert_eq!(v.len(), 8);
        assert_eq!(v.to_string(), "[1 a [2 b ]2 2 ]1 1");
        assert_eq!(rw("[1 bb ]1").0[2], RefSymbol::Letter(crate::syntax::sym("b")));
        assert_eq!(rw("'a0l' 1").to_string(), "'a0l' 1");
        assert_eq!(rw("~"), RefWord::default());
        assert!(RefWord::parse("[0").is_err());
        assert!(RefWord::parse("[x").is_err());
        assert!(RefWord::parse("a1").is_err());
    }

    #[test]
    fn g_erases_brackets() {
        assert_eq!(g(&rw("[1 a ]1").0).unwrap(), word("a"));
        assert_eq!(g(&[]).unwrap(), word(""));
        assert_eq!(g(&rw("[1 a [2 b ]2 b ]1").0).unwrap(), word("abb"));
        assert_eq!(g(&rw("a 1").0), Err(RefWordError::ReferenceInG(1)));
    }

    #[test]
    fn decompositions() {
        let d = rw("abc 1 2").decompose();
        assert_eq!(d.numbers, vec![1, 2]);
        assert_eq!(d.segments, vec![rw("abc").0, vec![], vec![]]);
        let d = rw("ab").decompose();
        assert_eq!(d.cnt(), 0);
        assert_eq!(d.segments, vec![rw("ab").0]);
        let d = rw("[1 a ]1 1 [1 bb ]1 1").decompose();
        assert_eq!(d.numbers, vec![1, 1]);
        assert_eq!(d.reassemble(), rw("[1 a ]1 1 [1 bb ]1 1"));
    }

    #[test]
    fn matching_predicate() {
        assert!(rw("[1 a [2 b ]2 2 ]1 1").is_matching());
        assert!(rw("abc 1 2").is_matching());
        assert!(!rw("[1 a 1 ]1").is_matching());
        assert!(!rw("[1 [1 ]1 1").is_matching());
    }

    #[test]
    fn worked_dereferences() {
        assert_eq!(deref(&rw("[1 a [2 b ]2 2 ]1 1")), Some(word("abbabb")));
        assert_eq!(deref(&rw("[1 a ]1 1 [1 bb ]1 1")), Some(word("aabbbb")));
        assert_eq!(deref(&rw("abc 1 2")), Some(word("abc")));
        assert_eq!(deref(&rw("[1 a 1 ]1")), None);
    }

    #[test]
    fn intermediate_values() {
        let t = deref_values(&rw("[1 a [2 b ]2 2 ]1 1"));
        assert_eq!(t.values, vec![rw("b").0, rw("a [2 b ]2 b").0]);
        assert_eq!(t.snapshots[1], rw("[1 a [2 b ]2 b ]1 1"));
        assert_eq!(t.snapshots[2], rw("[1 a [2 b ]2 b ]1 abb"));
        let t = deref_values(&rw("abc 1 2"));
        assert_eq!(t.values, vec![vec![], vec![]]);
        assert!(deref_values(&rw("ab")).values.is_empty());
    }

    #[test]
    fn non_matching_can_still_be_defined() {
        // The nearest `[1` is closed, even though an earlier one is not.
        let v = rw("[1 a [1 b ]1 1");
        assert!(!v.is_matching());
        assert_eq!(deref(&v), Some(word("abb")));
        assert_eq!(deref_closed_form(&v), Some(word("abb")));
    }

    fn snapshot_identity_holds(v: &RefWord) -> bool {
        let d = v.decompose();
        let t = deref_values(v);
        (0..=t.loops()).all(|r| {
            let mut expect = d.segments[0].clone();
            for s in 1..=d.cnt() {
                if s <= r {
                    expect.extend(letters_only(&t.values[s - 1]).into_iter().map(RefSymbol::Letter));
                } else {
                    expect.push(RefSymbol::Ref(d.numbers[s - 1]));
                }
                expect.extend(d.segments[s].iter().cloned());
            }
            t.snapshots[r].0 == expect
        })
    }

    proptest! {
        #[test]
        fn closed_form_agrees_on_matching(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v = random_matching(&mut rng, &word("ab"), 3, 20);
            prop_assert!(v.is_matching());
            let t = deref_values(&v);
            prop_assert_eq!(t.loops(), v.cnt());
            prop_assert!(t.result.is_some());
            prop_assert_eq!(t.result, deref_closed_form(&v));
            prop_assert!(snapshot_identity_holds(&v));
        }

        #[test]
        fn prefixes_of_matching_words(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v = random_matching(&mut rng, &word("ab"), 3, 20);
            let full = deref_values(&v);
            for len in 0..=v.len() {
                let x = v.prefix(len);
                prop_assert!(x.is_matching());
                let part = deref_values(&x);
                prop_assert_eq!(&part.values[..], &full.values[..x.cnt()]);
            }
        }

        #[test]
        fn deref_is_total(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v = random_refword(&mut rng, &word("ab"), 3, 16);
            let t = deref_values(&v);
            prop_assert!(t.loops() <= v.cnt());
            prop_assert!(snapshot_identity_holds(&v));
            if v.is_matching() {
                prop_assert!(t.result.is_some());
            }
            prop_assert_eq!(t.result, deref_closed_form(&v));
            prop_assert_eq!(RefWord::parse(&v.to_string()).unwrap(), v);
        }
    }
}
