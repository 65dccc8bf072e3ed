//! Ref-word automata and the environment-based membership oracle.
//!
//! A rewb is read as a plain regular expression over letters, brackets and
//! reference numbers. [`RefNfa::build`] compiles it Thompson-style, removes
//! ε-edges and trims. [`Oracle`] then searches that automaton against a
//! concrete input, keeping the captured span of every label.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use indexmap::IndexSet;

use crate::refword::{RefSymbol, RefWord};
use crate::syntax::{Label, Node, Rewb, Symbol, Word};

pub type StateId = usize;

/// ε-free, trimmed automaton over [`RefSymbol`]. State 0 is the start state
/// and states are numbered in breadth-first order from it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RefNfa {
    pub start: StateId,
    pub finals: BTreeSet<StateId>,
    pub edges: Vec<Vec<(RefSymbol, StateId)>>,
    pub letters: BTreeSet<Symbol>,
    pub k: Label,
}

struct Thompson {
    eps: Vec<Vec<StateId>>,
    sym: Vec<Vec<(RefSymbol, StateId)>>,
}

impl Thompson {
    fn fresh(&mut self) -> StateId {
        self.eps.push(Vec::new());
        self.sym.push(Vec::new());
        self.eps.len() - 1
    }

    fn frag(&mut self, r: &Rewb) -> (StateId, StateId) {
        match r.node() {
            Node::Literal(a) => self.single(RefSymbol::Letter(a.clone())),
            Node::Reference(i) => self.single(RefSymbol::Ref(*i)),
            Node::Epsilon => {
                let (s, t) = (self.fresh(), self.fresh());
                self.eps[s].push(t);
                (s, t)
            }
            Node::Concat(a, b) => {
                let (s1, t1) = self.frag(a);
                let (s2, t2) = self.frag(b);
                self.eps[t1].push(s2);
                (s1, t2)
            }
            Node::Alt(a, b) => {
                let s = self.fresh();
                let (s1, t1) = self.frag(a);
                let (s2, t2) = self.frag(b);
                let t = self.fresh();
                self.eps[s].extend([s1, s2]);
                self.eps[t1].push(t);
                self.eps[t2].push(t);
                (s, t)
            }
            Node::Star(c) => {
                let s = self.fresh();
                let (s1, t1) = self.frag(c);
                let t = self.fresh();
                self.eps[s].extend([s1, t]);
                self.eps[t1].extend([s1, t]);
                (s, t)
            }
            Node::Capture(i, c) => {
                let s = self.fresh();
                let (s1, t1) = self.frag(c);
                let t = self.fresh();
                self.sym[s].push((RefSymbol::Open(*i), s1));
                self.sym[t1].push((RefSymbol::Close(*i), t));
                (s, t)
            }
        }
    }

    fn single(&mut self, x: RefSymbol) -> (StateId, StateId) {
        let (s, t) = (self.fresh(), self.fresh());
        self.sym[s].push((x, t));
        (s, t)
    }

    fn closure(&self, q: StateId) -> Vec<StateId> {
        let mut seen = vec![false; self.eps.len()];
        let mut order = vec![q];
        seen[q] = true;
        let mut i = 0;
        while i < order.len() {
            for &p in &self.eps[order[i]] {
                if !seen[p] {
                    seen[p] = true;
                    order.push(p);
                }
            }
            i += 1;
        }
        order
    }
}

impl RefNfa {
    pub fn build(ast: &Rewb) -> RefNfa {
        let mut t = Thompson { eps: Vec::new(), sym: Vec::new() };
        let (s, f) = t.frag(ast);
        let n = t.eps.len();

        let mut edges: Vec<Vec<(RefSymbol, StateId)>> = vec![Vec::new(); n];
        let mut is_final = vec![false; n];
        for q in 0..n {
            for p in t.closure(q) {
                if p == f {
                    is_final[q] = true;
                }
                for e in &t.sym[p] {
                    if !edges[q].contains(e) {
                        edges[q].push(e.clone());
                    }
                }
            }
        }

        // Breadth-first renumbering from the start keeps only reachable states.
        let mut index: HashMap<StateId, StateId> = HashMap::from([(s, 0)]);
        let mut order = vec![s];
        let mut i = 0;
        while i < order.len() {
            for (_, p) in &edges[order[i]] {
                if !index.contains_key(p) {
                    index.insert(*p, order.len());
                    order.push(*p);
                }
            }
            i += 1;
        }
        let mut nfa = RefNfa {
            start: 0,
            finals: order.iter().enumerate().filter(|(_, q)| is_final[**q]).map(|(i, _)| i).collect(),
            edges: order
                .iter()
                .map(|q| edges[*q].iter().map(|(x, p)| (x.clone(), index[p])).collect())
                .collect(),
            letters: ast.letters(),
            k: ast.k(),
        };
        nfa.trim();
        nfa
    }

    /// Drops states that cannot reach a final state, then renumbers.
    fn trim(&mut self) {
        let n = self.edges.len();
        let mut co = vec![false; n];
        for &f in &self.finals {
            co[f] = true;
        }
        let mut changed = true;
        while changed {
            changed = false;
            for q in 0..n {
                if !co[q] && self.edges[q].iter().any(|(_, p)| co[*p]) {
                    co[q] = true;
                    changed = true;
                }
            }
        }
        co[self.start] = true;
        if co.iter().all(|&b| b) {
            return;
        }
        let keep: Vec<StateId> = (0..n).filter(|&q| co[q]).collect();
        let index: HashMap<StateId, StateId> = keep.iter().enumerate().map(|(i, &q)| (q, i)).collect();
        self.edges = keep
            .iter()
            .map(|&q| {
                self.edges[q]
                    .iter()
                    .filter(|(_, p)| co[*p])
                    .map(|(x, p)| (x.clone(), index[p]))
                    .collect()
            })
            .collect();
        self.finals = self.finals.iter().map(|f| index[f]).collect();
        self.start = index[&self.start];
    }

    pub fn num_states(&self) -> usize {
        self.edges.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    pub fn is_final(&self, q: StateId) -> bool {
        self.finals.contains(&q)
    }

    pub fn accepts(&self, v: &RefWord) -> bool {
        let mut cur: BTreeSet<StateId> = BTreeSet::from([self.start]);
        for x in v.symbols() {
            cur = cur
                .iter()
                .flat_map(|q| self.edges[*q].iter().filter(|(y, _)| y == x).map(|(_, p)| *p))
                .collect();
        }
        cur.iter().any(|q| self.is_final(*q))
    }

    /// Every state is reachable from the start and reaches a final state.
    pub fn is_trim(&self) -> bool {
        let n = self.num_states();
        let mut fwd = vec![false; n];
        fwd[self.start] = true;
        let mut stack = vec![self.start];
        while let Some(q) = stack.pop() {
            for (_, p) in &self.edges[q] {
                if !fwd[*p] {
                    fwd[*p] = true;
                    stack.push(*p);
                }
            }
        }
        let mut co: Vec<bool> = (0..n).map(|q| self.is_final(q)).collect();
        let mut changed = true;
        while changed {
            changed = false;
            for q in 0..n {
                if !co[q] && self.edges[q].iter().any(|(_, p)| co[*p]) {
                    co[q] = true;
                    changed = true;
                }
            }
        }
        fwd.iter().all(|&b| b) && co.iter().all(|&b| b)
    }

    /// Words labelling paths from the start, of length at most `max_len`,
    /// each with the set of states it reaches.
    pub fn paths_up_to(&self, max_len: usize) -> BTreeMap<RefWord, BTreeSet<StateId>> {
        let mut all = BTreeMap::new();
        let mut layer: BTreeMap<Vec<RefSymbol>, BTreeSet<StateId>> =
            BTreeMap::from([(Vec::new(), BTreeSet::from([self.start]))]);
        for len in 0..=max_len {
            let mut next: BTreeMap<Vec<RefSymbol>, BTreeSet<StateId>> = BTreeMap::new();
            for (w, qs) in &layer {
                if len < max_len {
                    for q in qs {
                        for (x, p) in &self.edges[*q] {
                            let mut v = w.clone();
                            v.push(x.clone());
                            next.entry(v).or_default().insert(*p);
                        }
                    }
                }
            }
            for (w, qs) in std::mem::replace(&mut layer, next) {
                all.insert(RefWord(w), qs);
            }
        }
        all
    }

    /// Accepted ref-words of length at most `max_len`.
    pub fn enumerate_refwords(&self, max_len: usize) -> BTreeSet<RefWord> {
        self.paths_up_to(max_len)
            .into_iter()
            .filter(|(_, qs)| qs.iter().any(|q| self.is_final(*q)))
            .map(|(w, _)| w)
            .collect()
    }

    /// True iff every path label from the start of length at most `max_len`
    /// is a matching ref-word.
    pub fn reachable_strings_are_matching(&self, max_len: usize) -> bool {
        self.paths_up_to(max_len).keys().all(RefWord::is_matching)
    }
}

/// Search state of the oracle.
/// `env[i]` is the span bound to label `i + 1`; `open[i]` the start of an
/// open capture with that label.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct MatchConf {
    state: u32,
    pos: u32,
    env: Vec<Option<(u32, u32)>>,
    open: Vec<Option<u32>>,
}

/// Outcome of an oracle query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchResult {
    pub accepted: bool,
    pub witness: Option<RefWord>,
    /// Number of distinct configurations visited.
    pub explored: usize,
}

/// Ground-truth membership test for `L(ast)`.
#[derive(Debug, Clone)]
pub struct Oracle {
    nfa: RefNfa,
}

impl Oracle {
    pub fn new(ast: &Rewb) -> Oracle {
        Oracle { nfa: RefNfa::build(ast) }
    }

    pub fn nfa(&self) -> &RefNfa {
        &self.nfa
    }

    /// Breadth-first search over (state, position, environment, open
    /// captures). Returns the edge sequence of the first accepting path.
    pub fn check(&self, w: &[Symbol]) -> MatchResult {
        let k = self.nfa.k as usize;
        let init = MatchConf {
            state: self.nfa.start as u32,
            pos: 0,
            env: vec![None; k],
            open: vec![None; k],
        };
        let mut seen: IndexSet<MatchConf> = IndexSet::new();
        let mut parent: Vec<Option<(usize, RefSymbol)>> = Vec::new();
        seen.insert(init);
        parent.push(None);
        let mut queue = VecDeque::from([0usize]);
        while let Some(idx) = queue.pop_front() {
            let conf = seen[idx].clone();
            if conf.pos as usize == w.len() && self.nfa.is_final(conf.state as usize) {
                let mut path = Vec::new();
                let mut at = idx;
                while let Some((p, x)) = &parent[at] {
                    path.push(x.clone());
                    at = *p;
                }
                path.reverse();
                return MatchResult { accepted: true, witness: Some(RefWord(path)), explored: seen.len() };
            }
            for (x, p) in &self.nfa.edges[conf.state as usize] {
                let mut next = conf.clone();
                next.state = *p as u32;
                let pos = conf.pos as usize;
                match x {
                    RefSymbol::Letter(a) => {
                        if w.get(pos) != Some(a) {
                            continue;
                        }
                        next.pos += 1;
                    }
                    RefSymbol::Open(i) => next.open[*i as usize - 1] = Some(conf.pos),
                    RefSymbol::Close(i) => {
                        let start = conf.open[*i as usize - 1].expect("capture opened before closing");
                        next.open[*i as usize - 1] = None;
                        next.env[*i as usize - 1] = Some((start, conf.pos));
                    }
                    RefSymbol::Ref(i) => {
                        if let Some((s, e)) = conf.env[*i as usize - 1] {
                            let (s, e) = (s as usize, e as usize);
                            let len = e - s;
                            if pos + len > w.len() || w[pos..pos + len] != w[s..e] {
                                continue;
                            }
                            next.pos += len as u32;
                        }
                    }
                }
                let (id, fresh) = seen.insert_full(next);
                if fresh {
                    parent.push(Some((idx, x.clone())));
                    queue.push_back(id);
                }
            }
        }
        MatchResult { accepted: false, witness: None, explored: seen.len() }
    }

    pub fn is_member(&self, w: &[Symbol]) -> bool {
        self.check(w).accepted
    }

    /// All members of length at most `max_len`, found by generating words
    /// along the automaton instead of testing every candidate string.
    pub fn members(&self, max_len: usize) -> BTreeSet<Word> {
        #[derive(Clone, PartialEq, Eq, Hash)]
        struct Gen {
            state: StateId,
            word: Word,
            env: Vec<Option<(usize, usize)>>,
            open: Vec<Option<usize>>,
        }
        let k = self.nfa.k as usize;
        let init = Gen { state: self.nfa.start, word: Vec::new(), env: vec![None; k], open: vec![None; k] };
        let mut seen: IndexSet<Gen> = IndexSet::from([init]);
        let mut out = BTreeSet::new();
        let mut idx = 0;
        while idx < seen.len() {
            let conf = seen[idx].clone();
            idx += 1;
            if self.nfa.is_final(conf.state) {
                out.insert(conf.word.clone());
            }
            for (x, p) in &self.nfa.edges[conf.state] {
                let mut next = conf.clone();
                next.state = *p;
                match x {
                    RefSymbol::Letter(a) => {
                        if conf.word.len() >= max_len {
                            continue;
                        }
                        next.word.push(a.clone());
                    }
                    RefSymbol::Open(i) => next.open[*i as usize - 1] = Some(conf.word.len()),
                    RefSymbol::Close(i) => {
                        let start = conf.open[*i as usize - 1].expect("capture opened before closing");
                        next.open[*i as usize - 1] = None;
                        next.env[*i as usize - 1] = Some((start, conf.word.len()));
                    }
                    RefSymbol::Ref(i) => {
                        if let Some((s, e)) = conf.env[*i as usize - 1] {
                            if conf.word.len() + (e - s) > max_len {
                                continue;
                            }
                            let copy = conf.word[s..e].to_vec();
                            next.word.extend(copy);
                        }
                    }
                }
                seen.insert(next);
            }
        }
        out
    }
}

/// One-shot oracle query.
pub fn oracle_match(ast: &Rewb, w: &[Symbol]) -> MatchResult {
    Oracle::new(ast).check(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::refword::deref;
    use crate::syntax::{parse, word, Alphabet};

    fn nfa(text: &str) -> RefNfa {
        RefNfa::build(&parse(text).unwrap())
    }

    fn rw(text: &str) -> RefWord {
        RefWord::parse(text).unwrap()
    }

    #[test]
    fn ww_refwords() {
        let n = nfa(r"(1:(a+b)*)\1");
        assert!(n.is_trim());
        assert!(n.accepts(&rw("[1 abba ]1 1")));
        assert!(!n.accepts(&rw("[1 ab ]1")));
        let words = n.enumerate_refwords(4);
        assert!(words.contains(&rw("[1 ]1 1")));
        assert_eq!(words.len(), 3);
        assert!(words.iter().all(|v| {
            let s = v.symbols();
            s[0] == RefSymbol::Open(1) && s[s.len() - 2] == RefSymbol::Close(1) && s[s.len() - 1] == RefSymbol::Ref(1)
        }));
    }

    #[test]
    fn small_automata() {
        let a = nfa("a");
        assert_eq!(a.num_states(), 2);
        assert_eq!(a.enumerate_refwords(3), BTreeSet::from([rw("a")]));
        assert_eq!(nfa(r"\1").enumerate_refwords(3), BTreeSet::from([rw("1")]));
        assert_eq!(nfa(r"(1:a)\1").enumerate_refwords(4), BTreeSet::from([rw("[1 a ]1 1")]));
        assert_eq!(nfa("a*").enumerate_refwords(0), BTreeSet::from([RefWord::default()]));
        assert!(nfa("a").enumerate_refwords(0).is_empty());
    }

    #[test]
    fn paths_from_start_are_matching() {
        assert!(nfa(r"(1:(a+b)*)\1").reachable_strings_are_matching(6));
        assert!(nfa(r"(1:a)\1").reachable_strings_are_matching(6));
        assert!(nfa("a").reachable_strings_are_matching(6));
    }

    #[test]
    fn oracle_on_ww() {
        let o = Oracle::new(&parse(r"(1:(a+b)*)\1").unwrap());
        let r = o.check(&word("abab"));
        assert!(r.accepted);
        assert_eq!(r.witness, Some(rw("[1 ab ]1 1")));
        assert!(!o.is_member(&word("aba")));
        assert!(o.is_member(&word("")));
        assert!(Oracle::new(&parse("a*").unwrap()).is_member(&word("")));
    }

    #[test]
    fn unbound_reference_is_empty() {
        let o = Oracle::new(&parse(r"\1a").unwrap());
        assert!(o.is_member(&word("a")));
        let o = Oracle::new(&parse(r"(1:a)*\1").unwrap());
        assert!(o.is_member(&word("")));
        assert!(o.is_member(&word("aa")));
        assert!(o.is_member(&word("aaa")));
    }

    #[test]
    fn witnesses_dereference_to_input() {
        for text in [r"(1:a*)(2:b*)(\1+\2)", r"(2:(1:(a+b)*)\1)\2(2:\1)*", r"((1:\2)(2:\1a))*"] {
            let ast = parse(text).unwrap();
            let o = Oracle::new(&ast);
            for w in Alphabet::parse("ab").unwrap().words_up_to(6) {
                let r = o.check(&w);
                if let Some(v) = r.witness {
                    assert!(o.nfa().accepts(&v), "{text} {v}");
                    assert_eq!(deref(&v).as_ref(), Some(&w), "{text} {v}");
                }
            }
        }
    }

    #[test]
    fn generated_members_agree_with_tests() {
        for text in [r"(1:(a+b)*)\1", r"(1:a*)(2:b*)(\1+\2)", r"((1:\2)(2:\1a))*", r"a*\1"] {
            let o = Oracle::new(&parse(text).unwrap());
            let tested: BTreeSet<Word> = Alphabet::parse("ab")
                .unwrap()
                .words_up_to(6)
                .into_iter()
                .filter(|w| o.is_member(w))
                .collect();
            assert_eq!(o.members(6), tested, "{text}");
        }
    }

    #[test]
    fn refword_enumeration_agrees_with_oracle() {
        for text in [r"(1:a*)(2:b*)(\1+\2)", r"(2:a*)\2", r"((1:a*))*"] {
            let ast = parse(text).unwrap();
            let o = Oracle::new(&ast);
            let from_refwords: BTreeSet<Word> = o
                .nfa()
                .enumerate_refwords(9)
                .iter()
                .filter_map(deref)
                .filter(|w| w.len() <= 3)
                .collect();
            for w in Alphabet::parse("ab").unwrap().words_up_to(3) {
                assert_eq!(o.is_member(&w), from_refwords.contains(&w), "{text} {w:?}");
            }
        }
    }
}
