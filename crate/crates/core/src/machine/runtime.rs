//! Compiled machines, the step relation and bounded acceptance search.

use std::collections::HashMap;
use std::hash::BuildHasherDefault;

use indexmap::IndexSet;
use rustc_hash::FxHasher;
use serde::Serialize;

use super::{
    Action, Context, Flavor, MachineError, Pattern, StackMachine, BOTTOM_NAME, CENT_NAME, DOLLAR_NAME,
};
use crate::syntax::{format_word, Symbol, Word};

/// Tape code of a substack bottom `¢`.
pub const CENT: u16 = u16::MAX - 1;
/// Tape code of `$`.
pub const DOLLAR: u16 = u16::MAX;
/// Input code for symbols the machine does not know; no rule reads it.
const FOREIGN: u16 = u16::MAX;

type FxIndexSet<T> = IndexSet<T, BuildHasherDefault<FxHasher>>;

/// Instantaneous description. `pointer` is the index of the cell being
/// read, `-1` standing for `#`. `tape` always ends with `$`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    pub state: u32,
    pub pos: u32,
    pub pointer: i32,
    pub tape: Vec<u16>,
}

impl Configuration {
    /// Index of the leftmost `$`.
    pub fn boundary(&self) -> usize {
        let from = self.pointer.max(0) as usize;
        from + self.tape[from..].iter().position(|&c| c == DOLLAR).expect("tape ends with $")
    }

    pub fn top(&self) -> i32 {
        self.boundary() as i32 - 1
    }

    pub fn has_substack(&self) -> bool {
        self.tape.contains(&CENT)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Budget {
    /// Maximum number of configurations expanded.
    pub max_steps: usize,
    /// Maximum tape length, counting every `¢` and `$` cell.
    pub max_cells: usize,
}

impl Default for Budget {
    fn default() -> Budget {
        Budget { max_steps: 1_000_000, max_cells: 10_000 }
    }
}

impl Budget {
    pub fn new(max_steps: usize, max_cells: usize) -> Budget {
        Budget { max_steps, max_cells }
    }

    /// Default budget with `REWB_MAX_STEPS` / `REWB_MAX_CELLS` overrides.
    pub fn from_env() -> Budget {
        let read = |key: &str, fallback: usize| {
            std::env::var(key)
                .ok()
                .and_then(|v| v.trim().parse().ok())
                .filter(|&n: &usize| n > 0)
                .unwrap_or(fallback)
        };
        let d = Budget::default();
        Budget { max_steps: read("REWB_MAX_STEPS", d.max_steps), max_cells: read("REWB_MAX_CELLS", d.max_cells) }
    }

    pub fn scaled(self, factor: usize) -> Budget {
        Budget { max_steps: self.max_steps * factor, max_cells: self.max_cells * factor }
    }

    pub fn max(self, other: Budget) -> Budget {
        Budget { max_steps: self.max_steps.max(other.max_steps), max_cells: self.max_cells.max(other.max_cells) }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SearchStats {
    /// Configurations expanded.
    pub expanded: usize,
    /// Distinct configurations generated.
    pub visited: usize,
    /// The step limit stopped the search.
    pub hit_step_limit: bool,
    /// Some successor was dropped for exceeding the cell limit.
    pub pruned_cells: bool,
}

impl SearchStats {
    /// No limit cut the search short, so a rejection is a proof.
    pub fn exhaustive(&self) -> bool {
        !self.hit_step_limit && !self.pruned_cells
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub input: Word,
    pub configurations: Vec<Configuration>,
    pub stats: SearchStats,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.configurations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configurations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Accepted(Trace),
    NotWithinBudget(SearchStats),
}

impl Outcome {
    pub fn is_accepted(&self) -> bool {
        matches!(self, Outcome::Accepted(_))
    }

    pub fn stats(&self) -> SearchStats {
        match self {
            Outcome::Accepted(t) => t.stats,
            Outcome::NotWithinBudget(s) => *s,
        }
    }
}

#[derive(Debug, Clone)]
enum CPattern {
    Any,
    Is(u16),
    AnyOf(Vec<u16>),
    NoneOf(Vec<u16>),
}

impl CPattern {
    fn matches(&self, cell: u16) -> bool {
        match self {
            CPattern::Any => true,
            CPattern::Is(z) => *z == cell,
            CPattern::AnyOf(zs) => zs.contains(&cell),
            CPattern::NoneOf(zs) => !zs.contains(&cell),
        }
    }
}

#[derive(Debug, Clone)]
enum CContext {
    Top(CPattern),
    Interior(CPattern),
    Bottom,
    EmptySubstackTop,
}

#[derive(Debug, Clone)]
enum CAction {
    Rewrite(Vec<u16>),
    Push(Vec<u16>),
    Move(i32),
    Create(Vec<u16>),
    Destroy,
}

#[derive(Debug, Clone)]
struct CRule {
    read: Option<u16>,
    context: CContext,
    action: CAction,
    to: u32,
}

/// Where the pointer currently is.
enum Place {
    Bottom,
    Top(u16),
    EmptySubstackTop,
    Interior(u16),
}

/// A machine compiled for search.
#[derive(Debug, Clone)]
pub struct Runner {
    machine: StackMachine,
    sigma: HashMap<String, u16>,
    gamma: Vec<String>,
    start: u32,
    z0: u16,
    finals: Vec<bool>,
    rules: Vec<Vec<CRule>>,
}

impl Runner {
    pub fn new(m: &StackMachine) -> Result<Runner, MachineError> {
        if m.stack_alphabet.len() >= CENT as usize {
            return Err(MachineError::TooManySymbols(m.stack_alphabet.len()));
        }
        let states: HashMap<&str, u32> =
            m.states.iter().enumerate().map(|(i, s)| (s.as_str(), i as u32)).collect();
        let mut gamma_index: HashMap<&str, u16> = HashMap::new();
        for (i, z) in m.stack_alphabet.iter().enumerate() {
            if [CENT_NAME, DOLLAR_NAME, BOTTOM_NAME].contains(&z.as_str()) {
                return Err(MachineError::ReservedSymbol(z.clone()));
            }
            gamma_index.insert(z.as_str(), i as u16);
        }
        let sigma: HashMap<String, u16> =
            m.input_alphabet.iter().enumerate().map(|(i, a)| (a.clone(), i as u16)).collect();
        let state = |s: &str| states.get(s).copied().ok_or_else(|| MachineError::UnknownState(s.to_string()));
        let cell = |z: &str, allow_cent: bool| -> Result<u16, MachineError> {
            if allow_cent && z == CENT_NAME {
                return Ok(CENT);
            }
            gamma_index.get(z).copied().ok_or_else(|| MachineError::UnknownStackSymbol(z.to_string()))
        };
        let word = |w: &[String]| w.iter().map(|z| cell(z, false)).collect::<Result<Vec<_>, _>>();
        let pattern = |p: &Pattern, allow_cent: bool| -> Result<CPattern, MachineError> {
            let list = |zs: &[String]| zs.iter().map(|z| cell(z, allow_cent)).collect::<Result<Vec<_>, _>>();
            Ok(match p {
                Pattern::Any => CPattern::Any,
                Pattern::Is(z) => CPattern::Is(cell(z, allow_cent)?),
                Pattern::AnyOf(zs) => CPattern::AnyOf(list(zs)?),
                Pattern::NoneOf(zs) => CPattern::NoneOf(list(zs)?),
            })
        };

        let mut rules: Vec<Vec<CRule>> = vec![Vec::new(); m.states.len()];
        for r in &m.rules {
            let read = match &r.read {
                None => None,
                Some(a) => Some(*sigma.get(a).ok_or_else(|| MachineError::UnknownInputSymbol(a.clone()))?),
            };
            let context = match &r.context {
                Context::AtTop(p) => CContext::Top(pattern(p, false)?),
                Context::Interior(p) => CContext::Interior(pattern(p, true)?),
                Context::AtBottom => CContext::Bottom,
                Context::AtEmptySubstackTop => CContext::EmptySubstackTop,
            };
            let action = match &r.action {
                Action::Rewrite(w) => CAction::Rewrite(word(w)?),
                Action::Push(w) => CAction::Push(word(w)?),
                Action::Move(d) => CAction::Move(d.delta()),
                Action::CreateSubstack(w) => CAction::Create(word(w)?),
                Action::DestroySubstack => CAction::Destroy,
            };
            rules[state(&r.from)? as usize].push(CRule { read, context, action, to: state(&r.to)? });
        }
        let mut finals = vec![false; m.states.len()];
        for f in &m.finals {
            finals[state(f)? as usize] = true;
        }
        Ok(Runner {
            machine: m.clone(),
            sigma,
            gamma: m.stack_alphabet.clone(),
            start: state(&m.start)?,
            z0: cell(&m.initial_stack_symbol, false)?,
            finals,
            rules,
        })
    }

    pub fn machine(&self) -> &StackMachine {
        &self.machine
    }

    pub fn flavor(&self) -> Flavor {
        self.machine.flavor
    }

    /// `(start, 0, # Z0 ↾ $)`.
    pub fn initial(&self) -> Configuration {
        Configuration { state: self.start, pos: 0, pointer: 0, tape: vec![self.z0, DOLLAR] }
    }

    pub fn encode(&self, w: &[Symbol]) -> Vec<u16> {
        w.iter().map(|a| self.sigma.get(a.as_str()).copied().unwrap_or(FOREIGN)).collect()
    }

    pub fn is_accepting(&self, c: &Configuration, input_len: usize) -> bool {
        self.finals[c.state as usize] && c.pos as usize == input_len && !c.has_substack()
    }

    fn place(c: &Configuration) -> Place {
        if c.pointer < 0 {
            return Place::Bottom;
        }
        let cell = c.tape[c.pointer as usize];
        if c.pointer == c.top() {
            if cell == CENT {
                Place::EmptySubstackTop
            } else {
                Place::Top(cell)
            }
        } else {
            Place::Interior(cell)
        }
    }

    /// All successors of `c`, each with the index (within its state) of the
    /// rule that produced it.
    fn successors_into(&self, c: &Configuration, input: &[u16], out: &mut Vec<Configuration>) {
        let place = Self::place(c);
        let next_input = input.get(c.pos as usize).copied();
        for rule in &self.rules[c.state as usize] {
            let pos = match rule.read {
                None => c.pos,
                Some(a) if next_input == Some(a) => c.pos + 1,
                Some(_) => continue,
            };
            let ok = match (&rule.context, &place) {
                (CContext::Top(p), Place::Top(z)) => p.matches(*z),
                (CContext::Interior(p), Place::Interior(z)) => p.matches(*z),
                (CContext::Bottom, Place::Bottom) => true,
                (CContext::EmptySubstackTop, Place::EmptySubstackTop) => true,
                _ => false,
            };
            if !ok {
                continue;
            }
            let p = c.pointer;
            let next = match &rule.action {
                CAction::Move(d) => {
                    let np = p + d;
                    if np < -1 || np > c.top() {
                        continue;
                    }
                    Configuration { state: rule.to, pos, pointer: np, tape: c.tape.clone() }
                }
                CAction::Rewrite(w) => {
                    if !matches!(place, Place::Top(_)) {
                        continue;
                    }
                    let mut tape = Vec::with_capacity(c.tape.len() + w.len());
                    tape.extend_from_slice(&c.tape[..p as usize]);
                    tape.extend_from_slice(w);
                    tape.extend_from_slice(&c.tape[p as usize + 1..]);
                    Configuration { state: rule.to, pos, pointer: p - 1 + w.len() as i32, tape }
                }
                CAction::Push(w) => {
                    if !matches!(place, Place::Top(_)) {
                        continue;
                    }
                    let at = p as usize + 1;
                    let mut tape = Vec::with_capacity(c.tape.len() + w.len());
                    tape.extend_from_slice(&c.tape[..at]);
                    tape.extend_from_slice(w);
                    tape.extend_from_slice(&c.tape[at..]);
                    Configuration { state: rule.to, pos, pointer: p + w.len() as i32, tape }
                }
                CAction::Create(w) => {
                    if p < 0 {
                        continue;
                    }
                    let at = p as usize;
                    let mut tape = Vec::with_capacity(c.tape.len() + w.len() + 2);
                    tape.extend_from_slice(&c.tape[..at]);
                    tape.push(CENT);
                    tape.extend_from_slice(w);
                    tape.push(DOLLAR);
                    tape.extend_from_slice(&c.tape[at..]);
                    Configuration { state: rule.to, pos, pointer: p + w.len() as i32, tape }
                }
                CAction::Destroy => {
                    let at = p as usize;
                    match c.tape.get(at + 2) {
                        Some(&z) if z != DOLLAR => {}
                        _ => continue,
                    }
                    let mut tape = c.tape.clone();
                    tape.drain(at..at + 2);
                    Configuration { state: rule.to, pos, pointer: p, tape }
                }
            };
            out.push(next);
        }
    }

    /// One step of the relation on input `w`.
    pub fn step(&self, c: &Configuration, w: &[Symbol]) -> Vec<Configuration> {
        let mut out = Vec::new();
        self.successors_into(c, &self.encode(w), &mut out);
        out
    }

    /// Breadth-first search for an accepting configuration, deduplicating
    /// configurations and respecting `budget`.
    pub fn accepts(&self, w: &[Symbol], budget: Budget) -> Outcome {
        let input = self.encode(w);
        let mut seen: FxIndexSet<Configuration> = FxIndexSet::default();
        let mut parent: Vec<u32> = Vec::new();
        let mut stats = SearchStats::default();
        let init = self.initial();
        let init_accepting = self.is_accepting(&init, input.len());
        seen.insert(init);
        parent.push(u32::MAX);
        if init_accepting {
            return Outcome::Accepted(self.trace_to(w, &seen, &parent, 0, stats));
        }
        let mut buf = Vec::new();
        let mut head = 0;
        while head < seen.len() {
            if stats.expanded >= budget.max_steps {
                stats.hit_step_limit = true;
                break;
            }
            stats.expanded += 1;
            buf.clear();
            self.successors_into(&seen[head], &input, &mut buf);
            for next in buf.drain(..) {
                if next.tape.len() > budget.max_cells {
                    stats.pruned_cells = true;
                    continue;
                }
                let accepting = self.is_accepting(&next, input.len());
                let (id, fresh) = seen.insert_full(next);
                if fresh {
                    parent.push(head as u32);
                    if accepting {
                        stats.visited = seen.len();
                        return Outcome::Accepted(self.trace_to(w, &seen, &parent, id, stats));
                    }
                }
            }
            head += 1;
        }
        stats.visited = seen.len();
        Outcome::NotWithinBudget(stats)
    }

    fn trace_to(
        &self,
        w: &[Symbol],
        seen: &FxIndexSet<Configuration>,
        parent: &[u32],
        mut at: usize,
        stats: SearchStats,
    ) -> Trace {
        let mut configurations = vec![seen[at].clone()];
        while parent[at] != u32::MAX {
            at = parent[at] as usize;
            configurations.push(seen[at].clone());
        }
        configurations.reverse();
        Trace { input: w.to_vec(), configurations, stats }
    }

    pub fn state_name(&self, id: u32) -> &str {
        &self.machine.states[id as usize]
    }

    pub fn cell_name(&self, code: u16) -> &str {
        match code {
            CENT => CENT_NAME,
            DOLLAR => DOLLAR_NAME,
            z => &self.gamma[z as usize],
        }
    }

    /// `#cells↾$`, with `↾` just right of the cell being read.
    pub fn render_tape(&self, c: &Configuration) -> String {
        let mut out = String::from(BOTTOM_NAME);
        if c.pointer < 0 {
            out.push('↾');
        }
        for (i, &z) in c.tape.iter().enumerate() {
            out.push_str(self.cell_name(z));
            if i as i32 == c.pointer {
                out.push('↾');
            }
        }
        out
    }

    /// `state | remaining input | tape`.
    pub fn render_configuration(&self, c: &Configuration, w: &[Symbol]) -> String {
        let rest = &w[(c.pos as usize).min(w.len())..];
        format!("{} | {} | {}", self.state_name(c.state), format_word(rest), self.render_tape(c))
    }

    pub fn render_trace(&self, t: &Trace) -> String {
        t.configurations
            .iter()
            .map(|c| self.render_configuration(c, &t.input))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Checks, along a trace: framing of substacks, pointer range, consecutive
/// configurations being related by one step, nondecreasing input position,
/// and for nonerasing machines nondecreasing stack length.
pub fn check_trace_invariants(runner: &Runner, trace: &Trace) -> Result<(), String> {
    let input = runner.encode(&trace.input);
    for (n, c) in trace.configurations.iter().enumerate() {
        if c.tape.last() != Some(&DOLLAR) {
            return Err(format!("configuration {n}: tape does not end with $"));
        }
        let mut depth: i64 = 0;
        for &z in &c.tape[..c.tape.len() - 1] {
            match z {
                CENT => depth += 1,
                DOLLAR => {
                    depth -= 1;
                    if depth < 0 {
                        return Err(format!("configuration {n}: $ without a matching ¢"));
                    }
                }
                _ => {}
            }
        }
        if depth != 0 {
            return Err(format!("configuration {n}: ¢ without a matching $"));
        }
        if c.pointer < -1 || c.pointer > c.top() {
            return Err(format!("configuration {n}: pointer {} out of range", c.pointer));
        }
        if c.pos as usize > input.len() {
            return Err(format!("configuration {n}: input position past the end"));
        }
        if n > 0 {
            let prev = &trace.configurations[n - 1];
            if c.pos < prev.pos {
                return Err(format!("configuration {n}: input position moved back"));
            }
            if runner.flavor() == Flavor::Nesa && c.tape.len() < prev.tape.len() {
                return Err(format!("configuration {n}: nonerasing stack shrank"));
            }
            let mut succ = Vec::new();
            runner.successors_into(prev, &input, &mut succ);
            if !succ.contains(c) {
                return Err(format!("configuration {n}: not a successor of configuration {}", n - 1));
            }
        }
    }
    Ok(())
}
