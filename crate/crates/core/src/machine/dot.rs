//! Graphviz export.

use std::collections::BTreeMap;
use std::fmt::Write;

use super::StackMachine;

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// States become nodes (finals doubly circled); rules sharing endpoints are
/// merged into one edge with one label line per rule.
pub fn to_dot(m: &StackMachine) -> String {
    let mut out = String::new();
    writeln!(out, "digraph {} {{", quote(&m.name)).unwrap();
    writeln!(out, "  rankdir=LR;").unwrap();
    writeln!(out, "  node [shape=circle];").unwrap();
    writeln!(out, "  __start [shape=point];").unwrap();
    for s in &m.states {
        let shape = if m.finals.contains(s) { "doublecircle" } else { "circle" };
        writeln!(out, "  {} [shape={shape}];", quote(s)).unwrap();
    }
    writeln!(out, "  __start -> {};", quote(&m.start)).unwrap();
    let mut edges: BTreeMap<(&str, &str), Vec<String>> = BTreeMap::new();
    for r in &m.rules {
        edges.entry((r.from.as_str(), r.to.as_str())).or_default().push(r.label());
    }
    for ((from, to), labels) in edges {
        writeln!(out, "  {} -> {} [label={}];", quote(from), quote(to), quote(&labels.join("\n"))).unwrap();
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::super::{Action, Context, Direction, Flavor, Pattern, Rule};
    use super::*;

    #[test]
    fn merges_parallel_rules() {
        let m = StackMachine {
            name: "m".into(),
            flavor: Flavor::Sa,
            states: vec!["p".into(), "q".into()],
            input_alphabet: vec!["b".into()],
            stack_alphabet: vec!["Z0".into(), "⋆".into()],
            start: "p".into(),
            initial_stack_symbol: "Z0".into(),
            finals: vec!["q".into()],
            rules: vec![
                Rule::new("p", Some("b"), Context::Interior(Pattern::is("⋆")), Action::Move(Direction::L), "p"),
                Rule::new("p", Some("b"), Context::AtTop(Pattern::is("⋆")), Action::Move(Direction::L), "p"),
                Rule::new("p", None, Context::Interior(Pattern::is("Z0")), Action::Move(Direction::S), "q"),
            ],
        };
        let dot = to_dot(&m);
        assert!(dot.starts_with("digraph \"m\" {"));
        assert!(dot.contains("\"q\" [shape=doublecircle];"));
        assert!(dot.contains("\"p\" -> \"p\" [label=\"b / ⋆ → L\nb / ⋆$ → L\"];"));
        assert_eq!(dot.matches(" -> ").count(), 3);
    }
}
