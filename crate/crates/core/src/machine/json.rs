//! JSON shapes for contexts and actions.

use serde::{Deserialize, Serialize};

use super::{Action, Context, Direction, Pattern};

#[derive(Serialize, Deserialize)]
pub(super) struct ContextJson {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    symbol: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    any_of: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    none_of: Option<Vec<String>>,
}

impl From<Context> for ContextJson {
    fn from(c: Context) -> ContextJson {
        let (kind, pattern) = match c {
            Context::AtTop(p) => ("top", Some(p)),
            Context::Interior(p) => ("interior", Some(p)),
            Context::AtBottom => ("bottom", None),
            Context::AtEmptySubstackTop => ("empty_substack_top", None),
        };
        let mut j = ContextJson { kind: kind.to_string(), symbol: None, any_of: None, none_of: None };
        match pattern {
            Some(Pattern::Is(z)) => j.symbol = Some(z),
            Some(Pattern::AnyOf(zs)) => j.any_of = Some(zs),
            Some(Pattern::NoneOf(zs)) => j.none_of = Some(zs),
            Some(Pattern::Any) | None => {}
        }
        j
    }
}

impl TryFrom<ContextJson> for Context {
    type Error = String;

    fn try_from(j: ContextJson) -> Result<Context, String> {
        let given = [j.symbol.is_some(), j.any_of.is_some(), j.none_of.is_some()]
            .iter()
            .filter(|b| **b)
            .count();
        if given > 1 {
            return Err("context takes at most one of symbol, any_of, none_of".into());
        }
        let pattern = if let Some(z) = j.symbol {
            Pattern::Is(z)
        } else if let Some(zs) = j.any_of {
            Pattern::AnyOf(zs)
        } else if let Some(zs) = j.none_of {
            Pattern::NoneOf(zs)
        } else {
            Pattern::Any
        };
        match j.kind.as_str() {
            "top" => Ok(Context::AtTop(pattern)),
            "interior" => Ok(Context::Interior(pattern)),
            "bottom" | "empty_substack_top" if given > 0 => {
                Err(format!("context {} takes no symbol", j.kind))
            }
            "bottom" => Ok(Context::AtBottom),
            "empty_substack_top" => Ok(Context::AtEmptySubstackTop),
            other => Err(format!("unknown context kind {other:?}")),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
pub(super) enum Payload {
    Symbols(Vec<String>),
    Direction(Direction),
}

#[derive(Serialize, Deserialize)]
pub(super) struct ActionJson {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    payload: Option<Payload>,
}

impl From<Action> for ActionJson {
    fn from(a: Action) -> ActionJson {
        let (kind, payload) = match a {
            Action::Rewrite(w) => ("rewrite", Some(Payload::Symbols(w))),
            Action::Push(w) => ("push", Some(Payload::Symbols(w))),
            Action::Move(d) => ("move", Some(Payload::Direction(d))),
            Action::CreateSubstack(w) => ("create", Some(Payload::Symbols(w))),
            Action::DestroySubstack => ("destroy", None),
        };
        ActionJson { kind: kind.to_string(), payload }
    }
}

impl TryFrom<ActionJson> for Action {
    type Error = String;

    fn try_from(j: ActionJson) -> Result<Action, String> {
        match (j.kind.as_str(), j.payload) {
            ("rewrite", Some(Payload::Symbols(w))) => Ok(Action::Rewrite(w)),
            ("push", Some(Payload::Symbols(w))) => Ok(Action::Push(w)),
            ("create", Some(Payload::Symbols(w))) => Ok(Action::CreateSubstack(w)),
            ("move", Some(Payload::Direction(d))) => Ok(Action::Move(d)),
            ("destroy", None) => Ok(Action::DestroySubstack),
            (kind, _) => Err(format!("bad payload for action {kind:?}")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{Flavor, Rule, StackMachine};
    use super::*;

    #[test]
    fn rule_json_shape() {
        let r = Rule::new("q0", None, Context::Interior(Pattern::is("Z0")), Action::Move(Direction::S), "q2");
        let j = serde_json::to_value(&r).unwrap();
        assert_eq!(j["read"], serde_json::Value::Null);
        assert_eq!(j["context"]["kind"], "interior");
        assert_eq!(j["context"]["symbol"], "Z0");
        assert_eq!(j["action"]["kind"], "move");
        assert_eq!(j["action"]["payload"], "S");
        let back: Rule = serde_json::from_value(j).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn machine_round_trip() {
        let m = StackMachine {
            name: "m".into(),
            flavor: Flavor::Nsa,
            states: vec!["p".into()],
            input_alphabet: vec!["a".into()],
            stack_alphabet: vec!["Z0".into()],
            start: "p".into(),
            initial_stack_symbol: "Z0".into(),
            finals: vec![],
            rules: vec![
                Rule::new("p", Some("a"), Context::AtTop(Pattern::Any), Action::Push(vec!["Z0".into()]), "p"),
                Rule::new("p", None, Context::AtEmptySubstackTop, Action::DestroySubstack, "p"),
                Rule::new("p", None, Context::Interior(Pattern::NoneOf(vec!["¢".into()])), Action::CreateSubstack(vec![]), "p"),
                Rule::new("p", None, Context::AtTop(Pattern::AnyOf(vec!["Z0".into()])), Action::Rewrite(vec![]), "p"),
            ],
        };
        let text = m.to_json();
        assert!(text.contains("\"flavor\": \"NSA\""));
        assert_eq!(StackMachine::from_json(&text).unwrap(), m);
    }

    #[test]
    fn rejects_malformed_contexts() {
        let bad = r#"{"from":"p","read":null,"context":{"kind":"bottom","symbol":"x"},"action":{"kind":"destroy"},"to":"p"}"#;
        assert!(serde_json::from_str::<Rule>(bad).is_err());
        let bad = r#"{"from":"p","read":null,"context":{"kind":"top"},"action":{"kind":"move"},"to":"p"}"#;
        assert!(serde_json::from_str::<Rule>(bad).is_err());
    }
}
