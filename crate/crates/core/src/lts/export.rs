use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{Action, Lts, StateId, StateKind, TERMINAL};
use crate::syntax::Name;

fn sigma_label(sigma: &BTreeMap<Name, Name>) -> String {
    let parts: Vec<String> = sigma.iter().map(|(k, v)| format!("{k}↦{v}")).collect();
    format!("{{{}}}", parts.join(", "))
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz rendering. Fold edges are dashed and labelled with their
/// renaming; the terminal state is a double circle.
pub fn to_dot(lts: &Lts) -> String {
    let mut out = String::from("digraph lts {\n  node [shape=box];\n");
    for s in &lts.states {
        match &s.expr {
            None => writeln!(out, "  s{} [label=\"0\", shape=doublecircle];", s.id),
            Some(e) => {
                let shape = if s.kind == StateKind::Case {
                    ", style=bold"
                } else {
                    ""
                };
                writeln!(
                    out,
                    "  s{} [label=\"{}\"{shape}];",
                    s.id,
                    escape(&e.to_string())
                )
            }
        }
        .unwrap();
    }
    for t in &lts.transitions {
        writeln!(
            out,
            "  s{} -> s{} [label=\"{}\"];",
            t.from,
            t.to,
            escape(&t.action.to_string())
        )
        .unwrap();
    }
    for f in &lts.folds {
        writeln!(
            out,
            "  s{} -> s{} [style=dashed, label=\"{}\"];",
            f.from,
            f.to,
            escape(&sigma_label(&f.sigma))
        )
        .unwrap();
    }
    out.push_str("}\n");
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateJson {
    pub id: StateId,
    pub kind: StateKind,
    pub expr: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionJson {
    pub from: StateId,
    pub action: Action,
    pub label: String,
    pub to: StateId,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldJson {
    pub from: StateId,
    pub sigma: BTreeMap<Name, Name>,
    pub to: StateId,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LtsJson {
    pub start: StateId,
    pub terminal: StateId,
    pub states: Vec<StateJson>,
    pub transitions: Vec<TransitionJson>,
    pub folds: Vec<FoldJson>,
}

pub fn to_json(lts: &Lts) -> LtsJson {
    LtsJson {
        start: lts.start,
        terminal: TERMINAL,
        states: lts
            .states
            .iter()
            .map(|s| StateJson {
                id: s.id,
                kind: s.kind,
                expr: s.expr.as_ref().map(|e| e.to_string()),
            })
            .collect(),
        transitions: lts
            .transitions
            .iter()
            .map(|t| TransitionJson {
                from: t.from,
                label: t.action.to_string(),
                action: t.action.clone(),
                to: t.to,
            })
            .collect(),
        folds: lts
            .folds
            .iter()
            .map(|f| FoldJson {
                from: f.from,
                sigma: f.sigma.clone(),
                to: f.to,
            })
            .collect(),
    }
}
