//! The termination check on a folded transition system.
//!
//! Every infinite trace of a finite system eventually repeats a cycle, so a
//! program in distilled form terminates when every cycle passes through a
//! case state: each trip around it scrutinises a parameter that cannot have
//! grown, and a well-founded value can only be taken apart finitely often.
//! The check deletes the case states and asks whether what remains is
//! acyclic.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::distilled::Violation;
use crate::lts::{Lts, StateId};
use crate::syntax::{Expr, Name, Renaming};

/// A fold edge together with the case states that guard it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldWitness {
    pub from: StateId,
    pub to: StateId,
    pub sigma: Renaming,
    /// Case states on some path from `to` back to `from`.
    pub witness_case_states: Vec<StateId>,
    /// Head variables of those states' selectors.
    pub scrutinised: Vec<Name>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cycle {
    /// Starts and ends at the same state.
    pub states: Vec<StateId>,
    /// `labels[i]` names the edge from `states[i]` to `states[i + 1]`.
    pub labels: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Terminates(Vec<FoldWitness>),
    /// A cycle with no case state on it. Not a proof of divergence.
    Unknown(Cycle),
    NotApplicable {
        reason: String,
        violations: Vec<Violation>,
    },
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Terminates(_) => "terminates",
            Verdict::Unknown(_) => "unknown",
            Verdict::NotApplicable { .. } => "not-applicable",
        }
    }

    pub fn is_terminates(&self) -> bool {
        matches!(self, Verdict::Terminates(_))
    }

    pub fn not_distilled(violations: Vec<Violation>) -> Self {
        Verdict::NotApplicable {
            reason: "program is not in distilled form".into(),
            violations,
        }
    }
}

/// Decides termination of the program `l` was built from. `distilled_ok`
/// says whether that program passed the distilled-form check; without it
/// the case-state argument does not apply.
pub fn analyze(l: &Lts, distilled_ok: bool) -> Verdict {
    if !distilled_ok {
        return Verdict::not_distilled(Vec::new());
    }
    let succ = l.successors();
    let n = l.states.len();
    let alive: Vec<bool> = (0..n).map(|s| !l.is_case(s)).collect();
    let leftover = kahn_leftover(&succ, &alive);
    if !leftover.is_empty() {
        let cycle = shortest_cycle(&succ, &leftover).expect("Kahn leftovers contain a cycle");
        return Verdict::Unknown(label_cycle(l, cycle));
    }
    let mut pred = vec![Vec::new(); n];
    for (s, ts) in succ.iter().enumerate() {
        for &t in ts {
            pred[t].push(s);
        }
    }
    let witnesses = l
        .folds
        .iter()
        .map(|f| {
            let forward = reach(&succ, f.to);
            let backward = reach(&pred, f.from);
            let cases: Vec<StateId> = (0..n)
                .filter(|&s| l.is_case(s) && forward[s] && backward[s])
                .collect();
            let scrutinised: BTreeSet<Name> =
                cases.iter().filter_map(|&s| selector_head(l, s)).collect();
            FoldWitness {
                from: f.from,
                to: f.to,
                sigma: f.sigma.clone(),
                witness_case_states: cases,
                scrutinised: scrutinised.into_iter().collect(),
            }
        })
        .collect();
    Verdict::Terminates(witnesses)
}

fn selector_head(l: &Lts, s: StateId) -> Option<Name> {
    match &l.state(s).expr {
        Some(Expr::Case(sel, _)) => match sel.spine().0 {
            Expr::Var(x) => Some(x.clone()),
            _ => None,
        },
        _ => None,
    }
}

fn reach(adj: &[Vec<StateId>], from: StateId) -> Vec<bool> {
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![from];
    seen[from] = true;
    while let Some(s) = stack.pop() {
        for &t in &adj[s] {
            if !seen[t] {
                seen[t] = true;
                stack.push(t);
            }
        }
    }
    seen
}

/// States of the `alive` subgraph that a topological sort cannot remove.
/// Empty iff that subgraph is acyclic.
fn kahn_leftover(succ: &[Vec<StateId>], alive: &[bool]) -> Vec<StateId> {
    let n = succ.len();
    let mut indeg = vec![0usize; n];
    for s in (0..n).filter(|&s| alive[s]) {
        for &t in &succ[s] {
            if alive[t] {
                indeg[t] += 1;
            }
        }
    }
    let mut queue: VecDeque<StateId> = (0..n).filter(|&s| alive[s] && indeg[s] == 0).collect();
    let mut removed = vec![false; n];
    while let Some(s) = queue.pop_front() {
        removed[s] = true;
        for &t in &succ[s] {
            if alive[t] {
                indeg[t] -= 1;
                if indeg[t] == 0 {
                    queue.push_back(t);
                }
            }
        }
    }
    (0..n).filter(|&s| alive[s] && !removed[s]).collect()
}

/// The shortest cycle through the states in `within`, ties broken by the
/// lowest starting state. Every cycle of the surviving subgraph lies there.
fn shortest_cycle(succ: &[Vec<StateId>], within: &[StateId]) -> Option<Vec<StateId>> {
    let inside: BTreeSet<StateId> = within.iter().copied().collect();
    let mut best: Option<Vec<StateId>> = None;
    for &v in within {
        let mut parent: BTreeMap<StateId, StateId> = BTreeMap::new();
        let mut queue = VecDeque::from([v]);
        let mut found = None;
        'bfs: while let Some(s) = queue.pop_front() {
            for &t in &succ[s] {
                if !inside.contains(&t) {
                    continue;
                }
                if t == v {
                    found = Some(s);
                    break 'bfs;
                }
                if let std::collections::btree_map::Entry::Vacant(e) = parent.entry(t) {
                    e.insert(s);
                    queue.push_back(t);
                }
            }
        }
        let Some(last) = found else { continue };
        let mut path = vec![last];
        while *path.last().unwrap() != v {
            path.push(parent[path.last().unwrap()]);
        }
        path.reverse();
        path.push(v);
        if best.as_ref().is_none_or(|b| path.len() < b.len()) {
            best = Some(path);
        }
    }
    best
}

fn edge_label(l: &Lts, from: StateId, to: StateId) -> String {
    if let Some(t) = l.out_transitions(from).find(|t| t.to == to) {
        return t.action.to_string();
    }
    let f = l
        .out_folds(from)
        .find(|f| f.to == to)
        .expect("cycle edges exist");
    let parts: Vec<String> = f.sigma.iter().map(|(k, v)| format!("{k}↦{v}")).collect();
    format!("fold {{{}}}", parts.join(", "))
}

fn label_cycle(l: &Lts, states: Vec<StateId>) -> Cycle {
    let labels = states
        .windows(2)
        .map(|w| edge_label(l, w[0], w[1]))
        .collect();
    Cycle { states, labels }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictJson {
    pub verdict: String,
    pub folds: Vec<FoldWitness>,
    pub cycle: Vec<StateId>,
    pub cycle_labels: Vec<String>,
    pub violations: Vec<Violation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

pub fn to_json(v: &Verdict) -> VerdictJson {
    let mut j = VerdictJson {
        verdict: v.name().into(),
        folds: Vec::new(),
        cycle: Vec::new(),
        cycle_labels: Vec::new(),
        violations: Vec::new(),
        reason: None,
    };
    match v {
        Verdict::Terminates(ws) => j.folds = ws.clone(),
        Verdict::Unknown(c) => {
            j.cycle = c.states.clone();
            j.cycle_labels = c.labels.clone();
        }
        Verdict::NotApplicable { reason, violations } => {
            j.reason = Some(reason.clone());
            j.violations = violations.clone();
        }
    }
    j
}

fn show(l: Option<&Lts>, s: StateId) -> String {
    match l
        .and_then(|l| l.states.get(s))
        .and_then(|st| st.expr.as_ref())
    {
        Some(e) => format!("s{s} `{e}`"),
        None => format!("s{s}"),
    }
}

/// A human-readable report. `l` supplies the expressions of the states
/// named in the verdict.
pub fn report(v: &Verdict, l: Option<&Lts>) -> String {
    let mut out = String::new();
    match v {
        Verdict::Terminates(ws) => {
            writeln!(out, "terminates").unwrap();
            if ws.is_empty() {
                writeln!(
                    out,
                    "  no fold edges: the transition system is a finite tree"
                )
                .unwrap();
            }
            for w in ws {
                let cases: Vec<String> = w
                    .witness_case_states
                    .iter()
                    .map(|&s| format!("s{s}"))
                    .collect();
                let sigma: Vec<String> = w.sigma.iter().map(|(k, v)| format!("{k}↦{v}")).collect();
                writeln!(
                    out,
                    "  fold {} -> {} {{{}}}\n    guarded by {} (scrutinising {})",
                    show(l, w.from),
                    show(l, w.to),
                    sigma.join(", "),
                    cases.join(", "),
                    w.scrutinised.join(", ")
                )
                .unwrap();
            }
        }
        Verdict::Unknown(c) => {
            writeln!(out, "unknown: a cycle with no case state").unwrap();
            for (s, label) in c.states.iter().zip(&c.labels) {
                writeln!(out, "  {}\n    --{label}-->", show(l, *s)).unwrap();
            }
            writeln!(out, "  {}", show(l, *c.states.last().unwrap())).unwrap();
        }
        Verdict::NotApplicable { reason, violations } => {
            writeln!(out, "not applicable: {reason}").unwrap();
            for viol in violations {
                writeln!(out, "  {viol}").unwrap();
            }
        }
    }
    out
}
