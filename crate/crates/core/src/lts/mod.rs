//! Folded labelled transition systems.
//!
//! [`build_lts`] unfolds a program whose call arguments are all variables
//! into a finite tree of states with syntax-directed transitions. A call
//! that is a renaming of a call on the current path gets a fold edge back to
//! that ancestor instead of being unfolded again.

mod export;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::syntax::{
    alpha_eq, match_renaming, rename, substitute, Defs, Expr, Name, Pattern, Program, Renaming,
    Substitution,
};

pub use export::{to_dot, to_json, LtsJson};

pub type StateId = usize;

/// The terminal state **0** every variable and constructor action leads to.
pub const TERMINAL: StateId = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateKind {
    Terminal,
    Var,
    Con,
    Lambda,
    Call,
    App,
    Case,
    Let,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum Action {
    Var(Name),
    Con(Name),
    Lambda(Name),
    Unfold(Name),
    AppFun,
    Arg(usize),
    Case,
    Pattern(Pattern),
    LetBind(Name),
    LetBody,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Var(x) | Action::Con(x) | Action::Unfold(x) => f.write_str(x),
            Action::Lambda(x) => write!(f, "λ{x}"),
            Action::AppFun => f.write_str("@"),
            Action::Arg(i) => write!(f, "#{i}"),
            Action::Case => f.write_str("case"),
            Action::Pattern(p) => write!(f, "{p}"),
            Action::LetBind(x) => write!(f, "let {x}"),
            Action::LetBody => f.write_str("in"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct State {
    pub id: StateId,
    pub kind: StateKind,
    /// `None` only for the terminal state.
    pub expr: Option<Expr>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub from: StateId,
    pub action: Action,
    pub to: StateId,
}

/// A renaming edge `from --σ--> to` with `expr(from) ≡ expr(to) σ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fold {
    pub from: StateId,
    pub sigma: Renaming,
    pub to: StateId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lts {
    pub states: Vec<State>,
    pub start: StateId,
    pub transitions: Vec<Transition>,
    pub folds: Vec<Fold>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LtsError {
    #[error("call to undefined function `{0}`")]
    UndefinedFunction(Name),
    #[error("argument `{arg}` in call `{call}` is not a variable; extract it with a let first")]
    NonVariableArgument { call: String, arg: String },
    #[error("transition system exceeds {0} states")]
    TooLarge(usize),
}

impl Lts {
    pub fn state(&self, id: StateId) -> &State {
        &self.states[id]
    }

    pub fn out_transitions(&self, id: StateId) -> impl Iterator<Item = &Transition> {
        self.transitions.iter().filter(move |t| t.from == id)
    }

    pub fn out_folds(&self, id: StateId) -> impl Iterator<Item = &Fold> {
        self.folds.iter().filter(move |f| f.from == id)
    }

    /// Successor lists over transitions and fold edges together.
    pub fn successors(&self) -> Vec<Vec<StateId>> {
        let mut succ = vec![Vec::new(); self.states.len()];
        for t in &self.transitions {
            succ[t.from].push(t.to);
        }
        for f in &self.folds {
            succ[f.from].push(f.to);
        }
        succ
    }

    pub fn is_case(&self, id: StateId) -> bool {
        self.states[id].kind == StateKind::Case
    }

    /// States on the transition path from the start to `id`, inclusive.
    pub fn ancestors(&self, id: StateId) -> Vec<StateId> {
        let mut parent = vec![None; self.states.len()];
        for t in &self.transitions {
            if t.to != TERMINAL {
                parent[t.to] = Some(t.from);
            }
        }
        let mut path = vec![id];
        let mut cur = id;
        while let Some(p) = parent[cur] {
            path.push(p);
            cur = p;
        }
        path.reverse();
        path
    }
}

/// Default bound on the number of states.
pub const DEFAULT_MAX_STATES: usize = 100_000;

pub fn build_lts(p: &Program) -> Result<Lts, LtsError> {
    build_lts_bounded(p, DEFAULT_MAX_STATES)
}

pub fn build_lts_bounded(p: &Program, max_states: usize) -> Result<Lts, LtsError> {
    let defs = p.definitions();
    let mut b = Builder {
        defs: &defs,
        lts: Lts {
            states: vec![State {
                id: TERMINAL,
                kind: StateKind::Terminal,
                expr: None,
            }],
            start: 1,
            transitions: Vec::new(),
            folds: Vec::new(),
        },
        memo: Vec::new(),
        max_states,
    };
    b.lts.start = b.expr(&p.main)?;
    Ok(b.lts)
}

struct Builder<'a> {
    defs: &'a Defs,
    lts: Lts,
    /// Calls unfolded on the path to the current state (ρ).
    memo: Vec<(Expr, StateId)>,
    max_states: usize,
}

impl Builder<'_> {
    fn state(&mut self, kind: StateKind, e: &Expr) -> Result<StateId, LtsError> {
        if self.lts.states.len() >= self.max_states {
            return Err(LtsError::TooLarge(self.max_states));
        }
        let id = self.lts.states.len();
        self.lts.states.push(State {
            id,
            kind,
            expr: Some(e.clone()),
        });
        Ok(id)
    }

    fn edge(&mut self, from: StateId, action: Action, to: StateId) {
        self.lts.transitions.push(Transition { from, action, to });
    }

    fn expr(&mut self, e: &Expr) -> Result<StateId, LtsError> {
        match e {
            Expr::Var(x) => {
                let s = self.state(StateKind::Var, e)?;
                self.edge(s, Action::Var(x.clone()), TERMINAL);
                Ok(s)
            }
            Expr::Con(c, args) => {
                let s = self.state(StateKind::Con, e)?;
                self.edge(s, Action::Con(c.clone()), TERMINAL);
                for (i, a) in args.iter().enumerate() {
                    let t = self.expr(a)?;
                    self.edge(s, Action::Arg(i + 1), t);
                }
                Ok(s)
            }
            Expr::Lam(x, b) => {
                let s = self.state(StateKind::Lambda, e)?;
                let t = self.expr(b)?;
                self.edge(s, Action::Lambda(x.clone()), t);
                Ok(s)
            }
            Expr::Case(sel, bs) => {
                let s = self.state(StateKind::Case, e)?;
                let t = self.expr(sel)?;
                self.edge(s, Action::Case, t);
                for (p, b) in bs {
                    let t = self.expr(b)?;
                    self.edge(s, Action::Pattern(p.clone()), t);
                }
                Ok(s)
            }
            Expr::Let(x, e0, e1) => {
                let s = self.state(StateKind::Let, e)?;
                let t = self.expr(e0)?;
                self.edge(s, Action::LetBind(x.clone()), t);
                let t = self.expr(e1)?;
                self.edge(s, Action::LetBody, t);
                Ok(s)
            }
            Expr::Fun(_) | Expr::App(..) => {
                let (head, args) = e.spine();
                if let Expr::Fun(f) = head {
                    let def = self
                        .defs
                        .get(f)
                        .ok_or_else(|| LtsError::UndefinedFunction(f.clone()))?;
                    if args.len() <= def.params.len() {
                        return self.call(e, f, &args);
                    }
                }
                let Expr::App(f, a) = e else {
                    unreachable!("a bare function is always a call")
                };
                let s = self.state(StateKind::App, e)?;
                let t = self.expr(f)?;
                self.edge(s, Action::AppFun, t);
                let t = self.expr(a)?;
                self.edge(s, Action::Arg(1), t);
                Ok(s)
            }
        }
    }

    fn call(&mut self, e: &Expr, f: &Name, args: &[&Expr]) -> Result<StateId, LtsError> {
        let mut vars = Vec::with_capacity(args.len());
        for a in args {
            match a {
                Expr::Var(x) => vars.push(x.clone()),
                other => {
                    return Err(LtsError::NonVariableArgument {
                        call: e.to_string(),
                        arg: other.to_string(),
                    })
                }
            }
        }
        let s = self.state(StateKind::Call, e)?;
        let fold = self
            .memo
            .iter()
            .rev()
            .find_map(|(memo, id)| match_renaming(e, memo).map(|sigma| (sigma, *id)));
        if let Some((sigma, to)) = fold {
            self.lts.folds.push(Fold { from: s, sigma, to });
            return Ok(s);
        }
        let def = self.defs.get(f).expect("checked by caller");
        let rest = &def.params[vars.len()..];
        let lam = rest
            .iter()
            .rev()
            .fold(def.body.clone(), |b, x| Expr::lam(x.clone(), b));
        let theta: Substitution = def
            .params
            .iter()
            .cloned()
            .zip(vars.into_iter().map(Expr::Var))
            .collect();
        let body = substitute(&lam, &theta);
        self.memo.push((e.clone(), s));
        let t = self.expr(&body);
        self.memo.pop();
        let t = t?;
        self.edge(s, Action::Unfold(f.clone()), t);
        Ok(s)
    }
}

/// Checks every fold edge: its target is an ancestor call of its source
/// and `expr(from) ≡ expr(to) σ`.
pub fn check_folds(lts: &Lts) -> Result<(), String> {
    for fold in &lts.folds {
        let (Some(from), Some(to)) = (&lts.state(fold.from).expr, &lts.state(fold.to).expr) else {
            return Err(format!(
                "fold {} -> {} touches the terminal state",
                fold.from, fold.to
            ));
        };
        if lts.state(fold.to).kind != StateKind::Call {
            return Err(format!("fold target {} is not a call", fold.to));
        }
        if !lts.ancestors(fold.from).contains(&fold.to) {
            return Err(format!(
                "fold target {} is not an ancestor of {}",
                fold.to, fold.from
            ));
        }
        let domain: BTreeSet<&Name> = fold.sigma.keys().collect();
        let fv = crate::syntax::free_vars(to);
        if domain != fv.iter().collect() {
            return Err(format!(
                "σ of fold {} -> {} does not cover the target's free variables",
                fold.from, fold.to
            ));
        }
        if !alpha_eq(from, &rename(to, &fold.sigma)) {
            return Err(format!(
                "fold {} -> {}: `{from}` is not `{to}` renamed",
                fold.from, fold.to
            ));
        }
    }
    Ok(())
}

/// Checks that every state's outgoing edges are exactly those its
/// expression form produces.
pub fn check_shape(lts: &Lts) -> Result<(), String> {
    for s in &lts.states {
        let out: Vec<&Action> = lts.out_transitions(s.id).map(|t| &t.action).collect();
        let folds = lts.out_folds(s.id).count();
        let to_terminal = |a: &Action| {
            lts.out_transitions(s.id)
                .any(|t| &t.action == a && t.to == TERMINAL)
        };
        let ok = match (&s.kind, &s.expr) {
            (StateKind::Terminal, None) => out.is_empty() && folds == 0,
            (StateKind::Var, Some(Expr::Var(x))) => {
                out == [&Action::Var(x.clone())]
                    && to_terminal(&Action::Var(x.clone()))
                    && folds == 0
            }
            (StateKind::Con, Some(Expr::Con(c, args))) => {
                let mut want = vec![Action::Con(c.clone())];
                want.extend((1..=args.len()).map(Action::Arg));
                out.iter().copied().eq(want.iter())
                    && to_terminal(&Action::Con(c.clone()))
                    && folds == 0
            }
            (StateKind::Lambda, Some(Expr::Lam(x, _))) => {
                out == [&Action::Lambda(x.clone())] && folds == 0
            }
            (StateKind::App, Some(Expr::App(..))) => {
                out == [&Action::AppFun, &Action::Arg(1)] && folds == 0
            }
            (StateKind::Case, Some(Expr::Case(_, bs))) => {
                let mut want = vec![Action::Case];
                want.extend(bs.iter().map(|(p, _)| Action::Pattern(p.clone())));
                out.iter().copied().eq(want.iter()) && folds == 0
            }
            (StateKind::Let, Some(Expr::Let(x, ..))) => {
                out == [&Action::LetBind(x.clone()), &Action::LetBody] && folds == 0
            }
            (StateKind::Call, Some(e)) => match e.spine().0 {
                Expr::Fun(f) => {
                    (out.is_empty() && folds == 1)
                        || (out == [&Action::Unfold(f.clone())] && folds == 0)
                }
                _ => false,
            },
            _ => false,
        };
        if !ok {
            return Err(format!(
                "state {} ({:?}) has out-edges {:?} and {} fold(s)",
                s.id, s.kind, out, folds
            ));
        }
    }
    Ok(())
}

/// One state of a [`canonical_form`]: its kind, its labelled transitions and
/// its fold targets, by canonical number.
pub type CanonicalState = (StateKind, Vec<(String, usize)>, Vec<usize>);

/// A structural fingerprint: states numbered in depth-first order from the
/// start, each with its kind, action labels and fold targets. Equal
/// fingerprints mean isomorphic systems.
pub fn canonical_form(lts: &Lts) -> Vec<CanonicalState> {
    let mut order = vec![usize::MAX; lts.states.len()];
    let mut seq = Vec::new();
    let mut stack = vec![lts.start];
    order[TERMINAL] = 0;
    seq.push(TERMINAL);
    while let Some(s) = stack.pop() {
        if order[s] != usize::MAX {
            continue;
        }
        order[s] = seq.len();
        seq.push(s);
        let kids: Vec<StateId> = lts.out_transitions(s).map(|t| t.to).collect();
        stack.extend(kids.into_iter().rev());
    }
    seq.iter()
        .map(|&s| {
            let edges = lts
                .out_transitions(s)
                .map(|t| (t.action.to_string(), order[t.to]))
                .collect();
            let folds = lts.out_folds(s).map(|f| order[f.to]).collect();
            (lts.state(s).kind, edges, folds)
        })
        .collect()
}
