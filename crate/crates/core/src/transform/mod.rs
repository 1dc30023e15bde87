//! A supercompiling distiller.
//!
//! [`distill`] drives the main expression symbolically: it reduces open
//! terms with the call-by-name rules, splits on free variables that case
//! expressions scrutinise (substituting each pattern into its branch), and
//! memoizes every term whose next step unfolds a function. A term that is a
//! renaming of a memoized ancestor becomes a call to a residual function;
//! one that homeomorphically embeds an ancestor is generalized with `let`s.
//! The result is checked for distilled form before it is returned.

mod embed;
mod msg;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::distilled::{check_distilled, Violation};
use crate::syntax::{
    fresh_name, match_renaming, rename, substitute, Defs, Expr, FunDef, Name, Pattern, Program,
    Renaming, Substitution,
};

pub use embed::embeds;
pub use msg::msg;

/// Bounds that keep driving finite.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    /// Nesting depth of unfolded function calls on one path.
    pub depth: usize,
    /// Generalizations performed in total.
    pub gens: usize,
    /// Function-call configurations memoized in total, each a candidate
    /// residual definition.
    pub defs: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            depth: 200,
            gens: 100,
            defs: 2000,
        }
    }
}

impl Limits {
    /// Parses `depth=N,gens=N,defs=N`; omitted keys keep their defaults.
    pub fn parse(s: &str) -> Result<Self, String> {
        let mut l = Limits::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| format!("expected key=value, got `{part}`"))?;
            let n: usize = v
                .trim()
                .parse()
                .map_err(|_| format!("`{v}` is not a number"))?;
            if n == 0 {
                return Err(format!("limit `{k}` must be positive"));
            }
            match k.trim() {
                "depth" => l.depth = n,
                "gens" => l.gens = n,
                "defs" => l.defs = n,
                other => return Err(format!("unknown limit `{other}`")),
            }
        }
        Ok(l)
    }
}

impl fmt::Display for Limits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "depth={},gens={},defs={}",
            self.depth, self.gens, self.defs
        )
    }
}

/// Reduction steps driving may take before giving up.
const MAX_STEPS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DistillError {
    #[error("driving exceeded the {what} limit of {limit}")]
    LimitExceeded { what: &'static str, limit: usize },
    #[error("residual program is not in distilled form: {}", summary(.violations, .reason))]
    NotDistillable {
        reason: Option<String>,
        violations: Vec<Violation>,
        residual: Option<Box<Program>>,
    },
}

fn summary(violations: &[Violation], reason: &Option<String>) -> String {
    match reason {
        Some(r) => r.clone(),
        None => violations
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join("; "),
    }
}

impl DistillError {
    fn stuck(why: String) -> Self {
        DistillError::NotDistillable {
            reason: Some(why),
            violations: Vec::new(),
            residual: None,
        }
    }
}

/// A memoized function-call configuration on the current driving path.
#[derive(Clone, Debug)]
pub struct DriveNode {
    pub expr: Expr,
    /// Placeholder name of the residual function, if one is emitted.
    pub name: Name,
    pub params: Vec<Name>,
    /// The function whose unfolding is next.
    pub focus: Name,
}

/// Stack for the driving thread; driving recurses once per residual node.
const DRIVE_STACK: usize = 512 * 1024 * 1024;

/// Transforms `p` into an equivalent program in distilled form.
pub fn distill(p: &Program, limits: Limits) -> Result<Program, DistillError> {
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .stack_size(DRIVE_STACK)
            .spawn_scoped(s, || distill_here(p, limits))
            .expect("spawn driving thread")
            .join()
            .unwrap_or_else(|e| std::panic::resume_unwind(e))
    })
}

fn distill_here(p: &Program, limits: Limits) -> Result<Program, DistillError> {
    let defs = p.definitions();
    let mut d = Driver {
        defs: &defs,
        limits,
        memo: Vec::new(),
        known: Vec::new(),
        used: BTreeSet::new(),
        residual: BTreeMap::new(),
        order: Vec::new(),
        nodes: 0,
        gens: 0,
        steps: 0,
    };
    let main = d.drive(p.main.clone(), Mode::Fresh)?;
    let mut taken = BTreeSet::new();
    main.all_vars(&mut taken);
    for (params, body) in d.residual.values() {
        taken.extend(params.iter().cloned());
        body.all_vars(&mut taken);
    }
    let mut candidates = (0..)
        .map(|i| format!("f{i}"))
        .filter(|n| !taken.contains(n));
    let names: BTreeMap<Name, Name> = if d.order.len() == 1 && !taken.contains("f") {
        BTreeMap::from([(d.order[0].clone(), "f".to_string())])
    } else {
        d.order
            .iter()
            .map(|n| (n.clone(), candidates.next().expect("unbounded supply")))
            .collect()
    };
    let defs = d
        .order
        .iter()
        .map(|n| {
            let (params, body) = &d.residual[n];
            FunDef::new(names[n].clone(), params.clone(), rename_funs(body, &names))
        })
        .collect();
    let out = Program::new(rename_funs(&main, &names), defs);
    match check_distilled(&out) {
        Ok(()) => Ok(out),
        Err(violations) => Err(DistillError::NotDistillable {
            reason: None,
            violations,
            residual: Some(Box::new(out)),
        }),
    }
}

fn rename_funs(e: &Expr, names: &BTreeMap<Name, Name>) -> Expr {
    match e {
        Expr::Var(_) => e.clone(),
        Expr::Fun(f) => Expr::Fun(names.get(f).cloned().unwrap_or_else(|| f.clone())),
        Expr::Con(c, args) => Expr::Con(
            c.clone(),
            args.iter().map(|a| rename_funs(a, names)).collect(),
        ),
        Expr::Lam(x, b) => Expr::lam(x.clone(), rename_funs(b, names)),
        Expr::App(f, a) => Expr::app(rename_funs(f, names), rename_funs(a, names)),
        Expr::Case(s, bs) => Expr::case(
            rename_funs(s, names),
            bs.iter()
                .map(|(p, b)| (p.clone(), rename_funs(b, names)))
                .collect(),
        ),
        Expr::Let(x, e0, e1) => {
            Expr::let_(x.clone(), rename_funs(e0, names), rename_funs(e1, names))
        }
    }
}

/// Free variables in order of first occurrence.
fn ordered_free_vars(e: &Expr) -> Vec<Name> {
    fn go(e: &Expr, bound: &mut Vec<Name>, out: &mut Vec<Name>) {
        match e {
            Expr::Var(x) => {
                if !bound.contains(x) && !out.contains(x) {
                    out.push(x.clone());
                }
            }
            Expr::Fun(_) => {}
            Expr::Con(_, args) => args.iter().for_each(|a| go(a, bound, out)),
            Expr::Lam(x, b) => {
                bound.push(x.clone());
                go(b, bound, out);
                bound.pop();
            }
            Expr::App(f, a) => {
                go(f, bound, out);
                go(a, bound, out);
            }
            Expr::Case(s, bs) => {
                go(s, bound, out);
                for (p, b) in bs {
                    let n = bound.len();
                    bound.extend(p.vars.iter().cloned());
                    go(b, bound, out);
                    bound.truncate(n);
                }
            }
            Expr::Let(x, e0, e1) => {
                go(e0, bound, out);
                bound.push(x.clone());
                go(e1, bound, out);
                bound.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(e, &mut Vec::new(), &mut out);
    out
}

enum Frame {
    Arg(Expr),
    Case(Vec<(Pattern, Expr)>),
}

fn plug(mut e: Expr, frames: Vec<Frame>) -> Expr {
    for f in frames.into_iter().rev() {
        e = match f {
            Frame::Arg(a) => Expr::app(e, a),
            Frame::Case(bs) => Expr::case(e, bs),
        };
    }
    e
}

/// How a function-call configuration reached [`Driver::drive_call`].
#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    Fresh,
    /// Positive information was folded back into variables after the
    /// whistle blew; blowing again generalizes.
    Recalled,
    /// Produced by generalization; unfolds without consulting the whistle.
    Generalized,
}

struct Driver<'a> {
    defs: &'a Defs,
    limits: Limits,
    memo: Vec<DriveNode>,
    /// Variables split on along the current path, with the pattern each
    /// stands for in this branch.
    known: Vec<(Name, Expr)>,
    used: BTreeSet<Name>,
    residual: BTreeMap<Name, (Vec<Name>, Expr)>,
    order: Vec<Name>,
    nodes: usize,
    gens: usize,
    steps: usize,
}

impl Driver<'_> {
    fn tick(&mut self) -> Result<(), DistillError> {
        self.steps += 1;
        if self.steps > MAX_STEPS {
            return Err(DistillError::LimitExceeded {
                what: "reduction step",
                limit: MAX_STEPS,
            });
        }
        Ok(())
    }

    fn known_names(&self) -> BTreeSet<Name> {
        let mut names = BTreeSet::new();
        for (x, p) in &self.known {
            names.insert(x.clone());
            p.all_vars(&mut names);
        }
        names
    }

    /// Replaces subterms that positive information introduced by the
    /// variables they were split from.
    fn recall(&self, e: &Expr) -> Expr {
        fn go(e: &Expr, known: &[(Name, Expr)], bound: &mut Vec<Name>) -> Expr {
            let out = match e {
                Expr::Var(_) | Expr::Fun(_) => e.clone(),
                Expr::Con(c, args) => Expr::Con(
                    c.clone(),
                    args.iter().map(|a| go(a, known, bound)).collect(),
                ),
                Expr::App(f, a) => Expr::app(go(f, known, bound), go(a, known, bound)),
                Expr::Lam(x, b) => {
                    bound.push(x.clone());
                    let b = go(b, known, bound);
                    bound.pop();
                    Expr::lam(x.clone(), b)
                }
                Expr::Case(s, bs) => {
                    let s = go(s, known, bound);
                    let bs = bs
                        .iter()
                        .map(|(p, b)| {
                            let n = bound.len();
                            bound.extend(p.vars.iter().cloned());
                            let b = go(b, known, bound);
                            bound.truncate(n);
                            (p.clone(), b)
                        })
                        .collect();
                    Expr::case(s, bs)
                }
                Expr::Let(x, e0, e1) => {
                    let e0 = go(e0, known, bound);
                    bound.push(x.clone());
                    let e1 = go(e1, known, bound);
                    bound.pop();
                    Expr::let_(x.clone(), e0, e1)
                }
            };
            if !matches!(out, Expr::Con(..)) {
                return out;
            }
            for (x, p) in known.iter().rev() {
                if &out == p
                    && !bound.contains(x)
                    && !crate::syntax::free_vars(p)
                        .iter()
                        .any(|v| bound.contains(v))
                {
                    return Expr::Var(x.clone());
                }
            }
            out
        }
        go(e, &self.known, &mut Vec::new())
    }

    /// Drives `e` to a residual expression.
    fn drive(&mut self, e: Expr, mode: Mode) -> Result<Expr, DistillError> {
        let mut frames: Vec<Frame> = Vec::new();
        let mut cur = e;
        loop {
            match cur {
                Expr::App(f, a) => {
                    frames.push(Frame::Arg(*a));
                    cur = *f;
                }
                Expr::Case(s, bs) => {
                    frames.push(Frame::Case(bs));
                    cur = *s;
                }
                Expr::Let(x, e0, e1) => {
                    self.tick()?;
                    cur = substitute(&e1, &Substitution::from([(x, *e0)]));
                }
                Expr::Lam(x, b) => match frames.pop() {
                    None => {
                        let names = self.known_names();
                        if names.contains(&x) {
                            let mut avoid = names;
                            b.all_vars(&mut avoid);
                            let y = fresh_name(&x, &avoid);
                            let b = rename(&b, &Renaming::from([(x, y.clone())]));
                            return Ok(Expr::lam(y, self.drive(b, Mode::Fresh)?));
                        }
                        return Ok(Expr::lam(x, self.drive(*b, Mode::Fresh)?));
                    }
                    Some(Frame::Arg(a)) => {
                        self.tick()?;
                        cur = substitute(&b, &Substitution::from([(x, a)]));
                    }
                    Some(Frame::Case(_)) => {
                        return Err(DistillError::stuck(
                            "case selector is a λ-abstraction".into(),
                        ))
                    }
                },
                Expr::Con(c, args) => match frames.pop() {
                    None => {
                        let args = args
                            .into_iter()
                            .map(|a| self.drive(a, Mode::Fresh))
                            .collect::<Result<_, _>>()?;
                        return Ok(Expr::Con(c, args));
                    }
                    Some(Frame::Case(bs)) => {
                        self.tick()?;
                        let Some((p, body)) = bs
                            .into_iter()
                            .find(|(p, _)| p.con == c && p.vars.len() == args.len())
                        else {
                            return Err(DistillError::stuck(format!(
                                "no branch matches constructor `{c}`"
                            )));
                        };
                        let theta: Substitution = p.vars.into_iter().zip(args).collect();
                        cur = substitute(&body, &theta);
                    }
                    Some(Frame::Arg(_)) => {
                        return Err(DistillError::stuck(format!(
                            "constructor `{c}` applied as a function"
                        )))
                    }
                },
                Expr::Var(x) => return self.drive_var(x, frames),
                Expr::Fun(f) => return self.drive_call(f, frames, mode),
            }
        }
    }

    /// A free variable in head position: residualize the application and,
    /// if a case scrutinises it, split on the patterns.
    fn drive_var(&mut self, x: Name, mut frames: Vec<Frame>) -> Result<Expr, DistillError> {
        let mut args = Vec::new();
        while let Some(Frame::Arg(_)) = frames.last() {
            let Some(Frame::Arg(a)) = frames.pop() else {
                unreachable!()
            };
            args.push(a);
        }
        let Some(Frame::Case(bs)) = frames.pop() else {
            let args = args
                .into_iter()
                .map(|a| self.drive(a, Mode::Fresh))
                .collect::<Result<Vec<_>, _>>()?;
            return Ok(Expr::apps(Expr::Var(x), args));
        };
        let mut avoid = self.known_names();
        avoid.insert(x.clone());
        for a in &args {
            a.all_vars(&mut avoid);
        }
        for (_, b) in &bs {
            b.all_vars(&mut avoid);
        }
        for f in &frames {
            match f {
                Frame::Arg(a) => a.all_vars(&mut avoid),
                Frame::Case(bs) => bs.iter().for_each(|(_, b)| b.all_vars(&mut avoid)),
            }
        }
        let positive = args.is_empty();
        let sel = Expr::apps(
            Expr::Var(x.clone()),
            args.into_iter()
                .map(|a| self.drive(a, Mode::Fresh))
                .collect::<Result<Vec<_>, _>>()?,
        );
        let mut branches = Vec::with_capacity(bs.len());
        let rest = frames;
        for (p, b) in bs {
            let mut sigma = Renaming::new();
            let mut vars = Vec::with_capacity(p.vars.len());
            for v in &p.vars {
                let fresh = if avoid.contains(v) {
                    fresh_name(v, &avoid)
                } else {
                    v.clone()
                };
                avoid.insert(fresh.clone());
                if &fresh != v {
                    sigma.insert(v.clone(), fresh.clone());
                }
                vars.push(fresh);
            }
            let p = Pattern::new(p.con, vars);
            let b = if sigma.is_empty() {
                b
            } else {
                rename(&b, &sigma)
            };
            let mut term = plug(b, clone_frames(&rest));
            let driven = if positive {
                term = substitute(&term, &Substitution::from([(x.clone(), p.to_expr())]));
                self.known.push((x.clone(), p.to_expr()));
                let driven = self.drive(term, Mode::Fresh);
                self.known.pop();
                driven?
            } else {
                self.drive(term, Mode::Fresh)?
            };
            branches.push((p, driven));
        }
        Ok(Expr::case(sel, branches))
    }

    fn drive_call(
        &mut self,
        f: Name,
        frames: Vec<Frame>,
        mode: Mode,
    ) -> Result<Expr, DistillError> {
        let Some(def) = self.defs.get(&f) else {
            return Err(DistillError::stuck(format!(
                "call to undefined function `{f}`"
            )));
        };
        let lam = def.as_lambda();
        let e = plug(Expr::Fun(f.clone()), frames);
        for node in self.memo.iter().rev() {
            if let Some(sigma) = match_renaming(&e, &node.expr) {
                let name = node.name.clone();
                let args: Vec<Expr> = node
                    .params
                    .iter()
                    .map(|p| Expr::Var(sigma[p].clone()))
                    .collect();
                self.used.insert(name.clone());
                return Ok(Expr::apps(Expr::Fun(name), args));
            }
        }
        if mode != Mode::Generalized {
            let ancestor = self
                .memo
                .iter()
                .rev()
                .find(|n| n.focus == f && embeds(&n.expr, &e))
                .map(|n| n.expr.clone());
            if let Some(anc) = ancestor {
                if mode == Mode::Fresh {
                    let recalled = self.recall(&e);
                    if recalled != e {
                        return self.drive(recalled, Mode::Recalled);
                    }
                }
                let (g, _, theta) = msg::msg_avoiding(&anc, &e, self.known_names());
                if !matches!(g, Expr::Var(_)) && !theta.is_empty() {
                    return self.generalize(g, theta);
                }
            }
        }
        if self.memo.len() >= self.limits.depth {
            return Err(DistillError::LimitExceeded {
                what: "depth",
                limit: self.limits.depth,
            });
        }
        self.nodes += 1;
        if self.nodes > self.limits.defs {
            return Err(DistillError::LimitExceeded {
                what: "defs",
                limit: self.limits.defs,
            });
        }
        let name = format!("#{}", self.nodes);
        let params = ordered_free_vars(&e);
        self.memo.push(DriveNode {
            expr: e.clone(),
            name: name.clone(),
            params: params.clone(),
            focus: f,
        });
        self.tick()?;
        let (_, frames) = unplug_head(e);
        let body = self.drive(plug(lam, frames), Mode::Fresh);
        self.memo.pop();
        let body = body?;
        if self.used.contains(&name) {
            self.order.push(name.clone());
            self.residual.insert(name.clone(), (params.clone(), body));
            Ok(Expr::apps(
                Expr::Fun(name),
                params.into_iter().map(Expr::Var),
            ))
        } else {
            Ok(body)
        }
    }

    /// Drives `let v = θ(v) in ... g`. Variables in the range of θ are
    /// substituted directly instead of being bound.
    fn generalize(&mut self, g: Expr, theta: Substitution) -> Result<Expr, DistillError> {
        self.gens += 1;
        if self.gens > self.limits.gens {
            return Err(DistillError::LimitExceeded {
                what: "gens",
                limit: self.limits.gens,
            });
        }
        let (renames, lets): (Substitution, Substitution) = theta
            .into_iter()
            .partition(|(_, e)| matches!(e, Expr::Var(_)));
        let g = substitute(&g, &renames);
        let mut bound = Vec::with_capacity(lets.len());
        for (v, e) in lets {
            bound.push((v, self.drive(e, Mode::Fresh)?));
        }
        let body = self.drive(g, Mode::Generalized)?;
        Ok(bound
            .into_iter()
            .rev()
            .fold(body, |b, (v, e)| Expr::let_(v, e, b)))
    }
}

/// Splits a term built by [`plug`] around its head back into frames.
fn unplug_head(e: Expr) -> (Expr, Vec<Frame>) {
    let mut frames = Vec::new();
    let mut cur = e;
    loop {
        match cur {
            Expr::App(f, a) => {
                frames.push(Frame::Arg(*a));
                cur = *f;
            }
            Expr::Case(s, bs) => {
                frames.push(Frame::Case(bs));
                cur = *s;
            }
            other => return (other, frames),
        }
    }
}

fn clone_frames(frames: &[Frame]) -> Vec<Frame> {
    frames
        .iter()
        .map(|f| match f {
            Frame::Arg(a) => Frame::Arg(a.clone()),
            Frame::Case(bs) => Frame::Case(bs.clone()),
        })
        .collect()
}
