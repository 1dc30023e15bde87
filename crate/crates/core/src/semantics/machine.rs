//! Environment machine for call-by-name evaluation.
//!
//! Each β, unfold, constructor-elimination and `let` transition costs one
//! unit of fuel, exactly like the one-step reduction relation; variable
//! lookup and pushing evaluation frames are free. Unlike the substitution
//! stepper the cost of a step does not grow with the size of the term.

use std::collections::{BTreeMap, VecDeque};
use std::rc::Rc;

use super::Outcome;
use crate::syntax::{substitute, Defs, Expr, Name, Pattern, Substitution};

#[derive(Clone)]
struct Closure<'a> {
    expr: &'a Expr,
    env: Env<'a>,
}

type Env<'a> = Option<Rc<Binding<'a>>>;

struct Binding<'a> {
    name: &'a str,
    value: Closure<'a>,
    next: Env<'a>,
}

// Environments of diverging runs nest deeply through both the chain and
// the bound thunks, so they are torn down with an explicit worklist.
impl Drop for Binding<'_> {
    fn drop(&mut self) {
        let mut pending: Vec<Rc<Binding<'_>>> = Vec::new();
        pending.extend(self.next.take());
        pending.extend(self.value.env.take());
        while let Some(rc) = pending.pop() {
            if let Ok(mut b) = Rc::try_unwrap(rc) {
                pending.extend(b.next.take());
                pending.extend(b.value.env.take());
            }
        }
    }
}

fn bind<'a>(env: &Env<'a>, name: &'a str, value: Closure<'a>) -> Env<'a> {
    Some(Rc::new(Binding {
        name,
        value,
        next: env.clone(),
    }))
}

fn lookup<'a>(env: &Env<'a>, x: &str) -> Option<Closure<'a>> {
    let mut cur = env.as_ref();
    while let Some(b) = cur {
        if b.name == x {
            return Some(b.value.clone());
        }
        cur = b.next.as_ref();
    }
    None
}

/// The closure for `expr` under `env`. A variable is resolved to the thunk
/// it names, so passing a variable along does not add a level of
/// indirection.
fn thunk<'a>(expr: &'a Expr, env: &Env<'a>) -> Closure<'a> {
    if let Expr::Var(x) = expr {
        if let Some(c) = lookup(env, x) {
            return c;
        }
    }
    Closure {
        expr,
        env: env.clone(),
    }
}

enum Frame<'a> {
    Arg(Closure<'a>),
    Case(&'a [(Pattern, Expr)], Env<'a>),
}

enum Whnf<'a> {
    Con(&'a Name, Vec<Closure<'a>>),
    Lam(Closure<'a>),
}

pub(super) struct Machine {
    lambdas: BTreeMap<Name, Expr>,
}

impl Machine {
    pub(super) fn new(defs: &Defs) -> Self {
        Machine {
            lambdas: defs
                .iter()
                .map(|d| (d.name.clone(), d.as_lambda()))
                .collect(),
        }
    }

    fn whnf<'a>(&'a self, start: Closure<'a>, fuel: &mut u64) -> Result<Whnf<'a>, Outcome> {
        let mut cur = start;
        let mut stack: Vec<Frame<'a>> = Vec::new();
        macro_rules! spend {
            () => {
                if *fuel == 0 {
                    return Err(Outcome::OutOfFuel);
                }
                *fuel -= 1;
            };
        }
        loop {
            match cur.expr {
                Expr::Var(x) => match lookup(&cur.env, x) {
                    Some(c) => cur = c,
                    None => {
                        return Err(Outcome::Stuck(format!(
                            "free variable `{x}` in head position"
                        )))
                    }
                },
                Expr::Fun(f) => {
                    let Some(lam) = self.lambdas.get(f) else {
                        return Err(Outcome::Stuck(format!("undefined function `{f}`")));
                    };
                    spend!();
                    cur = Closure {
                        expr: lam,
                        env: None,
                    };
                }
                Expr::App(f, a) => {
                    stack.push(Frame::Arg(thunk(a, &cur.env)));
                    cur = Closure {
                        expr: f,
                        env: cur.env,
                    };
                }
                Expr::Case(s, bs) => {
                    stack.push(Frame::Case(bs, cur.env.clone()));
                    cur = Closure {
                        expr: s,
                        env: cur.env,
                    };
                }
                Expr::Let(x, e0, e1) => {
                    spend!();
                    let bound = thunk(e0, &cur.env);
                    cur = Closure {
                        expr: e1,
                        env: bind(&cur.env, x, bound),
                    };
                }
                Expr::Lam(x, body) => match stack.pop() {
                    None => return Ok(Whnf::Lam(cur)),
                    Some(Frame::Arg(arg)) => {
                        spend!();
                        cur = Closure {
                            expr: body,
                            env: bind(&cur.env, x, arg),
                        };
                    }
                    Some(Frame::Case(..)) => {
                        return Err(Outcome::Stuck("case selector is a λ-abstraction".into()))
                    }
                },
                Expr::Con(c, args) => match stack.pop() {
                    None => {
                        let args = args
                            .iter()
                            .map(|a| Closure {
                                expr: a,
                                env: cur.env.clone(),
                            })
                            .collect();
                        return Ok(Whnf::Con(c, args));
                    }
                    Some(Frame::Case(bs, env)) => {
                        let Some((p, body)) = bs
                            .iter()
                            .find(|(p, _)| p.con == *c && p.vars.len() == args.len())
                        else {
                            return Err(Outcome::Stuck(format!(
                                "no branch matches constructor `{c}`"
                            )));
                        };
                        spend!();
                        let mut env = env;
                        for (v, a) in p.vars.iter().zip(args) {
                            env = bind(&env, v, thunk(a, &cur.env));
                        }
                        cur = Closure { expr: body, env };
                    }
                    Some(Frame::Arg(_)) => {
                        return Err(Outcome::Stuck(format!(
                            "constructor `{c}` applied as a function"
                        )))
                    }
                },
            }
        }
    }

    pub(super) fn evaluate(&self, e: &Expr, fuel: u64) -> Outcome {
        let mut fuel = fuel;
        match self.whnf(Closure { expr: e, env: None }, &mut fuel) {
            Ok(Whnf::Con(c, args)) => {
                Outcome::Value(Expr::Con(c.clone(), args.iter().map(readback).collect()))
            }
            Ok(Whnf::Lam(c)) => Outcome::Value(readback(&c)),
            Err(o) => o,
        }
    }

    pub(super) fn evaluate_deep(&self, e: &Expr, fuel: u64) -> Outcome {
        enum Slot {
            Pending,
            Con(Name, Vec<usize>),
            Done(Expr),
        }
        let mut fuel = fuel;
        let mut slots = vec![Slot::Pending];
        let mut queue = VecDeque::from([(0usize, Closure { expr: e, env: None })]);
        while let Some((id, c)) = queue.pop_front() {
            match self.whnf(c, &mut fuel) {
                Ok(Whnf::Con(c, args)) => {
                    let mut ids = Vec::with_capacity(args.len());
                    for a in args {
                        ids.push(slots.len());
                        queue.push_back((slots.len(), a));
                        slots.push(Slot::Pending);
                    }
                    slots[id] = Slot::Con(c.clone(), ids);
                }
                Ok(Whnf::Lam(c)) => slots[id] = Slot::Done(readback(&c)),
                Err(o) => return o,
            }
        }
        fn build(slots: &mut [Slot], id: usize) -> Expr {
            match std::mem::replace(&mut slots[id], Slot::Pending) {
                Slot::Con(c, ids) => {
                    Expr::Con(c, ids.into_iter().map(|i| build(slots, i)).collect())
                }
                Slot::Done(e) => e,
                Slot::Pending => unreachable!("every queued slot is evaluated"),
            }
        }
        Outcome::Value(build(&mut slots, 0))
    }
}

/// The closure as a term: its environment substituted in.
fn readback(c: &Closure<'_>) -> Expr {
    let fv = crate::syntax::free_vars(c.expr);
    let theta: Substitution = fv
        .into_iter()
        .filter_map(|x| lookup(&c.env, &x).map(|v| (x, readback(&v))))
        .collect();
    substitute(c.expr, &theta)
}
