//! Call-by-name one-step reduction and fueled evaluation.

mod equiv;
mod machine;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::syntax::{substitute, Defs, Expr, Name, Substitution};

use machine::Machine;

pub use equiv::{
    equiv_on_inputs, equiv_sample, infer_input_families, Disagreement, EquivError, EquivReport,
    InputGenerator,
};

/// What a single reduction step did.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReductionLabel {
    Unfold(Name),
    ConElim(Name),
    Beta,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", content = "detail", rename_all = "kebab-case")]
pub enum Outcome {
    Value(Expr),
    OutOfFuel,
    Stuck(String),
}

impl Outcome {
    pub fn value(&self) -> Option<&Expr> {
        match self {
            Outcome::Value(v) => Some(v),
            _ => None,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Value(v) => write!(f, "{v}"),
            Outcome::OutOfFuel => f.write_str("<out of fuel>"),
            Outcome::Stuck(why) => write!(f, "<stuck: {why}>"),
        }
    }
}

/// One reduction step. `None` when `e` is in weak head normal form or no
/// rule applies (a free variable or an unmatched constructor in head
/// position).
pub fn step(e: &Expr, defs: &Defs) -> Option<(Expr, ReductionLabel)> {
    let mut e = e.clone();
    step_in_place(&mut e, defs).map(|r| (e, r))
}

fn take(e: &mut Expr) -> Expr {
    std::mem::replace(e, Expr::Var(String::new()))
}

fn step_in_place(e: &mut Expr, defs: &Defs) -> Option<ReductionLabel> {
    match e {
        Expr::App(f, a) => {
            if let Expr::Lam(x, body) = f.as_mut() {
                let theta = Substitution::from([(x.clone(), take(a))]);
                *e = substitute(body, &theta);
                Some(ReductionLabel::Beta)
            } else {
                step_in_place(f, defs)
            }
        }
        Expr::Fun(name) => {
            let def = defs.get(name)?;
            let label = ReductionLabel::Unfold(name.clone());
            *e = def.as_lambda();
            Some(label)
        }
        Expr::Case(sel, branches) => {
            if let Expr::Con(c, args) = sel.as_mut() {
                let i = branches
                    .iter()
                    .position(|(p, _)| p.con == *c && p.vars.len() == args.len())?;
                let (p, body) = branches.swap_remove(i);
                let theta: Substitution = p.vars.into_iter().zip(args.drain(..)).collect();
                let label = ReductionLabel::ConElim(c.clone());
                *e = substitute(&body, &theta);
                Some(label)
            } else {
                step_in_place(sel, defs)
            }
        }
        Expr::Let(x, bound, body) => {
            let theta = Substitution::from([(x.clone(), take(bound))]);
            *e = substitute(body, &theta);
            Some(ReductionLabel::Beta)
        }
        Expr::Var(_) | Expr::Con(..) | Expr::Lam(..) => None,
    }
}

/// The subterm the next reduction would act on.
fn focus(e: &Expr) -> &Expr {
    match e {
        Expr::App(f, _) if !matches!(**f, Expr::Lam(..)) => focus(f),
        Expr::Case(s, _) if !matches!(**s, Expr::Con(..)) => focus(s),
        _ => e,
    }
}

/// Reduces to weak head normal form by repeated [`step`], spending one unit
/// of fuel per step. This is the reference route; [`evaluate`] computes the
/// same outcome with the same step count on an environment machine.
pub fn evaluate_by_steps(e: &Expr, defs: &Defs, fuel: u64) -> Outcome {
    let mut e = e.clone();
    let mut fuel = fuel;
    loop {
        if e.is_whnf() {
            return Outcome::Value(e);
        }
        if fuel == 0 {
            return match step(&e, defs) {
                Some(_) => Outcome::OutOfFuel,
                None => Outcome::Stuck(format!("no rule applies to `{}`", focus(&e))),
            };
        }
        if step_in_place(&mut e, defs).is_none() {
            return Outcome::Stuck(format!("no rule applies to `{}`", focus(&e)));
        }
        fuel -= 1;
    }
}

/// Evaluates to weak head normal form within `fuel` reduction steps.
pub fn evaluate(e: &Expr, defs: &Defs, fuel: u64) -> Outcome {
    Machine::new(defs).evaluate(e, fuel)
}

/// Evaluates to weak head normal form and then forces constructor arguments
/// breadth-first, all under one shared fuel budget. λ-abstractions are
/// left as they are.
pub fn evaluate_deep(e: &Expr, defs: &Defs, fuel: u64) -> Outcome {
    Machine::new(defs).evaluate_deep(e, fuel)
}
