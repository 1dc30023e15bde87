//! Abstract syntax of the object language together with its concrete text
//! format, substitution, renaming and α-equivalence.
//!
//! Programs are an expression to evaluate followed by a list of function
//! definitions:
//!
//! ```text
//! gcd x y where
//! gcd x y = case gt x y of { True -> gcd (sub x y) y | False -> ... };
//! ```

mod extract;
mod parse;
mod pretty;
mod subst;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

pub use extract::extract_args;
pub use parse::{parse, parse_expr_with, ParseError, ParseErrorKind};
pub use pretty::{pretty, pretty_expr};
pub use subst::{
    alpha_eq, alpha_eq_program, free_vars, fresh_name, match_renaming, rename, substitute,
    Renaming, Substitution,
};

pub type Name = String;

/// A flat case pattern: one constructor applied to distinct variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pattern {
    pub con: Name,
    pub vars: Vec<Name>,
}

impl Pattern {
    pub fn new(con: impl Into<Name>, vars: Vec<Name>) -> Self {
        Pattern {
            con: con.into(),
            vars,
        }
    }

    /// The pattern read back as a constructor application.
    pub fn to_expr(&self) -> Expr {
        Expr::Con(
            self.con.clone(),
            self.vars.iter().cloned().map(Expr::Var).collect(),
        )
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.con)?;
        for v in &self.vars {
            write!(f, " {v}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Expr {
    Var(Name),
    Con(Name, Vec<Expr>),
    Lam(Name, Box<Expr>),
    Fun(Name),
    App(Box<Expr>, Box<Expr>),
    Case(Box<Expr>, Vec<(Pattern, Expr)>),
    Let(Name, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn var(name: impl Into<Name>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn fun(name: impl Into<Name>) -> Expr {
        Expr::Fun(name.into())
    }

    pub fn con(name: impl Into<Name>, args: Vec<Expr>) -> Expr {
        Expr::Con(name.into(), args)
    }

    pub fn lam(x: impl Into<Name>, body: Expr) -> Expr {
        Expr::Lam(x.into(), Box::new(body))
    }

    pub fn app(f: Expr, a: Expr) -> Expr {
        Expr::App(Box::new(f), Box::new(a))
    }

    /// Left-nested application `head a1 ... an`.
    pub fn apps(head: Expr, args: impl IntoIterator<Item = Expr>) -> Expr {
        args.into_iter().fold(head, Expr::app)
    }

    pub fn case(sel: Expr, branches: Vec<(Pattern, Expr)>) -> Expr {
        Expr::Case(Box::new(sel), branches)
    }

    pub fn let_(x: impl Into<Name>, bound: Expr, body: Expr) -> Expr {
        Expr::Let(x.into(), Box::new(bound), Box::new(body))
    }

    /// `Succ^n Zero`.
    pub fn nat(n: usize) -> Expr {
        (0..n).fold(Expr::con("Zero", vec![]), |e, _| Expr::con("Succ", vec![e]))
    }

    /// Reads a `Succ^n Zero` chain back as a number.
    pub fn as_nat(&self) -> Option<usize> {
        let mut n = 0;
        let mut cur = self;
        loop {
            match cur {
                Expr::Con(c, args) if c == "Zero" && args.is_empty() => return Some(n),
                Expr::Con(c, args) if c == "Succ" && args.len() == 1 => {
                    n += 1;
                    cur = &args[0];
                }
                _ => return None,
            }
        }
    }

    /// Splits `head a1 ... an` into its head and arguments.
    pub fn spine(&self) -> (&Expr, Vec<&Expr>) {
        let mut args = Vec::new();
        let mut cur = self;
        while let Expr::App(f, a) = cur {
            args.push(a.as_ref());
            cur = f;
        }
        args.reverse();
        (cur, args)
    }

    /// Weak head normal form: a constructor application or a λ-abstraction.
    pub fn is_whnf(&self) -> bool {
        matches!(self, Expr::Con(..) | Expr::Lam(..))
    }

    /// Number of syntax nodes.
    pub fn size(&self) -> usize {
        match self {
            Expr::Var(_) | Expr::Fun(_) => 1,
            Expr::Con(_, args) => 1 + args.iter().map(Expr::size).sum::<usize>(),
            Expr::Lam(_, b) => 1 + b.size(),
            Expr::App(f, a) => 1 + f.size() + a.size(),
            Expr::Case(s, bs) => 1 + s.size() + bs.iter().map(|(_, b)| b.size()).sum::<usize>(),
            Expr::Let(_, e0, e1) => 1 + e0.size() + e1.size(),
        }
    }

    /// Every variable name occurring anywhere, bound or free.
    pub fn all_vars(&self, out: &mut BTreeSet<Name>) {
        match self {
            Expr::Var(x) => {
                out.insert(x.clone());
            }
            Expr::Fun(_) => {}
            Expr::Con(_, args) => args.iter().for_each(|a| a.all_vars(out)),
            Expr::Lam(x, b) => {
                out.insert(x.clone());
                b.all_vars(out);
            }
            Expr::App(f, a) => {
                f.all_vars(out);
                a.all_vars(out);
            }
            Expr::Case(s, bs) => {
                s.all_vars(out);
                for (p, b) in bs {
                    out.extend(p.vars.iter().cloned());
                    b.all_vars(out);
                }
            }
            Expr::Let(x, e0, e1) => {
                out.insert(x.clone());
                e0.all_vars(out);
                e1.all_vars(out);
            }
        }
    }

    /// Names of all functions called from this expression.
    pub fn called_functions(&self, out: &mut BTreeSet<Name>) {
        match self {
            Expr::Var(_) => {}
            Expr::Fun(f) => {
                out.insert(f.clone());
            }
            Expr::Con(_, args) => args.iter().for_each(|a| a.called_functions(out)),
            Expr::Lam(_, b) => b.called_functions(out),
            Expr::App(f, a) => {
                f.called_functions(out);
                a.called_functions(out);
            }
            Expr::Case(s, bs) => {
                s.called_functions(out);
                bs.iter().for_each(|(_, b)| b.called_functions(out));
            }
            Expr::Let(_, e0, e1) => {
                e0.called_functions(out);
                e1.called_functions(out);
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty_expr(self))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunDef {
    pub name: Name,
    pub params: Vec<Name>,
    pub body: Expr,
}

impl FunDef {
    pub fn new(name: impl Into<Name>, params: Vec<Name>, body: Expr) -> Self {
        FunDef {
            name: name.into(),
            params,
            body,
        }
    }

    /// The definition as the λ-abstraction a call unfolds to.
    pub fn as_lambda(&self) -> Expr {
        self.params
            .iter()
            .rev()
            .fold(self.body.clone(), |b, x| Expr::lam(x.clone(), b))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Program {
    pub main: Expr,
    pub defs: Vec<FunDef>,
}

impl Program {
    pub fn new(main: Expr, defs: Vec<FunDef>) -> Self {
        Program { main, defs }
    }

    pub fn def(&self, name: &str) -> Option<&FunDef> {
        self.defs.iter().find(|d| d.name == name)
    }

    pub fn definitions(&self) -> Defs {
        Defs::new(&self.defs)
    }

    /// Free variables of `main`, which are the program's inputs.
    pub fn inputs(&self) -> BTreeSet<Name> {
        free_vars(&self.main)
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty(self))
    }
}

/// Function definitions indexed by name (the Δ of the semantics).
#[derive(Clone, Debug, Default)]
pub struct Defs {
    map: BTreeMap<Name, FunDef>,
}

impl Defs {
    pub fn new(defs: &[FunDef]) -> Self {
        Defs {
            map: defs.iter().map(|d| (d.name.clone(), d.clone())).collect(),
        }
    }

    pub fn get(&self, name: &str) -> Option<&FunDef> {
        self.map.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &FunDef> {
        self.map.values()
    }
}
