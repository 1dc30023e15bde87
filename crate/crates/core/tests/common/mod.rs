//! Helpers shared by the integration tests: corpus access and a generator
//! of well-scoped terms over a small prelude.
#![allow(dead_code)]

use std::path::PathBuf;

use descent::syntax::{parse, Expr, Name, Pattern, Program};
use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::TestRunner;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

pub fn corpus_src(name: &str) -> String {
    let path = corpus_dir().join(format!("{name}.hl"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn corpus(name: &str) -> Program {
    parse(&corpus_src(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Every corpus program, by file stem, in name order.
pub fn corpus_names() -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(corpus_dir())
        .unwrap()
        .filter_map(|e| {
            let p = e.unwrap().path();
            (p.extension()? == "hl").then(|| p.file_stem().unwrap().to_string_lossy().into_owned())
        })
        .collect();
    names.sort();
    names
}

/// Functions generated terms may call, with their arities.
pub const PRELUDE: &str = "\
Zero where
plus x y = case x of { Zero -> y | Succ x -> Succ (plus x y) };
sub x y = case y of { Zero -> x | Succ y -> case x of { Zero -> Zero | Succ x -> sub x y } };
gt x y = case x of { Zero -> False | Succ x -> case y of { Zero -> True | Succ y -> gt x y } };
spin x = spin x;
append xs ys = case xs of { Nil -> ys | Cons x xs -> Cons x (append xs ys) };
";

const FUNS: [(&str, usize); 5] = [
    ("plus", 2),
    ("sub", 2),
    ("gt", 2),
    ("spin", 1),
    ("append", 2),
];

pub fn prelude() -> Program {
    parse(PRELUDE).unwrap()
}

/// A term with binders left anonymous; variables are indices into the
/// enclosing scope, so every tree denotes a well-scoped term.
#[derive(Clone, Debug)]
pub enum Raw {
    Var(usize),
    Free(u8),
    Nullary(bool),
    Succ(Box<Raw>),
    Cons(Box<Raw>, Box<Raw>),
    Lam(Box<Raw>),
    App(Box<Raw>, Box<Raw>),
    Call(usize, Vec<Raw>),
    CaseNat(Box<Raw>, Box<Raw>, Box<Raw>),
    CaseList(Box<Raw>, Box<Raw>, Box<Raw>),
    Let(Box<Raw>, Box<Raw>),
}

pub fn raw() -> impl Strategy<Value = Raw> {
    let leaf = prop_oneof![
        any::<usize>().prop_map(Raw::Var),
        (0u8..3).prop_map(Raw::Free),
        any::<bool>().prop_map(Raw::Nullary),
    ];
    leaf.prop_recursive(5, 40, 3, |t| {
        let b = |t: BoxedStrategy<Raw>| t.prop_map(Box::new);
        let t = t.boxed();
        prop_oneof![
            b(t.clone()).prop_map(Raw::Succ),
            (b(t.clone()), b(t.clone())).prop_map(|(a, d)| Raw::Cons(a, d)),
            b(t.clone()).prop_map(Raw::Lam),
            (b(t.clone()), b(t.clone())).prop_map(|(f, a)| Raw::App(f, a)),
            (0..FUNS.len(), prop::collection::vec(t.clone(), 2))
                .prop_map(|(f, args)| Raw::Call(f, args)),
            (b(t.clone()), b(t.clone()), b(t.clone())).prop_map(|(s, z, n)| Raw::CaseNat(s, z, n)),
            (b(t.clone()), b(t.clone()), b(t.clone())).prop_map(|(s, n, c)| Raw::CaseList(s, n, c)),
            (b(t.clone()), b(t)).prop_map(|(e0, e1)| Raw::Let(e0, e1)),
        ]
    })
}

/// Binder names cycle through a small pool so that shadowing is common.
fn binder(depth: usize) -> Name {
    format!("x{}", depth % 3)
}

/// The term `r` denotes. Without `closed`, indices into an empty scope
/// and `Free` leaves become the free variables `y0..y2`.
pub fn to_expr(r: &Raw, closed: bool) -> Expr {
    go(r, closed, true, &mut Vec::new())
}

/// Like [`to_expr`] with λ-abstractions and applications dropped: `\x -> b`
/// becomes `b` and `f a` becomes `Cons f a`.
pub fn to_first_order(r: &Raw, closed: bool) -> Expr {
    go(r, closed, false, &mut Vec::new())
}

fn go(r: &Raw, closed: bool, ho: bool, scope: &mut Vec<Name>) -> Expr {
    let under = |n: usize, body: &Raw, scope: &mut Vec<Name>| -> (Vec<Name>, Expr) {
        let names: Vec<Name> = (0..n).map(|i| binder(scope.len() + i)).collect();
        scope.extend(names.iter().cloned());
        let e = go(body, closed, ho, scope);
        scope.truncate(scope.len() - n);
        (names, e)
    };
    match r {
        Raw::Var(i) if !scope.is_empty() => {
            Expr::Var(scope[scope.len() - 1 - i % scope.len()].clone())
        }
        Raw::Var(i) if !closed => Expr::var(format!("y{}", i % 3)),
        Raw::Free(k) if !closed => Expr::var(format!("y{k}")),
        Raw::Var(_) | Raw::Free(_) => Expr::nat(0),
        Raw::Nullary(true) => Expr::nat(0),
        Raw::Nullary(false) => Expr::con("Nil", vec![]),
        Raw::Succ(a) => Expr::con("Succ", vec![go(a, closed, ho, scope)]),
        Raw::Cons(a, d) => Expr::con(
            "Cons",
            vec![go(a, closed, ho, scope), go(d, closed, ho, scope)],
        ),
        Raw::Lam(b) if !ho => go(b, closed, ho, scope),
        Raw::App(f, a) if !ho => Expr::con(
            "Cons",
            vec![go(f, closed, ho, scope), go(a, closed, ho, scope)],
        ),
        Raw::Lam(b) => {
            let (xs, b) = under(1, b, scope);
            Expr::lam(xs[0].clone(), b)
        }
        Raw::App(f, a) => Expr::app(go(f, closed, ho, scope), go(a, closed, ho, scope)),
        Raw::Call(f, args) => {
            let (name, arity) = FUNS[*f];
            Expr::apps(
                Expr::fun(name),
                args.iter()
                    .take(arity)
                    .map(|a| go(a, closed, ho, scope))
                    .collect::<Vec<_>>(),
            )
        }
        Raw::CaseNat(s, z, n) => {
            let s = go(s, closed, ho, scope);
            let z = go(z, closed, ho, scope);
            let (xs, n) = under(1, n, scope);
            Expr::case(
                s,
                vec![
                    (Pattern::new("Zero", vec![]), z),
                    (Pattern::new("Succ", xs), n),
                ],
            )
        }
        Raw::CaseList(s, n, c) => {
            let s = go(s, closed, ho, scope);
            let n = go(n, closed, ho, scope);
            let (xs, c) = under(2, c, scope);
            Expr::case(
                s,
                vec![
                    (Pattern::new("Nil", vec![]), n),
                    (Pattern::new("Cons", xs), c),
                ],
            )
        }
        Raw::Let(e0, e1) => {
            let e0 = go(e0, closed, ho, scope);
            let (xs, e1) = under(1, e1, scope);
            Expr::let_(xs[0].clone(), e0, e1)
        }
    }
}

pub fn closed_term() -> impl Strategy<Value = Expr> {
    raw().prop_map(|r| to_expr(&r, true))
}

pub fn open_term() -> impl Strategy<Value = Expr> {
    raw().prop_map(|r| to_expr(&r, false))
}

pub fn first_order_term() -> impl Strategy<Value = Expr> {
    raw().prop_map(|r| to_first_order(&r, false))
}

/// A program with `main` as its main expression and the prelude's
/// definitions.
pub fn with_prelude(main: Expr) -> Program {
    Program::new(main, prelude().defs)
}

/// Whether some simple cycle of the graph avoids every state in `blocked`,
/// decided by enumerating all simple cycles. Gives up (returns `None`)
/// past `budget` search steps.
pub fn case_free_cycle_by_enumeration(
    succ: &[Vec<usize>],
    blocked: &[bool],
    budget: usize,
) -> Option<bool> {
    struct Search<'a> {
        succ: &'a [Vec<usize>],
        blocked: &'a [bool],
        on_path: Vec<bool>,
        path: Vec<usize>,
        steps: usize,
        budget: usize,
    }
    impl Search<'_> {
        /// Extends the path from its last state using only states `>= start`;
        /// reports whether a cycle back to `start` with no blocked state exists.
        fn extend(&mut self, start: usize) -> Option<bool> {
            self.steps += 1;
            if self.steps > self.budget {
                return None;
            }
            let last = *self.path.last().unwrap();
            for &t in &self.succ[last] {
                if t == start {
                    if self.path.iter().all(|&s| !self.blocked[s]) {
                        return Some(true);
                    }
                } else if t > start && !self.on_path[t] {
                    self.on_path[t] = true;
                    self.path.push(t);
                    let r = self.extend(start)?;
                    self.path.pop();
                    self.on_path[t] = false;
                    if r {
                        return Some(true);
                    }
                }
            }
            Some(false)
        }
    }
    let mut s = Search {
        succ,
        blocked,
        on_path: vec![false; succ.len()],
        path: Vec::new(),
        steps: 0,
        budget,
    };
    for start in 0..succ.len() {
        s.path = vec![start];
        s.on_path[start] = true;
        let r = s.extend(start)?;
        s.on_path[start] = false;
        if r {
            return Some(true);
        }
    }
    Some(false)
}

/// `n` values of `strategy` from a fixed-seed runner.
pub fn sample<S: Strategy>(strategy: S, n: usize) -> Vec<S::Value> {
    let mut runner = TestRunner::deterministic();
    (0..n)
        .map(|_| {
            strategy
                .new_tree(&mut runner)
                .expect("strategy has no filters")
                .current()
        })
        .collect()
}
