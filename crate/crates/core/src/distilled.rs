//! Membership test for distilled form.
//!
//! The grammar is indexed by ρ, the set of variables bound by enclosing
//! `let`s:
//!
//! ```text
//! e^ρ ::= x e1^ρ ... en^ρ
//!       | c e1^ρ ... en^ρ
//!       | \x -> e^ρ
//!       | f x1 ... xn                      (f x1 ... xn = e^ρ)
//!       | case (x e1^ρ ... en^ρ) of { p1 -> e^ρ | ... }   (x ∉ ρ)
//!       | let x = e0^ρ in e1^(ρ ∪ {x})
//! ```
//!
//! A call `f y1 ... yn` instantiates the definition of `f` with its
//! parameters renamed to the arguments, so a parameter whose argument is in
//! ρ is itself in ρ inside the body. Each definition is therefore checked
//! once per distinct set of ρ-parameters it is reached with, starting with
//! the empty set.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::syntax::{Defs, Expr, Name, Program};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Clause {
    /// A function call with an argument that is not a variable.
    NonVariableArgument,
    /// A call whose argument count differs from the definition's arity.
    CallArity,
    /// A call to a function with no definition.
    UndefinedFunction,
    /// A case selector headed by a `let`-bound variable.
    RhoSelector,
    /// A case selector that is not a variable applied to arguments.
    SelectorShape,
    /// An application whose head is neither a variable nor a function.
    ApplicationHead,
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Clause::NonVariableArgument => "non-variable function argument",
            Clause::CallArity => "call arity",
            Clause::UndefinedFunction => "undefined function",
            Clause::RhoSelector => "let-bound variable in case selector",
            Clause::SelectorShape => "case selector not a variable application",
            Clause::ApplicationHead => "application head not a variable or function",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Violation {
    pub path: String,
    pub clause: Clause,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}: {}", self.path, self.clause, self.message)
    }
}

/// Accepts `p` if it is in distilled form, or lists every violation.
pub fn check_distilled(p: &Program) -> Result<(), Vec<Violation>> {
    let defs = p.definitions();
    let mut cx = Checker {
        defs: &defs,
        violations: Vec::new(),
        pending: VecDeque::new(),
        seen: BTreeSet::new(),
    };
    cx.expr(&p.main, &mut BTreeSet::new(), &mut vec!["main".to_string()]);
    for d in &p.defs {
        cx.enqueue(&d.name, BTreeSet::new());
    }
    while let Some((f, rho)) = cx.pending.pop_front() {
        let def = defs.get(&f).expect("only defined functions are queued");
        let label = if rho.is_empty() {
            f.clone()
        } else {
            let names: Vec<&str> = rho.iter().map(String::as_str).collect();
            format!("{f}[ρ={{{}}}]", names.join(","))
        };
        let mut rho = rho;
        cx.expr(&def.body, &mut rho, &mut vec![label]);
    }
    let mut v = cx.violations;
    v.sort();
    v.dedup();
    if v.is_empty() {
        Ok(())
    } else {
        Err(v)
    }
}

struct Checker<'a> {
    defs: &'a Defs,
    violations: Vec<Violation>,
    pending: VecDeque<(Name, BTreeSet<Name>)>,
    seen: BTreeSet<(Name, BTreeSet<Name>)>,
}

impl Checker<'_> {
    fn enqueue(&mut self, f: &str, rho: BTreeSet<Name>) {
        if self.seen.insert((f.to_string(), rho.clone())) {
            self.pending.push_back((f.to_string(), rho));
        }
    }

    fn report(&mut self, path: &[String], clause: Clause, message: String) {
        self.violations.push(Violation {
            path: path.join("/"),
            clause,
            message,
        });
    }

    fn under<T>(
        &mut self,
        path: &mut Vec<String>,
        seg: String,
        f: impl FnOnce(&mut Self, &mut Vec<String>) -> T,
    ) -> T {
        path.push(seg);
        let out = f(self, path);
        path.pop();
        out
    }

    /// Checks `e` with binders `xs` in scope, which shadow any ρ entries.
    fn scoped(
        &mut self,
        e: &Expr,
        xs: &[Name],
        extra: Option<&Name>,
        rho: &mut BTreeSet<Name>,
        path: &mut Vec<String>,
    ) {
        let mut inner = rho.clone();
        for x in xs {
            inner.remove(x);
        }
        if let Some(x) = extra {
            inner.insert(x.clone());
        }
        self.expr(e, &mut inner, path);
    }

    fn args(&mut self, args: &[&Expr], rho: &mut BTreeSet<Name>, path: &mut Vec<String>) {
        for (i, a) in args.iter().enumerate() {
            self.under(path, format!("arg{}", i + 1), |cx, path| {
                cx.expr(a, rho, path)
            });
        }
    }

    fn expr(&mut self, e: &Expr, rho: &mut BTreeSet<Name>, path: &mut Vec<String>) {
        match e {
            Expr::Var(_) => {}
            Expr::Con(_, args) => {
                let args: Vec<&Expr> = args.iter().collect();
                self.args(&args, rho, path);
            }
            Expr::Lam(x, b) => {
                self.under(path, format!("λ{x}"), |cx, path| {
                    cx.scoped(b, std::slice::from_ref(x), None, rho, path)
                });
            }
            Expr::Fun(_) | Expr::App(..) => {
                let (head, args) = e.spine();
                match head {
                    Expr::Var(_) => self.args(&args, rho, path),
                    Expr::Fun(f) => self.call(f, &args, rho, path),
                    other => {
                        self.report(
                            path,
                            Clause::ApplicationHead,
                            format!("`{e}` applies `{other}`"),
                        );
                        self.under(path, "fun".into(), |cx, path| cx.expr(other, rho, path));
                        self.args(&args, rho, path);
                    }
                }
            }
            Expr::Case(sel, bs) => {
                self.under(path, "sel".into(), |cx, path| match sel.spine() {
                    (Expr::Var(x), args) => {
                        if rho.contains(x) {
                            cx.report(
                                path,
                                Clause::RhoSelector,
                                format!("selector `{sel}` scrutinises let-bound `{x}`"),
                            );
                        }
                        cx.args(&args, rho, path);
                    }
                    _ => {
                        cx.report(
                            path,
                            Clause::SelectorShape,
                            format!("selector `{sel}` is not headed by a variable"),
                        );
                        cx.expr(sel, rho, path);
                    }
                });
                for (p, b) in bs {
                    self.under(path, p.con.to_string(), |cx, path| {
                        cx.scoped(b, &p.vars, None, rho, path)
                    });
                }
            }
            Expr::Let(x, e0, e1) => {
                self.under(path, format!("let {x}"), |cx, path| cx.expr(e0, rho, path));
                self.under(path, "in".into(), |cx, path| {
                    cx.scoped(e1, std::slice::from_ref(x), Some(x), rho, path)
                });
            }
        }
    }

    fn call(&mut self, f: &str, args: &[&Expr], rho: &mut BTreeSet<Name>, path: &mut Vec<String>) {
        let Some(def) = self.defs.get(f) else {
            self.report(
                path,
                Clause::UndefinedFunction,
                format!("`{f}` has no definition"),
            );
            return;
        };
        let params = def.params.clone();
        if args.len() != params.len() {
            self.report(
                path,
                Clause::CallArity,
                format!(
                    "`{f}` takes {} argument(s), given {}",
                    params.len(),
                    args.len()
                ),
            );
        }
        let mut rho_params = BTreeSet::new();
        for (i, a) in args.iter().enumerate() {
            match a {
                Expr::Var(y) => {
                    if rho.contains(y) {
                        if let Some(p) = params.get(i) {
                            rho_params.insert(p.clone());
                        }
                    }
                }
                other => {
                    self.report(
                        path,
                        Clause::NonVariableArgument,
                        format!("argument {} of `{f}` is `{other}`", i + 1),
                    );
                    self.under(path, format!("arg{}", i + 1), |cx, path| {
                        cx.expr(other, rho, path)
                    });
                }
            }
        }
        self.enqueue(f, rho_params);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{extract_args, parse};

    fn violations(src: &str) -> Vec<Violation> {
        check_distilled(&parse(src).unwrap()).unwrap_err()
    }

    #[test]
    fn gcd_distilled_accepted() {
        let p = parse(include_str!("../corpus/gcd_distilled.hl")).unwrap();
        assert_eq!(check_distilled(&p), Ok(()));
    }

    #[test]
    fn let_bound_selector_rejected() {
        let v = violations("let x = Succ y in case x of { Zero -> A | Succ z -> B } where");
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].clause, Clause::RhoSelector);
        assert_eq!(v[0].path, "main/in/sel");
    }

    #[test]
    fn rebinding_shadows_rho() {
        let src = "let x = Succ y in \\x -> case x of { Zero -> A | Succ z -> B } where";
        assert!(check_distilled(&parse(src).unwrap()).is_ok());
    }

    #[test]
    fn rho_flows_into_parameters() {
        let src = "let v = Succ y in f v where f n = case n of { Zero -> Zero | Succ m -> m }";
        let v = violations(src);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].clause, Clause::RhoSelector);
        assert!(v[0].path.starts_with("f[ρ={n}]"), "{}", v[0].path);
        // the same body is fine when reached with a plain variable
        let src = "f y where f n = case n of { Zero -> Zero | Succ m -> m }";
        assert!(check_distilled(&parse(src).unwrap()).is_ok());
    }

    #[test]
    fn gcd_after_extraction_is_not_distilled() {
        let p = extract_args(&parse(include_str!("../corpus/gcd.hl")).unwrap());
        let v = check_distilled(&p).unwrap_err();
        assert!(v.iter().any(|v| v.clause == Clause::SelectorShape));
        // the let-bound difference reaches gt's scrutinised parameter
        assert!(v
            .iter()
            .any(|v| v.clause == Clause::RhoSelector && v.path.starts_with("gt[")));
    }

    #[test]
    fn non_variable_argument_and_application_head() {
        let v = violations("f Zero where f n = n");
        assert_eq!(v[0].clause, Clause::NonVariableArgument);
        let v = violations("(\\x -> x) y where");
        assert_eq!(v[0].clause, Clause::ApplicationHead);
    }

    #[test]
    fn call_arity() {
        let v = violations("f x where f a b = a");
        assert_eq!(v[0].clause, Clause::CallArity);
    }

    #[test]
    fn distilled_programs_are_fixed_by_extraction() {
        for src in [
            include_str!("../corpus/gcd_distilled.hl"),
            include_str!("../corpus/grow_shrink_distilled.hl"),
            include_str!("../corpus/sub_grow_distilled.hl"),
        ] {
            let p = parse(src).unwrap();
            assert!(check_distilled(&p).is_ok());
            assert_eq!(extract_args(&p), p);
        }
    }

    #[test]
    fn violation_serialises() {
        let v = &violations("f Zero where f n = n")[0];
        let j = serde_json::to_value(v).unwrap();
        assert_eq!(j["clause"], "non-variable-argument");
        assert_eq!(j["path"], "main");
    }
}
