use std::collections::BTreeSet;

use super::{fresh_name, Expr, FunDef, Name, Program};

/// Replaces every non-variable argument of a function call with a fresh
/// `let` binding around the call, so all call arguments become variables.
pub fn extract_args(p: &Program) -> Program {
    let mut taken = BTreeSet::new();
    p.main.all_vars(&mut taken);
    for d in &p.defs {
        taken.extend(d.params.iter().cloned());
        d.body.all_vars(&mut taken);
    }
    let mut ex = Extractor { taken };
    let main = ex.expr(&p.main);
    let defs = p
        .defs
        .iter()
        .map(|d| FunDef::new(d.name.clone(), d.params.clone(), ex.expr(&d.body)))
        .collect();
    Program::new(main, defs)
}

struct Extractor {
    taken: BTreeSet<Name>,
}

impl Extractor {
    fn fresh(&mut self) -> Name {
        let n = fresh_name("v", &self.taken);
        self.taken.insert(n.clone());
        n
    }

    fn expr(&mut self, e: &Expr) -> Expr {
        match e {
            Expr::Var(_) | Expr::Fun(_) => e.clone(),
            Expr::Con(c, args) => Expr::con(c.clone(), args.iter().map(|a| self.expr(a)).collect()),
            Expr::Lam(x, b) => Expr::lam(x.clone(), self.expr(b)),
            Expr::Case(s, bs) => Expr::case(
                self.expr(s),
                bs.iter().map(|(p, b)| (p.clone(), self.expr(b))).collect(),
            ),
            Expr::Let(x, e0, e1) => Expr::let_(x.clone(), self.expr(e0), self.expr(e1)),
            Expr::App(..) => {
                let (head, args) = e.spine();
                if let Expr::Fun(_) = head {
                    let mut bindings = Vec::new();
                    let mut new_args = Vec::with_capacity(args.len());
                    for a in args {
                        if let Expr::Var(_) = a {
                            new_args.push(a.clone());
                        } else {
                            let v = self.fresh();
                            bindings.push((v.clone(), self.expr(a)));
                            new_args.push(Expr::Var(v));
                        }
                    }
                    let call = Expr::apps(head.clone(), new_args);
                    bindings
                        .into_iter()
                        .rev()
                        .fold(call, |body, (v, bound)| Expr::let_(v, bound, body))
                } else {
                    let head = self.expr(head);
                    let args: Vec<Expr> = args.into_iter().map(|a| self.expr(a)).collect();
                    Expr::apps(head, args)
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{alpha_eq, alpha_eq_program, parse, parse_expr_with};

    fn funs(names: &[&str]) -> BTreeSet<Name> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn gcd_recursive_call() {
        let p = parse("gcd (sub x y) y where gcd x y = x; sub x y = x").unwrap();
        let q = extract_args(&p);
        let expected =
            parse_expr_with("let v = sub x y in gcd v y", &funs(&["gcd", "sub"])).unwrap();
        assert!(alpha_eq(&q.main, &expected), "{}", q.main);
    }

    #[test]
    fn constant_argument() {
        let p = parse("f Zero where f x = x").unwrap();
        let expected = parse_expr_with("let v = Zero in f v", &funs(&["f"])).unwrap();
        assert!(alpha_eq(&extract_args(&p).main, &expected));
    }

    #[test]
    fn variable_arguments_untouched() {
        let p = parse("f x y where f x y = x").unwrap();
        assert_eq!(extract_args(&p), p);
    }

    #[test]
    fn fresh_names_avoid_program_vars() {
        let p = parse("f (Succ v) where f v = v").unwrap();
        let q = extract_args(&p);
        let Expr::Let(x, _, _) = &q.main else {
            panic!("{}", q.main)
        };
        assert_ne!(x, "v");
        assert!(alpha_eq_program(&extract_args(&q), &q));
    }
}
