use std::collections::BTreeSet;

use crate::syntax::{
    alpha_eq, free_vars, fresh_name, rename, Expr, Name, Pattern, Renaming, Substitution,
};

/// Most specific generalization: `(g, θ1, θ2)` with `g θ1 ≡ e1` and
/// `g θ2 ≡ e2`. Disagreeing subterms become fresh variables, one per
/// distinct pair. A disagreement that mentions a variable bound inside `g`
/// cannot be abstracted there, so it is abstracted at the nearest enclosing
/// subterm free of such variables. Equal subterms are kept, so `msg(e, e)`
/// returns `e` with empty substitutions.
pub fn msg(e1: &Expr, e2: &Expr) -> (Expr, Substitution, Substitution) {
    msg_avoiding(e1, e2, BTreeSet::new())
}

/// [`msg`] with generalization variables also kept out of `avoid`.
pub(super) fn msg_avoiding(
    e1: &Expr,
    e2: &Expr,
    mut avoid: BTreeSet<Name>,
) -> (Expr, Substitution, Substitution) {
    e1.all_vars(&mut avoid);
    e2.all_vars(&mut avoid);
    let mut g = Gen {
        avoid,
        pairs: Vec::new(),
    };
    let expr = g
        .go(e1, e2, &BTreeSet::new())
        .expect("a top-level disagreement has no bound variables");
    let mut left = Substitution::new();
    let mut right = Substitution::new();
    for (a, b, v) in g.pairs {
        left.insert(v.clone(), a);
        right.insert(v, b);
    }
    (expr, left, right)
}

struct Gen {
    avoid: BTreeSet<Name>,
    pairs: Vec<(Expr, Expr, Name)>,
}

impl Gen {
    fn abstract_pair(&mut self, a: &Expr, b: &Expr, bound: &BTreeSet<Name>) -> Option<Expr> {
        if free_vars(a)
            .iter()
            .chain(free_vars(b).iter())
            .any(|x| bound.contains(x))
        {
            return None;
        }
        if let Some((_, _, v)) = self
            .pairs
            .iter()
            .find(|(x, y, _)| alpha_eq(x, a) && alpha_eq(y, b))
        {
            return Some(Expr::Var(v.clone()));
        }
        let v = fresh_name("v", &self.avoid);
        self.avoid.insert(v.clone());
        self.pairs.push((a.clone(), b.clone(), v.clone()));
        Some(Expr::Var(v))
    }

    /// A common name for two binders, with both bodies renamed to it.
    fn binders(
        &mut self,
        xs: &[Name],
        b1: &Expr,
        ys: &[Name],
        b2: &Expr,
    ) -> (Vec<Name>, Expr, Expr) {
        let mut zs = Vec::with_capacity(xs.len());
        let (mut s1, mut s2) = (Renaming::new(), Renaming::new());
        for (x, y) in xs.iter().zip(ys) {
            let z = if x == y {
                x.clone()
            } else {
                let z = fresh_name(x, &self.avoid);
                self.avoid.insert(z.clone());
                z
            };
            if x != &z {
                s1.insert(x.clone(), z.clone());
            }
            if y != &z {
                s2.insert(y.clone(), z.clone());
            }
            zs.push(z);
        }
        (zs, rename(b1, &s1), rename(b2, &s2))
    }

    fn go(&mut self, a: &Expr, b: &Expr, bound: &BTreeSet<Name>) -> Option<Expr> {
        let common = match (a, b) {
            (Expr::Var(x), Expr::Var(y)) if x == y => Some(a.clone()),
            (Expr::Fun(f), Expr::Fun(g)) if f == g => Some(a.clone()),
            (Expr::Con(c, xs), Expr::Con(d, ys)) if c == d && xs.len() == ys.len() => xs
                .iter()
                .zip(ys)
                .map(|(x, y)| self.go(x, y, bound))
                .collect::<Option<Vec<_>>>()
                .map(|args| Expr::Con(c.clone(), args)),
            // spines are generalized whole: a named head must be the same
            // name, and the number of arguments must agree
            (Expr::App(..), Expr::App(..)) => {
                let ((h1, xs), (h2, ys)) = (a.spine(), b.spine());
                let head = match (h1, h2) {
                    (Expr::Var(x), Expr::Var(y)) | (Expr::Fun(x), Expr::Fun(y)) => {
                        (x == y).then(|| h1.clone())
                    }
                    (Expr::Var(_) | Expr::Fun(_), _) | (_, Expr::Var(_) | Expr::Fun(_)) => None,
                    _ if xs.len() == ys.len() => self.go(h1, h2, bound),
                    _ => None,
                };
                match head {
                    Some(h) if xs.len() == ys.len() => xs
                        .iter()
                        .zip(&ys)
                        .map(|(x, y)| self.go(x, y, bound))
                        .collect::<Option<Vec<_>>>()
                        .map(|args| Expr::apps(h, args)),
                    _ => None,
                }
            }
            (Expr::Lam(x, b1), Expr::Lam(y, b2)) => {
                let (zs, b1, b2) =
                    self.binders(std::slice::from_ref(x), b1, std::slice::from_ref(y), b2);
                let mut inner = bound.clone();
                inner.extend(zs.iter().cloned());
                self.go(&b1, &b2, &inner)
                    .map(|b| Expr::lam(zs[0].clone(), b))
            }
            (Expr::Case(s1, bs1), Expr::Case(s2, bs2))
                if bs1.len() == bs2.len()
                    && bs1
                        .iter()
                        .zip(bs2)
                        .all(|((p, _), (q, _))| p.con == q.con && p.vars.len() == q.vars.len()) =>
            {
                let sel = self.go(s1, s2, bound);
                let mut branches = Vec::with_capacity(bs1.len());
                for ((p, b1), (q, b2)) in bs1.iter().zip(bs2) {
                    let (zs, b1, b2) = self.binders(&p.vars, b1, &q.vars, b2);
                    let mut inner = bound.clone();
                    inner.extend(zs.iter().cloned());
                    branches.push(
                        self.go(&b1, &b2, &inner)
                            .map(|b| (Pattern::new(p.con.clone(), zs), b)),
                    );
                }
                sel.and_then(|s| {
                    branches
                        .into_iter()
                        .collect::<Option<Vec<_>>>()
                        .map(|bs| Expr::case(s, bs))
                })
            }
            (Expr::Let(x, x0, x1), Expr::Let(y, y0, y1)) => {
                let e0 = self.go(x0, y0, bound);
                let (zs, b1, b2) =
                    self.binders(std::slice::from_ref(x), x1, std::slice::from_ref(y), y1);
                let mut inner = bound.clone();
                inner.extend(zs.iter().cloned());
                let e1 = self.go(&b1, &b2, &inner);
                e0.and_then(|e0| e1.map(|e1| Expr::let_(zs[0].clone(), e0, e1)))
            }
            _ => None,
        };
        common.or_else(|| self.abstract_pair(a, b, bound))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::substitute;

    fn v(x: &str) -> Expr {
        Expr::var(x)
    }

    fn check(e1: &Expr, e2: &Expr) -> (Expr, Substitution, Substitution) {
        let (g, t1, t2) = msg(e1, e2);
        assert!(alpha_eq(&substitute(&g, &t1), e1), "{g} θ1 ≠ {e1}");
        assert!(alpha_eq(&substitute(&g, &t2), e2), "{g} θ2 ≠ {e2}");
        (g, t1, t2)
    }

    #[test]
    fn call_with_differing_arguments() {
        let f = |a, b| Expr::apps(Expr::fun("f"), vec![a, b]);
        let (g, t1, t2) = check(
            &f(v("x"), Expr::nat(0)),
            &f(v("y"), Expr::con("Succ", vec![v("z")])),
        );
        let Expr::App(ref head, ref b) = g else {
            panic!("{g}")
        };
        let Expr::App(_, ref a) = **head else {
            panic!("{g}")
        };
        let (Expr::Var(a), Expr::Var(b)) = (&**a, &**b) else {
            panic!("{g}")
        };
        assert_ne!(a, b);
        assert_eq!((&t1[a], &t1[b]), (&v("x"), &Expr::nat(0)));
        assert_eq!(
            (&t2[a], &t2[b]),
            (&v("y"), &Expr::con("Succ", vec![v("z")]))
        );
    }

    #[test]
    fn spines_with_different_heads_are_not_split() {
        let a = Expr::apps(Expr::fun("plus"), vec![v("n"), Expr::nat(1)]);
        let b = Expr::app(Expr::fun("f"), v("x"));
        let (g, _, _) = check(&a, &b);
        assert_eq!(g, v("v"));
    }

    #[test]
    fn identical_terms() {
        let e = Expr::apps(Expr::fun("f"), vec![v("x"), Expr::nat(2)]);
        let (g, t1, t2) = check(&e, &e);
        assert_eq!(g, e);
        assert!(t1.is_empty() && t2.is_empty());
    }

    #[test]
    fn nothing_in_common() {
        let (g, t1, t2) = check(&Expr::nat(1), &Expr::nat(0));
        assert_eq!(g, v("v"));
        assert_eq!(t1["v"], Expr::nat(1));
        assert_eq!(t2["v"], Expr::nat(0));
    }

    #[test]
    fn repeated_pairs_share_a_variable() {
        let f = |a: Expr| Expr::apps(Expr::fun("f"), vec![a.clone(), a]);
        let (g, t1, _) = check(&f(v("x")), &f(v("y")));
        assert_eq!(t1.len(), 1);
        assert_eq!(g, f(v("v")));
    }

    #[test]
    fn bound_variables_are_not_abstracted() {
        // \x -> x vs \y -> Zero: the bodies disagree on a bound variable
        let e1 = Expr::lam("x", v("x"));
        let e2 = Expr::lam("y", Expr::nat(0));
        let (g, _, _) = check(&e1, &e2);
        assert_eq!(g, v("v"));
        // the shared binder structure survives when the disagreement is free
        let e1 = Expr::lam("x", Expr::apps(v("x"), vec![v("a")]));
        let e2 = Expr::lam("y", Expr::apps(v("y"), vec![Expr::nat(0)]));
        let (g, _, _) = check(&e1, &e2);
        assert!(matches!(g, Expr::Lam(..)), "{g}");
    }

    #[test]
    fn case_branches() {
        let pats = |b: Expr| {
            Expr::case(
                v("n"),
                vec![
                    (Pattern::new("Zero", vec![]), b),
                    (Pattern::new("Succ", vec!["m".into()]), v("m")),
                ],
            )
        };
        let (g, t1, _) = check(&pats(Expr::nat(0)), &pats(Expr::nat(3)));
        assert_eq!(t1.len(), 1);
        assert!(matches!(g, Expr::Case(..)));
    }
}
