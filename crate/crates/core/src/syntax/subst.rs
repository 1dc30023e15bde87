use std::collections::{BTreeMap, BTreeSet};

use super::{Expr, Name, Program};

/// Simultaneous substitution of expressions for variables (θ).
pub type Substitution = BTreeMap<Name, Expr>;

/// A substitution whose range is variables only (σ).
pub type Renaming = BTreeMap<Name, Name>;

pub fn free_vars(e: &Expr) -> BTreeSet<Name> {
    let mut out = BTreeSet::new();
    collect_free(e, &mut Vec::new(), &mut out);
    out
}

fn collect_free<'a>(e: &'a Expr, bound: &mut Vec<&'a str>, out: &mut BTreeSet<Name>) {
    match e {
        Expr::Var(x) => {
            if !bound.contains(&x.as_str()) {
                out.insert(x.clone());
            }
        }
        Expr::Fun(_) => {}
        Expr::Con(_, args) => args.iter().for_each(|a| collect_free(a, bound, out)),
        Expr::Lam(x, b) => {
            bound.push(x);
            collect_free(b, bound, out);
            bound.pop();
        }
        Expr::App(f, a) => {
            collect_free(f, bound, out);
            collect_free(a, bound, out);
        }
        Expr::Case(s, bs) => {
            collect_free(s, bound, out);
            for (p, b) in bs {
                let n = bound.len();
                bound.extend(p.vars.iter().map(String::as_str));
                collect_free(b, bound, out);
                bound.truncate(n);
            }
        }
        Expr::Let(x, e0, e1) => {
            collect_free(e0, bound, out);
            bound.push(x);
            collect_free(e1, bound, out);
            bound.pop();
        }
    }
}

/// Picks a variant of `base` not in `avoid`: `base` itself if free, else
/// the root of `base` suffixed with the smallest unused index.
pub fn fresh_name(base: &str, avoid: &BTreeSet<Name>) -> Name {
    if !avoid.contains(base) {
        return base.to_string();
    }
    let root = base.trim_end_matches(|c: char| c.is_ascii_digit() || c == '\'');
    let root = if root.is_empty() { "v" } else { root };
    (1..)
        .map(|i| format!("{root}{i}"))
        .find(|n| !avoid.contains(n))
        .expect("unbounded supply")
}

/// Capture-avoiding simultaneous substitution `e θ`.
pub fn substitute(e: &Expr, theta: &Substitution) -> Expr {
    if theta.is_empty() {
        return e.clone();
    }
    let mut range_fv = BTreeSet::new();
    for v in theta.values() {
        range_fv.extend(free_vars(v));
    }
    subst_in(e, theta, &range_fv)
}

pub fn rename(e: &Expr, sigma: &Renaming) -> Expr {
    let theta: Substitution = sigma
        .iter()
        .map(|(k, v)| (k.clone(), Expr::Var(v.clone())))
        .collect();
    substitute(e, &theta)
}

struct Scope {
    theta: Substitution,
    range_fv: BTreeSet<Name>,
}

/// Enters the binders `xs` over `body`. Returns the (possibly renamed)
/// binder names and the substitution to apply beneath them, or `None`
/// when nothing remains to substitute.
fn enter_binders(
    xs: &[Name],
    body: &Expr,
    theta: &Substitution,
    range_fv: &BTreeSet<Name>,
) -> (Vec<Name>, Option<Scope>) {
    let mut inner = theta.clone();
    for x in xs {
        inner.remove(x);
    }
    if inner.is_empty() {
        return (xs.to_vec(), None);
    }
    let mut range_fv = range_fv.clone();
    let mut avoid: Option<BTreeSet<Name>> = None;
    let mut names = Vec::with_capacity(xs.len());
    for x in xs {
        if range_fv.contains(x) {
            let avoid = avoid.get_or_insert_with(|| {
                let mut a = range_fv.clone();
                body.all_vars(&mut a);
                a.extend(theta.keys().cloned());
                a.extend(xs.iter().cloned());
                a
            });
            let fresh = fresh_name(x, avoid);
            avoid.insert(fresh.clone());
            range_fv.insert(fresh.clone());
            inner.insert(x.clone(), Expr::Var(fresh.clone()));
            names.push(fresh);
        } else {
            names.push(x.clone());
        }
    }
    (
        names,
        Some(Scope {
            theta: inner,
            range_fv,
        }),
    )
}

fn subst_in(e: &Expr, theta: &Substitution, range_fv: &BTreeSet<Name>) -> Expr {
    match e {
        Expr::Var(x) => theta.get(x).cloned().unwrap_or_else(|| e.clone()),
        Expr::Fun(_) => e.clone(),
        Expr::Con(c, args) => Expr::Con(
            c.clone(),
            args.iter().map(|a| subst_in(a, theta, range_fv)).collect(),
        ),
        Expr::Lam(x, b) => {
            let (names, scope) = enter_binders(std::slice::from_ref(x), b, theta, range_fv);
            let body = match scope {
                Some(s) => subst_in(b, &s.theta, &s.range_fv),
                None => (**b).clone(),
            };
            Expr::Lam(names.into_iter().next().unwrap(), Box::new(body))
        }
        Expr::App(f, a) => Expr::app(subst_in(f, theta, range_fv), subst_in(a, theta, range_fv)),
        Expr::Case(s, bs) => Expr::Case(
            Box::new(subst_in(s, theta, range_fv)),
            bs.iter()
                .map(|(p, b)| {
                    let (names, scope) = enter_binders(&p.vars, b, theta, range_fv);
                    let body = match scope {
                        Some(s) => subst_in(b, &s.theta, &s.range_fv),
                        None => b.clone(),
                    };
                    (super::Pattern::new(p.con.clone(), names), body)
                })
                .collect(),
        ),
        Expr::Let(x, e0, e1) => {
            let bound = subst_in(e0, theta, range_fv);
            let (names, scope) = enter_binders(std::slice::from_ref(x), e1, theta, range_fv);
            let body = match scope {
                Some(s) => subst_in(e1, &s.theta, &s.range_fv),
                None => (**e1).clone(),
            };
            Expr::Let(
                names.into_iter().next().unwrap(),
                Box::new(bound),
                Box::new(body),
            )
        }
    }
}

/// Bound-variable environments for comparing two terms side by side.
#[derive(Default)]
struct Binders<'a> {
    left: Vec<&'a str>,
    right: Vec<&'a str>,
}

impl<'a> Binders<'a> {
    fn push(&mut self, l: &'a str, r: &'a str) {
        self.left.push(l);
        self.right.push(r);
    }

    fn pop(&mut self, n: usize) {
        self.left.truncate(self.left.len() - n);
        self.right.truncate(self.right.len() - n);
    }

    fn lookup_left(&self, x: &str) -> Option<usize> {
        self.left.iter().rposition(|b| *b == x)
    }

    fn lookup_right(&self, y: &str) -> Option<usize> {
        self.right.iter().rposition(|b| *b == y)
    }
}

/// How free occurrences on either side are related.
trait FreeRel {
    fn var(&mut self, l: &str, r: &str) -> bool;
    fn fun(&mut self, l: &str, r: &str) -> bool;
}

struct Identity;

impl FreeRel for Identity {
    fn var(&mut self, l: &str, r: &str) -> bool {
        l == r
    }
    fn fun(&mut self, l: &str, r: &str) -> bool {
        l == r
    }
}

/// Function names relate through a bijection built on the fly.
#[derive(Default)]
struct FunBijection {
    forward: BTreeMap<Name, Name>,
    backward: BTreeMap<Name, Name>,
    discovered: Vec<(Name, Name)>,
}

impl FreeRel for FunBijection {
    fn var(&mut self, l: &str, r: &str) -> bool {
        l == r
    }
    fn fun(&mut self, l: &str, r: &str) -> bool {
        match (self.forward.get(l), self.backward.get(r)) {
            (Some(r2), _) => r2 == r,
            (None, Some(_)) => false,
            (None, None) => {
                self.forward.insert(l.to_string(), r.to_string());
                self.backward.insert(r.to_string(), l.to_string());
                self.discovered.push((l.to_string(), r.to_string()));
                true
            }
        }
    }
}

/// Collects σ with `left ≡ right σ`.
#[derive(Default)]
struct RenamingMatch {
    sigma: Renaming,
}

impl FreeRel for RenamingMatch {
    fn var(&mut self, l: &str, r: &str) -> bool {
        match self.sigma.get(r) {
            Some(prev) => prev == l,
            None => {
                self.sigma.insert(r.to_string(), l.to_string());
                true
            }
        }
    }
    fn fun(&mut self, l: &str, r: &str) -> bool {
        l == r
    }
}

fn compare<'a, R: FreeRel>(l: &'a Expr, r: &'a Expr, env: &mut Binders<'a>, rel: &mut R) -> bool {
    match (l, r) {
        (Expr::Var(x), Expr::Var(y)) => match (env.lookup_left(x), env.lookup_right(y)) {
            (Some(i), Some(j)) => i == j,
            (None, None) => rel.var(x, y),
            _ => false,
        },
        (Expr::Fun(f), Expr::Fun(g)) => rel.fun(f, g),
        (Expr::Con(c, xs), Expr::Con(d, ys)) => {
            c == d
                && xs.len() == ys.len()
                && xs.iter().zip(ys).all(|(a, b)| compare(a, b, env, rel))
        }
        (Expr::Lam(x, b1), Expr::Lam(y, b2)) => {
            env.push(x, y);
            let ok = compare(b1, b2, env, rel);
            env.pop(1);
            ok
        }
        (Expr::App(f1, a1), Expr::App(f2, a2)) => {
            compare(f1, f2, env, rel) && compare(a1, a2, env, rel)
        }
        (Expr::Case(s1, bs1), Expr::Case(s2, bs2)) => {
            if bs1.len() != bs2.len() || !compare(s1, s2, env, rel) {
                return false;
            }
            bs1.iter().zip(bs2).all(|((p1, e1), (p2, e2))| {
                if p1.con != p2.con || p1.vars.len() != p2.vars.len() {
                    return false;
                }
                for (x, y) in p1.vars.iter().zip(&p2.vars) {
                    env.push(x, y);
                }
                let ok = compare(e1, e2, env, rel);
                env.pop(p1.vars.len());
                ok
            })
        }
        (Expr::Let(x, a1, b1), Expr::Let(y, a2, b2)) => {
            if !compare(a1, a2, env, rel) {
                return false;
            }
            env.push(x, y);
            let ok = compare(b1, b2, env, rel);
            env.pop(1);
            ok
        }
        _ => false,
    }
}

/// `e1 ≡ e2`: equal up to the names of bound variables.
pub fn alpha_eq(e1: &Expr, e2: &Expr) -> bool {
    compare(e1, e2, &mut Binders::default(), &mut Identity)
}

/// α-equivalence of whole programs. Function names and parameters are
/// binders of the `where` clause, so consistently renamed functions compare
/// equal; the inputs (free variables of `main`) must match by name.
pub fn alpha_eq_program(p1: &Program, p2: &Program) -> bool {
    if p1.defs.len() != p2.defs.len() {
        return false;
    }
    let mut funs = FunBijection::default();
    if !compare(&p1.main, &p2.main, &mut Binders::default(), &mut funs) {
        return false;
    }
    let mut checked = 0;
    loop {
        while checked < funs.discovered.len() {
            let (f, g) = funs.discovered[checked].clone();
            checked += 1;
            let (Some(d1), Some(d2)) = (p1.def(&f), p2.def(&g)) else {
                return false;
            };
            if d1.params.len() != d2.params.len() {
                return false;
            }
            let mut env = Binders::default();
            for (x, y) in d1.params.iter().zip(&d2.params) {
                env.push(x, y);
            }
            if !compare(&d1.body, &d2.body, &mut env, &mut funs) {
                return false;
            }
        }
        // Definitions unreachable from main pair up in declaration order.
        let l = p1.defs.iter().find(|d| !funs.forward.contains_key(&d.name));
        let r = p2
            .defs
            .iter()
            .find(|d| !funs.backward.contains_key(&d.name));
        match (l, r) {
            (None, None) => return true,
            (Some(d1), Some(d2)) => {
                funs.fun(&d1.name, &d2.name);
            }
            _ => return false,
        }
    }
}

/// Finds σ over the free variables of `general` such that
/// `specific ≡ general σ`. Scans left to right, so the result is unique.
pub fn match_renaming(specific: &Expr, general: &Expr) -> Option<Renaming> {
    let mut m = RenamingMatch::default();
    compare(specific, general, &mut Binders::default(), &mut m).then_some(m.sigma)
}
