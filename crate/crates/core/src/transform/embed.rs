use std::collections::HashMap;

use crate::syntax::Expr;

/// Homeomorphic embedding `e1 ⊴ e2`: `e1` can be obtained from `e2` by
/// deleting parts of it. Any variable embeds in any variable.
pub fn embeds(e1: &Expr, e2: &Expr) -> bool {
    Embedding::default().embeds(e1, e2)
}

/// Results per pair of subterms; without them numerals like `100` make the
/// search exponential.
#[derive(Default)]
struct Embedding {
    seen: HashMap<(*const Expr, *const Expr), bool>,
}

impl Embedding {
    fn embeds(&mut self, e1: &Expr, e2: &Expr) -> bool {
        let key = (e1 as *const Expr, e2 as *const Expr);
        if let Some(&r) = self.seen.get(&key) {
            return r;
        }
        let r = self.couples(e1, e2) || self.dives(e1, e2);
        self.seen.insert(key, r);
        r
    }

    fn dives(&mut self, e1: &Expr, e2: &Expr) -> bool {
        match e2 {
            Expr::Var(_) | Expr::Fun(_) => false,
            Expr::Con(_, args) => args.iter().any(|a| self.embeds(e1, a)),
            Expr::Lam(_, b) => self.embeds(e1, b),
            Expr::App(f, a) => self.embeds(e1, f) || self.embeds(e1, a),
            Expr::Case(s, bs) => self.embeds(e1, s) || bs.iter().any(|(_, b)| self.embeds(e1, b)),
            Expr::Let(_, e0, b) => self.embeds(e1, e0) || self.embeds(e1, b),
        }
    }

    fn couples(&mut self, e1: &Expr, e2: &Expr) -> bool {
        match (e1, e2) {
            (Expr::Var(_), Expr::Var(_)) => true,
            (Expr::Fun(f), Expr::Fun(g)) => f == g,
            (Expr::Con(c, xs), Expr::Con(d, ys)) => {
                c == d && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| self.embeds(x, y))
            }
            (Expr::Lam(_, b1), Expr::Lam(_, b2)) => self.embeds(b1, b2),
            (Expr::App(f1, a1), Expr::App(f2, a2)) => self.embeds(f1, f2) && self.embeds(a1, a2),
            (Expr::Case(s1, bs1), Expr::Case(s2, bs2)) => {
                bs1.len() == bs2.len()
                    && bs1
                        .iter()
                        .zip(bs2)
                        .all(|((p, _), (q, _))| p.con == q.con && p.vars.len() == q.vars.len())
                    && self.embeds(s1, s2)
                    && bs1
                        .iter()
                        .zip(bs2)
                        .all(|((_, b1), (_, b2))| self.embeds(b1, b2))
            }
            (Expr::Let(_, x0, x1), Expr::Let(_, y0, y1)) => {
                self.embeds(x0, y0) && self.embeds(x1, y1)
            }
            _ => false,
        }
    }
}
