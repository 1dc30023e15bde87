use std::fmt::Write;

use super::{Expr, Program};

/// Renders a program in the concrete syntax accepted by [`super::parse`].
pub fn pretty(p: &Program) -> String {
    let mut out = format!("{} where", pretty_expr(&p.main));
    for d in &p.defs {
        out.push('\n');
        out.push_str(&d.name);
        for x in &d.params {
            out.push(' ');
            out.push_str(x);
        }
        let _ = write!(out, " = {};", pretty_expr(&d.body));
    }
    out
}

pub fn pretty_expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(e, &mut out);
    out
}

fn needs_parens_as_arg(e: &Expr) -> bool {
    match e {
        Expr::Var(_) | Expr::Fun(_) => false,
        Expr::Con(_, args) => !args.is_empty() && e.as_nat().is_none(),
        _ => true,
    }
}

fn write_atom(e: &Expr, out: &mut String) {
    if needs_parens_as_arg(e) {
        out.push('(');
        write_expr(e, out);
        out.push(')');
    } else {
        write_expr(e, out);
    }
}

fn write_expr(e: &Expr, out: &mut String) {
    match e {
        Expr::Var(x) | Expr::Fun(x) => out.push_str(x),
        Expr::Con(c, args) => {
            if let Some(n) = e.as_nat().filter(|&n| n > 0) {
                let _ = write!(out, "{n}");
                return;
            }
            out.push_str(c);
            for a in args {
                out.push(' ');
                write_atom(a, out);
            }
        }
        Expr::Lam(..) => {
            out.push('\\');
            let mut cur = e;
            let mut first = true;
            while let Expr::Lam(x, b) = cur {
                if !first {
                    out.push(' ');
                }
                first = false;
                out.push_str(x);
                cur = b;
            }
            out.push_str(" -> ");
            write_expr(cur, out);
        }
        Expr::App(..) => {
            let (head, args) = e.spine();
            match head {
                Expr::Var(_) | Expr::Fun(_) => write_expr(head, out),
                _ => {
                    out.push('(');
                    write_expr(head, out);
                    out.push(')');
                }
            }
            for a in args {
                out.push(' ');
                write_atom(a, out);
            }
        }
        Expr::Case(sel, bs) => {
            out.push_str("case ");
            match **sel {
                Expr::Lam(..) | Expr::Let(..) | Expr::Case(..) => write_atom(sel, out),
                _ => write_expr(sel, out),
            }
            out.push_str(" of { ");
            for (i, (p, b)) in bs.iter().enumerate() {
                if i > 0 {
                    out.push_str(" | ");
                }
                let _ = write!(out, "{p} -> ");
                write_expr(b, out);
            }
            out.push_str(" }");
        }
        Expr::Let(x, e0, e1) => {
            let _ = write!(out, "let {x} = ");
            write_expr(e0, out);
            out.push_str(" in ");
            write_expr(e1, out);
        }
    }
}
