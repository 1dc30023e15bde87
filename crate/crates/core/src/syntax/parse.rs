use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use super::{free_vars, Expr, FunDef, Name, Pattern, Program};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("constructor {con} used with {found} argument(s), but its arity is {expected}")]
    ArityMismatch {
        con: Name,
        expected: usize,
        found: usize,
    },
    #[error("variable {0} appears more than once in a pattern")]
    DuplicatePatternVar(Name),
    #[error("parameter {0} appears more than once in a function header")]
    DuplicateParam(Name),
    #[error("function {0} is defined more than once")]
    DuplicateFunction(Name),
    #[error("overlapping case branches: constructor {0} matched twice")]
    OverlappingBranches(Name),
    #[error("non-exhaustive case: missing constructor(s) {}", .0.join(", "))]
    NonExhaustive(Vec<Name>),
    #[error("variable {var} is free in the body of {fun}")]
    UnboundVariable { fun: Name, var: Name },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
struct Pos {
    line: usize,
    col: usize,
}

impl Pos {
    fn error(self, kind: ParseErrorKind) -> ParseError {
        ParseError {
            line: self.line,
            col: self.col,
            kind,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Con(String),
    Nat(usize),
    Where,
    Let,
    In,
    Case,
    Of,
    Lambda,
    Arrow,
    Equals,
    Semi,
    Bar,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) | Tok::Con(s) => write!(f, "`{s}`"),
            Tok::Nat(n) => write!(f, "`{n}`"),
            Tok::Where => f.write_str("`where`"),
            Tok::Let => f.write_str("`let`"),
            Tok::In => f.write_str("`in`"),
            Tok::Case => f.write_str("`case`"),
            Tok::Of => f.write_str("`of`"),
            Tok::Lambda => f.write_str("`\\`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::Equals => f.write_str("`=`"),
            Tok::Semi => f.write_str("`;`"),
            Tok::Bar => f.write_str("`|`"),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

fn lex(src: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let mut toks = Vec::new();
    let mut chars = src.chars().peekable();
    let mut pos = Pos { line: 1, col: 1 };
    let advance = |c: char, pos: &mut Pos| {
        if c == '\n' {
            pos.line += 1;
            pos.col = 1;
        } else {
            pos.col += 1;
        }
    };
    while let Some(&c) = chars.peek() {
        let start = pos;
        if c.is_whitespace() {
            chars.next();
            advance(c, &mut pos);
            continue;
        }
        if c == '-' {
            chars.next();
            advance(c, &mut pos);
            match chars.peek() {
                Some('>') => {
                    chars.next();
                    advance('>', &mut pos);
                    toks.push((Tok::Arrow, start));
                }
                Some('-') => {
                    // line comment
                    while let Some(&c) = chars.peek() {
                        if c == '\n' {
                            break;
                        }
                        chars.next();
                        advance(c, &mut pos);
                    }
                }
                _ => return Err(start.error(ParseErrorKind::Syntax("unexpected `-`".into()))),
            }
            continue;
        }
        let single = match c {
            '\\' | 'λ' => Some(Tok::Lambda),
            '=' => Some(Tok::Equals),
            ';' => Some(Tok::Semi),
            '|' => Some(Tok::Bar),
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(t) = single {
            chars.next();
            advance(c, &mut pos);
            toks.push((t, start));
            continue;
        }
        if c.is_ascii_digit() {
            let mut s = String::new();
            while let Some(&d) = chars.peek() {
                if !d.is_ascii_digit() {
                    break;
                }
                s.push(d);
                chars.next();
                advance(d, &mut pos);
            }
            let n = s.parse().map_err(|_| {
                start.error(ParseErrorKind::Syntax(format!("numeral {s} is too large")))
            })?;
            toks.push((Tok::Nat(n), start));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(&d) = chars.peek() {
                if !is_ident_char(d) {
                    break;
                }
                s.push(d);
                chars.next();
                advance(d, &mut pos);
            }
            let tok = match s.as_str() {
                "where" => Tok::Where,
                "let" => Tok::Let,
                "in" => Tok::In,
                "case" => Tok::Case,
                "of" => Tok::Of,
                _ if s.starts_with(|c: char| c.is_uppercase()) => Tok::Con(s),
                _ => Tok::Ident(s),
            };
            toks.push((tok, start));
            continue;
        }
        return Err(start.error(ParseErrorKind::Syntax(format!(
            "unexpected character `{c}`"
        ))));
    }
    toks.push((Tok::Eof, pos));
    Ok(toks)
}

/// A case expression's constructor set, kept for the exhaustiveness pass.
struct CaseSite {
    pos: Pos,
    cons: Vec<Name>,
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    arities: BTreeMap<Name, usize>,
    cases: Vec<CaseSite>,
}

impl Parser {
    fn new(toks: Vec<(Tok, Pos)>) -> Self {
        Parser {
            toks,
            at: 0,
            arities: BTreeMap::from([("Zero".to_string(), 0), ("Succ".to_string(), 1)]),
            cases: Vec::new(),
        }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.at + k).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&format!("expected {want}")))
        }
    }

    fn unexpected(&self, what: &str) -> ParseError {
        self.pos().error(ParseErrorKind::Syntax(format!(
            "{what}, found {}",
            self.peek()
        )))
    }

    fn ident(&mut self) -> Result<Name, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.unexpected("expected a variable")),
        }
    }

    fn check_arity(&mut self, con: &str, found: usize, pos: Pos) -> Result<(), ParseError> {
        match self.arities.get(con) {
            Some(&expected) if expected != found => Err(pos.error(ParseErrorKind::ArityMismatch {
                con: con.to_string(),
                expected,
                found,
            })),
            Some(_) => Ok(()),
            None => {
                self.arities.insert(con.to_string(), found);
                Ok(())
            }
        }
    }

    /// Whether the tokens ahead read `ident ident* =`, i.e. a new function
    /// header rather than more application arguments. A body ending in a
    /// bare variable needs a `;` before the next header.
    fn at_header(&self) -> bool {
        let mut k = 0;
        loop {
            match self.peek_at(k) {
                Tok::Ident(_) => k += 1,
                Tok::Equals => return k > 0,
                _ => return false,
            }
        }
    }

    fn program(&mut self) -> Result<(Expr, Vec<(FunDef, Pos)>), ParseError> {
        let main = self.expr()?;
        self.expect(Tok::Where)?;
        let mut defs = Vec::new();
        while *self.peek() != Tok::Eof {
            let pos = self.pos();
            let name = self.ident()?;
            let mut params = Vec::new();
            while let Tok::Ident(_) = self.peek() {
                let p = self.ident()?;
                if params.contains(&p) {
                    return Err(pos.error(ParseErrorKind::DuplicateParam(p)));
                }
                params.push(p);
            }
            self.expect(Tok::Equals)?;
            let body = self.expr()?;
            if *self.peek() == Tok::Semi {
                self.bump();
            }
            defs.push((FunDef::new(name, params, body), pos));
        }
        Ok((main, defs))
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Tok::Lambda => {
                self.bump();
                let mut xs = vec![self.ident()?];
                while let Tok::Ident(_) = self.peek() {
                    xs.push(self.ident()?);
                }
                self.expect(Tok::Arrow)?;
                let body = self.expr()?;
                Ok(xs.into_iter().rev().fold(body, |b, x| Expr::lam(x, b)))
            }
            Tok::Let => {
                self.bump();
                let x = self.ident()?;
                self.expect(Tok::Equals)?;
                let bound = self.expr()?;
                self.expect(Tok::In)?;
                let body = self.expr()?;
                Ok(Expr::let_(x, bound, body))
            }
            Tok::Case => {
                let pos = self.pos();
                self.bump();
                let sel = self.expr()?;
                self.expect(Tok::Of)?;
                self.expect(Tok::LBrace)?;
                let mut branches = vec![self.branch()?];
                while *self.peek() == Tok::Bar {
                    self.bump();
                    branches.push(self.branch()?);
                }
                self.expect(Tok::RBrace)?;
                let mut cons: Vec<Name> = Vec::new();
                for (p, _) in &branches {
                    if cons.contains(&p.con) {
                        return Err(pos.error(ParseErrorKind::OverlappingBranches(p.con.clone())));
                    }
                    cons.push(p.con.clone());
                }
                self.cases.push(CaseSite { pos, cons });
                Ok(Expr::case(sel, branches))
            }
            _ => {
                let head = self.aexpr()?;
                let mut args = Vec::new();
                while self.starts_aexpr() && !self.at_header() {
                    let arg = match self.aexpr()? {
                        Head::Con(c, pos) => {
                            self.check_arity(&c, 0, pos)?;
                            Expr::con(c, vec![])
                        }
                        Head::Expr(e) => e,
                    };
                    args.push(arg);
                }
                match head {
                    Head::Con(c, pos) => {
                        self.check_arity(&c, args.len(), pos)?;
                        Ok(Expr::con(c, args))
                    }
                    Head::Expr(e) => Ok(Expr::apps(e, args)),
                }
            }
        }
    }

    fn starts_aexpr(&self) -> bool {
        matches!(
            self.peek(),
            Tok::Ident(_) | Tok::Con(_) | Tok::Nat(_) | Tok::LParen
        )
    }

    fn aexpr(&mut self) -> Result<Head, ParseError> {
        let pos = self.pos();
        let head = match self.peek().clone() {
            Tok::Ident(x) => Head::Expr(Expr::Var(x)),
            Tok::Con(c) => Head::Con(c, pos),
            Tok::Nat(n) => Head::Expr(Expr::nat(n)),
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                return Ok(Head::Expr(e));
            }
            _ => return Err(self.unexpected("expected an expression")),
        };
        self.bump();
        Ok(head)
    }

    fn branch(&mut self) -> Result<(Pattern, Expr), ParseError> {
        let pos = self.pos();
        let Tok::Con(con) = self.peek().clone() else {
            return Err(self.unexpected("expected a constructor pattern"));
        };
        self.bump();
        let mut vars: Vec<Name> = Vec::new();
        while let Tok::Ident(_) = self.peek() {
            let v = self.ident()?;
            if vars.contains(&v) {
                return Err(pos.error(ParseErrorKind::DuplicatePatternVar(v)));
            }
            vars.push(v);
        }
        self.check_arity(&con, vars.len(), pos)?;
        self.expect(Tok::Arrow)?;
        let body = self.expr()?;
        Ok((Pattern::new(con, vars), body))
    }
}

/// An application head: argument count is checked against the arity when
/// the head is a constructor.
enum Head {
    Con(Name, Pos),
    Expr(Expr),
}

/// Turns unbound lowercase identifiers naming a definition into calls.
fn resolve(e: &Expr, funs: &BTreeSet<Name>, bound: &mut Vec<Name>) -> Expr {
    match e {
        Expr::Var(x) if !bound.contains(x) && funs.contains(x) => Expr::Fun(x.clone()),
        Expr::Var(_) | Expr::Fun(_) => e.clone(),
        Expr::Con(c, args) => Expr::Con(
            c.clone(),
            args.iter().map(|a| resolve(a, funs, bound)).collect(),
        ),
        Expr::Lam(x, b) => {
            bound.push(x.clone());
            let b = resolve(b, funs, bound);
            bound.pop();
            Expr::lam(x.clone(), b)
        }
        Expr::App(f, a) => Expr::app(resolve(f, funs, bound), resolve(a, funs, bound)),
        Expr::Case(s, bs) => Expr::case(
            resolve(s, funs, bound),
            bs.iter()
                .map(|(p, b)| {
                    let n = bound.len();
                    bound.extend(p.vars.iter().cloned());
                    let b = resolve(b, funs, bound);
                    bound.truncate(n);
                    (p.clone(), b)
                })
                .collect(),
        ),
        Expr::Let(x, e0, e1) => {
            let e0 = resolve(e0, funs, bound);
            bound.push(x.clone());
            let e1 = resolve(e1, funs, bound);
            bound.pop();
            Expr::let_(x.clone(), e0, e1)
        }
    }
}

/// Constructors scrutinised together form a family; every case must cover
/// its whole family.
fn check_exhaustive(cases: &[CaseSite]) -> Result<(), ParseError> {
    let mut parent: BTreeMap<Name, Name> = BTreeMap::new();
    fn find(parent: &mut BTreeMap<Name, Name>, x: &str) -> Name {
        let p = parent
            .entry(x.to_string())
            .or_insert_with(|| x.to_string())
            .clone();
        if p == x {
            return p;
        }
        let root = find(parent, &p);
        parent.insert(x.to_string(), root.clone());
        root
    }
    let union = |parent: &mut BTreeMap<Name, Name>, a: &str, b: &str| {
        let ra = find(parent, a);
        let rb = find(parent, b);
        if ra != rb {
            parent.insert(ra, rb);
        }
    };
    union(&mut parent, "Zero", "Succ");
    for site in cases {
        for c in &site.cons[1..] {
            union(&mut parent, &site.cons[0], c);
        }
    }
    let all: Vec<Name> = parent.keys().cloned().collect();
    for site in cases {
        let root = find(&mut parent, &site.cons[0]);
        let missing: Vec<Name> = all
            .iter()
            .filter(|c| !site.cons.contains(c) && find(&mut parent, c) == root)
            .cloned()
            .collect();
        if !missing.is_empty() {
            return Err(site.pos.error(ParseErrorKind::NonExhaustive(missing)));
        }
    }
    Ok(())
}

/// Parses a program in the concrete syntax.
pub fn parse(src: &str) -> Result<Program, ParseError> {
    let mut parser = Parser::new(lex(src)?);
    let (main, defs) = parser.program()?;
    check_exhaustive(&parser.cases)?;

    let mut funs = BTreeSet::new();
    for (d, pos) in &defs {
        if !funs.insert(d.name.clone()) {
            return Err(pos.error(ParseErrorKind::DuplicateFunction(d.name.clone())));
        }
    }
    let main = resolve(&main, &funs, &mut Vec::new());
    let mut out = Vec::with_capacity(defs.len());
    for (d, pos) in defs {
        let mut bound = d.params.clone();
        let body = resolve(&d.body, &funs, &mut bound);
        if let Some(var) = free_vars(&body).into_iter().find(|v| !d.params.contains(v)) {
            return Err(pos.error(ParseErrorKind::UnboundVariable {
                fun: d.name.clone(),
                var,
            }));
        }
        out.push(FunDef::new(d.name, d.params, body));
    }
    Ok(Program::new(main, out))
}

/// Parses a standalone expression, with `funs` naming the callable
/// functions. Constructor arities are checked within the expression only.
pub fn parse_expr_with(src: &str, funs: &BTreeSet<Name>) -> Result<Expr, ParseError> {
    let mut parser = Parser::new(lex(src)?);
    let e = parser.expr()?;
    if *parser.peek() != Tok::Eof {
        return Err(parser.unexpected("expected end of expression"));
    }
    Ok(resolve(&e, funs, &mut Vec::new()))
}
