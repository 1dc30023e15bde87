use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use descent::distilled::check_distilled;
use descent::lts::{self, build_lts, Lts};
use descent::pipeline::{check_program, Options};
use descent::semantics::{equiv_sample, evaluate_deep, Outcome};
use descent::syntax::{extract_args, parse, parse_expr_with, pretty, Program, Substitution};
use descent::termination::{self, Verdict};
use descent::transform::{distill, Limits};

/// Termination prover for a small call-by-name functional language.
#[derive(Parser)]
#[command(name = "descent", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Distill, build the transition system and decide termination.
    /// Exits 0 when the program is proved terminating, 1 otherwise.
    Check(Common),
    /// Print the distilled program.
    Distill(Common),
    /// Print the folded transition system.
    Lts(Common),
    /// Evaluate the main expression.
    Eval(Common),
    /// Check that a program is in distilled form.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    /// Source file.
    file: PathBuf,
    /// Use the program as given instead of distilling it.
    #[arg(long)]
    skip_distill: bool,
    /// Reduction steps for `eval` and for equivalence sampling.
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    fuel: u64,
    /// Distiller limits as `depth=N,gens=N,defs=N`.
    #[arg(long, value_parser = Limits::parse)]
    limits: Option<Limits>,
    /// Output format; `dot` is only valid for `lts`.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Input bindings for `eval` as `name=value,...`; numerals stand for
    /// `Succ`/`Zero` terms.
    #[arg(long)]
    input: Vec<String>,
    /// Seed for equivalence sampling.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// With `distill`, compare the residual with the source on this many
    /// random inputs and report on stderr.
    #[arg(long, default_value_t = 0)]
    samples: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Dot,
}

impl Common {
    fn options(&self) -> Options {
        Options {
            skip_distill: self.skip_distill,
            limits: self.limits.unwrap_or_default(),
        }
    }

    fn format(&self, allowed: &[Format], default: Format) -> Result<Format> {
        let f = self.format.unwrap_or(default);
        if !allowed.contains(&f) {
            bail!("--format dot is only valid for the lts command");
        }
        Ok(f)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out = String::new();
    match run(cli.command, &mut out) {
        Ok(code) => {
            // a closed pipe, as in `descent check f.hl | head`, is not an error
            let _ = std::io::stdout().lock().write_all(out.as_bytes());
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load(path: &Path) -> Result<Program> {
    let src =
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse(&src).map_err(|e| anyhow!("{}:{e}", path.display()))
}

/// Runs a command, collecting its standard output in `out`.
fn run(cmd: Command, out: &mut String) -> Result<u8> {
    match cmd {
        Command::Check(c) => check(&c, out),
        Command::Distill(c) => distill_cmd(&c, out),
        Command::Lts(c) => lts_cmd(&c, out),
        Command::Eval(c) => eval(&c, out),
        Command::Validate(c) => validate(&c, out),
    }
}

fn exit_code(v: &Verdict) -> u8 {
    match v {
        Verdict::Terminates(_) => 0,
        Verdict::Unknown(_) | Verdict::NotApplicable { .. } => 1,
    }
}

fn check(c: &Common, out: &mut String) -> Result<u8> {
    let format = c.format(&[Format::Text, Format::Json], Format::Text)?;
    let p = load(&c.file)?;
    let checked = check_program(&p, c.options())?;
    match format {
        Format::Json => writeln!(
            out,
            "{}",
            serde_json::to_string_pretty(&termination::to_json(&checked.verdict))?
        ),
        _ => write!(
            out,
            "{}",
            termination::report(&checked.verdict, checked.lts.as_ref())
        ),
    }?;
    Ok(exit_code(&checked.verdict))
}

/// The program to show for `distill` and `lts`: the residual, or the input
/// itself with `--skip-distill`.
fn target(c: &Common) -> Result<Program> {
    let p = extract_args(&load(&c.file)?);
    if c.skip_distill {
        return Ok(p);
    }
    let r = distill(&p, c.limits.unwrap_or_default())?;
    if c.samples > 0 {
        let rep = equiv_sample(&p, &r, c.seed, c.samples, c.fuel)?;
        eprintln!(
            "equivalence: {} samples, {} agree, {} inconclusive, {} disagree",
            rep.samples,
            rep.agreements,
            rep.inconclusive,
            rep.disagreements.len()
        );
        for d in &rep.disagreements {
            eprintln!("  {:?}: {} vs {}", d.input, d.out1, d.out2);
        }
    }
    Ok(r)
}

fn distill_cmd(c: &Common, out: &mut String) -> Result<u8> {
    let format = c.format(&[Format::Text, Format::Json], Format::Text)?;
    let r = target(c)?;
    match format {
        Format::Json => writeln!(out, "{}", json!({ "program": pretty(&r) })),
        _ => writeln!(out, "{}", pretty(&r).trim_end()),
    }?;
    Ok(0)
}

fn lts_cmd(c: &Common, out: &mut String) -> Result<u8> {
    let format = c.format(&[Format::Text, Format::Json, Format::Dot], Format::Dot)?;
    let l = build_lts(&target(c)?)?;
    match format {
        Format::Dot => write!(out, "{}", lts::to_dot(&l)),
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&lts::to_json(&l))?),
        Format::Text => write!(out, "{}", listing(&l)),
    }?;
    Ok(0)
}

fn listing(l: &Lts) -> String {
    let mut out = String::new();
    for s in &l.states {
        match &s.expr {
            Some(e) => writeln!(out, "s{} {:?} `{e}`", s.id, s.kind),
            None => writeln!(out, "s{} {:?}", s.id, s.kind),
        }
        .unwrap();
        for t in l.out_transitions(s.id) {
            writeln!(out, "  --{}--> s{}", t.action, t.to).unwrap();
        }
        for f in l.out_folds(s.id) {
            let sigma: Vec<String> = f.sigma.iter().map(|(k, v)| format!("{k}↦{v}")).collect();
            writeln!(out, "  ==fold {{{}}}==> s{}", sigma.join(", "), f.to).unwrap();
        }
    }
    out
}

/// Splits `a=1,b=Cons 1 Nil` at commas outside brackets.
fn bindings(specs: &[String]) -> Vec<String> {
    let mut out = Vec::new();
    for spec in specs {
        let (mut depth, mut start) = (0i32, 0);
        for (i, ch) in spec.char_indices() {
            match ch {
                '(' | '{' => depth += 1,
                ')' | '}' => depth -= 1,
                ',' if depth == 0 => {
                    out.push(spec[start..i].to_string());
                    start = i + 1;
                }
                _ => {}
            }
        }
        out.push(spec[start..].to_string());
    }
    out.retain(|s| !s.trim().is_empty());
    out
}

fn eval(c: &Common, out: &mut String) -> Result<u8> {
    let format = c.format(&[Format::Text, Format::Json], Format::Text)?;
    let p = load(&c.file)?;
    let funs: BTreeSet<String> = p.defs.iter().map(|d| d.name.clone()).collect();
    let mut theta = Substitution::new();
    for b in bindings(&c.input) {
        let (name, value) = b
            .split_once('=')
            .ok_or_else(|| anyhow!("input binding `{b}` is not of the form name=value"))?;
        let value = parse_expr_with(value.trim(), &funs)
            .map_err(|e| anyhow!("input `{}`: {e}", name.trim()))?;
        theta.insert(name.trim().to_string(), value);
    }
    let missing: Vec<String> = p
        .inputs()
        .into_iter()
        .filter(|x| !theta.contains_key(x))
        .collect();
    if !missing.is_empty() {
        bail!("missing input for {}", missing.join(", "));
    }
    let main = descent::syntax::substitute(&p.main, &theta);
    let outcome = evaluate_deep(&main, &p.definitions(), c.fuel);
    match format {
        Format::Json => {
            let j = match &outcome {
                Outcome::Value(v) => json!({ "outcome": "value", "value": v.to_string() }),
                Outcome::OutOfFuel => json!({ "outcome": "out-of-fuel" }),
                Outcome::Stuck(why) => json!({ "outcome": "stuck", "reason": why }),
            };
            writeln!(out, "{j}")
        }
        _ => writeln!(out, "{outcome}"),
    }?;
    Ok(if matches!(outcome, Outcome::Value(_)) {
        0
    } else {
        1
    })
}

fn validate(c: &Common, out: &mut String) -> Result<u8> {
    let format = c.format(&[Format::Text, Format::Json], Format::Text)?;
    let p = extract_args(&load(&c.file)?);
    let violations = check_distilled(&p).err().unwrap_or_default();
    match format {
        Format::Json => {
            let j = json!({ "distilled": violations.is_empty(), "violations": violations });
            writeln!(out, "{}", serde_json::to_string_pretty(&j)?)?;
        }
        _ if violations.is_empty() => writeln!(out, "distilled")?,
        _ => {
            writeln!(out, "not distilled")?;
            for v in &violations {
                writeln!(out, "  {v}")?;
            }
        }
    }
    Ok(if violations.is_empty() { 0 } else { 1 })
}
