use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{evaluate_deep, Outcome};
use crate::syntax::{alpha_eq, substitute, Expr, Name, Program, Substitution};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Disagreement {
    pub input: BTreeMap<Name, String>,
    pub out1: String,
    pub out2: String,
}

/// Result of running two programs side by side on the same inputs.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquivReport {
    pub samples: usize,
    pub agreements: usize,
    pub disagreements: Vec<Disagreement>,
    /// At least one side ran out of fuel.
    pub inconclusive: usize,
}

impl EquivReport {
    pub fn is_clean(&self) -> bool {
        self.disagreements.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EquivError {
    #[error("second program has inputs the first lacks: {left:?} vs {right:?}")]
    InputMismatch {
        left: BTreeSet<Name>,
        right: BTreeSet<Name>,
    },
}

/// Runs both mains on each input binding and compares deep results.
pub fn equiv_on_inputs(
    p1: &Program,
    p2: &Program,
    inputs: &[Substitution],
    fuel: u64,
) -> EquivReport {
    let d1 = p1.definitions();
    let d2 = p2.definitions();
    let mut report = EquivReport::default();
    for input in inputs {
        report.samples += 1;
        let o1 = evaluate_deep(&substitute(&p1.main, input), &d1, fuel);
        let o2 = evaluate_deep(&substitute(&p2.main, input), &d2, fuel);
        let agree = match (&o1, &o2) {
            (Outcome::OutOfFuel, _) | (_, Outcome::OutOfFuel) => {
                report.inconclusive += 1;
                continue;
            }
            (Outcome::Value(v1), Outcome::Value(v2)) => alpha_eq(v1, v2),
            (Outcome::Stuck(_), Outcome::Stuck(_)) => true,
            _ => false,
        };
        if agree {
            report.agreements += 1;
        } else {
            report.disagreements.push(Disagreement {
                input: input
                    .iter()
                    .map(|(k, v)| (k.clone(), v.to_string()))
                    .collect(),
                out1: o1.to_string(),
                out2: o2.to_string(),
            });
        }
    }
    report
}

/// Differential test of two programs on `samples` random first-order
/// inputs. Sample `i` draws from its own generator seeded by `seed + i`.
/// Inputs are drawn for `p1`; `p2` may have dropped some of them.
pub fn equiv_sample(
    p1: &Program,
    p2: &Program,
    seed: u64,
    samples: usize,
    fuel: u64,
) -> Result<EquivReport, EquivError> {
    let (left, right) = (p1.inputs(), p2.inputs());
    if !right.is_subset(&left) {
        return Err(EquivError::InputMismatch { left, right });
    }
    let gen = InputGenerator::new(p1, 6);
    let inputs: Vec<Substitution> = (0..samples as u64)
        .map(|i| gen.sample(&mut ChaCha8Rng::seed_from_u64(seed.wrapping_add(i))))
        .collect();
    Ok(equiv_on_inputs(p1, p2, &inputs, fuel))
}

/// A constructor family as `(name, arity)` pairs.
pub type Family = Vec<(Name, usize)>;

fn nat_family() -> Family {
    vec![("Zero".into(), 0), ("Succ".into(), 1)]
}

/// For each input of `p`, the constructors of the first case that
/// scrutinises it, following the input through function parameters.
/// Inputs never scrutinised default to natural numbers.
pub fn infer_input_families(p: &Program) -> BTreeMap<Name, Family> {
    p.inputs()
        .into_iter()
        .map(|x| {
            let fam = scrutinising_family(p, &p.main, &x, &mut BTreeSet::new())
                .unwrap_or_else(nat_family);
            (x, fam)
        })
        .collect()
}

fn scrutinising_family(
    p: &Program,
    e: &Expr,
    x: &str,
    visited: &mut BTreeSet<(Name, usize)>,
) -> Option<Family> {
    match e {
        Expr::Var(_) | Expr::Fun(_) => None,
        Expr::Con(_, args) => args
            .iter()
            .find_map(|a| scrutinising_family(p, a, x, visited)),
        Expr::Lam(y, b) => (y != x)
            .then(|| scrutinising_family(p, b, x, visited))
            .flatten(),
        Expr::Case(sel, bs) => {
            if matches!(&**sel, Expr::Var(y) if y == x) {
                return Some(
                    bs.iter()
                        .map(|(p, _)| (p.con.clone(), p.vars.len()))
                        .collect(),
                );
            }
            scrutinising_family(p, sel, x, visited).or_else(|| {
                bs.iter()
                    .filter(|(pat, _)| !pat.vars.iter().any(|v| v == x))
                    .find_map(|(_, b)| scrutinising_family(p, b, x, visited))
            })
        }
        Expr::Let(y, e0, e1) => scrutinising_family(p, e0, x, visited).or_else(|| {
            (y != x)
                .then(|| scrutinising_family(p, e1, x, visited))
                .flatten()
        }),
        Expr::App(..) => {
            let (head, args) = e.spine();
            if let Expr::Fun(f) = head {
                if let Some(def) = p.def(f) {
                    for (i, a) in args.iter().enumerate() {
                        if matches!(a, Expr::Var(y) if y == x)
                            && i < def.params.len()
                            && visited.insert((f.clone(), i))
                        {
                            let param = def.params[i].clone();
                            if let Some(fam) = scrutinising_family(p, &def.body, &param, visited) {
                                return Some(fam);
                            }
                        }
                    }
                }
            }
            scrutinising_family(p, head, x, visited).or_else(|| {
                args.iter()
                    .find_map(|a| scrutinising_family(p, a, x, visited))
            })
        }
    }
}

/// Draws closed constructor values for a program's inputs.
#[derive(Clone, Debug)]
pub struct InputGenerator {
    families: BTreeMap<Name, Family>,
    max_depth: usize,
}

impl InputGenerator {
    pub fn new(p: &Program, max_depth: usize) -> Self {
        InputGenerator {
            families: infer_input_families(p),
            max_depth,
        }
    }

    pub fn families(&self) -> &BTreeMap<Name, Family> {
        &self.families
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Substitution {
        self.families
            .iter()
            .map(|(x, fam)| (x.clone(), self.value(fam, self.max_depth, rng)))
            .collect()
    }

    /// A value of depth at most `depth`. Constructor arguments are drawn
    /// from the same family; numerals are uniform in `0..=depth`.
    fn value<R: Rng>(&self, fam: &Family, depth: usize, rng: &mut R) -> Expr {
        if *fam == nat_family() {
            return Expr::nat(rng.gen_range(0..=depth));
        }
        let nullary: Vec<&(Name, usize)> = fam.iter().filter(|(_, a)| *a == 0).collect();
        let (c, arity) = if depth == 0 && !nullary.is_empty() {
            nullary[rng.gen_range(0..nullary.len())]
        } else {
            &fam[rng.gen_range(0..fam.len())]
        };
        if *arity > 0 && depth == 0 {
            // no way to stop inside this family
            return Expr::nat(0);
        }
        let args = (0..*arity)
            .map(|_| self.value(fam, depth - 1, rng))
            .collect();
        Expr::con(c.clone(), args)
    }
}
