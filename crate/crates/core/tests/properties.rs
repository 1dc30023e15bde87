mod common;

use std::collections::BTreeSet;

use common::{
    case_free_cycle_by_enumeration, closed_term, first_order_term, open_term, prelude, with_prelude,
};
use descent::lts::{build_lts_bounded, check_folds, check_shape};
use descent::semantics::{equiv_sample, evaluate, evaluate_by_steps, Outcome};
use descent::syntax::{
    alpha_eq, alpha_eq_program, extract_args, free_vars, match_renaming, parse, pretty, rename,
    substitute, Expr, Renaming, Substitution,
};
use descent::termination::{analyze, Verdict};
use descent::transform::{distill, embeds, msg, Limits};
use proptest::prelude::*;

fn same_outcome(a: &Outcome, b: &Outcome) -> bool {
    match (a, b) {
        (Outcome::Value(x), Outcome::Value(y)) => alpha_eq(x, y),
        (Outcome::OutOfFuel, Outcome::OutOfFuel) | (Outcome::Stuck(_), Outcome::Stuck(_)) => true,
        _ => false,
    }
}

/// Every call argument in `e` is a variable.
fn calls_take_variables(e: &Expr) -> bool {
    let (head, args) = e.spine();
    let here = !matches!(head, Expr::Fun(_)) || args.iter().all(|a| matches!(a, Expr::Var(_)));
    here && match e {
        Expr::Var(_) | Expr::Fun(_) => true,
        Expr::Con(_, xs) => xs.iter().all(calls_take_variables),
        Expr::Lam(_, b) => calls_take_variables(b),
        Expr::App(f, a) => calls_take_variables(f) && calls_take_variables(a),
        Expr::Case(s, bs) => {
            calls_take_variables(s) && bs.iter().all(|(_, b)| calls_take_variables(b))
        }
        Expr::Let(_, e0, e1) => calls_take_variables(e0) && calls_take_variables(e1),
    }
}

fn theta() -> impl Strategy<Value = Substitution> {
    prop::collection::btree_map((0u8..3).prop_map(|k| format!("y{k}")), open_term(), 0..3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn alpha_eq_is_reflexive_and_symmetric(a in open_term(), b in open_term()) {
        prop_assert!(alpha_eq(&a, &a));
        prop_assert_eq!(alpha_eq(&a, &b), alpha_eq(&b, &a));
    }

    #[test]
    fn empty_substitution_is_identity(e in open_term()) {
        prop_assert_eq!(substitute(&e, &Substitution::new()), e);
    }

    #[test]
    fn substitution_free_variables(e in open_term(), th in theta()) {
        let fv = free_vars(&e);
        let mut expected: BTreeSet<String> = fv.iter().filter(|x| !th.contains_key(*x)).cloned().collect();
        for (x, t) in &th {
            if fv.contains(x) {
                expected.extend(free_vars(t));
            }
        }
        prop_assert_eq!(free_vars(&substitute(&e, &th)), expected);
    }

    #[test]
    fn substitution_commutes_with_alpha_renaming(e in open_term(), th in theta()) {
        // renaming every bound variable apart must not change the result
        let s1 = substitute(&e, &th);
        let renamed = parse(&pretty(&with_prelude(e.clone()))).unwrap().main;
        prop_assert!(alpha_eq(&substitute(&renamed, &th), &s1));
    }

    #[test]
    fn renamings_are_matched(e in open_term(), targets in prop::collection::vec("[a-c][0-9]", 3)) {
        // an injective renaming of the free variables
        let fv: Vec<String> = free_vars(&e).into_iter().collect();
        let mut seen = BTreeSet::new();
        let sigma: Renaming = fv
            .iter()
            .zip(&targets)
            .filter(|(_, t)| seen.insert((*t).clone()))
            .map(|(x, t)| (x.clone(), t.clone()))
            .collect();
        prop_assume!(sigma.len() == fv.len());
        let specific = rename(&e, &sigma);
        let found = match_renaming(&specific, &e);
        prop_assert!(found.is_some(), "{} is a renaming of {}", specific, e);
        prop_assert!(alpha_eq(&rename(&e, &found.unwrap()), &specific));
    }

    #[test]
    fn match_renaming_is_sound(a in open_term(), b in open_term()) {
        if let Some(sigma) = match_renaming(&a, &b) {
            prop_assert!(alpha_eq(&rename(&b, &sigma), &a));
        }
    }

    #[test]
    fn extract_args_is_idempotent_and_names_arguments(e in open_term()) {
        let once = extract_args(&with_prelude(e));
        prop_assert!(calls_take_variables(&once.main));
        prop_assert!(once.defs.iter().all(|d| calls_take_variables(&d.body)));
        prop_assert!(alpha_eq_program(&extract_args(&once), &once));
    }

    #[test]
    fn extract_args_preserves_evaluation(e in closed_term()) {
        let p = with_prelude(e);
        let q = extract_args(&p);
        let a = evaluate(&p.main, &p.definitions(), 2_000);
        let b = evaluate(&q.main, &q.definitions(), 4_000);
        if !matches!(a, Outcome::OutOfFuel) && !matches!(b, Outcome::OutOfFuel) {
            prop_assert!(same_outcome(&a, &b) || matches!((&a, &b), (Outcome::Value(_), Outcome::Value(_))),
                "{} vs {}", a, b);
            prop_assert_eq!(matches!(a, Outcome::Stuck(_)), matches!(b, Outcome::Stuck(_)));
        }
    }

    #[test]
    fn pretty_then_parse_round_trips(e in open_term()) {
        let p = with_prelude(e);
        let text = pretty(&p);
        let q = parse(&text).map_err(|err| TestCaseError::fail(format!("{err}\n{text}")))?;
        prop_assert!(alpha_eq_program(&p, &q), "{}", text);
    }

    #[test]
    fn machine_agrees_with_stepper(e in closed_term(), fuel in 0u64..400) {
        let defs = prelude().definitions();
        let a = evaluate(&e, &defs, fuel);
        let b = evaluate_by_steps(&e, &defs, fuel);
        prop_assert!(same_outcome(&a, &b), "{}: {} vs {}", e, a, b);
    }

    #[test]
    fn more_fuel_never_changes_an_answer(e in closed_term(), fuel in 0u64..300, extra in 0u64..300) {
        let defs = prelude().definitions();
        let a = evaluate(&e, &defs, fuel);
        let b = evaluate(&e, &defs, fuel + extra);
        if !matches!(a, Outcome::OutOfFuel) {
            prop_assert!(same_outcome(&a, &b), "{}: {} vs {}", e, a, b);
        }
    }

    #[test]
    fn msg_generalizes_both_sides(a in open_term(), b in open_term()) {
        let (g, t1, t2) = msg(&a, &b);
        prop_assert!(alpha_eq(&substitute(&g, &t1), &a));
        prop_assert!(alpha_eq(&substitute(&g, &t2), &b));
        let (same, s1, s2) = msg(&a, &a);
        prop_assert_eq!(&same, &a, "{} vs {}", same, a);
        prop_assert!(s1.is_empty() && s2.is_empty());
    }

    #[test]
    fn embedding_laws(a in open_term(), b in open_term()) {
        prop_assert!(embeds(&a, &a));
        prop_assert!(embeds(&a, &Expr::con("Succ", vec![a.clone()])));
        prop_assert!(embeds(&a, &Expr::con("Cons", vec![b.clone(), a.clone()])));
        if embeds(&a, &b) {
            prop_assert!(a.size() <= b.size());
        }
    }

    #[test]
    fn transition_systems_are_well_formed(e in open_term()) {
        let p = extract_args(&with_prelude(e));
        let l = match build_lts_bounded(&p, 5_000) {
            Ok(l) => l,
            Err(_) => return Ok(()),
        };
        prop_assert_eq!(check_folds(&l), Ok(()));
        prop_assert_eq!(check_shape(&l), Ok(()));
        let blocked: Vec<bool> = (0..l.states.len()).map(|s| l.is_case(s)).collect();
        let oracle = case_free_cycle_by_enumeration(&l.successors(), &blocked, 2_000_000);
        let v = analyze(&l, true);
        if let Some(has_cycle) = oracle {
            prop_assert_eq!(has_cycle, matches!(v, Verdict::Unknown(_)));
        }
        if let Verdict::Unknown(c) = &v {
            let succ = l.successors();
            prop_assert_eq!(c.states.first(), c.states.last());
            prop_assert!(c.states.windows(2).all(|w| succ[w[0]].contains(&w[1])));
            prop_assert!(c.states.iter().all(|&s| !l.is_case(s)));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn distillation_preserves_meaning(e in first_order_term()) {
        let p = with_prelude(e);
        let limits = Limits::parse("depth=60,gens=20,defs=300").unwrap();
        if let Ok(r) = distill(&p, limits) {
            let rep = equiv_sample(&p, &r, 1, 20, 20_000).unwrap();
            prop_assert!(rep.is_clean(), "{}\n=>\n{}\n{:?}", pretty(&p), pretty(&r), rep.disagreements);
        }
    }
}
