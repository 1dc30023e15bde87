mod common;

use common::{corpus, corpus_names, corpus_src};
use descent::lts::{build_lts, to_dot, to_json};
use descent::pipeline::{check_source, Options};
use descent::syntax::{alpha_eq_program, extract_args, parse, pretty};
use descent::termination::{report, to_json as verdict_json};

#[test]
fn every_program_round_trips_through_the_printer() {
    for name in corpus_names() {
        let p = corpus(&name);
        let q = parse(&pretty(&p)).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(alpha_eq_program(&p, &q), "{name}");
    }
}

#[test]
fn pipeline_is_deterministic() {
    for name in corpus_names() {
        let src = corpus_src(&name);
        let run = || {
            let c = check_source(&src, Options::default()).unwrap();
            (
                report(&c.verdict, c.lts.as_ref()),
                serde_json::to_string(&verdict_json(&c.verdict)).unwrap(),
            )
        };
        assert_eq!(run(), run(), "{name}");
    }
}

#[test]
fn exports_cover_every_state_and_edge() {
    for name in corpus_names() {
        let l = build_lts(&extract_args(&corpus(&name))).unwrap();
        let j = to_json(&l);
        assert_eq!(j.states.len(), l.states.len(), "{name}");
        assert_eq!(j.transitions.len(), l.transitions.len(), "{name}");
        assert_eq!(j.folds.len(), l.folds.len(), "{name}");
        let dot = to_dot(&l);
        assert_eq!(dot.matches("style=dashed").count(), l.folds.len(), "{name}");
    }
}
