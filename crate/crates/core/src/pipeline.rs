//! The whole prover: parse, name arguments, distill, check distilled form,
//! build the folded transition system and analyze it.

use thiserror::Error;

use crate::distilled::check_distilled;
use crate::lts::{build_lts, Lts, LtsError};
use crate::syntax::{extract_args, parse, ParseError, Program};
use crate::termination::{analyze, Verdict};
use crate::transform::{distill, DistillError, Limits};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PipelineError {
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Lts(#[from] LtsError),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Options {
    /// Analyze the input as given instead of distilling it first.
    pub skip_distill: bool,
    pub limits: Limits,
}

/// Everything the pipeline produced on the way to its verdict.
#[derive(Clone, Debug)]
pub struct Checked {
    /// The program that was analyzed: the residual, or the input itself with
    /// `skip_distill`. `None` when distillation failed without a residual.
    pub program: Option<Program>,
    /// `None` when the analyzed program is not in distilled form.
    pub lts: Option<Lts>,
    pub verdict: Verdict,
}

/// Runs the pipeline on source text.
pub fn check_source(src: &str, opts: Options) -> Result<Checked, PipelineError> {
    check_program(&parse(src)?, opts)
}

/// Runs the pipeline on a parsed program.
pub fn check_program(p: &Program, opts: Options) -> Result<Checked, PipelineError> {
    let p = extract_args(p);
    let target = if opts.skip_distill {
        p
    } else {
        match distill(&p, opts.limits) {
            Ok(r) => r,
            Err(e) => return Ok(distill_failure(e)),
        }
    };
    match check_distilled(&target) {
        Ok(()) => {
            let lts = build_lts(&target)?;
            let verdict = analyze(&lts, true);
            Ok(Checked {
                program: Some(target),
                lts: Some(lts),
                verdict,
            })
        }
        Err(violations) => Ok(Checked {
            program: Some(target),
            lts: None,
            verdict: Verdict::not_distilled(violations),
        }),
    }
}

fn distill_failure(e: DistillError) -> Checked {
    let (reason, program, violations) = match e {
        // the violations are listed separately
        DistillError::NotDistillable {
            reason: None,
            violations,
            residual,
        } => (
            "distillation failed: residual program is not in distilled form".to_string(),
            residual.map(|r| *r),
            violations,
        ),
        e => (format!("distillation failed: {e}"), None, Vec::new()),
    };
    Checked {
        program,
        lts: None,
        verdict: Verdict::NotApplicable { reason, violations },
    }
}
