#![allow(dead_code)]

pub mod enumerate;
pub mod gen;
pub mod oracles;
pub mod search;

use std::fs;
use std::path::{Path, PathBuf};

use nmdekl::parser::{parse_theory, Theory};

pub fn corpus_dir(sub: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("corpus")
        .join(sub)
}

/// `.nmdekl` files under `corpus/<sub>`, sorted by name.
pub fn corpus_files(sub: &str) -> Vec<PathBuf> {
    let mut out: Vec<PathBuf> = fs::read_dir(corpus_dir(sub))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "nmdekl"))
        .collect();
    out.sort();
    out
}

pub fn load(path: &Path) -> (String, Theory) {
    let text = fs::read_to_string(path).unwrap();
    let th = parse_theory(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    (text, th)
}

/// The kind named on a negative file's `-- expect: <kind>` line.
pub fn expected_kind(text: &str) -> String {
    text.lines()
        .next()
        .and_then(|l| l.strip_prefix("-- expect:"))
        .map(|k| k.trim().to_string())
        .expect("negative files start with `-- expect: <kind>`")
}

use nmdekl::normalize::{step_in, Env};
use nmdekl::parser::Declaration;
use nmdekl::syntax::{Context, Term};
use nmdekl::typeck::check_theory_with;

/// The strategy's reduction sequence from `t`, excluding `t`, at most `max` long.
pub fn reducts(env: &Env, t: &Term, max: usize) -> Vec<Term> {
    let mut out = Vec::new();
    let mut cur = t.clone();
    while out.len() < max {
        match step_in(env, &cur) {
            Some(next) => {
                out.push(next.clone());
                cur = next;
            }
            None => break,
        }
    }
    out
}

/// Re-checks every reduct of every typed term in an accepted theory at the
/// original type, declared types included (at their sort). Returns (reducts checked, failures).
pub fn subject_reduction(th: &Theory, max_steps: usize) -> (usize, Vec<String>) {
    let (report, checker) = check_theory_with(th, nmdekl::normalize::DEFAULT_FUEL);
    let mut checked = 0;
    let mut failures = Vec::new();
    for (loc, r) in th.decls.iter().zip(&report.decls) {
        if r.result.is_err() {
            continue;
        }
        let mut typed: Vec<(Term, Term)> = Vec::new();
        match &loc.decl {
            Declaration::Definition { ty, body, .. } => typed.push((body.clone(), ty.clone())),
            Declaration::CheckType { term, ty } => typed.push((term.clone(), ty.clone())),
            _ => {}
        }
        if let Declaration::Axiom { ty, .. }
        | Declaration::Definition { ty, .. }
        | Declaration::CheckType { ty, .. } = &loc.decl
        {
            if let Ok(sort) = checker.infer(&Context::new(), ty) {
                typed.push((ty.clone(), sort));
            }
        }
        for (term, ty) in typed {
            for red in reducts(&checker.env, &term, max_steps) {
                checked += 1;
                if let Err(e) = checker.check(&Context::new(), &red, &ty) {
                    failures.push(format!("{}: {e}", r.label));
                }
            }
        }
    }
    (checked, failures)
}
