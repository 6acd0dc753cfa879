//! Random closed μ-formulas and Kripke structures for sampling checks.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use super::formula::MuFormula;
use super::kripke::KripkeStructure;

/// A closed formula with at most `max_size` nodes over `atoms`. Fixpoint
/// variables are `X0`, `X1`, ... by nesting depth, so every formula is
/// closed and positive.
pub fn random_closed_formula(rng: &mut impl Rng, max_size: usize, atoms: &[&str]) -> MuFormula {
    let size = rng.gen_range(1..=max_size.max(1));
    build(rng, size, atoms, 0)
}

fn leaf(rng: &mut impl Rng, atoms: &[&str], depth: usize) -> MuFormula {
    let p = atoms.choose(rng).copied().unwrap_or("p");
    match rng.gen_range(0..3) {
        0 if depth > 0 => MuFormula::var(&format!("X{}", rng.gen_range(0..depth))),
        1 => MuFormula::NegAtom(p.into()),
        _ => MuFormula::atom(p),
    }
}

fn build(rng: &mut impl Rng, size: usize, atoms: &[&str], depth: usize) -> MuFormula {
    if size <= 1 {
        return leaf(rng, atoms, depth);
    }
    if size == 2 || rng.gen_bool(0.5) {
        let body = |rng: &mut _, d| build(rng, size - 1, atoms, d);
        return match rng.gen_range(0..4) {
            0 => MuFormula::dia(body(rng, depth)),
            1 => MuFormula::boxed(body(rng, depth)),
            2 => MuFormula::mu(&format!("X{depth}"), body(rng, depth + 1)),
            _ => MuFormula::nu(&format!("X{depth}"), body(rng, depth + 1)),
        };
    }
    let left = rng.gen_range(1..size - 1);
    let (a, b) = (
        build(rng, left, atoms, depth),
        build(rng, size - 1 - left, atoms, depth),
    );
    if rng.gen_bool(0.5) {
        MuFormula::and(a, b)
    } else {
        MuFormula::or(a, b)
    }
}

/// States `s0..s{n-1}`, each transition present with probability `density`,
/// atoms assigned uniformly. With `total`, states without successors get
/// one random edge.
pub fn random_structure(
    rng: &mut impl Rng,
    n: usize,
    density: f64,
    atoms: &[&str],
    total: bool,
) -> KripkeStructure {
    let states: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
    let mut transitions = Vec::new();
    for a in &states {
        let before = transitions.len();
        for b in &states {
            if rng.gen_bool(density) {
                transitions.push((a.clone(), b.clone()));
            }
        }
        if total && transitions.len() == before {
            transitions.push((a.clone(), states.choose(rng).expect("n > 0").clone()));
        }
    }
    let valuation: BTreeMap<String, Vec<String>> = atoms
        .iter()
        .map(|p| {
            (
                p.to_string(),
                states
                    .iter()
                    .filter(|_| rng.gen_bool(0.5))
                    .cloned()
                    .collect(),
            )
        })
        .collect();
    KripkeStructure {
        states,
        transitions,
        valuation,
    }
}
