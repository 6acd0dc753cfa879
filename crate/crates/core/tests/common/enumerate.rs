//! Brute-force enumeration of terms by size over the logical fragment:
//! sorts `Uc0` and `Prop`, the connectives `top`, `bot`, `->`, `forall`,
//! Π and λ, fixpoints with their folds, identity types and `J`.
//!
//! Subterms are kept only if they can occur in a checkable term: they
//! infer a type in their context, or they are an introduction form (`fun`,
//! `fold`, `nu_in`, `refl`) over kept parts. Every other shape is checked
//! by inferring it, so a term with a discarded subterm can never check.

use std::collections::HashMap;
use std::rc::Rc;

use nmdekl::syntax::{Context, Hint, Sort, Term};
use nmdekl::typeck::Checker;

/// Context rendered with `Debug` (all hints are `x`), predicate depth, size.
type Key = (String, usize, usize);

pub struct Enumerator {
    pub checker: Checker,
    memo: HashMap<Key, Rc<Vec<Term>>>,
    /// Propositions already proved in a context, for the proof quotient.
    proved: HashMap<(String, usize), Vec<Term>>,
    /// Candidates built, kept or not.
    pub candidates: usize,
}

fn b(t: &Term) -> Box<Term> {
    Box::new(t.clone())
}

fn ctx_of(types: &[Term]) -> Context {
    Context::from_entries(types.iter().map(|t| ("x".to_string(), t.clone())).collect())
}

/// Ways to write `n` as an ordered sum of `parts` positive sizes.
fn compositions(n: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 0 {
        return if n == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in 1..=n.saturating_sub(parts - 1) {
        for mut rest in compositions(n - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

impl Enumerator {
    pub fn new(fuel: usize) -> Self {
        Enumerator {
            checker: Checker::new(fuel),
            memo: HashMap::new(),
            proved: HashMap::new(),
            candidates: 0,
        }
    }

    fn keep(&mut self, types: &[Term], pvars: usize, t: &Term) -> bool {
        self.candidates += 1;
        let ctx = ctx_of(types);
        if let Ok(ty) = self.checker.infer_open(&ctx, pvars, t) {
            let is_proof = matches!(
                self.checker.infer_open(&ctx, pvars, &ty),
                Ok(Term::Sort(Sort::Prop))
            );
            if !is_proof {
                return true;
            }
            let ty = nmdekl::normalize::normalize(&ty, 1000).term().clone();
            let seen = self
                .proved
                .entry((format!("{types:?}"), pvars))
                .or_default();
            if seen.contains(&ty) {
                return false;
            }
            seen.push(ty);
            return true;
        }
        matches!(
            t,
            Term::Lam(..) | Term::Fold(_) | Term::NuIn(_) | Term::Refl(_)
        )
    }

    fn is_type(&self, types: &[Term], pvars: usize, a: &Term) -> bool {
        matches!(
            self.checker.infer_open(&ctx_of(types), pvars, a),
            Ok(Term::Sort(_))
        )
    }

    /// Kept terms of exactly size `n` with `types` as the context.
    pub fn pool(&mut self, types: &[Term], pvars: usize, n: usize) -> Rc<Vec<Term>> {
        let key = (format!("{types:?}"), pvars, n);
        if let Some(p) = self.memo.get(&key) {
            return p.clone();
        }
        let mut raw: Vec<Term> = Vec::new();
        if n == 1 {
            raw.extend([
                Term::Sort(Sort::Uc(0)),
                Term::Sort(Sort::Prop),
                Term::Top,
                Term::Bot,
                Term::Triv,
            ]);
            raw.extend((0..types.len()).map(Term::Var));
            raw.extend((0..pvars).map(Term::PropVar));
        } else {
            self.compound(types, pvars, n, &mut raw);
        }
        let kept: Vec<Term> = raw
            .into_iter()
            .filter(|t| self.keep(types, pvars, t))
            .collect();
        let rc = Rc::new(kept);
        self.memo.insert(key, rc.clone());
        rc
    }

    fn compound(&mut self, types: &[Term], pvars: usize, n: usize, raw: &mut Vec<Term>) {
        let h = || Hint::new("x");
        for c in self.pool(types, pvars, n - 1).iter() {
            let u = |f: fn(Box<Term>) -> Term| f(b(c));
            raw.extend([
                u(Term::Refl),
                u(Term::Fold),
                u(Term::Unfold),
                u(Term::NuIn),
                u(Term::NuOut),
            ]);
        }
        for body in self.pool(types, pvars + 1, n - 1).iter() {
            raw.push(Term::Mu(Hint::new("X"), b(body)));
            raw.push(Term::Nu(Hint::new("X"), b(body)));
        }
        for sizes in compositions(n - 1, 2) {
            let left = self.pool(types, pvars, sizes[0]);
            let right = self.pool(types, pvars, sizes[1]);
            for a in left.iter() {
                for c in right.iter() {
                    let bin = |f: fn(Box<Term>, Box<Term>) -> Term| f(b(a), b(c));
                    raw.extend([bin(Term::App), bin(Term::Absurd), bin(Term::Imp)]);
                }
                if !self.is_type(types, pvars, a) {
                    continue;
                }
                let inner = [types, std::slice::from_ref(a)].concat();
                for body in self.pool(&inner, pvars, sizes[1]).iter() {
                    raw.push(Term::Pi(h(), b(a), b(body)));
                    raw.push(Term::Lam(h(), b(a), b(body)));
                    raw.push(Term::Forall(h(), b(a), b(body)));
                }
            }
        }
        for sizes in compositions(n - 1, 3) {
            let (p0, p1, p2) = (
                self.pool(types, pvars, sizes[0]),
                self.pool(types, pvars, sizes[1]),
                self.pool(types, pvars, sizes[2]),
            );
            for x in p0.iter() {
                for y in p1.iter() {
                    for z in p2.iter() {
                        let tri =
                            |f: fn(Box<Term>, Box<Term>, Box<Term>) -> Term| f(b(x), b(y), b(z));
                        raw.push(tri(Term::Id));
                    }
                }
            }
        }
        for sizes in compositions(n - 1, 5) {
            let pools: Vec<Rc<Vec<Term>>> =
                sizes.iter().map(|&k| self.pool(types, pvars, k)).collect();
            let mut tuples: Vec<Vec<Term>> = vec![Vec::new()];
            for p in &pools {
                tuples = tuples
                    .into_iter()
                    .flat_map(|t| {
                        p.iter()
                            .map(move |x| [t.as_slice(), std::slice::from_ref(x)].concat())
                    })
                    .collect();
            }
            for t in tuples {
                raw.push(Term::J(Box::new([
                    t[0].clone(),
                    t[1].clone(),
                    t[2].clone(),
                    t[3].clone(),
                    t[4].clone(),
                ])));
            }
        }
    }
}
