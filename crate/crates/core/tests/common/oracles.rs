//! Reference implementations that share no code with the library's
//! engines: subset enumeration, explicit path enumeration, tuple filtering.

use std::collections::{BTreeMap, BTreeSet};

use nmdekl::model::{Presheaf, TraceCategory};
use nmdekl::mu::{CtlFormula, KripkeStructure, LassoStep, LassoTrace, LtlFormula, MuFormula};
use nmdekl::syntax::Term;
use rand::seq::SliceRandom;
use rand::Rng;

type Set = BTreeSet<usize>;

fn succ_table(m: &KripkeStructure) -> Vec<Vec<usize>> {
    let idx: BTreeMap<&str, usize> = m
        .states
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let mut out = vec![Vec::new(); m.states.len()];
    for (a, b) in &m.transitions {
        out[idx[a.as_str()]].push(idx[b.as_str()]);
    }
    out
}

fn atom_set(m: &KripkeStructure, p: &str) -> Set {
    let names: BTreeSet<&String> = m
        .valuation
        .get(p)
        .map(|v| v.iter().collect())
        .unwrap_or_default();
    (0..m.states.len())
        .filter(|&i| names.contains(&m.states[i]))
        .collect()
}

fn all_subsets(n: usize) -> Vec<Set> {
    (0..1u32 << n)
        .map(|mask| (0..n).filter(|i| mask >> i & 1 == 1).collect())
        .collect()
}

/// `⟦φ⟧` with every fixpoint found by scanning all subsets: the least
/// fixpoint is the meet of the pre-fixpoints, the greatest the join of the
/// post-fixpoints.
pub fn brute_mu(m: &KripkeStructure, phi: &MuFormula) -> Vec<String> {
    let succ = succ_table(m);
    let subsets = all_subsets(m.states.len());
    let set = den(m, &succ, &subsets, phi, &mut BTreeMap::new());
    set.into_iter()
        .map(|i| m.states[i].clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

fn den(
    m: &KripkeStructure,
    succ: &[Vec<usize>],
    subsets: &[Set],
    phi: &MuFormula,
    env: &mut BTreeMap<String, Set>,
) -> Set {
    let n = m.states.len();
    let all: Set = (0..n).collect();
    match phi {
        MuFormula::Atom(p) => atom_set(m, p),
        MuFormula::NegAtom(p) => all.difference(&atom_set(m, p)).copied().collect(),
        MuFormula::And(a, b) => {
            let x = den(m, succ, subsets, a, env);
            x.intersection(&den(m, succ, subsets, b, env))
                .copied()
                .collect()
        }
        MuFormula::Or(a, b) => {
            let x = den(m, succ, subsets, a, env);
            x.union(&den(m, succ, subsets, b, env)).copied().collect()
        }
        MuFormula::Dia(a) => {
            let x = den(m, succ, subsets, a, env);
            (0..n)
                .filter(|&s| succ[s].iter().any(|t| x.contains(t)))
                .collect()
        }
        MuFormula::Box(a) => {
            let x = den(m, succ, subsets, a, env);
            (0..n)
                .filter(|&s| succ[s].iter().all(|t| x.contains(t)))
                .collect()
        }
        MuFormula::Var(x) => env[x].clone(),
        MuFormula::Mu(x, body) | MuFormula::Nu(x, body) => {
            let least = matches!(phi, MuFormula::Mu(..));
            let saved = env.get(x).cloned();
            let mut acc: Set = if least { all.clone() } else { Set::new() };
            for cand in subsets {
                env.insert(x.clone(), cand.clone());
                let image = den(m, succ, subsets, body, env);
                if least && image.is_subset(cand) {
                    acc = acc.intersection(cand).copied().collect();
                }
                if !least && cand.is_subset(&image) {
                    acc = acc.union(cand).copied().collect();
                }
            }
            match saved {
                Some(s) => env.insert(x.clone(), s),
                None => env.remove(x),
            };
            acc
        }
    }
}

/// LTL on the lasso unrolled position by position. Past the prefix every
/// position repeats with period `|cycle|`, so a window of `|prefix| + |cycle|`
/// positions from any starting point sees every future the path has.
pub fn ltl_unrolled(m: &KripkeStructure, pi: &LassoTrace, phi: &LtlFormula) -> bool {
    let (p, c) = (pi.prefix.len(), pi.cycle.len());
    let state = |j: usize| -> String {
        if j < p {
            pi.prefix[j].state.clone()
        } else {
            pi.cycle[(j - p) % c].state.clone()
        }
    };
    let horizon = p + c;
    fn at(
        m: &KripkeStructure,
        state: &dyn Fn(usize) -> String,
        horizon: usize,
        phi: &LtlFormula,
        i: usize,
    ) -> bool {
        let holds = |q: &str, j: usize| {
            m.valuation
                .get(q)
                .is_some_and(|v| v.iter().any(|s| *s == state(j)))
        };
        let rec = |f: &LtlFormula, j: usize| at(m, state, horizon, f, j);
        match phi {
            LtlFormula::True => true,
            LtlFormula::False => false,
            LtlFormula::Atom(q) => holds(q, i),
            LtlFormula::NotAtom(q) => !holds(q, i),
            LtlFormula::And(a, b) => rec(a, i) && rec(b, i),
            LtlFormula::Or(a, b) => rec(a, i) || rec(b, i),
            LtlFormula::Next(a) => rec(a, i + 1),
            LtlFormula::Finally(a) => (i..i + horizon).any(|j| rec(a, j)),
            LtlFormula::Globally(a) => (i..i + horizon).all(|j| rec(a, j)),
            LtlFormula::Until(a, b) => {
                (i..i + horizon).any(|j| rec(b, j) && (i..j).all(|k| rec(a, k)))
            }
        }
    }
    at(m, &state, horizon, phi, 0)
}

/// All paths of exactly `len` states from `s`.
fn paths_from(succ: &[Vec<usize>], s: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![s]];
    for _ in 1..len {
        out = out
            .into_iter()
            .flat_map(|p| {
                succ[*p.last().unwrap()]
                    .iter()
                    .map(move |&t| [p.as_slice(), &[t]].concat())
            })
            .collect();
    }
    out
}

/// CTL by enumerating paths of `|S| + 1` states. On a total structure any
/// such path repeats a state, so it witnesses an infinite path through the
/// same states; that is enough to decide every operator.
pub fn ctl_paths(m: &KripkeStructure, psi: &CtlFormula) -> Vec<String> {
    let succ = succ_table(m);
    let set = ctl_den(m, &succ, psi);
    set.into_iter()
        .map(|i| m.states[i].clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

fn ctl_den(m: &KripkeStructure, succ: &[Vec<usize>], psi: &CtlFormula) -> Set {
    use CtlFormula::*;
    let n = m.states.len();
    let len = n + 1;
    let all: Set = (0..n).collect();
    let paths = |s: usize| paths_from(succ, s, len);
    let filter = |keep: &dyn Fn(usize) -> bool| -> Set { (0..n).filter(|&s| keep(s)).collect() };
    match psi {
        True => all,
        False => Set::new(),
        Atom(p) => atom_set(m, p),
        NotAtom(p) => all.difference(&atom_set(m, p)).copied().collect(),
        And(a, b) => ctl_den(m, succ, a)
            .intersection(&ctl_den(m, succ, b))
            .copied()
            .collect(),
        Or(a, b) => ctl_den(m, succ, a)
            .union(&ctl_den(m, succ, b))
            .copied()
            .collect(),
        EX(a) => {
            let x = ctl_den(m, succ, a);
            filter(&|s| succ[s].iter().any(|t| x.contains(t)))
        }
        AX(a) => {
            let x = ctl_den(m, succ, a);
            filter(&|s| succ[s].iter().all(|t| x.contains(t)))
        }
        EF(a) => {
            let x = ctl_den(m, succ, a);
            filter(&|s| paths(s).iter().any(|p| p.iter().any(|t| x.contains(t))))
        }
        AF(a) => {
            let x = ctl_den(m, succ, a);
            filter(&|s| paths(s).iter().all(|p| p.iter().any(|t| x.contains(t))))
        }
        EG(a) => {
            let x = ctl_den(m, succ, a);
            filter(&|s| paths(s).iter().any(|p| p.iter().all(|t| x.contains(t))))
        }
        AG(a) => {
            let x = ctl_den(m, succ, a);
            filter(&|s| paths(s).iter().all(|p| p.iter().all(|t| x.contains(t))))
        }
        EU(a, b) | AU(a, b) => {
            let (x, y) = (ctl_den(m, succ, a), ctl_den(m, succ, b));
            let sat = |p: &Vec<usize>| {
                (0..p.len()).any(|j| y.contains(&p[j]) && p[..j].iter().all(|t| x.contains(t)))
            };
            if matches!(psi, EU(..)) {
                filter(&|s| paths(s).iter().any(sat))
            } else {
                filter(&|s| paths(s).iter().all(sat))
            }
        }
    }
}

/// Compatible families along `nodes` by filtering the full product of fibres.
pub fn families_brute(k: &Presheaf, nodes: &[String]) -> Vec<Vec<String>> {
    let mut tuples: Vec<Vec<String>> = vec![Vec::new()];
    for o in nodes {
        tuples = tuples
            .into_iter()
            .flat_map(|t| {
                k.fibre(o)
                    .iter()
                    .map(move |x| [t.as_slice(), std::slice::from_ref(x)].concat())
            })
            .collect();
    }
    let mut out: Vec<Vec<String>> = tuples
        .into_iter()
        .filter(|t| {
            (1..nodes.len()).all(|i| k.restrictions[&nodes[i]].get(&t[i]) == Some(&t[i - 1]))
        })
        .collect();
    out.sort();
    out
}

/// A lasso over `s0..s{n-1}` with events `e0..`, plus a presheaf on its
/// prefix chain to `depth` whose restrictions are surjective.
pub fn random_lasso_presheaf(
    rng: &mut impl Rng,
    depth: usize,
) -> (LassoTrace, TraceCategory, Presheaf) {
    let step = |rng: &mut dyn rand::RngCore| LassoStep {
        state: format!("s{}", rng.gen_range(0..3)),
        event: format!("e{}", rng.gen_range(0..2)),
    };
    let prefix: Vec<LassoStep> = (0..rng.gen_range(1..4)).map(|_| step(rng)).collect();
    let cycle: Vec<LassoStep> = (0..rng.gen_range(1..4)).map(|_| step(rng)).collect();
    let pi = LassoTrace { prefix, cycle };
    let cat = TraceCategory::from_lasso(&pi, depth).unwrap();
    let mut k = Presheaf::default();
    let mut size = rng.gen_range(1..3);
    for o in &cat.objects {
        size = (size + rng.gen_range(0..2)).min(3);
        k.fibres
            .insert(o.clone(), (0..size).map(|i| format!("{o}#{i}")).collect());
    }
    for g in &cat.generators {
        let (src, tgt) = (k.fibre(&g.source).to_vec(), k.fibre(&g.target).to_vec());
        let mut images: Vec<String> = src.clone();
        while images.len() < tgt.len() {
            images.push(src.choose(rng).unwrap().clone());
        }
        images.shuffle(rng);
        k.restrictions
            .insert(g.name.clone(), tgt.into_iter().zip(images).collect());
    }
    (pi, cat, k)
}

/// What a chain `restrict(e_1, restrict(e_2, ... restrict(e_n, k)))` must
/// normalize to: identities dropped, the rest right-associated with `e_1`
/// innermost, adjacent canonical witnesses merged by concatenation.
pub fn restrict_fold(witnesses: &[Term], k: &Term) -> Term {
    // `e_1` is applied first, so it ends up innermost in the composite.
    let mut merged: Vec<Term> = Vec::new();
    for w in witnesses.iter().filter(|w| !matches!(w, Term::ExtId(_))) {
        match (merged.last_mut(), w) {
            (Some(Term::ExtSteps(_, earlier)), Term::ExtSteps(_, later)) => {
                earlier.extend(later.iter().cloned())
            }
            _ => merged.push(w.clone()),
        }
    }
    let mut it = merged.into_iter();
    match it.next() {
        None => k.clone(),
        Some(first) => Term::restrict(
            it.fold(first, |inner, outer| Term::ext_comp(outer, inner)),
            k.clone(),
        ),
    }
}
