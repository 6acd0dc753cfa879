//! Seeded random terms for property tests. Every constructor is reachable;
//! bound variables stay in scope so printing and re-parsing is meaningful.

use nmdekl::syntax::{Hint, Sort, Term};
use rand::seq::SliceRandom;
use rand::Rng;

const CONSTS: &[&str] = &["a", "b", "f", "g", "s0", "s1"];
const HINTS: &[&str] = &["x", "y", "x"];
const PHINTS: &[&str] = &["X", "Y", "X"];

fn b(t: Term) -> Box<Term> {
    Box::new(t)
}

pub struct TermGen<'r, R: Rng> {
    pub rng: &'r mut R,
}

impl<R: Rng> TermGen<'_, R> {
    fn hint(&mut self) -> Hint {
        Hint::new(*HINTS.choose(self.rng).unwrap())
    }

    fn phint(&mut self) -> Hint {
        Hint::new(*PHINTS.choose(self.rng).unwrap())
    }

    fn leaf(&mut self, vars: usize, pvars: usize) -> Term {
        let pick = self.rng.gen_range(0..14);
        match pick {
            0 | 1 if vars > 0 => Term::Var(self.rng.gen_range(0..vars)),
            2 if pvars > 0 => Term::PropVar(self.rng.gen_range(0..pvars)),
            3 => Term::Sort(match self.rng.gen_range(0..3) {
                0 => Sort::Uc(self.rng.gen_range(0..3)),
                1 => Sort::TypeL(self.rng.gen_range(0..3)),
                _ => Sort::Prop,
            }),
            4 => Term::State,
            5 => Term::Event,
            6 => Term::Nat,
            7 => Term::FinTrace,
            8 => Term::InfTrace,
            9 => Term::Top,
            10 => Term::Bot,
            11 => Term::Triv,
            _ => Term::Const(CONSTS.choose(self.rng).unwrap().to_string()),
        }
    }

    /// A term of roughly `size` nodes with `vars`/`pvars` binders in scope.
    pub fn term(&mut self, size: usize, vars: usize, pvars: usize) -> Term {
        if size <= 1 {
            return self.leaf(vars, pvars);
        }
        let n = size - 1;
        let split2 = |rng: &mut R| {
            let k = rng.gen_range(0..=n);
            (k.max(1), (n - k).max(1))
        };
        match self.rng.gen_range(0..34) {
            0 => {
                let (l, r) = split2(self.rng);
                Term::Pi(
                    self.hint(),
                    b(self.term(l, vars, pvars)),
                    b(self.term(r, vars + 1, pvars)),
                )
            }
            1 => {
                let (l, r) = split2(self.rng);
                Term::Lam(
                    self.hint(),
                    b(self.term(l, vars, pvars)),
                    b(self.term(r, vars + 1, pvars)),
                )
            }
            2 | 3 => {
                let (l, r) = split2(self.rng);
                Term::App(b(self.term(l, vars, pvars)), b(self.term(r, vars, pvars)))
            }
            4 => {
                let k = (n / 3).max(1);
                Term::Step(
                    b(self.term(k, vars, pvars)),
                    b(self.term(k, vars, pvars)),
                    b(self.term(k, vars, pvars)),
                )
            }
            5 => Term::Nil(b(self.term(n, vars, pvars))),
            6 => {
                let k = (n / 3).max(1);
                Term::StepTrace(
                    b(self.term(k, vars, pvars)),
                    b(self.term(k, vars, pvars)),
                    b(self.term(k, vars, pvars)),
                )
            }
            7 => {
                let k = (n / 3).max(1);
                Term::Cons(
                    b(self.term(k, vars, pvars)),
                    b(self.term(k, vars, pvars)),
                    b(self.term(k, vars, pvars)),
                )
            }
            8 => Term::Head(b(self.term(n, vars, pvars))),
            9 => Term::Tail(b(self.term(n, vars, pvars))),
            10 => Term::Cofix(self.hint(), b(self.term(n, vars + 1, pvars))),
            11 => {
                let (l, r) = split2(self.rng);
                Term::ExtF(b(self.term(l, vars, pvars)), b(self.term(r, vars, pvars)))
            }
            12 => Term::ExtId(b(self.term(n, vars, pvars))),
            13 => {
                let (l, r) = split2(self.rng);
                Term::ExtComp(b(self.term(l, vars, pvars)), b(self.term(r, vars, pvars)))
            }
            14 => {
                let len = self.rng.gen_range(0..3);
                let k = (n / (2 * len + 1)).max(1);
                let base = self.term(k, vars, pvars);
                let suffix = (0..len)
                    .map(|_| (self.term(k, vars, pvars), self.term(k, vars, pvars)))
                    .collect();
                Term::ExtSteps(b(base), suffix)
            }
            15 => Term::KF(b(self.term(n, vars, pvars))),
            16 => Term::KInf(b(self.term(n, vars, pvars))),
            17 => {
                let (l, r) = split2(self.rng);
                Term::Restrict(b(self.term(l, vars, pvars)), b(self.term(r, vars, pvars)))
            }
            18 => {
                let k = (n / 3).max(1);
                Term::Id(
                    b(self.term(k, vars, pvars)),
                    b(self.term(k, vars, pvars)),
                    b(self.term(k, vars, pvars)),
                )
            }
            19 => Term::Refl(b(self.term(n, vars, pvars))),
            20 => {
                let k = (n / 5).max(1);
                Term::J(Box::new([
                    self.term(k, vars, pvars),
                    self.term(k, vars, pvars),
                    self.term(k, vars, pvars),
                    self.term(k, vars, pvars),
                    self.term(k, vars, pvars),
                ]))
            }
            21 => {
                let (l, r) = split2(self.rng);
                Term::Absurd(b(self.term(l, vars, pvars)), b(self.term(r, vars, pvars)))
            }
            22 => {
                let (l, r) = split2(self.rng);
                Term::And(b(self.term(l, vars, pvars)), b(self.term(r, vars, pvars)))
            }
            23 => {
                let (l, r) = split2(self.rng);
                Term::Or(b(self.term(l, vars, pvars)), b(self.term(r, vars, pvars)))
            }
            24 => {
                let (l, r) = split2(self.rng);
                Term::Imp(b(self.term(l, vars, pvars)), b(self.term(r, vars, pvars)))
            }
            25 => {
                let (l, r) = split2(self.rng);
                Term::Forall(
                    self.hint(),
                    b(self.term(l, vars, pvars)),
                    b(self.term(r, vars + 1, pvars)),
                )
            }
            26 => {
                let (l, r) = split2(self.rng);
                Term::Exists(
                    self.hint(),
                    b(self.term(l, vars, pvars)),
                    b(self.term(r, vars + 1, pvars)),
                )
            }
            27 => Term::Diamond(b(self.term(n, vars, pvars))),
            28 => Term::Square(b(self.term(n, vars, pvars))),
            29 => Term::Mu(self.phint(), b(self.term(n, vars, pvars + 1))),
            30 => Term::Nu(self.phint(), b(self.term(n, vars, pvars + 1))),
            31 => match self.rng.gen_range(0..4) {
                0 => Term::Fold(b(self.term(n, vars, pvars))),
                1 => Term::Unfold(b(self.term(n, vars, pvars))),
                2 => Term::NuIn(b(self.term(n, vars, pvars))),
                _ => Term::NuOut(b(self.term(n, vars, pvars))),
            },
            32 => Term::Atom(
                ["p", "q"].choose(self.rng).unwrap().to_string(),
                b(self.term(n, vars, pvars)),
            ),
            _ => self.leaf(vars, pvars),
        }
    }
}

use nmdekl::mu::{CtlFormula, KripkeStructure, LassoStep, LassoTrace, LtlFormula};

fn pick_atom(rng: &mut impl Rng, atoms: &[&str]) -> String {
    atoms.choose(rng).unwrap().to_string()
}

pub fn random_ltl(rng: &mut impl Rng, size: usize, atoms: &[&str]) -> LtlFormula {
    use LtlFormula::*;
    if size <= 1 {
        return match rng.gen_range(0..6) {
            0 => True,
            1 => False,
            2 | 3 => Atom(pick_atom(rng, atoms)),
            _ => NotAtom(pick_atom(rng, atoms)),
        };
    }
    let n = size - 1;
    let l = rng.gen_range(1..=n);
    let r = (n - l).max(1);
    match rng.gen_range(0..7) {
        0 => And(
            Box::new(random_ltl(rng, l, atoms)),
            Box::new(random_ltl(rng, r, atoms)),
        ),
        1 => Or(
            Box::new(random_ltl(rng, l, atoms)),
            Box::new(random_ltl(rng, r, atoms)),
        ),
        2 => Next(Box::new(random_ltl(rng, n, atoms))),
        3 => Globally(Box::new(random_ltl(rng, n, atoms))),
        4 => Finally(Box::new(random_ltl(rng, n, atoms))),
        5 => Until(
            Box::new(random_ltl(rng, l, atoms)),
            Box::new(random_ltl(rng, r, atoms)),
        ),
        _ => Atom(pick_atom(rng, atoms)),
    }
}

pub fn random_ctl(rng: &mut impl Rng, size: usize, atoms: &[&str]) -> CtlFormula {
    use CtlFormula::*;
    if size <= 1 {
        return match rng.gen_range(0..6) {
            0 => True,
            1 => False,
            2 | 3 => Atom(pick_atom(rng, atoms)),
            _ => NotAtom(pick_atom(rng, atoms)),
        };
    }
    let n = size - 1;
    let l = rng.gen_range(1..=n);
    let r = (n - l).max(1);
    let un = |rng: &mut _| Box::new(random_ctl(rng, n, atoms));
    match rng.gen_range(0..12) {
        0 => And(
            Box::new(random_ctl(rng, l, atoms)),
            Box::new(random_ctl(rng, r, atoms)),
        ),
        1 => Or(
            Box::new(random_ctl(rng, l, atoms)),
            Box::new(random_ctl(rng, r, atoms)),
        ),
        2 => EX(un(rng)),
        3 => AX(un(rng)),
        4 => EF(un(rng)),
        5 => AF(un(rng)),
        6 => EG(un(rng)),
        7 => AG(un(rng)),
        8 => EU(
            Box::new(random_ctl(rng, l, atoms)),
            Box::new(random_ctl(rng, r, atoms)),
        ),
        9 => AU(
            Box::new(random_ctl(rng, l, atoms)),
            Box::new(random_ctl(rng, r, atoms)),
        ),
        _ => Atom(pick_atom(rng, atoms)),
    }
}

/// A random walk through a total structure, cut at its first repeated
/// state: everything before the repeat is the prefix, the loop the cycle.
pub fn random_lasso_in(rng: &mut impl Rng, m: &KripkeStructure) -> LassoTrace {
    let mut walk: Vec<String> = vec![m.states.choose(rng).unwrap().clone()];
    loop {
        let cur = walk.last().unwrap().clone();
        let succs: Vec<&String> = m
            .transitions
            .iter()
            .filter(|(a, _)| *a == cur)
            .map(|(_, b)| b)
            .collect();
        let next = (*succs.choose(rng).expect("total structure")).clone();
        if let Some(i) = walk.iter().position(|s| *s == next) {
            let step = |s: &String| LassoStep {
                state: s.clone(),
                event: "tick".into(),
            };
            return LassoTrace {
                prefix: walk[..i].iter().map(step).collect(),
                cycle: walk[i..].iter().map(step).collect(),
            };
        }
        walk.push(next);
    }
}
