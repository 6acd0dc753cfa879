use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::formula::{mc_mu_indices, MuFormula};
use super::kripke::{gfp, lfp, FixpointStats, KripkeStructure, StateSet};
use super::MuError;

fn default_event() -> String {
    "tick".into()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LassoStep {
    pub state: String,
    #[serde(default = "default_event")]
    pub event: String,
}

/// One infinite path: `prefix` once, then `cycle` forever.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LassoTrace {
    pub prefix: Vec<LassoStep>,
    pub cycle: Vec<LassoStep>,
}

impl LassoTrace {
    pub fn from_states(prefix: &[&str], cycle: &[&str]) -> Self {
        let step = |s: &&str| LassoStep {
            state: s.to_string(),
            event: default_event(),
        };
        LassoTrace {
            prefix: prefix.iter().map(step).collect(),
            cycle: cycle.iter().map(step).collect(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, MuError> {
        serde_json::from_str(text).map_err(|e| MuError::InconsistentLasso(e.to_string()))
    }

    pub fn len(&self) -> usize {
        self.prefix.len() + self.cycle.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn state_at(&self, pos: usize) -> &str {
        if pos < self.prefix.len() {
            &self.prefix[pos].state
        } else {
            &self.cycle[(pos - self.prefix.len()) % self.cycle.len()].state
        }
    }

    /// Successor position in the folded representation.
    pub fn next(&self, pos: usize) -> usize {
        if pos + 1 < self.len() {
            pos + 1
        } else {
            self.prefix.len()
        }
    }

    /// Checks that the cycle is nonempty and every step is a transition of `m`.
    pub fn validate(&self, m: &KripkeStructure) -> Result<(), MuError> {
        if self.cycle.is_empty() {
            return Err(MuError::InconsistentLasso("the cycle is empty".into()));
        }
        let succ = m.successors();
        for pos in 0..self.len() {
            let (a, b) = (self.state_at(pos), self.state_at(self.next(pos)));
            let (Some(i), Some(j)) = (m.index_of(a), m.index_of(b)) else {
                return Err(MuError::InconsistentLasso(format!(
                    "unknown state in step {a} -> {b}"
                )));
            };
            if !succ[i].contains(&j) {
                return Err(MuError::InconsistentLasso(format!(
                    "{a} -> {b} is not a transition"
                )));
            }
        }
        Ok(())
    }

    /// Visited states.
    pub fn states(&self) -> BTreeSet<String> {
        self.prefix
            .iter()
            .chain(&self.cycle)
            .map(|s| s.state.clone())
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum LtlFormula {
    True,
    False,
    Atom(String),
    NotAtom(String),
    And(Box<LtlFormula>, Box<LtlFormula>),
    Or(Box<LtlFormula>, Box<LtlFormula>),
    Next(Box<LtlFormula>),
    Globally(Box<LtlFormula>),
    Finally(Box<LtlFormula>),
    Until(Box<LtlFormula>, Box<LtlFormula>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum CtlFormula {
    True,
    False,
    Atom(String),
    NotAtom(String),
    And(Box<CtlFormula>, Box<CtlFormula>),
    Or(Box<CtlFormula>, Box<CtlFormula>),
    EX(Box<CtlFormula>),
    AX(Box<CtlFormula>),
    EF(Box<CtlFormula>),
    AF(Box<CtlFormula>),
    EG(Box<CtlFormula>),
    AG(Box<CtlFormula>),
    EU(Box<CtlFormula>, Box<CtlFormula>),
    AU(Box<CtlFormula>, Box<CtlFormula>),
}

/// Positions of the lasso where `phi` holds.
fn den_ltl(
    m: &KripkeStructure,
    pi: &LassoTrace,
    phi: &LtlFormula,
    stats: &mut FixpointStats,
) -> Result<StateSet, MuError> {
    use LtlFormula::*;
    let all: StateSet = (0..pi.len()).collect();
    let pre =
        |x: &StateSet| -> StateSet { (0..pi.len()).filter(|&i| x.contains(&pi.next(i))).collect() };
    let holds = |p: &str| -> StateSet {
        (0..pi.len())
            .filter(|&i| m.index_of(pi.state_at(i)).is_some_and(|s| m.holds(p, s)))
            .collect()
    };
    Ok(match phi {
        True => all,
        False => StateSet::new(),
        Atom(p) => holds(p),
        NotAtom(p) => all.difference(&holds(p)).copied().collect(),
        And(a, b) => {
            let x = den_ltl(m, pi, a, stats)?;
            x.intersection(&den_ltl(m, pi, b, stats)?)
                .copied()
                .collect()
        }
        Or(a, b) => {
            let x = den_ltl(m, pi, a, stats)?;
            x.union(&den_ltl(m, pi, b, stats)?).copied().collect()
        }
        Next(a) => pre(&den_ltl(m, pi, a, stats)?),
        Finally(a) => {
            let x = den_ltl(m, pi, a, stats)?;
            lfp(stats, |z| Ok(x.union(&pre(z)).copied().collect()))?
        }
        Globally(a) => {
            let x = den_ltl(m, pi, a, stats)?;
            gfp(stats, all, |z| {
                Ok(x.intersection(&pre(z)).copied().collect())
            })?
        }
        Until(a, b) => {
            let x = den_ltl(m, pi, a, stats)?;
            let y = den_ltl(m, pi, b, stats)?;
            lfp(stats, |z| {
                let step: StateSet = x.intersection(&pre(z)).copied().collect();
                Ok(y.union(&step).copied().collect())
            })?
        }
    })
}

/// Truth of `phi` on the infinite path `pi` through `m`.
pub fn ltl_eval(m: &KripkeStructure, pi: &LassoTrace, phi: &LtlFormula) -> Result<bool, MuError> {
    pi.validate(m)?;
    Ok(den_ltl(m, pi, phi, &mut FixpointStats::default())?.contains(&0))
}

struct Fresh(usize);

impl Fresh {
    fn next(&mut self) -> String {
        self.0 += 1;
        format!("Z{}", self.0)
    }
}

/// The standard fixpoint encoding of CTL, valid on total structures.
pub fn ctl_to_mu(psi: &CtlFormula) -> MuFormula {
    fn go(psi: &CtlFormula, fresh: &mut Fresh) -> MuFormula {
        use CtlFormula::*;
        use MuFormula as M;
        match psi {
            True => {
                let z = fresh.next();
                M::nu(&z, M::Var(z.clone()))
            }
            False => {
                let z = fresh.next();
                M::mu(&z, M::Var(z.clone()))
            }
            Atom(p) => M::Atom(p.clone()),
            NotAtom(p) => M::NegAtom(p.clone()),
            And(a, b) => M::and(go(a, fresh), go(b, fresh)),
            Or(a, b) => M::or(go(a, fresh), go(b, fresh)),
            EX(a) => M::dia(go(a, fresh)),
            AX(a) => M::boxed(go(a, fresh)),
            EF(a) | AF(a) | EG(a) | AG(a) => {
                let body = go(a, fresh);
                let z = fresh.next();
                let step = if matches!(psi, EF(_) | EG(_)) {
                    M::dia(M::Var(z.clone()))
                } else {
                    M::boxed(M::Var(z.clone()))
                };
                if matches!(psi, EF(_) | AF(_)) {
                    M::mu(&z, M::or(body, step))
                } else {
                    M::nu(&z, M::and(body, step))
                }
            }
            EU(a, b) | AU(a, b) => {
                let (x, y) = (go(a, fresh), go(b, fresh));
                let z = fresh.next();
                let step = if matches!(psi, EU(..)) {
                    M::dia(M::Var(z.clone()))
                } else {
                    M::boxed(M::Var(z.clone()))
                };
                M::mu(&z, M::or(y, M::and(x, step)))
            }
        }
    }
    go(psi, &mut Fresh(0))
}

/// States satisfying `psi`, sorted by name. Rejects non-total structures.
pub fn ctl_eval(m: &KripkeStructure, psi: &CtlFormula) -> Result<Vec<String>, MuError> {
    let succ = m.successors();
    let stuck: Vec<String> = (0..m.len())
        .filter(|&i| succ[i].is_empty())
        .map(|i| m.states[i].clone())
        .collect();
    if !stuck.is_empty() {
        return Err(MuError::NotTotal(stuck));
    }
    let set = mc_mu_indices(m, &ctl_to_mu(psi), &mut FixpointStats::default())?;
    Ok(m.names(&set))
}

const LVL_U: u8 = 0;
const LVL_OR: u8 = 1;
const LVL_AND: u8 = 2;
const LVL_UNARY: u8 = 3;

fn wrap(s: String, own: u8, want: u8) -> String {
    if own < want {
        format!("({s})")
    } else {
        s
    }
}

impl LtlFormula {
    fn render(&self, want: u8) -> String {
        use LtlFormula::*;
        let (s, own) = match self {
            True => ("true".into(), LVL_UNARY),
            False => ("false".into(), LVL_UNARY),
            Atom(p) => (p.clone(), LVL_UNARY),
            NotAtom(p) => (format!("~{p}"), LVL_UNARY),
            And(a, b) => (
                format!("{} /\\ {}", a.render(LVL_UNARY), b.render(LVL_AND)),
                LVL_AND,
            ),
            Or(a, b) => (
                format!("{} \\/ {}", a.render(LVL_AND), b.render(LVL_OR)),
                LVL_OR,
            ),
            Next(a) => (format!("X {}", a.render(LVL_UNARY)), LVL_UNARY),
            Globally(a) => (format!("G {}", a.render(LVL_UNARY)), LVL_UNARY),
            Finally(a) => (format!("F {}", a.render(LVL_UNARY)), LVL_UNARY),
            Until(a, b) => (format!("{} U {}", a.render(LVL_OR), b.render(LVL_U)), LVL_U),
        };
        wrap(s, own, want)
    }
}

impl fmt::Display for LtlFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(LVL_U))
    }
}

impl CtlFormula {
    fn render(&self, want: u8) -> String {
        use CtlFormula::*;
        let un = |op: &str, a: &CtlFormula| (format!("{op} {}", a.render(LVL_UNARY)), LVL_UNARY);
        let (s, own) = match self {
            True => ("true".into(), LVL_UNARY),
            False => ("false".into(), LVL_UNARY),
            Atom(p) => (p.clone(), LVL_UNARY),
            NotAtom(p) => (format!("~{p}"), LVL_UNARY),
            And(a, b) => (
                format!("{} /\\ {}", a.render(LVL_UNARY), b.render(LVL_AND)),
                LVL_AND,
            ),
            Or(a, b) => (
                format!("{} \\/ {}", a.render(LVL_AND), b.render(LVL_OR)),
                LVL_OR,
            ),
            EX(a) => un("EX", a),
            AX(a) => un("AX", a),
            EF(a) => un("EF", a),
            AF(a) => un("AF", a),
            EG(a) => un("EG", a),
            AG(a) => un("AG", a),
            EU(a, b) => (
                format!("E[{} U {}]", a.render(LVL_U), b.render(LVL_U)),
                LVL_UNARY,
            ),
            AU(a, b) => (
                format!("A[{} U {}]", a.render(LVL_U), b.render(LVL_U)),
                LVL_UNARY,
            ),
        };
        wrap(s, own, want)
    }
}

impl fmt::Display for CtlFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(LVL_U))
    }
}
