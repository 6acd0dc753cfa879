use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::kripke::{gfp, lfp, FixpointStats, KripkeStructure, StateSet};
use super::MuError;

/// Name of the implicit current-point parameter of Prop_μ formulas.
pub const CURRENT: &str = "s";

/// Modal μ-calculus in positive normal form.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MuFormula {
    Atom(String),
    NegAtom(String),
    And(Box<MuFormula>, Box<MuFormula>),
    Or(Box<MuFormula>, Box<MuFormula>),
    Dia(Box<MuFormula>),
    Box(Box<MuFormula>),
    Var(String),
    Mu(String, Box<MuFormula>),
    Nu(String, Box<MuFormula>),
}

/// The Prop_μ fragment, with an explicit state argument on atoms and
/// variables, plus the evidence quantifiers that leave the fragment.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PropMuFormula {
    Top,
    Bot,
    AtomAt(String, String),
    NegAtomAt(String, String),
    And(Box<PropMuFormula>, Box<PropMuFormula>),
    Or(Box<PropMuFormula>, Box<PropMuFormula>),
    Imp(Box<PropMuFormula>, Box<PropMuFormula>),
    DiaP(Box<PropMuFormula>),
    BoxP(Box<PropMuFormula>),
    VarAt(String, String),
    MuP(String, Box<PropMuFormula>),
    NuP(String, Box<PropMuFormula>),
    /// `exists k : K_f(trace). body`
    EvidenceExists {
        var: String,
        trace: String,
        body: Box<PropMuFormula>,
    },
    /// `forall k : K_f(trace). body`
    EvidenceForall {
        var: String,
        trace: String,
        body: Box<PropMuFormula>,
    },
}

fn bx<T>(t: T) -> Box<T> {
    Box::new(t)
}

impl MuFormula {
    pub fn atom(p: &str) -> Self {
        MuFormula::Atom(p.into())
    }

    pub fn var(x: &str) -> Self {
        MuFormula::Var(x.into())
    }

    pub fn and(a: Self, b: Self) -> Self {
        MuFormula::And(bx(a), bx(b))
    }

    pub fn or(a: Self, b: Self) -> Self {
        MuFormula::Or(bx(a), bx(b))
    }

    pub fn dia(a: Self) -> Self {
        MuFormula::Dia(bx(a))
    }

    pub fn boxed(a: Self) -> Self {
        MuFormula::Box(bx(a))
    }

    pub fn mu(x: &str, body: Self) -> Self {
        MuFormula::Mu(x.into(), bx(body))
    }

    pub fn nu(x: &str, body: Self) -> Self {
        MuFormula::Nu(x.into(), bx(body))
    }

    pub fn size(&self) -> usize {
        use MuFormula::*;
        match self {
            Atom(_) | NegAtom(_) | Var(_) => 1,
            And(a, b) | Or(a, b) => 1 + a.size() + b.size(),
            Dia(a) | Box(a) | Mu(_, a) | Nu(_, a) => 1 + a.size(),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        use MuFormula::*;
        match self {
            Atom(_) | NegAtom(_) => BTreeSet::new(),
            Var(x) => [x.clone()].into(),
            And(a, b) | Or(a, b) => a.free_vars().union(&b.free_vars()).cloned().collect(),
            Dia(a) | Box(a) => a.free_vars(),
            Mu(x, a) | Nu(x, a) => {
                let mut v = a.free_vars();
                v.remove(x);
                v
            }
        }
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// All variable names, bound or free.
    pub fn var_names(&self) -> BTreeSet<String> {
        use MuFormula::*;
        match self {
            Atom(_) | NegAtom(_) => BTreeSet::new(),
            Var(x) => [x.clone()].into(),
            And(a, b) | Or(a, b) => a.var_names().union(&b.var_names()).cloned().collect(),
            Dia(a) | Box(a) => a.var_names(),
            Mu(x, a) | Nu(x, a) => {
                let mut v = a.var_names();
                v.insert(x.clone());
                v
            }
        }
    }

    /// The negation pushed to atoms. Bound variables are kept, which is the
    /// correct dual only for closed formulas.
    pub fn dual(&self) -> MuFormula {
        use MuFormula::*;
        match self {
            Atom(p) => NegAtom(p.clone()),
            NegAtom(p) => Atom(p.clone()),
            And(a, b) => Or(bx(a.dual()), bx(b.dual())),
            Or(a, b) => And(bx(a.dual()), bx(b.dual())),
            Dia(a) => Box(bx(a.dual())),
            Box(a) => Dia(bx(a.dual())),
            Var(x) => Var(x.clone()),
            Mu(x, a) => Nu(x.clone(), bx(a.dual())),
            Nu(x, a) => Mu(x.clone(), bx(a.dual())),
        }
    }
}

/// Equality up to renaming of bound variables.
pub fn mu_alpha_eq(a: &MuFormula, b: &MuFormula) -> bool {
    fn go(a: &MuFormula, b: &MuFormula, env: &mut Vec<(String, String)>) -> bool {
        use MuFormula::*;
        match (a, b) {
            (Atom(p), Atom(q)) | (NegAtom(p), NegAtom(q)) => p == q,
            (And(a1, a2), And(b1, b2)) | (Or(a1, a2), Or(b1, b2)) => {
                go(a1, b1, env) && go(a2, b2, env)
            }
            (Dia(x), Dia(y)) | (Box(x), Box(y)) => go(x, y, env),
            (Var(x), Var(y)) => {
                for (l, r) in env.iter().rev() {
                    if l == x || r == y {
                        return l == x && r == y;
                    }
                }
                x == y
            }
            (Mu(x, p), Mu(y, q)) | (Nu(x, p), Nu(y, q)) => {
                env.push((x.clone(), y.clone()));
                let r = go(p, q, env);
                env.pop();
                r
            }
            _ => false,
        }
    }
    go(a, b, &mut Vec::new())
}

/// `⟦φ⟧` as a set of state indices.
pub fn mc_mu_indices(
    m: &KripkeStructure,
    phi: &MuFormula,
    stats: &mut FixpointStats,
) -> Result<StateSet, MuError> {
    if let Some(x) = phi.free_vars().into_iter().next() {
        return Err(MuError::FreeVariable(x));
    }
    let succ = m.successors();
    let mut env = BTreeMap::new();
    den_mu(m, &succ, phi, &mut env, stats)
}

fn den_mu(
    m: &KripkeStructure,
    succ: &[StateSet],
    phi: &MuFormula,
    env: &mut BTreeMap<String, StateSet>,
    stats: &mut FixpointStats,
) -> Result<StateSet, MuError> {
    use MuFormula::*;
    Ok(match phi {
        Atom(p) => m.atom(p),
        NegAtom(p) => m.all().difference(&m.atom(p)).copied().collect(),
        And(a, b) => {
            let x = den_mu(m, succ, a, env, stats)?;
            let y = den_mu(m, succ, b, env, stats)?;
            x.intersection(&y).copied().collect()
        }
        Or(a, b) => {
            let x = den_mu(m, succ, a, env, stats)?;
            let y = den_mu(m, succ, b, env, stats)?;
            x.union(&y).copied().collect()
        }
        Dia(a) => m.pre_exists(succ, &den_mu(m, succ, a, env, stats)?),
        Box(a) => m.pre_forall(succ, &den_mu(m, succ, a, env, stats)?),
        Var(x) => env
            .get(x)
            .cloned()
            .ok_or_else(|| MuError::FreeVariable(x.clone()))?,
        Mu(x, body) | Nu(x, body) => {
            let saved = env.get(x).cloned();
            let mut inner = FixpointStats::default();
            let mut eval = |cur: &StateSet| {
                env.insert(x.clone(), cur.clone());
                den_mu(m, succ, body, env, &mut inner)
            };
            let r = if matches!(phi, Mu(..)) {
                lfp(stats, &mut eval)
            } else {
                gfp(stats, m.all(), &mut eval)
            };
            merge_stats(stats, inner);
            match saved {
                Some(s) => env.insert(x.clone(), s),
                None => env.remove(x),
            };
            r?
        }
    })
}

fn merge_stats(into: &mut FixpointStats, inner: FixpointStats) {
    into.fixpoints += inner.fixpoints;
    into.total_iterations += inner.total_iterations;
    into.max_iterations = into.max_iterations.max(inner.max_iterations);
}

/// Satisfying states of a closed formula, sorted by name.
pub fn mc_mu(m: &KripkeStructure, phi: &MuFormula) -> Result<Vec<String>, MuError> {
    let set = mc_mu_indices(m, phi, &mut FixpointStats::default())?;
    Ok(m.names(&set))
}

pub fn enc(phi: &MuFormula) -> PropMuFormula {
    use PropMuFormula as P;
    match phi {
        MuFormula::Atom(p) => P::AtomAt(p.clone(), CURRENT.into()),
        MuFormula::NegAtom(p) => P::NegAtomAt(p.clone(), CURRENT.into()),
        MuFormula::And(a, b) => P::And(bx(enc(a)), bx(enc(b))),
        MuFormula::Or(a, b) => P::Or(bx(enc(a)), bx(enc(b))),
        MuFormula::Dia(a) => P::DiaP(bx(enc(a))),
        MuFormula::Box(a) => P::BoxP(bx(enc(a))),
        MuFormula::Var(x) => P::VarAt(x.clone(), CURRENT.into()),
        MuFormula::Mu(x, a) => P::MuP(x.clone(), bx(enc(a))),
        MuFormula::Nu(x, a) => P::NuP(x.clone(), bx(enc(a))),
    }
}

impl PropMuFormula {
    pub fn free_vars(&self) -> BTreeSet<String> {
        use PropMuFormula::*;
        match self {
            Top | Bot | AtomAt(..) | NegAtomAt(..) => BTreeSet::new(),
            VarAt(x, _) => [x.clone()].into(),
            And(a, b) | Or(a, b) | Imp(a, b) => {
                a.free_vars().union(&b.free_vars()).cloned().collect()
            }
            DiaP(a) | BoxP(a) => a.free_vars(),
            EvidenceExists { body, .. } | EvidenceForall { body, .. } => body.free_vars(),
            MuP(x, a) | NuP(x, a) => {
                let mut v = a.free_vars();
                v.remove(x);
                v
            }
        }
    }

    fn var_names(&self, out: &mut BTreeSet<String>) {
        use PropMuFormula::*;
        match self {
            Top | Bot | AtomAt(..) | NegAtomAt(..) => {}
            VarAt(x, _) => {
                out.insert(x.clone());
            }
            And(a, b) | Or(a, b) | Imp(a, b) => {
                a.var_names(out);
                b.var_names(out);
            }
            DiaP(a) | BoxP(a) => a.var_names(out),
            EvidenceExists { body, .. } | EvidenceForall { body, .. } => body.var_names(out),
            MuP(x, a) | NuP(x, a) => {
                out.insert(x.clone());
                a.var_names(out);
            }
        }
    }

    /// Whether `x` occurs only positively (an even number of arrow-lefts).
    pub fn positive_in(&self, x: &str) -> bool {
        fn pol(f: &PropMuFormula, x: &str, positive: bool) -> bool {
            use PropMuFormula::*;
            match f {
                VarAt(y, _) => y != x || positive,
                Top | Bot | AtomAt(..) | NegAtomAt(..) => true,
                And(a, b) | Or(a, b) => pol(a, x, positive) && pol(b, x, positive),
                Imp(a, b) => pol(a, x, !positive) && pol(b, x, positive),
                DiaP(a) | BoxP(a) => pol(a, x, positive),
                EvidenceExists { body, .. } | EvidenceForall { body, .. } => pol(body, x, positive),
                MuP(y, a) | NuP(y, a) => y == x || pol(a, x, positive),
            }
        }
        pol(self, x, true)
    }
}

fn fresh(avoid: &BTreeSet<String>, base: &str) -> String {
    if !avoid.contains(base) {
        return base.to_string();
    }
    (1..)
        .map(|i| format!("{base}{i}"))
        .find(|n| !avoid.contains(n))
        .expect("unbounded supply")
}

/// Back-translation into the μ-calculus; fails outside the truth-value fragment.
pub fn dec(p: &PropMuFormula) -> Result<MuFormula, MuError> {
    let mut names = BTreeSet::new();
    p.var_names(&mut names);
    dec_in(p, &names)
}

fn dec_in(p: &PropMuFormula, names: &BTreeSet<String>) -> Result<MuFormula, MuError> {
    use PropMuFormula as P;
    let untranslatable = |why: String| Err(MuError::Untranslatable(why));
    let at_current = |s: &str, what: &str| {
        if s == CURRENT {
            Ok(())
        } else {
            Err(MuError::Untranslatable(format!(
                "{what} is pinned to state `{s}` rather than the current point"
            )))
        }
    };
    Ok(match p {
        P::Top => {
            let z = fresh(names, "Z");
            MuFormula::nu(&z, MuFormula::Var(z.clone()))
        }
        P::Bot => {
            let z = fresh(names, "Z");
            MuFormula::mu(&z, MuFormula::Var(z.clone()))
        }
        P::AtomAt(a, s) => {
            at_current(s, &format!("atom `{a}`"))?;
            MuFormula::Atom(a.clone())
        }
        P::NegAtomAt(a, s) => {
            at_current(s, &format!("atom `{a}`"))?;
            MuFormula::NegAtom(a.clone())
        }
        P::VarAt(x, s) => {
            at_current(s, &format!("variable `{x}`"))?;
            MuFormula::Var(x.clone())
        }
        P::And(a, b) => MuFormula::and(dec_in(a, names)?, dec_in(b, names)?),
        P::Or(a, b) => MuFormula::or(dec_in(a, names)?, dec_in(b, names)?),
        P::Imp(a, b) => {
            if let Some(x) = a.free_vars().into_iter().next() {
                return untranslatable(format!(
                    "fixpoint variable `{x}` occurs left of an implication"
                ));
            }
            MuFormula::or(dec_in(a, names)?.dual(), dec_in(b, names)?)
        }
        P::DiaP(a) => MuFormula::dia(dec_in(a, names)?),
        P::BoxP(a) => MuFormula::boxed(dec_in(a, names)?),
        P::MuP(x, a) => MuFormula::Mu(x.clone(), bx(dec_in(a, names)?)),
        P::NuP(x, a) => MuFormula::Nu(x.clone(), bx(dec_in(a, names)?)),
        P::EvidenceExists { trace, .. } | P::EvidenceForall { trace, .. } => {
            return untranslatable(format!(
                "quantifies over knowledge evidence K_f({trace}), which no Kripke formula can observe"
            ))
        }
    })
}

/// Answers "is the knowledge fibre over this trace inhabited?".
pub type EvidenceOracle<'a> = &'a dyn Fn(&str) -> Option<bool>;

/// Truth of `p` at state `s`. Formulas outside the Dec fragment are evaluated
/// directly with the same fixpoint engine; evidence quantifiers need `evidence`.
pub fn mc_propmu(
    m: &KripkeStructure,
    p: &PropMuFormula,
    s: &str,
    evidence: Option<EvidenceOracle<'_>>,
) -> Result<bool, MuError> {
    let at = m
        .index_of(s)
        .ok_or_else(|| MuError::UnknownState(s.to_string()))?;
    if let Some(x) = p.free_vars().into_iter().next() {
        return Err(MuError::FreeVariable(x));
    }
    let succ = m.successors();
    let set = den_p(
        m,
        &succ,
        p,
        &mut BTreeMap::new(),
        evidence,
        &mut FixpointStats::default(),
    )?;
    Ok(set.contains(&at))
}

fn den_p(
    m: &KripkeStructure,
    succ: &[StateSet],
    p: &PropMuFormula,
    env: &mut BTreeMap<String, StateSet>,
    evidence: Option<EvidenceOracle<'_>>,
    stats: &mut FixpointStats,
) -> Result<StateSet, MuError> {
    use PropMuFormula as P;
    let everywhere = |b: bool| if b { m.all() } else { StateSet::new() };
    let state = |s: &str| {
        m.index_of(s)
            .ok_or_else(|| MuError::UnknownState(s.to_string()))
    };
    Ok(match p {
        P::Top => m.all(),
        P::Bot => StateSet::new(),
        P::AtomAt(a, s) if s == CURRENT => m.atom(a),
        P::AtomAt(a, s) => everywhere(m.holds(a, state(s)?)),
        P::NegAtomAt(a, s) if s == CURRENT => m.all().difference(&m.atom(a)).copied().collect(),
        P::NegAtomAt(a, s) => everywhere(!m.holds(a, state(s)?)),
        P::VarAt(x, s) => {
            let v = env
                .get(x)
                .cloned()
                .ok_or_else(|| MuError::FreeVariable(x.clone()))?;
            if s == CURRENT {
                v
            } else {
                everywhere(v.contains(&state(s)?))
            }
        }
        P::And(a, b) => {
            let x = den_p(m, succ, a, env, evidence, stats)?;
            let y = den_p(m, succ, b, env, evidence, stats)?;
            x.intersection(&y).copied().collect()
        }
        P::Or(a, b) => {
            let x = den_p(m, succ, a, env, evidence, stats)?;
            let y = den_p(m, succ, b, env, evidence, stats)?;
            x.union(&y).copied().collect()
        }
        P::Imp(a, b) => {
            let x = den_p(m, succ, a, env, evidence, stats)?;
            let y = den_p(m, succ, b, env, evidence, stats)?;
            m.all().difference(&x).copied().chain(y).collect()
        }
        P::DiaP(a) => m.pre_exists(succ, &den_p(m, succ, a, env, evidence, stats)?),
        P::BoxP(a) => m.pre_forall(succ, &den_p(m, succ, a, env, evidence, stats)?),
        P::MuP(x, body) | P::NuP(x, body) => {
            if !body.positive_in(x) {
                return Err(MuError::NonMonotone);
            }
            let saved = env.get(x).cloned();
            let mut inner = FixpointStats::default();
            let mut eval = |cur: &StateSet| {
                env.insert(x.clone(), cur.clone());
                den_p(m, succ, body, env, evidence, &mut inner)
            };
            let r = if matches!(p, P::MuP(..)) {
                lfp(stats, &mut eval)
            } else {
                gfp(stats, m.all(), &mut eval)
            };
            merge_stats(stats, inner);
            match saved {
                Some(s) => env.insert(x.clone(), s),
                None => env.remove(x),
            };
            r?
        }
        P::EvidenceExists { trace, body, .. } | P::EvidenceForall { trace, body, .. } => {
            let oracle = evidence.ok_or_else(|| MuError::MissingEvidence(trace.clone()))?;
            let inhabited = oracle(trace).ok_or_else(|| MuError::MissingEvidence(trace.clone()))?;
            let exists = matches!(p, P::EvidenceExists { .. });
            match (inhabited, exists) {
                (true, _) => den_p(m, succ, body, env, evidence, stats)?,
                (false, true) => StateSet::new(),
                (false, false) => m.all(),
            }
        }
    })
}

const LVL_FIX: u8 = 0;
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

impl MuFormula {
    fn render(&self, want: u8) -> String {
        use MuFormula::*;
        let (s, own) = match self {
            Atom(p) => (p.clone(), LVL_UNARY),
            NegAtom(p) => (format!("~{p}"), LVL_UNARY),
            Var(x) => (x.clone(), LVL_UNARY),
            And(a, b) => (
                format!("{} /\\ {}", a.render(LVL_UNARY), b.render(LVL_AND)),
                LVL_AND,
            ),
            Or(a, b) => (
                format!("{} \\/ {}", a.render(LVL_AND), b.render(LVL_OR)),
                LVL_OR,
            ),
            Dia(a) => (format!("dia {}", a.render(LVL_UNARY)), LVL_UNARY),
            Box(a) => (format!("box {}", a.render(LVL_UNARY)), LVL_UNARY),
            Mu(x, a) => (format!("mu {x}. {}", a.render(LVL_FIX)), LVL_FIX),
            Nu(x, a) => (format!("nu {x}. {}", a.render(LVL_FIX)), LVL_FIX),
        };
        wrap(s, own, want)
    }
}

impl fmt::Display for MuFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(LVL_FIX))
    }
}

impl PropMuFormula {
    fn render(&self, want: u8) -> String {
        use PropMuFormula::*;
        let (s, own) = match self {
            Top => ("top".into(), LVL_UNARY),
            Bot => ("bot".into(), LVL_UNARY),
            AtomAt(p, s) => (format!("{p}_at({s})"), LVL_UNARY),
            NegAtomAt(p, s) => (format!("~{p}_at({s})"), LVL_UNARY),
            VarAt(x, s) => (format!("{x}({s})"), LVL_UNARY),
            And(a, b) => (
                format!("{} /\\ {}", a.render(LVL_UNARY), b.render(LVL_AND)),
                LVL_AND,
            ),
            Or(a, b) => (
                format!("{} \\/ {}", a.render(LVL_AND), b.render(LVL_OR)),
                LVL_OR,
            ),
            Imp(a, b) => (
                format!("{} -> {}", a.render(LVL_OR), b.render(LVL_FIX)),
                LVL_FIX,
            ),
            DiaP(a) => (format!("dia {}", a.render(LVL_UNARY)), LVL_UNARY),
            BoxP(a) => (format!("box {}", a.render(LVL_UNARY)), LVL_UNARY),
            MuP(x, a) => (format!("mu {x}. {}", a.render(LVL_FIX)), LVL_FIX),
            NuP(x, a) => (format!("nu {x}. {}", a.render(LVL_FIX)), LVL_FIX),
            EvidenceExists { var, trace, body } => (
                format!("exists {var} : K_f({trace}). {}", body.render(LVL_FIX)),
                LVL_FIX,
            ),
            EvidenceForall { var, trace, body } => (
                format!("forall {var} : K_f({trace}). {}", body.render(LVL_FIX)),
                LVL_FIX,
            ),
        };
        wrap(s, own, want)
    }
}

impl fmt::Display for PropMuFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(LVL_FIX))
    }
}
