//! Bidirectional type checking for the three layers, and theory checking.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::normalize::{
    conv_in, conv_untyped, guardedness_check, normalize_in, ConvError, Env, ReductionOutcome,
    DEFAULT_FUEL,
};
use crate::parser::{pretty_print_in, Declaration, Pos, Theory};
use crate::syntax::{free_var_indices, Context, Hint, Layer, Sort, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TypeErrorKind {
    Mismatch,
    Unbound,
    StratificationViolation,
    NonPositiveFixpoint,
    UnguardedCofix,
    BadExtensionWitness,
    SortError,
    FuelExhausted,
}

impl TypeErrorKind {
    pub const ALL: [TypeErrorKind; 8] = [
        TypeErrorKind::Mismatch,
        TypeErrorKind::Unbound,
        TypeErrorKind::StratificationViolation,
        TypeErrorKind::NonPositiveFixpoint,
        TypeErrorKind::UnguardedCofix,
        TypeErrorKind::BadExtensionWitness,
        TypeErrorKind::SortError,
        TypeErrorKind::FuelExhausted,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TypeErrorKind::Mismatch => "mismatch",
            TypeErrorKind::Unbound => "unbound",
            TypeErrorKind::StratificationViolation => "stratification-violation",
            TypeErrorKind::NonPositiveFixpoint => "non-positive-fixpoint",
            TypeErrorKind::UnguardedCofix => "unguarded-cofix",
            TypeErrorKind::BadExtensionWitness => "bad-extension-witness",
            TypeErrorKind::SortError => "sort-error",
            TypeErrorKind::FuelExhausted => "fuel-exhausted",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == name)
    }
}

impl fmt::Display for TypeErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{kind}: {message}")]
pub struct TypeError {
    pub kind: TypeErrorKind,
    pub message: String,
    pub pos: Option<Pos>,
    /// The local context at the failure, rendered as `name : type`.
    pub context: Vec<String>,
}

impl TypeError {
    fn new(kind: TypeErrorKind, local: &Local, message: impl Into<String>) -> Self {
        TypeError {
            kind,
            message: message.into(),
            pos: None,
            context: local.render(),
        }
    }

    fn at(mut self, pos: Pos) -> Self {
        self.pos.get_or_insert(pos);
        self
    }
}

/// Canonical evidence for `Ext_f(base, extended)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtWitness {
    pub base: Term,
    pub extended: Term,
    pub suffix: Vec<(Term, Term)>,
}

impl ExtWitness {
    pub fn to_term(&self) -> Term {
        Term::ExtSteps(Box::new(self.base.clone()), self.suffix.clone())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Polarity {
    Absent,
    Positive,
    Negative,
    Mixed,
}

impl Polarity {
    fn join(self, other: Polarity) -> Polarity {
        use Polarity::*;
        match (self, other) {
            (Absent, p) | (p, Absent) => p,
            (a, b) if a == b => a,
            _ => Mixed,
        }
    }

    fn flip(self) -> Polarity {
        match self {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
            p => p,
        }
    }

    pub fn admits_fixpoint(self) -> bool {
        matches!(self, Polarity::Absent | Polarity::Positive)
    }
}

/// Polarity of `PropVar(index)` in `phi`: arrows flip the sign on their left;
/// occurrences anywhere other than connectives and modalities count as mixed.
pub fn positivity(index: usize, phi: &Term) -> Polarity {
    use Term::*;
    match phi {
        PropVar(i) if *i == index => Polarity::Positive,
        Imp(a, b) => positivity(index, a).flip().join(positivity(index, b)),
        Pi(_, a, b) | Forall(_, a, b) => positivity(index, a).flip().join(positivity(index, b)),
        Exists(_, a, b) => {
            let dom = if a.has_free_pvar(index) {
                Polarity::Mixed
            } else {
                Polarity::Absent
            };
            dom.join(positivity(index, b))
        }
        And(a, b) | Or(a, b) => positivity(index, a).join(positivity(index, b)),
        Diamond(a) | Square(a) => positivity(index, a),
        Mu(_, b) | Nu(_, b) => positivity(index + 1, b),
        _ if phi.has_free_pvar(index) => Polarity::Mixed,
        _ => Polarity::Absent,
    }
}

fn trace_spine(t: &Term) -> Option<(Term, Vec<(Term, Term)>)> {
    match t {
        Term::Nil(s) => Some(((**s).clone(), Vec::new())),
        Term::StepTrace(rest, e, s) => {
            let (root, mut steps) = trace_spine(rest)?;
            steps.push(((**e).clone(), (**s).clone()));
            Some((root, steps))
        }
        _ => None,
    }
}

fn is_closed_trace(t: &Term) -> bool {
    trace_spine(t).is_some() && free_var_indices(t).is_empty()
}

/// Decides `Ext_f(base, extended)` for closed traces by the prefix check.
pub fn ext_witness(base: &Term, extended: &Term) -> Result<ExtWitness, TypeError> {
    ext_witness_in(&Env::new(), base, extended, DEFAULT_FUEL)
}

pub fn ext_witness_in(
    env: &Env,
    base: &Term,
    extended: &Term,
    fuel: usize,
) -> Result<ExtWitness, TypeError> {
    let local = Local::default();
    let nf = |t: &Term| match normalize_in(env, t, fuel) {
        ReductionOutcome::Normal(n) => Ok(n),
        ReductionOutcome::FuelExhausted { steps, .. } => Err(TypeError::new(
            TypeErrorKind::FuelExhausted,
            &local,
            format!("trace did not normalize within {steps} steps"),
        )),
    };
    let (b, x) = (nf(base)?, nf(extended)?);
    let bad = |msg: String| TypeError::new(TypeErrorKind::BadExtensionWitness, &local, msg);
    let (Some((root_b, steps_b)), Some((root_x, steps_x))) = (trace_spine(&b), trace_spine(&x))
    else {
        return Err(bad("extension is only decided between closed traces".into()));
    };
    let prefix = root_b == root_x
        && steps_b.len() <= steps_x.len()
        && steps_b.iter().zip(&steps_x).all(|(p, q)| p == q);
    if !prefix {
        return Err(bad(format!(
            "{} is not a prefix of {}",
            pretty_print_in(&[], &b),
            pretty_print_in(&[], &x)
        )));
    }
    Ok(ExtWitness {
        base: b,
        extended: x,
        suffix: steps_x[steps_b.len()..].to_vec(),
    })
}

fn replay(base: &Term, suffix: &[(Term, Term)]) -> Term {
    suffix.iter().fold(base.clone(), |t, (e, s)| {
        Term::step_trace(t, e.clone(), s.clone())
    })
}

#[derive(Clone, Debug, Default)]
struct Local {
    ctx: Context,
    pdepth: usize,
}

impl Local {
    fn with_var(&self, h: &Hint, ty: &Term) -> Local {
        Local {
            ctx: self.ctx.extended(h.as_str(), ty.clone()),
            pdepth: self.pdepth,
        }
    }

    fn with_pvar(&self) -> Local {
        Local {
            ctx: self.ctx.clone(),
            pdepth: self.pdepth + 1,
        }
    }

    fn names(&self) -> Vec<String> {
        self.ctx.entries().iter().map(|(n, _)| n.clone()).collect()
    }

    fn render(&self) -> Vec<String> {
        let names = self.names();
        self.ctx
            .entries()
            .iter()
            .enumerate()
            .map(|(i, (n, ty))| format!("{n} : {}", pretty_print_in(&names[..i], ty)))
            .collect()
    }

    fn show(&self, t: &Term) -> String {
        pretty_print_in(&self.names(), t)
    }
}

fn final_codomain(t: &Term) -> &Term {
    match t {
        Term::Pi(_, _, b) | Term::Forall(_, _, b) | Term::Imp(_, b) => final_codomain(b),
        _ => t,
    }
}

/// Type checker over a global environment.
#[derive(Clone, Debug)]
pub struct Checker {
    pub env: Env,
    pub fuel: usize,
    layers: BTreeMap<String, Layer>,
}

impl Default for Checker {
    fn default() -> Self {
        Checker::new(DEFAULT_FUEL)
    }
}

impl Checker {
    pub fn new(fuel: usize) -> Self {
        Checker {
            env: Env::new(),
            fuel,
            layers: BTreeMap::new(),
        }
    }

    fn nf(&self, local: &Local, t: &Term) -> Result<Term, TypeError> {
        match normalize_in(&self.env, t, self.fuel) {
            ReductionOutcome::Normal(n) => Ok(n),
            ReductionOutcome::FuelExhausted { steps, .. } => Err(TypeError::new(
                TypeErrorKind::FuelExhausted,
                local,
                format!("{} did not normalize within {steps} steps", local.show(t)),
            )),
        }
    }

    fn conv_err(&self, local: &Local, e: ConvError) -> TypeError {
        TypeError::new(TypeErrorKind::FuelExhausted, local, e.to_string())
    }

    fn same(&self, local: &Local, a: &Term, b: &Term) -> Result<bool, TypeError> {
        conv_untyped(&self.env, a, b, self.fuel).map_err(|e| self.conv_err(local, e))
    }

    fn mismatch(&self, local: &Local, t: &Term, expected: &Term, actual: &Term) -> TypeError {
        TypeError::new(
            TypeErrorKind::Mismatch,
            local,
            format!(
                "{} has type {} but {} was expected",
                local.show(t),
                local.show(actual),
                local.show(expected)
            ),
        )
    }

    fn sort_of(&self, local: &Local, ty: &Term) -> Result<Sort, TypeError> {
        let s = self.infer_in(local, ty)?;
        match self.nf(local, &s)? {
            Term::Sort(s) => Ok(s),
            other => Err(TypeError::new(
                TypeErrorKind::SortError,
                local,
                format!(
                    "{} is not a type (it has type {})",
                    local.show(ty),
                    local.show(&other)
                ),
            )),
        }
    }

    /// Layer of a name whose type is `ty`.
    fn layer_of_type(&self, local: &Local, ty: &Term) -> Result<Layer, TypeError> {
        let n = self.nf(local, ty)?;
        if matches!(final_codomain(&n), Term::Sort(Sort::Prop)) {
            return Ok(Layer::Prop);
        }
        Ok(self.sort_of(local, ty)?.layer())
    }

    fn layer_of_var(&self, local: &Local, i: usize) -> Result<Layer, TypeError> {
        let n = local.ctx.len();
        let prefix = Local {
            ctx: Context::from_entries(local.ctx.entries()[..n - 1 - i].to_vec()),
            pdepth: 0,
        };
        let ty = &local.ctx.entries()[n - 1 - i].1;
        self.layer_of_type(&prefix, ty)
    }

    fn layer_of_const(&self, local: &Local, name: &str) -> Result<Layer, TypeError> {
        if let Some(l) = self.layers.get(name) {
            return Ok(*l);
        }
        match self.env.type_of(name) {
            Some(ty) => self.layer_of_type(&Local::default(), ty),
            None => Err(TypeError::new(
                TypeErrorKind::Unbound,
                local,
                format!("unknown constant `{name}`"),
            )),
        }
    }

    /// Rejects a type of sort `sort` that mentions names from a forbidden layer.
    fn audit_formation(&self, local: &Local, ty: &Term, sort: Sort) -> Result<(), TypeError> {
        let forbidden = |l: Layer| match sort {
            Sort::Uc(_) => l != Layer::Uc,
            Sort::TypeL(_) => l == Layer::Prop,
            Sort::Prop => false,
        };
        if sort == Sort::Prop {
            return Ok(());
        }
        for i in free_var_indices(ty) {
            if i < local.ctx.len() {
                let l = self.layer_of_var(local, i)?;
                if forbidden(l) {
                    let name = local.ctx.name_of(i).unwrap_or("?");
                    return Err(TypeError::new(
                        TypeErrorKind::StratificationViolation,
                        local,
                        format!(
                            "{sort} type {} depends on {l} variable `{name}`",
                            local.show(ty)
                        ),
                    ));
                }
            }
        }
        for c in ty.constants() {
            let l = self.layer_of_const(local, &c)?;
            if forbidden(l) {
                return Err(TypeError::new(
                    TypeErrorKind::StratificationViolation,
                    local,
                    format!(
                        "{sort} type {} depends on {l} constant `{c}`",
                        local.show(ty)
                    ),
                ));
            }
        }
        Ok(())
    }

    fn pi_sort(&self, local: &Local, t: &Term, dom: Sort, cod: Sort) -> Result<Sort, TypeError> {
        use Sort::*;
        let violation = |what: &str| {
            Err(TypeError::new(
                TypeErrorKind::StratificationViolation,
                local,
                format!("{}: {what}", local.show(t)),
            ))
        };
        match (dom, cod) {
            (_, Prop) => Ok(Prop),
            (Uc(i), Uc(j)) => Ok(Uc(i.max(j))),
            (Uc(i), TypeL(j)) | (TypeL(i), TypeL(j)) => Ok(TypeL(i.max(j))),
            (TypeL(_), Uc(_)) => {
                violation("a computational type cannot depend on a constructive one")
            }
            (Prop, Uc(_)) => violation("a computational type cannot depend on a proof"),
            (Prop, TypeL(_)) => violation("a constructive type cannot depend on a proof"),
        }
    }

    fn expect_prop(&self, local: &Local, t: &Term) -> Result<(), TypeError> {
        self.check_in(local, t, &Term::Sort(Sort::Prop))
    }

    fn expect(&self, local: &Local, t: &Term, ty: Term) -> Result<(), TypeError> {
        self.check_in(local, t, &ty)
    }

    fn infer_ext(&self, local: &Local, e: &Term) -> Result<(Term, Term), TypeError> {
        let ty = self.infer_in(local, e)?;
        match self.nf(local, &ty)? {
            Term::ExtF(a, b) => Ok((*a, *b)),
            other => Err(TypeError::new(
                TypeErrorKind::Mismatch,
                local,
                format!(
                    "{} is not an extension witness (type {})",
                    local.show(e),
                    local.show(&other)
                ),
            )),
        }
    }

    fn infer_in(&self, local: &Local, t: &Term) -> Result<Term, TypeError> {
        use Term::*;
        let b = |t: Term| Box::new(t);
        let ty = match t {
            Var(i) => local.ctx.lookup(*i).ok_or_else(|| {
                TypeError::new(
                    TypeErrorKind::Unbound,
                    local,
                    format!("variable #{i} is unbound"),
                )
            })?,
            Const(n) => self.env.type_of(n).cloned().ok_or_else(|| {
                TypeError::new(
                    TypeErrorKind::Unbound,
                    local,
                    format!("unknown constant `{n}`"),
                )
            })?,
            Sort(s) => Sort(s.successor()),
            PropVar(i) => {
                if *i >= local.pdepth {
                    return Err(TypeError::new(
                        TypeErrorKind::Unbound,
                        local,
                        format!("predicate variable #{i} is unbound"),
                    ));
                }
                Sort(crate::syntax::Sort::Prop)
            }
            Pi(h, a, body) => {
                let sa = self.sort_of(local, a)?;
                let sb = self.sort_of(&local.with_var(h, a), body)?;
                Sort(self.pi_sort(local, t, sa, sb)?)
            }
            Lam(h, a, body) => {
                self.sort_of(local, a)?;
                let bt = self.infer_in(&local.with_var(h, a), body)?;
                let pi = Pi(h.clone(), a.clone(), b(bt));
                self.sort_of(local, &pi)?;
                pi
            }
            App(f, a) => {
                let ft = self.infer_in(local, f)?;
                match self.nf(local, &ft)? {
                    Pi(_, dom, cod) | Forall(_, dom, cod) => {
                        self.check_in(local, a, &dom)?;
                        cod.instantiate(a)
                    }
                    Imp(dom, cod) => {
                        self.check_in(local, a, &dom)?;
                        *cod
                    }
                    other => {
                        return Err(TypeError::new(
                            TypeErrorKind::Mismatch,
                            local,
                            format!(
                                "{} is applied but has type {}",
                                local.show(f),
                                local.show(&other)
                            ),
                        ))
                    }
                }
            }
            State | Event | Nat | FinTrace | InfTrace => Sort(crate::syntax::Sort::Uc(0)),
            Step(s, e, s2) => {
                self.expect(local, s, State)?;
                self.expect(local, e, Event)?;
                self.expect(local, s2, State)?;
                Sort(crate::syntax::Sort::Uc(0))
            }
            Nil(s) => {
                self.expect(local, s, State)?;
                FinTrace
            }
            StepTrace(tr, e, s) => {
                self.expect(local, tr, FinTrace)?;
                self.expect(local, e, Event)?;
                self.expect(local, s, State)?;
                FinTrace
            }
            Cons(s, e, r) => {
                self.expect(local, s, State)?;
                self.expect(local, e, Event)?;
                self.expect(local, r, InfTrace)?;
                InfTrace
            }
            Head(x) => {
                self.expect(local, x, InfTrace)?;
                State
            }
            Tail(x) => {
                self.expect(local, x, InfTrace)?;
                InfTrace
            }
            Cofix(h, body) => {
                if !guardedness_check(body) {
                    return Err(TypeError::new(
                        TypeErrorKind::UnguardedCofix,
                        local,
                        format!("recursive call in {} is not guarded by cons", local.show(t)),
                    ));
                }
                self.check_in(&local.with_var(h, &InfTrace), body, &InfTrace)?;
                InfTrace
            }
            ExtF(a, c) => {
                self.expect(local, a, FinTrace)?;
                self.expect(local, c, FinTrace)?;
                Sort(crate::syntax::Sort::Uc(0))
            }
            ExtId(a) => {
                self.expect(local, a, FinTrace)?;
                ExtF(a.clone(), a.clone())
            }
            ExtComp(e2, e1) => {
                let (a, m1) = self.infer_ext(local, e1)?;
                let (m2, c) = self.infer_ext(local, e2)?;
                if !self.same(local, &m1, &m2)? {
                    return Err(TypeError::new(
                        TypeErrorKind::BadExtensionWitness,
                        local,
                        format!(
                            "cannot compose: {} ends at {} but {} starts at {}",
                            local.show(e1),
                            local.show(&m1),
                            local.show(e2),
                            local.show(&m2)
                        ),
                    ));
                }
                ExtF(b(a), b(c))
            }
            ExtSteps(base, suffix) => {
                self.expect(local, base, FinTrace)?;
                for (e, s) in suffix {
                    self.expect(local, e, Event)?;
                    self.expect(local, s, State)?;
                }
                ExtF(base.clone(), b(replay(base, suffix)))
            }
            KF(a) => {
                self.expect(local, a, FinTrace)?;
                Sort(crate::syntax::Sort::TypeL(0))
            }
            KInf(p) => {
                self.expect(local, p, InfTrace)?;
                Sort(crate::syntax::Sort::TypeL(0))
            }
            Restrict(e, k) => {
                let (a, c) = self.infer_ext(local, e)?;
                let kt = self.infer_in(local, k)?;
                match self.nf(local, &kt)? {
                    KF(target) if self.same(local, &target, &c)? => KF(b(a)),
                    KF(target) => {
                        return Err(TypeError::new(
                            TypeErrorKind::BadExtensionWitness,
                            local,
                            format!(
                                "{} extends to {} but {} lives over {}",
                                local.show(e),
                                local.show(&c),
                                local.show(k),
                                local.show(&target)
                            ),
                        ))
                    }
                    other => return Err(self.mismatch(local, k, &KF(b(c)), &other)),
                }
            }
            Id(a, x, y) => {
                let s = self.sort_of(local, a)?;
                if !matches!(s, crate::syntax::Sort::Uc(_)) {
                    return Err(TypeError::new(
                        TypeErrorKind::SortError,
                        local,
                        format!("identity types are formed over computational types, not {s}"),
                    ));
                }
                self.check_in(local, x, a)?;
                self.check_in(local, y, a)?;
                Sort(s)
            }
            Refl(a) => {
                let at = self.infer_in(local, a)?;
                Id(b(at), a.clone(), a.clone())
            }
            J(args) => {
                let [c, d, x, y, p] = &**args;
                let pt = self.infer_in(local, p)?;
                let (a, px, py) = match self.nf(local, &pt)? {
                    Id(a, px, py) => (*a, *px, *py),
                    other => {
                        return Err(TypeError::new(
                            TypeErrorKind::Mismatch,
                            local,
                            format!("J eliminates an identity proof, got {}", local.show(&other)),
                        ))
                    }
                };
                self.check_in(local, x, &a)?;
                self.check_in(local, y, &a)?;
                if !self.same(local, x, &px)? || !self.same(local, y, &py)? {
                    return Err(self.mismatch(
                        local,
                        p,
                        &Id(b(a.clone()), b(x.clone()), b(y.clone())),
                        &pt,
                    ));
                }
                // C : (x y : A) -> Id(A, x, y) -> s
                let ct = self.infer_in(local, c)?;
                let motive_ok = match as_pi(self.nf(local, &ct)?) {
                    Some((d1, r1)) => match as_pi(*r1) {
                        Some((d2, r2)) => match as_pi(*r2) {
                            Some((_, r3)) => {
                                matches!(*r3, Sort(_))
                                    && self.same(local, &d1, &a)?
                                    && self.same(local, &d2, &a.shift(1))?
                            }
                            None => false,
                        },
                        None => false,
                    },
                    None => false,
                };
                if !motive_ok {
                    return Err(TypeError::new(
                        TypeErrorKind::Mismatch,
                        local,
                        format!("J motive {} has type {}", local.show(c), local.show(&ct)),
                    ));
                }
                // d : (z : A) -> C z z (refl z)
                let z = Var(0);
                let dt = Pi(
                    Hint::new("z"),
                    b(a.clone()),
                    b(Term::apps(c.shift(1), [z.clone(), z.clone(), Refl(b(z))])),
                );
                self.check_in(local, d, &dt)?;
                Term::apps(c.clone(), [x.clone(), y.clone(), p.clone()])
            }
            Top | Bot => Sort(crate::syntax::Sort::Prop),
            Triv => Top,
            Absurd(p, a) => {
                self.expect(local, p, Bot)?;
                let s = self.sort_of(local, a)?;
                if s != crate::syntax::Sort::Prop {
                    return Err(TypeError::new(
                        TypeErrorKind::StratificationViolation,
                        local,
                        format!(
                            "a proof of bot cannot produce a {s} term of type {}",
                            local.show(a)
                        ),
                    ));
                }
                (**a).clone()
            }
            Imp(x, y) => {
                // a bare arrow between non-propositions is a non-dependent Π
                let sx = self.sort_of(local, x)?;
                let sy = self.sort_of(local, y)?;
                Sort(self.pi_sort(local, t, sx, sy)?)
            }
            And(x, y) | Or(x, y) => {
                self.expect_prop(local, x)?;
                self.expect_prop(local, y)?;
                Sort(crate::syntax::Sort::Prop)
            }
            Forall(h, a, p) | Exists(h, a, p) => {
                let s = self.sort_of(local, a)?;
                if s == crate::syntax::Sort::Prop {
                    return Err(TypeError::new(
                        TypeErrorKind::SortError,
                        local,
                        format!(
                            "quantifier domain {} is a proposition; use ->",
                            local.show(a)
                        ),
                    ));
                }
                self.expect_prop(&local.with_var(h, a), p)?;
                Sort(crate::syntax::Sort::Prop)
            }
            Diamond(p) | Square(p) => {
                self.expect_prop(local, p)?;
                Sort(crate::syntax::Sort::Prop)
            }
            Mu(_, body) | Nu(_, body) => {
                let pol = positivity(0, body);
                if !pol.admits_fixpoint() {
                    return Err(TypeError::new(
                        TypeErrorKind::NonPositiveFixpoint,
                        local,
                        format!("bound variable occurs {pol:?} in {}", local.show(t)),
                    ));
                }
                self.expect_prop(&local.with_pvar(), body)?;
                Sort(crate::syntax::Sort::Prop)
            }
            Atom(_, s) => {
                self.expect(local, s, State)?;
                Sort(crate::syntax::Sort::Prop)
            }
            Unfold(w) | NuOut(w) => {
                let wt = self.infer_in(local, w)?;
                match (t, self.nf(local, &wt)?) {
                    (Unfold(_), fix @ Mu(..)) | (NuOut(_), fix @ Nu(..)) => unroll(&fix),
                    (_, other) => {
                        let want = if matches!(t, Unfold(_)) { "mu" } else { "nu" };
                        return Err(TypeError::new(
                            TypeErrorKind::Mismatch,
                            local,
                            format!(
                                "{} has type {}, expected a {want} fixpoint",
                                local.show(w),
                                local.show(&other)
                            ),
                        ));
                    }
                }
            }
            Fold(_) | NuIn(_) => {
                return Err(TypeError::new(
                    TypeErrorKind::Mismatch,
                    local,
                    format!(
                        "cannot infer the fixpoint of {}; check it against one",
                        local.show(t)
                    ),
                ))
            }
        };
        if let Term::Sort(s) = &ty {
            self.audit_formation(local, t, *s)?;
        }
        Ok(ty)
    }

    fn check_in(&self, local: &Local, t: &Term, ty: &Term) -> Result<(), TypeError> {
        use Term::*;
        let want = self.nf(local, ty)?;
        match (t, &want) {
            (Lam(h, a, body), Pi(_, dom, cod) | Forall(_, dom, cod)) => {
                self.sort_of(local, a)?;
                if !self.same(local, a, dom)? {
                    return Err(self.mismatch(local, a, dom, a));
                }
                self.check_in(&local.with_var(h, a), body, cod)
            }
            (Lam(h, a, body), Imp(dom, cod)) => {
                self.sort_of(local, a)?;
                if !self.same(local, a, dom)? {
                    return Err(self.mismatch(local, a, dom, a));
                }
                self.check_in(&local.with_var(h, a), body, &cod.shift(1))
            }
            (Fold(w), Mu(..)) | (NuIn(w), Nu(..)) => self.check_in(local, w, &unroll(&want)),
            (Refl(a), Id(at, x, y)) => {
                self.check_in(local, a, at)?;
                if !self.same(local, a, x)? || !self.same(local, a, y)? {
                    let actual = Id(at.clone(), a.clone(), a.clone());
                    return Err(self.mismatch(local, t, &want, &actual));
                }
                Ok(())
            }
            _ => {
                if let ExtF(a, c) = &want {
                    if is_closed_trace(a) && is_closed_trace(c) {
                        ext_witness_in(&self.env, a, c, self.fuel).map_err(|mut e| {
                            e.context = local.render();
                            e
                        })?;
                    }
                }
                let actual = self.infer_in(local, t)?;
                if self.same(local, &actual, &want)? {
                    return Ok(());
                }
                if let (Restrict(..), KF(to), KF(from)) = (t, &want, &self.nf(local, &actual)?) {
                    let forward = is_closed_trace(to)
                        && is_closed_trace(from)
                        && ext_witness_in(&self.env, from, to, self.fuel)
                            .is_ok_and(|w| !w.suffix.is_empty());
                    if forward {
                        return Err(TypeError::new(
                            TypeErrorKind::BadExtensionWitness,
                            local,
                            format!(
                                "{} restricts to {}, which {} extends; knowledge only restricts to prefixes",
                                local.show(t),
                                local.show(from),
                                local.show(to)
                            ),
                        ));
                    }
                }
                {
                    Err(self.mismatch(local, t, &want, &actual))
                }
            }
        }
    }

    pub fn infer(&self, ctx: &Context, t: &Term) -> Result<Term, TypeError> {
        self.infer_in(
            &Local {
                ctx: ctx.clone(),
                pdepth: 0,
            },
            t,
        )
    }

    /// Like [`infer`](Self::infer) under `pvars` enclosing fixpoint binders.
    pub fn infer_open(&self, ctx: &Context, pvars: usize, t: &Term) -> Result<Term, TypeError> {
        self.infer_in(
            &Local {
                ctx: ctx.clone(),
                pdepth: pvars,
            },
            t,
        )
    }

    /// Checks `t` against `ty`, already known to be a type, under `pvars`
    /// enclosing fixpoint binders.
    pub fn check_open(
        &self,
        ctx: &Context,
        pvars: usize,
        t: &Term,
        ty: &Term,
    ) -> Result<(), TypeError> {
        self.check_in(
            &Local {
                ctx: ctx.clone(),
                pdepth: pvars,
            },
            t,
            ty,
        )
    }

    pub fn check(&self, ctx: &Context, t: &Term, ty: &Term) -> Result<(), TypeError> {
        let local = Local {
            ctx: ctx.clone(),
            pdepth: 0,
        };
        self.sort_of(&local, ty)?;
        self.check_in(&local, t, ty)
    }

    /// Checks each entry's type over its prefix and returns the entries' layers.
    pub fn check_context(&self, ctx: &Context) -> Result<Vec<Layer>, TypeError> {
        let mut prefix = Local::default();
        let mut layers = Vec::new();
        for (name, ty) in ctx.entries() {
            layers.push(self.layer_of_type(&prefix, ty)?);
            prefix.ctx.push(name.clone(), ty.clone());
        }
        Ok(layers)
    }

    /// Stratification audit for `t` in `ctx`: `t` must type-check, a type it
    /// forms may not mention names from a higher layer, and a computational
    /// term may not mention proofs.
    pub fn check_stratification(&self, ctx: &Context, t: &Term) -> Result<(), TypeError> {
        let local = Local {
            ctx: ctx.clone(),
            pdepth: 0,
        };
        let ty = self.infer_in(&local, t)?;
        self.stratify(&local, t, &ty)
    }

    fn stratify(&self, local: &Local, t: &Term, ty: &Term) -> Result<(), TypeError> {
        if let Term::Sort(s) = self.nf(local, ty)? {
            return self.audit_formation(local, t, s);
        }
        if self.layer_of_type(local, ty)? == Layer::Uc {
            self.audit_formation(local, t, Sort::Uc(0))?;
        }
        Ok(())
    }

    pub fn conv(&self, ctx: &Context, t: &Term, u: &Term, ty: &Term) -> Result<bool, TypeError> {
        conv_in(&self.env, ctx, t, u, ty, self.fuel).map_err(|e| {
            self.conv_err(
                &Local {
                    ctx: ctx.clone(),
                    pdepth: 0,
                },
                e,
            )
        })
    }

    fn check_decl(&mut self, decl: &Declaration) -> Result<(), TypeError> {
        let empty = Context::new();
        match decl {
            Declaration::Axiom { name, ty } => {
                self.check_type_of_name(ty)?;
                if let Term::ExtF(a, c) = self.nf(&Local::default(), ty)? {
                    if is_closed_trace(&a) && is_closed_trace(&c) {
                        ext_witness_in(&self.env, &a, &c, self.fuel)?;
                    }
                }
                self.add(name, ty.clone(), None);
                Ok(())
            }
            Declaration::Definition { name, ty, body } => {
                self.check_type_of_name(ty)?;
                let result = self
                    .check(&empty, body, ty)
                    .and_then(|_| self.stratify(&Local::default(), body, ty));
                // dependents still see the name, so a bad body is blamed once
                self.add(name, ty.clone(), result.is_ok().then(|| body.clone()));
                result
            }
            Declaration::CheckType { term, ty } => {
                self.check(&empty, term, ty)?;
                self.stratify(&Local::default(), term, ty)
            }
            Declaration::CheckEq { lhs, rhs } => {
                // fold/nu_in only check, so either side may carry the type
                let ty = match self.infer(&empty, lhs) {
                    Ok(ty) => {
                        self.check(&empty, rhs, &ty)?;
                        ty
                    }
                    Err(first) => {
                        let ty = self.infer(&empty, rhs).map_err(|_| first)?;
                        self.check(&empty, lhs, &ty)?;
                        ty
                    }
                };
                if self.conv(&empty, lhs, rhs, &ty)? {
                    Ok(())
                } else {
                    let local = Local::default();
                    Err(TypeError::new(
                        TypeErrorKind::Mismatch,
                        &local,
                        format!(
                            "{} and {} are not convertible",
                            local.show(lhs),
                            local.show(rhs)
                        ),
                    ))
                }
            }
        }
    }

    fn check_type_of_name(&self, ty: &Term) -> Result<(), TypeError> {
        self.sort_of(&Local::default(), ty).map(|_| ())
    }

    fn add(&mut self, name: &str, ty: Term, value: Option<Term>) {
        let layer = self.layer_of_type(&Local::default(), &ty).ok();
        match value {
            Some(v) => self.env.define(name, ty, v),
            None => self.env.declare(name, ty),
        }
        if let Some(l) = layer {
            self.layers.insert(name.to_string(), l);
        }
    }

    /// The layer a declaration lives in: that of its name, or for a check
    /// that of the type it checks at.
    pub fn decl_layer(&self, decl: &Declaration) -> Option<Layer> {
        let local = Local::default();
        match decl {
            Declaration::Axiom { name, .. } | Declaration::Definition { name, .. } => {
                self.layer_of(name)
            }
            Declaration::CheckType { ty, .. } => self.layer_of_type(&local, ty).ok(),
            Declaration::CheckEq { lhs, rhs } => {
                let ty = self
                    .infer_in(&local, lhs)
                    .or_else(|_| self.infer_in(&local, rhs))
                    .ok()?;
                self.layer_of_type(&local, &ty).ok()
            }
        }
    }

    pub fn layer_of(&self, name: &str) -> Option<Layer> {
        self.layers.get(name).copied()
    }
}

/// Views Π, ∀ and a bare arrow uniformly as a domain and a codomain under one binder.
fn as_pi(t: Term) -> Option<(Box<Term>, Box<Term>)> {
    match t {
        Term::Pi(_, a, b) | Term::Forall(_, a, b) => Some((a, b)),
        Term::Imp(a, b) => Some((a, Box::new(b.shift(1)))),
        _ => None,
    }
}

/// `φ[fix/X]` for a `Mu`/`Nu` node `fix` with body `φ`.
pub fn unroll(fix: &Term) -> Term {
    match fix {
        Term::Mu(_, body) | Term::Nu(_, body) => body.instantiate_pvar(fix),
        _ => fix.clone(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeclReport {
    pub label: String,
    pub pos: Pos,
    pub layer: Option<Layer>,
    pub result: Result<(), TypeError>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TheoryReport {
    pub decls: Vec<DeclReport>,
}

impl TheoryReport {
    pub fn all_ok(&self) -> bool {
        self.decls.iter().all(|d| d.result.is_ok())
    }

    pub fn errors(&self) -> impl Iterator<Item = (&DeclReport, &TypeError)> {
        self.decls
            .iter()
            .filter_map(|d| d.result.as_ref().err().map(|e| (d, e)))
    }

    /// One tab-separated line per declaration: `label ok` or `label error kind`.
    pub fn machine_lines(&self) -> Vec<String> {
        self.decls
            .iter()
            .map(|d| match &d.result {
                Ok(()) => format!("{}\tok", d.label),
                Err(e) => format!("{}\terror\t{}", d.label, e.kind),
            })
            .collect()
    }

    pub fn human_lines(&self) -> Vec<String> {
        self.decls
            .iter()
            .map(|d| match &d.result {
                Ok(()) => format!("{} ({}): ok", d.label, d.pos),
                Err(e) => format!("{} ({}): {e}", d.label, d.pos),
            })
            .collect()
    }
}

pub fn check_theory(theory: &Theory) -> TheoryReport {
    check_theory_with(theory, DEFAULT_FUEL).0
}

/// Checks declarations in order and returns the report with the final checker.
pub fn check_theory_with(theory: &Theory, fuel: usize) -> (TheoryReport, Checker) {
    let mut checker = Checker::new(fuel);
    let mut report = TheoryReport::default();
    for located in &theory.decls {
        let result = checker
            .check_decl(&located.decl)
            .map_err(|e| e.at(located.pos));
        let layer = checker.decl_layer(&located.decl);
        report.decls.push(DeclReport {
            label: located.label(),
            pos: located.pos,
            layer,
            result,
        });
    }
    let audit = dependency_audit(theory, &checker);
    for (i, err) in audit {
        if report.decls[i].result.is_ok() {
            report.decls[i].result = Err(err.at(theory.decls[i].pos));
        }
    }
    (report, checker)
}

/// Every computational declaration's dependency edges, checked against the
/// layers of the names they point at.
pub fn dependency_audit(theory: &Theory, checker: &Checker) -> Vec<(usize, TypeError)> {
    let mut out = Vec::new();
    for (i, located) in theory.decls.iter().enumerate() {
        let Some(name) = located.decl.name() else {
            continue;
        };
        if checker.layer_of(name) != Some(Layer::Uc) {
            continue;
        }
        for t in located.decl.terms() {
            for c in t.constants() {
                if checker.layer_of(&c) == Some(Layer::Prop) {
                    out.push((
                        i,
                        TypeError {
                            kind: TypeErrorKind::StratificationViolation,
                            message: format!("computational `{name}` depends on proof-layer `{c}`"),
                            pos: None,
                            context: Vec::new(),
                        },
                    ));
                }
            }
        }
    }
    out
}
