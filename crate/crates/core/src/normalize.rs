//! Reduction, normalization, conversion and the cofix guard.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::syntax::{Context, Term};

/// A global constant: its type and, for definitions, its body.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Global {
    pub ty: Term,
    pub value: Option<Term>,
}

/// Global signature. Definitions unfold during reduction.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Env {
    globals: BTreeMap<String, Global>,
}

impl Env {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare(&mut self, name: impl Into<String>, ty: Term) {
        self.globals.insert(name.into(), Global { ty, value: None });
    }

    pub fn define(&mut self, name: impl Into<String>, ty: Term, value: Term) {
        self.globals.insert(
            name.into(),
            Global {
                ty,
                value: Some(value),
            },
        );
    }

    pub fn get(&self, name: &str) -> Option<&Global> {
        self.globals.get(name)
    }

    pub fn type_of(&self, name: &str) -> Option<&Term> {
        self.globals.get(name).map(|g| &g.ty)
    }

    pub fn value_of(&self, name: &str) -> Option<&Term> {
        self.globals.get(name).and_then(|g| g.value.as_ref())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.globals.keys().map(String::as_str)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ReductionOutcome {
    Normal(Term),
    FuelExhausted { partial: Term, steps: usize },
}

impl ReductionOutcome {
    pub fn term(&self) -> &Term {
        match self {
            ReductionOutcome::Normal(t) => t,
            ReductionOutcome::FuelExhausted { partial, .. } => partial,
        }
    }

    pub fn into_normal(self) -> Option<Term> {
        match self {
            ReductionOutcome::Normal(t) => Some(t),
            ReductionOutcome::FuelExhausted { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ConvError {
    #[error("conversion undecided: fuel exhausted after {steps} steps")]
    FuelExhausted { steps: usize },
}

pub const DEFAULT_FUEL: usize = 10_000;

fn head_redex(env: &Env, t: &Term) -> Option<Term> {
    use Term::*;
    match t {
        Const(n) => env.value_of(n).cloned(),
        App(f, a) => match &**f {
            Lam(_, _, body) => Some(body.instantiate(a)),
            _ => None,
        },
        J(args) => match &args[4] {
            Refl(_) => Some(Term::app(args[1].clone(), args[2].clone())),
            _ => None,
        },
        Restrict(e, k) => match (&**e, &**k) {
            (ExtId(_), _) => Some((**k).clone()),
            (_, Restrict(e2, k2)) => Some(Term::restrict(
                Term::ext_comp((**e2).clone(), (**e).clone()),
                (**k2).clone(),
            )),
            _ => None,
        },
        ExtComp(outer, inner) => match (&**outer, &**inner) {
            (ExtId(_), _) => Some((**inner).clone()),
            (_, ExtId(_)) => Some((**outer).clone()),
            (ExtComp(a, b), c) => Some(Term::ext_comp(
                (**a).clone(),
                Term::ext_comp((**b).clone(), c.clone()),
            )),
            (ExtSteps(_, later), ExtSteps(base, earlier)) => {
                Some(ExtSteps(base.clone(), concat(earlier, later)))
            }
            (ExtSteps(_, later), ExtComp(mid, rest)) => match &**mid {
                ExtSteps(base, earlier) => Some(Term::ext_comp(
                    ExtSteps(base.clone(), concat(earlier, later)),
                    (**rest).clone(),
                )),
                _ => None,
            },
            _ => None,
        },
        ExtSteps(base, suffix) if suffix.is_empty() => Some(Term::ext_id((**base).clone())),
        Fold(w) => match &**w {
            Unfold(v) => Some((**v).clone()),
            _ => None,
        },
        Unfold(w) => match &**w {
            Fold(v) => Some((**v).clone()),
            _ => None,
        },
        NuOut(w) => match &**w {
            NuIn(v) => Some((**v).clone()),
            _ => None,
        },
        Head(x) | Tail(x) => {
            let first = matches!(t, Head(_));
            match &**x {
                Cons(s, _, r) => Some(if first { (**s).clone() } else { (**r).clone() }),
                Cofix(_, body) => {
                    let unfolded = body.instantiate(x);
                    Some(if first {
                        Head(Box::new(unfolded))
                    } else {
                        Tail(Box::new(unfolded))
                    })
                }
                _ => None,
            }
        }
        _ => None,
    }
}

fn concat(a: &[(Term, Term)], b: &[(Term, Term)]) -> Vec<(Term, Term)> {
    a.iter().chain(b).cloned().collect()
}

/// One leftmost-outermost step, unfolding definitions from `env`.
pub fn step_in(env: &Env, t: &Term) -> Option<Term> {
    if let Some(r) = head_redex(env, t) {
        return Some(r);
    }
    let mut fired = false;
    let out = t.map_children(|c, _| {
        if fired {
            return c.clone();
        }
        match step_in(env, c) {
            Some(r) => {
                fired = true;
                r
            }
            None => c.clone(),
        }
    });
    fired.then_some(out)
}

/// One leftmost-outermost step with no global definitions.
pub fn step(t: &Term) -> Option<Term> {
    step_in(&Env::new(), t)
}

pub fn normalize_in(env: &Env, t: &Term, fuel: usize) -> ReductionOutcome {
    let mut cur = t.clone();
    let mut used = 0;
    while let Some(next) = step_in(env, &cur) {
        if used == fuel {
            return ReductionOutcome::FuelExhausted {
                partial: cur,
                steps: used,
            };
        }
        cur = next;
        used += 1;
    }
    ReductionOutcome::Normal(cur)
}

pub fn normalize(t: &Term, fuel: usize) -> ReductionOutcome {
    normalize_in(&Env::new(), t, fuel)
}

fn normal_or_err(env: &Env, t: &Term, fuel: usize) -> Result<Term, ConvError> {
    match normalize_in(env, t, fuel) {
        ReductionOutcome::Normal(n) => Ok(n),
        ReductionOutcome::FuelExhausted { steps, .. } => Err(ConvError::FuelExhausted { steps }),
    }
}

/// Syntactic equality of normal forms up to η and the Imp/Forall readings of Π.
fn eq_eta(t: &Term, u: &Term) -> bool {
    use Term::*;
    match (t, u) {
        (Lam(_, _, b), Lam(_, _, c)) => eq_eta(b, c),
        (Lam(_, _, b), other) | (other, Lam(_, _, b)) => {
            let expanded = Term::app(other.shift(1), Term::Var(0));
            eq_eta(b, &expanded)
        }
        (Imp(a, b), Imp(c, d)) => eq_eta(a, c) && eq_eta(b, d),
        (Imp(a, b), Pi(_, c, d) | Forall(_, c, d)) | (Pi(_, c, d) | Forall(_, c, d), Imp(a, b)) => {
            eq_eta(a, c) && eq_eta(&b.shift(1), d)
        }
        (Pi(_, a, b) | Forall(_, a, b), Pi(_, c, d) | Forall(_, c, d)) => {
            eq_eta(a, c) && eq_eta(b, d)
        }
        _ => {
            if std::mem::discriminant(t) != std::mem::discriminant(u) {
                return false;
            }
            let shallow_t = t.map_children(|_, _| Term::Triv);
            let shallow_u = u.map_children(|_, _| Term::Triv);
            if shallow_t != shallow_u {
                return false;
            }
            let mut ts = Vec::new();
            let mut us = Vec::new();
            t.for_each_child(|c, _| ts.push(c));
            u.for_each_child(|c, _| us.push(c));
            ts.len() == us.len() && ts.iter().zip(&us).all(|(a, b)| eq_eta(a, b))
        }
    }
}

/// The final codomain of a (possibly nested) Π type.
fn final_codomain(t: &Term) -> &Term {
    match t {
        Term::Pi(_, _, b) | Term::Forall(_, _, b) | Term::Imp(_, b) => final_codomain(b),
        _ => t,
    }
}

/// Whether `ty` (a type in `ctx`) lives in `Prop`, judged from its normal form.
pub fn is_prop_type(env: &Env, ctx: &Context, ty: &Term, fuel: usize) -> Result<bool, ConvError> {
    use Term::*;
    let nf = normal_or_err(env, ty, fuel)?;
    let head = {
        let mut h = &nf;
        while let App(f, _) = h {
            h = f;
        }
        h
    };
    let prop_sort = |t: Option<Term>| -> Result<bool, ConvError> {
        match t {
            Some(t) => {
                let n = normal_or_err(env, &t, fuel)?;
                Ok(matches!(
                    final_codomain(&n),
                    Sort(crate::syntax::Sort::Prop)
                ))
            }
            None => Ok(false),
        }
    };
    match head {
        Top | Bot | And(..) | Or(..) | Forall(..) | Exists(..) | Diamond(_) | Square(_)
        | Mu(..) | Nu(..) | PropVar(_) | Atom(..) => Ok(true),
        Imp(_, b) => is_prop_type(env, ctx, b, fuel),
        Pi(h, a, b) => {
            let inner = ctx.extended(h.as_str(), (**a).clone());
            is_prop_type(env, &inner, b, fuel)
        }
        Var(i) => prop_sort(ctx.lookup(*i)),
        Const(n) => prop_sort(env.type_of(n).cloned()),
        _ => Ok(false),
    }
}

/// Definitional equality of `t` and `u` at type `ty`.
pub fn conv_in(
    env: &Env,
    ctx: &Context,
    t: &Term,
    u: &Term,
    ty: &Term,
    fuel: usize,
) -> Result<bool, ConvError> {
    if is_prop_type(env, ctx, ty, fuel)? {
        return Ok(true);
    }
    conv_untyped(env, t, u, fuel)
}

/// Definitional equality without a type: no proof irrelevance.
pub fn conv_untyped(env: &Env, t: &Term, u: &Term, fuel: usize) -> Result<bool, ConvError> {
    if t == u {
        return Ok(true);
    }
    let nt = normal_or_err(env, t, fuel)?;
    let nu = normal_or_err(env, u, fuel)?;
    Ok(eq_eta(&nt, &nu))
}

pub fn conv(ctx: &Context, t: &Term, u: &Term, ty: &Term) -> Result<bool, ConvError> {
    conv_in(&Env::new(), ctx, t, u, ty, DEFAULT_FUEL)
}

/// True iff every use of the recursion variable (`Var(0)`) in a cofix body
/// sits in the tail slot of a `cons` and never under `head`/`tail`.
pub fn guardedness_check(body: &Term) -> bool {
    if !body.has_free_var(0) {
        return true;
    }
    match body {
        Term::Cons(s, e, rest) => !s.has_free_var(0) && !e.has_free_var(0) && tail_guarded(rest, 0),
        _ => false,
    }
}

fn tail_guarded(t: &Term, index: usize) -> bool {
    match t {
        Term::Var(i) if *i == index => true,
        _ if !t.has_free_var(index) => true,
        Term::Cons(s, e, rest) => {
            !s.has_free_var(index) && !e.has_free_var(index) && tail_guarded(rest, index)
        }
        Term::Cofix(_, inner) => {
            // a nested cofix is guarded for the outer variable if its own
            // guarded shape only places the outer variable in tail slots
            guardedness_check(inner) && tail_guarded_nested(inner, index + 1)
        }
        _ => false,
    }
}

fn tail_guarded_nested(t: &Term, index: usize) -> bool {
    match t {
        Term::Cons(s, e, rest) => {
            !s.has_free_var(index) && !e.has_free_var(index) && tail_guarded(rest, index)
        }
        _ => !t.has_free_var(index),
    }
}
