//! Abstract syntax shared by all three layers.
//!
//! Binding is nameless: `Var(i)` is a de Bruijn index counting ordinary
//! binders (`Pi`, `Lam`, `Cofix`, `Forall`, `Exists`) and `PropVar(i)` counts
//! predicate binders (`Mu`, `Nu`) only. The two index spaces are independent.
//! Binders carry a [`Hint`] used for printing; hints never take part in
//! equality, so the derived `PartialEq` on [`Term`] is α-equivalence.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// A printing-only name attached to a binder.
#[derive(Clone, Debug, Default)]
pub struct Hint(pub String);

impl Hint {
    pub fn new(name: impl Into<String>) -> Self {
        Hint(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl PartialEq for Hint {
    fn eq(&self, _: &Hint) -> bool {
        true
    }
}

impl Eq for Hint {}

/// The three universe hierarchies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sort {
    Uc(u32),
    TypeL(u32),
    Prop,
}

impl Sort {
    /// The sort this sort inhabits. `Prop : TypeL_0`, otherwise one level up.
    pub fn successor(self) -> Sort {
        match self {
            Sort::Uc(i) => Sort::Uc(i + 1),
            Sort::TypeL(i) => Sort::TypeL(i + 1),
            Sort::Prop => Sort::TypeL(0),
        }
    }

    pub fn layer(self) -> Layer {
        match self {
            Sort::Uc(_) => Layer::Uc,
            Sort::TypeL(_) => Layer::TypeL,
            Sort::Prop => Layer::Prop,
        }
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Uc(i) => write!(f, "Uc{i}"),
            Sort::TypeL(i) => write!(f, "TypeL{i}"),
            Sort::Prop => write!(f, "Prop"),
        }
    }
}

/// Which layer a type (and therefore its inhabitants) lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Layer {
    Uc,
    TypeL,
    Prop,
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Layer::Uc => "Uc",
            Layer::TypeL => "TypeL",
            Layer::Prop => "Prop",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Term {
    Var(usize),
    /// A global name: an axiom, a definition, or an unresolved identifier.
    Const(String),
    Sort(Sort),
    Pi(Hint, Box<Term>, Box<Term>),
    /// `fun (x : A) => body`; the domain annotation is mandatory.
    Lam(Hint, Box<Term>, Box<Term>),
    App(Box<Term>, Box<Term>),

    State,
    Event,
    Nat,
    /// `Step(s, e, s')`, the type of transition evidence.
    Step(Box<Term>, Box<Term>, Box<Term>),

    FinTrace,
    Nil(Box<Term>),
    StepTrace(Box<Term>, Box<Term>, Box<Term>),
    InfTrace,
    /// The observable layer `<s, (e, rest)>` of an infinite trace.
    Cons(Box<Term>, Box<Term>, Box<Term>),
    Head(Box<Term>),
    Tail(Box<Term>),
    /// `cofix f. body`, the recursion variable is `Var(0)` in `body`.
    Cofix(Hint, Box<Term>),

    ExtF(Box<Term>, Box<Term>),
    ExtId(Box<Term>),
    /// `ext_comp(e2, e1)` composes `e1 : Ext_f(t, t')` with `e2 : Ext_f(t', t'')`.
    ExtComp(Box<Term>, Box<Term>),
    /// Canonical extension witness: a base trace and the `(event, state)`
    /// suffix replayed on it.
    ExtSteps(Box<Term>, Vec<(Term, Term)>),
    KF(Box<Term>),
    KInf(Box<Term>),
    Restrict(Box<Term>, Box<Term>),

    Id(Box<Term>, Box<Term>, Box<Term>),
    Refl(Box<Term>),
    J(Box<[Term; 5]>),

    Top,
    Bot,
    /// The proof of `top`.
    Triv,
    /// `absurd(p, A)`: eliminate a proof of `bot` into `A`.
    Absurd(Box<Term>, Box<Term>),
    And(Box<Term>, Box<Term>),
    Or(Box<Term>, Box<Term>),
    Imp(Box<Term>, Box<Term>),
    Forall(Hint, Box<Term>, Box<Term>),
    Exists(Hint, Box<Term>, Box<Term>),
    Diamond(Box<Term>),
    Square(Box<Term>),
    Mu(Hint, Box<Term>),
    Nu(Hint, Box<Term>),
    Fold(Box<Term>),
    Unfold(Box<Term>),
    NuIn(Box<Term>),
    NuOut(Box<Term>),
    PropVar(usize),
    /// An atomic proposition evaluated at an explicit state, `p_at(s)`.
    Atom(String, Box<Term>),
}

/// How many binders of each kind a child sits under, relative to its parent.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Scope {
    pub vars: usize,
    pub pvars: usize,
}

const HERE: Scope = Scope { vars: 0, pvars: 0 };
const UNDER_VAR: Scope = Scope { vars: 1, pvars: 0 };
const UNDER_PVAR: Scope = Scope { vars: 0, pvars: 1 };

fn bx(t: Term) -> Box<Term> {
    Box::new(t)
}

impl Term {
    pub fn var(i: usize) -> Term {
        Term::Var(i)
    }

    pub fn cnst(name: impl Into<String>) -> Term {
        Term::Const(name.into())
    }

    pub fn app(f: Term, a: Term) -> Term {
        Term::App(bx(f), bx(a))
    }

    pub fn apps(f: Term, args: impl IntoIterator<Item = Term>) -> Term {
        args.into_iter().fold(f, Term::app)
    }

    pub fn pi(name: &str, dom: Term, cod: Term) -> Term {
        Term::Pi(Hint::new(name), bx(dom), bx(cod))
    }

    pub fn lam(name: &str, dom: Term, body: Term) -> Term {
        Term::Lam(Hint::new(name), bx(dom), bx(body))
    }

    pub fn nil(s: Term) -> Term {
        Term::Nil(bx(s))
    }

    pub fn step_trace(t: Term, e: Term, s: Term) -> Term {
        Term::StepTrace(bx(t), bx(e), bx(s))
    }

    pub fn restrict(e: Term, k: Term) -> Term {
        Term::Restrict(bx(e), bx(k))
    }

    pub fn ext_id(t: Term) -> Term {
        Term::ExtId(bx(t))
    }

    pub fn ext_comp(e2: Term, e1: Term) -> Term {
        Term::ExtComp(bx(e2), bx(e1))
    }

    pub fn kf(t: Term) -> Term {
        Term::KF(bx(t))
    }

    pub fn and(a: Term, b: Term) -> Term {
        Term::And(bx(a), bx(b))
    }

    pub fn or(a: Term, b: Term) -> Term {
        Term::Or(bx(a), bx(b))
    }

    pub fn imp(a: Term, b: Term) -> Term {
        Term::Imp(bx(a), bx(b))
    }

    pub fn dia(a: Term) -> Term {
        Term::Diamond(bx(a))
    }

    pub fn square(a: Term) -> Term {
        Term::Square(bx(a))
    }

    pub fn mu(name: &str, body: Term) -> Term {
        Term::Mu(Hint::new(name), bx(body))
    }

    pub fn nu(name: &str, body: Term) -> Term {
        Term::Nu(Hint::new(name), bx(body))
    }

    pub fn j(c: Term, d: Term, a: Term, b: Term, p: Term) -> Term {
        Term::J(Box::new([c, d, a, b, p]))
    }

    /// Visits every immediate child together with the binders it sits under.
    pub fn for_each_child<'a>(&'a self, mut f: impl FnMut(&'a Term, Scope)) {
        use Term::*;
        match self {
            Var(_) | Const(_) | Sort(_) | State | Event | Nat | FinTrace | InfTrace | Top | Bot
            | Triv | PropVar(_) => {}
            Pi(_, a, b) | Lam(_, a, b) | Forall(_, a, b) | Exists(_, a, b) => {
                f(a, HERE);
                f(b, UNDER_VAR);
            }
            Cofix(_, b) => f(b, UNDER_VAR),
            Mu(_, b) | Nu(_, b) => f(b, UNDER_PVAR),
            App(a, b)
            | ExtF(a, b)
            | ExtComp(a, b)
            | Restrict(a, b)
            | Absurd(a, b)
            | And(a, b)
            | Or(a, b)
            | Imp(a, b) => {
                f(a, HERE);
                f(b, HERE);
            }
            Step(a, b, c) | StepTrace(a, b, c) | Cons(a, b, c) | Id(a, b, c) => {
                f(a, HERE);
                f(b, HERE);
                f(c, HERE);
            }
            Nil(a)
            | Head(a)
            | Tail(a)
            | ExtId(a)
            | KF(a)
            | KInf(a)
            | Refl(a)
            | Diamond(a)
            | Square(a)
            | Fold(a)
            | Unfold(a)
            | NuIn(a)
            | NuOut(a)
            | Atom(_, a) => f(a, HERE),
            ExtSteps(base, suffix) => {
                f(base, HERE);
                for (e, s) in suffix {
                    f(e, HERE);
                    f(s, HERE);
                }
            }
            J(args) => args.iter().for_each(|a| f(a, HERE)),
        }
    }

    /// Rebuilds the node with every immediate child replaced by `f(child, scope)`.
    pub fn map_children(&self, mut f: impl FnMut(&Term, Scope) -> Term) -> Term {
        use Term::*;
        let mut g = |t: &Term, s: Scope| bx(f(t, s));
        match self {
            Var(_) | Const(_) | Sort(_) | State | Event | Nat | FinTrace | InfTrace | Top | Bot
            | Triv | PropVar(_) => self.clone(),
            Pi(h, a, b) => Pi(h.clone(), g(a, HERE), g(b, UNDER_VAR)),
            Lam(h, a, b) => Lam(h.clone(), g(a, HERE), g(b, UNDER_VAR)),
            Forall(h, a, b) => Forall(h.clone(), g(a, HERE), g(b, UNDER_VAR)),
            Exists(h, a, b) => Exists(h.clone(), g(a, HERE), g(b, UNDER_VAR)),
            Cofix(h, b) => Cofix(h.clone(), g(b, UNDER_VAR)),
            Mu(h, b) => Mu(h.clone(), g(b, UNDER_PVAR)),
            Nu(h, b) => Nu(h.clone(), g(b, UNDER_PVAR)),
            App(a, b) => App(g(a, HERE), g(b, HERE)),
            ExtF(a, b) => ExtF(g(a, HERE), g(b, HERE)),
            ExtComp(a, b) => ExtComp(g(a, HERE), g(b, HERE)),
            Restrict(a, b) => Restrict(g(a, HERE), g(b, HERE)),
            Absurd(a, b) => Absurd(g(a, HERE), g(b, HERE)),
            And(a, b) => And(g(a, HERE), g(b, HERE)),
            Or(a, b) => Or(g(a, HERE), g(b, HERE)),
            Imp(a, b) => Imp(g(a, HERE), g(b, HERE)),
            Step(a, b, c) => Step(g(a, HERE), g(b, HERE), g(c, HERE)),
            StepTrace(a, b, c) => StepTrace(g(a, HERE), g(b, HERE), g(c, HERE)),
            Cons(a, b, c) => Cons(g(a, HERE), g(b, HERE), g(c, HERE)),
            Id(a, b, c) => Id(g(a, HERE), g(b, HERE), g(c, HERE)),
            Nil(a) => Nil(g(a, HERE)),
            Head(a) => Head(g(a, HERE)),
            Tail(a) => Tail(g(a, HERE)),
            ExtId(a) => ExtId(g(a, HERE)),
            KF(a) => KF(g(a, HERE)),
            KInf(a) => KInf(g(a, HERE)),
            Refl(a) => Refl(g(a, HERE)),
            Diamond(a) => Diamond(g(a, HERE)),
            Square(a) => Square(g(a, HERE)),
            Fold(a) => Fold(g(a, HERE)),
            Unfold(a) => Unfold(g(a, HERE)),
            NuIn(a) => NuIn(g(a, HERE)),
            NuOut(a) => NuOut(g(a, HERE)),
            Atom(p, a) => Atom(p.clone(), g(a, HERE)),
            ExtSteps(base, suffix) => {
                let base = g(base, HERE);
                let suffix = suffix
                    .iter()
                    .map(|(e, s)| (*g(e, HERE), *g(s, HERE)))
                    .collect();
                ExtSteps(base, suffix)
            }
            J(args) => {
                let [c, d, a, b, p] = &**args;
                J(Box::new([
                    *g(c, HERE),
                    *g(d, HERE),
                    *g(a, HERE),
                    *g(b, HERE),
                    *g(p, HERE),
                ]))
            }
        }
    }

    /// Replaces every free `Var` (index at or above the current depth) by
    /// `on_var(depth, index)`; bound occurrences are left alone.
    pub fn map_free_vars(&self, on_var: &mut dyn FnMut(Scope, usize) -> Term) -> Term {
        fn go(t: &Term, at: Scope, on_var: &mut dyn FnMut(Scope, usize) -> Term) -> Term {
            match t {
                Term::Var(i) if *i >= at.vars => on_var(at, *i),
                Term::Var(_) => t.clone(),
                _ => t.map_children(|c, s| {
                    go(
                        c,
                        Scope {
                            vars: at.vars + s.vars,
                            pvars: at.pvars + s.pvars,
                        },
                        on_var,
                    )
                }),
            }
        }
        go(self, Scope::default(), on_var)
    }

    /// Same as [`Term::map_free_vars`] for predicate variables.
    pub fn map_free_pvars(&self, on_pvar: &mut dyn FnMut(Scope, usize) -> Term) -> Term {
        fn go(t: &Term, at: Scope, on_pvar: &mut dyn FnMut(Scope, usize) -> Term) -> Term {
            match t {
                Term::PropVar(i) if *i >= at.pvars => on_pvar(at, *i),
                Term::PropVar(_) => t.clone(),
                _ => t.map_children(|c, s| {
                    go(
                        c,
                        Scope {
                            vars: at.vars + s.vars,
                            pvars: at.pvars + s.pvars,
                        },
                        on_pvar,
                    )
                }),
            }
        }
        go(self, Scope::default(), on_pvar)
    }

    /// Adds `by` to every free ordinary variable.
    pub fn shift(&self, by: usize) -> Term {
        if by == 0 {
            return self.clone();
        }
        self.map_free_vars(&mut |_, i| Term::Var(i + by))
    }

    pub fn shift_pvars(&self, by: usize) -> Term {
        if by == 0 {
            return self.clone();
        }
        self.map_free_pvars(&mut |_, i| Term::PropVar(i + by))
    }

    /// Moves the term under `scope` fresh binders of each kind.
    fn lift(&self, scope: Scope) -> Term {
        self.shift(scope.vars).shift_pvars(scope.pvars)
    }

    /// `body[arg/0]`: instantiates the innermost ordinary binder.
    pub fn instantiate(&self, arg: &Term) -> Term {
        self.map_free_vars(&mut |at, i| {
            if i == at.vars {
                arg.lift(at)
            } else {
                Term::Var(i - 1)
            }
        })
    }

    /// `body[arg/X]` for the innermost predicate binder.
    pub fn instantiate_pvar(&self, arg: &Term) -> Term {
        self.map_free_pvars(&mut |at, i| {
            if i == at.pvars {
                arg.lift(at)
            } else {
                Term::PropVar(i - 1)
            }
        })
    }

    /// Lowers every free variable by one; `None` if `Var(0)` occurs free.
    pub fn unshift(&self) -> Option<Term> {
        if self.has_free_var(0) {
            return None;
        }
        Some(self.map_free_vars(&mut |_, i| Term::Var(i - 1)))
    }

    pub fn has_free_var(&self, index: usize) -> bool {
        free_var_indices(self).contains(&index)
    }

    pub fn has_free_pvar(&self, index: usize) -> bool {
        fn go(t: &Term, index: usize) -> bool {
            if let Term::PropVar(i) = t {
                return *i == index;
            }
            let mut found = false;
            t.for_each_child(|c, s| found = found || go(c, index + s.pvars));
            found
        }
        go(self, index)
    }

    /// Names of all `Const` nodes, in first-occurrence order without repeats.
    pub fn constants(&self) -> Vec<String> {
        fn go(t: &Term, out: &mut Vec<String>) {
            if let Term::Const(n) = t {
                if !out.contains(n) {
                    out.push(n.clone());
                }
            }
            t.for_each_child(|c, _| go(c, out));
        }
        let mut out = Vec::new();
        go(self, &mut out);
        out
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        let mut n = 1;
        self.for_each_child(|c, _| n += c.size());
        n
    }
}

/// α-equivalence. Binder hints are ignored, so this is structural equality.
pub fn alpha_eq(t: &Term, u: &Term) -> bool {
    t == u
}

/// The set of free de Bruijn indices, measured from outside the term.
pub fn free_var_indices(t: &Term) -> BTreeSet<usize> {
    fn go(t: &Term, depth: usize, out: &mut BTreeSet<usize>) {
        if let Term::Var(i) = t {
            if *i >= depth {
                out.insert(i - depth);
            }
            return;
        }
        t.for_each_child(|c, s| go(c, depth + s.vars, out));
    }
    let mut out = BTreeSet::new();
    go(t, 0, &mut out);
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SubstError {
    #[error("malformed term: variable index {index} is outside a substitution of length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("cannot compose: first substitution has source length {source_len}, second has {target_len} entries")]
    LengthMismatch {
        source_len: usize,
        target_len: usize,
    },
}

/// An ordered typing context; the last entry is `Var(0)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Context {
    entries: Vec<(String, Term)>,
}

impl Context {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries(entries: Vec<(String, Term)>) -> Self {
        Context { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(String, Term)] {
        &self.entries
    }

    pub fn push(&mut self, name: impl Into<String>, ty: Term) {
        self.entries.push((name.into(), ty));
    }

    pub fn pop(&mut self) -> Option<(String, Term)> {
        self.entries.pop()
    }

    pub fn extended(&self, name: impl Into<String>, ty: Term) -> Context {
        let mut c = self.clone();
        c.push(name, ty);
        c
    }

    /// The type of `Var(index)`, weakened to the full context.
    pub fn lookup(&self, index: usize) -> Option<Term> {
        let n = self.entries.len();
        if index >= n {
            return None;
        }
        Some(self.entries[n - 1 - index].1.shift(index + 1))
    }

    pub fn name_of(&self, index: usize) -> Option<&str> {
        let n = self.entries.len();
        (index < n).then(|| self.entries[n - 1 - index].0.as_str())
    }
}

/// A simultaneous substitution `Δ ⊢ σ : Γ`.
///
/// `terms[j]` is the term (over `Δ`, of length `source_len`) assigned to the
/// `j`-th entry of `Γ`, counting from the front.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Substitution {
    pub terms: Vec<Term>,
    pub source_len: usize,
}

impl Substitution {
    pub fn new(terms: Vec<Term>, source_len: usize) -> Self {
        Substitution { terms, source_len }
    }

    pub fn identity(len: usize) -> Self {
        Substitution {
            terms: (0..len).map(|j| Term::Var(len - 1 - j)).collect(),
            source_len: len,
        }
    }

    pub fn target_len(&self) -> usize {
        self.terms.len()
    }
}

/// Applies `sigma` to every free variable of `t`.
pub fn subst_apply(t: &Term, sigma: &Substitution) -> Result<Term, SubstError> {
    let n = sigma.terms.len();
    let mut err = None;
    let out = t.map_free_vars(&mut |at, i| {
        let k = i - at.vars;
        if k >= n {
            err.get_or_insert(SubstError::IndexOutOfRange { index: k, len: n });
            return Term::Var(i);
        }
        sigma.terms[n - 1 - k].lift(at)
    });
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// `compose(σ, δ)` applies `σ` first and then `δ`.
pub fn subst_compose(
    sigma: &Substitution,
    delta: &Substitution,
) -> Result<Substitution, SubstError> {
    if sigma.source_len != delta.target_len() {
        return Err(SubstError::LengthMismatch {
            source_len: sigma.source_len,
            target_len: delta.target_len(),
        });
    }
    let terms = sigma
        .terms
        .iter()
        .map(|t| subst_apply(t, delta))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Substitution {
        terms,
        source_len: delta.source_len,
    })
}
