//! Goal-directed exhaustive search for small closed proofs.
//!
//! Covers the same grammar as [`super::enumerate`], split by what a term
//! infers: formulas (a sort), families (a product ending in a sort) and
//! elements (anything else). Eliminations take their principal argument
//! from the smaller inferable pools and every other argument from `check`,
//! which builds introduction forms only against the goal at hand.
//!
//! Among the proofs of one proposition in one context only the first at
//! the smallest size is kept. No type mentions a proof (a product over a
//! proposition always lands in `Prop`), so swapping one proof for another
//! of the same proposition changes no other judgment.

use std::collections::{HashMap, HashSet};
use std::rc::Rc;

use nmdekl::normalize::normalize;
use nmdekl::syntax::{Context, Hint, Sort, Term};
use nmdekl::typeck::{unroll, Checker};

#[derive(Clone)]
pub struct Cx {
    pub types: Vec<Term>,
    pub pv: usize,
    key: String,
    ctx: Context,
}

impl Cx {
    pub fn closed() -> Self {
        Cx {
            types: Vec::new(),
            pv: 0,
            key: String::new(),
            ctx: Context::new(),
        }
    }

    fn with_var(&self, a: &Term) -> Cx {
        let mut types = self.types.clone();
        types.push(a.clone());
        Cx {
            types,
            pv: self.pv,
            key: format!("{}|{a:?}", self.key),
            ctx: self.ctx.extended("x", a.clone()),
        }
    }

    fn with_pvar(&self) -> Cx {
        Cx {
            pv: self.pv + 1,
            key: format!("{}|X", self.key),
            ..self.clone()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Form(Sort),
    Fam,
    Elem { proof: bool },
}

/// An inferable term with its normalised type and that type's key.
#[derive(Clone, Debug)]
pub struct Typed {
    pub term: Term,
    pub ty: Term,
    pub key: String,
    pub kind: Kind,
}

type Memo<T> = HashMap<(String, usize), Rc<Vec<T>>>;

/// Canonical representative for the checker's conversion on normal
/// forms: η-reduced, `->` and `forall` read as Π, λ-domains erased.
pub fn canon(t: &Term) -> Term {
    use Term::*;
    let h = || Hint::new("x");
    let bx = Box::new;
    match t {
        Lam(_, _, body) => {
            let c = canon(body);
            if let App(f, a) = &c {
                if **a == Var(0) && !f.has_free_var(0) {
                    return f.unshift().expect("no free #0");
                }
            }
            Lam(h(), bx(Triv), bx(c))
        }
        Imp(a, b) => Pi(h(), bx(canon(a)), bx(canon(b).shift(1))),
        Pi(_, a, b) | Forall(_, a, b) => Pi(h(), bx(canon(a)), bx(canon(b))),
        Exists(_, a, b) => Exists(h(), bx(canon(a)), bx(canon(b))),
        Mu(_, b) => Mu(Hint::new("X"), bx(canon(b))),
        Nu(_, b) => Nu(Hint::new("X"), bx(canon(b))),
        Cofix(_, b) => Cofix(h(), bx(canon(b))),
        _ => t.map_children(|c, _| canon(c)),
    }
}

pub fn key_of(nf: &Term) -> String {
    format!("{:?}", canon(nf))
}

fn pi_parts(nf: &Term) -> Option<(Term, Term)> {
    match nf {
        Term::Pi(_, a, b) | Term::Forall(_, a, b) => Some(((**a).clone(), (**b).clone())),
        Term::Imp(a, b) => Some(((**a).clone(), b.shift(1))),
        _ => None,
    }
}

fn ends_in_sort(nf: &Term) -> bool {
    match nf {
        Term::Sort(_) => true,
        Term::Pi(_, _, b) | Term::Forall(_, _, b) | Term::Imp(_, b) => ends_in_sort(b),
        _ => false,
    }
}

fn b(t: &Term) -> Box<Term> {
    Box::new(t.clone())
}

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

#[derive(Default)]
struct MinProof {
    searched: usize,
    found: Option<(usize, Term)>,
}

pub struct Search {
    pub checker: Checker,
    fuel: usize,
    forms: Memo<(Term, Sort, String)>,
    fams: Memo<Typed>,
    lams: Memo<Typed>,
    rest: Memo<Typed>,
    refls: Memo<Typed>,
    type_apps: Memo<Typed>,
    js: Memo<Typed>,
    checks: HashMap<(String, usize, String), Rc<Vec<Term>>>,
    proofs: HashMap<(String, String), MinProof>,
    /// Proposition keys already proved, per context and pool.
    seen: HashMap<(String, &'static str), HashSet<String>>,
    /// Terms built and typed.
    pub candidates: usize,
}

impl Search {
    pub fn new(fuel: usize) -> Self {
        Search {
            checker: Checker::new(fuel),
            fuel,
            forms: HashMap::new(),
            fams: HashMap::new(),
            lams: HashMap::new(),
            rest: HashMap::new(),
            refls: HashMap::new(),
            type_apps: HashMap::new(),
            js: HashMap::new(),
            checks: HashMap::new(),
            proofs: HashMap::new(),
            seen: HashMap::new(),
            candidates: 0,
        }
    }

    fn nf(&self, t: &Term) -> Term {
        normalize(t, self.fuel).term().clone()
    }

    fn is_prop(&self, cx: &Cx, ty: &Term) -> bool {
        matches!(
            self.checker
                .infer_open(&cx.ctx, cx.pv, ty)
                .map(|s| self.nf(&s)),
            Ok(Term::Sort(Sort::Prop))
        )
    }

    /// Types `t`, whose type `ty` is already known to be correct.
    fn typed(&mut self, cx: &Cx, t: Term, ty: &Term) -> Typed {
        self.candidates += 1;
        let nf = self.nf(ty);
        let kind = match &nf {
            Term::Sort(s) => Kind::Form(*s),
            _ if ends_in_sort(&nf) => Kind::Fam,
            _ => Kind::Elem {
                proof: self.is_prop(cx, &nf),
            },
        };
        Typed {
            key: key_of(&nf),
            term: t,
            ty: nf,
            kind,
        }
    }

    fn infer(&mut self, cx: &Cx, t: Term) -> Option<Typed> {
        self.candidates += 1;
        let ty = self.checker.infer_open(&cx.ctx, cx.pv, &t).ok()?;
        self.candidates -= 1;
        Some(self.typed(cx, t, &ty))
    }

    fn checks_against(&self, cx: &Cx, t: &Term, goal: &Term) -> bool {
        self.checker.check_open(&cx.ctx, cx.pv, t, goal).is_ok()
    }

    /// Formulas of size `n` with their sort and normal-form key.
    pub fn forms(&mut self, cx: &Cx, n: usize) -> Rc<Vec<(Term, Sort, String)>> {
        let mk = (cx.key.clone(), n);
        if let Some(p) = self.forms.get(&mk) {
            return p.clone();
        }
        let mut out = Vec::new();
        let mut push = |s: &mut Self, t: Term| {
            if let Some(ty) = s.infer(cx, t) {
                if let Kind::Form(sort) = ty.kind {
                    let k = key_of(&s.nf(&ty.term));
                    out.push((ty.term, sort, k));
                }
            }
        };
        if n == 1 {
            for t in [
                Term::Sort(Sort::Uc(0)),
                Term::Sort(Sort::Prop),
                Term::Top,
                Term::Bot,
            ] {
                push(self, t);
            }
            for i in 0..cx.types.len() {
                push(self, Term::Var(i));
            }
            for i in 0..cx.pv {
                push(self, Term::PropVar(i));
            }
        } else {
            let inner = cx.with_pvar();
            for body in self.forms(&inner, n - 1).iter() {
                push(self, Term::Mu(Hint::new("X"), b(&body.0)));
                push(self, Term::Nu(Hint::new("X"), b(&body.0)));
            }
            for k in 1..n - 1 {
                for a in self.forms(cx, k).iter() {
                    for c in self.forms(cx, n - 1 - k).iter() {
                        push(self, Term::Imp(b(&a.0), b(&c.0)));
                    }
                    let under = cx.with_var(&a.0);
                    for c in self.forms(&under, n - 1 - k).iter() {
                        push(self, Term::Pi(Hint::new("x"), b(&a.0), b(&c.0)));
                        push(self, Term::Forall(Hint::new("x"), b(&a.0), b(&c.0)));
                    }
                }
            }
            for sizes in compositions(n - 1, 3) {
                for a in self.forms(cx, sizes[0]).iter() {
                    let at = self.nf(&a.0);
                    for x in self.check(cx, &at, sizes[1]).iter() {
                        for y in self.check(cx, &at, sizes[2]).iter() {
                            push(self, Term::Id(b(&a.0), b(x), b(y)));
                        }
                    }
                }
            }
            for t in self.type_apps(cx, n).iter() {
                if let Kind::Form(sort) = t.kind {
                    let k = key_of(&self.nf(&t.term));
                    out.push((t.term.clone(), sort, k));
                }
            }
        }
        let rc = Rc::new(out);
        self.forms.insert(mk, rc.clone());
        rc
    }

    /// Families of size `n`: λ-abstractions over formulas or families,
    /// partial applications, and variables of such types.
    pub fn fams(&mut self, cx: &Cx, n: usize) -> Rc<Vec<Typed>> {
        let mk = (cx.key.clone(), n);
        if let Some(p) = self.fams.get(&mk) {
            return p.clone();
        }
        let mut out = Vec::new();
        if n == 1 {
            for i in 0..cx.types.len() {
                out.extend(self.infer(cx, Term::Var(i)).filter(|t| t.kind == Kind::Fam));
            }
        } else {
            for k in 1..n - 1 {
                for a in self.forms(cx, k).iter() {
                    let under = cx.with_var(&a.0);
                    let bodies: Vec<Term> = self
                        .forms(&under, n - 1 - k)
                        .iter()
                        .map(|f| f.0.clone())
                        .chain(self.fams(&under, n - 1 - k).iter().map(|f| f.term.clone()))
                        .collect();
                    for body in bodies {
                        let lam = Term::Lam(Hint::new("x"), b(&a.0), Box::new(body));
                        out.extend(self.infer(cx, lam).filter(|t| t.kind == Kind::Fam));
                    }
                }
            }
            out.extend(
                self.type_apps(cx, n)
                    .iter()
                    .filter(|t| t.kind == Kind::Fam)
                    .cloned(),
            );
        }
        let rc = Rc::new(out);
        self.fams.insert(mk, rc.clone());
        rc
    }

    /// Applications and `J` terms of size `n` that infer a formula or a
    /// family.
    fn type_apps(&mut self, cx: &Cx, n: usize) -> Rc<Vec<Typed>> {
        let mk = (cx.key.clone(), n);
        if let Some(p) = self.type_apps.get(&mk) {
            return p.clone();
        }
        let mut out = Vec::new();
        for k in 1..n.saturating_sub(1) {
            let mut heads: Vec<Typed> = self.fams(cx, k).to_vec();
            for pool in [self.lams(cx, k), self.rest(cx, k)] {
                heads.extend(
                    pool.iter()
                        .filter(|t| t.kind == Kind::Elem { proof: false })
                        .cloned(),
                );
            }
            out.extend(
                self.apps_with(cx, &heads, n - 1 - k)
                    .into_iter()
                    .filter(|t| !matches!(t.kind, Kind::Elem { .. })),
            );
        }
        out.extend(
            self.js(cx, n)
                .iter()
                .filter(|t| !matches!(t.kind, Kind::Elem { .. }))
                .cloned(),
        );
        let rc = Rc::new(out);
        self.type_apps.insert(mk, rc.clone());
        rc
    }

    fn apps_with(&mut self, cx: &Cx, heads: &[Typed], arg_size: usize) -> Vec<Typed> {
        let mut out = Vec::new();
        for f in heads {
            let Some((dom, cod)) = pi_parts(&f.ty) else {
                continue;
            };
            for a in self.check(cx, &dom, arg_size).iter() {
                let t = Term::App(b(&f.term), b(a));
                out.push(self.typed(cx, t, &cod.instantiate(a)));
            }
        }
        out
    }

    /// Keeps `t` unless it proves something this pool already proves.
    fn fresh(&mut self, cx: &Cx, pool: &'static str, t: &Typed) -> bool {
        if t.kind != (Kind::Elem { proof: true }) {
            return true;
        }
        self.seen
            .entry((cx.key.clone(), pool))
            .or_default()
            .insert(t.key.clone())
    }

    /// Inferable λ-abstractions of size `n` whose body is an element.
    pub fn lams(&mut self, cx: &Cx, n: usize) -> Rc<Vec<Typed>> {
        let mk = (cx.key.clone(), n);
        if let Some(p) = self.lams.get(&mk) {
            return p.clone();
        }
        for m in 1..n {
            self.lams(cx, m);
        }
        let mut out = Vec::new();
        for k in 1..n.saturating_sub(1) {
            for a in self.forms(cx, k).iter() {
                let under = cx.with_var(&a.0);
                for body in self.elems(&under, n - 1 - k) {
                    let pi = Term::Pi(Hint::new("x"), b(&a.0), b(&body.ty));
                    if self.checker.infer_open(&cx.ctx, cx.pv, &pi).is_err() {
                        continue;
                    }
                    let t = self.typed(
                        cx,
                        Term::Lam(Hint::new("x"), b(&a.0), Box::new(body.term)),
                        &pi,
                    );
                    if self.fresh(cx, "lam", &t) {
                        out.push(t);
                    }
                }
            }
        }
        let rc = Rc::new(out);
        self.lams.insert(mk, rc.clone());
        rc
    }

    /// `refl(a)` for every inferable `a` of size `n - 1`.
    pub fn refls(&mut self, cx: &Cx, n: usize) -> Rc<Vec<Typed>> {
        let mk = (cx.key.clone(), n);
        if let Some(p) = self.refls.get(&mk) {
            return p.clone();
        }
        let mut out = Vec::new();
        if n > 1 {
            let mut args: Vec<(Term, Term)> = self
                .forms(cx, n - 1)
                .iter()
                .map(|f| (f.0.clone(), Term::Sort(f.1)))
                .collect();
            args.extend(
                self.fams(cx, n - 1)
                    .iter()
                    .map(|t| (t.term.clone(), t.ty.clone())),
            );
            args.extend(self.elems(cx, n - 1).into_iter().map(|t| (t.term, t.ty)));
            for (a, at) in args {
                let ty = Term::Id(Box::new(at), b(&a), b(&a));
                out.push(self.typed(cx, Term::Refl(Box::new(a)), &ty));
            }
        }
        let rc = Rc::new(out);
        self.refls.insert(mk, rc.clone());
        rc
    }

    /// Variables, `triv`, and eliminations of size `n` that infer an element.
    pub fn rest(&mut self, cx: &Cx, n: usize) -> Rc<Vec<Typed>> {
        let mk = (cx.key.clone(), n);
        if let Some(p) = self.rest.get(&mk) {
            return p.clone();
        }
        for m in 1..n {
            self.rest(cx, m);
        }
        let mut found: Vec<Typed> = Vec::new();
        if n == 1 {
            for t in (0..cx.types.len()).map(Term::Var).chain([Term::Triv]) {
                found.extend(
                    self.infer(cx, t)
                        .filter(|t| matches!(t.kind, Kind::Elem { .. })),
                );
            }
        } else {
            for k in 1..n - 1 {
                let mut heads: Vec<Typed> = self.lams(cx, k).to_vec();
                heads.extend(self.rest(cx, k).iter().cloned());
                found.extend(
                    self.apps_with(cx, &heads, n - 1 - k)
                        .into_iter()
                        .filter(|t| matches!(t.kind, Kind::Elem { .. })),
                );
                let bot = key_of(&Term::Bot);
                let proofs: Vec<Term> = self
                    .rest(cx, k)
                    .iter()
                    .filter(|t| t.key == bot)
                    .map(|t| t.term.clone())
                    .collect();
                for p in proofs {
                    for a in self
                        .forms(cx, n - 1 - k)
                        .iter()
                        .filter(|f| f.1 == Sort::Prop)
                    {
                        found.push(self.typed(cx, Term::Absurd(b(&p), b(&a.0)), &a.0));
                    }
                }
            }
            for w in self.rest(cx, n - 1).iter() {
                match &w.ty {
                    Term::Mu(..) => {
                        found.push(self.typed(cx, Term::Unfold(b(&w.term)), &unroll(&w.ty)))
                    }
                    Term::Nu(..) => {
                        found.push(self.typed(cx, Term::NuOut(b(&w.term)), &unroll(&w.ty)))
                    }
                    _ => {}
                }
            }
            found.extend(
                self.js(cx, n)
                    .iter()
                    .filter(|t| matches!(t.kind, Kind::Elem { .. }))
                    .cloned(),
            );
        }
        let out: Vec<Typed> = found
            .into_iter()
            .filter(|t| self.fresh(cx, "rest", t))
            .collect();
        let rc = Rc::new(out);
        self.rest.insert(mk, rc.clone());
        rc
    }

    fn elems(&mut self, cx: &Cx, n: usize) -> Vec<Typed> {
        let mut v = self.lams(cx, n).to_vec();
        v.extend(self.rest(cx, n).iter().cloned());
        v.extend(self.refls(cx, n).iter().cloned());
        v
    }

    /// `J(C, d, x, y, p)` of size `n`, driven by the identity proof `p`.
    fn js(&mut self, cx: &Cx, n: usize) -> Rc<Vec<Typed>> {
        let mk = (cx.key.clone(), n);
        if let Some(p) = self.js.get(&mk) {
            return p.clone();
        }
        self.js.insert(mk.clone(), Rc::new(Vec::new()));
        let mut out = Vec::new();
        for s in compositions(n.saturating_sub(1), 5) {
            let (kc, kd, kx, ky, kp) = (s[0], s[1], s[2], s[3], s[4]);
            let mut ps: Vec<Typed> = self.refls(cx, kp).to_vec();
            ps.extend(self.rest(cx, kp).iter().cloned());
            for p in ps {
                let Term::Id(at, px, py) = &p.ty else {
                    continue;
                };
                let xs: Vec<Term> = self
                    .check(cx, at, kx)
                    .iter()
                    .filter(|x| key_of(&self.nf(x)) == key_of(px))
                    .cloned()
                    .collect();
                let ys: Vec<Term> = self
                    .check(cx, at, ky)
                    .iter()
                    .filter(|y| key_of(&self.nf(y)) == key_of(py))
                    .cloned()
                    .collect();
                if xs.is_empty() || ys.is_empty() {
                    continue;
                }
                for c in self.fams(cx, kc).iter() {
                    let z = Term::Var(0);
                    let dt = Term::Pi(
                        Hint::new("z"),
                        at.clone(),
                        b(&Term::apps(
                            c.term.shift(1),
                            [z.clone(), z.clone(), Term::Refl(b(&z))],
                        )),
                    );
                    let dt = self.nf(&dt);
                    for d in self.check(cx, &dt, kd).iter() {
                        for x in &xs {
                            for y in &ys {
                                let t = Term::J(Box::new([
                                    c.term.clone(),
                                    d.clone(),
                                    x.clone(),
                                    y.clone(),
                                    p.term.clone(),
                                ]));
                                out.extend(self.infer(cx, t));
                            }
                        }
                    }
                }
            }
        }
        let rc = Rc::new(out);
        self.js.insert(mk, rc.clone());
        rc
    }

    /// Terms of size `n` that check against `goal`, a normal form. For a
    /// proposition that is its smallest proof, if it has size `n`.
    pub fn check(&mut self, cx: &Cx, goal: &Term, n: usize) -> Rc<Vec<Term>> {
        let gk = key_of(goal);
        let mk = (cx.key.clone(), n, gk.clone());
        if let Some(p) = self.checks.get(&mk) {
            return p.clone();
        }
        let out: Vec<Term> = if let Term::Sort(s) = goal {
            self.forms(cx, n)
                .iter()
                .filter(|f| f.1 == *s)
                .map(|f| f.0.clone())
                .collect()
        } else if self.is_prop(cx, goal) {
            self.proof_of_size(cx, goal, n).into_iter().collect()
        } else {
            let mut seen = HashSet::new();
            let mut out = Vec::new();
            let mut pools = vec![self.rest(cx, n)];
            if let Some((dom, cod)) = pi_parts(goal) {
                pools.push(self.lams(cx, n));
                if ends_in_sort(goal) {
                    pools.push(self.fams(cx, n));
                }
                for k in 1..n.saturating_sub(1) {
                    let dk = key_of(&dom);
                    for a in self.forms(cx, k).iter().filter(|a| a.2 == dk) {
                        let under = cx.with_var(&a.0);
                        for body in self.check(&under, &cod, n - 1 - k).iter() {
                            let t = Term::Lam(Hint::new("x"), b(&a.0), b(body));
                            if self.checks_against(cx, &t, goal) && seen.insert(format!("{t:?}")) {
                                out.push(t);
                            }
                        }
                    }
                }
            }
            if let Term::Id(at, ..) = goal {
                pools.push(self.refls(cx, n));
                if n > 1 {
                    for a in self.check(cx, at, n - 1).iter() {
                        let t = Term::Refl(b(a));
                        if self.checks_against(cx, &t, goal) && seen.insert(format!("{t:?}")) {
                            out.push(t);
                        }
                    }
                }
            }
            if matches!(goal, Term::Mu(..) | Term::Nu(..)) && n > 1 {
                let un = self.nf(&unroll(goal));
                for w in self.check(cx, &un, n - 1).iter() {
                    let t = if matches!(goal, Term::Mu(..)) {
                        Term::Fold(b(w))
                    } else {
                        Term::NuIn(b(w))
                    };
                    if seen.insert(format!("{t:?}")) {
                        out.push(t);
                    }
                }
            }
            for pool in pools {
                for t in pool.iter().filter(|t| t.key == gk) {
                    if seen.insert(format!("{:?}", t.term)) {
                        out.push(t.term.clone());
                    }
                }
            }
            out
        };
        let rc = Rc::new(out);
        self.checks.insert(mk, rc.clone());
        rc
    }

    pub fn proof_of_size(&mut self, cx: &Cx, goal: &Term, n: usize) -> Option<Term> {
        self.min_proof(cx, goal, n)
            .filter(|(s, _)| *s == n)
            .map(|(_, t)| t)
    }

    /// The smallest proof of `goal` of size at most `upto`.
    pub fn min_proof(&mut self, cx: &Cx, goal: &Term, upto: usize) -> Option<(usize, Term)> {
        let mk = (cx.key.clone(), key_of(goal));
        loop {
            let entry = self.proofs.entry(mk.clone()).or_default();
            if let Some((s, t)) = &entry.found {
                return (*s <= upto).then(|| (*s, t.clone()));
            }
            if entry.searched >= upto {
                return None;
            }
            let m = entry.searched + 1;
            let found = self.proof_at(cx, goal, &mk.1, m);
            let entry = self.proofs.get_mut(&mk).expect("entry");
            entry.searched = m;
            entry.found = found.map(|t| (m, t));
        }
    }

    fn proof_at(&mut self, cx: &Cx, goal: &Term, gk: &str, m: usize) -> Option<Term> {
        let mut pools = vec![self.rest(cx, m)];
        if let Some((dom, cod)) = pi_parts(goal) {
            pools.push(self.lams(cx, m));
            for k in 1..m.saturating_sub(1) {
                let dk = key_of(&dom);
                let doms: Vec<Term> = self
                    .forms(cx, k)
                    .iter()
                    .filter(|a| a.2 == dk)
                    .map(|a| a.0.clone())
                    .collect();
                for a in doms {
                    let under = cx.with_var(&a);
                    if let Some(body) = self.proof_of_size(&under, &cod, m - 1 - k) {
                        let t = Term::Lam(Hint::new("x"), Box::new(a), Box::new(body));
                        if self.checks_against(cx, &t, goal) {
                            return Some(t);
                        }
                    }
                }
            }
        }
        for pool in pools {
            if let Some(t) = pool.iter().find(|t| t.key == gk) {
                return Some(t.term.clone());
            }
        }
        if matches!(goal, Term::Mu(..) | Term::Nu(..)) && m > 1 {
            let un = self.nf(&unroll(goal));
            if let Some(w) = self.proof_of_size(cx, &un, m - 1) {
                return Some(if matches!(goal, Term::Mu(..)) {
                    Term::Fold(Box::new(w))
                } else {
                    Term::NuIn(Box::new(w))
                });
            }
        }
        None
    }
}
