//! Evaluation of the finite fragment into Set.
//!
//! Propositions denote the set of states at which they hold, so the modal
//! operators and fixpoints reuse the mu-kernel engine; truth is membership
//! of the instance's current state. Proofs are irrelevant: every value
//! inhabits a true proposition.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::category::extend_node;
use super::instance::SetModelInstance;
use super::ModelError;
use crate::mu::kripke::{gfp, lfp};
use crate::mu::{FixpointStats, KripkeStructure, MuError, StateSet};
use crate::normalize::{is_prop_type, Env, DEFAULT_FUEL};
use crate::parser::{Declaration, Theory};
use crate::syntax::{Context, Sort, Term};

/// Function tables are built only over domains up to this size.
pub const MAX_TABLE_DOMAIN: usize = 16;
/// Bound on the number of tables enumerated for a Π domain.
pub const MAX_TABLES: usize = 4096;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Value {
    /// An element of a carrier, the states, the events or a fibre.
    Elem(String),
    /// A finite trace, named by its trace node.
    Trace(String),
    /// The extension witness from a trace node to one extending it.
    Ext(String, String),
    Refl(Box<Value>),
    /// The inhabitant of a true proposition or of a declared step.
    Proof,
    /// A function table in domain order.
    Fun(Vec<(Value, Value)>),
    /// A proposition, as the set of states where it holds.
    Prop(StateSet),
    Type(SemType),
    Universe(Sort),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SemType {
    Finite { name: String, elems: Vec<Value> },
    Pi { dom: Box<Value>, cod: Cod },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Cod {
    Const(Box<Value>),
    Closure {
        frame: Frame,
        name: String,
        dom: Term,
        body: Term,
    },
}

/// Values, types and fixpoint sets for the variables in scope.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Frame {
    vals: Vec<Value>,
    tys: Context,
    props: Vec<StateSet>,
}

impl Frame {
    /// A frame binding only predicate variables; the last set is `PropVar(0)`.
    pub fn with_props(props: Vec<StateSet>) -> Frame {
        Frame {
            props,
            ..Frame::default()
        }
    }

    fn push(&mut self, name: &str, ty: &Term, v: Value) {
        self.vals.push(v);
        self.tys.push(name, ty.clone());
    }

    fn pop(&mut self) {
        self.vals.pop();
        self.tys.pop();
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Elem(s) | Value::Trace(s) => write!(f, "{s}"),
            Value::Ext(a, b) => write!(f, "{a}<={b}"),
            Value::Refl(v) => write!(f, "refl {v}"),
            Value::Proof => write!(f, "*"),
            Value::Fun(t) => {
                write!(f, "{{")?;
                for (i, (a, b)) in t.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a} => {b}")?;
                }
                write!(f, "}}")
            }
            Value::Prop(s) => write!(f, "prop{s:?}"),
            Value::Type(SemType::Finite { name, elems }) => write!(f, "{name}[{}]", elems.len()),
            Value::Type(SemType::Pi { .. }) => write!(f, "<pi type>"),
            Value::Universe(s) => write!(f, "{s:?}"),
        }
    }
}

fn fragment(what: impl Into<String>) -> ModelError {
    ModelError::Fragment(what.into())
}

fn finite(name: &str, elems: Vec<Value>) -> Value {
    Value::Type(SemType::Finite {
        name: name.to_string(),
        elems,
    })
}

pub struct Evaluator<'a> {
    pub inst: &'a SetModelInstance,
    pub env: &'a Env,
    kripke: KripkeStructure,
    succ: Vec<StateSet>,
    current: usize,
    cache: BTreeMap<String, Value>,
    active: BTreeSet<String>,
    pub stats: FixpointStats,
}

impl<'a> Evaluator<'a> {
    pub fn new(inst: &'a SetModelInstance, env: &'a Env) -> Self {
        let kripke = inst.skeleton.kripke();
        let succ = kripke.successors();
        let current = kripke
            .index_of(&inst.current_state)
            .expect("validated instance");
        Evaluator {
            inst,
            env,
            kripke,
            succ,
            current,
            cache: BTreeMap::new(),
            active: BTreeSet::new(),
            stats: FixpointStats::default(),
        }
    }

    pub fn holds(&self, v: &Value) -> Option<bool> {
        match v {
            Value::Prop(s) => Some(s.contains(&self.current)),
            _ => None,
        }
    }

    pub fn eval_closed(&mut self, t: &Term) -> Result<Value, ModelError> {
        self.eval(&mut Frame::default(), t)
    }

    pub fn eval(&mut self, fr: &mut Frame, t: &Term) -> Result<Value, ModelError> {
        use Term::*;
        Ok(match t {
            Var(i) => fr
                .vals
                .len()
                .checked_sub(i + 1)
                .map(|k| fr.vals[k].clone())
                .ok_or_else(|| fragment(format!("free variable #{i}")))?,
            PropVar(i) => fr
                .props
                .len()
                .checked_sub(i + 1)
                .map(|k| Value::Prop(fr.props[k].clone()))
                .ok_or_else(|| fragment(format!("free fixpoint variable #{i}")))?,
            Const(c) => self.constant(c)?,
            Sort(s) => Value::Universe(*s),
            Pi(h, a, b) | Forall(h, a, b) => {
                let dom = self.eval(fr, a)?;
                let inner = fr.tys.extended(h.as_str(), (**a).clone());
                let prop = matches!(t, Forall(..)) || self.prop_type(&inner, b)?;
                if prop {
                    let mut out = self.kripke.all();
                    for x in self.elements(&dom)? {
                        fr.push(h.as_str(), a, x);
                        let v = self.eval(fr, b);
                        fr.pop();
                        out = &out & &self.expect_prop(v?)?;
                    }
                    Value::Prop(out)
                } else {
                    Value::Type(SemType::Pi {
                        dom: Box::new(dom),
                        cod: Cod::Closure {
                            frame: fr.clone(),
                            name: h.as_str().to_string(),
                            dom: (**a).clone(),
                            body: (**b).clone(),
                        },
                    })
                }
            }
            Imp(a, b) => {
                let dom = self.eval(fr, a)?;
                let cod = self.eval(fr, b)?;
                match (&dom, &cod) {
                    (Value::Prop(x), Value::Prop(y)) => Value::Prop(
                        self.kripke
                            .all()
                            .difference(x)
                            .copied()
                            .collect::<StateSet>()
                            .union(y)
                            .copied()
                            .collect(),
                    ),
                    (_, Value::Prop(y)) => {
                        if self.elements(&dom)?.is_empty() {
                            Value::Prop(self.kripke.all())
                        } else {
                            Value::Prop(y.clone())
                        }
                    }
                    _ => Value::Type(SemType::Pi {
                        dom: Box::new(dom),
                        cod: Cod::Const(Box::new(cod)),
                    }),
                }
            }
            Exists(h, a, b) => {
                let dom = self.eval(fr, a)?;
                let mut out = StateSet::new();
                for x in self.elements(&dom)? {
                    fr.push(h.as_str(), a, x);
                    let v = self.eval(fr, b);
                    fr.pop();
                    out = &out | &self.expect_prop(v?)?;
                }
                Value::Prop(out)
            }
            Lam(h, a, body) => {
                let dom = self.eval(fr, a)?;
                let xs = self.elements(&dom)?;
                if xs.len() > MAX_TABLE_DOMAIN {
                    return Err(fragment(format!(
                        "function table over {} elements",
                        xs.len()
                    )));
                }
                let mut table = Vec::with_capacity(xs.len());
                for x in xs {
                    fr.push(h.as_str(), a, x.clone());
                    let v = self.eval(fr, body);
                    fr.pop();
                    table.push((x, v?));
                }
                Value::Fun(table)
            }
            App(f, x) => {
                let fv = self.eval(fr, f)?;
                let xv = self.eval(fr, x)?;
                self.apply(&fv, &xv)?
            }
            State => finite(
                "State",
                self.inst
                    .skeleton
                    .states
                    .iter()
                    .map(|s| Value::Elem(s.clone()))
                    .collect(),
            ),
            Event => finite(
                "Event",
                self.inst
                    .skeleton
                    .events()
                    .into_iter()
                    .map(Value::Elem)
                    .collect(),
            ),
            Nat => match self.inst.carriers.get("Nat") {
                Some(c) => finite("Nat", c.iter().map(|x| Value::Elem(x.clone())).collect()),
                None => return Err(fragment("Nat without a declared finite carrier")),
            },
            FinTrace => finite(
                "FinTrace",
                self.inst
                    .category
                    .objects
                    .iter()
                    .map(|o| Value::Trace(o.clone()))
                    .collect(),
            ),
            Step(s, e, s2) => {
                let (s, e, s2) = (self.elem(fr, s)?, self.elem(fr, e)?, self.elem(fr, s2)?);
                let inhabited = self.inst.skeleton.has_step(&s, &e, &s2);
                finite(
                    "Step",
                    if inhabited {
                        vec![Value::Proof]
                    } else {
                        vec![]
                    },
                )
            }
            Nil(s) => {
                let s = self.elem(fr, s)?;
                self.node(s)?
            }
            StepTrace(tr, e, s) => {
                let tr = self.trace(fr, tr)?;
                let (e, s) = (self.elem(fr, e)?, self.elem(fr, s)?);
                self.node(extend_node(&tr, &e, &s))?
            }
            ExtSteps(tr, suffix) => {
                let mut node = self.trace(fr, tr)?;
                let base = node.clone();
                for (e, s) in suffix {
                    let (e, s) = (self.elem(fr, e)?, self.elem(fr, s)?);
                    node = extend_node(&node, &e, &s);
                }
                self.node(node.clone())?;
                Value::Ext(base, node)
            }
            ExtF(a, b) => {
                let (a, b) = (self.trace(fr, a)?, self.trace(fr, b)?);
                let ok = self.inst.category.path_between(&a, &b).is_some();
                finite("Ext_f", if ok { vec![Value::Ext(a, b)] } else { vec![] })
            }
            ExtId(tr) => {
                let tr = self.trace(fr, tr)?;
                Value::Ext(tr.clone(), tr)
            }
            ExtComp(e2, e1) => match (self.eval(fr, e2)?, self.eval(fr, e1)?) {
                (Value::Ext(b, c), Value::Ext(a, b2)) if b == b2 => Value::Ext(a, c),
                (x, y) => return Err(fragment(format!("ext_comp of {x} and {y}"))),
            },
            KF(tr) => {
                let tr = self.trace(fr, tr)?;
                let k = self
                    .inst
                    .knowledge()
                    .ok_or_else(|| fragment("no presheaf interprets K_f"))?;
                finite(
                    &format!("K_f({tr})"),
                    k.fibre(&tr)
                        .iter()
                        .map(|x| Value::Elem(x.clone()))
                        .collect(),
                )
            }
            Restrict(e, k) => {
                let (Value::Ext(a, b), Value::Elem(x)) = (self.eval(fr, e)?, self.eval(fr, k)?)
                else {
                    return Err(fragment("restrict of a non-witness or non-element"));
                };
                let cat = &self.inst.category;
                let path = cat
                    .path_between(&a, &b)
                    .ok_or_else(|| ModelError::Structure(format!("{b} does not extend {a}")))?;
                let kf = self
                    .inst
                    .knowledge()
                    .ok_or_else(|| fragment("no presheaf interprets K_f"))?;
                Value::Elem(kf.restrict_apply(cat, &path, &x)?)
            }
            Id(_, a, b) => {
                let (a, b) = (self.eval(fr, a)?, self.eval(fr, b)?);
                let elems = if a == b {
                    vec![Value::Refl(Box::new(a))]
                } else {
                    vec![]
                };
                finite("Id", elems)
            }
            Refl(a) => Value::Refl(Box::new(self.eval(fr, a)?)),
            J(parts) => {
                let [_, d, a, _, p] = &**parts;
                match self.eval(fr, p)? {
                    Value::Refl(_) => {
                        let (d, a) = (self.eval(fr, d)?, self.eval(fr, a)?);
                        self.apply(&d, &a)?
                    }
                    other => return Err(fragment(format!("J on {other}"))),
                }
            }
            Top => Value::Prop(self.kripke.all()),
            Bot => Value::Prop(StateSet::new()),
            Triv => Value::Proof,
            Absurd(p, _) => {
                self.eval(fr, p)?;
                return Err(ModelError::Refuted("bot".into()));
            }
            And(a, b) => {
                let (a, b) = (self.eval_prop(fr, a)?, self.eval_prop(fr, b)?);
                Value::Prop(&a & &b)
            }
            Or(a, b) => {
                let (a, b) = (self.eval_prop(fr, a)?, self.eval_prop(fr, b)?);
                Value::Prop(&a | &b)
            }
            Diamond(p) => {
                let p = self.eval_prop(fr, p)?;
                Value::Prop(self.kripke.pre_exists(&self.succ, &p))
            }
            Square(p) => {
                let p = self.eval_prop(fr, p)?;
                Value::Prop(self.kripke.pre_forall(&self.succ, &p))
            }
            Mu(_, body) | Nu(_, body) => {
                let mut failure = None;
                let mut stats = self.stats;
                let top = self.kripke.all();
                let mut step = |x: &StateSet| -> Result<StateSet, MuError> {
                    fr.props.push(x.clone());
                    let v = self.eval_prop(fr, body);
                    fr.props.pop();
                    v.map_err(|e| {
                        failure = Some(e);
                        MuError::Structure("fixpoint body".into())
                    })
                };
                let r = if matches!(t, Mu(..)) {
                    lfp(&mut stats, &mut step)
                } else {
                    gfp(&mut stats, top, &mut step)
                };
                self.stats = stats;
                if let Some(e) = failure {
                    return Err(e);
                }
                Value::Prop(r?)
            }
            Fold(w) | Unfold(w) | NuIn(w) | NuOut(w) => self.eval(fr, w)?,
            Atom(p, s) => {
                let s = self.elem(fr, s)?;
                let i = self
                    .kripke
                    .index_of(&s)
                    .ok_or_else(|| ModelError::Structure(format!("`{s}` is not a state")))?;
                Value::Prop(if self.kripke.holds(p, i) {
                    self.kripke.all()
                } else {
                    StateSet::new()
                })
            }
            InfTrace | Cons(..) | Head(_) | Tail(_) | Cofix(..) | KInf(_) => {
                return Err(fragment(
                    "infinite traces and K_inf have no finite interpretation",
                ))
            }
        })
    }

    fn prop_type(&self, ctx: &Context, t: &Term) -> Result<bool, ModelError> {
        is_prop_type(self.env, ctx, t, DEFAULT_FUEL).map_err(|e| fragment(e.to_string()))
    }

    fn expect_prop(&self, v: Value) -> Result<StateSet, ModelError> {
        match v {
            Value::Prop(s) => Ok(s),
            other => Err(fragment(format!("expected a proposition, got {other}"))),
        }
    }

    fn eval_prop(&mut self, fr: &mut Frame, t: &Term) -> Result<StateSet, ModelError> {
        let v = self.eval(fr, t)?;
        self.expect_prop(v)
    }

    fn elem(&mut self, fr: &mut Frame, t: &Term) -> Result<String, ModelError> {
        match self.eval(fr, t)? {
            Value::Elem(s) => Ok(s),
            other => Err(fragment(format!("expected a state or event, got {other}"))),
        }
    }

    fn trace(&mut self, fr: &mut Frame, t: &Term) -> Result<String, ModelError> {
        match self.eval(fr, t)? {
            Value::Trace(s) => Ok(s),
            other => Err(fragment(format!("expected a finite trace, got {other}"))),
        }
    }

    fn node(&self, name: String) -> Result<Value, ModelError> {
        if self.inst.category.has_object(&name) {
            Ok(Value::Trace(name))
        } else {
            Err(fragment(format!(
                "trace {name} is not in the unrolled trajectory category"
            )))
        }
    }

    pub fn apply(&mut self, f: &Value, x: &Value) -> Result<Value, ModelError> {
        match f {
            Value::Fun(table) => table
                .iter()
                .find(|(a, _)| a == x)
                .map(|(_, b)| b.clone())
                .ok_or_else(|| fragment(format!("{x} is outside the table's domain"))),
            Value::Proof => Ok(Value::Proof),
            other => Err(fragment(format!("cannot apply {other}"))),
        }
    }

    fn cod_at(&mut self, cod: &Cod, x: &Value) -> Result<Value, ModelError> {
        match cod {
            Cod::Const(v) => Ok((**v).clone()),
            Cod::Closure {
                frame,
                name,
                dom,
                body,
            } => {
                let mut fr = frame.clone();
                fr.push(name, dom, x.clone());
                self.eval(&mut fr, body)
            }
        }
    }

    /// The elements of a type value.
    pub fn elements(&mut self, ty: &Value) -> Result<Vec<Value>, ModelError> {
        match ty {
            Value::Type(SemType::Finite { elems, .. }) => Ok(elems.clone()),
            Value::Prop(s) => Ok(if s.contains(&self.current) {
                vec![Value::Proof]
            } else {
                vec![]
            }),
            Value::Type(SemType::Pi { dom, cod }) => {
                let xs = self.elements(dom)?;
                if xs.len() > MAX_TABLE_DOMAIN {
                    return Err(fragment(format!(
                        "function space over {} elements",
                        xs.len()
                    )));
                }
                let mut tables: Vec<Vec<(Value, Value)>> = vec![Vec::new()];
                for x in xs {
                    let c = self.cod_at(cod, &x)?;
                    let ys = self.elements(&c)?;
                    if tables.len().saturating_mul(ys.len()) > MAX_TABLES {
                        return Err(fragment("function space too large to enumerate"));
                    }
                    let mut next = Vec::with_capacity(tables.len() * ys.len());
                    for t in &tables {
                        for y in &ys {
                            let mut t = t.clone();
                            t.push((x.clone(), y.clone()));
                            next.push(t);
                        }
                    }
                    tables = next;
                }
                Ok(tables.into_iter().map(Value::Fun).collect())
            }
            other => Err(fragment(format!("cannot enumerate {other}"))),
        }
    }

    /// `v ∈ ⟦ty⟧`.
    pub fn member(&mut self, v: &Value, ty: &Value) -> Result<bool, ModelError> {
        match ty {
            Value::Prop(s) => Ok(s.contains(&self.current)),
            Value::Type(SemType::Finite { elems, .. }) => Ok(elems.contains(v)),
            Value::Type(SemType::Pi { dom, cod }) => {
                let Value::Fun(table) = v else {
                    return Ok(false);
                };
                let xs = self.elements(dom)?;
                if xs.len() != table.len() || !xs.iter().all(|x| table.iter().any(|(a, _)| a == x))
                {
                    return Ok(false);
                }
                for (x, y) in table {
                    let c = self.cod_at(cod, x)?;
                    if !self.member(y, &c)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Value::Universe(Sort::Prop) => Ok(matches!(v, Value::Prop(_))),
            Value::Universe(_) => Ok(matches!(v, Value::Type(_) | Value::Universe(_))),
            _ => Err(fragment(format!("{ty} is not a type"))),
        }
    }

    fn constant(&mut self, c: &str) -> Result<Value, ModelError> {
        if let Some(v) = self.cache.get(c) {
            return Ok(v.clone());
        }
        let Some(g) = self.env.get(c).cloned() else {
            let sk = &self.inst.skeleton;
            if sk.states.iter().any(|s| s == c) || sk.events().iter().any(|e| e == c) {
                return Ok(Value::Elem(c.to_string()));
            }
            return Err(fragment(format!("undeclared constant `{c}`")));
        };
        if !self.active.insert(c.to_string()) {
            return Err(fragment(format!("`{c}` is defined in terms of itself")));
        }
        let v = match &g.value {
            Some(body) => self.eval_closed(body),
            None => self.axiom(c, &g.ty),
        };
        self.active.remove(c);
        let v = v?;
        self.cache.insert(c.to_string(), v.clone());
        Ok(v)
    }

    fn axiom(&mut self, c: &str, ty: &Term) -> Result<Value, ModelError> {
        let tv = self.eval_closed(ty)?;
        if let Some(holds) = self.holds(&tv) {
            return if holds {
                Ok(Value::Proof)
            } else {
                Err(ModelError::Refuted(c.to_string()))
            };
        }
        let given = self.inst.constants.get(c).cloned();
        match (&tv, given) {
            (Value::Universe(Sort::Prop), Some(serde_json::Value::Array(xs))) => {
                let mut set = StateSet::new();
                for x in xs {
                    let name = x.as_str().unwrap_or_default();
                    set.insert(self.kripke.index_of(name).ok_or_else(|| {
                        ModelError::Structure(format!("`{name}` is not a state"))
                    })?);
                }
                Ok(Value::Prop(set))
            }
            (Value::Universe(_), _) => match self.inst.carriers.get(c) {
                Some(xs) => Ok(finite(
                    c,
                    xs.iter().map(|x| Value::Elem(x.clone())).collect(),
                )),
                None => Err(fragment(format!("no carrier for `{c}`"))),
            },
            (_, Some(j)) => self.value_from_json(c, &j, &tv),
            (_, None) => {
                let own = self
                    .elements(&tv)?
                    .into_iter()
                    .find(|x| matches!(x, Value::Elem(n) | Value::Trace(n) if n == c));
                own.ok_or_else(|| fragment(format!("no value for `{c}`")))
            }
        }
    }

    fn value_from_json(
        &mut self,
        c: &str,
        j: &serde_json::Value,
        ty: &Value,
    ) -> Result<Value, ModelError> {
        match (j, ty) {
            (serde_json::Value::String(s), _) => self
                .elements(ty)?
                .into_iter()
                .find(|x| x.to_string() == *s)
                .ok_or_else(|| {
                    ModelError::Structure(format!("value `{s}` of `{c}` is not in its type"))
                }),
            (serde_json::Value::Object(map), Value::Type(SemType::Pi { dom, cod })) => {
                let mut table = Vec::new();
                for x in self.elements(dom)? {
                    let entry = map.get(&x.to_string()).ok_or_else(|| {
                        ModelError::Structure(format!("`{c}` has no entry for {x}"))
                    })?;
                    let cty = self.cod_at(cod, &x)?;
                    let y = self.value_from_json(c, entry, &cty)?;
                    table.push((x, y));
                }
                Ok(Value::Fun(table))
            }
            _ => Err(ModelError::Structure(format!(
                "cannot read the value of `{c}`"
            ))),
        }
    }
}

/// `⟦bot⟧` holds nowhere.
pub fn bot_is_false(inst: &SetModelInstance) -> bool {
    let env = Env::new();
    let mut ev = Evaluator::new(inst, &env);
    matches!(ev.eval_closed(&Term::Bot), Ok(Value::Prop(s)) if s.is_empty())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Soundness {
    Sound,
    Unsound(String),
    /// Outside the evaluable fragment.
    Skipped(String),
}

/// Evaluates every declaration of a checked theory and checks that each
/// value lies in the interpretation of its type. `env` must already hold
/// the theory's globals.
pub fn soundness_check(
    inst: &SetModelInstance,
    env: &Env,
    theory: &Theory,
) -> Vec<(String, Soundness)> {
    let mut ev = Evaluator::new(inst, env);
    let mut out = Vec::new();
    for located in &theory.decls {
        let verdict = match &located.decl {
            Declaration::Axiom { name, ty } | Declaration::Definition { name, ty, .. } => {
                judge(&mut ev, &Term::Const(name.clone()), ty)
            }
            Declaration::CheckType { term, ty } => judge(&mut ev, term, ty),
            Declaration::CheckEq { lhs, rhs } => match (ev.eval_closed(lhs), ev.eval_closed(rhs)) {
                (Ok(a), Ok(b)) if a == b => Ok(Soundness::Sound),
                (Ok(a), Ok(b)) => Ok(Soundness::Unsound(format!("{a} differs from {b}"))),
                (Err(e), _) | (_, Err(e)) => Err(e),
            },
        };
        let verdict = match verdict {
            Ok(v) => v,
            Err(ModelError::Fragment(why)) => Soundness::Skipped(why),
            Err(e) => Soundness::Unsound(e.to_string()),
        };
        out.push((located.label(), verdict));
    }
    out
}

fn judge(ev: &mut Evaluator<'_>, term: &Term, ty: &Term) -> Result<Soundness, ModelError> {
    let v = ev.eval_closed(term)?;
    let tv = ev.eval_closed(ty)?;
    Ok(if ev.member(&v, &tv)? {
        Soundness::Sound
    } else {
        Soundness::Unsound(format!("{v} is not in {tv}"))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_term, parse_theory};
    use crate::typeck::check_theory_with;

    const INST: &str = r#"{
        "states": ["s0", "s1"],
        "steps": [["s0", "go", "s1"], ["s1", "stay", "s1"]],
        "valuation": {"p": ["s1"]},
        "trace_depth": 2,
        "presheaves": {"K_f": {
            "fibres": {"s0": ["a"], "s0.go.s1": ["a", "b"]},
            "restrictions": {"s0.go.s1": {"a": "a", "b": "a"}, "s0.go.s1.stay.s1": {"x": "b"}},
            "default_fibre": ["x"]
        }},
        "carriers": {"Bit": ["0", "1"]},
        "constants": {"k": "b"}
    }"#;

    fn inst() -> SetModelInstance {
        SetModelInstance::from_json(INST).unwrap()
    }

    #[test]
    fn bot_and_identity() {
        let m = inst();
        assert!(bot_is_false(&m));
        let src = "axiom Bit : Uc0\ndef idb : Bit -> Bit := fun (x : Bit) => x";
        let th = parse_theory(src).unwrap();
        let (report, checker) = check_theory_with(&th, DEFAULT_FUEL);
        assert!(report.all_ok());
        let mut ev = Evaluator::new(&m, &checker.env);
        let v = ev.eval_closed(&Term::Const("idb".into())).unwrap();
        assert_eq!(v.to_string(), "{0 => 0, 1 => 1}");
        assert!(soundness_check(&m, &checker.env, &th)
            .iter()
            .all(|(_, s)| *s == Soundness::Sound));
    }

    #[test]
    fn restrict_follows_the_presheaf() {
        let m = inst();
        let src = "axiom s0 : State\naxiom s1 : State\naxiom go : Event\n\
                   axiom k : K_f(step(nil(s0), go, s1))\n\
                   def k0 : K_f(nil(s0)) := restrict(ext_steps(nil(s0), [go => s1]), k)";
        let th = parse_theory(src).unwrap();
        let (report, checker) = check_theory_with(&th, DEFAULT_FUEL);
        assert!(report.all_ok(), "{:?}", report.human_lines());
        let mut ev = Evaluator::new(&m, &checker.env);
        assert_eq!(
            ev.eval_closed(&Term::Const("k0".into())).unwrap(),
            Value::Elem("a".into())
        );
        assert!(soundness_check(&m, &checker.env, &th)
            .iter()
            .all(|(_, s)| *s == Soundness::Sound));
        let mut bare = Evaluator::new(&m, &checker.env);
        let w = parse_term("ext_steps(nil(s0), [go => s1])").unwrap();
        assert_eq!(
            bare.eval_closed(&w).unwrap(),
            Value::Ext("s0".into(), "s0.go.s1".into())
        );
    }

    #[test]
    fn modal_fixpoints() {
        let m = inst();
        let env = Env::new();
        let mut ev = Evaluator::new(&m, &env);
        let reach = parse_term("mu X. p_at(s1) \\/ dia X").unwrap();
        let v = ev.eval_closed(&reach).unwrap();
        assert_eq!(ev.holds(&v), Some(true));
        let never = parse_term("dia p_at(s0)").unwrap();
        let v = ev.eval_closed(&never).unwrap();
        assert_eq!(ev.holds(&v), Some(false));
    }
}
