use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::category::{Function, Presheaf, TraceCategory, DEFAULT_MORPHISM_BOUND};
use super::ModelError;
use crate::mu::KripkeStructure;

pub const DEFAULT_TRACE_DEPTH: usize = 2;
pub const KNOWLEDGE: &str = "K_f";

/// What survives forgetting the presheaves: states, labelled steps and
/// the valuation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skeleton {
    pub states: Vec<String>,
    pub steps: Vec<(String, String, String)>,
    pub valuation: BTreeMap<String, Vec<String>>,
}

impl Skeleton {
    pub fn kripke(&self) -> KripkeStructure {
        let mut seen = BTreeSet::new();
        let transitions = self
            .steps
            .iter()
            .filter(|(a, _, b)| seen.insert((a.clone(), b.clone())))
            .map(|(a, _, b)| (a.clone(), b.clone()))
            .collect();
        KripkeStructure {
            states: self.states.clone(),
            transitions,
            valuation: self.valuation.clone(),
        }
    }

    pub fn events(&self) -> Vec<String> {
        let set: BTreeSet<&String> = self.steps.iter().map(|(_, e, _)| e).collect();
        set.into_iter().cloned().collect()
    }

    pub fn has_step(&self, a: &str, e: &str, b: &str) -> bool {
        self.steps
            .iter()
            .any(|(x, y, z)| x == a && y == e && z == b)
    }
}

/// `s_0 -e_1-> s_1 -> ... -e_n-> s_n`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CausalChain {
    pub start: String,
    pub steps: Vec<(String, String)>,
}

pub fn causal_chain_check(skeleton: &Skeleton, chain: &CausalChain) -> bool {
    let mut cur = chain.start.as_str();
    if !skeleton.states.iter().any(|s| s == cur) {
        return false;
    }
    for (e, next) in &chain.steps {
        if !skeleton.has_step(cur, e, next) {
            return false;
        }
        cur = next;
    }
    true
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SetModelInstance {
    pub skeleton: Skeleton,
    pub category: TraceCategory,
    pub presheaves: BTreeMap<String, Presheaf>,
    /// Finite carriers for `Uc` base types declared as axioms.
    pub carriers: BTreeMap<String, Vec<String>>,
    /// Values of axioms: an element label, or a table for unary functions.
    pub constants: BTreeMap<String, serde_json::Value>,
    pub current_state: String,
}

fn default_depth() -> usize {
    DEFAULT_TRACE_DEPTH
}

fn default_event() -> String {
    "tick".into()
}

#[derive(Deserialize)]
#[serde(untagged)]
enum StepEntry {
    Labelled(String, String, String),
    Plain(String, String),
}

#[derive(Deserialize)]
struct PresheafFile {
    #[serde(default)]
    fibres: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    restrictions: BTreeMap<String, Function>,
    #[serde(default)]
    composites: BTreeMap<String, Function>,
    /// Fibre for every object not listed in `fibres`.
    default_fibre: Option<Vec<String>>,
}

#[derive(Deserialize)]
struct InstanceFile {
    states: Vec<String>,
    #[serde(default)]
    transitions: Vec<(String, String)>,
    #[serde(default)]
    steps: Vec<StepEntry>,
    #[serde(default)]
    valuation: BTreeMap<String, Vec<String>>,
    #[serde(default = "default_depth")]
    trace_depth: usize,
    morphism_bound: Option<usize>,
    current_state: Option<String>,
    #[serde(default)]
    presheaves: BTreeMap<String, PresheafFile>,
    #[serde(default)]
    carriers: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    constants: BTreeMap<String, serde_json::Value>,
}

/// Restrictions left out of a file are filled in where only one choice
/// is reasonable: identity between equal fibres, the unique map into a
/// singleton.
fn complete(cat: &TraceCategory, file: PresheafFile) -> Presheaf {
    let mut k = Presheaf {
        fibres: file.fibres,
        restrictions: file.restrictions,
        composites: file.composites,
    };
    if let Some(d) = &file.default_fibre {
        for o in &cat.objects {
            k.fibres.entry(o.clone()).or_insert_with(|| d.clone());
        }
    }
    for g in &cat.generators {
        if k.restrictions.contains_key(&g.name) {
            continue;
        }
        let (src, tgt) = (k.fibre(&g.source).to_vec(), k.fibre(&g.target).to_vec());
        let mut sorted = (src.clone(), tgt.clone());
        sorted.0.sort();
        sorted.1.sort();
        let f: Option<Function> = if sorted.0 == sorted.1 {
            Some(tgt.iter().map(|x| (x.clone(), x.clone())).collect())
        } else if src.len() == 1 || tgt.is_empty() {
            Some(tgt.iter().map(|x| (x.clone(), src[0].clone())).collect())
        } else {
            None
        };
        if let Some(f) = f {
            k.restrictions.insert(g.name.clone(), f);
        }
    }
    k
}

impl SetModelInstance {
    pub fn new(
        skeleton: Skeleton,
        trace_depth: usize,
        morphism_bound: usize,
        presheaves: BTreeMap<String, Presheaf>,
        carriers: BTreeMap<String, Vec<String>>,
        constants: BTreeMap<String, serde_json::Value>,
        current_state: Option<String>,
    ) -> Result<Self, ModelError> {
        skeleton.kripke().validate()?;
        for (a, _, b) in &skeleton.steps {
            if !skeleton.states.contains(a) || !skeleton.states.contains(b) {
                return Err(ModelError::Structure(format!(
                    "step {a} -> {b} mentions an undeclared state"
                )));
            }
        }
        let category = TraceCategory::from_skeleton(
            &skeleton.states,
            &skeleton.steps,
            trace_depth,
            morphism_bound,
        )?;
        for (name, k) in &presheaves {
            for o in k.fibres.keys() {
                if !category.has_object(o) {
                    return Err(ModelError::UnknownObject(format!("{o} (fibre of {name})")));
                }
            }
            if let Some(v) = k.check_functor_laws(&category).violation {
                return Err(ModelError::Functor {
                    name: name.clone(),
                    detail: v.detail,
                });
            }
        }
        let current_state = match current_state {
            Some(s) if skeleton.states.contains(&s) => s,
            Some(s) => {
                return Err(ModelError::Structure(format!(
                    "current state `{s}` is not a state"
                )))
            }
            None => skeleton
                .states
                .first()
                .cloned()
                .ok_or_else(|| ModelError::Structure("no states".into()))?,
        };
        Ok(SetModelInstance {
            skeleton,
            category,
            presheaves,
            carriers,
            constants,
            current_state,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        Self::from_json_with_bound(text, DEFAULT_MORPHISM_BOUND)
    }

    /// Like [`from_json`](Self::from_json), with `bound` used when the file
    /// sets no `morphism_bound`.
    pub fn from_json_with_bound(text: &str, bound: usize) -> Result<Self, ModelError> {
        let f: InstanceFile =
            serde_json::from_str(text).map_err(|e| ModelError::Structure(e.to_string()))?;
        let mut steps: Vec<(String, String, String)> = f
            .steps
            .into_iter()
            .map(|s| match s {
                StepEntry::Labelled(a, e, b) => (a, e, b),
                StepEntry::Plain(a, b) => (a, default_event(), b),
            })
            .collect();
        for (a, b) in f.transitions {
            if !steps.iter().any(|(x, _, y)| *x == a && *y == b) {
                steps.push((a, default_event(), b));
            }
        }
        let skeleton = Skeleton {
            states: f.states,
            steps,
            valuation: f.valuation,
        };
        let bound = f.morphism_bound.unwrap_or(bound);
        let category =
            TraceCategory::from_skeleton(&skeleton.states, &skeleton.steps, f.trace_depth, bound)?;
        let presheaves = f
            .presheaves
            .into_iter()
            .map(|(n, p)| (n, complete(&category, p)))
            .collect();
        SetModelInstance::new(
            skeleton,
            f.trace_depth,
            bound,
            presheaves,
            f.carriers,
            f.constants,
            f.current_state,
        )
    }

    /// Drops everything but the skeleton.
    pub fn forget(&self) -> Skeleton {
        self.skeleton.clone()
    }

    /// The presheaf interpreting `K_f`: the one so named, or the only one.
    pub fn knowledge(&self) -> Option<&Presheaf> {
        self.presheaves.get(KNOWLEDGE).or_else(|| {
            (self.presheaves.len() == 1)
                .then(|| self.presheaves.values().next())
                .flatten()
        })
    }
}
