use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::mu::LassoTrace;

pub const DEFAULT_MORPHISM_BOUND: usize = 8;

/// A generating arrow `source -> target`; presheaves restrict along it
/// from `target` back to `source`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Generator {
    pub name: String,
    pub source: String,
    pub target: String,
    pub label: String,
}

/// A composable sequence of generators in diagram order. The empty
/// sequence is the identity on `source`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Path {
    pub source: String,
    pub target: String,
    pub gens: Vec<usize>,
}

/// The free category on a finite graph, with morphisms enumerated up to
/// `bound` generators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceCategory {
    pub objects: Vec<String>,
    pub generators: Vec<Generator>,
    pub bound: usize,
}

/// Trace-node name of `base` extended by one step.
pub fn extend_node(base: &str, event: &str, state: &str) -> String {
    format!("{base}.{event}.{state}")
}

/// Node names of the prefixes of `pi` of lengths `0..=depth`.
pub fn lasso_nodes(pi: &LassoTrace, depth: usize) -> Vec<String> {
    let mut out: Vec<String> = Vec::with_capacity(depth + 1);
    for pos in 0..=depth {
        let step = if pos < pi.prefix.len() {
            &pi.prefix[pos]
        } else {
            &pi.cycle[(pos - pi.prefix.len()) % pi.cycle.len()]
        };
        match out.last() {
            None => out.push(step.state.clone()),
            Some(prev) => out.push(extend_node(prev, &step.event, &step.state)),
        }
    }
    out
}

impl TraceCategory {
    pub fn new(
        objects: Vec<String>,
        generators: Vec<Generator>,
        bound: usize,
    ) -> Result<Self, ModelError> {
        let known: BTreeSet<&String> = objects.iter().collect();
        if known.len() != objects.len() {
            return Err(ModelError::Structure("an object is listed twice".into()));
        }
        let mut names = BTreeSet::new();
        for g in &generators {
            if !names.insert(&g.name) {
                return Err(ModelError::Structure(format!(
                    "arrow `{}` is listed twice",
                    g.name
                )));
            }
            for end in [&g.source, &g.target] {
                if !known.contains(end) {
                    return Err(ModelError::UnknownObject(end.clone()));
                }
            }
        }
        Ok(TraceCategory {
            objects,
            generators,
            bound,
        })
    }

    /// Unrolls `steps` from every state up to `depth` steps. Objects are
    /// trace nodes `s0`, `s0.e.s1`, ...; the arrow into a node is named
    /// after that node.
    pub fn from_skeleton(
        states: &[String],
        steps: &[(String, String, String)],
        depth: usize,
        bound: usize,
    ) -> Result<Self, ModelError> {
        let mut objects = Vec::new();
        let mut generators = Vec::new();
        let mut frontier: Vec<(String, String)> =
            states.iter().map(|s| (s.clone(), s.clone())).collect();
        objects.extend(states.iter().cloned());
        for _ in 0..depth {
            let mut next = Vec::new();
            for (node, last) in &frontier {
                for (a, e, b) in steps {
                    if a == last {
                        let child = extend_node(node, e, b);
                        objects.push(child.clone());
                        generators.push(Generator {
                            name: child.clone(),
                            source: node.clone(),
                            target: child.clone(),
                            label: e.clone(),
                        });
                        next.push((child, b.clone()));
                    }
                }
            }
            frontier = next;
        }
        TraceCategory::new(objects, generators, bound)
    }

    /// The chain of prefixes of one lasso.
    pub fn from_lasso(pi: &LassoTrace, depth: usize) -> Result<Self, ModelError> {
        let nodes = lasso_nodes(pi, depth);
        let generators = nodes
            .windows(2)
            .map(|w| Generator {
                name: w[1].clone(),
                source: w[0].clone(),
                target: w[1].clone(),
                label: w[1].rsplit('.').nth(1).unwrap_or_default().to_string(),
            })
            .collect();
        TraceCategory::new(nodes, generators, depth.max(DEFAULT_MORPHISM_BOUND))
    }

    pub fn has_object(&self, o: &str) -> bool {
        self.objects.iter().any(|x| x == o)
    }

    pub fn generator_index(&self, name: &str) -> Option<usize> {
        self.generators.iter().position(|g| g.name == name)
    }

    pub fn identity(&self, o: &str) -> Path {
        Path {
            source: o.to_string(),
            target: o.to_string(),
            gens: Vec::new(),
        }
    }

    /// Builds a path from generator names, checking composability.
    pub fn path(&self, source: &str, names: &[&str]) -> Result<Path, ModelError> {
        if !self.has_object(source) {
            return Err(ModelError::UnknownObject(source.to_string()));
        }
        let mut p = self.identity(source);
        for n in names {
            let i = self
                .generator_index(n)
                .ok_or_else(|| ModelError::UnknownArrow(n.to_string()))?;
            let g = &self.generators[i];
            if g.source != p.target {
                return Err(ModelError::Structure(format!(
                    "arrow `{n}` starts at {} but the path ends at {}",
                    g.source, p.target
                )));
            }
            p.target = g.target.clone();
            p.gens.push(i);
        }
        Ok(p)
    }

    pub fn gen_names(&self, p: &Path) -> Vec<String> {
        p.gens
            .iter()
            .map(|&i| self.generators[i].name.clone())
            .collect()
    }

    /// Every morphism with at most `bound` generators, identities first.
    pub fn morphisms(&self) -> Vec<Path> {
        let mut out: Vec<Path> = self.objects.iter().map(|o| self.identity(o)).collect();
        let mut layer = out.clone();
        for _ in 0..self.bound {
            let mut next = Vec::new();
            for p in &layer {
                for (i, g) in self.generators.iter().enumerate() {
                    if g.source == p.target {
                        let mut q = p.clone();
                        q.target = g.target.clone();
                        q.gens.push(i);
                        next.push(q);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            out.extend(next.iter().cloned());
            layer = next;
        }
        out
    }

    /// A shortest path from `a` to `b`; unique in trace trees.
    pub fn path_between(&self, a: &str, b: &str) -> Option<Path> {
        if !self.has_object(a) || !self.has_object(b) {
            return None;
        }
        let mut queue = VecDeque::from([self.identity(a)]);
        let mut seen = BTreeSet::from([a.to_string()]);
        while let Some(p) = queue.pop_front() {
            if p.target == b {
                return Some(p);
            }
            for (i, g) in self.generators.iter().enumerate() {
                if g.source == p.target && seen.insert(g.target.clone()) {
                    let mut q = p.clone();
                    q.target = g.target.clone();
                    q.gens.push(i);
                    queue.push_back(q);
                }
            }
        }
        None
    }

    /// Objects reachable from `o`, including `o`.
    pub fn extensions(&self, o: &str) -> BTreeSet<String> {
        let mut seen = BTreeSet::from([o.to_string()]);
        let mut stack = vec![o.to_string()];
        while let Some(x) = stack.pop() {
            for g in &self.generators {
                if g.source == x && seen.insert(g.target.clone()) {
                    stack.push(g.target.clone());
                }
            }
        }
        seen
    }
}

pub type Function = BTreeMap<String, String>;

/// A Set-valued presheaf: fibres over objects and, for each generator
/// `a -> b`, a function `fibre(b) -> fibre(a)`.
///
/// `composites` may pin the action of a longer path explicitly. The free
/// category forces it to be the composite, so an override that disagrees
/// is exactly a functor-law violation.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Presheaf {
    pub fibres: BTreeMap<String, Vec<String>>,
    pub restrictions: BTreeMap<String, Function>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub composites: BTreeMap<String, Function>,
}

/// Key of a composite override: generator names joined by `;`.
pub fn composite_key(names: &[String]) -> String {
    names.join(";")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Law {
    Totality,
    Identity,
    Composition,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LawViolation {
    pub law: Law,
    /// For composition, `first` is `n` and `second` is `m` in `m ∘ n`.
    pub first: Vec<String>,
    pub second: Vec<String>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctorReport {
    pub pairs_checked: usize,
    pub violation: Option<LawViolation>,
}

impl FunctorReport {
    pub fn is_ok(&self) -> bool {
        self.violation.is_none()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FailureReport {
    /// Morphisms into an empty fibre whose restriction image was inspected.
    pub checked: usize,
    /// Paths that produced an element out of an empty fibre. Always empty
    /// for a well-formed presheaf; asserted rather than assumed.
    pub leaks: Vec<Vec<String>>,
    /// Objects all of whose extensions have empty fibres.
    pub permanently_failed: Vec<String>,
}

impl Presheaf {
    pub fn fibre(&self, o: &str) -> &[String] {
        self.fibres.get(o).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn fibre_size(&self, o: &str) -> usize {
        self.fibre(o).len()
    }

    /// The function a path acts by, `fibre(target) -> fibre(source)`.
    pub fn action(&self, cat: &TraceCategory, p: &Path) -> Result<Function, ModelError> {
        if p.gens.len() > 1 {
            if let Some(f) = self.composites.get(&composite_key(&cat.gen_names(p))) {
                return Ok(f.clone());
            }
        }
        let mut out = Function::new();
        for x in self.fibre(&p.target) {
            out.insert(x.clone(), self.apply_gens(cat, &p.gens, x)?);
        }
        Ok(out)
    }

    fn apply_gens(
        &self,
        cat: &TraceCategory,
        gens: &[usize],
        x: &str,
    ) -> Result<String, ModelError> {
        let mut cur = x.to_string();
        for &i in gens.iter().rev() {
            let g = &cat.generators[i];
            let f = self
                .restrictions
                .get(&g.name)
                .ok_or_else(|| ModelError::UnknownArrow(g.name.clone()))?;
            cur = f.get(&cur).cloned().ok_or_else(|| ModelError::NotInFibre {
                object: g.target.clone(),
                element: cur.clone(),
            })?;
        }
        Ok(cur)
    }

    /// `K(path)(x)`: restrict an element of the target fibre back to the source.
    pub fn restrict_apply(
        &self,
        cat: &TraceCategory,
        p: &Path,
        x: &str,
    ) -> Result<String, ModelError> {
        if !self.fibre(&p.target).iter().any(|y| y == x) {
            return Err(ModelError::NotInFibre {
                object: p.target.clone(),
                element: x.to_string(),
            });
        }
        let f = self.action(cat, p)?;
        Ok(f[x].clone())
    }

    /// Empty fibre: no global element, so no knowledge at `o`.
    pub fn is_failed(&self, cat: &TraceCategory, o: &str) -> Result<bool, ModelError> {
        if !cat.has_object(o) {
            return Err(ModelError::UnknownObject(o.to_string()));
        }
        Ok(self.fibre(o).is_empty())
    }

    pub fn check_functor_laws(&self, cat: &TraceCategory) -> FunctorReport {
        let mut report = FunctorReport {
            pairs_checked: 0,
            violation: None,
        };
        let fail = |law, first: Vec<String>, second: Vec<String>, detail: String| {
            Some(LawViolation {
                law,
                first,
                second,
                detail,
            })
        };
        for g in &cat.generators {
            let f = self.restrictions.get(&g.name);
            for x in self.fibre(&g.target) {
                let image = f.and_then(|f| f.get(x));
                if !image.is_some_and(|y| self.fibre(&g.source).contains(y)) {
                    report.violation = fail(
                        Law::Totality,
                        vec![g.name.clone()],
                        vec![],
                        format!("{x} in K({}) has no image in K({})", g.target, g.source),
                    );
                    return report;
                }
            }
        }
        let morphisms = cat.morphisms();
        for o in &cat.objects {
            report.pairs_checked += 1;
            match self.action(cat, &cat.identity(o)) {
                Ok(f) if f.iter().all(|(a, b)| a == b) => {}
                _ => {
                    report.violation = fail(
                        Law::Identity,
                        vec![],
                        vec![],
                        format!("K(id_{o}) is not the identity"),
                    );
                    return report;
                }
            }
        }
        for p in &morphisms {
            for cut in 0..=p.gens.len() {
                report.pairs_checked += 1;
                let n = Path {
                    source: p.source.clone(),
                    target: if cut == 0 {
                        p.source.clone()
                    } else {
                        cat.generators[p.gens[cut - 1]].target.clone()
                    },
                    gens: p.gens[..cut].to_vec(),
                };
                let m = Path {
                    source: n.target.clone(),
                    target: p.target.clone(),
                    gens: p.gens[cut..].to_vec(),
                };
                let (whole, kn, km) = match (
                    self.action(cat, p),
                    self.action(cat, &n),
                    self.action(cat, &m),
                ) {
                    (Ok(a), Ok(b), Ok(c)) => (a, b, c),
                    (Err(e), ..) | (_, Err(e), _) | (.., Err(e)) => {
                        report.violation = fail(
                            Law::Totality,
                            cat.gen_names(&n),
                            cat.gen_names(&m),
                            e.to_string(),
                        );
                        return report;
                    }
                };
                for x in self.fibre(&p.target) {
                    let split = km.get(x).and_then(|y| kn.get(y));
                    if whole.get(x) != split {
                        report.violation = fail(
                            Law::Composition,
                            cat.gen_names(&n),
                            cat.gen_names(&m),
                            format!(
                                "K(m∘n)({x}) = {} but K(n)(K(m)({x})) = {}",
                                whole.get(x).map_or("undefined", String::as_str),
                                split.map_or("undefined", String::as_str)
                            ),
                        );
                        return report;
                    }
                }
            }
        }
        report
    }

    pub fn failure_propagation_check(&self, cat: &TraceCategory) -> FailureReport {
        let mut report = FailureReport::default();
        for p in cat.morphisms() {
            if self.fibre(&p.target).is_empty() {
                report.checked += 1;
                let image = self.action(cat, &p).map(|f| f.len()).unwrap_or(0);
                if image > 0 {
                    report.leaks.push(cat.gen_names(&p));
                }
            }
        }
        for o in &cat.objects {
            if cat.extensions(o).iter().all(|x| self.fibre(x).is_empty()) {
                report.permanently_failed.push(o.clone());
            }
        }
        report
    }

    /// Compatible families `(k_0, ..., k_depth)` along the prefixes of `pi`.
    pub fn k_infty(
        &self,
        cat: &TraceCategory,
        pi: &LassoTrace,
        depth: usize,
    ) -> Result<Vec<Vec<String>>, ModelError> {
        if depth > cat.bound {
            return Err(ModelError::DepthExceedsBound {
                depth,
                bound: cat.bound,
            });
        }
        if pi.cycle.is_empty() {
            return Err(ModelError::Structure("lasso with an empty cycle".into()));
        }
        let nodes = lasso_nodes(pi, depth);
        let mut links = Vec::with_capacity(depth);
        for w in nodes.windows(2) {
            let p = cat
                .path_between(&w[0], &w[1])
                .filter(|p| p.gens.len() == 1)
                .ok_or_else(|| ModelError::UnknownObject(w[1].clone()))?;
            links.push(p.gens[0]);
        }
        if !cat.has_object(&nodes[0]) {
            return Err(ModelError::UnknownObject(nodes[0].clone()));
        }
        let mut out = Vec::new();
        'top: for k in self.fibre(&nodes[depth]) {
            let mut family = vec![k.clone()];
            for i in (0..depth).rev() {
                let prev = family.last().expect("nonempty");
                let below = match self.apply_gens(cat, &links[i..=i], prev) {
                    Ok(y) if self.fibre(&nodes[i]).contains(&y) => y,
                    _ => continue 'top,
                };
                family.push(below);
            }
            family.reverse();
            out.push(family);
        }
        out.sort();
        Ok(out)
    }

    /// Family counts at every depth up to `depth`; a constant tail means
    /// the limit has stabilized on this lasso.
    pub fn k_infty_profile(
        &self,
        cat: &TraceCategory,
        pi: &LassoTrace,
        depth: usize,
    ) -> Result<Vec<usize>, ModelError> {
        (0..=depth)
            .map(|d| self.k_infty(cat, pi, d).map(|f| f.len()))
            .collect()
    }

    pub fn to_restriction_structure(&self, cat: &TraceCategory) -> RestrictionStructure {
        RestrictionStructure {
            objects: cat
                .objects
                .iter()
                .map(|o| (o.clone(), self.fibre(o).iter().cloned().collect()))
                .collect(),
            arrows: cat
                .generators
                .iter()
                .map(|g| {
                    let f = self.restrictions.get(&g.name).cloned().unwrap_or_default();
                    (g.name.clone(), (g.target.clone(), g.source.clone(), f))
                })
                .collect(),
        }
    }

    pub fn from_restriction_structure(r: &RestrictionStructure) -> Presheaf {
        Presheaf {
            fibres: r
                .objects
                .iter()
                .filter(|(_, xs)| !xs.is_empty())
                .map(|(o, xs)| (o.clone(), xs.iter().cloned().collect()))
                .collect(),
            restrictions: r
                .arrows
                .iter()
                .map(|(n, (_, _, f))| (n.clone(), f.clone()))
                .collect(),
            composites: BTreeMap::new(),
        }
    }

    /// Converts to restriction-structure form and back, requiring the
    /// round trip to preserve fibres, restriction maps and functoriality.
    pub fn restriction_equivalence_check(&self, cat: &TraceCategory) -> Result<(), ModelError> {
        let r = self.to_restriction_structure(cat);
        let back = Presheaf::from_restriction_structure(&r);
        for o in &cat.objects {
            let (mut a, mut b) = (self.fibre(o).to_vec(), back.fibre(o).to_vec());
            a.sort();
            b.sort();
            if a != b {
                return Err(ModelError::Structure(format!(
                    "fibre over {o} changed in the round trip"
                )));
            }
        }
        for g in &cat.generators {
            if self.restrictions.get(&g.name) != back.restrictions.get(&g.name) {
                return Err(ModelError::Structure(format!(
                    "restriction along {} changed",
                    g.name
                )));
            }
        }
        if back.to_restriction_structure(cat) != r {
            return Err(ModelError::Structure(
                "restriction structure is not a fixed point".into(),
            ));
        }
        if self.composites.is_empty()
            && back.check_functor_laws(cat).is_ok() != self.check_functor_laws(cat).is_ok()
        {
            return Err(ModelError::Structure(
                "functoriality changed in the round trip".into(),
            ));
        }
        Ok(())
    }
}

/// The other side of the presheaf/restriction equivalence: sets over
/// objects and, per arrow `(from, to, map)`, a map from the extended
/// object's set to the base object's set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RestrictionStructure {
    pub objects: BTreeMap<String, BTreeSet<String>>,
    pub arrows: BTreeMap<String, (String, String, Function)>,
}

/// Two objects `tau -m-> tau'` with `K(tau) = {0}`, `K(tau') = {0, 1}`
/// and `K(m)` constantly `0`: knowledge may grow along an extension.
pub fn enrichment_example() -> (TraceCategory, Presheaf) {
    let cat = TraceCategory::new(
        vec!["tau".into(), "tau'".into()],
        vec![Generator {
            name: "m".into(),
            source: "tau".into(),
            target: "tau'".into(),
            label: "e".into(),
        }],
        DEFAULT_MORPHISM_BOUND,
    )
    .expect("well-formed");
    let k = Presheaf {
        fibres: BTreeMap::from([
            ("tau".into(), vec!["0".into()]),
            ("tau'".into(), vec!["0".into(), "1".into()]),
        ]),
        restrictions: BTreeMap::from([(
            "m".into(),
            Function::from([("0".into(), "0".into()), ("1".into(), "0".into())]),
        )]),
        composites: BTreeMap::new(),
    };
    (cat, k)
}
