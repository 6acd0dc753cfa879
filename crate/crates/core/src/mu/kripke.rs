use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::MuError;

/// Sets of states as indices into [`KripkeStructure::states`].
pub type StateSet = BTreeSet<usize>;

/// `M = (S, R, V)` with named states.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KripkeStructure {
    pub states: Vec<String>,
    pub transitions: Vec<(String, String)>,
    pub valuation: BTreeMap<String, Vec<String>>,
}

impl KripkeStructure {
    pub fn new(
        states: Vec<String>,
        transitions: Vec<(String, String)>,
        valuation: BTreeMap<String, Vec<String>>,
    ) -> Result<Self, MuError> {
        let k = KripkeStructure {
            states,
            transitions,
            valuation,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<(), MuError> {
        let mut seen = BTreeSet::new();
        for s in &self.states {
            if !seen.insert(s) {
                return Err(MuError::Structure(format!("state `{s}` is listed twice")));
            }
        }
        let known = |s: &String, what: &str| {
            if seen.contains(s) {
                Ok(())
            } else {
                Err(MuError::Structure(format!(
                    "{what} mentions undeclared state `{s}`"
                )))
            }
        };
        for (a, b) in &self.transitions {
            known(a, "a transition")?;
            known(b, "a transition")?;
        }
        for (p, members) in &self.valuation {
            for s in members {
                known(s, &format!("valuation of `{p}`"))?;
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, MuError> {
        let k: KripkeStructure =
            serde_json::from_str(text).map_err(|e| MuError::Structure(e.to_string()))?;
        k.validate()?;
        Ok(k)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    pub fn all(&self) -> StateSet {
        (0..self.states.len()).collect()
    }

    pub fn successors(&self) -> Vec<StateSet> {
        let mut out = vec![StateSet::new(); self.states.len()];
        for (a, b) in &self.transitions {
            if let (Some(i), Some(j)) = (self.index_of(a), self.index_of(b)) {
                out[i].insert(j);
            }
        }
        out
    }

    pub fn atom(&self, p: &str) -> StateSet {
        self.valuation
            .get(p)
            .map(|m| m.iter().filter_map(|s| self.index_of(s)).collect())
            .unwrap_or_default()
    }

    pub fn holds(&self, p: &str, state: usize) -> bool {
        self.valuation
            .get(p)
            .is_some_and(|m| m.iter().any(|s| *s == self.states[state]))
    }

    /// Every state has at least one successor.
    pub fn is_total(&self) -> bool {
        self.successors().iter().all(|s| !s.is_empty())
    }

    /// Sorted state names of a set.
    pub fn names(&self, set: &StateSet) -> Vec<String> {
        let mut v: Vec<String> = set.iter().map(|&i| self.states[i].clone()).collect();
        v.sort();
        v
    }

    /// `{ s | some successor of s is in x }`.
    pub fn pre_exists(&self, succ: &[StateSet], x: &StateSet) -> StateSet {
        (0..self.states.len())
            .filter(|&i| succ[i].iter().any(|j| x.contains(j)))
            .collect()
    }

    /// `{ s | every successor of s is in x }`.
    pub fn pre_forall(&self, succ: &[StateSet], x: &StateSet) -> StateSet {
        (0..self.states.len())
            .filter(|&i| succ[i].iter().all(|j| x.contains(j)))
            .collect()
    }
}

/// Iteration counters for the Kleene engine.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FixpointStats {
    /// Fixpoint computations started (nested ones are recomputed each time).
    pub fixpoints: usize,
    /// Largest number of strictly changing iterations in one computation.
    pub max_iterations: usize,
    pub total_iterations: usize,
}

impl FixpointStats {
    fn record(&mut self, iterations: usize) {
        self.fixpoints += 1;
        self.max_iterations = self.max_iterations.max(iterations);
        self.total_iterations += iterations;
    }
}

/// Least fixpoint by iteration from the empty set. Each step must grow.
pub fn lfp(
    stats: &mut FixpointStats,
    mut f: impl FnMut(&StateSet) -> Result<StateSet, MuError>,
) -> Result<StateSet, MuError> {
    let mut cur = StateSet::new();
    let mut iterations = 0;
    loop {
        let next = f(&cur)?;
        if next == cur {
            stats.record(iterations);
            return Ok(cur);
        }
        if !cur.is_subset(&next) {
            return Err(MuError::NonMonotone);
        }
        cur = next;
        iterations += 1;
    }
}

/// Greatest fixpoint by iteration from `top`. Each step must shrink.
pub fn gfp(
    stats: &mut FixpointStats,
    top: StateSet,
    mut f: impl FnMut(&StateSet) -> Result<StateSet, MuError>,
) -> Result<StateSet, MuError> {
    let mut cur = top;
    let mut iterations = 0;
    loop {
        let next = f(&cur)?;
        if next == cur {
            stats.record(iterations);
            return Ok(cur);
        }
        if !next.is_subset(&cur) {
            return Err(MuError::NonMonotone);
        }
        cur = next;
        iterations += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> KripkeStructure {
        KripkeStructure::from_json(
            r#"{"states":["s0","s1"],"transitions":[["s0","s1"]],"valuation":{"p":["s1"]}}"#,
        )
        .unwrap()
    }

    #[test]
    fn json_round_trip() {
        let k = chain();
        let text = k.to_json();
        let back = KripkeStructure::from_json(&text).unwrap();
        assert_eq!(back, k);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn validation() {
        let bad = r#"{"states":["s0"],"transitions":[["s0","s9"]],"valuation":{}}"#;
        assert!(KripkeStructure::from_json(bad).is_err());
        let dup = r#"{"states":["s0","s0"],"transitions":[],"valuation":{}}"#;
        assert!(KripkeStructure::from_json(dup).is_err());
        assert!(!chain().is_total());
    }

    #[test]
    fn kleene_counts() {
        let k = chain();
        let succ = k.successors();
        let p = k.atom("p");
        let mut stats = FixpointStats::default();
        let reach = lfp(&mut stats, |x| {
            Ok(p.union(&k.pre_exists(&succ, x)).copied().collect())
        })
        .unwrap();
        assert_eq!(reach, k.all());
        assert_eq!(stats.max_iterations, 2);
        let nothing = gfp(&mut stats, k.all(), |x| Ok(k.pre_exists(&succ, x))).unwrap();
        assert!(nothing.is_empty());
    }
}
