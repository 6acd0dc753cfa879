//! Two models with the same Kripke skeleton that a knowledge formula
//! tells apart while no μ-formula can.

use std::collections::BTreeMap;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::category::{Function, Presheaf};
use super::eval::Evaluator;
use super::instance::{SetModelInstance, Skeleton, KNOWLEDGE};
use super::ModelError;
use crate::mu::gen::random_closed_formula;
use crate::mu::mc_mu;
use crate::normalize::Env;
use crate::parser::{parse_term, pretty_print};

/// The leaf trace on which the two knowledge presheaves differ.
pub const TAU0: &str = "s0.a.s1.c.s1";
pub const PHI_SOURCE: &str = "exists (k : K_f(step(step(nil(s0), a, s1), c, s1))), top";
pub const SAMPLE_SIZE: usize = 200;
pub const SAMPLE_MAX_FORMULA: usize = 6;
const SAMPLE_SEED: u64 = 0x5e9a;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeparationReport {
    pub underlying_equal: bool,
    pub phi: String,
    pub phi_m1: bool,
    pub phi_m2: bool,
    pub tau0_failed_in_m1: bool,
    pub sampled: usize,
    pub agreeing: usize,
}

impl SeparationReport {
    /// All three clauses: equal skeletons, Φ separates, μ-formulas agree.
    pub fn holds(&self) -> bool {
        self.underlying_equal && !self.phi_m1 && self.phi_m2 && self.agreeing == self.sampled
    }
}

impl fmt::Display for SeparationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "underlying_equal: {}",
            if self.underlying_equal { "yes" } else { "no" }
        )?;
        writeln!(f, "phi: M1={} M2={}", self.phi_m1, self.phi_m2)?;
        write!(f, "sampled μ-agreement: {}/{}", self.agreeing, self.sampled)
    }
}

fn skeleton() -> Skeleton {
    let step = |a: &str, e: &str, b: &str| (a.to_string(), e.to_string(), b.to_string());
    Skeleton {
        states: vec!["s0".into(), "s1".into(), "s2".into()],
        steps: vec![
            step("s0", "a", "s1"),
            step("s0", "b", "s2"),
            step("s1", "c", "s1"),
            step("s2", "d", "s2"),
        ],
        valuation: BTreeMap::from([
            ("p".into(), vec!["s1".into()]),
            ("q".into(), vec!["s2".into()]),
        ]),
    }
}

fn instance(tau0_inhabited: bool) -> Result<SetModelInstance, ModelError> {
    let sk = skeleton();
    let cat = super::category::TraceCategory::from_skeleton(
        &sk.states,
        &sk.steps,
        2,
        super::DEFAULT_MORPHISM_BOUND,
    )?;
    let star = || vec!["*".to_string()];
    let mut k = Presheaf::default();
    for o in &cat.objects {
        let fibre = if o == TAU0 && !tau0_inhabited {
            vec![]
        } else {
            star()
        };
        k.fibres.insert(o.clone(), fibre);
    }
    for g in &cat.generators {
        let f: Function = k
            .fibre(&g.target)
            .iter()
            .map(|x| (x.clone(), "*".to_string()))
            .collect();
        k.restrictions.insert(g.name.clone(), f);
    }
    SetModelInstance::new(
        sk,
        2,
        super::DEFAULT_MORPHISM_BOUND,
        BTreeMap::from([(KNOWLEDGE.to_string(), k)]),
        BTreeMap::new(),
        BTreeMap::new(),
        Some("s0".into()),
    )
}

/// Builds M1 (`K_f(τ0) = ∅`) and M2 (`K_f(τ0) = {*}`) and checks the
/// separation clauses.
pub fn separation_demo(
) -> Result<(SetModelInstance, SetModelInstance, SeparationReport), ModelError> {
    let (m1, m2) = (instance(false)?, instance(true)?);
    let phi = parse_term(PHI_SOURCE).map_err(|e| ModelError::Structure(e.to_string()))?;
    let env = Env::new();
    let truth = |m: &SetModelInstance| -> Result<bool, ModelError> {
        let mut ev = Evaluator::new(m, &env);
        let v = ev.eval_closed(&phi)?;
        ev.holds(&v)
            .ok_or_else(|| ModelError::Structure("Φ is not a proposition".into()))
    };
    let (k1, k2) = (m1.forget().kripke(), m2.forget().kripke());
    let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED);
    let mut agreeing = 0;
    for _ in 0..SAMPLE_SIZE {
        let f = random_closed_formula(&mut rng, SAMPLE_MAX_FORMULA, &["p", "q"]);
        if mc_mu(&k1, &f)? == mc_mu(&k2, &f)? {
            agreeing += 1;
        }
    }
    let report = SeparationReport {
        underlying_equal: m1.forget() == m2.forget(),
        phi: pretty_print(&phi),
        phi_m1: truth(&m1)?,
        phi_m2: truth(&m2)?,
        tau0_failed_in_m1: m1.knowledge().expect("K_f").is_failed(&m1.category, TAU0)?,
        sampled: SAMPLE_SIZE,
        agreeing,
    };
    Ok((m1, m2, report))
}
