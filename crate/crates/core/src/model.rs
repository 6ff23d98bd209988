//! Finite countermodels for Hintikka formulas.
//!
//! Names are interpreted as finite sets of positive integers, and `εab` holds
//! when the value of `a` is a singleton `{p}` with `p` in the value of `b`.
//! Chain members share a singleton, a tail collects the numbers of every
//! chain ending at it plus one fresh number, and everything else is empty.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::parts::{enumerate_parts, Polarity};
use crate::syntax::{variables, Formula, NameVar};
use crate::tableau::is_hintikka;

/// Extension of a name: a finite set of positive integers.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NameValue(BTreeSet<u32>);

impl NameValue {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn singleton(n: u32) -> Self {
        NameValue(BTreeSet::from([n]))
    }

    /// Value whose members are the set bits of `mask` (bit `i` is `i + 1`).
    pub fn from_mask(mask: u32) -> Self {
        NameValue(
            (0..32)
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| i + 1)
                .collect(),
        )
    }

    pub fn elements(&self) -> &BTreeSet<u32> {
        &self.0
    }

    pub fn contains(&self, n: u32) -> bool {
        self.0.contains(&n)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The element of a unit set.
    pub fn unit(&self) -> Option<u32> {
        if self.0.len() == 1 {
            self.0.iter().next().copied()
        } else {
            None
        }
    }
}

impl FromIterator<u32> for NameValue {
    fn from_iter<I: IntoIterator<Item = u32>>(items: I) -> Self {
        NameValue(items.into_iter().collect())
    }
}

impl fmt::Display for NameValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("∅");
        }
        let items: Vec<String> = self.0.iter().map(|n| n.to_string()).collect();
        write!(f, "{{{}}}", items.join(", "))
    }
}

/// Truth of `εab` for the given extensions.
pub fn eps_holds(a: &NameValue, b: &NameValue) -> bool {
    a.unit().is_some_and(|p| b.contains(p))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct L1Model {
    /// Values of named variables; any variable not listed denotes `∅`.
    pub assignment: BTreeMap<NameVar, NameValue>,
    /// Values in the domain that no variable denotes.
    pub anonymous: BTreeSet<NameValue>,
    pub universe: BTreeSet<u32>,
}

impl L1Model {
    /// Builds a model from an assignment; the universe is every number used,
    /// or `{1}` when nothing is used.
    pub fn from_assignment(assignment: BTreeMap<NameVar, NameValue>) -> Self {
        let mut m = L1Model {
            assignment,
            anonymous: BTreeSet::new(),
            universe: BTreeSet::new(),
        };
        m.recompute_universe();
        m
    }

    fn recompute_universe(&mut self) {
        let mut u: BTreeSet<u32> = self
            .assignment
            .values()
            .chain(&self.anonymous)
            .flat_map(|v| v.elements().iter().copied())
            .collect();
        if u.is_empty() {
            u.insert(1);
        }
        self.universe = u;
    }

    pub fn value(&self, v: &NameVar) -> NameValue {
        self.assignment.get(v).cloned().unwrap_or_default()
    }

    /// Distinct values in the domain. `∅` is always present since unlisted
    /// variables denote it.
    pub fn domain_values(&self) -> BTreeSet<NameValue> {
        let mut out: BTreeSet<NameValue> = self.assignment.values().cloned().collect();
        out.extend(self.anonymous.iter().cloned());
        out.insert(NameValue::empty());
        out
    }

    pub fn to_json(&self) -> ModelJson {
        ModelJson {
            assignment: self
                .assignment
                .iter()
                .map(|(k, v)| {
                    (
                        k.as_str().to_string(),
                        v.elements().iter().copied().collect(),
                    )
                })
                .collect(),
            anonymous: self
                .anonymous
                .iter()
                .map(|v| v.elements().iter().copied().collect())
                .collect(),
            universe: self.universe.iter().copied().collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelJson {
    pub assignment: BTreeMap<String, Vec<u32>>,
    pub anonymous: Vec<Vec<u32>>,
    pub universe: Vec<u32>,
}

pub fn eval_atom(m: &L1Model, a: &NameVar, b: &NameVar) -> bool {
    eps_holds(&m.value(a), &m.value(b))
}

pub fn eval(m: &L1Model, f: &Formula) -> bool {
    match f {
        Formula::Eps(a, b) => eval_atom(m, a, b),
        Formula::Or(l, r) => eval(m, l) || eval(m, r),
        Formula::Not(a) => !eval(m, a),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("formula is not a Hintikka formula")]
    NotHintikka,
    #[error("tail {0} is also a chain member")]
    TailInChain(NameVar),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tail {
    pub var: NameVar,
    /// Indices into [`ChainAnalysis::chains`] of the chains ending at this tail.
    pub chains: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainAnalysis {
    /// Chains in order of their first member's first occurrence.
    pub chains: Vec<Vec<NameVar>>,
    /// Tails in first-occurrence order.
    pub tails: Vec<Tail>,
    pub others: Vec<NameVar>,
}

pub fn analyze(h: &Formula) -> Result<ChainAnalysis, ModelError> {
    if !is_hintikka(h) {
        return Err(ModelError::NotHintikka);
    }
    let neg: BTreeSet<(NameVar, NameVar)> = enumerate_parts(h)
        .into_iter()
        .filter(|p| p.polarity() == Polarity::Negative)
        .filter_map(|p| match p.formula {
            Formula::Eps(a, b) => Some((a.clone(), b.clone())),
            _ => None,
        })
        .collect();
    let has = |a: &NameVar, b: &NameVar| neg.contains(&(a.clone(), b.clone()));
    let vars = variables(h);

    let mut chains: Vec<Vec<NameVar>> = Vec::new();
    let mut chain_of: BTreeMap<NameVar, usize> = BTreeMap::new();
    for v in vars.iter().filter(|v| has(v, v)) {
        let found = chains.iter().position(|c| has(&c[0], v) && has(v, &c[0]));
        let idx = found.unwrap_or_else(|| {
            chains.push(Vec::new());
            chains.len() - 1
        });
        chains[idx].push(v.clone());
        chain_of.insert(v.clone(), idx);
    }

    let mut tails: Vec<Tail> = Vec::new();
    for b in &vars {
        let mut ends: BTreeSet<usize> = BTreeSet::new();
        for (ci, chain) in chains.iter().enumerate() {
            if chain.contains(b) {
                continue;
            }
            if chain.iter().any(|a| has(a, b)) {
                ends.insert(ci);
            }
        }
        if ends.is_empty() {
            continue;
        }
        if chain_of.contains_key(b) {
            return Err(ModelError::TailInChain(b.clone()));
        }
        tails.push(Tail {
            var: b.clone(),
            chains: ends.into_iter().collect(),
        });
    }

    let others = vars
        .iter()
        .filter(|v| !chain_of.contains_key(v) && !tails.iter().any(|t| &t.var == *v))
        .cloned()
        .collect();
    Ok(ChainAnalysis {
        chains,
        tails,
        others,
    })
}

/// Countermodel for a Hintikka formula.
///
/// Chain `i` (counting from 1) gets `{i}`. Fresh numbers for tails are handed
/// out chain by chain, and within a chain in the tails' first-occurrence
/// order, so a tail shared by several chains is numbered with the first.
pub fn build_model(h: &Formula) -> Result<L1Model, ModelError> {
    let analysis = analyze(h)?;
    let mut assignment = BTreeMap::new();
    for (i, chain) in analysis.chains.iter().enumerate() {
        for v in chain {
            assignment.insert(v.clone(), NameValue::singleton(i as u32 + 1));
        }
    }
    let mut next = analysis.chains.len() as u32 + 1;
    let mut fresh: BTreeMap<&NameVar, u32> = BTreeMap::new();
    for ci in 0..analysis.chains.len() {
        for tail in analysis.tails.iter().filter(|t| t.chains.contains(&ci)) {
            fresh.entry(&tail.var).or_insert_with(|| {
                next += 1;
                next - 1
            });
        }
    }
    for tail in &analysis.tails {
        let mut value: BTreeSet<u32> = tail.chains.iter().map(|&c| c as u32 + 1).collect();
        value.insert(fresh[&tail.var]);
        assignment.insert(tail.var.clone(), NameValue(value));
    }
    for v in &analysis.others {
        assignment.insert(v.clone(), NameValue::empty());
    }
    Ok(L1Model::from_assignment(assignment))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AxiomViolation {
    pub axiom: &'static str,
    /// Values substituted for the schema's variables, in order.
    pub values: Vec<NameValue>,
}

impl fmt::Display for AxiomViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vals: Vec<String> = self.values.iter().map(|v| v.to_string()).collect();
        write!(f, "axiom {} fails at ({})", self.axiom, vals.join(", "))
    }
}

/// Checks the three L1 axioms for every choice of domain values:
/// `reflexivity` (εab ⊃ εaa), `transitivity` (εab ∧ εbc ⊃ εac) and
/// `symmetry` (εab ∧ εbb ⊃ εba).
pub fn audit_l1_axioms(m: &L1Model) -> Vec<AxiomViolation> {
    let dom: Vec<NameValue> = m.domain_values().into_iter().collect();
    let e = eps_holds;
    let mut out = Vec::new();
    for a in &dom {
        for b in &dom {
            if e(a, b) && !e(a, a) {
                out.push(AxiomViolation {
                    axiom: "reflexivity",
                    values: vec![a.clone(), b.clone()],
                });
            }
            if e(a, b) && e(b, b) && !e(b, a) {
                out.push(AxiomViolation {
                    axiom: "symmetry",
                    values: vec![a.clone(), b.clone()],
                });
            }
            for c in &dom {
                if e(a, b) && e(b, c) && !e(a, c) {
                    out.push(AxiomViolation {
                        axiom: "transitivity",
                        values: vec![a.clone(), b.clone(), c.clone()],
                    });
                }
            }
        }
    }
    out
}

/// Domain values that are not atoms yet have exactly one atom under them.
pub fn singular_names(m: &L1Model) -> Vec<NameValue> {
    let dom = m.domain_values();
    dom.iter()
        .filter(|v| !eps_holds(v, v) && dom.iter().filter(|u| eps_holds(u, v)).count() == 1)
        .cloned()
        .collect()
}

/// Adds anonymous unit sets until no singular name is left. Variable
/// assignments are untouched, so formulas keep their truth values.
#[allow(non_snake_case)]
pub fn upgrade_to_L(m: &L1Model) -> L1Model {
    let mut out = m.clone();
    loop {
        let singular = singular_names(&out);
        if singular.is_empty() {
            break;
        }
        let dom = out.domain_values();
        for v in singular {
            for &n in v.elements() {
                let unit = NameValue::singleton(n);
                if !dom.contains(&unit) {
                    out.anonymous.insert(unit);
                }
            }
        }
    }
    out.recompute_universe();
    out
}

/// Checks the ontology axiom, εab ≡ ∃x(εxa ∧ εxb) ∧ ∀x∀y(εxa ∧ εya ⊃ εxy),
/// for every pair of domain values, with the quantifiers
/// ranging over the domain.
#[allow(non_snake_case)]
pub fn audit_L_axiom(m: &L1Model) -> Vec<AxiomViolation> {
    let dom: Vec<NameValue> = m.domain_values().into_iter().collect();
    let e = eps_holds;
    let mut out = Vec::new();
    for a in &dom {
        let unique = dom
            .iter()
            .all(|x| dom.iter().all(|y| !(e(x, a) && e(y, a)) || e(x, y)));
        for b in &dom {
            let exists = dom.iter().any(|x| e(x, a) && e(x, b));
            if e(a, b) != (exists && unique) {
                out.push(AxiomViolation {
                    axiom: "ontology",
                    values: vec![a.clone(), b.clone()],
                });
            }
        }
    }
    out
}
