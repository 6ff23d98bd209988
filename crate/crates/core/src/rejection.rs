//! Axiomatic rejection.
//!
//! Two Hilbert-style systems derive non-theorems:
//!
//! * `Har`: rejected axioms `εa0a0` and `∼εa0a0` for the reserved variable
//!   `a0`, reversed modus ponens, reversed substitution, and Kobayashi's rule
//!   appending an atom to a rejected literal disjunction.
//! * `Hl1`: every Hintikka formula is a rejected axiom, with reversed modus
//!   ponens as the only rule.
//!
//! Accepted premises (`thesis` steps) are certified by the tableau engine.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::parts::{enumerate_parts, flatten, Polarity};
use crate::syntax::{
    desugar, parse_internal, substitute, variables, Formula, NameVar, Substitution,
};
use crate::tableau::{decide, decide_kind, is_hintikka, Mode, Verdict, VerdictKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum System {
    Har,
    Hl1,
}

impl System {
    pub fn name(self) -> &'static str {
        match self {
            System::Har => "har",
            System::Hl1 => "hl1",
        }
    }
}

impl FromStr for System {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "har" => Ok(System::Har),
            "hl1" => Ok(System::Hl1),
            other => Err(format!("unknown system `{other}` (expected har or hl1)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Judgment {
    Accepted(Formula),
    Rejected(Formula),
}

impl Judgment {
    pub fn formula(&self) -> &Formula {
        match self {
            Judgment::Accepted(f) | Judgment::Rejected(f) => f,
        }
    }

    pub fn sign(&self) -> &'static str {
        match self {
            Judgment::Accepted(_) => "+",
            Judgment::Rejected(_) => "-",
        }
    }
}

impl fmt::Display for Judgment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Judgment::Accepted(x) => write!(f, "⊢ {x}"),
            Judgment::Rejected(x) => write!(f, "⊣ {x}"),
        }
    }
}

/// How a step is justified. Premise indices are 1-based step numbers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Justification {
    /// Accepted formula, certified by a closed tableau.
    Thesis,
    /// `⊣ εa0a0`.
    AxiomEps,
    /// `⊣ ∼εa0a0`.
    AxiomNegEps,
    /// From `⊢ A ⊃ B` and `⊣ B`, infer `⊣ A`.
    ModusTollens { accepted: usize, rejected: usize },
    /// From `⊣ A`, infer `⊣ B` when `A` is `B` under the substitution.
    Substitution { premise: usize, map: Substitution },
    /// From a rejected Hintikka literal disjunction `⊣ A`, infer `⊣ A ∨ εab`
    /// when `εab` is not a negative part of `A`.
    AppendAtom { premise: usize, atom: Formula },
    /// `⊣ H` for a Hintikka formula `H`.
    HintikkaAxiom,
    /// Reversed modus ponens of the Hintikka-axiom system.
    HintikkaModusTollens { accepted: usize, rejected: usize },
}

impl Justification {
    pub fn rule_name(&self) -> &'static str {
        match self {
            Justification::Thesis => "thesis",
            Justification::AxiomEps => "reject-eps",
            Justification::AxiomNegEps => "reject-neg-eps",
            Justification::ModusTollens { .. } => "tollens",
            Justification::Substitution { .. } => "substitution",
            Justification::AppendAtom { .. } => "append",
            Justification::HintikkaAxiom => "hintikka-axiom",
            Justification::HintikkaModusTollens { .. } => "hintikka-tollens",
        }
    }

    pub fn premises(&self) -> Vec<usize> {
        match self {
            Justification::ModusTollens { accepted, rejected }
            | Justification::HintikkaModusTollens { accepted, rejected } => {
                vec![*accepted, *rejected]
            }
            Justification::Substitution { premise, .. }
            | Justification::AppendAtom { premise, .. } => {
                vec![*premise]
            }
            _ => Vec::new(),
        }
    }

    /// The system the rule belongs to; `None` for rules shared by both.
    pub fn system(&self) -> Option<System> {
        match self {
            Justification::Thesis => None,
            Justification::HintikkaAxiom | Justification::HintikkaModusTollens { .. } => {
                Some(System::Hl1)
            }
            _ => Some(System::Har),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RejectionStep {
    pub index: usize,
    pub judgment: Judgment,
    pub rule: Justification,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RejectionDerivation {
    pub system: System,
    pub steps: Vec<RejectionStep>,
    pub goal: Formula,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("step {step}: {reason}")]
pub struct CheckFailure {
    /// 1-based index of the first offending step; 0 for a derivation-level
    /// problem such as an empty step list.
    pub step: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RejectionError {
    #[error("formula is not a Hintikka formula")]
    NotHintikka,
    #[error("formula is provable and cannot be rejected")]
    IsProvable,
}

/// Validates every step and the goal.
pub fn check_derivation(d: &RejectionDerivation) -> Result<(), CheckFailure> {
    let Some(last) = d.steps.last() else {
        return Err(CheckFailure {
            step: 0,
            reason: "derivation has no steps".into(),
        });
    };
    let mut thesis_cache: HashSet<&Formula> = HashSet::new();
    for (pos, step) in d.steps.iter().enumerate() {
        check_step(d, pos, step, &mut thesis_cache).map_err(|reason| CheckFailure {
            step: pos + 1,
            reason,
        })?;
    }
    match &last.judgment {
        Judgment::Rejected(g) if g == &d.goal => Ok(()),
        other => Err(CheckFailure {
            step: d.steps.len(),
            reason: format!("last step {other} does not reject the goal {}", d.goal),
        }),
    }
}

fn check_step<'a>(
    d: &'a RejectionDerivation,
    pos: usize,
    step: &'a RejectionStep,
    thesis_cache: &mut HashSet<&'a Formula>,
) -> Result<(), String> {
    if step.index != pos + 1 {
        return Err(format!(
            "step numbered {} at position {}",
            step.index,
            pos + 1
        ));
    }
    if let Some(sys) = step.rule.system() {
        if sys != d.system {
            return Err(format!(
                "rule {} does not belong to system {}",
                step.rule.rule_name(),
                d.system.name()
            ));
        }
    }
    let premise = |i: usize| -> Result<&Judgment, String> {
        if i == 0 || i > pos {
            return Err(format!("premise {i} does not precede step {}", pos + 1));
        }
        Ok(&d.steps[i - 1].judgment)
    };
    let rejected = |j: &'a Judgment| -> Result<&'a Formula, String> {
        match j {
            Judgment::Rejected(f) => Ok(f),
            other => Err(format!("premise {other} is not a rejection")),
        }
    };
    let designated = NameVar::designated();
    let axiom_eps = Formula::eps(&designated, &designated);

    let concl = match (&step.rule, &step.judgment) {
        (Justification::Thesis, Judgment::Accepted(f)) => {
            if !thesis_cache.contains(f) {
                if decide_kind(f, Mode::Eps3b) != VerdictKind::Provable {
                    return Err(format!("{f} is not provable"));
                }
                thesis_cache.insert(f);
            }
            return Ok(());
        }
        (Justification::Thesis, _) => return Err("a thesis must be an accepted judgment".into()),
        (_, Judgment::Accepted(_)) => {
            return Err(format!(
                "rule {} concludes a rejection",
                step.rule.rule_name()
            ))
        }
        (_, Judgment::Rejected(f)) => f,
    };

    match &step.rule {
        Justification::Thesis => unreachable!(),
        Justification::AxiomEps => {
            if concl != &axiom_eps {
                return Err(format!("axiom reject-eps rejects {axiom_eps}, not {concl}"));
            }
        }
        Justification::AxiomNegEps => {
            let expected = Formula::not(axiom_eps);
            if concl != &expected {
                return Err(format!(
                    "axiom reject-neg-eps rejects {expected}, not {concl}"
                ));
            }
        }
        Justification::ModusTollens {
            accepted,
            rejected: r,
        }
        | Justification::HintikkaModusTollens {
            accepted,
            rejected: r,
        } => {
            let imp = match premise(*accepted)? {
                Judgment::Accepted(f) => f,
                other => return Err(format!("first premise {other} is not accepted")),
            };
            let b = rejected(premise(*r)?)?;
            let expected = Formula::implies(concl.clone(), b.clone());
            if imp != &expected {
                return Err(format!("accepted premise {imp} is not {expected}"));
            }
        }
        Justification::Substitution { premise: p, map } => {
            let a = rejected(premise(*p)?)?;
            if map.is_empty() {
                return Err("empty substitution".into());
            }
            let image = substitute(concl, map);
            if &image != a {
                return Err(format!("substituting into {concl} gives {image}, not {a}"));
            }
        }
        Justification::AppendAtom { premise: p, atom } => {
            let a = rejected(premise(*p)?)?;
            if !atom.is_atom() {
                return Err(format!("appended formula {atom} is not atomic"));
            }
            if !a.disjuncts().iter().all(|x| x.is_literal()) {
                return Err(format!("premise {a} is not a disjunction of literals"));
            }
            if !is_hintikka(a) {
                return Err(format!("premise {a} is not a Hintikka formula"));
            }
            let negative = enumerate_parts(a)
                .iter()
                .any(|p| p.polarity() == Polarity::Negative && p.formula == atom);
            if negative {
                return Err(format!("{atom} occurs negated in the premise"));
            }
            let expected = Formula::or(a.clone(), atom.clone());
            if concl != &expected {
                return Err(format!("conclusion should be {expected}"));
            }
        }
        Justification::HintikkaAxiom => {
            if !is_hintikka(concl) {
                return Err(format!("{concl} is not a Hintikka formula"));
            }
        }
    }
    for i in step.rule.premises() {
        premise(i)?;
    }
    Ok(())
}

struct Builder {
    system: System,
    steps: Vec<RejectionStep>,
}

impl Builder {
    fn new(system: System) -> Self {
        Builder {
            system,
            steps: Vec::new(),
        }
    }

    fn push(&mut self, judgment: Judgment, rule: Justification) -> usize {
        let index = self.steps.len() + 1;
        self.steps.push(RejectionStep {
            index,
            judgment,
            rule,
        });
        index
    }

    fn formula(&self, i: usize) -> &Formula {
        self.steps[i - 1].judgment.formula()
    }

    /// Given `⊣ B` at step `b`, rejects `a` through `⊢ a ⊃ B`.
    fn tollens(&mut self, a: Formula, b: usize) -> usize {
        if &a == self.formula(b) {
            return b;
        }
        let thesis = Formula::implies(a.clone(), self.formula(b).clone());
        let t = self.push(Judgment::Accepted(thesis), Justification::Thesis);
        let rule = match self.system {
            System::Har => Justification::ModusTollens {
                accepted: t,
                rejected: b,
            },
            System::Hl1 => Justification::HintikkaModusTollens {
                accepted: t,
                rejected: b,
            },
        };
        self.push(Judgment::Rejected(a), rule)
    }

    /// Given `⊣ Bσ` at step `p`, rejects `b` by reversed substitution.
    fn unsubstitute(&mut self, b: Formula, map: Substitution, p: usize) -> usize {
        if &b == self.formula(p) {
            return p;
        }
        self.push(
            Judgment::Rejected(b),
            Justification::Substitution { premise: p, map },
        )
    }

    fn finish(self) -> RejectionDerivation {
        let goal = self
            .steps
            .last()
            .expect("at least one step")
            .judgment
            .formula()
            .clone();
        RejectionDerivation {
            system: self.system,
            steps: self.steps,
            goal,
        }
    }

    /// Rejects a Hintikka formula in HAR; returns the step concluding it.
    fn hintikka(&mut self, h: &Formula) -> usize {
        let flat = flatten(h);
        let mut current = Formula::disjoin(flat.iter().cloned()).expect("non-empty");

        // The negated disjunctions are dropped largest first, so the negated
        // component each one relies on is still present when it goes.
        let mut order: Vec<usize> = (0..flat.len()).filter(|&i| !flat[i].is_literal()).collect();
        order.sort_by_key(|&i| std::cmp::Reverse(flat[i].size()));
        let mut chain = vec![current.clone()];
        let mut kept: Vec<bool> = vec![true; flat.len()];
        for i in order {
            kept[i] = false;
            let rest: Vec<Formula> = flat
                .iter()
                .zip(&kept)
                .filter(|(_, k)| **k)
                .map(|(f, _)| f.clone())
                .collect();
            current = Formula::disjoin(rest).expect("a literal always remains");
            chain.push(current.clone());
        }

        let mut at = self.literal_base(&current);
        for pair in chain.windows(2).rev() {
            at = self.tollens(pair[0].clone(), at);
        }
        self.tollens(h.clone(), at)
    }

    /// Rejects a Hintikka disjunction of literals.
    fn literal_base(&mut self, c: &Formula) -> usize {
        let lits: Vec<Formula> = c.disjuncts().into_iter().cloned().collect();
        let negatives: Vec<Formula> = lits.iter().filter(|l| !l.is_atom()).cloned().collect();
        if negatives.is_empty() || negatives.len() == lits.len() {
            let axiom_body = {
                let d = NameVar::designated();
                let atom = Formula::eps(&d, &d);
                if negatives.is_empty() {
                    atom
                } else {
                    Formula::not(atom)
                }
            };
            let map: Substitution = variables(c)
                .into_iter()
                .filter(|v| !v.is_designated())
                .map(|v| (v, NameVar::designated()))
                .collect();
            let collapsed = substitute(c, &map);
            let ax = self.push(
                Judgment::Rejected(axiom_body.clone()),
                if negatives.is_empty() {
                    Justification::AxiomEps
                } else {
                    Justification::AxiomNegEps
                },
            );
            let at = self.tollens(collapsed, ax);
            return self.unsubstitute(c.clone(), map, at);
        }
        let base = Formula::disjoin(negatives).expect("non-empty");
        let mut at = self.literal_base(&base);
        let mut grown = base;
        let mut added: HashSet<Formula> = HashSet::new();
        for atom in lits.iter().filter(|l| l.is_atom()) {
            if !added.insert(atom.clone()) {
                continue;
            }
            grown = Formula::or(grown, atom.clone());
            at = self.push(
                Judgment::Rejected(grown.clone()),
                Justification::AppendAtom {
                    premise: at,
                    atom: atom.clone(),
                },
            );
        }
        self.tollens(c.clone(), at)
    }
}

/// HAR derivation rejecting a Hintikka formula.
pub fn reject_hintikka(h: &Formula) -> Result<RejectionDerivation, RejectionError> {
    if !is_hintikka(h) {
        return Err(RejectionError::NotHintikka);
    }
    let mut b = Builder::new(System::Har);
    b.hintikka(h);
    Ok(b.finish())
}

fn witness(f: &Formula) -> Result<(Vec<Formula>, Formula), RejectionError> {
    match decide(f) {
        Verdict::Provable(_) => Err(RejectionError::IsProvable),
        Verdict::Rejected {
            tableau,
            witness_branch,
            hintikka,
        } => {
            let branch = tableau
                .branch_formulas(&witness_branch)
                .into_iter()
                .cloned()
                .collect();
            Ok((branch, hintikka))
        }
    }
}

/// Rejects `h` as the witness leaf, then climbs the branch back to the root,
/// each branch formula implying its successor.
fn climb(b: &mut Builder, branch: &[Formula], mut at: usize) {
    for f in branch.iter().rev().skip(1) {
        at = b.tollens(f.clone(), at);
    }
}

/// HAR derivation rejecting a non-provable formula via its open branch.
pub fn reject_formula(f: &Formula) -> Result<RejectionDerivation, RejectionError> {
    let (branch, h) = witness(f)?;
    let mut b = Builder::new(System::Har);
    let at = b.hintikka(&h);
    climb(&mut b, &branch, at);
    Ok(b.finish())
}

/// HL1 derivation: the witness leaf is an axiom.
pub fn reject_formula_hl1(f: &Formula) -> Result<RejectionDerivation, RejectionError> {
    let (branch, h) = witness(f)?;
    let mut b = Builder::new(System::Hl1);
    let at = b.push(Judgment::Rejected(h), Justification::HintikkaAxiom);
    climb(&mut b, &branch, at);
    Ok(b.finish())
}

// ---------------------------------------------------------------------------
// Serialization

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepJson {
    pub index: usize,
    pub judgment: String,
    pub formula: String,
    pub rule: String,
    #[serde(default)]
    pub premises: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub substitution: Option<BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub appended: Option<String>,
}

impl RejectionDerivation {
    pub fn to_json(&self) -> Vec<StepJson> {
        self.steps
            .iter()
            .map(|s| StepJson {
                index: s.index,
                judgment: s.judgment.sign().to_string(),
                formula: s.judgment.formula().to_ascii(),
                rule: s.rule.rule_name().to_string(),
                premises: s.rule.premises(),
                substitution: match &s.rule {
                    Justification::Substitution { map, .. } => Some(
                        map.iter()
                            .map(|(k, v)| (k.as_str().to_string(), v.as_str().to_string()))
                            .collect(),
                    ),
                    _ => None,
                },
                appended: match &s.rule {
                    Justification::AppendAtom { atom, .. } => Some(atom.to_ascii()),
                    _ => None,
                },
            })
            .collect()
    }

    /// Reads a serialized derivation. The system is that of the first rule
    /// specific to one system; the goal is the formula of the last step.
    pub fn from_json(steps: &[StepJson]) -> Result<Self, CheckFailure> {
        let mut out = Vec::with_capacity(steps.len());
        for (pos, s) in steps.iter().enumerate() {
            let fail = |reason: String| CheckFailure {
                step: pos + 1,
                reason,
            };
            let formula = parse_cert_formula(&s.formula).map_err(fail)?;
            let judgment = match s.judgment.as_str() {
                "+" => Judgment::Accepted(formula),
                "-" => Judgment::Rejected(formula),
                other => return Err(fail(format!("unknown judgment `{other}`"))),
            };
            let arity = |n: usize| -> Result<(), CheckFailure> {
                if s.premises.len() == n {
                    Ok(())
                } else {
                    Err(fail(format!(
                        "rule {} takes {n} premise(s), found {}",
                        s.rule,
                        s.premises.len()
                    )))
                }
            };
            let no_extras = |sub: bool, app: bool| -> Result<(), CheckFailure> {
                if s.substitution.is_some() != sub {
                    return Err(fail(format!(
                        "rule {} {} a substitution",
                        s.rule,
                        if sub { "requires" } else { "does not take" }
                    )));
                }
                if s.appended.is_some() != app {
                    return Err(fail(format!(
                        "rule {} {} an appended atom",
                        s.rule,
                        if app { "requires" } else { "does not take" }
                    )));
                }
                Ok(())
            };
            let rule = match s.rule.as_str() {
                "thesis" | "reject-eps" | "reject-neg-eps" | "hintikka-axiom" => {
                    arity(0)?;
                    no_extras(false, false)?;
                    match s.rule.as_str() {
                        "thesis" => Justification::Thesis,
                        "reject-eps" => Justification::AxiomEps,
                        "reject-neg-eps" => Justification::AxiomNegEps,
                        _ => Justification::HintikkaAxiom,
                    }
                }
                "tollens" | "hintikka-tollens" => {
                    arity(2)?;
                    no_extras(false, false)?;
                    let (accepted, rejected) = (s.premises[0], s.premises[1]);
                    if s.rule == "tollens" {
                        Justification::ModusTollens { accepted, rejected }
                    } else {
                        Justification::HintikkaModusTollens { accepted, rejected }
                    }
                }
                "substitution" => {
                    arity(1)?;
                    no_extras(true, false)?;
                    let mut map = Substitution::new();
                    for (k, v) in s.substitution.as_ref().expect("checked") {
                        let k = NameVar::new(k).map_err(|e| fail(e.to_string()))?;
                        let v = NameVar::new(v).map_err(|e| fail(e.to_string()))?;
                        map.insert(k, v);
                    }
                    Justification::Substitution {
                        premise: s.premises[0],
                        map,
                    }
                }
                "append" => {
                    arity(1)?;
                    no_extras(false, true)?;
                    let atom =
                        parse_cert_formula(s.appended.as_ref().expect("checked")).map_err(fail)?;
                    Justification::AppendAtom {
                        premise: s.premises[0],
                        atom,
                    }
                }
                other => return Err(fail(format!("unknown rule `{other}`"))),
            };
            out.push(RejectionStep {
                index: s.index,
                judgment,
                rule,
            });
        }
        let system = out
            .iter()
            .find_map(|s| s.rule.system())
            .unwrap_or(System::Har);
        let goal = match out.last() {
            Some(s) => s.judgment.formula().clone(),
            None => {
                return Err(CheckFailure {
                    step: 0,
                    reason: "derivation has no steps".into(),
                })
            }
        };
        Ok(RejectionDerivation {
            system,
            steps: out,
            goal,
        })
    }
}

fn parse_cert_formula(text: &str) -> Result<Formula, String> {
    parse_internal(text)
        .map(|s| desugar(&s))
        .map_err(|e| format!("bad formula `{text}`: {e}"))
}

/// Parses and checks a serialized derivation.
pub fn check_json(steps: &[StepJson]) -> Result<RejectionDerivation, CheckFailure> {
    let d = RejectionDerivation::from_json(steps)?;
    check_derivation(&d)?;
    Ok(d)
}

// ---------------------------------------------------------------------------
// Certificate mutation, for testing the checker.

pub mod mutate {
    //! Corruptions of serialized derivations. Each returns `None` when the
    //! derivation offers nothing to corrupt in that way; otherwise the result
    //! is invalid by construction.

    use rand::seq::SliceRandom;
    use rand::Rng;

    use super::*;

    const RULES: [&str; 8] = [
        "thesis",
        "reject-eps",
        "reject-neg-eps",
        "tollens",
        "substitution",
        "append",
        "hintikka-axiom",
        "hintikka-tollens",
    ];

    #[derive(Clone, Copy, Debug, PartialEq, Eq)]
    pub enum Mutation {
        RuleSwap,
        PremiseShuffle,
        SideCondition,
        GoalSwap,
    }

    pub const ALL: [Mutation; 4] = [
        Mutation::RuleSwap,
        Mutation::PremiseShuffle,
        Mutation::SideCondition,
        Mutation::GoalSwap,
    ];

    pub fn apply<R: Rng>(steps: &[StepJson], kind: Mutation, rng: &mut R) -> Option<Vec<StepJson>> {
        match kind {
            Mutation::RuleSwap => rule_swap(steps, rng),
            Mutation::PremiseShuffle => premise_shuffle(steps, rng),
            Mutation::SideCondition => side_condition(steps, rng),
            Mutation::GoalSwap => goal_swap(steps),
        }
    }

    /// Relabels one step with a different rule name.
    pub fn rule_swap<R: Rng>(steps: &[StepJson], rng: &mut R) -> Option<Vec<StepJson>> {
        let mut out = steps.to_vec();
        let i = rng.gen_range(0..out.len());
        let choices: Vec<&str> = RULES
            .iter()
            .copied()
            .filter(|r| *r != out[i].rule)
            .collect();
        out[i].rule = choices.choose(rng)?.to_string();
        Some(out)
    }

    /// Points one premise at a step with different content, or at a step that
    /// does not precede it.
    pub fn premise_shuffle<R: Rng>(steps: &[StepJson], rng: &mut R) -> Option<Vec<StepJson>> {
        let with_premises: Vec<usize> = (0..steps.len())
            .filter(|&i| !steps[i].premises.is_empty())
            .collect();
        let &i = with_premises.choose(rng)?;
        let mut out = steps.to_vec();
        let slot = rng.gen_range(0..out[i].premises.len());
        let old = out[i].premises[slot];
        let content = |k: usize| (&steps[k - 1].judgment, &steps[k - 1].formula);
        let earlier: Vec<usize> = (1..=i)
            .filter(|&k| k != old && content(k) != content(old))
            .collect();
        out[i].premises[slot] = match earlier.choose(rng) {
            Some(&k) if rng.gen_bool(0.75) => k,
            _ => rng.gen_range(i + 1..=steps.len() + 1),
        };
        Some(out)
    }

    /// Breaks a side condition: an appended atom that occurs negated, an
    /// altered substitution, a thesis replaced by the rejected goal, or a
    /// non-Hintikka axiom.
    pub fn side_condition<R: Rng>(steps: &[StepJson], rng: &mut R) -> Option<Vec<StepJson>> {
        let mut candidates: Vec<usize> = (0..steps.len())
            .filter(|&i| {
                matches!(
                    steps[i].rule.as_str(),
                    "append" | "substitution" | "thesis" | "hintikka-axiom"
                )
            })
            .collect();
        candidates.shuffle(rng);
        for i in candidates {
            if let Some(out) = break_step(steps, i, rng) {
                return Some(out);
            }
        }
        None
    }

    fn break_step<R: Rng>(steps: &[StepJson], i: usize, rng: &mut R) -> Option<Vec<StepJson>> {
        let mut out = steps.to_vec();
        let parse = |s: &str| parse_cert_formula(s).ok();
        match steps[i].rule.as_str() {
            "append" => {
                let premise = parse(&steps[steps[i].premises[0] - 1].formula)?;
                let negated: Vec<Formula> = enumerate_parts(&premise)
                    .into_iter()
                    .filter(|p| p.polarity() == Polarity::Negative && p.formula.is_atom())
                    .map(|p| p.formula.clone())
                    .collect();
                let atom = negated.choose(rng)?.clone();
                out[i].appended = Some(atom.to_ascii());
                out[i].formula = Formula::or(premise, atom).to_ascii();
            }
            "substitution" => {
                let concl = parse(&steps[i].formula)?;
                let vars = variables(&concl);
                let map = out[i].substitution.as_mut()?;
                let keys: Vec<String> = map
                    .keys()
                    .filter(|k| vars.iter().any(|v| v.as_str() == k.as_str()))
                    .cloned()
                    .collect();
                let key = keys.choose(rng)?;
                let old = map[key].clone();
                let pool = ["a", "b", "c", "d", "a0", "z"];
                let new = pool.iter().find(|v| **v != old && **v != key)?;
                map.insert(key.clone(), new.to_string());
            }
            "thesis" => {
                out[i].formula = steps.last()?.formula.clone();
            }
            "hintikka-axiom" => {
                let h = parse(&steps[i].formula)?;
                let vars = variables(&h);
                let x = vars.first()?.clone();
                let y = NameVar::new(if x.as_str() == "q" { "r" } else { "q" }).ok()?;
                let bad = Formula::not(Formula::eps(&x, &y));
                debug_assert!(!is_hintikka(&bad));
                out[i].formula = bad.to_ascii();
            }
            _ => return None,
        }
        Some(out)
    }

    /// Replaces the last step's formula by another formula.
    pub fn goal_swap(steps: &[StepJson]) -> Option<Vec<StepJson>> {
        let mut out = steps.to_vec();
        let last = out.last_mut()?;
        let f = parse_cert_formula(&last.formula).ok()?;
        last.formula = Formula::not(f).to_ascii();
        Some(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_formula;

    fn f(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    fn fi(s: &str) -> Formula {
        desugar(&parse_internal(s).unwrap())
    }

    fn rules(d: &RejectionDerivation) -> Vec<&'static str> {
        d.steps.iter().map(|s| s.rule.rule_name()).collect()
    }

    #[test]
    fn negative_literals_collapse_to_axiom() {
        let d = reject_hintikka(&f("~eps(b,c) | ~eps(b,b)")).unwrap();
        assert_eq!(
            rules(&d),
            vec!["reject-neg-eps", "thesis", "tollens", "substitution"]
        );
        assert_eq!(
            d.steps[2].judgment,
            Judgment::Rejected(fi("~eps(a0,a0) | ~eps(a0,a0)"))
        );
        check_derivation(&d).unwrap();
    }

    #[test]
    fn mixed_literals_use_append_rule() {
        let h = f("(~eps(b,c) | ~eps(b,b)) | eps(a,a)");
        let d = reject_hintikka(&h).unwrap();
        assert!(rules(&d).contains(&"append"));
        assert_eq!(d.goal, h);
        check_derivation(&d).unwrap();
    }

    #[test]
    fn designated_atom_is_one_step() {
        let d = reject_hintikka(&fi("eps(a0,a0)")).unwrap();
        assert_eq!(rules(&d), vec!["reject-eps"]);
        check_derivation(&d).unwrap();
    }

    #[test]
    fn non_hintikka_is_refused() {
        assert_eq!(
            reject_hintikka(&f("~eps(a,b)")),
            Err(RejectionError::NotHintikka)
        );
        assert_eq!(
            reject_formula(&f("~eps(a,b) | eps(a,a)")),
            Err(RejectionError::IsProvable)
        );
        assert_eq!(
            reject_formula_hl1(&f("~eps(a,b) | eps(a,a)")),
            Err(RejectionError::IsProvable)
        );
    }

    #[test]
    fn worked_example_chain() {
        let g = f("eps(a,b) | eps(b,c) -> eps(a,a)");
        let d = reject_formula(&g).unwrap();
        check_derivation(&d).unwrap();
        assert_eq!(d.goal, g);
        let s23 = Formula::or(g.clone(), f("~eps(b,c)"));
        let s24 = Formula::or(s23.clone(), f("~eps(b,b)"));
        let theses: Vec<&Formula> = d
            .steps
            .iter()
            .filter_map(|s| match &s.judgment {
                Judgment::Accepted(x) => Some(x),
                _ => None,
            })
            .collect();
        let n = theses.len();
        assert_eq!(theses[n - 1], &Formula::implies(g.clone(), s23.clone()));
        assert_eq!(theses[n - 2], &Formula::implies(s23, s24));

        let d = reject_formula_hl1(&g).unwrap();
        assert_eq!(
            rules(&d),
            vec![
                "hintikka-axiom",
                "thesis",
                "hintikka-tollens",
                "thesis",
                "hintikka-tollens"
            ]
        );
        check_derivation(&d).unwrap();
    }

    #[test]
    fn worked_derivation_checks() {
        let steps = vec![
            ("-", "~eps(a0,a0)", "reject-neg-eps", vec![], None, None),
            ("-", "~eps(b,b)", "substitution", vec![1], Some(("b", "a0")), None),
            ("+", "~eps(b,b) | ~eps(b,b) -> ~eps(b,b)", "thesis", vec![], None, None),
            ("-", "~eps(b,b) | ~eps(b,b)", "tollens", vec![3, 2], None, None),
            ("-", "~eps(b,c) | ~eps(b,b)", "substitution", vec![4], Some(("c", "b")), None),
            ("-", "(~eps(b,c) | ~eps(b,b)) | eps(a,a)", "append", vec![5], None, Some("eps(a,a)")),
            (
                "+",
                "(~(eps(a,b) | eps(b,c)) | ~eps(b,c) | eps(a,a)) -> ((~eps(b,c) | ~eps(b,b)) | eps(a,a))",
                "thesis",
                vec![],
                None,
                None,
            ),
            ("-", "~(eps(a,b) | eps(b,c)) | ~eps(b,c) | eps(a,a)", "tollens", vec![7, 6], None, None),
            (
                "+",
                "(~(eps(a,b) | eps(b,c)) | eps(a,a)) -> (~(eps(a,b) | eps(b,c)) | ~eps(b,c) | eps(a,a))",
                "thesis",
                vec![],
                None,
                None,
            ),
            ("-", "~(eps(a,b) | eps(b,c)) | eps(a,a)", "tollens", vec![9, 8], None, None),
        ];
        let json: Vec<StepJson> = steps
            .into_iter()
            .enumerate()
            .map(|(i, (j, fo, r, p, sub, app))| StepJson {
                index: i + 1,
                judgment: j.into(),
                formula: fo.into(),
                rule: r.into(),
                premises: p,
                substitution: sub
                    .map(|(k, v): (&str, &str)| BTreeMap::from([(k.to_string(), v.to_string())])),
                appended: app.map(String::from),
            })
            .collect();
        let d = check_json(&json).unwrap();
        assert_eq!(d.goal, f("eps(a,b) | eps(b,c) -> eps(a,a)"));
    }

    #[test]
    fn append_side_condition_is_enforced() {
        let base = reject_hintikka(&f("~eps(b,c) | ~eps(b,b)")).unwrap();
        let mut steps = base.steps.clone();
        let prem = steps.len();
        let a = steps[prem - 1].judgment.formula().clone();
        steps.push(RejectionStep {
            index: prem + 1,
            judgment: Judgment::Rejected(Formula::or(a, f("eps(b,c)"))),
            rule: Justification::AppendAtom {
                premise: prem,
                atom: f("eps(b,c)"),
            },
        });
        let goal = steps.last().unwrap().judgment.formula().clone();
        let d = RejectionDerivation {
            system: System::Har,
            steps,
            goal,
        };
        let err = check_derivation(&d).unwrap_err();
        assert_eq!(err.step, prem + 1);
        assert!(err.reason.contains("negated"), "{}", err.reason);
    }

    #[test]
    fn json_round_trip() {
        for src in [
            "eps(a,b) | eps(b,c) -> eps(a,a)",
            "~eps(a,a) | ~eps(b,b)",
            "eps(a,b) & eps(b,a)",
        ] {
            for d in [
                reject_formula(&f(src)).unwrap(),
                reject_formula_hl1(&f(src)).unwrap(),
            ] {
                let json = d.to_json();
                let text = serde_json::to_string(&json).unwrap();
                let back: Vec<StepJson> = serde_json::from_str(&text).unwrap();
                assert_eq!(check_json(&back).unwrap(), d);
            }
        }
    }

    #[test]
    fn mixing_systems_is_refused() {
        let d = reject_formula(&f("eps(a,b) | eps(b,c) -> eps(a,a)")).unwrap();
        let mut json = d.to_json();
        let last = json.len() - 1;
        json[last].rule = "hintikka-tollens".into();
        let err = check_json(&json).unwrap_err();
        assert_eq!(err.step, json.len());
    }
}
