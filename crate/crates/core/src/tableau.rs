//! Reduction rules, normal tableaux and the provable/rejected verdict.
//!
//! A branch is a sequence of formulas, each the previous one disjoined with
//! one new negated formula. A rule is applicable only while the formula is
//! not closed and only if the formula it would introduce is not already a
//! negative part; under that proviso every branch terminates in a closed
//! formula or a Hintikka formula.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::parts::{
    enumerate_parts, find_closure, is_closed, subformula_at, Closure, OccurrencePath, Polarity,
    Step,
};
use crate::syntax::{desugar, parse_internal, variables, Formula, NameVar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleKind {
    Eps1,
    Eps2,
    Eps3b,
    Eps3,
    OrNeg,
}

impl RuleKind {
    pub fn name(self) -> &'static str {
        match self {
            RuleKind::Eps1 => "eps1",
            RuleKind::Eps2 => "eps2",
            RuleKind::Eps3b => "eps3b",
            RuleKind::Eps3 => "eps3",
            RuleKind::OrNeg => "or-",
        }
    }
}

impl FromStr for RuleKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "eps1" => RuleKind::Eps1,
            "eps2" => RuleKind::Eps2,
            "eps3b" => RuleKind::Eps3b,
            "eps3" => RuleKind::Eps3,
            "or-" => RuleKind::OrNeg,
            other => return Err(format!("unknown rule `{other}`")),
        })
    }
}

/// Which third epsilon rule is in force.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Mode {
    /// `εab, εbb ⟹ εba`, matching the symmetry axiom εab ∧ εbb ⊃ εba.
    #[default]
    Eps3b,
    /// `εab, εbc ⟹ εba`, matching the original form εab ∧ εbc ⊃ εba of that axiom.
    Eps3,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Eps3b => "eps3b",
            Mode::Eps3 => "eps3",
        }
    }

    fn third_rule(self) -> RuleKind {
        match self {
            Mode::Eps3b => RuleKind::Eps3b,
            Mode::Eps3 => RuleKind::Eps3,
        }
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "eps3b" => Ok(Mode::Eps3b),
            "eps3" => Ok(Mode::Eps3),
            other => Err(format!("unknown mode `{other}` (expected eps3b or eps3)")),
        }
    }
}

/// One applicable reduction. `appended` holds the negated formula disjoined
/// to the branch: one entry for the epsilon rules, two (one per branch) for
/// the disjunction rule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleInstance {
    pub rule: RuleKind,
    pub principals: Vec<OccurrencePath>,
    pub appended: Vec<Formula>,
}

impl RuleInstance {
    /// The formulas that become new negative parts.
    pub fn introduced_bodies(&self) -> impl Iterator<Item = &Formula> {
        self.appended.iter().map(|f| match f {
            Formula::Not(body) => &**body,
            _ => unreachable!("appended formulas are negations"),
        })
    }

    pub fn children_of(&self, parent: &Formula) -> Vec<Formula> {
        self.appended
            .iter()
            .map(|x| Formula::or(parent.clone(), x.clone()))
            .collect()
    }
}

/// Signed parts of a branch formula, maintained as the branch grows.
///
/// Negative occurrences are kept in preorder: those of the root formula
/// first, then those of each appended formula in turn. A part introduced by
/// the `k`-th appended formula sits at `L^(depth-k) R local` in the current
/// branch formula. The branch formula itself is never recorded as a positive
/// part: it is larger than every formula that can later become negative.
#[derive(Clone)]
struct BranchParts {
    positive: HashSet<Formula>,
    negative: HashSet<Formula>,
    neg_occ: Vec<(Formula, usize, OccurrencePath)>,
    closed: bool,
    depth: usize,
}

impl BranchParts {
    fn new(root: &Formula) -> Self {
        let mut s = BranchParts {
            positive: HashSet::new(),
            negative: HashSet::new(),
            neg_occ: Vec::new(),
            closed: false,
            depth: 0,
        };
        for p in enumerate_parts(root).into_iter().skip(1) {
            s.absorb(p.formula, p.polarity(), 0, p.path);
        }
        s
    }

    fn absorb(&mut self, g: &Formula, pol: Polarity, step: usize, local: OccurrencePath) {
        match pol {
            Polarity::Positive => {
                self.closed |= self.negative.contains(g);
                self.positive.insert(g.clone());
            }
            Polarity::Negative => {
                self.closed |= self.positive.contains(g);
                self.negative.insert(g.clone());
                self.neg_occ.push((g.clone(), step, local));
            }
        }
    }

    fn extend(&self, appended: &Formula) -> Self {
        let mut s = self.clone();
        s.depth += 1;
        let step = s.depth;
        for p in enumerate_parts(appended) {
            s.absorb(p.formula, p.polarity(), step, p.path);
        }
        s
    }

    /// Whether disjoining `appended` would close the branch.
    fn closes_with(&self, appended: &Formula) -> bool {
        let parts = enumerate_parts(appended);
        let (mut pos, mut neg): (Vec<&Formula>, Vec<&Formula>) = (Vec::new(), Vec::new());
        for p in &parts {
            match p.polarity() {
                Polarity::Positive => pos.push(p.formula),
                Polarity::Negative => neg.push(p.formula),
            }
        }
        pos.iter()
            .any(|g| self.negative.contains(*g) || neg.contains(g))
            || neg.iter().any(|g| self.positive.contains(*g))
    }

    fn path(&self, occ: usize) -> OccurrencePath {
        let (_, step, local) = &self.neg_occ[occ];
        let mut steps = Vec::with_capacity(self.depth + local.len() + 1);
        if *step == 0 {
            steps.resize(self.depth, Step::OrLeft);
        } else {
            steps.resize(self.depth - step, Step::OrLeft);
            steps.push(Step::OrRight);
        }
        steps.extend_from_slice(local.steps());
        OccurrencePath::from_steps(steps).expect("negative part path")
    }

    fn candidates(&self, mode: Mode) -> Vec<Candidate> {
        if self.closed {
            return Vec::new();
        }
        let mut seen = HashSet::new();
        let atoms: Vec<(&NameVar, &NameVar, usize)> = self
            .neg_occ
            .iter()
            .enumerate()
            .filter_map(|(i, (g, _, _))| match g {
                Formula::Eps(a, b) if seen.insert((a, b)) => Some((a, b, i)),
                _ => None,
            })
            .collect();
        let mut out: Vec<Candidate> = Vec::new();
        let mut produced: HashSet<(RuleKind, Formula)> = HashSet::new();
        let mut push = |rule: RuleKind, principals: Vec<usize>, body: Formula| {
            if self.negative.contains(&body) || !produced.insert((rule, body.clone())) {
                return;
            }
            out.push(Candidate {
                rule,
                principals,
                appended: vec![Formula::not(body)],
            });
        };

        for &(a, _, p) in &atoms {
            push(RuleKind::Eps1, vec![p], Formula::eps(a, a));
        }
        for &(a, b, p) in &atoms {
            for &(b2, c, q) in &atoms {
                if b == b2 {
                    push(RuleKind::Eps2, vec![p, q], Formula::eps(a, c));
                }
            }
        }
        let third = mode.third_rule();
        for &(a, b, p) in &atoms {
            for &(b2, c, q) in &atoms {
                let fits = match mode {
                    Mode::Eps3b => b2 == b && c == b,
                    Mode::Eps3 => b2 == b,
                };
                if fits {
                    push(third, vec![p, q], Formula::eps(b, a));
                }
            }
        }

        let mut seen_or = HashSet::new();
        for (i, (g, _, _)) in self.neg_occ.iter().enumerate() {
            if let Formula::Or(l, r) = g {
                if self.negative.contains(&**l)
                    || self.negative.contains(&**r)
                    || !seen_or.insert(g)
                {
                    continue;
                }
                out.push(Candidate {
                    rule: RuleKind::OrNeg,
                    principals: vec![i],
                    appended: vec![Formula::not((**l).clone()), Formula::not((**r).clone())],
                });
            }
        }
        out
    }

    fn instance(&self, c: Candidate) -> RuleInstance {
        RuleInstance {
            rule: c.rule,
            principals: c.principals.iter().map(|&i| self.path(i)).collect(),
            appended: c.appended,
        }
    }
}

/// A rule instance whose principals are indices into the negative
/// occurrence list of a [`BranchParts`].
struct Candidate {
    rule: RuleKind,
    principals: Vec<usize>,
    appended: Vec<Formula>,
}

/// All rule instances applicable to `f`, ordered by rule kind and then by
/// principal occurrence order. Empty when `f` is closed.
pub fn applicable(f: &Formula, mode: Mode) -> Vec<RuleInstance> {
    let parts = BranchParts::new(f);
    parts
        .candidates(mode)
        .into_iter()
        .map(|c| parts.instance(c))
        .collect()
}

/// Hintikka test, clause by clause.
pub fn is_hintikka(f: &Formula) -> bool {
    if is_closed(f) {
        return false;
    }
    let parts = enumerate_parts(f);
    let neg: HashSet<&Formula> = parts
        .iter()
        .filter(|p| p.polarity() == Polarity::Negative)
        .map(|p| p.formula)
        .collect();
    let has = |a: &NameVar, b: &NameVar| neg.contains(&Formula::eps(a, b));
    let mut atoms = Vec::new();
    for g in &neg {
        match g {
            Formula::Or(l, r) => {
                if !neg.contains(&**l) && !neg.contains(&**r) {
                    return false;
                }
            }
            Formula::Eps(a, b) => atoms.push((a, b)),
            Formula::Not(_) => {}
        }
    }
    for &(a, b) in &atoms {
        if !has(a, a) {
            return false;
        }
        for &(b2, c) in &atoms {
            if b2 == b && !has(a, c) {
                return false;
            }
            if b2 == b && c == b && !has(b, a) {
                return false;
            }
        }
    }
    true
}

/// How the next rule instance is picked on a branch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum RuleSelection {
    /// First instance that closes the branch at once; otherwise the first
    /// epsilon instance; otherwise the first disjunction instance.
    #[default]
    Default,
    /// Uniform choice among applicable instances, seeded.
    Random(u64),
}

impl RuleSelection {
    /// Seed 0 is the deterministic default strategy.
    pub fn from_seed(seed: u64) -> Self {
        if seed == 0 {
            RuleSelection::Default
        } else {
            RuleSelection::Random(seed)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Leaf {
    Closed(Closure),
    Hintikka,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TableauNode {
    pub formula: Formula,
    pub rule: Option<RuleInstance>,
    pub children: Vec<TableauNode>,
    pub leaf: Option<Leaf>,
}

impl TableauNode {
    pub fn leaves(&self) -> Vec<&TableauNode> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(n) = stack.pop() {
            if n.children.is_empty() {
                out.push(n);
            }
            stack.extend(n.children.iter().rev());
        }
        out
    }

    /// Number of formulas on the longest branch, root included.
    pub fn height(&self) -> usize {
        1 + self.children.iter().map(|c| c.height()).max().unwrap_or(0)
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(|c| c.node_count()).sum::<usize>()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tableau {
    pub mode: Mode,
    pub root: TableauNode,
}

impl Tableau {
    pub fn is_closed(&self) -> bool {
        self.root
            .leaves()
            .iter()
            .all(|l| matches!(l.leaf, Some(Leaf::Closed(_))))
    }

    /// Child indices leading to the leftmost Hintikka leaf.
    pub fn leftmost_open_branch(&self) -> Option<Vec<usize>> {
        fn go(n: &TableauNode, path: &mut Vec<usize>) -> bool {
            if matches!(n.leaf, Some(Leaf::Hintikka)) {
                return true;
            }
            for (i, c) in n.children.iter().enumerate() {
                path.push(i);
                if go(c, path) {
                    return true;
                }
                path.pop();
            }
            false
        }
        let mut path = Vec::new();
        go(&self.root, &mut path).then_some(path)
    }

    /// Formulas along a branch given by child indices, root first.
    pub fn branch_formulas(&self, branch: &[usize]) -> Vec<&Formula> {
        let mut out = vec![&self.root.formula];
        let mut node = &self.root;
        for &i in branch {
            node = &node.children[i];
            out.push(&node.formula);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Provable(Tableau),
    Rejected {
        tableau: Tableau,
        witness_branch: Vec<usize>,
        hintikka: Formula,
    },
}

impl Verdict {
    pub fn is_provable(&self) -> bool {
        matches!(self, Verdict::Provable(_))
    }

    pub fn tableau(&self) -> &Tableau {
        match self {
            Verdict::Provable(t) => t,
            Verdict::Rejected { tableau, .. } => tableau,
        }
    }

    pub fn kind(&self) -> VerdictKind {
        match self {
            Verdict::Provable(_) => VerdictKind::Provable,
            Verdict::Rejected { .. } => VerdictKind::Rejected,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VerdictKind {
    Provable,
    Rejected,
}

impl fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VerdictKind::Provable => "PROVABLE",
            VerdictKind::Rejected => "REJECTED",
        })
    }
}

/// Upper bound on branch length: every step adds a new negative part, and
/// negative parts are subformulas of the root or atoms over its variables.
pub fn branch_bound(f: &Formula) -> usize {
    fn subformulas<'a>(f: &'a Formula, out: &mut HashSet<&'a Formula>) {
        if out.insert(f) {
            match f {
                Formula::Eps(..) => {}
                Formula::Or(l, r) => {
                    subformulas(l, out);
                    subformulas(r, out);
                }
                Formula::Not(a) => subformulas(a, out),
            }
        }
    }
    let mut subs = HashSet::new();
    subformulas(f, &mut subs);
    let v = variables(f).len();
    subs.len() + 3 * v * v
}

struct Builder {
    mode: Mode,
    rng: Option<ChaCha8Rng>,
    bound: usize,
}

impl Builder {
    fn expand(&mut self, formula: Formula, parts: BranchParts) -> TableauNode {
        assert!(
            parts.depth <= self.bound,
            "branch exceeded termination bound"
        );
        if parts.closed {
            let closure = find_closure(&formula).expect("closed formula has a closure pair");
            return TableauNode {
                formula,
                rule: None,
                children: Vec::new(),
                leaf: Some(Leaf::Closed(closure)),
            };
        }
        let mut options = parts.candidates(self.mode);
        if options.is_empty() {
            return TableauNode {
                formula,
                rule: None,
                children: Vec::new(),
                leaf: Some(Leaf::Hintikka),
            };
        }
        let pick = match &mut self.rng {
            Some(rng) => rng.gen_range(0..options.len()),
            None => default_pick(&parts, &options),
        };
        let inst = parts.instance(options.swap_remove(pick));
        let children = inst
            .appended
            .iter()
            .map(|x| self.expand(Formula::or(formula.clone(), x.clone()), parts.extend(x)))
            .collect();
        TableauNode {
            formula,
            rule: Some(inst),
            children,
            leaf: None,
        }
    }
}

/// An epsilon instance that closes at once, then a disjunction instance
/// whose branches all close at once, then the first epsilon instance, then
/// the first disjunction instance.
fn default_pick(parts: &BranchParts, options: &[Candidate]) -> usize {
    let closes = |c: &Candidate| c.appended.iter().all(|x| parts.closes_with(x));
    let is_eps = |c: &Candidate| c.rule != RuleKind::OrNeg;
    options
        .iter()
        .position(|c| is_eps(c) && closes(c))
        .or_else(|| options.iter().position(|c| !is_eps(c) && closes(c)))
        .or_else(|| options.iter().position(is_eps))
        .unwrap_or(0)
}

/// Builds a normal tableau for `f`.
pub fn build_tableau(f: &Formula, strategy: RuleSelection, mode: Mode) -> Verdict {
    let mut builder = Builder {
        mode,
        rng: match strategy {
            RuleSelection::Default => None,
            RuleSelection::Random(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        },
        bound: branch_bound(f),
    };
    let root = builder.expand(f.clone(), BranchParts::new(f));
    let tableau = Tableau { mode, root };
    match tableau.leftmost_open_branch() {
        None => Verdict::Provable(tableau),
        Some(branch) => {
            let hintikka = (*tableau.branch_formulas(&branch).last().expect("non-empty")).clone();
            Verdict::Rejected {
                tableau,
                witness_branch: branch,
                hintikka,
            }
        }
    }
}

/// Default strategy, default rule set.
pub fn decide(f: &Formula) -> Verdict {
    build_tableau(f, RuleSelection::Default, Mode::Eps3b)
}

/// Verdict only; stops at the first open branch.
pub fn decide_kind(f: &Formula, mode: Mode) -> VerdictKind {
    fn open(parts: BranchParts, mode: Mode) -> bool {
        if parts.closed {
            return false;
        }
        let options = parts.candidates(mode);
        if options.is_empty() {
            return true;
        }
        let pick = &options[default_pick(&parts, &options)];
        pick.appended.iter().any(|x| open(parts.extend(x), mode))
    }
    if open(BranchParts::new(f), mode) {
        VerdictKind::Rejected
    } else {
        VerdictKind::Provable
    }
}

// ---------------------------------------------------------------------------
// Certificates

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableauJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    pub formula: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub principals: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub appended: Vec<String>,
    #[serde(default)]
    pub children: Vec<TableauJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leaf: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

impl Tableau {
    pub fn to_json(&self) -> TableauJson {
        fn node(n: &TableauNode) -> TableauJson {
            TableauJson {
                mode: None,
                formula: n.formula.to_ascii(),
                rule: n.rule.as_ref().map(|r| r.rule.name().to_string()),
                principals: n
                    .rule
                    .as_ref()
                    .map(|r| r.principals.iter().map(|p| p.to_string()).collect())
                    .unwrap_or_default(),
                appended: n
                    .rule
                    .as_ref()
                    .map(|r| r.appended.iter().map(|a| a.to_ascii()).collect())
                    .unwrap_or_default(),
                children: n.children.iter().map(node).collect(),
                leaf: n.leaf.as_ref().map(|l| match l {
                    Leaf::Closed(_) => "closed".to_string(),
                    Leaf::Hintikka => "hintikka".to_string(),
                }),
                witness: match &n.leaf {
                    Some(Leaf::Closed(c)) => Some(c.formula.to_ascii()),
                    _ => None,
                },
            }
        }
        let mut root = node(&self.root);
        root.mode = Some(self.mode.name().to_string());
        root
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid tableau certificate at node {node}: {reason}")]
pub struct TableauCheckError {
    /// Preorder index of the offending node.
    pub node: usize,
    pub reason: String,
}

/// Validates a tableau certificate and returns the verdict it establishes.
pub fn check_tableau(cert: &TableauJson) -> Result<VerdictKind, TableauCheckError> {
    let mode = match &cert.mode {
        None => Mode::default(),
        Some(m) => m
            .parse()
            .map_err(|reason| TableauCheckError { node: 0, reason })?,
    };
    let mut counter = 0;
    let mut all_closed = true;
    check_node(cert, None, mode, &mut counter, &mut all_closed)?;
    Ok(if all_closed {
        VerdictKind::Provable
    } else {
        VerdictKind::Rejected
    })
}

fn parse_cert_formula(text: &str) -> Result<Formula, String> {
    parse_internal(text)
        .map(|s| desugar(&s))
        .map_err(|e| format!("bad formula `{text}`: {e}"))
}

fn check_node(
    node: &TableauJson,
    expected: Option<&Formula>,
    mode: Mode,
    counter: &mut usize,
    all_closed: &mut bool,
) -> Result<(), TableauCheckError> {
    let index = *counter;
    *counter += 1;
    let fail = |reason: String| TableauCheckError {
        node: index,
        reason,
    };
    let formula = parse_cert_formula(&node.formula).map_err(fail)?;
    if let Some(expected) = expected {
        if &formula != expected {
            return Err(fail(format!(
                "formula {formula} is not the parent extended by the appended formula"
            )));
        }
    }
    match node.leaf.as_deref() {
        Some("closed") => {
            if !node.children.is_empty() {
                return Err(fail("closed leaf has children".into()));
            }
            let Some(closure) = find_closure(&formula) else {
                return Err(fail(
                    "leaf marked closed is not of the form F[A+, A-]".into(),
                ));
            };
            if let Some(w) = &node.witness {
                let w = parse_cert_formula(w).map_err(fail)?;
                let parts = enumerate_parts(&formula);
                let pos = parts
                    .iter()
                    .any(|p| p.polarity() == Polarity::Positive && p.formula == &w);
                let neg = parts
                    .iter()
                    .any(|p| p.polarity() == Polarity::Negative && p.formula == &w);
                if !(pos && neg) {
                    return Err(fail(format!(
                        "witness {w} is not both a positive and a negative part (closure is on {})",
                        closure.formula
                    )));
                }
            }
            Ok(())
        }
        Some("hintikka") => {
            if !node.children.is_empty() {
                return Err(fail("Hintikka leaf has children".into()));
            }
            if !is_hintikka(&formula) {
                return Err(fail(format!("{formula} is not a Hintikka formula")));
            }
            if !applicable(&formula, mode).is_empty() {
                return Err(fail(format!(
                    "{formula} is not saturated in mode {}",
                    mode.name()
                )));
            }
            *all_closed = false;
            Ok(())
        }
        Some(other) => Err(fail(format!("unknown leaf tag `{other}`"))),
        None => {
            let rule: RuleKind = node
                .rule
                .as_deref()
                .ok_or_else(|| fail("inner node without rule".into()))?
                .parse()
                .map_err(fail)?;
            let principals = node
                .principals
                .iter()
                .map(|p| p.parse::<OccurrencePath>().map_err(|e| fail(e.to_string())))
                .collect::<Result<Vec<_>, _>>()?;
            let appended = node
                .appended
                .iter()
                .map(|a| parse_cert_formula(a).map_err(fail))
                .collect::<Result<Vec<_>, _>>()?;
            validate_instance(&formula, rule, &principals, &appended, mode).map_err(fail)?;
            if node.children.len() != appended.len() {
                return Err(fail(format!(
                    "rule {} needs {} children, found {}",
                    rule.name(),
                    appended.len(),
                    node.children.len()
                )));
            }
            for (child, app) in node.children.iter().zip(&appended) {
                let expected = Formula::or(formula.clone(), app.clone());
                check_node(child, Some(&expected), mode, counter, all_closed)?;
            }
            Ok(())
        }
    }
}

/// Checks one rule application against its schema and the proviso.
pub fn validate_instance(
    formula: &Formula,
    rule: RuleKind,
    principals: &[OccurrencePath],
    appended: &[Formula],
    mode: Mode,
) -> Result<(), String> {
    if is_closed(formula) {
        return Err("rule applied to a closed formula".into());
    }
    let principal = |i: usize| -> Result<&Formula, String> {
        let p = principals
            .get(i)
            .ok_or_else(|| format!("missing principal #{i}"))?;
        if p.polarity() != Polarity::Negative {
            return Err(format!("principal {p} is not a negative part"));
        }
        subformula_at(formula, p).map_err(|e| e.to_string())
    };
    let atom = |g: &Formula| -> Result<(NameVar, NameVar), String> {
        match g {
            Formula::Eps(a, b) => Ok((a.clone(), b.clone())),
            other => Err(format!("principal {other} is not atomic")),
        }
    };
    let expected: Vec<Formula> = match rule {
        RuleKind::OrNeg => {
            expect_len(principals, 1)?;
            match principal(0)? {
                Formula::Or(l, r) => vec![Formula::not((**l).clone()), Formula::not((**r).clone())],
                other => return Err(format!("principal {other} is not a disjunction")),
            }
        }
        RuleKind::Eps1 => {
            expect_len(principals, 1)?;
            let (a, _) = atom(principal(0)?)?;
            vec![Formula::not(Formula::eps(&a, &a))]
        }
        RuleKind::Eps2 | RuleKind::Eps3b | RuleKind::Eps3 => {
            expect_len(principals, 2)?;
            let (a, b) = atom(principal(0)?)?;
            let (b2, c) = atom(principal(1)?)?;
            if b2 != b {
                return Err("principals do not share the middle variable".into());
            }
            match rule {
                RuleKind::Eps2 => vec![Formula::not(Formula::eps(&a, &c))],
                RuleKind::Eps3b => {
                    if mode != Mode::Eps3b {
                        return Err("rule eps3b used in eps3 mode".into());
                    }
                    if c != b {
                        return Err("second principal of eps3b must be εbb".into());
                    }
                    vec![Formula::not(Formula::eps(&b, &a))]
                }
                _ => {
                    if mode != Mode::Eps3 {
                        return Err("rule eps3 used in eps3b mode".into());
                    }
                    vec![Formula::not(Formula::eps(&b, &a))]
                }
            }
        }
    };
    if appended != expected.as_slice() {
        return Err(format!(
            "appended formulas do not follow the {} schema",
            rule.name()
        ));
    }
    let neg: HashSet<&Formula> = enumerate_parts(formula)
        .into_iter()
        .filter(|p| p.polarity() == Polarity::Negative)
        .map(|p| p.formula)
        .collect();
    for x in &expected {
        let Formula::Not(body) = x else {
            unreachable!()
        };
        if neg.contains(&**body) {
            return Err(format!("{body} already occurs as a negative part"));
        }
    }
    Ok(())
}

fn expect_len(principals: &[OccurrencePath], n: usize) -> Result<(), String> {
    if principals.len() == n {
        Ok(())
    } else {
        Err(format!(
            "expected {n} principal(s), found {}",
            principals.len()
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_formula;

    fn f(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    const AX11: &str = "~eps(a,b) | eps(a,a)";
    const AX12: &str = "eps(a,b) & eps(b,c) -> eps(a,c)";
    const AX13B: &str = "eps(a,b) & eps(b,b) -> eps(b,a)";
    const AX13: &str = "eps(a,b) & eps(b,c) -> eps(b,a)";

    #[test]
    fn hintikka_examples() {
        assert!(is_hintikka(&f("~eps(a,b) | eps(b,a) | ~eps(a,a)")));
        assert!(is_hintikka(&f(
            "~(eps(a,b) | eps(b,c)) | ~eps(a,b) | ~eps(a,a)"
        )));
        assert!(is_hintikka(&f(
            "~eps(a,b) | ~eps(b,c) | ~eps(a,c) | ~eps(b,a) | ~eps(a,a) | ~eps(b,b)"
        )));
        assert!(is_hintikka(&f("eps(a,a)")));
        assert!(is_hintikka(&f("~eps(a,a)")));
        assert!(!is_hintikka(&f("~eps(a,b)")));
        assert!(!is_hintikka(&f("eps(a,b) | ~eps(a,b)")));
    }

    #[test]
    fn applicable_on_axiom_one() {
        let inst = applicable(&f(AX11), Mode::Eps3b);
        assert_eq!(inst.len(), 1);
        assert_eq!(inst[0].rule, RuleKind::Eps1);
        assert_eq!(inst[0].appended, vec![f("~eps(a,a)")]);
    }

    #[test]
    fn applicable_is_empty_when_closed_or_saturated() {
        assert!(applicable(&f("(~eps(a,b) | eps(a,a)) | ~eps(a,a)"), Mode::Eps3b).is_empty());
        assert!(applicable(&f("~eps(a,b) | eps(b,a) | ~eps(a,a)"), Mode::Eps3b).is_empty());
    }

    #[test]
    fn axioms_close_in_one_step() {
        for (src, mode, rule) in [
            (AX11, Mode::Eps3b, RuleKind::Eps1),
            (AX12, Mode::Eps3b, RuleKind::Eps2),
            (AX13B, Mode::Eps3b, RuleKind::Eps3b),
            (AX13, Mode::Eps3, RuleKind::Eps3),
        ] {
            let v = build_tableau(&f(src), RuleSelection::Default, mode);
            let t = v.tableau();
            assert!(v.is_provable(), "{src}");
            assert_eq!(t.root.rule.as_ref().unwrap().rule, rule);
            assert_eq!(t.root.children.len(), 1);
            assert!(matches!(t.root.children[0].leaf, Some(Leaf::Closed(_))));
        }
    }

    #[test]
    fn axiom_one_tableau_matches_worked_example() {
        let v = decide(&f(AX11));
        let child = &v.tableau().root.children[0];
        assert_eq!(child.formula.to_string(), "(∼εab ∨ εaa) ∨ ∼εaa");
    }

    #[test]
    fn rejected_example_reaches_expected_hintikka() {
        let v = decide(&f("eps(a,b) | eps(b,c) -> eps(a,a)"));
        let Verdict::Rejected {
            tableau,
            witness_branch,
            hintikka,
        } = v
        else {
            panic!("expected rejection");
        };
        assert_eq!(witness_branch, vec![1, 0]);
        let disj: Vec<String> = hintikka.disjuncts().iter().map(|d| d.to_string()).collect();
        assert_eq!(disj, vec!["∼(εab ∨ εbc)", "εaa", "∼εbc", "∼εbb"]);
        assert!(is_hintikka(&hintikka));
        // Left branch: ∼εab then ∼εaa, closed on εaa.
        let left = &tableau.root.children[0];
        assert_eq!(left.children.len(), 1);
        match &left.children[0].leaf {
            Some(Leaf::Closed(c)) => assert_eq!(c.formula, f("eps(a,a)")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn immediate_closure_is_provable() {
        assert!(decide(&f("eps(a,b) | ~eps(a,b)")).is_provable());
    }

    #[test]
    fn negated_tautology_is_rejected() {
        assert!(!decide(&f("~(eps(a,b) | ~eps(a,b))")).is_provable());
    }

    #[test]
    fn certificate_round_trip() {
        for src in [
            AX11,
            AX12,
            "eps(a,b) | eps(b,c) -> eps(a,a)",
            "~(eps(a,b) | ~eps(b,a))",
        ] {
            let v = decide(&f(src));
            let json = v.tableau().to_json();
            assert_eq!(check_tableau(&json).unwrap(), v.kind());
        }
    }

    #[test]
    fn certificate_rejects_tampering() {
        let v = decide(&f(AX12));
        let mut json = v.tableau().to_json();
        json.children[0].leaf = Some("hintikka".into());
        assert!(check_tableau(&json).is_err());

        let mut json = v.tableau().to_json();
        json.appended = vec!["~eps(a,a)".into()];
        assert!(check_tableau(&json).is_err());

        let mut json = v.tableau().to_json();
        json.rule = Some("eps3b".into());
        assert!(check_tableau(&json).is_err());
    }

    #[test]
    fn decide_kind_matches_decide() {
        for src in [
            AX11,
            AX12,
            AX13B,
            "eps(a,b) | eps(b,c) -> eps(a,a)",
            "eps(a,a)",
        ] {
            let g = f(src);
            assert_eq!(decide_kind(&g, Mode::Eps3b), decide(&g).kind());
        }
    }
}
