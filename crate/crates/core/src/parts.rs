//! Positive and negative parts of a formula.
//!
//! A part occurrence is addressed by the path leading to it from the root.
//! Descent is only legal the way the part clauses allow it: through a
//! disjunction while positive, and through a negation in either polarity
//! (flipping it). A negative disjunction is therefore never entered.

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

use crate::syntax::Formula;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn flip(self) -> Self {
        match self {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Step {
    OrLeft,
    OrRight,
    Not,
}

/// Address of a part occurrence. The polarity is determined by the steps.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct OccurrencePath {
    steps: Vec<Step>,
}

impl OccurrencePath {
    pub fn root() -> Self {
        Self::default()
    }

    /// Validates a step sequence against the descent rules.
    pub fn from_steps(steps: Vec<Step>) -> Result<Self, PartsError> {
        let mut polarity = Polarity::Positive;
        for (i, step) in steps.iter().enumerate() {
            match (step, polarity) {
                (Step::Not, p) => polarity = p.flip(),
                (_, Polarity::Positive) => {}
                (_, Polarity::Negative) => return Err(PartsError::NotAPart { at_step: i }),
            }
        }
        Ok(OccurrencePath { steps })
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn polarity(&self) -> Polarity {
        if self.steps.iter().filter(|s| **s == Step::Not).count() % 2 == 0 {
            Polarity::Positive
        } else {
            Polarity::Negative
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Whether `self` is a proper prefix of `other`.
    pub fn is_proper_prefix_of(&self, other: &OccurrencePath) -> bool {
        self.steps.len() < other.steps.len() && other.steps.starts_with(&self.steps)
    }

    fn child(&self, step: Step) -> Self {
        let mut steps = self.steps.clone();
        steps.push(step);
        OccurrencePath { steps }
    }

    /// Path of the same occurrence inside `G ∨ X`, where `G` is the current root.
    pub fn under_left_disjunct(&self) -> Self {
        let mut steps = Vec::with_capacity(self.steps.len() + 1);
        steps.push(Step::OrLeft);
        steps.extend_from_slice(&self.steps);
        OccurrencePath { steps }
    }
}

impl fmt::Display for OccurrencePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.steps.is_empty() {
            return f.write_str(".");
        }
        for s in &self.steps {
            f.write_str(match s {
                Step::OrLeft => "L",
                Step::OrRight => "R",
                Step::Not => "N",
            })?;
        }
        Ok(())
    }
}

impl std::str::FromStr for OccurrencePath {
    type Err = PartsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "." || s.is_empty() {
            return Ok(Self::root());
        }
        let steps = s
            .chars()
            .map(|c| match c {
                'L' => Ok(Step::OrLeft),
                'R' => Ok(Step::OrRight),
                'N' => Ok(Step::Not),
                _ => Err(PartsError::BadPathSyntax(s.to_string())),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_steps(steps)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PartsError {
    #[error("path does not address a part (illegal descent at step {at_step})")]
    NotAPart { at_step: usize },
    #[error("path does not match the shape of the formula")]
    InvalidOccurrence,
    #[error("malformed path `{0}`")]
    BadPathSyntax(String),
}

/// One part occurrence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Part<'a> {
    pub path: OccurrencePath,
    pub formula: &'a Formula,
}

impl Part<'_> {
    pub fn polarity(&self) -> Polarity {
        self.path.polarity()
    }
}

/// A formula, or the empty expression left by removing a whole formula.
/// Disjunction with `Empty` is the identity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MaybeFormula {
    Present(Formula),
    Empty,
}

impl MaybeFormula {
    pub fn or(self, rhs: Formula) -> Formula {
        match self {
            MaybeFormula::Present(f) => Formula::or(f, rhs),
            MaybeFormula::Empty => rhs,
        }
    }

    pub fn or_maybe(self, rhs: MaybeFormula) -> MaybeFormula {
        match (self, rhs) {
            (MaybeFormula::Present(l), MaybeFormula::Present(r)) => {
                MaybeFormula::Present(Formula::or(l, r))
            }
            (MaybeFormula::Empty, r) => r,
            (l, MaybeFormula::Empty) => l,
        }
    }

    pub fn present(self) -> Option<Formula> {
        match self {
            MaybeFormula::Present(f) => Some(f),
            MaybeFormula::Empty => None,
        }
    }
}

/// All part occurrences, depth first, parent before children.
pub fn enumerate_parts(f: &Formula) -> Vec<Part<'_>> {
    let mut out = Vec::new();
    collect(f, OccurrencePath::root(), Polarity::Positive, &mut out);
    out
}

fn collect<'a>(f: &'a Formula, path: OccurrencePath, pol: Polarity, out: &mut Vec<Part<'a>>) {
    out.push(Part {
        path: path.clone(),
        formula: f,
    });
    match (f, pol) {
        (Formula::Or(l, r), Polarity::Positive) => {
            collect(l, path.child(Step::OrLeft), pol, out);
            collect(r, path.child(Step::OrRight), pol, out);
        }
        (Formula::Not(a), _) => collect(a, path.child(Step::Not), pol.flip(), out),
        _ => {}
    }
}

/// Parts of the given polarity.
pub fn parts_with(f: &Formula, polarity: Polarity) -> Vec<Part<'_>> {
    enumerate_parts(f)
        .into_iter()
        .filter(|p| p.polarity() == polarity)
        .collect()
}

/// Distinct formulas occurring as negative parts.
pub fn negative_set(f: &Formula) -> HashSet<&Formula> {
    enumerate_parts(f)
        .into_iter()
        .filter(|p| p.polarity() == Polarity::Negative)
        .map(|p| p.formula)
        .collect()
}

/// Follows a path to the subformula it addresses.
pub fn subformula_at<'a>(f: &'a Formula, occ: &OccurrencePath) -> Result<&'a Formula, PartsError> {
    let mut cur = f;
    for step in occ.steps() {
        cur = match (step, cur) {
            (Step::OrLeft, Formula::Or(l, _)) => l,
            (Step::OrRight, Formula::Or(_, r)) => r,
            (Step::Not, Formula::Not(a)) => a,
            _ => return Err(PartsError::InvalidOccurrence),
        };
    }
    Ok(cur)
}

/// Removes the addressed part occurrence.
pub fn remove(f: &Formula, occ: &OccurrencePath) -> Result<MaybeFormula, PartsError> {
    // Re-validate in case the path was assembled by hand.
    OccurrencePath::from_steps(occ.steps().to_vec())?;
    remove_steps(f, occ.steps())
}

fn remove_steps(f: &Formula, steps: &[Step]) -> Result<MaybeFormula, PartsError> {
    let Some((step, rest)) = steps.split_first() else {
        return Ok(MaybeFormula::Empty);
    };
    match (step, f) {
        (Step::OrLeft, Formula::Or(l, r)) => {
            Ok(remove_steps(l, rest)?.or_maybe(MaybeFormula::Present((**r).clone())))
        }
        (Step::OrRight, Formula::Or(l, r)) => {
            Ok(MaybeFormula::Present((**l).clone()).or_maybe(remove_steps(r, rest)?))
        }
        (Step::Not, Formula::Not(a)) => Ok(match remove_steps(a, rest)? {
            MaybeFormula::Present(g) => MaybeFormula::Present(Formula::not(g)),
            MaybeFormula::Empty => MaybeFormula::Empty,
        }),
        _ => Err(PartsError::InvalidOccurrence),
    }
}

/// Replaces the addressed occurrence by `replacement`.
pub fn replace_at(
    f: &Formula,
    occ: &OccurrencePath,
    replacement: Formula,
) -> Result<Formula, PartsError> {
    fn go(f: &Formula, steps: &[Step], replacement: Formula) -> Result<Formula, PartsError> {
        let Some((step, rest)) = steps.split_first() else {
            return Ok(replacement);
        };
        match (step, f) {
            (Step::OrLeft, Formula::Or(l, r)) => {
                Ok(Formula::or(go(l, rest, replacement)?, (**r).clone()))
            }
            (Step::OrRight, Formula::Or(l, r)) => {
                Ok(Formula::or((**l).clone(), go(r, rest, replacement)?))
            }
            (Step::Not, Formula::Not(a)) => Ok(Formula::not(go(a, rest, replacement)?)),
            _ => Err(PartsError::InvalidOccurrence),
        }
    }
    go(f, occ.steps(), replacement)
}

/// Parts containing no proper part: atoms of either polarity and negative
/// disjunctions.
pub fn minimal_parts(f: &Formula) -> Vec<Part<'_>> {
    enumerate_parts(f)
        .into_iter()
        .filter(|p| match p.formula {
            Formula::Eps(..) => true,
            Formula::Or(..) => p.polarity() == Polarity::Negative,
            Formula::Not(_) => false,
        })
        .collect()
}

/// Minimal positive parts as they are, minimal negative parts negated, in
/// left-to-right order. Their disjunction is equivalent to `f`.
pub fn flatten(f: &Formula) -> Vec<Formula> {
    minimal_parts(f)
        .into_iter()
        .map(|p| match p.polarity() {
            Polarity::Positive => p.formula.clone(),
            Polarity::Negative => Formula::not(p.formula.clone()),
        })
        .collect()
}

/// A formula occurring both as a positive and as a negative part.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Closure {
    pub formula: Formula,
    pub positive: OccurrencePath,
    pub negative: OccurrencePath,
}

/// Finds a closure pair, preferring the smallest shared formula (by size,
/// then rendering) and the leftmost occurrences of it.
pub fn find_closure(f: &Formula) -> Option<Closure> {
    let parts = enumerate_parts(f);
    let negatives: HashSet<&Formula> = parts
        .iter()
        .filter(|p| p.polarity() == Polarity::Negative)
        .map(|p| p.formula)
        .collect();
    let best = parts
        .iter()
        .filter(|p| p.polarity() == Polarity::Positive && negatives.contains(p.formula))
        .map(|p| p.formula)
        .min_by_key(|g| (g.size(), g.to_string()))?;
    let first = |pol: Polarity| {
        parts
            .iter()
            .find(|p| p.polarity() == pol && p.formula == best)
            .map(|p| p.path.clone())
            .expect("occurrence exists")
    };
    Some(Closure {
        formula: best.clone(),
        positive: first(Polarity::Positive),
        negative: first(Polarity::Negative),
    })
}

/// Cheap closure test without building a witness.
pub fn is_closed(f: &Formula) -> bool {
    let parts = enumerate_parts(f);
    let negatives: HashSet<&Formula> = parts
        .iter()
        .filter(|p| p.polarity() == Polarity::Negative)
        .map(|p| p.formula)
        .collect();
    parts
        .iter()
        .any(|p| p.polarity() == Polarity::Positive && negatives.contains(p.formula))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_formula, NameVar};

    fn f(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }
    fn e(a: &str, b: &str) -> Formula {
        Formula::eps(&NameVar::new(a).unwrap(), &NameVar::new(b).unwrap())
    }
    fn path(s: &str) -> OccurrencePath {
        s.parse().unwrap()
    }

    #[test]
    fn parts_of_double_negation() {
        // ∼∼A ∨ B with A = εab, B = εbc
        let g = f("~~eps(a,b) | eps(b,c)");
        let parts = enumerate_parts(&g);
        let pos: Vec<String> = parts
            .iter()
            .filter(|p| p.polarity() == Polarity::Positive)
            .map(|p| p.formula.to_string())
            .collect();
        let neg: Vec<String> = parts
            .iter()
            .filter(|p| p.polarity() == Polarity::Negative)
            .map(|p| p.formula.to_string())
            .collect();
        assert_eq!(pos, vec!["∼∼εab ∨ εbc", "∼∼εab", "εab", "εbc"]);
        assert_eq!(neg, vec!["∼εab"]);
    }

    #[test]
    fn triple_negation_gives_negative_part() {
        let g = f("~~~eps(a,b) | eps(b,c)");
        let a = e("a", "b");
        assert!(enumerate_parts(&g)
            .iter()
            .any(|p| p.formula == &a && p.polarity() == Polarity::Negative));
    }

    #[test]
    fn atom_has_only_itself() {
        let g = e("a", "b");
        let parts = enumerate_parts(&g);
        assert_eq!(parts.len(), 1);
        assert_eq!(parts[0].polarity(), Polarity::Positive);
    }

    #[test]
    fn negative_or_is_not_entered() {
        assert!(OccurrencePath::from_steps(vec![Step::Not, Step::OrLeft]).is_err());
        assert!(OccurrencePath::from_steps(vec![Step::Not, Step::Not, Step::OrLeft]).is_ok());
    }

    #[test]
    fn removal_examples() {
        let (a, b, c) = (e("a", "a"), e("b", "b"), e("c", "c"));
        // (A ∨ B) ∨ C, remove A
        let g = Formula::or(Formula::or(a.clone(), b.clone()), c.clone());
        assert_eq!(
            remove(&g, &path("LL")).unwrap(),
            MaybeFormula::Present(Formula::or(b.clone(), c.clone()))
        );
        // ∼∼A ∨ B, remove A
        let g = Formula::or(Formula::not(Formula::not(a.clone())), b.clone());
        assert_eq!(
            remove(&g, &path("LNN")).unwrap(),
            MaybeFormula::Present(b.clone())
        );
        // ∼∼∼A, remove A
        let g = Formula::not(Formula::not(Formula::not(a.clone())));
        assert_eq!(remove(&g, &path("NNN")).unwrap(), MaybeFormula::Empty);
        // ∼∼(∼A ∨ B), remove A
        let g = Formula::not(Formula::not(Formula::or(
            Formula::not(a.clone()),
            b.clone(),
        )));
        assert_eq!(
            remove(&g, &path("NNLN")).unwrap(),
            MaybeFormula::Present(Formula::not(Formula::not(b.clone())))
        );
        // whole formula
        assert_eq!(
            remove(&a, &OccurrencePath::root()).unwrap(),
            MaybeFormula::Empty
        );
    }

    #[test]
    fn removal_rejects_bad_paths() {
        let g = f("~(eps(a,b) | eps(b,c))");
        assert!(matches!(
            remove(
                &g,
                &OccurrencePath {
                    steps: vec![Step::Not, Step::OrLeft]
                }
            ),
            Err(PartsError::NotAPart { .. })
        ));
        assert_eq!(remove(&g, &path("L")), Err(PartsError::InvalidOccurrence));
    }

    #[test]
    fn minimal_parts_examples() {
        let g = f("~eps(a,b) | eps(b,a) | ~eps(a,a)");
        let m: Vec<(String, Polarity)> = minimal_parts(&g)
            .iter()
            .map(|p| (p.formula.to_string(), p.polarity()))
            .collect();
        assert_eq!(
            m,
            vec![
                ("εab".into(), Polarity::Negative),
                ("εba".into(), Polarity::Positive),
                ("εaa".into(), Polarity::Negative),
            ]
        );

        let g = f("~(eps(a,b) | ~eps(b,c)) | ~eps(a,c)");
        let m: Vec<(String, Polarity)> = minimal_parts(&g)
            .iter()
            .map(|p| (p.formula.to_string(), p.polarity()))
            .collect();
        assert_eq!(
            m,
            vec![
                ("εab ∨ ∼εbc".into(), Polarity::Negative),
                ("εac".into(), Polarity::Negative),
            ]
        );

        let atom = e("a", "a");
        let m = minimal_parts(&atom);
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].polarity(), Polarity::Positive);
    }

    #[test]
    fn flatten_examples() {
        let render = |g: &Formula| flatten(g).iter().map(|x| x.to_string()).collect::<Vec<_>>();
        assert_eq!(
            render(&f("~~~eps(a,b) | ~~eps(b,a) | ~eps(a,a)")),
            vec!["∼εab", "εba", "∼εaa"]
        );
        assert_eq!(
            render(&f(
                "~(eps(a,b) | ~eps(b,c)) | ~~~eps(a,c) | ~~eps(b,c) | ~eps(a,a)"
            )),
            vec!["∼(εab ∨ ∼εbc)", "∼εac", "εbc", "∼εaa"]
        );
        assert_eq!(render(&e("a", "a")), vec!["εaa"]);
    }

    #[test]
    fn closure_examples() {
        let g = f("(~eps(a,b) | eps(a,a)) | ~eps(a,a)");
        let c = find_closure(&g).unwrap();
        assert_eq!(c.formula, e("a", "a"));
        assert_eq!(c.positive, path("LR"));
        assert_eq!(c.negative, path("RN"));
        assert!(is_closed(&g));

        assert!(find_closure(&f("~eps(a,b) | eps(b,a)")).is_none());

        let a = f("eps(a,b) | eps(b,c)");
        let g = Formula::or(Formula::not(a.clone()), a.clone());
        let c = find_closure(&g).unwrap();
        assert_eq!(c.formula, a);
    }

    #[test]
    fn closure_prefers_smallest_formula() {
        // Both εab and ∼εab ∨ ... occur with both polarities; the atom wins.
        let g = f("~(eps(a,b) | eps(b,b)) | (eps(a,b) | eps(b,b)) | ~eps(a,b) | eps(a,b)");
        assert_eq!(find_closure(&g).unwrap().formula, e("a", "b"));
    }

    #[test]
    fn replace_at_fills_hole() {
        let g = f("~~eps(a,b) | eps(b,c)");
        let h = replace_at(&g, &path("LNN"), e("c", "c")).unwrap();
        assert_eq!(h, f("~~eps(c,c) | eps(b,c)"));
    }
}
