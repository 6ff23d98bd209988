//! Translation into first-order logic with equality.
//!
//! Each name variable `v` becomes a monadic predicate `F_v`, and `εab` becomes
//! the Russellian reading "the F_a is F_b":
//! `∃x(F_a x ∧ F_b x) ∧ ∀x∀y(F_a x ∧ F_a y ⊃ x = y)`.
//!
//! The module also holds a brute-force validity oracle over subset
//! assignments, used to cross-check the tableau engine.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use thiserror::Error;

use crate::model::{eval, L1Model, NameValue};
use crate::syntax::{variables, Formula, NameVar};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum FolFormula {
    Pred(NameVar, String),
    Equals(String, String),
    Or(Box<FolFormula>, Box<FolFormula>),
    And(Box<FolFormula>, Box<FolFormula>),
    Not(Box<FolFormula>),
    Implies(Box<FolFormula>, Box<FolFormula>),
    Exists(String, Box<FolFormula>),
    Forall(String, Box<FolFormula>),
}

use FolFormula as F;

fn and(l: FolFormula, r: FolFormula) -> FolFormula {
    F::And(Box::new(l), Box::new(r))
}

/// The description expansion of `εab`, with bound variables `x{k}`, `y{k}`.
pub fn describe(a: &NameVar, b: &NameVar, k: usize) -> FolFormula {
    let x = format!("x{k}");
    let y = format!("y{k}");
    let exists = F::Exists(
        x.clone(),
        Box::new(and(
            F::Pred(a.clone(), x.clone()),
            F::Pred(b.clone(), x.clone()),
        )),
    );
    let unique = F::Forall(
        x.clone(),
        Box::new(F::Forall(
            y.clone(),
            Box::new(F::Implies(
                Box::new(and(
                    F::Pred(a.clone(), x.clone()),
                    F::Pred(a.clone(), y.clone()),
                )),
                Box::new(F::Equals(x, y)),
            )),
        )),
    );
    and(exists, unique)
}

/// Homomorphic on `∨` and `∼`; the k-th atom occurrence (from 1, left to
/// right) uses bound variables `xk`, `yk`.
pub fn t_transform(f: &Formula) -> FolFormula {
    fn go(f: &Formula, k: &mut usize) -> FolFormula {
        match f {
            Formula::Eps(a, b) => {
                *k += 1;
                describe(a, b, *k)
            }
            Formula::Or(l, r) => {
                let l = go(l, k);
                F::Or(Box::new(l), Box::new(go(r, k)))
            }
            Formula::Not(a) => F::Not(Box::new(go(a, k))),
        }
    }
    go(f, &mut 0)
}

/// Plain ASCII rendering: `exists x1. (...)`, `forall`, `&`, `|`, `->`, `~`, `=`.
impl fmt::Display for FolFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            F::Pred(p, x) => write!(f, "F_{p}({x})"),
            F::Equals(x, y) => write!(f, "{x} = {y}"),
            F::Or(l, r) => write!(f, "({l} | {r})"),
            F::And(l, r) => write!(f, "({l} & {r})"),
            F::Implies(l, r) => write!(f, "({l} -> {r})"),
            F::Not(a) => write!(f, "~{a}"),
            F::Exists(x, b) => write!(f, "(exists {x}. {b})"),
            F::Forall(x, b) => write!(f, "(forall {x}. {b})"),
        }
    }
}

impl FolFormula {
    /// TPTP first-order syntax for the body of a `fof` annotated formula.
    pub fn to_tptp(&self) -> String {
        fn var(x: &str) -> String {
            x.to_uppercase()
        }
        match self {
            F::Pred(p, x) => format!("f_{}({})", p, var(x)),
            F::Equals(x, y) => format!("{} = {}", var(x), var(y)),
            F::Or(l, r) => format!("({} | {})", l.to_tptp(), r.to_tptp()),
            F::And(l, r) => format!("({} & {})", l.to_tptp(), r.to_tptp()),
            F::Implies(l, r) => format!("({} => {})", l.to_tptp(), r.to_tptp()),
            F::Not(a) => format!("~ {}", a.to_tptp()),
            F::Exists(x, b) => format!("(? [{}] : {})", var(x), b.to_tptp()),
            F::Forall(x, b) => format!("(! [{}] : {})", var(x), b.to_tptp()),
        }
    }
}

/// A complete `fof(name, conjecture, ...)` line.
pub fn tptp_conjecture(name: &str, phi: &FolFormula) -> String {
    format!("fof({name}, conjecture, {}).", phi.to_tptp())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FolStructure {
    pub domain: BTreeSet<u32>,
    /// Extension of each predicate; predicates not listed are empty.
    pub interpretation: BTreeMap<NameVar, BTreeSet<u32>>,
}

impl FolStructure {
    /// The structure on the model's universe whose predicates are the
    /// model's name values.
    pub fn from_model(m: &L1Model) -> Self {
        FolStructure {
            domain: m.universe.clone(),
            interpretation: m
                .assignment
                .iter()
                .map(|(k, v)| (k.clone(), v.elements().clone()))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FolError {
    #[error("unbound individual variable `{0}`")]
    UnboundVariable(String),
}

pub fn eval_fol(s: &FolStructure, phi: &FolFormula) -> Result<bool, FolError> {
    fn go<'a>(
        s: &FolStructure,
        phi: &'a FolFormula,
        env: &mut Vec<(&'a str, u32)>,
    ) -> Result<bool, FolError> {
        let lookup = |env: &Vec<(&str, u32)>, x: &str| {
            env.iter()
                .rev()
                .find(|(n, _)| *n == x)
                .map(|(_, v)| *v)
                .ok_or_else(|| FolError::UnboundVariable(x.to_string()))
        };
        Ok(match phi {
            F::Pred(p, x) => {
                let val = lookup(env, x)?;
                s.interpretation
                    .get(p)
                    .is_some_and(|ext| ext.contains(&val))
            }
            F::Equals(x, y) => lookup(env, x)? == lookup(env, y)?,
            F::Or(l, r) => go(s, l, env)? || go(s, r, env)?,
            F::And(l, r) => go(s, l, env)? && go(s, r, env)?,
            F::Implies(l, r) => !go(s, l, env)? || go(s, r, env)?,
            F::Not(a) => !go(s, a, env)?,
            F::Exists(x, b) | F::Forall(x, b) => {
                let universal = matches!(phi, F::Forall(..));
                for &d in &s.domain {
                    env.push((x, d));
                    let v = go(s, b, env);
                    env.pop();
                    if v? != universal {
                        return Ok(!universal);
                    }
                }
                universal
            }
        })
    }
    go(s, phi, &mut Vec::new())
}

/// Truth of the expanded description of `εab` with `F_a`, `F_b` interpreted
/// by the given values over `universe`.
pub fn atom_semantics_equivalence(
    a_val: &NameValue,
    b_val: &NameValue,
    universe: &BTreeSet<u32>,
) -> bool {
    let a = NameVar::new("a").expect("valid");
    let b = NameVar::new("b").expect("valid");
    let s = FolStructure {
        domain: universe.clone(),
        interpretation: BTreeMap::from([
            (a.clone(), a_val.elements().clone()),
            (b.clone(), b_val.elements().clone()),
        ]),
    };
    eval_fol(&s, &describe(&a, &b, 1)).expect("closed sentence")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("{vars} variables exceed the oracle limit of {cap}")]
    ResourceLimit { vars: usize, cap: usize },
}

pub const DEFAULT_ORACLE_CAP: usize = 4;

/// Validity over every assignment of subsets of `{1, …, 2v}` to the `v`
/// variables of `f`, for `v` up to [`DEFAULT_ORACLE_CAP`].
pub fn oracle_valid(f: &Formula) -> Result<bool, OracleError> {
    oracle_valid_with(f, DEFAULT_ORACLE_CAP, 2)
}

/// As [`oracle_valid`] with an explicit variable cap and universe size
/// `factor * v`.
pub fn oracle_valid_with(f: &Formula, cap: usize, factor: usize) -> Result<bool, OracleError> {
    let vars = variables(f);
    let v = vars.len();
    if v > cap {
        return Err(OracleError::ResourceLimit { vars: v, cap });
    }
    let index: HashMap<&NameVar, usize> = vars.iter().enumerate().map(|(i, x)| (x, i)).collect();
    let table = realizable_valuations(v, factor * v);
    Ok(table.iter().all(|&val| eval_mask(f, &index, v, val)))
}

fn eval_mask(f: &Formula, index: &HashMap<&NameVar, usize>, v: usize, val: u64) -> bool {
    match f {
        Formula::Eps(a, b) => val >> (index[a] * v + index[b]) & 1 == 1,
        Formula::Or(l, r) => eval_mask(l, index, v, val) || eval_mask(r, index, v, val),
        Formula::Not(a) => !eval_mask(a, index, v, val),
    }
}

type ValuationTable = Arc<Vec<u64>>;

/// Every truth assignment to the `v * v` atoms `ε(i, j)` (bit `i * v + j`)
/// induced by some assignment of subsets of an `n`-element universe.
///
/// An assignment is determined by which variables each element belongs to
/// (its type, a `v`-bit mask). Atom truth is invariant under permuting
/// elements, so it suffices to enumerate multisets of `n` types.
pub fn realizable_valuations(v: usize, n: usize) -> ValuationTable {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), ValuationTable>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(t) = cache.lock().expect("cache lock").get(&(v, n)) {
        return t.clone();
    }
    let mut seen = HashSet::new();
    let mut types = Vec::with_capacity(n);
    enumerate_multisets(v, n, 0, &mut types, &mut |types| {
        seen.insert(valuation_of_types(v, types));
    });
    let mut table: Vec<u64> = seen.into_iter().collect();
    table.sort_unstable();
    let table = Arc::new(table);
    cache
        .lock()
        .expect("cache lock")
        .insert((v, n), table.clone());
    table
}

fn enumerate_multisets(
    v: usize,
    n: usize,
    min: u32,
    acc: &mut Vec<u32>,
    visit: &mut impl FnMut(&[u32]),
) {
    if acc.len() == n {
        visit(acc);
        return;
    }
    for t in min..(1u32 << v) {
        acc.push(t);
        enumerate_multisets(v, n, t, acc, visit);
        acc.pop();
    }
}

fn valuation_of_types(v: usize, types: &[u32]) -> u64 {
    let mut val = 0u64;
    for a in 0..v {
        let mut holders = types.iter().filter(|t| *t >> a & 1 == 1);
        if let (Some(&only), None) = (holders.next(), holders.next()) {
            for b in 0..v {
                if only >> b & 1 == 1 {
                    val |= 1 << (a * v + b);
                }
            }
        }
    }
    val
}

/// Reference oracle: every subset assignment over `{1, …, n}`, evaluated
/// through [`crate::model::eval`]. Exponential in `n * v`; for cross-checks.
pub fn oracle_valid_exhaustive(f: &Formula, n: usize) -> bool {
    let vars = variables(f);
    let v = vars.len();
    let width = n * v;
    assert!(width < 32, "exhaustive oracle limited to 31 bits");
    (0u32..1 << width).all(|code| {
        let assignment = vars
            .iter()
            .enumerate()
            .map(|(i, x)| {
                (
                    x.clone(),
                    NameValue::from_mask(code >> (i * n) & ((1 << n) - 1)),
                )
            })
            .collect();
        eval(&L1Model::from_assignment(assignment), f)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_model, eps_holds};
    use crate::syntax::parse_formula;

    fn f(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    fn val(items: &[u32]) -> NameValue {
        NameValue::from_iter(items.iter().copied())
    }

    #[test]
    fn atom_expansion_text() {
        assert_eq!(
            t_transform(&f("eps(a,b)")).to_string(),
            "((exists x1. (F_a(x1) & F_b(x1))) & (forall x1. (forall y1. ((F_a(x1) & F_a(y1)) -> x1 = y1))))"
        );
    }

    #[test]
    fn transform_is_homomorphic() {
        let t = t_transform(&f("~eps(a,b) | eps(b,a)"));
        let F::Or(l, r) = t else {
            panic!("expected disjunction")
        };
        assert_eq!(
            *l,
            F::Not(Box::new(describe(
                &NameVar::new("a").unwrap(),
                &NameVar::new("b").unwrap(),
                1
            )))
        );
        assert_eq!(
            *r,
            describe(&NameVar::new("b").unwrap(), &NameVar::new("a").unwrap(), 2)
        );
    }

    #[test]
    fn tptp_line() {
        let line = tptp_conjecture("goal", &t_transform(&f("~eps(a,a)")));
        assert_eq!(
            line,
            "fof(goal, conjecture, ~ ((? [X1] : (f_a(X1) & f_a(X1))) & (! [X1] : (! [Y1] : ((f_a(X1) & f_a(Y1)) => X1 = Y1)))))."
        );
    }

    #[test]
    fn evaluator_examples() {
        let a = NameVar::new("a").unwrap();
        let b = NameVar::new("b").unwrap();
        let s = FolStructure {
            domain: BTreeSet::from([1, 2]),
            interpretation: BTreeMap::from([
                (a.clone(), BTreeSet::from([1])),
                (b.clone(), BTreeSet::from([1, 2])),
            ]),
        };
        assert_eq!(eval_fol(&s, &t_transform(&f("eps(a,b)"))), Ok(true));
        assert_eq!(
            eval_fol(&s, &t_transform(&f("~eps(a,b) | eps(a,a)"))),
            Ok(true)
        );

        let s = FolStructure {
            domain: BTreeSet::from([1]),
            interpretation: BTreeMap::new(),
        };
        assert_eq!(eval_fol(&s, &t_transform(&f("eps(a,a)"))), Ok(false));
        assert_eq!(
            eval_fol(&s, &F::Pred(a, "z".into())),
            Err(FolError::UnboundVariable("z".into()))
        );
    }

    #[test]
    fn description_matches_singleton_membership() {
        let universe: BTreeSet<u32> = (1..=4).collect();
        for x in 0u32..16 {
            for y in 0u32..16 {
                let (a, b) = (NameValue::from_mask(x), NameValue::from_mask(y));
                assert_eq!(
                    atom_semantics_equivalence(&a, &b, &universe),
                    eps_holds(&a, &b)
                );
            }
        }
        assert!(atom_semantics_equivalence(
            &val(&[1]),
            &val(&[1, 2]),
            &universe
        ));
        assert!(!atom_semantics_equivalence(
            &val(&[]),
            &val(&[1]),
            &universe
        ));
        assert!(!atom_semantics_equivalence(
            &val(&[1, 2]),
            &val(&[1, 2]),
            &universe
        ));
    }

    #[test]
    fn oracle_examples() {
        for src in [
            "~eps(a,b) | eps(a,a)",
            "eps(a,b) & eps(b,c) -> eps(a,c)",
            "eps(a,b) & eps(b,b) -> eps(b,a)",
        ] {
            assert_eq!(oracle_valid(&f(src)), Ok(true), "{src}");
        }
        assert_eq!(
            oracle_valid(&f("eps(a,b) | eps(b,c) -> eps(a,a)")),
            Ok(false)
        );
        assert_eq!(oracle_valid(&f("eps(a,a)")), Ok(false));
        assert_eq!(
            oracle_valid(&f("eps(a,b) | eps(c,d) | eps(e,a)")),
            Err(OracleError::ResourceLimit { vars: 5, cap: 4 })
        );
    }

    #[test]
    fn reduced_oracle_agrees_with_exhaustive() {
        for src in [
            "~eps(a,b) | eps(a,a)",
            "eps(a,b) | eps(b,c) -> eps(a,a)",
            "eps(a,b) & eps(b,a) -> eps(a,a) & eps(b,b)",
            "eps(a,b) & eps(c,b) -> eps(a,c) | ~eps(b,b)",
            "~eps(a,b) | ~eps(b,a)",
        ] {
            let g = f(src);
            let n = 2 * variables(&g).len();
            assert_eq!(
                oracle_valid(&g).unwrap(),
                oracle_valid_exhaustive(&g, n),
                "{src}"
            );
        }
    }

    #[test]
    fn larger_universe_realizes_nothing_new() {
        for v in 1..=3 {
            assert_eq!(
                realizable_valuations(v, 2 * v),
                realizable_valuations(v, 2 * v + 2),
                "v = {v}"
            );
        }
    }

    #[test]
    fn fol_structure_agrees_with_model() {
        let h = f("~eps(a,b) | ~eps(b,c) | ~eps(a,c) | ~eps(b,a) | ~eps(a,a) | ~eps(b,b)");
        let m = build_model(&h).unwrap();
        let s = FolStructure::from_model(&m);
        assert_eq!(eval_fol(&s, &t_transform(&h)), Ok(false));
    }
}
