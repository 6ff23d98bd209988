//! Formula and model generators for exhaustive and randomized testing.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::model::{L1Model, NameValue};
use crate::parts::{enumerate_parts, OccurrencePath, Polarity};
use crate::syntax::{desugar, substitute, Formula, NameVar, Substitution, SurfaceFormula};

/// The first `n` variables `a, b, c, …`.
pub fn var_names(n: usize) -> Vec<NameVar> {
    (0..n)
        .map(|i| {
            let c = (b'a' + i as u8) as char;
            NameVar::new(&c.to_string()).expect("single letter")
        })
        .collect()
}

/// All atoms over the variables, row by row.
pub fn atoms(vars: &[NameVar]) -> Vec<Formula> {
    vars.iter()
        .flat_map(|a| vars.iter().map(move |b| Formula::eps(a, b)))
        .collect()
}

fn key_cmp(l: &Formula, r: &Formula) -> Ordering {
    l.connectives().cmp(&r.connectives()).then_with(|| l.cmp(r))
}

/// Orders the operands of every disjunction, smaller first.
pub fn commutative_normal_form(f: &Formula) -> Formula {
    match f {
        Formula::Eps(..) => f.clone(),
        Formula::Not(a) => Formula::not(commutative_normal_form(a)),
        Formula::Or(l, r) => {
            let (l, r) = (commutative_normal_form(l), commutative_normal_form(r));
            if key_cmp(&l, &r) == Ordering::Greater {
                Formula::or(r, l)
            } else {
                Formula::or(l, r)
            }
        }
    }
}

/// Whether no renaming of `vars` yields a smaller commutative normal form.
fn renaming_minimal(f: &Formula, renamings: &[Substitution]) -> bool {
    renamings
        .iter()
        .all(|map| key_cmp(f, &commutative_normal_form(&substitute(f, map))) != Ordering::Greater)
}

fn permutations(vars: &[NameVar]) -> Vec<Substitution> {
    fn go(rest: &mut Vec<NameVar>, acc: &mut Vec<NameVar>, out: &mut Vec<Vec<NameVar>>) {
        if rest.is_empty() {
            out.push(acc.clone());
            return;
        }
        for i in 0..rest.len() {
            let v = rest.remove(i);
            acc.push(v.clone());
            go(rest, acc, out);
            acc.pop();
            rest.insert(i, v);
        }
    }
    let mut perms = Vec::new();
    go(&mut vars.to_vec(), &mut Vec::new(), &mut perms);
    perms
        .into_iter()
        .map(|p| {
            vars.iter()
                .cloned()
                .zip(p)
                .filter(|(a, b)| a != b)
                .collect::<Substitution>()
        })
        .filter(|m| !m.is_empty())
        .collect()
}

/// Every formula over `n_vars` variables with at most `max_connectives`
/// occurrences of `∨` and `∼`, one per class under commuting disjuncts and
/// renaming variables. Visits in order of connective count.
pub fn for_each_canonical(n_vars: usize, max_connectives: usize, mut visit: impl FnMut(&Formula)) {
    let vars = var_names(n_vars);
    let renamings = permutations(&vars);
    // levels[n]: all commutative normal forms with exactly n connectives, sorted.
    let mut levels: Vec<Vec<Formula>> = Vec::new();
    for n in 0..=max_connectives {
        let store = n < max_connectives;
        let mut level: Vec<Formula> = Vec::new();
        let mut emit = |f: Formula| {
            if renaming_minimal(&f, &renamings) {
                visit(&f);
            }
            if store {
                level.push(f);
            }
        };
        if n == 0 {
            atoms(&vars).into_iter().for_each(&mut emit);
        } else {
            for g in &levels[n - 1] {
                emit(Formula::not(g.clone()));
            }
            for i in 0..n {
                let j = n - 1 - i;
                if i > j {
                    break;
                }
                let (li, lj) = (&levels[i], &levels[j]);
                for (p, l) in li.iter().enumerate() {
                    let start = if i == j { p } else { 0 };
                    for r in &lj[start..] {
                        emit(Formula::or(l.clone(), r.clone()));
                    }
                }
            }
        }
        level.sort();
        levels.push(level);
    }
}

/// Collects [`for_each_canonical`].
pub fn canonical_formulas(n_vars: usize, max_connectives: usize) -> Vec<Formula> {
    let mut out = Vec::new();
    for_each_canonical(n_vars, max_connectives, |f| out.push(f.clone()));
    out
}

/// Random surface formula (all five connectives) of depth at most `depth`,
/// desugared.
pub fn random_formula<R: Rng>(rng: &mut R, vars: &[NameVar], depth: usize) -> Formula {
    desugar(&random_surface(rng, vars, depth))
}

pub fn random_surface<R: Rng>(rng: &mut R, vars: &[NameVar], depth: usize) -> SurfaceFormula {
    let atom = |rng: &mut R| {
        SurfaceFormula::Eps(
            vars.choose(rng).expect("variables").clone(),
            vars.choose(rng).expect("variables").clone(),
        )
    };
    if depth == 0 || rng.gen_bool(0.2) {
        return atom(rng);
    }
    let sub = |rng: &mut R| Box::new(random_surface(rng, vars, depth - 1));
    match rng.gen_range(0..10) {
        0..=2 => SurfaceFormula::Not(sub(rng)),
        3..=5 => SurfaceFormula::Or(sub(rng), sub(rng)),
        6 | 7 => SurfaceFormula::And(sub(rng), sub(rng)),
        8 => SurfaceFormula::Implies(sub(rng), sub(rng)),
        _ => SurfaceFormula::Iff(sub(rng), sub(rng)),
    }
}

/// Random core formula (`∨`, `∼` only) of depth at most `depth`.
pub fn random_core<R: Rng>(rng: &mut R, vars: &[NameVar], depth: usize) -> Formula {
    if depth == 0 || rng.gen_bool(0.25) {
        return Formula::eps(
            vars.choose(rng).expect("variables"),
            vars.choose(rng).expect("variables"),
        );
    }
    if rng.gen_bool(0.4) {
        Formula::not(random_core(rng, vars, depth - 1))
    } else {
        Formula::or(
            random_core(rng, vars, depth - 1),
            random_core(rng, vars, depth - 1),
        )
    }
}

/// A random formula together with a non-root part occurrence of the given
/// polarity, or `None` if the formula has no such part.
pub fn random_context<R: Rng>(
    rng: &mut R,
    vars: &[NameVar],
    depth: usize,
    polarity: Polarity,
) -> Option<(Formula, OccurrencePath)> {
    let f = random_core(rng, vars, depth);
    let paths: Vec<OccurrencePath> = enumerate_parts(&f)
        .into_iter()
        .filter(|p| p.polarity() == polarity && !p.path.is_empty())
        .map(|p| p.path)
        .collect();
    let path = paths.choose(rng)?.clone();
    Some((f, path))
}

/// Every disjunction of literals over the variables with each atom absent,
/// positive or negated (atoms in row order), skipping the empty one.
pub fn literal_disjunctions(vars: &[NameVar]) -> impl Iterator<Item = Formula> {
    let atoms = atoms(vars);
    let total = 3usize.pow(atoms.len() as u32);
    (1..total).map(move |mut code| {
        let mut lits = Vec::new();
        for a in &atoms {
            match code % 3 {
                1 => lits.push(a.clone()),
                2 => lits.push(Formula::not(a.clone())),
                _ => {}
            }
            code /= 3;
        }
        Formula::disjoin(lits).expect("non-empty")
    })
}

/// Random assignment of subsets of `{1, …, universe}` to the variables, plus
/// up to `anonymous` extra unnamed values.
pub fn random_model<R: Rng>(
    rng: &mut R,
    vars: &[NameVar],
    universe: u32,
    anonymous: usize,
) -> L1Model {
    let subset = |rng: &mut R| NameValue::from_mask(rng.gen_range(0..1u32 << universe));
    let assignment: BTreeMap<NameVar, NameValue> =
        vars.iter().map(|v| (v.clone(), subset(rng))).collect();
    let mut m = L1Model::from_assignment(assignment);
    let extra: BTreeSet<NameValue> = (0..rng.gen_range(0..=anonymous))
        .map(|_| subset(rng))
        .collect();
    m.anonymous = extra
        .into_iter()
        .filter(|v| !m.assignment.values().any(|w| w == v))
        .collect();
    m.universe.extend(
        m.anonymous
            .iter()
            .flat_map(|v| v.elements().iter().copied()),
    );
    m
}
