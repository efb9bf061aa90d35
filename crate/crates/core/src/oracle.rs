//! Slow reference implementations used to cross-check the fast paths.
//!
//! Nothing here shares code with the engine beyond the model tables: terms
//! are evaluated by symbol lookup, satisfaction follows the Tarskian
//! recursion, closures are computed from their definitions.

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::error::{Error, Result};
use crate::halmos::DefSet;
use crate::model::{decode_index, Elem, FiniteModel, Odometer};
use crate::syntax::{Formula, Sort, Term};

/// Largest tuple space `n^(|X|+k)` the rank-type oracle will enumerate.
pub const RANK_TYPE_CAP: usize = 1 << 21;

fn eval(model: &FiniteModel, term: &Term, env: &[(String, Elem)]) -> Elem {
    match term {
        Term::Var(v) => env.iter().rev().find(|(name, _)| name == v).map(|(_, a)| *a).expect("bound variable"),
        Term::Op(name, args) => {
            let (k, _) = model.sig().lookup(name).expect("known operation");
            let vals: Vec<Elem> = args.iter().map(|a| eval(model, a, env)).collect();
            model.apply(k, &vals)
        }
    }
}

fn sat(model: &FiniteModel, u: &Formula, env: &mut Vec<(String, Elem)>) -> bool {
    match u {
        Formula::Eq(a, b) => eval(model, a, env) == eval(model, b, env),
        Formula::Rel(name, args) => {
            let (r, _) = model.rels().lookup(name).expect("known relation");
            let vals: Vec<Elem> = args.iter().map(|a| eval(model, a, env)).collect();
            model.holds(r, &vals)
        }
        Formula::Not(v) => !sat(model, v, env),
        Formula::And(a, b) => sat(model, a, env) && sat(model, b, env),
        Formula::Or(a, b) => sat(model, a, env) || sat(model, b, env),
        Formula::Exists(x, body) | Formula::Forall(x, body) => {
            let want = matches!(u, Formula::Exists(..));
            let mut found = !want;
            for c in 0..model.size() {
                env.push((x.clone(), c));
                let r = sat(model, body, env);
                env.pop();
                if r == want {
                    found = want;
                    break;
                }
            }
            found
        }
    }
}

/// Tarskian satisfaction of `u` at the assignment `sort ↦ coords`.
pub fn holds(model: &FiniteModel, u: &Formula, sort: &Sort, coords: &[Elem]) -> bool {
    let mut env: Vec<(String, Elem)> = sort.vars().iter().cloned().zip(coords.iter().copied()).collect();
    sat(model, u, &mut env)
}

/// `∃x A` by the definition: scan all pairs of points.
pub fn cylindrify_scan(a: &DefSet, x: &str) -> Result<DefSet> {
    let axis = a.sort().index_of(x).ok_or_else(|| Error::NotInSort { var: x.into(), sort: a.sort().to_string() })?;
    let points: Vec<Vec<Elem>> = a.space().iter_coords().collect();
    let mut out = DefSet::empty(a.model(), a.sort())?;
    for mu in &points {
        let hit = a.points().any(|nu| nu.iter().enumerate().all(|(i, v)| i == axis || *v == mu[i]));
        if hit {
            out.insert(mu);
        }
    }
    Ok(out)
}

/// Rank-`k` type classes of points of `H^X`.
///
/// Rank-0 classes of tuples of length `|X| + k` are isomorphism types of the
/// generated substructures; the class of a shorter tuple at rank `j + 1` is
/// the set of rank-`j` classes of its one-element extensions. Two points
/// satisfy the same formulas of quantifier rank `<= k` iff they share a
/// class.
#[derive(Debug, Clone)]
pub struct RankTypes {
    sort: Sort,
    rank: usize,
    classes: Vec<u32>,
}

impl RankTypes {
    pub fn compute(model: &FiniteModel, sort: &Sort, rank: usize) -> Result<Self> {
        let n = model.size();
        let len = sort.len() + rank;
        let total = n
            .checked_pow(len as u32)
            .filter(|&t| t <= RANK_TYPE_CAP)
            .ok_or_else(|| Error::Infeasible(format!("rank-{rank} types over {sort}: {n}^{len} tuples exceed {RANK_TYPE_CAP}")))?;
        let mut intern: HashMap<Vec<usize>, u32> = HashMap::new();
        let mut classes: Vec<u32> = (0..total)
            .map(|i| {
                let sig = substructure_signature(model, &decode_index(i, n, len));
                let next = intern.len() as u32;
                *intern.entry(sig).or_insert(next)
            })
            .collect();
        for _ in 0..rank {
            let mut intern: HashMap<Vec<u32>, u32> = HashMap::new();
            classes = (0..classes.len() / n)
                .map(|i| {
                    let set: BTreeSet<u32> = (0..n).map(|c| classes[i * n + c]).collect();
                    let key: Vec<u32> = set.into_iter().collect();
                    let next = intern.len() as u32;
                    *intern.entry(key).or_insert(next)
                })
                .collect();
        }
        Ok(RankTypes { sort: sort.clone(), rank, classes })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn class_of(&self, index: usize) -> u32 {
        self.classes[index]
    }

    pub fn class_count(&self) -> usize {
        self.classes.iter().collect::<HashSet<_>>().len()
    }

    /// The union of the classes meeting `a`.
    pub fn closure(&self, a: &DefSet) -> Result<DefSet> {
        if a.sort() != &self.sort {
            return Err(Error::SortMismatch { expected: self.sort.to_string(), found: a.sort().to_string() });
        }
        let hit: HashSet<u32> = a.indices().map(|i| self.classes[i]).collect();
        DefSet::from_indices(a.model(), a.sort(), (0..self.classes.len()).filter(|&i| hit.contains(&self.classes[i])))
    }
}

/// Canonical description of the substructure generated by `tuple`.
///
/// Elements are numbered in discovery order: tuple entries, constants, then
/// closure rounds over operations in signature order and argument tuples in
/// lexicographic order. The order depends only on the term that first
/// reaches each element, so isomorphic pointed substructures get equal
/// descriptions.
fn substructure_signature(model: &FiniteModel, tuple: &[Elem]) -> Vec<usize> {
    let n = model.size();
    let mut index = vec![usize::MAX; n];
    let mut elems: Vec<Elem> = Vec::new();
    let add = |a: Elem, index: &mut Vec<usize>, elems: &mut Vec<Elem>| -> usize {
        if index[a] == usize::MAX {
            index[a] = elems.len();
            elems.push(a);
        }
        index[a]
    };
    let mut out: Vec<usize> = tuple.iter().map(|&a| add(a, &mut index, &mut elems)).collect();
    let ops = model.sig().ops();
    for (k, op) in ops.iter().enumerate() {
        if op.arity == 0 {
            add(model.apply(k, &[]), &mut index, &mut elems);
        }
    }
    loop {
        let before = elems.len();
        for (k, op) in ops.iter().enumerate() {
            if op.arity == 0 {
                continue;
            }
            for args in Odometer::new(before, op.arity) {
                let vals: Vec<Elem> = args.iter().map(|&i| elems[i]).collect();
                add(model.apply(k, &vals), &mut index, &mut elems);
            }
        }
        if elems.len() == before {
            break;
        }
    }
    let m = elems.len();
    out.push(usize::MAX);
    out.push(m);
    for (k, op) in ops.iter().enumerate() {
        for args in Odometer::new(m, op.arity) {
            let vals: Vec<Elem> = args.iter().map(|&i| elems[i]).collect();
            out.push(index[model.apply(k, &vals)]);
        }
    }
    for (r, rel) in model.rels().rels().iter().enumerate() {
        for args in Odometer::new(m, rel.arity) {
            let vals: Vec<Elem> = args.iter().map(|&i| elems[i]).collect();
            out.push(usize::from(model.holds(r, &vals)));
        }
    }
    out
}

/// `A^LL` as the union of rank-`k` types meeting `A`.
pub fn logical_closure_oracle(a: &DefSet, rank: usize) -> Result<DefSet> {
    RankTypes::compute(a.model(), a.sort(), rank)?.closure(a)
}

/// Distinct term functions `H^X → H` of term depth `<= depth`
/// (`None`: until no new function appears), as value vectors over the
/// point space.
pub fn term_functions(model: &FiniteModel, sort: &Sort, depth: Option<usize>) -> Result<Vec<Vec<Elem>>> {
    let space = model.space(sort)?;
    let points: Vec<Vec<Elem>> = space.iter_coords().collect();
    let mut funcs: Vec<Vec<Elem>> = Vec::new();
    let mut seen = HashSet::new();
    for i in 0..sort.len() {
        let f: Vec<Elem> = points.iter().map(|p| p[i]).collect();
        if seen.insert(f.clone()) {
            funcs.push(f);
        }
    }
    let ops = model.sig().ops();
    for (k, op) in ops.iter().enumerate() {
        if op.arity == 0 {
            let f = vec![model.apply(k, &[]); points.len()];
            if seen.insert(f.clone()) {
                funcs.push(f);
            }
        }
    }
    let mut level = 0;
    while depth.map_or(true, |d| level < d) {
        let current = funcs.len();
        for (k, op) in ops.iter().enumerate() {
            if op.arity == 0 {
                continue;
            }
            for args in Odometer::new(current, op.arity) {
                let f: Vec<Elem> = (0..points.len())
                    .map(|p| {
                        let vals: Vec<Elem> = args.iter().map(|&i| funcs[i][p]).collect();
                        model.apply(k, &vals)
                    })
                    .collect();
                if seen.insert(f.clone()) {
                    funcs.push(f);
                }
            }
        }
        if funcs.len() == current {
            break;
        }
        level += 1;
    }
    Ok(funcs)
}

/// `A''` from the definition: `μ ∈ A''` iff every pair of term functions
/// that agree on all of `A` agrees at `μ`.
pub fn algebraic_closure_oracle(a: &DefSet, depth: Option<usize>) -> Result<DefSet> {
    let funcs = term_functions(a.model(), a.sort(), depth)?;
    let members: Vec<usize> = a.indices().collect();
    let mut out = DefSet::empty(a.model(), a.sort())?;
    for mu in 0..a.space().len() {
        let mut seen: HashMap<Vec<Elem>, Elem> = HashMap::new();
        let ok = funcs.iter().all(|f| {
            let key: Vec<Elem> = members.iter().map(|&i| f[i]).collect();
            *seen.entry(key).or_insert(f[mu]) == f[mu]
        });
        if ok {
            out.insert(&a.space().coords(mu));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    fn sort(s: &str) -> Sort {
        Sort::parse(s).unwrap()
    }

    #[test]
    fn rank_types_examples() {
        let z3 = corpus::z3();
        let a = DefSet::from_points(&z3, &sort("x"), [[1]]).unwrap();
        let c = logical_closure_oracle(&a, 1).unwrap();
        assert_eq!(c, DefSet::from_points(&z3, &sort("x"), [[1], [2]]).unwrap());
        let z2 = corpus::z2();
        let full = DefSet::full(&z2, &sort("x,y")).unwrap();
        assert!(logical_closure_oracle(&full, 2).unwrap().is_full());
        // Z2 has no nontrivial automorphism: every point is its own class.
        let a = DefSet::from_points(&z2, &sort("x,y"), [[0, 1]]).unwrap();
        assert_eq!(logical_closure_oracle(&a, 0).unwrap(), a);
    }

    #[test]
    fn infeasible_rank() {
        let s3 = corpus::s3();
        let a = DefSet::full(&s3, &sort("x,y")).unwrap();
        assert!(matches!(logical_closure_oracle(&a, 12), Err(Error::Infeasible(_))));
    }

    #[test]
    fn algebraic_oracle_examples() {
        let z3 = corpus::z3();
        let a = DefSet::from_points(&z3, &sort("x"), [[1]]).unwrap();
        assert!(algebraic_closure_oracle(&a, None).unwrap().is_full());
        let z2 = corpus::z2();
        let diag = DefSet::from_points(&z2, &sort("x,y"), [[0, 0], [1, 1]]).unwrap();
        assert_eq!(algebraic_closure_oracle(&diag, Some(4)).unwrap(), diag);
    }

    #[test]
    fn scan_matches_definition_on_small_sets() {
        let z2 = corpus::z2();
        let a = DefSet::from_points(&z2, &sort("x,y"), [[0, 1]]).unwrap();
        let expected = DefSet::from_points(&z2, &sort("x,y"), [[0, 0], [0, 1]]).unwrap();
        assert_eq!(cylindrify_scan(&a, "y").unwrap(), expected);
    }
}
