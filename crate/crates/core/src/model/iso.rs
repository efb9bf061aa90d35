//! Backtracking search for isomorphisms between finite models.
//!
//! Partial maps are extended one element at a time. After each choice the
//! operation tables are used to force further assignments
//! (`α(op(ā)) = op(α(ā))`), and every fully-mapped relation tuple is
//! checked in both directions. Candidates are filtered by an
//! isomorphism-invariant profile of each element; the profile only prunes.

use std::fmt;
use std::ops::ControlFlow;

use super::{decode_index, Elem, FiniteModel, Odometer};

/// A permutation of the carrier commuting with every operation and
/// preserving every relation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Automorphism(Vec<Elem>);

impl Automorphism {
    pub fn identity(n: usize) -> Self {
        Automorphism((0..n).collect())
    }

    pub fn apply(&self, a: Elem) -> Elem {
        self.0[a]
    }

    pub fn as_slice(&self) -> &[Elem] {
        &self.0
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Automorphism) -> Automorphism {
        Automorphism(other.0.iter().map(|&a| self.0[a]).collect())
    }

    pub fn inverse(&self) -> Automorphism {
        let mut inv = vec![0; self.0.len()];
        for (a, &b) in self.0.iter().enumerate() {
            inv[b] = a;
        }
        Automorphism(inv)
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(a, &b)| a == b)
    }
}

/// A bijection `H1 → H2` commuting with operations and preserving relations.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Isomorphism(pub Vec<Elem>);

impl Isomorphism {
    pub fn apply(&self, a: Elem) -> Elem {
        self.0[a]
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(a, &b)| a == b)
    }

    /// Exhaustive check against both models' tables.
    pub fn verify(&self, m1: &FiniteModel, m2: &FiniteModel) -> bool {
        let n = m1.size();
        if n != m2.size() || self.0.len() != n || !m1.same_signature(m2) {
            return false;
        }
        let mut seen = vec![false; n];
        if self.0.iter().any(|&b| b >= n || std::mem::replace(&mut seen[b], true)) {
            return false;
        }
        for (k, op) in m1.sig().ops().iter().enumerate() {
            for args in Odometer::new(n, op.arity) {
                let image: Vec<Elem> = args.iter().map(|&a| self.0[a]).collect();
                if self.0[m1.apply(k, &args)] != m2.apply(k, &image) {
                    return false;
                }
            }
        }
        for (r, rel) in m1.rels().rels().iter().enumerate() {
            for args in Odometer::new(n, rel.arity) {
                let image: Vec<Elem> = args.iter().map(|&a| self.0[a]).collect();
                if m1.holds(r, &args) != m2.holds(r, &image) {
                    return false;
                }
            }
        }
        true
    }
}

impl fmt::Display for Isomorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (a, b) in self.0.iter().enumerate() {
            if a > 0 {
                f.write_str(",")?;
            }
            write!(f, "{a}->{b}")?;
        }
        Ok(())
    }
}

/// Per-element invariant: for every operation, how often the element is a
/// result and whether it is idempotent; for every relation position, how
/// many tuples carry it.
fn profile(m: &FiniteModel) -> Vec<Vec<usize>> {
    let n = m.size();
    let mut out = vec![Vec::new(); n];
    for (k, op) in m.sig().ops().iter().enumerate() {
        let mut hits = vec![0; n];
        for &v in m.table(k) {
            hits[v] += 1;
        }
        for a in 0..n {
            out[a].push(hits[a]);
            if op.arity > 0 {
                out[a].push(usize::from(m.apply(k, &vec![a; op.arity]) == a));
            }
        }
    }
    for (r, rel) in m.rels().rels().iter().enumerate() {
        let mut counts = vec![vec![0; rel.arity]; n];
        for t in m.tuples(r) {
            for (pos, &a) in t.iter().enumerate() {
                counts[a][pos] += 1;
            }
        }
        for a in 0..n {
            out[a].extend(&counts[a]);
        }
    }
    out
}

struct Search<'a> {
    m1: &'a FiniteModel,
    m2: &'a FiniteModel,
    prof1: Vec<Vec<usize>>,
    prof2: Vec<Vec<usize>>,
}

type Partial = (Vec<Option<Elem>>, Vec<Option<Elem>>);

impl<'a> Search<'a> {
    fn new(m1: &'a FiniteModel, m2: &'a FiniteModel) -> Self {
        Search { m1, m2, prof1: profile(m1), prof2: profile(m2) }
    }

    fn assign(&self, map: &mut Partial, a: Elem, b: Elem) -> bool {
        match (map.0[a], map.1[b]) {
            (Some(x), _) => x == b,
            (None, Some(_)) => false,
            (None, None) => {
                if self.prof1[a] != self.prof2[b] {
                    return false;
                }
                map.0[a] = Some(b);
                map.1[b] = Some(a);
                true
            }
        }
    }

    /// Forces images through operation tables until a fixpoint, then checks
    /// relations on fully mapped tuples.
    fn propagate(&self, map: &mut Partial) -> bool {
        let n = self.m1.size();
        loop {
            let mut changed = false;
            for (k, op) in self.m1.sig().ops().iter().enumerate() {
                let table = self.m1.table(k);
                for (i, &res) in table.iter().enumerate() {
                    let args = decode_index(i, n, op.arity);
                    let image: Option<Vec<Elem>> = args.iter().map(|&a| map.0[a]).collect();
                    let Some(image) = image else { continue };
                    let target = self.m2.apply(k, &image);
                    match map.0[res] {
                        Some(b) if b == target => {}
                        Some(_) => return false,
                        None => {
                            if !self.assign(map, res, target) {
                                return false;
                            }
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        for (r, rel) in self.m1.rels().rels().iter().enumerate() {
            for args in Odometer::new(n, rel.arity) {
                let image: Option<Vec<Elem>> = args.iter().map(|&a| map.0[a]).collect();
                if let Some(image) = image {
                    if self.m1.holds(r, &args) != self.m2.holds(r, &image) {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn run(&self, mut map: Partial, visit: &mut dyn FnMut(Isomorphism) -> ControlFlow<()>) -> ControlFlow<()> {
        if !self.propagate(&mut map) {
            return ControlFlow::Continue(());
        }
        let Some(a) = map.0.iter().position(Option::is_none) else {
            let iso = Isomorphism(map.0.iter().map(|b| b.expect("total")).collect());
            debug_assert!(iso.verify(self.m1, self.m2));
            return visit(iso);
        };
        for b in 0..self.m2.size() {
            let mut next = map.clone();
            if self.assign(&mut next, a, b) {
                self.run(next, visit)?;
            }
        }
        ControlFlow::Continue(())
    }

    fn seeded(&self, seed: &[(Elem, Elem)]) -> Option<Partial> {
        let mut map = (vec![None; self.m1.size()], vec![None; self.m2.size()]);
        for &(a, b) in seed {
            if a >= self.m1.size() || b >= self.m2.size() || !self.assign(&mut map, a, b) {
                return None;
            }
        }
        Some(map)
    }
}

/// Visits every isomorphism `m1 → m2` extending `seed`, in lexicographic
/// order, until `visit` breaks.
pub fn for_each_isomorphism(
    m1: &FiniteModel,
    m2: &FiniteModel,
    seed: &[(Elem, Elem)],
    visit: &mut dyn FnMut(Isomorphism) -> ControlFlow<()>,
) {
    if m1.size() != m2.size() || !m1.same_signature(m2) {
        return;
    }
    let search = Search::new(m1, m2);
    if let Some(map) = search.seeded(seed) {
        let _ = search.run(map, visit);
    }
}

/// The first isomorphism `m1 → m2` extending the partial map `seed`.
pub fn find_isomorphism(m1: &FiniteModel, m2: &FiniteModel, seed: &[(Elem, Elem)]) -> Option<Isomorphism> {
    let mut found = None;
    for_each_isomorphism(m1, m2, seed, &mut |iso| {
        found = Some(iso);
        ControlFlow::Break(())
    });
    found
}

pub(super) fn all_automorphisms(m: &FiniteModel) -> Vec<Automorphism> {
    let mut out = Vec::new();
    for_each_isomorphism(m, m, &[], &mut |iso| {
        out.push(Automorphism(iso.0));
        ControlFlow::Continue(())
    });
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use std::collections::BTreeSet;

    /// Every permutation, checked directly against the tables.
    fn brute_force(m: &FiniteModel) -> Vec<Automorphism> {
        fn perms(n: usize) -> Vec<Vec<Elem>> {
            if n == 0 {
                return vec![vec![]];
            }
            let mut out = Vec::new();
            for p in perms(n - 1) {
                for pos in 0..n {
                    let mut q = p.clone();
                    q.insert(pos, n - 1);
                    out.push(q);
                }
            }
            out
        }
        let mut out: Vec<Automorphism> = perms(m.size())
            .into_iter()
            .filter(|p| Isomorphism(p.clone()).verify(m, m))
            .map(Automorphism)
            .collect();
        out.sort();
        out
    }

    #[test]
    fn automorphism_groups_match_brute_force() {
        for m in corpus::all() {
            assert_eq!(m.automorphisms(), brute_force(&m).as_slice(), "{}", m.name());
        }
    }

    #[test]
    fn known_group_orders() {
        assert_eq!(corpus::z2().automorphisms().len(), 1);
        let z3 = corpus::z3();
        assert_eq!(z3.automorphisms(), &[Automorphism(vec![0, 1, 2]), Automorphism(vec![0, 2, 1])]);
        assert_eq!(corpus::v4().automorphisms().len(), 6);
        assert_eq!(corpus::z4().automorphisms().len(), 2);
        assert_eq!(corpus::s3().automorphisms().len(), 6);
    }

    #[test]
    fn automorphisms_form_a_group() {
        for m in corpus::all() {
            let group: BTreeSet<_> = m.automorphisms().iter().cloned().collect();
            assert!(group.contains(&Automorphism::identity(m.size())));
            for a in &group {
                assert!(group.contains(&a.inverse()));
                for b in &group {
                    assert!(group.contains(&a.compose(b)));
                }
            }
        }
    }

    #[test]
    fn seeded_search() {
        let z4 = corpus::z4();
        let v4 = corpus::v4();
        assert!(find_isomorphism(&z4, &v4, &[]).is_none());
        let z3 = corpus::z3();
        assert_eq!(find_isomorphism(&z3, &z3, &[(1, 2)]), Some(Isomorphism(vec![0, 2, 1])));
        assert_eq!(find_isomorphism(&z3, &z3, &[(1, 0)]), None);
    }
}
