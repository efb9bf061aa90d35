//! Knowledge bases: per-sort lattices of definable sets (content) and of
//! closed filters (description), joined by the functor `Ct` that sends a
//! description `T` to its content `Val(T)`.
//!
//! Filters are never listed as formula sets. The description lattice of a
//! sort is the content lattice read through the Galois anti-isomorphism
//! `A ↦ A^L`, with formula-level access through [`FilterHandle`].

mod lattice;

use std::collections::BTreeMap;

use serde::Serialize;

use crate::category::grid::{morphism_grid, term_grid};
use crate::category::{image_closure, preimage_set, ClosureKind, TermMorphism};
use crate::error::{Error, Result};
use crate::galois::{definable_set_of, AntiReport, DefinableLattice, FilterHandle};
use crate::halmos::{val, DefSet};
use crate::model::{find_isomorphism, Isomorphism, ModelRef};
use crate::syntax::{Formula, Sort};

pub use lattice::{lattice_isomorphic, FiniteLattice};

/// Lattices up to this size get every element in the morphism-grid check;
/// larger ones are checked on single orbits, which suffices because both
/// actions and every candidate `β` preserve unions.
const GRID_ELEMENT_LIMIT: usize = 64;
/// Orbit counts above this are not searched for a direct orbit bijection.
const PERMUTATION_ORBIT_LIMIT: usize = 7;

#[derive(Debug)]
pub struct KnowledgeBase {
    model: ModelRef,
    lattices: Vec<DefinableLattice>,
}

/// Materializes the content lattice of every sort in `sorts`.
pub fn build_kb(model: &ModelRef, sorts: &[Sort]) -> Result<KnowledgeBase> {
    let mut lattices: Vec<DefinableLattice> = Vec::new();
    for sort in sorts {
        if lattices.iter().any(|l| l.sort() == sort) {
            continue;
        }
        lattices.push(DefinableLattice::new(model, sort)?);
    }
    Ok(KnowledgeBase { model: model.clone(), lattices })
}

/// Concrete knowledge `(X, T, A)` with `A = Val(T)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnowledgeTriple {
    pub sort: Sort,
    pub t: Vec<Formula>,
    pub a: DefSet,
}

impl KnowledgeBase {
    pub fn model(&self) -> &ModelRef {
        &self.model
    }

    pub fn sorts(&self) -> Vec<Sort> {
        self.lattices.iter().map(|l| l.sort().clone()).collect()
    }

    pub fn lattices(&self) -> &[DefinableLattice] {
        &self.lattices
    }

    pub fn lattice(&self, sort: &Sort) -> Result<&DefinableLattice> {
        self.lattices
            .iter()
            .find(|l| l.sort() == sort)
            .ok_or_else(|| Error::InvalidSort(format!("sort {sort} is not materialized in this knowledge base")))
    }

    /// `Ct(T)`: the content described by `T`.
    pub fn ct(&self, t: &[Formula], sort: &Sort) -> Result<KnowledgeTriple> {
        self.lattice(sort)?;
        let a = definable_set_of(t, sort, &self.model)?;
        Ok(KnowledgeTriple { sort: sort.clone(), t: t.to_vec(), a })
    }

    /// The description-side element matching content element `mask`.
    pub fn filter(&self, sort: &Sort, mask: u64) -> Result<FilterHandle> {
        Ok(FilterHandle::new(&self.lattice(sort)?.element(mask)))
    }

    /// The anti-isomorphism check for every sort.
    pub fn check_anti(&self) -> Result<Vec<AntiReport>> {
        self.lattices.iter().map(|l| l.check_anti()).collect()
    }

    pub fn report(&self) -> KbReport {
        KbReport {
            model: self.model.name().to_string(),
            sorts: self
                .lattices
                .iter()
                .map(|l| SortReport {
                    sort: l.sort().to_string(),
                    elements: l.len(),
                    orbits: l.orbits().iter().map(|o| o.iter().map(|&p| point_string(l, p)).collect()).collect(),
                })
                .collect(),
        }
    }
}

fn point_string(l: &DefinableLattice, index: usize) -> String {
    let p = l.model().space(l.sort()).expect("lattice space").point(index);
    p.to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SortReport {
    pub sort: String,
    pub elements: usize,
    pub orbits: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KbReport {
    pub model: String,
    pub sorts: Vec<SortReport>,
}

/// Bounds for the morphism grid used by [`kb_isomorphic`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct KbBounds {
    pub term_depth: usize,
}

impl Default for KbBounds {
    fn default() -> Self {
        KbBounds { term_depth: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum KbResult {
    Isomorphic,
    NotIsomorphic,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KbRoute {
    Isotypic,
    Direct,
}

/// `β` on one sort: the orbit of the second model that each orbit of the
/// first is sent to. Lattice elements map bitwise.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SortMap {
    pub sort: String,
    pub orbit_map: Vec<usize>,
    /// Commutation cells checked on lattice elements.
    pub cells: usize,
}

impl SortMap {
    pub fn apply(&self, mask: u64) -> u64 {
        self.orbit_map.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).fold(0, |m, (_, &j)| m | 1 << j)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GridSummary {
    pub term_depth: usize,
    pub morphisms: usize,
    pub cells: usize,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KbVerdict {
    pub result: KbResult,
    pub route: Option<KbRoute>,
    /// The model isomorphism behind the isotypic route.
    pub isomorphism: Option<String>,
    /// `α` on descriptions: `identity` on the isotypic route, otherwise the
    /// Galois conjugate `A^L ↦ β(A)^L`.
    pub alpha: Option<String>,
    pub beta: Vec<SortMap>,
    pub obstruction: Option<String>,
    pub details: Vec<String>,
    pub grid: GridSummary,
}

/// Grid morphisms between every ordered pair of sorts in the family.
fn family_grid(kb1: &KnowledgeBase, kb2: &KnowledgeBase, depth: usize) -> Result<Vec<TermMorphism>> {
    let mut out = Vec::new();
    for target in kb1.sorts() {
        let terms = term_grid(&[&kb1.model, &kb2.model], &target, depth)?;
        for source in kb1.sorts() {
            out.extend(morphism_grid(&source, &target, &terms)?);
        }
    }
    Ok(out)
}

fn grid_masks(l: &DefinableLattice) -> Vec<u64> {
    if l.len() <= GRID_ELEMENT_LIMIT {
        (0..l.len() as u64).collect()
    } else {
        (0..l.orbit_count()).map(|i| 1u64 << i).collect()
    }
}

/// Checks `β` against the action of `s` on both sides:
/// `β_X(s_* B) = s_*(β_Y B)` and `β_Y(s̃_* A) = s̃_*(β_X A)`.
fn check_morphism(
    kb1: &KnowledgeBase,
    kb2: &KnowledgeBase,
    beta: &BTreeMap<Sort, &SortMap>,
    s: &TermMorphism,
    failures: &mut Vec<String>,
) -> Result<usize> {
    let (Some(by), Some(bx)) = (beta.get(s.source()), beta.get(s.target())) else {
        return Ok(0);
    };
    let (ly1, lx1) = (kb1.lattice(s.source())?, kb1.lattice(s.target())?);
    let (ly2, lx2) = (kb2.lattice(s.source())?, kb2.lattice(s.target())?);
    let mut cells = 0;
    for b in grid_masks(ly1) {
        cells += 1;
        let left = lx1.mask_of(&preimage_set(s, &ly1.element(b))?).ok_or(Error::NotDefinable)?;
        let right = lx2.mask_of(&preimage_set(s, &ly2.element(by.apply(b)))?).ok_or(Error::NotDefinable)?;
        if bx.apply(left) != right {
            failures.push(format!("preimage under `{s}` of element {b} of {}", s.source()));
        }
    }
    for a in grid_masks(lx1) {
        cells += 1;
        let left = ly1.mask_of(&image_closure(s, &lx1.element(a), ClosureKind::Logical)?).ok_or(Error::NotDefinable)?;
        let right = ly2
            .mask_of(&image_closure(s, &lx2.element(bx.apply(a)), ClosureKind::Logical)?)
            .ok_or(Error::NotDefinable)?;
        if by.apply(left) != right {
            failures.push(format!("image under `{s}` of element {a} of {}", s.target()));
        }
    }
    Ok(cells)
}

fn check_grid(kb1: &KnowledgeBase, kb2: &KnowledgeBase, beta: &[SortMap], grid: &[TermMorphism], stop_early: bool) -> Result<(usize, Vec<String>)> {
    let by_sort: BTreeMap<Sort, &SortMap> =
        beta.iter().map(|m| (Sort::parse(&m.sort).expect("sort round-trips"), m)).collect();
    let mut cells = 0;
    let mut failures = Vec::new();
    for s in grid {
        cells += check_morphism(kb1, kb2, &by_sort, s, &mut failures)?;
        if stop_early && !failures.is_empty() {
            break;
        }
    }
    Ok((cells, failures))
}

/// `β` induced by a model isomorphism: orbit `i` goes to the orbit of the
/// image of its least point.
fn induced_map(l1: &DefinableLattice, l2: &DefinableLattice, iso: &Isomorphism) -> Result<SortMap> {
    let space = l1.model().space(l1.sort())?;
    let orbit_map = l1
        .orbits()
        .iter()
        .map(|o| {
            let image: Vec<usize> = space.coords(o[0]).iter().map(|&a| iso.apply(a)).collect();
            l2.orbit_of(space.index(&image))
        })
        .collect();
    Ok(SortMap { sort: l1.sort().to_string(), orbit_map, cells: 0 })
}

/// Verifies the square `Ct₂ ∘ α = β ∘ Ct₁` on every element with `α` the
/// identity on formulas: the representative of `A` in the first model
/// must define `σ·A` in the second, and `β(A)` must be `σ·A`.
fn verify_isotypic_sort(l1: &DefinableLattice, l2: &DefinableLattice, iso: &Isomorphism, map: &mut SortMap, failures: &mut Vec<String>) -> Result<()> {
    let sort = l1.sort();
    let m2 = l2.model();
    let orbit_vals = l1.orbit_formulas()?.iter().map(|u| val(u, sort, m2)).collect::<Result<Vec<_>>>()?;
    let direct = l1.len() <= GRID_ELEMENT_LIMIT;
    for mask in 0..l1.len() as u64 {
        let target = l2.element(map.apply(mask));
        let mut moved = DefSet::empty(m2, sort)?;
        for p in l1.element(mask).points() {
            let image: Vec<usize> = p.iter().map(|&a| iso.apply(a)).collect();
            moved.insert(&image);
        }
        let described = if direct {
            val(&l1.representative(mask)?, sort, m2)?
        } else {
            (0..l1.orbit_count())
                .filter(|i| mask >> i & 1 == 1)
                .try_fold(DefSet::empty(m2, sort)?, |acc, i| acc.union(&orbit_vals[i]))?
        };
        map.cells += 2;
        if moved != target {
            failures.push(format!("beta on {sort} disagrees with the isomorphism at element {mask}"));
        }
        if described != target {
            failures.push(format!("Ct square fails on {sort} at element {mask}: {}", described.to_tuple_string()));
        }
    }
    Ok(())
}

/// All orbit bijections for one sort that commute with the grid
/// endomorphisms of that sort.
fn candidate_maps(kb1: &KnowledgeBase, kb2: &KnowledgeBase, sort: &Sort, grid: &[TermMorphism]) -> Result<Vec<SortMap>> {
    let m = kb1.lattice(sort)?.orbit_count();
    let endos: Vec<&TermMorphism> = grid.iter().filter(|s| s.source() == sort && s.target() == sort).collect();
    let mut out = Vec::new();
    let mut perm: Vec<usize> = (0..m).collect();
    loop {
        let map = SortMap { sort: sort.to_string(), orbit_map: perm.clone(), cells: 0 };
        let by_sort: BTreeMap<Sort, &SortMap> = [(sort.clone(), &map)].into_iter().collect();
        let mut failures = Vec::new();
        for s in &endos {
            check_morphism(kb1, kb2, &by_sort, s, &mut failures)?;
            if !failures.is_empty() {
                break;
            }
        }
        if failures.is_empty() {
            out.push(map);
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    Ok(out)
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).expect("successor exists");
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Whether two knowledge bases are isomorphic.
///
/// Isomorphic models give the isotypic route: `β` is induced by the model
/// isomorphism, `α` is the identity on formulas, and the square is
/// verified on every lattice element and on the morphism grid. Otherwise
/// differing lattice sizes are a finite obstruction; equal sizes lead to a
/// search for orbit bijections compatible with the grid, and failure to
/// find one is reported as unknown, never as non-isomorphism.
pub fn kb_isomorphic(kb1: &KnowledgeBase, kb2: &KnowledgeBase, bounds: KbBounds) -> Result<KbVerdict> {
    if !kb1.model.same_signature(&kb2.model) {
        return Err(Error::SignatureMismatch);
    }
    if kb1.sorts() != kb2.sorts() {
        return Err(Error::SortFamilyMismatch);
    }
    let grid = family_grid(kb1, kb2, bounds.term_depth)?;
    let summary = |cells: usize, failures: Vec<String>| GridSummary {
        term_depth: bounds.term_depth,
        morphisms: grid.len(),
        cells,
        failures,
    };
    let mut verdict = KbVerdict {
        result: KbResult::Unknown,
        route: None,
        isomorphism: None,
        alpha: None,
        beta: Vec::new(),
        obstruction: None,
        details: Vec::new(),
        grid: summary(0, Vec::new()),
    };

    if let Some(iso) = find_isomorphism(&kb1.model, &kb2.model, &[]) {
        let mut failures = Vec::new();
        let mut beta = Vec::new();
        for (l1, l2) in kb1.lattices.iter().zip(&kb2.lattices) {
            let mut map = induced_map(l1, l2, &iso)?;
            verify_isotypic_sort(l1, l2, &iso, &mut map, &mut failures)?;
            beta.push(map);
        }
        let (cells, grid_failures) = check_grid(kb1, kb2, &beta, &grid, false)?;
        failures.extend(grid_failures);
        verdict.route = Some(KbRoute::Isotypic);
        verdict.isomorphism = Some(iso.to_string());
        verdict.alpha = Some("identity".into());
        verdict.beta = beta;
        verdict.grid = summary(cells, Vec::new());
        if failures.is_empty() {
            verdict.result = KbResult::Isomorphic;
        } else {
            // A failing cell on this route is an engine inconsistency.
            verdict.details = failures.clone();
            verdict.grid.failures = failures;
        }
        return Ok(verdict);
    }

    for (l1, l2) in kb1.lattices.iter().zip(&kb2.lattices) {
        if l1.len() != l2.len() {
            verdict.result = KbResult::NotIsomorphic;
            verdict.obstruction = Some("content-lattice sizes differ".into());
            verdict.details.push(format!("sort {}: {} vs {} elements", l1.sort(), l1.len(), l2.len()));
        }
    }
    if verdict.result == KbResult::NotIsomorphic {
        return Ok(verdict);
    }

    if let Some(l) = kb1.lattices.iter().find(|l| l.orbit_count() > PERMUTATION_ORBIT_LIMIT) {
        verdict.details.push(format!("sort {}: {} orbits, too many to search orbit bijections", l.sort(), l.orbit_count()));
        return Ok(verdict);
    }
    let mut candidates = Vec::new();
    for sort in kb1.sorts() {
        let maps = candidate_maps(kb1, kb2, &sort, &grid)?;
        if maps.is_empty() {
            verdict.details.push(format!("sort {sort}: no orbit bijection commutes with the grid endomorphisms"));
            return Ok(verdict);
        }
        candidates.push(maps);
    }
    let mut chosen = Vec::new();
    if let Some(cells) = search_product(kb1, kb2, &grid, &candidates, &mut chosen)? {
        verdict.result = KbResult::Isomorphic;
        verdict.route = Some(KbRoute::Direct);
        verdict.alpha = Some("Galois conjugate of beta".into());
        verdict.beta = chosen;
        verdict.grid = summary(cells, Vec::new());
    } else {
        verdict.details.push("no combination of orbit bijections commutes with the morphism grid".into());
    }
    Ok(verdict)
}

/// Picks one candidate per sort so that every grid morphism commutes.
fn search_product(
    kb1: &KnowledgeBase,
    kb2: &KnowledgeBase,
    grid: &[TermMorphism],
    candidates: &[Vec<SortMap>],
    chosen: &mut Vec<SortMap>,
) -> Result<Option<usize>> {
    if chosen.len() == candidates.len() {
        let (cells, failures) = check_grid(kb1, kb2, chosen, grid, true)?;
        return Ok(failures.is_empty().then_some(cells));
    }
    for map in &candidates[chosen.len()] {
        chosen.push(map.clone());
        let (_, failures) = check_grid(kb1, kb2, chosen, grid, true)?;
        if failures.is_empty() {
            if let Some(cells) = search_product(kb1, kb2, grid, candidates, chosen)? {
                return Ok(Some(cells));
            }
        }
        chosen.pop();
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::syntax::parse_formula;

    fn sorts(list: &[&str]) -> Vec<Sort> {
        list.iter().map(|s| Sort::parse(s).unwrap()).collect()
    }

    #[test]
    fn lattice_sizes() {
        assert_eq!(build_kb(&corpus::trivial(), &sorts(&["x"])).unwrap().lattices()[0].len(), 2);
        assert_eq!(build_kb(&corpus::z2(), &sorts(&["x"])).unwrap().lattices()[0].len(), 4);
        let kb = build_kb(&corpus::z3(), &sorts(&["x", "x", "x,y"])).unwrap();
        assert_eq!(kb.sorts(), sorts(&["x", "x,y"]));
        assert_eq!(kb.lattice(&Sort::parse("x").unwrap()).unwrap().len(), 4);
    }

    #[test]
    fn ct_examples() {
        let z2 = corpus::z2();
        let kb = build_kb(&z2, &sorts(&["x"])).unwrap();
        let x = Sort::parse("x").unwrap();
        assert!(kb.ct(&[], &x).unwrap().a.is_full());
        let u = parse_formula("x == mul(x,x)", z2.sig(), z2.rels()).unwrap();
        assert_eq!(kb.ct(&[u.clone()], &x).unwrap().a.to_string(), "{0}");
        assert!(kb.ct(&[u.clone(), u.not()], &x).unwrap().a.is_empty());
        assert!(kb.ct(&[], &Sort::parse("y").unwrap()).is_err());
    }

    #[test]
    fn ct_respects_closure() {
        let z4 = corpus::z4();
        let x = Sort::parse("x").unwrap();
        let kb = build_kb(&z4, &[x.clone()]).unwrap();
        let l = kb.lattice(&x).unwrap();
        for mask in 0..l.len() as u64 {
            let t = vec![l.representative(mask).unwrap()];
            let content = kb.ct(&t, &x).unwrap().a;
            let generators = vec![l.representative(l.mask_of(&content).unwrap()).unwrap()];
            assert_eq!(kb.ct(&generators, &x).unwrap().a, content);
        }
    }

    #[test]
    fn self_isomorphism_is_identity() {
        let kb = build_kb(&corpus::z4(), &sorts(&["x", "x,y"])).unwrap();
        let v = kb_isomorphic(&kb, &kb, KbBounds::default()).unwrap();
        assert_eq!(v.result, KbResult::Isomorphic);
        assert_eq!(v.route, Some(KbRoute::Isotypic));
        assert_eq!(v.isomorphism.as_deref(), Some("0->0,1->1,2->2,3->3"));
        for map in &v.beta {
            assert!(map.orbit_map.iter().enumerate().all(|(i, &j)| i == j));
        }
    }

    #[test]
    fn relabeled_z3() {
        let s = sorts(&["x", "x,y"]);
        let kb1 = build_kb(&corpus::z3(), &s).unwrap();
        let kb2 = build_kb(&corpus::z3_relabeled(), &s).unwrap();
        let v = kb_isomorphic(&kb1, &kb2, KbBounds::default()).unwrap();
        assert_eq!(v.result, KbResult::Isomorphic, "{v:?}");
        assert!(v.grid.morphisms > 0 && v.grid.cells > 0);
    }

    #[test]
    fn z4_v4_obstruction() {
        let s = sorts(&["x"]);
        let kb1 = build_kb(&corpus::z4(), &s).unwrap();
        let kb2 = build_kb(&corpus::v4(), &s).unwrap();
        let v = kb_isomorphic(&kb1, &kb2, KbBounds::default()).unwrap();
        assert_eq!(v.result, KbResult::NotIsomorphic);
        assert_eq!(v.obstruction.as_deref(), Some("content-lattice sizes differ"));
        assert_eq!(v.details, vec!["sort (x): 8 vs 4 elements"]);
    }

    #[test]
    fn z2_z3_unknown() {
        let s = sorts(&["x"]);
        let kb1 = build_kb(&corpus::z2(), &s).unwrap();
        let kb2 = build_kb(&corpus::z3(), &s).unwrap();
        let v = kb_isomorphic(&kb1, &kb2, KbBounds::default()).unwrap();
        assert_eq!(v.result, KbResult::Unknown);
    }

    #[test]
    fn sort_family_mismatch() {
        let kb1 = build_kb(&corpus::z3(), &sorts(&["x"])).unwrap();
        let kb2 = build_kb(&corpus::z3(), &sorts(&["x,y"])).unwrap();
        assert!(matches!(kb_isomorphic(&kb1, &kb2, KbBounds::default()), Err(Error::SortFamilyMismatch)));
    }

    #[test]
    fn description_lattice_is_anti_isomorphic() {
        let kb = build_kb(&corpus::z3(), &sorts(&["x", "x,y"])).unwrap();
        for report in kb.check_anti().unwrap() {
            assert!(report.passed(), "{report:?}");
        }
        let x = Sort::parse("x").unwrap();
        let (f1, f3) = (kb.filter(&x, 1).unwrap(), kb.filter(&x, 3).unwrap());
        assert!(f3.is_subfilter(&f1).unwrap());
        assert!(!f1.is_subfilter(&f3).unwrap());
    }
}
