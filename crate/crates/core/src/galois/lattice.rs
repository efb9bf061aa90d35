use std::sync::OnceLock;

use serde::Serialize;

use super::{filter_contains, logical_closure};
use crate::error::{Error, Result};
use crate::halmos::{val, DefSet};
use crate::model::{ModelRef, Space};
use crate::syntax::{Formula, Sort};
use crate::types::{Separator, TypeBounds};

/// Lattices up to this size get the pairwise order check in
/// [`DefinableLattice::check_anti`]; larger ones check covers only.
const PAIRWISE_LIMIT: usize = 4096;
/// Lattices up to this size evaluate every representative formula directly.
const DIRECT_VAL_LIMIT: usize = 64;

/// All definable subsets of `H^X`: the unions of automorphism orbits.
///
/// Elements are addressed by orbit bitmasks (bit `i` = orbit `i`, orbits
/// ordered by their least point), so meet and join are `&` and `|`.
#[derive(Debug)]
pub struct DefinableLattice {
    model: ModelRef,
    space: Space,
    orbit_of: Vec<usize>,
    orbits: Vec<Vec<usize>>,
    formulas: OnceLock<Vec<Formula>>,
}

impl DefinableLattice {
    pub fn new(model: &ModelRef, sort: &Sort) -> Result<Self> {
        let space = model.space(sort)?;
        let mut orbit_of = vec![usize::MAX; space.len()];
        let mut orbits: Vec<Vec<usize>> = Vec::new();
        let auts = model.automorphisms();
        for p in 0..space.len() {
            if orbit_of[p] != usize::MAX {
                continue;
            }
            let id = orbits.len();
            let coords = space.coords(p);
            let mut members = Vec::new();
            for alpha in auts {
                let image: Vec<_> = coords.iter().map(|&c| alpha.apply(c)).collect();
                let q = space.index(&image);
                if orbit_of[q] == usize::MAX {
                    orbit_of[q] = id;
                    members.push(q);
                }
            }
            members.sort_unstable();
            orbits.push(members);
            if orbits.len() > model.limits().max_orbits {
                return Err(Error::CapExceeded {
                    what: format!("definable lattice over {sort} (orbit count)"),
                    size: orbits.len() as u128,
                    cap: model.limits().max_orbits as u128,
                });
            }
        }
        Ok(DefinableLattice { model: model.clone(), space, orbit_of, orbits, formulas: OnceLock::new() })
    }

    pub fn model(&self) -> &ModelRef {
        &self.model
    }

    pub fn sort(&self) -> &Sort {
        self.space.sort()
    }

    pub fn orbit_count(&self) -> usize {
        self.orbits.len()
    }

    /// Point indices of each orbit, ascending.
    pub fn orbits(&self) -> &[Vec<usize>] {
        &self.orbits
    }

    pub fn orbit_of(&self, point: usize) -> usize {
        self.orbit_of[point]
    }

    /// Number of elements, `2^orbits`.
    pub fn len(&self) -> usize {
        1 << self.orbits.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn full_mask(&self) -> u64 {
        (1u64 << self.orbits.len()) - 1
    }

    pub fn element(&self, mask: u64) -> DefSet {
        let indices = self.orbits.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).flat_map(|(_, o)| o.iter().copied());
        DefSet::from_indices(&self.model, self.sort(), indices).expect("space already checked")
    }

    /// Every element in mask order.
    pub fn elements(&self) -> impl Iterator<Item = DefSet> + '_ {
        (0..self.len() as u64).map(|m| self.element(m))
    }

    /// The mask of `set` if it is a union of orbits.
    pub fn mask_of(&self, set: &DefSet) -> Option<u64> {
        if set.sort() != self.sort() || set.space().carrier() != self.model.size() {
            return None;
        }
        let mask = set.indices().fold(0u64, |m, p| m | 1 << self.orbit_of[p]);
        (self.element(mask) == *set).then_some(mask)
    }

    /// Hasse diagram: `(a, b)` whenever `b` adds exactly one orbit to `a`.
    pub fn covers(&self) -> Vec<(u64, u64)> {
        let mut out = Vec::new();
        for a in 0..self.len() as u64 {
            for i in 0..self.orbits.len() {
                if a >> i & 1 == 0 {
                    out.push((a, a | 1 << i));
                }
            }
        }
        out
    }

    /// One formula per orbit whose value is exactly that orbit: the
    /// conjunction of formulas separating its least point from the least
    /// point of every other orbit. Computed once, machine-checked.
    pub fn orbit_formulas(&self) -> Result<&[Formula]> {
        if let Some(f) = self.formulas.get() {
            return Ok(f);
        }
        let sort = self.sort();
        let mut sep = Separator::new(&self.model, &self.model, TypeBounds::default());
        let reps: Vec<_> = self.orbits.iter().map(|o| self.space.point(o[0])).collect();
        let mut out = Vec::with_capacity(reps.len());
        for (i, mu) in reps.iter().enumerate() {
            let mut parts: Vec<Formula> = Vec::new();
            let mut vals: Vec<DefSet> = Vec::new();
            for (j, nu) in reps.iter().enumerate() {
                if i == j {
                    continue;
                }
                let u = sep
                    .separate(mu, nu)?
                    .ok_or_else(|| Error::Infeasible(format!("no formula separates {mu} from {nu} in {}", self.model.name())))?;
                if !parts.contains(&u) {
                    vals.push(val(&u, sort, &self.model)?);
                    parts.push(u);
                }
            }
            let orbit = self.element(1 << i);
            // Prefer a single part that already cuts out the orbit.
            let formula = match vals.iter().position(|v| *v == orbit) {
                Some(k) => parts.swap_remove(k),
                None => Formula::conjunction(parts).unwrap_or_else(|| Formula::tautology(sort)),
            };
            if val(&formula, sort, &self.model)? != orbit {
                return Err(Error::Infeasible(format!("orbit formula `{formula}` does not define orbit {i}")));
            }
            out.push(formula);
        }
        Ok(self.formulas.get_or_init(|| out))
    }

    /// The disjunction of the orbit formulas of `mask`; a contradiction for
    /// the empty set.
    pub fn representative(&self, mask: u64) -> Result<Formula> {
        let formulas = self.orbit_formulas()?;
        let parts = (0..self.orbits.len()).filter(|i| mask >> i & 1 == 1).map(|i| formulas[i].clone());
        Ok(Formula::disjunction(parts).unwrap_or_else(|| Formula::contradiction(self.sort())))
    }

    /// Checks that `A ↦ A^L` and `T ↦ T^L` are mutually inverse and
    /// order-reversing on this lattice, using the representative formula of
    /// each element as a generator of its filter.
    pub fn check_anti(&self) -> Result<AntiReport> {
        let sort = self.sort();
        let mut failures = Vec::new();
        let orbit_vals = self
            .orbit_formulas()?
            .iter()
            .map(|u| val(u, sort, &self.model))
            .collect::<Result<Vec<_>>>()?;
        let direct = self.len() <= DIRECT_VAL_LIMIT;
        let mut rep_vals = Vec::with_capacity(self.len());
        for mask in 0..self.len() as u64 {
            let a = self.element(mask);
            if logical_closure(&a) != a {
                failures.push(format!("element {mask} is not closed"));
            }
            let v = if direct {
                val(&self.representative(mask)?, sort, &self.model)?
            } else {
                (0..self.orbits.len())
                    .filter(|i| mask >> i & 1 == 1)
                    .try_fold(DefSet::empty(&self.model, sort)?, |acc, i| acc.union(&orbit_vals[i]))?
            };
            // T^L(A^L) = A through the generator of A^L.
            if v != a {
                failures.push(format!("representative of element {mask} defines {v}, expected {a}"));
            }
            if direct && !filter_contains(&a, &self.representative(mask)?)? {
                failures.push(format!("representative of element {mask} is not in its own filter"));
            }
            rep_vals.push(v);
        }
        let elements: Vec<DefSet> = self.elements().collect();
        let mut pairs = 0;
        let mut check = |a: u64, b: u64, failures: &mut Vec<String>| -> Result<()> {
            pairs += 1;
            let sub = a & !b == 0;
            // rep(B) ∈ A^L  iff  A ⊆ B  iff  B^L ⊆ A^L.
            let reversed = elements[a as usize].is_subset(&rep_vals[b as usize])?;
            if sub != reversed {
                failures.push(format!("order not reversed between elements {a} and {b}"));
            }
            Ok(())
        };
        if self.len() <= PAIRWISE_LIMIT {
            for a in 0..self.len() as u64 {
                for b in 0..self.len() as u64 {
                    check(a, b, &mut failures)?;
                }
            }
        } else {
            for (a, b) in self.covers() {
                check(a, b, &mut failures)?;
                check(b, a, &mut failures)?;
            }
        }
        Ok(AntiReport {
            model: self.model.name().to_string(),
            sort: sort.to_string(),
            elements: self.len(),
            pairs,
            failures,
        })
    }

    pub fn export(&self, with_formulas: bool) -> Result<LatticeExport> {
        let elements = (0..self.len() as u64)
            .map(|mask| LatticeElement { mask, points: self.element(mask).points().map(|p| tuple_string(&p)).collect() })
            .collect();
        let orbit_formulas = if with_formulas {
            self.orbit_formulas()?.iter().map(|u| u.to_string()).collect()
        } else {
            Vec::new()
        };
        Ok(LatticeExport {
            model: self.model.name().to_string(),
            sort: self.sort().to_string(),
            orbits: self.orbits.iter().map(|o| o.iter().map(|&p| tuple_string(&self.space.coords(p))).collect()).collect(),
            elements,
            hasse: self.covers(),
            orbit_formulas,
        })
    }
}

fn tuple_string(p: &[usize]) -> String {
    let inner: Vec<String> = p.iter().map(|v| v.to_string()).collect();
    format!("({})", inner.join(","))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AntiReport {
    pub model: String,
    pub sort: String,
    pub elements: usize,
    pub pairs: usize,
    pub failures: Vec<String>,
}

impl AntiReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LatticeElement {
    pub mask: u64,
    pub points: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LatticeExport {
    pub model: String,
    pub sort: String,
    pub orbits: Vec<Vec<String>>,
    pub elements: Vec<LatticeElement>,
    pub hasse: Vec<(u64, u64)>,
    pub orbit_formulas: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    fn sort(s: &str) -> Sort {
        Sort::parse(s).unwrap()
    }

    #[test]
    fn lattice_sizes() {
        assert_eq!(DefinableLattice::new(&corpus::z2(), &sort("x")).unwrap().len(), 4);
        let z3 = DefinableLattice::new(&corpus::z3(), &sort("x")).unwrap();
        assert_eq!(z3.orbits(), &[vec![0], vec![1, 2]]);
        assert_eq!(DefinableLattice::new(&corpus::trivial(), &sort("x")).unwrap().len(), 2);
        assert_eq!(DefinableLattice::new(&corpus::z4(), &sort("x")).unwrap().len(), 8);
        assert_eq!(DefinableLattice::new(&corpus::v4(), &sort("x")).unwrap().len(), 4);
        assert_eq!(DefinableLattice::new(&corpus::s3(), &sort("x,y")).unwrap().orbit_count(), 11);
    }

    #[test]
    fn orbits_match_brute_force_closure() {
        for m in corpus::all() {
            let lattice = DefinableLattice::new(&m, &sort("x,y")).unwrap();
            for (i, orbit) in lattice.orbits().iter().enumerate() {
                let single = DefSet::from_indices(&m, &sort("x,y"), [orbit[0]]).unwrap();
                assert_eq!(logical_closure(&single), lattice.element(1 << i));
            }
        }
    }

    #[test]
    fn orbit_cap() {
        let limits = crate::model::Limits { max_orbits: 3, ..Default::default() };
        let z2 = ModelRef::new(corpus::z2().renamed("z2", limits).unwrap());
        assert!(matches!(DefinableLattice::new(&z2, &sort("x,y")), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn mask_round_trip() {
        let lattice = DefinableLattice::new(&corpus::z4(), &sort("x")).unwrap();
        for mask in 0..lattice.len() as u64 {
            assert_eq!(lattice.mask_of(&lattice.element(mask)), Some(mask));
        }
        let not_closed = DefSet::from_points(lattice.model(), &sort("x"), [[1]]).unwrap();
        assert_eq!(lattice.mask_of(&not_closed), None);
        assert_eq!(lattice.covers().len(), 12);
    }

    #[test]
    fn anti_isomorphism_on_small_lattices() {
        for m in [corpus::z2(), corpus::z3(), corpus::z4(), corpus::z2p(), corpus::trivial()] {
            let report = DefinableLattice::new(&m, &sort("x")).unwrap().check_anti().unwrap();
            assert!(report.passed(), "{report:?}");
        }
    }

    #[test]
    fn export_lists_everything() {
        let lattice = DefinableLattice::new(&corpus::z3(), &sort("x")).unwrap();
        let export = lattice.export(true).unwrap();
        assert_eq!(export.elements.len(), 4);
        assert_eq!(export.elements[3].points, vec!["(0)", "(1)", "(2)"]);
        assert_eq!(export.orbit_formulas.len(), 2);
    }
}
