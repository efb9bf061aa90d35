//! The extended boolean algebra `Hal^X(f)` of subsets of `Hom(W(X), H)`,
//! with cylindrifications `∃x`, relational constants, and the valuation
//! `Val^X` of formulas.

mod axioms;

use std::fmt;

use fixedbitset::FixedBitSet;

use crate::error::{Error, Result};
use crate::model::{same_model, write_tuple, Elem, ModelRef, Point, Space};
use crate::syntax::{check_in_sort, Formula, Sort, Term};

pub use axioms::{check_halmos_axioms, AxiomReport, AxiomResult, AxiomSampling};

/// A subset of the point space `H^X` of one model, stored densely by point
/// index.
#[derive(Clone)]
pub struct DefSet {
    model: ModelRef,
    space: Space,
    bits: FixedBitSet,
}

impl DefSet {
    pub fn empty(model: &ModelRef, sort: &Sort) -> Result<Self> {
        let space = model.space(sort)?;
        let bits = FixedBitSet::with_capacity(space.len());
        Ok(DefSet { model: model.clone(), space, bits })
    }

    pub fn full(model: &ModelRef, sort: &Sort) -> Result<Self> {
        let mut set = Self::empty(model, sort)?;
        set.bits.insert_range(..);
        Ok(set)
    }

    /// The set of the given coordinate vectors.
    pub fn from_points<I>(model: &ModelRef, sort: &Sort, points: I) -> Result<Self>
    where
        I: IntoIterator,
        I::Item: AsRef<[Elem]>,
    {
        let mut set = Self::empty(model, sort)?;
        for p in points {
            let p = p.as_ref();
            if p.len() != sort.len() || p.iter().any(|&v| v >= model.size()) {
                return Err(Error::SortMismatch {
                    expected: format!("point of {sort} over 0..{}", model.size()),
                    found: format!("{p:?}"),
                });
            }
            set.bits.insert(set.space.index(p));
        }
        Ok(set)
    }

    pub fn from_indices(model: &ModelRef, sort: &Sort, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut set = Self::empty(model, sort)?;
        for i in indices {
            set.bits.insert(i);
        }
        Ok(set)
    }

    pub(crate) fn from_bits(model: &ModelRef, space: Space, bits: FixedBitSet) -> Self {
        debug_assert_eq!(bits.len(), space.len());
        DefSet { model: model.clone(), space, bits }
    }

    pub fn model(&self) -> &ModelRef {
        &self.model
    }

    pub fn sort(&self) -> &Sort {
        self.space.sort()
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn bits(&self) -> &FixedBitSet {
        &self.bits
    }

    /// Number of points in the set.
    pub fn count(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_clear()
    }

    pub fn is_full(&self) -> bool {
        self.bits.is_full()
    }

    pub fn contains(&self, coords: &[Elem]) -> bool {
        coords.len() == self.sort().len()
            && coords.iter().all(|&c| c < self.model.size())
            && self.bits.contains(self.space.index(coords))
    }

    pub fn contains_point(&self, point: &Point) -> bool {
        point.sort == *self.sort() && self.contains(&point.values)
    }

    pub fn contains_index(&self, index: usize) -> bool {
        self.bits.contains(index)
    }

    pub fn insert(&mut self, coords: &[Elem]) {
        self.bits.insert(self.space.index(coords));
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.ones()
    }

    /// Member coordinate vectors in lexicographic order.
    pub fn points(&self) -> impl Iterator<Item = Vec<Elem>> + '_ {
        self.bits.ones().map(|i| self.space.coords(i))
    }

    fn check_compatible(&self, other: &DefSet) -> Result<()> {
        if !same_model(&self.model, &other.model) {
            return Err(Error::ModelMismatch);
        }
        if self.sort() != other.sort() {
            return Err(Error::SortMismatch { expected: self.sort().to_string(), found: other.sort().to_string() });
        }
        Ok(())
    }

    pub fn union(&self, other: &DefSet) -> Result<DefSet> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        out.bits.union_with(&other.bits);
        Ok(out)
    }

    pub fn intersection(&self, other: &DefSet) -> Result<DefSet> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        out.bits.intersect_with(&other.bits);
        Ok(out)
    }

    pub fn difference(&self, other: &DefSet) -> Result<DefSet> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        out.bits.difference_with(&other.bits);
        Ok(out)
    }

    pub fn complement(&self) -> DefSet {
        let mut out = self.clone();
        out.bits.toggle_range(..);
        out
    }

    pub fn is_subset(&self, other: &DefSet) -> Result<bool> {
        self.check_compatible(other)?;
        Ok(self.bits.is_subset(&other.bits))
    }

    /// `∃x A`: a point belongs to the result iff some point of `A` agrees
    /// with it off `x`.
    ///
    /// Implemented as an OR-smear along the `x` axis of the mixed-radix index.
    pub fn cylindrify(&self, var: &str) -> Result<DefSet> {
        let axis = self
            .sort()
            .index_of(var)
            .ok_or_else(|| Error::NotInSort { var: var.to_string(), sort: self.sort().to_string() })?;
        let n = self.model.size();
        let stride = self.space.stride(axis);
        let block = stride * n;
        let mut bits = FixedBitSet::with_capacity(self.space.len());
        for base in (0..self.space.len()).step_by(block) {
            for lo in 0..stride {
                let hit = (0..n).any(|d| self.bits.contains(base + d * stride + lo));
                if hit {
                    for d in 0..n {
                        bits.insert(base + d * stride + lo);
                    }
                }
            }
        }
        Ok(DefSet::from_bits(&self.model, self.space.clone(), bits))
    }

    /// `∀x A = ¬∃x¬A`.
    pub fn universal(&self, var: &str) -> Result<DefSet> {
        Ok(self.complement().cylindrify(var)?.complement())
    }

    /// Restriction along the inclusion `X ⊂ X ∪ {y}` where `y` is the last
    /// coordinate and the set is already cylindrical in `y`.
    fn drop_last(&self, outer: &Sort) -> Result<DefSet> {
        let n = self.model.size();
        let mut out = DefSet::empty(&self.model, outer)?;
        for i in 0..out.space.len() {
            if self.bits.contains(i * n) {
                out.bits.insert(i);
            }
        }
        Ok(out)
    }

    /// Members printed as tuples, e.g. `{(0,1),(1,0)}`.
    pub fn to_tuple_string(&self) -> String {
        let mut s = String::from("{");
        for (i, p) in self.points().enumerate() {
            if i > 0 {
                s.push(',');
            }
            write_tuple(&mut s, &p).expect("string write");
        }
        s.push('}');
        s
    }
}

impl PartialEq for DefSet {
    fn eq(&self, other: &Self) -> bool {
        self.sort() == other.sort() && self.bits == other.bits && same_model(&self.model, &other.model)
    }
}

impl Eq for DefSet {}

/// Single-variable sorts print bare elements: `{1,2}`.
impl fmt::Display for DefSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.sort().len() == 1 {
            let items: Vec<String> = self.points().map(|p| p[0].to_string()).collect();
            write!(f, "{{{}}}", items.join(","))
        } else {
            f.write_str(&self.to_tuple_string())
        }
    }
}

impl fmt::Debug for DefSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DefSet[{} {}]{}", self.model.name(), self.sort(), self.to_tuple_string())
    }
}

/// Relation used by [`constant_set`]: a named symbol or built-in equality.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation<'a> {
    Equality,
    Named(&'a str),
}

/// `[φ(w₁,…,w_m)]`: the points whose term values lie in `f(φ)`.
pub fn constant_set(rel: Relation<'_>, terms: &[Term], sort: &Sort, model: &ModelRef) -> Result<DefSet> {
    let compiled = terms.iter().map(|t| model.compile(t, sort)).collect::<Result<Vec<_>>>()?;
    let rel_index = match rel {
        Relation::Equality => {
            if terms.len() != 2 {
                return Err(Error::Arity { name: "==".into(), expected: 2, found: terms.len() });
            }
            None
        }
        Relation::Named(name) => {
            let (idx, arity) = model.rels().lookup(name).ok_or_else(|| Error::UnknownSymbol(name.to_string()))?;
            if arity != terms.len() {
                return Err(Error::Arity { name: name.to_string(), expected: arity, found: terms.len() });
            }
            Some(idx)
        }
    };
    let space = model.space(sort)?;
    let mut bits = FixedBitSet::with_capacity(space.len());
    let mut values = vec![0; compiled.len()];
    for (i, coords) in space.iter_coords().enumerate() {
        for (slot, t) in values.iter_mut().zip(&compiled) {
            *slot = t.eval(model, &coords);
        }
        let hit = match rel_index {
            None => values[0] == values[1],
            Some(r) => model.holds(r, &values),
        };
        if hit {
            bits.insert(i);
        }
    }
    Ok(DefSet::from_bits(model, space, bits))
}

/// `Val^X(u)`: the set of points of `H^X` satisfying `u`.
///
/// Quantifiers over a variable outside `X` are evaluated in the extended
/// sort `X ∪ {y}`, cylindrified there and restricted back along the
/// inclusion.
pub fn val(u: &Formula, sort: &Sort, model: &ModelRef) -> Result<DefSet> {
    check_in_sort(u, sort)?;
    val_rec(u, sort, model)
}

fn val_rec(u: &Formula, sort: &Sort, model: &ModelRef) -> Result<DefSet> {
    match u {
        Formula::Eq(a, b) => constant_set(Relation::Equality, &[a.clone(), b.clone()], sort, model),
        Formula::Rel(name, args) => constant_set(Relation::Named(name), args, sort, model),
        Formula::Not(v) => Ok(val_rec(v, sort, model)?.complement()),
        Formula::And(a, b) => val_rec(a, sort, model)?.intersection(&val_rec(b, sort, model)?),
        Formula::Or(a, b) => val_rec(a, sort, model)?.union(&val_rec(b, sort, model)?),
        Formula::Exists(x, body) => exists(x, body, sort, model),
        Formula::Forall(x, body) => Ok(exists(x, &body.clone().not(), sort, model)?.complement()),
    }
}

fn exists(x: &str, body: &Formula, sort: &Sort, model: &ModelRef) -> Result<DefSet> {
    if sort.contains(x) {
        val_rec(body, sort, model)?.cylindrify(x)
    } else {
        let extended = sort.extended(x)?;
        val_rec(body, &extended, model)?.cylindrify(x)?.drop_last(sort)
    }
}

/// Whether `u ∈ LKer(μ)`, i.e. `μ ∈ Val(u)`.
pub fn satisfies(model: &ModelRef, point: &Point, u: &Formula) -> Result<bool> {
    Ok(val(u, &point.sort, model)?.contains(&point.values))
}

/// Whether `u ∈ Th^X(f)`: `u` holds at every point.
pub fn theory_contains(u: &Formula, sort: &Sort, model: &ModelRef) -> Result<bool> {
    Ok(val(u, sort, model)?.is_full())
}
