//! The two Galois correspondences between formula sets and point sets:
//! equational (`T'`, `A'`, algebraic sets, `H`-closed congruences) and
//! logical (`T^L`, `A^L`, definable sets, `H`-closed filters).

mod lattice;

use fixedbitset::FixedBitSet;

use crate::error::{Error, Result};
use crate::halmos::{constant_set, val, DefSet, Relation};
use crate::model::{generated_subalgebra, Elem, ModelRef, Odometer, Origin};
use crate::syntax::{Formula, Sort, Term};

pub use crate::oracle::logical_closure_oracle;
pub use lattice::{AntiReport, DefinableLattice, LatticeExport};

/// `T^L`: the points at which every formula of `T` holds.
pub fn definable_set_of(t: &[Formula], sort: &Sort, model: &ModelRef) -> Result<DefSet> {
    let mut out = DefSet::full(model, sort)?;
    for u in t {
        out = out.intersection(&val(u, sort, model)?)?;
    }
    Ok(out)
}

/// `u ∈ A^L`, i.e. `A ⊆ Val(u)`.
pub fn filter_contains(a: &DefSet, u: &Formula) -> Result<bool> {
    a.is_subset(&val(u, a.sort(), a.model())?)
}

/// `A^LL`: the closure of `A` under the automorphism group acting
/// coordinatewise on points.
pub fn logical_closure(a: &DefSet) -> DefSet {
    let model = a.model();
    let auts = model.automorphisms();
    let mut out = a.clone();
    let mut image = vec![0; a.sort().len()];
    for coords in a.points() {
        for alpha in auts {
            for (slot, &c) in image.iter_mut().zip(&coords) {
                *slot = alpha.apply(c);
            }
            out.insert(&image);
        }
    }
    out
}

/// `u ∈ T^LL`, i.e. `T^L ⊆ Val(u)`.
pub fn formula_closure_contains(t: &[Formula], u: &Formula, sort: &Sort, model: &ModelRef) -> Result<bool> {
    definable_set_of(t, sort, model)?.is_subset(&val(u, sort, model)?)
}

/// `T'`: the points satisfying every equation of `T`.
pub fn algebraic_set_of(t: &[Formula], sort: &Sort, model: &ModelRef) -> Result<DefSet> {
    let mut out = DefSet::full(model, sort)?;
    for u in t {
        let Formula::Eq(lhs, rhs) = u else {
            return Err(Error::NonEquational(u.to_string()));
        };
        out = out.intersection(&constant_set(Relation::Equality, &[lhs.clone(), rhs.clone()], sort, model)?)?;
    }
    Ok(out)
}

/// `(w, w') ∈ A'`: the two terms agree at every point of `A`.
pub fn congruence_contains(a: &DefSet, w: &Term, w2: &Term) -> Result<bool> {
    let model = a.model();
    let lhs = model.compile(w, a.sort())?;
    let rhs = model.compile(w2, a.sort())?;
    Ok(a.points().all(|p| lhs.eval(model, &p) == rhs.eval(model, &p)))
}

/// `A''`: the points `μ` such that `x̂ ↦ μ(x)` extends to a homomorphism
/// from the subalgebra of `H^A` generated by the coordinate tuples `x̂`.
///
/// Equivalently, `μ` satisfies every equation that holds throughout `A`.
/// For `A = ∅` this is the set of points at which all terms coincide.
pub fn algebraic_closure(a: &DefSet) -> Result<DefSet> {
    let model = a.model();
    let sort = a.sort();
    let members: Vec<Vec<Elem>> = a.points().collect();
    let seeds: Vec<(String, Vec<Elem>)> = sort
        .vars()
        .iter()
        .enumerate()
        .map(|(i, v)| (v.clone(), members.iter().map(|p| p[i]).collect()))
        .collect();
    let sub = generated_subalgebra(model, &seeds, members.len())?;
    let size = sub.len();
    // Operation tables of the subalgebra, by element position.
    let ops = model.sig().ops();
    let mut tables: Vec<Vec<usize>> = Vec::with_capacity(ops.len());
    for (k, op) in ops.iter().enumerate() {
        let cells = (size as u128).saturating_pow(op.arity as u32);
        let cap = model.limits().max_points as u128;
        if cells > cap {
            return Err(Error::CapExceeded { what: format!("subalgebra table for {}", op.name), size: cells, cap });
        }
        let table = Odometer::new(size, op.arity)
            .map(|args| {
                let tuple: Vec<Elem> = (0..members.len())
                    .map(|c| {
                        let vals: Vec<Elem> = args.iter().map(|&i| sub.elements()[i][c]).collect();
                        model.apply(k, &vals)
                    })
                    .collect();
                sub.position(&tuple).expect("subalgebra is closed")
            })
            .collect();
        tables.push(table);
    }
    let seed_pos: Vec<usize> = seeds.iter().map(|(_, t)| sub.position(t).expect("seed present")).collect();
    let space = model.space(sort)?;
    let mut bits = FixedBitSet::with_capacity(space.len());
    let mut h = vec![0; size];
    for (index, mu) in space.iter_coords().enumerate() {
        for (i, origin) in sub.origins().iter().enumerate() {
            h[i] = match origin {
                Origin::Var(v) => mu[sort.index_of(v).expect("seed variable")],
                Origin::Op { op, args, .. } => {
                    let vals: Vec<Elem> = args.iter().map(|&j| h[j]).collect();
                    model.apply(*op, &vals)
                }
            };
        }
        let seeds_ok = seed_pos.iter().zip(&mu).all(|(&p, &v)| h[p] == v);
        let hom = seeds_ok
            && ops.iter().enumerate().all(|(k, op)| {
                Odometer::new(size, op.arity).enumerate().all(|(cell, args)| {
                    let vals: Vec<Elem> = args.iter().map(|&j| h[j]).collect();
                    h[tables[k][cell]] == model.apply(k, &vals)
                })
            });
        if hom {
            bits.insert(index);
        }
    }
    Ok(DefSet::from_bits(model, space, bits))
}

/// An `H`-closed filter `A^L`, represented by its closed set `A`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterHandle {
    set: DefSet,
}

impl FilterHandle {
    /// The filter `A^L`; its representing set is `A^LL`.
    pub fn new(a: &DefSet) -> Self {
        FilterHandle { set: logical_closure(a) }
    }

    /// The filter `T^LL` generated by a finite formula set.
    pub fn generated(t: &[Formula], sort: &Sort, model: &ModelRef) -> Result<Self> {
        Ok(FilterHandle { set: definable_set_of(t, sort, model)? })
    }

    pub fn set(&self) -> &DefSet {
        &self.set
    }

    pub fn contains(&self, u: &Formula) -> Result<bool> {
        filter_contains(&self.set, u)
    }

    /// Filter inclusion `self ⊆ other`, i.e. reverse inclusion of sets.
    pub fn is_subfilter(&self, other: &FilterHandle) -> Result<bool> {
        other.set.is_subset(&self.set)
    }
}

/// An `H`-closed congruence `A'`, represented by its algebraic set `A''`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CongruenceHandle {
    set: DefSet,
}

impl CongruenceHandle {
    pub fn new(a: &DefSet) -> Result<Self> {
        Ok(CongruenceHandle { set: algebraic_closure(a)? })
    }

    pub fn set(&self) -> &DefSet {
        &self.set
    }

    pub fn contains(&self, w: &Term, w2: &Term) -> Result<bool> {
        congruence_contains(&self.set, w, w2)
    }
}
