//! Randomized checks of the extended-boolean-algebra axioms and of the
//! morphism axioms for `s_*`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{constant_set, DefSet, Relation};
use crate::category::{preimage_set, TermMorphism};
use crate::error::Result;
use crate::model::ModelRef;
use crate::syntax::{Sort, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AxiomSampling {
    /// Random instances per axiom.
    pub instances: usize,
    pub seed: u64,
    /// Depth of random terms in morphisms and relational constants.
    pub term_depth: usize,
}

impl Default for AxiomSampling {
    fn default() -> Self {
        AxiomSampling { instances: 100, seed: 0x5eed, term_depth: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AxiomResult {
    pub axiom: &'static str,
    pub instances: usize,
    pub counterexample: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AxiomReport {
    pub model: String,
    pub sort: String,
    pub results: Vec<AxiomResult>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.counterexample.is_none())
    }

    pub fn instances(&self) -> usize {
        self.results.iter().map(|r| r.instances).sum()
    }
}

struct Sampler<'a> {
    model: &'a ModelRef,
    rng: ChaCha8Rng,
    term_depth: usize,
}

impl Sampler<'_> {
    fn set(&mut self, sort: &Sort) -> Result<DefSet> {
        let space = self.model.space(sort)?;
        let density: f64 = *[0.1, 0.5, 0.9].choose(&mut self.rng).expect("nonempty");
        let indices: Vec<usize> = (0..space.len()).filter(|_| self.rng.gen_bool(density)).collect();
        DefSet::from_indices(self.model, sort, indices)
    }

    fn var(&mut self, sort: &Sort) -> String {
        sort.vars().choose(&mut self.rng).expect("nonempty sort").clone()
    }

    fn term(&mut self, sort: &Sort, depth: usize) -> Term {
        let ops = self.model.sig().ops();
        let leaves: Vec<Term> = sort
            .vars()
            .iter()
            .map(|v| Term::var(v.clone()))
            .chain(ops.iter().filter(|o| o.arity == 0).map(|o| Term::constant(o.name.clone())))
            .collect();
        let compound: Vec<_> = ops.iter().filter(|o| o.arity > 0).collect();
        if depth == 0 || compound.is_empty() || self.rng.gen_bool(0.3) {
            return leaves.choose(&mut self.rng).expect("sort or constant").clone();
        }
        let op = *compound.choose(&mut self.rng).expect("nonempty");
        let args = (0..op.arity).map(|_| self.term(sort, depth - 1)).collect();
        Term::op(op.name.clone(), args)
    }

    fn morphism(&mut self, source: &Sort, target: &Sort) -> Result<TermMorphism> {
        let images = source.vars().iter().map(|_| self.term(target, self.term_depth)).collect();
        TermMorphism::new(source.clone(), target.clone(), images)
    }
}

/// Runs every axiom on randomized instances over `sort` and two auxiliary
/// sorts `(u,v)` and `(w)`.
///
/// Boolean-algebra items use random subsets; morphism items use random term
/// morphisms between the three sorts. The report names each axiom and, on
/// failure, the first counterexample.
pub fn check_halmos_axioms(model: &ModelRef, sort: &Sort, sampling: AxiomSampling) -> Result<AxiomReport> {
    let mut s = Sampler { model, rng: ChaCha8Rng::seed_from_u64(sampling.seed), term_depth: sampling.term_depth };
    let n = sampling.instances;
    let mut results = Vec::new();
    let mut record = |axiom: &'static str, instances: usize, counterexample: Option<String>| {
        results.push(AxiomResult { axiom, instances, counterexample });
    };
    let has_vars = !sort.is_empty();
    let aux_y = Sort::parse("u,v")?;
    let aux_z = Sort::parse("w")?;
    let has_constants = model.sig().ops().iter().any(|o| o.arity == 0);
    // Terms over an empty sort need a constant symbol.
    let sorts: Vec<Sort> = if has_vars || has_constants {
        vec![sort.clone(), aux_y.clone(), aux_z.clone()]
    } else {
        vec![aux_y.clone(), aux_z.clone()]
    };

    // ∃0 = 0 for every variable.
    let empty = DefSet::empty(model, sort)?;
    let mut bad = None;
    for x in sort.vars() {
        if !empty.cylindrify(x)?.is_empty() {
            bad = Some(format!("exists {x} of the empty set is nonempty"));
        }
    }
    record("exists-zero", sort.len(), bad);

    let mut ex_ext = None;
    let mut ex_mod = None;
    let mut ex_comm = None;
    let mut ex_idem = None;
    if has_vars {
        for _ in 0..n {
            let a = s.set(sort)?;
            let b = s.set(sort)?;
            let x = s.var(sort);
            let y = s.var(sort);
            let ea = a.cylindrify(&x)?;
            if ex_ext.is_none() && !a.is_subset(&ea)? {
                ex_ext = Some(format!("A = {a}, x = {x}"));
            }
            let lhs = a.intersection(&b.cylindrify(&x)?)?.cylindrify(&x)?;
            let rhs = ea.intersection(&b.cylindrify(&x)?)?;
            if ex_mod.is_none() && lhs != rhs {
                ex_mod = Some(format!("A = {a}, B = {b}, x = {x}"));
            }
            if ex_comm.is_none() && ea.cylindrify(&y)? != a.cylindrify(&y)?.cylindrify(&x)? {
                ex_comm = Some(format!("A = {a}, x = {x}, y = {y}"));
            }
            if ex_idem.is_none() && ea.cylindrify(&x)? != ea {
                ex_idem = Some(format!("A = {a}, x = {x}"));
            }
        }
    }
    let count = if has_vars { n } else { 0 };
    record("exists-extensive", count, ex_ext);
    record("exists-modular", count, ex_mod);
    record("exists-commute", count, ex_comm);
    record("exists-idempotent", count, ex_idem);

    // Relational constants against a direct point scan.
    let mut bad = None;
    let rel_count = if has_vars || has_constants { n } else { 0 };
    for _ in 0..rel_count {
        let (rel, arity) = match model.rels().rels().choose(&mut s.rng) {
            Some(r) if s.rng.gen_bool(0.5) => (Relation::Named(&r.name), r.arity),
            _ => (Relation::Equality, 2),
        };
        let terms: Vec<Term> = (0..arity).map(|_| s.term(sort, s.term_depth)).collect();
        let set = constant_set(rel, &terms, sort, model)?;
        let compiled = terms.iter().map(|t| model.compile(t, sort)).collect::<Result<Vec<_>>>()?;
        for coords in model.space(sort)?.iter_coords() {
            let vals: Vec<_> = compiled.iter().map(|t| t.eval(model, &coords)).collect();
            let expected = match rel {
                Relation::Equality => vals[0] == vals[1],
                Relation::Named(name) => model.holds(model.rels().lookup(name).expect("known").0, &vals),
            };
            if bad.is_none() && set.contains(&coords) != expected {
                bad = Some(format!("{rel:?} over {terms:?} at {coords:?}"));
            }
        }
    }
    record("relational-constants", rel_count, bad);

    // s_* is a boolean homomorphism.
    let mut bad = None;
    for _ in 0..n {
        let source = sorts.choose(&mut s.rng).expect("nonempty").clone();
        let target = sorts.choose(&mut s.rng).expect("nonempty").clone();
        let m = s.morphism(&source, &target)?;
        let a = s.set(&source)?;
        let b = s.set(&source)?;
        let pa = preimage_set(&m, &a)?;
        let pb = preimage_set(&m, &b)?;
        let ok = preimage_set(&m, &a.union(&b)?)? == pa.union(&pb)?
            && preimage_set(&m, &a.intersection(&b)?)? == pa.intersection(&pb)?
            && preimage_set(&m, &a.complement())? == pa.complement()
            && preimage_set(&m, &DefSet::empty(model, &source)?)?.is_empty()
            && preimage_set(&m, &DefSet::full(model, &source)?)?.is_full();
        if bad.is_none() && !ok {
            bad = Some(format!("s = [{m}], A = {a}, B = {b}"));
        }
    }
    record("morphism-boolean", n, bad);

    // s1_* s2_* = (s1 s2)_*.
    let mut bad = None;
    for _ in 0..n {
        let z = sorts.choose(&mut s.rng).expect("nonempty").clone();
        let y = sorts.choose(&mut s.rng).expect("nonempty").clone();
        let x = sorts.choose(&mut s.rng).expect("nonempty").clone();
        let s1 = s.morphism(&y, &x)?;
        let s2 = s.morphism(&z, &y)?;
        let c = s.set(&z)?;
        let lhs = preimage_set(&s1, &preimage_set(&s2, &c)?)?;
        let rhs = preimage_set(&s1.compose(&s2)?, &c)?;
        if bad.is_none() && lhs != rhs {
            bad = Some(format!("s1 = [{s1}], s2 = [{s2}], C = {c}"));
        }
    }
    record("morphism-composition", n, bad);

    // Morphisms agreeing off x agree on ∃x a.
    let mut bad = None;
    let agree_count = if has_vars { n } else { 0 };
    for _ in 0..agree_count {
        let target = sorts.choose(&mut s.rng).expect("nonempty").clone();
        let x = s.var(sort);
        let s1 = s.morphism(sort, &target)?;
        let mut images = s1.images().to_vec();
        let pos = sort.index_of(&x).expect("drawn from sort");
        images[pos] = s.term(&target, s.term_depth);
        let s2 = TermMorphism::new(sort.clone(), target, images)?;
        let a = s.set(sort)?.cylindrify(&x)?;
        if bad.is_none() && preimage_set(&s1, &a)? != preimage_set(&s2, &a)? {
            bad = Some(format!("s1 = [{s1}], s2 = [{s2}], x = {x}, A = {a}"));
        }
    }
    record("morphism-quantifier-agreement", agree_count, bad);

    // s(x) = y with y outside the supports of the other images:
    // s_* ∃x a = ∃y s_* a.
    let mut bad = None;
    let shift_count = if has_vars { n } else { 0 };
    for _ in 0..shift_count {
        let target = if s.rng.gen_bool(0.5) { sort.clone() } else { aux_y.clone() };
        let x = s.var(sort);
        let y = s.var(&target);
        let others: Vec<String> = target.vars().iter().filter(|v| **v != y).cloned().collect();
        let rest = Sort::new(others)?;
        let images = sort
            .vars()
            .iter()
            .map(|v| if *v == x { Term::var(y.clone()) } else { s.term(&rest, s.term_depth) })
            .collect();
        let m = TermMorphism::new(sort.clone(), target, images)?;
        let a = s.set(sort)?;
        let lhs = preimage_set(&m, &a.cylindrify(&x)?)?;
        let rhs = preimage_set(&m, &a)?.cylindrify(&y)?;
        if bad.is_none() && lhs != rhs {
            bad = Some(format!("s = [{m}], x = {x}, A = {a}"));
        }
    }
    record("morphism-quantifier-shift", shift_count, bad);

    // s_* φ(w̄) = φ(s w̄).
    let mut bad = None;
    for _ in 0..n {
        let source = sorts.choose(&mut s.rng).expect("nonempty").clone();
        let target = sorts.choose(&mut s.rng).expect("nonempty").clone();
        let m = s.morphism(&source, &target)?;
        let (rel, arity) = match model.rels().rels().choose(&mut s.rng) {
            Some(r) if s.rng.gen_bool(0.5) => (Relation::Named(&r.name), r.arity),
            _ => (Relation::Equality, 2),
        };
        let terms: Vec<Term> = (0..arity).map(|_| s.term(&source, s.term_depth)).collect();
        let lhs = preimage_set(&m, &constant_set(rel, &terms, &source, model)?)?;
        let map = m.substitution();
        let moved = terms.iter().map(|t| t.substitute(&map)).collect::<Result<Vec<_>>>()?;
        let rhs = constant_set(rel, &moved, &target, model)?;
        if bad.is_none() && lhs != rhs {
            bad = Some(format!("s = [{m}], {rel:?} over {terms:?}"));
        }
    }
    record("morphism-atoms", n, bad);

    Ok(AxiomReport { model: model.name().to_string(), sort: sort.to_string(), results })
}
