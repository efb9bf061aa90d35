//! Depth-bounded enumeration of terms, morphisms and formulas, deduplicated
//! semantically, and the exhaustive diagram checks run over them.

use std::collections::{BTreeSet, HashSet};

use serde::Serialize;

use super::{check_diagram2, preimage_set, pushforward_formula, TermMorphism};
use crate::error::{Error, Result};
use crate::galois::DefinableLattice;
use crate::halmos::val;
use crate::model::{Elem, FiniteModel, ModelRef, Odometer};
use crate::syntax::{Formula, Sort, Term};

/// Largest number of term functions collected per sort.
const TERM_CAP: usize = 4096;
/// Largest morphism grid built for one pair of sorts.
const MORPHISM_CAP: usize = 1 << 16;

/// Terms over `sort` of depth `<= depth`, one per distinct term function.
///
/// Term functions are compared on every point of every given model, so the
/// list is a valid grid for all of them at once. Terms are produced in
/// order of depth: variables, constants, then operation applications.
pub fn term_grid(models: &[&FiniteModel], sort: &Sort, depth: usize) -> Result<Vec<Term>> {
    let first = models.first().ok_or(Error::ModelMismatch)?;
    if models.iter().any(|m| !m.same_signature(first)) {
        return Err(Error::SignatureMismatch);
    }
    let spaces = models.iter().map(|m| m.space(sort)).collect::<Result<Vec<_>>>()?;
    let mut terms: Vec<Term> = Vec::new();
    let mut values: Vec<Vec<Elem>> = Vec::new();
    let mut seen: HashSet<Vec<Elem>> = HashSet::new();
    let mut push = |term: Term, value: Vec<Elem>, terms: &mut Vec<Term>, values: &mut Vec<Vec<Elem>>| {
        if seen.insert(value.clone()) {
            terms.push(term);
            values.push(value);
        }
    };
    for (i, v) in sort.vars().iter().enumerate() {
        let value = spaces.iter().flat_map(|s| s.iter_coords().map(move |c| c[i])).collect();
        push(Term::var(v.clone()), value, &mut terms, &mut values);
    }
    let sig = first.sig();
    for (k, op) in sig.ops().iter().enumerate() {
        if op.arity == 0 {
            let value = models.iter().zip(&spaces).flat_map(|(m, s)| std::iter::repeat(m.apply(k, &[])).take(s.len())).collect();
            push(Term::constant(op.name.clone()), value, &mut terms, &mut values);
        }
    }
    let mut old = 0;
    for _ in 0..depth {
        let current = terms.len();
        for (k, op) in sig.ops().iter().enumerate() {
            if op.arity == 0 {
                continue;
            }
            for idx in Odometer::new(current, op.arity) {
                if idx.iter().all(|&i| i < old) {
                    continue;
                }
                let mut value = Vec::with_capacity(values[0].len());
                let mut offset = 0;
                for (m, s) in models.iter().zip(&spaces) {
                    for p in 0..s.len() {
                        let args: Vec<Elem> = idx.iter().map(|&i| values[i][offset + p]).collect();
                        value.push(m.apply(k, &args));
                    }
                    offset += s.len();
                }
                let term = Term::op(op.name.clone(), idx.iter().map(|&i| terms[i].clone()).collect());
                push(term, value, &mut terms, &mut values);
                if terms.len() > TERM_CAP {
                    return Err(Error::CapExceeded {
                        what: format!("term grid over {sort}"),
                        size: terms.len() as u128,
                        cap: TERM_CAP as u128,
                    });
                }
            }
        }
        if terms.len() == current {
            break;
        }
        old = current;
    }
    Ok(terms)
}

/// Every morphism `W(source) → W(target)` whose images come from `terms`.
pub fn morphism_grid(source: &Sort, target: &Sort, terms: &[Term]) -> Result<Vec<TermMorphism>> {
    let count = (terms.len() as u128).saturating_pow(source.len() as u32);
    if count > MORPHISM_CAP as u128 {
        return Err(Error::CapExceeded { what: format!("morphism grid {source} -> {target}"), size: count, cap: MORPHISM_CAP as u128 });
    }
    Odometer::new(terms.len(), source.len())
        .map(|idx| TermMorphism::new(source.clone(), target.clone(), idx.iter().map(|&i| terms[i].clone()).collect()))
        .collect()
}

/// A grid of formulas over `sort`: atoms of term depth `<= depth` and their
/// negations, then one- and two-quantifier formulas over atoms of depth
/// `<= 1`. Bound variables are drawn from `sort`, from `capture` (names a
/// substitution may introduce) and a fresh `z`, so that renaming is
/// exercised. Atoms are deduplicated by value; quantified formulas by value
/// and bound-variable pattern.
pub fn formula_grid(model: &ModelRef, sort: &Sort, depth: usize, capture: &[String]) -> Result<Vec<Formula>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    let atoms = atoms_over(model, sort, depth)?;
    for a in &atoms {
        for u in [a.clone(), a.clone().not()] {
            let key = (val(&u, sort, model)?.bits().clone(), Vec::<String>::new());
            if seen.insert(key) {
                out.push(u);
            }
        }
    }
    let mut binders: BTreeSet<String> = sort.vars().iter().cloned().collect();
    binders.extend(capture.iter().cloned());
    binders.insert("z".into());
    let binders: Vec<String> = binders.into_iter().collect();
    for b in &binders {
        let inner = if sort.contains(b) { sort.clone() } else { sort.extended(b)? };
        for a in atoms_over(model, &inner, 1)? {
            for u in [Formula::exists(b.clone(), a.clone()), Formula::forall(b.clone(), a)] {
                let key = (val(&u, sort, model)?.bits().clone(), vec![b.clone()]);
                if seen.insert(key) {
                    out.push(u);
                }
            }
        }
    }
    for b1 in &binders {
        for b2 in binders.iter().filter(|b2| *b2 != b1) {
            let mut inner = sort.clone();
            for b in [b1, b2] {
                if !inner.contains(b) {
                    inner = inner.extended(b)?;
                }
            }
            for a in atoms_over(model, &inner, 1)? {
                let candidates = [
                    Formula::exists(b1.clone(), Formula::forall(b2.clone(), a.clone())),
                    Formula::forall(b1.clone(), Formula::exists(b2.clone(), a)),
                ];
                for u in candidates {
                    let key = (val(&u, sort, model)?.bits().clone(), vec![b1.clone(), b2.clone()]);
                    if seen.insert(key) {
                        out.push(u);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Equalities and relation atoms over `sort`, one per distinct value.
fn atoms_over(model: &ModelRef, sort: &Sort, depth: usize) -> Result<Vec<Formula>> {
    let terms = term_grid(&[model], sort, depth)?;
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    let mut consider = |u: Formula, out: &mut Vec<Formula>| -> Result<()> {
        if seen.insert(val(&u, sort, model)?.bits().clone()) {
            out.push(u);
        }
        Ok(())
    };
    for i in 0..terms.len() {
        for j in i + 1..terms.len() {
            consider(Formula::eq(terms[i].clone(), terms[j].clone()), &mut out)?;
        }
    }
    for rel in model.rels().rels() {
        for idx in Odometer::new(terms.len(), rel.arity) {
            consider(Formula::rel(rel.name.clone(), idx.iter().map(|&i| terms[i].clone()).collect()), &mut out)?;
        }
    }
    Ok(out)
}

/// Outcome of an exhaustive diagram sweep.
#[derive(Debug, Clone, Default, Serialize)]
pub struct GridReport {
    pub morphisms: usize,
    pub formulas: usize,
    pub cells: usize,
    pub failures: Vec<String>,
}

impl GridReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn absorb(&mut self, other: GridReport) {
        self.morphisms += other.morphisms;
        self.formulas += other.formulas;
        self.cells += other.cells;
        self.failures.extend(other.failures);
    }
}

/// Diagram (1) on every morphism `source → target` with images of depth
/// `<= term_depth` and every formula of the grid over `source`.
pub fn diagram1_sweep(model: &ModelRef, source: &Sort, target: &Sort, term_depth: usize, formula_depth: usize) -> Result<GridReport> {
    let terms = term_grid(&[model], target, term_depth)?;
    let morphisms = morphism_grid(source, target, &terms)?;
    let formulas = formula_grid(model, source, formula_depth, target.vars())?;
    let vals = formulas.iter().map(|v| val(v, source, model)).collect::<Result<Vec<_>>>()?;
    let mut report = GridReport { morphisms: morphisms.len(), formulas: formulas.len(), ..GridReport::default() };
    for s in &morphisms {
        for (v, b) in formulas.iter().zip(&vals) {
            let lhs = val(&pushforward_formula(s, v)?, target, model)?;
            let rhs = preimage_set(s, b)?;
            report.cells += 1;
            if lhs != rhs {
                report.failures.push(format!("{}: s = [{s}], v = {v}", model.name()));
            }
        }
    }
    Ok(report)
}

/// Diagram (2) on every morphism of the grid and every definable `B₀` over
/// `source`; a cell passes when `A₀ = A`, `B ⊆ B₀` and `A → B` is regular.
pub fn diagram2_sweep(model: &ModelRef, source: &Sort, target: &Sort, term_depth: usize) -> Result<GridReport> {
    let terms = term_grid(&[model], target, term_depth)?;
    let morphisms = morphism_grid(source, target, &terms)?;
    let lattice = DefinableLattice::new(model, source)?;
    let mut report = GridReport { morphisms: morphisms.len(), formulas: lattice.len(), ..GridReport::default() };
    for s in &morphisms {
        for b0 in lattice.elements() {
            let r = check_diagram2(s, &b0)?;
            report.cells += 1;
            if !(r.a0_equals_a() && r.b_within_b0(&b0) && r.is_regular(s)) {
                report.failures.push(format!("{}: s = [{s}], B0 = {b0}", model.name()));
            }
        }
    }
    Ok(report)
}

/// Both diagram sweeps over all sorts drawn from `(x)`, `(x,y)` for the
/// target and `(u)`, `(u,v)` for the source.
pub fn diagram_suite(model: &ModelRef, term_depth: usize, formula_depth: usize) -> Result<(GridReport, GridReport)> {
    let targets = [Sort::parse("x")?, Sort::parse("x,y")?];
    let sources = [Sort::parse("u")?, Sort::parse("u,v")?];
    let mut d1 = GridReport::default();
    let mut d2 = GridReport::default();
    for target in &targets {
        for source in &sources {
            d1.absorb(diagram1_sweep(model, source, target, term_depth, formula_depth)?);
            d2.absorb(diagram2_sweep(model, source, target, term_depth)?);
        }
    }
    Ok((d1, d2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    #[test]
    fn z3_term_functions() {
        // Unary term functions of Z3 are x -> kx.
        let z3 = corpus::z3();
        let terms = term_grid(&[&z3], &Sort::parse("x").unwrap(), 3).unwrap();
        assert_eq!(terms.len(), 3);
        assert_eq!(terms[0], Term::var("x"));
        assert_eq!(terms[1], Term::constant("e"));
        let two = term_grid(&[&z3], &Sort::parse("x,y").unwrap(), 3).unwrap();
        assert_eq!(two.len(), 9);
    }

    #[test]
    fn joint_grid_separates_models() {
        let z2 = corpus::z2();
        let z3 = corpus::z3();
        let x = Sort::parse("x").unwrap();
        assert_eq!(term_grid(&[&z2], &x, 2).unwrap().len(), 2);
        // x -> kx with k taken mod 6 once both models are consulted.
        assert_eq!(term_grid(&[&z2, &z3], &x, 2).unwrap().len(), 6);
    }

    #[test]
    fn morphism_grid_is_a_product() {
        let z2 = corpus::z2();
        let x = Sort::parse("x").unwrap();
        let terms = term_grid(&[&z2], &x, 2).unwrap();
        let grid = morphism_grid(&Sort::parse("u,v").unwrap(), &x, &terms).unwrap();
        assert_eq!(grid.len(), 4);
    }

    #[test]
    fn small_sweeps_pass() {
        let z2p = corpus::z2p();
        let (d1, d2) = diagram_suite(&z2p, 1, 1).unwrap();
        assert!(d1.passed(), "{:?}", d1.failures);
        assert!(d2.passed(), "{:?}", d2.failures);
        assert!(d1.cells > 100);
    }
}
