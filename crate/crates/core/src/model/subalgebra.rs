use std::collections::HashMap;

use super::{Elem, FiniteModel, Odometer};
use crate::error::{Error, Result};
use crate::syntax::Term;

/// How an element of a generated subalgebra was first reached.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Var(String),
    /// Operation `name` (index `op`) applied to earlier elements.
    Op { op: usize, name: String, args: Vec<usize> },
}

/// A subalgebra of a power `H^A`, each element paired with a term that
/// evaluates to it coordinatewise.
///
/// Witness terms are rebuilt on demand from the discovery origins; storing
/// them would duplicate shared subterms.
#[derive(Debug, Clone)]
pub struct Subalgebra {
    width: usize,
    elements: Vec<Vec<Elem>>,
    origins: Vec<Origin>,
    index: HashMap<Vec<Elem>, usize>,
}

impl Subalgebra {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Elements in discovery order (generators, constants, then by rounds).
    pub fn elements(&self) -> &[Vec<Elem>] {
        &self.elements
    }

    pub fn origins(&self) -> &[Origin] {
        &self.origins
    }

    /// The witness term of element `i`.
    pub fn witness_at(&self, i: usize) -> Term {
        match &self.origins[i] {
            Origin::Var(v) => Term::var(v.clone()),
            Origin::Op { name, args, .. } => Term::op(name.clone(), args.iter().map(|&a| self.witness_at(a)).collect()),
        }
    }

    pub fn position(&self, tuple: &[Elem]) -> Option<usize> {
        self.index.get(tuple).copied()
    }

    pub fn contains(&self, tuple: &[Elem]) -> bool {
        self.index.contains_key(tuple)
    }

    pub fn witness(&self, tuple: &[Elem]) -> Option<Term> {
        self.position(tuple).map(|i| self.witness_at(i))
    }

    fn push(&mut self, tuple: Vec<Elem>, origin: Origin, cap: usize) -> Result<bool> {
        if self.index.contains_key(&tuple) {
            return Ok(false);
        }
        if self.elements.len() >= cap {
            return Err(Error::CapExceeded {
                what: "generated subalgebra".into(),
                size: self.elements.len() as u128 + 1,
                cap: cap as u128,
            });
        }
        self.index.insert(tuple.clone(), self.elements.len());
        self.elements.push(tuple);
        self.origins.push(origin);
        Ok(true)
    }
}

/// The subalgebra of `H^width` generated by the seed tuples (one per
/// variable) under coordinatewise operations; nullary operations contribute
/// their constant tuples.
///
/// Closure runs in rounds; round `k` only combines argument tuples that use
/// at least one element found in round `k - 1`, so witnesses have minimal
/// depth among the terms explored.
pub fn generated_subalgebra(model: &FiniteModel, seeds: &[(String, Vec<Elem>)], width: usize) -> Result<Subalgebra> {
    let cap = model.limits().max_subalgebra;
    let mut sub = Subalgebra { width, elements: Vec::new(), origins: Vec::new(), index: HashMap::new() };
    for (var, tuple) in seeds {
        if tuple.len() != width || tuple.iter().any(|&v| v >= model.size()) {
            return Err(Error::InvalidModel { path: format!("seed {var}"), message: "malformed seed tuple".into() });
        }
        sub.push(tuple.clone(), Origin::Var(var.clone()), cap)?;
    }
    for (k, op) in model.sig().ops().iter().enumerate() {
        if op.arity == 0 {
            let origin = Origin::Op { op: k, name: op.name.clone(), args: Vec::new() };
            sub.push(vec![model.apply(k, &[]); width], origin, cap)?;
        }
    }
    let mut old = 0;
    loop {
        let current = sub.len();
        if current == old {
            break;
        }
        for (k, op) in model.sig().ops().iter().enumerate() {
            if op.arity == 0 {
                continue;
            }
            for idx in Odometer::new(current, op.arity) {
                if idx.iter().all(|&i| i < old) {
                    continue;
                }
                let tuple: Vec<Elem> = (0..width)
                    .map(|c| {
                        let args: Vec<Elem> = idx.iter().map(|&i| sub.elements[i][c]).collect();
                        model.apply(k, &args)
                    })
                    .collect();
                if !sub.index.contains_key(&tuple) {
                    let origin = Origin::Op { op: k, name: op.name.clone(), args: idx.clone() };
                    sub.push(tuple, origin, cap)?;
                }
            }
        }
        old = current;
    }
    Ok(sub)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::model::{eval_term, Point};
    use crate::syntax::Sort;

    #[test]
    fn constants_only() {
        let z3 = corpus::z3();
        let sub = generated_subalgebra(&z3, &[], 2).unwrap();
        assert_eq!(sub.elements(), &[vec![0, 0]]);
        assert_eq!(sub.witness_at(0), Term::constant("e"));
    }

    #[test]
    fn one_point_in_z2() {
        let z2 = corpus::z2();
        let sub = generated_subalgebra(&z2, &[("x".into(), vec![1])], 1).unwrap();
        assert_eq!(sub.elements(), &[vec![1], vec![0]]);
        assert_eq!(sub.witness(&[1]), Some(Term::var("x")));
        // e is found before mul(x,x)
        assert_eq!(sub.witness(&[0]), Some(Term::constant("e")));
    }

    #[test]
    fn two_points_in_z3() {
        let z3 = corpus::z3();
        let sub = generated_subalgebra(&z3, &[("x".into(), vec![1, 2])], 2).unwrap();
        let mut elems = sub.elements().to_vec();
        elems.sort();
        assert_eq!(elems, vec![vec![0, 0], vec![1, 2], vec![2, 1]]);
    }

    #[test]
    fn witnesses_evaluate_to_their_elements() {
        let s3 = corpus::s3();
        let seeds = vec![("x".to_string(), vec![1, 3]), ("y".to_string(), vec![2, 4])];
        let sub = generated_subalgebra(&s3, &seeds, 2).unwrap();
        let sort = Sort::parse("x,y").unwrap();
        for (i, tuple) in sub.elements().iter().enumerate() {
            let term = sub.witness_at(i);
            for c in 0..2 {
                let p = Point::new(sort.clone(), vec![seeds[0].1[c], seeds[1].1[c]]).unwrap();
                assert_eq!(eval_term(&s3, &term, &p).unwrap(), tuple[c]);
            }
        }
    }
}
