//! Ehrenfeucht-Fraisse games between two pointed finite models and
//! extraction of separating formulas from Spoiler's winning strategies.
//!
//! A position is a list of pebble pairs `(a_i, b_i)`. It passes rank 0 when
//! the map generated by the pebbles through terms of bounded depth is a
//! partial isomorphism: functional, injective, and agreeing on every
//! relation. Spoiler only pebbles fresh elements; re-pebbling a pebbled
//! element is answered by its partner and changes nothing.

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::halmos::satisfies;
use crate::model::{Elem, ModelRef, Odometer, Point};
use crate::syntax::{fresh_name, Formula, Sort, Term};

use super::TypeBounds;

#[derive(Debug, Clone)]
pub(crate) enum Src {
    Pebble(usize),
    Op(usize, Vec<usize>),
}

/// An atomic formula on which the two pebbled tuples disagree.
#[derive(Debug, Clone)]
pub(crate) enum Clash {
    /// Two terms equal on the left, different on the right.
    Functional(usize, Src),
    /// Two terms different on the left, equal on the right.
    Injective(usize, Src),
    Relation { rel: usize, args: Vec<usize>, left: bool },
}

/// The partial map generated by a pebble list, with term origins.
pub(crate) struct AtomicClosure {
    pairs: Vec<(Elem, Elem)>,
    src: Vec<Src>,
    left: Vec<Option<usize>>,
    right: Vec<Option<usize>>,
}

impl AtomicClosure {
    fn add(&mut self, (a, b): (Elem, Elem), src: Src) -> std::result::Result<(), Clash> {
        match (self.left[a], self.right[b]) {
            (Some(i), _) if self.pairs[i].1 == b => Ok(()),
            (Some(i), _) => Err(Clash::Functional(i, src)),
            (None, Some(i)) => Err(Clash::Injective(i, src)),
            (None, None) => {
                self.left[a] = Some(self.pairs.len());
                self.right[b] = Some(self.pairs.len());
                self.pairs.push((a, b));
                self.src.push(src);
                Ok(())
            }
        }
    }

    fn term_of(&self, src: &Src, m: &ModelRef, names: &[String]) -> Term {
        match src {
            Src::Pebble(p) => Term::var(names[*p].clone()),
            Src::Op(k, args) => Term::op(
                m.sig().ops()[*k].name.clone(),
                args.iter().map(|&i| self.term_of(&self.src[i], m, names)).collect(),
            ),
        }
    }

    /// The atom behind `clash`, oriented to hold on the left.
    pub(crate) fn atom(&self, clash: &Clash, m: &ModelRef, names: &[String]) -> Formula {
        match clash {
            Clash::Functional(i, src) => Formula::eq(self.term_of(src, m, names), self.term_of(&self.src[*i], m, names)),
            Clash::Injective(i, src) => {
                Formula::eq(self.term_of(src, m, names), self.term_of(&self.src[*i], m, names)).not()
            }
            Clash::Relation { rel, args, left } => {
                let terms = args.iter().map(|&i| self.term_of(&self.src[i], m, names)).collect();
                let atom = Formula::rel(m.rels().rels()[*rel].name.clone(), terms);
                if *left {
                    atom
                } else {
                    atom.not()
                }
            }
        }
    }
}

/// Closes `pebbles` under the operations up to term depth `depth`
/// (`None`: to a fixpoint) and reports the first disagreement.
pub(crate) fn atomic_closure(
    m1: &ModelRef,
    m2: &ModelRef,
    pebbles: &[(Elem, Elem)],
    depth: Option<usize>,
) -> (AtomicClosure, Option<Clash>) {
    let mut c = AtomicClosure {
        pairs: Vec::new(),
        src: Vec::new(),
        left: vec![None; m1.size()],
        right: vec![None; m2.size()],
    };
    let ops = m1.sig().ops();
    let seeds = pebbles.iter().enumerate().map(|(i, &p)| (p, Src::Pebble(i)));
    let constants = ops
        .iter()
        .enumerate()
        .filter(|(_, op)| op.arity == 0)
        .map(|(k, _)| ((m1.apply(k, &[]), m2.apply(k, &[])), Src::Op(k, Vec::new())));
    for (pair, src) in seeds.chain(constants).collect::<Vec<_>>() {
        if let Err(clash) = c.add(pair, src) {
            return (c, Some(clash));
        }
    }
    let mut level = 0;
    while depth.map_or(true, |d| level < d) {
        level += 1;
        let known = c.pairs.len();
        for (k, op) in ops.iter().enumerate().filter(|(_, op)| op.arity > 0) {
            for args in Odometer::new(known, op.arity) {
                let a: Vec<Elem> = args.iter().map(|&i| c.pairs[i].0).collect();
                let b: Vec<Elem> = args.iter().map(|&i| c.pairs[i].1).collect();
                if let Err(clash) = c.add((m1.apply(k, &a), m2.apply(k, &b)), Src::Op(k, args)) {
                    return (c, Some(clash));
                }
            }
        }
        if c.pairs.len() == known {
            break;
        }
    }
    for (r, rel) in m1.rels().rels().iter().enumerate() {
        for args in Odometer::new(c.pairs.len(), rel.arity) {
            let a: Vec<Elem> = args.iter().map(|&i| c.pairs[i].0).collect();
            let b: Vec<Elem> = args.iter().map(|&i| c.pairs[i].1).collect();
            let left = m1.holds(r, &a);
            if left != m2.holds(r, &b) {
                return (c, Some(Clash::Relation { rel: r, args, left }));
            }
        }
    }
    (c, None)
}

#[derive(Debug, Clone, Copy)]
enum Move {
    Left(Elem),
    Right(Elem),
}

type Key = (Vec<(Elem, Elem)>, usize, Option<usize>);

/// Memoized EF games between a fixed ordered pair of models.
///
/// Formulas produced by [`Separator::separate`] hold at the left point and
/// fail at the right one.
pub struct Separator {
    m1: ModelRef,
    m2: ModelRef,
    bounds: TypeBounds,
    memo: HashMap<Key, bool>,
}

impl Separator {
    pub fn new(m1: &ModelRef, m2: &ModelRef, bounds: TypeBounds) -> Self {
        Separator { m1: m1.clone(), m2: m2.clone(), bounds, memo: HashMap::new() }
    }

    pub fn bounds(&self) -> TypeBounds {
        self.bounds
    }

    /// The rank bound used when none is configured: `|H1| + |H2| + |X|`.
    pub fn default_rank(&self, sort: &Sort) -> usize {
        self.m1.size() + self.m2.size() + sort.len()
    }

    fn pebbles(&self, mu: &Point, nu: &Point) -> Result<Vec<(Elem, Elem)>> {
        if !self.m1.same_signature(&self.m2) {
            return Err(Error::SignatureMismatch);
        }
        if mu.sort != nu.sort {
            return Err(Error::SortMismatch { expected: mu.sort.to_string(), found: nu.sort.to_string() });
        }
        Ok(mu.values.iter().copied().zip(nu.values.iter().copied()).collect())
    }

    /// Whether Duplicator survives `k` rounds from the pebbled points, with
    /// atoms over terms of the configured depth.
    pub fn ef_equiv(&mut self, mu: &Point, nu: &Point, k: usize) -> Result<bool> {
        self.ef_equiv_at(mu, nu, k, Some(self.bounds.depth))
    }

    pub fn ef_equiv_at(&mut self, mu: &Point, nu: &Point, k: usize, depth: Option<usize>) -> Result<bool> {
        let pebbles = self.pebbles(mu, nu)?;
        Ok(self.wins(&pebbles, k, depth))
    }

    /// A formula true at `mu` and false at `nu`, of least quantifier rank,
    /// trying the configured term depth before unbounded depth. `None` when
    /// the points have the same type.
    pub fn separate(&mut self, mu: &Point, nu: &Point) -> Result<Option<Formula>> {
        let rank = self.bounds.rank.unwrap_or_else(|| self.default_rank(&mu.sort));
        if let Some(u) = self.separate_within(mu, nu, rank, Some(self.bounds.depth))? {
            return Ok(Some(u));
        }
        self.separate_within(mu, nu, rank, None)
    }

    /// As [`Separator::separate`] with explicit rank and depth bounds.
    pub fn separate_within(&mut self, mu: &Point, nu: &Point, rank: usize, depth: Option<usize>) -> Result<Option<Formula>> {
        let pebbles = self.pebbles(mu, nu)?;
        let cap = self.cap(&pebbles);
        for j in 0..=rank {
            if !self.wins(&pebbles, j, depth) {
                let mut names = mu.sort.vars().to_vec();
                let u = self.extract(&pebbles, &mut names, j, depth)?;
                if !satisfies(&self.m1, mu, &u)? || satisfies(&self.m2, nu, &u)? {
                    return Err(Error::Infeasible(format!("extracted formula `{u}` does not separate {mu} from {nu}")));
                }
                return Ok(Some(u));
            }
            if j >= cap {
                break;
            }
        }
        Ok(None)
    }

    /// Rounds after which Spoiler has no fresh element left to pebble.
    fn cap(&self, pebbles: &[(Elem, Elem)]) -> usize {
        let left: BTreeSet<Elem> = pebbles.iter().map(|p| p.0).collect();
        let right: BTreeSet<Elem> = pebbles.iter().map(|p| p.1).collect();
        (self.m1.size() - left.len()).max(self.m2.size() - right.len())
    }

    fn wins(&mut self, pebbles: &[(Elem, Elem)], j: usize, depth: Option<usize>) -> bool {
        let j = j.min(self.cap(pebbles));
        let mut set = pebbles.to_vec();
        set.sort_unstable();
        set.dedup();
        let key = (set, j, depth);
        if let Some(&w) = self.memo.get(&key) {
            return w;
        }
        let (_, clash) = atomic_closure(&self.m1, &self.m2, pebbles, depth);
        let w = clash.is_none() && (j == 0 || self.spoiler_move(pebbles, j, depth).is_none());
        self.memo.insert(key, w);
        w
    }

    fn spoiler_move(&mut self, pebbles: &[(Elem, Elem)], j: usize, depth: Option<usize>) -> Option<Move> {
        let (n1, n2) = (self.m1.size(), self.m2.size());
        let mut next = pebbles.to_vec();
        next.push((0, 0));
        let last = next.len() - 1;
        for c in (0..n1).filter(|c| pebbles.iter().all(|p| p.0 != *c)) {
            let answered = (0..n2).any(|d| {
                next[last] = (c, d);
                self.wins(&next, j - 1, depth)
            });
            if !answered {
                return Some(Move::Left(c));
            }
        }
        for d in (0..n2).filter(|d| pebbles.iter().all(|p| p.1 != *d)) {
            let answered = (0..n1).any(|c| {
                next[last] = (c, d);
                self.wins(&next, j - 1, depth)
            });
            if !answered {
                return Some(Move::Right(d));
            }
        }
        None
    }

    /// Builds a formula from Spoiler's strategy at a losing position,
    /// using the least losing rank at every node.
    fn extract(&mut self, pebbles: &[(Elem, Elem)], names: &mut Vec<String>, j: usize, depth: Option<usize>) -> Result<Formula> {
        let j = (0..=j).find(|&i| !self.wins(pebbles, i, depth)).expect("position is losing");
        let (closure, clash) = atomic_closure(&self.m1, &self.m2, pebbles, depth);
        if let Some(clash) = clash {
            return Ok(closure.atom(&clash, &self.m1, names));
        }
        let mv = self.spoiler_move(pebbles, j.min(self.cap(pebbles)), depth).expect("losing position has a Spoiler move");
        let avoid: BTreeSet<String> = names.iter().cloned().collect();
        let z = fresh_name("z", &avoid);
        names.push(z.clone());
        let mut next = pebbles.to_vec();
        next.push((0, 0));
        let last = next.len() - 1;
        let replies: Vec<(Elem, Elem)> = match mv {
            Move::Left(c) => (0..self.m2.size()).map(|d| (c, d)).collect(),
            Move::Right(d) => (0..self.m1.size()).map(|c| (c, d)).collect(),
        };
        let mut parts: Vec<Formula> = Vec::new();
        for pair in replies {
            next[last] = pair;
            let part = self.extract(&next, names, j - 1, depth)?;
            if !parts.contains(&part) {
                parts.push(part);
            }
        }
        let single = self.single_part(&parts, pebbles, names, mv)?;
        names.pop();
        Ok(match mv {
            Move::Left(_) => {
                let body = single.unwrap_or_else(|| Formula::conjunction(parts).expect("nonempty carrier"));
                Formula::exists(z, body)
            }
            Move::Right(_) => {
                let body = single.unwrap_or_else(|| Formula::disjunction(parts).expect("nonempty carrier"));
                Formula::forall(z, body)
            }
        })
    }

    /// A single part that already does the job of the whole conjunction
    /// (left move) or disjunction (right move), smallest first.
    fn single_part(&self, parts: &[Formula], pebbles: &[(Elem, Elem)], names: &[String], mv: Move) -> Result<Option<Formula>> {
        if parts.len() < 2 {
            return Ok(parts.first().cloned());
        }
        let sort = Sort::new(names.iter().cloned())?;
        let mut order: Vec<&Formula> = parts.iter().collect();
        order.sort_by_key(|u| (u.quantifier_rank(), u.size()));
        for u in order {
            let ok = match mv {
                Move::Left(_) => (0..self.m2.size()).try_fold(true, |acc, d| -> Result<bool> {
                    let mut values: Vec<Elem> = pebbles.iter().map(|p| p.1).collect();
                    values.push(d);
                    Ok(acc && !satisfies(&self.m2, &Point::new(sort.clone(), values)?, u)?)
                })?,
                Move::Right(_) => (0..self.m1.size()).try_fold(true, |acc, c| -> Result<bool> {
                    let mut values: Vec<Elem> = pebbles.iter().map(|p| p.0).collect();
                    values.push(c);
                    Ok(acc && satisfies(&self.m1, &Point::new(sort.clone(), values)?, u)?)
                })?,
            };
            if ok {
                return Ok(Some(u.clone()));
            }
        }
        Ok(None)
    }
}
