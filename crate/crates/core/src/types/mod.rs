//! LG-types of points, compared within and across models.
//!
//! For finite models two pointed structures have the same logical kernel
//! exactly when an isomorphism carries one tuple to the other, so
//! [`same_type`] decides by isomorphism extension. The EF games in
//! [`Separator`] give the rank-stratified view and produce separating
//! formulas when the types differ.

mod ef;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::galois::formula_closure_contains;
use crate::halmos::{satisfies, val};
use crate::model::{find_isomorphism, Elem, Isomorphism, ModelRef, Point};
use crate::syntax::{Formula, Sort};

pub use ef::Separator;

/// Bounds for the EF machinery: the term depth of atoms and an optional
/// quantifier-rank cap (default `|H1| + |H2| + |X|`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TypeBounds {
    pub depth: usize,
    pub rank: Option<usize>,
}

impl Default for TypeBounds {
    fn default() -> Self {
        TypeBounds { depth: 3, rank: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypeWitness {
    Isomorphism(Isomorphism),
    /// True at the first point, false at the second.
    Separating(Formula),
    None,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeVerdict {
    pub result: bool,
    pub witness: TypeWitness,
    pub rank: usize,
    pub depth: usize,
}

/// Structured form of a verdict, stable for golden output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerdictRecord {
    pub result: bool,
    pub witness_kind: &'static str,
    pub witness: String,
    pub rank: usize,
    pub depth: usize,
}

impl TypeVerdict {
    pub fn record(&self) -> VerdictRecord {
        let (witness_kind, witness) = match &self.witness {
            TypeWitness::Isomorphism(iso) => ("isomorphism", iso.to_string()),
            TypeWitness::Separating(u) => ("formula", u.to_string()),
            TypeWitness::None => ("none", String::new()),
        };
        VerdictRecord { result: self.result, witness_kind, witness, rank: self.rank, depth: self.depth }
    }
}

fn check_pair(m1: &ModelRef, m2: &ModelRef) -> Result<()> {
    if m1.same_signature(m2) {
        Ok(())
    } else {
        Err(Error::SignatureMismatch)
    }
}

/// Whether `mu` in `m1` and `nu` in `m2` have the same LG-type.
pub fn same_type(m1: &ModelRef, mu: &Point, m2: &ModelRef, nu: &Point, bounds: TypeBounds) -> Result<TypeVerdict> {
    check_pair(m1, m2)?;
    if mu.sort != nu.sort {
        return Err(Error::SortMismatch { expected: mu.sort.to_string(), found: nu.sort.to_string() });
    }
    let seed: Vec<(Elem, Elem)> = mu.values.iter().copied().zip(nu.values.iter().copied()).collect();
    if let Some(iso) = find_isomorphism(m1, m2, &seed) {
        return Ok(TypeVerdict { result: true, witness: TypeWitness::Isomorphism(iso), rank: 0, depth: 0 });
    }
    let verdict = match Separator::new(m1, m2, bounds).separate(mu, nu)? {
        Some(u) => TypeVerdict {
            result: false,
            rank: u.quantifier_rank(),
            depth: u.term_depth(),
            witness: TypeWitness::Separating(u),
        },
        None => TypeVerdict { result: false, witness: TypeWitness::None, rank: 0, depth: 0 },
    };
    Ok(verdict)
}

/// Whether Duplicator survives `k` rounds from `(mu, nu)`.
pub fn ef_equiv(m1: &ModelRef, mu: &Point, m2: &ModelRef, nu: &Point, k: usize, bounds: TypeBounds) -> Result<bool> {
    Separator::new(m1, m2, bounds).ef_equiv(mu, nu, k)
}

/// A formula true at `mu` in `m1` and false at `nu` in `m2`, or `None` when
/// the points have the same type.
pub fn separating_formula(m1: &ModelRef, mu: &Point, m2: &ModelRef, nu: &Point, bounds: TypeBounds) -> Result<Option<Formula>> {
    check_pair(m1, m2)?;
    let seed: Vec<(Elem, Elem)> = mu.values.iter().copied().zip(nu.values.iter().copied()).collect();
    if mu.sort == nu.sort && find_isomorphism(m1, m2, &seed).is_some() {
        return Ok(None);
    }
    Separator::new(m1, m2, bounds).separate(mu, nu)
}

/// A point whose type is not realized in the other model, with a formula
/// true at it and empty in the other model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointWitness {
    /// Whether the point lives in the first model.
    pub first: bool,
    pub point: Point,
    pub formula: Formula,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IsotypicVerdict {
    pub result: bool,
    pub isomorphism: Option<Isomorphism>,
    pub witness: Option<PointWitness>,
}

/// Conjoins separators of `mu` against every point of the other model into
/// one formula with empty value there. Prefers a single separator that
/// already excludes everything. `None` if some point is not separated.
fn unrealized_formula(
    sep: &mut Separator,
    other: &ModelRef,
    mu: &Point,
    within: Option<(usize, usize)>,
) -> Result<Option<Formula>> {
    let sort = &mu.sort;
    let mut parts: Vec<Formula> = Vec::new();
    for nu in other.space(sort)?.points() {
        let u = match within {
            Some((rank, depth)) => sep.separate_within(mu, &nu, rank, Some(depth))?,
            None => sep.separate(mu, &nu)?,
        };
        match u {
            Some(u) if !parts.contains(&u) => parts.push(u),
            Some(_) => {}
            None => return Ok(None),
        }
    }
    let mut order: Vec<&Formula> = parts.iter().collect();
    order.sort_by_key(|u| (u.quantifier_rank(), u.size()));
    for u in order {
        if val(u, sort, other)?.is_empty() {
            return Ok(Some(u.clone()));
        }
    }
    Ok(Some(Formula::conjunction(parts).unwrap_or_else(|| Formula::tautology(sort))))
}

/// Whether `m1` and `m2` realize the same LG-types over `sort`.
///
/// Every type of a finite model is realized only in isomorphic copies, so
/// this is model isomorphism; the witness is the isomorphism, or a point of
/// least-rank unrealized type with a formula isolating it from the other
/// model.
pub fn isotypic(m1: &ModelRef, m2: &ModelRef, sort: &Sort, bounds: TypeBounds) -> Result<IsotypicVerdict> {
    check_pair(m1, m2)?;
    m1.space(sort)?;
    m2.space(sort)?;
    if let Some(iso) = find_isomorphism(m1, m2, &[]) {
        return Ok(IsotypicVerdict { result: true, isomorphism: Some(iso), witness: None });
    }
    let mut best: Option<((usize, usize), PointWitness)> = None;
    for (first, a, b) in [(true, m1, m2), (false, m2, m1)] {
        let mut sep = Separator::new(a, b, bounds);
        for mu in a.space(sort)?.points() {
            let Some(u) = unrealized_formula(&mut sep, b, &mu, None)? else {
                return Err(Error::Infeasible(format!("no formula separates {mu} from the other model")));
            };
            let score = (u.quantifier_rank(), u.size());
            if best.as_ref().map_or(true, |(s, _)| score < *s) {
                best = Some((score, PointWitness { first, point: mu, formula: u }));
            }
        }
        if best.as_ref().is_some_and(|(s, _)| s.0 == 0) {
            break;
        }
    }
    let witness = best.map(|(_, w)| w);
    if let Some(w) = &witness {
        let (a, b) = if w.first { (m1, m2) } else { (m2, m1) };
        if !satisfies(a, &w.point, &w.formula)? || !val(&w.formula, sort, b)?.is_empty() {
            return Err(Error::Infeasible(format!("witness `{}` failed verification", w.formula)));
        }
    }
    Ok(IsotypicVerdict { result: false, isomorphism: None, witness })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LgResult {
    Equivalent,
    NotEquivalent,
    Inconclusive,
}

/// A formula set `T` and a formula `u` lying in exactly one of the two
/// closures `T^LL`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LgWitness {
    pub first: bool,
    pub point: Point,
    pub t: Vec<Formula>,
    pub u: Formula,
    pub in_first: bool,
    pub in_second: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LgVerdict {
    pub result: LgResult,
    pub rank: usize,
    pub depth: usize,
    /// Whether the bounds are large enough for a positive answer to be
    /// exact: depth ≥ 1 and rank ≥ the larger carrier.
    pub sufficient: bool,
    pub witness: Option<LgWitness>,
}

/// Compares `T^LL` across the two models for formula sets drawn from the
/// bounded formulas: every point needs a rank-`rank`, depth-`depth` EF
/// partner in the other model. A point without one yields `T = {τ}` with
/// `τ` true at it and empty in the other model, so the contradiction lies
/// in one closure and not the other.
pub fn lg_equivalent(m1: &ModelRef, m2: &ModelRef, sort: &Sort, bounds: TypeBounds) -> Result<LgVerdict> {
    check_pair(m1, m2)?;
    let rank = bounds.rank.unwrap_or(m1.size() + m2.size() + sort.len());
    let depth = bounds.depth;
    let sufficient = depth >= 1 && rank >= m1.size().max(m2.size());
    for (first, a, b) in [(true, m1, m2), (false, m2, m1)] {
        let mut sep = Separator::new(a, b, bounds);
        let others: Vec<Point> = b.space(sort)?.points().collect();
        for mu in a.space(sort)?.points() {
            let mut partnered = false;
            for nu in &others {
                if sep.ef_equiv_at(&mu, nu, rank, Some(depth))? {
                    partnered = true;
                    break;
                }
            }
            if partnered {
                continue;
            }
            let tau = unrealized_formula(&mut sep, b, &mu, Some((rank, depth)))?
                .ok_or_else(|| Error::Infeasible(format!("EF game lost at {mu} but no formula extracted")))?;
            let t = vec![tau];
            let u = Formula::contradiction(sort);
            let in_a = formula_closure_contains(&t, &u, sort, a)?;
            let in_b = formula_closure_contains(&t, &u, sort, b)?;
            if in_a == in_b {
                return Err(Error::Infeasible(format!("closures of {{{}}} agree on {u}", t[0])));
            }
            let (in_first, in_second) = if first { (in_a, in_b) } else { (in_b, in_a) };
            let witness = LgWitness { first, point: mu, t, u, in_first, in_second };
            return Ok(LgVerdict { result: LgResult::NotEquivalent, rank, depth, sufficient, witness: Some(witness) });
        }
    }
    let result = if sufficient { LgResult::Equivalent } else { LgResult::Inconclusive };
    Ok(LgVerdict { result, rank, depth, sufficient, witness: None })
}

/// An atom distinguishing a claimed type-equal pair of points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub pair: usize,
    /// Holds at the first point of the pair, fails at the second.
    pub atom: Formula,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintReport {
    pub pairs: usize,
    pub depth: usize,
    pub violation: Option<Violation>,
}

impl ConstraintReport {
    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }
}

/// Checks that matched points agree on every equation between terms of
/// depth ≤ `depth` and on every relation over such terms.
pub fn interpretation_constraints(m1: &ModelRef, m2: &ModelRef, pairs: &[(Point, Point)], depth: usize) -> Result<ConstraintReport> {
    check_pair(m1, m2)?;
    for (i, (mu, nu)) in pairs.iter().enumerate() {
        if mu.sort != nu.sort {
            return Err(Error::SortMismatch { expected: mu.sort.to_string(), found: nu.sort.to_string() });
        }
        let pebbles: Vec<(Elem, Elem)> = mu.values.iter().copied().zip(nu.values.iter().copied()).collect();
        let (closure, clash) = ef::atomic_closure(m1, m2, &pebbles, Some(depth));
        if let Some(clash) = clash {
            let atom = closure.atom(&clash, m1, mu.sort.vars());
            let violation = Violation { pair: i, atom };
            return Ok(ConstraintReport { pairs: pairs.len(), depth, violation: Some(violation) });
        }
    }
    Ok(ConstraintReport { pairs: pairs.len(), depth, violation: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::syntax::parse_formula;

    fn point(sort: &str, values: &[Elem]) -> Point {
        Point::new(Sort::parse(sort).unwrap(), values.to_vec()).unwrap()
    }

    fn b() -> TypeBounds {
        TypeBounds::default()
    }

    #[test]
    fn same_point_same_type() {
        let z3 = corpus::z3();
        let v = same_type(&z3, &point("x", &[1]), &z3, &point("x", &[1]), b()).unwrap();
        assert!(v.result);
        assert_eq!(v.witness, TypeWitness::Isomorphism(Isomorphism(vec![0, 1, 2])));
        let v = same_type(&z3, &point("x", &[1]), &z3, &point("x", &[2]), b()).unwrap();
        assert_eq!(v.witness, TypeWitness::Isomorphism(Isomorphism(vec![0, 2, 1])));
        assert_eq!(separating_formula(&z3, &point("x", &[1]), &z3, &point("x", &[1]), b()).unwrap(), None);
    }

    #[test]
    fn z4_against_v4() {
        let (z4, v4) = (corpus::z4(), corpus::v4());
        let mu = point("x", &[1]);
        let nu = point("x", &[1]);
        let v = same_type(&z4, &mu, &v4, &nu, b()).unwrap();
        assert!(!v.result);
        let TypeWitness::Separating(u) = v.witness else { panic!("expected a formula") };
        assert!(satisfies(&z4, &mu, &u).unwrap());
        assert!(!satisfies(&v4, &nu, &u).unwrap());
        assert_eq!(u.quantifier_rank(), 0);
        // The points already differ on the element they generate.
        let square = parse_formula("mul(x,x) == e", z4.sig(), z4.rels()).unwrap();
        assert!(!satisfies(&z4, &mu, &square).unwrap() && satisfies(&v4, &nu, &square).unwrap());
    }

    #[test]
    fn empty_tuples_z4_v4() {
        let (z4, v4) = (corpus::z4(), corpus::v4());
        let e = point("", &[]);
        assert!(ef_equiv(&z4, &e, &v4, &e, 0, b()).unwrap());
        // Pebbling 1 in Z4 already loses: inv separates it from its square.
        assert!(!ef_equiv(&z4, &e, &v4, &e, 1, b()).unwrap());
        assert!(!ef_equiv(&z4, &e, &v4, &e, 2, b()).unwrap());
        let u = separating_formula(&z4, &e, &v4, &e, b()).unwrap().unwrap();
        assert_eq!(u.quantifier_rank(), 1);
        assert!(u.free_vars().is_empty());
    }

    #[test]
    fn predicate_atom() {
        let z2p = corpus::z2p();
        let u = separating_formula(&z2p, &point("x", &[1]), &z2p, &point("x", &[0]), b()).unwrap().unwrap();
        assert_eq!(u.quantifier_rank(), 0);
        assert!(satisfies(&z2p, &point("x", &[1]), &u).unwrap());
    }

    #[test]
    fn isotypic_verdicts() {
        let x = Sort::parse("x").unwrap();
        let v = isotypic(&corpus::z3(), &corpus::z3_relabeled(), &x, b()).unwrap();
        assert!(v.result);
        assert!(v.isomorphism.unwrap().verify(&corpus::z3(), &corpus::z3_relabeled()));
        let v = isotypic(&corpus::z4(), &corpus::v4(), &x, b()).unwrap();
        assert!(!v.result);
        let w = v.witness.unwrap();
        assert!(w.first);
        assert_eq!(w.point.values, vec![1]);
        assert_eq!(w.formula.quantifier_rank(), 0);
        assert!(matches!(isotypic(&corpus::z2(), &corpus::z2p(), &x, b()), Err(Error::SignatureMismatch)));
    }

    #[test]
    fn lg_equivalence_matches_isotypy() {
        let x = Sort::parse("x").unwrap();
        let v = lg_equivalent(&corpus::z3(), &corpus::z3_relabeled(), &x, b()).unwrap();
        assert_eq!(v.result, LgResult::Equivalent);
        let v = lg_equivalent(&corpus::z4(), &corpus::v4(), &x, b()).unwrap();
        assert_eq!(v.result, LgResult::NotEquivalent);
        let w = v.witness.unwrap();
        assert_ne!(w.in_first, w.in_second);
        let small = TypeBounds { depth: 0, rank: Some(0) };
        let v = lg_equivalent(&corpus::z3(), &corpus::z3(), &x, small).unwrap();
        assert_eq!(v.result, LgResult::Inconclusive);
    }

    #[test]
    fn interpretation_constraints_catch_bad_matchings() {
        let z3 = corpus::z3();
        let good = [(point("x", &[1]), point("x", &[2]))];
        assert!(interpretation_constraints(&z3, &z3, &good, 3).unwrap().passed());
        let bad = [(point("x", &[1]), point("x", &[0]))];
        let report = interpretation_constraints(&z3, &z3, &bad, 3).unwrap();
        let atom = report.violation.unwrap().atom;
        assert!(satisfies(&z3, &point("x", &[1]), &atom).unwrap());
        assert!(!satisfies(&z3, &point("x", &[0]), &atom).unwrap());
    }

    #[test]
    fn same_type_is_an_equivalence() {
        for m in [corpus::z2(), corpus::z3(), corpus::z4(), corpus::v4(), corpus::z2p()] {
            let sort = Sort::parse("x,y").unwrap();
            let points: Vec<Point> = m.space(&sort).unwrap().points().collect();
            let rel: Vec<Vec<bool>> = points
                .iter()
                .map(|p| points.iter().map(|q| same_type(&m, p, &m, q, b()).unwrap().result).collect())
                .collect();
            for i in 0..points.len() {
                assert!(rel[i][i]);
                for j in 0..points.len() {
                    assert_eq!(rel[i][j], rel[j][i]);
                    for k in 0..points.len() {
                        assert!(!(rel[i][j] && rel[j][k]) || rel[i][k]);
                    }
                }
            }
        }
    }

    #[test]
    fn ef_agrees_with_types_and_is_monotone() {
        let sort = Sort::parse("x").unwrap();
        for m1 in [corpus::z4(), corpus::v4(), corpus::z2()] {
            for m2 in [corpus::z4(), corpus::v4(), corpus::z2()] {
                let mut sep = Separator::new(&m1, &m2, b());
                for mu in m1.space(&sort).unwrap().points() {
                    for nu in m2.space(&sort).unwrap().points() {
                        let same = same_type(&m1, &mu, &m2, &nu, b()).unwrap().result;
                        let mut prev = true;
                        for k in 0..=m1.size() + m2.size() + 1 {
                            let now = sep.ef_equiv(&mu, &nu, k).unwrap();
                            assert!(prev || !now, "monotonicity at rank {k}");
                            if same {
                                assert!(now);
                            }
                            prev = now;
                        }
                        assert_eq!(prev, same);
                    }
                }
            }
        }
    }
}
