//! Finite models `(H, Ψ, f)`, their affine spaces `Hom(W(X), H) ≅ H^X`,
//! term evaluation, automorphisms and generated subalgebras.

mod iso;
mod json;
mod subalgebra;

use std::fmt;
use std::sync::{Arc, OnceLock};

use fixedbitset::FixedBitSet;

use crate::error::{Error, Result};
use crate::syntax::{AlgSignature, RelSignature, Sort, Term};

pub use iso::{find_isomorphism, Automorphism, Isomorphism};
pub use json::ModelFile;
pub use subalgebra::{generated_subalgebra, Origin, Subalgebra};

/// Carrier elements are dense indices `0..n`.
pub type Elem = usize;

pub type ModelRef = Arc<FiniteModel>;

/// Size caps applied by every exhaustive computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_carrier: usize,
    /// Largest point space `n^|X|` that may be materialized.
    pub max_points: usize,
    /// Largest number of automorphism orbits for which a lattice is built.
    pub max_orbits: usize,
    /// Largest generated subalgebra of a power `H^A`.
    pub max_subalgebra: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_carrier: 16, max_points: 1 << 24, max_orbits: 16, max_subalgebra: 1 << 20 }
    }
}

pub struct FiniteModel {
    name: String,
    size: usize,
    sig: AlgSignature,
    rels: RelSignature,
    /// Row-major operation tables, indexed like `sig.ops()`.
    tables: Vec<Vec<Elem>>,
    /// Characteristic vectors over `H^arity`, indexed like `rels.rels()`.
    relations: Vec<FixedBitSet>,
    limits: Limits,
    automorphisms: OnceLock<Vec<Automorphism>>,
}

impl FiniteModel {
    /// Builds a model, validating every table entry and tuple.
    ///
    /// `tables[i]` is the row-major table of `sig.ops()[i]`; `tuples[i]` lists
    /// the tuples of `rels.rels()[i]`.
    pub fn new(
        name: impl Into<String>,
        size: usize,
        sig: AlgSignature,
        rels: RelSignature,
        tables: Vec<Vec<Elem>>,
        tuples: Vec<Vec<Vec<Elem>>>,
    ) -> Result<Self> {
        Self::with_limits(name, size, sig, rels, tables, tuples, Limits::default())
    }

    pub fn with_limits(
        name: impl Into<String>,
        size: usize,
        sig: AlgSignature,
        rels: RelSignature,
        tables: Vec<Vec<Elem>>,
        tuples: Vec<Vec<Vec<Elem>>>,
        limits: Limits,
    ) -> Result<Self> {
        let invalid = |path: String, message: String| Error::InvalidModel { path, message };
        if size == 0 {
            return Err(invalid("carrier".into(), "carrier must be nonempty".into()));
        }
        if size > limits.max_carrier {
            return Err(Error::CapExceeded {
                what: "carrier size".into(),
                size: size as u128,
                cap: limits.max_carrier as u128,
            });
        }
        if tables.len() != sig.len() {
            return Err(invalid("ops".into(), format!("expected {} tables, got {}", sig.len(), tables.len())));
        }
        for (op, table) in sig.ops().iter().zip(&tables) {
            let expected = checked_pow(size, op.arity)
                .ok_or_else(|| invalid(format!("ops.{}", op.name), "table too large".into()))?;
            if table.len() != expected {
                return Err(invalid(
                    format!("ops.{}.table", op.name),
                    format!("expected {expected} entries (carrier^{}), got {}", op.arity, table.len()),
                ));
            }
            if let Some((i, v)) = table.iter().enumerate().find(|(_, &v)| v >= size) {
                return Err(invalid(
                    format!("ops.{}.table[{i}]", op.name),
                    format!("entry {v} outside carrier 0..{size}"),
                ));
            }
        }
        if tuples.len() != rels.len() {
            return Err(invalid("rels".into(), format!("expected {} relations, got {}", rels.len(), tuples.len())));
        }
        let mut relations = Vec::with_capacity(rels.len());
        for (rel, list) in rels.rels().iter().zip(&tuples) {
            let len = checked_pow(size, rel.arity)
                .ok_or_else(|| invalid(format!("rels.{}", rel.name), "relation too large".into()))?;
            let mut bits = FixedBitSet::with_capacity(len);
            for (i, tuple) in list.iter().enumerate() {
                let path = format!("rels.{}.tuples[{i}]", rel.name);
                if tuple.len() != rel.arity {
                    return Err(invalid(path, format!("expected length {}, got {}", rel.arity, tuple.len())));
                }
                if let Some(v) = tuple.iter().find(|&&v| v >= size) {
                    return Err(invalid(path, format!("entry {v} outside carrier 0..{size}")));
                }
                bits.insert(mixed_index(tuple, size));
            }
            relations.push(bits);
        }
        Ok(FiniteModel {
            name: name.into(),
            size,
            sig,
            rels,
            tables,
            relations,
            limits,
            automorphisms: OnceLock::new(),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn sig(&self) -> &AlgSignature {
        &self.sig
    }

    pub fn rels(&self) -> &RelSignature {
        &self.rels
    }

    pub fn limits(&self) -> Limits {
        self.limits
    }

    pub fn same_signature(&self, other: &FiniteModel) -> bool {
        self.sig == other.sig && self.rels == other.rels
    }

    /// Applies operation `op` (index into `sig().ops()`) to `args`.
    pub fn apply(&self, op: usize, args: &[Elem]) -> Elem {
        self.tables[op][mixed_index(args, self.size)]
    }

    /// Whether `args` belongs to `f(φ)` for relation index `rel`.
    pub fn holds(&self, rel: usize, args: &[Elem]) -> bool {
        self.relations[rel].contains(mixed_index(args, self.size))
    }

    pub fn table(&self, op: usize) -> &[Elem] {
        &self.tables[op]
    }

    /// Tuples of relation `rel` in lexicographic order.
    pub fn tuples(&self, rel: usize) -> Vec<Vec<Elem>> {
        let arity = self.rels.rels()[rel].arity;
        self.relations[rel].ones().map(|i| decode_index(i, self.size, arity)).collect()
    }

    /// A copy under a different name, with different caps.
    pub fn renamed(&self, name: impl Into<String>, limits: Limits) -> Result<FiniteModel> {
        FiniteModel::with_limits(
            name,
            self.size,
            self.sig.clone(),
            self.rels.clone(),
            self.tables.clone(),
            (0..self.rels.len()).map(|r| self.tuples(r)).collect(),
            limits,
        )
    }

    /// The isomorphic copy in which element `a` is renamed `perm[a]`.
    pub fn relabeled(&self, name: impl Into<String>, perm: &[Elem]) -> Result<FiniteModel> {
        let n = self.size;
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::InvalidModel { path: "relabeling".into(), message: "not a permutation".into() });
        }
        let mut inverse = vec![0; n];
        for (a, &p) in perm.iter().enumerate() {
            inverse[p] = a;
        }
        let tables = self
            .sig
            .ops()
            .iter()
            .enumerate()
            .map(|(k, op)| {
                let len = n.pow(op.arity as u32);
                (0..len)
                    .map(|i| {
                        let args: Vec<Elem> = decode_index(i, n, op.arity).into_iter().map(|b| inverse[b]).collect();
                        perm[self.apply(k, &args)]
                    })
                    .collect()
            })
            .collect();
        let tuples = (0..self.rels.len())
            .map(|r| self.tuples(r).into_iter().map(|t| t.into_iter().map(|a| perm[a]).collect()).collect())
            .collect();
        FiniteModel::with_limits(name, n, self.sig.clone(), self.rels.clone(), tables, tuples, self.limits)
    }

    /// The point space `Hom(W(X), H)` for `sort`, subject to the point cap.
    pub fn space(&self, sort: &Sort) -> Result<Space> {
        Space::new(sort.clone(), self.size, self.limits.max_points)
    }

    /// The full automorphism group, sorted lexicographically. Computed once.
    pub fn automorphisms(&self) -> &[Automorphism] {
        self.automorphisms.get_or_init(|| iso::all_automorphisms(self))
    }

    pub fn compile(&self, term: &Term, sort: &Sort) -> Result<CompiledTerm> {
        CompiledTerm::new(term, sort, &self.sig)
    }
}

impl PartialEq for FiniteModel {
    fn eq(&self, other: &Self) -> bool {
        self.size == other.size
            && self.sig == other.sig
            && self.rels == other.rels
            && self.tables == other.tables
            && self.relations == other.relations
    }
}

impl Eq for FiniteModel {}

impl fmt::Debug for FiniteModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FiniteModel").field("name", &self.name).field("size", &self.size).finish_non_exhaustive()
    }
}

/// Same model by identity or by content.
pub fn same_model(a: &ModelRef, b: &ModelRef) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    base.checked_pow(u32::try_from(exp).ok()?)
}

/// Mixed-radix index with the first coordinate most significant.
pub fn mixed_index(coords: &[Elem], n: usize) -> usize {
    coords.iter().fold(0, |acc, &c| acc * n + c)
}

pub fn decode_index(mut index: usize, n: usize, len: usize) -> Vec<Elem> {
    let mut out = vec![0; len];
    for slot in out.iter_mut().rev() {
        *slot = index % n;
        index /= n;
    }
    out
}

/// A point `μ: X → H`, i.e. a homomorphism `W(X) → H`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Point {
    pub sort: Sort,
    pub values: Vec<Elem>,
}

impl Point {
    pub fn new(sort: Sort, values: Vec<Elem>) -> Result<Self> {
        if sort.len() != values.len() {
            return Err(Error::SortMismatch { expected: sort.to_string(), found: format!("{} values", values.len()) });
        }
        Ok(Point { sort, values })
    }

    pub fn get(&self, var: &str) -> Option<Elem> {
        self.sort.index_of(var).map(|i| self.values[i])
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_tuple(f, &self.values)
    }
}

pub(crate) fn write_tuple(f: &mut impl fmt::Write, values: &[Elem]) -> fmt::Result {
    f.write_char('(')?;
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            f.write_char(',')?;
        }
        write!(f, "{v}")?;
    }
    f.write_char(')')
}

/// The affine space `H^X` with lexicographic, mixed-radix point indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Space {
    sort: Sort,
    n: usize,
    len: usize,
}

impl Space {
    pub fn new(sort: Sort, n: usize, cap: usize) -> Result<Self> {
        let len = checked_pow(n, sort.len()).filter(|&l| l <= cap).ok_or_else(|| Error::CapExceeded {
            what: format!("point space {n}^{}", sort.len()),
            size: (n as u128).saturating_pow(sort.len() as u32),
            cap: cap as u128,
        })?;
        Ok(Space { sort, n, len })
    }

    pub fn sort(&self) -> &Sort {
        &self.sort
    }

    pub fn carrier(&self) -> usize {
        self.n
    }

    /// Number of points, `n^|X|`.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn index(&self, values: &[Elem]) -> usize {
        mixed_index(values, self.n)
    }

    pub fn coords(&self, index: usize) -> Vec<Elem> {
        decode_index(index, self.n, self.sort.len())
    }

    pub fn point(&self, index: usize) -> Point {
        Point { sort: self.sort.clone(), values: self.coords(index) }
    }

    /// Index distance between neighbours along coordinate `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow((self.sort.len() - 1 - axis) as u32)
    }

    /// All coordinate vectors in index order.
    pub fn iter_coords(&self) -> Odometer {
        Odometer { n: self.n, current: vec![0; self.sort.len()], remaining: self.len }
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        self.iter_coords().map(|values| Point { sort: self.sort.clone(), values })
    }
}

/// Enumerates `H^k` lexicographically.
pub struct Odometer {
    n: usize,
    current: Vec<Elem>,
    remaining: usize,
}

impl Odometer {
    pub fn new(n: usize, k: usize) -> Self {
        Odometer { n, current: vec![0; k], remaining: n.pow(k as u32) }
    }
}

impl Iterator for Odometer {
    type Item = Vec<Elem>;

    fn next(&mut self) -> Option<Vec<Elem>> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let out = self.current.clone();
        for slot in self.current.iter_mut().rev() {
            *slot += 1;
            if *slot < self.n {
                break;
            }
            *slot = 0;
        }
        Some(out)
    }
}

/// `hom_space(X, m)`: every point of `Hom(W(X), H)` in lexicographic order.
pub fn hom_space(sort: &Sort, model: &FiniteModel) -> Result<Vec<Point>> {
    Ok(model.space(sort)?.points().collect())
}

/// A term with variables resolved to coordinate positions and symbols to
/// table indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CompiledTerm {
    Var(usize),
    Op(usize, Vec<CompiledTerm>),
}

impl CompiledTerm {
    pub fn new(term: &Term, sort: &Sort, sig: &AlgSignature) -> Result<Self> {
        match term {
            Term::Var(v) => sort
                .index_of(v)
                .map(CompiledTerm::Var)
                .ok_or_else(|| Error::UnboundVariable(v.clone())),
            Term::Op(name, args) => {
                let (idx, arity) = sig.lookup(name).ok_or_else(|| Error::UnknownSymbol(name.clone()))?;
                if arity != args.len() {
                    return Err(Error::Arity { name: name.clone(), expected: arity, found: args.len() });
                }
                Ok(CompiledTerm::Op(idx, args.iter().map(|a| CompiledTerm::new(a, sort, sig)).collect::<Result<_>>()?))
            }
        }
    }

    pub fn eval(&self, model: &FiniteModel, coords: &[Elem]) -> Elem {
        match self {
            CompiledTerm::Var(i) => coords[*i],
            CompiledTerm::Op(op, args) => match args.len() {
                0 => model.tables[*op][0],
                1 => model.tables[*op][args[0].eval(model, coords)],
                2 => {
                    let a = args[0].eval(model, coords);
                    let b = args[1].eval(model, coords);
                    model.tables[*op][a * model.size + b]
                }
                _ => {
                    let vals: Vec<Elem> = args.iter().map(|a| a.eval(model, coords)).collect();
                    model.apply(*op, &vals)
                }
            },
        }
    }
}

/// `w^μ`: the value of a term at a point.
pub fn eval_term(model: &FiniteModel, term: &Term, point: &Point) -> Result<Elem> {
    Ok(model.compile(term, &point.sort)?.eval(model, &point.values))
}

/// Whether `(w, w') ∈ Ker(μ)`.
pub fn kernel_contains(model: &FiniteModel, point: &Point, lhs: &Term, rhs: &Term) -> Result<bool> {
    Ok(eval_term(model, lhs, point)? == eval_term(model, rhs, point)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    fn t(model: &FiniteModel, s: &str) -> Term {
        crate::syntax::parse_term(s, model.sig()).unwrap()
    }

    fn pt(vars: &str, values: &[Elem]) -> Point {
        Point::new(Sort::parse(vars).unwrap(), values.to_vec()).unwrap()
    }

    #[test]
    fn evaluation() {
        let z2 = corpus::z2();
        let z3 = corpus::z3();
        assert_eq!(eval_term(&z2, &t(&z2, "mul(x,x)"), &pt("x", &[1])).unwrap(), 0);
        assert_eq!(eval_term(&z3, &t(&z3, "x"), &pt("x", &[2])).unwrap(), 2);
        assert_eq!(eval_term(&z3, &t(&z3, "mul(x,mul(x,x))"), &pt("x", &[2])).unwrap(), 0);
        assert!(matches!(eval_term(&z3, &t(&z3, "y"), &pt("x", &[2])), Err(Error::UnboundVariable(_))));
    }

    #[test]
    fn kernels() {
        let z2 = corpus::z2();
        let z3 = corpus::z3();
        let x = t(&z3, "x");
        assert!(kernel_contains(&z3, &pt("x", &[2]), &x, &x).unwrap());
        assert!(kernel_contains(&z2, &pt("x", &[1]), &t(&z2, "mul(x,x)"), &t(&z2, "e")).unwrap());
        assert!(!kernel_contains(&z3, &pt("x", &[1]), &t(&z3, "mul(x,x)"), &x).unwrap());
    }

    #[test]
    fn point_spaces() {
        let z2 = corpus::z2();
        let z3 = corpus::z3();
        let empty = hom_space(&Sort::empty(), &z2).unwrap();
        assert_eq!(empty.len(), 1);
        assert!(empty[0].values.is_empty());
        let pts: Vec<Vec<Elem>> = hom_space(&Sort::parse("x,y").unwrap(), &z2).unwrap().into_iter().map(|p| p.values).collect();
        assert_eq!(pts, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        assert_eq!(hom_space(&Sort::parse("x,y,z").unwrap(), &z3).unwrap().len(), 27);
    }

    #[test]
    fn point_space_cap() {
        let limits = Limits { max_points: 8, ..Limits::default() };
        let z3 = corpus::z3().renamed("z3", limits).unwrap();
        assert!(matches!(z3.space(&Sort::parse("x,y").unwrap()), Err(Error::CapExceeded { .. })));
        assert!(z3.space(&Sort::parse("x").unwrap()).is_ok());
    }

    #[test]
    fn index_round_trip() {
        let space = Space::new(Sort::parse("x,y,z").unwrap(), 3, 1000).unwrap();
        for (i, c) in space.iter_coords().enumerate() {
            assert_eq!(space.index(&c), i);
            assert_eq!(space.coords(i), c);
        }
        assert_eq!(space.stride(0), 9);
        assert_eq!(space.stride(2), 1);
    }

    #[test]
    fn validation_reports_paths() {
        let sig = AlgSignature::new([("mul", 2)]).unwrap();
        let err = FiniteModel::new("bad", 2, sig.clone(), RelSignature::default(), vec![vec![0, 1, 1, 2]], vec![]).unwrap_err();
        assert!(err.to_string().contains("ops.mul.table[3]"), "{err}");
        let rels = RelSignature::new([("P", 1)]).unwrap();
        let err = FiniteModel::new("bad", 2, sig, rels, vec![vec![0, 1, 1, 0]], vec![vec![vec![0, 1]]]).unwrap_err();
        assert!(err.to_string().contains("rels.P.tuples[0]"), "{err}");
    }

    #[test]
    fn relabeling_is_isomorphic() {
        let z3 = corpus::z3();
        let copy = z3.relabeled("z3r", &[1, 2, 0]).unwrap();
        assert_ne!(*z3, copy);
        assert!(find_isomorphism(&z3, &copy, &[]).is_some());
    }
}
