//! Terms, formulas and sorts.
//!
//! Terms are syntactic representatives of elements of the free algebra `W(X)`;
//! formulas represent elements of `Φ(X)`. Two syntactically different terms may
//! denote the same element of `W(X)` for a nontrivial variety, so every
//! downstream computation factors through evaluation at points.

mod parse;
mod print;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub use parse::{parse_formula, parse_term};

/// An operation symbol of the algebraic signature. Arity 0 is a constant.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OpSymbol {
    pub name: String,
    pub arity: usize,
}

/// A relation symbol. Equality is built in and never listed here.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RelSymbol {
    pub name: String,
    pub arity: usize,
}

/// Operation symbols, kept sorted by name so that indices are canonical.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct AlgSignature {
    ops: Vec<OpSymbol>,
}

impl AlgSignature {
    pub fn new<I, S>(ops: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, usize)>,
        S: Into<String>,
    {
        let mut ops: Vec<OpSymbol> = ops
            .into_iter()
            .map(|(name, arity)| OpSymbol { name: name.into(), arity })
            .collect();
        ops.sort_by(|a, b| a.name.cmp(&b.name));
        for w in ops.windows(2) {
            if w[0].name == w[1].name {
                return Err(Error::InvalidSignature(format!("duplicate operation `{}`", w[0].name)));
            }
        }
        for op in &ops {
            check_identifier(&op.name)?;
        }
        Ok(AlgSignature { ops })
    }

    pub fn ops(&self) -> &[OpSymbol] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Index and arity of an operation symbol.
    pub fn lookup(&self, name: &str) -> Option<(usize, usize)> {
        self.ops
            .binary_search_by(|o| o.name.as_str().cmp(name))
            .ok()
            .map(|i| (i, self.ops[i].arity))
    }
}

/// Relation symbols, sorted by name.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct RelSignature {
    rels: Vec<RelSymbol>,
}

impl RelSignature {
    pub fn new<I, S>(rels: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, usize)>,
        S: Into<String>,
    {
        let mut rels: Vec<RelSymbol> = rels
            .into_iter()
            .map(|(name, arity)| RelSymbol { name: name.into(), arity })
            .collect();
        rels.sort_by(|a, b| a.name.cmp(&b.name));
        for w in rels.windows(2) {
            if w[0].name == w[1].name {
                return Err(Error::InvalidSignature(format!("duplicate relation `{}`", w[0].name)));
            }
        }
        for r in &rels {
            check_identifier(&r.name)?;
            if r.arity == 0 {
                return Err(Error::InvalidSignature(format!("relation `{}` has arity 0", r.name)));
            }
        }
        Ok(RelSignature { rels })
    }

    pub fn rels(&self) -> &[RelSymbol] {
        &self.rels
    }

    pub fn len(&self) -> usize {
        self.rels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rels.is_empty()
    }

    pub fn lookup(&self, name: &str) -> Option<(usize, usize)> {
        self.rels
            .binary_search_by(|r| r.name.as_str().cmp(name))
            .ok()
            .map(|i| (i, self.rels[i].arity))
    }
}

fn check_identifier(name: &str) -> Result<()> {
    let mut chars = name.chars();
    let ok = matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !matches!(name, "exists" | "forall");
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidSignature(format!("`{name}` is not a valid identifier")))
    }
}

/// An ordered list of distinct variables. The order fixes the coordinate
/// order of the affine space `H^X`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Sort(Arc<[String]>);

impl Sort {
    pub fn new<I, S>(vars: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let vars: Vec<String> = vars.into_iter().map(Into::into).collect();
        let mut seen = BTreeSet::new();
        for v in &vars {
            check_identifier(v).map_err(|_| Error::InvalidSort(format!("`{v}` is not a variable name")))?;
            if !seen.insert(v.as_str()) {
                return Err(Error::InvalidSort(format!("duplicate variable `{v}`")));
            }
        }
        Ok(Sort(vars.into()))
    }

    pub fn empty() -> Self {
        Sort(Arc::from(Vec::new()))
    }

    /// Parses a comma-separated variable list such as `x,y`.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim().trim_start_matches('(').trim_end_matches(')');
        if text.trim().is_empty() {
            return Ok(Sort::empty());
        }
        Sort::new(text.split(',').map(|s| s.trim().to_string()))
    }

    pub fn vars(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn index_of(&self, var: &str) -> Option<usize> {
        self.0.iter().position(|v| v == var)
    }

    pub fn contains(&self, var: &str) -> bool {
        self.index_of(var).is_some()
    }

    /// The sort with `var` appended as the last coordinate.
    pub fn extended(&self, var: &str) -> Result<Sort> {
        Sort::new(self.0.iter().cloned().chain(std::iter::once(var.to_string())))
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.0.join(","))
    }
}

impl fmt::Debug for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String),
    Op(String, Vec<Term>),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Term {
        Term::Var(name.into())
    }

    pub fn op(name: impl Into<String>, args: Vec<Term>) -> Term {
        Term::Op(name.into(), args)
    }

    pub fn constant(name: impl Into<String>) -> Term {
        Term::Op(name.into(), Vec::new())
    }

    /// Leaves (variables and constants) have depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Term::Var(_) => 0,
            Term::Op(_, args) => args.iter().map(|a| a.depth() + 1).max().unwrap_or(0),
        }
    }

    /// The variables occurring in the term (its support).
    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Op(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    pub fn substitute(&self, map: &Substitution) -> Result<Term> {
        match self {
            Term::Var(v) => map.get(v).cloned().ok_or_else(|| Error::UnboundVariable(v.clone())),
            Term::Op(name, args) => Ok(Term::Op(
                name.clone(),
                args.iter().map(|a| a.substitute(map)).collect::<Result<_>>()?,
            )),
        }
    }

    /// Checks symbols and arities against a signature.
    pub fn check(&self, sig: &AlgSignature) -> Result<()> {
        match self {
            Term::Var(_) => Ok(()),
            Term::Op(name, args) => {
                let (_, arity) = sig.lookup(name).ok_or_else(|| Error::UnknownSymbol(name.clone()))?;
                if arity != args.len() {
                    return Err(Error::Arity { name: name.clone(), expected: arity, found: args.len() });
                }
                args.iter().try_for_each(|a| a.check(sig))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    Eq(Term, Term),
    Rel(String, Vec<Term>),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Exists(String, Box<Formula>),
    Forall(String, Box<Formula>),
}

impl Formula {
    pub fn eq(lhs: Term, rhs: Term) -> Formula {
        Formula::Eq(lhs, rhs)
    }

    pub fn rel(name: impl Into<String>, args: Vec<Term>) -> Formula {
        Formula::Rel(name.into(), args)
    }

    pub fn not(self) -> Formula {
        Formula::Not(Box::new(self))
    }

    pub fn and(self, other: Formula) -> Formula {
        Formula::And(Box::new(self), Box::new(other))
    }

    pub fn or(self, other: Formula) -> Formula {
        Formula::Or(Box::new(self), Box::new(other))
    }

    pub fn exists(var: impl Into<String>, body: Formula) -> Formula {
        Formula::Exists(var.into(), Box::new(body))
    }

    pub fn forall(var: impl Into<String>, body: Formula) -> Formula {
        Formula::Forall(var.into(), Box::new(body))
    }

    /// Left-nested conjunction; `None` for an empty iterator.
    pub fn conjunction(parts: impl IntoIterator<Item = Formula>) -> Option<Formula> {
        parts.into_iter().reduce(Formula::and)
    }

    /// Left-nested disjunction; `None` for an empty iterator.
    pub fn disjunction(parts: impl IntoIterator<Item = Formula>) -> Option<Formula> {
        parts.into_iter().reduce(Formula::or)
    }

    /// A closed formula true in every (nonempty) model.
    pub fn truth() -> Formula {
        Formula::exists("z", Formula::eq(Term::var("z"), Term::var("z")))
    }

    /// A tautology whose free variables lie in `sort`.
    pub fn tautology(sort: &Sort) -> Formula {
        match sort.vars().first() {
            Some(x) => Formula::eq(Term::var(x.clone()), Term::var(x.clone())),
            None => Formula::truth(),
        }
    }

    pub fn contradiction(sort: &Sort) -> Formula {
        Formula::tautology(sort).not()
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        let mut add_term = |t: &Term, bound: &Vec<String>| {
            for v in t.vars() {
                if !bound.contains(&v) {
                    out.insert(v);
                }
            }
        };
        match self {
            Formula::Eq(a, b) => {
                add_term(a, bound);
                add_term(b, bound);
            }
            Formula::Rel(_, args) => args.iter().for_each(|a| add_term(a, bound)),
            Formula::Not(u) => u.collect_free(bound, out),
            Formula::And(u, v) | Formula::Or(u, v) => {
                u.collect_free(bound, out);
                v.collect_free(bound, out);
            }
            Formula::Exists(x, u) | Formula::Forall(x, u) => {
                bound.push(x.clone());
                u.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    /// Every variable name occurring anywhere, bound or free.
    pub fn all_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit_all_vars(&mut out);
        out
    }

    fn visit_all_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Eq(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Formula::Rel(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
            Formula::Not(u) => u.visit_all_vars(out),
            Formula::And(u, v) | Formula::Or(u, v) => {
                u.visit_all_vars(out);
                v.visit_all_vars(out);
            }
            Formula::Exists(x, u) | Formula::Forall(x, u) => {
                out.insert(x.clone());
                u.visit_all_vars(out);
            }
        }
    }

    pub fn quantifier_rank(&self) -> usize {
        match self {
            Formula::Eq(..) | Formula::Rel(..) => 0,
            Formula::Not(u) => u.quantifier_rank(),
            Formula::And(u, v) | Formula::Or(u, v) => u.quantifier_rank().max(v.quantifier_rank()),
            Formula::Exists(_, u) | Formula::Forall(_, u) => 1 + u.quantifier_rank(),
        }
    }

    /// Maximum depth of any term in an atom.
    pub fn term_depth(&self) -> usize {
        match self {
            Formula::Eq(a, b) => a.depth().max(b.depth()),
            Formula::Rel(_, args) => args.iter().map(Term::depth).max().unwrap_or(0),
            Formula::Not(u) | Formula::Exists(_, u) | Formula::Forall(_, u) => u.term_depth(),
            Formula::And(u, v) | Formula::Or(u, v) => u.term_depth().max(v.term_depth()),
        }
    }

    /// Number of nodes, used to rank candidate witnesses.
    pub fn size(&self) -> usize {
        match self {
            Formula::Eq(..) | Formula::Rel(..) => 1,
            Formula::Not(u) | Formula::Exists(_, u) | Formula::Forall(_, u) => 1 + u.size(),
            Formula::And(u, v) | Formula::Or(u, v) => 1 + u.size() + v.size(),
        }
    }

    /// Checks symbols and arities against the two signatures.
    pub fn check(&self, sig: &AlgSignature, rels: &RelSignature) -> Result<()> {
        match self {
            Formula::Eq(a, b) => {
                a.check(sig)?;
                b.check(sig)
            }
            Formula::Rel(name, args) => {
                let (_, arity) = rels.lookup(name).ok_or_else(|| Error::UnknownSymbol(name.clone()))?;
                if arity != args.len() {
                    return Err(Error::Arity { name: name.clone(), expected: arity, found: args.len() });
                }
                args.iter().try_for_each(|a| a.check(sig))
            }
            Formula::Not(u) | Formula::Exists(_, u) | Formula::Forall(_, u) => u.check(sig, rels),
            Formula::And(u, v) | Formula::Or(u, v) => {
                u.check(sig, rels)?;
                v.check(sig, rels)
            }
        }
    }
}

/// Images of variables under a homomorphism of free algebras.
pub type Substitution = BTreeMap<String, Term>;

/// Capture-avoiding substitution `s_*(u)`.
///
/// Atoms are rewritten termwise. A bound variable is renamed whenever it
/// occurs in the support of a term substituted for a free variable of the
/// quantified subformula; fresh names use a deterministic `_N` suffix.
pub fn substitute(map: &Substitution, u: &Formula) -> Result<Formula> {
    for v in u.free_vars() {
        if !map.contains_key(&v) {
            return Err(Error::UnboundVariable(v));
        }
    }
    subst_rec(map, u)
}

fn subst_rec(map: &Substitution, u: &Formula) -> Result<Formula> {
    Ok(match u {
        Formula::Eq(a, b) => Formula::Eq(a.substitute(map)?, b.substitute(map)?),
        Formula::Rel(name, args) => Formula::Rel(
            name.clone(),
            args.iter().map(|a| a.substitute(map)).collect::<Result<_>>()?,
        ),
        Formula::Not(v) => subst_rec(map, v)?.not(),
        Formula::And(a, b) => subst_rec(map, a)?.and(subst_rec(map, b)?),
        Formula::Or(a, b) => subst_rec(map, a)?.or(subst_rec(map, b)?),
        Formula::Exists(x, body) | Formula::Forall(x, body) => {
            let free: BTreeSet<String> = u.free_vars();
            let mut support = BTreeSet::new();
            for v in &free {
                if let Some(t) = map.get(v) {
                    t.collect_vars(&mut support);
                }
            }
            let mut inner: Substitution = free
                .iter()
                .filter_map(|v| map.get(v).map(|t| (v.clone(), t.clone())))
                .collect();
            let bound = if support.contains(x) {
                let mut avoid = support;
                avoid.extend(body.all_vars());
                fresh_name(x, &avoid)
            } else {
                x.clone()
            };
            inner.insert(x.clone(), Term::Var(bound.clone()));
            let body = subst_rec(&inner, body)?;
            match u {
                Formula::Exists(..) => Formula::exists(bound, body),
                _ => Formula::forall(bound, body),
            }
        }
    })
}

/// `base_N` for the smallest `N >= 1` not in `avoid`. A trailing `_N` on
/// `base` is stripped first so repeated renaming stays readable.
pub fn fresh_name(base: &str, avoid: &BTreeSet<String>) -> String {
    let stem = match base.rsplit_once('_') {
        Some((stem, digits)) if !stem.is_empty() && !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) => stem,
        _ => base,
    };
    (1..)
        .map(|n| format!("{stem}_{n}"))
        .find(|candidate| !avoid.contains(candidate))
        .expect("unbounded counter")
}

/// Free variables of `u` that are not coordinates of `sort`.
pub fn vars_outside(u: &Formula, sort: &Sort) -> Vec<String> {
    u.free_vars().into_iter().filter(|v| !sort.contains(v)).collect()
}

/// Errors unless every free variable of `u` lies in `sort`.
pub fn check_in_sort(u: &Formula, sort: &Sort) -> Result<()> {
    match vars_outside(u, sort).into_iter().next() {
        Some(var) => Err(Error::NotInSort { var, sort: sort.to_string() }),
        None => Ok(()),
    }
}
