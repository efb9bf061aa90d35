//! Sort morphisms and their transported actions.
//!
//! A [`TermMorphism`] with source `Y` and target `X` encodes a homomorphism
//! `s: W(Y) → W(X)`, one term over `X` per variable of `Y`. Its actions:
//!
//! | action                  | direction           | function                |
//! |-------------------------|---------------------|-------------------------|
//! | `s̃(μ) = μ∘s` on points  | `H^X → H^Y`         | [`pullback_point`]      |
//! | `s_* = s̃⁻¹` on sets     | `P(H^Y) → P(H^X)`   | [`preimage_set`]        |
//! | `s_*` on formulas       | `Φ(Y) → Φ(X)`       | [`pushforward_formula`] |
//! | `s̃_*` on closed sets    | `P(H^X) → P(H^Y)`   | [`image_closure`]       |
//! | `ŝ_*` on closed filters | `F(Y) → F(X)`       | [`filter_transport`]    |

pub mod grid;

use std::fmt;

use fixedbitset::FixedBitSet;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::galois::{algebraic_closure, logical_closure, CongruenceHandle, FilterHandle};
use crate::halmos::{val, DefSet};
use crate::model::{CompiledTerm, Elem, FiniteModel, ModelRef, Point};
use crate::syntax::{self, check_in_sort, parse_term, AlgSignature, Formula, Sort, Substitution, Term};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TermMorphism {
    source: Sort,
    target: Sort,
    images: Vec<Term>,
}

impl TermMorphism {
    /// `images[i]` is the image of `source.vars()[i]`; every image must be a
    /// term over `target`.
    pub fn new(source: Sort, target: Sort, images: Vec<Term>) -> Result<Self> {
        if images.len() != source.len() {
            return Err(Error::SortMismatch {
                expected: format!("{} images for {source}", source.len()),
                found: images.len().to_string(),
            });
        }
        for t in &images {
            if let Some(v) = t.vars().into_iter().find(|v| !target.contains(v)) {
                return Err(Error::NotInSort { var: v, sort: target.to_string() });
            }
        }
        Ok(TermMorphism { source, target, images })
    }

    pub fn identity(sort: &Sort) -> Self {
        let images = sort.vars().iter().map(|v| Term::var(v.clone())).collect();
        TermMorphism { source: sort.clone(), target: sort.clone(), images }
    }

    /// Parses `y := mul(x,x); z := e`. The source sort lists the assigned
    /// variables in order of appearance.
    pub fn parse(text: &str, target: &Sort, sig: &AlgSignature) -> Result<Self> {
        let mut vars = Vec::new();
        let mut images = Vec::new();
        for part in text.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (lhs, rhs) = part.split_once(":=").ok_or_else(|| {
                Error::Parse(crate::ParseError { pos: 0, message: format!("expected `var := term` in `{part}`") })
            })?;
            vars.push(lhs.trim().to_string());
            images.push(parse_term(rhs.trim(), sig)?);
        }
        TermMorphism::new(Sort::new(vars)?, target.clone(), images)
    }

    pub fn source(&self) -> &Sort {
        &self.source
    }

    pub fn target(&self) -> &Sort {
        &self.target
    }

    pub fn images(&self) -> &[Term] {
        &self.images
    }

    pub fn image_of(&self, var: &str) -> Option<&Term> {
        self.source.index_of(var).map(|i| &self.images[i])
    }

    pub fn substitution(&self) -> Substitution {
        self.source.vars().iter().cloned().zip(self.images.iter().cloned()).collect()
    }

    /// `self ∘ other`: first `other: W(Z) → W(Y)`, then `self: W(Y) → W(X)`.
    pub fn compose(&self, other: &TermMorphism) -> Result<TermMorphism> {
        if other.target != self.source {
            return Err(Error::SortMismatch { expected: self.source.to_string(), found: other.target.to_string() });
        }
        let map = self.substitution();
        let images = other.images.iter().map(|t| t.substitute(&map)).collect::<Result<_>>()?;
        TermMorphism::new(other.source.clone(), self.target.clone(), images)
    }

    fn compile(&self, model: &FiniteModel) -> Result<Vec<CompiledTerm>> {
        self.images.iter().map(|t| model.compile(t, &self.target)).collect()
    }
}

impl fmt::Display for TermMorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (v, t)) in self.source.vars().iter().zip(&self.images).enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v} := {t}")?;
        }
        Ok(())
    }
}

fn expect_sort(found: &Sort, expected: &Sort) -> Result<()> {
    if found != expected {
        return Err(Error::SortMismatch { expected: expected.to_string(), found: found.to_string() });
    }
    Ok(())
}

/// `s̃(μ) = μ∘s`: `ν(y) = s(y)^μ`.
pub fn pullback_point(s: &TermMorphism, model: &FiniteModel, point: &Point) -> Result<Point> {
    expect_sort(&point.sort, &s.target)?;
    let compiled = s.compile(model)?;
    let values = compiled.iter().map(|t| t.eval(model, &point.values)).collect();
    Point::new(s.source.clone(), values)
}

/// `s_* B = s̃⁻¹(B)`: the points over the target whose pullback lies in `B`.
pub fn preimage_set(s: &TermMorphism, b: &DefSet) -> Result<DefSet> {
    expect_sort(b.sort(), &s.source)?;
    let model = b.model();
    let compiled = s.compile(model)?;
    let space = model.space(&s.target)?;
    let mut bits = FixedBitSet::with_capacity(space.len());
    let mut image = vec![0; compiled.len()];
    for (i, coords) in space.iter_coords().enumerate() {
        for (slot, t) in image.iter_mut().zip(&compiled) {
            *slot = t.eval(model, &coords);
        }
        if b.contains_index(b.space().index(&image)) {
            bits.insert(i);
        }
    }
    Ok(DefSet::from_bits(model, space, bits))
}

/// `s̃A`: the pointwise image, a subset of the source space.
pub fn image_set(s: &TermMorphism, a: &DefSet) -> Result<DefSet> {
    expect_sort(a.sort(), &s.target)?;
    let model = a.model();
    let compiled = s.compile(model)?;
    let mut out = DefSet::empty(model, &s.source)?;
    let mut image = vec![0; compiled.len()];
    for coords in a.points() {
        for (slot, t) in image.iter_mut().zip(&compiled) {
            *slot = t.eval(model, &coords);
        }
        out.insert(&image);
    }
    Ok(out)
}

/// `s_* v`: capture-avoiding substitution of the images into `v`.
pub fn pushforward_formula(s: &TermMorphism, v: &Formula) -> Result<Formula> {
    check_in_sort(v, &s.source)?;
    syntax::substitute(&s.substitution(), v)
}

/// Diagram (1): `Val^X(s_* v) = s̃⁻¹(Val^Y(v))`.
pub fn check_diagram1(s: &TermMorphism, v: &Formula, model: &ModelRef) -> Result<bool> {
    let lhs = val(&pushforward_formula(s, v)?, &s.target, model)?;
    let rhs = preimage_set(s, &val(v, &s.source, model)?)?;
    Ok(lhs == rhs)
}

/// Whether `s_*(s̃A) = A`.
pub fn is_s_closed(a: &DefSet, s: &TermMorphism) -> Result<bool> {
    Ok(preimage_set(s, &image_set(s, a)?)? == *a)
}

/// Which Galois closure finishes an image: `^LL` for definable sets
/// (`LG_Θ(f)`), `''` for algebraic sets (`AG_Θ(H)`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ClosureKind {
    Logical,
    Algebraic,
}

/// `s̃_* A = (s̃A)^LL`, or `(s̃A)''` for [`ClosureKind::Algebraic`].
pub fn image_closure(s: &TermMorphism, a: &DefSet, kind: ClosureKind) -> Result<DefSet> {
    let image = image_set(s, a)?;
    match kind {
        ClosureKind::Logical => Ok(logical_closure(&image)),
        ClosureKind::Algebraic => algebraic_closure(&image),
    }
}

/// `ŝ_* T₂ = (s_* T₂)^LL`, computed on the representing sets as
/// `(s̃⁻¹ B)^LL`.
pub fn filter_transport(s: &TermMorphism, t2: &FilterHandle) -> Result<FilterHandle> {
    let pre = preimage_set(s, t2.set())?;
    Ok(FilterHandle::new(&pre))
}

/// The equational counterpart of [`filter_transport`].
pub fn congruence_transport(s: &TermMorphism, t2: &CongruenceHandle) -> Result<CongruenceHandle> {
    let pre = preimage_set(s, t2.set())?;
    CongruenceHandle::new(&pre)
}

/// The objects of diagram (2) for one morphism and one definable `B₀`.
#[derive(Debug, Clone)]
pub struct Diagram2Report {
    pub a0: DefSet,
    pub b: DefSet,
    pub t2: FilterHandle,
    pub t1: FilterHandle,
    pub a: DefSet,
}

impl Diagram2Report {
    pub fn a0_equals_a(&self) -> bool {
        self.a0 == self.a
    }

    pub fn b_within_b0(&self, b0: &DefSet) -> bool {
        self.b.is_subset(b0).unwrap_or(false)
    }

    /// Whether `s̃` maps `A` into `B`, making `A → B` a regular map.
    pub fn is_regular(&self, s: &TermMorphism) -> bool {
        image_set(s, &self.a).and_then(|img| img.is_subset(&self.b)).unwrap_or(false)
    }
}

/// Builds `A₀ = s̃⁻¹B₀`, `B = (s̃A₀)^LL`, `T₂ = B^L`, `T₁ = (s_*T₂)^LL` and
/// `A = T₁^L`.
pub fn check_diagram2(s: &TermMorphism, b0: &DefSet) -> Result<Diagram2Report> {
    if logical_closure(b0) != *b0 {
        return Err(Error::NotDefinable);
    }
    let a0 = preimage_set(s, b0)?;
    let b = image_closure(s, &a0, ClosureKind::Logical)?;
    let t2 = FilterHandle::new(&b);
    let t1 = filter_transport(s, &t2)?;
    let a = t1.set().clone();
    Ok(Diagram2Report { a0, b, t2, t1, a })
}

/// Values of `s̃` on every point, as indices into the source space.
pub fn pullback_table(s: &TermMorphism, model: &ModelRef) -> Result<Vec<usize>> {
    let compiled = s.compile(model)?;
    let target = model.space(&s.target)?;
    let source = model.space(&s.source)?;
    let mut image: Vec<Elem> = vec![0; compiled.len()];
    Ok(target
        .iter_coords()
        .map(|coords| {
            for (slot, t) in image.iter_mut().zip(&compiled) {
                *slot = t.eval(model, &coords);
            }
            source.index(&image)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::galois::DefinableLattice;
    use crate::halmos::satisfies;
    use crate::syntax::parse_formula;
    use proptest::prelude::*;

    fn sort(s: &str) -> Sort {
        Sort::parse(s).unwrap()
    }

    fn morph(m: &ModelRef, text: &str, target: &str) -> TermMorphism {
        TermMorphism::parse(text, &sort(target), m.sig()).unwrap()
    }

    fn f(m: &ModelRef, s: &str) -> Formula {
        parse_formula(s, m.sig(), m.rels()).unwrap()
    }

    fn set(m: &ModelRef, s: &str, pts: &[&[Elem]]) -> DefSet {
        DefSet::from_points(m, &sort(s), pts.iter().copied()).unwrap()
    }

    #[test]
    fn pullback_examples() {
        let z2 = corpus::z2();
        let p = Point::new(sort("x"), vec![1]).unwrap();
        let id = TermMorphism::identity(&sort("x"));
        assert_eq!(pullback_point(&id, &z2, &p).unwrap(), p);
        let s = morph(&z2, "y := mul(x,x)", "x");
        assert_eq!(pullback_point(&s, &z2, &p).unwrap().values, vec![0]);
        let diag = morph(&z2, "y1 := x; y2 := x", "x");
        assert_eq!(pullback_point(&diag, &z2, &p).unwrap().values, vec![1, 1]);
    }

    #[test]
    fn preimage_examples() {
        let z2 = corpus::z2();
        let s = morph(&z2, "y := mul(x,x)", "x");
        assert!(preimage_set(&s, &DefSet::full(&z2, &sort("y")).unwrap()).unwrap().is_full());
        assert!(preimage_set(&s, &DefSet::empty(&z2, &sort("y")).unwrap()).unwrap().is_empty());
        assert!(preimage_set(&s, &set(&z2, "y", &[&[1]])).unwrap().is_empty());
    }

    #[test]
    fn pushforward_examples() {
        let z2p = corpus::z2p();
        let s = morph(&z2p, "y := mul(x,x)", "x");
        assert_eq!(pushforward_formula(&s, &f(&z2p, "P(y)")).unwrap(), f(&z2p, "P(mul(x,x))"));
        assert_eq!(pushforward_formula(&s, &f(&z2p, "y == y")).unwrap(), f(&z2p, "mul(x,x) == mul(x,x)"));
        let id = TermMorphism::identity(&sort("x"));
        let u = f(&z2p, "exists y. P(mul(x,y))");
        assert_eq!(pushforward_formula(&id, &u).unwrap(), u);
    }

    #[test]
    fn substitution_avoids_capture() {
        let z2 = corpus::z2();
        let s = morph(&z2, "x := y", "y");
        let u = f(&z2, "exists y. y == x");
        let out = pushforward_formula(&s, &u).unwrap();
        assert_eq!(out, f(&z2, "exists y_1. y_1 == y"));
        assert!(check_diagram1(&s, &u, &z2).unwrap());
    }

    #[test]
    fn diagram1_examples() {
        let z2 = corpus::z2();
        let s = morph(&z2, "y := mul(x,x)", "x");
        let v = f(&z2, "y == e");
        assert!(check_diagram1(&s, &v, &z2).unwrap());
        assert!(val(&pushforward_formula(&s, &v).unwrap(), &sort("x"), &z2).unwrap().is_full());
        let z3 = corpus::z3();
        let s = morph(&z3, "y := mul(x,x)", "x");
        assert!(pushforward_formula(&s, &f(&z3, "y == x")).is_err());
    }

    #[test]
    fn s_closed_examples() {
        let z2 = corpus::z2();
        let s = morph(&z2, "u := x; v := x", "x,y");
        assert!(is_s_closed(&DefSet::full(&z2, &sort("x,y")).unwrap(), &s).unwrap());
        assert!(!is_s_closed(&set(&z2, "x,y", &[&[0, 1]]), &s).unwrap());
    }

    #[test]
    fn definable_sets_are_s_closed_for_the_image_path() {
        // s̃⁻¹ of a definable set is definable, so image-then-preimage returns it
        // whenever the set is a preimage itself.
        let z3 = corpus::z3();
        let s = morph(&z3, "y := mul(x,x)", "x");
        let lattice = DefinableLattice::new(&z3, &sort("y")).unwrap();
        for b in lattice.elements() {
            let a = preimage_set(&s, &b).unwrap();
            assert!(is_s_closed(&a, &s).unwrap());
        }
    }

    #[test]
    fn image_closure_examples() {
        let z3 = corpus::z3();
        let s = morph(&z3, "y := mul(x,x)", "x");
        let a = set(&z3, "x", &[&[1]]);
        assert_eq!(image_set(&s, &a).unwrap(), set(&z3, "y", &[&[2]]));
        assert_eq!(image_closure(&s, &a, ClosureKind::Logical).unwrap(), set(&z3, "y", &[&[1], &[2]]));
        let empty = DefSet::empty(&z3, &sort("x")).unwrap();
        assert!(image_closure(&s, &empty, ClosureKind::Logical).unwrap().is_empty());
        let id = TermMorphism::identity(&sort("x"));
        let closed = set(&z3, "x", &[&[1], &[2]]);
        assert_eq!(image_closure(&id, &closed, ClosureKind::Logical).unwrap(), closed);
    }

    #[test]
    fn filter_transport_examples() {
        let z3 = corpus::z3();
        let s = morph(&z3, "y := mul(x,x)", "x");
        let t2 = FilterHandle::new(&set(&z3, "y", &[&[0]]));
        assert_eq!(filter_transport(&s, &t2).unwrap().set(), &set(&z3, "x", &[&[0]]));
        let full = FilterHandle::new(&DefSet::full(&z3, &sort("y")).unwrap());
        assert!(filter_transport(&s, &full).unwrap().set().is_full());
        let id = TermMorphism::identity(&sort("y"));
        assert_eq!(filter_transport(&id, &t2).unwrap(), t2);
    }

    #[test]
    fn diagram2_examples() {
        let z3 = corpus::z3();
        let s = morph(&z3, "y := mul(x,x)", "x");
        let b0 = set(&z3, "y", &[&[1], &[2]]);
        let report = check_diagram2(&s, &b0).unwrap();
        assert_eq!(report.a0, set(&z3, "x", &[&[1], &[2]]));
        assert!(report.a0_equals_a());
        assert!(report.b_within_b0(&b0));
        assert!(report.is_regular(&s));
        let empty = DefSet::empty(&z3, &sort("y")).unwrap();
        let report = check_diagram2(&s, &empty).unwrap();
        assert!(report.a0.is_empty() && report.b.is_empty() && report.a.is_empty());
        assert!(report.t2.set().is_empty() && report.t1.set().is_empty());
        assert!(matches!(check_diagram2(&s, &set(&z3, "y", &[&[1]])), Err(Error::NotDefinable)));
    }

    #[test]
    fn composition_directions() {
        let z3 = corpus::z3();
        let s1 = morph(&z3, "y := mul(x,x)", "x");
        let s2 = morph(&z3, "z := inv(y); w := mul(y,y)", "y");
        let c = s1.compose(&s2).unwrap();
        assert_eq!(c.source(), &sort("z,w"));
        assert_eq!(c.target(), &sort("x"));
        for p in z3.space(&sort("x")).unwrap().points() {
            let direct = pullback_point(&c, &z3, &p).unwrap();
            let stepwise = pullback_point(&s2, &z3, &pullback_point(&s1, &z3, &p).unwrap()).unwrap();
            assert_eq!(direct, stepwise);
        }
        assert!(s2.compose(&s1).is_err());
    }

    #[test]
    fn morphism_parse_errors() {
        let z2 = corpus::z2();
        assert!(TermMorphism::parse("y = x", &sort("x"), z2.sig()).is_err());
        assert!(TermMorphism::parse("y := z", &sort("x"), z2.sig()).is_err());
        assert!(TermMorphism::parse("y := x; y := e", &sort("x"), z2.sig()).is_err());
        assert_eq!(morph(&z2, "y := mul(x,x); z := e", "x").to_string(), "y := mul(x,x); z := e");
    }

    fn arb_term(vars: &'static [&'static str]) -> impl Strategy<Value = Term> {
        let leaf = prop_oneof![prop::sample::select(vars).prop_map(Term::var), Just(Term::constant("e"))];
        leaf.prop_recursive(2, 8, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|a| Term::op("inv", vec![a])),
                (inner.clone(), inner).prop_map(|(a, b)| Term::op("mul", vec![a, b])),
            ]
        })
    }

    fn arb_formula_over_y() -> impl Strategy<Value = &'static str> {
        prop::sample::select(vec![
            "P(y1)",
            "y1 == mul(y2,y2)",
            "exists x. mul(x,x) == y1",
            "forall y2. P(mul(y1,y2)) | y2 == e",
            "exists x1. exists y1. !(x1 == y1) & P(mul(y2,x1))",
            "forall x. exists x1. mul(x,x1) == y2",
        ])
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn pullback_and_pushforward_agree(
            t1 in arb_term(&["x", "x1"]),
            t2 in arb_term(&["x", "x1"]),
            text in arb_formula_over_y(),
            idx in 0usize..4,
        ) {
            let m = corpus::z2p();
            let s = TermMorphism::new(sort("y1,y2"), sort("x,x1"), vec![t1, t2]).unwrap();
            let v = f(&m, &text);
            let mu = m.space(&sort("x,x1")).unwrap().point(idx);
            let lhs = satisfies(&m, &mu, &pushforward_formula(&s, &v).unwrap()).unwrap();
            let rhs = satisfies(&m, &pullback_point(&s, &m, &mu).unwrap(), &v).unwrap();
            prop_assert_eq!(lhs, rhs);
            prop_assert!(check_diagram1(&s, &v, &m).unwrap());
        }

        #[test]
        fn composition_is_functorial(
            a in arb_term(&["x", "x1"]),
            b in arb_term(&["x", "x1"]),
            c in arb_term(&["y1", "y2"]),
            d in arb_term(&["y1", "y2"]),
            text in prop::sample::select(vec!["P(z1) & z2 == e", "exists y1. mul(y1,z1) == z2", "forall x. P(mul(x,z2))"]),
        ) {
            let m = corpus::z2p();
            let s1 = TermMorphism::new(sort("y1,y2"), sort("x,x1"), vec![a, b]).unwrap();
            let s2 = TermMorphism::new(sort("z1,z2"), sort("y1,y2"), vec![c, d]).unwrap();
            let v = f(&m, text);
            let comp = s1.compose(&s2).unwrap();
            let direct = val(&pushforward_formula(&comp, &v).unwrap(), &sort("x,x1"), &m).unwrap();
            let stepwise = val(&pushforward_formula(&s1, &pushforward_formula(&s2, &v).unwrap()).unwrap(), &sort("x,x1"), &m).unwrap();
            prop_assert_eq!(&direct, &stepwise);
            let b = val(&v, &sort("z1,z2"), &m).unwrap();
            prop_assert_eq!(preimage_set(&comp, &b).unwrap(), preimage_set(&s1, &preimage_set(&s2, &b).unwrap()).unwrap());
        }
    }
}
