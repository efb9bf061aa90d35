//! Cross-module laws checked on random points and sets of the corpus.

use lgeo::corpus;
use lgeo::galois::{algebraic_closure, logical_closure, DefinableLattice};
use lgeo::halmos::{satisfies, val};
use lgeo::kb::{build_kb, kb_isomorphic, KbBounds, KbResult};
use lgeo::types::{ef_equiv, same_type, separating_formula, TypeBounds, TypeWitness};
use lgeo::{DefSet, ModelRef, Point, Sort};
use proptest::prelude::*;

fn small_model() -> impl Strategy<Value = ModelRef> {
    prop::sample::select(vec![
        corpus::trivial(),
        corpus::z2(),
        corpus::z3(),
        corpus::z4(),
        corpus::v4(),
        corpus::z2p(),
        corpus::z2p0(),
        corpus::q3(),
    ])
}

fn sort_xy() -> Sort {
    Sort::parse("x,y").unwrap()
}

fn point(m: &ModelRef, seed: usize) -> Point {
    let space = m.space(&sort_xy()).unwrap();
    space.point(seed % space.len())
}

fn subset(m: &ModelRef, bits: u64) -> DefSet {
    let len = m.space(&sort_xy()).unwrap().len();
    DefSet::from_indices(m, &sort_xy(), (0..len).filter(|i| bits >> (i % 64) & 1 == 1)).unwrap()
}

fn moved(m: &ModelRef, p: &Point, aut: usize) -> Point {
    let auts = m.automorphisms();
    let g = &auts[aut % auts.len()];
    Point::new(p.sort.clone(), p.values.iter().map(|&a| g.apply(a)).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn same_type_is_reflexive_and_symmetric(m in small_model(), a in 0usize..64, b in 0usize..64) {
        let (p, q) = (point(&m, a), point(&m, b));
        prop_assert!(same_type(&m, &p, &m, &p, TypeBounds::default()).unwrap().result);
        let pq = same_type(&m, &p, &m, &q, TypeBounds::default()).unwrap().result;
        let qp = same_type(&m, &q, &m, &p, TypeBounds::default()).unwrap().result;
        prop_assert_eq!(pq, qp);
    }

    #[test]
    fn automorphic_points_share_a_type(m in small_model(), a in 0usize..64, g in 0usize..64) {
        let p = point(&m, a);
        let q = moved(&m, &p, g);
        let v = same_type(&m, &p, &m, &q, TypeBounds::default()).unwrap();
        prop_assert!(v.result);
        prop_assert!(matches!(v.witness, TypeWitness::Isomorphism(_)));
    }

    #[test]
    fn separators_are_sound(m1 in small_model(), m2 in small_model(), a in 0usize..64, b in 0usize..64) {
        prop_assume!(m1.same_signature(&m2));
        let (p, q) = (point(&m1, a), point(&m2, b));
        let typed = same_type(&m1, &p, &m2, &q, TypeBounds::default()).unwrap().result;
        match separating_formula(&m1, &p, &m2, &q, TypeBounds::default()).unwrap() {
            Some(u) => {
                prop_assert!(!typed);
                prop_assert!(satisfies(&m1, &p, &u).unwrap());
                prop_assert!(!satisfies(&m2, &q, &u).unwrap());
            }
            None => prop_assert!(typed),
        }
    }

    #[test]
    fn ef_equivalence_weakens_with_rank(m1 in small_model(), m2 in small_model(), a in 0usize..64, b in 0usize..64) {
        prop_assume!(m1.same_signature(&m2));
        let (p, q) = (point(&m1, a), point(&m2, b));
        let bounds = TypeBounds::default();
        let levels: Vec<bool> = (0..4).map(|k| ef_equiv(&m1, &p, &m2, &q, k, bounds).unwrap()).collect();
        prop_assert!(levels.windows(2).all(|w| w[0] || !w[1]), "{:?}", levels);
        if same_type(&m1, &p, &m2, &q, bounds).unwrap().result {
            prop_assert!(levels.iter().all(|&l| l));
        }
    }

    #[test]
    fn logical_closure_is_the_least_invariant_superset(m in small_model(), bits in any::<u64>(), a in 0usize..64, g in 0usize..64) {
        let set = subset(&m, bits);
        let closed = logical_closure(&set);
        prop_assert!(set.is_subset(&closed).unwrap());
        let p = point(&m, a);
        prop_assert_eq!(closed.contains_point(&p), closed.contains_point(&moved(&m, &p, g)));
        let lattice = DefinableLattice::new(&m, &sort_xy()).unwrap();
        prop_assert!(lattice.mask_of(&closed).is_some());
    }

    #[test]
    fn algebraic_closure_contains_logical_closure(m in small_model(), bits in any::<u64>()) {
        let set = subset(&m, bits);
        let alg = algebraic_closure(&set).unwrap();
        prop_assert!(logical_closure(&set).is_subset(&alg).unwrap());
        prop_assert_eq!(algebraic_closure(&alg).unwrap(), alg);
    }

    #[test]
    fn ct_values_are_closed(m in small_model(), i in 0usize..64, j in 0usize..64) {
        let kb = build_kb(&m, &[sort_xy()]).unwrap();
        let lattice = kb.lattice(&sort_xy()).unwrap();
        let orbits = lattice.orbit_formulas().unwrap().to_vec();
        let t = vec![orbits[i % orbits.len()].clone().not(), orbits[j % orbits.len()].clone().not()];
        let triple = kb.ct(&t, &sort_xy()).unwrap();
        prop_assert_eq!(logical_closure(&triple.a), triple.a.clone());
        for u in &t {
            prop_assert!(triple.a.is_subset(&val(u, &sort_xy(), &m).unwrap()).unwrap());
        }
    }
}

#[test]
fn kb_self_isomorphism_on_every_model() {
    let sorts = [Sort::parse("x").unwrap()];
    for m in corpus::all() {
        let kb = build_kb(&m, &sorts).unwrap();
        let v = kb_isomorphic(&kb, &kb, KbBounds::default()).unwrap();
        assert_eq!(v.result, KbResult::Isomorphic, "{}", m.name());
        assert!(v.grid.failures.is_empty(), "{}: {:?}", m.name(), v.grid.failures);
    }
}
