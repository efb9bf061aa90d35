//! The bundled model corpus: groups of order ≤ 6, two predicate variants of
//! Z2, a relabeled Z3 and the 3-element Steiner quasigroup.

use std::sync::{Arc, OnceLock};

use crate::model::{FiniteModel, Limits, ModelRef};

const SOURCES: &[(&str, &str)] = &[
    ("trivial", include_str!("../models/trivial.json")),
    ("z2", include_str!("../models/z2.json")),
    ("z3", include_str!("../models/z3.json")),
    ("z3-relabeled", include_str!("../models/z3-relabeled.json")),
    ("z4", include_str!("../models/z4.json")),
    ("v4", include_str!("../models/v4.json")),
    ("s3", include_str!("../models/s3.json")),
    ("z2p", include_str!("../models/z2p.json")),
    ("z2p0", include_str!("../models/z2p0.json")),
    ("q3", include_str!("../models/q3.json")),
];

fn loaded() -> &'static [ModelRef] {
    static MODELS: OnceLock<Vec<ModelRef>> = OnceLock::new();
    MODELS.get_or_init(|| {
        SOURCES
            .iter()
            .map(|(name, text)| Arc::new(FiniteModel::from_json(text, name, Limits::default()).expect("bundled model is valid")))
            .collect()
    })
}

/// Names of the bundled models, in corpus order.
pub fn names() -> impl Iterator<Item = &'static str> {
    SOURCES.iter().map(|(n, _)| *n)
}

pub fn by_name(name: &str) -> Option<ModelRef> {
    SOURCES.iter().position(|(n, _)| *n == name).map(|i| loaded()[i].clone())
}

pub fn all() -> Vec<ModelRef> {
    loaded().to_vec()
}

fn get(name: &str) -> ModelRef {
    by_name(name).expect("bundled model")
}

pub fn trivial() -> ModelRef {
    get("trivial")
}

pub fn z2() -> ModelRef {
    get("z2")
}

pub fn z3() -> ModelRef {
    get("z3")
}

/// Z3 with elements renamed `0->1, 1->2, 2->0`.
pub fn z3_relabeled() -> ModelRef {
    get("z3-relabeled")
}

pub fn z4() -> ModelRef {
    get("z4")
}

/// Klein four-group Z2×Z2; element `2a+b` is the pair `(a,b)`.
pub fn v4() -> ModelRef {
    get("v4")
}

/// Symmetric group on three letters, permutations in lexicographic order.
pub fn s3() -> ModelRef {
    get("s3")
}

/// Z2 with `P = {1}`.
pub fn z2p() -> ModelRef {
    get("z2p")
}

/// Z2 with `P = {0}`.
pub fn z2p0() -> ModelRef {
    get("z2p0")
}

/// Steiner quasigroup `x*y = -x-y (mod 3)`.
pub fn q3() -> ModelRef {
    get("q3")
}
