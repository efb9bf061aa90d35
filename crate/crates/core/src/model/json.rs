use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Elem, FiniteModel, Limits};
use crate::error::{Error, Result};
use crate::syntax::{AlgSignature, RelSignature};

/// On-disk model document.
///
/// ```json
/// { "carrier": 2,
///   "ops":  { "mul": { "arity": 2, "table": [0, 1, 1, 0] } },
///   "rels": { "P":   { "arity": 1, "tuples": [[1]] } } }
/// ```
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub carrier: usize,
    #[serde(default)]
    pub ops: BTreeMap<String, OpEntry>,
    #[serde(default)]
    pub rels: BTreeMap<String, RelEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpEntry {
    pub arity: usize,
    pub table: Vec<Elem>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelEntry {
    pub arity: usize,
    pub tuples: Vec<Vec<Elem>>,
}

impl ModelFile {
    pub fn into_model(self, default_name: &str, limits: Limits) -> Result<FiniteModel> {
        let sig = AlgSignature::new(self.ops.iter().map(|(k, v)| (k.clone(), v.arity)))
            .map_err(|e| Error::InvalidModel { path: "ops".into(), message: e.to_string() })?;
        let rels = RelSignature::new(self.rels.iter().map(|(k, v)| (k.clone(), v.arity)))
            .map_err(|e| Error::InvalidModel { path: "rels".into(), message: e.to_string() })?;
        // BTreeMap order matches the sorted signatures.
        let tables = self.ops.into_values().map(|o| o.table).collect();
        let tuples = self.rels.into_values().map(|r| r.tuples).collect();
        let name = self.name.unwrap_or_else(|| default_name.to_string());
        FiniteModel::with_limits(name, self.carrier, sig, rels, tables, tuples, limits)
    }
}

impl FiniteModel {
    pub fn from_json(text: &str, default_name: &str, limits: Limits) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)
            .map_err(|e| Error::InvalidModel { path: format!("line {} column {}", e.line(), e.column()), message: e.to_string() })?;
        file.into_model(default_name, limits)
    }

    pub fn load(path: &Path, limits: Limits) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("model");
        Self::from_json(&text, stem, limits)
    }

    pub fn to_file(&self) -> ModelFile {
        ModelFile {
            name: Some(self.name.clone()),
            carrier: self.size,
            ops: self
                .sig
                .ops()
                .iter()
                .zip(&self.tables)
                .map(|(op, table)| (op.name.clone(), OpEntry { arity: op.arity, table: table.clone() }))
                .collect(),
            rels: self
                .rels
                .rels()
                .iter()
                .enumerate()
                .map(|(r, rel)| (rel.name.clone(), RelEntry { arity: rel.arity, tuples: self.tuples(r) }))
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("model serializes")
    }
}
