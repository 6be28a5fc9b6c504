//! Built-in example models, embedded from `zoo.toml`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use swanlab_core::{
    break_multiset, fmt_q, hidden_turning_scan, ell_invariant, subharmonicity_check, swan_divisor_check, sweep_simplex,
    NablaModule, Normalization, PreparedModule, WeightVector,
};

use crate::doc::{parse_spec, ModuleSpecDoc};
use crate::error::CliError;
use crate::run::surface_model;

const ZOO_TOML: &str = include_str!("../zoo.toml");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Module,
    Surface,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ZooEntry {
    pub name: String,
    pub kind: Kind,
    pub source: String,
    pub summary: String,
    pub doc: String,
    #[serde(default)]
    pub expect: BTreeMap<String, String>,
}

#[derive(Debug, Deserialize)]
struct ZooFile {
    version: u32,
    entry: Vec<ZooEntry>,
}

impl ZooEntry {
    pub fn parse(&self) -> Result<ModuleSpecDoc, CliError> {
        parse_spec(&self.doc).map_err(|e| CliError::Parse(format!("zoo entry {}: {e}", self.name)))
    }

    pub fn module(&self) -> Result<(ModuleSpecDoc, NablaModule), CliError> {
        let doc = self.parse()?;
        let m = doc.build(None)?;
        Ok((doc, m))
    }
}

pub fn zoo_version() -> u32 {
    load().0
}

fn load() -> (u32, Vec<ZooEntry>) {
    let f: ZooFile = toml::from_str(ZOO_TOML).expect("embedded zoo manifest parses");
    (f.version, f.entry)
}

pub fn entries() -> Vec<ZooEntry> {
    load().1
}

pub fn entries_of(kind: Kind) -> Vec<ZooEntry> {
    entries().into_iter().filter(|e| e.kind == kind).collect()
}

pub fn find(name: &str) -> Result<ZooEntry, CliError> {
    entries().into_iter().find(|e| e.name == name).ok_or_else(|| {
        let names: Vec<String> = entries().into_iter().map(|e| e.name).collect();
        CliError::Usage(format!("no zoo entry `{name}`; known: {}", names.join(", ")))
    })
}

/// Values of the entry's expected keys, computed afresh.
pub fn evaluate(entry: &ZooEntry) -> Result<BTreeMap<String, String>, CliError> {
    let (doc, module) = entry.module()?;
    let mut out = BTreeMap::new();
    let keys: Vec<&String> = entry.expect.keys().collect();
    match entry.kind {
        Kind::Module => {
            if keys.iter().any(|k| *k == "swan" || *k == "breaks") {
                let w = doc.params.weights.clone().ok_or_else(|| CliError::Usage(format!("{}: no weights", entry.name)))?;
                let norm = doc.params.normalize.clone().unwrap_or(Normalization::Simplex);
                let b = break_multiset(&PreparedModule::new(&module)?, &WeightVector::new(w), &norm)?;
                out.insert("swan".into(), fmt_q(&b.swan));
                out.insert("breaks".into(), b.breaks.iter().map(fmt_q).collect::<Vec<_>>().join(","));
            }
            if keys.iter().any(|k| k.starts_with("fit:")) {
                let s = sweep_simplex(&module, doc.params.grid.unwrap_or(12))?;
                for f in &s.fits {
                    let mut pieces: Vec<String> =
                        f.fit.iter().flat_map(|p| p.pieces.iter().map(|a| a.to_record())).collect();
                    pieces.sort();
                    out.insert(format!("fit:{}", f.label), pieces.join(" | "));
                }
            }
        }
        Kind::Surface => {
            let model = surface_model(&doc, &module, None, None)?;
            let grid = doc.params.grid.unwrap_or(12);
            out.insert("ell".into(), ell_invariant(&model)?.ell.to_string());
            if keys.iter().any(|k| ["lhs", "rhs", "equality", "exposed"].contains(&k.as_str())) {
                let s = subharmonicity_check(&model)?;
                out.insert("lhs".into(), fmt_q(&s.lhs));
                out.insert("rhs".into(), fmt_q(&s.rhs));
                out.insert("equality".into(), s.equality.to_string());
                out.insert("exposed".into(), s.exposed_points.len().to_string());
            }
            for which in 0..2 {
                if entry.expect.contains_key(&format!("hidden:{which}")) {
                    let h = hidden_turning_scan(&model, which, grid)?;
                    out.insert(format!("hidden:{which}"), h.hidden.to_string());
                }
            }
            if keys.iter().any(|k| k.starts_with("divisor:") || k.starts_with("lemma:") || *k == "swan_divisor") {
                let d = swan_divisor_check(&model, grid)?;
                let sd: Vec<String> = d.swan_divisor.iter().map(|(c, v)| format!("{c}:{v}")).collect();
                out.insert("swan_divisor".into(), sd.join(", "));
                for c in &d.components {
                    out.insert(format!("divisor:{}", c.component), fmt_q(&c.intersection));
                    out.insert(format!("lemma:{}", c.component), fmt_q(&c.lemma_rhs));
                }
            }
        }
    }
    Ok(out)
}

/// `(key, expected, actual)` for each mismatch.
pub fn mismatches(entry: &ZooEntry) -> Result<Vec<(String, String, String)>, CliError> {
    let actual = evaluate(entry)?;
    Ok(entry
        .expect
        .iter()
        .filter_map(|(k, v)| {
            let got = actual.get(k).cloned().unwrap_or_else(|| "<missing>".into());
            (got != *v).then(|| (k.clone(), v.clone(), got))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_loads_and_documents_parse() {
        assert_eq!(zoo_version(), 1);
        let all = entries();
        assert!(all.iter().filter(|e| e.kind == Kind::Module).count() >= 6);
        for e in &all {
            let d = e.parse().unwrap();
            assert_eq!(parse_spec(&d.to_string()).unwrap(), d, "{}", e.name);
        }
    }
}
