//! The bundled example algebras, structures, theories and amalgamation instances.

use std::path::Path;
use std::sync::Arc;

use crate::algebra::FiniteChain;
use crate::error::Result;
use crate::io::{bundled_algebra, parse_structure, parse_theory, Theory};
use crate::preservation::AmalgamInstance;
use crate::semantics::{Structure, Table};
use crate::unions::{validate_chain_of_structures, StructureChain};

/// Directory holding the data files, usable for `--structure` style paths.
pub fn corpus_dir() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/corpus"))
}

/// Bundled structure files by name.
pub const STRUCTURES: [(&str, &str); 6] = [
    ("counterexample_m", include_str!("../corpus/structures/counterexample_m.json")),
    ("counterexample_n", include_str!("../corpus/structures/counterexample_n.json")),
    ("k3", include_str!("../corpus/structures/k3.json")),
    ("k4", include_str!("../corpus/structures/k4.json")),
    ("k5", include_str!("../corpus/structures/k5.json")),
    ("z5_fuzzy_subgroup", include_str!("../corpus/structures/z5_fuzzy_subgroup.json")),
];

/// Bundled theory files by name.
pub const THEORIES: [(&str, &str); 3] = [
    ("weighted_graph", include_str!("../corpus/theories/weighted_graph.theory")),
    ("degree2", include_str!("../corpus/theories/degree2.theory")),
    ("fuzzy_subgroup", include_str!("../corpus/theories/fuzzy_subgroup.theory")),
];

pub fn structure(name: &str) -> Result<Structure> {
    let text = STRUCTURES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| crate::Error::Format(format!("no bundled structure `{name}`")))?;
    // relative algebra paths in the bundled files all point at bundled algebras
    let rewritten = text
        .replace("\"../algebras/godel4.json\"", "\"bundled:godel4\"")
        .replace("\"../algebras/luk3.json\"", "\"bundled:luk3\"")
        .replace("\"../algebras/bool2.json\"", "\"bundled:bool2\"");
    parse_structure(&rewritten, None)
}

/// A bundled theory; truth constants refer to `chain` when given.
pub fn theory(name: &str, chain: Option<Arc<FiniteChain>>) -> Result<Theory> {
    let text = THEORIES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| crate::Error::Format(format!("no bundled theory `{name}`")))?;
    parse_theory(text, None, chain)
}

pub fn godel4() -> Arc<FiniteChain> {
    Arc::new(bundled_algebra("godel4").expect("bundled algebra is valid"))
}

/// M and N: three elements each, `P` constantly `3/4` and `1/2`.
pub fn counterexample_pair() -> Result<(Structure, Structure)> {
    Ok((structure("counterexample_m")?, structure("counterexample_n")?))
}

/// K3 ⊆ K4 ⊆ K5 as Boolean graphs.
pub fn complete_graph_chain() -> Result<StructureChain> {
    validate_chain_of_structures(vec![structure("k3")?, structure("k4")?, structure("k5")?])
}

fn constant_p(domain: &[&str], value: usize) -> Result<Structure> {
    Structure::new(godel4(), domain.to_vec())?.with_predicate("P", Table::constant(1, domain.len(), value))
}

/// The identity instance: a structure amalgamated with itself over itself.
pub fn amalgam_identity() -> Result<AmalgamInstance> {
    let (m, _) = counterexample_pair()?;
    Ok(AmalgamInstance {
        common: Some(m.clone()),
        left: m.clone(),
        right: m,
        generators: vec!["d0".into(), "d1".into(), "d2".into()],
    })
}

fn graded_p(domain: &[&str], values: &[usize]) -> Result<Structure> {
    Structure::new(godel4(), domain.to_vec())?.with_predicate("P", Table::new(1, values.to_vec()))
}

/// A two-element structure and a three-element one over a shared point,
/// the larger realising everything the smaller does.
pub fn amalgam_existential() -> Result<AmalgamInstance> {
    Ok(AmalgamInstance {
        common: Some(graded_p(&["d0"], &[2])?),
        left: graded_p(&["d0", "a1"], &[2, 3])?,
        right: graded_p(&["d0", "b1", "b2"], &[2, 1, 3])?,
        generators: vec!["d0".into()],
    })
}

/// Three and four elements over a shared point, `P` constantly `3/4`.
pub fn amalgam_universal_existential() -> Result<AmalgamInstance> {
    Ok(AmalgamInstance {
        common: Some(constant_p(&["d0"], 2)?),
        left: constant_p(&["d0", "a1", "a2"], 2)?,
        right: constant_p(&["d0", "b1", "b2", "b3"], 2)?,
        generators: vec!["d0".into()],
    })
}
