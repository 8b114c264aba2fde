//! Loading and saving algebras, structures, theories and chains of structures.
//!
//! Algebra files are JSON objects `{"elements": [...], "star": [[...]],
//! "implies": [[...]]}` with table entries given as element labels or
//! indices; `implies` may be omitted. Structure files are JSON objects
//! `{"algebra": ..., "domain": [...], "predicates": {...}, "functions": {...}}`
//! where each symbol maps to `{"arity": n, "table": {"a,b": "label"}}`.
//! The algebra is a path (relative to the structure file), `bundled:NAME`,
//! or an inline algebra object. Theory files hold one formula per line,
//! `#` comments, and optional `pred NAME/N` and `func NAME/N` declarations.
//! A chain file is a JSON list of structure file paths.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::algebra::{validate_chain, ChainData, FiniteChain};
use crate::error::{Error, Result};
use crate::parser::{parse_formula, parse_formula_untyped};
use crate::semantics::{Structure, Table};
use crate::syntax::{Formula, Signature};
use crate::unions::{validate_chain_of_structures, StructureChain};

/// Names accepted after `bundled:`.
pub const BUNDLED_ALGEBRAS: [&str; 3] = ["godel4", "luk3", "bool2"];

/// A bundled algebra by name.
pub fn bundled_algebra(name: &str) -> Result<FiniteChain> {
    let text = match name {
        "godel4" => include_str!("../corpus/algebras/godel4.json"),
        "luk3" => include_str!("../corpus/algebras/luk3.json"),
        "bool2" => include_str!("../corpus/algebras/bool2.json"),
        _ => {
            return Err(Error::Format(format!(
                "unknown bundled algebra `{name}` (known: {})",
                BUNDLED_ALGEBRAS.join(", ")
            )))
        }
    };
    parse_algebra(text)
}

/// Parses and validates an algebra file.
pub fn parse_algebra(text: &str) -> Result<FiniteChain> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Format(format!("algebra: {e}")))?;
    algebra_from_value(&value)
}

fn cell(v: &Value, labels: &[String], what: &str) -> Result<usize> {
    match v {
        Value::String(s) => labels
            .iter()
            .position(|l| l == s)
            .ok_or_else(|| Error::Format(format!("{what}: `{s}` is not an element"))),
        Value::Number(n) => n
            .as_u64()
            .map(|i| i as usize)
            .filter(|&i| i < labels.len())
            .ok_or_else(|| Error::Format(format!("{what}: index {n} out of range"))),
        _ => Err(Error::Format(format!("{what}: expected a label or an index"))),
    }
}

fn op_table(v: &Value, labels: &[String], what: &str) -> Result<Vec<Vec<usize>>> {
    let rows = v
        .as_array()
        .ok_or_else(|| Error::Format(format!("{what}: expected a list of rows")))?;
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            row.as_array()
                .ok_or_else(|| Error::Format(format!("{what}: row {i} is not a list")))?
                .iter()
                .map(|c| cell(c, labels, what))
                .collect()
        })
        .collect()
}

fn algebra_from_value(value: &Value) -> Result<FiniteChain> {
    let obj = value
        .as_object()
        .ok_or_else(|| Error::Format("algebra: expected an object".into()))?;
    let elements: Vec<String> = obj
        .get("elements")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Format("algebra: missing `elements` list".into()))?
        .iter()
        .map(|e| match e {
            Value::String(s) => Ok(s.clone()),
            other => Err(Error::Format(format!("algebra: element {other} is not a string"))),
        })
        .collect::<Result<_>>()?;
    let star = op_table(
        obj.get("star")
            .ok_or_else(|| Error::Format("algebra: missing `star` table".into()))?,
        &elements,
        "star",
    )?;
    let implies = obj
        .get("implies")
        .map(|v| op_table(v, &elements, "implies"))
        .transpose()?;
    let extra_ops = match obj.get("extra_ops") {
        Some(v) => serde_json::from_value(v.clone()).map_err(|e| Error::Format(format!("extra_ops: {e}")))?,
        None => BTreeMap::new(),
    };
    let data = ChainData {
        elements,
        star,
        implies,
        extra_ops,
    };
    let report = validate_chain(&data)?;
    if !report.is_ok() {
        return Err(Error::Validation(format!("not an MTL-chain: {report}")));
    }
    FiniteChain::from_data(data)
}

/// The algebra as its file format.
pub fn algebra_to_value(chain: &FiniteChain) -> Value {
    serde_json::to_value(chain.to_data()).expect("plain data")
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Loads an algebra from a path or `bundled:NAME`.
pub fn load_algebra(reference: &str) -> Result<FiniteChain> {
    if let Some(name) = reference.strip_prefix("bundled:") {
        return bundled_algebra(name);
    }
    let path = Path::new(reference);
    parse_algebra(&read(path)?).map_err(|e| locate(path, e))
}

fn locate(path: &Path, e: Error) -> Error {
    match e {
        Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
        Error::Validation(m) => Error::Validation(format!("{}: {m}", path.display())),
        other => other,
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SymbolFile {
    arity: usize,
    table: BTreeMap<String, String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StructureFile {
    algebra: Value,
    domain: Vec<String>,
    #[serde(default)]
    predicates: BTreeMap<String, SymbolFile>,
    #[serde(default)]
    functions: BTreeMap<String, SymbolFile>,
}

/// Splits a table key such as `a,b` or `(a, b)` into labels.
fn split_key(key: &str) -> Vec<String> {
    let inner = key.trim();
    let inner = inner
        .strip_prefix('(')
        .and_then(|k| k.strip_suffix(')'))
        .unwrap_or(inner)
        .trim();
    if inner.is_empty() {
        return Vec::new();
    }
    inner.split(',').map(|p| p.trim().to_string()).collect()
}

fn read_table(
    name: &str,
    file: &SymbolFile,
    domain: &[String],
    value_of: impl Fn(&str) -> Option<usize>,
) -> Result<Table> {
    let n = domain.len();
    let index: BTreeMap<&str, usize> = domain.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let mut values: Vec<Option<usize>> = vec![None; n.pow(file.arity as u32)];
    for (key, v) in &file.table {
        let args = split_key(key);
        if args.len() != file.arity {
            return Err(Error::Format(format!(
                "`{name}`: key `{key}` has {} argument(s), expected {}",
                args.len(),
                file.arity
            )));
        }
        let idx: Vec<usize> = args
            .iter()
            .map(|a| {
                index
                    .get(a.as_str())
                    .copied()
                    .ok_or_else(|| Error::Format(format!("`{name}`: `{a}` is not a domain element")))
            })
            .collect::<Result<_>>()?;
        let value = value_of(v).ok_or_else(|| {
            Error::Format(format!("`{name}`: value `{v}` at `{key}` is undefined"))
        })?;
        let slot = &mut values[Table::index(n, &idx)];
        if slot.is_some() {
            return Err(Error::Format(format!("`{name}`: `{key}` is given twice")));
        }
        *slot = Some(value);
    }
    let all: Vec<usize> = (0..n).collect();
    let missing = crate::algebra::tuples(&all, file.arity)
        .find(|args| values[Table::index(n, args)].is_none());
    if let Some(args) = missing {
        let labels: Vec<&str> = args.iter().map(|&a| domain[a].as_str()).collect();
        return Err(Error::Format(format!(
            "`{name}`: no entry for ({}); tables must be total",
            labels.join(",")
        )));
    }
    Ok(Table::new(file.arity, values.into_iter().map(|v| v.expect("checked")).collect()))
}

/// Parses a structure file; relative algebra paths resolve against `base`.
pub fn parse_structure(text: &str, base: Option<&Path>) -> Result<Structure> {
    let file: StructureFile =
        serde_json::from_str(text).map_err(|e| Error::Format(format!("structure: {e}")))?;
    let chain = match &file.algebra {
        Value::String(r) if r.starts_with("bundled:") => load_algebra(r)?,
        Value::String(r) => {
            let p = Path::new(r);
            let full: PathBuf = match base {
                Some(b) if p.is_relative() => b.join(p),
                _ => p.to_path_buf(),
            };
            load_algebra(&full.to_string_lossy())?
        }
        v @ Value::Object(_) => algebra_from_value(v)?,
        _ => return Err(Error::Format("structure: `algebra` must be a path or an object".into())),
    };
    let chain = Arc::new(chain);
    let mut s = Structure::new(chain.clone(), file.domain.clone())?;
    for (name, f) in &file.predicates {
        let t = read_table(name, f, &file.domain, |v| chain.index_of(v))?;
        s.set_predicate(name, t)?;
    }
    for (name, f) in &file.functions {
        let t = read_table(name, f, &file.domain, |v| file.domain.iter().position(|l| l == v))?;
        s.set_function(name, t)?;
    }
    Ok(s)
}

pub fn load_structure(path: &Path) -> Result<Structure> {
    parse_structure(&read(path)?, path.parent()).map_err(|e| locate(path, e))
}

/// The structure as its file format. `algebra` is written as given, or
/// inline when `None`.
pub fn structure_to_value(s: &Structure, algebra: Option<&str>) -> Value {
    let n = s.size();
    let all: Vec<usize> = (0..n).collect();
    let table = |t: &Table, value: &dyn Fn(usize) -> String| -> Value {
        let mut m = serde_json::Map::new();
        for args in crate::algebra::tuples(&all, t.arity) {
            let key: Vec<&str> = args.iter().map(|&a| s.label(a)).collect();
            m.insert(key.join(","), Value::String(value(t.get(n, &args))));
        }
        json!({"arity": t.arity, "table": m})
    };
    let chain_label = |v: usize| s.chain().label(v).to_string();
    let elem_label = |v: usize| s.label(v).to_string();
    let predicates: serde_json::Map<String, Value> = s
        .predicates()
        .iter()
        .map(|(k, t)| (k.clone(), table(t, &chain_label)))
        .collect();
    let functions: serde_json::Map<String, Value> = s
        .functions()
        .iter()
        .map(|(k, t)| (k.clone(), table(t, &elem_label)))
        .collect();
    json!({
        "algebra": algebra.map(|a| Value::String(a.to_string())).unwrap_or_else(|| algebra_to_value(s.chain())),
        "domain": s.domain(),
        "predicates": predicates,
        "functions": functions,
    })
}

pub fn save_structure(s: &Structure, algebra: Option<&str>, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(&structure_to_value(s, algebra)).expect("plain data");
    std::fs::write(path, text + "\n").map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// A parsed theory file.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Theory {
    #[serde(skip)]
    pub signature: Signature,
    pub formulas: Vec<Formula>,
}

fn declaration(line: &str) -> Option<(&str, &str)> {
    for kw in ["pred", "func"] {
        if let Some(rest) = line.strip_prefix(kw) {
            if rest.starts_with(char::is_whitespace) {
                return Some((kw, rest.trim()));
            }
        }
    }
    None
}

/// Parses a theory.
///
/// Symbols come from the declarations, then `sig`; with neither they are
/// inferred from the formulas. When `chain` is given its inner elements
/// are available as truth constants.
pub fn parse_theory(text: &str, sig: Option<&Signature>, chain: Option<Arc<FiniteChain>>) -> Result<Theory> {
    let mut declared = sig.map(Signature::base).unwrap_or_default();
    let mut any_decl = sig.is_some();
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some((kw, decl)) = declaration(line) {
            let (name, arity) = decl
                .split_once('/')
                .and_then(|(n, a)| Some((n.trim(), a.trim().parse::<usize>().ok()?)))
                .ok_or_else(|| Error::Format(format!("line {}: expected `{kw} NAME/ARITY`", i + 1)))?;
            let res = if kw == "pred" {
                declared.add_predicate(name, arity)
            } else {
                declared.add_function(name, arity)
            };
            res.map_err(|e| Error::Format(format!("line {}: {e}", i + 1)))?;
            any_decl = true;
            continue;
        }
        lines.push((i + 1, line));
    }
    if !any_decl {
        for &(no, line) in &lines {
            let f = parse_formula_untyped(line).map_err(|e| Error::Format(format!("line {no}: {e}")))?;
            let inferred = f
                .elaborate()
                .infer_signature()
                .map_err(|e| Error::Format(format!("line {no}: {e}")))?;
            for (p, a) in inferred.base_predicates() {
                match declared.predicate(p) {
                    Some(s) if s.arity != a => {
                        return Err(Error::Format(format!(
                            "line {no}: `{p}` used with {a} argument(s) and with {}",
                            s.arity
                        )))
                    }
                    Some(_) => {}
                    None => declared.add_predicate(p, a)?,
                }
            }
            for (g, s) in inferred.functions() {
                match declared.function(g) {
                    Some(t) if t.arity != s.arity => {
                        return Err(Error::Format(format!(
                            "line {no}: `{g}` used with {} argument(s) and with {}",
                            s.arity, t.arity
                        )))
                    }
                    Some(_) => {}
                    None => declared.add_function(g, s.arity)?,
                }
            }
        }
    }
    let full = match chain {
        Some(c) => declared.expand_with_truth_constants(c)?,
        None => declared.clone(),
    };
    let formulas = lines
        .iter()
        .map(|&(no, line)| parse_formula(line, &full).map_err(|e| Error::Format(format!("line {no}: {e}"))))
        .collect::<Result<_>>()?;
    Ok(Theory {
        signature: declared,
        formulas,
    })
}

pub fn load_theory(path: &Path, sig: Option<&Signature>, chain: Option<Arc<FiniteChain>>) -> Result<Theory> {
    parse_theory(&read(path)?, sig, chain).map_err(|e| locate(path, e))
}

/// The theory as text, with declarations.
pub fn theory_to_text(t: &Theory) -> String {
    let mut out = String::new();
    for (p, a) in t.signature.base_predicates() {
        out.push_str(&format!("pred {p}/{a}\n"));
    }
    for (f, s) in t.signature.functions() {
        out.push_str(&format!("func {f}/{}\n", s.arity));
    }
    for f in &t.formulas {
        out.push_str(&f.to_string());
        out.push('\n');
    }
    out
}

/// Loads a chain file: a JSON list of structure paths, relative to the file.
pub fn load_chain(path: &Path) -> Result<StructureChain> {
    let list: Vec<String> = serde_json::from_str(&read(path)?)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let members = list
        .iter()
        .map(|p| {
            let p = Path::new(p);
            load_structure(&if p.is_relative() { base.join(p) } else { p.to_path_buf() })
        })
        .collect::<Result<Vec<_>>>()?;
    validate_chain_of_structures(members)
}
