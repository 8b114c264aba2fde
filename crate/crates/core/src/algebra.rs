//! Finite MTL-chains given by operation tables.
//!
//! Elements are indices `0..k` into an ordered label list: index `0` is the
//! bottom, index `k - 1` is the top, and the lattice order is the index order.
//! Meet and join are therefore `min` and `max` and are never stored.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};

/// A truth value: an index into the element list of a [`FiniteChain`].
pub type Truth = usize;

/// An additional operation on a chain, beyond the MTL core.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExtraOp {
    pub arity: usize,
    /// Row-major table with `k^arity` entries.
    #[serde(deserialize_with = "flat_table", serialize_with = "nested_table_ser")]
    pub table: Vec<Truth>,
}

/// Raw chain data as it appears in an algebra file, before validation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainData {
    pub elements: Vec<String>,
    pub star: Vec<Vec<Truth>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub implies: Option<Vec<Vec<Truth>>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra_ops: BTreeMap<String, ExtraOp>,
}

/// A validated finite MTL-chain, possibly expanded with extra operations.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FiniteChain {
    labels: Vec<String>,
    star: Vec<Truth>,
    implies: Vec<Truth>,
    extra_ops: BTreeMap<String, ExtraOp>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Axiom {
    MinimumSize,
    DistinctLabels,
    Commutativity,
    Associativity,
    Monotonicity,
    Identity,
    Residuation,
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Axiom::MinimumSize => "minimum size (k >= 2)",
            Axiom::DistinctLabels => "distinct labels",
            Axiom::Commutativity => "commutativity of &",
            Axiom::Associativity => "associativity of &",
            Axiom::Monotonicity => "monotonicity of &",
            Axiom::Identity => "top is the identity of &",
            Axiom::Residuation => "residuation",
        };
        f.write_str(s)
    }
}

/// A violated axiom together with the first witness found in lexicographic order.
///
/// Witness layouts: commutativity `(x, y)`, associativity `(x, y, z)`,
/// monotonicity `(x, y, z)` with `x <= y` and `x & z > y & z`, identity `(x)`,
/// residuation `(x, y, z)` with `x & z <= y` disagreeing with `z <= x -> y`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub axiom: Axiom,
    pub witness: Vec<Truth>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violation(&self, axiom: Axiom) -> Option<&Violation> {
        self.violations.iter().find(|v| v.axiom == axiom)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{} violated at {:?}", v.axiom, v.witness)?;
        }
        Ok(())
    }
}

fn square(table: &[Vec<Truth>], k: usize, what: &str) -> Result<Vec<Truth>> {
    if table.len() != k || table.iter().any(|row| row.len() != k) {
        return Err(Error::Format(format!("`{what}` must be a {k}x{k} table")));
    }
    let flat: Vec<Truth> = table.iter().flatten().copied().collect();
    if let Some(bad) = flat.iter().find(|&&v| v >= k) {
        return Err(Error::Format(format!(
            "`{what}` contains index {bad} out of range 0..{k}"
        )));
    }
    Ok(flat)
}

fn check_extra_ops(ops: &BTreeMap<String, ExtraOp>, k: usize) -> Result<()> {
    for (name, op) in ops {
        let expected = k
            .checked_pow(op.arity as u32)
            .ok_or_else(|| Error::Format(format!("extra op `{name}` table too large")))?;
        if op.table.len() != expected {
            return Err(Error::Format(format!(
                "extra op `{name}` of arity {} needs {expected} entries, got {}",
                op.arity,
                op.table.len()
            )));
        }
        if let Some(bad) = op.table.iter().find(|&&v| v >= k) {
            return Err(Error::Format(format!(
                "extra op `{name}` contains index {bad} out of range 0..{k}"
            )));
        }
    }
    Ok(())
}

/// Checks the MTL-chain axioms exhaustively.
///
/// Malformed tables are reported as [`Error::Format`]; well-formed tables that
/// break an axiom produce a report listing each violated axiom once.
pub fn validate_chain(candidate: &ChainData) -> Result<ValidationReport> {
    let k = candidate.elements.len();
    let mut report = ValidationReport::default();
    if k < 2 {
        report.violations.push(Violation {
            axiom: Axiom::MinimumSize,
            witness: vec![k],
        });
        return Ok(report);
    }
    let star = square(&candidate.star, k, "star")?;
    let implies = match &candidate.implies {
        Some(t) => square(t, k, "implies")?,
        None => derive_residuum_flat(&star, k)
            .map_err(|w| Error::Validation(format!("cannot derive residuum: {w}")))?,
    };
    check_extra_ops(&candidate.extra_ops, k)?;

    let labels: BTreeSet<&String> = candidate.elements.iter().collect();
    if labels.len() != k {
        let mut seen = BTreeSet::new();
        let dup = candidate
            .elements
            .iter()
            .position(|l| !seen.insert(l))
            .unwrap_or(0);
        report.violations.push(Violation {
            axiom: Axiom::DistinctLabels,
            witness: vec![dup],
        });
    }
    report.violations.extend(axiom_violations(&star, &implies, k));
    Ok(report)
}

fn axiom_violations(star: &[Truth], implies: &[Truth], k: usize) -> Vec<Violation> {
    let s = |x: usize, y: usize| star[x * k + y];
    let i = |x: usize, y: usize| implies[x * k + y];
    let top = k - 1;
    let mut out = Vec::new();
    let mut first = |axiom: Axiom, witness: Option<Vec<Truth>>| {
        if let Some(witness) = witness {
            out.push(Violation { axiom, witness });
        }
    };
    let pairs = || (0..k).flat_map(move |x| (0..k).map(move |y| (x, y)));
    let triples = || pairs().flat_map(move |(x, y)| (0..k).map(move |z| (x, y, z)));

    first(
        Axiom::Commutativity,
        pairs().find(|&(x, y)| s(x, y) != s(y, x)).map(|(x, y)| vec![x, y]),
    );
    first(
        Axiom::Associativity,
        triples()
            .find(|&(x, y, z)| s(s(x, y), z) != s(x, s(y, z)))
            .map(|(x, y, z)| vec![x, y, z]),
    );
    first(
        Axiom::Monotonicity,
        triples()
            .find(|&(x, y, z)| x <= y && (s(x, z) > s(y, z) || s(z, x) > s(z, y)))
            .map(|(x, y, z)| vec![x, y, z]),
    );
    first(
        Axiom::Identity,
        (0..k)
            .find(|&x| s(x, top) != x || s(top, x) != x)
            .map(|x| vec![x]),
    );
    first(
        Axiom::Residuation,
        triples()
            .find(|&(x, y, z)| (s(x, z) <= y) != (z <= i(x, y)))
            .map(|(x, y, z)| vec![x, y, z]),
    );
    out
}

/// Computes `x -> y = max { z : x & z <= y }` for every pair.
///
/// Requires `star` to be commutative, monotone and to have the top element as
/// identity; a violated precondition is reported with its witness.
pub fn derive_residuum(star: &[Vec<Truth>]) -> Result<Vec<Vec<Truth>>> {
    let k = star.len();
    if k < 2 {
        return Err(Error::Format("a chain needs at least two elements".into()));
    }
    let flat = square(star, k, "star")?;
    let implies = derive_residuum_flat(&flat, k)
        .map_err(|w| Error::Precondition(format!("derive_residuum: {w}")))?;
    Ok(implies.chunks(k).map(|r| r.to_vec()).collect())
}

fn derive_residuum_flat(star: &[Truth], k: usize) -> std::result::Result<Vec<Truth>, String> {
    let s = |x: usize, y: usize| star[x * k + y];
    let top = k - 1;
    for x in 0..k {
        if s(x, top) != x {
            return Err(format!("identity fails at x={x}"));
        }
        for y in 0..k {
            if s(x, y) != s(y, x) {
                return Err(format!("commutativity fails at ({x}, {y})"));
            }
            if y + 1 < k && s(x, y) > s(x, y + 1) {
                return Err(format!("monotonicity fails at ({x}, {y}, {})", y + 1));
            }
        }
    }
    let mut out = vec![0; k * k];
    for x in 0..k {
        for y in 0..k {
            // z = 0 always qualifies: x & 0 <= top & 0 = 0.
            out[x * k + y] = (0..k).rev().find(|&z| s(x, z) <= y).unwrap_or(0);
        }
    }
    Ok(out)
}

impl FiniteChain {
    /// Builds and validates a chain; any violated axiom is an error.
    pub fn from_data(data: ChainData) -> Result<Self> {
        let report = validate_chain(&data)?;
        if !report.is_ok() {
            return Err(Error::Validation(report.to_string()));
        }
        let k = data.elements.len();
        let star = square(&data.star, k, "star")?;
        let implies = match &data.implies {
            Some(t) => square(t, k, "implies")?,
            None => derive_residuum_flat(&star, k).map_err(Error::Validation)?,
        };
        Ok(FiniteChain {
            labels: data.elements,
            star,
            implies,
            extra_ops: data.extra_ops,
        })
    }

    /// Builds a chain from a label list and a t-norm given as a function of indices.
    pub fn from_star_fn(labels: &[&str], star: impl Fn(usize, usize) -> usize) -> Result<Self> {
        let k = labels.len();
        let star = (0..k).map(|x| (0..k).map(|y| star(x, y)).collect()).collect();
        FiniteChain::from_data(ChainData {
            elements: labels.iter().map(|s| s.to_string()).collect(),
            star,
            implies: None,
            extra_ops: BTreeMap::new(),
        })
    }

    /// The Gödel chain (`&` is `min`) on the given labels.
    pub fn godel(labels: &[&str]) -> Self {
        Self::from_star_fn(labels, |x, y| x.min(y)).expect("min is an MTL t-norm")
    }

    /// The Łukasiewicz chain with `n` elements `0, 1/(n-1), ..., 1`.
    pub fn lukasiewicz(n: usize) -> Self {
        assert!(n >= 2, "a chain needs at least two elements");
        let m = n - 1;
        let labels: Vec<String> = (0..n)
            .map(|i| match i {
                0 => "0".to_string(),
                i if i == m => "1".to_string(),
                i => {
                    let g = gcd(i, m);
                    format!("{}/{}", i / g, m / g)
                }
            })
            .collect();
        let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
        Self::from_star_fn(&refs, |x, y| (x + y).saturating_sub(m)).expect("Łukasiewicz t-norm")
    }

    /// The two-element Boolean chain `{0, 1}`.
    pub fn boolean() -> Self {
        Self::godel(&["0", "1"])
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, x: Truth) -> &str {
        &self.labels[x]
    }

    pub fn index_of(&self, label: &str) -> Option<Truth> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn bottom(&self) -> Truth {
        0
    }

    pub fn top(&self) -> Truth {
        self.labels.len() - 1
    }

    /// The immediate predecessor of the top element.
    pub fn coatom(&self) -> Truth {
        self.labels.len() - 2
    }

    /// The element immediately above the bottom.
    pub fn atom(&self) -> Truth {
        1
    }

    #[inline]
    pub fn star(&self, x: Truth, y: Truth) -> Truth {
        self.star[x * self.labels.len() + y]
    }

    #[inline]
    pub fn implies(&self, x: Truth, y: Truth) -> Truth {
        self.implies[x * self.labels.len() + y]
    }

    #[inline]
    pub fn meet(&self, x: Truth, y: Truth) -> Truth {
        x.min(y)
    }

    #[inline]
    pub fn join(&self, x: Truth, y: Truth) -> Truth {
        x.max(y)
    }

    /// `(x -> y) ∧ (y -> x)`.
    #[inline]
    pub fn iff(&self, x: Truth, y: Truth) -> Truth {
        self.implies(x, y).min(self.implies(y, x))
    }

    /// `x -> 0`.
    #[inline]
    pub fn neg(&self, x: Truth) -> Truth {
        self.implies(x, 0)
    }

    pub fn extra_ops(&self) -> &BTreeMap<String, ExtraOp> {
        &self.extra_ops
    }

    pub fn apply_extra(&self, name: &str, args: &[Truth]) -> Option<Truth> {
        let op = self.extra_ops.get(name)?;
        if op.arity != args.len() {
            return None;
        }
        let k = self.len();
        let idx = args.iter().fold(0, |acc, &a| acc * k + a);
        op.table.get(idx).copied()
    }

    pub fn star_table(&self) -> Vec<Vec<Truth>> {
        self.star.chunks(self.len()).map(|r| r.to_vec()).collect()
    }

    pub fn implies_table(&self) -> Vec<Vec<Truth>> {
        self.implies.chunks(self.len()).map(|r| r.to_vec()).collect()
    }

    pub fn to_data(&self) -> ChainData {
        ChainData {
            elements: self.labels.clone(),
            star: self.star_table(),
            implies: Some(self.implies_table()),
            extra_ops: self.extra_ops.clone(),
        }
    }

    /// Least subset containing `seed`, bottom and top, closed under every operation.
    pub fn generated_subalgebra(&self, seed: &[Truth]) -> Result<BTreeSet<Truth>> {
        let k = self.len();
        if let Some(&bad) = seed.iter().find(|&&x| x >= k) {
            return Err(Error::Format(format!("element index {bad} out of range 0..{k}")));
        }
        let mut set: BTreeSet<Truth> = seed.iter().copied().collect();
        set.insert(0);
        set.insert(k - 1);
        loop {
            let elems: Vec<Truth> = set.iter().copied().collect();
            let mut grown = false;
            for &x in &elems {
                for &y in &elems {
                    grown |= set.insert(self.star(x, y));
                    grown |= set.insert(self.implies(x, y));
                }
            }
            for op in self.extra_ops.values() {
                for args in tuples(&elems, op.arity) {
                    let idx = args.iter().fold(0, |acc, &a| acc * k + a);
                    grown |= set.insert(op.table[idx]);
                }
            }
            if !grown {
                return Ok(set);
            }
        }
    }

    pub fn is_closed(&self, subset: &BTreeSet<Truth>) -> bool {
        let elems: Vec<Truth> = subset.iter().copied().collect();
        self.generated_subalgebra(&elems)
            .map(|g| &g == subset)
            .unwrap_or(false)
    }

    /// The subalgebra on a closed subset, with labels and operations restricted.
    pub fn subalgebra(&self, subset: &BTreeSet<Truth>) -> Result<FiniteChain> {
        if !self.is_closed(subset) {
            return Err(Error::Validation(format!(
                "{subset:?} is not closed under the chain operations"
            )));
        }
        let elems: Vec<Truth> = subset.iter().copied().collect();
        let pos = |x: Truth| elems.binary_search(&x).expect("closed subset");
        let m = elems.len();
        let mut star = Vec::with_capacity(m * m);
        let mut implies = Vec::with_capacity(m * m);
        for &x in &elems {
            for &y in &elems {
                star.push(pos(self.star(x, y)));
                implies.push(pos(self.implies(x, y)));
            }
        }
        let k = self.len();
        let extra_ops = self
            .extra_ops
            .iter()
            .map(|(name, op)| {
                let table = tuples(&elems, op.arity)
                    .map(|args| pos(op.table[args.iter().fold(0, |acc, &a| acc * k + a)]))
                    .collect();
                (name.clone(), ExtraOp { arity: op.arity, table })
            })
            .collect();
        Ok(FiniteChain {
            labels: elems.iter().map(|&x| self.labels[x].clone()).collect(),
            star,
            implies,
            extra_ops,
        })
    }

    /// Every closed subset, in increasing bitmask order of the inner elements.
    pub fn subalgebras(&self) -> Vec<BTreeSet<Truth>> {
        let k = self.len();
        let inner = k - 2;
        assert!(inner < 32, "chain too large to enumerate subalgebras");
        (0u32..(1 << inner))
            .filter_map(|mask| {
                let mut set: BTreeSet<Truth> = (0..inner)
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| i + 1)
                    .collect();
                set.insert(0);
                set.insert(k - 1);
                self.is_closed(&set).then_some(set)
            })
            .collect()
    }
}

impl fmt::Display for FiniteChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "chain[{}]", self.labels.join(" < "))
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// All `n`-tuples over `elems` in lexicographic order.
pub(crate) fn tuples(elems: &[usize], n: usize) -> impl Iterator<Item = Vec<usize>> + '_ {
    let total = elems.len().pow(n as u32);
    (0..total).map(move |mut code| {
        let mut t = vec![0; n];
        for slot in t.iter_mut().rev() {
            *slot = elems[code % elems.len()];
            code /= elems.len();
        }
        t
    })
}

/// Every MTL-chain on `k` elements, labelled `0, a1, ..., a(k-2), 1`.
///
/// The t-norm is determined by its values on pairs of inner elements, each
/// bounded by the smaller argument; all candidates are filtered through
/// [`validate_chain`].
pub fn all_mtl_chains(k: usize) -> Vec<FiniteChain> {
    assert!(k >= 2);
    let labels: Vec<String> = (0..k)
        .map(|i| match i {
            0 => "0".into(),
            i if i == k - 1 => "1".into(),
            i => format!("a{i}"),
        })
        .collect();
    let inner: Vec<(usize, usize)> = (1..k - 1)
        .flat_map(|x| (x..k - 1).map(move |y| (x, y)))
        .collect();
    let mut out = Vec::new();
    let mut choice = vec![0usize; inner.len()];
    loop {
        let mut star = vec![vec![0; k]; k];
        for x in 0..k {
            star[x][k - 1] = x;
            star[k - 1][x] = x;
        }
        for (&(x, y), &v) in inner.iter().zip(&choice) {
            star[x][y] = v;
            star[y][x] = v;
        }
        let data = ChainData {
            elements: labels.clone(),
            star,
            implies: None,
            extra_ops: BTreeMap::new(),
        };
        if let Ok(chain) = FiniteChain::from_data(data) {
            out.push(chain);
        }
        // odometer: digit i ranges over 0..=min(x, y)
        let mut i = inner.len();
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            let (x, y) = inner[i];
            if choice[i] < x.min(y) {
                choice[i] += 1;
                break;
            }
            choice[i] = 0;
        }
    }
}

/// An algebra map between two chains.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlgebraMap {
    pub source: Arc<FiniteChain>,
    pub target: Arc<FiniteChain>,
    pub map: Vec<Truth>,
}

/// The first operation instance an [`AlgebraMap`] fails to preserve.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HomViolation {
    pub operation: String,
    pub args: Vec<Truth>,
}

impl AlgebraMap {
    pub fn identity(chain: Arc<FiniteChain>) -> Self {
        let map = (0..chain.len()).collect();
        AlgebraMap {
            source: chain.clone(),
            target: chain,
            map,
        }
    }

    /// The label-preserving inclusion of a subalgebra.
    pub fn inclusion(source: Arc<FiniteChain>, target: Arc<FiniteChain>) -> Result<Self> {
        let map = source
            .labels()
            .iter()
            .map(|l| {
                target
                    .index_of(l)
                    .ok_or_else(|| Error::ChainMismatch(format!("label `{l}` missing from target")))
            })
            .collect::<Result<_>>()?;
        Ok(AlgebraMap { source, target, map })
    }

    #[inline]
    pub fn apply(&self, x: Truth) -> Truth {
        self.map[x]
    }

    pub fn is_identity(&self) -> bool {
        self.source == self.target && self.map.iter().enumerate().all(|(i, &v)| i == v)
    }

    pub fn is_injective(&self) -> bool {
        let set: BTreeSet<_> = self.map.iter().collect();
        set.len() == self.map.len()
    }

    /// Checks preservation of 0, 1, `&`, `->`, the lattice order and every
    /// extra operation; returns the first counterexample.
    pub fn is_algebra_homomorphism(&self) -> Result<Option<HomViolation>> {
        let (s, t) = (&*self.source, &*self.target);
        if self.map.len() != s.len() {
            return Err(Error::Format(format!(
                "algebra map has {} entries for a source of size {}",
                self.map.len(),
                s.len()
            )));
        }
        if let Some(&bad) = self.map.iter().find(|&&v| v >= t.len()) {
            return Err(Error::Format(format!("algebra map value {bad} out of range")));
        }
        let f = |x: Truth| self.map[x];
        let viol = |op: &str, args: Vec<Truth>| {
            Ok(Some(HomViolation {
                operation: op.to_string(),
                args,
            }))
        };
        if f(s.bottom()) != t.bottom() {
            return viol("0", vec![]);
        }
        if f(s.top()) != t.top() {
            return viol("1", vec![]);
        }
        let pairs = || (0..s.len()).flat_map(|x| (0..s.len()).map(move |y| (x, y)));
        if let Some((x, y)) = pairs().find(|&(x, y)| f(s.star(x, y)) != t.star(f(x), f(y))) {
            return viol("&", vec![x, y]);
        }
        if let Some((x, y)) = pairs().find(|&(x, y)| f(s.implies(x, y)) != t.implies(f(x), f(y))) {
            return viol("->", vec![x, y]);
        }
        if let Some((x, y)) = pairs().find(|&(x, y)| f(x.min(y)) != f(x).min(f(y))) {
            return viol("/\\", vec![x, y]);
        }
        for (name, op) in s.extra_ops() {
            let Some(top) = t.extra_ops().get(name).filter(|o| o.arity == op.arity) else {
                return viol(name, vec![]);
            };
            let all: Vec<Truth> = (0..s.len()).collect();
            for args in tuples(&all, op.arity) {
                let lhs = f(s.apply_extra(name, &args).expect("arity checked"));
                let mapped: Vec<Truth> = args.iter().map(|&a| f(a)).collect();
                let tk = t.len();
                let rhs = top.table[mapped.iter().fold(0, |acc, &a| acc * tk + a)];
                if lhs != rhs {
                    return viol(name, args);
                }
            }
        }
        Ok(None)
    }
}

fn flat_table<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Truth>, D::Error> {
    let v = serde_json::Value::deserialize(d)?;
    let mut out = Vec::new();
    fn walk(v: &serde_json::Value, out: &mut Vec<Truth>) -> std::result::Result<(), String> {
        match v {
            serde_json::Value::Array(items) => items.iter().try_for_each(|i| walk(i, out)),
            serde_json::Value::Number(n) => n
                .as_u64()
                .map(|x| out.push(x as Truth))
                .ok_or_else(|| format!("table entry {n} is not an index")),
            other => Err(format!("unexpected table entry {other}")),
        }
    }
    walk(&v, &mut out).map_err(serde::de::Error::custom)?;
    Ok(out)
}

fn nested_table_ser<S: serde::Serializer>(
    table: &[Truth],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    // Flat row-major form; readers accept any nesting.
    table.serialize(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn godel4() -> FiniteChain {
        FiniteChain::godel(&["0", "1/2", "3/4", "1"])
    }

    fn data(labels: &[&str], star: Vec<Vec<usize>>, implies: Option<Vec<Vec<usize>>>) -> ChainData {
        ChainData {
            elements: labels.iter().map(|s| s.to_string()).collect(),
            star,
            implies,
            extra_ops: BTreeMap::new(),
        }
    }

    #[test]
    fn godel_and_boolean_validate() {
        let g = godel4();
        assert!(validate_chain(&g.to_data()).unwrap().is_ok());
        assert!(validate_chain(&FiniteChain::boolean().to_data()).unwrap().is_ok());
        assert!(validate_chain(&FiniteChain::lukasiewicz(3).to_data()).unwrap().is_ok());
    }

    #[test]
    fn join_as_star_is_rejected() {
        let godel3 = FiniteChain::godel(&["0", "1/2", "1"]);
        let star = (0..3).map(|x| (0..3).map(|y| x.max(y)).collect()).collect();
        let report = validate_chain(&data(&["0", "1/2", "1"], star, Some(godel3.implies_table()))).unwrap();
        assert!(!report.is_ok());
        assert_eq!(report.violation(Axiom::Identity).unwrap().witness, vec![0]);
        assert_eq!(report.violation(Axiom::Residuation).unwrap().witness, vec![0, 0, 1]);
    }

    #[test]
    fn malformed_tables_are_format_errors() {
        let bad = data(&["0", "1"], vec![vec![0, 0]], None);
        assert!(matches!(validate_chain(&bad), Err(Error::Format(_))));
        let out_of_range = data(&["0", "1"], vec![vec![0, 0], vec![0, 2]], None);
        assert!(matches!(validate_chain(&out_of_range), Err(Error::Format(_))));
    }

    #[test]
    fn one_element_chain_is_rejected() {
        let r = validate_chain(&data(&["0"], vec![vec![0]], None)).unwrap();
        assert_eq!(r.violations[0].axiom, Axiom::MinimumSize);
    }

    #[test]
    fn residuum_examples() {
        let g = godel4();
        // 3/4 -> 1/2 in the Gödel chain
        assert_eq!(g.implies(2, 1), 1);
        let l = FiniteChain::lukasiewicz(3);
        assert_eq!(l.labels(), ["0", "1/2", "1"]);
        assert_eq!(l.implies(1, 0), 1);
        for c in [&g, &l] {
            for x in 0..c.len() {
                for y in x..c.len() {
                    assert_eq!(c.implies(x, y), c.top());
                }
            }
        }
    }

    #[test]
    fn derive_residuum_precondition_witness() {
        let not_comm = vec![vec![0, 0, 0], vec![1, 1, 1], vec![0, 1, 2]];
        let err = derive_residuum(&not_comm).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)), "{err}");
    }

    #[test]
    fn subalgebra_generation() {
        let g = godel4();
        assert_eq!(g.generated_subalgebra(&[2]).unwrap(), BTreeSet::from([0, 2, 3]));
        assert_eq!(g.generated_subalgebra(&[0, 1, 2, 3]).unwrap().len(), 4);
        let b = FiniteChain::boolean();
        assert_eq!(b.generated_subalgebra(&[0]).unwrap(), BTreeSet::from([0, 1]));
        assert!(g.generated_subalgebra(&[7]).is_err());
        // Łukasiewicz 1/2 generates 0 via 1/2 & 1/2.
        let l = FiniteChain::lukasiewicz(3);
        assert_eq!(l.generated_subalgebra(&[1]).unwrap().len(), 3);
    }

    #[test]
    fn restricted_subalgebra_revalidates() {
        let g = godel4();
        for sub in g.subalgebras() {
            let chain = g.subalgebra(&sub).unwrap();
            assert!(validate_chain(&chain.to_data()).unwrap().is_ok());
        }
        assert_eq!(g.subalgebras().len(), 4);
    }

    #[test]
    fn coatom_is_predecessor_of_top() {
        assert_eq!(godel4().coatom(), 2);
        assert_eq!(FiniteChain::boolean().coatom(), 0);
    }

    #[test]
    fn homomorphism_examples() {
        let g = Arc::new(godel4());
        let b = Arc::new(FiniteChain::boolean());
        let l = Arc::new(FiniteChain::lukasiewicz(3));
        assert!(AlgebraMap::identity(g.clone()).is_algebra_homomorphism().unwrap().is_none());
        let collapse = AlgebraMap {
            source: g,
            target: b.clone(),
            map: vec![0, 1, 1, 1],
        };
        assert!(collapse.is_algebra_homomorphism().unwrap().is_none());
        let luk = AlgebraMap {
            source: l,
            target: b,
            map: vec![0, 1, 1],
        };
        let v = luk.is_algebra_homomorphism().unwrap().unwrap();
        assert_eq!(v.operation, "&");
        assert_eq!(v.args, vec![1, 1]);
    }

    #[test]
    fn homomorphism_size_mismatch() {
        let b = Arc::new(FiniteChain::boolean());
        let m = AlgebraMap {
            source: b.clone(),
            target: b,
            map: vec![0],
        };
        assert!(matches!(m.is_algebra_homomorphism(), Err(Error::Format(_))));
    }

    #[test]
    fn mtl_chain_counts() {
        assert_eq!(all_mtl_chains(2).len(), 1);
        // min and Łukasiewicz on three elements
        assert_eq!(all_mtl_chains(3).len(), 2);
        for c in all_mtl_chains(4) {
            assert!(validate_chain(&c.to_data()).unwrap().is_ok());
        }
    }

    #[test]
    fn extra_ops_closure() {
        let mut d = godel4().to_data();
        // an involutive-style negation that maps 1/2 <-> 3/4
        d.extra_ops.insert(
            "n".into(),
            ExtraOp {
                arity: 1,
                table: vec![3, 2, 1, 0],
            },
        );
        let c = FiniteChain::from_data(d).unwrap();
        assert_eq!(c.generated_subalgebra(&[1]).unwrap().len(), 4);
        assert_eq!(c.apply_extra("n", &[1]), Some(2));
    }
}
