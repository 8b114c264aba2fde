//! Strong homomorphisms, embeddings, elementary maps and substructures.

use std::sync::Arc;

use serde::Serialize;

use crate::algebra::{AlgebraMap, FiniteChain, HomViolation, Truth};
use crate::error::{check_budget, Error, Result};
use crate::generate::{Bounds, ClosureEngine, EngineConfig, Probe};
use crate::semantics::{Structure, Table};
use crate::syntax::Formula;

/// What a [`StructureMap`] claims to be. Claims are never trusted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    Strong,
    Embedding,
    /// Elementary for generated formulas up to this depth.
    Elementary(usize),
}

/// A pair `(f, g)` of an algebra map and a domain map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructureMap {
    pub f: AlgebraMap,
    pub g: Vec<usize>,
    pub kind: MapKind,
}

impl StructureMap {
    pub fn identity(s: &Structure) -> Self {
        StructureMap {
            f: AlgebraMap::identity(s.chain_arc().clone()),
            g: (0..s.size()).collect(),
            kind: MapKind::Embedding,
        }
    }

    /// The label-preserving inclusion of `sub` into `sup`.
    pub fn inclusion(sub: &Structure, sup: &Structure) -> Result<Self> {
        let f = if sub.chain_arc() == sup.chain_arc() || sub.chain() == sup.chain() {
            AlgebraMap {
                source: sub.chain_arc().clone(),
                target: sup.chain_arc().clone(),
                map: (0..sub.chain().len()).collect(),
            }
        } else {
            AlgebraMap::inclusion(sub.chain_arc().clone(), sup.chain_arc().clone())?
        };
        let g = sub
            .domain()
            .iter()
            .map(|l| {
                sup.index_of(l)
                    .ok_or_else(|| Error::Validation(format!("element `{l}` missing from target")))
            })
            .collect::<Result<_>>()?;
        Ok(StructureMap {
            f,
            g,
            kind: MapKind::Embedding,
        })
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &StructureMap) -> Result<StructureMap> {
        if self.f.target != other.f.source {
            return Err(Error::ChainMismatch("maps do not compose".into()));
        }
        Ok(StructureMap {
            f: AlgebraMap {
                source: self.f.source.clone(),
                target: other.f.target.clone(),
                map: self.f.map.iter().map(|&x| other.f.map[x]).collect(),
            },
            g: self.g.iter().map(|&d| other.g[d]).collect(),
            kind: MapKind::Strong,
        })
    }
}

/// The first condition a map fails, with element labels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "clause", rename_all = "snake_case")]
pub enum MapViolation {
    Algebra(HomViolation),
    Function {
        name: String,
        args: Vec<String>,
    },
    Predicate {
        name: String,
        args: Vec<String>,
        source_value: String,
        target_value: String,
    },
    NotInjective {
        on_domain: bool,
        first: String,
        second: String,
    },
}

fn check_shapes(m: &StructureMap, s: &Structure, t: &Structure) -> Result<()> {
    if *m.f.source != *s.chain() || *m.f.target != *t.chain() {
        return Err(Error::ChainMismatch(
            "algebra map does not go between the structures' chains".into(),
        ));
    }
    if m.g.len() != s.size() {
        return Err(Error::Validation(format!(
            "domain map has {} entries for a domain of size {}",
            m.g.len(),
            s.size()
        )));
    }
    if let Some(&bad) = m.g.iter().find(|&&d| d >= t.size()) {
        return Err(Error::Validation(format!("domain map value {bad} out of range")));
    }
    for (name, table) in s.predicates() {
        match t.predicates().get(name) {
            Some(tt) if tt.arity == table.arity => {}
            Some(tt) => {
                return Err(Error::ArityMismatch {
                    name: name.clone(),
                    expected: table.arity,
                    found: tt.arity,
                })
            }
            None => return Err(Error::UnknownSymbol(name.clone())),
        }
    }
    for (name, table) in s.functions() {
        match t.functions().get(name) {
            Some(tt) if tt.arity == table.arity => {}
            Some(tt) => {
                return Err(Error::ArityMismatch {
                    name: name.clone(),
                    expected: table.arity,
                    found: tt.arity,
                })
            }
            None => return Err(Error::UnknownSymbol(name.clone())),
        }
    }
    Ok(())
}

fn labels(s: &Structure, args: &[usize]) -> Vec<String> {
    args.iter().map(|&a| s.label(a).to_string()).collect()
}

/// Checks `f` is an algebra homomorphism, `g` commutes with every function
/// and `f(P_S(d)) = P_T(g(d))` for every predicate and tuple.
pub fn is_strong_homomorphism(
    m: &StructureMap,
    s: &Structure,
    t: &Structure,
) -> Result<Option<MapViolation>> {
    check_shapes(m, s, t)?;
    if let Some(v) = m.f.is_algebra_homomorphism()? {
        return Ok(Some(MapViolation::Algebra(v)));
    }
    let (n, nt) = (s.size(), t.size());
    let all: Vec<usize> = (0..n).collect();
    for (name, table) in s.functions() {
        let tt = &t.functions()[name];
        for args in crate::algebra::tuples(&all, table.arity) {
            let image: Vec<usize> = args.iter().map(|&a| m.g[a]).collect();
            if m.g[table.get(n, &args)] != tt.get(nt, &image) {
                return Ok(Some(MapViolation::Function {
                    name: name.clone(),
                    args: labels(s, &args),
                }));
            }
        }
    }
    for (name, table) in s.predicates() {
        let tt = &t.predicates()[name];
        for args in crate::algebra::tuples(&all, table.arity) {
            let image: Vec<usize> = args.iter().map(|&a| m.g[a]).collect();
            let (sv, tv) = (table.get(n, &args), tt.get(nt, &image));
            if m.f.apply(sv) != tv {
                return Ok(Some(MapViolation::Predicate {
                    name: name.clone(),
                    args: labels(s, &args),
                    source_value: s.chain().label(sv).to_string(),
                    target_value: t.chain().label(tv).to_string(),
                }));
            }
        }
    }
    Ok(None)
}

/// A strong homomorphism with `f` and `g` injective.
pub fn is_embedding(m: &StructureMap, s: &Structure, t: &Structure) -> Result<Option<MapViolation>> {
    if let Some(v) = is_strong_homomorphism(m, s, t)? {
        return Ok(Some(v));
    }
    for (i, &a) in m.f.map.iter().enumerate() {
        if let Some(j) = m.f.map[..i].iter().position(|&b| b == a) {
            return Ok(Some(MapViolation::NotInjective {
                on_domain: false,
                first: s.chain().label(j).to_string(),
                second: s.chain().label(i).to_string(),
            }));
        }
    }
    for (i, &a) in m.g.iter().enumerate() {
        if let Some(j) = m.g[..i].iter().position(|&b| b == a) {
            return Ok(Some(MapViolation::NotInjective {
                on_domain: true,
                first: s.label(j).to_string(),
                second: s.label(i).to_string(),
            }));
        }
    }
    Ok(None)
}

/// A generated formula and a tuple on which a map fails to transport the value.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ElementaryViolation {
    pub formula: Formula,
    /// Source elements for `x1, x2, ...`, only those free in the formula.
    pub tuple: Vec<(String, String)>,
    pub source_value: String,
    pub target_value: String,
}

/// Checks `f(‖φ(d)‖_S) = ‖φ(g(d))‖_T` for every generated formula within
/// `bounds` and every tuple from `S`.
///
/// The map must already be a strong homomorphism.
pub fn is_elementary_up_to_depth(
    m: &StructureMap,
    s: &Structure,
    t: &Structure,
    bounds: &Bounds,
) -> Result<Option<ElementaryViolation>> {
    preserves_values(m, s, t, bounds, true)
}

/// As [`is_elementary_up_to_depth`], optionally restricted to
/// quantifier-free formulas.
pub fn preserves_values(
    m: &StructureMap,
    s: &Structure,
    t: &Structure,
    bounds: &Bounds,
    quantifiers: bool,
) -> Result<Option<ElementaryViolation>> {
    if let Some(v) = is_strong_homomorphism(m, s, t)? {
        return Err(Error::Precondition(format!(
            "not a strong homomorphism: {v:?}"
        )));
    }
    let sig = s.signature();
    let probes = vec![Probe::new(s), Probe::new(t)];
    let cfg = EngineConfig::from_bounds(bounds, quantifiers, false);
    let mut engine = ClosureEngine::new(probes, &sig, &[], cfg)?;
    let vars = bounds.vars;
    let (n, nt) = (s.size(), t.size());
    // image index of every source assignment
    let count = n.pow(vars as u32);
    let image: Vec<usize> = (0..count)
        .map(|mut idx| {
            let mut digits = vec![0; vars];
            for d in digits.iter_mut().rev() {
                *d = idx % n;
                idx /= n;
            }
            digits.iter().fold(0, |acc, &d| acc * nt + m.g[d])
        })
        .collect();
    let mut witness = None;
    let hit = engine.run(|e, c| {
        let (ts, tt) = (e.table(c, 0), e.table(c, 1));
        for (idx, &img) in image.iter().enumerate() {
            if m.f.apply(ts[idx] as Truth) != tt[img] as usize {
                witness = Some((idx, ts[idx], tt[img]));
                return true;
            }
        }
        false
    })?;
    Ok(hit.map(|c| {
        let (mut idx, sv, tv) = witness.expect("witness recorded");
        let mut digits = vec![0; vars];
        for d in digits.iter_mut().rev() {
            *d = idx % n;
            idx /= n;
        }
        let mask = engine.mask(c);
        ElementaryViolation {
            formula: engine.formula(c),
            tuple: (0..vars)
                .filter(|v| mask & (1 << v) != 0)
                .map(|v| (crate::generate::var_name(v), s.label(digits[v]).to_string()))
                .collect(),
            source_value: s.chain().label(sv as usize).to_string(),
            target_value: t.chain().label(tv as usize).to_string(),
        }
    }))
}

/// The first clause of the substructure definition that fails.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "clause", rename_all = "snake_case")]
pub enum SubstructureViolation {
    /// The two structures interpret different symbols.
    Signature { symbol: String },
    /// The chain of the smaller structure is not a subalgebra.
    Subalgebra { detail: String },
    /// A domain element missing from the larger structure.
    Domain { element: String },
    Function { name: String, args: Vec<String> },
    Predicate { name: String, args: Vec<String> },
}

/// Checks that `s` is a substructure of `t`, matching elements by label.
pub fn is_substructure(s: &Structure, t: &Structure) -> Result<Option<SubstructureViolation>> {
    let (ss, ts) = (s.signature(), t.signature());
    if ss != ts {
        let symbol = s
            .predicates()
            .keys()
            .chain(s.functions().keys())
            .find(|k| !t.predicates().contains_key(*k) && !t.functions().contains_key(*k))
            .or_else(|| {
                t.predicates()
                    .keys()
                    .chain(t.functions().keys())
                    .find(|k| !s.predicates().contains_key(*k) && !s.functions().contains_key(*k))
            })
            .cloned()
            .unwrap_or_default();
        return Ok(Some(SubstructureViolation::Signature { symbol }));
    }
    // (1) subalgebra
    let fmap: Vec<usize> = if s.chain() == t.chain() {
        (0..s.chain().len()).collect()
    } else {
        match AlgebraMap::inclusion(s.chain_arc().clone(), t.chain_arc().clone()) {
            Ok(m) => {
                if let Some(v) = m.is_algebra_homomorphism()? {
                    return Ok(Some(SubstructureViolation::Subalgebra {
                        detail: format!("inclusion does not preserve `{}` at {:?}", v.operation, v.args),
                    }));
                }
                m.map
            }
            Err(e) => {
                return Ok(Some(SubstructureViolation::Subalgebra {
                    detail: e.to_string(),
                }))
            }
        }
    };
    // (2) domain inclusion
    let mut g = Vec::with_capacity(s.size());
    for l in s.domain() {
        match t.index_of(l) {
            Some(i) => g.push(i),
            None => {
                return Ok(Some(SubstructureViolation::Domain { element: l.clone() }));
            }
        }
    }
    let (n, nt) = (s.size(), t.size());
    let all: Vec<usize> = (0..n).collect();
    // (3) functions
    for (name, table) in s.functions() {
        let tt = &t.functions()[name];
        for args in crate::algebra::tuples(&all, table.arity) {
            let image: Vec<usize> = args.iter().map(|&a| g[a]).collect();
            if g[table.get(n, &args)] != tt.get(nt, &image) {
                return Ok(Some(SubstructureViolation::Function {
                    name: name.clone(),
                    args: labels(s, &args),
                }));
            }
        }
    }
    // (4) predicates
    for (name, table) in s.predicates() {
        let tt = &t.predicates()[name];
        for args in crate::algebra::tuples(&all, table.arity) {
            let image: Vec<usize> = args.iter().map(|&a| g[a]).collect();
            if fmap[table.get(n, &args)] != tt.get(nt, &image) {
                return Ok(Some(SubstructureViolation::Predicate {
                    name: name.clone(),
                    args: labels(s, &args),
                }));
            }
        }
    }
    Ok(None)
}

/// Whether `mask` (bit `i` = element `i`) contains every constant and is
/// closed under every function of `t`.
fn closed_subset(t: &Structure, mask: u64) -> bool {
    let n = t.size();
    let members: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
    t.functions().values().all(|table| {
        crate::algebra::tuples(&members, table.arity).all(|args| {
            let v = table.get(n, &args);
            mask & (1 << v) != 0
        })
    })
}

/// Closed nonempty subsets of the domain of `t`, by increasing bitmask.
pub fn closed_subsets(t: &Structure) -> Result<Vec<Vec<usize>>> {
    let n = t.size();
    check_budget(1u128 << n.min(127), 1 << 24)?;
    Ok((1u64..(1 << n))
        .filter(|&m| closed_subset(t, m))
        .map(|m| (0..n).filter(|i| m & (1 << i) != 0).collect())
        .collect())
}

/// Every substructure of `t` over the same chain, by increasing bitmask of
/// the domain subset (bit `i` is the `i`-th element).
///
/// With `with_subalgebras`, each subset is followed by its reducts to every
/// proper subalgebra of the chain that still contains all predicate values.
pub fn enumerate_substructures(t: &Structure, with_subalgebras: bool) -> Result<Vec<Structure>> {
    let subalgebras = if with_subalgebras {
        t.chain().subalgebras()
    } else {
        Vec::new()
    };
    let mut out = Vec::new();
    for subset in closed_subsets(t)? {
        let s = t.restrict(&subset)?;
        let mut reducts = Vec::new();
        for sub in &subalgebras {
            if sub.len() == t.chain().len() {
                continue;
            }
            let used = s
                .predicates()
                .values()
                .flat_map(|tb| tb.values.iter())
                .all(|v| sub.contains(v));
            if used {
                reducts.push(reduct_to_subalgebra(&s, sub)?);
            }
        }
        out.push(s);
        out.extend(reducts);
    }
    Ok(out)
}

fn reduct_to_subalgebra(s: &Structure, sub: &std::collections::BTreeSet<usize>) -> Result<Structure> {
    let chain = Arc::new(s.chain().subalgebra(sub)?);
    let elems: Vec<usize> = sub.iter().copied().collect();
    let pos = |v: usize| elems.binary_search(&v).expect("value in subalgebra");
    let mut out = Structure::new(chain, s.domain().to_vec())?;
    for (name, t) in s.predicates() {
        out.set_predicate(name, Table::new(t.arity, t.values.iter().map(|&v| pos(v)).collect()))?;
    }
    for (name, t) in s.functions() {
        out.set_function(name, t.clone())?;
    }
    Ok(out)
}

/// Injective algebra homomorphisms between two chains, lexicographically.
fn algebra_maps(source: &Arc<FiniteChain>, target: &Arc<FiniteChain>, injective: bool) -> Result<Vec<AlgebraMap>> {
    let (k, kt) = (source.len(), target.len());
    check_budget((kt as u128).saturating_pow(k as u32), 1 << 24)?;
    let all: Vec<usize> = (0..kt).collect();
    let mut out = Vec::new();
    for map in crate::algebra::tuples(&all, k) {
        if injective && map.windows(2).any(|w| w[0] >= w[1]) {
            // homomorphisms are monotone, so injective ones are increasing
            continue;
        }
        let m = AlgebraMap {
            source: source.clone(),
            target: target.clone(),
            map,
        };
        if m.is_algebra_homomorphism()?.is_none() {
            out.push(m);
        }
    }
    Ok(out)
}

struct Search<'a> {
    s: &'a Structure,
    t: &'a Structure,
    f: &'a [usize],
    injective: bool,
    fixed: &'a [Option<usize>],
    preds: Vec<(&'a Table, &'a Table)>,
    funcs: Vec<(&'a Table, &'a Table)>,
    g: Vec<usize>,
    used: Vec<bool>,
}

impl Search<'_> {
    /// Checks every constraint whose arguments all lie in `0..=i` and involve `i`.
    fn consistent(&self, i: usize) -> bool {
        let (n, nt) = (self.s.size(), self.t.size());
        let upto: Vec<usize> = (0..=i).collect();
        for (ps, pt) in &self.preds {
            for args in crate::algebra::tuples(&upto, ps.arity) {
                if !args.contains(&i) {
                    continue;
                }
                let image: Vec<usize> = args.iter().map(|&a| self.g[a]).collect();
                if self.f[ps.get(n, &args)] != pt.get(nt, &image) {
                    return false;
                }
            }
        }
        let all: Vec<usize> = (0..n).collect();
        for (fs, ft) in &self.funcs {
            for args in crate::algebra::tuples(&all, fs.arity) {
                let v = fs.get(n, &args);
                // checkable once every element involved is assigned, new only at i
                if args.iter().copied().fold(v, usize::max) != i {
                    continue;
                }
                let image: Vec<usize> = args.iter().map(|&a| self.g[a]).collect();
                if self.g[v] != ft.get(nt, &image) {
                    return false;
                }
            }
        }
        true
    }

    fn go(&mut self, i: usize, accept: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        if i == self.s.size() {
            return accept(&self.g);
        }
        let range = match self.fixed.get(i).copied().flatten() {
            Some(d) => d..d + 1,
            None => 0..self.t.size(),
        };
        for d in range {
            if self.injective && self.used[d] {
                continue;
            }
            self.g[i] = d;
            self.used[d] = true;
            if self.consistent(i) && self.go(i + 1, accept) {
                return true;
            }
            self.used[d] = false;
        }
        false
    }
}

/// Options for [`search_maps`].
#[derive(Clone, Copy, Debug)]
pub struct SearchOptions<'a> {
    pub fix_f_to_identity: bool,
    pub injective: bool,
    /// Prescribed images for some source elements, by index.
    pub fixed: &'a [Option<usize>],
    pub budget: u64,
}

/// Walks strong homomorphisms (or embeddings) from `s` to `t` in
/// lexicographic order, `f` first, and returns the first one `accept`
/// takes.
pub fn search_maps(
    s: &Structure,
    t: &Structure,
    opts: SearchOptions<'_>,
    mut accept: impl FnMut(&StructureMap) -> bool,
) -> Result<Option<StructureMap>> {
    let mut preds = Vec::new();
    for (name, table) in s.predicates() {
        let tt = t
            .predicates()
            .get(name)
            .ok_or_else(|| Error::UnknownSymbol(name.clone()))?;
        preds.push((table, tt));
    }
    let mut funcs = Vec::new();
    for (name, table) in s.functions() {
        let tt = t
            .functions()
            .get(name)
            .ok_or_else(|| Error::UnknownSymbol(name.clone()))?;
        funcs.push((table, tt));
    }
    if opts.fixed.iter().flatten().any(|&d| d >= t.size()) {
        return Err(Error::Validation("prescribed image out of range".into()));
    }
    let fs = if opts.fix_f_to_identity {
        if s.chain() != t.chain() {
            return Err(Error::ChainMismatch(
                "an identity algebra map needs a common chain".into(),
            ));
        }
        vec![AlgebraMap {
            source: s.chain_arc().clone(),
            target: t.chain_arc().clone(),
            map: (0..s.chain().len()).collect(),
        }]
    } else {
        algebra_maps(s.chain_arc(), t.chain_arc(), opts.injective)?
    };
    let needed = (t.size() as u128)
        .saturating_pow(s.size() as u32)
        .saturating_mul(fs.len().max(1) as u128);
    check_budget(needed, opts.budget)?;
    let kind = if opts.injective {
        MapKind::Embedding
    } else {
        MapKind::Strong
    };
    for f in fs {
        let mut st = Search {
            s,
            t,
            f: &f.map,
            injective: opts.injective,
            fixed: opts.fixed,
            preds: preds.clone(),
            funcs: funcs.clone(),
            g: vec![0; s.size()],
            used: vec![false; t.size()],
        };
        let mut hit = None;
        st.go(0, &mut |g| {
            let m = StructureMap {
                f: f.clone(),
                g: g.to_vec(),
                kind,
            };
            if accept(&m) {
                hit = Some(m);
                true
            } else {
                false
            }
        });
        if hit.is_some() {
            return Ok(hit);
        }
    }
    Ok(None)
}

fn search(
    s: &Structure,
    t: &Structure,
    fix_f_to_identity: bool,
    injective: bool,
    budget: u64,
) -> Result<Option<StructureMap>> {
    let opts = SearchOptions {
        fix_f_to_identity,
        injective,
        fixed: &[],
        budget,
    };
    search_maps(s, t, opts, |_| true)
}

/// The lexicographically first strong embedding of `s` into `t`.
///
/// Candidates are ordered by `f` first (when not fixed), then by
/// `(g(0), g(1), ...)`.
pub fn search_strong_embedding(
    s: &Structure,
    t: &Structure,
    fix_f_to_identity: bool,
    budget: u64,
) -> Result<Option<StructureMap>> {
    search(s, t, fix_f_to_identity, true, budget)
}

/// The lexicographically first strong homomorphism of `s` into `t`.
pub fn search_strong_homomorphism(
    s: &Structure,
    t: &Structure,
    fix_f_to_identity: bool,
    budget: u64,
) -> Result<Option<StructureMap>> {
    search(s, t, fix_f_to_identity, false, budget)
}

/// An embedding whose domain map is onto.
pub fn is_isomorphism(m: &StructureMap, s: &Structure, t: &Structure) -> Result<bool> {
    Ok(is_embedding(m, s, t)?.is_none()
        && s.size() == t.size()
        && s.chain().len() == t.chain().len())
}
